//! Randomized invariants across the library.

use std::sync::Arc;

use lrlab::bounds::{iterate_bound, open_grid, BoundCurve, BoundParams, FiniteRangeVariant, NormRoute};
use lrlab::dynamics::{HamiltonianFn, IntegratorSettings, Propagator};
use lrlab::interactions::{lr_velocity, random_even_interaction, random_even_local, ModelSpec, OnsitePattern, PerturbationSpec};
use lrlab::lattice::{certify_growth, f_alpha_norm, NormMode};
use lrlab::linalg::{self, spectral_norm, Eigh};
use lrlab::lppl::{localized_flow_defect, lppl_measure, LpplConfig, ObservableSpec};
use lrlab::spectral_flow::{inverse_liouvillian, LiouvillianPath, WeightSpectrum, Window};
use lrlab::spin::{telescoping_localization, SpinContext};
use lrlab::{build_lattice, FockContext, LatticeGraph, LatticeSpec, Mat64, SiteSet, C};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lattice_spec() -> impl Strategy<Value = LatticeSpec> {
    prop_oneof![
        (1usize..=12).prop_map(|n| LatticeSpec::Path { n }),
        (3usize..=12).prop_map(|n| LatticeSpec::Ring { n }),
        (1usize..=2).prop_map(|k| LatticeSpec::SquarePatch { k }),
        (2usize..=3).prop_map(|n| LatticeSpec::SquareTorus { n }),
    ]
}

fn small_chain() -> impl Strategy<Value = LatticeGraph> {
    (2usize..=5, any::<bool>()).prop_map(|(n, closed)| {
        let spec = if closed && n >= 3 { LatticeSpec::Ring { n } } else { LatticeSpec::Path { n } };
        build_lattice(&spec).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graph_metric_and_fattening(spec in lattice_spec(), seed in any::<u64>()) {
        let g = build_lattice(&spec).unwrap();
        let n = g.len();
        for x in 0..n {
            prop_assert_eq!(g.d(x, x), 0);
            for y in 0..n {
                prop_assert_eq!(g.d(x, y), g.d(y, x));
                if x != y {
                    prop_assert!(g.d(x, y) > 0);
                }
                for z in 0..n {
                    prop_assert!(g.d(x, z) <= g.d(x, y) + g.d(y, z));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SiteSet::new((0..n).filter(|_| rand::Rng::random_bool(&mut rng, 0.3)));
        for (a, b) in [(0usize, 1usize), (1, 1), (2, 1), (1, 3)] {
            let twice = g.fatten(&g.fatten(&x, a), b);
            let once = g.fatten(&x, a + b);
            prop_assert!(once.is_subset(&twice));
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn growth_constants_recheck(spec in lattice_spec()) {
        let g = build_lattice(&spec).unwrap();
        prop_assert_eq!(certify_growth(&g).violations, 0);
    }

    #[test]
    fn exact_decay_norm_below_analytic(spec in lattice_spec(), alpha in 2.6f64..6.0) {
        let g = build_lattice(&spec).unwrap();
        let exact: f64 = f_alpha_norm(&g, alpha, NormMode::Exact).unwrap();
        let bound: f64 = f_alpha_norm(&g, alpha, NormMode::AnalyticBound).unwrap();
        prop_assert!(exact <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn interaction_norm_monotone_and_truncation_exact(g in small_chain(), seed in any::<u64>(), alpha in 1.5f64..4.0, range in 1usize..4) {
        let ctx = FockContext::new(&g, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_even_interaction::<f64, _>(&ctx, alpha, 1.0, &mut rng);
        let (n0, n1, n2) = (phi.norm(&g, alpha, 0), phi.norm(&g, alpha, 1), phi.norm(&g, alpha, 2));
        prop_assert!(n0 <= n1 && n1 <= n2);
        // Dividing by (1+d)^{-α} makes the norm grow with α.
        prop_assert!(phi.norm(&g, alpha + 0.5, 1) >= n1);
        let split = phi.truncated(&g, range).sum() + phi.long_range_part(&g, range).sum();
        prop_assert!(linalg::max_abs(&(split - phi.sum())) <= 1e-12);
    }

    #[test]
    fn even_and_arbitrary_disjoint_commute(g in small_chain(), seed in any::<u64>()) {
        let ctx = FockContext::new(&g, 1).unwrap();
        let n = g.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SiteSet::single(0);
        let y = SiteSet::new(1..n);
        let a = random_even_local::<f64, _>(&ctx, &x, &mut rng);
        let block = linalg::random_complex::<f64, _>(1 << y.len(), &mut rng);
        let b = ctx.embed(&y, &block);
        prop_assert!(spectral_norm(&linalg::commutator(&a, &b)) <= 1e-12 * spectral_norm(&a) * spectral_norm(&b));
    }

    #[test]
    fn commutator_symmetry_and_trivial_bound(g in small_chain(), seed in any::<u64>(), t in -3.0f64..3.0) {
        let ctx = FockContext::new(&g, 1).unwrap();
        let n = g.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_even_interaction::<f64, _>(&ctx, 2.0, 1.0, &mut rng);
        let h = phi.sum();
        let prop = Propagator::time_independent(&h).unwrap();
        let a = random_even_local::<f64, _>(&ctx, &SiteSet::single(0), &mut rng);
        let b = ctx.embed(&SiteSet::single(n - 1), &linalg::random_complex::<f64, _>(2, &mut rng));
        let forward = prop.propagate(t, 0.0).unwrap().unitary;
        let backward = prop.propagate(0.0, t).unwrap().unitary;
        let at = forward.adjoint() * &a * &forward;
        let bt = backward.adjoint() * &b * &backward;
        let lhs = spectral_norm(&linalg::commutator(&at, &b));
        let rhs = spectral_norm(&linalg::commutator(&bt, &a));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs));
        prop_assert!(lhs <= 2.0 * spectral_norm(&a) * spectral_norm(&b) + 1e-12);
        // Energy conservation.
        let ht = forward.adjoint() * &h * &forward;
        let (e0, e1) = (Eigh::new(&h).unwrap().values, Eigh::new(&linalg::hermitian_part(&ht)).unwrap().values);
        for (u, v) in e0.iter().zip(&e1) {
            prop_assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn cocycle_for_time_dependent_generator(seed in any::<u64>(), s in 0.0f64..0.5, m in 0.5f64..1.0, t in 1.0f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = linalg::random_hermitian::<f64, _>(4, &mut rng);
        let h1 = linalg::random_hermitian::<f64, _>(4, &mut rng);
        let h: HamiltonianFn<f64> = Arc::new(move |x| Ok(&h0 + &h1 * C::new(x.sin(), 0.0)));
        let settings = IntegratorSettings::default();
        let prop = Propagator::time_dependent(h, 4, settings);
        let ts = prop.propagate(t, s).unwrap().unitary;
        let tm = prop.propagate(t, m).unwrap().unitary;
        let ms = prop.propagate(m, s).unwrap().unitary;
        let st = prop.propagate(s, t).unwrap().unitary;
        prop_assert!(linalg::max_abs(&(&ts - tm * ms)) <= 10.0 * settings.tol.max(1e-9));
        prop_assert!(linalg::max_abs(&(&ts * st - linalg::identity::<f64>(4))) <= 10.0 * settings.tol.max(1e-9));
    }

    #[test]
    fn curves_respect_cap_and_depth(g in small_chain(), seed in any::<u64>(), alpha in 1.5f64..5.0, dt in 0.0f64..3.0) {
        let ctx = FockContext::new(&g, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_even_interaction::<f64, _>(&ctx, alpha, 1.0, &mut rng);
        let vel = lr_velocity(&ctx, &phi.clone().constant(), alpha).unwrap();
        let p = BoundParams::new(&g, &vel, alpha, 1, 2, phi.max_diameter(&g)).unwrap();
        let curves = [
            BoundCurve::finite_range(p.clone(), FiniteRangeVariant::Crude),
            BoundCurve::finite_range(p.clone(), FiniteRangeVariant::Sharp),
            BoundCurve::long_range(p.clone()),
            BoundCurve::root_cone(p.clone()),
            BoundCurve::iterated_certified(p.clone(), 2),
        ];
        for c in &curves {
            for r in 0..=g.diameter() {
                let v = c.eval(r, dt).unwrap();
                prop_assert!((0.0..=2.0).contains(&v), "{} at r={r}: {v}", c.name());
            }
        }
        let (lo, hi) = p.sigma_window();
        let sigmas = open_grid(lo, hi, 4);
        let shallow = iterate_bound(&p, dt, 1, &sigmas, NormRoute::Exact).unwrap();
        let deep = iterate_bound(&p, dt, 3, &sigmas, NormRoute::Exact).unwrap();
        for r in 0..=g.diameter() {
            prop_assert!(deep.value(r) <= shallow.value(r));
        }
        prop_assert!(deep.worst_norm_excess() <= 1e-12);
    }

    #[test]
    fn liouvillian_inverts_off_diagonal_part(seed in any::<u64>(), dim in 3usize..24, gap in 0.5f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = Eigh::new(&linalg::random_hermitian::<f64, _>(dim, &mut rng)).unwrap().vectors;
        let levels: Vec<f64> = (0..dim).map(|i| if i == 0 { 0.0 } else { gap + i as f64 * 0.3 }).collect();
        let d = Mat64::from_diagonal(&nalgebra::DVector::from_iterator(dim, levels.iter().map(|&e| C::new(e, 0.0))));
        let h = &v * d * v.adjoint();
        let eig = Eigh::new(&h).unwrap();
        let p = eig.projector(|i, _| i == 0);
        let q = linalg::identity::<f64>(dim) - &p;
        let b = linalg::random_hermitian::<f64, _>(dim, &mut rng);
        let off = &p * &b * &q + &q * &b * &p;
        let spec = WeightSpectrum::with_gap(gap).unwrap();
        let j = inverse_liouvillian(&h, &spec, &off, LiouvillianPath::Eigenbasis).unwrap().value;
        let back = linalg::commutator(&h, &j) * C::new(0.0, -1.0);
        prop_assert!(spectral_norm(&(&off - back)) <= 1e-10);
    }

    #[test]
    fn spin_telescoping_is_order_independent(seed in any::<u64>(), n in 3usize..=5) {
        let g = build_lattice(&LatticeSpec::Path { n }).unwrap();
        let ctx = SpinContext::new(&g, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = linalg::random_hermitian::<f64, _>(ctx.dim(), &mut rng);
        let order: Vec<usize> = (1..n).collect();
        let mut reversed = order.clone();
        reversed.reverse();
        let fw = telescoping_localization(&ctx, &order, &a);
        let bw = telescoping_localization(&ctx, &reversed, &a);
        prop_assert!(fw.holds() && bw.holds());
        prop_assert!((fw.direct - bw.direct).abs() < 1e-12);
        prop_assert!((fw.sum - bw.sum).abs() < 1e-10);
        // Spin factors commute with no parity restriction.
        let x = SiteSet::single(0);
        let ax = ctx.embed(&x, &linalg::random_complex::<f64, _>(2, &mut rng));
        let by = ctx.embed(&x.complement(n), &linalg::random_complex::<f64, _>(1 << (n - 1), &mut rng));
        prop_assert!(linalg::max_abs(&linalg::commutator(&ax, &by)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lppl_series_shift_invariant_and_capped(shift in -5.0f64..5.0, strength in 0.2f64..1.0) {
        let g = build_lattice(&LatticeSpec::Path { n: 4 }).unwrap();
        let ctx = FockContext::new(&g, 1).unwrap();
        let cfg = |energy_shift: f64| LpplConfig {
            base: ModelSpec::AtomicLimit { mu: 4.0, j: 1.0, alpha_tb: 4.0, pattern: OnsitePattern::Staggered },
            perturbation: PerturbationSpec::Number { sites: vec![0], strength },
            observable: ObservableSpec::Number,
            window: Window::Lowest { count: 1 },
            s_points: 3,
            min_gap: 1.0,
            fit_from: 2,
            energy_shift,
        };
        let plain = lppl_measure::<f64>(&ctx, &cfg(0.0)).unwrap();
        let shifted = lppl_measure::<f64>(&ctx, &cfg(shift)).unwrap();
        for (a, b) in plain.series.iter().zip(&shifted.series) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((a.1 - b.1).abs() <= 1e-9);
        }
        for row in &plain.rows {
            prop_assert!(row.difference <= row.cap);
        }
    }

    #[test]
    fn localized_flow_obeys_integral_bound(strength in 0.2f64..1.0, cut in 1usize..3) {
        let g = build_lattice(&LatticeSpec::Path { n: 4 }).unwrap();
        let ctx = FockContext::new(&g, 1).unwrap();
        let base = ModelSpec::AtomicLimit { mu: 2.0, j: 0.3, alpha_tb: 4.0, pattern: OnsitePattern::Staggered };
        let spec = ModelSpec::Perturbation { base: Box::new(base), w: PerturbationSpec::Number { sites: vec![0], strength } };
        let m = lrlab::interactions::model::<f64>(&spec, &ctx).unwrap();
        let y = SiteSet::new((4 - cut)..4);
        let (defect, sup) = localized_flow_defect(&ctx, &m, 1.0, &y, 41).unwrap();
        // Unit-length path; the sampled sup may undershoot slightly, so allow a small margin.
        prop_assert!(defect <= sup * (1.0 + 1e-3) + 1e-9, "defect {defect} sup {sup}");
    }
}
