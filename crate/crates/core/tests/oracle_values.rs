//! Values frozen from an independent dense-matrix implementation.

use lrlab::bounds::{certify, finite_range_bound, tail_constant, stretched_tail_bound, BoundParams, FiniteRangeVariant};
use lrlab::dynamics::{lr_sweep, Propagator};
use lrlab::interactions::{hop_operator, lr_velocity, model, Interaction, ModelSpec, OnsitePattern, PerturbationSpec};
use lrlab::lattice::{build_lattice, LatticeSpec, SiteSet};
use lrlab::linalg::{self, spectral_norm};
use lrlab::lppl::{lppl_measure, LpplConfig, ObservableSpec};
use lrlab::scalar::integrate;
use lrlab::spectral_flow::{decay_envelope, extract_interaction, gap_in_window, WeightSpectrum, Window};
use lrlab::spin::{pauli_x, pauli_z, SpinContext};
use lrlab::{FockContext, Mat64, C};

/// `(μ, ν, ρ, ∫_ρ^∞ e^{−x^ν} x^μ dx)`.
const TAILS: [(f64, f64, f64, f64); 20] = [
    (1.911, 0.759, 0.356, 6.441183400563053e+00),
    (0.05, 1.683, 3.668, 3.389995165707258e-05),
    (1.82, 1.54, 2.266, 6.689128808268209e-02),
    (2.805, 1.687, 0.21, 6.730662360220658e-01),
    (2.572, 0.357, 2.973, 1.029372524249850e+06),
    (0.527, 1.767, 2.258, 6.680582468056499e-03),
    (0.899, 1.019, 0.308, 8.857261139058624e-01),
    (0.373, 1.44, 2.659, 1.079855016720499e-02),
    (1.846, 0.952, 3.989, 5.781692706218179e-01),
    (2.943, 1.465, 2.672, 1.676036570939294e-01),
    (2.065, 0.961, 0.713, 2.428405446903966e+00),
    (2.164, 1.193, 1.379, 9.306805775910389e-01),
    (1.458, 1.812, 3.749, 2.315020871814409e-05),
    (1.073, 1.272, 1.423, 2.928469396710318e-01),
    (1.783, 0.874, 1.688, 2.244054780806020e+00),
    (2.671, 0.686, 2.568, 5.837896769478402e+01),
    (0.252, 1.715, 3.191, 2.194435420355327e-04),
    (0.718, 1.79, 0.423, 4.528076771350885e-01),
    (1.008, 0.555, 1.911, 6.220725294713663e+00),
    (2.389, 0.692, 0.398, 2.974273749985859e+01),
];

#[test]
fn tail_bound_dominates_quadrature() {
    for &(mu, nu, rho, exact) in &TAILS {
        let b = stretched_tail_bound(mu, nu, rho).unwrap();
        assert!(b >= exact, "μ={mu} ν={nu} ρ={rho}: {b} < {exact}");
    }
    let b = stretched_tail_bound(0.0, 1.0, 1.0).unwrap();
    assert!((-1f64).exp() <= b && (b - 2.0).abs() < 1e-12);
    assert!((tail_constant(0.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn sphere_sums_below_radial_integral() {
    let specs = [LatticeSpec::Path { n: 9 }, LatticeSpec::Ring { n: 10 }, LatticeSpec::SquarePatch { k: 3 }, LatticeSpec::SquareTorus { n: 6 }];
    let profiles: [&dyn Fn(f64) -> f64; 3] = [&|r| (1.0 + r).powf(-3.0), &|r| (-r / 2.0).exp(), &|r| 1.0 / (1.0 + r * r)];
    for spec in &specs {
        let g = build_lattice(spec).unwrap();
        let d = g.dimension() as i32;
        let c_sphere = 2f64.powi(d) * g.c_lambda_f::<f64>();
        for f in profiles {
            for x in 0..g.len() {
                let counts = g.sphere_counts(x);
                for r in 1..counts.len() {
                    let lhs: f64 = (1..=r).map(|j| counts[j] as f64 * f(j as f64)).sum();
                    let rhs = c_sphere * integrate(|s: f64| f(s) * s.powi(d - 1), 0.5, r as f64, 64);
                    assert!(lhs <= rhs + 1e-12, "{spec:?} x={x} r={r}: {lhs} > {rhs}");
                }
            }
        }
    }
}

/// `‖[τ_t(n_0), n_1]‖` for a single hop on two modes.
const HOP: [(f64, f64); 20] = [
    (0.1, 0.09933466539753061),
    (0.2, 0.19470917115432526),
    (0.3, 0.2823212366975177),
    (0.4, 0.3586780454497614),
    (0.5, 0.42073549240394825),
    (0.6, 0.46601954298361314),
    (0.7, 0.49272486499423007),
    (0.8, 0.49978680152075255),
    (0.9, 0.4869238154390976),
    (1.0, 0.45464871341284085),
    (1.1, 0.40424820190979505),
    (1.2, 0.3377315902755755),
    (1.3, 0.2577506859107321),
    (1.4, 0.16749407507795255),
    (1.5, 0.0705600040299336),
    (1.6, 0.029187071713790043),
    (1.7, 0.1277705510134156),
    (1.8, 0.22126022164742623),
    (1.9, 0.30592894547135946),
    (2.0, 0.3784012476539641),
];

#[test]
fn two_mode_hop_sweep_matches_and_is_certified() {
    let g = build_lattice(&LatticeSpec::Path { n: 2 }).unwrap();
    let ctx = FockContext::new(&g, 1).unwrap();
    let mut phi = Interaction::new(4);
    phi.insert(&ctx, SiteSet::new([0, 1]), hop_operator::<f64>(&ctx, 0, 1)).unwrap();
    let prop = Propagator::time_independent(&phi.sum()).unwrap();
    let n0 = ctx.mode_number::<f64>(0, 0).unwrap();
    let n1 = ctx.mode_number::<f64>(1, 0).unwrap();
    let times: Vec<f64> = HOP.iter().map(|p| p.0).collect();
    let sweep = lr_sweep(&prop, &n0, &n1, 0.0, &times).unwrap();
    for (p, &(_, expect)) in sweep.points.iter().zip(&HOP) {
        assert!((p.commutator - expect).abs() < 1e-12, "t={}: {} vs {expect}", p.t, p.commutator);
    }
    let alpha = 2.0;
    let vel = lr_velocity(&ctx, &phi.clone().constant(), alpha).unwrap();
    let params = BoundParams::new(&g, &vel, alpha, 1, 1, 1).unwrap();
    let measured: Vec<(usize, f64, f64)> = sweep.points.iter().map(|p| (1, p.t, p.commutator)).collect();
    let curve: Vec<(usize, f64, f64)> = times
        .iter()
        .map(|&t| (1, t, finite_range_bound(&params, 1.0, t, 2.0, FiniteRangeVariant::Sharp, None).unwrap()))
        .collect();
    let rep = certify(&measured, &[("finite_range_sharp".into(), curve)]).unwrap();
    assert!(rep.passed());
}

const LPPL: [(usize, f64); 7] = [
    (1, 1.274347380001116e-05),
    (2, 2.407360991823283e-08),
    (3, 4.888144853598009e-08),
    (4, 4.059446261123648e-10),
    (5, 1.903593131350399e-09),
    (6, 2.486756741363236e-11),
    (7, 1.933351378150346e-10),
];

#[test]
fn lppl_series_on_eight_sites() {
    let g = build_lattice(&LatticeSpec::Path { n: 8 }).unwrap();
    let ctx = FockContext::new(&g, 1).unwrap();
    let base = ModelSpec::AtomicLimit { mu: 4.0, j: 1.0, alpha_tb: 4.0, pattern: OnsitePattern::Staggered };
    let h = model::<f64>(&base, &ctx).unwrap().hamiltonian(&ctx, 0.0).unwrap();
    let gap = gap_in_window(&h, Window::Lowest { count: 1 }).unwrap();
    assert!((gap.gap - 3.9802979214287415).abs() < 1e-9);
    let cfg = LpplConfig {
        base,
        perturbation: PerturbationSpec::Number { sites: vec![0], strength: 1.0 },
        observable: ObservableSpec::Number,
        window: Window::Lowest { count: 1 },
        s_points: 2,
        min_gap: 1.0,
        fit_from: 2,
        energy_shift: 0.0,
    };
    let run = lppl_measure::<f64>(&ctx, &cfg).unwrap();
    for (&(d, got), &(de, expect)) in run.series.iter().zip(&LPPL) {
        assert_eq!(d, de);
        assert!((got - expect).abs() <= 1e-9 * expect.max(1e-3), "d={d}: {got} vs {expect}");
    }
    let fit = run.fit.unwrap();
    assert!((fit.slope + 6.674257357207951).abs() < 1e-2);
}

/// Max term norm per diameter of the extracted interaction on the tilted chain.
const ENVELOPE: [(usize, f64); 7] = [
    (1, 3.122694062969535e-02),
    (2, 2.058275199686993e-03),
    (3, 4.879895459333092e-04),
    (4, 8.000531771489102e-05),
    (5, 4.343018195997569e-05),
    (6, 9.916725968592881e-06),
    (7, 7.208169683762354e-06),
];

#[test]
fn extracted_envelope_on_tilted_chain() {
    let g = build_lattice(&LatticeSpec::Path { n: 8 }).unwrap();
    let ctx = FockContext::new(&g, 1).unwrap();
    let base = ModelSpec::AtomicLimit { mu: 2.0, j: 0.5, alpha_tb: 5.0, pattern: OnsitePattern::Tilted { slope: 1.0 } };
    let h = model::<f64>(&base, &ctx).unwrap().hamiltonian(&ctx, 0.0).unwrap();
    let k = lrlab::interactions::hopping::<f64>(&ctx, 1.0, 5.0);
    let phi = extract_interaction(&ctx, &h, &WeightSpectrum::with_gap(1.0).unwrap(), &k).unwrap();
    let env = decay_envelope(&g, &phi);
    for &(d, expect) in &ENVELOPE {
        let row = env.iter().find(|r| r.diam == d).unwrap();
        assert!((row.max_norm - expect).abs() <= 1e-8 * expect.max(1e-4), "d={d}: {} vs {expect}", row.max_norm);
    }
}

const TFIM: [(f64, f64); 4] = [(0.5, 8.734464846558787e-07), (1.0, 3.743387837391436e-04), (1.5, 1.064087112783547e-02), (2.0, 9.171862592004752e-02)];

#[test]
fn ising_chain_commutators() {
    let g = build_lattice(&LatticeSpec::Path { n: 5 }).unwrap();
    let ctx = SpinContext::new(&g, 2).unwrap();
    let (x, z) = (pauli_x::<f64>(), pauli_z::<f64>());
    let mut h: Mat64 = linalg::zeros(32);
    for k in 0..4 {
        h -= ctx.site_operator(k, &z) * ctx.site_operator(k + 1, &z);
    }
    for k in 0..5 {
        h -= ctx.site_operator(k, &x) * C::new(0.7, 0.0);
    }
    let prop = Propagator::time_independent(&h).unwrap();
    let eig = prop.eigen().unwrap();
    let a = eig.to_eigenbasis(&ctx.site_operator(0, &z));
    let b = eig.to_eigenbasis(&ctx.site_operator(4, &z));
    for &(t, expect) in &TFIM {
        let at = lrlab::dynamics::evolve_in_eigenbasis(eig, &a, t);
        let got = spectral_norm(&linalg::commutator(&at, &b));
        assert!((got - expect).abs() < 1e-10 * expect.max(1e-2), "t={t}: {got} vs {expect}");
    }
}
