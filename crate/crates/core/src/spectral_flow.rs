//! Gapped spectral patches, the quasi-local inverse Liouvillian and spectral flow.
//!
//! Conventions: `Ŵ(ω) = (2π)^{-1/2} ∫ W(t) e^{-iωt} dt`, so that
//! `𝒥(A) = ∫ W(t) e^{iHt} A e^{-iHt} dt` has eigenbasis elements
//! `√(2π) Ŵ(−ω_{mn}) A_{mn}`. The sign in front of `ω` is not trusted to this
//! derivation: [`filter_sign`] fixes it by checking `A = −i[H, 𝒥(A)]` on a
//! two-level instance.

use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::{HamiltonianFn, IntegratorSettings, Propagator};
use crate::error::{invalid, Error, Result};
use crate::fock::FockContext;
use crate::interactions::{Interaction, Model};
use crate::lattice::{LatticeGraph, SiteSet};
use crate::linalg::{self, Eigh, Mat};
use crate::scalar::{integrate, sine_integral, Real, C};

/// Boundaries of a spectral window must stay this far from every eigenvalue.
pub const WINDOW_CLEARANCE: f64 = 1e-9;

/// `Ŵ_{g,δ}(ω) = (−i/(√(2π) ω)) χ(|ω|)` with a mollifier step `χ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpectrum {
    pub g: f64,
    pub delta: f64,
    /// Steepness of the `exp(−shape/u)` mollifier.
    pub shape: f64,
}

impl WeightSpectrum {
    pub fn new(g: f64, delta: f64, shape: f64) -> Result<Self> {
        if !(g > delta && delta >= 0.0) {
            return Err(invalid("delta", format!("need g > δ ≥ 0, got g = {g}, δ = {delta}")));
        }
        if shape <= 0.0 {
            return Err(invalid("shape", "mollifier shape must be positive"));
        }
        Ok(Self { g, delta, shape })
    }

    pub fn with_gap(g: f64) -> Result<Self> {
        Self::new(g, 0.0, 1.0)
    }

    /// Smooth step: 0 on `[0, δ]`, 1 on `[g, ∞)`.
    pub fn cutoff<T: Real>(&self, w: T) -> T {
        let w = w.abs();
        let (d, g) = (T::lit(self.delta), T::lit(self.g));
        if w <= d {
            return T::zero();
        }
        if w >= g {
            return T::one();
        }
        let u = (w - d) / (g - d);
        let bump = |x: T| if x > T::zero() { (-T::lit(self.shape) / x).exp() } else { T::zero() };
        let (a, b) = (bump(u), bump(T::one() - u));
        a / (a + b)
    }

    pub fn hat<T: Real>(&self, w: T) -> C<T> {
        if w == T::zero() {
            return C::new(T::zero(), T::zero());
        }
        let amp = self.cutoff(w) / ((T::two_pi()).sqrt() * w);
        C::new(T::zero(), -amp)
    }

    /// `φ(ω) = √(2π) Ŵ(sω)`, the eigenbasis multiplier of `𝒥`.
    pub fn filter<T: Real>(&self, w: T) -> C<T> {
        self.hat(T::lit(filter_sign() as f64) * w) * T::two_pi().sqrt()
    }

    /// Time-domain weight `W(t)`, real and odd.
    pub fn weight(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if t < 0.0 {
            return -self.weight(-t);
        }
        // W(t) = 1/2 − (1/π) ∫_0^g (1 − χ(ω)) sin(ωt)/ω dω
        let (d, g) = (self.delta, self.g);
        let panels = (((g - d) * t / std::f64::consts::PI).ceil() as usize * 2).max(8);
        let ramp = integrate(|w: f64| (1.0 - self.cutoff(w)) * (w * t).sin() / w, d, g, panels);
        0.5 - (sine_integral(d * t) + ramp) / std::f64::consts::PI
    }
}

static SIGN: OnceLock<i8> = OnceLock::new();

/// Global sign `s` of the eigenbasis filter, fixed on `H = diag(0, 2)`, `A = e_{01}`.
pub fn filter_sign() -> i8 {
    *SIGN.get_or_init(|| {
        let spec = WeightSpectrum::with_gap(1.0).expect("valid validation spectrum");
        let omega = -2.0_f64; // E_0 − E_1
        for s in [1i8, -1] {
            let phi = spec.hat(s as f64 * omega) * std::f64::consts::TAU.sqrt();
            // (−i[H, J])_{01} = −i (E_0 − E_1) J_{01}
            let back = Complex::new(0.0, -1.0) * omega * phi;
            if (back - Complex::new(1.0, 0.0)).norm() < 1e-12 {
                return s;
            }
        }
        unreachable!("one sign inverts the Liouvillian")
    })
}

/// Spectral window `[f−, f+]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "snake_case")]
pub enum Window {
    Fixed { lo: f64, hi: f64 },
    /// The lowest `count` eigenvalues, with boundaries at the spectral midpoints.
    Lowest { count: usize },
}

/// Gapped part of a spectrum and its projection.
#[derive(Clone, Debug)]
pub struct GapSpec<T: Real> {
    pub lo: T,
    pub hi: T,
    pub gap: T,
    pub selected: Vec<usize>,
    pub projector: Mat<T>,
    pub eigen: Eigh<T>,
}

impl<T: Real> GapSpec<T> {
    pub fn rank(&self) -> usize {
        self.selected.len()
    }

    /// `max σ_* − min σ_*`.
    pub fn spread(&self) -> T {
        let v = &self.eigen.values;
        v[*self.selected.last().expect("non-empty")] - v[self.selected[0]]
    }
}

pub fn gap_analysis<T: Real>(h: &Mat<T>, lo: T, hi: T) -> Result<GapSpec<T>> {
    check_self_adjoint(h)?;
    gap_from_eigen(Eigh::new(h)?, lo, hi)
}

pub fn gap_in_window<T: Real>(h: &Mat<T>, window: Window) -> Result<GapSpec<T>> {
    check_self_adjoint(h)?;
    let eigen = Eigh::new(h)?;
    let (lo, hi) = match window {
        Window::Fixed { lo, hi } => (T::lit(lo), T::lit(hi)),
        Window::Lowest { count } => {
            let v = &eigen.values;
            if count == 0 {
                return Err(Error::EmptyWindow);
            }
            if count >= v.len() {
                return Err(Error::NoComplement);
            }
            let half = T::lit(0.5);
            (v[0] - T::one(), (v[count - 1] + v[count]) * half)
        }
    };
    gap_from_eigen(eigen, lo, hi)
}

fn gap_from_eigen<T: Real>(eigen: Eigh<T>, lo: T, hi: T) -> Result<GapSpec<T>> {
    let clear = T::lit(WINDOW_CLEARANCE);
    for &e in &eigen.values {
        for b in [lo, hi] {
            if (e - b).abs() < clear {
                return Err(Error::WindowHitsSpectrum(b.as_f64()));
            }
        }
    }
    let inside = |e: T| e > lo && e < hi;
    let selected: Vec<usize> = (0..eigen.dim()).filter(|&i| inside(eigen.values[i])).collect();
    if selected.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if selected.len() == eigen.dim() {
        return Err(Error::NoComplement);
    }
    let mut gap = T::max_value().expect("bounded scalar");
    for &i in &selected {
        for (j, &e) in eigen.values.iter().enumerate() {
            if !inside(e) && j != i {
                gap = gap.min((eigen.values[i] - e).abs());
            }
        }
    }
    let projector = eigen.projector(|_, e| inside(e));
    Ok(GapSpec { lo, hi, gap, selected, projector, eigen })
}

/// How `𝒥(A)` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum LiouvillianPath {
    Eigenbasis,
    /// Quadrature of `∫_{−T}^{T} W(t) τ_t(A) dt`.
    TimeDomain { horizon: f64, panels_per_unit: usize, tol: f64 },
}

impl LiouvillianPath {
    pub fn time_domain() -> Self {
        Self::TimeDomain { horizon: 200.0, panels_per_unit: 2, tol: 1e-4 }
    }
}

/// `𝒥(A)` with the operator-norm error budget of the chosen path (0 for the eigenbasis).
#[derive(Clone, Debug)]
pub struct Liouvillian<T: Real> {
    pub value: Mat<T>,
    pub budget: f64,
    /// Measured `‖W‖_{L¹}` and `‖W‖_∞` on the quadrature grid (time domain only).
    pub weight_l1: Option<f64>,
    pub weight_sup: Option<f64>,
}

/// `𝒥_{H,g,δ}(A)`.
pub fn inverse_liouvillian<T: Real>(h: &Mat<T>, spec: &WeightSpectrum, a: &Mat<T>, path: LiouvillianPath) -> Result<Liouvillian<T>> {
    check_self_adjoint(h)?;
    let eig = Eigh::new(h)?;
    match path {
        LiouvillianPath::Eigenbasis => Ok(Liouvillian { value: filter_in_eigenbasis(&eig, spec, a), budget: 0.0, weight_l1: None, weight_sup: None }),
        LiouvillianPath::TimeDomain { horizon, panels_per_unit, tol } => time_domain(&eig, spec, a, horizon, panels_per_unit, tol),
    }
}

/// Eigenbasis filter `𝒥(A)_{mn} = φ(E_m − E_n) A_{mn}`.
pub fn filter_in_eigenbasis<T: Real>(eig: &Eigh<T>, spec: &WeightSpectrum, a: &Mat<T>) -> Mat<T> {
    let mut b = eig.to_eigenbasis(a);
    let e = &eig.values;
    for m in 0..b.nrows() {
        for n in 0..b.ncols() {
            b[(m, n)] *= spec.filter(e[m] - e[n]);
        }
    }
    eig.from_eigenbasis(&b)
}

fn time_domain<T: Real>(eig: &Eigh<T>, spec: &WeightSpectrum, a: &Mat<T>, horizon: f64, per_unit: usize, tol: f64) -> Result<Liouvillian<T>> {
    if horizon <= 0.0 || per_unit == 0 {
        return Err(invalid("horizon", "time horizon and panel density must be positive"));
    }
    let e: Vec<f64> = eig.values.iter().map(|v| v.as_f64()).collect();
    let width = e.last().copied().unwrap_or(0.0) - e.first().copied().unwrap_or(0.0);
    // Resolve the fastest oscillation sin(ω t) with several panels per period.
    let per_unit = per_unit.max((width * 2.0 / std::f64::consts::PI).ceil() as usize);
    let panels = (horizon * per_unit as f64).ceil() as usize;
    let coarse = Rule::new(spec, horizon, panels);
    let fine = Rule::new(spec, horizon, 2 * panels);
    // |W| only oscillates at frequencies up to g, so the tail needs no spectral resolution.
    let tail_panels = ((3.0 * horizon * spec.g.max(1.0) / std::f64::consts::PI).ceil() as usize).max(1);
    let tail_rule = Rule::on(spec, horizon, 4.0 * horizon, tail_panels);
    let tail: f64 = tail_rule.nodes.iter().map(|&(_, w, wt)| w * wt.abs()).sum();
    let mut scalar_err = 0.0f64;
    let mut b = eig.to_eigenbasis(a);
    let dim = b.nrows();
    for m in 0..dim {
        for n in m + 1..dim {
            // The transform is odd in ω.
            let w = e[m] - e[n];
            let (qc, qf) = (coarse.transform(w), fine.transform(w));
            scalar_err = scalar_err.max((qf - qc).norm());
            b[(m, n)] *= C::new(T::lit(qf.re), T::lit(qf.im));
            b[(n, m)] *= C::new(T::lit(-qf.re), T::lit(-qf.im));
        }
        b[(m, m)] = C::new(T::zero(), T::zero());
    }
    let budget = (scalar_err + 2.0 * tail) * linalg::frobenius(a).as_f64();
    if budget > tol {
        return Err(Error::QuadratureBudget { budget, tol });
    }
    let l1 = 2.0 * fine.nodes.iter().map(|&(_, w, wt)| w * wt.abs()).sum::<f64>();
    let sup = fine.nodes.iter().map(|&(_, _, wt)| wt.abs()).fold(0.0, f64::max);
    Ok(Liouvillian { value: eig.from_eigenbasis(&b), budget, weight_l1: Some(l1), weight_sup: Some(sup) })
}

/// Gauss-Legendre nodes on `[lo, hi]` with cached `W(t)`.
struct Rule {
    nodes: Vec<(f64, f64, f64)>,
}

impl Rule {
    fn new(spec: &WeightSpectrum, horizon: f64, panels: usize) -> Self {
        Self::on(spec, 0.0, horizon, panels)
    }

    fn on(spec: &WeightSpectrum, lo: f64, hi: f64, panels: usize) -> Self {
        let mut nodes = Vec::with_capacity(10 * panels);
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let a = lo + h * p as f64;
            for &(x, w) in GL10.iter() {
                let t = a + 0.5 * h * (1.0 + x);
                nodes.push((t, 0.5 * h * w, spec.weight(t)));
            }
        }
        Self { nodes }
    }

    /// `∫_{−T}^{T} W(t) e^{iωt} dt = 2i ∫_0^T W(t) sin(ωt) dt`.
    fn transform(&self, w: f64) -> Complex<f64> {
        let s: f64 = self.nodes.iter().map(|&(t, q, wt)| q * wt * (w * t).sin()).sum();
        Complex::new(0.0, 2.0 * s)
    }
}

const GL10: [(f64, f64); 10] = {
    const H: [(f64, f64); 5] = [
        (0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
        (0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
        (0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
        (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
        (0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
    ];
    let mut out = [(0.0, 0.0); 10];
    let mut i = 0;
    while i < 5 {
        out[2 * i] = (-H[i].0, H[i].1);
        out[2 * i + 1] = H[i];
        i += 1;
    }
    out
};

/// `i[Ṗ, P]` with a once-extrapolated central difference.
pub fn kato_generator<T: Real>(p: impl Fn(T) -> Result<Mat<T>>, s: T, h: T) -> Result<Mat<T>> {
    let centre = p(s)?;
    let diff = |step: T| -> Result<Mat<T>> {
        let (plus, minus) = (p(s + step)?, p(s - step)?);
        let jump = &plus - &minus;
        if linalg::spectral_norm(&jump) >= T::one() {
            return Err(Error::Discontinuous(s.as_f64()));
        }
        Ok(linalg::scale(&jump, T::one() / (step + step)))
    };
    let half = T::lit(0.5);
    let wide = diff(h)?;
    let narrow = diff(h * half)?;
    let pdot = linalg::scale(&narrow, T::lit(4.0 / 3.0)) - linalg::scale(&wide, T::lit(1.0 / 3.0));
    Ok(linalg::commutator(&pdot, &centre) * C::new(T::zero(), T::one()))
}

/// `G = −𝒥_{H,g,0}(Ḣ)`, the generator of `i ∂_s U = G U`.
///
/// With this sign `Ṗ = −i[G, P] = i[𝒥(Ḣ), P]`.
pub fn hastings_generator<T: Real>(h: &Mat<T>, hdot: &Mat<T>, g: f64) -> Result<Mat<T>> {
    let spec = WeightSpectrum::with_gap(g)?;
    check_self_adjoint(h)?;
    let eig = Eigh::new(h)?;
    Ok(-filter_in_eigenbasis(&eig, &spec, hdot))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Hastings,
    Kato,
}

/// A smooth Hamiltonian path with a gapped window.
#[derive(Clone)]
pub struct GappedFamily<T: Real> {
    pub h: HamiltonianFn<T>,
    pub hdot: HamiltonianFn<T>,
    pub window: Window,
    pub interval: (T, T),
}

impl<T: Real> GappedFamily<T> {
    /// Path `s ↦ H(s)` of a library model over its own interval.
    pub fn from_model(ctx: &FockContext, model: &Model<T>, window: Window) -> Self {
        let (c1, m1) = (ctx.clone(), model.clone());
        let (c2, m2) = (ctx.clone(), model.clone());
        Self {
            h: Arc::new(move |s| m1.hamiltonian(&c1, s)),
            hdot: Arc::new(move |s| m2.derivative(&c2, s)),
            window,
            interval: model.interaction.interval(),
        }
    }

    pub fn gap(&self, s: T) -> Result<GapSpec<T>> {
        gap_in_window(&(self.h)(s)?, self.window)
    }

    pub fn projector(&self, s: T) -> Result<Mat<T>> {
        Ok(self.gap(s)?.projector)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    pub generator: GeneratorKind,
    /// Required lower bound on the gap along the path.
    pub g: f64,
    pub grid: usize,
    pub fd_step: f64,
    pub integrator: IntegratorSettings,
}

impl FlowSettings {
    pub fn new(generator: GeneratorKind, g: f64) -> Self {
        Self { generator, g, grid: 21, fd_step: 1e-4, integrator: IntegratorSettings::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub s: f64,
    pub gap: f64,
    pub deviation: f64,
    pub generator_norm: f64,
}

#[derive(Clone, Debug)]
pub struct FlowReport<T: Real> {
    pub rows: Vec<FlowRow>,
    pub unitaries: Vec<Mat<T>>,
    pub max_deviation: f64,
    pub argmax: f64,
}

/// Generator of the chosen kind at `s`.
pub fn flow_generator<T: Real>(family: &GappedFamily<T>, settings: &FlowSettings, s: T) -> Result<Mat<T>> {
    match settings.generator {
        GeneratorKind::Hastings => hastings_generator(&(family.h)(s)?, &(family.hdot)(s)?, settings.g),
        GeneratorKind::Kato => {
            let (lo, hi) = family.interval;
            let h = T::lit(settings.fd_step);
            // Keep the stencil inside the interval; the shift costs O(h) on a set of width h.
            let centre = if hi - lo > h + h + h + h { s.max(lo + h).min(hi - h) } else { s };
            kato_generator(|x| family.projector(x), centre, h)
        }
    }
}

/// Solve `i ∂_s U = G(s) U`, `U(s_0) = 1` on an even grid and compare with `P(s)`.
pub fn flow_unitary<T: Real>(family: &GappedFamily<T>, settings: &FlowSettings) -> Result<FlowReport<T>> {
    let (lo, hi) = family.interval;
    let n = settings.grid.max(2);
    let grid: Vec<T> = (0..n).map(|k| lo + (hi - lo) * T::count(k) / T::count(n - 1)).collect();
    let gaps: Vec<GapSpec<T>> = grid.iter().map(|&s| family.gap(s)).collect::<Result<_>>()?;
    for (s, g) in grid.iter().zip(&gaps) {
        if g.gap.as_f64() < settings.g {
            return Err(Error::GapCollapse { s: s.as_f64(), gap: g.gap.as_f64(), required: settings.g });
        }
    }
    let fam = family.clone();
    let st = *settings;
    let gen: HamiltonianFn<T> = Arc::new(move |s| flow_generator(&fam, &st, s));
    let prop = Propagator::time_dependent(gen, gaps[0].projector.nrows(), settings.integrator);
    let mut unitaries = vec![linalg::identity(gaps[0].projector.nrows())];
    for k in 1..n {
        let step = prop.propagate(grid[k], grid[k - 1])?.unitary;
        let next = step * &unitaries[k - 1];
        unitaries.push(next);
    }
    let projectors: Vec<Mat<T>> = gaps.iter().map(|g| g.projector.clone()).collect();
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let dev = transport_defect(&projectors[0], &projectors[k], &unitaries[k]);
        let g = flow_generator(family, settings, grid[k])?;
        rows.push(FlowRow { s: grid[k].as_f64(), gap: gaps[k].gap.as_f64(), deviation: dev.as_f64(), generator_norm: linalg::spectral_norm(&g).as_f64() });
    }
    let (max_deviation, argmax) = automorphic_deviation(&projectors, &unitaries, &grid)?;
    Ok(FlowReport { rows, unitaries, max_deviation: max_deviation.as_f64(), argmax: argmax.as_f64() })
}

fn transport_defect<T: Real>(p0: &Mat<T>, ps: &Mat<T>, u: &Mat<T>) -> T {
    linalg::spectral_norm(&(ps - u * p0 * u.adjoint()))
}

/// `max_s ‖P(s) − U(s) P(0) U(s)*‖` and its argmax.
pub fn automorphic_deviation<T: Real>(projectors: &[Mat<T>], unitaries: &[Mat<T>], grid: &[T]) -> Result<(T, T)> {
    if projectors.len() != unitaries.len() || projectors.len() != grid.len() || grid.is_empty() {
        return Err(Error::GridMismatch(format!("{} projectors, {} unitaries, {} grid points", projectors.len(), unitaries.len(), grid.len())));
    }
    let mut best = (T::zero(), grid[0]);
    for k in 0..grid.len() {
        let d = transport_defect(&projectors[0], &projectors[k], &unitaries[k]);
        if d > best.0 {
            best = (d, grid[k]);
        }
    }
    Ok(best)
}

/// `Δ_j(O)` on the fattenings `Ω_j` of `Ω`, until `Ω_j` is the whole lattice.
pub fn local_decomposition<T: Real>(ctx: &FockContext, eig: &Eigh<T>, spec: &WeightSpectrum, o: &Mat<T>, omega: &SiteSet) -> Vec<(SiteSet, Mat<T>)> {
    let full = filter_in_eigenbasis(eig, spec, o);
    let g = ctx.lattice();
    let all = g.len();
    let mut out = Vec::new();
    let mut prev: Option<Mat<T>> = None;
    for j in 0.. {
        let shell = g.fatten(omega, j);
        // Nested supports give E_{Ω_j} ∘ E_{Ω_{j−1}} = E_{Ω_{j−1}}.
        let here = if shell.len() == all { full.clone() } else { ctx.conditional_expectation(&shell, &full) };
        let delta = match &prev {
            Some(p) => &here - p,
            None => here.clone(),
        };
        let done = shell.len() == all;
        out.push((shell, delta));
        prev = Some(here);
        if done {
            break;
        }
    }
    out
}

/// `Φ_A(Z) = Σ_j Σ_{Y: Y_j = Z} Δ_j(Φ_K(Y))`.
pub fn extract_interaction<T: Real>(ctx: &FockContext, h: &Mat<T>, spec: &WeightSpectrum, phi_k: &Interaction<T>) -> Result<Interaction<T>> {
    check_self_adjoint(h)?;
    let eig = Eigh::new(h)?;
    let mut out = Interaction::new(ctx.dim());
    for (y, term) in phi_k.terms() {
        for (z, delta) in local_decomposition(ctx, &eig, spec, &term.op, y) {
            out.insert_trusted(ctx, z, delta);
        }
    }
    Ok(out)
}

/// `(diam, max ‖Φ(Z)‖, count)` over terms grouped by diameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub diam: usize,
    pub max_norm: f64,
    pub count: usize,
}

pub fn decay_envelope<T: Real>(g: &LatticeGraph, phi: &Interaction<T>) -> Vec<EnvelopeRow> {
    let mut rows: Vec<EnvelopeRow> = Vec::new();
    for (z, term) in phi.terms() {
        let d = g.diam(z);
        match rows.iter_mut().find(|r| r.diam == d) {
            Some(r) => {
                r.max_norm = r.max_norm.max(term.norm.as_f64());
                r.count += 1;
            }
            None => rows.push(EnvelopeRow { diam: d, max_norm: term.norm.as_f64(), count: 1 }),
        }
    }
    rows.sort_by_key(|r| r.diam);
    rows
}

/// Measured `‖Φ_A‖_{β,n} / ‖Φ_K‖_{β,n+1}`.
pub fn norm_ratio<T: Real>(g: &LatticeGraph, phi_a: &Interaction<T>, phi_k: &Interaction<T>, beta: T, n: u32) -> T {
    phi_a.norm(g, beta, n) / phi_k.norm(g, beta, n + 1)
}

fn check_self_adjoint<T: Real>(h: &Mat<T>) -> Result<()> {
    let r = linalg::hermiticity_residual(h);
    if r > T::lit(1e-12) * T::one().max(linalg::max_abs(h)) {
        return Err(Error::NotSelfAdjoint(r.as_f64()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::{hop_operator, hopping};
    use crate::lattice::{build_lattice, LatticeSpec};
    use crate::linalg::{max_abs, spectral_norm};

    fn diag(values: &[f64]) -> Mat<f64> {
        let mut m = linalg::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C::new(v, 0.0);
        }
        m
    }

    fn unit(n: usize, i: usize, j: usize) -> Mat<f64> {
        let mut m = linalg::zeros(n);
        m[(i, j)] = C::new(1.0, 0.0);
        m
    }

    fn liouvillian_residual(h: &Mat<f64>, a: &Mat<f64>, j: &Mat<f64>) -> f64 {
        max_abs(&(a - linalg::commutator(h, j) * C::new(0.0, -1.0)))
    }

    #[test]
    fn weight_spectrum_examples() {
        let w = WeightSpectrum::new(1.0, 0.4, 1.0).unwrap();
        let v = w.hat(2.0);
        assert!((v.im + 1.0 / (std::f64::consts::TAU.sqrt() * 2.0)).abs() < 1e-15 && v.re == 0.0);
        assert_eq!(w.hat(0.2), C::new(0.0, 0.0));
        for k in 0..100 {
            let x = -3.0 + 6.0 * k as f64 / 99.0;
            assert!((w.hat(-x) + w.hat(x)).norm() < 1e-15);
        }
        assert!(WeightSpectrum::new(1.0, 1.0, 1.0).is_err());
        assert_eq!(filter_sign(), -1);
        let zero = WeightSpectrum::with_gap(1.0).unwrap();
        assert_eq!(zero.cutoff(0.0), 0.0);
        assert!((zero.weight(0.3) + zero.weight(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn gap_examples() {
        let h = diag(&[0.0, 0.0, 3.0]);
        let spec = gap_analysis(&h, -1.0, 1.0).unwrap();
        assert_eq!(spec.rank(), 2);
        assert!((spec.gap - 3.0).abs() < 1e-12);
        let p = &spec.projector;
        assert!(max_abs(&(p * p - p)) < 1e-11);
        assert!(matches!(gap_analysis(&h, -1.0, 4.0), Err(Error::NoComplement)));
        assert!(matches!(gap_analysis(&h, 1.0, 2.0), Err(Error::EmptyWindow)));
        assert!(matches!(gap_analysis(&h, -1.0, 3.0), Err(Error::WindowHitsSpectrum(_))));
        let low = gap_in_window(&h, Window::Lowest { count: 2 }).unwrap();
        assert_eq!(low.rank(), 2);
    }

    #[test]
    fn two_level_inversion() {
        let h = diag(&[0.0, 2.0]);
        let spec = WeightSpectrum::with_gap(1.0).unwrap();
        let a = unit(2, 0, 1);
        let j = inverse_liouvillian(&h, &spec, &a, LiouvillianPath::Eigenbasis).unwrap().value;
        assert!((j[(0, 1)].norm() - 0.5).abs() < 1e-15);
        assert!(liouvillian_residual(&h, &a, &j) < 1e-15);
        let d = diag(&[1.0, -2.0]);
        let jd = inverse_liouvillian(&h, &spec, &d, LiouvillianPath::Eigenbasis).unwrap().value;
        assert!(max_abs(&jd) < 1e-15);
        let bad = unit(2, 0, 1);
        assert!(inverse_liouvillian(&bad, &spec, &a, LiouvillianPath::Eigenbasis).is_err());
    }

    #[test]
    fn narrow_window_is_annihilated() {
        let h = diag(&[0.0, 0.1, 2.0, 3.0]);
        let spec = WeightSpectrum::new(1.0, 0.5, 1.0).unwrap();
        let gap = gap_analysis(&h, -0.5, 0.5).unwrap();
        let mut rng = rand::rng();
        let a = linalg::random_complex::<f64, _>(4, &mut rng);
        let j = inverse_liouvillian(&h, &spec, &a, LiouvillianPath::Eigenbasis).unwrap().value;
        let p = &gap.projector;
        assert!(spectral_norm(&(p * j * p)) < 1e-10);
        assert!(gap.spread() < 0.5);
    }

    #[test]
    fn time_domain_agrees_within_budget() {
        let h = diag(&[0.0, 1.5, 2.5]);
        let spec = WeightSpectrum::with_gap(1.0).unwrap();
        let a = (unit(3, 0, 1) + unit(3, 1, 0) + unit(3, 0, 2) + unit(3, 2, 0)) * C::new(0.5, 0.0);
        let exact = inverse_liouvillian(&h, &spec, &a, LiouvillianPath::Eigenbasis).unwrap().value;
        let td = inverse_liouvillian(&h, &spec, &a, LiouvillianPath::time_domain()).unwrap();
        assert!(td.budget <= 1e-4, "budget {}", td.budget);
        assert!(spectral_norm(&(&exact - &td.value)) <= td.budget, "{} > {}", spectral_norm(&(&exact - &td.value)), td.budget);
        assert!(td.weight_sup.unwrap() <= 0.5 + 1e-9);
    }

    #[test]
    fn kato_examples() {
        let fixed = |_s: f64| -> Result<Mat<f64>> { Ok(unit(2, 0, 0)) };
        assert!(max_abs(&kato_generator(fixed, 0.3, 1e-4).unwrap()) < 1e-12);
        let rot = |s: f64| -> Result<Mat<f64>> {
            let (c, n) = (s.cos(), s.sin());
            let mut m = linalg::zeros(2);
            m[(0, 0)] = C::new(c * c, 0.0);
            m[(0, 1)] = C::new(c * n, 0.0);
            m[(1, 0)] = C::new(c * n, 0.0);
            m[(1, 1)] = C::new(n * n, 0.0);
            Ok(m)
        };
        let g = kato_generator(rot, 0.7, 1e-4).unwrap();
        assert!((spectral_norm(&g) - 1.0).abs() < 1e-8);
        assert!(linalg::hermiticity_residual(&g) < 1e-8);
        let jump = |s: f64| -> Result<Mat<f64>> { Ok(if s < 0.0 { unit(2, 0, 0) } else { unit(2, 1, 1) }) };
        assert!(matches!(kato_generator(jump, 0.0, 1e-4), Err(Error::Discontinuous(_))));
    }

    fn two_site_family() -> (FockContext, GappedFamily<f64>) {
        let g = build_lattice(&LatticeSpec::Path { n: 2 }).unwrap();
        let ctx = FockContext::new(&g, 1).unwrap();
        let n0 = ctx.mode_number::<f64>(0, 0).unwrap().matrix;
        let n1 = ctx.mode_number::<f64>(1, 0).unwrap().matrix;
        let onsite = n0 * C::new(2.0, 0.0) - n1 * C::new(2.0, 0.0);
        let hop = hop_operator::<f64>(&ctx, 0, 1) * C::new(0.6, 0.0);
        let (h0, v) = (onsite.clone(), hop.clone());
        let h: HamiltonianFn<f64> = Arc::new(move |s| Ok(&h0 + &v * C::new(s, 0.0)));
        let hdot: HamiltonianFn<f64> = Arc::new(move |_| Ok(hop.clone()));
        (ctx, GappedFamily { h, hdot, window: Window::Lowest { count: 1 }, interval: (0.0, 1.0) })
    }

    #[test]
    fn both_generators_transport_the_projection() {
        let (_, family) = two_site_family();
        for kind in [GeneratorKind::Hastings, GeneratorKind::Kato] {
            let rep = flow_unitary(&family, &FlowSettings { grid: 6, ..FlowSettings::new(kind, 1.0) }).unwrap();
            assert!(rep.max_deviation <= 1e-6, "{kind:?}: {}", rep.max_deviation);
        }
        let g = flow_generator(&family, &FlowSettings::new(GeneratorKind::Hastings, 1.0), 0.4).unwrap();
        assert!(linalg::hermiticity_residual(&g) < 1e-9);
    }

    #[test]
    fn hastings_identity_chain() {
        let (_, family) = two_site_family();
        let s = 0.5;
        let h = (family.h)(s).unwrap();
        let spec = WeightSpectrum::with_gap(1.0).unwrap();
        let j = inverse_liouvillian(&h, &spec, &(family.hdot)(s).unwrap(), LiouvillianPath::Eigenbasis).unwrap().value;
        let p = family.projector(s).unwrap();
        let step = 1e-4;
        let pdot = (family.projector(s + step).unwrap() - family.projector(s - step).unwrap()) * C::new(0.5 / step, 0.0);
        let residual = pdot * C::new(0.0, -1.0) - linalg::commutator(&j, &p);
        assert!(spectral_norm(&residual) < 1e-7);
    }

    #[test]
    fn static_family_does_not_move() {
        let h0 = diag(&[0.0, 2.0, 3.0]);
        let h: HamiltonianFn<f64> = Arc::new(move |_| Ok(h0.clone()));
        let hdot: HamiltonianFn<f64> = Arc::new(|_| Ok(linalg::zeros(3)));
        let family = GappedFamily { h, hdot, window: Window::Lowest { count: 1 }, interval: (0.0, 1.0) };
        let rep = flow_unitary(&family, &FlowSettings { grid: 3, ..FlowSettings::new(GeneratorKind::Hastings, 1.0) }).unwrap();
        assert!(rep.unitaries.iter().all(|u| max_abs(&(u - linalg::identity::<f64>(3))) < 1e-14));
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn gap_collapse_is_reported() {
        let (_, family) = two_site_family();
        assert!(matches!(flow_unitary(&family, &FlowSettings::new(GeneratorKind::Hastings, 10.0)), Err(Error::GapCollapse { .. })));
    }

    #[test]
    fn decomposition_telescopes() {
        let g = build_lattice(&LatticeSpec::Path { n: 4 }).unwrap();
        let ctx = FockContext::new(&g, 1).unwrap();
        let h = hopping::<f64>(&ctx, 1.0, 3.0).sum() + ctx.mode_number::<f64>(0, 0).unwrap().matrix;
        let eig = Eigh::new(&h).unwrap();
        let spec = WeightSpectrum::with_gap(0.5).unwrap();
        let o = hop_operator::<f64>(&ctx, 1, 2);
        let parts = local_decomposition(&ctx, &eig, &spec, &o, &SiteSet::new([1, 2]));
        let total = parts.iter().fold(linalg::zeros::<f64>(16), |acc, (_, d)| acc + d);
        let j = filter_in_eigenbasis(&eig, &spec, &o);
        assert!(max_abs(&(total - &j)) < 1e-9);
        for (z, d) in &parts {
            assert!(ctx.localization_defect(z, d) < 1e-10);
        }
        let whole = local_decomposition(&ctx, &eig, &spec, &o, &g.sites());
        assert_eq!(whole.len(), 1);
        assert!(max_abs(&(&whole[0].1 - &j)) < 1e-15);
    }

    #[test]
    fn commuting_hamiltonian_keeps_terms_local() {
        let g = build_lattice(&LatticeSpec::Path { n: 3 }).unwrap();
        let ctx = FockContext::new(&g, 1).unwrap();
        let mut h = linalg::zeros::<f64>(8);
        for x in 0..3 {
            h += ctx.mode_number::<f64>(x, 0).unwrap().matrix * C::new(1.0 + x as f64, 0.0);
        }
        let mut k = Interaction::new(8);
        k.insert(&ctx, SiteSet::single(1), ctx.mode_number::<f64>(1, 0).unwrap().matrix).unwrap();
        let spec = WeightSpectrum::with_gap(0.5).unwrap();
        let a = extract_interaction(&ctx, &h, &spec, &k).unwrap();
        for (z, t) in a.terms() {
            if z.len() > 1 {
                assert!(t.norm < 1e-10);
            }
        }
        let empty = extract_interaction(&ctx, &h, &spec, &Interaction::new(8)).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn extracted_sum_matches_filter() {
        let g = build_lattice(&LatticeSpec::Path { n: 5 }).unwrap();
        let ctx = FockContext::new(&g, 1).unwrap();
        let k = hopping::<f64>(&ctx, 1.0, 3.0);
        let mut h = hopping::<f64>(&ctx, 0.3, 4.0).sum();
        for x in 0..5 {
            h += ctx.mode_number::<f64>(x, 0).unwrap().matrix * C::new(2.0 + x as f64, 0.0);
        }
        let spec = WeightSpectrum::with_gap(1.0).unwrap();
        let a = extract_interaction(&ctx, &h, &spec, &k).unwrap();
        let j = inverse_liouvillian(&h, &spec, &k.sum(), LiouvillianPath::Eigenbasis).unwrap().value;
        assert!(max_abs(&(a.sum() - j)) < 1e-8);
        let env = decay_envelope(&g, &a);
        assert!(!env.is_empty() && env.iter().all(|r| r.count > 0));
    }
}
