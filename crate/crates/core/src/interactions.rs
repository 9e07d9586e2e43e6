//! Interactions, their norms and the library of model Hamiltonians.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockContext, LadderKind, Parity};
use crate::lattice::{decay, f_alpha_norm, LatticeGraph, NormMode, SiteSet};
use crate::linalg::{self, Mat};
use crate::scalar::{Real, C};

const HERMITIAN_TOL: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-12;

/// A single local term together with its cached operator norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T: Real> {
    pub op: Mat<T>,
    pub norm: T,
}

/// Finite map from supports to even self-adjoint local terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction<T: Real> {
    dim: usize,
    terms: BTreeMap<SiteSet, Term<T>>,
}

impl<T: Real> Interaction<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SiteSet, &Term<T>)> {
        self.terms.iter()
    }

    pub fn get(&self, z: &SiteSet) -> Option<&Term<T>> {
        self.terms.get(z)
    }

    /// Adds `op` to the term at `z` after checking it is self-adjoint, even and supported in `z`.
    pub fn insert(&mut self, ctx: &FockContext, z: SiteSet, op: Mat<T>) -> Result<()> {
        if op.nrows() != self.dim {
            return Err(Error::DimensionMismatch(op.nrows(), self.dim));
        }
        check_term(ctx, &z, &op)?;
        self.insert_trusted(ctx, z, op);
        Ok(())
    }

    /// Adds a term already known to satisfy the invariants.
    pub(crate) fn insert_trusted(&mut self, ctx: &FockContext, z: SiteSet, op: Mat<T>) {
        let op = match self.terms.remove(&z) {
            Some(old) => old.op + op,
            None => op,
        };
        let norm = ctx.local_norm(&z, &op);
        self.terms.insert(z, Term { op, norm });
    }

    /// `Σ_Z Φ(Z)`.
    pub fn sum(&self) -> Mat<T> {
        self.terms.values().fold(linalg::zeros(self.dim), |acc, t| acc + &t.op)
    }

    /// `‖Φ‖_{α,n} = sup_z Σ_{Z∋z} |Z|^n ‖Φ(Z)‖ (diam Z + 1)^α`.
    pub fn norm(&self, g: &LatticeGraph, alpha: T, n: u32) -> T {
        let mut per_site = vec![T::zero(); g.len()];
        for (z, term) in &self.terms {
            let weight = T::count(z.len()).powi(n as i32) * term.norm / decay(alpha, T::count(g.diam(z)));
            for s in z.iter() {
                per_site[s] += weight;
            }
        }
        per_site.into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    /// Terms with `diam(Z) < range`.
    pub fn truncated(&self, g: &LatticeGraph, range: usize) -> Self {
        self.filtered(|z| g.diam(z) < range)
    }

    /// Terms with `diam(Z) ≥ range`.
    pub fn long_range_part(&self, g: &LatticeGraph, range: usize) -> Self {
        self.filtered(|z| g.diam(z) >= range)
    }

    fn filtered(&self, keep: impl Fn(&SiteSet) -> bool) -> Self {
        let terms = self.terms.iter().filter(|(z, _)| keep(z)).map(|(z, t)| (z.clone(), t.clone())).collect();
        Self { dim: self.dim, terms }
    }

    /// `a·Φ + b·Ψ` term by term.
    pub fn combine(&self, a: T, other: &Self, b: T, ctx: &FockContext) -> Self {
        let mut out = Self::new(self.dim);
        for (z, t) in &self.terms {
            out.insert_trusted(ctx, z.clone(), linalg::scale(&t.op, a));
        }
        for (z, t) in &other.terms {
            out.insert_trusted(ctx, z.clone(), linalg::scale(&t.op, b));
        }
        out.terms.retain(|_, t| t.norm > T::zero());
        out
    }

    pub fn max_diameter(&self, g: &LatticeGraph) -> usize {
        self.terms.keys().map(|z| g.diam(z)).max().unwrap_or(0)
    }

    /// Time-independent view.
    pub fn constant(self) -> TimeDependentInteraction<T> {
        TimeDependentInteraction::constant(self)
    }
}

fn check_term<T: Real>(ctx: &FockContext, z: &SiteSet, op: &Mat<T>) -> Result<()> {
    let scale = T::one().max(linalg::max_abs(op));
    let herm = linalg::hermiticity_residual(op);
    if herm > T::lit(HERMITIAN_TOL) * scale {
        return Err(Error::NotSelfAdjoint(herm.as_f64()));
    }
    match ctx.parity_class(op) {
        Parity::Even => {}
        other => return Err(Error::NotEven(other.name())),
    }
    if ctx.localization_defect(z, op) > T::lit(SUPPORT_TOL) * scale {
        return Err(Error::SupportViolation);
    }
    Ok(())
}

/// Interaction-valued path sampler.
pub type Sampler<T> = Arc<dyn Fn(T) -> Interaction<T> + Send + Sync>;

#[derive(Clone)]
enum Profile<T: Real> {
    Constant(Interaction<T>),
    /// `Φ(t) = base + t·slope`.
    Affine { base: Interaction<T>, slope: Interaction<T> },
    Function { at: Sampler<T>, derivative: Option<Sampler<T>> },
}

/// Interaction depending on time over a closed interval.
#[derive(Clone)]
pub struct TimeDependentInteraction<T: Real> {
    interval: (T, T),
    profile: Profile<T>,
}

impl<T: Real> fmt::Debug for TimeDependentInteraction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.profile {
            Profile::Constant(_) => "constant",
            Profile::Affine { .. } => "affine",
            Profile::Function { .. } => "function",
        };
        f.debug_struct("TimeDependentInteraction").field("interval", &self.interval).field("kind", &kind).finish()
    }
}

/// Number of grid points for the time-sup of a general profile.
pub const DEFAULT_TIME_GRID: usize = 101;

impl<T: Real> TimeDependentInteraction<T> {
    pub fn constant(phi: Interaction<T>) -> Self {
        Self { interval: (T::zero(), T::one()), profile: Profile::Constant(phi) }
    }

    pub fn affine(base: Interaction<T>, slope: Interaction<T>, interval: (T, T)) -> Self {
        Self { interval, profile: Profile::Affine { base, slope } }
    }

    pub fn from_fn(at: Sampler<T>, derivative: Option<Sampler<T>>, interval: (T, T)) -> Self {
        Self { interval, profile: Profile::Function { at, derivative } }
    }

    pub fn with_interval(mut self, lo: T, hi: T) -> Self {
        self.interval = (lo, hi);
        self
    }

    pub fn interval(&self) -> (T, T) {
        self.interval
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.profile {
            Profile::Constant(_) => true,
            Profile::Affine { slope, .. } => slope.is_empty(),
            Profile::Function { .. } => false,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.profile {
            Profile::Constant(p) | Profile::Affine { base: p, .. } => p.dim(),
            Profile::Function { at, .. } => at(self.interval.0).dim(),
        }
    }

    fn check_time(&self, t: T) -> Result<()> {
        let (lo, hi) = self.interval;
        let eps = T::lit(1e-12) * (T::one() + hi.abs().max(lo.abs()));
        if t < lo - eps || t > hi + eps {
            return Err(Error::TimeOutOfRange { t: t.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
        }
        Ok(())
    }

    /// `Φ(·, t)`.
    pub fn at(&self, ctx: &FockContext, t: T) -> Result<Interaction<T>> {
        self.check_time(t)?;
        Ok(match &self.profile {
            Profile::Constant(p) => p.clone(),
            Profile::Affine { base, slope } => base.combine(T::one(), slope, t, ctx),
            Profile::Function { at, .. } => at(t),
        })
    }

    /// Analytic `Φ̇(·, t)` when available.
    pub fn derivative(&self, t: T) -> Result<Option<Interaction<T>>> {
        self.check_time(t)?;
        Ok(match &self.profile {
            Profile::Constant(p) => Some(Interaction::new(p.dim())),
            Profile::Affine { slope, .. } => Some(slope.clone()),
            Profile::Function { derivative, .. } => derivative.as_ref().map(|d| d(t)),
        })
    }

    /// `sup_t ‖Φ(t)‖_{α,n}`: exact for constant and affine profiles, grid maximum otherwise.
    pub fn sup_norm(&self, ctx: &FockContext, g: &LatticeGraph, alpha: T, n: u32) -> T {
        let (lo, hi) = self.interval;
        match &self.profile {
            Profile::Constant(p) => p.norm(g, alpha, n),
            // The norm is convex along an affine path, so the endpoints dominate.
            Profile::Affine { base, slope } => {
                let a = base.combine(T::one(), slope, lo, ctx).norm(g, alpha, n);
                let b = base.combine(T::one(), slope, hi, ctx).norm(g, alpha, n);
                a.max(b)
            }
            Profile::Function { at, .. } => time_grid(lo, hi, DEFAULT_TIME_GRID)
                .into_iter()
                .map(|t| at(t).norm(g, alpha, n))
                .fold(T::zero(), |a, b| a.max(b)),
        }
    }

    /// Largest `diam(Z)` appearing anywhere along the path.
    pub fn max_diameter(&self, g: &LatticeGraph) -> usize {
        match &self.profile {
            Profile::Constant(p) => p.max_diameter(g),
            Profile::Affine { base, slope } => base.max_diameter(g).max(slope.max_diameter(g)),
            Profile::Function { at, .. } => time_grid(self.interval.0, self.interval.1, DEFAULT_TIME_GRID)
                .into_iter()
                .map(|t| at(t).max_diameter(g))
                .max()
                .unwrap_or(0),
        }
    }

    /// `max_t ‖Φ(Z,t) − Φ(Z,t')‖` between neighbouring grid points, a norm-continuity probe.
    pub fn continuity_defect(&self, ctx: &FockContext, points: usize) -> Result<T> {
        let grid = time_grid(self.interval.0, self.interval.1, points.max(2));
        let mut worst = T::zero();
        let mut prev = self.at(ctx, grid[0])?.sum();
        for &t in &grid[1..] {
            let cur = self.at(ctx, t)?.sum();
            worst = worst.max(linalg::spectral_norm(&(&cur - &prev)));
            prev = cur;
        }
        Ok(worst)
    }
}

pub(crate) fn time_grid<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    if points <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::count(points - 1);
    (0..points).map(|k| if k + 1 == points { hi } else { lo + step * T::count(k) }).collect()
}

/// Time-independent single-site Hamiltonian `H_0 = Σ_z h_z`.
#[derive(Clone, Debug, PartialEq)]
pub struct OnSiteHamiltonian<T: Real> {
    dim: usize,
    terms: BTreeMap<usize, Mat<T>>,
}

impl<T: Real> OnSiteHamiltonian<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn insert(&mut self, ctx: &FockContext, site: usize, op: Mat<T>) -> Result<()> {
        if site >= ctx.sites() {
            return Err(Error::OutOfRange(format!("site {site}")));
        }
        check_term(ctx, &SiteSet::single(site), &op)?;
        let op = match self.terms.remove(&site) {
            Some(old) => old + op,
            None => op,
        };
        self.terms.insert(site, op);
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Mat<T>)> {
        self.terms.iter().map(|(&s, m)| (s, m))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sum(&self) -> Mat<T> {
        self.terms.values().fold(linalg::zeros(self.dim), |acc, m| acc + m)
    }
}

/// `H(t) = Σ_Z Φ(Z,t) + H_0`, keeping only `diam(Z) < range` when a range is given.
pub fn assemble<T: Real>(
    ctx: &FockContext,
    phi: &TimeDependentInteraction<T>,
    h0: &OnSiteHamiltonian<T>,
    t: T,
    range: Option<usize>,
) -> Result<Mat<T>> {
    let at = phi.at(ctx, t)?;
    let part = match range {
        Some(r) => at.truncated(ctx.lattice(), r),
        None => at,
    };
    Ok(part.sum() + h0.sum())
}

/// Velocity constants used by the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Velocities<T> {
    /// `2e‖F_α‖_Λ ‖Φ‖_α`.
    pub v: T,
    /// `max{v, ‖Φ‖_{α,1}}`.
    pub nu: T,
    pub f_alpha: T,
    pub norm0: T,
    pub norm1: T,
}

pub fn lr_velocity<T: Real>(
    ctx: &FockContext,
    phi: &TimeDependentInteraction<T>,
    alpha: T,
) -> Result<Velocities<T>> {
    let g = ctx.lattice();
    if alpha <= T::count(g.dimension()) {
        return Err(Error::DecayTooSlow { alpha: alpha.as_f64(), dim: g.dimension() });
    }
    let f_alpha = f_alpha_norm(g, alpha, NormMode::Exact)?;
    let norm0 = phi.sup_norm(ctx, g, alpha, 0);
    let norm1 = phi.sup_norm(ctx, g, alpha, 1);
    let v = T::lit(2.0) * T::e() * f_alpha * norm0;
    Ok(Velocities { v, nu: v.max(norm1), f_alpha, norm0, norm1 })
}

/// Site-energy pattern of the atomic limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum OnsitePattern {
    /// `μ n_z` everywhere.
    #[default]
    Uniform,
    /// `μ n_z` on even sites, `μ(1 − n_z)` on odd sites (charge density wave).
    Staggered,
    /// `(μ + slope·z) n_z`, a tilted chain.
    Tilted { slope: f64 },
}

/// Perturbation `W` localized on a set of sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSpec {
    /// `strength · N_X`.
    Number { sites: Vec<usize>, strength: f64 },
    /// `strength · (a*_x a_y + a*_y a_x)` for the lowest spin index.
    Hop { x: usize, y: usize, strength: f64 },
}

/// Named model with parameters, as read from configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `Σ_{x<y} J (1+d)^{-α_tb} (a*_x a_y + h.c.)`.
    Hopping { j: f64, alpha_tb: f64 },
    /// `Σ_{x<y} V (1+d)^{-α_tb} n_x n_y`.
    DensityDensity { v: f64, alpha_tb: f64 },
    /// On-site energies plus weak long-range hopping.
    AtomicLimit {
        mu: f64,
        #[serde(default)]
        j: f64,
        #[serde(default = "default_alpha_tb")]
        alpha_tb: f64,
        #[serde(default, flatten)]
        pattern: OnsitePattern,
    },
    /// `(1 − s) Φ_from + s Φ_to`, with the on-site part of `from` kept in `H_0`.
    Interpolation { from: Box<ModelSpec>, to: Box<ModelSpec> },
    /// `Φ + s W` with `W` even and localized.
    Perturbation { base: Box<ModelSpec>, w: PerturbationSpec },
}

fn default_alpha_tb() -> f64 {
    4.0
}

/// Interaction path over `[0, 1]` plus on-site part.
#[derive(Clone, Debug)]
pub struct Model<T: Real> {
    pub interaction: TimeDependentInteraction<T>,
    pub onsite: OnSiteHamiltonian<T>,
}

impl<T: Real> Model<T> {
    pub fn hamiltonian(&self, ctx: &FockContext, s: T) -> Result<Mat<T>> {
        assemble(ctx, &self.interaction, &self.onsite, s, None)
    }

    /// `dH/ds`, available for every model in the library.
    pub fn derivative(&self, ctx: &FockContext, s: T) -> Result<Mat<T>> {
        match self.interaction.derivative(s)? {
            Some(d) => Ok(d.sum()),
            None => {
                let h = T::lit(1e-5);
                let (lo, hi) = self.interaction.interval();
                let a = (s - h).max(lo);
                let b = (s + h).min(hi);
                let diff = self.hamiltonian(ctx, b)? - self.hamiltonian(ctx, a)?;
                Ok(linalg::scale(&diff, T::one() / (b - a)))
            }
        }
    }
}

/// Builds a named model on the given context.
pub fn model<T: Real>(spec: &ModelSpec, ctx: &FockContext) -> Result<Model<T>> {
    let (base, onsite) = static_parts::<T>(spec, ctx)?;
    let dim = ctx.dim();
    match spec {
        ModelSpec::Interpolation { from, to } => {
            let (phi_a, h_a) = static_parts::<T>(from, ctx)?;
            let (phi_b, h_b) = static_parts::<T>(to, ctx)?;
            let mut target = phi_b;
            for site in 0..ctx.sites() {
                let diff = onsite_at(&h_b, site, dim) - onsite_at(&h_a, site, dim);
                if linalg::max_abs(&diff) > T::zero() {
                    target.insert_trusted(ctx, SiteSet::single(site), diff);
                }
            }
            let slope = target.combine(T::one(), &phi_a, -T::one(), ctx);
            Ok(Model { interaction: TimeDependentInteraction::affine(phi_a, slope, unit()), onsite: h_a })
        }
        ModelSpec::Perturbation { w, .. } => {
            let (z, op) = perturbation(w, ctx)?;
            let mut slope = Interaction::new(dim);
            slope.insert(ctx, z, op)?;
            Ok(Model { interaction: TimeDependentInteraction::affine(base, slope, unit()), onsite })
        }
        _ => Ok(Model { interaction: TimeDependentInteraction::constant(base), onsite }),
    }
}

/// Like [`model`] but with a caller-supplied perturbation `W` at support `x`.
pub fn perturbed_model<T: Real>(base: &ModelSpec, x: SiteSet, w: Mat<T>, ctx: &FockContext) -> Result<Model<T>> {
    let (phi, onsite) = static_parts::<T>(base, ctx)?;
    let mut slope = Interaction::new(ctx.dim());
    slope.insert(ctx, x, w)?;
    Ok(Model { interaction: TimeDependentInteraction::affine(phi, slope, unit()), onsite })
}

fn unit<T: Real>() -> (T, T) {
    (T::zero(), T::one())
}

fn onsite_at<T: Real>(h: &OnSiteHamiltonian<T>, site: usize, dim: usize) -> Mat<T> {
    h.terms.get(&site).cloned().unwrap_or_else(|| linalg::zeros(dim))
}

/// Time-independent interaction and on-site part of a model spec (the `s = 0` slice).
fn static_parts<T: Real>(spec: &ModelSpec, ctx: &FockContext) -> Result<(Interaction<T>, OnSiteHamiltonian<T>)> {
    let dim = ctx.dim();
    match spec {
        ModelSpec::Hopping { j, alpha_tb } => Ok((hopping(ctx, T::lit(*j), T::lit(*alpha_tb)), OnSiteHamiltonian::new(dim))),
        ModelSpec::DensityDensity { v, alpha_tb } => {
            Ok((density_density(ctx, T::lit(*v), T::lit(*alpha_tb)), OnSiteHamiltonian::new(dim)))
        }
        ModelSpec::AtomicLimit { mu, j, alpha_tb, pattern } => {
            let phi = if *j == 0.0 { Interaction::new(dim) } else { hopping(ctx, T::lit(*j), T::lit(*alpha_tb)) };
            Ok((phi, atomic_onsite(ctx, T::lit(*mu), pattern)?))
        }
        ModelSpec::Interpolation { from, .. } => static_parts(from, ctx),
        ModelSpec::Perturbation { base, .. } => static_parts(base, ctx),
    }
}

fn pair_decay<T: Real>(ctx: &FockContext, x: usize, y: usize, alpha_tb: T) -> T {
    decay(alpha_tb, T::count(ctx.lattice().d(x, y)))
}

/// Long-range hopping `J (1+d)^{-α_tb} Σ_i (a*_{x,i} a_{y,i} + h.c.)` on every pair.
pub fn hopping<T: Real>(ctx: &FockContext, j: T, alpha_tb: T) -> Interaction<T> {
    let mut phi = Interaction::new(ctx.dim());
    for x in 0..ctx.sites() {
        for y in x + 1..ctx.sites() {
            let op = hop_operator(ctx, x, y);
            phi.insert_trusted(ctx, SiteSet::new([x, y]), linalg::scale(&op, j * pair_decay(ctx, x, y, alpha_tb)));
        }
    }
    phi
}

/// `Σ_i (a*_{x,i} a_{y,i} + a*_{y,i} a_{x,i})`.
pub fn hop_operator<T: Real>(ctx: &FockContext, x: usize, y: usize) -> Mat<T> {
    let mut op = linalg::zeros(ctx.dim());
    for i in 0..ctx.spin() {
        let ax = ctx.ladder_signed(x * ctx.spin() + i, LadderKind::Annihilate);
        let ay = ctx.ladder_signed(y * ctx.spin() + i, LadderKind::Annihilate);
        let h = ax.adjoint().compose(&ay);
        let d = h.to_dense::<T>();
        op += &d + d.adjoint();
    }
    op
}

/// Long-range density-density interaction `V (1+d)^{-α_tb} n_x n_y`.
pub fn density_density<T: Real>(ctx: &FockContext, v: T, alpha_tb: T) -> Interaction<T> {
    let mut phi = Interaction::new(ctx.dim());
    for x in 0..ctx.sites() {
        let nx = ctx.number_operator::<T>(&SiteSet::single(x)).matrix;
        for y in x + 1..ctx.sites() {
            let ny = ctx.number_operator::<T>(&SiteSet::single(y)).matrix;
            let op = &nx * &ny;
            phi.insert_trusted(ctx, SiteSet::new([x, y]), linalg::scale(&op, v * pair_decay(ctx, x, y, alpha_tb)));
        }
    }
    phi
}

fn atomic_onsite<T: Real>(ctx: &FockContext, mu: T, pattern: &OnsitePattern) -> Result<OnSiteHamiltonian<T>> {
    let mut h0 = OnSiteHamiltonian::new(ctx.dim());
    for z in 0..ctx.sites() {
        let n = ctx.number_operator::<T>(&SiteSet::single(z)).matrix;
        let op = match pattern {
            OnsitePattern::Uniform => linalg::scale(&n, mu),
            OnsitePattern::Staggered if z % 2 == 0 => linalg::scale(&n, mu),
            OnsitePattern::Staggered => {
                let spin = T::count(ctx.spin());
                linalg::scale(&(linalg::identity::<T>(ctx.dim()) * C::new(spin, T::zero()) - n), mu)
            }
            OnsitePattern::Tilted { slope } => linalg::scale(&n, mu + T::lit(*slope) * T::count(z)),
        };
        h0.insert(ctx, z, op)?;
    }
    Ok(h0)
}

/// Support and operator of a configured perturbation.
pub fn perturbation<T: Real>(spec: &PerturbationSpec, ctx: &FockContext) -> Result<(SiteSet, Mat<T>)> {
    match spec {
        PerturbationSpec::Number { sites, strength } => {
            if let Some(&s) = sites.iter().find(|&&s| s >= ctx.sites()) {
                return Err(Error::OutOfRange(format!("site {s}")));
            }
            if sites.is_empty() {
                return Err(invalid("w.sites", "perturbation needs a non-empty support"));
            }
            let z = SiteSet::new(sites.iter().copied());
            let n = ctx.number_operator::<T>(&z).matrix;
            Ok((z, linalg::scale(&n, T::lit(*strength))))
        }
        PerturbationSpec::Hop { x, y, strength } => {
            if *x >= ctx.sites() || *y >= ctx.sites() || x == y {
                return Err(invalid("w", format!("bad hop pair ({x}, {y})")));
            }
            let op = hop_operator::<T>(ctx, *x, *y);
            Ok((SiteSet::new([*x, *y]), linalg::scale(&op, T::lit(*strength))))
        }
    }
}

/// Random even interaction with term norms `coupling·(1+d)^{-(α+1)}` on all pairs,
/// plus random on-site terms of norm at most `coupling`.
pub fn random_even_interaction<T: Real, R: Rng>(ctx: &FockContext, alpha: T, coupling: T, rng: &mut R) -> Interaction<T> {
    let mut phi = Interaction::new(ctx.dim());
    let n = ctx.sites();
    for x in 0..n {
        let z = SiteSet::single(x);
        let op = random_even_local(ctx, &z, rng);
        let target = coupling * T::lit(rng.random::<f64>());
        phi.insert_trusted(ctx, z, op_with_norm(ctx, &SiteSet::single(x), op, target));
        for y in x + 1..n {
            let z = SiteSet::new([x, y]);
            let op = random_even_local(ctx, &z, rng);
            let d = T::count(ctx.lattice().d(x, y));
            let target = coupling * decay(alpha + T::one(), d);
            phi.insert_trusted(ctx, z.clone(), op_with_norm(ctx, &z, op, target));
        }
    }
    phi
}

fn op_with_norm<T: Real>(ctx: &FockContext, z: &SiteSet, op: Mat<T>, target: T) -> Mat<T> {
    let nrm = ctx.local_norm(z, &op);
    if nrm == T::zero() {
        return op;
    }
    linalg::scale(&op, target / nrm)
}

/// Random even self-adjoint element of the algebra of `z`.
pub fn random_even_local<T: Real, R: Rng>(ctx: &FockContext, z: &SiteSet, rng: &mut R) -> Mat<T> {
    let split = ctx.split(z);
    let mut block = linalg::random_hermitian::<T, R>(split.dx(), rng);
    for i in 0..split.dx() {
        for j in 0..split.dx() {
            if (i ^ j).count_ones() % 2 == 1 {
                block[(i, j)] = C::new(T::zero(), T::zero());
            }
        }
    }
    split.embed(&block)
}
