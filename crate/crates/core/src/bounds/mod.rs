//! Evaluable Lieb–Robinson bounds with tracked constants.
//!
//! Every curve is normalized by `‖A‖‖B‖`, already includes the
//! `min{|X|,|Y|}` factor and is capped at the trivial value 2. The bound
//! engines work in `f64`: they produce certificates, not algebra.

mod certify;
mod closed;
mod iterate;

pub use certify::{certify, CertificateReport, PointReport};
pub use closed::{root_cone_bound, finite_range_bound, long_range_bound, iterated_closed_form, FiniteRangeVariant};
pub use iterate::{iterate_bound, CertifiedCurve, NormRoute};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interactions::Velocities;
use crate::lattice::LatticeGraph;
use crate::scalar::gamma;

/// The trivial bound `‖[A, B]‖ ≤ 2‖A‖‖B‖`, normalized.
pub const TRIVIAL: f64 = 2.0;

/// `Δ(u) = 2` for `u > 2`, `u` otherwise.
pub fn delta_cap(u: f64) -> Result<f64> {
    if u < 0.0 || u.is_nan() {
        return Err(invalid("u", format!("capping needs u ≥ 0, got {u}")));
    }
    Ok(if u > TRIVIAL { TRIVIAL } else { u })
}

pub(crate) fn cap(u: f64) -> f64 {
    if u > TRIVIAL || u.is_nan() {
        TRIVIAL
    } else {
        u
    }
}

/// `(1/ν) max{1, e Γ((μ+1)/ν)}`.
pub fn tail_constant(mu: f64, nu: f64) -> Result<f64> {
    if nu <= 0.0 {
        return Err(invalid("nu", "tail exponent must be positive"));
    }
    let shape = (mu + 1.0) / nu;
    let g = if shape > 0.0 { gamma(shape) } else { f64::INFINITY };
    Ok((std::f64::consts::E * g).max(1.0) / nu)
}

/// Upper bound on `∫_ρ^∞ e^{-x^ν} x^μ dx`.
pub fn stretched_tail_bound(mu: f64, nu: f64, rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(invalid("rho", "lower limit must be positive"));
    }
    Ok(tail_constant(mu, nu)? * (-rho.powf(nu)).exp() * (1.0 + rho.powf(mu - nu + 1.0)))
}

/// Parameters shared by all bound curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub dim: usize,
    pub c_lambda: f64,
    pub c_v: f64,
    /// `2e‖F_α‖_Λ ‖Φ‖_α`.
    pub v: f64,
    /// `max{v, ‖Φ‖_{α,1}}`.
    pub nu: f64,
    pub norm0: f64,
    pub norm1: f64,
    pub size_x: usize,
    pub size_y: usize,
    /// Largest term diameter; the full dynamics equals the truncation `< max_diam + 1`.
    pub max_diam: usize,
    /// Sphere sizes `|S_x(k)|` for every site, used by exact `‖λ‖_Λ` sums.
    pub spheres: Vec<Vec<usize>>,
}

impl BoundParams {
    pub fn new(g: &LatticeGraph, vel: &Velocities<f64>, alpha: f64, size_x: usize, size_y: usize, max_diam: usize) -> Result<Self> {
        if alpha <= g.dimension() as f64 {
            return Err(Error::DecayTooSlow { alpha, dim: g.dimension() });
        }
        if size_x == 0 || size_y == 0 {
            return Err(invalid("support", "observables need non-empty supports"));
        }
        Ok(Self {
            alpha,
            dim: g.dimension(),
            c_lambda: g.c_lambda_f(),
            c_v: g.c_v_f(),
            v: vel.v,
            nu: vel.nu,
            norm0: vel.norm0,
            norm1: vel.norm1,
            size_x,
            size_y,
            max_diam,
            spheres: (0..g.len()).map(|x| g.sphere_counts(x)).collect(),
        })
    }

    pub fn min_size(&self) -> f64 {
        self.size_x.min(self.size_y) as f64
    }

    pub fn diameter(&self) -> usize {
        self.spheres.iter().map(|s| s.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// `2^D C_Λ`.
    pub fn c_sphere_sum(&self) -> f64 {
        2f64.powi(self.dim as i32) * self.c_lambda
    }

    /// Explicit surface constant `4 C_Λ C^{tail}_{D-1,1}`.
    ///
    /// Substituting `q = ρ + R'u` and using `ρ + 1 + R'u ≤ (ρ + R')(1 + u)` for `R' ≥ 1`
    /// reduces the integral to `∫_0^∞ (1+u)^{D-1} e^{-u} du ≤ 2 C^{tail}_{D-1,1}`.
    pub fn c_lr(&self) -> f64 {
        4.0 * self.c_lambda * tail_constant(self.dim as f64 - 1.0, 1.0).expect("ν = 1")
    }

    /// Admissible σ interval `((D+1)/(α+1), 1)` of the iterated bound.
    pub fn sigma_window(&self) -> (f64, f64) {
        ((self.dim as f64 + 1.0) / (self.alpha + 1.0), 1.0)
    }

    /// `‖λ‖_Λ = sup_x Σ_k |S_x(k)| λ(k)` for a table `λ(0..=diam)`.
    pub fn lattice_norm(&self, lambda: &[f64]) -> f64 {
        self.spheres
            .iter()
            .map(|s| s.iter().zip(lambda).map(|(&c, &l)| c as f64 * l).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Interior grid of `count` points strictly inside `(lo, hi)`.
pub fn open_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64).collect()
}

/// Default number of σ values in pointwise minimizations.
pub const SIGMA_GRID: usize = 16;

/// Which bound a curve evaluates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case")]
pub enum BoundKind {
    FiniteRange { variant: FiniteRangeVariant, range: f64 },
    /// Minimum over a geometric grid of splitting radii.
    LongRange { radii: Vec<f64> },
    /// Minimum over a σ grid.
    RootCone { sigmas: Vec<f64> },
    IteratedClosed { constant: f64, sigma: f64 },
    IteratedCertified { depth: usize, sigmas: Vec<f64>, route: NormRoute },
}

/// A bound as an evaluable function of distance and elapsed time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub params: BoundParams,
    pub kind: BoundKind,
}

impl BoundCurve {
    pub fn new(params: BoundParams, kind: BoundKind) -> Self {
        Self { params, kind }
    }

    /// Finite-range curve for the full dynamics.
    pub fn finite_range(params: BoundParams, variant: FiniteRangeVariant) -> Self {
        let range = params.max_diam as f64 + 1.0;
        Self::new(params, BoundKind::FiniteRange { variant, range })
    }

    pub fn long_range(params: BoundParams) -> Self {
        let top = 4.0 * (params.diameter().max(1) as f64);
        let radii = geometric_grid(1.0, top, 48);
        Self::new(params, BoundKind::LongRange { radii })
    }

    pub fn root_cone(params: BoundParams) -> Self {
        Self::new(params, BoundKind::RootCone { sigmas: open_grid(0.0, 1.0, SIGMA_GRID) })
    }

    pub fn iterated_certified(params: BoundParams, depth: usize) -> Self {
        let (lo, hi) = params.sigma_window();
        Self::new(params, BoundKind::IteratedCertified { depth, sigmas: open_grid(lo, hi, SIGMA_GRID), route: NormRoute::Exact })
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            BoundKind::FiniteRange { variant: FiniteRangeVariant::Crude, .. } => "finite_range",
            BoundKind::FiniteRange { variant: FiniteRangeVariant::Sharp, .. } => "finite_range_sharp",
            BoundKind::LongRange { .. } => "long_range",
            BoundKind::RootCone { .. } => "root_cone",
            BoundKind::IteratedClosed { .. } => "iterated_closed_form",
            BoundKind::IteratedCertified { .. } => "iterated_certified",
        }
    }

    /// Curve name followed by the constants that determine its values.
    pub fn provenance(&self) -> String {
        let p = &self.params;
        let detail = match &self.kind {
            BoundKind::FiniteRange { range, .. } => format!("range={range}"),
            BoundKind::LongRange { radii } => format!("radii={}", radii.len()),
            BoundKind::RootCone { sigmas } => format!("sigmas={}", sigmas.len()),
            BoundKind::IteratedClosed { constant, sigma } => format!("constant={constant};sigma={sigma}"),
            BoundKind::IteratedCertified { depth, sigmas, route } => format!("depth={depth};sigmas={};route={route:?}", sigmas.len()),
        };
        format!(
            "{}[alpha={};v={:.6e};nu={:.6e};c_v={:.6e};c_lambda={:.6e};c_lr={:.6e};m={};{detail}]",
            self.name(),
            p.alpha,
            p.v,
            p.nu,
            p.c_v,
            p.c_lambda,
            p.c_lr(),
            p.min_size()
        )
    }

    /// Normalized bound at integer distance `r` after elapsed time `dt`.
    pub fn eval(&self, r: usize, dt: f64) -> Result<f64> {
        let p = &self.params;
        let dt = dt.abs();
        match &self.kind {
            BoundKind::FiniteRange { variant, range } => {
                if r == 0 {
                    return Ok(TRIVIAL);
                }
                finite_range_bound(p, r as f64, dt, *range, *variant, None)
            }
            BoundKind::LongRange { radii } => prefix_min(r, |k| {
                radii.iter().map(|&rp| long_range_bound(p, k as f64, dt, rp)).try_fold(TRIVIAL, |a, b| b.map(|b| a.min(b)))
            }),
            BoundKind::RootCone { sigmas } => prefix_min(r, |k| {
                sigmas.iter().map(|&s| root_cone_bound(p, k as f64, dt, s)).try_fold(TRIVIAL, |a, b| b.map(|b| a.min(b)))
            }),
            BoundKind::IteratedClosed { constant, sigma } => iterated_closed_form(p, r as f64, dt, *sigma, *constant),
            BoundKind::IteratedCertified { depth, sigmas, route } => {
                Ok(iterate_bound(p, dt, *depth, sigmas, *route)?.value(r))
            }
        }
    }

    /// Values on a whole `(r, dt)` grid, reusing the certified tables per time.
    pub fn eval_grid(&self, rs: &[usize], dts: &[f64]) -> Result<Vec<Vec<f64>>> {
        dts.iter()
            .map(|&dt| match &self.kind {
                BoundKind::IteratedCertified { depth, sigmas, route } => {
                    let c = iterate_bound(&self.params, dt.abs(), *depth, sigmas, *route)?;
                    Ok(rs.iter().map(|&r| c.value(r)).collect())
                }
                _ => rs.iter().map(|&r| self.eval(r, dt)).collect(),
            })
            .collect()
    }
}

/// Bounds valid at distance `k` also hold at every larger distance.
fn prefix_min(r: usize, f: impl Fn(usize) -> Result<f64>) -> Result<f64> {
    if r == 0 {
        return Ok(TRIVIAL);
    }
    let mut best = TRIVIAL;
    for k in 1..=r {
        best = best.min(f(k)?);
    }
    Ok(best)
}

pub(crate) fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 || hi <= lo {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|k| lo * (ratio * k as f64).exp()).collect()
}
