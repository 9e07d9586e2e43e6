//! Closed-form bounds.

use serde::{Deserialize, Serialize};

use super::{cap, BoundParams, TRIVIAL};
use crate::error::{invalid, Result};
use crate::scalar::gamma;

/// Finite-range bound flavour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteRangeVariant {
    /// `Δ(2m e^{vδ − r/R})`.
    Crude,
    /// `2m (e^{I} − 1) e^{−r/R}`, disjoint supports only.
    Sharp,
}

/// Bound for dynamics truncated to `diam(Z) < range`.
///
/// `integral` is `2e‖F_α‖_Λ ∫‖Φ(θ)‖_α dθ` over the elapsed window; it defaults to `v·dt`.
pub fn finite_range_bound(
    p: &BoundParams,
    r: f64,
    dt: f64,
    range: f64,
    variant: FiniteRangeVariant,
    integral: Option<f64>,
) -> Result<f64> {
    if range < 1.0 {
        return Err(invalid("range", "truncation range must be at least 1"));
    }
    if r < 0.0 {
        return Err(invalid("r", "distance must be non-negative"));
    }
    let m = p.min_size();
    Ok(match variant {
        FiniteRangeVariant::Crude => cap(2.0 * m * (p.v * dt - r / range).exp()),
        FiniteRangeVariant::Sharp => {
            if r == 0.0 {
                return Err(invalid("r", "the sharp finite-range bound needs disjoint supports"));
            }
            let i = integral.unwrap_or(p.v * dt);
            cap(2.0 * m * i.exp_m1() * (-r / range).exp())
        }
    })
}

/// Long-range bound with splitting radius `R' ≥ 1`.
pub fn long_range_bound(p: &BoundParams, r: f64, dt: f64, split: f64) -> Result<f64> {
    if split < 1.0 {
        return Err(invalid("split", "splitting radius must be at least 1"));
    }
    if r == 0.0 {
        return Ok(TRIVIAL);
    }
    let d = p.dim as f64;
    let light = (p.nu * dt - r / split).exp();
    let tail = p.norm1 * dt * (split + 1.0).powf(-p.alpha);
    let volume = 2.0 * p.c_v * tail * (r + 1.0).powf(d);
    let surface = p.c_lr() * tail * (r + split).powf(d - 1.0) * split * light;
    Ok(cap(2.0 * p.min_size() * (light + volume + surface)))
}

/// Constant of the root-cone bound.
///
/// `(r + r^σ)^{D−1} r^σ ≤ 2^{D−1}(r+1)^D`, so the surface constant needs
/// `2^{D−1}` as well as `2^{D(1−σ)}` once `D ≥ 2`.
pub fn root_cone_constant(p: &BoundParams, sigma: f64) -> f64 {
    let d = p.dim as f64;
    let surface = 2f64.powf(d * (1.0 - sigma)).max(2f64.powf(d - 1.0));
    (2.0 * p.c_v).max(surface * p.c_lr())
}

/// Root-cone bound from the splitting radius `R' = r^σ`.
pub fn root_cone_bound(p: &BoundParams, r: f64, dt: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma", format!("σ = {sigma} outside (0, 1)")));
    }
    if r == 0.0 {
        return Ok(TRIVIAL);
    }
    let d = p.dim as f64;
    let light = (p.nu * dt - r.powf(1.0 - sigma)).exp();
    let c = root_cone_constant(p, sigma);
    let poly = c * p.norm1 * dt * (r + 1.0).powf(d - p.alpha * sigma) * (1.0 + light);
    Ok(cap(2.0 * p.min_size() * (light + poly)))
}

/// Iterated bound with a caller-supplied constant `C`, for shape studies only.
pub fn iterated_closed_form(p: &BoundParams, r: f64, dt: f64, sigma: f64, constant: f64) -> Result<f64> {
    let (lo, hi) = p.sigma_window();
    if !(sigma > lo && sigma < hi) {
        return Err(invalid("sigma", format!("σ = {sigma} outside ({lo}, {hi})")));
    }
    if r == 0.0 {
        return Ok(TRIVIAL);
    }
    let d = p.dim as f64;
    let c_sigma = constant * (sigma - lo).powi(-2) / (1.0 - sigma) * gamma(d / (1.0 - sigma));
    let x = p.nu * dt;
    let light = (x - r.powf(1.0 - sigma)).exp();
    let poly = c_sigma * (r + 1.0).powf(-sigma * p.alpha) * x * (1.0 + x.powf(d / (1.0 - sigma)));
    Ok(cap(2.0 * p.min_size() * (light + poly)))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn params(v: f64, norm1: f64) -> BoundParams {
        BoundParams {
            alpha: 3.0,
            dim: 1,
            c_lambda: 2.0,
            c_v: 5.0 / 3.0,
            v,
            nu: v.max(norm1),
            norm0: v / 10.0,
            norm1,
            size_x: 1,
            size_y: 1,
            max_diam: 4,
            spheres: vec![vec![1, 1, 1, 1, 1]],
        }
    }

    #[test]
    fn finite_range_examples() {
        let p = params(1.0, 1.0);
        assert_eq!(finite_range_bound(&p, 3.0, 0.0, 2.0, FiniteRangeVariant::Sharp, None).unwrap(), 0.0);
        assert_eq!(finite_range_bound(&p, 0.0, 0.5, 2.0, FiniteRangeVariant::Crude, None).unwrap(), 2.0);
        let v = finite_range_bound(&p, 2.0, 0.0, 2.0, FiniteRangeVariant::Sharp, Some(1.0)).unwrap();
        assert!((v - 2.0 * (std::f64::consts::E - 1.0) / std::f64::consts::E).abs() < 1e-12);
        assert!((v - 1.2642).abs() < 1e-4);
        assert!(finite_range_bound(&p, 0.0, 1.0, 2.0, FiniteRangeVariant::Sharp, None).is_err());
        assert!(finite_range_bound(&p, 1.0, 1.0, 0.5, FiniteRangeVariant::Crude, None).is_err());
    }

    #[test]
    fn long_range_examples() {
        let p = params(2.0, 3.0);
        let v = long_range_bound(&p, 5.0, 0.0, 2.0).unwrap();
        assert!((v - 2.0 * (-2.5f64).exp()).abs() < 1e-14);
        let zero = params(0.0, 0.0);
        let v = long_range_bound(&zero, 5.0, 0.7, 2.5).unwrap();
        assert!((v - 2.0 * (-2.0f64).exp()).abs() < 1e-14);
        assert!(long_range_bound(&p, 5.0, 0.1, 0.5).is_err());
    }

    #[test]
    fn long_range_dominates_root_cone_specialization() {
        let p = params(0.3, 0.4);
        for &r in &[2.0, 5.0, 9.0, 20.0] {
            for &s in &[0.2, 0.5, 0.8] {
                for &dt in &[0.01, 0.3, 1.0] {
                    let split = long_range_bound(&p, r, dt, f64::powf(r, s)).unwrap();
                    let cone = root_cone_bound(&p, r, dt, s).unwrap();
                    assert!(split <= cone + 1e-15, "r={r} σ={s} dt={dt}: {split} > {cone}");
                }
            }
        }
    }

    #[test]
    fn root_cone_examples() {
        let p = params(1.0, 1.0);
        assert_eq!(root_cone_bound(&p, 0.0, 0.3, 0.5).unwrap(), 2.0);
        let v = root_cone_bound(&p, 9.0, 0.0, 0.5).unwrap();
        assert!((v - 2.0 * (-3.0f64).exp()).abs() < 1e-14);
        assert!(root_cone_bound(&p, 9.0, 0.0, 1.0).is_err());
        // Far out the polynomial term dominates.
        let p = params(0.1, 0.05);
        let (s, dt) = (0.3, 0.2);
        let a = root_cone_bound(&p, 32.0, dt, s).unwrap();
        let b = root_cone_bound(&p, 64.0, dt, s).unwrap();
        let expect = (65.0f64 / 33.0).powf(1.0 - 3.0 * s);
        assert!((b / a / expect - 1.0).abs() < 1e-3, "{}", b / a / expect);
    }

    #[test]
    fn iterated_closed_examples() {
        let p = params(1.0, 1.0);
        let v = iterated_closed_form(&p, 16.0, 0.0, 0.75, 1.0).unwrap();
        assert!((v - 2.0 * (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(iterated_closed_form(&p, 0.0, 1.0, 0.75, 1.0).unwrap(), 2.0);
        assert!(iterated_closed_form(&p, 3.0, 1.0, 0.4, 1.0).is_err());
    }
}
