//! Compare measured commutator norms against bound curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed excess of a measurement over a bound.
pub const CERTIFY_SLACK: f64 = 1e-9;

/// One `(r, dt)` point of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub r: usize,
    pub dt: f64,
    pub measured: f64,
    pub bounds: Vec<(String, f64)>,
    /// Curve attaining the minimum.
    pub active: String,
    /// `measured / min bound`.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub points: Vec<PointReport>,
    pub violations: usize,
    pub worst_ratio: f64,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `measured` and every curve are lists of `(r, dt, value)` on the same grid, in the same order.
pub fn certify(measured: &[(usize, f64, f64)], curves: &[(String, Vec<(usize, f64, f64)>)]) -> Result<CertificateReport> {
    if curves.is_empty() {
        return Err(Error::GridMismatch("no curves supplied".into()));
    }
    for (name, c) in curves {
        if c.len() != measured.len() {
            return Err(Error::GridMismatch(format!("`{name}` has {} points, measurements have {}", c.len(), measured.len())));
        }
        for (i, (a, b)) in measured.iter().zip(c).enumerate() {
            if a.0 != b.0 || a.1 != b.1 {
                return Err(Error::GridMismatch(format!("`{name}` point {i} is at ({}, {}), expected ({}, {})", b.0, b.1, a.0, a.1)));
            }
        }
    }
    let points: Vec<PointReport> = measured
        .iter()
        .enumerate()
        .map(|(i, &(r, dt, value))| {
            let bounds: Vec<(String, f64)> = curves.iter().map(|(n, c)| (n.clone(), c[i].2)).collect();
            let (active, least) = bounds
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(n, b)| (n.clone(), *b))
                .expect("non-empty");
            let ratio = if least > 0.0 {
                value / least
            } else if value == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let pass = bounds.iter().all(|(_, b)| value <= b + CERTIFY_SLACK);
            PointReport { r, dt, measured: value, bounds, active, ratio, pass }
        })
        .collect();
    let violations = points.iter().filter(|p| !p.pass).count();
    let worst_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(CertificateReport { points, violations, worst_ratio })
}
