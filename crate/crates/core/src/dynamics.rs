//! Unitary propagators, Heisenberg evolution and commutator sweeps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockContext, LocalOperator, Parity};
use crate::interactions::{assemble, OnSiteHamiltonian, TimeDependentInteraction};
use crate::linalg::{self, Eigh, Mat};
use crate::scalar::{Real, C};

/// Integrator settings for time-dependent generators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    /// Target defect between successive extrapolated propagators.
    pub tol: f64,
    pub initial_steps: usize,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { tol: 1e-10, initial_steps: 4, max_steps: 1 << 14 }
    }
}

/// Hamiltonian sampler `θ ↦ H(θ)`.
pub type HamiltonianFn<T> = Arc<dyn Fn(T) -> Result<Mat<T>> + Send + Sync>;

#[derive(Clone)]
enum Generator<T: Real> {
    Constant(Arc<Eigh<T>>),
    Dependent(HamiltonianFn<T>),
}

/// Two-parameter family `U(t, s)` solving `i ∂_t U(t,s) = H(t) U(t,s)`, `U(s,s) = 1`.
#[derive(Clone)]
pub struct Propagator<T: Real> {
    generator: Generator<T>,
    dim: usize,
    settings: IntegratorSettings,
}

/// A propagator value with integrator diagnostics.
#[derive(Clone, Debug)]
pub struct Evolution<T: Real> {
    pub unitary: Mat<T>,
    pub unitarity_residual: T,
    pub steps: usize,
}

impl<T: Real> Propagator<T> {
    /// Exact spectral propagator of a fixed Hamiltonian.
    pub fn time_independent(h: &Mat<T>) -> Result<Self> {
        check_hermitian(h)?;
        let eig = Eigh::new(h)?;
        Ok(Self { dim: h.nrows(), generator: Generator::Constant(Arc::new(eig)), settings: IntegratorSettings::default() })
    }

    pub fn time_dependent(h: HamiltonianFn<T>, dim: usize, settings: IntegratorSettings) -> Self {
        Self { generator: Generator::Dependent(h), dim, settings }
    }

    /// Propagator of `Σ Φ(Z,t) + H_0`, optionally truncated to `diam(Z) < range`.
    pub fn from_interaction(
        ctx: &FockContext,
        phi: &TimeDependentInteraction<T>,
        h0: &OnSiteHamiltonian<T>,
        range: Option<usize>,
        settings: IntegratorSettings,
    ) -> Result<Self> {
        if phi.is_time_independent() {
            let (lo, _) = phi.interval();
            return Self::time_independent(&assemble(ctx, phi, h0, lo, range)?);
        }
        let ctx = ctx.clone();
        let phi = phi.clone();
        let h0 = h0.clone();
        let dim = ctx.dim();
        let f: HamiltonianFn<T> = Arc::new(move |t| assemble(&ctx, &phi, &h0, t, range));
        Ok(Self::time_dependent(f, dim, settings))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigen(&self) -> Option<&Eigh<T>> {
        match &self.generator {
            Generator::Constant(e) => Some(e),
            Generator::Dependent(_) => None,
        }
    }

    /// `U(t, s)`.
    pub fn propagate(&self, t: T, s: T) -> Result<Evolution<T>> {
        match &self.generator {
            Generator::Constant(eig) => {
                let u = eig.propagator(t - s);
                let res = linalg::unitarity_residual(&u);
                Ok(Evolution { unitary: u, unitarity_residual: res, steps: 0 })
            }
            Generator::Dependent(h) => self.integrate(h, t, s),
        }
    }

    fn integrate(&self, h: &HamiltonianFn<T>, t: T, s: T) -> Result<Evolution<T>> {
        if t == s {
            return Ok(Evolution { unitary: linalg::identity(self.dim), unitarity_residual: T::zero(), steps: 0 });
        }
        let tol = T::lit(self.settings.tol);
        let mut n = self.settings.initial_steps.max(1);
        let mut coarse = midpoint_product(h, t, s, n)?;
        let mut fine = midpoint_product(h, t, s, 2 * n)?;
        let four_thirds = C::new(T::lit(4.0 / 3.0), T::zero());
        let third = C::new(T::lit(1.0 / 3.0), T::zero());
        let mut prev = &fine * four_thirds - &coarse * third;
        loop {
            n *= 2;
            if 2 * n > self.settings.max_steps {
                return Err(Error::StepUnderflow { from: s.as_f64(), to: t.as_f64() });
            }
            coarse = fine;
            fine = midpoint_product(h, t, s, 2 * n)?;
            let next = &fine * four_thirds - &coarse * third;
            let defect = linalg::max_abs(&(&next - &prev));
            prev = next;
            if defect <= tol {
                let u = linalg::polar_unitary(&prev);
                let res = linalg::unitarity_residual(&u);
                return Ok(Evolution { unitary: u, unitarity_residual: res, steps: 2 * n });
            }
        }
    }
}

/// `Π_k exp(−i H(θ_k) h)` with midpoints `θ_k`, applied latest-time leftmost.
fn midpoint_product<T: Real>(h: &HamiltonianFn<T>, t: T, s: T, n: usize) -> Result<Mat<T>> {
    let step = (t - s) / T::count(n);
    let half = T::lit(0.5);
    let mut u: Option<Mat<T>> = None;
    for k in 0..n {
        let theta = s + step * (T::count(k) + half);
        let hk = h(theta)?;
        check_hermitian(&hk)?;
        let ek = Eigh::new(&hk)?.propagator(step);
        u = Some(match u {
            Some(acc) => ek * acc,
            None => ek,
        });
    }
    Ok(u.expect("at least one step"))
}

fn check_hermitian<T: Real>(h: &Mat<T>) -> Result<()> {
    let scale = T::one().max(linalg::max_abs(h));
    let r = linalg::hermiticity_residual(h);
    if r > T::lit(1e-12) * scale {
        return Err(Error::NotSelfAdjoint(r.as_f64()));
    }
    Ok(())
}

/// `τ(A) = U* A U`.
pub fn heisenberg<T: Real>(u: &Mat<T>, a: &Mat<T>) -> Result<Mat<T>> {
    if u.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(u.nrows(), a.nrows()));
    }
    Ok(u.adjoint() * a * u)
}

/// One row of a commutator sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub commutator: f64,
}

/// Commutator norms along a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// False when neither observable is even, so no Lieb–Robinson bound applies.
    pub lr_guarantee: bool,
    pub max_unitarity_residual: f64,
}

/// `‖[τ_{t,s}(A), B]‖` at each `t` of the grid.
pub fn lr_sweep<T: Real>(
    prop: &Propagator<T>,
    a: &LocalOperator<T>,
    b: &LocalOperator<T>,
    s: T,
    times: &[T],
) -> Result<Sweep> {
    let lr_guarantee = a.parity == Parity::Even || b.parity == Parity::Even;
    let mut points = Vec::with_capacity(times.len());
    let mut worst = 0.0f64;
    if let Some(eig) = prop.eigen() {
        // Work in the eigenbasis: only diagonal phases change with t.
        let ae = eig.to_eigenbasis(&a.matrix);
        let be = eig.to_eigenbasis(&b.matrix);
        for &t in times {
            let at = evolve_in_eigenbasis(eig, &ae, t - s);
            let c = linalg::commutator(&at, &be);
            points.push(SweepPoint { t: t.as_f64(), commutator: linalg::spectral_norm(&c).as_f64() });
        }
    } else {
        for &t in times {
            let ev = prop.propagate(t, s)?;
            worst = worst.max(ev.unitarity_residual.as_f64());
            let at = heisenberg(&ev.unitary, &a.matrix)?;
            let c = linalg::commutator(&at, &b.matrix);
            points.push(SweepPoint { t: t.as_f64(), commutator: linalg::spectral_norm(&c).as_f64() });
        }
    }
    Ok(Sweep { points, lr_guarantee, max_unitarity_residual: worst })
}

/// `e^{iHt} A e^{−iHt}` for `A` already expressed in the eigenbasis of `H`.
pub fn evolve_in_eigenbasis<T: Real>(eig: &Eigh<T>, a: &Mat<T>, t: T) -> Mat<T> {
    let n = eig.dim();
    let phases: Vec<C<T>> = eig.values.iter().map(|&e| C::new((e * t).cos(), (e * t).sin())).collect();
    Mat::from_fn(n, n, |i, j| phases[i] * a[(i, j)] * phases[j].conj())
}
