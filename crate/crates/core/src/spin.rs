//! Spin lattices, the partial-trace conditional expectation and the support-size trick.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{cap, finite_range_bound, BoundParams, FiniteRangeVariant};
use crate::error::{invalid, Error, Result};
use crate::fock::{dimension_cap, FockContext, LadderKind, ModeSplit, SignedMap};
use crate::interactions::Velocities;
use crate::lattice::{decay, f_alpha_norm, LatticeGraph, NormMode, SiteSet};
use crate::linalg::{self, Mat};
use crate::scalar::{Real, C};

/// Tensor-product Hilbert space with local dimension `s` per site.
#[derive(Clone, Debug)]
pub struct SpinContext {
    lattice: LatticeGraph,
    local: usize,
    dim: usize,
}

impl SpinContext {
    pub fn new(lattice: &LatticeGraph, local: usize) -> Result<Self> {
        Self::with_cap(lattice, local, dimension_cap())
    }

    pub fn with_cap(lattice: &LatticeGraph, local: usize, cap: usize) -> Result<Self> {
        if local < 2 {
            return Err(invalid("local", "local dimension must be at least 2"));
        }
        let dim = (local as u128).checked_pow(lattice.len() as u32).unwrap_or(u128::MAX);
        if dim > cap as u128 {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { lattice: lattice.clone(), local, dim: dim as usize })
    }

    pub fn lattice(&self) -> &LatticeGraph {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local(&self) -> usize {
        self.local
    }

    pub fn sites(&self) -> usize {
        self.lattice.len()
    }

    /// Factor `x` is the digit of weight `s^x` in the basis index.
    pub fn split(&self, x: &SiteSet) -> ModeSplit {
        let n = self.sites();
        let xs: Vec<usize> = x.iter().collect();
        let ys: Vec<usize> = (0..n).filter(|s| !x.contains(*s)).collect();
        let s = self.local;
        let dx = s.pow(xs.len() as u32);
        let dy = s.pow(ys.len() as u32);
        let mut index = vec![0u32; self.dim];
        let digit = |b: usize, site: usize| b / s.pow(site as u32) % s;
        for b in 0..self.dim {
            let pack = |sites: &[usize]| sites.iter().rev().fold(0usize, |acc, &site| acc * s + digit(b, site));
            index[pack(&xs) * dy + pack(&ys)] = b as u32;
        }
        ModeSplit::from_tables(dx, dy, index)
    }

    /// `block ⊗ 1` with `block` acting on the factors of `x`.
    pub fn embed<T: Real>(&self, x: &SiteSet, block: &Mat<T>) -> Mat<T> {
        self.split(x).embed(block)
    }

    /// Normalized partial trace over the factors outside `x`, re-embedded.
    pub fn conditional_expectation<T: Real>(&self, x: &SiteSet, a: &Mat<T>) -> Mat<T> {
        if x.len() == self.sites() {
            return a.clone();
        }
        let split = self.split(x);
        split.embed(&split.reduce(a))
    }

    /// Single-site operator `op` (size `s × s`) at `site`.
    pub fn site_operator<T: Real>(&self, site: usize, op: &Mat<T>) -> Mat<T> {
        self.embed(&SiteSet::single(site), op)
    }

    /// Pauli string `⊗ σ_{k}` with letters `1 = X`, `2 = Y`, `3 = Z` (qubits only).
    pub fn pauli_string(&self, word: &[(usize, u8)]) -> Result<SignedMap> {
        if self.local != 2 {
            return Err(invalid("local", "Pauli strings need qubits"));
        }
        let mut dst: Vec<u32> = (0..self.dim as u32).collect();
        let mut coef = vec![Complex::new(1i8, 0); self.dim];
        for &(site, letter) in word {
            if site >= self.sites() || !(1..=3).contains(&letter) {
                return Err(invalid("word", "site or Pauli letter out of range"));
            }
            for b in 0..self.dim {
                let bit = dst[b] >> site & 1;
                let phase = match (letter, bit) {
                    (1, _) => Complex::new(1, 0),
                    (2, 0) => Complex::new(0, 1),
                    (2, _) => Complex::new(0, -1),
                    (_, 0) => Complex::new(1, 0),
                    _ => Complex::new(-1, 0),
                };
                coef[b] = coef[b] * phase;
                if letter != 3 {
                    dst[b] ^= 1 << site;
                }
            }
        }
        Ok(SignedMap::from_parts(dst, coef))
    }

    /// Random Hermitian operator on `z`, normalized to unit norm.
    pub fn random_local<T: Real, R: Rng>(&self, z: &SiteSet, rng: &mut R) -> Mat<T> {
        let d = self.local.pow(z.len() as u32);
        let h = linalg::random_hermitian::<T, R>(d, rng);
        let n = linalg::spectral_norm(&h);
        self.embed(z, &linalg::scale(&h, T::one() / n))
    }
}

pub fn pauli_x<T: Real>() -> Mat<T> {
    let mut m = linalg::zeros(2);
    m[(0, 1)] = C::new(T::one(), T::zero());
    m[(1, 0)] = C::new(T::one(), T::zero());
    m
}

pub fn pauli_z<T: Real>() -> Mat<T> {
    let mut m = linalg::zeros(2);
    m[(0, 0)] = C::new(T::one(), T::zero());
    m[(1, 1)] = C::new(-T::one(), T::zero());
    m
}

/// Terms of a spin Hamiltonian with their norms.
#[derive(Clone, Debug)]
pub struct SpinModel<T: Real> {
    pub terms: Vec<(SiteSet, Mat<T>, T)>,
}

impl<T: Real> SpinModel<T> {
    pub fn hamiltonian(&self, dim: usize) -> Mat<T> {
        self.terms.iter().fold(linalg::zeros(dim), |acc, (_, op, _)| acc + op)
    }

    /// `‖Φ‖_{α,n}` over the listed terms.
    pub fn norm(&self, g: &LatticeGraph, alpha: T, n: u32) -> T {
        let mut per_site = vec![T::zero(); g.len()];
        for (z, _, norm) in &self.terms {
            let w = T::count(z.len()).powi(n as i32) * *norm / decay(alpha, T::count(g.diam(z)));
            for s in z.iter() {
                per_site[s] += w;
            }
        }
        per_site.into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max_diameter(&self, g: &LatticeGraph) -> usize {
        self.terms.iter().map(|(z, _, _)| g.diam(z)).max().unwrap_or(0)
    }

    pub fn velocities(&self, g: &LatticeGraph, alpha: T) -> Result<Velocities<T>> {
        if alpha <= T::count(g.dimension()) {
            return Err(Error::DecayTooSlow { alpha: alpha.as_f64(), dim: g.dimension() });
        }
        let f_alpha = f_alpha_norm(g, alpha, NormMode::Exact)?;
        let norm0 = self.norm(g, alpha, 0);
        let norm1 = self.norm(g, alpha, 1);
        let v = T::lit(2.0) * T::e() * f_alpha * norm0;
        Ok(Velocities { v, nu: v.max(norm1), f_alpha, norm0, norm1 })
    }
}

/// Transverse-field Ising chain with random couplings:
/// `Σ_{x<y} J_{xy}(1+d)^{-α_tb} Z_x Z_y + Σ_x (h_x X_x + g_x Z_x)`, all coefficients in `[−1, 1]`.
pub fn random_tfim<T: Real, R: Rng>(ctx: &SpinContext, alpha_tb: f64, rng: &mut R) -> Result<SpinModel<T>> {
    if ctx.local() != 2 {
        return Err(invalid("local", "the Ising model needs qubits"));
    }
    let (x, z) = (pauli_x::<T>(), pauli_z::<T>());
    let g = ctx.lattice();
    let mut terms = Vec::new();
    for a in 0..ctx.sites() {
        let (h, f): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let op = ctx.site_operator(a, &(linalg::scale(&x, T::lit(h)) + linalg::scale(&z, T::lit(f))));
        terms.push((SiteSet::single(a), op, T::lit(h.hypot(f))));
    }
    for a in 0..ctx.sites() {
        for b in a + 1..ctx.sites() {
            let j: f64 = rng.random_range(-1.0..1.0) * decay(alpha_tb, g.d(a, b) as f64);
            let op = ctx.site_operator(a, &z) * ctx.site_operator(b, &z);
            terms.push((SiteSet::new([a, b]), linalg::scale(&op, T::lit(j)), T::lit(j.abs())));
        }
    }
    Ok(SpinModel { terms })
}

/// Terms of the bound `‖(id − E_{Λ\Y})(A)‖ ≤ Σ_y ‖(id − E_{Λ\{y\}})(A)‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Telescoping {
    /// `‖(id − E_{Λ\Y})(A)‖`.
    pub direct: f64,
    /// `Σ_y ‖(id − E_{Λ\{y\}})(A)‖`.
    pub sum: f64,
    /// `‖E_{Λ\Y_{k−1}}(A) − E_{Λ\Y_k}(A)‖` along the enumeration.
    pub chain: Vec<f64>,
}

impl Telescoping {
    pub fn holds(&self) -> bool {
        self.direct <= self.sum + 1e-12 * self.sum.max(1.0)
    }
}

pub fn telescoping_localization<T: Real>(ctx: &SpinContext, order: &[usize], a: &Mat<T>) -> Telescoping {
    let n = ctx.sites();
    let all = SiteSet::range(n);
    let y = SiteSet::new(order.iter().copied());
    let direct = linalg::spectral_norm(&(a - ctx.conditional_expectation(&all.difference(&y), a))).as_f64();
    let sum = order
        .iter()
        .map(|&s| linalg::spectral_norm(&(a - ctx.conditional_expectation(&all.remove(s), a))).as_f64())
        .sum();
    let mut chain = Vec::with_capacity(order.len());
    let mut prev = a.clone();
    let mut removed = SiteSet::empty();
    for &s in order {
        removed = removed.union(&SiteSet::single(s));
        let next = ctx.conditional_expectation(&all.difference(&removed), a);
        chain.push(linalg::spectral_norm(&(&prev - &next)).as_f64());
        prev = next;
    }
    Telescoping { direct, sum, chain }
}

/// `Δ(2 min{|X|,|Y|} f(d(X,Y)))` from a singleton-argument base bound `f(r)`.
pub fn single_trick(g: &LatticeGraph, x: &SiteSet, y: &SiteSet, f: impl Fn(usize) -> Result<f64>) -> Result<f64> {
    let m = x.len().min(y.len()) as f64;
    Ok(cap(2.0 * m * f(g.set_distance(x, y))?))
}

/// `Δ(4 Σ_{x∈X} Σ_{y∈Y} f(d(x,y)))`.
pub fn double_trick(g: &LatticeGraph, x: &SiteSet, y: &SiteSet, f: impl Fn(usize) -> Result<f64>) -> Result<f64> {
    let mut total = 0.0;
    for a in x.iter() {
        for b in y.iter() {
            total += f(g.d(a, b))?;
        }
    }
    Ok(cap(4.0 * total))
}

/// Evidence that the parity-free trick input is unavailable for fermions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    /// `‖[a_0, a_1]‖`.
    pub odd_commutator: f64,
    /// `‖a_0 a_1‖`.
    pub product_norm: f64,
    /// `‖[n_0, a_1]‖`, zero by the CAR.
    pub even_odd_commutator: f64,
    /// Trick curve built from the even-restricted sharp bound at `t = 0`.
    pub even_trick_curve: f64,
    /// Whether the odd commutator exceeds that curve.
    pub trick_fails: bool,
    /// `Σ_{y∉X_r} f(d(X, y))` with the sharp finite-range `f` at unit time.
    pub fallback_sum: f64,
}

/// Runs on sites 0 and 1 of `ctx`; the fallback uses `X = {0}` fattened by `r`.
pub fn fermionic_obstruction_demo(ctx: &FockContext, params: &BoundParams, r: usize) -> Result<ObstructionReport> {
    if ctx.sites() < 2 {
        return Err(invalid("ctx", "need at least two sites"));
    }
    let a0 = ctx.ladder::<f64>(0, 0, LadderKind::Annihilate)?.matrix;
    let a1 = ctx.ladder::<f64>(1, 0, LadderKind::Annihilate)?.matrix;
    let n0 = ctx.mode_number::<f64>(0, 0)?.matrix;
    let odd = linalg::spectral_norm(&linalg::commutator(&a0, &a1));
    let product = linalg::spectral_norm(&(&a0 * &a1));
    let even_odd = linalg::spectral_norm(&linalg::commutator(&n0, &a1));
    let range = params.max_diam as f64 + 1.0;
    let sharp = |dt: f64| move |d: usize| finite_range_bound(params, d as f64, dt, range, FiniteRangeVariant::Sharp, None);
    let g = ctx.lattice();
    let curve = single_trick(g, &SiteSet::single(0), &SiteSet::single(1), sharp(0.0))?;
    let x = SiteSet::single(0);
    let fat = g.fatten(&x, r);
    let f = sharp(1.0);
    let fallback = (0..ctx.sites())
        .filter(|y| !fat.contains(*y))
        .map(|y| f(g.set_distance(&x, &SiteSet::single(y))))
        .sum::<Result<f64>>()?;
    Ok(ObstructionReport {
        odd_commutator: odd,
        product_norm: product,
        even_odd_commutator: even_odd,
        even_trick_curve: curve,
        trick_fails: odd > curve + 1e-9,
        fallback_sum: fallback,
    })
}
