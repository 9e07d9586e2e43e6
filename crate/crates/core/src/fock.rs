//! Matrix realization of the CAR algebra on a small lattice.
//!
//! Mode `m = site·spin + i` is bit `m` of the basis index. Ladder operators
//! carry the Jordan–Wigner string over all lower modes.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeGraph, SiteSet};
use crate::linalg::{self, Mat};
use crate::scalar::{Real, C};

/// Default cap on the Fock dimension (12 modes).
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Parity of an operator with respect to the total fermion parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        }
    }

    /// Parity of a product.
    pub fn times(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity of a sum.
    pub fn plus(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::Mixed
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
}

/// Operator with at most one nonzero entry per column: `|b⟩ ↦ coef[b]·|dst[b]⟩`.
///
/// Coefficients are exact Gaussian integers, so products of ladder and
/// Majorana operators are exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMap {
    dst: Vec<u32>,
    coef: Vec<Complex<i8>>,
}

impl SignedMap {
    pub(crate) fn from_parts(dst: Vec<u32>, coef: Vec<Complex<i8>>) -> Self {
        debug_assert_eq!(dst.len(), coef.len());
        Self { dst, coef }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dst: (0..dim as u32).collect(), coef: vec![Complex::new(1, 0); dim] }
    }

    pub fn dim(&self) -> usize {
        self.dst.len()
    }

    /// `self · other`.
    pub fn compose(&self, other: &SignedMap) -> SignedMap {
        let n = self.dim();
        let mut dst = vec![0; n];
        let mut coef = vec![Complex::new(0, 0); n];
        for b in 0..n {
            let c = other.coef[b];
            if c.is_zero() {
                continue;
            }
            let mid = other.dst[b] as usize;
            let c2 = self.coef[mid];
            if c2.is_zero() {
                continue;
            }
            dst[b] = self.dst[mid];
            coef[b] = c2 * c;
        }
        SignedMap { dst, coef }
    }

    /// Hermitian adjoint (the map is injective on its nonzero columns).
    pub fn adjoint(&self) -> SignedMap {
        let n = self.dim();
        let mut dst = vec![0; n];
        let mut coef = vec![Complex::new(0, 0); n];
        for b in 0..n {
            let c = self.coef[b];
            if !c.is_zero() {
                let t = self.dst[b] as usize;
                dst[t] = b as u32;
                coef[t] = c.conj();
            }
        }
        SignedMap { dst, coef }
    }

    pub fn scale_i(&self, k: u8) -> SignedMap {
        let mut phase = Complex::new(1i8, 0);
        for _ in 0..(k % 4) {
            phase = phase * Complex::new(0, 1);
        }
        SignedMap { dst: self.dst.clone(), coef: self.coef.iter().map(|&c| c * phase).collect() }
    }

    #[inline]
    pub fn column(&self, b: usize) -> (usize, Complex<i8>) {
        (self.dst[b] as usize, self.coef[b])
    }

    pub fn to_dense<T: Real>(&self) -> Mat<T> {
        let n = self.dim();
        let mut m = linalg::zeros(n);
        for b in 0..n {
            let c = self.coef[b];
            if !c.is_zero() {
                m[(self.dst[b] as usize, b)] = cast(c);
            }
        }
        m
    }

    /// `self · A`.
    pub fn left_mul<T: Real>(&self, a: &Mat<T>) -> Mat<T> {
        let n = self.dim();
        let coef: Vec<C<T>> = self.coef.iter().map(|&c| cast(c)).collect();
        let mut out = linalg::zeros(n);
        // Column-major storage: walk each column once.
        for j in 0..n {
            let (src, dst) = (a.column(j), &mut out.column_mut(j));
            for k in 0..n {
                if !self.coef[k].is_zero() {
                    dst[self.dst[k] as usize] += coef[k] * src[k];
                }
            }
        }
        out
    }

    /// `A · self`.
    pub fn right_mul<T: Real>(&self, a: &Mat<T>) -> Mat<T> {
        let n = self.dim();
        let mut out = linalg::zeros(n);
        for j in 0..n {
            let c = self.coef[j];
            if c.is_zero() {
                continue;
            }
            let c: C<T> = cast(c);
            let src = self.dst[j] as usize;
            for i in 0..n {
                out[(i, j)] = a[(i, src)] * c;
            }
        }
        out
    }

    /// Parity if every nonzero column maps between equal or opposite parity sectors.
    pub fn parity(&self) -> Parity {
        let mut even = true;
        let mut odd = true;
        for b in 0..self.dim() {
            if self.coef[b].is_zero() {
                continue;
            }
            let flips = (b as u32 ^ self.dst[b]).count_ones() % 2 == 1;
            if flips {
                even = false;
            } else {
                odd = false;
            }
        }
        match (even, odd) {
            (true, _) => Parity::Even,
            (false, true) => Parity::Odd,
            _ => Parity::Mixed,
        }
    }
}

fn cast<T: Real>(c: Complex<i8>) -> C<T> {
    C::new(T::lit(c.re as f64), T::lit(c.im as f64))
}

/// Exact residual of `{P, Q} − δ·1` for two signed maps, bounded by `√(‖·‖_1‖·‖_∞)`.
fn anticommutator_residual(p: &SignedMap, q: &SignedMap, delta: i32) -> f64 {
    let n = p.dim();
    let pq = p.compose(q);
    let qp = q.compose(p);
    // Columns of the residual have at most three entries; accumulate exactly.
    let mut col_sums = vec![0i64; n];
    let mut row_sums = vec![0i64; n];
    for b in 0..n {
        let mut entries: Vec<(usize, Complex<i32>)> = Vec::with_capacity(3);
        let mut push = |row: usize, c: Complex<i32>| {
            if let Some(e) = entries.iter_mut().find(|e| e.0 == row) {
                e.1 += c;
            } else {
                entries.push((row, c));
            }
        };
        for m in [&pq, &qp] {
            let (row, c) = m.column(b);
            if !c.is_zero() {
                push(row, Complex::new(c.re as i32, c.im as i32));
            }
        }
        if delta != 0 {
            push(b, Complex::new(-delta, 0));
        }
        for (row, c) in entries {
            let mag = c.re.unsigned_abs() as i64 + c.im.unsigned_abs() as i64;
            col_sums[b] += mag;
            row_sums[row] += mag;
        }
    }
    let c1 = col_sums.into_iter().max().unwrap_or(0) as f64;
    let cinf = row_sums.into_iter().max().unwrap_or(0) as f64;
    (c1 * cinf).sqrt()
}

/// Fock space of `spin·|Λ|` fermionic modes.
#[derive(Clone, Debug)]
pub struct FockContext {
    lattice: LatticeGraph,
    spin: usize,
    modes: usize,
    dim: usize,
    annihilators: Vec<SignedMap>,
}

impl FockContext {
    /// Builds a context with the default dimension cap (overridable by `LRLAB_DIM_CAP`).
    pub fn new(lattice: &LatticeGraph, spin: usize) -> Result<Self> {
        Self::with_cap(lattice, spin, dimension_cap())
    }

    pub fn with_cap(lattice: &LatticeGraph, spin: usize, cap: usize) -> Result<Self> {
        if spin == 0 {
            return Err(crate::error::invalid("spin", "spin multiplicity must be positive"));
        }
        let modes = spin * lattice.len();
        if modes >= 64 || (1u128 << modes) > cap as u128 {
            return Err(Error::DimensionCap { dim: 1u128 << modes.min(127), cap });
        }
        let dim = 1usize << modes;
        let annihilators = (0..modes).map(|m| annihilator_map(m, dim)).collect();
        Ok(Self { lattice: lattice.clone(), spin, modes, dim, annihilators })
    }

    pub fn lattice(&self) -> &LatticeGraph {
        &self.lattice
    }

    pub fn spin(&self) -> usize {
        self.spin
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> usize {
        self.lattice.len()
    }

    pub fn mode(&self, site: usize, spin_index: usize) -> Result<usize> {
        if site >= self.sites() || spin_index >= self.spin {
            return Err(Error::OutOfRange(format!("mode ({site}, {spin_index})")));
        }
        Ok(site * self.spin + spin_index)
    }

    /// `a_{z,i}` or `a*_{z,i}` as a dense local operator.
    pub fn ladder<T: Real>(&self, site: usize, spin_index: usize, kind: LadderKind) -> Result<LocalOperator<T>> {
        let m = self.mode(site, spin_index)?;
        let map = self.ladder_signed(m, kind);
        Ok(LocalOperator { matrix: map.to_dense(), support: SiteSet::single(site), parity: Parity::Odd })
    }

    /// Owned signed map of a ladder operator.
    pub fn ladder_signed(&self, mode: usize, kind: LadderKind) -> SignedMap {
        match kind {
            LadderKind::Annihilate => self.annihilators[mode].clone(),
            LadderKind::Create => self.annihilators[mode].adjoint(),
        }
    }

    /// Majorana operators `γ_{2m} = a_m + a*_m` and `γ_{2m+1} = −i(a_m − a*_m)`.
    pub fn majorana(&self, k: usize) -> SignedMap {
        let m = k / 2;
        let bit = 1u32 << m;
        let n = self.dim;
        let mut dst = vec![0u32; n];
        let mut coef = vec![Complex::new(0i8, 0); n];
        for b in 0..n {
            let occupied = b as u32 & bit != 0;
            let sign = jw_sign(b, m);
            dst[b] = b as u32 ^ bit;
            coef[b] = if k % 2 == 0 {
                Complex::new(sign, 0)
            } else if occupied {
                Complex::new(0, -sign)
            } else {
                Complex::new(0, sign)
            };
        }
        SignedMap { dst, coef }
    }

    /// Product `γ_{k1} γ_{k2} ⋯` of Majorana operators in the given order.
    pub fn majorana_monomial(&self, ks: &[usize]) -> SignedMap {
        ks.iter().fold(SignedMap::identity(self.dim), |acc, &k| acc.compose(&self.majorana(k)))
    }

    /// Largest CAR residual over all mode pairs (0 when exact).
    pub fn car_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..self.modes {
            let ap = &self.annihilators[p];
            let cp = ap.adjoint();
            for q in 0..self.modes {
                let aq = &self.annihilators[q];
                let cq = aq.adjoint();
                worst = worst.max(anticommutator_residual(ap, &cq, (p == q) as i32));
                worst = worst.max(anticommutator_residual(ap, aq, 0));
                worst = worst.max(anticommutator_residual(&cp, &cq, 0));
            }
        }
        worst
    }

    /// `±1` parity of each basis state.
    pub fn parity_sign(&self, b: usize) -> i8 {
        if b.count_ones() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn total_parity<T: Real>(&self) -> Mat<T> {
        let mut m = linalg::zeros(self.dim);
        for b in 0..self.dim {
            m[(b, b)] = C::new(T::lit(self.parity_sign(b) as f64), T::zero());
        }
        m
    }

    /// Even / odd / mixed by commutation with the total parity (tolerance 1e-10).
    pub fn parity_class<T: Real>(&self, a: &Mat<T>) -> Parity {
        self.parity_class_tol(a, T::lit(1e-10))
    }

    pub fn parity_class_tol<T: Real>(&self, a: &Mat<T>, tol: T) -> Parity {
        let mut same = T::zero();
        let mut cross = T::zero();
        for j in 0..self.dim {
            for i in 0..self.dim {
                let v = a[(i, j)].norm_sqr();
                if (i ^ j).count_ones() % 2 == 0 {
                    same += v;
                } else {
                    cross += v;
                }
            }
        }
        // ‖[P, A]‖ ≤ 2‖A_cross‖_F and ‖{P, A}‖ ≤ 2‖A_same‖_F.
        let two = T::lit(2.0);
        let scale = T::one().max((same + cross).sqrt());
        let even = two * cross.sqrt() <= tol * scale;
        let odd = two * same.sqrt() <= tol * scale;
        match (even, odd) {
            (true, _) => Parity::Even,
            (false, true) => Parity::Odd,
            _ => Parity::Mixed,
        }
    }

    /// `N_Z = Σ_{z∈Z} Σ_i a*_{z,i} a_{z,i}`.
    pub fn number_operator<T: Real>(&self, z: &SiteSet) -> LocalOperator<T> {
        let mask = self.mode_mask(z);
        let mut m = linalg::zeros(self.dim);
        for b in 0..self.dim {
            m[(b, b)] = C::new(T::count((b as u64 & mask).count_ones() as usize), T::zero());
        }
        LocalOperator { matrix: m, support: z.clone(), parity: Parity::Even }
    }

    /// `n_{z,i}` for a single mode.
    pub fn mode_number<T: Real>(&self, site: usize, spin_index: usize) -> Result<LocalOperator<T>> {
        let m = self.mode(site, spin_index)?;
        let mut out = linalg::zeros(self.dim);
        for b in 0..self.dim {
            if b >> m & 1 == 1 {
                out[(b, b)] = C::new(T::one(), T::zero());
            }
        }
        Ok(LocalOperator { matrix: out, support: SiteSet::single(site), parity: Parity::Even })
    }

    /// Bitmask of the modes sitting on `z`.
    pub fn mode_mask(&self, z: &SiteSet) -> u64 {
        z.iter().fold(0u64, |acc, s| acc | (((1u64 << self.spin) - 1) << (s * self.spin)))
    }

    /// Basis reordering that puts the modes of `sites` first.
    pub fn split(&self, sites: &SiteSet) -> ModeSplit {
        ModeSplit::new(self.dim, self.modes, self.mode_mask(sites))
    }

    /// Trace-preserving conditional expectation onto the algebra of `x`.
    pub fn conditional_expectation<T: Real>(&self, x: &SiteSet, a: &Mat<T>) -> Mat<T> {
        let split = self.split(x);
        split.embed(&split.reduce(a))
    }

    /// The `d_X × d_X` block `Ã` with `E_X(A) = Ã ⊗ 1` in the reordered basis.
    pub fn local_block<T: Real>(&self, x: &SiteSet, a: &Mat<T>) -> Mat<T> {
        self.split(x).reduce(a)
    }

    /// Embeds a block acting on the modes of `x` into the full Fock space.
    pub fn embed<T: Real>(&self, x: &SiteSet, block: &Mat<T>) -> Mat<T> {
        self.split(x).embed(block)
    }

    /// Operator norm of an element of the algebra of `x`, computed on its block.
    pub fn local_norm<T: Real>(&self, x: &SiteSet, a: &Mat<T>) -> T {
        linalg::spectral_norm(&self.local_block(x, a))
    }

    /// Normalized Hilbert–Schmidt distance `‖A − E_Z(A)‖_2 / √dim`.
    pub fn localization_defect<T: Real>(&self, z: &SiteSet, a: &Mat<T>) -> T {
        let e = self.conditional_expectation(z, a);
        linalg::frobenius(&(a - e)) / T::count(self.dim).sqrt()
    }

    /// `max_M ‖[A, M]‖ / ‖A‖` over all Majorana monomials `M` on the complement of `x`.
    ///
    /// For even `A`, `E_X(A)` is the average of `M A M*` over these monomials, so
    /// `‖A − E_X(A)‖ ≤ η ‖A‖` with this `η`.
    pub fn commutator_eta<T: Real>(&self, x: &SiteSet, a: &Mat<T>) -> T {
        let outside: Vec<usize> = (0..self.modes).filter(|m| self.mode_mask(x) >> m & 1 == 0).collect();
        let gammas: Vec<usize> = outside.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let norm_a = linalg::spectral_norm(a);
        if norm_a == T::zero() {
            return T::zero();
        }
        let mut eta = T::zero();
        for subset in 1u64..(1u64 << gammas.len()) {
            let ks: Vec<usize> = (0..gammas.len()).filter(|i| subset >> i & 1 == 1).map(|i| gammas[i]).collect();
            let m = self.majorana_monomial(&ks);
            let c = m.right_mul(a) - m.left_mul(a);
            eta = eta.max(linalg::spectral_norm(&c));
        }
        eta / norm_a
    }

    /// Smallest support found by greedy site removal, starting from all sites.
    pub fn support_of<T: Real>(&self, a: &Mat<T>, tol: T) -> SiteSet {
        let mut z = self.lattice.sites();
        for site in 0..self.sites() {
            let trial = z.remove(site);
            if self.localization_defect(&trial, a) <= tol {
                z = trial;
            }
        }
        z
    }
}

#[inline]
fn jw_sign(b: usize, m: usize) -> i8 {
    if (b & ((1usize << m) - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn annihilator_map(m: usize, dim: usize) -> SignedMap {
    let mut dst = vec![0u32; dim];
    let mut coef = vec![Complex::new(0i8, 0); dim];
    for b in 0..dim {
        if b >> m & 1 == 1 {
            dst[b] = (b ^ (1 << m)) as u32;
            coef[b] = Complex::new(jw_sign(b, m), 0);
        }
    }
    SignedMap { dst, coef }
}

/// Index split `b ↔ (x, y)` with the fermionic reordering sign.
///
/// In the reordered basis (modes of X first) the algebra of X is `B(H_X) ⊗ 1`.
/// The sign of basis state `b` is `(−1)^{#(i∈Y occupied, j∈X occupied, i<j)}`.
#[derive(Clone, Debug)]
pub struct ModeSplit {
    dx: usize,
    dy: usize,
    /// `index[x·dy + y] = b`.
    index: Vec<u32>,
    sign: Vec<i8>,
}

impl ModeSplit {
    pub fn new(dim: usize, modes: usize, xmask: u64) -> Self {
        let xm: Vec<usize> = (0..modes).filter(|m| xmask >> m & 1 == 1).collect();
        let ym: Vec<usize> = (0..modes).filter(|m| xmask >> m & 1 == 0).collect();
        let dx = 1usize << xm.len();
        let dy = 1usize << ym.len();
        let mut index = vec![0u32; dim];
        let mut sign = vec![1i8; dim];
        for b in 0..dim {
            let mut x = 0usize;
            for (i, &m) in xm.iter().enumerate() {
                x |= (b >> m & 1) << i;
            }
            let mut y = 0usize;
            for (i, &m) in ym.iter().enumerate() {
                y |= (b >> m & 1) << i;
            }
            index[x * dy + y] = b as u32;
            // For each occupied X mode count occupied Y modes below it.
            let mut swaps = 0u32;
            for &m in &xm {
                if b >> m & 1 == 1 {
                    let below = (b as u64) & ((1u64 << m) - 1) & !xmask;
                    swaps += below.count_ones();
                }
            }
            sign[b] = if swaps % 2 == 0 { 1 } else { -1 };
        }
        Self { dx, dy, index, sign }
    }

    /// Generic tensor split without reordering signs (used for spin systems).
    pub(crate) fn from_tables(dx: usize, dy: usize, index: Vec<u32>) -> Self {
        let n = index.len();
        Self { dx, dy, index, sign: vec![1; n] }
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> (usize, i8) {
        let b = self.index[x * self.dy + y] as usize;
        (b, self.sign[b])
    }

    /// Normalized partial trace over the complement in the reordered basis.
    pub fn reduce<T: Real>(&self, a: &Mat<T>) -> Mat<T> {
        let mut out = linalg::zeros(self.dx);
        let inv = T::one() / T::count(self.dy);
        for xp in 0..self.dx {
            for x in 0..self.dx {
                let mut acc = C::zero();
                for y in 0..self.dy {
                    let (b, s) = self.at(x, y);
                    let (bp, sp) = self.at(xp, y);
                    let v = a[(b, bp)];
                    acc += if s == sp { v } else { -v };
                }
                out[(x, xp)] = acc * inv;
            }
        }
        out
    }

    /// `Ã ⊗ 1` mapped back to the standard basis.
    pub fn embed<T: Real>(&self, block: &Mat<T>) -> Mat<T> {
        let n = self.dx * self.dy;
        let mut out = linalg::zeros(n);
        for xp in 0..self.dx {
            for x in 0..self.dx {
                let v = block[(x, xp)];
                if v.is_zero() {
                    continue;
                }
                for y in 0..self.dy {
                    let (b, s) = self.at(x, y);
                    let (bp, sp) = self.at(xp, y);
                    out[(b, bp)] = if s == sp { v } else { -v };
                }
            }
        }
        out
    }
}

/// Dense operator with declared support and parity tag.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator<T: Real> {
    pub matrix: Mat<T>,
    pub support: SiteSet,
    pub parity: Parity,
}

impl<T: Real> LocalOperator<T> {
    pub fn new(matrix: Mat<T>, support: SiteSet, parity: Parity) -> Self {
        Self { matrix, support, parity }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: linalg::identity(dim), support: SiteSet::empty(), parity: Parity::Even }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), support: self.support.clone(), parity: self.parity }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self { matrix: &self.matrix * c, support: self.support.clone(), parity: self.parity }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
            support: self.support.union(&other.support),
            parity: self.parity.plus(other.parity),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
            support: self.support.union(&other.support),
            parity: self.parity.times(other.parity),
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let parity = self.parity.times(other.parity);
        Self {
            matrix: linalg::commutator(&self.matrix, &other.matrix),
            support: self.support.union(&other.support),
            parity,
        }
    }

    /// Checks the declared support and parity tag against the matrix.
    pub fn verify(&self, ctx: &FockContext, tol: T) -> Result<()> {
        if ctx.localization_defect(&self.support, &self.matrix) > tol {
            return Err(Error::SupportViolation);
        }
        let found = ctx.parity_class_tol(&self.matrix, tol);
        if self.parity != Parity::Mixed && found != self.parity && found != Parity::Even {
            return Err(Error::NotEven(found.name()));
        }
        Ok(())
    }
}

/// Dimension cap, honoring the `LRLAB_DIM_CAP` environment variable.
pub fn dimension_cap() -> usize {
    std::env::var("LRLAB_DIM_CAP").ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_DIM_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec};
    use crate::linalg::{anticommutator, max_abs, spectral_norm};

    fn ctx(n: usize, spin: usize) -> FockContext {
        FockContext::with_cap(&build_lattice(&LatticeSpec::Path { n }).unwrap(), spin, 4096).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(ctx(2, 1).dim(), 4);
        assert_eq!(ctx(3, 1).dim(), 8);
        assert_eq!(ctx(2, 2).dim(), 16);
        let g = build_lattice(&LatticeSpec::Path { n: 13 }).unwrap();
        assert!(matches!(FockContext::with_cap(&g, 1, 4096), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn dense_car_relations() {
        let c = ctx(3, 1);
        let mut ops = Vec::new();
        for s in 0..3 {
            ops.push(c.ladder::<f64>(s, 0, LadderKind::Annihilate).unwrap().matrix);
        }
        for p in 0..3 {
            for q in 0..3 {
                let ac = anticommutator(&ops[p], &ops[q].adjoint());
                let expect = if p == q { linalg::identity::<f64>(8) } else { linalg::zeros(8) };
                assert!(max_abs(&(ac - expect)) < 1e-15);
                assert!(max_abs(&anticommutator(&ops[p], &ops[q])) < 1e-15);
            }
            assert!((spectral_norm(&ops[p]) - 1.0).abs() < 1e-12);
        }
        assert_eq!(c.car_residual(), 0.0);
    }

    #[test]
    fn parity_examples() {
        let c = ctx(2, 1);
        let a0 = c.ladder::<f64>(0, 0, LadderKind::Annihilate).unwrap();
        let n0 = c.mode_number::<f64>(0, 0).unwrap();
        assert_eq!(c.parity_class(&n0.matrix), Parity::Even);
        assert_eq!(c.parity_class(&a0.matrix), Parity::Odd);
        assert_eq!(c.parity_class(&(&a0.matrix + &n0.matrix)), Parity::Mixed);
    }

    #[test]
    fn number_operator_examples() {
        let c = ctx(3, 1);
        let empty = c.number_operator::<f64>(&SiteSet::empty());
        assert_eq!(max_abs(&empty.matrix), 0.0);
        let full = c.number_operator::<f64>(&SiteSet::range(3));
        let mut diag: Vec<f64> = (0..8).map(|b| full.matrix[(b, b)].re).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        diag.dedup();
        assert_eq!(diag, vec![0.0, 1.0, 2.0, 3.0]);
        let a0 = c.ladder::<f64>(0, 0, LadderKind::Annihilate).unwrap().matrix;
        let a1 = c.ladder::<f64>(1, 0, LadderKind::Annihilate).unwrap().matrix;
        let hop = a0.adjoint() * a1;
        assert!(max_abs(&linalg::commutator(&full.matrix, &hop)) < 1e-15);
    }

    #[test]
    fn support_examples() {
        let c = ctx(3, 1);
        let n0 = c.mode_number::<f64>(0, 0).unwrap().matrix;
        assert_eq!(c.support_of(&n0, 1e-12), SiteSet::single(0));
        let a0 = c.ladder::<f64>(0, 0, LadderKind::Annihilate).unwrap().matrix;
        let a1 = c.ladder::<f64>(1, 0, LadderKind::Annihilate).unwrap().matrix;
        let hop = a0.adjoint() * &a1 + a1.adjoint() * &a0;
        assert_eq!(c.support_of(&hop, 1e-12), SiteSet::new([0, 1]));
        assert_eq!(c.support_of(&linalg::identity::<f64>(8), 1e-12), SiteSet::empty());
        // Odd operators far down the Jordan–Wigner string stay local.
        let a2 = c.ladder::<f64>(2, 0, LadderKind::Annihilate).unwrap().matrix;
        assert_eq!(c.support_of(&a2, 1e-12), SiteSet::single(2));
    }

    #[test]
    fn expectation_examples() {
        let c = ctx(3, 1);
        let id = linalg::identity::<f64>(8);
        assert!(max_abs(&(c.conditional_expectation(&SiteSet::single(1), &id) - &id)) < 1e-15);
        let a1 = c.ladder::<f64>(1, 0, LadderKind::Annihilate).unwrap().matrix;
        let x = SiteSet::new([1, 2]);
        assert!(max_abs(&(c.conditional_expectation(&x, &a1) - &a1)) < 1e-15);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let a = linalg::random_complex::<f64, _>(8, &mut rng);
        let e = c.conditional_expectation(&SiteSet::empty(), &a);
        let tr = linalg::trace(&a) / C::new(8.0, 0.0);
        assert!(max_abs(&(e - id * tr)) < 1e-14);
    }

    #[test]
    fn signed_map_products_match_dense() {
        let c = ctx(3, 1);
        let m = c.majorana_monomial(&[0, 3, 5]);
        let dense = c.majorana(0).to_dense::<f64>() * c.majorana(3).to_dense::<f64>() * c.majorana(5).to_dense::<f64>();
        assert!(max_abs(&(m.to_dense::<f64>() - dense)) < 1e-15);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
        let a = linalg::random_complex::<f64, _>(8, &mut rng);
        assert!(max_abs(&(m.left_mul(&a) - m.to_dense::<f64>() * &a)) < 1e-13);
        assert!(max_abs(&(m.right_mul(&a) - &a * m.to_dense::<f64>())) < 1e-13);
        assert_eq!(c.majorana_monomial(&[1, 4]).parity(), Parity::Even);
    }
}
