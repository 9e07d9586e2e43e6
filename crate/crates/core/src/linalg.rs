//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{modulus, Real, C};

/// Dense complex square matrix.
pub type Mat<T> = DMatrix<C<T>>;

pub fn zeros<T: Real>(n: usize) -> Mat<T> {
    Mat::from_element(n, n, C::zero())
}

pub fn identity<T: Real>(n: usize) -> Mat<T> {
    Mat::identity(n, n)
}

pub fn commutator<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a * b - b * a
}

pub fn anticommutator<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a * b + b * a
}

pub fn frobenius<T: Real>(a: &Mat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn max_abs<T: Real>(a: &Mat<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z)))
}

/// Largest entry of `a - a*` in absolute value.
pub fn hermiticity_residual<T: Real>(a: &Mat<T>) -> T {
    let n = a.nrows();
    let mut worst = T::zero();
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max(modulus(a[(i, j)] - a[(j, i)].conj()));
        }
    }
    worst
}

pub fn hermitian_part<T: Real>(a: &Mat<T>) -> Mat<T> {
    let half = C::new(T::lit(0.5), T::zero());
    (a + a.adjoint()) * half
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    pub vectors: Mat<T>,
}

impl<T: Real> Eigh<T> {
    pub fn new(h: &Mat<T>) -> Result<Self> {
        let n = h.nrows();
        if n != h.ncols() {
            return Err(Error::DimensionMismatch(n, h.ncols()));
        }
        if n == 0 {
            return Ok(Self { values: Vec::new(), vectors: zeros(0) });
        }
        let eig = SymmetricEigen::try_new(hermitian_part(h), T::default_epsilon(), 0)
            .ok_or(Error::EigenFailure)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V* A V`.
    pub fn to_eigenbasis(&self, a: &Mat<T>) -> Mat<T> {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// `V A V*`.
    pub fn from_eigenbasis(&self, a: &Mat<T>) -> Mat<T> {
        &self.vectors * a * self.vectors.adjoint()
    }

    /// Applies `f` to the spectrum: `V f(E) V*`.
    pub fn apply(&self, f: impl Fn(T) -> C<T>) -> Mat<T> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: T) -> Mat<T> {
        self.apply(|e| {
            let ph = -e * t;
            Complex::new(ph.cos(), ph.sin())
        })
    }

    /// Spectral projection onto eigenvalues selected by `keep`.
    pub fn projector(&self, keep: impl Fn(usize, T) -> bool) -> Mat<T> {
        let n = self.dim();
        let mut out = zeros(n);
        for j in 0..n {
            if keep(j, self.values[j]) {
                let v = self.vectors.column(j);
                out += &v * v.adjoint();
            }
        }
        out
    }
}

/// Operator norm (largest singular value).
pub fn spectral_norm<T: Real>(a: &Mat<T>) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::zero();
    }
    let scale = max_abs(a);
    if scale == T::zero() {
        return T::zero();
    }
    let tol = T::lit(1e-13) * scale;
    if hermiticity_residual(a) <= tol {
        return hermitian_norm(a);
    }
    let ia = a * C::new(T::zero(), T::one());
    if hermiticity_residual(&ia) <= tol {
        return hermitian_norm(&ia);
    }
    let gram = a.adjoint() * a;
    hermitian_norm(&gram).sqrt()
}

fn hermitian_norm<T: Real>(h: &Mat<T>) -> T {
    match Eigh::new(h) {
        Ok(e) => e.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs())),
        Err(_) => frobenius(h),
    }
}

/// Lower bound on the operator norm from a few power iterations on `A*A`.
pub fn norm_lower_bound<T: Real, R: Rng>(a: &Mat<T>, iters: usize, rng: &mut R) -> T {
    let n = a.ncols();
    let mut v = DVector::from_fn(n, |_, _| {
        C::new(T::lit(rng.random::<f64>() - 0.5), T::lit(rng.random::<f64>() - 0.5))
    });
    let mut best = T::zero();
    for _ in 0..iters {
        let nv = v.norm();
        if nv == T::zero() {
            break;
        }
        v /= C::new(nv, T::zero());
        let w = a * &v;
        best = best.max(w.norm());
        v = a.ad_mul(&w);
    }
    best
}

/// Residual `‖U*U − 1‖_max`.
pub fn unitarity_residual<T: Real>(u: &Mat<T>) -> T {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity::<T>(n)))
}

/// Nearest unitary in the polar sense.
///
/// Newton–Schulz when `u` is already close, SVD otherwise.
pub fn polar_unitary<T: Real>(u: &Mat<T>) -> Mat<T> {
    let n = u.nrows();
    let eye = identity::<T>(n);
    let three = C::new(T::lit(3.0), T::zero());
    let half = C::new(T::lit(0.5), T::zero());
    let mut x = u.clone();
    let mut res = max_abs(&(x.adjoint() * &x - &eye));
    if res < T::lit(0.1) {
        for _ in 0..8 {
            if res <= T::default_epsilon() * T::lit(8.0) {
                return x;
            }
            x = &x * (&eye * three - x.adjoint() * &x) * half;
            res = max_abs(&(x.adjoint() * &x - &eye));
        }
        if res <= T::lit(1e-13) {
            return x;
        }
    }
    let svd = u.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(l), Some(r)) => l * r,
        _ => x,
    }
}

pub fn scale<T: Real>(a: &Mat<T>, s: T) -> Mat<T> {
    a * C::new(s, T::zero())
}

pub fn trace<T: Real>(a: &Mat<T>) -> C<T> {
    (0..a.nrows()).fold(C::zero(), |acc, i| acc + a[(i, i)])
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian<T: Real, R: Rng>(n: usize, rng: &mut R) -> Mat<T> {
    let g = random_complex::<T, R>(n, rng);
    hermitian_part(&g)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_complex<T: Real, R: Rng>(n: usize, rng: &mut R) -> Mat<T> {
    use rand_distr::{Distribution, StandardNormal};
    Mat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C::new(T::lit(re), T::lit(im))
    })
}
