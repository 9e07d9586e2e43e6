//! Scalar abstraction shared by every numerical module.
//!
//! All routines are written against [`Real`], which is satisfied by `f32`
//! and `f64`. Tolerances quoted throughout the crate assume `f64`.

use std::fmt;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type used by the lattice, operator and bound machinery.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + Copy + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts an integer count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

/// Modulus of a complex number without requiring `num_traits::Float`.
#[inline]
pub fn modulus<T: Real>(z: C<T>) -> T {
    nalgebra::ComplexField::modulus(z)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "ln_gamma requires a positive argument");
    let half = T::lit(0.5);
    if x < half {
        // Reflection keeps the series in its accurate range.
        let pi = T::pi();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::count(k));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * T::two_pi().ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Gamma function for `x > 0`.
pub fn gamma<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// Gauss-Legendre nodes and weights on [-1, 1] (10 points).
pub(crate) const GL10: [(f64, f64); 10] = [
    (-0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
    (-0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (-0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (-0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (-0.148_874_338_981_631_22, 0.295_524_224_714_752_87),
    (0.148_874_338_981_631_22, 0.295_524_224_714_752_87),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
];

/// Composite 10-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize) -> T {
    let panels = panels.max(1);
    let h = (b - a) / T::count(panels);
    let half = T::lit(0.5);
    let mut total = T::zero();
    for p in 0..panels {
        let lo = a + h * T::count(p);
        let mid = lo + half * h;
        let mut s = T::zero();
        for &(x, w) in GL10.iter() {
            s += T::lit(w) * f(mid + half * h * T::lit(x));
        }
        total += s * half * h;
    }
    total
}

/// Sine integral `Si(x) = ∫_0^x sin(u)/u du`.
pub fn sine_integral<T: Real>(x: T) -> T {
    if x < T::zero() {
        return -sine_integral(-x);
    }
    if x == T::zero() {
        return T::zero();
    }
    let panels = (x.as_f64().ceil() as usize).max(1);
    integrate(
        |u: T| if u == T::zero() { T::one() } else { u.sin() / u },
        T::zero(),
        x,
        panels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_factorials() {
        let mut fact = 1.0_f64;
        for n in 1..15 {
            assert!((gamma(n as f64) - fact).abs() <= 1e-12 * fact, "Γ({n})");
            fact *= n as f64;
        }
        assert!((gamma(0.5_f64) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_in_single_precision() {
        assert!((gamma(5.0_f32) - 24.0).abs() < 1e-3);
    }

    #[test]
    fn sine_integral_reference_values() {
        // Abramowitz & Stegun table 5.1.
        assert!((sine_integral(1.0_f64) - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((sine_integral(10.0_f64) - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((sine_integral(-2.0_f64) + 1.605_412_976_802_695).abs() < 1e-14);
    }

    #[test]
    fn quadrature_of_polynomial_is_exact() {
        let v = integrate(|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 3);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }
}
