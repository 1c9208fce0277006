//! Truncated power series in one variable, plus the combinatorics needed to
//! take normally ordered expectations of `h(n̂)` in the Fock basis.
//!
//! Everything is generic over [`Real`], implemented for `f64` and for the
//! double-double type [`Dd`]. The Fock-basis sums alternate in sign and grow
//! like falling factorials, so double-double is the default working
//! precision.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use crate::dd::Dd;
use crate::error::{Error, Result};

/// Scalar type the series and Fock-basis kernels are evaluated in.
pub trait Real: Float + FromPrimitive + ToPrimitive + fmt::Debug + Send + Sync + 'static {
    /// Relative rounding error of one arithmetic operation.
    fn unit_roundoff() -> f64;
}

impl Real for f64 {
    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }
}

impl Real for Dd {
    fn unit_roundoff() -> f64 {
        // 2^-104
        4.930380657631324e-32
    }
}

/// Converts an `f64` into the working type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 converts to every Real")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Working precision selector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    Double,
    #[default]
    DoubleDouble,
}

impl Precision {
    /// Picks the narrowest supported precision with at least `bits` of mantissa.
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            1..=53 => Ok(Precision::Double),
            54..=106 => Ok(Precision::DoubleDouble),
            _ => Err(Error::UnsupportedPrecision(bits)),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::DoubleDouble => 106,
        }
    }
}

/// Neumaier-compensated running sum that also tracks `Σ|x|`, the scale
/// against which rounding error is measured.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
    magnitude: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
            magnitude: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
        self.magnitude = self.magnitude + x.abs();
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }

    /// Sum of absolute values of everything added so far.
    pub fn magnitude(&self) -> T {
        self.magnitude
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// A value together with an a-priori bound on its absolute rounding error.
#[derive(Clone, Copy, Debug)]
pub struct Estimate<T> {
    pub value: T,
    pub abs_error: f64,
}

/// Power series `Σ_k c_k x^k` truncated after `x^order`.
///
/// Arithmetic never wraps: products and compositions drop every term above
/// the result order.
#[derive(Clone, PartialEq)]
pub struct PowerSeries<T = Dd> {
    coeffs: Vec<T>,
}

impl<T: Real> fmt::Debug for PowerSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<f64> = self.coeffs.iter().map(|&x| to_f64(x)).collect();
        f.debug_struct("PowerSeries").field("coeffs", &c).finish()
    }
}

impl<T: Real> PowerSeries<T> {
    /// Builds a series from its coefficients; an empty vector is the zero
    /// series of order 0.
    pub fn new(mut coeffs: Vec<T>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn from_f64(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| real(c)).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); order + 1],
        }
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(T::one(), order)
    }

    /// `c·x^k`, truncated at `order`.
    pub fn monomial(k: usize, c: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// Series of `exp(rate·x)`.
    pub fn exp_linear(rate: T, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut c = T::one();
        coeffs.push(c);
        for k in 1..=order {
            c = c * rate / real::<T>(k as f64);
            coeffs.push(c);
        }
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^k`; zero above the order.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    /// Same series at a different order, dropping or zero-padding terms.
    pub fn with_order(&self, order: usize) -> Self {
        Self {
            coeffs: (0..=order).map(|k| self.coeff(k)).collect(),
        }
    }

    /// Index of the highest nonzero coefficient, if any.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&x| x * c).collect(),
        }
    }

    /// `f(c·x)`.
    pub fn rescale_argument(&self, c: T) -> Self {
        let mut p = T::one();
        let coeffs = self
            .coeffs
            .iter()
            .map(|&x| {
                let v = x * p;
                p = p * c;
                v
            })
            .collect();
        Self { coeffs }
    }

    /// Coefficient-wise sum; the shorter operand is zero-padded.
    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().max(other.order());
        Self {
            coeffs: (0..=order).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let order = self.order().max(other.order());
        Self {
            coeffs: (0..=order).map(|k| self.coeff(k) - other.coeff(k)).collect(),
        }
    }

    /// Cauchy product at the larger of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        self.mul_to(other, self.order().max(other.order()))
    }

    /// Cauchy product truncated at `order`.
    pub fn mul_to(&self, other: &Self, order: usize) -> Self {
        let coeffs = (0..=order)
            .map(|k| {
                let mut acc = CompensatedSum::new();
                for i in 0..=k.min(self.order()) {
                    let j = k - i;
                    if j <= other.order() {
                        acc.add(self.coeffs[i] * other.coeffs[j]);
                    }
                }
                acc.value()
            })
            .collect();
        Self { coeffs }
    }

    /// `self^m` at the current order.
    pub fn powi(&self, m: u32) -> Self {
        let mut out = Self::one(self.order());
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Series of `exp(-s·f(x))` where `self = f`.
    ///
    /// Uses `h_0 = exp(-s f_0)` and `h_k = -(s/k) Σ_{j=1..k} j f_j h_{k-j}`.
    pub fn exp_neg(&self, s: T) -> Result<Self> {
        let f0 = self.coeffs[0];
        if f0 < T::zero() {
            return Err(Error::NegativeConstantTerm(to_f64(f0)));
        }
        Ok(self.scale(-s).exp_unchecked())
    }

    /// `exp(self)` by the standard first-order recurrence.
    pub(crate) fn exp_unchecked(&self) -> Self {
        let order = self.order();
        let mut h = Vec::with_capacity(order + 1);
        h.push(self.coeffs[0].exp());
        for k in 1..=order {
            let mut acc = CompensatedSum::new();
            for j in 1..=k {
                acc.add(real::<T>(j as f64) * self.coeffs[j] * h[k - j]);
            }
            h.push(acc.value() / real::<T>(k as f64));
        }
        Self { coeffs: h }
    }

    /// `log(self)` for a series with constant term exactly 1.
    pub fn ln(&self) -> Result<Self> {
        let p0 = self.coeffs[0];
        if p0 != T::one() {
            return Err(Error::NonUnitConstantTerm(to_f64(p0)));
        }
        let order = self.order();
        let mut g = vec![T::zero(); order + 1];
        for k in 1..=order {
            let mut acc = CompensatedSum::new();
            acc.add(self.coeffs[k]);
            for j in 1..k {
                acc.add(-(real::<T>(j as f64) * g[j] * self.coeffs[k - j]) / real::<T>(k as f64));
            }
            g[k] = acc.value();
        }
        Ok(Self { coeffs: g })
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    /// Horner evaluation at a complex point (in `f64`).
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + to_f64(c))
    }
}

impl<T: Real> Add for &PowerSeries<T> {
    type Output = PowerSeries<T>;
    fn add(self, rhs: Self) -> PowerSeries<T> {
        PowerSeries::add(self, rhs)
    }
}

impl<T: Real> Sub for &PowerSeries<T> {
    type Output = PowerSeries<T>;
    fn sub(self, rhs: Self) -> PowerSeries<T> {
        PowerSeries::sub(self, rhs)
    }
}

impl<T: Real> Mul for &PowerSeries<T> {
    type Output = PowerSeries<T>;
    fn mul(self, rhs: Self) -> PowerSeries<T> {
        PowerSeries::mul(self, rhs)
    }
}

impl<T: Real> Neg for &PowerSeries<T> {
    type Output = PowerSeries<T>;
    fn neg(self) -> PowerSeries<T> {
        self.scale(-T::one())
    }
}

/// `n (n-1) … (n-k+1)`, exactly. Zero when `k > n`, one when `k = 0`.
pub fn falling_factorial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    ((n - k + 1)..=n).fold(BigUint::from(1u32), |acc, i| acc * i)
}

/// Floating-point falling factorial in the working type.
pub fn falling_factorial_real<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    ((n - k + 1)..=n).fold(T::one(), |acc, i| acc * real::<T>(i as f64))
}

/// Binomial coefficient as a float in the working type.
pub fn binomial_real<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(T::one(), |acc, i| {
        acc * real::<T>((n - i) as f64) / real::<T>((i + 1) as f64)
    })
}

/// `⟨n| :h(n̂): |n⟩ = Σ_{k ≤ n} h_k n!/(n-k)!`.
pub fn diag_matrix_element<T: Real>(h: &PowerSeries<T>, n: usize) -> Result<T> {
    if h.order() < n {
        return Err(Error::OrderTooLow {
            order: h.order(),
            level: n,
        });
    }
    let mut acc = CompensatedSum::new();
    let mut ff = T::one();
    for k in 0..=n {
        acc.add(h.coeffs[k] * ff);
        ff = ff * real::<T>((n - k) as f64);
    }
    Ok(acc.value())
}

/// `⟨n| :e^{-γ n̂} a(n̂): |n⟩ = Σ_j a_j n!/(n-j)! (1-γ)^{n-j}`.
///
/// Factoring the linear part of the exponent out of the series keeps every
/// term non-negative for the common detector models (`0 ≤ γ ≤ 1`, `a_j ≥ 0`).
/// `a` may be a polynomial of lower order than `n`; missing coefficients are
/// zero. `majorant`, when given, bounds `|a_j|` and its rounding history and
/// is folded into the returned error bound.
pub fn damped_diag_element<T: Real>(
    a: &PowerSeries<T>,
    gamma: T,
    n: usize,
    majorant: Option<&[f64]>,
) -> Estimate<T> {
    let base = T::one() - gamma;
    let top = n.min(a.order());
    // (1-γ)^{n-j} for j = top..=0, built upward from j = top.
    let mut pow = base.powi((n - top) as i32);
    let mut terms = Vec::with_capacity(top + 1);
    for j in (0..=top).rev() {
        terms.push((j, pow));
        pow = pow * base;
    }
    let mut acc = CompensatedSum::new();
    let mut scale_bound = 0.0;
    let mut ff = T::one();
    let base_abs = to_f64(base).abs();
    for (j, p) in terms.into_iter().rev() {
        acc.add(a.coeffs[j] * ff * p);
        if let Some(m) = majorant {
            let mj = m.get(j).copied().unwrap_or(0.0);
            scale_bound += mj * to_f64(ff) * base_abs.powi((n - j) as i32);
        }
        ff = ff * real::<T>((n - j) as f64);
    }
    let u = T::unit_roundoff() * (n as f64 + 4.0);
    let abs_error = u * (to_f64(acc.magnitude()) + scale_bound * (top as f64 + 1.0));
    Estimate {
        value: acc.value(),
        abs_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn c(s: &PowerSeries<Dd>) -> Vec<f64> {
        s.coefficients().iter().map(|&x| to_f64(x)).collect()
    }

    #[test]
    fn add_pads_and_identity() {
        let a = PowerSeries::<Dd>::from_f64(&[1.0, 1.0]);
        let b = PowerSeries::<Dd>::from_f64(&[0.0, 2.0]);
        assert_eq!(c(&(&a + &b)), vec![1.0, 3.0]);
        assert_eq!(c(&a.add(&PowerSeries::zero(3))), vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn mul_examples() {
        let a = PowerSeries::<Dd>::from_f64(&[1.0, 1.0]);
        let b = PowerSeries::<Dd>::from_f64(&[1.0, -1.0]);
        assert_eq!(c(&a.mul_to(&b, 2)), vec![1.0, 0.0, -1.0]);

        let e_neg = PowerSeries::<Dd>::exp_linear(real(-1.0), 8);
        let e_pos = PowerSeries::<Dd>::exp_linear(real(1.0), 8);
        let prod = c(&(&e_neg * &e_pos));
        assert!(close(prod[0], 1.0, 1e-30));
        assert!(prod[1..].iter().all(|x| x.abs() < 1e-12));

        // (1+x) e^{-x}: h_k = (-1)^k (1-k)/k!
        let h = c(&PowerSeries::<Dd>::from_f64(&[1.0, 1.0]).mul(&PowerSeries::exp_linear(real(-1.0), 4)));
        let want = [1.0, 0.0, -0.5, 1.0 / 3.0, -0.125];
        for (x, y) in h.iter().zip(want) {
            assert!(close(*x, y, 1e-15), "{h:?}");
        }
    }

    #[test]
    fn exp_neg_examples() {
        // f(x) = x
        let h = c(&PowerSeries::<Dd>::from_f64(&[0.0, 1.0]).with_order(6).exp_neg(real(1.0)).unwrap());
        let mut fact = 1.0;
        for (k, x) in h.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!(close(*x, (-1f64).powi(k as i32) / fact, 1e-16));
        }

        // f(x) = x - log(1+x): exp(-f) = (1+x) e^{-x}
        let log1p = PowerSeries::<Dd>::from_f64(&[1.0, 1.0]).with_order(6).ln().unwrap();
        let f = &PowerSeries::from_f64(&[0.0, 1.0]).with_order(6) - &log1p;
        let h = c(&f.exp_neg(real(1.0)).unwrap());
        let want = [1.0, 0.0, -0.5, 1.0 / 3.0, -0.125, 1.0 / 30.0, -1.0 / 144.0];
        for (x, y) in h.iter().zip(want) {
            assert!(close(*x, y, 1e-15), "{h:?}");
        }

        // f(x) = x + 2
        let h = c(&PowerSeries::<Dd>::from_f64(&[2.0, 1.0]).with_order(5).exp_neg(real(1.0)).unwrap());
        let mut fact = 1.0;
        for (k, x) in h.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            let want = (-2f64).exp() * (-1f64).powi(k as i32) / fact;
            assert!(close(*x, want, 1e-16), "{k}: {x} vs {want}");
        }

        let bad = PowerSeries::<Dd>::from_f64(&[-0.5, 1.0]);
        assert_eq!(bad.exp_neg(real(1.0)), Err(Error::NegativeConstantTerm(-0.5)));
    }

    #[test]
    fn exp_neg_matches_pointwise_for_small_x() {
        let f = PowerSeries::<Dd>::from_f64(&[0.1, 0.7, -0.2, 0.05]).with_order(12);
        let h = f.exp_neg(real(1.3)).unwrap();
        for &x in &[1e-3, 1e-2, 5e-2] {
            let fx = 0.1 + 0.7 * x - 0.2 * x * x + 0.05 * x * x * x;
            let want = (-1.3 * fx).exp();
            let got = to_f64(h.eval(real(x)));
            assert!((got - want).abs() < 10.0 * x.powi(13) + 1e-15, "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn ln_rejects_non_unit_constant() {
        let p = PowerSeries::<Dd>::from_f64(&[2.0, 1.0]);
        assert!(matches!(p.ln(), Err(Error::NonUnitConstantTerm(_))));
    }

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(5, 2), BigUint::from(20u32));
        assert_eq!(falling_factorial(3, 5), BigUint::from(0u32));
        assert_eq!(falling_factorial(8, 8), BigUint::from(40320u32));
        assert_eq!(falling_factorial(7, 0), BigUint::from(1u32));
    }

    #[test]
    fn falling_factorial_is_ratio_of_factorials() {
        let fact = |n: u64| (1..=n).fold(BigUint::from(1u32), |a, i| a * i);
        for n in 0..40u64 {
            for k in 0..=n {
                assert_eq!(falling_factorial(n, k) * fact(n - k), fact(n));
            }
        }
    }

    #[test]
    fn diag_element_examples() {
        let h = PowerSeries::<Dd>::exp_linear(real(-0.3), 4);
        assert!(close(to_f64(diag_matrix_element(&h, 4).unwrap()), 0.7f64.powi(4), 1e-15));
        let any = PowerSeries::<Dd>::from_f64(&[0.42, 3.0, -7.0]);
        assert_eq!(to_f64(diag_matrix_element(&any, 0).unwrap()), 0.42);
        let tpa = PowerSeries::<Dd>::from_f64(&[1.0, 1.0]).mul(&PowerSeries::exp_linear(real(-1.0), 4));
        assert!(close(to_f64(diag_matrix_element(&tpa, 1).unwrap()), 1.0, 1e-30));
        assert_eq!(
            diag_matrix_element(&any, 3),
            Err(Error::OrderTooLow { order: 2, level: 3 })
        );
    }

    #[test]
    fn diag_element_binomial_identity_up_to_sixty() {
        // :e^{-γ n̂}: = (1-γ)^{n̂}, the identity the Fock-basis route rests on
        for i in 0..=20 {
            let gamma = i as f64 / 20.0;
            let h = PowerSeries::<Dd>::exp_linear(real(-gamma), 60);
            for n in 0..=60 {
                let got = to_f64(diag_matrix_element(&h, n).unwrap());
                let want = (1.0 - gamma).powi(n as i32);
                assert!(close(got, want, 1e-12), "γ={gamma} n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn damped_element_agrees_with_plain_sum() {
        let a = PowerSeries::<Dd>::from_f64(&[1.0, 0.25, 1.0 / 32.0]);
        for &gamma in &[0.0, 0.3, 1.0] {
            let full = PowerSeries::<Dd>::exp_linear(real(-gamma), 30).mul(&a.with_order(30));
            for n in 0..=30 {
                let d = damped_diag_element(&a, real(gamma), n, None);
                let p = to_f64(diag_matrix_element(&full, n).unwrap());
                assert!(close(to_f64(d.value), p, 1e-12 + d.abs_error));
            }
        }
    }

    #[test]
    fn damped_element_is_stable_far_beyond_sixty() {
        // plain sums would need ~10^170 cancellation here
        let one = PowerSeries::<Dd>::one(0);
        let d = damped_diag_element(&one, real(0.9), 600, None);
        let want = 0.1f64.powi(600);
        assert!((to_f64(d.value) - want).abs() <= 1e-12 * want);
        assert!(d.abs_error < 1e-20);
    }

    #[test]
    fn precision_from_bits() {
        assert_eq!(Precision::from_bits(53), Ok(Precision::Double));
        assert_eq!(Precision::from_bits(80), Ok(Precision::DoubleDouble));
        assert_eq!(Precision::from_bits(106), Ok(Precision::DoubleDouble));
        assert_eq!(Precision::from_bits(200), Err(Error::UnsupportedPrecision(200)));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let s: CompensatedSum<f64> = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
