//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64`s with
//! `|lo| <= ulp(hi)/2`, good for about 106 bits of mantissa.
//!
//! Basic operations use the error-free transforms of Dekker and Knuth with a
//! fused multiply-add for the product error. `exp`, `sin` and `cos` use
//! argument reduction plus Taylor series; `ln`, `sqrt` and the inverse
//! trigonometric functions refine an `f64` seed with one Newton step.
//! Rarely needed members of [`Float`] (`integer_decode`, `classify`) act on
//! the leading word only.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, Num, One, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

const LN_2: Dd = Dd::from_parts(std::f64::consts::LN_2, 2.3190468138462996e-17);
const LN_10: Dd = Dd::from_parts(std::f64::consts::LN_10, -2.1707562233822494e-16);
const TAU: Dd = Dd::from_parts(std::f64::consts::TAU, 2.4492935982947064e-16);
const FRAC_PI_2: Dd = Dd::from_parts(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);
const EPS: f64 = 4.930380657631324e-32;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    /// Builds a value from words that are already normalized.
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        if !hi.is_finite() {
            return Dd { hi, lo: 0.0 };
        }
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Dd::renorm(p, e + self.lo * b)
    }

    fn ldexp(self, e: i32) -> Self {
        let s = 2f64.powi(e);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    fn sqr(self) -> Self {
        let (p, e) = two_prod(self.hi, self.hi);
        Dd::renorm(p, e + 2.0 * self.hi * self.lo)
    }

    /// Nearest integer, halves away from zero.
    fn nint(self) -> Self {
        if self.hi < 0.0 {
            -((-self) + Dd::from(0.5)).floor()
        } else {
            (self + Dd::from(0.5)).floor()
        }
    }

    /// `(sin t, cos t)` for `|t| <= pi/4` by Taylor series.
    fn sin_cos_reduced(t: Self) -> (Self, Self) {
        let t2 = t.sqr();
        let mut term = t;
        let mut s = t;
        let mut i = 1.0;
        while term.hi.abs() > EPS * 1e-2 * s.hi.abs().max(1e-300) {
            term = -(term * t2) / Dd::from((i + 1.0) * (i + 2.0));
            s += term;
            i += 2.0;
            if i > 60.0 {
                break;
            }
        }
        let mut term = Dd::one();
        let mut c = Dd::one();
        let mut i = 0.0;
        loop {
            term = -(term * t2) / Dd::from((i + 1.0) * (i + 2.0));
            c += term;
            i += 2.0;
            if term.hi.abs() <= EPS * 1e-2 || i > 60.0 {
                break;
            }
        }
        (s, c)
    }

    fn tiny_exp_m1(self) -> Self {
        let mut term = self;
        let mut s = self;
        let mut i = 1.0;
        while term.hi.abs() > EPS * 1e-2 * s.hi.abs() && i < 60.0 {
            i += 1.0;
            term = term * self / Dd::from(i);
            s += term;
        }
        s
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl From<i32> for Dd {
    fn from(x: i32) -> Self {
        Dd { hi: x as f64, lo: 0.0 }
    }
}

impl From<Dd> for f64 {
    fn from(x: Dd) -> f64 {
        x.hi + x.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        if !s.is_finite() {
            return Dd::from(s);
        }
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        if !p.is_finite() {
            return Dd::from(p);
        }
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Dd::from(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd::from_parts(q1, q2) + Dd::from(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - (self / b).trunc() * b
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for Dd {
            fn $m(&mut self, b: Dd) {
                *self = *self $op b;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /, RemAssign rem_assign %);

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::zero(), |a, b| a + b)
    }
}

impl Product for Dd {
    fn product<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::one(), |a, b| a * b)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::from(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::from(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDdError;

impl fmt::Display for ParseDdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid double-double literal")
    }
}

impl std::error::Error for ParseDdError {}

impl FromStr for Dd {
    type Err = ParseDdError;

    /// Decimal literals such as `-1.25e-3`, accumulated digit by digit in
    /// double-double.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(i) => (&body[..i], body[i + 1..].parse::<i32>().map_err(|_| ParseDdError)?),
            None => (body, 0),
        };
        if mant.is_empty() {
            return Err(ParseDdError);
        }
        let mut acc = Dd::zero();
        let mut scale = 0i32;
        let mut seen_dot = false;
        let mut digits = 0;
        for c in mant.chars() {
            match c {
                '.' if !seen_dot => seen_dot = true,
                '0'..='9' => {
                    acc = acc.mul_f64(10.0) + Dd::from(c as u8 as f64 - 48.0);
                    digits += 1;
                    if seen_dot {
                        scale -= 1;
                    }
                }
                _ => return Err(ParseDdError),
            }
        }
        if digits == 0 {
            return Err(ParseDdError);
        }
        let e = exp + scale;
        let p = Dd::from(10.0).powi(e.abs());
        let v = if e < 0 { acc / p } else { acc * p };
        Ok(if neg { -v } else { v })
    }
}

impl fmt::Display for Dd {
    /// Scientific notation; the precision flag counts digits after the
    /// point (default 31).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.hi.is_finite() || self.hi == 0.0 {
            return fmt::Display::fmt(&self.hi, f);
        }
        let digits = f.precision().unwrap_or(31).min(34);
        let x = self.abs();
        let mut e = x.hi.log10().floor() as i32;
        let p = Dd::from(10.0).powi(e.abs());
        let mut m = if e < 0 { x * p } else { x / p };
        if m.hi >= 10.0 {
            m /= Dd::from(10.0);
            e += 1;
        } else if m.hi < 1.0 {
            m = m.mul_f64(10.0);
            e -= 1;
        }
        let mut ds = Vec::with_capacity(digits + 2);
        for _ in 0..=digits + 1 {
            let d = m.hi.floor().clamp(0.0, 9.0);
            ds.push(d as u8);
            m = (m - Dd::from(d)).mul_f64(10.0);
        }
        // round on the extra digit
        let mut carry = ds.pop().is_some_and(|d| d >= 5);
        for d in ds.iter_mut().rev() {
            if !carry {
                break;
            }
            *d += 1;
            carry = *d == 10;
            if carry {
                *d = 0;
            }
        }
        if carry {
            ds.insert(0, 1);
            ds.pop();
            e += 1;
        }
        let mut out = String::new();
        if self.hi < 0.0 {
            out.push('-');
        }
        out.push((b'0' + ds[0]) as char);
        if digits > 0 {
            out.push('.');
            out.extend(ds[1..].iter().map(|d| (b'0' + d) as char));
        }
        write!(f, "{out}e{e}")
    }
}

impl Num for Dd {
    type FromStrRadixErr = ParseDdError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, ParseDdError> {
        if radix != 10 {
            return Err(ParseDdError);
        }
        s.parse()
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        let t = self.trunc();
        let v = t.hi as i128 + t.lo as i128;
        i64::try_from(v).ok().filter(|_| t.hi.is_finite())
    }
    fn to_u64(&self) -> Option<u64> {
        let t = self.trunc();
        let v = t.hi as i128 + t.lo as i128;
        u64::try_from(v).ok().filter(|_| t.hi.is_finite())
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::renorm(hi, lo))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::renorm(hi, lo))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Dd::from(x))
    }
}

impl num_traits::NumCast for Dd {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(<Dd as From<f64>>::from)
    }
}

impl Float for Dd {
    fn nan() -> Self {
        Dd::from(f64::NAN)
    }
    fn infinity() -> Self {
        Dd::from(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Dd::from(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Dd::from(-0.0)
    }
    fn min_value() -> Self {
        -Self::max_value()
    }
    fn min_positive_value() -> Self {
        // smallest value that still carries a full low word
        Dd::from(2.004168360008973e-292)
    }
    fn epsilon() -> Self {
        Dd::from(EPS)
    }
    fn max_value() -> Self {
        Dd::from_parts(f64::MAX, 9.979201547673598e291)
    }
    fn is_nan(self) -> bool {
        self.hi.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }
    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            Dd::renorm(hi, self.lo.floor())
        } else {
            Dd::from(hi)
        }
    }
    fn ceil(self) -> Self {
        let hi = self.hi.ceil();
        if hi == self.hi {
            Dd::renorm(hi, self.lo.ceil())
        } else {
            Dd::from(hi)
        }
    }
    fn round(self) -> Self {
        self.nint()
    }
    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.hi.is_sign_negative()) {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Dd::from(self.hi.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dd::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Dd::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            k >>= 1;
            if k > 0 {
                base = base.sqr();
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        if n.is_zero() {
            return Dd::one();
        }
        if self.is_zero() {
            return if n.hi > 0.0 { Dd::zero() } else { Dd::infinity() };
        }
        if n.fract().is_zero() && n.abs().hi < 2f64.powi(31) {
            return self.powi(n.hi as i32 + n.lo as i32);
        }
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::zero() } else { Dd::nan() };
        }
        if self.hi.is_infinite() {
            return self;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (s, e) = two_sum(ax, (self - Dd::from(ax).sqr()).hi * (x * 0.5));
        Dd::renorm(s, e)
    }
    fn exp(self) -> Self {
        if self.hi > 709.8 {
            return Dd::infinity();
        }
        if self.hi < -745.2 {
            return Dd::zero();
        }
        if self.hi == 0.0 {
            return Dd::one();
        }
        let m = (self.hi / LN_2.hi + 0.5).floor();
        let r = (self - LN_2.mul_f64(m)).ldexp(-10);
        let mut s = r.tiny_exp_m1();
        for _ in 0..10 {
            s = s.ldexp(1) + s.sqr();
        }
        (s + Dd::one()).ldexp(m as i32)
    }
    fn exp2(self) -> Self {
        (self * LN_2).exp()
    }
    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::neg_infinity() } else { Dd::nan() };
        }
        if self.hi.is_infinite() {
            return self;
        }
        let x = Dd::from(self.hi.ln());
        x + self * (-x).exp() - Dd::one()
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / LN_2
    }
    fn log10(self) -> Self {
        self.ln() / LN_10
    }
    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Dd::zero()
        }
    }
    fn cbrt(self) -> Self {
        if self.is_zero() || !self.is_finite() {
            return self;
        }
        let y = Dd::from(self.hi.cbrt());
        // Newton on y^3 = x
        y - (y.powi(3) - self) / (y.sqr().mul_f64(3.0))
    }
    fn hypot(self, other: Self) -> Self {
        let (a, b) = (self.abs(), other.abs());
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return Dd::zero();
        }
        let r = small / big;
        big * (Dd::one() + r.sqr()).sqrt()
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn asin(self) -> Self {
        self.atan2((Dd::one() - self.sqr()).sqrt())
    }
    fn acos(self) -> Self {
        (Dd::one() - self.sqr()).sqrt().atan2(self)
    }
    fn atan(self) -> Self {
        self.atan2(Dd::one())
    }
    fn atan2(self, other: Self) -> Self {
        let (y, x) = (self, other);
        if x.is_zero() && y.is_zero() {
            return Dd::from(y.hi.atan2(x.hi));
        }
        let z = Dd::from(y.hi.atan2(x.hi));
        let r = x.hypot(y);
        let (xx, yy) = (x / r, y / r);
        let (s, c) = z.sin_cos();
        if xx.abs() > yy.abs() {
            z + (yy - s) / c
        } else {
            z - (xx - c) / s
        }
    }
    fn sin_cos(self) -> (Self, Self) {
        if !self.is_finite() {
            return (Dd::nan(), Dd::nan());
        }
        if self.is_zero() {
            return (self, Dd::one());
        }
        let z = (self / TAU).nint();
        let r = self - TAU * z;
        let j = (r.hi / FRAC_PI_2.hi).round();
        let t = r - FRAC_PI_2.mul_f64(j);
        let (s, c) = Dd::sin_cos_reduced(t);
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
    fn exp_m1(self) -> Self {
        if self.hi.abs() < 0.5 {
            self.tiny_exp_m1()
        } else {
            self.exp() - Dd::one()
        }
    }
    fn ln_1p(self) -> Self {
        if self.hi.abs() >= 0.5 {
            return (Dd::one() + self).ln();
        }
        if self.hi <= -1.0 {
            return Dd::nan();
        }
        // Newton on expm1(y) = x
        let y = Dd::from(self.hi.ln_1p());
        y + (self - y.exp_m1()) * (-y).exp()
    }
    fn sinh(self) -> Self {
        if self.hi.abs() < 0.5 {
            let e = self.exp_m1();
            let f = (-self).exp_m1();
            return (e - f).ldexp(-1);
        }
        let e = self.exp();
        (e - e.recip()).ldexp(-1)
    }
    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()).ldexp(-1)
    }
    fn tanh(self) -> Self {
        if self.hi.abs() > 40.0 {
            return Dd::from(self.hi.signum());
        }
        let e = self.ldexp(1).exp_m1();
        e / (e + Dd::from(2.0))
    }
    fn asinh(self) -> Self {
        let a = self.abs();
        let v = (a + (a.sqr() + Dd::one()).sqrt()).ln();
        if self.hi < 0.0 {
            -v
        } else {
            v
        }
    }
    fn acosh(self) -> Self {
        (self + (self.sqr() - Dd::one()).sqrt()).ln()
    }
    fn atanh(self) -> Self {
        (self.ldexp(1) / (Dd::one() - self)).ln_1p().ldexp(-1)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
    fn to_degrees(self) -> Self {
        self * Dd::from(180.0) / (TAU.ldexp(-1))
    }
    fn to_radians(self) -> Self {
        self * TAU.ldexp(-1) / Dd::from(180.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: Dd, hi: f64, lo: f64) -> f64 {
        let want = Dd::from_parts(hi, lo);
        ((a - want) / want).hi.abs()
    }

    #[test]
    fn reference_values() {
        let tol = 1e-30;
        assert!(rel(Dd::from(-2.0).exp(), 0.1353352832366127, -1.042381423288669e-17) < tol);
        assert!(rel(Dd::from(30.0).exp(), 10686474581524.463, -0.0007436345313492586) < tol);
        assert!(rel(Dd::from(0.7).ln(), -0.35667494393873245, 4.82556379937662e-18) < tol);
        assert!(rel(Dd::from(0.7).sin(), 0.644217687237691, 2.8740567927338755e-18) < tol);
        assert!(rel(Dd::from(0.7).cos(), 0.7648421872844885, -4.013780434022238e-17) < tol);
        assert!(rel(Dd::from(100.0).sin(), -0.5063656411097588, -3.050947053792115e-18) < tol);
        assert!(rel(Dd::one() / Dd::from(3.0), 0.3333333333333333, 1.850371707708594e-17) < tol);
        assert!(rel(Dd::from(2.0).sqrt(), std::f64::consts::SQRT_2, -9.667293313452913e-17) < tol);
        assert!(rel(Dd::from(1e-5).exp_m1(), 1.0000050000166668e-05, -3.111926571619883e-22) < tol);
        assert!(rel(Dd::from(1e-10).ln_1p(), 9.999999999500001e-11, -3.389513322121794e-27) < tol);
        assert!(rel(Dd::from(1.0).atan2(Dd::from(3.0)), 0.3217505543966422, 7.917392525722143e-18) < tol);
        assert!(rel(Dd::from(5.0).cbrt(), 1.709975946676697, -6.679487771389464e-17) < tol);
        assert!(rel(Dd::from(0.7).powf(Dd::from(2.5)), 0.409963413001697, -2.1147976179140544e-17) < tol);
    }

    #[test]
    fn conversions_are_exact() {
        assert_eq!(<Dd as FromPrimitive>::from_f64(-0.05).unwrap().hi(), -0.05);
        let big = <Dd as FromPrimitive>::from_u64(u64::MAX).unwrap();
        assert_eq!(big.to_u64(), Some(u64::MAX));
        assert_eq!(Dd::from(-2.5).to_i64(), Some(-2));
        assert_eq!(Dd::from(2.5).round(), Dd::from(3.0));
        assert_eq!(Dd::from(-2.5).floor(), Dd::from(-3.0));
    }

    #[test]
    fn parse_and_display_round_trip() {
        let third: Dd = "0.3333333333333333333333333333333333".parse().unwrap();
        assert!(rel(third, 0.3333333333333333, 1.850371707708594e-17) < 1e-31);
        assert_eq!(format!("{:.5}", Dd::from(-1234.5)), "-1.23450e3");
        assert_eq!(format!("{:.3}", Dd::from(9.9996)), "1.000e1");
        let x = Dd::from(2.0).sqrt();
        let back: Dd = format!("{x}").parse().unwrap();
        assert!(((back - x) / x).hi().abs() < 1e-30);
        assert!("1.2.3".parse::<Dd>().is_err());
    }

    fn arb() -> impl Strategy<Value = Dd> {
        (-50.0f64..50.0, -1.0f64..1.0).prop_map(|(h, l)| Dd::from(h) + Dd::from(h * l * 1e-17))
    }

    proptest! {
        #[test]
        fn division_inverts_multiplication(a in arb(), b in arb()) {
            prop_assume!(b.hi().abs() > 1e-3);
            let back = (a * b) / b;
            prop_assert!((back - a).hi().abs() <= 1e-30 * a.hi().abs().max(1e-300));
        }

        #[test]
        fn exp_ln_inverse(a in arb()) {
            let x = a.exp();
            prop_assert!((x.ln() - a).hi().abs() <= 1e-30 * a.hi().abs().max(1.0));
        }

        #[test]
        fn exp_is_additive(a in arb(), b in arb()) {
            prop_assume!((a + b).hi().abs() < 60.0);
            let lhs = (a + b).exp();
            let rhs = a.exp() * b.exp();
            prop_assert!(((lhs - rhs) / lhs).hi().abs() < 1e-29);
        }

        #[test]
        fn pythagoras(a in arb()) {
            let (s, c) = a.sin_cos();
            prop_assert!((s * s + c * c - Dd::one()).hi().abs() < 1e-30);
            prop_assert!((s.hi() - a.hi().sin()).abs() < 1e-14);
        }

        #[test]
        fn sqrt_squares_back(a in 1e-3f64..1e6) {
            let r = Dd::from(a).sqrt();
            prop_assert!(((r * r - Dd::from(a)) / Dd::from(a)).hi().abs() < 1e-30);
        }
    }
}
