//! Forward model: click-counting statistics of a bank of `N` on-off diodes
//! that split the input field equally.
//!
//! Each diode fails to click with probability `q = :exp(-f(n̂/N)):`, and the
//! click statistics are `c_k = ⟨:C(N,k) q^{N-k} (1-q)^k:⟩`. How the normally
//! ordered expectation is taken depends on the state:
//!
//! * coherent light: `q` is a number and `c_k` is binomial;
//! * thermal and photon-added thermal light: closed-form P-function moments
//!   when `e^{-s f}` is a polynomial times an exponential, quadrature over
//!   the P function otherwise;
//! * other photon-number distributions: Fock-basis sums with the linear part
//!   of the exponent factored out, refused when rounding could dominate;
//! * coherent superpositions: cross terms `⟨α|:g(n̂):|β⟩ = g(α*β)⟨α|β⟩`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{
    binomial_real, damped_diag_element, real, to_f64, CompensatedSum, Dd, PowerSeries, Precision,
    Real,
};
use crate::states::{
    CoherentSuperposition, Family, JointPhotonDistribution, State,
};

/// Click probabilities below this are treated as rounding and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Allowed deviation of `Σ c_k` from one, on top of the state's tail bound.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Largest accepted rounding-error bound for Fock-basis evaluation.
pub const CONDITIONING_TOL: f64 = 1e-12;

/// The exponent `f` in the no-click probability `exp(-f(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseFunction {
    /// `f(x) = ηx`
    Linear { eta: f64 },
    /// `f(x) = ηx + ν`; `ν` is a dark-count rate.
    Affine { eta: f64, nu: f64 },
    /// `f(x) = x^{n0}`
    Power { n0: u32 },
    /// `f(x) = Σ_j a_j x^j`
    #[serde(rename = "poly")]
    PolynomialSeries {
        #[serde(alias = "coeffs")]
        coefficients: Vec<f64>,
    },
    /// `f(x) = x - log(Σ_{j<n0} x^j/j!)`: no click below `n0` photons.
    #[serde(rename = "nabs")]
    NPhotonAbsorption { n0: u32 },
}

/// `Σ_{j<n0} x^j/j!`
fn truncated_exp<T: Real>(n0: u32) -> PowerSeries<T> {
    let n0 = n0.max(1) as usize;
    PowerSeries::exp_linear(T::one(), n0 - 1)
}

impl ResponseFunction {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidResponse(m));
        match *self {
            ResponseFunction::Linear { eta } => {
                if !(eta > 0.0 && eta <= 1.0) {
                    return bad(format!("efficiency {eta} must lie in (0, 1]"));
                }
            }
            ResponseFunction::Affine { eta, nu } => {
                if !(eta >= 0.0 && eta <= 1.0) {
                    return bad(format!("efficiency {eta} must lie in [0, 1]"));
                }
                if !(nu >= 0.0 && nu.is_finite()) {
                    return bad(format!("dark-count rate {nu} must be finite and >= 0"));
                }
            }
            ResponseFunction::Power { n0 } | ResponseFunction::NPhotonAbsorption { n0 } => {
                if n0 == 0 {
                    return bad("n0 must be at least 1".into());
                }
            }
            ResponseFunction::PolynomialSeries { ref coefficients } => {
                if coefficients.is_empty() {
                    return bad("polynomial response needs at least one coefficient".into());
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return bad("polynomial coefficients must be finite".into());
                }
                if coefficients[0] < 0.0 {
                    return Err(Error::NegativeConstantTerm(coefficients[0]));
                }
                if let Some(&lead) = coefficients.iter().rev().find(|c| **c != 0.0) {
                    if lead < 0.0 {
                        return bad(format!("leading coefficient {lead} is negative"));
                    }
                }
                self.check_nonnegative(10.0)?;
            }
        }
        Ok(())
    }

    /// Samples `f` on a log-spaced grid over `(0, x_max]`.
    pub fn check_nonnegative(&self, x_max: f64) -> Result<()> {
        let x_max = x_max.max(1.0);
        let steps = 2000;
        let (lo, hi) = (1e-6f64.ln(), x_max.ln());
        for i in 0..=steps {
            let x = (lo + (hi - lo) * i as f64 / steps as f64).exp();
            let v = self.f(x);
            if v < 0.0 {
                return Err(Error::InvalidResponse(format!("f({x:.6e}) = {v:e} is negative")));
            }
        }
        Ok(())
    }

    /// `f(x)`.
    pub fn f(&self, x: f64) -> f64 {
        match self {
            ResponseFunction::Linear { eta } => eta * x,
            ResponseFunction::Affine { eta, nu } => eta * x + nu,
            ResponseFunction::Power { n0 } => x.powi(*n0 as i32),
            ResponseFunction::PolynomialSeries { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            ResponseFunction::NPhotonAbsorption { n0 } => {
                let mut term = 1.0;
                let tail: f64 = (1..*n0)
                    .map(|k| {
                        term *= x / k as f64;
                        term
                    })
                    .sum();
                x - tail.ln_1p()
            }
        }
    }

    /// `f'(x)`.
    pub fn f_prime(&self, x: f64) -> f64 {
        match self {
            ResponseFunction::Linear { eta } | ResponseFunction::Affine { eta, .. } => *eta,
            ResponseFunction::Power { n0 } => *n0 as f64 * x.powi(*n0 as i32 - 1),
            ResponseFunction::PolynomialSeries { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (j, c)| acc * x + j as f64 * c),
            // 1 - P'/P with P' = P - x^{n0-1}/(n0-1)!
            ResponseFunction::NPhotonAbsorption { n0 } => {
                let p = truncated_exp::<f64>(*n0);
                let last = p.coeff(*n0 as usize - 1) * x.powi(*n0 as i32 - 1);
                last / p.eval(x)
            }
        }
    }

    /// No-click probability `exp(-f(x))` of a single diode.
    pub fn no_click<T: Real>(&self, x: T) -> T {
        match self {
            ResponseFunction::Linear { eta } => (-(real::<T>(*eta) * x)).exp(),
            ResponseFunction::Affine { eta, nu } => (-(real::<T>(*eta) * x + real::<T>(*nu))).exp(),
            ResponseFunction::Power { n0 } => (-x.powi(*n0 as i32)).exp(),
            ResponseFunction::PolynomialSeries { coefficients } => {
                let f = coefficients.iter().rev().fold(T::zero(), |acc, &c| acc * x + real::<T>(c));
                (-f).exp()
            }
            ResponseFunction::NPhotonAbsorption { n0 } => truncated_exp::<T>(*n0).eval(x) * (-x).exp(),
        }
    }

    /// `exp(-f(z))` continued to complex arguments.
    pub fn no_click_complex<T: Real>(&self, z: Complex<T>) -> Complex<T> {
        let horner = |coeffs: &[T]| coeffs.iter().rev().fold(Complex::from(T::zero()), |acc, &c| acc * z + c);
        match self {
            ResponseFunction::Linear { eta } => (-(z * real::<T>(*eta))).exp(),
            ResponseFunction::Affine { eta, nu } => (-(z * real::<T>(*eta) + real::<T>(*nu))).exp(),
            ResponseFunction::Power { n0 } => (-z.powu(*n0)).exp(),
            ResponseFunction::PolynomialSeries { coefficients } => {
                let c: Vec<T> = coefficients.iter().map(|&x| real(x)).collect();
                (-horner(&c)).exp()
            }
            ResponseFunction::NPhotonAbsorption { n0 } => {
                horner(truncated_exp::<T>(*n0).coefficients()) * (-z).exp()
            }
        }
    }

    /// Power series of `f`, truncated at `order`.
    pub fn series<T: Real>(&self, order: usize) -> Result<PowerSeries<T>> {
        Ok(match self {
            ResponseFunction::Linear { eta } => PowerSeries::monomial(1, real(*eta), order),
            ResponseFunction::Affine { eta, nu } => {
                PowerSeries::monomial(1, real(*eta), order).add(&PowerSeries::constant(real(*nu), order))
            }
            ResponseFunction::Power { n0 } => PowerSeries::monomial(*n0 as usize, T::one(), order),
            ResponseFunction::PolynomialSeries { coefficients } => {
                PowerSeries::new(coefficients.iter().map(|&c| real(c)).collect()).with_order(order)
            }
            ResponseFunction::NPhotonAbsorption { n0 } => {
                let log_p = truncated_exp::<T>(*n0).with_order(order).ln()?;
                PowerSeries::monomial(1, T::one(), order).sub(&log_p)
            }
        })
    }

    /// Coefficient of `x` in `f`: the part of the exponent factored out of
    /// Fock-basis sums.
    fn linear_part(&self) -> f64 {
        match self {
            ResponseFunction::Linear { eta } | ResponseFunction::Affine { eta, .. } => *eta,
            ResponseFunction::Power { n0 } => {
                if *n0 == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            ResponseFunction::PolynomialSeries { coefficients } => coefficients.get(1).copied().unwrap_or(0.0),
            ResponseFunction::NPhotonAbsorption { .. } => 1.0,
        }
    }

    /// Whether `exp(-s f(x))·exp(s f_1 x)` is a polynomial for integer `s`.
    fn is_exp_polynomial(&self) -> bool {
        match self {
            ResponseFunction::Power { n0 } => *n0 == 1,
            ResponseFunction::PolynomialSeries { coefficients } => {
                coefficients.iter().skip(2).all(|c| *c == 0.0)
            }
            _ => true,
        }
    }

    /// `exp(-s f(x/N)) = exp(-γx) A(x)`; returns `γ`, the series of `A` at
    /// `order` and, when `A` is not an exact polynomial, a majorant of its
    /// coefficients.
    fn damped<T: Real>(&self, n_diodes: usize, s: usize, order: usize) -> Result<(T, PowerSeries<T>, Option<Vec<f64>>)> {
        let nd = real::<T>(n_diodes as f64);
        let st = real::<T>(s as f64);
        let gamma = st * real::<T>(self.linear_part()) / nd;
        let inv_n = T::one() / nd;
        match self {
            ResponseFunction::Linear { .. } => Ok((gamma, PowerSeries::one(0), None)),
            ResponseFunction::Affine { nu, .. } => {
                Ok((gamma, PowerSeries::constant((-(st * real::<T>(*nu))).exp(), 0), None))
            }
            ResponseFunction::NPhotonAbsorption { n0 } => {
                let degree = (s * (*n0 as usize - 1)).min(order);
                let p = truncated_exp::<T>(*n0).rescale_argument(inv_n).with_order(degree);
                Ok((gamma, p.powi(s as u32), None))
            }
            _ if self.is_exp_polynomial() => {
                let a0 = match self {
                    ResponseFunction::PolynomialSeries { coefficients } => coefficients[0],
                    _ => 0.0,
                };
                Ok((gamma, PowerSeries::constant((-(st * real::<T>(a0))).exp(), 0), None))
            }
            _ => {
                let mut r = self.series::<T>(order.max(1))?.rescale_argument(inv_n);
                let a0 = r.coeff(0);
                let mut coeffs = r.coefficients().to_vec();
                coeffs[0] = T::zero();
                coeffs[1] = T::zero();
                r = PowerSeries::new(coeffs);
                let a = r.exp_neg(st)?.scale((-(st * a0)).exp());
                let abs_r = PowerSeries::<f64>::new(r.coefficients().iter().map(|&c| -to_f64(c).abs()).collect());
                let e0 = (-(s as f64) * to_f64(a0)).exp();
                let maj = abs_r
                    .exp_neg(s as f64)?
                    .coefficients()
                    .iter()
                    .map(|c| c * e0)
                    .collect();
                Ok((gamma, a, Some(maj)))
            }
        }
    }
}

/// Series of `exp(-s f(x/N))` in `x`.
pub fn response_series<T: Real>(
    resp: &ResponseFunction,
    n_diodes: usize,
    s: f64,
    order: usize,
) -> Result<PowerSeries<T>> {
    resp.series::<T>(order)?
        .rescale_argument(T::one() / real::<T>(n_diodes as f64))
        .exp_neg(real(s))
}

/// `N` equally illuminated diodes sharing one response function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub response: ResponseFunction,
}

impl DetectorConfig {
    pub fn new(n: usize, response: ResponseFunction) -> Result<Self> {
        let d = Self { n, response };
        d.validate()?;
        Ok(d)
    }

    pub fn linear(n: usize, eta: f64) -> Result<Self> {
        Self::new(n, ResponseFunction::Linear { eta })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("a detector bank needs at least one diode".into()));
        }
        self.response.validate()
    }
}

/// Functions of the no-click probability `q` whose normally ordered
/// expectations the engine computes.
#[derive(Clone, Copy, Debug)]
enum QKernel {
    /// `C(N,k) q^{N-k} (1-q)^k` for `k = 0..=N`
    Clicks { n: usize },
    /// `(1-q)^m` for `m = 0..=max`
    PiPowers { max: usize },
}

impl QKernel {
    fn len(self) -> usize {
        match self {
            QKernel::Clicks { n } => n + 1,
            QKernel::PiPowers { max } => max + 1,
        }
    }

    fn max_power(self) -> usize {
        self.len() - 1
    }

    fn eval<T: Real>(self, k: usize, q: T) -> T {
        match self {
            QKernel::Clicks { n } => binomial_real::<T>(n, k) * q.powi((n - k) as i32) * (T::one() - q).powi(k as i32),
            QKernel::PiPowers { .. } => (T::one() - q).powi(k as i32),
        }
    }

    fn eval_complex<T: Real>(self, k: usize, q: Complex<T>) -> Complex<T> {
        let one = Complex::from(T::one());
        match self {
            QKernel::Clicks { n } => (one - q).powu(k as u32) * q.powu((n - k) as u32) * binomial_real::<T>(n, k),
            QKernel::PiPowers { .. } => (one - q).powu(k as u32),
        }
    }

    /// `d/dq` of entry `k`.
    fn derivative(self, k: usize, q: f64) -> f64 {
        let pw = |b: f64, e: usize| if e == 0 { 1.0 } else { b.powi(e as i32) };
        match self {
            QKernel::Clicks { n } => {
                let c = binomial_real::<f64>(n, k);
                let a = if n > k { (n - k) as f64 * pw(q, n - k - 1) * pw(1.0 - q, k) } else { 0.0 };
                let b = if k > 0 { k as f64 * pw(q, n - k) * pw(1.0 - q, k - 1) } else { 0.0 };
                c * (a - b)
            }
            QKernel::PiPowers { .. } => {
                if k == 0 {
                    0.0
                } else {
                    -(k as f64) * pw(1.0 - q, k - 1)
                }
            }
        }
    }

    /// Expansion of entry `k` in powers of `q`: pairs `(s, coefficient of q^s)`.
    fn q_expansion<T: Real>(self, k: usize) -> Vec<(usize, T)> {
        let sign = |j: usize| if j % 2 == 0 { T::one() } else { -T::one() };
        match self {
            QKernel::Clicks { n } => {
                let c = binomial_real::<T>(n, k);
                (0..=k).map(|j| (n - k + j, c * binomial_real::<T>(k, j) * sign(j))).collect()
            }
            QKernel::PiPowers { .. } => (0..=k).map(|j| (j, binomial_real::<T>(k, j) * sign(j))).collect(),
        }
    }
}

/// Normally ordered expectations of every entry of `kernel`.
fn expect<T: Real>(state: &State, det: &DetectorConfig, kernel: QKernel) -> Result<(Vec<T>, f64)> {
    det.validate()?;
    match state {
        State::Superposition(s) => Ok((expect_superposition(s, det, kernel)?, 0.0)),
        State::Distribution(d) => {
            let tail = d.tail_bound();
            let v = match d.family() {
                Family::Coherent { mean } => {
                    let q = det.response.no_click(real::<T>(mean) / real::<T>(det.n as f64));
                    (0..kernel.len()).map(|k| kernel.eval(k, q)).collect()
                }
                Family::Thermal { nbar } => return Ok((expect_pfunction(PFamily::Thermal, nbar, det, kernel)?, 0.0)),
                Family::Spats { nbar } => return Ok((expect_pfunction(PFamily::Spats, nbar, det, kernel)?, 0.0)),
                Family::Fock { .. } | Family::Custom => {
                    det.response.check_nonnegative(10.0 * d.cutoff() as f64 / det.n as f64)?;
                    let table = fock_table::<T>(det, kernel, d.cutoff())?;
                    let mut acc = vec![CompensatedSum::new(); kernel.len()];
                    let mut err = 0.0;
                    for (n, &p) in d.probs().iter().enumerate() {
                        if p == 0.0 {
                            continue;
                        }
                        let pt = real::<T>(p);
                        for (k, a) in acc.iter_mut().enumerate() {
                            a.add(pt * table.values[n][k]);
                        }
                        err += p * table.errors[n];
                    }
                    // Kernel values of a physical response lie in [0, 1]. Larger
                    // ones mean the diagonal elements grow with n and the
                    // truncated tail may carry up to tail·max|value|.
                    let growth = table
                        .values
                        .iter()
                        .flatten()
                        .map(|v| to_f64(*v).abs())
                        .fold(1.0f64, |m, v| if v.is_finite() { m.max(v) } else { f64::INFINITY });
                    err += tail * (growth - 1.0);
                    if !(err <= CONDITIONING_TOL) {
                        return Err(Error::IllConditioned {
                            level: table.worst_level,
                            bound: if err.is_nan() { f64::INFINITY } else { err },
                        });
                    }
                    acc.iter().map(|a| a.value()).collect()
                }
            };
            Ok((v, tail))
        }
    }
}

fn expect_superposition<T: Real>(s: &CoherentSuperposition, det: &DetectorConfig, kernel: QKernel) -> Result<Vec<T>> {
    let inv_n = T::one() / real::<T>(det.n as f64);
    (0..kernel.len())
        .map(|k| s.hermitian_sum(|z| kernel.eval_complex(k, det.response.no_click_complex(z * inv_n))))
        .collect()
}

/// Per-level values `⟨n|:kernel_k(q):|n⟩` with their rounding-error bounds.
struct FockTable<T> {
    values: Vec<Vec<T>>,
    errors: Vec<f64>,
    worst_level: usize,
}

fn fock_table<T: Real>(det: &DetectorConfig, kernel: QKernel, cutoff: usize) -> Result<FockTable<T>> {
    let smax = kernel.max_power();
    let kernels = (0..=smax)
        .map(|s| det.response.damped::<T>(det.n, s, cutoff))
        .collect::<Result<Vec<_>>>()?;
    let expansions: Vec<Vec<(usize, T)>> = (0..kernel.len()).map(|k| kernel.q_expansion(k)).collect();
    let mut values = Vec::with_capacity(cutoff + 1);
    let mut errors = Vec::with_capacity(cutoff + 1);
    let mut worst = (0usize, 0.0f64);
    for n in 0..=cutoff {
        let e: Vec<_> = kernels
            .iter()
            .map(|(g, a, maj)| damped_diag_element(a, *g, n, maj.as_deref()))
            .collect();
        let mut row = Vec::with_capacity(kernel.len());
        let mut row_err = 0.0f64;
        for exp in &expansions {
            let mut acc = CompensatedSum::new();
            let mut err = 0.0;
            for &(s, c) in exp {
                acc.add(c * e[s].value);
                err += to_f64(c).abs() * e[s].abs_error;
            }
            err += to_f64(acc.magnitude()) * T::unit_roundoff() * (exp.len() as f64 + 2.0);
            row.push(acc.value());
            row_err = row_err.max(err);
        }
        if row_err > worst.1 {
            worst = (n, row_err);
        }
        values.push(row);
        errors.push(row_err);
    }
    Ok(FockTable {
        values,
        errors,
        worst_level: worst.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PFamily {
    Thermal,
    Spats,
}

impl PFamily {
    /// `M_j(γ) = E_P[I^j e^{-γI}]` over the P function of the state.
    fn moment<T: Real>(self, nbar: T, j: usize, gamma: T) -> T {
        let one = T::one();
        let d = one + gamma * nbar;
        let fact = (1..=j).fold(one, |a, i| a * real::<T>(i as f64));
        let jt = real::<T>(j as f64);
        match self {
            PFamily::Thermal => fact * nbar.powi(j as i32) / d.powi(j as i32 + 1),
            PFamily::Spats => {
                if j == 0 {
                    (one - gamma) / (d * d)
                } else {
                    fact * nbar.powi(j as i32 - 1) * (jt + nbar * (jt + one - gamma)) / d.powi(j as i32 + 2)
                }
            }
        }
    }
}

/// Expectations over thermal-type P functions.
fn expect_pfunction<T: Real>(fam: PFamily, nbar: f64, det: &DetectorConfig, kernel: QKernel) -> Result<Vec<T>> {
    if det.response.is_exp_polynomial() {
        let nb = real::<T>(nbar);
        let es = (0..=kernel.max_power())
            .map(|s| {
                let (g, a, _) = det.response.damped::<T>(det.n, s, usize::MAX / 2)?;
                let mut acc = CompensatedSum::new();
                for (j, &aj) in a.coefficients().iter().enumerate() {
                    acc.add(aj * fam.moment(nb, j, g));
                }
                Ok(acc.value())
            })
            .collect::<Result<Vec<T>>>()?;
        return Ok((0..kernel.len())
            .map(|k| {
                let mut acc = CompensatedSum::new();
                for (s, c) in kernel.q_expansion::<T>(k) {
                    acc.add(c * es[s]);
                }
                acc.value()
            })
            .collect());
    }
    det.response.check_nonnegative(60.0 * nbar.max(1.0) / det.n as f64)?;
    (0..kernel.len())
        .map(|k| pfunction_quadrature(fam, nbar, det, kernel, k).map(real::<T>))
        .collect()
}

/// `E_P[h(I)]` with `h = kernel_k(q(I/N))` by double-exponential quadrature.
///
/// Thermal: `∫ e^{-u} h(n̄u) du`. Photon-added thermal, after an
/// integration by parts that keeps the integrand regular as `n̄ → 0`:
/// `∫ u e^{-u} [h(n̄u) + h'(n̄u)] du`.
fn pfunction_quadrature(fam: PFamily, nbar: f64, det: &DetectorConfig, kernel: QKernel, k: usize) -> Result<f64> {
    let n = det.n as f64;
    let resp = &det.response;
    let h = |x: f64| kernel.eval(k, resp.no_click(x / n));
    let dh = |x: f64| {
        let q = resp.no_click(x / n);
        kernel.derivative(k, q) * (-resp.f_prime(x / n) / n * q)
    };
    let integrand = |u: f64| match fam {
        PFamily::Thermal => (-u).exp() * h(nbar * u),
        PFamily::Spats => u * (-u).exp() * (h(nbar * u) + dh(nbar * u)),
    };
    let mut cuts = vec![0.0, 4.0, 16.0, 60.0];
    if nbar > 0.0 {
        let u_star = n / nbar;
        for c in [u_star / 4.0, u_star, 4.0 * u_star] {
            if c > 0.0 && c < 60.0 {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let out = quadrature::double_exponential::integrate(&integrand, w[0], w[1], 1e-17);
        total.add(out.integral);
        err += out.error_estimate;
    }
    if !(err <= 1e-12) {
        return Err(Error::QuadratureFailed(err));
    }
    Ok(total.value())
}

/// Probabilities `c_0..c_N` of observing `k` clicks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickStatistics {
    probs: Vec<f64>,
}

impl ClickStatistics {
    /// Validates and wraps `c_0..c_N`; entries must be non-negative and sum
    /// to one within [`NORMALIZATION_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        finalize(probs, 0.0).map(|probs| Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    /// Number of diodes.
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<CompensatedSum<f64>>().value()
    }

    /// Mean click number `Σ k c_k`.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).collect::<CompensatedSum<f64>>().value()
    }
}

/// Probabilities `c_{k1,k2}` stored row-major over `k1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointClickStatistics {
    n1: usize,
    n2: usize,
    probs: Vec<f64>,
}

impl JointClickStatistics {
    /// `probs` has `(n1+1)(n2+1)` entries, row-major over `k1`.
    pub fn new(n1: usize, n2: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != (n1 + 1) * (n2 + 1) {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} table",
                probs.len(),
                n1 + 1,
                n2 + 1
            )));
        }
        finalize(probs, 0.0).map(|probs| Self { n1, n2, probs })
    }

    pub(crate) fn from_raw(n1: usize, n2: usize, probs: Vec<f64>) -> Self {
        Self { n1, n2, probs }
    }

    pub fn diodes(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, k1: usize, k2: usize) -> f64 {
        self.probs[k1 * (self.n2 + 1) + k2]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<CompensatedSum<f64>>().value()
    }

    /// Click statistics of bank 0 or 1 alone.
    pub fn marginal(&self, bank: usize) -> ClickStatistics {
        let (len, n2) = (if bank == 0 { self.n1 } else { self.n2 } + 1, self.n2 + 1);
        let mut acc = vec![CompensatedSum::<f64>::new(); len];
        for (i, &p) in self.probs.iter().enumerate() {
            acc[if bank == 0 { i / n2 } else { i % n2 }].add(p);
        }
        ClickStatistics::from_raw(acc.iter().map(|a| a.value()).collect())
    }
}

/// Clamps rounding-level negatives and checks normalization.
fn finalize<T: Real>(raw: Vec<T>, tail: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(raw.len());
    let mut sum = CompensatedSum::new();
    for (i, v) in raw.into_iter().enumerate() {
        let v = to_f64(v);
        if !v.is_finite() {
            return Err(Error::NegativeProbability { index: i, value: v });
        }
        if v < 0.0 {
            if v < -CLAMP_TOL {
                return Err(Error::NegativeProbability { index: i, value: v });
            }
            log::debug!("clamping c_{i} = {v:e} to zero");
            out.push(0.0);
        } else {
            out.push(v);
        }
        sum.add(v);
    }
    let total = sum.value();
    if (total - 1.0).abs() > NORMALIZATION_TOL + tail {
        return Err(Error::NormalizationViolation { sum: total, tail });
    }
    if (total - 1.0).abs() > 1e-14 {
        log::debug!("click statistics sum to 1 {:+e}", total - 1.0);
    }
    Ok(out)
}

/// Exact click-counting statistics of `state` measured by `det`.
pub fn click_statistics<T: Real>(state: &State, det: &DetectorConfig) -> Result<ClickStatistics> {
    let (raw, tail) = expect::<T>(state, det, QKernel::Clicks { n: det.n })?;
    finalize(raw, tail).map(ClickStatistics::from_raw)
}

/// [`click_statistics`] at a run-time chosen working precision.
pub fn click_statistics_with(state: &State, det: &DetectorConfig, precision: Precision) -> Result<ClickStatistics> {
    match precision {
        Precision::Double => click_statistics::<f64>(state, det),
        Precision::DoubleDouble => click_statistics::<Dd>(state, det),
    }
}

/// `⟨:π̂^m:⟩` for `m = 0..=max_order`, computed on the state side with
/// `π̂ = 1 - exp(-f(n̂/N))`.
pub fn direct_pi_moments<T: Real>(state: &State, det: &DetectorConfig, max_order: usize) -> Result<Vec<T>> {
    expect::<T>(state, det, QKernel::PiPowers { max: max_order }).map(|r| r.0)
}

/// Joint statistics of two banks watching the two modes of `state`.
pub fn joint_click_statistics<T: Real>(
    state: &JointPhotonDistribution,
    det1: &DetectorConfig,
    det2: &DetectorConfig,
) -> Result<JointClickStatistics> {
    det1.validate()?;
    det2.validate()?;
    let (c1, c2) = state.cutoffs();
    det1.response.check_nonnegative(10.0 * c1 as f64 / det1.n as f64)?;
    det2.response.check_nonnegative(10.0 * c2 as f64 / det2.n as f64)?;
    let t1 = fock_table::<T>(det1, QKernel::Clicks { n: det1.n }, c1)?;
    let t2 = fock_table::<T>(det2, QKernel::Clicks { n: det2.n }, c2)?;
    let (l1, l2) = (det1.n + 1, det2.n + 1);
    let mut acc = vec![CompensatedSum::new(); l1 * l2];
    let mut err = 0.0;
    for &(n1, n2, p) in state.entries() {
        let pt = real::<T>(p);
        let (r1, r2) = (&t1.values[n1], &t2.values[n2]);
        for k1 in 0..l1 {
            let a = pt * r1[k1];
            for k2 in 0..l2 {
                acc[k1 * l2 + k2].add(a * r2[k2]);
            }
        }
        err += p * (t1.errors[n1] + t2.errors[n2]);
    }
    if !(err <= CONDITIONING_TOL) {
        return Err(Error::IllConditioned {
            level: t1.worst_level.max(t2.worst_level),
            bound: err,
        });
    }
    let raw: Vec<T> = acc.iter().map(|a| a.value()).collect();
    finalize(raw, state.tail_bound()).map(|p| JointClickStatistics::from_raw(det1.n, det2.n, p))
}

/// [`joint_click_statistics`] at a run-time chosen working precision.
pub fn joint_click_statistics_with(
    state: &JointPhotonDistribution,
    det1: &DetectorConfig,
    det2: &DetectorConfig,
    precision: Precision,
) -> Result<JointClickStatistics> {
    match precision {
        Precision::Double => joint_click_statistics::<f64>(state, det1, det2),
        Precision::DoubleDouble => joint_click_statistics::<Dd>(state, det1, det2),
    }
}

/// `g(z) = Σ_k c_k z^k`.
pub fn generating_function(stats: &ClickStatistics, z: f64) -> f64 {
    stats.probs.iter().rev().fold(0.0, |acc, c| acc * z + c)
}

/// `Σ_μ η_μ |α_μ|²`: the single-mode intensity that multimode coherent
/// light presents to a phase-insensitive detector.
pub fn multimode_effective_intensity(etas: &[f64], intensities: &[f64]) -> Result<f64> {
    if etas.len() != intensities.len() {
        return Err(Error::LengthMismatch(etas.len(), intensities.len()));
    }
    Ok(etas.iter().zip(intensities).map(|(e, i)| e * i).sum())
}
