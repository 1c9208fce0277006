//! Quantum states, represented just far enough to evaluate normally ordered
//! functions of photon number.
//!
//! Phase-insensitive states are diagonal Fock distributions; cat-like states
//! are finite superpositions of coherent states. Distributions built by the
//! named constructors remember which analytic family they came from so that
//! the detector model can pick a well-conditioned evaluation route.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{diag_matrix_element, real, to_f64, CompensatedSum, PowerSeries, Real};

/// Default bound on the probability mass dropped by truncation.
pub const DEFAULT_TOL: f64 = 1e-14;

/// Largest normalization error tolerated after accounting for truncation.
pub const NORM_TOL: f64 = 1e-12;

/// Imaginary parts of superposition sums above this are an error.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Analytic origin of a [`PhotonNumberDistribution`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Coherent { mean: f64 },
    Thermal { nbar: f64 },
    Spats { nbar: f64 },
    Fock { n: usize },
    Custom,
}

/// Photon-number probabilities `p_0..p_cutoff` plus a bound on the mass beyond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    tail_bound: f64,
    family: Family,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("truncation tolerance {tol} must lie in (0, 1)")))
    }
}

fn check_mean(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must be finite and >= 0")))
    }
}

impl PhotonNumberDistribution {
    /// Poisson distribution with mean `mean_photons`.
    pub fn coherent(mean_photons: f64, tol: f64) -> Result<Self> {
        check_mean("mean photon number", mean_photons)?;
        check_tol(tol)?;
        let mu = mean_photons;
        if mu == 0.0 {
            return Ok(Self::vacuum_of(Family::Coherent { mean: 0.0 }));
        }
        let ln_mu = mu.ln();
        let mut probs = Vec::new();
        let mut log_fact = 0.0;
        let mut n = 0usize;
        loop {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            probs.push((-mu + n as f64 * ln_mu - log_fact).exp());
            // p_{n+1} / p_n = mu/(n+1) decreases, so the tail is dominated by a
            // geometric series once mu < n + 2.
            let next = probs[n] * mu / (n + 1) as f64;
            let ratio = mu / (n + 2) as f64;
            if ratio < 1.0 {
                let tail = next / (1.0 - ratio);
                if tail <= tol {
                    return Ok(Self {
                        probs,
                        tail_bound: tail,
                        family: Family::Coherent { mean: mu },
                    });
                }
            }
            n += 1;
        }
    }

    /// Thermal distribution `p_n = n̄^n/(n̄+1)^{n+1}`.
    pub fn thermal(nbar: f64, tol: f64) -> Result<Self> {
        check_mean("nbar", nbar)?;
        check_tol(tol)?;
        if nbar == 0.0 {
            return Ok(Self::vacuum_of(Family::Thermal { nbar: 0.0 }));
        }
        let r = nbar / (nbar + 1.0);
        let mut probs = Vec::new();
        let mut p = 1.0 / (nbar + 1.0);
        let mut tail = r;
        loop {
            probs.push(p);
            if tail <= tol {
                break;
            }
            p *= r;
            tail *= r;
        }
        Ok(Self {
            probs,
            tail_bound: tail,
            family: Family::Thermal { nbar },
        })
    }

    /// Single-photon-added thermal state,
    /// `p_n = n (n̄/(n̄+1))^{n-1} / (n̄+1)^2` for `n ≥ 1`.
    pub fn spats(nbar: f64, tol: f64) -> Result<Self> {
        check_mean("nbar", nbar)?;
        check_tol(tol)?;
        let r = nbar / (nbar + 1.0);
        let norm = 1.0 / ((nbar + 1.0) * (nbar + 1.0));
        let mut probs = vec![0.0];
        let mut rpow = 1.0; // r^{n-1}
        let mut n = 1usize;
        loop {
            probs.push(n as f64 * rpow * norm);
            rpow *= r;
            // Σ_{m>n} m r^{m-1} (1-r)^2 = r^n ((n+1) - n r)
            let tail = rpow * ((n + 1) as f64 - n as f64 * r);
            if tail <= tol {
                return Ok(Self {
                    probs,
                    tail_bound: tail,
                    family: Family::Spats { nbar },
                });
            }
            n += 1;
        }
    }

    /// Fock state `|n⟩`.
    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self {
            probs,
            tail_bound: 0.0,
            family: Family::Fock { n },
        }
    }

    /// Arbitrary distribution; entries must be non-negative and sum to
    /// `1 - tail_bound` within [`NORM_TOL`].
    pub fn custom(probs: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty photon-number distribution".into()));
        }
        if let Some((i, &p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
            return Err(Error::InvalidParameter(format!("p_{i} = {p} is negative")));
        }
        if !(tail_bound >= 0.0) {
            return Err(Error::InvalidParameter(format!("tail bound {tail_bound} is negative")));
        }
        let sum: f64 = probs.iter().copied().collect::<CompensatedSum<f64>>().value();
        if (sum + tail_bound - 1.0).abs() > NORM_TOL + tail_bound {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self {
            probs,
            tail_bound,
            family: Family::Custom,
        })
    }

    fn vacuum_of(family: Family) -> Self {
        Self {
            probs: vec![1.0],
            tail_bound: 0.0,
            family,
        }
    }

    /// Same probabilities with the family tag dropped, forcing evaluation by
    /// explicit Fock-basis sums.
    pub fn into_custom(mut self) -> Self {
        self.family = Family::Custom;
        self
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<CompensatedSum<f64>>().value()
    }

    /// `(⟨n⟩, ⟨(Δn)²⟩)`, analytic for the named families.
    pub fn mean_and_variance(&self) -> (f64, f64) {
        match self.family {
            Family::Coherent { mean } => (mean, mean),
            Family::Thermal { nbar } => (nbar, nbar * nbar + nbar),
            // ⟨n⟩ = 2n̄+1, ⟨n(n-1)⟩ = 6n̄² + 4n̄
            Family::Spats { nbar } => {
                let m = 2.0 * nbar + 1.0;
                (m, 6.0 * nbar * nbar + 4.0 * nbar + m - m * m)
            }
            Family::Fock { n } => (n as f64, 0.0),
            Family::Custom => {
                let mut m1 = CompensatedSum::new();
                let mut m2 = CompensatedSum::new();
                for (n, &p) in self.probs.iter().enumerate() {
                    m1.add(n as f64 * p);
                    m2.add((n * n) as f64 * p);
                }
                let m = m1.value();
                (m, m2.value() - m * m)
            }
        }
    }

    /// `⟨:h(n̂):⟩ = Σ_n p_n ⟨n|:h(n̂):|n⟩`.
    ///
    /// The Fock-basis sums alternate in sign; if the accumulated rounding
    /// error could exceed `1e-10` the result is refused.
    pub fn nom_expectation<T: Real>(&self, h: &PowerSeries<T>) -> Result<T> {
        let mut acc = CompensatedSum::new();
        let mut worst = 0.0f64;
        for (n, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (v, mag) = diag_with_magnitude(h, n)?;
            worst = worst.max(mag);
            acc.add(real::<T>(p) * v);
        }
        let bound = worst * T::unit_roundoff() * (self.probs.len() as f64 + 4.0);
        if bound > 1e-10 {
            return Err(Error::IllConditioned {
                level: self.cutoff(),
                bound,
            });
        }
        Ok(acc.value())
    }
}

fn diag_with_magnitude<T: Real>(h: &PowerSeries<T>, n: usize) -> Result<(T, f64)> {
    let v = diag_matrix_element(h, n)?;
    let mut mag = 0.0;
    let mut ff = 1.0;
    for k in 0..=n {
        mag += to_f64(h.coeff(k)).abs() * ff;
        ff *= (n - k) as f64;
    }
    Ok((v, mag))
}

/// Mandel `Q_M = ⟨(Δn)²⟩/⟨n⟩ - 1`.
pub fn mandel_q(dist: &PhotonNumberDistribution) -> Result<f64> {
    let (m, v) = dist.mean_and_variance();
    if m <= 0.0 {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok(v / m - 1.0)
}

/// `⟨α|β⟩` for coherent states.
pub fn coherent_overlap<T: Real>(alpha: Complex<T>, beta: Complex<T>) -> Complex<T> {
    let half = real::<T>(0.5);
    (alpha.conj() * beta - Complex::from(alpha.norm_sqr() * half + beta.norm_sqr() * half)).exp()
}

pub(crate) fn to_complex<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(real(z.re), real(z.im))
}

/// `Σ_i c_i |α_i⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentSuperposition {
    terms: Vec<(Complex64, Complex64)>,
}

impl CoherentSuperposition {
    /// Takes `(coefficient, amplitude)` pairs; the state must be normalized.
    pub fn new(terms: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("superposition has no terms".into()));
        }
        let s = Self { terms };
        let norm = s.norm::<crate::series::Dd>();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(s)
    }

    /// A single coherent state `|α⟩`.
    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            terms: vec![(Complex64::new(1.0, 0.0), alpha)],
        }
    }

    /// `N₋(|α⟩ - |-α⟩)` with `N₋ = [2(1 - e^{-2|α|²})]^{-1/2}`.
    pub fn odd_coherent(alpha: Complex64) -> Result<Self> {
        if alpha.norm_sqr() == 0.0 {
            return Err(Error::ZeroAmplitude);
        }
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidParameter(format!("amplitude {alpha} is not finite")));
        }
        let nm = odd_normalization(alpha.norm_sqr());
        Ok(Self {
            terms: vec![
                (Complex64::new(nm, 0.0), alpha),
                (Complex64::new(-nm, 0.0), -alpha),
            ],
        })
    }

    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }

    /// `Σ_ij c_i* c_j ⟨α_i|α_j⟩`.
    pub fn norm<T: Real>(&self) -> f64 {
        to_f64(self.pair_sum::<T, _>(|_| Complex::from(T::one())).re)
    }

    /// `Σ_ij c_i* c_j ⟨α_i|α_j⟩ g(α_i* α_j)`, the normally ordered
    /// expectation of an entire function `g` of `n̂`.
    pub(crate) fn pair_sum<T: Real, G>(&self, mut g: G) -> Complex<T>
    where
        G: FnMut(Complex<T>) -> Complex<T>,
    {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for &(ci, ai) in &self.terms {
            for &(cj, aj) in &self.terms {
                let (ci, ai, cj, aj) = (to_complex::<T>(ci), to_complex::<T>(ai), to_complex::<T>(cj), to_complex::<T>(aj));
                let v = ci.conj() * cj * coherent_overlap(ai, aj) * g(ai.conj() * aj);
                re.add(v.re);
                im.add(v.im);
            }
        }
        Complex::new(re.value(), im.value())
    }

    /// Real part of a pair sum, failing if the imaginary residue is too big.
    pub(crate) fn hermitian_sum<T: Real, G>(&self, g: G) -> Result<T>
    where
        G: FnMut(Complex<T>) -> Complex<T>,
    {
        let v = self.pair_sum(g);
        let residue = to_f64(v.im).abs();
        if residue > HERMITIAN_TOL {
            return Err(Error::NonHermitianResult(residue));
        }
        Ok(v.re)
    }

    /// `⟨:h(n̂):⟩` for a polynomial `h`, using `⟨α|:h(n̂):|β⟩ = h(α*β)⟨α|β⟩`.
    pub fn nom_expectation<T: Real>(&self, h: &PowerSeries<T>) -> Result<T> {
        self.hermitian_sum(|z| {
            h.coefficients()
                .iter()
                .rev()
                .fold(Complex::from(T::zero()), |acc, &c| acc * z + c)
        })
    }

    /// Photon-number distribution `|Σ_i c_i e^{-|α_i|²/2} α_i^n/√n!|²`,
    /// truncated once the remaining mass is below `tol`.
    pub fn photon_distribution(&self, tol: f64) -> Result<PhotonNumberDistribution> {
        check_tol(tol)?;
        // amplitude_i(n) = c_i e^{-|α_i|²/2} α_i^n / √n!, built by recurrence
        let mut amps: Vec<Complex64> = self
            .terms
            .iter()
            .map(|&(c, a)| c * (-a.norm_sqr() / 2.0).exp())
            .collect();
        let mut probs = Vec::new();
        let max_sq = self.terms.iter().map(|t| t.1.norm_sqr()).fold(0.0, f64::max);
        let mut n = 0usize;
        loop {
            let amp: Complex64 = amps.iter().sum();
            probs.push(amp.norm_sqr());
            // Minkowski over the terms: tail ≤ (Σ_i ‖tail of amplitude_i‖)²,
            // each bounded by a geometric majorant of its Poisson tail.
            let ratio = max_sq / (n + 2) as f64;
            if ratio < 0.5 {
                let root: f64 = amps
                    .iter()
                    .zip(&self.terms)
                    .map(|(a, t)| {
                        let next = a.norm_sqr() * t.1.norm_sqr() / (n + 1) as f64;
                        (next / (1.0 - ratio)).sqrt()
                    })
                    .sum();
                let tail = root * root;
                if tail <= tol {
                    return Ok(PhotonNumberDistribution {
                        probs,
                        tail_bound: tail,
                        family: Family::Custom,
                    });
                }
            }
            n += 1;
            let s = (n as f64).sqrt();
            for (a, &(_, alpha)) in amps.iter_mut().zip(&self.terms) {
                *a = *a * alpha / s;
            }
        }
    }
}

/// `N₋ = [2(1 - e^{-2|α|²})]^{-1/2}`.
pub fn odd_normalization(alpha_sq: f64) -> f64 {
    (-2.0 * (-2.0 * alpha_sq).exp_m1()).sqrt().recip()
}

/// Any single-mode state the forward model accepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum State {
    Distribution(PhotonNumberDistribution),
    Superposition(CoherentSuperposition),
}

impl From<PhotonNumberDistribution> for State {
    fn from(d: PhotonNumberDistribution) -> Self {
        State::Distribution(d)
    }
}

impl From<CoherentSuperposition> for State {
    fn from(s: CoherentSuperposition) -> Self {
        State::Superposition(s)
    }
}

impl State {
    /// `⟨:h(n̂):⟩` for a polynomial `h`.
    pub fn nom_expectation<T: Real>(&self, h: &PowerSeries<T>) -> Result<T> {
        match self {
            State::Distribution(d) => d.nom_expectation(h),
            State::Superposition(s) => s.nom_expectation(h),
        }
    }
}

/// Two-mode photon-number distribution, stored sparsely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPhotonDistribution {
    entries: Vec<(usize, usize, f64)>,
    cutoffs: (usize, usize),
    tail_bound: f64,
}

impl JointPhotonDistribution {
    /// Two-mode squeezed vacuum, `p_{n,n} = (1-|ξ|²)|ξ|^{2n}`.
    pub fn tmsv(xi: Complex64, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let s = xi.norm_sqr();
        if !(s < 1.0) {
            return Err(Error::SqueezingOutOfRange(xi.norm()));
        }
        let mut entries = Vec::new();
        let mut p = 1.0 - s;
        let mut tail = s;
        let mut n = 0;
        loop {
            entries.push((n, n, p));
            if tail <= tol {
                break;
            }
            p *= s;
            tail *= s;
            n += 1;
        }
        Ok(Self {
            entries,
            cutoffs: (n, n),
            tail_bound: tail,
        })
    }

    /// Product state `ρ_1 ⊗ ρ_2`.
    pub fn product(a: &PhotonNumberDistribution, b: &PhotonNumberDistribution) -> Self {
        let mut entries = Vec::new();
        for (n1, &p1) in a.probs.iter().enumerate() {
            for (n2, &p2) in b.probs.iter().enumerate() {
                if p1 * p2 != 0.0 {
                    entries.push((n1, n2, p1 * p2));
                }
            }
        }
        let ta = a.tail_bound;
        let tb = b.tail_bound;
        Self {
            entries,
            cutoffs: (a.cutoff(), b.cutoff()),
            tail_bound: ta + tb - ta * tb,
        }
    }

    /// Convex combination `Σ w_i ρ_i`.
    pub fn mixture(components: &[(f64, JointPhotonDistribution)]) -> Result<Self> {
        let wsum: f64 = components.iter().map(|c| c.0).sum();
        if components.is_empty() || components.iter().any(|c| !(c.0 >= 0.0)) || (wsum - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter("mixture weights must be >= 0 and sum to 1".into()));
        }
        let c1 = components.iter().map(|c| c.1.cutoffs.0).max().unwrap_or(0);
        let c2 = components.iter().map(|c| c.1.cutoffs.1).max().unwrap_or(0);
        let mut dense = vec![0.0; (c1 + 1) * (c2 + 1)];
        let mut tail = 0.0;
        for (w, d) in components {
            for &(n1, n2, p) in &d.entries {
                dense[n1 * (c2 + 1) + n2] += w * p;
            }
            tail += w * d.tail_bound;
        }
        let entries = dense
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p != 0.0)
            .map(|(i, p)| (i / (c2 + 1), i % (c2 + 1), p))
            .collect();
        Ok(Self {
            entries,
            cutoffs: (c1, c2),
            tail_bound: tail,
        })
    }

    /// Nonzero `(n1, n2, p)` entries.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        self.cutoffs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).collect::<CompensatedSum<f64>>().value()
    }

    /// Reduced distribution of mode 0 or 1.
    pub fn marginal(&self, mode: usize) -> Result<PhotonNumberDistribution> {
        let cut = match mode {
            0 => self.cutoffs.0,
            1 => self.cutoffs.1,
            _ => return Err(Error::InvalidParameter(format!("mode {mode} is not 0 or 1"))),
        };
        let mut probs = vec![CompensatedSum::<f64>::new(); cut + 1];
        for &(n1, n2, p) in &self.entries {
            probs[if mode == 0 { n1 } else { n2 }].add(p);
        }
        Ok(PhotonNumberDistribution {
            probs: probs.iter().map(|s| s.value()).collect(),
            tail_bound: self.tail_bound,
            family: Family::Custom,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Dd;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn normalized(d: &PhotonNumberDistribution) -> bool {
        d.tail_bound() <= DEFAULT_TOL && (d.total() + d.tail_bound() - 1.0).abs() <= NORM_TOL
    }

    #[test]
    fn coherent_examples() {
        let vac = PhotonNumberDistribution::coherent(0.0, DEFAULT_TOL).unwrap();
        assert_eq!(vac.probs(), &[1.0]);
        let c4 = PhotonNumberDistribution::coherent(4.0, DEFAULT_TOL).unwrap();
        assert!(close(c4.probs()[0], 1.8315638888734179e-2, 1e-16));
        assert!(normalized(&c4));
        let c1 = PhotonNumberDistribution::coherent(1.0, 1e-15).unwrap();
        let exact_tail: f64 = (c1.cutoff() + 1..c1.cutoff() + 40)
            .map(|n| (-1.0f64).exp() / (1..=n).map(|k| k as f64).product::<f64>())
            .sum();
        assert!(exact_tail <= 1e-15 && exact_tail <= c1.tail_bound());
        // one fewer level would not have sufficed
        let p_last = c1.probs()[c1.cutoff()];
        assert!(exact_tail + p_last > 1e-15);
    }

    #[test]
    fn thermal_examples() {
        let t0 = PhotonNumberDistribution::thermal(0.0, DEFAULT_TOL).unwrap();
        assert_eq!(t0.probs(), &[1.0]);
        let t1 = PhotonNumberDistribution::thermal(1.0, DEFAULT_TOL).unwrap();
        assert_eq!(&t1.probs()[..2], &[0.5, 0.25]);
        let t2 = PhotonNumberDistribution::thermal(2.0, DEFAULT_TOL).unwrap();
        for (n, &p) in t2.probs().iter().enumerate() {
            // the recursion loses about one ulp per level
            let want = 2f64.powi(n as i32) / 3f64.powi(n as i32 + 1);
            assert!(close(p, want, 4e-16 * (n + 1) as f64 * want));
        }
        assert!(normalized(&t2));
    }

    #[test]
    fn spats_examples_and_normalization() {
        for &nb in &[0.0, 1e-3, 0.5, 1.0, 3.0, 10.0] {
            let s = PhotonNumberDistribution::spats(nb, DEFAULT_TOL).unwrap();
            assert_eq!(s.probs()[0], 0.0);
            assert!(normalized(&s), "nbar={nb}: {}", s.total() + s.tail_bound());
        }
        let s0 = PhotonNumberDistribution::spats(0.0, DEFAULT_TOL).unwrap();
        assert_eq!(s0.probs()[1], 1.0);
        let s1 = PhotonNumberDistribution::spats(1.0, DEFAULT_TOL).unwrap();
        for (n, &p) in s1.probs().iter().enumerate().skip(1) {
            assert!(close(p, n as f64 / (4.0 * 2f64.powi(n as i32 - 1)), 1e-16));
        }
    }

    #[test]
    fn fock_examples() {
        assert_eq!(PhotonNumberDistribution::fock(0).probs(), &[1.0]);
        assert_eq!(PhotonNumberDistribution::fock(1).probs(), &[0.0, 1.0]);
        let f5 = PhotonNumberDistribution::fock(5);
        assert_eq!(f5.probs()[5], 1.0);
        assert_eq!(f5.tail_bound(), 0.0);
    }

    #[test]
    fn custom_rejects_bad_input() {
        assert!(PhotonNumberDistribution::custom(vec![0.5, 0.5], 0.0).is_ok());
        assert!(matches!(
            PhotonNumberDistribution::custom(vec![1.5, -0.5], 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            PhotonNumberDistribution::custom(vec![0.5, 0.4], 0.0),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn mandel_examples() {
        let p = PhotonNumberDistribution::coherent(3.0, DEFAULT_TOL).unwrap();
        assert!(close(mandel_q(&p).unwrap(), 0.0, 1e-15));
        assert!(close(mandel_q(&p.clone().into_custom()).unwrap(), 0.0, 1e-12));
        assert_eq!(mandel_q(&PhotonNumberDistribution::fock(1)).unwrap(), -1.0);
        let t = PhotonNumberDistribution::thermal(2.0, DEFAULT_TOL).unwrap();
        assert!(close(mandel_q(&t).unwrap(), 2.0, 1e-15));
        assert!(close(mandel_q(&t.into_custom()).unwrap(), 2.0, 1e-10));
        let s = PhotonNumberDistribution::spats(0.7, DEFAULT_TOL).unwrap();
        assert!(close(mandel_q(&s).unwrap(), mandel_q(&s.clone().into_custom()).unwrap(), 1e-10));
        assert_eq!(mandel_q(&PhotonNumberDistribution::fock(0)), Err(Error::ZeroMeanPhotonNumber));
    }

    #[test]
    fn odd_coherent_examples() {
        let s = CoherentSuperposition::odd_coherent(Complex64::new(1.0, 0.0)).unwrap();
        // [2(1 - e^-2)]^(-1/2)
        assert!(close(s.terms()[0].0.re, 0.7604333115894075, 1e-12));
        let s2 = CoherentSuperposition::odd_coherent(Complex64::new(2.0, 0.0)).unwrap();
        assert!(close(s2.norm::<Dd>(), 1.0, 1e-12));
        let d = s2.photon_distribution(DEFAULT_TOL).unwrap();
        for (n, &p) in d.probs().iter().enumerate() {
            if n % 2 == 0 {
                assert!(p < 1e-30, "even level {n} has {p}");
            }
        }
        assert_eq!(
            CoherentSuperposition::odd_coherent(Complex64::new(0.0, 0.0)),
            Err(Error::ZeroAmplitude)
        );
    }

    #[test]
    fn odd_coherent_first_moment_matches_fock_sum() {
        for &a2 in &[0.1f64, 0.5, 1.0, 2.0, 4.0] {
            let alpha = Complex64::new(a2.sqrt(), 0.0);
            let s = CoherentSuperposition::odd_coherent(alpha).unwrap();
            let h = PowerSeries::<Dd>::monomial(1, Dd::from(1.0), 1);
            let got = to_f64(s.nom_expectation(&h).unwrap());
            let want = a2 * (1.0 + (-2.0 * a2).exp()) / (1.0 - (-2.0 * a2).exp());
            assert!(close(got, want, 1e-12 * want), "{a2}: {got} vs {want}");
            let d = s.photon_distribution(1e-16).unwrap();
            let fock: f64 = d.probs().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            assert!(close(fock, want, 1e-12 * want.max(1.0)));
        }
    }

    #[test]
    fn odd_coherent_even_moments_positive() {
        let s = CoherentSuperposition::odd_coherent(Complex64::new(0.8, 0.3)).unwrap();
        for m in (2..=8).step_by(2) {
            let h = PowerSeries::<Dd>::monomial(m, Dd::from(1.0), m);
            assert!(to_f64(s.nom_expectation(&h).unwrap()) > 0.0);
        }
    }

    #[test]
    fn nom_expectation_examples() {
        let h = PowerSeries::<Dd>::from_f64(&[0.3, -2.0, 5.0]);
        let vac = PhotonNumberDistribution::fock(0);
        assert_eq!(to_f64(vac.nom_expectation(&h).unwrap()), 0.3);

        let mu = 2.5;
        let gamma = 0.4;
        let c = PhotonNumberDistribution::coherent(mu, 1e-16).unwrap();
        let e = PowerSeries::<Dd>::exp_linear(Dd::from(-gamma), c.cutoff());
        let got = to_f64(c.nom_expectation(&e).unwrap());
        assert!(close(got, (-gamma * mu).exp(), 1e-13));

        let sup = CoherentSuperposition::coherent(Complex64::new(mu.sqrt(), 0.0));
        let got = to_f64(sup.nom_expectation(&e).unwrap());
        assert!(close(got, (-gamma * mu).exp(), 1e-13));

        assert!(matches!(
            c.nom_expectation(&PowerSeries::<Dd>::one(2)),
            Err(Error::OrderTooLow { .. })
        ));
    }

    #[test]
    fn tmsv_examples() {
        let v = JointPhotonDistribution::tmsv(Complex64::new(0.0, 0.0), DEFAULT_TOL).unwrap();
        assert_eq!(v.entries(), &[(0, 0, 1.0)]);
        let h = JointPhotonDistribution::tmsv(Complex64::new(0.5f64.sqrt(), 0.0), DEFAULT_TOL).unwrap();
        for &(n1, n2, p) in h.entries() {
            assert_eq!(n1, n2);
            let want = 0.5f64.powi(n1 as i32 + 1);
            assert!(close(p, want, 4e-16 * (n1 + 1) as f64 * want));
        }
        assert!(matches!(
            JointPhotonDistribution::tmsv(Complex64::new(1.0, 0.0), DEFAULT_TOL),
            Err(Error::SqueezingOutOfRange(_))
        ));
    }

    #[test]
    fn tmsv_marginals_are_thermal() {
        for &s in &[0.1f64, 0.5, 0.9] {
            let j = JointPhotonDistribution::tmsv(Complex64::new(0.0, s.sqrt()), DEFAULT_TOL).unwrap();
            let t = PhotonNumberDistribution::thermal(s / (1.0 - s), DEFAULT_TOL).unwrap();
            for mode in 0..2 {
                let m = j.marginal(mode).unwrap();
                for n in 0..=m.cutoff().min(t.cutoff()) {
                    assert!(close(m.probs()[n], t.probs()[n], 1e-12));
                }
            }
        }
    }

    #[test]
    fn product_and_mixture() {
        let a = PhotonNumberDistribution::coherent(1.0, DEFAULT_TOL).unwrap();
        let b = PhotonNumberDistribution::thermal(0.5, DEFAULT_TOL).unwrap();
        let p = JointPhotonDistribution::product(&a, &b);
        assert!(close(p.total() + p.tail_bound(), 1.0, 1e-12));
        let m0 = p.marginal(0).unwrap();
        for n in 0..=a.cutoff() {
            // the marginal misses the truncated tail of the other mode
            assert!(close(m0.probs()[n], a.probs()[n], b.tail_bound() + 1e-15));
        }
        let q = JointPhotonDistribution::product(&b, &a);
        let mix = JointPhotonDistribution::mixture(&[(0.25, p), (0.75, q)]).unwrap();
        assert!(close(mix.total() + mix.tail_bound(), 1.0, 1e-12));
        assert!(JointPhotonDistribution::mixture(&[]).is_err());
    }
}
