//! From click statistics to normally ordered moments, matrices of moments
//! and nonclassicality verdicts.
//!
//! Classical light has a non-negative P function, which makes every matrix
//! of normally ordered moments positive semidefinite. A negative principal
//! minor (or eigenvalue) therefore certifies nonclassical light.

use std::cmp::Reverse;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::detector::{ClickStatistics, JointClickStatistics};
use crate::error::{Error, Result};
use crate::series::{falling_factorial_real, to_f64, CompensatedSum, Dd};

/// Default absolute verdict threshold for exact statistics.
pub const DEFAULT_THRESHOLD: f64 = 1e-9;
/// Default number of standard errors for sampled statistics.
pub const DEFAULT_SIGMAS: f64 = 3.0;

/// Single-bank or two-bank click statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Statistics {
    Single(ClickStatistics),
    Joint(JointClickStatistics),
}

impl From<ClickStatistics> for Statistics {
    fn from(s: ClickStatistics) -> Self {
        Statistics::Single(s)
    }
}

impl From<JointClickStatistics> for Statistics {
    fn from(s: JointClickStatistics) -> Self {
        Statistics::Joint(s)
    }
}

impl Statistics {
    pub fn probs(&self) -> &[f64] {
        match self {
            Statistics::Single(s) => s.probs(),
            Statistics::Joint(j) => j.probs(),
        }
    }
}

fn factorial_moment_dd(probs: &[f64], m: usize) -> Dd {
    probs
        .iter()
        .enumerate()
        .skip(m)
        .map(|(k, &c)| falling_factorial_real::<Dd>(k, m) * Dd::from(c))
        .collect::<CompensatedSum<Dd>>()
        .value()
}

/// `Σ_k k(k-1)…(k-m+1) c_k`.
pub fn factorial_moment(stats: &ClickStatistics, m: usize) -> Result<f64> {
    if m > stats.n() {
        return Err(Error::OrderExceedsDiodes {
            order: m,
            diodes: stats.n(),
        });
    }
    Ok(to_f64(factorial_moment_dd(stats.probs(), m)))
}

/// `⟨:π̂^m:⟩` for `m = 0..=N`, kept in double-double.
#[derive(Clone, Debug, PartialEq)]
pub struct PiMoments {
    values: Vec<Dd>,
}

impl PiMoments {
    /// Wraps moments `⟨:π̂^0:⟩, ⟨:π̂^1:⟩, …` computed elsewhere.
    pub fn from_values(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&v| Dd::from(v)).collect(),
        }
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, m: usize) -> f64 {
        to_f64(self.values[m])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().map(|&v| to_f64(v)).collect()
    }
}

/// `⟨:π̂^m:⟩ = (N-m)!/N! Σ_k k^{(m)} c_k`.
pub fn pi_moments(stats: &ClickStatistics) -> PiMoments {
    let n = stats.n();
    let values = (0..=n)
        .map(|m| factorial_moment_dd(stats.probs(), m) / falling_factorial_real::<Dd>(n, m))
        .collect();
    PiMoments { values }
}

/// `⟨:π̂_1^{m1} π̂_2^{m2}:⟩` for `m_d ≤ N_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPiMoments {
    caps: (usize, usize),
    values: Vec<Dd>,
}

impl JointPiMoments {
    pub fn max_orders(&self) -> (usize, usize) {
        self.caps
    }

    pub fn get(&self, m1: usize, m2: usize) -> f64 {
        to_f64(self.get_dd(m1, m2))
    }

    fn get_dd(&self, m1: usize, m2: usize) -> Dd {
        self.values[m1 * (self.caps.1 + 1) + m2]
    }
}

/// Joint moments from the double factorial-moment sums.
pub fn joint_pi_moments(stats: &JointClickStatistics) -> JointPiMoments {
    let (n1, n2) = stats.diodes();
    let mut values = Vec::with_capacity((n1 + 1) * (n2 + 1));
    for m1 in 0..=n1 {
        for m2 in 0..=n2 {
            let mut acc = CompensatedSum::<Dd>::new();
            for k1 in m1..=n1 {
                let f1 = falling_factorial_real::<Dd>(k1, m1);
                for k2 in m2..=n2 {
                    acc.add(f1 * falling_factorial_real::<Dd>(k2, m2) * Dd::from(stats.get(k1, k2)));
                }
            }
            let norm = falling_factorial_real::<Dd>(n1, m1) * falling_factorial_real::<Dd>(n2, m2);
            values.push(acc.value() / norm);
        }
    }
    JointPiMoments {
        caps: (n1, n2),
        values,
    }
}

/// Symmetric matrix of moments over a basis of exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    entries: Vec<Dd>,
    basis: Vec<(usize, usize)>,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Row exponents; single-mode matrices use `(m, 0)`.
    pub fn basis(&self) -> &[(usize, usize)] {
        &self.basis
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        to_f64(self.entries[i * self.dim() + j])
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.get(i, j))
    }

    /// Builds a matrix from explicit entries, mostly for tests and
    /// externally supplied moments.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("moment matrix must be square".into()));
        }
        Ok(Self {
            entries: rows.iter().flatten().map(|&v| Dd::from(v)).collect(),
            basis: (0..d).map(|m| (m, 0)).collect(),
        })
    }
}

/// Hankel matrix `(⟨:π̂^{m+m'}:⟩)` for `m, m' ≤ ⌊N/2⌋`.
pub fn moment_matrix(mom: &PiMoments, n: usize) -> Result<MomentMatrix> {
    let half = n / 2;
    if mom.max_order() < 2 * half {
        return Err(Error::InsufficientOrder {
            needed: 2 * half,
            available: mom.max_order(),
        });
    }
    let d = half + 1;
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(mom.values[i + j]);
        }
    }
    Ok(MomentMatrix {
        entries,
        basis: (0..d).map(|m| (m, 0)).collect(),
    })
}

/// Exponent pairs with `m_d ≤ ⌊N_d/2⌋`, ordered by total degree and then
/// with higher powers of the first mode first: `(0,0), (1,0), (0,1), (2,0), …`.
pub fn joint_basis(n1: usize, n2: usize, max_degree: Option<usize>) -> Vec<(usize, usize)> {
    let mut basis: Vec<(usize, usize)> = (0..=n1 / 2)
        .flat_map(|a| (0..=n2 / 2).map(move |b| (a, b)))
        .filter(|&(a, b)| max_degree.map_or(true, |d| a + b <= d))
        .collect();
    basis.sort_by_key(|&(a, b)| (a + b, Reverse(a)));
    basis
}

/// `(⟨:π̂_1^{a+a'} π̂_2^{b+b'}:⟩)` over [`joint_basis`].
pub fn joint_moment_matrix(
    mom: &JointPiMoments,
    n1: usize,
    n2: usize,
    max_degree: Option<usize>,
) -> Result<MomentMatrix> {
    let (c1, c2) = mom.max_orders();
    for (need, have) in [(2 * (n1 / 2), c1), (2 * (n2 / 2), c2)] {
        if have < need {
            return Err(Error::InsufficientOrder {
                needed: need,
                available: have,
            });
        }
    }
    let basis = joint_basis(n1, n2, max_degree);
    let d = basis.len();
    let mut entries = Vec::with_capacity(d * d);
    for &(a, b) in &basis {
        for &(a2, b2) in &basis {
            entries.push(mom.get_dd(a + a2, b + b2));
        }
    }
    Ok(MomentMatrix { entries, basis })
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det_dd(mut a: Vec<Dd>, n: usize) -> Dd {
    let mut det = Dd::from(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        let pv = a[pivot * n + col];
        if pv == Dd::from(0.0) {
            return Dd::from(0.0);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        det = det * pv;
        for i in col + 1..n {
            let factor = a[i * n + col] / pv;
            if factor == Dd::from(0.0) {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[i * n + j] = a[i * n + j] - factor * v;
            }
        }
    }
    det
}

/// Determinant of the principal submatrix on `indices`.
pub fn principal_minor(m: &MomentMatrix, indices: &[usize]) -> f64 {
    let d = m.dim();
    let k = indices.len();
    let mut sub = Vec::with_capacity(k * k);
    for &i in indices {
        for &j in indices {
            sub.push(m.entries[i * d + j]);
        }
    }
    to_f64(det_dd(sub, k))
}

/// Determinants of the top-left `k×k` blocks, `k = 1..=dim`.
pub fn leading_principal_minors(m: &MomentMatrix) -> Vec<f64> {
    (1..=m.dim())
        .map(|k| principal_minor(m, &(0..k).collect::<Vec<_>>()))
        .collect()
}

/// Smallest eigenvalue of the (symmetric) matrix of moments.
pub fn min_eigenvalue(m: &MomentMatrix) -> f64 {
    SymmetricEigen::new(m.to_f64())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `Q_B = N⟨(Δc)²⟩/(⟨c⟩(N-⟨c⟩)) - 1`.
pub fn qb_parameter(stats: &ClickStatistics) -> Result<f64> {
    let n = Dd::from(stats.n() as f64);
    let mut m1 = CompensatedSum::<Dd>::new();
    let mut m2 = CompensatedSum::<Dd>::new();
    for (k, &c) in stats.probs().iter().enumerate() {
        let kc = Dd::from(k as f64) * Dd::from(c);
        m1.add(kc);
        m2.add(kc * Dd::from(k as f64));
    }
    let mean = m1.value();
    let var = m2.value() - mean * mean;
    let denom = mean * (n - mean);
    if to_f64(mean) <= 0.0 || to_f64(n - mean) <= 0.0 || to_f64(denom) == 0.0 {
        return Err(Error::DegenerateMean(to_f64(mean)));
    }
    Ok(to_f64(n * var / denom - Dd::from(1.0)))
}

/// `⟨:(Δπ̂_1)²:⟩⟨:(Δπ̂_2)²:⟩ - ⟨:Δπ̂_1 Δπ̂_2:⟩²`, non-negative for
/// classically correlated light.
pub fn cross_correlation_minor(stats: &JointClickStatistics) -> Result<f64> {
    let (n1, n2) = stats.diodes();
    for n in [n1, n2] {
        if n < 2 {
            return Err(Error::OrderExceedsDiodes { order: 2, diodes: n });
        }
    }
    let m = joint_pi_moments(stats);
    let p1 = m.get_dd(1, 0);
    let p2 = m.get_dd(0, 1);
    let v1 = m.get_dd(2, 0) - p1 * p1;
    let v2 = m.get_dd(0, 2) - p2 * p2;
    let c = m.get_dd(1, 1) - p1 * p2;
    Ok(to_f64(v1 * v2 - c * c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "nonclassical")]
    Nonclassical,
    #[serde(rename = "consistent-with-classical")]
    ConsistentWithClassical,
}

/// Standard errors of the reported witness quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uncertainties {
    pub minors: Vec<f64>,
    pub min_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_minor: Option<f64>,
    /// Number of standard errors a quantity must lie below zero.
    pub sigmas: f64,
    /// Quantities whose sampling distribution is too irregular for a
    /// standard-error test; reported but not used for the verdict.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub excluded: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub minors: Vec<f64>,
    pub min_eigenvalue: f64,
    /// `None` when the mean click number is 0 or N.
    pub qb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_minor: Option<f64>,
    pub verdict: Verdict,
    pub threshold: f64,
    /// Names of the quantities that triggered a nonclassical verdict.
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Uncertainties>,
}

impl WitnessReport {
    fn named(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self
            .minors
            .iter()
            .enumerate()
            .map(|(i, &m)| (format!("minor_{}", i + 1), m))
            .collect();
        v.push(("min_eigenvalue".into(), self.min_eigenvalue));
        if let Some(q) = self.qb {
            v.push(("qb".into(), q));
        }
        if let Some(c) = self.cross_minor {
            v.push(("cross_minor".into(), c));
        }
        v
    }

    fn named_stderr(u: &Uncertainties) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = u
            .minors
            .iter()
            .enumerate()
            .map(|(i, &m)| (format!("minor_{}", i + 1), m))
            .collect();
        v.push(("min_eigenvalue".into(), u.min_eigenvalue));
        if let Some(q) = u.qb {
            v.push(("qb".into(), q));
        }
        if let Some(c) = u.cross_minor {
            v.push(("cross_minor".into(), c));
        }
        v
    }

    /// Re-applies the verdict rule: a quantity violates classicality if it
    /// lies below `-threshold`, or below `-sigmas·stderr` when standard
    /// errors are attached.
    fn decide(&mut self) {
        let values = self.named();
        self.violations = match &self.stderr {
            None => values
                .into_iter()
                .filter(|(_, v)| *v < -self.threshold)
                .map(|(n, _)| n)
                .collect(),
            Some(u) => {
                let errs = Self::named_stderr(u);
                values
                    .into_iter()
                    .zip(errs)
                    .filter(|((n, _), _)| !u.excluded.contains(n))
                    .filter(|((_, v), (_, e))| *v < -u.sigmas * e)
                    .map(|((n, _), _)| n)
                    .collect()
            }
        };
        self.verdict = if self.violations.is_empty() {
            Verdict::ConsistentWithClassical
        } else {
            Verdict::Nonclassical
        };
    }

    /// Attaches standard errors and recomputes the verdict with them.
    pub fn with_uncertainties(mut self, u: Uncertainties) -> Self {
        self.stderr = Some(u);
        self.decide();
        self
    }

    /// Point values in the order used by [`Uncertainties`]: minors, minimum
    /// eigenvalue, then `Q_B` and the cross minor when present.
    pub fn values(&self) -> Vec<f64> {
        self.named().into_iter().map(|(_, v)| v).collect()
    }

    pub fn is_nonclassical(&self) -> bool {
        self.verdict == Verdict::Nonclassical
    }
}

/// Options for [`witness_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessOptions {
    pub threshold: f64,
    /// Largest total exponent in the joint basis; `None` keeps every
    /// exponent pair allowed by the per-bank caps.
    pub max_degree: Option<usize>,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            max_degree: None,
        }
    }
}

/// Minors, minimum eigenvalue, `Q_B` (single bank) or the cross minor (two
/// banks) and the resulting verdict.
pub fn witness_report(stats: &Statistics, opts: WitnessOptions) -> Result<WitnessReport> {
    let (matrix, qb, cross) = match stats {
        Statistics::Single(s) => {
            let m = moment_matrix(&pi_moments(s), s.n())?;
            (m, qb_parameter(s).ok(), None)
        }
        Statistics::Joint(j) => {
            let (n1, n2) = j.diodes();
            let m = joint_moment_matrix(&joint_pi_moments(j), n1, n2, opts.max_degree)?;
            (m, None, cross_correlation_minor(j).ok())
        }
    };
    let mut report = WitnessReport {
        minors: leading_principal_minors(&matrix),
        min_eigenvalue: min_eigenvalue(&matrix),
        qb,
        cross_minor: cross,
        verdict: Verdict::ConsistentWithClassical,
        threshold: opts.threshold,
        violations: Vec::new(),
        stderr: None,
    };
    report.decide();
    Ok(report)
}

/// `⟨c⟩(N-⟨c⟩) Q_B / (N²(N-1))`, the closed form of the 2×2 leading minor.
pub fn qb_minor_identity(stats: &ClickStatistics) -> Result<f64> {
    let n = stats.n() as f64;
    let mean = stats.mean();
    let qb = qb_parameter(stats)?;
    Ok(mean * (n - mean) * qb / (n * n * (n - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{click_statistics, joint_click_statistics, DetectorConfig};
    use crate::series::binomial_real;
    use crate::states::{JointPhotonDistribution, PhotonNumberDistribution, DEFAULT_TOL};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn binom(n: usize, p: f64) -> ClickStatistics {
        ClickStatistics::new(
            (0..=n)
                .map(|k| binomial_real::<f64>(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
                .collect(),
        )
        .unwrap()
    }

    fn fock1(n: usize, eta: f64) -> ClickStatistics {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0 - eta;
        v[1] = eta;
        ClickStatistics::new(v).unwrap()
    }

    fn single(state: PhotonNumberDistribution, det: &DetectorConfig) -> ClickStatistics {
        click_statistics::<Dd>(&state.into(), det).unwrap()
    }

    #[test]
    fn factorial_moment_examples() {
        let b = binom(8, 0.3);
        assert!(close(factorial_moment(&b, 0).unwrap(), 1.0, 1e-15));
        for m in 0..=8 {
            let want = falling_factorial_real::<f64>(8, m) * 0.3f64.powi(m as i32);
            assert!(close(factorial_moment(&b, m).unwrap(), want, 1e-12 * want.max(1.0)));
        }
        assert_eq!(factorial_moment(&fock1(8, 0.9), 2).unwrap(), 0.0);
        assert_eq!(
            factorial_moment(&b, 9),
            Err(Error::OrderExceedsDiodes { order: 9, diodes: 8 })
        );
    }

    #[test]
    fn pi_moment_examples() {
        let m = pi_moments(&fock1(8, 0.9));
        assert!(close(m.get(1), 0.9 / 8.0, 1e-16));
        assert_eq!(m.get(2), 0.0);
        let vac = pi_moments(&ClickStatistics::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap());
        assert_eq!(vac.to_vec(), vec![1.0, 0.0, 0.0, 0.0]);

        let det = DetectorConfig::linear(6, 0.8).unwrap();
        let mu = 2.0;
        let c = single(PhotonNumberDistribution::coherent(mu, DEFAULT_TOL).unwrap(), &det);
        let p = 1.0 - (-0.8 * mu / 6.0f64).exp();
        let m = pi_moments(&c);
        for k in 0..=6 {
            assert!(close(m.get(k), p.powi(k as i32), 1e-14));
        }
    }

    #[test]
    fn moment_matrix_shapes() {
        let m = pi_moments(&binom(3, 0.2));
        let mm = moment_matrix(&m, 3).unwrap();
        assert_eq!(mm.dim(), 2);
        assert!(close(mm.get(0, 1), 0.2, 1e-16));
        assert!(close(mm.get(1, 1), 0.04, 1e-16));
        let m8 = pi_moments(&binom(8, 0.2));
        assert_eq!(moment_matrix(&m8, 8).unwrap().dim(), 5);
        let short = PiMoments::from_values(&[1.0, 0.1]);
        assert_eq!(
            moment_matrix(&short, 4),
            Err(Error::InsufficientOrder { needed: 4, available: 1 })
        );
        let vac = pi_moments(&ClickStatistics::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap());
        let mv = moment_matrix(&vac, 4).unwrap();
        assert_eq!(leading_principal_minors(&mv), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn joint_basis_order() {
        assert_eq!(
            joint_basis(4, 4, Some(2)),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        let full = joint_basis(4, 4, None);
        assert_eq!(full.len(), 9);
        assert_eq!(full[8], (2, 2));
        assert_eq!(joint_basis(2, 5, None), vec![(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn minors_examples() {
        let id = MomentMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(leading_principal_minors(&id), vec![1.0, 1.0, 1.0]);
        assert!(close(min_eigenvalue(&id), 1.0, 1e-15));

        let v = [1.0, 0.5, 0.25];
        let rank1 = MomentMatrix::from_rows(&v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect::<Vec<_>>()).unwrap();
        let m = leading_principal_minors(&rank1);
        assert_eq!(m[0], 1.0);
        assert!(m[1..].iter().all(|x| x.abs() < 1e-30));

        let neg = MomentMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.1]]).unwrap();
        assert!(leading_principal_minors(&neg)[1] < 0.0);
        assert!(min_eigenvalue(&neg) < 0.0);
    }

    #[test]
    fn single_photon_qb() {
        let c = fock1(8, 0.9);
        let qb = qb_parameter(&c).unwrap();
        let want = -0.9 * 7.0 / 7.1;
        assert!(close(qb, want, 1e-15));
        assert!(close(qb, -0.887324, 1e-6));
        let mm = moment_matrix(&pi_moments(&c), 8).unwrap();
        let minor = leading_principal_minors(&mm)[1];
        assert!(close(minor, qb_minor_identity(&c).unwrap(), 1e-17));
        let r = witness_report(&c.into(), WitnessOptions::default()).unwrap();
        assert!(r.is_nonclassical());
        assert!(r.violations.contains(&"qb".to_string()));
    }

    #[test]
    fn qb_examples() {
        for n in [2usize, 5, 16] {
            assert!(close(qb_parameter(&binom(n, 0.37)).unwrap(), 0.0, 1e-12));
        }
        let det = DetectorConfig::linear(8, 0.9).unwrap();
        let th = single(PhotonNumberDistribution::thermal(1.0, DEFAULT_TOL).unwrap(), &det);
        assert!(qb_parameter(&th).unwrap() > 0.0);
        let vac = ClickStatistics::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(qb_parameter(&vac), Err(Error::DegenerateMean(0.0)));
        let full = ClickStatistics::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(qb_parameter(&full), Err(Error::DegenerateMean(_))));
        // degenerate Q_B falls back to the minors
        let r = witness_report(&vac.into(), WitnessOptions::default()).unwrap();
        assert_eq!(r.qb, None);
        assert_eq!(r.verdict, Verdict::ConsistentWithClassical);
    }

    #[test]
    fn cross_minor_examples() {
        let det = DetectorConfig::linear(4, 0.8).unwrap();
        let a = PhotonNumberDistribution::coherent(1.0, DEFAULT_TOL).unwrap();
        let b = PhotonNumberDistribution::coherent(2.5, DEFAULT_TOL).unwrap();
        let j = joint_click_statistics::<Dd>(&JointPhotonDistribution::product(&a, &b), &det, &det).unwrap();
        assert!(close(cross_correlation_minor(&j).unwrap(), 0.0, 1e-12));

        let t = JointPhotonDistribution::tmsv(Complex64::new(0.5f64.sqrt(), 0.0), DEFAULT_TOL).unwrap();
        let j = joint_click_statistics::<Dd>(&t, &det, &det).unwrap();
        let m = joint_pi_moments(&j);
        assert!(m.get(1, 1) > m.get(1, 0) * m.get(0, 1));
        assert!(cross_correlation_minor(&j).unwrap() < 0.0);
        let r = witness_report(&j.clone().into(), WitnessOptions::default()).unwrap();
        assert!(r.is_nonclassical());
        // the cross minor is the 3×3 leading minor of the joint matrix
        assert!(close(r.minors[2], cross_correlation_minor(&j).unwrap(), 1e-15));

        let ta = PhotonNumberDistribution::thermal(0.7, DEFAULT_TOL).unwrap();
        let tb = PhotonNumberDistribution::thermal(1.3, DEFAULT_TOL).unwrap();
        let j = joint_click_statistics::<Dd>(&JointPhotonDistribution::product(&ta, &tb), &det, &det).unwrap();
        assert!(cross_correlation_minor(&j).unwrap() > 0.0);

        let small = DetectorConfig::linear(1, 0.8).unwrap();
        let j = joint_click_statistics::<Dd>(&JointPhotonDistribution::product(&a, &b), &small, &det).unwrap();
        assert!(matches!(cross_correlation_minor(&j), Err(Error::OrderExceedsDiodes { .. })));
    }

    #[test]
    fn joint_moments_factorize_for_products() {
        let d1 = DetectorConfig::linear(3, 0.6).unwrap();
        let d2 = DetectorConfig::linear(5, 0.9).unwrap();
        let a = PhotonNumberDistribution::thermal(0.4, DEFAULT_TOL).unwrap();
        let b = PhotonNumberDistribution::coherent(2.0, DEFAULT_TOL).unwrap();
        let j = joint_click_statistics::<Dd>(&JointPhotonDistribution::product(&a, &b), &d1, &d2).unwrap();
        let m = joint_pi_moments(&j);
        let ma = pi_moments(&single(a, &d1));
        let mb = pi_moments(&single(b, &d2));
        for m1 in 0..=3 {
            for m2 in 0..=5 {
                assert!(close(m.get(m1, m2), ma.get(m1) * mb.get(m2), 1e-13));
            }
        }
        assert!(close(m.get(0, 0), 1.0, 1e-12));
    }

    #[test]
    fn coherent_report_is_classical() {
        let det = DetectorConfig::linear(8, 0.9).unwrap();
        for &mu in &[0.1, 1.0, 5.0] {
            let c = single(PhotonNumberDistribution::coherent(mu, DEFAULT_TOL).unwrap(), &det);
            let r = witness_report(&c.into(), WitnessOptions::default()).unwrap();
            assert_eq!(r.verdict, Verdict::ConsistentWithClassical);
            assert!(r.minors.iter().all(|&m| m >= -1e-10));
        }
        let a = PhotonNumberDistribution::coherent(1.0, DEFAULT_TOL).unwrap();
        let j = joint_click_statistics::<Dd>(&JointPhotonDistribution::product(&a, &a), &det, &det).unwrap();
        let r = witness_report(&j.into(), WitnessOptions { max_degree: Some(2), ..Default::default() }).unwrap();
        assert_eq!(r.minors.len(), 6);
        assert!(r.min_eigenvalue >= -1e-10);
        assert_eq!(r.verdict, Verdict::ConsistentWithClassical);
    }

    #[test]
    fn spats_needs_higher_minors_beyond_crossover() {
        let det = DetectorConfig::linear(8, 0.9).unwrap();
        let c = single(PhotonNumberDistribution::spats(1.0, DEFAULT_TOL).unwrap(), &det);
        let r = witness_report(&c.into(), WitnessOptions::default()).unwrap();
        assert!(r.minors[1] > 0.0);
        assert!(r.qb.unwrap() > 0.0);
        assert!(r.minors[2] < -1e-6);
        assert!(r.is_nonclassical());
        assert!(!r.violations.contains(&"minor_2".to_string()));
        assert!(r.min_eigenvalue < 0.0);
    }

    #[test]
    fn report_json_shape() {
        let r = witness_report(&fock1(4, 0.5).into(), WitnessOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["verdict"], "nonclassical");
        assert!(v["minors"].is_array());
        assert!(v.get("stderr").is_none());
    }

    #[test]
    fn uncertainties_drive_verdict() {
        let r = witness_report(&fock1(4, 0.5).into(), WitnessOptions::default()).unwrap();
        let n = r.minors.len();
        let wide = Uncertainties {
            minors: vec![10.0; n],
            min_eigenvalue: 10.0,
            qb: Some(10.0),
            cross_minor: None,
            sigmas: 3.0,
            excluded: vec![],
        };
        assert_eq!(r.clone().with_uncertainties(wide).verdict, Verdict::ConsistentWithClassical);
        let tight = Uncertainties {
            minors: vec![1e-6; n],
            min_eigenvalue: 1e-6,
            qb: Some(1e-6),
            cross_minor: None,
            sigmas: 3.0,
            excluded: vec!["min_eigenvalue".into()],
        };
        let t = r.with_uncertainties(tight);
        assert!(t.is_nonclassical());
        assert!(!t.violations.contains(&"min_eigenvalue".to_string()));
    }

    fn random_stats(raw: Vec<f64>) -> ClickStatistics {
        let s: f64 = raw.iter().sum();
        ClickStatistics::new(raw.iter().map(|x| x / s).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn qb_minor_identity_holds(n in 2usize..=16, seed in proptest::collection::vec(0.001f64..1.0, 17)) {
            let c = random_stats(seed[..=n].to_vec());
            let mm = moment_matrix(&pi_moments(&c), n).unwrap();
            let minor = leading_principal_minors(&mm)[1];
            prop_assert!((minor - qb_minor_identity(&c).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn scaled_minor_sign_invariance(minor in -1.0f64..1.0, k in 0usize..4) {
            let scale = [1e2, 1e5, 1e8, 1e13][k];
            prop_assert_eq!((minor * scale) < -DEFAULT_THRESHOLD * scale, minor < -DEFAULT_THRESHOLD);
            prop_assert_eq!((minor * scale).signum(), minor.signum());
        }

        #[test]
        fn pi_moments_are_contractions(n in 1usize..=12, seed in proptest::collection::vec(0.0f64..1.0, 13)) {
            let mut raw = seed[..=n].to_vec();
            raw[0] += 1e-3;
            let c = random_stats(raw);
            let m = pi_moments(&c);
            prop_assert!((m.get(0) - 1.0).abs() < 1e-12);
            for k in 0..=n {
                prop_assert!(m.get(k) >= -1e-9 && m.get(k) <= 1.0 + 1e-9);
            }
        }

        #[test]
        fn mixtures_of_product_coherent_states_pass(
            mus in proptest::collection::vec((0.0f64..4.0, 0.0f64..4.0, 0.01f64..1.0), 1..4)
        ) {
            let det = DetectorConfig::linear(4, 0.8).unwrap();
            let wsum: f64 = mus.iter().map(|m| m.2).sum();
            let comps: Vec<(f64, JointPhotonDistribution)> = mus
                .iter()
                .map(|&(a, b, w)| {
                    (w / wsum, JointPhotonDistribution::product(
                        &PhotonNumberDistribution::coherent(a, DEFAULT_TOL).unwrap(),
                        &PhotonNumberDistribution::coherent(b, DEFAULT_TOL).unwrap(),
                    ))
                })
                .collect();
            let mix = JointPhotonDistribution::mixture(&comps).unwrap();
            let j = joint_click_statistics::<Dd>(&mix, &det, &det).unwrap();
            prop_assert!(cross_correlation_minor(&j).unwrap() >= -1e-10);
        }
    }
}
