//! Monte Carlo click measurements and plug-in estimation.
//!
//! Draws use ChaCha8 seeded from a `u64` (`SeedableRng::seed_from_u64`) and
//! inverse-CDF lookup over the outcomes in index order, so a seed and a
//! request sequence fix the output bit for bit. Bootstrap replicates are
//! multinomial resamples of the histogram, drawn as a chain of binomials.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::detector::{ClickStatistics, JointClickStatistics};
use crate::error::{Error, Result};
use crate::witness::{witness_report, Statistics, Uncertainties, WitnessOptions, WitnessReport};

/// Smallest number of bootstrap replicates accepted.
pub const MIN_RESAMPLES: usize = 100;

/// Outcome space of a histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Single { n: usize },
    Joint { n1: usize, n2: usize },
}

impl Shape {
    pub fn len(self) -> usize {
        match self {
            Shape::Single { n } => n + 1,
            Shape::Joint { n1, n2 } => (n1 + 1) * (n2 + 1),
        }
    }

    pub fn of(stats: &Statistics) -> Self {
        match stats {
            Statistics::Single(s) => Shape::Single { n: s.n() },
            Statistics::Joint(j) => {
                let (n1, n2) = j.diodes();
                Shape::Joint { n1, n2 }
            }
        }
    }
}

/// Counts per click outcome; joint outcomes are stored row-major in `k1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickHistogram {
    shape: Shape,
    counts: Vec<u64>,
}

impl ClickHistogram {
    pub fn new(shape: Shape, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!("{shape:?} needs {} counts, got {}", shape.len(), counts.len())));
        }
        Ok(Self { shape, counts })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV with header `k,count` or `k1,k2,count`; every outcome is written,
    /// including empty ones, so the shape survives a round trip.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io_err = |e: csv::Error| Error::InvalidParameter(format!("writing histogram: {e}"));
        match self.shape {
            Shape::Single { .. } => {
                out.write_record(["k", "count"]).map_err(io_err)?;
                for (k, c) in self.counts.iter().enumerate() {
                    out.write_record([k.to_string(), c.to_string()]).map_err(io_err)?;
                }
            }
            Shape::Joint { n2, .. } => {
                out.write_record(["k1", "k2", "count"]).map_err(io_err)?;
                for (i, c) in self.counts.iter().enumerate() {
                    let (k1, k2) = (i / (n2 + 1), i % (n2 + 1));
                    out.write_record([k1.to_string(), k2.to_string(), c.to_string()]).map_err(io_err)?;
                }
            }
        }
        out.flush().map_err(|e| Error::InvalidParameter(format!("writing histogram: {e}")))
    }

    /// Reads the format of [`ClickHistogram::write_csv`]. Outcomes that are
    /// not listed count as zero; the shape is the largest index seen.
    pub fn read_csv<R: io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let bad = |m: String| Error::ShapeMismatch(m);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| bad(format!("histogram header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        let joint = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
            ["k", "count"] => false,
            ["k1", "k2", "count"] => true,
            _ => return Err(bad(format!("unrecognized histogram header {header:?}"))),
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(format!("histogram row: {e}")))?;
            let nums: Vec<u64> = rec
                .iter()
                .map(|f| f.parse::<u64>().map_err(|_| bad(format!("not a non-negative integer: {f:?}"))))
                .collect::<Result<_>>()?;
            rows.push(nums);
        }
        if rows.is_empty() {
            return Err(Error::EmptyHistogram);
        }
        if joint {
            let n1 = rows.iter().map(|r| r[0]).max().unwrap_or(0) as usize;
            let n2 = rows.iter().map(|r| r[1]).max().unwrap_or(0) as usize;
            let mut counts = vec![0; (n1 + 1) * (n2 + 1)];
            for r in rows {
                counts[r[0] as usize * (n2 + 1) + r[1] as usize] += r[2];
            }
            Self::new(Shape::Joint { n1, n2 }, counts)
        } else {
            let n = rows.iter().map(|r| r[0]).max().unwrap_or(0) as usize;
            let mut counts = vec![0; n + 1];
            for r in rows {
                counts[r[0] as usize] += r[1];
            }
            Self::new(Shape::Single { n }, counts)
        }
    }
}

/// `n_samples` independent draws from `stats`.
pub fn sample_clicks(stats: &Statistics, n_samples: u64, seed: u64) -> Result<ClickHistogram> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut cdf = Vec::with_capacity(stats.probs().len());
    let mut acc = 0.0;
    for &p in stats.probs() {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; cdf.len()];
    let last = cdf.len() - 1;
    for _ in 0..n_samples {
        let u = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(last);
        counts[k] += 1;
    }
    ClickHistogram::new(Shape::of(stats), counts)
}

/// Relative frequencies with their multinomial standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatedStatistics {
    pub stats: Statistics,
    /// `√(ĉ(1-ĉ)/n)` per outcome, in the order of `stats.probs()`.
    pub stderr: Vec<f64>,
    pub total: u64,
}

fn frequencies(shape: Shape, counts: &[u64]) -> Result<Statistics> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(match shape {
        Shape::Single { .. } => Statistics::Single(ClickStatistics::new(probs)?),
        Shape::Joint { n1, n2 } => Statistics::Joint(JointClickStatistics::new(n1, n2, probs)?),
    })
}

pub fn estimate_statistics(hist: &ClickHistogram) -> Result<EstimatedStatistics> {
    let stats = frequencies(hist.shape, &hist.counts)?;
    let total = hist.total();
    let stderr = stats.probs().iter().map(|&c| (c * (1.0 - c) / total as f64).sqrt()).collect();
    Ok(EstimatedStatistics { stats, stderr, total })
}

fn multinomial(rng: &mut ChaCha8Rng, counts: &[u64], total: u64) -> Vec<u64> {
    let mut left = total;
    let mut mass = total;
    let mut out = Vec::with_capacity(counts.len());
    for &c in counts {
        if left == 0 || mass == 0 {
            out.push(0);
            continue;
        }
        let p = (c as f64 / mass as f64).min(1.0);
        let draw = Binomial::new(left, p).map(|b| b.sample(rng)).unwrap_or(0);
        out.push(draw);
        left -= draw;
        mass -= c;
    }
    out
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Witness report of the plug-in estimate with bootstrap standard errors.
///
/// The verdict flags a quantity when its point estimate lies below
/// `-threshold_sigmas` standard errors. The minimum eigenvalue is reported
/// with its spread but left out of the verdict: for rank-deficient
/// classical moment matrices (coherent light gives rank one) the sampled
/// minimum eigenvalue is biased below zero by an amount comparable to its
/// own spread.
pub fn bootstrap_witness(
    hist: &ClickHistogram,
    resamples: usize,
    seed: u64,
    threshold_sigmas: f64,
) -> Result<WitnessReport> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_RESAMPLES} resamples, got {resamples}")));
    }
    if !(threshold_sigmas >= 0.0 && threshold_sigmas.is_finite()) {
        return Err(Error::InvalidParameter(format!("threshold {threshold_sigmas} must be finite and >= 0")));
    }
    let opts = WitnessOptions::default();
    let point = witness_report(&frequencies(hist.shape, &hist.counts)?, opts)?;
    let n_minors = point.minors.len();
    let total = hist.total();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut minors = vec![Vec::with_capacity(resamples); n_minors];
    let mut eig = Vec::with_capacity(resamples);
    let mut qb = Vec::new();
    let mut cross = Vec::new();
    for _ in 0..resamples {
        let counts = multinomial(&mut rng, &hist.counts, total);
        let r = witness_report(&frequencies(hist.shape, &counts)?, opts)?;
        for (acc, v) in minors.iter_mut().zip(&r.minors) {
            acc.push(*v);
        }
        eig.push(r.min_eigenvalue);
        qb.extend(r.qb);
        cross.extend(r.cross_minor);
    }
    // quantities undefined in too many replicates get no error bar
    let spread = |xs: &[f64]| (xs.len() * 2 >= resamples).then(|| std_dev(xs));
    let u = Uncertainties {
        minors: minors.iter().map(|m| std_dev(m)).collect(),
        min_eigenvalue: std_dev(&eig),
        qb: point.qb.and(spread(&qb)),
        cross_minor: point.cross_minor.and(spread(&cross)),
        sigmas: threshold_sigmas,
        excluded: vec!["min_eigenvalue".into()],
    };
    Ok(point.with_uncertainties(u))
}
