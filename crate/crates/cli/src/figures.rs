//! Data tables behind the reference figures.
//!
//! Grid defaults are choices made here to bracket the visible features:
//! fig2 n̄ ∈ [0, 3] at 301 points, fig3 |ξ|² ∈ (0, 1) at 199 points, fig4
//! γ = 1 with t, Δt ∈ [0, 3] at 61×61, fig6 |α|² ∈ (0, 4] at 201 points.

use anyhow::{bail, Result};
use clap::ValueEnum;
use clickstat_core::detector::{
    click_statistics_with, joint_click_statistics_with, DetectorConfig, ResponseFunction,
};
use clickstat_core::dynamics::{b_dimensionless, DecayModel};
use clickstat_core::states::{CoherentSuperposition, JointPhotonDistribution, PhotonNumberDistribution, DEFAULT_TOL};
use clickstat_core::witness::{cross_correlation_minor, leading_principal_minors, moment_matrix, pi_moments};
use clickstat_core::Precision;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::descriptor::Axis;
use crate::table::{Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    pub fn default_grid(self) -> Vec<Axis> {
        match self {
            Figure::Fig2 => vec![Axis::linspace("nbar", 0.0, 3.0, 301, false)],
            Figure::Fig3 => vec![Axis::new("xi_sq", (1..200).map(|i| i as f64 / 200.0).collect())],
            Figure::Fig4 => vec![Axis::linspace("t", 0.0, 3.0, 61, false), Axis::linspace("dt", 0.0, 3.0, 61, false)],
            Figure::Fig5 => vec![],
            Figure::Fig6 => vec![Axis::linspace("alpha_sq", 0.0, 4.0, 201, true)],
        }
    }
}

const FIG2_SCALES: [f64; 4] = [1e2, 1e5, 1e8, 1e13];
const FIG3_SCALE: f64 = 1e3;
const FIG6_SCALES: [f64; 3] = [1e4, 1e8, 1e9];

pub fn figure(fig: Figure, grid: Option<Vec<Axis>>, precision: Precision, dimensionless: bool) -> Result<Table> {
    let grid = grid.unwrap_or_else(|| fig.default_grid());
    let want = fig.default_grid().len();
    if grid.len() != want {
        bail!("{} takes {want} grid axes, got {}", fig.name(), grid.len());
    }
    match fig {
        Figure::Fig2 => fig2(&grid[0].values, precision),
        Figure::Fig3 => fig3(&grid[0].values, precision),
        Figure::Fig4 => fig4(&grid[0].values, &grid[1].values, dimensionless),
        Figure::Fig5 => fig5(precision),
        Figure::Fig6 => fig6(&grid[0].values, precision),
    }
}

/// SPATS leading minors 2×2..5×5, N = 8, η = 0.9.
fn fig2(nbars: &[f64], precision: Precision) -> Result<Table> {
    let det = DetectorConfig::linear(8, 0.9)?;
    let rows: Vec<Vec<f64>> = nbars
        .par_iter()
        .map(|&nb| -> Result<Vec<f64>> {
            let s = PhotonNumberDistribution::spats(nb, DEFAULT_TOL)?;
            let c = click_statistics_with(&s.into(), &det, precision)?;
            Ok(leading_principal_minors(&moment_matrix(&pi_moments(&c), det.n)?)[1..].to_vec())
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "nbar", "minor_2x2", "minor_3x3", "minor_4x4", "minor_5x5", "display_2x2", "display_3x3", "display_4x4",
        "display_5x5",
    ]);
    for (&nb, m) in nbars.iter().zip(rows) {
        let mut row = vec![Cell::from(nb)];
        row.extend(m.iter().map(|&v| Cell::from(v)));
        row.extend(m.iter().zip(FIG2_SCALES).map(|(&v, s)| Cell::from(v * s)));
        t.push(row);
    }
    Ok(t)
}

/// TMSV cross minor, N1 = N2 = 4, η1 = η2 = 0.8.
fn fig3(xi_sq: &[f64], precision: Precision) -> Result<Table> {
    let det = DetectorConfig::linear(4, 0.8)?;
    let minors: Vec<f64> = xi_sq
        .par_iter()
        .map(|&s| -> Result<f64> {
            let j = JointPhotonDistribution::tmsv(Complex64::new(s.sqrt(), 0.0), DEFAULT_TOL)?;
            Ok(cross_correlation_minor(&joint_click_statistics_with(&j, &det, &det, precision)?)?)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["xi_sq", "cross_minor", "display"]);
    for (&s, m) in xi_sq.iter().zip(minors) {
        t.push(vec![s.into(), m.into(), (m * FIG3_SCALE).into()]);
    }
    Ok(t)
}

/// `b(t, Δt)` at γ = 1, where `t` and `γt` coincide.
fn fig4(ts: &[f64], dts: &[f64], dimensionless: bool) -> Result<Table> {
    let cols = if dimensionless { ["tau", "delta", "b"] } else { ["t", "dt", "b"] };
    let mut t = Table::new(&cols);
    for &a in ts {
        for &d in dts {
            t.push(vec![a.into(), d.into(), b_dimensionless(a, d)?.into()]);
        }
    }
    Ok(t)
}

pub fn fig5_responses() -> Vec<(&'static str, ResponseFunction)> {
    vec![
        ("linear", ResponseFunction::Linear { eta: 1.0 }),
        ("affine", ResponseFunction::Affine { eta: 1.0, nu: 2.0 }),
        ("quadratic", ResponseFunction::PolynomialSeries { coefficients: vec![0.0, 1.0, 0.25] }),
        ("two_photon_absorption", ResponseFunction::NPhotonAbsorption { n0: 2 }),
    ]
}

/// Click statistics of a coherent state α = 2 on N = 16 diodes, next to
/// the binomial law with `p = 1 - exp(-f(|α|²/N))`.
fn fig5(precision: Precision) -> Result<Table> {
    let n = 16;
    let mu = 4.0;
    let mut t = Table::new(&["response", "k", "probability", "binomial"]);
    for (name, r) in fig5_responses() {
        let p = 1.0 - (-r.f(mu / n as f64)).exp();
        let det = DetectorConfig::new(n, r)?;
        let c = click_statistics_with(&PhotonNumberDistribution::coherent(mu, DEFAULT_TOL)?.into(), &det, precision)?;
        let mut binom = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom = binom * (n - k + 1) as f64 / k as f64;
            }
            let b = binom * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            t.push(vec![name.into(), k.into(), c.probs()[k].into(), b.into()]);
        }
    }
    Ok(t)
}

pub fn fig6_responses() -> [(&'static str, ResponseFunction); 3] {
    [
        ("x", ResponseFunction::Linear { eta: 1.0 }),
        ("x3", ResponseFunction::Power { n0: 3 }),
        ("nabs3", ResponseFunction::NPhotonAbsorption { n0: 3 }),
    ]
}

/// Odd coherent 2×2 minor `⟨:π̂²:⟩ - ⟨:π̂:⟩²`, N = 8.
fn fig6(alpha_sq: &[f64], precision: Precision) -> Result<Table> {
    let dets: Vec<DetectorConfig> =
        fig6_responses().into_iter().map(|(_, r)| DetectorConfig::new(8, r)).collect::<Result<_, _>>()?;
    let rows: Vec<Vec<f64>> = alpha_sq
        .par_iter()
        .map(|&a2| -> Result<Vec<f64>> {
            let s = CoherentSuperposition::odd_coherent(Complex64::new(a2.sqrt(), 0.0))?;
            dets.iter()
                .map(|d| {
                    let c = click_statistics_with(&s.clone().into(), d, precision)?;
                    let mom = pi_moments(&c);
                    Ok(mom.get(2) - mom.get(1) * mom.get(1))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["alpha_sq", "minor_x", "minor_x3", "minor_nabs3", "display_x", "display_x3", "display_nabs3"]);
    for (&a2, m) in alpha_sq.iter().zip(rows) {
        let mut row = vec![Cell::from(a2)];
        row.extend(m.iter().map(|&v| Cell::from(v)));
        row.extend(m.iter().zip(FIG6_SCALES).map(|(&v, s)| Cell::from(v * s)));
        t.push(row);
    }
    Ok(t)
}

/// `b` and both forms of the decay minor over a `(t, Δt)` grid. With
/// `dimensionless` the axes are `γt` and `γΔt`.
pub fn decay_table(model: &DecayModel, ts: &[f64], dts: &[f64], dimensionless: bool) -> Result<Table> {
    use clickstat_core::dynamics::{b_function, decay_minor, decay_minor_rederived};
    model.validate()?;
    let cols = if dimensionless { ["tau", "delta"] } else { ["t", "dt"] };
    let mut t = Table::new(&[cols[0], cols[1], "b", "minor", "minor_rederived"]);
    let scale = if dimensionless { 1.0 / model.gamma } else { 1.0 };
    for &a in ts {
        for &d in dts {
            let (ta, da) = (a * scale, d * scale);
            t.push(vec![
                a.into(),
                d.into(),
                b_function(model, ta, da)?.into(),
                decay_minor(model, ta, da)?.into(),
                decay_minor_rederived(model, ta, da)?.into(),
            ]);
        }
    }
    Ok(t)
}
