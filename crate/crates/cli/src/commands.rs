use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clickstat_core::detector::{click_statistics_with, joint_click_statistics_with, DetectorConfig};
use clickstat_core::dynamics::DecayModel;
use clickstat_core::sampler::{bootstrap_witness, sample_clicks, ClickHistogram};
use clickstat_core::witness::{witness_report, Statistics, WitnessOptions, WitnessReport};
use clickstat_core::Precision;
use rayon::prelude::*;
use serde_json::Value;

use crate::descriptor::{self, Axis, Built, StateDescriptor};
use crate::figures::{self, Figure};
use crate::table::{Cell, Table};
use crate::{Format, Output};

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_table(t: &Table, out: &Output, default: Format) -> Result<()> {
    let mut w = writer(out.out.as_deref())?;
    match out.format.unwrap_or(default) {
        Format::Csv => t.write_csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &t.to_json())?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json(v: &impl serde::Serialize, path: Option<&Path>) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn precision(bits: Option<u32>) -> Result<Precision> {
    Ok(bits.map(Precision::from_bits).transpose()?.unwrap_or_default())
}

/// The state descriptor, once per grid point. Without a grid the sweep has
/// a single unnamed point.
struct Sweep {
    param: Option<String>,
    points: Vec<(f64, StateDescriptor)>,
}

fn sweep(state: &str, grid: Option<&str>) -> Result<Sweep> {
    let base = descriptor::load_json(state, "state")?;
    let first = descriptor::parse_state(base.clone())?;
    let Some(spec) = grid else {
        return Ok(Sweep {
            param: None,
            points: vec![(f64::NAN, first)],
        });
    };
    let axes = descriptor::parse_grid(spec)?;
    let [axis] = axes.as_slice() else {
        bail!("state sweeps take a single grid axis, got {}", axes.len());
    };
    let field = axis.name.clone().unwrap_or_else(|| first.primary_parameter().to_string());
    let points = axis
        .values
        .iter()
        .map(|&x| Ok((x, descriptor::parse_state(descriptor::with_parameter(&base, &field, x)?)?)))
        .collect::<Result<_>>()?;
    Ok(Sweep {
        param: Some(field),
        points,
    })
}

fn statistics(s: &StateDescriptor, dets: &(DetectorConfig, DetectorConfig), p: Precision) -> Result<Statistics> {
    Ok(match s.build()? {
        Built::Single(st) => click_statistics_with(&st, &dets.0, p)?.into(),
        Built::Joint(j) => joint_click_statistics_with(&j, &dets.0, &dets.1, p)?.into(),
    })
}

fn all_statistics(sw: &Sweep, dets: &(DetectorConfig, DetectorConfig), p: Precision) -> Result<Vec<Statistics>> {
    sw.points.par_iter().map(|(_, s)| statistics(s, dets, p)).collect()
}

pub fn stats(state: &str, detector: &str, grid: Option<&str>, bits: Option<u32>, out: &Output) -> Result<()> {
    let p = precision(bits)?;
    let dets = descriptor::parse_detectors(descriptor::load_json(detector, "detector")?)?;
    let sw = sweep(state, grid)?;
    let all = all_statistics(&sw, &dets, p)?;

    let joint = matches!(all[0], Statistics::Joint(_));
    let mut cols: Vec<String> = sw.param.iter().cloned().collect();
    cols.extend(if joint { vec!["k1", "k2"] } else { vec!["k"] }.into_iter().map(String::from));
    cols.push("probability".into());
    let mut t = Table::new(&cols);
    for ((x, _), s) in sw.points.iter().zip(&all) {
        let lead: Vec<Cell> = sw.param.iter().map(|_| Cell::from(*x)).collect();
        match s {
            Statistics::Single(c) => {
                for (k, &v) in c.probs().iter().enumerate() {
                    t.push([lead.clone(), vec![k.into(), v.into()]].concat());
                }
            }
            Statistics::Joint(c) => {
                let (n1, n2) = c.diodes();
                for k1 in 0..=n1 {
                    for k2 in 0..=n2 {
                        t.push([lead.clone(), vec![k1.into(), k2.into(), c.get(k1, k2).into()]].concat());
                    }
                }
            }
        }
    }
    write_table(&t, out, Format::Csv)
}

/// Column names in the order of [`WitnessReport::values`].
fn report_columns(r: &WitnessReport) -> Vec<String> {
    let mut c: Vec<String> = (1..=r.minors.len()).map(|i| format!("minor_{i}")).collect();
    c.push("min_eigenvalue".into());
    if r.qb.is_some() {
        c.push("qb".into());
    }
    if r.cross_minor.is_some() {
        c.push("cross_minor".into());
    }
    c
}

fn report_table(param: Option<&str>, reports: &[(f64, WitnessReport)]) -> Table {
    // qb can be undefined at isolated grid points; take the widest header
    let widest = reports.iter().map(|(_, r)| r).max_by_key(|r| report_columns(r).len()).expect("non-empty sweep");
    let names = report_columns(widest);
    let with_err = reports.iter().any(|(_, r)| r.stderr.is_some());
    let mut cols: Vec<String> = param.iter().map(|p| p.to_string()).collect();
    cols.extend(names.iter().cloned());
    if with_err {
        cols.extend(names.iter().map(|n| format!("{n}_stderr")));
    }
    cols.extend(["verdict".to_string(), "violations".to_string()]);
    let mut t = Table::new(&cols);
    for (x, r) in reports {
        let mut row: Vec<Cell> = param.iter().map(|_| Cell::from(*x)).collect();
        let get = |n: &str, vals: &[f64], own: &[String]| own.iter().position(|o| o == n).map(|i| vals[i]);
        let own = report_columns(r);
        let vals = r.values();
        row.extend(names.iter().map(|n| Cell::from(get(n, &vals, &own))));
        if with_err {
            let errs: Vec<Option<f64>> = match &r.stderr {
                Some(u) => {
                    let mut e: Vec<Option<f64>> = u.minors.iter().map(|&v| Some(v)).collect();
                    e.push(Some(u.min_eigenvalue));
                    if r.qb.is_some() {
                        e.push(u.qb);
                    }
                    if r.cross_minor.is_some() {
                        e.push(u.cross_minor);
                    }
                    e
                }
                None => vec![None; own.len()],
            };
            row.extend(names.iter().map(|n| Cell::from(own.iter().position(|o| o == n).and_then(|i| errs[i]))));
        }
        let verdict = serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        row.push(Cell::Text(verdict));
        row.push(Cell::Text(r.violations.join(";")));
        t.push(row);
    }
    t
}

fn emit_reports(param: Option<&str>, reports: Vec<(f64, WitnessReport)>, out: &Output) -> Result<()> {
    if param.is_none() && out.format != Some(Format::Csv) {
        return write_json(&reports[0].1, out.out.as_deref());
    }
    write_table(&report_table(param, &reports), out, Format::Csv)
}

pub struct WitnessInput<'a> {
    pub state: Option<&'a str>,
    pub detector: Option<&'a str>,
    pub histogram: Option<&'a Path>,
    pub grid: Option<&'a str>,
    pub threshold: f64,
    pub bootstrap: Bootstrap,
}

#[derive(Clone, Copy, Debug)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
    pub sigmas: f64,
}

pub fn read_histogram(path: &Path) -> Result<ClickHistogram> {
    let f = File::open(path).with_context(|| format!("cannot read histogram {}", path.display()))?;
    Ok(ClickHistogram::read_csv(io::BufReader::new(f))?)
}

pub fn witness(input: WitnessInput, bits: Option<u32>, out: &Output) -> Result<()> {
    if let Some(h) = input.histogram {
        if input.state.is_some() || input.grid.is_some() {
            bail!("--histogram cannot be combined with --state or --grid");
        }
        let hist = read_histogram(h)?;
        let b = input.bootstrap;
        let r = bootstrap_witness(&hist, b.resamples, b.seed, b.sigmas)?;
        return emit_reports(None, vec![(f64::NAN, r)], out);
    }
    let (Some(state), Some(detector)) = (input.state, input.detector) else {
        bail!("witness needs --state and --detector, or --histogram");
    };
    if !(input.threshold >= 0.0) {
        bail!("--threshold must be >= 0");
    }
    let p = precision(bits)?;
    let dets = descriptor::parse_detectors(descriptor::load_json(detector, "detector")?)?;
    let sw = sweep(state, input.grid)?;
    let opts = WitnessOptions {
        threshold: input.threshold,
        ..WitnessOptions::default()
    };
    let reports = all_statistics(&sw, &dets, p)?
        .iter()
        .zip(&sw.points)
        .map(|(s, (x, _))| Ok((*x, witness_report(s, opts)?)))
        .collect::<Result<Vec<_>>>()?;
    emit_reports(sw.param.as_deref(), reports, out)
}

pub struct SampleInput<'a> {
    pub state: &'a str,
    pub detector: &'a str,
    pub samples: u64,
    pub seed: u64,
    pub witness: bool,
    pub report: Option<&'a Path>,
    pub bootstrap: Bootstrap,
}

pub fn sample(input: SampleInput, bits: Option<u32>, out: &Output) -> Result<()> {
    if input.samples == 0 {
        bail!("--samples must be positive");
    }
    if input.witness && out.out.is_none() {
        bail!("--witness writes the report to standard output; give the histogram a path with --out");
    }
    let p = precision(bits)?;
    let dets = descriptor::parse_detectors(descriptor::load_json(input.detector, "detector")?)?;
    let state = descriptor::parse_state(descriptor::load_json(input.state, "state")?)?;
    let stats = statistics(&state, &dets, p)?;
    let hist = sample_clicks(&stats, input.samples, input.seed)?;
    {
        let mut w = writer(out.out.as_deref())?;
        match out.format.unwrap_or(Format::Csv) {
            Format::Csv => hist.write_csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &hist)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    if input.witness {
        let b = input.bootstrap;
        let r = bootstrap_witness(&hist, b.resamples, b.seed, b.sigmas)?;
        write_json(&r, input.report)?;
    }
    Ok(())
}

/// Where a figure table goes: stdout, a file, or `<dir>/<name>.<ext>`.
fn figure_target(out: &Output, name: &str) -> Output {
    let format = out.format.unwrap_or(Format::Csv);
    let path = out.out.as_ref().map(|p| {
        if p.is_dir() {
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            p.join(format!("{name}.{ext}"))
        } else {
            p.clone()
        }
    });
    Output {
        out: path,
        format: Some(format),
    }
}

pub fn figure(fig: Figure, grid: Option<&str>, dimensionless: bool, bits: Option<u32>, out: &Output) -> Result<PathBuf> {
    let p = precision(bits)?;
    let grid = grid.map(descriptor::parse_grid).transpose()?;
    let t = figures::figure(fig, grid, p, dimensionless)?;
    let target = figure_target(out, fig.name());
    write_table(&t, &target, Format::Csv)?;
    Ok(target.out.unwrap_or_default())
}

pub fn decay(model: &str, grid: &str, dimensionless: bool, out: &Output) -> Result<()> {
    let v: Value = descriptor::load_json(model, "decay model")?;
    let m: DecayModel = serde_json::from_value(v).context("invalid decay model")?;
    let axes: Vec<Axis> = descriptor::parse_grid(grid)?;
    let [ts, dts] = axes.as_slice() else {
        bail!("decay takes two grid axes (t, dt), got {}", axes.len());
    };
    let t = figures::decay_table(&m, &ts.values, &dts.values, dimensionless)?;
    write_table(&t, out, Format::Csv)
}
