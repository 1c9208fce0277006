//! JSON descriptors for states and detectors, and grid specs.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clickstat_core::detector::DetectorConfig;
use clickstat_core::states::{CoherentSuperposition, JointPhotonDistribution, PhotonNumberDistribution, State, DEFAULT_TOL};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;

/// Real number or `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(x) => Complex64::new(x, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDescriptor {
    /// Either `alpha` or `mean` (= |α|²).
    Coherent {
        alpha: Option<Amplitude>,
        mean: Option<f64>,
        tol: Option<f64>,
    },
    Thermal {
        nbar: f64,
        tol: Option<f64>,
    },
    Spats {
        nbar: f64,
        tol: Option<f64>,
    },
    Fock {
        n: usize,
    },
    OddCoherent {
        alpha: Amplitude,
    },
    Tmsv {
        xi: Amplitude,
        tol: Option<f64>,
    },
    Custom {
        probs: Vec<f64>,
        #[serde(default)]
        tail_bound: f64,
    },
}

/// What a descriptor builds: one mode, or two modes for a pair of banks.
pub enum Built {
    Single(State),
    Joint(JointPhotonDistribution),
}

impl StateDescriptor {
    /// Field swept by a grid spec that names no parameter.
    pub fn primary_parameter(&self) -> &'static str {
        match self {
            StateDescriptor::Coherent { alpha: Some(_), .. } => "alpha",
            StateDescriptor::Coherent { .. } => "mean",
            StateDescriptor::Thermal { .. } | StateDescriptor::Spats { .. } => "nbar",
            StateDescriptor::Fock { .. } => "n",
            StateDescriptor::OddCoherent { .. } => "alpha",
            StateDescriptor::Tmsv { .. } => "xi",
            StateDescriptor::Custom { .. } => "tail_bound",
        }
    }

    pub fn build(&self) -> clickstat_core::Result<Built> {
        use StateDescriptor::*;
        let tol = |t: &Option<f64>| t.unwrap_or(DEFAULT_TOL);
        Ok(match self {
            Coherent { alpha, mean, tol: t } => {
                let mu = match (alpha, mean) {
                    (Some(a), None) => a.value().norm_sqr(),
                    (None, Some(m)) => *m,
                    _ => {
                        return Err(clickstat_core::Error::InvalidParameter(
                            "coherent state needs exactly one of alpha, mean".into(),
                        ))
                    }
                };
                Built::Single(PhotonNumberDistribution::coherent(mu, tol(t))?.into())
            }
            Thermal { nbar, tol: t } => Built::Single(PhotonNumberDistribution::thermal(*nbar, tol(t))?.into()),
            Spats { nbar, tol: t } => Built::Single(PhotonNumberDistribution::spats(*nbar, tol(t))?.into()),
            Fock { n } => Built::Single(PhotonNumberDistribution::fock(*n).into()),
            OddCoherent { alpha } => Built::Single(CoherentSuperposition::odd_coherent(alpha.value())?.into()),
            Tmsv { xi, tol: t } => Built::Joint(JointPhotonDistribution::tmsv(xi.value(), tol(t))?),
            Custom { probs, tail_bound } => {
                Built::Single(PhotonNumberDistribution::custom(probs.clone(), *tail_bound)?.into())
            }
        })
    }
}

/// Reads `arg` as inline JSON when it looks like JSON, otherwise as a path.
pub fn load_json(arg: &str, what: &str) -> Result<Value> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).with_context(|| format!("cannot read {what} file {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("malformed {what} JSON"))
}

pub fn parse_state(v: Value) -> Result<StateDescriptor> {
    serde_json::from_value(v).context("invalid state descriptor")
}

/// One bank, or `[bank1, bank2]` for joint statistics. A single bank is
/// reused for both modes of a two-mode state.
pub fn parse_detectors(v: Value) -> Result<(DetectorConfig, DetectorConfig)> {
    let banks: Vec<DetectorConfig> = match v {
        Value::Array(items) => items
            .into_iter()
            .map(serde_json::from_value)
            .collect::<std::result::Result<_, _>>()
            .context("invalid detector descriptor")?,
        other => vec![serde_json::from_value(other).context("invalid detector descriptor")?],
    };
    for b in &banks {
        b.validate().map_err(|e| anyhow!("invalid detector: {e}"))?;
    }
    match banks.as_slice() {
        [a] => Ok((a.clone(), a.clone())),
        [a, b] => Ok((a.clone(), b.clone())),
        _ => bail!("expected one or two detector banks, got {}", banks.len()),
    }
}

/// One axis of a sweep: `[name=]start:stop:steps`, endpoints included.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: Option<String>,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: Some(name.to_string()),
            values,
        }
    }

    /// `steps` points from `start` to `stop`; `open_start` drops `start` and
    /// spreads the points over `(start, stop]` instead.
    pub fn linspace(name: &str, start: f64, stop: f64, steps: usize, open_start: bool) -> Self {
        let values = if open_start {
            (1..=steps).map(|i| start + (stop - start) * i as f64 / steps as f64).collect()
        } else if steps == 1 {
            vec![start]
        } else {
            (0..steps).map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64).collect()
        };
        Self::new(name, values)
    }
}

pub fn parse_grid(spec: &str) -> Result<Vec<Axis>> {
    spec.split(',').map(|s| parse_axis(s.trim())).collect()
}

fn parse_axis(s: &str) -> Result<Axis> {
    let (name, range) = match s.split_once('=') {
        Some((n, r)) => (Some(n.trim().to_string()), r),
        None => (None, s),
    };
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        bail!("grid axis '{s}' must look like [name=]start:stop:steps");
    };
    let start: f64 = start.trim().parse().with_context(|| format!("bad grid start in '{s}'"))?;
    let stop: f64 = stop.trim().parse().with_context(|| format!("bad grid stop in '{s}'"))?;
    let steps: usize = steps.trim().parse().with_context(|| format!("bad grid step count in '{s}'"))?;
    if steps == 0 {
        bail!("grid '{s}' is empty");
    }
    if !start.is_finite() || !stop.is_finite() {
        bail!("grid '{s}' has non-finite endpoints");
    }
    let mut axis = Axis::linspace("", start, stop, steps, false);
    axis.name = name;
    Ok(axis)
}

/// Copy of the descriptor JSON with `field` set to `x`. Integral values are
/// written as integers so they also fill integer fields such as `n`.
pub fn with_parameter(base: &Value, field: &str, x: f64) -> Result<Value> {
    let mut v = base.clone();
    let obj = v.as_object_mut().ok_or_else(|| anyhow!("state descriptor must be a JSON object"))?;
    let num = if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        serde_json::Number::from_f64(x).map(Value::Number).ok_or_else(|| anyhow!("grid value {x} is not finite"))?
    };
    if field == "mean" {
        obj.remove("alpha");
    } else if field == "alpha" && obj.get("kind").and_then(Value::as_str) == Some("coherent") {
        obj.remove("mean");
    }
    obj.insert(field.to_string(), num);
    Ok(v)
}
