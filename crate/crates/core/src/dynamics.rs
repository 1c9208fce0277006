//! Single photon decaying into a bath while a bank of `N` on-off diodes
//! watches the window `[t, t + Δt]`.
//!
//! The mode operator evolves as `â(t) = e^{-γt} â + √(1 - e^{-2γt}) ĉ`, so
//! the time-integrated intensity seen by the bank is proportional to
//!
//! ```text
//! b(t, Δt) = e^{-2γt} (1 - e^{-2γΔt}).
//! ```
//!
//! Second-order witness. On a single photon `⟨:n̂²:⟩ = 0`, so every term of
//! second order in the response vanishes and the 2×2 minor reduces to
//! `-⟨:π̂:⟩²`. With `⟨:π̂:⟩ = (ξ|E|²/2γN)·b` this gives
//! [`decay_minor_rederived`]. [`decay_minor`] keeps the commonly quoted
//! linearized form `-(ξ|E|²/(2γN²(N-1)))·b`; the two agree in sign for all
//! parameters, which is the only scientific content of the witness here.
//!
//! Times are in arbitrary units; only `γt` and `γΔt` matter. `Δt = ∞` is
//! accepted and maps to the analytic limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub gamma: f64,
    /// Dipole coupling times field intensity at the detector, `ξ|E(r)|²`.
    pub prefactor: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl DecayModel {
    pub fn new(gamma: f64, prefactor: f64, n: usize) -> Result<Self> {
        let m = Self { gamma, prefactor, n };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay rate {} must be positive", self.gamma)));
        }
        if !(self.prefactor > 0.0 && self.prefactor.is_finite()) {
            return Err(Error::InvalidParameter(format!("prefactor {} must be positive", self.prefactor)));
        }
        if self.n < 2 {
            return Err(Error::DegenerateBank(self.n));
        }
        Ok(())
    }
}

fn check_times(t: f64, dt: f64) -> Result<()> {
    if !(t >= 0.0) || !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("times must be >= 0, got t={t}, dt={dt}")));
    }
    Ok(())
}

/// `b` in terms of the dimensionless products `τ = γt`, `δ = γΔt`.
pub fn b_dimensionless(tau: f64, delta: f64) -> Result<f64> {
    check_times(tau, delta)?;
    // -expm1 keeps full relative accuracy for short windows
    Ok((-2.0 * tau).exp() * -(-2.0 * delta).exp_m1())
}

/// `b(t, Δt) = e^{-2γt}(1 - e^{-2γΔt})`, in `[0, 1]`; equals 1 only at
/// `t = 0`, `Δt = ∞`.
pub fn b_function(model: &DecayModel, t: f64, dt: f64) -> Result<f64> {
    model.validate()?;
    check_times(t, dt)?;
    b_dimensionless(model.gamma * t, model.gamma * dt)
}

/// 2×2 minor in the linearized form `-prefactor·b/(2γN²(N-1))`.
pub fn decay_minor(model: &DecayModel, t: f64, dt: f64) -> Result<f64> {
    let b = b_function(model, t, dt)?;
    let n = model.n as f64;
    Ok(-model.prefactor / (2.0 * model.gamma * n * n * (n - 1.0)) * b)
}

/// 2×2 minor from the single-photon derivation, `-(prefactor·b/(2γN))²`.
pub fn decay_minor_rederived(model: &DecayModel, t: f64, dt: f64) -> Result<f64> {
    let b = b_function(model, t, dt)?;
    let p = model.prefactor * b / (2.0 * model.gamma * model.n as f64);
    Ok(-p * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{click_statistics, DetectorConfig};
    use crate::states::PhotonNumberDistribution;
    use crate::witness::{witness_report, Statistics, WitnessOptions};
    use crate::Dd;
    use proptest::prelude::*;

    fn unit() -> DecayModel {
        DecayModel::new(1.0, 2.0, 2).unwrap()
    }

    #[test]
    fn limits_and_spot_values() {
        let m = unit();
        assert_eq!(b_function(&m, 0.0, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(b_function(&m, f64::INFINITY, 1.0).unwrap(), 0.0);
        let want = (-1.0f64).exp() * (1.0 - (-2.0f64).exp());
        assert!((b_function(&m, 0.5, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.318092).abs() < 1e-6);
        assert_eq!(decay_minor(&m, 0.0, f64::INFINITY).unwrap(), -0.25);
        assert_eq!(decay_minor(&m, 1.0, 0.0).unwrap(), 0.0);
        assert!(decay_minor_rederived(&m, 0.0, f64::INFINITY).unwrap() < 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(DecayModel::new(1.0, 1.0, 1), Err(Error::DegenerateBank(1)));
        assert!(DecayModel::new(0.0, 1.0, 4).is_err());
        assert!(DecayModel::new(1.0, -1.0, 4).is_err());
        assert!(b_function(&unit(), -1.0, 1.0).is_err());
        assert!(b_function(&unit(), 1.0, f64::NAN).is_err());
    }

    #[test]
    fn agrees_in_sign_with_the_static_single_photon() {
        let det = DetectorConfig::linear(8, 0.9).unwrap();
        let stats = click_statistics::<Dd>(&PhotonNumberDistribution::fock(1).into(), &det).unwrap();
        let r = witness_report(&Statistics::Single(stats), WitnessOptions::default()).unwrap();
        let m = DecayModel::new(1.0, 1.0, 8).unwrap();
        assert!(r.minors[1] < 0.0);
        assert!(decay_minor(&m, 0.0, f64::INFINITY).unwrap() < 0.0);
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(g in 0.01f64..10.0, t in 0.0f64..5.0, dt in 0.0f64..5.0, h in 1e-3f64..1.0) {
            let m = DecayModel::new(g, 1.0, 4).unwrap();
            let b = b_function(&m, t, dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
            prop_assert!(b_function(&m, t + h, dt).unwrap() <= b);
            prop_assert!(b_function(&m, t, dt + h).unwrap() >= b);
        }

        #[test]
        fn negative_iff_window_sees_light(g in 0.01f64..10.0, p in 0.01f64..10.0, n in 2usize..32,
                                          t in 0.0f64..5.0, dt in 0.0f64..5.0) {
            let m = DecayModel::new(g, p, n).unwrap();
            let b = b_function(&m, t, dt).unwrap();
            prop_assert_eq!(decay_minor(&m, t, dt).unwrap() < 0.0, b > 0.0);
            prop_assert_eq!(decay_minor_rederived(&m, t, dt).unwrap() < 0.0, b > 0.0);
        }
    }
}
