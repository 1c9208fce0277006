use clickstat_core::detector::{click_statistics_with, joint_click_statistics_with, DetectorConfig, ResponseFunction};
use clickstat_core::sampler::{bootstrap_witness, estimate_statistics, sample_clicks, ClickHistogram};
use clickstat_core::states::{CoherentSuperposition, JointPhotonDistribution, PhotonNumberDistribution, State, DEFAULT_TOL};
use clickstat_core::witness::{witness_report, Statistics, Verdict, WitnessOptions};
use clickstat_core::{Error, Precision};
use num_complex::Complex64;

fn single(state: impl Into<State>, det: &DetectorConfig) -> Statistics {
    click_statistics_with(&state.into(), det, Precision::DoubleDouble).unwrap().into()
}

#[test]
fn state_to_verdict() {
    let det = DetectorConfig::linear(8, 0.9).unwrap();
    let cases: Vec<(State, Verdict)> = vec![
        (PhotonNumberDistribution::coherent(2.0, DEFAULT_TOL).unwrap().into(), Verdict::ConsistentWithClassical),
        (PhotonNumberDistribution::thermal(1.0, DEFAULT_TOL).unwrap().into(), Verdict::ConsistentWithClassical),
        (PhotonNumberDistribution::fock(1).into(), Verdict::Nonclassical),
        (PhotonNumberDistribution::spats(0.5, DEFAULT_TOL).unwrap().into(), Verdict::Nonclassical),
        (CoherentSuperposition::odd_coherent(Complex64::new(1.0, 0.0)).unwrap().into(), Verdict::Nonclassical),
    ];
    for (state, want) in cases {
        let stats = single(state.clone(), &det);
        let r = witness_report(&stats, WitnessOptions::default()).unwrap();
        assert_eq!(r.verdict, want, "{state:?}: {r:?}");
    }
}

#[test]
fn both_precisions_agree() {
    let det = DetectorConfig::new(6, ResponseFunction::Affine { eta: 0.7, nu: 0.05 }).unwrap();
    let s: State = PhotonNumberDistribution::thermal(1.5, DEFAULT_TOL).unwrap().into();
    let a = click_statistics_with(&s, &det, Precision::Double).unwrap();
    let b = click_statistics_with(&s, &det, Precision::DoubleDouble).unwrap();
    for (x, y) in a.probs().iter().zip(b.probs()) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(Precision::from_bits(200), Err(Error::UnsupportedPrecision(200)));
}

#[test]
fn joint_tmsv_is_flagged_by_the_cross_minor() {
    let det = DetectorConfig::linear(4, 1.0).unwrap();
    let j = JointPhotonDistribution::tmsv(Complex64::new(0.5, 0.0), DEFAULT_TOL).unwrap();
    let c = joint_click_statistics_with(&j, &det, &det, Precision::DoubleDouble).unwrap();
    let r = witness_report(&c.into(), WitnessOptions::default()).unwrap();
    assert!(r.cross_minor.unwrap() < 0.0);
    assert!(r.is_nonclassical());
}

#[test]
fn sampled_histogram_survives_csv_and_keeps_the_verdict() {
    let det = DetectorConfig::linear(8, 0.9).unwrap();
    let stats = single(PhotonNumberDistribution::fock(1), &det);
    let hist = sample_clicks(&stats, 200_000, 11).unwrap();
    let mut buf = Vec::new();
    hist.write_csv(&mut buf).unwrap();
    let back = ClickHistogram::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, hist);

    let est = estimate_statistics(&back).unwrap();
    assert_eq!(est.total, 200_000);
    for (c, want) in est.stats.probs().iter().zip(stats.probs()) {
        assert!((c - want).abs() < 5e-3);
    }
    let r = bootstrap_witness(&back, 200, 3, 3.0).unwrap();
    assert_eq!(r.verdict, Verdict::Nonclassical);
    assert!(r.violations.iter().any(|v| v == "qb"));
}

#[test]
fn joint_sampling_round_trip() {
    let det = DetectorConfig::linear(3, 0.8).unwrap();
    let a = PhotonNumberDistribution::coherent(1.0, DEFAULT_TOL).unwrap();
    let j = JointPhotonDistribution::product(&a, &a);
    let c = joint_click_statistics_with(&j, &det, &det, Precision::DoubleDouble).unwrap();
    let hist = sample_clicks(&c.into(), 50_000, 5).unwrap();
    let mut buf = Vec::new();
    hist.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("k1,k2,count"));
    assert_eq!(ClickHistogram::read_csv(buf.as_slice()).unwrap(), hist);
    let r = bootstrap_witness(&hist, 100, 9, 3.0).unwrap();
    assert_eq!(r.verdict, Verdict::ConsistentWithClassical);
}
