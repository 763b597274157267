//! End-to-end simulations: photon catalysis swept over beam-splitter
//! reflectivity, and heralding on a two-mode squeezed vacuum.
//!
//! Both runners evaluate independent points from seeds derived per point, so
//! points can be computed in any order (or concurrently) with identical
//! results.

use alloc::vec;
use alloc::vec::Vec;

use crate::detector::{
    condition_on_clicks, forward_clicks, joint_forward_clicks, sample_counts, sample_joint_counts, Arm,
    ClickDistribution, Condition, CountRecord, DetectorModel, JointClickDistribution, JointCountRecord,
};
use crate::distributions::{JointPhotonDistribution, PhotonDistribution, Truncation};
use crate::error::{Error, Result};
use crate::fockspace::{apply_loss, catalysis_conditional_pn, default_cutoff, Herald};
use crate::inversion::{q_mandel_from_clicks, Inverter};
use crate::math::binomial_pmf;
use crate::rng::derive_seed;
use crate::witnesses::{mc_witness, q_binomial, q_fake, q_mandel, ClickWitness, WitnessEstimate};

/// Joint photon statistics of `Σ λⁿ|n⟩|n⟩` after independent loss on each
/// arm. The cutoff is raised until the neglected tail is negligible.
pub fn tmsv_joint_pn(lambda_sq: f64, eta1: f64, eta2: f64, cutoff: usize) -> Result<JointPhotonDistribution> {
    if !(0.0..1.0).contains(&lambda_sq) {
        return Err(Error::invalid("squeezing parameter λ² must lie in [0, 1)"));
    }
    for eta in [eta1, eta2] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid("efficiency must lie in [0, 1]"));
        }
    }
    // The diagonal is geometric, i.e. thermal with mean λ²/(1−λ²).
    let diagonal = Truncation::default().thermal(lambda_sq / (1.0 - lambda_sq), cutoff)?;
    let c = diagonal.n_max();
    let mut probs = vec![0.0; (c + 1) * (c + 1)];
    for (n, &pn) in diagonal.probs().iter().enumerate() {
        for a in 0..=n {
            let wa = pn * binomial_pmf(n, a, eta1);
            for b in 0..=n {
                probs[a * (c + 1) + b] += wa * binomial_pmf(n, b, eta2);
            }
        }
    }
    JointPhotonDistribution::from_probs(c, c, probs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalysisSweepConfig {
    /// Mean photon number `|α|²` of the coherent input.
    pub alpha_mean: f64,
    pub reflectivities: Vec<f64>,
    pub k_herald: usize,
    pub herald: Herald,
    pub signal_det: DetectorModel,
    /// Expected number of heralded signal events recorded per point.
    pub expected_total_events: f64,
    pub n_replicas: usize,
    pub seed: u64,
    /// Fock cutoff; `None` picks one from the input mean.
    pub cutoff: Option<usize>,
    /// Invert with the signal detector's efficiency, estimating `Q_M` of
    /// the light before loss instead of the detected light.
    pub inversion_corrects_efficiency: bool,
}

impl Default for CatalysisSweepConfig {
    fn default() -> Self {
        let det8 = DetectorModel::ideal(8).expect("eight bins");
        CatalysisSweepConfig {
            alpha_mean: 0.5,
            reflectivities: even_grid(21),
            k_herald: 1,
            herald: Herald::Clicks(det8.clone().with_efficiency(0.5).expect("valid efficiency")),
            signal_det: det8.with_efficiency(0.1).expect("valid efficiency"),
            expected_total_events: 5000.0,
            n_replicas: 10_000,
            seed: 1,
            cutoff: None,
            inversion_corrects_efficiency: false,
        }
    }
}

/// `n` evenly spaced points covering `[0, 1]`.
pub fn even_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

impl CatalysisSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_mean >= 0.0) || !self.alpha_mean.is_finite() {
            return Err(Error::invalid("coherent mean photon number must be finite and non-negative"));
        }
        if self.reflectivities.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::invalid("reflectivities must lie in [0, 1]"));
        }
        if !(self.expected_total_events > 0.0) || !self.expected_total_events.is_finite() {
            return Err(Error::invalid("expected total events must be positive"));
        }
        if self.n_replicas < 2 {
            return Err(Error::invalid("at least two Monte Carlo replicas are required"));
        }
        Inverter::new(&self.inversion_detector()?, self.signal_det.n_bins())?;
        Ok(())
    }

    fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or_else(|| default_cutoff(self.alpha_mean + 1.0))
    }

    fn inversion_detector(&self) -> Result<DetectorModel> {
        if self.inversion_corrects_efficiency {
            Ok(self.signal_det.clone())
        } else {
            self.signal_det.clone().with_efficiency(1.0)
        }
    }
}

/// Noiseless witness values of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactWitnesses {
    pub q_binomial: f64,
    pub q_fake: f64,
    /// `Q_M` of the statistics the inversion estimates.
    pub q_mandel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalysisPoint {
    pub reflectivity: f64,
    pub herald_probability: f64,
    pub signal: PhotonDistribution,
    pub clicks: ClickDistribution,
    pub exact: ExactWitnesses,
    pub counts: CountRecord,
    pub q_binomial: Result<WitnessEstimate>,
    pub q_mandel: Result<WitnessEstimate>,
    pub q_fake: Result<WitnessEstimate>,
}

/// A sweep point that could not be prepared, e.g. a herald outcome of zero
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedPoint {
    pub reflectivity: f64,
    pub error: Error,
}

pub type SweepPoint = core::result::Result<CatalysisPoint, FailedPoint>;

/// Evaluates point `index` of the sweep.
pub fn catalysis_point(cfg: &CatalysisSweepConfig, index: usize) -> SweepPoint {
    let reflectivity = cfg.reflectivities[index];
    catalysis_point_inner(cfg, index, reflectivity).map_err(|error| FailedPoint { reflectivity, error })
}

fn catalysis_point_inner(cfg: &CatalysisSweepConfig, index: usize, reflectivity: f64) -> Result<CatalysisPoint> {
    let (signal, herald_probability) =
        catalysis_conditional_pn(cfg.alpha_mean, reflectivity, cfg.k_herald, &cfg.herald, cfg.cutoff())?;
    let n_bins = cfg.signal_det.n_bins();
    let clicks = forward_clicks(&signal, &cfg.signal_det);
    let detected_eta = if cfg.inversion_corrects_efficiency { 1.0 } else { cfg.signal_det.efficiency() };
    let exact = ExactWitnesses {
        q_binomial: q_binomial(&clicks, n_bins).unwrap_or(f64::NAN),
        q_fake: q_fake(&clicks).unwrap_or(f64::NAN),
        q_mandel: q_mandel(&apply_loss(&signal, detected_eta)?).unwrap_or(f64::NAN),
    };
    let point_seed = derive_seed(cfg.seed, index as u64);
    let counts = sample_counts(&clicks, cfg.expected_total_events, derive_seed(point_seed, 0))?;
    let boot = derive_seed(point_seed, 1);
    let inversion_det = cfg.inversion_detector()?;
    Ok(CatalysisPoint {
        reflectivity,
        herald_probability,
        signal,
        exact,
        q_binomial: mc_witness(&counts, ClickWitness::Binomial, n_bins, cfg.n_replicas, boot),
        q_fake: mc_witness(&counts, ClickWitness::Fake, n_bins, cfg.n_replicas, boot),
        q_mandel: q_mandel_from_clicks(&counts, &inversion_det, n_bins, cfg.n_replicas, boot),
        clicks,
        counts,
    })
}

/// All points in input order.
pub fn run_catalysis_sweep(cfg: &CatalysisSweepConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    Ok((0..cfg.reflectivities.len()).map(|i| catalysis_point(cfg, i)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmsvConfig {
    pub lambda_sq: f64,
    /// Arm transmissions applied to the light before the detectors.
    pub eta1: f64,
    pub eta2: f64,
    pub det1: DetectorModel,
    pub det2: DetectorModel,
    /// Expected number of recorded two-arm events.
    pub expected_total_events: f64,
    pub n_replicas: usize,
    pub seed: u64,
    /// Click numbers conditioned on, besides the unconditioned marginal.
    pub conditions: Vec<usize>,
}

/// Squeezing giving an unconditioned `Q_B` near `10⁻²` at `η = 0.07`.
pub const DEFAULT_LAMBDA_SQ: f64 = 0.15;
/// Event count giving unconditioned `Q_B` errors near `6·10⁻⁴`.
pub const DEFAULT_TMSV_EVENTS: f64 = 9.0e6;

impl Default for TmsvConfig {
    fn default() -> Self {
        let det = DetectorModel::ideal(8).expect("eight bins");
        TmsvConfig {
            lambda_sq: DEFAULT_LAMBDA_SQ,
            eta1: 0.07,
            eta2: 0.07,
            det1: det.clone(),
            det2: det,
            expected_total_events: DEFAULT_TMSV_EVENTS,
            n_replicas: 1000,
            seed: 1,
            conditions: vec![0, 1, 2],
        }
    }
}

impl TmsvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda_sq) {
            return Err(Error::invalid("squeezing parameter λ² must lie in [0, 1)"));
        }
        if !(self.expected_total_events > 0.0) || !self.expected_total_events.is_finite() {
            return Err(Error::invalid("expected total events must be positive"));
        }
        if self.n_replicas < 2 {
            return Err(Error::invalid("at least two Monte Carlo replicas are required"));
        }
        Ok(())
    }

    /// `(analyzed arm, condition)` pairs in report order.
    pub fn rows(&self) -> Vec<(Arm, Condition)> {
        let mut out = Vec::new();
        for arm in [Arm::First, Arm::Second] {
            out.push((arm, Condition::Unconditioned));
            out.extend(self.conditions.iter().map(|&k| (arm, Condition::Clicks(k))));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmsvRow {
    /// Arm whose clicks the witness is evaluated on; the condition refers
    /// to the other arm.
    pub analyzed: Arm,
    pub condition: Condition,
    /// Exact probability of the condition.
    pub event_fraction: f64,
    /// Fraction of recorded events meeting the condition.
    pub observed_fraction: f64,
    pub exact_q_binomial: Result<f64>,
    pub q_binomial: Result<WitnessEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmsvReport {
    pub joint: JointClickDistribution,
    pub counts: JointCountRecord,
    pub rows: Vec<TmsvRow>,
    /// `condition_fractions[arm][k]`: probability of `k` clicks on `arm`.
    pub condition_fractions: [Vec<f64>; 2],
}

/// Exact joint click statistics of the configured source.
pub fn tmsv_joint_clicks(cfg: &TmsvConfig) -> Result<JointClickDistribution> {
    let p = tmsv_joint_pn(cfg.lambda_sq, cfg.eta1, cfg.eta2, 20)?;
    Ok(joint_forward_clicks(&p, &cfg.det1, &cfg.det2))
}

/// Samples the joint record; rows are then evaluated with [`tmsv_row`].
pub fn tmsv_sample(cfg: &TmsvConfig, joint: &JointClickDistribution) -> Result<JointCountRecord> {
    sample_joint_counts(joint, cfg.expected_total_events, derive_seed(cfg.seed, 0))
}

/// Row `index` of [`TmsvConfig::rows`].
pub fn tmsv_row(cfg: &TmsvConfig, joint: &JointClickDistribution, counts: &JointCountRecord, index: usize) -> TmsvRow {
    let (analyzed, condition) = cfg.rows()[index];
    let conditioning = analyzed.other();
    let n_bins = joint.n_bins(analyzed);
    let exact = condition_on_clicks(joint, conditioning, condition);
    let event_fraction = exact.as_ref().map(|(_, p)| *p).unwrap_or(0.0);
    let exact_q_binomial = exact.and_then(|(c, _)| q_binomial(&c, n_bins));
    let record = counts.condition(conditioning, condition);
    let total = counts.total_events();
    let observed_fraction = match &record {
        Ok(r) if total > 0 => r.total_events() as f64 / total as f64,
        _ => 0.0,
    };
    let boot = derive_seed(cfg.seed, 1 + index as u64);
    let q_binomial = record.and_then(|r| {
        if r.total_events() == 0 {
            return Err(Error::DegenerateConditioning { probability: 0.0 });
        }
        mc_witness(&r, ClickWitness::Binomial, n_bins, cfg.n_replicas, boot)
    });
    TmsvRow { analyzed, condition, event_fraction, observed_fraction, exact_q_binomial, q_binomial }
}

pub fn run_tmsv(cfg: &TmsvConfig) -> Result<TmsvReport> {
    cfg.validate()?;
    let joint = tmsv_joint_clicks(cfg)?;
    let counts = tmsv_sample(cfg, &joint)?;
    let rows = (0..cfg.rows().len()).map(|i| tmsv_row(cfg, &joint, &counts, i)).collect();
    Ok(TmsvReport { condition_fractions: condition_fractions(&joint), joint, counts, rows })
}

/// Click-number distribution of each arm, i.e. the probability of every
/// possible condition.
pub fn condition_fractions(joint: &JointClickDistribution) -> [Vec<f64>; 2] {
    [joint.marginal(Arm::First).probs().to_vec(), joint.marginal(Arm::Second).probs().to_vec()]
}
