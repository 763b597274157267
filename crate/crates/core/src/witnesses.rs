//! Nonclassicality parameters and their Monte Carlo uncertainties.
//!
//! * `Q_M = Δ²n / n̄ − 1` on photon numbers,
//! * `Q_B = Δ²c / (c̄ (1 − c̄/N)) − 1` on click numbers of an `N`-bin detector,
//! * `Q_F = Δ²c / c̄ − 1`, the Mandel formula applied naively to clicks.
//!
//! Negative `Q_M` (sub-Poissonian) or `Q_B` (sub-binomial) certify
//! nonclassical light. `Q_F` is not a witness: it is negative for coherent
//! light seen through a finite number of bins.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent when std is linked
use num_traits::Float;

use crate::detector::{resample_poisson, ClickDistribution, CountRecord};
use crate::distributions::{moments, PhotonDistribution};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub fn q_mandel(p: &PhotonDistribution) -> Result<f64> {
    let (mean, variance) = moments(p);
    if !(mean > 0.0) {
        return Err(Error::UndefinedWitness("mean photon number is zero"));
    }
    Ok(variance / mean - 1.0)
}

pub fn q_binomial(c: &ClickDistribution, n_bins: usize) -> Result<f64> {
    if c.n_bins() > n_bins {
        return Err(Error::invalid("click distribution has more outcomes than bins"));
    }
    let (mean, variance) = c.moments();
    let nb = n_bins as f64;
    if !(mean > 0.0) {
        return Err(Error::UndefinedWitness("mean click number is zero"));
    }
    if mean >= nb {
        return Err(Error::UndefinedWitness("every bin clicks on every event"));
    }
    Ok(variance / (mean * (1.0 - mean / nb)) - 1.0)
}

pub fn q_fake(c: &ClickDistribution) -> Result<f64> {
    let (mean, variance) = c.moments();
    if !(mean > 0.0) {
        return Err(Error::UndefinedWitness("mean click number is zero"));
    }
    Ok(variance / mean - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClickWitness {
    /// `Q_B`.
    Binomial,
    /// `Q_F`.
    Fake,
}

impl ClickWitness {
    pub fn symbol(self) -> &'static str {
        match self {
            ClickWitness::Binomial => "Q_B",
            ClickWitness::Fake => "Q_F",
        }
    }

    pub fn evaluate(self, c: &ClickDistribution, n_bins: usize) -> Result<f64> {
        match self {
            ClickWitness::Binomial => q_binomial(c, n_bins),
            ClickWitness::Fake => q_fake(c),
        }
    }
}

pub fn witness_from_counts(r: &CountRecord, witness: ClickWitness, n_bins: usize) -> Result<f64> {
    witness.evaluate(&r.frequencies()?, n_bins)
}

/// A witness value with its Poisson-bootstrap spread.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessEstimate {
    /// Witness of the observed record.
    pub value: f64,
    /// Sample standard deviation of `samples`.
    pub std_error: f64,
    pub n_replicas: usize,
    /// Fraction of replicas on which the witness was undefined.
    pub dropped_fraction: f64,
    pub samples: Vec<f64>,
}

impl WitnessEstimate {
    /// A noiseless value with no replicas.
    pub fn exact(value: f64) -> Self {
        WitnessEstimate { value, std_error: 0.0, n_replicas: 0, dropped_fraction: 0.0, samples: Vec::new() }
    }

    pub fn histogram(&self, n_bins: usize) -> Option<Histogram> {
        Histogram::new(&self.samples, n_bins)
    }
}

/// Parametric bootstrap with Poissonian noise: each replica redraws every
/// count as Poisson with the observed count as mean and re-evaluates
/// `statistic`. Replica `k` draws from stream `k` of `seed`, so results do
/// not depend on evaluation order.
pub fn poisson_bootstrap<F>(counts: &[u64], n_replicas: usize, seed: u64, statistic: F) -> Result<WitnessEstimate>
where
    F: Fn(&[u64]) -> Result<f64>,
{
    if n_replicas < 2 {
        return Err(Error::invalid("at least two Monte Carlo replicas are required"));
    }
    let value = statistic(counts)?;
    let mut samples = Vec::with_capacity(n_replicas);
    for k in 0..n_replicas {
        let mut rng = stream_rng(seed, k as u64);
        let replica = resample_poisson(counts, &mut rng);
        match statistic(&replica) {
            Ok(v) => samples.push(v),
            Err(Error::UndefinedWitness(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if samples.len() < 2 {
        return Err(Error::UndefinedWitness("witness undefined on (almost) every replica"));
    }
    let dropped_fraction = (n_replicas - samples.len()) as f64 / n_replicas as f64;
    Ok(WitnessEstimate { value, std_error: sample_std(&samples), n_replicas, dropped_fraction, samples })
}

pub fn mc_witness(
    r: &CountRecord,
    witness: ClickWitness,
    n_bins: usize,
    n_replicas: usize,
    seed: u64,
) -> Result<WitnessEstimate> {
    poisson_bootstrap(r.counts(), n_replicas, seed, |counts| {
        let record = CountRecord::new(counts.to_vec())?;
        witness_from_counts(&record, witness, n_bins)
    })
}

pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Equal-width histogram over the sample range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lower: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(samples: &[f64], n_bins: usize) -> Option<Self> {
        if samples.is_empty() || n_bins == 0 {
            return None;
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
        let mut counts = alloc::vec![0; n_bins];
        for &s in samples {
            let idx = (((s - lo) / width) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        Some(Histogram { lower: lo, width, counts })
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.lower + (bin as f64 + 0.5) * self.width
    }

    /// Center of the most populated bin.
    pub fn mode(&self) -> f64 {
        let best = self.counts.iter().enumerate().fold(0, |best, (k, &c)| if c > self.counts[best] { k } else { best });
        self.center(best)
    }
}
