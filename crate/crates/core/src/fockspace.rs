//! Truncated two-mode Fock space: product inputs, beam-splitter interference,
//! photon loss and herald conditioning.
//!
//! Mode order is `(herald, signal)`. The beam splitter acts on creation
//! operators as `a† → √T a† + √R b†`, `b† → √T b† − √R a†` with `a` the herald
//! mode and `b` the signal mode, so `R = 1` swaps the modes and `R = 0` is the
//! identity. All matrix elements are real.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // float methods are inherent when std is linked
use num_traits::Float;

use crate::detector::{click_matrix, DetectorModel};
use crate::distributions::{coherent_pn, JointPhotonDistribution, PhotonDistribution};
use crate::error::{Error, Result};
use crate::math::{binomial, binomial_pmf, ln_factorials};

const DEGENERATE_PROB: f64 = 1e-15;

/// `max(20, ceil(μ + 8√μ) + 2)`.
pub fn default_cutoff(mean_photons: f64) -> usize {
    let spread = (mean_photons + 8.0 * mean_photons.sqrt()).ceil() as usize + 2;
    spread.max(20)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    cutoff: usize,
    amps: Vec<Complex64>,
}

impl TwoModeState {
    pub fn from_amplitudes(cutoff: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != (cutoff + 1) * (cutoff + 1) {
            return Err(Error::invalid("amplitude grid has the wrong number of entries"));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("state is not normalized"));
        }
        Ok(TwoModeState { cutoff, amps })
    }

    /// `|n_herald, n_signal⟩`.
    pub fn fock(n_herald: usize, n_signal: usize, cutoff: usize) -> Result<Self> {
        if n_herald > cutoff || n_signal > cutoff {
            return Err(Error::invalid("Fock numbers exceed the cutoff"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); (cutoff + 1) * (cutoff + 1)];
        amps[n_herald * (cutoff + 1) + n_signal] = Complex64::new(1.0, 0.0);
        Ok(TwoModeState { cutoff, amps })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amp(&self, n_herald: usize, n_signal: usize) -> Complex64 {
        if n_herald > self.cutoff || n_signal > self.cutoff {
            return Complex64::new(0.0, 0.0);
        }
        self.amps[n_herald * (self.cutoff + 1) + n_signal]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn joint_probabilities(&self) -> JointPhotonDistribution {
        let probs = self.amps.iter().map(|a| a.norm_sqr()).collect();
        // Norm is preserved by every operation on this type.
        JointPhotonDistribution::from_probs(self.cutoff, self.cutoff, probs).expect("two-mode state stays normalized")
    }

    pub fn signal_distribution(&self) -> PhotonDistribution {
        self.joint_probabilities().marginal2()
    }

    pub fn herald_distribution(&self) -> PhotonDistribution {
        self.joint_probabilities().marginal1()
    }
}

/// `|n_photons⟩ ⊗ |α⟩` with `|α|² = alpha_mean` and a real, non-negative `α`.
///
/// The grid grows beyond `cutoff` when the coherent tail requires it.
pub fn product_input(n_photons: usize, alpha_mean: f64, cutoff: usize) -> Result<TwoModeState> {
    if n_photons > cutoff {
        return Err(Error::invalid("photon number exceeds the cutoff"));
    }
    let coherent = coherent_pn(alpha_mean, cutoff)?;
    let cutoff = coherent.n_max();
    let mut amps = vec![Complex64::new(0.0, 0.0); (cutoff + 1) * (cutoff + 1)];
    for (m, p) in coherent.probs().iter().enumerate() {
        amps[n_photons * (cutoff + 1) + m] = Complex64::new(p.sqrt(), 0.0);
    }
    Ok(TwoModeState { cutoff, amps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    reflectivity: f64,
}

impl BeamSplitter {
    pub fn new(reflectivity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(Error::invalid("reflectivity must lie in [0, 1]"));
        }
        Ok(BeamSplitter { reflectivity })
    }

    /// Half-wave-plate variable splitter: `R = cos²θ`.
    pub fn from_wave_plate_angle(theta: f64) -> Result<Self> {
        let c = theta.cos();
        BeamSplitter::new((c * c).clamp(0.0, 1.0))
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn transmissivity(&self) -> f64 {
        1.0 - self.reflectivity
    }
}

pub fn apply_beamsplitter(state: &TwoModeState, bs: &BeamSplitter) -> TwoModeState {
    mix(state, bs.transmissivity().sqrt(), bs.reflectivity().sqrt())
}

/// Undoes [`apply_beamsplitter`] (same `R`, opposite sign of `√R`).
pub fn apply_beamsplitter_inverse(state: &TwoModeState, bs: &BeamSplitter) -> TwoModeState {
    mix(state, bs.transmissivity().sqrt(), -bs.reflectivity().sqrt())
}

fn mix(state: &TwoModeState, t: f64, r: f64) -> TwoModeState {
    let c = state.cutoff;
    let occupied = |n: usize, m: usize| state.amp(n, m).norm_sqr() > 0.0;
    let max_total = (0..=c)
        .flat_map(|n| (0..=c).map(move |m| (n, m)))
        .filter(|&(n, m)| occupied(n, m))
        .map(|(n, m)| n + m)
        .max()
        .unwrap_or(0);
    let out_cut = c.max(max_total);
    let lnf = ln_factorials(out_cut);
    let mut out = vec![Complex64::new(0.0, 0.0); (out_cut + 1) * (out_cut + 1)];
    for n in 0..=c {
        for m in 0..=c {
            let a = state.amp(n, m);
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..=n {
                let cj = binomial(n, j) * t.powi(j as i32) * r.powi((n - j) as i32);
                if cj == 0.0 {
                    continue;
                }
                for l in 0..=m {
                    let cl = binomial(m, l) * t.powi(l as i32) * (-r).powi((m - l) as i32);
                    if cl == 0.0 {
                        continue;
                    }
                    let p = j + m - l;
                    let q = n - j + l;
                    let scale = (0.5 * (lnf[p] + lnf[q] - lnf[n] - lnf[m])).exp();
                    out[p * (out_cut + 1) + q] += a * (cj * cl * scale);
                }
            }
        }
    }
    TwoModeState { cutoff: out_cut, amps: out }
}

/// Binomial loss: every photon survives independently with probability `eta`.
pub fn apply_loss(p: &PhotonDistribution, eta: f64) -> Result<PhotonDistribution> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("efficiency must lie in [0, 1]"));
    }
    let probs: Vec<f64> =
        (0..=p.n_max()).map(|m| (m..=p.n_max()).map(|n| binomial_pmf(n, m, eta) * p.get(n)).sum()).collect();
    PhotonDistribution::normalized(probs)
}

/// Photon-number-diagonal herald measurement `P(k | n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Herald {
    /// Number-resolving detector with per-photon efficiency; `efficiency = 1`
    /// gives the ideal herald `P(k|n) = δ_kn`.
    PhotonNumber { efficiency: f64 },
    /// Multiplexed click detector; `k` counts clicks.
    Clicks(DetectorModel),
}

impl Herald {
    pub fn ideal() -> Self {
        Herald::PhotonNumber { efficiency: 1.0 }
    }

    /// `P(k | n)` for `n = 0..=n_max`.
    pub fn weights(&self, k: usize, n_max: usize) -> Result<Vec<f64>> {
        match self {
            Herald::PhotonNumber { efficiency } => {
                if !(0.0..=1.0).contains(efficiency) {
                    return Err(Error::invalid("efficiency must lie in [0, 1]"));
                }
                Ok((0..=n_max).map(|n| binomial_pmf(n, k, *efficiency)).collect())
            }
            Herald::Clicks(det) => {
                if k > det.n_bins() {
                    return Err(Error::invalid("herald click number exceeds the bin count"));
                }
                Ok(click_matrix(det, n_max).row(k).to_vec())
            }
        }
    }
}

/// Signal-arm photon statistics after interfering a single photon with a
/// coherent state and heralding `k` on the other output, plus the herald
/// probability.
pub fn catalysis_conditional_pn(
    alpha_mean: f64,
    reflectivity: f64,
    k: usize,
    herald: &Herald,
    cutoff: usize,
) -> Result<(PhotonDistribution, f64)> {
    let bs = BeamSplitter::new(reflectivity)?;
    let state = apply_beamsplitter(&product_input(1, alpha_mean, cutoff)?, &bs);
    condition_signal(&state, k, herald)
}

/// Conditions the signal mode of `state` on outcome `k` of `herald`.
pub fn condition_signal(state: &TwoModeState, k: usize, herald: &Herald) -> Result<(PhotonDistribution, f64)> {
    let c = state.cutoff;
    let w = herald.weights(k, c)?;
    let signal: Vec<f64> = (0..=c).map(|m| (0..=c).map(|n| w[n] * state.amp(n, m).norm_sqr()).sum()).collect();
    let probability: f64 = signal.iter().sum();
    if !(probability >= DEGENERATE_PROB) {
        return Err(Error::DegenerateConditioning { probability });
    }
    Ok((PhotonDistribution::normalized(signal)?, probability))
}
