//! Single-mode photon-number distributions and their moments.
//!
//! Constructors never silently truncate: the mass (and second moment) left
//! beyond the requested cutoff is measured, and the cutoff is extended until
//! it is negligible or the hard limit is reached.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-9;

/// Truncation policy for distributions with unbounded support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Bound on `Σ_{n>cutoff} (1 + n²) p_n`.
    pub tail_tolerance: f64,
    pub hard_limit: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { tail_tolerance: 1e-10, hard_limit: 512 }
    }
}

impl Truncation {
    pub fn coherent(&self, mean_photons: f64, n_max: usize) -> Result<PhotonDistribution> {
        check_mean(mean_photons)?;
        let ln_mu = mean_photons.ln();
        self.truncate(n_max, mean_photons, |n, ln_fact| {
            if mean_photons == 0.0 {
                if n == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                -mean_photons + n as f64 * ln_mu - ln_fact
            }
        })
    }

    pub fn thermal(&self, mean_photons: f64, n_max: usize) -> Result<PhotonDistribution> {
        check_mean(mean_photons)?;
        let ln_ratio = (mean_photons / (1.0 + mean_photons)).ln();
        let ln_norm = (1.0 + mean_photons).ln();
        self.truncate(n_max, mean_photons, |n, _| {
            if mean_photons == 0.0 {
                if n == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                n as f64 * ln_ratio - ln_norm
            }
        })
    }

    /// Smallest cutoff `>= requested` whose weighted tail is below tolerance,
    /// given `Σ_{n>c} (1+n²) p_n` as a function of `c`.
    pub(crate) fn required_cutoff(&self, requested: usize, tail: impl Fn(usize) -> f64) -> Result<usize> {
        if requested > self.hard_limit {
            return Err(Error::CutoffOverflow { required: requested, limit: self.hard_limit });
        }
        (requested..=self.hard_limit)
            .find(|&c| tail(c) < self.tail_tolerance)
            .ok_or(Error::CutoffOverflow { required: self.hard_limit + 1, limit: self.hard_limit })
    }

    /// `log_term(n, ln n!)` gives the untruncated log-probability of `n`.
    fn truncate(
        &self,
        requested: usize,
        mean: f64,
        log_term: impl Fn(usize, f64) -> f64,
    ) -> Result<PhotonDistribution> {
        // Scan far enough past the hard limit that the remaining tail is
        // below any double-precision contribution.
        let scan_min = self.hard_limit.max(requested) + 1;
        let scan_max = 8 * scan_min + 64;
        let mut terms = Vec::with_capacity(scan_min + 1);
        let mut ln_fact = 0.0;
        for n in 0..=scan_max {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let t = log_term(n, ln_fact).exp();
            terms.push(t);
            let nf = n as f64;
            if n >= scan_min && nf > 2.0 * mean + 16.0 && t * (1.0 + nf * nf) < 1e-300 {
                break;
            }
        }
        // tails[c] = Σ_{n>c} (1+n²) t_n, accumulated from the small end.
        let mut tails = vec![0.0; terms.len()];
        let mut acc = 0.0;
        for n in (0..terms.len()).rev() {
            tails[n] = acc;
            let nf = n as f64;
            acc += (1.0 + nf * nf) * terms[n];
        }
        let cutoff = self.required_cutoff(requested, |c| tails[c])?;
        terms.truncate(cutoff + 1);
        PhotonDistribution::normalized(terms)
    }
}

fn check_mean(mean_photons: f64) -> Result<()> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::invalid("mean photon number must be finite and non-negative"));
    }
    Ok(())
}

/// Probability vector over photon number `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    /// Validates an already-normalized vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("photon distribution needs at least one entry"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("photon probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid("photon probabilities must sum to 1"));
        }
        Ok(PhotonDistribution { probs })
    }

    /// Rescales non-negative weights to unit sum.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 {
            return Err(Error::invalid("weights have zero total mass"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(PhotonDistribution { probs: weights })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        moments(self).0
    }

    /// Zero-padded copy with cutoff `n_max` (never truncates).
    pub fn padded(&self, n_max: usize) -> PhotonDistribution {
        let mut probs = self.probs.clone();
        if n_max + 1 > probs.len() {
            probs.resize(n_max + 1, 0.0);
        }
        PhotonDistribution { probs }
    }
}

/// `(mean, variance)` of a photon-number distribution.
pub fn moments(p: &PhotonDistribution) -> (f64, f64) {
    weighted_moments(p.probs())
}

pub(crate) fn weighted_moments(probs: &[f64]) -> (f64, f64) {
    let mean: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let variance = probs
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let d = n as f64 - mean;
            d * d * p
        })
        .sum();
    (mean, variance)
}

/// Poissonian statistics of a coherent state with `mean_photons`.
pub fn coherent_pn(mean_photons: f64, n_max: usize) -> Result<PhotonDistribution> {
    Truncation::default().coherent(mean_photons, n_max)
}

/// Bose-Einstein (geometric) statistics of a single-mode thermal state.
pub fn thermal_pn(mean_photons: f64, n_max: usize) -> Result<PhotonDistribution> {
    Truncation::default().thermal(mean_photons, n_max)
}

pub fn fock_pn(n: usize, n_max: usize) -> Result<PhotonDistribution> {
    if n > n_max {
        return Err(Error::invalid("Fock number exceeds the cutoff"));
    }
    let mut probs = vec![0.0; n_max + 1];
    probs[n] = 1.0;
    Ok(PhotonDistribution { probs })
}

/// Joint photon-number probabilities of two modes, row-major in `(n1, n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPhotonDistribution {
    n_max1: usize,
    n_max2: usize,
    probs: Vec<f64>,
}

impl JointPhotonDistribution {
    pub fn from_probs(n_max1: usize, n_max2: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != (n_max1 + 1) * (n_max2 + 1) {
            return Err(Error::invalid("joint grid has the wrong number of entries"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("joint probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid("joint probabilities must sum to 1"));
        }
        Ok(JointPhotonDistribution { n_max1, n_max2, probs })
    }

    pub fn n_max1(&self) -> usize {
        self.n_max1
    }

    pub fn n_max2(&self) -> usize {
        self.n_max2
    }

    pub fn get(&self, n1: usize, n2: usize) -> f64 {
        if n1 > self.n_max1 || n2 > self.n_max2 {
            return 0.0;
        }
        self.probs[n1 * (self.n_max2 + 1) + n2]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal1(&self) -> PhotonDistribution {
        let probs = (0..=self.n_max1).map(|a| (0..=self.n_max2).map(|b| self.get(a, b)).sum()).collect();
        PhotonDistribution { probs }
    }

    pub fn marginal2(&self) -> PhotonDistribution {
        let probs = (0..=self.n_max2).map(|b| (0..=self.n_max1).map(|a| self.get(a, b)).sum()).collect();
        PhotonDistribution { probs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Poisson mass by an explicitly multiplied factorial, independent of the
    /// log-space path used by the constructor.
    fn poisson_by_factorial(mu: f64, n: u32) -> f64 {
        let fact: f64 = (1..=n).map(f64::from).product();
        (-mu).exp() * mu.powi(n as i32) / fact
    }

    #[test]
    fn vacuum_limits() {
        assert_eq!(coherent_pn(0.0, 4).unwrap().probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(thermal_pn(0.0, 4).unwrap().probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(fock_pn(0, 2).unwrap().probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn coherent_unit_mean() {
        let p = coherent_pn(1.0, 20).unwrap();
        let (m, v) = moments(&p);
        assert!((m - 1.0).abs() < 1e-9);
        assert!((v - 1.0).abs() < 1e-9);
        let oracle = poisson_by_factorial(1.0, 2);
        assert!((oracle - 0.183_939_720_585_721_16).abs() < 1e-15);
        assert!((p.get(2) - oracle).abs() < 1e-12);
    }

    #[test]
    fn thermal_closed_forms() {
        let p = thermal_pn(1.0, 60).unwrap();
        assert!((p.get(0) - 0.5).abs() < 1e-9);
        let (m, v) = moments(&thermal_pn(2.0, 60).unwrap());
        assert!((v / m - 1.0 - 2.0).abs() < 1e-6);
        let (m, v) = moments(&thermal_pn(0.5, 60).unwrap());
        assert!((m - 0.5).abs() < 1e-6 && (v - 0.75).abs() < 1e-6);
    }

    #[test]
    fn fock_moments() {
        assert_eq!(moments(&fock_pn(2, 5).unwrap()), (2.0, 0.0));
        assert_eq!(moments(&fock_pn(3, 8).unwrap()), (3.0, 0.0));
        assert!(fock_pn(3, 2).is_err());
    }

    #[test]
    fn coherent_half_moments() {
        let (m, v) = moments(&coherent_pn(0.5, 20).unwrap());
        assert!((m - 0.5).abs() < 1e-9 && (v - 0.5).abs() < 1e-9);
    }

    #[test]
    fn poisson_ratio_is_one() {
        for mu in [0.1, 1.0, 5.0] {
            let (m, v) = moments(&coherent_pn(mu, 10).unwrap());
            assert!((v / m - 1.0).abs() < 1e-8, "mu={mu}");
        }
    }

    #[test]
    fn cutoff_extends_when_tail_is_heavy() {
        let p = coherent_pn(5.0, 4).unwrap();
        assert!(p.n_max() > 4);
        let t = thermal_pn(2.0, 60).unwrap();
        assert!(t.n_max() >= 60);
    }

    #[test]
    fn cutoff_stability() {
        for (mu, n) in [(0.5, 20), (3.0, 40), (2.0, 60)] {
            let a = moments(&thermal_pn(mu, n).unwrap());
            let b = moments(&thermal_pn(mu, 2 * n).unwrap());
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "thermal {mu}");
            let a = moments(&coherent_pn(mu, n).unwrap());
            let b = moments(&coherent_pn(mu, 2 * n).unwrap());
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "coherent {mu}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(coherent_pn(-1.0, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(thermal_pn(f64::NAN, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(coherent_pn(600.0, 10), Err(Error::CutoffOverflow { .. })));
        assert!(matches!(thermal_pn(200.0, 10), Err(Error::CutoffOverflow { .. })));
        let strict = Truncation { hard_limit: 8, ..Truncation::default() };
        assert!(matches!(strict.coherent(1.0, 4), Err(Error::CutoffOverflow { limit: 8, .. })));
    }

    #[test]
    fn joint_marginals() {
        let j = JointPhotonDistribution::from_probs(1, 2, vec![0.1, 0.2, 0.3, 0.0, 0.25, 0.15]).unwrap();
        let m1 = j.marginal1();
        let m2 = j.marginal2();
        assert!((m1.get(0) - 0.6).abs() < 1e-15 && (m1.get(1) - 0.4).abs() < 1e-15);
        assert!((m2.get(1) - 0.45).abs() < 1e-15);
        assert!(JointPhotonDistribution::from_probs(1, 1, vec![0.5; 3]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constructors_are_normalized(mu in 0.0f64..30.0, n in 0usize..80) {
                for p in [coherent_pn(mu, n).unwrap(), thermal_pn(mu / 4.0, n).unwrap()] {
                    let s: f64 = p.probs().iter().sum();
                    prop_assert!((s - 1.0).abs() < 1e-9);
                    prop_assert!(p.probs().iter().all(|x| (0.0..=1.0).contains(x)));
                }
            }

            #[test]
            fn thermal_is_super_poissonian(mu in 0.01f64..10.0) {
                let (m, v) = moments(&thermal_pn(mu, 20).unwrap());
                prop_assert!(v > m);
            }
        }
    }
}
