//! Configuration documents (TOML) and inline specifications.
//!
//! Detector document:
//!
//! ```toml
//! n_bins = 8              # or bin_weights = [0.125, ...]
//! efficiency = 0.9        # default 1
//! dark_click_prob = 0.0   # default 0
//! ```
//!
//! Wherever a detector document is expected, `ideal:N` names the lossless,
//! noiseless balanced detector with `N` bins. Wherever a photon distribution
//! file is expected, `coherent:μ`, `thermal:μ` and `fock:n` build one.

use std::path::Path;

use clickstat_core::experiments::{even_grid, CatalysisSweepConfig, TmsvConfig};
use clickstat_core::PhotonDistribution;
use clickstat_core::{coherent_pn, fock_pn, fockspace::default_cutoff, thermal_pn, DetectorModel, Herald};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::formats::parse_photons;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(CliError::parse)
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorDoc {
    pub n_bins: Option<usize>,
    pub bin_weights: Option<Vec<f64>>,
    pub efficiency: Option<f64>,
    pub dark_click_prob: Option<f64>,
}

impl DetectorDoc {
    pub fn build(&self) -> Result<DetectorModel> {
        let weights = match (&self.bin_weights, self.n_bins) {
            (Some(w), Some(n)) if w.len() != n => {
                return Err(CliError::parse(format!("n_bins = {n} but bin_weights has {} entries", w.len())))
            }
            (Some(w), _) => w.clone(),
            (None, Some(n)) if n > 0 => vec![1.0 / n as f64; n],
            _ => return Err(CliError::parse("detector needs n_bins or bin_weights")),
        };
        Ok(DetectorModel::new(weights, self.efficiency.unwrap_or(1.0), self.dark_click_prob.unwrap_or(0.0))?)
    }
}

fn parse_ideal(spec: &str) -> Option<Result<DetectorModel>> {
    let n = spec.strip_prefix("ideal:")?;
    Some(match n.parse::<usize>() {
        Ok(n) => DetectorModel::ideal(n).map_err(CliError::from),
        Err(_) => Err(CliError::parse(format!("bad bin count in `{spec}`"))),
    })
}

/// `ideal:N` or the path of a detector document.
pub fn load_detector(spec: &str) -> Result<DetectorModel> {
    if let Some(det) = parse_ideal(spec) {
        return det;
    }
    parse_toml::<DetectorDoc>(&read_text(Path::new(spec))?)?.build()
}

/// `coherent:μ`, `thermal:μ`, `fock:n`, or the path of a photon file.
pub fn load_photons(spec: &str) -> Result<PhotonDistribution> {
    if let Some((kind, arg)) = spec.split_once(':') {
        let bad = || CliError::parse(format!("bad argument in `{spec}`"));
        let built = match kind {
            "coherent" => {
                let mu: f64 = arg.parse().map_err(|_| bad())?;
                coherent_pn(mu, default_cutoff(mu))
            }
            "thermal" => {
                let mu: f64 = arg.parse().map_err(|_| bad())?;
                thermal_pn(mu, default_cutoff(mu))
            }
            "fock" => {
                let n: usize = arg.parse().map_err(|_| bad())?;
                fock_pn(n, n)
            }
            _ => return parse_photons(&read_text(Path::new(spec))?),
        };
        return Ok(built?);
    }
    parse_photons(&read_text(Path::new(spec))?)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldDoc {
    /// `photon_number` or `clicks`.
    pub kind: String,
    pub efficiency: Option<f64>,
    pub n_bins: Option<usize>,
    pub bin_weights: Option<Vec<f64>>,
    pub dark_click_prob: Option<f64>,
}

impl HeraldDoc {
    pub fn build(&self) -> Result<Herald> {
        match self.kind.as_str() {
            "photon_number" => {
                if self.n_bins.is_some() || self.bin_weights.is_some() || self.dark_click_prob.is_some() {
                    return Err(CliError::parse("a photon_number herald takes only `efficiency`"));
                }
                Ok(Herald::PhotonNumber { efficiency: self.efficiency.unwrap_or(1.0) })
            }
            "clicks" => Ok(Herald::Clicks(
                DetectorDoc {
                    n_bins: self.n_bins,
                    bin_weights: self.bin_weights.clone(),
                    efficiency: self.efficiency,
                    dark_click_prob: self.dark_click_prob,
                }
                .build()?,
            )),
            other => Err(CliError::parse(format!("unknown herald kind `{other}` (photon_number or clicks)"))),
        }
    }
}

/// Catalysis sweep document; omitted keys take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalysisDoc {
    pub alpha_mean: Option<f64>,
    pub reflectivities: Option<Vec<f64>>,
    /// Evenly spaced grid over `[0, 1]`, used when `reflectivities` is absent.
    pub r_points: Option<usize>,
    pub k_herald: Option<usize>,
    pub herald: Option<HeraldDoc>,
    pub signal_detector: Option<DetectorDoc>,
    pub expected_total_events: Option<f64>,
    pub n_replicas: Option<usize>,
    pub seed: Option<u64>,
    pub cutoff: Option<usize>,
    pub inversion_corrects_efficiency: Option<bool>,
}

impl CatalysisDoc {
    pub fn parse(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn build(&self) -> Result<CatalysisSweepConfig> {
        let d = CatalysisSweepConfig::default();
        if self.reflectivities.is_some() && self.r_points.is_some() {
            return Err(CliError::parse("give either reflectivities or r_points, not both"));
        }
        Ok(CatalysisSweepConfig {
            alpha_mean: self.alpha_mean.unwrap_or(d.alpha_mean),
            reflectivities: match (&self.reflectivities, self.r_points) {
                (Some(r), _) => r.clone(),
                (None, Some(n)) => even_grid(n),
                (None, None) => d.reflectivities,
            },
            k_herald: self.k_herald.unwrap_or(d.k_herald),
            herald: self.herald.as_ref().map(HeraldDoc::build).transpose()?.unwrap_or(d.herald),
            signal_det: self.signal_detector.as_ref().map(DetectorDoc::build).transpose()?.unwrap_or(d.signal_det),
            expected_total_events: self.expected_total_events.unwrap_or(d.expected_total_events),
            n_replicas: self.n_replicas.unwrap_or(d.n_replicas),
            seed: self.seed.unwrap_or(d.seed),
            cutoff: self.cutoff.or(d.cutoff),
            inversion_corrects_efficiency: self
                .inversion_corrects_efficiency
                .unwrap_or(d.inversion_corrects_efficiency),
        })
    }
}

/// Two-mode squeezed vacuum document; omitted keys take the calibrated
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmsvDoc {
    pub lambda_sq: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub detector1: Option<DetectorDoc>,
    pub detector2: Option<DetectorDoc>,
    pub expected_total_events: Option<f64>,
    pub n_replicas: Option<usize>,
    pub seed: Option<u64>,
    pub conditions: Option<Vec<usize>>,
}

impl TmsvDoc {
    pub fn parse(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn build(&self) -> Result<TmsvConfig> {
        let d = TmsvConfig::default();
        Ok(TmsvConfig {
            lambda_sq: self.lambda_sq.unwrap_or(d.lambda_sq),
            eta1: self.eta1.unwrap_or(d.eta1),
            eta2: self.eta2.unwrap_or(d.eta2),
            det1: self.detector1.as_ref().map(DetectorDoc::build).transpose()?.unwrap_or(d.det1),
            det2: self.detector2.as_ref().map(DetectorDoc::build).transpose()?.unwrap_or(d.det2),
            expected_total_events: self.expected_total_events.unwrap_or(d.expected_total_events),
            n_replicas: self.n_replicas.unwrap_or(d.n_replicas),
            seed: self.seed.unwrap_or(d.seed),
            conditions: self.conditions.clone().unwrap_or(d.conditions),
        })
    }
}
