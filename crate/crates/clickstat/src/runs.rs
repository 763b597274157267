//! Parallel experiment runners and their tables.
//!
//! Points are evaluated on the rayon pool; every point draws from its own
//! derived seed and results are collected in input order, so output does not
//! depend on the thread count.

use clickstat_core::experiments::{
    catalysis_point, condition_fractions, tmsv_joint_clicks, tmsv_row, tmsv_sample, CatalysisSweepConfig, SweepPoint,
    TmsvConfig, TmsvReport, TmsvRow,
};
use clickstat_core::{Arm, Condition, Herald, WitnessEstimate};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::formats::{csv_string, estimate_cells, finite, float, json_string, opt_cell, EstimateDoc, SCHEMA_VERSION};

pub fn run_catalysis_sweep(cfg: &CatalysisSweepConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    Ok((0..cfg.reflectivities.len()).into_par_iter().map(|i| catalysis_point(cfg, i)).collect())
}

pub fn run_tmsv(cfg: &TmsvConfig) -> Result<TmsvReport> {
    cfg.validate()?;
    let joint = tmsv_joint_clicks(cfg)?;
    let counts = tmsv_sample(cfg, &joint)?;
    let rows = (0..cfg.rows().len()).into_par_iter().map(|i| tmsv_row(cfg, &joint, &counts, i)).collect();
    Ok(TmsvReport { condition_fractions: condition_fractions(&joint), joint, counts, rows })
}

fn status(parts: &[(&str, Option<&clickstat_core::Error>)]) -> String {
    let failed: Vec<String> = parts.iter().filter_map(|(name, e)| e.map(|e| format!("{name}:{}", e.name()))).collect();
    if failed.is_empty() {
        "ok".into()
    } else {
        failed.join(";")
    }
}

pub const CATALYSIS_HEADER: [&str; 13] = [
    "reflectivity",
    "herald_probability",
    "events",
    "q_b",
    "q_b_err",
    "q_m",
    "q_m_err",
    "q_f",
    "q_f_err",
    "q_b_exact",
    "q_m_exact",
    "q_f_exact",
    "status",
];

pub fn catalysis_csv(points: &[SweepPoint]) -> String {
    csv_string(
        &CATALYSIS_HEADER,
        points.iter().map(|pt| match pt {
            Ok(p) => {
                let [b, be] = estimate_cells(&p.q_binomial);
                let [m, me] = estimate_cells(&p.q_mandel);
                let [f, fe] = estimate_cells(&p.q_fake);
                vec![
                    float(p.reflectivity),
                    float(p.herald_probability),
                    p.counts.total_events().to_string(),
                    b,
                    be,
                    m,
                    me,
                    f,
                    fe,
                    opt_cell(finite(p.exact.q_binomial)),
                    opt_cell(finite(p.exact.q_mandel)),
                    opt_cell(finite(p.exact.q_fake)),
                    status(&[
                        ("q_b", p.q_binomial.as_ref().err()),
                        ("q_m", p.q_mandel.as_ref().err()),
                        ("q_f", p.q_fake.as_ref().err()),
                    ]),
                ]
            }
            Err(f) => {
                let mut row = vec![float(f.reflectivity)];
                row.extend(std::iter::repeat_n(String::new(), 11));
                row.push(f.error.name().to_string());
                row
            }
        }),
    )
}

#[derive(Serialize)]
struct Outcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<EstimateDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Outcome {
    fn new(e: &std::result::Result<WitnessEstimate, clickstat_core::Error>) -> Self {
        match e {
            Ok(e) => Outcome { estimate: Some(EstimateDoc::new(e, false)), error: None },
            Err(e) => Outcome { estimate: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Serialize)]
struct PointDoc {
    reflectivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    herald_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(rename = "Q_B", skip_serializing_if = "Option::is_none")]
    q_binomial: Option<Outcome>,
    #[serde(rename = "Q_M", skip_serializing_if = "Option::is_none")]
    q_mandel: Option<Outcome>,
    #[serde(rename = "Q_F", skip_serializing_if = "Option::is_none")]
    q_fake: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signal_photon_distribution: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    click_distribution: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct ExactDoc {
    #[serde(rename = "Q_B")]
    q_binomial: Option<f64>,
    #[serde(rename = "Q_M")]
    q_mandel: Option<f64>,
    #[serde(rename = "Q_F")]
    q_fake: Option<f64>,
}

#[derive(Serialize)]
struct HeraldDoc {
    kind: &'static str,
    efficiency: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_bins: Option<usize>,
}

#[derive(Serialize)]
struct CatalysisReportDoc {
    schema_version: u32,
    kind: &'static str,
    alpha_mean: f64,
    k_herald: usize,
    herald: HeraldDoc,
    signal_n_bins: usize,
    signal_efficiency: f64,
    expected_total_events: f64,
    n_replicas: usize,
    seed: u64,
    points: Vec<PointDoc>,
}

pub fn catalysis_json(cfg: &CatalysisSweepConfig, points: &[SweepPoint]) -> String {
    let herald = match &cfg.herald {
        Herald::PhotonNumber { efficiency } => {
            HeraldDoc { kind: "photon_number", efficiency: *efficiency, n_bins: None }
        }
        Herald::Clicks(d) => HeraldDoc { kind: "clicks", efficiency: d.efficiency(), n_bins: Some(d.n_bins()) },
    };
    let points = points
        .iter()
        .map(|pt| match pt {
            Ok(p) => PointDoc {
                reflectivity: p.reflectivity,
                herald_probability: Some(p.herald_probability),
                events: Some(p.counts.total_events()),
                error: None,
                q_binomial: Some(Outcome::new(&p.q_binomial)),
                q_mandel: Some(Outcome::new(&p.q_mandel)),
                q_fake: Some(Outcome::new(&p.q_fake)),
                exact: Some(ExactDoc {
                    q_binomial: finite(p.exact.q_binomial),
                    q_mandel: finite(p.exact.q_mandel),
                    q_fake: finite(p.exact.q_fake),
                }),
                signal_photon_distribution: Some(p.signal.probs().to_vec()),
                click_distribution: Some(p.clicks.probs().to_vec()),
            },
            Err(f) => PointDoc {
                reflectivity: f.reflectivity,
                herald_probability: None,
                events: None,
                error: Some(f.error.to_string()),
                q_binomial: None,
                q_mandel: None,
                q_fake: None,
                exact: None,
                signal_photon_distribution: None,
                click_distribution: None,
            },
        })
        .collect();
    json_string(&CatalysisReportDoc {
        schema_version: SCHEMA_VERSION,
        kind: "catalysis_sweep",
        alpha_mean: cfg.alpha_mean,
        k_herald: cfg.k_herald,
        herald,
        signal_n_bins: cfg.signal_det.n_bins(),
        signal_efficiency: cfg.signal_det.efficiency(),
        expected_total_events: cfg.expected_total_events,
        n_replicas: cfg.n_replicas,
        seed: cfg.seed,
        points,
    })
}

pub fn arm_label(arm: Arm) -> String {
    arm.index().to_string()
}

pub fn condition_label(c: Condition) -> String {
    match c {
        Condition::Unconditioned => "none".into(),
        Condition::Clicks(k) => k.to_string(),
    }
}

pub const TMSV_HEADER: [&str; 11] = [
    "analyzed_arm",
    "conditioning_arm",
    "condition",
    "event_fraction",
    "observed_fraction",
    "events",
    "q_b_exact",
    "q_b",
    "q_b_err",
    "dropped_fraction",
    "status",
];

fn row_events(report: &TmsvReport, row: &TmsvRow) -> u64 {
    report.counts.condition(row.analyzed.other(), row.condition).map(|r| r.total_events()).unwrap_or(0)
}

pub fn tmsv_csv(report: &TmsvReport) -> String {
    csv_string(
        &TMSV_HEADER,
        report.rows.iter().map(|row| {
            let [q, qe] = estimate_cells(&row.q_binomial);
            vec![
                arm_label(row.analyzed),
                arm_label(row.analyzed.other()),
                condition_label(row.condition),
                float(row.event_fraction),
                float(row.observed_fraction),
                row_events(report, row).to_string(),
                opt_cell(row.exact_q_binomial.as_ref().ok().copied()),
                q,
                qe,
                row.q_binomial.as_ref().map(|e| float(e.dropped_fraction)).unwrap_or_default(),
                status(&[("q_b", row.q_binomial.as_ref().err())]),
            ]
        }),
    )
}

#[derive(Serialize)]
struct TmsvRowDoc {
    analyzed_arm: u8,
    conditioning_arm: u8,
    condition: String,
    event_fraction: f64,
    observed_fraction: f64,
    events: u64,
    q_b_exact: Option<f64>,
    #[serde(rename = "Q_B")]
    q_binomial: Outcome,
}

#[derive(Serialize)]
struct TmsvReportDoc {
    schema_version: u32,
    kind: &'static str,
    lambda_sq: f64,
    eta1: f64,
    eta2: f64,
    n_bins1: usize,
    n_bins2: usize,
    expected_total_events: f64,
    total_events: u64,
    n_replicas: usize,
    seed: u64,
    /// `joint_clicks[i][j]`: probability of `i` clicks on arm 1 and `j` on arm 2.
    joint_clicks: Vec<Vec<f64>>,
    joint_counts: Vec<Vec<u64>>,
    condition_fractions_arm1: Vec<f64>,
    condition_fractions_arm2: Vec<f64>,
    rows: Vec<TmsvRowDoc>,
}

pub fn tmsv_json(cfg: &TmsvConfig, report: &TmsvReport) -> String {
    let (n1, n2) = (report.joint.n_bins(Arm::First), report.joint.n_bins(Arm::Second));
    json_string(&TmsvReportDoc {
        schema_version: SCHEMA_VERSION,
        kind: "tmsv_report",
        lambda_sq: cfg.lambda_sq,
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        n_bins1: n1,
        n_bins2: n2,
        expected_total_events: cfg.expected_total_events,
        total_events: report.counts.total_events(),
        n_replicas: cfg.n_replicas,
        seed: cfg.seed,
        joint_clicks: (0..=n1).map(|i| (0..=n2).map(|j| report.joint.get(i, j)).collect()).collect(),
        joint_counts: (0..=n1).map(|i| (0..=n2).map(|j| report.counts.get(i, j)).collect()).collect(),
        condition_fractions_arm1: report.condition_fractions[0].clone(),
        condition_fractions_arm2: report.condition_fractions[1].clone(),
        rows: report
            .rows
            .iter()
            .map(|row| TmsvRowDoc {
                analyzed_arm: row.analyzed.index() as u8,
                conditioning_arm: row.analyzed.other().index() as u8,
                condition: condition_label(row.condition),
                event_fraction: row.event_fraction,
                observed_fraction: row.observed_fraction,
                events: row_events(report, row),
                q_b_exact: row.exact_q_binomial.as_ref().ok().copied(),
                q_binomial: Outcome::new(&row.q_binomial),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clickstat_core::experiments::even_grid;

    #[test]
    fn parallel_runs_match_sequential_core() {
        let cfg = CatalysisSweepConfig { reflectivities: even_grid(6), n_replicas: 100, ..Default::default() };
        let par = run_catalysis_sweep(&cfg).unwrap();
        let seq = clickstat_core::experiments::run_catalysis_sweep(&cfg).unwrap();
        assert_eq!(par, seq);
        let cfg = TmsvConfig { n_replicas: 50, ..Default::default() };
        assert_eq!(run_tmsv(&cfg).unwrap(), clickstat_core::experiments::run_tmsv(&cfg).unwrap());
    }

    #[test]
    fn tables_have_one_row_per_point() {
        let cfg = CatalysisSweepConfig { reflectivities: even_grid(4), n_replicas: 20, ..Default::default() };
        let pts = run_catalysis_sweep(&cfg).unwrap();
        let csv = catalysis_csv(&pts);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == CATALYSIS_HEADER.len()));
        let json: serde_json::Value = serde_json::from_str(&catalysis_json(&cfg, &pts)).unwrap();
        assert_eq!(json["points"].as_array().unwrap().len(), 4);

        let cfg = TmsvConfig { n_replicas: 20, ..Default::default() };
        let rep = run_tmsv(&cfg).unwrap();
        let csv = tmsv_csv(&rep);
        assert_eq!(csv.lines().count(), 1 + rep.rows.len());
        let json: serde_json::Value = serde_json::from_str(&tmsv_json(&cfg, &rep)).unwrap();
        assert_eq!(json["joint_clicks"].as_array().unwrap().len(), 9);
    }
}
