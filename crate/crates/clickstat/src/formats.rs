//! File formats.
//!
//! CSV tables always carry a header row:
//!
//! | content               | header                                   |
//! |-----------------------|------------------------------------------|
//! | photon distribution   | `n,probability`                          |
//! | click distribution    | `clicks,probability`                     |
//! | count record          | `clicks,count`                           |
//! | click matrix          | `clicks,n0,n1,…`                         |
//! | witnesses             | `witness,value,std_error,n_replicas,dropped_fraction` |
//!
//! JSON documents are objects with a `schema_version` field. Floats are
//! written in shortest round-trip form, so re-reading a file reproduces the
//! values bit for bit.

use clickstat_core::{
    ClickDistribution, ClickMatrix, CountRecord, InversionMethod, InversionReport, InversionWarning,
    PhotonDistribution, WitnessEstimate,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn float(x: f64) -> String {
    format!("{x:?}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub(crate) fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii output")
}

pub(crate) fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
struct ProbabilityDoc {
    schema_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    counts: Vec<u64>,
}

/// Contents of a click file: either recorded counts or exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum ClickData {
    Counts(CountRecord),
    Probabilities(ClickDistribution),
}

impl ClickData {
    pub fn n_bins(&self) -> usize {
        match self {
            ClickData::Counts(r) => r.n_bins(),
            ClickData::Probabilities(c) => c.n_bins(),
        }
    }

    /// Probabilities, or relative frequencies of counts.
    pub fn distribution(&self) -> Result<ClickDistribution> {
        match self {
            ClickData::Counts(r) => Ok(r.frequencies()?),
            ClickData::Probabilities(c) => Ok(c.clone()),
        }
    }
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn parse_json_doc(text: &str) -> Result<ProbabilityDoc> {
    let doc: ProbabilityDoc = serde_json::from_str(text).map_err(CliError::parse)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::parse(format!("unsupported schema_version {}", doc.schema_version)));
    }
    Ok(doc)
}

/// Reads a two-column CSV whose first column must be `0, 1, 2, …`.
fn parse_indexed_csv(text: &str, index: &str, values: &[&str]) -> Result<(String, Vec<String>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(CliError::parse)?.clone();
    if header.len() != 2 || &header[0] != index || !values.contains(&&header[1]) {
        return Err(CliError::parse(format!(
            "expected CSV header `{index},{}`, found `{}`",
            values.join("` or `"),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(CliError::parse)?;
        let i: usize = rec[0].parse().map_err(|_| CliError::parse(format!("bad {index} value `{}`", &rec[0])))?;
        if i != row {
            return Err(CliError::parse(format!("{index} column must run 0, 1, 2, …; found {i} at row {row}")));
        }
        out.push(rec[1].to_string());
    }
    if out.is_empty() {
        return Err(CliError::parse("table has no rows"));
    }
    Ok((header[1].to_string(), out))
}

fn parse_floats(cells: &[String]) -> Result<Vec<f64>> {
    cells.iter().map(|c| c.parse().map_err(|_| CliError::parse(format!("bad number `{c}`")))).collect()
}

pub fn parse_photons(text: &str) -> Result<PhotonDistribution> {
    if is_json(text) {
        let doc = parse_json_doc(text)?;
        if doc.kind != "photon_distribution" {
            return Err(CliError::parse(format!("expected a photon_distribution document, found `{}`", doc.kind)));
        }
        return Ok(PhotonDistribution::from_probs(doc.probabilities)?);
    }
    let (_, cells) = parse_indexed_csv(text, "n", &["probability"])?;
    Ok(PhotonDistribution::from_probs(parse_floats(&cells)?)?)
}

pub fn parse_clicks(text: &str) -> Result<ClickData> {
    if is_json(text) {
        let doc = parse_json_doc(text)?;
        return match doc.kind.as_str() {
            "click_distribution" => Ok(ClickData::Probabilities(ClickDistribution::from_probs(doc.probabilities)?)),
            "counts" => Ok(ClickData::Counts(CountRecord::new(doc.counts)?)),
            other => Err(CliError::parse(format!("expected click_distribution or counts, found `{other}`"))),
        };
    }
    let (column, cells) = parse_indexed_csv(text, "clicks", &["probability", "count"])?;
    if column == "count" {
        let counts = cells
            .iter()
            .map(|c| c.parse().map_err(|_| CliError::parse(format!("bad count `{c}`"))))
            .collect::<Result<Vec<u64>>>()?;
        Ok(ClickData::Counts(CountRecord::new(counts)?))
    } else {
        Ok(ClickData::Probabilities(ClickDistribution::from_probs(parse_floats(&cells)?)?))
    }
}

fn probability_doc(kind: &str, probabilities: Vec<f64>, counts: Vec<u64>) -> String {
    json_string(&ProbabilityDoc { schema_version: SCHEMA_VERSION, kind: kind.into(), probabilities, counts })
}

pub fn write_photons(p: &PhotonDistribution, format: Format) -> String {
    match format {
        Format::Csv => {
            csv_string(&["n", "probability"], p.probs().iter().enumerate().map(|(n, x)| vec![n.to_string(), float(*x)]))
        }
        Format::Json => probability_doc("photon_distribution", p.probs().to_vec(), Vec::new()),
    }
}

pub fn write_clicks(c: &ClickDistribution, format: Format) -> String {
    match format {
        Format::Csv => csv_string(
            &["clicks", "probability"],
            c.probs().iter().enumerate().map(|(i, x)| vec![i.to_string(), float(*x)]),
        ),
        Format::Json => probability_doc("click_distribution", c.probs().to_vec(), Vec::new()),
    }
}

pub fn write_counts(r: &CountRecord, format: Format) -> String {
    match format {
        Format::Csv => csv_string(
            &["clicks", "count"],
            r.counts().iter().enumerate().map(|(i, x)| vec![i.to_string(), x.to_string()]),
        ),
        Format::Json => probability_doc("counts", Vec::new(), r.counts().to_vec()),
    }
}

#[derive(Serialize)]
struct MatrixDoc<'a> {
    schema_version: u32,
    n_bins: usize,
    n_max: usize,
    /// `matrix[clicks][photons]`.
    matrix: Vec<&'a [f64]>,
}

pub fn write_matrix(l: &ClickMatrix, format: Format) -> String {
    match format {
        Format::Csv => {
            let header: Vec<String> =
                std::iter::once("clicks".to_string()).chain((0..=l.n_max()).map(|n| format!("n{n}"))).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv_string(
                &header,
                (0..=l.n_bins())
                    .map(|i| std::iter::once(i.to_string()).chain(l.row(i).iter().map(|x| float(*x))).collect()),
            )
        }
        Format::Json => json_string(&MatrixDoc {
            schema_version: SCHEMA_VERSION,
            n_bins: l.n_bins(),
            n_max: l.n_max(),
            matrix: (0..=l.n_bins()).map(|i| l.row(i)).collect(),
        }),
    }
}

/// Serialized form of a [`WitnessEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDoc {
    pub value: f64,
    pub std_error: f64,
    pub n_replicas: usize,
    pub dropped_fraction: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<f64>,
}

impl EstimateDoc {
    pub fn new(e: &WitnessEstimate, with_samples: bool) -> Self {
        EstimateDoc {
            value: e.value,
            std_error: e.std_error,
            n_replicas: e.n_replicas,
            dropped_fraction: e.dropped_fraction,
            samples: if with_samples { e.samples.clone() } else { Vec::new() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub schema_version: u32,
    /// `counts` or `probabilities`.
    pub source: String,
    pub n_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_events: Option<u64>,
    #[serde(rename = "Q_B")]
    pub q_binomial: EstimateDoc,
    #[serde(rename = "Q_F")]
    pub q_fake: EstimateDoc,
    #[serde(rename = "Q_M", default, skip_serializing_if = "Option::is_none")]
    pub q_mandel: Option<EstimateDoc>,
}

pub fn write_witnesses(doc: &WitnessDoc, format: Format) -> String {
    match format {
        Format::Json => json_string(doc),
        Format::Csv => {
            let mut rows = vec![("Q_B", &doc.q_binomial), ("Q_F", &doc.q_fake)];
            if let Some(m) = &doc.q_mandel {
                rows.push(("Q_M", m));
            }
            csv_string(
                &["witness", "value", "std_error", "n_replicas", "dropped_fraction"],
                rows.into_iter().map(|(name, e)| {
                    vec![
                        name.to_string(),
                        float(e.value),
                        float(e.std_error),
                        e.n_replicas.to_string(),
                        float(e.dropped_fraction),
                    ]
                }),
            )
        }
    }
}

pub fn method_name(m: InversionMethod) -> &'static str {
    match m {
        InversionMethod::PseudoInverse => "pseudo-inverse",
        InversionMethod::Constrained => "constrained",
    }
}

pub fn warning_name(w: InversionWarning) -> &'static str {
    match w {
        InversionWarning::NegativeEntries => "negative-entries",
        InversionWarning::NotNormalized => "not-normalized",
        InversionWarning::NotConverged => "not-converged",
    }
}

#[derive(Serialize)]
struct InversionDoc<'a> {
    schema_version: u32,
    kind: &'static str,
    method: &'static str,
    n_max: usize,
    condition_number: f64,
    residual_norm: f64,
    warnings: Vec<&'static str>,
    probabilities: &'a [f64],
}

/// CSV output is the recovered distribution alone, in the photon format.
pub fn write_inversion(rep: &InversionReport, method: InversionMethod, format: Format) -> String {
    match format {
        Format::Csv => {
            csv_string(&["n", "probability"], rep.probs.iter().enumerate().map(|(n, x)| vec![n.to_string(), float(*x)]))
        }
        Format::Json => json_string(&InversionDoc {
            schema_version: SCHEMA_VERSION,
            kind: "photon_distribution",
            method: method_name(method),
            n_max: rep.probs.len() - 1,
            condition_number: rep.condition_number,
            residual_norm: rep.residual_norm,
            warnings: rep.warnings.iter().map(|w| warning_name(*w)).collect(),
            probabilities: &rep.probs,
        }),
    }
}

pub(crate) fn estimate_cells(e: &std::result::Result<WitnessEstimate, clickstat_core::Error>) -> [String; 2] {
    match e {
        Ok(e) => [float(e.value), float(e.std_error)],
        Err(_) => [String::new(), String::new()],
    }
}

pub(crate) fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub(crate) fn opt_cell(x: Option<f64>) -> String {
    opt_float(x)
}
