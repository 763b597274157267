use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use clickstat_core::witnesses::witness_from_counts;
use clickstat_core::{
    click_matrix, forward_clicks, invert_clicks, mc_witness, q_binomial, q_fake, q_mandel, q_mandel_from_clicks,
    sample_counts, ClickWitness, InversionMethod, WitnessEstimate,
};

use crate::config::{load_detector, load_photons, read_text, CatalysisDoc, TmsvDoc};
use crate::error::{CliError, Result};
use crate::formats::{
    parse_clicks, write_clicks, write_counts, write_inversion, write_matrix, write_witnesses, ClickData, EstimateDoc,
    Format, WitnessDoc, SCHEMA_VERSION,
};
use crate::runs;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REPLICAS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "clickstat", version, about = "Click statistics of multiplexed photon detectors")]
pub struct Cli {
    /// Base seed for sampling and Monte Carlo errors.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo replicas per estimate.
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// For `catalysis` and `tmsv`: directory receiving a copy of the config
    /// plus the CSV table and JSON report.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Constrained,
    PseudoInverse,
}

impl From<Method> for InversionMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Constrained => InversionMethod::Constrained,
            Method::PseudoInverse => InversionMethod::PseudoInverse,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Click matrix P(clicks | photons) of a detector.
    Matrix {
        /// Detector document or `ideal:N`.
        #[arg(long)]
        det: String,
        #[arg(long)]
        n_max: usize,
    },
    /// Click distribution of a photon distribution.
    Forward {
        /// Photon file or `coherent:μ`, `thermal:μ`, `fock:n`.
        #[arg(long)]
        photons: String,
        #[arg(long)]
        det: String,
    },
    /// Q_B and Q_F (and Q_M with `--invert`) of a click file.
    Witness {
        /// Count file or click distribution file.
        #[arg(long)]
        counts: PathBuf,
        /// Bin count; defaults to the table length minus one.
        #[arg(long)]
        bins: Option<usize>,
        /// Also estimate Q_M through the constrained inversion.
        #[arg(long)]
        invert: bool,
        /// Detector model for the inversion (default `ideal:N`).
        #[arg(long)]
        det: Option<String>,
        /// Largest photon number recovered by the inversion (default N).
        #[arg(long)]
        n_max: Option<usize>,
        /// Include the bootstrap samples in JSON output.
        #[arg(long)]
        samples: bool,
    },
    /// Photon distribution recovered from a click file.
    Invert {
        #[arg(long)]
        clicks: PathBuf,
        #[arg(long)]
        det: String,
        /// Default: the detector's bin count.
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, value_enum, default_value = "constrained")]
        method: Method,
    },
    /// Photon-catalysis sweep over beam-splitter reflectivity.
    Catalysis {
        /// Sweep document; omitted keys take the documented defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Two-mode squeezed vacuum with heralding on click numbers.
    Tmsv {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Poissonian count record drawn from a click distribution.
    Sample {
        #[arg(long)]
        clicks: PathBuf,
        /// Expected number of events.
        #[arg(long)]
        events: f64,
    },
}

/// Parses `args` and runs the command, reporting errors on standard error.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clickstat: error: {}", e.single_line());
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let replicas = cli.replicas.unwrap_or(DEFAULT_REPLICAS);
    let format = |default| cli.format.unwrap_or(default);
    if cli.run_dir.is_some() && !matches!(cli.command, Command::Catalysis { .. } | Command::Tmsv { .. }) {
        return Err(CliError::parse("--run-dir applies to catalysis and tmsv only"));
    }
    let out = match &cli.command {
        Command::Matrix { det, n_max } => {
            write_matrix(&click_matrix(&load_detector(det)?, *n_max), format(Format::Csv))
        }
        Command::Forward { photons, det } => {
            let c = forward_clicks(&load_photons(photons)?, &load_detector(det)?);
            write_clicks(&c, format(Format::Csv))
        }
        Command::Witness { counts, bins, invert, det, n_max, samples } => {
            let data = parse_clicks(&read_text(counts)?)?;
            let n_bins = bins.unwrap_or(data.n_bins());
            if n_bins != data.n_bins() {
                return Err(clickstat_core::Error::InvalidArgument(format!(
                    "--bins {n_bins} does not match a table with {} click values",
                    data.n_bins() + 1
                ))
                .into());
            }
            let inversion = if *invert {
                let det = match det {
                    Some(spec) => load_detector(spec)?,
                    None => clickstat_core::DetectorModel::ideal(n_bins)?,
                };
                Some((det, n_max.unwrap_or(n_bins)))
            } else {
                None
            };
            let doc = witnesses(&data, n_bins, inversion, replicas, seed, *samples)?;
            write_witnesses(&doc, format(Format::Json))
        }
        Command::Invert { clicks, det, n_max, method } => {
            let data = parse_clicks(&read_text(clicks)?)?;
            let det = load_detector(det)?;
            let n_max = n_max.unwrap_or(det.n_bins());
            let rep = invert_clicks(&data.distribution()?, &det, n_max, (*method).into())?;
            write_inversion(&rep, (*method).into(), format(Format::Csv))
        }
        Command::Catalysis { config } => {
            let (text, doc) = match config {
                Some(path) => {
                    let text = read_text(path)?;
                    let doc = CatalysisDoc::parse(&text)?;
                    (text, doc)
                }
                None => (String::new(), CatalysisDoc::default()),
            };
            let mut cfg = doc.build()?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.replicas {
                cfg.n_replicas = r;
            }
            let points = runs::run_catalysis_sweep(&cfg)?;
            let csv = runs::catalysis_csv(&points);
            let json = runs::catalysis_json(&cfg, &points);
            if let Some(dir) = &cli.run_dir {
                write_run_dir(dir, "catalysis.toml", &text, &csv, &json)?;
            }
            match format(Format::Csv) {
                Format::Csv => csv,
                Format::Json => json,
            }
        }
        Command::Tmsv { config } => {
            let (text, doc) = match config {
                Some(path) => {
                    let text = read_text(path)?;
                    let doc = TmsvDoc::parse(&text)?;
                    (text, doc)
                }
                None => (String::new(), TmsvDoc::default()),
            };
            let mut cfg = doc.build()?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.replicas {
                cfg.n_replicas = r;
            }
            let report = runs::run_tmsv(&cfg)?;
            let csv = runs::tmsv_csv(&report);
            let json = runs::tmsv_json(&cfg, &report);
            if let Some(dir) = &cli.run_dir {
                write_run_dir(dir, "tmsv.toml", &text, &csv, &json)?;
            }
            match format(Format::Csv) {
                Format::Csv => csv,
                Format::Json => json,
            }
        }
        Command::Sample { clicks, events } => {
            let c = match parse_clicks(&read_text(clicks)?)? {
                ClickData::Probabilities(c) => c,
                ClickData::Counts(_) => return Err(CliError::parse("sample needs a click distribution, not counts")),
            };
            write_counts(&sample_counts(&c, *events, seed)?, format(Format::Csv))
        }
    };
    emit(cli.output.as_deref(), &out)
}

fn witnesses(
    data: &ClickData,
    n_bins: usize,
    inversion: Option<(clickstat_core::DetectorModel, usize)>,
    replicas: usize,
    seed: u64,
    with_samples: bool,
) -> Result<WitnessDoc> {
    let doc = |e: &WitnessEstimate| EstimateDoc::new(e, with_samples);
    match data {
        ClickData::Counts(r) => {
            let q_b = mc_witness(r, ClickWitness::Binomial, n_bins, replicas, seed)?;
            let q_f = mc_witness(r, ClickWitness::Fake, n_bins, replicas, seed)?;
            let q_m = match inversion {
                Some((det, n_max)) => Some(doc(&q_mandel_from_clicks(r, &det, n_max, replicas, seed)?)),
                None => None,
            };
            // Point values must exist even if every replica were dropped.
            witness_from_counts(r, ClickWitness::Binomial, n_bins)?;
            Ok(WitnessDoc {
                schema_version: SCHEMA_VERSION,
                source: "counts".into(),
                n_bins,
                total_events: Some(r.total_events()),
                q_binomial: doc(&q_b),
                q_fake: doc(&q_f),
                q_mandel: q_m,
            })
        }
        ClickData::Probabilities(c) => {
            let q_m = match inversion {
                Some((det, n_max)) => {
                    let rep = invert_clicks(c, &det, n_max, InversionMethod::Constrained)?;
                    Some(doc(&WitnessEstimate::exact(q_mandel(&rep.distribution()?)?)))
                }
                None => None,
            };
            Ok(WitnessDoc {
                schema_version: SCHEMA_VERSION,
                source: "probabilities".into(),
                n_bins,
                total_events: None,
                q_binomial: doc(&WitnessEstimate::exact(q_binomial(c, n_bins)?)),
                q_fake: doc(&WitnessEstimate::exact(q_fake(c)?)),
                q_mandel: q_m,
            })
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_run_dir(dir: &Path, config_name: &str, config: &str, csv: &str, json: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_file(&dir.join(config_name), config)?;
    write_file(&dir.join("table.csv"), csv)?;
    write_file(&dir.join("report.json"), json)
}

fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        Some(path) => write_file(path, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}
