//! Run configuration and the parallel estimation driver behind
//! `qesprob estimate`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::ensemble::{derive_stream, sample_state, EnsembleKind, Measure, SeedSpec};
use crate::error::{Error, Result};
use crate::estimator::{EstimateSummary, EstimatorAccumulator};
use crate::qes::{evaluate_state, WeightScheme};
use crate::report::{BatchRow, SummaryRecord, CSV_HEADER};
use crate::state::Field;

pub const DEFAULT_BATCH_SIZE: u64 = 200_000;
pub const THREADS_ENV: &str = "QESPROB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qesprob",
    version,
    about = "Separability probabilities of random two-qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample states, weight them and estimate the separability probability.
    Estimate(EstimateArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    Hs,
    Bures,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Complex,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    None,
    QesRaw,
    Cross,
    QesEig,
    QesUnitary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum, default_value = "hs")]
    pub ensemble: EnsembleArg,
    #[arg(long, value_enum, default_value = "complex")]
    pub field: FieldArg,
    #[arg(long, value_enum, default_value = "none")]
    pub weight: WeightArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Samples per batch [default: 200000, or --samples if smaller].
    #[arg(long)]
    pub batch_size: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Clip finite weights at this value.
    #[arg(long)]
    pub weight_cap: Option<f64>,
    /// Output file. With `--format both` the extension is replaced by
    /// `.json` and `.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub ensemble: EnsembleKind,
    pub weight: WeightScheme,
    pub samples: u64,
    pub batch_size: u64,
    pub master_seed: u64,
    pub threads: usize,
    pub weight_cap: Option<f64>,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl RunConfig {
    /// In-memory run (no files) with default batch size and all threads.
    pub fn new(
        ensemble: EnsembleKind,
        weight: WeightScheme,
        samples: u64,
        master_seed: u64,
    ) -> Self {
        Self {
            ensemble,
            weight,
            samples,
            batch_size: DEFAULT_BATCH_SIZE.min(samples.max(1)),
            master_seed,
            threads: default_threads(),
            weight_cap: None,
            output_format: OutputFormat::Json,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if self.samples < self.batch_size {
            return Err(Error::InvalidConfig(format!(
                "samples ({}) must be at least the batch size ({})",
                self.samples, self.batch_size
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        if let Some(cap) = self.weight_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "weight cap {cap} must be finite and positive"
                )));
            }
        }
        if self.output_format == OutputFormat::Both && self.output_path.is_none() {
            return Err(Error::InvalidConfig("--format both requires --out".into()));
        }
        self.weight.check_compatible(&self.ensemble)
    }

    pub fn n_chunks(&self) -> u64 {
        self.samples.div_ceil(self.batch_size)
    }

    fn chunk_len(&self, chunk: u64) -> u64 {
        (self.samples - chunk * self.batch_size).min(self.batch_size)
    }

    /// Parses the arguments of the `estimate` subcommand (without the
    /// program or subcommand name) into a validated configuration.
    pub fn from_args<I, T>(args: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let argv = ["qesprob", "estimate"]
            .into_iter()
            .map(OsString::from)
            .chain(args.into_iter().map(Into::into));
        let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        match cli.command {
            Command::Estimate(args) => Self::try_from(args),
            Command::Selftest => unreachable!("subcommand fixed above"),
        }
    }
}

impl TryFrom<EstimateArgs> for RunConfig {
    type Error = Error;

    fn try_from(args: EstimateArgs) -> Result<Self> {
        let measure = match args.ensemble {
            EnsembleArg::Hs => Measure::HilbertSchmidt,
            EnsembleArg::Bures => Measure::Bures,
        };
        let field = match args.field {
            FieldArg::Complex => Field::Complex,
            FieldArg::Real => Field::Real,
        };
        let weight = match args.weight {
            WeightArg::None => WeightScheme::None,
            WeightArg::QesRaw => WeightScheme::QesRaw,
            WeightArg::Cross => WeightScheme::Cross,
            WeightArg::QesEig => WeightScheme::QesEig,
            WeightArg::QesUnitary => WeightScheme::QesUnitary,
        };
        let cfg = RunConfig {
            ensemble: EnsembleKind::two_qubit(measure, field)?,
            weight,
            samples: args.samples,
            batch_size: args
                .batch_size
                .unwrap_or(DEFAULT_BATCH_SIZE.min(args.samples.max(1))),
            master_seed: args.seed,
            threads: args.threads.unwrap_or_else(default_threads),
            weight_cap: args.weight_cap,
            output_format: args.format,
            output_path: args.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Samples and weighs the states of one chunk. Each chunk is one batch.
pub fn run_chunk(cfg: &RunConfig, chunk: u64) -> Result<EstimatorAccumulator> {
    let mut rng = derive_stream(SeedSpec::new(cfg.master_seed, chunk));
    let mut acc = EstimatorAccumulator::new(cfg.batch_size);
    for _ in 0..cfg.chunk_len(chunk) {
        let rho = sample_state(&cfg.ensemble, &mut rng)?;
        let eval = evaluate_state(&rho, &cfg.ensemble, cfg.weight, cfg.weight_cap)?;
        acc.accumulate(&eval.sample);
    }
    acc.close_batch();
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct EstimateRun {
    pub accumulator: EstimatorAccumulator,
    pub summary: EstimateSummary,
}

impl EstimateRun {
    pub fn record(&self, cfg: &RunConfig) -> SummaryRecord {
        SummaryRecord::from_summary(
            cfg.ensemble.measure().as_str(),
            cfg.ensemble.field().as_str(),
            cfg.weight.as_str(),
            cfg.samples,
            cfg.batch_size,
            cfg.master_seed,
            cfg.weight_cap,
            &self.summary,
        )
    }
}

/// Runs every chunk and merges in chunk order, handing each batch row to
/// `on_batch` as soon as its wave of chunks completes. Results do not depend
/// on the thread count.
pub fn run_estimate_with(
    cfg: &RunConfig,
    mut on_batch: impl FnMut(&BatchRow) -> Result<()>,
) -> Result<EstimateRun> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let n_chunks = cfg.n_chunks();
    let wave = (cfg.threads as u64 * 4).max(1);
    let mut total = EstimatorAccumulator::new(cfg.batch_size);
    let mut batch_index = 0u64;

    let mut start = 0;
    while start < n_chunks {
        let end = (start + wave).min(n_chunks);
        let parts: Vec<EstimatorAccumulator> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|chunk| run_chunk(cfg, chunk))
                .collect::<Result<_>>()
        })?;
        for part in parts {
            let batches: Vec<_> = part.batches().copied().collect();
            total = total.merge(part)?;
            let running = total.sum_w_sep / total.sum_w;
            for batch in &batches {
                on_batch(&BatchRow::new(batch_index, batch, running))?;
                batch_index += 1;
            }
        }
        start = end;
    }

    let summary = total.summarize()?;
    Ok(EstimateRun {
        accumulator: total,
        summary,
    })
}

/// In-memory run, no output.
pub fn estimate(cfg: &RunConfig) -> Result<EstimateRun> {
    run_estimate_with(cfg, |_| Ok(()))
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs an estimate and emits the CSV and/or JSON outputs selected by
/// `cfg`. Without an output path the selected document goes to stdout.
pub fn run_estimate(cfg: &RunConfig) -> Result<EstimateRun> {
    cfg.validate()?;
    let (csv_path, json_path) = match (&cfg.output_path, cfg.output_format) {
        (Some(p), OutputFormat::Both) => (
            Some(with_extension(p, "csv")),
            Some(with_extension(p, "json")),
        ),
        (Some(p), OutputFormat::Csv) => (Some(p.clone()), None),
        (Some(p), OutputFormat::Json) => (None, Some(p.clone())),
        (None, _) => (None, None),
    };

    let mut csv: Option<Box<dyn Write>> = match (&csv_path, cfg.output_format) {
        (Some(p), _) => Some(Box::new(create(p)?)),
        (None, OutputFormat::Csv) => Some(Box::new(io::stdout().lock())),
        _ => None,
    };
    if let Some(w) = csv.as_mut() {
        writeln!(w, "{CSV_HEADER}")?;
    }
    let run = run_estimate_with(cfg, |row| {
        if let Some(w) = csv.as_mut() {
            writeln!(w, "{}", row.to_csv_line())?;
            w.flush()?;
        }
        Ok(())
    })?;
    drop(csv);

    let json = run.record(cfg).to_json();
    match (&json_path, cfg.output_format) {
        (Some(p), _) => {
            let mut w = create(p)?;
            writeln!(w, "{json}")?;
            w.flush()?;
        }
        (None, OutputFormat::Json) => println!("{json}"),
        _ => {}
    }
    Ok(run)
}
