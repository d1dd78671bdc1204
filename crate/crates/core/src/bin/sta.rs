//! `sta`: train forests, run attack campaigns, sweep temperatures and dump
//! decision surfaces from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sta_core::ensemble::{load_model, save_model, Ensemble};
use sta_core::harness::{
    dump_surface, emit_report, emit_sweep, load_csv, run_campaign, synthetic, temperature_sweep,
    threshold_bounds, write_output, AttackKind, CampaignConfig, Dataset, LabelColumn, LabelKind,
    Labels, ModelSource, ReportFormat, Surface, DEFAULT_TEMPERATURE_GRID,
};
use sta_core::smoothing::{FeatureScales, SmoothedEnsemble};
use sta_core::trainer::{train_random_forest, TrainConfig};
use sta_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sta",
    version,
    about = "Adversarial robustness testing for tree ensembles"
)]
struct Cli {
    /// Worker threads (default: available parallelism). STA_THREADS wins if set.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a random forest on a CSV file and save it as JSON.
    Train(TrainArgs),
    /// Run a cross-validated attack campaign.
    Attack(AttackArgs),
    /// Repeat the campaign over a grid of smoothing temperatures.
    SweepTau(SweepArgs),
    /// Dump a two-feature grid of model scores as CSV.
    Surface(SurfaceArgs),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticKind {
    Clusters,
    Moons,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: SyntheticKind,
    #[arg(long, default_value_t = 500)]
    rows: usize,
    /// Feature count (clusters only).
    #[arg(long, default_value_t = 100)]
    features: usize,
    /// Per-axis class separation (clusters) or jitter (moons).
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Numeric CSV file.
    #[arg(long)]
    data: PathBuf,
    /// Label column name, or 0-based index.
    #[arg(long, default_value = "label")]
    label: String,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
    /// Treat labels as real values instead of class indices.
    #[arg(long)]
    regression: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let kind = if self.regression {
            LabelKind::Value
        } else {
            LabelKind::Class
        };
        let ds = load_csv(
            &self.data,
            &LabelColumn::parse(&self.label),
            !self.no_header,
            kind,
        )?;
        log::info!(
            "{}: {} rows, {} features",
            ds.source_path,
            ds.n_rows(),
            ds.n_features()
        );
        for s in ds.summary() {
            log::info!(
                "  {}: min {} max {} sigma {}",
                s.name,
                s.min,
                s.max,
                s.sigma
            );
        }
        Ok(ds)
    }
}

#[derive(Args)]
struct ForestArgs {
    /// Trees per forest.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Maximum tree depth.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Fraction of features tried per split (default: sqrt(d) features).
    #[arg(long)]
    max_features: Option<f64>,
    /// Grow every tree on the full training set.
    #[arg(long)]
    no_bootstrap: bool,
}

impl ForestArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            n_estimators: self.trees,
            max_depth: self.depth,
            bootstrap: !self.no_bootstrap,
            feature_subsample: self.max_features,
            seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Md => ReportFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Attack a saved model instead of training one per fold.
    #[arg(long)]
    model: Option<PathBuf>,
    /// With --model: CSV used to fit feature scales and ECDFs. Without it the
    /// complement folds are used.
    #[arg(long, requires = "model")]
    fit_data: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    /// Attacks to run, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "sta-exhaustive,sta-sampled,random,nes"
    )]
    attack: Vec<String>,
    /// Quantile-ball radii, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,0.8")]
    epsilon: Vec<f64>,
    /// Noise standard deviation (relative).
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Gradient step size.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Iterations per STA and NES run.
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, value_enum, default_value = "on")]
    noise: Toggle,
    /// Paths per tree for sta-sampled.
    #[arg(long, default_value_t = 1)]
    samples: usize,
    /// Candidates for the random baseline (default: --iters).
    #[arg(long)]
    random_budget: Option<usize>,
    /// Antithetic pairs per NES gradient estimate.
    #[arg(long, default_value_t = 25)]
    nes_samples: usize,
    /// NES search radius in quantile units.
    #[arg(long, default_value_t = 0.01)]
    nes_sigma: f64,
    /// NES per-coordinate quantile step.
    #[arg(long, default_value_t = 0.02)]
    nes_step: f64,
    /// Regression success threshold on the prediction shift.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Keep iterating after the first violating iterate.
    #[arg(long)]
    no_early_stop: bool,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Omit wall-clock and timestamp fields so reports are byte-stable.
    #[arg(long)]
    no_timing: bool,
}

impl CampaignArgs {
    fn config(&self, temperature: f64) -> Result<CampaignConfig> {
        let attacks = self
            .attack
            .iter()
            .map(|a| AttackKind::parse(a.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(CampaignConfig {
            attacks,
            epsilons: self.epsilon.clone(),
            folds: self.folds,
            seed: self.seed,
            delta: self.delta,
            max_iters: self.iters,
            step_size: self.step,
            noise_level: self.lambda,
            temperature,
            noise: matches!(self.noise, Toggle::On),
            sampled_paths: self.samples,
            random_budget: self.random_budget,
            nes_samples: self.nes_samples,
            nes_sigma: self.nes_sigma,
            nes_step: self.nes_step,
            early_stop: !self.no_early_stop,
            train: self.forest.config(self.seed),
        })
    }

    /// Loads the model and optional fit data; `None` means train per fold.
    fn external(&self) -> Result<Option<(Ensemble, Option<Dataset>)>> {
        let Some(path) = &self.model else {
            return Ok(None);
        };
        let model = read_model(path)?;
        let fit = match &self.fit_data {
            Some(p) => {
                let args = DataArgs {
                    data: p.clone(),
                    label: self.data.label.clone(),
                    no_header: self.data.no_header,
                    regression: self.data.regression,
                };
                Some(args.load()?)
            }
            None => None,
        };
        Ok(Some((model, fit)))
    }

    fn write(&self, contents: &str) -> Result<()> {
        match &self.report {
            Some(p) => write_output(p, contents),
            None => {
                print!("{contents}");
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Smoothing temperature.
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Temperatures to try, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TEMPERATURE_GRID)]
    grid: Vec<f64>,
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long)]
    model: PathBuf,
    /// First feature index (rows of the grid).
    #[arg(long)]
    fx: usize,
    /// Second feature index.
    #[arg(long)]
    fy: usize,
    /// Comma-separated values for every feature; fx and fy are overwritten.
    #[arg(long)]
    anchor: String,
    /// Grid points per axis.
    #[arg(long, default_value_t = 50)]
    res: usize,
    /// Smooth the model at this temperature; omit for the hard model.
    #[arg(long)]
    tau: Option<f64>,
    /// CSV to take feature scales from when smoothing (default: all ones).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label: String,
    /// Range for fx as LO,HI (default: threshold span).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    xlim: Option<Vec<f64>>,
    /// Range for fy as LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    ylim: Option<Vec<f64>>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_model(path: &Path) -> Result<Ensemble> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    load_model(&bytes)
}

fn train(args: &TrainArgs) -> Result<()> {
    let ds = args.data.load()?;
    let Labels::Classes(labels) = &ds.labels else {
        return Err(Error::Config("train supports class labels only".into()));
    };
    let n_classes = ds.labels.n_classes().unwrap_or(2);
    let mut model = train_random_forest(
        &ds.features,
        labels,
        n_classes,
        &args.forest.config(args.seed),
    )?;
    model = model.with_feature_names(ds.feature_names.clone())?;
    write_output(
        &args.out,
        &String::from_utf8(save_model(&model)).expect("utf-8"),
    )?;
    let correct = ds
        .features
        .iter()
        .zip(labels)
        .filter(|(x, &y)| {
            model
                .predict(x)
                .map(|p| p.decision.class() == Some(y))
                .unwrap_or(false)
        })
        .count();
    log::info!(
        "training accuracy {:.2}%",
        100.0 * correct as f64 / ds.n_rows() as f64
    );
    Ok(())
}

fn attack(args: &AttackArgs) -> Result<()> {
    let c = &args.campaign;
    let ds = c.data.load()?;
    let config = c.config(args.tau)?;
    let external = c.external()?;
    let source = match &external {
        Some((model, fit)) => ModelSource::Fixed {
            model,
            fit_data: fit.as_ref(),
        },
        None => ModelSource::Train,
    };
    let mut report = run_campaign(source, &ds, &config)?;
    if c.no_timing {
        report = report.without_volatile();
    }
    c.write(&emit_report(&report, c.format.into()))
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let c = &args.campaign;
    let ds = c.data.load()?;
    let config = c.config(args.grid.first().copied().unwrap_or(0.1))?;
    let external = c.external()?;
    let source = match &external {
        Some((model, fit)) => ModelSource::Fixed {
            model,
            fit_data: fit.as_ref(),
        },
        None => ModelSource::Train,
    };
    let report = temperature_sweep(source, &ds, &args.grid, &config)?;
    log::info!("recommended temperature {}", report.best_temperature);
    c.write(&emit_sweep(&report, c.format.into()))
}

fn surface(args: &SurfaceArgs) -> Result<()> {
    let model = read_model(&args.model)?;
    let anchor: Vec<f64> = args
        .anchor
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("anchor value {s:?} is not a number")))
        })
        .collect::<Result<_>>()?;
    if anchor.len() != model.n_features() {
        return Err(Error::Config(format!(
            "anchor has {} values, model expects {}",
            anchor.len(),
            model.n_features()
        )));
    }
    if args.fx >= anchor.len() || args.fy >= anchor.len() {
        return Err(Error::Config(format!(
            "feature index out of range for {} features",
            anchor.len()
        )));
    }
    let lim = |given: &Option<Vec<f64>>, f: usize| match given {
        Some(v) => (v[0], v[1]),
        None => threshold_bounds(&model, f, anchor[f]),
    };
    let bx = lim(&args.xlim, args.fx);
    let by = lim(&args.ylim, args.fy);
    let grid = match args.tau {
        None => dump_surface(
            Surface::Hard(&model),
            args.fx,
            args.fy,
            &anchor,
            bx,
            by,
            args.res,
        )?,
        Some(tau) => {
            let scales = match &args.data {
                Some(p) => {
                    let ds = load_csv(p, &LabelColumn::parse(&args.label), true, LabelKind::Class)
                        .or_else(|_| {
                            load_csv(p, &LabelColumn::parse(&args.label), true, LabelKind::Value)
                        })?;
                    FeatureScales::from_rows(&ds.features, ds.n_features())?
                }
                None => FeatureScales::uniform(model.n_features(), 1.0)?,
            };
            let smoothed = SmoothedEnsemble::new(&model, scales, tau)?;
            dump_surface(
                Surface::Smoothed(&smoothed),
                args.fx,
                args.fy,
                &anchor,
                bx,
                by,
                args.res,
            )?
        }
    };
    let csv = grid.to_csv();
    match &args.out {
        Some(p) => write_output(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    if args.rows < 2 || args.features == 0 {
        return Err(Error::Config("need at least 2 rows and 1 feature".into()));
    }
    let ds = match args.kind {
        SyntheticKind::Clusters => synthetic::clusters(
            args.rows,
            args.features,
            args.spread.unwrap_or(1.5),
            args.seed,
        ),
        SyntheticKind::Moons => {
            synthetic::half_moons(args.rows, args.spread.unwrap_or(0.15), args.seed)
        }
    };
    write_output(&args.out, &ds.to_csv())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("STA_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("STA_THREADS={v:?} is not a thread count"))),
        _ => Ok(flag),
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Attack(a) => attack(a),
        Command::SweepTau(a) => sweep(a),
        Command::Surface(a) => surface(a),
        Command::Generate(a) => generate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
