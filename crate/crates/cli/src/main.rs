use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use svdreg::data::load_csv;
use svdreg::experiment::{
    fit_model, metric_one_minus_r2, run_method_comparison, run_unlabeled_sweep, ExperimentConfig,
};
use svdreg::selftest::run_selftest;
use svdreg::{Error, FittedModel, Method};

#[derive(Parser)]
#[command(
    name = "svdreg",
    version,
    about = "Kernel regression with SVD-domain shrinkage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare methods over random labeled/unlabeled/test splits.
    Experiment(RunArgs),
    /// Deviations of RRO and SBT from RR over a list of unlabeled-set sizes.
    Sweep(RunArgs),
    /// Fit one model on a CSV and write it as JSON.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Run quick numerical checks.
    Selftest,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Target column.
    #[arg(long)]
    target: Option<String>,
    /// Feature columns (default: every numeric non-target column).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Columns never used as features.
    #[arg(long, value_delimiter = ',')]
    exclude: Option<Vec<String>>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    n: Option<usize>,
    /// One size for `experiment`, a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    n_unlab: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_folds: Option<usize>,
    #[arg(long)]
    max_test: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: String,
    /// CSV of extra unlabeled inputs with the same feature columns.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long)]
    k_folds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// If given, report 1 - R² against this column.
    #[arg(long)]
    target: Option<String>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_data_args(config: &mut ExperimentConfig, data: &DataArgs) {
    if let Some(p) = &data.dataset {
        config.dataset.path = Some(p.clone());
    }
    if let Some(t) = &data.target {
        config.dataset.csv.target = t.clone();
    }
    if let Some(f) = &data.features {
        config.dataset.csv.features = Some(f.clone());
    }
    if let Some(e) = &data.exclude {
        config.dataset.csv.exclude = e.clone();
    }
}

fn base_config(path: Option<&Path>) -> svdreg::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_json_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn parse_methods(names: &[String]) -> svdreg::Result<Vec<Method>> {
    names.iter().map(|s| s.parse()).collect()
}

fn build_config(args: &RunArgs, sweep: bool) -> svdreg::Result<ExperimentConfig> {
    let mut config = base_config(args.config.as_deref())?;
    apply_data_args(&mut config, &args.data);
    if let Some(m) = &args.methods {
        config.methods = parse_methods(m)?;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(list) = &args.n_unlab {
        if sweep {
            config.n_unlab_list = list.clone();
        } else if let [single] = list.as_slice() {
            config.n_unlab = *single;
        } else {
            return Err(Error::Config("experiment takes a single --n-unlab".into()));
        }
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    if let Some(k) = args.k_folds {
        config.k_folds = k;
    }
    if args.max_test.is_some() {
        config.max_test = args.max_test;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs, sweep: bool) -> svdreg::Result<()> {
    let config = build_config(args, sweep)?;
    let dataset = config.load_dataset()?;
    log::info!(
        "{} rows, {} features, fingerprint {}",
        dataset.len(),
        dataset.dim(),
        config.fingerprint()
    );
    if sweep {
        let report = run_unlabeled_sweep(&config, &dataset, args.jobs)?;
        report.write(&args.out_dir)?;
        for d in &report.deviation_summary {
            println!(
                "{:>4} n_unlab={:<5} deviation mean={:+.5} std={:.5} (count {})",
                d.method, d.n_unlab, d.mean, d.std, d.count
            );
        }
        report.check_failures()
    } else {
        let report = run_method_comparison(&config, &dataset, args.jobs)?;
        report.write(&args.out_dir)?;
        for s in &report.summary {
            println!(
                "{:>4} 1-R2 mean={:.5} std={:.5} (count {}, failures {})",
                s.method, s.mean, s.std, s.count, s.failures
            );
        }
        report.check_failures()
    }
}

fn fit(args: &FitArgs) -> svdreg::Result<()> {
    let mut config = base_config(args.config.as_deref())?;
    apply_data_args(&mut config, &args.data);
    if let Some(k) = args.k_folds {
        config.k_folds = k;
    }
    let method: Method = args.method.parse()?;
    let path = config
        .dataset
        .path
        .clone()
        .ok_or_else(|| Error::Config("--dataset is required".into()))?;
    let (ds, _) = load_csv(&path, &config.dataset.csv)?;
    let unlabeled = match &args.unlabeled {
        Some(p) => read_features(p, &ds.feature_names)?,
        None => DMatrix::zeros(0, ds.dim()),
    };
    if method.uses_unlabeled() && unlabeled.nrows() == 0 {
        log::warn!("{method} without --unlabeled places centers on labeled inputs only");
    }
    let model = fit_model(
        method,
        &ds.features,
        &ds.targets,
        &unlabeled,
        &config,
        args.seed,
    )?
    .with_feature_names(ds.feature_names.clone());
    let mut text = serde_json::to_string_pretty(&model)?;
    text.push('\n');
    std::fs::write(&args.out, text)?;
    println!(
        "{} fitted on {} rows with {} centers, width {}",
        method,
        ds.len(),
        model.centers.len(),
        model.hyperparams.width
    );
    Ok(())
}

/// Reads the named columns of a CSV; every cell must parse as a number.
fn read_features(path: &Path, names: &[String]) -> svdreg::Result<DMatrix<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h.trim() == n)
                .ok_or_else(|| Error::Data(format!("column {n:?} not found in {}", path.display())))
        })
        .collect::<svdreg::Result<_>>()?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        for &i in &idx {
            let cell = record.get(i).unwrap_or("").trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Data(format!("row {}: bad value {cell:?}", r + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, idx.len(), &values))
}

fn predict(args: &PredictArgs) -> svdreg::Result<()> {
    let text = std::fs::read_to_string(&args.model)?;
    let model: FittedModel = serde_json::from_str(&text)?;
    if model.feature_names.is_empty() {
        return Err(Error::Config("model has no feature names".into()));
    }
    let x = read_features(&args.dataset, &model.feature_names)?;
    let pred = model.predict(&x)?;
    let mut writer: csv::Writer<Box<dyn std::io::Write>> = match &args.out {
        Some(p) => csv::Writer::from_writer(Box::new(std::fs::File::create(p)?)),
        None => csv::Writer::from_writer(Box::new(std::io::stdout())),
    };
    writer.write_record(["prediction"])?;
    for v in pred.iter() {
        writer.write_record([v.to_string()])?;
    }
    writer.flush()?;
    if let Some(t) = &args.target {
        let y = read_features(&args.dataset, std::slice::from_ref(t))?;
        let y = DVector::from_column_slice(y.as_slice());
        eprintln!("1-R2 = {}", metric_one_minus_r2(&y, &pred)?);
    }
    Ok(())
}

fn selftest() -> svdreg::Result<bool> {
    let results = run_selftest();
    for r in &results {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    Ok(results.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Experiment(a) => run(a, false),
        Command::Sweep(a) => run(a, true),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Selftest => selftest().and_then(|ok| {
            if ok {
                Ok(())
            } else {
                Err(Error::Numerical("selftest failed".into()))
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::ExcessiveFailures { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
