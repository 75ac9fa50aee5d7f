//! End-to-end trial protocol: split, normalize, select hyper-parameters by
//! cross validation, refit on all labeled rows, and score on the test rows.
//!
//! Every number written by this module is a deterministic function of the
//! [`ExperimentConfig`] and the dataset. Wall-clock timings are kept in a
//! separate file (`timings.csv`) so the result tables stay byte-identical
//! across runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{split_trial, CsvSpec, Dataset, TestPolicy, TrialSplit};
use crate::error::{Error, Result};
use crate::estimators::{
    FitSettings, FittedModel, Hyperparams, Method, DEFAULT_GAMMA, DEFAULT_STABILIZER,
};
use crate::kernels::{CenterSet, KernelConfig, NormalizationParams, NormalizationScope};
use crate::model_selection::{select_and_fit, CvConfig, Grid, SelectionConfig};

/// Test error `MSE(y_pred) / MSE(mean(y_true))`, i.e. 1 − R².
pub fn metric_one_minus_r2(y_true: &DVector<f64>, y_pred: &DVector<f64>) -> Result<f64> {
    crate::error::ensure_len("predictions", y_true.len(), y_pred.len())?;
    if y_true.len() < 2 {
        return Err(Error::UndefinedMetric(
            "need at least 2 test outputs".into(),
        ));
    }
    let m = y_true.len() as f64;
    let mean = y_true.mean();
    let baseline = y_true.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    if baseline == 0.0 {
        return Err(Error::UndefinedMetric("test outputs are constant".into()));
    }
    let mse = y_true
        .iter()
        .zip(y_pred.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / m;
    Ok(mse / baseline)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    #[serde(flatten)]
    pub csv: CsvSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: None,
            csv: CsvSpec {
                target: "y".into(),
                ..Default::default()
            },
        }
    }
}

/// Candidate grids. Ridge parameters are `multiplier · n` when
/// `ridge_scale_by_n` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub ridge_multipliers: Vec<f64>,
    pub ridge_scale_by_n: bool,
    pub ridge_widths: Vec<f64>,
    pub svd_widths: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            ridge_multipliers: Grid::default_ridge_params(1),
            ridge_scale_by_n: true,
            ridge_widths: Grid::default_ridge_widths(),
            svd_widths: Grid::default_svd_widths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub methods: Vec<Method>,
    pub n: usize,
    pub n_unlab: usize,
    /// Unlabeled-set sizes for the sweep.
    pub n_unlab_list: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub grids: GridConfig,
    pub k_folds: usize,
    pub k_max_ratio: (usize, usize),
    pub gamma: u32,
    pub variance_stabilizer: f64,
    pub max_test: Option<usize>,
    pub normalization: NormalizationScope,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            methods: Method::ALL.to_vec(),
            n: 200,
            n_unlab: 100,
            n_unlab_list: vec![10, 20, 50, 100, 200],
            trials: 50,
            base_seed: 0,
            grids: GridConfig::default(),
            k_folds: 10,
            k_max_ratio: (2, 3),
            gamma: DEFAULT_GAMMA,
            variance_stabilizer: DEFAULT_STABILIZER,
            max_test: None,
            normalization: NormalizationScope::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        if self.n < 2 || self.k_folds < 2 || self.k_folds > self.n {
            return Err(Error::Config(format!(
                "need n ≥ 2 and 2 ≤ k_folds ≤ n, got n = {}, k_folds = {}",
                self.n, self.k_folds
            )));
        }
        if self.gamma.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "gamma must be odd, got {}",
                self.gamma
            )));
        }
        if self.variance_stabilizer.is_nan() || self.variance_stabilizer <= 0.0 {
            return Err(Error::Config("variance_stabilizer must be positive".into()));
        }
        if self.k_max_ratio.1 == 0 {
            return Err(Error::Config(
                "k_max_ratio denominator must be positive".into(),
            ));
        }
        let g = &self.grids;
        if g.ridge_multipliers.is_empty() || g.ridge_widths.is_empty() || g.svd_widths.is_empty() {
            return Err(Error::Config("grids must be non-empty".into()));
        }
        Ok(())
    }

    /// Short hash of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// Selection settings for `n` labeled rows with folds drawn from `cv_seed`.
    pub fn selection(&self, n: usize, cv_seed: u64) -> SelectionConfig {
        let cv = CvConfig {
            k_folds: self.k_folds,
            seed: cv_seed,
            k_max_ratio: self.k_max_ratio,
        };
        let scale = if self.grids.ridge_scale_by_n {
            n as f64
        } else {
            1.0
        };
        SelectionConfig {
            ridge_grid: Grid {
                ridge_params: self
                    .grids
                    .ridge_multipliers
                    .iter()
                    .map(|m| m * scale)
                    .collect(),
                widths: self.grids.ridge_widths.clone(),
                k_max: 0,
            },
            svd_grid: Grid {
                ridge_params: Vec::new(),
                widths: self.grids.svd_widths.clone(),
                k_max: cv.k_max(n),
            },
            cv,
            settings: FitSettings {
                gamma: self.gamma,
                stabilizer: self.variance_stabilizer,
            },
        }
    }

    pub fn test_policy(&self) -> TestPolicy {
        TestPolicy {
            max_test: self.max_test,
        }
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed + trial as u64
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let path = self
            .dataset
            .path
            .as_ref()
            .ok_or_else(|| Error::Config("no dataset path given".into()))?;
        Ok(crate::data::load_csv(path, &self.dataset.csv)?.0)
    }
}

/// One method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    pub n: usize,
    pub n_unlab: usize,
    pub one_minus_r2: f64,
    pub tau: f64,
    /// `lambda`, `k` or `theta`.
    pub param_kind: String,
    pub param_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub method: Method,
    pub n_unlab: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub trial: usize,
    pub method: Method,
    pub n_unlab: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_unlab: usize,
    pub count: usize,
    pub failures: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single trial.
    pub std: f64,
}

/// Mean and sample standard deviation; std is 0 below two values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Default)]
struct TrialOutcome {
    records: Vec<TrialRecord>,
    failures: Vec<FailureRecord>,
    timings: Vec<TimingRecord>,
}

fn param_of(method: Method, h: &Hyperparams) -> (&'static str, f64) {
    match method {
        Method::Rr | Method::Rro => ("lambda", h.ridge_param.unwrap_or(f64::NAN)),
        Method::Ssv | Method::Sht => ("k", h.components.map_or(f64::NAN, |k| k as f64)),
        Method::Sut | Method::Sbt => ("theta", h.theta.unwrap_or(f64::NAN)),
    }
}

/// Normalizes, selects hyper-parameters by cross validation and refits on
/// all labeled rows. RR never reads `unlabeled_x`, not even for normalization.
pub fn fit_model(
    method: Method,
    labeled_x: &DMatrix<f64>,
    labeled_y: &DVector<f64>,
    unlabeled_x: &DMatrix<f64>,
    config: &ExperimentConfig,
    cv_seed: u64,
) -> Result<FittedModel> {
    let norm = if method == Method::Rr || config.normalization == NormalizationScope::LabeledOnly {
        NormalizationParams::fit(labeled_x)?
    } else {
        crate::error::ensure_len("unlabeled columns", labeled_x.ncols(), unlabeled_x.ncols())?;
        let (n, m) = (labeled_x.nrows(), unlabeled_x.nrows());
        let mut pooled = labeled_x.clone().resize_vertically(n + m, 0.0);
        pooled.rows_mut(n, m).copy_from(unlabeled_x);
        NormalizationParams::fit(&pooled)?
    };
    let x = norm.apply(labeled_x)?;
    let centers = if method == Method::Rr {
        CenterSet::new(x.clone(), x.nrows())?
    } else {
        CenterSet::from_parts(&x, &norm.apply(unlabeled_x)?)?
    };
    let selection = config.selection(x.nrows(), cv_seed);
    let (beta, hyper, _, centers) = select_and_fit(method, &x, labeled_y, &centers, &selection)?;
    let kernel = KernelConfig::new(hyper.width)?;
    FittedModel::new(method, beta, centers, kernel, norm, hyper)
}

/// Fits one method on a trial split; returns the model and its test error.
pub fn fit_on_split(
    method: Method,
    split: &TrialSplit,
    config: &ExperimentConfig,
    feature_names: &[String],
) -> Result<(FittedModel, f64)> {
    let model = fit_model(
        method,
        &split.labeled_x,
        &split.labeled_y,
        &split.unlabeled_x,
        config,
        split.seed,
    )?
    .with_feature_names(feature_names.to_vec());
    let pred = model.predict(&split.test_x)?;
    let err = metric_one_minus_r2(&split.test_y, &pred)?;
    if !err.is_finite() {
        return Err(Error::Numerical(format!("{method}: non-finite test error")));
    }
    Ok((model, err))
}

fn run_trial(
    dataset: &Dataset,
    config: &ExperimentConfig,
    methods: &[Method],
    trial: usize,
    n_unlab: usize,
) -> TrialOutcome {
    let mut out = TrialOutcome::default();
    let seed = config.trial_seed(trial);
    let split = match split_trial(dataset, config.n, n_unlab, config.test_policy(), seed) {
        Ok(s) => s,
        Err(e) => {
            for &method in methods {
                out.failures.push(FailureRecord {
                    trial,
                    method,
                    n_unlab,
                    error: e.to_string(),
                });
            }
            return out;
        }
    };
    for &method in methods {
        let start = Instant::now();
        let result = fit_on_split(method, &split, config, &dataset.feature_names);
        out.timings.push(TimingRecord {
            trial,
            method,
            n_unlab,
            seconds: start.elapsed().as_secs_f64(),
        });
        match result {
            Ok((model, err)) => {
                let (kind, value) = param_of(method, &model.hyperparams);
                out.records.push(TrialRecord {
                    trial,
                    method,
                    n: config.n,
                    n_unlab,
                    one_minus_r2: err,
                    tau: model.hyperparams.width,
                    param_kind: kind.to_string(),
                    param_value: value,
                });
            }
            Err(e) => {
                log::warn!("trial {trial}, {method}, n_unlab = {n_unlab}: {e}");
                out.failures.push(FailureRecord {
                    trial,
                    method,
                    n_unlab,
                    error: e.to_string(),
                });
            }
        }
    }
    out
}

fn run_grid(
    dataset: &Dataset,
    config: &ExperimentConfig,
    methods: &[Method],
    n_unlabs: &[usize],
    jobs: usize,
) -> Result<TrialOutcome> {
    // A size the dataset cannot supply fails every trial the same way.
    for &u in n_unlabs {
        if config.n + u >= dataset.len() {
            return Err(Error::Config(format!(
                "{} rows cannot supply {} labeled + {u} unlabeled rows and a test set",
                dataset.len(),
                config.n
            )));
        }
    }
    let cells: Vec<(usize, usize)> = n_unlabs
        .iter()
        .flat_map(|&u| (0..config.trials).map(move |t| (u, t)))
        .collect();
    let work = || -> Vec<TrialOutcome> {
        cells
            .par_iter()
            .map(|&(u, t)| run_trial(dataset, config, methods, t, u))
            .collect()
    };
    let outcomes = if jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)
    };
    let mut all = TrialOutcome::default();
    for o in outcomes {
        all.records.extend(o.records);
        all.failures.extend(o.failures);
        all.timings.extend(o.timings);
    }
    Ok(all)
}

fn summarize(
    records: &[TrialRecord],
    failures: &[FailureRecord],
    methods: &[Method],
    n_unlabs: &[usize],
) -> Vec<MethodSummary> {
    let mut out = Vec::new();
    for &u in n_unlabs {
        for &method in methods {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.n_unlab == u)
                .map(|r| r.one_minus_r2)
                .collect();
            let (mean, std) = mean_std(&vals);
            out.push(MethodSummary {
                method,
                n_unlab: u,
                count: vals.len(),
                failures: failures
                    .iter()
                    .filter(|f| f.method == method && f.n_unlab == u)
                    .count(),
                mean,
                std,
            });
        }
    }
    out
}

/// Choices the protocol makes that are not visible in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset_rows: usize,
    pub dataset_features: Vec<String>,
    pub target: String,
    pub normalization: String,
    pub test_set: String,
    pub cv_seed: String,
    pub std: String,
}

impl RunMetadata {
    fn new(dataset: &Dataset, config: &ExperimentConfig) -> Self {
        RunMetadata {
            dataset_rows: dataset.len(),
            dataset_features: dataset.feature_names.clone(),
            target: dataset.target_name.clone(),
            normalization: format!(
                "z-score, population sd, scope {:?}; RR always uses labeled inputs only",
                config.normalization
            ),
            test_set: match config.max_test {
                Some(m) => format!("remaining rows after labeled+unlabeled draw, capped at {m}"),
                None => "all remaining rows after labeled+unlabeled draw".into(),
            },
            cv_seed: "folds seeded with base_seed + trial, shared by all methods".into(),
            std: "sample standard deviation (n-1), 0 for a single trial".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fingerprint: String,
    pub config: ExperimentConfig,
    pub metadata: RunMetadata,
    pub summary: Vec<MethodSummary>,
    pub failures: Vec<FailureRecord>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub timings: Vec<TimingRecord>,
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed * 10 > total {
        Err(Error::ExcessiveFailures { failed, total })
    } else {
        Ok(())
    }
}

impl ComparisonReport {
    /// Errors when more than 10% of method/trial fits failed.
    pub fn check_failures(&self) -> Result<()> {
        check_failures(
            self.failures.len(),
            self.config.trials * self.config.methods.len(),
        )
    }
}

/// Runs every configured method on `trials` random splits.
/// `jobs = 0` uses the global thread pool.
pub fn run_method_comparison(
    config: &ExperimentConfig,
    dataset: &Dataset,
    jobs: usize,
) -> Result<ComparisonReport> {
    config.validate()?;
    let n_unlabs = [config.n_unlab];
    let out = run_grid(dataset, config, &config.methods, &n_unlabs, jobs)?;
    Ok(ComparisonReport {
        fingerprint: config.fingerprint(),
        config: config.clone(),
        metadata: RunMetadata::new(dataset, config),
        summary: summarize(&out.records, &out.failures, &config.methods, &n_unlabs),
        failures: out.failures,
        records: out.records,
        timings: out.timings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub trial: usize,
    pub n_unlab: usize,
    pub method: Method,
    /// `error(method) − error(RR)` on the same split.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub method: Method,
    pub n_unlab: usize,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub fingerprint: String,
    pub config: ExperimentConfig,
    pub metadata: RunMetadata,
    pub deviation_summary: Vec<DeviationSummary>,
    pub method_summary: Vec<MethodSummary>,
    pub failures: Vec<FailureRecord>,
    #[serde(skip)]
    pub deviations: Vec<DeviationRecord>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub timings: Vec<TimingRecord>,
}

impl SweepReport {
    pub fn methods(&self) -> Vec<Method> {
        sweep_methods(&self.config.methods)
    }

    pub fn check_failures(&self) -> Result<()> {
        check_failures(
            self.failures.len(),
            self.config.trials * self.config.n_unlab_list.len() * self.methods().len(),
        )
    }

    pub fn deviation(&self, method: Method, n_unlab: usize) -> Option<&DeviationSummary> {
        self.deviation_summary
            .iter()
            .find(|d| d.method == method && d.n_unlab == n_unlab)
    }
}

fn sweep_methods(methods: &[Method]) -> Vec<Method> {
    [Method::Rr, Method::Rro, Method::Sbt]
        .into_iter()
        .filter(|m| methods.contains(m))
        .collect()
}

/// Deviations of RRO and SBT from RR for each unlabeled-set size.
///
/// For a given trial the labeled rows are the same at every `n_unlab`, since
/// the split takes the first n entries of one seeded permutation.
pub fn run_unlabeled_sweep(
    config: &ExperimentConfig,
    dataset: &Dataset,
    jobs: usize,
) -> Result<SweepReport> {
    config.validate()?;
    let methods = sweep_methods(&config.methods);
    if !methods.contains(&Method::Rr) || methods.len() < 2 {
        return Err(Error::Config(
            "sweep needs RR and at least one of RRO, SBT".into(),
        ));
    }
    if config.n_unlab_list.is_empty() {
        return Err(Error::Config("n_unlab_list is empty".into()));
    }
    let out = run_grid(dataset, config, &methods, &config.n_unlab_list, jobs)?;

    let mut deviations = Vec::new();
    for &u in &config.n_unlab_list {
        for t in 0..config.trials {
            let find = |m: Method| {
                out.records
                    .iter()
                    .find(|r| r.trial == t && r.n_unlab == u && r.method == m)
                    .map(|r| r.one_minus_r2)
            };
            let Some(base) = find(Method::Rr) else {
                continue;
            };
            for &m in methods.iter().filter(|m| **m != Method::Rr) {
                if let Some(e) = find(m) {
                    deviations.push(DeviationRecord {
                        trial: t,
                        n_unlab: u,
                        method: m,
                        deviation: e - base,
                    });
                }
            }
        }
    }
    let mut deviation_summary = Vec::new();
    for &u in &config.n_unlab_list {
        for &m in methods.iter().filter(|m| **m != Method::Rr) {
            let vals: Vec<f64> = deviations
                .iter()
                .filter(|d| d.method == m && d.n_unlab == u)
                .map(|d| d.deviation)
                .collect();
            let (mean, std) = mean_std(&vals);
            deviation_summary.push(DeviationSummary {
                method: m,
                n_unlab: u,
                count: vals.len(),
                mean,
                std,
            });
        }
    }
    Ok(SweepReport {
        fingerprint: config.fingerprint(),
        config: config.clone(),
        metadata: RunMetadata::new(dataset, config),
        method_summary: summarize(&out.records, &out.failures, &methods, &config.n_unlab_list),
        deviation_summary,
        failures: out.failures,
        deviations,
        records: out.records,
        timings: out.timings,
    })
}

pub const TRIALS_FILE: &str = "trials.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DEVIATIONS_FILE: &str = "deviations.csv";
pub const SUMMARY_CSV_FILE: &str = "summary.csv";
pub const DEVIATION_SUMMARY_FILE: &str = "deviation_summary.csv";

fn write_summary_csv(path: &Path, fingerprint: &str, summary: &[MethodSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "config_fingerprint",
        "method",
        "n_unlab",
        "count",
        "failures",
        "mean",
        "std",
    ])?;
    for s in summary {
        w.write_record([
            fingerprint.to_string(),
            s.method.to_string(),
            s.n_unlab.to_string(),
            s.count.to_string(),
            s.failures.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_trials(path: &Path, fingerprint: &str, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "config_fingerprint",
        "trial",
        "method",
        "n",
        "n_unlab",
        "one_minus_r2",
        "tau",
        "param_kind",
        "param_value",
    ])?;
    for r in records {
        w.write_record([
            fingerprint.to_string(),
            r.trial.to_string(),
            r.method.to_string(),
            r.n.to_string(),
            r.n_unlab.to_string(),
            r.one_minus_r2.to_string(),
            r.tau.to_string(),
            r.param_kind.clone(),
            r.param_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_timings(path: &Path, fingerprint: &str, timings: &[TimingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "config_fingerprint",
        "trial",
        "method",
        "n_unlab",
        "seconds",
    ])?;
    for t in timings {
        w.write_record([
            fingerprint.to_string(),
            t.trial.to_string(),
            t.method.to_string(),
            t.n_unlab.to_string(),
            format!("{:.6}", t.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_failures(path: &Path, fingerprint: &str, failures: &[FailureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["config_fingerprint", "trial", "method", "n_unlab", "error"])?;
    for f in failures {
        w.write_record([
            fingerprint.to_string(),
            f.trial.to_string(),
            f.method.to_string(),
            f.n_unlab.to_string(),
            f.error.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

impl ComparisonReport {
    /// Writes `trials.csv`, `timings.csv`, `failures.csv` and `summary.json`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<()> {
        let dir = out_dir.as_ref();
        fs::create_dir_all(dir)?;
        write_trials(&dir.join(TRIALS_FILE), &self.fingerprint, &self.records)?;
        write_timings(&dir.join(TIMINGS_FILE), &self.fingerprint, &self.timings)?;
        write_failures(&dir.join(FAILURES_FILE), &self.fingerprint, &self.failures)?;
        write_summary_csv(
            &dir.join(SUMMARY_CSV_FILE),
            &self.fingerprint,
            &self.summary,
        )?;
        write_json(&dir.join(SUMMARY_FILE), self)
    }
}

impl SweepReport {
    /// Writes the per-trial tables, `deviations.csv` and `summary.json`.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<()> {
        let dir = out_dir.as_ref();
        fs::create_dir_all(dir)?;
        write_trials(&dir.join(TRIALS_FILE), &self.fingerprint, &self.records)?;
        write_timings(&dir.join(TIMINGS_FILE), &self.fingerprint, &self.timings)?;
        write_failures(&dir.join(FAILURES_FILE), &self.fingerprint, &self.failures)?;
        let mut w = csv::Writer::from_path(dir.join(DEVIATIONS_FILE))?;
        w.write_record([
            "config_fingerprint",
            "trial",
            "n_unlab",
            "method",
            "deviation",
        ])?;
        for d in &self.deviations {
            w.write_record([
                self.fingerprint.clone(),
                d.trial.to_string(),
                d.n_unlab.to_string(),
                d.method.to_string(),
                d.deviation.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join(DEVIATION_SUMMARY_FILE))?;
        w.write_record([
            "config_fingerprint",
            "method",
            "n_unlab",
            "count",
            "mean",
            "std",
        ])?;
        for d in &self.deviation_summary {
            w.write_record([
                self.fingerprint.clone(),
                d.method.to_string(),
                d.n_unlab.to_string(),
                d.count.to_string(),
                d.mean.to_string(),
                d.std.to_string(),
            ])?;
        }
        w.flush()?;
        write_summary_csv(
            &dir.join(SUMMARY_CSV_FILE),
            &self.fingerprint,
            &self.method_summary,
        )?;
        write_json(&dir.join(SUMMARY_FILE), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{InputDistribution, SyntheticTask, TargetFunction};

    #[test]
    fn metric_examples() {
        let y = DVector::from_vec(vec![0.0, 2.0]);
        assert_eq!(metric_one_minus_r2(&y, &y).unwrap(), 0.0);
        assert_eq!(
            metric_one_minus_r2(&y, &DVector::from_vec(vec![1.0, 1.0])).unwrap(),
            1.0
        );
        let y3 = DVector::from_vec(vec![1.0, 4.0, -2.0]);
        let mean = DVector::from_element(3, y3.mean());
        assert!((metric_one_minus_r2(&y3, &mean).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metric_errors() {
        let c = DVector::from_vec(vec![3.0, 3.0]);
        assert!(matches!(
            metric_one_minus_r2(&c, &c),
            Err(Error::UndefinedMetric(_))
        ));
        let one = DVector::from_vec(vec![1.0]);
        assert!(metric_one_minus_r2(&one, &one).is_err());
        assert!(metric_one_minus_r2(&c, &one).is_err());
    }

    #[test]
    fn mean_std_edge_cases() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn defaults_match_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!((c.trials, c.k_folds, c.gamma), (50, 10, 7));
        assert_eq!(c.variance_stabilizer, 1e-12);
        assert_eq!(c.n_unlab_list, vec![10, 20, 50, 100, 200]);
        let sel = c.selection(c.n, 0);
        assert_eq!(sel.ridge_grid.ridge_params[0], 200.0);
        assert_eq!(sel.svd_grid.k_max, 133);
        c.validate().unwrap();
    }

    #[test]
    fn config_json_uses_field_names() {
        let json = r#"{"methods": ["RR", "SBT"], "n": 30, "trials": 2, "dataset": {"path": "x.csv", "target": "Y1", "exclude": ["Y2"]}}"#;
        let c: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.methods, vec![Method::Rr, Method::Sbt]);
        assert_eq!(c.dataset.csv.target, "Y1");
        assert_eq!(c.dataset.csv.exclude, vec!["Y2"]);
        assert_eq!(c.gamma, 7);
        assert_ne!(c.fingerprint(), ExperimentConfig::default().fingerprint());
    }

    #[test]
    fn invalid_configs() {
        let even = ExperimentConfig {
            gamma: 4,
            ..Default::default()
        };
        assert!(even.validate().is_err());
        let none = ExperimentConfig {
            methods: vec![],
            ..Default::default()
        };
        assert!(none.validate().is_err());
        let folds = ExperimentConfig {
            n: 5,
            k_folds: 10,
            ..Default::default()
        };
        assert!(folds.validate().is_err());
    }

    fn tiny() -> (ExperimentConfig, Dataset) {
        let task = SyntheticTask {
            target: TargetFunction::Sine {
                amplitude: 1.0,
                frequency: 2.0,
            },
            noise_sd: 0.1,
            inputs: InputDistribution::Uniform {
                low: -1.5,
                high: 1.5,
            },
            dim: 2,
            seed: 3,
        };
        let (ds, _) = task.sample_dataset(80).unwrap();
        let config = ExperimentConfig {
            methods: vec![Method::Rr],
            n: 20,
            n_unlab: 10,
            trials: 1,
            k_folds: 4,
            grids: GridConfig {
                ridge_multipliers: vec![1e-2, 1e-4],
                ridge_scale_by_n: true,
                ridge_widths: vec![0.5, 2.0],
                svd_widths: vec![0.5, 2.0],
            },
            ..Default::default()
        };
        (config, ds)
    }

    #[test]
    fn single_trial_summary_is_the_row() {
        let (config, ds) = tiny();
        let report = run_method_comparison(&config, &ds, 1).unwrap();
        assert_eq!(report.records.len(), 1);
        let s = &report.summary[0];
        assert_eq!(s.count, 1);
        assert_eq!(s.mean, report.records[0].one_minus_r2);
        assert_eq!(s.std, 0.0);
        report.check_failures().unwrap();
    }

    #[test]
    fn rr_ignores_unlabeled_inputs() {
        let (config, ds) = tiny();
        let seed = config.trial_seed(0);
        let split = split_trial(&ds, config.n, config.n_unlab, config.test_policy(), seed).unwrap();
        let mut garbage = split.clone();
        garbage.unlabeled_x.fill(1e6);
        let (a, ea) = fit_on_split(Method::Rr, &split, &config, &ds.feature_names).unwrap();
        let (b, eb) = fit_on_split(Method::Rr, &garbage, &config, &ds.feature_names).unwrap();
        assert_eq!(ea, eb);
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_requires_rr_and_a_comparison_method() {
        let (mut config, ds) = tiny();
        config.methods = vec![Method::Rr, Method::Ssv];
        assert!(matches!(
            run_unlabeled_sweep(&config, &ds, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn failure_threshold() {
        assert!(check_failures(1, 10).is_ok());
        assert!(check_failures(2, 10).is_err());
    }
}
