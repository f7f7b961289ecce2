//! Batch front end for `rankmed`.
//!
//! Every subcommand reads one labeled CSV and writes a JSON report (or TSV
//! plot data for `spectrum`) to `-o` or stdout. Reports validate against
//! `schema/analysis_report.schema.json`.

pub mod config;
pub mod format;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rankmed_core::evaluate::{evaluate_subset, TreeParams};
use rankmed_core::ingest::load_csv;
use rankmed_core::pipeline::{analyze_redundancy, eigen_threshold, rank_input, relevance_on, select_subset};
use rankmed_core::rank::{default_tolerance, default_tracker_tolerance, eigen_spectrum};
use rankmed_core::redundancy::select_features;
use rankmed_core::relevance::RelevanceResult;
use rankmed_core::{Dataset, SolverConfig};

use config::{pick, pick_tol, ConfigFile};
use report::{AnalysisReport, FeatureRef, Parameters};

/// Exit status for bad input or flags.
pub const EXIT_INVALID: u8 = 2;
/// Exit status for internal failures.
pub const EXIT_INTERNAL: u8 = 1;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<rankmed_core::Error> for CliError {
    fn from(e: rankmed_core::Error) -> Self {
        match e {
            rankmed_core::Error::Solve(_) => Self::internal(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rankmed", version, about = "Rank-preserving feature clustering and class-compensated relevance scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the feature covariance as TSV.
    Spectrum(Common),
    /// Rank-preserving clusters and their medoids.
    Cluster(Common),
    /// Per-class and total relevance from the l2,1 regression.
    Relevance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Plain Z-score and unscaled design instead of class compensation.
        #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
        no_compensation: Option<bool>,
        /// Score only the cluster medoids.
        #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
        medoids_only: Option<bool>,
        /// Also write relevance_total.tsv and relevance_per_class.tsv here.
        #[arg(long, value_name = "DIR")]
        tsv_dir: Option<PathBuf>,
    },
    /// Medoids minus the N least relevant ones.
    Select {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Number of least relevant medoids to drop [default: 0].
        #[arg(long, value_name = "N")]
        drop_bottom: Option<usize>,
        /// `json` (default) or `text`: one `index<TAB>name` line per feature.
        #[arg(long)]
        format: Option<OutputFormat>,
    },
    /// Cross-validated CART accuracy of a feature subset.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated feature names or 1-based indices; default all.
        #[arg(long, value_name = "LIST", conflicts_with = "auto")]
        features: Option<String>,
        /// Evaluate the output of `select --drop-bottom N`.
        #[arg(long, value_name = "N")]
        auto: Option<usize>,
        /// Cross-validation folds [default: 10].
        #[arg(long)]
        folds: Option<usize>,
        /// Tree depth limit [default: 12].
        #[arg(long)]
        max_depth: Option<usize>,
        /// Minimum instances per leaf [default: 2].
        #[arg(long)]
        min_leaf: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Labeled CSV, one instance per line.
    pub input: PathBuf,
    /// Header of the label column [default: label].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Relative rank tolerance; 0 selects the built-in defaults. Overrides
    /// the RANKMED_TOL environment variable.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Features whose population variance is at most this are dropped
    /// [default: 0].
    #[arg(long)]
    pub variance_floor: Option<f64>,
    /// Z-score features before the rank analysis, so affine relations count
    /// as redundancy.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub standardize: Option<bool>,
    /// Output file [default: stdout].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// key=value file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// l2,1 penalty weight [default: 1].
    #[arg(long)]
    pub gamma: Option<f64>,
}

/// Flag values merged with the config file and environment.
struct Resolved {
    config: ConfigFile,
    input: PathBuf,
    output: Option<PathBuf>,
    label_column: String,
    tol: f64,
    variance_floor: f64,
    standardize: bool,
}

impl Resolved {
    fn new(common: &Common, env_tol: Option<&str>) -> Result<Self, CliError> {
        let config = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let variance_floor = pick(common.variance_floor, &config, "variance-floor", 0.0)?;
        if !(variance_floor.is_finite() && variance_floor >= 0.0) {
            return Err(CliError::input(format!("variance-floor must be finite and nonnegative, got {variance_floor}")));
        }
        Ok(Self {
            label_column: pick(common.label_column.clone(), &config, "label-column", "label".to_owned())?,
            tol: pick_tol(common.tol, &config, env_tol)?,
            variance_floor,
            standardize: pick(common.standardize, &config, "standardize", false)?,
            input: common.input.clone(),
            output: common.output.clone(),
            config,
        })
    }

    fn solver(&self, args: &SolverArgs) -> Result<SolverConfig, CliError> {
        let gamma = pick(args.gamma, &self.config, "gamma", 1.0)?;
        let config = SolverConfig::with_gamma(gamma);
        config.validate()?;
        Ok(config)
    }

    fn load(&self) -> Result<Dataset, CliError> {
        Ok(load_csv(&self.input, &self.label_column, self.variance_floor)?)
    }

    fn parameters(&self, data: &Dataset) -> Parameters {
        let (m, n) = (data.features.m(), data.features.n());
        let resolve = |fallback: f64| if self.tol == 0.0 { fallback } else { self.tol };
        Parameters {
            label_column: self.label_column.clone(),
            tol: self.tol,
            svd_tol: resolve(default_tolerance(m, n)),
            tracker_tol: resolve(default_tracker_tolerance()),
            eigen_threshold: if self.tol == 0.0 {
                default_tolerance::<f64>(m, n).powi(2)
            } else {
                eigen_threshold(self.tol)
            },
            variance_floor: self.variance_floor,
            standardize: self.standardize,
            ..Parameters::default()
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing to `-o`
/// or `stdout`. `env_tol` is the value of `RANKMED_TOL`, if set.
pub fn run<I, T>(args: I, env_tol: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::input(e.to_string()))?;
    execute(cli.command, env_tol, stdout)
}

pub fn execute(command: Command, env_tol: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Spectrum(common) => spectrum(&Resolved::new(&common, env_tol)?, stdout),
        Command::Cluster(common) => cluster(&Resolved::new(&common, env_tol)?, stdout),
        Command::Relevance {
            common,
            solver,
            no_compensation,
            medoids_only,
            tsv_dir,
        } => {
            let r = Resolved::new(&common, env_tol)?;
            let no_compensation = pick(no_compensation, &r.config, "no-compensation", false)?;
            let medoids_only = pick(medoids_only, &r.config, "medoids-only", false)?;
            let tsv_dir = tsv_dir.or(r.config.get("tsv-dir")?);
            relevance(&r, &solver, !no_compensation, medoids_only, tsv_dir.as_deref(), stdout)
        }
        Command::Select {
            common,
            solver,
            drop_bottom,
            format,
        } => {
            let r = Resolved::new(&common, env_tol)?;
            let drop_bottom = pick(drop_bottom, &r.config, "drop-bottom", 0)?;
            let format = pick(format, &r.config, "format", OutputFormat::Json)?;
            select(&r, &solver, drop_bottom, format, stdout)
        }
        Command::Evaluate {
            common,
            solver,
            features,
            auto,
            folds,
            max_depth,
            min_leaf,
        } => {
            let r = Resolved::new(&common, env_tol)?;
            let features = features.or(r.config.get("features")?);
            let auto = auto.or(r.config.get("auto")?);
            if features.is_some() && auto.is_some() {
                return Err(CliError::input("--features and --auto are mutually exclusive"));
            }
            let defaults = TreeParams::default();
            let params = TreeParams {
                max_depth: pick(max_depth, &r.config, "max-depth", defaults.max_depth)?,
                min_leaf: pick(min_leaf, &r.config, "min-leaf", defaults.min_leaf)?,
            };
            let folds = pick(folds, &r.config, "folds", 10)?;
            evaluate(&r, &solver, features.as_deref(), auto, folds, params, stdout)
        }
    }
}

fn emit(r: &Resolved, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &r.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::internal(format!("cannot write output: {e}"))),
    }
}

fn emit_report(r: &Resolved, stdout: &mut dyn Write, report: &AnalysisReport) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::internal(e.to_string()))?;
    text.push('\n');
    emit(r, stdout, &text)
}

fn spectrum(r: &Resolved, stdout: &mut dyn Write) -> Result<(), CliError> {
    let data = r.load()?;
    let params = r.parameters(&data);
    let ranked = rank_input(&data.features, r.standardize)?;
    let s = eigen_spectrum(&ranked, params.eigen_threshold)?;
    let sha = data.source.as_ref().map_or("", |s| s.sha256.as_str());
    let header = vec![
        format!("rankmed {} spectrum", rankmed_core::VERSION),
        format!("input={} sha256={sha}", r.input.display()),
        format!(
            "features={} instances={} standardize={} threshold={}",
            data.features.m(),
            data.features.n(),
            r.standardize,
            format::g12(s.threshold)
        ),
        "index\teigenvalue".to_owned(),
    ];
    emit(r, stdout, &format::spectrum_tsv(&header, &s.eigenvalues, s.effective_rank))
}

fn base_report(r: &Resolved, command: &str, data: &Dataset) -> AnalysisReport {
    AnalysisReport::new(command, &r.input, data, r.parameters(data))
}

fn cluster(r: &Resolved, stdout: &mut dyn Write) -> Result<(), CliError> {
    let data = r.load()?;
    let mut report = base_report(r, "cluster", &data);
    let red = analyze_redundancy(&data.features, r.tol, r.standardize)?;
    report.set_redundancy(&data.features, &red);
    emit_report(r, stdout, &report)
}

fn require_classes(data: &Dataset) -> Result<(), CliError> {
    if data.labels.c() < 2 {
        return Err(CliError::input(format!(
            "relevance needs at least two classes; column {:?} holds only {:?}",
            data.label_column,
            data.labels.class_names()
        )));
    }
    Ok(())
}

fn relevance(
    r: &Resolved,
    solver: &SolverArgs,
    compensate: bool,
    medoids_only: bool,
    tsv_dir: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let data = r.load()?;
    require_classes(&data)?;
    let config = r.solver(solver)?;
    let mut report = base_report(r, "relevance", &data);
    report.parameters.set_solver(&config, compensate);
    report.parameters.medoids_only = Some(medoids_only);

    let features: Vec<usize> = if medoids_only {
        let red = analyze_redundancy(&data.features, r.tol, r.standardize)?;
        report.set_redundancy(&data.features, &red);
        select_features(&red.partition)?
    } else {
        (0..data.features.m()).collect()
    };
    let result = relevance_on(&data.features, &data.labels, &features, &config, compensate)?;
    report.add_relevance(&data, &features, &result);
    if let Some(dir) = tsv_dir {
        write_relevance_tsv(dir, &data, &features, &result)?;
    }
    emit_report(r, stdout, &report)
}

fn write_relevance_tsv(
    dir: &Path,
    data: &Dataset,
    features: &[usize],
    result: &RelevanceResult<f64>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
    let keys = |j: usize| vec![(j + 1).to_string(), data.features.name(j).to_owned()];
    let total = result.weights.total();
    let per_class = result.weights.per_class();
    let totals: Vec<_> = features.iter().zip(&total).map(|(&j, &t)| (keys(j), vec![t])).collect();
    let classes: Vec<_> = features
        .iter()
        .enumerate()
        .map(|(k, &j)| (keys(j), per_class.row(k).to_vec()))
        .collect();
    let mut class_header = vec!["index".to_owned(), "name".to_owned()];
    class_header.extend(data.labels.class_names().iter().cloned());
    let files = [
        (
            "relevance_total.tsv",
            format::table_tsv(&["index".into(), "name".into(), "total".into()], &totals),
        ),
        ("relevance_per_class.tsv", format::table_tsv(&class_header, &classes)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_select(
    r: &Resolved,
    data: &Dataset,
    config: &SolverConfig,
    drop_bottom: usize,
    report: &mut AnalysisReport,
) -> Result<Vec<usize>, CliError> {
    let red = analyze_redundancy(&data.features, r.tol, r.standardize)?;
    report.set_redundancy(&data.features, &red);
    let k = red.partition.k();
    if drop_bottom >= k {
        return Err(CliError::input(format!("--drop-bottom {drop_bottom} must be below the cluster count k = {k}")));
    }
    let selection = select_subset(&data.features, &data.labels, &red.partition, config, drop_bottom)?;
    let medoids = select_features(&red.partition)?;
    let scored = relevance_on(&data.features, &data.labels, &medoids, config, true)?;
    report.add_relevance(data, &medoids, &scored);
    report.set_selection(&data.features, drop_bottom, &selection);
    Ok(selection.selected)
}

fn select(
    r: &Resolved,
    solver: &SolverArgs,
    drop_bottom: usize,
    format: OutputFormat,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let data = r.load()?;
    require_classes(&data)?;
    let config = r.solver(solver)?;
    let mut report = base_report(r, "select", &data);
    report.parameters.set_solver(&config, true);
    report.parameters.drop_bottom = Some(drop_bottom);
    let selected = run_select(r, &data, &config, drop_bottom, &mut report)?;
    match format {
        OutputFormat::Json => emit_report(r, stdout, &report),
        OutputFormat::Text => {
            let text: String = selected
                .iter()
                .map(|&j| format!("{}\t{}\n", j + 1, data.features.name(j)))
                .collect();
            emit(r, stdout, &text)
        }
    }
}

/// Resolves a comma-separated list of feature names or 1-based indices.
/// Names win when a name looks like a number.
pub fn parse_feature_list(list: &str, names: &[String]) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for token in list.split(',').map(str::trim) {
        if token.is_empty() {
            return Err(CliError::input(format!("empty entry in feature list {list:?}")));
        }
        let index = match names.iter().position(|n| n == token) {
            Some(j) => j,
            None => match token.parse::<usize>() {
                Ok(k) if (1..=names.len()).contains(&k) => k - 1,
                Ok(k) => {
                    return Err(CliError::input(format!(
                        "feature index {k} out of range 1..={}",
                        names.len()
                    )))
                }
                Err(_) => return Err(CliError::input(format!("unknown feature {token:?}"))),
            },
        };
        if out.contains(&index) {
            return Err(CliError::input(format!("feature {token:?} listed twice")));
        }
        out.push(index);
    }
    out.sort_unstable();
    Ok(out)
}

fn evaluate(
    r: &Resolved,
    solver: &SolverArgs,
    features: Option<&str>,
    auto: Option<usize>,
    folds: usize,
    params: TreeParams,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let data = r.load()?;
    let mut report = base_report(r, "evaluate", &data);
    report.parameters.folds = Some(folds);
    report.parameters.max_depth = Some(params.max_depth);
    report.parameters.min_leaf = Some(params.min_leaf);
    let subset = match (features, auto) {
        (Some(list), _) => parse_feature_list(list, data.features.names())?,
        (None, Some(n)) => {
            require_classes(&data)?;
            let config = r.solver(solver)?;
            report.parameters.set_solver(&config, true);
            report.parameters.drop_bottom = Some(n);
            run_select(r, &data, &config, n, &mut report)?
        }
        (None, None) => (0..data.features.m()).collect(),
    };
    let result = evaluate_subset(&data.features, &data.labels, &subset, folds, params)?;
    report.add_evaluation(&data.features, &result);
    emit_report(r, stdout, &report)
}

/// Feature reference echoed in reports.
pub fn feature_ref(names: &[String], j: usize) -> FeatureRef {
    FeatureRef {
        index: j + 1,
        name: names[j].clone(),
    }
}
