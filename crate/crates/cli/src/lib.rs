//! Batch driver: build a model from one file, evaluate it on that file and on
//! any number of others, and write `<prefix><file>.RN.csv` for each.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use rn_core::observations::output_path;
use rn_core::{read_sample, write_evaluation, ColumnSpec, Error, FittedModel, ModelOptions, OutputMeta, RegularizationMethod, Sample};

pub const UCI_BREAST_CANCER_URL: &str =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer-wisconsin/breast-cancer-wisconsin.data";

/// Error carrying the pipeline stage it came from.
#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl CliError {
    fn new(stage: impl Into<String>, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        CliError {
            stage: stage.into(),
            source: source.into(),
        }
    }

    /// The library error, when there is one.
    pub fn core(&self) -> Option<&Error> {
        self.source.downcast_ref::<Error>()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.source)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model_file: PathBuf,
    pub eval_files: Vec<PathBuf>,
    pub column_spec: ColumnSpec,
    pub clusters_number: Option<usize>,
    pub regularization_method: RegularizationMethod,
    pub max_multiindex: Option<usize>,
    pub verbosity: u8,
    pub replace_f_by_christoffel: bool,
    pub assume_f_diagonal_in_k: bool,
    pub output_prefix: String,
}

impl RunConfig {
    pub fn new(model_file: impl Into<PathBuf>, column_spec: ColumnSpec) -> Self {
        RunConfig {
            model_file: model_file.into(),
            eval_files: Vec::new(),
            column_spec,
            clusters_number: None,
            regularization_method: RegularizationMethod::Ev,
            max_multiindex: None,
            verbosity: 2,
            replace_f_by_christoffel: false,
            assume_f_diagonal_in_k: false,
            output_prefix: String::new(),
        }
    }

    fn options(&self) -> ModelOptions {
        ModelOptions {
            method: self.regularization_method,
            max_multiindex: self.max_multiindex,
            clusters: self.clusters_number,
            replace_f_by_christoffel: self.replace_f_by_christoffel,
            assume_f_diagonal_in_christoffel_basis: self.assume_f_diagonal_in_k,
            ..Default::default()
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rn",
    about = "Radon-Nikodym spectral models from CSV samples",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Column layout `total:x_start,x_end:f:w:label` (-1 for absent weight/label)
    #[arg(long = "data_cols", required = true, allow_hyphen_values = true)]
    pub data_cols: Option<ColumnSpec>,

    #[arg(long = "data_file_to_build_model_from", required = true)]
    pub model_file: Option<PathBuf>,

    /// May be repeated
    #[arg(long = "data_file_evaluation")]
    pub eval_files: Vec<PathBuf>,

    #[arg(long = "clusters_number", value_parser = clap::value_parser!(u64).range(1..))]
    pub clusters_number: Option<u64>,

    /// NONE, EV or LIN
    #[arg(long = "regularization_method", default_value = "EV")]
    pub regularization_method: RegularizationMethod,

    #[arg(long = "max_multiindex", value_parser = clap::value_parser!(u64).range(1..))]
    pub max_multiindex: Option<u64>,

    #[arg(long = "flag_print_verbosity", default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub verbosity: u8,

    #[arg(long = "flag_replace_f_by_christoffel_function", action = ArgAction::Set, default_value_t = false)]
    pub replace_f_by_christoffel: bool,

    #[arg(
        long = "flag_assume_f_is_diagonal_in_christoffel_function_basis",
        action = ArgAction::Set,
        default_value_t = false
    )]
    pub assume_f_diagonal_in_k: bool,

    #[arg(long = "output_files_prefix", default_value = "")]
    pub output_prefix: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Runge interpolation sample (1, x, .., x^(n-1), f, w) on [-1, 1]
    RungeFixture {
        path: PathBuf,
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long, default_value_t = 1e-4)]
        dx: f64,
    },
    /// Download the breast-cancer-wisconsin data and split it 500:183
    FetchUci { dest_dir: PathBuf },
}

impl Cli {
    pub fn run_config(&self) -> Option<RunConfig> {
        let mut cfg = RunConfig::new(self.model_file.clone()?, self.data_cols.clone()?);
        cfg.eval_files = self.eval_files.clone();
        cfg.clusters_number = self.clusters_number.map(|v| v as usize);
        cfg.regularization_method = self.regularization_method;
        cfg.max_multiindex = self.max_multiindex.map(|v| v as usize);
        cfg.verbosity = self.verbosity;
        cfg.replace_f_by_christoffel = self.replace_f_by_christoffel;
        cfg.assume_f_diagonal_in_k = self.assume_f_diagonal_in_k;
        cfg.output_prefix = self.output_prefix.clone();
        Some(cfg)
    }
}

fn fit_stage(e: &Error) -> &'static str {
    match e {
        Error::SupportTooSmall { .. } => "clustering",
        Error::TooManyProducts { .. } | Error::NoConstantColumn | Error::Overflow { .. } => "product expansion",
        Error::NotPositiveDefinite | Error::NotSymmetric(_) => "eigenproblem",
        _ => "model build",
    }
}

/// Fit the model described by `config`.
pub fn build_model(config: &RunConfig) -> Result<(Sample, FittedModel), CliError> {
    let sample = read_sample(&config.model_file, &config.column_spec).map_err(|e| CliError::new("reading model file", e))?;
    let model = FittedModel::fit(&sample, &config.options()).map_err(|e| {
        let stage = format!("{} on {}", fit_stage(&e), config.model_file.display());
        CliError::new(stage, e)
    })?;
    Ok((sample, model))
}

fn evaluate_file(
    config: &RunConfig,
    model: &FittedModel,
    sample: &Sample,
    source: &Path,
) -> Result<PathBuf, CliError> {
    let stage = |what: &str| format!("{what} {}", source.display());
    let evals = model.evaluate_sample(sample).map_err(|e| CliError::new(stage("evaluating"), e))?;
    let mut meta = OutputMeta {
        source: source.display().to_string(),
        model_source: config.model_file.display().to_string(),
        quadrature: model.quadrature.pairs(),
        clusters: model.clusters.as_ref().map(|c| c.quadrature.pairs()),
        projections: None,
        warnings: Vec::new(),
    };
    if config.verbosity >= 3 {
        meta.projections = Some(model.projections(sample).map_err(|e| CliError::new(stage("projecting"), e))?);
    }
    for (l, ev) in evals.iter().enumerate() {
        if ev.degenerate {
            let what = if ev.christoffel == 0.0 {
                "all psi vanish, prior mean used"
            } else {
                "zero coverage, prior mean used for f_RNW"
            };
            meta.warnings.push(format!("row {l} (label {}): {what}", sample.labels[l]));
        }
    }
    let rows: Vec<_> = evals.iter().map(|e| e.to_row()).collect();
    let out = output_path(source, &config.output_prefix);
    write_evaluation(&out, sample, &meta, &rows, config.verbosity).map_err(|e| CliError::new(stage("writing output for"), e))?;
    Ok(out)
}

/// Build the model, evaluate it on the model file and every evaluation file.
/// Returns the written paths in order.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let (sample, model) = build_model(config)?;
    let own = if config.replace_f_by_christoffel {
        sample.with_f(model.f_used.clone())
    } else {
        sample
    };
    let mut written = vec![evaluate_file(config, &model, &own, &config.model_file)?];
    for path in &config.eval_files {
        let s = read_sample(path, &config.column_spec).map_err(|e| CliError::new("reading evaluation file", e))?;
        written.push(evaluate_file(config, &model, &s, path)?);
    }
    Ok(written)
}

/// Runge sample: columns `1, x, .., x^(n-1), f, w` with `f = 1/(1+25x^2)`
/// on a uniform grid over [-1, 1] and trapezoid weights.
pub fn generate_runge_fixture(path: impl AsRef<Path>, n: usize, dx: f64) -> Result<(), CliError> {
    let path = path.as_ref();
    if !(dx > 0.0 && dx <= 2.0) || n == 0 {
        return Err(CliError::new(
            "runge fixture",
            Error::InvalidArgument(format!("need n >= 1 and 0 < dx <= 2, got n={n} dx={dx}")),
        ));
    }
    let steps = (2.0 / dx).round() as usize;
    let mut out = String::with_capacity((steps + 1) * n * 24);
    let mut header: Vec<String> = (0..n)
        .map(|k| match k {
            0 => "1".to_string(),
            1 => "x".to_string(),
            _ => format!("x^{k}"),
        })
        .collect();
    header.push("f".into());
    header.push("w".into());
    out.push_str(&format!("|#{}\n", header.join(",")));
    for l in 0..=steps {
        let x = -1.0 + l as f64 * dx;
        let mut p = 1.0;
        for k in 0..n {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("{p:?}"));
            p *= x;
        }
        let f = 1.0 / (1.0 + 25.0 * x * x);
        let w = if l == 0 || l == steps { dx / 2.0 } else { dx };
        out.push_str(&format!(",{f:?},{w:?}\n"));
    }
    fs::write(path, out).map_err(|e| CliError::new(format!("writing {}", path.display()), e))
}

/// Drop records with unknown attributes and split 500:183 in file order.
pub fn split_breast_cancer(raw: &str) -> (Vec<&str>, Vec<&str>) {
    let clean: Vec<&str> = raw
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty() && !l.contains('?'))
        .collect();
    let cut = clean.len().min(500);
    (clean[..cut].to_vec(), clean[cut..].to_vec())
}

/// Fetch the UCI breast-cancer data into `dest_dir`; returns (train, test) paths.
pub fn fetch_uci_breast_cancer(dest_dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), CliError> {
    let dir = dest_dir.as_ref();
    let raw = ureq::get(UCI_BREAST_CANCER_URL)
        .call()
        .map_err(|e| CliError::new("downloading breast-cancer data", e))?
        .body_mut()
        .read_to_string()
        .map_err(|e| CliError::new("downloading breast-cancer data", e))?;
    let (train, test) = split_breast_cancer(&raw);
    fs::create_dir_all(dir).map_err(|e| CliError::new(format!("creating {}", dir.display()), e))?;
    let train_path = dir.join("breast-cancer-wisconsin_S.data");
    let test_path = dir.join("breast-cancer-wisconsin_S.test");
    for (path, lines) in [(&train_path, &train), (&test_path, &test)] {
        let mut f = fs::File::create(path).map_err(|e| CliError::new(format!("writing {}", path.display()), e))?;
        for l in lines.iter() {
            writeln!(f, "{l}").map_err(|e| CliError::new(format!("writing {}", path.display()), e))?;
        }
    }
    Ok((train_path, test_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("rn").chain(args.iter().copied()))
    }

    #[test]
    fn documented_flag_syntax() {
        let cli = parse(&[
            "--data_cols=9:0,6:7:8:1",
            "--data_file_to_build_model_from=a.csv",
            "--data_file_evaluation=a.csv",
            "--data_file_evaluation=b.csv",
            "--clusters_number=3",
            "--regularization_method=LIN",
            "--flag_print_verbosity=3",
            "--flag_replace_f_by_christoffel_function=true",
            "--output_files_prefix=/tmp/",
        ])
        .unwrap();
        let cfg = cli.run_config().unwrap();
        assert_eq!(cfg.eval_files.len(), 2);
        assert_eq!(cfg.clusters_number, Some(3));
        assert_eq!(cfg.regularization_method, RegularizationMethod::Lin);
        assert_eq!(cfg.verbosity, 3);
        assert!(cfg.replace_f_by_christoffel);
        assert!(!cfg.assume_f_diagonal_in_k);
        assert_eq!(cfg.column_spec.n(), 7);
    }

    #[test]
    fn absent_weight_column() {
        let cli = parse(&["--data_cols=11:1,9:10:-1:0", "--data_file_to_build_model_from=x"]).unwrap();
        let spec = cli.run_config().unwrap().column_spec;
        assert_eq!(spec.w_col, None);
        assert_eq!(spec.label_col, Some(0));
    }

    #[test]
    fn rejects_bad_flags() {
        let base = ["--data_cols=9:0,6:7:8:1", "--data_file_to_build_model_from=a"];
        for extra in [
            "--unknown_flag=1",
            "--clusters_number=0",
            "--max_multiindex=0",
            "--flag_print_verbosity=4",
            "--regularization_method=SVD",
            "--flag_replace_f_by_christoffel_function=maybe",
        ] {
            let mut args = base.to_vec();
            args.push(extra);
            assert!(parse(&args).is_err(), "{extra} accepted");
        }
        assert!(parse(&["--data_file_to_build_model_from=a"]).is_err());
        assert!(parse(&["--data_cols=9:0,6:7:8:1"]).is_err());
        assert!(parse(&["--data_cols=9:0,6:7:8", "--data_file_to_build_model_from=a"]).is_err());
    }

    #[test]
    fn subcommands() {
        let cli = parse(&["runge-fixture", "out.csv", "--n=2", "--dx=0.5"]).unwrap();
        assert!(matches!(cli.command, Some(Command::RungeFixture { n: 2, .. })));
        let cli = parse(&["fetch-uci", "dir"]).unwrap();
        assert!(matches!(cli.command, Some(Command::FetchUci { .. })));
    }

    #[test]
    fn breast_cancer_split() {
        let mut raw = String::new();
        for i in 0..699 {
            if i % 40 == 3 && i < 640 {
                raw.push_str(&format!("{i},1,?,1,1,1,1,1,1,1,2\n"));
            } else {
                raw.push_str(&format!("{i},1,1,1,1,1,1,1,1,1,4\n"));
            }
        }
        let (train, test) = split_breast_cancer(&raw);
        assert_eq!((train.len(), test.len()), (500, 183));
        assert!(train.iter().chain(test.iter()).all(|l| !l.contains('?')));
        assert!(train[0].starts_with("0,"));
    }
}
