//! The `apca` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use apca_core::data::{gaussian_dataset, read_csv, synth_adversarial, synth_supervised, write_csv, Dataset};
use apca_core::eval::{mu_sweep, SweepOptions};
use apca_core::{ApcaConfig, ApcaError, ApcaModel, Decomp, Flavor, Inference, Matrix};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "apca", version, about = "Supervised and adversarial augmented PCA")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and write it to a model file
    Fit(FitArgs),
    /// Compute factor scores (samples x k)
    Transform(ApplyArgs),
    /// Reconstruct primary and augmenting data from factor scores
    Reconstruct(ApplyArgs),
    /// Sweep mu and report downstream accuracy and squared correlations
    Eval(EvalArgs),
    /// List the largest-magnitude primary loadings of one component
    TopLoadings(TopArgs),
    /// Generate a synthetic dataset
    Synth(SynthArgs),
    /// Compare exact and approximate fit wall times
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FlavorArg {
    Supervised,
    Adversarial,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum InferenceArg {
    Local,
    Encoded,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum DecompArg {
    Exact,
    Approx,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Recipe {
    Supervised,
    Adversarial,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, value_enum)]
    flavor: FlavorArg,
    #[arg(long, value_enum)]
    inference: InferenceArg,
    /// Number of components k
    #[arg(long)]
    components: usize,
    #[arg(long, value_enum, default_value = "exact")]
    decomp: DecompArg,
    /// Oversampling s for the approximate solver
    #[arg(long, default_value_t = apca_core::randomized::DEFAULT_OVERSAMPLE)]
    oversample: usize,
    /// Subspace iterations t for the approximate solver
    #[arg(long, default_value_t = apca_core::randomized::DEFAULT_POWER_ITERS)]
    power_iters: usize,
}

impl SolverArgs {
    fn config(&self, mu: f64, seed: u64) -> Result<ApcaConfig, CliError> {
        check_mu(mu)?;
        if self.components == 0 {
            return Err(CliError::Usage("--components must be at least 1".into()));
        }
        let flavor = match self.flavor {
            FlavorArg::Supervised => Flavor::Supervised,
            FlavorArg::Adversarial => Flavor::Adversarial,
        };
        let inference = match self.inference {
            InferenceArg::Local => Inference::Local,
            InferenceArg::Encoded => Inference::Encoded,
        };
        let decomp = match self.decomp {
            DecompArg::Exact => Decomp::Exact,
            DecompArg::Approx => Decomp::Approx {
                oversample: self.oversample,
                power_iters: self.power_iters,
            },
        };
        Ok(ApcaConfig::new(flavor, inference, self.components, mu).with_decomp(decomp).with_seed(seed))
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    primary: PathBuf,
    #[arg(long)]
    augmenting: PathBuf,
    /// Input CSVs start with a header row
    #[arg(long)]
    has_header: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    primary: PathBuf,
    /// Required for local-inference models
    #[arg(long)]
    augmenting: Option<PathBuf>,
    #[arg(long)]
    has_header: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    primary: PathBuf,
    #[arg(long)]
    augmenting: PathBuf,
    /// One integer class per row; defaults to the argmax of the augmenting data
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    has_header: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Ascending comma-separated mu values
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    mu_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    test_fraction: f64,
    /// z-score primary features with training-split statistics
    #[arg(long)]
    standardize: bool,
    /// Seeds both the split and the solver
    #[arg(long)]
    seed: u64,
    /// Report path; printed to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TopArgs {
    #[arg(long)]
    model: PathBuf,
    /// Zero-based component index
    #[arg(long, default_value_t = 0)]
    component: usize,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    recipe: Recipe,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    p: usize,
    /// Nuisance scale for the supervised recipe
    #[arg(long, default_value_t = 5.0)]
    noise_scale: f64,
    #[arg(long)]
    seed: u64,
    /// Output directory for primary.csv, augmenting.csv and labels.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Primary feature counts to time
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000")]
    p: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 2)]
    components: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = apca_core::randomized::DEFAULT_OVERSAMPLE)]
    oversample: usize,
    #[arg(long, default_value_t = apca_core::randomized::DEFAULT_POWER_ITERS)]
    power_iters: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(ApcaError),
}

impl From<ApcaError> for CliError {
    fn from(e: ApcaError) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn check_mu(mu: f64) -> Result<(), CliError> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(CliError::Usage(format!("--mu must be a nonnegative number, got {mu}")));
    }
    Ok(())
}

/// Runs the CLI on `argv` (including the program name) with process stdio.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`run`] but writes to the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Fit(a) => fit_cmd(a),
        Command::Transform(a) => transform_cmd(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Eval(a) => eval_cmd(a, out),
        Command::TopLoadings(a) => top_cmd(a, out),
        Command::Synth(a) => synth_cmd(a),
        Command::Bench(a) => bench_cmd(a, out),
    }
}

fn read_matrix(path: &Path, has_header: bool) -> Result<Matrix, CliError> {
    Ok(read_csv(path, has_header)?.matrix)
}

fn fit_cmd(a: FitArgs) -> Result<(), CliError> {
    let config = a.solver.config(a.mu, a.seed)?;
    let x = read_matrix(&a.primary, a.has_header)?;
    let y = read_matrix(&a.augmenting, a.has_header)?;
    let model = apca_core::fit(&config, &x, &y)?;
    apca_core::save(&model, &a.out)?;
    Ok(())
}

fn load_inputs(a: &ApplyArgs) -> Result<(ApcaModel, Matrix, Option<Matrix>), CliError> {
    let model = apca_core::load(&a.model)?;
    let x = read_matrix(&a.primary, a.has_header)?;
    let y = match &a.augmenting {
        Some(path) => Some(read_matrix(path, a.has_header)?),
        None => None,
    };
    Ok((model, x, y))
}

fn transform_cmd(a: ApplyArgs) -> Result<(), CliError> {
    let (model, x, y) = load_inputs(&a)?;
    let s = model.transform(&x, y.as_ref())?;
    write_csv(&s, &a.out, None)?;
    Ok(())
}

fn reconstruct_cmd(a: ApplyArgs) -> Result<(), CliError> {
    let (model, x, y) = load_inputs(&a)?;
    let (x_hat, y_hat) = model.reconstruct(&x, y.as_ref())?;
    let (n, p, q) = (x_hat.rows(), x_hat.cols(), y_hat.cols());
    let joined = Matrix::from_fn(n, p + q, |i, j| if j < p { x_hat[(i, j)] } else { y_hat[(i, j - p)] });
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).chain((0..q).map(|i| format!("y{i}"))).collect();
    write_csv(&joined, &a.out, Some(&names))?;
    Ok(())
}

fn read_labels(path: &Path, has_header: bool, n: usize) -> Result<Vec<usize>, CliError> {
    let m = read_matrix(path, has_header)?;
    if m.cols() != 1 || m.rows() != n {
        return Err(CliError::Runtime(ApcaError::Dimension(format!(
            "labels must be a single column with {n} rows, got {}x{}",
            m.rows(),
            m.cols()
        ))));
    }
    m.as_slice()
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(CliError::Runtime(ApcaError::InvalidParameter(format!(
                    "labels must be nonnegative integers, got {v}"
                ))))
            }
        })
        .collect()
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    for &mu in &a.mu_grid {
        check_mu(mu)?;
    }
    if a.mu_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("--mu-grid must be strictly ascending".into()));
    }
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(CliError::Usage(format!("--test-fraction must be in (0, 1), got {}", a.test_fraction)));
    }
    let template = a.solver.config(a.mu_grid[0], a.seed)?;
    let x = read_matrix(&a.primary, a.has_header)?;
    let y = read_matrix(&a.augmenting, a.has_header)?;
    let mut dataset = Dataset::new(x, y)?;
    if let Some(path) = &a.labels {
        dataset.labels = Some(read_labels(path, a.has_header, dataset.samples())?);
    }
    let options = SweepOptions {
        test_fraction: a.test_fraction,
        standardize: a.standardize,
        ..SweepOptions::new(a.seed)
    };
    let report = mu_sweep(&dataset, &template, &a.mu_grid, options)?;
    emit(&report.to_csv(), a.out.as_deref(), out)
}

fn top_cmd(a: TopArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = apca_core::load(&a.model)?;
    let entries = apca_core::apca::top_loadings(&model.w, a.component, a.top)?;
    let mut text = String::from("feature,loading\n");
    for (j, v) in entries {
        text.push_str(&format!("{j},{v:?}\n"));
    }
    emit(&text, a.out.as_deref(), out)
}

fn synth_cmd(a: SynthArgs) -> Result<(), CliError> {
    let ds = match a.recipe {
        Recipe::Supervised => synth_supervised(a.n, a.p, a.noise_scale, a.seed)?,
        Recipe::Adversarial => synth_adversarial(a.n, a.p, a.seed)?,
    };
    std::fs::create_dir_all(&a.out)?;
    write_csv(&ds.x, a.out.join("primary.csv"), None)?;
    write_csv(&ds.y, a.out.join("augmenting.csv"), None)?;
    let labels = ds.class_labels();
    let labels = Matrix::from_fn(labels.len(), 1, |i, _| labels[i] as f64);
    write_csv(&labels, a.out.join("labels.csv"), None)?;
    Ok(())
}

fn bench_cmd(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_mu(a.mu)?;
    if a.p.is_empty() || a.components == 0 {
        return Err(CliError::Usage("--p needs at least one value and --components must be >= 1".into()));
    }
    let mut text = String::from("p,n,q,exact_seconds,approx_seconds\n");
    for &p in &a.p {
        let ds = gaussian_dataset(a.n, p, a.q, a.seed)?;
        let exact = ApcaConfig::new(Flavor::Supervised, Inference::Local, a.components, a.mu).with_seed(a.seed);
        let approx = exact.with_decomp(Decomp::Approx {
            oversample: a.oversample,
            power_iters: a.power_iters,
        });
        let time = |config: &ApcaConfig| -> Result<f64, CliError> {
            let start = Instant::now();
            apca_core::fit(config, &ds.x, &ds.y)?;
            Ok(start.elapsed().as_secs_f64())
        };
        let t_exact = time(&exact)?;
        let t_approx = time(&approx)?;
        text.push_str(&format!("{p},{},{},{t_exact:.6},{t_approx:.6}\n", a.n, a.q));
    }
    emit(&text, a.out.as_deref(), out)
}
