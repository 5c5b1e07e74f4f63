//! `pointspec` command-line interface.
//!
//! Exit codes: 0 on success, 1 for domain errors (one `error: ...` line on
//! stderr), 2 for malformed command lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use pointspec::dft::periodogram_grid;
use pointspec::io::{read_field, read_pattern, write_field, write_field_to, write_pattern, write_pattern_to};
use pointspec::mc::{parse_domain, parse_spacing, run_mc, write_outputs, ScenarioConfig, MAX_FAILURE_RATE};
use pointspec::models::simulate;
use pointspec::smoothing::{default_bandwidth, smooth_field, SmoothingKernel};
use pointspec::specmean::spectral_mean_true;
use pointspec::variance::{subsample_variance, whittle_ci, CiConfig, SubsampleConfig};
use pointspec::whittle::{best_fit_oracle, fit, fit_reduced_tcp, OptimizerConfig};
use pointspec::{DomainSpec, Error, Family, FrequencyGrid, SpacingRule, SpectralModel, Taper, Window};

#[derive(Parser)]
#[command(name = "pointspec", version, about = "Frequency-domain inference for spatial point processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a point pattern from a model.
    Simulate(SimulateArgs),
    /// Tapered periodogram on the frequency lattice.
    Periodogram(PeriodogramArgs),
    /// Kernel spectral density estimate from a periodogram field.
    Smooth(SmoothArgs),
    /// Whittle fit of a parametric family.
    Fit(FitArgs),
    /// Subsampling variance of an integrated periodogram.
    Subsample(SubsampleArgs),
    /// Deterministic oracles used by test pipelines.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Monte Carlo replication of a scenario.
    Mc(McArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Frequency domain: `2pi`, `5pi` or `d0,d1`.
    #[arg(long, default_value = "2pi")]
    domain: String,
    /// Lattice spacing rule: `A`, `A/2` or a number.
    #[arg(long, default_value = "A")]
    omega: String,
    /// Taper: `uniform`, `smooth` or `smooth:<a>`.
    #[arg(long, default_value = "smooth:0.025")]
    taper: String,
}

impl GridArgs {
    fn parse(&self) -> Result<(DomainSpec, SpacingRule, Taper), Error> {
        Ok((parse_domain(&self.domain)?, parse_spacing(&self.omega)?, self.taper.parse()?))
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Model, e.g. `thomas:kappa=0.2,alpha=10,sigma2=0.25`.
    #[arg(long)]
    model: String,
    /// Window side length(s), comma separated.
    #[arg(long)]
    window: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PeriodogramArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(long)]
    field: PathBuf,
    /// `auto` for `|D|^{-1/6}`, or a positive number.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OptimArgs {
    /// Optimizer seed for the multi-start design.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    starts: usize,
    #[arg(long, default_value_t = 4000)]
    max_iter: usize,
}

impl OptimArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig { seed: self.seed, starts: self.starts, max_iterations: self.max_iter, ..Default::default() }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long)]
    family: String,
    #[command(flatten)]
    grid: GridArgs,
    /// Reduced Thomas model with `alpha = lambda_hat / kappa`.
    #[arg(long)]
    reduced: bool,
    /// Also report sandwich intervals at this level (e.g. 0.05).
    #[arg(long)]
    ci: Option<f64>,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SubsampleArgs {
    #[arg(long)]
    pattern: PathBuf,
    /// `const` for phi = 1, `grad` for phi = grad(1/f) of `--model`.
    #[arg(long, default_value = "const")]
    phi: String,
    /// Model whose spectrum defines `grad`.
    #[arg(long)]
    model: Option<String>,
    /// Block side; defaults to `ceil(sqrt(A))`.
    #[arg(long)]
    block: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    stride: f64,
    #[arg(long, default_value_t = 20)]
    min_blocks: usize,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Minimiser of the spectral divergence from a true model.
    BestFit(BestFitArgs),
    /// Riemann spectral mean of a model with phi = 1.
    SpectralMean(SpectralMeanArgs),
}

#[derive(Args)]
struct BestFitArgs {
    /// True model, e.g. `lgcp:mu=-0.5,s2=2,scale=1`.
    #[arg(long = "true")]
    truth: String,
    #[arg(long)]
    family: String,
    #[arg(long)]
    window: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value = "2pi")]
    domain: String,
    #[arg(long, default_value = "A")]
    omega: String,
    #[command(flatten)]
    optim: OptimArgs,
}

#[derive(Args)]
struct SpectralMeanArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    window: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value = "2pi")]
    domain: String,
    #[arg(long, default_value = "A")]
    omega: String,
}

#[derive(Args)]
struct McArgs {
    /// Flat `key=value` scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set replicates=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Domain(Error),
    File(PathBuf, Error),
    TooManyFailures(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(Error::Io(e))
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Domain(e) => write!(f, "{e}"),
            Failure::File(p, e) => write!(f, "{}: {e}", p.display()),
            Failure::TooManyFailures(r) => write!(f, "replicate failure rate {r:.3} exceeds {MAX_FAILURE_RATE}"),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn at_path<T>(path: &Path, r: Result<T, Error>) -> Res<T> {
    r.map_err(|e| Failure::File(path.to_path_buf(), e))
}

fn window_from(spec: &str, dim: Option<usize>) -> Res<Window> {
    let sides: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidWindow(format!("bad side length '{s}'"))))
        .collect::<Result<_, _>>()?;
    match (sides.len(), dim) {
        (1, Some(d)) => Ok(Window::cube(d, sides[0])?),
        (1, None) => Ok(Window::cube(2, sides[0])?),
        (n, Some(d)) if n != d => Err(Error::DimensionMismatch { expected: d, got: n }.into()),
        _ => Ok(Window::new(sides)?),
    }
}

/// Dimension implied by a model string when `--dim` is absent.
fn model_dim(spec: &str, window: &str, dim: Option<usize>) -> usize {
    dim.unwrap_or_else(|| {
        let fam = spec.split(':').next().unwrap_or("");
        let n = window.split(',').count();
        if n > 1 {
            n
        } else if matches!(fam.parse::<Family>(), Ok(Family::Hawkes)) {
            1
        } else {
            2
        }
    })
}

fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Res<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    match output {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Simulate(a) => {
            let d = model_dim(&a.model, &a.window, a.dim);
            let model = SpectralModel::parse(&a.model, d)?;
            let window = window_from(&a.window, Some(d))?;
            let pattern = simulate(&model, &window, a.seed)?;
            match a.output {
                Some(p) => write_pattern(&pattern, p)?,
                None => write_pattern_to(&pattern, &mut io::stdout().lock())?,
            }
        }
        Command::Periodogram(a) => {
            let pattern = at_path(&a.pattern, read_pattern(&a.pattern))?;
            let (domain, rule, taper) = a.grid.parse()?;
            let grid = FrequencyGrid::build(pattern.window(), domain, rule)?;
            let field = periodogram_grid(&pattern, &taper, &grid);
            match a.output {
                Some(p) => write_field(&field, p)?,
                None => write_field_to(&field, &mut io::stdout().lock())?,
            }
        }
        Command::Smooth(a) => {
            let field = at_path(&a.field, read_field(&a.field))?;
            let b = match a.bandwidth.as_str() {
                "auto" => default_bandwidth(&field.window),
                s => s.parse().map_err(|_| Error::InvalidArgument(format!("bad bandwidth '{s}'")))?,
            };
            let smoothed = smooth_field(&field, &SmoothingKernel::triangular(b)?)?;
            match a.output {
                Some(p) => write_field(&smoothed, p)?,
                None => write_field_to(&smoothed, &mut io::stdout().lock())?,
            }
        }
        Command::Fit(a) => {
            let pattern = at_path(&a.pattern, read_pattern(&a.pattern))?;
            let (domain, rule, taper) = a.grid.parse()?;
            let family: Family = a.family.parse()?;
            let cfg = a.optim.config();
            let result = if a.reduced {
                if family != Family::Thomas {
                    return Err(Error::InvalidArgument("--reduced applies to the thomas family only".into()).into());
                }
                fit_reduced_tcp(&pattern, domain, &taper, rule, &cfg)?
            } else {
                fit(&pattern, family, domain, &taper, rule, &cfg)?
            };
            match a.ci {
                None => emit_json(&result, a.output.as_deref())?,
                Some(level) => {
                    let ci = whittle_ci(&result, &pattern, &taper, &CiConfig::default(), level)?;
                    emit_json(&json!({ "fit": result, "ci": ci }), a.output.as_deref())?;
                }
            }
        }
        Command::Subsample(a) => {
            let pattern = at_path(&a.pattern, read_pattern(&a.pattern))?;
            let (domain, _, taper) = a.grid.parse()?;
            let cfg = SubsampleConfig { block: a.block, stride: a.stride, min_blocks: a.min_blocks };
            let sub = match a.phi.as_str() {
                "const" => subsample_variance(&pattern, 1, |_, o| o[0] = 1.0, domain, &taper, &cfg)?,
                "grad" => {
                    let spec = a.model.ok_or_else(|| Error::InvalidArgument("--phi grad needs --model".into()))?;
                    let model = SpectralModel::parse(&spec, pattern.dim())?;
                    if !model.family().has_gradient() {
                        return Err(Error::Unsupported("gradient unavailable for quadrature-defined spectrum".into()).into());
                    }
                    let p = model.params().len();
                    let phi = |w: &[f64], o: &mut [f64]| {
                        let dv = model.derivatives(w).expect("closed-form family");
                        let f2 = dv.value * dv.value;
                        o.iter_mut().zip(&dv.grad).for_each(|(x, g)| *x = -g / f2);
                    };
                    subsample_variance(&pattern, p, phi, domain, &taper, &cfg)?
                }
                other => return Err(Error::InvalidArgument(format!("unknown phi '{other}' (const|grad)")).into()),
            };
            emit_json(&json!({ "zeta": sub.zeta, "p": sub.p, "blocks": sub.blocks, "a_n": sub.block_side }), None)?;
        }
        Command::Oracle(OracleCommand::BestFit(a)) => {
            let d = model_dim(&a.truth, &a.window, a.dim);
            let truth = SpectralModel::parse(&a.truth, d)?;
            let window = window_from(&a.window, Some(d))?;
            let family: Family = a.family.parse()?;
            let r = best_fit_oracle(&truth, family, parse_domain(&a.domain)?, &window, parse_spacing(&a.omega)?, &a.optim.config())?;
            emit_json(&r, None)?;
        }
        Command::Oracle(OracleCommand::SpectralMean(a)) => {
            let d = model_dim(&a.model, &a.window, a.dim);
            let model = SpectralModel::parse(&a.model, d)?;
            let window = window_from(&a.window, Some(d))?;
            let grid = FrequencyGrid::build(&window, parse_domain(&a.domain)?, parse_spacing(&a.omega)?)?;
            let value = spectral_mean_true(&model, &grid, |_| 1.0);
            emit_json(&json!({ "model": model.to_string(), "phi": "const", "value": value, "n_freq": grid.len() }), None)?;
        }
        Command::Mc(a) => {
            let mut kv: BTreeMap<String, String> = BTreeMap::new();
            if let Some(path) = &a.config {
                let text = fs::read_to_string(path).map_err(|e| Failure::File(path.clone(), Error::Io(e)))?;
                for (i, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, got '{line}'") })?;
                    kv.insert(k.trim().into(), v.trim().into());
                }
            }
            for o in &a.overrides {
                let (k, v) = o.split_once('=').ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got '{o}'")))?;
                kv.insert(k.trim().into(), v.trim().into());
            }
            if let Some(s) = a.seed {
                kv.insert("seed".into(), s.to_string());
            }
            if let Some(r) = a.replicates {
                kv.insert("replicates".into(), r.to_string());
            }
            let cfg = ScenarioConfig::from_pairs(&kv)?;
            let out = run_mc(&cfg, a.threads)?;
            write_outputs(&a.out, &cfg, &out)?;
            let rate = out.failure_rate();
            if rate > MAX_FAILURE_RATE {
                return Err(Failure::TooManyFailures(rate));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(io::stderr(), "error: {msg}");
            ExitCode::from(1)
        }
    }
}
