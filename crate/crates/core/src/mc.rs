//! Monte Carlo replication harness.
//!
//! Replicate `i` simulates from stream `(seed, i)` and fits every
//! requested estimator, so results do not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, SpacingRule, Window};
use crate::models::{simulate_with_rng, Family, SpectralModel};
use crate::rng;
use crate::taper::Taper;
use crate::whittle::{best_fit_oracle, fit, fit_reduced_tcp, OptimizerConfig};

/// Failure fraction above which a run is reported as failed.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Whittle,
    WhittleReduced,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Whittle => "whittle",
            Estimator::WhittleReduced => "whittle_reduced",
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "whittle" => Ok(Estimator::Whittle),
            "whittle_reduced" | "reduced" => Ok(Estimator::WhittleReduced),
            other => Err(Error::InvalidArgument(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: SpectralModel,
    /// Family fitted by `whittle`; the reduced estimator always fits Thomas.
    pub family: Family,
    pub window: Window,
    pub taper: Taper,
    pub domain: DomainSpec,
    pub spacing: SpacingRule,
    pub estimators: Vec<Estimator>,
    pub replicates: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

impl ScenarioConfig {
    pub fn new(model: SpectralModel, side: f64) -> Result<Self> {
        let window = Window::cube(model.dim(), side)?;
        Ok(Self {
            family: model.family(),
            model,
            window,
            taper: Taper::default(),
            domain: DomainSpec::d_2pi(),
            spacing: SpacingRule::SideLength,
            estimators: vec![Estimator::Whittle],
            replicates: 100,
            seed: 1,
            optimizer: OptimizerConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimator requested".into()));
        }
        if self.model.dim() != self.window.dim() {
            return Err(Error::DimensionMismatch { expected: self.window.dim(), got: self.model.dim() });
        }
        Ok(())
    }

    /// Parse flat `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, got '{line}'") })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_pairs(&kv)
    }

    /// Build from key/value pairs (config file merged with CLI overrides).
    pub fn from_pairs(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| kv.get(k).map(String::as_str);
        let dim: usize = parse_num(get("dim").unwrap_or("2"), "dim")?;
        let model = SpectralModel::parse(get("model").ok_or_else(|| Error::InvalidArgument("missing key 'model'".into()))?, dim)?;
        let side: f64 = parse_num(get("window").unwrap_or("40"), "window")?;
        let mut cfg = Self::new(model, side)?;
        if let Some(f) = get("family") {
            cfg.family = f.parse()?;
        }
        if let Some(t) = get("taper") {
            cfg.taper = t.parse()?;
        }
        if let Some(d) = get("domain") {
            cfg.domain = parse_domain(d)?;
        }
        if let Some(s) = get("spacing") {
            cfg.spacing = parse_spacing(s)?;
        }
        if let Some(e) = get("estimators") {
            cfg.estimators = e.split(',').map(str::parse).collect::<Result<_>>()?;
        }
        if let Some(r) = get("replicates") {
            cfg.replicates = parse_num(r, "replicates")?;
        }
        if let Some(s) = get("seed") {
            cfg.seed = parse_num(s, "seed")?;
        }
        if let Some(s) = get("starts") {
            cfg.optimizer.starts = parse_num(s, "starts")?;
        }
        let known = ["dim", "model", "window", "family", "taper", "domain", "spacing", "estimators", "replicates", "seed", "starts"];
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown config key '{k}'")));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad value for {what}: '{s}'")))
}

/// `d0,d1`, or the shorthands `2pi` and `5pi`.
pub fn parse_domain(s: &str) -> Result<DomainSpec> {
    match s.trim() {
        "2pi" | "d2pi" => Ok(DomainSpec::d_2pi()),
        "5pi" | "d5pi" => Ok(DomainSpec::d_5pi()),
        other => {
            let (a, b) = other
                .split_once(',')
                .ok_or_else(|| Error::InvalidDomain(format!("expected d0,d1 (got '{other}')")))?;
            DomainSpec::new(parse_num(a, "d0")?, parse_num(b, "d1")?)
        }
    }
}

/// `A` (Omega equal to the side), `A/2`, or an explicit number.
pub fn parse_spacing(s: &str) -> Result<SpacingRule> {
    match s.trim() {
        "A" | "side" => Ok(SpacingRule::SideLength),
        "A/2" | "half" => Ok(SpacingRule::HalfSide),
        other => Ok(SpacingRule::Explicit(parse_num(other, "spacing")?)),
    }
}

fn fmt_domain(d: DomainSpec) -> String {
    format!("{},{}", d.d0, d.d1)
}

fn fmt_spacing(s: SpacingRule) -> String {
    match s {
        SpacingRule::SideLength => "A".into(),
        SpacingRule::HalfSide => "A/2".into(),
        SpacingRule::Explicit(v) => v.to_string(),
    }
}

impl fmt::Display for ScenarioConfig {
    /// The effective configuration in the same `key=value` form `parse` reads.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = self.window.cube_side().unwrap_or(self.window.sides()[0]);
        writeln!(f, "dim={}", self.model.dim())?;
        writeln!(f, "model={}", self.model)?;
        writeln!(f, "family={}", self.family)?;
        writeln!(f, "window={side}")?;
        writeln!(f, "taper={}", self.taper)?;
        writeln!(f, "domain={}", fmt_domain(self.domain))?;
        writeln!(f, "spacing={}", fmt_spacing(self.spacing))?;
        let est: Vec<&str> = self.estimators.iter().map(|e| e.name()).collect();
        writeln!(f, "estimators={}", est.join(","))?;
        writeln!(f, "replicates={}", self.replicates)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "starts={}", self.optimizer.starts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub estimator: Estimator,
    pub n_points: usize,
    pub outcome: std::result::Result<Fitted, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub lambda_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub replicate: usize,
    pub estimator: Estimator,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub param: String,
    pub reference: Option<f64>,
    pub mean: f64,
    pub bias: Option<f64>,
    /// `None` with fewer than two successful replicates.
    pub se: Option<f64>,
    pub mean_seconds: f64,
    pub ok: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOutput {
    pub records: Vec<ReplicateRecord>,
    pub timings: Vec<Timing>,
    pub summary: Vec<SummaryRow>,
    /// Best-fitting parameters when the fitted family differs from the truth.
    pub oracle: Option<Vec<f64>>,
}

impl McOutput {
    pub fn failure_rate(&self) -> f64 {
        let bad = self.records.iter().filter(|r| r.outcome.is_err()).count();
        bad as f64 / self.records.len().max(1) as f64
    }
}

fn run_one(cfg: &ScenarioConfig, i: usize) -> Vec<(ReplicateRecord, Timing)> {
    let mut r = rng::stream(cfg.seed, i as u64);
    let pattern = simulate_with_rng(&cfg.model, &cfg.window, &mut r);
    cfg.estimators
        .iter()
        .map(|&est| {
            let t0 = Instant::now();
            let outcome = match &pattern {
                Err(e) => Err(format!("simulation: {e}")),
                Ok(p) => {
                    let res = match est {
                        Estimator::Whittle => fit(p, cfg.family, cfg.domain, &cfg.taper, cfg.spacing, &cfg.optimizer),
                        Estimator::WhittleReduced => fit_reduced_tcp(p, cfg.domain, &cfg.taper, cfg.spacing, &cfg.optimizer),
                    };
                    res.map(|f| Fitted { theta: f.theta, objective: f.objective, converged: f.converged, lambda_hat: f.lambda_hat })
                        .map_err(|e| e.to_string())
                }
            };
            let seconds = t0.elapsed().as_secs_f64();
            let n_points = pattern.as_ref().map(|p| p.len()).unwrap_or(0);
            (ReplicateRecord { replicate: i, estimator: est, n_points, outcome }, Timing { replicate: i, estimator: est, seconds })
        })
        .collect()
}

/// Run every replicate on a pool of `threads` workers (`None`: rayon default).
pub fn run_mc(cfg: &ScenarioConfig, threads: Option<usize>) -> Result<McOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<(ReplicateRecord, Timing)>> = pool.install(|| (0..cfg.replicates).into_par_iter().map(|i| run_one(cfg, i)).collect());
    let (records, timings): (Vec<_>, Vec<_>) = rows.into_iter().flatten().unzip();

    let oracle = if cfg.family != cfg.model.family() && cfg.estimators.contains(&Estimator::Whittle) {
        Some(best_fit_oracle(&cfg.model, cfg.family, cfg.domain, &cfg.window, cfg.spacing, &cfg.optimizer)?.theta)
    } else {
        None
    };
    let summary = summarise(cfg, &records, &timings, oracle.as_deref());
    Ok(McOutput { records, timings, summary, oracle })
}

fn summarise(cfg: &ScenarioConfig, records: &[ReplicateRecord], timings: &[Timing], oracle: Option<&[f64]>) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &est in &cfg.estimators {
        let family = match est {
            Estimator::Whittle => cfg.family,
            Estimator::WhittleReduced => Family::Thomas,
        };
        let reference: Option<Vec<f64>> = if family == cfg.model.family() {
            Some(cfg.model.params().to_vec())
        } else if est == Estimator::Whittle {
            oracle.map(<[f64]>::to_vec)
        } else {
            None
        };
        let ok: Vec<&Fitted> = records.iter().filter(|r| r.estimator == est).filter_map(|r| r.outcome.as_ref().ok()).collect();
        let failed = records.iter().filter(|r| r.estimator == est && r.outcome.is_err()).count();
        let secs: Vec<f64> = timings.iter().filter(|t| t.estimator == est).map(|t| t.seconds).collect();
        let mean_seconds = secs.iter().sum::<f64>() / secs.len().max(1) as f64;
        for (j, name) in family.param_names().iter().enumerate() {
            let xs: Vec<f64> = ok.iter().map(|f| f.theta[j]).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let se = (xs.len() >= 2).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
            let refv = reference.as_ref().map(|r| r[j]);
            out.push(SummaryRow {
                estimator: est,
                param: name.to_string(),
                reference: refv,
                mean,
                bias: refv.map(|r| mean - r),
                se,
                mean_seconds,
                ok: ok.len(),
                failed,
            });
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into())
}

/// Write `config.echo`, `replicates.csv`, `timings.csv` and `summary.csv`.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, out: &McOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.echo"), cfg.to_string())?;

    let mut rep = fs::File::create(dir.join("replicates.csv"))?;
    let width = cfg.family.n_params().max(3);
    let cols: Vec<String> = (1..=width).map(|j| format!("theta{j}")).collect();
    writeln!(rep, "replicate,estimator,status,n_points,lambda_hat,objective,converged,{},reason", cols.join(","))?;
    for r in &out.records {
        match &r.outcome {
            Ok(f) => {
                let mut th: Vec<String> = f.theta.iter().map(|v| format!("{v:.16e}")).collect();
                th.resize(width, String::new());
                writeln!(
                    rep,
                    "{},{},ok,{},{:.16e},{:.16e},{},{},",
                    r.replicate,
                    r.estimator.name(),
                    r.n_points,
                    f.lambda_hat,
                    f.objective,
                    f.converged,
                    th.join(",")
                )?;
            }
            Err(reason) => {
                let blanks = vec![String::new(); width].join(",");
                writeln!(rep, "{},{},failed,{},,,,{},\"{}\"", r.replicate, r.estimator.name(), r.n_points, blanks, reason.replace('"', "'"))?;
            }
        }
    }

    let mut tim = fs::File::create(dir.join("timings.csv"))?;
    writeln!(tim, "replicate,estimator,seconds")?;
    for t in &out.timings {
        writeln!(tim, "{},{},{:.6}", t.replicate, t.estimator.name(), t.seconds)?;
    }

    let mut sum = fs::File::create(dir.join("summary.csv"))?;
    writeln!(sum, "estimator,param,reference,mean,bias,se,mean_seconds,ok,failed,failure_rate")?;
    for s in &out.summary {
        let rate = s.failed as f64 / (s.ok + s.failed).max(1) as f64;
        writeln!(
            sum,
            "{},{},{},{:.6},{},{},{:.6},{},{},{:.4}",
            s.estimator.name(),
            s.param,
            opt(s.reference),
            s.mean,
            opt(s.bias),
            opt(s.se),
            s.mean_seconds,
            s.ok,
            s.failed,
            rate
        )?;
    }
    Ok(())
}
