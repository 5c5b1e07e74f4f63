//! Whittle likelihood on the frequency lattice and its minimisation.
//!
//! All families are isotropic, so grid points are grouped by `|k|^2`
//! and the spectrum is evaluated once per shell.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::dft::periodogram_grid;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, FrequencyGrid, PeriodogramField, PointPattern, SpacingRule, Window};
use crate::models::{gdpp_rho2_bound, Family, SpectralModel};
use crate::optim::{nelder_mead, NelderMeadConfig, NelderMeadResult};
use crate::rng;
use crate::taper::Taper;

/// Spectra below this are treated as infeasible.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub xtol: f64,
    pub ftol: f64,
    /// Per-parameter box; `None` uses [`default_box`].
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    pub starts: usize,
    pub seed: u64,
    /// Fresh-simplex restarts from each start's optimum.
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iterations: 4000, xtol: 1e-8, ftol: 1e-12, bounds: None, starts: 4, seed: 0, restarts: 2 }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.xtol > 0.0 && self.ftol > 0.0) {
            return Err(Error::InvalidArgument("optimizer tolerances must be positive".into()));
        }
        if self.starts == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument("optimizer needs at least one start and one iteration".into()));
        }
        Ok(())
    }
}

/// Default search box for `family` in dimension `dim`.
pub fn default_box(family: Family, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = match family {
        Family::Poisson => (vec![1e-3], vec![1e3]),
        Family::Thomas => (vec![1e-3, 1e-2, 1e-4], vec![10.0, 1e3, 25.0]),
        Family::Matern => (vec![1e-3, 1e-2, 1e-2], vec![10.0, 1e3, 10.0]),
        // the joint constraint rho2 <= bound(lambda) is enforced by the objective
        Family::Gdpp => (vec![1e-3, 1e-4], vec![1e3, gdpp_rho2_bound(1e-3, dim)]),
        Family::Hawkes => (vec![1e-3, 1e-3, 1e-3], vec![1e2, 1e2, 1e2]),
        Family::Lgcp => return Err(Error::Unsupported("lgcp is not fitted by whittle likelihood".into())),
    };
    Ok(b)
}

/// Per-start outcome kept as the optimizer trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub dim: usize,
    pub spacing: f64,
    pub d0: f64,
    pub d1: f64,
    pub n_freq: usize,
}

impl GridInfo {
    fn of(grid: &FrequencyGrid) -> Self {
        let dom = grid.domain();
        Self { dim: grid.dim(), spacing: grid.spacing(), d0: dom.d0, d1: dom.d1, n_freq: grid.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub family: Family,
    pub param_names: Vec<String>,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lambda_hat: f64,
    /// First-order intensity implied by `theta`; for the reduced Thomas fit
    /// this is `lambda_hat` by construction.
    pub intensity: f64,
    pub reduced: bool,
    pub grid: GridInfo,
    pub trace: Vec<StartOutcome>,
}

impl FitResult {
    pub fn model(&self) -> Result<SpectralModel> {
        SpectralModel::new(self.family, self.theta.clone(), self.grid.dim)
    }
}

/// Periodogram (or spectrum) values aggregated over isotropic shells.
#[derive(Debug, Clone)]
pub struct ShellData {
    dim: usize,
    r2: Vec<f64>,
    count: Vec<f64>,
    sum: Vec<f64>,
}

impl ShellData {
    pub fn new(grid: &FrequencyGrid, values: &[f64]) -> Self {
        let step = 2.0 * PI / grid.spacing();
        let mut shells: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (n, &v) in grid.lattice_norms2().iter().zip(values) {
            let e = shells.entry(*n).or_insert((0.0, 0.0));
            e.0 += 1.0;
            e.1 += v;
        }
        let mut out = Self { dim: grid.dim(), r2: vec![], count: vec![], sum: vec![] };
        for (n, (c, s)) in shells {
            out.r2.push(step * step * n as f64);
            out.count.push(c);
            out.sum.push(s);
        }
        out
    }

    /// `(|w|^2, count, sum)` per shell, in increasing radius.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.r2.iter().zip(&self.count).zip(&self.sum).map(|((&r, &c), &s)| (r, c, s))
    }

    pub fn from_field(field: &PeriodogramField) -> Self {
        Self::new(&field.grid, &field.values)
    }

    /// Shells of a model spectrum, evaluated once per shell.
    pub fn from_model(model: &SpectralModel, grid: &FrequencyGrid) -> Self {
        let mut s = Self::new(grid, &vec![0.0; grid.len()]);
        for ((sum, &c), &r2) in s.sum.iter_mut().zip(&s.count).zip(&s.r2) {
            *sum = c * model.density_radial(r2);
        }
        s
    }

    /// `sum_k [I_k / f_k + log f_k]`, or `+inf` when `f` is infeasible or
    /// falls below [`SPECTRUM_FLOOR`].
    pub fn objective(&self, model: &SpectralModel) -> f64 {
        let mut acc = 0.0;
        for ((&r2, &c), &s) in self.r2.iter().zip(&self.count).zip(&self.sum) {
            let f = model.density_radial(r2);
            if !(f >= SPECTRUM_FLOOR) || !f.is_finite() {
                return f64::INFINITY;
            }
            acc += s / f + c * f.ln();
        }
        acc
    }

    fn objective_at(&self, family: Family, theta: &[f64]) -> f64 {
        match SpectralModel::new(family, theta.to_vec(), self.dim) {
            Ok(m) => self.objective(&m),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Riemann-discretised Whittle objective at `theta`.
pub fn whittle_objective(field: &PeriodogramField, family: Family, theta: &[f64]) -> f64 {
    ShellData::from_field(field).objective_at(family, theta)
}

/// Riemann spectral divergence between `truth` and `family(theta)`.
pub fn spectral_divergence(truth: &SpectralModel, family: Family, theta: &[f64], grid: &FrequencyGrid) -> f64 {
    ShellData::from_model(truth, grid).objective_at(family, theta)
}

/// How optimizer coordinates map to model parameters.
enum Param {
    Full(Family),
    /// Thomas with `alpha = lambda / kappa`; coordinates are `(kappa, sigma2)`.
    ReducedThomas(f64),
}

impl Param {
    fn theta(&self, y: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        match *self {
            Param::Full(_) => x,
            Param::ReducedThomas(lam) => vec![x[0], lam / x[0], x[1]],
        }
    }

    fn family(&self) -> Family {
        match *self {
            Param::Full(f) => f,
            Param::ReducedThomas(_) => Family::Thomas,
        }
    }
}

fn latin_starts(lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut r = rng::stream(seed, 0);
    let p = lo.len();
    let mut starts = vec![vec![0.0; p]; n];
    for j in 0..p {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        for (s, &cell) in starts.iter_mut().zip(&perm) {
            let u = (cell as f64 + r.random::<f64>()) / n as f64;
            s[j] = lo[j] + u * (hi[j] - lo[j]);
        }
    }
    starts
}

fn minimize(data: &ShellData, param: Param, bounds: (Vec<f64>, Vec<f64>), cfg: &OptimizerConfig) -> Result<(Vec<f64>, f64, Vec<StartOutcome>)> {
    cfg.validate()?;
    let (lo, hi) = bounds;
    if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(*a > 0.0 && a < b)) {
        return Err(Error::InvalidArgument("parameter box must satisfy 0 < lower < upper".into()));
    }
    let ylo: Vec<f64> = lo.iter().map(|v| v.ln()).collect();
    let yhi: Vec<f64> = hi.iter().map(|v| v.ln()).collect();
    let family = param.family();
    let obj = |y: &[f64]| data.objective_at(family, &param.theta(y));
    let nm = NelderMeadConfig { max_iterations: cfg.max_iterations, xtol: cfg.xtol, ftol: cfg.ftol, initial_step: 0.1 };
    let mut trace = Vec::with_capacity(cfg.starts);
    for y0 in latin_starts(&ylo, &yhi, cfg.starts, cfg.seed) {
        let mut r = nelder_mead(obj, &y0, &ylo, &yhi, &nm);
        let mut iterations = r.iterations;
        for _ in 0..cfg.restarts {
            let again = nelder_mead(obj, &r.x, &ylo, &yhi, &NelderMeadConfig { initial_step: 0.02, ..nm });
            iterations += again.iterations;
            let gain = r.f - again.f;
            if again.f <= r.f {
                r = NelderMeadResult { iterations, ..again };
            }
            if !(gain > cfg.ftol * r.f.abs()) {
                break;
            }
        }
        trace.push(StartOutcome { theta: param.theta(&r.x), objective: r.f, iterations, converged: r.converged });
    }
    // lowest objective, then lowest start index
    let best = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one start");
    if !trace[best].objective.is_finite() {
        return Err(Error::InvalidArgument("no feasible parameter found in the search box".into()));
    }
    Ok((trace[best].theta.clone(), trace[best].objective, trace))
}

fn result(family: Family, grid: &FrequencyGrid, lambda_hat: f64, reduced: bool, theta: Vec<f64>, objective: f64, trace: Vec<StartOutcome>) -> Result<FitResult> {
    let best = trace.iter().find(|s| s.theta == theta).expect("winner is in the trace");
    let (iterations, converged) = (best.iterations, best.converged);
    let intensity = if reduced { lambda_hat } else { SpectralModel::new(family, theta.clone(), grid.dim())?.intensity() };
    Ok(FitResult {
        family,
        param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
        theta,
        objective,
        iterations,
        converged,
        lambda_hat,
        intensity,
        reduced,
        grid: GridInfo::of(grid),
        trace,
    })
}

fn check_family(family: Family, dim: usize) -> Result<()> {
    if family == Family::Hawkes && dim != 1 {
        return Err(Error::InvalidModel("hawkes is defined on the line only (dim 1)".into()));
    }
    Ok(())
}

/// Fit `family` to a precomputed periodogram field.
pub fn fit_field(field: &PeriodogramField, family: Family, cfg: &OptimizerConfig) -> Result<FitResult> {
    check_family(family, field.grid.dim())?;
    let bounds = match &cfg.bounds {
        Some(b) => b.clone(),
        None => default_box(family, field.grid.dim())?,
    };
    let data = ShellData::from_field(field);
    let (theta, obj, trace) = minimize(&data, Param::Full(family), bounds, cfg)?;
    result(family, &field.grid, field.lambda_hat, false, theta, obj, trace)
}

fn field_for(pattern: &PointPattern, domain: DomainSpec, taper: &Taper, rule: SpacingRule) -> Result<PeriodogramField> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let grid = FrequencyGrid::build(pattern.window(), domain, rule)?;
    Ok(periodogram_grid(pattern, taper, &grid))
}

/// Whittle estimate of `family` from a point pattern, with `Omega` from `rule`.
pub fn fit(pattern: &PointPattern, family: Family, domain: DomainSpec, taper: &Taper, rule: SpacingRule, cfg: &OptimizerConfig) -> Result<FitResult> {
    fit_field(&field_for(pattern, domain, taper, rule)?, family, cfg)
}

/// Reduced Thomas fit on a field: `alpha = lambda_hat / kappa`.
pub fn fit_reduced_tcp_field(field: &PeriodogramField, cfg: &OptimizerConfig) -> Result<FitResult> {
    let lam = field.lambda_hat;
    if !(lam > 0.0) {
        return Err(Error::EmptyPattern);
    }
    let bounds = match &cfg.bounds {
        Some((lo, hi)) if lo.len() == 3 => (vec![lo[0], lo[2]], vec![hi[0], hi[2]]),
        Some(b) => b.clone(),
        None => {
            let (lo, hi) = default_box(Family::Thomas, field.grid.dim())?;
            (vec![lo[0], lo[2]], vec![hi[0], hi[2]])
        }
    };
    let data = ShellData::from_field(field);
    let (theta, obj, trace) = minimize(&data, Param::ReducedThomas(lam), bounds, cfg)?;
    result(Family::Thomas, &field.grid, lam, true, theta, obj, trace)
}

pub fn fit_reduced_tcp(pattern: &PointPattern, domain: DomainSpec, taper: &Taper, rule: SpacingRule, cfg: &OptimizerConfig) -> Result<FitResult> {
    fit_reduced_tcp_field(&field_for(pattern, domain, taper, rule)?, cfg)
}

/// Minimiser of the spectral divergence from `truth` over `family`
/// on the lattice that a window of this size would use.
pub fn best_fit_oracle(truth: &SpectralModel, family: Family, domain: DomainSpec, window: &Window, rule: SpacingRule, cfg: &OptimizerConfig) -> Result<FitResult> {
    check_family(family, truth.dim())?;
    let grid = FrequencyGrid::build(window, domain, rule)?;
    let bounds = match &cfg.bounds {
        Some(b) => b.clone(),
        None => default_box(family, grid.dim())?,
    };
    let data = ShellData::from_model(truth, &grid);
    let (theta, obj, trace) = minimize(&data, Param::Full(family), bounds, cfg)?;
    result(family, &grid, truth.intensity(), false, theta, obj, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(side: f64) -> FrequencyGrid {
        FrequencyGrid::with_spacing(2, side, DomainSpec::d_2pi()).unwrap()
    }

    fn synthetic(model: &SpectralModel, side: f64) -> PeriodogramField {
        let g = grid(side);
        let values = g.frequencies().map(|w| model.density(w)).collect();
        PeriodogramField::new(g, values, Taper::default(), Window::cube(2, side).unwrap(), model.intensity()).unwrap()
    }

    #[test]
    fn shells_match_naive_sum() {
        let m = SpectralModel::parse("thomas:kappa=0.2,alpha=10,sigma2=0.25", 2).unwrap();
        let f = synthetic(&m, 20.0);
        let th = SpectralModel::parse("thomas:kappa=0.3,alpha=5,sigma2=0.1", 2).unwrap();
        let naive: f64 = f
            .grid
            .frequencies()
            .zip(&f.values)
            .map(|(w, i)| {
                let v = th.density(w);
                i / v + v.ln()
            })
            .sum();
        let fast = whittle_objective(&f, Family::Thomas, th.params());
        assert!((naive - fast).abs() < 1e-10 * naive.abs());
    }

    #[test]
    fn poisson_scan() {
        let m = SpectralModel::parse("poisson:lambda=1.7", 2).unwrap();
        let f = synthetic(&m, 10.0);
        let at = |l: f64| whittle_objective(&f, Family::Poisson, &[l]);
        let best = (1..=300).map(|i| i as f64 * 0.01).min_by(|a, b| at(*a).total_cmp(&at(*b))).unwrap();
        assert!((best - 1.7).abs() < 1e-9);
    }

    #[test]
    fn zero_field_and_sentinel() {
        let g = grid(10.0);
        let n = g.len();
        let f = PeriodogramField::new(g, vec![0.0; n], Taper::default(), Window::cube(2, 10.0).unwrap(), 0.0).unwrap();
        let v = whittle_objective(&f, Family::Poisson, &[2.0]);
        let want = n as f64 * (2.0 / (4.0 * PI * PI)).ln();
        assert!((v - want).abs() < 1e-9 * want.abs());
        assert_eq!(whittle_objective(&f, Family::Poisson, &[-1.0]), f64::INFINITY);
        assert_eq!(whittle_objective(&f, Family::Gdpp, &[1.0, 0.5]), f64::INFINITY);
    }

    #[test]
    fn exact_spectrum_fixed_point() {
        for spec in ["thomas:kappa=0.2,alpha=10,sigma2=0.25", "gdpp:lambda=1,rho2=0.3025", "matern:kappa=0.3,alpha=5,r=0.5"] {
            let m = SpectralModel::parse(spec, 2).unwrap();
            let f = synthetic(&m, 20.0);
            let r = fit_field(&f, m.family(), &OptimizerConfig::default()).unwrap();
            for (a, b) in r.theta.iter().zip(m.params()) {
                assert!((a / b - 1.0).abs() < 1e-5, "{spec}: {:?}", r.theta);
            }
            assert!(r.trace.iter().all(|s| s.objective >= r.objective));
        }
    }

    #[test]
    fn reduced_constraint() {
        let m = SpectralModel::parse("thomas:kappa=0.2,alpha=10,sigma2=0.25", 2).unwrap();
        let mut f = synthetic(&m, 20.0);
        f.lambda_hat = 2.1;
        let r = fit_reduced_tcp_field(&f, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.intensity, 2.1);
        assert!((r.theta[0] * r.theta[1] / 2.1 - 1.0).abs() < 1e-14);
        let full = fit_field(&f, Family::Thomas, &OptimizerConfig::default()).unwrap();
        assert!(r.objective >= full.objective);
    }

    #[test]
    fn deterministic() {
        let m = SpectralModel::parse("thomas:kappa=0.2,alpha=10,sigma2=0.25", 2).unwrap();
        let f = synthetic(&m, 10.0);
        let cfg = OptimizerConfig { seed: 9, ..Default::default() };
        assert_eq!(fit_field(&f, Family::Thomas, &cfg).unwrap(), fit_field(&f, Family::Thomas, &cfg).unwrap());
    }

    #[test]
    fn lgcp_oracle_a20() {
        let truth = SpectralModel::parse("lgcp:mu=-0.5,s2=2,scale=1", 2).unwrap();
        let w = Window::cube(2, 20.0).unwrap();
        let cfg = OptimizerConfig::default();
        let a = best_fit_oracle(&truth, Family::Thomas, DomainSpec::d_2pi(), &w, SpacingRule::SideLength, &cfg).unwrap();
        let b = best_fit_oracle(&truth, Family::Thomas, DomainSpec::d_5pi(), &w, SpacingRule::SideLength, &cfg).unwrap();
        eprintln!("{:?} {:?}", a.theta, b.theta);
        assert!((a.theta[0] - 0.314).abs() < 0.01 && (a.theta[1] - 7.743).abs() < 0.05 && (a.theta[2] - 0.176).abs() < 0.01);
        assert!((b.theta[0] - 0.243).abs() < 0.01 && (b.theta[1] - 7.379).abs() < 0.05 && (b.theta[2] - 0.099).abs() < 0.01);
    }
}
