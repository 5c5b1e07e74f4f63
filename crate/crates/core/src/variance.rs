//! Subsampling variance of spectral means and sandwich intervals for
//! Whittle estimates.
//!
//! Blocks are cubes of side `a_n` centred on a lattice of stride `s`
//! (the integer lattice by default) and lying wholly inside the window.
//! Each block's points are shifted to the origin, which is the same as
//! re-centring the taper at the block centre and multiplying the DFT by
//! the matching phase, and its periodogram is centred with the
//! whole-window intensity estimate. With `A_k(phi)` the block's
//! integrated periodogram and `T` the set of blocks,
//!
//! `zeta = a_n^d / |T| * sum_k (A_k - mean)(A_k - mean)^T`.
//!
//! The prefactor uses the block volume `a_n^d`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dft::{intensity_hat, periodogram_grid_with};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, FrequencyGrid, PointPattern, SpacingRule, Window};
use crate::models::SpectralModel;
use crate::smoothing::{default_bandwidth, smooth_field, SmoothingKernel};
use crate::specmean::riemann_vec;
use crate::taper::Taper;
use crate::whittle::{FitResult, ShellData};

/// Condition number above which `Gamma` is reported singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsampleConfig {
    /// Block side `a_n`; `None` uses `ceil(sqrt(min A_i))`.
    pub block: Option<f64>,
    pub stride: f64,
    pub min_blocks: usize,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self { block: None, stride: 1.0, min_blocks: 20 }
    }
}

impl SubsampleConfig {
    pub fn block_side(&self, window: &Window) -> f64 {
        self.block.unwrap_or_else(|| {
            let a = window.sides().iter().cloned().fold(f64::INFINITY, f64::min);
            a.sqrt().ceil()
        })
    }
}

/// Subsampling estimate with its block bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subsample {
    /// Row-major `p x p`.
    pub zeta: Vec<f64>,
    pub p: usize,
    pub blocks: usize,
    pub block_side: f64,
}

/// Block centres `k = stride * j` with the block inside the window.
fn block_centres(window: &Window, a: f64, stride: f64) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = window
        .sides()
        .iter()
        .map(|&side| {
            let reach = (side - a) / 2.0;
            let m = ((reach + 1e-12 * side) / stride).floor() as i64;
            (-m..=m).map(|j| j as f64 * stride).collect()
        })
        .collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for ax in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ax.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}

/// Points of `pattern` inside the cube of side `a` at `centre`, shifted to the origin.
fn block_pattern(pattern: &PointPattern, centre: &[f64], a: f64) -> Result<PointPattern> {
    let d = pattern.dim();
    let coords = pattern.coords();
    let n = pattern.len();
    let h = a / 2.0;
    // points are sorted by their first coordinate
    let first = |i: usize| coords[i * d];
    let lo = partition(n, |i| first(i) < centre[0] - h);
    let hi = partition(n, |i| first(i) <= centre[0] + h);
    let mut out = Vec::new();
    for i in lo..hi {
        let x = &coords[i * d..(i + 1) * d];
        if x.iter().zip(centre).all(|(xi, c)| (xi - c).abs() <= h) {
            out.extend(x.iter().zip(centre).map(|(xi, c)| xi - c));
        }
    }
    PointPattern::from_flat(Window::cube(d, a)?, out)
}

fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Subsampling covariance of the integrated periodogram of a `p`-vector `phi`.
pub fn subsample_variance<F>(pattern: &PointPattern, p: usize, phi: F, domain: DomainSpec, taper: &Taper, cfg: &SubsampleConfig) -> Result<Subsample>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let window = pattern.window();
    let a = cfg.block_side(window);
    if !(a > 0.0 && cfg.stride > 0.0) {
        return Err(Error::InvalidArgument("block side and stride must be positive".into()));
    }
    if window.sides().iter().any(|&s| a >= s) {
        return Err(Error::WindowTooSmall { blocks: 0, required: cfg.min_blocks });
    }
    let centres = block_centres(window, a, cfg.stride);
    if centres.len() < cfg.min_blocks.max(2) {
        return Err(Error::WindowTooSmall { blocks: centres.len(), required: cfg.min_blocks.max(2) });
    }
    let d = window.dim();
    let bwin = Window::cube(d, a)?;
    let grid = FrequencyGrid::build(&bwin, domain, SpacingRule::SideLength)?;
    let lambda = intensity_hat(pattern, taper);
    let stats: Vec<Vec<f64>> = centres
        .par_iter()
        .map(|c| {
            let sub = block_pattern(pattern, c, a)?;
            let vals = periodogram_grid_with(&sub, taper, &grid, lambda);
            Ok(riemann_vec(&grid, &vals, p, &phi))
        })
        .collect::<Result<_>>()?;
    let t = stats.len() as f64;
    let mut mean = vec![0.0; p];
    for s in &stats {
        mean.iter_mut().zip(s).for_each(|(m, v)| *m += v / t);
    }
    let mut zeta = vec![0.0; p * p];
    for s in &stats {
        for i in 0..p {
            for j in 0..p {
                zeta[i * p + j] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    let pre = a.powi(d as i32) / t;
    zeta.iter_mut().for_each(|z| *z *= pre);
    Ok(Subsample { zeta, p, blocks: stats.len(), block_side: a })
}

/// Plug-in `Gamma` together with its condition number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaMatrix {
    /// Row-major `p x p`.
    pub matrix: Vec<f64>,
    pub p: usize,
    pub condition: f64,
    pub singular: bool,
}

/// Riemann sum over `grid` of
/// `(2(2 pi)^d)^{-1} [(f_hat - f) grad^2 (1/f) + grad log f grad log f^T]`
/// at `model`, with `f_hat` given on the grid.
pub fn gamma_matrix(model: &SpectralModel, f_hat: &[f64], grid: &FrequencyGrid) -> Result<GammaMatrix> {
    let p = model.params().len();
    let shells = ShellData::new(grid, f_hat);
    let mut g = vec![0.0; p * p];
    for (r2, n, s) in shells.iter() {
        let dv = model.derivatives_radial(r2)?;
        let f = dv.value;
        let resid = s - n * f;
        for i in 0..p {
            for j in 0..p {
                let gi = dv.grad[i];
                let gj = dv.grad[j];
                let inv_hess = -dv.hess[i * p + j] / (f * f) + 2.0 * gi * gj / (f * f * f);
                g[i * p + j] += resid * inv_hess + n * gi * gj / (f * f);
            }
        }
    }
    let scale = grid.cell_volume() / (2.0 * (2.0 * std::f64::consts::PI).powi(grid.dim() as i32));
    g.iter_mut().for_each(|v| *v *= scale);
    // symmetrise away rounding differences
    for i in 0..p {
        for j in 0..i {
            let m = 0.5 * (g[i * p + j] + g[j * p + i]);
            g[i * p + j] = m;
            g[j * p + i] = m;
        }
    }
    let m = DMatrix::from_row_slice(p, p, &g);
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok(GammaMatrix { matrix: g, p, condition, singular: !(condition <= MAX_CONDITION) })
}

/// Source of the spectrum estimate inside `Gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlugIn {
    /// Kernel estimate; `None` uses the default bandwidth.
    Smoothed(Option<f64>),
    /// The fitted spectrum itself, which drops the first term of `Gamma`.
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiConfig {
    pub subsample: SubsampleConfig,
    pub plug_in: PlugIn,
}

impl Default for CiConfig {
    fn default() -> Self {
        Self { subsample: SubsampleConfig::default(), plug_in: PlugIn::Smoothed(None) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhittleCi {
    pub level: f64,
    pub intervals: Vec<Interval>,
    /// Row-major `p x p` covariance of the estimate.
    pub covariance: Vec<f64>,
    pub gamma: GammaMatrix,
    pub subsample: Subsample,
}

/// Sandwich intervals `theta_i +- z_{1 - level/2} se_i` with
/// `Cov = H^{-1} zeta H^{-1} / |D_n|` and `H = 2(2 pi)^d Gamma`, where
/// `zeta` is the subsampling covariance of the integrated periodogram of
/// `grad (1/f)` at the estimate.
pub fn whittle_ci(fit: &FitResult, pattern: &PointPattern, taper: &Taper, cfg: &CiConfig, level: f64) -> Result<WhittleCi> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1) (got {level})")));
    }
    if fit.reduced {
        return Err(Error::Unsupported("intervals for the reduced thomas fit".into()));
    }
    let model = fit.model()?;
    let p = model.params().len();
    let domain = DomainSpec::new(fit.grid.d0, fit.grid.d1)?;
    let grid = FrequencyGrid::with_spacing(fit.grid.dim, fit.grid.spacing, domain)?;
    let f_hat: Vec<f64> = match cfg.plug_in {
        PlugIn::Model => grid.frequencies().map(|w| model.density(w)).collect(),
        PlugIn::Smoothed(b) => {
            let field = crate::dft::periodogram_grid(pattern, taper, &grid);
            let b = b.unwrap_or_else(|| default_bandwidth(pattern.window()));
            smooth_field(&field, &SmoothingKernel::triangular(b)?)?.values
        }
    };
    let gamma = gamma_matrix(&model, &f_hat, &grid)?;
    if gamma.singular {
        return Err(Error::Singular(gamma.condition));
    }
    if !model.family().has_gradient() {
        return Err(Error::Unsupported("gradient unavailable for quadrature-defined spectrum".into()));
    }
    let phi = |w: &[f64], out: &mut [f64]| {
        let dv = model.derivatives(w).expect("family has derivatives");
        let f2 = dv.value * dv.value;
        out.iter_mut().zip(&dv.grad).for_each(|(o, g)| *o = -g / f2);
    };
    let sub = subsample_variance(pattern, p, phi, domain, taper, &cfg.subsample)?;

    let two_pi_d = 2.0 * (2.0 * std::f64::consts::PI).powi(model.dim() as i32);
    let h = DMatrix::from_row_slice(p, p, &gamma.matrix) * two_pi_d;
    let hinv = h.try_inverse().ok_or(Error::Singular(gamma.condition))?;
    let zeta = DMatrix::from_row_slice(p, p, &sub.zeta);
    let cov = &hinv * zeta * &hinv / pattern.window().volume();
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - level / 2.0);
    let mut intervals = Vec::with_capacity(p);
    for i in 0..p {
        let v = cov[(i, i)];
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InconsistentVariance);
        }
        let se = v.sqrt();
        let est = fit.theta[i];
        intervals.push(Interval { name: fit.param_names[i].clone(), estimate: est, se, lower: est - z * se, upper: est + z * se });
    }
    let covariance = (0..p * p).map(|k| cov[(k / p, k % p)]).collect();
    Ok(WhittleCi { level, intervals, covariance, gamma, subsample: sub })
}

/// Smallest eigenvalue of a symmetric row-major matrix.
pub fn min_eigenvalue(m: &[f64], p: usize) -> f64 {
    SymmetricEigen::new(DMatrix::from_row_slice(p, p, m)).eigenvalues.min()
}
