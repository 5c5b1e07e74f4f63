//! Intensity-reweighted DFT, periodogram and pseudo-spectrum for processes
//! with a known, spatially varying first-order intensity.
//!
//! The intensity is given in rescaled coordinates `u = x / A` on the unit
//! cube. The taper-intensity moment `H_{h^2/lambda,1}` is read as
//! `int_{[-1/2,1/2]^d} h(u)^2 / lambda(u) du`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::dft::{bias_grid, dft_grid_weighted};
use crate::error::{Error, Result};
use crate::geometry::{FrequencyGrid, PointPattern, Window};
use crate::quad::{self, QuadConfig};
use crate::taper::{Taper, TaperKind};

type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Known intensity `lambda(u)` on the unit cube with bounds
/// `0 < min <= lambda(u) <= max`.
#[derive(Clone)]
pub struct IntensityField {
    eval: Eval,
    min: f64,
    max: f64,
}

impl fmt::Debug for IntensityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntensityField").field("min", &self.min).field("max", &self.max).finish()
    }
}

impl IntensityField {
    /// `min` and `max` must bound the function on the unit cube.
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && max.is_finite()) {
            return Err(Error::InvalidArgument(format!("intensity bounds must satisfy 0 < min <= max (got {min}, {max})")));
        }
        Ok(Self { eval: Arc::new(f), min, max })
    }

    pub fn constant(lambda: f64) -> Result<Self> {
        Self::from_fn(move |_| lambda, lambda, lambda)
    }

    /// `lambda(u) = b0 + b . u`, positive on the unit cube.
    pub fn linear(b0: f64, b: Vec<f64>) -> Result<Self> {
        let spread: f64 = b.iter().map(|v| v.abs() / 2.0).sum();
        Self::from_fn(move |u| b0 + b.iter().zip(u).map(|(c, x)| c * x).sum::<f64>(), b0 - spread, b0 + spread)
    }

    pub fn at(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Intensity at a point of `window`.
    pub fn at_point(&self, window: &Window, x: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(window.sides()).map(|(xi, a)| xi / a).collect();
        self.at(&u)
    }
}

/// Weights `h(x/A) / lambda(x/A)` in canonical point order.
fn ir_weights(pattern: &PointPattern, taper: &Taper, intensity: &IntensityField) -> Result<Vec<f64>> {
    let w = pattern.window();
    pattern
        .points()
        .enumerate()
        .map(|(i, x)| {
            let u: Vec<f64> = x.iter().zip(w.sides()).map(|(xi, a)| xi / a).collect();
            let l = intensity.at(&u);
            if !(l > 0.0) {
                return Err(Error::InvalidArgument(format!("intensity {l} is not positive at point {i}")));
            }
            Ok(taper.value(&u) / l)
        })
        .collect()
}

/// `J^IR(w) = C sum_x h(x/A) / lambda(x/A) exp(-i x.w)`.
pub fn ir_dft(pattern: &PointPattern, taper: &Taper, intensity: &IntensityField, omega: &[f64]) -> Result<Complex64> {
    if omega.len() != pattern.dim() {
        return Err(Error::DimensionMismatch { expected: pattern.dim(), got: omega.len() });
    }
    let weights = ir_weights(pattern, taper, intensity)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, h) in pattern.points().zip(&weights) {
        let phase: f64 = x.iter().zip(omega).map(|(a, b)| a * b).sum();
        let (s, c) = phase.sin_cos();
        acc += Complex64::new(h * c, -h * s);
    }
    Ok(acc * taper.dft_scale(pattern.window()))
}

/// `|J^IR(w) - c_{h,n}(w)|^2`.
pub fn ir_periodogram(pattern: &PointPattern, taper: &Taper, intensity: &IntensityField, omega: &[f64]) -> Result<f64> {
    let j = ir_dft(pattern, taper, intensity, omega)?;
    Ok((j - taper.bias_factor(pattern.window(), omega)).norm_sqr())
}

/// IR-periodogram on every grid frequency.
pub fn ir_periodogram_grid(pattern: &PointPattern, taper: &Taper, intensity: &IntensityField, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    let weights = ir_weights(pattern, taper, intensity)?;
    let scale = taper.dft_scale(pattern.window());
    let raw = dft_grid_weighted(pattern, &weights, grid);
    let bias = bias_grid(taper, pattern.window(), grid);
    Ok(raw.iter().zip(&bias).map(|(j, c)| (j * scale - c).norm_sqr()).collect())
}

/// `int_{[-1/2,1/2]^d} h(u)^2 / lambda(u) du` by nested adaptive quadrature.
pub fn taper_intensity_moment(taper: &Taper, intensity: &IntensityField, dim: usize) -> f64 {
    let breaks = match taper.kind() {
        TaperKind::Uniform => vec![-0.5, 0.5],
        TaperKind::Smooth { a } => vec![-0.5, -0.5 + a, 0.5 - a, 0.5],
    };
    let cfg = QuadConfig { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 400 };
    fn nest(level: usize, u: &[f64], dim: usize, taper: &Taper, intensity: &IntensityField, breaks: &[f64], cfg: QuadConfig) -> f64 {
        if level == dim {
            let h = taper.value(u);
            return h * h / intensity.at(u);
        }
        let f = |x: f64| {
            let mut v = u.to_vec();
            v.push(x);
            nest(level + 1, &v, dim, taper, intensity, breaks, cfg)
        };
        quad::integrate_pieces(f, breaks, cfg).value
    }
    nest(0, &[], dim, taper, intensity, &breaks, cfg)
}

/// Pseudo-spectrum `(2 pi)^{-d} H_{h^2/lambda,1} / H_{h,2} + F^{-1}(l2)(w)`
/// for an isotropic reweighted covariance `l2(r)` negligible beyond `range`.
pub fn ir_psd(ell2: impl Fn(f64) -> f64, range: f64, taper: &Taper, intensity: &IntensityField, omega: &[f64]) -> f64 {
    let d = omega.len();
    let c = (2.0 * std::f64::consts::PI).powi(-(d as i32));
    let base = c * taper_intensity_moment(taper, intensity, d) / taper.moment(2, d);
    let w = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
    base + c * quad::radial_fourier(ell2, w, d, range / 60.0, range)
}

/// Inhomogeneous Poisson process on `window` with intensity `lambda(x/A)`,
/// by thinning a homogeneous process at the upper bound.
pub fn simulate_inhomogeneous<R: Rng + ?Sized>(intensity: &IntensityField, window: &Window, rng: &mut R) -> Result<PointPattern> {
    use rand_distr::{Distribution, Poisson};
    let mean = intensity.max() * window.volume();
    let n = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::Simulation(e.to_string()))?.sample(rng) as u64
    } else {
        0
    };
    let d = window.dim();
    let mut coords = Vec::new();
    let mut x = vec![0.0; d];
    for _ in 0..n {
        for (xi, a) in x.iter_mut().zip(window.sides()) {
            *xi = (rng.random::<f64>() - 0.5) * a;
        }
        if rng.random::<f64>() * intensity.max() < intensity.at_point(window, &x) {
            coords.extend_from_slice(&x);
        }
    }
    PointPattern::from_flat(window.clone(), coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::{dft, periodogram_known_intensity};
    use crate::models::{simulate, SpectralModel};
    use crate::rng::stream;

    #[test]
    fn constant_intensity_halves_dft() {
        let m = SpectralModel::parse("poisson:lambda=2", 2).unwrap();
        let p = simulate(&m, &Window::cube(2, 10.0).unwrap(), 3).unwrap();
        let t = Taper::default();
        let lam = IntensityField::constant(2.0).unwrap();
        for w in [[0.7, -1.3], [2.0, 0.1]] {
            let a = ir_dft(&p, &t, &lam, &w).unwrap();
            let b = dft(&p, &t, &w) / 2.0;
            assert!((a - b).norm() < 1e-14 * b.norm().max(1.0));
            let ia = ir_periodogram(&p, &t, &lam, &w).unwrap();
            let ib = periodogram_known_intensity(&p, &t, &w, 2.0) / 4.0;
            assert!((ia - ib).abs() < 1e-12 * ib.max(1e-300));
            let neg = ir_periodogram(&p, &t, &lam, &[-w[0], -w[1]]).unwrap();
            assert!((ia - neg).abs() < 1e-12 * ia);
        }
        let e = PointPattern::empty(Window::cube(2, 10.0).unwrap());
        assert_eq!(ir_dft(&e, &t, &lam, &[1.0, 1.0]).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn moment_and_poisson_psd() {
        let t = Taper::default();
        let lam = IntensityField::constant(2.0).unwrap();
        let h = taper_intensity_moment(&t, &lam, 2);
        assert!((h - t.moment(2, 2) / 2.0).abs() < 1e-10);
        let f = ir_psd(|_| 0.0, 1.0, &t, &lam, &[1.0, 1.0]);
        assert!((f - 0.5 / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn thomas_duality() {
        let m = SpectralModel::parse("thomas:kappa=0.2,alpha=10,sigma2=0.25", 2).unwrap();
        let lam = m.intensity();
        let field = IntensityField::constant(lam).unwrap();
        let ell2 = |r: f64| m.pcf(r).unwrap();
        let f = ir_psd(ell2, 20.0, &Taper::uniform(), &field, &[1.0, 1.0]);
        let want = m.density(&[1.0, 1.0]) / (lam * lam);
        assert!((f / want - 1.0).abs() < 1e-4, "{f} {want}");
    }

    #[test]
    fn thinning_mean() {
        let lam = IntensityField::linear(1.5, vec![1.0, 0.0]).unwrap();
        let w = Window::cube(2, 20.0).unwrap();
        let n: usize = (0..40).map(|s| simulate_inhomogeneous(&lam, &w, &mut stream(7, s)).unwrap().len()).sum();
        let mean = n as f64 / 40.0;
        assert!((mean - 600.0).abs() < 4.0 * (600.0f64 / 40.0).sqrt(), "{mean}");
    }
}
