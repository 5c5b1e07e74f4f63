//! Tapered DFTs, the tapered intensity estimator, and periodograms.
//!
//! Sums over points always run in the pattern's canonical (sorted) order,
//! so every value here is bit-reproducible.

use num_complex::Complex64;

use crate::geometry::{FrequencyGrid, PeriodogramField, PointPattern, Window};
use crate::taper::Taper;

/// Raw and centred DFT at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DftResult {
    pub omega: Vec<f64>,
    pub raw: Complex64,
    pub centered: Complex64,
    pub lambda_hat: f64,
}

fn taper_weight(taper: &Taper, window: &Window, x: &[f64]) -> f64 {
    x.iter().zip(window.sides()).map(|(&xi, &a)| taper.value_1d(xi / a)).product()
}

fn is_origin(omega: &[f64]) -> bool {
    omega.iter().all(|&w| w == 0.0)
}

/// Tapered DFT `J_{h,n}(w) = C sum_x h(x/A) exp(-i x.w)`.
pub fn dft(pattern: &PointPattern, taper: &Taper, omega: &[f64]) -> Complex64 {
    assert_eq!(omega.len(), pattern.dim(), "frequency dimension mismatch");
    let w = pattern.window();
    let mut acc = Complex64::new(0.0, 0.0);
    for x in pattern.points() {
        let h = taper_weight(taper, w, x);
        let phase: f64 = x.iter().zip(omega).map(|(a, b)| a * b).sum();
        let (s, c) = phase.sin_cos();
        acc += Complex64::new(h * c, -h * s);
    }
    acc * taper.dft_scale(w)
}

/// Tapered intensity estimate `sum_x h(x/A) / (H_{h,1} |D_n|)`.
pub fn intensity_hat(pattern: &PointPattern, taper: &Taper) -> f64 {
    let w = pattern.window();
    let s: f64 = pattern.points().map(|x| taper_weight(taper, w, x)).sum();
    s / (taper.moment(1, w.dim()) * w.volume())
}

/// DFT centred with a given intensity. Using the true intensity gives the
/// infeasible periodogram, which is only meant for oracle comparisons.
pub fn centered_dft_with(pattern: &PointPattern, taper: &Taper, omega: &[f64], lambda: f64) -> DftResult {
    let raw = dft(pattern, taper, omega);
    let centered = if is_origin(omega) && lambda == intensity_hat(pattern, taper) {
        // identically zero; avoid leaving rounding residue
        Complex64::new(0.0, 0.0)
    } else {
        raw - lambda * taper.bias_factor(pattern.window(), omega)
    };
    DftResult { omega: omega.to_vec(), raw, centered, lambda_hat: lambda }
}

/// Feasible centred DFT `J(w) - lambda_hat c_{h,n}(w)`.
pub fn centered_dft(pattern: &PointPattern, taper: &Taper, omega: &[f64]) -> DftResult {
    centered_dft_with(pattern, taper, omega, intensity_hat(pattern, taper))
}

/// Feasible periodogram at one frequency.
pub fn periodogram(pattern: &PointPattern, taper: &Taper, omega: &[f64]) -> f64 {
    centered_dft(pattern, taper, omega).centered.norm_sqr()
}

/// Periodogram centred by a known intensity.
pub fn periodogram_known_intensity(pattern: &PointPattern, taper: &Taper, omega: &[f64], lambda: f64) -> f64 {
    centered_dft_with(pattern, taper, omega, lambda).centered.norm_sqr()
}

/// Raw tapered sums `sum_j w_j exp(-i x_j.w)` over the rectangular hull of
/// the grid, returned as (re, im) arrays in row-major hull order.
///
/// The exponential factorises over coordinates, so each point contributes a
/// rank-one (outer-product) update built from per-axis factor rows. Only the
/// accumulator of hull size is materialised.
pub(crate) fn hull_sums<'a, I>(points: I, weights: &[f64], dim: usize, step: f64, half: &[i64]) -> (Vec<f64>, Vec<f64>)
where
    I: Iterator<Item = &'a [f64]>,
{
    let sizes: Vec<usize> = half.iter().map(|&h| (2 * h + 1) as usize).collect();
    let first = sizes[0];
    let rest: usize = sizes[1..].iter().product();
    let mut acc_re = vec![0.0; first * rest];
    let mut acc_im = vec![0.0; first * rest];
    let mut rows: Vec<(Vec<f64>, Vec<f64>)> = sizes.iter().map(|&s| (vec![0.0; s], vec![0.0; s])).collect();
    let mut tail_re = vec![0.0; rest];
    let mut tail_im = vec![0.0; rest];
    for (x, &wt) in points.zip(weights) {
        if wt == 0.0 {
            continue;
        }
        for i in 0..dim {
            let (re, im) = &mut rows[i];
            for (j, k) in (-half[i]..=half[i]).enumerate() {
                let (s, c) = (x[i] * step * k as f64).sin_cos();
                re[j] = c;
                im[j] = -s;
            }
        }
        // Kronecker product of the trailing axes
        tail_re[0] = 1.0;
        tail_im[0] = 0.0;
        let mut len = 1;
        for (fr, fi) in &rows[1..dim] {
            let n = fr.len();
            for a in (0..len).rev() {
                let (ar, ai) = (tail_re[a], tail_im[a]);
                for b in 0..n {
                    tail_re[a * n + b] = ar * fr[b] - ai * fi[b];
                    tail_im[a * n + b] = ar * fi[b] + ai * fr[b];
                }
            }
            len *= n;
        }
        let (r0, i0) = &rows[0];
        for k1 in 0..first {
            let ar = wt * r0[k1];
            let ai = wt * i0[k1];
            let out_re = &mut acc_re[k1 * rest..(k1 + 1) * rest];
            let out_im = &mut acc_im[k1 * rest..(k1 + 1) * rest];
            for ((o_re, o_im), (&br, &bi)) in
                out_re.iter_mut().zip(out_im.iter_mut()).zip(tail_re.iter().zip(&tail_im))
            {
                *o_re += ar * br - ai * bi;
                *o_im += ar * bi + ai * br;
            }
        }
    }
    (acc_re, acc_im)
}

/// Position of lattice index `k` inside the row-major hull.
pub(crate) fn hull_offset(k: &[i64], half: &[i64]) -> usize {
    let mut off = 0usize;
    for (&ki, &h) in k.iter().zip(half) {
        off = off * (2 * h + 1) as usize + (ki + h) as usize;
    }
    off
}

/// Raw DFT values on every grid frequency, via the factorised hull sums.
pub fn dft_grid_weighted(pattern: &PointPattern, weights: &[f64], grid: &FrequencyGrid) -> Vec<Complex64> {
    let half = grid.half_widths();
    let step = 2.0 * std::f64::consts::PI / grid.spacing();
    let (re, im) = hull_sums(pattern.points(), weights, pattern.dim(), step, &half);
    grid.indices()
        .map(|k| {
            let o = hull_offset(k, &half);
            Complex64::new(re[o], im[o])
        })
        .collect()
}

/// Taper weights `h(x/A)` in canonical point order.
pub fn taper_weights(pattern: &PointPattern, taper: &Taper) -> Vec<f64> {
    let w = pattern.window();
    pattern.points().map(|x| taper_weight(taper, w, x)).collect()
}

/// Bias factor on every grid frequency as the outer product of per-axis
/// taper transforms.
pub fn bias_grid(taper: &Taper, window: &Window, grid: &FrequencyGrid) -> Vec<f64> {
    let half = grid.half_widths();
    let step = 2.0 * std::f64::consts::PI / grid.spacing();
    let axes: Vec<Vec<f64>> = half
        .iter()
        .zip(window.sides())
        .map(|(&h, &a)| (-h..=h).map(|k| taper.ft_1d(step * k as f64, a)).collect())
        .collect();
    let scale = taper.dft_scale(window);
    grid.indices()
        .map(|k| {
            let p: f64 = k.iter().zip(&half).zip(&axes).map(|((&ki, &h), ax)| ax[(ki + h) as usize]).product();
            scale * p
        })
        .collect()
}

/// Periodogram over a grid, centred by the supplied intensity.
pub fn periodogram_grid_with(pattern: &PointPattern, taper: &Taper, grid: &FrequencyGrid, lambda: f64) -> Vec<f64> {
    let weights = taper_weights(pattern, taper);
    let scale = taper.dft_scale(pattern.window());
    let raw = dft_grid_weighted(pattern, &weights, grid);
    let bias = bias_grid(taper, pattern.window(), grid);
    raw.iter().zip(&bias).map(|(j, c)| (j * scale - lambda * c).norm_sqr()).collect()
}

/// Feasible periodogram field on a grid.
pub fn periodogram_grid(pattern: &PointPattern, taper: &Taper, grid: &FrequencyGrid) -> PeriodogramField {
    let lambda = intensity_hat(pattern, taper);
    let mut values = periodogram_grid_with(pattern, taper, grid, lambda);
    if let Some(o) = grid.find(&vec![0; grid.dim()]) {
        values[o] = 0.0;
    }
    PeriodogramField::new(grid.clone(), values, *taper, pattern.window().clone(), lambda)
        .expect("periodogram values are finite and nonnegative")
}
