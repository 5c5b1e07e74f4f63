//! Stationary Gaussian fields on regular grids by circulant embedding.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Eigenvalues above `-CLIP * max` are clipped to zero; anything more
/// negative triggers a larger embedding.
const CLIP: f64 = 1e-12;
const MAX_PAD: usize = 8;

/// Field values at cell centres, row-major over `shape`.
#[derive(Debug, Clone)]
pub struct GaussianField {
    pub lo: Vec<f64>,
    pub cell: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// In-place unnormalised d-dimensional forward FFT of a row-major array.
fn fft_nd(data: &mut [Complex64], shape: &[usize], planner: &mut FftPlanner<f64>) {
    let total: usize = shape.iter().product();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let outer = total / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

fn unravel(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for i in (0..shape.len()).rev() {
        out[i] = idx % shape[i];
        idx /= shape[i];
    }
}

/// Sqrt-eigenvalues of the circulant embedding, scaled for sampling.
fn embedding(cov: &dyn Fn(f64) -> f64, cell: &[f64], shape: &[usize], planner: &mut FftPlanner<f64>) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut pad = 2;
    loop {
        let m: Vec<usize> = shape.iter().map(|&n| pad * n).collect();
        let total: usize = m.iter().product();
        let mut base = vec![Complex64::new(0.0, 0.0); total];
        let mut j = vec![0usize; m.len()];
        for (idx, b) in base.iter_mut().enumerate() {
            unravel(idx, &m, &mut j);
            let r2: f64 = j
                .iter()
                .zip(&m)
                .zip(cell)
                .map(|((&ji, &mi), &c)| {
                    let lag = ji.min(mi - ji) as f64 * c;
                    lag * lag
                })
                .sum();
            *b = Complex64::new(cov(r2.sqrt()), 0.0);
        }
        fft_nd(&mut base, &m, planner);
        let max = base.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let min = base.iter().map(|z| z.re).fold(f64::MAX, f64::min);
        if min >= -CLIP * max {
            let scale = 1.0 / total as f64;
            let sq = base.iter().map(|z| (z.re.max(0.0) * scale).sqrt()).collect();
            return Ok((m, sq));
        }
        if pad >= MAX_PAD {
            return Err(Error::Simulation(format!(
                "circulant embedding is not nonnegative definite (min eigenvalue {min:.3e}) even at padding {pad}"
            )));
        }
        pad *= 2;
    }
}

/// Sample a zero-mean stationary Gaussian field with isotropic covariance
/// `cov(r)` at the centres of the cells of `[lo, hi]` split by `shape`.
pub fn sample_field<R: Rng + ?Sized>(
    cov: &dyn Fn(f64) -> f64,
    lo: &[f64],
    hi: &[f64],
    shape: &[usize],
    rng: &mut R,
) -> Result<GaussianField> {
    let cell: Vec<f64> = lo.iter().zip(hi).zip(shape).map(|((a, b), &n)| (b - a) / n as f64).collect();
    let mut planner = FftPlanner::new();
    let (m, sq) = embedding(cov, &cell, shape, &mut planner)?;
    let mut z: Vec<Complex64> = sq
        .iter()
        .map(|&s| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex64::new(s * a, s * b)
        })
        .collect();
    fft_nd(&mut z, &m, &mut planner);
    let total: usize = shape.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut j = vec![0usize; shape.len()];
    for idx in 0..total {
        unravel(idx, shape, &mut j);
        let mut off = 0;
        for (ji, mi) in j.iter().zip(&m) {
            off = off * mi + ji;
        }
        values.push(z[off].re);
    }
    Ok(GaussianField { lo: lo.to_vec(), cell, shape: shape.to_vec(), values })
}
