//! Kernel spectral density estimation from a periodogram field.

use crate::error::{Error, Result};
use crate::geometry::{PeriodogramField, Window};

/// Product triangular kernel `W_b(u) = b^{-d} prod_i W(u_i / b)` with
/// `W(t) = 2 max(1 - 2|t|, 0)`, supported on `(-b/2, b/2)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    bandwidth: f64,
}

impl SmoothingKernel {
    pub fn triangular(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive (got {bandwidth})")));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// 1-D profile `W(t)`.
    pub fn profile(t: f64) -> f64 {
        2.0 * (1.0 - 2.0 * t.abs()).max(0.0)
    }

    pub fn weight(&self, u: &[f64]) -> f64 {
        let b = self.bandwidth;
        u.iter().map(|&x| Self::profile(x / b) / b).product()
    }
}

/// Mean-squared-error rate bandwidth `|D_n|^{-1/6}`.
pub fn default_bandwidth(window: &Window) -> f64 {
    window.volume().powf(-1.0 / 6.0)
}

/// Normalised-weight kernel estimate at `omega`:
/// `sum_k W_b(w - w_k) I(w_k) / sum_k W_b(w - w_k)` over the field's grid.
pub fn ksde(field: &PeriodogramField, kernel: &SmoothingKernel, omega: &[f64]) -> Result<f64> {
    let grid = &field.grid;
    let d = grid.dim();
    if omega.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: omega.len() });
    }
    let step = 2.0 * std::f64::consts::PI / grid.spacing();
    if step >= kernel.bandwidth() {
        return Err(Error::BandwidthBelowResolution);
    }
    let half = kernel.bandwidth() / 2.0;
    let lo: Vec<i64> = omega.iter().map(|&w| ((w - half) / step).ceil() as i64).collect();
    let hi: Vec<i64> = omega.iter().map(|&w| ((w + half) / step).floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Err(Error::BandwidthBelowResolution);
    }
    let mut k = lo.clone();
    let mut u = vec![0.0; d];
    let (mut num, mut den) = (0.0, 0.0);
    loop {
        if let Some(pos) = grid.find(&k) {
            for ((ui, &w), &ki) in u.iter_mut().zip(omega).zip(&k) {
                *ui = w - step * ki as f64;
            }
            let wt = kernel.weight(&u);
            num += wt * field.values[pos];
            den += wt;
        }
        let mut i = d;
        loop {
            if i == 0 {
                return if den > 0.0 { Ok(num / den) } else { Err(Error::BandwidthBelowResolution) };
            }
            i -= 1;
            if k[i] < hi[i] {
                k[i] += 1;
                k[i + 1..d].copy_from_slice(&lo[i + 1..d]);
                break;
            }
        }
    }
}

/// Kernel estimate at every frequency of the field's own grid.
pub fn smooth_field(field: &PeriodogramField, kernel: &SmoothingKernel) -> Result<PeriodogramField> {
    let values = field
        .grid
        .frequencies()
        .map(|w| ksde(field, kernel, w))
        .collect::<Result<Vec<_>>>()?;
    PeriodogramField::new(field.grid.clone(), values, field.taper, field.window.clone(), field.lambda_hat)
}
