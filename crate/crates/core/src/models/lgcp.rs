//! Spectrum of the log-Gaussian Cox process with exponential log-covariance
//! `R(r) = s2 exp(-r / scale)`.

use std::f64::consts::PI;

use crate::quad;

/// Integration cut-off in units of the correlation scale; beyond it the
/// integrand is below `s2 exp(-60)`.
const CUTOFF: f64 = 60.0;

/// `int_{R^d} (exp(R(|x|)) - 1) exp(-i x.w) dx` at `|w| = w`.
pub fn lgcp_excess(s2: f64, scale: f64, w: f64, dim: usize) -> f64 {
    if s2 == 0.0 {
        return 0.0;
    }
    quad::radial_fourier(|r| (s2 * (-r / scale).exp()).exp_m1(), w, dim, scale, CUTOFF * scale)
}

/// Same transform from the expansion `exp(R) - 1 = sum_n s2^n/n! exp(-n r/scale)`
/// and the closed-form transforms of each exponential.
pub fn lgcp_excess_series(s2: f64, scale: f64, w: f64, dim: usize) -> f64 {
    let mut coef = 1.0;
    let mut sum = 0.0;
    for n in 1..200 {
        coef *= s2 / n as f64;
        let c = n as f64 / scale;
        let q = c * c + w * w;
        let t = match dim {
            1 => 2.0 * c / q,
            2 => 2.0 * PI * c / q.powf(1.5),
            _ => 8.0 * PI * c / (q * q),
        };
        sum += coef * t;
        if coef < 1e-18 {
            break;
        }
    }
    sum
}
