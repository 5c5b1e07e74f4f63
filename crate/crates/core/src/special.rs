//! Bessel-type helpers built on `puruspe`.

use puruspe::{gamma, Jn, Jnu_Ynu};

/// `J_0(x)`.
pub fn j0(x: f64) -> f64 {
    Jn(0, x)
}

/// Normalised Bessel function `Gamma(nu+1) (2/x)^nu J_nu(x)`, equal to 1 at 0.
pub fn lambda_nu(nu: f64, x: f64) -> f64 {
    let x = x.abs();
    if x < 2.0 {
        let q = -x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..60 {
            term *= q / ((k as f64 + 1.0) * (nu + k as f64 + 1.0));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let (j, _) = Jnu_Ynu(nu, x);
    gamma(nu + 1.0) * (2.0 / x).powf(nu) * j
}

/// Fourier transform of the uniform density on the unit ball in `R^d`,
/// as a function of `x = |w|`, with its first two derivatives in `x`.
pub fn ball_ft(dim: usize, x: f64) -> (f64, f64, f64) {
    let d = dim as f64;
    let nu = d / 2.0;
    let b0 = lambda_nu(nu, x);
    let b1 = lambda_nu(nu + 1.0, x);
    let b2 = lambda_nu(nu + 2.0, x);
    let d1 = -x * b1 / (d + 2.0);
    let d2 = -b1 / (d + 2.0) + x * x * b2 / ((d + 2.0) * (d + 4.0));
    (b0, d1, d2)
}
