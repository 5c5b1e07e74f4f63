//! Separable data tapers on `[-1/2, 1/2]^d`.
//!
//! A [`Taper`] is described by its 1-D profile; the d-dimensional taper is
//! the product of identical profiles, so every moment and transform
//! factorises over coordinates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::quad::{self, QuadConfig};

/// Ramp width used when none is given.
pub const DEFAULT_RAMP: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaperKind {
    Uniform,
    /// Polynomial-plus-sine ramp of width `a` at each end, flat in between.
    Smooth { a: f64 },
}

/// 1-D taper profile with cached moments `H_{h,k}` for `k = 1, 2, 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taper {
    kind: TaperKind,
    moments: [f64; 3],
}

fn quad_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
}

/// Rising ramp `r(s)` on `s in [0, a]`, from 0 to 1.
fn ramp(s: f64, a: f64) -> f64 {
    s / a - (2.0 * PI * s / a).sin() / (2.0 * PI)
}

impl Taper {
    pub fn uniform() -> Self {
        Self { kind: TaperKind::Uniform, moments: [1.0; 3] }
    }

    pub fn smooth(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) {
            return Err(Error::InvalidTaper(format!("ramp width must lie in (0, 1/2) (got {a})")));
        }
        let mut t = Self { kind: TaperKind::Smooth { a }, moments: [0.0; 3] };
        t.moments = [1.0 - a, t.moment_1d(2), t.moment_1d(4)];
        Ok(t)
    }

    pub fn kind(&self) -> TaperKind {
        self.kind
    }

    /// 1-D profile `h(x)`, zero outside `[-1/2, 1/2]`.
    pub fn value_1d(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax > 0.5 {
            return 0.0;
        }
        match self.kind {
            TaperKind::Uniform => 1.0,
            TaperKind::Smooth { a } => {
                if ax < 0.5 - a {
                    1.0
                } else {
                    ramp(0.5 - ax, a)
                }
            }
        }
    }

    /// Product taper `h(x) = prod_j h(x_j)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.value_1d(xi)).product()
    }

    fn moment_1d(&self, k: u32) -> f64 {
        match self.kind {
            TaperKind::Uniform => 1.0,
            TaperKind::Smooth { a } => {
                if k == 1 {
                    return 1.0 - a;
                }
                let r = quad::integrate(|s| ramp(s, a).powi(k as i32), 0.0, a, quad_cfg());
                (1.0 - 2.0 * a) + 2.0 * r.value
            }
        }
    }

    /// `H_{h,k} = int_{[-1/2,1/2]^d} h^k`.
    pub fn moment(&self, k: u32, dim: usize) -> f64 {
        assert!(k >= 1, "taper moments are defined for k >= 1");
        let one = match k {
            1 => self.moments[0],
            2 => self.moments[1],
            4 => self.moments[2],
            _ => self.moment_1d(k),
        };
        one.powi(dim as i32)
    }

    /// Real, even transform `hat h(t) = int h(y) cos(t y) dy` of the 1-D profile.
    fn profile_ft(&self, t: f64) -> f64 {
        match self.kind {
            TaperKind::Uniform => sinc(t / 2.0),
            TaperKind::Smooth { a } => smooth_ft(t.abs(), a),
        }
    }

    /// `u(w, A) = int_{-A/2}^{A/2} h(x/A) e^{-ixw} dx`. Real since `h` is even.
    pub fn ft_1d(&self, omega: f64, side: f64) -> f64 {
        side * self.profile_ft(side * omega)
    }

    /// `int_{-A/2}^{A/2} h(x/A)^k e^{-ixw} dx` for any `k >= 1`.
    pub fn ft_power_1d(&self, k: u32, omega: f64, side: f64) -> f64 {
        if k == 1 {
            return self.ft_1d(omega, side);
        }
        match self.kind {
            TaperKind::Uniform => self.ft_1d(omega, side),
            TaperKind::Smooth { a } => {
                let t = (side * omega).abs();
                let c = 0.5;
                let flat = if t == 0.0 { c - a } else { (t * (c - a)).sin() / t };
                let r = quad::integrate(
                    |s| ramp(s, a).powi(k as i32) * (t * (c - s)).cos(),
                    0.0,
                    a,
                    quad_cfg(),
                );
                side * 2.0 * (flat + r.value)
            }
        }
    }

    /// `H^{(n)}_{h,k}(w) = int_{D_n} h(x/A)^k e^{-ix.w} dx`.
    pub fn h_n(&self, k: u32, window: &Window, omega: &[f64]) -> Complex64 {
        let v: f64 = omega
            .iter()
            .zip(window.sides())
            .map(|(&w, &a)| self.ft_power_1d(k, w, a))
            .product();
        Complex64::new(v, 0.0)
    }

    /// Normalising constant `(2 pi)^{-d/2} H_{h,2}^{-1/2} |D_n|^{-1/2}` of the DFT.
    pub fn dft_scale(&self, window: &Window) -> f64 {
        let d = window.dim();
        (2.0 * PI).powf(-(d as f64) / 2.0) / (self.moment(2, d) * window.volume()).sqrt()
    }

    /// Real part of the bias factor; its imaginary part is identically zero.
    pub fn bias_factor_re(&self, window: &Window, omega: &[f64]) -> f64 {
        let prod: f64 =
            omega.iter().zip(window.sides()).map(|(&w, &a)| self.ft_1d(w, a)).product();
        self.dft_scale(window) * prod
    }

    /// Bias factor `c_{h,n}(w)`.
    pub fn bias_factor(&self, window: &Window, omega: &[f64]) -> Complex64 {
        Complex64::new(self.bias_factor_re(window, omega), 0.0)
    }

    /// Fejer kernel `F_{h,n}(w) = |c_{h,n}(w)|^2`.
    pub fn fejer(&self, window: &Window, omega: &[f64]) -> f64 {
        self.bias_factor_re(window, omega).powi(2)
    }
}

impl Default for Taper {
    fn default() -> Self {
        Self::smooth(DEFAULT_RAMP).expect("default ramp is valid")
    }
}

impl fmt::Display for Taper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TaperKind::Uniform => write!(f, "uniform"),
            TaperKind::Smooth { a } => write!(f, "smooth:{a}"),
        }
    }
}

impl FromStr for Taper {
    type Err = Error;

    /// `uniform`, `smooth` or `smooth:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None if s == "uniform" => Ok(Self::uniform()),
            None if s == "smooth" => Ok(Self::default()),
            Some(("smooth", a)) => {
                let a: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidTaper(format!("bad ramp width '{a}'")))?;
                Self::smooth(a)
            }
            _ => Err(Error::InvalidTaper(format!("unknown taper '{s}'"))),
        }
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Closed-form transform of the smooth profile for `t >= 0`.
///
/// Integrating branch by branch gives elementary terms; two of them carry
/// removable singularities (`t -> 0` and `t -> 2 pi / a`), where the ramp
/// integral is evaluated by quadrature instead.
fn smooth_ft(t: f64, a: f64) -> f64 {
    let c = 0.5;
    let m = 2.0 * PI / a;
    if t < 1.0 || (t - m).abs() < 1e-4 * m {
        let flat = if t == 0.0 { c - a } else { (t * (c - a)).sin() / t };
        let r = quad::integrate(|s| ramp(s, a) * (t * (c - s)).cos(), 0.0, a, quad_cfg());
        return 2.0 * (flat + r.value);
    }
    let (s_in, c_in) = (t * (c - a)).sin_cos();
    let c_out = (t * c).cos();
    let flat = s_in / t;
    let linear = (-a * s_in / t + c_in / (t * t) - c_out / (t * t)) / a;
    let sine = (c_out - c_in) * m / (m * m - t * t) / (2.0 * PI);
    2.0 * (flat + linear - sine)
}
