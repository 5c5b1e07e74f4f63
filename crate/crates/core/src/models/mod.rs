//! Parametric point-process families: spectral densities, their parameter
//! derivatives, pair correlation functions and simulators.

mod dpp;
mod gaussian_field;
mod lgcp;
mod simulate;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special::ball_ft;

pub use gaussian_field::{sample_field, GaussianField};
pub use lgcp::{lgcp_excess, lgcp_excess_series};
pub use simulate::{simulate, simulate_with_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Poisson,
    Thomas,
    Matern,
    Gdpp,
    Hawkes,
    Lgcp,
}

impl Family {
    pub const ALL: [Family; 6] =
        [Family::Poisson, Family::Thomas, Family::Matern, Family::Gdpp, Family::Hawkes, Family::Lgcp];

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Thomas => "thomas",
            Family::Matern => "matern",
            Family::Gdpp => "gdpp",
            Family::Hawkes => "hawkes",
            Family::Lgcp => "lgcp",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Poisson => &["lambda"],
            Family::Thomas => &["kappa", "alpha", "sigma2"],
            Family::Matern => &["kappa", "alpha", "r"],
            Family::Gdpp => &["lambda", "rho2"],
            Family::Hawkes => &["nu", "a", "beta"],
            Family::Lgcp => &["mu", "s2", "scale"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// Whether analytic parameter derivatives are available.
    pub fn has_gradient(self) -> bool {
        !matches!(self, Family::Lgcp)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "poisson" => Ok(Family::Poisson),
            "thomas" | "tcp" => Ok(Family::Thomas),
            "matern" => Ok(Family::Matern),
            "gdpp" => Ok(Family::Gdpp),
            "hawkes" | "hawkes_exp" => Ok(Family::Hawkes),
            "lgcp" | "lgcp_exp" => Ok(Family::Lgcp),
            other => Err(Error::InvalidModel(format!("unknown family '{other}'"))),
        }
    }
}

/// A fully specified member of a [`Family`] in dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    family: Family,
    params: Vec<f64>,
    dim: usize,
}

/// Spectral density with its gradient and Hessian in the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `p x p`.
    pub hess: Vec<f64>,
}

fn norm2(omega: &[f64]) -> f64 {
    omega.iter().map(|w| w * w).sum()
}

impl SpectralModel {
    pub fn new(family: Family, params: Vec<f64>, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidModel(format!("dimension must be 1, 2 or 3 (got {dim})")));
        }
        if params.len() != family.n_params() {
            return Err(Error::InvalidModel(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel("parameters must be finite".into()));
        }
        let pos = |i: usize| -> Result<()> {
            if params[i] > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "{family}: {} must be positive (got {})",
                    family.param_names()[i],
                    params[i]
                )))
            }
        };
        match family {
            Family::Poisson => pos(0)?,
            Family::Thomas | Family::Matern => (0..3).try_for_each(pos)?,
            Family::Gdpp => {
                pos(0)?;
                pos(1)?;
                let bound = gdpp_rho2_bound(params[0], dim);
                if params[1] > bound {
                    return Err(Error::InvalidModel(format!(
                        "gdpp: rho2 = {} exceeds the existence bound {bound}",
                        params[1]
                    )));
                }
            }
            Family::Hawkes => {
                if dim != 1 {
                    return Err(Error::InvalidModel("hawkes is defined on the line only (dim 1)".into()));
                }
                (0..3).try_for_each(pos)?;
                if params[1] >= params[2] {
                    return Err(Error::InvalidModel("hawkes: need a < beta (subcritical)".into()));
                }
            }
            Family::Lgcp => {
                if params[1] < 0.0 {
                    return Err(Error::InvalidModel("lgcp: s2 must be nonnegative".into()));
                }
                pos(2)?;
            }
        }
        Ok(Self { family, params, dim })
    }

    /// Parse `family:name=value,...`, e.g. `thomas:kappa=0.2,alpha=10,sigma2=0.25`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let (fam, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let family: Family = fam.parse()?;
        let names = family.param_names();
        let mut params = vec![f64::NAN; names.len()];
        for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidModel(format!("expected name=value, got '{kv}'")))?;
            let k = match (family, k.trim()) {
                (Family::Lgcp, "phi") => "scale",
                (_, "rho^2") => "rho2",
                (_, "sigma^2") => "sigma2",
                (_, other) => other,
            };
            let i = names
                .iter()
                .position(|n| *n == k)
                .ok_or_else(|| Error::InvalidModel(format!("{family} has no parameter '{k}'")))?;
            params[i] = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad value for {k}: '{v}'")))?;
        }
        if let Some(i) = params.iter().position(|p| p.is_nan()) {
            return Err(Error::InvalidModel(format!("{family}: missing parameter '{}'", names[i])));
        }
        Self::new(family, params, dim)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn c(&self) -> f64 {
        (2.0 * PI).powi(-(self.dim as i32))
    }

    /// First-order intensity.
    pub fn intensity(&self) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Poisson | Family::Gdpp => p[0],
            Family::Thomas | Family::Matern => p[0] * p[1],
            Family::Hawkes => p[0] / (1.0 - p[1] / p[2]),
            Family::Lgcp => (p[0] + p[1] / 2.0).exp(),
        }
    }

    /// Spectral density `f(w)`.
    pub fn density(&self, omega: &[f64]) -> f64 {
        debug_assert_eq!(omega.len(), self.dim);
        self.density_radial(norm2(omega))
    }

    /// Spectral density as a function of `|w|^2`; every family is isotropic.
    pub fn density_radial(&self, r2: f64) -> f64 {
        let p = &self.params;
        let c = self.c();
        match self.family {
            Family::Poisson => c * p[0],
            Family::Thomas => c * p[0] * p[1] * (1.0 + p[1] * (-p[2] * r2).exp()),
            Family::Matern => {
                let b = ball_ft(self.dim, p[2] * r2.sqrt()).0;
                c * p[0] * p[1] * (1.0 + p[1] * b * b)
            }
            Family::Gdpp => c * (p[0] - p[0] * p[0] * gdpp_g(p[1], r2, self.dim).0),
            Family::Hawkes => {
                let (nu, a, beta) = (p[0], p[1], p[2]);
                let u = beta - a;
                nu * beta / u * (beta * beta + r2) / (u * u + r2) / (2.0 * PI)
            }
            Family::Lgcp => {
                let lam = self.intensity();
                c * (lam + lam * lam * lgcp_excess(p[1], p[2], r2.sqrt(), self.dim))
            }
        }
    }

    /// `grad_theta f(w)`.
    pub fn gradient(&self, omega: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivatives(omega)?.grad)
    }

    /// Value, gradient and Hessian of `f` in the natural parameters.
    pub fn derivatives(&self, omega: &[f64]) -> Result<Derivatives> {
        self.derivatives_radial(norm2(omega))
    }

    pub fn derivatives_radial(&self, r2: f64) -> Result<Derivatives> {
        let p = &self.params;
        let c = self.c();
        let out = match self.family {
            Family::Poisson => Derivatives { value: c * p[0], grad: vec![c], hess: vec![0.0] },
            Family::Thomas => {
                let (k, a, s) = (p[0], p[1], p[2]);
                let e = (-s * r2).exp();
                let value = c * k * a * (1.0 + a * e);
                let grad = vec![c * a * (1.0 + a * e), c * k * (1.0 + 2.0 * a * e), -c * k * a * a * r2 * e];
                let ka = c * (1.0 + 2.0 * a * e);
                let ks = -c * a * a * r2 * e;
                let aa = 2.0 * c * k * e;
                let as_ = -2.0 * c * k * a * r2 * e;
                let ss = c * k * a * a * r2 * r2 * e;
                Derivatives { value, grad, hess: vec![0.0, ka, ks, ka, aa, as_, ks, as_, ss] }
            }
            Family::Matern => {
                let (k, a, r) = (p[0], p[1], p[2]);
                let w = r2.sqrt();
                let (b, b1, b2) = ball_ft(self.dim, r * w);
                // derivatives of B(r w) in r
                let br = b1 * w;
                let brr = b2 * w * w;
                let value = c * k * a * (1.0 + a * b * b);
                let grad = vec![c * a * (1.0 + a * b * b), c * k * (1.0 + 2.0 * a * b * b), c * k * a * a * 2.0 * b * br];
                let ka = c * (1.0 + 2.0 * a * b * b);
                let kr = c * a * a * 2.0 * b * br;
                let aa = 2.0 * c * k * b * b;
                let ar = 4.0 * c * k * a * b * br;
                let rr = 2.0 * c * k * a * a * (br * br + b * brr);
                Derivatives { value, grad, hess: vec![0.0, ka, kr, ka, aa, ar, kr, ar, rr] }
            }
            Family::Gdpp => {
                let (l, t) = (p[0], p[1]);
                let (g, g1, g2) = gdpp_g(t, r2, self.dim);
                let value = c * (l - l * l * g);
                let grad = vec![c * (1.0 - 2.0 * l * g), -c * l * l * g1];
                let lt = -2.0 * c * l * g1;
                Derivatives { value, grad, hess: vec![-2.0 * c * g, lt, lt, -c * l * l * g2] }
            }
            Family::Hawkes => {
                let (nu, a, beta) = (p[0], p[1], p[2]);
                let u = beta - a;
                let dd = u * u + r2;
                let nn = beta * beta + r2;
                let value = nu * beta / u * nn / dd / (2.0 * PI);
                let gl = [
                    1.0 / nu,
                    1.0 / u + 2.0 * u / dd,
                    1.0 / beta - 1.0 / u + 2.0 * beta / nn - 2.0 * u / dd,
                ];
                let mut hl = [0.0; 9];
                hl[0] = -1.0 / (nu * nu);
                hl[4] = 1.0 / (u * u) + 2.0 * (2.0 * u * u - dd) / (dd * dd);
                hl[5] = -1.0 / (u * u) + 2.0 * (dd - 2.0 * u * u) / (dd * dd);
                hl[7] = hl[5];
                hl[8] = -1.0 / (beta * beta) + 1.0 / (u * u) + 2.0 * (nn - 2.0 * beta * beta) / (nn * nn)
                    - 2.0 * (dd - 2.0 * u * u) / (dd * dd);
                let grad = gl.iter().map(|g| value * g).collect();
                let mut hess = vec![0.0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        hess[i * 3 + j] = value * (gl[i] * gl[j] + hl[i * 3 + j]);
                    }
                }
                Derivatives { value, grad, hess }
            }
            Family::Lgcp => {
                return Err(Error::Unsupported("gradient unavailable for quadrature-defined spectrum".into()))
            }
        };
        Ok(out)
    }

    /// Pair correlation minus one, `g(r) - 1`.
    pub fn pcf(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        let d = self.dim as f64;
        match self.family {
            Family::Poisson => Ok(0.0),
            Family::Thomas => {
                let (k, s) = (p[0], p[2]);
                Ok((4.0 * PI * s).powf(-d / 2.0) / k * (-r * r / (4.0 * s)).exp())
            }
            Family::Gdpp => Ok(-(-2.0 * r * r / p[1]).exp()),
            Family::Lgcp => Ok((p[1] * (-r / p[2]).exp()).exp() - 1.0),
            f => Err(Error::Unsupported(format!("pair correlation not provided for {f}"))),
        }
    }
}

impl fmt::Display for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family)?;
        for (i, (n, v)) in self.family.param_names().iter().zip(&self.params).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}={v}")?;
        }
        Ok(())
    }
}

/// Largest admissible `rho^2` for a Gaussian DPP of intensity `lambda`.
pub fn gdpp_rho2_bound(lambda: f64, dim: usize) -> f64 {
    1.0 / (PI * lambda.powf(2.0 / dim as f64))
}

/// `G(t) = (pi t / 2)^{d/2} exp(-t r^2 / 8)` and its first two `t` derivatives.
fn gdpp_g(t: f64, r2: f64, dim: usize) -> (f64, f64, f64) {
    let d = dim as f64;
    let g = (PI * t / 2.0).powf(d / 2.0) * (-t * r2 / 8.0).exp();
    let q = d / (2.0 * t) - r2 / 8.0;
    let g1 = g * q;
    let g2 = g1 * q - g * d / (2.0 * t * t);
    (g, g1, g2)
}
