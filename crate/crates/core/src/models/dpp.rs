//! Gaussian determinantal point process on a rectangular torus.
//!
//! The kernel `lambda exp(-|x|^2 / rho2)` is replaced by its periodic
//! version on the window, whose eigenfunctions are the real Fourier basis
//! (constant, `sqrt 2 cos`, `sqrt 2 sin`). Modes with eigenvalue below
//! [`EIGEN_FLOOR`] are dropped. The expected count lost to truncation is
//! the sum of the dropped eigenvalues, negligible at the default floor.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{PointPattern, Window};

/// Truncation level for the spectral expansion.
pub const EIGEN_FLOOR: f64 = 1e-4;
const MAX_PROPOSALS: usize = 50_000_000;

#[derive(Clone, Copy)]
enum Basis {
    Constant,
    Cos,
    Sin,
}

struct Mode {
    k: Vec<i64>,
    basis: Basis,
}

/// Enumerate retained modes: `k = 0` and the half-lattice with first
/// nonzero coordinate positive, with their eigenvalues.
fn modes(lambda: f64, rho2: f64, window: &Window) -> Result<Vec<(Mode, f64)>> {
    let d = window.dim();
    let sides = window.sides();
    let top = lambda * (PI * rho2).powf(d as f64 / 2.0);
    if top >= 1.0 {
        return Err(Error::Simulation(format!(
            "gdpp kernel has eigenvalue {top} >= 1; parameters are at or beyond the existence bound"
        )));
    }
    if top < EIGEN_FLOOR {
        return Ok(Vec::new());
    }
    // exp(-pi^2 rho2 q) >= floor / top  <=>  q <= ln(top/floor) / (pi^2 rho2)
    let qmax = (top / EIGEN_FLOOR).ln() / (PI * PI * rho2);
    let kmax: Vec<i64> = sides.iter().map(|&l| (qmax.sqrt() * l).floor() as i64).collect();
    let mut out = Vec::new();
    let mut k: Vec<i64> = kmax.iter().map(|&m| -m).collect();
    loop {
        let q: f64 = k.iter().zip(sides).map(|(&ki, &l)| (ki as f64 / l).powi(2)).sum();
        let first = k.iter().find(|&&v| v != 0).copied();
        if q <= qmax {
            let mu = top * (-PI * PI * rho2 * q).exp();
            match first {
                None => out.push((Mode { k: k.clone(), basis: Basis::Constant }, mu)),
                Some(v) if v > 0 => {
                    out.push((Mode { k: k.clone(), basis: Basis::Cos }, mu));
                    out.push((Mode { k: k.clone(), basis: Basis::Sin }, mu));
                }
                _ => {}
            }
        }
        let mut pos = d;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if k[pos] < kmax[pos] {
                k[pos] += 1;
                for j in pos + 1..d {
                    k[j] = -kmax[j];
                }
                break;
            }
        }
    }
}

/// Evaluate the selected basis functions (without the `1/sqrt|D|` factor).
fn eval(sel: &[Mode], x: &[f64], sides: &[f64], out: &mut [f64]) {
    for (m, o) in sel.iter().zip(out.iter_mut()) {
        let phase: f64 = m.k.iter().zip(x).zip(sides).map(|((&k, &xi), &l)| k as f64 * xi / l).sum::<f64>() * 2.0 * PI;
        *o = match m.basis {
            Basis::Constant => 1.0,
            Basis::Cos => std::f64::consts::SQRT_2 * phase.cos(),
            Basis::Sin => std::f64::consts::SQRT_2 * phase.sin(),
        };
    }
}

/// Dot product with independent partial sums so the loop vectorises.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Draw one pattern from the truncated periodic Gaussian DPP.
pub fn sample<R: Rng + ?Sized>(lambda: f64, rho2: f64, window: &Window, rng: &mut R) -> Result<PointPattern> {
    let all = modes(lambda, rho2, window)?;
    let sel: Vec<Mode> = all.into_iter().filter(|(_, mu)| rng.random::<f64>() < *mu).map(|(m, _)| m).collect();
    let n = sel.len();
    let d = window.dim();
    let sides = window.sides().to_vec();
    if n == 0 {
        return Ok(PointPattern::empty(window.clone()));
    }
    // sum of sup |phi|^2, in units where |D| = 1
    let bound: f64 = sel.iter().map(|m| if matches!(m.basis, Basis::Constant) { 1.0 } else { 2.0 }).sum();
    // rows of `e` span the remaining subspace; starts as the identity
    let mut e = vec![0.0; n * n];
    for i in 0..n {
        e[i * n + i] = 1.0;
    }
    let mut rows = n;
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut ute = vec![0.0; n];
    let mut x = vec![0.0; d];
    let mut coords = Vec::with_capacity(n * d);
    let mut proposals = 0usize;
    while rows > 0 {
        proposals += 1;
        if proposals > MAX_PROPOSALS {
            return Err(Error::Simulation("gdpp rejection sampler exceeded its proposal budget".into()));
        }
        for (xi, &l) in x.iter_mut().zip(&sides) {
            *xi = (rng.random::<f64>() - 0.5) * l;
        }
        let t = rng.random::<f64>() * bound;
        eval(&sel, &x, &sides, &mut v);
        let full: f64 = v.iter().map(|a| a * a).sum();
        if full < t {
            continue;
        }
        let mut proj = 0.0;
        for i in 0..rows {
            let s = dot(&e[i * n..(i + 1) * n], &v);
            w[i] = s;
            proj += s * s;
        }
        if proj < t {
            continue;
        }
        coords.extend_from_slice(&x);
        // Householder reflection sending w/|w| to the last basis vector,
        // then drop that row: the rest is orthogonal to v.
        let norm = proj.sqrt();
        let last = rows - 1;
        w[..rows].iter_mut().for_each(|a| *a /= norm);
        w[last] -= 1.0;
        let u2: f64 = w[..rows].iter().map(|a| a * a).sum();
        if u2 > 1e-300 {
            ute.iter_mut().for_each(|a| *a = 0.0);
            for i in 0..rows {
                let ui = w[i];
                if ui != 0.0 {
                    for (acc, &r) in ute.iter_mut().zip(&e[i * n..(i + 1) * n]) {
                        *acc += ui * r;
                    }
                }
            }
            let f = 2.0 / u2;
            for i in 0..last {
                let ui = f * w[i];
                if ui != 0.0 {
                    for (r, &a) in e[i * n..(i + 1) * n].iter_mut().zip(&ute) {
                        *r -= ui * a;
                    }
                }
            }
        }
        rows = last;
    }
    PointPattern::from_flat(window.clone(), coords)
}
