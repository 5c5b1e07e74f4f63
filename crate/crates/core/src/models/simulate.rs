use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson, StandardNormal};

use super::{dpp, gaussian_field, Family, SpectralModel};
use crate::error::{Error, Result};
use crate::geometry::{PointPattern, Window};
use crate::rng;

/// Parent buffer for Thomas clusters, in units of the kernel sd.
const THOMAS_BUFFER: f64 = 6.0;
/// Log-field grid cells per axis for the LGCP sampler.
const LGCP_CELLS_2D: usize = 512;
const LGCP_CELLS_1D: usize = 4096;

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(mean).map_err(|e| Error::Simulation(format!("poisson mean {mean}: {e}")))?;
    Ok(p.sample(rng) as u64)
}

fn uniform_in<R: Rng + ?Sized>(lo: &[f64], hi: &[f64], rng: &mut R, out: &mut Vec<f64>) {
    for (a, b) in lo.iter().zip(hi) {
        out.push(a + (b - a) * rng.random::<f64>());
    }
}

fn finish(window: &Window, coords: Vec<f64>) -> Result<PointPattern> {
    PointPattern::from_flat(window.clone(), coords)
}

/// Simulate `model` on `window` using stream 0 of `seed`.
pub fn simulate(model: &SpectralModel, window: &Window, seed: u64) -> Result<PointPattern> {
    simulate_with_rng(model, window, &mut rng::stream(seed, 0))
}

pub fn simulate_with_rng<R: Rng + ?Sized>(model: &SpectralModel, window: &Window, rng: &mut R) -> Result<PointPattern> {
    if model.dim() != window.dim() {
        return Err(Error::DimensionMismatch { expected: window.dim(), got: model.dim() });
    }
    let p = model.params();
    match model.family() {
        Family::Poisson => homogeneous(p[0], window, rng),
        Family::Thomas => {
            let sd = p[2].sqrt();
            let normal = Normal::new(0.0, sd).map_err(|e| Error::Simulation(e.to_string()))?;
            cluster(p[0], p[1], THOMAS_BUFFER * sd, window, rng, |rng, out| {
                out.iter_mut().for_each(|v| *v = normal.sample(rng));
            })
        }
        Family::Matern => {
            let r = p[2];
            let d = window.dim() as f64;
            cluster(p[0], p[1], r, window, rng, |rng, out| {
                // uniform in the ball: gaussian direction, radius r U^{1/d}
                out.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                let n = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rad = r * rng.random::<f64>().powf(1.0 / d);
                out.iter_mut().for_each(|v| *v *= rad / n);
            })
        }
        Family::Gdpp => dpp::sample(p[0], p[1], window, rng),
        Family::Hawkes => hawkes(p[0], p[1], p[2], window, rng),
        Family::Lgcp => lgcp(p[0], p[1], p[2], window, rng),
    }
}

fn homogeneous<R: Rng + ?Sized>(lambda: f64, window: &Window, rng: &mut R) -> Result<PointPattern> {
    let n = poisson_count(lambda * window.volume(), rng)?;
    let (lo, hi): (Vec<f64>, Vec<f64>) = window.bounds().into_iter().unzip();
    let mut coords = Vec::with_capacity(n as usize * window.dim());
    for _ in 0..n {
        uniform_in(&lo, &hi, rng, &mut coords);
    }
    finish(window, coords)
}

/// Neyman–Scott process: Poisson(kappa) parents on the window dilated by
/// `buffer`, Poisson(alpha) offspring each displaced by `offset`.
fn cluster<R, F>(kappa: f64, alpha: f64, buffer: f64, window: &Window, rng: &mut R, mut offset: F) -> Result<PointPattern>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R, &mut [f64]),
{
    let d = window.dim();
    let lo: Vec<f64> = window.sides().iter().map(|a| -a / 2.0 - buffer).collect();
    let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let parents = poisson_count(kappa * vol, rng)?;
    let mut coords = Vec::new();
    let mut parent = Vec::with_capacity(d);
    let mut x = vec![0.0; d];
    for _ in 0..parents {
        parent.clear();
        uniform_in(&lo, &hi, rng, &mut parent);
        let kids = poisson_count(alpha, rng)?;
        for _ in 0..kids {
            offset(rng, &mut x);
            x.iter_mut().zip(&parent).for_each(|(v, p)| *v += p);
            if window.contains(&x) {
                coords.extend_from_slice(&x);
            }
        }
    }
    finish(window, coords)
}

/// Linear Hawkes process with kernel `a exp(-beta t)` via its cluster
/// representation. Immigrants start early enough that a cluster born
/// before the window reaches it with probability below 1e-3.
fn hawkes<R: Rng + ?Sized>(nu: f64, a: f64, beta: f64, window: &Window, rng: &mut R) -> Result<PointPattern> {
    let half = window.sides()[0] / 2.0;
    let rho = a / beta;
    // P(cluster extent > t) <= rho/(1-rho) exp(-(beta - a) t)
    let ext = ((1000.0 * rho / (1.0 - rho)).ln() / (beta - a)).max(0.0);
    let start = -half - ext;
    let immigrants = poisson_count(nu * (half - start), rng)?;
    let wait = Exp::new(beta).map_err(|e| Error::Simulation(e.to_string()))?;
    let mut queue: Vec<f64> = (0..immigrants).map(|_| start + (half - start) * rng.random::<f64>()).collect();
    let mut coords = Vec::new();
    while let Some(t) = queue.pop() {
        if t > half {
            continue;
        }
        if t >= -half {
            coords.push(t);
        }
        let kids = poisson_count(rho, rng)?;
        for _ in 0..kids {
            queue.push(t + wait.sample(rng));
        }
    }
    finish(window, coords)
}

/// Log-Gaussian Cox process: sample the log-field on a grid covering the
/// window dilated by one correlation length, then draw a Poisson count in
/// every cell (clipped to the window) with the cell's constant intensity.
fn lgcp<R: Rng + ?Sized>(mu: f64, s2: f64, scale: f64, window: &Window, rng: &mut R) -> Result<PointPattern> {
    let d = window.dim();
    let cells = match d {
        1 => LGCP_CELLS_1D,
        2 => LGCP_CELLS_2D,
        _ => return Err(Error::Unsupported("lgcp simulation is provided for dim 1 and 2".into())),
    };
    let lo: Vec<f64> = window.sides().iter().map(|a| -a / 2.0 - scale).collect();
    let hi: Vec<f64> = lo.iter().map(|v| -v).collect();
    let shape = vec![cells; d];
    let cov = move |r: f64| s2 * (-r / scale).exp();
    let field = gaussian_field::sample_field(&cov, &lo, &hi, &shape, rng)?;
    let bounds = window.bounds();
    let mut coords = Vec::new();
    let mut j = vec![0usize; d];
    let mut clo = vec![0.0; d];
    let mut chi = vec![0.0; d];
    for (idx, &g) in field.values.iter().enumerate() {
        let mut rem = idx;
        for i in (0..d).rev() {
            j[i] = rem % cells;
            rem /= cells;
        }
        let mut vol = 1.0;
        for i in 0..d {
            let a = field.lo[i] + j[i] as f64 * field.cell[i];
            clo[i] = a.max(bounds[i].0);
            chi[i] = (a + field.cell[i]).min(bounds[i].1);
            vol *= (chi[i] - clo[i]).max(0.0);
        }
        if vol <= 0.0 {
            continue;
        }
        let n = poisson_count((mu + g).exp() * vol, rng)?;
        for _ in 0..n {
            uniform_in(&clo, &chi, rng, &mut coords);
        }
    }
    finish(window, coords)
}
