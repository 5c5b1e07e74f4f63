//! Box-constrained Nelder–Mead.
//!
//! Trial points are projected onto the box before evaluation, so the
//! simplex never leaves it. Objectives may return `f64::INFINITY` to mark
//! infeasible points; the simplex then contracts away from them.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    /// Simplex diameter (sup-norm) below which the search stops.
    pub xtol: f64,
    /// Relative spread of simplex values below which the search stops.
    pub ftol: f64,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self { max_iterations: 4000, xtol: 1e-8, ftol: 1e-12, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &a), &b) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(a, b);
    }
}

/// Minimise `f` over the box `[lo, hi]` starting from `x0`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], cfg: &NelderMeadConfig) -> NelderMeadResult {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut start = x0.to_vec();
    project(&mut start, lo, hi);
    let mut simplex = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        let step = cfg.initial_step * (hi[i] - lo[i]);
        // step inward if the vertex would sit on the upper face
        v[i] = if v[i] + step <= hi[i] { v[i] + step } else { v[i] - step };
        project(&mut v, lo, hi);
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        // stable sort keeps the earlier vertex first on ties
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let best = fv[0];
        let worst = fv[n];
        let diam = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = if best.is_finite() && worst.is_finite() { worst - best } else { f64::INFINITY };
        if diam <= cfg.xtol && spread <= cfg.ftol * (best.abs() + 1e-300) {
            converged = true;
            break;
        }
        if diam <= cfg.xtol * 1e-3 {
            // collapsed simplex on a flat or walled region
            converged = best.is_finite();
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p, lo, hi);
            p
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < fv[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let mut v: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + sigma * (x - b)).collect();
            project(&mut v, lo, hi);
            fv[i] = eval(&v);
            simplex[i] = v;
        }
    }
    let (ib, _) = fv.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty simplex");
    NelderMeadResult { x: simplex[ib].clone(), f: fv[ib], iterations, evaluations: evals, converged }
}
