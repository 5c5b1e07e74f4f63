//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

/// Integral estimate and its error bound.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Single 15-point Kronrod rule, exact for polynomials of degree 22.
pub fn fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    gk15(&f, a, b).0
}

/// Adaptive integration of `f` over `[a, b]`, bisecting the interval with
/// the largest error estimate until the total error meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if parts.len() >= cfg.max_intervals {
            return QuadResult { value: total, error: err, converged: false };
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, pv, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            parts.push((lo, hi, pv, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        // recompute sums from scratch to avoid drift from repeated updates
        total = parts.iter().map(|p| p.2).sum();
        err = parts.iter().map(|p| p.3).sum();
    }
    QuadResult { value: total, error: err, converged: true }
}

/// Adaptive integration over consecutive breakpoints, summing the pieces.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], cfg: QuadConfig) -> QuadResult {
    let mut out = QuadResult { value: 0.0, error: 0.0, converged: true };
    for w in breaks.windows(2) {
        let r = integrate(&f, w[0], w[1], cfg);
        out.value += r.value;
        out.error += r.error;
        out.converged &= r.converged;
    }
    out
}

/// Fourier transform `int_{R^d} g(|x|) exp(-i x.w) dx` of a radial
/// function at `|w| = w`, integrating `r` over `[0, end]` with breaks at
/// dyadic multiples of `scale` and near the zeros of the radial kernel.
pub fn radial_fourier<F: Fn(f64) -> f64>(g: F, w: f64, dim: usize, scale: f64, end: f64) -> f64 {
    use crate::special::j0;
    use std::f64::consts::PI;
    let mut breaks = vec![0.0];
    for m in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        if m * scale < end {
            breaks.push(m * scale);
        }
    }
    if w > 0.0 {
        // approximate zeros: cos at (m - 1/2) pi, J0 at (m - 1/4) pi, sinc at m pi
        let shift = match dim {
            1 => 0.5,
            2 => 0.25,
            _ => 0.0,
        };
        let mut m = 1.0;
        loop {
            let z = (m - shift) * PI / w;
            if z >= end {
                break;
            }
            breaks.push(z);
            m += 1.0;
        }
    }
    breaks.push(end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let cfg = QuadConfig { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 200 };
    match dim {
        1 => 2.0 * integrate_pieces(|r| g(r) * (w * r).cos(), &breaks, cfg).value,
        2 => 2.0 * PI * integrate_pieces(|r| g(r) * j0(w * r) * r, &breaks, cfg).value,
        _ => 4.0 * PI * integrate_pieces(|r| g(r) * r * r * crate::taper::sinc(w * r), &breaks, cfg).value,
    }
}
