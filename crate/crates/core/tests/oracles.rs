//! Monte Carlo oracles with frozen seeds. Each check compares a simulated
//! average against a value known in closed form.

use pointspec::dft::{intensity_hat, periodogram, periodogram_grid};
use pointspec::irdft::{ir_periodogram, ir_psd, simulate_inhomogeneous, IntensityField};
use pointspec::models::simulate;
use pointspec::rng::stream;
use pointspec::specmean::spectral_mean_estimate;
use pointspec::variance::{subsample_variance, SubsampleConfig};
use pointspec::{DomainSpec, FrequencyGrid, SpacingRule, SpectralModel, Taper, Window};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::PI;

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn poisson(lambda: f64) -> SpectralModel {
    SpectralModel::parse(&format!("poisson:lambda={lambda}"), 2).unwrap()
}

#[test]
fn poisson_counts_and_intensity() {
    let m = poisson(0.5);
    let w = Window::cube(2, 40.0).unwrap();
    let t = Taper::default();
    let (counts, lams): (Vec<f64>, Vec<f64>) = (0..500)
        .map(|s| {
            let p = simulate(&m, &w, 1000 + s).unwrap();
            (p.len() as f64, intensity_hat(&p, &t))
        })
        .unzip();
    let (mc, _) = mean_sd(&counts);
    assert!((mc - 800.0).abs() < 3.0 * (0.5 * 1600.0 / 500.0f64).sqrt(), "{mc}");
    let (ml, _) = mean_sd(&lams);
    assert!((ml - 0.5).abs() < 3.0 * (0.5 / 1600.0 / 500.0f64).sqrt() * 1.1, "{ml}");
}

#[test]
fn periodogram_mean_matches_flat_spectrum() {
    let m = poisson(0.5);
    let w = Window::cube(2, 40.0).unwrap();
    let t = Taper::default();
    let xs: Vec<f64> = (0..2000).map(|s| periodogram(&simulate(&m, &w, 5000 + s).unwrap(), &t, &[PI, PI])).collect();
    let (mean, sd) = mean_sd(&xs);
    let f = m.density(&[PI, PI]);
    assert!((f - 0.012665).abs() < 1e-6);
    assert!((mean - f).abs() < 3.0 * sd / 2000.0f64.sqrt(), "{mean} vs {f}");
}

#[test]
fn integrated_periodogram_is_normal() {
    let m = poisson(1.0);
    let w = Window::cube(2, 40.0).unwrap();
    let t = Taper::default();
    let grid = FrequencyGrid::build(&w, DomainSpec::d_2pi(), SpacingRule::SideLength).unwrap();
    let xs: Vec<f64> = (0..500)
        .map(|s| spectral_mean_estimate(&periodogram_grid(&simulate(&m, &w, 9000 + s).unwrap(), &t, &grid), |_| 1.0))
        .collect();
    // Jarque-Bera on the standardised sample
    let (mean, sd) = mean_sd(&xs);
    let z: Vec<f64> = xs.iter().map(|x| (x - mean) / sd).collect();
    let n = z.len() as f64;
    let skew = z.iter().map(|v| v.powi(3)).sum::<f64>() / n;
    let kurt = z.iter().map(|v| v.powi(4)).sum::<f64>() / n - 3.0;
    let jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(jb);
    assert!(p > 0.01, "jb {jb} p {p}");
}

#[test]
fn subsampling_matches_replicate_variance() {
    let m = poisson(1.0);
    let w = Window::cube(2, 40.0).unwrap();
    let t = Taper::default();
    let grid = FrequencyGrid::build(&w, DomainSpec::d_2pi(), SpacingRule::SideLength).unwrap();
    let xs: Vec<f64> = (0..300)
        .map(|s| spectral_mean_estimate(&periodogram_grid(&simulate(&m, &w, 20_000 + s).unwrap(), &t, &grid), |_| 1.0))
        .collect();
    let (_, sd) = mean_sd(&xs);
    let direct = w.volume() * sd * sd;
    let cfg = SubsampleConfig { block: Some(8.0), ..Default::default() };
    let zetas: Vec<f64> = (0..5)
        .map(|s| {
            let p = simulate(&m, &w, 30_000 + s).unwrap();
            subsample_variance(&p, 1, |_, o| o[0] = 1.0, DomainSpec::d_2pi(), &t, &cfg).unwrap().zeta[0]
        })
        .collect();
    for z in zetas {
        assert!(z / direct > 0.5 && z / direct < 2.0, "zeta {z} direct {direct}");
    }
}

#[test]
fn ir_periodogram_mean_matches_pseudo_spectrum() {
    let lam = IntensityField::linear(1.5, vec![1.0, 0.0]).unwrap();
    let w = Window::cube(2, 20.0).unwrap();
    let t = Taper::default();
    let probes = [[PI, PI], [1.0, -2.0], [0.5, 2.5]];
    let mut sums = [Vec::new(), Vec::new(), Vec::new()];
    for s in 0..1000 {
        let p = simulate_inhomogeneous(&lam, &w, &mut stream(77, s)).unwrap();
        for (acc, o) in sums.iter_mut().zip(&probes) {
            acc.push(ir_periodogram(&p, &t, &lam, o).unwrap());
        }
    }
    for (xs, o) in sums.iter().zip(&probes) {
        let (mean, sd) = mean_sd(xs);
        let f = ir_psd(|_| 0.0, 1.0, &t, &lam, o);
        assert!((mean - f).abs() < 3.0 * sd / 1000.0f64.sqrt(), "{o:?}: {mean} vs {f}");
    }
}
