//! Spectral means `A(phi) = int_D phi f` and integrated periodograms,
//! both as lattice Riemann sums with cell volume `(2 pi / Omega)^d`.

use crate::geometry::{FrequencyGrid, PeriodogramField};
use crate::models::SpectralModel;

/// Riemann sum of `phi * values` over the grid, in grid order.
pub fn riemann(grid: &FrequencyGrid, values: &[f64], phi: impl Fn(&[f64]) -> f64) -> f64 {
    let s: f64 = grid.frequencies().zip(values).map(|(w, v)| phi(w) * v).sum();
    s * grid.cell_volume()
}

/// Vector-valued Riemann sum sharing one pass over the grid.
pub fn riemann_vec(grid: &FrequencyGrid, values: &[f64], p: usize, phi: impl Fn(&[f64], &mut [f64])) -> Vec<f64> {
    let mut acc = vec![0.0; p];
    let mut buf = vec![0.0; p];
    for (w, v) in grid.frequencies().zip(values) {
        phi(w, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b * v;
        }
    }
    let cell = grid.cell_volume();
    acc.iter_mut().for_each(|a| *a *= cell);
    acc
}

/// Spectral mean of the model spectrum on the grid.
pub fn spectral_mean_true(model: &SpectralModel, grid: &FrequencyGrid, phi: impl Fn(&[f64]) -> f64) -> f64 {
    let f: Vec<f64> = grid.frequencies().map(|w| model.density(w)).collect();
    riemann(grid, &f, phi)
}

/// Integrated periodogram `A_hat(phi)`.
pub fn spectral_mean_estimate(field: &PeriodogramField, phi: impl Fn(&[f64]) -> f64) -> f64 {
    riemann(&field.grid, &field.values, phi)
}

/// Vector form of [`spectral_mean_estimate`].
pub fn spectral_mean_estimate_vec(field: &PeriodogramField, p: usize, phi: impl Fn(&[f64], &mut [f64])) -> Vec<f64> {
    riemann_vec(&field.grid, &field.values, p, phi)
}
