//! Observation windows, point patterns, and the lattice of frequencies on
//! which periodograms and Whittle sums are evaluated.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative slack used when testing lattice frequencies against the
/// annulus bounds, so that e.g. `2*pi*2/40` counts as `>= pi/10`.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Origin-centred rectangle `prod_i [-A_i/2, A_i/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    sides: Vec<f64>,
}

impl Window {
    pub fn new(sides: Vec<f64>) -> Result<Self> {
        if sides.is_empty() || sides.len() > 3 {
            return Err(Error::InvalidWindow(format!(
                "dimension must be 1, 2 or 3 (got {})",
                sides.len()
            )));
        }
        if let Some(bad) = sides.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidWindow(format!(
                "side lengths must be positive (got {bad})"
            )));
        }
        Ok(Self { sides })
    }

    /// `[-side/2, side/2]^dim`
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new(vec![side; dim])
    }

    /// Build from explicit bounds, which must describe an origin-centred box.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let mut sides = Vec::with_capacity(bounds.len());
        for &(lo, hi) in bounds {
            let tol = 1e-12 * hi.abs().max(lo.abs()).max(1.0);
            if (lo + hi).abs() > tol {
                return Err(Error::InvalidWindow(format!(
                    "window [{lo}, {hi}] is not centred at the origin"
                )));
            }
            sides.push(hi - lo);
        }
        Self::new(sides)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    /// Common side length if the window is a cube.
    pub fn cube_side(&self) -> Option<f64> {
        let a = self.sides[0];
        self.sides.iter().all(|&s| s == a).then_some(a)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.sides).all(|(xi, a)| xi.abs() <= 0.5 * a)
    }

    /// Bounds `(lo, hi)` per coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.sides.iter().map(|a| (-0.5 * a, 0.5 * a)).collect()
    }
}

/// A simple point pattern observed in a [`Window`].
///
/// Points are stored flat and sorted lexicographically, so every sum over
/// the pattern runs in a canonical order regardless of how the pattern was
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    window: Window,
    coords: Vec<f64>,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl PointPattern {
    /// Construct from a list of points. Rows are reported 0-based.
    pub fn new(window: Window, points: Vec<Vec<f64>>) -> Result<Self> {
        let d = window.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for (row, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            if !window.contains(p) {
                return Err(Error::PointOutsideWindow { row });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(window, coords)
    }

    /// Construct from flat coordinates `[x0_1, .., x0_d, x1_1, ..]`.
    pub fn from_flat(window: Window, coords: Vec<f64>) -> Result<Self> {
        let d = window.dim();
        if !coords.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch { expected: d, got: coords.len() % d });
        }
        for (row, p) in coords.chunks_exact(d).enumerate() {
            if p.iter().any(|v| !v.is_finite()) || !window.contains(p) {
                return Err(Error::PointOutsideWindow { row });
            }
        }
        let n = coords.len() / d;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| lex_cmp(&coords[i * d..(i + 1) * d], &coords[j * d..(j + 1) * d]));
        let mut sorted = Vec::with_capacity(coords.len());
        for &i in &order {
            sorted.extend_from_slice(&coords[i * d..(i + 1) * d]);
        }
        for (k, pair) in order.windows(2).enumerate() {
            let a = &sorted[k * d..(k + 1) * d];
            let b = &sorted[(k + 1) * d..(k + 2) * d];
            if lex_cmp(a, b) == Ordering::Equal {
                return Err(Error::DuplicatePoint { row: pair[0].max(pair[1]) });
            }
        }
        Ok(Self { window, coords: sorted })
    }

    pub fn empty(window: Window) -> Self {
        Self { window, coords: Vec::new() }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }
}

/// Sup-norm annulus `{w : d0 <= |w|_inf <= d1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub d0: f64,
    pub d1: f64,
}

impl DomainSpec {
    pub fn new(d0: f64, d1: f64) -> Result<Self> {
        if !(d0.is_finite() && d1.is_finite() && d0 >= 0.0 && d0 < d1) {
            return Err(Error::InvalidDomain(format!("need 0 <= d0 < d1 < inf (got {d0}, {d1})")));
        }
        Ok(Self { d0, d1 })
    }

    /// `{pi/10 <= |w|_inf <= 2 pi}`
    pub fn d_2pi() -> Self {
        Self { d0: PI / 10.0, d1: 2.0 * PI }
    }

    /// `{pi/10 <= |w|_inf <= 5 pi}`
    pub fn d_5pi() -> Self {
        Self { d0: PI / 10.0, d1: 5.0 * PI }
    }

    pub fn contains(&self, omega: &[f64]) -> bool {
        let norm = omega.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        norm >= self.d0 * (1.0 - BOUNDARY_SLACK) && norm <= self.d1 * (1.0 + BOUNDARY_SLACK)
    }
}

/// How the lattice spacing `Omega` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpacingRule {
    /// `Omega = A` for a cubic window of side `A`.
    SideLength,
    /// `Omega = A / 2`.
    HalfSide,
    Explicit(f64),
}

impl SpacingRule {
    pub fn resolve(&self, window: &Window) -> Result<f64> {
        let omega = match self {
            SpacingRule::Explicit(v) => *v,
            SpacingRule::SideLength | SpacingRule::HalfSide => {
                let a = window.cube_side().ok_or_else(|| {
                    Error::InvalidArgument(
                        "spacing relative to A requires a cubic window; give an explicit spacing"
                            .into(),
                    )
                })?;
                if matches!(self, SpacingRule::SideLength) {
                    a
                } else {
                    a / 2.0
                }
            }
        };
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive (got {omega})")));
        }
        Ok(omega)
    }
}

/// Lattice frequencies `w_k = 2 pi k / Omega` inside a [`DomainSpec`], in
/// lexicographic order of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    dim: usize,
    spacing: f64,
    domain: DomainSpec,
    indices: Vec<i64>,
    frequencies: Vec<f64>,
}

impl FrequencyGrid {
    pub fn build(window: &Window, domain: DomainSpec, rule: SpacingRule) -> Result<Self> {
        let spacing = rule.resolve(window)?;
        Self::with_spacing(window.dim(), spacing, domain)
    }

    pub fn with_spacing(dim: usize, spacing: f64, domain: DomainSpec) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3 (got {dim})")));
        }
        let step = 2.0 * PI / spacing;
        let kmax = (domain.d1 * (1.0 + BOUNDARY_SLACK) / step).floor() as i64;
        let mut indices = Vec::new();
        let mut frequencies = Vec::new();
        let mut k = vec![-kmax; dim];
        let mut omega = vec![0.0; dim];
        'outer: loop {
            for (w, &ki) in omega.iter_mut().zip(&k) {
                *w = 2.0 * PI * ki as f64 / spacing;
            }
            if domain.contains(&omega) {
                indices.extend_from_slice(&k);
                frequencies.extend_from_slice(&omega);
            }
            // odometer, last coordinate fastest => lexicographic order
            let mut pos = dim;
            loop {
                if pos == 0 {
                    break 'outer;
                }
                pos -= 1;
                if k[pos] < kmax {
                    k[pos] += 1;
                    for kj in k.iter_mut().skip(pos + 1) {
                        *kj = -kmax;
                    }
                    break;
                }
            }
        }
        if indices.is_empty() {
            return Err(Error::EmptyFrequencyDomain);
        }
        Ok(Self { dim, spacing, domain, indices, frequencies })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn lattice_index(&self, i: usize) -> &[i64] {
        &self.indices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frequency(&self, i: usize) -> &[f64] {
        &self.frequencies[i * self.dim..(i + 1) * self.dim]
    }

    pub fn indices(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.indices.chunks_exact(self.dim)
    }

    pub fn frequencies(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.frequencies.chunks_exact(self.dim)
    }

    /// Lattice cell volume `(2 pi / Omega)^d`.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.spacing).powi(self.dim as i32)
    }

    /// Largest `|k_i|` over the grid in each coordinate.
    pub fn half_widths(&self) -> Vec<i64> {
        let mut out = vec![0i64; self.dim];
        for k in self.indices() {
            for (o, ki) in out.iter_mut().zip(k) {
                *o = (*o).max(ki.abs());
            }
        }
        out
    }

    /// Position of lattice index `k`, if present.
    pub fn find(&self, k: &[i64]) -> Option<usize> {
        let d = self.dim;
        let n = self.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.indices[mid * d..(mid + 1) * d].cmp(k) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Squared lattice norm `sum_i k_i^2` of every grid point; the
    /// frequency norm is `2 pi / Omega` times its square root.
    pub fn lattice_norms2(&self) -> Vec<i64> {
        self.indices().map(|k| k.iter().map(|v| v * v).sum()).collect()
    }
}

/// Periodogram values on a [`FrequencyGrid`] with the metadata needed to
/// reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodogramField {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub taper: crate::taper::Taper,
    pub window: Window,
    pub lambda_hat: f64,
}

impl PeriodogramField {
    pub fn new(
        grid: FrequencyGrid,
        values: Vec<f64>,
        taper: crate::taper::Taper,
        window: Window,
        lambda_hat: f64,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} frequencies",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("field values must be finite and >= 0 (got {v})")));
        }
        Ok(Self { grid, values, taper, window, lambda_hat })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        assert!(Window::new(vec![]).is_err());
        assert!(Window::new(vec![1.0; 4]).is_err());
        assert!(Window::new(vec![1.0, 0.0]).is_err());
        let w = Window::new(vec![2.0, 4.0]).unwrap();
        assert_eq!(w.volume(), 8.0);
        assert!(w.contains(&[1.0, -2.0]));
        assert!(!w.contains(&[1.0001, 0.0]));
        assert!(Window::from_bounds(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn pattern_rejects_outside_and_duplicates() {
        let w = Window::cube(2, 10.0).unwrap();
        let err = PointPattern::new(w.clone(), vec![vec![0.1, 0.2], vec![6.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::PointOutsideWindow { row: 1 }));
        assert!(err.to_string().contains("point outside window"));
        let err = PointPattern::new(w.clone(), vec![vec![0.1, 0.2], vec![0.3, 0.0], vec![0.1, 0.2]]);
        assert!(matches!(err, Err(Error::DuplicatePoint { .. })));
        let p = PointPattern::new(w, vec![vec![1.0, 0.0], vec![-1.0, 3.0], vec![-1.0, 2.0]]).unwrap();
        let pts: Vec<_> = p.points().map(|x| x.to_vec()).collect();
        assert_eq!(pts, vec![vec![-1.0, 2.0], vec![-1.0, 3.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn grid_example_d2pi() {
        let w = Window::cube(2, 40.0).unwrap();
        let g = FrequencyGrid::build(&w, DomainSpec::new(PI / 10.0, 2.0 * PI).unwrap(), SpacingRule::SideLength)
            .unwrap();
        assert!(g.find(&[0, 0]).is_none());
        assert!(g.find(&[1, 1]).is_none());
        assert!(g.find(&[40, 0]).is_some());
        assert!(g.find(&[2, 0]).is_some());
        // brute-force enumeration with exact integer conditions:
        // pi/10 <= 2 pi |k|_inf / 40  <=>  |k|_inf >= 2, and |k|_inf <= 40
        let mut count = 0;
        for k1 in -40i64..=40 {
            for k2 in -40i64..=40 {
                let m = k1.abs().max(k2.abs());
                if (2..=40).contains(&m) {
                    count += 1;
                }
            }
        }
        assert_eq!(g.len(), count);
    }

    #[test]
    fn grid_contains_origin_when_d0_zero() {
        let w = Window::cube(2, 10.0).unwrap();
        let g = FrequencyGrid::build(&w, DomainSpec::new(0.0, 2.0 * PI).unwrap(), SpacingRule::SideLength)
            .unwrap();
        assert!(g.find(&[0, 0]).is_some());
        assert_eq!(g.len(), 21 * 21);
    }

    #[test]
    fn grid_errors() {
        let w = Window::new(vec![10.0, 20.0]).unwrap();
        assert!(FrequencyGrid::build(&w, DomainSpec::d_2pi(), SpacingRule::SideLength).is_err());
        assert!(FrequencyGrid::build(&w, DomainSpec::d_2pi(), SpacingRule::Explicit(10.0)).is_ok());
        let err = FrequencyGrid::with_spacing(2, 10.0, DomainSpec::new(0.1, 0.2).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "empty frequency domain");
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = FrequencyGrid::with_spacing(3, 5.0, DomainSpec::new(1.0, 4.0).unwrap()).unwrap();
        let idx: Vec<Vec<i64>> = g.indices().map(|k| k.to_vec()).collect();
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(idx, sorted);
    }
}
