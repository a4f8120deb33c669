//! Uniform grids on [0,1] and grid-sampled functions carrying derivative data.
//!
//! Quadrature is composite Simpson; when the interval count is odd the last
//! three cells use the 3/8 rule so the global order stays O(h^4). Functions
//! vanish at both endpoints (Dirichlet). Derivative samples (`dvalues`) are
//! kept alongside values: integrators and analytic constructions supply exact
//! ones, and `from_values` falls back to central differences.

use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

pub const DEFAULT_NODES: usize = 2049;

#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    n_nodes: usize,
    h: f64,
    #[serde(skip)]
    nodes: Arc<Vec<f64>>,
    #[serde(skip)]
    weights: Arc<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_nodes == other.n_nodes
    }
}

impl Grid {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 17 {
            return Err(Error::domain(format!(
                "grid needs at least 17 nodes, got {n_nodes}"
            )));
        }
        let m = n_nodes - 1;
        let h = 1.0 / m as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| i as f64 * h).collect();
        nodes[m] = 1.0;

        // Simpson weights; 3/8 tail when the cell count is odd.
        let mut w = vec![0.0; n_nodes];
        let pairs = if m % 2 == 0 { m / 2 } else { (m - 3) / 2 };
        for k in 0..pairs {
            let i = 2 * k;
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
        }
        if m % 2 != 0 {
            let i = m - 3;
            w[i] += 3.0 * h / 8.0;
            w[i + 1] += 9.0 * h / 8.0;
            w[i + 2] += 9.0 * h / 8.0;
            w[i + 3] += 3.0 * h / 8.0;
        }

        Ok(Grid {
            n_nodes,
            h,
            nodes: Arc::new(nodes),
            weights: Arc::new(w),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Quadrature weights; `integral(f) = Σ w_i f_i`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite Boole weights (h^6 accurate on smooth integrands), available
    /// when the cell count is a multiple of 4. Shared panel-edge nodes get
    /// equal half-weights from both sides, so the averaged-value convention
    /// for piecewise data keeps its cancellation there.
    pub fn boole_weights(&self) -> Option<Vec<f64>> {
        let m = self.n_nodes - 1;
        if m % 4 != 0 {
            return None;
        }
        let c = 2.0 * self.h / 45.0;
        let mut w = vec![0.0; self.n_nodes];
        for k in 0..m / 4 {
            let i = 4 * k;
            w[i] += 7.0 * c;
            w[i + 1] += 32.0 * c;
            w[i + 2] += 12.0 * c;
            w[i + 3] += 32.0 * c;
            w[i + 4] += 7.0 * c;
        }
        Some(w)
    }

    pub fn integral(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.n_nodes);
        self.weights
            .iter()
            .zip(samples)
            .map(|(w, f)| w * f)
            .sum()
    }

    /// ∫ |f|^r from nodal samples.
    pub fn norm_pow(&self, samples: &[f64], r: f64) -> f64 {
        assert_eq!(samples.len(), self.n_nodes);
        if r == 2.0 {
            return self.weights.iter().zip(samples).map(|(w, f)| w * f * f).sum();
        }
        if r.fract() == 0.0 && (1.0..=16.0).contains(&r) {
            let k = r as i32;
            return self
                .weights
                .iter()
                .zip(samples)
                .map(|(w, f)| w * f.abs().powi(k))
                .sum();
        }
        self.weights
            .iter()
            .zip(samples)
            .map(|(w, f)| w * f.abs().powf(r))
            .sum()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(DEFAULT_NODES).unwrap()
    }
}

/// A function sampled on a [`Grid`], vanishing at both endpoints, together
/// with derivative samples.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    dvalues: Vec<f64>,
}

impl GridFunction {
    /// Build from values and exact derivative samples (integrator output or
    /// analytic derivatives).
    pub fn new(grid: Grid, values: Vec<f64>, dvalues: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() || dvalues.len() != grid.n_nodes() {
            return Err(Error::domain("sample count does not match grid"));
        }
        if !values.iter().chain(dvalues.iter()).all(|v| v.is_finite()) {
            return Err(Error::domain("non-finite sample"));
        }
        if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
            return Err(Error::domain("function must vanish at both endpoints"));
        }
        Ok(GridFunction { grid, values, dvalues })
    }

    /// Build from values alone; derivatives by central differences with
    /// one-sided second-order stencils at the endpoints.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let n = grid.n_nodes();
        if values.len() != n {
            return Err(Error::domain("sample count does not match grid"));
        }
        let h = grid.h();
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }
        GridFunction::new(grid, values, d)
    }

    pub fn zero(grid: Grid) -> Self {
        let n = grid.n_nodes();
        GridFunction {
            grid,
            values: vec![0.0; n],
            dvalues: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dvalues(&self) -> &[f64] {
        &self.dvalues
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            dvalues: self.dvalues.iter().map(|v| c * v).collect(),
        }
    }

    /// a·u + b·v with derivative samples combined the same way.
    pub fn linear_combination(a: f64, u: &GridFunction, b: f64, v: &GridFunction) -> Result<Self> {
        if u.grid != v.grid {
            return Err(Error::domain("grid mismatch in linear combination"));
        }
        let values = u
            .values
            .iter()
            .zip(&v.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let dvalues = u
            .dvalues
            .iter()
            .zip(&v.dvalues)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFunction::new(u.grid.clone(), values, dvalues)
    }

    /// Restrict to a coarser grid whose nodes are a subset of this one
    /// (cell counts must divide); samples are taken exactly, no interpolation.
    pub fn downsample_to(&self, grid: &Grid) -> Result<Self> {
        let fine = self.grid.n_nodes() - 1;
        let coarse = grid.n_nodes() - 1;
        if fine % coarse != 0 {
            return Err(Error::domain(format!(
                "cannot downsample {} nodes onto {}: cell counts do not divide",
                self.grid.n_nodes(),
                grid.n_nodes()
            )));
        }
        let stride = fine / coarse;
        let values = self.values.iter().step_by(stride).copied().collect();
        let dvalues = self.dvalues.iter().step_by(stride).copied().collect();
        GridFunction::new(grid.clone(), values, dvalues)
    }

    /// ‖u‖_r^r under the grid quadrature.
    pub fn norm_pow(&self, r: f64) -> f64 {
        self.grid.norm_pow(&self.values, r)
    }

    /// ‖u′‖_r^r under the grid quadrature.
    pub fn dnorm_pow(&self, r: f64) -> f64 {
        self.grid.norm_pow(&self.dvalues, r)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_positive_interior(&self) -> bool {
        self.values[1..self.values.len() - 1].iter().all(|&v| v > 0.0)
    }

    /// max_i |u(x_i) − u(1 − x_i)|; the grid is symmetric so this is exact.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.values.len();
        let mut m = 0.0f64;
        for i in 0..n {
            m = m.max((self.values[i] - self.values[n - 1 - i]).abs());
        }
        m
    }
}

/// sin(jπx) modes with analytic derivatives, sampled once per grid. Descent
/// and Newton corrections live in this span so iterates keep exact derivative
/// samples; a finite-difference operator would admit alternating null modes.
pub(crate) struct SineBasis {
    pub values: Vec<Vec<f64>>,
    pub dvalues: Vec<Vec<f64>>,
}

impl SineBasis {
    pub fn new(grid: &Grid, n_modes: usize) -> Self {
        let pi = std::f64::consts::PI;
        let n = grid.n_nodes();
        let mut values = Vec::with_capacity(n_modes);
        let mut dvalues = Vec::with_capacity(n_modes);
        for j in 1..=n_modes {
            let k = j as f64 * pi;
            let mut v = vec![0.0; n];
            let mut d = vec![0.0; n];
            for (i, &x) in grid.nodes().iter().enumerate() {
                v[i] = (k * x).sin();
                d[i] = k * (k * x).cos();
            }
            v[0] = 0.0;
            v[n - 1] = 0.0;
            values.push(v);
            dvalues.push(d);
        }
        SineBasis { values, dvalues }
    }

    pub fn n_modes(&self) -> usize {
        self.values.len()
    }

    /// Σ c_j s_j as a GridFunction.
    pub fn combination(&self, grid: &Grid, coeffs: &[f64]) -> GridFunction {
        let n = grid.n_nodes();
        let mut values = vec![0.0; n];
        let mut dvalues = vec![0.0; n];
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for i in 0..n {
                values[i] += c * self.values[j][i];
                dvalues[i] += c * self.dvalues[j][i];
            }
        }
        GridFunction::new(grid.clone(), values, dvalues).expect("sine combination is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(16).is_err());
        assert!(Grid::new(17).is_ok());
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        for n in [17usize, 18, 33, 100] {
            let g = Grid::new(n).unwrap();
            let samples: Vec<f64> = g.nodes().iter().map(|&x| 3.0 * x * x * x - x + 2.0).collect();
            assert_abs_diff_eq!(g.integral(&samples), 0.75 - 0.5 + 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn quartic_error_is_fourth_order() {
        let value = |n: usize| {
            let g = Grid::new(n).unwrap();
            let s: Vec<f64> = g.nodes().iter().map(|&x| (4.0 * x).sin()).collect();
            (g.integral(&s) - (1.0 - 4.0f64.cos()) / 4.0).abs()
        };
        let e1 = value(33);
        let e2 = value(65);
        assert!(e2 < e1 / 12.0, "e1={e1:.3e} e2={e2:.3e}");
    }

    #[test]
    fn central_differences_match_smooth_derivative() {
        let g = Grid::new(1025).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|&x| (std::f64::consts::PI * x).sin()).collect();
        let mut vals = vals;
        vals[0] = 0.0;
        let n = vals.len();
        vals[n - 1] = 0.0;
        let f = GridFunction::from_values(g.clone(), vals).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            let exact = std::f64::consts::PI * (std::f64::consts::PI * x).cos();
            assert_abs_diff_eq!(f.dvalues()[i], exact, epsilon = 5e-5);
        }
    }

    #[test]
    fn endpoint_enforcement() {
        let g = Grid::new(17).unwrap();
        let mut v = vec![0.0; 17];
        v[0] = 1e-12;
        assert!(GridFunction::from_values(g, v).is_err());
    }
}
