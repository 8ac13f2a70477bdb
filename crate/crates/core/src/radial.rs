//! Uniform radial grid on `[0, r_max]` with area quadrature for integrals over the plane.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 16;

/// Uniform grid `r_i = i * dr` with trapezoid weights for `2 pi r dr` and `dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n_nodes: usize,
    pub r_max: f64,
    pub dr: f64,
    pub nodes: Vec<f64>,
    pub area_weights: Vec<f64>,
    pub line_weights: Vec<f64>,
    /// Edge couplings `2 pi r_{i+1/2} / dr` of the stiffness form, one per interval.
    pub couplings: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_nodes: usize) -> Result<Self> {
        if !r_max.is_finite() || r_max <= 0.0 {
            return Err(Error::BadRadius(r_max));
        }
        if n_nodes < MIN_NODES {
            return Err(Error::TooFewNodes(n_nodes));
        }
        let last = n_nodes - 1;
        let dr = r_max / last as f64;
        let nodes: Vec<f64> = (0..n_nodes)
            .map(|i| if i == last { r_max } else { i as f64 * dr })
            .collect();
        let mut area_weights: Vec<f64> = nodes.iter().map(|&r| 2.0 * PI * r * dr).collect();
        area_weights[last] *= 0.5;
        let mut line_weights = vec![dr; n_nodes];
        line_weights[0] = 0.5 * dr;
        line_weights[last] = 0.5 * dr;
        let couplings = (0..last)
            .map(|i| 2.0 * PI * (i as f64 + 0.5))
            .collect();
        Ok(Self {
            n_nodes,
            r_max,
            dr,
            nodes,
            area_weights,
            line_weights,
            couplings,
        })
    }

    pub fn check(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_nodes {
            return Err(Error::GridMismatch {
                expected: self.n_nodes,
                got: values.len(),
            });
        }
        Ok(())
    }

    /// Samples `f(r)` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RadialField {
        RadialField::from(self.nodes.iter().map(|&r| f(r)).collect::<Vec<_>>())
    }

    /// Like [`sample`](Self::sample) but pins the last node to zero.
    pub fn sample_dirichlet(&self, f: impl Fn(f64) -> f64) -> RadialField {
        let mut u = self.sample(f);
        u.values[self.n_nodes - 1] = 0.0;
        u
    }

    /// Linear interpolation of nodal values at radius `r`, clamped to the grid.
    pub fn eval_at(&self, values: &[f64], r: f64) -> f64 {
        let x = (r / self.dr).clamp(0.0, (self.n_nodes - 1) as f64);
        let i = (x.floor() as usize).min(self.n_nodes - 2);
        let frac = x - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }
}

pub fn make_grid(r_max: f64, n_nodes: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_max, n_nodes)
}

/// Nodal samples of a radial function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadialField {
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.values.iter().map(|v| t * v).collect::<Vec<_>>().into()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl From<Vec<f64>> for RadialField {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl Deref for RadialField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl DerefMut for RadialField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// `sum_i w_i f_i`, the quadrature of `f` over the disk of radius `r_max`.
pub fn integrate(grid: &RadialGrid, f: &[f64]) -> Result<f64> {
    grid.check(f)?;
    Ok(weighted_sum(grid, f))
}

pub(crate) fn weighted_sum(grid: &RadialGrid, f: &[f64]) -> f64 {
    grid.area_weights.iter().zip(f).map(|(w, v)| w * v).sum()
}

/// `sum_i w_i |u_i|^p`; the p-th power of the L^p norm.
pub fn lp_norm_p(grid: &RadialGrid, u: &[f64], p: f64) -> Result<f64> {
    grid.check(u)?;
    Ok(power_sum(grid, u, p))
}

pub(crate) fn power_sum(grid: &RadialGrid, u: &[f64], p: f64) -> f64 {
    grid.area_weights
        .iter()
        .zip(u)
        .map(|(w, v)| w * abs_pow(*v, p))
        .sum()
}

#[inline]
pub(crate) fn abs_pow(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 2.0 {
        a * a
    } else if p == 4.0 {
        (a * a) * (a * a)
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

/// `sum_i c_i (u_{i+1} - u_i)(v_{i+1} - v_i)`, the discrete Dirichlet form.
pub(crate) fn stiffness_form(grid: &RadialGrid, u: &[f64], v: &[f64]) -> f64 {
    grid.couplings
        .iter()
        .enumerate()
        .map(|(i, c)| c * (u[i + 1] - u[i]) * (v[i + 1] - v[i]))
        .sum()
}

/// Adds `S u` into `out`, with `S` the matrix of the Dirichlet form.
pub(crate) fn stiffness_apply_add(grid: &RadialGrid, u: &[f64], out: &mut [f64]) {
    for (i, c) in grid.couplings.iter().enumerate() {
        let flux = c * (u[i + 1] - u[i]);
        out[i] -= flux;
        out[i + 1] += flux;
    }
}

/// `int |grad u|^2 dx` from midpoint differences.
pub fn gradient_norm_sq(grid: &RadialGrid, u: &[f64]) -> Result<f64> {
    grid.check(u)?;
    Ok(stiffness_form(grid, u, u))
}

/// `int |grad u|^2 + omega u^2 dx`.
pub fn h1_norm_sq(grid: &RadialGrid, omega: f64, u: &[f64]) -> Result<f64> {
    h1_inner(grid, omega, u, u)
}

/// Bilinear form of [`h1_norm_sq`].
pub fn h1_inner(grid: &RadialGrid, omega: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    grid.check(u)?;
    grid.check(v)?;
    Ok(h1_inner_unchecked(grid, omega, u, v))
}

pub(crate) fn h1_inner_unchecked(grid: &RadialGrid, omega: f64, u: &[f64], v: &[f64]) -> f64 {
    let mass: f64 = grid
        .area_weights
        .iter()
        .zip(u.iter().zip(v))
        .map(|(w, (a, b))| w * a * b)
        .sum();
    stiffness_form(grid, u, v) + omega * mass
}

/// Pointwise `(max(u, 0), min(u, 0))`.
pub fn pos_neg_parts(u: &[f64]) -> (RadialField, RadialField) {
    let plus = u.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect::<Vec<_>>();
    let minus = u.iter().map(|&v| if v < 0.0 { v } else { 0.0 }).collect::<Vec<_>>();
    (plus.into(), minus.into())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
