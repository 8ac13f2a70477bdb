//! The linear radial problem behind `T`: assembly and direct solution.
//!
//! Unknowns are the free nodes `0..n-1`; the last node is pinned to zero.

use crate::error::{Error, Result};
use crate::functionals::{Functional, ProblemParams};
use crate::radial::{RadialField, RadialGrid};

/// Symmetric tridiagonal matrix over the free nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub main: Vec<f64>,
    /// `off[i]` couples free nodes `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl TridiagonalOperator {
    /// Stiffness plus the diagonal `potential` (one mass-weighted entry per grid node).
    pub fn from_potential(grid: &RadialGrid, potential: &[f64]) -> Self {
        let m = grid.n_nodes - 1;
        let kc = &grid.couplings;
        let main = (0..m)
            .map(|i| potential[i] + kc[i] + if i > 0 { kc[i - 1] } else { 0.0 })
            .collect();
        let off = (0..m - 1).map(|i| -kc[i]).collect();
        Self { main, off }
    }

    /// Matrix of the H^1 form `int |grad v|^2 + omega v^2`.
    pub fn h1(grid: &RadialGrid, omega: f64) -> Self {
        let potential: Vec<f64> = grid.area_weights.iter().map(|w| omega * w).collect();
        Self::from_potential(grid, &potential)
    }

    pub fn size(&self) -> usize {
        self.main.len()
    }

    /// `A v` for a full-length field; the pinned node of the result is 0.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let m = self.size();
        let mut out = vec![0.0; v.len()];
        for i in 0..m {
            let mut s = self.main[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
        out
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Solves `A x = b` on the free nodes by symmetric two-sweep elimination.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = self.size();
        let mut d = vec![0.0; m];
        let mut y = vec![0.0; b.len()];
        for i in 0..m {
            let (l, carry) = if i == 0 {
                (0.0, 0.0)
            } else {
                let l = self.off[i - 1] / d[i - 1];
                (l, l * self.off[i - 1])
            };
            d[i] = self.main[i] - carry;
            if !(d[i] > 0.0 && d[i].is_finite()) {
                return Err(Error::SolverBreakdown { row: i, pivot: d[i] });
            }
            y[i] = b[i] - if i == 0 { 0.0 } else { l * y[i - 1] };
        }
        for i in (0..m).rev() {
            let next = if i + 1 < m { self.off[i] * y[i + 1] } else { 0.0 };
            y[i] = (y[i] - next) / d[i];
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::SolverBreakdown { row: i, pivot: f64::NAN });
        }
        Ok(y)
    }
}

pub fn assemble(params: &ProblemParams, grid: &RadialGrid, u: &[f64]) -> Result<TridiagonalOperator> {
    assemble_for(&Functional::new(*params), grid, u)
}

pub fn assemble_for(f: &Functional, grid: &RadialGrid, u: &[f64]) -> Result<TridiagonalOperator> {
    grid.check(u)?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("operator assembly"));
    }
    Ok(TridiagonalOperator::from_potential(grid, &f.potential_weights(grid, u)))
}

/// `T(u)`: the solution `v` of the linear problem with coefficients frozen at `u`.
pub fn apply_t(params: &ProblemParams, grid: &RadialGrid, u: &[f64]) -> Result<RadialField> {
    apply_t_for(&Functional::new(*params), grid, u)
}

pub fn apply_t_for(f: &Functional, grid: &RadialGrid, u: &[f64]) -> Result<RadialField> {
    let op = assemble_for(f, grid, u)?;
    Ok(op.solve(&f.source_weights(grid, u))?.into())
}
