//! Energies, their exact discrete gradients, and the Nehari and Pohozaev certificates.

use serde::{Deserialize, Serialize};

use crate::chern_simons::{b_energy_with, b_gradient_with, h_values, multiplier_with};
use crate::error::{Error, Result};
use crate::operator_t::TridiagonalOperator;
use crate::radial::{abs_pow, dot, power_sum, stiffness_apply_add, stiffness_form, RadialField, RadialGrid};

/// `(omega, lambda, p, gamma, beta, alpha, q)`; `gamma = beta = 0` is the unperturbed problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub omega: f64,
    pub lambda: f64,
    pub p: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub q: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            lambda: 1.0,
            p: 5.0,
            gamma: 0.0,
            beta: 0.0,
            alpha: 0.25,
            q: 7.0,
        }
    }
}

impl ProblemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let all = [self.omega, self.lambda, self.p, self.gamma, self.beta, self.alpha, self.q];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if self.omega <= 0.0 {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if self.lambda <= 0.0 {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.p > 4.0 && self.p < 6.0) {
            return bad(format!("p must lie in (4,6), got {}", self.p));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0,1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0,1], got {}", self.beta));
        }
        let alpha_max = 0.5f64.min((self.p - 4.0) / 2.0);
        if !(self.alpha > 0.0 && self.alpha < alpha_max) {
            return bad(format!("alpha must lie in (0,{alpha_max}), got {}", self.alpha));
        }
        if !(self.q > 6.0 && self.q < 8.0) {
            return bad(format!("q must lie in (6,8), got {}", self.q));
        }
        Ok(())
    }

    /// Same parameters with `gamma = beta = level`.
    pub fn perturbed(&self, level: f64) -> Self {
        Self {
            gamma: level,
            beta: level,
            ..*self
        }
    }

    pub fn is_unperturbed(&self) -> bool {
        self.gamma == 0.0 && self.beta == 0.0
    }
}

/// Certificate residuals, all in energy units, with the norms they are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub grad_norm: f64,
    pub nehari: f64,
    pub pohozaev: f64,
    pub h1_norm_sq: f64,
    pub l2_norm_sq: f64,
}

impl Residuals {
    pub fn is_finite(&self) -> bool {
        [self.grad_norm, self.nehari, self.pohozaev, self.h1_norm_sq, self.l2_norm_sq]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn relative_grad(&self) -> f64 {
        self.grad_norm / self.h1_norm_sq.sqrt()
    }

    pub fn relative_nehari(&self) -> f64 {
        self.nehari / self.h1_norm_sq
    }
}

/// An energy `I_{gamma,beta}` whose Chern-Simons term is multiplied by `cs_scale`.
///
/// `cs_scale = 1` is the physical problem; other values give the rescaled form
/// used for large `lambda`, and `cs_scale = 0` switches the nonlocal term off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functional {
    pub params: ProblemParams,
    pub cs_scale: f64,
}

pub(crate) struct Terms {
    pub stiffness: f64,
    pub mass: f64,
    pub b: f64,
    pub quartic: f64,
    pub pow_p: f64,
    pub pow_q: f64,
}

impl From<ProblemParams> for Functional {
    fn from(params: ProblemParams) -> Self {
        Self::new(params)
    }
}

impl Functional {
    pub fn new(params: ProblemParams) -> Self {
        Self {
            params,
            cs_scale: 1.0,
        }
    }

    /// `J(v) = 1/2 ||v||^2 + lambda_bar B(v) - 1/p int |v|^p`.
    pub fn rescaled(params: ProblemParams, lambda_bar: f64) -> Self {
        Self {
            params: ProblemParams {
                lambda: 1.0,
                gamma: 0.0,
                beta: 0.0,
                ..params
            },
            cs_scale: lambda_bar,
        }
    }

    pub(crate) fn terms(&self, grid: &RadialGrid, u: &[f64]) -> Terms {
        let pr = &self.params;
        let b = if self.cs_scale == 0.0 {
            0.0
        } else {
            b_energy_with(grid, u, &h_values(grid, u))
        };
        Terms {
            stiffness: stiffness_form(grid, u, u),
            mass: power_sum(grid, u, 2.0),
            b,
            quartic: if pr.gamma > 0.0 { power_sum(grid, u, 4.0) } else { 0.0 },
            pow_p: power_sum(grid, u, pr.p),
            pow_q: if pr.beta > 0.0 { power_sum(grid, u, pr.q) } else { 0.0 },
        }
    }

    pub fn energy(&self, grid: &RadialGrid, u: &[f64]) -> Result<f64> {
        grid.check(u)?;
        Ok(self.energy_unchecked(grid, u))
    }

    pub(crate) fn energy_unchecked(&self, grid: &RadialGrid, u: &[f64]) -> f64 {
        let pr = &self.params;
        let t = self.terms(grid, u);
        let mut e = 0.5 * (t.stiffness + pr.omega * t.mass) + self.cs_scale * t.b
            - pr.lambda / pr.p * t.pow_p;
        if pr.gamma > 0.0 {
            e += pr.gamma / (4.0 * (1.0 + pr.alpha)) * t.quartic.powf(1.0 + pr.alpha);
        }
        if pr.beta > 0.0 {
            e -= pr.beta / pr.q * t.pow_q;
        }
        e
    }

    /// Exact gradient of the discrete energy with respect to all nodal values.
    pub fn gradient(&self, grid: &RadialGrid, u: &[f64]) -> Result<RadialField> {
        grid.check(u)?;
        Ok(self.gradient_unchecked(grid, u).into())
    }

    pub(crate) fn gradient_unchecked(&self, grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        let mut out = vec![0.0; u.len()];
        stiffness_apply_add(grid, u, &mut out);
        if self.cs_scale != 0.0 {
            let gb = b_gradient_with(grid, u, &h_values(grid, u));
            for (o, g) in out.iter_mut().zip(&gb) {
                *o += self.cs_scale * g;
            }
        }
        let coupling = self.quartic_coupling(grid, u);
        for (i, o) in out.iter_mut().enumerate() {
            let v = u[i];
            let w = grid.area_weights[i];
            *o += w * (pr.omega * v + coupling * v * v * v) - w * self.source_density(v);
        }
        out
    }

    /// `gamma (int u^4)^alpha`, the coefficient of the quartic perturbation.
    pub(crate) fn quartic_coupling(&self, grid: &RadialGrid, u: &[f64]) -> f64 {
        let pr = &self.params;
        if pr.gamma > 0.0 {
            pr.gamma * power_sum(grid, u, 4.0).powf(pr.alpha)
        } else {
            0.0
        }
    }

    /// `lambda |v|^{p-2} v + beta |v|^{q-2} v`.
    #[inline]
    pub(crate) fn source_density(&self, v: f64) -> f64 {
        let pr = &self.params;
        let mut s = pr.lambda * abs_pow(v, pr.p - 2.0) * v;
        if pr.beta > 0.0 {
            s += pr.beta * abs_pow(v, pr.q - 2.0) * v;
        }
        s
    }

    /// Per-node mass-weighted potential `w_i (omega + B(u)_i + gamma (int u^4)^alpha u_i^2)`.
    pub(crate) fn potential_weights(&self, grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        let coupling = self.quartic_coupling(grid, u);
        let mult = if self.cs_scale != 0.0 {
            multiplier_with(grid, u, &h_values(grid, u))
        } else {
            vec![0.0; u.len()]
        };
        (0..u.len())
            .map(|i| {
                grid.area_weights[i]
                    * (pr.omega + self.cs_scale * mult[i] + coupling * u[i] * u[i])
            })
            .collect()
    }

    /// Mass-weighted right-hand side `w_i (lambda |u|^{p-2} u + beta |u|^{q-2} u)`.
    pub(crate) fn source_weights(&self, grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
        (0..u.len())
            .map(|i| grid.area_weights[i] * self.source_density(u[i]))
            .collect()
    }

    pub fn nehari_residual(&self, grid: &RadialGrid, u: &[f64]) -> Result<f64> {
        grid.check(u)?;
        Ok(self.nehari_from(&self.terms(grid, u)))
    }

    fn nehari_from(&self, t: &Terms) -> f64 {
        let pr = &self.params;
        let mut r = t.stiffness + pr.omega * t.mass + 6.0 * self.cs_scale * t.b
            - pr.lambda * t.pow_p;
        if pr.gamma > 0.0 {
            r += pr.gamma * t.quartic.powf(1.0 + pr.alpha);
        }
        if pr.beta > 0.0 {
            r -= pr.beta * t.pow_q;
        }
        r
    }

    pub fn pohozaev_residual(&self, grid: &RadialGrid, u: &[f64]) -> Result<f64> {
        grid.check(u)?;
        Ok(self.pohozaev_from(&self.terms(grid, u)))
    }

    fn pohozaev_from(&self, t: &Terms) -> f64 {
        let pr = &self.params;
        let mut r = pr.omega * t.mass + 4.0 * self.cs_scale * t.b - 2.0 * pr.lambda / pr.p * t.pow_p;
        if pr.gamma > 0.0 {
            r += 0.5 * pr.gamma * t.quartic.powf(1.0 + pr.alpha);
        }
        if pr.beta > 0.0 {
            r -= 2.0 * pr.beta / pr.q * t.pow_q;
        }
        r
    }

    pub fn residuals(&self, grid: &RadialGrid, u: &[f64]) -> Result<Residuals> {
        grid.check(u)?;
        let t = self.terms(grid, u);
        let g = self.gradient_unchecked(grid, u);
        Ok(Residuals {
            grad_norm: dual_norm(grid, self.params.omega, &g)?,
            nehari: self.nehari_from(&t),
            pohozaev: self.pohozaev_from(&t),
            h1_norm_sq: t.stiffness + self.params.omega * t.mass,
            l2_norm_sq: t.mass,
        })
    }
}

/// `sqrt(g^T K^{-1} g)` over the free nodes, with `K` the matrix of the H^1 form.
pub fn dual_norm(grid: &RadialGrid, omega: f64, g: &[f64]) -> Result<f64> {
    grid.check(g)?;
    let k = TridiagonalOperator::h1(grid, omega);
    let x = k.solve(g)?;
    Ok(dot(&x, g).max(0.0).sqrt())
}

pub fn energy(params: &ProblemParams, grid: &RadialGrid, u: &[f64]) -> Result<f64> {
    Functional::new(*params).energy(grid, u)
}

pub fn gradient(params: &ProblemParams, grid: &RadialGrid, u: &[f64]) -> Result<RadialField> {
    Functional::new(*params).gradient(grid, u)
}

pub fn nehari_residual(params: &ProblemParams, grid: &RadialGrid, u: &[f64]) -> Result<f64> {
    Functional::new(*params).nehari_residual(grid, u)
}

pub fn pohozaev_residual(params: &ProblemParams, grid: &RadialGrid, u: &[f64]) -> Result<f64> {
    Functional::new(*params).pohozaev_residual(grid, u)
}

/// `(lambda^{-4/(p-2)}, lambda^{1/(p-2)} u)`.
pub fn rescale(lambda: f64, p: f64, grid: &RadialGrid, u: &[f64]) -> Result<(f64, RadialField)> {
    grid.check(u)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
    }
    let factor = lambda.powf(1.0 / (p - 2.0));
    Ok((lambda.powf(-4.0 / (p - 2.0)), u.iter().map(|v| factor * v).collect::<Vec<_>>().into()))
}

/// Inverse of [`rescale`]: `lambda^{-1/(p-2)} v`.
pub fn unscale(lambda: f64, p: f64, v: &[f64]) -> RadialField {
    let factor = lambda.powf(1.0 / (p - 2.0));
    v.iter().map(|x| x / factor).collect::<Vec<_>>().into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;
    use approx::assert_relative_eq;

    fn full() -> ProblemParams {
        ProblemParams {
            gamma: 0.5,
            beta: 0.5,
            ..ProblemParams::default()
        }
    }

    #[test]
    fn validation_messages() {
        assert!(ProblemParams::default().validate().is_ok());
        let e = ProblemParams { p: 6.5, ..Default::default() }.validate().unwrap_err();
        assert!(e.to_string().contains("p must lie in (4,6)"));
        assert!(ProblemParams { alpha: 0.6, ..Default::default() }.validate().is_err());
        assert!(ProblemParams { q: 5.0, ..Default::default() }.validate().is_err());
        assert!(ProblemParams { omega: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn zero_field() {
        let g = make_grid(10.0, 129).unwrap();
        let z = vec![0.0; g.n_nodes];
        let f = Functional::new(full());
        assert_eq!(f.energy(&g, &z).unwrap(), 0.0);
        assert!(f.gradient(&g, &z).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(f.nehari_residual(&g, &z).unwrap(), 0.0);
        assert_eq!(f.pohozaev_residual(&g, &z).unwrap(), 0.0);
    }

    #[test]
    fn nehari_is_gradient_paired_with_field() {
        let g = make_grid(10.0, 400).unwrap();
        let u = g.sample_dirichlet(|r| 2.0 * (1.0 - r) * (-r * r / 2.0).exp());
        for params in [ProblemParams::default(), full()] {
            let f = Functional::new(params);
            let gr = f.gradient(&g, &u).unwrap();
            assert_relative_eq!(dot(&gr, &u), f.nehari_residual(&g, &u).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn energy_is_linear_in_gamma() {
        let g = make_grid(10.0, 257).unwrap();
        let u = g.sample_dirichlet(|r| (-r * r).exp());
        let params = |gamma| ProblemParams { gamma, ..Default::default() };
        let q = power_sum(&g, &u, 4.0);
        let e0 = energy(&params(0.0), &g, &u).unwrap();
        let e1 = energy(&params(1e-6), &g, &u).unwrap();
        assert!((e1 - e0).abs() <= 1e-6 * q.powf(1.25) / 5.0 * (1.0 + 1e-9));
    }

    #[test]
    fn rescale_at_unit_lambda_is_identity() {
        let g = make_grid(5.0, 64).unwrap();
        let u = g.sample(|r| (-r).exp());
        let (lb, ub) = rescale(1.0, 5.0, &g, &u).unwrap();
        assert_eq!(lb, 1.0);
        assert_eq!(ub, u);
        assert!(rescale(0.0, 5.0, &g, &u).is_err());
    }

    #[test]
    fn rescaled_energy_identity() {
        let g = make_grid(10.0, 513).unwrap();
        let u = g.sample_dirichlet(|r| 1.3 * (1.0 - r / 2.0) * (-r * r / 2.0).exp());
        let params = ProblemParams { lambda: 100.0, ..Default::default() };
        let (lb, ub) = rescale(100.0, 5.0, &g, &u).unwrap();
        assert_relative_eq!(lb, 100f64.powf(-4.0 / 3.0), max_relative = 1e-15);
        let j = Functional::rescaled(params, lb).energy(&g, &ub).unwrap();
        let i = energy(&params, &g, &u).unwrap();
        assert_relative_eq!(j, 100f64.powf(2.0 / 3.0) * i, max_relative = 1e-12);
    }

    #[test]
    fn pohozaev_unperturbed_form() {
        let g = make_grid(10.0, 257).unwrap();
        let u = g.sample_dirichlet(|r| (-r * r).exp());
        let pr = ProblemParams::default();
        let b = crate::chern_simons::b_energy(&g, &u).unwrap();
        let expect = power_sum(&g, &u, 2.0) + 4.0 * b - 0.4 * power_sum(&g, &u, 5.0);
        assert_relative_eq!(pohozaev_residual(&pr, &g, &u).unwrap(), expect, max_relative = 1e-14);
    }
}
