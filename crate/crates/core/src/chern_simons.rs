//! Gauge integral `h`, its tail, the nonlocal multiplier and the Chern-Simons energy.

use crate::error::Result;
use crate::radial::{RadialField, RadialGrid};

/// `h(r_i) = 1/2 int_0^{r_i} t u(t)^2 dt` by cumulative trapezoid.
#[derive(Debug, Clone, PartialEq)]
pub struct HField {
    pub values: Vec<f64>,
}

/// `g(r_i) = int_{r_i}^{r_max} h(s)/s u(s)^2 ds` by reverse cumulative trapezoid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailField {
    pub values: Vec<f64>,
}

pub fn compute_h(grid: &RadialGrid, u: &[f64]) -> Result<HField> {
    grid.check(u)?;
    Ok(HField {
        values: h_values(grid, u),
    })
}

pub(crate) fn h_values(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let half_dr = 0.5 * grid.dr;
    let mut h = vec![0.0; u.len()];
    let mut prev = 0.0;
    for i in 1..u.len() {
        let cur = 0.5 * grid.nodes[i] * u[i] * u[i];
        h[i] = h[i - 1] + half_dr * (prev + cur);
        prev = cur;
    }
    h
}

pub fn compute_tail(grid: &RadialGrid, u: &[f64], h: &HField) -> Result<TailField> {
    grid.check(u)?;
    grid.check(&h.values)?;
    Ok(TailField {
        values: tail_values(grid, u, &h.values),
    })
}

pub(crate) fn tail_values(grid: &RadialGrid, u: &[f64], h: &[f64]) -> Vec<f64> {
    let n = u.len();
    let half_dr = 0.5 * grid.dr;
    let integrand = |i: usize| {
        if i == 0 {
            0.0
        } else {
            h[i] / grid.nodes[i] * u[i] * u[i]
        }
    };
    let mut g = vec![0.0; n];
    let mut next = integrand(n - 1);
    for i in (0..n - 1).rev() {
        let cur = integrand(i);
        g[i] = g[i + 1] + half_dr * (cur + next);
        next = cur;
    }
    g
}

/// `B(u) = 1/2 int u^2 h^2 / |x|^2 dx`; the origin node contributes nothing.
pub fn b_energy(grid: &RadialGrid, u: &[f64]) -> Result<f64> {
    grid.check(u)?;
    let h = h_values(grid, u);
    Ok(b_energy_with(grid, u, &h))
}

pub(crate) fn b_energy_with(grid: &RadialGrid, u: &[f64], h: &[f64]) -> f64 {
    0.5 * (1..u.len())
        .map(|i| {
            let hr = h[i] / grid.nodes[i];
            grid.area_weights[i] * u[i] * u[i] * hr * hr
        })
        .sum::<f64>()
}

/// Exact gradient of [`b_energy`] with respect to the nodal values.
pub fn b_gradient(grid: &RadialGrid, u: &[f64]) -> Result<RadialField> {
    grid.check(u)?;
    let h = h_values(grid, u);
    Ok(b_gradient_with(grid, u, &h).into())
}

pub(crate) fn b_gradient_with(grid: &RadialGrid, u: &[f64], h: &[f64]) -> Vec<f64> {
    let n = u.len();
    let sens = |j: usize| {
        if j == 0 {
            0.0
        } else {
            grid.area_weights[j] * u[j] * u[j] * h[j] / (grid.nodes[j] * grid.nodes[j])
        }
    };
    let mut out = vec![0.0; n];
    let mut later = 0.0;
    for i in (1..n).rev() {
        let r = grid.nodes[i];
        let s = sens(i);
        let hr = h[i] / r;
        out[i] = grid.area_weights[i] * u[i] * hr * hr + u[i] * r * grid.dr * (later + 0.5 * s);
        later += s;
    }
    out
}

/// Pointwise `h^2/r^2 + g`, with the first term taken as 0 at the origin.
pub fn multiplier(grid: &RadialGrid, u: &[f64]) -> Result<RadialField> {
    grid.check(u)?;
    let h = h_values(grid, u);
    Ok(multiplier_with(grid, u, &h).into())
}

pub(crate) fn multiplier_with(grid: &RadialGrid, u: &[f64], h: &[f64]) -> Vec<f64> {
    let mut m = tail_values(grid, u, h);
    for i in 1..m.len() {
        let hr = h[i] / grid.nodes[i];
        m[i] += hr * hr;
    }
    m
}

/// Electric potential `A0 = g` and azimuthal magnitude `h(r)/r`.
pub fn gauge_fields(grid: &RadialGrid, u: &[f64]) -> Result<(TailField, RadialField)> {
    grid.check(u)?;
    let h = h_values(grid, u);
    let a0 = TailField {
        values: tail_values(grid, u, &h),
    };
    let atheta = (0..u.len())
        .map(|i| if i == 0 { 0.0 } else { h[i] / grid.nodes[i] })
        .collect::<Vec<_>>();
    Ok((a0, atheta.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{dot, make_grid};
    use approx::assert_relative_eq;

    fn extremal(g: &RadialGrid) -> RadialField {
        g.sample(|r| 8f64.sqrt() / (1.0 + r * r))
    }

    #[test]
    fn zero_field_gives_zero_everything() {
        let g = make_grid(10.0, 257).unwrap();
        let z = vec![0.0; g.n_nodes];
        assert!(compute_h(&g, &z).unwrap().values.iter().all(|&v| v == 0.0));
        assert_eq!(b_energy(&g, &z).unwrap(), 0.0);
        assert!(b_gradient(&g, &z).unwrap().iter().all(|&v| v == 0.0));
        assert!(multiplier(&g, &z).unwrap().iter().all(|&v| v == 0.0));
        let (a0, at) = gauge_fields(&g, &z).unwrap();
        assert!(a0.values.iter().chain(at.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn h_of_extremal_matches_closed_form() {
        let g = make_grid(40.0, 4097).unwrap();
        let u = extremal(&g);
        let h = compute_h(&g, &u).unwrap();
        assert_eq!(h.values[0], 0.0);
        assert!((g.eval_at(&h.values, 1.0) - 1.0).abs() < 1e-4);
        let closed = 2.0 * 1600.0 / 1601.0;
        assert!((h.values[g.n_nodes - 1] - closed).abs() < 1e-4);
    }

    #[test]
    fn tail_vanishes_at_truncation() {
        let g = make_grid(40.0, 4097).unwrap();
        let u = extremal(&g);
        let (a0, at) = gauge_fields(&g, &u).unwrap();
        assert_eq!(a0.values[g.n_nodes - 1], 0.0);
        assert!((g.eval_at(&at, 1.0) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn sextic_homogeneity() {
        let g = make_grid(12.0, 513).unwrap();
        let u = g.sample_dirichlet(|r| (1.0 - r) * (-r * r / 4.0).exp());
        let b = b_energy(&g, &u).unwrap();
        assert_relative_eq!(b_energy(&g, &u.scaled(2.0)).unwrap(), 64.0 * b, max_relative = 1e-13);
        let gb = b_gradient(&g, &u).unwrap();
        assert_relative_eq!(dot(&gb, &u), 6.0 * b, max_relative = 1e-13);
    }

    #[test]
    fn gradient_is_multiplier_times_weighted_field_off_the_boundary() {
        let g = make_grid(8.0, 300).unwrap();
        let u = g.sample(|r| (2.0 - r) * (-r * r / 3.0).exp());
        let gb = b_gradient(&g, &u).unwrap();
        let m = multiplier(&g, &u).unwrap();
        for i in 0..g.n_nodes - 1 {
            let expect = g.area_weights[i] * m[i] * u[i];
            assert!((gb[i] - expect).abs() <= 1e-13 * (1.0 + expect.abs()), "node {i}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = make_grid(6.0, 120).unwrap();
        let u = g.sample_dirichlet(|r| (1.5 - r) * (-r * r / 2.0).exp());
        let gb = b_gradient(&g, &u).unwrap();
        let scale = gb.max_abs();
        for i in [1, 5, 17, 40, 77, 118] {
            let step = 1e-5;
            let mut up = u.clone();
            up[i] += step;
            let mut um = u.clone();
            um[i] -= step;
            let fd = (b_energy(&g, &up).unwrap() - b_energy(&g, &um).unwrap()) / (2.0 * step);
            assert!((fd - gb[i]).abs() <= 1e-6 * gb[i].abs().max(1e-3 * scale), "node {i}: {fd} vs {}", gb[i]);
        }
    }
}
