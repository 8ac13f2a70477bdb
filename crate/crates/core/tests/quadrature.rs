use std::f64::consts::PI;

use gauged_schrodinger::chern_simons::{b_energy, compute_h, compute_tail, multiplier};
use gauged_schrodinger::oracles::{extremal_check, extremal_field, local_shoot, random_smooth_field};
use gauged_schrodinger::radial::{gradient_norm_sq, h1_norm_sq, integrate, lp_norm_p};
use gauged_schrodinger::{make_grid, RadialGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian_error(n: usize) -> f64 {
    let g = make_grid(40.0, n).unwrap();
    let f: Vec<f64> = g.nodes.iter().map(|r| (-r * r).exp()).collect();
    let exact = PI * (1.0 - (-1600.0f64).exp());
    integrate(&g, &f).unwrap() - exact
}

#[test]
fn gaussian_integral_error_is_the_leading_trapezoid_correction() {
    let g = make_grid(40.0, 4097).unwrap();
    let err = gaussian_error(4097);
    let leading = PI * g.dr * g.dr / 6.0;
    assert!((err + leading).abs() <= 1e-3 * leading, "{err} vs {leading}");
}

#[test]
fn quadrature_is_second_order() {
    let ratio = gaussian_error(2049) / gaussian_error(4097);
    assert!(ratio >= 3.5, "{ratio}");
}

#[test]
fn extremal_quartic_integral() {
    let g = make_grid(40.0, 4097).unwrap();
    let u = extremal_field(&g, 1.0);
    let v = lp_norm_p(&g, &u, 4.0).unwrap();
    assert!((v / (64.0 * PI / 3.0) - 1.0).abs() < 5e-3);
    assert!((gradient_norm_sq(&g, &u).unwrap() / (16.0 * PI / 3.0) - 1.0).abs() < 5e-3);
    assert!((b_energy(&g, &u).unwrap() / (8.0 * PI / 3.0) - 1.0).abs() < 5e-3);
}

#[test]
fn extremal_values_scale_with_l_squared_on_matched_grids() {
    let a = extremal_check(&make_grid(40.0, 4097).unwrap(), 1.0).unwrap();
    let b = extremal_check(&make_grid(20.0, 4097).unwrap(), 2.0).unwrap();
    for (x, y) in [(a.grad_int, b.grad_int), (a.quarter_u4, b.quarter_u4), (a.cs_int, b.cs_int)] {
        assert!((y / x / 4.0 - 1.0).abs() < 1e-3, "{x} {y}");
    }
}

#[test]
fn extremal_equality_case() {
    let c = extremal_check(&make_grid(40.0, 4097).unwrap(), 1.0).unwrap();
    let lhs = 4.0 * c.quarter_u4;
    let rhs = 4.0 * (c.grad_int * c.cs_int).sqrt();
    assert!((lhs / rhs - 1.0).abs() < 1e-2);
}

#[test]
fn extremal_samples() {
    let g = make_grid(32.0, 4097).unwrap();
    let u = extremal_field(&g, 1.0);
    assert_eq!(u[0], 8f64.sqrt());
    assert_eq!(u[128], 2f64.sqrt());
    let u2 = extremal_field(&g, 2.0);
    for i in (0..g.n_nodes).step_by(97) {
        let r = g.nodes[i];
        let expect = 2.0 * 8f64.sqrt() / (1.0 + 4.0 * r * r);
        assert!((u2[i] - expect).abs() <= 1e-15 * expect);
    }
}

#[test]
fn tail_at_origin_of_the_extremal() {
    let g = make_grid(40.0, 4097).unwrap();
    let u = extremal_field(&g, 1.0);
    let h = compute_h(&g, &u).unwrap();
    let tail = compute_tail(&g, &u, &h).unwrap();
    let closed = 4.0 * (1.0 - 1.0 / (1601.0f64 * 1601.0));
    assert!((tail.values[0] - closed).abs() < 1e-3, "{}", tail.values[0]);
    let m = multiplier(&g, &u).unwrap();
    assert_eq!(m[0], tail.values[0]);
}

#[test]
fn tail_is_nonincreasing_and_multiplier_nonnegative() {
    let g = make_grid(10.0, 1025).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let u = random_smooth_field(&g, &mut rng);
        let h = compute_h(&g, &u).unwrap();
        let t = compute_tail(&g, &u, &h).unwrap();
        assert!(t.values.windows(2).all(|w| w[1] <= w[0]));
        assert!(multiplier(&g, &u).unwrap().iter().all(|v| *v >= 0.0));
    }
}

fn tail_form_gap(g: &RadialGrid, shape: impl Fn(f64) -> f64) -> f64 {
    let u = g.sample_dirichlet(shape);
    let h = compute_h(g, &u).unwrap();
    let t = compute_tail(g, &u, &h).unwrap();
    let f: Vec<f64> = u.iter().zip(&t.values).map(|(a, b)| a * a * b).collect();
    let alt = 0.25 * integrate(g, &f).unwrap();
    let b = b_energy(g, &u).unwrap();
    (b - alt).abs() / b
}

#[test]
fn chern_simons_energy_equals_tail_form() {
    let shape = |r: f64| (1.5 - r) * (-r * r / 2.0).exp();
    let coarse = tail_form_gap(&make_grid(20.0, 4097).unwrap(), shape);
    let fine = tail_form_gap(&make_grid(20.0, 8193).unwrap(), shape);
    assert!(coarse < 2e-2, "{coarse}");
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn gauge_integral_bound() {
    let g = make_grid(10.0, 1025).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let u = random_smooth_field(&g, &mut rng);
        let q = lp_norm_p(&g, &u, 4.0).unwrap().sqrt();
        let h = compute_h(&g, &u).unwrap();
        for (hi, r) in h.values.iter().zip(&g.nodes) {
            assert!(*hi <= r / (2.0 * PI.sqrt()) * q * (1.0 + 1e-12) + 1e-300);
        }
    }
}

#[test]
fn quartic_bounded_by_gradient_and_chern_simons() {
    let g = make_grid(10.0, 1025).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let u = random_smooth_field(&g, &mut rng);
        let lhs = lp_norm_p(&g, &u, 4.0).unwrap();
        let rhs = 4.0 * gradient_norm_sq(&g, &u).unwrap().sqrt() * (2.0 * b_energy(&g, &u).unwrap()).sqrt();
        assert!(lhs <= rhs * (1.0 + 5.0 * g.dr), "{lhs} > {rhs}");
    }
}

#[test]
fn gauge_integral_is_monotone_in_the_density() {
    let g = make_grid(10.0, 513).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let u = random_smooth_field(&g, &mut rng);
        let v: Vec<f64> = u.iter().enumerate().map(|(i, x)| x * (1.0 + (i % 3) as f64)).collect();
        let hu = compute_h(&g, &u).unwrap();
        let hv = compute_h(&g, &v).unwrap();
        assert!(hu.values.iter().zip(&hv.values).all(|(a, b)| a <= b));
    }
}

#[test]
fn h1_norm_dominates_mass() {
    let g = make_grid(10.0, 513).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let u = random_smooth_field(&g, &mut rng);
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        assert!(h1_norm_sq(&g, 0.7, &u).unwrap() >= 0.7 * integrate(&g, &sq).unwrap());
    }
}

#[test]
fn local_profiles() {
    let g = make_grid(40.0, 4097).unwrap();
    let ground = local_shoot(1.0, 5.0, 0, 1e-10, &g).unwrap();
    let core: Vec<f64> = g
        .nodes
        .iter()
        .zip(ground.field.iter())
        .filter(|(r, _)| **r < ground.cutoff)
        .map(|(_, v)| *v)
        .collect();
    assert!(core.windows(2).all(|w| w[1] < w[0]));
    let nodal = local_shoot(1.0, 5.0, 1, 1e-10, &g).unwrap();
    assert_eq!(nodal.interior_zeros, 1);
    assert!(ground.energy < nodal.energy);
    assert!(nodal.energy > 2.0 * ground.energy);
}

#[test]
fn local_profile_is_grid_independent() {
    let coarse_grid = make_grid(40.0, 4097).unwrap();
    let fine_grid = make_grid(40.0, 8193).unwrap();
    for nodes in [0, 1] {
        let coarse = local_shoot(1.0, 5.0, nodes, 1e-10, &coarse_grid).unwrap();
        let fine = local_shoot(1.0, 5.0, nodes, 1e-10, &fine_grid).unwrap();
        let restricted: Vec<f64> = fine.field.iter().step_by(2).copied().collect();
        let d: Vec<f64> = restricted.iter().zip(coarse.field.iter()).map(|(a, b)| a - b).collect();
        let rel = (h1_norm_sq(&coarse_grid, 1.0, &d).unwrap() / h1_norm_sq(&coarse_grid, 1.0, &coarse.field).unwrap()).sqrt();
        assert!(rel <= 1e-4, "nodes {nodes}: {rel:e}");
    }
}
