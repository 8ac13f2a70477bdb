//! Reference computations: the explicit extremal family, a shooting solver for the
//! local equation `-Lu + omega u = |u|^{p-2} u`, and a finite-difference gradient check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chern_simons::{b_energy_with, h_values};
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::radial::{dot, power_sum, stiffness_form, RadialField, RadialGrid};

/// `sqrt(8) l / (1 + (l r)^2)` at every node, without Dirichlet pinning.
pub fn extremal_field(grid: &RadialGrid, l: f64) -> RadialField {
    let c = 8f64.sqrt() * l;
    grid.sample(|r| c / (1.0 + (l * r) * (l * r)))
}

/// The three integrals that coincide on the extremal family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalCheck {
    pub grad_int: f64,
    pub quarter_u4: f64,
    pub cs_int: f64,
}

impl ExtremalCheck {
    /// Largest pairwise relative gap between the three integrals.
    pub fn max_pairwise_gap(&self) -> f64 {
        let v = [self.grad_int, self.quarter_u4, self.cs_int];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                worst = worst.max((v[i] - v[j]).abs() / v[i].abs().max(v[j].abs()));
            }
        }
        worst
    }
}

pub fn extremal_check(grid: &RadialGrid, l: f64) -> Result<ExtremalCheck> {
    if !(l > 0.0) || l * grid.r_max < 20.0 {
        return Err(Error::Precondition(format!(
            "extremal check needs l * r_max >= 20, got l = {l}, r_max = {}",
            grid.r_max
        )));
    }
    let u = extremal_field(grid, l);
    let h = h_values(grid, &u);
    Ok(ExtremalCheck {
        grad_int: stiffness_form(grid, &u, &u),
        quarter_u4: 0.25 * power_sum(grid, &u, 4.0),
        cs_int: 2.0 * b_energy_with(grid, &u, &h),
    })
}

/// A radial solution of the local equation sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalProfile {
    pub field: RadialField,
    pub amplitude: f64,
    pub interior_zeros: usize,
    /// `1/2 (int |u'|^2 + omega u^2) - 1/p int |u|^p`, integrated along the trajectory.
    pub energy: f64,
    pub h1_norm_sq: f64,
    pub lp_norm_p: f64,
    /// Radius beyond which the profile is set to zero.
    pub cutoff: f64,
}

#[derive(Clone, Copy)]
struct LocalOde {
    omega: f64,
    p: f64,
}

/// `(u, u', int 2 pi r u'^2, int 2 pi r u^2, int 2 pi r |u|^p)`.
type State = [f64; 5];

impl LocalOde {
    fn rhs(&self, r: f64, y: &State) -> State {
        let (u, v) = (y[0], y[1]);
        let f = self.omega * u - u.abs().powf(self.p - 2.0) * u;
        let tau = 2.0 * std::f64::consts::PI * r;
        [v, f - v / r, tau * v * v, tau * u * u, tau * u.abs().powf(self.p)]
    }

    fn rk4(&self, r: f64, y: &State, h: f64) -> State {
        let add = |a: &State, k: &State, s: f64| {
            let mut o = *a;
            for i in 0..5 {
                o[i] += s * k[i];
            }
            o
        };
        let k1 = self.rhs(r, y);
        let k2 = self.rhs(r + 0.5 * h, &add(y, &k1, 0.5 * h));
        let k3 = self.rhs(r + 0.5 * h, &add(y, &k2, 0.5 * h));
        let k4 = self.rhs(r + h, &add(y, &k3, h));
        let mut o = *y;
        for i in 0..5 {
            o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        o
    }

    /// Series start at small `r0` for `u(0) = a`, `u'(0) = 0`.
    fn start(&self, a: f64, r0: f64) -> State {
        let f = self.omega * a - a.abs().powf(self.p - 2.0) * a;
        [a + f * r0 * r0 / 4.0, f * r0 / 2.0, 0.0, 0.0, 0.0]
    }
}

/// Adaptive integrator: one RK4 step against two half steps, halving until they agree to `tol`.
struct Stepper {
    ode: LocalOde,
    tol: f64,
    h: f64,
}

impl Stepper {
    const H_MAX: f64 = 0.05;
    const H_MIN: f64 = 1e-9;

    fn advance(&mut self, r: &mut f64, y: &mut State, r_to: f64) {
        while *r < r_to {
            let h = self.h.min(r_to - *r);
            let full = self.ode.rk4(*r, y, h);
            let mid = self.ode.rk4(*r, y, 0.5 * h);
            let two = self.ode.rk4(*r + 0.5 * h, &mid, 0.5 * h);
            let err = (full[0] - two[0]).abs().max((full[1] - two[1]).abs());
            if err > self.tol && h > Self::H_MIN {
                self.h = 0.5 * h;
                continue;
            }
            *y = two;
            *r += h;
            if err < self.tol / 32.0 && h == self.h {
                self.h = (2.0 * self.h).min(Self::H_MAX);
            }
        }
    }
}

/// How a shot from `u(0) = a` ends.
struct Shot {
    zeros: usize,
}

const SHOT_START: f64 = 1e-3;
const SHOT_END: f64 = 60.0;

fn shoot_classify(ode: LocalOde, a: f64, tol: f64) -> Shot {
    let mut st = Stepper { ode, tol, h: 1e-3 };
    let mut r = SHOT_START;
    let mut y = ode.start(a, r);
    let mut zeros = 0;
    let turn = ode.omega.powf(1.0 / (ode.p - 2.0));
    let dr = 0.01;
    while r < SHOT_END {
        let prev = y;
        let to = r + dr;
        st.advance(&mut r, &mut y, to);
        if prev[0] * y[0] < 0.0 {
            zeros += 1;
        }
        if prev[1] * y[1] < 0.0 && y[0].abs() < turn {
            break;
        }
        if y[0].abs() > 10.0 * a.abs() + 10.0 {
            break;
        }
    }
    Shot { zeros }
}

/// Radial solution of the local equation with exactly `node_target` interior zeros.
pub fn local_shoot(
    omega: f64,
    p: f64,
    node_target: usize,
    tol: f64,
    grid: &RadialGrid,
) -> Result<LocalProfile> {
    if !(omega > 0.0) || !(p > 2.0 && p < 6.0) || !(tol > 0.0) {
        return Err(Error::Precondition(format!(
            "local shooting needs omega > 0, p in (2,6), tol > 0; got omega = {omega}, p = {p}, tol = {tol}"
        )));
    }
    let ode = LocalOde { omega, p };
    let low = |a: f64| shoot_classify(ode, a, tol).zeros <= node_target;
    let base = omega.powf(1.0 / (p - 2.0));
    let mut hi = base * 1.01;
    let mut tries = 0;
    while low(hi) {
        hi *= 1.25;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoBracket(node_target));
        }
    }
    let mut lo = hi / 1.25;
    tries = 0;
    while !low(lo) {
        lo /= 1.25;
        tries += 1;
        if lo < base || tries > 200 {
            return Err(Error::NoBracket(node_target));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if low(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    trace_profile(ode, lo, node_target, tol, grid)
}

fn trace_profile(
    ode: LocalOde,
    a: f64,
    node_target: usize,
    tol: f64,
    grid: &RadialGrid,
) -> Result<LocalProfile> {
    let n = grid.n_nodes;
    let mut values = vec![0.0; n];
    values[0] = a;
    let mut st = Stepper { ode, tol, h: 1e-3 };
    let mut r = SHOT_START;
    let mut y = ode.start(a, r);
    let turn = ode.omega.powf(1.0 / (ode.p - 2.0));
    let mut zeros = 0;
    let mut cutoff = grid.r_max;
    let mut kept = y;
    for i in 1..n {
        let prev = y;
        let target = grid.nodes[i].max(SHOT_START);
        st.advance(&mut r, &mut y, target);
        let crossed = prev[0] * y[0] < 0.0;
        let turned = prev[1] * y[1] < 0.0 && y[0].abs() < turn;
        if turned || (crossed && zeros == node_target) {
            cutoff = grid.nodes[i - 1];
            break;
        }
        if crossed {
            zeros += 1;
        }
        values[i] = y[0];
        kept = y;
    }
    values[n - 1] = 0.0;
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("local shooting profile"));
    }
    let (grad, mass, pow) = (kept[2], kept[3], kept[4]);
    Ok(LocalProfile {
        field: values.into(),
        amplitude: a,
        interior_zeros: zeros,
        energy: 0.5 * (grad + ode.omega * mass) - pow / ode.p,
        h1_norm_sq: grad + ode.omega * mass,
        lp_norm_p: pow,
        cutoff,
    })
}

/// Sum of one to four Gaussian bumps with seeded centres, widths and signed heights.
pub fn random_smooth_field(grid: &RadialGrid, rng: &mut impl Rng) -> RadialField {
    let count = rng.random_range(1..=4);
    let reach = grid.r_max.min(6.0);
    let bumps: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.random_range(-3.0..3.0),
                rng.random_range(0.0..0.6 * reach),
                rng.random_range(0.05..0.3) * reach,
            )
        })
        .collect();
    grid.sample_dirichlet(|r| {
        bumps
            .iter()
            .map(|&(a, c, s)| a * (-((r - c) / s).powi(2)).exp())
            .sum()
    })
}

pub const FD_DIRECTIONS: usize = 64;

/// Worst relative gap between central differences of the energy and the analytic
/// directional derivative over [`FD_DIRECTIONS`] seeded smooth directions.
///
/// Gaps are relative to `|g| |d|`, the bound on `|<g, d>|`, so directions that
/// barely meet the support of `u` do not divide roundoff by a vanishing pairing.
/// Each direction is scaled to the sup norm of `u`, so `step` is relative.
pub fn fd_gradient_check(f: &Functional, grid: &RadialGrid, u: &[f64], step: f64, seed: u64) -> Result<f64> {
    grid.check(u)?;
    let g = f.gradient_unchecked(grid, u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..FD_DIRECTIONS {
        let mut d = random_smooth_field(grid, &mut rng);
        let dmax = d.max_abs();
        d = d.scaled(scale / dmax);
        let up: Vec<f64> = u.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
        let um: Vec<f64> = u.iter().zip(d.iter()).map(|(a, b)| a - step * b).collect();
        let fd = (f.energy_unchecked(grid, &up) - f.energy_unchecked(grid, &um)) / (2.0 * step);
        let an = dot(&g, &d);
        let bound = (dot(&g, &g) * dot(&d, &d)).sqrt();
        worst = worst.max((fd - an).abs() / bound.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}
