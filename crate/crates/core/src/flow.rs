//! Descent along `T(u) - u` restricted to sign-preserving peaks, cone classification,
//! and the ground-state and nodal solvers built on it.
//!
//! Ground and nodal states are both mountain-pass points, so plain descent runs away
//! from them. [`descend`] therefore splits the field into its sign components, lifts
//! it to the local energy maximum over positive combinations of those components,
//! and takes damped `T` steps between such peaks. Peak energies decrease
//! monotonically. A Newton-Krylov polish finishes iterations whose line search
//! stalls at roundoff level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{Functional, ProblemParams, Residuals};
use crate::krylov::gmres;
use crate::operator_t::{apply_t_for, assemble_for};
use crate::radial::{dot, h1_inner_unchecked, pos_neg_parts, RadialField, RadialGrid};

/// Sign-change detection threshold relative to `max |u|`.
pub const SIGN_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub max_iters: usize,
    /// Tolerance on `||u - T(u)|| / ||u||`.
    pub grad_tol: f64,
    /// Cone radius relative to `||u||`.
    pub eps_cone: f64,
    pub step_init: f64,
    pub step_shrink: f64,
    pub armijo_c: f64,
    pub rng_seed: u64,
    /// Newton-Krylov iterations allowed once the descent is close or stalls.
    pub polish_iters: usize,
    /// Fixed-point residual below which descent hands over to the polish.
    pub polish_from: f64,
    /// Points per side of the barycentric lattice on the start triangle.
    pub lattice: usize,
    /// Concentration factors for the bump starts, in units of the natural length.
    pub radii: Vec<f64>,
    /// Positive starts for the ground-state battery.
    pub ground_starts: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            grad_tol: 1e-9,
            eps_cone: 1e-3,
            step_init: 1.0,
            step_shrink: 0.5,
            armijo_c: 1e-4,
            rng_seed: 0,
            polish_iters: 30,
            polish_from: 1e-4,
            lattice: 15,
            radii: vec![1.0, 2.0, 4.0],
            ground_starts: 8,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.eps_cone > 0.0) {
            return bad("eps_cone must be positive");
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad("step_shrink must lie in (0,1)");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0,1)");
        }
        if !(self.step_init > 0.0 && self.step_init <= 1.0) {
            return bad("step_init must lie in (0,1]");
        }
        if self.lattice < 2 {
            return bad("lattice must be at least 2");
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0)) {
            return bad("radii must be a nonempty list of positive numbers");
        }
        if self.ground_starts == 0 {
            return bad("ground_starts must be positive");
        }
        Ok(())
    }
}

/// Distances to the positive and negative cones, surrogate for `P^+` and `P^-`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeStatus {
    /// `||u^-||`.
    pub dist_plus: f64,
    /// `||u^+||`.
    pub dist_minus: f64,
    pub in_w: bool,
    pub node_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub field: RadialField,
    pub energy: f64,
    pub residuals: Residuals,
    pub cone: ConeStatus,
    pub iters: usize,
    pub polish_steps: usize,
    pub converged: bool,
    /// `||u - T(u)|| / ||u||`.
    pub fixed_point_residual: f64,
    pub components: usize,
    /// Peak energy after every accepted step, starting with the initial peak.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

pub fn classify(grid: &RadialGrid, omega: f64, u: &[f64], eps_cone: f64) -> Result<ConeStatus> {
    grid.check(u)?;
    let (plus, minus) = pos_neg_parts(u);
    let dist_plus = h1_inner_unchecked(grid, omega, &minus, &minus).sqrt();
    let dist_minus = h1_inner_unchecked(grid, omega, &plus, &plus).sqrt();
    let norm = h1_inner_unchecked(grid, omega, u, u).sqrt();
    Ok(ConeStatus {
        dist_plus,
        dist_minus,
        in_w: norm == 0.0 || dist_plus.min(dist_minus) < eps_cone * norm,
        node_count: node_count(u),
    })
}

/// Strict sign alternations among nodes above [`SIGN_THRESHOLD`].
pub fn node_count(u: &[f64]) -> usize {
    let cut = SIGN_THRESHOLD * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in u {
        if v.abs() > cut {
            if last != 0.0 && v.signum() != last {
                count += 1;
            }
            last = v.signum();
        }
    }
    count
}

/// Maximal same-sign runs of `u`, each as a full-length field.
pub fn sign_components(u: &[f64]) -> Vec<Vec<f64>> {
    let cut = SIGN_THRESHOLD * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut comps: Vec<Vec<f64>> = Vec::new();
    let mut last = 0.0f64;
    for (i, &v) in u.iter().enumerate() {
        if v.abs() <= cut {
            continue;
        }
        if v.signum() != last {
            comps.push(vec![0.0; u.len()]);
            last = v.signum();
        }
        if let Some(c) = comps.last_mut() {
            c[i] = v;
        }
    }
    comps
}

fn h1_norm(grid: &RadialGrid, omega: f64, v: &[f64]) -> f64 {
    h1_inner_unchecked(grid, omega, v, v).sqrt()
}

/// `T(u)` and `||u - T(u)|| / ||u||`.
fn fixed_point(f: &Functional, grid: &RadialGrid, u: &[f64]) -> Result<(Vec<f64>, f64)> {
    let tv = apply_t_for(f, grid, u)?.values;
    let d: Vec<f64> = tv.iter().zip(u).map(|(a, b)| a - b).collect();
    let omega = f.params.omega;
    Ok((tv, h1_norm(grid, omega, &d) / h1_norm(grid, omega, u)))
}

/// Positive combinations `sum_j exp(s_j) c_j` of fixed sign components.
struct Span<'a> {
    f: &'a Functional,
    grid: &'a RadialGrid,
    comps: Vec<Vec<f64>>,
}

struct Peak {
    field: Vec<f64>,
    energy: f64,
}

impl Span<'_> {
    fn combine(&self, s: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.grid.n_nodes];
        for (c, sj) in self.comps.iter().zip(s) {
            let t = sj.exp();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi += t * ci;
            }
        }
        v
    }

    /// Energy and its derivatives in `s`, with `d/ds_j = <E'(v), v_j>`.
    fn eval(&self, s: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        let v = self.combine(s);
        let e = self.f.energy_unchecked(self.grid, &v);
        let g = self.f.gradient_unchecked(self.grid, &v);
        let gs = self
            .comps
            .iter()
            .zip(s)
            .map(|(c, sj)| sj.exp() * dot(&g, c))
            .collect();
        (v, e, gs)
    }

    fn hessian(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let m = s.len();
        let eps = 1e-5;
        let mut h = vec![vec![0.0; m]; m];
        for j in 0..m {
            let mut sp = s.to_vec();
            sp[j] += eps;
            let mut sm = s.to_vec();
            sm[j] -= eps;
            let gp = self.eval(&sp).2;
            let gm = self.eval(&sm).2;
            for i in 0..m {
                h[i][j] = (gp[i] - gm[i]) / (2.0 * eps);
            }
        }
        for i in 0..m {
            for j in 0..i {
                let a = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = a;
                h[j][i] = a;
            }
        }
        h
    }

    /// Log-scale of the first local maximum of `t -> E(t c)`.
    fn ray_peak(&self, c: &[f64]) -> Option<f64> {
        let count = 321;
        let logs: Vec<f64> = (0..count)
            .map(|i| (-4.0 + 8.0 * i as f64 / (count - 1) as f64) * std::f64::consts::LN_10)
            .collect();
        let mut buf = vec![0.0; c.len()];
        let mut energy = |ls: f64| {
            let t = ls.exp();
            for (b, ci) in buf.iter_mut().zip(c) {
                *b = t * ci;
            }
            self.f.energy_unchecked(self.grid, &buf)
        };
        let mut prev = energy(logs[0]);
        let mut cur = energy(logs[1]);
        for i in 1..count - 1 {
            let next = energy(logs[i + 1]);
            if cur > prev && cur >= next {
                return Some(logs[i]);
            }
            prev = cur;
            cur = next;
        }
        None
    }

    /// Local maximum over the span, by trust-region Newton ascent from `s0`.
    fn ascend(&self, s0: Vec<f64>) -> Option<Peak> {
        let omega = self.f.params.omega;
        let mut s = s0.clone();
        let (mut v, mut e, mut gs) = self.eval(&s);
        let mut radius: f64 = 0.25;
        for _ in 0..200 {
            let scale = h1_inner_unchecked(self.grid, omega, &v, &v);
            if !(e.is_finite() && scale.is_finite()) {
                return None;
            }
            if gs.iter().fold(0.0f64, |m, x| m.max(x.abs())) <= 1e-13 * scale {
                break;
            }
            let neg_h: Vec<Vec<f64>> = self
                .hessian(&s)
                .into_iter()
                .map(|row| row.into_iter().map(|x| -x).collect())
                .collect();
            let mut step = match cholesky_solve(&neg_h, &gs) {
                Some(x) => x,
                None => {
                    let n = dot(&gs, &gs).sqrt();
                    gs.iter().map(|x| radius * x / n).collect()
                }
            };
            let len = dot(&step, &step).sqrt();
            if len > radius {
                step.iter_mut().for_each(|x| *x *= radius / len);
            }
            let trial: Vec<f64> = s.iter().zip(&step).map(|(a, b)| a + b).collect();
            let (v2, e2, g2) = self.eval(&trial);
            if e2.is_finite() && e2 >= e - 1e-14 * e.abs() {
                s = trial;
                v = v2;
                e = e2;
                gs = g2;
                radius = (2.0 * radius).min(0.5);
            } else {
                radius *= 0.25;
                if radius < 1e-12 {
                    break;
                }
            }
            if s.iter().zip(&s0).any(|(a, b)| (a - b).abs() > 25.0) {
                return None;
            }
        }
        Some(Peak { field: v, energy: e })
    }

    fn is_concave_at(&self, s: &[f64]) -> bool {
        let neg_h: Vec<Vec<f64>> = self
            .hessian(s)
            .into_iter()
            .map(|row| row.into_iter().map(|x| -x).collect())
            .collect();
        cholesky_solve(&neg_h, &vec![0.0; s.len()]).is_some()
    }

    /// Warm start from the current weights when the energy is concave there,
    /// otherwise from the first peak along each component's ray.
    fn peak(&self, warm: bool) -> Option<Peak> {
        let m = self.comps.len();
        let zero = vec![0.0; m];
        if warm && self.is_concave_at(&zero) {
            return self.ascend(zero);
        }
        let s0: Option<Vec<f64>> = self.comps.iter().map(|c| self.ray_peak(c)).collect();
        self.ascend(s0?)
    }
}

/// Solves `A x = b` for a small symmetric positive definite `A`; `None` if not definite.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    for i in (0..n).rev() {
        y[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * y[k]).sum::<f64>()) / l[i][i];
    }
    Some(y)
}

/// Newton-Krylov refinement with finite-difference Hessian products and the
/// frozen-coefficient operator as preconditioner. Stops if the sign structure changes.
fn polish(f: &Functional, grid: &RadialGrid, u: Vec<f64>, opts: &FlowOptions) -> Result<(Vec<f64>, usize)> {
    let omega = f.params.omega;
    let free = grid.n_nodes - 1;
    let comps = sign_components(&u).len();
    let residual = |v: &[f64]| -> Result<f64> {
        let g = f.gradient_unchecked(grid, v);
        Ok(crate::functionals::dual_norm(grid, omega, &g)? / h1_norm(grid, omega, v))
    };
    let mut u = u;
    let mut res = residual(&u)?;
    let mut steps = 0;
    for _ in 0..opts.polish_iters {
        if fixed_point(f, grid, &u)?.1 <= opts.grad_tol {
            break;
        }
        let g = f.gradient_unchecked(grid, &u);
        let pre = assemble_for(f, grid, &u)?;
        let un = dot(&u, &u).sqrt();
        let mut hv = |x: &[f64]| -> Vec<f64> {
            let xn = dot(x, x).sqrt();
            if xn == 0.0 {
                return vec![0.0; x.len()];
            }
            let eps = 1e-6 * un / xn;
            let mut up = u.clone();
            let mut um = u.clone();
            for i in 0..free {
                up[i] += eps * x[i];
                um[i] -= eps * x[i];
            }
            let gp = f.gradient_unchecked(grid, &up);
            let gm = f.gradient_unchecked(grid, &um);
            (0..free).map(|i| (gp[i] - gm[i]) / (2.0 * eps)).collect()
        };
        let mut pc = |x: &[f64]| -> Vec<f64> {
            let mut full = x.to_vec();
            full.push(0.0);
            match pre.solve(&full) {
                Ok(mut y) => {
                    y.truncate(free);
                    y
                }
                Err(_) => x.to_vec(),
            }
        };
        let b: Vec<f64> = g[..free].iter().map(|v| -v).collect();
        let out = gmres(&mut hv, &mut pc, &b, 1e-10, 60, 4);
        if !(out.relative_residual < 0.5) {
            break;
        }
        let mut dir = out.x;
        dir.push(0.0);
        let mut s = 1.0;
        let mut accepted = None;
        while s > 1e-4 {
            let w: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            if sign_components(&w).len() == comps {
                let r2 = residual(&w)?;
                if r2.is_finite() && r2 < (1.0 - 1e-4 * s) * res {
                    accepted = Some((w, r2));
                    break;
                }
            }
            s *= 0.5;
        }
        match accepted {
            Some((w, r2)) => {
                u = w;
                res = r2;
                steps += 1;
            }
            None => break,
        }
    }
    Ok((u, steps))
}

fn certify(
    f: &Functional,
    grid: &RadialGrid,
    u: Vec<f64>,
    opts: &FlowOptions,
    iters: usize,
    polish_steps: usize,
    trace: Vec<f64>,
) -> Result<Solution> {
    let energy = f.energy(grid, &u)?;
    if !energy.is_finite() {
        return Err(Error::Diverged(format!("non-finite energy after {iters} iterations")));
    }
    let (_, fp) = fixed_point(f, grid, &u)?;
    let residuals = f.residuals(grid, &u)?;
    let cone = classify(grid, f.params.omega, &u, opts.eps_cone)?;
    let components = sign_components(&u).len();
    Ok(Solution {
        field: u.into(),
        energy,
        residuals,
        cone,
        iters,
        polish_steps,
        converged: fp <= opts.grad_tol && residuals.is_finite(),
        fixed_point_residual: fp,
        components,
        trace,
    })
}

/// Peak-to-peak descent along `T(u) - u` from `u0`; see the module notes.
pub fn descend(params: &ProblemParams, grid: &RadialGrid, u0: &[f64], opts: &FlowOptions) -> Result<Solution> {
    descend_with(&Functional::new(*params), grid, u0, opts, &mut |_| {})
}

/// [`descend`] for an arbitrary functional, calling `observe` on every accepted iterate.
pub fn descend_with(
    f: &Functional,
    grid: &RadialGrid,
    u0: &[f64],
    opts: &FlowOptions,
    observe: &mut dyn FnMut(&[f64]),
) -> Result<Solution> {
    grid.check(u0)?;
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial field"));
    }
    let comps = sign_components(u0);
    if comps.is_empty() {
        return Err(Error::Precondition("initial field is zero".into()));
    }
    let m = comps.len();
    let omega = f.params.omega;
    let span = Span { f, grid, comps };
    let Some(first) = span.peak(true) else {
        let u = u0.to_vec();
        return certify(f, grid, u, opts, 0, 0, Vec::new());
    };
    let mut v = first.field;
    let mut e = first.energy;
    let mut trace = vec![e];
    observe(&v);
    let mut step = opts.step_init;
    let mut iters = 0;
    let mut stalled_at = f64::INFINITY;
    while iters < opts.max_iters {
        let (tv, rel) = fixed_point(f, grid, &v)?;
        if rel <= opts.grad_tol || (rel <= opts.polish_from && opts.polish_iters > 0) {
            stalled_at = rel;
            break;
        }
        let d: Vec<f64> = tv.iter().zip(&v).map(|(a, b)| a - b).collect();
        let nd2 = h1_inner_unchecked(grid, omega, &d, &d);
        step = (step / opts.step_shrink).min(1.0);
        let mut accepted = None;
        while step >= 1e-10 {
            let w0: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let comps = sign_components(&w0);
            if comps.len() == m {
                let span = Span { f, grid, comps };
                if let Some(pk) = span.peak(true) {
                    if pk.energy <= e - opts.armijo_c * step * nd2 {
                        accepted = Some(pk);
                        break;
                    }
                }
            }
            step *= opts.step_shrink;
        }
        iters += 1;
        match accepted {
            Some(pk) => {
                if !pk.energy.is_finite() {
                    return Err(Error::Diverged(format!("energy became non-finite at iteration {iters}")));
                }
                v = pk.field;
                e = pk.energy;
                trace.push(e);
                observe(&v);
            }
            None => {
                stalled_at = rel;
                break;
            }
        }
    }
    let mut polish_steps = 0;
    if stalled_at > opts.grad_tol {
        let rel = fixed_point(f, grid, &v)?.1;
        if rel > opts.grad_tol && rel <= opts.polish_from && opts.polish_iters > 0 {
            let (w, k) = polish(f, grid, v, opts)?;
            v = w;
            polish_steps = k;
        }
    }
    certify(f, grid, v, opts, iters, polish_steps, trace)
}

/// Amplitude and length scales of solutions at `params`: for `lambda >= 1` the
/// rescaled problem is near the local one, for small `lambda` solutions concentrate.
pub fn natural_scale(params: &ProblemParams) -> (f64, f64) {
    let lam = params.lambda;
    if lam >= 1.0 {
        (lam.powf(-1.0 / (params.p - 2.0)), 1.0)
    } else {
        let sigma = lam.powf(-1.0 / (params.p - 4.0));
        (sigma, 1.0 / sigma)
    }
}

/// Concentration of the unit bump family matching the natural length scale.
pub fn bump_concentration(params: &ProblemParams) -> f64 {
    let (_, len) = natural_scale(params);
    (0.5 / len).max(1.0)
}

/// Seeded Gaussian starts `a exp(-(r/s)^2)` around the natural scales.
pub fn ground_starts(params: &ProblemParams, grid: &RadialGrid, opts: &FlowOptions) -> Vec<RadialField> {
    let (amp, len) = natural_scale(params);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    (0..opts.ground_starts)
        .map(|_| {
            let a = amp * rng.random_range(1.0..4.0);
            let s = len * rng.random_range(0.5..2.0);
            grid.sample_dirichlet(|r| a * (-(r / s) * (r / s)).exp())
        })
        .collect()
}

/// Every converged positive solution from the start battery, in start order.
pub fn ground_candidates(params: &ProblemParams, grid: &RadialGrid, opts: &FlowOptions) -> Vec<Result<Solution>> {
    let f = Functional::new(*params);
    ground_starts(params, grid, opts)
        .par_iter()
        .map(|u0| descend_with(&f, grid, u0, opts, &mut |_| {}))
        .collect()
}

/// Least-energy converged positive solution over the start battery.
pub fn solve_ground(params: &ProblemParams, grid: &RadialGrid, opts: &FlowOptions) -> Result<Solution> {
    params.validate()?;
    opts.validate()?;
    let candidates = ground_candidates(params, grid, opts);
    let starts = candidates.len();
    candidates
        .into_iter()
        .filter_map(|r| r.ok())
        .filter(|s| s.converged && s.cone.node_count == 0)
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .ok_or(Error::NoSolution { kind: "positive", starts })
}

/// `k` disjoint bumps `(1 - rho^2)^2` on `[0, 1]` with the given signs: a disk first, then annuli.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFamily {
    signs: Vec<f64>,
}

impl BumpFamily {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Precondition("bump signs must be +1 or -1".into()));
        }
        if signs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("adjacent bumps must have opposite signs".into()));
        }
        Ok(Self { signs })
    }

    /// Negative innermost bump, alternating outwards.
    pub fn alternating(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    fn shape(&self, j: usize, rho: f64) -> f64 {
        let k = self.signs.len() as f64;
        let gap = 0.05;
        let (a, b) = (j as f64 / k, (j + 1) as f64 / k);
        let x = if j == 0 {
            rho / (b - gap)
        } else {
            let (lo, hi) = (a + gap, b - gap);
            (rho - 0.5 * (lo + hi)) / (0.5 * (hi - lo))
        };
        if x.abs() < 1.0 {
            let y = 1.0 - x * x;
            y * y
        } else {
            0.0
        }
    }

    /// `R sum_j w_j s_j v_j(R r)` on the grid.
    pub fn field(&self, grid: &RadialGrid, concentration: f64, weights: &[f64]) -> RadialField {
        grid.sample_dirichlet(|r| {
            let rho = concentration * r;
            if rho >= 1.0 {
                return 0.0;
            }
            concentration
                * self
                    .signs
                    .iter()
                    .zip(weights)
                    .enumerate()
                    .map(|(j, (s, w))| s * w * self.shape(j, rho))
                    .sum::<f64>()
        })
    }
}

/// A start from the bump family and its outcome.
#[derive(Debug, Clone)]
pub struct StartOutcome {
    pub concentration: f64,
    pub weights: Vec<f64>,
    /// Lattice points that share this start's component span.
    pub lattice_points: usize,
    pub outcome: std::result::Result<Solution, String>,
}

/// Seeded interior points of the simplex `{w_j > 0, sum w_j <= 1}` on a lattice of the given size.
fn simplex_lattice(dim: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx = vec![1usize; dim];
    loop {
        if idx.iter().sum::<usize>() <= size {
            out.push(
                idx.iter()
                    .map(|&i| (i as f64 + rng.random_range(-0.25..0.25)) / size as f64)
                    .collect(),
            );
        }
        let mut j = 0;
        loop {
            if j == dim {
                return out;
            }
            idx[j] += 1;
            if idx[j] < size {
                break;
            }
            idx[j] = 1;
            j += 1;
        }
    }
}

/// Descends from bump starts `R sum_j w_j v_j(R .)` over the lattice and radii.
///
/// Peak selection rescales each sign component independently, so lattice points
/// with the same concentration share one component span and one descent; the
/// outcome records how many lattice points it stands for.
pub fn bump_candidates(
    f: &Functional,
    grid: &RadialGrid,
    family: &BumpFamily,
    opts: &FlowOptions,
) -> Vec<StartOutcome> {
    let params = &f.params;
    let base = bump_concentration(params);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut starts: Vec<(f64, Vec<f64>, usize)> = Vec::new();
    for &radius in &opts.radii {
        let concentration = radius * base;
        let mut first = None;
        let mut count = 0;
        for w in simplex_lattice(family.len(), opts.lattice, &mut rng) {
            let u = family.field(grid, concentration, &w);
            let cone = match classify(grid, params.omega, &u, opts.eps_cone) {
                Ok(c) => c,
                Err(_) => continue,
            };
            if cone.in_w && family.len() > 1 {
                continue;
            }
            count += 1;
            first.get_or_insert(w);
        }
        if let Some(w) = first {
            starts.push((concentration, w, count));
        }
    }
    starts
        .into_par_iter()
        .map(|(concentration, weights, lattice_points)| {
            let u0 = family.field(grid, concentration, &weights);
            let outcome = descend_with(f, grid, &u0, opts, &mut |_| {}).map_err(|e| e.to_string());
            StartOutcome {
                concentration,
                weights,
                lattice_points,
                outcome,
            }
        })
        .collect()
}

/// Converged, outside both cones and sign-changing.
pub fn accept_nodal(s: &Solution) -> bool {
    s.converged && !s.cone.in_w && s.cone.node_count >= 1
}

/// Least-energy converged sign-changing solution from the two-bump starts.
pub fn solve_nodal(params: &ProblemParams, grid: &RadialGrid, opts: &FlowOptions) -> Result<Solution> {
    solve_nodal_signed(params, grid, opts, BumpFamily::alternating(2)?)
}

/// [`solve_nodal`] with an explicit sign pattern for the two bumps.
pub fn solve_nodal_signed(
    params: &ProblemParams,
    grid: &RadialGrid,
    opts: &FlowOptions,
    family: BumpFamily,
) -> Result<Solution> {
    params.validate()?;
    solve_nodal_with(&Functional::new(*params), grid, opts, &family)
}

/// Least-energy converged sign-changing solution of `f` from the given bump family.
pub fn solve_nodal_with(f: &Functional, grid: &RadialGrid, opts: &FlowOptions, family: &BumpFamily) -> Result<Solution> {
    opts.validate()?;
    let outcomes = bump_candidates(f, grid, family, opts);
    let starts = outcomes.len();
    outcomes
        .into_iter()
        .filter_map(|o| o.outcome.ok())
        .filter(accept_nodal)
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .ok_or(Error::NoSolution { kind: "sign-changing", starts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::make_grid;

    #[test]
    fn node_count_of_damped_line() {
        let g = make_grid(40.0, 4097).unwrap();
        let u = g.sample_dirichlet(|r| (1.0 - r) * (-r).exp());
        assert_eq!(classify(&g, 1.0, &u, 1e-3).unwrap().node_count, 1);
    }

    #[test]
    fn classify_is_odd() {
        let g = make_grid(10.0, 257).unwrap();
        let u = g.sample_dirichlet(|r| (2.0 - r) * (-r).exp());
        let a = classify(&g, 1.0, &u, 1e-3).unwrap();
        let b = classify(&g, 1.0, &u.scaled(-1.0), 1e-3).unwrap();
        assert_eq!(a.dist_plus, b.dist_minus);
        assert_eq!(a.dist_minus, b.dist_plus);
        assert_eq!(a.node_count, b.node_count);
    }

    #[test]
    fn positive_field_is_in_the_cone() {
        let g = make_grid(10.0, 257).unwrap();
        let u = g.sample_dirichlet(|r| (-r).exp());
        let c = classify(&g, 1.0, &u, 1e-3).unwrap();
        assert_eq!(c.dist_plus, 0.0);
        assert!(c.in_w);
        assert_eq!(c.node_count, 0);
    }

    #[test]
    fn components_split_by_sign() {
        let u = [0.0, 1.0, 2.0, -1.0, -0.5, 0.0, 3.0, 0.0];
        let c = sign_components(&u);
        assert_eq!(c.len(), 3);
        assert_eq!(c[1], vec![0.0, 0.0, 0.0, -1.0, -0.5, 0.0, 0.0, 0.0]);
        assert_eq!(node_count(&u), 2);
    }

    #[test]
    fn same_sign_neighbours_are_rejected() {
        assert!(BumpFamily::new(vec![1.0, 1.0]).is_err());
        assert!(BumpFamily::new(vec![1.0, -1.0, 1.0]).is_ok());
        assert!(BumpFamily::new(vec![]).is_err());
    }

    #[test]
    fn bump_supports_are_disjoint_and_signed() {
        let g = make_grid(4.0, 1025).unwrap();
        let fam = BumpFamily::alternating(3).unwrap();
        let u = fam.field(&g, 1.0, &[1.0, 1.0, 1.0]);
        assert_eq!(node_count(&u), 2);
        assert!(u[0] < 0.0);
        assert!(u.iter().zip(&g.nodes).all(|(v, r)| *r < 1.0 || *v == 0.0));
    }

    #[test]
    fn lattice_covers_the_open_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = simplex_lattice(2, 15, &mut rng);
        assert_eq!(pts.len(), 14 * 15 / 2);
        assert!(pts.iter().all(|p| p.iter().all(|x| *x > 0.0) && p.iter().sum::<f64>() <= 1.0 + 0.5 / 15.0));
    }

    #[test]
    fn cholesky_detects_indefinite() {
        assert!(cholesky_solve(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[1.0, 1.0]).is_none());
        let x = cholesky_solve(&[vec![4.0, 1.0], vec![1.0, 3.0]], &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14 && (x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
    }
}
