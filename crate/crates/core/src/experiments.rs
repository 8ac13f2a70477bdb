//! Reproducible experiments: perturbation continuation, energy doubling,
//! large-coupling asymptotics and the multi-bump multiplicity sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{accept_nodal, bump_candidates, descend_with, solve_nodal, BumpFamily, FlowOptions, Solution};
use crate::functionals::{rescale, Functional, ProblemParams};
use crate::oracles::local_shoot;
use crate::radial::{h1_inner_unchecked, RadialGrid};

/// Shooting tolerance for the local reference profiles.
pub const SHOOT_TOL: f64 = 1e-10;

/// Relative energy gap above which two solutions with equal node count are distinct.
pub const DISTINCT_GAP: f64 = 1e-4;

/// `gamma = beta = 2^{-k}` for `k = 0..=20`, then zero.
pub fn default_schedule() -> Vec<(f64, f64)> {
    (0..=20)
        .map(|k| 0.5f64.powi(k))
        .chain(std::iter::once(0.0))
        .map(|l| (l, l))
        .collect()
}

fn check_schedule(schedule: &[(f64, f64)]) -> Result<()> {
    let bad = |m: &str| Err(Error::Precondition(m.to_string()));
    let Some(&(g0, b0)) = schedule.first() else {
        return bad("schedule is empty");
    };
    if g0 > 1.0 || b0 > 1.0 {
        return bad("schedule must start at gamma, beta <= 1");
    }
    if schedule.iter().any(|(g, b)| g != b || !(*g >= 0.0)) {
        return bad("schedule must keep gamma = beta >= 0");
    }
    if schedule.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return bad("schedule must be strictly decreasing");
    }
    if schedule.last() != Some(&(0.0, 0.0)) && schedule.len() > 1 {
        return bad("schedule must end at (0, 0)");
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStage {
    pub gamma: f64,
    pub beta: f64,
    pub solution: Solution,
    /// Energy of the previous stage's field under this stage's parameters.
    pub warm_energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub schedule: Vec<(f64, f64)>,
    pub stages: Vec<ContinuationStage>,
    /// Last stage, present only when every stage converged and the schedule ended unperturbed.
    pub final_solution: Option<Solution>,
    pub energy_trace: Vec<f64>,
    pub failure: Option<String>,
}

/// Follows a sign-changing solution along `schedule`, warm-starting every stage
/// from the previous field. A stage that fails aborts with a partial report.
pub fn continuation(
    base: &ProblemParams,
    schedule: &[(f64, f64)],
    grid: &RadialGrid,
    opts: &FlowOptions,
) -> Result<ContinuationReport> {
    check_schedule(schedule)?;
    base.validate()?;
    opts.validate()?;
    let mut report = ContinuationReport {
        schedule: schedule.to_vec(),
        stages: Vec::new(),
        final_solution: None,
        energy_trace: Vec::new(),
        failure: None,
    };
    for (k, &(gamma, beta)) in schedule.iter().enumerate() {
        let params = ProblemParams { gamma, beta, ..*base };
        let f = Functional::new(params);
        let attempt = match report.stages.last() {
            None => solve_nodal(&params, grid, opts).map(|s| (s, None)),
            Some(prev) => {
                let u0 = &prev.solution.field;
                let warm = f.energy(grid, u0)?;
                descend_with(&f, grid, u0, opts, &mut |_| {}).map(|s| (s, Some(warm)))
            }
        };
        match attempt {
            Ok((solution, warm_energy)) if accept_nodal(&solution) => {
                report.energy_trace.push(solution.energy);
                report.stages.push(ContinuationStage {
                    gamma,
                    beta,
                    solution,
                    warm_energy,
                });
            }
            Ok((solution, _)) => {
                report.failure = Some(format!(
                    "stage {k} (gamma = beta = {gamma:e}) ended without a converged sign-changing solution \
                     (fixed-point residual {:e}, node count {})",
                    solution.fixed_point_residual, solution.cone.node_count
                ));
                return Ok(report);
            }
            Err(e) => {
                report.failure = Some(format!("stage {k} (gamma = beta = {gamma:e}): {e}"));
                return Ok(report);
            }
        }
    }
    if schedule.last().is_some_and(|&(g, b)| g == 0.0 && b == 0.0) {
        report.final_solution = report.stages.last().map(|s| s.solution.clone());
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingRow {
    pub lambda: f64,
    /// `c_lambda`, least energy among the positive solutions found.
    pub ground_energy: Option<f64>,
    /// `m_lambda`, energy of the continued sign-changing solution.
    pub nodal_energy: Option<f64>,
    pub ratio: Option<f64>,
    pub doubled: bool,
    pub ground: Option<Solution>,
    pub nodal: Option<Solution>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalPair {
    /// `c_0`, energy of the positive local profile.
    pub ground_energy: f64,
    /// `m_0`, energy of the one-node local profile.
    pub nodal_energy: f64,
    pub doubled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub rows: Vec<DoublingRow>,
    pub local: Option<LocalPair>,
    pub local_error: Option<String>,
}

fn check_lambdas(lambda_list: &[f64], min_len: usize) -> Result<()> {
    if lambda_list.len() < min_len {
        return Err(Error::Precondition(format!("lambda list needs at least {min_len} entries")));
    }
    if lambda_list.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::Precondition("lambda list must be positive".into()));
    }
    if lambda_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("lambda list must be strictly ascending".into()));
    }
    Ok(())
}

/// `c_0` and `m_0` of the local equation from shooting.
pub fn local_pair(omega: f64, p: f64, grid: &RadialGrid) -> Result<LocalPair> {
    let c0 = local_shoot(omega, p, 0, SHOOT_TOL, grid)?.energy;
    let m0 = local_shoot(omega, p, 1, SHOOT_TOL, grid)?.energy;
    Ok(LocalPair {
        ground_energy: c0,
        nodal_energy: m0,
        doubled: m0 > 2.0 * c0,
    })
}

fn doubling_row(lambda: f64, base: &ProblemParams, schedule: &[(f64, f64)], grid: &RadialGrid, opts: &FlowOptions) -> DoublingRow {
    let params = ProblemParams { lambda, ..*base };
    let mut errors = Vec::new();
    let ground = match crate::flow::solve_ground(&params.perturbed(0.0), grid, opts) {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(format!("ground: {e}"));
            None
        }
    };
    let nodal = match continuation(&params, schedule, grid, opts) {
        Ok(rep) => {
            if let Some(msg) = rep.failure {
                errors.push(format!("continuation: {msg}"));
            }
            rep.final_solution
        }
        Err(e) => {
            errors.push(format!("continuation: {e}"));
            None
        }
    };
    let ground_energy = ground.as_ref().map(|s| s.energy);
    let nodal_energy = nodal.as_ref().map(|s| s.energy);
    let ratio = ground_energy.zip(nodal_energy).map(|(c, m)| m / c);
    DoublingRow {
        lambda,
        ground_energy,
        nodal_energy,
        ratio,
        doubled: matches!((ground_energy, nodal_energy), (Some(c), Some(m)) if m > 2.0 * c),
        ground,
        nodal,
        errors,
    }
}

/// `c_lambda` and `m_lambda` for every `lambda`, rows in input order.
pub fn doubling_experiment(
    lambda_list: &[f64],
    base: &ProblemParams,
    grid: &RadialGrid,
    opts: &FlowOptions,
) -> Result<DoublingReport> {
    doubling_with_schedule(lambda_list, base, &default_schedule(), grid, opts)
}

pub fn doubling_with_schedule(
    lambda_list: &[f64],
    base: &ProblemParams,
    schedule: &[(f64, f64)],
    grid: &RadialGrid,
    opts: &FlowOptions,
) -> Result<DoublingReport> {
    check_lambdas(lambda_list, 1)?;
    check_schedule(schedule)?;
    base.validate()?;
    opts.validate()?;
    let rows = lambda_list
        .par_iter()
        .map(|&l| doubling_row(l, base, schedule, grid, opts))
        .collect();
    let (local, local_error) = match local_pair(base.omega, base.p, grid) {
        Ok(pair) => (Some(pair), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(DoublingReport { rows, local, local_error })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsRow {
    pub lambda: f64,
    pub lambda_bar: f64,
    /// `min_{s = +-1} ||lambda^{1/(p-2)} w_lambda - s w|| / ||w||`.
    pub distance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub reference_energy: f64,
    pub rows: Vec<AsymptoticsRow>,
    /// Whether the recorded distances decrease strictly along the list.
    pub strictly_decreasing: bool,
}

/// Relative H^1 distance from `lambda^{1/(p-2)} u` to `reference`, after sign alignment.
pub fn rescaled_distance(lambda: f64, p: f64, omega: f64, grid: &RadialGrid, u: &[f64], reference: &[f64]) -> Result<f64> {
    let (_, scaled) = rescale(lambda, p, grid, u)?;
    grid.check(reference)?;
    let norm = h1_inner_unchecked(grid, omega, reference, reference).sqrt();
    let dist = |s: f64| {
        let d: Vec<f64> = scaled.iter().zip(reference).map(|(a, b)| a - s * b).collect();
        h1_inner_unchecked(grid, omega, &d, &d).sqrt()
    };
    Ok(dist(1.0).min(dist(-1.0)) / norm)
}

/// Distances for already computed nodal fields, one per `lambda`.
pub fn asymptotics_from(
    entries: &[(f64, std::result::Result<&[f64], String>)],
    base: &ProblemParams,
    grid: &RadialGrid,
) -> Result<AsymptoticsReport> {
    let reference = local_shoot(base.omega, base.p, 1, SHOOT_TOL, grid)?;
    let rows: Vec<AsymptoticsRow> = entries
        .iter()
        .map(|(lambda, field)| {
            let lambda_bar = lambda.powf(-4.0 / (base.p - 2.0));
            let (distance, error) = match field {
                Ok(u) => match rescaled_distance(*lambda, base.p, base.omega, grid, u, &reference.field) {
                    Ok(d) => (Some(d), None),
                    Err(e) => (None, Some(e.to_string())),
                },
                Err(msg) => (None, Some(msg.clone())),
            };
            AsymptoticsRow {
                lambda: *lambda,
                lambda_bar,
                distance,
                error,
            }
        })
        .collect();
    let strictly_decreasing = rows.iter().all(|r| r.distance.is_some())
        && rows.windows(2).all(|w| w[1].distance < w[0].distance);
    Ok(AsymptoticsReport {
        reference_energy: reference.energy,
        rows,
        strictly_decreasing,
    })
}

/// Asymptotics from the nodal solutions of a doubling run.
pub fn asymptotics_from_doubling(report: &DoublingReport, base: &ProblemParams, grid: &RadialGrid) -> Result<AsymptoticsReport> {
    let entries: Vec<(f64, std::result::Result<&[f64], String>)> = report
        .rows
        .iter()
        .map(|row| {
            let field = match &row.nodal {
                Some(s) => Ok(&s.field.values[..]),
                None => Err(row.errors.join("; ")),
            };
            (row.lambda, field)
        })
        .collect();
    asymptotics_from(&entries, base, grid)
}

/// Continues a sign-changing solution to `gamma = beta = 0` at every `lambda` and
/// compares its rescaling with the one-node local profile.
pub fn asymptotics_experiment(
    lambda_list: &[f64],
    base: &ProblemParams,
    grid: &RadialGrid,
    opts: &FlowOptions,
) -> Result<AsymptoticsReport> {
    check_lambdas(lambda_list, 3)?;
    base.validate()?;
    opts.validate()?;
    let schedule = default_schedule();
    let outcomes: Vec<std::result::Result<Solution, String>> = lambda_list
        .par_iter()
        .map(|&lambda| {
            let rep = continuation(&ProblemParams { lambda, ..*base }, &schedule, grid, opts).map_err(|e| e.to_string())?;
            rep.final_solution
                .ok_or_else(|| rep.failure.unwrap_or_else(|| "no final stage".into()))
        })
        .collect();
    let entries: Vec<(f64, std::result::Result<&[f64], String>)> = lambda_list
        .iter()
        .zip(&outcomes)
        .map(|(l, o)| (*l, o.as_ref().map(|s| &s.field.values[..]).map_err(Clone::clone)))
        .collect();
    asymptotics_from(&entries, base, grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpSweep {
    pub k: usize,
    pub starts: usize,
    pub converged: Vec<Solution>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityReport {
    pub lambda: f64,
    pub sweeps: Vec<BumpSweep>,
    /// Distinct sign-changing solutions over all `k`, by ascending energy.
    pub distinct: Vec<Solution>,
    pub distinct_node_counts: Vec<usize>,
    /// Whether energy increases strictly with node count across the distinct set.
    pub energy_increases_with_nodes: bool,
}

/// Distinct by node count or by a relative energy gap above [`DISTINCT_GAP`].
pub fn distinct_solutions(mut found: Vec<Solution>) -> Vec<Solution> {
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut out: Vec<Solution> = Vec::new();
    for s in found {
        let duplicate = out.iter().any(|d| {
            d.cone.node_count == s.cone.node_count
                && (d.energy - s.energy).abs() <= DISTINCT_GAP * d.energy.abs().max(s.energy.abs())
        });
        if !duplicate {
            out.push(s);
        }
    }
    out
}

/// Sign-changing solutions at small `lambda` from `k` alternating bumps, for every `k`.
pub fn multiplicity_sweep(
    k_list: &[usize],
    lambda_small: f64,
    base: &ProblemParams,
    grid: &RadialGrid,
    opts: &FlowOptions,
) -> Result<MultiplicityReport> {
    if !(lambda_small > 0.0 && lambda_small <= 1.0) {
        return Err(Error::Precondition(format!("lambda_small must lie in (0,1], got {lambda_small}")));
    }
    if k_list.is_empty() || k_list.iter().any(|k| !(2..=5).contains(k)) {
        return Err(Error::Precondition("k values must lie in {2,3,4,5}".into()));
    }
    let params = ProblemParams {
        lambda: lambda_small,
        ..*base
    };
    params.validate()?;
    opts.validate()?;
    let f = Functional::new(params);
    let sweeps: Vec<BumpSweep> = k_list
        .par_iter()
        .map(|&k| {
            let family = BumpFamily::alternating(k).expect("alternating signs");
            let outcomes = bump_candidates(&f, grid, &family, opts);
            let starts = outcomes.len();
            let mut converged = Vec::new();
            let mut failures = Vec::new();
            for o in outcomes {
                match o.outcome {
                    Ok(s) if accept_nodal(&s) => converged.push(s),
                    Ok(s) => failures.push(format!(
                        "concentration {}: not accepted (fixed-point residual {:e}, node count {})",
                        o.concentration, s.fixed_point_residual, s.cone.node_count
                    )),
                    Err(e) => failures.push(format!("concentration {}: {e}", o.concentration)),
                }
            }
            BumpSweep {
                k,
                starts,
                converged,
                failures,
            }
        })
        .collect();
    let distinct = distinct_solutions(sweeps.iter().flat_map(|s| s.converged.iter().cloned()).collect());
    let mut distinct_node_counts: Vec<usize> = distinct.iter().map(|s| s.cone.node_count).collect();
    distinct_node_counts.sort_unstable();
    distinct_node_counts.dedup();
    let mut by_nodes: Vec<(usize, f64)> = distinct.iter().map(|s| (s.cone.node_count, s.energy)).collect();
    by_nodes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let energy_increases_with_nodes = by_nodes
        .windows(2)
        .all(|w| w[0].0 == w[1].0 || w[1].1 > w[0].1);
    Ok(MultiplicityReport {
        lambda: lambda_small,
        sweeps,
        distinct,
        distinct_node_counts,
        energy_increases_with_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_shape() {
        let s = default_schedule();
        assert_eq!(s.len(), 22);
        assert_eq!(s[0], (1.0, 1.0));
        assert_eq!(s[20], (0.5f64.powi(20), 0.5f64.powi(20)));
        assert_eq!(s[21], (0.0, 0.0));
        assert!(check_schedule(&s).is_ok());
    }

    #[test]
    fn malformed_schedules_are_rejected() {
        assert!(check_schedule(&[]).is_err());
        assert!(check_schedule(&[(2.0, 2.0), (0.0, 0.0)]).is_err());
        assert!(check_schedule(&[(0.5, 0.25), (0.0, 0.0)]).is_err());
        assert!(check_schedule(&[(0.5, 0.5), (0.5, 0.5), (0.0, 0.0)]).is_err());
        assert!(check_schedule(&[(0.5, 0.5), (0.25, 0.25)]).is_err());
        assert!(check_schedule(&[(1.0, 1.0)]).is_ok());
    }

    #[test]
    fn lambda_lists_are_checked() {
        assert!(check_lambdas(&[10.0, 100.0, 1000.0], 3).is_ok());
        assert!(check_lambdas(&[10.0, 100.0], 3).is_err());
        assert!(check_lambdas(&[10.0, 10.0, 100.0], 1).is_err());
        assert!(check_lambdas(&[-1.0], 1).is_err());
    }

    #[test]
    fn distance_is_sign_blind() {
        let g = crate::radial::make_grid(10.0, 257).unwrap();
        let w = g.sample_dirichlet(|r| (1.0 - r) * (-r).exp());
        let u = w.scaled(-1.0 / 8.0);
        let d = rescaled_distance(8.0f64.powi(3), 5.0, 1.0, &g, &u, &w).unwrap();
        assert!(d < 1e-14, "{d}");
    }
}
