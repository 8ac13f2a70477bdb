//! Per-solution CSV profiles.

use gauged_schrodinger::chern_simons::{compute_h, gauge_fields};
use gauged_schrodinger::{RadialGrid, Result};

pub const HEADER: &str = "r,u,h,tail,A0,Atheta";

/// One row per node: radius, field, `h`, tail integral and the two gauge components.
pub fn profile_csv(grid: &RadialGrid, u: &[f64]) -> Result<String> {
    let h = compute_h(grid, u)?;
    let (a0, atheta) = gauge_fields(grid, u)?;
    let mut out = String::with_capacity((grid.n_nodes + 1) * 6 * 24);
    out.push_str(HEADER);
    out.push('\n');
    for i in 0..grid.n_nodes {
        let row = [grid.nodes[i], u[i], h.values[i], a0.values[i], a0.values[i], atheta[i]];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
