//! Radial ground states and sign-changing solutions of the gauged nonlinear
//! Schrodinger equation `-Lu + omega u + B(u) u = lambda |u|^{p-2} u` in the plane.

pub mod chern_simons;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod functionals;
mod krylov;
pub mod operator_t;
pub mod oracles;
pub mod radial;

pub use error::{Error, Result};
pub use flow::{descend, solve_ground, solve_nodal, FlowOptions, Solution};
pub use functionals::{Functional, ProblemParams, Residuals};
pub use radial::{make_grid, RadialField, RadialGrid};
