//! Radial solutions of `-Δ_g u = f(|x|, u)` in the unit ball.

mod energy;
mod grid;
mod mountain_pass;
mod problem;
mod profile;
mod shooting;

pub use energy::{
    energy, energy_eps, energy_gradient, energy_gradient_eps, energy_hessian, energy_parts, flux,
    flux_derivative, gradient_norm, solve_tridiagonal, weak_residual, weak_residual_eps,
    DEFAULT_EPS,
};
pub use grid::{Grading, RadialGrid, MIN_PANELS};
pub use problem::{sphere_area, CustomSource, RadialProblem, Source};
pub use profile::{reconstruct_derivatives, RadialProfile};
pub use shooting::{shoot, solve_shooting, Shot, ShootingSolution, R_START, SCAN_POINTS, TERMINAL_TOL};
pub use mountain_pass::{
    find_e, geometry_check, mountain_pass_from, mountain_pass_solve, normalize, random_profile,
    GeometryCheck, MountainPassResult, SolverConfig, TelemetryRow, MAX_DOUBLINGS,
};
