//! Linearized operator `Lψ = a_ij ∂_ij ψ (+ b_k ∂_k ψ)`: exact per-mode inversion for
//! radially generated coefficients, defect correction otherwise, and a discrete
//! Green's function probe.

mod green;
mod linearized;
mod mode_bvp;
mod operator;

pub use green::{green_refinement, probe_green, probe_green_with, r0_heuristic, GreenProbe, GreenReport, RefinementRow};
pub use linearized::{
    interior_residual, solve_linearized, BoundaryValues, DefectOptions, FarField, LinearSolution, LinearSolver,
};
pub use mode_bvp::{solve_mode_bvp, BoundaryCondition, ModeBvp, ModeSolver};
pub use operator::{apply_cartesian, apply_mode, apply_modes, separable_average};
