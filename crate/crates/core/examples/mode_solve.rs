//! Per-mode two-point problems of the linearized operator on the graded grid.

use ampere2d::elliptic::{solve_mode_bvp, BoundaryCondition, ModeBvp};
use ampere2d::grid::PolarGrid;
use ampere2d::problem::SourceField;
use ampere2d::radial::{build_coefficients, RadialSource};
use num_complex::Complex64;

fn main() -> ampere2d::Result<()> {
    let grid = PolarGrid::global(256, 64, 64.0)?;
    let src = RadialSource::from_source(&SourceField::rational(0.1, 4.0), 128);
    let coeffs = build_coefficients(&src.profile(grid.radii())?, &grid)?;
    let sep = coeffs.separable().expect("radial coefficients are separable");
    for m in [0usize, 1, 2, 5] {
        let rhs: Vec<Complex64> = grid.radii().iter().map(|r| Complex64::new((-r * r).exp(), 0.0)).collect();
        let bvp = ModeBvp { grid: &grid, m, coeffs: sep, rhs: &rhs, inner: None, outer: (BoundaryCondition::Dirichlet, Complex64::new(0.0, 0.0)) };
        let psi = solve_mode_bvp(&bvp)?;
        let peak = psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
        println!("m = {m}: sup |psi_m| = {peak:.6e}, psi_m(r_0) = {:.6e}", psi[0].re);
    }
    Ok(())
}
