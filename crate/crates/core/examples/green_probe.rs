//! Discrete Green's function of the linearized operator and its fitted constants.

use ampere2d::elliptic::{green_refinement, probe_green, r0_heuristic};
use ampere2d::grid::PolarGrid;
use ampere2d::problem::SourceField;
use ampere2d::radial::{build_coefficients, CoefficientField, RadialSource};

fn main() -> ampere2d::Result<()> {
    let src = RadialSource::from_source(&SourceField::rational(0.1, 4.0), 128);
    let grid = PolarGrid::global(256, 64, 64.0)?;
    let coeffs = build_coefficients(&src.profile(grid.radii())?, &grid)?;
    println!("R0 heuristic (deviation < 0.1): {:.3}", r0_heuristic(&coeffs, 0.1));

    let free = probe_green(&CoefficientField::identity(&grid), [4.0, 0.0])?;
    println!("identity coefficients: c2_fit = {:.4}", free.c2_fit);

    let rep = green_refinement(|g| build_coefficients(&src.profile(g.radii())?, g), [4.0, 0.0], 64.0, &[(128, 32), (256, 64), (512, 128)])?;
    for row in &rep.refinement_table {
        println!("{:>4} x {:<4} c2_fit = {:.5}  grad_bound_fit = {:.5}", row.n_r, row.n_theta, row.c2_fit, row.grad_bound_fit);
    }
    println!("max relative change {:.2}%", 100.0 * rep.max_relative_change());
    Ok(())
}
