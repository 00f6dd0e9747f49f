//! Radial base solution `U` of `U′U″/r = f̃` with its mass `d` and constant `c_d`.

use ampere2d::grid::PolarGrid;
use ampere2d::problem::SourceField;
use ampere2d::radial::RadialSource;

fn main() -> ampere2d::Result<()> {
    let f = SourceField::rational(0.1, 4.0);
    let src = RadialSource::from_source(&f, 128);
    let grid = PolarGrid::global(256, 64, 64.0)?;
    let p = src.profile(grid.radii())?;
    println!("d = {:.12} (closed form 0.05), c_d = {:.8}, tail error {:.1e}", p.d, p.c_d, p.tail_error);
    println!("{:>10} {:>16} {:>14} {:>14}", "r", "U - r^2/2", "U'/r", "U''");
    for j in (0..p.r.len()).step_by(32) {
        println!("{:>10.4} {:>16.8e} {:>14.10} {:>14.10}", p.r[j], p.excess[j], p.uprime_over_r[j], p.usecond[j]);
    }
    Ok(())
}
