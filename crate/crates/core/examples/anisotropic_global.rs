//! Prescribed asymptotics `½x'Ax + b·x + d log√(x'Ax) + c` with a non-trivial `A`.

use ampere2d::global::{solve_global, GlobalOptions, GridSpec};
use ampere2d::linalg::Sym2;
use ampere2d::problem::{AffineData, SourceField};

fn main() -> ampere2d::Result<()> {
    let aff = AffineData::new(Sym2::diag(2.0, 0.5), [1.0, -1.0], 0.25)?;
    let f = SourceField::anisotropic(0.1, 4.0, 2.0);
    let s = solve_global(&f, &aff, &GridSpec::default(), &GlobalOptions::default())?;
    println!("levels {}, residual {:.2e}", s.levels, s.residual);
    println!("d_fit = {:.8} (radial mass {:.8}), c_fit = {:.8}", s.fit.d_fit, s.d(), s.fit.c_fit);
    for x in [[10.0, 0.0], [0.0, 10.0], [7.0, 7.0]] {
        let model = aff.quadratic(x) + s.d() * aff.log_radius(x) + aff.c;
        println!("x = {x:?}: u = {:.8}, expansion {:.8}", s.u_eval(x), model);
    }
    Ok(())
}
