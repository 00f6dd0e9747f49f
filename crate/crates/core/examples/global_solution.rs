//! Global solution for an angularly perturbed source: cascade history and fitted asymptotics.

use ampere2d::global::{solve_global, GlobalOptions, GridSpec};
use ampere2d::problem::{AffineData, SourceField};

fn main() -> ampere2d::Result<()> {
    let f = SourceField::angular(0.1, 4.0, 0.5, 2);
    let s = solve_global(&f, &AffineData::identity(), &GridSpec::default(), &GlobalOptions::default())?;
    println!("{:>3} {:>12} {:>14} {:>12}", "l", "sup psi", "weighted sup", "residual");
    for h in &s.history {
        println!("{:>3} {:>12.3e} {:>14.3e} {:>12.3e}", h.l, h.sup_psi, h.weighted_sup, h.residual);
    }
    println!("contraction ratios {:?}", s.contraction_ratios());
    println!("d = {:.9}, d_fit = {:.9}, shift = {:.9}", s.d(), s.fit.d_fit, s.shift);
    match s.fit.sigma_fit {
        Some(sigma) => println!("expansion remainder decays like rho^-{sigma:.3}"),
        None => println!("expansion remainder at rounding level"),
    }
    println!("u(5, 3) = {:.10}", s.u_eval([5.0, 3.0]));
    Ok(())
}
