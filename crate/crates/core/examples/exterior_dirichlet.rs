//! Exterior Dirichlet problem outside the unit disk with a prescribed logarithmic coefficient.

use ampere2d::exterior::{solve_exterior, ExteriorOptions};
use ampere2d::global::{ratios, GridSpec};
use ampere2d::problem::{BoundaryData, ExteriorSpec, SourceField};

fn main() -> ampere2d::Result<()> {
    let boundary = BoundaryData::new(|t| 0.01 * t.cos(), "0.01 cos");
    let spec = ExteriorSpec::new(1.0, boundary, 0.5, 0.5)?;
    let f = SourceField::angular(0.1, 4.0, 0.5, 2);
    let s = solve_exterior(&spec, &f, &GridSpec::default(), &ExteriorOptions::default())?;
    let e = &s.extension;
    println!("extension: gamma = {:.6}, range [{:.4}, {:.4}]", e.gamma, e.min_value, e.max_value);
    println!("boundary offset sup {:.3e}, Holder {:.3e}", s.offset.sup, s.offset.holder);
    for h in s.history() {
        println!("  k = {:>2}  sup psi_k = {:.3e}", h.l, h.sup_psi);
    }
    println!("contraction ratios {:?}", ratios(s.history()));
    println!("d_fit = {:.8} (target 0.5), c_d = {:.8}", s.fit.d_fit, s.c_d());
    println!("boundary error {:.2e}, residual {:.2e}", s.boundary_error(), s.residual);
    Ok(())
}
