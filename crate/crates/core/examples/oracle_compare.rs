//! Wide-stencil solve on a disk with boundary data from the global pipeline.

use ampere2d::global::{solve_global, GlobalOptions, GridSpec};
use ampere2d::oracle::{compare, oracle_solve_disk, OracleOptions, StencilScheme};
use ampere2d::problem::{AffineData, SourceField};

fn main() -> ampere2d::Result<()> {
    let f = SourceField::rational(0.1, 4.0);
    let s = solve_global(&f, &AffineData::identity(), &GridSpec::default(), &GlobalOptions::default())?;
    let u = |x: [f64; 2]| s.u_eval(x);
    for width in 1..=3 {
        let scheme = StencilScheme::new(width, 129, 4.0)?;
        let o = oracle_solve_disk(&|x| f.eval(x), &u, &scheme, &OracleOptions::default())?;
        let c = compare(&u, &o, 4);
        println!(
            "width {width} ({:>2} directions): sup diff {:.3e}, Newton steps {}, fallback {}",
            scheme.n_directions(),
            c.sup,
            o.newton_iterations,
            o.used_fallback
        );
        for (lo, hi, d) in &c.rings {
            println!("    r in [{lo:.1}, {hi:.1}): {d:.3e}");
        }
    }
    Ok(())
}
