//! Hypothesis checks on a few source families.

use ampere2d::problem::{validate_source, AffineData, SamplingPlan, SourceField};

fn main() -> ampere2d::Result<()> {
    let plan = SamplingPlan::default();
    for f in [
        SourceField::rational(0.1, 4.0),
        SourceField::angular(0.1, 4.0, 0.5, 2),
        SourceField::dipole(0.1),
        SourceField::rational(0.1, 1.5),
    ] {
        let rep = validate_source(&f, &AffineData::identity(), &plan)?;
        println!(
            "{:<45} passed={:<5} c0_fit={:.4} beta_fit={:.3} eps0_fit={:.2e}",
            f.label, rep.passed, rep.c0_fit, rep.beta_fit, rep.eps0_fit
        );
        for v in &rep.violations {
            println!("    violates {}: {} vs {}", v.check, v.value, v.bound);
        }
    }
    Ok(())
}
