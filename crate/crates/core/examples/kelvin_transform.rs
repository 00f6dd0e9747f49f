//! Inversion `y = x/|x|²` of a variable-coefficient operator.

use ampere2d::exterior::{inversion, KelvinCoefficients};
use ampere2d::linalg::Sym2;

fn main() {
    let a = |x: [f64; 2]| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        Sym2::new(1.0 + 0.2 / (1.0 + r2), 0.1 * x[0] * x[1] / (1.0 + r2 * r2), 1.0)
    };
    let k = KelvinCoefficients::from_matrix(a);
    for y in [[0.5, 0.0], [0.3, 0.4], [0.01, -0.02]] {
        let (b, v) = k.at(y);
        let (l0, l1) = a(inversion(y)).eigenvalues();
        let (m0, m1) = b.eigenvalues();
        println!(
            "y = {y:?}: b = [{:.6} {:.6}; {:.6}], drift = ({:.3e}, {:.3e}), eigenvalues ({l0:.6}, {l1:.6}) -> ({m0:.6}, {m1:.6})",
            b.a11, b.a12, b.a22, v[0], v[1]
        );
    }
    let id = KelvinCoefficients::identity();
    let (b, v) = id.at([0.2, 0.7]);
    println!("identity stays identity: {:?}, drift {:?}", b, v);
}
