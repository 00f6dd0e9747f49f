use num_complex::Complex64;

use crate::grid::{cartesian_hessian, gradient, Modes, PolarField, PolarGrid};
use crate::radial::{CoefficientField, Separable};

/// `Lψ = a:D²ψ + b·∇ψ` assembled from Cartesian Hessians.
pub fn apply_cartesian(coeffs: &CoefficientField, psi: &PolarField) -> PolarField {
    let h = cartesian_hessian(psi);
    let mut out = coeffs.a11.mul(&h.u11);
    out.add_assign(&coeffs.a22.mul(&h.u22));
    out.add_assign(&coeffs.a12.mul(&h.u12).scale(2.0));
    if let (Some(b1), Some(b2)) = (&coeffs.b1, &coeffs.b2) {
        let (g1, g2) = gradient(psi);
        out.add_assign(&b1.mul(&g1));
        out.add_assign(&b2.mul(&g2));
    }
    out
}

/// Radial operator of mode `m` applied to coefficients `c(r_j)`.
pub fn apply_mode(grid: &PolarGrid, sep: &Separable, m: usize, c: &[Complex64]) -> Vec<Complex64> {
    let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
    let m2 = (m * m) as f64;
    (0..grid.n_r())
        .map(|j| {
            let r = grid.radii()[j];
            let (mut d1, mut d2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for e in grid.stencil_at(j) {
                let v = if e.reflected { c[e.node] * parity } else { c[e.node] };
                d1 += v * e.d1;
                d2 += v * e.d2;
            }
            d2 * sep.p[j] + d1 * (sep.q[j] / r) - c[j] * (m2 * sep.w[j] / (r * r))
        })
        .collect()
}

/// Separable operator applied mode by mode.
pub fn apply_modes(sep: &Separable, psi: &PolarField) -> PolarField {
    let grid = psi.grid();
    let modes = psi.modes();
    let mut out = Modes::zeros(grid);
    for m in 0..grid.n_modes() {
        out.set_mode(m, &apply_mode(grid, sep, m, &modes.mode(m)));
    }
    out.recompose(grid)
}

/// Angular averages of `a_rr`, `a_θθ` and `r b_r`: the separable part of a general operator.
pub fn separable_average(coeffs: &CoefficientField) -> Separable {
    let g = coeffs.grid();
    let (nr, nt) = (g.n_r(), g.n_theta());
    let mut p = vec![0.0; nr];
    let mut q = vec![0.0; nr];
    let mut w = vec![0.0; nr];
    for j in 0..nr {
        let r = g.radii()[j];
        for i in 0..nt {
            let (s, c) = g.thetas()[i].sin_cos();
            let a = coeffs.at(j, i);
            let arr = a.quad_form([c, s]);
            let att = a.quad_form([-s, c]);
            let rb = match (&coeffs.b1, &coeffs.b2) {
                (Some(b1), Some(b2)) => r * (b1.get(j, i) * c + b2.get(j, i) * s),
                _ => 0.0,
            };
            p[j] += arr;
            w[j] += att;
            q[j] += att + rb;
        }
        p[j] /= nt as f64;
        q[j] /= nt as f64;
        w[j] /= nt as f64;
    }
    Separable { p, q, w }
}
