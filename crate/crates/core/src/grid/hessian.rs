use super::PolarField;
use crate::linalg::Sym2;

/// Cartesian second derivatives of a polar field.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub u11: PolarField,
    pub u12: PolarField,
    pub u22: PolarField,
}

impl HessianField {
    pub fn at(&self, j: usize, i: usize) -> Sym2 {
        Sym2::new(self.u11.get(j, i), self.u12.get(j, i), self.u22.get(j, i))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            u11: self.u11.add(&other.u11),
            u12: self.u12.add(&other.u12),
            u22: self.u22.add(&other.u22),
        }
    }

    /// Smallest eigenvalue over all nodes with its location `(j, i)`.
    pub fn min_eigenvalue(&self) -> (f64, usize, usize) {
        let g = self.u11.grid();
        let mut best = (f64::INFINITY, 0, 0);
        for j in 0..g.n_r() {
            for i in 0..g.n_theta() {
                let l = self.at(j, i).eigenvalues().0;
                if l < best.0 {
                    best = (l, j, i);
                }
            }
        }
        best
    }
}

struct PolarDerivatives {
    ur: PolarField,
    urr: PolarField,
    ut: PolarField,
    utt: PolarField,
    urt: PolarField,
}

fn polar_derivatives(u: &PolarField) -> PolarDerivatives {
    let (ur, urr) = u.d_r();
    let ut = u.d_theta(1);
    let utt = u.d_theta(2);
    let (urt, _) = ut.d_r();
    PolarDerivatives { ur, urr, ut, utt, urt }
}

pub fn cartesian_hessian(u: &PolarField) -> HessianField {
    let g = u.grid().clone();
    let d = polar_derivatives(u);
    let mut u11 = PolarField::zeros(&g);
    let mut u12 = PolarField::zeros(&g);
    let mut u22 = PolarField::zeros(&g);
    for (j, &r) in g.radii().iter().enumerate() {
        for (i, &t) in g.thetas().iter().enumerate() {
            let (s, c) = t.sin_cos();
            let hrr = d.urr.get(j, i);
            let hrt = d.urt.get(j, i) / r - d.ut.get(j, i) / (r * r);
            let htt = d.ur.get(j, i) / r + d.utt.get(j, i) / (r * r);
            u11.set(j, i, c * c * hrr - 2.0 * c * s * hrt + s * s * htt);
            u22.set(j, i, s * s * hrr + 2.0 * c * s * hrt + c * c * htt);
            u12.set(j, i, c * s * (hrr - htt) + (c * c - s * s) * hrt);
        }
    }
    HessianField { u11, u12, u22 }
}

pub fn det_hessian(h: &HessianField) -> PolarField {
    let uu = h.u11.mul(&h.u22);
    uu.zip_map(&h.u12, |a, b| a - b * b)
}

/// Cartesian gradient `(∂₁u, ∂₂u)`.
pub fn gradient(u: &PolarField) -> (PolarField, PolarField) {
    let g = u.grid().clone();
    let (ur, _) = u.d_r();
    let ut = u.d_theta(1);
    let mut g1 = PolarField::zeros(&g);
    let mut g2 = PolarField::zeros(&g);
    for (j, &r) in g.radii().iter().enumerate() {
        for (i, &t) in g.thetas().iter().enumerate() {
            let (s, c) = t.sin_cos();
            let a = ur.get(j, i);
            let b = ut.get(j, i) / r;
            g1.set(j, i, c * a - s * b);
            g2.set(j, i, s * a + c * b);
        }
    }
    (g1, g2)
}

pub fn divergence(f1: &PolarField, f2: &PolarField) -> PolarField {
    let (a, _) = gradient(f1);
    let (_, b) = gradient(f2);
    a.add(&b)
}

/// Flux `B(a, b) = (∂₁a·∂₂₂b, −∂₁₂b·∂₁a)`; `div B(a, b) = ∂₁₁a·∂₂₂b − ∂₁₂a·∂₁₂b`,
/// so `div B(φ, φ) = det D²φ`.
pub fn flux_pair(grad_a1: &PolarField, hess_b: &HessianField) -> (PolarField, PolarField) {
    let f1 = grad_a1.mul(&hess_b.u22);
    let f2 = grad_a1.zip_map(&hess_b.u12, |a, b| -a * b);
    (f1, f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;

    #[test]
    fn quadratic_has_identity_hessian() {
        let g = PolarGrid::global(64, 32, 40.0).unwrap();
        let u = PolarField::from_fn(&g, |r, _| 0.5 * r * r);
        let h = cartesian_hessian(&u);
        assert!(h.u11.map(|v| v - 1.0).sup_abs() < 1e-9);
        assert!(h.u22.map(|v| v - 1.0).sup_abs() < 1e-9);
        assert!(h.u12.sup_abs() < 1e-9);
        assert!(det_hessian(&h).map(|v| v - 1.0).sup_abs() < 1e-8);
    }

    #[test]
    fn product_x1x2() {
        let g = PolarGrid::global(64, 32, 40.0).unwrap();
        let u = PolarField::from_fn(&g, |r, t| 0.5 * r * r * (2.0 * t).sin());
        let h = cartesian_hessian(&u);
        assert!(h.u11.sup_abs() < 1e-8);
        assert!(h.u22.sup_abs() < 1e-8);
        assert!(h.u12.map(|v| v - 1.0).sup_abs() < 1e-8);
    }

    #[test]
    fn rank_one_hessian_has_zero_det() {
        let g = PolarGrid::global(64, 32, 40.0).unwrap();
        let u = PolarField::from_fn(&g, |r, t| 0.5 * (r * t.cos()).powi(2));
        let det = det_hessian(&cartesian_hessian(&u));
        assert!(det.sup_abs() < 1e-8);
    }

    #[test]
    fn exterior_log_det() {
        let g = PolarGrid::exterior(1.0, 256, 32, 64.0).unwrap();
        let u = PolarField::from_fn(&g, |r, _| 0.5 * r * r + 0.5 * r.ln());
        let det = det_hessian(&cartesian_hessian(&u));
        let exact = PolarField::from_fn(&g, |r, _| 1.0 - 0.25 / r.powi(4));
        assert!(det.sub(&exact).sup_abs() < 1e-5, "{}", det.sub(&exact).sup_abs());
    }

    #[test]
    fn divergence_of_flux_is_det() {
        let g = PolarGrid::global(256, 64, 40.0).unwrap();
        let phi = PolarField::from_fn(&g, |r, t| {
            (-r * r).exp() * (1.0 + 0.3 * r * r * (2.0 * t).cos()) + 0.2 * (-0.5 * r * r).exp() * r * t.sin()
        });
        let h = cartesian_hessian(&phi);
        let (g1, _) = gradient(&phi);
        let (f1, f2) = flux_pair(&g1, &h);
        let div = divergence(&f1, &f2);
        let det = det_hessian(&h);
        assert!(div.sub(&det).sup_abs() < 1e-5, "{}", div.sub(&det).sup_abs());
    }

    #[test]
    fn hessian_commutes_with_rotation() {
        let g = PolarGrid::global(64, 32, 40.0).unwrap();
        let u = PolarField::from_fn(&g, |r, t| {
            0.5 * r * r + r.powi(3) * (3.0 * t).cos() / 100.0 + (-r * r).exp() * t.sin() * r
        });
        let k = 1;
        let rot = u.rotate(k);
        let h = cartesian_hessian(&u);
        let hr = cartesian_hessian(&rot);
        let phi = g.thetas()[k];
        let q = [[phi.cos(), -phi.sin()], [phi.sin(), phi.cos()]];
        let mut err: f64 = 0.0;
        let nt = g.n_theta();
        for j in 0..g.n_r() {
            for i in 0..nt {
                let src = h.at(j, i);
                // Q H Qᵀ = (Qᵀ)ᵀ H Qᵀ
                let qt = [[q[0][0], q[1][0]], [q[0][1], q[1][1]]];
                let expect = src.congruence(qt);
                let got = hr.at(j, (i + k) % nt);
                err = err.max(expect.max_abs_diff(&got) / (1.0 + src.a11.abs()));
            }
        }
        assert!(err < 1e-10, "{err}");
    }
}
