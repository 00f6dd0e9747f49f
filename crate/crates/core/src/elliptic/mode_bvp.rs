use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::PolarGrid;
use crate::linalg::BandedLu;
use crate::radial::Separable;

/// Condition imposed at a boundary node of a radial two-point problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// `ψ = g`.
    Dirichlet,
    /// `ψ′ = g`.
    Neumann,
    /// `ψ′ + (τ/r) ψ = g`, encoding decay like `r^{−τ}`.
    Robin(f64),
}

/// One radial problem `p ψ″ + q (ψ′/r) − m² w ψ/r² = rhs` on the nodes of a grid.
///
/// On disks no inner condition is needed: stencils reaching across the origin
/// use the parity `ψ_m(−r) = (−1)^m ψ_m(r)`, which encodes regularity.
#[derive(Debug, Clone)]
pub struct ModeBvp<'a> {
    pub grid: &'a PolarGrid,
    pub m: usize,
    pub coeffs: &'a Separable,
    pub rhs: &'a [Complex64],
    pub inner: Option<(BoundaryCondition, Complex64)>,
    pub outer: (BoundaryCondition, Complex64),
}

/// Factored radial operator for one mode; reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct ModeSolver {
    lu: BandedLu,
    inner: Option<BoundaryCondition>,
    outer: BoundaryCondition,
    n: usize,
}

const BAND: usize = 5;

impl ModeSolver {
    pub fn new(
        grid: &PolarGrid,
        coeffs: &Separable,
        m: usize,
        inner: Option<BoundaryCondition>,
        outer: BoundaryCondition,
    ) -> Result<Self> {
        let n = grid.n_r();
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        let m2 = (m * m) as f64;
        let mut a = BandedLu::zeros(n, BAND, BAND);
        let radii = grid.radii();
        for j in 0..n {
            let r = radii[j];
            let bc = if j == n - 1 {
                Some(outer)
            } else if j == 0 && !grid.kind().contains_origin() {
                Some(inner.unwrap_or(BoundaryCondition::Dirichlet))
            } else {
                None
            };
            match bc {
                Some(BoundaryCondition::Dirichlet) => a.set(j, j, 1.0),
                Some(bc) => {
                    for e in grid.stencil_at(j) {
                        a.add(j, e.node, e.d1);
                    }
                    if let BoundaryCondition::Robin(tau) = bc {
                        a.add(j, j, tau / r);
                    }
                }
                None => {
                    for e in grid.stencil_at(j) {
                        let s = if e.reflected { parity } else { 1.0 };
                        a.add(j, e.node, s * (coeffs.p[j] * e.d2 + coeffs.q[j] * e.d1 / r));
                    }
                    a.add(j, j, -m2 * coeffs.w[j] / (r * r));
                }
            }
        }
        a.factor().map_err(|_| Error::IllPosedMode { mode: m })?;
        let inner = if grid.kind().contains_origin() { None } else { Some(inner.unwrap_or(BoundaryCondition::Dirichlet)) };
        Ok(Self { lu: a, inner, outer, n })
    }

    pub fn outer(&self) -> BoundaryCondition {
        self.outer
    }

    pub fn inner(&self) -> Option<BoundaryCondition> {
        self.inner
    }

    /// Solve with interior right-hand side `rhs` and boundary values `inner`, `outer`.
    pub fn solve(&self, rhs: &[Complex64], inner: Complex64, outer: Complex64) -> Vec<Complex64> {
        let n = self.n;
        let mut re: Vec<f64> = rhs.iter().map(|c| c.re).collect();
        let mut im: Vec<f64> = rhs.iter().map(|c| c.im).collect();
        re[n - 1] = outer.re;
        im[n - 1] = outer.im;
        if self.inner.is_some() {
            re[0] = inner.re;
            im[0] = inner.im;
        }
        self.lu.solve_in_place(&mut re);
        if im.iter().any(|v| *v != 0.0) {
            self.lu.solve_in_place(&mut im);
        }
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
    }
}

pub fn solve_mode_bvp(bvp: &ModeBvp<'_>) -> Result<Vec<Complex64>> {
    let solver = ModeSolver::new(bvp.grid, bvp.coeffs, bvp.m, bvp.inner.map(|b| b.0), bvp.outer.0)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(solver.solve(bvp.rhs, bvp.inner.map_or(zero, |b| b.1), bvp.outer.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialSource;

    fn laplace(n: usize) -> Separable {
        Separable { p: vec![1.0; n], q: vec![1.0; n], w: vec![1.0; n] }
    }

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn poisson_mode_zero() {
        let g = PolarGrid::global(128, 32, 64.0).unwrap();
        let sep = laplace(g.n_r());
        let rhs = real(&vec![4.0; g.n_r()]);
        let r_max = g.r_max();
        let bvp = ModeBvp {
            grid: &g,
            m: 0,
            coeffs: &sep,
            rhs: &rhs,
            inner: None,
            outer: (BoundaryCondition::Dirichlet, Complex64::new(r_max * r_max, 0.0)),
        };
        let psi = solve_mode_bvp(&bvp).unwrap();
        for (j, r) in g.radii().iter().enumerate() {
            assert!((psi[j].re - r * r).abs() < 1e-8 * r_max * r_max);
        }
    }

    #[test]
    fn euler_mode_two_on_annulus() {
        let g = PolarGrid::exterior(1.0, 256, 32, 64.0).unwrap();
        let sep = laplace(g.n_r());
        let rhs = real(&vec![0.0; g.n_r()]);
        let bvp = ModeBvp {
            grid: &g,
            m: 2,
            coeffs: &sep,
            rhs: &rhs,
            inner: Some((BoundaryCondition::Dirichlet, Complex64::new(1.0, 0.0))),
            outer: (BoundaryCondition::Dirichlet, Complex64::new(64f64.powi(-2), 0.0)),
        };
        let psi = solve_mode_bvp(&bvp).unwrap();
        for (j, r) in g.radii().iter().enumerate() {
            assert!((psi[j].re - r.powi(-2)).abs() < 1e-6);
        }
    }

    #[test]
    fn manufactured_solution_converges() {
        let src = RadialSource::new(|r| 0.1 * (1.0 + r * r).powi(-2), 1.5, 4.0);
        let exact = |r: f64| 1.0 / (1.0 + r * r);
        let d1 = |r: f64| -2.0 * r / (1.0 + r * r).powi(2);
        let d2 = |r: f64| (6.0 * r * r - 2.0) / (1.0 + r * r).powi(3);
        let mut errs = Vec::new();
        for n in [64, 128] {
            let g = PolarGrid::global(n, 32, 64.0).unwrap();
            let p = src.profile(g.radii()).unwrap();
            let sep = Separable { p: p.uprime_over_r.clone(), q: p.usecond.clone(), w: p.usecond.clone() };
            let rhs: Vec<Complex64> = g
                .radii()
                .iter()
                .enumerate()
                .map(|(j, &r)| Complex64::new(sep.p[j] * d2(r) + sep.q[j] * d1(r) / r, 0.0))
                .collect();
            let bvp = ModeBvp {
                grid: &g,
                m: 0,
                coeffs: &sep,
                rhs: &rhs,
                inner: None,
                outer: (BoundaryCondition::Dirichlet, Complex64::new(exact(g.r_max()), 0.0)),
            };
            let psi = solve_mode_bvp(&bvp).unwrap();
            errs.push(
                g.radii().iter().zip(&psi).map(|(r, v)| (v.re - exact(*r)).abs()).fold(0.0, f64::max),
            );
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 2.0, "errors {errs:?}");
    }

    #[test]
    fn robin_condition_is_imposed() {
        let g = PolarGrid::global(128, 32, 64.0).unwrap();
        let sep = laplace(g.n_r());
        let rhs: Vec<Complex64> =
            g.radii().iter().map(|&r| Complex64::new(4.0 * (r * r - 1.0) * (-r * r).exp(), 0.0)).collect();
        let s = ModeSolver::new(&g, &sep, 0, None, BoundaryCondition::Robin(0.9)).unwrap();
        let psi = s.solve(&rhs, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let n = g.n_r();
        let mut dpsi = 0.0;
        for e in g.stencil_at(n - 1) {
            dpsi += e.d1 * psi[e.node].re;
        }
        assert!((dpsi + 0.9 / g.r_max() * psi[n - 1].re).abs() < 1e-12);
    }
}
