//! Radial base solution `U` of `det D²U = f̃₁`, the expansion constants `d` and
//! `c_d`, and the coefficients `a* = cof(D²U)` of the linearized operator.
//!
//! With `D(r) = ∫₀^r t (f̃₁ − 1) dt` we have `U′ = √(r² + 2D)` and
//! `U − r²/2 = ∫₀^r 2D / (√(s² + 2D) + s) ds`; the second form is used so that
//! far-field differences never suffer cancellation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PolarField, PolarGrid};
use crate::linalg::Sym2;
use crate::problem::{radial_tail_integral, SourceField};
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-14;

/// Spherical average `f̃₁ − 1` as a function of the radius, with its (af) constants.
#[derive(Clone)]
pub struct RadialSource {
    dev: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub c0: f64,
    pub beta: f64,
}

impl std::fmt::Debug for RadialSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialSource").field("c0", &self.c0).field("beta", &self.beta).finish()
    }
}

impl RadialSource {
    pub fn new(dev: impl Fn(f64) -> f64 + Send + Sync + 'static, c0: f64, beta: f64) -> Self {
        Self { dev: Arc::new(dev), c0, beta }
    }

    /// Angular average of `f₁` by the trapezoid rule over `n_angles` angles.
    pub fn from_source(f1: &SourceField, n_angles: usize) -> Self {
        let f = f1.clone();
        let (c0, beta) = (f1.c0, f1.beta);
        Self::new(move |r| f.average_deviation(r, n_angles), c0, beta)
    }

    /// `f̃₁(r) − 1`.
    #[inline]
    pub fn deviation(&self, r: f64) -> f64 {
        (self.dev)(r)
    }

    pub fn ftilde(&self, r: f64) -> f64 {
        1.0 + self.deviation(r)
    }

    /// `∫_a^b t (f̃₁ − 1) dt`.
    fn mass_increment(&self, a: f64, b: f64) -> f64 {
        integrate(&mut |t: f64| t * self.deviation(t), a, b, QUAD_TOL)
    }

    /// `∫_a^b 2D/(√(s²+2D)+s) ds` given `D(a)`; returns the integral and `D(b)`.
    fn excess_increment(&self, a: f64, b: f64, d_a: f64) -> (f64, f64) {
        let mut g = |s: f64| {
            let d = d_a + self.mass_increment(a, s);
            excess_integrand(s, d)
        };
        let w = integrate(&mut g, a, b, QUAD_TOL);
        (w, d_a + self.mass_increment(a, b))
    }

    pub fn profile(&self, radii: &[f64]) -> Result<RadialProfile> {
        build_radial_solution(self, radii)
    }
}

fn excess_integrand(s: f64, d: f64) -> f64 {
    let m = s * s + 2.0 * d;
    if m <= 0.0 {
        return f64::NAN;
    }
    2.0 * d / (m.sqrt() + s)
}

/// Tabulated radial solution on `r`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub ftilde: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    /// `U − r²/2`.
    pub excess: Vec<f64>,
    #[serde(rename = "Uprime")]
    pub uprime: Vec<f64>,
    #[serde(rename = "Usecond")]
    pub usecond: Vec<f64>,
    #[serde(rename = "F1")]
    pub f1: Vec<f64>,
    #[serde(rename = "F2")]
    pub f2: Vec<f64>,
    /// `U′/r`.
    pub uprime_over_r: Vec<f64>,
    /// `D(r) = ∫₀^r t (f̃₁ − 1) dt`.
    pub mass: Vec<f64>,
    pub d: f64,
    pub c_d: f64,
    pub tail_error: f64,
}

impl RadialProfile {
    /// `(U′/r − 1, U″ − 1)` at node `j`, free of cancellation.
    pub fn coefficient_deviation(&self, j: usize) -> (f64, f64) {
        let (r, d) = (self.r[j], self.mass[j]);
        let dev = self.ftilde[j] - 1.0;
        if r == 0.0 {
            let e = dev / (self.ftilde[j].sqrt() + 1.0);
            return (e, e);
        }
        let up = self.uprime[j];
        let p = (2.0 * d / (r * r)) / (self.uprime_over_r[j] + 1.0);
        let w = (r * dev - 2.0 * d / (up + r)) / up;
        (p, w)
    }
}

pub fn build_radial_solution(src: &RadialSource, radii: &[f64]) -> Result<RadialProfile> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.first().is_some_and(|&r| r < 0.0) {
        return Err(Error::InvalidGrid("profile radii must be increasing and nonnegative".into()));
    }
    let n = radii.len();
    let mut p = RadialProfile {
        r: radii.to_vec(),
        ftilde: vec![0.0; n],
        u: vec![0.0; n],
        excess: vec![0.0; n],
        uprime: vec![0.0; n],
        usecond: vec![0.0; n],
        f1: vec![0.0; n],
        f2: vec![0.0; n],
        uprime_over_r: vec![0.0; n],
        mass: vec![0.0; n],
        d: 0.0,
        c_d: 0.0,
        tail_error: 0.0,
    };
    let (mut prev_r, mut d_prev, mut w_prev) = (0.0, 0.0, 0.0);
    for (j, &r) in radii.iter().enumerate() {
        let dev = src.deviation(r);
        let ft = 1.0 + dev;
        if !(ft > 0.0) {
            return Err(Error::DegenerateSource { r, value: ft });
        }
        let (dw, d_r) = src.excess_increment(prev_r, r, d_prev);
        let w = w_prev + dw;
        let m = r * r + 2.0 * d_r;
        let (up, upr, us) = if r == 0.0 {
            (0.0, ft.sqrt(), ft.sqrt())
        } else {
            if !(m > 0.0) {
                return Err(Error::DegenerateSource { r, value: m });
            }
            let up = m.sqrt();
            (up, (1.0 + 2.0 * d_r / (r * r)).sqrt(), r * ft / up)
        };
        p.ftilde[j] = ft;
        p.excess[j] = w;
        p.u[j] = 0.5 * r * r + w;
        p.uprime[j] = up;
        p.uprime_over_r[j] = upr;
        p.usecond[j] = us;
        p.f1[j] = 0.5 * (us + upr);
        p.f2[j] = 0.5 * (us - upr);
        p.mass[j] = d_r;
        prev_r = r;
        d_prev = d_r;
        w_prev = w;
    }
    let (d, tail) = compute_d(src, radii.last().copied().unwrap_or(1.0));
    p.d = d;
    p.tail_error = tail;
    p.c_d = compute_cd(src, d);
    Ok(p)
}

/// `d = ∫₀^∞ r (f̃₁ − 1) dr` and the (af) tail bound `c₀ R^{2−β}/(β−2)` at `r_max`.
pub fn compute_d(src: &RadialSource, r_max: f64) -> (f64, f64) {
    let mut g = |t: f64| t * src.deviation(t);
    let d = radial_tail_integral(&mut g, 0.0);
    let tail = if src.beta > 2.0 && src.beta.is_finite() {
        src.c0 * r_max.powf(2.0 - src.beta) / (src.beta - 2.0)
    } else {
        0.0
    };
    (d, tail)
}

/// `c_d = ∫₀^∞ [U′(s) − s − d/√(s²+1)] ds + d log 2`, the limit of `U − r²/2 − d log r`.
pub fn compute_cd(src: &RadialSource, d: f64) -> f64 {
    let mut total = 0.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut d_a = 0.0;
    for _ in 0..64 {
        let (w, d_b) = src.excess_increment(a, b, d_a);
        let piece = w - d * (b.asinh() - a.asinh());
        total += piece;
        if b > 1e4 && piece.abs() < 1e-17 {
            break;
        }
        a = b;
        b *= 2.0;
        d_a = d_b;
    }
    total + d * std::f64::consts::LN_2
}

/// Matrix coefficients `a` (and an optional first-order term `b`) of
/// `Lψ = a_ij ∂_ij ψ + b_k ∂_k ψ` on a polar grid.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub a11: PolarField,
    pub a12: PolarField,
    pub a22: PolarField,
    pub b1: Option<PolarField>,
    pub b2: Option<PolarField>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    separable: Option<Separable>,
}

/// Radial operator `p ψ″ + q ψ′/r − m² w ψ/r²` acting on mode `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Separable {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
}

impl CoefficientField {
    pub fn general(
        a11: PolarField,
        a12: PolarField,
        a22: PolarField,
        b: Option<(PolarField, PolarField)>,
    ) -> Result<Self> {
        let (b1, b2) = match b {
            Some((x, y)) => (Some(x), Some(y)),
            None => (None, None),
        };
        let mut c = Self { a11, a12, a22, b1, b2, lambda_min: 0.0, lambda_max: 0.0, separable: None };
        c.certify()?;
        Ok(c)
    }

    /// `a = cof(H)` for a Hessian field `H`.
    pub fn from_hessian(h: &crate::grid::HessianField) -> Result<Self> {
        Self::general(h.u22.clone(), h.u12.scale(-1.0), h.u11.clone(), None)
    }

    pub fn identity(grid: &Arc<PolarGrid>) -> Self {
        let one = PolarField::constant(grid, 1.0);
        let n = grid.n_r();
        Self {
            a11: one.clone(),
            a12: PolarField::zeros(grid),
            a22: one,
            b1: None,
            b2: None,
            lambda_min: 1.0,
            lambda_max: 1.0,
            separable: Some(Separable { p: vec![1.0; n], q: vec![1.0; n], w: vec![1.0; n] }),
        }
    }

    fn certify(&mut self) -> Result<()> {
        let g = self.a11.grid().clone();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut at = (0, 0);
        for j in 0..g.n_r() {
            for i in 0..g.n_theta() {
                let (l0, l1) = self.at(j, i).eigenvalues();
                if l0 < lo {
                    lo = l0;
                    at = (j, i);
                }
                hi = hi.max(l1);
            }
        }
        self.lambda_min = lo;
        self.lambda_max = hi;
        if !(lo > 0.0) {
            return Err(Error::CoefficientDegeneracy { lambda_min: lo, i: at.0, j: at.1 });
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        self.a11.grid()
    }

    pub fn at(&self, j: usize, i: usize) -> Sym2 {
        Sym2::new(self.a11.get(j, i), self.a12.get(j, i), self.a22.get(j, i))
    }

    /// Exact per-mode form when the coefficients come from a radial profile.
    pub fn separable(&self) -> Option<&Separable> {
        self.separable.as_ref()
    }

    pub fn has_drift(&self) -> bool {
        self.b1.is_some()
    }

    /// `sup |a − I|` over the grid.
    pub fn deviation_from_identity(&self) -> f64 {
        let a11 = self.a11.map(|v| v - 1.0).sup_abs();
        let a22 = self.a22.map(|v| v - 1.0).sup_abs();
        a11.max(a22).max(self.a12.sup_abs())
    }

    /// `sup_θ |a(r, θ) − I|` at every radius.
    pub fn radial_deviation_profile(&self) -> Vec<f64> {
        let g = self.grid();
        (0..g.n_r())
            .map(|j| {
                (0..g.n_theta())
                    .map(|i| self.at(j, i).max_abs_diff(&Sym2::IDENTITY))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn det(&self) -> PolarField {
        self.a11.mul(&self.a22).zip_map(&self.a12, |a, b| a - b * b)
    }
}

/// `a* = cof(D²U)`: `a₁₁ = F₁ − F₂ cos 2θ`, `a₂₂ = F₁ + F₂ cos 2θ`, `a₁₂ = −F₂ sin 2θ`.
pub fn build_coefficients(profile: &RadialProfile, grid: &Arc<PolarGrid>) -> Result<CoefficientField> {
    if profile.r.len() != grid.n_r() || profile.r.iter().zip(grid.radii()).any(|(a, b)| (a - b).abs() > 1e-12 * b.max(1.0)) {
        return Err(Error::InvalidGrid("profile radii do not match the grid".into()));
    }
    let nt = grid.n_theta();
    let mut a11 = PolarField::zeros(grid);
    let mut a12 = PolarField::zeros(grid);
    let mut a22 = PolarField::zeros(grid);
    for j in 0..grid.n_r() {
        for i in 0..nt {
            let t = grid.thetas()[i];
            a11.set(j, i, profile.f1[j] - profile.f2[j] * (2.0 * t).cos());
            a12.set(j, i, -profile.f2[j] * (2.0 * t).sin());
            a22.set(j, i, profile.f1[j] + profile.f2[j] * (2.0 * t).cos());
        }
    }
    let mut c = CoefficientField { a11, a12, a22, b1: None, b2: None, lambda_min: 0.0, lambda_max: 0.0, separable: None };
    c.certify()?;
    c.separable = Some(Separable {
        p: profile.uprime_over_r.clone(),
        q: profile.usecond.clone(),
        w: profile.usecond.clone(),
    });
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_family() -> RadialSource {
        RadialSource::new(|r| 0.1 * (1.0 + r * r).powi(-2), 1.41, 4.0)
    }

    const CD_GOLDEN: f64 = -0.000_609_993_787_200_463_45;

    #[test]
    fn constant_source_gives_quadratic() {
        let src = RadialSource::new(|_| 0.0, 1.0, f64::INFINITY);
        let p = src.profile(&[0.0, 0.5, 1.0, 7.0]).unwrap();
        for j in 0..4 {
            let r = p.r[j];
            assert!((p.u[j] - 0.5 * r * r).abs() < 1e-15);
            assert!((p.uprime[j] - r).abs() < 1e-15);
            assert!((p.usecond[j] - 1.0).abs() < 1e-15);
            assert!(p.f2[j].abs() < 1e-15);
        }
        assert_eq!(p.d, 0.0);
        assert_eq!(p.c_d, 0.0);
    }

    #[test]
    fn scaled_source_gives_r_squared() {
        let src = RadialSource::new(|_| 3.0, 4.0, f64::INFINITY);
        let p = src.profile(&[0.0, 0.5, 2.0]).unwrap();
        for j in 0..3 {
            assert!((p.u[j] - p.r[j] * p.r[j]).abs() < 1e-13);
            assert!((p.usecond[j] * p.uprime_over_r[j] - 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn eps_family_profile() {
        let p = eps_family().profile(&[0.5, 1.0, 3.0]).unwrap();
        assert!((p.uprime[1] - 1.05f64.sqrt()).abs() < 1e-13);
        assert!((p.d - 0.05).abs() < 1e-13);
        assert!((p.c_d - CD_GOLDEN).abs() < 1e-12, "{}", p.c_d);
        for j in 0..3 {
            assert!((p.usecond[j] * p.uprime_over_r[j] - p.ftilde[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn gaussian_mass() {
        let src = RadialSource::new(|r| 0.1 * (-r * r).exp(), 4.0, 6.0);
        let (d, _) = compute_d(&src, 64.0);
        assert!((d - 0.05).abs() < 1e-13);
    }

    #[test]
    fn profile_approaches_expansion_constant() {
        let p = eps_family().profile(&[32.0]).unwrap();
        let lim = p.excess[0] - p.d * 32f64.ln();
        assert!((lim - p.c_d).abs() < 1e-4);
    }

    #[test]
    fn degenerate_source_is_rejected() {
        let src = RadialSource::new(|r| if r > 1.0 { -1.5 } else { 0.0 }, 2.0, 3.0);
        assert!(matches!(src.profile(&[0.5, 2.0]), Err(Error::DegenerateSource { .. })));
    }

    #[test]
    fn coefficient_certificates() {
        let g = PolarGrid::global(128, 32, 64.0).unwrap();
        let p = eps_family().profile(g.radii()).unwrap();
        let c = build_coefficients(&p, &g).unwrap();
        let det = c.det();
        let mut err: f64 = 0.0;
        for j in 0..g.n_r() {
            for i in 0..g.n_theta() {
                err = err.max((det.get(j, i) - p.ftilde[j]).abs());
            }
        }
        assert!(err < 1e-8);
        assert!(c.lambda_min >= 0.9);
        let flat = RadialSource::new(|_| 0.0, 1.0, f64::INFINITY).profile(g.radii()).unwrap();
        let id = build_coefficients(&flat, &g).unwrap();
        assert!(id.deviation_from_identity() < 1e-15);
    }
}
