//! Exterior Dirichlet problem `det D²u = f` on `|x| > r₀`, `u = φ` on `|x| = r₀`.
//!
//! The source is extended inside the disk with mass `d`, the global solution `U` of the
//! extension provides the base, and `u = U + h` with `L h = −det D²h`,
//! `h = φ − U` on the circle. `h = Σ ψ_k`: `ψ₀` solves the linear problem with the
//! boundary data after inversion into the unit-scale disk, the rest solve
//! `L ψ_k = det D²h_{k−2} − det D²h_{k−1}` with zero data.

mod extension;
mod kelvin;

use std::sync::Arc;

use serde::Serialize;

pub use extension::{blend_weight, extend_source, extend_source_with, extension_mass, BumpProfile, ExtendedSource, ExtensionReport};
pub use kelvin::{inversion, kelvin_coefficients, kelvin_field, reflection, transform_deviation, KelvinCoefficients};

use crate::asymptotics::{default_window, fit_expansion, AsymptoticFit};
use crate::elliptic::{BoundaryValues, FarField, LinearSolver};
use crate::error::{Error, Result};
use crate::global::{initial_state, picard_step, sample_deviation, solve_global, GlobalOptions, GlobalSolution, GridSpec, HistoryEntry, IterationContext};
use crate::grid::{cartesian_hessian, Evaluator, PolarField, PolarGrid};
use crate::linalg::{Point, Sym2};
use crate::problem::{holder_seminorm, AffineData, ExteriorSpec, SourceField};
use crate::radial::{build_coefficients, CoefficientField, RadialProfile, RadialSource};

/// Boundary offset `φ − U` on `|x| = r₀` after the constant shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryOffset {
    pub shift: f64,
    /// Remaining offset at the grid angles.
    pub samples: Vec<f64>,
    pub sup: f64,
    pub holder: f64,
}

/// Shifts by the mean of `φ − U` over the inner circle of `base` (row 0 of an exterior grid).
pub fn normalize_boundary(base: &PolarField, spec: &ExteriorSpec) -> BoundaryOffset {
    let g = base.grid();
    let raw: Vec<f64> = (0..g.n_theta()).map(|i| spec.boundary.eval(g.thetas()[i]) - base.get(0, i)).collect();
    let shift = raw.iter().sum::<f64>() / raw.len() as f64;
    let samples: Vec<f64> = raw.iter().map(|v| v - shift).collect();
    let sup = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let holder = holder_seminorm(&samples, spec.r0, spec.alpha);
    BoundaryOffset { shift, samples, sup, holder }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorOptions {
    pub global: GlobalOptions,
    /// Stop once `sup |ψ_k|` falls below this.
    pub tol: f64,
    pub k_max: usize,
    pub profile: BumpProfile,
    pub n_average: usize,
    pub fit_window: Option<(f64, f64)>,
}

impl Default for ExteriorOptions {
    fn default() -> Self {
        Self {
            global: GlobalOptions::default(),
            tol: 1e-12,
            k_max: 40,
            profile: BumpProfile::Cubic,
            n_average: 128,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExteriorState {
    pub k: usize,
    pub h: PolarField,
    pub psi_k: PolarField,
    pub history: Vec<HistoryEntry>,
    pub boundary_error: f64,
}

#[derive(Clone)]
pub struct ExteriorSolution {
    pub grid: Arc<PolarGrid>,
    pub spec: ExteriorSpec,
    pub extension: ExtensionReport,
    pub global: GlobalSolution,
    /// `U` on the exterior grid, shifted to match the boundary mean.
    pub base: PolarField,
    /// `ψ₀` on the exterior grid.
    pub psi0: PolarField,
    /// `ψ₀` in inverted variables.
    pub psi0_kelvin: PolarField,
    pub offset: BoundaryOffset,
    pub state: ExteriorState,
    /// `U + h`.
    pub u: PolarField,
    pub fit: AsymptoticFit,
    pub residual: f64,
    /// `sup |a − I|` over the inverted disk.
    pub kelvin_deviation: f64,
    pub kelvin_iterations: usize,
    u_eval: Evaluator,
}

impl std::fmt::Debug for ExteriorSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExteriorSolution")
            .field("grid", &self.grid)
            .field("fit", &self.fit)
            .field("boundary_error", &self.state.boundary_error)
            .field("levels", &self.state.k)
            .finish()
    }
}

impl ExteriorSolution {
    /// `u(x)`; `NaN` inside the disk, the fitted expansion beyond `R_max`.
    pub fn u_eval(&self, x: Point) -> f64 {
        let r = x[0].hypot(x[1]);
        if r < self.spec.r0 * (1.0 - 1e-12) {
            f64::NAN
        } else if r <= self.grid.r_max() {
            self.u_eval.eval(x)
        } else {
            0.5 * r * r + self.fit.d_fit * r.ln() + self.fit.c_fit
        }
    }

    pub fn boundary_error(&self) -> f64 {
        self.state.boundary_error
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.state.history
    }

    pub fn c_d(&self) -> f64 {
        self.fit.c_fit
    }
}

fn radial_deviation(profile: &RadialProfile, j: usize, x: Point) -> Sym2 {
    let (p, w) = profile.coefficient_deviation(j);
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Sym2::diag(p, p);
    }
    let (c, s) = (x[0] * x[0] / r2, x[1] * x[1] / r2);
    let cs = x[0] * x[1] / r2;
    Sym2::new(p * c + w * s, (p - w) * cs, p * s + w * c)
}

/// Hessian of the non-radial part of the global solution, sampled at arbitrary points.
struct CorrectionHessian {
    u11: Evaluator,
    u12: Evaluator,
    u22: Evaluator,
    r_max: f64,
}

impl CorrectionHessian {
    fn new(global: &GlobalSolution) -> Option<Self> {
        if global.phi.sup_abs() == 0.0 {
            return None;
        }
        let h = cartesian_hessian(&global.phi);
        Some(Self { u11: h.u11.evaluator(), u12: h.u12.evaluator(), u22: h.u22.evaluator(), r_max: global.grid.r_max() })
    }

    /// `cof D²φ` at `x`, zero beyond the global grid.
    fn cofactor(&self, x: Point) -> Sym2 {
        if x[0].hypot(x[1]) > self.r_max {
            return Sym2::new(0.0, 0.0, 0.0);
        }
        Sym2::new(self.u22.eval(x), -self.u12.eval(x), self.u11.eval(x))
    }
}

fn exterior_coefficients(profile: &RadialProfile, grid: &Arc<PolarGrid>, corr: Option<&CorrectionHessian>) -> Result<CoefficientField> {
    let radial = build_coefficients(profile, grid)?;
    let Some(corr) = corr else { return Ok(radial) };
    let mut a11 = radial.a11.clone();
    let mut a12 = radial.a12.clone();
    let mut a22 = radial.a22.clone();
    for j in 0..grid.n_r() {
        for i in 0..grid.n_theta() {
            let c = corr.cofactor(grid.point(j, i));
            a11.set(j, i, a11.get(j, i) + c.a11);
            a12.set(j, i, a12.get(j, i) + c.a12);
            a22.set(j, i, a22.get(j, i) + c.a22);
        }
    }
    CoefficientField::general(a11, a12, a22, None)
}

fn sample_exterior_base(profile: &RadialProfile, grid: &Arc<PolarGrid>, global: &GlobalSolution) -> PolarField {
    let mut base = PolarField::from_radial(grid, &profile.u);
    if global.phi.sup_abs() > 0.0 {
        for j in 0..grid.n_r() {
            for i in 0..grid.n_theta() {
                let v = base.get(j, i) + global.eval_phi(grid.point(j, i));
                base.set(j, i, v);
            }
        }
    }
    base
}

struct KelvinSolve {
    psi: PolarField,
    deviation: f64,
    iterations: usize,
}

fn solve_psi0(
    src: &RadialSource,
    r0: f64,
    spec: &GridSpec,
    corr: Option<&CorrectionHessian>,
    offset: &[f64],
) -> Result<KelvinSolve> {
    let kgrid = PolarGrid::kelvin(1.0 / r0, spec.n_r, spec.n_theta)?;
    let pre: Vec<f64> = kgrid.radii().iter().rev().map(|rho| 1.0 / rho).collect();
    let profile = src.profile(&pre)?;
    let n = kgrid.n_r();
    let mut dev_sup: f64 = 0.0;
    let coeffs = kelvin_field(&kgrid, |j, _, x| {
        let mut d = radial_deviation(&profile, n - 1 - j, x);
        if let Some(c) = corr {
            d = d.add(&c.cofactor(x));
        }
        dev_sup = dev_sup.max(d.max_abs_diff(&Sym2::new(0.0, 0.0, 0.0)));
        d
    })?;
    let solver = LinearSolver::new(&coeffs, FarField::Dirichlet)?;
    let bv = BoundaryValues { inner: None, outer: Some(offset.to_vec()) };
    let sol = solver.solve(&PolarField::zeros(&kgrid), &bv)?;
    Ok(KelvinSolve { psi: sol.psi, deviation: dev_sup, iterations: sol.iterations })
}

/// Full exterior pipeline; see the module documentation.
pub fn solve_exterior(spec: &ExteriorSpec, f: &SourceField, grid: &GridSpec, opts: &ExteriorOptions) -> Result<ExteriorSolution> {
    let r0 = spec.r0;
    spec.check_admissible(f)?;
    let ext = extend_source_with(f, r0, spec.d_target, opts.profile, opts.n_average)?;
    let global = solve_global(&ext.source, &AffineData::identity(), grid, &opts.global)?;
    let egrid = PolarGrid::exterior(r0, grid.n_r, grid.n_theta, grid.r_max)?;

    let src = RadialSource::from_source(&ext.source, opts.n_average.max(grid.n_theta));
    let profile = src.profile(egrid.radii())?;
    let corr = CorrectionHessian::new(&global);
    let mut base = sample_exterior_base(&profile, &egrid, &global);
    let offset = normalize_boundary(&base, spec);
    base = base.map(|v| v + offset.shift);

    let kelvin = solve_psi0(&src, r0, grid, corr.as_ref(), &offset.samples)?;
    let keval = kelvin.psi.evaluator();
    let mut psi0 = PolarField::zeros(&egrid);
    for (j, &r) in egrid.radii().iter().enumerate() {
        for i in 0..egrid.n_theta() {
            let v = if j == 0 { offset.samples[i] } else { keval.eval_polar(1.0 / r, egrid.thetas()[i]) };
            psi0.set(j, i, v);
        }
    }

    let coeffs = exterior_coefficients(&profile, &egrid, corr.as_ref())?;
    let (h, history, k) = {
        let ctx = IterationContext::with_base(&coeffs, &base, sample_deviation(&egrid, f)?, 0.0, FarField::NeumannMean)?;
        let mut state = initial_state(&ctx, psi0.clone())?;
        let mut converged = state.history[0].sup_psi < opts.tol;
        while !converged && state.level < opts.k_max {
            state = picard_step(&state, &ctx)?;
            converged = state.history.last().unwrap().sup_psi < opts.tol;
        }
        if !converged {
            let last = state.history.last().map_or(f64::NAN, |e| e.sup_psi);
            return Err(Error::NonConvergence { levels: state.level, last, history: state.history });
        }
        let k = state.level;
        (state.phi, state.history, k)
    };
    let psi_k = history.last().map(|_| PolarField::zeros(&egrid)).unwrap();

    let u = base.add(&h);
    let boundary_error = (0..egrid.n_theta())
        .map(|i| (u.get(0, i) - spec.boundary.eval(egrid.thetas()[i])).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 + (0..egrid.n_theta()).map(|i| u.get(0, i).abs()).fold(0.0, f64::max);
    if boundary_error > 10.0 * opts.tol.max(1e-13) * scale {
        return Err(Error::BoundaryConsistency { error: boundary_error });
    }

    let u_eval = u.evaluator();
    let window = opts.fit_window.unwrap_or_else(|| default_window(grid.r_max));
    let fit = {
        let ue = |x: Point| u_eval.eval(x);
        fit_expansion(&ue, &AffineData::identity(), window)?
    };
    let residual = history.last().map_or(f64::NAN, |e| e.residual);
    Ok(ExteriorSolution {
        grid: egrid,
        spec: spec.clone(),
        extension: ext.report,
        global,
        base,
        psi0,
        psi0_kelvin: kelvin.psi,
        offset,
        state: ExteriorState { k, h, psi_k, history, boundary_error },
        u,
        fit,
        residual,
        kelvin_deviation: kelvin.deviation,
        kelvin_iterations: kelvin.iterations,
        u_eval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BoundaryData;

    fn small() -> GridSpec {
        GridSpec { n_r: 128, n_theta: 32, r_max: 64.0 }
    }

    #[test]
    fn offset_shift() {
        let g = PolarGrid::exterior(1.0, 64, 32, 40.0).unwrap();
        let base = PolarField::from_fn(&g, |r, _| 0.5 * r * r);
        let spec = ExteriorSpec::new(1.0, BoundaryData::constant(5.5), 0.5, 0.0).unwrap();
        let o = normalize_boundary(&base, &spec);
        assert!((o.shift - 5.0).abs() < 1e-14 && o.sup < 1e-14);
        let spec = ExteriorSpec::new(1.0, BoundaryData::new(|t| 0.5 + 0.01 * t.cos(), "cos"), 0.5, 0.0).unwrap();
        let o = normalize_boundary(&base, &spec);
        assert!(o.shift.abs() < 1e-15);
        assert!((o.sup - 0.01).abs() < 1e-15);
    }

    #[test]
    fn quadratic_boundary_gives_zero_correction() {
        let spec = ExteriorSpec::new(1.0, BoundaryData::constant(0.5), 0.5, 0.0).unwrap();
        let s = solve_exterior(&spec, &SourceField::constant(1.0), &small(), &ExteriorOptions::default()).unwrap();
        assert!(s.state.h.sup_abs() < 1e-13);
        let x = [3.0, 4.0];
        assert!((s.u_eval(x) - 12.5).abs() < 1e-10);
    }

    #[test]
    fn radial_oracle() {
        let spec = ExteriorSpec::new(1.0, BoundaryData::constant(0.0), 0.5, 0.5).unwrap();
        let s = solve_exterior(&spec, &SourceField::constant(1.0), &small(), &ExteriorOptions::default()).unwrap();
        let exact = |r: f64| {
            let big = |t: f64| 0.5 * (t * (t * t + 1.0).sqrt() + t.asinh());
            big(r) - big(1.0)
        };
        let mut err: f64 = 0.0;
        for (j, &r) in s.grid.radii().iter().enumerate() {
            if r <= 32.0 {
                err = err.max((s.u.get(j, 0) - exact(r)).abs());
            }
        }
        assert!(err < 1e-8, "{err}");
        assert!((s.fit.d_fit - 0.5).abs() < 1e-3);
        assert!(s.boundary_error() < 1e-10);
    }

    #[test]
    fn perturbed_boundary() {
        let spec = ExteriorSpec::new(1.0, BoundaryData::new(|t| 0.01 * t.cos(), "cos"), 0.5, 0.5).unwrap();
        let s = solve_exterior(&spec, &SourceField::constant(1.0), &small(), &ExteriorOptions::default()).unwrap();
        assert!(s.boundary_error() < 1e-6);
        let ratios = crate::global::ratios(s.history());
        assert!(ratios.iter().all(|&r| r <= 0.5), "{ratios:?}");
        assert!(s.residual < 1e-5, "{}", s.residual);
        let spec0 = ExteriorSpec::new(1.0, BoundaryData::constant(0.0), 0.5, 0.5).unwrap();
        let s0 = solve_exterior(&spec0, &SourceField::constant(1.0), &small(), &ExteriorOptions::default()).unwrap();
        let diff = s.u.sub(&s0.u).sup_abs();
        assert!(diff > 1e-3 && diff < 2e-2, "{diff}");
    }
}
