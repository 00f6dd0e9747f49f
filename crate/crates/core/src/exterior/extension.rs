use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::problem::{exterior_mass, SourceField};
use crate::quadrature::integrate;

/// Compact radial bump `χ(t)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `(1 − t²)³`
    #[default]
    Cubic,
    /// `(1 − t²)⁴`
    Quartic,
}

impl BumpProfile {
    pub fn eval(self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t.abs()) {
            return 0.0;
        }
        let s = 1.0 - t * t;
        match self {
            BumpProfile::Cubic => s * s * s,
            BumpProfile::Quartic => (s * s) * (s * s),
        }
    }

    /// `∫₀¹ t χ(t) dt`.
    pub fn moment(self) -> f64 {
        match self {
            BumpProfile::Cubic => 1.0 / 8.0,
            BumpProfile::Quartic => 1.0 / 10.0,
        }
    }
}

const BLEND_START: f64 = 0.8;

/// `C²` step from 0 at `t = 0.8` to 1 at `t = 1`.
pub fn blend_weight(t: f64) -> f64 {
    let s = ((t - BLEND_START) / (1.0 - BLEND_START)).clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub gamma: f64,
    pub profile: BumpProfile,
    /// `(1/2π) ∫_{|x|>r₀} (f − 1)`.
    pub mass_outside: f64,
    /// `(1/2π) ∫_{|x|<r₀} w (f − 1)`.
    pub mass_blend: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// Achieved bound constant of the extended source.
    pub c0: f64,
}

#[derive(Debug, Clone)]
pub struct ExtendedSource {
    pub source: SourceField,
    pub report: ExtensionReport,
}

pub fn extend_source(f: &SourceField, r0: f64, d_target: f64) -> Result<ExtendedSource> {
    extend_source_with(f, r0, d_target, BumpProfile::Cubic, 128)
}

/// `f_ext = f` for `|x| ≥ r₀` and `1 + w(t)(f − 1) + γχ(t)` with `t = |x|/r₀` inside;
/// the mass is affine in `γ`, so `γ` is explicit.
pub fn extend_source_with(
    f: &SourceField,
    r0: f64,
    d_target: f64,
    profile: BumpProfile,
    n_angles: usize,
) -> Result<ExtendedSource> {
    if !(r0 > 0.0) {
        return Err(Error::Config(format!("r0 = {r0} must be positive")));
    }
    let mass_outside = exterior_mass(f, r0, n_angles);
    let mass_blend = integrate(
        &mut |r: f64| r * blend_weight(r / r0) * f.average_deviation(r, n_angles),
        BLEND_START * r0,
        r0,
        1e-14,
    );
    let gamma = (d_target - mass_outside - mass_blend) / (r0 * r0 * profile.moment());

    let g = f.clone();
    let dev = move |x: Point| {
        let r = x[0].hypot(x[1]);
        if r >= r0 {
            g.deviation(x)
        } else {
            let t = r / r0;
            let w = blend_weight(t);
            let base = if w > 0.0 { w * g.deviation(x) } else { 0.0 };
            base + gamma * profile.eval(t)
        }
    };

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let n_r = 65;
    for k in 0..n_r {
        let r = r0 * k as f64 / (n_r - 1) as f64;
        for i in 0..n_angles.max(8) {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_angles.max(8) as f64;
            let v = 1.0 + dev([r * t.cos(), r * t.sin()]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(lo >= 0.5 / f.c0) {
        return Err(Error::ExtensionInfeasible(format!(
            "extension reaches {lo} < 1/(2 c0) = {} (gamma = {gamma}); d_target = {d_target} is too small for r0 = {r0}",
            0.5 / f.c0
        )));
    }
    let c0 = f.c0.max(hi).max(1.0 / lo);
    let source = SourceField::from_deviation(dev, c0, f.beta)
        .with_label(format!("{} extended inside r0={r0}", f.label))
        .with_smoothness(f.k_smooth.min(2));
    Ok(ExtendedSource {
        source,
        report: ExtensionReport { gamma, profile, mass_outside, mass_blend, min_value: lo, max_value: hi, c0 },
    })
}

/// `(1/2π) ∫_{ℝ²} (f_ext − 1)`, split at the blend and extension radii.
pub fn extension_mass(ext: &SourceField, r0: f64, n_angles: usize) -> f64 {
    let mut g = |r: f64| r * ext.average_deviation(r, n_angles);
    let inner = integrate(&mut g, 0.0, BLEND_START * r0, 1e-14) + integrate(&mut g, BLEND_START * r0, r0, 1e-14);
    inner + exterior_mass(ext, r0, n_angles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_extension() {
        let e = extend_source(&SourceField::constant(1.0), 1.0, 0.0).unwrap();
        assert_eq!(e.report.gamma, 0.0);
        assert_eq!(e.source.eval([0.1, 0.2]), 1.0);
    }

    #[test]
    fn gamma_matches_closed_form() {
        for p in [BumpProfile::Cubic, BumpProfile::Quartic] {
            let e = extend_source_with(&SourceField::constant(1.0), 1.0, 0.3, p, 64).unwrap();
            assert!((e.report.gamma * p.moment() - 0.3).abs() < 1e-14);
            let q = integrate(&mut |t: f64| t * p.eval(t), 0.0, 1.0, 1e-15);
            assert!((q - p.moment()).abs() < 1e-14);
        }
    }

    #[test]
    fn both_profiles_meet_the_mass_constraint() {
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        for p in [BumpProfile::Cubic, BumpProfile::Quartic] {
            let e = extend_source_with(&f, 1.5, 0.4, p, 64).unwrap();
            let m = extension_mass(&e.source, 1.5, 64);
            assert!((m - 0.4).abs() < 1e-10, "{p:?} {m}");
            let x = [1.7, -0.4];
            assert_eq!(e.source.eval(x), f.eval(x));
        }
    }

    #[test]
    fn too_negative_mass_is_infeasible() {
        let r = extend_source(&SourceField::constant(1.0), 1.0, -0.2);
        assert!(matches!(r, Err(Error::ExtensionInfeasible(_))));
    }

    #[test]
    fn blend_is_c2() {
        let h = 1e-5;
        for t in [BLEND_START, 1.0] {
            let d2 = |s: f64| (blend_weight(s + h) - 2.0 * blend_weight(s) + blend_weight(s - h)) / (h * h);
            assert!(d2(t).abs() < 0.1, "{}", d2(t));
        }
    }
}
