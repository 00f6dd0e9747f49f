use serde::Serialize;

use super::{AffineData, SourceField};
use crate::error::{Error, Result};
use crate::linalg::{ls_slope, Point};

/// Sample points for the hypothesis checks: the origin plus geometric radii
/// `r_min · 2^j ≤ r_max`, each with `n_angles` uniform angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub r_min: f64,
    pub r_max: f64,
    pub n_angles: usize,
    pub eps0_threshold: f64,
    /// Radii over which the decay exponent is fitted.
    pub slope_window: (f64, f64),
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { r_min: 1.0 / 64.0, r_max: 64.0, n_angles: 64, eps0_threshold: 0.1, slope_window: (8.0, 64.0) }
    }
}

impl SamplingPlan {
    pub fn radii(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut r = self.r_min;
        while r <= self.r_max * (1.0 + 1e-12) {
            out.push(r);
            r *= 2.0;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub point: Point,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub c0_fit: f64,
    pub beta_fit: f64,
    pub beta1: f64,
    pub eps0_fit: f64,
    pub eps1_fit: f64,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

/// `f₁(y) = f(√A⁻¹ y)`.
pub fn normalize_source(f: &SourceField, aff: &AffineData) -> SourceField {
    if aff.is_identity() {
        return f.clone();
    }
    f.compose_linear(aff.sqrt_a_inv())
}

/// `f̃₁(r) = (1/2π) ∫ f₁(r e^{iθ}) dθ` by the trapezoid rule over `n_theta` angles.
pub fn spherical_average(f1: &SourceField, radii: &[f64], n_theta: usize) -> Vec<f64> {
    radii.iter().map(|&r| 1.0 + f1.average_deviation(r, n_theta)).collect()
}

fn worst(slot: &mut Option<Violation>, check: &str, point: Point, value: f64, bound: f64) {
    let excess = value - bound;
    if slot.as_ref().is_none_or(|v| excess > v.value - v.bound) {
        *slot = Some(Violation { check: check.into(), point, value, bound });
    }
}

pub fn validate_source(f: &SourceField, aff: &AffineData, plan: &SamplingPlan) -> Result<ValidationReport> {
    if plan.n_angles < 16 {
        return Err(Error::Config(format!("sampling plan needs at least 16 angles, got {}", plan.n_angles)));
    }
    let radii = plan.radii();
    let f1 = normalize_source(f, aff);
    let n = plan.n_angles;
    let angles: Vec<(f64, f64)> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin_cos())
        .collect();

    let mut lower = None;
    let mut upper = None;
    let mut decay = None;
    let mut c0_fit: f64 = 1.0;
    let mut dev_sup = Vec::with_capacity(radii.len());
    let mut offsets = Vec::with_capacity(radii.len());

    for &r in &radii {
        let mut sup_dev: f64 = 0.0;
        let mut sup_off = [0.0f64; 2];
        let avg = f1.average_deviation(r, n);
        let davg = if r == 0.0 {
            0.0
        } else {
            angles
                .iter()
                .map(|&(s, c)| {
                    let g = f1.gradient([r * c, r * s]);
                    g[0] * c + g[1] * s
                })
                .sum::<f64>()
                / n as f64
        };
        let pts: &[(f64, f64)] = if r == 0.0 { &angles[..1] } else { &angles };
        for &(s, c) in pts {
            let x = [r * c, r * s];
            let v = f.checked_eval(x)?;
            let dev = f.deviation(x);
            c0_fit = c0_fit.max(v).max(1.0 / v);
            if v < 1.0 / f.c0 {
                worst(&mut lower, "lower bound 1/c0 <= f", x, 1.0 / v, f.c0);
            }
            if v > f.c0 {
                worst(&mut upper, "upper bound f <= c0", x, v, f.c0);
            }
            let weight = (1.0 + r).powf(f.beta);
            let decay_bound = if weight.is_finite() { f.c0 / weight } else { 0.0 };
            if dev.abs() > decay_bound * (1.0 + 1e-12) + 1e-300 {
                worst(&mut decay, "decay |f - 1| <= c0 (1+|x|)^-beta", x, dev.abs(), decay_bound);
            }
            if dev != 0.0 {
                c0_fit = c0_fit.max(dev.abs() * (1.0 + r).powf(f.beta.min(1e3)));
            }
            sup_dev = sup_dev.max(dev.abs());

            let y = x;
            let off0 = (f1.deviation(y) - avg).abs();
            let g = f1.gradient(y);
            let (e0, e1) = if r == 0.0 { (0.0, 0.0) } else { (c, s) };
            let off1 = (g[0] - davg * e0).hypot(g[1] - davg * e1);
            sup_off[0] = sup_off[0].max(off0);
            sup_off[1] = sup_off[1].max(off1);
        }
        dev_sup.push(sup_dev);
        offsets.push(sup_off);
    }

    let (lo, hi) = plan.slope_window;
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&dev_sup)
        .filter(|(r, d)| **r >= lo * (1.0 - 1e-12) && **r <= hi * (1.0 + 1e-12) && **d > 0.0)
        .map(|(r, d)| ((1.0 + r).ln(), d.ln()))
        .unzip();
    let beta_fit = if xs.len() >= 2 { -ls_slope(&xs, &ys) } else { f.beta };
    let beta1 = beta_fit / 2.0 + 1.0;

    let eps0_fit = offsets.iter().fold(0.0f64, |m, o| m.max(o[0]).max(o[1]));
    let eps1_fit = radii
        .iter()
        .zip(&offsets)
        .fold(0.0f64, |m, (r, o)| m.max((1.0 + r).powf(beta1) * o[0].max(o[1])));

    let mut violations: Vec<Violation> = [lower, upper, decay].into_iter().flatten().collect();
    if !(f.beta > 2.0) {
        violations.push(Violation {
            check: "decay exponent beta > 2".into(),
            point: [0.0, 0.0],
            value: f.beta,
            bound: 2.0,
        });
    } else if beta_fit.is_finite() && beta_fit <= 2.0 {
        violations.push(Violation {
            check: "fitted decay exponent beta_fit > 2".into(),
            point: [hi, 0.0],
            value: beta_fit,
            bound: 2.0,
        });
    }
    if eps0_fit > plan.eps0_threshold {
        violations.push(Violation {
            check: "angular offset sup |D^m (f1 - f1~)| <= eps0".into(),
            point: [0.0, 0.0],
            value: eps0_fit,
            bound: plan.eps0_threshold,
        });
    }

    Ok(ValidationReport {
        c0_fit,
        beta_fit,
        beta1,
        eps0_fit,
        eps1_fit,
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Sym2;

    #[test]
    fn constant_source_passes_trivially() {
        let rep = validate_source(&SourceField::constant(1.0), &AffineData::identity(), &SamplingPlan::default()).unwrap();
        assert_eq!(rep.c0_fit, 1.0);
        assert_eq!(rep.eps0_fit, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn rational_decay_slope() {
        let rep = validate_source(&SourceField::rational(0.1, 4.0), &AffineData::identity(), &SamplingPlan::default()).unwrap();
        assert!((rep.beta_fit - 4.0).abs() < 0.2, "{}", rep.beta_fit);
        assert_eq!(rep.beta1, rep.beta_fit / 2.0 + 1.0);
        assert!(rep.eps0_fit < 1e-9);
        assert!(rep.passed, "{:?}", rep.violations);
    }

    #[test]
    fn dipole_has_nonzero_offset() {
        let rep = validate_source(&SourceField::dipole(0.1), &AffineData::identity(), &SamplingPlan::default()).unwrap();
        assert!(rep.eps0_fit > 1e-3 && rep.eps0_fit < 0.1);
        assert!(rep.passed, "{:?}", rep.violations);
    }

    #[test]
    fn slow_decay_is_reported() {
        let rep = validate_source(&SourceField::rational(0.1, 1.5), &AffineData::identity(), &SamplingPlan::default()).unwrap();
        assert!(!rep.passed);
        assert!(rep.violations.iter().any(|v| v.check.contains("beta > 2")));
    }

    #[test]
    fn normalization_is_invertible() {
        let aff = AffineData::new(Sym2::diag(2.0, 0.5), [0.0, 0.0], 0.0).unwrap();
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        let f1 = normalize_source(&f, &aff);
        for x in [[0.3, 0.1], [-2.0, 5.0], [10.0, -3.0]] {
            let y = aff.to_normalized(x);
            assert!((f1.eval(y) - f.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn spherical_average_of_angular_source() {
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        let r = [0.0, 0.5, 3.0];
        let avg = spherical_average(&f, &r, 64);
        for (a, r) in avg.iter().zip(r) {
            assert!((a - 1.0 - 0.1 * (1.0 + r * r).powi(-2)).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_is_invariant_under_normalization() {
        let aff = AffineData::new(Sym2::diag(2.0, 0.5), [0.0, 0.0], 0.0).unwrap();
        let f = SourceField::rational(0.1, 4.0);
        let f1 = normalize_source(&f, &aff);
        let d = crate::problem::exterior_mass(&f, 0.0, 128);
        let d1 = crate::problem::exterior_mass(&f1, 0.0, 128);
        assert!((d - 0.05).abs() < 1e-10 && (d1 - 0.05).abs() < 1e-8, "{d} {d1}");
    }
}
