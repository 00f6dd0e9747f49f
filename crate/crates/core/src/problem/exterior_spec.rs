use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{exterior_mass, SourceField};
use crate::error::{Error, Result};

/// Dirichlet data `φ(θ)` on the circle `|x| = r₀`.
#[derive(Clone)]
pub struct BoundaryData {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub label: String,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryData({})", self.label)
    }
}

impl BoundaryData {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, label: impl Into<String>) -> Self {
        Self { eval: Arc::new(f), label: label.into() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, format!("constant({c})"))
    }

    /// Trigonometric interpolant of samples at uniform angles `2πk/n`.
    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::Config("boundary samples need at least 4 values".into()));
        }
        let nm = n / 2;
        let mut a = vec![0.0; nm + 1];
        let mut b = vec![0.0; nm + 1];
        for m in 0..=nm {
            for (k, v) in values.iter().enumerate() {
                let t = 2.0 * PI * (k * m) as f64 / n as f64;
                a[m] += v * t.cos();
                b[m] += v * t.sin();
            }
            let scale = if m == 0 || (n % 2 == 0 && m == nm) { 1.0 } else { 2.0 };
            a[m] *= scale / n as f64;
            b[m] *= scale / n as f64;
        }
        Ok(Self::new(
            move |t| (0..=nm).map(|m| a[m] * (m as f64 * t).cos() + b[m] * (m as f64 * t).sin()).sum(),
            format!("samples(n={n})"),
        ))
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        (self.eval)(theta)
    }

    pub fn add(&self, other: &BoundaryData) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self::new(move |t| a(t) + b(t), format!("{} + {}", self.label, other.label))
    }
}

/// Sup norm and pairwise Hölder seminorm `sup |g(θᵢ) − g(θⱼ)| / |xᵢ − xⱼ|^α` of samples
/// taken at uniform angles on the circle of radius `r0`.
pub fn holder_seminorm(samples: &[f64], r0: f64, alpha: f64) -> f64 {
    let n = samples.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dt = 2.0 * PI * (j - i) as f64 / n as f64;
            let chord = 2.0 * r0 * (0.5 * dt).sin();
            best = best.max((samples[i] - samples[j]).abs() / chord.powf(alpha));
        }
    }
    best
}

/// Exterior Dirichlet data: radius `r₀`, boundary values, Hölder exponent and target mass `d`.
#[derive(Debug, Clone)]
pub struct ExteriorSpec {
    pub r0: f64,
    pub boundary: BoundaryData,
    pub alpha: f64,
    pub d_target: f64,
}

impl ExteriorSpec {
    pub fn new(r0: f64, boundary: BoundaryData, alpha: f64, d_target: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Config(format!("r0 = {r0} must be positive")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        Ok(Self { r0, boundary, alpha, d_target })
    }

    /// Smallest admissible mass: `(1/2π)∫_{|x|>r₀}(f − 1) − r₀²/2`.
    pub fn admissibility_bound(&self, f: &SourceField) -> f64 {
        exterior_mass(f, self.r0, 128) - 0.5 * self.r0 * self.r0
    }

    pub fn check_admissible(&self, f: &SourceField) -> Result<()> {
        let bound = self.admissibility_bound(f);
        if self.d_target > bound {
            Ok(())
        } else {
            Err(Error::ValidationFailed(format!(
                "d_target = {} must exceed {bound} for r0 = {}",
                self.d_target, self.r0
            )))
        }
    }

    pub fn boundary_samples(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.boundary.eval(2.0 * PI * i as f64 / n as f64)).collect()
    }

    pub fn boundary_holder(&self, n: usize) -> f64 {
        holder_seminorm(&self.boundary_samples(n), self.r0, self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_interpolant_is_exact_on_trig_polynomials() {
        let n = 32;
        let vals: Vec<f64> = (0..n).map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            1.0 + 0.3 * (2.0 * t).cos() - 0.1 * (5.0 * t).sin()
        }).collect();
        let b = BoundaryData::from_samples(vals).unwrap();
        let t = 0.123;
        assert!((b.eval(t) - (1.0 + 0.3 * (2.0 * t).cos() - 0.1 * (5.0 * t).sin())).abs() < 1e-13);
    }

    #[test]
    fn admissibility() {
        let f = SourceField::constant(1.0);
        let spec = ExteriorSpec::new(1.0, BoundaryData::constant(0.0), 0.5, 0.5).unwrap();
        assert!(spec.check_admissible(&f).is_ok());
        let spec = ExteriorSpec::new(1.0, BoundaryData::constant(0.0), 0.5, -0.6).unwrap();
        assert!(spec.check_admissible(&f).is_err());
    }

    #[test]
    fn holder_of_lipschitz_data() {
        let n = 256;
        let s: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
        let h = holder_seminorm(&s, 1.0, 1.0);
        assert!((h - 1.0).abs() < 1e-3, "{h}");
    }
}
