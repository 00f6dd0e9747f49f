use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{norm, Point, Sym2};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

/// Source term `f` of `det D²u = f` together with its (af) decay metadata.
///
/// `deviation` returns `f − 1`; builtin families evaluate it directly so far-field
/// integrals do not lose precision to cancellation.
#[derive(Clone)]
pub struct SourceField {
    eval: ScalarFn,
    deviation: ScalarFn,
    grad: Option<VectorFn>,
    pub c0: f64,
    pub beta: f64,
    pub k_smooth: u32,
    pub label: String,
}

impl fmt::Debug for SourceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceField")
            .field("label", &self.label)
            .field("c0", &self.c0)
            .field("beta", &self.beta)
            .field("k_smooth", &self.k_smooth)
            .finish()
    }
}

impl SourceField {
    pub fn new(eval: impl Fn(Point) -> f64 + Send + Sync + 'static, c0: f64, beta: f64) -> Self {
        let eval: ScalarFn = Arc::new(eval);
        let e = eval.clone();
        Self {
            eval,
            deviation: Arc::new(move |x| e(x) - 1.0),
            grad: None,
            c0,
            beta,
            k_smooth: 3,
            label: "custom".into(),
        }
    }

    /// Source given through its deviation `f − 1`.
    pub fn from_deviation(dev: impl Fn(Point) -> f64 + Send + Sync + 'static, c0: f64, beta: f64) -> Self {
        let deviation: ScalarFn = Arc::new(dev);
        let d = deviation.clone();
        Self {
            eval: Arc::new(move |x| 1.0 + d(x)),
            deviation,
            grad: None,
            c0,
            beta,
            k_smooth: 3,
            label: "custom".into(),
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_smoothness(mut self, k: u32) -> Self {
        self.k_smooth = k;
        self
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        (self.eval)(x)
    }

    #[inline]
    pub fn deviation(&self, x: Point) -> f64 {
        (self.deviation)(x)
    }

    pub fn checked_eval(&self, x: Point) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidSource { point: x, value: v })
        }
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Analytic gradient when supplied, else central differences with `h = 1e-4 (1 + |x|)`.
    pub fn gradient(&self, x: Point) -> Point {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let h = 1e-4 * (1.0 + norm(x));
        let d = |e: Point| {
            (self.deviation([x[0] + h * e[0], x[1] + h * e[1]])
                - self.deviation([x[0] - h * e[0], x[1] - h * e[1]]))
                / (2.0 * h)
        };
        [d([1.0, 0.0]), d([0.0, 1.0])]
    }

    /// `y ↦ f(M y)` for a symmetric matrix `M`; the decay constants are kept.
    pub fn compose_linear(&self, m: Sym2) -> Self {
        let (e, d) = (self.eval.clone(), self.deviation.clone());
        let grad = self.grad.clone().map(|g| -> VectorFn {
            Arc::new(move |y: Point| m.apply(g(m.apply(y))))
        });
        Self {
            eval: Arc::new(move |y| e(m.apply(y))),
            deviation: Arc::new(move |y| d(m.apply(y))),
            grad,
            c0: self.c0,
            beta: self.beta,
            k_smooth: self.k_smooth,
            label: self.label.clone(),
        }
    }

    /// Spherical average of `f − 1` at radius `r`, trapezoid rule over `n` angles.
    pub fn average_deviation(&self, r: f64, n: usize) -> f64 {
        if r == 0.0 {
            return self.deviation([0.0, 0.0]);
        }
        let mut s = 0.0;
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            s += self.deviation([r * t.cos(), r * t.sin()]);
        }
        s / n as f64
    }

    // Builtin families.

    pub fn constant(value: f64) -> Self {
        let c0 = value.max(1.0 / value).max(1.0);
        let dev = value - 1.0;
        Self::from_deviation(move |_| dev, c0, f64::INFINITY)
            .with_gradient(|_| [0.0, 0.0])
            .with_label(format!("constant({value})"))
            .with_smoothness(u32::MAX)
    }

    /// `1 + ε (1 + |x|²)^{−β/2}`.
    pub fn rational(eps: f64, beta: f64) -> Self {
        let p = -0.5 * beta;
        Self::from_deviation(move |x| eps * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(p), decay_c0(eps, beta), beta)
            .with_gradient(move |x| {
                let q = 1.0 + x[0] * x[0] + x[1] * x[1];
                let s = eps * 2.0 * p * q.powf(p - 1.0);
                [s * x[0], s * x[1]]
            })
            .with_label(format!("rational(eps={eps}, beta={beta})"))
            .with_smoothness(u32::MAX)
    }

    /// `1 + ε e^{−|x|²}`.
    pub fn gaussian(eps: f64) -> Self {
        Self::from_deviation(move |x| eps * (-(x[0] * x[0] + x[1] * x[1])).exp(), 1.0 + eps.abs() * 30.0, 6.0)
            .with_label(format!("gaussian(eps={eps})"))
            .with_smoothness(u32::MAX)
    }

    /// `1 + ε (1 + x'Bx)^{−β/2}` with `B = diag(s, 1/s)`.
    pub fn anisotropic(eps: f64, beta: f64, stretch: f64) -> Self {
        let p = -0.5 * beta;
        let inv = 1.0 / stretch;
        let c0 = decay_c0(eps, beta) * stretch.max(inv).powf(0.5 * beta);
        Self::from_deviation(
            move |x| eps * (1.0 + stretch * x[0] * x[0] + inv * x[1] * x[1]).powf(p),
            c0,
            beta,
        )
        .with_label(format!("anisotropic(eps={eps}, beta={beta}, stretch={stretch})"))
        .with_smoothness(u32::MAX)
    }

    /// `1 + ε (1 + |x|²)^{−β/2} (1 + κ ρ^m cos mθ)`, `ρ = |x|/√(1 + |x|²)`.
    ///
    /// The factor `ρ^m` keeps the angular term smooth at the origin.
    pub fn angular(eps: f64, beta: f64, kappa: f64, m: u32) -> Self {
        let p = -0.5 * beta;
        let s = 0.5 * m as f64;
        Self::from_deviation(
            move |x| {
                let q = 1.0 + x[0] * x[0] + x[1] * x[1];
                let zm = complex_pow(x, m);
                eps * q.powf(p) * (1.0 + kappa * zm * q.powf(-s))
            },
            decay_c0(eps * (1.0 + kappa.abs()), beta),
            beta,
        )
        .with_label(format!("angular(eps={eps}, beta={beta}, kappa={kappa}, m={m})"))
        .with_smoothness(u32::MAX)
    }

    /// Odd perturbation `1 + ε x₁ (1 + |x|²)^{−3}`; its spherical average is identically 1.
    pub fn dipole(eps: f64) -> Self {
        Self::from_deviation(
            move |x| eps * x[0] * (1.0 + x[0] * x[0] + x[1] * x[1]).powi(-3),
            decay_c0(eps, 5.0),
            5.0,
        )
        .with_label(format!("dipole(eps={eps})"))
        .with_smoothness(u32::MAX)
    }
}

/// `Re (x₁ + i x₂)^m = r^m cos mθ`.
fn complex_pow(x: Point, m: u32) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..m {
        let t = re * x[0] - im * x[1];
        im = re * x[1] + im * x[0];
        re = t;
    }
    re
}

/// Smallest `c` with `1/c ≤ 1 + ε(1+r²)^{−β/2} ≤ c` and `|ε|(1+r²)^{−β/2} ≤ c (1+r)^{−β}`.
fn decay_c0(eps: f64, beta: f64) -> f64 {
    let bound = 1.0 + eps.abs();
    let low = 1.0 / (1.0 - eps.abs().min(0.999));
    let decay = eps.abs() * 2f64.powf(0.5 * beta);
    bound.max(low).max(decay)
}

/// `(1/2π) ∫_{|x| > r0} (f − 1) dx` by nested quadrature (adaptive in `r`, trapezoid in θ).
pub fn exterior_mass(f: &SourceField, r0: f64, n_angles: usize) -> f64 {
    let mut g = |r: f64| r * f.average_deviation(r, n_angles);
    radial_tail_integral(&mut g, r0)
}

/// `∫_{a}^∞ g(r) dr` for integrands decaying at least like `r^{−1−δ}`.
pub(crate) fn radial_tail_integral(g: &mut impl FnMut(f64) -> f64, a: f64) -> f64 {
    use crate::quadrature::integrate;
    let mut total = 0.0;
    let mut lo = a;
    let mut hi = if a > 0.0 { 2.0 * a } else { 1.0 };
    if a < 1.0 {
        total += integrate(g, a, 1.0, 1e-13);
        lo = 1.0;
        hi = 2.0;
    }
    for _ in 0..60 {
        let piece = integrate(g, lo, hi, 1e-13);
        total += piece;
        if piece.abs() < 1e-17 * total.abs().max(1e-300) && hi > 1e4 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_deviation_and_gradient() {
        let f = SourceField::rational(0.1, 4.0);
        assert!((f.eval([1.0, 0.0]) - 1.025).abs() < 1e-15);
        let g = f.gradient([0.3, -0.7]);
        let h = 1e-6;
        let fd = (f.eval([0.3 + h, -0.7]) - f.eval([0.3 - h, -0.7])) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-8);
    }

    #[test]
    fn angular_family_averages_to_rational() {
        let f = SourceField::angular(0.1, 4.0, 0.5, 2);
        let base = SourceField::rational(0.1, 4.0);
        for r in [0.0, 0.3, 2.0, 17.0] {
            let a = f.average_deviation(r, 64);
            assert!((a - base.deviation([r, 0.0])).abs() < 1e-15);
        }
    }

    #[test]
    fn dipole_averages_to_one() {
        let f = SourceField::dipole(0.1);
        assert!(f.average_deviation(0.8, 64).abs() < 1e-17);
    }

    #[test]
    fn identity_composition_is_pointwise_equal() {
        let f = SourceField::gaussian(0.1);
        let g = f.compose_linear(Sym2::IDENTITY);
        for x in [[0.0, 0.0], [0.4, 1.3], [-2.0, 0.5]] {
            assert_eq!(f.eval(x), g.eval(x));
        }
    }

    #[test]
    fn exterior_mass_of_rational_and_gaussian() {
        let f = SourceField::rational(0.1, 4.0);
        assert!((exterior_mass(&f, 0.0, 64) - 0.05).abs() < 1e-11);
        assert!((exterior_mass(&f, 1.0, 64) - 0.025).abs() < 1e-11);
        let g = SourceField::gaussian(0.1);
        assert!((exterior_mass(&g, 0.0, 64) - 0.05).abs() < 1e-11);
    }

    #[test]
    fn nonfinite_values_are_rejected() {
        let f = SourceField::new(|x| 1.0 / x[0], 2.0, 3.0);
        assert!(matches!(f.checked_eval([0.0, 1.0]), Err(Error::InvalidSource { .. })));
    }
}
