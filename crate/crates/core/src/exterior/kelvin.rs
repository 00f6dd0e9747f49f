//! Inversion `y = x/|x|²` of `a_ij ∂_ij ψ = g` on `|x| > r₀`.
//!
//! With `M = I − 2ŷŷᵀ` and `ψ̂(y) = ψ(y/|y|²)`,
//! `a_ij ∂_ij ψ = |y|⁴ (b_kl ∂_kl ψ̂ + b_k ∂_k ψ̂)` where `b = M a M` and
//! `b_k = −(2/|y|²)[2(a y)_k + tr(a) y_k − 4 (yᵀa y) y_k/|y|²]`.
//! Only `a − I` enters `b_k`, which keeps the formula accurate near `y = 0`.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::{PolarField, PolarGrid};
use crate::linalg::{Point, Sym2};
use crate::radial::CoefficientField;

pub fn reflection(y: Point) -> [[f64; 2]; 2] {
    let n2 = y[0] * y[0] + y[1] * y[1];
    if n2 == 0.0 {
        return [[1.0, 0.0], [0.0, 1.0]];
    }
    let (a, b) = (y[0] * y[0] / n2, y[0] * y[1] / n2);
    let c = y[1] * y[1] / n2;
    [[1.0 - 2.0 * a, -2.0 * b], [-2.0 * b, 1.0 - 2.0 * c]]
}

/// Pre-image `x = y/|y|²`.
pub fn inversion(y: Point) -> Point {
    let n2 = y[0] * y[0] + y[1] * y[1];
    [y[0] / n2, y[1] / n2]
}

/// `(b_kl, b_k)` at `y` from `δ = a(y/|y|²) − I`.
pub fn transform_deviation(delta: Sym2, y: Point) -> (Sym2, Point) {
    let n2 = y[0] * y[0] + y[1] * y[1];
    if n2 == 0.0 {
        return (Sym2::IDENTITY, [0.0, 0.0]);
    }
    let m = reflection(y);
    let b = Sym2::IDENTITY.add(&delta.congruence(m));
    let dy = delta.apply(y);
    let tr = delta.trace();
    let q = delta.quad_form(y) / n2;
    let s = -2.0 / n2;
    let v = [s * (2.0 * dy[0] + (tr - 4.0 * q) * y[0]), s * (2.0 * dy[1] + (tr - 4.0 * q) * y[1])];
    (b, v)
}

/// Pointwise Kelvin coefficients of an operator given by `a(x) − I`.
#[derive(Clone)]
pub struct KelvinCoefficients {
    deviation: Arc<dyn Fn(Point) -> Sym2 + Send + Sync>,
}

impl std::fmt::Debug for KelvinCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("KelvinCoefficients")
    }
}

impl KelvinCoefficients {
    pub fn new(deviation: impl Fn(Point) -> Sym2 + Send + Sync + 'static) -> Self {
        Self { deviation: Arc::new(deviation) }
    }

    pub fn identity() -> Self {
        Self::new(|_| Sym2::new(0.0, 0.0, 0.0))
    }

    /// From the full matrix `a(x)`.
    pub fn from_matrix(a: impl Fn(Point) -> Sym2 + Send + Sync + 'static) -> Self {
        Self::new(move |x| a(x).sub(&Sym2::IDENTITY))
    }

    pub fn at(&self, y: Point) -> (Sym2, Point) {
        if y == [0.0, 0.0] {
            return (Sym2::IDENTITY, [0.0, 0.0]);
        }
        transform_deviation((self.deviation)(inversion(y)), y)
    }

    pub fn b_matrix(&self, y: Point) -> Sym2 {
        self.at(y).0
    }

    pub fn b_vector(&self, y: Point) -> Point {
        self.at(y).1
    }
}

pub fn kelvin_coefficients(k: &KelvinCoefficients, y: Point) -> (Sym2, Point) {
    k.at(y)
}

/// Kelvin coefficient field on a disk grid; `deviation(j, i, x)` returns `a(x) − I` at the
/// pre-image of node `(j, i)`.
pub fn kelvin_field(grid: &Arc<PolarGrid>, mut deviation: impl FnMut(usize, usize, Point) -> Sym2) -> Result<CoefficientField> {
    let mut f = [(); 5].map(|_| PolarField::zeros(grid));
    for j in 0..grid.n_r() {
        for i in 0..grid.n_theta() {
            let y = grid.point(j, i);
            let (b, v) = transform_deviation(deviation(j, i, inversion(y)), y);
            f[0].set(j, i, b.a11);
            f[1].set(j, i, b.a12);
            f[2].set(j, i, b.a22);
            f[3].set(j, i, v[0]);
            f[4].set(j, i, v[1]);
        }
    }
    let [a11, a12, a22, b1, b2] = f;
    CoefficientField::general(a11, a12, a22, Some((b1, b2)))
}
