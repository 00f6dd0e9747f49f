use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Point, Sym2};

/// Quadratic part `A` (symmetric, positive definite, `det A = 1`), linear part `b`
/// and constant `c` of the prescribed asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineRaw", into = "AffineRaw")]
pub struct AffineData {
    a: Sym2,
    sqrt_a: Sym2,
    sqrt_a_inv: Sym2,
    pub b: Point,
    pub c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineRaw {
    #[serde(default = "identity_matrix")]
    a: [[f64; 2]; 2],
    #[serde(default)]
    b: Point,
    #[serde(default)]
    c: f64,
}

fn identity_matrix() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

impl TryFrom<AffineRaw> for AffineData {
    type Error = Error;
    fn try_from(raw: AffineRaw) -> Result<Self> {
        let m = raw.a;
        if (m[0][1] - m[1][0]).abs() > 1e-12 {
            return Err(Error::InvalidAffine(format!("A is not symmetric: {m:?}")));
        }
        AffineData::new(Sym2::new(m[0][0], m[0][1], m[1][1]), raw.b, raw.c)
    }
}

impl From<AffineData> for AffineRaw {
    fn from(a: AffineData) -> Self {
        let s = a.a;
        AffineRaw { a: [[s.a11, s.a12], [s.a12, s.a22]], b: a.b, c: a.c }
    }
}

impl Default for AffineData {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineData {
    pub fn identity() -> Self {
        Self {
            a: Sym2::IDENTITY,
            sqrt_a: Sym2::IDENTITY,
            sqrt_a_inv: Sym2::IDENTITY,
            b: [0.0, 0.0],
            c: 0.0,
        }
    }

    pub fn new(a: Sym2, b: Point, c: f64) -> Result<Self> {
        if !(a.a11.is_finite() && a.a12.is_finite() && a.a22.is_finite()) {
            return Err(Error::InvalidAffine("A has non-finite entries".into()));
        }
        let (l0, _) = a.eigenvalues();
        if !(l0 > 0.0) {
            return Err(Error::InvalidAffine(format!("A is not positive definite (eigenvalue {l0})")));
        }
        if (a.det() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidAffine(format!("det A = {} differs from 1", a.det())));
        }
        if !(b[0].is_finite() && b[1].is_finite() && c.is_finite()) {
            return Err(Error::InvalidAffine("b or c is not finite".into()));
        }
        let sqrt_a = a.sqrt();
        Ok(Self { a, sqrt_a, sqrt_a_inv: sqrt_a.inverse(), b, c })
    }

    pub fn a(&self) -> Sym2 {
        self.a
    }

    pub fn sqrt_a(&self) -> Sym2 {
        self.sqrt_a
    }

    pub fn sqrt_a_inv(&self) -> Sym2 {
        self.sqrt_a_inv
    }

    pub fn is_identity(&self) -> bool {
        self.a == Sym2::IDENTITY
    }

    /// `½ x'Ax + b·x`.
    pub fn quadratic(&self, x: Point) -> f64 {
        0.5 * self.a.quad_form(x) + self.b[0] * x[0] + self.b[1] * x[1]
    }

    /// `log √(x'Ax)`.
    pub fn log_radius(&self, x: Point) -> f64 {
        0.5 * self.a.quad_form(x).ln()
    }

    /// `y = √A x`, the variable in which the problem becomes radial at infinity.
    pub fn to_normalized(&self, x: Point) -> Point {
        self.sqrt_a.apply(x)
    }

    pub fn from_normalized(&self, y: Point) -> Point {
        self.sqrt_a_inv.apply(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_is_accurate() {
        let a = AffineData::new(Sym2::new(2.0, 0.5, 0.625), [0.0, 0.0], 0.0).unwrap();
        let s = a.sqrt_a();
        let m = s.mul(&s);
        assert!((m[0][0] - 2.0).abs() < 1e-12 && (m[0][1] - 0.5).abs() < 1e-12 && (m[1][1] - 0.625).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(AffineData::new(Sym2::diag(2.0, 1.0), [0.0, 0.0], 0.0).is_err());
        assert!(AffineData::new(Sym2::diag(-1.0, -1.0), [0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = AffineData::new(Sym2::diag(2.0, 0.5), [1.0, -1.0], 3.0).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let back: AffineData = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
        let bad: std::result::Result<AffineData, _> = serde_json::from_str(r#"{"a": [[2, 0], [0, 2]]}"#);
        assert!(bad.is_err());
    }
}
