//! Small dense helpers: 2×2 symmetric matrices, a banded LU with partial
//! pivoting for the radial two-point problems, and a Householder least
//! squares solve for the asymptotic fits.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

pub fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Cofactor (adjugate) matrix; for a Hessian this is the linearization of `det`.
    pub fn cofactor(&self) -> Self {
        Self::new(self.a22, -self.a12, self.a11)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * self.trace();
        let r = (0.5 * (self.a11 - self.a22)).hypot(self.a12);
        (m - r, m + r)
    }

    pub fn apply(&self, v: Point) -> Point {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    pub fn quad_form(&self, v: Point) -> f64 {
        let av = self.apply(v);
        av[0] * v[0] + av[1] * v[1]
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.a22 / d, -self.a12 / d, self.a11 / d)
    }

    /// Principal square root of a positive definite matrix.
    pub fn sqrt(&self) -> Self {
        // For 2×2 SPD: sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)).
        let s = self.det().sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        Self::new((self.a11 + s) / t, self.a12 / t, (self.a22 + s) / t)
    }

    pub fn mul(&self, other: &Sym2) -> [[f64; 2]; 2] {
        [
            [
                self.a11 * other.a11 + self.a12 * other.a12,
                self.a11 * other.a12 + self.a12 * other.a22,
            ],
            [
                self.a12 * other.a11 + self.a22 * other.a12,
                self.a12 * other.a12 + self.a22 * other.a22,
            ],
        ]
    }

    pub fn max_abs_diff(&self, other: &Sym2) -> f64 {
        (self.a11 - other.a11)
            .abs()
            .max((self.a12 - other.a12).abs())
            .max((self.a22 - other.a22).abs())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.a11, s * self.a12, s * self.a22)
    }

    pub fn add(&self, o: &Sym2) -> Self {
        Self::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }

    pub fn sub(&self, o: &Sym2) -> Self {
        Self::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }

    /// `Mᵀ S M` for a general 2×2 matrix `M` (row-major).
    pub fn congruence(&self, m: [[f64; 2]; 2]) -> Self {
        let s = [[self.a11, self.a12], [self.a12, self.a22]];
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += m[k][i] * s[k][l] * m[l][j];
                    }
                }
                *o = acc;
            }
        }
        Self::new(out[0][0], 0.5 * (out[0][1] + out[1][0]), out[1][1])
    }
}

/// LU factorization of a banded matrix with partial pivoting.
///
/// Row `i` stores absolute columns `i - kl ..= i + kl + ku` so that row swaps
/// keep the fill-in inside the band.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandedLu {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: (0..n).collect(),
            factored: false,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(!self.factored);
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside declared band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(!self.factored);
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside declared band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    /// Matrix-vector product (before factorization).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.factored);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factor in place. Returns the index of the first zero pivot on failure.
    pub fn factor(&mut self) -> Result<(), usize> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-14 * scale) {
                return Err(k);
            }
            self.pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let akj = self.get(k, j);
                        let sij = self.slot(i, j);
                        self.data[sij] -= l * akj;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored);
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.get(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                acc -= self.get(k, j) * b[j];
            }
            b[k] = acc / self.get(k, k);
        }
    }
}

/// Least squares `min ‖X c − y‖₂` by Householder QR. `cols` are the columns of `X`.
/// Returns the coefficients and the 2-norm condition estimate `max|R_ii| / min|R_ii|`
/// of the column-normalized design.
pub fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let m = y.len();
    let n = cols.len();
    assert!(m >= n && n > 0);
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let mut a: Vec<Vec<f64>> = cols
        .iter()
        .zip(&norms)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut rhs = y.to_vec();
    for k in 0..n {
        let alpha = {
            let s: f64 = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if a[k][k] > 0.0 {
                -s
            } else {
                s
            }
        };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k) {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vn;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&rhs[k..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vn;
        for (c, vi) in rhs[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut coef = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for j in k + 1..n {
            acc -= a[j][k] * coef[j];
        }
        coef[k] = acc / a[k][k];
    }
    let diag: Vec<f64> = (0..n).map(|k| a[k][k].abs()).collect();
    let cond = diag.iter().cloned().fold(0.0, f64::max)
        / diag.iter().cloned().fold(f64::INFINITY, f64::min);
    for (c, s) in coef.iter_mut().zip(&norms) {
        *c /= s;
    }
    (coef, cond)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let a = Sym2::new(2.0, 0.3, 0.5 + 0.045);
        let s = a.sqrt();
        let p = s.mul(&s);
        assert!((p[0][0] - a.a11).abs() < 1e-14);
        assert!((p[0][1] - a.a12).abs() < 1e-14);
        assert!((p[1][1] - a.a22).abs() < 1e-14);
    }

    #[test]
    fn banded_matches_dense_solution() {
        // tridiagonal plus a far entry to force pivoting
        let n = 12;
        let mut m = BandedLu::zeros(n, 2, 3);
        for i in 0..n {
            m.set(i, i, if i % 3 == 0 { 1e-3 } else { 4.0 });
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
                m.set(i + 1, i, 2.0);
            }
            if i + 3 < n {
                m.set(i, i + 3, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = m.matvec(&x);
        m.factor().unwrap();
        m.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn least_squares_recovers_exact_model() {
        let xs: Vec<f64> = (1..50).map(|i| 8.0 + i as f64 * 0.5).collect();
        let y: Vec<f64> = xs.iter().map(|x| 0.5 * x.ln() + 3.0 + 2.0 / (x * x)).collect();
        let cols = vec![
            xs.iter().map(|x| x.ln()).collect(),
            vec![1.0; xs.len()],
            xs.iter().map(|x| x.powi(-2)).collect(),
        ];
        let (c, cond) = least_squares(&cols, &y);
        assert!((c[0] - 0.5).abs() < 1e-10);
        assert!((c[1] - 3.0).abs() < 1e-9);
        assert!((c[2] - 2.0).abs() < 1e-7);
        assert!(cond.is_finite());
    }
}
