//! Compressed sparse rows, incomplete LU without fill, and BiCGSTAB.

#[derive(Debug, Clone, Default)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from per-row `(col, value)` lists; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut m = CsrMatrix { n, row_ptr: Vec::with_capacity(n + 1), cols: Vec::new(), vals: Vec::new() };
        m.row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *m.vals.last_mut().unwrap() += v;
                } else {
                    m.cols.push(c);
                    m.vals.push(v);
                    last = Some(c);
                }
            }
            m.row_ptr.push(m.cols.len());
        }
        m
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    fn diag_index(&self, i: usize) -> Option<usize> {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        r.binary_search(&i).ok().map(|k| k + self.row_ptr[i])
    }
}

/// `ILU(0)` factors stored in the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Option<Self> {
        let mut lu = a.clone();
        let n = a.n;
        let diag: Vec<usize> = (0..n).map(|i| lu.diag_index(i)).collect::<Option<_>>()?;
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in s..e {
                pos[lu.cols[k]] = k;
            }
            for k in s..e {
                let c = lu.cols[k];
                if c >= i {
                    break;
                }
                let piv = lu.vals[diag[c]];
                if piv == 0.0 {
                    return None;
                }
                let l = lu.vals[k] / piv;
                lu.vals[k] = l;
                for kk in diag[c] + 1..lu.row_ptr[c + 1] {
                    let p = pos[lu.cols[kk]];
                    if p != usize::MAX {
                        lu.vals[p] -= l * lu.vals[kk];
                    }
                }
            }
            for k in s..e {
                pos[lu.cols[k]] = usize::MAX;
            }
            if lu.vals[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(Self { lu, diag })
    }

    pub fn apply(&self, b: &[f64], x: &mut [f64]) {
        let m = &self.lu;
        for i in 0..m.n {
            let mut s = b[i];
            for k in m.row_ptr[i]..self.diag[i] {
                s -= m.vals[k] * x[m.cols[k]];
            }
            x[i] = s;
        }
        for i in (0..m.n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..m.row_ptr[i + 1] {
                s -= m.vals[k] * x[m.cols[k]];
            }
            x[i] = s / m.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB; returns the iteration count on success.
pub fn bicgstab(a: &CsrMatrix, pre: &Ilu0, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Option<usize> {
    let n = a.n;
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = norm2(b).max(1e-300);
    if norm2(&r) / bnorm < tol {
        return Some(0);
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            return None;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut ph);
        a.matvec(&ph, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            return Some(it);
        }
        pre.apply(&s, &mut sh);
        a.matvec(&sh, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / bnorm < tol {
            return Some(it);
        }
        if omega == 0.0 || !omega.is_finite() {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_nonsymmetric_system() {
        let n = 200;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0)];
                if i > 0 {
                    r.push((i - 1, -1.5));
                }
                if i + 1 < n {
                    r.push((i + 1, -0.5));
                }
                if i + 10 < n {
                    r.push((i + 10, -0.3));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&xs, &mut b);
        let pre = Ilu0::new(&a).unwrap();
        let mut x = vec![0.0; n];
        bicgstab(&a, &pre, &b, &mut x, 1e-13, 500).unwrap();
        let err = x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn ilu_of_tridiagonal_is_exact() {
        let n = 50;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let pre = Ilu0::new(&a).unwrap();
        let b = vec![1.0; n];
        let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
        pre.apply(&b, &mut x);
        a.matvec(&x, &mut y);
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}
