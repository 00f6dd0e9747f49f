//! Wide-stencil monotone finite differences for `det D²u = f` on a disk with Dirichlet data.
//!
//! The discrete operator at a node is `min over orthogonal lattice pairs (v, w)` of
//! `max(D_vv u, 0) · max(D_ww u, 0)`, where `D_vv` is the three-point second difference
//! along `v`, shortened to the circle where an arm leaves the disk.

mod sparse;

use serde::Serialize;

pub use sparse::{bicgstab, CsrMatrix, Ilu0};

use crate::error::{Error, Result};
use crate::linalg::Point;

/// Lattice directions, grid and disk of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilScheme {
    pub width: u32,
    /// Points per side of the square `[−R, R]²`.
    pub n: usize,
    pub radius: f64,
    pairs: Vec<[[i32; 2]; 2]>,
}

impl StencilScheme {
    pub fn new(width: u32, n: usize, radius: f64) -> Result<Self> {
        if !(1..=3).contains(&width) {
            return Err(Error::Config(format!("stencil width {width} must be 1, 2 or 3")));
        }
        if n < 9 || radius <= 0.0 {
            return Err(Error::Config(format!("oracle grid needs n >= 9 and radius > 0 (n = {n}, radius = {radius})")));
        }
        let w = width as i32;
        let mut pairs = Vec::new();
        for a in 1..=w {
            for b in 0..=w {
                if gcd(a, b) == 1 {
                    pairs.push([[a, b], [-b, a]]);
                }
            }
        }
        Ok(Self { width, n, radius, pairs })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.radius / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        let h = self.h();
        [-self.radius + i as f64 * h, -self.radius + j as f64 * h]
    }

    pub fn pairs(&self) -> &[[[i32; 2]; 2]] {
        &self.pairs
    }

    pub fn n_directions(&self) -> usize {
        2 * self.pairs.len()
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy)]
struct Arm {
    nb: Option<usize>,
    value: f64,
    t: f64,
}

#[derive(Debug, Clone, Copy)]
struct Direction {
    plus: Arm,
    minus: Arm,
    /// `2 / (|v|² h² (t₊ + t₋))`.
    scale: f64,
}

impl Direction {
    fn eval(&self, u: &[f64], up: f64) -> f64 {
        let side = |a: &Arm| (a.nb.map_or(a.value, |k| u[k]) - up) / a.t;
        self.scale * (side(&self.plus) + side(&self.minus))
    }

    fn d_center(&self) -> f64 {
        -self.scale * (1.0 / self.plus.t + 1.0 / self.minus.t)
    }
}

/// Discrete problem: unknown nodes with their stencils.
struct Discretization {
    nodes: Vec<(usize, usize)>,
    /// `directions[p][2k], directions[p][2k+1]` form pair `k`.
    directions: Vec<Vec<Direction>>,
    f: Vec<f64>,
}

const MARGIN: f64 = 0.25;

impl Discretization {
    fn new(scheme: &StencilScheme, f: &dyn Fn(Point) -> f64, g: &dyn Fn(Point) -> f64) -> (Self, Vec<Option<usize>>, Vec<f64>) {
        let n = scheme.n;
        let h = scheme.h();
        let r = scheme.radius;
        let mut index = vec![None; n * n];
        let mut fixed = vec![f64::NAN; n * n];
        let mut nodes = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let x = scheme.point(i, j);
                let rho = x[0].hypot(x[1]);
                if rho < r - MARGIN * h {
                    index[j * n + i] = Some(nodes.len());
                    nodes.push((i, j));
                } else if rho <= r {
                    fixed[j * n + i] = g(x);
                }
            }
        }
        let arm = |i: usize, j: usize, v: [i32; 2]| -> Arm {
            let (ii, jj) = (i as i64 + v[0] as i64, j as i64 + v[1] as i64);
            if ii >= 0 && jj >= 0 && (ii as usize) < n && (jj as usize) < n {
                let k = jj as usize * n + ii as usize;
                if let Some(q) = index[k] {
                    return Arm { nb: Some(q), value: 0.0, t: 1.0 };
                }
                if fixed[k].is_finite() {
                    return Arm { nb: None, value: fixed[k], t: 1.0 };
                }
            }
            let x = scheme.point(i, j);
            let d = [v[0] as f64 * h, v[1] as f64 * h];
            let a = d[0] * d[0] + d[1] * d[1];
            let b = 2.0 * (x[0] * d[0] + x[1] * d[1]);
            let c = x[0] * x[0] + x[1] * x[1] - r * r;
            let t = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
            let t = t.clamp(1e-3, 1.0);
            Arm { nb: None, value: g([x[0] + t * d[0], x[1] + t * d[1]]), t }
        };
        let mut directions = Vec::with_capacity(nodes.len());
        let mut fv = Vec::with_capacity(nodes.len());
        for &(i, j) in &nodes {
            let mut ds = Vec::with_capacity(scheme.n_directions());
            for pair in &scheme.pairs {
                for v in pair {
                    let plus = arm(i, j, *v);
                    let minus = arm(i, j, [-v[0], -v[1]]);
                    let len2 = ((v[0] * v[0] + v[1] * v[1]) as f64) * h * h;
                    ds.push(Direction { plus, minus, scale: 2.0 / (len2 * (plus.t + minus.t)) });
                }
            }
            directions.push(ds);
            fv.push(f(scheme.point(i, j)));
        }
        (Self { nodes, directions, f: fv }, index, fixed)
    }

    /// `(MA_h u − f, active pair)` at node `p` with `u_p` replaced by `up`.
    fn residual_at(&self, u: &[f64], p: usize, up: f64) -> (f64, usize) {
        let ds = &self.directions[p];
        let mut best = (f64::INFINITY, 0);
        for k in 0..ds.len() / 2 {
            let a = ds[2 * k].eval(u, up).max(0.0);
            let b = ds[2 * k + 1].eval(u, up).max(0.0);
            if a * b < best.0 {
                best = (a * b, k);
            }
        }
        (best.0 - self.f[p], best.1)
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len()).map(|p| self.residual_at(u, p, u[p]).0).collect()
    }

    fn jacobian(&self, u: &[f64]) -> CsrMatrix {
        let rows = (0..u.len())
            .map(|p| {
                let (_, k) = self.residual_at(u, p, u[p]);
                let ds = &self.directions[p];
                let (dv, dw) = (&ds[2 * k], &ds[2 * k + 1]);
                let a = dv.eval(u, u[p]).max(1e-8);
                let b = dw.eval(u, u[p]).max(1e-8);
                let mut row = vec![(p, b * dv.d_center() + a * dw.d_center())];
                for (d, c) in [(dv, b), (dw, a)] {
                    for arm in [&d.plus, &d.minus] {
                        if let Some(q) = arm.nb {
                            row.push((q, c * d.scale / arm.t));
                        }
                    }
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// `Δ_h u = 2√f` using the axis pair, solved directly.
    fn poisson_guess(&self) -> Result<Vec<f64>> {
        let n = self.nodes.len();
        let zero = vec![0.0; n];
        let mut rows = Vec::with_capacity(n);
        let mut rhs = Vec::with_capacity(n);
        for p in 0..n {
            let ds = &self.directions[p];
            let mut row = vec![(p, ds[0].d_center() + ds[1].d_center())];
            for d in &ds[0..2] {
                for arm in [&d.plus, &d.minus] {
                    if let Some(q) = arm.nb {
                        row.push((q, d.scale / arm.t));
                    }
                }
            }
            rows.push(row);
            let fixed = ds[0].eval(&zero, 0.0) + ds[1].eval(&zero, 0.0);
            rhs.push(2.0 * self.f[p].max(0.0).sqrt() - fixed);
        }
        let a = CsrMatrix::from_rows(rows);
        let pre = Ilu0::new(&a).ok_or_else(|| Error::Oracle("singular Poisson preconditioner".into()))?;
        let mut x = vec![0.0; n];
        bicgstab(&a, &pre, &rhs, &mut x, 1e-13, 5000).ok_or_else(|| Error::Oracle("Poisson solve did not converge".into()))?;
        Ok(x)
    }

    /// One nonlinear Gauss–Seidel sweep; each node solves its scalar equation by bisection.
    fn gauss_seidel_sweep(&self, u: &mut [f64]) {
        for p in 0..u.len() {
            let f0 = self.residual_at(u, p, u[p]).0;
            if f0 == 0.0 {
                continue;
            }
            let step = 1e-3 * (1.0 + u[p].abs());
            let dir = if f0 > 0.0 { 1.0 } else { -1.0 };
            let (mut lo, mut hi) = (u[p], u[p]);
            let mut s = step;
            for _ in 0..60 {
                let cand = u[p] + dir * s;
                if self.residual_at(u, p, cand).0 * dir <= 0.0 {
                    if dir > 0.0 {
                        hi = cand;
                    } else {
                        lo = cand;
                    }
                    break;
                }
                if dir > 0.0 {
                    lo = cand;
                } else {
                    hi = cand;
                }
                s *= 2.0;
            }
            if dir > 0.0 && hi == u[p] || dir < 0.0 && lo == u[p] {
                continue;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.residual_at(u, p, mid).0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            u[p] = 0.5 * (lo + hi);
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub max_sweeps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_newton: 60, max_sweeps: 20000 }
    }
}

#[derive(Debug, Clone)]
pub struct OracleField {
    pub scheme: StencilScheme,
    /// Row-major `n × n` values: unknowns, boundary nodes, `NaN` outside the disk.
    pub values: Vec<f64>,
    /// Unknown (equation) nodes as `(i, j)`.
    pub nodes: Vec<(usize, usize)>,
    pub residual: f64,
    pub newton_iterations: usize,
    pub used_fallback: bool,
}

impl OracleField {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.scheme.n + i]
    }
}

/// Damped Newton from the Poisson guess; nonlinear Gauss–Seidel when Newton stalls.
pub fn oracle_solve_disk(
    f: &dyn Fn(Point) -> f64,
    g: &dyn Fn(Point) -> f64,
    scheme: &StencilScheme,
    opts: &OracleOptions,
) -> Result<OracleField> {
    let (disc, index, fixed) = Discretization::new(scheme, f, g);
    if let Some(p) = disc.f.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Oracle(format!("source {} is not positive at {:?}", disc.f[p], scheme.point(disc.nodes[p].0, disc.nodes[p].1))));
    }
    let mut u = disc.poisson_guess()?;
    let mut res = disc.residual(&u);
    let mut norm = sup(&res);
    let mut iterations = 0;
    let mut stalled = false;
    while norm > opts.tol && iterations < opts.max_newton {
        iterations += 1;
        let jac = disc.jacobian(&u);
        let Some(pre) = Ilu0::new(&jac) else {
            stalled = true;
            break;
        };
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let mut du = vec![0.0; u.len()];
        if bicgstab(&jac, &pre, &rhs, &mut du, 1e-12, 5000).is_none() {
            stalled = true;
            break;
        }
        let merit = l2(&res);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + lambda * b).collect();
            let r = disc.residual(&trial);
            if l2(&r) < (1.0 - 1e-4 * lambda) * merit {
                u = trial;
                norm = sup(&r);
                res = r;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            stalled = true;
            break;
        }
    }
    let used_fallback = norm > opts.tol;
    if used_fallback || stalled {
        let mut sweeps = 0;
        while norm > opts.tol && sweeps < opts.max_sweeps {
            disc.gauss_seidel_sweep(&mut u);
            sweeps += 1;
            if sweeps % 10 == 0 {
                norm = sup(&disc.residual(&u));
            }
        }
        norm = sup(&disc.residual(&u));
        if norm > opts.tol {
            return Err(Error::Oracle(format!("no convergence: residual {norm:e} after {iterations} Newton steps and {sweeps} sweeps")));
        }
    }
    let mut values = fixed;
    for (k, slot) in index.iter().enumerate() {
        if let Some(p) = slot {
            values[k] = u[*p];
        }
    }
    Ok(OracleField {
        scheme: scheme.clone(),
        values,
        nodes: disc.nodes,
        residual: norm,
        newton_iterations: iterations,
        used_fallback,
    })
}

/// Discrete operator `MA_h` at every unknown node of `u` (row-major `n × n` values).
pub fn ma_operator(scheme: &StencilScheme, u: &[f64], g: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let f = |_: Point| 0.0;
    let (disc, index, _) = Discretization::new(scheme, &f, g);
    let mut x = vec![0.0; disc.nodes.len()];
    for (k, slot) in index.iter().enumerate() {
        if let Some(p) = slot {
            x[*p] = u[k];
        }
    }
    disc.residual(&x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub sup: f64,
    /// `(r_lo, r_hi, sup |difference|)`.
    pub rings: Vec<(f64, f64, f64)>,
}

/// Sup and ring-wise differences at the unknown nodes of the oracle field.
pub fn compare(pipeline: &dyn Fn(Point) -> f64, oracle: &OracleField, n_rings: usize) -> ComparisonReport {
    let n_rings = n_rings.max(1);
    let r = oracle.scheme.radius;
    let mut rings: Vec<(f64, f64, f64)> =
        (0..n_rings).map(|k| (r * k as f64 / n_rings as f64, r * (k + 1) as f64 / n_rings as f64, 0.0)).collect();
    let mut total: f64 = 0.0;
    for &(i, j) in &oracle.nodes {
        let x = oracle.scheme.point(i, j);
        let d = (pipeline(x) - oracle.get(i, j)).abs();
        total = total.max(d);
        let k = ((x[0].hypot(x[1]) / r * n_rings as f64) as usize).min(n_rings - 1);
        rings[k].2 = rings[k].2.max(d);
    }
    ComparisonReport { sup: total, rings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn directions() {
        assert_eq!(StencilScheme::new(1, 17, 1.0).unwrap().n_directions(), 4);
        assert_eq!(StencilScheme::new(2, 17, 1.0).unwrap().n_directions(), 8);
        assert_eq!(StencilScheme::new(3, 17, 1.0).unwrap().n_directions(), 16);
    }

    #[test]
    fn quadratics_are_exact() {
        let s = StencilScheme::new(2, 33, 2.0).unwrap();
        let one = |_: Point| 1.0;
        let g = |x: Point| 0.5 * (x[0] * x[0] + x[1] * x[1]);
        let o = oracle_solve_disk(&one, &g, &s, &OracleOptions::default()).unwrap();
        let rep = compare(&g, &o, 4);
        assert!(rep.sup < 1e-9, "{}", rep.sup);
        let four = |_: Point| 4.0;
        let g2 = |x: Point| x[0] * x[0] + x[1] * x[1];
        let o = oracle_solve_disk(&four, &g2, &s, &OracleOptions::default()).unwrap();
        assert!(compare(&g2, &o, 4).sup < 1e-9);
    }

    #[test]
    fn constant_offset_is_reported() {
        let s = StencilScheme::new(2, 33, 2.0).unwrap();
        let g = |x: Point| 0.5 * (x[0] * x[0] + x[1] * x[1]);
        let o = oracle_solve_disk(&|_| 1.0, &g, &s, &OracleOptions::default()).unwrap();
        let shifted = |x: Point| g(x) + 1e-3;
        assert!((compare(&shifted, &o, 4).sup - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn operator_is_monotone() {
        let s = StencilScheme::new(2, 25, 1.0).unwrap();
        let g = |x: Point| 0.5 * (x[0] * x[0] + x[1] * x[1]);
        let n = s.n;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..n * n)
            .map(|k| {
                let x = s.point(k % n, k / n);
                g(x) + 0.01 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        let base = ma_operator(&s, &u, &g);
        for _ in 0..100 {
            let k = rng.gen_range(0..n * n);
            let mut v = u.clone();
            v[k] += rng.gen_range(0.0..0.05);
            let (i, j) = (k % n, k / n);
            let after = ma_operator(&s, &v, &g);
            let (disc, index, _) = Discretization::new(&s, &|_| 0.0, &g);
            for (p, &(pi, pj)) in disc.nodes.iter().enumerate() {
                if index[k] == Some(p) || (pi, pj) == (i, j) {
                    continue;
                }
                assert!(after[p] >= base[p] - 1e-12);
            }
        }
    }

    #[test]
    fn refinement_reduces_error() {
        let uex = |x: Point| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            0.5 * r2 + 0.1 * r2 * r2 / 4.0
        };
        let src = |x: Point| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (1.0 + 0.1 * r2) * (1.0 + 0.3 * r2)
        };
        let mut errs = vec![];
        for n in [17, 33, 65] {
            let s = StencilScheme::new(2, n, 1.0).unwrap();
            let o = oracle_solve_disk(&src, &uex, &s, &OracleOptions::default()).unwrap();
            errs.push(compare(&uex, &o, 1).sup);
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    }
}
