use ampere2d::config::ProblemConfig;
use ampere2d::global::{solve_global, GlobalOptions, GridSpec};
use ampere2d::linalg::Sym2;
use ampere2d::problem::{AffineData, SourceField};
use ampere2d::Error;

fn grid() -> GridSpec {
    GridSpec { n_r: 128, n_theta: 32, r_max: 64.0 }
}

#[test]
fn gaussian_mass() {
    let s = solve_global(&SourceField::gaussian(0.1), &AffineData::identity(), &grid(), &GlobalOptions::default()).unwrap();
    assert!((s.fit.d_fit - 0.05).abs() < 1e-4, "{}", s.fit.d_fit);
    assert!((s.d() - 0.05).abs() < 1e-10);
}

#[test]
fn dipole_has_no_log_term() {
    let s = solve_global(&SourceField::dipole(0.1), &AffineData::identity(), &grid(), &GlobalOptions::default()).unwrap();
    assert!(s.converged);
    assert!(s.fit.d_fit.abs() < 1e-5, "{}", s.fit.d_fit);
    assert!(s.levels >= 2);
    assert!(s.residual < 1e-5);
}

#[test]
fn anisotropic_data_are_reproduced() {
    let cfg = ProblemConfig::builtin("anisotropic").unwrap();
    let f = cfg.source().unwrap();
    let aff = AffineData::new(Sym2::diag(2.0, 0.5), [1.0, -1.0], 0.25).unwrap();
    let s = solve_global(&f, &aff, &grid(), &GlobalOptions::default()).unwrap();
    assert!(s.residual < 5e-6, "{}", s.residual);
    assert!((s.fit.d_fit - s.d()).abs() < 1e-4);
    assert!((s.fit.c_fit - 0.25).abs() < 1e-8);
    let h = 1e-2;
    let x = [3.0, -2.0];
    let u = |dx: f64, dy: f64| s.u_eval([x[0] + dx, x[1] + dy]);
    let d11 = (u(h, 0.0) - 2.0 * u(0.0, 0.0) + u(-h, 0.0)) / (h * h);
    let d22 = (u(0.0, h) - 2.0 * u(0.0, 0.0) + u(0.0, -h)) / (h * h);
    let d12 = (u(h, h) - u(h, -h) - u(-h, h) + u(-h, -h)) / (4.0 * h * h);
    let det = d11 * d22 - d12 * d12;
    assert!((det - f.eval(x)).abs() < 1e-3, "{det} vs {}", f.eval(x));
}

#[test]
fn level_cap_reports_history() {
    let f = SourceField::angular(0.1, 4.0, 0.5, 2);
    let opts = GlobalOptions { l_max: 1, ..GlobalOptions::default() };
    match solve_global(&f, &AffineData::identity(), &grid(), &opts) {
        Err(Error::NonConvergence { history, levels, .. }) => {
            assert_eq!(levels, 1);
            assert!(!history.is_empty());
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn looser_tolerance_stops_earlier() {
    let f = SourceField::angular(0.1, 4.0, 0.5, 2);
    let tight = solve_global(&f, &AffineData::identity(), &grid(), &GlobalOptions::default()).unwrap();
    let loose = solve_global(&f, &AffineData::identity(), &grid(), &GlobalOptions { tol: 1e-6, ..GlobalOptions::default() }).unwrap();
    assert!(loose.levels < tight.levels);
    assert!(tight.phi.sub(&loose.phi).sup_abs() < 1e-5);
}
