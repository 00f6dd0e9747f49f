//! Command-line driver: one subcommand per pipeline, each writing a run directory.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::asymptotics::{residual_report, ResidualReport};
use crate::config::ProblemConfig;
use crate::elliptic::{green_refinement, r0_heuristic};
use crate::error::{Error, Result};
use crate::exterior::solve_exterior;
use crate::global::{ratios, solve_global, GlobalSolution, HistoryEntry};
use crate::grid::io::{read_field_binary, write_field_binary, write_field_csv};
use crate::grid::{GridKind, PolarField, PolarGrid};
use crate::oracle::{compare, oracle_solve_disk};
use crate::problem::{normalize_source, validate_source, SourceField, Violation};
use crate::radial::{build_coefficients, RadialProfile, RadialSource};

pub const THREADS_ENV: &str = "AMPERE2D_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ampere2d", version, about = "Planar Monge-Ampère solver: global and exterior problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Solve det D²u = f on the plane with prescribed asymptotics.
    SolveGlobal(CommonArgs),
    /// Solve the exterior Dirichlet problem outside a disk.
    SolveExterior(CommonArgs),
    /// Check the hypotheses on the source (and exterior data).
    Validate(CommonArgs),
    /// Probe the Green's function of the linearized operator under refinement.
    ProbeGreen(CommonArgs),
    /// Compare the pipeline against the wide-stencil solver on a disk.
    OracleCompare(CommonArgs),
    /// Asymptotic fit and residual table of a solve, or a summary of a field dump.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Binary field dump to summarize instead of solving.
        #[arg(long)]
        field: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Problem file (TOML or JSON) or `builtin:<name>`.
    #[arg(long)]
    pub config: String,
    /// Output directory; replaced only if it holds a previous run.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub nr: Option<usize>,
    #[arg(long)]
    pub ntheta: Option<usize>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveGlobal,
    SolveExterior,
    Validate,
    ProbeGreen,
    OracleCompare,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveGlobal => "solve-global",
            Command::SolveExterior => "solve-exterior",
            Command::Validate => "validate",
            Command::ProbeGreen => "probe-green",
            Command::OracleCompare => "oracle-compare",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub n_r: Option<usize>,
    pub n_theta: Option<usize>,
    pub r_max: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: String,
    pub overrides: Overrides,
    pub out: PathBuf,
    pub seed: u64,
    pub field: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, problem: impl Into<String>, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            problem: problem.into(),
            overrides: Overrides::default(),
            out: out.into(),
            seed: 0,
            field: None,
            threads: None,
        }
    }

    pub fn from_cli(cli: Cli) -> Self {
        let (command, common, field) = match cli.command {
            CliCommand::SolveGlobal(c) => (Command::SolveGlobal, c, None),
            CliCommand::SolveExterior(c) => (Command::SolveExterior, c, None),
            CliCommand::Validate(c) => (Command::Validate, c, None),
            CliCommand::ProbeGreen(c) => (Command::ProbeGreen, c, None),
            CliCommand::OracleCompare(c) => (Command::OracleCompare, c, None),
            CliCommand::Report { common, field } => (Command::Report, common, field),
        };
        let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok());
        Self {
            command,
            problem: common.config,
            overrides: Overrides { n_r: common.nr, n_theta: common.ntheta, r_max: common.rmax, tol: common.tol },
            out: common.out,
            seed: common.seed,
            field,
            threads,
        }
    }

    /// Loads the problem and applies the overrides.
    pub fn problem_config(&self) -> Result<ProblemConfig> {
        let mut cfg = ProblemConfig::load(&self.problem)?;
        let o = &self.overrides;
        if let Some(n) = o.n_r {
            cfg.grid.n_r = n;
        }
        if let Some(n) = o.n_theta {
            cfg.grid.n_theta = n;
        }
        if let Some(r) = o.r_max {
            cfg.grid.r_max = r;
        }
        if let Some(t) = o.tol {
            cfg.solver.tol = t;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::InvalidAffine(_) | Error::InvalidGrid(_) | Error::FitWindow(_) => 1,
        Error::InvalidSource { .. }
        | Error::DegenerateSource { .. }
        | Error::ValidationFailed(_)
        | Error::ExtensionInfeasible(_)
        | Error::BoundaryConsistency { .. } => 2,
        Error::CoefficientDegeneracy { .. }
        | Error::IllPosedMode { .. }
        | Error::NonPerturbativeCoefficients { .. }
        | Error::IterationBreakdown { .. }
        | Error::NonConvergence { .. }
        | Error::Oracle(_) => 3,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Final run directory; `None` when nothing was written.
    pub out_dir: Option<PathBuf>,
    pub artifacts: Vec<String>,
    pub summary: Value,
    pub message: String,
}

/// Files of one run, staged in `<out>.partial` and renamed into place.
struct Artifacts {
    staging: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn new(out: &Path) -> Result<Self> {
        let empty = out.read_dir().map(|mut d| d.next().is_none()).unwrap_or(false);
        if out.exists() && !empty && !out.join("manifest.json").is_file() {
            return Err(Error::Config(format!(
                "output directory {} exists and is not a previous run; refusing to replace it",
                out.display()
            )));
        }
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let staging = partial_path(out);
        if staging.exists() {
            std::fs::remove_dir_all(&staging)?;
        }
        std::fs::create_dir(&staging)?;
        Ok(Self { staging, names: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.staging.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(p, body)?;
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.text(name, &s)
    }

    fn field(&mut self, name: &str, f: &PolarField) -> Result<()> {
        let p = self.path(name);
        write_field_binary(f, &p)
    }

    fn commit(self, out: &Path) -> Result<()> {
        if out.exists() {
            std::fs::remove_dir_all(out)?;
        }
        std::fs::rename(&self.staging, out)?;
        Ok(())
    }
}

fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

pub fn config_hash(cfg: &ProblemConfig, command: Command, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(command.name().as_bytes());
    h.update(b"\n");
    h.update(cfg.canonical_json().as_bytes());
    h.update(b"\n");
    h.update(seed.to_le_bytes());
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = run(&RunConfig::from_cli(cli));
    if out.exit_code == 0 {
        println!("{}", out.message);
    } else {
        eprintln!("{}", out.message);
    }
    if let Some(d) = &out.out_dir {
        println!("artifacts in {}", d.display());
    }
    out.exit_code
}

struct Body {
    exit_code: i32,
    summary: Value,
    message: String,
}

pub fn run(rc: &RunConfig) -> RunOutcome {
    let fail = |e: Error| RunOutcome {
        exit_code: exit_code(&e),
        out_dir: None,
        artifacts: Vec::new(),
        summary: json!({ "error": e.to_string() }),
        message: format!("error: {e}"),
    };
    let cfg = match rc.problem_config() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(p) = &rc.field {
        if !p.is_file() {
            return fail(Error::Config(format!("field dump {} not found", p.display())));
        }
    }
    let mut art = match Artifacts::new(&rc.out) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let body = match execute(rc, &cfg, &mut art) {
        Ok(b) => b,
        Err(e) => {
            let summary = error_summary(rc.command, &e);
            if let Err(w) = art.json("summary.json", &summary) {
                return fail(w);
            }
            if let Error::NonConvergence { history, .. } = &e {
                if let Err(w) = art.text("history.csv", &history_csv(history)) {
                    return fail(w);
                }
            }
            Body { exit_code: exit_code(&e), summary, message: format!("error: {e}") }
        }
    };
    let manifest = json!({
        "command": rc.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": rc.problem,
        "config_hash": config_hash(&cfg, rc.command, rc.seed),
        "overrides": rc.overrides,
        "seed": rc.seed,
        "threads": rc.threads,
        "timestamp": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "exit_code": body.exit_code,
        "artifacts": art.names.clone(),
    });
    if let Err(e) = art.json("manifest.json", &manifest) {
        return fail(e);
    }
    let names = art.names.clone();
    if let Err(e) = art.commit(&rc.out) {
        return fail(e);
    }
    RunOutcome {
        exit_code: body.exit_code,
        out_dir: Some(rc.out.clone()),
        artifacts: names,
        summary: body.summary,
        message: body.message,
    }
}

fn error_summary(command: Command, e: &Error) -> Value {
    let mut v = json!({ "command": command.name(), "status": "error", "error": e.to_string() });
    if let Error::NonConvergence { levels, last, .. } = e {
        v["levels"] = json!(levels);
        v["last_weighted_sup"] = json!(last);
        v["converged"] = json!(false);
    }
    v
}

fn execute(rc: &RunConfig, cfg: &ProblemConfig, art: &mut Artifacts) -> Result<Body> {
    match rc.command {
        Command::SolveGlobal => cmd_solve_global(cfg, art),
        Command::SolveExterior => cmd_solve_exterior(cfg, art),
        Command::Validate => cmd_validate(cfg, rc.seed, art),
        Command::ProbeGreen => cmd_probe_green(cfg, art),
        Command::OracleCompare => cmd_oracle_compare(cfg, art),
        Command::Report => match &rc.field {
            Some(p) => cmd_report_field(cfg, p, art),
            None => cmd_report(cfg, art),
        },
    }
}

fn history_csv(h: &[HistoryEntry]) -> String {
    let mut s = String::from("l,sup_psi,weighted_sup,residual\n");
    for e in h {
        let _ = writeln!(s, "{},{:.17e},{:.17e},{:.17e}", e.l, e.sup_psi, e.weighted_sup, e.residual);
    }
    s
}

fn residual_csv(r: &ResidualReport) -> String {
    let mut s = String::from("r,sup_residual\n");
    for (r, v) in &r.rows {
        let _ = writeln!(s, "{r:.17e},{v:.17e}");
    }
    s
}

fn pairs_csv(header: &str, rows: &[(f64, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (a, b) in rows {
        let _ = writeln!(s, "{a:.17e},{b:.17e}");
    }
    s
}

fn write_profile(art: &mut Artifacts, p: &RadialProfile) -> Result<()> {
    let mut s = String::from("r,ftilde,U,Uprime,Usecond,F1,F2\n");
    for j in 0..p.r.len() {
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            p.r[j], p.ftilde[j], p.u[j], p.uprime[j], p.usecond[j], p.f1[j], p.f2[j]
        );
    }
    art.text("profile.csv", &s)?;
    art.json("profile.json", &json!({ "d": p.d, "c_d": p.c_d, "tail_error": p.tail_error }))
}

fn solve_validated(cfg: &ProblemConfig) -> Result<(SourceField, GlobalSolution)> {
    let f = cfg.source()?;
    let rep = validate_source(&f, &cfg.affine, &cfg.validation.plan())?;
    if !rep.passed {
        return Err(Error::ValidationFailed(describe(&rep.violations)));
    }
    let sol = solve_global(&f, &cfg.affine, &cfg.grid_spec(), &cfg.global_options())?;
    Ok((f, sol))
}

fn describe(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{} (value {} vs bound {} at ({}, {}))", v.check, v.value, v.bound, v.point[0], v.point[1]))
        .collect::<Vec<_>>()
        .join("; ")
}

fn global_summary(cfg: &ProblemConfig, f: &SourceField, sol: &GlobalSolution, res: &ResidualReport) -> Value {
    json!({
        "command": "solve-global",
        "source": f.label,
        "grid": cfg.grid,
        "d": sol.d(),
        "d_fit": sol.fit.d_fit,
        "c_fit": sol.fit.c_fit,
        "c_shift": sol.shift,
        "c_d": sol.profile.c_d,
        "sigma_fit": sol.fit.sigma_fit,
        "window": sol.fit.window,
        "levels": sol.levels,
        "converged": sol.converged,
        "tau": sol.tau,
        "contraction_ratios": sol.contraction_ratios(),
        "residual": sol.residual,
        "max_residual": res.max_residual,
        "residual_tol": res.tolerance,
        "compliant": res.compliant,
    })
}

fn compliance(res: &ResidualReport, what: &str) -> (i32, String) {
    if res.compliant {
        (0, format!("{what}: max residual {:.3e} within {:.1e}", res.max_residual, res.tolerance))
    } else {
        (2, format!("{what}: max residual {:.3e} exceeds {:.1e}", res.max_residual, res.tolerance))
    }
}

fn cmd_solve_global(cfg: &ProblemConfig, art: &mut Artifacts) -> Result<Body> {
    let (f, sol) = solve_validated(cfg)?;
    let res = residual_report(&sol.v, &sol.f1, cfg.solver.residual_tol);
    let summary = global_summary(cfg, &f, &sol, &res);
    art.json("summary.json", &summary)?;
    art.text("history.csv", &history_csv(&sol.history))?;
    art.text("residual.csv", &residual_csv(&res))?;
    write_profile(art, &sol.profile)?;
    art.field("solution.bin", &sol.v)?;
    art.field("phi.bin", &sol.phi)?;
    let (code, msg) = compliance(&res, "solve-global");
    Ok(Body { exit_code: code, summary, message: format!("{msg}; d_fit = {:.8}, c_fit = {:.8}", sol.fit.d_fit, sol.fit.c_fit) })
}

fn cmd_solve_exterior(cfg: &ProblemConfig, art: &mut Artifacts) -> Result<Body> {
    let (spec, opts) = cfg
        .exterior_spec()?
        .ok_or_else(|| Error::Config("solve-exterior needs an [exterior] section".into()))?;
    let f = cfg.source()?;
    let sol = solve_exterior(&spec, &f, &cfg.grid_spec(), &opts)?;
    let res = residual_report(&sol.u, &f, cfg.solver.residual_tol);
    let summary = json!({
        "command": "solve-exterior",
        "source": f.label,
        "grid": cfg.grid,
        "r0": spec.r0,
        "boundary": spec.boundary.label,
        "d_target": spec.d_target,
        "d_fit": sol.fit.d_fit,
        "c_fit": sol.fit.c_fit,
        "c_d": sol.c_d(),
        "sigma_fit": sol.fit.sigma_fit,
        "window": sol.fit.window,
        "boundary_error": sol.boundary_error(),
        "boundary_offset": { "shift": sol.offset.shift, "sup": sol.offset.sup, "holder": sol.offset.holder },
        "extension": sol.extension,
        "kelvin_deviation": sol.kelvin_deviation,
        "kelvin_iterations": sol.kelvin_iterations,
        "levels": sol.state.k,
        "cascade_history": sol.history(),
        "contraction_ratios": ratios(sol.history()),
        "residual": sol.residual,
        "max_residual": res.max_residual,
        "residual_tol": res.tolerance,
        "compliant": res.compliant,
    });
    art.json("summary.json", &summary)?;
    art.text("cascade.csv", &history_csv(sol.history()))?;
    art.text("global_history.csv", &history_csv(&sol.global.history))?;
    art.text("residual.csv", &residual_csv(&res))?;
    write_profile(art, &sol.global.profile)?;
    art.field("solution.bin", &sol.u)?;
    art.field("psi0_kelvin.bin", &sol.psi0_kelvin)?;
    let (code, msg) = compliance(&res, "solve-exterior");
    Ok(Body {
        exit_code: code,
        summary,
        message: format!("{msg}; d_fit = {:.8}, boundary error {:.3e}", sol.fit.d_fit, sol.boundary_error()),
    })
}

/// Bound checks at seeded random points, log-uniform in radius.
fn random_checks(f: &SourceField, cfg: &ProblemConfig, seed: u64) -> Result<Vec<Violation>> {
    let v = &cfg.validation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (v.r_min.ln(), v.r_max.ln());
    let mut out: Vec<Violation> = Vec::new();
    for _ in 0..v.random_samples {
        let r = rng.gen_range(lo..hi).exp();
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = [r * t.cos(), r * t.sin()];
        let val = f.checked_eval(x)?;
        if val < 1.0 / f.c0 || val > f.c0 {
            out.push(Violation { check: "random sample 1/c0 <= f <= c0".into(), point: x, value: val, bound: f.c0 });
        }
        let bound = f.c0 / (1.0 + r).powf(f.beta);
        if f.beta.is_finite() && f.deviation(x).abs() > bound * (1.0 + 1e-12) {
            out.push(Violation {
                check: "random sample |f - 1| <= c0 (1+|x|)^-beta".into(),
                point: x,
                value: f.deviation(x).abs(),
                bound,
            });
        }
    }
    out.truncate(16);
    Ok(out)
}

fn cmd_validate(cfg: &ProblemConfig, seed: u64, art: &mut Artifacts) -> Result<Body> {
    let f = cfg.source()?;
    let rep = validate_source(&f, &cfg.affine, &cfg.validation.plan())?;
    let mut violations = rep.violations.clone();
    violations.extend(random_checks(&f, cfg, seed)?);
    let mut exterior = Value::Null;
    if let Some((spec, _)) = cfg.exterior_spec()? {
        let bound = spec.admissibility_bound(&f);
        let holder = spec.boundary_holder(256);
        if !(spec.d_target > bound) {
            violations.push(Violation { check: "exterior admissibility d_target > bound".into(), point: [0.0, 0.0], value: spec.d_target, bound });
        }
        if holder > cfg.validation.eps0_threshold {
            violations.push(Violation {
                check: "boundary Holder seminorm <= eps0".into(),
                point: [spec.r0, 0.0],
                value: holder,
                bound: cfg.validation.eps0_threshold,
            });
        }
        exterior = json!({ "admissibility_bound": bound, "d_target": spec.d_target, "boundary_holder": holder });
    }
    let passed = violations.is_empty();
    let summary = json!({
        "command": "validate",
        "source": f.label,
        "c0_fit": rep.c0_fit,
        "beta_fit": rep.beta_fit,
        "beta1": rep.beta1,
        "eps0_fit": rep.eps0_fit,
        "eps1_fit": rep.eps1_fit,
        "random_samples": cfg.validation.random_samples,
        "exterior": exterior,
        "passed": passed,
        "violations": violations,
    });
    art.json("summary.json", &summary)?;
    let (code, message) = if passed {
        (0, format!("validate: {} satisfies the hypotheses", f.label))
    } else {
        (2, format!("validate: {} fails: {}", f.label, describe(&violations)))
    };
    Ok(Body { exit_code: code, summary, message })
}

fn cmd_probe_green(cfg: &ProblemConfig, art: &mut Artifacts) -> Result<Body> {
    let f = cfg.source()?;
    let f1 = normalize_source(&f, &cfg.affine);
    let src = RadialSource::from_source(&f1, 128);
    let g = &cfg.green;
    if g.levels.is_empty() {
        return Err(Error::Config("green.levels must not be empty".into()));
    }
    let build = |grid: &Arc<PolarGrid>| build_coefficients(&src.profile(grid.radii())?, grid);
    let first = PolarGrid::global(g.levels[0].0, g.levels[0].1, cfg.grid.r_max)?;
    let r0 = r0_heuristic(&build(&first)?, 0.1);
    let rep = green_refinement(build, g.x, cfg.grid.r_max, &g.levels)?;
    let change = rep.max_relative_change();
    let finite = rep.refinement_table.iter().all(|r| r.c2_fit.is_finite() && r.grad_bound_fit.is_finite());
    let stable = finite && change <= g.stability;
    let rx = g.x[0].hypot(g.x[1]);
    let summary = json!({
        "command": "probe-green",
        "x": rep.x,
        "c2_fit": rep.c2_fit,
        "grad_bound_fit": rep.grad_bound_fit,
        "refinement_table": rep.refinement_table,
        "max_relative_change": change,
        "r0_heuristic": r0,
        "precondition_met": rx > 2.0 * r0,
        "stable": stable,
    });
    art.json("green.json", &summary)?;
    let msg = format!("probe-green: c2_fit = {:.4}, grad_bound_fit = {:.4}, max change {:.2}%", rep.c2_fit, rep.grad_bound_fit, 100.0 * change);
    Ok(Body { exit_code: if stable { 0 } else { 2 }, summary, message: msg })
}

fn cmd_oracle_compare(cfg: &ProblemConfig, art: &mut Artifacts) -> Result<Body> {
    let (f, sol) = solve_validated(cfg)?;
    let oc = &cfg.oracle;
    let scheme = oc.scheme()?;
    let u = |x: [f64; 2]| sol.u_eval(x);
    let field = oracle_solve_disk(&|x| f.eval(x), &u, &scheme, &oc.options())?;
    let cmp = compare(&u, &field, oc.n_rings);
    let pass = cmp.sup <= oc.tol;
    let summary = json!({
        "command": "oracle-compare",
        "source": f.label,
        "radius": oc.radius,
        "n": oc.n,
        "width": oc.width,
        "directions": scheme.n_directions(),
        "oracle_residual": field.residual,
        "newton_iterations": field.newton_iterations,
        "used_fallback": field.used_fallback,
        "sup": cmp.sup,
        "tol": oc.tol,
        "passed": pass,
        "global_residual": sol.residual,
    });
    art.json("summary.json", &summary)?;
    let mut rings = String::from("r_lo,r_hi,sup\n");
    for (a, b, c) in &cmp.rings {
        let _ = writeln!(rings, "{a:.17e},{b:.17e},{c:.17e}");
    }
    art.text("rings.csv", &rings)?;
    let msg = format!("oracle-compare: sup difference {:.3e} (bound {:.1e})", cmp.sup, oc.tol);
    Ok(Body { exit_code: if pass { 0 } else { 2 }, summary, message: msg })
}

fn cmd_report(cfg: &ProblemConfig, art: &mut Artifacts) -> Result<Body> {
    let (fit, res) = if let Some((spec, opts)) = cfg.exterior_spec()? {
        let f = cfg.source()?;
        let sol = solve_exterior(&spec, &f, &cfg.grid_spec(), &opts)?;
        (sol.fit.clone(), residual_report(&sol.u, &f, cfg.solver.residual_tol))
    } else {
        let (_, sol) = solve_validated(cfg)?;
        (sol.fit.clone(), residual_report(&sol.v, &sol.f1, cfg.solver.residual_tol))
    };
    let summary = json!({
        "command": "report",
        "d_fit": fit.d_fit,
        "c_fit": fit.c_fit,
        "sigma_fit": fit.sigma_fit,
        "window": fit.window,
        "max_residual": res.max_residual,
        "residual_tol": res.tolerance,
        "compliant": res.compliant,
    });
    art.json("summary.json", &summary)?;
    art.text("residual.csv", &residual_csv(&res))?;
    art.text("fit_residual.csv", &pairs_csv("rho,sup_residual", &fit.residual_table))?;
    let (code, msg) = compliance(&res, "report");
    Ok(Body { exit_code: code, summary, message: msg })
}

fn cmd_report_field(cfg: &ProblemConfig, path: &Path, art: &mut Artifacts) -> Result<Body> {
    let dump = read_field_binary(path)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &dump.values {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let g = &cfg.grid;
    let grid = if dump.n_r != g.n_r || dump.n_theta != g.n_theta {
        None
    } else {
        match dump.kind {
            GridKind::Global => Some(PolarGrid::global(g.n_r, g.n_theta, g.r_max)?),
            GridKind::Exterior => match &cfg.exterior {
                Some(e) => Some(PolarGrid::exterior(e.r0, g.n_r, g.n_theta, g.r_max)?),
                None => None,
            },
            GridKind::Kelvin => None,
        }
    };
    let mut summary = json!({
        "command": "report",
        "field": path.display().to_string(),
        "kind": format!("{:?}", dump.kind).to_lowercase(),
        "n_r": dump.n_r,
        "n_theta": dump.n_theta,
        "min": lo,
        "max": hi,
        "grid_matched": grid.is_some(),
    });
    let mut code = 0;
    let mut msg = format!("report: {} values in [{lo:.6e}, {hi:.6e}]", dump.values.len());
    if let Some(grid) = grid {
        let field = PolarField::from_values(&grid, dump.values)?;
        let f = cfg.source()?;
        let f = if dump.kind == GridKind::Global { normalize_source(&f, &cfg.affine) } else { f };
        let res = residual_report(&field, &f, cfg.solver.residual_tol);
        summary["max_residual"] = json!(res.max_residual);
        summary["residual_tol"] = json!(res.tolerance);
        summary["compliant"] = json!(res.compliant);
        art.text("residual.csv", &residual_csv(&res))?;
        let p = art.path("field.csv");
        write_field_csv(&field, &p)?;
        let (c, m) = compliance(&res, "report");
        code = c;
        msg = format!("{msg}; {m}");
    }
    art.json("summary.json", &summary)?;
    Ok(Body { exit_code: code, summary, message: msg })
}
