//! Problem files (TOML or JSON) and the builtin problems.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{BumpProfile, ExteriorOptions};
use crate::global::{GlobalOptions, GridSpec};
use crate::oracle::{OracleOptions, StencilScheme};
use crate::problem::{tabulated_source, AffineData, BoundaryData, ExteriorSpec, SamplingPlan, SourceField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Constant { value: f64 },
    Rational { eps: f64, beta: f64 },
    Gaussian { eps: f64 },
    Anisotropic { eps: f64, beta: f64, stretch: f64 },
    Angular { eps: f64, beta: f64, kappa: f64, m: u32 },
    Dipole { eps: f64 },
    /// CSV with columns `x1,x2,f` on a uniform lattice.
    Tabulated { path: PathBuf, c0: f64, beta: f64 },
}

impl SourceConfig {
    pub fn build(&self, base: &Path) -> Result<SourceField> {
        Ok(match self {
            SourceConfig::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(Error::Config(format!("source.value = {value} must be positive")));
                }
                SourceField::constant(*value)
            }
            SourceConfig::Rational { eps, beta } => SourceField::rational(*eps, *beta),
            SourceConfig::Gaussian { eps } => SourceField::gaussian(*eps),
            SourceConfig::Anisotropic { eps, beta, stretch } => {
                if !(*stretch > 0.0) {
                    return Err(Error::Config(format!("source.stretch = {stretch} must be positive")));
                }
                SourceField::anisotropic(*eps, *beta, *stretch)
            }
            SourceConfig::Angular { eps, beta, kappa, m } => SourceField::angular(*eps, *beta, *kappa, *m),
            SourceConfig::Dipole { eps } => SourceField::dipole(*eps),
            SourceConfig::Tabulated { path, c0, beta } => tabulated_source(&resolve(base, path), *c0, *beta)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self { n_r: g.n_r, n_theta: g.n_theta, r_max: g.r_max }
    }
}

impl From<GridConfig> for GridSpec {
    fn from(g: GridConfig) -> Self {
        GridSpec { n_r: g.n_r, n_theta: g.n_theta, r_max: g.r_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub l_max: usize,
    pub tau: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    /// Compliance bound on `sup |det D²u − f|`.
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GlobalOptions::default();
        Self { tol: g.tol, l_max: g.l_max, tau: None, fit_window: None, residual_tol: 5e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant { value: f64 },
    /// `mean + Σ cos[k−1] cos kθ + sin[k−1] sin kθ`.
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// CSV `theta,value` at uniform angles `2πk/n`.
    Csv { path: PathBuf },
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig::Constant { value: 0.0 }
    }
}

impl BoundaryConfig {
    pub fn build(&self, base: &Path) -> Result<BoundaryData> {
        match self {
            BoundaryConfig::Constant { value } => Ok(BoundaryData::constant(*value)),
            BoundaryConfig::Fourier { mean, cos, sin } => {
                let (m, c, s) = (*mean, cos.clone(), sin.clone());
                let label = format!("fourier(mean={m}, cos={c:?}, sin={s:?})");
                Ok(BoundaryData::new(
                    move |t| {
                        let a: f64 = c.iter().enumerate().map(|(k, v)| v * ((k + 1) as f64 * t).cos()).sum();
                        let b: f64 = s.iter().enumerate().map(|(k, v)| v * ((k + 1) as f64 * t).sin()).sum();
                        m + a + b
                    },
                    label,
                ))
            }
            BoundaryConfig::Csv { path } => read_boundary_csv(&resolve(base, path)),
        }
    }
}

fn read_boundary_csv(path: &Path) -> Result<BoundaryData> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.chars().any(|c| c.is_ascii_alphabetic())) {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if v.len() != 2 {
            return Err(Error::Config(format!("{}:{}: expected columns theta,value", path.display(), n + 1)));
        }
        rows.push((v[0], v[1]));
    }
    let n = rows.len();
    for (k, (t, _)) in rows.iter().enumerate() {
        let expected = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        if (t - expected).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{}: theta[{k}] = {t} is not on the uniform grid 2*pi*k/{n}",
                path.display()
            )));
        }
    }
    let mut b = BoundaryData::from_samples(rows.into_iter().map(|r| r.1).collect())?;
    b.label = format!("csv({})", path.display());
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExteriorConfig {
    pub r0: f64,
    pub d_target: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub profile: BumpProfile,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_k_max() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    pub x: [f64; 2],
    /// `(n_r, n_theta)` per refinement level.
    pub levels: Vec<(usize, usize)>,
    /// Bound on the relative change between consecutive levels.
    pub stability: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { x: [4.0, 0.0], levels: vec![(128, 32), (256, 64)], stability: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub radius: f64,
    pub n: usize,
    pub width: u32,
    /// Solver tolerance on the discrete residual.
    pub solver_tol: f64,
    /// Acceptance bound on the sup difference.
    pub tol: f64,
    pub n_rings: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let o = OracleOptions::default();
        Self { radius: 4.0, n: 129, width: 2, solver_tol: o.tol, tol: 5e-3, n_rings: 8 }
    }
}

impl OracleConfig {
    pub fn scheme(&self) -> Result<StencilScheme> {
        StencilScheme::new(self.width, self.n, self.radius)
    }

    pub fn options(&self) -> OracleOptions {
        OracleOptions { tol: self.solver_tol, ..OracleOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_angles: usize,
    pub eps0_threshold: f64,
    pub slope_window: (f64, f64),
    /// Extra randomly placed samples drawn from the run seed.
    pub random_samples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        let p = SamplingPlan::default();
        Self {
            r_min: p.r_min,
            r_max: p.r_max,
            n_angles: p.n_angles,
            eps0_threshold: p.eps0_threshold,
            slope_window: p.slope_window,
            random_samples: 256,
        }
    }
}

impl ValidationConfig {
    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan {
            r_min: self.r_min,
            r_max: self.r_max,
            n_angles: self.n_angles,
            eps0_threshold: self.eps0_threshold,
            slope_window: self.slope_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub source: SourceConfig,
    #[serde(default)]
    pub affine: AffineData,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub exterior: Option<ExteriorConfig>,
    #[serde(default)]
    pub green: GreenConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    /// Directory against which relative paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub const BUILTINS: &[&str] = &[
    "jorgens",
    "rational",
    "angular",
    "anisotropic",
    "gaussian",
    "dipole",
    "exterior-radial",
    "exterior-perturbed",
    "inadmissible",
];

impl ProblemConfig {
    pub fn new(source: SourceConfig) -> Self {
        Self {
            source,
            affine: AffineData::identity(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            exterior: None,
            green: GreenConfig::default(),
            oracle: OracleConfig::default(),
            validation: ValidationConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let exterior = |boundary| ExteriorConfig {
            r0: 1.0,
            d_target: 0.5,
            alpha: 0.5,
            boundary,
            profile: BumpProfile::Cubic,
            k_max: 40,
        };
        Ok(match name {
            "jorgens" => Self::new(SourceConfig::Constant { value: 1.0 }),
            "rational" => Self::new(SourceConfig::Rational { eps: 0.1, beta: 4.0 }),
            "angular" => Self::new(SourceConfig::Angular { eps: 0.1, beta: 4.0, kappa: 0.5, m: 2 }),
            "gaussian" => Self::new(SourceConfig::Gaussian { eps: 0.1 }),
            "dipole" => Self::new(SourceConfig::Dipole { eps: 0.1 }),
            "anisotropic" => {
                let mut c = Self::new(SourceConfig::Anisotropic { eps: 0.1, beta: 4.0, stretch: 2.0 });
                c.affine = AffineData::new(crate::linalg::Sym2::diag(2.0, 0.5), [1.0, -1.0], 0.0)?;
                c
            }
            "exterior-radial" => {
                let mut c = Self::new(SourceConfig::Constant { value: 1.0 });
                c.exterior = Some(exterior(BoundaryConfig::Constant { value: 0.0 }));
                c
            }
            "exterior-perturbed" => {
                let mut c = Self::new(SourceConfig::Angular { eps: 0.1, beta: 4.0, kappa: 0.5, m: 2 });
                c.exterior = Some(exterior(BoundaryConfig::Fourier { mean: 0.0, cos: vec![0.01], sin: vec![] }));
                c
            }
            "inadmissible" => Self::new(SourceConfig::Rational { eps: 0.1, beta: 1.5 }),
            _ => {
                return Err(Error::Config(format!("unknown builtin '{name}'; available: {}", BUILTINS.join(", "))));
            }
        })
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| {
                Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
            })?
        } else {
            toml::from_str(text).map_err(|e| {
                let loc = e
                    .span()
                    .map(|s| {
                        let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                        format!(":{line}")
                    })
                    .unwrap_or_default();
                Error::Config(format!("{origin}{loc}: {}", e.message()))
            })?
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// `builtin:<name>` or a path to a TOML/JSON file.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return Self::builtin(name);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, spec)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let g = &self.grid;
        if g.n_r < 8 || g.n_theta < 4 || !(g.r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("grid n_r = {}, n_theta = {}, r_max = {}", g.n_r, g.n_theta, g.r_max)));
        }
        if !(self.solver.tol > 0.0) || self.solver.l_max == 0 {
            return Err(Error::Config("solver.tol must be positive and solver.l_max at least 1".into()));
        }
        if let Some(e) = &self.exterior {
            if !(e.r0 > 0.0 && e.r0 < g.r_max) {
                return Err(Error::Config(format!("exterior.r0 = {} must lie in (0, r_max)", e.r0)));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> Result<SourceField> {
        self.source.build(&self.base_dir)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.into()
    }

    pub fn global_options(&self) -> GlobalOptions {
        GlobalOptions {
            tol: self.solver.tol,
            l_max: self.solver.l_max,
            tau: self.solver.tau,
            fit_window: self.solver.fit_window,
            ..GlobalOptions::default()
        }
    }

    pub fn exterior_spec(&self) -> Result<Option<(ExteriorSpec, ExteriorOptions)>> {
        let Some(e) = &self.exterior else { return Ok(None) };
        let spec = ExteriorSpec::new(e.r0, e.boundary.build(&self.base_dir)?, e.alpha, e.d_target)?;
        let opts = ExteriorOptions {
            global: self.global_options(),
            tol: self.solver.tol,
            k_max: e.k_max,
            profile: e.profile,
            fit_window: self.solver.fit_window,
            ..ExteriorOptions::default()
        };
        Ok(Some((spec, opts)))
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
