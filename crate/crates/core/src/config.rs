//! Case configuration: TOML files and command-line overrides merged into a
//! validated [`CaseConfig`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cases::{cavity, chamber, ChamberCase, ChamberSpec};
use crate::flow::{stability_check, TimeStepParams, DEFAULT_SIGMA};
use crate::grid::{BoundarySpec, GridError, Mask, StaggeredGrid};
use crate::solvers::{Method, MultigridConfig, Norm, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<&'static str>),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("dt/(Re h^2) = {ratio} exceeds the stability limit {limit}; reduce `dt` or pass --force")]
    Unstable { ratio: f64, limit: f64 },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("mask: {0}")]
    Mask(#[from] GridError),
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Cavity,
    Chamber,
    PoissonMms,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Cavity => "cavity",
            CaseKind::Chamber => "chamber",
            CaseKind::PoissonMms => "poisson-mms",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "cavity" => Ok(CaseKind::Cavity),
            "chamber" => Ok(CaseKind::Chamber),
            "poisson-mms" | "mms" => Ok(CaseKind::PoissonMms),
            other => Err(format!("unknown case {other:?}; valid names: cavity, chamber, poisson-mms")),
        }
    }
}

/// Fully resolved case description.
///
/// `nx` and `ny` count interior cells, except for `poisson-mms` where they
/// count grid lines per side (cells + 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseKind,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub re: f64,
    /// Lid speed of the cavity.
    pub vw: f64,
    /// Inflow speed of the chamber.
    pub inlet_speed: f64,
    /// Explicit time step; otherwise `sigma Re h^2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub sigma: f64,
    pub cycles: usize,
    /// Snapshot interval in steps; 0 disables snapshots.
    pub anim_freq: usize,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitor: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    /// Accept time steps beyond the stability limit.
    pub force: bool,
    pub paper_code_compat: bool,
    /// Stop a run once `max |du/dt|` falls below this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_tol: Option<f64>,
    pub solver: SolverConfig,
}

/// Solver settings with every field optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialSolver {
    pub method: Option<Method>,
    pub omega: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub norm: Option<Norm>,
    pub multigrid: PartialMultigrid,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialMultigrid {
    pub levels: Option<usize>,
    pub pre_smooth: Option<usize>,
    pub post_smooth: Option<usize>,
    pub coarse_sweeps: Option<usize>,
}

/// Configuration with every key optional, as read from a file or flags.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub case: Option<CaseKind>,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub re: Option<f64>,
    pub vw: Option<f64>,
    pub inlet_speed: Option<f64>,
    pub dt: Option<f64>,
    pub sigma: Option<f64>,
    pub cycles: Option<usize>,
    pub anim_freq: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub monitor: Option<(usize, usize)>,
    pub mask: Option<PathBuf>,
    pub force: Option<bool>,
    pub paper_code_compat: Option<bool>,
    pub steady_tol: Option<f64>,
    pub solver: PartialSolver,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl PartialConfig {
    /// Keys set in `top` replace those in `self`.
    pub fn merge(mut self, top: PartialConfig) -> PartialConfig {
        overlay!(self, top; case, lx, ly, nx, ny, re, vw, inlet_speed, dt, sigma, cycles, anim_freq,
                 out_dir, monitor, mask, force, paper_code_compat, steady_tol);
        overlay!(self.solver, top.solver; method, omega, tol, max_iter, norm);
        overlay!(self.solver.multigrid, top.solver.multigrid; levels, pre_smooth, post_smooth, coarse_sweeps);
        self
    }

    /// Fills case-dependent defaults and validates.
    pub fn finalize(self) -> Result<CaseConfig, ConfigError> {
        let Some(case) = self.case else {
            return Err(ConfigError::Missing(vec!["case", "nx", "ny"]));
        };
        let (lx, ly, nx, ny) = match case {
            CaseKind::Cavity => {
                let missing: Vec<_> = [("nx", self.nx), ("ny", self.ny)]
                    .into_iter()
                    .filter(|(_, v)| v.is_none())
                    .map(|(k, _)| k)
                    .collect();
                if !missing.is_empty() {
                    return Err(ConfigError::Missing(missing));
                }
                (self.lx.unwrap_or(1.0), self.ly.unwrap_or(1.0), self.nx.unwrap(), self.ny.unwrap())
            }
            CaseKind::Chamber => {
                let d = ChamberSpec::default();
                let lx = self.lx.unwrap_or(d.lx);
                let ly = self.ly.unwrap_or(d.ly);
                let nx = self.nx.unwrap_or((lx / d.spacing).round() as usize);
                let ny = self.ny.unwrap_or((ly / d.spacing).round() as usize);
                (lx, ly, nx, ny)
            }
            CaseKind::PoissonMms => {
                let nx = self.nx.ok_or(ConfigError::Missing(vec!["nx"]))?;
                let ny = self.ny.unwrap_or(nx);
                if ny != nx {
                    return Err(invalid("ny", format!("manufactured problem is square; got nx={nx}, ny={ny}")));
                }
                if nx < 2 {
                    return Err(invalid("nx", "manufactured problem needs at least 2 grid lines"));
                }
                (1.0, 1.0, nx, ny)
            }
        };
        let defaults = SolverConfig {
            method: Method::Adi,
            omega: 1.3,
            ..SolverConfig::default()
        };
        let mg_defaults = MultigridConfig::default();
        let s = &self.solver;
        let solver = SolverConfig {
            method: s.method.unwrap_or(defaults.method),
            omega: s.omega.unwrap_or(defaults.omega),
            tol: s.tol.unwrap_or(defaults.tol),
            max_iter: s.max_iter.unwrap_or(defaults.max_iter),
            norm: s.norm.unwrap_or(defaults.norm),
            multigrid: MultigridConfig {
                levels: s.multigrid.levels.or(mg_defaults.levels),
                pre_smooth: s.multigrid.pre_smooth.unwrap_or(mg_defaults.pre_smooth),
                post_smooth: s.multigrid.post_smooth.unwrap_or(mg_defaults.post_smooth),
                coarse_sweeps: s.multigrid.coarse_sweeps.unwrap_or(mg_defaults.coarse_sweeps),
            },
        };
        let config = CaseConfig {
            case,
            lx,
            ly,
            nx,
            ny,
            re: self.re.unwrap_or(10_000.0),
            vw: self.vw.unwrap_or(1.0),
            inlet_speed: self.inlet_speed.unwrap_or(1.0),
            dt: self.dt,
            sigma: self.sigma.unwrap_or(DEFAULT_SIGMA),
            cycles: self.cycles.unwrap_or(100_000),
            anim_freq: self.anim_freq.unwrap_or(500),
            out_dir: self.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            monitor: self.monitor,
            mask: self.mask,
            force: self.force.unwrap_or(false),
            paper_code_compat: self.paper_code_compat.unwrap_or(false),
            steady_tol: self.steady_tol,
            solver,
        };
        config.validate()?;
        Ok(config)
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

impl CaseConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("lx", self.lx)?;
        positive("ly", self.ly)?;
        positive("re", self.re)?;
        positive("sigma", self.sigma)?;
        if self.nx == 0 {
            return Err(invalid("nx", "must be positive"));
        }
        if self.ny == 0 {
            return Err(invalid("ny", "must be positive"));
        }
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if let Some(t) = self.steady_tol {
            positive("steady_tol", t)?;
        }
        if let Some((i, j)) = self.monitor {
            if self.case != CaseKind::PoissonMms && (i < 1 || j < 1 || i > self.nx || j > self.ny) {
                return Err(invalid(
                    "monitor",
                    format!("cell ({i}, {j}) is outside the interior 1..={} x 1..={}", self.nx, self.ny),
                ));
            }
        }
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if self.case != CaseKind::PoissonMms && !self.force {
            let grid = self.grid_only()?;
            let report = stability_check(&self.time_step(&grid), &grid);
            if !report.passed {
                return Err(ConfigError::Unstable {
                    ratio: report.ratio,
                    limit: report.limit,
                });
            }
        }
        Ok(())
    }

    /// Unmasked grid with the configured extent and cell counts.
    fn grid_only(&self) -> Result<StaggeredGrid, ConfigError> {
        Ok(crate::grid::build_grid((self.lx, self.ly), (self.nx, self.ny), None)?)
    }

    pub fn time_step(&self, grid: &StaggeredGrid) -> TimeStepParams {
        let mut params = match self.dt {
            Some(dt) => TimeStepParams::with_dt(self.re, dt, grid, self.cycles),
            None => TimeStepParams::from_sigma(self.re, self.sigma, grid, self.cycles),
        };
        params.paper_code_compat = self.paper_code_compat;
        params
    }

    /// Grid and boundary conditions of a cavity or chamber case.
    pub fn flow_setup(&self) -> Result<(StaggeredGrid, BoundarySpec), ConfigError> {
        match self.case {
            CaseKind::Cavity => Ok(cavity(self.nx, self.ny, self.lx, self.ly, self.vw)?),
            CaseKind::Chamber => {
                let c = build_chamber_case(self)?;
                Ok((c.grid, c.bcs))
            }
            CaseKind::PoissonMms => Err(invalid("case", "poisson-mms has no flow field")),
        }
    }

    /// TOML text that loads back to an identical configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }
}

/// Masked chamber grid. The cell size is `lx / nx` and must equal `ly / ny`;
/// a mask file, when given, must match the cell counts.
pub fn build_chamber_case(config: &CaseConfig) -> Result<ChamberCase, ConfigError> {
    if config.case != CaseKind::Chamber {
        return Err(invalid("case", format!("expected chamber, got {}", config.case)));
    }
    let spacing = config.lx / config.nx as f64;
    let sy = config.ly / config.ny as f64;
    if ((spacing - sy) / spacing).abs() > 1e-9 {
        return Err(invalid(
            "ny",
            format!("chamber needs square cells; lx/nx = {spacing} but ly/ny = {sy}"),
        ));
    }
    let mask = match &config.mask {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            Some(Mask::parse(&text)?)
        }
        None => None,
    };
    let spec = ChamberSpec {
        lx: config.lx,
        ly: config.ly,
        spacing,
        inlet_speed: config.inlet_speed,
        mask,
    };
    chamber(&spec).map_err(|e| match e {
        GridError::InvalidConfiguration(msg) => invalid("mask", msg),
        other => ConfigError::Mask(other),
    })
}

/// Parses TOML text into a partial configuration.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<PartialConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads the optional file, applies `flags` on top and validates.
pub fn load_config(path: Option<&Path>, flags: PartialConfig) -> Result<CaseConfig, ConfigError> {
    let base = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_config_str(&text, p)?
        }
        None => PartialConfig::default(),
    };
    base.merge(flags).finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cavity_flags(n: usize, re: f64) -> PartialConfig {
        PartialConfig {
            case: Some(CaseKind::Cavity),
            nx: Some(n),
            ny: Some(n),
            re: Some(re),
            ..PartialConfig::default()
        }
    }

    #[test]
    fn cavity_flags_give_default_time_step() {
        let c = load_config(None, cavity_flags(60, 100.0)).unwrap();
        let grid = c.flow_setup().unwrap().0;
        let dx = 1.0 / 60.0;
        assert_eq!(c.time_step(&grid).dt, 0.0025 * 100.0 * dx * dx);
        assert_eq!(c.vw, 1.0);
        assert_eq!(c.solver.method, Method::Adi);
        assert_eq!(c.solver.omega, 1.3);
        assert_eq!((c.cycles, c.anim_freq), (100_000, 500));
    }

    #[test]
    fn empty_input_lists_required_keys() {
        let err = load_config(None, PartialConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("case") && msg.contains("nx") && msg.contains("ny"), "{msg}");
        let err = load_config(
            None,
            PartialConfig {
                case: Some(CaseKind::Cavity),
                nx: Some(4),
                ..PartialConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Missing(ref k) if k == &vec!["ny"]));
    }

    #[test]
    fn stability_gate() {
        let dx2 = 1.0 / 3600.0;
        let mut flags = cavity_flags(60, 100.0);
        flags.dt = Some(0.3 * 100.0 * dx2);
        assert!(matches!(load_config(None, flags.clone()), Err(ConfigError::Unstable { .. })));
        flags.force = Some(true);
        assert!(load_config(None, flags).is_ok());
        let mut flags = cavity_flags(60, 100.0);
        flags.dt = Some(0.25 * 100.0 * dx2);
        assert!(load_config(None, flags).is_ok());
    }

    #[test]
    fn unknown_case_and_keys_name_the_problem() {
        assert!(CaseKind::from_str("pipe").unwrap_err().contains("cavity, chamber, poisson-mms"));
        let err = parse_config_str("case = \"cavity\"\nnxx = 3\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("nxx"), "{err}");
        let err = parse_config_str("case = \"pipe\"\n", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("pipe"), "{err}");
        let err = load_config(None, PartialConfig { re: Some(-1.0), ..cavity_flags(4, 1.0) }).unwrap_err();
        assert!(err.to_string().contains("`re`"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.toml");
        fs::write(
            &path,
            "case = \"cavity\"\nnx = 8\nny = 8\nre = 50.0\n[solver]\nmethod = \"sor\"\nomega = 1.5\n[solver.multigrid]\npre_smooth = 3\n",
        )
        .unwrap();
        let mut flags = PartialConfig::default();
        flags.re = Some(400.0);
        flags.solver.omega = Some(1.7);
        let c = load_config(Some(&path), flags).unwrap();
        assert_eq!((c.nx, c.re), (8, 400.0));
        assert_eq!((c.solver.method, c.solver.omega), (Method::Sor, 1.7));
        assert_eq!(c.solver.multigrid.pre_smooth, 3);
    }

    #[test]
    fn chamber_defaults_and_mask_checks() {
        let c = load_config(
            None,
            PartialConfig {
                case: Some(CaseKind::Chamber),
                re: Some(100.0),
                ..PartialConfig::default()
            },
        )
        .unwrap();
        assert_eq!((c.nx, c.ny), (24, 16));
        let case = build_chamber_case(&c).unwrap();
        assert_eq!(case.active_points, 425);

        let dir = tempfile::tempdir().unwrap();
        let mask = dir.path().join("mask.txt");
        fs::write(&mask, "#####\n#...#\n#####\n").unwrap();
        let bad = CaseConfig {
            mask: Some(mask),
            ..c.clone()
        };
        assert!(matches!(build_chamber_case(&bad), Err(ConfigError::Invalid { key: "mask", .. })));
        let skew = CaseConfig { ny: 10, ..c };
        assert!(build_chamber_case(&skew).is_err());
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            n in 1usize..100,
            re in 1.0f64..1e4,
            sigma in 1e-4f64..0.25,
            dt in prop::option::of(1e-9f64..1e-6),
            monitor in prop::option::of((1usize..2, 1usize..2)),
            method in prop::sample::select(Method::ALL.to_vec()),
            omega in 0.01f64..1.99,
            steady in prop::option::of(1e-9f64..1.0),
            compat in any::<bool>(),
        ) {
            let mut flags = cavity_flags(n, re);
            flags.sigma = Some(sigma);
            flags.dt = dt;
            flags.monitor = monitor;
            flags.steady_tol = steady;
            flags.paper_code_compat = Some(compat);
            flags.solver.method = Some(method);
            flags.solver.omega = Some(omega);
            flags.force = Some(true);
            let c = load_config(None, flags).unwrap();
            let text = c.to_toml();
            let back = parse_config_str(&text, Path::new("rt.toml")).unwrap().finalize().unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
