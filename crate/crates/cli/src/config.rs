//! Simulation configuration file.
//!
//! ```json
//! {
//!   "params": "graphene_default.json",
//!   "grid": { "type": "cartesian", "nx": 64, "ny": 64 },
//!   "initial": { "type": "scaled", "mu0_eV": 0.2, "s": 0.5 },
//!   "field": [1.0e5, 0.0],
//!   "scheme": { "variant": "conservative", "dt": 1e-14, "t_end": 1e-12, "output_every": 10 }
//! }
//! ```

use std::path::{Path, PathBuf};

use bgk_core::material::EV;
use bgk_core::{
    CartesianGrid, InitialCondition, KernelContext, MuSolveOptions, PhaseGrid, PhysicalParams, RadialGrid, RunConfig,
    StepScheme, Variant, DEFAULT_G_DEG,
};
use serde::Deserialize;

use crate::error::CliError;

/// Default truncation above the Fermi level, in units of `k_B T`.
const TAIL_KT: f64 = 25.0;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Parameter file, relative to the configuration file. Literature
    /// defaults when absent.
    #[serde(default)]
    pub params: Option<PathBuf>,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    /// Electric field, V/m.
    #[serde(default)]
    pub field: [f64; 2],
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub g_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Radial,
    Cartesian,
}

/// Grid description. Radial grids take `n` and optionally `eps_max_eV`;
/// Cartesian grids take `nx`, `ny` and optionally `k_max` (1/m).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "type")]
    pub kind: GridKind,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(rename = "eps_max_eV", default)]
    pub eps_max_ev: Option<f64>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default)]
    pub k_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Equilibrium,
    Scaled,
    Shifted,
}

/// Initial condition: `F(mu0)`, `s F(mu0)` or `F(mu0)` centred on `k0` (1/m).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(rename = "type")]
    pub kind: InitialKind,
    #[serde(rename = "mu0_eV")]
    pub mu0_ev: f64,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub k0: Option<[f64; 2]>,
}

fn require<T>(value: Option<T>, field: &str, kind: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("config field `{field}`: required for {kind}")))
}

fn forbid<T>(value: &Option<T>, field: &str, kind: &str) -> Result<(), CliError> {
    match value {
        Some(_) => Err(CliError::Config(format!(
            "config field `{field}`: not allowed for {kind}"
        ))),
        None => Ok(()),
    }
}

impl InitialSpec {
    fn resolve(&self) -> Result<InitialCondition, CliError> {
        let mu0 = self.mu0_ev * EV;
        Ok(match self.kind {
            InitialKind::Equilibrium => {
                forbid(&self.s, "initial.s", "equilibrium")?;
                forbid(&self.k0, "initial.k0", "equilibrium")?;
                InitialCondition::Equilibrium { mu0 }
            }
            InitialKind::Scaled => {
                forbid(&self.k0, "initial.k0", "scaled")?;
                InitialCondition::Scaled {
                    mu0,
                    s: require(self.s, "initial.s", "scaled")?,
                }
            }
            InitialKind::Shifted => {
                forbid(&self.s, "initial.s", "shifted")?;
                InitialCondition::Shifted {
                    mu0,
                    k0: require(self.k0, "initial.k0", "shifted")?,
                }
            }
        })
    }
}

impl GridSpec {
    fn resolve(&self, initial: &InitialCondition, params: &PhysicalParams) -> Result<PhaseGrid, CliError> {
        let eps_default = initial.mu0().max(0.0) + TAIL_KT * params.k_b_t;
        match self.kind {
            GridKind::Radial => {
                for (v, name) in [(self.nx, "grid.nx"), (self.ny, "grid.ny")] {
                    forbid(&v, name, "radial grids")?;
                }
                forbid(&self.k_max, "grid.k_max", "radial grids")?;
                let n = require(self.n, "grid.n", "radial grids")?;
                let eps_max = self.eps_max_ev.map_or(eps_default, |e| e * EV);
                Ok(RadialGrid::new(eps_max, n, params).map_err(config_err)?.into())
            }
            GridKind::Cartesian => {
                forbid(&self.n, "grid.n", "Cartesian grids")?;
                forbid(&self.eps_max_ev, "grid.eps_max_eV", "Cartesian grids")?;
                let nx = require(self.nx, "grid.nx", "Cartesian grids")?;
                let ny = require(self.ny, "grid.ny", "Cartesian grids")?;
                let offset = match *initial {
                    InitialCondition::Shifted { k0, .. } => k0[0].hypot(k0[1]),
                    _ => 0.0,
                };
                let k_max = self.k_max.unwrap_or(eps_default / params.hbar_vf() + offset);
                Ok(CartesianGrid::new(k_max, nx, ny).map_err(config_err)?.into())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    #[serde(default)]
    pub variant: Variant,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub output_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    #[serde(rename = "abs_tol_mu_eV")]
    pub abs_tol_mu_ev: f64,
    pub rel_tol_residual: f64,
    pub max_bracket_expansions: usize,
    pub max_iterations: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let d = MuSolveOptions::default();
        ToleranceSpec {
            abs_tol_mu_ev: d.abs_tol_mu / EV,
            rel_tol_residual: d.rel_tol_residual,
            max_bracket_expansions: d.max_bracket_expansions,
            max_iterations: d.max_iterations,
        }
    }
}

/// Everything `simulate` needs, resolved and validated.
pub struct Resolved {
    pub ctx: KernelContext,
    pub run: RunConfig,
}

pub fn load_params(path: Option<&Path>) -> Result<PhysicalParams, CliError> {
    match path {
        None => Ok(PhysicalParams::literature_default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            PhysicalParams::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

pub fn parse(text: &str) -> Result<SimConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            CliError::Config(format!("config: {inner}"))
        } else {
            CliError::Config(format!("config field `{path}`: {inner}"))
        }
    })
}

fn config_err(e: bgk_core::BgkError) -> CliError {
    CliError::Config(format!("config: {e}"))
}

impl SimConfig {
    pub fn resolve(&self, config_path: &Path) -> Result<Resolved, CliError> {
        let params_path = self
            .params
            .as_ref()
            .map(|p| config_path.parent().unwrap_or(Path::new(".")).join(p));
        let params = load_params(params_path.as_deref())?;
        let ctx = KernelContext::from_params(params).map_err(config_err)?;
        let initial = self.initial.resolve()?;
        let grid = self.grid.resolve(&initial, &params)?;

        let t = &self.tolerances;
        let tolerances = MuSolveOptions {
            abs_tol_mu: t.abs_tol_mu_ev * EV,
            rel_tol_residual: t.rel_tol_residual,
            max_bracket_expansions: t.max_bracket_expansions,
            max_iterations: t.max_iterations,
        };
        let run = RunConfig {
            grid,
            initial,
            field: self.field,
            scheme: StepScheme {
                variant: self.scheme.variant,
                dt: self.scheme.dt,
            },
            t_end: self.scheme.t_end,
            output_every: self.scheme.output_every,
            tolerances,
            g_deg: self.g_deg.unwrap_or(DEFAULT_G_DEG),
        };
        run.validate().map_err(config_err)?;
        if !(run.g_deg.is_finite() && run.g_deg > 0.0) {
            return Err(CliError::Config("config field `g_deg`: must be finite and > 0".into()));
        }
        Ok(Resolved { ctx, run })
    }
}
