//! Time integration of the spatially homogeneous kinetic model, with and
//! without a constant driving field.
//!
//! Relaxation is integrated exactly in time with `kappa` and `F` frozen over a
//! step, so every new value is a convex combination of the old value and `F`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::chemical_potential::{MassConstraint, MuSolveOptions, MuSolveReport};
use crate::error::{BgkError, Result};
use crate::grid::{shift_interpolate, DistributionField, PhaseGrid};
use crate::kernels::{KernelContext, NodeKernels};
use crate::observables::{compute_observables, Observables, DEFAULT_G_DEG};
use crate::roots::{self, Eval, RootOptions};
use crate::sweep;

/// Where mass conservation is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `mu` solved from the pre-step field; density drifts at `O(dt)` globally.
    FrozenMu,
    /// `mu` chosen so that the post-step density equals the pre-step density.
    #[default]
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepScheme {
    pub variant: Variant,
    /// Time step, s.
    pub dt: f64,
}

impl StepScheme {
    pub fn new(variant: Variant, dt: f64) -> Result<Self> {
        let s = StepScheme { variant, dt };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(BgkError::param(
                "dt",
                format!("must be finite and > 0, got {}", self.dt),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `int f dk`.
    pub density: f64,
    pub min_f: f64,
    pub max_f: f64,
    /// Mass residual at `mu`, relative to `int kappa F dk`.
    pub residual: f64,
    /// Residual evaluations spent on the last step.
    pub mu_evaluations: usize,
    /// Largest `kappa dt` used on the last step.
    pub max_kappa_dt: f64,
    /// Field shift of the last step in cells along the worse axis.
    pub shift_cells: f64,
}

/// Time, occupancy and chemical potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub f: DistributionField,
    pub mu: f64,
    pub diagnostics: Diagnostics,
}

/// Stepping engine bound to one context and grid. Caches the kernel table of
/// the most recent chemical potential, which makes near-stationary steps cheap.
pub struct Stepper<'a> {
    ctx: &'a KernelContext,
    grid: &'a PhaseGrid,
    energies: Vec<f64>,
    opts: MuSolveOptions,
    collisions: bool,
    table: Option<NodeKernels>,
}

/// Relative allowance on the one-cell shift bound, so that a step chosen to
/// move exactly one cell is not rejected for rounding.
const SHIFT_SLACK: f64 = 1e-9;

struct Relaxed {
    values: Vec<f64>,
    mu_hint: f64,
    max_kappa_dt: f64,
    evaluations: usize,
}

fn relax_nodes(f: &[f64], table: &NodeKernels, dt: f64) -> Vec<f64> {
    sweep::par_map(f.len(), |i| {
        let (fi, eq) = (f[i], table.equilibrium[i]);
        let v = eq + (fi - eq) * (-table.kappa[i] * dt).exp();
        v.clamp(fi.min(eq), fi.max(eq))
    })
}

impl<'a> Stepper<'a> {
    pub fn new(ctx: &'a KernelContext, grid: &'a PhaseGrid, opts: MuSolveOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Stepper {
            ctx,
            grid,
            energies: grid.energies(ctx.params()),
            opts,
            collisions: true,
            table: None,
        })
    }

    /// Turns the collision operator off; field steps become pure advection.
    pub fn without_collisions(mut self) -> Self {
        self.collisions = false;
        self
    }

    pub fn options(&self) -> &MuSolveOptions {
        &self.opts
    }

    fn constraint<'s>(&'s self, f: &'s [f64]) -> MassConstraint<'s> {
        MassConstraint::with_energies(self.ctx, Cow::Borrowed(&self.energies), self.grid.weights(), f)
    }

    fn kernels(&mut self, mu: f64) -> &NodeKernels {
        if self.table.as_ref().is_none_or(|t| t.mu != mu) {
            self.table = Some(NodeKernels::evaluate(self.ctx, &self.energies, mu));
        }
        self.table.as_ref().expect("table just filled")
    }

    fn solve(&mut self, f: &[f64], center: f64) -> Result<MuSolveReport> {
        let (report, table) = self.constraint(f).solve_from(center, self.table.as_ref(), &self.opts)?;
        self.table = Some(table);
        Ok(report)
    }

    fn diagnostics(&self, f: &[f64], report: Option<&MuSolveReport>) -> Diagnostics {
        Diagnostics {
            density: sweep::dot(self.grid.weights(), f),
            min_f: f.iter().copied().fold(f64::INFINITY, f64::min),
            max_f: f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            residual: report.map_or(0.0, MuSolveReport::scaled_residual),
            mu_evaluations: report.map_or(0, |r| r.evaluations),
            max_kappa_dt: 0.0,
            shift_cells: 0.0,
        }
    }

    /// State at time 0 with `mu` solved from `f`, the bracket centred on `hint`.
    pub fn initial_state(&mut self, f: DistributionField, hint: f64) -> Result<SimState> {
        self.grid.check_len(f.len())?;
        let report = self.solve(f.values(), hint)?;
        let diagnostics = self.diagnostics(f.values(), Some(&report));
        Ok(SimState {
            t: 0.0,
            f,
            mu: report.mu,
            diagnostics,
        })
    }

    /// State with a caller-supplied chemical potential.
    pub fn state_with_mu(&mut self, t: f64, f: DistributionField, mu: f64) -> Result<SimState> {
        self.grid.check_len(f.len())?;
        self.kernels(mu);
        let table = self.table.as_ref().expect("table just filled");
        let e = self.constraint(f.values()).eval_table(table);
        let mut diagnostics = self.diagnostics(f.values(), None);
        diagnostics.residual = e.value / e.scale;
        Ok(SimState { t, f, mu, diagnostics })
    }

    /// Chemical potential at which one exact relaxation step of length `dt`
    /// leaves `int f dk` unchanged.
    fn conservative_mu(&mut self, f: &[f64], center: f64, dt: f64) -> Result<(NodeKernels, usize)> {
        let mut tables: Vec<NodeKernels> = self.table.iter().filter(|t| t.mu == center).cloned().collect();
        let w = self.grid.weights();
        let ctx = self.ctx;
        let energies = &self.energies;
        let gain = |t: &NodeKernels| {
            let value = sweep::ordered_sum(
                (0..f.len()).map(|i| -w[i] * (-t.kappa[i] * dt).exp_m1() * (t.equilibrium[i] - f[i])),
            );
            let scale =
                sweep::ordered_sum((0..f.len()).map(|i| -w[i] * (-t.kappa[i] * dt).exp_m1() * t.equilibrium[i]));
            Eval { value, scale }
        };
        let opts = RootOptions {
            abs_tol_x: 0.0,
            rel_tol: 1e-14,
            max_expansions: self.opts.max_bracket_expansions,
            max_iterations: self.opts.max_iterations,
            initial_width: ctx.k_b_t(),
        };
        let report = roots::solve_increasing(
            |mu| {
                if !mu.is_finite() {
                    return Err(BgkError::NonFinite("chemical potential iterate".into()));
                }
                if let Some(t) = tables.iter().find(|t| t.mu == mu) {
                    return Ok(gain(t));
                }
                let t = NodeKernels::evaluate(ctx, energies, mu);
                let e = gain(&t);
                tables.push(t);
                Ok(e)
            },
            center,
            &opts,
        )?;
        let table = match tables.iter().position(|t| t.mu == report.x) {
            Some(i) => tables.swap_remove(i),
            None => NodeKernels::evaluate(ctx, energies, report.x),
        };
        Ok((table, report.evaluations))
    }

    fn relax_values(&mut self, f: &[f64], mu: f64, dt: f64, variant: Variant) -> Result<Relaxed> {
        match variant {
            Variant::FrozenMu => {
                let table = self.kernels(mu);
                Ok(Relaxed {
                    values: relax_nodes(f, table, dt),
                    mu_hint: mu,
                    max_kappa_dt: table.max_kappa() * dt,
                    evaluations: 0,
                })
            }
            Variant::Conservative => {
                let (table, evaluations) = self.conservative_mu(f, mu, dt)?;
                let relaxed = Relaxed {
                    values: relax_nodes(f, &table, dt),
                    mu_hint: table.mu,
                    max_kappa_dt: table.max_kappa() * dt,
                    evaluations,
                };
                self.table = Some(table);
                Ok(relaxed)
            }
        }
    }

    fn check_state(&self, state: &SimState) -> Result<()> {
        self.grid.check_len(state.f.len())?;
        if !state.mu.is_finite() {
            return Err(BgkError::NonFinite("state chemical potential".into()));
        }
        Ok(())
    }

    /// One homogeneous relaxation step; `mu` is re-solved from the new field.
    pub fn relax_step(&mut self, state: &SimState, scheme: &StepScheme) -> Result<SimState> {
        scheme.validate()?;
        self.check_state(state)?;
        let r = self.relax_values(state.f.values(), state.mu, scheme.dt, scheme.variant)?;
        let report = self.solve(&r.values, r.mu_hint)?;
        let mut diagnostics = self.diagnostics(&r.values, Some(&report));
        diagnostics.mu_evaluations += r.evaluations;
        diagnostics.max_kappa_dt = r.max_kappa_dt;
        Ok(SimState {
            t: state.t + scheme.dt,
            f: DistributionField::from_trusted(r.values),
            mu: report.mu,
            diagnostics,
        })
    }

    /// One Strang-split step: half relaxation, exact-characteristic shift by
    /// `(e / hbar) E dt`, half relaxation. `e_field` in V/m.
    ///
    /// A zero field takes a single full relaxation step.
    pub fn field_step(&mut self, state: &SimState, e_field: [f64; 2], scheme: &StepScheme) -> Result<SimState> {
        scheme.validate()?;
        self.check_state(state)?;
        if !(e_field[0].is_finite() && e_field[1].is_finite()) {
            return Err(BgkError::param("field", "must be finite"));
        }
        if e_field == [0.0, 0.0] && self.collisions {
            return self.relax_step(state, scheme);
        }
        let grid = self
            .grid
            .as_cartesian()
            .ok_or_else(|| BgkError::Grid("field drive requires a Cartesian grid".into()))?;
        let p = self.ctx.params();
        let dt = scheme.dt;
        let delta = [
            p.e_charge / p.hbar * e_field[0] * dt,
            p.e_charge / p.hbar * e_field[1] * dt,
        ];
        let cells = (delta[0].abs() / grid.hx()).max(delta[1].abs() / grid.hy());
        if cells > 1.0 + SHIFT_SLACK {
            return Err(BgkError::ShiftBound {
                cells,
                limit: 1.0,
                suggested_dt: dt / cells,
            });
        }

        if !self.collisions {
            let values = shift_interpolate(state.f.values(), grid, delta)?;
            let mut diagnostics = self.diagnostics(&values, None);
            diagnostics.shift_cells = cells;
            return Ok(SimState {
                t: state.t + dt,
                f: DistributionField::from_trusted(values),
                mu: state.mu,
                diagnostics,
            });
        }

        let half = 0.5 * dt;
        let first = self.relax_values(state.f.values(), state.mu, half, scheme.variant)?;
        let mu1 = self.solve(&first.values, first.mu_hint)?;
        let shifted = shift_interpolate(&first.values, grid, delta)?;
        let mu2 = self.solve(&shifted, mu1.mu)?;
        let second = self.relax_values(&shifted, mu2.mu, half, scheme.variant)?;
        let report = self.solve(&second.values, second.mu_hint)?;
        let mut diagnostics = self.diagnostics(&second.values, Some(&report));
        diagnostics.mu_evaluations += first.evaluations + mu1.evaluations + mu2.evaluations + second.evaluations;
        diagnostics.max_kappa_dt = 2.0 * first.max_kappa_dt.max(second.max_kappa_dt);
        diagnostics.shift_cells = cells;
        Ok(SimState {
            t: state.t + dt,
            f: DistributionField::from_trusted(second.values),
            mu: report.mu,
            diagnostics,
        })
    }
}

/// One homogeneous relaxation step.
pub fn relax_step(
    state: &SimState,
    scheme: &StepScheme,
    ctx: &KernelContext,
    grid: &PhaseGrid,
    opts: &MuSolveOptions,
) -> Result<SimState> {
    Stepper::new(ctx, grid, *opts)?.relax_step(state, scheme)
}

/// One field-driven step on a Cartesian grid.
pub fn field_step(
    state: &SimState,
    e_field: [f64; 2],
    scheme: &StepScheme,
    ctx: &KernelContext,
    grid: &PhaseGrid,
    opts: &MuSolveOptions,
) -> Result<SimState> {
    Stepper::new(ctx, grid, *opts)?.field_step(state, e_field, scheme)
}

/// Initial occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `F(eps, mu0)`.
    Equilibrium { mu0: f64 },
    /// `s F(eps, mu0)` with `0 < s <= 1`.
    Scaled { mu0: f64, s: f64 },
    /// `F(eps(k - k0), mu0)`, Cartesian grids only; `k0` in 1/m.
    Shifted { mu0: f64, k0: [f64; 2] },
}

impl InitialCondition {
    pub fn mu0(&self) -> f64 {
        match *self {
            InitialCondition::Equilibrium { mu0 }
            | InitialCondition::Scaled { mu0, .. }
            | InitialCondition::Shifted { mu0, .. } => mu0,
        }
    }

    pub fn validate(&self, grid: &PhaseGrid) -> Result<()> {
        if !self.mu0().is_finite() {
            return Err(BgkError::param("initial.mu0", "must be finite"));
        }
        match *self {
            InitialCondition::Scaled { s, .. } if !(s > 0.0 && s <= 1.0) => Err(BgkError::param(
                "initial.s",
                format!("must satisfy 0 < s <= 1, got {s}"),
            )),
            InitialCondition::Shifted { k0, .. } => {
                if grid.as_cartesian().is_none() {
                    Err(BgkError::param(
                        "initial",
                        "shifted equilibrium requires a Cartesian grid",
                    ))
                } else if !(k0[0].is_finite() && k0[1].is_finite()) {
                    Err(BgkError::param("initial.k0", "must be finite"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, grid: &PhaseGrid, ctx: &KernelContext) -> Result<DistributionField> {
        self.validate(grid)?;
        let p = ctx.params();
        let hv = p.hbar_vf();
        let values = match *self {
            InitialCondition::Equilibrium { mu0 } => grid.sample(|k| p.fermi_dirac(hv * k[0].hypot(k[1]), mu0)),
            InitialCondition::Scaled { mu0, s } => grid.sample(|k| s * p.fermi_dirac(hv * k[0].hypot(k[1]), mu0)),
            InitialCondition::Shifted { mu0, k0 } => {
                grid.sample(|k| p.fermi_dirac(hv * (k[0] - k0[0]).hypot(k[1] - k0[1]), mu0))
            }
        };
        DistributionField::on_grid(grid, values)
    }
}

/// A fully resolved simulation description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: PhaseGrid,
    pub initial: InitialCondition,
    /// Electric field, V/m.
    pub field: [f64; 2],
    pub scheme: StepScheme,
    /// Final time, s.
    pub t_end: f64,
    /// Emit a record every this many steps; the last step is always emitted.
    pub output_every: usize,
    pub tolerances: MuSolveOptions,
    pub g_deg: f64,
}

impl RunConfig {
    pub fn new(grid: PhaseGrid, initial: InitialCondition, scheme: StepScheme, t_end: f64) -> Self {
        RunConfig {
            grid,
            initial,
            field: [0.0, 0.0],
            scheme,
            t_end,
            output_every: 1,
            tolerances: MuSolveOptions::default(),
            g_deg: DEFAULT_G_DEG,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.tolerances.validate()?;
        self.initial.validate(&self.grid)?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(BgkError::param(
                "t_end",
                format!("must be finite and >= 0, got {}", self.t_end),
            ));
        }
        if self.output_every == 0 {
            return Err(BgkError::param("output_every", "must be >= 1"));
        }
        if !(self.field[0].is_finite() && self.field[1].is_finite()) {
            return Err(BgkError::param("field", "must be finite"));
        }
        if self.field != [0.0, 0.0] && self.grid.as_cartesian().is_none() {
            return Err(BgkError::param("field", "a nonzero field requires a Cartesian grid"));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        let ratio = self.t_end / self.scheme.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

/// One trajectory row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    pub mu: f64,
    pub observables: Observables,
    pub min_f: f64,
    pub max_f: f64,
    /// Mass residual at `mu`, relative to `int kappa F dk`.
    pub mass_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub status: RunStatus,
    pub initial_density: f64,
    pub final_density: f64,
    /// Largest `|rho_{n+1} - rho_n| / rho_n` over all steps.
    pub max_step_drift: f64,
    pub max_kappa_dt: f64,
    pub max_shift_cells: f64,
    pub final_state: SimState,
}

impl RunSummary {
    /// `(rho_final - rho_initial) / rho_initial`.
    pub fn total_drift(&self) -> f64 {
        (self.final_density - self.initial_density) / self.initial_density
    }
}

fn record(step: usize, state: &SimState, cfg: &RunConfig, ctx: &KernelContext) -> Result<Record> {
    Ok(Record {
        step,
        t: state.t,
        mu: state.mu,
        observables: compute_observables(&state.f, &cfg.grid, ctx.params(), cfg.g_deg)?,
        min_f: state.diagnostics.min_f,
        max_f: state.diagnostics.max_f,
        mass_residual: state.diagnostics.residual,
    })
}

/// Runs a simulation, passing records to `sink` in order.
///
/// Configuration and initial-state errors are returned as `Err`; a failure
/// during stepping stops the run and is reported in the summary status, with
/// every record up to the failure already delivered.
pub fn run<S>(cfg: &RunConfig, ctx: &KernelContext, mut sink: S) -> Result<RunSummary>
where
    S: FnMut(&Record) -> Result<()>,
{
    cfg.validate()?;
    let f0 = cfg.initial.sample(&cfg.grid, ctx)?;
    let mut stepper = Stepper::new(ctx, &cfg.grid, cfg.tolerances)?;
    let mut state = stepper.initial_state(f0, cfg.initial.mu0())?;
    sink(&record(0, &state, cfg, ctx)?)?;

    let n = cfg.step_count();
    let mut summary = RunSummary {
        steps: 0,
        status: RunStatus::Completed,
        initial_density: state.diagnostics.density,
        final_density: state.diagnostics.density,
        max_step_drift: 0.0,
        max_kappa_dt: 0.0,
        max_shift_cells: 0.0,
        final_state: state.clone(),
    };
    let dt = cfg.scheme.dt;
    for i in 1..=n {
        let t_next = if i == n { cfg.t_end } else { i as f64 * dt };
        let step_dt = if i == n { cfg.t_end - (i - 1) as f64 * dt } else { dt };
        let scheme = StepScheme {
            variant: cfg.scheme.variant,
            dt: step_dt,
        };
        let next = match stepper.field_step(&state, cfg.field, &scheme) {
            Ok(mut s) => {
                s.t = t_next;
                s
            }
            Err(e) => {
                summary.status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let d = &next.diagnostics;
        let drift = ((d.density - state.diagnostics.density) / state.diagnostics.density).abs();
        summary.max_step_drift = summary.max_step_drift.max(drift);
        summary.max_kappa_dt = summary.max_kappa_dt.max(d.max_kappa_dt);
        summary.max_shift_cells = summary.max_shift_cells.max(d.shift_cells);
        summary.steps = i;
        state = next;
        if i % cfg.output_every == 0 || i == n {
            sink(&record(i, &state, cfg, ctx)?)?;
        }
    }
    summary.final_density = state.diagnostics.density;
    summary.final_state = state;
    Ok(summary)
}
