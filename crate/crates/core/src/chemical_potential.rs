//! Mass-conservation residual `R(mu) = int kappa(eps, mu) (F(eps, mu) - f) dk`
//! and its unique root.
//!
//! For `0 <= f <= 1`, `R` is strictly increasing in `mu`, negative as
//! `mu -> -inf` and positive as `mu -> +inf` (unless `f = 0` a.e.), so a
//! bracketing solver always succeeds on admissible input.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{BgkError, Result};
use crate::grid::{DistributionField, PhaseGrid};
use crate::kernels::{KernelContext, NodeKernels};
use crate::material::EV;
use crate::roots::{self, Convergence, Eval, RootOptions};
use crate::sweep;

/// Stopping and search limits for the chemical-potential solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuSolveOptions {
    /// Bracket width at which the solve stops, J.
    pub abs_tol_mu: f64,
    /// Residual tolerance relative to `int kappa F dk`.
    pub rel_tol_residual: f64,
    pub max_bracket_expansions: usize,
    pub max_iterations: usize,
}

impl Default for MuSolveOptions {
    fn default() -> Self {
        MuSolveOptions {
            abs_tol_mu: 1e-13 * EV,
            rel_tol_residual: 1e-13,
            max_bracket_expansions: 40,
            max_iterations: 200,
        }
    }
}

impl MuSolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol_mu > 0.0 && self.rel_tol_residual > 0.0) {
            return Err(BgkError::param("tolerances", "must be > 0"));
        }
        if self.max_bracket_expansions < 1 || self.max_iterations < 1 {
            return Err(BgkError::param("limits", "iteration limits must be >= 1"));
        }
        Ok(())
    }

    pub(crate) fn root_options(&self, k_b_t: f64) -> RootOptions {
        RootOptions {
            abs_tol_x: self.abs_tol_mu,
            rel_tol: self.rel_tol_residual,
            max_expansions: self.max_bracket_expansions,
            max_iterations: self.max_iterations,
            initial_width: k_b_t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// `|R(mu)| <= rel_tol_residual * int kappa F dk`.
    ResidualTolerance,
    /// Bracket narrower than `abs_tol_mu`.
    BracketWidth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSolveReport {
    pub mu: f64,
    pub residual_at_mu: f64,
    /// `int kappa F dk` at `mu`.
    pub scale: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub bracket: (f64, f64),
    pub status: SolveStatus,
}

impl MuSolveReport {
    /// `R(mu) / int kappa F dk`.
    pub fn scaled_residual(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual_at_mu
        } else {
            self.residual_at_mu / self.scale
        }
    }
}

/// A fixed occupancy field bound to its grid, ready for repeated residual
/// evaluations.
pub struct MassConstraint<'a> {
    ctx: &'a KernelContext,
    energies: Cow<'a, [f64]>,
    weights: &'a [f64],
    f: &'a [f64],
}

impl<'a> MassConstraint<'a> {
    pub fn new(ctx: &'a KernelContext, grid: &'a PhaseGrid, f: &'a DistributionField) -> Result<Self> {
        grid.check_len(f.len())?;
        Ok(Self::with_energies(
            ctx,
            Cow::Owned(grid.energies(ctx.params())),
            grid.weights(),
            f.values(),
        ))
    }

    pub(crate) fn with_energies(
        ctx: &'a KernelContext,
        energies: Cow<'a, [f64]>,
        weights: &'a [f64],
        f: &'a [f64],
    ) -> Self {
        MassConstraint {
            ctx,
            energies,
            weights,
            f,
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn tabulate(&self, mu: f64) -> NodeKernels {
        NodeKernels::evaluate(self.ctx, &self.energies, mu)
    }

    /// Residual and scale from an existing table.
    pub fn eval_table(&self, table: &NodeKernels) -> Eval {
        let value = sweep::ordered_sum(
            (0..self.f.len()).map(|i| self.weights[i] * table.kappa[i] * (table.equilibrium[i] - self.f[i])),
        );
        let scale =
            sweep::ordered_sum((0..self.f.len()).map(|i| self.weights[i] * table.kappa[i] * table.equilibrium[i]));
        Eval { value, scale }
    }

    pub fn eval(&self, mu: f64) -> Eval {
        self.eval_table(&self.tabulate(mu))
    }

    /// Warm-started root solve; `table` may hold kernels already tabulated at `center`.
    pub fn solve_from(
        &self,
        center: f64,
        table: Option<&NodeKernels>,
        opts: &MuSolveOptions,
    ) -> Result<(MuSolveReport, NodeKernels)> {
        opts.validate()?;
        let mut tables: Vec<NodeKernels> = Vec::new();
        if let Some(t) = table.filter(|t| t.mu == center) {
            tables.push(t.clone());
        }
        let report = roots::solve_increasing(
            |mu| {
                if !mu.is_finite() {
                    return Err(BgkError::NonFinite("chemical potential iterate".into()));
                }
                if let Some(t) = tables.iter().find(|t| t.mu == mu) {
                    return Ok(self.eval_table(t));
                }
                let t = self.tabulate(mu);
                let e = self.eval_table(&t);
                tables.push(t);
                Ok(e)
            },
            center,
            &opts.root_options(self.ctx.k_b_t()),
        )?;
        let table = match tables.iter().position(|t| t.mu == report.x) {
            Some(i) => tables.swap_remove(i),
            None => self.tabulate(report.x),
        };
        Ok((
            MuSolveReport {
                mu: report.x,
                residual_at_mu: report.eval.value,
                scale: report.eval.scale,
                iterations: report.iterations,
                evaluations: report.evaluations,
                bracket: report.bracket,
                status: match report.convergence {
                    Convergence::Residual => SolveStatus::ResidualTolerance,
                    Convergence::Bracket => SolveStatus::BracketWidth,
                },
            },
            table,
        ))
    }
}

/// `R(mu) = int kappa (F - f) dk` by grid quadrature.
pub fn residual(f: &DistributionField, mu: f64, ctx: &KernelContext, grid: &PhaseGrid) -> Result<f64> {
    Ok(MassConstraint::new(ctx, grid, f)?.eval(mu).value)
}

/// `R(mu)` divided by `int kappa F dk`.
pub fn scaled_residual(f: &DistributionField, mu: f64, ctx: &KernelContext, grid: &PhaseGrid) -> Result<f64> {
    let e = MassConstraint::new(ctx, grid, f)?.eval(mu);
    Ok(e.value / e.scale)
}

/// `(mu_lo, mu_hi)` with `R(mu_lo) < 0 < R(mu_hi)`, grown by doubling from
/// `mu = 0` with a first half-width of `k_B T`.
pub fn bracket(
    f: &DistributionField,
    ctx: &KernelContext,
    grid: &PhaseGrid,
    opts: &MuSolveOptions,
) -> Result<(f64, f64)> {
    opts.validate()?;
    let problem = MassConstraint::new(ctx, grid, f)?;
    let mut eval = |mu: f64| Ok(problem.eval(mu));
    let b = roots::expand_bracket(&mut eval, 0.0, None, &opts.root_options(ctx.k_b_t()))?;
    Ok((b.lo, b.hi))
}

/// The unique chemical potential satisfying the mass constraint.
pub fn solve_mu(
    f: &DistributionField,
    ctx: &KernelContext,
    grid: &PhaseGrid,
    opts: &MuSolveOptions,
) -> Result<MuSolveReport> {
    solve_mu_from(f, ctx, grid, opts, 0.0)
}

/// [`solve_mu`] with the bracket centred on `center`.
pub fn solve_mu_from(
    f: &DistributionField,
    ctx: &KernelContext,
    grid: &PhaseGrid,
    opts: &MuSolveOptions,
    center: f64,
) -> Result<MuSolveReport> {
    let problem = MassConstraint::new(ctx, grid, f)?;
    Ok(problem.solve_from(center, None, opts)?.0)
}
