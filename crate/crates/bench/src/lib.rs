//! Shared fixtures for the benchmarks.

use bgk_core::material::EV;
use bgk_core::{
    CartesianGrid, DistributionField, InitialCondition, KernelContext, MuSolveOptions, PhaseGrid, PhysicalParams,
    RadialGrid, SimState, Stepper,
};

pub fn context() -> KernelContext {
    KernelContext::from_params(PhysicalParams::literature_default()).expect("default parameters are valid")
}

/// Radial grid reaching 25 kT above `mu0_ev`.
pub fn radial(ctx: &KernelContext, mu0_ev: f64, n: usize) -> PhaseGrid {
    let eps_max = mu0_ev.max(0.0) * EV + 25.0 * ctx.k_b_t();
    RadialGrid::new(eps_max, n, ctx.params()).expect("valid grid").into()
}

pub fn cartesian(ctx: &KernelContext, mu0_ev: f64, n: usize) -> PhaseGrid {
    let k_max = (mu0_ev.max(0.0) * EV + 25.0 * ctx.k_b_t()) / ctx.params().hbar_vf();
    CartesianGrid::new(k_max, n, n).expect("valid grid").into()
}

/// Half-filled equilibrium `0.5 F(mu0)`.
pub fn half_filled(ctx: &KernelContext, grid: &PhaseGrid, mu0_ev: f64) -> DistributionField {
    InitialCondition::Scaled {
        mu0: mu0_ev * EV,
        s: 0.5,
    }
    .sample(grid, ctx)
    .expect("valid initial condition")
}

pub fn initial_state(stepper: &mut Stepper<'_>, f: DistributionField) -> SimState {
    stepper.initial_state(f, 0.0).expect("solvable initial state")
}

pub fn options() -> MuSolveOptions {
    MuSolveOptions::default()
}
