#![allow(dead_code)]

use bgk_core::material::EV;
use bgk_core::{DistributionField, KernelContext, PhaseGrid, PhysicalParams, RadialGrid};

pub fn ctx() -> KernelContext {
    KernelContext::from_params(PhysicalParams::literature_default()).unwrap()
}

pub fn radial(ctx: &KernelContext, eps_max_ev: f64, n: usize) -> PhaseGrid {
    RadialGrid::new(eps_max_ev * EV, n, ctx.params()).unwrap().into()
}

/// `s * F(eps, mu)` times a node-dependent factor `u_i` in `[umin, 1]`.
pub fn modulated(ctx: &KernelContext, grid: &PhaseGrid, mu: f64, s: f64, u: &[f64]) -> DistributionField {
    let e = grid.energies(ctx.params());
    DistributionField::new(
        e.iter()
            .zip(u)
            .map(|(&x, &ui)| s * ui * ctx.equilibrium(x, mu))
            .collect(),
    )
    .unwrap()
}

pub fn equilibrium(ctx: &KernelContext, grid: &PhaseGrid, mu: f64) -> DistributionField {
    let e = grid.energies(ctx.params());
    DistributionField::new(e.iter().map(|&x| ctx.equilibrium(x, mu)).collect()).unwrap()
}
