//! Velocity moments of an occupancy field: density, energy density and
//! current density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{BgkError, Result};
use crate::grid::{DistributionField, PhaseGrid};
use crate::material::PhysicalParams;
use crate::sweep;

/// Spin times valley degeneracy over `(2 pi)^2`.
pub const DEFAULT_G_DEG: f64 = 4.0 / (4.0 * PI * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// `int f dk`, 1/m^2.
    pub density: f64,
    /// `int eps f dk`, J/m^2.
    pub energy_density: f64,
    /// `-e g_deg int v_F (k/|k|) f dk`, A/m.
    pub current: [f64; 2],
    /// `g_deg * density`, carriers per m^2.
    pub density_phys: f64,
    pub g_deg: f64,
}

/// Quadrature moments of `f`. On a radial grid the current vanishes by
/// isotropy.
pub fn compute_observables(
    f: &DistributionField,
    grid: &PhaseGrid,
    params: &PhysicalParams,
    g_deg: f64,
) -> Result<Observables> {
    if !(g_deg.is_finite() && g_deg > 0.0) {
        return Err(BgkError::param("g_deg", format!("must be finite and > 0, got {g_deg}")));
    }
    grid.check_len(f.len())?;
    let w = grid.weights();
    let v = f.values();
    let k = grid.magnitudes();
    let hv = params.hbar_vf();
    let density = sweep::dot(w, v);
    let energy_density = sweep::ordered_sum((0..v.len()).map(|i| w[i] * hv * k[i] * v[i]));
    let current = match grid {
        PhaseGrid::Radial(_) => [0.0, 0.0],
        PhaseGrid::Cartesian(g) => {
            let pref = -params.e_charge * g_deg * params.v_f;
            let component = |axis: usize| {
                sweep::ordered_sum((0..v.len()).map(|i| {
                    if k[i] == 0.0 {
                        0.0
                    } else {
                        w[i] * g.node(i)[axis] / k[i] * v[i]
                    }
                }))
            };
            [pref * component(0), pref * component(1)]
        }
    };
    Ok(Observables {
        density,
        energy_density,
        current,
        density_phys: g_deg * density,
        g_deg,
    })
}
