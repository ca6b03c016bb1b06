//! Discrete k-space: a radial grid for isotropic problems and a uniform
//! Cartesian grid for field-driven ones, each with area-measure weights.

use std::f64::consts::PI;

use crate::error::{BgkError, Result};
use crate::material::PhysicalParams;
use crate::quadrature::gauss_legendre;
use crate::sweep;

/// Nodes per Gauss-Legendre panel of the radial grid.
pub const RADIAL_PANEL_ORDER: usize = 8;
/// Minimum radial node count.
pub const MIN_RADIAL_NODES: usize = 16;
/// Minimum Cartesian nodes per axis when advecting.
pub const MIN_ADVECTION_NODES: usize = 32;
/// Occupancies this far outside `[0, 1]` are clamped without complaint.
pub const OCCUPANCY_SLACK: f64 = 1e-12;

/// Radial wavevector grid on `[0, r_max]` built from composite Gauss-Legendre
/// panels. Weights carry the `2 pi r` Jacobian, so they integrate over the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    r_nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Grid covering energies up to `eps_max` (J).
    pub fn new(eps_max: f64, n: usize, params: &PhysicalParams) -> Result<Self> {
        if !(eps_max > 0.0 && eps_max.is_finite()) {
            return Err(BgkError::Grid(format!("eps_max must be > 0, got {eps_max}")));
        }
        Self::with_r_max(eps_max / params.hbar_vf(), n)
    }

    pub fn with_r_max(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(BgkError::Grid(format!("r_max must be > 0, got {r_max}")));
        }
        if n < MIN_RADIAL_NODES || !n.is_multiple_of(RADIAL_PANEL_ORDER) {
            return Err(BgkError::Grid(format!(
                "radial node count must be a multiple of {RADIAL_PANEL_ORDER} and >= {MIN_RADIAL_NODES}, got {n}"
            )));
        }
        let panels = n / RADIAL_PANEL_ORDER;
        let (x, w) = gauss_legendre(RADIAL_PANEL_ORDER);
        let h = r_max / panels as f64;
        let mut r_nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                let r = mid + 0.5 * h * xi;
                r_nodes.push(r);
                weights.push(0.5 * h * wi * 2.0 * PI * r);
            }
        }
        Ok(RadialGrid {
            r_max,
            r_nodes,
            weights,
        })
    }

    /// Rebuilds the grid whose nodes are `r_nodes`, verifying they match.
    pub fn from_nodes(r_nodes: &[f64]) -> Result<Self> {
        let n = r_nodes.len();
        if n < MIN_RADIAL_NODES || !n.is_multiple_of(RADIAL_PANEL_ORDER) {
            return Err(BgkError::Grid(format!("{n} radial nodes do not form a panel grid")));
        }
        let panels = (n / RADIAL_PANEL_ORDER) as f64;
        let (x, _) = gauss_legendre(RADIAL_PANEL_ORDER);
        let last_frac = (panels - 1.0 + 0.5 * (1.0 + x[RADIAL_PANEL_ORDER - 1])) / panels;
        let grid = Self::with_r_max(r_nodes[n - 1] / last_frac, n)?;
        let mismatch = grid
            .r_nodes
            .iter()
            .zip(r_nodes)
            .any(|(a, b)| (a - b).abs() > 1e-9 * grid.r_max);
        if mismatch {
            return Err(BgkError::Grid(
                "radial nodes do not match a composite Gauss-Legendre grid".into(),
            ));
        }
        Ok(grid)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Uniform cell-centred tensor grid on `[-k_max, k_max]^2`, midpoint weights.
/// Node `(ix, iy)` is stored at `ix * ny + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    k_max: f64,
    nx: usize,
    ny: usize,
    kx_nodes: Vec<f64>,
    ky_nodes: Vec<f64>,
    cell_area: f64,
    magnitudes: Vec<f64>,
    weights: Vec<f64>,
}

impl CartesianGrid {
    pub fn new(k_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(k_max > 0.0 && k_max.is_finite()) {
            return Err(BgkError::Grid(format!("k_max must be > 0, got {k_max}")));
        }
        if nx < 2 || ny < 2 {
            return Err(BgkError::Grid(format!("need at least 2 nodes per axis, got {nx}x{ny}")));
        }
        let axis = |n: usize| -> Vec<f64> {
            let h = 2.0 * k_max / n as f64;
            (0..n).map(|i| -k_max + (i as f64 + 0.5) * h).collect()
        };
        let kx_nodes = axis(nx);
        let ky_nodes = axis(ny);
        let cell_area = (2.0 * k_max / nx as f64) * (2.0 * k_max / ny as f64);
        let mut magnitudes = Vec::with_capacity(nx * ny);
        for &kx in &kx_nodes {
            for &ky in &ky_nodes {
                magnitudes.push(kx.hypot(ky));
            }
        }
        Ok(CartesianGrid {
            k_max,
            nx,
            ny,
            kx_nodes,
            ky_nodes,
            cell_area,
            weights: vec![cell_area; nx * ny],
            magnitudes,
        })
    }

    /// Rebuilds the grid from node coordinates listed in storage order.
    pub fn from_nodes(kx: &[f64], ky: &[f64]) -> Result<Self> {
        if kx.len() != ky.len() || kx.is_empty() {
            return Err(BgkError::Grid("kx and ky columns differ in length".into()));
        }
        let ny = kx.iter().take_while(|&&v| v == kx[0]).count();
        if ny < 2 || !kx.len().is_multiple_of(ny) {
            return Err(BgkError::Grid("nodes are not a tensor grid".into()));
        }
        let nx = kx.len() / ny;
        let k_max = -kx[0] * nx as f64 / (nx as f64 - 1.0);
        let grid = Self::new(k_max, nx, ny)?;
        let tol = 1e-9 * k_max;
        let mismatch =
            (0..kx.len()).any(|i| (grid.kx(i / ny) - kx[i]).abs() > tol || (grid.ky(i % ny) - ky[i]).abs() > tol);
        if mismatch {
            return Err(BgkError::Grid("nodes do not match a uniform symmetric grid".into()));
        }
        Ok(grid)
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        2.0 * self.k_max / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        2.0 * self.k_max / self.ny as f64
    }
    pub fn kx(&self, ix: usize) -> f64 {
        self.kx_nodes[ix]
    }
    pub fn ky(&self, iy: usize) -> f64 {
        self.ky_nodes[iy]
    }
    pub fn kx_nodes(&self) -> &[f64] {
        &self.kx_nodes
    }
    pub fn ky_nodes(&self) -> &[f64] {
        &self.ky_nodes
    }
    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }
    /// `(kx, ky)` of storage index `i`.
    #[inline]
    pub fn node(&self, i: usize) -> [f64; 2] {
        [self.kx_nodes[i / self.ny], self.ky_nodes[i % self.ny]]
    }
}

/// A k-space grid of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseGrid {
    Radial(RadialGrid),
    Cartesian(CartesianGrid),
}

impl From<RadialGrid> for PhaseGrid {
    fn from(g: RadialGrid) -> Self {
        PhaseGrid::Radial(g)
    }
}

impl From<CartesianGrid> for PhaseGrid {
    fn from(g: CartesianGrid) -> Self {
        PhaseGrid::Cartesian(g)
    }
}

impl PhaseGrid {
    pub fn len(&self) -> usize {
        self.magnitudes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|k|` at every node.
    pub fn magnitudes(&self) -> &[f64] {
        match self {
            PhaseGrid::Radial(g) => &g.r_nodes,
            PhaseGrid::Cartesian(g) => &g.magnitudes,
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            PhaseGrid::Radial(g) => &g.weights,
            PhaseGrid::Cartesian(g) => &g.weights,
        }
    }

    /// Band energy at every node.
    pub fn energies(&self, params: &PhysicalParams) -> Vec<f64> {
        let hv = params.hbar_vf();
        self.magnitudes().iter().map(|k| hv * k).collect()
    }

    /// Largest node energy.
    pub fn max_energy(&self, params: &PhysicalParams) -> f64 {
        params.hbar_vf() * self.magnitudes().iter().copied().fold(0.0, f64::max)
    }

    pub fn as_cartesian(&self) -> Option<&CartesianGrid> {
        match self {
            PhaseGrid::Cartesian(g) => Some(g),
            PhaseGrid::Radial(_) => None,
        }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if n == self.len() {
            Ok(())
        } else {
            Err(BgkError::SizeMismatch {
                field: n,
                grid: self.len(),
            })
        }
    }

    /// Quadrature `sum_i w_i v_i`, accumulated in node order.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(sweep::dot(self.weights(), values))
    }

    /// Samples `f(k)` at every node; `k` is `(|k|, 0)` on a radial grid.
    pub fn sample<F: Fn([f64; 2]) -> f64 + Sync + Send>(&self, f: F) -> Vec<f64> {
        match self {
            PhaseGrid::Radial(g) => g.r_nodes.iter().map(|&r| f([r, 0.0])).collect(),
            PhaseGrid::Cartesian(g) => sweep::par_map(g.magnitudes.len(), |i| f(g.node(i))),
        }
    }
}

/// Occupancy values on the nodes of a [`PhaseGrid`], each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    values: Vec<f64>,
}

impl DistributionField {
    /// Validates occupancies: values within [`OCCUPANCY_SLACK`] of `[0, 1]` are
    /// clamped, anything further out is an error.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -OCCUPANCY_SLACK || *v > 1.0 + OCCUPANCY_SLACK {
                return Err(BgkError::OccupancyOutOfRange { node: i, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(DistributionField { values })
    }

    /// Builds a field on `grid`, checking its length.
    pub fn on_grid(grid: &PhaseGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Self::new(values)
    }

    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        DistributionField { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Snaps near-integer index offsets so commensurate shifts stay exact.
fn split_offset(cells: f64) -> (isize, f64) {
    let whole = cells.floor();
    let mut frac = cells - whole;
    let mut whole = whole as isize;
    if frac < 1e-12 {
        frac = 0.0;
    } else if frac > 1.0 - 1e-12 {
        frac = 0.0;
        whole += 1;
    }
    (whole, frac)
}

/// Semi-Lagrangian evaluation `f(k + delta_k)` by bilinear interpolation.
///
/// Points outside the domain read occupancy 0; results are clamped to `[0, 1]`.
pub fn shift_interpolate(values: &[f64], grid: &CartesianGrid, delta_k: [f64; 2]) -> Result<Vec<f64>> {
    let n = grid.nx * grid.ny;
    if values.len() != n {
        return Err(BgkError::SizeMismatch {
            field: values.len(),
            grid: n,
        });
    }
    if grid.nx < MIN_ADVECTION_NODES || grid.ny < MIN_ADVECTION_NODES {
        return Err(BgkError::Grid(format!(
            "advection needs at least {MIN_ADVECTION_NODES} nodes per axis, got {}x{}",
            grid.nx, grid.ny
        )));
    }
    if !(delta_k[0].abs() < grid.k_max && delta_k[1].abs() < grid.k_max) {
        return Err(BgkError::Grid(format!(
            "shift ({:e}, {:e}) exceeds the domain half-width {:e}",
            delta_k[0], delta_k[1], grid.k_max
        )));
    }
    let (mx, ax) = split_offset(delta_k[0] / grid.hx());
    let (my, ay) = split_offset(delta_k[1] / grid.hy());
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let at = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 || ix >= nx || iy >= ny {
            0.0
        } else {
            values[(ix * ny + iy) as usize]
        }
    };
    Ok(sweep::par_map(n, |i| {
        let ix = (i / grid.ny) as isize + mx;
        let iy = (i % grid.ny) as isize + my;
        let mut v = at(ix, iy);
        if ax != 0.0 || ay != 0.0 {
            v = (1.0 - ax) * (1.0 - ay) * v
                + ax * (1.0 - ay) * at(ix + 1, iy)
                + (1.0 - ax) * ay * at(ix, iy + 1)
                + ax * ay * at(ix + 1, iy + 1);
        }
        v.clamp(0.0, 1.0)
    }))
}
