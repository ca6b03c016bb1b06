//! Slow reference computations that share no code path with the closed
//! forms: numeric angular integrals, delta-resolved gain and loss integrals,
//! the Fermi-Dirac density integral, and a dense-scan root of the mass
//! residual. [`run_validation`] bundles them into a pass/fail suite.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chemical_potential::{solve_mu, MuSolveOptions};
use crate::error::{BgkError, Result};
use crate::grid::{DistributionField, PhaseGrid, RadialGrid};
use crate::kernels::KernelContext;
use crate::material::{logistic, AngularShape, PhysicalParams, ScatteringMode, EV};
use crate::quadrature::{adaptive_gk, composite_gl};
use crate::sweep;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Composite Gauss-Legendre panels over a full turn.
    pub angular_panels: usize,
    pub angular_order: usize,
    /// Relative tolerance of the adaptive density integral.
    pub density_rel_tol: f64,
    /// Samples of the dense chemical-potential scan.
    pub scan_samples: usize,
    /// Scan interval, J.
    pub scan_range: (f64, f64),
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            angular_panels: 16,
            angular_order: 16,
            density_rel_tol: 1e-14,
            scan_samples: 2000,
            scan_range: (-EV, EV),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.angular_panels < 1 || self.angular_order < 2 {
            return Err(BgkError::param("angular quadrature", "needs >= 1 panel of order >= 2"));
        }
        if self.scan_samples < 1000 {
            return Err(BgkError::param(
                "scan_samples",
                format!("must be >= 1000, got {}", self.scan_samples),
            ));
        }
        let (lo, hi) = self.scan_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(BgkError::param("scan_range", "must be a finite increasing interval"));
        }
        if !(self.density_rel_tol > 0.0) {
            return Err(BgkError::param("density_rel_tol", "must be > 0"));
        }
        Ok(())
    }
}

fn full_turn<F: Fn(f64) -> f64>(f: F, cfg: &OracleConfig) -> f64 {
    composite_gl(f, 0.0, 2.0 * PI, cfg.angular_panels, cfg.angular_order)
}

/// `int_0^{2 pi} G(cos t) dt` by quadrature.
pub fn angular_coefficient_numeric(shape: &AngularShape, cfg: &OracleConfig) -> f64 {
    full_turn(|t| shape.eval(t.cos()), cfg)
}

/// Convex angle between two plane vectors.
fn convex_angle(u: [f64; 2], v: [f64; 2]) -> f64 {
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

/// Longitudinal and transverse optical squared matrix elements for the pair
/// `(k, k')`, built from the angles each wave vector makes with `k' - k`.
pub fn optical_pair(params: &PhysicalParams, k: [f64; 2], kp: [f64; 2]) -> (f64, f64) {
    let pref = PI * params.d_o * params.d_o / (params.sigma_m * params.omega_o) / (4.0 * PI * PI);
    let q = [kp[0] - k[0], kp[1] - k[1]];
    let c = (convex_angle(k, q) + convex_angle(kp, q)).cos();
    (pref * (1.0 - c), pref * (1.0 + c))
}

/// Unintegrated angular shapes written directly from the phonon rates. The
/// combined optical entry is `None`: its angle dependence is not a function
/// of `cos(theta_{k,k'})` alone and is integrated geometrically instead.
fn reference_shape(label: &str, p: &PhysicalParams) -> Option<Option<AngularShape>> {
    let norm = 1.0 / (4.0 * PI * PI);
    match label {
        "acoustic" => Some(Some(AngularShape {
            prefactor: norm * PI * p.d_ac * p.d_ac * p.k_b_t / (2.0 * p.hbar * p.sigma_m * p.v_p * p.v_p),
            constant: 1.0,
            cosine: 1.0,
        })),
        "K" => Some(Some(AngularShape {
            prefactor: norm * 2.0 * PI * p.d_k * p.d_k / (p.sigma_m * p.omega_k),
            constant: 1.0,
            cosine: -1.0,
        })),
        "optical" => Some(None),
        _ => None,
    }
}

/// Numeric angular coefficient of `mode`. Standard channels are integrated
/// from their rate expressions; other modes from their stored shape.
pub fn mode_coefficient_numeric(mode: &ScatteringMode, params: &PhysicalParams, cfg: &OracleConfig) -> f64 {
    match reference_shape(&mode.label, params) {
        Some(Some(shape)) => angular_coefficient_numeric(&shape, cfg),
        Some(None) => {
            // Incoming |k| and the absorption partner |k'| = |k| + omega / v_F.
            let r = 0.1 * EV / params.hbar_vf();
            let rp = r + params.omega_o / params.v_f;
            let k = [r * 0.3f64.cos(), r * 0.3f64.sin()];
            full_turn(
                |t| {
                    let (lo, to) = optical_pair(params, k, [rp * t.cos(), rp * t.sin()]);
                    lo + to
                },
                cfg,
            )
        }
        None => angular_coefficient_numeric(&mode.shape, cfg),
    }
}

/// The two delta-resolved pieces of one mode's gain or loss integral:
/// `(upper, lower)` for the partner at `|k'| = |k| + omega / v_F` and
/// `|k'| = |k| - omega / v_F` respectively.
fn delta_branches<W>(
    ctx: &KernelContext,
    mode: &ScatteringMode,
    eps: f64,
    cfg: &OracleConfig,
    occupancy: W,
) -> (f64, f64)
where
    W: Fn(f64) -> f64,
{
    let p = ctx.params();
    let hv = p.hbar_vf();
    let r = eps / hv;
    let theta = 0.7;
    let angular = full_turn(|t| mode.shape.eval((t - theta).cos()), cfg);
    let dr = mode.quantum / hv;
    let branch = |rp: f64| {
        if rp < 0.0 {
            0.0
        } else {
            // int delta(hbar v_F (r' - rp)) r' dr' = rp / (hbar v_F)
            angular * rp / hv * occupancy(hv * rp)
        }
    };
    (branch(r + dr), branch(r - dr))
}

/// Gain integral `Phi_0` with each energy delta resolved in `|k'|`.
pub fn phi0_bruteforce(eps: f64, mu: f64, ctx: &KernelContext, cfg: &OracleConfig) -> f64 {
    let p = ctx.params();
    ctx.modes()
        .iter()
        .map(|m| {
            let (up, down) = delta_branches(ctx, m, eps, cfg, |e| p.fermi_dirac(e, mu));
            (m.occupation + 1.0) * up + m.occupation * down
        })
        .sum()
}

/// Loss integral `Phi_1` with each energy delta resolved in `|k'|`.
pub fn phi1_bruteforce(eps: f64, mu: f64, ctx: &KernelContext, cfg: &OracleConfig) -> f64 {
    let kt = ctx.k_b_t();
    ctx.modes()
        .iter()
        .map(|m| {
            let (up, down) = delta_branches(ctx, m, eps, cfg, |e| logistic((e - mu) / kt));
            m.occupation * up + (m.occupation + 1.0) * down
        })
        .sum()
}

/// `(2 pi / (hbar v_F)^2) int_0^inf s F(s, mu) ds` by adaptive quadrature.
pub fn equilibrium_density(mu: f64, params: &PhysicalParams, cfg: &OracleConfig) -> f64 {
    let kt = params.k_b_t;
    let m = mu / kt;
    let top = m.max(0.0) + 40.0;
    let integrand = |x: f64| x * logistic(m - x);
    let integral = if m > 0.0 {
        adaptive_gk(integrand, 0.0, m, 0.0, cfg.density_rel_tol)
            + adaptive_gk(integrand, m, top, 0.0, cfg.density_rel_tol)
    } else {
        adaptive_gk(integrand, 0.0, top, 0.0, cfg.density_rel_tol)
    };
    2.0 * PI * kt * kt / (params.hbar_vf() * params.hbar_vf()) * integral
}

/// `mu` with `equilibrium_density(mu) = density`, by bisection.
pub fn invert_equilibrium_density(density: f64, params: &PhysicalParams, cfg: &OracleConfig) -> Result<f64> {
    if !(density.is_finite() && density > 0.0) {
        return Err(BgkError::param(
            "density",
            format!("must be finite and > 0, got {density}"),
        ));
    }
    let g = |mu: f64| equilibrium_density(mu, params, cfg) - density;
    let (mut lo, mut hi) = (-EV, EV);
    let mut tries = 0;
    while g(lo) > 0.0 || g(hi) < 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        tries += 1;
        if tries > 20 {
            return Err(BgkError::Oracle(format!("density {density:e} not bracketed")));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mass residual assembled from the per-mode `lambda` integrands.
pub fn lambda_residual(f: &[f64], mu: f64, ctx: &KernelContext, grid: &PhaseGrid) -> f64 {
    let energies = grid.energies(ctx.params());
    let w = grid.weights();
    let ln_xi = -mu / ctx.k_b_t();
    let terms = sweep::par_map(f.len(), |i| {
        let s: f64 = ctx
            .modes()
            .iter()
            .map(|m| m.c * ctx.lambda_ln(energies[i], ln_xi, m.occupation, m.quantum, f[i]))
            .sum();
        w[i] * ctx.prefactor() * s
    });
    sweep::ordered_sum(terms)
}

/// Root of the mass residual by sampling `cfg.scan_samples` points over
/// `cfg.scan_range` and bisecting the single sign change. Zero or several
/// sign changes are errors.
pub fn mu_scan(f: &DistributionField, ctx: &KernelContext, grid: &PhaseGrid, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    grid.check_len(f.len())?;
    let v = f.values();
    let (lo, hi) = cfg.scan_range;
    let n = cfg.scan_samples;
    let mus: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
    let signs: Vec<bool> = mus.iter().map(|&m| lambda_residual(v, m, ctx, grid) >= 0.0).collect();
    let changes: Vec<usize> = (0..n - 1).filter(|&j| signs[j] != signs[j + 1]).collect();
    match changes.as_slice() {
        [j] if !signs[*j] => {
            let (mut a, mut b) = (mus[*j], mus[*j + 1]);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if lambda_residual(v, mid, ctx, grid) < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            Ok(0.5 * (a + b))
        }
        [_] => Err(BgkError::Oracle("residual decreases across its sign change".into())),
        [] => Err(BgkError::Oracle(format!(
            "no sign change on [{:e}, {:e}] J; residual is {} throughout",
            lo,
            hi,
            if signs[0] { "non-negative" } else { "negative" }
        ))),
        many => Err(BgkError::Oracle(format!("{} sign changes found", many.len()))),
    }
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, max_error: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `check,max_error,tolerance,status` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,max_error,tolerance,status\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{:e},{:e},{}\n",
                c.name,
                c.max_error,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Low-discrepancy points in `[0, 1)^2`.
fn sample_points(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let g1 = 0.754_877_666_246_692_8;
    let g2 = 0.569_840_290_998_053_3;
    (1..=n).map(move |i| ((0.5 + g1 * i as f64).fract(), (0.5 + g2 * i as f64).fract()))
}

/// Runs every reference cross-check against the kernels of `ctx`.
pub fn run_validation(ctx: &KernelContext, cfg: &OracleConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let p = ctx.params();
    let kt = ctx.k_b_t();
    let mut checks = Vec::new();

    let err = ctx
        .modes()
        .iter()
        .map(|m| rel_err(m.c, mode_coefficient_numeric(m, p, cfg)))
        .fold(0.0, f64::max);
    checks.push(CheckResult::new("angular_coefficient", err, 1e-12));

    let pref = PI * p.d_o * p.d_o / (p.sigma_m * p.omega_o) / (4.0 * PI * PI);
    let err = sample_points(200)
        .map(|(u, v)| {
            let (r, rp) = ((0.05 + u) * EV / p.hbar_vf(), (0.05 + v) * EV / p.hbar_vf());
            let (lo, to) = optical_pair(
                p,
                [r * (7.0 * u).cos(), r * (7.0 * u).sin()],
                [rp * (5.0 * v).cos(), rp * (5.0 * v).sin()],
            );
            rel_err(lo + to, 2.0 * pref)
        })
        .fold(0.0, f64::max);
    checks.push(CheckResult::new("optical_cosine_cancellation", err, 1e-12));

    let points: Vec<(f64, f64)> = sample_points(100)
        .map(|(u, v)| (40.0 * kt * u, (40.0 * v - 20.0) * kt))
        .collect();
    let mut e0: f64 = 0.0;
    let mut e1: f64 = 0.0;
    for &(eps, mu) in &points {
        e0 = e0.max(rel_err(ctx.phi0(eps, mu)?, phi0_bruteforce(eps, mu, ctx, cfg)));
        e1 = e1.max(rel_err(ctx.phi1(eps, mu)?, phi1_bruteforce(eps, mu, ctx, cfg)));
    }
    checks.push(CheckResult::new("phi0_bruteforce", e0, 1e-8));
    checks.push(CheckResult::new("phi1_bruteforce", e1, 1e-8));

    let mut balance: f64 = 0.0;
    let mut negative: f64 = 0.0;
    for (u, v) in sample_points(2000) {
        let eps = 60.0 * kt * u;
        let mu = (120.0 * v - 60.0) * kt;
        let f = ctx.equilibrium(eps, mu);
        let lhs = ctx.phi0(eps, mu)? * logistic((eps - mu) / kt);
        let rhs = ctx.phi1(eps, mu)? * f;
        balance = balance.max(rel_err(lhs, rhs));
        negative = negative.max(-ctx.kappa(eps, mu)?);
    }
    checks.push(CheckResult::new("detailed_balance", balance, 1e-12));
    checks.push(CheckResult::new("kappa_nonnegative", negative.max(0.0), 0.0));

    let mut violations = 0usize;
    for (i, (u, v)) in sample_points(20_000).enumerate() {
        let m = &ctx.modes()[i % ctx.modes().len()];
        let eps = 30.0 * kt * u;
        let xi = (40.0 * v - 20.0).exp();
        let phi = (0.5 + 0.618_033_988_749_894_9 * i as f64).fract();
        let lam = ctx.lambda_fn(eps, xi, m.occupation, m.quantum, phi)?;
        let (lower, upper) = ctx.lambda_bounds(eps, xi, m.occupation, m.quantum, phi)?;
        if !(lower <= lam && lam <= upper) {
            violations += 1;
        }
    }
    checks.push(CheckResult::new("lambda_envelope", violations as f64, 0.0));

    let mut dens: f64 = 0.0;
    let mut mus: f64 = 0.0;
    for mu_ev in [-0.1, 0.1, 0.3] {
        let mu = mu_ev * EV;
        let grid: PhaseGrid = RadialGrid::new(mu.max(0.0) + 30.0 * kt, 512, p)?.into();
        let f = grid.sample(|k| p.fermi_dirac(p.hbar_vf() * k[0], mu));
        dens = dens.max(rel_err(grid.integrate(&f)?, equilibrium_density(mu, p, cfg)));
        let half = DistributionField::new(f.iter().map(|x| 0.7 * x).collect())?;
        let solved = solve_mu(&half, ctx, &grid, &MuSolveOptions::default())?.mu;
        mus = mus.max((solved - mu_scan(&half, ctx, &grid, cfg)?).abs() / EV);
    }
    checks.push(CheckResult::new("equilibrium_density", dens, 1e-8));
    checks.push(CheckResult::new("mu_scan_agreement_eV", mus, 1e-9));

    Ok(ValidationReport { checks })
}
