//! Closed-form gain/loss integrals, the BGK collision frequency, and the
//! per-mode integrand of the mass-conservation equation.
//!
//! With `x = (eps - mu) / k_B T` and `beta = b / k_B T`, every occupancy factor
//! below is a logistic of `x +- beta`. Quotients of the form
//! `(1 + e^x) / (1 + e^y)` are evaluated with all exponents shifted to be
//! non-positive, so nothing overflows for any finite `(eps, mu)`.

use crate::error::{BgkError, Result};
use crate::material::{build_modes, logistic, PhysicalParams, ScatteringMode};
use crate::sweep;

/// Physical parameters, scattering modes and the cached `1 / (hbar v_F)^2`.
#[derive(Debug, Clone)]
pub struct KernelContext {
    params: PhysicalParams,
    modes: Vec<ScatteringMode>,
    prefactor: f64,
}

/// Per-mode constants in thermal units.
#[derive(Debug, Clone, Copy)]
struct ModeTerm {
    weight: f64,
    a: f64,
    b: f64,
    beta: f64,
}

#[inline]
fn positive_part(z: f64) -> f64 {
    z.max(0.0)
}

/// `(1 + e^x) / (1 + e^y)` without overflow.
#[inline]
fn exp_ratio(x: f64, y: f64) -> f64 {
    let m = x.max(y).max(0.0);
    let base = (-m).exp();
    (base + (x - m).exp()) / (base + (y - m).exp())
}

/// `coef * z`, with a zero coefficient annihilating infinities.
#[inline]
fn mul0(coef: f64, z: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * z
    }
}

/// Validation mode for occupancy inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Out-of-range occupancies are errors.
    #[default]
    Checked,
    /// Out-of-range occupancies are clamped and flagged.
    Fast,
}

impl KernelContext {
    pub fn new(params: PhysicalParams, modes: Vec<ScatteringMode>) -> Result<Self> {
        params.validate()?;
        if modes.is_empty() {
            return Err(BgkError::param("modes", "at least one scattering mode is required"));
        }
        for m in &modes {
            m.validate()?;
        }
        let hv = params.hbar_vf();
        Ok(KernelContext {
            params,
            modes,
            prefactor: 1.0 / (hv * hv),
        })
    }

    /// Context with the three physical channels of `params`.
    pub fn from_params(params: PhysicalParams) -> Result<Self> {
        let modes = build_modes(&params)?;
        Self::new(params, modes)
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn modes(&self) -> &[ScatteringMode] {
        &self.modes
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn k_b_t(&self) -> f64 {
        self.params.k_b_t
    }

    fn terms(&self) -> impl Iterator<Item = ModeTerm> + '_ {
        let kt = self.params.k_b_t;
        self.modes.iter().map(move |m| ModeTerm {
            weight: self.prefactor * m.c,
            a: m.occupation,
            b: m.quantum,
            beta: m.quantum / kt,
        })
    }

    fn check_energy(op: &'static str, eps: f64) -> Result<()> {
        if eps >= 0.0 && eps.is_finite() {
            Ok(())
        } else {
            Err(BgkError::domain(
                op,
                format!("energy must be finite and >= 0, got {eps}"),
            ))
        }
    }

    fn check_mu(op: &'static str, mu: f64) -> Result<()> {
        if mu.is_finite() {
            Ok(())
        } else {
            Err(BgkError::domain(op, "chemical potential must be finite"))
        }
    }

    fn check_psi_args(op: &'static str, eps: f64, xi: f64, a: f64, b: f64) -> Result<()> {
        Self::check_energy(op, eps)?;
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(BgkError::domain(op, format!("xi must be finite and > 0, got {xi}")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(BgkError::domain(op, format!("a must be >= 0, got {a}")));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(BgkError::domain(op, format!("b must be >= 0, got {b}")));
        }
        Ok(())
    }

    /// Equilibrium occupancy `F(eps, mu)`.
    #[inline]
    pub fn equilibrium(&self, eps: f64, mu: f64) -> f64 {
        self.params.fermi_dirac(eps, mu)
    }

    /// Energy-weighted kernel with `xi = exp(-mu / k_B T)`:
    /// `(a+1)(eps+b) / (1 + xi e^{(eps+b)/kT}) + a [eps-b]+ / (1 + xi e^{[eps-b]+/kT})`.
    pub fn psi(&self, eps: f64, xi: f64, a: f64, b: f64) -> Result<f64> {
        Self::check_psi_args("psi", eps, xi, a, b)?;
        Ok(self.psi_ln(eps, xi.ln(), a, b))
    }

    /// `psi` parametrised by `ln xi`, so that `xi` itself never has to be formed.
    pub(crate) fn psi_ln(&self, eps: f64, ln_xi: f64, a: f64, b: f64) -> f64 {
        let kt = self.params.k_b_t;
        let up = eps + b;
        let down = positive_part(eps - b);
        let gain = mul0((a + 1.0) * up, logistic(-(ln_xi + up / kt)));
        let absorb = mul0(a * down, logistic(-(ln_xi + down / kt)));
        gain + absorb
    }

    /// Gain-side integral `Phi_0(eps, mu)`, 1/s.
    pub fn phi0(&self, eps: f64, mu: f64) -> Result<f64> {
        Self::check_energy("phi0", eps)?;
        Self::check_mu("phi0", mu)?;
        let ln_xi = -mu / self.params.k_b_t;
        Ok(self.terms().map(|t| t.weight * self.psi_ln(eps, ln_xi, t.a, t.b)).sum())
    }

    /// Loss-side integral `Phi_1(eps, mu)`, 1/s.
    pub fn phi1(&self, eps: f64, mu: f64) -> Result<f64> {
        Self::check_energy("phi1", eps)?;
        Self::check_mu("phi1", mu)?;
        let x = (eps - mu) / self.params.k_b_t;
        Ok(self
            .terms()
            .map(|t| {
                // 1 - F(z) = logistic((z - mu) / kT)
                let emit = mul0((t.a + 1.0) * positive_part(eps - t.b), logistic(x - t.beta));
                let absorb = mul0(t.a * (eps + t.b), logistic(x + t.beta));
                t.weight * (emit + absorb)
            })
            .sum())
    }

    /// Collision frequency `kappa = Phi_0 / F`, 1/s.
    pub fn kappa(&self, eps: f64, mu: f64) -> Result<f64> {
        Self::check_energy("kappa", eps)?;
        Self::check_mu("kappa", mu)?;
        Ok(self.kappa_unchecked(eps, mu))
    }

    #[inline]
    pub(crate) fn kappa_unchecked(&self, eps: f64, mu: f64) -> f64 {
        let x = (eps - mu) / self.params.k_b_t;
        let mut sum = 0.0;
        for t in self.terms() {
            let mut v = mul0((t.a + 1.0) * (eps + t.b), exp_ratio(x, x + t.beta));
            if eps > t.b {
                v += t.a * (eps - t.b) * exp_ratio(x, x - t.beta);
            }
            sum += t.weight * v;
        }
        sum
    }

    /// BGK right-hand side `kappa (F - f)` in checked mode.
    pub fn bgk_rhs(&self, f_value: f64, eps: f64, mu: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&f_value) {
            return Err(BgkError::domain(
                "bgk_rhs",
                format!("occupancy must lie in [0, 1], got {f_value}"),
            ));
        }
        Ok(self.kappa(eps, mu)? * (self.equilibrium(eps, mu) - f_value))
    }

    /// BGK right-hand side with `f` clamped into `[0, 1]`; the flag reports a clamp.
    pub fn bgk_rhs_fast(&self, f_value: f64, eps: f64, mu: f64) -> (f64, bool) {
        let clamped = f_value.clamp(0.0, 1.0);
        let rhs = self.kappa_unchecked(eps, mu) * (self.equilibrium(eps, mu) - clamped);
        (rhs, clamped != f_value)
    }

    /// Dispatches on [`EvalMode`]; fast mode logs clamps at debug level.
    pub fn bgk_rhs_with(&self, mode: EvalMode, f_value: f64, eps: f64, mu: f64) -> Result<f64> {
        match mode {
            EvalMode::Checked => self.bgk_rhs(f_value, eps, mu),
            EvalMode::Fast => {
                let (v, clamped) = self.bgk_rhs_fast(f_value, eps, mu);
                if clamped {
                    log::debug!("bgk_rhs: occupancy {f_value} clamped into [0, 1]");
                }
                Ok(v)
            }
        }
    }

    /// Mass-equation integrand `psi(eps, xi; a, b) * {1 - phi [1 + xi e^{eps/kT}]}`.
    pub fn lambda_fn(&self, eps: f64, xi: f64, a: f64, b: f64, phi: f64) -> Result<f64> {
        self.check_lambda_args("lambda_fn", eps, xi, a, b, phi)?;
        Ok(LambdaParts::new(self.params.k_b_t, eps, xi.ln(), a, b, phi).value())
    }

    /// Analytic envelope `(lower, upper)` of [`Self::lambda_fn`], independent of `xi`
    /// except through the explicit `1 / (xi beta w)` terms of the upper bound.
    pub fn lambda_bounds(&self, eps: f64, xi: f64, a: f64, b: f64, phi: f64) -> Result<(f64, f64)> {
        self.check_lambda_args("lambda_bounds", eps, xi, a, b, phi)?;
        let parts = LambdaParts::new(self.params.k_b_t, eps, xi.ln(), a, b, phi);
        Ok((parts.lower(), parts.upper()))
    }

    pub(crate) fn lambda_ln(&self, eps: f64, ln_xi: f64, a: f64, b: f64, phi: f64) -> f64 {
        LambdaParts::new(self.params.k_b_t, eps, ln_xi, a, b, phi).value()
    }

    fn check_lambda_args(&self, op: &'static str, eps: f64, xi: f64, a: f64, b: f64, phi: f64) -> Result<()> {
        Self::check_psi_args(op, eps, xi, a, b)?;
        if !(0.0..=1.0).contains(&phi) {
            return Err(BgkError::domain(op, format!("phi must lie in [0, 1], got {phi}")));
        }
        Ok(())
    }
}

/// Shared sub-expressions of `lambda` and its bounds.
///
/// `lambda = A [c1 u1 - q1] + B [c2 u2 - q2]` with `A = (a+1)(eps+b)`,
/// `B = a [eps-b]+`, `u1 = 1/(1 + xi beta w)`, `u2 = 1/(1 + xi w / beta)`,
/// `c1 = beta^-1 phi + 1 - phi`, `c2 = beta phi + 1 - phi`, `q1 = phi / beta`,
/// `q2 = beta phi`. The bounds replace `c1, c2` by their extreme values and
/// `u1, u2` by `1/t1, 1/t2`. Building all three from the same rounded
/// intermediates keeps `lower <= lambda <= upper` exact in floating point.
struct LambdaParts {
    big_a: f64,
    big_b: f64,
    beta: f64,
    beta_inv: f64,
    t1: f64,
    t2: f64,
    u1: f64,
    u2: f64,
    phi: f64,
}

impl LambdaParts {
    fn new(kt: f64, eps: f64, ln_xi: f64, a: f64, b: f64, phi: f64) -> Self {
        let bk = b / kt;
        let t1 = (ln_xi + eps / kt + bk).exp();
        let t2 = (ln_xi + eps / kt - bk).exp();
        LambdaParts {
            big_a: (a + 1.0) * (eps + b),
            big_b: a * positive_part(eps - b),
            beta: bk.exp(),
            beta_inv: (-bk).exp(),
            t1,
            t2,
            u1: 1.0 / (1.0 + t1),
            u2: 1.0 / (1.0 + t2),
            phi,
        }
    }

    fn q1(&self) -> f64 {
        self.beta_inv * self.phi
    }

    fn q2(&self) -> f64 {
        self.beta * self.phi
    }

    fn value(&self) -> f64 {
        let p = self.phi;
        let c1 = (self.q1() + (1.0 - p)).clamp(self.beta_inv, 1.0);
        let c2 = (self.q2() + (1.0 - p)).clamp(1.0, self.beta);
        mul0(self.big_a, c1 * self.u1 - self.q1()) + mul0(self.big_b, c2 * self.u2 - self.q2())
    }

    fn upper(&self) -> f64 {
        let v1 = 1.0 / self.t1;
        let v2 = 1.0 / self.t2;
        mul0(self.big_a, v1 - self.q1()) + mul0(self.big_b, self.beta * v2 - self.q2())
    }

    fn lower(&self) -> f64 {
        mul0(self.big_a, self.beta_inv * self.u1 - self.q1()) + mul0(self.big_b, -self.q2())
    }
}

/// Collision frequency and equilibrium occupancy tabulated on a set of node
/// energies for one chemical potential.
#[derive(Debug, Clone)]
pub struct NodeKernels {
    pub mu: f64,
    pub kappa: Vec<f64>,
    pub equilibrium: Vec<f64>,
}

impl NodeKernels {
    pub fn evaluate(ctx: &KernelContext, energies: &[f64], mu: f64) -> Self {
        let pairs = sweep::par_map(energies.len(), |i| {
            let e = energies[i];
            (ctx.kappa_unchecked(e, mu), ctx.equilibrium(e, mu))
        });
        let (kappa, equilibrium) = pairs.into_iter().unzip();
        NodeKernels { mu, kappa, equilibrium }
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn max_kappa(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }
}
