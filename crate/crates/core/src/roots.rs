//! Root finding for continuous, strictly increasing scalar functions.
//!
//! The bracket is grown geometrically from a centre point; the root is then
//! refined with the Illinois variant of regula falsi, falling back to
//! bisection whenever the bracket fails to halve over two iterations.

use crate::error::{BgkError, Result};

/// A function value together with the magnitude it is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Stop once the bracket is narrower than this.
    pub abs_tol_x: f64,
    /// Stop once `|value| <= rel_tol * scale`.
    pub rel_tol: f64,
    pub max_expansions: usize,
    pub max_iterations: usize,
    /// Half-width of the first bracket around the centre.
    pub initial_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Residual,
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootReport {
    pub x: f64,
    pub eval: Eval,
    pub iterations: usize,
    pub evaluations: usize,
    pub bracket: (f64, f64),
    pub convergence: Convergence,
}

#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub f_lo: Eval,
    pub hi: f64,
    pub f_hi: Eval,
    pub evaluations: usize,
}

fn sign_name(v: f64) -> &'static str {
    if v < 0.0 {
        "negative"
    } else if v > 0.0 {
        "positive"
    } else if v == 0.0 {
        "zero"
    } else {
        "NaN"
    }
}

fn check(e: Eval, x: f64) -> Result<Eval> {
    if e.value.is_finite() && e.scale.is_finite() {
        Ok(e)
    } else {
        Err(BgkError::NonFinite(format!("function value at x = {x:e}")))
    }
}

/// Finds `lo < hi` with `f(lo) < 0 < f(hi)`, doubling the search step from
/// `initial_width` outward from `center`.
///
/// `first` may carry an already computed `f(center)`.
pub fn expand_bracket<F>(f: &mut F, center: f64, first: Option<Eval>, opts: &RootOptions) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<Eval>,
{
    let mut evaluations = 0;
    let mut eval = |x: f64, n: &mut usize| -> Result<Eval> {
        *n += 1;
        check(f(x)?, x)
    };
    let fc = match first {
        Some(e) => e,
        None => eval(center, &mut evaluations)?,
    };
    let mut lo = (fc.value < 0.0).then_some((center, fc));
    let mut hi = (fc.value > 0.0).then_some((center, fc));
    let mut step = opts.initial_width;
    let mut last = (center, fc, center, fc);
    for _ in 0..opts.max_expansions {
        if let (Some((l, fl)), Some((h, fh))) = (lo, hi) {
            return Ok(Bracket {
                lo: l,
                f_lo: fl,
                hi: h,
                f_hi: fh,
                evaluations,
            });
        }
        if lo.is_none() {
            let x = center - step;
            let e = eval(x, &mut evaluations)?;
            last.0 = x;
            last.1 = e;
            if e.value < 0.0 {
                lo = Some((x, e));
            } else if e.value > 0.0 && hi.is_none_or(|(h, _)| x < h) {
                hi = Some((x, e));
            }
        }
        if hi.is_none() {
            let x = center + step;
            let e = eval(x, &mut evaluations)?;
            last.2 = x;
            last.3 = e;
            if e.value > 0.0 {
                hi = Some((x, e));
            } else if e.value < 0.0 && lo.is_none_or(|(l, _)| x > l) {
                lo = Some((x, e));
            }
        }
        step *= 2.0;
    }
    if let (Some((l, fl)), Some((h, fh))) = (lo, hi) {
        return Ok(Bracket {
            lo: l,
            f_lo: fl,
            hi: h,
            f_hi: fh,
            evaluations,
        });
    }
    let (lo_x, lo_e) = lo.unwrap_or((last.0, last.1));
    let (hi_x, hi_e) = hi.unwrap_or((last.2, last.3));
    Err(BgkError::BracketFailure {
        expansions: opts.max_expansions,
        lo: lo_x,
        hi: hi_x,
        lo_sign: sign_name(lo_e.value),
        hi_sign: sign_name(hi_e.value),
    })
}

#[inline]
fn converged(e: &Eval, opts: &RootOptions) -> bool {
    e.value.abs() <= opts.rel_tol * e.scale.abs()
}

/// Root of an increasing function, warm-started at `center`.
pub fn solve_increasing<F>(mut f: F, center: f64, opts: &RootOptions) -> Result<RootReport>
where
    F: FnMut(f64) -> Result<Eval>,
{
    let fc = check(f(center)?, center)?;
    if converged(&fc, opts) {
        return Ok(RootReport {
            x: center,
            eval: fc,
            iterations: 0,
            evaluations: 1,
            bracket: (center, center),
            convergence: Convergence::Residual,
        });
    }
    let br = expand_bracket(&mut f, center, Some(fc), opts)?;
    refine(f, br, opts, br.evaluations + 1)
}

/// Illinois iteration inside an established bracket.
pub fn refine<F>(mut f: F, br: Bracket, opts: &RootOptions, mut evaluations: usize) -> Result<RootReport>
where
    F: FnMut(f64) -> Result<Eval>,
{
    let (mut a, mut fa, mut b, mut fb) = (br.lo, br.f_lo, br.hi, br.f_hi);
    // Illinois-weighted end values.
    let (mut wa, mut wb) = (fa.value, fb.value);
    let mut side = 0i8;
    let mut width_hist = [b - a, b - a];
    let mut force_bisect = false;

    let best = |a: f64, fa: Eval, b: f64, fb: Eval| {
        if fa.value.abs() <= fb.value.abs() {
            (a, fa)
        } else {
            (b, fb)
        }
    };

    for it in 0..opts.max_iterations {
        let mid = 0.5 * (a + b);
        if b - a <= opts.abs_tol_x || mid <= a || mid >= b {
            let (mut x, mut e) = best(a, fa, b, fb);
            // Plain secant across the final bracket.
            let s = b - fb.value * (b - a) / (fb.value - fa.value);
            if s > a && s < b {
                let fs = check(f(s)?, s)?;
                evaluations += 1;
                if fs.value.abs() < e.value.abs() {
                    (x, e) = (s, fs);
                }
            }
            return Ok(RootReport {
                x,
                eval: e,
                iterations: it,
                evaluations,
                bracket: (a, b),
                convergence: Convergence::Bracket,
            });
        }
        let mut x = b - wb * (b - a) / (wb - wa);
        if force_bisect || !(x > a && x < b) {
            x = mid;
        }
        let fx = check(f(x)?, x)?;
        evaluations += 1;
        if converged(&fx, opts) {
            return Ok(RootReport {
                x,
                eval: fx,
                iterations: it + 1,
                evaluations,
                bracket: (a, b),
                convergence: Convergence::Residual,
            });
        }
        if fx.value < 0.0 {
            a = x;
            fa = fx;
            wa = fx.value;
            if side == -1 {
                wb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            wb = fx.value;
            if side == 1 {
                wa *= 0.5;
            }
            side = 1;
        }
        let width = b - a;
        force_bisect = width > 0.5 * width_hist[0];
        width_hist = [width_hist[1], width];
    }
    Err(BgkError::IterationCap {
        iterations: opts.max_iterations,
        lo: a,
        hi: b,
    })
}
