//! Double-exponential quadrature on (0, ∞).
//!
//! The substitution x = e^u turns an integrand with an essential singularity at
//! the origin into one that decays at least exponentially in both directions of
//! u. The map u = c + s·sinh(τ) then makes the decay double exponential in τ and
//! the trapezoid rule in τ converges geometrically as the step is halved.

use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::precision::{adaptive_eval, Certified, PrecisionPolicy};
use crate::scalar::Real;

/// Placement of the nodes in the log variable: u = center + scale·sinh(τ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub center: f64,
    pub scale: f64,
}

/// Extra bits carried while accumulating the trapezoid sums.
pub const GUARD_BITS: u32 = 32;

const H0: f64 = 0.5;
const MAX_LEVELS: u32 = 16;
const NEGLIGIBLE_RUN: usize = 6;
const MAX_ABS_U: f64 = 4.0e5;

/// Integrates `f(u)` over the real line at fixed precision `bits`.
///
/// `f` receives u at `bits + GUARD_BITS` and must return the integrand with
/// respect to u, so the Jacobian e^u of x = e^u belongs to `f`. Step halving
/// stops once two successive levels agree to about `2^(8−bits)`.
pub fn de_integrate<T, F>(mut f: F, window: Window, bits: u32) -> Result<T>
where
    T: Real,
    F: FnMut(&T) -> T,
{
    if !(window.scale > 0.0) || !window.center.is_finite() {
        return Err(Error::InvalidArgument(format!("bad quadrature window {window:?}")));
    }
    let wb = bits + GUARD_BITS;
    let c = T::from_f64(window.center, wb);
    let s = T::from_f64(window.scale, wb);
    let tau_max = (MAX_ABS_U / window.scale).asinh().min(12.0);
    let tiny = T::epsilon(bits) * T::from_f64(1.0 / 1024.0, wb);
    let stop = T::epsilon(bits) * T::from_i64(256, wb);

    let mut node = |tau: f64| -> Option<T> {
        let tt = T::from_f64(tau, wb);
        let u = c.clone() + s.clone() * tt.sinh();
        let v = f(&u) * s.clone() * tt.cosh();
        if v.is_finite_val() {
            Some(v)
        } else {
            None
        }
    };

    // Sum of f·w over τ = first, first ± step, … in one direction.
    let mut walk = |first: f64, step: f64, reference: &T, acc: &mut T| -> Result<()> {
        let mut quiet = 0usize;
        let mut k = 0u64;
        loop {
            let tau = first + step * k as f64;
            if tau.abs() > tau_max {
                return Ok(());
            }
            match node(tau) {
                Some(v) => {
                    let scale = if reference.is_zero_val() { acc.abs_val() } else { reference.clone() };
                    let negligible = v.abs_val() < scale * tiny.clone();
                    *acc = acc.clone() + v;
                    if negligible {
                        quiet += 1;
                    } else {
                        quiet = 0;
                    }
                }
                None if tau.abs() > 1.0 => quiet += 1,
                None => {
                    return Err(Error::NonConvergence(format!("integrand not finite near the window center (τ = {tau})")))
                }
            }
            if quiet >= NEGLIGIBLE_RUN && tau.abs() > 1.0 {
                return Ok(());
            }
            k += 1;
        }
    };

    let zero = T::zero(wb);
    let mut sum = zero.clone();
    walk(0.0, H0, &zero, &mut sum)?;
    walk(-H0, -H0, &zero, &mut sum)?;
    let mut h = H0;
    let mut est = sum.clone() * T::from_f64(h, wb);
    let mut last_diff: Option<T> = None;
    let mut stalls = 0;
    for _ in 1..=MAX_LEVELS {
        h /= 2.0;
        let reference = est.abs_val() * T::from_f64(1.0 / h, wb);
        walk(h, 2.0 * h, &reference, &mut sum)?;
        walk(-h, -2.0 * h, &reference, &mut sum)?;
        let next = sum.clone() * T::from_f64(h, wb);
        let diff = (next.clone() - est.clone()).abs_val();
        if diff <= next.abs_val() * stop.clone() {
            return Ok(next.with_precision(bits));
        }
        if let Some(ld) = &last_diff {
            if diff >= *ld {
                stalls += 1;
                if stalls >= 3 {
                    return Err(Error::NonConvergence(format!(
                        "step halving stalled at h = {h:e}, difference {:e}",
                        diff.to_f64_lossy()
                    )));
                }
            } else {
                stalls = 0;
            }
        }
        last_diff = Some(diff);
        est = next;
    }
    Err(Error::NonConvergence(format!("no agreement after {MAX_LEVELS} halvings")))
}

/// Finds a node window from a coarse scan of `log_mag(u)`, the log-magnitude of
/// the integrand in u.
pub fn locate_window<F: Fn(f64) -> f64>(log_mag: F) -> Result<Window> {
    let step = 0.25;
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut u = -200.0;
    while u <= 200.0 {
        let v = log_mag(u);
        if v.is_finite() && v > best.0 {
            best = (v, u);
        }
        u += step;
    }
    let (peak, center) = best;
    if !peak.is_finite() {
        return Err(Error::NonConvergence("integrand vanishes on the scan range".into()));
    }
    let drop = 40.0;
    let reach = |dir: f64| {
        let mut d = step;
        while d < 400.0 {
            let v = log_mag(center + dir * d);
            if !(v > peak - drop) {
                return d;
            }
            d += step;
        }
        d
    };
    let w = reach(1.0).min(reach(-1.0));
    Ok(Window { center, scale: (w / 4.0).max(0.02) })
}

/// `∫₀^∞ g(x) dx` with an empirically certified relative error.
pub fn de_quadrature<G>(g: G, policy: &PrecisionPolicy) -> Result<Certified<Float>>
where
    G: Fn(&Float) -> Float,
{
    let log_mag = |u: f64| {
        let x = Float::with_val(64, u).exp();
        let v = g(&x) * &x;
        if v.is_zero() || !v.is_finite() {
            f64::NEG_INFINITY
        } else {
            v.abs().ln().to_f64()
        }
    };
    let window = locate_window(log_mag)?;
    adaptive_eval(policy, |bits| {
        de_integrate(
            |u: &Float| {
                let x = Float::with_val(u.prec(), u.exp_ref());
                g(&x) * x
            },
            window,
            bits,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_gamma_integral() {
        let w = Window { center: 0.0, scale: 1.0 };
        let v: f64 = de_integrate(|u: &f64| (3.0 * u - u.exp()).exp(), w, 53).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn window_brackets_peak() {
        let w = locate_window(|u| 3.0 * u - u.exp()).unwrap();
        assert!((w.center - 3f64.ln()).abs() <= 0.25);
    }
}
