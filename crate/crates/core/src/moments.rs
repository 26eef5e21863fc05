//! Moments of w(x; t, α) = x^α e^{−x−t/x} and the Bessel function K_ν.
//!
//! For t > 0 every moment is available by two quadratures: directly, and through
//! μ_j = 2 t^{ν/2} K_ν(2√t) with ν = j + α + 1, where K_ν uses its integral
//! representation. Tables are built from μ_0 and μ_1 with the integration by
//! parts recurrence μ_{j+1} = (j + α + 1) μ_j + t μ_{j−1}, whose terms are all
//! positive, and the last entry is checked against a fresh quadrature.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::precision::{adaptive_eval, Certified, PrecisionPolicy};
use crate::numerics::quadrature::{de_integrate, Window};
use crate::scalar::{rel_diff, Real};
use crate::CertifiedReal;

/// The weight parameters together with the precision policy used for them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub t: f64,
    pub alpha: f64,
    pub policy: PrecisionPolicy,
}

impl WeightParams {
    pub fn new(t: f64, alpha: f64) -> Result<Self> {
        Self::with_policy(t, alpha, PrecisionPolicy::default())
    }

    pub fn with_policy(t: f64, alpha: f64, policy: PrecisionPolicy) -> Result<Self> {
        let p = WeightParams { t, alpha, policy };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::Domain(format!("t must be finite and ≥ 0, got {}", self.t)));
        }
        if !(self.alpha > -1.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!("α must be finite and > −1, got {}", self.alpha)));
        }
        self.policy.validate()
    }

    /// Same t and policy with α replaced by α + `shift`.
    pub fn shift_alpha(&self, shift: f64) -> WeightParams {
        WeightParams { alpha: self.alpha + shift, ..*self }
    }

    pub fn with_t(&self, t: f64) -> WeightParams {
        WeightParams { t, ..*self }
    }

    /// True for −1 < α ≤ 0, the range outside the classical ladder-operator setting.
    pub fn alpha_flagged(&self) -> bool {
        self.alpha <= 0.0
    }
}

/// Node window for ∫ exp(a u − e^u − c e^{−u}) du.
pub(crate) fn two_sided_gamma_window(a: f64, c: f64) -> Window {
    let peak = if c > 0.0 { (a + (a * a + 4.0 * c).sqrt()) / 2.0 } else { a };
    let peak = peak.max(f64::MIN_POSITIVE);
    let width = 1.0 / (peak + c / peak).sqrt();
    Window { center: peak.ln(), scale: width }
}

/// ∫₀^∞ x^{a−1} e^{−x−c/x} dx at fixed precision `bits`.
fn two_sided_gamma<T: Real>(a: &T, c: &T, bits: u32) -> Result<T> {
    let window = two_sided_gamma_window(a.to_f64_lossy(), c.to_f64_lossy());
    let wb = bits + crate::numerics::quadrature::GUARD_BITS;
    let a = a.with_precision(wb);
    let c = c.with_precision(wb);
    de_integrate(
        |u: &T| {
            let eu = u.exp();
            let tail = if c.is_zero_val() { T::zero(wb) } else { c.clone() / eu.clone() };
            (a.clone() * u.clone() - eu - tail).exp()
        },
        window,
        bits,
    )
}

/// K_ν(z) at fixed precision from K_ν(z) = ½ (z/2)^ν ∫₀^∞ exp(−x − z²/(4x)) x^{−ν−1} dx.
pub fn bessel_k_at<T: Real>(nu: &T, z: &T, bits: u32) -> Result<T> {
    if !(z.to_f64_lossy() > 0.0) {
        return Err(Error::Domain("K_ν(z) needs z > 0".into()));
    }
    let half = T::from_f64(0.5, bits);
    let zh = z.clone() * half.clone();
    let integral = two_sided_gamma(&(-nu.clone()), &(zh.clone() * zh.clone()), bits)?;
    Ok(half * zh.powf(nu) * integral)
}

/// Certified K_ν(z) for ν > 0, z > 0.
pub fn bessel_k(nu: f64, z: f64, policy: &PrecisionPolicy) -> Result<CertifiedReal> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("K_ν(z) needs z > 0, got {z}")));
    }
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("K_ν(z) needs ν > 0, got {nu}")));
    }
    adaptive_eval(policy, |bits| bessel_k_at(&Float::with_val(bits, nu), &Float::with_val(bits, z), bits))
}

/// μ_j by direct quadrature of ∫ x^{j+α} e^{−x−t/x} dx, at the precision of `t`.
pub fn moment_direct_at<T: Real>(j: usize, t: &T, alpha: &T) -> Result<T> {
    let bits = t.precision();
    let a = alpha.clone() + T::from_i64(j as i64 + 1, bits);
    if t.is_zero_val() {
        return Ok(a.gamma());
    }
    two_sided_gamma(&a, t, bits)
}

/// μ_j through 2 t^{ν/2} K_ν(2√t), at the precision of `t`.
pub fn moment_bessel_at<T: Real>(j: usize, t: &T, alpha: &T) -> Result<T> {
    let bits = t.precision();
    let nu = alpha.clone() + T::from_i64(j as i64 + 1, bits);
    if t.is_zero_val() {
        return Ok(nu.gamma());
    }
    let z = t.sqrt() * T::from_i64(2, bits);
    let half_nu = nu.clone() * T::from_f64(0.5, bits);
    Ok(T::from_i64(2, bits) * t.powf(&half_nu) * bessel_k_at(&nu, &z, bits)?)
}

/// μ_0..μ_{count−1} at the precision of `t`: gamma values at t = 0, otherwise
/// quadrature for μ_0, μ_1 and the three-term moment recurrence.
pub fn moment_sequence<T: Real>(count: usize, t: &T, alpha: &T) -> Result<Vec<T>> {
    let bits = t.precision();
    let alpha = alpha.with_precision(bits);
    let mut mu = Vec::with_capacity(count);
    if count == 0 {
        return Ok(mu);
    }
    if t.is_zero_val() {
        let mut g = (alpha.clone() + T::one(bits)).gamma();
        for j in 0..count {
            mu.push(g.clone());
            g = g * (alpha.clone() + T::from_i64(j as i64 + 1, bits));
        }
        return Ok(mu);
    }
    mu.push(moment_direct_at(0, t, &alpha)?);
    if count > 1 {
        mu.push(moment_direct_at(1, t, &alpha)?);
    }
    for j in 1..count.saturating_sub(1) {
        let next = (alpha.clone() + T::from_i64(j as i64 + 1, bits)) * mu[j].clone() + t.clone() * mu[j - 1].clone();
        mu.push(next);
    }
    Ok(mu)
}

fn cross_tolerance(a: f64, b: f64, bits: u32) -> f64 {
    a + b + (2f64).powi(16 - bits.min(1000) as i32)
}

/// Certified μ_j. For t > 0 both quadrature routes are evaluated and must agree
/// within their combined bounds; the direct value is returned.
pub fn moment(j: usize, params: &WeightParams) -> Result<CertifiedReal> {
    params.validate()?;
    let (t, alpha) = (params.t, params.alpha);
    let direct = adaptive_eval(&params.policy, |bits| {
        moment_direct_at(j, &Float::with_val(bits, t), &Float::with_val(bits, alpha))
    })?;
    if t == 0.0 {
        return Ok(direct);
    }
    let bessel = adaptive_eval(&params.policy, |bits| {
        moment_bessel_at(j, &Float::with_val(bits, t), &Float::with_val(bits, alpha))
    })?;
    let d = rel_diff(&direct.value, &bessel.value);
    let tol = cross_tolerance(direct.rel_err_bound, bessel.rel_err_bound, direct.bits_used.min(bessel.bits_used));
    if d > tol {
        return Err(Error::CrossCheckMismatch { quantity: format!("mu_{j}"), rel_diff: d, bound: tol });
    }
    Ok(direct)
}

/// μ_0..μ_J at one (t, α).
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub params: WeightParams,
    pub mu: Vec<CertifiedReal>,
}

impl MomentTable {
    pub fn values(&self) -> Vec<Float> {
        self.mu.iter().map(|m| m.value.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Smallest relative margin of μ_{j−1}μ_{j+1} − μ_j² over the table.
    pub fn log_convexity_margin(&self) -> Option<f64> {
        self.mu
            .windows(3)
            .map(|w| {
                let lhs = Float::with_val(w[0].value.prec(), &w[0].value * &w[2].value);
                let rhs = Float::with_val(w[1].value.prec(), w[1].value.square_ref());
                ((lhs.clone() - &rhs) / lhs).to_f64()
            })
            .reduce(f64::min)
    }
}

/// Certified μ_0..μ_J. The recurrence seeds μ_0, μ_1 are checked against the
/// Bessel route and μ_J against direct quadrature; log-convexity is asserted.
pub fn moment_table(j_max: usize, params: &WeightParams) -> Result<MomentTable> {
    params.validate()?;
    let (t, alpha) = (params.t, params.alpha);
    let count = j_max + 1;
    let seq = adaptive_eval(&params.policy, |bits| {
        moment_sequence(count, &Float::with_val(bits, t), &Float::with_val(bits, alpha))
    })?;
    let bits = seq.bits_used;
    if t > 0.0 {
        let tf = Float::with_val(bits, t);
        let af = Float::with_val(bits, alpha);
        let tol = cross_tolerance(2.0 * seq.rel_err_bound, 0.0, bits);
        let mut checks = vec![(0usize, moment_bessel_at(0, &tf, &af)?)];
        if count > 1 {
            checks.push((1, moment_bessel_at(1, &tf, &af)?));
        }
        if count > 2 {
            checks.push((j_max, moment_direct_at(j_max, &tf, &af)?));
        }
        for (j, v) in checks {
            let d = rel_diff(&seq.value[j], &v);
            if d > tol {
                return Err(Error::CrossCheckMismatch { quantity: format!("mu_{j}"), rel_diff: d, bound: tol });
            }
        }
    }
    let table = MomentTable {
        params: *params,
        mu: seq
            .value
            .into_iter()
            .map(|v| Certified { value: v, rel_err_bound: seq.rel_err_bound, bits_used: bits })
            .collect(),
    };
    if let Some(m) = table.log_convexity_margin() {
        if m < -seq.rel_err_bound * 4.0 {
            return Err(Error::PropertyViolation { item: "moment log-convexity".into(), margin: m });
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_matches_direct_quadrature_in_f64() {
        let mu = moment_sequence(6, &1.0f64, &0.5f64).unwrap();
        let direct = moment_direct_at(5, &1.0f64, &0.5f64).unwrap();
        assert!((mu[5] - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn flagged_alpha_range() {
        assert!(WeightParams::new(1.0, -0.5).unwrap().alpha_flagged());
        assert!(WeightParams::new(1.0, 0.0).unwrap().alpha_flagged());
        assert!(!WeightParams::new(1.0, 0.5).unwrap().alpha_flagged());
        assert!(WeightParams::new(-1.0, 0.5).is_err());
        assert!(WeightParams::new(1.0, -1.0).is_err());
    }
}
