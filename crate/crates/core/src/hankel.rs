//! Hankel determinants D_n, shifted determinants D̃_n, norms h_n and the
//! determinant form of P_n(0).

use rug::Float;

use crate::error::{Error, Result};
use crate::moments::{moment_sequence, WeightParams};
use crate::numerics::linalg::{hankel_matrix, hankel_minors, lu_determinant};
use crate::numerics::precision::{adaptive_eval, Certified};
use crate::scalar::Field;
use crate::CertifiedReal;

/// D_n and optionally D̃_n at one (t, α).
#[derive(Clone, Debug)]
pub struct HankelValue {
    pub n: usize,
    pub params: WeightParams,
    pub d: CertifiedReal,
    pub d_shifted: Option<CertifiedReal>,
}

fn exact(v: i64, params: &WeightParams) -> CertifiedReal {
    let bits = params.policy.start_bits;
    Certified { value: Float::with_val(bits, v), rel_err_bound: 0.0, bits_used: bits }
}

fn det_at(n: usize, shifted: bool, t: f64, alpha: f64, bits: u32) -> Result<Float> {
    let count = if shifted { 2 * n } else { 2 * n - 1 };
    let mu = moment_sequence(count, &Float::with_val(bits, t), &Float::with_val(bits, alpha))?;
    let d = lu_determinant(hankel_matrix(&mu, n, shifted)?, bits)?;
    if d.is_zero() || d.is_sign_negative() {
        return Err(Error::InsufficientPrecision(format!("Hankel determinant of order {n} is not positive")));
    }
    Ok(d)
}

/// Certified D_n (or D̃_n with `shifted`), by LU with partial pivoting.
/// D_0 = 1 and D̃_0 = 0.
pub fn hankel_det(n: usize, params: &WeightParams, shifted: bool) -> Result<CertifiedReal> {
    params.validate()?;
    if n == 0 {
        return Ok(exact(if shifted { 0 } else { 1 }, params));
    }
    adaptive_eval(&params.policy, |bits| det_at(n, shifted, params.t, params.alpha, bits))
}

pub fn hankel_value(n: usize, params: &WeightParams) -> Result<HankelValue> {
    Ok(HankelValue {
        n,
        params: *params,
        d: hankel_det(n, params, false)?,
        d_shifted: Some(hankel_det(n, params, true)?),
    })
}

/// h_n = D_{n+1}/D_n.
pub fn norm_constant(n: usize, params: &WeightParams) -> Result<CertifiedReal> {
    params.validate()?;
    adaptive_eval(&params.policy, |bits| {
        let top = det_at(n + 1, false, params.t, params.alpha, bits)?;
        if n == 0 {
            return Ok(top);
        }
        Ok(top / det_at(n, false, params.t, params.alpha, bits)?)
    })
}

/// (−1)^n P_n(0) = D_n(t, α+1) / D_n(t, α).
pub fn pn_zero_ratio(n: usize, params: &WeightParams) -> Result<CertifiedReal> {
    params.validate()?;
    if n == 0 {
        return Ok(exact(1, params));
    }
    adaptive_eval(&params.policy, |bits| {
        let up = det_at(n, false, params.t, params.alpha + 1.0, bits)?;
        Ok(up / det_at(n, false, params.t, params.alpha, bits)?)
    })
}

/// D_0..D_{n_max} and D̃_0..D̃_{n_max} at one (t, α), shared by readers once built.
#[derive(Clone, Debug)]
pub struct HankelSequence {
    pub params: WeightParams,
    pub d: Vec<Float>,
    pub d_shifted: Vec<Float>,
    pub rel_err_bound: f64,
    pub bits_used: u32,
}

impl HankelSequence {
    pub fn n_max(&self) -> usize {
        self.d.len() - 1
    }

    /// β_n = D_{n+1} D_{n−1} / D_n² for 1 ≤ n < n_max.
    pub fn beta(&self, n: usize) -> Option<Float> {
        if n == 0 || n + 1 > self.n_max() {
            return None;
        }
        let num = Float::with_val(self.bits_used, &self.d[n + 1] * &self.d[n - 1]);
        Some(num / Float::with_val(self.bits_used, self.d[n].square_ref()))
    }
}

fn sequence_at(n_max: usize, t: f64, alpha: f64, bits: u32) -> Result<Vec<Float>> {
    let mu = moment_sequence(2 * n_max.max(1), &Float::with_val(bits, t), &Float::with_val(bits, alpha))?;
    let minors = hankel_minors(&mu, n_max)?;
    let mut d = Vec::with_capacity(2 * n_max + 2);
    let mut running = Float::with_val(bits, 1);
    d.push(running.clone());
    for p in &minors.pivots {
        running *= p;
        d.push(running.clone());
    }
    d.push(Float::with_val(bits, 0));
    for (k, r) in minors.ratios.iter().enumerate() {
        d.push(Float::with_val(bits, r * &d[k + 1]));
    }
    Ok(d)
}

/// Every D_n and D̃_n up to `n_max` from one unpivoted elimination.
pub fn hankel_sequence(n_max: usize, params: &WeightParams) -> Result<HankelSequence> {
    params.validate()?;
    let c = adaptive_eval(&params.policy, |bits| sequence_at(n_max, params.t, params.alpha, bits))?;
    let mut v = c.value;
    let shifted = v.split_off(n_max + 1);
    Ok(HankelSequence {
        params: *params,
        d: v,
        d_shifted: shifted,
        rel_err_bound: c.rel_err_bound,
        bits_used: c.bits_used,
    })
}

/// D_n, or D̃_n with `shifted`, of an arbitrary moment list.
pub fn det_of_moments<T: Field>(mu: &[T], n: usize, shifted: bool, bits: u32) -> Result<T> {
    if n == 0 {
        return Ok(if shifted { T::zero(bits) } else { T::one(bits) });
    }
    lu_determinant(hankel_matrix(mu, n, shifted)?, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_matches_lu() {
        let p = WeightParams::new(1.0, 0.5).unwrap();
        let s = hankel_sequence(4, &p).unwrap();
        let d3 = hankel_det(3, &p, false).unwrap();
        let dt3 = hankel_det(3, &p, true).unwrap();
        assert!(crate::scalar::rel_diff(&s.d[3], &d3.value) < 1e-28);
        assert!(crate::scalar::rel_diff(&s.d_shifted[3], &dt3.value) < 1e-28);
    }
}
