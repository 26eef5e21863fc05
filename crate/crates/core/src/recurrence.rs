//! Recurrence coefficients α_n, β_n, norms h_n, the auxiliary quantities R_n,
//! r_n, the sub-leading coefficient p(n) and H_n = t d/dt ln D_n.
//!
//! Two independent routes are computed from the same moments:
//!
//! * determinant ratios, from one elimination of the bordered Hankel matrix;
//! * the Chebyshev (moment) algorithm, which never forms a determinant.
//!
//! α_n, β_n, h_n and p(n) are reported from the first route after both agree
//! within the certified bound. β_n is also checked against D_{n+1}D_{n−1}/D_n².

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{moment_sequence, WeightParams};
use crate::numerics::diff::t_jet;
use crate::numerics::linalg::{chebyshev_algorithm, hankel_minors};
use crate::numerics::precision::{adaptive_eval, Certified, Refine};
use crate::numerics::quadrature::{de_integrate, Window};
use crate::polynomials::eval_recurrence;
use crate::scalar::{rel_diff, Real};
use crate::{CertifiedReal, Mpf};

/// Both routes at one working precision.
#[derive(Clone, Debug)]
pub struct RawTable<T> {
    pub n_max: usize,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub h: Vec<T>,
    /// p(0)..p(n_max + 1).
    pub p: Vec<T>,
    pub big_r: Vec<T>,
    pub small_r: Vec<T>,
    pub big_h: Vec<T>,
    /// ln D_0..ln D_{n_max+1}.
    pub ln_d: Vec<T>,
    pub beta_dratio: Vec<T>,
    pub alpha_cheb: Vec<T>,
    pub beta_cheb: Vec<T>,
    pub h_cheb: Vec<T>,
    pub p_cheb: Vec<T>,
}

fn max_diff<T: Real>(a: &[T], b: &[T]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| rel_diff(x, y)).fold(0.0, f64::max)
}

impl<T: Real> RawTable<T> {
    fn fields(&self) -> [&Vec<T>; 13] {
        [
            &self.alpha,
            &self.beta,
            &self.h,
            &self.p,
            &self.big_r,
            &self.small_r,
            &self.big_h,
            &self.ln_d,
            &self.beta_dratio,
            &self.alpha_cheb,
            &self.beta_cheb,
            &self.h_cheb,
            &self.p_cheb,
        ]
    }
}

impl<T: Real> Refine for RawTable<T> {
    fn rel_diff(&self, coarser: &Self) -> f64 {
        self.fields().iter().zip(coarser.fields().iter()).map(|(a, b)| max_diff(a, b)).fold(0.0, f64::max)
    }
}

/// R_n, r_n and H_n from α_n, β_n and p(n). At t = 0 all three vanish.
fn auxiliaries<T: Real>(
    t: &T,
    alpha_w: &T,
    alpha: &[T],
    beta: &[T],
    p: &[T],
    bits: u32,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let n_count = alpha.len();
    let zero = T::zero(bits);
    if t.is_zero_val() {
        return Ok((vec![zero.clone(); n_count], vec![zero.clone(); n_count], vec![zero; n_count]));
    }
    let int = |k: usize| T::from_i64(k as i64, bits);
    let mut big_r = Vec::with_capacity(n_count);
    let mut small_r = Vec::with_capacity(n_count);
    let mut big_h = Vec::with_capacity(n_count);
    let hazard = T::epsilon(bits / 2);
    for n in 0..n_count {
        big_r.push(alpha[n].clone() - int(2 * n + 1) - alpha_w.clone());
        if n == 0 {
            small_r.push(zero.clone());
        } else {
            let denom = int(2 * n) + alpha_w.clone();
            if denom.abs_val() < hazard {
                return Err(Error::Domain(format!("2n + α = 0 to working precision at n = {n}")));
            }
            let s = alpha[n].clone() + alpha[n - 1].clone() - int(4 * n) - alpha_w.clone() * int(2);
            small_r.push((int(n) * t.clone() - beta[n].clone() * s) / denom);
        }
        big_h.push(int(n) * (int(n) + alpha_w.clone()) + p[n].clone());
    }
    Ok((big_r, small_r, big_h))
}

/// Both routes for n = 0..=n_max at the precision of `t`.
pub fn raw_table<T: Real>(n_max: usize, t: &T, alpha_w: &T) -> Result<RawTable<T>> {
    let bits = t.precision();
    let alpha_w = alpha_w.with_precision(bits);
    let m = n_max + 1;
    let mu = moment_sequence(2 * m, t, &alpha_w)?;

    let minors = hankel_minors(&mu, m)?;
    let zero = T::zero(bits);
    let mut q = vec![zero.clone()];
    q.extend(minors.ratios.iter().cloned());
    let p: Vec<T> = q.iter().map(|v| -v.clone()).collect();
    let alpha: Vec<T> = (0..m).map(|n| q[n + 1].clone() - q[n].clone()).collect();
    let h = minors.pivots.clone();
    let mut beta = vec![zero.clone()];
    beta.extend((1..m).map(|n| h[n].clone() / h[n - 1].clone()));
    let mut d = vec![T::one(bits)];
    let mut ln_d = vec![zero.clone()];
    for k in 0..m {
        d.push(d[k].clone() * h[k].clone());
        ln_d.push(ln_d[k].clone() + h[k].ln());
    }
    let mut beta_dratio = vec![zero.clone()];
    beta_dratio.extend((1..m).map(|n| d[n + 1].clone() * d[n - 1].clone() / (d[n].clone() * d[n].clone())));

    let (alpha_cheb, mut beta_cheb) = chebyshev_algorithm(&mu, m, bits)?;
    let mut h_cheb = vec![beta_cheb[0].clone()];
    for n in 1..m {
        h_cheb.push(h_cheb[n - 1].clone() * beta_cheb[n].clone());
    }
    beta_cheb[0] = zero.clone();
    let mut p_cheb = vec![zero.clone()];
    for n in 0..m {
        p_cheb.push(p_cheb[n].clone() - alpha_cheb[n].clone());
    }

    let (big_r, small_r, big_h) = auxiliaries(t, &alpha_w, &alpha, &beta, &p, bits)?;
    Ok(RawTable {
        n_max,
        alpha,
        beta,
        h,
        p,
        big_r,
        small_r,
        big_h,
        ln_d,
        beta_dratio,
        alpha_cheb,
        beta_cheb,
        h_cheb,
        p_cheb,
    })
}

/// Agreement of one quantity across two routes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteCheck {
    pub quantity: &'static str,
    pub primary: &'static str,
    pub secondary: &'static str,
    pub max_rel_diff: f64,
    pub tolerance: f64,
}

impl RouteCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_diff <= self.tolerance
    }
}

/// Recurrence data for n = 0..=n_max at one (t, α).
#[derive(Clone, Debug)]
pub struct RecurrenceTable<T = Mpf> {
    pub params: WeightParams,
    pub n_max: usize,
    pub alpha: Vec<T>,
    /// β_0 = 0.
    pub beta: Vec<T>,
    pub h: Vec<T>,
    pub big_r: Vec<T>,
    /// r_0 = 0.
    pub small_r: Vec<T>,
    /// p(0)..p(n_max + 1).
    pub p: Vec<T>,
    pub big_h: Vec<T>,
    /// ln D_0..ln D_{n_max+1}.
    pub ln_d: Vec<T>,
    pub routes: Vec<RouteCheck>,
    pub rel_err_bound: f64,
    pub bits_used: u32,
    /// Set for −1 < α ≤ 0.
    pub alpha_flagged: bool,
}

/// Tolerance for comparing two values certified at `bits` with bound `bound`.
pub fn combined_tolerance(bound: f64, bits: u32) -> f64 {
    2.0 * bound + (2f64).powi(16 - bits.min(1000) as i32)
}

impl<T: Real> RecurrenceTable<T> {
    fn from_raw(raw: RawTable<T>, params: &WeightParams, bound: f64, bits: u32) -> Result<Self> {
        let tol = combined_tolerance(bound, bits);
        let routes = vec![
            RouteCheck {
                quantity: "alpha",
                primary: "determinant ratio",
                secondary: "chebyshev",
                max_rel_diff: max_diff(&raw.alpha, &raw.alpha_cheb),
                tolerance: tol,
            },
            RouteCheck {
                quantity: "beta",
                primary: "norm ratio",
                secondary: "D_{n+1}D_{n-1}/D_n^2",
                max_rel_diff: max_diff(&raw.beta, &raw.beta_dratio),
                tolerance: tol,
            },
            RouteCheck {
                quantity: "beta",
                primary: "norm ratio",
                secondary: "chebyshev",
                max_rel_diff: max_diff(&raw.beta, &raw.beta_cheb),
                tolerance: tol,
            },
            RouteCheck {
                quantity: "h",
                primary: "elimination pivot",
                secondary: "chebyshev product",
                max_rel_diff: max_diff(&raw.h, &raw.h_cheb),
                tolerance: tol,
            },
            RouteCheck {
                quantity: "p",
                primary: "shifted determinant ratio",
                secondary: "alpha partial sums",
                max_rel_diff: max_diff(&raw.p, &raw.p_cheb),
                tolerance: tol,
            },
        ];
        if let Some(bad) = routes.iter().find(|r| !r.passed()) {
            return Err(Error::CrossCheckMismatch {
                quantity: format!("{} ({} vs {})", bad.quantity, bad.primary, bad.secondary),
                rel_diff: bad.max_rel_diff,
                bound: bad.tolerance,
            });
        }
        Ok(RecurrenceTable {
            params: *params,
            n_max: raw.n_max,
            alpha: raw.alpha,
            beta: raw.beta,
            h: raw.h,
            big_r: raw.big_r,
            small_r: raw.small_r,
            p: raw.p,
            big_h: raw.big_h,
            ln_d: raw.ln_d,
            routes,
            rel_err_bound: bound,
            bits_used: bits,
            alpha_flagged: params.alpha_flagged(),
        })
    }

    /// Table at the native precision of `T`, without escalation. Route agreement
    /// is still enforced at that precision.
    pub fn uncertified(n_max: usize, params: &WeightParams) -> Result<Self> {
        params.validate()?;
        let probe = T::from_f64(params.t, 64);
        let bits = probe.precision();
        let raw = raw_table(n_max, &probe, &T::from_f64(params.alpha, bits))?;
        let eps = T::epsilon(bits).to_f64_lossy();
        RecurrenceTable::from_raw(raw, params, eps * 10f64.powi(n_max as i32 + 2), bits)
    }

    /// p(n) − r_n + β_n, zero by the identity p = r − β.
    pub fn p_identity_residual(&self, n: usize) -> f64 {
        let rhs = self.small_r[n].clone() - self.beta[n].clone();
        rel_diff(&self.p[n], &rhs)
    }
}

/// Certified table for n = 0..=n_max.
pub fn recurrence_table(n_max: usize, params: &WeightParams) -> Result<RecurrenceTable<Mpf>> {
    params.validate()?;
    let (t, a) = (params.t, params.alpha);
    let raw = adaptive_eval(&params.policy, |bits| raw_table(n_max, &Float::with_val(bits, t), &Float::with_val(bits, a)))?;
    RecurrenceTable::from_raw(raw.value, params, raw.rel_err_bound, raw.bits_used)
}

/// Relative residuals of R_n and r_n against their integral definitions.
#[derive(Clone, Debug)]
pub struct AuxResidual {
    pub n: usize,
    pub big_r_integral: CertifiedReal,
    pub small_r_integral: CertifiedReal,
    pub big_r_residual: f64,
    pub small_r_residual: f64,
    pub tolerance: f64,
}

impl AuxResidual {
    pub fn passed(&self) -> bool {
        self.big_r_residual <= self.tolerance && self.small_r_residual <= self.tolerance
    }
}

/// Computes R_n = (t/h_n) ∫ P_n² w/y dy and r_n = (t/h_{n−1}) ∫ P_n P_{n−1} w/y dy
/// by quadrature and compares them with the closed forms.
pub fn aux_integral_check(n: usize, params: &WeightParams) -> Result<AuxResidual> {
    params.validate()?;
    if !(params.t > 0.0) {
        return Err(Error::Domain("the auxiliary integrals need t > 0".into()));
    }
    let table = recurrence_table(n, params)?;
    let (t, a) = (params.t, params.alpha);
    let window = Window { center: ((n as f64 + a + 1.0).max(0.5)).ln(), scale: 1.0 };
    let integrals = adaptive_eval(&params.policy, |bits| {
        let tt = Float::with_val(bits, t);
        let aw = Float::with_val(bits, a);
        let raw = raw_table(n, &tt, &aw)?;
        let wb = bits + crate::numerics::quadrature::GUARD_BITS;
        let coeffs_a: Vec<Float> = raw.alpha.iter().map(|v| v.with_precision(wb)).collect();
        let coeffs_b: Vec<Float> = raw.beta.iter().map(|v| v.with_precision(wb)).collect();
        let twb = tt.with_precision(wb);
        let awb = aw.with_precision(wb);
        let pair = |u: &Float| {
            let x = u.clone().exp();
            let w = (Float::with_val(wb, &awb * u) - &x - Float::with_val(wb, &twb / &x)).exp();
            let e = eval_recurrence(&coeffs_a, &coeffs_b, n, &x);
            (e.p_n.clone() * e.p_n.clone() * w.clone(), e.p_n * e.p_prev * w)
        };
        let big: Float = de_integrate(|u: &Float| pair(u).0, window, bits)?;
        let small: Float = if n == 0 { Float::with_val(bits, 0) } else { de_integrate(|u: &Float| pair(u).1, window, bits)? };
        let big_r = tt.clone() * big / raw.h[n].clone();
        let small_r = if n == 0 { small } else { tt * small / raw.h[n - 1].clone() };
        Ok(vec![big_r, small_r])
    })?;
    let bits = integrals.bits_used;
    let mut v = integrals.value;
    let small = v.pop().unwrap();
    let big = v.pop().unwrap();
    let tolerance = 10.0 * combined_tolerance(integrals.rel_err_bound + table.rel_err_bound, bits.min(table.bits_used));
    let small_res = if n == 0 { 0.0 } else { rel_diff(&small, &table.small_r[n]) };
    Ok(AuxResidual {
        n,
        big_r_residual: rel_diff(&big, &table.big_r[n]),
        small_r_residual: small_res,
        big_r_integral: Certified { value: big, rel_err_bound: integrals.rel_err_bound, bits_used: bits },
        small_r_integral: Certified { value: small, rel_err_bound: integrals.rel_err_bound, bits_used: bits },
        tolerance,
    })
}

/// H_n by three routes and the check t H_n′ = r_n.
#[derive(Clone, Debug)]
pub struct LogHankelDerivative {
    pub n: usize,
    /// n(n + α) + p(n).
    pub h: CertifiedReal,
    /// n(n + α) + r_n − β_n.
    pub via_r_beta: Float,
    /// t d/dt ln D_n, absent at t = 0.
    pub numeric: Option<CertifiedReal>,
    /// t H_n′, absent at t = 0.
    pub t_dh: Option<CertifiedReal>,
    pub r: Float,
    pub max_rel_diff: f64,
    pub tolerance: f64,
}

/// Certified H_n = t d/dt ln D_n from the algebraic route, verified against the
/// numerical derivative of ln D_n and against n(n + α) + r_n − β_n; also checks
/// t H_n′ = r_n.
pub fn log_hankel_deriv(n: usize, params: &WeightParams) -> Result<LogHankelDerivative> {
    let table = recurrence_table(n, params)?;
    let bits = table.bits_used;
    let h = Certified { value: table.big_h[n].clone(), rel_err_bound: table.rel_err_bound, bits_used: bits };
    let nn = Float::with_val(bits, n);
    let base = Float::with_val(bits, &nn * Float::with_val(bits, &nn + params.alpha));
    let via_r_beta = base + &table.small_r[n] - &table.beta[n];
    let mut tolerance = 10.0 * combined_tolerance(table.rel_err_bound, bits);
    let mut worst = rel_diff(&h.value, &via_r_beta);
    let (mut numeric, mut t_dh) = (None, None);
    if params.t > 0.0 {
        let a = params.alpha;
        let jets = t_jet(
            |tt: &Float| {
                let raw = raw_table(n, tt, &Float::with_val(tt.prec(), a))?;
                Ok(vec![raw.ln_d[n].clone(), raw.big_h[n].clone()])
            },
            params.t,
            &params.policy,
        )?;
        let tf = Float::with_val(jets.bits_used, params.t);
        let num = Float::with_val(jets.bits_used, &jets.value[0].d1 * &tf);
        let tdh = Float::with_val(jets.bits_used, &jets.value[1].d1 * &tf);
        tolerance = tolerance.max(10.0 * combined_tolerance(jets.rel_err_bound + table.rel_err_bound, jets.bits_used.min(bits)));
        worst = worst.max(rel_diff(&num, &h.value)).max(rel_diff(&tdh, &table.small_r[n]));
        numeric = Some(Certified { value: num, rel_err_bound: jets.rel_err_bound, bits_used: jets.bits_used });
        t_dh = Some(Certified { value: tdh, rel_err_bound: jets.rel_err_bound, bits_used: jets.bits_used });
    }
    if worst > tolerance {
        return Err(Error::CrossCheckMismatch { quantity: format!("H_{n}"), rel_diff: worst, bound: tolerance });
    }
    Ok(LogHankelDerivative {
        n,
        h,
        via_r_beta,
        numeric,
        t_dh,
        r: table.small_r[n].clone(),
        max_rel_diff: worst,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_table_classical_limit() {
        let p = WeightParams::new(0.0, 0.5).unwrap();
        let tab = RecurrenceTable::<f64>::uncertified(5, &p).unwrap();
        for n in 0..=5 {
            assert!((tab.alpha[n] - (2.0 * n as f64 + 1.5)).abs() < 1e-8);
            assert!((tab.beta[n] - n as f64 * (n as f64 + 0.5)).abs() < 1e-8);
        }
    }
}
