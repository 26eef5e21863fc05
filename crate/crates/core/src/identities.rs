//! Residual checks for the algebraic relations among α_n, β_n, R_n, r_n and
//! p(n), the discrete and Toda systems, Painlevé III′ for R_n and the
//! second-order equation and σ-form for H_n.
//!
//! Every residual is |Σ terms| / max |term| for the equation written as a sum
//! of terms. Algebraic checks pass at max(100·target, 10·input bound);
//! derivative-based ones at max([`DERIVATIVE_TOLERANCE`], 10·input bound).

use std::collections::BTreeMap;

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::WeightParams;
use crate::numerics::diff::t_jet;
use crate::numerics::precision::Certified;
use crate::numerics::Jet;
use crate::recurrence::{raw_table, recurrence_table, RecurrenceTable};
use crate::scalar::relative_residual;

/// Accuracy floor of the five-point Richardson stencils.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-10;

/// Worst residual of one relation inside a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub max_rel_residual: f64,
    /// Index n or grid value at which the worst residual occurred.
    pub worst_at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity_name: String,
    pub n_range: (usize, usize),
    pub t_grid: Vec<f64>,
    pub alpha: f64,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub components: Vec<Component>,
    /// Grid points skipped because R_n is too small to divide by.
    pub skipped: Vec<f64>,
    /// Parameters of the differential equation, when it has any.
    pub parameters: BTreeMap<String, f64>,
    pub bits_used: u32,
    pub rel_err_bound: f64,
    pub alpha_flagged: bool,
}

impl VerificationReport {
    fn finish(mut self) -> Self {
        self.max_rel_residual = self.components.iter().map(|c| c.max_rel_residual).fold(0.0, f64::max);
        self.passed = self.max_rel_residual <= self.tolerance;
        self
    }
}

/// Accumulates per-relation maxima in insertion order.
#[derive(Default)]
struct Components(Vec<Component>);

impl Components {
    fn record(&mut self, name: &str, residual: f64, at: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        match self.0.iter_mut().find(|c| c.name == name) {
            Some(c) if residual > c.max_rel_residual => {
                c.max_rel_residual = residual;
                c.worst_at = at;
            }
            Some(_) => {}
            None => self.0.push(Component { name: name.into(), max_rel_residual: residual, worst_at: at }),
        }
    }
}

fn algebraic_tolerance(params: &WeightParams, bound: f64) -> f64 {
    (100.0 * params.policy.target_rel_err).max(10.0 * bound)
}

fn derivative_tolerance(bound: f64) -> f64 {
    DERIVATIVE_TOLERANCE.max(10.0 * bound)
}

fn base_report(name: &str, n_range: (usize, usize), t_grid: Vec<f64>, params: &WeightParams) -> VerificationReport {
    VerificationReport {
        identity_name: name.into(),
        n_range,
        t_grid,
        alpha: params.alpha,
        max_rel_residual: 0.0,
        tolerance: 0.0,
        passed: false,
        components: Vec::new(),
        skipped: Vec::new(),
        parameters: BTreeMap::new(),
        bits_used: 0,
        rel_err_bound: 0.0,
        alpha_flagged: params.alpha_flagged(),
    }
}

fn f(bits: u32, v: f64) -> Float {
    Float::with_val(bits, v)
}

/// Residuals of the seven scalar relations at one n, 1 ≤ n < table.n_max.
fn s_relations_at(tab: &RecurrenceTable<Float>, n: usize, out: &mut Components) {
    let bits = tab.bits_used;
    let (t, a) = (f(bits, tab.params.t), f(bits, tab.params.alpha));
    let nf = f(bits, n as f64);
    let (al, be, rr, r) = (&tab.alpha, &tab.beta, &tab.big_r, &tab.small_r);
    let at = n as f64;
    let c = |v: Float| v;
    out.record(
        "R_n - alpha_n + 2n + 1 + alpha = 0",
        relative_residual(&[rr[n].clone(), -al[n].clone(), f(bits, 2.0 * at + 1.0) + &a]),
        at,
    );
    out.record(
        "r_n + r_{n+1} = t - alpha_n R_n",
        relative_residual(&[r[n].clone(), r[n + 1].clone(), -t.clone(), c(Float::with_val(bits, &al[n] * &rr[n]))]),
        at,
    );
    out.record(
        "r_n^2 - t r_n = beta_n R_n R_{n-1}",
        relative_residual(&[
            Float::with_val(bits, r[n].square_ref()),
            -Float::with_val(bits, &t * &r[n]),
            -(Float::with_val(bits, &be[n] * &rr[n]) * &rr[n - 1]),
        ]),
        at,
    );
    let two_n_a = Float::with_val(bits, &nf * 2u32) + &a;
    out.record(
        "nt - (2n+alpha) r_n = beta_n (R_n + R_{n-1})",
        relative_residual(&[
            Float::with_val(bits, &nf * &t),
            -Float::with_val(bits, &two_n_a * &r[n]),
            -Float::with_val(bits, &be[n] * &rr[n]),
            -Float::with_val(bits, &be[n] * &rr[n - 1]),
        ]),
        at,
    );
    let sum_r = rr[..n].iter().fold(f(bits, 0.0), |s, v| s + v);
    out.record(
        "n(n+alpha) + r_n + sum R_j = beta_n",
        relative_residual(&[Float::with_val(bits, &nf * Float::with_val(bits, &nf + &a)), r[n].clone(), sum_r, -be[n].clone()]),
        at,
    );
    out.record(
        "r_{n+1} - r_n + alpha_n = beta_{n+1} - beta_n",
        relative_residual(&[r[n + 1].clone(), -r[n].clone(), al[n].clone(), -be[n + 1].clone(), be[n].clone()]),
        at,
    );
    out.record("p(n) = r_n - beta_n", relative_residual(&[tab.p[n].clone(), -r[n].clone(), be[n].clone()]), at);
}

/// The scalar relations among α_n, β_n, R_n, r_n and p(n) for 1 ≤ n ≤ n_max.
pub fn verify_s_relations(n_max: usize, params: &WeightParams) -> Result<VerificationReport> {
    let tab = recurrence_table(n_max + 1, params)?;
    Ok(s_relations_with(&tab, n_max, params))
}

fn s_relations_with(tab: &RecurrenceTable<Float>, n_max: usize, params: &WeightParams) -> VerificationReport {
    let mut comps = Components::default();
    for n in 1..=n_max {
        s_relations_at(tab, n, &mut comps);
    }
    let mut rep = base_report("s-relations", (1, n_max), vec![params.t], params);
    rep.components = comps.0;
    rep.tolerance = algebraic_tolerance(params, tab.rel_err_bound);
    rep.bits_used = tab.bits_used;
    rep.rel_err_bound = tab.rel_err_bound;
    rep.finish()
}

/// |Σ terms| / `scale`, zero when the scale vanishes.
fn scaled_residual(terms: &[Float], scale: &Float) -> f64 {
    if scale.is_zero() {
        return 0.0;
    }
    let sum = terms.iter().fold(f(scale.prec(), 0.0), |s, v| s + v);
    (sum.abs() / scale).to_f64()
}

/// Residuals of the two first-order difference equations at one n.
fn discrete_at(tab: &RecurrenceTable<Float>, n: usize, out: &mut Components) {
    let bits = tab.bits_used;
    let (t, a) = (f(bits, tab.params.t), f(bits, tab.params.alpha));
    let nf = f(bits, n as f64);
    let (al, be) = (&tab.alpha, &tab.beta);
    let m = |x: &Float, y: &Float| Float::with_val(bits, x * y);
    let k = Float::with_val(bits, &nf * 2u32) + &a;
    let first = [
        m(&a, &t),
        m(&be[n], &al[n]) * 2u32,
        m(&be[n], &al[n - 1]) * 2u32,
        m(&k, &al[n]) * (Float::with_val(bits, &nf * 2u32) + 2u32 + &a),
        -(m(&k, &al[n]) * &al[n]),
        -(m(&k, &be[n]) * 3u32),
        -m(&k, &be[n + 1]),
    ];
    out.record("alpha t + 2 beta_n (alpha_n + alpha_{n-1}) + ... = 0", relative_residual(&first), n as f64);

    let s = Float::with_val(bits, &al[n] + &al[n - 1]) - Float::with_val(bits, &nf * 4u32) - Float::with_val(bits, &a * 2u32);
    let bs = m(&be[n], &s);
    let na = Float::with_val(bits, &nf + &a);
    let r_n = Float::with_val(bits, &al[n] - Float::with_val(bits, &nf * 2u32)) - 1u32 - &a;
    let r_prev = Float::with_val(bits, &al[n - 1] - Float::with_val(bits, &nf * 2u32)) + 1u32 - &a;
    let second = [
        m(&nf, &na) * m(&t, &t),
        m(&nf, &t) * &bs,
        -(m(&na, &t) * &bs),
        -m(&bs, &bs),
        m(&k, &k) * &be[n] * r_n * r_prev,
    ];
    // S and the two shifted α factors cancel internally, so the scale comes from
    // their expanded monomials.
    let abs = |v: Float| v.abs();
    let b_parts = [abs(m(&be[n], &al[n])), abs(m(&be[n], &al[n - 1])), abs(m(&be[n], &nf) * 4u32), abs(m(&be[n], &a) * 2u32)];
    let b_max = b_parts.iter().fold(f(bits, 0.0), |x, y| x.max(y));
    let f1 = abs(m(&nf, &t)).max(&b_max);
    let f2 = abs(m(&na, &t)).max(&b_max);
    let a_n_max = abs(al[n].clone()).max(&abs(Float::with_val(bits, &nf * 2u32) + 1u32 + &a));
    let a_p_max = abs(al[n - 1].clone()).max(&abs(Float::with_val(bits, &nf * 2u32) - 1u32 + &a));
    let g = m(&k, &k) * &be[n] * a_n_max * a_p_max;
    let scale = (f1 * f2).max(&g);
    out.record("[nt - beta_n S][(n+alpha)t + beta_n S] + ... = 0", scaled_residual(&second, &scale), n as f64);
}

/// The first-order discrete system for α_n, β_n, 1 ≤ n ≤ n_max.
pub fn verify_discrete_system(n_max: usize, params: &WeightParams) -> Result<VerificationReport> {
    let tab = recurrence_table(n_max + 1, params)?;
    Ok(discrete_with(&tab, n_max, params))
}

fn discrete_with(tab: &RecurrenceTable<Float>, n_max: usize, params: &WeightParams) -> VerificationReport {
    let mut comps = Components::default();
    for n in 1..=n_max {
        discrete_at(tab, n, &mut comps);
    }
    let mut rep = base_report("discrete", (1, n_max), vec![params.t], params);
    rep.components = comps.0;
    rep.tolerance = algebraic_tolerance(params, tab.rel_err_bound);
    rep.bits_used = tab.bits_used;
    rep.rel_err_bound = tab.rel_err_bound;
    rep.finish()
}

/// Both algebraic suites from a single table to n_max + 1.
pub fn verify_algebraic(n_max: usize, params: &WeightParams) -> Result<(VerificationReport, VerificationReport)> {
    let tab = recurrence_table(n_max + 1, params)?;
    Ok((s_relations_with(&tab, n_max, params), discrete_with(&tab, n_max, params)))
}

/// Jets in t of α_n, β_n, p(n), ln h_n for n = 0..=n_max (stored per field).
struct TableJets {
    alpha: Vec<Jet>,
    beta: Vec<Jet>,
    p: Vec<Jet>,
    ln_h: Vec<Jet>,
    big_r: Vec<Jet>,
    big_h: Vec<Jet>,
}

fn table_jets(n_max: usize, t: f64, params: &WeightParams) -> Result<Certified<TableJets>> {
    let a = params.alpha;
    let m = n_max + 1;
    let jets = t_jet(
        |tt: &Float| {
            let raw = raw_table(n_max, tt, &Float::with_val(tt.prec(), a))?;
            let mut v = Vec::with_capacity(6 * m);
            v.extend(raw.alpha.iter().cloned());
            v.extend(raw.beta.iter().cloned());
            v.extend(raw.p[..m].iter().cloned());
            v.extend(raw.h.iter().map(|h| h.clone().ln()));
            v.extend(raw.big_r.iter().cloned());
            v.extend(raw.big_h.iter().cloned());
            Ok(v)
        },
        t,
        &params.policy,
    )?;
    Ok(jets.map(|mut v| {
        let big_h = v.split_off(5 * m);
        let big_r = v.split_off(4 * m);
        let ln_h = v.split_off(3 * m);
        let p = v.split_off(2 * m);
        let beta = v.split_off(m);
        TableJets { alpha: v, beta, p, ln_h, big_r, big_h }
    }))
}

/// The Toda system and its variants for 1 ≤ n ≤ n_max at each t in `t_grid`.
pub fn verify_toda(n_max: usize, t_grid: &[f64], params: &WeightParams) -> Result<VerificationReport> {
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("the Toda system is checked on t > 0".into()));
    }
    let mut comps = Components::default();
    let mut rep = base_report("toda", (1, n_max), t_grid.to_vec(), params);
    let mut bound: f64 = 0.0;
    for &t in t_grid {
        let p = params.with_t(t);
        let tab = recurrence_table(n_max + 1, &p)?;
        let jets = table_jets(n_max, t, &p)?;
        bound = bound.max(jets.rel_err_bound).max(tab.rel_err_bound);
        rep.bits_used = rep.bits_used.max(jets.bits_used);
        let bits = jets.bits_used;
        let tf = f(bits, t);
        let j = &jets.value;
        let td = |jet: &Jet| Float::with_val(bits, &jet.d1 * &tf);
        let g = |v: &Float| Float::with_val(bits, v);
        for n in 1..=n_max {
            let (al, be, rr, r) = (&tab.alpha, &tab.beta, &tab.big_r, &tab.small_r);
            let ta = td(&j.alpha[n]);
            let tb = td(&j.beta[n]);
            comps.record(
                "t alpha_n' = alpha_n + beta_n - beta_{n+1}",
                relative_residual(&[ta.clone(), -g(&al[n]), -g(&be[n]), g(&be[n + 1])]),
                t,
            );
            comps.record("t alpha_n' = r_n - r_{n+1}", relative_residual(&[ta, -g(&r[n]), g(&r[n + 1])]), t);
            let bm = |x: &Float| Float::with_val(bits, &be[n] * x);
            comps.record(
                "t beta_n' = beta_n (alpha_{n-1} - alpha_n + 2)",
                relative_residual(&[tb.clone(), -bm(&al[n - 1]), bm(&al[n]), -(g(&be[n]) * 2u32)]),
                t,
            );
            comps.record("t beta_n' = beta_n (R_{n-1} - R_n)", relative_residual(&[tb, -bm(&rr[n - 1]), bm(&rr[n])]), t);
            comps.record("t p' = r_n", relative_residual(&[td(&j.p[n]), -g(&r[n])]), t);
            comps.record("t (ln h_n)' = -R_n", relative_residual(&[td(&j.ln_h[n]), g(&rr[n])]), t);
        }
    }
    rep.components = comps.0;
    rep.rel_err_bound = bound;
    rep.tolerance = derivative_tolerance(bound);
    Ok(rep.finish())
}

/// (α̃, β̃, γ̃, δ̃) of the Painlevé III′ equation for R_n.
pub fn painleve_parameters(n: usize, alpha: f64) -> [f64; 4] {
    [4.0 * (2.0 * n as f64 + 1.0 + alpha), 4.0 * alpha, 4.0, -4.0]
}

/// (θ₀, θ∞) of the σ-form for H_n.
pub fn sigma_parameters(n: usize, alpha: f64) -> (f64, f64) {
    (alpha, -2.0 * n as f64 - alpha)
}

fn single_jets(n: usize, t: f64, params: &WeightParams) -> Result<Certified<(Jet, Jet)>> {
    let j = table_jets(n, t, params)?;
    Ok(j.map(|mut v| (v.big_r.swap_remove(n), v.big_h.swap_remove(n))))
}

/// Painlevé III′ for R_n at each grid point. Points with t = 0 or R_n below
/// 2^(−bits/2) are skipped and listed.
pub fn verify_painleve3(n: usize, t_grid: &[f64], params: &WeightParams) -> Result<VerificationReport> {
    let mut comps = Components::default();
    let mut rep = base_report("painleve-iii", (n, n), t_grid.to_vec(), params);
    let [at, bt, gt, dt] = painleve_parameters(n, params.alpha);
    rep.parameters = BTreeMap::from([
        ("alpha_tilde".to_string(), at),
        ("beta_tilde".to_string(), bt),
        ("gamma_tilde".to_string(), gt),
        ("delta_tilde".to_string(), dt),
    ]);
    let mut bound: f64 = 0.0;
    for &t in t_grid {
        if !(t > 0.0) {
            rep.skipped.push(t);
            continue;
        }
        let jets = match single_jets(n, t, &params.with_t(t)) {
            Ok(j) => j,
            Err(Error::StepUnderflow { .. }) => {
                rep.skipped.push(t);
                continue;
            }
            Err(e) => return Err(e),
        };
        let bits = jets.bits_used;
        let r = &jets.value.0;
        let hazard = Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2));
        if r.value <= hazard {
            rep.skipped.push(t);
            continue;
        }
        bound = bound.max(jets.rel_err_bound);
        rep.bits_used = rep.bits_used.max(bits);
        let tf = f(bits, t);
        let (v, d1, d2) = (&r.value, &r.d1, &r.d2);
        let t2x4 = Float::with_val(bits, tf.square_ref()) * 4u32;
        let sq = Float::with_val(bits, v.square_ref());
        let terms = [
            d2.clone(),
            -(Float::with_val(bits, d1.square_ref()) / v),
            Float::with_val(bits, d1 / &tf),
            -(Float::with_val(bits, &sq * at) / &t2x4),
            -(Float::with_val(bits, &sq * v) * gt / &t2x4),
            -(f(bits, bt) / (Float::with_val(bits, &tf * 4u32))),
            -(f(bits, dt) / (Float::with_val(bits, v * 4u32))),
        ];
        comps.record("R'' = (R')^2/R - R'/t + ...", relative_residual(&terms), t);
    }
    rep.components = comps.0;
    rep.rel_err_bound = bound;
    rep.tolerance = derivative_tolerance(bound);
    Ok(rep.finish())
}

/// (tH″)² = [n − (2n+α)H′]² − 4[n(n+α) + tH′ − H]H′(H′ − 1) on the t-grid and
/// the σ-form at s = √t for each grid point.
pub fn verify_sigma_form(n: usize, t_grid: &[f64], params: &WeightParams) -> Result<VerificationReport> {
    let mut comps = Components::default();
    let mut rep = base_report("sigma", (n, n), t_grid.to_vec(), params);
    let (th0, thi) = sigma_parameters(n, params.alpha);
    rep.parameters = BTreeMap::from([("theta_0".to_string(), th0), ("theta_inf".to_string(), thi)]);
    let mut bound: f64 = 0.0;
    for &t in t_grid {
        if !(t > 0.0) {
            rep.skipped.push(t);
            continue;
        }
        let jets = single_jets(n, t, &params.with_t(t))?;
        let bits = jets.bits_used;
        bound = bound.max(jets.rel_err_bound);
        rep.bits_used = rep.bits_used.max(bits);
        let h = &jets.value.1;
        let (hv, h1, h2) = (&h.value, &h.d1, &h.d2);
        let tf = f(bits, t);
        let nf = f(bits, n as f64);
        let a = f(bits, params.alpha);
        let m = |x: &Float, y: &Float| Float::with_val(bits, x * y);
        let th2 = m(&tf, h2);
        let lin = nf.clone() - m(&(Float::with_val(bits, &nf * 2u32) + &a), h1);
        let bracket = m(&nf, &(Float::with_val(bits, &nf + &a))) + m(&tf, h1) - hv;
        let h1m1 = Float::with_val(bits, h1 - 1u32);
        let terms = [m(&th2, &th2), -m(&lin, &lin), m(&bracket, h1) * &h1m1 * 4u32];
        comps.record("(t H'')^2 = [n - (2n+alpha)H']^2 - 4[...]H'(H'-1)", relative_residual(&terms), t);

        // σ(s) = 2H(s²) − s² − n(n+α)
        let s = tf.clone().sqrt();
        let sigma = Float::with_val(bits, hv * 2u32) - &tf - m(&nf, &Float::with_val(bits, &nf + &a));
        let ds = m(&s, h1) * 4u32 - Float::with_val(bits, &s * 2u32);
        let dds = Float::with_val(bits, h1 * 4u32) + m(&tf, h2) * 8u32 - 2u32;
        let (t0, ti) = (f(bits, th0), f(bits, thi));
        let lhs = m(&s, &dds) - &ds;
        let s2x4 = Float::with_val(bits, &tf * 4u32);
        let ds2 = m(&ds, &ds);
        let theta_sq = m(&t0, &t0) + m(&ti, &ti);
        let terms = [
            m(&lhs, &lhs),
            -(m(&(Float::with_val(bits, &sigma * 2u32) - m(&s, &ds)), &(Float::with_val(bits, &ds2 - &s2x4))) * 4u32),
            -(m(&theta_sq, &(Float::with_val(bits, &ds2 + &s2x4))) * 2u32),
            m(&m(&t0, &ti), &m(&s, &ds)) * 16u32,
        ];
        comps.record("sigma-form (s sigma'' - sigma')^2 = ...", relative_residual(&terms), t);
    }
    rep.components = comps.0;
    rep.rel_err_bound = bound;
    rep.tolerance = derivative_tolerance(bound);
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_audit() {
        assert_eq!(painleve_parameters(1, 0.5), [14.0, 2.0, 4.0, -4.0]);
        assert_eq!(sigma_parameters(2, 0.5), (0.5, -4.5));
    }
}
