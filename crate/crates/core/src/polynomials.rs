//! Monic orthogonal polynomials P_n(x; t, α): evaluation, the ladder
//! coefficients A_n and B_n, the second-order ODE, zeros and their bounds, the
//! Sturm function F(x), the mixed recurrence and Christoffel–Darboux.

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{two_sided_gamma_window, WeightParams};
use crate::numerics::linalg::tridiagonal_eigenvalues;
use crate::numerics::precision::{adaptive_eval, Certified};
use crate::numerics::quadrature::{de_integrate, GUARD_BITS};
use crate::recurrence::{raw_table, recurrence_table, RecurrenceTable};
use crate::scalar::{rel_diff, relative_residual, Real};
use crate::CertifiedReal;

/// P_n, P_{n−1} and derivatives at one point.
#[derive(Clone, Debug)]
pub struct PolyEval<T> {
    pub p_n: T,
    pub p_prev: T,
    pub d_n: T,
    pub d_prev: T,
    pub dd_n: T,
}

/// Forward recurrence x P_k = P_{k+1} + α_k P_k + β_k P_{k−1}, differentiated
/// twice alongside. Needs α_0..α_{n−1} and β_1..β_{n−1}.
pub fn eval_recurrence<T: Real>(alpha: &[T], beta: &[T], n: usize, x: &T) -> PolyEval<T> {
    let bits = x.precision();
    let zero = T::zero(bits);
    let (mut p0, mut p1) = (zero.clone(), T::one(bits));
    let (mut d0, mut d1) = (zero.clone(), zero.clone());
    let (mut s0, mut s1) = (zero.clone(), zero.clone());
    for k in 0..n {
        let c = x.clone() - alpha[k].clone();
        let b = if k == 0 { zero.clone() } else { beta[k].clone() };
        let p2 = c.clone() * p1.clone() - b.clone() * p0.clone();
        let d2 = p1.clone() + c.clone() * d1.clone() - b.clone() * d0.clone();
        let s2 = T::from_i64(2, bits) * d1.clone() + c * s1.clone() - b * s0.clone();
        p0 = std::mem::replace(&mut p1, p2);
        d0 = std::mem::replace(&mut d1, d2);
        s0 = std::mem::replace(&mut s1, s2);
    }
    let _ = s0;
    PolyEval { p_n: p1, p_prev: p0, d_n: d1, d_prev: d0, dd_n: s1 }
}

impl<T: Real> RecurrenceTable<T> {
    /// P_n and derivatives at `x` from this table; needs n ≤ n_max + 1.
    pub fn eval(&self, n: usize, x: &T) -> PolyEval<T> {
        eval_recurrence(&self.alpha, &self.beta, n, x)
    }
}

/// v(x) = −ln w(x) = x + t/x − α ln x.
#[derive(Clone, Debug)]
pub struct PotentialData<T> {
    pub t: T,
    pub alpha: T,
}

impl<T: Real> PotentialData<T> {
    pub fn v(&self, x: &T) -> T {
        x.clone() + self.t.clone() / x.clone() - self.alpha.clone() * x.ln()
    }

    pub fn dv(&self, x: &T) -> T {
        T::one(x.precision()) - self.alpha.clone() / x.clone() - self.t.clone() / (x.clone() * x.clone())
    }

    pub fn d2v(&self, x: &T) -> T {
        let x2 = x.clone() * x.clone();
        self.alpha.clone() / x2.clone() + T::from_i64(2, x.precision()) * self.t.clone() / (x2 * x.clone())
    }
}

/// A_n = 1/x + R_n/x² and B_n = −n/x + r_n/x².
#[derive(Clone, Debug)]
pub struct LadderPair<T> {
    pub n: usize,
    pub big_r: T,
    pub small_r: T,
}

impl<T: Real> LadderPair<T> {
    pub fn from_table(table: &RecurrenceTable<T>, n: usize) -> Self {
        LadderPair { n, big_r: table.big_r[n].clone(), small_r: table.small_r[n].clone() }
    }

    pub fn a(&self, x: &T) -> T {
        T::one(x.precision()) / x.clone() + self.big_r.clone() / (x.clone() * x.clone())
    }

    pub fn da(&self, x: &T) -> T {
        let x2 = x.clone() * x.clone();
        -(T::one(x.precision()) / x2.clone()) - T::from_i64(2, x.precision()) * self.big_r.clone() / (x2 * x.clone())
    }

    pub fn d2a(&self, x: &T) -> T {
        let x3 = x.clone() * x.clone() * x.clone();
        T::from_i64(2, x.precision()) / x3.clone() + T::from_i64(6, x.precision()) * self.big_r.clone() / (x3 * x.clone())
    }

    pub fn b(&self, x: &T) -> T {
        -(T::from_i64(self.n as i64, x.precision()) / x.clone()) + self.small_r.clone() / (x.clone() * x.clone())
    }

    pub fn db(&self, x: &T) -> T {
        let x2 = x.clone() * x.clone();
        T::from_i64(self.n as i64, x.precision()) / x2.clone()
            - T::from_i64(2, x.precision()) * self.small_r.clone() / (x2 * x.clone())
    }

    /// A_n > 0 on x > 0 exactly when R_n ≥ 0.
    pub fn a_positive_on_half_line(&self) -> bool {
        !(self.big_r < T::zero(self.big_r.precision()))
    }
}

fn potential<T: Real>(table: &RecurrenceTable<T>, bits: u32) -> PotentialData<T> {
    PotentialData { t: T::from_f64(table.params.t, bits), alpha: T::from_f64(table.params.alpha, bits) }
}

/// β_n A_n A_{n−1}, zero for n = 0.
fn beta_aa<T: Real>(table: &RecurrenceTable<T>, n: usize, x: &T, lad: &LadderPair<T>) -> T {
    if n == 0 {
        return T::zero(x.precision());
    }
    let prev = LadderPair::from_table(table, n - 1);
    table.beta[n].clone() * lad.a(x) * prev.a(x)
}

/// Relative residual of P″ − (v′ + A′/A)P′ + (B′ − B² − v′B + β_n A_n A_{n−1} − A′B/A)P
/// at `x`, each term scaled by the largest one. Needs n ≤ table.n_max.
pub fn ode_residual_with<T: Real>(table: &RecurrenceTable<T>, n: usize, x: &T) -> Result<f64> {
    if n > table.n_max {
        return Err(Error::InvalidArgument(format!("table holds n ≤ {}, asked for {n}", table.n_max)));
    }
    if !(x.to_f64_lossy() > 0.0) {
        return Err(Error::Domain("the ODE is posed on x > 0".into()));
    }
    let bits = x.precision();
    let v = potential(table, bits);
    let lad = LadderPair::from_table(table, n);
    let e = table.eval(n, x);
    let (a, da, b, db, dv) = (lad.a(x), lad.da(x), lad.b(x), lad.db(x), v.dv(x));
    let p = e.p_n.clone();
    let terms = [
        e.dd_n.clone(),
        -(dv.clone() * e.d_n.clone()),
        -(da.clone() / a.clone() * e.d_n.clone()),
        db * p.clone(),
        -(b.clone() * b.clone() * p.clone()),
        -(dv * b.clone() * p.clone()),
        beta_aa(table, n, x, &lad) * p.clone(),
        -(da * b / a * p),
    ];
    Ok(relative_residual(&terms))
}

/// Relative residual of x P″ + (α + 1 − x) P′ + n P, the t = 0 form.
pub fn classical_ode_residual_with<T: Real>(table: &RecurrenceTable<T>, n: usize, x: &T) -> f64 {
    let bits = x.precision();
    let e = table.eval(n, x);
    let a1 = T::from_f64(table.params.alpha + 1.0, bits) - x.clone();
    relative_residual(&[x.clone() * e.dd_n, a1 * e.d_n, T::from_i64(n as i64, bits) * e.p_n])
}

/// ODE residual at one point.
#[derive(Clone, Debug, Serialize)]
pub struct OdeResidual {
    pub n: usize,
    pub x: f64,
    pub residual: f64,
    /// Residual of the classical form, present at t = 0.
    pub classical: Option<f64>,
    pub bits_used: u32,
}

pub fn ode_residual(n: usize, x: f64, params: &WeightParams) -> Result<OdeResidual> {
    let table = recurrence_table(n, params)?;
    let xf = Float::with_val(table.bits_used, x);
    let residual = ode_residual_with(&table, n, &xf)?;
    let classical = (params.t == 0.0).then(|| classical_ode_residual_with(&table, n, &xf));
    Ok(OdeResidual { n, x, residual, classical, bits_used: table.bits_used })
}

/// Zeros of P_n, ascending.
#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub n: usize,
    pub params: WeightParams,
    pub zeros: Vec<Float>,
    pub rel_err_bound: f64,
    pub bits_used: u32,
    /// Largest relative Newton correction |P_n/(x P_n′)| at the returned zeros.
    pub max_residual: f64,
}

impl ZeroSet {
    pub fn as_f64(&self) -> Vec<f64> {
        self.zeros.iter().map(|z| z.to_f64()).collect()
    }

    pub fn certified(&self) -> Vec<CertifiedReal> {
        self.zeros
            .iter()
            .map(|z| Certified { value: z.clone(), rel_err_bound: self.rel_err_bound, bits_used: self.bits_used })
            .collect()
    }
}

fn newton_step(alpha: &[Float], beta: &[Float], n: usize, x: &Float) -> Float {
    let e = eval_recurrence(alpha, beta, n, x);
    if e.d_n.is_zero() {
        return Float::with_val(x.prec(), 0);
    }
    e.p_n / e.d_n
}

/// Jacobi-matrix eigenvalues polished by Newton, at working precision `bits`.
fn zeros_at(n: usize, t: f64, alpha: f64, bits: u32) -> Result<Vec<Float>> {
    let raw = raw_table(n - 1, &Float::with_val(bits, t), &Float::with_val(bits, alpha))?;
    let off: Vec<Float> = raw.beta[1..n].iter().map(|b| b.clone().sqrt()).collect();
    let mut z = tridiagonal_eigenvalues(&raw.alpha[..n], &off, bits)?;
    let tol = Float::with_val(bits, Float::i_exp(1, 4 - bits as i32));
    for x in z.iter_mut() {
        for _ in 0..8 {
            let step = newton_step(&raw.alpha, &raw.beta, n, x);
            *x -= &step;
            if step.abs() <= Float::with_val(bits, &tol * x.clone().abs()) {
                break;
            }
        }
    }
    Ok(z)
}

fn check_zero_ordering(z: &[Float]) -> Result<()> {
    if let Some(first) = z.first() {
        if !first.is_sign_positive() || first.is_zero() {
            return Err(Error::PropertyViolation { item: "zeros positive".into(), margin: first.to_f64() });
        }
    }
    for w in z.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::PropertyViolation {
                item: "zeros strictly increasing".into(),
                margin: Float::with_val(w[0].prec(), &w[1] - &w[0]).to_f64(),
            });
        }
    }
    Ok(())
}

/// Certified zeros of P_n for n ≥ 1.
pub fn zeros(n: usize, params: &WeightParams) -> Result<ZeroSet> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("P_0 has no zeros".into()));
    }
    let (t, a) = (params.t, params.alpha);
    let c = adaptive_eval(&params.policy, |bits| zeros_at(n, t, a, bits))?;
    check_zero_ordering(&c.value)?;
    let raw = raw_table(n - 1, &Float::with_val(c.bits_used, t), &Float::with_val(c.bits_used, a))?;
    let max_residual = c
        .value
        .iter()
        .map(|x| {
            let s = newton_step(&raw.alpha, &raw.beta, n, x);
            (s / x).abs().to_f64()
        })
        .fold(0.0, f64::max);
    Ok(ZeroSet {
        n,
        params: *params,
        zeros: c.value,
        rel_err_bound: c.rel_err_bound,
        bits_used: c.bits_used,
        max_residual,
    })
}

/// One checked inequality with its margin; positive margins pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyItem {
    pub item: String,
    pub margin: f64,
    pub passed: bool,
}

impl PropertyItem {
    fn new(item: impl Into<String>, margin: f64) -> Self {
        PropertyItem { item: item.into(), margin, passed: margin > 0.0 }
    }
}

/// Results of the four zero theorems for one n.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroReport {
    pub n: usize,
    pub t: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub zeros: Vec<f64>,
    pub a_n: f64,
    pub b_n: f64,
    pub inner_bound: f64,
    pub items: Vec<PropertyItem>,
    pub alpha_flagged: bool,
}

impl ZeroReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn first_failure(&self) -> Option<&PropertyItem> {
        self.items.iter().find(|i| !i.passed)
    }
}

fn to_bits(v: &Float, bits: u32) -> Float {
    Float::with_val(bits, v)
}

/// Smallest value of `hi − lo` over pairs, relative to `scale`.
fn min_gap<'a>(pairs: impl Iterator<Item = (&'a Float, &'a Float)>, scale: &Float) -> f64 {
    pairs
        .map(|(lo, hi)| (Float::with_val(hi.prec().max(lo.prec()), hi - lo) / scale).to_f64())
        .fold(f64::INFINITY, f64::min)
}

/// Outer bounds (a_n, b_n) from the chain-sequence formulas with c = `c_n`.
pub fn outer_bounds(table: &RecurrenceTable<Float>, n: usize, c_n: &Float) -> (Float, Float) {
    let bits = table.bits_used;
    let mut lo = Float::with_val(bits, f64::INFINITY);
    let mut hi = Float::with_val(bits, f64::NEG_INFINITY);
    for k in 1..n {
        let mid = Float::with_val(bits, &table.alpha[k] + &table.alpha[k - 1]) / 2u32;
        let diff = Float::with_val(bits, &table.alpha[k] - &table.alpha[k - 1]);
        let disc = diff.square() + Float::with_val(bits, c_n * &table.beta[k]) * 4u32;
        let half = disc.sqrt() / 2u32;
        lo = lo.min(&Float::with_val(bits, &mid - &half));
        hi = hi.max(&Float::with_val(bits, &mid + &half));
    }
    (lo, hi)
}

/// c_n = 4 cos²(π/(n + 1)) + ε.
pub fn chain_constant(n: usize, epsilon: f64, bits: u32) -> Float {
    let c = (Float::with_val(bits, rug::float::Constant::Pi) / (n as u32 + 1)).cos();
    c.square() * 4u32 + epsilon
}

/// (−1)^k P_k(0; t, α) = D_k(α + 1)/D_k(α) for k = 0..=n, from the determinant
/// logarithms held by two tables.
fn zero_ratios(lo: &RecurrenceTable<Float>, hi: &RecurrenceTable<Float>, n: usize, bits: u32) -> Vec<Float> {
    (0..=n).map(|k| Float::with_val(bits, &hi.ln_d[k] - &lo.ln_d[k]).exp()).collect()
}

/// d_n and e_n of the mixed recurrence, from determinant ratios at α and α + 1.
pub fn mixed_coefficients(
    at_alpha: &RecurrenceTable<Float>,
    at_alpha1: &RecurrenceTable<Float>,
    at_alpha2: &RecurrenceTable<Float>,
    n: usize,
    bits: u32,
) -> (Float, Float) {
    let z0 = zero_ratios(at_alpha, at_alpha1, n, bits);
    let z1 = zero_ratios(at_alpha1, at_alpha2, n - 1, bits);
    let s_n = -Float::with_val(bits, &z0[n] / &z0[n - 1]);
    let s_n1 = -Float::with_val(bits, &z0[n - 1] / &z0[n - 2]);
    let q = -Float::with_val(bits, &z1[n - 1] / &z1[n - 2]);
    let d = Float::with_val(bits, &s_n + &q);
    let e = q * s_n1;
    (d, e)
}

/// Every inequality of the zero theorem for P_n. Never fails on a violated
/// inequality; see [`zero_properties`] for the checked form.
pub fn zero_property_report(
    n: usize,
    params: &WeightParams,
    t_step: f64,
    alpha_step: f64,
    epsilon: f64,
) -> Result<ZeroReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("zero properties need n ≥ 2".into()));
    }
    if !(epsilon >= 0.0) || !(t_step > 0.0) || !(alpha_step > 0.0) {
        return Err(Error::InvalidArgument("ε ≥ 0 and positive steps are required".into()));
    }
    let zs = zeros(n, params)?;
    let prev = zeros(n - 1, params)?;
    let zs_t = zeros(n, &params.with_t(params.t + t_step))?;
    let zs_a = zeros(n, &params.shift_alpha(alpha_step))?;
    let table = recurrence_table(n, params)?;
    let table1 = recurrence_table(n, &params.shift_alpha(1.0))?;
    let table2 = recurrence_table(n, &params.shift_alpha(2.0))?;
    let bits = [zs.bits_used, prev.bits_used, table.bits_used, table1.bits_used, table2.bits_used]
        .into_iter()
        .max()
        .unwrap();
    let z: Vec<Float> = zs.zeros.iter().map(|v| to_bits(v, bits)).collect();
    let scale = z[n - 1].clone();
    let mut items = Vec::new();

    items.push(PropertyItem::new("positivity", (Float::with_val(bits, &z[0] / &scale)).to_f64()));
    items.push(PropertyItem::new("distinct", min_gap(z.iter().zip(z.iter().skip(1)), &scale)));
    let y: Vec<Float> = prev.zeros.iter().map(|v| to_bits(v, bits)).collect();
    let below = min_gap(z.iter().zip(y.iter()), &scale);
    let above = min_gap(y.iter().zip(z.iter().skip(1)), &scale);
    items.push(PropertyItem::new("interlacing", below.min(above)));

    items.push(PropertyItem::new("increase with t", min_gap(zs.zeros.iter().zip(zs_t.zeros.iter()), &scale)));
    items.push(PropertyItem::new("increase with alpha", min_gap(zs.zeros.iter().zip(zs_a.zeros.iter()), &scale)));

    let c_n = chain_constant(n, epsilon, bits);
    let (a_n, b_n) = outer_bounds(&table, n, &c_n);
    let a_mid = to_bits(&table.alpha[n - 1], bits);
    items.push(PropertyItem::new("a_n < x_1", Float::with_val(bits, &z[0] - &a_n).to_f64() / scale.to_f64()));
    items.push(PropertyItem::new("x_1 < alpha_{n-1}", Float::with_val(bits, &a_mid - &z[0]).to_f64() / scale.to_f64()));
    items.push(PropertyItem::new("alpha_{n-1} < x_n", Float::with_val(bits, &z[n - 1] - &a_mid).to_f64() / scale.to_f64()));
    items.push(PropertyItem::new("x_n < b_n", Float::with_val(bits, &b_n - &z[n - 1]).to_f64() / scale.to_f64()));

    let (d_n, e_n) = mixed_coefficients(&table, &table1, &table2, n, bits);
    let inner = a_mid.clone() + Float::with_val(bits, &d_n * &table.beta[n - 1]) / &e_n;
    items.push(PropertyItem::new("x_1 < inner bound", Float::with_val(bits, &inner - &z[0]).to_f64() / scale.to_f64()));
    items.push(PropertyItem::new("inner bound < x_n", Float::with_val(bits, &z[n - 1] - &inner).to_f64() / scale.to_f64()));

    Ok(ZeroReport {
        n,
        t: params.t,
        alpha: params.alpha,
        epsilon,
        zeros: zs.as_f64(),
        a_n: a_n.to_f64(),
        b_n: b_n.to_f64(),
        inner_bound: inner.to_f64(),
        items,
        alpha_flagged: params.alpha_flagged(),
    })
}

/// [`zero_property_report`] that turns the first violated inequality into an error.
pub fn zero_properties(
    n: usize,
    params: &WeightParams,
    t_step: f64,
    alpha_step: f64,
    epsilon: f64,
) -> Result<ZeroReport> {
    let report = zero_property_report(n, params, t_step, alpha_step, epsilon)?;
    if let Some(bad) = report.first_failure() {
        return Err(Error::PropertyViolation { item: bad.item.clone(), margin: bad.margin });
    }
    Ok(report)
}

/// F(x) of Q_n″ + F Q_n = 0, where Q_n = √(w/A_n) P_n.
pub fn sturm_function<T: Real>(table: &RecurrenceTable<T>, n: usize, x: &T) -> T {
    let bits = x.precision();
    let v = potential(table, bits);
    let lad = LadderPair::from_table(table, n);
    let (a, da, d2a, b, db) = (lad.a(x), lad.da(x), lad.d2a(x), lad.b(x), lad.db(x));
    let (dv, d2v) = (v.dv(x), v.d2v(x));
    let two = T::from_i64(2, bits);
    let four = T::from_i64(4, bits);
    beta_aa(table, n, x, &lad) - T::from_i64(3, bits) * da.clone() * da.clone() / (four.clone() * a.clone() * a.clone())
        + (d2a - da.clone() * dv.clone() - two.clone() * da * b.clone()) / (two.clone() * a)
        - b.clone() * b.clone()
        + db
        - b * dv.clone()
        - dv.clone() * dv / four
        + d2v / two
}

/// Sampled behaviour of F on an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpacingReport {
    pub n: usize,
    pub interval: (f64, f64),
    pub samples: usize,
    /// Sampled maximum of F, an estimate of M₁.
    pub f_max: f64,
    /// Sampled minimum of F, an estimate of M₂.
    pub f_min: f64,
    pub monotonicity: Monotonicity,
    pub zeros_in_interval: Vec<f64>,
    pub items: Vec<PropertyItem>,
}

impl SpacingReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

const SPACING_START_SAMPLES: usize = 512;
const SPACING_MAX_SAMPLES: usize = 1 << 16;

fn sample_f(table: &RecurrenceTable<Float>, n: usize, c: f64, d: f64, count: usize) -> Vec<f64> {
    let bits = table.bits_used;
    (0..count)
        .map(|i| {
            let x = c + (d - c) * (i as f64 + 0.5) / count as f64;
            sturm_function(table, n, &Float::with_val(bits, x)).to_f64()
        })
        .collect()
}

fn extrema(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Sturm comparison and convexity checks for the zeros of P_n in (c, d).
pub fn spacing_check(n: usize, params: &WeightParams, interval: (f64, f64)) -> Result<SpacingReport> {
    let (c, d) = interval;
    if !(c > 0.0 && d > c && d.is_finite()) {
        return Err(Error::InvalidArgument(format!("interval ({c}, {d}) must satisfy 0 < c < d")));
    }
    let zs = zeros(n.max(1), params)?;
    let inside: Vec<f64> = zs.as_f64().into_iter().filter(|&x| x > c && x < d).collect();
    if inside.len() < 2 {
        return Err(Error::InsufficientZeros { found: inside.len(), needed: 2 });
    }
    let table = recurrence_table(n, params)?;
    let mut count = SPACING_START_SAMPLES;
    let mut samples = sample_f(&table, n, c, d, count);
    let (mut lo, mut hi) = extrema(&samples);
    while count < SPACING_MAX_SAMPLES {
        let next = sample_f(&table, n, c, d, 2 * count);
        let (nlo, nhi) = extrema(&next);
        let stable = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs());
        count *= 2;
        samples = next;
        let done = stable(lo, nlo) && stable(hi, nhi);
        lo = nlo;
        hi = nhi;
        if done {
            break;
        }
    }
    let monotonicity = if samples.windows(2).all(|w| w[1] > w[0]) {
        Monotonicity::Increasing
    } else if samples.windows(2).all(|w| w[1] < w[0]) {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Neither
    };
    let gaps: Vec<f64> = inside.windows(2).map(|w| w[1] - w[0]).collect();
    let mut items = Vec::new();
    let pi = std::f64::consts::PI;
    if hi > 0.0 {
        let bound = pi / hi.sqrt();
        let m = gaps.iter().map(|g| (g - bound) / bound).fold(f64::INFINITY, f64::min);
        items.push(PropertyItem::new("gap > pi/sqrt(M1)", m));
    }
    if lo > 0.0 {
        let bound = pi / lo.sqrt();
        let m = gaps.iter().map(|g| (bound - g) / bound).fold(f64::INFINITY, f64::min);
        items.push(PropertyItem::new("gap < pi/sqrt(M2)", m));
    }
    if inside.len() >= 3 && monotonicity != Monotonicity::Neither {
        let scale = gaps.iter().cloned().fold(0.0, f64::max);
        let second: Vec<f64> = gaps.windows(2).map(|w| (w[1] - w[0]) / scale).collect();
        let (name, m) = match monotonicity {
            Monotonicity::Increasing => ("zeros concave", second.iter().map(|s| -s).fold(f64::INFINITY, f64::min)),
            _ => ("zeros convex", second.iter().cloned().fold(f64::INFINITY, f64::min)),
        };
        items.push(PropertyItem::new(name, m));
    }
    Ok(SpacingReport {
        n,
        interval,
        samples: count,
        f_max: hi,
        f_min: lo,
        monotonicity,
        zeros_in_interval: inside,
        items,
    })
}

/// Relative residuals of the mixed recurrence and both Christoffel–Darboux forms.
#[derive(Clone, Debug, Serialize)]
pub struct StructuralResiduals {
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub mixed: f64,
    /// Absent when x = y.
    pub cd_two_point: Option<f64>,
    pub cd_confluent: f64,
    pub bits_used: u32,
    pub rel_err_bound: f64,
}

/// x² P_{n−2}(x; α+2) against its expansion in P_n(x; α) and P_{n−1}(x; α),
/// using tables built independently at α, α + 1 and α + 2.
pub fn mixed_recurrence_residual(
    tables: [&RecurrenceTable<Float>; 3],
    n: usize,
    x: &Float,
) -> f64 {
    let bits = x.prec();
    let [t0, t1, t2] = tables;
    let (d_n, e_n) = mixed_coefficients(t0, t1, t2, n, bits);
    let lhs_p = t2.eval(n - 2, x).p_n;
    let e = t0.eval(n, x);
    let ratio = Float::with_val(bits, &e_n / &t0.beta[n - 1]);
    let c_prev = Float::with_val(bits, &ratio * Float::with_val(bits, x - &t0.alpha[n - 1])) - &d_n;
    let c_n = Float::with_val(bits, 1) - &ratio;
    let lhs = Float::with_val(bits, x.clone().square() * lhs_p);
    relative_residual(&[lhs, -(c_prev * e.p_prev), -(c_n * e.p_n)])
}

fn cd_sum(table: &RecurrenceTable<Float>, n: usize, x: &Float, y: &Float) -> (Float, Float) {
    let bits = x.prec();
    let (mut sum, mut scale) = (Float::with_val(bits, 0), Float::with_val(bits, 0));
    for j in 0..n {
        let term = table.eval(j, x).p_n * table.eval(j, y).p_n / &table.h[j];
        scale = scale.max(&term.clone().abs());
        sum += term;
    }
    (sum, scale)
}

/// Σ_{j<n} P_j(x)P_j(y)/h_j = [P_n(x)P_{n−1}(y) − P_{n−1}(x)P_n(y)] / (h_{n−1}(x − y)).
pub fn christoffel_darboux_residual(table: &RecurrenceTable<Float>, n: usize, x: &Float, y: &Float) -> f64 {
    let bits = x.prec();
    let (lhs, scale) = cd_sum(table, n, x, y);
    let (ex, ey) = (table.eval(n, x), table.eval(n, y));
    let num = Float::with_val(bits, &ex.p_n * &ey.p_prev) - Float::with_val(bits, &ex.p_prev * &ey.p_n);
    let rhs = num / Float::with_val(bits, &table.h[n - 1] * Float::with_val(bits, x - y));
    let s = scale.max(&rhs.clone().abs());
    (Float::with_val(bits, &lhs - &rhs).abs() / s).to_f64()
}

/// Σ_{j<n} P_j(x)²/h_j = [P_n′(x)P_{n−1}(x) − P_{n−1}′(x)P_n(x)] / h_{n−1}.
pub fn christoffel_darboux_confluent_residual(table: &RecurrenceTable<Float>, n: usize, x: &Float) -> f64 {
    let bits = x.prec();
    let (lhs, scale) = cd_sum(table, n, x, x);
    let e = table.eval(n, x);
    let num = Float::with_val(bits, &e.d_n * &e.p_prev) - Float::with_val(bits, &e.d_prev * &e.p_n);
    let rhs = num / &table.h[n - 1];
    let s = scale.max(&rhs.clone().abs());
    (Float::with_val(bits, &lhs - &rhs).abs() / s).to_f64()
}

pub fn structural_residuals(n: usize, x: f64, y: f64, params: &WeightParams) -> Result<StructuralResiduals> {
    Ok(structural_residuals_upto(n, x, y, params)?.pop().expect("n ≥ 2 yields one entry"))
}

/// [`structural_residuals`] for every n in 2..=n_max from one set of tables.
pub fn structural_residuals_upto(
    n_max: usize,
    x: f64,
    y: f64,
    params: &WeightParams,
) -> Result<Vec<StructuralResiduals>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("structural residuals need n ≥ 2".into()));
    }
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Domain("x and y must be positive".into()));
    }
    let t0 = recurrence_table(n_max, params)?;
    let t1 = recurrence_table(n_max, &params.shift_alpha(1.0))?;
    let t2 = recurrence_table(n_max, &params.shift_alpha(2.0))?;
    let bits = t0.bits_used.min(t1.bits_used).min(t2.bits_used);
    let bound = t0.rel_err_bound.max(t1.rel_err_bound).max(t2.rel_err_bound);
    let (xf, yf) = (Float::with_val(bits, x), Float::with_val(bits, y));
    Ok((2..=n_max)
        .map(|n| StructuralResiduals {
            n,
            x,
            y,
            mixed: mixed_recurrence_residual([&t0, &t1, &t2], n, &xf),
            cd_two_point: (x != y).then(|| christoffel_darboux_residual(&t0, n, &xf, &yf)),
            cd_confluent: christoffel_darboux_confluent_residual(&t0, n, &xf),
            bits_used: bits,
            rel_err_bound: bound,
        })
        .collect())
}

/// (−1)^n P_n(0) from the determinant ratio and from the recurrence.
#[derive(Clone, Debug)]
pub struct ZeroValueRoutes {
    pub n: usize,
    pub determinant: Float,
    pub recurrence: Float,
    pub rel_diff: f64,
    pub tolerance: f64,
}

pub fn pn_zero_routes(n: usize, params: &WeightParams) -> Result<ZeroValueRoutes> {
    Ok(pn_zero_routes_upto(n, params)?.swap_remove(n))
}

/// [`pn_zero_routes`] for every n in 0..=n_max from one pair of tables.
pub fn pn_zero_routes_upto(n_max: usize, params: &WeightParams) -> Result<Vec<ZeroValueRoutes>> {
    let lo = recurrence_table(n_max, params)?;
    let hi = recurrence_table(n_max, &params.shift_alpha(1.0))?;
    let bits = lo.bits_used.min(hi.bits_used);
    let tolerance = crate::recurrence::combined_tolerance(lo.rel_err_bound + hi.rel_err_bound, bits) * 10.0;
    let dets = zero_ratios(&lo, &hi, n_max, bits);
    let zero = Float::with_val(bits, 0);
    Ok(dets
        .into_iter()
        .enumerate()
        .map(|(n, det)| {
            let mut rec = lo.eval(n, &zero).p_n;
            if n % 2 == 1 {
                rec = -rec;
            }
            let d = rel_diff(&det, &rec);
            ZeroValueRoutes { n, determinant: det, recurrence: rec, rel_diff: d, tolerance }
        })
        .collect())
}

/// ∫ P_j P_k w dx against h_j δ_{jk} for j, k ≤ `k_max`; returns the largest
/// relative error, measured against max(h_j, h_k) off the diagonal.
///
/// Off-diagonal entries come from ∫ (P_j + P_k)² w by polarization, so every
/// quadrature has a positive integrand and a meaningful relative stopping rule.
pub fn orthogonality_error(k_max: usize, params: &WeightParams) -> Result<f64> {
    let table = recurrence_table(k_max, params)?;
    let (t, a) = (params.t, params.alpha);
    let window = two_sided_gamma_window(a + k_max as f64 + 1.0, t);
    let window = crate::numerics::quadrature::Window { scale: window.scale.max(0.5), ..window };
    let pairs: Vec<(usize, usize)> = (0..=k_max).flat_map(|j| (j..=k_max).map(move |k| (j, k))).collect();
    let grams = adaptive_eval(&params.policy, |bits| {
        let wb = bits + GUARD_BITS;
        let al: Vec<Float> = table.alpha.iter().map(|v| Float::with_val(wb, v)).collect();
        let be: Vec<Float> = table.beta.iter().map(|v| Float::with_val(wb, v)).collect();
        let (tw, aw) = (Float::with_val(wb, t), Float::with_val(wb, a));
        pairs
            .iter()
            .map(|&(j, k)| {
                de_integrate(
                    |u: &Float| {
                        let x = u.clone().exp();
                        let tail = if t == 0.0 { Float::with_val(wb, 0) } else { Float::with_val(wb, &tw / &x) };
                        let w = (Float::with_val(wb, &aw * u) + u - &x - tail).exp();
                        let s = eval_recurrence(&al, &be, j, &x).p_n;
                        let s = if j == k { s } else { s + eval_recurrence(&al, &be, k, &x).p_n };
                        s.square() * w
                    },
                    window,
                    bits,
                )
            })
            .collect::<Result<Vec<Float>>>()
    })?;
    let bits = grams.bits_used;
    let diag: Vec<Float> = (0..=k_max).map(|j| grams.value[pairs.iter().position(|&p| p == (j, j)).unwrap()].clone()).collect();
    let mut worst: f64 = 0.0;
    for (&(j, k), g) in pairs.iter().zip(&grams.value) {
        let hj = Float::with_val(bits, &table.h[j]);
        let err = if j == k {
            rel_diff(g, &hj)
        } else {
            let off = Float::with_val(bits, g - &diag[j]) - &diag[k];
            let hk = Float::with_val(bits, &table.h[k]);
            (off / 2u32 / hj.max(&hk)).abs().to_f64()
        };
        worst = worst.max(err);
    }
    Ok(worst)
}
