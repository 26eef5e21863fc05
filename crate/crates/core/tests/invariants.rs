//! Structural invariants over randomly drawn parameters.

use oplab::asymptotics::{
    endpoints_at, large_n, long_time, quartic_coefficients, remainder_slope, sign_changes, Quantity,
};
use oplab::hankel::{hankel_sequence, norm_constant};
use oplab::moments::{moment, moment_table};
use oplab::numerics::diff::t_derivative;
use oplab::numerics::precision::adaptive_eval_traced;
use oplab::numerics::quadrature::de_quadrature;
use oplab::polynomials::{zeros, LadderPair};
use oplab::recurrence::recurrence_table;
use oplab::scalar::rel_diff;
use oplab::{PrecisionPolicy, WeightParams};
use proptest::prelude::*;
use rug::ops::Pow;
use rug::Float;

fn policy() -> PrecisionPolicy {
    PrecisionPolicy::default()
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 12, ..ProptestConfig::default() }
}

#[test]
fn gamma_integrals() {
    for s in [0.5, 1.0, 2.5, 7.0] {
        let v = de_quadrature(
            |x: &Float| {
                let p = x.prec();
                Float::with_val(p, x.pow(s - 1.0)) * Float::with_val(p, -x).exp()
            },
            &policy(),
        )
        .unwrap();
        let g = Float::with_val(256, s).gamma();
        assert!(rel_diff(&v.value, &g) <= 1e-30, "s = {s}");
    }
}

#[test]
fn refinement_bound_never_grows() {
    let p = PrecisionPolicy::new(128, 2048, 1e-120).unwrap();
    let (_, levels) = adaptive_eval_traced(&p, |bits| {
        oplab::moments::moment_direct_at(2, &Float::with_val(bits, 1.0), &Float::with_val(bits, 0.5))
    })
    .unwrap();
    let bounds: Vec<f64> = levels.iter().filter_map(|l| l.agreement).collect();
    assert!(bounds.len() >= 2);
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]), "{bounds:?}");
}

#[test]
fn quartic_polynomial_derivative_is_exact() {
    let d = t_derivative(
        |t: &Float| Ok(Float::with_val(t.prec(), t.pow(4u32)) - Float::with_val(t.prec(), t * 3u32)),
        1.5,
        1,
        &policy(),
    )
    .unwrap();
    let expect = Float::with_val(256, 4.0 * 1.5f64.powi(3) - 3.0);
    assert!(rel_diff(&d.value, &expect) <= 1e-30);
}

#[test]
fn slope_fit_rejects_remainders_at_noise_level() {
    let grid = [1.0, 3.0, 10.0, 30.0, 100.0];
    let exact = |x: f64| Ok((Float::with_val(256, x), 0.0));
    // a remainder of one ulp is noise, not an asymptotic order
    let series = |x: f64, bits: u32| Ok(Float::with_val(bits, x) * (1.0 - 2f64.powi(-200)));
    let err = remainder_slope(&grid, exact, series, -1.0).unwrap_err();
    assert!(matches!(err, oplab::Error::RemainderBelowNoise { .. }), "{err:?}");
    let series = |x: f64, bits: u32| Ok(Float::with_val(bits, x) - Float::with_val(bits, x).recip());
    let fit = remainder_slope(&grid, exact, series, -1.0).unwrap();
    assert!(fit.deviation.abs() < 1e-12, "{fit:?}");
}

#[test]
fn orthogonality_spot_check() {
    for t in [0.5, 1.0] {
        let p = WeightParams::new(t, 0.5).unwrap();
        let err = oplab::polynomials::orthogonality_error(4, &p).unwrap();
        assert!(err <= 10.0 * p.policy.target_rel_err, "t = {t}: {err:e}");
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn moments_decrease_in_t(t in 0.01f64..5.0, alpha in -0.9f64..3.0, j in 0usize..6) {
        let p = WeightParams::new(t, alpha).unwrap();
        let lo = moment(j, &p).unwrap();
        let hi = moment(j, &p.with_t(t * 1.5)).unwrap();
        prop_assert!(hi.value < lo.value);
    }

    #[test]
    fn moments_at_zero_are_gamma(alpha in -0.9f64..3.0, j in 0usize..8) {
        let m = moment(j, &WeightParams::new(0.0, alpha).unwrap()).unwrap();
        let g = (Float::with_val(256, alpha) + (j as u32 + 1)).gamma();
        prop_assert!(rel_diff(&m.value, &g) <= 1e-30);
    }

    #[test]
    fn moment_table_log_convex(t in 0.0f64..10.0, alpha in -0.9f64..3.0) {
        let table = moment_table(10, &WeightParams::new(t, alpha).unwrap()).unwrap();
        prop_assert!(table.log_convexity_margin().unwrap() > 0.0);
    }

    #[test]
    fn hankel_positivity_and_products(t in 0.0f64..10.0, alpha in -0.9f64..3.0) {
        let p = WeightParams::new(t, alpha).unwrap();
        let seq = hankel_sequence(8, &p).unwrap();
        prop_assert!(seq.d.iter().all(|d| d.is_sign_positive() && !d.is_zero()));
        let table = recurrence_table(8, &p).unwrap();
        for n in 1..8 {
            let beta = seq.beta(n).unwrap();
            prop_assert!(rel_diff(&beta, &table.beta[n]) <= 1e-28);
            let prod = table.h[..n].iter().fold(Float::with_val(table.bits_used, 1), |acc, h| acc * h);
            prop_assert!(rel_diff(&prod, &seq.d[n]) <= 1e-28);
        }
        let h3 = norm_constant(3, &p).unwrap();
        prop_assert!(rel_diff(&h3.value, &table.h[3]) <= 1e-28);
    }

    #[test]
    fn auxiliary_signs_and_sum_rules(t in 0.05f64..10.0, alpha in 0.05f64..3.0) {
        let p = WeightParams::new(t, alpha).unwrap();
        let table = recurrence_table(10, &p).unwrap();
        let bits = table.bits_used;
        let tf = Float::with_val(bits, t);
        let mut sum_r = Float::with_val(bits, 0);
        for n in 1..=10 {
            let classical = Float::with_val(bits, alpha) + (2 * n as u32 + 1);
            prop_assert!(table.big_r[n] > 0 && table.alpha[n] > classical);
            // r_n² − t r_n = β_n R_n R_{n−1} > 0 with r_n < 0
            prop_assert!(table.small_r[n] < 0);
            let lhs = Float::with_val(bits, table.small_r[n].square_ref()) - Float::with_val(bits, &tf * &table.small_r[n]);
            prop_assert!(lhs > 0);
            prop_assert!(table.p_identity_residual(n) <= 1e-28);
            sum_r += &table.big_r[n - 1];
            let h = Float::with_val(bits, -&sum_r);
            prop_assert!(rel_diff(&h, &table.big_h[n]) <= 1e-26);
            let tele = Float::with_val(bits, &table.big_h[n - 1] - &table.big_h[n]);
            prop_assert!(rel_diff(&tele, &table.big_r[n - 1]) <= 1e-26);
        }
    }

    #[test]
    fn monic_with_recurrence_subleading(t in 0.0f64..5.0, alpha in 0.05f64..2.0, n in 2usize..8) {
        let table = recurrence_table(n, &WeightParams::new(t, alpha).unwrap()).unwrap();
        let bits = table.bits_used;
        // Newton forward differences at x = 0..n recover the top two coefficients.
        let vals: Vec<Float> = (0..=n).map(|k| table.eval(n, &Float::with_val(bits, k as u32)).p_n).collect();
        let mut diffs = vals.clone();
        for _ in 0..n - 1 {
            diffs = diffs.windows(2).map(|w| Float::with_val(bits, &w[1] - &w[0])).collect();
        }
        let fact = |m: usize| Float::with_val(bits, Float::factorial(m as u32));
        let top = Float::with_val(bits, &diffs[1] - &diffs[0]) / fact(n);
        prop_assert!(rel_diff(&top, &Float::with_val(bits, 1)) <= 1e-25);
        let sub = Float::with_val(bits, &diffs[0] / fact(n - 1)) - (n * (n - 1) / 2) as u32;
        prop_assert!(rel_diff(&sub, &table.p[n]) <= 1e-20);
    }

    #[test]
    fn ladder_a_positive(t in 0.0f64..5.0, alpha in 0.05f64..2.0, n in 1usize..10) {
        let table = recurrence_table(n, &WeightParams::new(t, alpha).unwrap()).unwrap();
        prop_assert!(LadderPair::from_table(&table, n).a_positive_on_half_line());
    }

    #[test]
    fn zeros_interlace(t in 0.0f64..5.0, alpha in -0.5f64..2.0, n in 2usize..9) {
        let p = WeightParams::new(t, alpha).unwrap();
        let hi = zeros(n, &p).unwrap().as_f64();
        let lo = zeros(n - 1, &p).unwrap().as_f64();
        prop_assert!(hi[0] > 0.0);
        for k in 0..n - 1 {
            prop_assert!(hi[k] < lo[k] && lo[k] < hi[k + 1]);
        }
    }

    #[test]
    fn quartic_single_positive_root(n in 1.0f64..1e4, t in 0.01f64..100.0, alpha in -0.95f64..5.0) {
        let c = quartic_coefficients(&n, &t, &alpha);
        prop_assert_eq!(sign_changes(&c), 1);
        let e = endpoints_at(&Float::with_val(128, n), &Float::with_val(128, t), &Float::with_val(128, alpha)).unwrap();
        prop_assert!(e.residual <= 1e-30);
        let root = e.y.to_f64();
        // sampled sign pattern of the quartic on (0, 4·root)
        let f = |y: f64| y.powi(4) - alpha * y.powi(3) - (2.0 * n + alpha) * t * y - t * t;
        let samples: Vec<bool> = (1..400).map(|k| f(4.0 * root * k as f64 / 400.0) > 0.0).collect();
        prop_assert_eq!(samples.windows(2).filter(|w| w[0] != w[1]).count(), 1);
        prop_assert!(e.a > 0 && e.a < e.b);
        prop_assert!(rel_diff(&e.quarter_sq(), &e.quarter_sq_from_means()) <= 1e-35);
        let x = Float::with_val(128, &e.a + &e.b) / 2u32;
        prop_assert!(rel_diff(&x, &e.x) <= 1e-35);
        let y = Float::with_val(128, &e.a * &e.b).sqrt();
        prop_assert!(rel_diff(&y, &e.y) <= 1e-35);
    }

    #[test]
    fn reverse_sums_agree(n in 1.0f64..1e5, t in 0.1f64..10.0, alpha in -0.9f64..3.0, k in 0usize..11) {
        let q = Quantity::ALL[k];
        let (nf, tf, af) = (Float::with_val(200, n), Float::with_val(200, t), Float::with_val(200, alpha));
        let r = large_n(q, &nf, &tf, &af, Some((Float::with_val(200, -1.8), Float::with_val(200, 0.2)))).unwrap();
        prop_assert!(rel_diff(&r.value, &r.reverse_sum()) <= 1e-50);
        if q.has_long_time() {
            let r = long_time(q, n as u64, &tf, &af).unwrap();
            prop_assert!(rel_diff(&r.value, &r.reverse_sum()) <= 1e-50);
        }
    }

    #[test]
    fn endpoint_series_consistency(t in 0.2f64..5.0, alpha in 0.0f64..2.0) {
        let n = 1e6;
        let e = endpoints_at(&Float::with_val(200, n), &Float::with_val(200, t), &Float::with_val(200, alpha)).unwrap();
        let s = large_n(Quantity::QuarterSq, &Float::with_val(200, n), &Float::with_val(200, t), &Float::with_val(200, alpha), None).unwrap();
        prop_assert!(rel_diff(&e.quarter_sq(), &s.value) <= 1e-20);
    }
}
