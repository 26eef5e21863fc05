//! Published closed forms, parameter values and expansion coefficients.

use oplab::asymptotics::{
    alpha_zero_bessel, endpoints, large_n, ln_barnes_g, long_time, long_time_lnd_constant, quartic_coefficients,
    sign_changes, Quantity,
};
use oplab::identities::{painleve_parameters, sigma_parameters};
use oplab::recurrence::recurrence_table;
use oplab::{Error, PrecisionPolicy, WeightParams};
use rug::Float;

const BITS: u32 = 256;

fn fl(v: f64) -> Float {
    Float::with_val(BITS, v)
}

#[test]
fn classical_recurrence_coefficients() {
    for alpha in [-0.5, 0.0, 1.7] {
        let table = recurrence_table(12, &WeightParams::new(0.0, alpha).unwrap()).unwrap();
        for n in 0..=12 {
            let a = Float::with_val(BITS, fl(alpha) + (2 * n as u32 + 1));
            let b = Float::with_val(BITS, fl(alpha) + n as u32) * n as u32;
            assert!(Float::with_val(BITS, &table.alpha[n] - &a).abs() < 1e-28 * a.to_f64().abs());
            if n > 0 {
                assert!(Float::with_val(BITS, &table.beta[n] - &b).abs() < 1e-28 * b.to_f64());
            }
            assert!(table.big_r[n].is_zero() && table.small_r[n].is_zero() && table.big_h[n].is_zero());
        }
    }
}

#[test]
fn painleve_and_sigma_parameters() {
    assert_eq!(painleve_parameters(2, 0.5), [4.0 * 5.5, 2.0, 4.0, -4.0]);
    assert_eq!(sigma_parameters(5, 0.5), (0.5, -10.5));
}

#[test]
fn alpha_n_leading_terms() {
    let (n, t, a) = (fl(1000.0), fl(2.0), fl(0.5));
    let r = large_n(Quantity::AlphaN, &n, &t, &a, None).unwrap();
    let k = fl(2.0).cbrt();
    let t13 = fl(2.0).cbrt();
    let n13 = fl(1000.0).cbrt();
    let lead = [
        fl(2000.0),
        fl(1.5),
        Float::with_val(BITS, t13.clone().square()) / Float::with_val(BITS, &k * &n13),
        -(Float::with_val(BITS, &t13 * 0.5) / (Float::with_val(BITS, k.clone().square()) * 3u32 * n13.clone().square())),
    ];
    for (term, expect) in r.terms.iter().zip(&lead) {
        assert!(Float::with_val(BITS, &term.contribution - expect).abs() < 1e-60);
    }
    assert_eq!(r.remainder_order, -7.0 / 3.0);
}

#[test]
fn beta_n_series_at_alpha_zero() {
    let t = 1.5;
    let r = large_n(Quantity::BetaN, &fl(64.0), &fl(t), &fl(0.0), None).unwrap();
    let k = fl(2.0).cbrt();
    for term in &r.terms {
        let e = term.exponent;
        if [1.0, 1.0 / 3.0, -1.0 / 3.0, -1.0].contains(&e) {
            assert!(term.coefficient.is_zero(), "exponent {e}");
        }
    }
    let constant = r.terms.iter().find(|x| x.exponent == 0.0).unwrap();
    assert!((constant.coefficient.to_f64() + 1.0 / 36.0).abs() < 1e-15);
    let c = r.terms.iter().find(|x| (x.exponent + 2.0 / 3.0).abs() < 1e-12).unwrap();
    let expect = -(81.0 * t * t) / (972.0 * k.square().to_f64() * t.powf(2.0 / 3.0));
    assert!((c.coefficient.to_f64() - expect).abs() < 1e-14);
}

#[test]
fn expansions_are_singular_at_zero() {
    assert_eq!(large_n(Quantity::P, &10.0f64, &0.0, &0.5, None).unwrap_err(), Error::SingularAtZero);
    assert_eq!(long_time(Quantity::LnD, 2, &0.0f64, &0.5).unwrap_err(), Error::SingularAtZero);
}

#[test]
fn barnes_constant_values() {
    let ln2 = std::f64::consts::LN_2;
    let lnpi = std::f64::consts::PI.ln();
    assert!((ln_barnes_g::<f64>(3, 53) - ln2).abs() < 1e-15);
    assert_eq!(long_time_lnd_constant::<f64>(0, 53), 0.0);
    assert!((long_time_lnd_constant::<f64>(1, 53) - lnpi / 2.0).abs() < 1e-15);
    for n in 1..8u64 {
        let c = |k| long_time_lnd_constant::<f64>(k, 53);
        let second = c(n + 1) + c(n - 1) - 2.0 * c(n);
        assert!((second - (n as f64 / 2.0).ln()).abs() < 1e-12, "n = {n}");
    }
}

#[test]
fn long_time_lnd_vanishes_at_n_zero() {
    for t in [10.0, 1e4] {
        let r = long_time(Quantity::LnD, 0, &fl(t), &fl(0.5)).unwrap();
        assert!(r.value.is_zero());
    }
}

#[test]
fn alpha_zero_bessel_ratio_against_long_time_series() {
    let a = fl(0.5);
    let mut scaled = Vec::new();
    for t in [1e4, 1e6] {
        let exact = alpha_zero_bessel(&fl(t), &a).unwrap();
        let table = recurrence_table(1, &WeightParams::new(t, 0.5).unwrap()).unwrap();
        assert!(Float::with_val(BITS, &exact - &table.alpha[0]).abs() < 1e-25 * exact.to_f64());
        let series = long_time(Quantity::AlphaN, 0, &fl(t), &a).unwrap();
        scaled.push((exact - series.value).to_f64().abs() * t.powf(1.5));
    }
    assert!(scaled[1] / scaled[0] > 0.5 && scaled[1] / scaled[0] < 2.0, "{scaled:?}");
}

#[test]
fn y_series_at_large_n() {
    let e = endpoints(1e6, 1.0, 0.5, &PrecisionPolicy::default()).unwrap();
    let s = large_n(Quantity::Y, &Float::with_val(e.bits_used, 1e6), &fl(1.0), &fl(0.5), None).unwrap();
    let rel = (Float::with_val(BITS, &e.y - &s.value) / &e.y).to_f64().abs();
    assert!(rel < 1e-10, "{rel:e}");
}

#[test]
fn quartic_has_one_sign_change() {
    for (n, t, a) in [(1.0, 0.1, -0.9), (5.0, 1.0, 0.0), (50.0, 10.0, 3.0)] {
        let c = quartic_coefficients(&n, &t, &a);
        assert_eq!(sign_changes(&c), 1);
    }
}
