//! Derivatives in t by central differences at elevated inner precision.

use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::precision::{adaptive_eval, Certified, PrecisionPolicy, Refine};
use crate::scalar::rel_diff;

/// Value and first two t-derivatives of a function at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub t: f64,
    pub value: Float,
    pub d1: Float,
    pub d2: Float,
}

impl Jet {
    pub fn order(&self, order: u8) -> &Float {
        match order {
            0 => &self.value,
            1 => &self.d1,
            _ => &self.d2,
        }
    }
}

fn scaled_diff(a: &Float, b: &Float, floor: &Float) -> f64 {
    let scale = a.clone().abs().max(floor);
    if scale.is_zero() {
        return 0.0;
    }
    (Float::with_val(a.prec(), a - b).abs() / scale).to_f64()
}

impl Refine for Jet {
    /// Derivatives are compared on the natural scales |f|/t and |f|/t² so that a
    /// vanishing derivative does not demand relative accuracy from pure noise.
    fn rel_diff(&self, c: &Self) -> f64 {
        let p = self.value.prec();
        let t = Float::with_val(p, self.t);
        let f_scale = self.value.clone().abs();
        let s1 = Float::with_val(p, &f_scale / &t);
        let s2 = Float::with_val(p, &s1 / &t).max(&(self.d1.clone().abs() / &t));
        rel_diff(&self.value, &c.value)
            .max(scaled_diff(&self.d1, &c.d1, &s1))
            .max(scaled_diff(&self.d2, &c.d2, &s2))
    }
}

/// Offsets, in units of h/2, at which the stencils sample.
const OFFSETS: [i32; 7] = [-4, -2, -1, 0, 1, 2, 4];

/// Jets of every component of `f` at fixed working precision `bits`.
///
/// The step is h = t·2^(−bits/4); the samples are taken at `2·bits` so that the
/// cancellation in the differences stays far below `2^(−bits)`. Five-point
/// stencils at h and h/2 are combined by one Richardson step.
pub fn jets_at<F>(f: &F, t: f64, bits: u32) -> Result<Vec<Jet>>
where
    F: Fn(&Float) -> Result<Vec<Float>>,
{
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t-derivative needs t > 0, got {t}")));
    }
    let inner = 2 * bits;
    let tt = Float::with_val(inner, t);
    let h = Float::with_val(inner, &tt >> (bits / 4) as i32);
    if Float::with_val(inner, &tt + &h) == tt {
        return Err(Error::StepUnderflow { bits: inner });
    }
    let half = Float::with_val(inner, &h >> 1);
    let mut samples = Vec::with_capacity(OFFSETS.len());
    for &k in &OFFSETS {
        let x = Float::with_val(inner, &tt + Float::with_val(inner, &half * k));
        samples.push(f(&x)?);
    }
    let m = samples[3].len();
    if samples.iter().any(|s| s.len() != m) {
        return Err(Error::InvalidArgument("sampled function changed its output length".into()));
    }
    let at = |k: usize, i: usize| &samples[k][i];
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // indices: 0:−2h 1:−h 2:−h/2 3:0 4:h/2 5:h 6:2h
        let d1 = |m2: &Float, m1: &Float, p1: &Float, p2: &Float, step: &Float| {
            let num = Float::with_val(inner, m2 - p2) + Float::with_val(inner, p1 - m1) * 8u32;
            num / Float::with_val(inner, step * 12u32)
        };
        let d2 = |m2: &Float, m1: &Float, c: &Float, p1: &Float, p2: &Float, step: &Float| {
            let num = Float::with_val(inner, m1 + p1) * 16u32
                - Float::with_val(inner, m2 + p2)
                - Float::with_val(inner, c * 30u32);
            num / (step.clone().square() * 12u32)
        };
        let d1h = d1(at(0, i), at(1, i), at(5, i), at(6, i), &h);
        let d1q = d1(at(1, i), at(2, i), at(4, i), at(5, i), &half);
        let d2h = d2(at(0, i), at(1, i), at(3, i), at(5, i), at(6, i), &h);
        let d2q = d2(at(1, i), at(2, i), at(3, i), at(4, i), at(5, i), &half);
        let rich = |fine: Float, coarse: Float| (fine * 16u32 - coarse) / 15u32;
        out.push(Jet {
            t,
            value: Float::with_val(bits, at(3, i)),
            d1: Float::with_val(bits, rich(d1q, d1h)),
            d2: Float::with_val(bits, rich(d2q, d2h)),
        });
    }
    Ok(out)
}

/// Certified jets of a vector-valued function of t.
pub fn t_jet<F>(f: F, t: f64, policy: &PrecisionPolicy) -> Result<Certified<Vec<Jet>>>
where
    F: Fn(&Float) -> Result<Vec<Float>>,
{
    adaptive_eval(policy, |bits| jets_at(&f, t, bits))
}

/// Certified derivative of order 1 or 2 of a scalar function of t.
pub fn t_derivative<F>(f: F, t: f64, order: u8, policy: &PrecisionPolicy) -> Result<Certified<Float>>
where
    F: Fn(&Float) -> Result<Float>,
{
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!("derivative order must be 1 or 2, got {order}")));
    }
    let jets = t_jet(|x| f(x).map(|v| vec![v]), t, policy)?;
    Ok(jets.map(|mut j| {
        let jet = j.swap_remove(0);
        if order == 1 {
            jet.d1
        } else {
            jet.d2
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_and_cube() {
        let p = PrecisionPolicy::default();
        let d = t_derivative(|t| Ok(Float::with_val(t.prec(), t.square_ref())), 1.0, 1, &p).unwrap();
        assert!((d.value - 2u32).abs() < 1e-30);
        let d = t_derivative(|t| Ok(Float::with_val(t.prec(), t * Float::with_val(t.prec(), t.square_ref()))), 1.0, 2, &p)
            .unwrap();
        assert!((d.value - 6u32).abs() < 1e-30);
    }

    #[test]
    fn rejects_bad_t_and_order() {
        let p = PrecisionPolicy::default();
        assert!(matches!(t_derivative(|t| Ok(t.clone()), 0.0, 1, &p), Err(Error::Domain(_))));
        assert!(matches!(t_derivative(|t| Ok(t.clone()), 1.0, 3, &p), Err(Error::InvalidArgument(_))));
    }
}
