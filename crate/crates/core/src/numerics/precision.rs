use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::rel_diff;

/// Environment variable that caps `max_bits` for every policy.
pub const MAX_BITS_ENV: &str = "OPLAB_MAX_BITS";

/// How precision is escalated and when a result counts as certified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub start_bits: u32,
    pub max_bits: u32,
    pub target_rel_err: f64,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { start_bits: 128, max_bits: 8192, target_rel_err: 1e-30 }
    }
}

impl PrecisionPolicy {
    pub fn new(start_bits: u32, max_bits: u32, target_rel_err: f64) -> Result<Self> {
        let p = PrecisionPolicy { start_bits, max_bits, target_rel_err };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_bits < 64 {
            return Err(Error::InvalidArgument(format!("start_bits {} < 64", self.start_bits)));
        }
        if self.max_bits < self.start_bits {
            return Err(Error::InvalidArgument(format!(
                "max_bits {} < start_bits {}",
                self.max_bits, self.start_bits
            )));
        }
        if !(self.target_rel_err > 0.0) {
            return Err(Error::InvalidArgument("target_rel_err must be positive".into()));
        }
        Ok(())
    }

    pub fn with_target(mut self, target_rel_err: f64) -> Self {
        self.target_rel_err = target_rel_err;
        self
    }

    pub fn with_start_bits(mut self, bits: u32) -> Self {
        self.start_bits = bits;
        self.max_bits = self.max_bits.max(bits);
        self
    }

    /// `max_bits` after applying the `OPLAB_MAX_BITS` cap, never below `start_bits`.
    pub fn effective_max_bits(&self) -> u32 {
        let cap = std::env::var(MAX_BITS_ENV).ok().and_then(|v| v.trim().parse::<u32>().ok());
        match cap {
            Some(c) => self.max_bits.min(c).max(self.start_bits),
            None => self.max_bits,
        }
    }

    /// Precision levels visited by escalation.
    pub fn levels(&self) -> Vec<u32> {
        let max = self.effective_max_bits();
        let mut out = vec![self.start_bits];
        let mut b = self.start_bits;
        while b < max {
            b = (b.saturating_mul(2)).min(max);
            out.push(b);
        }
        out
    }
}

/// A value with an empirical relative-error bound from two-level agreement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certified<T> {
    pub value: T,
    pub rel_err_bound: f64,
    pub bits_used: u32,
}

impl<T> Certified<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Certified<U> {
        Certified { value: f(self.value), rel_err_bound: self.rel_err_bound, bits_used: self.bits_used }
    }
}

/// Values that can be compared across precision levels.
pub trait Refine {
    /// Largest componentwise relative difference against a coarser evaluation.
    fn rel_diff(&self, coarser: &Self) -> f64;
}

impl Refine for Float {
    fn rel_diff(&self, coarser: &Self) -> f64 {
        rel_diff(self, coarser)
    }
}

impl Refine for f64 {
    fn rel_diff(&self, coarser: &Self) -> f64 {
        rel_diff(self, coarser)
    }
}

impl<T: Refine> Refine for Vec<T> {
    fn rel_diff(&self, coarser: &Self) -> f64 {
        if self.len() != coarser.len() {
            return f64::INFINITY;
        }
        self.iter().zip(coarser).map(|(a, b)| a.rel_diff(b)).fold(0.0, f64::max)
    }
}

impl<A: Refine, B: Refine> Refine for (A, B) {
    fn rel_diff(&self, coarser: &Self) -> f64 {
        self.0.rel_diff(&coarser.0).max(self.1.rel_diff(&coarser.1))
    }
}

/// One step of an escalation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub bits: u32,
    /// Agreement with the previous level, `None` for the first successful level.
    pub agreement: Option<f64>,
}

/// Evaluates `f` at doubling precision until two successive levels agree to
/// `policy.target_rel_err`.
///
/// `Error::InsufficientPrecision` from `f` discards the level and moves on;
/// every other error is returned unchanged.
pub fn adaptive_eval<T, F>(policy: &PrecisionPolicy, f: F) -> Result<Certified<T>>
where
    T: Refine,
    F: FnMut(u32) -> Result<T>,
{
    adaptive_eval_traced(policy, f).map(|(c, _)| c)
}

/// [`adaptive_eval`] that also returns the escalation history.
pub fn adaptive_eval_traced<T, F>(policy: &PrecisionPolicy, mut f: F) -> Result<(Certified<T>, Vec<Level>)>
where
    T: Refine,
    F: FnMut(u32) -> Result<T>,
{
    policy.validate()?;
    let mut prev: Option<T> = None;
    let mut history = Vec::new();
    let mut last = f64::INFINITY;
    let levels = policy.levels();
    for &bits in &levels {
        match f(bits) {
            Ok(v) => {
                let agreement = prev.as_ref().map(|p| v.rel_diff(p));
                history.push(Level { bits, agreement });
                if let Some(d) = agreement {
                    last = d;
                    if d <= policy.target_rel_err {
                        return Ok((Certified { value: v, rel_err_bound: d, bits_used: bits }, history));
                    }
                }
                prev = Some(v);
            }
            Err(Error::InsufficientPrecision(_)) => prev = None,
            Err(e) => return Err(e),
        }
    }
    Err(Error::PrecisionExhausted {
        bits: *levels.last().unwrap_or(&policy.start_bits),
        agreement: last,
        target: policy.target_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_double_and_clamp() {
        let p = PrecisionPolicy { start_bits: 100, max_bits: 700, target_rel_err: 1e-10 };
        assert_eq!(p.levels(), vec![100, 200, 400, 700]);
    }

    #[test]
    fn invalid_policies_rejected() {
        assert!(PrecisionPolicy::new(32, 128, 1e-10).is_err());
        assert!(PrecisionPolicy::new(128, 64, 1e-10).is_err());
        assert!(PrecisionPolicy::new(128, 256, 0.0).is_err());
    }

    #[test]
    fn exhausted_reports_last_agreement() {
        let p = PrecisionPolicy { start_bits: 64, max_bits: 256, target_rel_err: 1e-30 };
        let mut k = 0.0;
        let r = adaptive_eval(&p, |_| {
            k += 1.0;
            Ok(k)
        });
        match r {
            Err(Error::PrecisionExhausted { bits, agreement, .. }) => {
                assert_eq!(bits, 256);
                assert!((agreement - 1.0 / 3.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn insufficient_precision_restarts_comparison() {
        let p = PrecisionPolicy { start_bits: 64, max_bits: 1024, target_rel_err: 1e-20 };
        let (c, hist) = adaptive_eval_traced(&p, |bits| {
            if bits < 256 {
                Err(Error::InsufficientPrecision("warming up".into()))
            } else {
                Ok(Float::with_val(bits, 3))
            }
        })
        .unwrap();
        assert_eq!(c.bits_used, 512);
        assert_eq!(hist[0].agreement, None);
    }
}
