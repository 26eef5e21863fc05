//! Coulomb-fluid endpoints, large-n expansions, long-time expansions and the
//! empirical remainder-order harness.
//!
//! Every expansion is returned termwise as an [`ExpansionResult`]. Large-n
//! series are in powers of n^{1/3} with κ = 2^{1/3}; long-time series are in
//! powers of √t. The ln D_n and ln h_n large-n series contain the constants
//! ĉ₃(α), ĉ₀(α), which are only known through [`fit_constants`].

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::WeightParams;
use crate::numerics::precision::{adaptive_eval, PrecisionPolicy, Refine};
use crate::recurrence::{recurrence_table, RecurrenceTable};
use crate::scalar::{relative_residual, Real};

/// Quantities with an expansion. Long-time variants share the base label with
/// a `_longtime` suffix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Quantity {
    AlphaN,
    BetaN,
    P,
    H,
    LnD,
    LnH,
    LnPn0,
    Y,
    X,
    QuarterSq,
    A,
}

impl Quantity {
    pub const ALL: [Quantity; 11] = [
        Quantity::AlphaN,
        Quantity::BetaN,
        Quantity::P,
        Quantity::H,
        Quantity::LnD,
        Quantity::LnH,
        Quantity::LnPn0,
        Quantity::Y,
        Quantity::X,
        Quantity::QuarterSq,
        Quantity::A,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::AlphaN => "alpha_n",
            Quantity::BetaN => "beta_n",
            Quantity::P => "p",
            Quantity::H => "H",
            Quantity::LnD => "lnD",
            Quantity::LnH => "lnh",
            Quantity::LnPn0 => "lnPn0",
            Quantity::Y => "Y",
            Quantity::X => "X",
            Quantity::QuarterSq => "quarter_sq",
            Quantity::A => "A",
        }
    }

    /// Whether a long-time expansion exists.
    pub fn has_long_time(self) -> bool {
        matches!(self, Quantity::AlphaN | Quantity::BetaN | Quantity::P | Quantity::H | Quantity::LnD | Quantity::LnH)
    }

    fn is_endpoint(self) -> bool {
        matches!(self, Quantity::Y | Quantity::X | Quantity::QuarterSq | Quantity::A)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let base = s.strip_suffix("_longtime").unwrap_or(s);
        Quantity::ALL
            .into_iter()
            .find(|q| q.label() == base)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown quantity {s:?}")))
    }
}

/// Asymptotic regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    LargeN,
    LongTime,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::LargeN => "large-n",
            Mode::LongTime => "long-time",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large-n" => Ok(Mode::LargeN),
            "long-time" => Ok(Mode::LongTime),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// One term c · v^e · (ln v)^k of a series in the variable v.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T> {
    pub exponent: f64,
    pub log_power: u32,
    pub coefficient: T,
    pub contribution: T,
}

/// A truncated expansion evaluated termwise.
#[derive(Clone, Debug)]
pub struct ExpansionResult<T> {
    pub quantity: Quantity,
    pub mode: Mode,
    pub value: T,
    /// Ordered by decreasing (exponent, log power).
    pub terms: Vec<Term<T>>,
    /// The remainder is O(v^remainder_order).
    pub remainder_order: f64,
    /// Set when undetermined constants were omitted.
    pub up_to_constant: bool,
}

impl<T: Real> ExpansionResult<T> {
    pub fn label(&self) -> String {
        match self.mode {
            Mode::LargeN => self.quantity.label().to_string(),
            Mode::LongTime => format!("{}_longtime", self.quantity.label()),
        }
    }

    /// Sum of contributions taken from the smallest term up.
    pub fn reverse_sum(&self) -> T {
        let bits = self.value.precision();
        self.terms.iter().rev().fold(T::zero(bits), |acc, term| acc + term.contribution.clone())
    }
}

struct SeriesBuilder<T> {
    var: T,
    ln_var: T,
    den: i64,
    terms: Vec<Term<T>>,
}

impl<T: Real> SeriesBuilder<T> {
    fn new(var: T, den: i64) -> Self {
        let ln_var = var.ln();
        SeriesBuilder { var, ln_var, den, terms: Vec::new() }
    }

    /// Adds c · v^{num/den} · (ln v)^log_power.
    fn push(&mut self, num: i64, log_power: u32, coefficient: T) {
        let bits = self.var.precision();
        let power = if num % self.den == 0 {
            self.var.powi((num / self.den) as i32)
        } else {
            self.var.powf(&(T::from_i64(num, bits) / T::from_i64(self.den, bits)))
        };
        let contribution = coefficient.clone() * power * self.ln_var.powi(log_power as i32);
        self.terms.push(Term { exponent: num as f64 / self.den as f64, log_power, coefficient, contribution });
    }

    fn finish(mut self, quantity: Quantity, mode: Mode, remainder_order: f64, up_to_constant: bool) -> ExpansionResult<T> {
        self.terms.sort_by(|x, y| {
            (y.exponent, y.log_power).partial_cmp(&(x.exponent, x.log_power)).unwrap_or(std::cmp::Ordering::Equal)
        });
        let bits = self.var.precision();
        let value = self.terms.iter().fold(T::zero(bits), |acc, term| acc + term.contribution.clone());
        ExpansionResult { quantity, mode, value, terms: self.terms, remainder_order, up_to_constant }
    }
}

/// Powers of t, α and κ shared by the large-n coefficients.
struct Coeffs<T> {
    bits: u32,
    t: T,
    a: T,
    a2: T,
    a4: T,
    k: T,
    k2: T,
    t13: T,
    t23: T,
}

impl<T: Real> Coeffs<T> {
    fn new(t: &T, alpha: &T) -> Self {
        let bits = t.precision();
        let a = alpha.with_precision(bits);
        let a2 = a.clone() * a.clone();
        let k = T::from_i64(2, bits).cbrt();
        let t13 = t.cbrt();
        Coeffs {
            bits,
            t: t.clone(),
            a4: a2.clone() * a2.clone(),
            a2,
            a,
            k2: k.clone() * k.clone(),
            k,
            t23: t13.clone() * t13.clone(),
            t13,
        }
    }

    fn i(&self, v: i64) -> T {
        T::from_i64(v, self.bits)
    }

    /// x / (d · κ^kp · t^{tp/3}).
    fn over(&self, x: T, d: i64, kp: u32, tp: u32) -> T {
        let mut den = self.i(d);
        if kp >= 1 {
            den = den * if kp == 1 { self.k.clone() } else { self.k2.clone() };
        }
        match tp {
            0 => {}
            1 => den = den * self.t13.clone(),
            2 => den = den * self.t23.clone(),
            3 => den = den * self.t.clone(),
            4 => den = den * self.t.clone() * self.t13.clone(),
            5 => den = den * self.t.clone() * self.t23.clone(),
            _ => unreachable!("t power above 5/3"),
        }
        x / den
    }
}

/// Large-n expansion of `quantity` at (n, t, α). For ln D_n and ln h_n the
/// constants (ĉ₃, ĉ₀) are added when supplied; otherwise the result is flagged
/// `up_to_constant`.
pub fn large_n<T: Real>(quantity: Quantity, n: &T, t: &T, alpha: &T, constants: Option<(T, T)>) -> Result<ExpansionResult<T>> {
    if t.is_zero_val() {
        return Err(Error::SingularAtZero);
    }
    if !(t.to_f64_lossy() > 0.0) {
        return Err(Error::Domain("large-n expansions need t > 0".into()));
    }
    if !(n.to_f64_lossy() >= 1.0) {
        return Err(Error::Domain("large-n expansions need n ≥ 1".into()));
    }
    let c = Coeffs::new(t, alpha);
    let bits = c.bits;
    let i = |v: i64| T::from_i64(v, bits);
    let (t, a, a2, a4) = (c.t.clone(), c.a.clone(), c.a2.clone(), c.a4.clone());
    let t2 = t.clone() * t.clone();
    let (k, t13, t23) = (c.k.clone(), c.t13.clone(), c.t23.clone());
    let ln2 = i(2).ln();
    let mut s = SeriesBuilder::new(n.with_precision(bits), 3);
    let mut up_to_constant = false;

    let remainder = match quantity {
        Quantity::Y => {
            s.push(1, 0, k.clone() * t13.clone());
            s.push(0, 0, a.clone() / i(3));
            s.push(-1, 0, c.over(a2.clone(), 9, 1, 1));
            s.push(-2, 0, c.over(a.clone() * (i(2) * a2.clone() + i(27) * t.clone()), 81, 2, 2));
            s.push(-3, 0, t.clone() / i(6));
            s.push(
                -4,
                0,
                -c.over(a.clone() * (i(2) * a4.clone() + i(27) * a2.clone() * t.clone() + i(81) * t2.clone()), 1458, 1, 4),
            );
            s.push(
                -5,
                0,
                -c.over(a2.clone() * (i(7) * a4.clone() + i(108) * a2.clone() * t.clone() + i(972) * t2.clone()), 13122, 2, 5),
            );
            s.push(-6, 0, -(a.clone() * t.clone()) / i(12));
            -7.0 / 3.0
        }
        Quantity::X => {
            s.push(3, 0, i(2));
            s.push(0, 0, a.clone());
            s.push(-1, 0, c.over(t23.clone(), 1, 1, 0));
            s.push(-2, 0, -c.over(a.clone() * t13.clone(), 3, 2, 0));
            s.push(-4, 0, c.over(a.clone() * (a2.clone() - i(27) * t.clone()), 162, 1, 1));
            s.push(-5, 0, c.over(a4.clone() + i(54) * a2.clone() * t.clone() - i(81) * t2.clone(), 486, 2, 2));
            s.push(-6, 0, a.clone() * t.clone() / i(12));
            -7.0 / 3.0
        }
        Quantity::QuarterSq => {
            s.push(6, 0, i(1));
            s.push(3, 0, a.clone());
            s.push(2, 0, c.over(t23.clone(), 2, 1, 0));
            s.push(1, 0, -(k.clone() * a.clone() * t13.clone()) / i(3));
            s.push(0, 0, a2.clone() / i(6));
            s.push(-1, 0, c.over(a.clone() * (i(27) * t.clone() - i(4) * a2.clone()), 162, 1, 1));
            s.push(-2, 0, -c.over(i(5) * a4.clone() + i(108) * a2.clone() * t.clone() + i(81) * t2.clone(), 972, 2, 2));
            s.push(
                -4,
                0,
                c.over(a2.clone() * (i(7) * a4.clone() + i(108) * a2.clone() * t.clone() - i(243) * t2.clone()), 26244, 1, 4),
            );
            let a6 = a4.clone() * a2.clone();
            s.push(
                -5,
                0,
                c.over(
                    a.clone()
                        * (i(8) * a6
                            + i(135) * a4.clone() * t.clone()
                            + i(1620) * a2.clone() * t2.clone()
                            + i(2187) * t2.clone() * t.clone()),
                    78732,
                    2,
                    5,
                ),
            );
            s.push(-6, 0, t2.clone() / i(48));
            -7.0 / 3.0
        }
        Quantity::A => {
            s.push(3, 1, i(-2));
            s.push(3, 0, i(2));
            s.push(0, 1, -a.clone());
            s.push(-1, 0, c.over(i(3) * t23.clone(), 2, 1, 0));
            s.push(-2, 0, -c.over(a.clone() * t13.clone(), 1, 2, 0));
            s.push(-3, 0, -a2.clone() / i(3));
            s.push(-4, 0, -c.over(a.clone() * (i(2) * a2.clone() + i(27) * t.clone()), 108, 1, 1));
            s.push(-5, 0, -c.over(i(2) * a4.clone() - i(216) * a2.clone() * t.clone() + i(81) * t2.clone(), 648, 2, 2));
            s.push(-6, 0, a.clone() * (a2.clone() + t.clone()) / i(12));
            -7.0 / 3.0
        }
        Quantity::AlphaN => {
            s.push(3, 0, i(2));
            s.push(0, 0, a.clone() + i(1));
            s.push(-1, 0, c.over(t23.clone(), 1, 1, 0));
            s.push(-2, 0, -c.over(a.clone() * t13.clone(), 3, 2, 0));
            s.push(
                -4,
                0,
                c.over((a.clone() + i(1)) * (a.clone() * (a.clone() - i(1)) - i(27) * t.clone()), 162, 1, 1),
            );
            s.push(
                -5,
                0,
                c.over(
                    a2.clone() * (a2.clone() - i(1)) + i(54) * a.clone() * (a.clone() + i(1)) * t.clone() - i(81) * t2.clone(),
                    486,
                    2,
                    2,
                ),
            );
            s.push(-6, 0, a.clone() * (a2.clone() + i(81) * t2.clone() - i(1)) / (i(972) * t.clone()));
            -7.0 / 3.0
        }
        Quantity::BetaN => {
            s.push(6, 0, i(1));
            s.push(3, 0, a.clone());
            s.push(2, 0, c.over(t23.clone(), 2, 1, 0));
            s.push(1, 0, -(k.clone() * a.clone() * t13.clone()) / i(3));
            s.push(0, 0, (i(6) * a2.clone() - i(1)) / i(36));
            s.push(-1, 0, -c.over(a.clone() * (i(4) * a2.clone() - i(27) * t.clone() - i(4)), 162, 1, 1));
            s.push(
                -2,
                0,
                -c.over(
                    i(5) * a4.clone() + a2.clone() * (i(108) * t.clone() - i(5)) + i(81) * t2.clone(),
                    972,
                    2,
                    2,
                ),
            );
            s.push(-3, 0, -(a.clone() * (a2.clone() - i(1))) / (i(486) * t.clone()));
            -4.0 / 3.0
        }
        Quantity::P | Quantity::H => {
            if quantity == Quantity::P {
                s.push(6, 0, i(-1));
                s.push(3, 0, -a.clone());
            }
            s.push(2, 0, -c.over(i(3) * t23.clone(), 2, 1, 0));
            s.push(1, 0, c.over(a.clone() * t13.clone(), 1, 2, 0));
            s.push(0, 0, -(i(6) * a2.clone() - i(18) * t.clone() - i(1)) / i(36));
            s.push(-1, 0, c.over(a.clone() * (a2.clone() - i(27) * t.clone() - i(1)), 54, 1, 1));
            s.push(
                -2,
                0,
                c.over(a4.clone() + a2.clone() * (i(54) * t.clone() - i(1)) - i(81) * t2.clone(), 324, 2, 2),
            );
            s.push(-3, 0, a.clone() * (a2.clone() + i(81) * t2.clone() - i(1)) / (i(972) * t.clone()));
            -4.0 / 3.0
        }
        Quantity::LnD => {
            let (c3, c0) = match constants {
                Some((c3, c0)) => (c3.with_precision(bits), c0.with_precision(bits)),
                None => {
                    up_to_constant = true;
                    (i(0), i(0))
                }
            };
            s.push(6, 1, i(1));
            s.push(3, 1, a.clone());
            s.push(0, 1, (i(12) * a2.clone() - i(5)) / i(36));
            s.push(6, 0, T::from_f64(-1.5, bits));
            s.push(3, 0, -(a.clone() + c3));
            s.push(2, 0, -c.over(i(9) * t23.clone(), 4, 1, 0));
            s.push(1, 0, c.over(i(3) * a.clone() * t13.clone(), 1, 2, 0));
            let constant = (i(6) * a2.clone() - i(1)) / i(36) * t.ln() - t.clone() / i(2) + a2.clone() * ln2.clone() / i(6) + c0;
            s.push(0, 0, -constant);
            s.push(-1, 0, -c.over(a.clone() * (i(2) * a2.clone() + i(27) * t.clone() - i(2)), 36, 1, 1));
            s.push(
                -2,
                0,
                -c.over(
                    i(2) * a4.clone() - i(2) * a2.clone() * (i(108) * t.clone() + i(1)) + i(81) * t2.clone(),
                    432,
                    2,
                    2,
                ),
            );
            s.push(
                -3,
                0,
                a.clone()
                    * (i(2) * (i(81) * t.clone() - i(1)) * a2.clone() + i(162) * t2.clone() - i(135) * t.clone() + i(2))
                    / (i(1944) * t.clone()),
            );
            -4.0 / 3.0
        }
        Quantity::LnH => {
            let c3 = match constants {
                Some((c3, _)) => c3.with_precision(bits),
                None => {
                    up_to_constant = true;
                    i(0)
                }
            };
            s.push(3, 1, i(2));
            s.push(3, 0, i(-2));
            s.push(0, 1, a.clone() + i(1));
            s.push(0, 0, -c3);
            s.push(-1, 0, -c.over(i(3) * t23.clone(), 2, 1, 0));
            s.push(-2, 0, c.over(a.clone() * t13.clone(), 1, 2, 0));
            s.push(-3, 0, (i(12) * a2.clone() + i(18) * a.clone() + i(7)) / i(36));
            s.push(
                -4,
                0,
                c.over(
                    (a.clone() + i(1)) * (i(2) * a2.clone() - i(2) * a.clone() + i(27) * t.clone()),
                    108,
                    1,
                    1,
                ),
            );
            -5.0 / 3.0
        }
        Quantity::LnPn0 => {
            let two_a1 = i(2) * a.clone() + i(1);
            s.push(3, 1, i(1));
            s.push(0, 1, two_a1.clone() / i(3));
            s.push(3, 0, i(-1));
            s.push(1, 0, c.over(i(3) * t13.clone(), 1, 2, 0));
            s.push(0, 0, -(two_a1.clone() * t.ln() + two_a1.clone() * ln2.clone()) / i(6));
            s.push(-1, 0, -c.over(i(2) * a2.clone() + i(2) * a.clone() + i(9) * t.clone(), 12, 1, 1));
            s.push(-2, 0, -c.over(two_a1 * (a2.clone() + a.clone() - i(54) * t.clone()), 108, 2, 2));
            s.push(
                -3,
                0,
                (i(2) * a.clone() * (a.clone() + i(1)) * (i(81) * t.clone() - i(1))
                    + i(9) * t.clone() * (i(6) * t.clone() + i(1)))
                    / (i(648) * t.clone()),
            );
            -4.0 / 3.0
        }
    };
    Ok(s.finish(quantity, Mode::LargeN, remainder, up_to_constant))
}

/// ln G(n+1) = Σ_{k=1}^{n−1} ln k! for the Barnes G-function.
pub fn ln_barnes_g<T: Real>(n: u64, bits: u32) -> T {
    (1..n).fold(T::zero(bits), |acc, k| acc + T::from_i64(k as i64 + 1, bits).ln_gamma())
}

/// C̃(n) = n ln π / 2 − n(n−1) ln 2 / 2 + ln G(n+1).
pub fn long_time_lnd_constant<T: Real>(n: u64, bits: u32) -> T {
    let i = |v: i64| T::from_i64(v, bits);
    let n_i = n as i64;
    i(n_i) * T::pi(bits).ln() / i(2) - i(n_i * (n_i - 1)) * i(2).ln() / i(2) + ln_barnes_g(n, bits)
}

/// Ĉ(n) = ln π / 2 − n ln 2 + ln Γ(n+1).
pub fn long_time_lnh_constant<T: Real>(n: u64, bits: u32) -> T {
    let i = |v: i64| T::from_i64(v, bits);
    T::pi(bits).ln() / i(2) - i(n as i64) * i(2).ln() + i(n as i64 + 1).ln_gamma()
}

/// Long-time (t → ∞) expansion of `quantity` at integer n.
pub fn long_time<T: Real>(quantity: Quantity, n: u64, t: &T, alpha: &T) -> Result<ExpansionResult<T>> {
    if t.is_zero_val() {
        return Err(Error::SingularAtZero);
    }
    if !(t.to_f64_lossy() > 0.0) {
        return Err(Error::Domain("long-time expansions need t > 0".into()));
    }
    if !quantity.has_long_time() {
        return Err(Error::InvalidArgument(format!("{quantity} has no long-time expansion")));
    }
    let bits = t.precision();
    let i = |v: i64| T::from_i64(v, bits);
    let a = alpha.with_precision(bits);
    let nn = i(n as i64);
    let s2a = i(2) * a.clone();
    let mut s = SeriesBuilder::new(t.clone(), 2);
    let remainder = match quantity {
        Quantity::AlphaN => {
            let u = s2a.clone() + i(2) * nn.clone() + i(1);
            s.push(1, 0, i(1));
            s.push(0, 0, (s2a.clone() + i(3) * (i(2) * nn.clone() + i(1))) / i(4));
            s.push(-1, 0, u.clone() * (s2a.clone() + i(6) * nn.clone() + i(3)) / i(32));
            s.push(
                -2,
                0,
                -(u * (a.clone() * (i(4) * nn.clone() + i(2)) + i(8) * nn.clone() * nn.clone() + i(8) * nn.clone() + i(3)))
                    / i(64),
            );
            -1.5
        }
        Quantity::BetaN => {
            let uv = (s2a.clone() + i(2) * nn.clone() + i(1)) * (s2a.clone() + i(2) * nn.clone() - i(1));
            s.push(1, 0, nn.clone() / i(2));
            s.push(0, 0, (s2a.clone() * nn.clone() + i(3) * nn.clone() * nn.clone()) / i(4));
            s.push(-1, 0, i(3) * nn.clone() * uv.clone() / i(64));
            s.push(-2, 0, -(nn.clone() * nn.clone() * uv) / i(32));
            -1.5
        }
        Quantity::P | Quantity::H => {
            let w = i(4) * (a.clone() + nn.clone()) * (a.clone() + nn.clone()) - i(1);
            s.push(1, 0, -nn.clone());
            if quantity == Quantity::P {
                s.push(0, 0, -(nn.clone() * (s2a.clone() + i(3) * nn.clone())) / i(4));
            } else {
                s.push(0, 0, nn.clone() * (s2a.clone() + nn.clone()) / i(4));
            }
            s.push(-1, 0, -(nn.clone() * w) / i(32));
            -1.0
        }
        Quantity::LnD => {
            let w = i(4) * (a.clone() + nn.clone()) * (a.clone() + nn.clone()) - i(1);
            s.push(1, 0, i(-2) * nn.clone());
            s.push(0, 1, nn.clone() * (s2a.clone() + nn.clone()) / i(4));
            s.push(0, 0, long_time_lnd_constant(n, bits));
            s.push(-1, 0, nn.clone() * w / i(16));
            -1.0
        }
        Quantity::LnH => {
            let u = s2a.clone() + i(2) * nn.clone() + i(1);
            s.push(1, 0, i(-2));
            s.push(0, 1, u.clone() / i(4));
            s.push(0, 0, long_time_lnh_constant(n, bits));
            s.push(-1, 0, u * (s2a.clone() + i(6) * nn.clone() + i(3)) / i(16));
            -1.0
        }
        _ => unreachable!("checked by has_long_time"),
    };
    Ok(s.finish(quantity, Mode::LongTime, remainder, false))
}

/// Solution of the endpoint equations at (n, t, α).
#[derive(Clone, Debug)]
pub struct EndpointData<T = Float> {
    pub n: f64,
    pub t: f64,
    pub alpha: f64,
    /// √(ab).
    pub y: T,
    /// (a + b)/2.
    pub x: T,
    pub a: T,
    pub b: T,
    /// Lagrange multiplier.
    pub big_a: T,
    /// Relative residual of the quartic at `y`.
    pub residual: f64,
    pub rel_err_bound: f64,
    pub bits_used: u32,
}

impl<T: Real> EndpointData<T> {
    /// ((b − a)/4)².
    pub fn quarter_sq(&self) -> T {
        let d = (self.b.clone() - self.a.clone()) / T::from_i64(4, self.y.precision());
        d.clone() * d
    }

    /// (X² − Y²)/4.
    pub fn quarter_sq_from_means(&self) -> T {
        (self.x.clone() * self.x.clone() - self.y.clone() * self.y.clone()) / T::from_i64(4, self.y.precision())
    }

    pub fn value(&self, quantity: Quantity) -> Option<T> {
        match quantity {
            Quantity::Y => Some(self.y.clone()),
            Quantity::X => Some(self.x.clone()),
            Quantity::QuarterSq => Some(self.quarter_sq()),
            Quantity::A => Some(self.big_a.clone()),
            _ => None,
        }
    }
}

/// Coefficients of Y⁴ − αY³ + 0·Y² − (2n+α)tY − t², highest degree first.
pub fn quartic_coefficients<T: Real>(n: &T, t: &T, alpha: &T) -> [T; 5] {
    let bits = t.precision();
    let two_n_a = T::from_i64(2, bits) * n.clone() + alpha.clone();
    [T::one(bits), -alpha.clone(), T::zero(bits), -(two_n_a * t.clone()), -(t.clone() * t.clone())]
}

/// Sign changes in a coefficient sequence, zeros skipped. By Descartes' rule
/// this bounds the number of positive roots.
pub fn sign_changes<T: Real>(coefficients: &[T]) -> usize {
    let signs: Vec<bool> = coefficients.iter().filter(|c| !c.is_zero_val()).map(|c| c.to_f64_lossy() > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn quartic_terms<T: Real>(c: &[T; 5], y: &T) -> [T; 4] {
    let y2 = y.clone() * y.clone();
    [y2.clone() * y2.clone(), c[1].clone() * y2 * y.clone(), c[3].clone() * y.clone(), c[4].clone()]
}

fn quartic_value<T: Real>(c: &[T; 5], y: &T) -> (T, T) {
    let bits = y.precision();
    let i = |v: i64| T::from_i64(v, bits);
    let y2 = y.clone() * y.clone();
    let f = quartic_terms(c, y).into_iter().fold(i(0), |acc, v| acc + v);
    let df = i(4) * y2.clone() * y.clone() + i(3) * c[1].clone() * y2 + c[3].clone();
    (f, df)
}

/// Endpoint data at the precision of `t`, by bracketed Newton from the seed
/// κ t^{1/3} n^{1/3}.
pub fn endpoints_at<T: Real>(n: &T, t: &T, alpha: &T) -> Result<EndpointData<T>> {
    let bits = t.precision();
    let i = |v: i64| T::from_i64(v, bits);
    let (nf, tf, af) = (n.to_f64_lossy(), t.to_f64_lossy(), alpha.to_f64_lossy());
    if !(nf >= 1.0) || !(tf > 0.0) || !(af > -1.0) {
        return Err(Error::Domain(format!("endpoints need n ≥ 1, t > 0, α > −1; got n={nf}, t={tf}, α={af}")));
    }
    let alpha = alpha.with_precision(bits);
    let c = quartic_coefficients(n, t, &alpha);
    if sign_changes(&c) != 1 {
        return Err(Error::RootBracketFailure("quartic coefficients do not have exactly one sign change".into()));
    }
    let seed = i(2).cbrt() * (t.clone() * n.clone()).cbrt();
    let mut lo = i(0);
    let mut hi = seed.clone();
    let mut expansions = 0;
    while quartic_value(&c, &hi).0.to_f64_lossy() <= 0.0 {
        lo = hi.clone();
        hi = hi * i(2);
        expansions += 1;
        if expansions > 200 {
            return Err(Error::RootBracketFailure("no sign change above the seed".into()));
        }
    }
    let tol = T::epsilon(bits) * i(8);
    let mut y = seed;
    let mut converged = false;
    for _ in 0..(4 * bits as usize + 100) {
        let (f, df) = quartic_value(&c, &y);
        if f.is_zero_val() {
            converged = true;
            break;
        }
        if f.to_f64_lossy() < 0.0 {
            lo = y.clone();
        } else {
            hi = y.clone();
        }
        let mut next = y.clone() - f / df;
        if !(next > lo && next < hi) {
            next = (lo.clone() + hi.clone()) / i(2);
        }
        let step = (next.clone() - y.clone()).abs_val();
        y = next;
        if step <= tol.clone() * y.abs_val() || (hi.clone() - lo.clone()) <= tol.clone() * y.abs_val() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RootBracketFailure("Newton iteration did not settle".into()));
    }
    let residual = relative_residual(&quartic_terms(&c, &y));
    let x = i(2) * n.clone() + alpha.clone() + t.clone() / y.clone();
    let root = (x.clone() * x.clone() - y.clone() * y.clone()).sqrt();
    let a = y.clone() * y.clone() / (x.clone() + root.clone());
    let b = x.clone() + root;
    let big_a = x.clone() + t.clone() / y.clone()
        - n.clone() * ((x.clone() - y.clone()) / i(2)).ln()
        - (n.clone() + alpha) * ((x.clone() + y.clone()) / i(2)).ln();
    Ok(EndpointData {
        n: nf,
        t: tf,
        alpha: af,
        y,
        x,
        a,
        b,
        big_a,
        residual,
        rel_err_bound: 0.0,
        bits_used: bits,
    })
}

struct EndpointVec(Vec<Float>);

impl Refine for EndpointVec {
    fn rel_diff(&self, coarser: &Self) -> f64 {
        self.0.rel_diff(&coarser.0)
    }
}

/// Certified endpoint data.
pub fn endpoints(n: f64, t: f64, alpha: f64, policy: &PrecisionPolicy) -> Result<EndpointData<Float>> {
    let mut last = None;
    let c = adaptive_eval(policy, |bits| {
        let e = endpoints_at(&Float::with_val(bits, n), &Float::with_val(bits, t), &Float::with_val(bits, alpha))?;
        let v = EndpointVec(vec![e.y.clone(), e.x.clone(), e.a.clone(), e.b.clone(), e.big_a.clone()]);
        last = Some(e);
        Ok(v)
    })?;
    let mut e = last.expect("adaptive_eval returned a value");
    e.rel_err_bound = c.rel_err_bound;
    Ok(e)
}

/// Least-squares estimates of ĉ₃(α) and ĉ₀(α) at one t.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantFit {
    pub t: f64,
    pub c3_hat: f64,
    pub c0_hat: f64,
    pub rms_residual: f64,
    pub condition: f64,
}

/// Constant estimates over a t grid together with their consistency checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantFitReport {
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    /// Mean over the t grid.
    pub c3_hat: f64,
    pub c0_hat: f64,
    pub fits: Vec<ConstantFit>,
    pub shifted_fits: Vec<ConstantFit>,
    pub c3_spread: f64,
    pub c0_spread: f64,
    /// c̃₃(α+1) − c̃₃(α) with c̃₃ = α + ĉ₃.
    pub c3_tilde_shift: f64,
    /// c̃₀(α+1) − c̃₀(α) with c̃₀ = α² ln 2 / 6 + ĉ₀.
    pub c0_tilde_shift: f64,
}

impl ConstantFitReport {
    /// Largest spread over t of any of the four fitted constants.
    pub fn max_spread(&self) -> f64 {
        let spread = |v: &[ConstantFit], f: fn(&ConstantFit) -> f64| {
            let vals: Vec<f64> = v.iter().map(f).collect();
            vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        spread(&self.fits, |f| f.c3_hat)
            .max(spread(&self.fits, |f| f.c0_hat))
            .max(spread(&self.shifted_fits, |f| f.c3_hat))
            .max(spread(&self.shifted_fits, |f| f.c0_hat))
    }
}

/// Condition number above which a fit is rejected.
pub const MAX_FIT_CONDITION: f64 = 1e10;

/// Least squares with column equilibration; returns the solution, the RMS
/// residual and the condition number of the scaled design matrix.
pub fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(DVector<f64>, f64, f64)> {
    let mut scaled = design.clone();
    let norms: Vec<f64> = (0..design.ncols()).map(|j| design.column(j).norm()).collect();
    for (j, &s) in norms.iter().enumerate() {
        if s == 0.0 {
            return Err(Error::IllConditionedFit { condition: f64::INFINITY });
        }
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_FIT_CONDITION) {
        return Err(Error::IllConditionedFit { condition });
    }
    let y = svd.solve(rhs, 0.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let residual = (&scaled * &y - rhs).norm() / (rhs.len() as f64).sqrt();
    let x = DVector::from_iterator(y.len(), y.iter().zip(&norms).map(|(v, s)| v / s));
    Ok((x, residual, condition))
}

fn fit_one(table: &RecurrenceTable<Float>, n_grid: &[usize]) -> Result<ConstantFit> {
    let bits = table.bits_used;
    let (t, alpha) = (table.params.t, table.params.alpha);
    let (tf, af) = (Float::with_val(bits, t), Float::with_val(bits, alpha));
    let mut rows = Vec::with_capacity(n_grid.len() * 5);
    let mut rhs = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let series = large_n(Quantity::LnD, &Float::with_val(bits, n), &tf, &af, None)?;
        rhs.push((table.ln_d[n].clone() - series.value).to_f64());
        let nf = n as f64;
        rows.extend_from_slice(&[-nf, -1.0, nf.powf(-4.0 / 3.0), nf.powf(-5.0 / 3.0), nf.powi(-2)]);
    }
    let design = DMatrix::from_row_slice(n_grid.len(), 5, &rows);
    let (x, rms_residual, condition) = least_squares(&design, &DVector::from_vec(rhs))?;
    Ok(ConstantFit { t, c3_hat: x[0], c0_hat: x[1], rms_residual, condition })
}

fn fits_over(alpha: f64, t_grid: &[f64], n_grid: &[usize], policy: &PrecisionPolicy) -> Result<Vec<ConstantFit>> {
    let n_max = *n_grid.iter().max().expect("n grid checked nonempty");
    t_grid
        .par_iter()
        .map(|&t| {
            let params = WeightParams::with_policy(t, alpha, *policy)?;
            fit_one(&recurrence_table(n_max, &params)?, n_grid)
        })
        .collect()
}

fn mean_and_spread(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / count;
    let hi = v.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.fold(f64::INFINITY, f64::min);
    (mean, hi - lo)
}

/// Fits ĉ₃(α) and ĉ₀(α) from exact ln D_n: every known term is subtracted and
/// the rest is fitted to −ĉ₃ n − ĉ₀ + c₄ n^{−4/3} + c₅ n^{−5/3} + c₆ n^{−2}.
/// The same fit at α + 1 gives the shift diagnostics.
pub fn fit_constants(alpha: f64, t_grid: &[f64], n_grid: &[usize], policy: &PrecisionPolicy) -> Result<ConstantFitReport> {
    if t_grid.is_empty() || n_grid.len() < 6 {
        return Err(Error::InvalidArgument("fit needs a nonempty t grid and at least 6 values of n".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::SingularAtZero);
    }
    if n_grid.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument("n grid must start at 1".into()));
    }
    let fits = fits_over(alpha, t_grid, n_grid, policy)?;
    let shifted_fits = fits_over(alpha + 1.0, t_grid, n_grid, policy)?;
    let (c3_hat, c3_spread) = mean_and_spread(fits.iter().map(|f| f.c3_hat));
    let (c0_hat, c0_spread) = mean_and_spread(fits.iter().map(|f| f.c0_hat));
    let (c3_up, _) = mean_and_spread(shifted_fits.iter().map(|f| f.c3_hat));
    let (c0_up, _) = mean_and_spread(shifted_fits.iter().map(|f| f.c0_hat));
    let ln2 = std::f64::consts::LN_2;
    let c3_tilde_shift = (alpha + 1.0 + c3_up) - (alpha + c3_hat);
    let c0_tilde_shift = ((alpha + 1.0).powi(2) * ln2 / 6.0 + c0_up) - (alpha * alpha * ln2 / 6.0 + c0_hat);
    Ok(ConstantFitReport {
        alpha,
        n_grid: n_grid.to_vec(),
        c3_hat,
        c0_hat,
        fits,
        shifted_fits,
        c3_spread,
        c0_spread,
        c3_tilde_shift,
        c0_tilde_shift,
    })
}

/// Exact value, truncated series and their difference at one point.
#[derive(Clone, Debug)]
pub struct RemainderSample {
    pub x: f64,
    pub exact: Float,
    pub series: Float,
    pub diff: Float,
    /// Absolute size below which `diff` is numerical noise.
    pub noise: f64,
}

/// Fitted remainder order.
#[derive(Clone, Debug)]
pub struct SlopeFit {
    pub expected: f64,
    pub slope: f64,
    pub deviation: f64,
    pub samples: Vec<RemainderSample>,
}

/// Required ratio of remainder to certified numerical noise in a slope fit.
pub const NOISE_MARGIN: f64 = 1e3;

/// Least-squares slope of ln|exact − series| against ln x.
///
/// `exact_fn(x)` returns the exact value and its relative error bound;
/// `series_fn(x, bits)` evaluates the truncated series at `bits`. Every
/// remainder must exceed its certified noise by [`NOISE_MARGIN`].
pub fn remainder_slope<E, S>(grid: &[f64], mut exact_fn: E, mut series_fn: S, expected: f64) -> Result<SlopeFit>
where
    E: FnMut(f64) -> Result<(Float, f64)>,
    S: FnMut(f64, u32) -> Result<Float>,
{
    if grid.len() < 5 {
        return Err(Error::InvalidArgument(format!("slope fit needs at least 5 points, got {}", grid.len())));
    }
    let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 {
        return Err(Error::InvalidArgument("slope grid must be positive and span at least one decade".into()));
    }
    let mut samples = Vec::with_capacity(grid.len());
    for &x in grid {
        let (exact, bound) = exact_fn(x)?;
        let bits = exact.prec();
        let series = series_fn(x, bits)?;
        let diff = Float::with_val(bits, &exact - &series);
        let scale = exact.to_f64().abs().max(series.to_f64().abs());
        let noise = scale * (10.0 * bound + (2f64).powi(16 - bits.min(1000) as i32));
        if diff.to_f64().abs() <= NOISE_MARGIN * noise {
            return Err(Error::RemainderBelowNoise { point: x });
        }
        samples.push(RemainderSample { x, exact, series, diff, noise });
    }
    let lx: Vec<f64> = samples.iter().map(|s| s.x.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.diff.to_f64().abs().ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(u, v)| (u - mx) * (v - my)).sum();
    let sxx: f64 = lx.iter().map(|u| (u - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit { expected, slope, deviation: slope - expected, samples })
}

/// Exact value of `quantity` from recurrence tables at α (and α+1 for ln P_n(0)).
fn table_value(quantity: Quantity, n: usize, table: &RecurrenceTable<Float>, shifted: Option<&RecurrenceTable<Float>>) -> Float {
    match quantity {
        Quantity::AlphaN => table.alpha[n].clone(),
        Quantity::BetaN => table.beta[n].clone(),
        Quantity::P => table.p[n].clone(),
        Quantity::H => table.big_h[n].clone(),
        Quantity::LnD => table.ln_d[n].clone(),
        Quantity::LnH => table.h[n].clone().ln(),
        Quantity::LnPn0 => {
            let up = shifted.expect("shifted table supplied for lnPn0");
            Float::with_val(table.bits_used, &up.ln_d[n] - &table.ln_d[n])
        }
        _ => unreachable!("endpoint quantities are not table values"),
    }
}

/// Remainder order of the large-n series of `quantity` over integer `n_grid`.
/// ln D_n and ln h_n need the constants.
pub fn large_n_slope(
    quantity: Quantity,
    n_grid: &[usize],
    t: f64,
    alpha: f64,
    constants: Option<(f64, f64)>,
    policy: &PrecisionPolicy,
) -> Result<SlopeFit> {
    if matches!(quantity, Quantity::LnD | Quantity::LnH) && constants.is_none() {
        return Err(Error::InvalidArgument(format!("{quantity} remainder needs the constants ĉ₃, ĉ₀")));
    }
    if t == 0.0 {
        return Err(Error::SingularAtZero);
    }
    let params = WeightParams::with_policy(t, alpha, *policy)?;
    let grid: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let series = |x: f64, bits: u32| -> Result<Float> {
        let c = constants.map(|(a, b)| (Float::with_val(bits, a), Float::with_val(bits, b)));
        Ok(large_n(quantity, &Float::with_val(bits, x), &Float::with_val(bits, t), &Float::with_val(bits, alpha), c)?.value)
    };
    if quantity.is_endpoint() {
        let exact = |x: f64| -> Result<(Float, f64)> {
            let e = endpoints(x, t, alpha, policy)?;
            Ok((e.value(quantity).expect("endpoint quantity"), e.rel_err_bound))
        };
        return remainder_slope(&grid, exact, series, quantity_order(quantity, Mode::LargeN));
    }
    let n_max = *n_grid.iter().max().ok_or_else(|| Error::InvalidArgument("empty n grid".into()))?;
    let table = recurrence_table(n_max, &params)?;
    let shifted = if quantity == Quantity::LnPn0 { Some(recurrence_table(n_max, &params.shift_alpha(1.0))?) } else { None };
    let bound = table.rel_err_bound.max(shifted.as_ref().map_or(0.0, |s| s.rel_err_bound));
    let exact = |x: f64| -> Result<(Float, f64)> { Ok((table_value(quantity, x as usize, &table, shifted.as_ref()), bound)) };
    remainder_slope(&grid, exact, series, quantity_order(quantity, Mode::LargeN))
}

/// Remainder order of the long-time series of `quantity` at fixed n over `t_grid`.
pub fn long_time_slope(quantity: Quantity, n: usize, t_grid: &[f64], alpha: f64, policy: &PrecisionPolicy) -> Result<SlopeFit> {
    if !quantity.has_long_time() {
        return Err(Error::InvalidArgument(format!("{quantity} has no long-time expansion")));
    }
    if t_grid.iter().any(|&t| t == 0.0) {
        return Err(Error::SingularAtZero);
    }
    let tables: Vec<RecurrenceTable<Float>> = t_grid
        .par_iter()
        .map(|&t| recurrence_table(n + 1, &WeightParams::with_policy(t, alpha, *policy)?))
        .collect::<Result<_>>()?;
    let exact = |x: f64| -> Result<(Float, f64)> {
        let k = t_grid.iter().position(|&t| t == x).expect("grid point");
        Ok((table_value(quantity, n, &tables[k], None), tables[k].rel_err_bound))
    };
    let series = |x: f64, bits: u32| -> Result<Float> {
        Ok(long_time(quantity, n as u64, &Float::with_val(bits, x), &Float::with_val(bits, alpha))?.value)
    };
    remainder_slope(t_grid, exact, series, quantity_order(quantity, Mode::LongTime))
}

/// Stated remainder exponent of each expansion.
pub fn quantity_order(quantity: Quantity, mode: Mode) -> f64 {
    match mode {
        Mode::LargeN => match quantity {
            Quantity::AlphaN | Quantity::Y | Quantity::X | Quantity::QuarterSq | Quantity::A => -7.0 / 3.0,
            Quantity::LnH => -5.0 / 3.0,
            _ => -4.0 / 3.0,
        },
        Mode::LongTime => match quantity {
            Quantity::AlphaN | Quantity::BetaN => -1.5,
            _ => -1.0,
        },
    }
}

/// α_0(t) = √t K_{α+2}(2√t) / K_{α+1}(2√t) at the precision of `t`.
pub fn alpha_zero_bessel<T: Real>(t: &T, alpha: &T) -> Result<T> {
    let bits = t.precision();
    let z = T::from_i64(2, bits) * t.sqrt();
    let num = crate::moments::bessel_k_at(&(alpha.clone() + T::from_i64(2, bits)), &z, bits)?;
    let den = crate::moments::bessel_k_at(&(alpha.clone() + T::from_i64(1, bits)), &z, bits)?;
    Ok(t.sqrt() * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barnes_g_small_values() {
        assert!((ln_barnes_g::<f64>(3, 53) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(ln_barnes_g::<f64>(1, 53), 0.0);
        assert!(long_time_lnd_constant::<f64>(0, 53).abs() < 1e-15);
    }

    #[test]
    fn quartic_root_in_f64() {
        let e = endpoints_at(&5.0f64, &1.0, &0.5).unwrap();
        assert!(e.residual < 1e-14);
        assert!(0.0 < e.a && e.a < e.b);
    }

    #[test]
    fn terms_sorted() {
        let r = large_n(Quantity::LnD, &50.0f64, &1.0, &0.5, None).unwrap();
        assert!(r.up_to_constant);
        assert!(r.terms.windows(2).all(|w| (w[0].exponent, w[0].log_power) >= (w[1].exponent, w[1].log_power)));
    }
}
