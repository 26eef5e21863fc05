//! `start:stop:lin|log[:count]` grids.

use std::fmt;
use std::str::FromStr;

/// Points per grid when the count is omitted.
pub const DEFAULT_COUNT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub spacing: Spacing,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        let mut v: Vec<f64> = (0..self.count)
            .map(|k| {
                let s = k as f64 / last;
                match self.spacing {
                    Spacing::Lin => self.start + (self.stop - self.start) * s,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * s).exp(),
                }
            })
            .collect();
        // pin the endpoints against rounding in exp/ln
        v[0] = self.start;
        v[self.count - 1] = self.stop;
        v
    }

    /// Points rounded to integers, deduplicated and in ascending order.
    pub fn integer_points(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.points().into_iter().map(|x| x.round() as usize).collect();
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridError(pub String);

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for GridError {}

impl FromStr for Grid {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, GridError> {
        let err = |m: &str| GridError(format!("grid {s:?}: {m}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(err("expected start:stop:lin|log[:count]"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| err(&format!("{p:?} is not a number")));
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let spacing = match parts[2].trim() {
            "lin" => Spacing::Lin,
            "log" => Spacing::Log,
            other => return Err(err(&format!("unknown spacing {other:?}"))),
        };
        let count = match parts.get(3) {
            Some(c) => c.trim().parse::<usize>().map_err(|_| err(&format!("{c:?} is not a count")))?,
            None => DEFAULT_COUNT,
        };
        if !start.is_finite() || !stop.is_finite() {
            return Err(err("bounds must be finite"));
        }
        if count == 0 {
            return Err(err("count must be positive"));
        }
        if stop < start {
            return Err(err("stop is below start"));
        }
        if count > 1 && stop == start {
            return Err(err("several points need stop above start"));
        }
        if spacing == Spacing::Log && start <= 0.0 {
            return Err(err("log spacing needs a positive start"));
        }
        Ok(Grid { start, stop, spacing, count })
    }
}
