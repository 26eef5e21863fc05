//! Harness for the acceptance criteria: serial execution, wall-clock budgets
//! and one PASS/FAIL line per criterion.

use std::fmt::Display;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

static SERIAL: Mutex<()> = Mutex::new(());

/// Criteria run one at a time so that wall-clock budgets are meaningful.
pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Worst observed ratio of measured value to limit over many checks.
#[derive(Debug, Default)]
pub struct Checks {
    failures: Vec<String>,
    worst: Option<(f64, String)>,
    count: usize,
}

impl Checks {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `value ≤ limit`.
    pub fn at_most(&mut self, what: impl Display, value: f64, limit: f64) {
        let ok = value <= limit;
        self.record(ok, value / limit, format!("{what}: {value:.3e} (limit {limit:.1e})"));
    }

    /// Records `|value − target| ≤ tol`.
    pub fn within(&mut self, what: impl Display, value: f64, target: f64, tol: f64) {
        let dev = (value - target).abs();
        let ok = dev <= tol;
        self.record(ok, dev / tol, format!("{what}: {value:.4} (target {target:.4} ± {tol})"));
    }

    /// Records a strictly positive margin.
    pub fn positive(&mut self, what: impl Display, margin: f64) {
        let ok = margin > 0.0;
        let ratio = if ok { 1.0 / (1.0 + margin) } else { 1.0 + margin.abs() };
        self.record(ok, ratio, format!("{what}: margin {margin:.3e}"));
    }

    /// Records an exact equality.
    pub fn equal<T: PartialEq + std::fmt::Debug>(&mut self, what: impl Display, got: T, want: T) {
        let ok = got == want;
        self.record(ok, if ok { 0.0 } else { f64::INFINITY }, format!("{what}: {got:?} (want {want:?})"));
    }

    /// Records a sub-computation that returned an error.
    pub fn error(&mut self, what: impl Display, err: impl Display) {
        self.record(false, f64::INFINITY, format!("{what}: error: {err}"));
    }

    fn record(&mut self, ok: bool, ratio: f64, msg: String) {
        self.count += 1;
        if !ok {
            self.failures.push(msg.clone());
        }
        if self.worst.as_ref().is_none_or(|(r, _)| ratio > *r || ratio.is_nan()) {
            self.worst = Some((ratio, msg));
        }
    }

    pub fn passed(&self) -> bool {
        self.count > 0 && self.failures.is_empty()
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    /// Short summary: the failures if any, else the tightest check.
    pub fn summary(&self) -> String {
        if self.count == 0 {
            return "no checks ran".into();
        }
        if !self.failures.is_empty() {
            let shown: Vec<&str> = self.failures.iter().take(4).map(String::as_str).collect();
            let more = self.failures.len().saturating_sub(shown.len());
            let tail = if more > 0 { format!("; and {more} more") } else { String::new() };
            return format!("{} of {} checks failed: {}{}", self.failures.len(), self.count, shown.join("; "), tail);
        }
        format!("{} checks, tightest {}", self.count, self.worst.as_ref().map_or("", |(_, m)| m))
    }
}

/// Result of one criterion.
#[derive(Debug)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.1}s of {:.0}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64()
        )
    }
}

/// Runs one criterion under the serial lock, prints its line past the test
/// harness capture and panics if it failed. An error or panic inside `body`
/// counts as a failure, and so does exceeding `budget`.
pub fn criterion<E: Display>(id: u32, title: &'static str, budget: Duration, body: impl FnOnce(&mut Checks) -> Result<(), E>) {
    let _guard = serial();
    let mut checks = Checks::new();
    let start = Instant::now();
    let run = catch_unwind(AssertUnwindSafe(|| body(&mut checks)));
    let elapsed = start.elapsed();
    let (passed, detail) = match run {
        Ok(Ok(())) => {
            let in_time = elapsed <= budget;
            let mut detail = checks.summary();
            if !in_time {
                detail = format!("over budget; {detail}");
            }
            (checks.passed() && in_time, detail)
        }
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panic: {msg}"))
        }
    };
    let outcome = Outcome { id, title, passed, detail, elapsed, budget };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\n{}", outcome.line());
    let _ = out.flush();
    drop(out);
    assert!(outcome.passed, "{}", outcome.line());
}

/// `count` points from `start` to `stop`, evenly spaced in ln x.
pub fn log_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let (a, b) = (start.ln(), stop.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

/// Integer points of [`log_grid`], rounded and deduplicated.
pub fn log_grid_usize(start: usize, stop: usize, count: usize) -> Vec<usize> {
    let mut v: Vec<usize> = log_grid(start as f64, stop as f64, count).into_iter().map(|x| x.round() as usize).collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e3, 1e7, 9);
        assert!((g[0] - 1e3).abs() < 1e-9 && (g[8] - 1e7).abs() < 1e-3);
        assert!((g[2] - 1e4).abs() < 1e-6);
        assert_eq!(log_grid_usize(20, 200, 10).first(), Some(&20));
        assert_eq!(log_grid_usize(20, 200, 10).last(), Some(&200));
    }

    #[test]
    fn checks_report_failures() {
        let mut c = Checks::new();
        c.at_most("a", 1e-30, 1e-28);
        assert!(c.passed());
        c.within("b", -1.5, -4.0 / 3.0, 0.15);
        assert!(!c.passed());
        assert_eq!(c.failures().len(), 1);
        c.positive("m", 0.0);
        assert_eq!(c.failures().len(), 2);
    }
}
