//! One function per subcommand, each producing an [`Artifact`].

use std::collections::BTreeMap;

use oplab::asymptotics::{large_n, large_n_slope, long_time, long_time_slope, Mode, Quantity, SlopeFit};
use oplab::identities::{verify_algebraic, verify_painleve3, verify_sigma_form, verify_toda, VerificationReport};
use oplab::moments::moment_table;
use oplab::polynomials::{zero_property_report, zeros, ZeroReport};
use oplab::recurrence::recurrence_table;
use oplab::{PrecisionPolicy, WeightParams};
use rayon::prelude::*;
use rug::Float;
use serde_json::{json, Value as Json};

use crate::output::{num, render_json, Cell, Provenance, Table};
use crate::{parse_quantity, Artifact, CliError, Cli, Command, Format, Suite};

/// Largest index when neither `--n` nor `--n-max` is given.
pub const DEFAULT_N_MAX: usize = 10;
/// Default ε of the zero bounds. At ε = 0 the n = 2 outer bounds equal the
/// zeros, so the strict inequalities need a positive ε there.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Steps in t and α for the monotonicity checks of the zero suite.
pub const ZERO_STEP: f64 = 0.1;
/// Large-n grid for `--slope` without `--grid`.
pub const LARGE_N_GRID: &str = "20:200:log";
/// Long-time grid for `--slope` without `--grid`.
pub const LONG_TIME_GRID: &str = "1e3:1e7:log";

type Res<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn policy(cli: &Cli) -> Res<PrecisionPolicy> {
    let mut p = PrecisionPolicy::default();
    if let Some(b) = cli.opts.precision_bits {
        p = p.with_start_bits(b);
    }
    if let Some(e) = cli.opts.target_rel_err {
        p = p.with_target(e);
    }
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn params(cli: &Cli) -> Res<WeightParams> {
    WeightParams::with_policy(cli.opts.t, cli.opts.alpha, policy(cli)?).map_err(|e| usage(e.to_string()))
}

fn base_table(cli: &Cli, columns: &[&str]) -> Table {
    let name = match cli.command {
        Command::Moments => "moments",
        Command::Recurrence => "recurrence",
        Command::Zeros => "zeros",
        Command::Verify => "verify",
        Command::Asymptotics => "asymptotics",
        Command::Scan => "scan",
    };
    Table::new(name, columns).param("t", num(cli.opts.t)).param("alpha", num(cli.opts.alpha))
}

/// (first, last) index: `--n` alone, else 0..=`--n-max`.
fn index_range(cli: &Cli) -> (usize, usize) {
    match (cli.opts.n, cli.opts.n_max) {
        (Some(n), _) => (n, n),
        (None, Some(m)) => (0, m),
        (None, None) => (0, DEFAULT_N_MAX),
    }
}

fn format(cli: &Cli, default: Format) -> Format {
    cli.opts.format.unwrap_or(default)
}

fn table_artifact(cli: &Cli, table: &Table, note: Option<String>) -> Artifact {
    let body = match format(cli, Format::Csv) {
        Format::Csv => table.to_csv(cli.opts.digits),
        Format::Json => render_json(&table.to_json(cli.opts.digits)),
    };
    Artifact { body, passed: true, note }
}

pub fn execute(cli: &Cli) -> Res<Artifact> {
    if cli.opts.digits == 0 {
        return Err(usage("--digits must be positive"));
    }
    match cli.command {
        Command::Moments => moments(cli),
        Command::Recurrence => recurrence(cli),
        Command::Zeros => zeros_cmd(cli),
        Command::Verify => verify(cli),
        Command::Asymptotics => asymptotics(cli),
        Command::Scan => scan(cli),
    }
}

fn moments(cli: &Cli) -> Res<Artifact> {
    let p = params(cli)?;
    let (lo, hi) = index_range(cli);
    let mt = moment_table(hi, &p)?;
    let mut table = base_table(cli, &["j", "mu"]);
    for (j, m) in mt.mu.iter().enumerate().skip(lo) {
        table.push(vec![Cell::Int(j as i64), Cell::real(&m.value, Provenance::from(m))]);
    }
    Ok(table_artifact(cli, &table, None))
}

const RECURRENCE_COLUMNS: [&str; 8] = ["n", "alpha_n", "beta_n", "h_n", "R_n", "r_n", "p", "H_n"];

fn recurrence_row(tab: &oplab::MpRecurrenceTable, n: usize, prov: Provenance) -> Vec<Cell> {
    let r = |v: &Float| Cell::real(v, prov);
    vec![
        Cell::Int(n as i64),
        r(&tab.alpha[n]),
        r(&tab.beta[n]),
        r(&tab.h[n]),
        r(&tab.big_r[n]),
        r(&tab.small_r[n]),
        r(&tab.p[n]),
        r(&tab.big_h[n]),
    ]
}

fn recurrence(cli: &Cli) -> Res<Artifact> {
    let p = params(cli)?;
    let (lo, hi) = index_range(cli);
    let tab = recurrence_table(hi, &p)?;
    let prov = Provenance { bits_used: tab.bits_used, rel_err_bound: tab.rel_err_bound };
    let mut table = base_table(cli, &RECURRENCE_COLUMNS);
    table.provenance = Some(prov);
    for n in lo..=hi {
        table.push(recurrence_row(&tab, n, prov));
    }
    let routes: Vec<Json> = tab
        .routes
        .iter()
        .map(|r| {
            json!({
                "quantity": r.quantity,
                "primary": r.primary,
                "secondary": r.secondary,
                "max_rel_diff": num(r.max_rel_diff),
                "tolerance": num(r.tolerance),
            })
        })
        .collect();
    table.extra.insert("routes".into(), Json::Array(routes));
    table.extra.insert("alpha_flagged".into(), json!(tab.alpha_flagged));
    Ok(table_artifact(cli, &table, None))
}

fn zeros_cmd(cli: &Cli) -> Res<Artifact> {
    let p = params(cli)?;
    let n = cli.opts.n.ok_or_else(|| usage("zeros needs --n"))?;
    let mut table = base_table(cli, &["k", "x_k"]).param("n", n);
    if n > 0 {
        let z = zeros(n, &p)?;
        let prov = Provenance { bits_used: z.bits_used, rel_err_bound: z.rel_err_bound };
        table.provenance = Some(prov);
        for (k, x) in z.zeros.iter().enumerate() {
            table.push(vec![Cell::Int(k as i64 + 1), Cell::real(x, prov)]);
        }
    }
    Ok(table_artifact(cli, &table, None))
}

fn report_json(r: &VerificationReport) -> Res<Json> {
    serde_json::to_value(r).map_err(|e| CliError::Io(e.into()))
}

fn zero_suite_json(reports: &[ZeroReport], n_range: (usize, usize), epsilon: f64) -> Json {
    let items: Vec<(String, f64)> =
        reports.iter().flat_map(|r| r.items.iter().map(move |i| (format!("{} (n={})", i.item, r.n), i.margin))).collect();
    let (worst, min_margin) = items
        .iter()
        .cloned()
        .fold((String::new(), f64::INFINITY), |acc, (k, m)| if m < acc.1 { (k, m) } else { acc });
    let failures: Vec<&str> = items.iter().filter(|(_, m)| !(*m > 0.0)).map(|(k, _)| k.as_str()).collect();
    let per_n: Vec<Json> = reports
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "zeros": r.zeros,
                "a_n": num(r.a_n),
                "b_n": num(r.b_n),
                "inner_bound": num(r.inner_bound),
                "margins": r.items.iter().map(|i| (i.item.clone(), num(i.margin))).collect::<BTreeMap<_, _>>(),
            })
        })
        .collect();
    json!({
        "identity_name": "zero-theorems",
        "n_range": [n_range.0, n_range.1],
        "epsilon": num(epsilon),
        "max_rel_residual": Json::Null,
        "min_margin": num(min_margin),
        "worst_at": worst,
        "failures": failures,
        "passed": failures.is_empty() && !reports.is_empty(),
        "per_n": per_n,
        "alpha_flagged": reports.first().is_some_and(|r| r.alpha_flagged),
    })
}

fn verify(cli: &Cli) -> Res<Artifact> {
    let p = params(cli)?;
    let n_max = cli.opts.n_max.or(cli.opts.n).unwrap_or(DEFAULT_N_MAX);
    let t_grid = match &cli.opts.grid {
        Some(g) => g.points(),
        None => vec![cli.opts.t],
    };
    let ode_ns: Vec<usize> = match cli.opts.n {
        Some(n) => vec![n],
        None => (1..=n_max).collect(),
    };
    let want = |s: Suite| cli.opts.suite == s || cli.opts.suite == Suite::All;
    let mut reports = Vec::new();
    if want(Suite::SRelations) || want(Suite::Discrete) {
        let (s, d) = verify_algebraic(n_max, &p)?;
        if want(Suite::SRelations) {
            reports.push(report_json(&s)?);
        }
        if want(Suite::Discrete) {
            reports.push(report_json(&d)?);
        }
    }
    if want(Suite::Toda) {
        reports.push(report_json(&verify_toda(n_max.max(1), &t_grid, &p)?)?);
    }
    if want(Suite::Painleve) {
        for &n in &ode_ns {
            reports.push(report_json(&verify_painleve3(n, &t_grid, &p)?)?);
        }
    }
    if want(Suite::Sigma) {
        for &n in &ode_ns {
            reports.push(report_json(&verify_sigma_form(n, &t_grid, &p)?)?);
        }
    }
    if want(Suite::Zeros) {
        let eps = cli.opts.epsilon;
        let zs: Vec<ZeroReport> = (2..=n_max.max(2))
            .into_par_iter()
            .map(|n| zero_property_report(n, &p, ZERO_STEP, ZERO_STEP, eps))
            .collect::<oplab::Result<_>>()?;
        reports.push(zero_suite_json(&zs, (2, n_max.max(2)), eps));
    }
    let passed = reports.iter().all(|r| r["passed"] == json!(true));
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r["passed"] != json!(true))
        .map(|r| r["identity_name"].as_str().unwrap_or("?").to_string())
        .collect();
    let note = (!passed).then(|| format!("failed: {}", failed.join(", ")));
    let body = match format(cli, Format::Json) {
        Format::Json => {
            let doc = json!({
                "command": "verify",
                "parameters": {
                    "t": num(cli.opts.t),
                    "alpha": num(cli.opts.alpha),
                    "n_max": n_max,
                    "t_grid": t_grid.iter().map(|&t| num(t)).collect::<Vec<_>>(),
                    "epsilon": num(cli.opts.epsilon),
                },
                "passed": passed,
                "reports": reports,
            });
            render_json(&doc)
        }
        Format::Csv => {
            let mut table = Table::new("verify", &["identity_name", "max_rel_residual", "tolerance", "passed"]);
            for r in &reports {
                let f = |k: &str| r[k].as_f64().map_or(Cell::Text(String::new()), Cell::Num);
                table.push(vec![
                    Cell::Text(r["identity_name"].as_str().unwrap_or("").into()),
                    f("max_rel_residual"),
                    f("tolerance"),
                    Cell::Bool(r["passed"] == json!(true)),
                ]);
            }
            table.to_csv(cli.opts.digits)
        }
    };
    Ok(Artifact { body, passed, note })
}

fn mode_and_quantity(cli: &Cli) -> Res<(Quantity, Mode)> {
    let label = cli.opts.quantity.as_deref().ok_or_else(|| usage("asymptotics needs --quantity"))?;
    let (q, long_suffix) = parse_quantity(label).map_err(|e| usage(e.to_string()))?;
    let mode = match (cli.opts.mode, long_suffix) {
        (Some(Mode::LargeN), true) => return Err(usage(format!("{label} is a long-time label"))),
        (Some(m), _) => m,
        (None, true) => Mode::LongTime,
        (None, false) => Mode::LargeN,
    };
    if mode == Mode::LongTime && !q.has_long_time() {
        return Err(usage(format!("{q} has no long-time expansion")));
    }
    Ok((q, mode))
}

fn slope_extra(table: &mut Table, fit: &SlopeFit) {
    table.extra.insert(
        "slope".into(),
        json!({ "fitted": num(fit.slope), "expected": num(fit.expected), "deviation": num(fit.deviation) }),
    );
}

/// n prints as an integer, t as a real.
fn point_cell(x: f64, mode: Mode) -> Cell {
    match mode {
        Mode::LargeN => Cell::Int(x as i64),
        Mode::LongTime => Cell::Num(x),
    }
}

fn asymptotics(cli: &Cli) -> Res<Artifact> {
    let (q, mode) = mode_and_quantity(cli)?;
    let pol = policy(cli)?;
    let (t, alpha) = (cli.opts.t, cli.opts.alpha);
    let constants = match (cli.opts.c3, cli.opts.c0) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(usage("--c3 and --c0 go together")),
    };
    let var = if mode == Mode::LargeN { "n" } else { "t" };
    let mut table = base_table(cli, &[var, "exact", "series", "abs_diff"])
        .param("quantity", q.label())
        .param("mode", mode.label());
    if cli.opts.slope {
        let default = if mode == Mode::LargeN { LARGE_N_GRID } else { LONG_TIME_GRID };
        let grid = match &cli.opts.grid {
            Some(g) => g.clone(),
            None => default.parse().expect("default grid parses"),
        };
        let fit = match mode {
            Mode::LargeN => large_n_slope(q, &grid.integer_points(), t, alpha, constants, &pol)?,
            Mode::LongTime => {
                let n = cli.opts.n.unwrap_or(1);
                table = table.param("n", n);
                long_time_slope(q, n, &grid.points(), alpha, &pol)?
            }
        };
        for s in &fit.samples {
            table.push(vec![
                point_cell(s.x, mode),
                Cell::Real(s.exact.clone(), None),
                Cell::Real(s.series.clone(), None),
                Cell::Real(Float::with_val(s.diff.prec(), s.diff.abs_ref()), None),
            ]);
        }
        slope_extra(&mut table, &fit);
        let note = format!("slope {:.4} (expected {:.4}, deviation {:.4})", fit.slope, fit.expected, fit.deviation);
        return Ok(table_artifact(cli, &table, Some(note)));
    }

    // series only; exact values come with --slope
    table.columns = vec![var.into(), "series".into(), "remainder_order".into()];
    let points: Vec<f64> = match (&cli.opts.grid, mode) {
        (Some(g), Mode::LargeN) => g.integer_points().into_iter().map(|n| n as f64).collect(),
        (Some(g), Mode::LongTime) => g.points(),
        (None, Mode::LargeN) => vec![cli.opts.n.ok_or_else(|| usage("large-n series needs --n or --grid"))? as f64],
        (None, Mode::LongTime) => vec![t],
    };
    let bits = pol.start_bits;
    let f = |v: f64| Float::with_val(bits, v);
    for x in points {
        let r = match mode {
            Mode::LargeN => large_n(q, &f(x), &f(t), &f(alpha), constants.map(|(a, b)| (f(a), f(b))))?,
            Mode::LongTime => long_time(q, cli.opts.n.unwrap_or(1) as u64, &f(x), &f(alpha))?,
        };
        table.push(vec![point_cell(x, mode), Cell::Real(r.value.clone(), None), Cell::Num(r.remainder_order)]);
    }
    if mode == Mode::LongTime {
        table = table.param("n", cli.opts.n.unwrap_or(1));
    }
    Ok(table_artifact(cli, &table, None))
}

fn scan(cli: &Cli) -> Res<Artifact> {
    let grid = cli.opts.grid.as_ref().ok_or_else(|| usage("scan needs --grid over t"))?;
    let p = params(cli)?;
    let (lo, hi) = index_range(cli);
    let ts = grid.points();
    let tables = ts
        .par_iter()
        .map(|&t| recurrence_table(hi, &p.with_t(t)))
        .collect::<oplab::Result<Vec<_>>>()?;
    let mut columns = vec!["t"];
    columns.extend(RECURRENCE_COLUMNS);
    let mut table = base_table(cli, &columns);
    table.parameters.remove("t");
    for (t, tab) in ts.iter().zip(&tables) {
        let prov = Provenance { bits_used: tab.bits_used, rel_err_bound: tab.rel_err_bound };
        for n in lo..=hi {
            let mut row = vec![Cell::Num(*t)];
            row.extend(recurrence_row(tab, n, prov));
            table.push(row);
        }
    }
    Ok(table_artifact(cli, &table, None))
}
