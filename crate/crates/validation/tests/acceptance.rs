//! Acceptance criteria. Each test prints one PASS/FAIL line and fails when the
//! criterion does not hold, including when it overruns its time budget.

use std::time::Duration;

use oplab::asymptotics::{endpoints, fit_constants, large_n, large_n_slope, long_time_slope, Quantity};
use oplab::identities::{verify_algebraic, verify_painleve3, verify_sigma_form, verify_toda};
use oplab::polynomials::{ode_residual, pn_zero_routes_upto, structural_residuals_upto, zero_property_report};
use oplab::recurrence::recurrence_table;
use oplab::scalar::rel_diff;
use oplab::{PrecisionPolicy, WeightParams};
use oplab_validation::{criterion, log_grid, log_grid_usize, Checks};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::float::Constant;
use rug::Float;

const BITS: u32 = 256;

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn fl(v: f64) -> Float {
    Float::with_val(BITS, v)
}

fn certified_256() -> PrecisionPolicy {
    PrecisionPolicy::default().with_start_bits(256)
}

#[test]
fn c01_classical_limit() {
    criterion(1, "classical limit", secs(10), |c: &mut Checks| -> oplab::Result<()> {
        for alpha in [-0.5, 0.0, 0.5, 1.7] {
            let table = recurrence_table(30, &WeightParams::new(0.0, alpha)?)?;
            let (mut da, mut db) = (0.0f64, 0.0f64);
            for n in 0..=30u32 {
                let a = fl(alpha) + (2 * n + 1);
                da = da.max(rel_diff(&table.alpha[n as usize], &a));
                if n > 0 {
                    let b = (fl(alpha) + n) * n;
                    db = db.max(rel_diff(&table.beta[n as usize], &b));
                }
            }
            c.at_most(format!("alpha_n, alpha={alpha}"), da, 1e-28);
            c.at_most(format!("beta_n, alpha={alpha}"), db, 1e-28);
        }
        Ok(())
    });
}

#[test]
fn c02_cross_route_agreement() {
    criterion(2, "cross-route agreement", secs(120), |c: &mut Checks| -> oplab::Result<()> {
        for t in [0.1, 1.0, 10.0] {
            for alpha in [-0.5, 0.5] {
                let p = WeightParams::new(t, alpha)?;
                match recurrence_table(30, &p) {
                    Ok(table) => {
                        for r in table.routes.iter().filter(|r| ["alpha", "beta", "h"].contains(&r.quantity)) {
                            let what = format!("{} ({} vs {}) t={t} alpha={alpha}", r.quantity, r.primary, r.secondary);
                            c.at_most(what, r.max_rel_diff, r.tolerance);
                        }
                    }
                    Err(e) => c.error(format!("table t={t} alpha={alpha}"), e),
                }
                match pn_zero_routes_upto(30, &p) {
                    Ok(routes) => {
                        let worst = routes.iter().map(|r| r.rel_diff / r.tolerance).fold(0.0, f64::max);
                        c.at_most(format!("P_n(0) diff/bound t={t} alpha={alpha}"), worst, 1.0);
                    }
                    Err(e) => c.error(format!("P_n(0) t={t} alpha={alpha}"), e),
                }
            }
        }
        Ok(())
    });
}

#[test]
fn c03_algebraic_identities() {
    criterion(3, "algebraic identity suite", secs(120), |c: &mut Checks| -> oplab::Result<()> {
        for t in [0.1, 1.0, 10.0] {
            for alpha in [-0.5, 0.5] {
                let p = WeightParams::with_policy(t, alpha, certified_256())?;
                let (s, d) = verify_algebraic(30, &p)?;
                for rep in [s, d] {
                    c.at_most(format!("{} t={t} alpha={alpha}", rep.identity_name), rep.max_rel_residual, 1e-25);
                }
                for (x, y) in [(0.75, 2.5), (3.0, 40.0)] {
                    let res = structural_residuals_upto(30, x, y, &p)?;
                    let worst = |f: &dyn Fn(&oplab::polynomials::StructuralResiduals) -> f64| {
                        res.iter().map(f).fold(0.0, f64::max)
                    };
                    let at = format!("t={t} alpha={alpha} x={x} y={y}");
                    c.at_most(format!("mixed recurrence {at}"), worst(&|r| r.mixed), 1e-25);
                    c.at_most(format!("Christoffel-Darboux {at}"), worst(&|r| r.cd_two_point.unwrap_or(0.0)), 1e-25);
                    c.at_most(format!("confluent Christoffel-Darboux {at}"), worst(&|r| r.cd_confluent), 1e-25);
                }
            }
        }
        Ok(())
    });
}

#[test]
fn c04_toda() {
    criterion(4, "Toda system", secs(120), |c: &mut Checks| -> oplab::Result<()> {
        let p = WeightParams::with_policy(1.0, 0.5, certified_256())?;
        let rep = verify_toda(10, &[0.5, 1.0, 2.0], &p)?;
        c.equal("inner precision of at least 512 bits", rep.bits_used >= 512, true);
        for comp in &rep.components {
            c.at_most(&comp.name, comp.max_rel_residual, 1e-12);
        }
        Ok(())
    });
}

#[test]
fn c05_painleve_and_sigma() {
    criterion(5, "Painleve III' and sigma-form", secs(180), |c: &mut Checks| -> oplab::Result<()> {
        let alpha = 0.5;
        let p = WeightParams::new(1.0, alpha)?;
        let grid = [0.5, 1.0, 2.0];
        for n in [1usize, 2, 5] {
            let nf = n as f64;
            let rep = verify_painleve3(n, &grid, &p)?;
            for comp in &rep.components {
                c.at_most(format!("{} n={n}", comp.name), comp.max_rel_residual, 1e-8);
            }
            let got: Vec<f64> = ["alpha_tilde", "beta_tilde", "gamma_tilde", "delta_tilde"]
                .iter()
                .map(|k| rep.parameters.get(*k).copied().unwrap_or(f64::NAN))
                .collect();
            c.equal(format!("Painleve parameters n={n}"), got, vec![4.0 * (2.0 * nf + 1.0 + alpha), 4.0 * alpha, 4.0, -4.0]);

            let rep = verify_sigma_form(n, &grid, &p)?;
            for comp in &rep.components {
                c.at_most(format!("{} n={n}", comp.name), comp.max_rel_residual, 1e-8);
            }
            let got: Vec<f64> =
                ["theta_0", "theta_inf"].iter().map(|k| rep.parameters.get(*k).copied().unwrap_or(f64::NAN)).collect();
            c.equal(format!("sigma parameters n={n}"), got, vec![alpha, -2.0 * nf - alpha]);
        }
        Ok(())
    });
}

#[test]
fn c06_zero_theorems() {
    criterion(6, "zero theorems", secs(60), |c: &mut Checks| -> oplab::Result<()> {
        for t in [0.0, 1.0] {
            for alpha in [0.0, 0.5] {
                let p = WeightParams::new(t, alpha)?;
                for n in 2..=12 {
                    let rep = zero_property_report(n, &p, 0.1, 0.1, 0.0)?;
                    for item in &rep.items {
                        c.positive(format!("{} n={n} t={t} alpha={alpha}", item.item), item.margin);
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn c07_ode_residual() {
    criterion(7, "second-order ODE", secs(30), |c: &mut Checks| -> oplab::Result<()> {
        let mut rng = StdRng::seed_from_u64(0x0de5);
        let general = WeightParams::new(1.0, 0.5)?;
        let classical = WeightParams::new(0.0, 0.5)?;
        for n in [3usize, 8] {
            for _ in 0..10 {
                let x = loop {
                    let x: f64 = rng.gen_range(0.0..4.0 * n as f64);
                    if x > 0.0 {
                        break x;
                    }
                };
                let r = ode_residual(n, x, &general)?;
                c.at_most(format!("t=1 n={n} x={x:.6}"), r.residual, 1e-20);
                let r = ode_residual(n, x, &classical)?;
                c.at_most(format!("t=0 classical n={n} x={x:.6}"), r.classical.unwrap_or(f64::INFINITY), 1e-25);
            }
        }
        Ok(())
    });
}

#[test]
fn c08_large_n_orders() {
    criterion(8, "large-n remainder orders", secs(900), |c: &mut Checks| -> oplab::Result<()> {
        let grid = log_grid_usize(20, 200, 10);
        let policy = PrecisionPolicy::default();
        let cases = [
            (Quantity::AlphaN, -7.0 / 3.0),
            (Quantity::BetaN, -4.0 / 3.0),
            (Quantity::P, -4.0 / 3.0),
            (Quantity::H, -4.0 / 3.0),
        ];
        for (q, expected) in cases {
            match large_n_slope(q, &grid, 1.0, 0.5, None, &policy) {
                Ok(fit) => c.within(format!("{q} slope"), fit.slope, expected, 0.15),
                Err(e) => c.error(format!("{q} slope"), e),
            }
        }
        Ok(())
    });
}

#[test]
fn c09_constant_fit() {
    criterion(9, "constant-fit relations", secs(1200), |c: &mut Checks| -> oplab::Result<()> {
        let alpha = 0.5;
        let n_grid: Vec<usize> = (20..=60).collect();
        let rep = fit_constants(alpha, &[0.5, 1.0, 2.0], &n_grid, &PrecisionPolicy::default())?;
        c.within("c3 tilde shift", rep.c3_tilde_shift, 1.0, 0.02);
        c.within("c0 tilde shift", rep.c0_tilde_shift, (2.0 * alpha + 1.0) * std::f64::consts::LN_2 / 6.0, 0.02);
        let spread = |v: Vec<f64>| {
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        for (label, fits) in [("alpha", &rep.fits), ("alpha+1", &rep.shifted_fits)] {
            c.at_most(format!("c3 t-spread at {label}"), spread(fits.iter().map(|f| f.c3_hat).collect()), 0.02);
            c.at_most(format!("c0 t-spread at {label}"), spread(fits.iter().map(|f| f.c0_hat).collect()), 0.02);
        }
        Ok(())
    });
}

/// ln G(n+1) = Σ_{k<n} ln k!.
fn ln_barnes(n: u32) -> Float {
    (1..n).fold(fl(0.0), |acc, k| acc + Float::with_val(BITS, Float::factorial(k)).ln())
}

#[test]
fn c10_long_time() {
    criterion(10, "long-time orders and constants", secs(300), |c: &mut Checks| -> oplab::Result<()> {
        let alpha = 0.5;
        let policy = PrecisionPolicy::default();
        let grid = log_grid(1e3, 1e7, 9);
        for n in 1..=3 {
            for q in [Quantity::AlphaN, Quantity::BetaN] {
                match long_time_slope(q, n, &grid, alpha, &policy) {
                    Ok(fit) => c.within(format!("{q} slope n={n}"), fit.slope, -1.5, 0.1),
                    Err(e) => c.error(format!("{q} slope n={n}"), e),
                }
            }
        }

        let t = 1e8;
        let table = recurrence_table(6, &WeightParams::new(t, alpha)?)?;
        let bits = table.bits_used;
        let (tf, af) = (Float::with_val(bits, t), Float::with_val(bits, alpha));
        let (sqrt_t, ln_t) = (Float::with_val(bits, tf.sqrt_ref()), Float::with_val(bits, tf.ln_ref()));
        let ln_pi = Float::with_val(bits, Constant::Pi).ln();
        let ln2 = Float::with_val(bits, Constant::Log2);
        for n in 1..=5u32 {
            let growth = Float::with_val(bits, &af * 2u32) + n;
            let exact = Float::with_val(bits, &table.ln_d[n as usize]) + Float::with_val(bits, &sqrt_t * (2 * n))
                - Float::with_val(bits, &ln_t * growth * n) / 4u32;
            let constant = Float::with_val(bits, &ln_pi * n) / 2u32 - Float::with_val(bits, &ln2 * (n * (n - 1))) / 2u32
                + ln_barnes(n);
            c.at_most(format!("ln D_n constant n={n}"), (exact - constant).abs().to_f64(), 1e-3);
        }
        for n in 0..=5u32 {
            let growth = Float::with_val(bits, &af * 2u32) + (2 * n + 1);
            let exact = Float::with_val(bits, table.h[n as usize].ln_ref()) + Float::with_val(bits, &sqrt_t * 2u32)
                - Float::with_val(bits, &ln_t * growth) / 4u32;
            let constant = Float::with_val(bits, &ln_pi / 2u32) - Float::with_val(bits, &ln2 * n)
                + Float::with_val(bits, Float::factorial(n)).ln();
            c.at_most(format!("ln h_n constant n={n}"), (exact - constant).abs().to_f64(), 1e-3);
        }
        Ok(())
    });
}

#[test]
fn c11_endpoint_quartic() {
    criterion(11, "endpoint quartic", secs(5), |c: &mut Checks| -> oplab::Result<()> {
        let policy = PrecisionPolicy::default();
        for n in [1.0, 10.0, 1e3, 1e6] {
            for t in [0.5, 1.0, 2.0] {
                for alpha in [-0.5, 0.0, 0.5, 1.7] {
                    let e = endpoints(n, t, alpha, &policy)?;
                    c.at_most(format!("quartic residual n={n} t={t} alpha={alpha}"), e.residual, 1e-28);
                }
            }
        }
        let e = endpoints(1e6, 1.0, 0.5, &policy)?;
        let bits = e.bits_used;
        let s = large_n(
            Quantity::Y,
            &Float::with_val(bits, 1e6),
            &Float::with_val(bits, 1.0),
            &Float::with_val(bits, 0.5),
            None,
        )?;
        c.at_most("Y series at n=1e6", rel_diff(&e.y, &s.value), 1e-10);
        Ok(())
    });
}
