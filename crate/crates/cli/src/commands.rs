use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use lowlying::bessel::{bessel_bound_certificate, bessel_bound_log_certificate, bessel_j};
use lowlying::density::{averaged_density_kloosterman, density_eigenform_route, AveragedDensity, DensityReport};
use lowlying::expansion::{theorem_expansion, ExpansionCoefficients, Z_TRUNCATION};
use lowlying::hp::bits_for_digits;
use lowlying::modforms::{cusp_dim, norm_terms};
use lowlying::petersson::{petersson_error_survey, truncation_point, Petersson};
use lowlying::report::{fmt_real, Table};
use lowlying::testfn::{ks_prediction, KSKernel, Sign};

use crate::cache::Cache;
use crate::config::{Format, RunConfig};
use crate::CliError;

/// Result of a subcommand: documents to write and whether every check held.
pub struct Output {
    pub main: String,
    /// (file suffix, contents) written next to the main output
    pub extra: Vec<(&'static str, String)>,
    pub ok: bool,
    pub failures: Vec<String>,
}

const IDENTITY_TOL: f64 = 1e-6;
const PETERSSON_TAIL: f64 = 1e-20;
const OMEGA_BAND: f64 = 10.0;
const BESSEL_RATIO: f64 = 10.0;

fn r(x: f64) -> String {
    fmt_real(x)
}

pub fn verify_petersson(cfg: &RunConfig, cache: &Cache) -> Result<Output, CliError> {
    let mut t = Table::new(&["k", "m", "n", "spectral", "geometric", "residual", "tail_bound", "note"]);
    let mut s = Table::new(&["k", "m", "n", "actual", "majorant1", "majorant2", "ratio"]);
    let mut failures = Vec::new();
    let mm = cfg.mn_max;
    for &k in &cfg.k {
        if cusp_dim(k) == 0 {
            t.push(vec![k.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), "empty space".into()]);
            continue;
        }
        let b = cache.eigenbasis(k, norm_terms(k).max(3 * mm as usize), cfg.precision)?;
        let ev = Petersson::new(truncation_point(mm, mm, k, PETERSSON_TAIL));
        for m in 1..=mm {
            for n in 1..=mm {
                let g = ev.rhs(m, n, k, PETERSSON_TAIL)?;
                let mut acc = lowlying::hp::KahanSum::new();
                for f in &b.forms {
                    acc.add(f.omega()? * f.lambda_f64(m as usize) * f.lambda_f64(n as usize));
                }
                let spectral = acc.value();
                let res = (spectral - g.value()).abs();
                let mut note = String::new();
                if res >= IDENTITY_TOL {
                    note = "identity violated".into();
                    failures.push(format!("k={k} m={m} n={n}: residual {res:e}"));
                }
                if m == 1 && n == 1 {
                    let bound = OMEGA_BAND * 2f64.powi(-(k as i32));
                    if (g.value() - 1.0).abs() > bound {
                        note = "omega band violated".into();
                        failures.push(format!("k={k}: |Ω_k − 1| = {:e} > {bound:e}", (g.value() - 1.0).abs()));
                    }
                }
                t.push(vec![k.to_string(), m.to_string(), n.to_string(), r(spectral), r(g.value()), r(res), r(g.tail_bound), note]);
            }
        }
        let grid: Vec<(u64, u64)> = (1..=mm).flat_map(|m| (1..=mm).map(move |n| (m, n))).collect();
        for row in petersson_error_survey(k, &grid, PETERSSON_TAIL)? {
            s.push(vec![k.to_string(), row.m.to_string(), row.n.to_string(), r(row.actual), r(row.majorant1), r(row.majorant2), r(row.ratio)]);
        }
    }
    Ok(Output { main: t.to_csv(), extra: vec![("survey", s.to_csv())], ok: failures.is_empty(), failures })
}

pub fn bessel_check(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<(u32, f64)> = (0..cfg.samples)
        .map(|_| {
            let k: u32 = rng.gen_range(2..=300);
            let x = (1e-2f64.ln() + rng.gen::<f64>() * (1e5f64.ln() - 1e-2f64.ln())).exp();
            (k - 1, x)
        })
        .collect();
    let rows: Vec<Result<(u32, f64, f64, f64, f64, String), CliError>> = samples
        .par_iter()
        .map(|&(order, x)| {
            let v = bessel_j(order, x, cfg.precision)?;
            let cert = bessel_bound_certificate(order, x);
            let ratio = if cert > 1e-290 {
                v.value_f64().abs() / cert
            } else {
                let p = bits_for_digits(cfg.precision);
                (v.value.abs().ln(p).to_f64() - bessel_bound_log_certificate(order, x)).exp()
            };
            Ok((order, x, v.value_f64(), cert, ratio, format!("{:?}", v.method)))
        })
        .collect();
    let mut t = Table::new(&["order", "x", "value", "certificate", "ratio", "method"]);
    let mut failures = Vec::new();
    for row in rows {
        let (order, x, v, cert, ratio, method) = row?;
        if ratio > BESSEL_RATIO {
            failures.push(format!("order {order} x {x}: ratio {ratio}"));
        }
        t.push(vec![order.to_string(), r(x), r(v), r(cert), r(ratio), method]);
    }
    Ok(Output { main: t.to_csv(), extra: Vec::new(), ok: failures.is_empty(), failures })
}

#[derive(Serialize)]
struct DensityRow {
    report: DensityReport,
    ks_prediction: f64,
}

pub fn density(cfg: &RunConfig, cache: &Cache) -> Result<Output, CliError> {
    let phi = cfg.test_function();
    let mut rows = Vec::new();
    for &k in cfg.k.iter().filter(|&&k| cusp_dim(k) > 0) {
        let x = (k as f64).powf(cfg.x_exponent);
        let n = x.powf(cfg.sigma).ceil() as usize + 2;
        let b = cache.eigenbasis(k, n.max(norm_terms(k)), cfg.precision)?;
        let report = density_eigenform_route(&b, x, &phi)?;
        let sign = if k % 4 == 0 { Sign::Plus } else { Sign::Minus };
        rows.push(DensityRow { report, ks_prediction: ks_prediction(&phi, KSKernel { sign }) });
    }
    let main = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&rows).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut t = Table::new(&[
                "k", "log_x", "gamma_term", "pi_term", "prime_square_term", "prime_term", "prime_power_term", "total", "displayed_terms", "ks_prediction",
            ]);
            for DensityRow { report: d, ks_prediction } in &rows {
                t.push(vec![
                    d.k.to_string(),
                    r(d.log_x),
                    r(d.gamma_term),
                    r(d.pi_term),
                    r(d.prime_square_term),
                    r(d.prime_term),
                    r(d.prime_power_term),
                    r(d.total),
                    r(d.displayed_terms()),
                    r(*ks_prediction),
                ]);
            }
            t.to_csv()
        }
    };
    Ok(Output { main, extra: Vec::new(), ok: true, failures: Vec::new() })
}

fn averaged_rows(cfg: &RunConfig) -> Result<Vec<AveragedDensity>, CliError> {
    let h = cfg.weight();
    let phi = cfg.test_function();
    let mut out = Vec::new();
    for &big_k in &cfg.big_k {
        for &sign in &cfg.signs {
            out.push(averaged_density_kloosterman(big_k, sign, &h, &phi)?);
        }
    }
    Ok(out)
}

pub fn averaged_density(cfg: &RunConfig) -> Result<Output, CliError> {
    let rows = averaged_rows(cfg)?;
    let main = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&rows).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut t = Table::new(&["K", "sign", "route", "value", "main_term", "prime_square_term", "kloosterman_term", "H", "pairs"]);
            for a in &rows {
                t.push(vec![
                    r(a.big_k),
                    a.sign.as_str().into(),
                    format!("{:?}", a.route).to_lowercase(),
                    r(a.value),
                    r(a.main_term),
                    r(a.prime_square_term),
                    r(a.kloosterman_term),
                    r(a.h_pm),
                    a.pairs.to_string(),
                ]);
            }
            t.to_csv()
        }
    };
    Ok(Output { main, extra: Vec::new(), ok: true, failures: Vec::new() })
}

pub fn expansion(cfg: &RunConfig) -> Result<Output, CliError> {
    let h = cfg.weight();
    let phi = cfg.test_function();
    let co = ExpansionCoefficients::compute(&h, cfg.j, Z_TRUNCATION, cfg.prime_limit)?;
    let rows = averaged_rows(cfg)?;
    let mut t = Table::new(&["K", "sign", "direct", "expansion", "difference", "transition_main", "transition_corrections"]);
    let mut plot = Table::new(&["K", "sign", "scaled_difference"]);
    let mut failures = Vec::new();
    let mut last: Vec<(Sign, f64)> = Vec::new();
    for a in &rows {
        let e = theorem_expansion(a.big_k, a.sign, &h, &phi, &co, cfg.j)?;
        let d = a.value - e.value;
        if d.abs() > cfg.tolerance {
            failures.push(format!("K={} sign {}: |difference| {} > {}", a.big_k, a.sign.as_str(), d.abs(), cfg.tolerance));
        }
        if let Some(prev) = last.iter_mut().find(|(s, _)| *s == a.sign) {
            if d.abs() >= prev.1 {
                failures.push(format!("K={} sign {}: difference not decreasing", a.big_k, a.sign.as_str()));
            }
            prev.1 = d.abs();
        } else {
            last.push((a.sign, d.abs()));
        }
        t.push(vec![r(a.big_k), a.sign.as_str().into(), r(a.value), r(e.value), r(d), r(e.transition_main), r(e.transition_corrections)]);
        let scaled = d * a.big_k.ln().powi(cfg.j as i32 + 1);
        plot.push(vec![r(a.big_k), a.sign.as_str().into(), r(scaled)]);
    }
    Ok(Output { main: t.to_csv(), extra: vec![("plot", plot.to_csv())], ok: failures.is_empty(), failures })
}

pub fn constants(cfg: &RunConfig) -> Result<Output, CliError> {
    let h = cfg.weight();
    let co = ExpansionCoefficients::compute(&h, cfg.j, Z_TRUNCATION, cfg.prime_limit)?;
    let main = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&co).expect("coefficients serialize") + "\n",
        Format::Csv => {
            let mut t = Table::new(&["j", "c", "c_err", "C_prev", "C_prev_err", "S", "S_err", "R", "R_err"]);
            let e = &co.error_bars;
            for j in 0..co.j {
                t.push(vec![
                    (j + 1).to_string(),
                    r(co.c[j]),
                    r(e.c[j]),
                    r(co.big_c[j]),
                    r(e.big_c[j]),
                    r(co.s[j]),
                    r(e.s[j]),
                    r(co.r[j]),
                    r(e.r[j]),
                ]);
            }
            t.to_csv()
        }
    };
    Ok(Output { main, extra: Vec::new(), ok: true, failures: Vec::new() })
}
