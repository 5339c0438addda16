//! Geometric side of the Petersson formula with a certified truncation tail.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, mod_inv, KloostermanTable};
use crate::bessel::{bessel_j_f64, bessel_j_mp};
use crate::error::{Error, Result};
use crate::hp::{bits_for_digits, KahanSum, Real};
use crate::modforms::EigenBasis;
use crate::special::ln_gamma;

/// Largest modulus a single evaluation may sum to.
pub const C_LIMIT: u64 = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeterssonResult {
    pub m: u64,
    pub n: u64,
    pub k: u32,
    pub delta_term: u8,
    /// 2π i^k Σ_{c ≤ C} S(m,n;c)/c · J_{k−1}(4π√(mn)/c)
    pub kloosterman_sum_value: f64,
    pub truncation_c: u64,
    pub tail_bound: f64,
}

impl PeterssonResult {
    pub fn value(&self) -> f64 {
        self.delta_term as f64 + self.kloosterman_sum_value
    }
}

#[derive(Clone, Debug)]
pub struct PeterssonResultMp {
    pub m: u64,
    pub n: u64,
    pub k: u32,
    pub delta_term: u8,
    pub kloosterman_sum_value: Real,
    pub truncation_c: u64,
    pub tail_bound: f64,
}

/// Smallest modulus from which |J_{k−1}(4π√(mn)/c)| ≤ (x/2)^{k−1}/(k−1)! is in its decaying regime.
pub fn factorial_regime_start(m: u64, n: u64, k: u32) -> u64 {
    (8.0 * E * PI * ((m * n) as f64).sqrt() / k as f64).ceil().max(1.0) as u64
}

/// Bound on Σ_{c > C} |2π S(m,n;c)/c J_{k−1}(4π√(mn)/c)| from τ(c) ≤ 2√c, Weil and the first Bessel branch.
pub fn tail_bound(m: u64, n: u64, k: u32, c: u64) -> f64 {
    (log_tail_prefactor(m, n, k) - (k - 2) as f64 * (c as f64).ln()).exp()
}

fn log_tail_prefactor(m: u64, n: u64, k: u32) -> f64 {
    let g = gcd(m, n) as f64;
    let km1 = (k - 1) as f64;
    let log_a = km1 * (2.0 * PI * ((m * n) as f64).sqrt()).ln() - ln_gamma(k as f64);
    (4.0 * PI * g.sqrt()).ln() + log_a - ((k - 2) as f64).ln()
}

/// Truncation point: the tail is below `tol` and the factorial regime has begun.
pub fn truncation_point(m: u64, n: u64, k: u32, tol: f64) -> u64 {
    let c = ((log_tail_prefactor(m, n, k) - tol.ln()) / (k - 2) as f64).exp().ceil();
    let mut c = (c.max(1.0) as u64).max(factorial_regime_start(m, n, k));
    while tail_bound(m, n, k, c) >= tol {
        c += 1;
    }
    c
}

fn check_args(m: u64, n: u64, k: u32) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("m, n must be positive".into()));
    }
    if k < 12 || k % 2 == 1 {
        return Err(Error::Domain(format!("weight {k} must be even and at least 12")));
    }
    Ok(())
}

/// Evaluator sharing one Kloosterman table across many (m, n, k).
pub struct Petersson {
    table: KloostermanTable,
}

impl Petersson {
    pub fn new(cmax: u64) -> Self {
        Petersson { table: KloostermanTable::new(cmax) }
    }

    pub fn cmax(&self) -> u64 {
        self.table.cmax()
    }

    pub fn rhs(&self, m: u64, n: u64, k: u32, tol: f64) -> Result<PeterssonResult> {
        check_args(m, n, k)?;
        let c_max = truncation_point(m, n, k, tol);
        if c_max > self.table.cmax() {
            return Err(Error::Budget { what: "Kloosterman moduli".into(), needed: c_max, limit: self.table.cmax() });
        }
        let x0 = 4.0 * PI * ((m * n) as f64).sqrt();
        let mut s = KahanSum::new();
        for c in 1..=c_max {
            let j = bessel_j_f64(k - 1, x0 / c as f64);
            if j != 0.0 {
                s.add(self.table.s(m, n, c) / c as f64 * j);
            }
        }
        let sign = if k % 4 == 0 { 1.0 } else { -1.0 };
        Ok(PeterssonResult {
            m,
            n,
            k,
            delta_term: (m == n) as u8,
            kloosterman_sum_value: 2.0 * PI * sign * s.value(),
            truncation_c: c_max,
            tail_bound: tail_bound(m, n, k, c_max),
        })
    }
}

/// δ(m,n) + 2π i^k Σ_c S(m,n;c)/c J_{k−1}(4π√(mn)/c), summed until the tail is below `tol`.
pub fn petersson_rhs(m: u64, n: u64, k: u32, tol: f64) -> Result<PeterssonResult> {
    check_args(m, n, k)?;
    let c_max = truncation_point(m, n, k, tol);
    if c_max > C_LIMIT {
        return Err(Error::Budget { what: "Kloosterman moduli".into(), needed: c_max, limit: C_LIMIT });
    }
    Petersson::new(c_max).rhs(m, n, k, tol)
}

fn kloosterman_mp(m: u64, n: u64, c: u64, two_pi_over_c: &Real, p: usize) -> Real {
    let mut s = Real::zero(p);
    for x in 0..c {
        if let Some(xb) = mod_inv(x, c) {
            if gcd(x, c) != 1 {
                continue;
            }
            let r = ((m % c) * x + (n % c) * xb) % c;
            s = s.add(&two_pi_over_c.mul_i64(r as i64, p).cos(p), p);
        }
    }
    s
}

/// Multiprecision variant; the off-diagonal part is kept apart from δ(m,n).
pub fn petersson_rhs_mp(m: u64, n: u64, k: u32, digits: u32, tol: f64) -> Result<PeterssonResultMp> {
    check_args(m, n, k)?;
    let c_max = truncation_point(m, n, k, tol);
    if c_max > 2_000 {
        return Err(Error::Budget { what: "multiprecision Kloosterman moduli".into(), needed: c_max, limit: 2_000 });
    }
    let p = bits_for_digits(digits) + 32;
    let pi = Real::pi(p);
    let x0 = pi.mul_i64(4, p).mul(&Real::from_i64((m * n) as i64, p).sqrt(p), p);
    let mut s = Real::zero(p);
    for c in 1..=c_max {
        let x = x0.div_i64(c as i64, p);
        let (j, _, _) = bessel_j_mp(k - 1, &x, p)?;
        let kl = kloosterman_mp(m, n, c, &pi.mul_i64(2, p).div_i64(c as i64, p), p);
        s = s.add(&kl.mul(&j, p).div_i64(c as i64, p), p);
    }
    let sign = if k % 4 == 0 { 2 } else { -2 };
    Ok(PeterssonResultMp {
        m,
        n,
        k,
        delta_term: (m == n) as u8,
        kloosterman_sum_value: s.mul(&pi, p).mul_i64(sign, p),
        truncation_c: c_max,
        tail_bound: tail_bound(m, n, k, c_max),
    })
}

/// ε in the survey majorants.
pub const SURVEY_EPS: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub m: u64,
    pub n: u64,
    pub k: u32,
    pub actual: f64,
    pub majorant1: f64,
    pub majorant2: f64,
    pub ratio: f64,
}

/// (m,n)^{1/2}(mn)^{1/4+ε}/k and k^{1/6}(m,n)^{1/2}/(mn)^{1/4−ε}.
pub fn majorants(m: u64, n: u64, k: u32) -> (f64, f64) {
    let g = (gcd(m, n) as f64).sqrt();
    let mn = (m * n) as f64;
    let kf = k as f64;
    (g * mn.powf(0.25 + SURVEY_EPS) / kf, kf.powf(1.0 / 6.0) * g / mn.powf(0.25 - SURVEY_EPS))
}

/// |Δ_k(m,n) − δ(m,n)| against both majorants; ratio uses the smaller one.
pub fn petersson_error_survey(k: u32, grid: &[(u64, u64)], tol: f64) -> Result<Vec<SurveyRow>> {
    let need = grid
        .iter()
        .map(|&(m, n)| truncation_point(m, n, k, tol))
        .max()
        .unwrap_or(1);
    if need > C_LIMIT {
        return Err(Error::Budget { what: "Kloosterman moduli".into(), needed: need, limit: C_LIMIT });
    }
    let ev = Petersson::new(need);
    grid.iter()
        .map(|&(m, n)| {
            let r = ev.rhs(m, n, k, tol)?;
            let actual = r.kloosterman_sum_value.abs();
            let (m1, m2) = majorants(m, n, k);
            Ok(SurveyRow { m, n, k, actual, majorant1: m1, majorant2: m2, ratio: actual / m1.min(m2) })
        })
        .collect()
}

/// |Σ_f ω_f λ_f(m)λ_f(n) − Δ_k(m,n)| with weights already attached to `basis`.
pub fn spectral_vs_geometric(basis: &EigenBasis, ev: &Petersson, m: u64, n: u64, tol: f64) -> Result<f64> {
    let mut s = KahanSum::new();
    for f in &basis.forms {
        s.add(f.omega()? * f.lambda_f64(m as usize) * f.lambda_f64(n as usize));
    }
    let r = ev.rhs(m, n, basis.weight, tol)?;
    Ok((s.value() - r.value()).abs())
}
