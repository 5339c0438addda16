//! Lower-order terms: Z(s), the constants C_{j,h}, S_{j,h} = D_{j,h}, c_j, R_{j,h},
//! the transition integrals I_{a,b} and the assembled expansions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{primes_up_to, squarefree_inv_totient};
use crate::density::h_poisson_sums;
use crate::error::{Error, Result};
use crate::hp::KahanSum;
use crate::quad::{integrate, integrate_pieces};
use crate::special::zeta;
use crate::testfn::{ks_prediction, KSKernel, Sign, TestFunction, WeightFunction};

/// Largest J for which the expansion is assembled.
pub const J_MAX: usize = 4;
/// Default Euler product truncation for Z(s).
pub const Z_TRUNCATION: u64 = 1_000_000;
/// Default range for the θ integrals.
pub const THETA_LIMIT: u64 = 10_000_000;
/// Cauchy circle radius around s = 0.
pub const CAUCHY_RADIUS: f64 = 0.25;
/// Constant in the bound check of `incomplete_log_moment_tail`.
pub const TAIL_MOMENT_C: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZValue {
    pub value: Complex64,
    pub error: f64,
}

/// Z(s) = Σ μ²(c)/(c^s φ(c)) = ζ(s+1)ζ(s+2)/ζ(2s+2) · ∏_p r_p(s), with
/// r_p = (1 + (p^{−s−1} − p^{−2s−1})/(p−1))(1 − p^{−s−2})/(1 − p^{−2s−2}) = 1 + O(p^{−3−2Re s}).
#[derive(Clone, Debug)]
pub struct EulerProductZ {
    pub truncation: u64,
    primes: Vec<f64>,
}

impl EulerProductZ {
    pub fn new(truncation: u64) -> Result<Self> {
        if truncation < 1000 {
            return Err(Error::Domain(format!("Euler product truncation {truncation} below 1000")));
        }
        let primes = primes_up_to(truncation).into_iter().map(|p| p as f64).collect();
        Ok(EulerProductZ { truncation, primes })
    }

    /// Bound on |log ∏_{p>P} r_p(s)| from |log r_p| ≤ 3(p^{−σ−3} + p^{−2σ−3}) and π(x) < 1.26x/log x.
    fn tail_log_bound(&self, sigma: f64) -> f64 {
        let p = self.truncation as f64;
        let lp = p.ln();
        let sum_pow = |a: f64| 1.26 * p.powf(1.0 - a) / ((a - 1.0) * lp) * (1.0 + 1.0 / ((a - 1.0) * lp));
        3.0 * (sum_pow(sigma + 3.0) + sum_pow(2.0 * sigma + 3.0))
    }

    pub fn eval(&self, s: Complex64) -> Result<ZValue> {
        if s.norm() < 1e-12 {
            return Err(Error::Domain("Z(s) has a pole at s = 0".into()));
        }
        if s.re <= -0.5 {
            return Err(Error::Domain(format!("Re s = {} too small for the product form", s.re)));
        }
        let mut log_prod = Complex64::new(0.0, 0.0);
        for &p in self.primes.iter().rev() {
            let lp = p.ln();
            let u = (-s * lp).exp();
            let u2 = u * u;
            let f = 1.0 + (u - u2) / (p * (p - 1.0));
            let r = f * (1.0 - u / (p * p)) / (1.0 - u2 / (p * p));
            log_prod += r.ln();
        }
        let one = Complex64::new(1.0, 0.0);
        let value = zeta(s + one) * zeta(s + 2.0) / zeta(2.0 * s + 2.0) * log_prod.exp();
        let t = self.tail_log_bound(s.re);
        Ok(ZValue { value, error: value.norm() * (t.exp() - 1.0) + 1e-15 * value.norm() })
    }
}

pub fn z_of_s(s: Complex64, truncation: u64) -> Result<ZValue> {
    EulerProductZ::new(truncation)?.eval(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    /// f^{(n)}(0) for n = 0..=nmax (real parts)
    pub values: Vec<f64>,
    /// difference between the last two node counts
    pub errors: Vec<f64>,
    pub nodes: usize,
}

/// f^{(n)}(0), n ≤ nmax, by the trapezoid rule on |s| = r, doubling the node count until stable.
pub fn cauchy_derivatives<F>(f: F, nmax: usize, r: f64) -> Result<Derivatives>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let coeffs = |vals: &[Complex64]| -> Vec<f64> {
        let m = vals.len();
        let mut fact = 1.0;
        (0..=nmax)
            .map(|n| {
                if n > 0 {
                    fact *= n as f64;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, v) in vals.iter().enumerate() {
                    let th = -2.0 * PI * (n * i % m) as f64 / m as f64;
                    acc += v * Complex64::from_polar(1.0, th);
                }
                (acc / m as f64).re * fact / r.powi(n as i32)
            })
            .collect()
    };
    let node = |i: usize, m: usize| Complex64::from_polar(r, 2.0 * PI * i as f64 / m as f64);
    let mut m = 16usize;
    let mut vals: Vec<Complex64> = (0..m).into_par_iter().map(|i| f(node(i, m))).collect::<Result<_>>()?;
    let mut prev = coeffs(&vals);
    while m < 4096 {
        // new nodes interleave the old ones
        let odd: Vec<Complex64> = (0..m).into_par_iter().map(|i| f(node(2 * i + 1, 2 * m))).collect::<Result<_>>()?;
        let mut merged = Vec::with_capacity(2 * m);
        for i in 0..m {
            merged.push(vals[i]);
            merged.push(odd[i]);
        }
        vals = merged;
        m *= 2;
        let cur = coeffs(&vals);
        let errors: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).collect();
        let stable = cur.iter().zip(&errors).enumerate().all(|(n, (c, e))| {
            let scale = (1..=n).map(|i| i as f64).product::<f64>() / r.powi(n as i32);
            *e <= 1e-13 * (c.abs() + scale)
        });
        if stable {
            return Ok(Derivatives { values: cur, errors, nodes: m });
        }
        prev = cur;
    }
    Err(Error::Precision("Cauchy differentiation did not settle by 4096 nodes".into()))
}

/// F(s) = sZ(s)(4π)^{s−1}ℳh(1−s), with the s-factor cancelling the pole of Z.
pub fn window_generating_function(z: &EulerProductZ, h: &WeightFunction, s: Complex64) -> Result<(Complex64, f64)> {
    let zv = z.eval(s)?;
    let one = Complex64::new(1.0, 0.0);
    let rest = ((s - one) * (4.0 * PI).ln()).exp() * h.mellin(one - s);
    Ok((s * zv.value * rest, (s * rest).norm() * zv.error))
}

/// (−1)^j/(j+1) · F^{(j+1)}(0) for j < derivatives.len() − 1.
pub fn big_c_from_derivatives(d: &Derivatives, j: usize) -> (f64, f64) {
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let k = (j + 1) as f64;
    (sign / k * d.values[j + 1], d.errors[j + 1] / k)
}

fn z_error_on_circle(z: &EulerProductZ, h: &WeightFunction, r: f64) -> Result<f64> {
    // sup over the circle of the Z-tail contribution to F, sampled at 64 points
    let mut e: f64 = 0.0;
    for i in 0..64 {
        let s = Complex64::from_polar(r, 2.0 * PI * i as f64 / 64.0);
        e = e.max(window_generating_function(z, h, s)?.1);
    }
    Ok(e)
}

/// C_{j,h} with its error bar.
pub fn big_c_coefficient(h: &WeightFunction, j: usize, z: &EulerProductZ) -> Result<(f64, f64)> {
    let d = cauchy_derivatives(|s| Ok(window_generating_function(z, h, s)?.0), j + 1, CAUCHY_RADIUS)?;
    let (v, e) = big_c_from_derivatives(&d, j);
    let fact: f64 = (1..=j + 1).map(|i| i as f64).product();
    let ez = z_error_on_circle(z, h, CAUCHY_RADIUS)? * fact / CAUCHY_RADIUS.powi(j as i32 + 1) / (j + 1) as f64;
    Ok((v, e + ez))
}

/// S_{j,h} = D_{j,h} = −4π C_{j−1,h}/((j−1)!∫h).
pub fn s_from_big_c(big_c_prev: f64, j: usize, h_integral: f64) -> f64 {
    let fact: f64 = (1..j).map(|i| i as f64).product();
    -4.0 * PI * big_c_prev / (fact * h_integral)
}

/// ∫_1^L g(t)(θ(t)−t)/t² dt for g(t) = Σ_m a_m (log t)^m, with θ the exact prime step function:
/// Σ_{p≤L} log p (W(L) − W(p)) − ∫_1^L g/t, where W_m(t) = −(m!/t)Σ_{i≤m}(log t)^i/i!.
pub fn theta_kernel_integral(poly: &[f64], primes: &[u64], limit: f64) -> f64 {
    let w = |t: f64| -> f64 {
        let lt = t.ln();
        let mut total = 0.0;
        for (m, a) in poly.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            let mut term = 1.0;
            let mut s = 1.0;
            for i in 1..=m {
                term *= lt / i as f64;
                s += term;
            }
            let fact: f64 = (1..=m).map(|i| i as f64).product();
            total += a * (-fact / t * s);
        }
        total
    };
    let wl = w(limit);
    let mut acc = KahanSum::new();
    for &p in primes.iter().filter(|&&p| (p as f64) <= limit) {
        let pf = p as f64;
        acc.add(pf.ln() * (wl - w(pf)));
    }
    let ll = limit.ln();
    for (m, a) in poly.iter().enumerate() {
        acc.add(-a * ll.powi(m as i32 + 1) / (m + 1) as f64);
    }
    acc.value()
}

/// Kernel of c_j in powers of log t: g = 1 for j = 1, (log t)^{j−1}/(j−1) − (log t)^{j−2} for j ≥ 2.
fn c_kernel(j: usize) -> Vec<f64> {
    if j == 1 {
        return vec![1.0];
    }
    let mut g = vec![0.0; j];
    g[j - 1] = 1.0 / (j - 1) as f64;
    g[j - 2] = -1.0;
    g
}

/// Heuristic tail bar 2(log L)^j/√L for the θ integrals beyond L.
pub fn theta_tail_bar(j: usize, limit: f64) -> f64 {
    2.0 * limit.ln().powi(j as i32) / limit.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn c_j_from_primes(j: usize, primes: &[u64], limit: f64) -> Estimate {
    let i = theta_kernel_integral(&c_kernel(j), primes, limit);
    let bar = theta_tail_bar(j, limit);
    if j == 1 {
        Estimate { value: 2.0 * i + 2.0, error: 2.0 * bar }
    } else {
        let f = 2f64.powi(j as i32) / (1..=j - 2).map(|i| i as f64).product::<f64>();
        Estimate { value: f * i, error: f * bar }
    }
}

/// c_1 = 2∫_1^∞(θ−t)/t² + 2 and c_j = (2^j/(j−2)!)∫_1^∞(log t)^{j−2}(log t/(j−1) − 1)(θ−t)/t², over [1, L].
pub fn c_j_coefficient(j: usize, theta_limit: u64) -> Result<Estimate> {
    if j == 0 {
        return Err(Error::Domain("c_j needs j ≥ 1".into()));
    }
    Ok(c_j_from_primes(j, &primes_up_to(theta_limit), theta_limit as f64))
}

fn r_j_from_primes(h: &WeightFunction, j: usize, primes: &[u64], limit: f64) -> Estimate {
    if j == 1 {
        let i = theta_kernel_integral(&[1.0], primes, limit);
        Estimate {
            value: 1.0 + h.log_integral() / h.integral() - (4.0 * PI).ln() + i,
            error: theta_tail_bar(1, limit),
        }
    } else {
        let i = theta_kernel_integral(&c_kernel(j), primes, limit);
        let f = 1.0 / (1..=j - 2).map(|i| i as f64).product::<f64>();
        Estimate { value: f * i, error: f * theta_tail_bar(j, limit) }
    }
}

/// R_{1,h} = 1 + ∫h·log/∫h − log 4π + ∫_1^∞(θ−t)/t²; R_j for j ≥ 2 is h-independent.
pub fn r_j_coefficient(h: &WeightFunction, j: usize, theta_limit: u64) -> Result<Estimate> {
    if j == 0 {
        return Err(Error::Domain("R_j needs j ≥ 1".into()));
    }
    Ok(r_j_from_primes(h, j, &primes_up_to(theta_limit), theta_limit as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientErrors {
    pub c: Vec<f64>,
    #[serde(rename = "C")]
    pub big_c: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    #[serde(rename = "J")]
    pub j: usize,
    pub h_tag: String,
    /// c_1..c_J
    pub c: Vec<f64>,
    /// C_{0,h}..C_{J−1,h}
    #[serde(rename = "C")]
    pub big_c: Vec<f64>,
    /// S_{1,h}..S_{J,h}
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    /// R_{1,h}..R_{J,h}
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub error_bars: CoefficientErrors,
    pub z_truncation: u64,
    pub theta_limit: u64,
    pub cauchy_nodes: usize,
}

pub fn h_tag(h: &WeightFunction) -> String {
    format!("bump[{},{}]x{}", h.a(), h.b(), h.scale)
}

impl ExpansionCoefficients {
    pub fn compute(h: &WeightFunction, j: usize, z_truncation: u64, theta_limit: u64) -> Result<Self> {
        if j == 0 || j > J_MAX {
            return Err(Error::Domain(format!("J = {j} outside 1..={J_MAX}")));
        }
        let z = EulerProductZ::new(z_truncation)?;
        let d = cauchy_derivatives(|s| Ok(window_generating_function(&z, h, s)?.0), j, CAUCHY_RADIUS)?;
        let ez = z_error_on_circle(&z, h, CAUCHY_RADIUS)?;
        let ih = h.integral();
        let primes = primes_up_to(theta_limit);
        let limit = theta_limit as f64;
        let (mut c, mut ce, mut bc, mut bce, mut s, mut se, mut r, mut re) =
            (vec![], vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
        for jj in 1..=j {
            let cj = c_j_from_primes(jj, &primes, limit);
            c.push(cj.value);
            ce.push(cj.error);
            let (v, e) = big_c_from_derivatives(&d, jj - 1);
            let fact: f64 = (1..=jj).map(|i| i as f64).product();
            let e = e + ez * fact / CAUCHY_RADIUS.powi(jj as i32) / jj as f64;
            bc.push(v);
            bce.push(e);
            s.push(s_from_big_c(v, jj, ih));
            se.push(s_from_big_c(e, jj, ih).abs());
            let rj = r_j_from_primes(h, jj, &primes, limit);
            r.push(rj.value);
            re.push(rj.error);
        }
        Ok(ExpansionCoefficients {
            j,
            h_tag: h_tag(h),
            c,
            big_c: bc,
            s,
            r,
            error_bars: CoefficientErrors { c: ce, big_c: bce, s: se, r: re },
            z_truncation,
            theta_limit,
            cauchy_nodes: d.nodes,
        })
    }
}

/// I_{a,b} = (π/H^±(K))∫_a^b K^u φ̂(u) Σ_c μ²(c)/(cφ(c)) h(4πK^{u−1}/c) du.
pub fn transition_integral(a: f64, b: f64, big_k: f64, sign: Sign, h: &WeightFunction, phi: &TestFunction) -> Result<f64> {
    if !(0.0 <= a && a < b) || big_k < 2.0 {
        return Err(Error::Domain(format!("need 0 ≤ a < b and K ≥ 2, got a={a} b={b} K={big_k}")));
    }
    let sums = h_poisson_sums(big_k, h, 0)?;
    let h_pm = match sign {
        Sign::Plus => sums.h_plus,
        Sign::Minus => sums.h_minus,
        Sign::Mixed => return Err(Error::Domain("the transition integral is defined for a fixed sign".into())),
    };
    let hi = b.min(phi.sigma);
    if hi <= a {
        return Ok(0.0);
    }
    let lk = big_k.ln();
    let (ha, hb) = (h.a(), h.b());
    // the c-sum is empty until 4πK^{u−1}/ha ≥ 1
    let lo = a.max(1.0 - (4.0 * PI / ha).ln() / lk);
    if hi <= lo {
        return Ok(0.0);
    }
    let cmax = (4.0 * PI * big_k.powf(hi - 1.0) / ha).floor() as usize;
    let g = squarefree_inv_totient(cmax, &primes_up_to(cmax as u64));
    let inner = |u: f64| -> f64 {
        let y = 4.0 * PI * big_k.powf(u - 1.0);
        let c_lo = ((y / hb).ceil() as usize).max(1);
        let c_hi = ((y / ha).floor() as usize).min(cmax);
        let mut acc = KahanSum::new();
        for c in c_lo..=c_hi {
            if g[c] != 0.0 {
                acc.add(g[c] / c as f64 * h.eval(y / c as f64));
            }
        }
        acc.value()
    };
    let width = 0.01f64.min((hi - lo) / 50.0);
    let panels = ((hi - lo) / width).ceil() as usize;
    let v = integrate(|u| big_k.powf(u) * phi.phihat(u) * inner(u), lo, hi, panels, 8);
    Ok(PI / h_pm * v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSum {
    pub lhs: f64,
    pub model: f64,
    pub residual: f64,
}

/// Σ_c (μ²(c)/φ(c))∫_{K^{−δ}}^{K^δ}(log v)^j/c · h(4πv/c) dv against ℳh(1)(δ log K)^{j+1}/(4π(j+1)) + C_{j,h}.
pub fn mellin_window_sum(h: &WeightFunction, big_k: f64, delta: f64, j: usize, big_c: f64) -> Result<WindowSum> {
    if !(delta > 0.0 && delta <= 0.5) || big_k < 2.0 {
        return Err(Error::Domain(format!("need 0 < δ ≤ 1/2 and K ≥ 2, got δ={delta} K={big_k}")));
    }
    let (ha, hb) = (h.a(), h.b());
    let (v_lo, v_hi) = (big_k.powf(-delta), big_k.powf(delta));
    let cmax = (4.0 * PI * v_hi / ha).floor() as usize;
    let g = squarefree_inv_totient(cmax.max(1), &primes_up_to(cmax.max(2) as u64));
    let mut acc = KahanSum::new();
    for c in 1..=cmax {
        if g[c] == 0.0 {
            continue;
        }
        let cf = c as f64;
        // t = 4πv/c
        let t_lo = ha.max(4.0 * PI * v_lo / cf);
        let t_hi = hb.min(4.0 * PI * v_hi / cf);
        if t_hi <= t_lo {
            continue;
        }
        let v = integrate_pieces(
            |t| (cf * t / (4.0 * PI)).ln().powi(j as i32) * h.eval(t),
            &[t_lo, t_hi],
            16,
            24,
        );
        acc.add(g[c] * v / (4.0 * PI));
    }
    let lhs = acc.value();
    let model = h.integral() * (delta * big_k.ln()).powi(j as i32 + 1) / (4.0 * PI * (j + 1) as f64) + big_c;
    Ok(WindowSum { lhs, model, residual: lhs - model })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailMoment {
    pub value: Complex64,
    /// j!e^{−Re(s)x}x^j/|s|
    pub bound: f64,
    pub ratio: f64,
}

/// ∫_x^∞ u^j e^{−us} du = (e^{−xs}x^j/s)Σ_{ℓ≤j} j!x^{−ℓ}/((j−ℓ)!s^ℓ).
pub fn incomplete_log_moment_tail(x: f64, j: usize, s: Complex64) -> Result<TailMoment> {
    if !(x >= 0.0 && s.re > 0.0 && x * s.norm() >= 2.0) {
        return Err(Error::Domain(format!("need x ≥ 0, Re s > 0, x|s| ≥ 2; got x={x} s={s}")));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coef = 1.0; // j!/(j−ℓ)!
    let mut pw = Complex64::new(1.0, 0.0); // (xs)^{−ℓ}
    for l in 0..=j {
        if l > 0 {
            coef *= (j - l + 1) as f64;
            pw /= x * s;
        }
        sum += pw * coef;
    }
    let value = (-x * s).exp() * x.powi(j as i32) / s * sum;
    let fact: f64 = (1..=j).map(|i| i as f64).product();
    let bound = fact * (-s.re * x).exp() * x.powi(j as i32) / s.norm();
    let ratio = value.norm() / bound;
    if ratio > TAIL_MOMENT_C {
        return Err(Error::Precision(format!("tail moment ratio {ratio} above {TAIL_MOMENT_C}")));
    }
    Ok(TailMoment { value, bound, ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionValue {
    pub big_k: f64,
    pub sign: Sign,
    #[serde(rename = "J")]
    pub j: usize,
    /// φ̂(0)(1 + (∫h·log/∫h − log 4π)/log K) + φ(0)/2 ∓ ∫_1^∞φ̂ + c- and D-corrections
    pub value: f64,
    /// ∫φ̂Ŵ + Σ (R_jφ̂^{(j−1)}(0) ± S_jφ̂^{(j−1)}(1))/(log K)^j
    pub value_r_form: f64,
    pub main_term: f64,
    pub c_corrections: f64,
    pub transition_main: f64,
    pub transition_corrections: f64,
}

/// Both assemblies of the expansion, using precomputed coefficients for the same h.
pub fn theorem_expansion(
    big_k: f64,
    sign: Sign,
    h: &WeightFunction,
    phi: &TestFunction,
    coeffs: &ExpansionCoefficients,
    j: usize,
) -> Result<ExpansionValue> {
    if phi.sigma >= 2.0 {
        return Err(Error::Domain(format!("support {} must be below 2", phi.sigma)));
    }
    if j == 0 || j > coeffs.j {
        return Err(Error::Domain(format!("J = {j} outside 1..={}", coeffs.j)));
    }
    if coeffs.h_tag != h_tag(h) {
        return Err(Error::Domain(format!("coefficients for {} used with {}", coeffs.h_tag, h_tag(h))));
    }
    let lk = big_k.ln();
    let eps = sign.factor();
    let p0 = phi.phihat(0.0);
    let main = p0 * (1.0 + (h.log_integral() / h.integral() - (4.0 * PI).ln()) / lk) + 0.5 * phi.phi(0.0);
    let (mut cc, mut tc, mut rs) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for jj in 1..=j {
        let d0 = phi.phihat_deriv(jj - 1, 0.0)?;
        let d1 = phi.phihat_deriv(jj - 1, 1.0)?;
        let lkj = lk.powi(jj as i32);
        cc.add(coeffs.c[jj - 1] * d0 / (2f64.powi(jj as i32) * lkj));
        tc.add(coeffs.s[jj - 1] * d1 / lkj);
        rs.add((coeffs.r[jj - 1] * d0 + eps * coeffs.s[jj - 1] * d1) / lkj);
    }
    let tail = phi.phihat_integral(1.0, f64::INFINITY);
    let transition_main = -eps * tail;
    let transition_corrections = eps * tc.value();
    let value = main + cc.value() + transition_main + transition_corrections;
    let value_r_form = ks_prediction(phi, KSKernel { sign }) + rs.value();
    Ok(ExpansionValue {
        big_k,
        sign,
        j,
        value,
        value_r_form,
        main_term: main,
        c_corrections: cc.value(),
        transition_main,
        transition_corrections,
    })
}

/// δ_K = 3(J+3) log log K/log K, floored at 20/log K.
pub fn delta_k(big_k: f64, j: usize) -> f64 {
    let lk = big_k.ln();
    (3.0 * (j + 3) as f64 * lk.ln() / lk).max(20.0 / lk)
}
