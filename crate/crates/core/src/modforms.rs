//! Level-1 cusp forms: Victor Miller basis, Hecke matrices, eigenforms with
//! multiprecision normalized eigenvalues, Petersson norms and harmonic weights.

use std::f64::consts::PI;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::primes_up_to;
use crate::error::{Error, Result};
use crate::hp::{bits_for_digits, KahanSum, Real};
use crate::quad::gauss_legendre;
use crate::special::{gamma_q_int, ln_gamma};

mod decimal_ints {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| s.parse::<BigInt>().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// dim S_k(SL₂(ℤ)).
pub fn cusp_dim(k: u32) -> usize {
    if k < 12 || k % 2 == 1 {
        return 0;
    }
    let d = (k / 12) as usize;
    if k % 12 == 2 {
        d - 1
    } else {
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QExpansion {
    pub weight: u32,
    #[serde(with = "decimal_ints")]
    pub coefficients: Vec<BigInt>,
    pub truncation: usize,
}

impl QExpansion {
    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coefficients[n]
    }
}

fn mul_trunc(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let za = a.iter().position(|x| x != &BigInt::from(0)).unwrap_or(a.len());
    let zb = b.iter().position(|x| x != &BigInt::from(0)).unwrap_or(b.len());
    (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut s = BigInt::from(0);
            if i >= za + zb {
                for j in za..=(i - zb) {
                    if j < a.len() && i - j < b.len() {
                        s += &a[j] * &b[i - j];
                    }
                }
            }
            s
        })
        .collect()
}

fn sigma_series(n: usize, power: u32, scale: i64) -> Vec<BigInt> {
    let mut s = vec![0u128; n + 1];
    for d in 1..=n {
        let dp = (d as u128).pow(power);
        let mut m = d;
        while m <= n {
            s[m] += dp;
            m += d;
        }
    }
    let mut out: Vec<BigInt> = s.into_iter().map(|v| BigInt::from(v) * scale).collect();
    out[0] = BigInt::from(1);
    out
}

/// E₄ = 1 + 240 Σ σ₃(n) qⁿ to q^n.
pub fn eisenstein_e4(n: usize) -> Vec<BigInt> {
    sigma_series(n, 3, 240)
}

/// E₆ = 1 − 504 Σ σ₅(n) qⁿ to q^n.
pub fn eisenstein_e6(n: usize) -> Vec<BigInt> {
    sigma_series(n, 5, -504)
}

/// Δ = (E₄³ − E₆²)/1728 to q^n.
pub fn delta_series(n: usize) -> Vec<BigInt> {
    let e4 = eisenstein_e4(n);
    let e6 = eisenstein_e6(n);
    let a = mul_trunc(&mul_trunc(&e4, &e4, n), &e4, n);
    let b = mul_trunc(&e6, &e6, n);
    a.into_iter().zip(b).map(|(x, y)| (x - y) / 1728).collect()
}

fn power_table(base: &[BigInt], max: usize, n: usize) -> Vec<Vec<BigInt>> {
    let mut one = vec![BigInt::from(0); n + 1];
    one[0] = BigInt::from(1);
    let mut out = vec![one];
    for i in 1..=max {
        let next = mul_trunc(&out[i - 1], base, n);
        out.push(next);
    }
    out
}

/// Echelonized integral basis g_i = q^i + O(q^{d+1}), i = 1..d, to q^n.
pub fn victor_miller_basis(k: u32, n: usize) -> Result<Vec<QExpansion>> {
    let d = cusp_dim(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    if n < d + 1 {
        return Err(Error::Truncation(format!("need N ≥ {} for weight {k}", d + 1)));
    }
    let e4 = eisenstein_e4(n);
    let e6 = eisenstein_e6(n);
    let delta = delta_series(n);
    let deltas = power_table(&delta, d, n);
    let max_a = ((k as usize).saturating_sub(12)) / 4;
    let e4s = power_table(&e4, max_a, n);
    let mut gs: Vec<Vec<BigInt>> = Vec::with_capacity(d);
    for j in 1..=d {
        let rest = k as usize - 12 * j;
        let b = if rest % 4 == 0 { 0 } else { 1 };
        let a = (rest - 6 * b) / 4;
        let mut g = mul_trunc(&deltas[j], &e4s[a], n);
        if b == 1 {
            g = mul_trunc(&g, &e6, n);
        }
        gs.push(g);
    }
    // clear coefficients q^l, l ≠ i, l ≤ d
    for i in (0..d).rev() {
        for l in (i + 1)..d {
            let c = gs[i][l + 1].clone();
            if c != BigInt::from(0) {
                let gl = gs[l].clone();
                for (x, y) in gs[i].iter_mut().zip(gl.iter()) {
                    *x -= &c * y;
                }
            }
        }
    }
    Ok(gs
        .into_iter()
        .map(|coefficients| QExpansion { weight: k, coefficients, truncation: n })
        .collect())
}

/// Matrix of T_p on the Victor Miller basis: M[i][j] = (T_p g_j)(i+1).
pub fn hecke_matrix(k: u32, p: u64, basis: &[QExpansion]) -> Result<Vec<Vec<BigInt>>> {
    let d = basis.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let n = basis[0].truncation;
    let p = p as usize;
    if n < p * d {
        return Err(Error::Truncation(format!("T_{p} on weight {k} needs N ≥ {}", p * d)));
    }
    let pk = BigInt::from(p).pow(k - 1);
    let mut m = vec![vec![BigInt::from(0); d]; d];
    for (j, g) in basis.iter().enumerate() {
        for (i, row) in m.iter_mut().enumerate() {
            let r = i + 1;
            let mut v = g.coefficients[p * r].clone();
            if r % p == 0 {
                v += &pk * &g.coefficients[r / p];
            }
            row[j] = v;
        }
    }
    Ok(m)
}

/// Hecke matrix built from a fresh basis with enough terms.
pub fn hecke_matrix_for(k: u32, p: u64) -> Result<Vec<Vec<BigInt>>> {
    let d = cusp_dim(k);
    let basis = victor_miller_basis(k, (p as usize) * (d + 1))?;
    hecke_matrix(k, p, &basis)
}

/// Characteristic polynomial det(xI − M), coefficients c_0..c_d (c_d = 1), by Faddeev–LeVerrier.
pub fn char_poly(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let d = m.len();
    let zero = BigInt::from(0);
    let mut c = vec![zero.clone(); d + 1];
    c[d] = BigInt::from(1);
    let mut mk = vec![vec![zero.clone(); d]; d];
    for k in 1..=d {
        // mk = M·mk + c_{d-k+1} I
        let mut next = vec![vec![zero.clone(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut s = zero.clone();
                for l in 0..d {
                    s += &m[i][l] * &mk[l][j];
                }
                if i == j {
                    s += &c[d - k + 1];
                }
                next[i][j] = s;
            }
        }
        mk = next;
        let mut tr = zero.clone();
        for i in 0..d {
            for l in 0..d {
                tr += &m[i][l] * &mk[l][i];
            }
        }
        c[d - k] = -tr / BigInt::from(k);
    }
    c
}

fn poly_eval(c: &[Real], x: &Real, p: usize) -> Real {
    let mut acc = Real::zero(p);
    for ci in c.iter().rev() {
        acc = acc.mul(x, p).add(ci, p);
    }
    acc
}

fn sign_of(x: &Real) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_negative() {
        -1
    } else {
        1
    }
}

/// Real roots of a polynomial with only simple real roots, ascending.
fn real_roots(c: &[Real], bound: &Real, p: usize) -> Result<Vec<Real>> {
    let deg = c.len() - 1;
    if deg == 1 {
        return Ok(vec![c[0].neg().div(&c[1], p)]);
    }
    let deriv: Vec<Real> = (1..=deg).map(|i| c[i].mul_i64(i as i64, p)).collect();
    let crit = real_roots(&deriv, bound, p)?;
    let mut pts = vec![bound.neg()];
    pts.extend(crit);
    pts.push(bound.clone());
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (mut lo, mut hi) = (w[0].clone(), w[1].clone());
        let (slo, shi) = (sign_of(&poly_eval(c, &lo, p)), sign_of(&poly_eval(c, &hi, p)));
        if slo == 0 {
            continue;
        }
        if shi == 0 {
            roots.push(hi);
            continue;
        }
        if slo == shi {
            continue;
        }
        for _ in 0..(p + 64) {
            let mid = lo.add(&hi, p).div_i64(2, p);
            let s = sign_of(&poly_eval(c, &mid, p));
            if s == 0 {
                lo = mid.clone();
                hi = mid;
                break;
            }
            if s == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(lo.add(&hi, p).div_i64(2, p));
    }
    if roots.len() != deg {
        return Err(Error::IllConditioned(format!(
            "found {} of {deg} roots; eigenvalues cluster beyond working precision",
            roots.len()
        )));
    }
    Ok(roots)
}

/// Solves A v = b by Gaussian elimination with partial pivoting.
fn solve_mp(mut a: Vec<Vec<Real>>, mut b: Vec<Real>, p: usize) -> Result<Vec<Real>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col].is_zero() {
            return Err(Error::IllConditioned("singular eigenvector system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col].div(&a[col][col], p);
            for c in col..n {
                let t = f.mul(&a[col][c], p);
                a[r][c] = a[r][c].sub(&t, p);
            }
            let t = f.mul(&b[col], p);
            b[r] = b[r].sub(&t, p);
        }
    }
    let mut x = vec![Real::zero(p); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in (r + 1)..n {
            s = s.sub(&a[r][c].mul(&x[c], p), p);
        }
        x[r] = s.div(&a[r][r], p);
    }
    Ok(x)
}

mod decimal_reals {
    use crate::hp::Real;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Real], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_sci_string(60)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Real>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        Ok(v.iter().map(|s| Real::parse(s, 256)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// (f,f)
    pub value: f64,
    /// (4π)^{k−1}(f,f)/Γ(k−1)
    pub normalized: f64,
    /// bound on |error| of `normalized`
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeckeEigenform {
    pub weight: u32,
    pub truncation: usize,
    /// λ_f(n) for n = 0..=truncation; index 0 holds 0.
    #[serde(with = "decimal_reals")]
    pub lambda: Vec<Real>,
    pub petersson_norm: Option<NormEstimate>,
    pub omega: Option<f64>,
    #[serde(skip)]
    lambda_f: Vec<f64>,
}

impl HeckeEigenform {
    fn new(weight: u32, lambda: Vec<Real>) -> Self {
        let truncation = lambda.len() - 1;
        let mut f = HeckeEigenform { weight, truncation, lambda, petersson_norm: None, omega: None, lambda_f: Vec::new() };
        f.rebuild();
        f
    }

    /// Restores the double-precision view after deserialization.
    pub fn rebuild(&mut self) {
        self.lambda_f = self.lambda.iter().map(Real::to_f64).collect();
    }

    pub fn lambda_f64(&self, n: usize) -> f64 {
        self.lambda_f[n]
    }

    pub fn lambdas_f64(&self) -> &[f64] {
        &self.lambda_f
    }

    pub fn omega(&self) -> Result<f64> {
        self.omega.ok_or_else(|| Error::Domain("harmonic weight not attached".into()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenBasis {
    pub weight: u32,
    pub truncation: usize,
    pub digits: u32,
    pub forms: Vec<HeckeEigenform>,
}

impl EigenBasis {
    pub fn rebuild(mut self) -> Self {
        for f in &mut self.forms {
            f.rebuild();
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    /// Ω_k = Σ_f ω_f.
    pub fn omega_total(&self) -> Result<f64> {
        let mut s = KahanSum::new();
        for f in &self.forms {
            s.add(f.omega()?);
        }
        Ok(s.value())
    }

    /// Computes (f,f) and ω_f = 1/normalized norm for every form.
    pub fn attach_petersson_norms(&mut self) -> Result<()> {
        let norms: Vec<Result<NormEstimate>> = self.forms.par_iter().map(petersson_norm_quadrature).collect();
        for (f, n) in self.forms.iter_mut().zip(norms) {
            let n = n?;
            f.omega = Some(1.0 / n.normalized);
            f.petersson_norm = Some(n);
        }
        Ok(())
    }
}

/// Hecke eigenbasis of S_k with λ_f(n) for n ≤ N, sorted by λ_f(2) (then λ_f(3)).
pub fn eigen_basis(k: u32, n: usize, digits: u32) -> Result<EigenBasis> {
    let d = cusp_dim(k);
    if d == 0 {
        return Ok(EigenBasis { weight: k, truncation: n, digits, forms: Vec::new() });
    }
    let n = n.max(3 * (d + 1));
    let basis = victor_miller_basis(k, n)?;
    match eigen_from_operator(k, n, digits, &basis, &hecke_matrix(k, 2, &basis)?) {
        Err(Error::IllConditioned(_)) => {
            // T₂ + 2T₃ separates what T₂ alone cannot
            let t2 = hecke_matrix(k, 2, &basis)?;
            let t3 = hecke_matrix(k, 3, &basis)?;
            let m: Vec<Vec<BigInt>> = t2
                .iter()
                .zip(t3.iter())
                .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x + y * 2).collect())
                .collect();
            eigen_from_operator(k, n, digits, &basis, &m)
        }
        r => r,
    }
}

fn eigen_from_operator(k: u32, n: usize, digits: u32, basis: &[QExpansion], m: &[Vec<BigInt>]) -> Result<EigenBasis> {
    let d = basis.len();
    let target = bits_for_digits(digits);
    // c_f(n) = Σ v_j g_j(n) cancels down from max|g_j(n)| to ~n^{(k-1)/2}
    let mut worst = 0.0f64;
    for g in basis {
        for (i, c) in g.coefficients.iter().enumerate().skip(1) {
            let bits = c.bits() as f64 - 0.5 * (k - 1) as f64 * (i as f64).log2();
            worst = worst.max(bits);
        }
    }
    let mbits = m.iter().flatten().map(|x| x.bits()).max().unwrap_or(1) as usize;
    let p = target + worst.max(0.0).ceil() as usize + mbits + 64;

    let cp: Vec<Real> = char_poly(m).iter().map(|c| Real::from_bigint(c, p)).collect();
    let mut bound = Real::from_i64(1, p);
    for c in &cp[..d] {
        let a = c.abs().add(&Real::from_i64(1, p), p);
        if a.cmp(&bound) == std::cmp::Ordering::Greater {
            bound = a;
        }
    }
    let roots = real_roots(&cp, &bound, p)?;

    let mr: Vec<Vec<Real>> = m.iter().map(|row| row.iter().map(|x| Real::from_bigint(x, p)).collect()).collect();
    let gr: Vec<Vec<Real>> = basis
        .iter()
        .map(|g| g.coefficients.iter().map(|x| Real::from_bigint(x, p)).collect())
        .collect();
    let scale: Vec<Real> = (0..=n)
        .map(|i| if i == 0 { Real::zero(p) } else { Real::from_i64(i as i64, p).sqrt(p).powi((k - 1) as usize, p) })
        .collect();

    let mut forms: Vec<HeckeEigenform> = roots
        .par_iter()
        .map(|lam| -> Result<HeckeEigenform> {
            let mut v = vec![Real::from_i64(1, p)];
            if d > 1 {
                let a: Vec<Vec<Real>> = (1..d)
                    .map(|i| (1..d).map(|j| if i == j { mr[i][j].sub(lam, p) } else { mr[i][j].clone() }).collect())
                    .collect();
                let b: Vec<Real> = (1..d).map(|i| mr[i][0].neg()).collect();
                v.extend(solve_mp(a, b, p)?);
            }
            let lambda: Vec<Real> = (0..=n)
                .map(|i| {
                    if i == 0 {
                        return Real::zero(target);
                    }
                    let mut c = Real::zero(p);
                    for (vj, g) in v.iter().zip(gr.iter()) {
                        c = c.add(&vj.mul(&g[i], p), p);
                    }
                    let l = c.div(&scale[i], p);
                    l.add(&Real::zero(target), target)
                })
                .collect();
            Ok(HeckeEigenform::new(k, lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    forms.sort_by(|a, b| {
        a.lambda[2]
            .cmp(&b.lambda[2])
            .then_with(|| a.lambda[3].cmp(&b.lambda[3]))
    });
    for w in forms.windows(2) {
        if (w[0].lambda_f64(2) - w[1].lambda_f64(2)).abs() < 1e-12 {
            return Err(Error::IllConditioned("coincident λ(2)".into()));
        }
    }
    Ok(EigenBasis { weight: k, truncation: n, digits, forms })
}

/// Number of coefficients the norm quadrature uses.
pub fn norm_terms(k: u32) -> usize {
    40usize.max(k as usize)
}

/// Fundamental-domain quadrature of (f,f) from λ_f.
///
/// The strip y ≥ 1 is done termwise in closed form; the remaining region
/// |x| ≤ 1/2, √(1−x²) ≤ y ≤ 1 by tensor Gauss–Legendre.
pub fn petersson_norm_quadrature(f: &HeckeEigenform) -> Result<NormEstimate> {
    let k = f.weight;
    let nt = norm_terms(k);
    if f.truncation < nt {
        return Err(Error::Truncation(format!("norm quadrature needs {nt} coefficients, have {}", f.truncation)));
    }
    let km1 = (k - 1) as f64;
    let lam = &f.lambda_f[..=nt];

    let mut top = KahanSum::new();
    for (n, l) in lam.iter().enumerate().skip(1) {
        top.add(l * l * gamma_q_int(k - 1, 4.0 * PI * n as f64));
    }

    let low_fine = low_region(lam, km1, 48, 12);
    let low_coarse = low_region(lam, km1, 32, 8);

    // tail: |λ(n)| ≤ d(n) ≤ 2√n; y^{(k−1)/2}e^{−2πny} decreasing on [√3/2,1] once n ≥ (k−1)/(2π√3)
    let y0 = 3f64.sqrt() / 2.0;
    let lg = ln_gamma(km1);
    let mut tail = 0.0;
    let mut top_tail = 0.0;
    for n in (nt + 1)..(nt + 2000) {
        let nf = n as f64;
        let ymax = if nf >= km1 / (4.0 * PI * y0) { y0 } else { km1 / (4.0 * PI * nf) };
        let t = 2.0 * nf.sqrt() * (0.5 * km1 * (4.0 * PI * nf * ymax).ln() - 2.0 * PI * nf * ymax - 0.5 * lg).exp();
        tail += t;
        top_tail += 4.0 * nf * gamma_q_int(k - 1, 4.0 * PI * nf);
        if t < 1e-40 {
            break;
        }
    }
    let gmax = low_sup(lam, km1);
    let area = 1.0 / y0;
    let low_tail = area * (2.0 * gmax * tail + tail * tail);

    let normalized = top.value() + low_fine;
    let error = (low_fine - low_coarse).abs() + low_tail + top_tail + 1e-15 * normalized;
    let value = normalized * (lg - km1 * (4.0 * PI).ln()).exp();
    Ok(NormEstimate { value, normalized, error })
}

fn term_factors(lam: &[f64], km1: f64, y: f64) -> Vec<f64> {
    let lg = ln_gamma(km1);
    lam.iter()
        .enumerate()
        .map(|(n, l)| {
            if n == 0 {
                0.0
            } else {
                let nf = n as f64;
                l * (0.5 * km1 * (4.0 * PI * nf * y).ln() - 2.0 * PI * nf * y - 0.5 * lg).exp()
            }
        })
        .collect()
}

fn low_sup(lam: &[f64], km1: f64) -> f64 {
    let y0 = 3f64.sqrt() / 2.0;
    (0..=20)
        .map(|i| {
            let y = y0 + (1.0 - y0) * i as f64 / 20.0;
            term_factors(lam, km1, y).iter().map(|t| t.abs()).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn low_region(lam: &[f64], km1: f64, xpanels: usize, ypanels: usize) -> f64 {
    let rule = gauss_legendre(24);
    let (xs, ws) = (&rule.0, &rule.1);
    let hx = 0.5 / xpanels as f64;
    let mut total = KahanSum::new();
    for px in 0..xpanels {
        let xmid = hx * (px as f64 + 0.5);
        for (xi, wi) in xs.iter().zip(ws.iter()) {
            let x = xmid + 0.5 * hx * xi;
            let ylo = (1.0 - x * x).sqrt();
            let hy = (1.0 - ylo) / ypanels as f64;
            let mut inner = KahanSum::new();
            for py in 0..ypanels {
                let ymid = ylo + hy * (py as f64 + 0.5);
                for (yi, vi) in xs.iter().zip(ws.iter()) {
                    let y = ymid + 0.5 * hy * yi;
                    let t = term_factors(lam, km1, y);
                    let (mut re, mut im) = (0.0, 0.0);
                    for (n, tn) in t.iter().enumerate().skip(1) {
                        let a = 2.0 * PI * n as f64 * x;
                        re += tn * a.cos();
                        im += tn * a.sin();
                    }
                    inner.add(0.5 * hy * vi * (re * re + im * im) / y);
                }
            }
            total.add(0.5 * hx * wi * inner.value());
        }
    }
    // symmetric in x
    2.0 * total.value()
}

/// ω_f by solving Σ_f ω_f λ_f(n_j) = Δ_k(1, n_j) with n_j ∈ {1, first d−1 primes}.
pub fn harmonic_weights_via_petersson(basis: &EigenBasis) -> Result<Vec<f64>> {
    let d = basis.dim();
    if d == 0 {
        return Ok(Vec::new());
    }
    let k = basis.weight;
    let mut ns = vec![1u64];
    ns.extend(primes_up_to(100).into_iter().take(d - 1));
    let rhs: Vec<f64> = ns
        .iter()
        .map(|&n| crate::petersson::petersson_rhs(1, n, k, 1e-20).map(|r| r.value()))
        .collect::<Result<_>>()?;
    let a: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| basis.forms.iter().map(|f| f.lambda_f64(n as usize)).collect())
        .collect();
    let cond = condition_estimate(&a);
    if cond > 1e8 {
        return Err(Error::IllConditioned(format!("λ matrix condition ≈ {cond:.3e}")));
    }
    Ok(solve_f64(a, rhs))
}

fn solve_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

/// ‖A‖_∞ ‖A⁻¹‖_∞ with the inverse formed column by column.
fn condition_estimate(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let norm = |m: &[Vec<f64>]| m.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut inv = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = solve_f64(a.to_vec(), e);
        for r in 0..n {
            inv[r][c] = col[r];
        }
    }
    norm(a) * norm(&inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_product(n: usize) -> Vec<i128> {
        // q ∏ (1 − q^m)^24
        let mut p = vec![0i128; n + 1];
        p[0] = 1;
        for m in 1..=n {
            for _ in 0..24 {
                for i in (m..=n).rev() {
                    p[i] -= p[i - m];
                }
            }
        }
        let mut out = vec![0i128; n + 1];
        out[1..=n].copy_from_slice(&p[..n]);
        out
    }

    #[test]
    fn dimensions() {
        for k in (4..=200).step_by(2) {
            let expect = if k == 2 || k < 12 {
                0
            } else {
                (k / 12) as i64 - if k % 12 == 2 { 1 } else { 0 }
            };
            assert_eq!(cusp_dim(k) as i64, expect.max(0), "k={k}");
        }
        assert_eq!(cusp_dim(14), 0);
        assert_eq!(cusp_dim(24), 2);
    }

    #[test]
    fn delta_against_product() {
        let d = delta_product(30);
        let b = victor_miller_basis(12, 30).unwrap();
        assert_eq!(b.len(), 1);
        for (n, v) in d.iter().enumerate() {
            assert_eq!(b[0].coefficients[n], BigInt::from(*v), "n={n}");
        }
        let head: Vec<i64> = vec![0, 1, -24, 252, -1472];
        for (n, v) in head.iter().enumerate() {
            assert_eq!(b[0].coefficients[n], BigInt::from(*v));
        }
        assert!(victor_miller_basis(10, 20).unwrap().is_empty());
        assert!(victor_miller_basis(14, 20).unwrap().is_empty());
    }

    #[test]
    fn echelon_forms() {
        for k in [24u32, 36, 48, 60] {
            let b = victor_miller_basis(k, 40).unwrap();
            let d = b.len();
            assert_eq!(d, cusp_dim(k));
            for (i, g) in b.iter().enumerate() {
                for l in 0..=d {
                    let expect = if l == i + 1 { 1 } else { 0 };
                    assert_eq!(g.coefficients[l], BigInt::from(expect), "k={k} i={i} l={l}");
                }
            }
        }
    }

    #[test]
    fn hecke_examples() {
        assert_eq!(hecke_matrix_for(12, 2).unwrap(), vec![vec![BigInt::from(-24)]]);
        assert_eq!(hecke_matrix_for(12, 3).unwrap(), vec![vec![BigInt::from(252)]]);
        // weight 24: trace of T₂ equals the sum of the two eigenforms' a(2), which
        // equals a(2) of the trace form Σ_f f = T-stable; compare with the eigenforms' coefficients
        let m = hecke_matrix_for(24, 2).unwrap();
        let eb = eigen_basis(24, 20, 40).unwrap();
        let tr: f64 = eb.forms.iter().map(|f| f.lambda_f64(2) * 2f64.powf(11.5)).sum();
        let mt = (&m[0][0] + &m[1][1]).to_string().parse::<f64>().unwrap();
        assert!((tr - mt).abs() < 1e-6 * mt.abs(), "{tr} {mt}");
        // T₂ and T₃ commute
        let m3 = hecke_matrix_for(24, 3).unwrap();
        let prod = |a: &Vec<Vec<BigInt>>, b: &Vec<Vec<BigInt>>| -> Vec<Vec<BigInt>> {
            (0..2).map(|i| (0..2).map(|j| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j]).collect()).collect()
        };
        assert_eq!(prod(&m, &m3), prod(&m3, &m));
    }

    #[test]
    fn char_poly_small() {
        let m = vec![vec![BigInt::from(2), BigInt::from(1)], vec![BigInt::from(1), BigInt::from(3)]];
        let c = char_poly(&m);
        assert_eq!(c, vec![BigInt::from(5), BigInt::from(-5), BigInt::from(1)]);
    }

    #[test]
    fn eigenvalue_examples() {
        let b = eigen_basis(12, 30, 40).unwrap();
        assert!((b.forms[0].lambda_f64(2) + 24.0 / 2f64.powf(5.5)).abs() < 1e-15);
        assert!((b.forms[0].lambda_f64(2) + 0.5303300859).abs() < 1e-10);
        let b = eigen_basis(16, 30, 40).unwrap();
        assert!((b.forms[0].lambda_f64(2) - 216.0 / 2f64.powf(7.5)).abs() < 1e-15);
        assert!(eigen_basis(10, 30, 40).unwrap().forms.is_empty());
    }

    #[test]
    fn hecke_relations_and_deligne() {
        for k in [24u32, 36, 48, 60] {
            let b = eigen_basis(k, 120, 40).unwrap();
            assert_eq!(b.dim(), cusp_dim(k));
            for f in &b.forms {
                assert!((f.lambda_f64(1) - 1.0).abs() < 1e-30);
                for p in primes_up_to(120) {
                    assert!(f.lambda_f64(p as usize).abs() <= 2.0);
                }
                for m in 1..=10usize {
                    for n in 1..=12usize {
                        if crate::arith::gcd(m as u64, n as u64) == 1 {
                            let l = f.lambda_f64(m) * f.lambda_f64(n);
                            assert!((l - f.lambda_f64(m * n)).abs() < 1e-12, "k={k} {m} {n}");
                        }
                    }
                }
                // λ(p)λ(p^ν) = λ(p^{ν+1}) + λ(p^{ν−1})
                for (p, top) in [(2usize, 6u32), (3, 4)] {
                    for nu in 1..top {
                        let lhs = f.lambda_f64(p) * f.lambda_f64(p.pow(nu));
                        let rhs = f.lambda_f64(p.pow(nu + 1)) + f.lambda_f64(p.pow(nu - 1));
                        assert!((lhs - rhs).abs() < 1e-12);
                    }
                }
            }
            let l2: Vec<f64> = b.forms.iter().map(|f| f.lambda_f64(2)).collect();
            assert!(l2.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn eigenform_is_exact_for_delta() {
        // multiprecision λ_Δ(n) against exact τ(n)/n^{11/2}
        let b = eigen_basis(12, 40, 60).unwrap();
        let tau = delta_product(40);
        let p = bits_for_digits(60);
        for n in [2usize, 7, 23, 40] {
            let exact = Real::from_i64(tau[n] as i64, p).div(&Real::from_i64(n as i64, p).sqrt(p).powi(11, p), p);
            let diff = exact.sub(&b.forms[0].lambda[n], p).abs().to_f64();
            assert!(diff < 1e-55, "n={n} {diff}");
        }
    }

    #[test]
    fn serde_roundtrip() {
        let b = eigen_basis(24, 30, 40).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let back: EigenBasis = serde_json::from_str::<EigenBasis>(&s).unwrap().rebuild();
        for (f, g) in b.forms.iter().zip(back.forms.iter()) {
            for n in 1..=30 {
                assert!((f.lambda_f64(n) - g.lambda_f64(n)).abs() < 1e-15);
            }
        }
        let q = victor_miller_basis(12, 10).unwrap();
        let s = serde_json::to_string(&q[0]).unwrap();
        assert!(s.contains("\"-24\""));
        assert_eq!(serde_json::from_str::<QExpansion>(&s).unwrap(), q[0]);
    }

    #[test]
    fn delta_norm() {
        let mut b = eigen_basis(12, 60, 30).unwrap();
        b.attach_petersson_norms().unwrap();
        let n = b.forms[0].petersson_norm.unwrap();
        assert!((n.value - 1.035362056804320e-6).abs() < 1e-15, "{}", n.value);
        assert!(n.error < 1e-10);
        // bilinearity: 2f has four times the norm
        let mut f2 = b.forms[0].clone();
        f2.lambda_f = f2.lambda_f.iter().map(|x| 2.0 * x).collect();
        let n2 = petersson_norm_quadrature(&f2).unwrap();
        assert!((n2.value / n.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn omega_band() {
        // k^{−1−ε} ≪ ω_f ≪ k^{−1+ε}; the implied constant is pinned at 1/12 since Σω_f ≈ 1 over ≈ k/12 forms
        let eps = 0.5;
        for k in [16u32, 36, 60] {
            let mut b = eigen_basis(k, 80, 30).unwrap();
            b.attach_petersson_norms().unwrap();
            let kf = k as f64;
            for f in &b.forms {
                let w = f.omega.unwrap() * kf / 12.0;
                assert!(w > kf.powf(-eps) && w < kf.powf(eps), "k={k} {w}");
            }
        }
    }

    fn bases() -> &'static Vec<EigenBasis> {
        static B: std::sync::OnceLock<Vec<EigenBasis>> = std::sync::OnceLock::new();
        B.get_or_init(|| [24u32, 32, 38, 46].iter().map(|&k| eigen_basis(k, 200, 40).unwrap()).collect())
    }

    proptest::proptest! {
        #[test]
        fn hecke_multiplicativity(i in 0usize..4, m in 1usize..15, n in 1usize..14) {
            proptest::prop_assume!(crate::arith::gcd(m as u64, n as u64) == 1);
            for f in &bases()[i].forms {
                let l = f.lambda_f64(m) * f.lambda_f64(n);
                proptest::prop_assert!((l - f.lambda_f64(m * n)).abs() < 1e-12);
            }
        }
    }
}
