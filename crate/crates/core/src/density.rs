//! One-level densities: the explicit formula over an eigenbasis, and the
//! weight-averaged densities through Kloosterman sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{primes_up_to, KloostermanTable};
use crate::error::{Error, Result};
use crate::hp::KahanSum;
use crate::modforms::{cusp_dim, EigenBasis};
use crate::quad::integrate;
use crate::special::{digamma, digamma_real};
use crate::testfn::{Sign, TestFunction, WeightFunction};

/// Largest prime the averaged density may sum over.
pub const PRIME_BUDGET: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaIntegral {
    pub value: f64,
    pub surrogate: f64,
    pub error: f64,
}

fn digamma_piece(a: f64, l: f64, phi: &TestFunction, panels: usize) -> f64 {
    let p0 = phi.phihat(0.0);
    let top = phi.sigma * l;
    // beyond ~60/a the kernel e^{−au} is below e^{−60}
    let cut = top.min(60.0 / a);
    let body = integrate(
        |u| {
            let den = -(-u).exp_m1();
            if den == 0.0 {
                return 0.0;
            }
            (-a * u).exp() * (p0 - phi.phihat(u / l)) / den
        },
        0.0,
        cut,
        panels,
        32,
    );
    let mut rest = KahanSum::new();
    if cut < top {
        // remainder up to σL, below e^{−60} relative
        rest.add(integrate(
            |u| (-a * u).exp() * (p0 - phi.phihat(u / l)) / (-(-u).exp_m1()),
            cut,
            top,
            8,
            16,
        ));
    }
    // p0 ∫_{σL}^∞ e^{−au}/(1−e^{−u}) du = p0 Σ_m e^{−(a+m)σL}/(a+m)
    let mut m = 0.0;
    loop {
        let t = p0 * (-(a + m) * top).exp() / (a + m);
        rest.add(t);
        if t.abs() < 1e-20 * (1.0 + p0.abs()) || m > 1e6 {
            break;
        }
        m += 1.0;
    }
    p0 * digamma_real(a) + body + rest.value()
}

/// (1/log X)∫[ψ(1/4+(k+1)/4+2πit/log X) + ψ(1/4+(k−1)/4+2πit/log X)]φ(t)dt, evaluated on the Fourier side.
pub fn gamma_integral(k: u32, x: f64, phi: &TestFunction) -> GammaIntegral {
    let l = x.ln();
    let (ap, am) = (0.25 + (k as f64 + 1.0) / 4.0, 0.25 + (k as f64 - 1.0) / 4.0);
    let fine = (digamma_piece(ap, l, phi, 64) + digamma_piece(am, l, phi, 64)) / l;
    let coarse = (digamma_piece(ap, l, phi, 32) + digamma_piece(am, l, phi, 32)) / l;
    let surrogate = phi.phihat(0.0) * ((k as f64).powi(2).ln() - 16f64.ln()) / l;
    GammaIntegral { value: fine, surrogate, error: (fine - coarse).abs() }
}

/// t-domain quadrature with complex ψ; only sensible when φ decays fast.
pub fn gamma_integral_direct(k: u32, x: f64, phi: &TestFunction, t_max: f64) -> f64 {
    let l = x.ln();
    let (ap, am) = (0.25 + (k as f64 + 1.0) / 4.0, 0.25 + (k as f64 - 1.0) / 4.0);
    let panels = (2.0 * t_max).ceil() as usize;
    let v = integrate(
        |t| {
            let z = Complex64::new(0.0, 2.0 * PI * t / l);
            (digamma(z + ap) + digamma(z + am)).re * phi.phi(t)
        },
        -t_max,
        t_max,
        panels,
        32,
    );
    v / l
}

/// 2Σ_p p^{−1}φ̂(2 log p/log X) log p/log X.
pub fn prime_square_sum(x: f64, phi: &TestFunction, limit: u64) -> Result<f64> {
    let l = x.ln();
    let pmax = (0.5 * phi.sigma * l).exp();
    if pmax > limit as f64 {
        return Err(Error::OutOfRange(format!("prime limit must be at least {}", pmax.ceil())));
    }
    let mut s = KahanSum::new();
    for p in primes_up_to(pmax.floor() as u64) {
        let lp = (p as f64).ln();
        s.add(2.0 / p as f64 * phi.phihat(2.0 * lp / l) * lp / l);
    }
    Ok(s.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Eigenform,
    Kloosterman,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    pub gamma_quadrature: f64,
    pub prime_sums: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub k: u32,
    pub log_x: f64,
    pub gamma_term: f64,
    pub pi_term: f64,
    pub prime_square_term: f64,
    /// −(2/Ω)Σ_f ω_f Σ_p λ_f(p)p^{−1/2}φ̂(log p/log X) log p/log X
    pub prime_term: f64,
    /// remaining ν ≥ 2 contributions: the λ_f(p²) part of ν = 2 and all ν ≥ 3
    pub prime_power_term: f64,
    pub total: f64,
    pub route: Route,
    pub tail_bounds: TailBounds,
}

impl DensityReport {
    /// The terms the unaveraged density keeps at X = k²; everything else is the eigenform prime sum.
    pub fn displayed_terms(&self) -> f64 {
        self.gamma_term + self.prime_square_term + self.pi_term
    }
}

/// α^ν + β^ν = λ(p^ν) − λ(p^{ν−2}).
fn local_power_sum(lam: &[f64], p: usize, nu: u32) -> f64 {
    let hi = lam[p.pow(nu)];
    let lo = match nu {
        1 => 0.0,
        2 => 1.0,
        _ => lam[p.pow(nu - 2)],
    };
    hi - lo
}

/// Full explicit formula for D_k(φ; X) with harmonic weights from `basis`.
pub fn density_eigenform_route(basis: &EigenBasis, x: f64, phi: &TestFunction) -> Result<DensityReport> {
    let k = basis.weight;
    let l = x.ln();
    let reach = (phi.sigma * l).exp();
    if reach >= basis.truncation as f64 + 1.0 {
        return Err(Error::Truncation(format!("need λ_f(n) for n < {}, have {}", reach.ceil(), basis.truncation)));
    }
    let omega = basis.omega_total()?;
    let g = gamma_integral(k, x, phi);
    let pi_term = -2.0 * phi.phihat(0.0) * PI.ln() / l;
    let psq = prime_square_sum(x, phi, u64::MAX)?;

    let primes = primes_up_to(reach.floor() as u64);
    let (mut p1, mut pp) = (KahanSum::new(), KahanSum::new());
    for f in &basis.forms {
        let w = f.omega()? / omega;
        let lam = f.lambdas_f64();
        for &p in &primes {
            let pf = p as f64;
            let lp = pf.ln();
            let mut nu = 1u32;
            while (nu as f64) * lp < phi.sigma * l {
                let a = phi.phihat(nu as f64 * lp / l) * lp / l * pf.powf(-(nu as f64) / 2.0);
                if nu == 1 {
                    p1.add(-2.0 * w * local_power_sum(lam, p as usize, 1) * a);
                } else if nu == 2 {
                    // the "−1" in λ(p²) − 1 is the prime-square term
                    pp.add(-2.0 * w * lam[(p * p) as usize] * a);
                } else {
                    pp.add(-2.0 * w * local_power_sum(lam, p as usize, nu) * a);
                }
                nu += 1;
            }
        }
    }
    let prime_term = p1.value();
    let prime_power_term = pp.value();
    let total = g.value + pi_term + psq + prime_term + prime_power_term;
    Ok(DensityReport {
        k,
        log_x: l,
        gamma_term: g.value,
        pi_term,
        prime_square_term: psq,
        prime_term,
        prime_power_term,
        total,
        route: Route::Eigenform,
        tail_bounds: TailBounds { gamma_quadrature: g.error, prime_sums: 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonSums {
    pub h_plus: f64,
    pub h_minus: f64,
    /// 4Σ_{k≡0 (4)} h((k−1)/K) log k
    pub log_plus: f64,
    /// 4Σ_{k≡2 (4)} h((k−1)/K) log k
    pub log_minus: f64,
    /// K∫h/4
    pub h_model: f64,
    /// K log K∫h + K∫h·log
    pub log_model_two_term: f64,
    /// Σ_{ℓ≤N} (−1)^{ℓ+1}/(ℓK^{ℓ−1}) ∫t^{−ℓ}h
    pub log_corrections: f64,
}

fn weight_range(h: &WeightFunction, big_k: f64) -> (u32, u32) {
    let lo = ((h.a() * big_k + 1.0).floor() as u32).max(2);
    let hi = (h.b() * big_k + 1.0).ceil() as u32;
    (lo, hi)
}

/// Direct sums H^±(K) and the log-weighted sums, over even k with nonzero cusp space.
pub fn h_poisson_sums(big_k: f64, h: &WeightFunction, n_terms: u32) -> Result<PoissonSums> {
    if big_k < 2.0 {
        return Err(Error::Domain(format!("K = {big_k} below 2")));
    }
    let (lo, hi) = weight_range(h, big_k);
    let (mut hp, mut hm, mut lp, mut lm) = (KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new());
    for k in lo..=hi {
        if k % 2 == 1 || cusp_dim(k) == 0 {
            continue;
        }
        let w = h.eval((k - 1) as f64 / big_k);
        if w == 0.0 {
            continue;
        }
        if k % 4 == 0 {
            hp.add(w);
            lp.add(4.0 * w * (k as f64).ln());
        } else {
            hm.add(w);
            lm.add(4.0 * w * (k as f64).ln());
        }
    }
    let ih = h.integral();
    let mut corr = KahanSum::new();
    for ell in 1..=n_terms as i32 {
        let sgn = if ell % 2 == 1 { 1.0 } else { -1.0 };
        corr.add(sgn / (ell as f64 * big_k.powi(ell - 1)) * h.negative_moment(ell));
    }
    Ok(PoissonSums {
        h_plus: hp.value(),
        h_minus: hm.value(),
        log_plus: lp.value(),
        log_minus: lm.value(),
        h_model: big_k * ih / 4.0,
        log_model_two_term: big_k * big_k.ln() * ih + big_k * h.log_integral(),
        log_corrections: corr.value(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonBounds {
    /// bound on |H^± − K∫h/4|
    pub h_sum: f64,
    /// bound on |4Σ h((k−1)/K) log k − two-term model − ℓ=1 correction|
    pub log_sum: f64,
}

/// A priori bounds from |ĝ(ξ)| ≤ ∫|g⁗|/(2π|ξ|)⁴ applied to Σ_{k≡a (4)} g(k/K) = (K/4)Σ_j ĝ(jK/4),
/// plus log(1+x) − x ∈ [−x²/2, 0] for the dropped ℓ ≥ 2 terms.
pub fn poisson_error_bounds(h: &WeightFunction, big_k: f64) -> PoissonBounds {
    let zeta4 = PI.powi(4) / 90.0;
    let factor = big_k / 4.0 * 2.0 * zeta4 * (2.0 / (PI * big_k)).powi(4);
    let (a, b) = (h.a(), h.b());
    let d4 = integrate(|t| h.deriv(4, t).abs(), a, b, 64, 24);
    // g(v) = h(v) log(Kv+1); Leibniz with L^{(i)}(v) = (−1)^{i−1}(i−1)! K^i/(Kv+1)^i
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    let g4 = integrate(
        |v| {
            let mut s = binom[0] * h.deriv(4, v) * (big_k * v + 1.0).ln();
            let mut fact = 1.0;
            for i in 1..=4usize {
                if i > 1 {
                    fact *= (i - 1) as f64;
                }
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                let li = sign * fact * (big_k / (big_k * v + 1.0)).powi(i as i32);
                s += binom[i] * h.deriv(4 - i, v) * li;
            }
            s.abs()
        },
        a,
        b,
        64,
        24,
    );
    PoissonBounds {
        h_sum: factor * d4,
        log_sum: h.negative_moment(2) / (2.0 * big_k) + 4.0 * factor * g4,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedDensity {
    pub big_k: f64,
    pub sign: Sign,
    /// H^±(K) for ±, H = H⁺ + H⁻ for mixed
    pub h_pm: f64,
    pub value: f64,
    pub main_term: f64,
    pub prime_square_term: f64,
    /// signed Kloosterman contribution entering `value`
    pub kloosterman_term: f64,
    /// (H⁺·kl₊ + H⁻·kl₋)/H, which the mixed family drops
    pub mixed_residual: f64,
    /// number of (p, c) pairs with h(4π√p/(cK)) ≠ 0
    pub pairs: u64,
    pub route: Route,
}

/// Σ_p (log p/√p)φ̂(log p/log K²) Σ_c S(p,1;c)/c · h(4π√p/(cK)), with the count of contributing pairs.
pub fn kloosterman_prime_sum(big_k: f64, h: &WeightFunction, phi: &TestFunction) -> Result<(f64, u64)> {
    let l2 = (big_k * big_k).ln();
    let pmax = (phi.sigma * l2).exp();
    if pmax > PRIME_BUDGET as f64 {
        return Err(Error::Budget { what: "primes".into(), needed: pmax.ceil() as u64, limit: PRIME_BUDGET });
    }
    let primes = primes_up_to(pmax.floor() as u64);
    let (a, b) = (h.a(), h.b());
    let cmax = (4.0 * PI * pmax.sqrt() / (a * big_k)).floor().max(1.0) as u64;
    let table = KloostermanTable::new(cmax);
    let chunks: Vec<(f64, u64)> = primes
        .par_chunks(4096)
        .map(|chunk| {
            let mut s = KahanSum::new();
            let mut pairs = 0u64;
            for &p in chunk {
                let pf = p as f64;
                let lp = pf.ln();
                let ph = phi.phihat(lp / l2);
                if ph == 0.0 {
                    continue;
                }
                let x = 4.0 * PI * pf.sqrt() / big_k;
                let c_lo = ((x / b).ceil() as u64).max(1);
                let c_hi = (x / a).floor() as u64;
                let mut inner = KahanSum::new();
                for c in c_lo..=c_hi.min(cmax) {
                    let w = h.eval(x / c as f64);
                    if w != 0.0 {
                        inner.add(table.s1(p, c) / c as f64 * w);
                        pairs += 1;
                    }
                }
                s.add(lp / pf.sqrt() * ph * inner.value());
            }
            (s.value(), pairs)
        })
        .collect();
    let mut s = KahanSum::new();
    let mut pairs = 0;
    for (v, n) in chunks {
        s.add(v);
        pairs += n;
    }
    Ok((s.value(), pairs))
}

/// Averaged density over k ≡ 3±1 mod 4 (or all even k) from the Kloosterman expression.
pub fn averaged_density_kloosterman(big_k: f64, sign: Sign, h: &WeightFunction, phi: &TestFunction) -> Result<AveragedDensity> {
    if phi.sigma >= 2.0 {
        return Err(Error::Domain(format!("support {} must be below 2", phi.sigma)));
    }
    let l2 = (big_k * big_k).ln();
    let main = phi.phihat(0.0) * (1.0 + (h.log_integral() / h.integral() - (4.0 * PI).ln()) / big_k.ln());
    // the prime budget check lives here, so run it before the other sums
    let (raw, pairs) = kloosterman_prime_sum(big_k, h, phi)?;
    let psq = prime_square_sum(big_k * big_k, phi, u64::MAX)?;
    let sums = h_poisson_sums(big_k, h, 0)?;
    let kl_plus = -PI / (l2 * sums.h_plus) * raw;
    let kl_minus = PI / (l2 * sums.h_minus) * raw;
    let h_all = sums.h_plus + sums.h_minus;
    let mixed_residual = (sums.h_plus * kl_plus + sums.h_minus * kl_minus) / h_all;
    let (h_pm, kl) = match sign {
        Sign::Plus => (sums.h_plus, kl_plus),
        Sign::Minus => (sums.h_minus, kl_minus),
        Sign::Mixed => (h_all, 0.0),
    };
    Ok(AveragedDensity {
        big_k,
        sign,
        h_pm,
        value: main + psq + kl,
        main_term: main,
        prime_square_term: psq,
        kloosterman_term: kl,
        mixed_residual,
        pairs,
        route: Route::Kloosterman,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::eigen_basis;

    #[test]
    fn gamma_integral_against_t_domain() {
        for (k, sigma) in [(12u32, 0.8), (30, 1.4), (60, 0.5)] {
            let phi = TestFunction::smoothed_bump(sigma);
            let x = (k * k) as f64;
            let g = gamma_integral(k, x, &phi);
            let d = gamma_integral_direct(k, x, &phi, 80.0 / sigma);
            assert!((g.value - d).abs() < 1e-10, "k={k} {} {d}", g.value);
            assert!(g.error < 1e-12);
        }
        let g = gamma_integral(12, 144.0, &TestFunction::fejer(0.5));
        assert!(g.value.is_finite() && g.error < 1e-10);
        assert_eq!(gamma_integral(20, 400.0, &TestFunction::fejer(1.0).scaled(0.0)).value, 0.0);
    }

    #[test]
    fn gamma_integral_surrogate_rate() {
        // k·|quadrature − surrogate| stays bounded across the grid
        let phi = TestFunction::smoothed_bump(1.0);
        let mut c = Vec::new();
        for k in [12u32, 24, 48, 96, 192, 384] {
            let g = gamma_integral(k, 1e4, &phi);
            c.push(k as f64 * (g.value - g.surrogate).abs());
        }
        let cmax = c.iter().cloned().fold(0.0, f64::max);
        assert!(cmax < 5.0 && c[5] <= 1.2 * c[2], "{c:?}");
    }

    #[test]
    fn prime_square_examples() {
        let phi = TestFunction::fejer(1.0);
        assert_eq!(prime_square_sum(3.0, &phi, 100).unwrap(), 0.0);
        let v = prime_square_sum(1e4, &phi, 1000).unwrap();
        // direct: φ̂(ξ) = 1 − |ξ| on |ξ| < 1
        let l = 1e4f64.ln();
        let mut d = 0.0;
        for p in 2..=100u64 {
            if crate::arith::is_prime(p) {
                let lp = (p as f64).ln();
                let xi = 2.0 * lp / l;
                if xi < 1.0 {
                    d += 2.0 / p as f64 * (1.0 - xi) * lp / l;
                }
            }
        }
        assert!((v - d).abs() < 1e-12);
        assert!(prime_square_sum(1e10, &phi, 1000).is_err());
    }

    #[test]
    fn eigenform_route_identity() {
        let mut b = eigen_basis(24, 700, 30).unwrap();
        b.attach_petersson_norms().unwrap();
        let phi = TestFunction::smoothed_bump(0.8);
        let x = 576.0;
        let r = density_eigenform_route(&b, x, &phi).unwrap();
        let sum = r.gamma_term + r.pi_term + r.prime_square_term + r.prime_term + r.prime_power_term;
        assert!((sum - r.total).abs() < 1e-14);
        // ν-sums through α, β directly: s_ν = λ(p)s_{ν−1} − s_{ν−2}
        let l = x.ln();
        let omega = b.omega_total().unwrap();
        let mut full = 0.0;
        for f in &b.forms {
            let w = f.omega.unwrap() / omega;
            for p in primes_up_to(200) {
                let lp = (p as f64).ln();
                let lam = f.lambda_f64(p as usize);
                let (mut s0, mut s1) = (2.0, lam);
                let mut nu = 1;
                while (nu as f64) * lp < phi.sigma * l {
                    full += -2.0 * w * s1 * (p as f64).powf(-(nu as f64) / 2.0) * phi.phihat(nu as f64 * lp / l) * lp / l;
                    let s2 = lam * s1 - s0;
                    s0 = s1;
                    s1 = s2;
                    nu += 1;
                }
            }
        }
        let ours = r.prime_term + r.prime_power_term + r.prime_square_term;
        assert!((ours - full).abs() < 1e-10, "{ours} {full}");
        let zero = density_eigenform_route(&b, x, &phi.scaled(0.0)).unwrap();
        assert_eq!(zero.total, 0.0);
        assert!(density_eigenform_route(&b, 1e6, &phi).is_err());
    }

    #[test]
    fn poisson_sums() {
        let h = WeightFunction::reference();
        for big_k in [50.0, 100.0, 200.0] {
            let s = h_poisson_sums(big_k, &h, 1).unwrap();
            let b = poisson_error_bounds(&h, big_k);
            assert!((s.h_plus - s.h_model).abs() <= b.h_sum, "K={big_k}");
            assert!((s.h_minus - s.h_model).abs() <= b.h_sum);
            let model = s.log_model_two_term + s.log_corrections;
            assert!((s.log_plus - model).abs() <= b.log_sum, "K={big_k}");
            assert!((s.log_minus - model).abs() <= b.log_sum);
            let s2 = h_poisson_sums(big_k, &h.scaled(2.0), 1).unwrap();
            assert!((s2.h_plus - 2.0 * s.h_plus).abs() < 1e-12 * s.h_plus);
            assert!((s2.log_minus - 2.0 * s.log_minus).abs() < 1e-12 * s.log_minus);
        }
        // the h bound scales exactly as K^{−3}
        let (b1, b2) = (poisson_error_bounds(&h, 50.0), poisson_error_bounds(&h, 100.0));
        assert!((b1.h_sum / b2.h_sum - 8.0).abs() < 1e-9);
    }

    #[test]
    fn averaged_small_support_has_no_pairs() {
        let h = WeightFunction::reference();
        // pairs need p ≥ (aK/4π)², primes need p < K^{2σ}: empty once K^{2−2σ} > 16π²
        let phi = TestFunction::smoothed_bump(0.5);
        let r = averaged_density_kloosterman(200.0, Sign::Plus, &h, &phi).unwrap();
        assert_eq!(r.pairs, 0);
        assert_eq!(r.kloosterman_term, 0.0);
        assert_eq!(r.value, r.main_term + r.prime_square_term);
    }

    #[test]
    fn averaged_transition_range() {
        let h = WeightFunction::reference();
        let phi = TestFunction::smoothed_bump(1.4);
        let p = averaged_density_kloosterman(60.0, Sign::Plus, &h, &phi).unwrap();
        let m = averaged_density_kloosterman(60.0, Sign::Minus, &h, &phi).unwrap();
        let x = averaged_density_kloosterman(60.0, Sign::Mixed, &h, &phi).unwrap();
        assert!(p.pairs > 0 && p.kloosterman_term != 0.0);
        assert!(p.mixed_residual.abs() < 1e-10);
        assert_eq!(x.value, x.main_term + x.prime_square_term);
        assert!((p.kloosterman_term * p.h_pm + m.kloosterman_term * m.h_pm).abs() < 1e-10);
        assert!(averaged_density_kloosterman(60.0, Sign::Plus, &h, &TestFunction::smoothed_bump(2.0)).is_err());
    }
}
