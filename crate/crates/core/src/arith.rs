//! Primes, Chebyshev θ, Kloosterman sums and squarefree-totient sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hp::KahanSum;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m` via extended Euclid, if it exists.
pub fn mod_inv(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

pub fn divisor_count(mut n: u64) -> u64 {
    let mut d = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        d *= e + 1;
        p += 1;
    }
    if n > 1 {
        d *= 2;
    }
    d
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [n]
}

/// Sieve of Eratosthenes over odd numbers.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let half = (n - 1) / 2; // index i <-> 2i+1, i in 1..=half
    let mut composite = vec![false; half + 1];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p - 1) / 2;
            while j <= half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    out.extend((1..=half).filter(|&i| !composite[i]).map(|i| (2 * i + 1) as u64));
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimeTable {
    pub limit: u64,
    pub primes: Vec<u64>,
    /// (t, θ(t)) on a geometric grid of ratio 1.001 starting at 2.
    pub theta_checkpoints: Vec<(f64, f64)>,
    #[serde(skip)]
    theta_prefix: Vec<f64>,
}

impl PrimeTable {
    pub fn new(limit: u64) -> Self {
        let primes = primes_up_to(limit);
        let mut acc = KahanSum::new();
        let theta_prefix: Vec<f64> = primes
            .iter()
            .map(|&p| {
                acc.add((p as f64).ln());
                acc.value()
            })
            .collect();
        let mut t = PrimeTable { limit, primes, theta_checkpoints: Vec::new(), theta_prefix };
        let mut x = 2.0f64;
        while x <= limit as f64 {
            let th = t.theta_unchecked(x);
            t.theta_checkpoints.push((x, th));
            x *= 1.001;
        }
        t
    }

    fn theta_unchecked(&self, t: f64) -> f64 {
        let idx = self.primes.partition_point(|&p| (p as f64) <= t);
        if idx == 0 {
            0.0
        } else {
            self.theta_prefix[idx - 1]
        }
    }

    /// θ(t) = Σ_{p ≤ t} log p.
    pub fn theta(&self, t: f64) -> Result<f64> {
        if !(1.0..=self.limit as f64).contains(&t) {
            return Err(Error::OutOfRange(format!("theta({t}) outside [1, {}]", self.limit)));
        }
        Ok(self.theta_unchecked(t))
    }

    pub fn primes_up_to(&self, x: u64) -> &[u64] {
        let idx = self.primes.partition_point(|&p| p <= x);
        &self.primes[..idx]
    }
}

/// S(m,n;c) by the direct sum over units, returning the real part.
pub fn kloosterman_sum(m: u64, n: u64, c: u64) -> f64 {
    assert!(m >= 1 && n >= 1 && c >= 1);
    let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
    let (mm, nn) = (m % c, n % c);
    for x in 0..c {
        let Some(xb) = mod_inv(x, c) else { continue };
        if c > 1 && gcd(x, c) != 1 {
            continue;
        }
        let r = ((mm as u128 * x as u128 + nn as u128 * xb as u128) % c as u128) as f64;
        let a = 2.0 * PI * r / c as f64;
        re.add(a.cos());
        im.add(a.sin());
    }
    let (re, im) = (re.value(), im.value());
    assert!(im.abs() <= 1e-9 * (c as f64).max(1.0), "imaginary part {im} for S({m},{n};{c})");
    re
}

/// Row S(r,1;c) for r = 0..c-1, one FFT.
pub fn kloosterman_row(c: u64) -> Vec<f64> {
    let cu = c as usize;
    if c == 1 {
        return vec![1.0];
    }
    let mut buf: Vec<Complex64> = (0..c)
        .map(|x| {
            if gcd(x, c) == 1 {
                let xb = mod_inv(x, c).unwrap();
                Complex64::from_polar(1.0, 2.0 * PI * xb as f64 / c as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(cu).process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Precomputed rows S(·,1;c) for c ≤ cmax.
pub struct KloostermanTable {
    rows: Vec<Vec<f64>>,
}

impl KloostermanTable {
    pub fn new(cmax: u64) -> Self {
        let rows = (1..=cmax.max(1)).into_par_iter().map(kloosterman_row).collect();
        KloostermanTable { rows }
    }

    pub fn cmax(&self) -> u64 {
        self.rows.len() as u64
    }

    /// S(r,1;c) with r reduced mod c.
    pub fn s1(&self, r: u64, c: u64) -> f64 {
        let row = &self.rows[(c - 1) as usize];
        row[(r % c) as usize]
    }

    /// S(m,n;c) = Σ_{d | (m,n,c)} d S(mn/d², 1; c/d).
    pub fn s(&self, m: u64, n: u64, c: u64) -> f64 {
        let g = gcd(gcd(m, n), c);
        if g == 1 {
            let r = ((m % c) as u128 * (n % c) as u128 % c as u128) as u64;
            return self.s1(r, c);
        }
        let mut acc = KahanSum::new();
        for d in 1..=g {
            if g % d != 0 {
                continue;
            }
            let cd = c / d;
            let r = ((m / d % cd) as u128 * (n / d % cd) as u128 % cd as u128) as u64;
            acc.add(d as f64 * self.s1(r, cd));
        }
        acc.value()
    }
}

/// μ²(c)/φ(c) for c ≤ n (index 0 unused).
pub fn squarefree_inv_totient(n: usize, primes: &[u64]) -> Vec<f64> {
    let mut g = vec![1.0f64; n + 1];
    g[0] = 0.0;
    for &p in primes {
        let p = p as usize;
        if p > n {
            break;
        }
        let f = 1.0 / (p - 1) as f64;
        let mut m = p;
        while m <= n {
            g[m] *= f;
            m += p;
        }
        if let Some(p2) = p.checked_mul(p) {
            let mut m = p2;
            while m <= n {
                g[m] = 0.0;
                m += p2;
            }
        }
    }
    g
}

/// S(x) = Σ_{c ≤ x} c μ²(c)/φ(c) at several cut points, one sieve.
pub fn squarefree_totient_partial_sums(xs: &[f64]) -> Vec<f64> {
    let xmax = xs.iter().cloned().fold(1.0, f64::max).floor() as usize;
    let primes = primes_up_to(xmax as u64);
    let g = squarefree_inv_totient(xmax, &primes);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut out = vec![0.0; xs.len()];
    let mut acc = KahanSum::new();
    let mut c = 1usize;
    for i in order {
        let lim = xs[i].floor() as usize;
        while c <= lim {
            acc.add(c as f64 * g[c]);
            c += 1;
        }
        out[i] = acc.value();
    }
    out
}

pub fn squarefree_totient_partial_sum(x: f64) -> f64 {
    assert!(x >= 1.0);
    squarefree_totient_partial_sums(&[x])[0]
}

/// Σ_{p ≤ limit} log p/(p(p-1)) and the tail allowance 2 log(limit)/limit.
pub fn prime_reciprocal_log_sum(limit: u64) -> (f64, f64) {
    assert!(limit >= 2);
    let v = primes_up_to(limit)
        .iter()
        .rev()
        .map(|&p| {
            let p = p as f64;
            p.ln() / (p * (p - 1.0))
        })
        .collect::<KahanSum>()
        .value();
    let l = limit as f64;
    (v, 2.0 * l.ln() / l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute_primes(n: u64) -> Vec<u64> {
        (2..=n).filter(|&k| (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0)).collect()
    }

    #[test]
    fn sieve_matches_trial_division() {
        assert_eq!(primes_up_to(5000), brute_primes(5000));
        assert_eq!(primes_up_to(1), Vec::<u64>::new());
        assert_eq!(primes_up_to(2), vec![2]);
    }

    #[test]
    fn theta_examples() {
        let t = PrimeTable::new(1_000_000);
        assert_eq!(t.theta(1.5).unwrap(), 0.0);
        let exact = 2f64.ln() + 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((t.theta(10.0).unwrap() - exact).abs() < 1e-14);
        let big = t.theta(1e6).unwrap();
        assert!((big - 1e6).abs() < 1e4);
        assert!(t.theta(2e6).is_err());
        assert!(t.theta_checkpoints.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn mod_inverse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = rng.gen_range(2..100_000u64);
            let a = rng.gen_range(1..m);
            match mod_inv(a, m) {
                Some(b) => assert_eq!((a as u128 * b as u128 % m as u128) as u64, 1),
                None => assert!(gcd(a, m) > 1),
            }
        }
    }

    fn brute_kloosterman(m: u64, n: u64, c: u64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for x in 0..c {
            if gcd(x, c) != 1 {
                continue;
            }
            for y in 0..c {
                if (x * y) % c == 1 % c {
                    s += Complex64::from_polar(1.0, 2.0 * PI * ((m * x + n * y) % c) as f64 / c as f64);
                }
            }
        }
        s
    }

    #[test]
    fn kloosterman_examples() {
        assert_eq!(kloosterman_sum(1, 1, 1), 1.0);
        assert!((kloosterman_sum(1, 1, 3) + 1.0).abs() < 1e-14);
        let v = kloosterman_sum(5, 7, 12);
        assert!((v - brute_kloosterman(5, 7, 12).re).abs() < 1e-12);
        let weil = divisor_count(12) as f64 * (gcd(gcd(5, 7), 12) as f64).sqrt() * 12f64.sqrt();
        assert!(v.abs() <= weil);
    }

    #[test]
    fn fft_rows_and_selberg_identity() {
        let table = KloostermanTable::new(60);
        for c in 1..=60u64 {
            for m in 1..=12u64 {
                for n in 1..=12u64 {
                    let d = kloosterman_sum(m, n, c);
                    assert!((table.s(m, n, c) - d).abs() < 1e-9, "S({m},{n};{c})");
                }
            }
        }
    }

    #[test]
    fn twisted_multiplicativity() {
        for c1 in 1..=30u64 {
            for c2 in 1..=30u64 {
                if gcd(c1, c2) != 1 {
                    continue;
                }
                let (m, n) = (3u64, 5u64);
                let i2 = mod_inv(c2, c1).unwrap();
                let i1 = mod_inv(c1, c2).unwrap();
                let a = kloosterman_sum(m * i2 * i2 % c1.max(1) + c1, n, c1);
                let b = kloosterman_sum(m * i1 * i1 % c2.max(1) + c2, n, c2);
                let whole = kloosterman_sum(m, n, c1 * c2);
                assert!((whole - a * b).abs() < 1e-8, "c1={c1} c2={c2}");
            }
        }
    }

    #[test]
    fn squarefree_sums() {
        assert_eq!(squarefree_totient_partial_sum(1.0), 1.0);
        assert!((squarefree_totient_partial_sum(3.0) - 4.5).abs() < 1e-15);
        let s = squarefree_totient_partial_sum(1e6);
        assert!((s - 1e6).abs() <= 3.0 * 1e3);
    }

    #[test]
    fn prime_log_sums() {
        let (v, _) = prime_reciprocal_log_sum(2);
        assert!((v - 2f64.ln() / 2.0).abs() < 1e-16);
        let (v, _) = prime_reciprocal_log_sum(10);
        let e: f64 = [2.0f64, 3.0, 5.0, 7.0].iter().map(|p| p.ln() / (p * (p - 1.0))).sum();
        assert!((v - e).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn weil_bound_and_symmetry(m in 1u64..200, n in 1u64..200, c in 1u64..300) {
            let s = kloosterman_sum(m, n, c);
            let g = gcd(gcd(m, n), c) as f64;
            let bound = divisor_count(c) as f64 * g.sqrt() * (c as f64).sqrt();
            proptest::prop_assert!(s.abs() <= bound + 1e-9);
            proptest::prop_assert!((s - kloosterman_sum(n, m, c)).abs() < 1e-9);
        }

        #[test]
        fn theta_monotone(a in 1.0f64..1e5, b in 1.0f64..1e5) {
            let t = crate::arith::PrimeTable::new(100_000);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            proptest::prop_assert!(t.theta(lo).unwrap() <= t.theta(hi).unwrap());
        }
    }
}
