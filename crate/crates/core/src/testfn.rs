//! Test functions φ (through φ̂) and weight functions h.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_c, integrate_pieces};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fejer,
    SmoothedBump,
}

/// Sign of the family: `Plus` is k ≡ 0 mod 4, `Minus` is k ≡ 2 mod 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
    Mixed,
}

impl Sign {
    /// +1, -1 or 0 as multiplier of the sign-dependent terms.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
            Sign::Mixed => 0.0,
        }
    }

    pub fn contains_weight(self, k: u32) -> bool {
        match self {
            Sign::Plus => k % 4 == 0,
            Sign::Minus => k % 4 == 2,
            Sign::Mixed => k % 2 == 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Mixed => "mixed",
        }
    }
}

/// exp(-1/(1-v^2)) on |v| < 1.
fn bump(v: f64) -> f64 {
    let d = 1.0 - v * v;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

/// Polynomials P_j with d^j/dv^j bump(v) = bump(v) P_j(v) / (1-v^2)^{2j}.
fn bump_deriv_polys(jmax: usize) -> Vec<Vec<f64>> {
    let mut ps = vec![vec![1.0]];
    for j in 0..jmax {
        let p = &ps[j];
        let mut next = vec![0.0; p.len() + 4];
        // -2v P
        for (i, c) in p.iter().enumerate() {
            next[i + 1] -= 2.0 * c;
        }
        // (1 - v^2)^2 P' = (1 - 2v^2 + v^4) P'
        for i in 1..p.len() {
            let d = i as f64 * p[i];
            next[i - 1] += d;
            next[i + 1] -= 2.0 * d;
            next[i + 3] += d;
        }
        // 4j v (1 - v^2) P
        for (i, c) in p.iter().enumerate() {
            next[i + 1] += 4.0 * j as f64 * c;
            next[i + 3] -= 4.0 * j as f64 * c;
        }
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        ps.push(next);
    }
    ps
}

fn bump_deriv(j: usize, v: f64, polys: &[Vec<f64>]) -> f64 {
    let d = 1.0 - v * v;
    if d <= 5e-3 {
        return 0.0;
    }
    let p = polys[j].iter().rev().fold(0.0, |acc, c| acc * v + c);
    bump(v) * p / d.powi(2 * j as i32)
}

const MAX_DERIV: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestFunction {
    pub family: Family,
    pub sigma: f64,
    /// Overall multiplier; 0 gives φ = 0.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(skip)]
    polys: Vec<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl TestFunction {
    /// φ̂(ξ) = (1 - |ξ|/σ)₊, φ(x) = σ (sin πσx / πσx)².
    pub fn fejer(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        TestFunction { family: Family::Fejer, sigma, scale: 1.0, polys: Vec::new() }
    }

    /// φ̂ = g ⋆ g with g a bump on [-σ/2, σ/2].
    pub fn smoothed_bump(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        TestFunction { family: Family::SmoothedBump, sigma, scale: 1.0, polys: bump_deriv_polys(MAX_DERIV) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        t.scale *= c;
        t
    }

    /// Restores derived data after deserialization.
    pub fn rebuild(mut self) -> Self {
        if self.family == Family::SmoothedBump && self.polys.is_empty() {
            self.polys = bump_deriv_polys(MAX_DERIV);
        }
        self
    }

    pub fn is_schwartz(&self) -> bool {
        self.family == Family::SmoothedBump
    }

    fn g(&self, u: f64) -> f64 {
        bump(2.0 * u / self.sigma)
    }

    pub fn phihat(&self, xi: f64) -> f64 {
        self.phihat_deriv(0, xi).expect("order 0 always defined")
    }

    /// φ̂^{(j)}(ξ).
    pub fn phihat_deriv(&self, j: usize, xi: f64) -> Result<f64> {
        let s = self.sigma;
        let a = xi.abs();
        match self.family {
            Family::Fejer => {
                if j == 0 {
                    return Ok(self.scale * (1.0 - a / s).max(0.0));
                }
                if a == 0.0 || a == s {
                    return Err(Error::Domain(format!("Fejér kernel has a kink at {xi}")));
                }
                if a > s || j >= 2 {
                    return Ok(0.0);
                }
                Ok(-self.scale * xi.signum() / s)
            }
            Family::SmoothedBump => {
                if j > MAX_DERIV {
                    return Err(Error::Domain(format!("derivative order {j} > {MAX_DERIV}")));
                }
                if a >= s {
                    return Ok(0.0);
                }
                let half = 0.5 * s;
                let lo = (-half).max(xi - half);
                let hi = half.min(xi + half);
                let c = (2.0 / s).powi(j as i32);
                let v = integrate(
                    |t| self.g(t) * c * bump_deriv(j, 2.0 * (xi - t) / s, &self.polys),
                    lo,
                    hi,
                    16,
                    32,
                );
                Ok(self.scale * v)
            }
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        let s = self.sigma;
        match self.family {
            Family::Fejer => {
                let y = std::f64::consts::PI * s * x;
                if y.abs() < 1e-8 {
                    self.scale * s
                } else {
                    self.scale * s * (y.sin() / y).powi(2)
                }
            }
            Family::SmoothedBump => {
                let panels = 8 + (x.abs() * s * 4.0).ceil() as usize;
                let gc = integrate(
                    |xi| self.g(xi) * (2.0 * std::f64::consts::PI * xi * x).cos(),
                    -0.5 * s,
                    0.5 * s,
                    panels,
                    24,
                );
                self.scale * gc * gc
            }
        }
    }

    /// ∫_a^b φ̂.
    pub fn phihat_integral(&self, a: f64, b: f64) -> f64 {
        let s = self.sigma;
        let lo = a.max(-s);
        let hi = b.min(s);
        if hi <= lo {
            return 0.0;
        }
        let mut breaks = vec![lo];
        if lo < 0.0 && hi > 0.0 {
            breaks.push(0.0);
        }
        breaks.push(hi);
        match self.family {
            Family::Fejer => integrate_pieces(|x| self.phihat(x), &breaks, 1, 2),
            Family::SmoothedBump => integrate_pieces(|x| self.phihat(x), &breaks, 8, 16),
        }
    }
}

/// Smooth bump weight supported on [a, b] ⊂ (0, ∞).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightFunction {
    pub support: [f64; 2],
    #[serde(default = "one")]
    pub scale: f64,
}

impl WeightFunction {
    pub fn bump(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a) {
            return Err(Error::Domain(format!("weight support [{a}, {b}] must lie in (0, ∞)")));
        }
        Ok(WeightFunction { support: [a, b], scale: 1.0 })
    }

    /// h₀(t) = exp(-1/(1-(2t-3)²)) on (1,2).
    pub fn reference() -> Self {
        WeightFunction { support: [1.0, 2.0], scale: 1.0 }
    }

    pub fn scaled(&self, c: f64) -> Self {
        WeightFunction { support: self.support, scale: self.scale * c }
    }

    pub fn a(&self) -> f64 {
        self.support[0]
    }

    pub fn b(&self) -> f64 {
        self.support[1]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let [a, b] = self.support;
        if t <= a || t >= b {
            return 0.0;
        }
        self.scale * bump((2.0 * t - a - b) / (b - a))
    }

    /// h^{(j)}(t).
    pub fn deriv(&self, j: usize, t: f64) -> f64 {
        let [a, b] = self.support;
        if t <= a || t >= b {
            return 0.0;
        }
        let polys = bump_deriv_polys(j);
        self.scale * (2.0 / (b - a)).powi(j as i32) * bump_deriv(j, (2.0 * t - a - b) / (b - a), &polys)
    }

    fn moment<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        integrate(|t| self.eval(t) * w(t), self.a(), self.b(), 16, 24)
    }

    pub fn integral(&self) -> f64 {
        self.moment(|_| 1.0)
    }

    /// ∫ h·log.
    pub fn log_integral(&self) -> f64 {
        self.moment(f64::ln)
    }

    /// ∫ t^{-ℓ} h(t) dt.
    pub fn negative_moment(&self, l: i32) -> f64 {
        self.moment(|t| t.powi(-l))
    }

    /// ℳh(s) = ∫ t^{s-1} h(t) dt.
    pub fn mellin(&self, s: Complex64) -> Complex64 {
        self.mellin_deriv(s, 0)
    }

    /// d^r/ds^r ℳh(s).
    pub fn mellin_deriv(&self, s: Complex64, r: i32) -> Complex64 {
        integrate_c(
            |t| {
                let lt = t.ln();
                ((s - 1.0) * lt).exp() * (self.eval(t) * lt.powi(r))
            },
            self.a(),
            self.b(),
            16,
            24,
        )
    }
}

/// Katz–Sarnak kernel Ŵ: δ₀ ± η/2 (+1 for the minus sign), or δ₀ + 1/2 when mixed.
#[derive(Clone, Copy, Debug)]
pub struct KSKernel {
    pub sign: Sign,
}

impl KSKernel {
    pub fn eta(t: f64) -> f64 {
        let a = t.abs();
        if a < 1.0 {
            1.0
        } else if a == 1.0 {
            0.5
        } else {
            0.0
        }
    }
}

/// ∫ φ̂ Ŵ, each kernel component evaluated separately.
pub fn ks_prediction(phi: &TestFunction, kernel: KSKernel) -> f64 {
    let delta = phi.phihat(0.0);
    let eta_half = 0.5 * phi.phihat_integral(-1.0, 1.0);
    let constant = phi.phihat_integral(-phi.sigma, phi.sigma);
    match kernel.sign {
        Sign::Plus => delta + eta_half,
        Sign::Minus => delta - eta_half + constant,
        Sign::Mixed => delta + 0.5 * constant,
    }
}
