//! Thin multiprecision layer over `astro_float`.
//!
//! Every operation takes its precision in bits explicitly; `Real` carries no
//! context. Transcendental constants are cached per thread.

use std::cell::RefCell;
use std::cmp::Ordering;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, Word};
use num_bigint::BigInt;

const RM: RoundingMode = RoundingMode::ToEven;
const WORD_BITS: i32 = Word::BITS as i32;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Bits needed for `digits` significant decimal digits, plus guard bits.
pub fn bits_for_digits(digits: u32) -> usize {
    ((digits as f64) * std::f64::consts::LOG2_10).ceil() as usize + 32
}

#[derive(Clone, Debug)]
pub struct Real(pub BigFloat);

impl Real {
    pub fn zero(p: usize) -> Self {
        Real(BigFloat::from_word(0, p))
    }

    pub fn from_f64(x: f64, p: usize) -> Self {
        Real(BigFloat::from_f64(x, p))
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        Real(BigFloat::from_i64(x, p))
    }

    /// Rounds an arbitrary integer to `p` bits.
    pub fn from_bigint(x: &BigInt, p: usize) -> Self {
        let (sign, digits) = x.to_u64_digits();
        let two64 = BigFloat::from_word(2, 64).powi(64, 128, RM);
        let mut acc = BigFloat::from_word(0, p);
        // Horner from the most significant limb; exact until the value exceeds p bits.
        for &d in digits.iter().rev() {
            acc = acc.mul(&two64, p, RM).add(&BigFloat::from_u64(d, 64), p, RM);
        }
        if sign == num_bigint::Sign::Minus {
            acc = acc.neg();
        }
        Real(acc)
    }

    pub fn parse(s: &str, p: usize) -> Self {
        with_consts(|cc| Real(BigFloat::parse(s, Radix::Dec, p, RM, cc)))
    }

    pub fn pi(p: usize) -> Self {
        with_consts(|cc| Real(cc.pi(p, RM)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn add(&self, o: &Real, p: usize) -> Real {
        Real(self.0.add(&o.0, p, RM))
    }

    pub fn sub(&self, o: &Real, p: usize) -> Real {
        Real(self.0.sub(&o.0, p, RM))
    }

    pub fn mul(&self, o: &Real, p: usize) -> Real {
        Real(self.0.mul(&o.0, p, RM))
    }

    pub fn div(&self, o: &Real, p: usize) -> Real {
        Real(self.0.div(&o.0, p, RM))
    }

    pub fn mul_i64(&self, k: i64, p: usize) -> Real {
        Real(self.0.mul(&BigFloat::from_i64(k, 64), p, RM))
    }

    pub fn div_i64(&self, k: i64, p: usize) -> Real {
        Real(self.0.div(&BigFloat::from_i64(k, 64), p, RM))
    }

    pub fn neg(&self) -> Real {
        Real(self.0.neg())
    }

    pub fn abs(&self) -> Real {
        Real(self.0.abs())
    }

    pub fn sqrt(&self, p: usize) -> Real {
        Real(self.0.sqrt(p, RM))
    }

    pub fn powi(&self, n: usize, p: usize) -> Real {
        Real(self.0.powi(n, p, RM))
    }

    pub fn ln(&self, p: usize) -> Real {
        with_consts(|cc| Real(self.0.ln(p, RM, cc)))
    }

    pub fn exp(&self, p: usize) -> Real {
        with_consts(|cc| Real(self.0.exp(p, RM, cc)))
    }

    pub fn sin(&self, p: usize) -> Real {
        with_consts(|cc| Real(self.0.sin(p, RM, cc)))
    }

    pub fn cos(&self, p: usize) -> Real {
        with_consts(|cc| Real(self.0.cos(p, RM, cc)))
    }

    pub fn cmp(&self, o: &Real) -> Ordering {
        self.0.cmp(&o.0).map(|c| c.cmp(&0)).unwrap_or(Ordering::Equal)
    }

    /// Binary exponent `e` with `|x| = 0.1xxx_2 * 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i32> {
        if self.0.is_zero() {
            None
        } else {
            self.0.exponent()
        }
    }

    /// Correctly rounded to within one f64 ulp (truncation of the mantissa).
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf() {
            return if self.0.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        let words = self.0.mantissa_digits().expect("finite value");
        let e = self.0.exponent().expect("finite value");
        // Take enough top words to cover 64 bits.
        let take = (128 / WORD_BITS as usize).min(words.len());
        let mut m = 0.0f64;
        for w in words.iter().rev().take(take) {
            m = m * 2f64.powi(WORD_BITS) + (*w as f64);
        }
        let shift = e - WORD_BITS * take as i32;
        let v = ldexp(m, shift);
        if self.0.sign() == Some(Sign::Neg) {
            -v
        } else {
            v
        }
    }

    /// Decimal scientific notation with `digits` significant digits.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        let p = ((digits as f64) * std::f64::consts::LOG2_10) as usize + 16;
        let x = self.0.clone();
        // Scale to [1,10) via the f64 estimate of the decimal exponent, then correct.
        let approx = self.to_f64().abs();
        let mut e10 = if approx.is_finite() && approx > 0.0 {
            approx.log10().floor() as i64
        } else {
            ((self.exponent().unwrap() as f64) * std::f64::consts::LOG10_2).floor() as i64
        };
        let ten = BigFloat::from_word(10, 8);
        let scale = |e: i64| -> BigFloat {
            let t = ten.powi(e.unsigned_abs() as usize, p + 64, RM);
            if e >= 0 {
                x.abs().div(&t, p + 64, RM)
            } else {
                x.abs().mul(&t, p + 64, RM)
            }
        };
        let mut m = scale(e10);
        let one = BigFloat::from_word(1, 8);
        for _ in 0..4 {
            if m.cmp(&one).unwrap_or(0) < 0 {
                e10 -= 1;
            } else if m.cmp(&ten).unwrap_or(0) >= 0 {
                e10 += 1;
            } else {
                break;
            }
            m = scale(e10);
        }
        // Extract digits by repeated multiply-by-ten with round at the end.
        let mut ds: Vec<u8> = Vec::with_capacity(digits + 1);
        let mut r = m;
        for _ in 0..=digits {
            let d = r.int();
            let dv = Real(d.clone()).to_f64() as u8;
            ds.push(dv);
            r = r.sub(&d, p + 64, RM).mul(&ten, p + 64, RM);
        }
        // round half up on the guard digit
        if ds[digits] >= 5 {
            let mut i = digits;
            loop {
                if i == 0 {
                    ds.insert(0, 1);
                    e10 += 1;
                    break;
                }
                i -= 1;
                if ds[i] == 9 {
                    ds[i] = 0;
                } else {
                    ds[i] += 1;
                    break;
                }
            }
        }
        ds.truncate(digits);
        let mut s = String::new();
        if self.is_negative() {
            s.push('-');
        }
        s.push((b'0' + ds[0]) as char);
        if digits > 1 {
            s.push('.');
            for d in &ds[1..] {
                s.push((b'0' + d) as char);
            }
        }
        s.push_str(&format!("e{e10}"));
        s
    }
}

/// `m * 2^e` without intermediate overflow.
pub fn ldexp(mut m: f64, mut e: i32) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
    }
    m * 2f64.powi(e)
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn ksum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().collect::<KahanSum>().value()
}
