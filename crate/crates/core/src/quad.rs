//! Gauss–Legendre rules and composite integration helpers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::hp::KahanSum;

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cache() -> &'static Mutex<HashMap<usize, Rule>> {
    static C: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and weights on [-1,1], cached per order.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    if let Some(r) = cache().lock().unwrap().get(&n) {
        return r.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    let r = Arc::new((x, w));
    cache().lock().unwrap().insert(n, r.clone());
    r
}

/// Composite rule: `panels` equal panels of an `n`-point rule.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let r = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut s = KahanSum::new();
    for k in 0..panels {
        let lo = a + h * k as f64;
        let mid = lo + 0.5 * h;
        for (xi, wi) in r.0.iter().zip(r.1.iter()) {
            s.add(0.5 * h * wi * f(mid + 0.5 * h * xi));
        }
    }
    s.value()
}

pub fn integrate_c<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    n: usize,
) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let r = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
    for k in 0..panels {
        let mid = a + h * (k as f64 + 0.5);
        for (xi, wi) in r.0.iter().zip(r.1.iter()) {
            let v = f(mid + 0.5 * h * xi) * (0.5 * h * wi);
            re.add(v.re);
            im.add(v.im);
        }
    }
    Complex64::new(re.value(), im.value())
}

/// Integrates over consecutive breakpoints so kinks sit on panel edges.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], panels: usize, n: usize) -> f64 {
    let mut s = KahanSum::new();
    for w in breaks.windows(2) {
        s.add(integrate(&mut f, w[0], w[1], panels, n));
    }
    s.value()
}
