//! Browser bindings: Bessel values against the uniform bound, Kloosterman sums, and the
//! averaged one-level density next to its symmetry-type prediction.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use lowlying::arith::kloosterman_sum;
use lowlying::bessel::{bessel_bound_certificate, bessel_j};
use lowlying::density::averaged_density_kloosterman;
use lowlying::testfn::{ks_prediction, KSKernel, Sign, TestFunction, WeightFunction};

const DIGITS: u32 = 30;

fn err<E: std::fmt::Display>(e: E) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct BesselRow {
    order: u32,
    x: f64,
    value: String,
    certificate: f64,
    ratio: f64,
    method: String,
}

/// J_order(x) at 30 digits with the bound certificate, as JSON.
#[wasm_bindgen]
pub fn bessel(order: u32, x: f64) -> Result<String, JsError> {
    if order == 0 || !(x > 0.0) {
        return Err(JsError::new("need order ≥ 1 and x > 0"));
    }
    let v = bessel_j(order, x, DIGITS).map_err(err)?;
    let certificate = bessel_bound_certificate(order, x);
    let row = BesselRow {
        order,
        x,
        value: v.value.to_sci_string(20),
        certificate,
        ratio: v.value_f64().abs() / certificate,
        method: format!("{:?}", v.method),
    };
    serde_json::to_string(&row).map_err(err)
}

/// S(m, n; c).
#[wasm_bindgen]
pub fn kloosterman(m: u32, n: u32, c: u32) -> Result<f64, JsError> {
    if c == 0 {
        return Err(JsError::new("modulus must be positive"));
    }
    Ok(kloosterman_sum(m as u64, n as u64, c as u64))
}

fn parse_sign(s: &str) -> Result<Sign, JsError> {
    match s {
        "plus" => Ok(Sign::Plus),
        "minus" => Ok(Sign::Minus),
        "mixed" => Ok(Sign::Mixed),
        _ => Err(JsError::new("sign must be plus, minus or mixed")),
    }
}

#[derive(Serialize)]
struct DensityRow {
    big_k: f64,
    sign: &'static str,
    sigma: f64,
    value: f64,
    main_term: f64,
    prime_square_term: f64,
    kloosterman_term: f64,
    pairs: u64,
    prediction: f64,
}

/// Averaged density for the smoothed bump of support sigma with h = bump on [1, 2], as JSON.
#[wasm_bindgen]
pub fn averaged_density(big_k: f64, sigma: f64, sign: &str) -> Result<String, JsError> {
    if !(big_k >= 2.0 && big_k <= 2000.0) {
        return Err(JsError::new("K must lie in [2, 2000]"));
    }
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(JsError::new("support must lie in (0, 2)"));
    }
    let sign = parse_sign(sign)?;
    let phi = TestFunction::smoothed_bump(sigma);
    let h = WeightFunction::reference();
    let a = averaged_density_kloosterman(big_k, sign, &h, &phi).map_err(err)?;
    let row = DensityRow {
        big_k,
        sign: sign.as_str(),
        sigma,
        value: a.value,
        main_term: a.main_term,
        prime_square_term: a.prime_square_term,
        kloosterman_term: a.kloosterman_term,
        pairs: a.pairs,
        prediction: ks_prediction(&phi, KSKernel { sign }),
    };
    serde_json::to_string(&row).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bindings_produce_json() {
        let b: serde_json::Value = serde_json::from_str(&bessel(11, 5.0).unwrap()).unwrap();
        assert!(b["ratio"].as_f64().unwrap() <= 1.0);
        assert_eq!(kloosterman(1, 1, 1).unwrap(), 1.0);
        let d: serde_json::Value = serde_json::from_str(&averaged_density(50.0, 1.2, "plus").unwrap()).unwrap();
        assert!((d["value"].as_f64().unwrap() - d["prediction"].as_f64().unwrap()).abs() < 0.5);
    }
}
