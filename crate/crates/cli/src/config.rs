use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lowlying::testfn::{Family, Sign, TestFunction, WeightFunction};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Run parameters. Every field has a default; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// working precision in decimal digits for eigenvalues and Bessel checks
    pub precision: u32,
    /// primes up to this bound for θ integrals and Σ log p/(p(p−1))
    pub prime_limit: u64,
    /// averaging parameters K
    pub big_k: Vec<f64>,
    /// individual weights k
    pub k: Vec<u32>,
    /// m, n range for the Petersson check
    pub mn_max: u64,
    pub sigma: f64,
    pub family: Family,
    pub h_support: [f64; 2],
    #[serde(rename = "J")]
    pub j: usize,
    pub signs: Vec<Sign>,
    /// density exponent: X = k^x_exponent
    pub x_exponent: f64,
    /// bound for |direct − expansion| in the expansion command
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision: 30,
            prime_limit: 10_000_000,
            big_k: vec![100.0, 200.0, 400.0],
            k: vec![32, 34, 36, 38, 40],
            mn_max: 20,
            sigma: 1.4,
            family: Family::SmoothedBump,
            h_support: [1.0, 2.0],
            j: 3,
            signs: vec![Sign::Plus, Sign::Minus],
            x_exponent: 2.0,
            tolerance: 0.05,
            samples: 10_000,
            seed: 0x4a4b,
            format: Format::Csv,
            out: None,
            cache: None,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(5..=1000).contains(&self.precision) {
            return bad(format!("precision {} outside 5..=1000", self.precision));
        }
        if self.prime_limit < 1000 {
            return bad(format!("prime_limit {} below 1000", self.prime_limit));
        }
        if !(self.sigma > 0.0 && self.sigma < 2.0) {
            return bad(format!("sigma {} outside (0, 2)", self.sigma));
        }
        if !(self.h_support[0] > 0.0 && self.h_support[1] > self.h_support[0]) {
            return bad(format!("h_support {:?} must satisfy 0 < a < b", self.h_support));
        }
        if !(1..=4).contains(&self.j) {
            return bad(format!("J = {} outside 1..=4", self.j));
        }
        if let Some(k) = self.big_k.iter().find(|k| !(**k >= 2.0)) {
            return bad(format!("K = {k} below 2"));
        }
        if let Some(k) = self.k.iter().find(|k| **k % 2 == 1 || **k < 2) {
            return bad(format!("weight {k} must be even and positive"));
        }
        if self.mn_max == 0 {
            return bad("mn_max must be positive".into());
        }
        if !(self.x_exponent > 0.0) {
            return bad(format!("x_exponent {} must be positive", self.x_exponent));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }

    pub fn test_function(&self) -> TestFunction {
        match self.family {
            Family::Fejer => TestFunction::fejer(self.sigma),
            Family::SmoothedBump => TestFunction::smoothed_bump(self.sigma),
        }
    }

    pub fn weight(&self) -> WeightFunction {
        WeightFunction::bump(self.h_support[0], self.h_support[1]).expect("validated support")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sigmaa": 1.0}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"sigma": 2.5}"#).unwrap();
        assert!(c.validate().is_err());
        let c: RunConfig = serde_json::from_str(r#"{"k": [13]}"#).unwrap();
        assert!(c.validate().is_err());
        let c: RunConfig = serde_json::from_str(r#"{"signs": ["plus", "mixed"], "family": "fejer"}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.signs, vec![Sign::Plus, Sign::Mixed]);
    }
}
