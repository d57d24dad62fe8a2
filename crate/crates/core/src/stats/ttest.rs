use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Per-example scores of two systems, aligned by instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    system_a: Vec<f64>,
    system_b: Vec<f64>,
}

impl PairedSamples {
    pub fn new(system_a: Vec<f64>, system_b: Vec<f64>) -> Result<Self> {
        if system_a.len() != system_b.len() {
            return Err(Error::LengthMismatch(system_a.len(), system_b.len()));
        }
        if system_a.len() < 2 {
            return Err(Error::TooFewSamples {
                required: 2,
                got: system_a.len(),
            });
        }
        Ok(PairedSamples { system_a, system_b })
    }

    pub fn len(&self) -> usize {
        self.system_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system_a.is_empty()
    }

    pub fn swapped(&self) -> PairedSamples {
        PairedSamples {
            system_a: self.system_b.clone(),
            system_b: self.system_a.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub df: usize,
    /// Differences are a non-zero constant; `t` is infinite and `p` is 0.
    pub degenerate_variance: bool,
}

/// Paired two-sided Student t-test on `a - b`.
pub fn paired_ttest(samples: &PairedSamples) -> TTestResult {
    let d: Vec<f64> = samples
        .system_a
        .iter()
        .zip(&samples.system_b)
        .map(|(a, b)| a - b)
        .collect();
    let n = d.len();
    let df = n - 1;
    if d.iter().all(|&x| x == 0.0) {
        return TTestResult {
            t: 0.0,
            p: 1.0,
            df,
            degenerate_variance: false,
        };
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    if d.iter().all(|&x| x == d[0]) {
        return TTestResult {
            t: f64::INFINITY.copysign(mean),
            p: 0.0,
            df,
            degenerate_variance: true,
        };
    }
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / df as f64;
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    TTestResult {
        t,
        p,
        df,
        degenerate_variance: false,
    }
}
