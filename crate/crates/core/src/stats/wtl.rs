use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wtl {
    pub win: usize,
    pub tie: usize,
    pub loss: usize,
}

impl Wtl {
    pub fn total(&self) -> usize {
        self.win + self.tie + self.loss
    }

    pub fn win_percent(&self) -> f64 {
        percent(self.win, self.total())
    }

    pub fn tie_percent(&self) -> f64 {
        percent(self.tie, self.total())
    }

    pub fn loss_percent(&self) -> f64 {
        percent(self.loss, self.total())
    }
}

fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn check_likert(v: f64) -> Result<()> {
    if (1.0..=5.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::ScaleViolation(v))
    }
}

/// Collapses paired 5-point ratings into win/tie/loss counts for system A.
/// Equal ratings are ties; there is no margin.
pub fn likert_to_wtl(ratings_a: &[f64], ratings_b: &[f64]) -> Result<Wtl> {
    if ratings_a.len() != ratings_b.len() {
        return Err(Error::LengthMismatch(ratings_a.len(), ratings_b.len()));
    }
    let mut out = Wtl::default();
    for (&a, &b) in ratings_a.iter().zip(ratings_b) {
        check_likert(a)?;
        check_likert(b)?;
        if a > b {
            out.win += 1;
        } else if a < b {
            out.loss += 1;
        } else {
            out.tie += 1;
        }
    }
    Ok(out)
}
