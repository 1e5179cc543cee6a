use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-polynomial function on [0, 1].
///
/// Coefficients are in powers of the global coordinate `x`, lowest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Polynomial(Vec<f64>),
    Piecewise { breaks: Vec<f64>, pieces: Vec<Vec<f64>> },
}

impl Profile {
    pub fn constant(v: f64) -> Self {
        Profile::Polynomial(vec![v])
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |c: &[f64]| c.iter().all(|v| v.is_finite());
        match self {
            Profile::Polynomial(c) => {
                if c.is_empty() || !finite(c) {
                    return Err(Error::Profile("empty or non-finite coefficients".into()));
                }
            }
            Profile::Piecewise { breaks, pieces } => {
                if breaks.len() < 2 || pieces.len() + 1 != breaks.len() {
                    return Err(Error::Profile(format!(
                        "{} breaks need {} pieces, got {}",
                        breaks.len(),
                        breaks.len().saturating_sub(1),
                        pieces.len()
                    )));
                }
                if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
                    return Err(Error::Profile("breaks must start at 0 and end at 1".into()));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Profile("breaks must increase strictly".into()));
                }
                if pieces.iter().any(|p| p.is_empty() || !finite(p)) {
                    return Err(Error::Profile("empty or non-finite piece".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Polynomial(c) => horner(c, x),
            Profile::Piecewise { breaks, pieces } => {
                let k = breaks[1..breaks.len() - 1].partition_point(|&b| b <= x);
                horner(&pieces[k], x)
            }
        }
    }

    /// Interior breakpoints, where the profile may lose smoothness.
    pub fn interior_breaks(&self) -> &[f64] {
        match self {
            Profile::Polynomial(_) => &[],
            Profile::Piecewise { breaks, .. } => &breaks[1..breaks.len() - 1],
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Polynomial(c) => c[1..].iter().all(|&v| v == 0.0),
            Profile::Piecewise { pieces, .. } => {
                pieces.iter().all(|p| p[1..].iter().all(|&v| v == 0.0))
                    && pieces.windows(2).all(|w| w[0][0] == w[1][0])
            }
        }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}
