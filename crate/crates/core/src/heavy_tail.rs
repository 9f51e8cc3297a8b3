//! Deterministic mathematics of regularly varying tails.
//!
//! All laws here have constant slowly varying part: a column with tail
//! index `k` and scale `s` has survival function `(x / s)^(-k)` for
//! `x >= s`. With constant slowly varying functions the uniform bound on
//! them holds trivially and the de Bruijn conjugate entering the threshold
//! sequence is identically one, so `u_n = y * n^(1/k1)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Tail and extremal index of one column sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnIndices {
    pub tail_index: f64,
    pub extremal_index: f64,
}

/// Tail indices and extremal indices of the columns of the array.
///
/// Columns attaining the minimum tail index `k1` (the dominating ones) are
/// listed first. `k` is the smallest tail index among the remaining columns
/// and is also the tail index a listed dominating column falls back to when
/// a random dominating count leaves it out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub k1: f64,
    pub k: f64,
    pub per_column: Vec<ColumnIndices>,
}

impl TailProfile {
    pub fn new(k1: f64, k: f64, per_column: Vec<ColumnIndices>) -> Result<Self> {
        let profile = Self { k1, k, per_column };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return bad(format!("k1 must be positive, got {}", self.k1));
        }
        if !(self.k > self.k1) {
            return bad(format!("k = {} must exceed k1 = {}", self.k, self.k1));
        }
        if self.per_column.is_empty() {
            return bad("no columns".into());
        }
        let mut seen_other = false;
        for (i, c) in self.per_column.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.extremal_index) {
                return bad(format!("column {}: extremal index {} outside [0,1]", i + 1, c.extremal_index));
            }
            if c.tail_index < self.k1 {
                return bad(format!("column {}: tail index {} below k1", i + 1, c.tail_index));
            }
            if c.tail_index == self.k1 {
                if seen_other {
                    return bad(format!("dominating column {} listed after a non-dominating one", i + 1));
                }
            } else {
                seen_other = true;
                if c.tail_index < self.k {
                    return bad(format!("column {}: tail index {} between k1 and k", i + 1, c.tail_index));
                }
            }
        }
        if self.dominating_count() == 0 {
            return bad("no column attains k1".into());
        }
        Ok(())
    }

    /// Number of listed columns with tail index `k1`.
    pub fn dominating_count(&self) -> usize {
        self.per_column.iter().take_while(|c| c.tail_index == self.k1).count()
    }

    pub fn dominating_thetas(&self) -> Vec<f64> {
        self.per_column[..self.dominating_count()]
            .iter()
            .map(|c| c.extremal_index)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.per_column.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_column.is_empty()
    }
}

/// Pareto law with survival `(x/scale)^(-tail_index)` on `[scale, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoLaw {
    pub tail_index: f64,
    pub scale: f64,
}

impl ParetoLaw {
    pub fn new(tail_index: f64, scale: f64) -> Result<Self> {
        if !(tail_index > 0.0 && tail_index.is_finite()) {
            return Err(Error::Domain(format!("tail index must be positive, got {tail_index}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { tail_index, scale })
    }

    /// Unit-scale law.
    pub fn standard(tail_index: f64) -> Result<Self> {
        Self::new(tail_index, 1.0)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.scale {
            1.0
        } else {
            (x / self.scale).powf(-self.tail_index)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Inverse of the survival function: the value whose survival is `s`.
    /// Used by the marginal transforms, which compute survivals directly to
    /// keep precision in the far tail.
    pub(crate) fn value_at_survival(&self, s: f64) -> f64 {
        self.scale * s.powf(-1.0 / self.tail_index)
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        // random::<f64>() is in [0, 1), so the survival 1 - p lies in (0, 1].
        let p: f64 = rng.random();
        self.value_at_survival(1.0 - p)
    }
}

/// `scale * (1 - p)^(-1/tail_index)`. `p = 1` is rejected rather than
/// mapped to infinity.
pub fn pareto_quantile(p: f64, law: &ParetoLaw) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1)")));
    }
    Ok(law.value_at_survival(1.0 - p))
}

/// Level sequence `u_n = y * n^(1/k1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSequence {
    pub y: f64,
    pub k1: f64,
}

impl ThresholdSequence {
    pub fn new(y: f64, k1: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!("level constant y must be positive, got {y}")));
        }
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(Error::Domain(format!("k1 must be positive, got {k1}")));
        }
        Ok(Self { y, k1 })
    }

    pub fn at(&self, n: usize) -> f64 {
        threshold_u(n, self)
    }
}

pub fn threshold_u(n: usize, ts: &ThresholdSequence) -> f64 {
    debug_assert!(n >= 1);
    ts.y * (n as f64).powf(1.0 / ts.k1)
}

/// Upper bound `(k - k1) / (k1 (k + 1))` on the row-cap exponent.
pub fn chi_upper_bound(k1: f64, k: f64) -> Result<f64> {
    if !(k1 > 0.0) || !(k > k1) || !k.is_finite() {
        return Err(Error::InvalidProfile(format!("need 0 < k1 < k, got k1 = {k1}, k = {k}")));
    }
    Ok((k - k1) / (k1 * (k + 1.0)))
}

/// `floor(n^chi)`, at least one. `chi` must lie in `(0, chi_max)`.
pub fn row_cap(n: usize, chi: f64, chi_max: f64) -> Result<usize> {
    if !(chi > 0.0 && chi < chi_max) {
        return Err(Error::Config(format!("row-cap exponent {chi} outside (0, {chi_max})")));
    }
    if n == 0 {
        return Err(Error::Domain("row index must be at least 1".into()));
    }
    Ok(floor_power(n, chi).max(1))
}

/// `floor(n^chi)` robust to `powf` landing a hair below an exact integer.
pub(crate) fn floor_power(n: usize, chi: f64) -> usize {
    let r = (n as f64).powf(chi);
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        r.floor() as usize
    }
}

/// First-order exceedance probability `P{z1 Y > u_n} ~ (z1/y)^k1 / n`.
pub fn theoretical_exceedance(z1: f64, y: f64, k1: f64, n: usize) -> f64 {
    (z1 / y).powf(k1) / n as f64
}
