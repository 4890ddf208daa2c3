use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};

/// Closed axis-aligned box `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegion")]
pub struct Region {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct RawRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawRegion> for Region {
    type Error = Error;

    fn try_from(raw: RawRegion) -> Result<Self> {
        Region::new(raw.lower, raw.upper)
    }
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dimension(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::invalid("region must have at least one dimension"));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("region bound {i} is not finite")));
            }
            if lo > hi {
                return Err(Error::invalid(format!(
                    "region lower bound {lo} exceeds upper bound {hi} in dimension {i}"
                )));
            }
        }
        Ok(Region { lower, upper })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Region::new(vec![lo], vec![hi])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dimension(self.dimension(), x.len())?;
        Ok(self.contains_point(x))
    }

    /// Membership without the dimension check; callers guarantee `x.len()`.
    pub(crate) fn contains_point(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.dimension() == other.dimension()
            && (0..self.dimension())
                .all(|i| other.lower[i] <= self.lower[i] && self.upper[i] <= other.upper[i])
    }

    /// True when the closed boxes share at least one point.
    pub fn intersects(&self, other: &Region) -> bool {
        self.dimension() == other.dimension()
            && (0..self.dimension())
                .all(|i| self.lower[i] <= other.upper[i] && other.lower[i] <= self.upper[i])
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(lo, hi)| lo == hi)
    }

    /// Largest Euclidean norm of any point in the box.
    pub fn max_norm(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
