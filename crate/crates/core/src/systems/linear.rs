use super::noise::standard_normal;
use super::BlackBoxSystem;
use crate::error::Result;

/// Scalar linear system `x⁺ = a·x + σ·w`, `w ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: f64,
    pub sigma: f64,
}

impl LinearSystem {
    pub fn new(a: f64, sigma: f64) -> Self {
        LinearSystem { a, sigma }
    }
}

impl BlackBoxSystem for LinearSystem {
    fn state_dimension(&self) -> usize {
        1
    }

    fn step_into(&self, x: &[f64], noise_seed: u64, out: &mut [f64]) -> Result<()> {
        let mut next = self.a * x[0];
        if self.sigma != 0.0 {
            next += self.sigma * standard_normal(noise_seed);
        }
        out[0] = next;
        Ok(())
    }

    fn describe(&self) -> String {
        format!("linear(a={:?},sigma={:?})", self.a, self.sigma)
    }
}
