//! The black-box boundary. Every other module reaches the dynamics only
//! through [`BlackBoxSystem::step`], never symbolically.

pub mod noise;
mod linear;
mod plugin;
mod room;

pub use linear::LinearSystem;
pub use plugin::{serve_plugin, PluginSystem};
pub use room::{controller_output, RoomTemperatureSystem};

use crate::error::{check_dimension, Error, Result};

/// A discrete-time stochastic system `x⁺ = f(x, w)` seen only through
/// simulation. `step` must be a pure function of `(x, noise_seed)`.
pub trait BlackBoxSystem: Send + Sync {
    fn state_dimension(&self) -> usize;

    /// Writes `f(x, w(noise_seed))` into `out`. Both slices have the state
    /// dimension.
    fn step_into(&self, x: &[f64], noise_seed: u64, out: &mut [f64]) -> Result<()>;

    /// Successors of one state under several seeds, written back to back
    /// into `out` (`seeds.len() * n` values).
    fn step_many_into(&self, x: &[f64], seeds: &[u64], out: &mut [f64]) -> Result<()> {
        let n = self.state_dimension();
        for (seed, chunk) in seeds.iter().zip(out.chunks_exact_mut(n)) {
            self.step_into(x, *seed, chunk)?;
        }
        Ok(())
    }

    /// Canonical description used in config digests.
    fn describe(&self) -> String;

    fn step(&self, x: &[f64], noise_seed: u64) -> Result<Vec<f64>> {
        check_dimension(self.state_dimension(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("state contains a non-finite value"));
        }
        let mut out = vec![0.0; x.len()];
        self.step_into(x, noise_seed, &mut out)?;
        Ok(out)
    }
}

impl<S: BlackBoxSystem + ?Sized> BlackBoxSystem for Box<S> {
    fn state_dimension(&self) -> usize {
        (**self).state_dimension()
    }

    fn step_into(&self, x: &[f64], noise_seed: u64, out: &mut [f64]) -> Result<()> {
        (**self).step_into(x, noise_seed, out)
    }

    fn step_many_into(&self, x: &[f64], seeds: &[u64], out: &mut [f64]) -> Result<()> {
        (**self).step_many_into(x, seeds, out)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}
