use super::noise::standard_normal;
use super::BlackBoxSystem;
use crate::error::Result;

/// Quartic heater-valve controller `u(x)`, coefficients highest power first.
pub const CONTROLLER: [f64; 5] = [-1.018e-6, 7.563e-5, -0.001872, 0.02022, 0.3944];

pub fn controller_output(x: f64) -> f64 {
    CONTROLLER.iter().fold(0.0, |acc, &a| acc * x + a)
}

/// Closed-loop room temperature model
/// `x⁺ = x + τ(α_e(T_e − x) + α_H(T_heater − x)u(x)) + σ_w w`, `w ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomTemperatureSystem {
    /// Sampling time in minutes.
    pub tau_s: f64,
    pub alpha_e: f64,
    pub alpha_h: f64,
    /// Ambient temperature.
    pub t_e: f64,
    pub t_heater: f64,
    pub sigma_w: f64,
}

impl Default for RoomTemperatureSystem {
    fn default() -> Self {
        RoomTemperatureSystem {
            tau_s: 5.0,
            alpha_e: 8e-3,
            alpha_h: 3.6e-3,
            t_e: 15.0,
            t_heater: 55.0,
            sigma_w: 0.0125,
        }
    }
}

impl RoomTemperatureSystem {
    pub fn with_sigma(sigma_w: f64) -> Self {
        RoomTemperatureSystem {
            sigma_w,
            ..Default::default()
        }
    }

    /// Noise-free part of the closed loop.
    pub fn drift(&self, x: f64) -> f64 {
        x + self.tau_s
            * (self.alpha_e * (self.t_e - x) + self.alpha_h * (self.t_heater - x) * controller_output(x))
    }
}

impl BlackBoxSystem for RoomTemperatureSystem {
    fn state_dimension(&self) -> usize {
        1
    }

    #[inline]
    fn step_into(&self, x: &[f64], noise_seed: u64, out: &mut [f64]) -> Result<()> {
        let mut next = self.drift(x[0]);
        if self.sigma_w != 0.0 {
            next += self.sigma_w * standard_normal(noise_seed);
        }
        out[0] = next;
        Ok(())
    }

    fn step_many_into(&self, x: &[f64], seeds: &[u64], out: &mut [f64]) -> Result<()> {
        let base = self.drift(x[0]);
        for (o, &s) in out.iter_mut().zip(seeds) {
            *o = if self.sigma_w != 0.0 {
                base + self.sigma_w * standard_normal(s)
            } else {
                base
            };
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "room(tau_s={:?},alpha_e={:?},alpha_h={:?},t_e={:?},t_heater={:?},sigma_w={:?})",
            self.tau_s, self.alpha_e, self.alpha_h, self.t_e, self.t_heater, self.sigma_w
        )
    }
}
