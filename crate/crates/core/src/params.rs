//! Physical parameters of a NOPA and chain-level network configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference damping rate of the NOPA transmissivity mirrors, Hz.
pub const GAMMA_R: f64 = 7.2e7;

/// Amplification-loss coefficient, Hz per unit pump parameter:
/// kappa = 3e6/sqrt(2) at x = 0.6, proportional to x.
pub const KAPPA_PER_X: f64 = 3.0e6 / (0.6 * std::f64::consts::SQRT_2);

/// Propagation speed used for per-segment delays, km/s.
pub const FIBER_SPEED_KM_S: f64 = 3.0e5;

/// Per-NOPA physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NopaParams {
    /// Dimensionless pump parameter, 0 < x <= 1.
    pub x: f64,
    /// Dimensionless damping parameter, 0 < y <= 1.
    pub y: f64,
    /// Reference rate, Hz.
    pub gamma_r: f64,
    /// Pump coupling epsilon = x * gamma_r, Hz.
    pub epsilon: f64,
    /// Mirror damping gamma = gamma_r / y, Hz.
    pub gamma: f64,
    /// Amplification loss rate, Hz; 0 in lossless mode.
    pub kappa: f64,
}

impl NopaParams {
    /// Build parameters from the dimensionless pump and damping knobs.
    ///
    /// With `amplification_loss_on` the loss rate scales linearly with the
    /// pump: kappa = (3e6 / (0.6 sqrt 2)) x.
    pub fn new(x: f64, y: f64, amplification_loss_on: bool) -> Result<Self> {
        // x = 0 (pump off) is admitted for passive/vacuum analyses.
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "pump parameter x must satisfy 0 <= x <= 1, got {x}"
            )));
        }
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping parameter y must satisfy 0 < y <= 1, got {y}"
            )));
        }
        Ok(Self {
            x,
            y,
            gamma_r: GAMMA_R,
            epsilon: x * GAMMA_R,
            gamma: GAMMA_R / y,
            kappa: if amplification_loss_on { KAPPA_PER_X * x } else { 0.0 },
        })
    }

    /// True when the amplification loss channel is absent.
    pub fn lossless(&self) -> bool {
        self.kappa == 0.0
    }
}

/// Loss scenario of the chain, as used throughout the threshold and sweep tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossScenario {
    Lossless,
    TransmissionOnly,
    TransmissionAndAmplification,
}

impl LossScenario {
    pub const ALL: [LossScenario; 3] = [
        LossScenario::Lossless,
        LossScenario::TransmissionOnly,
        LossScenario::TransmissionAndAmplification,
    ];

    pub fn transmission_on(self) -> bool {
        !matches!(self, LossScenario::Lossless)
    }

    pub fn amplification_on(self) -> bool {
        matches!(self, LossScenario::TransmissionAndAmplification)
    }

    pub fn label(self) -> &'static str {
        match self {
            LossScenario::Lossless => "lossless",
            LossScenario::TransmissionOnly => "transmission_only",
            LossScenario::TransmissionAndAmplification => "transmission_and_amplification",
        }
    }
}

impl std::fmt::Display for LossScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-segment transmission rate for a total distance `d_km` split across
/// `n_nopas - 1` segments, assuming 0.2 dB/km fibre loss.
pub fn transmission_rate(d_km: f64, n_nopas: usize) -> Result<f64> {
    if n_nopas < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain needs at least 2 NOPAs, got {n_nopas}"
        )));
    }
    if d_km < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "distance must be nonnegative, got {d_km}"
        )));
    }
    Ok(10f64.powf(-0.01 * d_km / (n_nopas as f64 - 1.0)))
}

/// Default output phase shifts minimizing V(0): (0,0) for even N, (pi,0) for odd N.
pub fn theta_defaults(n_nopas: usize) -> (f64, f64) {
    if n_nopas % 2 == 0 {
        (0.0, 0.0)
    } else {
        (std::f64::consts::PI, 0.0)
    }
}

/// Chain-level configuration of the N-NOPA coherent feedback network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of NOPAs, N >= 2.
    pub n_nopas: usize,
    /// Total transmission distance between the two ends, km.
    pub distance_km: f64,
    pub transmission_on: bool,
    pub amplification_loss_on: bool,
    /// Per-segment transmission rate.
    pub alpha: f64,
    /// Per-segment reflection rate, sqrt(1 - alpha^2).
    pub beta: f64,
    /// Per-segment propagation delay, s.
    pub tau: f64,
    /// Output phase shift at the a-path end, rad in (-pi, pi].
    pub theta_a: f64,
    /// Output phase shift at the b-path end, rad in (-pi, pi].
    pub theta_b: f64,
    pub nopa: NopaParams,
}

impl NetworkConfig {
    /// Standard configuration: d = 1 km, y = 1, default phase shifts, and the
    /// per-segment delay d / (c_f (N-1)).
    pub fn new(n_nopas: usize, x: f64, scenario: LossScenario) -> Result<Self> {
        Self::with_options(n_nopas, x, 1.0, 1.0, scenario)
    }

    pub fn with_options(
        n_nopas: usize,
        x: f64,
        y: f64,
        distance_km: f64,
        scenario: LossScenario,
    ) -> Result<Self> {
        // validates n_nopas >= 2 and distance_km >= 0 in either branch
        let rate = transmission_rate(distance_km, n_nopas)?;
        let alpha = if scenario.transmission_on() { rate } else { 1.0 };
        let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
        let nopa = NopaParams::new(x, y, scenario.amplification_on())?;
        let (theta_a, theta_b) = theta_defaults(n_nopas);
        Ok(Self {
            n_nopas,
            distance_km,
            transmission_on: scenario.transmission_on(),
            amplification_loss_on: scenario.amplification_on(),
            alpha,
            beta,
            tau: distance_km / (FIBER_SPEED_KM_S * (n_nopas as f64 - 1.0)),
            theta_a,
            theta_b,
            nopa,
        })
    }

    /// Override the output phase shifts.
    pub fn with_thetas(mut self, theta_a: f64, theta_b: f64) -> Self {
        self.theta_a = theta_a;
        self.theta_b = theta_b;
        self
    }

    /// Override the per-segment delay.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delay must be nonnegative, got {tau}"
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn scenario(&self) -> LossScenario {
        match (self.transmission_on, self.amplification_loss_on) {
            (false, _) => LossScenario::Lossless,
            (true, false) => LossScenario::TransmissionOnly,
            (true, true) => LossScenario::TransmissionAndAmplification,
        }
    }

    /// Number of state quadratures, 4N.
    pub fn state_dim(&self) -> usize {
        4 * self.n_nopas
    }

    /// Number of input quadratures, 8N.
    pub fn input_dim(&self) -> usize {
        8 * self.n_nopas
    }
}
