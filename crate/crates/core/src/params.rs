//! Dimensionless parameter model, unit conversion and the initial position
//! density of the two-component ratchet state.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reduces an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let mut y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        y -= TAU;
    }
    y
}

/// Complete dimensionless parameter set of one kicked-rotor run.
///
/// The pulse period `tau` is always recomputed from `ell` and `epsilon`, so
/// the two can never disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickParams {
    ell: u32,
    epsilon: f64,
    tau: f64,
    phi_d: f64,
    gamma: f64,
    beta: f64,
    kicks: u32,
}

impl KickParams {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Signed detuning from the resonance `2π·ell`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi_d(&self) -> f64 {
        self.phi_d
    }

    /// Superposition phase, stored in `[-π, π)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kicks(&self) -> u32 {
        self.kicks
    }

    /// Scaled kick strength `|ε|·φ_d` of the epsilon-classical map.
    pub fn scaled_kick_strength(&self) -> f64 {
        self.epsilon.abs() * self.phi_d
    }

    /// Scaling variable `x = sqrt(φ_d |ε|)·q` after `q` kicks.
    pub fn scaling_x(&self, q: u32) -> f64 {
        self.scaled_kick_strength().sqrt() * f64::from(q)
    }

    /// True at an exact resonance, where only the quantum engine applies.
    pub fn is_quantum_only(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma: wrap_angle(gamma),
            ..*self
        }
    }

    pub fn with_kicks(&self, kicks: u32) -> Result<Self> {
        derive_params(
            self.ell,
            self.epsilon,
            self.phi_d,
            self.gamma,
            self.beta,
            kicks,
        )
    }
}

/// Validates a parameter set and derives `tau = 2π·ell + epsilon`.
pub fn derive_params(
    ell: u32,
    epsilon: f64,
    phi_d: f64,
    gamma: f64,
    beta: f64,
    kicks: u32,
) -> Result<KickParams> {
    for (name, v) in [
        ("epsilon", epsilon),
        ("phi-d", phi_d),
        ("gamma", gamma),
        ("beta", beta),
    ] {
        if !v.is_finite() {
            return Err(invalid(name, "must be finite"));
        }
    }
    if phi_d <= 0.0 {
        return Err(invalid("phi-d", "must be positive"));
    }
    if kicks == 0 {
        return Err(invalid("kicks", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(invalid("beta", "must lie in [0, 1)"));
    }
    let tau = TAU * f64::from(ell) + epsilon;
    if tau <= 0.0 {
        return Err(invalid(
            "epsilon",
            "must be positive when ell = 0 (tau must be positive)",
        ));
    }
    Ok(KickParams {
        ell,
        epsilon,
        tau,
        phi_d,
        gamma: wrap_angle(gamma),
        beta,
        kicks,
    })
}

/// Conversion between physical pulse periods and the dimensionless `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    pub half_talbot_us: f64,
    pub grating_wavelength_nm: Option<f64>,
}

impl Default for PhysicalUnits {
    fn default() -> Self {
        Self {
            half_talbot_us: 51.5,
            grating_wavelength_nm: None,
        }
    }
}

impl PhysicalUnits {
    pub fn new(half_talbot_us: f64) -> Result<Self> {
        if !(half_talbot_us > 0.0 && half_talbot_us.is_finite()) {
            return Err(invalid("half-talbot-us", "must be positive"));
        }
        Ok(Self {
            half_talbot_us,
            grating_wavelength_nm: None,
        })
    }

    /// `tau = 2π·T / T_half`.
    pub fn tau_from_period(&self, period_us: f64) -> Result<f64> {
        if !(period_us > 0.0 && period_us.is_finite()) {
            return Err(invalid("period", "must be positive"));
        }
        Ok(TAU * period_us / self.half_talbot_us)
    }

    pub fn period_from_tau(&self, tau: f64) -> f64 {
        tau * self.half_talbot_us / TAU
    }
}

/// Position density `P(θ) = (1 + cos(θ + γ)) / 2π` of the state
/// `(|0⟩ + e^{iγ}|1⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDensity {
    pub gamma: f64,
}

impl InitialDensity {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    pub fn at(&self, theta: f64) -> f64 {
        initial_density_at(theta, self.gamma)
    }
}

pub fn initial_density_at(theta: f64, gamma: f64) -> f64 {
    let c = wrap_angle(wrap_angle(theta) + gamma).cos();
    // 1 + cos can round to a tiny negative value at the node
    ((1.0 + c) / TAU).max(0.0)
}

/// A discretized position sample with its probability weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub theta: f64,
    pub weight: f64,
}

/// Trapezoid discretization of `P(θ)` on `n` uniform nodes starting at `-π`.
pub fn quadrature_nodes(gamma: f64, n: usize) -> Result<Vec<Node>> {
    if n < 4 {
        return Err(invalid("ensemble-n", "must be at least 4"));
    }
    let h = TAU / n as f64;
    Ok((0..n)
        .map(|i| {
            let theta = -PI + h * i as f64;
            Node {
                theta,
                weight: initial_density_at(theta, gamma) * h,
            }
        })
        .collect())
}

/// Equal-weight samples of `P(θ)` drawn by rejection against the flat
/// envelope `2/2π`.
pub fn monte_carlo_nodes(gamma: f64, n: usize, seed: u64) -> Result<Vec<Node>> {
    if n == 0 {
        return Err(invalid("ensemble-n", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let theta = rng.gen_range(-PI..PI);
        let u: f64 = rng.gen();
        if u * 2.0 < 1.0 + (theta + gamma).cos() {
            out.push(Node { theta, weight: w });
        }
    }
    Ok(out)
}
