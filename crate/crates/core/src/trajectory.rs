use serde::{Deserialize, Serialize};

use crate::params::KickParams;

/// Observables recorded after one kick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub q: u32,
    pub x: f64,
    pub mean_p: f64,
    pub mean_energy: f64,
    /// `(⟨p⟩ - ⟨p₀⟩) / (-φ_d q sin γ)`; absent at `q = 0` or when `sin γ = 0`.
    pub scaled_current: Option<f64>,
}

/// Per-kick observables from `q = 0` to `q = kicks`, shared by both engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: KickParams,
    pub points: Vec<TrajectoryPoint>,
}

const SIN_GAMMA_FLOOR: f64 = 1e-12;

pub(crate) fn scaled_current(
    params: &KickParams,
    q: u32,
    mean_p: f64,
    mean_p0: f64,
) -> Option<f64> {
    let s = params.gamma().sin();
    if q == 0 || s.abs() < SIN_GAMMA_FLOOR {
        return None;
    }
    Some((mean_p - mean_p0) / (-params.phi_d() * f64::from(q) * s))
}

impl Trajectory {
    pub(crate) fn from_moments(params: KickParams, moments: &[(f64, f64)]) -> Self {
        let p0 = moments[0].0;
        let points = moments
            .iter()
            .enumerate()
            .map(|(q, &(mean_p, mean_energy))| {
                let q = q as u32;
                TrajectoryPoint {
                    q,
                    x: params.scaling_x(q),
                    mean_p,
                    mean_energy,
                    scaled_current: scaled_current(&params, q, mean_p, p0),
                }
            })
            .collect();
        Self { params, points }
    }

    pub fn mean_p0(&self) -> f64 {
        self.points[0].mean_p
    }

    /// `(x, scaled_current)` pairs where the current is defined.
    pub fn scaled_series(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.scaled_current.map(|c| (p.x, c)))
            .collect()
    }

    pub fn displacement(&self, q: u32) -> f64 {
        self.points[q as usize].mean_p - self.mean_p0()
    }
}
