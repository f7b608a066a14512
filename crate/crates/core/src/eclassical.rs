//! The epsilon-classical map
//!
//! ```text
//! θ' = θ + J            (mod 2π)
//! J' = J + k̃ sin θ'
//! ```
//!
//! iterated over weighted ensembles drawn from the ratchet density. `J` is
//! kept as an unwrapped real so that the physical momentum can be read back
//! with its winding, while `θ` is range-reduced every step.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{monte_carlo_nodes, quadrature_nodes, wrap_angle, KickParams, Node};
use crate::quantum::LOWER_SITE;
use crate::trajectory::Trajectory;

pub const DEFAULT_ENSEMBLE_N: usize = 1024;

/// One phase-space point. `p0` and `j0` remember where the particle started
/// so that `p = p0 + (J - j0)/ε` can be read back after any number of kicks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParticle {
    pub theta: f64,
    pub j: f64,
    pub weight: f64,
    pub p0: f64,
    pub j0: f64,
}

impl MapParticle {
    pub fn new(theta: f64, j: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            j,
            weight: 1.0,
            p0: 0.0,
            j0: j,
        }
    }

    #[inline]
    pub fn momentum(&self, epsilon: f64) -> f64 {
        self.p0 + (self.j - self.j0) / epsilon
    }
}

/// How the initial `J` values are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    /// Every particle starts at `J = 0` (both momentum components treated alike).
    Theory,
    /// Each node is split into the two momentum components `p0 = -1, 0` of
    /// the ratchet state, at half weight and with their own `J₀`.
    Physical,
}

impl FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Self::Theory),
            "physical" => Ok(Self::Physical),
            other => Err(Error::InvalidMode(other.to_string())),
        }
    }
}

impl fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Theory => "theory",
            Self::Physical => "physical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Quadrature,
    MonteCarlo { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub gamma: f64,
    pub scheme: Scheme,
    pub n: usize,
    pub mode: EnsembleMode,
    pub components: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub particles: Vec<MapParticle>,
    pub provenance: Provenance,
}

impl Ensemble {
    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn mean_momentum(&self, epsilon: f64) -> f64 {
        self.particles
            .iter()
            .map(|p| p.weight * p.momentum(epsilon))
            .sum()
    }

    /// Applies one map step to every particle in place.
    pub fn step_all(&mut self, k: f64) {
        for p in &mut self.particles {
            *p = map_step(*p, k);
        }
    }
}

pub fn scaled_kick_strength(epsilon: f64, phi_d: f64) -> f64 {
    epsilon.abs() * phi_d
}

/// `J₀ = ε p0 + ℓπ + τβ`, reduced into `[-π, π)`.
pub fn initial_j(p0: i32, params: &KickParams) -> f64 {
    wrap_angle(
        params.epsilon() * f64::from(p0)
            + f64::from(params.ell()) * PI
            + params.tau() * params.beta(),
    )
}

/// Map angle for lattice position `x`: shifted by π when `ε < 0`.
pub fn theta_offset(x: f64, epsilon: f64) -> Result<f64> {
    if epsilon > 0.0 {
        Ok(wrap_angle(x))
    } else if epsilon < 0.0 {
        Ok(wrap_angle(wrap_angle(x) + PI))
    } else {
        Err(Error::QuantumOnly)
    }
}

/// One map step: angle first, then the kick evaluated at the new angle.
#[inline]
pub fn map_step(p: MapParticle, k: f64) -> MapParticle {
    let theta = wrap_angle(p.theta + p.j);
    MapParticle {
        theta,
        j: p.j + k * theta.sin(),
        ..p
    }
}

pub fn build_ratchet_ensemble(
    params: &KickParams,
    n: usize,
    mode: EnsembleMode,
    scheme: Scheme,
) -> Result<Ensemble> {
    if n < 64 {
        return Err(invalid("ensemble-n", "must be at least 64"));
    }
    let eps = params.epsilon();
    let nodes: Vec<Node> = match scheme {
        Scheme::Quadrature => quadrature_nodes(params.gamma(), n)?,
        Scheme::MonteCarlo { seed } => monte_carlo_nodes(params.gamma(), n, seed)?,
    };
    let mut particles = Vec::with_capacity(n * 2);
    let components = match mode {
        EnsembleMode::Theory => vec![0],
        EnsembleMode::Physical => vec![LOWER_SITE as i32, LOWER_SITE as i32 + 1],
    };
    for node in &nodes {
        let theta = theta_offset(node.theta, eps)?;
        match mode {
            EnsembleMode::Theory => particles.push(MapParticle {
                theta,
                j: 0.0,
                weight: node.weight,
                p0: 0.0,
                j0: 0.0,
            }),
            EnsembleMode::Physical => {
                for &p0 in &components {
                    let j0 = initial_j(p0, params);
                    particles.push(MapParticle {
                        theta,
                        j: j0,
                        weight: 0.5 * node.weight,
                        p0: f64::from(p0),
                        j0,
                    });
                }
            }
        }
    }
    Ok(Ensemble {
        particles,
        provenance: Provenance {
            gamma: params.gamma(),
            scheme,
            n,
            mode,
            components,
        },
    })
}

/// Evolves the ensemble for `params.kicks()` steps on a single partition.
pub fn evolve(ensemble: &Ensemble, params: &KickParams) -> Result<Trajectory> {
    evolve_partitioned(ensemble, params, 1)
}

/// Evolves contiguous particle partitions in parallel. Each partition reduces
/// its particles in index order and partitions are then combined in order,
/// so the result is bit-stable for a fixed partition count.
pub fn evolve_partitioned(
    ensemble: &Ensemble,
    params: &KickParams,
    partitions: usize,
) -> Result<Trajectory> {
    if params.is_quantum_only() {
        return Err(Error::QuantumOnly);
    }
    if ensemble.particles.is_empty() {
        return Err(invalid("ensemble", "must not be empty"));
    }
    let k = params.scaled_kick_strength();
    let eps = params.epsilon();
    let steps = params.kicks() as usize;
    let chunk = ensemble.particles.len().div_ceil(partitions.max(1));

    let partials: Vec<Vec<(f64, f64)>> = ensemble
        .particles
        .par_chunks(chunk)
        .map(|part| {
            let mut sums = vec![(0.0, 0.0); steps + 1];
            for &start in part {
                let mut particle = start;
                for slot in sums.iter_mut() {
                    let p = particle.momentum(eps);
                    slot.0 += particle.weight * p;
                    slot.1 += particle.weight * p * p * 0.5;
                    particle = map_step(particle, k);
                }
            }
            sums
        })
        .collect();

    let mut moments = vec![(0.0, 0.0); steps + 1];
    for part in &partials {
        for (m, s) in moments.iter_mut().zip(part) {
            m.0 += s.0;
            m.1 += s.1;
        }
    }
    Ok(Trajectory::from_moments(*params, &moments))
}

/// Scaling function `F(x)` estimated by iterating the map at small `k̃`
/// from `J = 0`, with `J` normalized by `sqrt(k̃)` and `x = q·sqrt(k̃)`.
///
/// Returns `(x, F)` at every kick up to the first `q` with `q·sqrt(k̃) ≥ x_max`.
pub fn map_scaling_f(x_max: f64, k: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(k > 0.0) {
        return Err(invalid("k", "must be positive"));
    }
    if n < 8 {
        return Err(invalid("quad-n", "must be at least 8"));
    }
    let sk = k.sqrt();
    let steps = (x_max / sk).ceil() as usize;
    let h = 2.0 * PI / n as f64;
    let partials: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let theta0 = -PI + h * (i as f64 + 0.5);
            let s0 = theta0.sin();
            let mut particle = MapParticle::new(theta0, 0.0);
            (0..=steps)
                .map(|q| {
                    if q > 0 {
                        particle = map_step(particle, k);
                    }
                    s0 * particle.j / sk
                })
                .collect()
        })
        .collect();
    Ok((0..=steps)
        .map(|q| {
            let f = partials.iter().map(|row| row[q]).sum::<f64>() / n as f64;
            (q as f64 * sk, f)
        })
        .collect())
}
