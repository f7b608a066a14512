//! Parameter scans: scaling-collapse suites, the pulse-period crossover grid
//! and energy-scaling collapse.
//!
//! Work runs on a private thread pool sized by the parallelism hint. Results
//! are always collected in canonical (input) order, and every engine reduces
//! in a fixed order, so output does not depend on the thread count.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eclassical::{self, EnsembleMode, Scheme, DEFAULT_ENSEMBLE_N};
use crate::error::{invalid, Error, Result};
use crate::params::{derive_params, KickParams};
use crate::pendulum::{self, ScalingPoint, DEFAULT_DT, DEFAULT_QUAD_N};
use crate::quantum::{self, QuantumOptions};
use crate::trajectory::Trajectory;

/// Rows closer than this to a resonance are reported with `x` undefined.
pub const RESONANCE_EXACT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Eclassical,
    Quantum,
    Pendulum,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eclassical" => Ok(Self::Eclassical),
            "quantum" => Ok(Self::Quantum),
            "pendulum" => Ok(Self::Pendulum),
            other => Err(invalid(
                "engine",
                format!("`{other}` is not one of eclassical, quantum, pendulum"),
            )),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eclassical => "eclassical",
            Self::Quantum => "quantum",
            Self::Pendulum => "pendulum",
        })
    }
}

/// One `(φ_d, ε)` family, optionally with its own phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Combo {
    pub phi_d: f64,
    pub epsilon: f64,
    pub gamma: Option<f64>,
}

impl Combo {
    pub fn new(phi_d: f64, epsilon: f64) -> Self {
        Self {
            phi_d,
            epsilon,
            gamma: None,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self {
            gamma: Some(gamma),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub engine: Engine,
    /// Families for collapse suites.
    pub combos: Vec<Combo>,
    /// Pulse periods for the crossover grid.
    pub tau_rows: Vec<f64>,
    /// Kick strength used by the crossover grid.
    pub phi_d: f64,
    pub ell: u32,
    pub gamma: f64,
    pub beta: f64,
    pub kicks: u32,
    pub ensemble_n: usize,
    pub mode: EnsembleMode,
    pub monte_carlo: bool,
    pub quantum: QuantumOptions,
    pub quad_n: usize,
    pub dt: f64,
    pub seed: u64,
    pub parallelism: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            engine: Engine::Eclassical,
            combos: Vec::new(),
            tau_rows: Vec::new(),
            phi_d: 1.8,
            ell: 1,
            gamma: -std::f64::consts::FRAC_PI_2,
            beta: 0.5,
            kicks: 40,
            ensemble_n: DEFAULT_ENSEMBLE_N,
            mode: EnsembleMode::Theory,
            monte_carlo: false,
            quantum: QuantumOptions::default(),
            quad_n: DEFAULT_QUAD_N,
            dt: DEFAULT_DT,
            seed: 0,
            parallelism: 1,
        }
    }
}

impl SweepSpec {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        if self.parallelism == 0 {
            return Err(invalid("parallelism", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| invalid("parallelism", e.to_string()))
    }

    fn combo_params(&self, combo: &Combo) -> Result<KickParams> {
        derive_params(
            self.ell,
            combo.epsilon,
            combo.phi_d,
            combo.gamma.unwrap_or(self.gamma),
            self.beta,
            self.kicks,
        )
    }

    fn scheme(&self, index: usize) -> Scheme {
        if self.monte_carlo {
            Scheme::MonteCarlo {
                seed: self.seed.wrapping_add(index as u64),
            }
        } else {
            Scheme::Quadrature
        }
    }

    fn check_combos(&self) -> Result<()> {
        if self.combos.is_empty() {
            return Err(invalid("combos", "must not be empty"));
        }
        if self.kicks == 0 {
            return Err(invalid("kicks", "must be at least 1"));
        }
        Ok(())
    }
}

/// `(q, x, value)` samples of one family; value is absent where undefined.
pub type Series = Vec<(u32, f64, Option<f64>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ComboRun {
    pub combo: Combo,
    /// Engine output or the error message of a failed family.
    pub outcome: std::result::Result<Series, String>,
    pub trajectory: Option<Trajectory>,
}

impl ComboRun {
    pub fn defined(&self) -> Vec<(f64, f64)> {
        match &self.outcome {
            Ok(s) => s
                .iter()
                .filter_map(|&(_, x, v)| v.map(|v| (x, v)))
                .collect(),
            Err(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseTable {
    pub engine: Engine,
    /// What the value column holds: `scaled_current` or `scaled_energy`.
    pub quantity: &'static str,
    pub runs: Vec<ComboRun>,
}

impl CollapseTable {
    pub fn failed(&self) -> Vec<usize> {
        self.runs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.outcome.is_err())
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest pairwise disagreement between families at matched `x ≤ x_limit`.
    pub fn collapse_deviation(&self, x_limit: f64) -> Option<f64> {
        let series: Vec<Vec<(f64, f64)>> = self.runs.iter().map(ComboRun::defined).collect();
        pairwise_deviation(&series, x_limit)
    }
}

fn run_trajectory(spec: &SweepSpec, params: &KickParams, index: usize) -> Result<Trajectory> {
    match spec.engine {
        Engine::Eclassical => {
            let ensemble = eclassical::build_ratchet_ensemble(
                params,
                spec.ensemble_n,
                spec.mode,
                spec.scheme(index),
            )?;
            eclassical::evolve(&ensemble, params)
        }
        Engine::Quantum => Ok(quantum::evolve(params, &spec.quantum)?.trajectory),
        Engine::Pendulum => Err(invalid("engine", "pendulum has no trajectory")),
    }
}

fn current_series(
    spec: &SweepSpec,
    params: &KickParams,
    index: usize,
) -> Result<(Series, Option<Trajectory>)> {
    if spec.engine == Engine::Pendulum {
        let s = params.gamma().sin();
        let series = (1..=params.kicks())
            .map(|q| {
                let x = params.scaling_x(q);
                let v = if s.abs() < 1e-12 {
                    None
                } else {
                    Some(pendulum::scaling_f(x, spec.quad_n, spec.dt)?.f_over_x)
                };
                Ok((q, x, v))
            })
            .collect::<Result<Series>>()?;
        return Ok((series, None));
    }
    let t = run_trajectory(spec, params, index)?;
    let series = t
        .points
        .iter()
        .skip(1)
        .map(|p| (p.q, p.x, p.scaled_current))
        .collect();
    Ok((series, Some(t)))
}

/// Scaled current versus `x` for each family.
pub fn run_collapse_suite(spec: &SweepSpec) -> Result<CollapseTable> {
    spec.check_combos()?;
    let pool = spec.pool()?;
    let runs = pool.install(|| {
        spec.combos
            .par_iter()
            .enumerate()
            .map(|(i, combo)| {
                let res = spec
                    .combo_params(combo)
                    .and_then(|p| current_series(spec, &p, i));
                match res {
                    Ok((series, trajectory)) => ComboRun {
                        combo: *combo,
                        outcome: Ok(series),
                        trajectory,
                    },
                    Err(e) => ComboRun {
                        combo: *combo,
                        outcome: Err(e.to_string()),
                        trajectory: None,
                    },
                }
            })
            .collect()
    });
    Ok(CollapseTable {
        engine: spec.engine,
        quantity: "scaled_current",
        runs,
    })
}

/// Scaled energy `E / (φ_d² q)` versus `x` for each family (epsilon-classical).
pub fn run_energy_collapse(spec: &SweepSpec) -> Result<CollapseTable> {
    spec.check_combos()?;
    if spec.engine != Engine::Eclassical {
        return Err(invalid(
            "engine",
            "energy collapse requires the eclassical engine",
        ));
    }
    let pool = spec.pool()?;
    let runs = pool.install(|| {
        spec.combos
            .par_iter()
            .enumerate()
            .map(|(i, combo)| {
                let res = spec
                    .combo_params(combo)
                    .and_then(|p| run_trajectory(spec, &p, i));
                match res {
                    Ok(t) => {
                        let phi2 = combo.phi_d * combo.phi_d;
                        let series = t
                            .points
                            .iter()
                            .skip(1)
                            .map(|p| (p.q, p.x, Some(p.mean_energy / (phi2 * f64::from(p.q)))))
                            .collect();
                        ComboRun {
                            combo: *combo,
                            outcome: Ok(series),
                            trajectory: Some(t),
                        }
                    }
                    Err(e) => ComboRun {
                        combo: *combo,
                        outcome: Err(e.to_string()),
                        trajectory: None,
                    },
                }
            })
            .collect()
    });
    Ok(CollapseTable {
        engine: spec.engine,
        quantity: "scaled_energy",
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum CellValue {
    Value(f64),
    /// `sin γ = 0`: the scaled current is not defined.
    Undefined,
    Failed,
}

impl CellValue {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub q: u32,
    pub x: Option<f64>,
    pub value: CellValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub tau: f64,
    pub ell_star: u32,
    pub epsilon: f64,
    pub resonance_exact: bool,
    pub cells: Vec<GridCell>,
    pub failure: Option<String>,
}

impl GridRow {
    pub fn series(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| Some((c.x?, c.value.value()?)))
            .collect()
    }

    /// Smallest defined value with `x` in `[lo, hi]`.
    pub fn min_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.series()
            .into_iter()
            .filter(|&(x, _)| x >= lo && x <= hi)
            .map(|(_, v)| v)
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub engine: Engine,
    pub beta: f64,
    pub beta_policy: String,
    pub phi_d: f64,
    pub gamma: f64,
    pub kicks: u32,
    pub seed: u64,
    pub code_version: String,
    pub convention: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub metadata: GridMetadata,
}

impl GridResult {
    pub fn columns(&self) -> usize {
        self.metadata.kicks as usize
    }

    /// Rows strictly increasing in `tau`, cells strictly increasing in `x`,
    /// and every row complete.
    pub fn check_order(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if !(w[0].tau < w[1].tau) {
                return Err(Error::Ordering(format!(
                    "rows not sorted by tau at {}",
                    w[1].tau
                )));
            }
        }
        for row in &self.rows {
            if row.cells.len() != self.columns() {
                return Err(Error::Ordering(format!(
                    "row tau={} has {} cells",
                    row.tau,
                    row.cells.len()
                )));
            }
            let xs: Vec<f64> = row.cells.iter().filter_map(|c| c.x).collect();
            if xs.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Ordering(format!(
                    "row tau={} not sorted by x",
                    row.tau
                )));
            }
        }
        Ok(())
    }
}

/// Nearest resonance index and signed detuning for a pulse period.
pub fn nearest_resonance(tau: f64) -> (u32, f64) {
    let ell = (tau / TAU).round().max(0.0) as u32;
    (ell, tau - TAU * f64::from(ell))
}

/// Quantum crossover grid: one row per pulse period, detuning measured from
/// the nearest resonance, one column per kick.
pub fn run_tau_scan(spec: &SweepSpec) -> Result<GridResult> {
    if spec.engine != Engine::Quantum {
        return Err(invalid("engine", "tau scan requires the quantum engine"));
    }
    if spec.tau_rows.is_empty() {
        return Err(invalid("tau", "at least one row is required"));
    }
    if spec.tau_rows.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("tau", "rows must be positive"));
    }
    if spec.kicks == 0 {
        return Err(invalid("kicks", "must be at least 1"));
    }
    // validate the shared parameters once before scheduling work
    derive_params(0, 1.0, spec.phi_d, spec.gamma, spec.beta, spec.kicks)?;

    let mut taus = spec.tau_rows.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let pool = spec.pool()?;
    let rows: Vec<GridRow> =
        pool.install(|| taus.par_iter().map(|&tau| scan_row(spec, tau)).collect());
    let grid = GridResult {
        rows,
        metadata: GridMetadata {
            engine: spec.engine,
            beta: spec.beta,
            beta_policy: "fixed for all rows".into(),
            phi_d: spec.phi_d,
            gamma: spec.gamma,
            kicks: spec.kicks,
            seed: spec.seed,
            code_version: env!("CARGO_PKG_VERSION").into(),
            convention: "kick then free evolution; sampled after free evolution".into(),
        },
    };
    grid.check_order()?;
    Ok(grid)
}

fn scan_row(spec: &SweepSpec, tau: f64) -> GridRow {
    let (ell_star, epsilon) = nearest_resonance(tau);
    let resonance_exact = epsilon.abs() < RESONANCE_EXACT;
    let run = derive_params(
        ell_star, epsilon, spec.phi_d, spec.gamma, spec.beta, spec.kicks,
    )
    .and_then(|p| quantum::evolve(&p, &spec.quantum).map(|r| (p, r)));
    let (cells, failure) = match run {
        Ok((p, r)) => (
            r.trajectory
                .points
                .iter()
                .skip(1)
                .map(|pt| GridCell {
                    q: pt.q,
                    x: (!resonance_exact).then(|| p.scaling_x(pt.q)),
                    value: pt
                        .scaled_current
                        .map_or(CellValue::Undefined, CellValue::Value),
                })
                .collect(),
            None,
        ),
        Err(e) => (
            (1..=spec.kicks)
                .map(|q| GridCell {
                    q,
                    x: (!resonance_exact)
                        .then(|| (spec.phi_d * epsilon.abs()).sqrt() * f64::from(q)),
                    value: CellValue::Failed,
                })
                .collect(),
            Some(e.to_string()),
        ),
    };
    GridRow {
        tau,
        ell_star,
        epsilon,
        resonance_exact,
        cells,
        failure,
    }
}

/// RMS of `observed - F/x` over the part of `observed` inside the reference
/// range, with the reference linearly interpolated.
pub fn curve_deviation(observed: &[(f64, f64)], reference: &[ScalingPoint]) -> Result<f64> {
    let diffs: Vec<f64> = observed
        .iter()
        .filter(|(x, v)| x.is_finite() && v.is_finite())
        .filter_map(|&(x, v)| pendulum::interpolate(reference, x).map(|r| v - r))
        .collect();
    if diffs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok((diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt())
}

fn interp(series: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (series.first()?, series.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    let i = series.partition_point(|p| p.0 < x);
    if series[i].0 == x || i == 0 {
        return Some(series[i].1);
    }
    let (a, b) = (series[i - 1], series[i]);
    Some(a.1 + (x - a.0) / (b.0 - a.0) * (b.1 - a.1))
}

/// Max over family pairs of `|a(x) - b(x)|` at the sample points of `a` with
/// `x ≤ x_limit`, `b` interpolated linearly. `None` without any overlap.
pub fn pairwise_deviation(series: &[Vec<(f64, f64)>], x_limit: f64) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for (i, a) in series.iter().enumerate() {
        for (j, b) in series.iter().enumerate() {
            if i == j {
                continue;
            }
            for &(x, v) in a.iter().filter(|p| p.0 <= x_limit) {
                if let Some(w) = interp(b, x) {
                    let d = (v - w).abs();
                    worst = Some(worst.map_or(d, |m: f64| m.max(d)));
                }
            }
        }
    }
    worst
}
