//! Exact evolution of the kicked rotor at fixed quasi-momentum `β`.
//!
//! A period consists of the kick `exp(-i φ_d cos θ)` followed by free
//! evolution `exp(-i τ (n + β)² / 2)`. In the momentum basis the kick is a
//! convolution with `(-i)^k J_k(φ_d)`.

pub mod bessel;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::KickParams;
use crate::trajectory::Trajectory;

pub use bessel::{bessel_j, bessel_j_orders};

pub const LEAKAGE_TOLERANCE: f64 = 1e-10;

/// Amplitudes on the momentum lattice `n_min ..= n_max` at quasi-momentum `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorState {
    beta: f64,
    n_min: i64,
    amps: Vec<Complex64>,
}

impl RotorState {
    pub fn from_amplitudes(beta: f64, n_min: i64, amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("amplitudes", "must not be empty"));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(invalid("beta", "must lie in [0, 1)"));
        }
        Ok(Self { beta, n_min, amps })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.amps.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, n: i64) -> Complex64 {
        if n < self.n_min || n > self.n_max() {
            return Complex64::new(0.0, 0.0);
        }
        self.amps[(n - self.n_min) as usize]
    }

    pub fn halfwidth(&self) -> usize {
        self.n_max().unsigned_abs().max(self.n_min.unsigned_abs()) as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn edge_occupancy(&self) -> f64 {
        let first = self.amps[0].norm_sqr();
        if self.amps.len() == 1 {
            return first;
        }
        first + self.amps[self.amps.len() - 1].norm_sqr()
    }

    /// `Σ |a_n|² (n + β)` and `Σ |a_n|² (n + β)² / 2`.
    pub fn moments(&self) -> (f64, f64) {
        let mut mean = 0.0;
        let mut energy = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = (self.n_min + i as i64) as f64 + self.beta;
            let w = a.norm_sqr();
            mean += w * p;
            energy += 0.5 * w * p * p;
        }
        (mean, energy)
    }

    /// `|⟨self|other⟩|²` over the common lattice.
    pub fn fidelity(&self, other: &RotorState) -> f64 {
        let lo = self.n_min.max(other.n_min);
        let hi = self.n_max().min(other.n_max());
        let overlap: Complex64 = (lo..=hi)
            .map(|n| self.amplitude(n).conj() * other.amplitude(n))
            .sum();
        overlap.norm_sqr()
    }

    /// `ψ(θ) = (2π)^{-1/2} Σ a_n e^{inθ}`.
    pub fn wavefunction_at(&self, theta: f64) -> Complex64 {
        let s: Complex64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, (self.n_min + i as i64) as f64 * theta))
            .sum();
        s / (2.0 * PI).sqrt()
    }

    fn check_leakage(&self, tolerance: f64) -> Result<()> {
        let occupancy = self.edge_occupancy();
        if occupancy > tolerance {
            return Err(Error::Leakage {
                halfwidth: self.halfwidth(),
                occupancy,
                tolerance,
            });
        }
        Ok(())
    }
}

/// Lattice site of the lower ratchet component; the upper one sits at `LOWER_SITE + 1`.
///
/// The pair occupies momenta `β - 1` and `β`, which is symmetric about zero at
/// `β = 1/2`. With that placement the state `(1 + e^{i(θ+γ)})` has no current
/// at `γ = 0` for any pulse period.
pub const LOWER_SITE: i64 = -1;

/// `(|β-1⟩ + e^{iγ}|β⟩)/√2` on the lattice `-h ..= h`.
pub fn init_superposition(gamma: f64, beta: f64, basis_halfwidth: usize) -> Result<RotorState> {
    if basis_halfwidth < 8 {
        return Err(invalid("basis-halfwidth", "must be at least 8"));
    }
    let h = basis_halfwidth as i64;
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * basis_halfwidth + 1];
    let lower = (h + LOWER_SITE) as usize;
    amps[lower] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[lower + 1] = Complex64::from_polar(FRAC_1_SQRT_2, gamma);
    RotorState::from_amplitudes(beta, -h, amps)
}

/// Kick propagator in the momentum basis: coefficients `c_k = (-i)^k J_k(φ_d)`
/// for `|k| ≤ cutoff`, beyond which the Bessel couplings are below `1e-18`.
#[derive(Debug, Clone)]
pub struct KickOperator {
    phi_d: f64,
    coeffs: Vec<Complex64>,
}

impl KickOperator {
    pub fn new(phi_d: f64) -> Result<Self> {
        if !(phi_d >= 0.0 && phi_d.is_finite()) {
            return Err(invalid("phi-d", "must be non-negative"));
        }
        let orders = bessel_j_orders(phi_d, phi_d.ceil() as usize + 60);
        let cutoff = orders.iter().rposition(|b| b.abs() > 1e-18).unwrap_or(0);
        let phase = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let coeffs = orders[..=cutoff]
            .iter()
            .enumerate()
            .map(|(k, &b)| phase[k % 4] * b)
            .collect();
        Ok(Self { phi_d, coeffs })
    }

    pub fn phi_d(&self) -> f64 {
        self.phi_d
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of order `k`; `c₋ₖ = cₖ`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.coeffs
            .get(k.unsigned_abs() as usize)
            .copied()
            .unwrap_or_default()
    }

    /// Applies the kick without the leakage check.
    pub fn apply_unchecked(&self, state: &RotorState) -> RotorState {
        let len = state.amps.len() as i64;
        let cut = self.cutoff() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); state.amps.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            let i = i as i64;
            let lo = (i - cut).max(0);
            let hi = (i + cut).min(len - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for m in lo..=hi {
                acc += self.coeffs[(i - m).unsigned_abs() as usize] * state.amps[m as usize];
            }
            *slot = acc;
        }
        RotorState {
            beta: state.beta,
            n_min: state.n_min,
            amps: out,
        }
    }

    pub fn apply(&self, state: &RotorState) -> Result<RotorState> {
        let out = self.apply_unchecked(state);
        out.check_leakage(LEAKAGE_TOLERANCE)?;
        Ok(out)
    }
}

pub fn apply_kick(state: &RotorState, phi_d: f64) -> Result<RotorState> {
    KickOperator::new(phi_d)?.apply(state)
}

/// Free evolution over one period: `a_n ← e^{-iτ(n+β)²/2} a_n`.
pub fn apply_free(state: &RotorState, tau: f64) -> Result<RotorState> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("tau", "must be positive"));
    }
    let mut out = state.clone();
    free_in_place(&mut out, tau);
    Ok(out)
}

fn free_in_place(state: &mut RotorState, tau: f64) {
    let (n_min, beta) = (state.n_min, state.beta);
    for (i, a) in state.amps.iter_mut().enumerate() {
        let p = (n_min + i as i64) as f64 + beta;
        *a *= Complex64::from_polar(1.0, -0.5 * tau * p * p);
    }
}

/// Kick computed on a periodic position grid of `grid_n` points: transform
/// to `θ`, multiply by `e^{-iφ_d cos θ}`, transform back.
pub fn apply_kick_splitstep(state: &RotorState, phi_d: f64, grid_n: usize) -> Result<RotorState> {
    let width = (state.n_max() - state.n_min) as usize;
    if grid_n < 4 * width.max(1) {
        return Err(invalid(
            "grid-n",
            format!("must be at least {}", 4 * width.max(1)),
        ));
    }
    if !(phi_d >= 0.0 && phi_d.is_finite()) {
        return Err(invalid("phi-d", "must be non-negative"));
    }
    let m = grid_n as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid_n];
    for (i, a) in state.amps.iter().enumerate() {
        let n = state.n_min + i as i64;
        buf[n.rem_euclid(m) as usize] = *a;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(grid_n).process(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let theta = 2.0 * PI * j as f64 / grid_n as f64;
        *v *= Complex64::from_polar(1.0, -phi_d * theta.cos());
    }
    planner.plan_fft_forward(grid_n).process(&mut buf);
    let scale = 1.0 / grid_n as f64;
    let amps = (state.n_min..=state.n_max())
        .map(|n| buf[n.rem_euclid(m) as usize] * scale)
        .collect();
    let out = RotorState {
        beta: state.beta,
        n_min: state.n_min,
        amps,
    };
    out.check_leakage(LEAKAGE_TOLERANCE)?;
    Ok(out)
}

/// `(p = n + β, |a_n|²)` for every lattice site.
pub fn momentum_distribution(state: &RotorState) -> Vec<(f64, f64)> {
    state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| ((state.n_min + i as i64) as f64 + state.beta, a.norm_sqr()))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumOptions {
    /// Fixed basis half-width; disables automatic growth on leakage.
    pub basis_halfwidth: Option<usize>,
    pub record_distributions: bool,
}

/// Momentum distribution after kick `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub q: u32,
    pub entries: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub trajectory: Trajectory,
    pub distributions: Vec<Distribution>,
    pub final_state: RotorState,
}

/// `ceil((φ_d + 5)·kicks) + 10`.
pub fn default_halfwidth(params: &KickParams) -> usize {
    ((params.phi_d() + 5.0) * f64::from(params.kicks())).ceil() as usize + 10
}

/// Kick-then-free for `params.kicks()` periods, sampling after each free step.
pub fn evolve(params: &KickParams, options: &QuantumOptions) -> Result<QuantumRun> {
    match options.basis_halfwidth {
        Some(h) => evolve_with_basis(params, options, h),
        None => evolve_growing(params, options, default_halfwidth(params)),
    }
}

pub(crate) fn evolve_growing(
    params: &KickParams,
    options: &QuantumOptions,
    start: usize,
) -> Result<QuantumRun> {
    const MAX_HALFWIDTH: usize = 1 << 22;
    let mut h = start;
    loop {
        match evolve_with_basis(params, options, h) {
            Err(Error::Leakage { .. }) if h < MAX_HALFWIDTH => h *= 2,
            other => return other,
        }
    }
}

fn evolve_with_basis(
    params: &KickParams,
    options: &QuantumOptions,
    halfwidth: usize,
) -> Result<QuantumRun> {
    let op = KickOperator::new(params.phi_d())?;
    let mut state = init_superposition(params.gamma(), params.beta(), halfwidth)?;
    let mut moments = Vec::with_capacity(params.kicks() as usize + 1);
    let mut distributions = Vec::new();
    moments.push(state.moments());
    if options.record_distributions {
        distributions.push(Distribution {
            q: 0,
            entries: momentum_distribution(&state),
        });
    }
    for q in 1..=params.kicks() {
        state = op.apply(&state)?;
        free_in_place(&mut state, params.tau());
        moments.push(state.moments());
        if options.record_distributions {
            distributions.push(Distribution {
                q,
                entries: momentum_distribution(&state),
            });
        }
    }
    Ok(QuantumRun {
        trajectory: Trajectory::from_moments(*params, &moments),
        distributions,
        final_state: state,
    })
}
