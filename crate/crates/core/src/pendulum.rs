//! Continuous-time pendulum limit of the map and the ratchet scaling
//! function `F(x) = (1/2π) ∫ sin θ₀ · J'(θ₀, J'₀ = 0, x) dθ₀`.
//!
//! The flow `dθ/ds = J'`, `dJ'/ds = sin θ` conserves `H' = J'²/2 + cos θ`.
//! Integration uses classical RK4 on a fixed step grid `s = n·dt`; landing on
//! an arbitrary `x` takes one shortened step from the last grid point, so a
//! curve evaluated incrementally reproduces single-point evaluations bit for
//! bit.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::params::KickParams;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_QUAD_N: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub jp: f64,
}

impl PendulumState {
    pub fn energy(&self) -> f64 {
        0.5 * self.jp * self.jp + self.theta.cos()
    }

    #[inline]
    fn rk4(self, h: f64) -> Self {
        let (t, j) = (self.theta, self.jp);
        let (k1t, k1j) = (j, t.sin());
        let (k2t, k2j) = (j + 0.5 * h * k1j, (t + 0.5 * h * k1t).sin());
        let (k3t, k3j) = (j + 0.5 * h * k2j, (t + 0.5 * h * k2t).sin());
        let (k4t, k4j) = (j + h * k3j, (t + h * k3t).sin());
        Self {
            theta: t + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
            jp: j + h / 6.0 * (k1j + 2.0 * k2j + 2.0 * k3j + k4j),
        }
    }
}

/// Sample of the scaling curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub x: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "F_over_x")]
    pub f_over_x: f64,
}

impl ScalingPoint {
    fn new(x: f64, f: f64) -> Self {
        let f_over_x = if x > 0.0 { f / x } else { 0.5 };
        Self { x, f, f_over_x }
    }
}

/// Integrator position on the global step grid plus the committed state.
#[derive(Clone, Copy)]
struct GridStepper {
    state: PendulumState,
    steps: u64,
    dt: f64,
}

impl GridStepper {
    fn new(state: PendulumState, dt: f64) -> Self {
        Self {
            state,
            steps: 0,
            dt,
        }
    }

    /// Advances the committed state to the last grid point `≤ x` and returns
    /// the state at exactly `x`.
    fn at(&mut self, x: f64) -> PendulumState {
        let n = (x / self.dt).floor() as u64;
        while self.steps < n {
            self.state = self.state.rk4(self.dt);
            self.steps += 1;
        }
        let rest = x - n as f64 * self.dt;
        if rest > 0.0 {
            self.state.rk4(rest)
        } else {
            self.state
        }
    }
}

fn check_dt(x: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(invalid("x", "must be non-negative"));
    }
    if x > 0.0 && dt > x / 10.0 {
        return Err(invalid(
            "dt",
            format!("must not exceed x/10 = {}", x / 10.0),
        ));
    }
    Ok(())
}

/// State of the pendulum flow at scaled time `x`.
pub fn pendulum_flow(theta0: f64, jp0: f64, x: f64, dt: f64) -> Result<PendulumState> {
    check_dt(x, dt)?;
    let mut stepper = GridStepper::new(
        PendulumState {
            theta: theta0,
            jp: jp0,
        },
        dt,
    );
    Ok(stepper.at(x))
}

fn nodes(quad_n: usize) -> impl Iterator<Item = f64> + Clone {
    let h = 2.0 * PI / quad_n as f64;
    // midpoint grid keeps θ₀ = 0 (the unstable equilibrium) off the nodes
    (0..quad_n).map(move |i| -PI + h * (i as f64 + 0.5))
}

fn check_quad(quad_n: usize) -> Result<()> {
    if quad_n < 256 {
        return Err(invalid("quad-n", "must be at least 256"));
    }
    Ok(())
}

fn effective_dt(x: f64, dt: f64) -> f64 {
    if x > 0.0 {
        dt.min(x / 10.0)
    } else {
        dt
    }
}

/// `F(x)` and `F(x)/x` by trapezoid quadrature over pendulum trajectories.
pub fn scaling_f(x: f64, quad_n: usize, dt: f64) -> Result<ScalingPoint> {
    check_quad(quad_n)?;
    if x == 0.0 {
        check_dt(0.0, dt)?;
        return Ok(ScalingPoint::new(0.0, 0.0));
    }
    let dt = effective_dt(x, dt);
    check_dt(x, dt)?;
    let terms: Vec<f64> = nodes(quad_n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|theta0| {
            let end = GridStepper::new(
                PendulumState {
                    theta: theta0,
                    jp: 0.0,
                },
                dt,
            )
            .at(x);
            theta0.sin() * end.jp
        })
        .collect();
    Ok(ScalingPoint::new(
        x,
        terms.iter().sum::<f64>() / quad_n as f64,
    ))
}

/// `F(x)` with the node count doubled from `quad_n` until successive
/// estimates differ by less than `tol`. Returns the point and the node count.
pub fn scaling_f_certified(
    x: f64,
    quad_n: usize,
    dt: f64,
    tol: f64,
) -> Result<(ScalingPoint, usize)> {
    const MAX_N: usize = 1 << 17;
    let mut n = quad_n;
    let mut prev = scaling_f(x, n, dt)?;
    loop {
        let next = scaling_f(x, 2 * n, dt)?;
        n *= 2;
        if (next.f - prev.f).abs() < tol || n >= MAX_N {
            return Ok((next, n));
        }
        prev = next;
    }
}

/// Uniform grid of `steps` points on `[0, x_max]`.
pub fn scaling_curve(
    x_max: f64,
    steps: usize,
    quad_n: usize,
    dt: f64,
) -> Result<Vec<ScalingPoint>> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(invalid("x-max", "must be positive"));
    }
    if steps < 2 {
        return Err(invalid("steps", "must be at least 2"));
    }
    check_quad(quad_n)?;
    let xs: Vec<f64> = (0..steps)
        .map(|i| x_max * i as f64 / (steps - 1) as f64)
        .collect();
    let dt = effective_dt(xs[1], dt);
    check_dt(xs[1], dt)?;

    let rows: Vec<Vec<f64>> = nodes(quad_n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|theta0| {
            let s0 = theta0.sin();
            let mut stepper = GridStepper::new(
                PendulumState {
                    theta: theta0,
                    jp: 0.0,
                },
                dt,
            );
            xs[1..].iter().map(|&x| s0 * stepper.at(x).jp).collect()
        })
        .collect();

    let mut out = Vec::with_capacity(steps);
    out.push(ScalingPoint::new(0.0, 0.0));
    for (k, &x) in xs.iter().enumerate().skip(1) {
        let f = rows.iter().map(|r| r[k - 1]).sum::<f64>() / quad_n as f64;
        out.push(ScalingPoint::new(x, f));
    }
    Ok(out)
}

/// One-parameter prediction `⟨p⟩ = -φ_d q sin γ · F(x)/x` after `q` kicks.
pub fn predict_mean_momentum(params: &KickParams, q: u32) -> Result<f64> {
    predict_mean_momentum_with(params, q, DEFAULT_QUAD_N, DEFAULT_DT)
}

pub fn predict_mean_momentum_with(
    params: &KickParams,
    q: u32,
    quad_n: usize,
    dt: f64,
) -> Result<f64> {
    if q == 0 {
        return Err(invalid("q", "must be at least 1"));
    }
    if params.epsilon() == 0.0 {
        return Err(invalid(
            "epsilon",
            "must be non-zero for the scaling prediction",
        ));
    }
    let point = scaling_f(params.scaling_x(q), quad_n, dt)?;
    Ok(-params.phi_d() * f64::from(q) * params.gamma().sin() * point.f_over_x)
}

/// Linear interpolation of `F(x)/x` from a curve sorted by `x`.
pub fn interpolate(curve: &[ScalingPoint], x: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if x < first.x || x > last.x {
        return None;
    }
    let i = curve.partition_point(|p| p.x < x);
    if i == 0 {
        return Some(first.f_over_x);
    }
    let (a, b) = (curve[i - 1], curve[i]);
    let t = (x - a.x) / (b.x - a.x);
    Some(a.f_over_x + t * (b.f_over_x - a.f_over_x))
}

/// Interior local minima of `F(x)/x` as `(x, value)`.
pub fn local_minima(curve: &[ScalingPoint]) -> Vec<(f64, f64)> {
    curve
        .windows(3)
        .filter(|w| w[1].f_over_x < w[0].f_over_x && w[1].f_over_x < w[2].f_over_x)
        .map(|w| (w[1].x, w[1].f_over_x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn equilibrium_stays_put() {
        let s = pendulum_flow(0.0, 0.0, 7.0, 1e-3).unwrap();
        assert_eq!((s.theta, s.jp), (0.0, 0.0));
    }

    #[test]
    fn short_time_kick() {
        let s = pendulum_flow(FRAC_PI_2, 0.0, 0.01, 1e-3).unwrap();
        assert_abs_diff_eq!(s.jp, 0.01, epsilon = 1e-6);
    }

    #[test]
    fn energy_drift_is_small() {
        let start = PendulumState {
            theta: 2.0,
            jp: 0.0,
        };
        let end = pendulum_flow(2.0, 0.0, 5.0, 1e-3).unwrap();
        assert!((end.energy() - start.energy()).abs() < 1e-8);
        for theta0 in [0.05, 1.0, 2.5, 3.1, -0.7] {
            let s0 = PendulumState {
                theta: theta0,
                jp: 0.0,
            };
            let s = pendulum_flow(theta0, 0.0, 20.0, 1e-3).unwrap();
            assert!((s.energy() - s0.energy()).abs() < 1e-8, "θ₀ = {theta0}");
        }
    }

    #[test]
    fn lands_exactly_on_x() {
        // x not a multiple of dt: partial final step
        let a = pendulum_flow(1.0, 0.0, 0.0105, 1e-3).unwrap();
        let b = pendulum_flow(1.0, 0.0, 0.0105, 5e-5).unwrap();
        assert_abs_diff_eq!(a.jp, b.jp, epsilon = 1e-12);
    }

    #[test]
    fn rejects_coarse_step() {
        assert!(pendulum_flow(1.0, 0.0, 0.05, 0.01).is_err());
        assert!(pendulum_flow(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(pendulum_flow(1.0, 0.0, -1.0, 1e-3).is_err());
    }

    #[test]
    fn small_x_limit() {
        let p = scaling_f(0.0, 1024, 1e-3).unwrap();
        assert_eq!((p.f, p.f_over_x), (0.0, 0.5));
        let p = scaling_f(0.1, 1024, 1e-3).unwrap();
        assert_abs_diff_eq!(p.f_over_x, 0.5, epsilon = 1e-3);
        assert!(scaling_f(1.0, 128, 1e-3).is_err());
    }

    #[test]
    fn curve_matches_single_points() {
        let curve = scaling_curve(1.0, 21, 256, 1e-3).unwrap();
        assert_eq!(curve.len(), 21);
        assert!(curve.windows(2).all(|w| w[0].x < w[1].x));
        assert_eq!(curve[20].x, 1.0);
        let single = scaling_f(curve[2].x, 256, 1e-3).unwrap();
        assert_eq!(single, curve[2]);
        let single = scaling_f(curve[17].x, 256, 1e-3).unwrap();
        assert_eq!(single, curve[17]);
        assert!(scaling_curve(1.0, 1, 256, 1e-3).is_err());
        assert!(scaling_curve(0.0, 10, 256, 1e-3).is_err());
    }

    #[test]
    fn quadrature_converges() {
        let (p, n) = scaling_f_certified(12.0, 1024, 1e-3, 1e-4).unwrap();
        let base = scaling_f(12.0, 1024, 1e-3).unwrap();
        assert!(n >= 2048);
        assert!((p.f - base.f).abs() < 1e-3);
    }

    #[test]
    fn prediction_limits() {
        let p = derive_params(1, 0.18, 1.8, 0.0, 0.5, 10).unwrap();
        assert_eq!(predict_mean_momentum(&p, 3).unwrap(), 0.0);

        let p = derive_params(1, 1e-6, 1.8, -FRAC_PI_2, 0.5, 10).unwrap();
        let v = predict_mean_momentum(&p, 2).unwrap();
        assert_abs_diff_eq!(v, 1.8 * 2.0 / 2.0, epsilon = 1e-4);

        let p = derive_params(1, 0.18, 1.8, -FRAC_PI_2, 0.5, 10).unwrap();
        assert!(predict_mean_momentum(&p, 2).unwrap() > 0.0);
        assert!(predict_mean_momentum(&p, 10).unwrap() < 0.0);
        assert!(predict_mean_momentum(&p, 0).is_err());
    }

    #[test]
    fn interpolation() {
        let curve = vec![
            ScalingPoint::new(0.0, 0.0),
            ScalingPoint::new(1.0, 0.3),
            ScalingPoint::new(2.0, 0.2),
        ];
        assert_eq!(interpolate(&curve, 0.0), Some(0.5));
        assert_abs_diff_eq!(interpolate(&curve, 0.5).unwrap(), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(interpolate(&curve, 1.5).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(interpolate(&curve, 2.5), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn prediction_is_odd_in_gamma(gamma in -3.1f64..3.1, q in 1u32..12) {
                let a = derive_params(1, 0.18, 1.8, gamma, 0.5, 12).unwrap();
                let b = derive_params(1, 0.18, 1.8, -gamma, 0.5, 12).unwrap();
                let pa = predict_mean_momentum_with(&a, q, 256, 1e-2).unwrap();
                let pb = predict_mean_momentum_with(&b, q, 256, 1e-2).unwrap();
                prop_assert_eq!(pa, -pb);
            }
        }
    }
}
