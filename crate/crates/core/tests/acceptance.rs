//! Acceptance run: one line per criterion, then a single assertion over all of them.
//!
//! `cargo test -p ratchet-core --test acceptance -- --nocapture`

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratchet_core::eclassical::{self, build_ratchet_ensemble, EnsembleMode, Scheme};
use ratchet_core::output::{collapse_csv, grid_csv};
use ratchet_core::pendulum::{self, local_minima, scaling_curve, ScalingPoint};
use ratchet_core::quantum::{
    self, apply_free, apply_kick_splitstep, init_superposition, KickOperator, QuantumOptions,
    RotorState,
};
use ratchet_core::sweep::{curve_deviation, pairwise_deviation, run_collapse_suite, run_tau_scan};
use ratchet_core::{derive_params, Combo, Engine, SweepSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, budget: Option<Duration>) -> bool {
    budget.is_none_or(|b| elapsed <= b)
}

fn small_x_limit() -> Outcome {
    let f01 = pendulum::scaling_f(0.1, 1024, 1e-3).unwrap().f_over_x;
    let f0 = pendulum::scaling_f(0.0, 1024, 1e-3).unwrap().f_over_x;
    outcome(
        (f01 - 0.5).abs() <= 1e-3 && f0 == 0.5,
        format!("F/x(0.1) = {f01:.6}, F/x(0) = {f0}"),
    )
}

fn first_inversion(curve: &[ScalingPoint]) -> Outcome {
    let min = curve
        .iter()
        .filter(|p| (3.0..=8.0).contains(&p.x))
        .min_by(|a, b| a.f_over_x.total_cmp(&b.f_over_x))
        .unwrap();
    outcome(
        (min.x - 5.6).abs() <= 0.3 && min.f_over_x < 0.0,
        format!("argmin x = {:.3}, F/x = {:.4}", min.x, min.f_over_x),
    )
}

fn second_minimum(curve: &[ScalingPoint]) -> Outcome {
    let minima = local_minima(curve);
    let second = minima.get(1).map(|p| p.0);
    outcome(
        second.is_some_and(|x| (x - 13.0).abs() <= 1.0),
        format!(
            "local minima at {:?}",
            minima
                .iter()
                .map(|p| (p.0 * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        ),
    )
}

fn map_flow(curve: &[ScalingPoint]) -> Outcome {
    let map = eclassical::map_scaling_f(15.0, 1e-4, 1024).unwrap();
    let mut worst = 0.0f64;
    for &(x, f) in map.iter().filter(|(x, _)| *x <= 15.0) {
        let flow = pendulum::interpolate(curve, x).unwrap() * x;
        worst = worst.max((f - flow).abs());
    }
    outcome(
        worst <= 5e-3,
        format!("max |ΔF| = {worst:.2e} over {} map points", map.len()),
    )
}

fn scaling_collapse(curve: &[ScalingPoint]) -> Outcome {
    let spec = SweepSpec {
        combos: vec![
            Combo::new(1.8, 0.18),
            Combo::new(0.9, 0.36),
            Combo::new(3.6, 0.09),
        ],
        kicks: 40,
        ..SweepSpec::default()
    };
    let table = run_collapse_suite(&spec).unwrap();
    let series: Vec<Vec<(f64, f64)>> = table
        .runs
        .iter()
        .map(|r| {
            r.defined()
                .into_iter()
                .filter(|&(x, _)| x <= 10.0)
                .collect()
        })
        .collect();
    let pair = pairwise_deviation(&series, 10.0).unwrap_or(f64::INFINITY);
    let rms: Vec<f64> = series
        .iter()
        .map(|s| curve_deviation(s, curve).unwrap())
        .collect();
    outcome(
        pair < 0.05 && rms.iter().all(|r| *r < 0.05),
        format!("pairwise {pair:.2e}, rms {rms:.4?}"),
    )
}

fn resonance_law() -> Outcome {
    let mut worst = 0.0f64;
    for phi in [0.5, 1.8] {
        for gamma in [-FRAC_PI_2, 0.7, 2.5] {
            let p = derive_params(1, 0.0, phi, gamma, 0.5, 20).unwrap();
            let t = quantum::evolve(&p, &QuantumOptions::default())
                .unwrap()
                .trajectory;
            for q in 1..=20u32 {
                let expect = -(phi * f64::from(q) / 2.0) * gamma.sin();
                worst = worst.max((t.displacement(q) - expect).abs());
            }
        }
    }
    outcome(worst < 1e-8, format!("max error {worst:.2e}"))
}

fn quantum_vs_theory() -> Outcome {
    let p = derive_params(1, 0.18, 1.8, -FRAC_PI_2, 0.5, 15).unwrap();
    let q = quantum::evolve(&p, &QuantumOptions::default())
        .unwrap()
        .trajectory;
    let e = build_ratchet_ensemble(&p, 1024, EnsembleMode::Theory, Scheme::Quadrature).unwrap();
    let c = eclassical::evolve(&e, &p).unwrap();
    let worst = (1..=15)
        .map(|k| (q.points[k].scaled_current.unwrap() - c.points[k].scaled_current.unwrap()).abs())
        .fold(0.0, f64::max);
    outcome(worst < 0.1, format!("max |Δ| = {worst:.4} for q ≤ 15"))
}

/// tau, most negative value in x in [3, 8], deviation from F/x for x <= 10
type RowStat = (f64, Option<f64>, f64);

fn crossover(curve: &[ScalingPoint]) -> Outcome {
    let spec = SweepSpec {
        engine: Engine::Quantum,
        tau_rows: vec![0.3, PI, TAU - 0.3],
        kicks: 30,
        parallelism: 3,
        ..SweepSpec::default()
    };
    let grid = run_tau_scan(&spec).unwrap();
    let stats: Vec<RowStat> = grid
        .rows
        .iter()
        .map(|r| {
            let near: Vec<_> = r.series().into_iter().filter(|&(x, _)| x <= 10.0).collect();
            (
                r.tau,
                r.min_in(3.0, 8.0),
                curve_deviation(&near, curve).unwrap(),
            )
        })
        .collect();
    let (edges, mid): (Vec<&RowStat>, Vec<_>) =
        stats.iter().partition(|s| (s.0 - PI).abs() > 1e-12);
    let near_ok = edges.iter().all(|s| s.1.is_some_and(|m| m < 0.0));
    let near_dev = edges.iter().map(|s| s.2).fold(0.0, f64::max);
    let mid = mid[0];
    let mid_ok = mid.1.is_none_or(|m| m >= -0.05) || mid.2 >= 3.0 * near_dev;
    let detail = stats
        .iter()
        .map(|(t, m, d)| format!("τ={t:.3}: min {:.4}, dev {d:.4}", m.unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(near_ok && mid_ok, detail)
}

fn random_state(rng: &mut ChaCha8Rng) -> RotorState {
    let h = 256i64;
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * h as usize];
    for n in -200..200 {
        amps[(n + h) as usize] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    let beta = rng.gen_range(0.0..1.0);
    RotorState::from_amplitudes(beta, -h, amps).unwrap()
}

fn unitarity() -> Outcome {
    let p = derive_params(1, 0.37, 1.8, 0.9, 0.3141, 100).unwrap();
    let op = KickOperator::new(p.phi_d()).unwrap();
    let mut s = init_superposition(p.gamma(), p.beta(), quantum::default_halfwidth(&p)).unwrap();
    let bits = s.beta().to_bits();
    let mut beta_ok = true;
    for _ in 0..100 {
        s = apply_free(&op.apply(&s).unwrap(), p.tau()).unwrap();
        beta_ok &= s.beta().to_bits() == bits;
    }
    let drift = (s.norm_sqr() - 1.0).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut split = 0.0f64;
    for _ in 0..100 {
        let st = random_state(&mut rng);
        let a = op.apply(&st).unwrap();
        let b = apply_kick_splitstep(&st, p.phi_d(), 2048).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            split = split.max((x - y).norm());
        }
    }

    let mut zero = 0.0f64;
    for (ell, eps) in [(1, 0.18), (1, -0.4), (2, 0.9), (0, 1.3)] {
        let p = derive_params(ell, eps, 1.8, 0.0, 0.5, 30).unwrap();
        let q = quantum::evolve(&p, &QuantumOptions::default())
            .unwrap()
            .trajectory;
        let e =
            build_ratchet_ensemble(&p, 1024, EnsembleMode::Physical, Scheme::Quadrature).unwrap();
        let c = eclassical::evolve(&e, &p).unwrap();
        for k in 0..=30 {
            zero = zero
                .max(q.displacement(k).abs())
                .max(c.displacement(k).abs());
        }
    }
    outcome(
        drift < 1e-8 && beta_ok && split <= 1e-10 && zero <= 1e-6,
        format!("norm drift {drift:.1e}, β constant {beta_ok}, split-step {split:.1e}, γ=0 current {zero:.1e}"),
    )
}

fn determinism() -> Outcome {
    let mut spec = SweepSpec {
        combos: vec![
            Combo::new(1.8, 0.18),
            Combo::new(0.9, 0.36),
            Combo::new(3.6, 0.09),
        ],
        monte_carlo: true,
        seed: 42,
        kicks: 25,
        ..SweepSpec::default()
    };
    let runs: Vec<String> = [1, 1, 4]
        .iter()
        .map(|&n| {
            spec.parallelism = n;
            collapse_csv(&run_collapse_suite(&spec).unwrap(), &[])
        })
        .collect();
    let mut grid = SweepSpec {
        engine: Engine::Quantum,
        tau_rows: vec![0.3, 2.0, PI, TAU - 0.3, TAU + 0.18],
        kicks: 15,
        ..SweepSpec::default()
    };
    let grids: Vec<String> = [1, 1, 5]
        .iter()
        .map(|&n| {
            grid.parallelism = n;
            grid_csv(&run_tau_scan(&grid).unwrap()).unwrap()
        })
        .collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]) && grids.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "collapse {} bytes, grid {} bytes",
            runs[0].len(),
            grids[0].len()
        ),
    )
}

#[test]
fn acceptance() {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let mut results = Vec::new();
    let mut record = |name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let pass = o.pass && within(elapsed, budget);
        println!(
            "{} {name} ({:.2}s{}) — {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.map_or(String::new(), |b| format!(" / {}s", b.as_secs())),
            o.detail
        );
        results.push((name.to_string(), pass));
    };

    record("small-x limit", secs(1), &mut small_x_limit);
    let mut curve = Vec::new();
    record("first inversion landmark", secs(30), &mut || {
        curve = scaling_curve(20.0, 401, 1024, 1e-3).unwrap();
        first_inversion(&curve)
    });
    record("second theory minimum", None, &mut || {
        second_minimum(&curve)
    });
    record("map/flow equivalence", None, &mut || map_flow(&curve));
    record("scaling collapse", secs(60), &mut || {
        scaling_collapse(&curve)
    });
    record("exact resonance law", secs(10), &mut resonance_law);
    record("quantum vs epsilon-classical", None, &mut quantum_vs_theory);
    record("crossover breakdown", secs(300), &mut || crossover(&curve));
    record("unitarity and conservation", None, &mut unitarity);
    record("determinism", None, &mut determinism);

    let failed: Vec<_> = results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    assert!(failed.is_empty(), "failed: {failed:?}");
}
