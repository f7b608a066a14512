use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use ratchet_core::eclassical::{self, build_ratchet_ensemble, Scheme, DEFAULT_ENSEMBLE_N};
use ratchet_core::output::{self, format_float};
use ratchet_core::quantum::{self, QuantumOptions};
use ratchet_core::sweep::{run_collapse_suite, run_energy_collapse, run_tau_scan};
use ratchet_core::{
    derive_params, pendulum, Combo, Engine, EnsembleMode, KickParams, SweepSpec, Trajectory,
};
use tempfile::NamedTempFile;

use crate::args::{
    BasisArgs, CollapseArgs, Command, EnsembleArgs, Format, KickArgs, OutputArgs, PhaseArgs,
    QuantumArgs, RatchetArgs, ScalingArgs, TauScanArgs,
};
use crate::config::Config;

const MIN_ENSEMBLE_N: usize = 64;
const MIN_BASIS_HALFWIDTH: usize = 8;

/// Why a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Engine(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Engine(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (Self::Usage(e) | Self::Engine(e) | Self::Io(e)) = self;
        write!(f, "{e:#}")
    }
}

type Outcome<T> = Result<T, Failure>;

trait Classify<T> {
    fn usage(self) -> Outcome<T>;
    fn engine(self) -> Outcome<T>;
    fn io(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Outcome<T> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn engine(self) -> Outcome<T> {
        self.map_err(|e| Failure::Engine(e.into()))
    }
    fn io(self) -> Outcome<T> {
        self.map_err(|e| Failure::Io(e.into()))
    }
}

fn usage_error(msg: impl fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

/// Destination of one output document. Files are staged in a temporary file
/// beside the target and renamed into place only once complete.
struct Sink {
    staged: Option<(PathBuf, NamedTempFile)>,
}

impl Sink {
    fn prepare(path: Option<&Path>) -> Outcome<Self> {
        let Some(path) = path else {
            return Ok(Self { staged: None });
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let tmp = NamedTempFile::new_in(dir)
            .with_context(|| format!("cannot write to {}", path.display()))
            .io()?;
        Ok(Self {
            staged: Some((path.to_path_buf(), tmp)),
        })
    }

    fn commit(self, text: &str) -> Outcome<()> {
        match self.staged {
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|()| out.flush())
                    .context("cannot write to stdout")
                    .io()
            }
            Some((path, mut tmp)) => {
                tmp.write_all(text.as_bytes())
                    .and_then(|()| tmp.as_file().sync_all())
                    .with_context(|| format!("cannot write {}", path.display()))
                    .io()?;
                tmp.persist(&path)
                    .with_context(|| format!("cannot move output into {}", path.display()))
                    .io()?;
                Ok(())
            }
        }
    }
}

struct Output {
    sink: Sink,
    format: Format,
}

fn output(args: &OutputArgs, cfg: &Config) -> Outcome<Output> {
    let path = args.output.clone().or_else(|| cfg.output.clone());
    Ok(Output {
        sink: Sink::prepare(path.as_deref())?,
        format: args.format.or(cfg.format).unwrap_or(Format::Csv),
    })
}

fn gamma(phase: &PhaseArgs, cfg: &Config) -> f64 {
    phase
        .gamma
        .or(phase.gamma_deg.map(f64::to_radians))
        .or(cfg.gamma)
        .unwrap_or(-FRAC_PI_2)
}

fn kick_params(k: &KickArgs, cfg: &Config) -> Outcome<KickParams> {
    derive_params(
        k.ell.or(cfg.ell).unwrap_or(1),
        k.epsilon.or(cfg.epsilon).unwrap_or(0.18),
        k.phi_d.or(cfg.phi_d).unwrap_or(1.8),
        gamma(&k.phase, cfg),
        k.beta.or(cfg.beta).unwrap_or(0.5),
        k.kicks.or(cfg.kicks).unwrap_or(40),
    )
    .usage()
}

fn engine(flag: Option<&str>, cfg: &Config, allowed: &[Engine]) -> Outcome<Engine> {
    let name = flag.or(cfg.engine.as_deref()).unwrap_or("eclassical");
    let engine: Engine = name.parse().usage()?;
    if !allowed.contains(&engine) {
        return Err(usage_error(format!(
            "engine {engine} is not available here"
        )));
    }
    Ok(engine)
}

struct EnsembleChoice {
    mode: EnsembleMode,
    n: usize,
    monte_carlo: bool,
    seed: u64,
}

fn ensemble(e: &EnsembleArgs, cfg: &Config) -> Outcome<EnsembleChoice> {
    let mode = match &e.mode {
        Some(m) => m.parse().usage()?,
        None => EnsembleMode::Theory,
    };
    let n = e
        .ensemble_n
        .or(cfg.ensemble_n)
        .unwrap_or(DEFAULT_ENSEMBLE_N);
    if n < MIN_ENSEMBLE_N {
        return Err(usage_error(format!(
            "ensemble-n must be at least {MIN_ENSEMBLE_N}"
        )));
    }
    Ok(EnsembleChoice {
        mode,
        n,
        monte_carlo: e.monte_carlo,
        seed: e.seed.or(cfg.seed).unwrap_or(0),
    })
}

fn quantum_options(b: &BasisArgs) -> Outcome<QuantumOptions> {
    if let Some(h) = b.basis_halfwidth {
        if h < MIN_BASIS_HALFWIDTH {
            return Err(usage_error(format!(
                "basis-halfwidth must be at least {MIN_BASIS_HALFWIDTH}"
            )));
        }
    }
    Ok(QuantumOptions {
        basis_halfwidth: b.basis_halfwidth,
        ..QuantumOptions::default()
    })
}

fn parallelism() -> Outcome<usize> {
    match std::env::var("RATCHET_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage_error("RATCHET_THREADS must be a positive integer")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn param_metadata(p: &KickParams) -> Vec<(&'static str, String)> {
    vec![
        ("phi_d", format_float(p.phi_d())),
        ("epsilon", format_float(p.epsilon())),
        ("ell", p.ell().to_string()),
        ("tau", format_float(p.tau())),
        ("gamma", format_float(p.gamma())),
        ("beta", format_float(p.beta())),
        ("kicks", p.kicks().to_string()),
    ]
}

fn version() -> (&'static str, String) {
    ("code_version", env!("CARGO_PKG_VERSION").to_string())
}

fn emit_trajectory(t: &Trajectory, metadata: &[(&str, String)], out: Output) -> Outcome<()> {
    let text = match out.format {
        Format::Csv => output::trajectory_csv(t, metadata),
        Format::Json => output::trajectory_json(t, metadata).engine()?,
    };
    out.sink.commit(&text)
}

pub fn run(command: &Command, cfg: &Config) -> Outcome<()> {
    match command {
        Command::ScalingCurve(a) => scaling_curve(a, cfg),
        Command::Ratchet(a) => ratchet(a, cfg),
        Command::Quantum(a) => quantum_run(a, cfg),
        Command::TauScan(a) => tau_scan(a, cfg),
        Command::Collapse(a) => collapse(a, cfg, false),
        Command::EnergyCollapse(a) => collapse(a, cfg, true),
    }
}

fn scaling_curve(a: &ScalingArgs, cfg: &Config) -> Outcome<()> {
    if !(a.x_max > 0.0 && a.x_max.is_finite()) {
        return Err(usage_error("x-max must be positive"));
    }
    if a.steps < 2 {
        return Err(usage_error("steps must be at least 2"));
    }
    if a.quad_n < 256 {
        return Err(usage_error("quad-n must be at least 256"));
    }
    if !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(usage_error("dt must be positive"));
    }
    let out = output(&a.out, cfg)?;
    let curve = pendulum::scaling_curve(a.x_max, a.steps, a.quad_n, a.dt).engine()?;
    let text = match out.format {
        Format::Csv => output::scaling_curve_csv(&curve),
        Format::Json => output::scaling_curve_json(&curve).engine()?,
    };
    out.sink.commit(&text)
}

fn ratchet(a: &RatchetArgs, cfg: &Config) -> Outcome<()> {
    let params = kick_params(&a.kick, cfg)?;
    let engine = engine(
        a.engine.as_deref(),
        cfg,
        &[Engine::Eclassical, Engine::Quantum],
    )?;
    if engine == Engine::Quantum {
        let options = quantum_options(&a.basis)?;
        let out = output(&a.out, cfg)?;
        return quantum_trajectory(&params, options, out, None);
    }
    if params.is_quantum_only() {
        return Err(Failure::Usage(ratchet_core::Error::QuantumOnly.into()));
    }
    let choice = ensemble(&a.ensemble, cfg)?;
    let out = output(&a.out, cfg)?;
    let scheme = if choice.monte_carlo {
        Scheme::MonteCarlo { seed: choice.seed }
    } else {
        Scheme::Quadrature
    };
    let ens = build_ratchet_ensemble(&params, choice.n, choice.mode, scheme).engine()?;
    let t = eclassical::evolve(&ens, &params).engine()?;

    let mut meta = vec![("engine", Engine::Eclassical.to_string())];
    meta.extend(param_metadata(&params));
    meta.push(("mode", choice.mode.to_string()));
    meta.push(("ensemble_n", choice.n.to_string()));
    meta.push((
        "scheme",
        if choice.monte_carlo {
            format!("monte-carlo seed={}", choice.seed)
        } else {
            "quadrature".into()
        },
    ));
    meta.push(version());
    emit_trajectory(&t, &meta, out)
}

fn quantum_run(a: &QuantumArgs, cfg: &Config) -> Outcome<()> {
    let params = kick_params(&a.kick, cfg)?;
    let options = quantum_options(&a.basis)?;
    let out = output(&a.out, cfg)?;
    let dist = match &a.distribution {
        Some(p) => Some(Sink::prepare(Some(p))?),
        None => None,
    };
    quantum_trajectory(&params, options, out, dist)
}

fn quantum_trajectory(
    params: &KickParams,
    mut options: QuantumOptions,
    out: Output,
    dist: Option<Sink>,
) -> Outcome<()> {
    options.record_distributions = dist.is_some();
    let run = quantum::evolve(params, &options).engine()?;

    let mut meta = vec![("engine", Engine::Quantum.to_string())];
    meta.extend(param_metadata(params));
    meta.push(("basis_halfwidth", run.final_state.halfwidth().to_string()));
    meta.push((
        "convention",
        "kick then free evolution; sampled after free evolution".into(),
    ));
    meta.push(version());
    emit_trajectory(&run.trajectory, &meta, out)?;
    if let Some(sink) = dist {
        sink.commit(&output::distribution_csv(&run.distributions, &meta))?;
    }
    Ok(())
}

fn tau_scan(a: &TauScanArgs, cfg: &Config) -> Outcome<()> {
    if a.taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(usage_error("taus must be positive"));
    }
    let spec = SweepSpec {
        engine: Engine::Quantum,
        tau_rows: a.taus.clone(),
        phi_d: a.phi_d.or(cfg.phi_d).unwrap_or(1.8),
        gamma: gamma(&a.phase, cfg),
        beta: a.beta.or(cfg.beta).unwrap_or(0.5),
        kicks: a.kicks.or(cfg.kicks).unwrap_or(40),
        seed: a.seed.or(cfg.seed).unwrap_or(0),
        quantum: quantum_options(&a.basis)?,
        parallelism: parallelism()?,
        ..SweepSpec::default()
    };
    derive_params(0, 1.0, spec.phi_d, spec.gamma, spec.beta, spec.kicks).usage()?;
    let out = output(&a.out, cfg)?;
    let grid = run_tau_scan(&spec).engine()?;
    let text = match out.format {
        Format::Csv => output::grid_csv(&grid),
        Format::Json => output::grid_json(&grid),
    }
    .engine()?;
    out.sink.commit(&text)
}

fn parse_combo(s: &str) -> Outcome<Combo> {
    let bad = || usage_error(format!("combos entry `{s}` is not phi_d:epsilon[:gamma]"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match parts[..] {
        [phi, eps] => Ok(Combo::new(phi, eps)),
        [phi, eps, g] => Ok(Combo::new(phi, eps).with_gamma(g)),
        _ => Err(bad()),
    }
}

fn collapse(a: &CollapseArgs, cfg: &Config, energy: bool) -> Outcome<()> {
    let combos = if a.combos.is_empty() {
        vec![
            Combo::new(1.8, 0.18),
            Combo::new(0.9, 0.36),
            Combo::new(3.6, 0.09),
        ]
    } else {
        a.combos
            .iter()
            .map(|s| parse_combo(s))
            .collect::<Outcome<_>>()?
    };
    let allowed: &[Engine] = if energy {
        &[Engine::Eclassical]
    } else {
        &[Engine::Eclassical, Engine::Quantum, Engine::Pendulum]
    };
    let engine = engine(a.engine.as_deref(), cfg, allowed)?;
    let choice = ensemble(&a.ensemble, cfg)?;
    let spec = SweepSpec {
        engine,
        combos,
        ell: a.ell.or(cfg.ell).unwrap_or(1),
        gamma: gamma(&a.phase, cfg),
        beta: a.beta.or(cfg.beta).unwrap_or(0.5),
        kicks: a.kicks.or(cfg.kicks).unwrap_or(40),
        ensemble_n: choice.n,
        mode: choice.mode,
        monte_carlo: choice.monte_carlo,
        seed: choice.seed,
        quantum: quantum_options(&a.basis)?,
        parallelism: parallelism()?,
        ..SweepSpec::default()
    };
    for c in &spec.combos {
        let p = derive_params(
            spec.ell,
            c.epsilon,
            c.phi_d,
            c.gamma.unwrap_or(spec.gamma),
            spec.beta,
            spec.kicks,
        )
        .usage()?;
        if engine != Engine::Quantum && p.is_quantum_only() {
            return Err(Failure::Usage(ratchet_core::Error::QuantumOnly.into()));
        }
    }
    let out = output(&a.out, cfg)?;
    let table = if energy {
        run_energy_collapse(&spec)
    } else {
        run_collapse_suite(&spec)
    }
    .engine()?;

    let meta = vec![
        ("engine", engine.to_string()),
        ("ell", spec.ell.to_string()),
        ("beta", format_float(spec.beta)),
        ("kicks", spec.kicks.to_string()),
        ("mode", spec.mode.to_string()),
        ("ensemble_n", spec.ensemble_n.to_string()),
        ("seed", spec.seed.to_string()),
        version(),
    ];
    let text = match out.format {
        Format::Csv => output::collapse_csv(&table, &meta),
        Format::Json => output::collapse_json(&table, &meta).engine()?,
    };
    // every family failing is an engine failure; partial failures are
    // reported inside the document
    if !table.runs.is_empty() && table.failed().len() == table.runs.len() {
        let first = table.runs[0]
            .outcome
            .as_ref()
            .err()
            .cloned()
            .unwrap_or_default();
        return Err(Failure::Engine(anyhow!("all families failed: {first}")));
    }
    out.sink.commit(&text)
}
