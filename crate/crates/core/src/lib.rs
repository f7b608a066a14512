//! Simulation and analysis of the kicked-rotor atomic ratchet.
//!
//! * [`params`]: dimensionless parameters, unit conversion, initial density.
//! * [`eclassical`]: the epsilon-classical map over weighted ensembles.
//! * [`pendulum`]: the pendulum-limit scaling function `F(x)`.
//! * [`quantum`]: exact momentum-lattice evolution at fixed quasi-momentum.
//! * [`sweep`]: collapse suites and the pulse-period crossover grid.
//! * [`output`]: CSV/JSON schemas.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eclassical;
pub mod error;
pub mod output;
pub mod params;
pub mod pendulum;
pub mod quantum;
pub mod sweep;
pub mod trajectory;

pub use eclassical::{Ensemble, EnsembleMode, MapParticle, Scheme};
pub use error::{Error, Result};
pub use params::{derive_params, InitialDensity, KickParams, PhysicalUnits};
pub use pendulum::{PendulumState, ScalingPoint};
pub use quantum::{QuantumOptions, RotorState};
pub use sweep::{Combo, Engine, GridResult, SweepSpec};
pub use trajectory::{Trajectory, TrajectoryPoint};
