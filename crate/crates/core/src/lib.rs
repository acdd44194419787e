//! Deterministic simulator for swarm-based source localization.
//!
//! A set of agents spread over a planar map must jointly locate a target
//! they can only sense through noisy range estimates, and assemble there.
//! Each agent runs a neighborhood-best particle swarm update; who counts
//! as "neighborhood" in a given round is decided by the configured
//! networking scheme, and every successful radio transmission the scheme
//! needs is accounted for exactly:
//!
//! * [`comms::CommScheme::D2d`] — direct links limited to a coverage
//!   radius; a full information exchange costs `2*I*(I-1)` transmissions.
//! * [`comms::CommScheme::Cellular`] — a base station relays sessions
//!   between randomly paired agents; full exchange costs `4*I*(I-1)`.
//! * [`comms::CommScheme::DigitalTwin`] — agents offload state to
//!   server-side twins which share it for free; `2*I` per round.
//!
//! The crate is organized bottom-up: [`geometry`] and [`sensing`] provide
//! the vector math and the noisy range sensor, [`pso`] the per-agent
//! swarm update, [`comms`] the exchange topologies and their transmission
//! costs, [`engine`] a single seeded run, and [`montecarlo`] batches of
//! independent runs with parameter sweeps. [`config`], [`scenarios`] and
//! [`results`] back the `swarmloc` command-line tool.
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait; every public type defaults to `f64`, which is the lane the CLI
//! and the reproducibility guarantees use. Given the same master seed and
//! configuration, a run produces bit-identical output on every invocation
//! regardless of the parallelism level.

pub mod comms;
pub mod config;
pub mod engine;
pub mod geometry;
pub mod montecarlo;
pub mod pso;
pub mod results;
pub mod rng;
pub mod scenarios;
pub mod sensing;

use std::fmt;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::{Rng, RngCore};
use serde::{de::DeserializeOwned, Serialize};

pub use comms::{CommScheme, PartnerCount, RoundExchange};
pub use config::{load_batch_config, ConfigError};
pub use engine::{RunOptions, RunResult, ScenarioConfig, TerminationReason};
pub use geometry::{clamp_speed, distance, SpeedLimit, Vec2};
pub use montecarlo::{oracle_global_pso, run_batch, BatchConfig, BatchResult, SweepAxis};
pub use pso::{AgentState, BestRecord, PsoCoefficients, RandomWeighting, Report};
pub use rng::{RngStream, RunRng};
pub use sensing::RangeSensor;

/// Scalar type the simulator is generic over: `f32` or `f64`.
///
/// `f64` is the default type parameter everywhere and the only lane the
/// CLI exposes; `f32` exists for memory-bound experimentation.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// One uniform draw in `[0, 1)`.
    fn sample_unit<R: RngCore + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    fn sample_unit<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Real for f64 {
    fn sample_unit<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

/// Relative tolerance for scalar magnitude comparisons ([`geometry::clamp_speed`],
/// invariant checks). Large enough to absorb rounding of a single rescale,
/// small enough to be physically meaningless on a meters-scale map.
pub const REL_TOL: f64 = 1e-9;

/// `REL_TOL` converted into the working scalar type.
pub fn rel_tol<F: Real>() -> F {
    F::from_f64(REL_TOL).expect("REL_TOL representable in any Real")
}
