//! One full simulation run: placement, the per-round
//! sense → exchange → fuse → move loop, termination by round limit or
//! transmission budget, and metric recording.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comms::{CommScheme, CommsError};
use crate::geometry::{distance, SpeedLimit, Vec2};
use crate::pso::{AgentState, PsoCoefficients, RandomWeighting, ReportError};
use crate::rng::{RngStream, RunRng};
use crate::sensing::RangeSensor;
use crate::Real;

/// Complete description of one run. Serializes to and from the
/// `[scenario]` section of a config file; every field except `scheme` and
/// `agent_count` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: crate::Real")]
pub struct ScenarioConfig<F = f64> {
    /// Map extent in meters; agents start uniformly inside it.
    #[serde(default = "defaults::map_width")]
    pub map_width: F,
    #[serde(default = "defaults::map_height")]
    pub map_height: F,
    /// Number of agents `I`.
    pub agent_count: usize,
    /// Range-sensing noise standard deviation, meters.
    #[serde(default = "defaults::sigma")]
    pub sigma: F,
    /// Speed limit, meters per round.
    #[serde(default = "defaults::v_max")]
    pub v_max: F,
    /// Round limit `T`.
    #[serde(default = "defaults::max_rounds")]
    pub max_rounds: u32,
    /// Ceiling on total successful radio transmissions, if any.
    #[serde(default)]
    pub tx_budget: Option<u64>,
    /// How the budget gate treats the geometry-dependent D2D round cost.
    #[serde(default)]
    pub d2d_budget_mode: BudgetMode,
    #[serde(default = "defaults::master_seed")]
    pub master_seed: u64,
    /// Distribution of the update weights `r1`, `r2`.
    #[serde(default)]
    pub weighting: RandomWeighting,
    /// Target location the swarm must localize.
    #[serde(default = "defaults::target")]
    pub target: Vec2<F>,
    #[serde(default)]
    pub coeffs: PsoCoefficients<F>,
    pub scheme: CommScheme<F>,
}

mod defaults {
    use crate::geometry::Vec2;
    use crate::Real;

    pub fn map_width<F: Real>() -> F {
        F::from_f64(640.0).unwrap()
    }

    pub fn map_height<F: Real>() -> F {
        F::from_f64(600.0).unwrap()
    }

    pub fn target<F: Real>() -> Vec2<F> {
        Vec2::new(F::from_f64(400.0).unwrap(), F::from_f64(300.0).unwrap())
    }

    pub fn sigma<F: Real>() -> F {
        F::one()
    }

    pub fn v_max<F: Real>() -> F {
        F::from_f64(5.0).unwrap()
    }

    pub fn max_rounds() -> u32 {
        300
    }

    pub fn master_seed() -> u64 {
        42
    }
}

/// Budget gating for the D2D scheme, whose round cost depends on agent
/// geometry. `Realized` computes the actual exchange first and commits the
/// round only if it fits; `Conservative` stops as soon as the
/// full-connectivity worst case would not fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    #[default]
    Realized,
    Conservative,
}

/// A configuration bound violation, naming the offending value.
#[derive(Debug, Error, PartialEq)]
pub enum InvalidConfig {
    #[error("map_width must be finite and non-negative, got {0}")]
    MapWidth(f64),
    #[error("map_height must be finite and non-negative, got {0}")]
    MapHeight(f64),
    #[error("target ({x}, {y}) outside the map [0, {width}] x [0, {height}]")]
    TargetOutsideMap {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("agent_count must be at least 1")]
    AgentCount,
    #[error("sigma must be finite and non-negative, got {0}")]
    Sigma(f64),
    #[error("v_max must be finite and strictly positive, got {0}")]
    VMax(f64),
    #[error("coefficients must be non-negative and not both zero, got c1={c1}, c2={c2}")]
    Coefficients { c1: f64, c2: f64 },
    #[error("max_rounds must be at least 1")]
    MaxRounds,
    #[error("tx_budget must be at least 1 when set")]
    TxBudget,
    #[error("d2d radius_r must be finite and strictly positive, got {0}")]
    D2dRadius(f64),
    #[error("cellular partners_k={partners_k} outside 1..={max} for {agent_count} agents")]
    CellularPartners {
        partners_k: usize,
        max: usize,
        agent_count: usize,
    },
    #[error("expected {expected} initial positions, got {got}")]
    PositionCount { expected: usize, got: usize },
    #[error("initial positions must be finite")]
    PositionNotFinite,
}

impl<F: Real> ScenarioConfig<F> {
    /// Checks every invariant, reporting the first violated bound.
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let as_f64 = |v: F| v.to_f64().unwrap_or(f64::NAN);
        if !self.map_width.is_finite() || self.map_width < F::zero() {
            return Err(InvalidConfig::MapWidth(as_f64(self.map_width)));
        }
        if !self.map_height.is_finite() || self.map_height < F::zero() {
            return Err(InvalidConfig::MapHeight(as_f64(self.map_height)));
        }
        let inside = self.target.is_finite()
            && self.target.x >= F::zero()
            && self.target.x <= self.map_width
            && self.target.y >= F::zero()
            && self.target.y <= self.map_height;
        if !inside {
            return Err(InvalidConfig::TargetOutsideMap {
                x: as_f64(self.target.x),
                y: as_f64(self.target.y),
                width: as_f64(self.map_width),
                height: as_f64(self.map_height),
            });
        }
        if self.agent_count == 0 {
            return Err(InvalidConfig::AgentCount);
        }
        if !self.sigma.is_finite() || self.sigma < F::zero() {
            return Err(InvalidConfig::Sigma(as_f64(self.sigma)));
        }
        if !self.v_max.is_finite() || self.v_max <= F::zero() {
            return Err(InvalidConfig::VMax(as_f64(self.v_max)));
        }
        let c_ok = self.coeffs.c1 >= F::zero()
            && self.coeffs.c2 >= F::zero()
            && self.coeffs.c1.is_finite()
            && self.coeffs.c2.is_finite()
            && (self.coeffs.c1 > F::zero() || self.coeffs.c2 > F::zero());
        if !c_ok {
            return Err(InvalidConfig::Coefficients {
                c1: as_f64(self.coeffs.c1),
                c2: as_f64(self.coeffs.c2),
            });
        }
        if self.max_rounds == 0 {
            return Err(InvalidConfig::MaxRounds);
        }
        if self.tx_budget == Some(0) {
            return Err(InvalidConfig::TxBudget);
        }
        match &self.scheme {
            CommScheme::D2d { radius_r } => {
                if !radius_r.is_finite() || *radius_r <= F::zero() {
                    return Err(InvalidConfig::D2dRadius(as_f64(*radius_r)));
                }
            }
            CommScheme::Cellular { partners_k } => {
                let k = partners_k.resolve(self.agent_count);
                let max = self.agent_count.saturating_sub(1);
                if k < 1 || k > max {
                    return Err(InvalidConfig::CellularPartners {
                        partners_k: k,
                        max,
                        agent_count: self.agent_count,
                    });
                }
            }
            CommScheme::DigitalTwin => {}
        }
        Ok(())
    }

    /// Stable digest of the resolved configuration, embedded in results.
    pub fn digest(&self) -> String {
        let canonical = toml::to_string(self).expect("scenario config serializes");
        format!("fnv1a64:{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Simulator-side statistics recorded after a round. Distances are true
/// distances (ground truth the agents never observe); `swarm_best_est` is
/// the best estimated distance any agent has recorded so far.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics<F = f64> {
    pub round: u32,
    pub mean_true_distance: F,
    pub min_true_distance: F,
    pub swarm_best_est: F,
    pub cumulative_tx: u64,
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// All `max_rounds` rounds were executed.
    RoundLimit,
    /// The next round's transmission cost would have exceeded the budget.
    /// Partial rounds never occur.
    BudgetExhausted,
}

/// Per-round swarm state captured when trajectory recording is on.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundState<F = f64> {
    pub positions: Vec<Vec2<F>>,
    pub velocities: Vec<Vec2<F>>,
    pub personal_best_est: Vec<F>,
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult<F = f64> {
    pub config_digest: String,
    /// State summary before any round (round index 0, zero transmissions).
    pub initial: RoundMetrics<F>,
    /// One entry per executed round.
    pub metrics: Vec<RoundMetrics<F>>,
    pub rounds_executed: u32,
    pub termination: TerminationReason,
    pub final_positions: Vec<Vec2<F>>,
    /// Swarm state after placement and after every round, when requested.
    pub trajectory: Option<Vec<RoundState<F>>>,
}

impl<F: Real> RunResult<F> {
    /// Mean true distance at the end of the run (the initial value when the
    /// budget forbade even the first round).
    pub fn final_mean_true_distance(&self) -> F {
        self.metrics
            .last()
            .unwrap_or(&self.initial)
            .mean_true_distance
    }
}

/// Knobs that do not affect the simulation itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Record positions, velocities and personal bests every round.
    pub record_trajectory: bool,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    Invalid(#[from] InvalidConfig),
    #[error("communication scheme failed: {0}")]
    Comms(#[from] CommsError),
    #[error("corrupted report: {0}")]
    Report(#[from] ReportError),
}

/// The swarm of one run together with the agents' private streams.
pub struct Swarm<F = f64> {
    pub agents: Vec<AgentState<F>>,
    pub(crate) streams: Vec<RngStream>,
}

impl<F: Real> Swarm<F> {
    /// Places `agent_count` agents i.i.d. uniformly on the map (two uniform
    /// draws per agent, in agent-id order, from the run's placement stream),
    /// takes each agent's first measurement and seeds both best records
    /// from it. Velocities start at zero.
    pub fn initialize(config: &ScenarioConfig<F>, rng: &RunRng) -> Result<Self, InvalidConfig> {
        config.validate()?;
        let mut placement = rng.init();
        let positions = (0..config.agent_count)
            .map(|_| {
                let x = F::sample_unit(&mut placement) * config.map_width;
                let y = F::sample_unit(&mut placement) * config.map_height;
                Vec2::new(x, y)
            })
            .collect();
        Ok(Self::seed(config, positions, rng))
    }

    /// Same as [`Swarm::initialize`] but with caller-chosen positions; the
    /// placement stream is not consumed.
    pub fn at_positions(
        config: &ScenarioConfig<F>,
        positions: Vec<Vec2<F>>,
        rng: &RunRng,
    ) -> Result<Self, InvalidConfig> {
        config.validate()?;
        if positions.len() != config.agent_count {
            return Err(InvalidConfig::PositionCount {
                expected: config.agent_count,
                got: positions.len(),
            });
        }
        if !positions.iter().all(|p| p.is_finite()) {
            return Err(InvalidConfig::PositionNotFinite);
        }
        Ok(Self::seed(config, positions, rng))
    }

    fn seed(config: &ScenarioConfig<F>, positions: Vec<Vec2<F>>, rng: &RunRng) -> Self {
        let sensor = RangeSensor::new(config.sigma, config.target);
        let mut streams: Vec<RngStream> = (0..config.agent_count).map(|i| rng.agent(i)).collect();
        let agents = positions
            .into_iter()
            .enumerate()
            .map(|(id, position)| {
                let estimate = sensor.measure(position, &mut streams[id]);
                AgentState::new(id, position, estimate)
            })
            .collect();
        Self { agents, streams }
    }
}

/// Runs a scenario with default options and seed indices (0, 0).
pub fn run<F: Real>(config: &ScenarioConfig<F>) -> Result<RunResult<F>, EngineError> {
    run_seeded(config, 0, 0, &RunOptions::default())
}

pub fn run_with_options<F: Real>(
    config: &ScenarioConfig<F>,
    options: &RunOptions,
) -> Result<RunResult<F>, EngineError> {
    run_seeded(config, 0, 0, options)
}

/// Runs a scenario with explicit stream coordinates, used by the batch
/// harness to give every `(spec, run)` pair an independent seed tree.
pub fn run_seeded<F: Real>(
    config: &ScenarioConfig<F>,
    spec_index: u64,
    run_index: u64,
    options: &RunOptions,
) -> Result<RunResult<F>, EngineError> {
    let rng = RunRng::new(config.master_seed, spec_index, run_index);
    let swarm = Swarm::initialize(config, &rng)?;
    run_rounds(config, swarm, rng, options)
}

/// Runs a scenario from caller-chosen initial positions.
pub fn run_from_positions<F: Real>(
    config: &ScenarioConfig<F>,
    positions: Vec<Vec2<F>>,
    options: &RunOptions,
) -> Result<RunResult<F>, EngineError> {
    let rng = RunRng::new(config.master_seed, 0, 0);
    let swarm = Swarm::at_positions(config, positions, &rng)?;
    run_rounds(config, swarm, rng, options)
}

fn run_rounds<F: Real>(
    config: &ScenarioConfig<F>,
    mut swarm: Swarm<F>,
    rng: RunRng,
    options: &RunOptions,
) -> Result<RunResult<F>, EngineError> {
    let limit = SpeedLimit::new(config.v_max);
    let sensor = RangeSensor::new(config.sigma, config.target);

    // Under realized-cost gating the D2D round cost is only known after the
    // exchange is built; every other case is gated up front.
    let precommitted_cost = match (&config.scheme, config.d2d_budget_mode) {
        (CommScheme::D2d { .. }, BudgetMode::Realized) => None,
        (scheme, _) => Some(scheme.worst_case_round_cost(config.agent_count)),
    };

    let mut cumulative_tx: u64 = 0;
    let mut metrics: Vec<RoundMetrics<F>> = Vec::new();
    let initial = summarize(0, &swarm.agents, config.target, 0);
    let mut trajectory = options
        .record_trajectory
        .then(|| vec![capture(&swarm.agents)]);
    let mut termination = TerminationReason::RoundLimit;

    for t in 1..=config.max_rounds {
        if let (Some(budget), Some(cost)) = (config.tx_budget, precommitted_cost) {
            if cumulative_tx + cost > budget {
                termination = TerminationReason::BudgetExhausted;
                break;
            }
        }

        // Exchange against the start-of-round snapshot; nobody has moved yet.
        let snapshot: Vec<(Vec2<F>, F)> = swarm
            .agents
            .iter()
            .map(|a| (a.position, a.last_estimate))
            .collect();
        let mut round_rng = rng.round(t);
        let exchange = config.scheme.round_exchange(&snapshot, &mut round_rng)?;

        if let Some(budget) = config.tx_budget {
            if cumulative_tx + exchange.radio_tx_count > budget {
                termination = TerminationReason::BudgetExhausted;
                break;
            }
        }
        assert!(
            exchange.cost_is_exact(&config.scheme),
            "transmission accounting diverged from the scheme's closed form in round {t}"
        );

        for (agent, reports) in swarm.agents.iter_mut().zip(&exchange.reports_for) {
            agent.fuse_knowledge(reports)?;
        }
        for (agent, stream) in swarm.agents.iter_mut().zip(&mut swarm.streams) {
            agent.step(config.coeffs, config.weighting, limit, stream);
            agent.last_estimate = sensor.measure(agent.position, stream);
        }

        cumulative_tx += exchange.radio_tx_count;
        debug_assert!(config.tx_budget.is_none_or(|b| cumulative_tx <= b));
        metrics.push(summarize(t, &swarm.agents, config.target, cumulative_tx));
        if let Some(track) = trajectory.as_mut() {
            track.push(capture(&swarm.agents));
        }
    }

    Ok(RunResult {
        config_digest: config.digest(),
        initial,
        rounds_executed: metrics.len() as u32,
        termination,
        metrics,
        final_positions: swarm.agents.iter().map(|a| a.position).collect(),
        trajectory,
    })
}

fn summarize<F: Real>(
    round: u32,
    agents: &[AgentState<F>],
    target: Vec2<F>,
    cumulative_tx: u64,
) -> RoundMetrics<F> {
    let mut sum = F::zero();
    let mut min = F::infinity();
    let mut best_est = F::infinity();
    for agent in agents {
        let d = distance(agent.position, target);
        sum += d;
        min = min.min(d);
        best_est = best_est.min(agent.personal_best.est_distance);
    }
    RoundMetrics {
        round,
        mean_true_distance: sum / F::from_usize(agents.len()).unwrap(),
        min_true_distance: min,
        swarm_best_est: best_est,
        cumulative_tx,
    }
}

fn capture<F: Real>(agents: &[AgentState<F>]) -> RoundState<F> {
    RoundState {
        positions: agents.iter().map(|a| a.position).collect(),
        velocities: agents.iter().map(|a| a.velocity).collect(),
        personal_best_est: agents.iter().map(|a| a.personal_best.est_distance).collect(),
    }
}
