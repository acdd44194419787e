//! Batch execution of independent runs over parameter sweeps, aggregation
//! into mean convergence curves, and the full-knowledge reference
//! trajectory used for equivalence testing.
//!
//! Run seeds are derived from `(master_seed, spec_index, run_index)`, so a
//! specification's results never depend on which other specifications are
//! in the sweep, on the number of worker threads, or on completion order.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comms::{CommScheme, PartnerCount};
use crate::engine::{
    self, EngineError, InvalidConfig, RoundMetrics, RunOptions, RunResult, ScenarioConfig,
    Swarm, TerminationReason,
};
use crate::geometry::{distance, SpeedLimit, Vec2};
use crate::pso::{best_candidate, BestRecord, Report};
use crate::rng::RunRng;
use crate::sensing::RangeSensor;
use crate::Real;

/// Environment variable overriding the worker-thread count for batches.
pub const THREADS_ENV_VAR: &str = "SWARMLOC_THREADS";

/// One sweep dimension. Dimensions combine as a Cartesian product, with
/// the first listed axis varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "param", content = "values", rename_all = "snake_case")]
pub enum SweepAxis<F = f64> {
    /// D2D coverage radii, meters. Only applicable when the (possibly
    /// swept) scheme is D2D.
    RadiusR(Vec<F>),
    /// Cellular session partner counts. Only applicable to cellular.
    PartnersK(Vec<PartnerCount>),
    AgentCount(Vec<usize>),
    Scheme(Vec<CommScheme<F>>),
}

/// A batch: one base scenario, a sweep over it, and the number of
/// independent runs per resulting specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: crate::Real")]
pub struct BatchConfig<F = f64> {
    #[serde(default = "default_num_runs")]
    pub num_runs: u32,
    pub scenario: ScenarioConfig<F>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis<F>>,
}

fn default_num_runs() -> u32 {
    1
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("num_runs must be at least 1")]
    NumRuns,
    #[error("sweep parameter {param} does not apply to the {scheme} scheme (spec {spec_index})")]
    SweepNotApplicable {
        param: &'static str,
        scheme: &'static str,
        spec_index: usize,
    },
    #[error("spec {spec_index} ({label}): {source}")]
    InvalidSpec {
        spec_index: usize,
        label: String,
        source: InvalidConfig,
    },
    #[error("spec {spec_index}, run {run_index}: {source}")]
    Run {
        spec_index: usize,
        run_index: u32,
        source: EngineError,
    },
}

/// One resolved specification of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecDescriptor<F = f64> {
    pub index: usize,
    /// Human-readable summary of the sweep values applied to the base,
    /// `"base"` when the sweep is empty.
    pub label: String,
    pub config: ScenarioConfig<F>,
}

/// Per-round aggregate of `mean_true_distance` across a spec's runs.
/// Runs shorter than the row's round carry their final value forward and
/// are counted in `padded_runs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundAggregate<F = f64> {
    pub round: u32,
    pub mean: F,
    pub std: F,
    pub padded_runs: u32,
}

/// Aggregates over all runs of one specification. Standard deviations are
/// population deviations, so a single run aggregates with zero spread.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecAggregate<F = f64> {
    pub rounds: Vec<RoundAggregate<F>>,
    pub mean_final_distance: F,
    pub std_final_distance: F,
    pub mean_rounds_executed: f64,
    pub num_runs: u32,
}

impl<F: Real> SpecAggregate<F> {
    /// Standard error of the mean final distance.
    pub fn final_distance_se(&self) -> F {
        self.std_final_distance / F::from_u32(self.num_runs).unwrap().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecResult<F = f64> {
    pub descriptor: SpecDescriptor<F>,
    pub runs: Vec<RunResult<F>>,
    pub aggregate: SpecAggregate<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult<F = f64> {
    pub specs: Vec<SpecResult<F>>,
}

impl<F: Real> fmt::Display for CommScheme<F> {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            CommScheme::D2d { radius_r } => write!(f, "d2d(radius_r={radius_r})"),
            CommScheme::Cellular { partners_k } => write!(f, "cellular(partners_k={partners_k})"),
            CommScheme::DigitalTwin => write!(f, "digital_twin"),
        }
    }
}

impl fmt::Display for PartnerCount {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            PartnerCount::Exact(k) => write!(f, "{k}"),
            PartnerCount::AllOthers => write!(f, "max"),
        }
    }
}

fn scheme_name<F: Real>(scheme: &CommScheme<F>) -> &'static str {
    match scheme {
        CommScheme::D2d { .. } => "d2d",
        CommScheme::Cellular { .. } => "cellular",
        CommScheme::DigitalTwin => "digital_twin",
    }
}

/// Expands the sweep into the list of concrete specifications, validating
/// each one.
pub fn materialize_specs<F: Real>(
    batch: &BatchConfig<F>,
) -> Result<Vec<SpecDescriptor<F>>, BatchError> {
    let mut specs = vec![(batch.scenario.clone(), Vec::<String>::new())];
    for axis in &batch.sweep {
        let mut expanded = Vec::with_capacity(specs.len());
        for (config, label_parts) in &specs {
            match axis {
                SweepAxis::RadiusR(values) => {
                    for v in values {
                        let mut next = config.clone();
                        match &mut next.scheme {
                            CommScheme::D2d { radius_r } => *radius_r = *v,
                            other => {
                                return Err(BatchError::SweepNotApplicable {
                                    param: "radius_r",
                                    scheme: scheme_name(other),
                                    spec_index: expanded.len(),
                                })
                            }
                        }
                        let mut parts = label_parts.clone();
                        parts.push(format!("radius_r={v}"));
                        expanded.push((next, parts));
                    }
                }
                SweepAxis::PartnersK(values) => {
                    for v in values {
                        let mut next = config.clone();
                        match &mut next.scheme {
                            CommScheme::Cellular { partners_k } => *partners_k = *v,
                            other => {
                                return Err(BatchError::SweepNotApplicable {
                                    param: "partners_k",
                                    scheme: scheme_name(other),
                                    spec_index: expanded.len(),
                                })
                            }
                        }
                        let mut parts = label_parts.clone();
                        parts.push(format!("partners_k={v}"));
                        expanded.push((next, parts));
                    }
                }
                SweepAxis::AgentCount(values) => {
                    for v in values {
                        let mut next = config.clone();
                        next.agent_count = *v;
                        let mut parts = label_parts.clone();
                        parts.push(format!("agent_count={v}"));
                        expanded.push((next, parts));
                    }
                }
                SweepAxis::Scheme(values) => {
                    for v in values {
                        let mut next = config.clone();
                        next.scheme = *v;
                        let mut parts = label_parts.clone();
                        parts.push(format!("scheme={v}"));
                        expanded.push((next, parts));
                    }
                }
            }
        }
        specs = expanded;
    }

    specs
        .into_iter()
        .enumerate()
        .map(|(index, (config, parts))| {
            let label = if parts.is_empty() {
                "base".to_string()
            } else {
                parts.join("; ")
            };
            config
                .validate()
                .map_err(|source| BatchError::InvalidSpec {
                    spec_index: index,
                    label: label.clone(),
                    source,
                })?;
            Ok(SpecDescriptor {
                index,
                label,
                config,
            })
        })
        .collect()
}

/// Worker-thread count from the environment, if overridden.
fn env_parallelism() -> Option<usize> {
    std::env::var(THREADS_ENV_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs the whole batch with the default parallelism (all cores, unless
/// `SWARMLOC_THREADS` overrides it).
pub fn run_batch<F: Real>(batch: &BatchConfig<F>) -> Result<BatchResult<F>, BatchError> {
    run_batch_with_threads(batch, env_parallelism())
}

/// Runs the whole batch on an explicit number of worker threads. The
/// result is identical for every thread count.
pub fn run_batch_with_threads<F: Real>(
    batch: &BatchConfig<F>,
    threads: Option<usize>,
) -> Result<BatchResult<F>, BatchError> {
    if batch.num_runs == 0 {
        return Err(BatchError::NumRuns);
    }
    let specs = materialize_specs(batch)?;

    let jobs: Vec<(usize, u32)> = specs
        .iter()
        .flat_map(|spec| (0..batch.num_runs).map(move |run| (spec.index, run)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool construction");
    let results: Result<Vec<RunResult<F>>, BatchError> = pool.install(|| {
        jobs.par_iter()
            .map(|&(spec_index, run_index)| {
                engine::run_seeded(
                    &specs[spec_index].config,
                    spec_index as u64,
                    u64::from(run_index),
                    &RunOptions::default(),
                )
                .map_err(|source| BatchError::Run {
                    spec_index,
                    run_index,
                    source,
                })
            })
            .collect()
    });
    let mut results = results?;

    let mut spec_results = Vec::with_capacity(specs.len());
    for descriptor in specs.into_iter().rev() {
        let runs: Vec<RunResult<F>> = results.split_off(results.len() - batch.num_runs as usize);
        let aggregate = aggregate_runs(&runs);
        spec_results.push(SpecResult {
            descriptor,
            runs,
            aggregate,
        });
    }
    spec_results.reverse();
    Ok(BatchResult {
        specs: spec_results,
    })
}

/// Aligns a spec's run curves by round index (carrying final values
/// forward, flagged) and reduces them to means and population deviations.
fn aggregate_runs<F: Real>(runs: &[RunResult<F>]) -> SpecAggregate<F> {
    let n = runs.len();
    let n_f = F::from_usize(n).unwrap();
    let horizon = runs.iter().map(|r| r.metrics.len()).max().unwrap_or(0);

    let mut rounds = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut sum = F::zero();
        let mut sum_sq = F::zero();
        let mut padded = 0u32;
        for run in runs {
            let value = if t <= run.metrics.len() {
                run.metrics[t - 1].mean_true_distance
            } else {
                padded += 1;
                run.final_mean_true_distance()
            };
            sum += value;
            sum_sq += value * value;
        }
        let mean = sum / n_f;
        let variance = (sum_sq / n_f - mean * mean).max(F::zero());
        rounds.push(RoundAggregate {
            round: t as u32,
            mean,
            std: variance.sqrt(),
            padded_runs: padded,
        });
    }

    let mut sum = F::zero();
    let mut sum_sq = F::zero();
    let mut sum_rounds = 0.0f64;
    for run in runs {
        let value = run.final_mean_true_distance();
        sum += value;
        sum_sq += value * value;
        sum_rounds += f64::from(run.rounds_executed);
    }
    let mean_final = sum / n_f;
    let variance = (sum_sq / n_f - mean_final * mean_final).max(F::zero());
    SpecAggregate {
        rounds,
        mean_final_distance: mean_final,
        std_final_distance: variance.sqrt(),
        mean_rounds_executed: sum_rounds / n as f64,
        num_runs: n as u32,
    }
}

/// Reference trajectory: the same update driven by the true swarm-wide
/// best record instead of per-agent neighborhood knowledge. Communication
/// is assumed free and complete (the scheme and budget are ignored), the
/// stream derivation is identical to the engine's.
pub fn oracle_global_pso<F: Real>(
    config: &ScenarioConfig<F>,
    options: &RunOptions,
) -> Result<RunResult<F>, EngineError> {
    oracle_global_pso_seeded(config, 0, 0, options)
}

pub fn oracle_global_pso_seeded<F: Real>(
    config: &ScenarioConfig<F>,
    spec_index: u64,
    run_index: u64,
    options: &RunOptions,
) -> Result<RunResult<F>, EngineError> {
    let rng = RunRng::new(config.master_seed, spec_index, run_index);
    let mut swarm = Swarm::initialize(config, &rng)?;
    let limit = SpeedLimit::new(config.v_max);
    let sensor = RangeSensor::new(config.sigma, config.target);

    let mut global_best: Option<BestRecord<F>> = None;
    let mut metrics: Vec<RoundMetrics<F>> = Vec::new();
    let initial = oracle_summarize(0, &swarm.agents, config.target);
    let mut trajectory = options
        .record_trajectory
        .then(|| vec![oracle_capture(&swarm.agents)]);

    for t in 1..=config.max_rounds {
        for agent in swarm.agents.iter_mut() {
            if agent.last_estimate < agent.personal_best.est_distance {
                agent.personal_best = BestRecord {
                    position: agent.position,
                    est_distance: agent.last_estimate,
                };
            }
        }
        // Swarm-wide best: ranked exactly like per-agent fusion (smaller
        // estimate, then lower id, then the incumbent).
        let candidates: Vec<Report<F>> = swarm
            .agents
            .iter()
            .map(|a| Report {
                sender: a.id,
                position: a.personal_best.position,
                est_distance: a.personal_best.est_distance,
            })
            .collect();
        if let Some(best) = best_candidate(candidates.iter()) {
            let improves = global_best
                .map(|g| best.est_distance < g.est_distance)
                .unwrap_or(true);
            if improves {
                global_best = Some(BestRecord {
                    position: best.position,
                    est_distance: best.est_distance,
                });
            }
        }
        let global = global_best.expect("at least one agent");

        for (agent, stream) in swarm.agents.iter_mut().zip(&mut swarm.streams) {
            agent.neighborhood_best = global;
            agent.step(config.coeffs, config.weighting, limit, stream);
            agent.last_estimate = sensor.measure(agent.position, stream);
        }

        metrics.push(oracle_summarize(t, &swarm.agents, config.target));
        if let Some(track) = trajectory.as_mut() {
            track.push(oracle_capture(&swarm.agents));
        }
    }

    Ok(RunResult {
        config_digest: config.digest(),
        initial,
        rounds_executed: metrics.len() as u32,
        termination: TerminationReason::RoundLimit,
        metrics,
        final_positions: swarm.agents.iter().map(|a| a.position).collect(),
        trajectory,
    })
}

fn oracle_summarize<F: Real>(
    round: u32,
    agents: &[crate::pso::AgentState<F>],
    target: Vec2<F>,
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
        cumulative_tx: 0,
    }
}

fn oracle_capture<F: Real>(agents: &[crate::pso::AgentState<F>]) -> crate::engine::RoundState<F> {
    crate::engine::RoundState {
        positions: agents.iter().map(|a| a.position).collect(),
        velocities: agents.iter().map(|a| a.velocity).collect(),
        personal_best_est: agents.iter().map(|a| a.personal_best.est_distance).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::BudgetMode;
    use crate::pso::{PsoCoefficients, RandomWeighting};

    fn base(scheme: CommScheme) -> ScenarioConfig {
        ScenarioConfig {
            map_width: 640.0,
            map_height: 600.0,
            agent_count: 10,
            sigma: 1.0,
            v_max: 5.0,
            max_rounds: 25,
            tx_budget: None,
            d2d_budget_mode: BudgetMode::default(),
            master_seed: 42,
            weighting: RandomWeighting::Uniform01,
            target: Vec2::new(400.0, 300.0),
            coeffs: PsoCoefficients::default(),
            scheme,
        }
    }

    fn batch(scheme: CommScheme, num_runs: u32, sweep: Vec<SweepAxis>) -> BatchConfig {
        BatchConfig {
            num_runs,
            scenario: base(scheme),
            sweep,
        }
    }

    fn positions_match(a: &RunResult, b: &RunResult) -> bool {
        let ta = a.trajectory.as_ref().unwrap();
        let tb = b.trajectory.as_ref().unwrap();
        ta.len() == tb.len()
            && ta.iter().zip(tb).all(|(x, y)| {
                x.positions.iter().zip(&y.positions).all(|(p, q)| {
                    p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits()
                })
            })
    }

    #[test]
    fn singleton_batch_reproduces_the_single_run_curve() {
        let b = batch(CommScheme::DigitalTwin, 1, vec![]);
        let result = run_batch_with_threads(&b, Some(1)).unwrap();
        assert_eq!(result.specs.len(), 1);
        let spec = &result.specs[0];
        let single = engine::run_seeded(&b.scenario, 0, 0, &RunOptions::default()).unwrap();
        assert_eq!(spec.runs[0], single);
        for (agg, m) in spec.aggregate.rounds.iter().zip(&single.metrics) {
            assert_eq!(agg.mean, m.mean_true_distance);
            assert_eq!(agg.std, 0.0);
            assert_eq!(agg.padded_runs, 0);
        }
        assert_eq!(spec.aggregate.std_final_distance, 0.0);
        assert_eq!(spec.aggregate.mean_rounds_executed, 25.0);
    }

    #[test]
    fn sweep_expands_as_a_cartesian_product() {
        let b = batch(
            CommScheme::DigitalTwin,
            1,
            vec![
                SweepAxis::Scheme(vec![
                    CommScheme::DigitalTwin,
                    CommScheme::Cellular {
                        partners_k: PartnerCount::AllOthers,
                    },
                ]),
                SweepAxis::AgentCount(vec![4, 6, 8]),
            ],
        );
        let specs = materialize_specs(&b).unwrap();
        assert_eq!(specs.len(), 6);
        assert_eq!(specs[0].label, "scheme=digital_twin; agent_count=4");
        assert_eq!(specs[3].label, "scheme=cellular(partners_k=max); agent_count=4");
        assert_eq!(specs[3].config.agent_count, 4);
        assert!(matches!(
            specs[3].config.scheme,
            CommScheme::Cellular { .. }
        ));
    }

    #[test]
    fn inapplicable_sweep_parameters_are_rejected() {
        let b = batch(
            CommScheme::DigitalTwin,
            1,
            vec![SweepAxis::RadiusR(vec![50.0])],
        );
        assert!(matches!(
            run_batch_with_threads(&b, Some(1)),
            Err(BatchError::SweepNotApplicable {
                param: "radius_r",
                ..
            })
        ));
    }

    #[test]
    fn invalid_spec_is_reported_with_its_index() {
        let b = batch(
            CommScheme::Cellular {
                partners_k: PartnerCount::Exact(3),
            },
            1,
            vec![SweepAxis::AgentCount(vec![10, 2])],
        );
        // Spec 1 has only 2 agents, so partners_k = 3 is out of bounds.
        let err = materialize_specs(&b).unwrap_err();
        assert!(matches!(err, BatchError::InvalidSpec { spec_index: 1, .. }));
    }

    #[test]
    fn spec_results_do_not_depend_on_other_specs_in_the_sweep() {
        let narrow = batch(
            CommScheme::D2d { radius_r: 900.0 },
            3,
            vec![SweepAxis::RadiusR(vec![100.0])],
        );
        let wide = batch(
            CommScheme::D2d { radius_r: 900.0 },
            3,
            vec![SweepAxis::RadiusR(vec![100.0, 400.0])],
        );
        let narrow = run_batch_with_threads(&narrow, Some(1)).unwrap();
        let wide = run_batch_with_threads(&wide, Some(2)).unwrap();
        assert_eq!(narrow.specs[0].runs, wide.specs[0].runs);
    }

    #[test]
    fn digital_twin_run_is_bit_identical_to_the_oracle() {
        let config = base(CommScheme::DigitalTwin);
        let options = RunOptions {
            record_trajectory: true,
        };
        let dt = engine::run_with_options(&config, &options).unwrap();
        let oracle = oracle_global_pso(&config, &options).unwrap();
        assert!(positions_match(&dt, &oracle));
        assert_eq!(dt.metrics.len(), oracle.metrics.len());
        for (a, b) in dt.metrics.iter().zip(&oracle.metrics) {
            assert_eq!(a.mean_true_distance.to_bits(), b.mean_true_distance.to_bits());
            assert_eq!(a.swarm_best_est.to_bits(), b.swarm_best_est.to_bits());
        }
    }

    #[test]
    fn saturated_d2d_is_bit_identical_to_the_oracle() {
        // Radius beyond the map diagonal, so every agent hears everyone.
        let config = base(CommScheme::D2d { radius_r: 900.0 });
        let options = RunOptions {
            record_trajectory: true,
        };
        let d2d = engine::run_with_options(&config, &options).unwrap();
        let oracle = oracle_global_pso(&config, &options).unwrap();
        assert!(positions_match(&d2d, &oracle));
    }

    #[test]
    fn single_agent_oracle_reduces_to_local_search() {
        let mut config = base(CommScheme::DigitalTwin);
        config.agent_count = 1;
        let options = RunOptions {
            record_trajectory: true,
        };
        let run = engine::run_with_options(&config, &options).unwrap();
        let oracle = oracle_global_pso(&config, &options).unwrap();
        assert!(positions_match(&run, &oracle));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let b = batch(
            CommScheme::Cellular {
                partners_k: PartnerCount::Exact(3),
            },
            6,
            vec![SweepAxis::AgentCount(vec![5, 9])],
        );
        let serial = run_batch_with_threads(&b, Some(1)).unwrap();
        let parallel = run_batch_with_threads(&b, Some(4)).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn padded_rounds_are_flagged() {
        // D2D under a tight budget: realized costs differ per run, so runs
        // stop at different rounds and the shorter ones get padded.
        let mut scenario = base(CommScheme::D2d { radius_r: 200.0 });
        scenario.tx_budget = Some(600);
        scenario.agent_count = 6;
        scenario.max_rounds = 80;
        let b = BatchConfig {
            num_runs: 8,
            scenario,
            sweep: vec![],
        };
        let result = run_batch_with_threads(&b, Some(2)).unwrap();
        let spec = &result.specs[0];
        let lengths: Vec<usize> = spec.runs.iter().map(|r| r.metrics.len()).collect();
        let max = *lengths.iter().max().unwrap();
        let min = *lengths.iter().min().unwrap();
        assert!(min < max, "expected runs of different lengths, got {lengths:?}");
        let last = spec.aggregate.rounds.last().unwrap();
        assert_eq!(
            last.padded_runs,
            lengths.iter().filter(|&&l| l < max).count() as u32
        );
        assert_eq!(spec.aggregate.rounds[min - 1].padded_runs, 0);
    }
}
