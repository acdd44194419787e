//! Ready-to-run scenario configs.
//!
//! All presets share the reference setup: a 640 x 600 m map with the
//! target at (400, 300), 50 agents, 1 m sensing noise and a 5 m/round
//! speed limit. Sweep values (the radii, partner counts and swarm sizes)
//! are this project's choices; the scenario cookbook in the README
//! documents them.

use thiserror::Error;

use crate::comms::{CommScheme, PartnerCount};
use crate::engine::{BudgetMode, ScenarioConfig};
use crate::geometry::Vec2;
use crate::montecarlo::{BatchConfig, SweepAxis};
use crate::pso::{PsoCoefficients, RandomWeighting};

pub const SCENARIO_NAMES: [&str; 4] = [
    "default",
    "d2d-sweep",
    "cellular-sweep",
    "budget-dt-vs-cellular",
];

#[derive(Debug, Error, PartialEq)]
#[error("unknown scenario {name:?}; available: default, d2d-sweep, cellular-sweep, budget-dt-vs-cellular")]
pub struct UnknownScenario {
    pub name: String,
}

fn reference_scenario(scheme: CommScheme) -> ScenarioConfig {
    ScenarioConfig {
        map_width: 640.0,
        map_height: 600.0,
        agent_count: 50,
        sigma: 1.0,
        v_max: 5.0,
        max_rounds: 300,
        tx_budget: None,
        d2d_budget_mode: BudgetMode::Realized,
        master_seed: 42,
        weighting: RandomWeighting::Uniform01,
        target: Vec2::new(400.0, 300.0),
        coeffs: PsoCoefficients::default(),
        scheme,
    }
}

/// Builds the named preset.
pub fn scenario(name: &str) -> Result<BatchConfig, UnknownScenario> {
    match name {
        "default" => Ok(BatchConfig {
            num_runs: 300,
            scenario: reference_scenario(CommScheme::DigitalTwin),
            sweep: vec![],
        }),
        "d2d-sweep" => {
            let mut scenario = reference_scenario(CommScheme::D2d { radius_r: 900.0 });
            scenario.max_rounds = 500;
            Ok(BatchConfig {
                num_runs: 300,
                scenario,
                sweep: vec![SweepAxis::RadiusR(vec![50.0, 100.0, 200.0, 400.0, 900.0])],
            })
        }
        "cellular-sweep" => {
            let mut scenario = reference_scenario(CommScheme::Cellular {
                partners_k: PartnerCount::AllOthers,
            });
            scenario.max_rounds = 500;
            Ok(BatchConfig {
                num_runs: 300,
                scenario,
                sweep: vec![SweepAxis::PartnersK(vec![
                    PartnerCount::Exact(1),
                    PartnerCount::Exact(5),
                    PartnerCount::Exact(10),
                    PartnerCount::Exact(25),
                    PartnerCount::AllOthers,
                ])],
            })
        }
        "budget-dt-vs-cellular" => {
            let mut scenario = reference_scenario(CommScheme::DigitalTwin);
            scenario.max_rounds = 500;
            scenario.tx_budget = Some(1000);
            Ok(BatchConfig {
                num_runs: 50,
                scenario,
                sweep: vec![
                    SweepAxis::Scheme(vec![
                        CommScheme::DigitalTwin,
                        CommScheme::Cellular {
                            partners_k: PartnerCount::AllOthers,
                        },
                    ]),
                    SweepAxis::AgentCount(vec![10, 30, 50]),
                ],
            })
        }
        other => Err(UnknownScenario {
            name: other.to_string(),
        }),
    }
}

/// The named preset rendered as a config file.
pub fn scenario_toml(name: &str) -> Result<String, UnknownScenario> {
    let batch = scenario(name)?;
    Ok(toml::to_string_pretty(&batch).expect("presets serialize"))
}
