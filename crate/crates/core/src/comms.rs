//! Round-wise information exchange under the three networking schemes,
//! with exact accounting of successful radio transmissions.
//!
//! All schemes are lossless and error-free; what differs is who hears
//! whom and what the exchange costs:
//!
//! * device-to-device: an inquiry/reply pair per ordered in-range pair,
//!   `2 * sum_i |neighbors(i)|` transmissions (equals `2*I*(I-1)` at full
//!   connectivity);
//! * cellular relay: every initiated session runs uplink, downlink,
//!   response uplink, response downlink through the base station and
//!   delivers both directions, `4*I*K` transmissions per round;
//! * digital twin: one state offload up and one movement command down per
//!   agent, `2*I` per round, with twins sharing state server-side for free.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, Vec2};
use crate::pso::Report;
use crate::rng::RngStream;
use crate::Real;
use rand::Rng;

/// Number of session partners each agent contacts per round under the
/// cellular scheme. `AllOthers` resolves to `I - 1` at run time, which
/// keeps "full exchange" meaningful inside agent-count sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartnerCount {
    Exact(usize),
    AllOthers,
}

impl PartnerCount {
    pub fn resolve(self, agent_count: usize) -> usize {
        match self {
            PartnerCount::Exact(k) => k,
            PartnerCount::AllOthers => agent_count.saturating_sub(1),
        }
    }
}

impl Serialize for PartnerCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PartnerCount::Exact(k) => serializer.serialize_u64(*k as u64),
            PartnerCount::AllOthers => serializer.serialize_str("max"),
        }
    }
}

impl<'de> Deserialize<'de> for PartnerCount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PartnerCountVisitor;

        impl Visitor<'_> for PartnerCountVisitor {
            type Value = PartnerCount;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a partner count or the string \"max\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<PartnerCount, E> {
                Ok(PartnerCount::Exact(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<PartnerCount, E> {
                if v < 0 {
                    return Err(E::custom("partner count cannot be negative"));
                }
                Ok(PartnerCount::Exact(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<PartnerCount, E> {
                if v == "max" {
                    Ok(PartnerCount::AllOthers)
                } else {
                    Err(E::custom(format!(
                        "unknown partner count {v:?}, expected an integer or \"max\""
                    )))
                }
            }
        }

        deserializer.deserialize_any(PartnerCountVisitor)
    }
}

/// Networking scheme, fixed for a whole run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommScheme<F = f64> {
    /// Direct device-to-device links within a coverage radius (meters).
    D2d { radius_r: F },
    /// Base-station relay to `partners_k` randomly selected agents per round.
    Cellular { partners_k: PartnerCount },
    /// Server-side twins; full knowledge at constant radio cost.
    DigitalTwin,
}

impl<F: Real> CommScheme<F> {
    /// Per-round cost when it does not depend on agent geometry.
    pub fn fixed_round_cost(&self, agent_count: usize) -> Option<u64> {
        let i = agent_count as u64;
        match self {
            CommScheme::D2d { .. } => None,
            CommScheme::Cellular { partners_k } => {
                Some(4 * i * partners_k.resolve(agent_count) as u64)
            }
            CommScheme::DigitalTwin => Some(2 * i),
        }
    }

    /// Upper bound on the per-round cost; coincides with
    /// [`CommScheme::fixed_round_cost`] except for D2D, where it is the
    /// full-connectivity cost `2*I*(I-1)`.
    pub fn worst_case_round_cost(&self, agent_count: usize) -> u64 {
        let i = agent_count as u64;
        match self {
            CommScheme::D2d { .. } => 2 * i * i.saturating_sub(1),
            _ => self.fixed_round_cost(agent_count).unwrap(),
        }
    }

    /// Builds the round's exchange from the start-of-round snapshot.
    /// Only the cellular scheme consumes randomness.
    pub fn round_exchange(
        &self,
        snapshot: &[(Vec2<F>, F)],
        rng: &mut RngStream,
    ) -> Result<RoundExchange<F>, CommsError> {
        match self {
            CommScheme::D2d { radius_r } => Ok(exchange_d2d(snapshot, *radius_r)),
            CommScheme::Cellular { partners_k } => {
                exchange_cellular(snapshot, partners_k.resolve(snapshot.len()), rng)
            }
            CommScheme::DigitalTwin => Ok(exchange_digital_twin(snapshot)),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CommsError {
    #[error("cellular partner count {partners_k} outside 1..={max} for {agent_count} agents")]
    PartnerCountOutOfRange {
        partners_k: usize,
        max: usize,
        agent_count: usize,
    },
}

/// The realized exchange of one round: for every agent, the reports it
/// received, plus the total number of successful radio transmissions the
/// scheme spent. No agent ever appears as a sender to itself.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundExchange<F = f64> {
    pub reports_for: Vec<Vec<Report<F>>>,
    pub radio_tx_count: u64,
}

impl<F: Real> RoundExchange<F> {
    /// Checks the realized transmission count against the scheme's closed
    /// form. The engine calls this every round.
    pub fn cost_is_exact(&self, scheme: &CommScheme<F>) -> bool {
        let i = self.reports_for.len() as u64;
        let delivered: u64 = self.reports_for.iter().map(|r| r.len() as u64).sum();
        match scheme {
            // Two transmissions per ordered inquiry.
            CommScheme::D2d { .. } => self.radio_tx_count == 2 * delivered,
            CommScheme::Cellular { partners_k } => {
                let k = partners_k.resolve(self.reports_for.len()) as u64;
                // Each session delivers two reports and costs four.
                self.radio_tx_count == 4 * i * k && delivered == 2 * i * k
            }
            CommScheme::DigitalTwin => {
                self.radio_tx_count == 2 * i && delivered == i * i.saturating_sub(1)
            }
        }
    }
}

fn report_from<F: Real>(snapshot: &[(Vec2<F>, F)], sender: usize) -> Report<F> {
    Report {
        sender,
        position: snapshot[sender].0,
        est_distance: snapshot[sender].1,
    }
}

/// Device-to-device exchange: agent `i` hears exactly the agents within
/// `radius_r` of it (closed ball, so a pair exactly at the radius counts).
/// Cost: an inquiry and a reply per ordered in-range pair.
pub fn exchange_d2d<F: Real>(snapshot: &[(Vec2<F>, F)], radius_r: F) -> RoundExchange<F> {
    let count = snapshot.len();
    let mut reports_for: Vec<Vec<Report<F>>> = vec![Vec::new(); count];
    let mut in_range_pairs: u64 = 0;
    for i in 0..count {
        for j in (i + 1)..count {
            if distance(snapshot[i].0, snapshot[j].0) <= radius_r {
                reports_for[i].push(report_from(snapshot, j));
                reports_for[j].push(report_from(snapshot, i));
                in_range_pairs += 1;
            }
        }
    }
    RoundExchange {
        reports_for,
        // 2 per ordered inquiry; each pair yields two ordered inquiries.
        radio_tx_count: 4 * in_range_pairs,
    }
}

/// Cellular relay exchange: every agent, in id order, draws `partners_k`
/// distinct session targets without replacement from the round stream.
/// Each session delivers the target's report to the initiator and the
/// initiator's report to the target, and is paid for separately even when
/// the reverse session also happens.
pub fn exchange_cellular<F: Real>(
    snapshot: &[(Vec2<F>, F)],
    partners_k: usize,
    rng: &mut RngStream,
) -> Result<RoundExchange<F>, CommsError> {
    let count = snapshot.len();
    let max = count.saturating_sub(1);
    if partners_k < 1 || partners_k > max {
        return Err(CommsError::PartnerCountOutOfRange {
            partners_k,
            max,
            agent_count: count,
        });
    }

    let mut reports_for: Vec<Vec<Report<F>>> = vec![Vec::new(); count];
    let mut sessions: u64 = 0;
    for initiator in 0..count {
        // Partial Fisher-Yates over the other agents: the first
        // `partners_k` slots end up holding a uniform draw without
        // replacement, consuming exactly `partners_k` integer draws.
        let mut pool: Vec<usize> = (0..count).filter(|&j| j != initiator).collect();
        for slot in 0..partners_k {
            let pick = slot + rng.random_range(0..pool.len() - slot);
            pool.swap(slot, pick);
            let target = pool[slot];
            reports_for[initiator].push(report_from(snapshot, target));
            reports_for[target].push(report_from(snapshot, initiator));
            sessions += 1;
        }
    }

    Ok(RoundExchange {
        reports_for,
        radio_tx_count: 4 * sessions,
    })
}

/// Digital-twin exchange: every agent's twin knows every other agent's
/// snapshot; radio traffic is one offload up and one command down per agent.
pub fn exchange_digital_twin<F: Real>(snapshot: &[(Vec2<F>, F)]) -> RoundExchange<F> {
    let count = snapshot.len();
    let reports_for = (0..count)
        .map(|i| {
            (0..count)
                .filter(|&j| j != i)
                .map(|j| report_from(snapshot, j))
                .collect()
        })
        .collect();
    RoundExchange {
        reports_for,
        radio_tx_count: 2 * count as u64,
    }
}
