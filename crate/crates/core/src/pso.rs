//! Per-agent swarm state and the velocity/position update.
//!
//! Each agent keeps two best records: its own best estimate so far and
//! the best record among everything it has ever heard from reachable
//! peers. The update pulls the velocity toward both, rescales it onto the
//! speed limit, and moves the agent. Which peers are heard in a round is
//! the communication layer's business ([`crate::comms`]); this module
//! only consumes the delivered reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{clamp_speed, SpeedLimit, Vec2};
use crate::rng::RngStream;
use crate::sensing::standard_normal;
use crate::Real;

/// Attraction weights of the velocity update: `c1` scales the pull toward
/// the agent's own best record, `c2` toward the neighborhood best.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsoCoefficients<F = f64> {
    pub c1: F,
    pub c2: F,
}

impl<F: Real> Default for PsoCoefficients<F> {
    fn default() -> Self {
        // The classical choice; both pulls weighted equally.
        Self {
            c1: F::from_f64(2.0).unwrap(),
            c2: F::from_f64(2.0).unwrap(),
        }
    }
}

/// Distribution of the per-round random weights `r1`, `r2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomWeighting {
    /// Uniform on `[0, 1)`, the canonical swarm-update choice and the default.
    #[default]
    Uniform01,
    /// Standard normal, for sensitivity studies.
    Gaussian,
}

impl RandomWeighting {
    fn draw<F: Real>(self, rng: &mut RngStream) -> F {
        match self {
            RandomWeighting::Uniform01 => F::sample_unit(rng),
            RandomWeighting::Gaussian => standard_normal(rng),
        }
    }
}

/// A position together with the distance estimate recorded there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRecord<F = f64> {
    pub position: Vec2<F>,
    pub est_distance: F,
}

/// One report delivered to an agent: the sender's position and current
/// distance estimate, snapshotted at the start of the round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Report<F = f64> {
    pub sender: usize,
    pub position: Vec2<F>,
    pub est_distance: F,
}

/// A report that cannot have been produced by a correct exchange.
#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("report from agent {sender} carries negative distance estimate {est}")]
    NegativeEstimate { sender: usize, est: f64 },
    #[error("report from agent {sender} carries a non-finite position")]
    NonFinitePosition { sender: usize },
}

/// Full state of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentState<F = f64> {
    /// Agent index in `[0, I)`.
    pub id: usize,
    pub position: Vec2<F>,
    pub velocity: Vec2<F>,
    /// Best record over the agent's own history.
    pub personal_best: BestRecord<F>,
    /// Best record over everything ever heard, own knowledge included.
    /// Persists across rounds even when connectivity changes.
    pub neighborhood_best: BestRecord<F>,
    /// Distance estimate taken at the current position.
    pub last_estimate: F,
}

impl<F: Real> AgentState<F> {
    /// Fresh agent at `position` whose first measurement is `estimate`;
    /// both best records start from it.
    pub fn new(id: usize, position: Vec2<F>, estimate: F) -> Self {
        let seed = BestRecord {
            position,
            est_distance: estimate,
        };
        Self {
            id,
            position,
            velocity: Vec2::zero(),
            personal_best: seed,
            neighborhood_best: seed,
            last_estimate: estimate,
        }
    }

    /// Folds this round's own measurement and the delivered reports into
    /// the two best records.
    ///
    /// The neighborhood best becomes the minimum-estimate record among the
    /// incumbent, the (updated) personal best and all reports. Ties among
    /// new candidates go to the lowest sender id; a tie with the incumbent
    /// keeps the incumbent. The fold is order-independent, so the caller
    /// may deliver reports in any order.
    pub fn fuse_knowledge(&mut self, reports: &[Report<F>]) -> Result<(), ReportError> {
        for r in reports {
            if r.est_distance < F::zero() || !r.est_distance.is_finite() {
                return Err(ReportError::NegativeEstimate {
                    sender: r.sender,
                    est: r.est_distance.to_f64().unwrap_or(f64::NAN),
                });
            }
            if !r.position.is_finite() {
                return Err(ReportError::NonFinitePosition { sender: r.sender });
            }
            debug_assert_ne!(r.sender, self.id, "agent received a report from itself");
        }

        if self.last_estimate < self.personal_best.est_distance {
            self.personal_best = BestRecord {
                position: self.position,
                est_distance: self.last_estimate,
            };
        }

        let own = Report {
            sender: self.id,
            position: self.personal_best.position,
            est_distance: self.personal_best.est_distance,
        };
        if let Some(best) = best_candidate(std::iter::once(&own).chain(reports)) {
            if best.est_distance < self.neighborhood_best.est_distance {
                self.neighborhood_best = BestRecord {
                    position: best.position,
                    est_distance: best.est_distance,
                };
            }
        }
        Ok(())
    }

    /// One velocity/position update: draws `r1` then `r2` from the agent's
    /// stream and applies [`AgentState::apply_step`].
    pub fn step(
        &mut self,
        coeffs: PsoCoefficients<F>,
        weighting: RandomWeighting,
        limit: SpeedLimit<F>,
        rng: &mut RngStream,
    ) {
        let r1 = weighting.draw(rng);
        let r2 = weighting.draw(rng);
        self.apply_step(coeffs, limit, r1, r2);
    }

    /// The deterministic update kernel, with the random weights supplied
    /// by the caller:
    ///
    /// ```text
    /// v <- v + c1*r1*(personal_best - p) + c2*r2*(neighborhood_best - p)
    /// v <- clamp_speed(v)
    /// p <- p + v
    /// ```
    ///
    /// The position is intentionally not clipped to the map; the pull
    /// toward the best records brings strays back.
    pub fn apply_step(&mut self, coeffs: PsoCoefficients<F>, limit: SpeedLimit<F>, r1: F, r2: F) {
        let own_pull = (self.personal_best.position - self.position) * (coeffs.c1 * r1);
        let peer_pull = (self.neighborhood_best.position - self.position) * (coeffs.c2 * r2);
        self.velocity = clamp_speed(self.velocity + own_pull + peer_pull, limit);
        self.position = self.position + self.velocity;
    }
}

/// Minimum-estimate candidate under the fusion ordering: smaller estimate
/// first, lower sender id on ties. Used by both the per-agent fusion and
/// the reference full-knowledge tracker so the two rank records identically.
pub(crate) fn best_candidate<'a, F: Real>(
    candidates: impl Iterator<Item = &'a Report<F>>,
) -> Option<Report<F>> {
    let mut best: Option<Report<F>> = None;
    for c in candidates {
        best = match best {
            None => Some(*c),
            Some(b)
                if c.est_distance < b.est_distance
                    || (c.est_distance == b.est_distance && c.sender < b.sender) =>
            {
                Some(*c)
            }
            keep => keep,
        };
    }
    best
}
