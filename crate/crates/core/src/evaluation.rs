//! Monte Carlo policy evaluation and final-policy selection.
//!
//! Returns are undiscounted. Rollout `i` of an evaluation with base seed `b`
//! always uses the same random stream, derived from `(b, i)`, so reports do
//! not depend on the order rollouts run in, and two policies evaluated with
//! the same base seed see common random numbers.

use serde::{Deserialize, Serialize};

use crate::agent::{Policy, TrainingLog};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, pick_index, stream, uniform, SimRng, STREAM_ENV};
use crate::status::AssistAction;

/// Who picks the caregiver's action during a rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Actor {
    Greedy(Policy),
    /// Uniform over `a0..a3` each step; one draw per step.
    Random,
}

impl Actor {
    pub fn id(&self) -> String {
        match self {
            Actor::Greedy(p) => p.id(),
            Actor::Random => "random".into(),
        }
    }
}

/// Plays one episode from the clear state to termination.
pub fn run_episode(env: &Environment, actor: &Actor, rng: &mut SimRng) -> Result<f64> {
    let mut episode = env.episode();
    while !episode.is_done() {
        let action = match actor {
            Actor::Greedy(policy) => policy.action(episode.state()),
            Actor::Random => AssistAction::ALL[pick_index(uniform(rng), AssistAction::COUNT)],
        };
        episode.step(action, rng)?;
    }
    Ok(episode.total_reward())
}

pub fn rollout_rng(base_seed: u64, index: u64) -> SimRng {
    stream(derive_seed(base_seed, index), STREAM_ENV)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub policy_id: String,
    pub num_rollouts: u32,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single rollout.
    pub std: f64,
    pub returns: Vec<f64>,
    pub seed: u64,
}

impl EvaluationReport {
    pub fn from_returns(policy_id: String, returns: Vec<f64>, seed: u64) -> Self {
        let n = returns.len();
        let mean = if n == 0 { 0.0 } else { returns.iter().sum::<f64>() / n as f64 };
        let std = if n < 2 {
            0.0
        } else {
            (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        EvaluationReport {
            policy_id,
            num_rollouts: n as u32,
            mean,
            std,
            returns,
            seed,
        }
    }

    pub fn std_error(&self) -> f64 {
        self.std / f64::from(self.num_rollouts.max(1)).sqrt()
    }
}

pub fn evaluate_policy(env: &Environment, actor: &Actor, rollouts: u32, base_seed: u64) -> Result<EvaluationReport> {
    if rollouts == 0 {
        return Err(Error::Usage("need at least one rollout".into()));
    }
    let returns = (0..rollouts)
        .map(|i| run_episode(env, actor, &mut rollout_rng(base_seed, u64::from(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::from_returns(actor.id(), returns, base_seed))
}

/// Random-actor mean return per epoch, for plotting next to learning curves.
pub fn random_curve(env: &Environment, epochs: u32, rollouts: u32, seed: u64) -> Result<Vec<f64>> {
    (0..epochs)
        .map(|e| {
            let base = derive_seed(derive_seed(seed, 0x7a4d), u64::from(e));
            evaluate_policy(env, &Actor::Random, rollouts, base).map(|r| r.mean)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub policy: Policy,
    /// Times suggested in the trailing training window.
    pub frequency: usize,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSelection {
    pub policy: Policy,
    /// Evaluated candidates, most frequent first.
    pub candidates: Vec<Candidate>,
}

impl FinalSelection {
    pub fn best(&self) -> &Candidate {
        self.candidates
            .iter()
            .find(|c| c.policy == self.policy)
            .expect("selected policy is a candidate")
    }
}

pub const FINAL_CANDIDATES: usize = 5;

/// Evaluates the most frequent trailing-window policies and keeps the one
/// with the highest mean return.
///
/// Candidates are ranked by frequency, ties by policy id; at most five are
/// evaluated, all with the same base seed. Equal means go to the lower id.
pub fn select_final_policy(
    log: &TrainingLog,
    env: &Environment,
    rollouts: u32,
    base_seed: u64,
) -> Result<FinalSelection> {
    if log.final_policies.is_empty() {
        return Err(Error::Usage("training log has no trailing-window policies".into()));
    }
    let mut ranked: Vec<(Policy, usize)> = log.final_policy_counts().into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.id().cmp(&b.0.id())));
    ranked.truncate(FINAL_CANDIDATES);

    let candidates = ranked
        .into_iter()
        .map(|(policy, frequency)| {
            evaluate_policy(env, &Actor::Greedy(policy), rollouts, base_seed).map(|report| Candidate {
                policy,
                frequency,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = candidates
        .iter()
        .max_by(|a, b| {
            a.report
                .mean
                .total_cmp(&b.report.mean)
                .then_with(|| b.policy.id().cmp(&a.policy.id()))
        })
        .expect("at least one candidate");
    Ok(FinalSelection {
        policy: best.policy,
        candidates,
    })
}
