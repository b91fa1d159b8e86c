//! Tabular Q-learning caregiver.
//!
//! The table has one row per status vector and one column per assistance
//! level. Forced skips are environment events, not actions, so they never get
//! a column; their penalty and transition are folded into the step that
//! triggered them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_policy, Actor};
use crate::rng::{derive_seed, pick_index, stream, uniform, SimRng, STREAM_ENV};
use crate::status::{AssistAction, Status, StatusVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    values: [[f64; AssistAction::COUNT]; StatusVector::COUNT],
}

impl Default for QTable {
    fn default() -> Self {
        QTable {
            values: [[0.0; AssistAction::COUNT]; StatusVector::COUNT],
        }
    }
}

const QTABLE_HEADER: &str = "# caresim q-table v1";
const POLICY_HEADER: &str = "# caresim policy v1";

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, state: StatusVector, action: AssistAction) -> f64 {
        self.values[state.index()][action.index()]
    }

    pub fn set(&mut self, state: StatusVector, action: AssistAction, value: f64) {
        self.values[state.index()][action.index()] = value;
    }

    pub fn row(&self, state: StatusVector) -> &[f64; AssistAction::COUNT] {
        &self.values[state.index()]
    }

    pub fn row_mut(&mut self, state: StatusVector) -> &mut [f64; AssistAction::COUNT] {
        &mut self.values[state.index()]
    }

    pub fn max_value(&self, state: StatusVector) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    /// Line-oriented text: a header, then per state its index, its four bits
    /// and the four action values `a0..a3`, whitespace separated. Values use
    /// the shortest representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(QTABLE_HEADER);
        out.push('\n');
        out.push_str("# state forgetful confused angry disengaged a0 a1 a2 a3\n");
        for s in StatusVector::all() {
            let [f, c, a, d] = s.bits();
            let _ = write!(out, "{} {f} {c} {a} {d}", s.index());
            for v in self.row(s) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |m: String| Error::parse("q-table", m);
        let mut q = QTable::new();
        let mut seen = [false; StatusVector::COUNT];
        for line in data_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 9 {
                return Err(err(format!("expected 9 fields, got {}: {line:?}", fields.len())));
            }
            let index: usize = fields[0].parse().map_err(|e| err(format!("{e}: {line:?}")))?;
            let state = StatusVector::from_index(index).map_err(|e| err(e.to_string()))?;
            let bits: Vec<u8> = fields[1..5]
                .iter()
                .map(|t| t.parse::<u8>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("{e}: {line:?}")))?;
            if bits != state.bits() {
                return Err(err(format!("bits do not match state index in {line:?}")));
            }
            for (slot, tok) in q.row_mut(state).iter_mut().zip(&fields[5..]) {
                *slot = tok.parse().map_err(|e| err(format!("{e}: {line:?}")))?;
            }
            if std::mem::replace(&mut seen[index], true) {
                return Err(err(format!("state {index} listed twice")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(err(format!("state {missing} missing")));
        }
        Ok(q)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// An action for every status vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Policy([AssistAction; StatusVector::COUNT]);

impl Policy {
    pub fn uniform(action: AssistAction) -> Self {
        Policy([action; StatusVector::COUNT])
    }

    pub fn action(&self, state: StatusVector) -> AssistAction {
        self.0[state.index()]
    }

    pub fn set(&mut self, state: StatusVector, action: AssistAction) {
        self.0[state.index()] = action;
    }

    pub fn with(mut self, state: StatusVector, action: AssistAction) -> Self {
        self.set(state, action);
        self
    }

    /// Sixteen action digits in state-index order, e.g. `2111...`.
    ///
    /// Ids compare lexicographically, which is the tie-break order used by
    /// final-policy selection.
    pub fn id(&self) -> String {
        self.0.iter().map(|a| char::from(b'0' + a.index() as u8)).collect()
    }

    pub fn from_id(id: &str) -> Result<Self> {
        let err = || Error::parse("policy id", format!("expected 16 digits 0-3, got {id:?}"));
        if id.len() != StatusVector::COUNT {
            return Err(err());
        }
        let mut actions = [AssistAction::NoAssistance; StatusVector::COUNT];
        for (slot, ch) in actions.iter_mut().zip(id.chars()) {
            let d = ch.to_digit(10).ok_or_else(err)?;
            *slot = AssistAction::from_index(d as usize).map_err(|_| err())?;
        }
        Ok(Policy(actions))
    }

    /// One line per state: index, vector, action code and action label.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(POLICY_HEADER);
        out.push('\n');
        let _ = writeln!(out, "# id {}", self.id());
        for s in StatusVector::all() {
            let a = self.action(s);
            let _ = writeln!(out, "{} {s} {} {}", s.index(), a.code(), a.label());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |m: String| Error::parse("policy", m);
        let mut actions = [None; StatusVector::COUNT];
        for line in data_lines(text) {
            let mut fields = line.split_whitespace();
            let (Some(idx), Some(vec), Some(code)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err(format!("short line {line:?}")));
            };
            let index: usize = idx.parse().map_err(|e| err(format!("{e}: {line:?}")))?;
            let state = StatusVector::from_index(index).map_err(|e| err(e.to_string()))?;
            if vec.parse::<StatusVector>()? != state {
                return Err(err(format!("vector does not match index in {line:?}")));
            }
            let action: AssistAction = code.parse()?;
            if actions[index].replace(action).is_some() {
                return Err(err(format!("state {index} listed twice")));
            }
        }
        let mut out = [AssistAction::NoAssistance; StatusVector::COUNT];
        for (i, a) in actions.iter().enumerate() {
            out[i] = a.ok_or_else(|| err(format!("state {i} missing")))?;
        }
        Ok(Policy(out))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Exploration rate as a function of the training epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Constant { epsilon: f64 },
    /// `eps_min + (eps_max - eps_min) * exp(-lambda * epoch)`
    ExponentialDecay { eps_min: f64, eps_max: f64, lambda: f64 },
}

impl EpsilonSchedule {
    pub const DEFAULT_CONSTANT: f64 = 0.1;

    pub fn constant(epsilon: f64) -> Self {
        EpsilonSchedule::Constant { epsilon }
    }

    /// Decay from `eps_max` toward `eps_min` with the rate chosen so that the
    /// schedule passes through `target` at `epoch`.
    pub fn decay_through(eps_min: f64, eps_max: f64, epoch: u32, target: f64) -> Result<Self> {
        if !(eps_min < target && target < eps_max) || epoch == 0 {
            return Err(Error::Config(format!(
                "cannot decay from {eps_max} toward {eps_min} through {target} at epoch {epoch}"
            )));
        }
        let lambda = ((eps_max - eps_min) / (target - eps_min)).ln() / f64::from(epoch);
        let s = EpsilonSchedule::ExponentialDecay {
            eps_min,
            eps_max,
            lambda,
        };
        s.validate()?;
        Ok(s)
    }

    /// 1.0 decaying to 0.03, at 0.8 after 300 epochs.
    pub fn default_decay() -> Self {
        Self::decay_through(0.03, 1.0, 300, 0.8).expect("default decay is valid")
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsilonSchedule::Constant { epsilon } if (0.0..=1.0).contains(&epsilon) => Ok(()),
            EpsilonSchedule::ExponentialDecay {
                eps_min,
                eps_max,
                lambda,
            } if 0.0 <= eps_min && eps_min <= eps_max && eps_max <= 1.0 && lambda > 0.0 && lambda.is_finite() => {
                Ok(())
            }
            other => Err(Error::Config(format!("invalid epsilon schedule {other:?}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EpsilonSchedule::Constant { .. } => "constant-epsilon",
            EpsilonSchedule::ExponentialDecay { .. } => "decaying-epsilon",
        }
    }
}

pub fn epsilon_at(schedule: &EpsilonSchedule, epoch: u32) -> f64 {
    match *schedule {
        EpsilonSchedule::Constant { epsilon } => epsilon,
        EpsilonSchedule::ExponentialDecay {
            eps_min,
            eps_max,
            lambda,
        } => eps_min + (eps_max - eps_min) * (-lambda * f64::from(epoch)).exp(),
    }
}

/// Epsilon-greedy choice. Always consumes two uniform draws: one decides
/// between exploring and exploiting, the other picks the random action or
/// breaks ties among equally valued greedy actions.
pub fn select_action(q: &QTable, state: StatusVector, epsilon: f64, rng: &mut SimRng) -> AssistAction {
    let explore = uniform(rng) < epsilon;
    let pick = uniform(rng);
    if explore {
        return AssistAction::ALL[pick_index(pick, AssistAction::COUNT)];
    }
    let row = q.row(state);
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ties = [AssistAction::NoAssistance; AssistAction::COUNT];
    let mut n = 0;
    for a in AssistAction::ALL {
        if row[a.index()] == best {
            ties[n] = a;
            n += 1;
        }
    }
    ties[pick_index(pick, n)]
}

/// One-step Q-learning backup; terminal successors bootstrap from zero.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut QTable,
    state: StatusVector,
    action: AssistAction,
    reward: f64,
    next: StatusVector,
    terminal: bool,
    alpha: f64,
    gamma: f64,
) {
    let future = if terminal { 0.0 } else { q.max_value(next) };
    let old = q.get(state, action);
    q.set(state, action, old + alpha * (reward + gamma * future - old));
}

/// Greedy policy with ties going to the lowest action index.
pub fn extract_policy(q: &QTable) -> Policy {
    let mut policy = Policy::uniform(AssistAction::NoAssistance);
    for s in StatusVector::all() {
        let row = q.row(s);
        let mut best = AssistAction::NoAssistance;
        for a in AssistAction::ALL {
            if row[a.index()] > row[best.index()] {
                best = a;
            }
        }
        policy.set(s, best);
    }
    policy
}

/// Which state the learner conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    #[default]
    True,
    /// Each bit of the true state flipped independently with probability `noise`.
    Perceived { noise: f64 },
}

impl Observation {
    fn observe(&self, state: StatusVector, rng: &mut SimRng) -> StatusVector {
        match *self {
            Observation::True => state,
            Observation::Perceived { noise } => flip_bits(state, noise, rng),
        }
    }
}

/// Flips each status independently with probability `noise`; four draws.
pub fn flip_bits(state: StatusVector, noise: f64, rng: &mut SimRng) -> StatusVector {
    let mut out = state;
    for s in Status::ALL {
        if uniform(rng) < noise {
            out.set(s, !state.get(s));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub epochs: u32,
    pub episodes_per_epoch: u32,
    pub schedule: EpsilonSchedule,
    pub seed: u64,
    #[serde(default)]
    pub observation: Observation,
    /// 1-based episode within each epoch after which the greedy policy is snapshotted.
    pub snapshot_episode: u32,
    /// Rollouts used to score each snapshot.
    pub snapshot_rollouts: u32,
    /// Number of trailing training episodes whose greedy policies are recorded.
    pub final_window: u32,
    pub env: Environment,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.05,
            discount: 0.95,
            epochs: 6000,
            episodes_per_epoch: 30,
            schedule: EpsilonSchedule::constant(EpsilonSchedule::DEFAULT_CONSTANT),
            seed: 0,
            observation: Observation::True,
            snapshot_episode: 10,
            snapshot_rollouts: 40,
            final_window: 100,
            env: Environment::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!("learning rate {} not in (0, 1]", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Config(format!("discount {} not in [0, 1)", self.discount)));
        }
        if self.epochs == 0 || self.episodes_per_epoch == 0 {
            return Err(Error::Config("epochs and episodes per epoch must be positive".into()));
        }
        if self.snapshot_episode == 0 || self.snapshot_rollouts == 0 {
            return Err(Error::Config("snapshot episode and rollouts must be positive".into()));
        }
        if let Observation::Perceived { noise } = self.observation {
            if !(0.0..=1.0).contains(&noise) {
                return Err(Error::Config(format!("perception noise {noise} not in [0, 1]")));
            }
        }
        self.schedule.validate()?;
        self.env.model.validate()?;
        self.env.scenario.validate()?;
        self.env.weights.validate()
    }

    pub fn total_episodes(&self) -> u64 {
        u64::from(self.epochs) * u64::from(self.episodes_per_epoch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub epsilon: f64,
    pub snapshot_policy: Policy,
    /// Mean undiscounted return of the snapshot policy.
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Greedy policy after each of the last training episodes, oldest first.
    pub final_policies: Vec<Policy>,
}

const LOG_EPOCH_HEADER: &str = "epoch,epsilon,snapshot_policy,mean_return";
const LOG_FINAL_HEADER: &str = "episode,policy";

impl TrainingLog {
    /// Two comma-separated sections: per-epoch rows, then the trailing
    /// episode policies after a `# final-episodes` marker.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(LOG_EPOCH_HEADER);
        out.push('\n');
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{},{}", r.epoch, r.epsilon, r.snapshot_policy.id(), r.mean_return);
        }
        out.push_str("# final-episodes\n");
        out.push_str(LOG_FINAL_HEADER);
        out.push('\n');
        for (i, p) in self.final_policies.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", p.id());
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |m: String| Error::parse("training log", m);
        let mut log = TrainingLog::default();
        let mut in_final = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line == "# final-episodes" {
                in_final = true;
                continue;
            }
            if line.starts_with('#') || line == LOG_EPOCH_HEADER || line == LOG_FINAL_HEADER {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if in_final {
                let [_, id] = fields[..] else {
                    return Err(err(format!("bad final-episode row {line:?}")));
                };
                log.final_policies.push(Policy::from_id(id)?);
            } else {
                let [epoch, eps, id, mean] = fields[..] else {
                    return Err(err(format!("bad epoch row {line:?}")));
                };
                log.epochs.push(EpochRecord {
                    epoch: epoch.parse().map_err(|e| err(format!("{e}: {line:?}")))?,
                    epsilon: eps.parse().map_err(|e| err(format!("{e}: {line:?}")))?,
                    snapshot_policy: Policy::from_id(id)?,
                    mean_return: mean.parse().map_err(|e| err(format!("{e}: {line:?}")))?,
                });
            }
        }
        Ok(log)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    /// `epoch,strategy,mean_return` rows for plotting learning curves.
    pub fn learning_curve_csv(&self, strategy: &str) -> String {
        let mut out = String::from("epoch,strategy,mean_return\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{strategy},{}", r.epoch, r.mean_return);
        }
        out
    }

    /// How often each trailing-window policy was suggested.
    pub fn final_policy_counts(&self) -> BTreeMap<Policy, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.final_policies {
            *counts.entry(*p).or_insert(0) += 1;
        }
        counts
    }
}

/// Seed for the snapshot rollouts of one epoch.
pub fn snapshot_seed(seed: u64, epoch: u32) -> u64 {
    derive_seed(derive_seed(seed, 0x5a4e), u64::from(epoch))
}

/// Runs the full training protocol. A single Q-table persists across all
/// epochs; epochs only delimit the exploration schedule and the snapshots.
pub fn train(config: &TrainingConfig) -> Result<(QTable, TrainingLog)> {
    config.validate()?;
    let env = &config.env;
    let mut q = QTable::new();
    let mut log = TrainingLog::default();
    let mut rng = stream(config.seed, STREAM_ENV);
    let total = config.total_episodes();
    let window_start = total.saturating_sub(u64::from(config.final_window));
    let snapshot_at = config.snapshot_episode.min(config.episodes_per_epoch);

    for epoch in 0..config.epochs {
        let epsilon = epsilon_at(&config.schedule, epoch);
        for episode in 0..config.episodes_per_epoch {
            run_training_episode(&mut q, config, epsilon, &mut rng)?;

            if episode + 1 == snapshot_at {
                let policy = extract_policy(&q);
                let report = evaluate_policy(
                    env,
                    &Actor::Greedy(policy),
                    config.snapshot_rollouts,
                    snapshot_seed(config.seed, epoch),
                )?;
                log.epochs.push(EpochRecord {
                    epoch,
                    epsilon,
                    snapshot_policy: policy,
                    mean_return: report.mean,
                });
            }
            let global = u64::from(epoch) * u64::from(config.episodes_per_epoch) + u64::from(episode);
            if global >= window_start {
                log.final_policies.push(extract_policy(&q));
            }
        }
    }
    Ok((q, log))
}

fn run_training_episode(q: &mut QTable, config: &TrainingConfig, epsilon: f64, rng: &mut SimRng) -> Result<()> {
    let mut episode = config.env.episode();
    let mut obs = config.observation.observe(episode.state(), rng);
    while !episode.is_done() {
        let action = select_action(q, obs, epsilon, rng);
        let step = episode.step(action, rng)?;
        let next_obs = config.observation.observe(step.next_state, rng);
        q_update(
            q,
            obs,
            action,
            step.reward,
            next_obs,
            step.terminal,
            config.learning_rate,
            config.discount,
        );
        obs = next_obs;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AssistAction::*;

    fn q_with_row(row: [f64; 4]) -> (QTable, StatusVector) {
        let s = StatusVector::new(true, false, false, true);
        let mut q = QTable::new();
        *q.row_mut(s) = row;
        (q, s)
    }

    #[test]
    fn epsilon_schedule_values() {
        let d = EpsilonSchedule::default_decay();
        assert_eq!(epsilon_at(&d, 0), 1.0);
        assert!((epsilon_at(&d, 300) - 0.8).abs() < 1e-9);
        // 0.03 + 0.97 * (0.77 / 0.97)^(10000 / 300)
        let late = 0.03 + 0.97 * (0.77f64 / 0.97).powf(10_000.0 / 300.0);
        assert!((epsilon_at(&d, 10_000) - late).abs() < 1e-12);
        assert!((epsilon_at(&d, 100_000) - 0.03).abs() < 1e-12);
        let EpsilonSchedule::ExponentialDecay { lambda, .. } = d else {
            panic!("expected decay")
        };
        assert!((lambda - (0.97f64 / 0.77).ln() / 300.0).abs() < 1e-15);
        assert!((lambda - 7.697e-4).abs() < 1e-7, "{lambda}");
        assert_eq!(epsilon_at(&EpsilonSchedule::constant(0.1), 5000), 0.1);
    }

    #[test]
    fn schedule_validation() {
        assert!(EpsilonSchedule::constant(1.5).validate().is_err());
        assert!(EpsilonSchedule::decay_through(0.03, 1.0, 300, 1.2).is_err());
        let bad = EpsilonSchedule::ExponentialDecay {
            eps_min: 0.5,
            eps_max: 0.2,
            lambda: 0.1,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn greedy_selection_and_ties() {
        let (q, s) = q_with_row([1.0, 2.0, 3.0, 0.0]);
        let mut rng = stream(0, 0);
        for _ in 0..100 {
            assert_eq!(select_action(&q, s, 0.0, &mut rng), VerbalNonDirective);
        }
        let (q, s) = q_with_row([0.0, 5.0, 5.0, 1.0]);
        let mut seen = [0usize; 4];
        for _ in 0..2000 {
            seen[select_action(&q, s, 0.0, &mut rng).index()] += 1;
        }
        assert_eq!(seen[0] + seen[3], 0);
        assert!(seen[1] > 800 && seen[2] > 800);
    }

    #[test]
    fn select_action_consumes_two_draws() {
        let q = QTable::new();
        let mut a = stream(4, 0);
        let mut b = stream(4, 0);
        select_action(&q, StatusVector::CLEAR, 0.3, &mut a);
        uniform(&mut b);
        uniform(&mut b);
        assert_eq!(uniform(&mut a), uniform(&mut b));
    }

    #[test]
    fn q_update_examples() {
        let s = StatusVector::CLEAR;
        let n = StatusVector::new(false, true, false, false);
        let mut q = QTable::new();
        q_update(&mut q, s, VerbalSupportive, 10.0, n, false, 0.05, 0.95);
        assert_eq!(q.get(s, VerbalSupportive), 0.5);

        let mut q = QTable::new();
        q.set(s, VerbalSupportive, 10.0);
        q_update(&mut q, s, VerbalSupportive, 0.0, n, true, 0.05, 0.95);
        assert_eq!(q.get(s, VerbalSupportive), 9.5);

        let mut q = QTable::new();
        for _ in 0..2000 {
            q_update(&mut q, s, VerbalDirective, 7.0, n, true, 0.05, 0.95);
        }
        assert!((q.get(s, VerbalDirective) - 7.0).abs() < 1e-9);
    }

    #[test]
    fn q_update_bootstraps_nonterminal() {
        let s = StatusVector::CLEAR;
        let n = StatusVector::new(false, false, true, false);
        let mut q = QTable::new();
        *q.row_mut(n) = [1.0, 4.0, -2.0, 0.0];
        q_update(&mut q, s, NoAssistance, 0.0, n, false, 0.5, 0.5);
        assert_eq!(q.get(s, NoAssistance), 1.0);
    }

    #[test]
    fn extraction_examples() {
        let (q, s) = q_with_row([0.0, 0.0, 0.0, 0.0]);
        assert_eq!(extract_policy(&q).action(s), NoAssistance);
        let (q, s) = q_with_row([-3.0, 5.0, 5.0, 1.0]);
        assert_eq!(extract_policy(&q).action(s), VerbalSupportive);
    }

    proptest! {
        #[test]
        fn extraction_invariant_under_positive_affine(
            rows in proptest::collection::vec(proptest::array::uniform4(-100.0f64..100.0), 16),
            scale in 0.01f64..100.0,
            shift in -50.0f64..50.0,
        ) {
            let mut q = QTable::new();
            let mut scaled = QTable::new();
            for (s, r) in StatusVector::all().zip(&rows) {
                *q.row_mut(s) = *r;
                *scaled.row_mut(s) = r.map(|v| v * scale);
            }
            prop_assert_eq!(extract_policy(&q), extract_policy(&scaled));
            let mut shifted = QTable::new();
            for s in StatusVector::all() {
                *shifted.row_mut(s) = q.row(s).map(|v| v + shift);
            }
            // shifting can merge nearly-equal values through rounding, so
            // only compare rows whose maximum is strictly unique by a margin
            let a = extract_policy(&q);
            let b = extract_policy(&shifted);
            for s in StatusVector::all() {
                let row = q.row(s);
                let best = row[a.action(s).index()];
                let runner_up = row.iter().copied().filter(|&v| v < best).fold(f64::NEG_INFINITY, f64::max);
                if best - runner_up > 1e-6 && row.iter().filter(|&&v| v == best).count() == 1 {
                    prop_assert_eq!(a.action(s), b.action(s));
                }
            }
        }

        #[test]
        fn qtable_text_roundtrip(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 64)) {
            let mut q = QTable::new();
            for (i, v) in vals.iter().enumerate() {
                q.set(StatusVector::from_index(i / 4).unwrap(), AssistAction::from_index(i % 4).unwrap(), *v);
            }
            prop_assert_eq!(QTable::from_text(&q.to_text()).unwrap(), q);
        }

        #[test]
        fn policy_id_and_text_roundtrip(digits in proptest::collection::vec(0usize..4, 16)) {
            let mut p = Policy::uniform(NoAssistance);
            for (s, d) in StatusVector::all().zip(&digits) {
                p.set(s, AssistAction::from_index(*d).unwrap());
            }
            prop_assert_eq!(Policy::from_id(&p.id()).unwrap(), p);
            prop_assert_eq!(Policy::from_text(&p.to_text()).unwrap(), p);
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(QTable::from_text("# caresim q-table v1\n0 0 0 0 0 1 2 3\n").is_err());
        let mut text = QTable::new().to_text();
        text = text.replacen("\n1 0 0 0 1", "\n1 1 0 0 1", 1);
        assert!(QTable::from_text(&text).is_err());
        assert!(Policy::from_text("0 [0,0,0,0] a1 x\n").is_err());
        assert!(Policy::from_id("0123").is_err());
        assert!(Policy::from_id("0000000000000004").is_err());
    }

    fn small_config(seed: u64) -> TrainingConfig {
        TrainingConfig {
            epochs: 20,
            episodes_per_epoch: 12,
            seed,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic_and_logs_protocol() {
        let cfg = small_config(3);
        let (q1, log1) = train(&cfg).unwrap();
        let (q2, log2) = train(&cfg).unwrap();
        assert_eq!(q1.to_text(), q2.to_text());
        assert_eq!(log1, log2);
        assert_eq!(log1.epochs.len(), 20);
        assert_eq!(log1.final_policies.len(), 100);
        assert!(q1.is_finite());
        assert_eq!(*log1.final_policies.last().unwrap(), extract_policy(&q1));

        let (q3, _) = train(&small_config(4)).unwrap();
        assert_ne!(q1, q3);
    }

    #[test]
    fn perceived_observation_trains() {
        let cfg = TrainingConfig {
            observation: Observation::Perceived { noise: 0.2 },
            ..small_config(5)
        };
        let (q, _) = train(&cfg).unwrap();
        assert!(q.is_finite());
        let bad = TrainingConfig {
            observation: Observation::Perceived { noise: 2.0 },
            ..small_config(5)
        };
        assert!(train(&bad).is_err());
    }

    #[test]
    fn training_log_roundtrip() {
        let (_, log) = train(&small_config(8)).unwrap();
        let back = TrainingLog::from_csv(&log.to_csv()).unwrap();
        assert_eq!(back, log);
        assert!(TrainingLog::from_csv("epoch,epsilon\n1,2\n").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = TrainingConfig {
            discount: 1.0,
            ..TrainingConfig::default()
        };
        assert!(c.validate().is_err());
        c.discount = 0.95;
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }
}
