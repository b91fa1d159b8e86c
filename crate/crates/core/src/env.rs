//! One episode of PLWD dynamics driven by caregiver actions.
//!
//! A step samples the status transition under the chosen action, advances
//! the scenario on the post-transition state and scores the reward on it.
//! When that step forces a skip, the skip transition is applied on top, so
//! the state the caregiver sees next is the post-skip state.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plwd::TransitionModel;
use crate::reward::{compute_reward, RewardWeights};
use crate::rng::SimRng;
use crate::scenario::{ProgressState, ScenarioSpec, StepEvents};
use crate::status::{AssistAction, StatusVector};

/// Everything needed to simulate an episode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Environment {
    pub model: TransitionModel,
    pub scenario: ScenarioSpec,
    pub weights: RewardWeights,
}

impl Environment {
    pub fn new(model: TransitionModel, scenario: ScenarioSpec, weights: RewardWeights) -> Result<Self> {
        model.validate()?;
        scenario.validate()?;
        weights.validate()?;
        Ok(Environment {
            model,
            scenario,
            weights,
        })
    }

    pub fn episode(&self) -> Episode<'_> {
        Episode::new(self)
    }
}

/// Record of a single timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: StatusVector,
    pub action: AssistAction,
    /// Where the trial happened (before advancing).
    pub task_index: usize,
    pub subtask_index: usize,
    /// 1-based trial number of this step within its subtask.
    pub trial: u32,
    /// State right after the assistance transition; the reward is scored on it.
    pub post_transition: StatusVector,
    /// State the next step starts from (post-skip when a skip fired).
    pub next_state: StatusVector,
    pub events: StepEvents,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct Episode<'a> {
    env: &'a Environment,
    state: StatusVector,
    progress: ProgressState,
    total: f64,
}

impl<'a> Episode<'a> {
    pub fn new(env: &'a Environment) -> Self {
        Episode {
            env,
            state: StatusVector::CLEAR,
            progress: ProgressState::new(),
            total: 0.0,
        }
    }

    pub fn state(&self) -> StatusVector {
        self.state
    }

    pub fn progress(&self) -> &ProgressState {
        &self.progress
    }

    pub fn is_done(&self) -> bool {
        self.progress.is_terminal()
    }

    /// Undiscounted return accumulated so far.
    pub fn total_reward(&self) -> f64 {
        self.total
    }

    /// Consumes four rng draws, plus four more when a skip fires.
    pub fn step(&mut self, action: AssistAction, rng: &mut SimRng) -> Result<Step> {
        let env = self.env;
        let (task_index, subtask_index) = (self.progress.task_index, self.progress.subtask_index);
        let trial = self.progress.trial_count + 1;
        let post = env.model.transition(self.state, action, rng);
        let events = self.progress.advance(&env.scenario, post, action)?;
        let reward = compute_reward(post, &events, &env.weights);
        let next = if events.subtask_skipped {
            env.model.step_skip(post, rng)
        } else {
            post
        };
        let step = Step {
            state: self.state,
            action,
            task_index,
            subtask_index,
            trial,
            post_transition: post,
            next_state: next,
            events,
            reward,
            terminal: self.progress.is_terminal(),
        };
        self.state = next;
        self.total += reward;
        Ok(step)
    }
}
