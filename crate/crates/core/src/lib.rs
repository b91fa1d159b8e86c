//! Simulator of dementia-caregiving interactions.
//!
//! A person living with dementia (PLWD) works through the subtasks of a daily
//! activity while their four binary statuses (forgetful, confused, angry,
//! disengaged) evolve as a Markov chain. A caregiver agent picks one of four
//! verbal assistance levels each timestep and learns which to use by tabular
//! Q-learning. A text layer turns states into behavior descriptions and
//! actions into caregiver speech.
//!
//! Module map:
//!
//! - [`status`]: the status vector and the assistance actions.
//! - [`plwd`]: transition probabilities and sampling.
//! - [`scenario`]: tasks, subtasks and the trial/skip progression machine.
//! - [`reward`]: the immediate reward.
//! - [`env`]: one episode of PLWD + scenario + reward.
//! - [`agent`]: Q-table, exploration schedules, training, policies.
//! - [`evaluation`]: Monte Carlo rollouts and final-policy selection.
//! - [`text`]: template and chat-completions text backends.
//! - [`simulation`]: the full perceive/decide/assist/transition loop with transcripts.

pub mod agent;
pub mod env;
pub mod error;
pub mod evaluation;
pub mod plwd;
pub mod reward;
pub mod rng;
pub mod scenario;
pub mod simulation;
pub mod status;
pub mod text;

pub use agent::{
    epsilon_at, extract_policy, q_update, select_action, train, EpsilonSchedule, Observation,
    Policy, QTable, TrainingConfig, TrainingLog,
};
pub use env::{Environment, Episode, Step};
pub use error::{Error, Result};
pub use evaluation::{evaluate_policy, run_episode, select_final_policy, Actor, EvaluationReport};
pub use plwd::TransitionModel;
pub use reward::{compute_reward, RewardWeights};
pub use rng::SimRng;
pub use scenario::{ProgressState, ScenarioSpec, StepEvents, TaskSpec};
pub use status::{AssistAction, Status, StatusVector};
