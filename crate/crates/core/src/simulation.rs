//! Full two-agent loop: the PLWD behaves, the caregiver perceives, decides,
//! speaks, and the PLWD's statuses transition.
//!
//! Environment dynamics and the text layer draw from separate random streams
//! of the same seed, so swapping backends or prompt variants never changes
//! the status trajectory under a fixed policy.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agent::Policy;
use crate::env::Environment;
use crate::error::Result;
use crate::rng::{stream, STREAM_ENV, STREAM_TEXT};
use crate::status::{AssistAction, StatusVector};
use crate::text::{
    BehaviorText, InteractionContext, PromptVariant, Speaker, TextBackend, DEFAULT_HISTORY_CAP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Per-bit perception flip probability.
    pub noise: f64,
    /// Decide from the perceived state instead of the true state.
    pub use_perceived: bool,
    pub variant: PromptVariant,
    pub history_cap: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: 0,
            noise: 0.0,
            use_perceived: false,
            variant: PromptVariant::default(),
            history_cap: DEFAULT_HISTORY_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub timestep: u32,
    pub true_state: StatusVector,
    pub behavior: BehaviorText,
    pub perceived: StatusVector,
    pub action: AssistAction,
    pub utterance: String,
    pub reward: f64,
    pub task: usize,
    pub subtask: usize,
    pub trial: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub scenario: String,
    pub backend: String,
    pub config: SimulationConfig,
    pub steps: Vec<TranscriptStep>,
    pub total_return: f64,
    pub skipped_subtasks: usize,
}

impl Transcript {
    /// Line-oriented UTF-8 rendering. Task, subtask and trial numbers are 1-based.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "# caresim transcript");
        let _ = writeln!(out, "# scenario: {}", self.scenario);
        let _ = writeln!(out, "# backend: {}", self.backend);
        let _ = writeln!(out, "# prompt-variant: {}", c.variant.label());
        let _ = writeln!(out, "# seed: {}", c.seed);
        let _ = writeln!(out, "# perception-noise: {}", c.noise);
        let _ = writeln!(
            out,
            "# decisions-from: {}",
            if c.use_perceived { "perceived" } else { "true" }
        );
        for s in &self.steps {
            let _ = writeln!(out, "=== Timestep {} ===", s.timestep);
            let _ = writeln!(out, "TrueState: {}", s.true_state);
            let _ = writeln!(out, "PLWD: {} | {}", s.behavior.nonverbal, s.behavior.verbal);
            let _ = writeln!(out, "Perceived: {}", s.perceived);
            let _ = writeln!(out, "Action: {} {}", s.action.code(), s.action.label());
            let _ = writeln!(out, "Robot: {}", s.utterance);
            let _ = writeln!(out, "Reward: {}", s.reward);
            let _ = writeln!(
                out,
                "Progress: task {} subtask {} trial {}",
                s.task + 1,
                s.subtask + 1,
                s.trial
            );
        }
        let _ = writeln!(out, "=== End ===");
        let _ = writeln!(out, "Return: {}", self.total_return);
        let _ = writeln!(out, "Skipped subtasks: {}", self.skipped_subtasks);
        out
    }
}

/// Runs one episode of `policy` with full text rendering.
pub fn simulate(
    env: &Environment,
    policy: &Policy,
    backend: &mut dyn TextBackend,
    config: &SimulationConfig,
) -> Result<Transcript> {
    let mut env_rng = stream(config.seed, STREAM_ENV);
    let mut text_rng = stream(config.seed, STREAM_TEXT);
    let mut ctx = InteractionContext::with_cap(&env.scenario.name, config.history_cap);
    let mut episode = env.episode();
    let mut steps = Vec::new();

    while !episode.is_done() {
        let progress = episode.progress();
        let task = &env.scenario.tasks[progress.task_index];
        ctx.set_position(&task.name, &task.subtasks[progress.subtask_index]);

        let true_state = episode.state();
        let behavior = backend.narrate(true_state, &ctx, &mut text_rng)?;
        let perceived = backend.perceive(&behavior, &ctx, config.noise, &mut text_rng)?.state;
        let decision_state = if config.use_perceived { perceived } else { true_state };
        let action = policy.action(decision_state);
        let utterance = backend.render_assist(
            action,
            &ctx,
            Some(&behavior),
            config.variant,
            Some(decision_state),
            &mut text_rng,
        )?;
        let step = episode.step(action, &mut env_rng)?;

        let said = if behavior.verbal.is_empty() {
            "(silent)".to_string()
        } else {
            behavior.verbal.clone()
        };
        ctx.push(Speaker::Plwd, said);
        if utterance.is_empty() {
            ctx.latest_assist = None;
        } else {
            ctx.push(Speaker::Caregiver, utterance.clone());
        }

        steps.push(TranscriptStep {
            timestep: steps.len() as u32 + 1,
            true_state,
            behavior,
            perceived,
            action,
            utterance,
            reward: step.reward,
            task: step.task_index,
            subtask: step.subtask_index,
            trial: step.trial,
        });
    }

    Ok(Transcript {
        scenario: env.scenario.name.clone(),
        backend: backend.name().to_string(),
        config: config.clone(),
        steps,
        total_return: episode.total_reward(),
        skipped_subtasks: episode.progress().skipped_subtasks.len(),
    })
}
