//! Scenario structure and the subtask progression machine.
//!
//! Each timestep is one trial at the current subtask. The subtask completes
//! when the post-transition status vector is all clear; if `max_trial` trials
//! pass without that, the environment forces a skip. Either way the PLWD
//! moves on, and the episode ends once the last subtask of the last task is
//! resolved.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::status::{AssistAction, StatusVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    pub subtasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub max_trial: u32,
    pub tasks: Vec<TaskSpec>,
}

impl ScenarioSpec {
    /// The shipped shopping scenario: pick three listed items, then pay.
    pub fn shopping() -> Self {
        let mut pick = Vec::new();
        for item in ["one", "two", "three"] {
            pick.push(format!("Identify item {item}"));
            pick.push(format!("Pick up item {item} and gather it in a location"));
        }
        ScenarioSpec {
            name: "Shopping".into(),
            max_trial: 5,
            tasks: vec![
                TaskSpec {
                    name: "Select 3 items on the shopping list correctly".into(),
                    subtasks: pick,
                },
                TaskSpec {
                    name: "Select the correct cash for the 3 grocery items".into(),
                    subtasks: vec![
                        "Work out the total price of the items".into(),
                        "Hand over the matching cash".into(),
                    ],
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_trial < 1 {
            return Err(Error::Config("max_trial must be at least 1".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("scenario needs at least one task".into()));
        }
        if let Some(t) = self.tasks.iter().find(|t| t.subtasks.is_empty()) {
            return Err(Error::Config(format!("task {:?} has no subtasks", t.name)));
        }
        Ok(())
    }

    /// Parses and validates a JSON scenario document. Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| Error::parse("scenario", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn total_subtasks(&self) -> usize {
        self.tasks.iter().map(|t| t.subtasks.len()).sum()
    }

    /// Upper bound on the number of timesteps in one episode.
    pub fn max_episode_len(&self) -> usize {
        self.max_trial as usize * self.total_subtasks()
    }
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self::shopping()
    }
}

/// What happened to the progression in one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvents {
    pub delta_trial: u32,
    pub delta_timestep: u32,
    pub subtask_completed: bool,
    pub subtask_skipped: bool,
    pub task_completed: bool,
    pub action_taken: AssistAction,
}

impl StepEvents {
    /// No deltas, no flags.
    pub fn quiet(action_taken: AssistAction) -> Self {
        StepEvents {
            delta_trial: 0,
            delta_timestep: 0,
            subtask_completed: false,
            subtask_skipped: false,
            task_completed: false,
            action_taken,
        }
    }
}

/// Live position within a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProgressState {
    pub task_index: usize,
    pub subtask_index: usize,
    /// Trials spent on the current subtask.
    pub trial_count: u32,
    /// Timesteps spent in the episode.
    pub timestep_count: u32,
    pub subtask_started: bool,
    /// `(task, subtask)` pairs that were force-skipped.
    pub skipped_subtasks: BTreeSet<(usize, usize)>,
    pub terminal: bool,
}

impl ProgressState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    /// Records one trial whose outcome is `post_state` and moves on if the
    /// subtask completed or ran out of trials.
    pub fn advance(
        &mut self,
        spec: &ScenarioSpec,
        post_state: StatusVector,
        action: AssistAction,
    ) -> Result<StepEvents> {
        if self.terminal {
            return Err(Error::Usage("advance called on a finished scenario".into()));
        }
        let subtask_count = spec
            .tasks
            .get(self.task_index)
            .map(|t| t.subtasks.len())
            .ok_or_else(|| Error::Usage(format!("task index {} out of range", self.task_index)))?;

        self.trial_count += 1;
        self.timestep_count += 1;
        self.subtask_started = true;

        let mut events = StepEvents {
            delta_trial: 1,
            delta_timestep: 1,
            ..StepEvents::quiet(action)
        };

        if post_state.is_clear() && self.subtask_started {
            events.subtask_completed = true;
        } else if self.trial_count >= spec.max_trial {
            events.subtask_skipped = true;
            self.skipped_subtasks.insert((self.task_index, self.subtask_index));
        } else {
            return Ok(events);
        }

        self.trial_count = 0;
        self.subtask_started = false;
        self.subtask_index += 1;
        if self.subtask_index == subtask_count {
            events.task_completed = true;
            self.subtask_index = 0;
            self.task_index += 1;
            self.terminal = self.task_index == spec.tasks.len();
        }
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AssistAction::*;

    fn tiny(subtasks: &[usize], max_trial: u32) -> ScenarioSpec {
        ScenarioSpec {
            name: "tiny".into(),
            max_trial,
            tasks: subtasks
                .iter()
                .enumerate()
                .map(|(i, &n)| TaskSpec {
                    name: format!("task {i}"),
                    subtasks: (0..n).map(|j| format!("sub {j}")).collect(),
                })
                .collect(),
        }
    }

    fn dirty() -> StatusVector {
        StatusVector::new(false, true, false, false)
    }

    #[test]
    fn shopping_default_shape() {
        let s = ScenarioSpec::shopping();
        s.validate().unwrap();
        assert_eq!(s.tasks.len(), 2);
        assert_eq!(s.tasks[0].subtasks.len(), 6);
        assert_eq!(s.tasks[1].subtasks.len(), 2);
        assert_eq!(s.max_trial, 5);
        assert_eq!(s.tasks[0].name, "Select 3 items on the shopping list correctly");
        assert_eq!(ScenarioSpec::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn schema_violations() {
        let empty = r#"{"name":"x","max_trial":5,"tasks":[]}"#;
        assert!(matches!(ScenarioSpec::from_json(empty), Err(Error::Config(_))));
        let zero = r#"{"name":"x","max_trial":0,"tasks":[{"name":"t","subtasks":["a"]}]}"#;
        assert!(matches!(ScenarioSpec::from_json(zero), Err(Error::Config(_))));
        let no_sub = r#"{"name":"x","max_trial":3,"tasks":[{"name":"t","subtasks":[]}]}"#;
        assert!(matches!(ScenarioSpec::from_json(no_sub), Err(Error::Config(_))));
        let extra = r#"{"name":"x","max_trial":3,"color":"red","tasks":[{"name":"t","subtasks":["a"]}]}"#;
        assert!(matches!(ScenarioSpec::from_json(extra), Err(Error::Parse { .. })));
        let five = r#"{"name":"x","max_trial":5,"tasks":[{"name":"t","subtasks":["a"]}]}"#;
        assert_eq!(ScenarioSpec::from_json(five).unwrap().max_trial, 5);
        assert!(ScenarioSpec::from_json("{").is_err());
    }

    #[test]
    fn completion_moves_to_next_subtask() {
        let spec = tiny(&[6, 2], 5);
        let mut p = ProgressState::new();
        let e = p.advance(&spec, StatusVector::CLEAR, VerbalSupportive).unwrap();
        assert!(e.subtask_completed && !e.subtask_skipped && !e.task_completed);
        assert_eq!((p.task_index, p.subtask_index, p.trial_count), (0, 1, 0));
        assert_eq!(p.timestep_count, 1);
    }

    #[test]
    fn skip_at_max_trial() {
        let spec = tiny(&[6, 2], 5);
        let mut p = ProgressState::new();
        for _ in 0..4 {
            let e = p.advance(&spec, dirty(), NoAssistance).unwrap();
            assert!(!e.subtask_skipped && !e.subtask_completed);
        }
        assert_eq!(p.trial_count, 4);
        let e = p.advance(&spec, dirty(), NoAssistance).unwrap();
        assert!(e.subtask_skipped && !e.subtask_completed);
        assert!(p.skipped_subtasks.contains(&(0, 0)));
        assert_eq!((p.subtask_index, p.trial_count, p.timestep_count), (1, 0, 5));
    }

    #[test]
    fn completion_on_last_trial_wins_over_skip() {
        let spec = tiny(&[2], 2);
        let mut p = ProgressState::new();
        p.advance(&spec, dirty(), NoAssistance).unwrap();
        let e = p.advance(&spec, StatusVector::CLEAR, NoAssistance).unwrap();
        assert!(e.subtask_completed && !e.subtask_skipped);
        assert!(p.skipped_subtasks.is_empty());
    }

    #[test]
    fn last_subtask_terminates() {
        let spec = tiny(&[1, 1], 5);
        let mut p = ProgressState::new();
        let e = p.advance(&spec, StatusVector::CLEAR, NoAssistance).unwrap();
        assert!(e.task_completed && !p.is_terminal());
        let e = p.advance(&spec, StatusVector::CLEAR, NoAssistance).unwrap();
        assert!(e.task_completed && p.is_terminal());
        assert_eq!(p.task_index, 2);
        assert!(matches!(
            p.advance(&spec, StatusVector::CLEAR, NoAssistance),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn all_skipped_is_terminal_and_task_bonus_fires() {
        let spec = tiny(&[2], 1);
        let mut p = ProgressState::new();
        assert!(!p.is_terminal());
        let e = p.advance(&spec, dirty(), NoAssistance).unwrap();
        assert!(e.subtask_skipped && !e.task_completed);
        let e = p.advance(&spec, dirty(), NoAssistance).unwrap();
        assert!(e.subtask_skipped && e.task_completed);
        assert!(p.is_terminal());
        assert_eq!(p.skipped_subtasks.len(), 2);
    }

    #[test]
    fn episode_length_bound() {
        let spec = tiny(&[3, 2], 4);
        let mut p = ProgressState::new();
        let mut steps = 0;
        while !p.is_terminal() {
            p.advance(&spec, dirty(), NoAssistance).unwrap();
            steps += 1;
        }
        assert_eq!(steps, spec.max_episode_len());
        assert_eq!(p.timestep_count as usize, steps);
    }
}
