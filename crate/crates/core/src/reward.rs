//! Immediate reward for one caregiver timestep.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::StepEvents;
use crate::status::{AssistAction, Status, StatusVector};

/// Cost of finishing a subtask under each assistance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssistCosts {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl AssistCosts {
    pub fn get(&self, action: AssistAction) -> f64 {
        match action {
            AssistAction::NoAssistance => self.a0,
            AssistAction::VerbalSupportive => self.a1,
            AssistAction::VerbalNonDirective => self.a2,
            AssistAction::VerbalDirective => self.a3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub forget: f64,
    pub confuse: f64,
    pub anger: f64,
    pub disengaged: f64,
    pub increased_trial: f64,
    pub subtask_complete: f64,
    pub subtask_skip: f64,
    pub increased_timestep: f64,
    pub task_complete: f64,
    pub assist: AssistCosts,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            forget: -1.0,
            confuse: -1.0,
            anger: -5.0,
            disengaged: -1.0,
            increased_trial: -1.0,
            subtask_complete: 50.0,
            subtask_skip: -10.0,
            increased_timestep: -1.0,
            task_complete: 20.0,
            assist: AssistCosts {
                a0: 0.0,
                a1: -1.0,
                a2: -3.0,
                a3: -5.0,
            },
        }
    }
}

impl RewardWeights {
    pub fn status_weight(&self, status: Status) -> f64 {
        match status {
            Status::Forgetful => self.forget,
            Status::Confused => self.confuse,
            Status::Angry => self.anger,
            Status::Disengaged => self.disengaged,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.forget,
            self.confuse,
            self.anger,
            self.disengaged,
            self.increased_trial,
            self.subtask_complete,
            self.subtask_skip,
            self.increased_timestep,
            self.task_complete,
            self.assist.a0,
            self.assist.a1,
            self.assist.a2,
            self.assist.a3,
        ];
        if all.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("reward weights must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: RewardWeights = serde_json::from_str(text).map_err(|e| Error::parse("reward weights", e))?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }
}

/// Reward of a timestep whose post-transition state is `next_state`.
///
/// The assistance cost is charged only together with the completion bonus,
/// using the action that completed the subtask.
pub fn compute_reward(next_state: StatusVector, events: &StepEvents, weights: &RewardWeights) -> f64 {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let status: f64 = next_state.active().map(|s| weights.status_weight(s)).sum();
    status
        + weights.increased_trial * f64::from(events.delta_trial)
        + (weights.subtask_complete + weights.assist.get(events.action_taken)) * flag(events.subtask_completed)
        + weights.subtask_skip * flag(events.subtask_skipped)
        + weights.increased_timestep * f64::from(events.delta_timestep)
        + weights.task_complete * flag(events.task_completed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use AssistAction::*;

    fn step(action: AssistAction) -> StepEvents {
        StepEvents {
            delta_trial: 1,
            delta_timestep: 1,
            ..StepEvents::quiet(action)
        }
    }

    #[test]
    fn defaults_follow_ordering() {
        let w = RewardWeights::default();
        assert!(w.anger < w.forget);
        let costs: Vec<f64> = AssistAction::ALL.iter().map(|&a| w.assist.get(a)).collect();
        assert!(costs.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn examples() {
        let w = RewardWeights::default();
        let done = StepEvents {
            subtask_completed: true,
            ..step(VerbalSupportive)
        };
        assert_eq!(compute_reward(StatusVector::CLEAR, &done, &w), 47.0);

        let angry = StatusVector::new(false, false, true, false);
        assert_eq!(compute_reward(angry, &step(VerbalDirective), &w), -7.0);

        let skip = StepEvents {
            subtask_skipped: true,
            ..step(NoAssistance)
        };
        let s = StatusVector::new(true, true, false, true);
        assert_eq!(compute_reward(s, &skip, &w), -15.0);

        assert_eq!(compute_reward(StatusVector::CLEAR, &StepEvents::quiet(VerbalDirective), &w), 0.0);
    }

    #[test]
    fn less_assistance_pays_more_on_completion() {
        let w = RewardWeights::default();
        let r = |a| {
            let e = StepEvents {
                subtask_completed: true,
                ..step(a)
            };
            compute_reward(StatusVector::CLEAR, &e, &w)
        };
        assert_eq!(r(NoAssistance) - r(VerbalSupportive), 1.0);
        assert_eq!(r(VerbalSupportive) - r(VerbalNonDirective), 2.0);
        assert_eq!(r(VerbalNonDirective) - r(VerbalDirective), 2.0);
    }

    #[test]
    fn status_bits_never_raise_reward() {
        let w = RewardWeights::default();
        let e = step(VerbalNonDirective);
        for s in StatusVector::all() {
            for t in Status::ALL.into_iter().filter(|&t| !s.get(t)) {
                assert!(compute_reward(s.with(t, true), &e, &w) <= compute_reward(s, &e, &w));
            }
        }
    }

    #[test]
    fn json_rejects_unknown_and_nonfinite() {
        let w = RewardWeights::default();
        assert_eq!(RewardWeights::from_json(&w.to_json()).unwrap(), w);
        let mut v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        v["bonus"] = serde_json::json!(3);
        assert!(RewardWeights::from_json(&v.to_string()).is_err());
    }
}
