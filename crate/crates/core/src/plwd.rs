//! Probabilistic dynamics of the PLWD's four statuses.
//!
//! Each status is a two-state Markov chain whose onset probability (No to Yes)
//! is raised additively by the other statuses currently present, and whose
//! persistence (Yes to Yes) is a fixed per-status value. Assistance actions
//! may override both for selected statuses, and a forced subtask skip has its
//! own persistence rules. Statuses are sampled independently given the
//! current vector, always in [`Status::ALL`] order, one draw each.

use std::ops::{Index, IndexMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{uniform, SimRng};
use crate::status::{AssistAction, Status, StatusVector};

/// One value per status.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusMap<T> {
    pub forgetful: T,
    pub confused: T,
    pub angry: T,
    pub disengaged: T,
}

impl<T> StatusMap<T> {
    pub fn new(forgetful: T, confused: T, angry: T, disengaged: T) -> Self {
        StatusMap {
            forgetful,
            confused,
            angry,
            disengaged,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Status, &T)> {
        Status::ALL.into_iter().map(move |s| (s, &self[s]))
    }
}

impl<T> Index<Status> for StatusMap<T> {
    type Output = T;

    fn index(&self, s: Status) -> &T {
        match s {
            Status::Forgetful => &self.forgetful,
            Status::Confused => &self.confused,
            Status::Angry => &self.angry,
            Status::Disengaged => &self.disengaged,
        }
    }
}

impl<T> IndexMut<Status> for StatusMap<T> {
    fn index_mut(&mut self, s: Status) -> &mut T {
        match s {
            Status::Forgetful => &mut self.forgetful,
            Status::Confused => &mut self.confused,
            Status::Angry => &mut self.angry,
            Status::Disengaged => &mut self.disengaged,
        }
    }
}

/// Replaces the no-assist rule for one status under one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssistOverride {
    pub action: AssistAction,
    pub status: Status,
    /// P(Yes at t+1 | Yes at t).
    pub persist_prob: f64,
    /// P(Yes at t+1 | No at t).
    pub onset_prob: f64,
}

/// Persistence of one status across a forced skip.
///
/// If the status is present, it persists with `with_partner` when the
/// `partner` status is also present and with `alone` otherwise (a rule
/// without a partner always uses `alone`). Absent statuses stay absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipRule {
    #[serde(default)]
    pub partner: Option<Status>,
    #[serde(default)]
    pub with_partner: f64,
    pub alone: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionModel {
    pub base_onset: StatusMap<f64>,
    pub persistence: StatusMap<f64>,
    /// `influence[x][y]`: added to y's onset while x is present. Diagonal ignored.
    pub influence: StatusMap<StatusMap<f64>>,
    #[serde(default)]
    pub assist_overrides: Vec<AssistOverride>,
    pub skip: StatusMap<SkipRule>,
}

impl Default for TransitionModel {
    fn default() -> Self {
        use AssistAction::*;
        use Status::*;
        let ov = |action, status, persist_prob, onset_prob| AssistOverride {
            action,
            status,
            persist_prob,
            onset_prob,
        };
        TransitionModel {
            base_onset: StatusMap::new(0.30, 0.30, 0.05, 0.20),
            persistence: StatusMap::new(0.99, 0.99, 1.00, 0.99),
            influence: StatusMap {
                forgetful: StatusMap::new(0.0, 0.05, 0.06, 0.02),
                confused: StatusMap::new(0.07, 0.0, 0.08, 0.02),
                angry: StatusMap::new(0.07, 0.08, 0.0, 0.10),
                disengaged: StatusMap::new(0.07, 0.10, 0.20, 0.0),
            },
            assist_overrides: vec![
                ov(VerbalSupportive, Angry, 0.05, 0.0),
                ov(VerbalSupportive, Disengaged, 0.05, 0.0),
                ov(VerbalNonDirective, Forgetful, 0.40, 0.0),
                ov(VerbalNonDirective, Confused, 0.60, 0.0),
                ov(VerbalDirective, Forgetful, 0.05, 0.0),
                ov(VerbalDirective, Confused, 0.05, 0.0),
            ],
            skip: StatusMap {
                forgetful: SkipRule {
                    partner: Some(Confused),
                    with_partner: 0.5,
                    alone: 0.2,
                },
                confused: SkipRule {
                    partner: Some(Forgetful),
                    with_partner: 0.5,
                    alone: 0.2,
                },
                angry: SkipRule {
                    partner: None,
                    with_partner: 0.0,
                    alone: 0.5,
                },
                disengaged: SkipRule {
                    partner: None,
                    with_partner: 0.0,
                    alone: 0.5,
                },
            },
        }
    }
}

fn check_prob(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} = {p} is not a probability in [0, 1]")))
    }
}

impl TransitionModel {
    pub fn validate(&self) -> Result<()> {
        for s in Status::ALL {
            check_prob(&format!("base_onset.{s}"), self.base_onset[s])?;
            check_prob(&format!("persistence.{s}"), self.persistence[s])?;
            for t in Status::ALL {
                check_prob(&format!("influence.{s}.{t}"), self.influence[s][t])?;
            }
            let rule = &self.skip[s];
            check_prob(&format!("skip.{s}.with_partner"), rule.with_partner)?;
            check_prob(&format!("skip.{s}.alone"), rule.alone)?;
            if rule.partner == Some(s) {
                return Err(Error::Config(format!("skip.{s}.partner cannot be itself")));
            }
        }
        for (i, o) in self.assist_overrides.iter().enumerate() {
            check_prob(&format!("assist_overrides[{i}].persist_prob"), o.persist_prob)?;
            check_prob(&format!("assist_overrides[{i}].onset_prob"), o.onset_prob)?;
            let dup = self.assist_overrides[..i]
                .iter()
                .any(|p| p.action == o.action && p.status == o.status);
            if dup {
                return Err(Error::Config(format!(
                    "duplicate assist override for ({}, {})",
                    o.action, o.status
                )));
            }
        }
        Ok(())
    }

    /// Parses and validates a JSON model document. Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: TransitionModel =
            serde_json::from_str(text).map_err(|e| Error::parse("transition model", e))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn override_for(&self, action: AssistAction, status: Status) -> Option<&AssistOverride> {
        self.assist_overrides
            .iter()
            .find(|o| o.action == action && o.status == status)
    }

    /// P(`target` is Yes at t+1 | `current`, `assist`).
    ///
    /// An override for `(assist, target)` wins; otherwise a present status
    /// persists with its fixed persistence and an absent one turns on with
    /// its base onset plus the influence of every other present status,
    /// clamped to `[0, 1]`.
    pub fn onset_probability(&self, current: StatusVector, assist: AssistAction, target: Status) -> f64 {
        if let Some(o) = self.override_for(assist, target) {
            return if current.get(target) { o.persist_prob } else { o.onset_prob };
        }
        if current.get(target) {
            return self.persistence[target];
        }
        let boost: f64 = current
            .active()
            .filter(|&x| x != target)
            .map(|x| self.influence[x][target])
            .sum();
        (self.base_onset[target] + boost).clamp(0.0, 1.0)
    }

    /// [`onset_probability`](Self::onset_probability) addressed by status id `0..4`.
    pub fn onset_probability_by_id(&self, current: StatusVector, assist: AssistAction, target: usize) -> Result<f64> {
        Ok(self.onset_probability(current, assist, Status::from_index(target)?))
    }

    /// Samples the next status vector. Consumes exactly four uniform draws.
    pub fn transition(&self, current: StatusVector, assist: AssistAction, rng: &mut SimRng) -> StatusVector {
        sample(rng, |s| self.onset_probability(current, assist, s))
    }

    /// P(`target` is Yes right after a forced skip from `current`).
    pub fn skip_probability(&self, current: StatusVector, target: Status) -> f64 {
        if !current.get(target) {
            return 0.0;
        }
        let rule = &self.skip[target];
        match rule.partner {
            Some(p) if current.get(p) => rule.with_partner,
            _ => rule.alone,
        }
    }

    /// Samples the post-skip status vector. Consumes exactly four uniform draws.
    pub fn step_skip(&self, current: StatusVector, rng: &mut SimRng) -> StatusVector {
        sample(rng, |s| self.skip_probability(current, s))
    }
}

fn sample(rng: &mut SimRng, prob: impl Fn(Status) -> f64) -> StatusVector {
    let mut next = StatusVector::CLEAR;
    for s in Status::ALL {
        let u = uniform(rng);
        next.set(s, u < prob(s));
    }
    next
}
