//! Text layer: behavior narration, perception and caregiver speech.
//!
//! Two backends implement [`TextBackend`]. [`TemplateBackend`] composes text
//! from fixed phrase banks, is a pure function of its inputs and rng, and
//! embeds a machine-readable state marker so perception can be exact.
//! [`HttpBackend`] sends prompts to any chat-completions endpoint.

mod http;
pub mod prompts;
mod template;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use http::{ChatClient, ChatMessage, HttpBackend, HttpConfig, HttpError, DEFAULT_API_KEY_ENV};
pub use template::TemplateBackend;

use crate::rng::SimRng;
use crate::status::{AssistAction, StatusVector};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("could not parse {what} from {raw:?}")]
    Unparseable { what: &'static str, raw: String },

    #[error(transparent)]
    Http(#[from] HttpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Plwd,
    Caregiver,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::Plwd => "PLWD",
            Speaker::Caregiver => "Caregiver",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

pub const DEFAULT_HISTORY_CAP: usize = 20;

/// What the text layer knows about the ongoing interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionContext {
    pub scenario: String,
    pub task: String,
    pub subtask: String,
    history: VecDeque<Utterance>,
    cap: usize,
    /// The caregiver's most recent utterance, if any.
    pub latest_assist: Option<String>,
}

impl InteractionContext {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self::with_cap(scenario, DEFAULT_HISTORY_CAP)
    }

    pub fn with_cap(scenario: impl Into<String>, cap: usize) -> Self {
        InteractionContext {
            scenario: scenario.into(),
            task: String::new(),
            subtask: String::new(),
            history: VecDeque::new(),
            cap: cap.max(1),
            latest_assist: None,
        }
    }

    pub fn set_position(&mut self, task: impl Into<String>, subtask: impl Into<String>) {
        self.task = task.into();
        self.subtask = subtask.into();
    }

    /// Appends to the history, dropping the oldest entry past the cap.
    pub fn push(&mut self, speaker: Speaker, text: impl Into<String>) {
        let text = text.into();
        if speaker == Speaker::Caregiver {
            self.latest_assist = Some(text.clone());
        }
        self.history.push_back(Utterance { speaker, text });
        while self.history.len() > self.cap {
            self.history.pop_front();
        }
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &Utterance> {
        self.history.iter()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorText {
    pub nonverbal: String,
    /// May be empty when the PLWD says nothing.
    pub verbal: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Read from an embedded marker with no noise.
    Exact,
    /// Parsed from a model reply.
    Parsed,
    /// Read from a marker, then passed through bit-flip noise.
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceivedState {
    pub state: StatusVector,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Guidance {
    #[default]
    Brief,
    Detailed,
}

/// How much the caregiver-speech prompt tells the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct PromptVariant {
    pub guidance: Guidance,
    pub include_state: bool,
}

impl PromptVariant {
    pub fn all() -> [PromptVariant; 4] {
        [
            PromptVariant { guidance: Guidance::Brief, include_state: false },
            PromptVariant { guidance: Guidance::Brief, include_state: true },
            PromptVariant { guidance: Guidance::Detailed, include_state: false },
            PromptVariant { guidance: Guidance::Detailed, include_state: true },
        ]
    }

    pub fn label(&self) -> String {
        let g = match self.guidance {
            Guidance::Brief => "brief",
            Guidance::Detailed => "detailed",
        };
        let s = if self.include_state { "with-state" } else { "no-state" };
        format!("{g}/{s}")
    }
}

pub trait TextBackend {
    fn name(&self) -> &'static str;

    /// Describes what the PLWD does and says in `state`.
    fn narrate(
        &mut self,
        state: StatusVector,
        ctx: &InteractionContext,
        rng: &mut SimRng,
    ) -> Result<BehaviorText, TextError>;

    /// Estimates the status vector from a behavior description.
    fn perceive(
        &mut self,
        behavior: &BehaviorText,
        ctx: &InteractionContext,
        noise: f64,
        rng: &mut SimRng,
    ) -> Result<PerceivedState, TextError>;

    /// Turns an abstract assistance level into caregiver speech.
    fn render_assist(
        &mut self,
        action: AssistAction,
        ctx: &InteractionContext,
        behavior: Option<&BehaviorText>,
        variant: PromptVariant,
        state: Option<StatusVector>,
        rng: &mut SimRng,
    ) -> Result<String, TextError>;
}

pub(crate) fn check_noise(noise: f64) -> Result<(), TextError> {
    if (0.0..=1.0).contains(&noise) {
        Ok(())
    } else {
        Err(TextError::Usage(format!("perception noise {noise} not in [0, 1]")))
    }
}

pub(crate) fn check_state_for_variant(
    variant: PromptVariant,
    state: Option<StatusVector>,
) -> Result<(), TextError> {
    if variant.include_state && state.is_none() {
        return Err(TextError::Usage("prompt variant includes the state but none was given".into()));
    }
    Ok(())
}

/// Finds the first `[b,b,b,b]` (binary digits, optional spaces) in `text`.
pub fn find_state_vector(text: &str) -> Option<StatusVector> {
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        if let Some(close) = after.find(']') {
            if let Ok(v) = format!("[{}]", &after[..close]).parse::<StatusVector>() {
                return Some(v);
            }
        }
        rest = after;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_cap_drops_oldest() {
        let mut ctx = InteractionContext::with_cap("s", 3);
        for i in 0..5 {
            ctx.push(Speaker::Plwd, format!("p{i}"));
        }
        let texts: Vec<_> = ctx.history().map(|u| u.text.as_str()).collect();
        assert_eq!(texts, ["p2", "p3", "p4"]);
        ctx.push(Speaker::Caregiver, "c");
        assert_eq!(ctx.latest_assist.as_deref(), Some("c"));
        assert_eq!(ctx.history().len(), 3);
    }

    #[test]
    fn four_variants() {
        let all = PromptVariant::all();
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn vector_search() {
        assert_eq!(
            find_state_vector("The state is [1, 0, 0, 1]."),
            Some(StatusVector::new(true, false, false, true))
        );
        assert_eq!(
            find_state_vector("[Forgetfulness, Confusion] -> [0,1,1,0]"),
            Some(StatusVector::new(false, true, true, false))
        );
        assert_eq!(find_state_vector("no vector [2,0,0,0]"), None);
    }
}
