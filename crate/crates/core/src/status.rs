//! The PLWD status vector and the caregiver's assistance actions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the four binary cognitive/affective statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Forgetful,
    Confused,
    Angry,
    Disengaged,
}

impl Status {
    /// Fixed order used for indexing, encoding and rng consumption.
    pub const ALL: [Status; 4] = [
        Status::Forgetful,
        Status::Confused,
        Status::Angry,
        Status::Disengaged,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> crate::Result<Status> {
        Status::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Usage(format!("status id {i} out of range 0..4")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Forgetful => "forgetful",
            Status::Confused => "confused",
            Status::Angry => "angry",
            Status::Disengaged => "disengaged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `[forgetful, confused, angry, disengaged]`, each 0 or 1.
///
/// Encodes to an index in `0..16` with forgetful as the most significant bit,
/// so `[0,0,0,0]` is 0 and `[1,1,1,1]` is 15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "[u8; 4]", try_from = "[u8; 4]")]
pub struct StatusVector([bool; 4]);

impl StatusVector {
    pub const COUNT: usize = 16;
    /// The episode start state.
    pub const CLEAR: StatusVector = StatusVector([false; 4]);

    pub fn new(forgetful: bool, confused: bool, angry: bool, disengaged: bool) -> Self {
        StatusVector([forgetful, confused, angry, disengaged])
    }

    pub fn from_bits(bits: [u8; 4]) -> crate::Result<Self> {
        let mut out = [false; 4];
        for (slot, b) in out.iter_mut().zip(bits) {
            *slot = match b {
                0 => false,
                1 => true,
                other => return Err(Error::Usage(format!("status bit must be 0 or 1, got {other}"))),
            };
        }
        Ok(StatusVector(out))
    }

    pub fn from_index(index: usize) -> crate::Result<Self> {
        if index >= Self::COUNT {
            return Err(Error::Usage(format!("state index {index} out of range 0..16")));
        }
        Ok(StatusVector(std::array::from_fn(|i| index & (8 >> i) != 0)))
    }

    pub fn index(self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    /// All 16 states in index order.
    pub fn all() -> impl Iterator<Item = StatusVector> {
        (0..Self::COUNT).map(|i| StatusVector::from_index(i).expect("index in range"))
    }

    pub fn get(self, status: Status) -> bool {
        self.0[status.index()]
    }

    pub fn set(&mut self, status: Status, on: bool) {
        self.0[status.index()] = on;
    }

    pub fn with(mut self, status: Status, on: bool) -> Self {
        self.set(status, on);
        self
    }

    pub fn bits(self) -> [u8; 4] {
        self.0.map(u8::from)
    }

    pub fn is_clear(self) -> bool {
        self.0.iter().all(|b| !b)
    }

    pub fn active(self) -> impl Iterator<Item = Status> {
        Status::ALL.into_iter().filter(move |s| self.get(*s))
    }
}

impl From<StatusVector> for [u8; 4] {
    fn from(v: StatusVector) -> Self {
        v.bits()
    }
}

impl TryFrom<[u8; 4]> for StatusVector {
    type Error = Error;

    fn try_from(bits: [u8; 4]) -> crate::Result<Self> {
        StatusVector::from_bits(bits)
    }
}

impl fmt::Display for StatusVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.bits();
        write!(f, "[{a},{b},{c},{d}]")
    }
}

/// Parses `[f,c,a,d]` with optional whitespace.
impl FromStr for StatusVector {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::parse("status vector", format!("expected [f,c,a,d], got {s:?}")))?;
        let bits: Vec<u8> = inner
            .split(',')
            .map(|t| t.trim().parse::<u8>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::parse("status vector", e))?;
        let bits: [u8; 4] = bits
            .try_into()
            .map_err(|_| Error::parse("status vector", format!("expected 4 entries in {s:?}")))?;
        StatusVector::from_bits(bits)
    }
}

/// The four selectable assistance levels, from least to most intrusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssistAction {
    #[serde(rename = "a0")]
    NoAssistance,
    /// Encouragement to initiate, continue or complete a task.
    #[serde(rename = "a1")]
    VerbalSupportive,
    /// A cue, usually a question, that does not say exactly what to do.
    #[serde(rename = "a2")]
    VerbalNonDirective,
    /// An explicit instruction.
    #[serde(rename = "a3")]
    VerbalDirective,
}

impl AssistAction {
    pub const COUNT: usize = 4;
    pub const ALL: [AssistAction; 4] = [
        AssistAction::NoAssistance,
        AssistAction::VerbalSupportive,
        AssistAction::VerbalNonDirective,
        AssistAction::VerbalDirective,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> crate::Result<Self> {
        AssistAction::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Usage(format!("action index {i} out of range 0..4")))
    }

    /// Short code, `a0` to `a3`.
    pub fn code(self) -> &'static str {
        ["a0", "a1", "a2", "a3"][self.index()]
    }

    pub fn label(self) -> &'static str {
        match self {
            AssistAction::NoAssistance => "No Assistance",
            AssistAction::VerbalSupportive => "Verbal Supportive Assistance",
            AssistAction::VerbalNonDirective => "Verbal Non-directive Assistance",
            AssistAction::VerbalDirective => "Verbal Directive Assistance",
        }
    }
}

impl fmt::Display for AssistAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AssistAction {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "a0" => Ok(AssistAction::NoAssistance),
            "a1" => Ok(AssistAction::VerbalSupportive),
            "a2" => Ok(AssistAction::VerbalNonDirective),
            "a3" => Ok(AssistAction::VerbalDirective),
            other => Err(Error::parse("assist action", format!("unknown action {other:?}"))),
        }
    }
}
