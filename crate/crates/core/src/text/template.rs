use crate::agent::flip_bits;
use crate::rng::{pick_index, uniform, SimRng};
use crate::status::{AssistAction, Status, StatusVector};

use super::{
    check_noise, check_state_for_variant, BehaviorText, Guidance, InteractionContext, PerceivedState,
    PromptVariant, Provenance, TextBackend, TextError,
};

const MARKER_OPEN: &str = "[state:";

const COOPERATIVE_NONVERBAL: &[&str] = &[
    "nods gently and looks over the list",
    "picks up the items one by one, reading each label carefully",
    "reaches calmly for the next thing on the list",
    "smiles and keeps a steady pace",
];
const COOPERATIVE_VERBAL: &[&str] = &[
    "Okay, this one is on the list.",
    "Right, that's the one I need.",
    "Let me see... yes, got it.",
];

const FORGETFUL_NONVERBAL: &[&str] = &[
    "pauses mid-reach and glances around the shelf",
    "stares at the list as if seeing it for the first time",
    "puts an item back and seems to lose track of what came next",
];
const FORGETFUL_VERBAL: &[&str] = &[
    "Wait... what was I looking for?",
    "I had it a second ago. What was next?",
    "Did I already get that one?",
];

const CONFUSED_NONVERBAL: &[&str] = &[
    "turns the item over, frowning at the label",
    "looks back and forth between two similar items",
    "holds the list upside down for a moment",
];
const CONFUSED_VERBAL: &[&str] = &[
    "Is this the right one? They all look the same.",
    "I don't understand which one it's supposed to be.",
    "Which list is this again?",
];

const ANGRY_NONVERBAL: &[&str] = &[
    "sets the item down hard and crosses their arms",
    "pushes the list away with a sharp gesture",
    "clenches their jaw and raises their voice",
];
const ANGRY_VERBAL: &[&str] = &[
    "I already did that! Stop asking me.",
    "This is ridiculous. I know how to shop.",
    "Leave me alone, I can do it myself!",
];

const DISENGAGED_NONVERBAL: &[&str] = &[
    "avoids eye contact and looks down at the table",
    "lets their attention drift away from the shelf",
    "sits back and stops reaching for anything",
];
const DISENGAGED_VERBAL: &[&str] = &["Mm... maybe later.", "I... I don't know... it's fine.", ""];

const SUPPORTIVE: &[&str] = &[
    "Keep at it.",
    "Great, you're doing well.",
    "You're doing great, take your time.",
];
const NON_DIRECTIVE: &[&str] = &[
    "Is there anything missing?",
    "Can you try another way?",
    "What does your list say?",
];
const DIRECTIVE: &[&str] = &[
    "Check the shopping list again.",
    "Look at the next item on the list.",
    "Put that one in the basket now.",
];

fn bank_for(status: Status) -> (&'static [&'static str], &'static [&'static str]) {
    match status {
        Status::Forgetful => (FORGETFUL_NONVERBAL, FORGETFUL_VERBAL),
        Status::Confused => (CONFUSED_NONVERBAL, CONFUSED_VERBAL),
        Status::Angry => (ANGRY_NONVERBAL, ANGRY_VERBAL),
        Status::Disengaged => (DISENGAGED_NONVERBAL, DISENGAGED_VERBAL),
    }
}

fn choose(bank: &[&'static str], rng: &mut SimRng) -> &'static str {
    bank[pick_index(uniform(rng), bank.len())]
}

/// `[state:0101]`
pub(super) fn marker(state: StatusVector) -> String {
    let bits: String = state.bits().iter().map(|b| char::from(b'0' + b)).collect();
    format!("{MARKER_OPEN}{bits}]")
}

pub(super) fn parse_marker(text: &str) -> Option<StatusVector> {
    let start = text.rfind(MARKER_OPEN)? + MARKER_OPEN.len();
    let digits = text.get(start..start + 4)?;
    if text.get(start + 4..start + 5) != Some("]") {
        return None;
    }
    let mut bits = [0u8; 4];
    for (slot, ch) in bits.iter_mut().zip(digits.chars()) {
        *slot = match ch {
            '0' => 0,
            '1' => 1,
            _ => return None,
        };
    }
    StatusVector::from_bits(bits).ok()
}

/// Deterministic phrase-bank backend; never touches the network.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateBackend;

impl TemplateBackend {
    pub fn new() -> Self {
        TemplateBackend
    }
}

impl TextBackend for TemplateBackend {
    fn name(&self) -> &'static str {
        "template"
    }

    fn narrate(
        &mut self,
        state: StatusVector,
        ctx: &InteractionContext,
        rng: &mut SimRng,
    ) -> Result<BehaviorText, TextError> {
        let mut gestures = Vec::new();
        let verbal = if state.is_clear() {
            gestures.push(choose(COOPERATIVE_NONVERBAL, rng));
            let line = choose(COOPERATIVE_VERBAL, rng);
            match ctx.latest_assist.as_deref() {
                Some(a) if !a.is_empty() => format!("Okay. {line}"),
                _ => line.to_string(),
            }
        } else {
            for s in state.active() {
                gestures.push(choose(bank_for(s).0, rng));
            }
            // the strongest status does the talking
            let speaker = [Status::Angry, Status::Confused, Status::Forgetful, Status::Disengaged]
                .into_iter()
                .find(|&s| state.get(s))
                .expect("state not clear");
            choose(bank_for(speaker).1, rng).to_string()
        };
        let subject = if ctx.subtask.is_empty() {
            String::new()
        } else {
            format!(" ({})", ctx.subtask.to_lowercase())
        };
        let nonverbal = format!("The person {}{subject}. {}", gestures.join(", then "), marker(state));
        Ok(BehaviorText { nonverbal, verbal })
    }

    fn perceive(
        &mut self,
        behavior: &BehaviorText,
        _ctx: &InteractionContext,
        noise: f64,
        rng: &mut SimRng,
    ) -> Result<PerceivedState, TextError> {
        check_noise(noise)?;
        let exact = parse_marker(&behavior.nonverbal).ok_or_else(|| TextError::Unparseable {
            what: "state marker",
            raw: behavior.nonverbal.clone(),
        })?;
        let state = flip_bits(exact, noise, rng);
        let provenance = if noise > 0.0 { Provenance::Noisy } else { Provenance::Exact };
        Ok(PerceivedState { state, provenance })
    }

    fn render_assist(
        &mut self,
        action: AssistAction,
        ctx: &InteractionContext,
        _behavior: Option<&BehaviorText>,
        variant: PromptVariant,
        state: Option<StatusVector>,
        rng: &mut SimRng,
    ) -> Result<String, TextError> {
        check_state_for_variant(variant, state)?;
        let bank = match action {
            AssistAction::NoAssistance => return Ok(String::new()),
            AssistAction::VerbalSupportive => SUPPORTIVE,
            AssistAction::VerbalNonDirective => NON_DIRECTIVE,
            AssistAction::VerbalDirective => DIRECTIVE,
        };
        let mut out = String::new();
        if variant.include_state {
            let state = state.expect("checked above");
            if state.get(Status::Angry) && action == AssistAction::VerbalSupportive {
                out.push_str("I understand this is frustrating. ");
            }
        }
        out.push_str(choose(bank, rng));
        if variant.guidance == Guidance::Detailed && !ctx.subtask.is_empty() {
            let step = ctx.subtask.to_lowercase();
            let extra = match action {
                AssistAction::VerbalSupportive => format!(" Take your time to {step}."),
                AssistAction::VerbalNonDirective => format!(" What do you need to {step}?"),
                _ => format!(" Next, {step}."),
            };
            out.push_str(&extra);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn ctx() -> InteractionContext {
        let mut c = InteractionContext::new("Shopping");
        c.set_position("Select 3 items", "Identify item one");
        c
    }

    #[test]
    fn marker_roundtrip() {
        for s in StatusVector::all() {
            assert_eq!(parse_marker(&format!("blah {}", marker(s))), Some(s));
        }
        assert_eq!(parse_marker("[state:01x1]"), None);
        assert_eq!(parse_marker("[state:0101"), None);
    }

    #[test]
    fn clear_state_is_cooperative() {
        let mut b = TemplateBackend;
        let t = b.narrate(StatusVector::CLEAR, &ctx(), &mut stream(1, 1)).unwrap();
        assert!(t.nonverbal.ends_with("[state:0000]"));
        assert!(COOPERATIVE_VERBAL.contains(&t.verbal.as_str()));
    }

    #[test]
    fn disengaged_phrasing() {
        let mut b = TemplateBackend;
        let s = StatusVector::new(false, false, false, true);
        for seed in 0..20 {
            let t = b.narrate(s, &ctx(), &mut stream(seed, 1)).unwrap();
            assert!(DISENGAGED_NONVERBAL.iter().any(|p| t.nonverbal.contains(p)));
            assert!(DISENGAGED_VERBAL.contains(&t.verbal.as_str()));
        }
    }

    #[test]
    fn narrate_is_deterministic() {
        let mut b = TemplateBackend;
        let s = StatusVector::new(true, false, true, false);
        let x = b.narrate(s, &ctx(), &mut stream(5, 1)).unwrap();
        let y = b.narrate(s, &ctx(), &mut stream(5, 1)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn perceive_roundtrip_and_complement() {
        let mut b = TemplateBackend;
        let mut rng = stream(2, 1);
        for s in StatusVector::all() {
            let t = b.narrate(s, &ctx(), &mut rng).unwrap();
            let p = b.perceive(&t, &ctx(), 0.0, &mut rng).unwrap();
            assert_eq!(p.state, s);
            assert_eq!(p.provenance, Provenance::Exact);
            let c = b.perceive(&t, &ctx(), 1.0, &mut rng).unwrap();
            assert_eq!(c.state.index(), 15 - s.index());
        }
    }

    #[test]
    fn perceive_errors() {
        let mut b = TemplateBackend;
        let t = BehaviorText {
            nonverbal: "no marker here".into(),
            verbal: String::new(),
        };
        let err = b.perceive(&t, &ctx(), 0.0, &mut stream(0, 1)).unwrap_err();
        assert!(matches!(err, TextError::Unparseable { ref raw, .. } if raw == "no marker here"));
        let ok = b.narrate(StatusVector::CLEAR, &ctx(), &mut stream(0, 1)).unwrap();
        assert!(matches!(
            b.perceive(&ok, &ctx(), 1.5, &mut stream(0, 1)),
            Err(TextError::Usage(_))
        ));
    }

    #[test]
    fn assist_utterances() {
        let mut b = TemplateBackend;
        let mut rng = stream(3, 1);
        let v = PromptVariant::default();
        assert_eq!(
            b.render_assist(AssistAction::NoAssistance, &ctx(), None, v, None, &mut rng).unwrap(),
            ""
        );
        let s = b
            .render_assist(AssistAction::VerbalSupportive, &ctx(), None, v, None, &mut rng)
            .unwrap();
        assert!(SUPPORTIVE.contains(&s.as_str()));
        for _ in 0..10 {
            let q = b
                .render_assist(AssistAction::VerbalNonDirective, &ctx(), None, v, None, &mut rng)
                .unwrap();
            assert!(q.ends_with('?'), "{q}");
        }
        let d = b
            .render_assist(AssistAction::VerbalDirective, &ctx(), None, v, None, &mut rng)
            .unwrap();
        assert!(DIRECTIVE.contains(&d.as_str()));
    }

    #[test]
    fn variants_shape_the_utterance() {
        let mut b = TemplateBackend;
        let angry = StatusVector::new(false, false, true, false);
        let with_state = PromptVariant {
            guidance: Guidance::Detailed,
            include_state: true,
        };
        let s = b
            .render_assist(
                AssistAction::VerbalSupportive,
                &ctx(),
                None,
                with_state,
                Some(angry),
                &mut stream(0, 1),
            )
            .unwrap();
        assert!(s.starts_with("I understand"));
        assert!(s.contains("identify item one"));
        let err = b.render_assist(AssistAction::VerbalSupportive, &ctx(), None, with_state, None, &mut stream(0, 1));
        assert!(matches!(err, Err(TextError::Usage(_))));
    }
}
