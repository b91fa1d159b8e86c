//! Prompt assembly for the chat-completions backend.
//!
//! Each builder returns a system message followed by one user message made
//! of `## `-headed sections, one per prompt component.

use std::fmt::Write as _;

use crate::status::{AssistAction, StatusVector};

use super::{BehaviorText, ChatMessage, Guidance, InteractionContext, PromptVariant};

const STATE_GUIDELINES: &str = "\
- Forgetfulness: losing track of the step, the list or what was just done; repeating or skipping items.
- Confusion: unsure which item or amount is right; misreading labels; asking what something means.
- Anger: irritation or frustration; raised voice, sharp gestures, refusing help.
- Disengagement: withdrawing from the task; averted gaze, long pauses, short or trailing replies.
A status marked 0 should not show at all; a status marked 1 should be clearly visible.";

const STATUS_DEFINITIONS: &str = "\
- Forgetfulness: the person loses track of steps, items or what they just did.
- Confusion: the person is unsure what is correct or what something means.
- Anger: the person shows irritation, frustration or hostility.
- Disengagement: the person withdraws attention or effort from the task.";

fn history_block(ctx: &InteractionContext) -> String {
    if ctx.history().len() == 0 {
        return "(no interaction yet)".into();
    }
    let mut out = String::new();
    for u in ctx.history() {
        let _ = writeln!(out, "{}: {}", u.speaker, u.text);
    }
    out.trim_end().to_string()
}

fn task_block(ctx: &InteractionContext) -> String {
    format!(
        "Scenario: {}\nCurrent task: {}\nCurrent subtask: {}",
        ctx.scenario, ctx.task, ctx.subtask
    )
}

fn vector_block(state: StatusVector) -> String {
    format!("[Forgetfulness, Confusion, Anger, Disengagement] = {state}")
}

fn section(out: &mut String, title: &str, body: &str) {
    let _ = write!(out, "## {title}\n{body}\n\n");
}

/// Seven components: role, task context, history, latest assistance, state
/// guidelines, state vector, output format.
pub fn behavior_messages(state: StatusVector, ctx: &InteractionContext) -> Vec<ChatMessage> {
    let role = "You are role-playing an older adult living with moderate dementia who is \
                carrying out an everyday activity with help from a caregiver. Stay in character \
                and keep behavior consistent with earlier turns.";
    let mut user = String::new();
    section(&mut user, "Task context", &task_block(ctx));
    section(&mut user, "Interaction history", &history_block(ctx));
    section(
        &mut user,
        "Latest caregiver assistance",
        ctx.latest_assist.as_deref().filter(|s| !s.is_empty()).unwrap_or("(none)"),
    );
    section(&mut user, "State guidelines", STATE_GUIDELINES);
    section(&mut user, "Current state", &vector_block(state));
    section(
        &mut user,
        "Output format",
        "Reply with a single JSON object and nothing else: \
         {\"nonverbal\": \"<third-person description of body language and actions>\", \
         \"verbal\": \"<what the person says, or an empty string>\"}",
    );
    vec![ChatMessage::system(role), ChatMessage::user(user.trim_end())]
}

/// Role and purpose, status definitions, observed behavior, output format.
pub fn perception_messages(behavior: &BehaviorText, ctx: &InteractionContext) -> Vec<ChatMessage> {
    let role = "You are the perception module of a caregiving robot. Identify the cognitive and \
                emotional statuses of a person living with dementia from their observed behavior.";
    let mut user = String::new();
    section(&mut user, "Task context", &task_block(ctx));
    section(&mut user, "Status definitions", STATUS_DEFINITIONS);
    section(
        &mut user,
        "Observed behavior",
        &format!("Nonverbal: {}\nVerbal: \"{}\"", behavior.nonverbal, behavior.verbal),
    );
    section(
        &mut user,
        "Output format",
        "Reply with only a binary vector [Forgetfulness, Confusion, Anger, Disengagement], \
         using 1 for present and 0 for absent, for example [0, 1, 0, 0].",
    );
    vec![ChatMessage::system(role), ChatMessage::user(user.trim_end())]
}

fn assist_guidance(guidance: Guidance) -> String {
    let rows: [(AssistAction, &str, &str); 4] = [
        (AssistAction::NoAssistance, "No assistance is provided.", ""),
        (
            AssistAction::VerbalSupportive,
            "Encouragement to start, continue or finish the task.",
            "\"Keep at it\"; \"Great\"",
        ),
        (
            AssistAction::VerbalNonDirective,
            "A cue that helps without saying exactly what to do, usually phrased as a question.",
            "\"Is there anything missing?\"; \"Can you try another way?\"",
        ),
        (
            AssistAction::VerbalDirective,
            "An explicit verbal instruction for the next step.",
            "\"Check the recipe again\"; \"The date needs to be filled in on the check\"",
        ),
    ];
    let mut out = String::new();
    for (a, def, ex) in rows {
        match guidance {
            Guidance::Brief => {
                let _ = writeln!(out, "- {} ({})", a.label(), a.code());
            }
            Guidance::Detailed => {
                let _ = write!(out, "- {} ({}): {def}", a.label(), a.code());
                if !ex.is_empty() {
                    let _ = write!(out, " Examples: {ex}.");
                }
                out.push('\n');
            }
        }
    }
    out.trim_end().to_string()
}

/// Eight components: role and purpose, task context, history, current
/// behavior, chosen assistance, output format, assistance guidelines (brief
/// or detailed) and, when the variant asks for it, the state vector.
pub fn assist_messages(
    action: AssistAction,
    ctx: &InteractionContext,
    behavior: Option<&BehaviorText>,
    variant: PromptVariant,
    state: Option<StatusVector>,
) -> Vec<ChatMessage> {
    let role = "You are a socially assistive robot acting as a caregiver for a person living with \
                dementia. Help them complete the activity with the least intrusive assistance \
                that works, and stay warm and respectful.";
    let mut user = String::new();
    section(&mut user, "Task context", &task_block(ctx));
    section(&mut user, "Interaction history", &history_block(ctx));
    let current = behavior
        .map(|b| format!("Nonverbal: {}\nVerbal: \"{}\"", b.nonverbal, b.verbal))
        .unwrap_or_else(|| "(not observed)".into());
    section(&mut user, "Current behavior", &current);
    section(
        &mut user,
        "Assistance to provide",
        &format!("{} ({})", action.label(), action.code()),
    );
    section(
        &mut user,
        "Output format",
        "Reply with only the words the robot says aloud, at most two short sentences. \
         For No Assistance reply with an empty string.",
    );
    section(&mut user, "Assistance guidelines", &assist_guidance(variant.guidance));
    if variant.include_state {
        if let Some(s) = state {
            section(&mut user, "Current state", &vector_block(s));
        }
    }
    vec![ChatMessage::system(role), ChatMessage::user(user.trim_end())]
}
