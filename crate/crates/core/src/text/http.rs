use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::status::{AssistAction, StatusVector};

use super::prompts;
use super::{
    check_noise, check_state_for_variant, find_state_vector, BehaviorText, InteractionContext, PerceivedState,
    PromptVariant, Provenance, TextBackend, TextError,
};

pub const DEFAULT_API_KEY_ENV: &str = "CARESIM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },

    #[error("server returned HTTP {status} after {attempts} attempt(s): {body}")]
    Status { status: u16, body: String, attempts: u32 },

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },

    #[error("malformed reply: {raw}")]
    Malformed { raw: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    /// Endpoint root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Upper bound on each request, connect to last byte.
    pub timeout_ms: u64,
    /// Retries after the first attempt, for timeouts, transport errors, 429 and 5xx.
    pub max_retries: u32,
    /// First backoff delay; doubles on each retry.
    pub backoff_ms: u64,
    pub api_key_env: String,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            temperature: 0.7,
            timeout_ms: 30_000,
            max_retries: 2,
            backoff_ms: 500,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: Option<String>,
}

enum Attempt {
    Done(String),
    Retry(HttpError),
    Fail(HttpError),
}

/// Blocking chat-completions client with per-request timeout and bounded retries.
#[derive(Debug, Clone)]
pub struct ChatClient {
    config: HttpConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(config: HttpConfig, api_key: impl Into<String>) -> Result<Self, HttpError> {
        if config.base_url.trim().is_empty() || config.model.trim().is_empty() {
            return Err(HttpError::Config("base URL and model must be set".into()));
        }
        if config.timeout_ms == 0 {
            return Err(HttpError::Config("timeout must be positive".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(ChatClient {
            config,
            api_key: api_key.into(),
            agent,
        })
    }

    /// Reads the credential from the environment variable named in the config.
    pub fn from_env(config: HttpConfig) -> Result<Self, HttpError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| HttpError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        Self::new(config, key)
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// Sends `messages` and returns the first choice's content.
    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String, HttpError> {
        let body = serde_json::to_string(&ChatRequest {
            model: &self.config.model,
            temperature: self.config.temperature,
            messages,
        })
        .expect("request serializes");

        let mut delay = self.config.backoff_ms;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.attempt(&body, attempt) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt > self.config.max_retries => return Err(e),
                Attempt::Retry(_) => {
                    std::thread::sleep(Duration::from_millis(delay));
                    delay = delay.saturating_mul(2);
                }
            }
        }
    }

    fn attempt(&self, body: &str, attempts: u32) -> Attempt {
        let sent = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body);
        let mut resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(HttpError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(HttpError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(HttpError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(HttpError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        if !(200..300).contains(&status) {
            let err = HttpError::Status {
                status,
                body: text,
                attempts,
            };
            return if status == 429 || status >= 500 {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            };
        }
        match serde_json::from_str::<ChatResponse>(&text) {
            Ok(r) => match r.choices.into_iter().next().and_then(|c| c.message.content) {
                Some(content) => Attempt::Done(content),
                None => Attempt::Fail(HttpError::Malformed { raw: text }),
            },
            Err(_) => Attempt::Fail(HttpError::Malformed { raw: text }),
        }
    }
}

/// Text backend that delegates to a chat-completions model.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: ChatClient,
}

impl HttpBackend {
    pub fn new(client: ChatClient) -> Self {
        HttpBackend { client }
    }
}

/// Pulls `{"nonverbal": .., "verbal": ..}` out of a reply, tolerating code fences.
fn parse_behavior(raw: &str) -> Result<BehaviorText, TextError> {
    #[derive(Deserialize)]
    struct Reply {
        nonverbal: String,
        #[serde(default)]
        verbal: String,
    }
    let unparseable = || TextError::Unparseable {
        what: "behavior reply",
        raw: raw.to_string(),
    };
    let start = raw.find('{').ok_or_else(unparseable)?;
    let end = raw.rfind('}').ok_or_else(unparseable)?;
    if end < start {
        return Err(unparseable());
    }
    let reply: Reply = serde_json::from_str(&raw[start..=end]).map_err(|_| unparseable())?;
    Ok(BehaviorText {
        nonverbal: reply.nonverbal,
        verbal: reply.verbal,
    })
}

impl TextBackend for HttpBackend {
    fn name(&self) -> &'static str {
        "http"
    }

    fn narrate(
        &mut self,
        state: StatusVector,
        ctx: &InteractionContext,
        _rng: &mut SimRng,
    ) -> Result<BehaviorText, TextError> {
        let reply = self.client.complete(&prompts::behavior_messages(state, ctx))?;
        parse_behavior(&reply)
    }

    fn perceive(
        &mut self,
        behavior: &BehaviorText,
        ctx: &InteractionContext,
        noise: f64,
        _rng: &mut SimRng,
    ) -> Result<PerceivedState, TextError> {
        check_noise(noise)?;
        let reply = self.client.complete(&prompts::perception_messages(behavior, ctx))?;
        let state = find_state_vector(&reply).ok_or(TextError::Unparseable {
            what: "state vector",
            raw: reply,
        })?;
        Ok(PerceivedState {
            state,
            provenance: Provenance::Parsed,
        })
    }

    fn render_assist(
        &mut self,
        action: AssistAction,
        ctx: &InteractionContext,
        behavior: Option<&BehaviorText>,
        variant: PromptVariant,
        state: Option<StatusVector>,
        _rng: &mut SimRng,
    ) -> Result<String, TextError> {
        check_state_for_variant(variant, state)?;
        if action == AssistAction::NoAssistance {
            return Ok(String::new());
        }
        let reply = self
            .client
            .complete(&prompts::assist_messages(action, ctx, behavior, variant, state))?;
        Ok(reply.trim().trim_matches('"').to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behavior_reply_parsing() {
        let b = parse_behavior("```json\n{\"nonverbal\": \"looks down\", \"verbal\": \"\"}\n```").unwrap();
        assert_eq!(b.nonverbal, "looks down");
        assert_eq!(b.verbal, "");
        assert!(matches!(parse_behavior("no json"), Err(TextError::Unparseable { .. })));
        assert!(matches!(parse_behavior("} {"), Err(TextError::Unparseable { .. })));
    }

    #[test]
    fn config_checks() {
        let bad = HttpConfig {
            model: " ".into(),
            ..HttpConfig::default()
        };
        assert!(matches!(ChatClient::new(bad, "k"), Err(HttpError::Config(_))));
        let missing = HttpConfig {
            api_key_env: "CARESIM_TEST_SURELY_UNSET_VAR".into(),
            ..HttpConfig::default()
        };
        assert!(matches!(ChatClient::from_env(missing), Err(HttpError::Config(_))));
    }

    #[test]
    fn request_wire_shape() {
        let msgs = [ChatMessage::system("s"), ChatMessage::user("u")];
        let body = serde_json::to_value(ChatRequest {
            model: "m",
            temperature: 0.5,
            messages: &msgs,
        })
        .unwrap();
        assert_eq!(
            body,
            serde_json::json!({
                "model": "m",
                "temperature": 0.5,
                "messages": [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}]
            })
        );
    }
}
