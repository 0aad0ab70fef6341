use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{truncate_at_stop, BackendError, Completion, CompletionBackend, CompletionRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Base URL up to and including the API version, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: String::new(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            timeout_secs: 600,
            max_attempts: 3,
            backoff_ms: 1000,
        }
    }
}

/// Blocking client for OpenAI-compatible `/chat/completions` endpoints.
#[derive(Debug)]
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<HttpBackend, BackendError> {
        if config.model.is_empty() {
            return Err(BackendError::Config("model identifier is required".into()));
        }
        if config.max_attempts == 0 {
            return Err(BackendError::Config("max_attempts must be at least 1".into()));
        }
        let api_key = config.api_key_env.as_deref().and_then(|var| std::env::var(var).ok());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpBackend { config, api_key, client })
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    pub fn request_body(&self, req: &CompletionRequest) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_completion_tokens,
        });
        if !req.stop_sequences.is_empty() {
            body["stop"] = json!(req.stop_sequences);
        }
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<serde_json::Value, (bool, BackendError)> {
        let mut call = self.client.post(self.endpoint()).json(body);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().map_err(|e| (true, BackendError::Transport(e.to_string())))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, BackendError::Transport(e.to_string())))?;
        if !status.is_success() {
            let transient = status.is_server_error() || status.as_u16() == 429;
            return Err((transient, BackendError::Http { status: status.as_u16(), body: text }));
        }
        serde_json::from_str(&text).map_err(|e| (false, BackendError::Schema(format!("{e}: {text}"))))
    }
}

/// Pulls the first choice's content and usage out of a chat-completions body.
pub(super) fn parse_response(value: &serde_json::Value) -> Result<Completion, BackendError> {
    let choice = value
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::Schema("missing choices[0]".into()))?;
    let content = match choice.pointer("/message/content") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Null) => String::new(),
        _ => return Err(BackendError::Schema("missing choices[0].message.content".into())),
    };
    let usage = |k: &str| value.get("usage").and_then(|u| u.get(k)).and_then(|v| v.as_u64());
    Ok(Completion {
        text: content,
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
    })
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, BackendError> {
        let body = self.request_body(req);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = None;
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body) {
                Ok(value) => {
                    let mut completion = parse_response(&value)?;
                    let cut = truncate_at_stop(&completion.text, &req.stop_sequences).len();
                    completion.text.truncate(cut);
                    return Ok(completion);
                }
                Err((true, e)) => last = Some(e),
                Err((false, e)) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| BackendError::Transport("no attempts made".into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_chat_shape() {
        let v = json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": "hi"}, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 1, "total_tokens": 13}
        });
        let c = parse_response(&v).unwrap();
        assert_eq!(c.text, "hi");
        assert_eq!(c.prompt_tokens, Some(12));
        assert!(matches!(parse_response(&json!({"choices": []})), Err(BackendError::Schema(_))));
    }

    #[test]
    fn body_carries_sampling_and_stops() {
        let b = HttpBackend::new(HttpConfig { model: "m".into(), api_key_env: None, ..Default::default() }).unwrap();
        let req = CompletionRequest::new("q", super::super::AgentRole::Rpa, 0, "prompt")
            .with_stops(&["</Finish>"]);
        let body = b.request_body(&req);
        assert_eq!(body["model"], "m");
        assert_eq!(body["temperature"], 0.6);
        assert_eq!(body["top_p"], 1.0);
        assert_eq!(body["stop"][0], "</Finish>");
        assert_eq!(body["messages"][0]["content"], "prompt");
        assert!(body.get("seed").is_none());
    }

    #[test]
    fn config_validation() {
        assert!(HttpBackend::new(HttpConfig::default()).is_err());
    }
}
