use std::time::{Duration, Instant};

use base64::Engine;
use serde::Serialize;

use super::{Backend, Completion, ExtractionRequest};
use crate::error::{Error, RemoteErrorKind, Result};

pub const API_KEY_ENV: &str = "SEMVEH_LLM_API_KEY";

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: [Part<'a>; 2],
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Part<'a> {
    Text { text: &'a str },
    ImageUrl { image_url: ImageUrl },
}

#[derive(Serialize)]
struct ImageUrl {
    url: String,
}

/// JSON body of a chat-completions call: one user message with a text part
/// and a base64 data-URI image part. Identical requests give identical bytes.
pub fn request_body(request: &ExtractionRequest) -> Result<String> {
    let data = base64::engine::general_purpose::STANDARD.encode(&request.image);
    let body = ChatRequest {
        model: &request.model,
        messages: [Message {
            role: "user",
            content: [
                Part::Text { text: &request.prompt },
                Part::ImageUrl {
                    image_url: ImageUrl {
                        url: format!("data:{};base64,{data}", request.media_type),
                    },
                },
            ],
        }],
    };
    Ok(serde_json::to_string(&body)?)
}

/// OpenAI-compatible client posting to `{base_url}/v1/chat/completions`.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after a timeout, transport error or 5xx.
    pub max_retries: u32,
}

impl RemoteBackend {
    /// Reads the bearer token from `SEMVEH_LLM_API_KEY`; no retries.
    pub fn from_env(base_url: &str, timeout: Duration) -> Self {
        RemoteBackend {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout,
            max_retries: 0,
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, agent: &ureq::Agent, body: &str) -> std::result::Result<String, (RemoteErrorKind, String)> {
        let mut req = agent.post(&self.endpoint()).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(classify)?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(classify)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| (RemoteErrorKind::Protocol, format!("invalid JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (RemoteErrorKind::Protocol, "missing choices[0].message.content".to_string()))
    }
}

fn classify(e: ureq::Error) -> (RemoteErrorKind, String) {
    let kind = match &e {
        ureq::Error::Timeout(_) => RemoteErrorKind::Timeout,
        ureq::Error::StatusCode(401 | 403) => RemoteErrorKind::Auth,
        ureq::Error::StatusCode(_) => RemoteErrorKind::Http,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => RemoteErrorKind::Timeout,
        ureq::Error::Io(_) | ureq::Error::HostNotFound | ureq::Error::ConnectionFailed => RemoteErrorKind::Transport,
        _ => RemoteErrorKind::Protocol,
    };
    (kind, e.to_string())
}

fn retryable(kind: RemoteErrorKind, message: &str) -> bool {
    match kind {
        RemoteErrorKind::Timeout | RemoteErrorKind::Transport => true,
        RemoteErrorKind::Http => message.contains(": 5"),
        _ => false,
    }
}

impl Backend for RemoteBackend {
    fn complete(&self, request: &ExtractionRequest) -> Result<Completion> {
        let body = request_body(request)?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let started = Instant::now();
        let mut retries = 0;
        loop {
            match self.attempt(&agent, &body) {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        latency_s: started.elapsed().as_secs_f64(),
                    })
                }
                Err((kind, message)) => {
                    if retries < self.max_retries && retryable(kind, &message) {
                        retries += 1;
                        continue;
                    }
                    return Err(Error::Remote { kind, message, retries });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_snapshot() {
        let mut req = ExtractionRequest::new(vec![0xff, 0xd8, 0xff], "image/jpeg");
        req.prompt = "Describe.".into();
        req.model = "m".into();
        let body = request_body(&req).unwrap();
        assert_eq!(
            body,
            r#"{"model":"m","messages":[{"role":"user","content":[{"type":"text","text":"Describe."},{"type":"image_url","image_url":{"url":"data:image/jpeg;base64,/9j/"}}]}]}"#
        );
        assert_eq!(body, request_body(&req).unwrap());
    }

    #[test]
    fn endpoint_joins_cleanly() {
        let b = RemoteBackend::from_env("http://host:1/", Duration::from_secs(1));
        assert_eq!(b.endpoint(), "http://host:1/v1/chat/completions");
        assert_eq!(b.max_retries, 0);
    }
}
