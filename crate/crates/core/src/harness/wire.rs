//! Chat-completion request and response bodies.

use serde::{Deserialize, Serialize};

use crate::protocol::{Message, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_completion_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Continue the trailing assistant message instead of opening a new turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continue_final_message: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_generation_prompt: Option<bool>,
}

impl ChatRequest {
    pub fn is_continuation(&self) -> bool {
        self.continue_final_message == Some(true)
    }

    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMessage {
    #[serde(default)]
    pub role: Option<String>,
    #[serde(default)]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    #[serde(default)]
    pub index: u32,
    pub message: ResponseMessage,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub choices: Vec<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>, finish_reason: &str, usage: Option<Usage>) -> Self {
        Self {
            id: None,
            choices: vec![Choice {
                index: 0,
                message: ResponseMessage {
                    role: Some("assistant".into()),
                    content: Some(content.into()),
                    reasoning_content: None,
                },
                finish_reason: Some(finish_reason.into()),
            }],
            usage,
        }
    }

    pub fn content(&self) -> &str {
        self.choices
            .first()
            .and_then(|c| c.message.content.as_deref())
            .unwrap_or("")
    }

    pub fn reasoning(&self) -> Option<&str> {
        self.choices
            .first()
            .and_then(|c| c.message.reasoning_content.as_deref())
    }

    pub fn finish_reason(&self) -> Option<&str> {
        self.choices.first().and_then(|c| c.finish_reason.as_deref())
    }
}

pub fn encode_request(req: &ChatRequest) -> String {
    serde_json::to_string(req).expect("request serialises")
}

pub fn decode_request(body: &str) -> Result<ChatRequest, serde_json::Error> {
    serde_json::from_str(body)
}

pub fn encode_response(resp: &ChatResponse) -> String {
    serde_json::to_string(resp).expect("response serialises")
}

/// Rejects bodies without a first choice, which every caller needs.
pub fn decode_response(body: &str) -> Result<ChatResponse, String> {
    let resp: ChatResponse = serde_json::from_str(body).map_err(|e| e.to_string())?;
    if resp.choices.is_empty() {
        return Err("response has no choices".into());
    }
    Ok(resp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_omits_unset_extensions() {
        let req = ChatRequest {
            model: "m".into(),
            messages: vec![Message::user("hi")],
            temperature: 0.2,
            max_completion_tokens: 20480,
            seed: None,
            continue_final_message: None,
            add_generation_prompt: None,
        };
        assert_eq!(
            encode_request(&req),
            r#"{"model":"m","messages":[{"role":"user","content":"hi"}],"temperature":0.2,"max_completion_tokens":20480}"#
        );
        assert_eq!(decode_request(&encode_request(&req)).unwrap(), req);
    }

    #[test]
    fn decodes_openai_shaped_body() {
        let body = r#"{"id":"x","object":"chat.completion","choices":[{"index":0,"message":{"role":"assistant","content":"ok","reasoning_content":"hmm"},"finish_reason":"stop"}],"usage":{"prompt_tokens":3,"completion_tokens":5,"total_tokens":8}}"#;
        let resp = decode_response(body).unwrap();
        assert_eq!(resp.content(), "ok");
        assert_eq!(resp.reasoning(), Some("hmm"));
        assert_eq!(resp.usage.unwrap().completion_tokens, 5);
        assert!(decode_response(r#"{"choices":[]}"#).is_err());
        assert!(decode_response("{oops").is_err());
    }
}
