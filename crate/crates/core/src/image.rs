//! Lyrics from an image through an external language model, plus an offline
//! stub that always returns the same bundled lyric.
//!
//! The HTTP provider speaks the OpenAI-compatible chat completions shape and
//! is configured from the environment:
//!
//! | variable | meaning |
//! |---|---|
//! | `VERSETUNE_LLM_ENDPOINT` | full URL of the chat completions route |
//! | `VERSETUNE_LLM_MODEL` | model identifier (default `gpt-4o-mini`) |
//! | `VERSETUNE_LLM_API_KEY` | bearer credential |
//! | `VERSETUNE_LLM_STUB` | `1` to use the offline stub instead |

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyrics;

pub const ENV_ENDPOINT: &str = "VERSETUNE_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "VERSETUNE_LLM_MODEL";
pub const ENV_API_KEY: &str = "VERSETUNE_LLM_API_KEY";
pub const ENV_STUB: &str = "VERSETUNE_LLM_STUB";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

/// Lyrics the stub provider returns for every image.
pub const STUB_LYRICS: &str = include_str!("../data/stub_lyrics.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Png,
    Jpeg,
}

impl MediaType {
    pub fn mime(self) -> &'static str {
        match self {
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }

    /// Recognizes PNG and JPEG by their leading bytes.
    pub fn sniff(bytes: &[u8]) -> Option<MediaType> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(MediaType::Png)
        } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            Some(MediaType::Jpeg)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthPreference {
    Short,
    #[default]
    Medium,
    Long,
}

impl LengthPreference {
    pub fn phrase_count(self) -> usize {
        match self {
            LengthPreference::Short => 4,
            LengthPreference::Medium => 8,
            LengthPreference::Long => 12,
        }
    }
}

impl FromStr for LengthPreference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "short" => Ok(LengthPreference::Short),
            "medium" => Ok(LengthPreference::Medium),
            "long" => Ok(LengthPreference::Long),
            other => Err(Error::InvalidRequest(format!("unknown length preference {other:?}"))),
        }
    }
}

impl fmt::Display for LengthPreference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LengthPreference::Short => "short",
            LengthPreference::Medium => "medium",
            LengthPreference::Long => "long",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LyricsRequest {
    pub image: Vec<u8>,
    pub media_type: MediaType,
    pub length: LengthPreference,
    pub style_hint: Option<String>,
}

impl LyricsRequest {
    /// Validates the image and detects its media type from the bytes.
    pub fn new(image: Vec<u8>, length: LengthPreference, style_hint: Option<String>) -> Result<Self> {
        if image.is_empty() {
            return Err(Error::InvalidRequest("image is empty".into()));
        }
        let media_type =
            MediaType::sniff(&image).ok_or_else(|| Error::InvalidRequest("image must be PNG or JPEG".into()))?;
        Ok(LyricsRequest { image, media_type, length, style_hint })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyricsResponse {
    pub lyrics: String,
    pub provider_metadata: String,
}

/// The prompt sent alongside the image.
pub fn build_prompt(req: &LyricsRequest) -> String {
    let n = req.length.phrase_count();
    let mut prompt = format!(
        "Write original song lyrics inspired by this image. Write exactly {n} short lyric lines, \
         one phrase per line, in simple singable English with a steady rhythm. \
         Return only the lyric lines: no title, no numbering, no section labels, no quotation marks and no markup."
    );
    if let Some(hint) = req.style_hint.as_deref().map(str::trim).filter(|h| !h.is_empty()) {
        prompt.push_str(&format!(" Style: {hint}."));
    }
    prompt
}

/// A model reply before lyric cleanup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderReply {
    pub text: String,
    pub metadata: String,
}

/// Anything that can turn a prompt plus an image into text.
///
/// Implementations report retryable failures as
/// [`Error::ProviderUnavailable`] and rejected credentials as
/// [`Error::AuthFailure`].
pub trait LyricsProvider: Send + Sync {
    fn complete(&self, prompt: &str, image: &[u8], media_type: MediaType) -> Result<ProviderReply>;
}

/// Offline provider returning [`STUB_LYRICS`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StubProvider;

impl LyricsProvider for StubProvider {
    fn complete(&self, _prompt: &str, _image: &[u8], _media_type: MediaType) -> Result<ProviderReply> {
        Ok(ProviderReply { text: STUB_LYRICS.to_string(), metadata: "stub".into() })
    }
}

/// Chat-completions client.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpProvider {
    pub fn from_env() -> Result<HttpProvider> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .ok()
            .filter(|e| !e.trim().is_empty())
            .ok_or_else(|| Error::ProviderUnavailable(format!("{ENV_ENDPOINT} is not set")))?;
        Ok(HttpProvider {
            endpoint,
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.to_string()),
            api_key: std::env::var(ENV_API_KEY).ok().filter(|k| !k.trim().is_empty()),
            timeout: Duration::from_secs(60),
        })
    }
}

impl LyricsProvider for HttpProvider {
    fn complete(&self, prompt: &str, image: &[u8], media_type: MediaType) -> Result<ProviderReply> {
        let key = self.api_key.as_deref().ok_or_else(|| Error::AuthFailure(format!("{ENV_API_KEY} is not set")))?;
        let data_url = format!("data:{};base64,{}", media_type.mime(), base64::engine::general_purpose::STANDARD.encode(image));
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{
                "role": "user",
                "content": [
                    { "type": "text", "text": prompt },
                    { "type": "image_url", "image_url": { "url": data_url } }
                ]
            }]
        });
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let response = agent.post(&self.endpoint).set("Authorization", &format!("Bearer {key}")).send_json(body);
        let response = match response {
            Ok(r) => r,
            Err(ureq::Error::Status(code @ (401 | 403), _)) => return Err(Error::AuthFailure(format!("HTTP {code}"))),
            Err(ureq::Error::Status(code, r)) => {
                let detail = r.into_string().unwrap_or_default();
                return Err(Error::ProviderUnavailable(format!("HTTP {code}: {}", detail.chars().take(200).collect::<String>())));
            }
            Err(ureq::Error::Transport(t)) => return Err(Error::ProviderUnavailable(t.to_string())),
        };
        let json: serde_json::Value =
            response.into_json().map_err(|e| Error::ProviderUnavailable(format!("unreadable reply: {e}")))?;
        let text = json["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Error::ProviderUnavailable("reply has no message content".into()))?
            .to_string();
        let metadata = format!("model={}", json["model"].as_str().unwrap_or(&self.model));
        Ok(ProviderReply { text, metadata })
    }
}

/// Stub when `VERSETUNE_LLM_STUB` is truthy, otherwise the HTTP provider.
pub fn provider_from_env() -> Result<Box<dyn LyricsProvider>> {
    let stub = std::env::var(ENV_STUB).is_ok_and(|v| matches!(v.trim().to_lowercase().as_str(), "1" | "true" | "yes" | "on"));
    if stub {
        Ok(Box::new(StubProvider))
    } else {
        Ok(Box::new(HttpProvider::from_env()?))
    }
}

fn is_fence(line: &str) -> bool {
    line.starts_with("```") || line.starts_with("~~~")
}

/// Section labels such as `Verse 1:` or `[Chorus]` and title lines.
fn is_label(line: &str) -> bool {
    let bare = line.trim_matches(|c: char| matches!(c, '[' | ']' | '(' | ')' | '*' | '#' | ':') || c.is_whitespace());
    let lower = bare.to_lowercase();
    if lower.starts_with("title") && line.contains(':') {
        return true;
    }
    let first = lower.split_whitespace().next().unwrap_or("");
    let sections = ["verse", "chorus", "bridge", "intro", "outro", "refrain", "pre-chorus", "hook"];
    sections.contains(&first) && lower.split_whitespace().count() <= 2
}

fn strip_numbering(line: &str) -> &str {
    let line = line.trim_start_matches(['-', '*', '•', '–', '>']).trim_start();
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(['.', ')', ':']) {
            return rest.trim_start();
        }
    }
    line
}

fn clean_line(raw: &str) -> String {
    let line = strip_numbering(raw.trim());
    let line = line.trim_start_matches('#').trim();
    let line = line.replace("**", "").replace('_', " ");
    line.trim().trim_matches(|c: char| matches!(c, '"' | '“' | '”' | '\'' | '‘' | '’' | '`')).trim().to_string()
}

/// Reduces a model reply to lyric lines: code fences, numbering, bullets,
/// quotes, section labels and title lines are removed. A reply that arrives
/// as one prose paragraph is split at sentence ends.
pub fn parse_lyrics_response(raw: &str) -> Result<String> {
    let mut lines: Vec<String> = raw
        .lines()
        .map(str::trim)
        .filter(|l| !is_fence(l) && !is_label(l))
        .map(clean_line)
        .filter(|l| l.chars().any(char::is_alphabetic))
        .collect();
    if lines.len() == 1 {
        let sentences: Vec<String> = lines[0]
            .split_inclusive(['.', '!', '?'])
            .map(|s| s.trim().to_string())
            .filter(|s| s.chars().any(char::is_alphabetic))
            .collect();
        if sentences.len() > 1 {
            lines = sentences;
        }
    }
    if lines.is_empty() {
        return Err(Error::EmptyGeneration);
    }
    Ok(lines.join("\n"))
}

/// Retry schedule for transient provider failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { retries: 2, base_delay: Duration::from_millis(500) }
    }
}

pub fn request_lyrics(req: &LyricsRequest, provider: &dyn LyricsProvider) -> Result<LyricsResponse> {
    request_lyrics_with(req, provider, RetryPolicy::default())
}

/// Sends the prompt and image, retrying `ProviderUnavailable` with
/// exponential backoff, then cleans the reply. Fewer than two phrases count
/// as an empty generation.
pub fn request_lyrics_with(req: &LyricsRequest, provider: &dyn LyricsProvider, policy: RetryPolicy) -> Result<LyricsResponse> {
    let prompt = build_prompt(req);
    let mut attempt = 0;
    let reply = loop {
        match provider.complete(&prompt, &req.image, req.media_type) {
            Ok(reply) => break reply,
            Err(Error::ProviderUnavailable(reason)) if attempt < policy.retries => {
                log::warn!("lyrics provider attempt {} failed: {reason}", attempt + 1);
                std::thread::sleep(policy.base_delay * 2u32.pow(attempt));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let text = parse_lyrics_response(&reply.text)?;
    match lyrics::segment_phrases(&text) {
        Ok(lp) if lp.len() >= 2 => Ok(LyricsResponse { lyrics: text, provider_metadata: reply.metadata }),
        _ => Err(Error::EmptyGeneration),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    const PNG: &[u8] = b"\x89PNG\r\n\x1a\n\0\0\0\rIHDR";

    fn request(length: LengthPreference, hint: Option<&str>) -> LyricsRequest {
        LyricsRequest::new(PNG.to_vec(), length, hint.map(String::from)).unwrap()
    }

    #[test]
    fn prompt_template() {
        let medium = build_prompt(&request(LengthPreference::Medium, None));
        assert!(medium.contains("exactly 8 "));
        let hinted = build_prompt(&request(LengthPreference::Short, Some("lullaby")));
        assert!(hinted.contains("exactly 4 ") && hinted.contains("lullaby"));
        assert_eq!(hinted, build_prompt(&request(LengthPreference::Short, Some("lullaby"))));
        assert!(build_prompt(&request(LengthPreference::Long, None)).contains("exactly 12 "));
    }

    #[test]
    fn request_validation() {
        assert!(LyricsRequest::new(Vec::new(), LengthPreference::Short, None).is_err());
        assert!(LyricsRequest::new(b"GIF89a".to_vec(), LengthPreference::Short, None).is_err());
        let jpeg = LyricsRequest::new(vec![0xFF, 0xD8, 0xFF, 0xE0], LengthPreference::Short, None).unwrap();
        assert_eq!(jpeg.media_type, MediaType::Jpeg);
    }

    #[test]
    fn response_cleanup() {
        assert_eq!(parse_lyrics_response("1. Birds fly\n2. Over the sea").unwrap(), "Birds fly\nOver the sea");
        assert_eq!(parse_lyrics_response("```\nHello world\n```").unwrap(), "Hello world");
        assert!(matches!(parse_lyrics_response("  \n\t "), Err(Error::EmptyGeneration)));
        let labelled = "Title: \"Harbor Night\"\n\n[Verse 1]\n- \"Lanterns sway\"\n**Waves are calling**\nChorus:\n3) Sleep now";
        assert_eq!(parse_lyrics_response(labelled).unwrap(), "Lanterns sway\nWaves are calling\nSleep now");
    }

    #[test]
    fn prose_reply_is_split_into_sentences() {
        // Shape of a real chat reply that ignored the one-line-per-phrase instruction.
        let prose = "The sun is rising over quiet fields. A gentle wind is singing through the trees! Can you hear the river call?";
        let parsed = parse_lyrics_response(prose).unwrap();
        assert_eq!(parsed.lines().count(), 3);
        assert_eq!(lyrics::segment_phrases(&parsed).unwrap().len(), 3);
    }

    #[test]
    fn stub_round_trip() {
        let response = request_lyrics(&request(LengthPreference::Medium, None), &StubProvider).unwrap();
        assert_eq!(response.lyrics, STUB_LYRICS.trim_end());
        assert_eq!(response.provider_metadata, "stub");
    }

    #[test]
    fn missing_credential_fails_before_network() {
        // The endpoint is unroutable; reaching it would yield ProviderUnavailable instead.
        let provider = HttpProvider {
            endpoint: "http://192.0.2.1:9/v1/chat/completions".into(),
            model: "m".into(),
            api_key: None,
            timeout: Duration::from_millis(10),
        };
        assert!(matches!(request_lyrics(&request(LengthPreference::Short, None), &provider), Err(Error::AuthFailure(_))));
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
        reply: &'static str,
    }

    impl LyricsProvider for Flaky {
        fn complete(&self, _: &str, _: &[u8], _: MediaType) -> Result<ProviderReply> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(Error::ProviderUnavailable("busy".into()))
            } else {
                Ok(ProviderReply { text: self.reply.into(), metadata: String::new() })
            }
        }
    }

    #[test]
    fn transient_failures_are_retried_twice() {
        let fast = RetryPolicy { retries: 2, base_delay: Duration::ZERO };
        let req = request(LengthPreference::Short, None);
        let ok = Flaky { failures: 2, calls: AtomicU32::new(0), reply: "one line\nanother line" };
        assert!(request_lyrics_with(&req, &ok, fast).is_ok());
        assert_eq!(ok.calls.load(Ordering::SeqCst), 3);
        let down = Flaky { failures: 3, calls: AtomicU32::new(0), reply: "x" };
        assert!(matches!(request_lyrics_with(&req, &down, fast), Err(Error::ProviderUnavailable(_))));
        assert_eq!(down.calls.load(Ordering::SeqCst), 3);
        let single = Flaky { failures: 0, calls: AtomicU32::new(0), reply: "Hello world" };
        assert!(matches!(request_lyrics_with(&req, &single, fast), Err(Error::EmptyGeneration)));
    }
}
