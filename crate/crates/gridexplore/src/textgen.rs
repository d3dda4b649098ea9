//! Text-generation client contract shared by policies, verbalization,
//! reflection, and grading: a deterministic in-process mock scripted from a
//! file, a hint-following mock for replay experiments, and an HTTP client
//! speaking `{prompt, temperature, max_tokens, top_p}` -> `{text}` JSON.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{angular_distance, wrap_angle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { temperature: 0.7, max_tokens: 4096, top_p: 0.95 }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("mock script exhausted after {0} responses")]
    ScriptExhausted(usize),
    #[error("generation request failed: {0}")]
    Request(String),
    #[error("malformed generation response: {0}")]
    BadResponse(String),
}

pub trait TextGenClient: Send + Sync {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, GenError>;
}

/// Mock script file: either an ordered response list or keyword->response
/// rules with an optional default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MockScript {
    Sequence { responses: Vec<String> },
    Rules { rules: Vec<MockRule>, default: Option<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRule {
    pub contains: String,
    pub response: String,
}

/// Deterministic in-process generator. The rules variant is a pure function
/// of the prompt; the sequence variant replays a fixed response list.
pub struct MockGen {
    script: MockScript,
    cursor: Mutex<usize>,
}

impl MockGen {
    pub fn new(script: MockScript) -> Self {
        MockGen { script, cursor: Mutex::new(0) }
    }

    pub fn sequence<S: Into<String>>(responses: Vec<S>) -> Self {
        Self::new(MockScript::Sequence {
            responses: responses.into_iter().map(Into::into).collect(),
        })
    }

    pub fn fixed(response: &str) -> Self {
        Self::new(MockScript::Rules { rules: Vec::new(), default: Some(response.to_string()) })
    }

    pub fn rules(rules: Vec<(&str, &str)>, default: Option<&str>) -> Self {
        Self::new(MockScript::Rules {
            rules: rules
                .into_iter()
                .map(|(c, r)| MockRule { contains: c.to_string(), response: r.to_string() })
                .collect(),
            default: default.map(str::to_string),
        })
    }

    pub fn from_script_file(path: &std::path::Path) -> Result<Self, GenError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenError::Request(format!("read {}: {e}", path.display())))?;
        let script: MockScript =
            serde_json::from_str(&text).map_err(|e| GenError::BadResponse(e.to_string()))?;
        Ok(Self::new(script))
    }
}

impl TextGenClient for MockGen {
    fn generate(&self, prompt: &str, _params: &GenParams) -> Result<String, GenError> {
        match &self.script {
            MockScript::Sequence { responses } => {
                let mut cursor = self.cursor.lock().unwrap();
                if *cursor >= responses.len() {
                    return Err(GenError::ScriptExhausted(responses.len()));
                }
                let r = responses[*cursor].clone();
                *cursor += 1;
                Ok(r)
            }
            MockScript::Rules { rules, default } => {
                for rule in rules {
                    if prompt.contains(&rule.contains) {
                        return Ok(rule.response.clone());
                    }
                }
                default
                    .clone()
                    .ok_or_else(|| GenError::BadResponse("no mock rule matched".to_string()))
            }
        }
    }
}

/// A client that always fails; used to exercise fallback paths.
pub struct FailingGen;

impl TextGenClient for FailingGen {
    fn generate(&self, _prompt: &str, _params: &GenParams) -> Result<String, GenError> {
        Err(GenError::Request("unavailable".to_string()))
    }
}

/// Wraps a client and counts generate() calls.
pub struct CountingClient<C> {
    inner: C,
    calls: Mutex<usize>,
}

impl<C> CountingClient<C> {
    pub fn new(inner: C) -> Self {
        CountingClient { inner, calls: Mutex::new(0) }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl<C: TextGenClient> TextGenClient for CountingClient<C> {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, GenError> {
        *self.calls.lock().unwrap() += 1;
        self.inner.generate(prompt, params)
    }
}

#[derive(Serialize)]
struct GenRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
    top_p: f64,
}

#[derive(Deserialize)]
struct GenResponse {
    text: String,
}

/// JSON-over-HTTP client for an external text-generation service.
pub struct HttpTextGen {
    url: String,
}

impl HttpTextGen {
    pub fn new(url: &str) -> Self {
        HttpTextGen { url: url.to_string() }
    }
}

impl TextGenClient for HttpTextGen {
    fn generate(&self, prompt: &str, params: &GenParams) -> Result<String, GenError> {
        let body = GenRequest {
            prompt,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            top_p: params.top_p,
        };
        let resp = ureq::post(&self.url)
            .send_json(serde_json::to_value(&body).expect("serializable request"))
            .map_err(|e| GenError::Request(e.to_string()))?;
        let parsed: GenResponse =
            resp.into_json().map_err(|e| GenError::BadResponse(e.to_string()))?;
        Ok(parsed.text)
    }
}

// Prompt-kind markers the hint mock keys on. They come from the prompt
// templates in the policy and experience modules.
const MARKER_SELECTION: &str = "Frontier candidates:";
const MARKER_CHUNK: &str = "one concise chunk caption";
const MARKER_SUMMARY: &str = "Combine the chunk captions";
const MARKER_REFLECTION: &str = "self-reflective embodied exploration agent";
const MARKER_WORKING_MEMORY: &str = "Condense the following recent frontier snapshots";

/// Deterministic scripted generator for replay experiments. It echoes
/// trajectory text through the verbalization stages, plants a "prefer
/// bearing D deg" hint in abstractions when the source trajectory recorded
/// a target bearing, and at selection time follows the planted hint by
/// answering with the candidate whose view direction is angularly closest.
/// Without a hint it always answers index 0. Pure function of the prompt.
pub struct HintMock;

impl HintMock {
    fn extract_bearing_deg(text: &str, marker: &str) -> Option<f64> {
        let at = text.find(marker)?;
        let rest = &text[at + marker.len()..];
        let mut num = String::new();
        for ch in rest.trim_start().chars() {
            if ch.is_ascii_digit() || ch == '-' || ch == '.' {
                num.push(ch);
            } else {
                break;
            }
        }
        num.parse().ok()
    }

    fn candidate_thetas(prompt: &str, tag: &str) -> Vec<(usize, f64)> {
        // candidate headers look like "BVF 0:" followed by a text render
        // containing "theta D deg"
        let mut out = Vec::new();
        let mut search = prompt;
        let mut offset = 0usize;
        loop {
            let Some(pos) = search.find(&format!("{tag} ")) else { break };
            let abs = offset + pos;
            let rest = &prompt[abs + tag.len() + 1..];
            if let Some(idx_end) = rest.find(':') {
                if let Ok(idx) = rest[..idx_end].trim().parse::<usize>() {
                    if let Some(theta) = Self::extract_bearing_deg(rest, "theta ") {
                        out.push((idx, theta));
                    }
                }
            }
            offset = abs + tag.len() + 1;
            search = &prompt[offset..];
        }
        out.sort_by_key(|(i, _)| *i);
        out.dedup_by_key(|(i, _)| *i);
        out
    }

    fn selection(prompt: &str) -> String {
        let tag = if prompt.contains("pick exactly one CVF") { "CVF" } else { "BVF" };
        let hint = Self::extract_bearing_deg(prompt, "prefer bearing ");
        let candidates = Self::candidate_thetas(prompt, tag);
        let chosen = match (hint, candidates.is_empty()) {
            (Some(h), false) => {
                let target = wrap_angle(h.to_radians());
                candidates
                    .iter()
                    .min_by(|a, b| {
                        angular_distance(wrap_angle(a.1.to_radians()), target)
                            .partial_cmp(&angular_distance(wrap_angle(b.1.to_radians()), target))
                            .unwrap()
                    })
                    .map(|(i, _)| *i)
                    .unwrap_or(0)
            }
            _ => 0,
        };
        format!("Following the planted directional hint.\nFINAL: {tag} {chosen}")
    }

    fn echo_steps(prompt: &str) -> String {
        // keep only the logged step/caption lines so bearing hints survive
        prompt
            .lines()
            .filter(|l| l.trim_start().starts_with("- "))
            .map(|l| l.trim_start().trim_start_matches("- ").to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn reflection(prompt: &str) -> String {
        let hint = Self::extract_bearing_deg(prompt, "target bearing ");
        let guidance = match hint {
            Some(d) => format!(
                "In similar environments, prefer bearing {d:.1} deg from the start region; \
                 it led directly to the target here."
            ),
            None => "No reliable directional prior emerged from this trajectory.".to_string(),
        };
        format!(
            "REFLECTION:\n\
             Step 0 (Task Understanding): Locate the queried object and stop next to it.\n\
             Step 1 (Trajectory): The agent expanded the explored region outward from the start \
             cell, following frontier directions until the target label came into view.\n\
             Step 2 (Env-Object Associations): Labeled objects sit on free floor cells; open \
             corridors connect rooms.\n\
             Step 3 (Strategy x Question Type + Directional Priors): {guidance}\n\
             Step 4 (Anti-patterns): Avoid re-selecting frontiers pointing back into fully seen \
             space.\n\
             ABSTRACTION:\n\
             Explore toward large unexplored sectors first and commit to a consistent direction. \
             {guidance}\n"
        )
    }
}

impl TextGenClient for HintMock {
    fn generate(&self, prompt: &str, _params: &GenParams) -> Result<String, GenError> {
        if prompt.contains(MARKER_SELECTION) {
            Ok(Self::selection(prompt))
        } else if prompt.contains(MARKER_REFLECTION) {
            Ok(Self::reflection(prompt))
        } else if prompt.contains(MARKER_CHUNK) || prompt.contains(MARKER_SUMMARY) {
            Ok(Self::echo_steps(prompt))
        } else if prompt.contains(MARKER_WORKING_MEMORY) {
            Ok("Recently explored the regions around the last chosen frontiers; several \
                directions remain unseen."
                .to_string())
        } else {
            Ok("ok".to_string())
        }
    }
}
