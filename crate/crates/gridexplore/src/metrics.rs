//! Episode-level and suite-level evaluation: success rate, path-length
//! weighted success (SPL), judged answer quality on a 1-5 scale mapped to
//! 0-100, and the efficiency-weighted combination of the two.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textgen::{GenParams, TextGenClient};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty result set")]
    EmptySet,
    #[error("judge score {0} out of range 1-5")]
    ScoreOutOfRange(u8),
    #[error("metric undefined: {0}")]
    Undefined(String),
}

/// Outcome of a single evaluated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub question_id: String,
    pub category: String,
    /// Oracle shortest path length (cells).
    pub g: u64,
    /// Executed path length; `None` when the agent produced no answer.
    pub p: Option<u64>,
    pub answer: Option<String>,
    /// False when the answer is absent or rejected as ill-formed.
    pub valid: bool,
    /// Judge score in 1-5 when an answer was graded.
    pub judge_score: Option<u8>,
    /// Structural fallback score in 1-5, always available.
    pub fallback_score: u8,
}

impl EpisodeResult {
    /// Path-length weighted success for this episode. No valid answer
    /// means zero; a zero-length oracle path answered in place scores one.
    pub fn spl(&self) -> f64 {
        if !self.valid {
            return 0.0;
        }
        match self.p {
            None => 0.0,
            Some(p) => {
                if self.g == 0 && p == 0 {
                    1.0
                } else {
                    self.g as f64 / (self.g.max(p)) as f64
                }
            }
        }
    }

    pub fn succeeded(&self) -> bool {
        self.valid && self.answer.is_some()
    }

    /// Judge score when present, else the structural fallback.
    pub fn effective_score(&self) -> u8 {
        self.judge_score.unwrap_or(self.fallback_score)
    }
}

/// Map a 1-5 quality score onto 0-100.
pub fn map_score(s: u8) -> Result<f64, MetricsError> {
    if !(1..=5).contains(&s) {
        return Err(MetricsError::ScoreOutOfRange(s));
    }
    Ok(100.0 * (s as f64 - 1.0) / 4.0)
}

pub fn success_rate(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(results.iter().filter(|r| r.succeeded()).count() as f64 / results.len() as f64)
}

pub fn mean_spl(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(results.iter().map(|r| r.spl()).sum::<f64>() / results.len() as f64)
}

/// Mean mapped judge score over episodes that both succeeded and were
/// judged. Undefined when that intersection is empty.
pub fn llm_match(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    let graded: Vec<f64> = results
        .iter()
        .filter(|r| r.succeeded() && r.judge_score.is_some())
        .map(|r| map_score(r.judge_score.unwrap()))
        .collect::<Result<_, _>>()?;
    if graded.is_empty() {
        return Err(MetricsError::Undefined(
            "no episode was both successful and judged".to_string(),
        ));
    }
    Ok(graded.iter().sum::<f64>() / graded.len() as f64)
}

/// Efficiency-weighted answer quality averaged over all episodes; the
/// structural fallback stands in when a judge score is missing.
pub fn llm_match_x_spl(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut total = 0.0;
    for r in results {
        total += map_score(r.effective_score())? * r.spl();
    }
    Ok(total / results.len() as f64)
}

/// Structural answer scoring used when no judge is available: no answer is
/// worst, an answer naming the target label is best, anything else sits in
/// between.
pub fn fallback_score(answer: Option<&str>, target_label: &str) -> u8 {
    match answer {
        None => 1,
        Some(a) => {
            if a.to_lowercase().contains(&target_label.to_lowercase()) {
                4
            } else {
                2
            }
        }
    }
}

/// Grade a predicted answer 1-5 against the ground truth with one retry on
/// an unparseable response.
pub fn grade_answer(
    question: &str,
    ground_truth: &str,
    prediction: &str,
    paraphrases: &[String],
    judge: &dyn TextGenClient,
    params: &GenParams,
) -> Result<u8, MetricsError> {
    let mut p = String::from(
        "Grade the predicted answer against the ground truth on a 1-5 scale: 5 = equivalent \
         or an accepted paraphrase, 4 = minor wording differences, 3 = partially correct, \
         2 = mostly wrong, 1 = wrong or unrelated.\n",
    );
    p.push_str(&format!("Question: {question}\nGround truth: {ground_truth}\n"));
    if !paraphrases.is_empty() {
        p.push_str("Accepted paraphrases:\n");
        for para in paraphrases {
            p.push_str(&format!("- {para}\n"));
        }
    }
    p.push_str(&format!("Predicted answer: {prediction}\n"));
    p.push_str("Reply with a single line: \"Score: n\".\n");

    for attempt in 0..2 {
        let response = match judge.generate(&p, params) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("judge call failed (attempt {attempt}): {e}");
                continue;
            }
        };
        if let Some(score) = parse_judge_score(&response) {
            if !(1..=5).contains(&score) {
                return Err(MetricsError::ScoreOutOfRange(score));
            }
            return Ok(score);
        }
        log::warn!("unparseable judge response (attempt {attempt}): {response:?}");
    }
    Err(MetricsError::Undefined("judge response unparseable after retry".to_string()))
}

fn parse_judge_score(response: &str) -> Option<u8> {
    for line in response.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("Score") {
            if let Ok(n) = rest.trim_start_matches(':').trim().parse::<u8>() {
                return Some(n);
            }
        }
    }
    // lenient fallback: a bare digit
    response.trim().parse::<u8>().ok()
}

/// Aggregate numbers for one slice of the result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: usize,
    pub success_rate: f64,
    pub spl: f64,
    /// Absent when no episode in the slice was both successful and judged.
    pub llm_match: Option<f64>,
    pub llm_match_x_spl: f64,
}

fn aggregate(results: &[EpisodeResult]) -> Result<Aggregate, MetricsError> {
    Ok(Aggregate {
        episodes: results.len(),
        success_rate: success_rate(results)?,
        spl: mean_spl(results)?,
        llm_match: llm_match(results).ok(),
        llm_match_x_spl: llm_match_x_spl(results)?,
    })
}

/// Whole-suite report: overall aggregates, per-category breakdown, and the
/// per-episode rows. Serialization order is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: Aggregate,
    pub per_category: BTreeMap<String, Aggregate>,
    pub items: Vec<EpisodeResult>,
}

pub fn compute_report(results: &[EpisodeResult]) -> Result<MetricsReport, MetricsError> {
    let overall = aggregate(results)?;
    let mut by_cat: BTreeMap<String, Vec<EpisodeResult>> = BTreeMap::new();
    for r in results {
        by_cat.entry(r.category.clone()).or_default().push(r.clone());
    }
    let mut per_category = BTreeMap::new();
    for (cat, rs) in by_cat {
        per_category.insert(cat.clone(), aggregate(&rs)?);
    }
    Ok(MetricsReport { overall, per_category, items: results.to_vec() })
}
