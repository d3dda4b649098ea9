//! Frontier-selection policies: the two-layer hierarchical procedure,
//! listwise / pointwise / pairwise baselines, prompt assembly, decision
//! parsing with invalid-index fallbacks, and a scripted oracle.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{FrontierHierarchy, Snapshot};
use crate::retrieval::ReplayContext;
use crate::sim::{Cell, CellKind, GridMap};
use crate::textgen::{GenParams, TextGenClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    Bvf,
    Cvf,
}

impl Layer {
    fn tag(self) -> &'static str {
        match self {
            Layer::Bvf => "BVF",
            Layer::Cvf => "CVF",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("decision index {0} out of range")]
    InvalidIndex(usize),
    #[error("no decision line found in response")]
    NoDecision,
    #[error("empty hierarchy")]
    EmptyHierarchy,
    #[error("no cell carries the label {0:?}")]
    NoLabeledTarget(String),
}

/// Everything a single selection round sees.
pub struct DecisionContext<'a> {
    pub question: &'a str,
    pub candidates: &'a [Snapshot],
    pub egocentric: Option<&'a str>,
    pub working_memory: Option<&'a str>,
    pub replay: Option<&'a ReplayContext>,
    pub layer: Layer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen_index: usize,
    pub rationale: String,
    pub raw_response: String,
}

/// Render the hierarchical selection prompt: frontier definitions, the
/// optional egocentric / episodic / abstraction blocks, numbered candidate
/// views, the stepwise reasoning procedure, and the FINAL line instruction.
pub fn assemble_selection_prompt(ctx: &DecisionContext) -> String {
    let tag = ctx.layer.tag();
    let mut p = String::new();
    p.push_str(
        "You are an embodied agent navigating an indoor environment to answer a given \
         question. At each step, you must choose exactly one frontier to explore next.\n\n",
    );
    p.push_str(
        "Frontier definitions:\n\
         - Broad-View Frontiers (BVF): coarse directional sectors of your full surroundings. \
         You must pick one BVF to look closer.\n\
         - Close-up-View Frontiers (CVF): sub-divisions within the chosen BVF, offering \
         narrower perspectives. You must pick one CVF to move toward.\n\n",
    );
    p.push_str(&format!("Question: {}\n\n", ctx.question));
    p.push_str("Frontier candidates:\n");
    for (i, snap) in ctx.candidates.iter().enumerate() {
        p.push_str(&format!("{tag} {i}:\n{}\n", snap.text_render));
    }
    if let Some(ego) = ctx.egocentric {
        p.push_str(&format!("\nEgocentric forward view:\n{ego}\n"));
    }
    if let Some(wm) = ctx.working_memory {
        p.push_str(&format!("\nEpisodic context:\n{wm}\n"));
    }
    if let Some(replay) = ctx.replay {
        if !replay.entries.is_empty() {
            p.push_str("\nTrajectory abstraction:\n");
            for entry in &replay.entries {
                p.push_str(&entry.abstraction_paragraph);
                p.push_str("\n\n");
            }
        }
    }
    p.push_str(&format!(
        "\nReasoning procedure:\n\
         Step 0: restate the task in your own words and confirm that you must pick exactly \
         one {tag} of the current type.\n\
         Step 1: from the episodic context (if any), summarize which regions are already \
         explored and which remain unseen.\n\
         Step 2: if a trajectory abstraction is present, distill 1-2 concise directive rules \
         for the current question.\n\
         Step 3: compare all current frontier candidates one by one using visible cues, \
         novelty, and the distilled rules.\n\
         FINAL: print only the decision line - {tag} i\n",
    ));
    p
}

fn decision_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(BVF|CVF|FRONTIER)\s+(\d+)\b").unwrap())
}

/// Scan a response for the last "BVF i"/"CVF i" decision matching `layer`.
pub fn parse_decision(
    response: &str,
    n_candidates: usize,
    layer: Layer,
) -> Result<Decision, PolicyError> {
    assert!(n_candidates >= 1);
    let mut found: Option<(usize, usize)> = None; // (match end, index)
    for cap in decision_regex().captures_iter(response) {
        if !cap[1].eq_ignore_ascii_case(layer.tag()) {
            continue;
        }
        if let Ok(idx) = cap[2].parse::<usize>() {
            found = Some((cap.get(0).unwrap().end(), idx));
        }
    }
    let (end, idx) = found.ok_or(PolicyError::NoDecision)?;
    if idx >= n_candidates {
        return Err(PolicyError::InvalidIndex(idx));
    }
    Ok(Decision {
        chosen_index: idx,
        rationale: response[..end].trim().to_string(),
        raw_response: response.to_string(),
    })
}

/// Outcome of one hierarchical decision (a BVF round plus a CVF round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalChoice {
    pub target: Cell,
    pub bvf_index: usize,
    pub cvf_index: Option<usize>,
    pub theta: f64,
    /// Logged fallback events (invalid index / missing decision line).
    pub fallbacks: Vec<String>,
    pub bvf_response: String,
    pub cvf_response: String,
}

/// Coarse-to-fine selection: one BVF prompt round, then one CVF round over
/// the chosen BVF's children. Always issues exactly two generation calls.
/// A failed CVF decision falls back to the parent BVF's representative
/// point; a failed BVF decision falls back to BVF 0.
pub fn hierarchical_select(
    hier: &FrontierHierarchy,
    question: &str,
    egocentric: Option<&str>,
    working_memory: Option<&str>,
    replay: Option<&ReplayContext>,
    render: &dyn Fn(f64) -> Snapshot,
    client: &dyn TextGenClient,
    params: &GenParams,
) -> Result<HierarchicalChoice, PolicyError> {
    if hier.bvfs.is_empty() {
        return Err(PolicyError::EmptyHierarchy);
    }
    let mut fallbacks = Vec::new();

    let bvf_snaps: Vec<Snapshot> = hier.bvfs.iter().map(|b| render(b.theta)).collect();
    let ctx = DecisionContext {
        question,
        candidates: &bvf_snaps,
        egocentric,
        working_memory,
        replay,
        layer: Layer::Bvf,
    };
    let bvf_response = client
        .generate(&assemble_selection_prompt(&ctx), params)
        .unwrap_or_else(|e| format!("<generation failed: {e}>"));
    let bvf_index = match parse_decision(&bvf_response, hier.bvfs.len(), Layer::Bvf) {
        Ok(d) => d.chosen_index,
        Err(e) => {
            fallbacks.push(format!("BVF layer: {e}; defaulting to BVF 0"));
            0
        }
    };
    let bvf = &hier.bvfs[bvf_index];

    let cvf_snaps: Vec<Snapshot> = bvf.children.iter().map(|c| render(c.theta)).collect();
    let ctx = DecisionContext {
        question,
        candidates: &cvf_snaps,
        egocentric,
        working_memory,
        replay,
        layer: Layer::Cvf,
    };
    let cvf_response = client
        .generate(&assemble_selection_prompt(&ctx), params)
        .unwrap_or_else(|e| format!("<generation failed: {e}>"));
    match parse_decision(&cvf_response, bvf.children.len(), Layer::Cvf) {
        Ok(d) => {
            let cvf = &bvf.children[d.chosen_index];
            Ok(HierarchicalChoice {
                target: cvf.anchor,
                bvf_index,
                cvf_index: Some(d.chosen_index),
                theta: cvf.theta,
                fallbacks,
                bvf_response,
                cvf_response,
            })
        }
        Err(e) => {
            // invalid index at the CVF layer: use the BVF representative point
            fallbacks.push(format!("CVF layer: {e}; using BVF {bvf_index} representative point"));
            Ok(HierarchicalChoice {
                target: bvf.anchor,
                bvf_index,
                cvf_index: None,
                theta: bvf.theta,
                fallbacks,
                bvf_response,
                cvf_response,
            })
        }
    }
}

/// All frontier snapshots in one prompt; parse "FRONTIER i".
pub fn assemble_listwise_prompt(
    question: &str,
    candidates: &[Snapshot],
    working_memory: Option<&str>,
    replay: Option<&ReplayContext>,
) -> String {
    let mut p = String::new();
    p.push_str(
        "You are an embodied agent navigating an indoor environment to answer a given \
         question. All candidate frontiers are listed below; choose exactly one.\n\n",
    );
    p.push_str(&format!("Question: {question}\n\n"));
    p.push_str("Frontier candidates:\n");
    for (i, snap) in candidates.iter().enumerate() {
        p.push_str(&format!("FRONTIER {i}:\n{}\n", snap.text_render));
    }
    if let Some(wm) = working_memory {
        p.push_str(&format!("\nEpisodic context:\n{wm}\n"));
    }
    if let Some(replay) = replay {
        if !replay.entries.is_empty() {
            p.push_str("\nTrajectory abstraction:\n");
            for entry in &replay.entries {
                p.push_str(&entry.abstraction_paragraph);
                p.push_str("\n\n");
            }
        }
    }
    p.push_str("\nFINAL: print only the decision line - FRONTIER i\n");
    p
}

fn parse_listwise(response: &str, n: usize) -> Option<usize> {
    let mut found = None;
    for cap in decision_regex().captures_iter(response) {
        if !cap[1].eq_ignore_ascii_case("FRONTIER") {
            continue;
        }
        if let Ok(idx) = cap[2].parse::<usize>() {
            found = Some(idx);
        }
    }
    found.filter(|i| *i < n)
}

/// Single-prompt selection over all candidates. Invalid or missing replies
/// fall back to index 0; a single candidate short-circuits without a call.
pub fn listwise_select(
    question: &str,
    candidates: &[Snapshot],
    working_memory: Option<&str>,
    replay: Option<&ReplayContext>,
    client: &dyn TextGenClient,
    params: &GenParams,
) -> usize {
    assert!(!candidates.is_empty());
    if candidates.len() == 1 {
        return 0;
    }
    let prompt = assemble_listwise_prompt(question, candidates, working_memory, replay);
    match client.generate(&prompt, params) {
        Ok(response) => parse_listwise(&response, candidates.len()).unwrap_or(0),
        Err(_) => 0,
    }
}

fn parse_score(response: &str) -> Option<f64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").unwrap());
    re.find(response).and_then(|m| m.as_str().parse().ok())
}

/// Per-candidate scoring prompts; argmax with ties to the lowest index.
pub fn pointwise_select(
    question: &str,
    candidates: &[Snapshot],
    working_memory: Option<&str>,
    replay: Option<&ReplayContext>,
    client: &dyn TextGenClient,
    params: &GenParams,
) -> usize {
    assert!(!candidates.is_empty());
    if candidates.len() == 1 {
        return 0;
    }
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, snap) in candidates.iter().enumerate() {
        let mut p = String::new();
        p.push_str(
            "You are an embodied agent deciding whether one candidate frontier is worth \
             exploring to answer a question.\n\n",
        );
        p.push_str(&format!("Question: {question}\n\nCandidate frontier:\n{}\n", snap.text_render));
        if let Some(wm) = working_memory {
            p.push_str(&format!("\nEpisodic context:\n{wm}\n"));
        }
        if let Some(replay) = replay {
            for entry in &replay.entries {
                p.push_str(&format!("\nTrajectory abstraction:\n{}\n", entry.abstraction_paragraph));
            }
        }
        p.push_str("\nReply with a single usefulness score between 0 and 1.\n");
        let score = client
            .generate(&p, params)
            .ok()
            .and_then(|r| parse_score(&r))
            .unwrap_or(f64::NEG_INFINITY);
        if score > best.0 {
            best = (score, i);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        0
    } else {
        best.1
    }
}

/// Sequential duel bracket seeded by candidate order: the running winner
/// meets each next candidate; the final winner is returned. A failed or
/// unparseable duel keeps the earlier (lower-index) operand.
pub fn pairwise_select(
    question: &str,
    candidates: &[Snapshot],
    working_memory: Option<&str>,
    replay: Option<&ReplayContext>,
    client: &dyn TextGenClient,
    params: &GenParams,
) -> usize {
    assert!(!candidates.is_empty());
    let mut winner = 0usize;
    for challenger in 1..candidates.len() {
        let mut p = String::new();
        p.push_str(
            "You are an embodied agent comparing two candidate frontiers; pick the one more \
             likely to help answer the question.\n\n",
        );
        p.push_str(&format!("Question: {question}\n\n"));
        p.push_str(&format!("OPTION A:\n{}\n", candidates[winner].text_render));
        p.push_str(&format!("OPTION B:\n{}\n", candidates[challenger].text_render));
        if let Some(wm) = working_memory {
            p.push_str(&format!("\nEpisodic context:\n{wm}\n"));
        }
        if let Some(replay) = replay {
            for entry in &replay.entries {
                p.push_str(&format!("\nTrajectory abstraction:\n{}\n", entry.abstraction_paragraph));
            }
        }
        p.push_str("\nFINAL: print only the decision line - OPTION A or OPTION B\n");
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| Regex::new(r"(?i)\bOPTION\s+(A|B)\b").unwrap());
        if let Ok(response) = client.generate(&p, params) {
            let last = re.captures_iter(&response).last();
            if let Some(cap) = last {
                if cap[1].eq_ignore_ascii_case("B") {
                    winner = challenger;
                }
            }
        }
    }
    winner
}

/// Deterministic test/demonstration policy: picks the candidate whose cell
/// has minimum true geodesic distance to the nearest cell carrying
/// `target_label`. Ties break to the lowest index.
pub fn scripted_oracle_select(
    candidates: &[Cell],
    map: &GridMap,
    target_label: &str,
) -> Result<usize, PolicyError> {
    assert!(!candidates.is_empty());
    let targets = map.cells_with_label(target_label);
    if targets.is_empty() {
        return Err(PolicyError::NoLabeledTarget(target_label.to_string()));
    }
    // multi-source BFS over true free cells
    let mut dist: HashMap<Cell, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    for t in targets {
        dist.insert(t, 0);
        queue.push_back(t);
    }
    while let Some(cur) = queue.pop_front() {
        let d = dist[&cur];
        for n in cur.neighbors4() {
            if map.in_bounds(n)
                && map.kind(n) == CellKind::Free
                && !dist.contains_key(&n)
            {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    let mut best = (u32::MAX, 0usize);
    for (i, c) in candidates.iter().enumerate() {
        let d = dist.get(c).copied().unwrap_or(u32::MAX - 1);
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best.1)
}
