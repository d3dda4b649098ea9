//! Experience recall: snapshot/text embeddings, scene- and task-similarity
//! ranking over the experience library, reciprocal-rank fusion, and the
//! rolling working-memory summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::experience::ExperienceLibrary;
use crate::hierarchy::Snapshot;
use crate::textgen::{GenParams, TextGenClient};

/// Fusion constant for reciprocal-rank scores.
pub const DEFAULT_RRF_K: f64 = 60.0;
/// Scene matches kept per query snapshot before fusion.
pub const DEFAULT_SCENE_TOP_M: usize = 3;
/// Trajectories handed to the policy after fusion.
pub const DEFAULT_RECALL_TOP_K: usize = 5;
/// Most recent snapshots condensed into working memory.
pub const WORKING_MEMORY_WINDOW: usize = 5;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("embedding failed: {0}")]
    Embed(String),
    #[error("embedding dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Maps snapshots and free text into a shared unit-norm vector space.
pub trait Embedder: Send + Sync {
    fn embed_snapshot(
        &self,
        labels: &[String],
        theta: f64,
        text_render: &str,
    ) -> Result<Vec<f64>, RetrievalError>;
    fn embed_text(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Deterministic hash-based embedder: the digest of the content seeds a
/// stream of coordinates which is then normalized. Similar inputs do not
/// land near each other except through shared exact features, so tests mix
/// label multisets into nearby buckets explicitly.
pub struct MockEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        MockEmbedder { seed, dim: 64 }
    }

    fn vector_from_features(&self, features: &[String]) -> Vec<f64> {
        // Sum one hash-derived unit vector per feature so inputs sharing
        // features (labels, coarse bearing, render lines) end up closer.
        let mut acc = vec![0.0f64; self.dim];
        for feature in features {
            let mut hasher = Sha256::new();
            hasher.update(self.seed.to_le_bytes());
            hasher.update(feature.as_bytes());
            let digest = hasher.finalize();
            let mut seed = [0u8; 32];
            seed.copy_from_slice(&digest);
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::from_seed(seed);
            for a in acc.iter_mut() {
                *a += rng.gen_range(-1.0..1.0);
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            acc[0] = 1.0;
            return acc;
        }
        acc.iter().map(|x| x / norm).collect()
    }
}

impl Embedder for MockEmbedder {
    fn embed_snapshot(
        &self,
        labels: &[String],
        theta: f64,
        text_render: &str,
    ) -> Result<Vec<f64>, RetrievalError> {
        let mut features: Vec<String> = labels.iter().map(|l| format!("label:{l}")).collect();
        features.sort();
        // quantize bearing to ~0.6 degree buckets
        features.push(format!("theta:{}", (theta * 100.0).round() as i64));
        for line in text_render.lines() {
            features.push(format!("render:{line}"));
        }
        Ok(self.vector_from_features(&features))
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut features: Vec<String> = text
            .split_whitespace()
            .map(|w| format!("word:{}", w.to_lowercase()))
            .collect();
        features.sort();
        features.dedup();
        if features.is_empty() {
            features.push("word:".to_string());
        }
        Ok(self.vector_from_features(&features))
    }
}

/// Remote embedder speaking a small JSON contract:
/// POST {"kind": "snapshot"|"text", "labels": [...], "theta": f, "payload": s}
/// -> {"vector": [f64, ...]}.
pub struct HttpEmbedder {
    pub url: String,
}

impl HttpEmbedder {
    fn call(&self, body: serde_json::Value) -> Result<Vec<f64>, RetrievalError> {
        let response: serde_json::Value = ureq::post(&self.url)
            .send_json(body)
            .map_err(|e| RetrievalError::Embed(e.to_string()))?
            .into_json()
            .map_err(|e| RetrievalError::Embed(e.to_string()))?;
        let vector = response
            .get("vector")
            .and_then(|v| v.as_array())
            .ok_or_else(|| RetrievalError::Embed("missing \"vector\" field".to_string()))?;
        vector
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| RetrievalError::Embed("non-numeric".to_string())))
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn embed_snapshot(
        &self,
        labels: &[String],
        theta: f64,
        text_render: &str,
    ) -> Result<Vec<f64>, RetrievalError> {
        self.call(serde_json::json!({
            "kind": "snapshot",
            "labels": labels,
            "theta": theta,
            "payload": text_render,
        }))
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        self.call(serde_json::json!({ "kind": "text", "payload": text }))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}

/// Trajectories ordered best-first with their similarity (or fused) scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    /// 1-based rank of a trajectory, if present.
    pub fn rank_of(&self, trajectory_id: &str) -> Option<usize> {
        self.entries.iter().position(|(id, _)| id == trajectory_id).map(|i| i + 1)
    }
}

fn sort_ranked(entries: &mut Vec<(String, f64)>) {
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0))
    });
}

/// Scene similarity: for each candidate snapshot keep its `top_m` most
/// similar stored snapshots, pool the matches, and keep each trajectory's
/// best similarity. Ties break toward the lexicographically smaller id.
pub fn scene_rank(
    candidates: &[Snapshot],
    library: &ExperienceLibrary,
    embedder: &dyn Embedder,
    top_m: usize,
) -> Result<RankedList, RetrievalError> {
    let mut stored: Vec<(&str, Vec<f64>)> = Vec::new();
    for entry in &library.entries {
        for snap in &entry.snapshots {
            stored.push((
                &entry.trajectory_id,
                embedder.embed_snapshot(&snap.labels, snap.theta_rad, &snap.text_render)?,
            ));
        }
    }
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for cand in candidates {
        let q = embedder.embed_snapshot(&cand.visible_labels, cand.theta, &cand.text_render)?;
        let mut sims: Vec<(&str, f64)> = Vec::with_capacity(stored.len());
        for (id, v) in &stored {
            sims.push((id, cosine(&q, v)?));
        }
        sims.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(b.0))
        });
        for (id, sim) in sims.into_iter().take(top_m) {
            let slot = best.entry(id.to_string()).or_insert(f64::NEG_INFINITY);
            if sim > *slot {
                *slot = sim;
            }
        }
    }
    let mut entries: Vec<(String, f64)> = best.into_iter().collect();
    sort_ranked(&mut entries);
    Ok(RankedList { entries })
}

/// Task similarity: current question vs each trajectory's source question.
pub fn task_rank(
    question: &str,
    library: &ExperienceLibrary,
    embedder: &dyn Embedder,
) -> Result<RankedList, RetrievalError> {
    let q = embedder.embed_text(question)?;
    let mut entries: Vec<(String, f64)> = Vec::with_capacity(library.len());
    for entry in &library.entries {
        let v = embedder.embed_text(&entry.question)?;
        entries.push((entry.trajectory_id.clone(), cosine(&q, &v)?));
    }
    sort_ranked(&mut entries);
    Ok(RankedList { entries })
}

/// Reciprocal-rank fusion over the two ranked lists, with 1-based ranks:
/// a trajectory absent from one list contributes nothing from it.
pub fn rrf_fuse(scene: &RankedList, task: &RankedList, k: f64) -> RankedList {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for list in [scene, task] {
        for (rank0, (id, _)) in list.entries.iter().enumerate() {
            *scores.entry(id.clone()).or_insert(0.0) += 1.0 / (k + (rank0 + 1) as f64);
        }
    }
    let mut entries: Vec<(String, f64)> = scores.into_iter().collect();
    sort_ranked(&mut entries);
    RankedList { entries }
}

/// One recalled trajectory: its fused score and the abstraction paragraph
/// injected into selection prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub trajectory_id: String,
    pub fused_score: f64,
    pub abstraction_paragraph: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplayContext {
    pub entries: Vec<ReplayEntry>,
}

/// Full recall round: scene rank, task rank, fuse, truncate to `top_k`,
/// and attach each trajectory's abstraction paragraph.
pub fn recall(
    candidates: &[Snapshot],
    question: &str,
    library: &ExperienceLibrary,
    embedder: &dyn Embedder,
    top_m: usize,
    top_k: usize,
    rrf_k: f64,
) -> Result<ReplayContext, RetrievalError> {
    if library.is_empty() {
        return Ok(ReplayContext::default());
    }
    let scene = scene_rank(candidates, library, embedder, top_m)?;
    let task = task_rank(question, library, embedder)?;
    let fused = rrf_fuse(&scene, &task, rrf_k);
    let entries = fused
        .entries
        .into_iter()
        .take(top_k)
        .map(|(id, fused_score)| {
            let paragraph = library
                .get(&id)
                .map(|e| e.abstraction.paragraph.clone())
                .unwrap_or_default();
            ReplayEntry { trajectory_id: id, fused_score, abstraction_paragraph: paragraph }
        })
        .collect();
    Ok(ReplayContext { entries })
}

/// Condense the most recent chosen snapshots into a brief episodic summary.
/// Generation failure degrades to an empty summary with a logged warning.
pub fn build_working_memory(
    recent: &[Snapshot],
    client: &dyn TextGenClient,
    params: &GenParams,
) -> String {
    if recent.is_empty() {
        return String::new();
    }
    let window = &recent[recent.len().saturating_sub(WORKING_MEMORY_WINDOW)..];
    let mut p = String::from(
        "Condense the following recent frontier snapshots into one brief paragraph covering \
         visited regions, observed cues, and still-uncertain directions:\n",
    );
    for (i, s) in window.iter().enumerate() {
        p.push_str(&format!("Snapshot {i}:\n{}\n", s.text_render));
    }
    match client.generate(&p, params) {
        Ok(text) => text,
        Err(e) => {
            log::warn!("working-memory summarization failed, continuing without: {e}");
            String::new()
        }
    }
}
