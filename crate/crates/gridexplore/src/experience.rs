//! Trajectory logging, chunked verbalization, retrospective reflection and
//! abstraction, and the persistent experience library (JSONL).

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::Snapshot;
use crate::sim::Cell;
use crate::textgen::{GenError, GenParams, TextGenClient};

pub const DEFAULT_CHUNK_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass => write!(f, "PASS"),
            Outcome::Fail => write!(f, "FAIL"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperienceError {
    #[error("empty chunk")]
    EmptyChunk,
    #[error("no chunk captions to summarize")]
    NoCaptions,
    #[error("malformed reflection: {0}")]
    MalformedReflection(String),
    #[error("unparseable judge response: {0}")]
    BadJudgeResponse(String),
    #[error("duplicate trajectory id {0:?}")]
    DuplicateId(String),
    #[error("malformed library file at line {line}: {msg}")]
    MalformedLibrary { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// One logged exploration step: the description, the chosen frontier
/// direction, and the snapshot recorded at selection time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub text: String,
    pub theta: f64,
    pub cell: Cell,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub question: String,
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
    /// Oracle shortest length.
    pub g: u64,
    /// Executed length.
    pub p: u64,
}

/// Contiguous fixed-length segments; the final partial chunk is kept.
pub fn chunk_trajectory(log: &TrajectoryLog, chunk_len: usize) -> Vec<&[StepRecord]> {
    assert!(chunk_len >= 1);
    log.steps.chunks(chunk_len).collect()
}

/// Distill one segment into a chunk-level caption. The prompt carries the
/// question, the outcome, and the ordered step descriptions.
pub fn verbalize_chunk(
    chunk: &[StepRecord],
    question: &str,
    outcome: Outcome,
    client: &dyn TextGenClient,
    params: &GenParams,
) -> Result<String, ExperienceError> {
    if chunk.is_empty() {
        return Err(ExperienceError::EmptyChunk);
    }
    let mut p = String::new();
    p.push_str(
        "Distill the following exploration segment into one concise chunk caption that shows \
         how the agent moved through this temporal segment. Describe regions and transitions; \
         do not echo raw directional indicators verbatim.\n",
    );
    p.push_str(&format!("Question: {question}\nOutcome: {outcome}\nSteps:\n"));
    for s in chunk {
        p.push_str(&format!("- t{}: {}\n", s.t, s.text));
    }
    Ok(client.generate(&p, params)?)
}

/// Merge chunk captions into a single coherent trajectory-level summary.
pub fn summarize_trajectory(
    chunk_captions: &[String],
    client: &dyn TextGenClient,
    params: &GenParams,
) -> Result<String, ExperienceError> {
    if chunk_captions.is_empty() {
        return Err(ExperienceError::NoCaptions);
    }
    let mut p = String::new();
    p.push_str(
        "Combine the chunk captions below into a single coherent, objective description of \
         the full exploration trajectory, in order.\nChunk captions:\n",
    );
    for c in chunk_captions {
        p.push_str(&format!("- {c}\n"));
    }
    Ok(client.generate(&p, params)?)
}

/// Five reflection blocks (Step 0-4) plus one abstraction paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abstraction {
    pub blocks: Vec<String>,
    pub paragraph: String,
}

const BLOCK_TITLES: [&str; 5] = [
    "Task Understanding",
    "Trajectory",
    "Env-Object Associations",
    "Strategy x Question Type + Directional Priors",
    "Anti-patterns",
];

fn reflection_prompt(traj_caption: &str, question: &str, outcome: Outcome) -> String {
    format!(
        "You are a self-reflective embodied exploration agent. Your goal is to produce a \
         two-part analysis of a complete exploration trajectory through REFLECTION and \
         ABSTRACTION.\n\n\
         Input:\n\
         - Target Task: {question}\n\
         - Exploration Trajectory: {traj_caption}\n\
         - Final Outcome: {outcome}\n\n\
         Output format (must be exact and ordered):\n\
         REFLECTION: exactly five labeled blocks, in this order:\n\
         Step 0 (Task Understanding) - 2-3 sentences: paraphrase what the question asks and \
         what constitutes success.\n\
         Step 1 (Trajectory) - 8-10 sentences: summarize the overall trajectory, the regions \
         traversed, the key transitions, and the movement directionality.\n\
         Step 2 (Env-Object Associations) - 4-6 sentences: general priors linking categories \
         to regions, using generic categories only.\n\
         Step 3 (Strategy x Question Type + Directional Priors) - 4-6 sentences: concrete \
         guidance per question type with directional priors; which regions help and which \
         are harmful.\n\
         Step 4 (Anti-patterns) - 2-3 sentences: common failure modes to avoid and when to \
         stop.\n\
         ABSTRACTION: a single cohesive Abstraction paragraph integrating Step 0-4 into \
         actionable, transferable guidance; do not use step IDs inside the paragraph.\n\n\
         Keep every block label exactly as specified and in order. No extra sections.\n"
    )
}

/// Parse a reflection document into its five blocks and paragraph.
/// Missing blocks, extra blocks, and out-of-order blocks are rejected.
pub fn parse_reflection(response: &str) -> Result<Abstraction, ExperienceError> {
    #[derive(PartialEq, Debug, Clone, Copy)]
    enum Marker {
        Reflection,
        Step(usize),
        Abstraction,
    }
    let classify = |line: &str| -> Option<(Marker, String)> {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("REFLECTION:") {
            return Some((Marker::Reflection, rest.trim().to_string()));
        }
        if let Some(rest) = t.strip_prefix("ABSTRACTION:") {
            return Some((Marker::Abstraction, rest.trim().to_string()));
        }
        if let Some(rest) = t.strip_prefix("Step ") {
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            if digits.is_empty() {
                return None;
            }
            let n: usize = digits.parse().ok()?;
            let after = &rest[digits.len()..];
            // drop an optional "(Title)" and the label colon
            let content = match after.find(':') {
                Some(i) => after[i + 1..].trim().to_string(),
                None => after.trim().to_string(),
            };
            return Some((Marker::Step(n), content));
        }
        None
    };

    let mut markers: Vec<(Marker, String)> = Vec::new();
    for line in response.lines() {
        match classify(line) {
            Some((m, content)) => markers.push((m, content)),
            None => {
                if let Some(last) = markers.last_mut() {
                    let t = line.trim();
                    if !t.is_empty() {
                        if !last.1.is_empty() {
                            last.1.push(' ');
                        }
                        last.1.push_str(t);
                    }
                }
            }
        }
    }

    let expected = [
        Marker::Reflection,
        Marker::Step(0),
        Marker::Step(1),
        Marker::Step(2),
        Marker::Step(3),
        Marker::Step(4),
        Marker::Abstraction,
    ];
    if markers.len() != expected.len() {
        return Err(ExperienceError::MalformedReflection(format!(
            "expected 7 sections, found {}",
            markers.len()
        )));
    }
    for (got, want) in markers.iter().zip(expected.iter()) {
        if got.0 != *want {
            return Err(ExperienceError::MalformedReflection(format!(
                "section {:?} out of place (expected {:?})",
                got.0, want
            )));
        }
    }
    let paragraph = markers[6].1.clone();
    let blocks: Vec<String> = markers[1..6].iter().map(|(_, c)| c.clone()).collect();
    if blocks.iter().any(|b| b.is_empty()) || paragraph.is_empty() {
        return Err(ExperienceError::MalformedReflection("empty block".to_string()));
    }
    Ok(Abstraction { blocks, paragraph })
}

/// Run the retrospective reflection prompt and parse the response.
pub fn reflect_and_abstract(
    traj_caption: &str,
    question: &str,
    outcome: Outcome,
    client: &dyn TextGenClient,
    params: &GenParams,
) -> Result<Abstraction, ExperienceError> {
    let prompt = reflection_prompt(traj_caption, question, outcome);
    let response = client.generate(&prompt, params)?;
    parse_reflection(&response)
}

/// Render a well-formed reflection document from an Abstraction; the
/// inverse of `parse_reflection`, used by mocks and tests.
pub fn render_reflection(a: &Abstraction) -> String {
    let mut out = String::from("REFLECTION:\n");
    for (i, block) in a.blocks.iter().enumerate() {
        out.push_str(&format!("Step {} ({}): {}\n", i, BLOCK_TITLES[i], block));
    }
    out.push_str(&format!("ABSTRACTION:\n{}\n", a.paragraph));
    out
}

const JUDGE_DIMENSIONS: [&str; 4] = ["Generality", "Relevance", "Conciseness", "Actionability"];

/// Judge an abstraction along four dimensions (1-5 each); the overall
/// quality score is their arithmetic mean.
pub fn score_abstraction(
    abstraction: &Abstraction,
    judge: &dyn TextGenClient,
    params: &GenParams,
) -> Result<f64, ExperienceError> {
    let mut p = String::new();
    p.push_str(
        "Score the following exploration-experience abstraction along four dimensions, each \
         from 1 to 5:\n\
         - Generality: captures transferable principles rather than one episode.\n\
         - Relevance: aligns with the original question and its cues.\n\
         - Conciseness: conveys key ideas without redundancy.\n\
         - Actionability: provides concrete, environment-grounded hints.\n\n",
    );
    p.push_str(&format!("Abstraction:\n{}\n\n", abstraction.paragraph));
    p.push_str("Reply with four lines, e.g. \"Generality: 4\".\n");
    let response = judge.generate(&p, params)?;
    let mut scores = Vec::new();
    for dim in JUDGE_DIMENSIONS {
        let score = response
            .lines()
            .find_map(|l| {
                let l = l.trim();
                l.strip_prefix(dim)
                    .and_then(|rest| rest.trim_start_matches(':').trim().parse::<u8>().ok())
            })
            .ok_or_else(|| ExperienceError::BadJudgeResponse(format!("missing {dim}")))?;
        if !(1..=5).contains(&score) {
            return Err(ExperienceError::BadJudgeResponse(format!("{dim} score {score}")));
        }
        scores.push(score as f64);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Compact persisted form of a snapshot: enough for the embedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSnapshot {
    pub step: usize,
    pub theta_rad: f64,
    pub labels: Vec<String>,
    pub text_render: String,
}

impl StoredSnapshot {
    pub fn from_step(record: &StepRecord) -> Self {
        StoredSnapshot {
            step: record.t,
            theta_rad: record.snapshot.theta,
            labels: record.snapshot.visible_labels.clone(),
            text_render: record.snapshot.text_render.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub trajectory_id: String,
    pub question: String,
    pub outcome: Outcome,
    pub abstraction: Abstraction,
    pub snapshots: Vec<StoredSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperienceLibrary {
    pub entries: Vec<LibraryEntry>,
}

impl ExperienceLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, trajectory_id: &str) -> Option<&LibraryEntry> {
        self.entries.iter().find(|e| e.trajectory_id == trajectory_id)
    }

    /// A trajectory id not yet present in the library.
    pub fn fresh_id(&self) -> String {
        let mut n = self.entries.len();
        loop {
            let id = format!("traj-{n:04}");
            if self.get(&id).is_none() {
                return id;
            }
            n += 1;
        }
    }

    pub fn add(&mut self, entry: LibraryEntry) -> Result<(), ExperienceError> {
        if self.get(&entry.trajectory_id).is_some() {
            return Err(ExperienceError::DuplicateId(entry.trajectory_id));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// One JSON document per line, UTF-8.
    pub fn save(&self, path: &Path) -> Result<(), ExperienceError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for entry in &self.entries {
            serde_json::to_writer(&mut file, entry)
                .map_err(|e| ExperienceError::MalformedLibrary { line: 0, msg: e.to_string() })?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ExperienceError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lib = ExperienceLibrary::new();
        for (i, line) in file.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LibraryEntry = serde_json::from_str(&line)
                .map_err(|e| ExperienceError::MalformedLibrary { line: i + 1, msg: e.to_string() })?;
            lib.add(entry)?;
        }
        Ok(lib)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textgen::{FailingGen, MockGen};

    fn step(t: usize, text: &str) -> StepRecord {
        StepRecord {
            t,
            text: text.to_string(),
            theta: 0.3,
            cell: Cell::new(1, 1),
            snapshot: Snapshot {
                theta: 0.3,
                origin: Cell::new(1, 1),
                visible: Vec::new(),
                visible_labels: vec!["sofa".to_string()],
                text_render: "view from (1, 1) theta 17.2 deg\nlabels: sofa\n".to_string(),
            },
        }
    }

    fn log_with(n: usize) -> TrajectoryLog {
        TrajectoryLog {
            question: "where is the sofa?".to_string(),
            steps: (0..n).map(|t| step(t, "moved east")).collect(),
            outcome: Outcome::Pass,
            g: 4,
            p: 6,
        }
    }

    #[test]
    fn chunks_of_ten_with_partial_tail() {
        let log = log_with(25);
        let sizes: Vec<usize> =
            chunk_trajectory(&log, 10).iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![10, 10, 5]);
        assert_eq!(chunk_trajectory(&log_with(10), 10).len(), 1);
        assert!(chunk_trajectory(&log_with(0), 10).is_empty());
    }

    #[test]
    fn chunk_concatenation_reconstructs_steps() {
        let log = log_with(23);
        let rebuilt: Vec<StepRecord> =
            chunk_trajectory(&log, 7).into_iter().flatten().cloned().collect();
        assert_eq!(rebuilt, log.steps);
    }

    #[test]
    fn verbalize_chunk_contract() {
        let log = log_with(3);
        let client = MockGen::fixed("went through the hallway");
        let caption =
            verbalize_chunk(&log.steps, &log.question, log.outcome, &client, &GenParams::default())
                .unwrap();
        assert_eq!(caption, "went through the hallway");
        assert!(matches!(
            verbalize_chunk(&[], "q", Outcome::Pass, &client, &GenParams::default()),
            Err(ExperienceError::EmptyChunk)
        ));
        assert!(verbalize_chunk(
            &log.steps,
            "q",
            Outcome::Fail,
            &FailingGen,
            &GenParams::default()
        )
        .is_err());
    }

    #[test]
    fn summarize_orders_captions_in_prompt() {
        let captions = vec!["first".to_string(), "second".to_string()];
        // echo via a rules mock keyed on the joined order
        let client = MockGen::rules(vec![("- first\n- second", "ordered")], Some("unordered"));
        let s = summarize_trajectory(&captions, &client, &GenParams::default()).unwrap();
        assert_eq!(s, "ordered");
        assert!(matches!(
            summarize_trajectory(&[], &client, &GenParams::default()),
            Err(ExperienceError::NoCaptions)
        ));
    }

    fn well_formed() -> String {
        render_reflection(&Abstraction {
            blocks: (0..5).map(|i| format!("block {i} content.")).collect(),
            paragraph: "one cohesive paragraph of guidance.".to_string(),
        })
    }

    #[test]
    fn reflect_and_abstract_parses_well_formed_response() {
        let client = MockGen::fixed(&well_formed());
        let a = reflect_and_abstract("caption", "q", Outcome::Pass, &client, &GenParams::default())
            .unwrap();
        assert_eq!(a.blocks.len(), 5);
        assert_eq!(a.blocks[2], "block 2 content.");
        assert_eq!(a.paragraph, "one cohesive paragraph of guidance.");
    }

    #[test]
    fn reflection_missing_block_rejected() {
        let doc = well_formed().replace("Step 3 (Strategy x Question Type + Directional Priors): block 3 content.\n", "");
        assert!(matches!(
            parse_reflection(&doc),
            Err(ExperienceError::MalformedReflection(_))
        ));
    }

    #[test]
    fn reflection_out_of_order_rejected() {
        let doc = well_formed()
            .replace("Step 1 (Trajectory)", "Step X1")
            .replace("Step 2 (Env-Object Associations)", "Step 1 (Trajectory)")
            .replace("Step X1", "Step 2 (Env-Object Associations)");
        assert!(matches!(
            parse_reflection(&doc),
            Err(ExperienceError::MalformedReflection(_))
        ));
    }

    #[test]
    fn reflection_extra_block_rejected() {
        let doc = well_formed() + "Step 5 (Extra): should not be here.\n";
        assert!(parse_reflection(&doc).is_err());
    }

    #[test]
    fn score_abstraction_means_the_four_dimensions() {
        let a = Abstraction {
            blocks: vec!["b".into(); 5],
            paragraph: "p".into(),
        };
        let judge =
            MockGen::fixed("Generality: 5\nRelevance: 3\nConciseness: 4\nActionability: 4\n");
        assert_eq!(score_abstraction(&a, &judge, &GenParams::default()).unwrap(), 4.0);
        let perfect = MockGen::fixed("Generality: 5\nRelevance: 5\nConciseness: 5\nActionability: 5");
        assert_eq!(score_abstraction(&a, &perfect, &GenParams::default()).unwrap(), 5.0);
        let prose = MockGen::fixed("looks pretty good to me");
        assert!(score_abstraction(&a, &prose, &GenParams::default()).is_err());
    }

    fn entry(id: &str, label: &str) -> LibraryEntry {
        LibraryEntry {
            trajectory_id: id.to_string(),
            question: format!("where is the {label}?"),
            outcome: Outcome::Pass,
            abstraction: Abstraction {
                blocks: (0..5).map(|i| format!("block {i}")).collect(),
                paragraph: format!("head toward the {label}."),
            },
            snapshots: vec![StoredSnapshot {
                step: 0,
                theta_rad: 0.5,
                labels: vec![label.to_string()],
                text_render: format!("view\nlabels: {label}\n"),
            }],
        }
    }

    #[test]
    fn library_round_trip_with_non_ascii() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lib.jsonl");
        let mut lib = ExperienceLibrary::new();
        lib.add(entry("traj-0000", "sofá")).unwrap();
        lib.add(entry("traj-0001", "диван")).unwrap();
        lib.save(&path).unwrap();
        let loaded = ExperienceLibrary::load(&path).unwrap();
        assert_eq!(loaded, lib);
    }

    #[test]
    fn library_rejects_duplicate_ids() {
        let mut lib = ExperienceLibrary::new();
        lib.add(entry("a", "tv")).unwrap();
        assert!(matches!(lib.add(entry("a", "tv")), Err(ExperienceError::DuplicateId(_))));
    }

    #[test]
    fn empty_file_loads_empty_library() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(ExperienceLibrary::load(&path).unwrap().is_empty());
    }

    #[test]
    fn malformed_library_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(
            ExperienceLibrary::load(&path),
            Err(ExperienceError::MalformedLibrary { line: 1, .. })
        ));
    }
}
