//! Turn a raw trajectory into a reusable abstraction: chunk the step log,
//! caption each chunk, merge the captions into a summary, reflect on it in
//! the fixed five-block format, judge the abstraction, and persist the result
//! in a JSONL library.
//!
//! Run with: cargo run --example experience_pipeline

use gridexplore::experience::{
    chunk_trajectory, parse_reflection, render_reflection, score_abstraction,
    summarize_trajectory, verbalize_chunk, Abstraction, ExperienceLibrary, LibraryEntry,
    StoredSnapshot, TrajectoryLog, DEFAULT_CHUNK_LEN,
};
use gridexplore::harness::{gen_map, run_episode, MapStyle, PolicyKind, QuestionSpec, RunConfig};
use gridexplore::retrieval::MockEmbedder;
use gridexplore::sim::load_map;
use gridexplore::textgen::{GenParams, HintMock, MockGen};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 1. roll out a trajectory with the scripted oracle policy
    let doc = gen_map(MapStyle::Maze, 15, 5, "sink")?;
    let map = load_map(&doc)?;
    let question = QuestionSpec {
        question_id: "q0".into(),
        text: "where is the sink?".into(),
        target_label: "sink".into(),
        category: "object".into(),
        map_index: 0,
        ground_truth: None,
        paraphrases: Vec::new(),
    };
    let mut cfg = RunConfig::default();
    cfg.policy = PolicyKind::Oracle;
    cfg.replay = false;
    cfg.working_memory = false;
    cfg.tau_min = 1;
    let log = run_episode(
        &map,
        &question,
        &cfg,
        &ExperienceLibrary::new(),
        &HintMock,
        &MockEmbedder::new(0),
        0,
    )?;
    println!("rollout: {} in {} decisions", log.outcome, log.decisions);

    let traj = TrajectoryLog {
        question: question.text.clone(),
        steps: log.steps.clone(),
        outcome: log.outcome,
        g: log.oracle_steps,
        p: log.executed_steps,
    };

    // 2. chunk and caption (HintMock echoes the step lines back, playing the
    //    role of a captioning model)
    let params = GenParams::default();
    let chunks = chunk_trajectory(&traj, DEFAULT_CHUNK_LEN);
    println!("{} chunks of <= {DEFAULT_CHUNK_LEN} steps", chunks.len());
    let mut captions = Vec::new();
    for chunk in chunks {
        captions.push(verbalize_chunk(chunk, &traj.question, traj.outcome, &HintMock, &params)?);
    }
    let summary = summarize_trajectory(&captions, &HintMock, &params)?;
    println!("summary:\n{}\n", summary.lines().take(4).collect::<Vec<_>>().join("\n"));

    // 3. reflect: the response must follow the strict five-block grammar
    let abstraction = Abstraction {
        blocks: vec![
            "Surveyed the start junction before committing to a corridor.".into(),
            "Followed the corridor with the largest unexplored area first.".into(),
            "Used wall layout to rule out already-covered branches.".into(),
            "Kept a consistent sweep direction to avoid revisits.".into(),
            "Confirmed the target as soon as its cell came into view.".into(),
        ],
        paragraph: "For single-object searches in corridor worlds, survey once, \
                    then commit to the branch with the most unexplored area and \
                    sweep consistently until the target appears."
            .into(),
    };
    let reflection_text = render_reflection(&abstraction);
    let parsed = parse_reflection(&reflection_text)?;
    assert_eq!(parsed, abstraction);
    println!("reflection parses back into {} blocks + paragraph", parsed.blocks.len());

    // 4. judge the abstraction on four dimensions (mocked judge)
    let judge = MockGen::fixed("Generality: 4\nRelevance: 5\nConciseness: 4\nActionability: 5");
    let score = score_abstraction(&abstraction, &judge, &params)?;
    println!("judge score (mean of 4 dimensions): {score:.2}");

    // 5. persist to a JSONL library and load it back
    let mut library = ExperienceLibrary::new();
    library.add(LibraryEntry {
        trajectory_id: library.fresh_id(),
        question: traj.question.clone(),
        outcome: traj.outcome,
        abstraction,
        snapshots: traj.steps.iter().map(StoredSnapshot::from_step).collect(),
    })?;
    let dir = std::env::temp_dir().join("gridexplore_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("library.jsonl");
    library.save(&path)?;
    let loaded = ExperienceLibrary::load(&path)?;
    assert_eq!(loaded, library);
    println!("library round-tripped through {}", path.display());
    Ok(())
}
