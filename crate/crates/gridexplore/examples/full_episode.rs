//! A complete hierarchical exploration episode on a generated rooms map,
//! printing the decision-by-decision step log and the machine-readable
//! episode record.
//!
//! Run with: cargo run --example full_episode

use gridexplore::experience::ExperienceLibrary;
use gridexplore::harness::{gen_map, run_episode, MapStyle, PolicyKind, QuestionSpec, RunConfig};
use gridexplore::retrieval::MockEmbedder;
use gridexplore::sim::load_map;
use gridexplore::textgen::HintMock;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = gen_map(MapStyle::Rooms, 21, 1, "tv")?;
    println!("map:\n{doc}");
    let map = load_map(&doc)?;

    let question = QuestionSpec {
        question_id: "q0".into(),
        text: "where is the tv?".into(),
        target_label: "tv".into(),
        category: "object".into(),
        map_index: 0,
        ground_truth: None,
        paraphrases: Vec::new(),
    };
    let mut cfg = RunConfig::default();
    cfg.policy = PolicyKind::Hierarchical;
    cfg.tau_min = 1;
    cfg.working_memory = false; // keep the mock's prompt handling simple
    cfg.replay = false;

    let log = run_episode(
        &map,
        &question,
        &cfg,
        &ExperienceLibrary::new(),
        &HintMock, // deterministic stand-in for a language model
        &MockEmbedder::new(0),
        0,
    )?;

    println!("step log:");
    for s in &log.steps {
        println!("  t{:02} {}", s.t, s.text);
    }
    println!(
        "\noutcome: {} after {} decisions, {} cells executed (oracle shortest: {})",
        log.outcome, log.decisions, log.executed_steps, log.oracle_steps
    );
    if let Some(answer) = &log.answer {
        println!("answer: {answer}");
    }
    println!("\nepisode record (JSON):");
    println!("{}", serde_json::to_string_pretty(&log)?);
    Ok(())
}
