//! Run the same object-search question under three frontier-selection
//! policies — scripted oracle, flat listwise, and hierarchical coarse-to-fine
//! — and compare success and path efficiency.
//!
//! Run with: cargo run --example policy_comparison

use gridexplore::experience::ExperienceLibrary;
use gridexplore::harness::{
    gen_map, run_episode, MapStyle, PolicyKind, QuestionSpec, RunConfig,
};
use gridexplore::retrieval::MockEmbedder;
use gridexplore::sim::load_map;
use gridexplore::textgen::HintMock;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = gen_map(MapStyle::Rooms, 21, 11, "plant")?;
    let map = load_map(&doc)?;
    let question = QuestionSpec {
        question_id: "q0".into(),
        text: "where is the plant?".into(),
        target_label: "plant".into(),
        category: "object".into(),
        map_index: 0,
        ground_truth: None,
        paraphrases: Vec::new(),
    };

    let library = ExperienceLibrary::new();
    let embedder = MockEmbedder::new(0);
    // HintMock is a deterministic stand-in for a language model: with no
    // replayed hint it picks the first candidate at every decision
    let client = HintMock;

    println!(
        "{:<14} {:>8} {:>10} {:>10} {:>8}",
        "policy", "outcome", "decisions", "executed", "spl"
    );
    for policy in [PolicyKind::Oracle, PolicyKind::Listwise, PolicyKind::Hierarchical] {
        let mut cfg = RunConfig::default();
        cfg.policy = policy;
        cfg.replay = false;
        cfg.working_memory = false;
        cfg.tau_min = 1; // complete exploration: even 1-cell pockets stay reachable
        let log = run_episode(&map, &question, &cfg, &library, &client, &embedder, 0)?;
        let spl = match log.outcome {
            gridexplore::experience::Outcome::Fail => 0.0,
            gridexplore::experience::Outcome::Pass => {
                let g = log.oracle_steps;
                let p = log.executed_steps;
                if g == 0 && p == 0 { 1.0 } else { g as f64 / g.max(p) as f64 }
            }
        };
        println!(
            "{:<14} {:>8} {:>10} {:>10} {:>8.3}",
            format!("{policy:?}"),
            log.outcome.to_string(),
            log.decisions,
            log.executed_steps,
            spl
        );
    }
    Ok(())
}
