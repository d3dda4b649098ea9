//! Experience replay end to end: build an experience library from oracle
//! rollouts, then evaluate the hierarchical policy with and without replayed
//! abstractions and compare path efficiency across several seeds.
//!
//! Run with: cargo run --example replay_ablation

use gridexplore::experience::Outcome;
use gridexplore::harness::{
    build_experience_with, gen_map, run_episode, MapStyle, PolicyKind, QuestionSpec, RunConfig,
};
use gridexplore::retrieval::MockEmbedder;
use gridexplore::sim::load_map;
use gridexplore::textgen::HintMock;

fn spl(outcome: Outcome, g: u64, p: u64) -> f64 {
    match outcome {
        Outcome::Fail => 0.0,
        Outcome::Pass if g == 0 && p == 0 => 1.0,
        Outcome::Pass => g as f64 / g.max(p) as f64,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let embedder = MockEmbedder::new(0);
    let question = QuestionSpec {
        question_id: "q0".into(),
        text: "where is the sofa?".into(),
        target_label: "sofa".into(),
        category: "object".into(),
        map_index: 0,
        ground_truth: None,
        paraphrases: Vec::new(),
    };

    println!("{:>4} {:>12} {:>14} {:>8}", "seed", "spl+replay", "spl-no-replay", "winner");
    let mut wins = 0usize;
    let seeds = 0..8u64;
    let total = seeds.clone().count();
    for seed in seeds {
        let doc = gen_map(MapStyle::Rooms, 21, 2000 + seed, "sofa")?;
        let map = load_map(&doc)?;

        // library construction: oracle rollout, then caption/summarize/reflect
        // (HintMock plants a directional prior distilled from the rollout)
        let mut build_cfg = RunConfig::default();
        build_cfg.policy = PolicyKind::Oracle;
        build_cfg.replay = false;
        build_cfg.working_memory = false;
        build_cfg.tau_min = 1;
        build_cfg.questions = vec![question.clone()];
        build_cfg.maps = vec!["<inline>".into()];
        let library =
            build_experience_with(std::slice::from_ref(&map), &build_cfg, &HintMock, &embedder)?;

        // evaluation: hierarchical policy, same mock, replay toggled
        let mut cfg = RunConfig::default();
        cfg.policy = PolicyKind::Hierarchical;
        cfg.working_memory = false;
        cfg.tau_min = 1;
        cfg.sensing.range_cells = 8;
        cfg.max_steps = 100;

        cfg.replay = true;
        let with = run_episode(&map, &question, &cfg, &library, &HintMock, &embedder, seed)?;
        cfg.replay = false;
        let without = run_episode(&map, &question, &cfg, &library, &HintMock, &embedder, seed)?;

        let s_with = spl(with.outcome, with.oracle_steps, with.executed_steps);
        let s_without = spl(without.outcome, without.oracle_steps, without.executed_steps);
        let winner = if s_with > s_without {
            wins += 1;
            "replay"
        } else if s_with < s_without {
            "baseline"
        } else {
            "tie"
        };
        println!("{seed:>4} {s_with:>12.3} {s_without:>14.3} {winner:>8}");
    }
    println!("\nreplay strictly improved SPL on {wins}/{total} seeds");
    Ok(())
}
