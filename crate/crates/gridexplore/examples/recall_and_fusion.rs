//! Retrieve past experiences relevant to the current decision: rank library
//! trajectories by scene similarity (frontier snapshots vs stored snapshots)
//! and by task similarity (question vs question), then merge the two lists
//! with reciprocal-rank fusion.
//!
//! Run with: cargo run --example recall_and_fusion

use gridexplore::experience::{
    Abstraction, ExperienceLibrary, LibraryEntry, Outcome, StoredSnapshot,
};
use gridexplore::hierarchy::Snapshot;
use gridexplore::retrieval::{
    recall, rrf_fuse, scene_rank, task_rank, MockEmbedder, DEFAULT_RECALL_TOP_K, DEFAULT_RRF_K,
    DEFAULT_SCENE_TOP_M,
};
use gridexplore::sim::Cell;

fn entry(id: &str, question: &str, labels: &[&str], hint: &str) -> LibraryEntry {
    LibraryEntry {
        trajectory_id: id.to_string(),
        question: question.to_string(),
        outcome: Outcome::Pass,
        abstraction: Abstraction {
            blocks: (0..5).map(|i| format!("block {i}")).collect(),
            paragraph: hint.to_string(),
        },
        snapshots: labels
            .iter()
            .enumerate()
            .map(|(i, l)| StoredSnapshot {
                step: i,
                theta_rad: i as f64 * 0.4,
                labels: vec![l.to_string()],
                text_render: format!("view {i}\nlabels: {l}\n"),
            })
            .collect(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut library = ExperienceLibrary::new();
    library.add(entry(
        "traj-0000",
        "where is the sofa?",
        &["sofa", "tv"],
        "in living-room layouts, sweep along the longest wall first",
    ))?;
    library.add(entry(
        "traj-0001",
        "where is the sink?",
        &["sink", "shelf"],
        "kitchens cluster fixtures; follow the plumbing wall",
    ))?;
    library.add(entry(
        "traj-0002",
        "where is the lamp?",
        &["lamp", "desk"],
        "lamps sit next to desks; check work corners",
    ))?;

    // the current decision offers two candidate view directions
    let candidates = vec![
        Snapshot {
            theta: 0.0,
            origin: Cell::new(3, 3),
            visible: Vec::new(),
            visible_labels: vec!["sofa".to_string()],
            text_render: "view 0\nlabels: sofa\n".to_string(),
        },
        Snapshot {
            theta: 1.2,
            origin: Cell::new(3, 3),
            visible: Vec::new(),
            visible_labels: vec!["desk".to_string()],
            text_render: "view 1\nlabels: desk\n".to_string(),
        },
    ];
    let question = "where is the sofa?";
    let embedder = MockEmbedder::new(0);

    let scene = scene_rank(&candidates, &library, &embedder, DEFAULT_SCENE_TOP_M)?;
    let task = task_rank(question, &library, &embedder)?;
    println!("scene ranking (best stored-snapshot similarity per trajectory):");
    for (id, s) in &scene.entries {
        println!("  {id} {s:.4}");
    }
    println!("task ranking (question-to-question similarity):");
    for (id, s) in &task.entries {
        println!("  {id} {s:.4}");
    }

    let fused = rrf_fuse(&scene, &task, DEFAULT_RRF_K);
    println!("fused ranking (sum of 1/(60+rank) over both lists):");
    for (id, s) in &fused.entries {
        println!("  {id} {s:.6}");
    }

    // recall attaches the abstraction paragraphs of the top-K trajectories
    let ctx = recall(
        &candidates,
        question,
        &library,
        &embedder,
        DEFAULT_SCENE_TOP_M,
        DEFAULT_RECALL_TOP_K,
        DEFAULT_RRF_K,
    )?;
    println!("replay context handed to the selection prompt:");
    for e in &ctx.entries {
        println!("  [{}] {}", e.trajectory_id, e.abstraction_paragraph);
    }
    Ok(())
}
