//! End-to-end acceptance suite. Each test prints one PASS line on success
//! (visible with `cargo test --test acceptance -- --nocapture`); a failing
//! criterion fails its test.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridexplore::experience::{
    parse_reflection, render_reflection, Abstraction, ExperienceLibrary, LibraryEntry, Outcome,
    StoredSnapshot,
};
use gridexplore::harness::{
    build_experience_with, gen_map, gen_maps, run_episode, MapStyle, PolicyKind, QuestionSpec,
    RunConfig,
};
use gridexplore::hierarchy::{build_hierarchy, Snapshot};
use gridexplore::mapping::{FrontierCell, OccupancyMap};
use gridexplore::metrics::{
    fallback_score, llm_match, llm_match_x_spl, map_score, success_rate, EpisodeResult,
};
use gridexplore::policy::{assemble_listwise_prompt, hierarchical_select};
use gridexplore::retrieval::{
    cosine, recall, rrf_fuse, scene_rank, task_rank, Embedder, MockEmbedder, RankedList,
};
use gridexplore::sim::{load_map, AgentPose, Cell, CellKind, Observation, VisibleCell};
use gridexplore::textgen::{CountingClient, GenParams, HintMock, MockGen};

fn pass(n: usize, what: &str) {
    println!("PASS: criterion {n} - {what}");
}

// ---------------------------------------------------------------------------
// criterion 1: frontier extraction matches a brute-force oracle

fn random_occupancy(rng: &mut ChaCha8Rng, w: usize, h: usize) -> OccupancyMap {
    let mut occ = OccupancyMap::new(w, h);
    let mut visible = Vec::new();
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let r: f64 = rng.gen();
            if r < 0.45 {
                continue; // unseen
            }
            let kind = if r < 0.75 { CellKind::Free } else { CellKind::Wall };
            visible.push(VisibleCell { cell: Cell::new(x, y), kind, label: None });
        }
    }
    if !visible.is_empty() {
        let obs = Observation {
            origin: AgentPose { cell: visible[0].cell, heading: 0.0 },
            visible,
            fov_rad: std::f64::consts::TAU,
            range_cells: w.max(h) as i32,
        };
        occ.integrate_observation(&obs).unwrap();
    }
    occ
}

fn brute_force_frontiers(
    occ: &OccupancyMap,
    agent: Cell,
    tau_min: u8,
    tau_max: u8,
) -> Vec<(Cell, u8)> {
    // island by BFS over known-free cells
    let mut island = HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    island.insert(agent);
    queue.push_back(agent);
    while let Some(c) = queue.pop_front() {
        for n in c.neighbors4() {
            if occ.in_bounds(n) && occ.is_free(n) && !island.contains(&n) {
                island.insert(n);
                queue.push_back(n);
            }
        }
    }
    let mut out = Vec::new();
    for y in 0..occ.height as i32 {
        for x in 0..occ.width as i32 {
            let c = Cell::new(x, y);
            if !island.contains(&c) {
                continue;
            }
            let mut score = 0u8;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let n = Cell::new(x + dx, y + dy);
                    if occ.in_bounds(n) && !occ.is_seen(n) {
                        score += 1;
                    }
                }
            }
            if score >= tau_min && score <= tau_max {
                out.push((c, score));
            }
        }
    }
    out
}

#[test]
fn criterion_1_frontier_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0usize;
    while checked < 100 {
        let occ = random_occupancy(&mut rng, 20, 20);
        // random free agent cell
        let free: Vec<Cell> = (0..20i32)
            .flat_map(|y| (0..20i32).map(move |x| Cell::new(x, y)))
            .filter(|c| occ.is_free(*c))
            .collect();
        if free.is_empty() {
            continue;
        }
        let agent = free[rng.gen_range(0..free.len())];
        let got: Vec<(Cell, u8)> = occ
            .extract_frontiers(agent, 2, 8)
            .unwrap()
            .into_iter()
            .map(|f| (f.cell, f.score))
            .collect();
        let want = brute_force_frontiers(&occ, agent, 2, 8);
        assert_eq!(got, want, "map {checked} disagrees with the brute-force oracle");
        checked += 1;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget is 5s");
    pass(1, "frontier extraction matches brute force on 100 random 20x20 maps");
}

// ---------------------------------------------------------------------------
// criterion 2: hierarchy bounds and generation-call budget

fn fake_snapshot(theta: f64) -> Snapshot {
    Snapshot {
        theta,
        origin: Cell::new(15, 15),
        visible: Vec::new(),
        visible_labels: Vec::new(),
        text_render: format!("view from (15, 15) theta {:.1} deg\nlabels: \n", theta.to_degrees()),
    }
}

#[test]
fn criterion_2_hierarchy_bounds_and_call_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let agent = Cell::new(15, 15);
    for case in 0..1000 {
        let n = rng.gen_range(1..=200usize);
        let mut cells = HashSet::new();
        while cells.len() < n {
            let c = Cell::new(rng.gen_range(0..30), rng.gen_range(0..30));
            cells.insert(c);
        }
        let frontiers: Vec<FrontierCell> = cells
            .into_iter()
            .map(|cell| FrontierCell { cell, score: rng.gen_range(2..=8) })
            .collect();
        let hier = build_hierarchy(&frontiers, agent, 0.0, case, 3, 2).unwrap();
        assert!(
            (1..=3).contains(&hier.bvfs.len()),
            "case {case}: {} BVFs for |F|={n}",
            hier.bvfs.len()
        );
        for b in &hier.bvfs {
            assert!(
                (1..=3).contains(&b.children.len()),
                "case {case}: {} CVFs",
                b.children.len()
            );
        }
        // every hierarchical decision issues exactly two generation calls
        if case < 50 {
            let client = CountingClient::new(MockGen::fixed("FINAL: BVF 0\nFINAL: CVF 0"));
            hierarchical_select(
                &hier,
                "where is the sofa?",
                None,
                None,
                None,
                &fake_snapshot,
                &client,
                &GenParams::default(),
            )
            .unwrap();
            assert_eq!(client.calls(), 2, "case {case}: call budget violated");
        }
    }
    // flat listwise prompts scale with |F_t|
    for n in [6usize, 15] {
        let snaps: Vec<Snapshot> = (0..n).map(|i| fake_snapshot(i as f64 * 0.1)).collect();
        let prompt = assemble_listwise_prompt("q?", &snaps, None, None);
        let headers = (0..snaps.len())
            .filter(|i| prompt.contains(&format!("FRONTIER {i}:")))
            .count();
        assert_eq!(headers, n);
        assert!(!prompt.contains(&format!("FRONTIER {n}:")));
    }
    pass(2, "1-3 BVFs x 1-3 CVFs over 1000 random frontier sets; 2 calls per decision");
}

// ---------------------------------------------------------------------------
// criterion 3: reciprocal-rank fusion exactness and fuzz

#[test]
fn criterion_3_rrf_exactness_and_fuzz() {
    let list = |ids: &[&str]| RankedList {
        entries: ids.iter().enumerate().map(|(i, s)| (s.to_string(), 1.0 - i as f64 * 0.1)).collect(),
    };
    // rank 1 in both lists
    let fused = rrf_fuse(&list(&["a", "b"]), &list(&["a", "b"]), 60.0);
    assert!((fused.entries[0].1 - 2.0 / 61.0).abs() < 1e-12);
    // rank 1 and rank 3
    let fused = rrf_fuse(&list(&["a", "b", "c"]), &list(&["c", "b", "a"]), 60.0);
    let a = fused.entries.iter().find(|(i, _)| i == "a").unwrap().1;
    assert!((a - (1.0 / 61.0 + 1.0 / 63.0)).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=12usize);
        let ids: Vec<String> = (0..n).map(|i| format!("t{i:02}")).collect();
        let mut scene = ids.clone();
        let mut task = ids.clone();
        for v in [&mut scene, &mut task] {
            for i in (1..v.len()).rev() {
                v.swap(i, rng.gen_range(0..=i));
            }
        }
        let as_list = |v: &[String]| RankedList {
            entries: v.iter().enumerate().map(|(i, s)| (s.clone(), -(i as f64))).collect(),
        };
        let fused = rrf_fuse(&as_list(&scene), &as_list(&task), 60.0);
        // exact independent recomputation
        for (id, score) in &fused.entries {
            let r1 = scene.iter().position(|x| x == id).unwrap() + 1;
            let r2 = task.iter().position(|x| x == id).unwrap() + 1;
            let expect = 1.0 / (60.0 + r1 as f64) + 1.0 / (60.0 + r2 as f64);
            assert!((score - expect).abs() < 1e-12);
        }
        // monotonicity: promoting an item one rank never lowers its score
        if n >= 2 {
            let j = rng.gen_range(1..n);
            let before = fused
                .entries
                .iter()
                .find(|(i, _)| i == &scene[j])
                .unwrap()
                .1;
            let mut promoted = scene.clone();
            promoted.swap(j - 1, j);
            let fused2 = rrf_fuse(&as_list(&promoted), &as_list(&task), 60.0);
            let after = fused2
                .entries
                .iter()
                .find(|(i, _)| i == &scene[j])
                .unwrap()
                .1;
            assert!(after >= before - 1e-15);
        }
    }
    pass(3, "RRF exact values to 1e-12 plus 10,000-case permutation/monotonicity fuzz");
}

// ---------------------------------------------------------------------------
// criterion 4: retrieval matches exhaustive cosine sorts

const LABEL_POOL: [&str; 8] = ["sofa", "tv", "lamp", "plant", "desk", "sink", "bed", "shelf"];

fn random_stored(rng: &mut ChaCha8Rng) -> StoredSnapshot {
    let n = rng.gen_range(0..3usize);
    let labels: Vec<String> =
        (0..n).map(|_| LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())].to_string()).collect();
    StoredSnapshot {
        step: rng.gen_range(0..50),
        theta_rad: rng.gen_range(-3.1..3.1),
        labels,
        text_render: format!("render variant {}", rng.gen_range(0..20u32)),
    }
}

fn random_library(rng: &mut ChaCha8Rng) -> ExperienceLibrary {
    let mut lib = ExperienceLibrary::new();
    for t in 0..rng.gen_range(2..=10usize) {
        let label = LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())];
        lib.add(LibraryEntry {
            trajectory_id: format!("traj-{t:04}"),
            question: format!("where is the {label} number {}?", rng.gen_range(0..5u32)),
            outcome: if rng.gen_bool(0.8) { Outcome::Pass } else { Outcome::Fail },
            abstraction: Abstraction {
                blocks: (0..5).map(|i| format!("block {i}")).collect(),
                paragraph: format!("guidance {t}"),
            },
            snapshots: (0..rng.gen_range(1..=5usize)).map(|_| random_stored(rng)).collect(),
        })
        .unwrap();
    }
    lib
}

fn snap_of(s: &StoredSnapshot) -> Snapshot {
    Snapshot {
        theta: s.theta_rad,
        origin: Cell::new(1, 1),
        visible: Vec::new(),
        visible_labels: s.labels.clone(),
        text_render: s.text_render.clone(),
    }
}

#[test]
fn criterion_4_retrieval_matches_exhaustive_sorts() {
    let emb = MockEmbedder::new(7);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..100 {
        let lib = random_library(&mut rng);
        let candidates: Vec<Snapshot> =
            (0..rng.gen_range(1..=4usize)).map(|_| snap_of(&random_stored(&mut rng))).collect();
        let question = format!("where is the {}?", LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())]);
        let top_m = 3;

        // exhaustive scene oracle
        let mut best: std::collections::BTreeMap<String, f64> = Default::default();
        for cand in &candidates {
            let q = emb
                .embed_snapshot(&cand.visible_labels, cand.theta, &cand.text_render)
                .unwrap();
            let mut sims: Vec<(String, f64)> = Vec::new();
            for e in &lib.entries {
                for s in &e.snapshots {
                    let v = emb.embed_snapshot(&s.labels, s.theta_rad, &s.text_render).unwrap();
                    sims.push((e.trajectory_id.clone(), cosine(&q, &v).unwrap()));
                }
            }
            sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            for (id, sim) in sims.into_iter().take(top_m) {
                let slot = best.entry(id).or_insert(f64::NEG_INFINITY);
                if sim > *slot {
                    *slot = sim;
                }
            }
        }
        let mut scene_oracle: Vec<(String, f64)> = best.into_iter().collect();
        scene_oracle
            .sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        let scene = scene_rank(&candidates, &lib, &emb, top_m).unwrap();
        assert_eq!(scene.entries, scene_oracle, "case {case}: scene rank mismatch");

        // exhaustive task oracle
        let qv = emb.embed_text(&question).unwrap();
        let mut task_oracle: Vec<(String, f64)> = lib
            .entries
            .iter()
            .map(|e| {
                (e.trajectory_id.clone(), cosine(&qv, &emb.embed_text(&e.question).unwrap()).unwrap())
            })
            .collect();
        task_oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        let task = task_rank(&question, &lib, &emb).unwrap();
        assert_eq!(task.entries, task_oracle, "case {case}: task rank mismatch");
    }

    // planted duplicate lands at rank 1 in both lists and fuses to 2/61
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    let mut lib = random_library(&mut rng);
    let planted = StoredSnapshot {
        step: 0,
        theta_rad: 0.5,
        labels: vec!["sofa".to_string()],
        text_render: "exact duplicate render".to_string(),
    };
    let question = "where exactly is the unique red sofa hiding?";
    lib.add(LibraryEntry {
        trajectory_id: "dup".to_string(),
        question: question.to_string(),
        outcome: Outcome::Pass,
        abstraction: Abstraction {
            blocks: (0..5).map(|i| format!("b{i}")).collect(),
            paragraph: "planted".to_string(),
        },
        snapshots: vec![planted.clone()],
    })
    .unwrap();
    let candidates = vec![snap_of(&planted)];
    let ctx = recall(&candidates, question, &lib, &emb, 3, 5, 60.0).unwrap();
    assert_eq!(ctx.entries[0].trajectory_id, "dup");
    assert!((ctx.entries[0].fused_score - 2.0 / 61.0).abs() < 1e-12);
    pass(4, "scene/task ranking matches exhaustive cosine sorts; planted duplicate fuses to 2/61");
}

// ---------------------------------------------------------------------------
// criterion 5: metric golden values

#[test]
fn criterion_5_metric_golden_values() {
    let r = |g: u64, p: Option<u64>, valid: bool, judge: Option<u8>, fb: u8| EpisodeResult {
        question_id: "q".into(),
        category: "object".into(),
        g,
        p,
        answer: if valid { Some("the sofa is here".into()) } else { None },
        valid,
        judge_score: judge,
        fallback_score: fb,
    };
    assert_eq!(r(4, Some(8), true, None, 4).spl(), 0.5);
    assert_eq!(r(0, Some(0), true, None, 4).spl(), 1.0);
    assert_eq!(r(4, None, false, None, 1).spl(), 0.0);
    assert_eq!(map_score(1).unwrap(), 0.0);
    assert_eq!(map_score(3).unwrap(), 50.0);
    assert_eq!(map_score(5).unwrap(), 100.0);
    let rs = vec![
        r(4, Some(4), true, Some(5), 4),
        r(4, None, false, None, 1),
        r(4, Some(8), true, Some(3), 4),
        r(4, Some(4), true, None, 4),
    ];
    assert_eq!(success_rate(&rs).unwrap(), 0.75);
    assert_eq!(llm_match(&rs).unwrap(), 75.0); // mean of 100 and 50 over judged successes
    // fallback substitutes when unjudged: (100*1 + 0*0 + 50*0.5 + 75*1)/4
    assert_eq!(llm_match_x_spl(&rs).unwrap(), 50.0);
    assert_eq!(
        llm_match_x_spl(&[r(4, Some(8), true, Some(5), 4), r(4, Some(4), true, Some(3), 4)])
            .unwrap(),
        50.0
    );
    assert_eq!(fallback_score(None, "sofa"), 1);
    assert_eq!(fallback_score(Some("not sure"), "sofa"), 2);
    assert_eq!(fallback_score(Some("by the Sofa wall"), "sofa"), 4);
    pass(5, "success rate, SPL, score mapping, and combined-metric golden values");
}

// ---------------------------------------------------------------------------
// criterion 6: oracle sweep over generated mazes, deterministic logs

fn question(label: &str) -> QuestionSpec {
    QuestionSpec {
        question_id: "q0".into(),
        text: format!("where is the {label}?"),
        target_label: label.into(),
        category: "object".into(),
        map_index: 0,
        ground_truth: None,
        paraphrases: Vec::new(),
    }
}

#[test]
fn criterion_6_oracle_maze_sweep() {
    let started = Instant::now();
    let docs = gen_maps(MapStyle::Maze, 20, 15, 0, "sofa").unwrap();
    let mut cfg = RunConfig::default();
    cfg.policy = PolicyKind::Oracle;
    cfg.replay = false;
    cfg.working_memory = false;
    // tau_min = 1 makes frontier exploration complete: single-cell pockets
    // (score 1) would otherwise never attract a frontier visit
    cfg.tau_min = 1;
    let lib = ExperienceLibrary::new();
    let emb = MockEmbedder::new(0);
    let q = question("sofa");
    for (i, doc) in docs.iter().enumerate() {
        let map = load_map(doc).unwrap();
        let a = run_episode(&map, &q, &cfg, &lib, &HintMock, &emb, i as u64).unwrap();
        assert_eq!(a.outcome, Outcome::Pass, "maze {i} not solved");
        assert!(a.decisions <= 50, "maze {i} used {} decisions", a.decisions);
        let b = run_episode(&map, &q, &cfg, &lib, &HintMock, &emb, i as u64).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "maze {i} log not byte-identical on rerun"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget is 30s");
    pass(6, "oracle solves 20 seeded mazes in budget with byte-identical logs");
}

// ---------------------------------------------------------------------------
// criterion 7: replay efficacy with the hint-following mock

fn spl_of(outcome: Outcome, g: u64, p: u64) -> f64 {
    match outcome {
        Outcome::Fail => 0.0,
        Outcome::Pass => {
            if g == 0 && p == 0 {
                1.0
            } else {
                g as f64 / g.max(p) as f64
            }
        }
    }
}

#[test]
fn criterion_7_replay_improves_spl() {
    let emb = MockEmbedder::new(0);
    let mut wins = 0usize;
    for seed in 0..50u64 {
        let doc = gen_map(MapStyle::Rooms, 21, 1000 + seed, "sofa").unwrap();
        let map = load_map(&doc).unwrap();
        let q = question("sofa");

        // build the experience set from an oracle rollout on this map
        let mut build_cfg = RunConfig::default();
        build_cfg.policy = PolicyKind::Oracle;
        build_cfg.replay = false;
        build_cfg.working_memory = false;
        build_cfg.tau_min = 1;
        build_cfg.questions = vec![q.clone()];
        build_cfg.maps = vec!["<inline>".into()];
        build_cfg.seed = seed;
        let lib =
            build_experience_with(std::slice::from_ref(&map), &build_cfg, &HintMock, &emb)
                .unwrap();
        assert_eq!(lib.len(), 1, "seed {seed}: rollout produced no experience");

        let mut eval_cfg = RunConfig::default();
        eval_cfg.policy = PolicyKind::Hierarchical;
        eval_cfg.working_memory = false;
        eval_cfg.tau_min = 1;
        // short sensing plus a generous decision budget makes the directional
        // prior matter: undirected sweeps pay for every wasted detour
        eval_cfg.sensing.range_cells = 8;
        eval_cfg.max_steps = 100;
        eval_cfg.replay = true;
        let with = run_episode(&map, &q, &eval_cfg, &lib, &HintMock, &emb, seed).unwrap();
        eval_cfg.replay = false;
        let without = run_episode(&map, &q, &eval_cfg, &lib, &HintMock, &emb, seed).unwrap();

        let spl_with = spl_of(with.outcome, with.oracle_steps, with.executed_steps);
        let spl_without = spl_of(without.outcome, without.oracle_steps, without.executed_steps);
        if spl_with > spl_without {
            wins += 1;
        }
    }
    assert!(wins >= 40, "replay won on only {wins}/50 seeds (need 40)");
    pass(7, "replay yields strictly higher SPL on >=80% of 50 seeds");
}

// ---------------------------------------------------------------------------
// criterion 8: reflection grammar

#[test]
fn criterion_8_reflection_grammar() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for case in 0..100 {
        let a = Abstraction {
            blocks: (0..5)
                .map(|i| format!("block {i} content with noise {}", rng.gen_range(0..1000u32)))
                .collect(),
            paragraph: format!("paragraph {case} with non-ASCII cue: диван/沙发."),
        };
        let doc = render_reflection(&a);
        let parsed = parse_reflection(&doc).unwrap_or_else(|e| panic!("case {case}: {e}"));
        assert_eq!(parsed, a);
    }
    // deleting any single block must fail the parse
    let a = Abstraction {
        blocks: (0..5).map(|i| format!("block {i} body")).collect(),
        paragraph: "final paragraph".into(),
    };
    let doc = render_reflection(&a);
    for i in 0..5 {
        let needle = doc
            .lines()
            .find(|l| l.starts_with(&format!("Step {i} ")))
            .unwrap()
            .to_string();
        let broken = doc.replace(&format!("{needle}\n"), "");
        assert!(
            parse_reflection(&broken).is_err(),
            "deleting block {i} still parsed"
        );
    }
    pass(8, "100 well-formed reflections parse; every single-block deletion is rejected");
}

// ---------------------------------------------------------------------------
// criterion 9: experience library JSONL round trip

#[test]
fn criterion_9_library_jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let non_ascii = ["sofá", "диван", "沙发", "Küchentisch", "☕ corner"];
    for case in 0..100 {
        let mut lib = ExperienceLibrary::new();
        for t in 0..rng.gen_range(1..=8usize) {
            let cue = non_ascii[rng.gen_range(0..non_ascii.len())];
            lib.add(LibraryEntry {
                trajectory_id: format!("traj-{case}-{t}"),
                question: format!("where is the {cue}?"),
                outcome: if rng.gen_bool(0.7) { Outcome::Pass } else { Outcome::Fail },
                abstraction: Abstraction {
                    blocks: (0..5).map(|i| format!("block {i}: near the {cue}")).collect(),
                    paragraph: format!("head toward the {cue} with \"quotes\" and\nnewlines."),
                },
                snapshots: (0..rng.gen_range(1..=4usize))
                    .map(|s| StoredSnapshot {
                        step: s,
                        theta_rad: rng.gen_range(-3.14..3.14),
                        labels: vec![cue.to_string()],
                        text_render: format!("view {s}\nlabels: {cue}\n"),
                    })
                    .collect(),
            })
            .unwrap();
        }
        let path = dir.path().join(format!("lib_{case}.jsonl"));
        lib.save(&path).unwrap();
        let loaded = ExperienceLibrary::load(&path).unwrap();
        assert_eq!(loaded, lib, "case {case}: round trip mismatch");
    }
    pass(9, "100 randomized libraries round-trip through JSONL including non-ASCII");
}
