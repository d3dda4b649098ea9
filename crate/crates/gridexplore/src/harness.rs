//! End-to-end orchestration: seeded map generation, the exploration episode
//! loop, experience-set construction, suite evaluation, and ablations.

use std::collections::HashSet;
use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experience::{
    chunk_trajectory, reflect_and_abstract, summarize_trajectory, verbalize_chunk,
    ExperienceError, ExperienceLibrary, LibraryEntry, Outcome, StepRecord, StoredSnapshot,
    TrajectoryLog, DEFAULT_CHUNK_LEN,
};
use crate::hierarchy::{
    build_hierarchy, render_snapshot, HierarchyError, Snapshot, DEFAULT_TAU_SIZE0,
    DEFAULT_TAU_SIZE1,
};
use crate::mapping::{MappingError, OccupancyMap, DEFAULT_TAU_MAX, DEFAULT_TAU_MIN};
use crate::metrics::{
    compute_report, fallback_score, grade_answer, EpisodeResult, MetricsError, MetricsReport,
};
use crate::policy::{
    hierarchical_select, listwise_select, pairwise_select, pointwise_select,
    scripted_oracle_select, PolicyError,
};
use crate::retrieval::{
    build_working_memory, recall, Embedder, HttpEmbedder, MockEmbedder, ReplayContext,
    ReplayEntry, RetrievalError, DEFAULT_RECALL_TOP_K, DEFAULT_RRF_K, DEFAULT_SCENE_TOP_M,
};
use crate::sim::{
    load_map, plan_path, step_to, AgentPose, Cell, GridMap, MapError, PlanError, SensorParams,
    StepOutcome,
};
use crate::textgen::{
    GenError, GenParams, HintMock, HttpTextGen, MockGen, TextGenClient,
};

pub const DEFAULT_MAX_STEPS: usize = 50;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Experience(#[from] ExperienceError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code the CLI maps this error to: 2 for configuration
    /// problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Map(_) | HarnessError::Json(_) => 2,
            _ => 3,
        }
    }
}

// ---------------------------------------------------------------------------
// map generation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapStyle {
    Maze,
    Rooms,
}

impl std::str::FromStr for MapStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maze" => Ok(MapStyle::Maze),
            "rooms" => Ok(MapStyle::Rooms),
            other => Err(format!("unknown map style {other:?} (expected maze|rooms)")),
        }
    }
}

/// Free cell farthest from `from` without exceeding `cap` (so a directed
/// policy can reach it inside the decision budget). Ties break on (y, x).
fn farthest_free(grid: &[Vec<char>], from: (usize, usize), cap: usize) -> (usize, usize) {
    let h = grid.len();
    let w = grid[0].len();
    let mut dist = vec![vec![usize::MAX; w]; h];
    let mut queue = VecDeque::new();
    dist[from.1][from.0] = 0;
    queue.push_back(from);
    let mut best = (from, 0usize);
    let free_degree = |x: usize, y: usize| {
        [(x, y.wrapping_sub(1)), (x.wrapping_sub(1), y), (x + 1, y), (x, y + 1)]
            .into_iter()
            .filter(|&(nx, ny)| nx < w && ny < h && grid[ny][nx] == '.')
            .count()
    };
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[y][x];
        // skip dead ends: a target tucked into a one-cell pocket can stay
        // below the minimum frontier score and never be observed
        let eligible = (x, y) == from || free_degree(x, y) >= 2;
        if eligible
            && d <= cap
            && (d > best.1 || (d == best.1 && (y, x) < (best.0 .1, best.0 .0)))
        {
            best = ((x, y), d);
        }
        let neighbors =
            [(x, y.wrapping_sub(1)), (x.wrapping_sub(1), y), (x + 1, y), (x, y + 1)];
        for (nx, ny) in neighbors {
            if nx < w && ny < h && grid[ny][nx] == '.' && dist[ny][nx] == usize::MAX {
                dist[ny][nx] = d + 1;
                queue.push_back((nx, ny));
            }
        }
    }
    best.0
}

fn connected_free(grid: &[Vec<char>], from: (usize, usize)) -> bool {
    let h = grid.len();
    let w = grid[0].len();
    if grid[from.1][from.0] != '.' {
        return false;
    }
    let total = grid.iter().flatten().filter(|c| **c == '.').count();
    let mut seen = vec![vec![false; w]; h];
    let mut queue = VecDeque::new();
    seen[from.1][from.0] = true;
    queue.push_back(from);
    let mut reached = 0usize;
    while let Some((x, y)) = queue.pop_front() {
        reached += 1;
        let neighbors =
            [(x, y.wrapping_sub(1)), (x.wrapping_sub(1), y), (x + 1, y), (x, y + 1)];
        for (nx, ny) in neighbors {
            if nx < w && ny < h && grid[ny][nx] == '.' && !seen[ny][nx] {
                seen[ny][nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    reached == total
}

fn maze_grid(size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<char>> {
    let mut grid = vec![vec!['#'; size]; size];
    // lattice nodes at even coordinates, carved by iterative backtracking
    let mut stack = vec![(0usize, 0usize)];
    grid[0][0] = '.';
    while let Some(&(x, y)) = stack.last() {
        let mut dirs: Vec<(i64, i64)> = vec![(0, -2), (-2, 0), (2, 0), (0, 2)];
        dirs.shuffle(rng);
        let mut advanced = false;
        for (dx, dy) in dirs {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= size as i64 || ny >= size as i64 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if grid[ny][nx] == '#' {
                grid[(y + ny) / 2][(x + nx) / 2] = '.';
                grid[ny][nx] = '.';
                stack.push((nx, ny));
                advanced = true;
                break;
            }
        }
        if !advanced {
            stack.pop();
        }
    }
    grid
}

fn rooms_grid(size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<char>> {
    use rand::Rng;
    let mut grid = vec![vec!['.'; size]; size];
    for _ in 0..size * 2 {
        let bw = rng.gen_range(1..=3usize);
        let bh = rng.gen_range(1..=3usize);
        if bw >= size || bh >= size {
            continue;
        }
        let bx = rng.gen_range(0..size - bw);
        let by = rng.gen_range(0..size - bh);
        if bx == 0 && by == 0 {
            continue; // keep the start corner open
        }
        let before = grid.clone();
        for y in by..by + bh {
            for x in bx..bx + bw {
                grid[y][x] = '#';
            }
        }
        if grid[0][0] != '.' || !connected_free(&grid, (0, 0)) {
            grid = before;
        }
    }
    grid
}

/// Generate one map document: seeded layout, single connected free region,
/// target label planted at the free cell farthest from the start corner.
pub fn gen_map(style: MapStyle, size: usize, seed: u64, label: &str) -> Result<String, HarnessError> {
    if size < 5 {
        return Err(HarnessError::Config(format!("map size {size} too small (minimum 5)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = match style {
        MapStyle::Maze => maze_grid(size, &mut rng),
        MapStyle::Rooms => rooms_grid(size, &mut rng),
    };
    let (tx, ty) = farthest_free(&grid, (0, 0), 3 * size);
    if (tx, ty) == (0, 0) {
        return Err(HarnessError::Config("degenerate map: start is the only free cell".into()));
    }
    let mut doc = format!("{size} {size} 0.1\n");
    for row in &grid {
        doc.push_str(&row.iter().collect::<String>());
        doc.push('\n');
    }
    doc.push_str(&format!("label {tx} {ty} {label}\n"));
    Ok(doc)
}

/// Generate `count` map documents with seeds `seed..seed+count`.
pub fn gen_maps(
    style: MapStyle,
    count: usize,
    size: usize,
    seed: u64,
    label: &str,
) -> Result<Vec<String>, HarnessError> {
    (0..count).map(|i| gen_map(style, size, seed.wrapping_add(i as u64), label)).collect()
}

/// Write generated maps into `dir` as `{style}_{index:03}.map`.
pub fn write_maps(
    dir: &Path,
    style: MapStyle,
    count: usize,
    size: usize,
    seed: u64,
    label: &str,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let docs = gen_maps(style, count, size, seed, label)?;
    let style_name = match style {
        MapStyle::Maze => "maze",
        MapStyle::Rooms => "rooms",
    };
    let mut paths = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        let path = dir.join(format!("{style_name}_{i:03}.map"));
        std::fs::write(&path, doc)?;
        paths.push(path);
    }
    Ok(paths)
}

// ---------------------------------------------------------------------------
// run configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Hierarchical,
    Listwise,
    Pointwise,
    Pairwise,
    Oracle,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hierarchical" => Ok(PolicyKind::Hierarchical),
            "listwise" => Ok(PolicyKind::Listwise),
            "pointwise" => Ok(PolicyKind::Pointwise),
            "pairwise" => Ok(PolicyKind::Pairwise),
            "oracle" => Ok(PolicyKind::Oracle),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

/// How to construct a text-generation client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClientSpec {
    /// Scripted mock loaded from a JSON script file.
    MockScript { path: String },
    /// Deterministic hint-following mock (pure function of the prompt).
    Hint,
    /// Mock that answers every prompt with a fixed string.
    Fixed { text: String },
    /// Remote service speaking the generation JSON contract.
    Http { url: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbedderSpec {
    Mock { seed: u64 },
    Http { url: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub question_id: String,
    pub text: String,
    pub target_label: String,
    #[serde(default = "default_category")]
    pub category: String,
    #[serde(default)]
    pub map_index: usize,
    #[serde(default)]
    pub ground_truth: Option<String>,
    #[serde(default)]
    pub paraphrases: Vec<String>,
}

fn default_category() -> String {
    "object".to_string()
}

fn default_policy() -> PolicyKind {
    PolicyKind::Hierarchical
}
fn default_true() -> bool {
    true
}
fn d_top_k() -> usize {
    DEFAULT_RECALL_TOP_K
}
fn d_top_m() -> usize {
    DEFAULT_SCENE_TOP_M
}
fn d_rrf() -> f64 {
    DEFAULT_RRF_K
}
fn d_tau_min() -> u8 {
    DEFAULT_TAU_MIN
}
fn d_tau_max() -> u8 {
    DEFAULT_TAU_MAX
}
fn d_tau_size0() -> usize {
    DEFAULT_TAU_SIZE0
}
fn d_tau_size1() -> usize {
    DEFAULT_TAU_SIZE1
}
fn d_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn d_textgen() -> ClientSpec {
    ClientSpec::Hint
}
fn d_embedder() -> EmbedderSpec {
    EmbedderSpec::Mock { seed: 0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Map document paths; questions refer into this list by index.
    #[serde(default)]
    pub maps: Vec<String>,
    #[serde(default)]
    pub questions: Vec<QuestionSpec>,
    #[serde(default = "default_policy")]
    pub policy: PolicyKind,
    #[serde(default = "default_true")]
    pub replay: bool,
    #[serde(default = "default_true")]
    pub working_memory: bool,
    #[serde(default = "d_top_k")]
    pub recall_top_k: usize,
    #[serde(default = "d_top_m")]
    pub scene_top_m: usize,
    #[serde(default = "d_rrf")]
    pub rrf_k: f64,
    #[serde(default = "d_tau_min")]
    pub tau_min: u8,
    #[serde(default = "d_tau_max")]
    pub tau_max: u8,
    #[serde(default = "d_tau_size0")]
    pub tau_size0: usize,
    #[serde(default = "d_tau_size1")]
    pub tau_size1: usize,
    /// Per-episode decision budget.
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sensing: SensorParams,
    #[serde(default)]
    pub gen_params: GenParams,
    #[serde(default = "d_textgen")]
    pub textgen: ClientSpec,
    #[serde(default = "d_embedder")]
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub judge: Option<ClientSpec>,
    /// Experience library consulted when `replay` is on.
    #[serde(default)]
    pub library_path: Option<String>,
    /// Start cell in document coordinates; defaults to the first free cell.
    #[serde(default)]
    pub start: Option<(i32, i32)>,
    /// Attach an occupancy layer dump ("seen"|"free"|"occupied") to each log.
    #[serde(default)]
    pub dump_occupancy: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_steps < 1 {
            return Err(HarnessError::Config("max_steps must be at least 1".into()));
        }
        if self.recall_top_k < 1 || self.scene_top_m < 1 {
            return Err(HarnessError::Config(
                "recall_top_k and scene_top_m must be at least 1".into(),
            ));
        }
        if !(self.rrf_k > 0.0) {
            return Err(HarnessError::Config("rrf_k must be positive".into()));
        }
        if self.tau_min < 1 || self.tau_min > self.tau_max || self.tau_max > 9 {
            return Err(HarnessError::Config(format!(
                "frontier thresholds out of range: [{}, {}]",
                self.tau_min, self.tau_max
            )));
        }
        if let Some(layer) = &self.dump_occupancy {
            parse_layer(layer)?;
        }
        for q in &self.questions {
            if q.map_index >= self.maps.len() {
                return Err(HarnessError::Config(format!(
                    "question {} refers to map index {} but only {} maps are configured",
                    q.question_id,
                    q.map_index,
                    self.maps.len()
                )));
            }
        }
        Ok(())
    }
}

fn parse_layer(name: &str) -> Result<crate::mapping::Layer, HarnessError> {
    match name {
        "seen" => Ok(crate::mapping::Layer::Seen),
        "free" => Ok(crate::mapping::Layer::Free),
        "occupied" => Ok(crate::mapping::Layer::Occupied),
        other => Err(HarnessError::Config(format!(
            "unknown occupancy layer {other:?} (expected seen|free|occupied)"
        ))),
    }
}

pub fn build_textgen(spec: &ClientSpec) -> Result<Box<dyn TextGenClient>, HarnessError> {
    Ok(match spec {
        ClientSpec::MockScript { path } => Box::new(MockGen::from_script_file(Path::new(path))?),
        ClientSpec::Hint => Box::new(HintMock),
        ClientSpec::Fixed { text } => Box::new(MockGen::fixed(text)),
        ClientSpec::Http { url } => Box::new(HttpTextGen::new(url)),
    })
}

pub fn build_embedder(spec: &EmbedderSpec) -> Result<Box<dyn Embedder>, HarnessError> {
    Ok(match spec {
        EmbedderSpec::Mock { seed } => Box::new(MockEmbedder::new(*seed)),
        EmbedderSpec::Http { url } => Box::new(HttpEmbedder { url: url.clone() }),
    })
}

// ---------------------------------------------------------------------------
// episode loop

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub question_id: String,
    pub question: String,
    pub target_label: String,
    pub start: Cell,
    pub outcome: Outcome,
    pub answer: Option<String>,
    /// Frontier decisions consumed (budget unit).
    pub decisions: usize,
    /// Cells actually traversed.
    pub executed_steps: u64,
    /// Shortest-path length from start to the target region on the true map.
    pub oracle_steps: u64,
    pub steps: Vec<StepRecord>,
    pub fallback_events: Vec<String>,
    pub recall_traces: Vec<Vec<ReplayEntry>>,
    pub occupancy_dump: Option<String>,
}

fn start_cell(map: &GridMap, cfg: &RunConfig) -> Result<Cell, HarnessError> {
    match cfg.start {
        Some((x, y)) => {
            let c = Cell::new(x + 1, y + 1); // document -> padded coordinates
            if !map.is_free(c) {
                return Err(HarnessError::Config(format!(
                    "start cell ({x}, {y}) is not a free cell"
                )));
            }
            Ok(c)
        }
        None => map
            .free_cells()
            .first()
            .copied()
            .ok_or_else(|| HarnessError::Config("map has no free cells".into())),
    }
}

/// Shortest distance over the true free cells from `start` to any cell of
/// the target region (a labeled cell or a free 4-neighbor of one).
fn oracle_distance(map: &GridMap, start: Cell, label: &str) -> Option<u64> {
    let mut goals: HashSet<Cell> = HashSet::new();
    for l in map.cells_with_label(label) {
        goals.insert(l);
        for n in l.neighbors4() {
            if map.is_free(n) {
                goals.insert(n);
            }
        }
    }
    if goals.is_empty() {
        return None;
    }
    let free: HashSet<Cell> = map.free_cells().into_iter().collect();
    if !free.contains(&start) {
        return None;
    }
    let mut dist = std::collections::HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(start, 0u64);
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        let d = dist[&cur];
        if goals.contains(&cur) {
            return Some(d);
        }
        for n in cur.neighbors4() {
            if free.contains(&n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    None
}

/// If a target-labeled cell is already seen and a cell of its region is
/// reachable over known free space, return the shortest plan to it together
/// with the labeled cell.
fn answer_plan(
    map: &GridMap,
    occ: &OccupancyMap,
    pose: Cell,
    known_free: &HashSet<Cell>,
    label: &str,
) -> Option<(crate::sim::Path, Cell)> {
    let mut best: Option<(crate::sim::Path, Cell)> = None;
    for l in map.cells_with_label(label) {
        if !occ.is_seen(l) {
            continue;
        }
        let mut goals = vec![l];
        goals.extend(l.neighbors4());
        for g in goals {
            if !known_free.contains(&g) {
                continue;
            }
            if let Ok(path) = plan_path(known_free, pose, g) {
                let better = match &best {
                    None => true,
                    Some((b, _)) => path.len_steps() < b.len_steps(),
                };
                if better {
                    best = Some((path, l));
                }
            }
        }
    }
    best
}

fn doc_coords(c: Cell) -> (i32, i32) {
    (c.x - 1, c.y - 1)
}

struct SnapshotCache {
    entries: Vec<(u64, Snapshot)>,
}

impl SnapshotCache {
    fn get(&self, theta: f64) -> Option<&Snapshot> {
        self.entries.iter().find(|(t, _)| *t == theta.to_bits()).map(|(_, s)| s)
    }
}

/// Run one exploration episode. The budget counts frontier decisions; the
/// executed path length accumulates actual cell moves.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    map: &GridMap,
    question: &QuestionSpec,
    cfg: &RunConfig,
    library: &ExperienceLibrary,
    textgen: &dyn TextGenClient,
    embedder: &dyn Embedder,
    episode_seed: u64,
) -> Result<EpisodeLog, HarnessError> {
    if map.cells_with_label(&question.target_label).is_empty() {
        return Err(HarnessError::Config(format!(
            "target label {:?} not present in the map",
            question.target_label
        )));
    }
    let start = start_cell(map, cfg)?;
    let oracle_steps = oracle_distance(map, start, &question.target_label).ok_or_else(|| {
        HarnessError::Config(format!(
            "target label {:?} unreachable from the start cell",
            question.target_label
        ))
    })?;

    let mut occ = OccupancyMap::new(map.width, map.height);
    let mut pose = AgentPose { cell: start, heading: 0.0 };
    survey_turn(map, &mut occ, pose, &cfg.sensing)?;
    let mut surveyed: HashSet<Cell> = HashSet::new();
    surveyed.insert(start);

    let mut steps: Vec<StepRecord> = Vec::new();
    let mut wm_history: Vec<Snapshot> = Vec::new();
    let mut fallback_events: Vec<String> = Vec::new();
    let mut recall_traces: Vec<Vec<ReplayEntry>> = Vec::new();
    let mut decisions = 0usize;
    let mut executed: u64 = 0;
    let mut outcome = Outcome::Fail;
    let mut answer: Option<String> = None;

    loop {
        let known_free = occ.known_free();

        // answer as soon as the target region is seen and reachable
        if let Some((path, label_cell)) =
            answer_plan(map, &occ, pose.cell, &known_free, &question.target_label)
        {
            let goal = path.goal();
            let (new_pose, obs, moved, step_outcome) =
                step_to(map, pose, &known_free, goal, &cfg.sensing)?;
            for o in &obs {
                occ.integrate_observation(o)?;
            }
            executed += moved as u64;
            pose = new_pose;
            if let StepOutcome::Replan { blocked_at } = step_outcome {
                fallback_events.push(format!("approach blocked at {blocked_at}"));
                continue;
            }
            let (dx, dy) = doc_coords(label_cell);
            let hint_bearing = if label_cell == start {
                0.0
            } else {
                start.bearing_to(label_cell)
            };
            let theta = if label_cell == pose.cell {
                pose.heading
            } else {
                pose.cell.bearing_to(label_cell)
            };
            let snapshot = render_snapshot(map, &occ, pose.cell, theta, &cfg.sensing);
            let (px, py) = doc_coords(pose.cell);
            steps.push(StepRecord {
                t: steps.len(),
                text: format!(
                    "reached the {} at ({dx}, {dy}) from ({px}, {py}); \
                     target bearing {:.1} deg from start",
                    question.target_label,
                    hint_bearing.to_degrees()
                ),
                theta,
                cell: pose.cell,
                snapshot,
            });
            answer = Some(format!("the {} is at ({dx}, {dy})", question.target_label));
            outcome = Outcome::Pass;
            break;
        }

        if decisions >= cfg.max_steps {
            break;
        }

        let mut frontiers = occ.extract_frontiers(pose.cell, cfg.tau_min, cfg.tau_max)?;
        // a cell the agent has already surveyed from cannot yield anything
        // new even if occluded pockets keep its frontier score in range
        frontiers.retain(|f| !surveyed.contains(&f.cell));
        if frontiers.is_empty() {
            break;
        }
        let decision_seed = episode_seed.wrapping_add(decisions as u64);

        let (target, theta, chosen_snapshot) = match cfg.policy {
            PolicyKind::Hierarchical => {
                let hier = build_hierarchy(
                    &frontiers,
                    pose.cell,
                    pose.heading,
                    decision_seed,
                    cfg.tau_size0,
                    cfg.tau_size1,
                )
                .expect("frontier set is nonempty");

                let mut cache = SnapshotCache { entries: Vec::new() };
                let mut thetas: Vec<f64> = Vec::new();
                for b in &hier.bvfs {
                    thetas.push(b.theta);
                    for c in &b.children {
                        thetas.push(c.theta);
                    }
                }
                for th in thetas {
                    if cache.get(th).is_none() {
                        let snap = render_snapshot(map, &occ, pose.cell, th, &cfg.sensing);
                        occ.integrate_observation(&snapshot_observation(&snap, pose, cfg))?;
                        cache.entries.push((th.to_bits(), snap));
                    }
                }
                let bvf_snaps: Vec<Snapshot> = hier
                    .bvfs
                    .iter()
                    .map(|b| cache.get(b.theta).expect("pre-rendered").clone())
                    .collect();

                let ego = render_snapshot(map, &occ, pose.cell, pose.heading, &cfg.sensing);
                let wm = decision_context_wm(cfg, &wm_history, textgen);
                let replay = decision_context_replay(
                    cfg,
                    library,
                    &bvf_snaps,
                    &question.text,
                    embedder,
                    &mut recall_traces,
                )?;

                let render = |th: f64| -> Snapshot {
                    cache
                        .get(th)
                        .cloned()
                        .unwrap_or_else(|| render_snapshot(map, &occ, pose.cell, th, &cfg.sensing))
                };
                let choice = hierarchical_select(
                    &hier,
                    &question.text,
                    Some(&ego.text_render),
                    wm.as_deref(),
                    replay.as_ref(),
                    &render,
                    textgen,
                    &cfg.gen_params,
                )?;
                for f in &choice.fallbacks {
                    fallback_events.push(format!("decision {decisions}: {f}"));
                }
                let snap = render(choice.theta);
                (choice.target, choice.theta, snap)
            }
            PolicyKind::Listwise | PolicyKind::Pointwise | PolicyKind::Pairwise
            | PolicyKind::Oracle => {
                let cells: Vec<Cell> = frontiers.iter().map(|f| f.cell).collect();
                let mut snaps: Vec<Snapshot> = Vec::with_capacity(cells.len());
                for c in &cells {
                    let th = if *c == pose.cell { 0.0 } else { pose.cell.bearing_to(*c) };
                    let snap = render_snapshot(map, &occ, pose.cell, th, &cfg.sensing);
                    occ.integrate_observation(&snapshot_observation(&snap, pose, cfg))?;
                    snaps.push(snap);
                }
                let wm = decision_context_wm(cfg, &wm_history, textgen);
                let replay = decision_context_replay(
                    cfg,
                    library,
                    &snaps,
                    &question.text,
                    embedder,
                    &mut recall_traces,
                )?;
                let idx = match cfg.policy {
                    PolicyKind::Listwise => listwise_select(
                        &question.text,
                        &snaps,
                        wm.as_deref(),
                        replay.as_ref(),
                        textgen,
                        &cfg.gen_params,
                    ),
                    PolicyKind::Pointwise => pointwise_select(
                        &question.text,
                        &snaps,
                        wm.as_deref(),
                        replay.as_ref(),
                        textgen,
                        &cfg.gen_params,
                    ),
                    PolicyKind::Pairwise => pairwise_select(
                        &question.text,
                        &snaps,
                        wm.as_deref(),
                        replay.as_ref(),
                        textgen,
                        &cfg.gen_params,
                    ),
                    PolicyKind::Oracle => {
                        scripted_oracle_select(&cells, map, &question.target_label)?
                    }
                    PolicyKind::Hierarchical => unreachable!(),
                };
                (cells[idx], snaps[idx].theta, snaps[idx].clone())
            }
        };

        let known_free = occ.known_free();
        let (new_pose, obs, moved, step_outcome) =
            step_to(map, pose, &known_free, target, &cfg.sensing)?;
        for o in &obs {
            occ.integrate_observation(o)?;
        }
        executed += moved as u64;
        pose = new_pose;
        if moved == 0 {
            pose.heading = theta; // reorient in place toward the chosen direction
        }
        // look around at the waypoint so the reached cell stops qualifying
        // as a frontier
        survey_turn(map, &mut occ, pose, &cfg.sensing)?;
        surveyed.insert(pose.cell);
        if let StepOutcome::Replan { blocked_at } = step_outcome {
            fallback_events.push(format!("decision {decisions}: motion blocked at {blocked_at}"));
        }
        decisions += 1;

        let (px, py) = doc_coords(pose.cell);
        let labels = chosen_snapshot.visible_labels.join(", ");
        steps.push(StepRecord {
            t: steps.len(),
            text: format!(
                "moved {moved} cells toward bearing {:.1} deg, now at ({px}, {py}); visible: {labels}",
                theta.to_degrees()
            ),
            theta,
            cell: pose.cell,
            snapshot: chosen_snapshot.clone(),
        });
        wm_history.push(chosen_snapshot);
    }

    let occupancy_dump = match &cfg.dump_occupancy {
        Some(layer) => Some(occ.dump_layer(parse_layer(layer)?)),
        None => None,
    };

    Ok(EpisodeLog {
        question_id: question.question_id.clone(),
        question: question.text.clone(),
        target_label: question.target_label.clone(),
        start,
        outcome,
        answer,
        decisions,
        executed_steps: executed,
        oracle_steps,
        steps,
        fallback_events,
        recall_traces,
        occupancy_dump,
    })
}

/// Rotate in place: three cone observations a third of a turn apart, which
/// covers the full surround for any field of view of 120 degrees or more.
fn survey_turn(
    map: &GridMap,
    occ: &mut OccupancyMap,
    pose: AgentPose,
    sensing: &SensorParams,
) -> Result<(), HarnessError> {
    let third = 2.0 * std::f64::consts::PI / 3.0;
    for k in 0..3 {
        let heading = crate::sim::wrap_angle(pose.heading + k as f64 * third);
        let obs = crate::sim::cast_rays(
            map,
            AgentPose { cell: pose.cell, heading },
            sensing.fov_rad,
            sensing.range_cells,
        );
        occ.integrate_observation(&obs)?;
    }
    Ok(())
}

fn snapshot_observation(
    snap: &Snapshot,
    pose: AgentPose,
    cfg: &RunConfig,
) -> crate::sim::Observation {
    crate::sim::Observation {
        visible: snap.visible.clone(),
        origin: AgentPose { cell: pose.cell, heading: snap.theta },
        fov_rad: cfg.sensing.fov_rad,
        range_cells: cfg.sensing.range_cells,
    }
}

fn decision_context_wm(
    cfg: &RunConfig,
    wm_history: &[Snapshot],
    textgen: &dyn TextGenClient,
) -> Option<String> {
    if !cfg.working_memory || wm_history.is_empty() {
        return None;
    }
    let wm = build_working_memory(wm_history, textgen, &cfg.gen_params);
    if wm.is_empty() {
        None
    } else {
        Some(wm)
    }
}

fn decision_context_replay(
    cfg: &RunConfig,
    library: &ExperienceLibrary,
    candidates: &[Snapshot],
    question: &str,
    embedder: &dyn Embedder,
    recall_traces: &mut Vec<Vec<ReplayEntry>>,
) -> Result<Option<ReplayContext>, HarnessError> {
    if !cfg.replay || library.is_empty() {
        return Ok(None);
    }
    let ctx = recall(
        candidates,
        question,
        library,
        embedder,
        cfg.scene_top_m,
        cfg.recall_top_k,
        cfg.rrf_k,
    )?;
    recall_traces.push(ctx.entries.clone());
    Ok(Some(ctx))
}

// ---------------------------------------------------------------------------
// suite evaluation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutput {
    pub logs: Vec<EpisodeLog>,
    pub report: MetricsReport,
}

fn result_from_log(
    map: &GridMap,
    question: &QuestionSpec,
    log: &EpisodeLog,
    judge: Option<&dyn TextGenClient>,
    params: &GenParams,
) -> EpisodeResult {
    let valid = log.answer.as_deref().map(|a| !a.trim().is_empty()).unwrap_or(false);
    let judge_score = match (judge, &log.answer) {
        (Some(j), Some(pred)) if valid => {
            let ground_truth = question.ground_truth.clone().unwrap_or_else(|| {
                let cells = map.cells_with_label(&question.target_label);
                let (x, y) = doc_coords(cells[0]);
                format!("the {} is at ({x}, {y})", question.target_label)
            });
            match grade_answer(&question.text, &ground_truth, pred, &question.paraphrases, j, params)
            {
                Ok(s) => Some(s),
                Err(e) => {
                    log::warn!("grading failed for {}: {e}", question.question_id);
                    None
                }
            }
        }
        _ => None,
    };
    EpisodeResult {
        question_id: question.question_id.clone(),
        category: question.category.clone(),
        g: log.oracle_steps,
        p: if valid { Some(log.executed_steps) } else { None },
        answer: log.answer.clone(),
        valid,
        judge_score,
        fallback_score: fallback_score(log.answer.as_deref(), &question.target_label),
    }
}

/// Core suite loop over pre-loaded maps and pre-built clients.
#[allow(clippy::too_many_arguments)]
pub fn run_suite_with(
    maps: &[GridMap],
    cfg: &RunConfig,
    library: &ExperienceLibrary,
    textgen: &dyn TextGenClient,
    embedder: &dyn Embedder,
    judge: Option<&dyn TextGenClient>,
) -> Result<SuiteOutput, HarnessError> {
    if cfg.questions.is_empty() {
        return Err(HarnessError::Config("no questions configured".into()));
    }
    let mut logs = Vec::new();
    let mut results = Vec::new();
    for (qidx, q) in cfg.questions.iter().enumerate() {
        let map = maps.get(q.map_index).ok_or_else(|| {
            HarnessError::Config(format!("question {} map index out of range", q.question_id))
        })?;
        let episode_seed = cfg.seed.wrapping_add(qidx as u64 * 7919);
        let log = run_episode(map, q, cfg, library, textgen, embedder, episode_seed)?;
        results.push(result_from_log(map, q, &log, judge, &cfg.gen_params));
        logs.push(log);
    }
    let report = compute_report(&results)?;
    Ok(SuiteOutput { logs, report })
}

fn load_maps(cfg: &RunConfig) -> Result<Vec<GridMap>, HarnessError> {
    let mut maps = Vec::new();
    for path in &cfg.maps {
        let text = std::fs::read_to_string(path)?;
        maps.push(load_map(&text)?);
    }
    Ok(maps)
}

fn load_library(cfg: &RunConfig) -> Result<ExperienceLibrary, HarnessError> {
    match (&cfg.library_path, cfg.replay) {
        (Some(path), true) => Ok(ExperienceLibrary::load(Path::new(path))?),
        _ => Ok(ExperienceLibrary::new()),
    }
}

/// Load everything from the config and evaluate the full question suite.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteOutput, HarnessError> {
    cfg.validate()?;
    let maps = load_maps(cfg)?;
    let library = load_library(cfg)?;
    let textgen = build_textgen(&cfg.textgen)?;
    let embedder = build_embedder(&cfg.embedder)?;
    let judge = match &cfg.judge {
        Some(spec) => Some(build_textgen(spec)?),
        None => None,
    };
    run_suite_with(
        &maps,
        cfg,
        &library,
        textgen.as_ref(),
        embedder.as_ref(),
        judge.as_deref(),
    )
}

// ---------------------------------------------------------------------------
// experience-set construction

/// Roll out every question with replay disabled, verbalize and reflect on
/// each trajectory, and collect well-formed abstractions into a library.
/// Episodes with empty trajectories or malformed reflections are skipped
/// with a warning.
pub fn build_experience_with(
    maps: &[GridMap],
    cfg: &RunConfig,
    textgen: &dyn TextGenClient,
    embedder: &dyn Embedder,
) -> Result<ExperienceLibrary, HarnessError> {
    let mut rollout_cfg = cfg.clone();
    rollout_cfg.replay = false;
    let empty = ExperienceLibrary::new();
    let mut library = ExperienceLibrary::new();
    for (qidx, q) in cfg.questions.iter().enumerate() {
        let map = maps.get(q.map_index).ok_or_else(|| {
            HarnessError::Config(format!("question {} map index out of range", q.question_id))
        })?;
        let episode_seed = cfg.seed.wrapping_add(qidx as u64 * 7919);
        let log = run_episode(map, q, &rollout_cfg, &empty, textgen, embedder, episode_seed)?;
        if log.steps.is_empty() {
            log::warn!("skipping {}: empty trajectory", q.question_id);
            continue;
        }
        let traj = TrajectoryLog {
            question: q.text.clone(),
            steps: log.steps.clone(),
            outcome: log.outcome,
            g: log.oracle_steps,
            p: log.executed_steps,
        };
        let entry = match abstract_trajectory(&traj, textgen, &cfg.gen_params) {
            Ok(abstraction) => LibraryEntry {
                trajectory_id: library.fresh_id(),
                question: q.text.clone(),
                outcome: log.outcome,
                abstraction,
                snapshots: log.steps.iter().map(StoredSnapshot::from_step).collect(),
            },
            Err(e) => {
                log::warn!("skipping {}: {e}", q.question_id);
                continue;
            }
        };
        library.add(entry)?;
    }
    Ok(library)
}

/// Chunked verbalization followed by reflection over the merged summary.
pub fn abstract_trajectory(
    traj: &TrajectoryLog,
    textgen: &dyn TextGenClient,
    params: &GenParams,
) -> Result<crate::experience::Abstraction, ExperienceError> {
    let chunks = chunk_trajectory(traj, DEFAULT_CHUNK_LEN);
    let mut captions = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        captions.push(verbalize_chunk(chunk, &traj.question, traj.outcome, textgen, params)?);
    }
    let summary = summarize_trajectory(&captions, textgen, params)?;
    reflect_and_abstract(&summary, &traj.question, traj.outcome, textgen, params)
}

/// File-level wrapper: loads maps/clients, builds the library, saves it to
/// `library_path`.
pub fn build_experience_set(cfg: &RunConfig) -> Result<ExperienceLibrary, HarnessError> {
    cfg.validate()?;
    let path = cfg.library_path.as_ref().ok_or_else(|| {
        HarnessError::Config("library_path is required to build an experience set".into())
    })?;
    let maps = load_maps(cfg)?;
    let textgen = build_textgen(&cfg.textgen)?;
    let embedder = build_embedder(&cfg.embedder)?;
    let library = build_experience_with(&maps, cfg, textgen.as_ref(), embedder.as_ref())?;
    library.save(Path::new(path))?;
    Ok(library)
}

// ---------------------------------------------------------------------------
// ablations

/// Apply a named toggle to a config clone. "full" keeps everything on;
/// "-replay" and "-working-memory" disable those inputs; "-hierarchy"
/// replaces coarse-to-fine selection with flat listwise selection.
pub fn apply_variant(cfg: &RunConfig, variant: &str) -> Result<RunConfig, HarnessError> {
    let mut v = cfg.clone();
    match variant {
        "full" => {}
        "-replay" => v.replay = false,
        "-working-memory" => v.working_memory = false,
        "-hierarchy" => v.policy = PolicyKind::Listwise,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown ablation variant {other:?} \
                 (expected full|-replay|-working-memory|-hierarchy)"
            )))
        }
    }
    Ok(v)
}

/// Run the suite once per variant and collect the reports side by side.
pub fn ablate(
    cfg: &RunConfig,
    variants: &[String],
) -> Result<Vec<(String, MetricsReport)>, HarnessError> {
    if variants.len() < 2 {
        return Err(HarnessError::Config(
            "an ablation needs at least two variants to compare".into(),
        ));
    }
    let mut rows = Vec::new();
    for variant in variants {
        let vcfg = apply_variant(cfg, variant)?;
        let out = run_suite(&vcfg)?;
        rows.push((variant.clone(), out.report));
    }
    Ok(rows)
}

pub fn format_ablation_table(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>8} {:>8} {:>10} {:>14}\n",
        "variant", "success", "spl", "llm-match", "match-x-spl"
    ));
    for (name, report) in rows {
        let o = &report.overall;
        let lm = o.llm_match.map(|v| format!("{v:.1}")).unwrap_or_else(|| "n/a".to_string());
        out.push_str(&format!(
            "{:<18} {:>8.3} {:>8.3} {:>10} {:>14.2}\n",
            name, o.success_rate, o.spl, lm, o.llm_match_x_spl
        ));
    }
    out
}
