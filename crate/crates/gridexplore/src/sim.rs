//! Deterministic 2D grid environment: labeled cells, agent pose, cone-of-view
//! ray-cast sensing, and shortest-path motion.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

/// Absolute angular distance between two directions, in [0, pi].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Bearing of `other` as seen from this cell, in (-pi, pi].
    pub fn bearing_to(&self, other: Cell) -> f64 {
        wrap_angle(((other.y - self.y) as f64).atan2((other.x - self.x) as f64))
    }

    pub fn euclid2(&self, other: Cell) -> i64 {
        let dx = (other.x - self.x) as i64;
        let dy = (other.y - self.y) as i64;
        dx * dx + dy * dy
    }

    /// 4-neighbors in (y, x)-lexicographic order.
    pub fn neighbors4(&self) -> [Cell; 4] {
        [
            Cell::new(self.x, self.y - 1),
            Cell::new(self.x - 1, self.y),
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x, self.y + 1),
        ]
    }
}

// Lexicographic (y, x) order: used for every deterministic tie-break.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Wall,
}

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("empty map document")]
    EmptyMap,
    #[error("non-rectangular rows: expected width {expected}, row {row} has {got}")]
    NonRectangular { row: usize, expected: usize, got: usize },
    #[error("unknown map character {0:?}")]
    UnknownChar(char),
    #[error("malformed header line: {0}")]
    BadHeader(String),
    #[error("malformed label line: {0}")]
    BadLabel(String),
    #[error("label {label:?} at {cell} is not on a Free cell")]
    LabelOnWall { label: String, cell: Cell },
    #[error("label coordinates {cell} out of bounds")]
    LabelOutOfBounds { cell: Cell },
}

/// Immutable world map. The loader pads a Wall border around the document
/// grid (closed world), so labels shift by (+1, +1) relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    cells: Vec<CellKind>,
    pub labels: BTreeMap<Cell, String>,
    pub cell_size_m: f64,
}

impl GridMap {
    pub fn from_cells(
        width: usize,
        height: usize,
        cells: Vec<CellKind>,
        labels: BTreeMap<Cell, String>,
        cell_size_m: f64,
    ) -> Result<Self, MapError> {
        assert_eq!(cells.len(), width * height);
        let map = GridMap { width, height, cells, labels, cell_size_m };
        for (cell, label) in &map.labels {
            if !map.in_bounds(*cell) {
                return Err(MapError::LabelOutOfBounds { cell: *cell });
            }
            if map.kind(*cell) != CellKind::Free {
                return Err(MapError::LabelOnWall { label: label.clone(), cell: *cell });
            }
        }
        Ok(map)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn kind(&self, c: Cell) -> CellKind {
        self.cells[c.y as usize * self.width + c.x as usize]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.kind(c) == CellKind::Free
    }

    pub fn label(&self, c: Cell) -> Option<&str> {
        self.labels.get(&c).map(|s| s.as_str())
    }

    /// All cells carrying the given label, in (y, x) order.
    pub fn cells_with_label(&self, label: &str) -> Vec<Cell> {
        self.labels
            .iter()
            .filter(|(_, l)| l.as_str() == label)
            .map(|(c, _)| *c)
            .collect()
    }

    /// All free cells in (y, x) order.
    pub fn free_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let c = Cell::new(x, y);
                if self.kind(c) == CellKind::Free {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Serialize back to the map-document format (without the padded border).
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let iw = self.width - 2;
        let ih = self.height - 2;
        out.push_str(&format!("{} {} {}\n", iw, ih, self.cell_size_m));
        for y in 1..self.height - 1 {
            for x in 1..self.width - 1 {
                out.push(match self.kind(Cell::new(x as i32, y as i32)) {
                    CellKind::Free => '.',
                    CellKind::Wall => '#',
                });
            }
            out.push('\n');
        }
        for (cell, label) in &self.labels {
            out.push_str(&format!("label {} {} {}\n", cell.x - 1, cell.y - 1, label));
        }
        out
    }
}

/// Parse a map document: header "W H cell_size_m", H rows of '.'/'#',
/// then zero or more "label x y <text>" lines. A Wall border is padded
/// around the parsed grid.
pub fn load_map(text: &str) -> Result<GridMap, MapError> {
    let mut lines = text.lines();
    let header = loop {
        match lines.next() {
            Some(l) if l.trim().is_empty() => continue,
            Some(l) => break l,
            None => return Err(MapError::EmptyMap),
        }
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(MapError::BadHeader(header.to_string()));
    }
    let w: usize = parts[0].parse().map_err(|_| MapError::BadHeader(header.to_string()))?;
    let h: usize = parts[1].parse().map_err(|_| MapError::BadHeader(header.to_string()))?;
    let cell_size_m: f64 =
        parts[2].parse().map_err(|_| MapError::BadHeader(header.to_string()))?;
    if w == 0 || h == 0 {
        return Err(MapError::EmptyMap);
    }

    let pw = w + 2;
    let ph = h + 2;
    let mut cells = vec![CellKind::Wall; pw * ph];
    for row in 0..h {
        let line = lines.next().ok_or(MapError::NonRectangular {
            row,
            expected: w,
            got: 0,
        })?;
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != w {
            return Err(MapError::NonRectangular { row, expected: w, got: chars.len() });
        }
        for (col, ch) in chars.iter().enumerate() {
            let kind = match ch {
                '.' => CellKind::Free,
                '#' => CellKind::Wall,
                c => return Err(MapError::UnknownChar(*c)),
            };
            cells[(row + 1) * pw + col + 1] = kind;
        }
    }

    let mut labels = BTreeMap::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.splitn(4, ' ');
        let tag = it.next().unwrap_or("");
        if tag != "label" {
            return Err(MapError::BadLabel(line.to_string()));
        }
        let x: i32 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MapError::BadLabel(line.to_string()))?;
        let y: i32 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MapError::BadLabel(line.to_string()))?;
        let text = it.next().ok_or_else(|| MapError::BadLabel(line.to_string()))?;
        // shift into the padded frame
        labels.insert(Cell::new(x + 1, y + 1), text.to_string());
    }

    GridMap::from_cells(pw, ph, cells, labels, cell_size_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub cell: Cell,
    /// Heading in radians, (-pi, pi].
    pub heading: f64,
}

/// Sensing parameters. Camera height/pitch/resolution are inert config
/// carried along for log fidelity; they do not affect the 2D ray cast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorParams {
    pub fov_rad: f64,
    pub range_cells: i32,
    pub camera_height_m: f64,
    pub camera_pitch_deg: f64,
    pub image_size_px: u32,
}

impl Default for SensorParams {
    fn default() -> Self {
        // 120 deg FOV, 17 cells ~ 1.7 m at 0.1 m/cell
        SensorParams {
            fov_rad: 120.0_f64.to_radians(),
            range_cells: 17,
            camera_height_m: 1.5,
            camera_pitch_deg: -30.0,
            image_size_px: 360,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleCell {
    pub cell: Cell,
    pub kind: CellKind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Visible cells in (y, x) order.
    pub visible: Vec<VisibleCell>,
    pub origin: AgentPose,
    pub fov_rad: f64,
    pub range_cells: i32,
}

impl Observation {
    pub fn contains(&self, c: Cell) -> bool {
        self.visible.iter().any(|v| v.cell == c)
    }
}

/// All cells a segment from `a` to `b` passes through (supercover line).
/// Exact corner crossings include both side cells, so diagonal wall gaps
/// block the ray.
pub fn supercover_line(a: Cell, b: Cell) -> Vec<Cell> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let nx = dx.abs() as i64;
    let ny = dy.abs() as i64;
    let sx = dx.signum();
    let sy = dy.signum();
    let mut p = a;
    let mut cells = vec![a];
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        let t1 = (2 * ix + 1) * ny;
        let t2 = (2 * iy + 1) * nx;
        if ix < nx && (iy >= ny || t1 < t2) {
            p.x += sx;
            ix += 1;
        } else if iy < ny && (ix >= nx || t1 > t2) {
            p.y += sy;
            iy += 1;
        } else {
            // exact corner crossing
            cells.push(Cell::new(p.x + sx, p.y));
            cells.push(Cell::new(p.x, p.y + sy));
            p.x += sx;
            p.y += sy;
            ix += 1;
            iy += 1;
        }
        cells.push(p);
    }
    cells
}

/// Per-target-cell line-of-sight sensing inside a cone. A Wall terminates
/// its ray but is itself visible; the agent's own cell is always visible.
pub fn cast_rays(map: &GridMap, pose: AgentPose, fov_rad: f64, range_cells: i32) -> Observation {
    let mut visible: Vec<Cell> = vec![pose.cell];
    let half = fov_rad / 2.0;
    let r2 = (range_cells as i64) * (range_cells as i64);
    for y in (pose.cell.y - range_cells).max(0)..=(pose.cell.y + range_cells).min(map.height as i32 - 1)
    {
        for x in
            (pose.cell.x - range_cells).max(0)..=(pose.cell.x + range_cells).min(map.width as i32 - 1)
        {
            let target = Cell::new(x, y);
            if target == pose.cell {
                continue;
            }
            if pose.cell.euclid2(target) > r2 {
                continue;
            }
            let bearing = pose.cell.bearing_to(target);
            if angular_distance(bearing, pose.heading) > half + 1e-12 {
                continue;
            }
            let line = supercover_line(pose.cell, target);
            let blocked = line[1..line.len() - 1]
                .iter()
                .any(|c| *c != target && map.kind(*c) == CellKind::Wall);
            if !blocked {
                visible.push(target);
            }
        }
    }
    visible.sort();
    visible.dedup();
    let visible = visible
        .into_iter()
        .map(|c| VisibleCell {
            cell: c,
            kind: map.kind(c),
            label: map.label(c).map(|s| s.to_string()),
        })
        .collect();
    Observation { visible, origin: pose, fov_rad, range_cells }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Ordered sequence of adjacent Free cells, starting at `from`.
    pub cells: Vec<Cell>,
}

impl Path {
    pub fn len_steps(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn goal(&self) -> Cell {
        *self.cells.last().expect("path has at least the start cell")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("start cell {0} not in the known-free set")]
    StartNotFree(Cell),
    #[error("no path from {from} to {to} over known free cells")]
    Unreachable { from: Cell, to: Cell },
}

/// Minimum-step 4-connected BFS path over `known_free`. Ties break toward
/// the smaller (y, x) successor via neighbor expansion order.
pub fn plan_path(
    known_free: &std::collections::HashSet<Cell>,
    from: Cell,
    to: Cell,
) -> Result<Path, PlanError> {
    if !known_free.contains(&from) {
        return Err(PlanError::StartNotFree(from));
    }
    if from == to {
        return Ok(Path { cells: vec![from] });
    }
    let mut parent: HashMap<Cell, Cell> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert(from, from);
    queue.push_back(from);
    while let Some(cur) = queue.pop_front() {
        if cur == to {
            break;
        }
        for n in cur.neighbors4() {
            if known_free.contains(&n) && !parent.contains_key(&n) {
                parent.insert(n, cur);
                queue.push_back(n);
            }
        }
    }
    if !parent.contains_key(&to) {
        return Err(PlanError::Unreachable { from, to });
    }
    let mut cells = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[&cur];
        cells.push(cur);
    }
    cells.reverse();
    Ok(Path { cells })
}

/// Result of executing a planned motion.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Arrived,
    /// Planned path turned out blocked; pose is the last valid cell.
    Replan { blocked_at: Cell },
}

/// Follow a shortest path to `target` over `known_free`, sensing after each
/// move. Zero-step motions still yield one observation.
pub fn step_to(
    map: &GridMap,
    pose: AgentPose,
    known_free: &std::collections::HashSet<Cell>,
    target: Cell,
    sensing: &SensorParams,
) -> Result<(AgentPose, Vec<Observation>, usize, StepOutcome), PlanError> {
    let path = plan_path(known_free, pose.cell, target)?;
    let mut cur = pose;
    let mut observations = Vec::new();
    let mut steps = 0usize;
    if path.len_steps() == 0 {
        observations.push(cast_rays(map, cur, sensing.fov_rad, sensing.range_cells));
        return Ok((cur, observations, 0, StepOutcome::Arrived));
    }
    for window in path.cells.windows(2) {
        let next = window[1];
        if map.kind(next) == CellKind::Wall {
            return Ok((cur, observations, steps, StepOutcome::Replan { blocked_at: next }));
        }
        let heading = window[0].bearing_to(next);
        cur = AgentPose { cell: next, heading };
        steps += 1;
        observations.push(cast_rays(map, cur, sensing.fov_rad, sensing.range_cells));
    }
    Ok((cur, observations, steps, StepOutcome::Arrived))
}
