//! Occupancy layers (seen / free / occupied), the reachable island, and
//! frontier-band extraction over the unexplored mask.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Cell, CellKind, Observation};

#[derive(Debug, Error, PartialEq)]
pub enum MappingError {
    #[error("observation cell {0} out of map bounds")]
    OutOfBounds(Cell),
    #[error("agent cell {0} is not known free")]
    AgentNotFree(Cell),
    #[error("frontier thresholds out of range: [{0}, {1}]")]
    BadThresholds(u8, u8),
}

/// Three boolean layers of identical shape. Invariants: free and occupied
/// are disjoint, and both are subsets of seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMap {
    pub width: usize,
    pub height: usize,
    seen: Vec<bool>,
    free: Vec<bool>,
    occupied: Vec<bool>,
}

impl OccupancyMap {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        OccupancyMap {
            width,
            height,
            seen: vec![false; n],
            free: vec![false; n],
            occupied: vec![false; n],
        }
    }

    fn idx(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn is_seen(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.seen[self.idx(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.free[self.idx(c)]
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.occupied[self.idx(c)]
    }

    pub fn seen_count(&self) -> usize {
        self.seen.iter().filter(|b| **b).count()
    }

    /// Known-free cells as a set, for path planning.
    pub fn known_free(&self) -> HashSet<Cell> {
        let mut out = HashSet::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let c = Cell::new(x, y);
                if self.free[self.idx(c)] {
                    out.insert(c);
                }
            }
        }
        out
    }

    /// Fold one observation into the layers. Idempotent for repeated
    /// identical observations; cells outside the visible set are untouched.
    pub fn integrate_observation(&mut self, obs: &Observation) -> Result<(), MappingError> {
        for v in &obs.visible {
            if !self.in_bounds(v.cell) {
                return Err(MappingError::OutOfBounds(v.cell));
            }
        }
        for v in &obs.visible {
            let i = self.idx(v.cell);
            self.seen[i] = true;
            match v.kind {
                CellKind::Free => self.free[i] = true,
                CellKind::Wall => self.occupied[i] = true,
            }
        }
        Ok(())
    }

    /// 4-connected component of free cells containing the agent.
    pub fn reachable_island(&self, agent_cell: Cell) -> Result<HashSet<Cell>, MappingError> {
        if !self.is_free(agent_cell) {
            return Err(MappingError::AgentNotFree(agent_cell));
        }
        let mut island = HashSet::new();
        let mut queue = VecDeque::new();
        island.insert(agent_cell);
        queue.push_back(agent_cell);
        while let Some(cur) = queue.pop_front() {
            for n in cur.neighbors4() {
                if self.is_free(n) && !island.contains(&n) {
                    island.insert(n);
                    queue.push_back(n);
                }
            }
        }
        Ok(island)
    }

    /// Count of unexplored (not-seen) cells in the 3x3 neighborhood of
    /// `cell`, including the cell itself. Borders clip; there is no
    /// wraparound, so cells outside the map contribute nothing.
    pub fn frontier_score(&self, cell: Cell) -> u8 {
        let table = self.unexplored_prefix_sums();
        self.score_from_table(&table, cell)
    }

    // Summed-area table over the unexplored mask; (w+1) x (h+1).
    fn unexplored_prefix_sums(&self) -> Vec<u32> {
        let w = self.width;
        let h = self.height;
        let mut table = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                let unexplored = !self.seen[y * w + x] as u32;
                table[(y + 1) * (w + 1) + (x + 1)] = unexplored
                    + table[y * (w + 1) + (x + 1)]
                    + table[(y + 1) * (w + 1) + x]
                    - table[y * (w + 1) + x];
            }
        }
        table
    }

    fn score_from_table(&self, table: &[u32], cell: Cell) -> u8 {
        let w = self.width as i32;
        let h = self.height as i32;
        let x0 = (cell.x - 1).max(0);
        let y0 = (cell.y - 1).max(0);
        let x1 = (cell.x + 2).min(w);
        let y1 = (cell.y + 2).min(h);
        if x0 >= x1 || y0 >= y1 {
            return 0;
        }
        let stride = self.width + 1;
        let sum = table[y1 as usize * stride + x1 as usize]
            + table[y0 as usize * stride + x0 as usize]
            - table[y0 as usize * stride + x1 as usize]
            - table[y1 as usize * stride + x0 as usize];
        sum as u8
    }

    /// Island cells whose frontier score lies in [tau_min, tau_max].
    /// An empty result is valid: the step then provides no frontiers.
    pub fn extract_frontiers(
        &self,
        agent_cell: Cell,
        tau_min: u8,
        tau_max: u8,
    ) -> Result<Vec<FrontierCell>, MappingError> {
        if tau_min < 1 || tau_min > tau_max || tau_max > 9 {
            return Err(MappingError::BadThresholds(tau_min, tau_max));
        }
        let island = self.reachable_island(agent_cell)?;
        let table = self.unexplored_prefix_sums();
        let mut out = Vec::new();
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let cell = Cell::new(x, y);
                if !island.contains(&cell) {
                    continue;
                }
                let score = self.score_from_table(&table, cell);
                if score >= tau_min && score <= tau_max {
                    out.push(FrontierCell { cell, score });
                }
            }
        }
        Ok(out)
    }

    /// PGM-style ASCII dump of one layer for visual inspection.
    pub fn dump_layer(&self, layer: Layer) -> String {
        let mut out = format!("P2 {} {} (layer: {:?})\n", self.width, self.height, layer);
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                let c = Cell::new(x, y);
                let set = match layer {
                    Layer::Seen => self.is_seen(c),
                    Layer::Free => self.is_free(c),
                    Layer::Occupied => self.is_occupied(c),
                };
                out.push(if set { '1' } else { '0' });
                if (x as usize) < self.width - 1 {
                    out.push(' ');
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Seen,
    Free,
    Occupied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierCell {
    pub cell: Cell,
    pub score: u8,
}

pub const DEFAULT_TAU_MIN: u8 = 2;
pub const DEFAULT_TAU_MAX: u8 = 8;
