//! Two-stage K-means partition of frontier cells into Broad-View and
//! Close-up-View frontiers, with circular-mean directions, size pruning,
//! uniform-bin fallbacks, and bearing-argmin cell anchoring.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::{FrontierCell, OccupancyMap};
use crate::sim::{angular_distance, cast_rays, wrap_angle, AgentPose, Cell, CellKind, GridMap, SensorParams, VisibleCell};

pub const DEFAULT_TAU_SIZE0: usize = 3;
pub const DEFAULT_TAU_SIZE1: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum HierarchyError {
    #[error("k = {k} exceeds the number of points ({n})")]
    TooFewPoints { k: usize, n: usize },
    #[error("circular mean of a zero-resultant angle set")]
    ZeroResultant,
    #[error("empty frontier set")]
    EmptyFrontierSet,
}

/// Lloyd's K-means over 2D points with deterministic seeded farthest-point
/// initialization. Converges when assignments stabilize or after 100
/// iterations; every point is assigned.
pub fn kmeans_points(
    points: &[(f64, f64)],
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<(f64, f64)>), HierarchyError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(HierarchyError::TooFewPoints { k, n });
    }
    let dist2 = |a: (f64, f64), b: (f64, f64)| {
        let dx = a.0 - b.0;
        let dy = a.1 - b.1;
        dx * dx + dy * dy
    };

    // farthest-point init, seeded first pick, ties to the smallest index
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroid_idx = vec![rng.gen_range(0..n)];
    while centroid_idx.len() < k {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, p) in points.iter().enumerate() {
            let d = centroid_idx
                .iter()
                .map(|&c| dist2(*p, points[c]))
                .fold(f64::INFINITY, f64::min);
            if d > best.0 {
                best = (d, i);
            }
        }
        centroid_idx.push(best.1);
    }
    let mut centroids: Vec<(f64, f64)> = centroid_idx.iter().map(|&i| points[i]).collect();

    let mut assignment = vec![0usize; n];
    for _ in 0..100 {
        let mut next = vec![0usize; n];
        for (i, p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, 0usize);
            for (j, c) in centroids.iter().enumerate() {
                let d = dist2(*p, *c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            next[i] = best.1;
        }
        let converged = next == assignment;
        assignment = next;
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (i, p) in points.iter().enumerate() {
            let s = &mut sums[assignment[i]];
            s.0 += p.0;
            s.1 += p.1;
            s.2 += 1;
        }
        for (j, s) in sums.iter().enumerate() {
            if s.2 > 0 {
                centroids[j] = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
        if converged {
            break;
        }
    }
    Ok((assignment, centroids))
}

/// Mean direction on the unit circle, wrapped to (-pi, pi].
pub fn circular_mean(angles: &[f64]) -> Result<f64, HierarchyError> {
    assert!(!angles.is_empty(), "circular_mean of an empty angle set");
    let (ms, mc) = angles.iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let n = angles.len() as f64;
    let (ms, mc) = (ms / n, mc / n);
    if (ms * ms + mc * mc).sqrt() < 1e-9 {
        return Err(HierarchyError::ZeroResultant);
    }
    Ok(wrap_angle(ms.atan2(mc)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cvf {
    pub theta: f64,
    pub members: Vec<FrontierCell>,
    pub parent: usize,
    /// Representative frontier cell p*(theta).
    pub anchor: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bvf {
    pub theta: f64,
    pub members: Vec<FrontierCell>,
    pub children: Vec<Cvf>,
    pub anchor: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierHierarchy {
    pub bvfs: Vec<Bvf>,
    pub agent_cell: Cell,
}

impl FrontierHierarchy {
    /// One line per node: "BVF b theta_deg size" / "CVF b j theta_deg size x y".
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (b, bvf) in self.bvfs.iter().enumerate() {
            out.push_str(&format!(
                "BVF {} {:.1} {}\n",
                b,
                bvf.theta.to_degrees(),
                bvf.members.len()
            ));
            for (j, cvf) in bvf.children.iter().enumerate() {
                out.push_str(&format!(
                    "CVF {} {} {:.1} {} {} {}\n",
                    b,
                    j,
                    cvf.theta.to_degrees(),
                    cvf.members.len(),
                    cvf.anchor.x,
                    cvf.anchor.y
                ));
            }
        }
        out
    }
}

fn bearing_of(agent: Cell, f: &FrontierCell) -> f64 {
    if f.cell == agent {
        0.0
    } else {
        agent.bearing_to(f.cell)
    }
}

// Circular mean of member bearings; an antipodal (zero-resultant) set falls
// back to the bearing of the cluster's 2D centroid.
fn cluster_direction(agent: Cell, members: &[FrontierCell]) -> f64 {
    let bearings: Vec<f64> = members.iter().map(|f| bearing_of(agent, f)).collect();
    match circular_mean(&bearings) {
        Ok(theta) => theta,
        Err(_) => {
            let n = members.len() as f64;
            let cx = members.iter().map(|f| f.cell.x as f64).sum::<f64>() / n;
            let cy = members.iter().map(|f| f.cell.y as f64).sum::<f64>() / n;
            let dy = cy - agent.y as f64;
            let dx = cx - agent.x as f64;
            if dx.abs() < 1e-12 && dy.abs() < 1e-12 {
                0.0
            } else {
                wrap_angle(dy.atan2(dx))
            }
        }
    }
}

/// First-stage clustering: k = min(3, |F|) K-means on 2D coordinates,
/// pruning clusters below `tau_size0`, with a uniform angular-bin fallback
/// (centered on the agent heading) when everything is pruned. Children and
/// anchors are filled by `build_hierarchy`.
pub fn build_bvf(
    frontiers: &[FrontierCell],
    agent_cell: Cell,
    heading: f64,
    seed: u64,
    tau_size0: usize,
) -> Vec<Bvf> {
    if frontiers.is_empty() {
        return Vec::new();
    }
    let k = 3.min(frontiers.len());
    let points: Vec<(f64, f64)> =
        frontiers.iter().map(|f| (f.cell.x as f64, f.cell.y as f64)).collect();
    let (assignment, _) = kmeans_points(&points, k, seed).expect("k <= |points|");

    let mut clusters: Vec<Vec<FrontierCell>> = vec![Vec::new(); k];
    for (i, f) in frontiers.iter().enumerate() {
        clusters[assignment[i]].push(*f);
    }
    let mut bvfs: Vec<Bvf> = clusters
        .into_iter()
        .filter(|c| c.len() >= tau_size0)
        .map(|members| Bvf {
            theta: cluster_direction(agent_cell, &members),
            members,
            children: Vec::new(),
            anchor: agent_cell, // placeholder until anchoring
        })
        .collect();

    if bvfs.is_empty() {
        // uniform angular bins centered at the agent heading; frontiers are
        // binned by nearest bin direction, empty bins are dropped
        let mut bins: Vec<Vec<FrontierCell>> = vec![Vec::new(); k];
        let bin_theta: Vec<f64> = (0..k)
            .map(|i| wrap_angle(heading - PI + (i as f64 + 0.5) * 2.0 * PI / k as f64))
            .collect();
        for f in frontiers {
            let b = bearing_of(agent_cell, f);
            let best = (0..k)
                .min_by(|&i, &j| {
                    angular_distance(b, bin_theta[i])
                        .partial_cmp(&angular_distance(b, bin_theta[j]))
                        .unwrap()
                })
                .unwrap();
            bins[best].push(*f);
        }
        bvfs = bins
            .into_iter()
            .zip(bin_theta)
            .filter(|(members, _)| !members.is_empty())
            .map(|(members, theta)| Bvf { theta, members, children: Vec::new(), anchor: agent_cell })
            .collect();
    }

    bvfs.sort_by(|a, b| {
        a.theta
            .partial_cmp(&b.theta)
            .unwrap()
            .then_with(|| a.members.iter().map(|f| f.cell).min().cmp(&b.members.iter().map(|f| f.cell).min()))
    });
    bvfs
}

/// Second-stage clustering inside one BVF: K-means with k_b = min(3, |C_b|)
/// on angular unit-vector embeddings (cos, sin) of member bearings. A BVF
/// with fewer than three members, or one whose sub-clusters are all pruned,
/// yields a single CVF at theta_b.
pub fn build_cvf(bvf: &Bvf, parent_index: usize, agent_cell: Cell, seed: u64, tau_size1: usize) -> Vec<Cvf> {
    assert!(!bvf.members.is_empty(), "build_cvf on an empty BVF");
    let single = |theta: f64| {
        vec![Cvf { theta, members: bvf.members.clone(), parent: parent_index, anchor: agent_cell }]
    };
    if bvf.members.len() < 3 {
        return single(bvf.theta);
    }
    let embeddings: Vec<(f64, f64)> = bvf
        .members
        .iter()
        .map(|f| {
            let b = bearing_of(agent_cell, f);
            (b.cos(), b.sin())
        })
        .collect();
    let k_b = 3.min(bvf.members.len());
    let (assignment, _) = kmeans_points(&embeddings, k_b, seed).expect("k_b <= |members|");
    let mut subclusters: Vec<Vec<FrontierCell>> = vec![Vec::new(); k_b];
    for (i, f) in bvf.members.iter().enumerate() {
        subclusters[assignment[i]].push(*f);
    }
    let mut cvfs: Vec<Cvf> = subclusters
        .into_iter()
        .filter(|s| s.len() >= tau_size1)
        .map(|members| Cvf {
            theta: cluster_direction(agent_cell, &members),
            members,
            parent: parent_index,
            anchor: agent_cell,
        })
        .collect();
    if cvfs.is_empty() {
        return single(bvf.theta);
    }
    cvfs.sort_by(|a, b| {
        a.theta
            .partial_cmp(&b.theta)
            .unwrap()
            .then_with(|| a.members.iter().map(|f| f.cell).min().cmp(&b.members.iter().map(|f| f.cell).min()))
    });
    cvfs
}

/// Frontier cell whose bearing from the agent is angularly closest to
/// `theta`. Ties break by Euclidean distance to the agent, then by (y, x).
pub fn representative_cell(
    frontiers: &[FrontierCell],
    agent_cell: Cell,
    theta: f64,
) -> Result<Cell, HierarchyError> {
    frontiers
        .iter()
        .min_by(|a, b| {
            let da = angular_distance(bearing_of(agent_cell, a), theta);
            let db = angular_distance(bearing_of(agent_cell, b), theta);
            da.partial_cmp(&db)
                .unwrap()
                .then_with(|| agent_cell.euclid2(a.cell).cmp(&agent_cell.euclid2(b.cell)))
                .then_with(|| a.cell.cmp(&b.cell))
        })
        .map(|f| f.cell)
        .ok_or(HierarchyError::EmptyFrontierSet)
}

/// Build the full two-layer hierarchy with anchored representative cells.
/// Returns None for an empty frontier set.
pub fn build_hierarchy(
    frontiers: &[FrontierCell],
    agent_cell: Cell,
    heading: f64,
    seed: u64,
    tau_size0: usize,
    tau_size1: usize,
) -> Option<FrontierHierarchy> {
    if frontiers.is_empty() {
        return None;
    }
    let mut bvfs = build_bvf(frontiers, agent_cell, heading, seed, tau_size0);
    for (b, bvf) in bvfs.iter_mut().enumerate() {
        bvf.anchor = representative_cell(frontiers, agent_cell, bvf.theta).expect("nonempty");
        bvf.children = build_cvf(bvf, b, agent_cell, seed.wrapping_add(b as u64 + 1), tau_size1);
        for cvf in &mut bvf.children {
            cvf.anchor = representative_cell(frontiers, agent_cell, cvf.theta).expect("nonempty");
        }
    }
    Some(FrontierHierarchy { bvfs, agent_cell })
}

/// Desk-scale analog of an RGB frontier snapshot: the visible cone toward
/// `theta`, its label multiset, and a deterministic ASCII rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub theta: f64,
    pub origin: Cell,
    pub visible: Vec<VisibleCell>,
    /// Sorted multiset of label texts inside the cone.
    pub visible_labels: Vec<String>,
    pub text_render: String,
}

pub fn render_snapshot(
    map: &GridMap,
    _occ: &OccupancyMap,
    agent_cell: Cell,
    theta: f64,
    sensing: &SensorParams,
) -> Snapshot {
    let pose = AgentPose { cell: agent_cell, heading: theta };
    let obs = cast_rays(map, pose, sensing.fov_rad, sensing.range_cells);
    let mut visible_labels: Vec<String> =
        obs.visible.iter().filter_map(|v| v.label.clone()).collect();
    visible_labels.sort();

    let min_x = obs.visible.iter().map(|v| v.cell.x).min().unwrap();
    let max_x = obs.visible.iter().map(|v| v.cell.x).max().unwrap();
    let min_y = obs.visible.iter().map(|v| v.cell.y).min().unwrap();
    let max_y = obs.visible.iter().map(|v| v.cell.y).max().unwrap();
    let w = (max_x - min_x + 1) as usize;
    let h = (max_y - min_y + 1) as usize;
    let mut raster = vec![vec![' '; w]; h];
    for v in &obs.visible {
        let ch = if v.cell == agent_cell {
            '@'
        } else if v.label.is_some() {
            'o'
        } else {
            match v.kind {
                CellKind::Free => '.',
                CellKind::Wall => '#',
            }
        };
        raster[(v.cell.y - min_y) as usize][(v.cell.x - min_x) as usize] = ch;
    }
    let mut text_render = format!(
        "view from ({}, {}) theta {:.1} deg\n",
        agent_cell.x,
        agent_cell.y,
        theta.to_degrees()
    );
    for row in &raster {
        text_render.push_str(&row.iter().collect::<String>());
        text_render.push('\n');
    }
    text_render.push_str(&format!("labels: {}\n", visible_labels.join(", ")));

    Snapshot { theta, origin: agent_cell, visible: obs.visible, visible_labels, text_render }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::load_map;

    fn fc(x: i32, y: i32) -> FrontierCell {
        FrontierCell { cell: Cell::new(x, y), score: 5 }
    }

    #[test]
    fn kmeans_two_points_two_singletons() {
        let (assign, _) = kmeans_points(&[(0.0, 0.0), (10.0, 10.0)], 2, 7).unwrap();
        assert_ne!(assign[0], assign[1]);
    }

    #[test]
    fn kmeans_identical_points_single_cluster() {
        let pts = [(2.0, 3.0), (2.0, 3.0), (2.0, 3.0)];
        let (assign, centroids) = kmeans_points(&pts, 1, 0).unwrap();
        assert_eq!(assign, vec![0, 0, 0]);
        assert_eq!(centroids[0], (2.0, 3.0));
    }

    #[test]
    fn kmeans_rejects_k_above_n() {
        assert!(matches!(
            kmeans_points(&[(0.0, 0.0)], 2, 0),
            Err(HierarchyError::TooFewPoints { k: 2, n: 1 })
        ));
    }

    #[test]
    fn kmeans_points_nearest_to_own_centroid() {
        // oracle: posthoc nearest-centroid check on seeded random points
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<(f64, f64)> =
            (0..30).map(|_| (rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0))).collect();
        let (assign, centroids) = kmeans_points(&pts, 3, 0).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let d_own = (p.0 - centroids[assign[i]].0).powi(2) + (p.1 - centroids[assign[i]].1).powi(2);
            for c in &centroids {
                let d = (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2);
                assert!(d_own <= d + 1e-9);
            }
        }
    }

    #[test]
    fn circular_mean_basics() {
        let quarter = 90f64.to_radians();
        assert!((circular_mean(&[quarter]).unwrap() - quarter).abs() < 1e-12);
        let m = circular_mean(&[350f64.to_radians(), 10f64.to_radians()]).unwrap();
        assert!(m.abs() < 1e-9);
        assert_eq!(circular_mean(&[0.0, PI]), Err(HierarchyError::ZeroResultant));
    }

    #[test]
    fn bvf_k_follows_frontier_count() {
        let frontiers = [fc(10, 0), fc(-10, 0)];
        let bvfs = build_bvf(&frontiers, Cell::new(0, 0), 0.0, 0, 1);
        assert_eq!(bvfs.len(), 2);
    }

    #[test]
    fn bvf_fallback_uniform_bins_when_all_pruned() {
        // three singleton clusters, all below tau_size0 = 3
        let frontiers = [fc(10, 0), fc(-10, 0), fc(0, 10)];
        let bvfs = build_bvf(&frontiers, Cell::new(0, 0), 0.0, 0, 3);
        assert!(!bvfs.is_empty() && bvfs.len() <= 3);
        let total: usize = bvfs.iter().map(|b| b.members.len()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn bvf_directions_match_blob_centroid_bearings() {
        // oracle: direct centroid-bearing computation per blob
        let agent = Cell::new(0, 0);
        let mut frontiers = Vec::new();
        let blobs = [(30, 0), (0, 30), (-30, -30)];
        for &(bx, by) in &blobs {
            for dx in 0..5 {
                for dy in 0..2 {
                    frontiers.push(fc(bx + dx, by + dy));
                }
            }
        }
        let bvfs = build_bvf(&frontiers, agent, 0.0, 0, 3);
        assert_eq!(bvfs.len(), 3);
        for &(bx, by) in &blobs {
            let cx = bx as f64 + 2.0;
            let cy = by as f64 + 0.5;
            let bearing = wrap_angle(cy.atan2(cx));
            let matched = bvfs
                .iter()
                .any(|b| angular_distance(b.theta, bearing) < 5f64.to_radians());
            assert!(matched, "no BVF within 5 deg of blob bearing {bearing}");
        }
    }

    #[test]
    fn cvf_small_cluster_single_child() {
        let bvf = Bvf {
            theta: 0.5,
            members: vec![fc(5, 1), fc(5, 2)],
            children: Vec::new(),
            anchor: Cell::new(0, 0),
        };
        let cvfs = build_cvf(&bvf, 0, Cell::new(0, 0), 0, 2);
        assert_eq!(cvfs.len(), 1);
        assert_eq!(cvfs[0].theta, 0.5);
        assert_eq!(cvfs[0].members.len(), 2);
    }

    #[test]
    fn cvf_three_lobes_three_children() {
        let agent = Cell::new(0, 0);
        let mut members = Vec::new();
        for angle_deg in [0.0, 40.0, 80.0] {
            for r in [20.0, 22.0, 24.0f64] {
                let a = (angle_deg as f64).to_radians();
                members.push(fc((r * a.cos()).round() as i32, (r * a.sin()).round() as i32));
            }
        }
        let bvf = Bvf { theta: 0.7, members, children: Vec::new(), anchor: agent };
        let cvfs = build_cvf(&bvf, 0, agent, 0, 2);
        assert!(!cvfs.is_empty() && cvfs.len() <= 3);
    }

    #[test]
    fn cvf_all_pruned_falls_back_to_parent_direction() {
        // three spread members with tau_size1 high enough to prune everything
        let bvf = Bvf {
            theta: 1.1,
            members: vec![fc(20, 0), fc(0, 20), fc(-20, 5)],
            children: Vec::new(),
            anchor: Cell::new(0, 0),
        };
        let cvfs = build_cvf(&bvf, 2, Cell::new(0, 0), 0, 4);
        assert_eq!(cvfs.len(), 1);
        assert_eq!(cvfs[0].theta, 1.1);
        assert_eq!(cvfs[0].parent, 2);
    }

    #[test]
    fn representative_cell_picks_closest_bearing() {
        let agent = Cell::new(0, 0);
        let theta = 0.0f64;
        let near = fc(20, 2); // ~5.7 deg
        let far = fc(20, 8); // ~21.8 deg
        assert_eq!(representative_cell(&[far, near], agent, theta).unwrap(), near.cell);
    }

    #[test]
    fn representative_cell_wraps_near_pi() {
        let agent = Cell::new(0, 0);
        let theta = 179f64.to_radians();
        let wrapped = fc(-50, -1); // bearing ~ -178.9 deg, wrapped distance ~2 deg
        let other = fc(-50, 9); // bearing ~ 169.8 deg, distance ~9 deg
        assert_eq!(representative_cell(&[other, wrapped], agent, theta).unwrap(), wrapped.cell);
    }

    #[test]
    fn representative_cell_empty_set_errors() {
        assert_eq!(
            representative_cell(&[], Cell::new(0, 0), 0.0),
            Err(HierarchyError::EmptyFrontierSet)
        );
    }

    #[test]
    fn hierarchy_is_deterministic() {
        let frontiers: Vec<FrontierCell> = (0..40)
            .map(|i| fc((i * 7) % 23 - 11, (i * 13) % 19 - 9))
            .filter(|f| f.cell != Cell::new(0, 0))
            .collect();
        let a = build_hierarchy(&frontiers, Cell::new(0, 0), 0.2, 5, 3, 2).unwrap();
        let b = build_hierarchy(&frontiers, Cell::new(0, 0), 0.2, 5, 3, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn snapshot_sees_label_down_corridor() {
        let map = load_map("5 1 0.1\n.....\nlabel 3 0 sofa\n").unwrap();
        let occ = OccupancyMap::new(map.width, map.height);
        let snap = render_snapshot(&map, &occ, Cell::new(1, 1), 0.0, &SensorParams::default());
        assert_eq!(snap.visible_labels, vec!["sofa".to_string()]);
        assert!(snap.text_render.contains("labels: sofa"));
    }

    #[test]
    fn snapshot_facing_wall_has_depth_one() {
        let map = load_map("3 1 0.1\n.#.\n").unwrap();
        let occ = OccupancyMap::new(map.width, map.height);
        let snap = render_snapshot(&map, &occ, Cell::new(1, 1), 0.0, &SensorParams::default());
        // facing the wall at (2,1): only the agent cell and the wall itself
        assert_eq!(snap.visible.len(), 2);
        assert!(snap.visible.iter().all(|v| v.cell.x <= 2));
        assert!(snap.visible_labels.is_empty());
    }

    #[test]
    fn snapshot_render_is_byte_identical() {
        let map = load_map("6 5 0.1\n......\n.#....\n......\n...#..\n......\nlabel 4 4 plant\n").unwrap();
        let occ = OccupancyMap::new(map.width, map.height);
        let a = render_snapshot(&map, &occ, Cell::new(1, 1), 0.4, &SensorParams::default());
        let b = render_snapshot(&map, &occ, Cell::new(1, 1), 0.4, &SensorParams::default());
        assert_eq!(a.text_render, b.text_render);
        assert_eq!(a, b);
    }
}
