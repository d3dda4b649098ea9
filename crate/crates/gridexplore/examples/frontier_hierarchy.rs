//! Cluster frontier cells into the two-layer direction hierarchy: broad
//! view fields (BVFs) over 2D positions, then close view fields (CVFs) over
//! bearing within each BVF, each anchored to a representative frontier cell.
//!
//! Run with: cargo run --example frontier_hierarchy

use gridexplore::harness::{gen_map, MapStyle};
use gridexplore::hierarchy::{
    build_hierarchy, render_snapshot, DEFAULT_TAU_SIZE0, DEFAULT_TAU_SIZE1,
};
use gridexplore::mapping::{OccupancyMap, DEFAULT_TAU_MAX, DEFAULT_TAU_MIN};
use gridexplore::sim::{cast_rays, load_map, AgentPose, SensorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = gen_map(MapStyle::Rooms, 21, 3, "lamp")?;
    let map = load_map(&doc)?;
    let sensing = SensorParams::default();
    let agent = map.free_cells()[0];

    let mut occ = OccupancyMap::new(map.width, map.height);
    for k in 0..3 {
        let heading = k as f64 * std::f64::consts::TAU / 3.0;
        let obs = cast_rays(
            &map,
            AgentPose { cell: agent, heading },
            sensing.fov_rad,
            sensing.range_cells,
        );
        occ.integrate_observation(&obs)?;
    }
    let frontiers = occ.extract_frontiers(agent, DEFAULT_TAU_MIN, DEFAULT_TAU_MAX)?;
    println!("{} frontier cells from {agent}", frontiers.len());

    let hier = build_hierarchy(&frontiers, agent, 0.0, 42, DEFAULT_TAU_SIZE0, DEFAULT_TAU_SIZE1)
        .expect("nonempty frontier set");
    println!("hierarchy dump (layer index direction-deg size [anchor x y]):");
    println!("{}", hier.dump());

    // every direction can be rendered as an egocentric text snapshot
    if let Some(bvf) = hier.bvfs.first() {
        let snap = render_snapshot(&map, &occ, agent, bvf.theta, &sensing);
        println!("snapshot toward BVF 0 ({:.1} deg):", bvf.theta.to_degrees());
        println!("{}", snap.text_render);
    }
    Ok(())
}
