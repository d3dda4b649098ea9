//! Sense a generated maze from its start cell, fold the observations into an
//! occupancy map, and list the frontier cells that bound the explored island.
//!
//! Run with: cargo run --example mapping_and_frontiers

use gridexplore::harness::{gen_map, MapStyle};
use gridexplore::mapping::{Layer, OccupancyMap, DEFAULT_TAU_MAX, DEFAULT_TAU_MIN};
use gridexplore::sim::{cast_rays, load_map, AgentPose, SensorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = gen_map(MapStyle::Maze, 15, 7, "sofa")?;
    println!("generated maze:\n{doc}");
    let map = load_map(&doc)?;

    let sensing = SensorParams::default();
    let start = map.free_cells()[0];
    let mut occ = OccupancyMap::new(map.width, map.height);

    // three cone scans a third of a turn apart cover the full circle
    for k in 0..3 {
        let heading = k as f64 * std::f64::consts::TAU / 3.0;
        let obs = cast_rays(
            &map,
            AgentPose { cell: start, heading },
            sensing.fov_rad,
            sensing.range_cells,
        );
        occ.integrate_observation(&obs)?;
    }

    println!("seen layer after a full survey from {start}:");
    println!("{}", occ.dump_layer(Layer::Seen));

    let frontiers = occ.extract_frontiers(start, DEFAULT_TAU_MIN, DEFAULT_TAU_MAX)?;
    println!("frontier cells (score = unexplored cells in the 3x3 neighborhood):");
    for f in &frontiers {
        println!("  {} score {}", f.cell, f.score);
    }
    Ok(())
}
