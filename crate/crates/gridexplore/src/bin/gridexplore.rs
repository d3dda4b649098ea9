//! Thin CLI over the library. Exit codes: 0 on success, 2 on configuration
//! errors, 3 on runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gridexplore::harness::{
    ablate, build_experience_set, format_ablation_table, gen_map, run_suite, write_maps,
    HarnessError, MapStyle, RunConfig,
};
use gridexplore::hierarchy::build_hierarchy;
use gridexplore::mapping::OccupancyMap;
use gridexplore::sim::{cast_rays, load_map, AgentPose, SensorParams};

#[derive(Parser)]
#[command(name = "gridexplore", about = "grid-world exploration harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded map documents.
    GenMaps {
        #[arg(long, default_value = "maze")]
        style: MapStyleArg,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 15)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sofa")]
        label: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Roll out the configured questions and save abstracted experiences.
    BuildExperience {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the question suite and print per-episode logs as JSONL.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Attach an occupancy layer dump (seen|free|occupied) to each log.
        #[arg(long)]
        dump_occupancy: Option<String>,
    },
    /// Run the suite and print the metrics report as JSON.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare named variants (full, -replay, -working-memory, -hierarchy).
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [
            "full".to_string(), "-replay".to_string(), "-working-memory".to_string(),
            "-hierarchy".to_string(),
        ])]
        variants: Vec<String>,
    },
    /// Print the frontier hierarchy seen from a map's first free cell.
    DumpHierarchy {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy)]
struct MapStyleArg(MapStyle);

impl std::str::FromStr for MapStyleArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(MapStyleArg)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::GenMaps { style, count, size, seed, label, out_dir } => {
            // fail fast on degenerate parameters before touching the disk
            gen_map(style.0, size, seed, &label)?;
            let paths = write_maps(&out_dir, style.0, count, size, seed, &label)?;
            for p in paths {
                println!("{}", p.display());
            }
        }
        Command::BuildExperience { config } => {
            let cfg = RunConfig::from_file(&config)?;
            let library = build_experience_set(&cfg)?;
            println!(
                "saved {} trajectories to {}",
                library.len(),
                cfg.library_path.as_deref().unwrap_or("?")
            );
        }
        Command::Run { config, dump_occupancy } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if dump_occupancy.is_some() {
                cfg.dump_occupancy = dump_occupancy;
            }
            let out = run_suite(&cfg)?;
            for log in &out.logs {
                println!("{}", serde_json::to_string(log)?);
            }
        }
        Command::Evaluate { config, out } => {
            let cfg = RunConfig::from_file(&config)?;
            let suite = run_suite(&cfg)?;
            let json = serde_json::to_string_pretty(&suite.report)?;
            match out {
                Some(path) => std::fs::write(path, &json)?,
                None => println!("{json}"),
            }
        }
        Command::Ablate { config, variants } => {
            let cfg = RunConfig::from_file(&config)?;
            let rows = ablate(&cfg, &variants)?;
            print!("{}", format_ablation_table(&rows));
        }
        Command::DumpHierarchy { map, seed } => {
            let text = std::fs::read_to_string(&map)?;
            let map = load_map(&text)?;
            let start = map
                .free_cells()
                .first()
                .copied()
                .ok_or_else(|| HarnessError::Config("map has no free cells".into()))?;
            let sensing = SensorParams::default();
            let mut occ = OccupancyMap::new(map.width, map.height);
            let pose = AgentPose { cell: start, heading: 0.0 };
            occ.integrate_observation(&cast_rays(&map, pose, sensing.fov_rad, sensing.range_cells))?;
            let frontiers = occ.extract_frontiers(start, 2, 8)?;
            match build_hierarchy(&frontiers, start, 0.0, seed, 3, 2) {
                Some(h) => print!("{}", h.dump()),
                None => println!("no frontiers visible from {start:?}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
