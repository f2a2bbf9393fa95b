//! Drives the file-based workflow from code: writes a config, solves the
//! mode family once, expands a small sweep and runs it, then analyzes one
//! member. Outputs land in a directory given as argument (default: a
//! temporary one that is removed at exit).
//!
//! cargo run --release --example sweep_workflow [out_dir]

use std::path::PathBuf;

use gpe_control::harness::{cmd_analyze, cmd_modes, cmd_optimize_sweep, cmd_sweep_gen, RunConfig};

const CONFIG: &str = "\
points = 96
duration = pi
dt = pi/500
g0 = 1
j_max = 2
target = 1, 2
scenario = potential_only
phase = spatially_dependent, symmetric
max_steps = 60
modes_dir = modes
output = sweep
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp;
    let dir: PathBuf = match std::env::args().nth(1) {
        Some(d) => d.into(),
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    std::fs::create_dir_all(&dir)?;
    let cfg_path = dir.join("sweep.cfg");
    std::fs::write(&cfg_path, CONFIG)?;

    let mut modes_cfg = RunConfig::load(&cfg_path)?;
    modes_cfg.output = modes_cfg.modes_dir.clone().ok_or("modes_dir unset")?;
    println!("modes: {}", cmd_modes(&modes_cfg, false)?.summary);

    let cfg = RunConfig::load(&cfg_path)?;
    println!("sweep-gen: {}", cmd_sweep_gen(&cfg)?.summary);
    let outcome = cmd_optimize_sweep(&cfg.output, false, &[])?;
    println!("optimize --sweep: {} (partial: {})", outcome.summary, outcome.partial);
    print!("{}", std::fs::read_to_string(cfg.output.join("results.csv"))?);

    let analysis = cmd_analyze(&cfg.output.join("run_0000"), false)?;
    println!("analyze run_0000: {} files", analysis.files.len());
    Ok(())
}
