//! Locates the ground and first five excited coherent modes for several
//! interaction strengths and prints energy, stationarity and convergence data.
//!
//! cargo run --release --example find_modes [g0 ...]

use std::time::Instant;

use gpe_control::grid::{PhysicalConstants, SpatialGrid};
use gpe_control::modes::{build_mode_families, default_stability_time, stability_distance, SaitpConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut g0s: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if g0s.is_empty() {
        g0s = vec![0.0, 1.0, 5.0, 10.0, 20.0];
    }
    let grid = SpatialGrid::default();
    let consts = PhysicalConstants::default();
    let start = Instant::now();
    let families = build_mode_families(&g0s, 5, &grid, &consts, &SaitpConfig::default())?;
    println!("found {} modes in {:.1?}", 6 * g0s.len(), start.elapsed());
    println!("{:>5} {:>2} {:>9} {:>10} {:>10} {:>6}", "g0", "j", "E_j", "d(phi_j)", "residual", "iters");
    for fam in &families {
        for m in &fam.modes {
            let d = stability_distance(m, &consts, &default_stability_time())?;
            println!(
                "{:>5} {:>2} {:>9.4} {:>10.2e} {:>10.2e} {:>6}",
                fam.g0, m.index, m.energy, d, m.residual, m.iterations
            );
        }
    }
    Ok(())
}
