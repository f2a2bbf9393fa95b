//! Propagates a coherent mode without control and reports how far it drifts
//! from stationarity, then kicks a displaced Gaussian and follows its
//! center of mass through one trap period.
//!
//! cargo run --release --example propagate_mode [g0] [j]

use std::f64::consts::PI;

use gpe_control::field::{inner_product, normalize, parity_defect, WaveField};
use gpe_control::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use gpe_control::modes::{build_mode_families, default_stability_time, stability_distance, SaitpConfig};
use gpe_control::propagator::{propagate_recorded, Hamiltonian1D};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let g0: f64 = args.first().map_or(Ok(5.0), |s| s.parse())?;
    let j: usize = args.get(1).map_or(Ok(1), |s| s.parse())?;

    let consts = PhysicalConstants::default();
    let grid = SpatialGrid::default();
    let family = build_mode_families(&[g0], j, &grid, &consts, &SaitpConfig::default())?.remove(0);
    let mode = family.mode(j).ok_or("mode missing")?;

    let time = default_stability_time();
    let ham = Hamiltonian1D::control_free(consts, grid, g0);
    let traj = propagate_recorded(&mode.field, &ham, &time)?;
    println!("g0 = {g0}, j = {j}, E = {:.5}", mode.energy);
    println!("{:>6} {:>12} {:>12}", "t", "1 - |<phi|psi>|^2", "parity");
    for k in (0..time.nodes()).step_by(50) {
        let f = inner_product(&mode.field, traj.at(k))?.norm_sqr();
        println!("{:>6.2} {:>12.3e} {:>12.3e}", time.t(k), 1.0 - f, parity_defect(traj.at(k)));
    }
    println!("stability distance {:.3e}, norm drift {:.1e}", stability_distance(mode, &consts, &time)?, traj.max_norm_drift());

    // a displaced linear ground state oscillates at the trap frequency
    let shifted = normalize(&WaveField::from_fn(grid, |x| Complex64::new((-(x - 10.0 - 2.0).powi(2) / 2.0).exp(), 0.0))?)?;
    let period = TimeGrid::with_step(2.0 * PI, PI / 500.0)?;
    let traj = propagate_recorded(&shifted, &Hamiltonian1D::control_free(consts, grid, 0.0), &period)?;
    println!("\ncenter of mass of a Gaussian displaced by 2:");
    for k in (0..period.nodes()).step_by(125) {
        println!("t = {:>5.2}  <x> - L/2 = {:>7.4}", period.t(k), traj.at(k).center_of_mass() - 10.0);
    }
    Ok(())
}
