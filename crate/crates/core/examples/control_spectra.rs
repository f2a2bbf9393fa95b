//! Optimizes a 0 -> target transition and inspects the control: power
//! spectra, the strongest (k, ω) cell, populations over time and the
//! target-overlap profile.
//!
//! cargo run --release --example control_spectra [target] [g0] [duration]

use std::f64::consts::PI;

use gpe_control::analysis::{population_trace, spectrum_2d, spectrum_v, spectrum_v_averaged, target_overlap_profile};
use gpe_control::dmorph::{run_optimization, ControlScenario, InitialGuess, OptimizerSettings, PhaseProfile, ScenarioKind};
use gpe_control::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use gpe_control::modes::{build_mode_families, SaitpConfig};
use gpe_control::propagator::{propagate_recorded, Hamiltonian1D};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let target: usize = args.first().map_or(Ok(5), |s| s.parse())?;
    let g0: f64 = args.get(1).map_or(Ok(10.0), |s| s.parse())?;
    let duration: f64 = args.get(2).map_or(Ok(10.0), |s| s.parse())?;

    let consts = PhysicalConstants::default();
    let space = SpatialGrid::default();
    let time = TimeGrid::with_step(duration, PI / 500.0)?;
    let family = build_mode_families(&[g0], target, &space, &consts, &SaitpConfig::default())?.remove(0);
    let guess = InitialGuess::new(1.0 / (5.0 * PI), PhaseProfile::SpatiallyDependent, &consts);
    let run = run_optimization(&family, target, &ControlScenario::new(ScenarioKind::PotentialOnly), &guess, &time, &consts, &OptimizerSettings::default())?;
    println!("P(0->{target}) = {:.4} after {} steps", run.final_objective(), run.accepted_steps());

    let energies = family.energies();
    println!("gaps from the ground mode: {:?}", energies.iter().map(|e| format!("{:.3}", e - energies[0])).collect::<Vec<_>>());

    let avg = spectrum_v_averaged(&run.potential);
    let lit = spectrum_v(&run.potential);
    println!("{:>7} {:>12} {:>12}", "omega", "averaged", "integrated");
    for n in 1..avg.omega.len().min(16) {
        let mark = if avg.local_maxima().contains(&n) { "  <- local max" } else { "" };
        println!("{:>7.3} {:>12.4e} {:>12.4e}{mark}", avg.omega[n], avg.power[n], lit.power[n]);
    }

    let two_d = spectrum_2d(&run.potential, None)?;
    if let Some((m, n)) = two_d.dominant_off_dc() {
        println!("strongest off-DC cell: k = {:.3}, omega = {:.3}", two_d.wavenumbers[m], two_d.omega[n]);
    }

    let ham = Hamiltonian1D::control_free(consts, space, g0).with_controls(run.potential.clone(), run.nonlinearity.clone())?;
    let traj = propagate_recorded(&family.modes[0].field, &ham, &time)?;
    let modes: Vec<usize> = (0..=target).collect();
    let pops = population_trace(&traj, &family, &modes)?;
    let stride = (time.nodes() / 8).max(1);
    let mut nodes: Vec<usize> = (0..time.nodes()).step_by(stride).chain([time.steps()]).collect();
    nodes.dedup();
    for k in nodes {
        let row: Vec<String> = pops.values.iter().map(|r| format!("{:.3}", r[k])).collect();
        println!("t = {:>6.2}  P_j = {}", pops.times[k], row.join(" "));
    }

    let ov = target_overlap_profile(&family.modes[0].field, &family.mode(target).ok_or("mode missing")?.field)?;
    let peak = (1..ov.power.len() / 2).max_by(|&a, &b| ov.power[a].total_cmp(&ov.power[b])).unwrap_or(0);
    println!("overlap profile |phi_f* phi_0|: strongest non-zero wavenumber {:.3}", ov.wavenumbers[peak]);
    Ok(())
}
