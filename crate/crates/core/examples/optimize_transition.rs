//! Maximizes the transition probability from the ground mode to an excited
//! mode with potential-only control, printing P after every accepted step.
//!
//! cargo run --release --example optimize_transition [target] [g0] [points] [duration]

use std::f64::consts::PI;
use std::time::Instant;

use gpe_control::dmorph::{run_optimization, ControlScenario, InitialGuess, OptimizerSettings, PhaseProfile, ScenarioKind};
use gpe_control::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use gpe_control::modes::{build_mode_families, SaitpConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let target: usize = args.first().map_or(Ok(1), |s| s.parse())?;
    let g0: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;
    let points: usize = args.get(2).map_or(Ok(150), |s| s.parse())?;
    let duration: f64 = args.get(3).map_or(Ok(PI), |s| s.parse())?;

    let consts = PhysicalConstants::default();
    let space = SpatialGrid::new(20.0, points)?;
    let time = TimeGrid::with_step(duration, PI / 500.0)?;
    let family = build_mode_families(&[g0], target, &space, &consts, &SaitpConfig::default())?.remove(0);

    let guess = InitialGuess::new(1.0 / (5.0 * PI), PhaseProfile::SpatiallyDependent, &consts);
    let scenario = ControlScenario::new(ScenarioKind::PotentialOnly);
    let start = Instant::now();
    let run = run_optimization(&family, target, &scenario, &guess, &time, &consts, &OptimizerSettings::default())?;
    for (k, (p, s)) in run.history.iter().zip(&run.s_values).enumerate() {
        println!("step {k:>3}  s = {s:>10.4e}  P = {p:.6}");
    }
    println!(
        "{} after {} steps ({} rejected, {} evaluations) in {:.1?}; final P = {:.6}",
        run.termination.name(),
        run.accepted_steps(),
        run.rejected_steps,
        run.evaluations,
        start.elapsed(),
        run.final_objective()
    );
    Ok(())
}
