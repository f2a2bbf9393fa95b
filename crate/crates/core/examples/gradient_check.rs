//! Compares the adjoint functional gradient with central finite differences
//! of the forward objective along random smooth directions.
//!
//! cargo run --release --example gradient_check [g0] [target]

use std::f64::consts::PI;

use gpe_control::adjoint::{backward_sweep, gradient, BackwardScheme};
use gpe_control::dmorph::objective;
use gpe_control::field::{ControlField, ControlKind};
use gpe_control::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use gpe_control::modes::{build_mode_families, SaitpConfig};
use gpe_control::propagator::{propagate, propagate_recorded, Hamiltonian1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn smooth(kind: ControlKind, space: SpatialGrid, time: TimeGrid, rng: &mut ChaCha8Rng, scale: f64) -> ControlField {
    let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let l = space.length();
    ControlField::from_fn(kind, space, time, |x, t| {
        let a = 2.0 * PI * x / l;
        scale * (c[0] * a.sin() + c[1] * (2.0 * a).cos() * t.cos() + c[2] * (a + 3.0 * t).sin() + c[3] * (1.0 + 0.1 * t))
    })
    .unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let g0: f64 = args.first().map_or(Ok(1.0), |s| s.parse())?;
    let target: usize = args.get(1).map_or(Ok(2), |s| s.parse())?;

    let consts = PhysicalConstants::default();
    let space = SpatialGrid::new(20.0, 128)?;
    let time = TimeGrid::new(PI, 200)?;
    let family = build_mode_families(&[g0], target, &space, &consts, &SaitpConfig::default())?.remove(0);
    let (psi0, phi) = (&family.modes[0].field, &family.mode(target).ok_or("mode missing")?.field);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = smooth(ControlKind::Potential, space, time, &mut rng, 0.3);
    let g = smooth(ControlKind::Nonlinearity, space, time, &mut rng, 0.3);
    let base = Hamiltonian1D::control_free(consts, space, g0);
    let p_of = |v: &ControlField, g: &ControlField| -> f64 {
        let ham = base.clone().with_controls(v.clone(), g.clone()).unwrap();
        objective(&propagate(psi0, &ham, &time).unwrap(), phi).unwrap()
    };

    let ham = base.clone().with_controls(v.clone(), g.clone())?;
    let traj = propagate_recorded(psi0, &ham, &time)?;
    println!("P(0->{target}) under the random controls: {:.6}", objective(traj.last(), phi)?);
    for scheme in [BackwardScheme::ExactDiscrete, BackwardScheme::MatrixExponential] {
        let sweep = backward_sweep(&ham, &traj, phi, scheme)?;
        for kind in [ControlKind::Potential, ControlKind::Nonlinearity] {
            let grad = gradient(&traj, &sweep, kind)?;
            let dir = smooth(kind, space, time, &mut rng, 1.0);
            let eps = 1e-5;
            let shift = |c: &ControlField, s: f64| {
                let vals = c.values().iter().zip(dir.values()).map(|(a, b)| a + s * b).collect();
                ControlField::new(kind, space, time, vals).unwrap()
            };
            let fd = match kind {
                ControlKind::Potential => (p_of(&shift(&v, eps), &g) - p_of(&shift(&v, -eps), &g)) / (2.0 * eps),
                ControlKind::Nonlinearity => (p_of(&v, &shift(&g, eps)) - p_of(&v, &shift(&g, -eps))) / (2.0 * eps),
            };
            let adj = grad.pair(dir.values())?;
            println!("{scheme:?} {kind:?}: adjoint {adj:+.8e}  fd {fd:+.8e}  rel {:.2e}", (adj - fd).abs() / fd.abs());
        }
    }
    Ok(())
}
