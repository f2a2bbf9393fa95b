//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use gpe_control::field::{ControlField, ControlKind, WaveField};
use gpe_control::grid::{SpatialGrid, TimeGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Energies of the first six coherent modes for g0 = 0, 1, 5, 10, 20,
/// printed to two decimals.
pub const TABLE_ENERGIES: [(f64, [f64; 6]); 5] = [
    (0.0, [0.50, 1.50, 2.50, 3.50, 4.50, 5.50]),
    (1.0, [0.87, 1.79, 2.75, 3.73, 4.71, 5.69]),
    (5.0, [2.01, 2.81, 3.67, 4.58, 5.51, 6.45]),
    (10.0, [3.11, 3.86, 4.68, 5.54, 6.42, 7.33]),
    (20.0, [4.87, 5.61, 6.39, 7.20, 8.04, 8.90]),
];

/// `Σ_k exp(−2πi nk/len) f_k · T/len`, term by term.
pub fn naive_dft_time(f: &[Complex64], duration: f64) -> Vec<Complex64> {
    let len = f.len();
    let dt = duration / len as f64;
    (0..len)
        .map(|n| {
            f.iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((n * k) % len) as f64 / len as f64))
                .sum::<Complex64>()
                * dt
        })
        .collect()
}

/// Full quadruple sum `Σ_j Σ_k exp(−2πi mj/N) exp(−2πi nk/S) f(j,k) dx dt`
/// for a node-major field; rows are `m`, columns `n`.
pub fn naive_2d(values: &[f64], points: usize, steps: usize, length: f64, duration: f64) -> Vec<Complex64> {
    let w = length / points as f64 * duration / steps as f64;
    let tx: Vec<Complex64> = (0..points).map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 / points as f64)).collect();
    let tt: Vec<Complex64> = (0..steps).map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 / steps as f64)).collect();
    let mut out = Vec::with_capacity(points * steps);
    for m in 0..points {
        for n in 0..steps {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..steps {
                let et = tt[(n * k) % steps];
                for j in 0..points {
                    acc += tx[(m * j) % points] * et * values[k * points + j];
                }
            }
            out.push(acc * w);
        }
    }
    out
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Physicists' Hermite polynomial by its three-term recurrence.
pub fn hermite(n: usize, y: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * y);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = 2.0 * y * b - 2.0 * k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// Oscillator eigenfunction (ħ = m = ω = 1) with its closed-form
/// normalization `(2^n n! √π)^{-1/2}`, centered on the trap.
pub fn oscillator_state(n: usize, grid: SpatialGrid) -> WaveField {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let norm = 1.0 / (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt();
    let c = grid.center();
    WaveField::from_fn(grid, |x| {
        let y = x - c;
        Complex64::new(norm * hermite(n, y) * (-y * y / 2.0).exp(), 0.0)
    })
    .unwrap()
}

/// Fidelity `|⟨a|b⟩|²` for unit fields, by direct summation.
pub fn fidelity(a: &WaveField, b: &WaveField) -> f64 {
    let dx = a.grid().dx();
    let s: Complex64 = a.values().iter().zip(b.values()).map(|(x, y)| x.conj() * y).sum();
    (s * dx).norm_sqr()
}

/// Random smooth real field: a few low spatial and temporal harmonics.
pub fn smooth_control(kind: ControlKind, space: SpatialGrid, time: TimeGrid, seed: u64, scale: f64) -> ControlField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                rng.random_range(-scale..scale),
                rng.random_range(1..4) as f64,
                rng.random_range(0.0..3.0),
                rng.random_range(0.0..2.0 * PI),
            ]
        })
        .collect();
    let (l, t_end) = (space.length(), time.duration());
    ControlField::from_fn(kind, space, time, |x, t| {
        terms
            .iter()
            .map(|[a, m, w, ph]| a * (2.0 * PI * m * x / l + ph).cos() * (w * t / t_end.max(1.0)).sin())
            .sum()
    })
    .unwrap()
}

/// Gaussian ground state displaced by `shift` from the trap center.
pub fn displaced_gaussian(grid: SpatialGrid, shift: f64) -> WaveField {
    let c = grid.center() + shift;
    let norm = PI.powf(-0.25);
    WaveField::from_fn(grid, |x| Complex64::new(norm * (-(x - c).powi(2) / 2.0).exp(), 0.0)).unwrap()
}
