//! Nonlinear coherent modes `H_nl[φ_j]φ_j = E_jφ_j` of the trapped condensate,
//! located by spectrum-adapted imaginary time propagation (S-AITP).
//!
//! Each iteration diagonalizes the instantaneous Hamiltonian
//! `H_0 + V_trap + g₀|ψ|²` (4th-order periodic finite differences), replaces
//! the `j` lowest eigenvalues by the largest one so that eigenvector `j`
//! becomes the least damped, and applies `M exp(−Λ̃Δτ) Mᵀ` followed by
//! renormalization.

use std::fmt;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{inner_product, normalize, WaveField};
use crate::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use crate::propagator::{propagate, Hamiltonian1D};

/// Iteration settings. A search has converged once `‖ψ_new − ψ_old‖² < ε`
/// and, if `residual_tol` is set, `‖H_nl[ψ]ψ − Eψ‖ < residual_tol`.
///
/// The default step of 0.1 is deliberately much larger than the real-time
/// step: with steps of order 0.01 the excited modes at `g₀ = 20` are
/// unstable fixed points of the iteration and the search cycles forever.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaitpConfig {
    /// Imaginary time step.
    pub dt_imag: f64,
    /// Threshold on `‖ψ_new − ψ_old‖²`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub residual_tol: Option<f64>,
}

impl Default for SaitpConfig {
    fn default() -> Self {
        Self {
            dt_imag: 0.1,
            epsilon: 1e-10,
            max_iters: 50_000,
            residual_tol: Some(1e-6),
        }
    }
}

impl SaitpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_imag.is_finite() && self.dt_imag > 0.0) {
            return Err(Error::invalid(format!("dt_imag must be > 0, got {}", self.dt_imag)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if let Some(r) = self.residual_tol {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!("residual_tol must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

/// Dense real symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, z)| z * a).sum())
            .collect()
    }
}

fn d4_coefficients(grid: &SpatialGrid, constants: &PhysicalConstants) -> [f64; 3] {
    let s = -constants.hbar * constants.hbar / (2.0 * constants.mass) / (12.0 * grid.dx() * grid.dx());
    // offsets 0, ±1, ±2
    [-30.0 * s, 16.0 * s, -s]
}

/// `−(ħ²/2m)D₄ + V_trap + g₀|ψ|²` with periodic wrap.
pub fn build_hamiltonian_matrix(psi: &WaveField, g0: f64, constants: &PhysicalConstants) -> SymmetricMatrix {
    let grid = *psi.grid();
    let n = grid.points();
    let [c0, c1, c2] = d4_coefficients(&grid, constants);
    let trap = grid.trap(constants);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut data[i * n..(i + 1) * n];
        row[i] = c0 + trap[i] + g0 * psi.values()[i].norm_sqr();
        row[(i + 1) % n] += c1;
        row[(i + n - 1) % n] += c1;
        row[(i + 2) % n] += c2;
        row[(i + n - 2) % n] += c2;
    }
    SymmetricMatrix { n, data }
}

/// `H_nl[φ]φ` evaluated with the stencil, without forming the matrix.
pub fn apply_hamiltonian(phi: &WaveField, g0: f64, constants: &PhysicalConstants) -> Vec<Complex64> {
    let grid = *phi.grid();
    let n = grid.points();
    let [c0, c1, c2] = d4_coefficients(&grid, constants);
    let trap = grid.trap(constants);
    let f = phi.values();
    (0..n)
        .map(|i| {
            let kin = f[i] * c0
                + (f[(i + 1) % n] + f[(i + n - 1) % n]) * c1
                + (f[(i + 2) % n] + f[(i + n - 2) % n]) * c2;
            kin + f[i] * (trap[i] + g0 * f[i].norm_sqr())
        })
        .collect()
}

/// Eigenpairs of a [`SymmetricMatrix`] on a spatial grid. Eigenvectors are
/// normalized under the `dx`-weighted inner product.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    grid: SpatialGrid,
    eigenvalues: Vec<f64>,
    /// Column-major, column `k` is eigenvector `k`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn new(matrix: &SymmetricMatrix, grid: SpatialGrid) -> Result<Self> {
        let n = matrix.dim();
        if n != grid.points() {
            return Err(Error::GridMismatch(format!(
                "matrix dimension {n} does not match grid with {} points",
                grid.points()
            )));
        }
        let a = Mat::from_fn(n, n, |i, j| matrix.get(i, j));
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::invalid(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let eigenvalues: Vec<f64> = (0..n).map(|k| s[k]).collect();
        let scale = 1.0 / grid.dx().sqrt();
        let mut vectors = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                vectors[k * n + i] = u[(i, k)] * scale;
            }
        }
        Ok(Self {
            grid,
            eigenvalues,
            vectors,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.grid.points();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `M Λ Mᵀ dx`, which equals the decomposed matrix.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let n = self.grid.points();
        let dx = self.grid.dx();
        let mut data = vec![0.0; n * n];
        for k in 0..n {
            let v = self.vector(k);
            let w = self.eigenvalues[k] * dx;
            for i in 0..n {
                let vi = v[i] * w;
                let row = &mut data[i * n..(i + 1) * n];
                for (r, vj) in row.iter_mut().zip(v) {
                    *r += vi * vj;
                }
            }
        }
        SymmetricMatrix { n, data }
    }

    /// `Σ_k d_k f_k ⟨f_k|ψ⟩`.
    fn apply_spectral(&self, psi: &[Complex64], damping: &[f64]) -> Vec<Complex64> {
        let n = self.grid.points();
        let dx = self.grid.dx();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &d) in damping.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let f = self.vector(k);
            let c: Complex64 = f.iter().zip(psi).map(|(a, z)| z * a).sum::<Complex64>() * (dx * d);
            for (o, a) in out.iter_mut().zip(f) {
                *o += c * a;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CoherentMode {
    pub index: usize,
    pub g0: f64,
    pub field: WaveField,
    pub energy: f64,
    /// `‖H_nl[φ]φ − Eφ‖`.
    pub residual: f64,
    pub iterations: usize,
}

/// Non-convergence report of an S-AITP search.
#[derive(Clone, Debug)]
pub struct SaitpFailure {
    pub index: usize,
    pub g0: f64,
    pub iterations: usize,
    pub last_defect: f64,
    /// `‖Δψ‖²` of every iteration.
    pub defect_history: Vec<f64>,
    pub last_iterate: WaveField,
}

impl fmt::Display for SaitpFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "S-AITP for mode {} at g0 = {} did not converge after {} iterations (last defect {:.3e})",
            self.index, self.g0, self.iterations, self.last_defect
        )
    }
}

/// Normalized Hermite–Gaussian of order `j ≤ 10` centered on the trap.
pub fn harmonic_trial(j: usize, grid: &SpatialGrid, constants: &PhysicalConstants) -> Result<WaveField> {
    if j > 10 {
        return Err(Error::invalid(format!("harmonic trial order must be <= 10, got {j}")));
    }
    let scale = (constants.mass * constants.omega / constants.hbar).sqrt();
    let c = grid.center();
    let values = grid
        .coordinates()
        .map(|x| {
            let xi = (x - c) * scale;
            // normalized recurrence avoids the factorial growth of H_n
            let mut prev = 0.0;
            let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
            for n in 0..j {
                let nf = n as f64;
                let next = (2.0 / (nf + 1.0)).sqrt() * xi * cur - (nf / (nf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            Complex64::new(cur, 0.0)
        })
        .collect();
    normalize(&WaveField::new(*grid, values)?)
}

/// Eq-of-state energy `⟨φ|H_nl[φ]|φ⟩` with the 4th-order kinetic stencil.
pub fn mode_energy(phi: &WaveField, g0: f64, constants: &PhysicalConstants) -> f64 {
    let h = apply_hamiltonian(phi, g0, constants);
    phi.values()
        .iter()
        .zip(&h)
        .map(|(a, b)| (a.conj() * b).re)
        .sum::<f64>()
        * phi.grid().dx()
}

/// `‖H_nl[φ]φ − Eφ‖` under the discrete norm.
pub fn mode_residual(phi: &WaveField, g0: f64, energy: f64, constants: &PhysicalConstants) -> f64 {
    let h = apply_hamiltonian(phi, g0, constants);
    (phi.values()
        .iter()
        .zip(&h)
        .map(|(a, b)| (b - a * energy).norm_sqr())
        .sum::<f64>()
        * phi.grid().dx())
    .sqrt()
}

pub fn saitp_find_mode(
    j: usize,
    g0: f64,
    trial: &WaveField,
    constants: &PhysicalConstants,
    config: &SaitpConfig,
) -> Result<CoherentMode> {
    config.validate()?;
    constants.validate()?;
    if !g0.is_finite() {
        return Err(Error::invalid(format!("g0 must be finite, got {g0}")));
    }
    let grid = *trial.grid();
    if j >= grid.points() {
        return Err(Error::invalid(format!("mode index {j} exceeds grid size")));
    }
    let mut psi = normalize(trial)?;
    let mut history = Vec::new();
    for iter in 1..=config.max_iters {
        let h = build_hamiltonian_matrix(&psi, g0, constants);
        let evd = EigenDecomposition::new(&h, grid)?;
        let lam = evd.eigenvalues();
        let top = lam[lam.len() - 1];
        // shift by the surviving minimum so the damping factors stay O(1)
        let shift = lam[j];
        let damping: Vec<f64> = lam
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let l = if k < j { top } else { l };
                (-(l - shift) * config.dt_imag).exp()
            })
            .collect();
        let next = WaveField::new(grid, evd.apply_spectral(psi.values(), &damping))?;
        let next = normalize(&next)?;
        let defect = next.distance(&psi)?.powi(2);
        history.push(defect);
        psi = next;
        if defect < config.epsilon {
            let energy = mode_energy(&psi, g0, constants);
            let residual = mode_residual(&psi, g0, energy, constants);
            if config.residual_tol.is_some_and(|tol| residual >= tol) {
                continue;
            }
            let mut field = psi;
            field.fix_phase();
            return Ok(CoherentMode {
                index: j,
                g0,
                field,
                energy,
                residual,
                iterations: iter,
            });
        }
    }
    Err(Error::NotConverged(Box::new(SaitpFailure {
        index: j,
        g0,
        iterations: config.max_iters,
        last_defect: history.last().copied().unwrap_or(f64::NAN),
        defect_history: history,
        last_iterate: psi,
    })))
}

/// Propagation settings of the stationarity check: `T = 10`, `Δt = T/500`.
pub fn default_stability_time() -> TimeGrid {
    TimeGrid::new(10.0, 500).expect("valid constant grid")
}

/// `d(φ) = 1 − |⟨φ|ψ(T)⟩|²` for control-free evolution from `ψ(0) = φ`.
pub fn stability_distance(mode: &CoherentMode, constants: &PhysicalConstants, time: &TimeGrid) -> Result<f64> {
    let ham = Hamiltonian1D::control_free(*constants, *mode.field.grid(), mode.g0);
    let psi_t = propagate(&mode.field, &ham, time)?;
    let ov = inner_product(&mode.field, &psi_t)?.norm_sqr();
    Ok((1.0 - ov).clamp(0.0, 1.0))
}

/// `a_{j,k} = ⟨φ_j|φ_k⟩` for modes of the same `g₀`.
pub fn overlap_coefficient(a: &CoherentMode, b: &CoherentMode) -> Result<Complex64> {
    if a.g0 != b.g0 {
        return Err(Error::invalid(format!(
            "overlap requires modes of one family, got g0 = {} and {}",
            a.g0, b.g0
        )));
    }
    inner_product(&a.field, &b.field)
}

/// Modes `j = 0..=j_max` at one `g₀`, ordered by index.
#[derive(Clone, Debug)]
pub struct ModeFamily {
    pub g0: f64,
    pub modes: Vec<CoherentMode>,
}

impl ModeFamily {
    pub fn mode(&self, j: usize) -> Option<&CoherentMode> {
        self.modes.iter().find(|m| m.index == j)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.energy).collect()
    }

    /// Matrix of `|a_{j,k}|²`.
    pub fn overlap_matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.modes
            .iter()
            .map(|a| {
                self.modes
                    .iter()
                    .map(|b| overlap_coefficient(a, b).map(|z| z.norm_sqr()))
                    .collect()
            })
            .collect()
    }
}

/// Runs every `(g₀, j)` search in parallel, each seeded with the harmonic
/// trial of the same index. Families are returned in the order of `g0s`.
pub fn build_mode_families(
    g0s: &[f64],
    j_max: usize,
    grid: &SpatialGrid,
    constants: &PhysicalConstants,
    config: &SaitpConfig,
) -> Result<Vec<ModeFamily>> {
    let jobs: Vec<(usize, usize)> = (0..g0s.len())
        .flat_map(|a| (0..=j_max).map(move |j| (a, j)))
        .collect();
    let found: Vec<Result<CoherentMode>> = jobs
        .par_iter()
        .map(|&(a, j)| {
            let trial = harmonic_trial(j, grid, constants)?;
            saitp_find_mode(j, g0s[a], &trial, constants, config)
        })
        .collect();
    let mut families: Vec<ModeFamily> = g0s
        .iter()
        .map(|&g0| ModeFamily { g0, modes: Vec::new() })
        .collect();
    for (&(a, _), mode) in jobs.iter().zip(found) {
        families[a].modes.push(mode?);
    }
    Ok(families)
}
