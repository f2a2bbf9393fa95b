//! Adjoint (sensitivity) sweep and functional gradients of
//! `P = |⟨φ_f|ψ(T)⟩|²` with respect to the potential and nonlinearity
//! controls.
//!
//! The adjoint is carried as the supervector `[p, p*]`. Its terminal value is
//! `p(T) = (i/ħ) φ_f ⟨φ_f|ψ(T)⟩` and, in this convention, the gradients are
//!
//! ```text
//! δP/δV_cont(x,t) = 2 Re[p* ψ]        δP/δg_cont(x,t) = 2 Re[p* |ψ|² ψ]
//! ```
//!
//! Two backward schemes are provided:
//!
//! * [`BackwardScheme::ExactDiscrete`] (default) applies, sub-step by
//!   sub-step, the transpose of the linearized forward split step. Each
//!   potential sub-step becomes a pointwise 2×2 map on `[p, p*]`, the kinetic
//!   sub-step is `exp(iL₀Δt)` in momentum space. The gradient at node `k` is
//!   the mean of `2Re[p*ψ]` at the two potential sub-steps that use the
//!   controls of node `k`, so `Σ G·δc·dx·dt` is the exact directional
//!   derivative of the discrete objective.
//! * [`BackwardScheme::MatrixExponential`] integrates the continuous adjoint
//!   equation `∂p⃗/∂t = −(i/ħ) L p⃗` with `exp(iL₁Δt/2) exp(iL₀Δt) exp(iL₁Δt/2)`,
//!   `L₁` frozen at the stored forward snapshot, the 2×2 blocks exponentiated
//!   in closed form. It agrees with the discrete gradient to `O(Δt)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{inner_product, ControlKind, WaveField};
use crate::fourier::FftPair;
use crate::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use crate::propagator::{kinetic_phases, Hamiltonian1D, Trajectory};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BackwardScheme {
    #[default]
    ExactDiscrete,
    MatrixExponential,
}

/// Supervector `[p, p*]` on the spatial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointPair {
    grid: SpatialGrid,
    pub p: Vec<Complex64>,
    pub p_conj: Vec<Complex64>,
}

impl AdjointPair {
    pub fn new(grid: SpatialGrid, p: Vec<Complex64>, p_conj: Vec<Complex64>) -> Result<Self> {
        if p.len() != grid.points() || p_conj.len() != grid.points() {
            return Err(Error::GridMismatch("adjoint components do not match grid".into()));
        }
        Ok(Self { grid, p, p_conj })
    }

    pub fn from_p(grid: SpatialGrid, p: Vec<Complex64>) -> Result<Self> {
        let q = p.iter().map(|z| z.conj()).collect();
        Self::new(grid, p, q)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// `‖p‖` under the discrete inner product.
    pub fn norm(&self) -> f64 {
        (self.p.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// Norm of the full supervector `(‖p‖² + ‖p_conj‖²)^{1/2}`.
    pub fn supervector_norm(&self) -> f64 {
        let s: f64 = self.p.iter().chain(&self.p_conj).map(|z| z.norm_sqr()).sum();
        (s * self.grid.dx()).sqrt()
    }

    /// `‖p_conj − conj(p)‖ / ‖p‖`; zero when `‖p‖ = 0`.
    pub fn consistency_defect(&self) -> f64 {
        let num: f64 = self
            .p
            .iter()
            .zip(&self.p_conj)
            .map(|(a, b)| (b - a.conj()).norm_sqr())
            .sum();
        let den: f64 = self.p.iter().map(|z| z.norm_sqr()).sum();
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    pub fn p_field(&self) -> WaveField {
        WaveField::from_raw(self.grid, self.p.clone())
    }
}

/// Functional derivative `δP/δc(x_j, t_k)`, stored node-major like
/// [`crate::field::ControlField`]. No quadrature weight is included.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    target: ControlKind,
    space: SpatialGrid,
    time: TimeGrid,
    values: Vec<f64>,
}

impl GradientField {
    pub fn target(&self) -> ControlKind {
        self.target
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, k: usize) -> &[f64] {
        let n = self.space.points();
        &self.values[k * n..(k + 1) * n]
    }

    /// Riemann sum `Σ_{j,k} G(x_j,t_k)·δc(x_j,t_k)·dx·dt` over all nodes.
    pub fn pair(&self, delta: &[f64]) -> Result<f64> {
        if delta.len() != self.values.len() {
            return Err(Error::GridMismatch("perturbation shape differs from gradient".into()));
        }
        let w = self.space.dx() * self.time.dt();
        Ok(self.values.iter().zip(delta).map(|(g, d)| g * d).sum::<f64>() * w)
    }

    /// `⟨G, G⟩` with the same quadrature as [`GradientField::pair`].
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>() * self.space.dx() * self.time.dt()
    }
}

/// `p(x,T) = (i/ħ) φ_f(x) ⟨φ_f|ψ(T)⟩`, `p_conj = conj(p)`.
pub fn terminal_condition(
    phi_f: &WaveField,
    psi_t: &WaveField,
    constants: &PhysicalConstants,
) -> Result<AdjointPair> {
    let c = inner_product(phi_f, psi_t)? * I / constants.hbar;
    let p = phi_f.values().iter().map(|f| f * c).collect();
    AdjointPair::from_p(*phi_f.grid(), p)
}

/// Pointwise `L₁ = [[a, b], [−b*, −a]]` with `a = V + 2g|ψ|²`, `b = gψ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Coefficients {
    pub diag: f64,
    pub upper: Complex64,
    pub lower: Complex64,
}

impl L1Coefficients {
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.diag, 0.0), self.upper],
            [self.lower, Complex64::new(-self.diag, 0.0)],
        ]
    }
}

pub fn build_l1(v_total: &[f64], g_total: &[f64], psi: &[Complex64]) -> Vec<L1Coefficients> {
    v_total
        .iter()
        .zip(g_total)
        .zip(psi)
        .map(|((&v, &g), &z)| L1Coefficients {
            diag: v + 2.0 * g * z.norm_sqr(),
            upper: g * z * z,
            lower: -g * (z * z).conj(),
        })
        .collect()
}

/// `exp(i L₁ h)` with `h = dt/2` in closed form:
/// `cos(λh) I + i sin(λh)/λ L₁`, `λ² = a² − |b|²`.
///
/// `dt` must already be divided by ħ. A negative `λ²` gives the hyperbolic
/// form; `|λh| < 1e-6` uses the two-term series of `sin(z)/z`.
pub fn exp_l1_half(l1: &L1Coefficients, dt: f64) -> [[Complex64; 2]; 2] {
    let h = 0.5 * dt;
    let lam2 = l1.diag * l1.diag - l1.upper.norm_sqr();
    let z2 = lam2 * h * h;
    let (c, s) = if z2.abs() < 1e-12 {
        (1.0 - 0.5 * z2, h * (1.0 - z2 / 6.0))
    } else if lam2 > 0.0 {
        let lam = lam2.sqrt();
        ((lam * h).cos(), (lam * h).sin() / lam)
    } else {
        let mu = (-lam2).sqrt();
        ((mu * h).cosh(), (mu * h).sinh() / mu)
    };
    let is = I * s;
    [
        [c + is * l1.diag, is * l1.upper],
        [is * l1.lower, c - is * l1.diag],
    ]
}

/// Forward state and adjoint at the output of the first potential sub-step
/// of a forward step; only the exact discrete scheme produces these.
#[derive(Clone, Debug)]
pub struct SubStepPoint {
    pub state: Vec<Complex64>,
    pub adjoint: Vec<Complex64>,
}

/// Result of one backward step.
#[derive(Clone, Debug)]
pub struct BackwardStep {
    pub pair: AdjointPair,
    pub midpoint: Option<SubStepPoint>,
}

struct BackwardStepper<'a> {
    ham: &'a Hamiltonian1D,
    scheme: BackwardScheme,
    dt: f64,
    fft: FftPair,
    /// `exp(+iħk²Δt/2m)` for `p`; its conjugate drives `p_conj`.
    kin_p: Vec<Complex64>,
    kin_q: Vec<Complex64>,
    v: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> BackwardStepper<'a> {
    fn new(ham: &'a Hamiltonian1D, dt: f64, scheme: BackwardScheme) -> Self {
        let forward = kinetic_phases(ham.grid(), ham.constants(), dt);
        let n = ham.grid().points();
        Self {
            ham,
            scheme,
            dt,
            fft: FftPair::new(n),
            kin_p: forward.iter().map(|z| z.conj()).collect(),
            kin_q: forward,
            v: vec![0.0; n],
            g: vec![0.0; n],
        }
    }

    /// Maps the pair at node `k + 1` to node `k`.
    fn step(
        &mut self,
        pair: &mut AdjointPair,
        psi_k: &[Complex64],
        psi_next: &[Complex64],
        k: usize,
    ) -> Result<Option<SubStepPoint>> {
        self.ham.potential_at(k + 1, &mut self.v);
        self.ham.nonlinearity_at(k + 1, &mut self.g);
        let hbar = self.ham.constants().hbar;
        let midpoint = match self.scheme {
            BackwardScheme::ExactDiscrete => {
                let tau = 0.5 * self.dt / hbar;
                transpose_phase_step(pair, psi_next, &self.v, &self.g, tau);
                self.kinetic(pair);
                let state: Vec<Complex64> = psi_k
                    .iter()
                    .zip(&self.v)
                    .zip(&self.g)
                    .map(|((z, &v), &g)| z * Complex64::from_polar(1.0, -tau * (v + g * z.norm_sqr())))
                    .collect();
                let adjoint = pair.p.clone();
                transpose_phase_step(pair, &state, &self.v, &self.g, tau);
                Some(SubStepPoint { state, adjoint })
            }
            BackwardScheme::MatrixExponential => {
                let l1 = build_l1(&self.v, &self.g, psi_next);
                let blocks: Vec<_> = l1.iter().map(|c| exp_l1_half(c, self.dt / hbar)).collect();
                apply_blocks(pair, &blocks);
                self.kinetic(pair);
                apply_blocks(pair, &blocks);
                None
            }
        };
        if pair
            .p
            .iter()
            .chain(&pair.p_conj)
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Unstable { step: k });
        }
        Ok(midpoint)
    }

    fn kinetic(&mut self, pair: &mut AdjointPair) {
        self.fft.apply_diagonal(&mut pair.p, &self.kin_p);
        self.fft.apply_diagonal(&mut pair.p_conj, &self.kin_q);
    }
}

/// Transpose of the linearized phase sub-step `u -> exp(−iτ(V + g|u|²)) u`,
/// written in terms of its output `w`:
/// `p <- e^{iθ}[(1 + iτg|w|²) p + iτ g w² p*]`, `θ = τ(V + g|w|²)`.
fn transpose_phase_step(pair: &mut AdjointPair, w: &[Complex64], v: &[f64], g: &[f64], tau: f64) {
    for j in 0..w.len() {
        let rho = w[j].norm_sqr();
        let rot = Complex64::from_polar(1.0, tau * (v[j] + g[j] * rho));
        let diag = Complex64::new(1.0, tau * g[j] * rho);
        let off = I * tau * g[j] * w[j] * w[j];
        let (p, q) = (pair.p[j], pair.p_conj[j]);
        pair.p[j] = rot * (diag * p + off * q);
        pair.p_conj[j] = rot.conj() * (diag.conj() * q + off.conj() * p);
    }
}

fn apply_blocks(pair: &mut AdjointPair, blocks: &[[[Complex64; 2]; 2]]) {
    for (j, m) in blocks.iter().enumerate() {
        let (p, q) = (pair.p[j], pair.p_conj[j]);
        pair.p[j] = m[0][0] * p + m[0][1] * q;
        pair.p_conj[j] = m[1][0] * p + m[1][1] * q;
    }
}

/// One backward step from node `k + 1` to node `k`, using the stored forward
/// snapshots `ψ(t_k)`, `ψ(t_{k+1})` and the controls at node `k + 1`.
pub fn step_backward(
    pair: &AdjointPair,
    ham: &Hamiltonian1D,
    trajectory: &Trajectory,
    k: usize,
    scheme: BackwardScheme,
) -> Result<BackwardStep> {
    if k >= trajectory.time().steps() {
        return Err(Error::invalid(format!(
            "backward step index {k} out of range for {} steps",
            trajectory.time().steps()
        )));
    }
    pair.grid.check_same(trajectory.grid())?;
    ham.check_time(trajectory.time())?;
    let mut stepper = BackwardStepper::new(ham, trajectory.time().dt(), scheme);
    let mut out = pair.clone();
    let midpoint = stepper.step(
        &mut out,
        trajectory.at(k).values(),
        trajectory.at(k + 1).values(),
        k,
    )?;
    Ok(BackwardStep { pair: out, midpoint })
}

/// Complete backward sweep from `T` to `0`.
#[derive(Clone, Debug)]
pub struct AdjointSweep {
    scheme: BackwardScheme,
    time: TimeGrid,
    /// Adjoint at every node, index `k = 0..=steps`.
    pairs: Vec<AdjointPair>,
    /// Sub-step points of forward step `k -> k+1`, stored at index `k`.
    midpoints: Vec<SubStepPoint>,
    terminal_state: WaveField,
    overlap: Complex64,
}

impl AdjointSweep {
    pub fn scheme(&self) -> BackwardScheme {
        self.scheme
    }

    pub fn pairs(&self) -> &[AdjointPair] {
        &self.pairs
    }

    pub fn at(&self, k: usize) -> &AdjointPair {
        &self.pairs[k]
    }

    /// `⟨φ_f|ψ(T)⟩` of the run this sweep belongs to.
    pub fn overlap(&self) -> Complex64 {
        self.overlap
    }

    pub fn objective(&self) -> f64 {
        self.overlap.norm_sqr()
    }

    pub fn max_consistency_defect(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.consistency_defect())
            .fold(0.0, f64::max)
    }
}

pub fn backward_sweep(
    ham: &Hamiltonian1D,
    trajectory: &Trajectory,
    phi_f: &WaveField,
    scheme: BackwardScheme,
) -> Result<AdjointSweep> {
    ham.check_time(trajectory.time())?;
    trajectory.grid().check_same(ham.grid())?;
    let time = *trajectory.time();
    let overlap = inner_product(phi_f, trajectory.last())?;
    let terminal = terminal_condition(phi_f, trajectory.last(), ham.constants())?;
    let mut stepper = BackwardStepper::new(ham, time.dt(), scheme);
    let mut pairs = vec![terminal.clone()];
    let mut midpoints = Vec::new();
    let mut current = terminal;
    for k in (0..time.steps()).rev() {
        let mid = stepper.step(
            &mut current,
            trajectory.at(k).values(),
            trajectory.at(k + 1).values(),
            k,
        )?;
        pairs.push(current.clone());
        if let Some(m) = mid {
            midpoints.push(m);
        }
    }
    pairs.reverse();
    midpoints.reverse();
    Ok(AdjointSweep {
        scheme,
        time,
        pairs,
        midpoints,
        terminal_state: trajectory.last().clone(),
        overlap,
    })
}

/// Pointwise gradient for `target` assembled from a trajectory and the sweep
/// computed from it.
pub fn gradient(trajectory: &Trajectory, sweep: &AdjointSweep, target: ControlKind) -> Result<GradientField> {
    if *trajectory.time() != sweep.time || *trajectory.last() != sweep.terminal_state {
        return Err(Error::invalid("adjoint sweep was computed from a different forward run"));
    }
    let space = *trajectory.grid();
    let n = space.points();
    let density = |p: &Complex64, psi: &Complex64| -> f64 {
        let base = 2.0 * (p.conj() * psi).re;
        match target {
            ControlKind::Potential => base,
            ControlKind::Nonlinearity => base * psi.norm_sqr(),
        }
    };
    let mut values = vec![0.0; n * sweep.time.nodes()];
    match sweep.scheme {
        BackwardScheme::ExactDiscrete => {
            // controls at node 0 never enter the discrete dynamics
            for k in 1..sweep.time.nodes() {
                let node = trajectory.at(k).values();
                let pk = &sweep.pairs[k].p;
                let mid = &sweep.midpoints[k - 1];
                let row = &mut values[k * n..(k + 1) * n];
                for j in 0..n {
                    row[j] = 0.5 * (density(&pk[j], &node[j]) + density(&mid.adjoint[j], &mid.state[j]));
                }
            }
        }
        BackwardScheme::MatrixExponential => {
            for k in 0..sweep.time.nodes() {
                let node = trajectory.at(k).values();
                let pk = &sweep.pairs[k].p;
                let row = &mut values[k * n..(k + 1) * n];
                for j in 0..n {
                    row[j] = density(&pk[j], &node[j]);
                }
            }
        }
    }
    Ok(GradientField {
        target,
        space,
        time: sweep.time,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{normalize, ControlField};
    use crate::propagator::{propagate, propagate_recorded};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(20.0, 64).unwrap()
    }

    fn hermite(grid: SpatialGrid, odd: bool) -> WaveField {
        let c = grid.center();
        normalize(
            &WaveField::from_fn(grid, |x| {
                let y = x - c;
                Complex64::new(if odd { y } else { 1.0 } * (-y * y / 2.0).exp(), 0.0)
            })
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn terminal_norm_cases() {
        let g = grid();
        let consts = PhysicalConstants::new(0.5, 1.0, 1.0).unwrap();
        let f = hermite(g, false);
        let perp = hermite(g, true);
        let p = terminal_condition(&f, &f, &consts).unwrap();
        assert!((p.norm() - 2.0).abs() < 1e-12);
        assert_eq!(p.consistency_defect(), 0.0);
        assert!(terminal_condition(&f, &perp, &consts).unwrap().norm() < 1e-15);

        let mix = f.scaled(Complex64::new(0.5f64.sqrt(), 0.0));
        let mix = WaveField::new(
            g,
            mix.values().iter().zip(perp.values()).map(|(a, b)| a + b * 0.5f64.sqrt()).collect(),
        )
        .unwrap();
        // oracle: |⟨φ_f|ψ⟩| = 1/√2, ‖φ_f‖ = 1 ⇒ ‖p‖ = 1/(ħ√2)
        let p = terminal_condition(&f, &mix, &consts).unwrap();
        assert!((p.norm() - 2.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn l1_structure() {
        let psi = [Complex64::new(0.3, -0.4), Complex64::new(0.7, 0.0)];
        let c = build_l1(&[1.5, -0.2], &[0.0, 0.0], &psi);
        assert_eq!(c[0].diag, 1.5);
        assert_eq!(c[0].upper, Complex64::new(0.0, 0.0));
        let c = build_l1(&[0.1, 0.1], &[2.0, 2.0], &psi);
        assert!((c[1].upper - Complex64::new(2.0 * 0.49, 0.0)).norm() < 1e-15);
        assert!((c[1].lower + Complex64::new(2.0 * 0.49, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn l1_matches_formula_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let psi: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let c = build_l1(&v, &g, &psi);
        for j in 0..n {
            let (re, im) = (psi[j].re, psi[j].im);
            let rho = re * re + im * im;
            let sq = Complex64::new(re * re - im * im, 2.0 * re * im);
            assert!((c[j].diag - (v[j] + 2.0 * g[j] * rho)).abs() <= 1e-15 * (1.0 + c[j].diag.abs()));
            assert!((c[j].upper - sq * g[j]).norm() <= 1e-15 * (1.0 + c[j].upper.norm()));
            assert!((c[j].lower + sq.conj() * g[j]).norm() <= 1e-15 * (1.0 + c[j].lower.norm()));
        }
    }

    fn taylor_exp(m: [[Complex64; 2]; 2], h: f64) -> [[Complex64; 2]; 2] {
        // oracle: scaling and squaring of a 40-term Taylor series of exp(i h m)
        let s = 6;
        let a: Vec<Vec<Complex64>> = m
            .iter()
            .map(|r| r.iter().map(|z| I * z * h / (1u64 << s) as f64).collect())
            .collect();
        let mul = |x: &[[Complex64; 2]; 2], y: &[[Complex64; 2]; 2]| {
            let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
                }
            }
            r
        };
        let am = [[a[0][0], a[0][1]], [a[1][0], a[1][1]]];
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut sum = [[one, zero], [zero, one]];
        let mut term = sum;
        for n in 1..40 {
            term = mul(&term, &am);
            for row in term.iter_mut() {
                for z in row.iter_mut() {
                    *z /= n as f64;
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..s {
            sum = mul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn exp_l1_reduces_to_phases_without_nonlinearity() {
        let c = build_l1(&[2.3], &[0.0], &[Complex64::new(0.5, 0.5)])[0];
        let m = exp_l1_half(&c, 0.1);
        assert!((m[0][0] - Complex64::from_polar(1.0, 2.3 * 0.05)).norm() < 1e-15);
        assert!((m[1][1] - Complex64::from_polar(1.0, -2.3 * 0.05)).norm() < 1e-15);
        assert_eq!(m[0][1], Complex64::new(0.0, 0.0));
        assert_eq!(m[1][0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn exp_l1_series_limit_at_zero_lambda() {
        // V + 2g|ψ|² = g|ψ|² with V = −g|ψ|²
        let psi = Complex64::new(0.6, 0.0);
        let g = 1.7;
        let c = build_l1(&[-g * 0.36], &[g], &[psi])[0];
        assert!((c.diag.powi(2) - c.upper.norm_sqr()).abs() < 1e-15);
        let dt = 0.02;
        let m = exp_l1_half(&c, dt);
        let l = c.matrix();
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                let expect = Complex64::new(id, 0.0) + I * 0.5 * dt * l[i][j];
                assert!((m[i][j] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn exp_l1_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let v = rng.random_range(-5.0..5.0);
            let g = rng.random_range(-10.0..10.0);
            let psi = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let dt = rng.random_range(0.001..0.5);
            let c = build_l1(&[v], &[g], &[psi])[0];
            let m = exp_l1_half(&c, dt);
            let o = taylor_exp(c.matrix(), 0.5 * dt);
            let scale: f64 = o.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let err: f64 = m
                .iter()
                .flatten()
                .zip(o.iter().flatten())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-12 * scale, "err {err} scale {scale}");
        }
    }

    fn setup(g0: f64, steps: usize) -> (Hamiltonian1D, TimeGrid, WaveField, WaveField) {
        let g = grid();
        let time = TimeGrid::new(PI, steps).unwrap();
        let v = ControlField::from_fn(ControlKind::Potential, g, time, |x, t| {
            0.3 * (0.1 * t - PI * x / 20.0).sin()
        })
        .unwrap();
        let gc = ControlField::from_fn(ControlKind::Nonlinearity, g, time, |x, t| 0.2 * (x * 0.3 + t).cos()).unwrap();
        let ham = Hamiltonian1D::control_free(PhysicalConstants::default(), g, g0)
            .with_controls(v, gc)
            .unwrap();
        (ham, time, hermite(g, false), hermite(g, true))
    }

    #[test]
    fn linear_round_trip_recovers_terminal_adjoint() {
        for scheme in [BackwardScheme::ExactDiscrete, BackwardScheme::MatrixExponential] {
            let g = grid();
            let time = TimeGrid::new(1.0, 60).unwrap();
            let v = ControlField::from_fn(ControlKind::Potential, g, time, |x, t| (x * 0.2 - t).sin()).unwrap();
            let ham = Hamiltonian1D::control_free(PhysicalConstants::default(), g, 0.0)
                .with_control(v)
                .unwrap();
            let psi0 = hermite(g, false);
            let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
            let target = hermite(g, true);
            let target = WaveField::new(
                g,
                target.values().iter().zip(psi0.values()).map(|(a, b)| a + b * 0.3).collect(),
            )
            .unwrap();
            let sweep = backward_sweep(&ham, &traj, &target, scheme).unwrap();
            let p0 = sweep.at(0).p_field();
            let forward = propagate(&p0, &ham, &time).unwrap();
            let pt = sweep.at(time.steps()).p_field();
            assert!(forward.distance(&pt).unwrap() < 1e-10 * pt.norm().max(1e-300));
        }
    }

    #[test]
    fn supervector_norm_changes_under_strong_nonlinearity() {
        let (ham, time, psi0, target) = setup(10.0, 100);
        let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
        let sweep = backward_sweep(&ham, &traj, &target, BackwardScheme::ExactDiscrete).unwrap();
        let n_t = sweep.at(time.steps()).supervector_norm();
        let n_0 = sweep.at(0).supervector_norm();
        assert!(n_t > 0.0);
        assert!((n_0 - n_t).abs() > 1e-6 * n_t, "norm unchanged: {n_0} vs {n_t}");
        assert!(sweep.max_consistency_defect() < 1e-8);
    }

    #[test]
    fn zero_overlap_gives_zero_gradient() {
        let g = grid();
        let time = TimeGrid::new(1.0, 20).unwrap();
        let ham = Hamiltonian1D::control_free(PhysicalConstants::default(), g, 1.0);
        let psi0 = hermite(g, false);
        let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
        // odd target, even evolution: overlap vanishes by symmetry
        let sweep = backward_sweep(&ham, &traj, &hermite(g, true), BackwardScheme::ExactDiscrete).unwrap();
        let grad = gradient(&traj, &sweep, ControlKind::Potential).unwrap();
        assert!(grad.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn symmetric_inputs_give_symmetric_gradient() {
        let g = grid();
        let time = TimeGrid::new(1.0, 40).unwrap();
        let c = g.center();
        let v = ControlField::from_fn(ControlKind::Potential, g, time, |x, t| 0.5 * ((x - c) * 0.4).cos() * t).unwrap();
        let ham = Hamiltonian1D::control_free(PhysicalConstants::default(), g, 2.0)
            .with_control(v)
            .unwrap();
        let psi0 = hermite(g, false);
        let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
        let target = normalize(
            &WaveField::from_fn(g, |x| Complex64::new((-(x - c).powi(2) / 3.0).exp(), 0.0)).unwrap(),
        )
        .unwrap();
        let sweep = backward_sweep(&ham, &traj, &target, BackwardScheme::ExactDiscrete).unwrap();
        for kind in [ControlKind::Potential, ControlKind::Nonlinearity] {
            let grad = gradient(&traj, &sweep, kind).unwrap();
            for k in 0..time.nodes() {
                let row: Vec<Complex64> = grad.at(k).iter().map(|&r| Complex64::new(r, 0.0)).collect();
                if row.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                let f = WaveField::new(g, row).unwrap();
                assert!(crate::field::parity_defect(&f) < 1e-8);
            }
        }
    }

    #[test]
    fn mismatched_sweep_is_rejected() {
        let (ham, time, psi0, target) = setup(1.0, 20);
        let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
        let sweep = backward_sweep(&ham, &traj, &target, BackwardScheme::ExactDiscrete).unwrap();
        let other = propagate_recorded(&target, &ham, &time).unwrap();
        assert!(gradient(&other, &sweep, ControlKind::Potential).is_err());
    }

    fn objective_with(
        ham: &Hamiltonian1D,
        time: &TimeGrid,
        psi0: &WaveField,
        target: &WaveField,
        kind: ControlKind,
        delta: &[f64],
        eps: f64,
    ) -> f64 {
        let base = match kind {
            ControlKind::Potential => ham.potential_control().unwrap(),
            ControlKind::Nonlinearity => ham.nonlinearity_control().unwrap(),
        };
        let vals: Vec<f64> = base.values().iter().zip(delta).map(|(a, d)| a + eps * d).collect();
        let c = ControlField::new(kind, *base.space(), *time, vals).unwrap();
        let h = ham.clone().with_control(c).unwrap();
        let psi_t = propagate(psi0, &h, time).unwrap();
        inner_product(target, &psi_t).unwrap().norm_sqr()
    }

    fn smooth_perturbation(g: &SpatialGrid, time: &TimeGrid, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let mut out = Vec::with_capacity(g.points() * time.nodes());
        for k in 0..time.nodes() {
            let t = time.t(k) / time.duration();
            for x in g.coordinates() {
                let xs = x / g.length();
                let mut s = 0.0;
                for (m, (a, px, pt)) in coeffs.iter().enumerate() {
                    let (mx, mt) = ((m % 3 + 1) as f64, (m / 3 + 1) as f64);
                    s += a * (2.0 * PI * mx * xs + px).sin() * (PI * mt * t + pt).cos();
                }
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn gradient_matches_central_differences() {
        for &g0 in &[0.0, 1.0, 5.0] {
            let (ham, time, psi0, target) = setup(g0, 100);
            let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
            let sweep = backward_sweep(&ham, &traj, &target, BackwardScheme::ExactDiscrete).unwrap();
            for (i, kind) in [ControlKind::Potential, ControlKind::Nonlinearity].into_iter().enumerate() {
                let grad = gradient(&traj, &sweep, kind).unwrap();
                let delta = smooth_perturbation(ham.grid(), &time, 17 + i as u64);
                let analytic = grad.pair(&delta).unwrap();
                let eps = 1e-5;
                let fd = (objective_with(&ham, &time, &psi0, &target, kind, &delta, eps)
                    - objective_with(&ham, &time, &psi0, &target, kind, &delta, -eps))
                    / (2.0 * eps);
                let rel = (analytic - fd).abs() / fd.abs();
                assert!(rel < 1e-4, "g0={g0} {kind:?}: adjoint {analytic} fd {fd} rel {rel}");
            }
        }
    }

    #[test]
    fn matrix_exponential_scheme_is_consistent() {
        // the continuous-adjoint scheme differs from the exact discrete one at O(dt)
        let (ham, time, psi0, target) = setup(1.0, 200);
        let traj = propagate_recorded(&psi0, &ham, &time).unwrap();
        let exact = backward_sweep(&ham, &traj, &target, BackwardScheme::ExactDiscrete).unwrap();
        let cont = backward_sweep(&ham, &traj, &target, BackwardScheme::MatrixExponential).unwrap();
        let delta = smooth_perturbation(ham.grid(), &time, 4);
        let a = gradient(&traj, &exact, ControlKind::Potential).unwrap().pair(&delta).unwrap();
        let b = gradient(&traj, &cont, ControlKind::Potential).unwrap().pair(&delta).unwrap();
        assert!((a - b).abs() / a.abs() < 0.1, "{a} vs {b}");
        assert!(cont.max_consistency_defect() < 1e-8);
    }
}
