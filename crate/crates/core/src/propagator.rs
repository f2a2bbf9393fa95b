//! Real-time evolution under the controlled Gross-Pitaevskii equation
//!
//! ```text
//! iħ ∂ψ/∂t = [ p²/2m + V_trap + V_cont + (g0 + g_cont)|ψ|² ] ψ
//! ```
//!
//! using the symmetric split step
//! `ψ(t+Δt) = e^{-iĤ₁Δt/2ħ} e^{-iH₀Δt/ħ} e^{-iH₁Δt/2ħ} ψ(t)`, where the first
//! potential factor takes the nonlinear term from `|ψ(t)|²` and the last one
//! from the modulus after the kinetic factor (the last factor is a pure phase,
//! so that modulus is already `|ψ(t+Δt)|`). Both potential factors sample the
//! controls at node `t + Δt`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ControlField, ControlKind, WaveField};
use crate::fourier::FftPair;
use crate::grid::{PhysicalConstants, SpatialGrid, TimeGrid};

/// Trap, base nonlinearity and optional space-time controls.
#[derive(Clone, Debug)]
pub struct Hamiltonian1D {
    constants: PhysicalConstants,
    grid: SpatialGrid,
    g0: f64,
    trap: Vec<f64>,
    v_cont: Option<ControlField>,
    g_cont: Option<ControlField>,
}

impl Hamiltonian1D {
    pub fn control_free(constants: PhysicalConstants, grid: SpatialGrid, g0: f64) -> Self {
        Self {
            constants,
            grid,
            g0,
            trap: grid.trap(&constants),
            v_cont: None,
            g_cont: None,
        }
    }

    /// Attach a control. A field that is identically zero is stored anyway so
    /// that grid checks still apply.
    pub fn with_control(mut self, control: ControlField) -> Result<Self> {
        control.space().check_same(&self.grid)?;
        let other = match control.kind() {
            ControlKind::Potential => &self.g_cont,
            ControlKind::Nonlinearity => &self.v_cont,
        };
        if let Some(o) = other {
            o.time().check_same(control.time())?;
        }
        match control.kind() {
            ControlKind::Potential => self.v_cont = Some(control),
            ControlKind::Nonlinearity => self.g_cont = Some(control),
        }
        Ok(self)
    }

    pub fn with_controls(self, v_cont: ControlField, g_cont: ControlField) -> Result<Self> {
        if v_cont.kind() != ControlKind::Potential || g_cont.kind() != ControlKind::Nonlinearity {
            return Err(Error::invalid("expected (potential, nonlinearity) controls"));
        }
        self.with_control(v_cont)?.with_control(g_cont)
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn trap(&self) -> &[f64] {
        &self.trap
    }

    pub fn potential_control(&self) -> Option<&ControlField> {
        self.v_cont.as_ref()
    }

    pub fn nonlinearity_control(&self) -> Option<&ControlField> {
        self.g_cont.as_ref()
    }

    /// Total `V(x_j, t_k) = V_trap + V_cont` written into `out`.
    pub fn potential_at(&self, k: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.trap);
        if let Some(v) = &self.v_cont {
            for (o, c) in out.iter_mut().zip(v.at(k)) {
                *o += c;
            }
        }
    }

    /// Total `g(x_j, t_k) = g0 + g_cont` written into `out`.
    pub fn nonlinearity_at(&self, k: usize, out: &mut [f64]) {
        match &self.g_cont {
            Some(g) => {
                for (o, c) in out.iter_mut().zip(g.at(k)) {
                    *o = self.g0 + c;
                }
            }
            None => out.fill(self.g0),
        }
    }

    /// Checks that attached controls live on `time`.
    pub fn check_time(&self, time: &TimeGrid) -> Result<()> {
        for c in [&self.v_cont, &self.g_cont].into_iter().flatten() {
            c.time().check_same(time)?;
        }
        Ok(())
    }

    /// Minimum of `g0 + g_cont` over all nodes.
    pub fn min_total_nonlinearity(&self) -> f64 {
        match &self.g_cont {
            Some(g) => self.g0 + g.min(),
            None => self.g0,
        }
    }
}

/// Every forward snapshot `ψ(t_k)`, `k = 0..=steps`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    time: TimeGrid,
    snapshots: Vec<WaveField>,
}

impl Trajectory {
    pub fn new(time: TimeGrid, snapshots: Vec<WaveField>) -> Result<Self> {
        if snapshots.len() != time.nodes() {
            return Err(Error::GridMismatch(format!(
                "{} snapshots for {} time nodes",
                snapshots.len(),
                time.nodes()
            )));
        }
        if let Some(first) = snapshots.first() {
            for s in &snapshots[1..] {
                first.grid().check_same(s.grid())?;
            }
        }
        Ok(Self { time, snapshots })
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.snapshots[0].grid()
    }

    pub fn snapshots(&self) -> &[WaveField] {
        &self.snapshots
    }

    pub fn at(&self, k: usize) -> &WaveField {
        &self.snapshots[k]
    }

    pub fn initial(&self) -> &WaveField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &WaveField {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn into_last(mut self) -> WaveField {
        self.snapshots.pop().expect("trajectory is never empty")
    }

    /// `max_k |‖ψ(t_k)‖² − 1|`.
    pub fn max_norm_drift(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| (s.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `exp(−iħk²Δt/2m)` for the FFT wavenumbers of `grid`.
pub(crate) fn kinetic_phases(grid: &SpatialGrid, constants: &PhysicalConstants, dt: f64) -> Vec<Complex64> {
    let c = constants.hbar * dt / (2.0 * constants.mass);
    grid.wavenumbers()
        .into_iter()
        .map(|k| Complex64::from_polar(1.0, -c * k * k))
        .collect()
}

/// Free-particle factor `IFFT[exp(−iħk²Δt/2m) FFT[ψ]]`.
pub fn kinetic_step(psi: &WaveField, constants: &PhysicalConstants, dt: f64) -> WaveField {
    let phases = kinetic_phases(psi.grid(), constants, dt);
    let mut fft = FftPair::new(psi.grid().points());
    let mut v = psi.values().to_vec();
    fft.apply_diagonal(&mut v, &phases);
    WaveField::from_raw(*psi.grid(), v)
}

/// Reusable split-step workspace for one Hamiltonian and one `Δt`.
pub struct SplitStepper<'h> {
    ham: &'h Hamiltonian1D,
    dt: f64,
    fft: FftPair,
    kinetic: Vec<Complex64>,
    v: Vec<f64>,
    g: Vec<f64>,
}

impl<'h> SplitStepper<'h> {
    pub fn new(ham: &'h Hamiltonian1D, dt: f64) -> Self {
        let n = ham.grid.points();
        Self {
            ham,
            dt,
            fft: FftPair::new(n),
            kinetic: kinetic_phases(&ham.grid, &ham.constants, dt),
            v: vec![0.0; n],
            g: vec![0.0; n],
        }
    }

    /// In-place step from node `k_next - 1` to `k_next`.
    pub fn step(&mut self, psi: &mut [Complex64], k_next: usize) -> Result<()> {
        self.ham.potential_at(k_next, &mut self.v);
        self.ham.nonlinearity_at(k_next, &mut self.g);
        let tau = 0.5 * self.dt / self.ham.constants.hbar;
        nonlinear_phase(psi, &self.v, &self.g, tau);
        self.fft.apply_diagonal(psi, &self.kinetic);
        nonlinear_phase(psi, &self.v, &self.g, tau);
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Unstable { step: k_next });
        }
        Ok(())
    }
}

/// `ψ_j <- exp(−iτ(V_j + g_j|ψ_j|²)) ψ_j`.
pub(crate) fn nonlinear_phase(psi: &mut [Complex64], v: &[f64], g: &[f64], tau: f64) {
    for ((z, &vj), &gj) in psi.iter_mut().zip(v).zip(g) {
        let theta = tau * (vj + gj * z.norm_sqr());
        *z *= Complex64::from_polar(1.0, -theta);
    }
}

/// One split step `ψ(t_k) -> ψ(t_{k+1})` with controls sampled at `k_next = k + 1`.
pub fn step_forward(psi: &WaveField, ham: &Hamiltonian1D, k_next: usize, dt: f64) -> Result<WaveField> {
    psi.grid().check_same(&ham.grid)?;
    let mut v = psi.values().to_vec();
    SplitStepper::new(ham, dt).step(&mut v, k_next)?;
    Ok(WaveField::from_raw(*psi.grid(), v))
}

fn check_inputs(psi0: &WaveField, ham: &Hamiltonian1D, time: &TimeGrid) -> Result<()> {
    psi0.grid().check_same(&ham.grid)?;
    ham.check_time(time)
}

/// Final state `ψ(T)` only.
pub fn propagate(psi0: &WaveField, ham: &Hamiltonian1D, time: &TimeGrid) -> Result<WaveField> {
    check_inputs(psi0, ham, time)?;
    let mut v = psi0.values().to_vec();
    if time.duration() > 0.0 {
        let mut stepper = SplitStepper::new(ham, time.dt());
        for k in 1..=time.steps() {
            stepper.step(&mut v, k)?;
        }
    }
    Ok(WaveField::from_raw(*psi0.grid(), v))
}

/// All `steps + 1` snapshots, as required by the adjoint sweep.
pub fn propagate_recorded(psi0: &WaveField, ham: &Hamiltonian1D, time: &TimeGrid) -> Result<Trajectory> {
    check_inputs(psi0, ham, time)?;
    let mut snapshots = Vec::with_capacity(time.nodes());
    snapshots.push(psi0.clone());
    let mut v = psi0.values().to_vec();
    let mut stepper = SplitStepper::new(ham, time.dt());
    for k in 1..=time.steps() {
        if time.duration() > 0.0 {
            stepper.step(&mut v, k)?;
        }
        snapshots.push(WaveField::from_raw(*psi0.grid(), v.clone()));
    }
    Ok(Trajectory {
        time: *time,
        snapshots,
    })
}
