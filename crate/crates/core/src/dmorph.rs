//! Mode-to-mode transition objective and its maximization by gradient flow
//! in an artificial trajectory variable `s`:
//!
//! ```text
//! ∂c(s,x,t)/∂s = δP_{0→f}/δc(s,x,t)
//! ```
//!
//! so that `dP/ds = ∫∫ (δP/δc)² dx dt ≥ 0`. The flow is integrated with an
//! adaptive Dormand–Prince pair (or fixed RK4 on request) and every accepted
//! integrator step counts as one optimization step.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{backward_sweep, gradient, BackwardScheme, GradientField};
use crate::error::{Error, Result};
use crate::field::{inner_product, ControlField, ControlKind, WaveField};
use crate::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use crate::modes::ModeFamily;
use crate::ode::{Accepted, Dopri5, Dopri5Config, Evaluation, Rk4};
use crate::propagator::{propagate_recorded, Hamiltonian1D};

/// `P = |⟨φ_f|ψ(T)⟩|²`.
pub fn objective(psi_t: &WaveField, phi_f: &WaveField) -> Result<f64> {
    Ok(inner_product(phi_f, psi_t)?.norm_sqr())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    PotentialOnly,
    Dual,
    NonlinearityOnly,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PotentialOnly => "potential",
            ScenarioKind::Dual => "dual",
            ScenarioKind::NonlinearityOnly => "nonlinearity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "potential" | "potential_only" => Some(ScenarioKind::PotentialOnly),
            "dual" => Some(ScenarioKind::Dual),
            "nonlinearity" | "nonlinearity_only" => Some(ScenarioKind::NonlinearityOnly),
            _ => None,
        }
    }

    pub fn varies_potential(self) -> bool {
        matches!(self, ScenarioKind::PotentialOnly | ScenarioKind::Dual)
    }

    pub fn varies_nonlinearity(self) -> bool {
        matches!(self, ScenarioKind::Dual | ScenarioKind::NonlinearityOnly)
    }
}

#[derive(Clone, Debug)]
pub struct ControlScenario {
    pub kind: ScenarioKind,
    /// Fixed potential used by the nonlinearity-only scenario in place of the
    /// sinusoidal trial.
    pub frozen_background: Option<ControlField>,
}

impl ControlScenario {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            frozen_background: None,
        }
    }
}

/// Spatial phase `α(x)` of the sinusoidal potential trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseProfile {
    /// `α(x) = π/L`.
    Symmetric,
    /// `α(x) = πx/L`.
    SpatiallyDependent,
}

impl PhaseProfile {
    pub fn name(self) -> &'static str {
        match self {
            PhaseProfile::Symmetric => "symmetric",
            PhaseProfile::SpatiallyDependent => "spatial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "symmetric" => Some(PhaseProfile::Symmetric),
            "spatial" | "spatially_dependent" => Some(PhaseProfile::SpatiallyDependent),
            _ => None,
        }
    }

    pub fn alpha(self, x: f64, length: f64) -> f64 {
        match self {
            PhaseProfile::Symmetric => std::f64::consts::PI / length,
            PhaseProfile::SpatiallyDependent => std::f64::consts::PI * x / length,
        }
    }
}

/// Trial controls `V = a sin(ω_v t − α(x))`, `g_cont = g_const`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialGuess {
    pub amplitude: f64,
    pub phase: PhaseProfile,
    pub omega_v: f64,
    /// Constant nonlinearity trial for the scenarios that vary `g_cont`.
    pub g_const: f64,
    /// Use `g_cont = g_const` instead of zero for potential-only control.
    pub literal_potential_only_g: bool,
}

impl InitialGuess {
    /// `ω_v = ω/10`, `g_const = 0`.
    pub fn new(amplitude: f64, phase: PhaseProfile, constants: &PhysicalConstants) -> Self {
        Self {
            amplitude,
            phase,
            omega_v: constants.omega / 10.0,
            g_const: 0.0,
            literal_potential_only_g: false,
        }
    }

    pub fn with_g_const(mut self, g: f64) -> Self {
        self.g_const = g;
        self
    }

    pub fn potential(&self, x: f64, t: f64, length: f64) -> f64 {
        self.amplitude * (self.omega_v * t - self.phase.alpha(x, length)).sin()
    }
}

/// Samples the trial controls for a scenario. Returns `(V_cont, g_cont)`.
pub fn initial_controls(
    guess: &InitialGuess,
    scenario: &ControlScenario,
    g0: f64,
    space: &SpatialGrid,
    time: &TimeGrid,
) -> Result<(ControlField, ControlField)> {
    if !(guess.amplitude.is_finite() && guess.omega_v.is_finite() && guess.g_const.is_finite()) {
        return Err(Error::invalid("initial guess parameters must be finite"));
    }
    let len = space.length();
    let trial_v = || ControlField::from_fn(ControlKind::Potential, *space, *time, |x, t| guess.potential(x, t, len));
    let constant_g = |g: f64| ControlField::from_fn(ControlKind::Nonlinearity, *space, *time, |_, _| g);
    match scenario.kind {
        ScenarioKind::PotentialOnly => {
            if scenario.frozen_background.is_some() {
                return Err(Error::invalid("a frozen background only applies to nonlinearity-only control"));
            }
            let g = if guess.literal_potential_only_g { guess.g_const } else { 0.0 };
            Ok((trial_v()?, constant_g(g)?))
        }
        ScenarioKind::Dual | ScenarioKind::NonlinearityOnly => {
            if g0 + guess.g_const <= 0.0 {
                return Err(Error::invalid(format!(
                    "trial nonlinearity g0 + g_const = {} must be positive",
                    g0 + guess.g_const
                )));
            }
            let v = match (&scenario.frozen_background, scenario.kind) {
                (Some(_), ScenarioKind::Dual) => {
                    return Err(Error::invalid("a frozen background only applies to nonlinearity-only control"));
                }
                (Some(bg), _) => {
                    if bg.kind() != ControlKind::Potential {
                        return Err(Error::invalid("frozen background must be a potential field"));
                    }
                    bg.check_grids(space, time)?;
                    bg.clone()
                }
                (None, _) => trial_v()?,
            };
            Ok((v, constant_g(guess.g_const)?))
        }
    }
}

/// Forward/adjoint evaluation of one set of controls.
#[derive(Clone, Debug)]
pub struct FlowEvaluation {
    pub objective: f64,
    pub overlap: Complex64,
    pub potential: Option<GradientField>,
    pub nonlinearity: Option<GradientField>,
}

impl FlowEvaluation {
    /// `⟨∇P, ∇P⟩` over the free controls.
    pub fn tangent_norm_sqr(&self) -> f64 {
        [&self.potential, &self.nonlinearity]
            .into_iter()
            .flatten()
            .map(|g| g.norm_sqr())
            .sum()
    }

    fn concat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in [&self.potential, &self.nonlinearity].into_iter().flatten() {
            out.extend_from_slice(g.values());
        }
        out
    }
}

/// Gradients of `P` for the free controls of `scenario`, from a single
/// forward propagation and a single adjoint sweep.
pub fn flow_rhs(
    ham: &Hamiltonian1D,
    psi0: &WaveField,
    phi_f: &WaveField,
    time: &TimeGrid,
    scenario: ScenarioKind,
    scheme: BackwardScheme,
) -> Result<FlowEvaluation> {
    let traj = propagate_recorded(psi0, ham, time)?;
    let sweep = backward_sweep(ham, &traj, phi_f, scheme)?;
    let potential = if scenario.varies_potential() {
        Some(gradient(&traj, &sweep, ControlKind::Potential)?)
    } else {
        None
    };
    let nonlinearity = if scenario.varies_nonlinearity() {
        Some(gradient(&traj, &sweep, ControlKind::Nonlinearity)?)
    } else {
        None
    };
    Ok(FlowEvaluation {
        objective: sweep.objective(),
        overlap: sweep.overlap(),
        potential,
        nonlinearity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    Converged,
    StepCap,
    Stalled,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::Converged => "converged",
            TerminationReason::StepCap => "step_cap",
            TerminationReason::Stalled => "stalled",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub ode: Dopri5Config,
    /// Replace the adaptive pair by RK4 with this fixed step in `s`.
    pub fixed_step_rk4: Option<f64>,
    pub stop_p: f64,
    pub max_steps: usize,
    /// Stall when `P` grows by less than `stall_tol` over this many accepted
    /// steps; zero disables the check.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Seeded uniform perturbation of the free initial controls.
    pub noise: Option<NoiseSpec>,
    /// Keep the controls after every `n`-th accepted step.
    pub record_every: Option<usize>,
    pub scheme: BackwardScheme,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            ode: Dopri5Config::default(),
            fixed_step_rk4: None,
            stop_p: 0.99,
            max_steps: 200,
            stall_window: 10,
            stall_tol: 1e-8,
            noise: None,
            record_every: None,
            scheme: BackwardScheme::ExactDiscrete,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlSnapshot {
    pub step: usize,
    pub s: f64,
    pub potential: ControlField,
    pub nonlinearity: ControlField,
}

#[derive(Clone, Debug)]
pub struct OptimizationRun {
    pub scenario: ScenarioKind,
    pub guess: InitialGuess,
    pub g0: f64,
    pub target: usize,
    pub time: TimeGrid,
    /// `P` at `s = 0` and after every accepted step.
    pub history: Vec<f64>,
    /// Trajectory variable matching `history`.
    pub s_values: Vec<f64>,
    pub rejected_steps: usize,
    pub evaluations: usize,
    pub termination: TerminationReason,
    pub initial_tangent_norm: f64,
    /// Controls at `s = 0`, noise included.
    pub initial_potential: ControlField,
    pub initial_nonlinearity: ControlField,
    pub potential: ControlField,
    pub nonlinearity: ControlField,
    pub snapshots: Vec<ControlSnapshot>,
    /// Minimum of `g0 + g_cont` over the final controls.
    pub min_total_g: f64,
}

impl OptimizationRun {
    pub fn final_objective(&self) -> f64 {
        *self.history.last().expect("history starts with the initial value")
    }

    pub fn accepted_steps(&self) -> usize {
        self.history.len() - 1
    }

    /// Largest decrease of `P` between consecutive accepted steps.
    pub fn worst_dip(&self) -> f64 {
        self.history
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

/// How the flat state vector of the flow maps onto the two control fields.
struct ControlLayout {
    kind: ScenarioKind,
    space: SpatialGrid,
    time: TimeGrid,
    fixed_v: ControlField,
    fixed_g: ControlField,
}

impl ControlLayout {
    fn split(&self, y: &[f64]) -> Result<(ControlField, ControlField)> {
        let n = self.fixed_v.values().len();
        let field = |kind, vals: &[f64]| ControlField::new(kind, self.space, self.time, vals.to_vec());
        Ok(match self.kind {
            ScenarioKind::PotentialOnly => (field(ControlKind::Potential, y)?, self.fixed_g.clone()),
            ScenarioKind::NonlinearityOnly => (self.fixed_v.clone(), field(ControlKind::Nonlinearity, y)?),
            ScenarioKind::Dual => (
                field(ControlKind::Potential, &y[..n])?,
                field(ControlKind::Nonlinearity, &y[n..])?,
            ),
        })
    }
}

struct FlowContext<'a> {
    layout: &'a ControlLayout,
    base: Hamiltonian1D,
    psi0: &'a WaveField,
    phi_f: &'a WaveField,
    scheme: BackwardScheme,
    evaluations: usize,
}

impl FlowContext<'_> {
    fn evaluate(&mut self, y: &[f64]) -> Result<Evaluation<f64>> {
        self.evaluations += 1;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { step: 0 });
        }
        let (v, g) = self.layout.split(y)?;
        let ham = self.base.clone().with_controls(v, g)?;
        let ev = flow_rhs(&ham, self.psi0, self.phi_f, &self.layout.time, self.layout.kind, self.scheme)?;
        Ok(Evaluation {
            derivative: ev.concat(),
            aux: ev.objective,
        })
    }
}

enum Integrator {
    Adaptive(Dopri5<f64>),
    Fixed(Rk4<f64>),
}

impl Integrator {
    fn step<F>(&mut self, y: &[f64], rhs: &mut F) -> Result<Accepted>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<f64>>,
    {
        match self {
            Integrator::Adaptive(d) => d.step(y, rhs),
            Integrator::Fixed(r) => r.step(y, rhs),
        }
    }

    fn start<F>(&mut self, y: &[f64], rhs: &mut F) -> Result<Evaluation<f64>>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<f64>>,
    {
        match self {
            Integrator::Adaptive(d) => d.start(y, rhs).cloned(),
            Integrator::Fixed(r) => r.start(y, rhs).cloned(),
        }
    }

    fn current_objective(&self) -> f64 {
        match self {
            Integrator::Adaptive(d) => d.current().expect("started").aux,
            Integrator::Fixed(r) => r.current().expect("started").aux,
        }
    }
}

/// Maximizes `P_{0→target}` starting from mode 0 of `family`.
pub fn run_optimization(
    family: &ModeFamily,
    target: usize,
    scenario: &ControlScenario,
    guess: &InitialGuess,
    time: &TimeGrid,
    constants: &PhysicalConstants,
    settings: &OptimizerSettings,
) -> Result<OptimizationRun> {
    let space = *family
        .mode(0)
        .ok_or_else(|| Error::Missing(format!("ground mode for g0 = {}", family.g0)))?
        .field
        .grid();
    let (v0, g0c) = initial_controls(guess, scenario, family.g0, &space, time)?;
    run_from_controls(family, target, scenario.kind, guess, v0, g0c, constants, settings)
}

/// Like [`run_optimization`] but starting from explicit controls, e.g. the
/// refined result of an earlier run. `guess` is only carried as metadata.
#[allow(clippy::too_many_arguments)]
pub fn run_from_controls(
    family: &ModeFamily,
    target: usize,
    kind: ScenarioKind,
    guess: &InitialGuess,
    v0: ControlField,
    g0c: ControlField,
    constants: &PhysicalConstants,
    settings: &OptimizerSettings,
) -> Result<OptimizationRun> {
    let psi0 = &family
        .mode(0)
        .ok_or_else(|| Error::Missing(format!("ground mode for g0 = {}", family.g0)))?
        .field;
    let phi_f = &family
        .mode(target)
        .ok_or_else(|| Error::Missing(format!("mode {target} for g0 = {}", family.g0)))?
        .field;
    let space = *psi0.grid();
    let time = v0.time();
    v0.check_grids(&space, time)?;
    g0c.check_grids(&space, time)?;
    if v0.kind() != ControlKind::Potential || g0c.kind() != ControlKind::Nonlinearity {
        return Err(Error::invalid("expected (potential, nonlinearity) controls"));
    }
    let time = *time;
    let time = &time;

    let mut y = Vec::new();
    if kind.varies_potential() {
        y.extend_from_slice(v0.values());
    }
    if kind.varies_nonlinearity() {
        y.extend_from_slice(g0c.values());
    }
    if let Some(noise) = settings.noise {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for v in &mut y {
            *v += noise.amplitude * rng.random_range(-1.0..=1.0);
        }
    }

    let layout = ControlLayout {
        kind,
        space,
        time: *time,
        fixed_v: v0,
        fixed_g: g0c,
    };
    let (initial_potential, initial_nonlinearity) = layout.split(&y)?;
    let mut ctx = FlowContext {
        layout: &layout,
        base: Hamiltonian1D::control_free(*constants, space, family.g0),
        psi0,
        phi_f,
        scheme: settings.scheme,
        evaluations: 0,
    };
    let mut integrator = match settings.fixed_step_rk4 {
        Some(h) => Integrator::Fixed(Rk4::new(h)?),
        None => Integrator::Adaptive(Dopri5::new(settings.ode)?),
    };
    let mut rhs = |y: &[f64]| ctx.evaluate(y);
    let first = integrator.start(&y, &mut rhs)?;
    let initial_tangent_norm = {
        let w = space.dx() * time.dt();
        (first.derivative.iter().map(|g| g * g).sum::<f64>() * w).sqrt()
    };

    let mut history = vec![first.aux];
    let mut s_values = vec![0.0];
    let mut snapshots = Vec::new();
    let mut rejected = 0;
    let mut s = 0.0;
    let termination = loop {
        let p = *history.last().expect("non-empty");
        if p > settings.stop_p {
            break TerminationReason::Converged;
        }
        let steps = history.len() - 1;
        if steps >= settings.max_steps {
            break TerminationReason::StepCap;
        }
        if settings.stall_window > 0
            && steps >= settings.stall_window
            && p - history[steps - settings.stall_window] < settings.stall_tol
        {
            break TerminationReason::Stalled;
        }
        let acc = integrator.step(&y, &mut rhs)?;
        rejected += acc.rejections;
        s += acc.h;
        y = acc.y;
        history.push(integrator.current_objective());
        s_values.push(s);
        if let Some(every) = settings.record_every {
            let step = history.len() - 1;
            if every > 0 && step % every == 0 {
                let (potential, nonlinearity) = layout.split(&y)?;
                snapshots.push(ControlSnapshot {
                    step,
                    s,
                    potential,
                    nonlinearity,
                });
            }
        }
    };
    let (potential, nonlinearity) = layout.split(&y)?;
    let min_total_g = family.g0 + nonlinearity.min();
    Ok(OptimizationRun {
        scenario: kind,
        guess: *guess,
        g0: family.g0,
        target,
        time: *time,
        history,
        s_values,
        rejected_steps: rejected,
        evaluations: ctx.evaluations,
        termination,
        initial_tangent_norm,
        initial_potential,
        initial_nonlinearity,
        potential,
        nonlinearity,
        snapshots,
        min_total_g,
    })
}
