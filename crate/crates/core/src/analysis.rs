//! Spectral and population diagnostics of controlled runs.
//!
//! Time transforms use the nodes `t_k`, `k = 0..steps`, which cover `[0, T)`
//! with `dt = T/steps`; the final node duplicates the period and is dropped.
//! Frequencies are angular, `ω_n = 2πn/T`. The spatial transform is cyclic,
//! `exp(−2πi k_m x)` with `k_m = m/L`, and both are Riemann sums
//! (`dx`, `dt` weights) without windowing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{inner_product, ControlField, ControlKind, WaveField};
use crate::fourier::{dft_time, frequency_bins, FftPair};
use crate::modes::ModeFamily;
use crate::propagator::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    Potential,
    Nonlinearity,
    Combined,
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::Potential => "V",
            SpectrumKind::Nonlinearity => "g",
            SpectrumKind::Combined => "V_plus_g",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum {
    pub kind: SpectrumKind,
    pub omega: Vec<f64>,
    /// Complex transform before squaring.
    pub amplitude: Vec<Complex64>,
    pub power: Vec<f64>,
}

impl PowerSpectrum {
    fn from_series(kind: SpectrumKind, series: &[Complex64], duration: f64) -> Self {
        let amplitude = dft_time(series, duration);
        let power = amplitude.iter().map(|z| z.norm_sqr()).collect();
        Self {
            kind,
            omega: frequency_bins(series.len(), duration),
            amplitude,
            power,
        }
    }

    pub fn bin_width(&self) -> f64 {
        if self.omega.len() > 1 {
            self.omega[1]
        } else {
            0.0
        }
    }

    /// Interior local maxima among the non-negative frequencies, DC excluded.
    pub fn local_maxima(&self) -> Vec<usize> {
        let half = self.power.len() / 2;
        (1..half)
            .filter(|&n| self.power[n] > self.power[n - 1] && self.power[n] >= self.power[n + 1])
            .collect()
    }

    /// Strongest local maximum whose frequency lies within `bins` bin widths
    /// of `omega`.
    pub fn peak_near(&self, omega: f64, bins: f64) -> Option<usize> {
        let tol = bins * self.bin_width() + 1e-12;
        self.local_maxima()
            .into_iter()
            .filter(|&n| (self.omega[n] - omega).abs() <= tol)
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
    }

    /// Index of the largest non-DC bin among the non-negative frequencies.
    pub fn dominant_bin(&self) -> Option<usize> {
        let half = (self.power.len() / 2).max(1);
        (1..=half.min(self.power.len() - 1)).max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
    }
}

/// `Σ_j f(j, k)·dx` for `k = 0..steps`.
fn spatial_sums(n: usize, steps: usize, dx: f64, f: impl Fn(usize, usize) -> f64) -> Vec<Complex64> {
    (0..steps)
        .map(|k| {
            let mut s = 0.0;
            for j in 0..n {
                s += f(j, k);
            }
            Complex64::new(s * dx, 0.0)
        })
        .collect()
}

fn check_trajectory(control: &ControlField, trajectory: &Trajectory) -> Result<()> {
    control.check_grids(trajectory.grid(), trajectory.time())
}

fn densities(trajectory: &Trajectory) -> Vec<Vec<f64>> {
    trajectory.snapshots().iter().map(|s| s.density()).collect()
}

/// `|∫ F_t[V_cont] dx|²`.
pub fn spectrum_v(v_cont: &ControlField) -> PowerSpectrum {
    let (space, time) = (v_cont.space(), v_cont.time());
    let series = spatial_sums(space.points(), time.steps(), space.dx(), |j, k| v_cont.value(j, k));
    PowerSpectrum::from_series(SpectrumKind::Potential, &series, time.duration())
}

/// `(1/L) ∫ |F_t[V_cont]|² dx`: the time power averaged over position.
///
/// The flow never changes `∫ V_cont dx` (a uniform potential only shifts the
/// global phase, so its gradient vanishes), which leaves `spectrum_v` of an
/// optimized control equal to that of its trial. This variant sees the
/// position-dependent part.
pub fn spectrum_v_averaged(v_cont: &ControlField) -> PowerSpectrum {
    let (space, time) = (v_cont.space(), v_cont.time());
    let (n, steps) = (space.points(), time.steps());
    let w = 1.0 / n as f64;
    // amplitude holds the position mean of the transform
    let mut power = vec![0.0; steps];
    let mut amplitude = vec![Complex64::new(0.0, 0.0); steps];
    for j in 0..n {
        let series: Vec<Complex64> = (0..steps).map(|k| Complex64::new(v_cont.value(j, k), 0.0)).collect();
        for ((p, a), z) in power.iter_mut().zip(&mut amplitude).zip(dft_time(&series, time.duration())) {
            *p += z.norm_sqr() * w;
            *a += z * w;
        }
    }
    PowerSpectrum {
        kind: SpectrumKind::Potential,
        omega: frequency_bins(steps, time.duration()),
        amplitude,
        power,
    }
}

/// `|∫ F_t[g_cont |ψ|²] dx|²`.
pub fn spectrum_g(g_cont: &ControlField, trajectory: &Trajectory) -> Result<PowerSpectrum> {
    check_trajectory(g_cont, trajectory)?;
    let rho = densities(trajectory);
    let (space, time) = (g_cont.space(), g_cont.time());
    let series = spatial_sums(space.points(), time.steps(), space.dx(), |j, k| g_cont.value(j, k) * rho[k][j]);
    Ok(PowerSpectrum::from_series(SpectrumKind::Nonlinearity, &series, time.duration()))
}

/// `|∫ F_t[V_cont + g_cont |ψ|²] dx|²`.
pub fn spectrum_dual(v_cont: &ControlField, g_cont: &ControlField, trajectory: &Trajectory) -> Result<PowerSpectrum> {
    check_trajectory(v_cont, trajectory)?;
    check_trajectory(g_cont, trajectory)?;
    let rho = densities(trajectory);
    let (space, time) = (v_cont.space(), v_cont.time());
    let series = spatial_sums(space.points(), time.steps(), space.dx(), |j, k| {
        v_cont.value(j, k) + g_cont.value(j, k) * rho[k][j]
    });
    Ok(PowerSpectrum::from_series(SpectrumKind::Combined, &series, time.duration()))
}

/// `‖P_dual − P_V‖₁ / ‖P_dual‖₁`.
pub fn dual_spectrum_ratio(dual: &PowerSpectrum, v: &PowerSpectrum) -> Result<f64> {
    if dual.power.len() != v.power.len() {
        return Err(Error::invalid("spectra have different lengths"));
    }
    let num: f64 = dual.power.iter().zip(&v.power).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = dual.power.iter().sum();
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// `|F_{x,t}[f]|²` on `k_m = m/L` (rows) × `ω_n = 2πn/T` (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum2D {
    pub wavenumbers: Vec<f64>,
    pub omega: Vec<f64>,
    /// Row-major `[m * omega.len() + n]`.
    pub amplitude: Vec<Complex64>,
    pub power: Vec<f64>,
}

impl Spectrum2D {
    pub fn rows(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn cols(&self) -> usize {
        self.omega.len()
    }

    pub fn at(&self, m: usize, n: usize) -> f64 {
        self.power[m * self.cols() + n]
    }

    /// Power summed over the non-zero wavenumbers, per frequency bin; the DC
    /// row is left out as in the plotted spectra.
    pub fn frequency_marginal(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|n| (1..self.rows()).map(|m| self.at(m, n)).sum())
            .collect()
    }

    /// `(m, n)` of the largest entry with `m ≠ 0`, `n ≠ 0`, restricted to
    /// non-negative frequencies.
    pub fn dominant_off_dc(&self) -> Option<(usize, usize)> {
        let half = self.cols() / 2;
        let mut best: Option<(usize, usize)> = None;
        for m in 1..self.rows() {
            for n in 1..=half.min(self.cols().saturating_sub(1)) {
                if best.is_none_or(|(a, b)| self.at(m, n) > self.at(a, b)) {
                    best = Some((m, n));
                }
            }
        }
        best
    }
}

/// 2-D transform of a raw real field given node-major on `(N, steps)`.
pub fn spectrum_2d_raw(values: &[f64], points: usize, steps: usize, length: f64, duration: f64) -> Result<Spectrum2D> {
    if values.len() < points * steps {
        return Err(Error::invalid("field shorter than points × steps"));
    }
    let dx = length / points as f64;
    let mut fft = FftPair::new(points);
    // space transform of every time slice, stored row = wavenumber
    let mut by_k = vec![Complex64::new(0.0, 0.0); points * steps];
    let mut buf = vec![Complex64::new(0.0, 0.0); points];
    for k in 0..steps {
        for (b, v) in buf.iter_mut().zip(&values[k * points..(k + 1) * points]) {
            *b = Complex64::new(*v * dx, 0.0);
        }
        fft.forward(&mut buf);
        for m in 0..points {
            by_k[m * steps + k] = buf[m];
        }
    }
    let mut amplitude = Vec::with_capacity(points * steps);
    for m in 0..points {
        amplitude.extend(dft_time(&by_k[m * steps..(m + 1) * steps], duration));
    }
    let power = amplitude.iter().map(|z| z.norm_sqr()).collect();
    Ok(Spectrum2D {
        wavenumbers: (0..points).map(|m| m as f64 / length).collect(),
        omega: frequency_bins(steps, duration),
        amplitude,
        power,
    })
}

/// 2-D spectrum of `V_cont`, or of `g_cont|ψ|²` when `control` is a
/// nonlinearity field (then `trajectory` is required).
pub fn spectrum_2d(control: &ControlField, trajectory: Option<&Trajectory>) -> Result<Spectrum2D> {
    let (space, time) = (control.space(), control.time());
    let n = space.points();
    let field: Vec<f64> = match control.kind() {
        ControlKind::Potential => control.values()[..n * time.steps()].to_vec(),
        ControlKind::Nonlinearity => {
            let traj = trajectory.ok_or_else(|| Error::Missing("trajectory for the nonlinearity spectrum".into()))?;
            check_trajectory(control, traj)?;
            let mut out = Vec::with_capacity(n * time.steps());
            for k in 0..time.steps() {
                let rho = traj.at(k).density();
                out.extend(control.at(k).iter().zip(&rho).map(|(g, r)| g * r));
            }
            out
        }
    };
    spectrum_2d_raw(&field, n, time.steps(), space.length(), time.duration())
}

/// `P_{0→j}(t_k) = |⟨φ_j|ψ(t_k)⟩|²` at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub modes: Vec<usize>,
    /// `values[i][k]` for mode `modes[i]`.
    pub values: Vec<Vec<f64>>,
}

impl PopulationTrace {
    pub fn of_mode(&self, j: usize) -> Option<&[f64]> {
        self.modes.iter().position(|&m| m == j).map(|i| self.values[i].as_slice())
    }
}

pub fn population_trace(trajectory: &Trajectory, family: &ModeFamily, modes: &[usize]) -> Result<PopulationTrace> {
    let mut values = Vec::with_capacity(modes.len());
    for &j in modes {
        let phi = &family
            .mode(j)
            .ok_or_else(|| Error::Missing(format!("mode {j} for g0 = {}", family.g0)))?
            .field;
        let row = trajectory
            .snapshots()
            .iter()
            .map(|s| inner_product(phi, s).map(|z| z.norm_sqr()))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    let time = trajectory.time();
    Ok(PopulationTrace {
        times: (0..time.nodes()).map(|k| time.t(k)).collect(),
        modes: modes.to_vec(),
        values,
    })
}

/// `|φ_f*(x)φ₀(x)|` and the power of its spatial transform.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapProfile {
    pub profile: Vec<f64>,
    pub wavenumbers: Vec<f64>,
    /// `|F_x[φ_f*φ₀]|²` scaled so that its maximum is 1.
    pub power: Vec<f64>,
}

pub fn target_overlap_profile(phi_0: &WaveField, phi_f: &WaveField) -> Result<OverlapProfile> {
    phi_0.grid().check_same(phi_f.grid())?;
    let grid = *phi_0.grid();
    let product: Vec<Complex64> = phi_f
        .values()
        .iter()
        .zip(phi_0.values())
        .map(|(f, z)| f.conj() * z)
        .collect();
    let profile = product.iter().map(|z| z.norm()).collect();
    let mut buf: Vec<Complex64> = product.iter().map(|z| z * grid.dx()).collect();
    FftPair::new(grid.points()).forward(&mut buf);
    let raw: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    let power = if peak > 0.0 {
        raw.iter().map(|p| p / peak).collect()
    } else {
        raw
    };
    Ok(OverlapProfile {
        profile,
        wavenumbers: (0..grid.points()).map(|m| m as f64 / grid.length()).collect(),
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
    use crate::modes::{build_mode_families, harmonic_trial, SaitpConfig};
    use crate::propagator::{propagate_recorded, Hamiltonian1D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn naive_2d(values: &[f64], points: usize, steps: usize, length: f64, duration: f64) -> Vec<Complex64> {
        // oracle: nested sums straight from the definition
        let dx = length / points as f64;
        let dt = duration / steps as f64;
        let mut out = Vec::with_capacity(points * steps);
        for m in 0..points {
            let km = m as f64 / length;
            for n in 0..steps {
                let w = 2.0 * PI * n as f64 / duration;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..steps {
                    for j in 0..points {
                        let phase = -w * k as f64 * dt - 2.0 * PI * km * j as f64 * dx;
                        acc += Complex64::from_polar(values[k * points + j], phase);
                    }
                }
                out.push(acc * dx * dt);
            }
        }
        out
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn two_d_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(n, s) in &[(8usize, 6usize), (16, 20), (10, 33)] {
            let v: Vec<f64> = (0..n * s).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = spectrum_2d_raw(&v, n, s, 3.0, 2.0).unwrap();
            let b = naive_2d(&v, n, s, 3.0, 2.0);
            assert!(rel_err(&a.amplitude, &b) < 1e-10);
        }
    }

    #[test]
    fn two_d_is_separable() {
        let (n, s) = (12, 18);
        let u: Vec<f64> = (0..n).map(|j| (j as f64 * 0.7).sin() + 0.2).collect();
        let w: Vec<f64> = (0..s).map(|k| (k as f64 * 0.3).cos()).collect();
        let mut f = Vec::new();
        for wk in &w {
            f.extend(u.iter().map(|uj| uj * wk));
        }
        let spec = spectrum_2d_raw(&f, n, s, 5.0, 4.0).unwrap();
        let mut ux: Vec<Complex64> = u.iter().map(|v| Complex64::new(v * 5.0 / n as f64, 0.0)).collect();
        FftPair::new(n).forward(&mut ux);
        let wt = dft_time(&w.iter().map(|v| Complex64::new(*v, 0.0)).collect::<Vec<_>>(), 4.0);
        for (m, u) in ux.iter().enumerate() {
            for (q, w) in wt.iter().enumerate() {
                assert!((spec.amplitude[m * s + q] - u * w).norm() < 1e-12);
            }
        }
    }

    fn control(kind: ControlKind, space: SpatialGrid, time: TimeGrid, f: impl Fn(f64, f64) -> f64) -> ControlField {
        ControlField::from_fn(kind, space, time, f).unwrap()
    }

    #[test]
    fn pure_tone_lands_in_its_bin() {
        let space = SpatialGrid::new(20.0, 32).unwrap();
        let time = TimeGrid::new(10.0, 200).unwrap();
        let w = 2.0 * PI * 4.0 / 10.0;
        let v = control(ControlKind::Potential, space, time, |_, t| (w * t).sin());
        let s = spectrum_v(&v);
        assert_eq!(s.dominant_bin(), Some(4));
        assert_eq!(s.peak_near(w, 1.0), Some(4));
        let c = control(ControlKind::Potential, space, time, |_, _| 0.7);
        let s = spectrum_v(&c);
        assert!((s.power[0] - (0.7f64 * 20.0 * 10.0).powi(2)).abs() < 1e-8);
        assert!(s.power[1..].iter().all(|p| *p < 1e-18 * s.power[0]));
    }

    #[test]
    fn off_grid_tone_peaks_at_nearest_bin() {
        let space = SpatialGrid::new(20.0, 16).unwrap();
        let time = TimeGrid::new(10.0, 400).unwrap();
        let v = control(ControlKind::Potential, space, time, |_, t| (4.2 * t).sin());
        let s = spectrum_v(&v);
        let nearest = (4.2 / s.bin_width()).round() as usize;
        assert_eq!(s.dominant_bin(), Some(nearest));
    }

    #[test]
    fn parseval_in_discrete_form() {
        let space = SpatialGrid::new(20.0, 16).unwrap();
        let time = TimeGrid::new(3.0, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..16 * 51).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = ControlField::new(ControlKind::Potential, space, time, vals).unwrap();
        let s = spectrum_v(&v);
        let series = spatial_sums(16, 50, space.dx(), |j, k| v.value(j, k));
        let lhs: f64 = s.power.iter().sum();
        let dt = time.dt();
        let rhs = 50.0 * dt * dt * series.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    fn small_run() -> (ControlField, ControlField, Trajectory) {
        let space = SpatialGrid::new(20.0, 32).unwrap();
        let time = TimeGrid::new(2.0, 40).unwrap();
        let c = PhysicalConstants::default();
        let v = control(ControlKind::Potential, space, time, |x, t| (t - x * 0.1).sin());
        let g = control(ControlKind::Nonlinearity, space, time, |x, t| 0.5 * (t + x).cos());
        let ham = Hamiltonian1D::control_free(c, space, 1.0)
            .with_controls(v.clone(), g.clone())
            .unwrap();
        let traj = propagate_recorded(&harmonic_trial(0, &space, &c).unwrap(), &ham, &time).unwrap();
        (v, g, traj)
    }

    #[test]
    fn dual_spectrum_reduces_bitwise() {
        let (v, g, traj) = small_run();
        let zero_g = ControlField::zeros(ControlKind::Nonlinearity, *v.space(), *v.time());
        let zero_v = ControlField::zeros(ControlKind::Potential, *v.space(), *v.time());
        assert_eq!(spectrum_dual(&v, &zero_g, &traj).unwrap().power, spectrum_v(&v).power);
        assert_eq!(spectrum_dual(&zero_v, &g, &traj).unwrap().power, spectrum_g(&g, &traj).unwrap().power);
        let zs = spectrum_g(&zero_g, &traj).unwrap();
        assert!(zs.power.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn dual_transform_is_linear() {
        let (v, g, traj) = small_run();
        let d = spectrum_dual(&v, &g, &traj).unwrap();
        let a = spectrum_v(&v);
        let b = spectrum_g(&g, &traj).unwrap();
        for i in 0..d.amplitude.len() {
            assert!((d.amplitude[i] - a.amplitude[i] - b.amplitude[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn mismatched_trajectory_rejected() {
        let (_, g, _) = small_run();
        let space = *g.space();
        let other_time = TimeGrid::new(2.0, 20).unwrap();
        let ham = Hamiltonian1D::control_free(PhysicalConstants::default(), space, 1.0);
        let psi = harmonic_trial(0, &space, &PhysicalConstants::default()).unwrap();
        let traj = propagate_recorded(&psi, &ham, &other_time).unwrap();
        assert!(spectrum_g(&g, &traj).is_err());
        assert!(spectrum_2d(&g, Some(&traj)).is_err());
        assert!(spectrum_2d(&g, None).is_err());
    }

    #[test]
    fn populations_and_profiles() {
        let c = PhysicalConstants::default();
        let space = SpatialGrid::default();
        let fam = &build_mode_families(&[1.0], 2, &space, &c, &SaitpConfig::default()).unwrap()[0];
        let time = TimeGrid::new(10.0, 500).unwrap();
        let ham = Hamiltonian1D::control_free(c, space, 1.0);
        let traj = propagate_recorded(&fam.mode(0).unwrap().field, &ham, &time).unwrap();
        let trace = population_trace(&traj, fam, &[0, 1, 2]).unwrap();
        assert!((trace.of_mode(0).unwrap()[0] - 1.0).abs() < 1e-12);
        let a02 = inner_product(&fam.mode(0).unwrap().field, &fam.mode(2).unwrap().field)
            .unwrap()
            .norm_sqr();
        assert!((trace.of_mode(2).unwrap()[0] - a02).abs() < 1e-12);
        assert!(trace.of_mode(0).unwrap().iter().all(|p| *p > 1.0 - 1e-3));
        assert!(trace.values.iter().flatten().all(|p| *p <= 1.0 + 1e-6));

        let phi0 = &fam.mode(0).unwrap().field;
        let same = target_overlap_profile(phi0, phi0).unwrap();
        let dens = phi0.density();
        for (a, b) in same.profile.iter().zip(&dens) {
            assert!((a - b).abs() < 1e-14);
        }
        let prof = target_overlap_profile(phi0, &fam.mode(2).unwrap().field).unwrap();
        let integral: f64 = prof.profile.iter().sum::<f64>() * space.dx();
        let direct = inner_product(&fam.mode(2).unwrap().field, phi0).unwrap().norm();
        assert!(direct <= integral + 1e-14);
        assert!((prof.power.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-15);
    }
}
