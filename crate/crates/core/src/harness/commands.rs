//! The batch commands behind the `gpec` binary.
//!
//! Each command first assembles every output file in memory, then either
//! writes them or, with `check`, compares them byte for byte against what
//! is already on disk.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{RunConfig, TRIAL_TOTAL_G};
use super::files::FieldFile;
use super::table::{num, Table};
use crate::analysis::{population_trace, spectrum_2d, spectrum_dual, spectrum_g, spectrum_v, spectrum_v_averaged, target_overlap_profile, PowerSpectrum, Spectrum2D};
use crate::dmorph::{run_from_controls, run_optimization, OptimizationRun, ScenarioKind, TerminationReason};
use crate::error::{Error, Result};
use crate::field::{inner_product, parity_defect, ControlField, ControlKind, WaveField};
use crate::grid::{PhysicalConstants, SpatialGrid};
use crate::modes::{default_stability_time, harmonic_trial, mode_energy, mode_residual, saitp_find_mode, stability_distance, CoherentMode, ModeFamily};
use crate::propagator::{propagate_recorded, Hamiltonian1D, Trajectory};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Io(_) | Error::Corrupt { .. } | Error::Version(_) | Error::Missing(_) | Error::GridMismatch(_) => EXIT_IO,
        Error::ZeroField | Error::Unstable { .. } | Error::NotConverged(_) => 1,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// Some members did not converge or stalled.
    pub partial: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.partial {
            EXIT_PARTIAL
        } else {
            EXIT_OK
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Artifacts(Vec<(PathBuf, Vec<u8>)>);

impl Artifacts {
    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.0.push((path, bytes));
    }

    pub fn field(&mut self, path: PathBuf, f: &FieldFile) {
        self.add(path, f.to_bytes());
    }

    pub fn table(&mut self, path: PathBuf, t: &Table) {
        self.add(path, t.to_bytes());
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        self.0.iter().map(|(p, _)| p.clone()).collect()
    }

    /// Writes every file, or with `check` verifies that the files on disk
    /// are byte-identical.
    pub fn emit(&self, check: bool) -> Result<()> {
        for (path, bytes) in &self.0 {
            if check {
                let old = std::fs::read(path).map_err(|_| Error::Missing(path.display().to_string()))?;
                if &old != bytes {
                    return Err(Error::Corrupt {
                        path: path.clone(),
                        reason: "differs from the rerun".into(),
                    });
                }
            } else {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(path, bytes)?;
            }
        }
        Ok(())
    }
}

pub fn mode_file_name(g0: f64, j: usize) -> String {
    format!("mode_g{g0}_j{j}.gpec")
}

struct ModeRow {
    g0: f64,
    j: usize,
    result: std::result::Result<(CoherentMode, f64), String>,
    energy: f64,
    iterations: usize,
}

/// S-AITP for every `(g0, j ≤ j_max)`, one field file per converged mode and
/// `modes.csv` with `g0, j, energy, stability_distance, residual,
/// iterations, converged`.
pub fn cmd_modes(cfg: &RunConfig, check: bool) -> Result<Outcome> {
    let jobs: Vec<(f64, usize)> = cfg.g0.iter().flat_map(|&g| (0..=cfg.j_max).map(move |j| (g, j))).collect();
    let rows: Vec<ModeRow> = jobs
        .par_iter()
        .map(|&(g0, j)| -> Result<ModeRow> {
            let trial = harmonic_trial(j, &cfg.space, &cfg.constants)?;
            Ok(match saitp_find_mode(j, g0, &trial, &cfg.constants, &cfg.saitp) {
                Ok(mode) => {
                    let d = stability_distance(&mode, &cfg.constants, &default_stability_time())?;
                    ModeRow {
                        g0,
                        j,
                        energy: mode.energy,
                        iterations: mode.iterations,
                        result: Ok((mode, d)),
                    }
                }
                Err(Error::NotConverged(f)) => ModeRow {
                    g0,
                    j,
                    energy: mode_energy(&f.last_iterate, g0, &cfg.constants),
                    iterations: f.iterations,
                    result: Err(f.to_string()),
                },
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Artifacts::default();
    let mut table = Table::new(&["g0", "j", "energy", "stability_distance", "residual", "iterations", "converged"]);
    let mut summary = String::new();
    let mut failed = 0;
    for row in &rows {
        match &row.result {
            Ok((mode, d)) => {
                out.field(cfg.output.join(mode_file_name(row.g0, row.j)), &FieldFile::from_wave(&mode.field));
                table.push(vec![
                    num(row.g0),
                    row.j.to_string(),
                    num(row.energy),
                    num(*d),
                    num(mode.residual),
                    row.iterations.to_string(),
                    "true".into(),
                ]);
            }
            Err(msg) => {
                failed += 1;
                let _ = writeln!(summary, "{msg}");
                table.push(vec![
                    num(row.g0),
                    row.j.to_string(),
                    num(row.energy),
                    "nan".into(),
                    "nan".into(),
                    row.iterations.to_string(),
                    "false".into(),
                ]);
            }
        }
    }
    out.table(cfg.output.join("modes.csv"), &table);
    out.emit(check)?;
    let _ = write!(summary, "{} of {} modes converged", rows.len() - failed, rows.len());
    Ok(Outcome {
        partial: failed > 0,
        files: out.paths(),
        summary,
    })
}

/// Reads the modes `0..=j_max` of one `g0` written by [`cmd_modes`].
pub fn load_family(dir: &Path, g0: f64, j_max: usize, space: &SpatialGrid, constants: &PhysicalConstants) -> Result<ModeFamily> {
    let mut modes = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let field = FieldFile::read(&dir.join(mode_file_name(g0, j)))?.to_wave()?;
        field.grid().check_same(space)?;
        let energy = mode_energy(&field, g0, constants);
        let residual = mode_residual(&field, g0, energy, constants);
        modes.push(CoherentMode {
            index: j,
            g0,
            field,
            energy,
            residual,
            iterations: 0,
        });
    }
    Ok(ModeFamily { g0, modes })
}

/// The family from `modes_dir` when configured, otherwise solved in place.
pub fn obtain_family(cfg: &RunConfig, g0: f64, j_max: usize, space: &SpatialGrid) -> Result<ModeFamily> {
    if let Some(dir) = &cfg.modes_dir {
        return load_family(dir, g0, j_max, space, &cfg.constants);
    }
    let modes = (0..=j_max)
        .into_par_iter()
        .map(|j| saitp_find_mode(j, g0, &harmonic_trial(j, space, &cfg.constants)?, &cfg.constants, &cfg.saitp))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeFamily { g0, modes })
}

fn read_control(path: &Path) -> Result<ControlField> {
    FieldFile::read(path)?.to_control()
}

fn history_table(run: &OptimizationRun) -> Table {
    let mut t = Table::new(&["step", "s", "P"]);
    for (k, (p, s)) in run.history.iter().zip(&run.s_values).enumerate() {
        t.push(vec![k.to_string(), num(*s), num(*p)]);
    }
    t
}

fn summary_table(cfg: &RunConfig, run: &OptimizationRun) -> Table {
    let mut t = Table::new(&[
        "scenario",
        "phase",
        "amplitude",
        "g_const",
        "g0",
        "target",
        "termination",
        "accepted_steps",
        "rejected_steps",
        "evaluations",
        "initial_p",
        "final_p",
        "initial_tangent_norm",
        "worst_dip",
        "min_total_g",
    ]);
    t.push(vec![
        run.scenario.name().into(),
        run.guess.phase.name().into(),
        num(run.guess.amplitude),
        num(cfg.g_const[0]),
        num(run.g0),
        run.target.to_string(),
        run.termination.name().into(),
        run.accepted_steps().to_string(),
        run.rejected_steps.to_string(),
        run.evaluations.to_string(),
        num(run.history[0]),
        num(run.final_objective()),
        num(run.initial_tangent_norm),
        num(run.worst_dip()),
        num(run.min_total_g),
    ]);
    t
}

/// One optimization: `run.cfg`, initial and final controls, optional
/// snapshots, `history.csv`, `summary.csv` and, with `record`, the
/// trajectory under the final controls. Stalls and step caps are partial
/// outcomes.
pub fn cmd_optimize(cfg: &RunConfig, record: bool, check: bool) -> Result<Outcome> {
    cfg.validate_single_run()?;
    let scenario = cfg.scenario()?;
    let guess = cfg.guess()?;
    let (g0, target) = (cfg.g0[0], cfg.target[0]);
    let mut effective = cfg.clone();

    let restart = match &cfg.restart_from {
        Some(dir) => {
            let mut v = read_control(&dir.join("potential_final.gpec"))?;
            let mut g = read_control(&dir.join("nonlinearity_final.gpec"))?;
            if cfg.refine {
                v = v.refined()?;
                g = g.refined()?;
            }
            effective.space = *v.space();
            effective.time = *v.time();
            Some((v, g))
        }
        None => None,
    };
    let family = obtain_family(cfg, g0, target, &effective.space)?;
    let run = match restart {
        Some((v, g)) => run_from_controls(&family, target, scenario.kind, &guess, v, g, &cfg.constants, &cfg.optimizer)?,
        None => run_optimization(&family, target, &scenario, &guess, &cfg.time, &cfg.constants, &cfg.optimizer)?,
    };

    let dir = &cfg.output;
    let mut out = Artifacts::default();
    out.add(dir.join("run.cfg"), effective.to_text(dir).into_bytes());
    out.field(dir.join("potential_initial.gpec"), &FieldFile::from_control(&run.initial_potential));
    out.field(dir.join("nonlinearity_initial.gpec"), &FieldFile::from_control(&run.initial_nonlinearity));
    out.field(dir.join("potential_final.gpec"), &FieldFile::from_control(&run.potential));
    out.field(dir.join("nonlinearity_final.gpec"), &FieldFile::from_control(&run.nonlinearity));
    for snap in &run.snapshots {
        out.field(dir.join(format!("potential_step{:04}.gpec", snap.step)), &FieldFile::from_control(&snap.potential));
        out.field(dir.join(format!("nonlinearity_step{:04}.gpec", snap.step)), &FieldFile::from_control(&snap.nonlinearity));
    }
    out.table(dir.join("history.csv"), &history_table(&run));
    out.table(dir.join("summary.csv"), &summary_table(cfg, &run));
    if record {
        let traj = final_trajectory(&effective, &family.modes[0].field, &run.potential, &run.nonlinearity)?;
        out.field(dir.join("trajectory.gpec"), &FieldFile::from_trajectory(&traj));
    }
    out.emit(check)?;
    Ok(Outcome {
        partial: run.termination != TerminationReason::Converged,
        files: out.paths(),
        summary: format!(
            "{} after {} steps, P = {:.6}",
            run.termination.name(),
            run.accepted_steps(),
            run.final_objective()
        ),
    })
}

fn final_trajectory(cfg: &RunConfig, psi0: &WaveField, v: &ControlField, g: &ControlField) -> Result<Trajectory> {
    let ham = Hamiltonian1D::control_free(cfg.constants, *v.space(), cfg.g0[0]).with_controls(v.clone(), g.clone())?;
    propagate_recorded(psi0, &ham, v.time())
}

/// Writes one `run_NNNN/run.cfg` per combination of amplitude × phase ×
/// scenario × g0 × g_const × target, plus `sweep.csv` indexing them.
///
/// Combinations that vary `g_cont` are kept only when `g0 + g_const` is one
/// of 1, 5, 10, 20; potential-only runs ignore `g_const` and are emitted
/// once with `g_const = 0`.
pub fn cmd_sweep_gen(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Artifacts::default();
    let mut index = Table::new(&["run", "amplitude", "phase", "scenario", "g0", "g_const", "target"]);
    let mut n = 0;
    for &a in &cfg.amplitude {
        for &phase in &cfg.phase {
            for &scenario in &cfg.scenario {
                for &g0 in &cfg.g0 {
                    let g_consts: Vec<f64> = if scenario.varies_nonlinearity() {
                        cfg.g_const.iter().copied().filter(|&g| TRIAL_TOTAL_G.contains(&(g0 + g))).collect()
                    } else {
                        vec![0.0]
                    };
                    for &g_const in &g_consts {
                        for &target in &cfg.target {
                            let name = format!("run_{n:04}");
                            let dir = cfg.output.join(&name);
                            let mut member = cfg.clone();
                            member.amplitude = vec![a];
                            member.phase = vec![phase];
                            member.scenario = vec![scenario];
                            member.g0 = vec![g0];
                            member.g_const = vec![g_const];
                            member.target = vec![target];
                            member.output = dir.clone();
                            if scenario != ScenarioKind::NonlinearityOnly {
                                member.frozen_background = None;
                            }
                            member.validate_single_run()?;
                            out.add(dir.join("run.cfg"), member.to_text(&dir).into_bytes());
                            index.push(vec![
                                name,
                                num(a),
                                phase.name().into(),
                                scenario.name().into(),
                                num(g0),
                                num(g_const),
                                target.to_string(),
                            ]);
                            n += 1;
                        }
                    }
                }
            }
        }
    }
    out.table(cfg.output.join("sweep.csv"), &index);
    out.emit(false)?;
    Ok(Outcome {
        partial: false,
        files: out.paths(),
        summary: format!("{n} run configs"),
    })
}

/// Runs every `run_*/run.cfg` below `dir` on the current rayon pool and
/// writes `dir/results.csv`.
pub fn cmd_optimize_sweep(dir: &Path, record: bool, overrides: &[(&str, String)]) -> Result<Outcome> {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("run.cfg"))
        .filter(|p| p.is_file())
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err(Error::Missing(format!("no run_*/run.cfg under {}", dir.display())));
    }
    let results: Vec<(String, Result<Outcome>)> = configs
        .par_iter()
        .map(|p| {
            let name = p.parent().and_then(|d| d.file_name()).map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (name, RunConfig::load_with(p, overrides).and_then(|c| cmd_optimize(&c, record, false)))
        })
        .collect();
    let mut table = Table::new(&["run", "status", "detail"]);
    let mut partial = 0;
    for (name, r) in &results {
        let (status, detail) = match r {
            Ok(o) if !o.partial => ("converged", o.summary.clone()),
            Ok(o) => ("partial", o.summary.clone()),
            Err(e) => ("error", e.to_string()),
        };
        if status != "converged" {
            partial += 1;
        }
        table.push(vec![name.clone(), status.into(), detail]);
    }
    let path = dir.join("results.csv");
    std::fs::write(&path, table.to_bytes())?;
    Ok(Outcome {
        partial: partial > 0,
        files: vec![path],
        summary: format!("{} of {} runs converged", results.len() - partial, results.len()),
    })
}

fn spectrum_table(s: &PowerSpectrum) -> Table {
    let mut t = Table::new(&["omega", "power"]);
    for (w, p) in s.omega.iter().zip(&s.power) {
        t.push_nums(&[*w, *p]);
    }
    t
}

fn spectrum_2d_table(s: &Spectrum2D) -> Table {
    let mut t = Table::new(&["k", "omega", "power"]);
    for m in 0..s.rows() {
        for n in 0..s.cols() {
            t.push_nums(&[s.wavenumbers[m], s.omega[n], s.at(m, n)]);
        }
    }
    t
}

/// Spectra, 2-D spectra, mode populations and the target overlap profile
/// of a finished run, written to `run_dir/analysis/`. The trajectory is read
/// from `trajectory.gpec` when present, otherwise re-propagated.
pub fn cmd_analyze(run_dir: &Path, check: bool) -> Result<Outcome> {
    let cfg = RunConfig::load(&run_dir.join("run.cfg"))?;
    cfg.validate_single_run()?;
    let v = read_control(&run_dir.join("potential_final.gpec"))?;
    let g = read_control(&run_dir.join("nonlinearity_final.gpec"))?;
    let family = obtain_family(&cfg, cfg.g0[0], cfg.j_max.max(cfg.target[0]), v.space())?;
    let traj_path = run_dir.join("trajectory.gpec");
    let traj = if traj_path.is_file() {
        FieldFile::read(&traj_path)?.to_trajectory()?
    } else {
        final_trajectory(&cfg, &family.modes[0].field, &v, &g)?
    };

    let dir = run_dir.join("analysis");
    let mut out = Artifacts::default();
    out.table(dir.join("spectrum_V.csv"), &spectrum_table(&spectrum_v(&v)));
    let sv = spectrum_v_averaged(&v);
    out.table(dir.join("spectrum_V_averaged.csv"), &spectrum_table(&sv));
    out.table(dir.join("spectrum_g.csv"), &spectrum_table(&spectrum_g(&g, &traj)?));
    out.table(dir.join("spectrum_V_plus_g.csv"), &spectrum_table(&spectrum_dual(&v, &g, &traj)?));
    out.table(dir.join("spectrum2d_V.csv"), &spectrum_2d_table(&spectrum_2d(&v, None)?));
    out.table(dir.join("spectrum2d_g.csv"), &spectrum_2d_table(&spectrum_2d(&g, Some(&traj))?));

    let modes: Vec<usize> = family.modes.iter().map(|m| m.index).collect();
    let pops = population_trace(&traj, &family, &modes)?;
    let header: Vec<String> = std::iter::once("t".to_string()).chain(modes.iter().map(|j| format!("P{j}"))).collect();
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (k, time) in pops.times.iter().enumerate() {
        let row: Vec<f64> = std::iter::once(*time).chain(pops.values.iter().map(|r| r[k])).collect();
        t.push_nums(&row);
    }
    out.table(dir.join("populations.csv"), &t);

    let target = cfg.target[0];
    let phi_f = &family.mode(target).ok_or_else(|| Error::Missing(format!("mode {target}")))?.field;
    let ov = target_overlap_profile(&family.modes[0].field, phi_f)?;
    let mut t = Table::new(&["x", "profile"]);
    for (j, p) in ov.profile.iter().enumerate() {
        t.push_nums(&[v.space().x(j), *p]);
    }
    out.table(dir.join("overlap_profile.csv"), &t);
    let mut t = Table::new(&["k", "power"]);
    for (k, p) in ov.wavenumbers.iter().zip(&ov.power) {
        t.push_nums(&[*k, *p]);
    }
    out.table(dir.join("overlap_spectrum.csv"), &t);
    out.emit(check)?;

    let e = family.energies();
    let gap = e[target] - e[0];
    let summary = match sv.peak_near(gap, 1.0) {
        Some(b) => format!("averaged V spectrum has a local maximum at omega = {:.3}, transition energy {gap:.3}", sv.omega[b]),
        None => format!("no averaged V-spectrum local maximum within one bin of the transition energy {gap:.3}"),
    };
    Ok(Outcome {
        partial: false,
        files: out.paths(),
        summary,
    })
}

/// Forward propagation from a field file or a mode, under stored controls
/// or none. Writes `diagnostics.csv` (norm drift, parity defect, center of
/// mass per node), `summary.csv` and, with `record`, the trajectory.
pub fn cmd_propagate(cfg: &RunConfig, record: bool, check: bool) -> Result<Outcome> {
    if cfg.g0.len() != 1 {
        return Err(Error::Config(format!("g0 has {} values; propagate takes one", cfg.g0.len())));
    }
    let g0 = cfg.g0[0];
    let psi0 = match (&cfg.initial_field, cfg.initial_mode) {
        (Some(p), _) => FieldFile::read(p)?.to_wave()?,
        (None, Some(j)) => obtain_family(cfg, g0, j, &cfg.space)?.modes.swap_remove(j).field,
        (None, None) => return Err(Error::Config("propagate needs initial_field or initial_mode".into())),
    };
    psi0.grid().check_same(&cfg.space)?;
    let mut ham = Hamiltonian1D::control_free(cfg.constants, cfg.space, g0);
    for (path, kind) in [(&cfg.potential_file, ControlKind::Potential), (&cfg.nonlinearity_file, ControlKind::Nonlinearity)] {
        if let Some(p) = path {
            let c = read_control(p)?;
            if c.kind() != kind {
                return Err(Error::invalid(format!("{} holds a {} control", p.display(), c.kind().name())));
            }
            c.time().check_same(&cfg.time)?;
            ham = ham.with_control(c)?;
        }
    }
    let traj = propagate_recorded(&psi0, &ham, &cfg.time)?;

    let n0 = psi0.norm_sqr();
    let mut diag = Table::new(&["t", "norm_drift", "parity_defect", "center_of_mass"]);
    let mut max_parity: f64 = 0.0;
    for (k, s) in traj.snapshots().iter().enumerate() {
        let p = parity_defect(s);
        max_parity = max_parity.max(p);
        diag.push_nums(&[cfg.time.t(k), (s.norm_sqr() - n0).abs(), p, s.center_of_mass()]);
    }
    let distance = 1.0 - inner_product(&psi0, traj.last())?.norm_sqr() / (n0 * traj.last().norm_sqr());
    let mut summary = Table::new(&["max_norm_drift", "max_parity_defect", "distance_from_initial"]);
    summary.push_nums(&[traj.max_norm_drift(), max_parity, distance]);

    let dir = &cfg.output;
    let mut out = Artifacts::default();
    out.table(dir.join("diagnostics.csv"), &diag);
    out.table(dir.join("summary.csv"), &summary);
    if record {
        out.field(dir.join("trajectory.gpec"), &FieldFile::from_trajectory(&traj));
    }
    out.emit(check)?;
    Ok(Outcome {
        partial: false,
        files: out.paths(),
        summary: format!(
            "max norm drift {:.3e}, max parity defect {max_parity:.3e}, distance {distance:.3e}",
            traj.max_norm_drift()
        ),
    })
}
