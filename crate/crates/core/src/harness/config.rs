//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Numbers may be
//! written as products and quotients of decimals and `pi` (`pi/500`,
//! `1/(5*pi)` is spelled `0.2/pi`). Keys that take several values for
//! `modes` and `sweep-gen` use comma-separated lists. Relative paths are
//! resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::adjoint::BackwardScheme;
use crate::dmorph::{ControlScenario, InitialGuess, NoiseSpec, OptimizerSettings, PhaseProfile, ScenarioKind};
use crate::error::{Error, Result};
use crate::grid::{PhysicalConstants, SpatialGrid, TimeGrid};
use crate::modes::SaitpConfig;
use crate::ode::Dopri5Config;

/// Every accepted key with its default and meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("hbar", "1", "reduced Planck constant"),
    ("mass", "1", "particle mass"),
    ("omega", "1", "trap angular frequency"),
    ("length", "20", "periodic domain length L"),
    ("points", "300", "spatial grid points N"),
    ("duration", "pi", "terminal time T"),
    ("steps", "", "time steps; default T/dt"),
    ("dt", "pi/500", "time step, used when steps is absent"),
    ("g0", "1", "background nonlinearity, list"),
    ("j_max", "5", "highest mode index"),
    ("target", "1", "target mode index, list"),
    ("scenario", "potential_only", "potential_only | dual | nonlinearity_only, list"),
    ("phase", "spatial", "symmetric | spatial, list"),
    ("amplitude", "0.2/pi", "trial potential amplitude a, list"),
    ("g_const", "0", "constant trial nonlinearity, list"),
    ("omega_v", "", "trial potential frequency; default omega/10"),
    ("literal_potential_only_g", "false", "potential_only starts from g_cont = g0"),
    ("frozen_background", "", "potential field file held fixed under nonlinearity_only"),
    ("dt_imag", "0.1", "S-AITP imaginary time step"),
    ("saitp_epsilon", "1e-10", "S-AITP tolerance on the squared update"),
    ("saitp_max_iters", "50000", "S-AITP iteration cap"),
    ("residual_tol", "1e-6", "S-AITP residual tolerance; 'none' disables"),
    ("rtol", "1e-3", "flow integrator relative tolerance"),
    ("atol", "1e-6", "flow integrator absolute tolerance"),
    ("h_init", "", "first step in s; default automatic"),
    ("h_max", "", "largest step in s"),
    ("fixed_step_rk4", "", "use RK4 with this fixed step in s"),
    ("max_steps", "200", "accepted step cap"),
    ("stop_p", "0.99", "stop once P exceeds this"),
    ("stall_window", "10", "stall detection window, 0 disables"),
    ("stall_tol", "1e-8", "minimum P gain over the stall window"),
    ("noise_amp", "0", "seeded uniform noise added to the trial controls"),
    ("seed", "0", "noise seed"),
    ("record_every", "", "store controls every n accepted steps"),
    ("scheme", "exact", "exact | matrix_exponential adjoint sweep"),
    ("output", "out", "output directory"),
    ("modes_dir", "", "directory written by the modes command"),
    ("initial_field", "", "wave field file for propagate"),
    ("initial_mode", "", "mode index for propagate when no field file is given"),
    ("potential_file", "", "potential control file for propagate"),
    ("nonlinearity_file", "", "nonlinearity control file for propagate"),
    ("restart_from", "", "previous optimize output directory to continue from"),
    ("refine", "false", "double both grids of the restarted controls"),
];

/// Trial nonlinearities allowed by the sweep positivity rule.
pub const TRIAL_TOTAL_G: [f64; 4] = [1.0, 5.0, 10.0, 20.0];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub space: SpatialGrid,
    pub time: TimeGrid,
    pub g0: Vec<f64>,
    pub j_max: usize,
    pub target: Vec<usize>,
    pub scenario: Vec<ScenarioKind>,
    pub phase: Vec<PhaseProfile>,
    pub amplitude: Vec<f64>,
    pub g_const: Vec<f64>,
    pub omega_v: Option<f64>,
    pub literal_potential_only_g: bool,
    pub frozen_background: Option<PathBuf>,
    pub saitp: SaitpConfig,
    pub optimizer: OptimizerSettings,
    pub noise_amp: f64,
    pub seed: u64,
    pub output: PathBuf,
    pub modes_dir: Option<PathBuf>,
    pub initial_field: Option<PathBuf>,
    pub initial_mode: Option<usize>,
    pub potential_file: Option<PathBuf>,
    pub nonlinearity_file: Option<PathBuf>,
    pub restart_from: Option<PathBuf>,
    pub refine: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse("", Path::new(".")).expect("defaults are valid")
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Evaluates `a*b/c` style expressions over decimals and `pi`.
pub fn parse_number(text: &str) -> Option<f64> {
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = text.trim();
    if rest.is_empty() {
        return None;
    }
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let x = if token.eq_ignore_ascii_case("pi") {
            PI
        } else {
            token.parse::<f64>().ok()?
        };
        value = if op == '*' { value * x } else { value / x };
        if end == rest.len() {
            return value.is_finite().then_some(value);
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_list<T>(key: &str, v: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(|s| item(s.trim()).ok_or_else(|| config_err(format!("{key}: cannot parse '{}'", s.trim()))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(config_err(format!("{key}: empty list")));
    }
    Ok(items)
}

fn scheme_name(s: BackwardScheme) -> &'static str {
    match s {
        BackwardScheme::ExactDiscrete => "exact",
        BackwardScheme::MatrixExponential => "matrix_exponential",
    }
}

/// Splits config text into a key map, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected 'key = value'", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _, _)| *name == k) {
            return Err(config_err(format!("line {}: unknown key '{k}'", n + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(config_err(format!("line {}: key '{k}' given twice", n + 1)));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, &[])
    }

    /// Loads a config file, then applies `key = value` overrides (from
    /// command-line flags) before validation.
    pub fn load_with(path: &Path, overrides: &[(&str, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = std::path::absolute(parent)?;
        Self::parse_with(&text, &base, overrides)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        Self::parse_with(text, base, &[])
    }

    pub fn parse_with(text: &str, base: &Path, overrides: &[(&str, String)]) -> Result<Self> {
        let mut map = parse_pairs(text)?;
        for (k, v) in overrides {
            if !KEYS.iter().any(|(name, _, _)| name == k) {
                return Err(config_err(format!("unknown key '{k}'")));
            }
            map.insert(k.to_string(), v.clone());
        }
        Self::from_map(&map, base)
    }

    fn from_map(map: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let get = |k: &str| -> Option<&str> {
            map.get(k)
                .map(String::as_str)
                .or_else(|| KEYS.iter().find(|(n, _, _)| *n == k).map(|(_, d, _)| *d))
                .filter(|v| !v.is_empty())
        };
        let num = |k: &str| -> Result<Option<f64>> {
            get(k)
                .map(|v| parse_number(v).ok_or_else(|| config_err(format!("{k}: cannot parse '{v}' as a number"))))
                .transpose()
        };
        let req = |k: &str| -> Result<f64> { num(k)?.ok_or_else(|| config_err(format!("{k} is required"))) };
        let int = |k: &str| -> Result<Option<usize>> {
            get(k)
                .map(|v| v.parse().map_err(|_| config_err(format!("{k}: expected a non-negative integer, got '{v}'"))))
                .transpose()
        };
        let path = |k: &str| get(k).map(|v| base.join(v));

        let constants = PhysicalConstants::new(req("hbar")?, req("mass")?, req("omega")?)
            .map_err(|e| config_err(format!("physical constants: {e}")))?;
        let space = SpatialGrid::new(req("length")?, int("points")?.unwrap_or(0))
            .map_err(|e| config_err(format!("length/points: {e}")))?;
        let duration = req("duration")?;
        let time = match (map.contains_key("steps"), map.contains_key("dt")) {
            (true, true) => return Err(config_err("give either steps or dt, not both")),
            (true, false) => TimeGrid::new(duration, int("steps")?.unwrap_or(0)),
            _ => TimeGrid::with_step(duration, req("dt")?),
        }
        .map_err(|e| config_err(format!("duration/steps: {e}")))?;

        let g0 = parse_list("g0", get("g0").unwrap_or(""), parse_number)?;
        let target = parse_list("target", get("target").unwrap_or(""), |s| s.parse().ok())?;
        let scenario = parse_list("scenario", get("scenario").unwrap_or(""), ScenarioKind::parse)?;
        let phase = parse_list("phase", get("phase").unwrap_or(""), PhaseProfile::parse)?;
        let amplitude = parse_list("amplitude", get("amplitude").unwrap_or(""), parse_number)?;
        let g_const = parse_list("g_const", get("g_const").unwrap_or(""), parse_number)?;

        let residual_tol = match get("residual_tol") {
            Some("none") => None,
            _ => num("residual_tol")?,
        };
        let saitp = SaitpConfig {
            dt_imag: req("dt_imag")?,
            epsilon: req("saitp_epsilon")?,
            max_iters: int("saitp_max_iters")?.unwrap_or(0),
            residual_tol,
        };
        saitp.validate().map_err(|e| config_err(format!("S-AITP settings: {e}")))?;

        let ode = Dopri5Config {
            rtol: req("rtol")?,
            atol: req("atol")?,
            h_init: num("h_init")?,
            h_max: num("h_max")?,
            ..Dopri5Config::default()
        };
        let noise_amp = req("noise_amp")?;
        let seed = get("seed")
            .map(|v| v.parse::<u64>().map_err(|_| config_err(format!("seed: expected an integer, got '{v}'"))))
            .transpose()?
            .unwrap_or(0);
        let scheme = match get("scheme") {
            Some("exact") | None => BackwardScheme::ExactDiscrete,
            Some("matrix_exponential") => BackwardScheme::MatrixExponential,
            Some(v) => return Err(config_err(format!("scheme: expected exact or matrix_exponential, got '{v}'"))),
        };
        let optimizer = OptimizerSettings {
            ode,
            fixed_step_rk4: num("fixed_step_rk4")?,
            stop_p: req("stop_p")?,
            max_steps: int("max_steps")?.unwrap_or(0),
            stall_window: int("stall_window")?.unwrap_or(0),
            stall_tol: req("stall_tol")?,
            noise: (noise_amp > 0.0).then_some(NoiseSpec { amplitude: noise_amp, seed }),
            record_every: int("record_every")?,
            scheme,
        };

        let cfg = RunConfig {
            constants,
            space,
            time,
            g0,
            j_max: int("j_max")?.unwrap_or(0),
            target,
            scenario,
            phase,
            amplitude,
            g_const,
            omega_v: num("omega_v")?,
            literal_potential_only_g: parse_bool("literal_potential_only_g", get("literal_potential_only_g").unwrap_or("false"))?,
            frozen_background: path("frozen_background"),
            saitp,
            optimizer,
            noise_amp,
            seed,
            output: path("output").unwrap_or_else(|| base.join("out")),
            modes_dir: path("modes_dir"),
            initial_field: path("initial_field"),
            initial_mode: int("initial_mode")?,
            potential_file: path("potential_file"),
            nonlinearity_file: path("nonlinearity_file"),
            restart_from: path("restart_from"),
            refine: parse_bool("refine", get("refine").unwrap_or("false"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every rule that does not depend on which command runs.
    pub fn validate(&self) -> Result<()> {
        if self.j_max > 10 {
            return Err(config_err(format!("j_max = {} exceeds the largest supported trial order 10", self.j_max)));
        }
        if self.g0.iter().any(|g| !g.is_finite()) {
            return Err(config_err("g0 must be finite"));
        }
        if let Some(&t) = self.target.iter().find(|&&t| t == 0 || t > self.j_max) {
            return Err(config_err(format!("target {t} must lie in 1..=j_max ({})", self.j_max)));
        }
        let opt = &self.optimizer;
        if !(opt.stop_p > 0.0 && opt.stop_p <= 1.0) {
            return Err(config_err(format!("stop_p = {} must lie in (0, 1]", opt.stop_p)));
        }
        if opt.max_steps == 0 {
            return Err(config_err("max_steps must be positive"));
        }
        if opt.stall_tol.is_nan() || opt.stall_tol < 0.0 {
            return Err(config_err("stall_tol must be non-negative"));
        }
        if self.noise_amp.is_nan() || self.noise_amp < 0.0 {
            return Err(config_err("noise_amp must be non-negative"));
        }
        if let Some(h) = opt.fixed_step_rk4 {
            if h.is_nan() || h <= 0.0 {
                return Err(config_err("fixed_step_rk4 must be positive"));
            }
        }
        if let Some(0) = opt.record_every {
            return Err(config_err("record_every must be positive"));
        }
        if !(opt.ode.rtol > 0.0 && opt.ode.atol >= 0.0) {
            return Err(config_err("rtol must be positive and atol non-negative"));
        }
        if self.frozen_background.is_some() && self.scenario.iter().any(|s| *s != ScenarioKind::NonlinearityOnly) {
            return Err(config_err("frozen_background requires scenario = nonlinearity_only"));
        }
        if self.initial_field.is_some() && self.initial_mode.is_some() {
            return Err(config_err("give either initial_field or initial_mode, not both"));
        }
        if let Some(j) = self.initial_mode {
            if j > self.j_max {
                return Err(config_err(format!("initial_mode {j} exceeds j_max {}", self.j_max)));
            }
        }
        if self.refine && self.restart_from.is_none() {
            return Err(config_err("refine requires restart_from"));
        }
        Ok(())
    }

    /// Rules for a single optimization: one value per list key and a
    /// positive trial nonlinearity whenever `g_cont` is varied.
    pub fn validate_single_run(&self) -> Result<()> {
        for (key, n) in [
            ("g0", self.g0.len()),
            ("target", self.target.len()),
            ("scenario", self.scenario.len()),
            ("phase", self.phase.len()),
            ("amplitude", self.amplitude.len()),
            ("g_const", self.g_const.len()),
        ] {
            if n != 1 {
                return Err(config_err(format!("{key} has {n} values; a single run takes one (see sweep-gen)")));
            }
        }
        if self.scenario[0].varies_nonlinearity() && self.g0[0] + self.g_const[0] <= 0.0 {
            return Err(config_err(format!(
                "trial nonlinearity g0 + g_const = {} must be positive",
                self.g0[0] + self.g_const[0]
            )));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<ControlScenario> {
        self.validate_single_run()?;
        let mut s = ControlScenario::new(self.scenario[0]);
        if let Some(path) = &self.frozen_background {
            let field = super::files::FieldFile::read(path)?.to_control()?;
            s.frozen_background = Some(field);
        }
        Ok(s)
    }

    pub fn guess(&self) -> Result<InitialGuess> {
        self.validate_single_run()?;
        let mut g = InitialGuess::new(self.amplitude[0], self.phase[0], &self.constants).with_g_const(self.g_const[0]);
        if let Some(w) = self.omega_v {
            g.omega_v = w;
        }
        if self.literal_potential_only_g && self.scenario[0] == ScenarioKind::PotentialOnly {
            g.literal_potential_only_g = true;
            g.g_const = self.g0[0];
        }
        Ok(g)
    }

    /// Canonical text form: every key, in table order, with round-trippable
    /// numbers. Paths are written as given relative to `base` when possible.
    pub fn to_text(&self, base: &Path) -> String {
        let f = |x: f64| format!("{x:?}");
        let list = |xs: &[f64]| xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(", ");
        let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
        let p = |x: &Option<PathBuf>| x.as_ref().map(|p| rel(p, base)).unwrap_or_default();
        let o = &self.optimizer;
        let values: Vec<(&str, String)> = vec![
            ("hbar", f(self.constants.hbar)),
            ("mass", f(self.constants.mass)),
            ("omega", f(self.constants.omega)),
            ("length", f(self.space.length())),
            ("points", self.space.points().to_string()),
            ("duration", f(self.time.duration())),
            ("steps", self.time.steps().to_string()),
            ("g0", list(&self.g0)),
            ("j_max", self.j_max.to_string()),
            ("target", self.target.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")),
            ("scenario", self.scenario.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")),
            ("phase", self.phase.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")),
            ("amplitude", list(&self.amplitude)),
            ("g_const", list(&self.g_const)),
            ("omega_v", opt(self.omega_v)),
            ("literal_potential_only_g", self.literal_potential_only_g.to_string()),
            ("frozen_background", p(&self.frozen_background)),
            ("dt_imag", f(self.saitp.dt_imag)),
            ("saitp_epsilon", f(self.saitp.epsilon)),
            ("saitp_max_iters", self.saitp.max_iters.to_string()),
            ("residual_tol", self.saitp.residual_tol.map(f).unwrap_or_else(|| "none".into())),
            ("rtol", f(o.ode.rtol)),
            ("atol", f(o.ode.atol)),
            ("h_init", opt(o.ode.h_init)),
            ("h_max", opt(o.ode.h_max)),
            ("fixed_step_rk4", opt(o.fixed_step_rk4)),
            ("max_steps", o.max_steps.to_string()),
            ("stop_p", f(o.stop_p)),
            ("stall_window", o.stall_window.to_string()),
            ("stall_tol", f(o.stall_tol)),
            ("noise_amp", f(self.noise_amp)),
            ("seed", self.seed.to_string()),
            ("record_every", o.record_every.map(|n| n.to_string()).unwrap_or_default()),
            ("scheme", scheme_name(o.scheme).into()),
            ("output", rel(&self.output, base)),
            ("modes_dir", p(&self.modes_dir)),
            ("initial_field", p(&self.initial_field)),
            ("initial_mode", self.initial_mode.map(|n| n.to_string()).unwrap_or_default()),
            ("potential_file", p(&self.potential_file)),
            ("nonlinearity_file", p(&self.nonlinearity_file)),
            ("restart_from", p(&self.restart_from)),
            ("refine", self.refine.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in values {
            if !v.is_empty() {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn rel(path: &Path, base: &Path) -> String {
    match path.strip_prefix(base) {
        Ok(r) if r.as_os_str().is_empty() => ".".into(),
        Ok(r) => r.display().to_string(),
        Err(_) => path.display().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("pi/500"), Some(PI / 500.0));
        assert_eq!(parse_number("0.2/pi"), Some(0.2 / PI));
        assert_eq!(parse_number(" 2 * pi "), Some(2.0 * PI));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("pi/0"), None);
        assert_eq!(parse_number("two"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.space.points(), 300);
        assert_eq!(c.time.steps(), 500);
        assert_eq!(c.optimizer.stop_p, 0.99);
        assert_eq!(c.optimizer.max_steps, 200);
        assert_eq!(c.amplitude, vec![0.2 / PI]);
        assert_eq!(c.saitp.dt_imag, 0.1);
        assert!(c.optimizer.noise.is_none());
        let g = c.guess().unwrap();
        assert_eq!(g.omega_v, 0.1);
        assert_eq!(g.phase, PhaseProfile::SpatiallyDependent);
    }

    #[test]
    fn rejects_bad_input_naming_the_rule() {
        let base = Path::new(".");
        let msg = |t: &str| RunConfig::parse(t, base).unwrap_err().to_string();
        assert!(msg("tagret = 2").contains("unknown key 'tagret'"));
        assert!(msg("g0 = 1\ng0 = 2").contains("given twice"));
        assert!(msg("points").contains("key = value"));
        assert!(msg("points = -3").contains("points"));
        assert!(msg("steps = 100\ndt = 0.1").contains("either steps or dt"));
        assert!(msg("target = 7").contains("j_max"));
        assert!(msg("stop_p = 1.5").contains("stop_p"));
        assert!(msg("scenario = both").contains("scenario"));
        assert!(msg("frozen_background = v.gpec").contains("nonlinearity_only"));
        assert!(msg("dt_imag = -1").contains("S-AITP"));
        assert!(msg("refine = true").contains("restart_from"));
        let c = RunConfig::parse("scenario = dual\ng0 = 0\ng_const = 0", base).unwrap();
        assert!(c.guess().unwrap_err().to_string().contains("positive"));
        let c = RunConfig::parse("g0 = 1, 5", base).unwrap();
        assert!(c.guess().unwrap_err().to_string().contains("single run"));
    }

    #[test]
    fn canonical_text_round_trips() {
        let base = Path::new("/tmp/run");
        let text = "g0 = 0, 1, 5\nduration = 10\ndt = pi/500\nscenario = dual, nonlinearity_only\n\
                    residual_tol = none\nh_max = 0.5\nrecord_every = 4\nmodes_dir = ../modes\nnoise_amp = 1e-8\nseed = 7";
        let a = RunConfig::parse(text, base).unwrap();
        let b = RunConfig::parse(&a.to_text(base), base).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.time.steps(), 1592);
        assert_eq!(a.optimizer.noise, Some(NoiseSpec { amplitude: 1e-8, seed: 7 }));
        assert_eq!(a.modes_dir, Some(base.join("../modes")));
    }

    #[test]
    fn overrides_apply_before_validation() {
        let base = Path::new(".");
        let c = RunConfig::parse_with("stop_p = 2", base, &[("stop_p", "0.5".into())]).unwrap();
        assert_eq!(c.optimizer.stop_p, 0.5);
        assert!(RunConfig::parse_with("", base, &[("bogus", "1".into())]).is_err());
    }

    #[test]
    fn literal_potential_only_reading() {
        let c = RunConfig::parse("g0 = 5\nliteral_potential_only_g = true", Path::new(".")).unwrap();
        let g = c.guess().unwrap();
        assert!(g.literal_potential_only_g);
        assert_eq!(g.g_const, 5.0);
    }
}
