//! Explicit integrators for autonomous systems `dy/ds = f(y)` whose
//! right-hand side is expensive and carries an auxiliary result (for the
//! gradient flow, the objective value at `y`).
//!
//! [`Dopri5`] is the Dormand–Prince 5(4) pair with PI step-size control and
//! first-same-as-last reuse; [`Rk4`] is the classical fixed-step method.

use crate::error::{Error, Result};

/// Derivative at a point plus whatever else the evaluation produced.
#[derive(Clone, Debug)]
pub struct Evaluation<A> {
    pub derivative: Vec<f64>,
    pub aux: A,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Config {
    pub rtol: f64,
    pub atol: f64,
    /// First step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    /// Steps below this size are an error.
    pub h_min: f64,
    /// Rejections allowed for a single step.
    pub max_rejections: usize,
}

impl Default for Dopri5Config {
    fn default() -> Self {
        Self {
            rtol: 1e-3,
            atol: 1e-6,
            h_init: None,
            h_max: None,
            h_min: 1e-14,
            max_rejections: 50,
        }
    }
}

impl Dopri5Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite()) {
            return Err(Error::invalid("tolerances must be finite and > 0"));
        }
        if let Some(h) = self.h_init {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid(format!("initial step must be > 0, got {h}")));
            }
        }
        if let Some(h) = self.h_max {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid(format!("maximum step must be > 0, got {h}")));
            }
        }
        Ok(())
    }
}

/// An accepted step.
#[derive(Clone, Debug)]
pub struct Accepted {
    pub y: Vec<f64>,
    pub h: f64,
    pub rejections: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn axpy(y: &[f64], h: f64, terms: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, a) in terms {
        if *a == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += h * a * v;
        }
    }
    out
}

fn scaled_norm(v: &[f64], y0: &[f64], y1: &[f64], atol: f64, rtol: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

/// Stage evaluation failures that mean "step too large" rather than a bug.
fn is_recoverable(e: &Error) -> bool {
    matches!(e, Error::Unstable { .. })
}

pub struct Dopri5<A> {
    cfg: Dopri5Config,
    h: Option<f64>,
    err_prev: f64,
    last: Option<Evaluation<A>>,
}

impl<A: Clone> Dopri5<A> {
    pub fn new(cfg: Dopri5Config) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            h: cfg.h_init,
            err_prev: 1e-4,
            last: None,
        })
    }

    /// Proposed size of the next step, if known yet.
    pub fn next_step_size(&self) -> Option<f64> {
        self.h
    }

    /// Evaluation at the current point (after [`Dopri5::start`] or a step).
    pub fn current(&self) -> Option<&Evaluation<A>> {
        self.last.as_ref()
    }

    /// Evaluates the right-hand side at the starting point.
    pub fn start<F>(&mut self, y: &[f64], rhs: &mut F) -> Result<&Evaluation<A>>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<A>>,
    {
        let ev = rhs(y)?;
        self.last = Some(ev);
        Ok(self.last.as_ref().expect("just set"))
    }

    fn initial_step<F>(&self, y: &[f64], f0: &[f64], rhs: &mut F) -> Result<f64>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<A>>,
    {
        let d0 = scaled_norm(y, y, y, self.cfg.atol, self.cfg.rtol);
        let d1 = scaled_norm(f0, y, y, self.cfg.atol, self.cfg.rtol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(y, h0, &[(f0, 1.0)]);
        let f1 = match rhs(&y1) {
            Ok(ev) => ev.derivative,
            Err(e) if is_recoverable(&e) => return Ok(h0 * 0.1),
            Err(e) => return Err(e),
        };
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = scaled_norm(&diff, y, y, self.cfg.atol, self.cfg.rtol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1))
    }

    /// Advances one accepted step from `y`, retrying with smaller steps on
    /// rejection. After success [`Dopri5::current`] holds the evaluation at
    /// the new point.
    pub fn step<F>(&mut self, y: &[f64], rhs: &mut F) -> Result<Accepted>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<A>>,
    {
        if self.last.is_none() {
            self.start(y, rhs)?;
        }
        let k1 = self.last.as_ref().expect("started").derivative.clone();
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, &k1, rhs)?,
        };
        if let Some(hm) = self.cfg.h_max {
            h = h.min(hm);
        }
        let mut rejections = 0;
        loop {
            if h < self.cfg.h_min || !h.is_finite() {
                return Err(Error::invalid(format!("step size underflow (h = {h:e})")));
            }
            match self.attempt(y, &k1, h, rhs) {
                Ok((y5, err, ev7)) if err.is_finite() && err <= 1.0 => {
                    let err = err.max(1e-10);
                    let mut fac = SAFETY * err.powf(-ALPHA) * self.err_prev.powf(BETA);
                    fac = fac.clamp(FAC_MIN, FAC_MAX);
                    if rejections > 0 {
                        fac = fac.min(1.0);
                    }
                    self.err_prev = err;
                    let mut next = h * fac;
                    if let Some(hm) = self.cfg.h_max {
                        next = next.min(hm);
                    }
                    self.h = Some(next);
                    self.last = Some(ev7);
                    return Ok(Accepted { y: y5, h, rejections });
                }
                Ok((_, err, _)) => {
                    let fac = if err.is_finite() {
                        (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0)
                    } else {
                        FAC_MIN
                    };
                    h *= fac;
                }
                Err(e) if is_recoverable(&e) => h *= FAC_MIN,
                Err(e) => return Err(e),
            }
            rejections += 1;
            if rejections > self.cfg.max_rejections {
                return Err(Error::invalid(format!(
                    "step rejected {rejections} times in a row (h = {h:e})"
                )));
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn attempt<F>(&self, y: &[f64], k1: &[f64], h: f64, rhs: &mut F) -> Result<(Vec<f64>, f64, Evaluation<A>)>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<A>>,
    {
        let mut k: Vec<Vec<f64>> = vec![k1.to_vec()];
        for s in 1..6 {
            let terms: Vec<(&[f64], f64)> = (0..s).map(|i| (k[i].as_slice(), A[s][i])).collect();
            let ys = axpy(y, h, &terms);
            debug_assert!(C[s] > 0.0);
            k.push(rhs(&ys)?.derivative);
        }
        let terms: Vec<(&[f64], f64)> = (0..6).map(|i| (k[i].as_slice(), A[6][i])).collect();
        let y5 = axpy(y, h, &terms);
        let ev7 = rhs(&y5)?;
        k.push(ev7.derivative.clone());
        let mut errv = vec![0.0; y.len()];
        for (i, e) in E.iter().enumerate() {
            if *e == 0.0 {
                continue;
            }
            for (o, v) in errv.iter_mut().zip(&k[i]) {
                *o += h * e * v;
            }
        }
        let err = scaled_norm(&errv, y, &y5, self.cfg.atol, self.cfg.rtol);
        Ok((y5, err, ev7))
    }
}

/// Classical fourth-order Runge–Kutta with a fixed step.
pub struct Rk4<A> {
    h: f64,
    last: Option<Evaluation<A>>,
}

impl<A: Clone> Rk4<A> {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("RK4 step must be > 0, got {h}")));
        }
        Ok(Self { h, last: None })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn current(&self) -> Option<&Evaluation<A>> {
        self.last.as_ref()
    }

    pub fn start<F>(&mut self, y: &[f64], rhs: &mut F) -> Result<&Evaluation<A>>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<A>>,
    {
        self.last = Some(rhs(y)?);
        Ok(self.last.as_ref().expect("just set"))
    }

    pub fn step<F>(&mut self, y: &[f64], rhs: &mut F) -> Result<Accepted>
    where
        F: FnMut(&[f64]) -> Result<Evaluation<A>>,
    {
        if self.last.is_none() {
            self.start(y, rhs)?;
        }
        let h = self.h;
        let k1 = self.last.as_ref().expect("started").derivative.clone();
        let k2 = rhs(&axpy(y, h, &[(&k1, 0.5)]))?.derivative;
        let k3 = rhs(&axpy(y, h, &[(&k2, 0.5)]))?.derivative;
        let k4 = rhs(&axpy(y, h, &[(&k3, 1.0)]))?.derivative;
        let y1 = axpy(y, h, &[(&k1, 1.0 / 6.0), (&k2, 1.0 / 3.0), (&k3, 1.0 / 3.0), (&k4, 1.0 / 6.0)]);
        self.last = Some(rhs(&y1)?);
        Ok(Accepted {
            y: y1,
            h,
            rejections: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(y: &[f64]) -> Result<Evaluation<usize>> {
        Ok(Evaluation {
            derivative: y.iter().map(|v| -v).collect(),
            aux: 0,
        })
    }

    #[test]
    fn tableau_is_consistent() {
        for s in 1..7 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-15, "row {s}");
        }
        let b: f64 = A[6].iter().sum();
        assert!((b - 1.0).abs() < 1e-15);
        assert!(E.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn dopri_tracks_exponential_decay() {
        let cfg = Dopri5Config {
            rtol: 1e-8,
            atol: 1e-10,
            ..Dopri5Config::default()
        };
        let mut st = Dopri5::new(cfg).unwrap();
        let mut y = vec![1.0, 2.0];
        let mut s = 0.0;
        let mut rhs = decay;
        while s < 3.0 {
            let acc = st.step(&y, &mut rhs).unwrap();
            s += acc.h;
            y = acc.y;
        }
        assert!((y[0] - (-s).exp()).abs() < 1e-7);
        assert!((y[1] - 2.0 * (-s).exp()).abs() < 1e-7);
    }

    #[test]
    fn dopri_is_fifth_order() {
        // oracle: y' = y, local error of a single step scales as h^6
        let one_step = |h: f64| {
            let mut st: Dopri5<usize> = Dopri5::new(Dopri5Config {
                h_init: Some(h),
                rtol: 1.0,
                atol: 1.0,
                ..Dopri5Config::default()
            })
            .unwrap();
            let mut rhs = |y: &[f64]| -> Result<Evaluation<usize>> {
                Ok(Evaluation {
                    derivative: y.to_vec(),
                    aux: 0,
                })
            };
            let acc = st.step(&[1.0], &mut rhs).unwrap();
            (acc.y[0] - acc.h.exp()).abs()
        };
        let ratio = one_step(0.2) / one_step(0.1);
        assert!((ratio.log2() - 6.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |h: f64| {
            let mut st: Rk4<usize> = Rk4::new(h).unwrap();
            let mut y = vec![1.0];
            let n = (1.0 / h).round() as usize;
            let mut rhs = decay;
            for _ in 0..n {
                y = st.step(&y, &mut rhs).unwrap().y;
            }
            (y[0] - (-1f64).exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn unstable_stage_triggers_rejection() {
        let mut st: Dopri5<usize> = Dopri5::new(Dopri5Config {
            h_init: Some(1.0),
            ..Dopri5Config::default()
        })
        .unwrap();
        let mut rhs = |y: &[f64]| -> Result<Evaluation<usize>> {
            if y[0] < 0.5 {
                return Err(Error::Unstable { step: 0 });
            }
            Ok(Evaluation {
                derivative: vec![-1.0],
                aux: 0,
            })
        };
        let acc = st.step(&[1.0], &mut rhs).unwrap();
        assert!(acc.rejections > 0);
        assert!(acc.h < 0.5);
    }

    #[test]
    fn aux_comes_from_final_point() {
        let mut st: Dopri5<f64> = Dopri5::new(Dopri5Config::default()).unwrap();
        let mut rhs = |y: &[f64]| -> Result<Evaluation<f64>> {
            Ok(Evaluation {
                derivative: vec![1.0],
                aux: y[0],
            })
        };
        let acc = st.step(&[0.0], &mut rhs).unwrap();
        assert_eq!(st.current().unwrap().aux, acc.y[0]);
    }

    #[test]
    fn h_max_caps_steps() {
        let mut st: Dopri5<usize> = Dopri5::new(Dopri5Config {
            h_max: Some(0.01),
            ..Dopri5Config::default()
        })
        .unwrap();
        let mut rhs = decay;
        let mut y = vec![1.0];
        for _ in 0..5 {
            let acc = st.step(&y, &mut rhs).unwrap();
            assert!(acc.h <= 0.01);
            y = acc.y;
        }
    }
}
