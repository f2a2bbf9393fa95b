//! Uniform space and time discretizations.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical constants of the trapped condensate. Defaults are the
/// dimensionless units ħ = m = ω = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    /// Trap angular frequency.
    pub omega: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64, omega: f64) -> Result<Self> {
        let c = Self { hbar, mass, omega };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("mass", self.mass), ("omega", self.omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Periodic grid `x_j = j·dx`, `j = 0..N`, on `[0, L)`. The trap center `L/2`
/// is the grid point `N/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    length: f64,
    points: usize,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self {
            length: 20.0,
            points: 300,
        }
    }
}

impl SpatialGrid {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("grid length must be > 0, got {length}")));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "grid point count must be even and >= 8, got {points}"
            )));
        }
        Ok(Self { length, points })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn center(&self) -> f64 {
        0.5 * self.length
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |j| self.x(j))
    }

    /// Index of the mirror image of point `j` under `x -> L - x`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.points - j) % self.points
    }

    /// Signed FFT angular wavenumbers `2πn/L` in FFT output order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        (0..n)
            .map(|i| {
                let signed = if i < n / 2 { i } else { i - n };
                2.0 * PI * signed as f64 / self.length
            })
            .collect()
    }

    /// Harmonic trap `(mω²/2)(x - L/2)²` sampled on the grid.
    pub fn trap(&self, constants: &PhysicalConstants) -> Vec<f64> {
        let c = self.center();
        let k = 0.5 * constants.mass * constants.omega * constants.omega;
        self.coordinates().map(|x| k * (x - c) * (x - c)).collect()
    }

    pub(crate) fn check_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "spatial grids differ: (L={}, N={}) vs (L={}, N={})",
                self.length, self.points, other.length, other.points
            )))
        }
    }
}

/// Uniform time nodes `t_k = k·dt`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    duration: f64,
    steps: usize,
}

impl TimeGrid {
    /// A zero duration is allowed and yields a grid on which propagation is
    /// the identity.
    pub fn new(duration: f64, steps: usize) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::invalid(format!("duration must be >= 0, got {duration}")));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(Self { duration, steps })
    }

    /// Grid with a step as close as possible to (and not larger than) `dt`.
    pub fn with_step(duration: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        let steps = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
        Self::new(duration, steps)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "time grids differ: (T={}, steps={}) vs (T={}, steps={})",
                self.duration, self.steps, other.duration, other.steps
            )))
        }
    }
}
