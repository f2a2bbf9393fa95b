//! Complex wave fields and real space-time control fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};

/// Complex amplitude `ψ(x_j)` on a [`SpatialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.points()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("wave field contains non-finite entries"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: SpatialGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.points());
        Self { grid, values }
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.points()],
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.coordinates().map(f).collect())
    }

    pub fn from_real(grid: SpatialGrid, re: &[f64]) -> Result<Self> {
        Self::new(grid, re.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `‖ψ‖² = Σ|ψ_j|² dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
        }
    }

    /// `‖self - other‖` under the discrete inner product.
    pub fn distance(&self, other: &WaveField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.dx()).sqrt())
    }

    /// `Σ x_j |ψ_j|² / Σ |ψ_j|²` in grid coordinates.
    pub fn center_of_mass(&self) -> f64 {
        let (mut m, mut w) = (0.0, 0.0);
        for (j, z) in self.values.iter().enumerate() {
            m += self.grid.x(j) * z.norm_sqr();
            w += z.norm_sqr();
        }
        m / w
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Multiply by a global phase so that the largest-magnitude entry is real
    /// and positive.
    pub fn fix_phase(&mut self) {
        let Some(peak) = self
            .values
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        else {
            return;
        };
        if peak.norm() == 0.0 {
            return;
        }
        let rot = peak.conj() / peak.norm();
        for z in &mut self.values {
            *z *= rot;
        }
    }
}

/// `⟨a|b⟩ = Σ conj(a_j)·b_j·dx`.
pub fn inner_product(a: &WaveField, b: &WaveField) -> Result<Complex64> {
    a.grid.check_same(&b.grid)?;
    Ok(raw_inner(&a.values, &b.values) * a.grid.dx())
}

pub(crate) fn raw_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn normalize(psi: &WaveField) -> Result<WaveField> {
    let n = psi.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroField);
    }
    Ok(psi.scaled(Complex64::new(1.0 / n, 0.0)))
}

/// `min_σ ‖ψ(x) − σψ(L−x)‖ / ‖ψ‖` over `σ = ±1`. Zero for definite parity.
pub fn parity_defect(psi: &WaveField) -> f64 {
    parity_defect_signed(psi).0
}

/// Like [`parity_defect`], also returning the minimizing sign.
pub fn parity_defect_signed(psi: &WaveField) -> (f64, i8) {
    let g = psi.grid;
    let v = &psi.values;
    let (mut even, mut odd) = (0.0, 0.0);
    for j in 0..g.points() {
        let m = v[g.mirror(j)];
        even += (v[j] - m).norm_sqr();
        odd += (v[j] + m).norm_sqr();
    }
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return (0.0, 1);
    }
    if even <= odd {
        ((even / total).sqrt(), 1)
    } else {
        ((odd / total).sqrt(), -1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlKind {
    Potential,
    Nonlinearity,
}

impl ControlKind {
    pub fn name(self) -> &'static str {
        match self {
            ControlKind::Potential => "potential",
            ControlKind::Nonlinearity => "nonlinearity",
        }
    }
}

/// Real control `c(x_j, t_k)` stored time-major: one row of `N` values per
/// time node, `steps + 1` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    kind: ControlKind,
    space: SpatialGrid,
    time: TimeGrid,
    values: Vec<f64>,
}

impl ControlField {
    pub fn new(
        kind: ControlKind,
        space: SpatialGrid,
        time: TimeGrid,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = space.points() * time.nodes();
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "control has {} values, grids imply {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("control field contains non-finite entries"));
        }
        Ok(Self {
            kind,
            space,
            time,
            values,
        })
    }

    pub fn zeros(kind: ControlKind, space: SpatialGrid, time: TimeGrid) -> Self {
        Self {
            kind,
            space,
            time,
            values: vec![0.0; space.points() * time.nodes()],
        }
    }

    pub fn from_fn(
        kind: ControlKind,
        space: SpatialGrid,
        time: TimeGrid,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(space.points() * time.nodes());
        for k in 0..time.nodes() {
            let t = time.t(k);
            values.extend(space.coordinates().map(|x| f(x, t)));
        }
        Self::new(kind, space, time, values)
    }

    pub fn kind(&self) -> ControlKind {
        self.kind
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

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row of spatial values at time node `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        let n = self.space.points();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[k * self.space.points() + j]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The same control on grids with twice as many points and time steps,
    /// by linear interpolation (periodic in `x`).
    pub fn refined(&self) -> Result<Self> {
        let n = self.space.points();
        let space = SpatialGrid::new(self.space.length(), 2 * n)?;
        let time = TimeGrid::new(self.time.duration(), 2 * self.time.steps())?;
        let fine_row = |k: usize| -> Vec<f64> {
            let row = self.at(k);
            (0..2 * n)
                .map(|j| if j % 2 == 0 { row[j / 2] } else { 0.5 * (row[j / 2] + row[(j / 2 + 1) % n]) })
                .collect()
        };
        let mut values = Vec::with_capacity(space.points() * time.nodes());
        let mut prev = fine_row(0);
        values.extend_from_slice(&prev);
        for k in 1..self.time.nodes() {
            let next = fine_row(k);
            values.extend(prev.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)));
            values.extend_from_slice(&next);
            prev = next;
        }
        Self::new(self.kind, space, time, values)
    }

    pub(crate) fn check_grids(&self, space: &SpatialGrid, time: &TimeGrid) -> Result<()> {
        self.space.check_same(space)?;
        self.time.check_same(time)
    }
}
