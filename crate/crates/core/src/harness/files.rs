//! Binary field files.
//!
//! ```text
//! "GPEC1"  u16 version  u8 kind  u8 dtype  u64 N  u64 steps  f64 L  f64 T
//! payload: little-endian f64, complex values as interleaved (re, im)
//! u32 CRC32 of everything before it
//! ```
//!
//! Wave fields have `steps = 0` and `T = 0`. Controls and trajectories are
//! stored time-major, one row of `N` samples per node.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ControlField, ControlKind, WaveField};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::propagator::Trajectory;

pub const MAGIC: &[u8; 5] = b"GPEC1";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 5 + 2 + 1 + 1 + 8 + 8 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Wave = 0,
    Potential = 1,
    Nonlinearity = 2,
    Trajectory = 3,
}

impl FieldKind {
    fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => FieldKind::Wave,
            1 => FieldKind::Potential,
            2 => FieldKind::Nonlinearity,
            3 => FieldKind::Trajectory,
            _ => return None,
        })
    }

    pub fn dtype(self) -> DType {
        match self {
            FieldKind::Wave | FieldKind::Trajectory => DType::Complex,
            FieldKind::Potential | FieldKind::Nonlinearity => DType::Real,
        }
    }

    /// Number of f64 words in the payload.
    pub fn payload_words(self, points: u64, steps: u64) -> Option<u64> {
        let rows = match self {
            FieldKind::Wave => 1,
            _ => steps.checked_add(1)?,
        };
        let width = match self.dtype() {
            DType::Real => 1,
            DType::Complex => 2,
        };
        points.checked_mul(rows)?.checked_mul(width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    Real = 0,
    Complex = 1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub kind: FieldKind,
    pub points: u64,
    pub steps: u64,
    pub length: f64,
    pub duration: f64,
    pub data: Vec<f64>,
}

fn interleave(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(data: &[f64]) -> Vec<Complex64> {
    data.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

impl FieldFile {
    pub fn from_wave(psi: &WaveField) -> Self {
        let g = psi.grid();
        Self {
            kind: FieldKind::Wave,
            points: g.points() as u64,
            steps: 0,
            length: g.length(),
            duration: 0.0,
            data: interleave(psi.values()),
        }
    }

    pub fn from_control(c: &ControlField) -> Self {
        Self {
            kind: match c.kind() {
                ControlKind::Potential => FieldKind::Potential,
                ControlKind::Nonlinearity => FieldKind::Nonlinearity,
            },
            points: c.space().points() as u64,
            steps: c.time().steps() as u64,
            length: c.space().length(),
            duration: c.time().duration(),
            data: c.values().to_vec(),
        }
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let g = traj.grid();
        Self {
            kind: FieldKind::Trajectory,
            points: g.points() as u64,
            steps: traj.time().steps() as u64,
            length: g.length(),
            duration: traj.time().duration(),
            data: traj.snapshots().iter().flat_map(|s| interleave(s.values())).collect(),
        }
    }

    fn space(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.length, self.points as usize)
    }

    fn time(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.duration, self.steps as usize)
    }

    fn expect_kind(&self, ok: bool, want: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("field file holds a {:?} field, expected {want}", self.kind)))
        }
    }

    pub fn to_wave(&self) -> Result<WaveField> {
        self.expect_kind(self.kind == FieldKind::Wave, "a wave field")?;
        WaveField::new(self.space()?, deinterleave(&self.data))
    }

    pub fn to_control(&self) -> Result<ControlField> {
        let kind = match self.kind {
            FieldKind::Potential => ControlKind::Potential,
            FieldKind::Nonlinearity => ControlKind::Nonlinearity,
            _ => return self.expect_kind(false, "a control field").map(|_| unreachable!()),
        };
        ControlField::new(kind, self.space()?, self.time()?, self.data.clone())
    }

    pub fn to_trajectory(&self) -> Result<Trajectory> {
        self.expect_kind(self.kind == FieldKind::Trajectory, "a trajectory")?;
        let space = self.space()?;
        let snapshots = self
            .data
            .chunks_exact(2 * self.points as usize)
            .map(|row| WaveField::new(space, deinterleave(row)))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.time()?, snapshots)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len() + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind as u8);
        out.push(self.kind.dtype() as u8);
        out.extend_from_slice(&self.points.to_le_bytes());
        out.extend_from_slice(&self.steps.to_le_bytes());
        out.extend_from_slice(&self.length.to_le_bytes());
        out.extend_from_slice(&self.duration.to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parses a file image; `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::Corrupt {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..5] != MAGIC {
            return Err(corrupt("bad magic".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(corrupt(format!("checksum {actual:08x} does not match stored {stored:08x}")));
        }
        let u64_at = |i: usize| u64::from_le_bytes(body[i..i + 8].try_into().expect("8 bytes"));
        let version = u16::from_le_bytes([body[5], body[6]]);
        if version != VERSION {
            return Err(Error::Version(version));
        }
        let kind = FieldKind::from_tag(body[7]).ok_or_else(|| corrupt(format!("unknown kind tag {}", body[7])))?;
        if body[8] != kind.dtype() as u8 {
            return Err(corrupt(format!("dtype tag {} does not fit kind {kind:?}", body[8])));
        }
        let points = u64_at(9);
        let steps = u64_at(17);
        let length = f64::from_bits(u64_at(25));
        let duration = f64::from_bits(u64_at(33));
        let payload = &body[HEADER_LEN..];
        let words = kind
            .payload_words(points, steps)
            .ok_or_else(|| corrupt("header sizes overflow".into()))?;
        if payload.len() as u64 != words.saturating_mul(8) {
            return Err(corrupt(format!(
                "payload has {} bytes, header implies {} values",
                payload.len(),
                words
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self {
            kind,
            points,
            steps,
            length,
            duration,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        Self::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn header_layout() {
        let g = SpatialGrid::new(20.0, 8).unwrap();
        let f = FieldFile::from_wave(&WaveField::zeros(g));
        let b = f.to_bytes();
        assert_eq!(&b[..5], b"GPEC1");
        assert_eq!(b.len(), HEADER_LEN + 16 * 8 + 4);
        assert_eq!(u64::from_le_bytes(b[9..17].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(b[25..33].try_into().unwrap()), 20.0);
    }

    #[test]
    fn detects_damage() {
        let g = SpatialGrid::new(20.0, 8).unwrap();
        let t = TimeGrid::new(1.0, 3).unwrap();
        let c = ControlField::from_fn(ControlKind::Potential, g, t, |x, t| x * t).unwrap();
        let good = FieldFile::from_control(&c).to_bytes();

        let mut flipped = good.clone();
        flipped[HEADER_LEN + 3] ^= 0x10;
        assert!(matches!(FieldFile::from_bytes(&flipped, p()), Err(Error::Corrupt { .. })));

        assert!(matches!(FieldFile::from_bytes(&good[..good.len() - 9], p()), Err(Error::Corrupt { .. })));
        assert!(matches!(FieldFile::from_bytes(b"GPEC1", p()), Err(Error::Corrupt { .. })));

        let mut versioned = good.clone();
        versioned[5] = 9;
        let n = versioned.len() - 4;
        let crc = crc32fast::hash(&versioned[..n]);
        versioned[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(FieldFile::from_bytes(&versioned, p()), Err(Error::Version(9))));

        let mut short = good[..good.len() - 12].to_vec();
        let crc = crc32fast::hash(&short);
        short.extend_from_slice(&crc.to_le_bytes());
        let err = FieldFile::from_bytes(&short, p()).unwrap_err().to_string();
        assert!(err.contains("payload"), "{err}");
    }

    #[test]
    fn kind_checked_on_conversion() {
        let g = SpatialGrid::new(20.0, 8).unwrap();
        let f = FieldFile::from_wave(&WaveField::zeros(g));
        assert!(f.to_control().is_err());
        assert!(f.to_trajectory().is_err());
        assert!(f.to_wave().is_ok());
    }

    proptest! {
        #[test]
        fn control_round_trip_is_bitwise(n in (4usize..12).prop_map(|h| 2 * h), steps in 1usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = SpatialGrid::new(7.5, n).unwrap();
            let t = TimeGrid::new(2.5, steps).unwrap();
            let vals = (0..n * (steps + 1)).map(|_| rng.random_range(-1e3..1e3)).collect();
            let c = ControlField::new(ControlKind::Nonlinearity, g, t, vals).unwrap();
            let bytes = FieldFile::from_control(&c).to_bytes();
            let back = FieldFile::from_bytes(&bytes, p()).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
            prop_assert_eq!(back.to_control().unwrap(), c);
        }

        #[test]
        fn wave_and_trajectory_round_trip(n in (4usize..12).prop_map(|h| 2 * h), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = SpatialGrid::new(3.0, n).unwrap();
            let mut wave = || WaveField::new(g, (0..n).map(|_| Complex64::new(rng.random(), rng.random())).collect()).unwrap();
            let psi = wave();
            let back = FieldFile::from_bytes(&FieldFile::from_wave(&psi).to_bytes(), p()).unwrap().to_wave().unwrap();
            prop_assert_eq!(&back, &psi);
            let traj = Trajectory::new(TimeGrid::new(1.0, 2).unwrap(), vec![psi, wave(), wave()]).unwrap();
            let back = FieldFile::from_bytes(&FieldFile::from_trajectory(&traj).to_bytes(), p()).unwrap();
            let back = back.to_trajectory().unwrap();
            prop_assert_eq!(back.snapshots(), traj.snapshots());
        }
    }
}
