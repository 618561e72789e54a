//! Run-state persistence.
//!
//! A snapshot is `magic · version · payload length · SHA-256(payload) ·
//! payload`, everything little-endian. The payload carries the full
//! evolved state — data fields, flux datum, the reconstructed stream
//! function with its metadata, and the tracer particles — as raw f64
//! bits, so a read write round trip is bitwise exact and a resumed run
//! continues the trajectory of the uninterrupted one bit for bit.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use cylqg_core::elliptic::{ReconstructionMeta, StreamFunction};
use cylqg_core::{make_grid, CylGrid, ParticleSet, QGState, ScalarField3D, Surface, SurfaceField};

const MAGIC: &[u8; 8] = b"CYLQGSN\0";
const VERSION: u32 = 1;

/// Why a snapshot could not be read.
#[derive(Debug)]
pub enum SnapshotError {
    Io(String),
    /// Not a snapshot file at all.
    BadMagic,
    VersionMismatch { found: u32 },
    /// Payload shorter than the header promised.
    Truncated,
    /// Payload bytes do not hash to the stored checksum.
    ChecksumMismatch,
    /// Structurally valid bytes that decode to an inconsistent state.
    Malformed(String),
}

impl std::fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnapshotError::Io(e) => write!(f, "{e}"),
            SnapshotError::BadMagic => write!(f, "not a snapshot file (bad magic)"),
            SnapshotError::VersionMismatch { found } => {
                write!(f, "snapshot format version {found} is not supported (expected {VERSION})")
            }
            SnapshotError::Truncated => write!(f, "snapshot is truncated"),
            SnapshotError::ChecksumMismatch => write!(f, "snapshot payload fails its checksum"),
            SnapshotError::Malformed(m) => write!(f, "malformed snapshot: {m}"),
        }
    }
}

impl std::error::Error for SnapshotError {}

/// Decoded snapshot contents.
pub struct Snapshot {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_z: usize,
    pub h: f64,
    pub t: f64,
    /// Committed steps so far; snapshot numbering and resumed budgets
    /// continue from here.
    pub step: u64,
    pub j: Vec<f64>,
    pub f: Vec<f64>,
    pub g_bottom: Vec<f64>,
    pub g_top: Vec<f64>,
    pub psi: Vec<f64>,
    pub lateral_trace: Vec<f64>,
    pub mean: f64,
    pub compat_residual: f64,
    pub j_shift: f64,
    pub residual_norm: f64,
    pub particles_x: Vec<f64>,
    pub particles_y: Vec<f64>,
    pub particles_level: Vec<u64>,
}

impl Snapshot {
    /// Captures a state and its tracer particles.
    pub fn capture(state: &QGState, particles: &ParticleSet, step: u64) -> Snapshot {
        let g = state.grid();
        Snapshot {
            n_r: g.n_r,
            n_theta: g.n_theta,
            n_z: g.n_z,
            h: g.h,
            t: state.t,
            step,
            j: state.j.clone(),
            f: state.f.values.clone(),
            g_bottom: state.g_bottom.values.clone(),
            g_top: state.g_top.values.clone(),
            psi: state.psi_cache.psi.values.clone(),
            lateral_trace: state.psi_cache.lateral_trace.clone(),
            mean: state.psi_cache.mean,
            compat_residual: state.psi_cache.meta.compat_residual,
            j_shift: state.psi_cache.meta.j_shift,
            residual_norm: state.psi_cache.meta.residual_norm,
            particles_x: particles.x.clone(),
            particles_y: particles.y.clone(),
            particles_level: particles.level.iter().map(|&l| l as u64).collect(),
        }
    }

    /// Rebuilds the state and particles on a freshly constructed grid. The
    /// stream function is restored from the stored bits, not re-solved, so
    /// the resumed trajectory is bitwise the uninterrupted one.
    pub fn restore(&self) -> Result<(QGState, ParticleSet), SnapshotError> {
        let grid: Arc<CylGrid> = Arc::new(
            make_grid(self.n_r, self.n_theta, self.n_z, self.h)
                .map_err(|e| SnapshotError::Malformed(format!("grid: {e}")))?,
        );
        let vol = self.n_r * self.n_theta * self.n_z;
        let disk = self.n_r * self.n_theta;
        let checks = [
            ("f", self.f.len(), vol),
            ("psi", self.psi.len(), vol),
            ("g_bottom", self.g_bottom.len(), disk),
            ("g_top", self.g_top.len(), disk),
            ("j", self.j.len(), self.n_z),
            ("lateral_trace", self.lateral_trace.len(), self.n_z),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(SnapshotError::Malformed(format!("{name}: {got} samples, expected {want}")));
            }
        }
        let state = QGState {
            f: ScalarField3D { grid: grid.clone(), values: self.f.clone() },
            g_bottom: SurfaceField {
                grid: grid.clone(),
                surface: Surface::Bottom,
                values: self.g_bottom.clone(),
            },
            g_top: SurfaceField {
                grid: grid.clone(),
                surface: Surface::Top,
                values: self.g_top.clone(),
            },
            j: self.j.clone(),
            t: self.t,
            psi_cache: StreamFunction {
                psi: ScalarField3D { grid: grid.clone(), values: self.psi.clone() },
                lateral_trace: self.lateral_trace.clone(),
                mean: self.mean,
                meta: ReconstructionMeta {
                    compat_residual: self.compat_residual,
                    j_shift: self.j_shift,
                    residual_norm: self.residual_norm,
                },
            },
        };
        let positions: Vec<(f64, f64)> =
            self.particles_x.iter().zip(&self.particles_y).map(|(&x, &y)| (x, y)).collect();
        let levels: Vec<usize> = self.particles_level.iter().map(|&l| l as usize).collect();
        let particles = ParticleSet::new(&positions, &levels, self.n_z, self.t)
            .map_err(|e| SnapshotError::Malformed(format!("particles: {e}")))?;
        Ok((state, particles))
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let push_u64 = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
        let push_f64 = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
        let push_all = |out: &mut Vec<u8>, vs: &[f64]| {
            for v in vs {
                out.extend_from_slice(&v.to_le_bytes());
            }
        };
        push_u64(&mut out, self.n_r as u64);
        push_u64(&mut out, self.n_theta as u64);
        push_u64(&mut out, self.n_z as u64);
        push_f64(&mut out, self.h);
        push_f64(&mut out, self.t);
        push_u64(&mut out, self.step);
        push_all(&mut out, &self.j);
        push_all(&mut out, &self.f);
        push_all(&mut out, &self.g_bottom);
        push_all(&mut out, &self.g_top);
        push_all(&mut out, &self.psi);
        push_all(&mut out, &self.lateral_trace);
        push_f64(&mut out, self.mean);
        push_f64(&mut out, self.compat_residual);
        push_f64(&mut out, self.j_shift);
        push_f64(&mut out, self.residual_norm);
        push_u64(&mut out, self.particles_x.len() as u64);
        push_all(&mut out, &self.particles_x);
        push_all(&mut out, &self.particles_y);
        for l in &self.particles_level {
            push_u64(&mut out, *l);
        }
        out
    }

    /// Serializes to `path`.
    pub fn write(&self, path: &Path) -> Result<(), SnapshotError> {
        let payload = self.payload();
        let digest = Sha256::digest(&payload);
        let mut bytes = Vec::with_capacity(8 + 4 + 8 + 32 + payload.len());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&digest);
        bytes.extend_from_slice(&payload);
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| SnapshotError::Io(format!("cannot write {}: {e}", path.display())))
    }

    /// Deserializes from `path`, verifying magic, version, and checksum
    /// before decoding; a corrupt file never yields a partial state.
    pub fn read(path: &Path) -> Result<Snapshot, SnapshotError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| SnapshotError::Io(format!("cannot read {}: {e}", path.display())))?;
        if bytes.len() < 8 + 4 + 8 + 32 {
            return Err(if bytes.starts_with(&MAGIC[..bytes.len().min(8)]) && bytes.len() >= 8 {
                SnapshotError::Truncated
            } else {
                SnapshotError::BadMagic
            });
        }
        if &bytes[..8] != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(SnapshotError::VersionMismatch { found: version });
        }
        let payload_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let digest_stored = &bytes[20..52];
        let payload = &bytes[52..];
        if payload.len() != payload_len {
            return Err(SnapshotError::Truncated);
        }
        let digest = Sha256::digest(payload);
        if digest.as_slice() != digest_stored {
            return Err(SnapshotError::ChecksumMismatch);
        }
        Self::decode(payload)
    }

    fn decode(payload: &[u8]) -> Result<Snapshot, SnapshotError> {
        let mut cursor = Cursor { bytes: payload, pos: 0 };
        let n_r = cursor.u64()? as usize;
        let n_theta = cursor.u64()? as usize;
        let n_z = cursor.u64()? as usize;
        let h = cursor.f64()?;
        let t = cursor.f64()?;
        let step = cursor.u64()?;
        let vol = n_r
            .checked_mul(n_theta)
            .and_then(|d| d.checked_mul(n_z))
            .ok_or_else(|| SnapshotError::Malformed("grid dimensions overflow".into()))?;
        let disk = n_r * n_theta;
        let j = cursor.f64_vec(n_z)?;
        let f = cursor.f64_vec(vol)?;
        let g_bottom = cursor.f64_vec(disk)?;
        let g_top = cursor.f64_vec(disk)?;
        let psi = cursor.f64_vec(vol)?;
        let lateral_trace = cursor.f64_vec(n_z)?;
        let mean = cursor.f64()?;
        let compat_residual = cursor.f64()?;
        let j_shift = cursor.f64()?;
        let residual_norm = cursor.f64()?;
        let n_particles = cursor.u64()? as usize;
        let particles_x = cursor.f64_vec(n_particles)?;
        let particles_y = cursor.f64_vec(n_particles)?;
        let mut particles_level = Vec::with_capacity(n_particles);
        for _ in 0..n_particles {
            particles_level.push(cursor.u64()?);
        }
        if cursor.pos != payload.len() {
            return Err(SnapshotError::Malformed(format!(
                "{} trailing bytes",
                payload.len() - cursor.pos
            )));
        }
        Ok(Snapshot {
            n_r,
            n_theta,
            n_z,
            h,
            t,
            step,
            j,
            f,
            g_bottom,
            g_top,
            psi,
            lateral_trace,
            mean,
            compat_residual,
            j_shift,
            residual_norm,
            particles_x,
            particles_y,
            particles_level,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], SnapshotError> {
        if self.pos + n > self.bytes.len() {
            return Err(SnapshotError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>, SnapshotError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_snapshot() -> Snapshot {
        Snapshot {
            n_r: 4,
            n_theta: 4,
            n_z: 4,
            h: 1.5,
            t: 0.25,
            step: 7,
            j: vec![0.1; 4],
            f: (0..64).map(|i| (i as f64).sin()).collect(),
            g_bottom: vec![0.5; 16],
            g_top: vec![-0.5; 16],
            psi: (0..64).map(|i| (i as f64).cos()).collect(),
            lateral_trace: vec![0.01, 0.02, 0.03, 0.04],
            mean: -3.2e-17,
            compat_residual: 1.1e-12,
            j_shift: 0.0,
            residual_norm: 4.4e-13,
            particles_x: vec![0.3, -0.1],
            particles_y: vec![0.0, 0.2],
            particles_level: vec![0, 3],
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let snap = sample_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cqgs");
        snap.write(&path).unwrap();
        let back = Snapshot::read(&path).unwrap();
        assert_eq!(back.step, 7);
        assert_eq!(back.t.to_bits(), snap.t.to_bits());
        assert!(snap.f.iter().zip(&back.f).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(snap.psi.iter().zip(&back.psi).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.particles_level, vec![0, 3]);
        assert_eq!(back.mean.to_bits(), snap.mean.to_bits());
    }

    #[test]
    fn truncation_and_corruption_are_detected() {
        let snap = sample_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cqgs");
        snap.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let cut = dir.path().join("cut.cqgs");
        std::fs::write(&cut, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(Snapshot::read(&cut), Err(SnapshotError::Truncated)));

        let mut flipped = bytes.clone();
        let last = flipped.len() - 1;
        flipped[last] ^= 0x01;
        std::fs::write(&cut, &flipped).unwrap();
        assert!(matches!(Snapshot::read(&cut), Err(SnapshotError::ChecksumMismatch)));

        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        std::fs::write(&cut, &wrong_version).unwrap();
        assert!(matches!(Snapshot::read(&cut), Err(SnapshotError::VersionMismatch { found: 9 })));

        std::fs::write(&cut, b"not a snapshot").unwrap();
        assert!(matches!(Snapshot::read(&cut), Err(SnapshotError::BadMagic)));
    }

    #[test]
    fn restore_rebuilds_a_consistent_state() {
        // zero data on a real grid: the restored state must carry the
        // stored stream function without re-solving
        let grid = Arc::new(make_grid(6, 8, 6, 1.0).unwrap());
        let state = QGState {
            f: ScalarField3D::zeros(&grid),
            g_bottom: SurfaceField::zeros(&grid, Surface::Bottom),
            g_top: SurfaceField::zeros(&grid, Surface::Top),
            j: vec![0.0; 6],
            t: 0.5,
            psi_cache: StreamFunction {
                psi: ScalarField3D::from_fn(&grid, |r, _, _| r),
                lateral_trace: vec![1.0; 6],
                mean: 0.0,
                meta: ReconstructionMeta { compat_residual: 0.0, j_shift: 0.0, residual_norm: 0.0 },
            },
        };
        let particles = ParticleSet::new(&[(0.2, 0.1)], &[2], 6, 0.5).unwrap();
        let snap = Snapshot::capture(&state, &particles, 3);
        let (back, p) = snap.restore().unwrap();
        assert_eq!(back.t, 0.5);
        assert_eq!(p.level, vec![2]);
        assert!(back
            .psi_cache
            .psi
            .values
            .iter()
            .zip(&state.psi_cache.psi.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
