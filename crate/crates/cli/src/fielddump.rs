//! The shared field-dump format.
//!
//! A dump is one UTF-8 JSON header line terminated by `\n`, followed by
//! the raw samples as little-endian 64-bit floats in (r fastest, then θ,
//! then z) order — the same order the in-memory containers use. Surface
//! dumps omit the z axis and carry a `surface` tag.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use cylqg_core::{CylGrid, ScalarField3D, Surface, SurfaceField};

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    version: u32,
    field: String,
    n_r: usize,
    n_theta: usize,
    n_z: usize,
    h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    surface: Option<String>,
}

const FORMAT: &str = "cylqg-field";
const VERSION: u32 = 1;

fn write_dump(
    path: &Path,
    header: &FieldHeader,
    values: &[f64],
) -> Result<(), String> {
    let mut out = Vec::with_capacity(256 + 8 * values.len());
    serde_json::to_writer(&mut out, header).expect("header serialization cannot fail");
    out.push(b'\n');
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    file.write_all(&out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes a volume field dump.
pub fn write_volume(path: &Path, name: &str, field: &ScalarField3D) -> Result<(), String> {
    let g = &field.grid;
    let header = FieldHeader {
        format: FORMAT.into(),
        version: VERSION,
        field: name.into(),
        n_r: g.n_r,
        n_theta: g.n_theta,
        n_z: g.n_z,
        h: g.h,
        surface: None,
    };
    write_dump(path, &header, &field.values)
}

/// Writes a surface field dump.
pub fn write_surface(path: &Path, name: &str, field: &SurfaceField) -> Result<(), String> {
    let g = &field.grid;
    let header = FieldHeader {
        format: FORMAT.into(),
        version: VERSION,
        field: name.into(),
        n_r: g.n_r,
        n_theta: g.n_theta,
        n_z: g.n_z,
        h: g.h,
        surface: Some(surface_tag(field.surface).into()),
    };
    write_dump(path, &header, &field.values)
}

fn surface_tag(s: Surface) -> &'static str {
    match s {
        Surface::Bottom => "bottom",
        Surface::Top => "top",
    }
}

fn read_dump(path: &Path) -> Result<(FieldHeader, Vec<f64>), String> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format!("{}: no header line", path.display()))?;
    let header: FieldHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| format!("{}: bad header: {e}", path.display()))?;
    if header.format != FORMAT {
        return Err(format!("{}: not a field dump (format {:?})", path.display(), header.format));
    }
    if header.version != VERSION {
        return Err(format!("{}: unsupported version {}", path.display(), header.version));
    }
    let payload = &bytes[newline + 1..];
    if payload.len() % 8 != 0 {
        return Err(format!("{}: truncated payload", path.display()));
    }
    let values: Vec<f64> =
        payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

fn check_grid(header: &FieldHeader, grid: &CylGrid, path: &Path) -> Result<(), String> {
    if header.n_r != grid.n_r
        || header.n_theta != grid.n_theta
        || header.n_z != grid.n_z
        || header.h != grid.h
    {
        return Err(format!(
            "{}: dump grid {}×{}×{} (h = {}) does not match the config grid {}×{}×{} (h = {})",
            path.display(),
            header.n_r,
            header.n_theta,
            header.n_z,
            header.h,
            grid.n_r,
            grid.n_theta,
            grid.n_z,
            grid.h,
        ));
    }
    Ok(())
}

/// Reads a volume field dump onto the given grid.
pub fn read_volume(path: &Path, grid: &Arc<CylGrid>) -> Result<ScalarField3D, String> {
    let (header, values) = read_dump(path)?;
    check_grid(&header, grid, path)?;
    if header.surface.is_some() {
        return Err(format!("{}: surface dump where a volume dump was expected", path.display()));
    }
    let expect = grid.n_r * grid.n_theta * grid.n_z;
    if values.len() != expect {
        return Err(format!("{}: {} samples, expected {expect}", path.display(), values.len()));
    }
    Ok(ScalarField3D { grid: grid.clone(), values })
}

/// Reads a surface field dump onto the given grid and surface.
pub fn read_surface(
    path: &Path,
    grid: &Arc<CylGrid>,
    surface: Surface,
) -> Result<SurfaceField, String> {
    let (header, values) = read_dump(path)?;
    check_grid(&header, grid, path)?;
    let tag = surface_tag(surface);
    match header.surface.as_deref() {
        Some(t) if t == tag => {}
        Some(other) => {
            return Err(format!("{}: dump is for surface {other:?}, expected {tag:?}", path.display()));
        }
        None => {
            return Err(format!("{}: volume dump where a surface dump was expected", path.display()));
        }
    }
    let expect = grid.n_r * grid.n_theta;
    if values.len() != expect {
        return Err(format!("{}: {} samples, expected {expect}", path.display(), values.len()));
    }
    Ok(SurfaceField { grid: grid.clone(), surface, values })
}
