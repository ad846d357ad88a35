//! Little-endian binary containers for fields, noise paths and ensembles.
//!
//! * field: `dim u64, n u64, L f64, components u64`, then component-major `f64` values.
//! * noise path: `alpha f64, dim u64, dt f64, nsteps u64, seed u64, lane u64, step u64, level u64`,
//!   then step-major increments.
//! * ensemble: `N u64, dim u64, t f64`, then particle-major positions.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::particles::Ensemble;
use crate::stable::{NoisePath, StableParams, StreamKey};

fn put_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_values(r: &mut impl Read, count: usize) -> io::Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn put_values(w: &mut impl Write, values: &[f64]) -> io::Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)
}

fn header_usize(v: u64, what: &str, max: u64) -> Result<usize> {
    if v > max {
        return Err(Error::Config(format!("container header: {what} = {v} is out of range")));
    }
    Ok(v as usize)
}

pub fn write_field(w: &mut impl Write, f: &Field) -> Result<()> {
    let g = f.grid();
    put_u64(w, g.dim() as u64)?;
    put_u64(w, g.points_per_axis() as u64)?;
    put_f64(w, g.side_length())?;
    put_u64(w, f.components() as u64)?;
    put_values(w, f.values())?;
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<Field> {
    let dim = header_usize(get_u64(r)?, "dim", 2)?;
    let n = header_usize(get_u64(r)?, "n", 1 << 16)?;
    let side = get_f64(r)?;
    let components = header_usize(get_u64(r)?, "components", 64)?;
    let grid = Grid::new(dim, n, side)?;
    let values = get_values(r, components * grid.len())?;
    Field::new(grid, components, values)
}

pub fn write_noise_path(w: &mut impl Write, p: &NoisePath) -> Result<()> {
    put_f64(w, p.params.alpha)?;
    put_u64(w, p.params.dim as u64)?;
    put_f64(w, p.dt)?;
    put_u64(w, p.nsteps() as u64)?;
    put_u64(w, p.base.experiment_seed)?;
    put_u64(w, p.base.lane)?;
    put_u64(w, p.base.step)?;
    put_u64(w, p.level as u64)?;
    put_values(w, &p.increments)?;
    Ok(())
}

pub fn read_noise_path(r: &mut impl Read) -> Result<NoisePath> {
    let alpha = get_f64(r)?;
    let dim = header_usize(get_u64(r)?, "dim", 2)?;
    let dt = get_f64(r)?;
    let nsteps = header_usize(get_u64(r)?, "nsteps", 1 << 32)?;
    let base = StreamKey::new(get_u64(r)?, get_u64(r)?, get_u64(r)?);
    let level = header_usize(get_u64(r)?, "level", 64)? as u32;
    let params = StableParams::new(alpha, dim)?;
    let increments = get_values(r, nsteps * dim)?;
    Ok(NoisePath { params, dt, base, level, increments })
}

pub fn write_ensemble(w: &mut impl Write, e: &Ensemble) -> Result<()> {
    put_u64(w, e.len() as u64)?;
    put_u64(w, e.dim() as u64)?;
    put_f64(w, e.t)?;
    put_values(w, e.positions())?;
    Ok(())
}

/// Positions and time of a stored ensemble; lanes are `0..N`, the step is derived from `dt`.
pub fn read_ensemble(r: &mut impl Read, grid: Grid, base: StreamKey, dt: f64) -> Result<Ensemble> {
    let count = header_usize(get_u64(r)?, "N", 1 << 40)?;
    let dim = header_usize(get_u64(r)?, "dim", 2)?;
    let t = get_f64(r)?;
    if dim != grid.dim() {
        return Err(Error::Config(format!("ensemble has dim {dim}, grid has dim {}", grid.dim())));
    }
    let positions = get_values(r, count * dim)?;
    let mut e = Ensemble::new(grid, positions, base)?;
    e.t = t;
    e.step = (t / dt).round() as u64;
    Ok(e)
}
