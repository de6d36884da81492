//! File formats for fields and trajectories.
//!
//! * Field CSV: header `x,value` (1D) or `x,y,value` (2D), one row per
//!   interior node in storage order.
//! * Field JSON: `{"grid": {dim, lengths, n, h}, "values": [...]}`.
//! * Trajectory CSV: header `t,node,value`.
//! * Trajectory binary, all little-endian: `u64 dim`, `u64 stored state
//!   count`, `u64 n` per axis, then the states as row-major `f64`s.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::Trajectory;
use crate::mesh::{Field, Grid, GridSpec};

#[derive(Debug, Serialize, Deserialize)]
struct FieldDoc {
    grid: GridSpec,
    values: Vec<f64>,
}

pub fn write_field_csv<W: Write>(field: &Field, out: W) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(out);
    if grid.dim() == 1 {
        w.write_record(["x", "value"])?;
    } else {
        w.write_record(["x", "y", "value"])?;
    }
    for (i, v) in field.values().iter().enumerate() {
        let x = grid.coordinates(i);
        if grid.dim() == 1 {
            w.serialize((x[0], v))?;
        } else {
            w.serialize((x[0], x[1], v))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the `value` column of a field CSV onto `grid`.
pub fn read_field_csv<R: Read>(grid: Grid, input: R) -> Result<Field> {
    let mut r = csv::Reader::from_reader(input);
    let col = r
        .headers()?
        .iter()
        .position(|h| h.trim() == "value")
        .ok_or_else(|| invalid("csv", "missing `value` column"))?;
    let mut values = Vec::with_capacity(grid.len());
    for rec in r.records() {
        let rec = rec?;
        let cell = rec.get(col).unwrap_or("");
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| invalid("csv", format!("cannot parse `{cell}` as a number")))?;
        values.push(v);
    }
    Field::new(grid, values)
}

pub fn write_field_json<W: Write>(field: &Field, out: W) -> Result<()> {
    let doc = FieldDoc {
        grid: field.grid().spec(),
        values: field.values().to_vec(),
    };
    serde_json::to_writer(out, &doc)?;
    Ok(())
}

pub fn read_field_json<R: Read>(input: R) -> Result<Field> {
    let doc: FieldDoc = serde_json::from_reader(input)?;
    let grid = Grid::try_from(doc.grid)?;
    Field::new(grid, doc.values)
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "node", "value"])?;
    for (t, state) in traj.times().iter().zip(traj.states()) {
        for (node, v) in state.values().iter().enumerate() {
            w.serialize((t, node, v))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_binary<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let grid = traj.initial().grid();
    out.write_all(&(grid.dim() as u64).to_le_bytes())?;
    out.write_all(&(traj.len() as u64).to_le_bytes())?;
    for &n in grid.n() {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    for state in traj.states() {
        for v in state.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Contents of a binary trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTrajectory {
    pub n: Vec<usize>,
    pub states: Vec<Vec<f64>>,
}

pub fn read_trajectory_binary<R: Read>(mut input: R) -> Result<BinaryTrajectory> {
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let dim = next_u64(&mut input)? as usize;
    if !(1..=2).contains(&dim) {
        return Err(invalid("binary", format!("bad dimension {dim}")));
    }
    let count = next_u64(&mut input)? as usize;
    let n: Vec<usize> = (0..dim)
        .map(|_| next_u64(&mut input).map(|v| v as usize))
        .collect::<Result<_>>()?;
    let per_state: usize = n.iter().product();
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() != count * per_state * 8 {
        return Err(Error::GridMismatch(format!(
            "payload holds {} bytes, header promises {}",
            buf.len(),
            count * per_state * 8
        )));
    }
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let states = values
        .chunks(per_state.max(1))
        .map(<[f64]>::to_vec)
        .collect();
    Ok(BinaryTrajectory { n, states })
}
