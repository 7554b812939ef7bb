//! Flat binary parameter checkpoints.
//!
//! Layout: the magic bytes `PCN1`, then one record per parameter until end of
//! file. A record is a little-endian `u32` name length, the UTF-8 name, a
//! `u32` rank, `rank` little-endian `u64` dimensions, and the values as
//! little-endian `f64` in row-major order.

use std::io::{self, Read, Write};

use super::ParamStore;
use crate::error::{invalid, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PCN1";

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut out: W) -> io::Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    for id in store.ids() {
        let name = store.name(id).as_bytes();
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name)?;
        let shape = store.shape(id);
        out.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &d in shape {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in store.value(id) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()
}

fn read_u32(buf: &[u8], pos: &mut usize) -> Result<u32> {
    let bytes = buf
        .get(*pos..*pos + 4)
        .ok_or_else(|| invalid!("checkpoint truncated at byte {pos}"))?;
    *pos += 4;
    Ok(u32::from_le_bytes(bytes.try_into().expect("4 bytes")))
}

fn read_u64(buf: &[u8], pos: &mut usize) -> Result<u64> {
    let bytes = buf
        .get(*pos..*pos + 8)
        .ok_or_else(|| invalid!("checkpoint truncated at byte {pos}"))?;
    *pos += 8;
    Ok(u64::from_le_bytes(bytes.try_into().expect("8 bytes")))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Vec<CheckpointRecord>> {
    let mut buf = Vec::new();
    input
        .read_to_end(&mut buf)
        .map_err(|e| crate::Error::io("<checkpoint>", e))?;
    if buf.len() < 4 || &buf[..4] != CHECKPOINT_MAGIC {
        return Err(invalid!("not a PCN1 checkpoint"));
    }
    let mut pos = 4;
    let mut records = Vec::new();
    while pos < buf.len() {
        let name_len = read_u32(&buf, &mut pos)? as usize;
        let name_bytes = buf
            .get(pos..pos + name_len)
            .ok_or_else(|| invalid!("checkpoint truncated in parameter name"))?;
        let name = String::from_utf8(name_bytes.to_vec()).map_err(|_| invalid!("parameter name is not UTF-8"))?;
        pos += name_len;
        let rank = read_u32(&buf, &mut pos)? as usize;
        let shape = (0..rank)
            .map(|_| read_u64(&buf, &mut pos).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let values = (0..n)
            .map(|_| read_u64(&buf, &mut pos).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        records.push(CheckpointRecord { name, shape, values });
    }
    Ok(records)
}

impl ParamStore {
    /// Loads every record into the parameter of the same name.
    pub fn load_records(&mut self, records: &[CheckpointRecord]) -> Result<()> {
        if records.len() != self.len() {
            return Err(invalid!(
                "checkpoint has {} parameters, model has {}",
                records.len(),
                self.len()
            ));
        }
        for r in records {
            self.load(&r.name, &r.shape, &r.values)?;
        }
        Ok(())
    }
}
