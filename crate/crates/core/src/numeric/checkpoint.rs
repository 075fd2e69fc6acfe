//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes   "EMTCKPT\0"
//! version  u32       currently 1
//! count    u32       number of entries
//! entry*   name_len u32, name (utf-8), rank u32, dims u64 × rank,
//!          values f64 × product(dims) (IEEE-754 bit patterns)
//! ```
//!
//! Values are written as raw bit patterns, so a save/load cycle is exact.

use std::io::{Read, Write};

use super::param::ParamStore;
use super::tensor::Tensor;
use super::{NumericError, Result};

const MAGIC: &[u8; 8] = b"EMTCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(store.len() as u32).to_le_bytes())?;
    for (_, p) in store.iter() {
        let name = p.name.as_bytes();
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name)?;
        out.write_all(&(p.value.shape().len() as u32).to_le_bytes())?;
        for &d in p.value.shape() {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in p.value.data() {
            out.write_all(&v.to_bits().to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a checkpoint into a fresh store, preserving entry order.
pub fn read_checkpoint<R: Read>(mut input: R) -> Result<ParamStore> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NumericError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(NumericError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = read_u32(&mut input)?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = read_u32(&mut input)? as usize;
        let mut name = vec![0u8; name_len];
        input.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| NumericError::Checkpoint(e.to_string()))?;
        let rank = read_u32(&mut input)? as usize;
        if rank == 0 || rank > 2 {
            return Err(NumericError::Checkpoint(format!("{name}: rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            shape.push(u64::from_le_bytes(b) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            data.push(f64::from_bits(u64::from_le_bytes(b)));
        }
        store.add(name, Tensor::new(shape, data)?)?;
    }
    Ok(store)
}

/// Copies values from `loaded` into `target` by name. Every target
/// parameter must be present with the same shape.
pub fn restore_into(target: &mut ParamStore, loaded: &ParamStore) -> Result<()> {
    let ids: Vec<_> = target.iter().map(|(id, p)| (id, p.name.clone())).collect();
    for (id, name) in ids {
        let src = loaded
            .by_name(&name)
            .ok_or_else(|| NumericError::Checkpoint(format!("missing parameter {name}")))?;
        target.set(id, src.value.clone())?;
    }
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
