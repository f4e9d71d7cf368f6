//! Checkpoint serialization.
//!
//! Layout: magic `SYMC`, format version (u32 LE), length-prefixed model-spec
//! JSON, then each parameter tensor as `rank: u32, extents: u32 × rank,
//! data: f32 LE × prod(extents)`, in the model's fixed parameter order.
//! Tensors are read back until end-of-file; round-trips are bit-exact.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"SYMC";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, spec_json: &serde_json::Value, tensors: &[&Tensor<f32>]) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let spec_bytes = serde_json::to_vec(spec_json)?;
    buf.extend_from_slice(&(spec_bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(&spec_bytes);
    for t in tensors {
        buf.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &e in t.shape() {
            buf.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(serde_json::Value, Vec<Tensor<f32>>)> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor::new(bytes.as_slice());

    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic).map_err(|_| truncated(path))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("{}: bad magic bytes", path.display())));
    }
    let version = read_u32(&mut cur).ok_or_else(|| truncated(path))?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported format version {version}",
            path.display()
        )));
    }
    let spec_len = read_u32(&mut cur).ok_or_else(|| truncated(path))? as usize;
    let mut spec_bytes = vec![0u8; spec_len];
    cur.read_exact(&mut spec_bytes).map_err(|_| truncated(path))?;
    let spec: serde_json::Value = serde_json::from_slice(&spec_bytes)?;

    let mut tensors = Vec::new();
    loop {
        let rank = match read_u32(&mut cur) {
            Some(r) => r as usize,
            None => break, // clean EOF between tensors
        };
        if rank > 8 {
            return Err(Error::Checkpoint(format!("{}: implausible tensor rank {rank}", path.display())));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut cur).ok_or_else(|| truncated(path))? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = vec![0f32; len];
        for v in &mut data {
            let mut b = [0u8; 4];
            cur.read_exact(&mut b).map_err(|_| truncated(path))?;
            *v = f32::from_le_bytes(b);
        }
        tensors.push(Tensor::from_vec(&shape, data).expect("length matches by construction"));
    }
    Ok((spec, tensors))
}

fn read_u32(cur: &mut Cursor<&[u8]>) -> Option<u32> {
    let mut b = [0u8; 4];
    cur.read_exact(&mut b).ok()?;
    Some(u32::from_le_bytes(b))
}

fn truncated(path: &Path) -> Error {
    Error::Checkpoint(format!("{}: truncated file", path.display()))
}
