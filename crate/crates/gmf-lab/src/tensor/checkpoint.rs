//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  b"GMFCKPT\n"
//! version 1 byte   currently 1
//! count   u64      number of records
//! record: name_len u32, name (UTF-8), rows u64, cols u64,
//!         rows*cols f64 values (row-major, IEEE-754 little-endian bits)
//! ```
//!
//! Round-tripping is bit-exact: values travel as raw bit patterns.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::matrix::Matrix;
use crate::tensor::optim::ParamSet;

const MAGIC: &[u8; 8] = b"GMFCKPT\n";
const VERSION: u8 = 1;

/// Write named matrices in the given order.
pub fn save_matrices(path: &Path, entries: &[(&str, &Matrix)]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(entries.len() as u64).to_le_bytes())?;
    for (name, m) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(m.rows() as u64).to_le_bytes())?;
        w.write_all(&(m.cols() as u64).to_le_bytes())?;
        for v in m.data() {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Save every parameter of a set, in insertion order.
pub fn save_params(path: &Path, params: &ParamSet) -> Result<()> {
    let entries: Vec<(&str, &Matrix)> = params
        .iter()
        .map(|(_, p)| (p.name.as_str(), &p.value))
        .collect();
    save_matrices(path, &entries)
}

/// Read every record of a checkpoint, in file order.
pub fn load_matrices(path: &Path) -> Result<Vec<(String, Matrix)>> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Contract(format!(
            "not a checkpoint: bad magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut version = [0u8; 1];
    read_exact(&mut r, &mut version, "version")?;
    if version[0] != VERSION {
        return Err(Error::Contract(format!(
            "unsupported checkpoint version {}",
            version[0]
        )));
    }
    let count = read_u64(&mut r, "record count")?;

    let mut out = Vec::with_capacity(count as usize);
    for k in 0..count {
        let name_len = read_u32(&mut r, "name length")? as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact(&mut r, &mut name_bytes, "name")?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Contract(format!("record {k}: name is not UTF-8")))?;
        let rows = read_u64(&mut r, "rows")? as usize;
        let cols = read_u64(&mut r, "cols")? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut buf = [0u8; 8];
        for _ in 0..rows * cols {
            read_exact(&mut r, &mut buf, "matrix data")?;
            data.push(f64::from_bits(u64::from_le_bytes(buf)));
        }
        out.push((name, Matrix::from_vec(rows, cols, data)?));
    }
    Ok(out)
}

/// Load a checkpoint into an existing set. Every record must match a
/// parameter of the same name and shape; missing or extra names are errors.
pub fn load_params(path: &Path, params: &mut ParamSet) -> Result<()> {
    let records = load_matrices(path)?;
    if records.len() != params.len() {
        return Err(Error::Contract(format!(
            "checkpoint has {} records, parameter set has {}",
            records.len(),
            params.len()
        )));
    }
    for (name, m) in records {
        let (id, p) = params
            .by_name(&name)
            .ok_or_else(|| Error::Contract(format!("checkpoint record {name:?} has no matching parameter")))?;
        if p.value.shape() != m.shape() {
            return Err(Error::shape(
                "load_params",
                p.value.shape_str(),
                m.shape_str(),
            ));
        }
        params.get_mut(id).value = m;
    }
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Contract(format!("truncated checkpoint while reading {what}: {e}")))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf, what)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, what)?;
    Ok(u32::from_le_bytes(buf))
}
