//! Single-file binary model format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  field
//! 0       magic, 8 bytes: "FLOWDMD\0"
//! 8       format version, u32 (currently 1)
//! 12      n (state dimension), u64
//! 20      r (retained mode count), u64
//! 28      requested rank, u64
//! 36      svd rank, u64
//! 44      dt in weeks, f64
//! 52      t0 label, i64 days since 1970-01-01
//! 60      discrete eigenvalues, r pairs of f64 (re, im)
//!         continuous eigenvalues, r pairs
//!         amplitudes, r pairs
//!         modes, n*r pairs, column-major
//! ```
//!
//! Write-then-read reproduces every array bit for bit.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use chrono::NaiveDate;
use num_complex::Complex64;
use thiserror::Error;

use super::DmdModel;
use crate::linalg::ComplexMatrix;

pub const MODEL_MAGIC: &[u8; 8] = b"FLOWDMD\0";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

pub fn write_model<W: Write>(model: &DmdModel, sink: W) -> Result<(), PersistError> {
    let mut w = BufWriter::new(sink);
    w.write_all(MODEL_MAGIC)?;
    w.write_u32::<LittleEndian>(MODEL_FORMAT_VERSION)?;
    w.write_u64::<LittleEndian>(model.n as u64)?;
    w.write_u64::<LittleEndian>(model.rank as u64)?;
    w.write_u64::<LittleEndian>(model.requested_rank as u64)?;
    w.write_u64::<LittleEndian>(model.svd_rank as u64)?;
    w.write_f64::<LittleEndian>(model.dt)?;
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    w.write_i64::<LittleEndian>((model.t0_label - epoch).num_days())?;
    for value in &model.discrete_eigs {
        write_complex(&mut w, *value)?;
    }
    for value in &model.cont_eigs {
        write_complex(&mut w, *value)?;
    }
    for value in &model.amplitudes {
        write_complex(&mut w, *value)?;
    }
    for value in model.modes.data() {
        write_complex(&mut w, *value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(source: R) -> Result<DmdModel, PersistError> {
    let mut r = BufReader::new(source);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion(version));
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    let rank = r.read_u64::<LittleEndian>()? as usize;
    let requested_rank = r.read_u64::<LittleEndian>()? as usize;
    let svd_rank = r.read_u64::<LittleEndian>()? as usize;
    let dt = r.read_f64::<LittleEndian>()?;
    let days = r.read_i64::<LittleEndian>()?;
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    let t0_label = epoch
        .checked_add_signed(chrono::Duration::days(days))
        .ok_or_else(|| PersistError::Corrupt(format!("t0 offset {days} out of range")))?;

    if n == 0 || rank == 0 {
        return Err(PersistError::Corrupt("zero state dimension or rank".to_string()));
    }
    if rank > svd_rank || svd_rank > requested_rank.max(svd_rank) {
        return Err(PersistError::Corrupt(format!(
            "inconsistent ranks: r={rank}, svd={svd_rank}, requested={requested_rank}"
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(PersistError::Corrupt(format!("bad time step {dt}")));
    }

    let discrete_eigs = read_complex_vec(&mut r, rank)?;
    let cont_eigs = read_complex_vec(&mut r, rank)?;
    let amplitudes = read_complex_vec(&mut r, rank)?;
    let mode_data = read_complex_vec(&mut r, n * rank)?;
    let modes = ComplexMatrix::from_column_major(n, rank, mode_data);

    Ok(DmdModel {
        n,
        rank,
        requested_rank,
        svd_rank,
        modes,
        discrete_eigs,
        cont_eigs,
        amplitudes,
        dt,
        t0_label,
    })
}

pub fn write_model_file<P: AsRef<Path>>(model: &DmdModel, path: P) -> Result<(), PersistError> {
    write_model(model, File::create(path)?)
}

pub fn read_model_file<P: AsRef<Path>>(path: P) -> Result<DmdModel, PersistError> {
    read_model(File::open(path)?)
}

fn write_complex<W: Write>(w: &mut W, value: Complex64) -> io::Result<()> {
    w.write_f64::<LittleEndian>(value.re)?;
    w.write_f64::<LittleEndian>(value.im)
}

fn read_complex_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<Complex64>, PersistError> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}
