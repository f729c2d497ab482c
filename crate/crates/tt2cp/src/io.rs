//! On-disk formats for dense, tensor-train and Kruskal tensors.
//!
//! The primitive is the binary "TNSR" record: magic bytes `TNSR`, a `u8`
//! version (currently 1), a `u8` dtype (0 = f64, 1 = complex128 stored as
//! interleaved f64 pairs), a `u32` order `N`, then `N` `u64` extents and the
//! buffer, all little-endian in first-index-fastest order.
//!
//! Composite formats prepend a single JSON header line terminated by `\n`:
//! a TT file lists the order and bond-rank profile followed by one TNSR
//! record per core; a Kruskal file lists the order, rank and weights
//! followed by one TNSR record per factor matrix.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::scalar::Field;
use crate::tensor::DenseTensor;
use crate::tt::TTTensor;

const MAGIC: &[u8; 4] = b"TNSR";
const VERSION: u8 = 1;

/// Write one TNSR record.
pub fn write_dense<S: Field, W: Write>(w: &mut W, t: &DenseTensor<S>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u8(VERSION)?;
    w.write_u8(S::DTYPE)?;
    w.write_u32::<LittleEndian>(t.order() as u32)?;
    for &e in t.shape() {
        w.write_u64::<LittleEndian>(e as u64)?;
    }
    for &x in t.data() {
        let z = x.to_c64();
        w.write_f64::<LittleEndian>(z.re)?;
        if S::IS_COMPLEX {
            w.write_f64::<LittleEndian>(z.im)?;
        }
    }
    Ok(())
}

/// Read one TNSR record, checking magic, version and dtype.
pub fn read_dense<S: Field, R: Read>(r: &mut R) -> Result<DenseTensor<S>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::MalformedFile(format!(
            "bad magic bytes {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = r.read_u8()?;
    if version != VERSION {
        return Err(Error::MalformedFile(format!(
            "unsupported TNSR version {version}"
        )));
    }
    let dtype = r.read_u8()?;
    if dtype != S::DTYPE {
        return Err(Error::MalformedFile(format!(
            "dtype {dtype} does not match the requested scalar type ({})",
            S::DTYPE
        )));
    }
    let order = r.read_u32::<LittleEndian>()? as usize;
    if order == 0 {
        return Err(Error::MalformedFile("zero-order tensor record".into()));
    }
    let mut shape = Vec::with_capacity(order);
    let mut len: usize = 1;
    for _ in 0..order {
        let e = r.read_u64::<LittleEndian>()? as usize;
        if e == 0 {
            return Err(Error::MalformedFile("zero extent in tensor record".into()));
        }
        len = len.saturating_mul(e);
        shape.push(e);
    }
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let re = r.read_f64::<LittleEndian>()?;
        let im = if S::IS_COMPLEX {
            r.read_f64::<LittleEndian>()?
        } else {
            0.0
        };
        let x = S::from_c64(Complex64::new(re, im), 0.0)
            .expect("imaginary part is zero for real dtypes by construction");
        data.push(x);
    }
    DenseTensor::new(shape, data)
}

pub fn save_dense<S: Field>(path: impl AsRef<Path>, t: &DenseTensor<S>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dense(&mut w, t)
}

pub fn load_dense<S: Field>(path: impl AsRef<Path>) -> Result<DenseTensor<S>> {
    let mut r = BufReader::new(File::open(path)?);
    read_dense(&mut r)
}

#[derive(Debug, Serialize, Deserialize)]
struct TtHeader {
    format: String,
    order: usize,
    /// Bond profile `R_0, ..., R_N`.
    ranks: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KtHeader {
    format: String,
    order: usize,
    rank: usize,
    weights: Vec<f64>,
}

fn write_header<W: Write, H: Serialize>(w: &mut W, header: &H) -> Result<()> {
    let line = serde_json::to_string(header)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Read bytes up to the first `\n` and parse them as JSON.
fn read_header<R: Read, H: for<'de> Deserialize<'de>>(r: &mut R) -> Result<H> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 1 << 20 {
            return Err(Error::MalformedFile("unterminated JSON header".into()));
        }
    }
    Ok(serde_json::from_slice(&line)?)
}

pub fn write_tt<S: Field, W: Write>(w: &mut W, tt: &TTTensor<S>) -> Result<()> {
    write_header(
        w,
        &TtHeader {
            format: "tt".into(),
            order: tt.order(),
            ranks: tt.ranks(),
        },
    )?;
    for core in tt.cores() {
        write_dense(w, core)?;
    }
    Ok(())
}

pub fn read_tt<S: Field, R: Read>(r: &mut R) -> Result<TTTensor<S>> {
    let header: TtHeader = read_header(r)?;
    if header.format != "tt" {
        return Err(Error::MalformedFile(format!(
            "expected a tt header, got format {:?}",
            header.format
        )));
    }
    let mut cores = Vec::with_capacity(header.order);
    for _ in 0..header.order {
        cores.push(read_dense::<S, R>(r)?);
    }
    let tt = TTTensor::new(cores)?;
    if tt.ranks() != header.ranks {
        return Err(Error::MalformedFile(format!(
            "rank profile {:?} in header does not match the cores ({:?})",
            header.ranks,
            tt.ranks()
        )));
    }
    Ok(tt)
}

pub fn save_tt<S: Field>(path: impl AsRef<Path>, tt: &TTTensor<S>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tt(&mut w, tt)
}

pub fn load_tt<S: Field>(path: impl AsRef<Path>) -> Result<TTTensor<S>> {
    let mut r = BufReader::new(File::open(path)?);
    read_tt(&mut r)
}

pub fn write_kt<S: Field, W: Write>(w: &mut W, kt: &KruskalTensor<S>) -> Result<()> {
    write_header(
        w,
        &KtHeader {
            format: "kt".into(),
            order: kt.order(),
            rank: kt.rank(),
            weights: kt.weights().to_vec(),
        },
    )?;
    for f in kt.factors() {
        write_dense(w, &DenseTensor::from_matrix(f))?;
    }
    Ok(())
}

pub fn read_kt<S: Field, R: Read>(r: &mut R) -> Result<KruskalTensor<S>> {
    let header: KtHeader = read_header(r)?;
    if header.format != "kt" {
        return Err(Error::MalformedFile(format!(
            "expected a kt header, got format {:?}",
            header.format
        )));
    }
    let mut factors = Vec::with_capacity(header.order);
    for n in 0..header.order {
        let t = read_dense::<S, R>(r)?;
        if t.order() != 2 {
            return Err(Error::MalformedFile(format!(
                "factor {} has order {}, expected a matrix",
                n + 1,
                t.order()
            )));
        }
        factors.push(t.as_matrix()?);
    }
    KruskalTensor::new(factors, Array1::from_vec(header.weights))
}

pub fn save_kt<S: Field>(path: impl AsRef<Path>, kt: &KruskalTensor<S>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_kt(&mut w, kt)
}

pub fn load_kt<S: Field>(path: impl AsRef<Path>) -> Result<KruskalTensor<S>> {
    let mut r = BufReader::new(File::open(path)?);
    read_kt(&mut r)
}
