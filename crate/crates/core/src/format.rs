//! Embedding file formats.
//!
//! Text: a `n d` header line, then `original_id v1 ... vd` per node with
//! values printed to 6 significant digits.
//!
//! Binary: magic `NESEMB`, a little-endian `u16` version, `n` and `d` as
//! little-endian `u64`, then `n * d` little-endian `f64` in row-major order.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::embedding::EmbeddingMatrix;
use crate::error::{NesError, Result};

pub const BINARY_MAGIC: &[u8; 6] = b"NESEMB";
pub const BINARY_VERSION: u16 = 1;

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_text<W: Write>(emb: &EmbeddingMatrix, ids: &[u64], mut w: W) -> Result<()> {
    if ids.len() != emb.rows() {
        return Err(NesError::DimensionMismatch {
            context: "id map vs embedding rows",
            expected: emb.rows(),
            found: ids.len(),
        });
    }
    writeln!(w, "{} {}", emb.rows(), emb.dim())?;
    let mut line = String::new();
    for (i, id) in ids.iter().enumerate() {
        line.clear();
        line.push_str(&id.to_string());
        for j in 0..emb.dim() {
            line.push(' ');
            line.push_str(&format_sig6(emb.data[(i, j)]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Reads the text format back as `(ids, embedding)`.
pub fn read_text<R: BufRead>(r: R) -> Result<(Vec<u64>, EmbeddingMatrix)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| NesError::Format("empty embedding file".into()))??;
    let mut head = header.split_whitespace().map(|f| f.parse::<usize>());
    let (n, d) = match (head.next(), head.next(), head.next()) {
        (Some(Ok(n)), Some(Ok(d)), None) => (n, d),
        _ => {
            return Err(NesError::Parse {
                line: 1,
                message: "expected `n d` header".into(),
            })
        }
    };
    let mut ids = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| NesError::Parse {
            line: i + 2,
            message: m,
        };
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-empty");
        ids.push(id.parse::<u64>().map_err(|e| bad(format!("bad id `{id}`: {e}")))?);
        let before = data.len();
        for f in fields {
            data.push(f.parse::<f64>().map_err(|e| bad(format!("bad value `{f}`: {e}")))?);
        }
        if data.len() - before != d {
            return Err(bad(format!("expected {d} values, found {}", data.len() - before)));
        }
    }
    if ids.len() != n {
        return Err(NesError::Format(format!("header says {n} rows, found {}", ids.len())));
    }
    Ok((
        ids,
        EmbeddingMatrix {
            data: DMatrix::from_row_slice(n, d, &data),
        },
    ))
}

pub fn write_binary<W: Write>(emb: &EmbeddingMatrix, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(emb.rows() as u64).to_le_bytes())?;
    w.write_all(&(emb.dim() as u64).to_le_bytes())?;
    let mut row = Vec::with_capacity(emb.dim() * 8);
    for i in 0..emb.rows() {
        row.clear();
        for j in 0..emb.dim() {
            row.extend_from_slice(&emb.data[(i, j)].to_le_bytes());
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<EmbeddingMatrix> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(NesError::Format("not a binary embedding".into()));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    let version = u16::from_le_bytes(v);
    if version != BINARY_VERSION {
        return Err(NesError::Format(format!("unsupported embedding version {version}")));
    }
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b) as usize;
    r.read_exact(&mut b)?;
    let d = u64::from_le_bytes(b) as usize;
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        r.read_exact(&mut b)?;
        data.push(f64::from_le_bytes(b));
    }
    Ok(EmbeddingMatrix {
        data: DMatrix::from_row_slice(n, d, &data),
    })
}
