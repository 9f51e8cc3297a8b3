//! Matrix file formats.
//!
//! CSV: optional `#` comment lines carrying `key=value` metadata, a
//! `row,column,value` header, then one line per active cell. Rows and
//! columns are 1-based; the personalization value of a row is written with
//! column 0.
//!
//! Binary (all integers and floats little-endian):
//!
//! ```text
//! magic       4 bytes  "TSMX"
//! version     u32      1
//! rows        u64
//! columns     u64      total column count
//! dominating  u64
//! flags       u32      bit 0: personalization block present
//! lengths     rows x u32
//! values      sum(lengths) x f64, row-major, active cells only
//! q           rows x f64 (only when flag bit 0 is set)
//! ```

use std::io::{BufRead, Read, Write};

use super::SeriesMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TSMX";
const VERSION: u32 = 1;

pub fn write_matrix_csv<W: Write>(m: &SeriesMatrix, mut w: W) -> Result<()> {
    writeln!(w, "# rows={}", m.rows())?;
    writeln!(w, "# columns={}", m.n_columns())?;
    writeln!(w, "# dominating={}", m.dominating())?;
    writeln!(w, "row,column,value")?;
    for r in 0..m.rows() {
        for (j, v) in m.row(r).enumerate() {
            writeln!(w, "{},{},{}", r + 1, j + 1, v)?;
        }
        if let Some(q) = m.personalization() {
            writeln!(w, "{},0,{}", r + 1, q[r])?;
        }
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} {s:?}")))
}

pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<SeriesMatrix> {
    let mut rows: Option<usize> = None;
    let mut n_columns: Option<usize> = None;
    let mut dominating = 0usize;
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    let mut header_seen = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(meta) = t.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                match k.trim() {
                    "rows" => rows = Some(parse(v, "rows", lineno)?),
                    "columns" => n_columns = Some(parse(v, "columns", lineno)?),
                    "dominating" => dominating = parse(v, "dominating", lineno)?,
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if t != "row,column,value" {
                return Err(Error::Parse(format!("line {lineno}: expected header row,column,value")));
            }
            header_seen = true;
            continue;
        }
        let mut parts = t.split(',');
        let (Some(a), Some(b), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {lineno}: expected three fields")));
        };
        let row: usize = parse(a, "row", lineno)?;
        if row == 0 {
            return Err(Error::Parse(format!("line {lineno}: rows are 1-based")));
        }
        cells.push((row, parse(b, "column", lineno)?, parse(c, "value", lineno)?));
    }
    let rows = rows.unwrap_or_else(|| cells.iter().map(|c| c.0).max().unwrap_or(0));
    let mut lengths = vec![0usize; rows];
    let mut has_q = false;
    for &(r, c, _) in &cells {
        if r > rows {
            return Err(Error::Parse(format!("row {r} beyond declared {rows}")));
        }
        if c == 0 {
            has_q = true;
        } else {
            lengths[r - 1] = lengths[r - 1].max(c);
        }
    }
    let n_columns = n_columns.unwrap_or_else(|| lengths.iter().copied().max().unwrap_or(0));
    let mut columns = vec![vec![0.0; rows]; n_columns];
    let mut q = has_q.then(|| vec![0.0; rows]);
    let mut filled = vec![0usize; rows];
    for &(r, c, v) in &cells {
        if c == 0 {
            q.as_mut().expect("has_q")[r - 1] = v;
        } else {
            if c > n_columns {
                return Err(Error::Parse(format!("column {c} beyond declared {n_columns}")));
            }
            columns[c - 1][r - 1] = v;
            filled[r - 1] += 1;
        }
    }
    if let Some(r) = (0..rows).find(|&r| filled[r] != lengths[r]) {
        return Err(Error::Parse(format!("row {} has gaps among its active cells", r + 1)));
    }
    SeriesMatrix::from_parts(lengths, columns, q, dominating)
}

pub(crate) fn encode_binary<W: Write>(m: &SeriesMatrix, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.n_columns() as u64).to_le_bytes())?;
    w.write_all(&(m.dominating() as u64).to_le_bytes())?;
    let flags: u32 = u32::from(m.personalization().is_some());
    w.write_all(&flags.to_le_bytes())?;
    for &len in m.row_lengths() {
        w.write_all(&(len as u32).to_le_bytes())?;
    }
    for r in 0..m.rows() {
        for v in m.row(r) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    if let Some(q) = m.personalization() {
        for v in q {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_matrix_binary<W: Write>(m: &SeriesMatrix, mut w: W) -> Result<()> {
    encode_binary(m, &mut w)?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Parse(format!("truncated matrix file: {e}")))?;
    Ok(buf)
}

pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<SeriesMatrix> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Parse("not a matrix file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported matrix version {version}")));
    }
    let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let n_columns = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let dominating = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let flags = u32::from_le_bytes(read_array(&mut r)?);
    let mut lengths = Vec::with_capacity(rows);
    for _ in 0..rows {
        let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        if len > n_columns {
            return Err(Error::Parse(format!("row length {len} exceeds {n_columns} columns")));
        }
        lengths.push(len);
    }
    let mut columns = vec![vec![0.0; rows]; n_columns];
    for (m, &len) in lengths.iter().enumerate() {
        for col in columns[..len].iter_mut() {
            col[m] = f64::from_le_bytes(read_array(&mut r)?);
        }
    }
    let q = if flags & 1 == 1 {
        let mut q = Vec::with_capacity(rows);
        for _ in 0..rows {
            q.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        Some(q)
    } else {
        None
    };
    SeriesMatrix::from_parts(lengths, columns, q, dominating)
}
