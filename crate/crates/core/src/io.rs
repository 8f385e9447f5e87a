//! Complex tensor persistence.
//!
//! Binary layout: magic `JRCT`, `u32` version, three `u64` dimensions, then
//! the entries in row-major order as interleaved little-endian `f64` pairs.
//! The CSV form writes one `i,j,k,re,im` row per entry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array3;

use crate::{JrcError, Result, C64};

const MAGIC: &[u8; 4] = b"JRCT";
const VERSION: u32 = 1;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> JrcError + '_ {
    move |source| JrcError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn encode_tensor(data: &Array3<C64>) -> Vec<u8> {
    let (a, b, c) = data.dim();
    let mut out = Vec::with_capacity(24 + 16 * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [a, b, c] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for z in data.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Array3<C64>> {
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(JrcError::invalid("not a JRCT tensor"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(JrcError::invalid(format!("unsupported tensor version {version}")));
    }
    let dim = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
    let shape = (dim(0), dim(1), dim(2));
    let count = shape
        .0
        .checked_mul(shape.1)
        .and_then(|n| n.checked_mul(shape.2))
        .ok_or_else(|| JrcError::invalid("tensor dimensions overflow"))?;
    let body = &bytes[32..];
    if body.len() != count * 16 {
        return Err(JrcError::invalid(format!(
            "tensor body holds {} bytes, expected {}",
            body.len(),
            count * 16
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Array3::from_shape_vec(shape, values).map_err(|e| JrcError::invalid(e.to_string()))
}

pub fn write_tensor(path: &Path, data: &Array3<C64>) -> Result<()> {
    std::fs::write(path, encode_tensor(data)).map_err(io_err(path))
}

pub fn read_tensor(path: &Path) -> Result<Array3<C64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    decode_tensor(&bytes)
}

pub fn write_tensor_csv(path: &Path, data: &Array3<C64>) -> Result<()> {
    let err = io_err(path);
    let mut w = BufWriter::new(File::create(path).map_err(&err)?);
    writeln!(w, "i,j,k,re,im").map_err(&err)?;
    for ((i, j, k), z) in data.indexed_iter() {
        writeln!(w, "{i},{j},{k},{:e},{:e}", z.re, z.im).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

pub fn read_tensor_csv(path: &Path) -> Result<Array3<C64>> {
    let err = io_err(path);
    let reader = BufReader::new(File::open(path).map_err(&err)?);
    let mut entries = Vec::new();
    let mut shape = (0, 0, 0);
    for (lineno, line) in reader.lines().enumerate().skip(1) {
        let line = line.map_err(&err)?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || JrcError::invalid(format!("{}:{}: malformed row", path.display(), lineno + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        let idx: Vec<usize> = f[..3]
            .iter()
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let re: f64 = f[3].trim().parse().map_err(|_| bad())?;
        let im: f64 = f[4].trim().parse().map_err(|_| bad())?;
        shape = (shape.0.max(idx[0] + 1), shape.1.max(idx[1] + 1), shape.2.max(idx[2] + 1));
        entries.push(((idx[0], idx[1], idx[2]), C64::new(re, im)));
    }
    if entries.len() != shape.0 * shape.1 * shape.2 {
        return Err(JrcError::invalid("CSV tensor is missing entries"));
    }
    let mut out = Array3::zeros(shape);
    for (ix, z) in entries {
        out[ix] = z;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Array3<C64> {
        Array3::from_shape_fn((2, 3, 4), |(i, j, k)| C64::new(i as f64 + 0.1, j as f64 * -1.5 + k as f64))
    }

    #[test]
    fn binary_round_trip() {
        let t = sample();
        assert_eq!(decode_tensor(&encode_tensor(&t)).unwrap(), t);
    }

    #[test]
    fn header_is_checked() {
        let mut b = encode_tensor(&sample());
        b[4] = 9;
        assert!(decode_tensor(&b).is_err());
        assert!(decode_tensor(&b[..20]).is_err());
        let mut b = encode_tensor(&sample());
        b.pop();
        assert!(decode_tensor(&b).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("jrct-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.csv");
        write_tensor_csv(&p, &sample()).unwrap();
        assert_eq!(read_tensor_csv(&p).unwrap(), sample());
        std::fs::remove_dir_all(&dir).ok();
    }
}
