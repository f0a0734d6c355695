//! Binary dumps: an 8-byte little-endian header length, a JSON header, then
//! row-major little-endian f64 data.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{usage, Result};

pub fn write_binary<W: Write, H: Serialize>(mut w: W, header: &H, data: &[f64]) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(data.len() * 8);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read, H: DeserializeOwned>(mut r: R) -> Result<(H, Vec<f64>)> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 24 {
        return usage("binary header length is implausibly large");
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header = serde_json::from_slice(&json)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return usage("binary payload is not a whole number of f64 values");
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header, data))
}
