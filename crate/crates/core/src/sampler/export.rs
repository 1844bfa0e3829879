//! CSV and binary export of sample batches.
//!
//! Binary layout: `u64` little-endian header length, the JSON header, then
//! the values as little-endian `f64` in column-major order over
//! `(tau, lambda, replication)` (tau fastest).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::cov::FieldSample;
use crate::error::{LabError, Result};

pub const CSV_HEADER: &str = "replication_id,tau,lambda,value";

/// Long-format CSV, one row per (replication, point).
pub fn write_csv<W: Write>(mut w: W, samples: &[FieldSample]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in samples {
        for (&(tau, lambda), v) in s.grid.points().iter().zip(&s.values) {
            // adding +0 turns a -0 from a zero factor into 0
            writeln!(w, "{},{},{},{}", s.replication_id, tau, lambda, v + 0.0)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandHeader {
    pub lo: f64,
    /// `None` for an unbounded band.
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryHeader {
    /// `[n_tau, n_lambda, n_reps]`.
    pub dims: [usize; 3],
    pub seed: u64,
    pub beta: f64,
    pub band: Option<BandHeader>,
    pub tau_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub replication_ids: Vec<u64>,
}

/// Writes a batch sharing one grid and seed.
pub fn write_binary<W: Write>(mut w: W, samples: &[FieldSample], beta: f64) -> Result<BinaryHeader> {
    let first = samples.first().ok_or_else(|| LabError::Domain("nothing to export".into()))?;
    if samples.iter().any(|s| s.grid != first.grid || s.seed != first.seed) {
        return Err(LabError::Domain("binary export needs one grid and one seed per batch".into()));
    }
    let grid = &first.grid;
    let (n_tau, n_lambda) = grid.dims();
    let header = BinaryHeader {
        dims: [n_tau, n_lambda, samples.len()],
        seed: first.seed,
        beta,
        band: grid.time_band().map(|b| BandHeader { lo: b.lo(), hi: b.hi().is_finite().then_some(b.hi()) }),
        tau_values: grid.tau_values().to_vec(),
        lambda_values: grid.lambda_values().to_vec(),
        replication_ids: samples.iter().map(|s| s.replication_id).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for s in samples {
        for il in 0..n_lambda {
            for it in 0..n_tau {
                w.write_all(&s.value(it, il).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(header)
}

/// Reads back a binary batch: the header and the flat column-major values.
pub fn read_binary<R: Read>(mut r: R) -> Result<(BinaryHeader, Vec<f64>)> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: BinaryHeader = serde_json::from_slice(&json)?;
    let n = header.dims.iter().product::<usize>();
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((header, values))
}
