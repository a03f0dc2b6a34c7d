//! Per-trajectory occupation records of a TW run.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! header  b"NSQSPOOL"  u16 version (= 1)  u32 n_phi
//! record  u32 t_index  u64 trajectory  f64 n0  f64 nw1_t0  f64 nw2_t0
//!         n_phi × (f64 nw1  f64 nw2)
//! ```
//!
//! The CSV form has one line per record and phase with columns
//! [`CSV_COLUMNS`].

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::format_float;

pub const MAGIC: &[u8; 8] = b"NSQSPOOL";
pub const VERSION: u16 = 1;
/// Upper bound on phases per record accepted by the decoder.
pub const MAX_PHASES: u32 = 1 << 16;
pub const CSV_COLUMNS: [&str; 8] = ["t_index", "trajectory", "n0", "nw1_t0", "nw2_t0", "phi_index", "nw1", "nw2"];

const HEADER_LEN: usize = 8 + 2 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpoolFormat {
    Binary,
    Csv,
}

impl SpoolFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            SpoolFormat::Binary => "spool.bin",
            SpoolFormat::Csv => "spool.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpoolRecord {
    /// Index into the hold-time axis.
    pub t_index: u32,
    pub trajectory: u64,
    /// `|α₀|²` drawn for the trajectory.
    pub n0: f64,
    /// Wigner occupations at `t0`.
    pub initial: (f64, f64),
    /// Wigner occupations at `t3`, one pair per phase.
    pub occupations: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpoolError {
    #[error("not a spool file")]
    Magic,
    #[error("unsupported spool version {0}")]
    Version(u16),
    #[error("phase count {0} out of range")]
    Phases(u32),
    #[error("truncated spool: {0} trailing bytes do not form a record")]
    Truncated(usize),
    #[error("record {index} has {found} phases, expected {expected}")]
    Shape { index: usize, found: usize, expected: usize },
}

fn record_len(n_phi: usize) -> usize {
    4 + 8 + 3 * 8 + n_phi * 16
}

pub fn encode(n_phi: usize, records: &[SpoolRecord]) -> Result<Vec<u8>, SpoolError> {
    if n_phi == 0 || n_phi > MAX_PHASES as usize {
        return Err(SpoolError::Phases(n_phi as u32));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + records.len() * record_len(n_phi));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n_phi as u32).to_le_bytes());
    for (index, r) in records.iter().enumerate() {
        if r.occupations.len() != n_phi {
            return Err(SpoolError::Shape {
                index,
                found: r.occupations.len(),
                expected: n_phi,
            });
        }
        out.extend_from_slice(&r.t_index.to_le_bytes());
        out.extend_from_slice(&r.trajectory.to_le_bytes());
        for x in [r.n0, r.initial.0, r.initial.1] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for &(a, b) in &r.occupations {
            out.extend_from_slice(&a.to_le_bytes());
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    Ok(out)
}

/// Decodes a complete binary spool; returns the phase count and records.
pub fn decode(bytes: &[u8]) -> Result<(usize, Vec<SpoolRecord>), SpoolError> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(SpoolError::Magic);
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != VERSION {
        return Err(SpoolError::Version(version));
    }
    let n_phi = u32::from_le_bytes(bytes[10..14].try_into().expect("four bytes"));
    if n_phi == 0 || n_phi > MAX_PHASES {
        return Err(SpoolError::Phases(n_phi));
    }
    let n_phi = n_phi as usize;
    let body = &bytes[HEADER_LEN..];
    let len = record_len(n_phi);
    let tail = body.len() % len;
    if tail != 0 {
        return Err(SpoolError::Truncated(tail));
    }
    let f = |b: &[u8], at: usize| f64::from_le_bytes(b[at..at + 8].try_into().expect("eight bytes"));
    let records = body
        .chunks_exact(len)
        .map(|b| SpoolRecord {
            t_index: u32::from_le_bytes(b[0..4].try_into().expect("four bytes")),
            trajectory: u64::from_le_bytes(b[4..12].try_into().expect("eight bytes")),
            n0: f(b, 12),
            initial: (f(b, 20), f(b, 28)),
            occupations: (0..n_phi).map(|j| (f(b, 36 + 16 * j), f(b, 44 + 16 * j))).collect(),
        })
        .collect();
    Ok((n_phi, records))
}

pub fn write_csv<W: Write>(mut w: W, records: &[SpoolRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        for (j, &(a, b)) in r.occupations.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t_index,
                r.trajectory,
                format_float(r.n0),
                format_float(r.initial.0),
                format_float(r.initial.1),
                j,
                format_float(a),
                format_float(b)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SpoolRecord> {
        (0..3)
            .map(|i| SpoolRecord {
                t_index: i as u32 / 2,
                trajectory: i,
                n0: 1e4 + i as f64,
                initial: (1e4 + 16.0, 16.5),
                occupations: vec![(9990.25, 42.0 + i as f64), (9991.0, f64::MIN_POSITIVE)],
            })
            .collect()
    }

    #[test]
    fn binary_round_trip() {
        let records = sample();
        let bytes = encode(2, &records).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 3 * record_len(2));
        let (n_phi, back) = decode(&bytes).unwrap();
        assert_eq!(n_phi, 2);
        assert_eq!(back, records);
        let (_, empty) = decode(&encode(2, &[]).unwrap()).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn rejects_damaged_input() {
        let bytes = encode(2, &sample()).unwrap();
        assert_eq!(decode(&bytes[..bytes.len() - 1]), Err(SpoolError::Truncated(record_len(2) - 1)));
        assert_eq!(decode(&bytes[..5]), Err(SpoolError::Magic));
        let mut v = bytes.clone();
        v[8] = 9;
        assert_eq!(decode(&v), Err(SpoolError::Version(9)));
        let mut v = bytes.clone();
        v[10..14].copy_from_slice(&0u32.to_le_bytes());
        assert_eq!(decode(&v), Err(SpoolError::Phases(0)));
        let mut bad = sample();
        bad[1].occupations.pop();
        assert!(matches!(encode(2, &bad), Err(SpoolError::Shape { index: 1, .. })));
    }

    #[test]
    fn csv_has_one_line_per_phase() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert!(lines[2].starts_with("0,0,1.0000000000000000e4,"));
        assert!(lines[2].contains(",1,9.9910000000000000e3,"));
    }
}
