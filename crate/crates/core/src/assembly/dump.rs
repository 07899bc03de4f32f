use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

const MAGIC: &[u8; 8] = b"IGABEMS1";

/// Header of a binary system dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub rows: usize,
    pub cols: usize,
    pub degree: usize,
    pub mesh: usize,
    pub policy_hash: String,
}

/// SHA-256 of the JSON form of the quadrature rule, hex encoded.
pub fn policy_hash(rule: &QuadratureRule) -> String {
    let json = serde_json::json!({
        "policy": rule.policy,
        "alpha": rule.alpha,
        "duffy_nodes": rule.duffy_nodes,
    });
    let digest = Sha256::digest(json.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Layout: magic, u64 header length, JSON header, then the matrix row-major
/// and the right-hand side, all as little-endian f64.
pub fn write_dump(path: &Path, header: &DumpHeader, m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<()> {
    if m.nrows() != header.rows || m.ncols() != header.cols || rhs.len() != header.rows {
        return Err(Error::Parameter("dump header does not match the system size".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let head = serde_json::to_vec(header).map_err(|e| Error::Parameter(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(head.len() as u64).to_le_bytes())?;
    w.write_all(&head)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    for v in rhs.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<(DumpHeader, DMatrix<f64>, DVector<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parameter("not a system dump".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut head = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut head)?;
    let header: DumpHeader = serde_json::from_slice(&head).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut next = || -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let mut m = DMatrix::zeros(header.rows, header.cols);
    for i in 0..header.rows {
        for j in 0..header.cols {
            m[(i, j)] = next()?;
        }
    }
    let mut rhs = DVector::zeros(header.rows);
    for i in 0..header.rows {
        rhs[i] = next()?;
    }
    Ok((header, m, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{AlphaRule, NodePolicy};

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("igabem-dump-{}", std::process::id()));
        let m = DMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 + 0.25);
        let rhs = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let header = DumpHeader { rows: 3, cols: 2, degree: 1, mesh: 4, policy_hash: "x".into() };
        write_dump(&dir, &header, &m, &rhs).unwrap();
        let bytes = std::fs::read(&dir).unwrap();
        // first matrix entry sits right after the header, row-major
        let start = 16 + serde_json::to_vec(&header).unwrap().len();
        assert_eq!(&bytes[start + 8..start + 16], &1.25f64.to_le_bytes());
        let (h, m2, r2) = read_dump(&dir).unwrap();
        std::fs::remove_file(&dir).unwrap();
        assert_eq!((h, m2, r2), (header, m, rhs));
    }

    #[test]
    fn hash_tracks_policy() {
        let p = NodePolicy::new([2, 2], [0.1, 0.1], 30).unwrap();
        let a = AlphaRule::new(8.0, 2.0).unwrap();
        let r = QuadratureRule::new(p, a);
        assert_eq!(policy_hash(&r), policy_hash(&r));
        assert_ne!(policy_hash(&r), policy_hash(&r.with_duffy_factor(2)));
        assert_eq!(policy_hash(&r).len(), 64);
    }
}
