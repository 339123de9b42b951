//! On-disk cache of DAS matrices, keyed by provenance.
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes      | content                                   |
//! |------------|-------------------------------------------|
//! | 8          | magic `DASMTRX\n`                         |
//! | 4          | format version, `u32`                     |
//! | 32         | SHA-256 provenance digest                 |
//! | 8 x 3      | `nrows`, `ncols`, `nnz` as `u64`          |
//! | 8          | provenance JSON length `n`, `u64`         |
//! | `n`        | provenance JSON                           |
//! | 8 nnz      | row indices, `u64`                        |
//! | 8 nnz      | column indices, `u64`                     |
//! | 8 nnz      | real parts, `f64`                         |
//! | 8 nnz      | imaginary parts, `f64`                    |
//!
//! Triplets are stored in canonical row-major order, so a cache hit yields a
//! matrix bit-identical to a rebuild.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::beamformer::{DasMatrix, Provenance};
use crate::error::{DasError, Result};
use crate::sparse::CsrMatrix;

pub const MAGIC: &[u8; 8] = b"DASMTRX\n";
pub const VERSION: u32 = 1;

pub fn matrix_to_bytes(m: &DasMatrix) -> Vec<u8> {
    let prov = serde_json::to_vec(m.provenance()).expect("provenance serializes");
    let nnz = m.nnz();
    let mut out = Vec::with_capacity(84 + prov.len() + 32 * nnz);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&m.provenance().digest());
    for v in [m.nrows(), m.ncols(), nnz, prov.len()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&prov);
    let csr = m.csr();
    for (r, _, _) in csr.triplets() {
        out.extend_from_slice(&(r as u64).to_le_bytes());
    }
    for c in csr.indices() {
        out.extend_from_slice(&(*c as u64).to_le_bytes());
    }
    for v in csr.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
    }
    for v in csr.values() {
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| DasError::Cache("file is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn array<T>(&mut self, n: usize, f: impl Fn([u8; 8]) -> T) -> Result<Vec<T>> {
        let len = n.checked_mul(8).ok_or_else(|| DasError::Cache("nnz overflows".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Decode a cached matrix. When `expected` is given, the stored provenance
/// must match it exactly.
pub fn matrix_from_bytes(bytes: &[u8], expected: Option<&Provenance>) -> Result<DasMatrix> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(DasError::Cache("not a DAS matrix cache (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(DasError::Cache(format!("unsupported cache version {version}")));
    }
    let digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let nrows = r.u64()? as usize;
    let ncols = r.u64()? as usize;
    let nnz = r.u64()? as usize;
    let plen = r.u64()? as usize;
    let prov: Provenance =
        serde_json::from_slice(r.take(plen)?).map_err(|e| DasError::Cache(format!("provenance: {e}")))?;
    if prov.digest() != digest {
        return Err(DasError::Cache("provenance digest does not match its document".into()));
    }
    if let Some(exp) = expected {
        if exp.digest() != digest {
            return Err(DasError::Cache(format!(
                "cached matrix was built for different inputs: {}",
                exp.diff(&prov).join("; ")
            )));
        }
    }
    let rows = r.array(nnz, |b| u64::from_le_bytes(b) as usize)?;
    let cols = r.array(nnz, |b| u64::from_le_bytes(b) as usize)?;
    let re = r.array(nnz, f64::from_le_bytes)?;
    let im = r.array(nnz, f64::from_le_bytes)?;
    if r.pos != bytes.len() {
        return Err(DasError::Cache("trailing bytes after triplets".into()));
    }
    if rows.windows(2).zip(cols.windows(2)).any(|(r, c)| (r[0], c[0]) >= (r[1], c[1])) {
        return Err(DasError::Cache("triplets are not in canonical order".into()));
    }
    let vals: Vec<Complex64> = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
    let csr = CsrMatrix::from_triplets(nrows, ncols, &rows, &cols, &vals)?;
    DasMatrix::from_parts(csr, prov)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DasMatrix) -> Result<()> {
    fs::write(path, matrix_to_bytes(m))?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>, expected: Option<&Provenance>) -> Result<DasMatrix> {
    matrix_from_bytes(&fs::read(path)?, expected)
}

/// Load the matrix for `provenance` from `path` if present and matching,
/// otherwise call `build` and store the result.
pub fn load_or_build<F>(path: impl AsRef<Path>, provenance: &Provenance, build: F) -> Result<DasMatrix>
where
    F: FnOnce() -> Result<DasMatrix>,
{
    let path = path.as_ref();
    if path.exists() {
        match load_matrix(path, Some(provenance)) {
            Ok(m) => return Ok(m),
            Err(e) => log::info!("rebuilding DAS matrix: {e}"),
        }
    }
    let m = build()?;
    save_matrix(path, &m)?;
    Ok(m)
}
