//! Matrix Market export for assembled systems, mainly for inspecting a
//! problematic matrix in external tools.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::Csr;
use crate::error::Result;

/// Write a complex matrix in Matrix Market coordinate format (1-based
/// indices, `real imag` per entry).
pub fn write_matrix_market(path: &Path, a: &Csr<Complex64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.16e} {:.16e}", i + 1, j + 1, v.re, v.im)?;
        }
    }
    out.flush()?;
    Ok(())
}
