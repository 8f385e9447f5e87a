use nalgebra::{DMatrix, DVector};

use crate::{JrcError, Result, C64};

/// Least-squares solution of `A x ≈ b` for a tall complex `A` given column by column.
pub(crate) fn least_squares(columns: &[Vec<C64>], b: &[C64]) -> Result<Vec<C64>> {
    let rows = b.len();
    if columns.is_empty() {
        return Ok(Vec::new());
    }
    if columns.iter().any(|c| c.len() != rows) {
        return Err(JrcError::invalid("least squares: column length mismatch"));
    }
    if columns.len() > rows {
        return Err(JrcError::Singularity(format!(
            "{} unknowns with {rows} observations",
            columns.len()
        )));
    }
    let a = DMatrix::from_fn(rows, columns.len(), |r, c| columns[c][r]);
    let rhs = DVector::from_column_slice(b);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin < smax * 1e-10 {
        return Err(JrcError::Singularity("rank-deficient least-squares system".into()));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| JrcError::Singularity(e.to_string()))?;
    Ok(x.iter().copied().collect())
}
