//! Small dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// One-dimensional nullspace of a wide matrix.
#[derive(Debug, Clone)]
pub struct NullVector {
    /// Unit-norm vector spanning the kernel.
    pub vector: Vec<f64>,
    /// Singular values of the row-normalized matrix, descending.
    pub singular_values: Vec<f64>,
    /// `‖A v‖ / (‖A‖_F ‖v‖)` on the unscaled matrix.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullspaceError {
    /// The kernel has dimension above one; carries `σ_min / σ_max` of the rows.
    RankDeficient(f64),
}

/// Kernel of an `r × (r+1)` matrix through an SVD of the row-normalized,
/// zero-padded square matrix.
///
/// `permutation` reorders the columns before factorization (and is undone on
/// the result); different orderings must give the same kernel up to sign.
pub fn null_vector(
    rows: &DMatrix<f64>,
    rank_tol: f64,
    permutation: Option<&[usize]>,
) -> Result<NullVector, NullspaceError> {
    let r = rows.nrows();
    let c = rows.ncols();
    debug_assert_eq!(r + 1, c);
    if r == 0 {
        return Ok(NullVector {
            vector: vec![1.0; c.min(1)],
            singular_values: Vec::new(),
            residual: 0.0,
        });
    }
    let perm: Vec<usize> = permutation.map(<[usize]>::to_vec).unwrap_or_else(|| (0..c).collect());

    let mut padded = DMatrix::<f64>::zeros(c, c);
    for i in 0..r {
        let norm = rows.row(i).norm();
        let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        for (jj, &j) in perm.iter().enumerate() {
            padded[(i, jj)] = rows[(i, j)] * s;
        }
    }
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    // the pad contributes the last zero; the r genuine values must be nonzero
    let ratio = if sv[0] > 0.0 { sv[r - 1] / sv[0] } else { 0.0 };
    if !(ratio > rank_tol) {
        return Err(NullspaceError::RankDeficient(ratio));
    }
    let kernel_row = order[c - 1];
    let mut vector = vec![0.0; c];
    for (jj, &j) in perm.iter().enumerate() {
        vector[j] = v_t[(kernel_row, jj)];
    }
    // fix the sign so the largest component is positive
    let pivot = vector
        .iter()
        .copied()
        .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if pivot < 0.0 {
        vector.iter_mut().for_each(|v| *v = -*v);
    }

    let v = DVector::from_column_slice(&vector);
    let residual = (rows * &v).norm() / (rows.norm() * v.norm()).max(f64::MIN_POSITIVE);
    Ok(NullVector {
        vector,
        singular_values: sv[..r].to_vec(),
        residual,
    })
}

/// Solve a square system with partial-pivot LU.
pub fn solve(matrix: DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    matrix
        .lu()
        .solve(&b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .map(|x| x.iter().copied().collect())
}
