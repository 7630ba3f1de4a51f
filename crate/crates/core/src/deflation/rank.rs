//! Numerical rank via the full singular value decomposition.

use ndarray::ArrayView2;
use ndarray_linalg::SVD;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Rank cuts whose gap ratio `σ_rank/σ_{rank+1}` falls below this are
/// flagged borderline: the cut is not backed by a clear spectral gap.
pub const BORDERLINE_GAP_RATIO: f64 = 1e3;

/// Numerical rank plus the evidence that justified the cut.
#[derive(Debug, Clone, Serialize)]
pub struct RankResult {
    pub rank: usize,
    /// Full spectrum, descending.
    pub singular_values: Vec<f64>,
    /// `σ_rank / σ_{rank+1}`; infinite when the cut is at full rank (or the
    /// matrix is zero).
    pub gap_ratio: f64,
    /// The absolute threshold actually applied.
    pub tolerance_used: f64,
}

impl RankResult {
    /// Column count minus rank.
    pub fn nullity(&self, cols: usize) -> usize {
        cols - self.rank
    }

    pub fn is_borderline(&self) -> bool {
        self.gap_ratio < BORDERLINE_GAP_RATIO
    }
}

/// Counts singular values above `τ = rel_tol · σ₁ · max(rows, cols)`.
///
/// A zero matrix has `σ₁ = 0`, hence `τ = 0` and rank 0. The returned
/// spectrum and gap ratio let callers audit borderline cuts.
pub fn numerical_rank(a: ArrayView2<Complex64>, rel_tol: f64) -> Result<RankResult> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput(format!(
            "numerical rank of an empty {rows}x{cols} matrix"
        )));
    }
    let (_, sv, _) = a.svd(false, false).map_err(|e| {
        Error::Numerical(format!("SVD failed on a {rows}x{cols} matrix: {e}"))
    })?;
    let s: Vec<f64> = sv.to_vec();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let tol = rel_tol * sigma_max * rows.max(cols) as f64;
    let rank = s.iter().take_while(|&&x| x > tol).count();
    let gap_ratio = if rank == 0 || rank == s.len() {
        f64::INFINITY
    } else {
        s[rank - 1] / s[rank] // s[rank-1] > tol ≥ 0, so no 0/0 here
    };
    Ok(RankResult { rank, singular_values: s, gap_ratio, tolerance_used: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn diag_one_zero_has_rank_one() {
        let mut a = Array2::zeros((2, 2));
        a[(0, 0)] = c(1.0);
        let r = numerical_rank(a.view(), 1e-8).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.nullity(2), 1);
        assert!(r.gap_ratio.is_infinite());
        assert!(!r.is_borderline());
    }

    #[test]
    fn zero_matrix_has_rank_zero_nullity_cols() {
        let a: Array2<Complex64> = Array2::zeros((3, 5));
        let r = numerical_rank(a.view(), 1e-8).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.nullity(5), 5);
        assert_eq!(r.tolerance_used, 0.0);
    }

    #[test]
    fn near_zero_tail_is_cut_with_audited_gap() {
        let mut a = Array2::zeros((3, 3));
        a[(0, 0)] = c(2.0);
        a[(1, 1)] = c(1.0);
        a[(2, 2)] = c(1e-14);
        let r = numerical_rank(a.view(), 1e-8).unwrap();
        assert_eq!(r.rank, 2);
        assert!(r.gap_ratio > 1e12);
        assert_eq!(r.singular_values.len(), 3);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let a: Array2<Complex64> = Array2::zeros((0, 4));
        assert!(numerical_rank(a.view(), 1e-8).is_err());
    }
}
