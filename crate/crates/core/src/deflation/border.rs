//! Random borders and the bordered linear solve of one deflation step.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::engine::DeflationConfig;
use super::rank::numerical_rank;
use crate::error::{Error, Result};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    // real part first, then imaginary; the draw order is part of the
    // determinism contract for a fixed seed
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Draws `R ∈ C^{rows×cols}` (row-major draw order) and `d ∈ C^{rows}` with
/// independent standard complex Gaussian entries.
pub fn gaussian_border<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> (Array2<Complex64>, Array1<Complex64>) {
    let border = Array2::from_shape_fn((rows, cols), |_| complex_gaussian(rng));
    let rhs = Array1::from_shape_fn(rows, |_| complex_gaussian(rng));
    (border, rhs)
}

/// Draws a border `(R, d)` with `rows = nullity(jac)` and verifies that the
/// stacked matrix `[J; R]` has full column rank, redrawing up to
/// `cfg.max_border_retries` times before giving up.
///
/// Persistent rank deficiency means the requested row count cannot complete
/// the column space — i.e. the nullity estimate that sized the border is
/// wrong — and is reported as a degenerate input.
pub fn draw_border<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    jac: &ArrayView2<Complex64>,
    cfg: &DeflationConfig,
) -> Result<(Array2<Complex64>, Array1<Complex64>)> {
    if jac.ncols() != cols {
        return Err(Error::dims(format!(
            "Jacobian has {} columns, border requested for {cols}",
            jac.ncols()
        )));
    }
    let attempts = cfg.max_border_retries.max(1);
    for _ in 0..attempts {
        let (border, rhs) = gaussian_border(rng, rows, cols);
        let stacked = concatenate(Axis(0), &[jac.view(), border.view()])
            .map_err(|e| Error::dims(format!("stacking [J; R]: {e}")))?;
        let rank = numerical_rank(stacked.view(), cfg.rank_rel_tol)?;
        if rank.rank == cols {
            return Ok((border, rhs));
        }
    }
    Err(Error::DegenerateInput(format!(
        "[J; R] stayed column-rank-deficient after {attempts} draws \
         ({}x{cols} Jacobian, {rows} border rows); the nullity estimate is \
         probably wrong",
        jac.nrows()
    )))
}

/// Solves the bordered system `[J; R]·x = [0; d]` by QR least squares and
/// verifies the residual against `residual_tol · (1 + ‖d‖₂)`.
///
/// With `[J; R]` of full column rank the solution is unique, and it is
/// nonzero whenever `d ≠ 0`.
pub fn solve_bordered(
    jac: &ArrayView2<Complex64>,
    border: &ArrayView2<Complex64>,
    rhs: &ArrayView1<Complex64>,
    residual_tol: f64,
) -> Result<Array1<Complex64>> {
    solve_bordered_detailed(jac, border, rhs, residual_tol).map(|(x, _)| x)
}

/// As [`solve_bordered`], additionally returning the achieved residual.
pub fn solve_bordered_detailed(
    jac: &ArrayView2<Complex64>,
    border: &ArrayView2<Complex64>,
    rhs: &ArrayView1<Complex64>,
    residual_tol: f64,
) -> Result<(Array1<Complex64>, f64)> {
    let cols = border.ncols();
    if jac.nrows() > 0 && jac.ncols() != cols {
        return Err(Error::dims(format!(
            "Jacobian has {} columns, border has {cols}",
            jac.ncols()
        )));
    }
    if border.nrows() != rhs.len() {
        return Err(Error::dims(format!(
            "border has {} rows but right-hand side has {} entries",
            border.nrows(),
            rhs.len()
        )));
    }
    let total_rows = jac.nrows() + border.nrows();
    if total_rows < cols {
        return Err(Error::dims(format!(
            "stacked system is {total_rows}x{cols}; need at least as many rows as columns"
        )));
    }

    let jac = if jac.nrows() == 0 {
        Array2::zeros((0, cols))
    } else {
        jac.to_owned()
    };
    let a = concatenate(Axis(0), &[jac.view(), border.view()])
        .map_err(|e| Error::dims(format!("stacking [J; R]: {e}")))?;
    let mut b = Array1::zeros(total_rows);
    b.slice_mut(ndarray::s![jac.nrows()..]).assign(rhs);

    let x = qr_least_squares(&a, &b)?;

    let resid_vec = a.dot(&x) - &b;
    let residual = l2_norm(resid_vec.view());
    let allowed = residual_tol * (1.0 + l2_norm(rhs.view()));
    if residual > allowed {
        return Err(Error::Numerical(format!(
            "bordered solve residual {residual:.3e} exceeds {allowed:.3e} \
             ({total_rows}x{cols} stack)"
        )));
    }
    Ok((x, residual))
}

fn qr_least_squares(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    use ndarray_linalg::QR;
    let (rows, cols) = a.dim();
    let (q, r) = a
        .qr()
        .map_err(|e| Error::Numerical(format!("QR failed on a {rows}x{cols} matrix: {e}")))?;
    // x = R⁻¹ Qᴴ b
    let qhb = q.mapv(|z| z.conj()).t().dot(b);
    back_substitute(&r, &qhb)
}

fn back_substitute(r: &Array2<Complex64>, y: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let n = r.ncols();
    debug_assert_eq!(r.nrows(), n);
    debug_assert_eq!(y.len(), n);
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in (i + 1)..n {
            acc -= r[(i, j)] * x[j];
        }
        let diag = r[(i, i)];
        if diag.norm() == 0.0 {
            return Err(Error::Numerical(format!(
                "upper-triangular factor has a zero diagonal at {i}; stack is rank-deficient"
            )));
        }
        x[i] = acc / diag;
    }
    Ok(x)
}

pub(crate) fn l2_norm(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inf_norm(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(Complex64::norm).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn empty_jacobian_identity_border_returns_rhs() {
        let jac: Array2<Complex64> = Array2::zeros((0, 3));
        let border = Array2::eye(3);
        let rhs = Array1::from_vec(vec![c(1.0), c(1.0), c(1.0)]);
        let x =
            solve_bordered(&jac.view(), &border.view(), &rhs.view(), 1e-8).unwrap();
        for v in &x {
            assert!((v - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn cusp_origin_identity_border_returns_rhs() {
        // J = [0, 0] and R = I₂: the solution is exactly d
        let jac = Array2::zeros((1, 2));
        let border = Array2::eye(2);
        let rhs = Array1::from_vec(vec![c(0.3), c(-0.7)]);
        let x =
            solve_bordered(&jac.view(), &border.view(), &rhs.view(), 1e-8).unwrap();
        assert!((x[0] - c(0.3)).norm() < 1e-12);
        assert!((x[1] - c(-0.7)).norm() < 1e-12);
    }

    #[test]
    fn well_conditioned_instance_hits_tight_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // J annihilates e₃-ish directions: take a random 2x3 J, compute its
        // null space implicitly by solving; verify the residual bound only.
        let (jac, _) = gaussian_border(&mut rng, 2, 3);
        let (border, rhs) = gaussian_border(&mut rng, 1, 3);
        let (x, residual) = solve_bordered_detailed(
            &jac.view(),
            &border.view(),
            &rhs.view(),
            1e-10,
        )
        .unwrap();
        assert!(residual <= 1e-10 * (1.0 + l2_norm(rhs.view())));
        // J x ≈ 0 and R x ≈ d hold individually too
        assert!(inf_norm(jac.dot(&x).view()) < 1e-10);
        let rx = border.dot(&x) - &rhs;
        assert!(inf_norm(rx.view()) < 1e-10);
    }

    #[test]
    fn scalar_zero_jacobian_border_must_be_nonzero() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let jac: Array2<Complex64> = Array2::zeros((1, 1));
        let cfg = DeflationConfig::default();
        let (border, _) = draw_border(&mut rng, 1, 1, &jac.view(), &cfg).unwrap();
        assert!(border[(0, 0)].norm() > 0.0);
    }

    #[test]
    fn draws_are_bit_identical_for_a_fixed_seed() {
        let jac: Array2<Complex64> = Array2::zeros((1, 2));
        let cfg = DeflationConfig::default();
        let mut rng_a = ChaCha8Rng::seed_from_u64(42);
        let mut rng_b = ChaCha8Rng::seed_from_u64(42);
        let (ra, da) = draw_border(&mut rng_a, 2, 2, &jac.view(), &cfg).unwrap();
        let (rb, db) = draw_border(&mut rng_b, 2, 2, &jac.view(), &cfg).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(da, db);
    }

    #[test]
    fn oversized_row_count_reports_degenerate_input() {
        // asking for 0 border rows on a rank-deficient J can never complete
        // the column space
        let jac: Array2<Complex64> = Array2::zeros((2, 2));
        let cfg = DeflationConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = draw_border(&mut rng, 0, 2, &jac.view(), &cfg).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }
}
