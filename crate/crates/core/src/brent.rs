//! Brent systems: the polynomial equations whose solutions are rank-`r`
//! bilinear schemes computing the product of an `m×n` by an `n×p` matrix.
//!
//! The system `B(m,n,p|r)` lives on `(mn+np+pm)·r` variables (the scheme
//! factors α, β, γ) and has `(mnp)²` equations, one per index tuple
//! `(i1,i2,j1,j2,k1,k2)`:
//!
//! ```text
//!   Σ_t α^(t)_{i1,i2} β^(t)_{j1,j2} γ^(t)_{k1,k2}  =  δ_{i2,j1} δ_{j2,k1} δ_{k2,i1}
//! ```
//!
//! Everything here is evaluated in closed form from that trilinear shape —
//! no symbolic expansion — including the Jacobian and the higher
//! directional-derivative actions needed by the deflation engine. Since the
//! equations are cubic, the third derivative action is constant in the
//! point and the fourth vanishes.
//!
//! Variable flattening order (also the order used by the solution file
//! format): all α entries, then all β, then all γ; within each block the
//! rank-one term index `t` is outermost, then row-major over the matrix
//! indices. Equations are row-major over `(i1,i2,j1,j2,k1,k2)`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deflation::DeflatableSystem;
use crate::error::{Error, Result};

/// Matrix dimensions `m, n, p` and the rank budget `r` of a Brent system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrentShape {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub r: usize,
}

impl BrentShape {
    pub fn new(m: usize, n: usize, p: usize, r: usize) -> Result<Self> {
        if m == 0 || n == 0 || p == 0 || r == 0 {
            return Err(Error::InvalidInput(format!(
                "shape dimensions must be positive, got {m}x{n}x{p}:{r}"
            )));
        }
        Ok(Self { m, n, p, r })
    }

    /// `(mn + np + pm)·r`
    pub fn n_vars(&self) -> usize {
        (self.m * self.n + self.n * self.p + self.p * self.m) * self.r
    }

    /// `(mnp)²`
    pub fn n_eqs(&self) -> usize {
        let mnp = self.m * self.n * self.p;
        mnp * mnp
    }

    fn alpha_offset(&self) -> usize {
        0
    }

    fn beta_offset(&self) -> usize {
        self.m * self.n * self.r
    }

    fn gamma_offset(&self) -> usize {
        (self.m * self.n + self.n * self.p) * self.r
    }

    /// Flat index of `α^(t)_{i1,i2}` (all indices 0-based).
    #[inline]
    pub fn alpha_index(&self, t: usize, i1: usize, i2: usize) -> usize {
        self.alpha_offset() + t * self.m * self.n + i1 * self.n + i2
    }

    /// Flat index of `β^(t)_{j1,j2}`.
    #[inline]
    pub fn beta_index(&self, t: usize, j1: usize, j2: usize) -> usize {
        self.beta_offset() + t * self.n * self.p + j1 * self.p + j2
    }

    /// Flat index of `γ^(t)_{k1,k2}`.
    #[inline]
    pub fn gamma_index(&self, t: usize, k1: usize, k2: usize) -> usize {
        self.gamma_offset() + t * self.p * self.m + k1 * self.m + k2
    }

    /// Row-major equation index of `(i1,i2,j1,j2,k1,k2)`.
    #[inline]
    pub fn equation_index(
        &self,
        i1: usize,
        i2: usize,
        j1: usize,
        j2: usize,
        k1: usize,
        k2: usize,
    ) -> usize {
        ((((i1 * self.n + i2) * self.n + j1) * self.p + j2) * self.p + k1) * self.m + k2
    }
}

impl fmt::Display for BrentShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}:{}", self.m, self.n, self.p, self.r)
    }
}

impl FromStr for BrentShape {
    type Err = Error;

    /// Parses `"MxNxP:R"`, e.g. `"2x2x2:7"`.
    fn from_str(s: &str) -> Result<Self> {
        let (dims, rank) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected MxNxP:R, got `{s}`")))?;
        let (m, n, p) = parse_mnp(dims)?;
        let r = rank
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad rank `{rank}` in `{s}`")))?;
        BrentShape::new(m, n, p, r)
    }
}

/// Parses `"MxNxP"`, e.g. `"2x2x2"`.
pub fn parse_mnp(s: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<_> = s.trim().split(['x', 'X']).collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("expected MxNxP, got `{s}`")));
    }
    let mut dims = [0usize; 3];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad dimension `{part}` in `{s}`")))?;
    }
    Ok((dims[0], dims[1], dims[2]))
}

/// The structural matrix multiplication tensor: a dense 0/1 array of shape
/// `(mn, np, pm)` with a 1 at `(e_ij, e_jk, e_ki)` for every `(i, j, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MMTensor {
    m: usize,
    n: usize,
    p: usize,
    entries: Array3<u8>,
}

/// Builds the matrix multiplication tensor for the given dimensions.
pub fn mm_tensor(m: usize, n: usize, p: usize) -> Result<MMTensor> {
    if m == 0 || n == 0 || p == 0 {
        return Err(Error::InvalidInput(format!(
            "tensor dimensions must be positive, got {m}x{n}x{p}"
        )));
    }
    let mut entries = Array3::zeros((m * n, n * p, p * m));
    for i in 0..m {
        for j in 0..n {
            for k in 0..p {
                entries[(i * n + j, j * p + k, k * m + i)] = 1;
            }
        }
    }
    Ok(MMTensor { m, n, p, entries })
}

impl MMTensor {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.p)
    }

    pub fn entries(&self) -> &Array3<u8> {
        &self.entries
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }

    pub fn to_complex(&self) -> Array3<Complex64> {
        self.entries.mapv(|e| Complex64::new(f64::from(e), 0.0))
    }
}

/// A candidate rank-`r` decomposition: factor arrays `alpha (r×m×n)`,
/// `beta (r×n×p)`, `gamma (r×p×m)`. Equivalently, a point in
/// `C^{(mn+np+pm)r}` under the documented flattening.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearScheme {
    shape: BrentShape,
    alpha: Array3<Complex64>,
    beta: Array3<Complex64>,
    gamma: Array3<Complex64>,
}

impl BilinearScheme {
    pub fn new(
        shape: BrentShape,
        alpha: Array3<Complex64>,
        beta: Array3<Complex64>,
        gamma: Array3<Complex64>,
    ) -> Result<Self> {
        let (m, n, p, r) = (shape.m, shape.n, shape.p, shape.r);
        for (name, arr, want) in [
            ("alpha", &alpha, (r, m, n)),
            ("beta", &beta, (r, n, p)),
            ("gamma", &gamma, (r, p, m)),
        ] {
            if arr.dim() != want {
                return Err(Error::dims(format!(
                    "{name} has shape {:?}, expected {:?} for {shape}",
                    arr.dim(),
                    want
                )));
            }
        }
        Ok(Self { shape, alpha, beta, gamma })
    }

    pub fn shape(&self) -> BrentShape {
        self.shape
    }

    pub fn alpha(&self) -> &Array3<Complex64> {
        &self.alpha
    }

    pub fn beta(&self) -> &Array3<Complex64> {
        &self.beta
    }

    pub fn gamma(&self) -> &Array3<Complex64> {
        &self.gamma
    }

    /// Flattens to the canonical variable order of [`BrentShape`].
    pub fn flatten(&self) -> Vec<Complex64> {
        let s = self.shape;
        let mut out = vec![Complex64::ZERO; s.n_vars()];
        for t in 0..s.r {
            for i1 in 0..s.m {
                for i2 in 0..s.n {
                    out[s.alpha_index(t, i1, i2)] = self.alpha[(t, i1, i2)];
                }
            }
            for j1 in 0..s.n {
                for j2 in 0..s.p {
                    out[s.beta_index(t, j1, j2)] = self.beta[(t, j1, j2)];
                }
            }
            for k1 in 0..s.p {
                for k2 in 0..s.m {
                    out[s.gamma_index(t, k1, k2)] = self.gamma[(t, k1, k2)];
                }
            }
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn from_flat(shape: BrentShape, x: &[Complex64]) -> Result<Self> {
        if x.len() != shape.n_vars() {
            return Err(Error::dims(format!(
                "point has {} coordinates, {shape} has {} variables",
                x.len(),
                shape.n_vars()
            )));
        }
        let mut alpha = Array3::zeros((shape.r, shape.m, shape.n));
        let mut beta = Array3::zeros((shape.r, shape.n, shape.p));
        let mut gamma = Array3::zeros((shape.r, shape.p, shape.m));
        for t in 0..shape.r {
            for i1 in 0..shape.m {
                for i2 in 0..shape.n {
                    alpha[(t, i1, i2)] = x[shape.alpha_index(t, i1, i2)];
                }
            }
            for j1 in 0..shape.n {
                for j2 in 0..shape.p {
                    beta[(t, j1, j2)] = x[shape.beta_index(t, j1, j2)];
                }
            }
            for k1 in 0..shape.p {
                for k2 in 0..shape.m {
                    gamma[(t, k1, k2)] = x[shape.gamma_index(t, k1, k2)];
                }
            }
        }
        Self::new(shape, alpha, beta, gamma)
    }

    /// Contracts the rank-one terms into a dense `(mn, np, pm)` tensor.
    pub fn contract(&self) -> Array3<Complex64> {
        let s = self.shape;
        let mut out = Array3::zeros((s.m * s.n, s.n * s.p, s.p * s.m));
        for t in 0..s.r {
            for i1 in 0..s.m {
                for i2 in 0..s.n {
                    let a = self.alpha[(t, i1, i2)];
                    if a == Complex64::ZERO {
                        continue;
                    }
                    for j1 in 0..s.n {
                        for j2 in 0..s.p {
                            let ab = a * self.beta[(t, j1, j2)];
                            if ab == Complex64::ZERO {
                                continue;
                            }
                            for k1 in 0..s.p {
                                for k2 in 0..s.m {
                                    out[(i1 * s.n + i2, j1 * s.p + j2, k1 * s.m + k2)] +=
                                        ab * self.gamma[(t, k1, k2)];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `‖F(flatten(self))‖∞` for the Brent system of this scheme's shape.
    pub fn residual(&self) -> f64 {
        let sys = BrentSystem::new(self.shape);
        let v = sys
            .eval(&self.flatten())
            .expect("flattened scheme matches its own shape");
        v.iter().map(Complex64::norm).fold(0.0, f64::max)
    }
}

/// The `r = mnp` scheme read straight off the tensor definition: term
/// `t = (i·n + j)·p + k` has `alpha = e_ij`, `beta = e_jk`, `gamma = e_ki`.
pub fn natural_algorithm(m: usize, n: usize, p: usize) -> Result<BilinearScheme> {
    let shape = BrentShape::new(m, n, p, m * n * p)?;
    let one = Complex64::new(1.0, 0.0);
    let mut alpha = Array3::zeros((shape.r, m, n));
    let mut beta = Array3::zeros((shape.r, n, p));
    let mut gamma = Array3::zeros((shape.r, p, m));
    for i in 0..m {
        for j in 0..n {
            for k in 0..p {
                let t = (i * n + j) * p + k;
                alpha[(t, i, j)] = one;
                beta[(t, j, k)] = one;
                gamma[(t, k, i)] = one;
            }
        }
    }
    BilinearScheme::new(shape, alpha, beta, gamma)
}

/// The classical 7-term scheme for 2×2 matrices, with exact ±1 coefficients.
pub fn strassen_scheme() -> BilinearScheme {
    let shape = BrentShape::new(2, 2, 2, 7).expect("static shape");
    let mut alpha = Array3::zeros((7, 2, 2));
    let mut beta = Array3::zeros((7, 2, 2));
    let mut gamma = Array3::zeros((7, 2, 2));
    // (t, row, col, sign); product t computes (Σ α·A)(Σ β·B), and C_{ik}
    // accumulates γ^(t)_{k,i} · product_t.
    let a_terms = [
        (0, 0, 0, 1.0),
        (0, 1, 1, 1.0),
        (1, 1, 0, 1.0),
        (1, 1, 1, 1.0),
        (2, 0, 0, 1.0),
        (3, 1, 1, 1.0),
        (4, 0, 0, 1.0),
        (4, 0, 1, 1.0),
        (5, 1, 0, 1.0),
        (5, 0, 0, -1.0),
        (6, 0, 1, 1.0),
        (6, 1, 1, -1.0),
    ];
    let b_terms = [
        (0, 0, 0, 1.0),
        (0, 1, 1, 1.0),
        (1, 0, 0, 1.0),
        (2, 0, 1, 1.0),
        (2, 1, 1, -1.0),
        (3, 1, 0, 1.0),
        (3, 0, 0, -1.0),
        (4, 1, 1, 1.0),
        (5, 0, 0, 1.0),
        (5, 0, 1, 1.0),
        (6, 1, 0, 1.0),
        (6, 1, 1, 1.0),
    ];
    // γ indexed (k, i): column then row of the product entry C_{ik}.
    let g_terms = [
        (0, 0, 0, 1.0),
        (3, 0, 0, 1.0),
        (4, 0, 0, -1.0),
        (6, 0, 0, 1.0),
        (2, 1, 0, 1.0),
        (4, 1, 0, 1.0),
        (1, 0, 1, 1.0),
        (3, 0, 1, 1.0),
        (0, 1, 1, 1.0),
        (1, 1, 1, -1.0),
        (2, 1, 1, 1.0),
        (5, 1, 1, 1.0),
    ];
    for (t, a, b, s) in a_terms {
        alpha[(t, a, b)] = Complex64::new(s, 0.0);
    }
    for (t, a, b, s) in b_terms {
        beta[(t, a, b)] = Complex64::new(s, 0.0);
    }
    for (t, a, b, s) in g_terms {
        gamma[(t, a, b)] = Complex64::new(s, 0.0);
    }
    BilinearScheme::new(shape, alpha, beta, gamma).expect("static dimensions")
}

/// Dimension of the connected symmetry group acting on the solution set:
/// `m² + n² + p² + 2r − 3`. This bounds the local dimension from below only
/// when the stabilizer of the point is finite; report it with that caveat.
pub fn orbit_lower_bound(shape: BrentShape) -> usize {
    shape.m * shape.m + shape.n * shape.n + shape.p * shape.p + 2 * shape.r - 3
}

/// The trivial lower bound for underdetermined systems:
/// `max(n_vars − n_eqs, 0)`.
pub fn underdetermined_bound(shape: BrentShape) -> usize {
    shape.n_vars().saturating_sub(shape.n_eqs())
}

/// A Brent system evaluated in closed form.
#[derive(Debug, Clone, Copy)]
pub struct BrentSystem {
    shape: BrentShape,
}

impl BrentSystem {
    pub fn new(shape: BrentShape) -> Self {
        Self { shape }
    }

    pub fn shape(&self) -> BrentShape {
        self.shape
    }

    fn check_len(&self, what: &str, v: &[Complex64]) -> Result<()> {
        if v.len() != self.shape.n_vars() {
            return Err(Error::dims(format!(
                "{what} has {} coordinates, {} has {} variables",
                v.len(),
                self.shape,
                self.shape.n_vars()
            )));
        }
        Ok(())
    }

    /// Visits every equation as `(eq, i1, i2, j1, j2, k1, k2, rhs)`.
    fn for_each_equation(&self, mut f: impl FnMut(usize, [usize; 6], f64)) {
        let s = self.shape;
        let mut eq = 0;
        for i1 in 0..s.m {
            for i2 in 0..s.n {
                for j1 in 0..s.n {
                    for j2 in 0..s.p {
                        for k1 in 0..s.p {
                            for k2 in 0..s.m {
                                let rhs =
                                    if i2 == j1 && j2 == k1 && k2 == i1 { 1.0 } else { 0.0 };
                                f(eq, [i1, i2, j1, j2, k1, k2], rhs);
                                eq += 1;
                            }
                        }
                    }
                }
            }
        }
        debug_assert_eq!(eq, s.n_eqs());
    }
}

impl DeflatableSystem for BrentSystem {
    fn n_vars(&self) -> usize {
        self.shape.n_vars()
    }

    fn n_eqs(&self) -> usize {
        self.shape.n_eqs()
    }

    fn degree_bound(&self) -> usize {
        3
    }

    fn eval(&self, x: &[Complex64]) -> Result<Array1<Complex64>> {
        self.check_len("point", x)?;
        let s = self.shape;
        let mut out = Array1::zeros(s.n_eqs());
        self.for_each_equation(|eq, [i1, i2, j1, j2, k1, k2], rhs| {
            let mut acc = Complex64::new(-rhs, 0.0);
            for t in 0..s.r {
                acc += x[s.alpha_index(t, i1, i2)]
                    * x[s.beta_index(t, j1, j2)]
                    * x[s.gamma_index(t, k1, k2)];
            }
            out[eq] = acc;
        });
        Ok(out)
    }

    fn jac(&self, x: &[Complex64]) -> Result<Array2<Complex64>> {
        self.check_len("point", x)?;
        let s = self.shape;
        let mut out = Array2::zeros((s.n_eqs(), s.n_vars()));
        self.for_each_equation(|eq, [i1, i2, j1, j2, k1, k2], _| {
            let mut row = out.row_mut(eq);
            for t in 0..s.r {
                let (ia, ib, ic) = (
                    s.alpha_index(t, i1, i2),
                    s.beta_index(t, j1, j2),
                    s.gamma_index(t, k1, k2),
                );
                row[ia] += x[ib] * x[ic];
                row[ib] += x[ia] * x[ic];
                row[ic] += x[ia] * x[ib];
            }
        });
        Ok(out)
    }

    fn djvp(&self, x: &[Complex64], y: &[Complex64]) -> Result<Array2<Complex64>> {
        self.check_len("point", x)?;
        self.check_len("direction", y)?;
        let s = self.shape;
        let mut out = Array2::zeros((s.n_eqs(), s.n_vars()));
        self.for_each_equation(|eq, [i1, i2, j1, j2, k1, k2], _| {
            let mut row = out.row_mut(eq);
            for t in 0..s.r {
                let (ia, ib, ic) = (
                    s.alpha_index(t, i1, i2),
                    s.beta_index(t, j1, j2),
                    s.gamma_index(t, k1, k2),
                );
                row[ia] += y[ib] * x[ic] + x[ib] * y[ic];
                row[ib] += y[ia] * x[ic] + x[ia] * y[ic];
                row[ic] += y[ia] * x[ib] + x[ia] * y[ib];
            }
        });
        Ok(out)
    }

    fn t3(&self, x: &[Complex64], y: &[Complex64], u: &[Complex64]) -> Result<Array2<Complex64>> {
        self.check_len("point", x)?;
        self.check_len("direction y", y)?;
        self.check_len("direction u", u)?;
        let s = self.shape;
        // cubic forms: third derivatives are constant in x
        let mut out = Array2::zeros((s.n_eqs(), s.n_vars()));
        self.for_each_equation(|eq, [i1, i2, j1, j2, k1, k2], _| {
            let mut row = out.row_mut(eq);
            for t in 0..s.r {
                let (ia, ib, ic) = (
                    s.alpha_index(t, i1, i2),
                    s.beta_index(t, j1, j2),
                    s.gamma_index(t, k1, k2),
                );
                row[ia] += y[ib] * u[ic] + u[ib] * y[ic];
                row[ib] += y[ia] * u[ic] + u[ia] * y[ic];
                row[ic] += y[ia] * u[ib] + u[ia] * y[ib];
            }
        });
        Ok(out)
    }
}
