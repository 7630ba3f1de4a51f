//! The deflation engine.
//!
//! A deflation step takes a system `F` with Jacobian `J`, a solution `x̂`
//! with nullity `n_i = nullity(J(x̂))`, and a random border `(R, d)` with
//! `[J(x̂); R]` of full column rank, and produces the expanded system
//!
//! ```text
//!   G(X, Y) = [ F(X);  J(X)·Y;  R·Y − d ]
//! ```
//!
//! on twice the variables, together with the extension `ŷ` solving
//! `[J(x̂); R]·ŷ = [0; d]`. Iterating records the deflation sequence
//! `(n₀, n₁, …)`: each value bounds the local dimension of the solution
//! set at `x̂` from above (from below once the sequence leaves the locus
//! of smooth points), and the values never increase.
//!
//! Rather than expanding `G` symbolically, [`DeflatedSystem`] evaluates it
//! and its Jacobian through block recursions over the child system's
//! directional-derivative actions:
//!
//! ```text
//!            [ J_c(X)      0      ]
//!   jac  G = [ ∂X(J_c·Y)  J_c(X)  ]          ∂X(J_c·Y) = djvp_c(X, Y)
//!            [ 0           R      ]
//! ```
//!
//! with matching recursions for `djvp` and `t3` (see the trait docs). For a
//! base system of degree ≤ 3 the fourth derivative vanishes, the recursion
//! closes, and every level stays exact. Higher-degree bases are deflated
//! through the symbolic oracle instead ([`PolySystem::deflate`]).

mod border;
mod engine;
mod rank;

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, s};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polysys::PolySystem;

pub use border::{draw_border, gaussian_border, solve_bordered, solve_bordered_detailed};
pub use engine::{
    deflate_once, deflation_sequence, deflation_sequence_with_progress,
    first_columns_nullity_check, DeflateStep, DeflationConfig, DeflationReport, LevelRecord,
    SOLUTION_RESIDUAL_TOL,
};
pub use rank::{numerical_rank, RankResult, BORDERLINE_GAP_RATIO};

/// The uniform interface the engine deflates against.
///
/// Implementations must satisfy, for a system `F: C^N → C^M`:
///
/// * `eval(x)` — `F(x) ∈ C^M`;
/// * `jac(x)` — the Jacobian `J(x) ∈ C^{M×N}`;
/// * `djvp(x, y)` — the partial Jacobian with respect to `x` of the
///   directional derivative `J(x)·y`, an `M×N` matrix (symmetric in the
///   sense `djvp(x, y)·u = djvp(x, u)·y`);
/// * `t3(x, y, u)` — the partial Jacobian with respect to `x` of the second
///   directional derivative along `y` and `u`, again `M×N` (symmetric in
///   all three of `y`, `u`, and the contraction direction);
/// * fourth and higher derivative actions must vanish whenever
///   `degree_bound() ≤ 3` — the block recursion relies on it.
pub trait DeflatableSystem: Send + Sync {
    fn n_vars(&self) -> usize;

    fn n_eqs(&self) -> usize;

    /// Max total degree of the component polynomials.
    fn degree_bound(&self) -> usize;

    /// How many deflation levels sit below this system (0 for base systems).
    fn level(&self) -> usize {
        0
    }

    /// Variable count of the underlying base system (`n_vars / 2^level`).
    fn base_n_vars(&self) -> usize {
        self.n_vars()
    }

    fn eval(&self, x: &[Complex64]) -> Result<Array1<Complex64>>;

    fn jac(&self, x: &[Complex64]) -> Result<Array2<Complex64>>;

    /// `∂x (J(x)·y)`, the Jacobian of the directional derivative.
    fn djvp(&self, x: &[Complex64], y: &[Complex64]) -> Result<Array2<Complex64>>;

    /// `∂x` of the second directional derivative along `y` and `u`.
    fn t3(&self, x: &[Complex64], y: &[Complex64], u: &[Complex64])
        -> Result<Array2<Complex64>>;

    /// Expands one deflation step fully symbolically, when the
    /// implementation has a symbolic form. The engine falls back to this
    /// route for base systems of degree > 3.
    fn deflate_symbolic(
        &self,
        border: &ArrayView2<Complex64>,
        rhs: &ArrayView1<Complex64>,
    ) -> Result<PolySystem> {
        let _ = (border, rhs);
        Err(Error::UnsupportedDegree {
            degree: self.degree_bound(),
            hint: "system has no symbolic form to deflate".into(),
        })
    }
}

impl DeflatableSystem for PolySystem {
    fn n_vars(&self) -> usize {
        PolySystem::n_vars(self)
    }

    fn n_eqs(&self) -> usize {
        PolySystem::n_eqs(self)
    }

    fn degree_bound(&self) -> usize {
        self.degree() as usize
    }

    fn eval(&self, x: &[Complex64]) -> Result<Array1<Complex64>> {
        PolySystem::eval(self, x)
    }

    fn jac(&self, x: &[Complex64]) -> Result<Array2<Complex64>> {
        self.jacobian(x)
    }

    fn djvp(&self, x: &[Complex64], y: &[Complex64]) -> Result<Array2<Complex64>> {
        self.shift(y)?.jacobian(x)
    }

    fn t3(
        &self,
        x: &[Complex64],
        y: &[Complex64],
        u: &[Complex64],
    ) -> Result<Array2<Complex64>> {
        self.shift(u)?.shift(y)?.jacobian(x)
    }

    fn deflate_symbolic(
        &self,
        border: &ArrayView2<Complex64>,
        rhs: &ArrayView1<Complex64>,
    ) -> Result<PolySystem> {
        self.deflate(border, rhs)
    }
}

/// One deflation level wrapped around a child system: evaluates
/// `[F_c(X); J_c(X)·Y; R·Y − d]` and its derivative actions by block
/// recursion, without symbolic expansion.
pub struct DeflatedSystem {
    child: Arc<dyn DeflatableSystem>,
    border: Array2<Complex64>,
    rhs: Array1<Complex64>,
}

impl DeflatedSystem {
    /// Wraps `child` with a border `R` (`rows = recorded child nullity`,
    /// `cols = child.n_vars()`) and right-hand side `d`.
    pub fn new(
        child: Arc<dyn DeflatableSystem>,
        border: Array2<Complex64>,
        rhs: Array1<Complex64>,
    ) -> Result<Self> {
        if border.ncols() != child.n_vars() {
            return Err(Error::dims(format!(
                "border has {} columns, child system has {} variables",
                border.ncols(),
                child.n_vars()
            )));
        }
        if border.nrows() != rhs.len() {
            return Err(Error::dims(format!(
                "border has {} rows but right-hand side has {} entries",
                border.nrows(),
                rhs.len()
            )));
        }
        Ok(Self { child, border, rhs })
    }

    pub fn child(&self) -> &Arc<dyn DeflatableSystem> {
        &self.child
    }

    pub fn border(&self) -> &Array2<Complex64> {
        &self.border
    }

    pub fn rhs(&self) -> &Array1<Complex64> {
        &self.rhs
    }

    fn split<'a>(&self, what: &str, v: &'a [Complex64]) -> Result<(&'a [Complex64], &'a [Complex64])> {
        let nc = self.child.n_vars();
        if v.len() != 2 * nc {
            return Err(Error::dims(format!(
                "{what} has {} coordinates, deflated system has {}",
                v.len(),
                2 * nc
            )));
        }
        Ok(v.split_at(nc))
    }

    fn require_cubic_child(&self) -> Result<()> {
        let deg = self.child.degree_bound();
        if deg > 3 {
            return Err(Error::UnsupportedDegree {
                degree: deg,
                hint: "third-derivative recursion needs a vanishing fourth derivative; \
                       deflate degree > 3 systems through the symbolic oracle"
                    .into(),
            });
        }
        Ok(())
    }
}

impl DeflatableSystem for DeflatedSystem {
    fn n_vars(&self) -> usize {
        2 * self.child.n_vars()
    }

    fn n_eqs(&self) -> usize {
        2 * self.child.n_eqs() + self.border.nrows()
    }

    fn degree_bound(&self) -> usize {
        // [F; J·Y; R·Y − d] has the child's degree (the J·Y block trades one
        // differentiation for one multiplication), except that the border
        // rows are affine
        self.child.degree_bound().max(1)
    }

    fn level(&self) -> usize {
        self.child.level() + 1
    }

    fn base_n_vars(&self) -> usize {
        self.child.base_n_vars()
    }

    /// `[F_c(X); J_c(X)·Y; R·Y − d]`
    fn eval(&self, x: &[Complex64]) -> Result<Array1<Complex64>> {
        let (xc, yc) = self.split("point", x)?;
        let mc = self.child.n_eqs();
        let k = self.border.nrows();
        let f = self.child.eval(xc)?;
        let jy = self.child.jac(xc)?.dot(&ArrayView1::from(yc));
        let ry = self.border.dot(&ArrayView1::from(yc)) - &self.rhs;
        let mut out = Array1::zeros(2 * mc + k);
        out.slice_mut(s![..mc]).assign(&f);
        out.slice_mut(s![mc..2 * mc]).assign(&jy);
        out.slice_mut(s![2 * mc..]).assign(&ry);
        Ok(out)
    }

    /// ```text
    ///   [ J_c(X)         0       ]
    ///   [ djvp_c(X,Y)   J_c(X)   ]
    ///   [ 0              R       ]
    /// ```
    fn jac(&self, x: &[Complex64]) -> Result<Array2<Complex64>> {
        let (xc, yc) = self.split("point", x)?;
        let (mc, nc) = (self.child.n_eqs(), self.child.n_vars());
        let k = self.border.nrows();
        let jc = self.child.jac(xc)?;
        let dj = self.child.djvp(xc, yc)?;
        let mut out = Array2::zeros((2 * mc + k, 2 * nc));
        out.slice_mut(s![..mc, ..nc]).assign(&jc);
        out.slice_mut(s![mc..2 * mc, ..nc]).assign(&dj);
        out.slice_mut(s![mc..2 * mc, nc..]).assign(&jc);
        out.slice_mut(s![2 * mc.., nc..]).assign(&self.border);
        Ok(out)
    }

    /// With point `(X, Y)` and direction `(U, V)`:
    ///
    /// ```text
    ///   [ djvp_c(X,U)                     0           ]
    ///   [ t3_c(X,Y,U) + djvp_c(X,V)    djvp_c(X,U)    ]
    ///   [ 0                               0           ]
    /// ```
    ///
    /// The `(2,2)` block reuses `djvp_c(X,U)` because mixed second
    /// derivatives commute.
    fn djvp(&self, x: &[Complex64], y: &[Complex64]) -> Result<Array2<Complex64>> {
        let (xc, yc) = self.split("point", x)?;
        let (uc, vc) = self.split("direction", y)?;
        let (mc, nc) = (self.child.n_eqs(), self.child.n_vars());
        let k = self.border.nrows();
        let dju = self.child.djvp(xc, uc)?;
        let mid = self.child.t3(xc, yc, uc)? + self.child.djvp(xc, vc)?;
        let mut out = Array2::zeros((2 * mc + k, 2 * nc));
        out.slice_mut(s![..mc, ..nc]).assign(&dju);
        out.slice_mut(s![mc..2 * mc, ..nc]).assign(&mid);
        out.slice_mut(s![mc..2 * mc, nc..]).assign(&dju);
        Ok(out)
    }

    /// With point `(X, Y)` and directions `(U, V)`, `(P, Q)`:
    ///
    /// ```text
    ///   [ t3_c(X,U,P)                     0           ]
    ///   [ t3_c(X,V,P) + t3_c(X,U,Q)    t3_c(X,U,P)    ]
    ///   [ 0                               0           ]
    /// ```
    ///
    /// plus a fourth-derivative term in the `(2,1)` block that vanishes
    /// exactly when the child has degree ≤ 3 — the only case this path
    /// accepts.
    fn t3(
        &self,
        x: &[Complex64],
        y: &[Complex64],
        u: &[Complex64],
    ) -> Result<Array2<Complex64>> {
        self.require_cubic_child()?;
        let (xc, _yc) = self.split("point", x)?;
        let (uc, vc) = self.split("direction y", y)?;
        let (pc, qc) = self.split("direction u", u)?;
        let (mc, nc) = (self.child.n_eqs(), self.child.n_vars());
        let k = self.border.nrows();
        let t3up = self.child.t3(xc, uc, pc)?;
        let mid = self.child.t3(xc, vc, pc)? + self.child.t3(xc, uc, qc)?;
        let mut out = Array2::zeros((2 * mc + k, 2 * nc));
        out.slice_mut(s![..mc, ..nc]).assign(&t3up);
        out.slice_mut(s![mc..2 * mc, ..nc]).assign(&mid);
        out.slice_mut(s![mc..2 * mc, nc..]).assign(&t3up);
        Ok(out)
    }
}
