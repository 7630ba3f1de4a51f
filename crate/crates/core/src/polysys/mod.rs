//! Sparse multivariate polynomial systems over complex coefficients.
//!
//! Coefficients are complex doubles; the structure (which monomials are
//! present) is kept exact: arithmetic prunes coefficients that are exactly
//! zero and never applies an epsilon. Terms are ordered graded
//! lexicographically by variable index so printed and compared forms are
//! deterministic.
//!
//! This module is the symbolic oracle of the crate: it differentiates
//! exactly, it can deflate a system fully symbolically, and the structured
//! fast paths elsewhere are tested against it. It is meant for small
//! systems; do not push hundreds of variables through it.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

mod parser;
pub use parser::{parse_complex_scalar, parse_point, parse_polynomial, parse_system,
                 parse_system_with_dim};

/// A product of variable powers, stored sparsely as `var index → exponent`.
///
/// Invariant: no stored exponent is zero. The unit monomial is the empty map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: BTreeMap<usize, u32>,
}

impl Monomial {
    /// The monomial `1`.
    pub fn unit() -> Self {
        Self::default()
    }

    /// The monomial `x_index` (0-based).
    pub fn var(index: usize) -> Self {
        Self::from_pairs([(index, 1)])
    }

    /// Builds a monomial from `(var, exponent)` pairs, merging duplicates
    /// and dropping zero exponents.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut exps = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *exps.entry(v).or_insert(0) += e;
            }
        }
        Self { exps }
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.exps.values().sum()
    }

    /// Exponent of `var` (0 if absent).
    pub fn exponent(&self, var: usize) -> u32 {
        self.exps.get(&var).copied().unwrap_or(0)
    }

    /// Largest variable index appearing, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.exps.keys().next_back().copied()
    }

    /// Iterates `(var, exponent)` pairs in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.exps.iter().map(|(&v, &e)| (v, e))
    }

    pub fn is_unit(&self) -> bool {
        self.exps.is_empty()
    }

    /// Value of the monomial at `x`.
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.iter()
            .fold(Complex64::new(1.0, 0.0), |acc, (v, e)| acc * x[v].powu(e))
    }

    /// Product of two monomials.
    pub fn mul(&self, other: &Self) -> Self {
        Self::from_pairs(self.iter().chain(other.iter()))
    }

    /// `∂/∂x_var`: returns the integer factor pulled down and the reduced
    /// monomial, or `None` when the derivative vanishes.
    pub fn partial(&self, var: usize) -> Option<(u32, Monomial)> {
        let e = self.exponent(var);
        if e == 0 {
            return None;
        }
        let mut exps = self.exps.clone();
        if e == 1 {
            exps.remove(&var);
        } else {
            exps.insert(var, e - 1);
        }
        Some((e, Monomial { exps }))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: higher total degree first, ties broken by the
    /// exponent of the lowest-indexed variable where the monomials differ.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.iter().peekable();
        let mut b = other.iter().peekable();
        loop {
            match (a.peek().copied(), b.peek().copied()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => {
                    if va < vb {
                        return Ordering::Greater; // a has a power where b has none
                    }
                    if vb < va {
                        return Ordering::Less;
                    }
                    match ea.cmp(&eb) {
                        Ordering::Equal => {
                            a.next();
                            b.next();
                        }
                        ord => return ord,
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in self.iter() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            // variables print 1-based, matching the text grammar
            write!(f, "x{}", v + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// A sparse polynomial in `ambient_dim` variables.
///
/// Invariant: no stored coefficient is exactly zero, and every monomial uses
/// only variables below `ambient_dim`. The zero polynomial has no terms and
/// degree 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Complex64>,
    ambient_dim: usize,
}

impl Polynomial {
    pub fn zero(ambient_dim: usize) -> Self {
        Self { terms: BTreeMap::new(), ambient_dim }
    }

    pub fn constant(c: Complex64, ambient_dim: usize) -> Self {
        let mut p = Self::zero(ambient_dim);
        p.add_term(Monomial::unit(), c);
        p
    }

    /// The polynomial `x_index`.
    pub fn variable(index: usize, ambient_dim: usize) -> Result<Self> {
        if index >= ambient_dim {
            return Err(Error::dims(format!(
                "variable index {index} out of range for {ambient_dim} variables"
            )));
        }
        let mut p = Self::zero(ambient_dim);
        p.add_term(Monomial::var(index), Complex64::new(1.0, 0.0));
        Ok(p)
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs, merging
    /// duplicates and pruning exact zeros.
    pub fn from_terms(
        ambient_dim: usize,
        terms: impl IntoIterator<Item = (Monomial, Complex64)>,
    ) -> Result<Self> {
        let mut p = Self::zero(ambient_dim);
        for (m, c) in terms {
            if let Some(v) = m.max_var() {
                if v >= ambient_dim {
                    return Err(Error::dims(format!(
                        "monomial {m} uses x{} but the polynomial has {ambient_dim} variables",
                        v + 1
                    )));
                }
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == Complex64::ZERO {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == Complex64::ZERO {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Max total degree over the terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Iterates `(monomial, coefficient)` in ascending monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, Complex64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or(Complex64::ZERO)
    }

    /// Plain term-by-term evaluation.
    pub fn eval(&self, x: &[Complex64]) -> Result<Complex64> {
        if x.len() != self.ambient_dim {
            return Err(Error::dims(format!(
                "point has {} coordinates, polynomial has {} variables",
                x.len(),
                self.ambient_dim
            )));
        }
        Ok(self
            .terms()
            .fold(Complex64::ZERO, |acc, (m, c)| acc + c * m.eval(x)))
    }

    /// Exact symbolic partial derivative `∂/∂x_var`.
    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.ambient_dim);
        for (m, c) in self.terms() {
            if let Some((e, reduced)) = m.partial(var) {
                out.add_term(reduced, c * f64::from(e));
            }
        }
        out
    }

    /// Directional derivative `Σ_j dir_j · ∂/∂x_j`, still symbolic.
    pub fn directional_derivative(&self, dir: &[Complex64]) -> Result<Self> {
        if dir.len() != self.ambient_dim {
            return Err(Error::dims(format!(
                "direction has {} coordinates, polynomial has {} variables",
                dir.len(),
                self.ambient_dim
            )));
        }
        let mut out = Self::zero(self.ambient_dim);
        for (m, c) in self.terms() {
            for (var, &d) in dir.iter().enumerate() {
                if d == Complex64::ZERO {
                    continue;
                }
                if let Some((e, reduced)) = m.partial(var) {
                    out.add_term(reduced, c * f64::from(e) * d);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let mut out = Self::zero(self.ambient_dim);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.ambient_dim);
        for (m, t) in self.terms() {
            out.add_term(m.clone(), t * c);
        }
        out
    }

    /// Same terms viewed in a larger variable space.
    pub fn embed(&self, new_dim: usize) -> Result<Self> {
        if new_dim < self.ambient_dim {
            return Err(Error::dims(format!(
                "cannot embed a {}-variable polynomial into {} variables",
                self.ambient_dim, new_dim
            )));
        }
        Ok(Self { terms: self.terms.clone(), ambient_dim: new_dim })
    }

    /// Multiplies every term by the variable `x_var`.
    pub fn mul_var(&self, var: usize) -> Result<Self> {
        if var >= self.ambient_dim {
            return Err(Error::dims(format!(
                "variable index {var} out of range for {} variables",
                self.ambient_dim
            )));
        }
        let xv = Monomial::var(var);
        let mut out = Self::zero(self.ambient_dim);
        for (m, c) in self.terms() {
            out.add_term(m.mul(&xv), c);
        }
        Ok(out)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::dims(format!(
                "polynomials live in {} and {} variables",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }
}

fn fmt_coeff(c: Complex64, f: &mut fmt::Formatter<'_>, lead: bool) -> fmt::Result {
    // prints "+ 2", "- 3.5", "+ (1+2i)" style pieces
    if c.im == 0.0 {
        let sign = if c.re < 0.0 { "-" } else { "+" };
        if lead {
            if c.re < 0.0 {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        write!(f, "{}", c.re.abs())
    } else {
        if !lead {
            write!(f, " + ")?;
        }
        if c.re == 0.0 {
            write!(f, "({}i)", c.im)
        } else {
            write!(f, "({}{}{}i)", c.re, if c.im < 0.0 { "-" } else { "+" }, c.im.abs())
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // highest terms first
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let lead = i == 0;
            if m.is_unit() {
                fmt_coeff(c, f, lead)?;
            } else if c == Complex64::new(1.0, 0.0) {
                if !lead {
                    write!(f, " + ")?;
                }
                write!(f, "{m}")?;
            } else if c == Complex64::new(-1.0, 0.0) {
                write!(f, "{}{m}", if lead { "-" } else { " - " })?;
            } else {
                fmt_coeff(c, f, lead)?;
                write!(f, "*{m}")?;
            }
        }
        Ok(())
    }
}

/// An ordered list of polynomials sharing one ambient variable space:
/// a polynomial map `C^n_vars → C^n_eqs`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    polys: Vec<Polynomial>,
    n_vars: usize,
}

impl PolySystem {
    pub fn new(n_vars: usize, polys: Vec<Polynomial>) -> Result<Self> {
        for (i, p) in polys.iter().enumerate() {
            if p.ambient_dim() != n_vars {
                return Err(Error::dims(format!(
                    "polynomial {i} has {} variables, system has {n_vars}",
                    p.ambient_dim()
                )));
            }
        }
        Ok(Self { polys, n_vars })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_eqs(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    /// Max degree over the component polynomials.
    pub fn degree(&self) -> u32 {
        self.polys.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    fn check_point(&self, x: &[Complex64]) -> Result<()> {
        if x.len() != self.n_vars {
            return Err(Error::dims(format!(
                "point has {} coordinates, system has {} variables",
                x.len(),
                self.n_vars
            )));
        }
        Ok(())
    }

    /// Evaluates every component at `x`.
    pub fn eval(&self, x: &[Complex64]) -> Result<Array1<Complex64>> {
        self.check_point(x)?;
        let mut out = Array1::zeros(self.n_eqs());
        for (i, p) in self.polys.iter().enumerate() {
            out[i] = p.eval(x)?;
        }
        Ok(out)
    }

    /// Jacobian at `x` from symbolically differentiated terms:
    /// entry `(i, j)` is `∂f_i/∂x_j`.
    pub fn jacobian(&self, x: &[Complex64]) -> Result<Array2<Complex64>> {
        self.check_point(x)?;
        let mut out = Array2::zeros((self.n_eqs(), self.n_vars));
        for (i, p) in self.polys.iter().enumerate() {
            for j in 0..self.n_vars {
                out[(i, j)] = p.partial(j).eval(x)?;
            }
        }
        Ok(out)
    }

    /// The system `x ↦ J(x)·dir`, i.e. the directional derivative of every
    /// component along `dir`. Degree drops by one on every nonconstant
    /// component, and two shifts commute.
    pub fn shift(&self, dir: &[Complex64]) -> Result<PolySystem> {
        self.check_point(dir)?;
        let polys = self
            .polys
            .iter()
            .map(|p| p.directional_derivative(dir))
            .collect::<Result<Vec<_>>>()?;
        PolySystem::new(self.n_vars, polys)
    }

    /// One fully symbolic deflation step: for a border `R` (`n₀×n`) and
    /// right-hand side `d` (length `n₀`), builds the system in `2n`
    /// variables
    ///
    /// ```text
    ///   [ F(x₁)          ]
    ///   [ J(x₁)·x₂       ]        x₁ = (x_1..x_n), x₂ = (x_{n+1}..x_{2n})
    ///   [ R·x₂ − d       ]
    /// ```
    ///
    /// with `2m + n₀` equations. Iterating this realizes every deflation
    /// level symbolically; it is the oracle the block-structured path is
    /// checked against.
    pub fn deflate(
        &self,
        border: &ArrayView2<Complex64>,
        rhs: &ArrayView1<Complex64>,
    ) -> Result<PolySystem> {
        let n = self.n_vars;
        if border.ncols() != n {
            return Err(Error::dims(format!(
                "border has {} columns, system has {n} variables",
                border.ncols()
            )));
        }
        if border.nrows() != rhs.len() {
            return Err(Error::dims(format!(
                "border has {} rows but right-hand side has {} entries",
                border.nrows(),
                rhs.len()
            )));
        }
        let dim = 2 * n;
        let mut polys = Vec::with_capacity(2 * self.n_eqs() + border.nrows());
        for p in &self.polys {
            polys.push(p.embed(dim)?);
        }
        for p in &self.polys {
            let mut row = Polynomial::zero(dim);
            for j in 0..n {
                let dp = p.partial(j).embed(dim)?.mul_var(n + j)?;
                row = row.add(&dp)?;
            }
            polys.push(row);
        }
        for (k, row) in border.outer_iter().enumerate() {
            let mut poly = Polynomial::zero(dim);
            for (j, &c) in row.iter().enumerate() {
                if c != Complex64::ZERO {
                    poly.add_term(Monomial::var(n + j), c);
                }
            }
            poly.add_term(Monomial::unit(), -rhs[k]);
            polys.push(poly);
        }
        PolySystem::new(dim, polys)
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.polys.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}
