//! Text grammar for human-entered polynomial systems.
//!
//! One polynomial per line; blank lines and `#` comments are skipped.
//! Variables are written `x1..xn` (1-based). A polynomial is a signed sum
//! of terms; a term is a product of factors, `*` optional between them:
//!
//! ```text
//! poly    :=  [sign] term { sign term }
//! term    :=  factor { ["*"] factor }           (at least one factor)
//! factor  :=  number ["i"] | "i" | "(" complex ")" | var
//! var     :=  "x" digits [ "^" digits ]
//! complex :=  [sign] number ["i"] [ sign number ["i"] ]    e.g. (1+2i)
//! number  :=  digits ["." digits] | "." digits
//! ```
//!
//! Examples: `x2^2 - x1^3`, `2x1*x2 + (1-2i)x3 - 0.5`, `3i*x1^4`.

use num_complex::Complex64;

use super::{Monomial, PolySystem, Polynomial};
use crate::error::{Error, Result};

/// Parses a whole system; the variable count is the largest index used.
pub fn parse_system(text: &str) -> Result<PolySystem> {
    parse_system_with_dim(text, 0)
}

/// Parses a whole system with at least `min_vars` variables (useful when a
/// trailing variable never appears explicitly).
pub fn parse_system_with_dim(text: &str, min_vars: usize) -> Result<PolySystem> {
    let mut raws = Vec::new();
    let mut n_vars = min_vars;
    for (lineno, line) in text.lines().enumerate() {
        let stripped = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        if stripped.trim().is_empty() {
            continue;
        }
        let raw = RawPoly::parse(stripped).map_err(|e| {
            Error::Parse(format!("line {}: {e}", lineno + 1))
        })?;
        n_vars = n_vars.max(raw.max_var.map_or(0, |v| v + 1));
        raws.push(raw);
    }
    if raws.is_empty() {
        return Err(Error::Parse("no polynomials found".into()));
    }
    let polys = raws
        .into_iter()
        .map(|r| Polynomial::from_terms(n_vars, r.terms))
        .collect::<Result<Vec<_>>>()?;
    PolySystem::new(n_vars, polys)
}

/// Parses a single polynomial in a space of (at least) `min_vars` variables.
pub fn parse_polynomial(line: &str, min_vars: usize) -> Result<Polynomial> {
    let raw = RawPoly::parse(line).map_err(Error::Parse)?;
    let dim = min_vars.max(raw.max_var.map_or(0, |v| v + 1));
    Polynomial::from_terms(dim, raw.terms)
}

/// Parses a point written as comma- or whitespace-separated complex scalars,
/// optionally wrapped in `(...)` or `[...]`: `"1, 0.5-2i, 3i"`.
pub fn parse_point(text: &str) -> Result<Vec<Complex64>> {
    let t = text.trim();
    let t = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .or_else(|| t.strip_prefix('[').and_then(|s| s.strip_suffix(']')))
        .unwrap_or(t);
    let parts: Vec<&str> = if t.contains(',') {
        t.split(',').collect()
    } else {
        t.split_whitespace().collect()
    };
    let mut out = Vec::new();
    for part in parts {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::Parse("empty coordinate in point".into()));
        }
        out.push(parse_complex_scalar(part)?);
    }
    if out.is_empty() {
        return Err(Error::Parse("empty point".into()));
    }
    Ok(out)
}

/// Parses one complex scalar: `2`, `-1.5`, `3i`, `1+2i`, `-0.5-i`.
pub fn parse_complex_scalar(text: &str) -> Result<Complex64> {
    let mut s = Scanner::new(text);
    let v = s.complex_body().map_err(Error::Parse)?;
    s.skip_ws();
    if !s.at_end() {
        return Err(Error::Parse(format!(
            "unexpected `{}` after complex number in `{text}`",
            s.rest()
        )));
    }
    Ok(v)
}

struct RawPoly {
    terms: Vec<(Monomial, Complex64)>,
    max_var: Option<usize>,
}

impl RawPoly {
    fn parse(line: &str) -> std::result::Result<Self, String> {
        let mut s = Scanner::new(line);
        let mut terms = Vec::new();
        let mut max_var = None;
        s.skip_ws();
        let mut sign = s.take_sign().unwrap_or(1.0);
        loop {
            let (coeff, mono, mv) = s.term()?;
            if let Some(v) = mv {
                max_var = max_var.max(Some(v));
            }
            terms.push((mono, coeff * sign));
            s.skip_ws();
            if s.at_end() {
                break;
            }
            sign = s
                .take_sign()
                .ok_or_else(|| format!("expected `+` or `-` at column {}", s.col()))?;
        }
        Ok(RawPoly { terms, max_var })
    }
}

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().collect(), pos: 0, text }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn rest(&self) -> String {
        self.chars[self.pos..].iter().collect()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn take_sign(&mut self) -> Option<f64> {
        self.skip_ws();
        match self.peek() {
            Some('+') => {
                self.pos += 1;
                Some(1.0)
            }
            Some('-') => {
                self.pos += 1;
                Some(-1.0)
            }
            _ => None,
        }
    }

    /// One term: product of factors. Returns (coefficient, monomial, max var).
    #[allow(clippy::type_complexity)]
    fn term(&mut self) -> std::result::Result<(Complex64, Monomial, Option<usize>), String> {
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut mono = Monomial::unit();
        let mut max_var: Option<usize> = None;
        let mut any = false;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('x') => {
                    let (var, exp) = self.var_power()?;
                    mono = mono.mul(&Monomial::from_pairs([(var, exp)]));
                    max_var = max_var.max(Some(var));
                    any = true;
                }
                Some('i') => {
                    self.pos += 1;
                    coeff *= Complex64::new(0.0, 1.0);
                    any = true;
                }
                Some('(') => {
                    self.pos += 1;
                    let c = self.complex_body()?;
                    self.skip_ws();
                    if self.bump() != Some(')') {
                        return Err(format!("missing `)` at column {}", self.col()));
                    }
                    coeff *= c;
                    any = true;
                }
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    let n = self.number()?;
                    if self.peek() == Some('i') {
                        self.pos += 1;
                        coeff *= Complex64::new(0.0, n);
                    } else {
                        coeff *= Complex64::new(n, 0.0);
                    }
                    any = true;
                }
                Some('*') => {
                    if !any {
                        return Err(format!("unexpected `*` at column {}", self.col()));
                    }
                    self.pos += 1;
                    continue;
                }
                _ => break,
            }
        }
        if !any {
            return Err(format!(
                "expected a term at column {} (got `{}`)",
                self.col(),
                self.rest()
            ));
        }
        Ok((coeff, mono, max_var))
    }

    /// `x<digits>[^<digits>]`, 1-based in text, 0-based out.
    fn var_power(&mut self) -> std::result::Result<(usize, u32), String> {
        debug_assert_eq!(self.peek(), Some('x'));
        self.pos += 1;
        let idx: usize = self
            .digits()?
            .parse()
            .map_err(|_| format!("bad variable index at column {}", self.col()))?;
        if idx == 0 {
            return Err("variables are numbered from x1".into());
        }
        let mut exp = 1u32;
        if self.peek() == Some('^') {
            self.pos += 1;
            exp = self
                .digits()?
                .parse()
                .map_err(|_| format!("bad exponent at column {}", self.col()))?;
        }
        Ok((idx - 1, exp))
    }

    fn digits(&mut self) -> std::result::Result<String, String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(format!("expected digits at column {}", self.col()));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn number(&mut self) -> std::result::Result<f64, String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.pos == start || (self.pos == start + 1 && self.chars[start] == '.') {
            return Err(format!("expected a number at column {}", self.col()));
        }
        let lit: String = self.chars[start..self.pos].iter().collect();
        lit.parse()
            .map_err(|_| format!("bad number `{lit}` at column {}", start + 1))
    }

    /// `[sign] part [sign part]` where part = number["i"] | "i".
    fn complex_body(&mut self) -> std::result::Result<Complex64, String> {
        let mut total = Complex64::ZERO;
        let mut first = true;
        loop {
            self.skip_ws();
            let sign = self.take_sign().unwrap_or(1.0);
            self.skip_ws();
            let part = if self.peek() == Some('i') {
                self.pos += 1;
                Complex64::new(0.0, sign)
            } else {
                let n = self.number()?;
                if self.peek() == Some('i') {
                    self.pos += 1;
                    Complex64::new(0.0, sign * n)
                } else {
                    Complex64::new(sign * n, 0.0)
                }
            };
            total += part;
            first = false;
            self.skip_ws();
            match self.peek() {
                Some('+') | Some('-') => continue,
                _ => break,
            }
        }
        debug_assert!(!first);
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_cusp_line() {
        let sys = parse_system("x2^2 - x1^3").unwrap();
        assert_eq!(sys.n_vars(), 2);
        assert_eq!(sys.n_eqs(), 1);
        assert_eq!(sys.degree(), 3);
        let v = sys.eval(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(v[0], c(0.0, 0.0));
    }

    #[test]
    fn star_is_optional_and_coefficients_multiply() {
        let a = parse_polynomial("2x1*x2", 0).unwrap();
        let b = parse_polynomial("2*x1x2", 0).unwrap();
        assert_eq!(a, b);
        let p = parse_polynomial("2*3x1", 0).unwrap();
        assert_eq!(p.eval(&[c(1.0, 0.0)]).unwrap(), c(6.0, 0.0));
    }

    #[test]
    fn complex_coefficients() {
        let p = parse_polynomial("(1+2i)x1 - 3i", 0).unwrap();
        assert_eq!(p.eval(&[c(1.0, 0.0)]).unwrap(), c(1.0, -1.0));
        let q = parse_polynomial("i*x1", 0).unwrap();
        assert_eq!(q.eval(&[c(2.0, 0.0)]).unwrap(), c(0.0, 2.0));
    }

    #[test]
    fn comments_and_blank_lines() {
        let sys = parse_system("# a comment\n\nx1 + x2 # trailing\nx1^2\n").unwrap();
        assert_eq!(sys.n_eqs(), 2);
        assert_eq!(sys.n_vars(), 2);
    }

    #[test]
    fn rejects_x0_and_garbage() {
        assert!(parse_polynomial("x0", 0).is_err());
        assert!(parse_polynomial("2 +", 0).is_err());
        assert!(parse_polynomial("x1^", 0).is_err());
        assert!(parse_polynomial("(1+2i", 0).is_err());
        assert!(parse_system("").is_err());
    }

    #[test]
    fn parses_points() {
        let p = parse_point("(1, 0.5-2i, 3i)").unwrap();
        assert_eq!(p, vec![c(1.0, 0.0), c(0.5, -2.0), c(0.0, 3.0)]);
        let q = parse_point("1 2 3").unwrap();
        assert_eq!(q.len(), 3);
        assert!(parse_point("").is_err());
        assert!(parse_point("1,,2").is_err());
    }

    #[test]
    fn scalar_round_trip() {
        for s in ["2", "-1.5", "3i", "1+2i", "-0.5-i", "0"] {
            parse_complex_scalar(s).unwrap();
        }
        assert_eq!(parse_complex_scalar("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex_scalar("-0.5-i").unwrap(), c(-0.5, -1.0));
        assert!(parse_complex_scalar("1+2i junk").is_err());
    }
}
