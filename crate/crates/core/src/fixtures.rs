//! Small standard systems used by the CLI `examples` command and the tests.

use num_complex::Complex64;

use crate::polysys::{parse_system_with_dim, PolySystem};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The cuspidal cubic curve `x2² − x1³ = 0` in two variables.
pub fn cusp() -> PolySystem {
    parse_system_with_dim("x2^2 - x1^3", 2).expect("cusp fixture parses")
}

/// Canonical cusp test points: the cusp itself and a smooth curve point.
pub fn cusp_points() -> Vec<(String, Vec<Complex64>)> {
    vec![
        ("(0, 0)".into(), vec![re(0.0), re(0.0)]),
        ("(1, 1)".into(), vec![re(1.0), re(1.0)]),
    ]
}

/// The Whitney umbrella surface `x1² − x2²·x3 = 0` in three variables.
pub fn whitney() -> PolySystem {
    parse_system_with_dim("x1^2 - x2^2*x3", 3).expect("whitney fixture parses")
}

/// Canonical Whitney test points: a smooth surface point, the pinch line,
/// and the origin.
pub fn whitney_points() -> Vec<(String, Vec<Complex64>)> {
    vec![
        ("(2, 2, 1)".into(), vec![re(2.0), re(2.0), re(1.0)]),
        ("(0, 0, 1)".into(), vec![re(0.0), re(0.0), re(1.0)]),
        ("(0, 0, 0)".into(), vec![re(0.0), re(0.0), re(0.0)]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_vanish_at_their_points() {
        let cusp = cusp();
        for (_, pt) in cusp_points() {
            let v = cusp.eval(&pt).unwrap();
            assert_eq!(v[0], Complex64::ZERO);
        }
        let wh = whitney();
        for (_, pt) in whitney_points() {
            let v = wh.eval(&pt).unwrap();
            assert_eq!(v[0], Complex64::ZERO);
        }
    }
}
