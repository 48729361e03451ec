//! Closed-form feedback equilibrium of the scalar two-player, three-state game
//! `x' = x + u1 + u2` with stage costs `½(Q1 x² + u1²)`, `½(Q2 x² + 2 u2²)`
//! and terminal costs `½ Qi x²`. Hand-coded and independent of the general
//! solver, so it can serve as a test oracle.

use crate::error::{GameError, Result};

/// Last-stage gains `[P1, P2]`: `[2 Q1, Q2] / (2 + 2 Q1 + Q2)`.
pub fn prop1_last_gains(q1: f64, q2: f64) -> [f64; 2] {
    let s = 2.0 + 2.0 * q1 + q2;
    [2.0 * q1 / s, q2 / s]
}

/// Value weights `(Z1, Z2)` one stage before the end.
pub fn prop1_values(q1: f64, q2: f64) -> (f64, f64) {
    let s = 2.0 + 2.0 * q1 + q2;
    let s2 = s * s;
    (q1 + 4.0 * (q1 + q1 * q1) / s2, q2 + (4.0 * q2 + 2.0 * q2 * q2) / s2)
}

/// Equilibrium states `(x2, x3)` from `x1`.
pub fn prop1_oracle(q1: f64, q2: f64, x1: f64) -> Result<(f64, f64)> {
    if !(q1 > 0.0 && q2 > 0.0) || !q1.is_finite() || !q2.is_finite() {
        return Err(GameError::Domain(format!("state weights must be positive, got ({q1}, {q2})")));
    }
    if !x1.is_finite() {
        return Err(GameError::Domain(format!("initial state must be finite, got {x1}")));
    }
    let (z1, z2) = prop1_values(q1, q2);
    let x2 = 2.0 * x1 / (2.0 + 2.0 * z1 + z2);
    let x3 = 2.0 * x2 / (2.0 + 2.0 * q1 + q2);
    Ok((x2, x3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weights() {
        let (x2, x3) = prop1_oracle(1.0, 1.0, 1.0).unwrap();
        assert!((x2 - 2.0 / 5.88).abs() < 1e-15);
        assert!((x3 - 0.4 * 2.0 / 5.88).abs() < 1e-15);
        assert_eq!(prop1_last_gains(1.0, 1.0), [0.4, 0.2]);
    }

    #[test]
    fn second_minimum_coincides() {
        for x1 in [-3.0, 0.5, 7.0] {
            let a = prop1_oracle(1.0, 1.0, x1).unwrap();
            let b = prop1_oracle(0.5, 2.0, x1).unwrap();
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn manifold_is_not_sufficient() {
        let a = prop1_oracle(1.0, 1.0, 1.0).unwrap();
        let c = prop1_oracle(0.75, 1.5, 1.0).unwrap();
        assert!((a.0 - c.0).abs() > 1e-6);
    }

    #[test]
    fn zero_state_and_bad_weights() {
        assert_eq!(prop1_oracle(2.0, 3.0, 0.0).unwrap(), (0.0, 0.0));
        assert!(matches!(prop1_oracle(0.0, 1.0, 1.0), Err(GameError::Domain(_))));
        assert!(matches!(prop1_oracle(1.0, -1.0, 1.0), Err(GameError::Domain(_))));
    }
}
