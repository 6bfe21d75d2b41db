//! Empirical checks of the functional inequalities used in the estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Parity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Inequality {
    /// `||f|| <= C ||grad f||` for `f` vanishing on the walls.
    Poincare,
    /// `||f||_4^2 <= C ||f|| ||grad f||` for `f` vanishing on the walls.
    Ladyzhenskaya,
    /// `||f||_inf^2 <= C ||f|| ||Lap f||` for `f` vanishing on the walls.
    Agmon,
}

impl Inequality {
    /// Constant the discrete check is held to, when one is asserted.
    pub fn constant(self) -> Option<f64> {
        match self {
            Inequality::Poincare => Some(1.0),
            Inequality::Ladyzhenskaya => Some(LADYZHENSKAYA_BOUND),
            Inequality::Agmon => None,
        }
    }
}

/// Safe upper bound for the Ladyzhenskaya constant on the unit channel.
pub const LADYZHENSKAYA_BOUND: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub which: Inequality,
    pub lhs: f64,
    /// Right side without the constant.
    pub rhs: f64,
    pub constant_used: Option<f64>,
    /// `lhs / rhs`, a lower bound for any admissible constant; 0 when both vanish.
    pub ratio: f64,
}

impl InequalityReport {
    pub fn holds(&self) -> bool {
        match self.constant_used {
            Some(c) => self.ratio <= c * (1.0 + 1e-10),
            None => true,
        }
    }
}

/// Evaluates both sides of `which` on `f`, which must vanish on the walls
/// (sine expansion in `y`).
pub fn inequality_audit(f: &RealField, which: Inequality) -> Result<InequalityReport> {
    let g = *f.grid();
    let ny = g.ny();
    // wall values beyond roundoff cannot come from a sine expansion
    let tol = 1e-12 * f.max_abs();
    if (0..g.nx()).any(|i| f.get(i, 0).abs() > tol || f.get(i, ny).abs() > tol) {
        return Err(Error::ParityMismatch {
            expected: Parity::Sine,
            found: Parity::Cosine,
        });
    }
    let spec = f.to_spectral(Parity::Sine)?;
    let l2 = spec.sobolev_norm(0)?;
    let (lhs, rhs) = match which {
        Inequality::Poincare => (l2, spec.sobolev_norm(1)?),
        Inequality::Ladyzhenskaya => (f.norm_lp(4.0)?.powi(2), l2 * spec.sobolev_norm(1)?),
        Inequality::Agmon => (f.max_abs().powi(2), l2 * spec.sobolev_norm(2)?),
    };
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(InequalityReport {
        which,
        lhs,
        rhs,
        constant_used: which.constant(),
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn poincare_on_first_sine_mode() {
        let g = Grid::new(16, 64).unwrap();
        let f = RealField::from_fn(g, |_, y| (PI * y).sin());
        let r = inequality_audit(&f, Inequality::Poincare).unwrap();
        assert!((r.ratio - 1.0 / PI).abs() < 1e-12);
        assert!(r.holds());
    }

    #[test]
    fn zero_field_has_zero_ratios() {
        let g = Grid::new(8, 8).unwrap();
        let f = RealField::zeros(g);
        for which in [Inequality::Poincare, Inequality::Ladyzhenskaya, Inequality::Agmon] {
            let r = inequality_audit(&f, which).unwrap();
            assert_eq!(r.ratio, 0.0);
        }
    }

    #[test]
    fn wall_values_are_rejected() {
        let g = Grid::new(8, 8).unwrap();
        let f = RealField::from_fn(g, |_, y| (PI * y).cos());
        assert!(inequality_audit(&f, Inequality::Poincare).is_err());
    }

    #[test]
    fn ladyzhenskaya_ratio_stays_below_two() {
        let g = Grid::new(64, 32).unwrap();
        let mut worst: f64 = 0.0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, f64, f64, f64)> = (0..12)
                .map(|_| {
                    (
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0..6) as f64,
                        rng.random_range(1..8) as f64,
                        rng.random_range(0.0..1.0),
                    )
                })
                .collect();
            let f = RealField::from_fn(g, |x, y| {
                modes
                    .iter()
                    .map(|&(a, k, n, ph)| a * (2.0 * PI * (k * x + ph)).cos() * (n * PI * y).sin())
                    .sum()
            });
            let r = inequality_audit(&f, Inequality::Ladyzhenskaya).unwrap();
            assert!(r.holds(), "seed {seed}: {}", r.ratio);
            assert!(inequality_audit(&f, Inequality::Poincare).unwrap().holds());
            worst = worst.max(r.ratio);
        }
        assert!(worst > 0.0 && worst <= LADYZHENSKAYA_BOUND);
    }
}
