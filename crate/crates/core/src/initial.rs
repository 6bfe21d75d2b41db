//! Initial data presets.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{leray_project, State};
use crate::error::{Error, Result};
use crate::field::{RealField, SpectralField};
use crate::grid::{Grid, Parity};

/// Spectral width of the random-smooth preset.
pub const RANDOM_SIGMA: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPreset {
    /// `u = 0`, `theta = 0`.
    Conduction,
    /// Divergence-free `(1, 1)` velocity mode with `||u|| = amplitude`, and
    /// `theta = theta_amplitude sin(pi y)`.
    SingleMode,
    /// Seeded Gaussian coefficients with spectrum `exp(-(k^2 + n^2) / 2 sigma^2)`;
    /// `||u|| = amplitude` after projection, `max |theta| = theta_amplitude`.
    RandomSmooth,
    /// Velocity as in `RandomSmooth`, `theta = theta_amplitude sin(pi y)`.
    RandomVelocity,
    /// `u = 0`, `theta = theta_amplitude (sin(pi y) + 0.1 cos(2 pi x) sin(2 pi y))`,
    /// leaving `[-1, 1]` when `theta_amplitude > 1`.
    Overshoot,
}

impl InitialPreset {
    pub const ALL: [InitialPreset; 5] = [
        InitialPreset::Conduction,
        InitialPreset::SingleMode,
        InitialPreset::RandomSmooth,
        InitialPreset::RandomVelocity,
        InitialPreset::Overshoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitialPreset::Conduction => "conduction",
            InitialPreset::SingleMode => "single-mode",
            InitialPreset::RandomSmooth => "random-smooth",
            InitialPreset::RandomVelocity => "random-velocity",
            InitialPreset::Overshoot => "overshoot",
        }
    }
}

impl FromStr for InitialPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitialPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown initial preset `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub preset: InitialPreset,
    pub amplitude: f64,
    pub theta_amplitude: f64,
    pub seed: u64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            preset: InitialPreset::Conduction,
            amplitude: 0.0,
            theta_amplitude: 0.0,
            seed: 0,
        }
    }
}

impl InitialSpec {
    pub fn build(&self, grid: Grid) -> Result<State> {
        if !(self.amplitude.is_finite() && self.theta_amplitude.is_finite()) {
            return Err(Error::InvalidArgument("initial amplitudes must be finite".into()));
        }
        match self.preset {
            InitialPreset::Conduction => Ok(State::conduction(grid)),
            InitialPreset::SingleMode => single_mode(grid, self.amplitude, self.theta_amplitude),
            InitialPreset::RandomSmooth => {
                random_smooth(grid, self.amplitude, self.theta_amplitude, self.seed)
            }
            InitialPreset::RandomVelocity => {
                random_velocity(grid, self.amplitude, self.theta_amplitude, self.seed)
            }
            InitialPreset::Overshoot => overshoot(grid, self.theta_amplitude),
        }
    }
}

fn sample(grid: Grid, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Result<SpectralField> {
    Ok(RealField::from_fn(grid, f).to_spectral(parity)?.dealiased())
}

pub fn single_mode(grid: Grid, a: f64, b: f64) -> Result<State> {
    // stream function sin(2 pi x) sin(pi y); ||u||^2 = (4 pi^2 + pi^2) / 4
    let scale = a / (5.0 * PI * PI / 4.0).sqrt();
    let u1 = sample(grid, Parity::Cosine, |x, y| {
        scale * PI * (2.0 * PI * x).sin() * (PI * y).cos()
    })?;
    let u2 = sample(grid, Parity::Sine, |x, y| {
        -scale * 2.0 * PI * (2.0 * PI * x).cos() * (PI * y).sin()
    })?;
    let theta = sample(grid, Parity::Sine, |_, y| b * (PI * y).sin())?;
    State::new(u1, u2, theta, 0.0)
}

fn random_field(grid: Grid, parity: Parity, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(grid, parity);
    let kmax = grid.nx() as i64 / 2;
    for k in 0..kmax {
        for n in parity.first_mode()..grid.ny() {
            if !grid.is_resolved(k, n) {
                continue;
            }
            let shape = (-((k * k) as f64 + (n * n) as f64) / (2.0 * RANDOM_SIGMA * RANDOM_SIGMA)).exp();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            // set_mode fills the conjugate partner and keeps k = 0 real
            f.set_mode(k, n, Complex64::new(re, im) * shape);
        }
    }
    f
}

pub fn random_smooth(grid: Grid, a: f64, b: f64, seed: u64) -> Result<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r1 = random_field(grid, Parity::Cosine, &mut rng);
    let r2 = random_field(grid, Parity::Sine, &mut rng);
    let (u1, u2) = leray_project(&r1, &r2)?;
    let norm = (u1.weighted_energy(0) + u2.weighted_energy(0)).sqrt();
    let s = if norm > 0.0 { a / norm } else { 0.0 };
    let theta = random_field(grid, Parity::Sine, &mut rng);
    let peak = theta.to_physical()?.max_abs();
    let t = if peak > 0.0 { b / peak } else { 0.0 };
    State::new(u1.scale(s), u2.scale(s), theta.scale(t), 0.0)
}

pub fn random_velocity(grid: Grid, a: f64, b: f64, seed: u64) -> Result<State> {
    let s = random_smooth(grid, a, 0.0, seed)?;
    let theta = sample(grid, Parity::Sine, |_, y| b * (PI * y).sin())?;
    State::new(s.u1, s.u2, theta, 0.0)
}

pub fn overshoot(grid: Grid, amplitude: f64) -> Result<State> {
    let theta = sample(grid, Parity::Sine, |x, y| {
        amplitude * ((PI * y).sin() + 0.1 * (2.0 * PI * x).cos() * (2.0 * PI * y).sin())
    })?;
    State::new(
        SpectralField::zeros(grid, Parity::Cosine),
        SpectralField::zeros(grid, Parity::Sine),
        theta,
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in InitialPreset::ALL {
            assert_eq!(p.name().parse::<InitialPreset>().unwrap(), p);
        }
        assert!("bogus".parse::<InitialPreset>().is_err());
    }

    #[test]
    fn single_mode_has_requested_norm() {
        let g = Grid::new(32, 32).unwrap();
        let s = single_mode(g, 0.7, 0.5).unwrap();
        assert!((s.velocity_norm() - 0.7).abs() < 1e-12);
        assert!(s.divergence_residual() < 1e-13);
        assert!((s.theta.to_physical().unwrap().max_abs() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_smooth_is_reproducible_and_normalized() {
        let g = Grid::new(32, 16).unwrap();
        let a = random_smooth(g, 2.0, 0.9, 7).unwrap();
        let b = random_smooth(g, 2.0, 0.9, 7).unwrap();
        let c = random_smooth(g, 2.0, 0.9, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.velocity_norm() - 2.0).abs() < 1e-12);
        assert!(a.divergence_residual() < 1e-13);
        assert_eq!(a.mean_u1(), 0.0);
        let peak = a.theta.to_physical().unwrap().max_abs();
        assert!((peak - 0.9).abs() < 1e-12);
        // the mesh values are real-valued fields
        let back = a.u1.to_physical().unwrap().to_spectral(Parity::Cosine).unwrap();
        assert!(back.max_abs_diff(&a.u1) < 1e-13);
    }

    #[test]
    fn random_velocity_touches_the_bound() {
        let g = Grid::new(32, 16).unwrap();
        let s = random_velocity(g, 0.1, 1.0, 5).unwrap();
        assert_eq!(s.u1, random_smooth(g, 0.1, 0.0, 5).unwrap().u1);
        let peak = s.theta.to_physical().unwrap().max_abs();
        assert!((peak - 1.0).abs() < 1e-14);
    }

    #[test]
    fn overshoot_leaves_unit_interval() {
        let g = Grid::new(32, 32).unwrap();
        let s = overshoot(g, 3.0).unwrap();
        assert!(s.theta.to_physical().unwrap().max_abs() > 2.9);
        assert_eq!(s.velocity_norm(), 0.0);
    }
}
