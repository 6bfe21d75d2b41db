//! Collocation grid on the periodic channel `T_x x (0, 1)`.
//!
//! Points are `x_i = i / nx` for `i = 0..nx` (periodic) and `y_j = j / ny`
//! for `j = 0..=ny` (walls included). Spectral coefficients are indexed by the
//! Fourier wavenumber `k` (stored in FFT order) and the wall-normal mode `n`,
//! with `ny + 1` slots per `k` for both parities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wall-normal expansion family of a scalar field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    /// `sin(n pi y)`, vanishes on both walls.
    Sine,
    /// `cos(n pi y)`, vanishing normal derivative on both walls.
    Cosine,
}

impl Parity {
    pub fn flipped(self) -> Self {
        match self {
            Parity::Sine => Parity::Cosine,
            Parity::Cosine => Parity::Sine,
        }
    }

    /// Parity of the pointwise product of two fields.
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Cosine
        } else {
            Parity::Sine
        }
    }

    /// Lowest admissible wall-normal mode.
    pub fn first_mode(self) -> usize {
        match self {
            Parity::Sine => 1,
            Parity::Cosine => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        let fail = |reason: &str| {
            Err(Error::InvalidGrid {
                nx,
                ny,
                reason: reason.to_string(),
            })
        };
        if nx < 4 || nx % 2 != 0 {
            return fail("nx must be even and at least 4");
        }
        if ny < 4 {
            return fail("ny must be at least 4");
        }
        if nx > u32::MAX as usize || ny > u32::MAX as usize {
            return fail("dimensions exceed u32");
        }
        Ok(Grid { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of y collocation points (walls included).
    pub fn nyp(&self) -> usize {
        self.ny + 1
    }

    /// Number of stored values, identical in physical and coefficient space.
    pub fn len(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Torus period and channel height are both 1.
    pub fn lx(&self) -> f64 {
        1.0
    }

    pub fn ly(&self) -> f64 {
        1.0
    }

    pub fn measure(&self) -> f64 {
        self.lx() * self.ly()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    /// Signed wavenumber stored at FFT slot `slot`; slot `nx/2` is `-nx/2`.
    #[inline]
    pub fn wavenumber(&self, slot: usize) -> i64 {
        if slot < self.nx / 2 {
            slot as i64
        } else {
            slot as i64 - self.nx as i64
        }
    }

    /// FFT slot holding signed wavenumber `k`.
    pub fn slot(&self, k: i64) -> usize {
        let nx = self.nx as i64;
        debug_assert!(k >= -nx / 2 && k < nx / 2);
        k.rem_euclid(nx) as usize
    }

    /// Smallest mesh spacing.
    pub fn min_spacing(&self) -> f64 {
        (1.0 / self.nx as f64).min(1.0 / self.ny as f64)
    }

    /// Whether mode `(k, n)` survives 2/3-rule truncation.
    #[inline]
    pub fn is_resolved(&self, k: i64, n: usize) -> bool {
        (3 * k.unsigned_abs() as usize) < self.nx && 3 * n < 2 * self.ny
    }

    /// Whether `(k, n)` is an unresolvable Nyquist slot (x or y).
    #[inline]
    pub fn is_nyquist(&self, k: i64, n: usize) -> bool {
        k == -(self.nx as i64) / 2 || n == self.ny
    }

    /// Physical wavevector `(2 pi k, n pi)` of a mode.
    #[inline]
    pub fn wavevector(&self, k: i64, n: usize) -> (f64, f64) {
        (
            2.0 * std::f64::consts::PI * k as f64,
            std::f64::consts::PI * n as f64,
        )
    }

    /// Quadrature weight of mesh point `(i, j)`: rectangle in x, trapezoid in y.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        let w = 1.0 / (self.nx as f64 * self.ny as f64);
        if j == 0 || j == self.ny {
            0.5 * w
        } else {
            w
        }
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.nx, self.ny)
    }
}
