//! Scalar fields on the channel in collocation and coefficient space.
//!
//! A [`SpectralField`] stores the expansion
//! `f(x, y) = sum_k sum_n c[k, n] exp(2 pi i k x) phi_n(y)` with
//! `phi_n = cos(n pi y)` or `sin(n pi y)` depending on the parity. Real-valued
//! fields have Hermitian coefficients in `k`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Parity};
use crate::transform::plans;

#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    parity: Parity,
    coeffs: Vec<Complex64>,
}

fn check_finite(grid: &Grid, values: impl Iterator<Item = f64>) -> Result<()> {
    for (index, value) in values.enumerate() {
        if !value.is_finite() {
            let nyp = grid.nyp();
            return Err(Error::NonFinite {
                index,
                ix: index / nyp,
                iy: index % nyp,
                value,
            });
        }
    }
    Ok(())
}

fn check_finite_coeffs(grid: &Grid, coeffs: &[Complex64]) -> Result<()> {
    match coeffs
        .iter()
        .position(|c| !(c.re.is_finite() && c.im.is_finite()))
    {
        None => Ok(()),
        Some(index) => {
            let c = coeffs[index];
            Err(Error::NonFinite {
                index,
                ix: index / grid.nyp(),
                iy: index % grid.nyp(),
                value: if c.re.is_finite() { c.im } else { c.re },
            })
        }
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        RealField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for grid {grid}, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(RealField { grid, values })
    }

    /// Samples `f(x, y)` on the mesh.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.nyp() {
                values.push(f(x, grid.y(j)));
            }
        }
        RealField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        same_grid(&self.grid, &other.grid)?;
        Ok(RealField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_spectral(&self, parity: Parity) -> Result<SpectralField> {
        check_finite(&self.grid, self.values.iter().copied())?;
        Ok(self.to_spectral_unchecked(parity))
    }

    pub(crate) fn to_spectral_unchecked(&self, parity: Parity) -> SpectralField {
        let mut coeffs = vec![Complex64::default(); self.grid.len()];
        plans(&self.grid).analysis(&self.values, parity, &mut coeffs);
        SpectralField {
            grid: self.grid,
            parity,
            coeffs,
        }
    }

    /// Quadrature of `(int |f|^p)^(1/p)`; `p = f64::INFINITY` is the mesh max.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "L^p norm needs p >= 1, got {p}"
            )));
        }
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        let nyp = self.grid.nyp();
        let mut sum = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let a = v.abs();
            let term = if p == 2.0 { a * a } else { a.powf(p) };
            sum += self.grid.weight(idx % nyp) * term;
        }
        Ok(if p == 2.0 { sum.sqrt() } else { sum.powf(1.0 / p) })
    }

    /// Quadrature of `int f g`.
    pub fn inner_product(&self, other: &RealField) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self.weighted_sum(other))
    }

    pub(crate) fn weighted_sum(&self, other: &RealField) -> f64 {
        let nyp = self.grid.nyp();
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(idx, (a, b))| self.grid.weight(idx % nyp) * a * b)
            .sum()
    }

    /// Quadrature of `int f`.
    pub fn integral(&self) -> f64 {
        let nyp = self.grid.nyp();
        self.values
            .iter()
            .enumerate()
            .map(|(idx, v)| self.grid.weight(idx % nyp) * v)
            .sum()
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid, parity: Parity) -> Self {
        SpectralField {
            grid,
            parity,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Builds a field from coefficients in the internal (FFT-order, k-major)
    /// layout. Slots that the parity cannot represent must be zero.
    pub fn from_coeffs(grid: Grid, parity: Parity, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients for grid {grid}, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        check_finite_coeffs(&grid, &coeffs)?;
        let mut f = SpectralField {
            grid,
            parity,
            coeffs,
        };
        if parity == Parity::Sine {
            for slot in 0..grid.nx() {
                let base = slot * grid.nyp();
                if f.coeffs[base] != Complex64::default()
                    || f.coeffs[base + grid.ny()] != Complex64::default()
                {
                    return Err(Error::InvalidArgument(
                        "sine field has nonzero n = 0 or n = ny coefficient".into(),
                    ));
                }
            }
        }
        f.coeffs.shrink_to_fit();
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of signed wavenumber `k` and wall-normal mode `n`.
    pub fn get(&self, k: i64, n: usize) -> Complex64 {
        self.coeffs[self.grid.index(self.grid.slot(k), n)]
    }

    /// Sets mode `(k, n)` and its Hermitian partner `(-k, n)`.
    pub fn set_mode(&mut self, k: i64, n: usize, value: Complex64) {
        let g = self.grid;
        if self.parity == Parity::Sine && (n == 0 || n == g.ny()) {
            return;
        }
        let nx = g.nx() as i64;
        if k == 0 || k == -nx / 2 {
            self.coeffs[g.index(g.slot(k), n)] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[g.index(g.slot(k), n)] = value;
            self.coeffs[g.index(g.slot(-k), n)] = value.conj();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn to_physical(&self) -> Result<RealField> {
        check_finite_coeffs(&self.grid, &self.coeffs)?;
        Ok(self.to_physical_unchecked())
    }

    pub(crate) fn to_physical_unchecked(&self) -> RealField {
        let mut values = vec![0.0; self.grid.len()];
        plans(&self.grid).synthesis(&self.coeffs, self.parity, &mut values);
        RealField {
            grid: self.grid,
            values,
        }
    }

    fn map_modes(&self, parity: Parity, f: impl Fn(i64, usize, Complex64) -> Complex64) -> SpectralField {
        let g = self.grid;
        let nyp = g.nyp();
        let mut coeffs = vec![Complex64::default(); g.len()];
        for slot in 0..g.nx() {
            let k = g.wavenumber(slot);
            for n in 0..nyp {
                let idx = slot * nyp + n;
                coeffs[idx] = f(k, n, self.coeffs[idx]);
            }
        }
        SpectralField {
            grid: g,
            parity,
            coeffs,
        }
    }

    /// `d/dx`: multiplies mode `k` by `2 pi i k`; the x-Nyquist slot is zeroed.
    pub fn ddx(&self) -> SpectralField {
        let g = self.grid;
        self.map_modes(self.parity, |k, n, c| {
            if k == -(g.nx() as i64) / 2 {
                return Complex64::default();
            }
            let (kx, _) = g.wavevector(k, n);
            times_i(c, kx)
        })
    }

    /// `d/dy`: sine mode `n` becomes cosine mode `n` times `n pi`, cosine mode
    /// `n` becomes sine mode `n` times `-n pi`. The unrepresentable `n = ny`
    /// sine slot stays empty.
    pub fn ddy(&self) -> SpectralField {
        let g = self.grid;
        let parity = self.parity;
        self.map_modes(parity.flipped(), |k, n, c| {
            let (_, ky) = g.wavevector(k, n);
            ddy_mode(parity, n, g.ny(), c, ky)
        })
    }

    /// Spectral Laplacian; equal, bit for bit, to `ddx(ddx(f)) + ddy(ddy(f))`.
    pub fn laplacian(&self) -> SpectralField {
        let g = self.grid;
        let parity = self.parity;
        self.map_modes(parity, |k, n, c| {
            let (kx, ky) = g.wavevector(k, n);
            let dxx = if k == -(g.nx() as i64) / 2 {
                Complex64::default()
            } else {
                times_i(times_i(c, kx), kx)
            };
            let dy = ddy_mode(parity, n, g.ny(), c, ky);
            let dyy = ddy_mode(parity.flipped(), n, g.ny(), dy, ky);
            dxx + dyy
        })
    }

    /// Zeroes every mode outside the 2/3-rule band.
    pub fn dealias(&mut self) {
        let g = self.grid;
        let nyp = g.nyp();
        for slot in 0..g.nx() {
            let k = g.wavenumber(slot);
            for n in 0..nyp {
                if !g.is_resolved(k, n) {
                    self.coeffs[slot * nyp + n] = Complex64::default();
                }
            }
        }
    }

    pub fn dealiased(mut self) -> SpectralField {
        self.dealias();
        self
    }

    /// Sum over modes of `w_n |c|^2 |K|^(2s)`, with `w_0 = 1` for cosine and
    /// `w_n = 1/2` otherwise; `|K|^2 = (2 pi k)^2 + (n pi)^2`.
    pub(crate) fn weighted_energy(&self, s: u32) -> f64 {
        let g = self.grid;
        let nyp = g.nyp();
        let mut sum = 0.0;
        for slot in 0..g.nx() {
            let k = g.wavenumber(slot);
            for n in 0..nyp {
                let c = self.coeffs[slot * nyp + n];
                let a = c.norm_sqr();
                if a == 0.0 {
                    continue;
                }
                let w = if n == 0 { 1.0 } else { 0.5 };
                let mult = if s == 0 {
                    1.0
                } else {
                    let (kx, ky) = g.wavevector(k, n);
                    (kx * kx + ky * ky).powi(s as i32)
                };
                sum += w * a * mult;
            }
        }
        sum
    }

    /// `s = 0`: L2 norm by Parseval. `s >= 1`: the seminorm with multiplier
    /// `|K|^s` (`||grad f||`, `||Lap f||`, ...), used as the H^s norm.
    pub fn sobolev_norm(&self, s: u32) -> Result<f64> {
        if s > 3 {
            return Err(Error::InvalidArgument(format!(
                "Sobolev order must be in 0..=3, got {s}"
            )));
        }
        Ok(self.weighted_energy(s).sqrt())
    }

    /// Spectral `int f g` (continuous weights).
    pub fn inner_product(&self, other: &SpectralField) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        if self.parity != other.parity {
            return Err(Error::ParityMismatch {
                expected: self.parity,
                found: other.parity,
            });
        }
        let nyp = self.grid.nyp();
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(idx, (a, b))| {
                let w = if idx % nyp == 0 { 1.0 } else { 0.5 };
                w * (a.re * b.re + a.im * b.im)
            })
            .sum())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest coefficient-wise difference from another field.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            parity: self.parity,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other` without parity checks (internal hot path).
    pub(crate) fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert_eq!(self.parity, other.parity);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn try_add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.compatible(other)?;
        Ok(self + other)
    }

    fn compatible(&self, other: &SpectralField) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        if self.parity != other.parity {
            return Err(Error::ParityMismatch {
                expected: self.parity,
                found: other.parity,
            });
        }
        Ok(())
    }
}

#[inline]
fn times_i(c: Complex64, s: f64) -> Complex64 {
    Complex64::new(-c.im * s, c.re * s)
}

#[inline]
fn ddy_mode(parity: Parity, n: usize, ny: usize, c: Complex64, ky: f64) -> Complex64 {
    match parity {
        Parity::Sine => {
            if n == 0 {
                Complex64::default()
            } else {
                c * ky
            }
        }
        Parity::Cosine => {
            if n == 0 || n == ny {
                Complex64::default()
            } else {
                c * (-ky)
            }
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    /// Panics on grid or parity mismatch; use [`SpectralField::try_add`] for
    /// a checked version.
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        assert_eq!(self.parity, rhs.parity, "parity mismatch");
        SpectralField {
            grid: self.grid,
            parity: self.parity,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        assert_eq!(self.parity, rhs.parity, "parity mismatch");
        SpectralField {
            grid: self.grid,
            parity: self.parity,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}
