//! Fourier-x times type-I sine/cosine-y transforms built on complex FFTs.
//!
//! Real rows and columns are packed two at a time into one complex sequence,
//! so a full 2D transform costs about `nx/2` FFTs of length `2 ny` plus
//! `(ny + 2)/2` FFTs of length `nx`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, Parity};

pub(crate) struct Plans {
    nx: usize,
    ny: usize,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
}

type PlanCache = Mutex<HashMap<(usize, usize), Arc<Plans>>>;

/// Plans are immutable and shared; scratch space is allocated per call.
pub(crate) fn plans(grid: &Grid) -> Arc<Plans> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((grid.nx(), grid.ny()))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                nx: grid.nx(),
                ny: grid.ny(),
                fft_x: planner.plan_fft_forward(grid.nx()),
                ifft_x: planner.plan_fft_inverse(grid.nx()),
                fft_y: planner.plan_fft_forward(2 * grid.ny()),
            })
        })
        .clone()
}

impl Plans {
    fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .fft_x
            .get_inplace_scratch_len()
            .max(self.ifft_x.get_inplace_scratch_len())
            .max(self.fft_y.get_inplace_scratch_len());
        vec![Complex64::default(); len]
    }

    /// Mesh values (x-major) to coefficients (k-major, FFT order in k).
    pub(crate) fn analysis(&self, values: &[f64], parity: Parity, out: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        let nyp = ny + 1;
        let mut scratch = self.scratch();
        let mut ybuf = vec![Complex64::default(); 2 * ny];
        let mut mid = vec![0.0; nx * nyp];

        for i in (0..nx).step_by(2) {
            let a = &values[i * nyp..(i + 1) * nyp];
            let b = &values[(i + 1) * nyp..(i + 2) * nyp];
            fill_extension(&mut ybuf, a, b, parity, ny, 1.0);
            self.fft_y.process_with_scratch(&mut ybuf, &mut scratch);
            let inv = 1.0 / ny as f64;
            for n in 0..nyp {
                let g = ybuf[n];
                let (ra, rb) = match parity {
                    Parity::Cosine => {
                        let s = if n == 0 || n == ny { 0.5 * inv } else { inv };
                        (g.re * s, g.im * s)
                    }
                    Parity::Sine => {
                        if n == 0 || n == ny {
                            (0.0, 0.0)
                        } else {
                            (-g.im * inv, g.re * inv)
                        }
                    }
                };
                mid[i * nyp + n] = ra;
                mid[(i + 1) * nyp + n] = rb;
            }
        }

        let mut xbuf = vec![Complex64::default(); nx];
        let inv = 1.0 / nx as f64;
        for n in (0..nyp).step_by(2) {
            let paired = n + 1 < nyp;
            for (i, z) in xbuf.iter_mut().enumerate() {
                let im = if paired { mid[i * nyp + n + 1] } else { 0.0 };
                *z = Complex64::new(mid[i * nyp + n], im);
            }
            self.fft_x.process_with_scratch(&mut xbuf, &mut scratch);
            for k in 0..nx {
                let zk = xbuf[k] * inv;
                let zmk = xbuf[(nx - k) % nx].conj() * inv;
                out[k * nyp + n] = (zk + zmk) * 0.5;
                if paired {
                    let d = zk - zmk;
                    out[k * nyp + n + 1] = Complex64::new(d.im * 0.5, -d.re * 0.5);
                }
            }
        }
    }

    /// Coefficients to mesh values; inverse of [`Plans::analysis`] for
    /// Hermitian, band-limited input.
    pub(crate) fn synthesis(&self, coeffs: &[Complex64], parity: Parity, out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let nyp = ny + 1;
        let mut scratch = self.scratch();
        let mut mid = vec![0.0; nx * nyp];

        let mut xbuf = vec![Complex64::default(); nx];
        for n in (0..nyp).step_by(2) {
            let paired = n + 1 < nyp;
            for (k, z) in xbuf.iter_mut().enumerate() {
                let a = coeffs[k * nyp + n];
                let b = if paired {
                    coeffs[k * nyp + n + 1]
                } else {
                    Complex64::default()
                };
                // a + i b
                *z = Complex64::new(a.re - b.im, a.im + b.re);
            }
            self.ifft_x.process_with_scratch(&mut xbuf, &mut scratch);
            for (i, z) in xbuf.iter().enumerate() {
                mid[i * nyp + n] = z.re;
                if paired {
                    mid[i * nyp + n + 1] = z.im;
                }
            }
        }

        let mut ybuf = vec![Complex64::default(); 2 * ny];
        for i in (0..nx).step_by(2) {
            let a = &mid[i * nyp..(i + 1) * nyp];
            let b = &mid[(i + 1) * nyp..(i + 2) * nyp];
            match parity {
                Parity::Cosine => {
                    fill_extension(&mut ybuf, a, b, parity, ny, 0.5);
                    // endpoints carry full weight in the cosine synthesis
                    ybuf[0] = Complex64::new(a[0], b[0]);
                    ybuf[ny] = Complex64::new(a[ny], b[ny]);
                    self.fft_y.process_with_scratch(&mut ybuf, &mut scratch);
                    for j in 0..nyp {
                        out[i * nyp + j] = ybuf[j].re;
                        out[(i + 1) * nyp + j] = ybuf[j].im;
                    }
                }
                Parity::Sine => {
                    fill_extension(&mut ybuf, a, b, parity, ny, 1.0);
                    self.fft_y.process_with_scratch(&mut ybuf, &mut scratch);
                    for j in 0..nyp {
                        let g = ybuf[j];
                        out[i * nyp + j] = -0.5 * g.im;
                        out[(i + 1) * nyp + j] = 0.5 * g.re;
                    }
                    out[i * nyp] = 0.0;
                    out[(i + 1) * nyp] = 0.0;
                    out[i * nyp + ny] = 0.0;
                    out[(i + 1) * nyp + ny] = 0.0;
                }
            }
        }
    }
}

/// Even (cosine) or odd (sine) extension of the packed pair `a + i b` onto
/// the doubled period `2 ny`, with interior entries scaled by `scale`.
fn fill_extension(buf: &mut [Complex64], a: &[f64], b: &[f64], parity: Parity, ny: usize, scale: f64) {
    match parity {
        Parity::Cosine => {
            buf[0] = Complex64::new(a[0], b[0]) * scale;
            buf[ny] = Complex64::new(a[ny], b[ny]) * scale;
            for m in 1..ny {
                let z = Complex64::new(a[m], b[m]) * scale;
                buf[m] = z;
                buf[2 * ny - m] = z;
            }
        }
        Parity::Sine => {
            buf[0] = Complex64::default();
            buf[ny] = Complex64::default();
            for m in 1..ny {
                let z = Complex64::new(a[m], b[m]) * scale;
                buf[m] = z;
                buf[2 * ny - m] = -z;
            }
        }
    }
}
