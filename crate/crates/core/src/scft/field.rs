use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Real scalar field on a periodic 2D lattice, stored row-major (`x` major).
#[derive(Debug, Clone, PartialEq)]
pub struct Field2 {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl Field2 {
    pub fn filled(nx: usize, ny: usize, value: f64) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::filled(nx, ny, 0.0)
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny, "field data length does not match lattice");
        Self { nx, ny, data }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                data.push(f(i, j));
            }
        }
        Self { nx, ny, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest pointwise deviation from `value`.
    pub fn max_deviation(&self, value: f64) -> f64 {
        self.data.iter().map(|v| (v - value).abs()).fold(0.0, f64::max)
    }

    /// Periodic translation: the value at `(i, j)` moves to `(i + dx, j + dy)`.
    pub fn shifted(&self, dx: usize, dy: usize) -> Self {
        Self::from_fn(self.nx, self.ny, |i, j| {
            self.get((i + self.nx - dx % self.nx) % self.nx, (j + self.ny - dy % self.ny) % self.ny)
        })
    }
}

/// Squared angular wavenumbers `|k|^2` of the lattice in FFT order.
pub fn wavenumbers_squared(nx: usize, ny: usize, lx: f64, ly: f64) -> Field2 {
    let freq = |m: usize, n: usize, len: f64| {
        let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        2.0 * PI * m / len
    };
    Field2::from_fn(nx, ny, |i, j| {
        let kx = freq(i, nx, lx);
        let ky = freq(j, ny, ly);
        kx * kx + ky * ky
    })
}

/// Spectral convolution engine for one lattice size.
///
/// Keeps the k-space data transposed between the forward and inverse passes
/// so a diffusion step costs two transposes instead of four.
pub struct Spectral {
    nx: usize,
    ny: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    tbuf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish_non_exhaustive()
    }
}

impl Spectral {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_row = planner.plan_fft_forward(ny);
        let inv_row = planner.plan_fft_inverse(ny);
        let fwd_col = planner.plan_fft_forward(nx);
        let inv_col = planner.plan_fft_inverse(nx);
        let scratch_len = [&fwd_row, &inv_row, &fwd_col, &inv_col]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            nx,
            ny,
            fwd_row,
            inv_row,
            fwd_col,
            inv_col,
            buf: vec![Complex64::default(); nx * ny],
            tbuf: vec![Complex64::default(); nx * ny],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    /// Transposes a multiplier laid out like a [`Field2`] into the internal k-space layout.
    pub fn kspace_layout(&self, multiplier: &Field2) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                out[j * self.nx + i] = multiplier.get(i, j);
            }
        }
        out
    }

    /// In place `q <- IFFT(multiplier * FFT(q))`, with `multiplier` in
    /// [`Spectral::kspace_layout`] order.
    pub fn convolve(&mut self, q: &mut [f64], multiplier: &[f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for (b, &v) in self.buf.iter_mut().zip(q.iter()) {
            *b = Complex64::new(v, 0.0);
        }
        self.fwd_row.process_with_scratch(&mut self.buf, &mut self.scratch);
        transpose(&self.buf, &mut self.tbuf, nx, ny);
        self.fwd_col.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        for (c, &m) in self.tbuf.iter_mut().zip(multiplier) {
            *c *= m;
        }
        self.inv_col.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        transpose(&self.tbuf, &mut self.buf, ny, nx);
        self.inv_row.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / (nx * ny) as f64;
        for (v, b) in q.iter_mut().zip(&self.buf) {
            *v = b.re * norm;
        }
    }

    /// [`Spectral::convolve`] on two fields at once, packed as `a + i b`.
    ///
    /// Exact for multipliers that are real and even in k, which every
    /// diffusion kernel is: both fields then stay real through the round trip.
    pub fn convolve_pair(&mut self, a: &mut [f64], b: &mut [f64], multiplier: &[f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for ((c, &x), &y) in self.buf.iter_mut().zip(a.iter()).zip(b.iter()) {
            *c = Complex64::new(x, y);
        }
        self.fwd_row.process_with_scratch(&mut self.buf, &mut self.scratch);
        transpose(&self.buf, &mut self.tbuf, nx, ny);
        self.fwd_col.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        for (c, &m) in self.tbuf.iter_mut().zip(multiplier) {
            *c *= m;
        }
        self.inv_col.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        transpose(&self.tbuf, &mut self.buf, ny, nx);
        self.inv_row.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / (nx * ny) as f64;
        for ((x, y), c) in a.iter_mut().zip(b.iter_mut()).zip(&self.buf) {
            *x = c.re * norm;
            *y = c.im * norm;
        }
    }
}

/// `src` is `rows x cols` row-major; `dst` becomes `cols x rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for (c, &v) in row.iter().enumerate() {
            dst[c * rows + r] = v;
        }
    }
}
