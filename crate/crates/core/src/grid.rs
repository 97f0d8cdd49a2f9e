//! Square truncated-domain discretization of the plane with spectral
//! differentiation, midpoint quadrature and free-space convolution.
//!
//! The continuum problem lives on all of R^2; we work on [-L, L]^2 under the
//! standing assumption that fields of interest decay to zero well before the
//! boundary. Node `i` maps to coordinate `-L + i*h` with `h = 2L/N`.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{CssError, Result};

/// Uniform N x N discretization of [-L, L]^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    l: f64,
    n: usize,
    h: f64,
}

impl Grid {
    /// Build a grid; `n` must be even and at least 8 (zero-padded convolution
    /// needs the even split), `l` positive.
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if l <= 0.0 || !l.is_finite() {
            return Err(CssError::NonpositiveL(l));
        }
        if n % 2 != 0 {
            return Err(CssError::OddN(n));
        }
        if n < 8 {
            return Err(CssError::TinyN(n));
        }
        Ok(Grid { l, n, h: 2.0 * l / n as f64 })
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Coordinate of node `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h
    }

    /// Wavenumbers of the unpadded grid: k = pi*m/L for m in [-N/2, N/2),
    /// stored in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        fft_wavenumbers(self.n, self.h)
    }
}

/// `make_grid` of the public surface; alias for [`Grid::new`].
pub fn make_grid(l: f64, n: usize) -> Result<Grid> {
    Grid::new(l, n)
}

/// Real scalar field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid,
    values: Array2<f64>,
}

impl Field2D {
    pub fn zeros(grid: Grid) -> Self {
        Field2D { grid, values: Array2::zeros((grid.n, grid.n)) }
    }

    /// Sample `f(x, y)` at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n;
        let values = Array2::from_shape_fn((n, n), |(i, j)| f(grid.coord(i), grid.coord(j)));
        Field2D { grid, values }
    }

    pub fn from_values(grid: Grid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n, grid.n) {
            return Err(CssError::GridMismatch(format!(
                "expected {0}x{0} values, got {1}x{2}",
                grid.n,
                values.dim().0,
                values.dim().1
            )));
        }
        Ok(Field2D { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Midpoint quadrature h^2 * sum of values.
    pub fn integrate(&self) -> f64 {
        self.grid.h * self.grid.h * self.values.iter().sum::<f64>()
    }

    /// Pointwise map into a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D { grid: self.grid, values: self.values.mapv(&f) }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Result<Field2D> {
        check_same_grid(self, other)?;
        let mut out = self.values.clone();
        out.zip_mut_with(&other.values, |a, &b| *a = f(*a, b));
        Ok(Field2D { grid: self.grid, values: out })
    }

    pub fn scale(&self, alpha: f64) -> Field2D {
        self.map(|v| alpha * v)
    }

    /// L^p norm to the p-th power: integral of |u|^p.
    pub fn lp_pow(&self, p: f64) -> f64 {
        self.grid.h * self.grid.h * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum of |u| on the outermost cell ring; used by the domain-size check.
    pub fn boundary_ring_max(&self) -> f64 {
        let n = self.grid.n;
        let mut m: f64 = 0.0;
        for i in 0..n {
            m = m.max(self.values[[i, 0]].abs());
            m = m.max(self.values[[i, n - 1]].abs());
            m = m.max(self.values[[0, i]].abs());
            m = m.max(self.values[[n - 1, i]].abs());
        }
        m
    }
}

pub(crate) fn check_same_grid(a: &Field2D, b: &Field2D) -> Result<()> {
    if a.grid != b.grid {
        return Err(CssError::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    Ok(())
}

/// `integrate` of the public surface; alias for [`Field2D::integrate`].
pub fn integrate(f: &Field2D) -> f64 {
    f.integrate()
}

// ---------------------------------------------------------------------------
// FFT plumbing

fn plan(len: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut guard = planner.lock().expect("fft planner mutex poisoned");
    guard.plan_fft(len, dir)
}

/// In-place 2-D FFT (rows then columns). Inverse transforms are normalized by
/// the total number of samples.
pub(crate) fn fft2_inplace(a: &mut Array2<Complex64>, dir: FftDirection) {
    let (rows, cols) = a.dim();
    let row_fft = plan(cols, dir);
    for mut row in a.rows_mut() {
        row_fft.process(row.as_slice_mut().expect("row not contiguous"));
    }
    let col_fft = plan(rows, dir);
    let mut scratch = vec![Complex64::default(); rows];
    for j in 0..cols {
        for i in 0..rows {
            scratch[i] = a[[i, j]];
        }
        col_fft.process(&mut scratch);
        for i in 0..rows {
            a[[i, j]] = scratch[i];
        }
    }
    if dir == FftDirection::Inverse {
        let norm = 1.0 / (rows * cols) as f64;
        a.mapv_inplace(|v| v * norm);
    }
}

pub(crate) fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    a.mapv(|v| Complex64::new(v, 0.0))
}

/// Wavenumbers in FFT storage order for a transform of length `len` over
/// physical spacing `h`: k_m = 2*pi*m'/(len*h) with m' in [-len/2, len/2).
pub(crate) fn fft_wavenumbers(len: usize, h: f64) -> Vec<f64> {
    let period = len as f64 * h;
    (0..len)
        .map(|m| {
            let m_signed = if m < len / 2 { m as f64 } else { m as f64 - len as f64 };
            2.0 * std::f64::consts::PI * m_signed / period
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Spectral operators

/// Integral of |grad u|^2 by Fourier differentiation and Parseval's identity.
///
/// The caller is responsible for `u` decaying near the boundary; the periodic
/// transform silently identifies opposite edges.
pub fn grad_norm_sq(u: &Field2D) -> f64 {
    let n = u.grid.n;
    let mut a = to_complex(&u.values);
    fft2_inplace(&mut a, FftDirection::Forward);
    let k = u.grid.wavenumbers();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (k[i] * k[i] + k[j] * k[j]) * a[[i, j]].norm_sqr();
        }
    }
    // Parseval: h^2 * sum |grad u|^2 = h^2/N^2 * sum k^2 |u_hat|^2
    acc * u.grid.h * u.grid.h / (n * n) as f64
}

/// Spectral Laplacian (multiplier -|k|^2) on the unpadded grid.
pub fn laplacian(u: &Field2D) -> Field2D {
    let n = u.grid.n;
    let mut a = to_complex(&u.values);
    fft2_inplace(&mut a, FftDirection::Forward);
    let k = u.grid.wavenumbers();
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] *= -(k[i] * k[i] + k[j] * k[j]);
        }
    }
    fft2_inplace(&mut a, FftDirection::Inverse);
    Field2D { grid: u.grid, values: a.mapv(|v| v.re) }
}

/// Both partial derivatives by Fourier differentiation. The Nyquist mode is
/// zeroed so the output of the odd multiplier stays real.
pub fn spectral_gradient(u: &Field2D) -> (Field2D, Field2D) {
    let n = u.grid.n;
    let k = u.grid.wavenumbers();
    let deriv = |axis: usize| -> Field2D {
        let mut a = to_complex(&u.values);
        fft2_inplace(&mut a, FftDirection::Forward);
        for i in 0..n {
            for j in 0..n {
                let kk = if axis == 0 { k[i] } else { k[j] };
                let m = if (if axis == 0 { i } else { j }) == n / 2 { 0.0 } else { kk };
                a[[i, j]] *= Complex64::new(0.0, m);
            }
        }
        fft2_inplace(&mut a, FftDirection::Inverse);
        Field2D { grid: u.grid, values: a.mapv(|v| v.re) }
    };
    (deriv(0), deriv(1))
}

/// Free-space convolution with a kernel given by its continuum Fourier
/// transform `multiplier(kx, ky)`.
///
/// The field is zero-padded to 2N x 2N (period 4L), the multiplier applied in
/// frequency space, and the result cropped back. The zero mode is whatever
/// `multiplier(0, 0)` returns, so singular kernels must resolve it explicitly.
pub fn convolve_free(f: &Field2D, multiplier: impl Fn(f64, f64) -> Complex64) -> Field2D {
    let n = f.grid.n;
    let m = 2 * n;
    let mut a = Array2::<Complex64>::zeros((m, m));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = Complex64::new(f.values[[i, j]], 0.0);
        }
    }
    fft2_inplace(&mut a, FftDirection::Forward);
    let k = fft_wavenumbers(m, f.grid.h);
    for i in 0..m {
        for j in 0..m {
            a[[i, j]] *= multiplier(k[i], k[j]);
        }
    }
    fft2_inplace(&mut a, FftDirection::Inverse);
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = a[[i, j]].re;
        }
    }
    Field2D { grid: f.grid, values: out }
}

/// Free-space convolution with a real-space kernel sampled on the padded grid:
/// returns h^2 * sum_y kernel(x - y) f(y), computed by FFT. Exact linear
/// convolution (up to roundoff) against the direct double sum.
///
/// `kernel(0, 0)` supplies the origin value for singular kernels.
pub fn convolve_free_kernel(f: &Field2D, kernel: impl Fn(f64, f64) -> f64) -> Field2D {
    let n = f.grid.n;
    let m = 2 * n;
    let h = f.grid.h;
    let mut fa = Array2::<Complex64>::zeros((m, m));
    for i in 0..n {
        for j in 0..n {
            fa[[i, j]] = Complex64::new(f.values[[i, j]], 0.0);
        }
    }
    // kernel samples at displacements wrapped to [-Nh, Nh)
    let mut ka = Array2::<Complex64>::zeros((m, m));
    for i in 0..m {
        let di = if i < n { i as f64 } else { i as f64 - m as f64 };
        for j in 0..m {
            let dj = if j < n { j as f64 } else { j as f64 - m as f64 };
            ka[[i, j]] = Complex64::new(kernel(di * h, dj * h), 0.0);
        }
    }
    fft2_inplace(&mut fa, FftDirection::Forward);
    fft2_inplace(&mut ka, FftDirection::Forward);
    for i in 0..m {
        for j in 0..m {
            fa[[i, j]] *= ka[[i, j]];
        }
    }
    fft2_inplace(&mut fa, FftDirection::Inverse);
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = fa[[i, j]].re * h * h;
        }
    }
    Field2D { grid: f.grid, values: out }
}

// ---------------------------------------------------------------------------
// Fiber-map resampling

/// Sample the mass-preserving dilation u_t(x) = t * u(t x) back onto the same
/// grid by bicubic (Catmull-Rom) interpolation, with zero extension outside
/// the domain. Used where an actual resampled field is needed (the solver's
/// fiber projection); energy and constraint values along the fiber are
/// computed by exact scaling identities instead.
pub fn fiber_resample(u: &Field2D, t: f64) -> Field2D {
    let grid = u.grid;
    let n = grid.n;
    let sample = |x: f64, y: f64| -> f64 {
        let fi = (x + grid.l) / grid.h;
        let fj = (y + grid.l) / grid.h;
        if fi < 0.0 || fj < 0.0 || fi > (n - 1) as f64 || fj > (n - 1) as f64 {
            return 0.0;
        }
        let i0 = fi.floor() as isize;
        let j0 = fj.floor() as isize;
        let tx = fi - i0 as f64;
        let ty = fj - j0 as f64;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                0.0
            } else {
                u.values[[i as usize, j as usize]]
            }
        };
        let mut rows = [0.0; 4];
        for (r, di) in (-1..=2).enumerate() {
            let p = [at(i0 + di, j0 - 1), at(i0 + di, j0), at(i0 + di, j0 + 1), at(i0 + di, j0 + 2)];
            rows[r] = catmull_rom(p, ty);
        }
        catmull_rom(rows, tx)
    };
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        t * sample(t * grid.coord(i), t * grid.coord(j))
    });
    Field2D { grid, values }
}

fn catmull_rom(p: [f64; 4], t: f64) -> f64 {
    0.5 * ((2.0 * p[1])
        + (-p[0] + p[2]) * t
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t * t
        + (-p[0] + 3.0 * p[1] - 3.0 * p[2] + p[3]) * t * t * t)
}
