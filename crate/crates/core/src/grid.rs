//! Uniform periodized grid on `[-L, L)` and the spectral utilities built on it.
//!
//! Every profile and density lives on a [`Grid`] as a [`GridFunction`]. The real line
//! is approximated by the periodic interval `[-L, L)`, so derivatives, the Hilbert
//! transform and interpolation are all realized through the discrete Fourier transform.
//!
//! Hilbert transform convention: `H[u](x) = (1/pi) PV int u(x - s) / s ds`, which is the
//! Fourier multiplier `-i sgn(k)`. In particular `H[cos(kx)] = sin(kx)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

pub use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest admissible number of samples.
pub const MIN_POINTS: usize = 16;

/// Uniform grid `x_j = -L + j h`, `h = 2L / n`, `n` a power of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid half length must be finite and positive, got {half_length}"
            )));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= {MIN_POINTS}, got {n}"
            )));
        }
        Ok(Grid { half_length, n })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing `h = 2L / n`. Since `n` is a power of two, `h * n == 2L` exactly.
    pub fn spacing(&self) -> f64 {
        self.period() / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed mode number of FFT slot `idx`; the Nyquist slot maps to `-n/2`.
    pub fn mode_number(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let m = idx as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Wavenumber `k_m = pi m / L` of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        PI * self.mode_number(idx) as f64 / self.half_length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// FFT slot holding wavenumber `k`, if `k` is (to 1e-9 relative) a grid wavenumber.
    pub fn slot_of_wavenumber(&self, k: f64) -> Option<usize> {
        let m = k * self.half_length / PI;
        let mr = m.round();
        if (m - mr).abs() > 1e-9 * m.abs().max(1.0) || mr.abs() >= (self.n / 2) as f64 {
            return None;
        }
        let mr = mr as i64;
        Some(if mr >= 0 {
            mr as usize
        } else {
            (mr + self.n as i64) as usize
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= -self.half_length && x < self.half_length
    }

    /// Wraps a node offset into the minimal image `(-n/2, n/2]`.
    pub(crate) fn wrap_offset(&self, offset: i64) -> i64 {
        let n = self.n as i64;
        let half = n / 2;
        (offset + half).rem_euclid(n) - half
    }
}

/// Real samples of a function on a [`Grid`]. All samples are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite sample {} at node {j}",
                values[j]
            )));
        }
        Ok(GridFunction { grid, values })
    }

    /// Builds a function from values already known to be finite and of the right length.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        GridFunction::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction::from_raw(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        GridFunction::new(self.grid, values)
    }

    pub fn scale(&self, c: f64) -> Self {
        GridFunction::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// Discrete L2 inner product `h * sum u_j v_j`.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.spacing() * s)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid integral over one period.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Relative L2 distance `|self - other| / |other|` (absolute if `other` vanishes).
    pub fn rel_l2_distance(&self, other: &GridFunction) -> Result<f64> {
        let diff = (self - other)?;
        let denom = other.norm_l2();
        Ok(if denom > 0.0 {
            diff.norm_l2() / denom
        } else {
            diff.norm_l2()
        })
    }

    /// Largest magnitude in the outer 10% of the domain relative to the sup norm.
    /// Zero for the zero function.
    pub fn tail_ratio(&self) -> f64 {
        let sup = self.norm_inf();
        if sup == 0.0 {
            return 0.0;
        }
        let l = self.grid.half_length();
        let tail = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() >= 0.9 * l)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        tail / sup
    }

    /// Fraction of the discrete energy carried by the top octave `|m| > n/4`.
    pub fn spectral_tail(&self) -> f64 {
        let coeffs = forward(&self.values);
        let n = self.len() as i64;
        let mut total = 0.0;
        let mut top = 0.0;
        for (idx, c) in coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.mode_number(idx).abs() > n / 4 {
                top += e;
            }
        }
        if total > 0.0 {
            top / total
        } else {
            0.0
        }
    }
}

impl Add for &GridFunction {
    type Output = Result<GridFunction>;
    fn add(self, rhs: &GridFunction) -> Result<GridFunction> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = Result<GridFunction>;
    fn sub(self, rhs: &GridFunction) -> Result<GridFunction> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &GridFunction {
    type Output = Result<GridFunction>;
    fn mul(self, rhs: &GridFunction) -> Result<GridFunction> {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(-1.0)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized forward DFT of real samples.
pub(crate) fn forward(values: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    plan(buf.len(), false).process(&mut buf);
    buf
}

/// Inverse DFT (with the `1/n` factor), keeping the real part.
pub(crate) fn inverse_real(mut coeffs: Vec<Complex<f64>>) -> Vec<f64> {
    let n = coeffs.len();
    plan(n, true).process(&mut coeffs);
    let scale = 1.0 / n as f64;
    coeffs.into_iter().map(|c| c.re * scale).collect()
}

/// Discrete Fourier coefficients `(1/n) sum_j u_j e^{-i k (x_j + L)}` in FFT slot order.
pub fn fourier_coefficients(u: &GridFunction) -> Vec<Complex<f64>> {
    let scale = 1.0 / u.len() as f64;
    forward(u.values()).into_iter().map(|c| c * scale).collect()
}

/// Applies a Fourier multiplier. The symbol receives the wavenumber and whether the
/// slot is the Nyquist slot.
pub fn apply_symbol(
    u: &GridFunction,
    symbol: impl Fn(f64, bool) -> Complex<f64>,
) -> Result<GridFunction> {
    let grid = *u.grid();
    let mut coeffs = forward(u.values());
    let nyquist = grid.len() / 2;
    for (idx, c) in coeffs.iter_mut().enumerate() {
        *c *= symbol(grid.wavenumber(idx), idx == nyquist);
    }
    GridFunction::new(grid, inverse_real(coeffs))
}

/// Derivative of the trigonometric interpolant. Odd orders drop the Nyquist mode.
pub fn spectral_derivative(u: &GridFunction, order: usize) -> Result<GridFunction> {
    if order == 0 {
        return Err(Error::InvalidArgument(
            "derivative order must be positive".into(),
        ));
    }
    let odd = order % 2 == 1;
    let power = order as i32;
    apply_symbol(u, |k, nyq| {
        if nyq && odd {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, k).powi(power)
        }
    })
}

/// Hilbert transform with symbol `-i sgn(k)`; the mean and Nyquist modes map to zero.
pub fn hilbert_transform(u: &GridFunction) -> Result<GridFunction> {
    apply_symbol(u, |k, nyq| {
        if nyq || k == 0.0 {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, -k.signum())
        }
    })
}

/// Zero-mean antiderivative. The mean of `u` is discarded.
pub fn spectral_antiderivative(u: &GridFunction) -> Result<GridFunction> {
    apply_symbol(u, |k, nyq| {
        if nyq || k == 0.0 {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, -1.0 / k)
        }
    })
}

/// Evaluates the trigonometric interpolant of `u` at `x in [-L, L)`.
pub fn interpolate(u: &GridFunction, x: f64) -> Result<f64> {
    let grid = u.grid();
    if !grid.contains(x) {
        return Err(Error::OutOfRange {
            x,
            lo: -grid.half_length(),
            hi: grid.half_length(),
        });
    }
    let coeffs = forward(u.values());
    Ok(evaluate_series(grid, &coeffs, x))
}

/// Evaluates a precomputed coefficient set; used for repeated interpolation.
pub(crate) fn evaluate_series(grid: &Grid, coeffs: &[Complex<f64>], x: f64) -> f64 {
    let n = grid.len();
    let xi = x + grid.half_length();
    let mut acc = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let k = grid.wavenumber(idx);
        let phase = Complex::from_polar(1.0, k * xi);
        if idx == n / 2 {
            // Nyquist: symmetric split of the mode.
            acc += c.re * (k * xi).cos();
        } else {
            acc += (c * phase).re;
        }
    }
    acc / n as f64
}

/// Interpolant of a fixed function, with the transform computed once.
pub struct Interpolant {
    grid: Grid,
    coeffs: Vec<Complex<f64>>,
}

impl Interpolant {
    pub fn new(u: &GridFunction) -> Self {
        Interpolant {
            grid: *u.grid(),
            coeffs: forward(u.values()),
        }
    }

    /// Periodic evaluation; `x` is wrapped into `[-L, L)`.
    pub fn eval_periodic(&self, x: f64) -> f64 {
        let l = self.grid.half_length();
        let xw = (x + l).rem_euclid(2.0 * l) - l;
        evaluate_series(&self.grid, &self.coeffs, xw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: f64, n: usize) -> Grid {
        Grid::new(l, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 300).is_err());
        assert!(Grid::new(1.0, 8).is_err());
        assert!(Grid::new(0.0, 64).is_err());
        assert!(Grid::new(f64::NAN, 64).is_err());
        let g = grid(3.0, 64);
        assert_eq!(g.spacing() * 64.0, 6.0);
        assert_eq!(g.node(0), -3.0);
        assert_eq!(g.mode_number(32), -32);
        assert_eq!(g.slot_of_wavenumber(PI / 3.0 * 5.0), Some(5));
        assert_eq!(g.slot_of_wavenumber(-PI / 3.0 * 5.0), Some(59));
        assert_eq!(g.slot_of_wavenumber(1.0), None);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = grid(1.0, 16);
        let mut v = vec![0.0; 16];
        v[3] = f64::INFINITY;
        assert!(matches!(GridFunction::new(g, v), Err(Error::InvalidData(_))));
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(5.0, 64);
        let d = spectral_derivative(&GridFunction::constant(g, 2.5), 1).unwrap();
        assert!(d.norm_inf() < 1e-14);
        assert!(spectral_derivative(&d, 0).is_err());
    }

    #[test]
    fn derivative_of_single_mode() {
        let l = 4.0;
        let g = grid(l, 64);
        let u = GridFunction::from_fn(g, |x| (PI * x / l).sin()).unwrap();
        let d = spectral_derivative(&u, 1).unwrap();
        let exact = GridFunction::from_fn(g, |x| PI / l * (PI * x / l).cos()).unwrap();
        assert!(d.rel_l2_distance(&exact).unwrap() < 1e-12);
    }

    #[test]
    fn derivative_matches_centered_differences() {
        // Centered differences carry an O(h^2) discrepancy with the spectral derivative.
        let g = grid(20.0, 512);
        let h = g.spacing();
        let u = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let d = spectral_derivative(&u, 1).unwrap();
        let n = g.len();
        let fd: Vec<f64> = (0..n)
            .map(|j| (u.values()[(j + 1) % n] - u.values()[(j + n - 1) % n]) / (2.0 * h))
            .collect();
        let err = d
            .values()
            .iter()
            .zip(&fd)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // u''' of the Gaussian is bounded by ~7; error ~ h^2/6 * 7.
        assert!(err < 1.3 * h * h, "err {err}");
        assert!(err > 0.05 * h * h, "err {err} suspiciously small");
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        let l = 6.0;
        let g = grid(l, 128);
        for m in [1.0, 3.0, 17.0] {
            let k = PI * m / l;
            let u = GridFunction::from_fn(g, |x| (k * x).cos()).unwrap();
            let hu = hilbert_transform(&u).unwrap();
            let exact = GridFunction::from_fn(g, |x| (k * x).sin()).unwrap();
            assert!((&hu - &exact).unwrap().norm_inf() < 1e-12);
        }
        let one = GridFunction::constant(g, 1.0);
        assert!(hilbert_transform(&one).unwrap().norm_inf() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_modes() {
        let l = 4.0;
        let g = grid(l, 64);
        let u = GridFunction::from_fn(g, |x| (PI * x / l).sin() + 0.3 * x.cos()).unwrap();
        for j in [0, 5, 31, 63] {
            let v = interpolate(&u, g.node(j)).unwrap();
            assert!((v - u.values()[j]).abs() < 1e-13);
        }
        let s = GridFunction::from_fn(g, |x| (PI * x / l).sin()).unwrap();
        let xm = g.node(10) + 0.5 * g.spacing();
        assert!((interpolate(&s, xm).unwrap() - (PI * xm / l).sin()).abs() < 1e-12);
        assert!(matches!(
            interpolate(&s, l),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn interpolation_matches_local_polynomial_oracle() {
        // Oracle: 4-point Lagrange interpolation through the neighbouring nodes, O(h^4).
        let g = grid(20.0, 512);
        let h = g.spacing();
        let u = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let j = 250;
        let x = g.node(j) + 0.37 * h;
        let pts: Vec<usize> = (j - 1..=j + 2).collect();
        let mut lag = 0.0;
        for &a in &pts {
            let mut w = 1.0;
            for &b in &pts {
                if a != b {
                    w *= (x - g.node(b)) / (g.node(a) - g.node(b));
                }
            }
            lag += w * u.values()[a];
        }
        let spec = interpolate(&u, x).unwrap();
        assert!((spec - lag).abs() < 2.0 * h.powi(4), "{}", (spec - lag).abs());
        assert!((spec - (-x * x).exp()).abs() < 1e-12);
    }

    #[test]
    fn tail_and_spectral_diagnostics() {
        let g = grid(20.0, 256);
        let u = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        assert!(u.tail_ratio() < 1e-100);
        assert!(u.spectral_tail() < 1e-20);
        assert_eq!(GridFunction::zeros(g).spectral_tail(), 0.0);
        let saw = GridFunction::from_fn(g, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert!(saw.spectral_tail() > 1e-4);
    }
}
