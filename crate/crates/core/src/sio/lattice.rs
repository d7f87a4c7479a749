//! Periodic image sums of the PV kernels.
//!
//! On the periodized line every kernel `R(s)` is replaced by `sum_p R(s + 2Lp)` with
//! `R(z) = prod_num / (z^{n+1} prod_i (1 + e_i^2 / z^2))`. Images with `|p| <= P` are
//! summed directly. For `|p| > P` we expand `1 / prod(1 + e_i^2/z^2)` in powers of `1/z^2`
//! and use the tails `T_q(s) = sum_{|p|>P} (s + 2Lp)^{-q}`, obtained from the
//! Taylor series of `cot(u) - 1/u` minus the explicit images.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::grid::Grid;

/// Images summed directly on each side.
const EXPLICIT_IMAGES: i32 = 2;

/// Terms of the `1/z^2` expansion used for the far images. The neglected term is
/// `O((e / 5L)^{2 * (FAR_TERMS + 1)})` relative to the far-image contribution.
pub(crate) const FAR_TERMS: usize = 6;

const TAYLOR_TERMS: usize = 160;

/// Coefficients `c_j` of `cot(u) - 1/u = sum_{j>=1} c_j u^{2j-1}`, `c_j = -2 zeta(2j) / pi^{2j}`.
fn taylor_coefficients() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        (1..=TAYLOR_TERMS)
            .map(|j| {
                let two_j = 2 * j as i32;
                let zeta = match j {
                    1 => PI.powi(2) / 6.0,
                    2 => PI.powi(4) / 90.0,
                    3 => PI.powi(6) / 945.0,
                    4 => PI.powi(8) / 9450.0,
                    5 => PI.powi(10) / 93555.0,
                    _ => (1..=64).rev().map(|k| (k as f64).powi(-two_j)).sum(),
                };
                -2.0 * zeta / PI.powi(two_j)
            })
            .collect()
    })
}

/// `d^k/du^k [cot(u) - 1/u]` for `|u| <= pi/2`. All series terms share one sign, so the
/// sum is free of cancellation.
fn cot_remainder_derivative(u: f64, k: usize) -> f64 {
    debug_assert!(u.abs() <= 0.5 * PI * (1.0 + 1e-12));
    let mut acc = 0.0;
    for (idx, cj) in taylor_coefficients().iter().enumerate() {
        let power = 2 * idx + 1;
        if power < k {
            continue;
        }
        let falling: f64 = ((power - k + 1)..=power).map(|v| v as f64).product();
        let term = cj * falling * u.powi((power - k) as i32);
        acc += term;
        if power > k + 8 && term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    acc
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Image sums on a period of length `2L`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lattice {
    half_length: f64,
    w: f64,
}

impl Lattice {
    pub fn new(half_length: f64) -> Self {
        Lattice {
            half_length,
            w: PI / (2.0 * half_length),
        }
    }

    fn period(&self) -> f64 {
        2.0 * self.half_length
    }

    /// `D_q(s) = sum_{p != 0} (s + 2Lp)^{-q}` for `|s| <= L`, symmetric summation for `q = 1`.
    pub fn image_power_sum(&self, s: f64, q: usize) -> f64 {
        assert!(q >= 1);
        let k = q - 1;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign / factorial(k) * self.w.powi(q as i32) * cot_remainder_derivative(self.w * s, k)
    }

    /// `T_q(s) = sum_{|p| > P} (s + 2Lp)^{-q}`.
    pub fn far_image_sum(&self, s: f64, q: usize) -> f64 {
        let mut near = 0.0;
        for p in 1..=EXPLICIT_IMAGES {
            let shift = self.period() * p as f64;
            near += (s + shift).powi(-(q as i32)) + (s - shift).powi(-(q as i32));
        }
        self.image_power_sum(s, q) - near
    }

    /// Closed forms for a single denominator difference `e`:
    /// `(1/pi) sum_p (z/(z^2+e^2), e/(z^2+e^2))` at `z = s + 2Lp`,
    /// the kernels of `B^0_{0,1}(f)` and `B^0_{1,1}(f)` for `e = f(x) - f(x - s)`.
    pub fn single_denominator_pair(&self, s: f64, e: f64) -> (f64, f64) {
        // sum_p 1/(z_p - ie) = w cot(w(s - ie)); cosh 2b - cos 2a = 2(sinh^2 b + sin^2 a).
        let a = self.w * s;
        let b = self.w * e;
        let (sa, ca) = a.sin_cos();
        let sb = b.sinh();
        let scale = self.w / (PI * 2.0 * (sb * sb + sa * sa));
        (2.0 * sa * ca * scale, 2.0 * sb * b.cosh() * scale)
    }
}

/// Evaluates `(1/pi) sum_p R(s + 2Lp)` at the node offsets of one grid for a fixed
/// number of numerator factors. The far-image tails depend only on the offset and are
/// tabulated once.
pub(crate) struct OffsetKernel {
    grid: Grid,
    n_num: usize,
    /// `far[l + n/2][k] = T_{n+1+2k}(l h)`; row for `l = 0` unused.
    far: Vec<[f64; FAR_TERMS + 1]>,
}

impl OffsetKernel {
    pub fn new(grid: Grid, n_num: usize) -> Self {
        let lattice = Lattice::new(grid.half_length());
        let n = grid.len() as i64;
        let h = grid.spacing();
        let far = (-(n / 2)..(n / 2))
            .map(|l| {
                let mut row = [0.0; FAR_TERMS + 1];
                if l != 0 {
                    let s = l as f64 * h;
                    for (k, slot) in row.iter_mut().enumerate() {
                        *slot = lattice.far_image_sum(s, n_num + 1 + 2 * k);
                    }
                }
                row
            })
            .collect();
        OffsetKernel { grid, n_num, far }
    }

    /// Kernel at wrapped offset `l` (`-n/2 <= l < n/2`, `l != 0`).
    pub fn eval(&self, l: i64, num_prod: f64, den_sq: &[f64]) -> f64 {
        let h = self.grid.spacing();
        let s = l as f64 * h;
        let q = self.n_num as i32 + 1;
        let raw = |z: f64| {
            let denom: f64 = den_sq.iter().map(|e2| 1.0 + e2 / (z * z)).product();
            num_prod / (z.powi(q) * denom)
        };
        let period = self.grid.period();
        let mut acc = raw(s);
        for p in 1..=EXPLICIT_IMAGES {
            acc += raw(s + period * p as f64) + raw(s - period * p as f64);
        }
        // Complete homogeneous symmetric polynomials h_k of the e_i^2.
        let mut hk = [0.0; FAR_TERMS + 1];
        hk[0] = 1.0;
        for &e2 in den_sq {
            for k in 1..=FAR_TERMS {
                hk[k] += e2 * hk[k - 1];
            }
        }
        let row = &self.far[(l + self.grid.len() as i64 / 2) as usize];
        let mut far = 0.0;
        for k in (0..=FAR_TERMS).rev() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            far += sign * hk[k] * row[k];
        }
        (acc + num_prod * far) / PI
    }
}
