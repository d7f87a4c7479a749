//! Off-interface evaluation of the layer potentials and their boundary traces.
//!
//! Fields are periodized like the operators: the source sum over `s` uses the image sum
//! `sum_p 1/(z + 2Lp) = w cot(w z)` with `z = (x - s) + i(y - f(s))`, `w = pi / 2L`.
//! Writing `P = w cot(w z)` and `Q = w^2 / sin^2(w z)`, the integrands are
//!
//! ```text
//! velocity          (Im P, Re P) alpha / 2pi
//! U                 Re[(1 + i f') P] phi / 2pi
//! grad U (phi')     (Re P, -Im P) phi' / 2pi
//! grad U (phi)      (-f', 1) [[-Im Q, -Re Q], [-Re Q, Im Q]] phi / 2pi
//! ```
//!
//! Off the interface these are smooth and periodic in `s`, so the trapezoid rule is used.
//! Its error is estimated by comparing with the rule on every other node.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{spectral_antiderivative, spectral_derivative, Grid, GridFunction, Interpolant};
use crate::sio::{apply_bnm, KernelSpec};

/// Which of the two domains `y > f(x)` (plus) or `y < f(x)` (minus) a point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// `+1` above the interface, `-1` below.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// A field value at one off-interface point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample<T> {
    pub point: (f64, f64),
    pub value: T,
    pub side: Side,
    /// `|y - f(x)| / sqrt(1 + f'(x)^2)`, the distance to the tangent line at `x`.
    pub distance: f64,
    /// Closer than one grid spacing; the quadrature error estimate is then unreliable.
    pub near_singular: bool,
    /// Difference between the rules on spacing `h` and `2h`.
    pub error_estimate: f64,
}

/// `U` and its gradient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub u: f64,
    /// Gradient from the `phi'` representation.
    pub grad: [f64; 2],
    /// Gradient from the `phi` representation.
    pub grad_alt: [f64; 2],
    /// `|grad - grad_alt| / |grad|` (absolute if the gradient vanishes).
    pub grad_discrepancy: f64,
}

/// Default normal distances for boundary extrapolation, in units of the grid spacing.
pub const DEFAULT_TRACE_DISTANCES: [f64; 3] = [4.0, 8.0, 16.0];

/// Geometry of an interface `y = f(x)` prepared for repeated field evaluation.
pub struct Interface {
    f: GridFunction,
    df: GridFunction,
    f_interp: Interpolant,
    df_interp: Interpolant,
    w: f64,
}

struct Sums<T> {
    full: T,
    half: T,
}

impl Interface {
    pub fn new(f: &GridFunction) -> Result<Self> {
        let df = spectral_derivative(f, 1)?;
        Ok(Interface {
            f_interp: Interpolant::new(f),
            df_interp: Interpolant::new(&df),
            f: f.clone(),
            df,
            w: PI / (2.0 * f.grid().half_length()),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn profile(&self) -> &GridFunction {
        &self.f
    }

    pub fn slope(&self) -> &GridFunction {
        &self.df
    }

    fn wrap(&self, x: f64) -> f64 {
        let l = self.grid().half_length();
        (x + l).rem_euclid(2.0 * l) - l
    }

    /// Side of `(x, y)` and its distance to the local tangent line. Points on the
    /// interface are rejected.
    pub fn locate(&self, x: f64, y: f64) -> Result<(Side, f64)> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point ({x}, {y})")));
        }
        let gap = y - self.f_interp.eval_periodic(x);
        if gap == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "point ({x}, {y}) lies on the interface"
            )));
        }
        let slope = self.df_interp.eval_periodic(x);
        let side = if gap > 0.0 { Side::Plus } else { Side::Minus };
        Ok((side, gap.abs() / (1.0 + slope * slope).sqrt()))
    }

    /// Trapezoid sums of `kernel(j, P, Q)` over all nodes and over even nodes.
    fn sums<const K: usize>(
        &self,
        x: f64,
        y: f64,
        kernel: impl Fn(usize, Complex<f64>, Complex<f64>) -> [f64; K],
    ) -> Result<Sums<[f64; K]>> {
        let grid = *self.grid();
        let h = grid.spacing();
        let fv = self.f.values();
        let mut full = [0.0; K];
        let mut half = [0.0; K];
        for (j, fj) in fv.iter().enumerate() {
            let z = Complex::new(self.w * (x - grid.node(j)), self.w * (y - fj));
            let cot = z.cos() / z.sin();
            let p = self.w * cot;
            let q = self.w * self.w * (1.0 + cot * cot);
            let vals = kernel(j, p, q);
            for k in 0..K {
                full[k] += vals[k];
                if j % 2 == 0 {
                    half[k] += vals[k];
                }
            }
        }
        let scale = h / (2.0 * PI);
        for k in 0..K {
            full[k] *= scale;
            half[k] *= 2.0 * scale;
        }
        if full.iter().chain(half.iter()).any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite layer potential at ({x}, {y})"
            )));
        }
        Ok(Sums { full, half })
    }

    fn sample<T>(&self, x: f64, y: f64, value: T, est: f64) -> Result<FieldSample<T>> {
        let (side, distance) = self.locate(x, y)?;
        Ok(FieldSample {
            point: (x, y),
            value,
            side,
            distance,
            near_singular: distance < self.grid().spacing(),
            error_estimate: est,
        })
    }

    /// Velocity field `v` of the density `alpha` at `(x, y)`; `x` is taken modulo the period.
    pub fn velocity(&self, alpha: &GridFunction, x: f64, y: f64) -> Result<FieldSample<[f64; 2]>> {
        self.f.same_grid(alpha)?;
        let x = self.wrap(x);
        self.locate(x, y)?;
        let av = alpha.values();
        let s = self.sums(x, y, |j, p, _| [p.im * av[j], p.re * av[j]])?;
        let est = (s.full[0] - s.half[0]).hypot(s.full[1] - s.half[1]);
        self.sample(x, y, s.full, est)
    }

    /// Scalar potential `u` with `grad u = v` for the density `alpha`, defined beyond the
    /// interface (`y > max f` or `y < min f`) and normalized to vanish at the domain-edge
    /// reference point `(-L, +-(max |f| + 1))` on the same side.
    ///
    /// Per source, `u = Im log sin(w z) / 2pi`. Above all sources the branch
    /// `log sin(wz) = log(i/2) - i w z + log(1 - e^{2iwz})` has no cut, below them the
    /// mirror branch is used.
    pub fn velocity_potential(&self, alpha: &GridFunction, x: f64, y: f64) -> Result<f64> {
        self.f.same_grid(alpha)?;
        let (side, _) = self.locate(x, y)?;
        let top = self.f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bottom = self.f.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let beyond = match side {
            Side::Plus => y > top,
            Side::Minus => y < bottom,
        };
        if !beyond {
            return Err(Error::InvalidArgument(format!(
                "velocity potential needs a point beyond the interface, got ({x}, {y})"
            )));
        }
        let y_ref = side.sign() * (self.f.norm_inf() + 1.0);
        let l = self.grid().half_length();
        Ok(self.raw_velocity_potential(alpha, side, x, y)
            - self.raw_velocity_potential(alpha, side, -l, y_ref))
    }

    fn raw_velocity_potential(&self, alpha: &GridFunction, side: Side, x: f64, y: f64) -> f64 {
        let grid = *self.grid();
        let sgn = side.sign();
        let acc: f64 = self
            .f
            .values()
            .iter()
            .zip(alpha.values())
            .enumerate()
            .map(|(j, (fj, aj))| {
                let z = Complex::new(self.w * (x - grid.node(j)), self.w * (y - fj));
                // Im[-+ i w z + log(1 - e^{+-2iwz})]; the constant Im log(+-i/2) is dropped.
                let q = (Complex::new(0.0, 2.0 * sgn) * z).exp();
                let branch = -sgn * z.re + (Complex::new(1.0, 0.0) - q).ln().im;
                aj * branch
            })
            .sum();
        acc * grid.spacing() / (2.0 * PI)
    }

    /// `U` of the density `phi` with both gradient representations.
    pub fn potential(
        &self,
        phi: &GridFunction,
        dphi: &GridFunction,
        x: f64,
        y: f64,
    ) -> Result<FieldSample<PotentialValue>> {
        self.f.same_grid(phi)?;
        self.f.same_grid(dphi)?;
        let x = self.wrap(x);
        self.locate(x, y)?;
        let pv = phi.values();
        let dpv = dphi.values();
        let dfv = self.df.values();
        let s = self.sums(x, y, |j, p, q| {
            let u = (p.re - dfv[j] * p.im) * pv[j];
            let g1 = p.re * dpv[j];
            let g2 = -p.im * dpv[j];
            // (-f', 1) [[-Im Q, -Re Q], [-Re Q, Im Q]]
            let a1 = (dfv[j] * q.im - q.re) * pv[j];
            let a2 = (dfv[j] * q.re + q.im) * pv[j];
            [u, g1, g2, a1, a2]
        })?;
        let [u, g1, g2, a1, a2] = s.full;
        let gnorm = g1.hypot(g2);
        let gdiff = (g1 - a1).hypot(g2 - a2);
        let value = PotentialValue {
            u,
            grad: [g1, g2],
            grad_alt: [a1, a2],
            grad_discrepancy: if gnorm > 0.0 { gdiff / gnorm } else { gdiff },
        };
        let est = (0..3)
            .map(|k| (s.full[k] - s.half[k]).abs())
            .fold(0.0, f64::max);
        self.sample(x, y, value, est)
    }

    /// Point at normal distance `delta` from the interface node `j` on `side`.
    /// The unit normal `(-f', 1) / sqrt(1 + f'^2)` points into the plus domain.
    pub fn offset_point(&self, j: usize, side: Side, delta: f64) -> (f64, f64) {
        let d = self.df.values()[j];
        let norm = (1.0 + d * d).sqrt();
        let t = side.sign() * delta / norm;
        (self.grid().node(j) - d * t, self.f.values()[j] + t)
    }

    /// Unit normal at node `j`.
    pub fn normal(&self, j: usize) -> [f64; 2] {
        let d = self.df.values()[j];
        let norm = (1.0 + d * d).sqrt();
        [-d / norm, 1.0 / norm]
    }

    /// One-sided boundary values of a vector field, extrapolated to distance zero along
    /// the normal from samples at `distances` (in units of `h`).
    pub fn extrapolate_trace<const K: usize>(
        &self,
        side: Side,
        distances: &[f64],
        field: impl Fn(f64, f64) -> Result<[f64; K]>,
    ) -> Result<[GridFunction; K]> {
        if distances.len() < 2 || distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidArgument(
                "trace extrapolation needs at least two positive distances".into(),
            ));
        }
        let grid = *self.grid();
        let h = grid.spacing();
        let n = grid.len();
        let deltas: Vec<f64> = distances.iter().map(|d| d * h).collect();
        let mut out = vec![vec![0.0; n]; K];
        let mut samples = vec![[0.0; K]; deltas.len()];
        for j in 0..n {
            for (slot, &delta) in samples.iter_mut().zip(&deltas) {
                let (x, y) = self.offset_point(j, side, delta);
                *slot = field(x, y)?;
            }
            for k in 0..K {
                let ys: Vec<f64> = samples.iter().map(|s| s[k]).collect();
                out[k][j] = neville_at_zero(&deltas, &ys);
            }
        }
        let mut iter = out.into_iter();
        let fns: Vec<GridFunction> = (0..K)
            .map(|_| GridFunction::new(grid, iter.next().expect("K rows")))
            .collect::<Result<_>>()?;
        Ok(fns.try_into().unwrap_or_else(|_| unreachable!("K rows")))
    }
}

/// Value at `0` of the polynomial through `(xs[i], ys[i])`.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut p = ys.to_vec();
    let m = xs.len();
    for level in 1..m {
        for i in 0..(m - level) {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Velocity of the density `alpha` at `point`.
pub fn eval_velocity(
    f: &GridFunction,
    alpha: &GridFunction,
    point: (f64, f64),
) -> Result<FieldSample<[f64; 2]>> {
    Interface::new(f)?.velocity(alpha, point.0, point.1)
}

/// `U` of the density `phi` at `point` with both gradient formulas.
pub fn eval_u_and_grad(
    f: &GridFunction,
    phi: &GridFunction,
    point: (f64, f64),
) -> Result<FieldSample<PotentialValue>> {
    let dphi = spectral_derivative(phi, 1)?;
    Interface::new(f)?.potential(phi, &dphi, point.0, point.1)
}

/// Boundary values of the velocity on `side`: the principal value part from the
/// alternate-point rule plus the local term `-+ alpha (1, f') / (2(1 + f'^2))`.
pub fn trace_velocity(
    f: &GridFunction,
    alpha: &GridFunction,
    side: Side,
) -> Result<(GridFunction, GridFunction)> {
    f.same_grid(alpha)?;
    let df = spectral_derivative(f, 1)?;
    let b01 = apply_bnm(&KernelSpec::uniform(f, 0, 1), alpha)?;
    let b11 = apply_bnm(&KernelSpec::uniform(f, 1, 1), alpha)?;
    let sgn = side.sign();
    let local = alpha.zip_with(&df, |a, d| -0.5 * sgn * a / (1.0 + d * d))?;
    let v1 = (&b11.scale(-0.5) + &local)?;
    let v2 = (&b01.scale(0.5) + &(&local * &df)?)?;
    Ok((v1, v2))
}

/// Boundary values of the velocity on `side` by normal extrapolation of the field.
pub fn extrapolated_trace_velocity(
    f: &GridFunction,
    alpha: &GridFunction,
    side: Side,
    distances: &[f64],
) -> Result<(GridFunction, GridFunction)> {
    let iface = Interface::new(f)?;
    let [v1, v2] = iface.extrapolate_trace(side, distances, |x, y| {
        Ok(iface.velocity(alpha, x, y)?.value)
    })?;
    Ok((v1, v2))
}

/// Boundary values of `U` and of its normal derivative on `side` by normal extrapolation.
pub fn extrapolated_trace_potential(
    f: &GridFunction,
    phi: &GridFunction,
    side: Side,
    distances: &[f64],
) -> Result<(GridFunction, GridFunction)> {
    let iface = Interface::new(f)?;
    let dphi = spectral_derivative(phi, 1)?;
    let [u, g1, g2] = iface.extrapolate_trace(side, distances, |x, y| {
        let v = iface.potential(phi, &dphi, x, y)?.value;
        Ok([v.u, v.grad[0], v.grad[1]])
    })?;
    let grid = *f.grid();
    let dn = GridFunction::new(
        grid,
        (0..grid.len())
            .map(|j| {
                let nu = iface.normal(j);
                nu[0] * g1.values()[j] + nu[1] * g2.values()[j]
            })
            .collect(),
    )?;
    Ok((u, dn))
}

/// Potential along the interface from its tangential derivative `(1, f') . v`,
/// normalized to vanish at the left domain edge.
pub fn reconstruct_boundary_potential(
    f: &GridFunction,
    trace: &(GridFunction, GridFunction),
) -> Result<GridFunction> {
    let df = spectral_derivative(f, 1)?;
    let tangential = (&trace.0 + &(&df * &trace.1)?)?;
    let u = spectral_antiderivative(&tangential)?;
    let edge = u.values()[0];
    u.map(|v| v - edge)
}

/// `|five-point Laplacian|` of a scalar field at `point` with spacing `step`. The five
/// stencil points must lie on one side of the interface `f`.
pub fn harmonicity_residual(
    field: impl Fn(f64, f64) -> Result<f64>,
    f: &GridFunction,
    point: (f64, f64),
    step: f64,
) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stencil step must be positive, got {step}"
        )));
    }
    let iface = Interface::new(f)?;
    let (x, y) = point;
    let stencil = [(x, y), (x + step, y), (x - step, y), (x, y + step), (x, y - step)];
    let (side, _) = iface.locate(x, y)?;
    for &(px, py) in &stencil[1..] {
        match iface.locate(px, py) {
            Ok((s, _)) if s == side => {}
            _ => {
                return Err(Error::InvalidStencil(format!(
                    "stencil at ({x}, {y}) with step {step} crosses the interface"
                )))
            }
        }
    }
    let v: Vec<f64> = stencil
        .iter()
        .map(|&(px, py)| field(px, py))
        .collect::<Result<_>>()?;
    Ok(((v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / (step * step)).abs())
}
