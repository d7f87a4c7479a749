//! Linearized decay and parabolic scaling experiments behind `decay-test` and
//! `scaling-test`.

use crate::evolution::{cosine_packet, imex_step, linear_symbol, SimulationState};
use crate::grid::fourier_coefficients;
use crate::resolvent::SolverOptions;
use crate::{Error, Grid, GridFunction, Result};

/// Relative tolerance on the fitted decay rate.
pub const DECAY_TOLERANCE: f64 = 1e-2;
/// Amplitude of the windowed cosine data.
pub const DECAY_AMPLITUDE: f64 = 1e-4;
/// Max-norm scaling defect bound, relative to `|f0|_inf`.
pub const SCALING_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub wavenumber: f64,
    pub measured_rate: f64,
    pub expected_rate: f64,
    pub rel_error: f64,
    pub t_fit: f64,
    pub steps: usize,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.rel_error <= DECAY_TOLERANCE
    }
}

/// Least-squares slope of `ys` against `ts`.
pub fn fit_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let den: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    num / den
}

/// Evolves `DECAY_AMPLITUDE * cos(k x) * bump(x)` for `t_fit` and fits the decay rate
/// of the Fourier coefficient at wavenumber `k`, which must lie on the grid.
pub fn decay_experiment(
    grid: Grid,
    wavenumber: f64,
    dt: f64,
    t_fit: f64,
    opts: &SolverOptions,
) -> Result<DecayReport> {
    let slot = grid.slot_of_wavenumber(wavenumber).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "wavenumber {wavenumber} is not a multiple of pi / L = {}",
            std::f64::consts::PI / grid.half_length()
        ))
    })?;
    if !(dt > 0.0 && t_fit >= 2.0 * dt) {
        return Err(Error::InvalidArgument(format!("fit window {t_fit} too short for dt {dt}")));
    }
    let steps = (t_fit / dt).round() as usize;
    let f0 = cosine_packet(grid, DECAY_AMPLITUDE, wavenumber)?;
    let mut state = SimulationState::new(f0, 0.0)?;
    let mut ts = vec![0.0];
    let mut logs = vec![fourier_coefficients(&state.f)[slot].norm().ln()];
    for _ in 0..steps {
        state = imex_step(&state, dt, opts)?;
        ts.push(state.t);
        logs.push(fourier_coefficients(&state.f)[slot].norm().ln());
    }
    let measured_rate = -fit_slope(&ts, &logs);
    let expected_rate = -linear_symbol(wavenumber);
    Ok(DecayReport {
        wavenumber,
        measured_rate,
        expected_rate,
        rel_error: (measured_rate / expected_rate - 1.0).abs(),
        t_fit: state.t,
        steps,
    })
}

/// Fit window over which the mode decays by one e-fold.
pub fn default_fit_window(wavenumber: f64) -> f64 {
    1.0 / -linear_symbol(wavenumber)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub lambda: f64,
    pub t: f64,
    pub steps: usize,
    /// `max_j |f_lambda(t, x_j / lambda) - f(lambda^3 t, x_j) / lambda|`.
    pub defect: f64,
    pub bound: f64,
}

impl ScalingReport {
    pub fn passed(&self) -> bool {
        self.defect <= self.bound
    }
}

fn evolve(f0: GridFunction, dt: f64, steps: usize, opts: &SolverOptions) -> Result<GridFunction> {
    let mut s = SimulationState::new(f0, 0.0)?;
    for _ in 0..steps {
        s = imex_step(&s, dt, opts)?;
    }
    Ok(s.f)
}

/// Compares the flow of `f_lambda(0, x) = f0(lambda x) / lambda` on the grid scaled by
/// `1 / lambda` with the rescaled flow of `f0`. Both runs take the same number of steps,
/// `dt` and `lambda^3 dt`, so node `j` of one grid maps to node `j` of the other.
pub fn scaling_experiment(
    f0: &GridFunction,
    lambda: f64,
    dt: f64,
    t: f64,
    opts: &SolverOptions,
) -> Result<ScalingReport> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {lambda}")));
    }
    if !(dt > 0.0 && t >= dt) {
        return Err(Error::InvalidArgument(format!("final time {t} shorter than dt {dt}")));
    }
    let grid = *f0.grid();
    let scaled = Grid::new(grid.half_length() / lambda, grid.len())?;
    let g0 = GridFunction::new(scaled, f0.scale(1.0 / lambda).into_values())?;
    let steps = (t / dt).round() as usize;
    let big = evolve(f0.clone(), dt * lambda.powi(3), steps, opts)?;
    let small = evolve(g0, dt, steps, opts)?;
    let defect = small
        .values()
        .iter()
        .zip(big.values())
        .map(|(a, b)| (a - b / lambda).abs())
        .fold(0.0, f64::max);
    Ok(ScalingReport {
        lambda,
        t: steps as f64 * dt,
        steps,
        defect,
        bound: SCALING_TOLERANCE * f0.norm_inf(),
    })
}
