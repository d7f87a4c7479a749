//! The evolution `df/dt = Phi(f)[f]` with
//!
//! ```text
//! Phi(f)[h] = ( B(f)* [ ((-1 - A(f)*)^{-1} - (1 - A(f)*)^{-1}) [ kappa(f)[h] ] ] )'
//! ```
//!
//! and its semi-implicit time stepping. At the flat interface `Phi(0) = 2 H d^3/dx^3`,
//! whose symbol under the `-i sgn(k)` Hilbert convention is `sigma(k) = -2|k|^3`. That
//! multiplier is treated implicitly and the rest of `Phi(f)[f]` explicitly.

pub mod curvature;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{self, apply_symbol, spectral_derivative, Grid, GridFunction};
use crate::resolvent::{Operator, Resolvent, SolverOptions};
use crate::sio::apply_b;

pub use curvature::{curvature, curvature_op};

/// Spectral-tail fraction above which a state is no longer trusted.
pub const RESOLUTION_GUARD: f64 = 0.1;

/// Default slope beyond which a run stops with a blow-up diagnosis.
pub const DEFAULT_MAX_SLOPE: f64 = 10.0;

/// Slopes beyond this make the curvature evaluation itself meaningless.
const SLOPE_OVERFLOW: f64 = 1e6;

/// Symbol of the flat-interface linearization, `-2|k|^3`.
pub fn linear_symbol(k: f64) -> f64 {
    -2.0 * k.abs().powi(3)
}

/// `Phi(0)[f]` as a Fourier multiplier.
pub fn apply_linear_part(f: &GridFunction) -> Result<GridFunction> {
    apply_symbol(f, |k, _| Complex::new(linear_symbol(k), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `int f dx`
    pub mass: f64,
    /// `int (sqrt(1 + f'^2) - 1) dx`
    pub energy: f64,
    pub max_slope: f64,
    pub linf: f64,
    pub spectral_tail: f64,
}

pub fn diagnostics(f: &GridFunction) -> Result<Diagnostics> {
    let df = spectral_derivative(f, 1)?;
    let h = f.grid().spacing();
    // sqrt(1 + d^2) - 1 without cancellation.
    let energy = h * df
        .values()
        .iter()
        .map(|d| d * d / ((1.0 + d * d).sqrt() + 1.0))
        .sum::<f64>();
    Ok(Diagnostics {
        mass: f.integral(),
        energy,
        max_slope: df.norm_inf(),
        linf: f.norm_inf(),
        spectral_tail: f.spectral_tail(),
    })
}

/// `Phi(f)[f]`: curvature, two resolvent solves with `A(f)*`, `B(f)*`, outer derivative.
/// The outer derivative is spectral, so the result has zero mean.
pub fn rhs_phi(f: &GridFunction, opts: &SolverOptions) -> Result<GridFunction> {
    let max_slope = spectral_derivative(f, 1)?.norm_inf();
    if !(max_slope <= SLOPE_OVERFLOW) {
        return Err(Error::BlowUpSuspected { max_slope });
    }
    if f.norm_inf() == 0.0 {
        return Ok(GridFunction::zeros(*f.grid()));
    }
    let kappa = curvature_op(f, f)?;
    let a_star = Resolvent::new(f, Operator::AStar, *opts)?;
    let minus = a_star.solve(-1.0, &kappa)?;
    let plus = a_star.solve(1.0, &kappa)?;
    let density = (&minus.solution - &plus.solution)?;
    let flux = apply_b(f, &density, true)?;
    spectral_derivative(&flux, 1)
}

/// Time, profile and diagnostics after `step_index` steps.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub t: f64,
    pub f: GridFunction,
    pub step_index: usize,
    pub diagnostics: Diagnostics,
}

impl SimulationState {
    pub fn new(f: GridFunction, t: f64) -> Result<Self> {
        let diagnostics = diagnostics(&f)?;
        Ok(SimulationState {
            t,
            f,
            step_index: 0,
            diagnostics,
        })
    }

    /// Passes the resolution guard.
    pub fn is_trusted(&self) -> bool {
        self.diagnostics.spectral_tail <= RESOLUTION_GUARD
    }
}

/// Semi-implicit Euler update `(1 - dt sigma(k)) f_new^ = f^ + dt N^`.
pub fn imex_update(f: &GridFunction, nonlinear: &GridFunction, dt: f64) -> Result<GridFunction> {
    f.same_grid(nonlinear)?;
    let grid = *f.grid();
    let mut fh = grid::forward(f.values());
    let nh = grid::forward(nonlinear.values());
    for (idx, (c, nc)) in fh.iter_mut().zip(&nh).enumerate() {
        let k = grid.wavenumber(idx);
        *c = (*c + dt * nc) / (1.0 - dt * linear_symbol(k));
    }
    GridFunction::new(grid, grid::inverse_real(fh))
}

/// One semi-implicit Euler step of `df/dt = Phi(f)[f]`.
pub fn imex_step(
    state: &SimulationState,
    dt: f64,
    opts: &SolverOptions,
) -> Result<SimulationState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !state.is_trusted() {
        return Err(Error::StepRefused(format!(
            "spectral tail {:.3e} exceeds {RESOLUTION_GUARD}; halve dt or refine the grid",
            state.diagnostics.spectral_tail
        )));
    }
    let full = rhs_phi(&state.f, opts)?;
    let nonlinear = (&full - &apply_linear_part(&state.f)?)?;
    let f = imex_update(&state.f, &nonlinear, dt)?;
    let diagnostics = diagnostics(&f)?;
    Ok(SimulationState {
        t: state.t + dt,
        f,
        step_index: state.step_index + 1,
        diagnostics,
    })
}

/// Smooth bump supported in `|x| < radius`, equal to 1 at the origin.
pub fn bump_window(x: f64, radius: f64) -> f64 {
    let r = x / radius;
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// `amplitude * exp(-x^2)`.
pub fn gaussian_profile(grid: Grid, amplitude: f64) -> Result<GridFunction> {
    GridFunction::from_fn(grid, |x| amplitude * (-x * x).exp())
}

/// `amplitude * cos(k x) * bump(x)` with the bump supported on `|x| < 0.8 L`.
pub fn cosine_packet(grid: Grid, amplitude: f64, wavenumber: f64) -> Result<GridFunction> {
    let radius = 0.8 * grid.half_length();
    GridFunction::from_fn(grid, |x| {
        amplitude * (wavenumber * x).cos() * bump_window(x, radius)
    })
}

/// Numerical settings of one trajectory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub initial: GridFunction,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub solver: SolverOptions,
    /// Largest admissible `tail_ratio` of the initial profile.
    pub tail_threshold: f64,
    pub max_slope: f64,
}

impl RunConfig {
    pub fn new(initial: GridFunction, dt: f64, t_end: f64) -> Self {
        RunConfig {
            initial,
            dt,
            t_end,
            snapshot_every: 1,
            solver: SolverOptions::default(),
            tail_threshold: 1e-10,
            max_slope: DEFAULT_MAX_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Configuration {
                field: field.to_string(),
                message,
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("stepping.dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("stepping.t_end", format!("must be positive, got {}", self.t_end));
        }
        if self.snapshot_every == 0 {
            return bad("stepping.snapshot_every", "must be at least 1".into());
        }
        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) {
            return bad("tolerances.solver_tol", format!("must be positive, got {}", self.solver.tol));
        }
        let tail = self.initial.tail_ratio();
        if tail > self.tail_threshold {
            return bad(
                "initial",
                format!(
                    "profile does not decay: tail ratio {tail:.3e} above threshold {:.1e}",
                    self.tail_threshold
                ),
            );
        }
        Ok(())
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Completed,
    BlowUpSuspected { max_slope: f64 },
    ResolutionLost { spectral_tail: f64 },
    Failed(Error),
}

impl StopReason {
    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::BlowUpSuspected { .. } => "blow_up_suspected",
            StopReason::ResolutionLost { .. } => "resolution_lost",
            StopReason::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at step 0, every `snapshot_every` steps, and the final step.
    pub snapshots: Vec<SimulationState>,
    /// `(t, diagnostics)` after every step, starting at `t = 0`.
    pub diagnostics: Vec<(f64, Diagnostics)>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &SimulationState {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Steps from `config.initial` until `t_end` or a stop condition. Mid-run failures end
/// the run and are returned as the stop reason with the partial trajectory.
pub fn run_simulation(config: &RunConfig) -> Result<Trajectory> {
    run_simulation_with(config, |_| {})
}

/// As [`run_simulation`], calling `observer` after every accepted step.
pub fn run_simulation_with(
    config: &RunConfig,
    mut observer: impl FnMut(&SimulationState),
) -> Result<Trajectory> {
    config.validate()?;
    let mut state = SimulationState::new(config.initial.clone(), 0.0)?;
    let mut snapshots = vec![state.clone()];
    let mut diags = vec![(0.0, state.diagnostics)];
    let n_steps = (config.t_end / config.dt * (1.0 - 1e-12)).ceil() as usize;
    let mut stop = StopReason::Completed;

    for step in 1..=n_steps {
        if state.diagnostics.max_slope > config.max_slope {
            stop = StopReason::BlowUpSuspected {
                max_slope: state.diagnostics.max_slope,
            };
            break;
        }
        if !state.is_trusted() {
            stop = StopReason::ResolutionLost {
                spectral_tail: state.diagnostics.spectral_tail,
            };
            break;
        }
        let t_target = (step as f64 * config.dt).min(config.t_end);
        let dt = t_target - state.t;
        match imex_step(&state, dt, &config.solver) {
            Ok(mut next) => {
                next.t = t_target;
                state = next;
            }
            Err(Error::BlowUpSuspected { max_slope }) => {
                stop = StopReason::BlowUpSuspected { max_slope };
                break;
            }
            Err(e) => {
                stop = StopReason::Failed(e);
                break;
            }
        }
        diags.push((state.t, state.diagnostics));
        observer(&state);
        if step % config.snapshot_every == 0 || step == n_steps {
            snapshots.push(state.clone());
        }
    }
    if snapshots.last().map(|s| s.step_index) != Some(state.step_index) {
        snapshots.push(state);
    }
    Ok(Trajectory {
        snapshots,
        diagnostics: diags,
        stop,
    })
}
