//! Operator-identity suite run by `msflow check`.
//!
//! Profiles are fixed; densities and right-hand sides are random Gaussian bumps drawn
//! from a ChaCha stream seeded by the configuration seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evolution::curvature;
use crate::grid::spectral_derivative;
use crate::potential::{
    eval_u_and_grad, extrapolated_trace_potential, extrapolated_trace_velocity,
    harmonicity_residual, reconstruct_boundary_potential, Side, DEFAULT_TRACE_DISTANCES,
};
use crate::resolvent::{compute_densities, solve_resolvent, Operator, SolverOptions};
use crate::sio::{apply_a, apply_b, apply_bnm, oracle_apply_bnm, KernelSpec};
use crate::{Grid, GridFunction, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
}

impl CheckResult {
    fn new(name: impl Into<String>, measured: f64, bound: Bound) -> Self {
        CheckResult {
            name: name.into(),
            measured,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost(b) => self.measured <= b,
            Bound::AtLeast(b) => self.measured >= b,
        }
    }
}

fn gauss(grid: Grid, amp: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| amp * (-x * x).exp()).expect("finite samples")
}

/// Random bump `a exp(-((x - c) / w)^2)` with `|a|` in [0.5, 1.5], `c` in [-0.5, 0.5]
/// and `w` in [0.6, 0.9]; below 1e-10 at the edges of every grid used here (L >= 5).
fn random_bump(grid: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let a = sign * rng.random_range(0.5..1.5);
    let c = rng.random_range(-0.5..0.5);
    let w = rng.random_range(0.6..0.9);
    GridFunction::from_fn(grid, |x: f64| a * (-((x - c) / w).powi(2)).exp()).expect("finite samples")
}

fn variation(u: &GridFunction) -> f64 {
    let hi = u.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = u.values().iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

type Op = fn(&GridFunction, &GridFunction, bool) -> Result<GridFunction>;

fn adjoint_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let grid = Grid::new(10.0, 256)?;
    let f = gauss(grid, 0.4);
    let alpha = random_bump(grid, rng);
    let beta = random_bump(grid, rng).zip_with(&GridFunction::from_fn(grid, |x| x)?, |b, x| b * x)?;
    for (op, name) in [(apply_a as Op, "A"), (apply_b as Op, "B")] {
        let lhs = op(&f, &alpha, false)?.dot(&beta)?;
        let rhs = alpha.dot(&op(&f, &beta, true)?)?;
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        out.push(CheckResult::new(format!("adjoint pairing {name}(f)"), rel, Bound::AtMost(1e-8)));
    }
    Ok(())
}

/// Observed order of `|(M* beta)' + M[beta']|` over n = 256, 512, 1024 at L = 40.
fn derivative_order_checks(out: &mut Vec<CheckResult>) -> Result<()> {
    for (op, name) in [(apply_a as Op, "A"), (apply_b as Op, "B")] {
        let mut defects = vec![];
        for n in [256, 512, 1024] {
            let grid = Grid::new(40.0, n)?;
            let f = gauss(grid, 0.3);
            let beta = gauss(grid, 1.0);
            let lhs = spectral_derivative(&op(&f, &beta, true)?, 1)?;
            let rhs = op(&f, &spectral_derivative(&beta, 1)?, false)?;
            defects.push((&lhs + &rhs)?.norm_l2());
        }
        let order = defects
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
        out.push(CheckResult::new(
            format!("derivative identity {name}(f), observed order"),
            order,
            Bound::AtLeast(2.0),
        ));
    }
    Ok(())
}

fn oracle_checks(rng: &mut ChaCha8Rng, out: &mut Vec<CheckResult>) -> Result<()> {
    let grid = Grid::new(5.0, 128)?;
    let f = gauss(grid, 0.5);
    let alpha = random_bump(grid, rng);
    for (n, m) in [(0, 1), (1, 1), (2, 1)] {
        let spec = KernelSpec::uniform(&f, n, m);
        let rel = apply_bnm(&spec, &alpha)?.rel_l2_distance(&oracle_apply_bnm(&spec, &alpha)?)?;
        out.push(CheckResult::new(format!("B0_({n},{m}) vs oracle"), rel, Bound::AtMost(1e-12)));
    }
    Ok(())
}

fn resolvent_checks(rng: &mut ChaCha8Rng, opts: SolverOptions, out: &mut Vec<CheckResult>) -> Result<()> {
    let grid = Grid::new(10.0, 512)?;
    let f = gauss(grid, 0.3);
    let b = random_bump(grid, rng);
    let mut worst: f64 = 0.0;
    for which in [Operator::A, Operator::AStar] {
        for lambda in [1.0, -1.0] {
            let sol = solve_resolvent(lambda, &f, &b, which, opts)?;
            let applied = apply_a(&f, &sol.solution, which == Operator::AStar)?;
            let lhs = (&sol.solution.scale(lambda) - &applied)?;
            worst = worst.max(lhs.rel_l2_distance(&b)?);
        }
    }
    out.push(CheckResult::new("resolvent residual, lambda = +-1", worst, Bound::AtMost(opts.tol)));

    // Neumann partial sums against the direct solve.
    let grid = Grid::new(10.0, 256)?;
    let f = gauss(grid, 0.3);
    let b = random_bump(grid, rng);
    let direct = solve_resolvent(1.0, &f, &b, Operator::A, opts)?.solution;
    let (mut term, mut acc) = (b.clone(), GridFunction::zeros(grid));
    let mut errs = vec![];
    for _ in 0..14 {
        acc = (&acc + &term)?;
        errs.push(acc.rel_l2_distance(&direct)?);
        term = apply_a(&f, &term, false)?;
    }
    let ratio = errs
        .windows(2)
        .filter(|w| w[0] > 1e-12)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    out.push(CheckResult::new("Neumann series contraction ratio", ratio, Bound::AtMost(0.5)));
    Ok(())
}

fn density_checks(opts: SolverOptions, out: &mut Vec<CheckResult>) -> Result<()> {
    let grid = Grid::new(10.0, 512)?;
    let d = compute_densities(&gauss(grid, 0.3), opts)?;
    let plus = spectral_derivative(&d.beta_plus, 1)?.rel_l2_distance(&d.alpha_plus)?;
    let minus = spectral_derivative(&d.beta_minus, 1)?.rel_l2_distance(&d.alpha_minus)?;
    out.push(CheckResult::new("density identity (beta)' = alpha", plus.max(minus), Bound::AtMost(1e-6)));
    Ok(())
}

fn potential_checks(rng: &mut ChaCha8Rng, opts: SolverOptions, out: &mut Vec<CheckResult>) -> Result<()> {
    let grid = Grid::new(10.0, 256)?;
    let f = gauss(grid, 0.3);
    let phi = random_bump(grid, rng);
    let mut worst: f64 = 0.0;
    for point in [(0.5, 2.0), (-1.0, 1.0), (2.0, -1.5)] {
        worst = worst.max(eval_u_and_grad(&f, &phi, point)?.value.grad_discrepancy);
    }
    out.push(CheckResult::new("dual gradient formulas", worst, Bound::AtMost(1e-8)));

    let u = |x, y| Ok(eval_u_and_grad(&f, &phi, (x, y))?.value.u);
    let r: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&s| harmonicity_residual(u, &f, (0.5, 2.0), s))
        .collect::<Result<_>>()?;
    let order = (r[0] / r[1]).log2().min((r[1] / r[2]).log2());
    out.push(CheckResult::new("harmonicity residual, observed order", order, Bound::AtLeast(1.8)));

    let grid = Grid::new(5.0, 1024)?;
    let f = gauss(grid, 0.3);
    let df = spectral_derivative(&f, 1)?;
    let phi = gauss(grid, 1.0);
    let (_, dn_plus) = extrapolated_trace_potential(&f, &phi, Side::Plus, &DEFAULT_TRACE_DISTANCES)?;
    let (_, dn_minus) = extrapolated_trace_potential(&f, &phi, Side::Minus, &DEFAULT_TRACE_DISTANCES)?;
    let expect = spectral_derivative(&phi, 1)?.zip_with(&df, |a, d| a / (1.0 + d * d).sqrt())?;
    let jump = (&dn_plus - &dn_minus)?.rel_l2_distance(&expect)?;
    out.push(CheckResult::new("normal-derivative jump of U", jump, Bound::AtMost(1e-3)));

    let kappa = curvature(&f)?;
    let d = compute_densities(&f, opts)?;
    let mut var: f64 = 0.0;
    for (side, alpha) in [(Side::Plus, &d.alpha_plus), (Side::Minus, &d.alpha_minus)] {
        let v = extrapolated_trace_velocity(&f, alpha, side, &[4.0, 5.0, 6.0, 7.0, 8.0])?;
        let u = reconstruct_boundary_potential(&f, &v)?;
        var = var.max(variation(&(&u - &kappa)?));
    }
    out.push(CheckResult::new("Dirichlet trace u - kappa, variation", var, Bound::AtMost(1e-4)));
    Ok(())
}

/// Runs every identity check, in a fixed order.
pub fn run_identity_suite(seed: u64, opts: SolverOptions) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    adjoint_checks(&mut rng, &mut out)?;
    derivative_order_checks(&mut out)?;
    oracle_checks(&mut rng, &mut out)?;
    resolvent_checks(&mut rng, opts, &mut out)?;
    density_checks(opts, &mut out)?;
    potential_checks(&mut rng, opts, &mut out)?;
    Ok(out)
}
