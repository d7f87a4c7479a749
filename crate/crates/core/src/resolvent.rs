//! Dense resolvent solves `(lambda - A(f)) x = b`, `(lambda - A(f)*) x = b` and the layer
//! densities built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evolution::curvature;
use crate::grid::{spectral_derivative, GridFunction};
use crate::sio::lattice::Lattice;

/// Which operator a matrix realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    A,
    AStar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual bound `|(lambda - M)x - b| <= tol |b|`.
    pub tol: f64,
    /// Largest grid size for which a dense matrix is assembled.
    pub max_n: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_n: 4096,
        }
    }
}

/// Matrix of `A(f)` or `A(f)*` acting on sample vectors. Column `i` is the operator
/// applied to the `i`-th nodal impulse under the alternate-point rule.
pub fn assemble_operator_matrix(f: &GridFunction, which: Operator) -> Result<DMatrix<f64>> {
    assemble_operator_matrix_with(f, which, &SolverOptions::default())
}

pub fn assemble_operator_matrix_with(
    f: &GridFunction,
    which: Operator,
    opts: &SolverOptions,
) -> Result<DMatrix<f64>> {
    let grid = *f.grid();
    let n = grid.len();
    if n > opts.max_n {
        return Err(Error::ResourceLimit {
            n,
            cap: opts.max_n,
        });
    }
    let h = grid.spacing();
    let lattice = Lattice::new(grid.half_length());
    let df = spectral_derivative(f, 1)?;
    let fv = f.values();
    let dfv = df.values();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in ((1 - i % 2)..n).step_by(2) {
            let s = grid.wrap_offset(j as i64 - i as i64) as f64 * h;
            let (k01, k11) = lattice.single_denominator_pair(s, fv[j] - fv[i]);
            let entry = match which {
                Operator::A => dfv[j] * k01 - k11,
                Operator::AStar => k11 - k01 * dfv[i],
            };
            m[(j, i)] = 2.0 * h * entry;
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite operator matrix entry"));
    }
    Ok(m)
}

/// Solution of one resolvent equation together with its relative residual.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub solution: GridFunction,
    pub residual: f64,
}

/// Assembled `A(f)` or `A(f)*`, ready for solves at several `lambda`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    profile: GridFunction,
    which: Operator,
    matrix: DMatrix<f64>,
    opts: SolverOptions,
}

impl Resolvent {
    pub fn new(f: &GridFunction, which: Operator, opts: SolverOptions) -> Result<Self> {
        let matrix = assemble_operator_matrix_with(f, which, &opts)?;
        Ok(Resolvent {
            profile: f.clone(),
            which,
            matrix,
            opts,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn which(&self) -> Operator {
        self.which
    }

    fn shifted(&self, lambda: f64) -> DMatrix<f64> {
        let mut m = -&self.matrix;
        for d in 0..m.nrows() {
            m[(d, d)] += lambda;
        }
        m
    }

    /// Solves `(lambda - M) x = rhs` by LU factorization.
    pub fn solve(&self, lambda: f64, rhs: &GridFunction) -> Result<ResolventSolution> {
        check_lambda(lambda)?;
        self.profile.same_grid(rhs)?;
        let grid = *rhs.grid();
        let b = DVector::from_column_slice(rhs.values());
        let bnorm = b.norm();
        if bnorm == 0.0 {
            return Ok(ResolventSolution {
                solution: GridFunction::zeros(grid),
                residual: 0.0,
            });
        }
        let op = self.shifted(lambda);
        let lu = op.clone().lu();
        let x = match lu.solve(&b) {
            Some(x) => x,
            None => {
                return Err(Error::NumericalFailure {
                    message: format!("singular resolvent matrix at lambda = {lambda}"),
                    node: None,
                    condition: Some(f64::INFINITY),
                })
            }
        };
        let residual = (&op * &x - &b).norm() / bnorm;
        if !(residual <= self.opts.tol) {
            return Err(Error::NumericalFailure {
                message: format!(
                    "resolvent residual {residual:.3e} above tolerance {:.1e}",
                    self.opts.tol
                ),
                node: None,
                condition: Some(self.condition_estimate(lambda)),
            });
        }
        Ok(ResolventSolution {
            solution: GridFunction::new(grid, x.as_slice().to_vec())?,
            residual,
        })
    }

    /// 1-norm condition estimate of `lambda - M` (Hager's estimator for the inverse).
    pub fn condition_estimate(&self, lambda: f64) -> f64 {
        let op = self.shifted(lambda);
        let n = op.nrows();
        let norm1 = (0..n)
            .map(|c| op.column(c).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = op.clone().lu();
        let lu_t = op.transpose().lu();
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate = 0.0;
        for _ in 0..5 {
            let Some(y) = lu.solve(&x) else {
                return f64::INFINITY;
            };
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let Some(z) = lu_t.solve(&xi) else {
                return f64::INFINITY;
            };
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            if zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[jmax] = 1.0;
        }
        norm1 * estimate
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda.abs() >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "|lambda| must be at least 1, got {lambda}"
        )));
    }
    Ok(())
}

/// One-shot solve of `(lambda - A(f)) x = rhs` or `(lambda - A(f)*) x = rhs`.
pub fn solve_resolvent(
    lambda: f64,
    f: &GridFunction,
    rhs: &GridFunction,
    which: Operator,
    opts: SolverOptions,
) -> Result<ResolventSolution> {
    check_lambda(lambda)?;
    f.same_grid(rhs)?;
    Resolvent::new(f, which, opts)?.solve(lambda, rhs)
}

/// Layer densities of the two Dirichlet problems for a profile `f`:
/// `alpha_pm = 2(-+1 + A(f))^{-1}[kappa(f)']` and `beta_pm = 2(-+1 - A(f)*)^{-1}[kappa(f)]`.
#[derive(Debug, Clone)]
pub struct DensitySet {
    pub alpha_plus: GridFunction,
    pub alpha_minus: GridFunction,
    pub beta_plus: GridFunction,
    pub beta_minus: GridFunction,
    pub profile: GridFunction,
    /// Relative residuals of the solves for alpha+, alpha-, beta+, beta-.
    pub residuals: [f64; 4],
    /// `|beta_pm' - alpha_pm| / |alpha_pm|` for the + and - side.
    pub derivative_defect: [f64; 2],
}

pub fn compute_densities(f: &GridFunction, opts: SolverOptions) -> Result<DensitySet> {
    let kappa = curvature::curvature(f)?;
    let dkappa = spectral_derivative(&kappa, 1)?;

    let a = Resolvent::new(f, Operator::A, opts)?;
    // 2(-1 + A)^{-1} = -2(1 - A)^{-1}, 2(1 + A)^{-1} = -2(-1 - A)^{-1}.
    let ap = a.solve(1.0, &dkappa)?;
    let am = a.solve(-1.0, &dkappa)?;
    let a_star = Resolvent::new(f, Operator::AStar, opts)?;
    let bp = a_star.solve(-1.0, &kappa)?;
    let bm = a_star.solve(1.0, &kappa)?;

    let alpha_plus = ap.solution.scale(-2.0);
    let alpha_minus = am.solution.scale(-2.0);
    let beta_plus = bp.solution.scale(2.0);
    let beta_minus = bm.solution.scale(2.0);

    let defect = |beta: &GridFunction, alpha: &GridFunction| -> Result<f64> {
        spectral_derivative(beta, 1)?.rel_l2_distance(alpha)
    };
    let derivative_defect = [
        defect(&beta_plus, &alpha_plus)?,
        defect(&beta_minus, &alpha_minus)?,
    ];
    Ok(DensitySet {
        alpha_plus,
        alpha_minus,
        beta_plus,
        beta_minus,
        profile: f.clone(),
        residuals: [ap.residual, am.residual, bp.residual, bm.residual],
        derivative_defect,
    })
}
