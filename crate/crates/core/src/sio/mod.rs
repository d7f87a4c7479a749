//! Singular integral operators `B_{n,m}`, the operators `A(f)`, `B(f)` and their adjoints.
//!
//! ```text
//! B_{n,m}(a)[b, alpha](x) = (1/pi) PV int  prod_i (d_s b_i / s)
//!                                         / prod_i (1 + (d_s a_i / s)^2)  alpha(x - s) / s  ds
//! d_s u = u(x) - u(x - s)
//! ```
//!
//! The line is periodized, so each kernel is summed over the periodic images (see
//! [`lattice`]). The principal value is realized with the alternate-point trapezoid
//! rule: for target node `j` only source nodes of opposite parity contribute, with
//! weight `2h`. [`oracle_apply_bnm`] is an independent punctured-trapezoid evaluation.

pub(crate) mod lattice;

use crate::error::{Error, Result};
use crate::grid::{spectral_derivative, Grid, GridFunction};
use lattice::OffsetKernel;

/// One instance of `B_{n,m}`: denominator functions `a_1..a_m` and numerator functions
/// `b_1..b_n`, all on one grid.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    grid: Grid,
    denominators: Vec<GridFunction>,
    numerators: Vec<GridFunction>,
}

impl KernelSpec {
    pub fn new(
        grid: Grid,
        denominators: Vec<GridFunction>,
        numerators: Vec<GridFunction>,
    ) -> Result<Self> {
        for g in denominators.iter().chain(&numerators) {
            if *g.grid() != grid {
                return Err(Error::InvalidArgument(
                    "kernel functions must share one grid".into(),
                ));
            }
        }
        Ok(KernelSpec {
            grid,
            denominators,
            numerators,
        })
    }

    /// `B^0_{n,m}(f)`: every `a_i` and `b_i` equal to `f`.
    pub fn uniform(f: &GridFunction, n: usize, m: usize) -> Self {
        KernelSpec {
            grid: *f.grid(),
            denominators: vec![f.clone(); m],
            numerators: vec![f.clone(); n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of denominator functions.
    pub fn m(&self) -> usize {
        self.denominators.len()
    }

    /// Number of numerator functions.
    pub fn n(&self) -> usize {
        self.numerators.len()
    }

    pub fn denominators(&self) -> &[GridFunction] {
        &self.denominators
    }

    pub fn numerators(&self) -> &[GridFunction] {
        &self.numerators
    }

    fn check(&self, alpha: &GridFunction) -> Result<()> {
        if *alpha.grid() != self.grid {
            return Err(Error::InvalidArgument(
                "density and kernel live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Product of numerator differences and squared denominator differences between
    /// target `j` and source `i`.
    fn differences(&self, j: usize, i: usize, den_sq: &mut Vec<f64>) -> f64 {
        den_sq.clear();
        den_sq.extend(self.denominators.iter().map(|a| {
            let d = a.values()[j] - a.values()[i];
            d * d
        }));
        self.numerators
            .iter()
            .map(|b| b.values()[j] - b.values()[i])
            .product()
    }
}

fn finite_or_fail(values: Vec<f64>, grid: Grid) -> Result<GridFunction> {
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "non-finite kernel evaluation".into(),
            node: Some(j),
            condition: None,
        });
    }
    Ok(GridFunction::from_raw(grid, values))
}

/// Applies `B_{n,m}` to `alpha` with the alternate-point rule.
pub fn apply_bnm(spec: &KernelSpec, alpha: &GridFunction) -> Result<GridFunction> {
    spec.check(alpha)?;
    let grid = spec.grid;
    let n = grid.len();
    let h = grid.spacing();
    let kernel = OffsetKernel::new(grid, spec.n());
    let av = alpha.values();
    let mut den_sq = Vec::with_capacity(spec.m());
    let mut out = vec![0.0; n];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        // Sources of opposite parity only.
        for i in ((1 - j % 2)..n).step_by(2) {
            let l = grid.wrap_offset(j as i64 - i as i64);
            let num = spec.differences(j, i, &mut den_sq);
            acc += kernel.eval(l, num, &den_sq) * av[i];
        }
        *slot = 2.0 * h * acc;
    }
    finite_or_fail(out, grid)
}

/// Independent evaluation of `B_{n,m}[alpha]`: plain trapezoid over every source node
/// except the singular one, plus the removable value of the regularized integrand at
/// `s = 0`, assembled from the limits `d_s u / s -> u'`, `(d_s u / s)' -> -u''/2`.
pub fn oracle_apply_bnm(spec: &KernelSpec, alpha: &GridFunction) -> Result<GridFunction> {
    spec.check(alpha)?;
    let grid = spec.grid;
    let n = grid.len();
    let h = grid.spacing();
    let kernel = OffsetKernel::new(grid, spec.n());

    let derivs = |fs: &[GridFunction]| -> Result<Vec<(GridFunction, GridFunction)>> {
        fs.iter()
            .map(|g| Ok((spectral_derivative(g, 1)?, spectral_derivative(g, 2)?)))
            .collect()
    };
    let num_d = derivs(&spec.numerators)?;
    let den_d = derivs(&spec.denominators)?;
    let dalpha = spectral_derivative(alpha, 1)?;

    let av = alpha.values();
    let mut den_sq = Vec::with_capacity(spec.m());
    let mut out = vec![0.0; n];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in (0..n).filter(|&i| i != j) {
            let l = grid.wrap_offset(j as i64 - i as i64);
            let num = spec.differences(j, i, &mut den_sq);
            acc += kernel.eval(l, num, &den_sq) * av[i];
        }

        // g(s) = F(s) alpha(x - s), F = prod(d b/s) / prod(1 + (d a/s)^2);
        // the regularized integrand tends to g'(0) / pi.
        let b1: Vec<f64> = num_d.iter().map(|(d1, _)| d1.values()[j]).collect();
        let b2: Vec<f64> = num_d.iter().map(|(_, d2)| d2.values()[j]).collect();
        let mut f0_num: f64 = b1.iter().product();
        let mut df_num = 0.0;
        for k in 0..b1.len() {
            let others: f64 = b1
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, v)| v)
                .product();
            df_num += -0.5 * b2[k] * others;
        }
        let mut den = 1.0;
        let mut dlog_den = 0.0;
        for (d1, d2) in &den_d {
            let a1 = d1.values()[j];
            let a2 = d2.values()[j];
            den *= 1.0 + a1 * a1;
            // d/ds (1 + (d a/s)^2)^{-1} at 0, relative to the value.
            dlog_den += a1 * a2 / (1.0 + a1 * a1);
        }
        f0_num /= den;
        let f0 = f0_num;
        let df0 = df_num / den + f0 * dlog_den;
        let dg0 = df0 * av[j] - f0 * dalpha.values()[j];

        *slot = h * acc + h * dg0 / std::f64::consts::PI;
    }
    finite_or_fail(out, grid)
}

fn derivative_of(f: &GridFunction) -> Result<GridFunction> {
    spectral_derivative(f, 1)
}

/// `A(f)[alpha] = f' B^0_{0,1}(f)[alpha] - B^0_{1,1}(f)[alpha]`, or with `adjoint`
/// `A(f)*[alpha] = B^0_{1,1}(f)[alpha] - B^0_{0,1}(f)[f' alpha]`.
pub fn apply_a(f: &GridFunction, alpha: &GridFunction, adjoint: bool) -> Result<GridFunction> {
    f.same_grid(alpha)?;
    let df = derivative_of(f)?;
    let b01 = KernelSpec::uniform(f, 0, 1);
    let b11 = KernelSpec::uniform(f, 1, 1);
    if adjoint {
        let first = apply_bnm(&b11, alpha)?;
        let second = apply_bnm(&b01, &(&df * alpha)?)?;
        &first - &second
    } else {
        let first = (&df * &apply_bnm(&b01, alpha)?)?;
        let second = apply_bnm(&b11, alpha)?;
        &first - &second
    }
}

/// `B(f)[alpha] = B^0_{0,1}(f)[alpha] + f' B^0_{1,1}(f)[alpha]`, or with `adjoint`
/// `B(f)*[alpha] = -B^0_{0,1}(f)[alpha] - B^0_{1,1}(f)[f' alpha]`.
pub fn apply_b(f: &GridFunction, alpha: &GridFunction, adjoint: bool) -> Result<GridFunction> {
    f.same_grid(alpha)?;
    let df = derivative_of(f)?;
    let b01 = KernelSpec::uniform(f, 0, 1);
    let b11 = KernelSpec::uniform(f, 1, 1);
    if adjoint {
        let first = apply_bnm(&b01, alpha)?;
        let second = apply_bnm(&b11, &(&df * alpha)?)?;
        Ok((&first + &second)?.scale(-1.0))
    } else {
        let first = apply_bnm(&b01, alpha)?;
        let second = (&df * &apply_bnm(&b11, alpha)?)?;
        &first + &second
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::hilbert_transform;

    fn gauss(grid: Grid, amp: f64) -> GridFunction {
        GridFunction::from_fn(grid, |x| amp * (-x * x).exp()).unwrap()
    }

    #[test]
    fn hilbert_kernel_reproduces_spectral_hilbert() {
        let grid = Grid::new(10.0, 128).unwrap();
        let alpha = GridFunction::from_fn(grid, |x| (-x * x).exp() * (1.0 + x)).unwrap();
        let zero = GridFunction::zeros(grid);
        let spec = KernelSpec::new(grid, vec![zero], vec![]).unwrap();
        let out = apply_bnm(&spec, &alpha).unwrap();
        let hil = hilbert_transform(&alpha).unwrap();
        assert!((&out - &hil).unwrap().norm_inf() < 1e-13);
    }

    #[test]
    fn vanishing_numerator_gives_zero() {
        let grid = Grid::new(10.0, 64).unwrap();
        let alpha = gauss(grid, 1.0);
        let spec =
            KernelSpec::new(grid, vec![gauss(grid, 0.4)], vec![GridFunction::zeros(grid)]).unwrap();
        assert_eq!(apply_bnm(&spec, &alpha).unwrap().norm_inf(), 0.0);
        assert_eq!(oracle_apply_bnm(&spec, &alpha).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g1 = Grid::new(10.0, 64).unwrap();
        let g2 = Grid::new(10.0, 128).unwrap();
        let spec = KernelSpec::uniform(&gauss(g1, 0.3), 1, 1);
        assert!(matches!(
            apply_bnm(&spec, &gauss(g2, 1.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(KernelSpec::new(g1, vec![gauss(g2, 1.0)], vec![]).is_err());
        assert!(apply_a(&gauss(g1, 0.3), &gauss(g2, 1.0), false).is_err());
    }

    #[test]
    fn main_path_matches_oracle_for_gaussian_data() {
        let grid = Grid::new(10.0, 256).unwrap();
        let g = gauss(grid, 1.0);
        let spec = KernelSpec::uniform(&g, 1, 1);
        let main = apply_bnm(&spec, &g).unwrap();
        let oracle = oracle_apply_bnm(&spec, &g).unwrap();
        let rel = main.rel_l2_distance(&oracle).unwrap();
        assert!(rel < 1e-12, "relative discrepancy {rel}");
    }

    #[test]
    fn operators_vanish_or_reduce_at_flat_interface() {
        let grid = Grid::new(10.0, 128).unwrap();
        let zero = GridFunction::zeros(grid);
        let alpha = GridFunction::from_fn(grid, |x| x * (-x * x).exp()).unwrap();
        assert_eq!(apply_a(&zero, &alpha, false).unwrap().norm_inf(), 0.0);
        assert_eq!(apply_a(&zero, &alpha, true).unwrap().norm_inf(), 0.0);
        let hil = hilbert_transform(&alpha).unwrap();
        let b = apply_b(&zero, &alpha, false).unwrap();
        let bstar = apply_b(&zero, &alpha, true).unwrap();
        assert!((&b - &hil).unwrap().norm_inf() < 1e-13);
        assert!((&bstar + &hil).unwrap().norm_inf() < 1e-13);
    }

    #[test]
    fn non_finite_kernel_reports_node() {
        // Coincident numerator values with a huge denominator difference overflow.
        let grid = Grid::new(10.0, 32).unwrap();
        let mut v = vec![0.0; 32];
        v[7] = 1e300;
        let a = GridFunction::new(grid, v.clone()).unwrap();
        let spec = KernelSpec::new(grid, vec![], vec![a.clone(), a.clone(), a]).unwrap();
        let alpha = GridFunction::constant(grid, 1.0);
        match apply_bnm(&spec, &alpha) {
            Err(Error::NumericalFailure { node: Some(_), .. }) => {}
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }
}
