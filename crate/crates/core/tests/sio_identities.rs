use msflow::grid::spectral_derivative;
use msflow::sio::{apply_a, apply_b, apply_bnm, oracle_apply_bnm, KernelSpec};
use msflow::{Grid, GridFunction, Result};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn gauss(grid: Grid, amp: f64, center: f64, width: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| amp * (-((x - center) / width).powi(2)).exp()).unwrap()
}

fn assemble(n: usize, grid: Grid, op: impl Fn(&GridFunction) -> Result<GridFunction>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let col = op(&GridFunction::new(grid, e).unwrap()).unwrap();
        m.set_column(i, &DVector::from_column_slice(col.values()));
    }
    m
}

/// Largest singular value by power iteration on `M^T M`.
fn operator_norm(m: &DMatrix<f64>) -> f64 {
    let mtm = m.transpose() * m;
    let mut v = DVector::from_fn(m.ncols(), |i, _| 1.0 + (i as f64 * 0.37).sin());
    let mut est = 0.0;
    for _ in 0..500 {
        let w = &mtm * &v;
        let norm = w.norm();
        v = w / norm;
        if (norm - est).abs() <= 1e-13 * norm {
            est = norm;
            break;
        }
        est = norm;
    }
    est.sqrt()
}

#[test]
fn adjoint_pairings_at_512() {
    let grid = Grid::new(10.0, 512).unwrap();
    let f = gauss(grid, 0.4, 0.3, 1.0);
    let alpha = gauss(grid, 1.0, -0.5, 1.3);
    let beta = GridFunction::from_fn(grid, |x| x * (-x * x / 2.0).exp()).unwrap();
    for (op, name) in [(apply_a as fn(_, _, _) -> _, "A"), (apply_b, "B")] {
        let lhs: f64 = op(&f, &alpha, false).unwrap().dot(&beta).unwrap();
        let rhs: f64 = alpha.dot(&op(&f, &beta, true).unwrap()).unwrap();
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
        assert!(rel <= 1e-8, "{name} pairing defect {rel}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adjoint_pairings_hold_for_random_profiles(
        amp in -0.8..0.8f64, c in -1.0..1.0f64, w in 0.5..2.0f64,
        a2 in -1.0..1.0f64, c2 in -2.0..2.0f64,
    ) {
        let grid = Grid::new(10.0, 128).unwrap();
        let f = gauss(grid, amp, c, w);
        let alpha = gauss(grid, 1.0, c2, 1.0);
        let beta = GridFunction::from_fn(grid, |x| (a2 + x) * (-x * x).exp()).unwrap();
        for (op, name) in [(apply_a as fn(_, _, _) -> _, "A"), (apply_b, "B")] {
            let lhs: f64 = op(&f, &alpha, false).unwrap().dot(&beta).unwrap();
            let rhs: f64 = alpha.dot(&op(&f, &beta, true).unwrap()).unwrap();
            let scale = op(&f, &alpha, false).unwrap().norm_l2() * beta.norm_l2();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300), "{} {} {}", name, lhs, rhs);
        }
    }

    #[test]
    fn main_path_agrees_with_oracle_on_general_specs(
        a1 in -0.6..0.6f64, a2 in -0.6..0.6f64, b1 in -0.6..0.6f64, shift in -1.0..1.0f64,
    ) {
        let grid = Grid::new(6.0, 128).unwrap();
        let dens = vec![gauss(grid, a1, 0.0, 1.0), gauss(grid, a2, shift, 1.2)];
        let nums = vec![gauss(grid, b1, -shift, 0.9)];
        let spec = KernelSpec::new(grid, dens, nums).unwrap();
        let alpha = gauss(grid, 1.0, 0.2, 1.0);
        let main = apply_bnm(&spec, &alpha).unwrap();
        let oracle = oracle_apply_bnm(&spec, &alpha).unwrap();
        let scale = oracle.norm_l2();
        if scale > 1e-300 {
            prop_assert!(main.rel_l2_distance(&oracle).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn derivative_identities_converge() {
    // L = 40 keeps the coarse-grid defect well above roundoff.
    let mut prev: Option<(f64, f64)> = None;
    for n in [256usize, 512, 1024] {
        let grid = Grid::new(40.0, n).unwrap();
        let f = gauss(grid, 0.3, 0.0, 1.0);
        let beta = gauss(grid, 1.0, 0.0, 1.0);
        let db = spectral_derivative(&beta, 1).unwrap();
        let defect = |op: fn(&GridFunction, &GridFunction, bool) -> Result<GridFunction>| {
            let lhs = spectral_derivative(&op(&f, &beta, true).unwrap(), 1).unwrap();
            let rhs = op(&f, &db, false).unwrap().scale(-1.0);
            (&lhs - &rhs).unwrap().norm_l2()
        };
        let cur = (defect(apply_a), defect(apply_b));
        if let Some(p) = prev {
            assert!(cur.0 <= p.0 / 4.0, "A defect {} -> {}", p.0, cur.0);
            assert!(cur.1 <= p.1 / 4.0, "B defect {} -> {}", p.1, cur.1);
        }
        prev = Some(cur);
    }
    let last = prev.unwrap();
    assert!(last.0 < 1e-10 && last.1 < 1e-10);
}

#[test]
fn kernel_operator_norms_are_uniform_under_refinement() {
    for (nn, m) in [(0usize, 1usize), (1, 1), (2, 1)] {
        let norms: Vec<f64> = [128usize, 256, 512]
            .iter()
            .map(|&n| {
                let grid = Grid::new(8.0, n).unwrap();
                let f = gauss(grid, 0.5, 0.0, 1.0);
                let spec = KernelSpec::uniform(&f, nn, m);
                operator_norm(&assemble(n, grid, |a| apply_bnm(&spec, a)))
            })
            .collect();
        let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().cloned().fold(0.0, f64::max);
        assert!(hi.is_finite() && hi <= 1.05 * lo, "B0_({nn},{m}) norms {norms:?}");
    }
}

#[test]
fn b_lower_bound_persists_under_refinement() {
    // On the periodized line B(0) = H annihilates the mean and Nyquist modes, so the
    // lower bound is measured on their orthogonal complement.
    let mut sigmas = vec![];
    for n in [64usize, 128, 256] {
        let grid = Grid::new(8.0, n).unwrap();
        let f = gauss(grid, 0.5, 0.0, 1.0);
        let b = assemble(n, grid, |a| apply_b(&f, a, false));
        let mut basis = DMatrix::<f64>::zeros(n, 2);
        for j in 0..n {
            basis[(j, 0)] = 1.0;
            basis[(j, 1)] = if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        let proj = DMatrix::<f64>::identity(n, n) - &basis * basis.transpose() / n as f64;
        let sv = (b * proj).singular_values();
        let mut sv: Vec<f64> = sv.iter().cloned().collect();
        sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Two zero singular values come from the projection.
        assert!(sv[1] < 1e-10, "{:?}", &sv[..3]);
        sigmas.push(sv[2]);
    }
    let lo = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.5, "smallest singular values {sigmas:?}");
    assert!(sigmas[2] >= 0.9 * sigmas[0], "{sigmas:?}");
}

#[test]
fn periodized_operators_are_translation_equivariant() {
    // Shifting f and alpha by whole grid cells shifts the output.
    let grid = Grid::new(6.0, 128).unwrap();
    let f = gauss(grid, 0.5, 0.0, 1.0);
    let alpha = gauss(grid, 1.0, 0.4, 0.8);
    let shift = 17;
    let roll = |u: &GridFunction| {
        let n = u.len();
        let v: Vec<f64> = (0..n).map(|j| u.values()[(j + n - shift) % n]).collect();
        GridFunction::new(grid, v).unwrap()
    };
    for adjoint in [false, true] {
        let a = roll(&apply_a(&f, &alpha, adjoint).unwrap());
        let b = apply_a(&roll(&f), &roll(&alpha), adjoint).unwrap();
        assert!((&a - &b).unwrap().norm_inf() < 1e-13);
    }
}
