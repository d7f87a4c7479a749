use msflow::evolution::curvature;
use msflow::grid::spectral_derivative;
use msflow::potential::{
    eval_u_and_grad, eval_velocity, extrapolated_trace_potential, extrapolated_trace_velocity,
    harmonicity_residual, reconstruct_boundary_potential, trace_velocity, Interface, Side,
    DEFAULT_TRACE_DISTANCES,
};
use msflow::resolvent::{compute_densities, SolverOptions};
use msflow::sio::{apply_a, apply_b};
use msflow::{Grid, GridFunction};

fn gauss(grid: Grid, amp: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| amp * (-x * x).exp()).unwrap()
}

fn odd_density(grid: Grid) -> GridFunction {
    GridFunction::from_fn(grid, |x| x * (-x * x).exp()).unwrap()
}

fn variation(u: &GridFunction) -> f64 {
    let hi = u.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = u.values().iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Normal component `nu . v` of a boundary vector field.
fn normal_component(f: &GridFunction, v: &(GridFunction, GridFunction)) -> GridFunction {
    let df = spectral_derivative(f, 1).unwrap();
    let vals = (0..f.len())
        .map(|j| {
            let d = df.values()[j];
            (-d * v.0.values()[j] + v.1.values()[j]) / (1.0 + d * d).sqrt()
        })
        .collect();
    GridFunction::new(*f.grid(), vals).unwrap()
}

#[test]
fn gradient_formulas_agree_at_several_points() {
    let grid = Grid::new(10.0, 256).unwrap();
    let f = gauss(grid, 0.3);
    let phi = gauss(grid, 1.0);
    for point in [(0.5, 2.0), (-1.0, 1.0), (2.0, -1.5), (0.1, -0.6), (7.0, 0.5)] {
        let s = eval_u_and_grad(&f, &phi, point).unwrap();
        assert!(s.value.grad_discrepancy <= 1e-8, "{point:?}: {}", s.value.grad_discrepancy);
    }
}

#[test]
fn gradient_of_u_matches_finite_differences() {
    let grid = Grid::new(10.0, 256).unwrap();
    let f = gauss(grid, 0.3);
    let phi = gauss(grid, 1.0);
    let (x, y, d) = (0.5, 1.2, 1e-4);
    let u = |x, y| eval_u_and_grad(&f, &phi, (x, y)).unwrap().value.u;
    let fd = [
        (u(x + d, y) - u(x - d, y)) / (2.0 * d),
        (u(x, y + d) - u(x, y - d)) / (2.0 * d),
    ];
    let g = eval_u_and_grad(&f, &phi, (x, y)).unwrap().value.grad;
    let err = (fd[0] - g[0]).hypot(fd[1] - g[1]) / g[0].hypot(g[1]);
    assert!(err < 1e-7, "{err}");
}

#[test]
fn velocity_is_gradient_of_reconstructed_potential() {
    let grid = Grid::new(10.0, 256).unwrap();
    let f = gauss(grid, 0.3);
    let alpha = odd_density(grid);
    let iface = Interface::new(&f).unwrap();
    for (x, y) in [(0.0, 2.0), (-3.0, 0.8), (1.0, -1.5), (9.5, 0.4)] {
        let d = 1e-4;
        let u = |x, y| iface.velocity_potential(&alpha, x, y).unwrap();
        let fd = [
            (u(x + d, y) - u(x - d, y)) / (2.0 * d),
            (u(x, y + d) - u(x, y - d)) / (2.0 * d),
        ];
        let v = iface.velocity(&alpha, x, y).unwrap().value;
        let err = (fd[0] - v[0]).hypot(fd[1] - v[1]) / v[0].hypot(v[1]);
        assert!(err < 1e-6, "({x}, {y}): {err}");
    }
    let l = grid.half_length();
    let pinned = iface.velocity_potential(&alpha, -l, f.norm_inf() + 1.0).unwrap();
    assert!(pinned.abs() < 1e-15);
    assert!(iface.velocity_potential(&alpha, 0.5, 0.28).is_err());
}

#[test]
fn velocity_decays_away_from_the_interface() {
    let grid = Grid::new(10.0, 256).unwrap();
    let f = gauss(grid, 0.3);
    let alpha = odd_density(grid);
    let l = grid.half_length();
    for theta in [0.5, 0.25, 0.75, -0.5, -0.25].map(|t: f64| t * std::f64::consts::PI) {
        let at = |r: f64| {
            let v = eval_velocity(&f, &alpha, (r * theta.cos(), r * theta.sin())).unwrap();
            v.value[0].hypot(v.value[1])
        };
        let (near, far) = (at(0.4 * l), at(0.8 * l));
        assert!(far < near, "theta {theta}: {near} -> {far}");
    }
}

#[test]
fn boundary_approach_reproduces_trace_formula() {
    let grid = Grid::new(5.0, 2048).unwrap();
    let f = gauss(grid, 0.3);
    let alpha = odd_density(grid);
    for side in [Side::Plus, Side::Minus] {
        let exact = trace_velocity(&f, &alpha, side).unwrap();
        let ext = extrapolated_trace_velocity(&f, &alpha, side, &DEFAULT_TRACE_DISTANCES).unwrap();
        let scale = exact.0.norm_l2().hypot(exact.1.norm_l2());
        let err = (&ext.0 - &exact.0).unwrap().norm_l2().hypot((&ext.1 - &exact.1).unwrap().norm_l2());
        assert!(err <= 1e-3 * scale, "{side:?}: {}", err / scale);
        // The jump term is tangential; normal traces agree with B(f)[alpha] / (2 sqrt(1 + f'^2)).
        let df = spectral_derivative(&f, 1).unwrap();
        let bn = apply_b(&f, &alpha, false)
            .unwrap()
            .zip_with(&df, |b, d| 0.5 * b / (1.0 + d * d).sqrt())
            .unwrap();
        assert!(normal_component(&f, &exact).rel_l2_distance(&bn).unwrap() < 1e-12);
        assert!(normal_component(&f, &ext).rel_l2_distance(&bn).unwrap() < 1e-3);
    }
}

#[test]
fn trace_identities_for_layer_densities() {
    let grid = Grid::new(5.0, 512).unwrap();
    let f = gauss(grid, 0.3);
    let df = spectral_derivative(&f, 1).unwrap();
    let kappa = curvature(&f).unwrap();
    let d = compute_densities(&f, SolverOptions::default()).unwrap();
    for (side, alpha) in [(Side::Plus, &d.alpha_plus), (Side::Minus, &d.alpha_minus)] {
        let v = trace_velocity(&f, alpha, side).unwrap();
        // (1, f') . v = (-+1 + A(f))[alpha] / 2 = kappa'
        let tangential = (&v.0 + &(&df * &v.1).unwrap()).unwrap();
        let expect = (&apply_a(&f, alpha, false).unwrap() - &alpha.scale(side.sign()))
            .unwrap()
            .scale(0.5);
        assert!(tangential.rel_l2_distance(&expect).unwrap() < 1e-13);
        let dkappa = spectral_derivative(&kappa, 1).unwrap();
        assert!(tangential.rel_l2_distance(&dkappa).unwrap() < 1e-9);
        let u = reconstruct_boundary_potential(&f, &v).unwrap();
        assert!(variation(&(&u - &kappa).unwrap()) < 1e-10);
    }
}

#[test]
fn potential_jump_and_trace_relations() {
    let grid = Grid::new(5.0, 1024).unwrap();
    let f = gauss(grid, 0.3);
    let df = spectral_derivative(&f, 1).unwrap();
    let phi = gauss(grid, 1.0);
    let dphi = spectral_derivative(&phi, 1).unwrap();
    let (up, dnp) =
        extrapolated_trace_potential(&f, &phi, Side::Plus, &DEFAULT_TRACE_DISTANCES).unwrap();
    let (um, dnm) =
        extrapolated_trace_potential(&f, &phi, Side::Minus, &DEFAULT_TRACE_DISTANCES).unwrap();
    let jump = (&dnp - &dnm).unwrap();
    let expect = dphi.zip_with(&df, |a, d| a / (1.0 + d * d).sqrt()).unwrap();
    assert!(jump.rel_l2_distance(&expect).unwrap() <= 1e-3);
    // [U] = 0 and U|_Gamma = -B(f)*[phi] / 2.
    let trace = apply_b(&f, &phi, true).unwrap().scale(-0.5);
    assert!((&up - &um).unwrap().norm_l2() <= 1e-3 * trace.norm_l2());
    assert!(up.rel_l2_distance(&trace).unwrap() <= 1e-3);
    assert!(um.rel_l2_distance(&trace).unwrap() <= 1e-3);
}

#[test]
fn harmonicity_residual_is_second_order() {
    let grid = Grid::new(5.0, 512).unwrap();
    let f = gauss(grid, 0.3);
    let d = compute_densities(&f, SolverOptions::default()).unwrap();
    let iface = Interface::new(&f).unwrap();
    let phi = gauss(grid, 1.0);
    let dphi = spectral_derivative(&phi, 1).unwrap();
    let u_vel = |x, y| iface.velocity_potential(&d.alpha_plus, x, y);
    let u_layer = |x, y| Ok(iface.potential(&phi, &dphi, x, y)?.value.u);
    let point = (0.5, 2.0);
    for field in [&u_vel as &dyn Fn(f64, f64) -> msflow::Result<f64>, &u_layer] {
        let r: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&s| harmonicity_residual(field, &f, point, s).unwrap())
            .collect();
        for w in r.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..4.4).contains(&ratio), "{r:?}");
        }
    }
    // Velocity potential at (0, 2) with step 1e-2, against the field's sup over the stencil.
    let step = 1e-2;
    let res = harmonicity_residual(u_vel, &f, (0.0, 2.0), step).unwrap();
    let sup = [(0.0, 2.0), (step, 2.0), (-step, 2.0), (0.0, 2.0 + step), (0.0, 2.0 - step)]
        .iter()
        .map(|&(x, y)| u_vel(x, y).unwrap().abs())
        .fold(0.0, f64::max);
    assert!(res <= 1e-4 * sup, "{res} vs {sup}");
    let zero = GridFunction::zeros(grid);
    let r0 = harmonicity_residual(|x, y| Ok(eval_u_and_grad(&f, &zero, (x, y))?.value.u), &f, point, step);
    assert_eq!(r0.unwrap(), 0.0);
}

#[test]
fn dirichlet_reconstruction_from_extrapolated_traces() {
    // Quartic extrapolation through {4h, ..., 8h}.
    let distances = [4.0, 5.0, 6.0, 7.0, 8.0];
    let grid = Grid::new(5.0, 1024).unwrap();
    let f = gauss(grid, 0.3);
    let kappa = curvature(&f).unwrap();
    let d = compute_densities(&f, SolverOptions::default()).unwrap();
    for (side, alpha) in [(Side::Plus, &d.alpha_plus), (Side::Minus, &d.alpha_minus)] {
        let v = extrapolated_trace_velocity(&f, alpha, side, &distances).unwrap();
        let u = reconstruct_boundary_potential(&f, &v).unwrap();
        let var = variation(&(&u - &kappa).unwrap());
        assert!(var <= 1e-4, "{side:?}: {var}");
    }
}
