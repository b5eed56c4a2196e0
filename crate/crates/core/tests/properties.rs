use proptest::prelude::*;

use qlpde::field::{
    compose_frame, safety_radius, time_grid, verify_ellipticity, CoefficientFn, Grid, Interval, MatrixField, SampleCounts,
    ScalarField, SpaceTimeField,
};
use qlpde::harness::{scenarios, ExperimentConfig};
use qlpde::heat::{heat_extend, heat_gradient_sup, HeatGradientConfig};
use qlpde::linear::{face_gradient, solve_linear, LinearProblem, MatrixCoefficient};
use qlpde::norms::{carleson, weighted_sup_norm, z_norm, ZNormSpec};
use qlpde::quasilinear::{local_solve_fixed_point, FixedPointConfig};

fn grid(dim: usize) -> Grid {
    Grid::new(dim, if dim == 1 { 32 } else { 8 }, 1.0).unwrap()
}

fn field(dim: usize) -> impl Strategy<Value = ScalarField> {
    let g = grid(dim);
    prop::collection::vec(-1.0f64..1.0, g.cells()).prop_map(move |v| ScalarField::new(g, v).unwrap())
}

fn any_field() -> impl Strategy<Value = ScalarField> {
    prop_oneof![field(1), field(2)]
}

fn space_time(dim: usize, frames: usize) -> impl Strategy<Value = SpaceTimeField> {
    let g = grid(dim);
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, g.cells()), frames).prop_map(move |f| {
        let times = time_grid::uniform(0.0, 0.01, f.len() - 1).unwrap();
        SpaceTimeField::scalar(g, times, f).unwrap()
    })
}

fn diffuse(a: MatrixField, u0: ScalarField, source: Option<SpaceTimeField>, times: &[f64], theta: f64) -> SpaceTimeField {
    let p = LinearProblem::new(MatrixCoefficient::Frozen(a), source, u0, times.to_vec(), theta).unwrap();
    solve_linear(&p).unwrap().u
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn linear_solve_commutes_with_shifts(u0 in any_field(), di in -5isize..5, dj in -5isize..5, c in 0.5f64..3.0) {
        let g = *u0.grid();
        let dj = if g.dim() == 1 { 0 } else { dj };
        let times = time_grid::uniform(0.0, 0.005, 4).unwrap();
        let a = MatrixField::isotropic(g, |_| c).unwrap();
        let shifted_then_solved = diffuse(a.clone(), u0.shifted(di, dj), None, &times, 1.0);
        let solved_then_shifted = diffuse(a, u0, None, &times, 1.0).last_field().shifted(di, dj);
        prop_assert!(max_diff(shifted_then_solved.last_field().values(), solved_then_shifted.values()) < 1e-10);
    }

    #[test]
    fn scaled_identity_ellipticity_is_exact(c in 0.1f64..10.0, dim in 1usize..=2) {
        let a = CoefficientFn::scaled(dim, c);
        let counts = SampleCounts { t: 3, x_per_axis: Some(4), y: 5, directions: 8 };
        let lambda = verify_ellipticity(&a, Interval::new(-1.0, 1.0), 0.1, &grid(dim), &counts).unwrap();
        prop_assert_eq!(lambda, c);
    }

    #[test]
    fn compose_is_pointwise_evaluation(u in field(1), t in 0.0f64..1.0) {
        let a = CoefficientFn::periodic_medium(1, 1.0);
        let m = compose_frame(&a, t, u.grid(), u.values()).unwrap();
        for (c, v) in u.values().iter().enumerate() {
            prop_assert_eq!(m.values()[c], a.eval(t, u.grid().coords(c), *v));
        }
    }

    #[test]
    fn safety_radius_grows_with_admissible_set(u in field(1), lo in 0.0f64..2.0, hi in 0.0f64..2.0) {
        let inner = Interval::new(-1.0 - lo.min(1.0) - 0.01, 1.0 + hi.min(1.0) + 0.01);
        let outer = Interval::new(inner.lo - lo, inner.hi + hi);
        prop_assert!(safety_radius(&u, outer).unwrap() >= safety_radius(&u, inner).unwrap());
    }

    #[test]
    fn heat_semigroup(u0 in any_field(), s in 1e-4f64..5e-3, t in 1e-4f64..5e-3) {
        let first = heat_extend(&u0, &[0.0, s]).unwrap().frames.last_field();
        let second = heat_extend(&first, &[0.0, t]).unwrap().frames.last_field();
        let direct = heat_extend(&u0, &[0.0, s + t]).unwrap().frames.last_field();
        prop_assert!(max_diff(second.values(), direct.values()) <= 1e-12 * u0.sup_norm().max(1e-300));
    }

    #[test]
    fn heat_maximum_principle(u0 in any_field()) {
        let times = time_grid::uniform(0.0, 0.01, 10).unwrap();
        let r = u0.range().unwrap();
        let tol = 1e-10 * u0.sup_norm();
        let u = heat_extend(&u0, &times).unwrap().frames;
        for f in u.frames() {
            prop_assert!(f.iter().all(|&v| v >= r.lo - tol && v <= r.hi + tol));
        }
    }

    #[test]
    fn heat_gradient_bound(u0 in field(1)) {
        let cfg = HeatGradientConfig { per_decade: 8, decades: 4.0, slack: 0.05 * std::f64::consts::FRAC_1_SQRT_2 };
        let h = heat_gradient_sup(&u0, u0.grid().validity_horizon(1.0), &cfg);
        prop_assert!(h.within_bound, "{} > {}", h.sup, h.bound);
    }

    #[test]
    fn linear_in_source(f1 in space_time(1, 5), f2 in space_time(1, 5)) {
        let g = *f1.grid();
        let a = MatrixField::isotropic(g, |x| 2.0 + (6.28 * x[0]).sin()).unwrap();
        let zero = ScalarField::constant(g, 0.0);
        let sum = SpaceTimeField::scalar(g, f1.times().to_vec(), f1.frames().iter().zip(f2.frames()).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect()).unwrap();
        let times = f1.times().to_vec();
        let u1 = diffuse(a.clone(), zero.clone(), Some(f1), &times, 0.5);
        let u2 = diffuse(a.clone(), zero.clone(), Some(f2), &times, 0.5);
        let u12 = diffuse(a, zero, Some(sum), &times, 0.5);
        for k in 0..times.len() {
            let lin: Vec<f64> = u1.frame(k).iter().zip(u2.frame(k)).map(|(x, y)| x + y).collect();
            prop_assert!(max_diff(&lin, u12.frame(k)) < 1e-10);
        }
    }

    #[test]
    fn linear_conserves_mass_and_range(u0 in any_field(), c in 0.2f64..4.0) {
        let g = *u0.grid();
        let a = MatrixField::isotropic(g, |x| c * (1.5 + (6.28 * x[0]).cos())).unwrap();
        let times = time_grid::uniform(0.0, 0.01, 8).unwrap();
        let u = diffuse(a, u0.clone(), None, &times, 1.0);
        let r = u0.range().unwrap();
        let tol = 1e-10 * u0.sup_norm();
        for k in 0..u.len() {
            prop_assert!((u.frame_field(k).mean() - u0.mean()).abs() < 1e-12);
            prop_assert!(u.frame(k).iter().all(|&v| v >= r.lo - tol && v <= r.hi + tol));
        }
    }

    #[test]
    fn porous_solution_stays_in_data_range(seed in 0u64..1000, amp in 0.05f64..0.3) {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let u0 = qlpde::harness::config::random_bandlimited(g, seed, 3, 1.0, amp);
        let cfg = FixedPointConfig { horizon: 0.002, steps: 8, ..FixedPointConfig::default() };
        let (u, rep) = local_solve_fixed_point(&u0, &CoefficientFn::porous(1, 1.0), &cfg).unwrap();
        let r = u0.range().unwrap();
        let tol = 1e-8 * u0.sup_norm();
        prop_assert!(rep.max_contraction() < 1.0);
        prop_assert!(u.frames().iter().flatten().all(|&v| v >= r.lo - tol && v <= r.hi + tol));
    }

    #[test]
    fn z_norm_is_homogeneous(f in space_time(1, 9), lambda in -4.0f64..4.0) {
        let spec = ZNormSpec::new(3.0, 0.01);
        let z = z_norm(&f, &spec).unwrap().value;
        let zl = z_norm(&f.scaled(lambda), &spec).unwrap().value;
        prop_assert!((zl - lambda.abs() * z).abs() <= 1e-12 * (1.0 + zl));
    }

    #[test]
    fn z_norm_nests(f in space_time(2, 9), q0 in 1.1f64..8.0, q1 in 1.1f64..8.0) {
        let (lo, hi) = if q0 < q1 { (q0, q1) } else { (q1, q0) };
        let a = z_norm(&f, &ZNormSpec::new(lo, 0.01)).unwrap().value;
        let b = z_norm(&f, &ZNormSpec::new(hi, 0.01)).unwrap().value;
        prop_assert!(a <= b * (1.0 + 1e-12));
    }

    #[test]
    fn carleson_grows_with_horizon(u in space_time(1, 9), t0 in 0.001f64..0.01, t1 in 0.001f64..0.01) {
        let g = face_gradient(&u).unwrap();
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        prop_assert!(carleson(&g, 1.0, lo).value <= carleson(&g, 1.0, hi).value);
    }

    #[test]
    fn unweighted_sup_is_sup_norm(f in space_time(2, 5)) {
        let positive_times = f.frames()[1..].iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert_eq!(weighted_sup_norm(&f, 0.0, 0.01), positive_times);
    }

    #[test]
    fn config_round_trips(i in 0usize..12, n_pow in 3u32..8, seed in 0..=i64::MAX as u64, theta in 0.5f64..1.0) {
        let mut cfg = scenarios::library()[i].clone();
        cfg.grid.n = 1 << n_pow;
        cfg.seed = seed;
        cfg.scheme.theta = theta;
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn zero_data_gives_zero_for_linear_solves() {
    for dim in [1, 2] {
        let g = grid(dim);
        let times = time_grid::uniform(0.0, 0.01, 6).unwrap();
        for a in [
            MatrixField::identity(g),
            MatrixField::isotropic(g, |x| 2.0 + (6.28 * x[0]).cos()).unwrap(),
            compose_frame(&CoefficientFn::anisotropic(dim, 0.5), 0.0, &g, &vec![0.0; g.cells()]).unwrap(),
        ] {
            let u = diffuse(a, ScalarField::constant(g, 0.0), None, &times, 0.5);
            assert_eq!(u.sup_norm(), 0.0);
        }
    }
}

#[test]
fn halving_the_window_does_not_worsen_contraction() {
    for name in ["porous_local", "porous2_global", "ramped_porous"] {
        let c = scenarios::by_name(name).unwrap();
        let u0 = c.initial_datum().unwrap();
        let a = c.coefficient_fn().unwrap();
        let factor = |horizon: f64| {
            let cfg = FixedPointConfig { horizon, steps: 16, ..c.fixed_point.clone() };
            local_solve_fixed_point(&u0, &a, &cfg).unwrap().1.max_contraction()
        };
        let (full, half) = (factor(0.004), factor(0.002));
        assert!(half <= full + 0.05, "{name}: {half} > {full}");
    }
}

#[test]
fn identical_configs_reproduce_hashes() {
    for name in ["porous_local", "anisotropic_2d"] {
        let c = scenarios::by_name(name).unwrap();
        let a = qlpde::harness::execute(&c).unwrap();
        let b = qlpde::harness::execute(&c).unwrap();
        assert_eq!(a.manifest.config_hash, b.manifest.config_hash);
        if c.grid.dim == 1 {
            assert_eq!(a.manifest.field_hash, b.manifest.field_hash);
        } else {
            assert!(a.u.sup_distance(&b.u).unwrap() <= 1e-10);
        }
    }
}
