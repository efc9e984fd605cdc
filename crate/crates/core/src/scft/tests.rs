//! Oracle checks for the SCFT solver on toy lattices.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn toy_config(n: usize, contour_steps: usize) -> SimConfig {
    SimConfig {
        lattice: [n, n],
        system_size: [4.0, 4.0],
        contour_steps,
        max_iterations: 1,
        ..SimConfig::default()
    }
}

fn random_field(n: usize, amp: f64, seed: u64) -> Field2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field2::from_fn(n, n, |_, _| rng.random_range(-amp..amp))
}

/// Dense diffusion matrix built from an explicit DFT sum.
fn dense_diffusion(n: usize, len: f64, coeff: f64) -> Vec<Vec<f64>> {
    let m = n * n;
    let freq = |k: usize| {
        let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * PI * k / len
    };
    let mut d = vec![vec![0.0; m]; m];
    for (r, row) in d.iter_mut().enumerate() {
        let (ri, rj) = (r / n, r % n);
        for (s, entry) in row.iter_mut().enumerate() {
            let (si, sj) = (s / n, s % n);
            let mut acc = 0.0;
            for ki in 0..n {
                for kj in 0..n {
                    let (kx, ky) = (freq(ki), freq(kj));
                    let dx = (ri as f64 - si as f64) * len / n as f64;
                    let dy = (rj as f64 - sj as f64) * len / n as f64;
                    acc += (kx * dx + ky * dy).cos() * (-coeff * (kx * kx + ky * ky)).exp();
                }
            }
            *entry = acc / m as f64;
        }
    }
    d
}

/// Dense time-stepping oracle of the split-step propagator.
fn oracle_propagator(
    w_a: &Field2,
    w_b: &Field2,
    params: &MaterialParams,
    config: &SimConfig,
    direction: Direction,
) -> Vec<Vec<f64>> {
    let n = config.lattice[0];
    let len = config.system_size[0];
    let plan = BlockPlan::new(params, config.contour_steps);
    let mut steps: Vec<ContourStep> = plan.steps().to_vec();
    if direction == Direction::Backward {
        steps.reverse();
    }
    let mut q = vec![vec![1.0; n * n]];
    for step in steps {
        let w = if step.block == Block::A { w_a } else { w_b };
        let d = dense_diffusion(n, len, step.ds * params.bond_length.powi(2) / 6.0);
        let half: Vec<f64> = w.as_slice().iter().map(|v| (-v * step.ds / 2.0).exp()).collect();
        let prev = q.last().unwrap();
        let x: Vec<f64> = prev.iter().zip(&half).map(|(a, b)| a * b).collect();
        let y: Vec<f64> = (0..n * n)
            .map(|r| half[r] * d[r].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        q.push(y);
    }
    q
}

/// Direct contour quadrature of the densities from oracle propagators.
fn oracle_density(
    fwd: &[Vec<f64>],
    bwd: &[Vec<f64>],
    params: &MaterialParams,
    config: &SimConfig,
) -> (Vec<f64>, Vec<f64>) {
    let plan = BlockPlan::new(params, config.contour_steps);
    let n = plan.len();
    let na = plan.a_steps();
    let sites = fwd[0].len();
    let ds_a = params.f * params.n_segments as f64 / na as f64;
    let ds_b = (1.0 - params.f) * params.n_segments as f64 / (n - na) as f64;
    let mut pa = vec![0.0; sites];
    let mut pb = vec![0.0; sites];
    for r in 0..sites {
        for j in 0..na {
            pa[r] += 0.5 * ds_a * (fwd[j][r] * bwd[n - j][r] + fwd[j + 1][r] * bwd[n - j - 1][r]);
        }
        for j in na..n {
            pb[r] += 0.5 * ds_b * (fwd[j][r] * bwd[n - j][r] + fwd[j + 1][r] * bwd[n - j - 1][r]);
        }
    }
    let ma = pa.iter().sum::<f64>() / sites as f64;
    let mb = pb.iter().sum::<f64>() / sites as f64;
    (
        pa.iter().map(|v| v * params.f / ma).collect(),
        pb.iter().map(|v| v * (1.0 - params.f) / mb).collect(),
    )
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn init_is_deterministic_per_seed() {
    let p = MaterialParams::new(0.4, 0.5).unwrap();
    let c = toy_config(8, 10).with_seed(7);
    assert_eq!(init_fields(&p, &c), init_fields(&p, &c));
    assert_ne!(init_fields(&p, &c).w_a, init_fields(&p, &c.with_seed(8)).w_a);
    let s = init_fields(&p, &c);
    assert!(s.w_a.max_deviation(0.0) <= 0.01);
    assert_eq!(s.gamma, Field2::zeros(8, 8));
}

#[test]
fn zero_noise_gives_homogeneous_fields() {
    let p = MaterialParams::new(0.4, 0.5).unwrap();
    let c = SimConfig {
        noise_amplitude: 0.0,
        ..toy_config(8, 10)
    };
    let s = init_fields(&p, &c);
    assert_eq!(s.w_a, Field2::zeros(8, 8));
    assert_eq!(s.w_b, Field2::zeros(8, 8));
}

#[test]
fn zero_potential_keeps_unit_propagator() {
    let p = MaterialParams::new(0.3, 0.5).unwrap();
    let c = toy_config(8, 40);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let zero = Field2::zeros(8, 8);
    let q = solve_propagator(&zero, &zero, &plan, Direction::Forward, &p, &c).unwrap();
    for node in &q.q {
        assert!(node.max_deviation(1.0) < 1e-13);
    }
}

#[test]
fn constant_potential_decays_exponentially() {
    let p = MaterialParams::new(0.3, 0.5).unwrap();
    let c = toy_config(8, 40);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let w = Field2::filled(8, 8, 0.07);
    let q = solve_propagator(&w, &w, &plan, Direction::Forward, &p, &c).unwrap();
    let expected = (-0.07 * p.n_segments as f64).exp();
    assert!(q.tail().max_deviation(expected) < 1e-12);
    // intermediate node inside the A block
    let s = 5.0 * plan.ds(Block::A);
    assert!(q.q[5].max_deviation((-0.07 * s).exp()) < 1e-12);
}

#[test]
fn plane_wave_potential_matches_dense_oracle() {
    let p = MaterialParams::new(0.4, 0.5).unwrap();
    let c = toy_config(4, 12);
    let w_a = Field2::from_fn(4, 4, |i, j| 0.3 * (2.0 * PI * (i as f64 + 2.0 * j as f64) / 4.0).cos());
    let w_b = Field2::from_fn(4, 4, |i, _| -0.2 * (2.0 * PI * i as f64 / 4.0).sin());
    let plan = BlockPlan::new(&p, c.contour_steps);
    for dir in [Direction::Forward, Direction::Backward] {
        let q = solve_propagator(&w_a, &w_b, &plan, dir, &p, &c).unwrap();
        let oracle = oracle_propagator(&w_a, &w_b, &p, &c, dir);
        for (node, expected) in q.q.iter().zip(&oracle) {
            assert!(max_diff(node.as_slice(), expected) < 1e-6);
        }
    }
}

#[test]
fn zero_potential_density_is_homogeneous() {
    let p = MaterialParams::new(0.35, 0.5).unwrap();
    let c = toy_config(8, 20);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let zero = Field2::zeros(8, 8);
    let f = solve_propagator(&zero, &zero, &plan, Direction::Forward, &p, &c).unwrap();
    let b = solve_propagator(&zero, &zero, &plan, Direction::Backward, &p, &c).unwrap();
    let (pa, pb) = compute_density(&f, &b, &p).unwrap();
    assert!(pa.max_deviation(0.35) < 1e-12);
    assert!(pb.max_deviation(0.65) < 1e-12);
}

#[test]
fn density_matches_direct_quadrature_oracle() {
    let p = MaterialParams::new(0.4125, 0.5).unwrap();
    let c = toy_config(4, 16);
    let w_a = random_field(4, 0.5, 1);
    let w_b = random_field(4, 0.5, 2);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let f = solve_propagator(&w_a, &w_b, &plan, Direction::Forward, &p, &c).unwrap();
    let b = solve_propagator(&w_a, &w_b, &plan, Direction::Backward, &p, &c).unwrap();
    let (pa, pb) = compute_density(&f, &b, &p).unwrap();
    let of = oracle_propagator(&w_a, &w_b, &p, &c, Direction::Forward);
    let ob = oracle_propagator(&w_a, &w_b, &p, &c, Direction::Backward);
    let (oa, obb) = oracle_density(&of, &ob, &p, &c);
    assert!(max_diff(pa.as_slice(), &oa) < 1e-6);
    assert!(max_diff(pb.as_slice(), &obb) < 1e-6);
    assert!((pa.mean() - p.f).abs() < 1e-12);
}

#[test]
fn swapped_or_mismatched_propagators_rejected() {
    let p = MaterialParams::new(0.4, 0.5).unwrap();
    let c = toy_config(4, 10);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let zero = Field2::zeros(4, 4);
    let f = solve_propagator(&zero, &zero, &plan, Direction::Forward, &p, &c).unwrap();
    let b = solve_propagator(&zero, &zero, &plan, Direction::Backward, &p, &c).unwrap();
    assert!(compute_density(&b, &f, &p).is_err());
    let other = BlockPlan::new(&p, 12);
    let b2 = solve_propagator(&zero, &zero, &other, Direction::Backward, &p, &c).unwrap();
    assert!(compute_density(&f, &b2, &p).is_err());
}

#[test]
fn non_finite_potential_rejected() {
    let p = MaterialParams::new(0.4, 0.5).unwrap();
    let c = toy_config(4, 10);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let mut w = Field2::zeros(4, 4);
    w.as_mut_slice()[3] = f64::NAN;
    let err = solve_propagator(&w, &w, &plan, Direction::Forward, &p, &c).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn exploding_potential_is_degenerate() {
    let p = MaterialParams::new(0.4, 0.5).unwrap();
    let c = toy_config(4, 10);
    let plan = BlockPlan::new(&p, c.contour_steps);
    let w = Field2::filled(4, 4, 1e3);
    let f = solve_propagator(&w, &w, &plan, Direction::Forward, &p, &c).unwrap();
    let b = solve_propagator(&w, &w, &plan, Direction::Backward, &p, &c).unwrap();
    assert!(matches!(compute_density(&f, &b, &p), Err(Error::Degenerate(_))));
}

#[test]
fn frozen_update_changes_nothing() {
    let p = MaterialParams::new(0.4, 1.0).unwrap();
    let c = SimConfig {
        mixing_rate: 0.0,
        ..toy_config(4, 10)
    };
    let mut s = FieldState::from_potentials(random_field(4, 0.1, 3), random_field(4, 0.1, 4), &p);
    let before = s.clone();
    let residual = update_fields(&mut s, &p, &c);
    assert_eq!(residual, 0.0);
    assert_eq!(s, before);
}

#[test]
fn satisfied_constraint_leaves_gamma() {
    let p = MaterialParams::new(0.4, 1.0).unwrap();
    let c = toy_config(4, 10);
    let mut s = FieldState::from_potentials(random_field(4, 0.1, 3), random_field(4, 0.1, 4), &p);
    s.phi_a = random_field(4, 0.2, 5);
    for (b, a) in s.phi_b.as_mut_slice().iter_mut().zip(s.phi_a.as_slice()) {
        *b = 1.0 - a;
    }
    s.gamma = random_field(4, 0.3, 6);
    let gamma = s.gamma.clone();
    update_fields(&mut s, &p, &c);
    assert!(max_diff(s.gamma.as_slice(), gamma.as_slice()) < 1e-15);
}

#[test]
fn hand_computed_mixing_step() {
    let p = MaterialParams::new(0.5, 0.8).unwrap();
    let c = SimConfig {
        mixing_rate: 0.5,
        incompressibility_rate: 0.25,
        ..toy_config(2, 4)
    };
    let mut s = FieldState {
        w_a: Field2::from_vec(2, 2, vec![0.0, 0.1, 0.2, 0.3]),
        w_b: Field2::from_vec(2, 2, vec![0.5, 0.4, 0.3, 0.2]),
        gamma: Field2::from_vec(2, 2, vec![0.0, 1.0, 0.0, -1.0]),
        phi_a: Field2::from_vec(2, 2, vec![0.2, 0.5, 0.9, 0.4]),
        phi_b: Field2::from_vec(2, 2, vec![0.8, 0.6, 0.1, 0.6]),
    };
    let residual = update_fields(&mut s, &p, &c);
    // site 1: gamma = 1 + 0.25*0.1 = 1.025
    //         V_A = 0.8*0.6 + 1.025 = 1.505 -> w_a = 0.1 + 0.5*(1.405) = 0.8025
    //         V_B = 0.8*0.5 + 1.025 = 1.425 -> w_b = 0.4 + 0.5*(1.025) = 0.9125
    let expected_w_a = [0.32, 0.8025, 0.14, -0.11];
    let expected_w_b = [0.33, 0.9125, 0.51, -0.24];
    let expected_gamma = [0.0, 1.025, 0.0, -1.0];
    assert!(max_diff(s.w_a.as_slice(), &expected_w_a) < 1e-14);
    assert!(max_diff(s.w_b.as_slice(), &expected_w_b) < 1e-14);
    assert!(max_diff(s.gamma.as_slice(), &expected_gamma) < 1e-14);
    // largest change: site 1, dw_a = 0.7025
    assert!((residual - 0.7025).abs() < 1e-14);
}

#[test]
fn one_iteration_matches_dense_oracle() {
    let p = MaterialParams::new(0.45, 0.6).unwrap();
    let c = toy_config(4, 16);
    let start = FieldState::from_potentials(random_field(4, 0.3, 11), random_field(4, 0.3, 12), &p);
    let run = run_scft_from(start.clone(), &p, &c).unwrap();
    assert_eq!(run.microstructure.iterations_used, 1);

    let of = oracle_propagator(&start.w_a, &start.w_b, &p, &c, Direction::Forward);
    let ob = oracle_propagator(&start.w_a, &start.w_b, &p, &c, Direction::Backward);
    let (oa, obb) = oracle_density(&of, &ob, &p, &c);
    let mut expected_w_a = start.w_a.as_slice().to_vec();
    let mut expected_w_b = start.w_b.as_slice().to_vec();
    let mut expected_gamma = vec![0.0; 16];
    for r in 0..16 {
        expected_gamma[r] += c.incompressibility_rate * (oa[r] + obb[r] - 1.0);
        let g = expected_gamma[r];
        expected_w_a[r] += c.mixing_rate * (p.chi * obb[r] + g - expected_w_a[r]);
        expected_w_b[r] += c.mixing_rate * (p.chi * oa[r] + g - expected_w_b[r]);
    }
    assert!(max_diff(run.state.phi_a.as_slice(), &oa) < 1e-6);
    assert!(max_diff(run.state.w_a.as_slice(), &expected_w_a) < 1e-6);
    assert!(max_diff(run.state.w_b.as_slice(), &expected_w_b) < 1e-6);
    assert!(max_diff(run.state.gamma.as_slice(), &expected_gamma) < 1e-6);
}

#[test]
fn propagators_stay_positive() {
    let p = MaterialParams::new(0.3, 1.0).unwrap();
    let c = toy_config(16, 50);
    let plan = BlockPlan::new(&p, c.contour_steps);
    for seed in 0..5 {
        let w_a = random_field(16, 2.0, seed);
        let w_b = random_field(16, 2.0, seed + 100);
        for dir in [Direction::Forward, Direction::Backward] {
            let q = solve_propagator(&w_a, &w_b, &plan, dir, &p, &c).unwrap();
            assert!(q.min_value() >= -1e-9);
        }
    }
}

fn small_run_config() -> SimConfig {
    SimConfig {
        lattice: [32, 32],
        system_size: [16.0, 16.0],
        contour_steps: 50,
        max_iterations: 3000,
        ..SimConfig::default()
    }
}

#[test]
fn no_interaction_converges_to_homogeneous_melt() {
    let p = MaterialParams::new(0.4, 0.0).unwrap();
    let c = SimConfig {
        lattice: [16, 16],
        tolerance: 1e-9,
        ..small_run_config()
    };
    let m = run_scft(&p, &c, 3).unwrap();
    assert!(m.converged);
    assert!(m.phi_a.max_deviation(0.4) <= 1e-6, "{}", m.phi_a.max_deviation(0.4));
}

#[test]
fn strong_segregation_and_disorder_on_either_side_of_spinodal() {
    let c = small_run_config();
    let ordered = run_scft(&MaterialParams::new(0.5, 1.0).unwrap(), &c, 5).unwrap();
    assert!(ordered.phi_a.max_deviation(0.5) > 0.2, "{}", ordered.phi_a.max_deviation(0.5));
    assert!((ordered.phi_a.mean() - 0.5).abs() < 1e-8);
    if ordered.converged {
        assert!(ordered.residual <= c.tolerance);
    }
    let disordered = run_scft(&MaterialParams::new(0.5, 0.1).unwrap(), &c, 5).unwrap();
    assert!(disordered.converged);
    assert!(disordered.phi_a.max_deviation(0.5) <= 0.05);
}

#[test]
fn runs_are_bit_reproducible() {
    let p = MaterialParams::new(0.45, 0.8).unwrap();
    let c = SimConfig {
        lattice: [16, 16],
        max_iterations: 40,
        ..small_run_config()
    };
    assert_eq!(run_scft(&p, &c, 9).unwrap(), run_scft(&p, &c, 9).unwrap());
}

#[test]
fn translated_noise_translates_solution() {
    let p = MaterialParams::new(0.5, 0.8).unwrap();
    let c = SimConfig {
        lattice: [16, 16],
        system_size: [8.0, 8.0],
        max_iterations: 200,
        ..small_run_config()
    };
    let start = init_fields(&p, &c.with_seed(4));
    let shifted = FieldState::from_potentials(start.w_a.shifted(3, 5), start.w_b.shifted(3, 5), &p);
    let a = run_scft_from(start, &p, &c).unwrap();
    let b = run_scft_from(shifted, &p, &c).unwrap();
    let expected = a.microstructure.phi_a.shifted(3, 5);
    assert!(max_diff(b.microstructure.phi_a.as_slice(), expected.as_slice()) < 1e-8);
}

#[test]
fn runaway_constraint_update_is_reported_as_divergence() {
    let p = MaterialParams::new(0.5, 1.0).unwrap();
    let c = SimConfig {
        lattice: [16, 16],
        incompressibility_rate: 80.0,
        mixing_rate: 1.0,
        max_iterations: 500,
        ..small_run_config()
    };
    match run_scft(&p, &c, 1) {
        Err(Error::Diverged { trace, .. }) => assert!(!trace.is_empty()),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_inputs_rejected() {
    assert!(MaterialParams::new(0.0, 0.5).is_err());
    assert!(MaterialParams::new(0.5, -1.0).is_err());
    assert!(MaterialParams::new(0.5, 0.5).unwrap().with_segments(0).is_err());
    let c = SimConfig {
        lattice: [48, 64],
        ..SimConfig::default()
    };
    assert!(c.validate().is_err());
    let c = SimConfig {
        contour_steps: 1,
        ..SimConfig::default()
    };
    assert!(c.validate().is_err());
}

#[test]
fn paired_solve_matches_separate_solves() {
    for (f, steps) in [(0.5, 20), (0.3, 20), (0.37, 23)] {
        let params = MaterialParams::new(f, 0.5).unwrap();
        let config = toy_config(8, steps);
        let w_a = random_field(8, 0.8, 1);
        let w_b = random_field(8, 0.8, 2);
        let plan = BlockPlan::new(&params, steps);
        let mut solver = PropagatorSolver::new(&params, &config);
        let (fwd, bwd) = solver.solve_pair(&w_a, &w_b, &plan).unwrap();
        let fwd_ref = solver.solve(&w_a, &w_b, &plan, Direction::Forward).unwrap();
        let bwd_ref = solver.solve(&w_a, &w_b, &plan, Direction::Backward).unwrap();
        for (got, want) in [(&fwd, &fwd_ref), (&bwd, &bwd_ref)] {
            assert_eq!(got.direction, want.direction);
            for (a, b) in got.q.iter().zip(&want.q) {
                assert!(max_diff(a.as_slice(), b.as_slice()) < 1e-12, "f = {f}");
            }
        }
    }
}
