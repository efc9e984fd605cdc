use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::Field2;
use super::propagator::{compute_density, BlockPlan, PropagatorSolver};
use super::{MaterialParams, SimConfig};
use crate::error::{Error, Result};

/// Mean fields, constraint field and densities of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub w_a: Field2,
    pub w_b: Field2,
    pub gamma: Field2,
    pub phi_a: Field2,
    pub phi_b: Field2,
}

impl FieldState {
    /// Homogeneous densities `(f, 1 - f)` with the given potentials and `gamma = 0`.
    pub fn from_potentials(w_a: Field2, w_b: Field2, params: &MaterialParams) -> Self {
        let (nx, ny) = (w_a.nx(), w_a.ny());
        Self {
            w_a,
            w_b,
            gamma: Field2::zeros(nx, ny),
            phi_a: Field2::filled(nx, ny, params.f),
            phi_b: Field2::filled(nx, ny, 1.0 - params.f),
        }
    }

    /// `max_r |phi_A + phi_B - 1|`.
    pub fn incompressibility_error(&self) -> f64 {
        self.phi_a
            .as_slice()
            .iter()
            .zip(self.phi_b.as_slice())
            .map(|(a, b)| (a + b - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Seeded uniform noise in `[-amplitude, amplitude]` on both potentials.
pub fn init_fields(params: &MaterialParams, config: &SimConfig) -> FieldState {
    let [nx, ny] = config.lattice;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let amp = config.noise_amplitude;
    let noise = |rng: &mut ChaCha8Rng| {
        let data = (0..nx * ny)
            .map(|_| if amp > 0.0 { rng.random_range(-amp..=amp) } else { 0.0 })
            .collect();
        Field2::from_vec(nx, ny, data)
    };
    let w_a = noise(&mut rng);
    let w_b = noise(&mut rng);
    FieldState::from_potentials(w_a, w_b, params)
}

/// Pushes `gamma` along the incompressibility violation, then relaxes the
/// potentials toward `V_A = chi phi_B + gamma`, `V_B = chi phi_A + gamma`
/// using the updated `gamma`.
///
/// Returns the max-norm of the change over all three fields.
pub fn update_fields(state: &mut FieldState, params: &MaterialParams, config: &SimConfig) -> f64 {
    let chi = params.chi;
    let lambda = config.mixing_rate;
    let kappa = config.incompressibility_rate;
    let mut residual: f64 = 0.0;
    let n = state.w_a.len();
    let (w_a, w_b, gamma) = (
        state.w_a.as_mut_slice(),
        state.w_b.as_mut_slice(),
        state.gamma.as_mut_slice(),
    );
    let (phi_a, phi_b) = (state.phi_a.as_slice(), state.phi_b.as_slice());
    for r in 0..n {
        let dg = kappa * (phi_a[r] + phi_b[r] - 1.0);
        gamma[r] += dg;
        let target_a = chi * phi_b[r] + gamma[r];
        let target_b = chi * phi_a[r] + gamma[r];
        let dw_a = lambda * (target_a - w_a[r]);
        let dw_b = lambda * (target_b - w_b[r]);
        w_a[r] += dw_a;
        w_b[r] += dw_b;
        residual = residual.max(dw_a.abs()).max(dw_b.abs()).max(dg.abs());
    }
    if residual.is_nan() {
        f64::NAN
    } else {
        residual
    }
}

/// Density field produced by one converged (or budget-capped) SCFT run.
#[derive(Debug, Clone, PartialEq)]
pub struct Microstructure {
    pub phi_a: Field2,
    pub params: MaterialParams,
    pub seed: u64,
    pub converged: bool,
    pub iterations_used: usize,
    pub residual: f64,
}

/// Full outcome of a run, including the final field state and residual history.
#[derive(Debug, Clone)]
pub struct ScftRun {
    pub microstructure: Microstructure,
    pub state: FieldState,
    pub residuals: Vec<f64>,
}

/// Runs the self-consistency loop from seeded noise.
pub fn run_scft(params: &MaterialParams, config: &SimConfig, seed: u64) -> Result<Microstructure> {
    let config = config.with_seed(seed);
    params.validate()?;
    config.validate()?;
    let state = init_fields(params, &config);
    run_scft_from(state, params, &config).map(|run| run.microstructure)
}

/// Runs the self-consistency loop from an explicit starting state.
pub fn run_scft_from(mut state: FieldState, params: &MaterialParams, config: &SimConfig) -> Result<ScftRun> {
    params.validate()?;
    config.validate()?;
    let mut solver = PropagatorSolver::new(params, config);
    let plan = BlockPlan::new(params, config.contour_steps);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let (q_fwd, q_bwd) = solver.solve_pair(&state.w_a, &state.w_b, &plan)?;
        let (phi_a, phi_b) = match compute_density(&q_fwd, &q_bwd, params) {
            Ok(densities) => densities,
            Err(Error::Degenerate(_)) if iterations > 1 => {
                return Err(Error::Diverged {
                    iteration: iterations,
                    residual: f64::INFINITY,
                    trace: residuals,
                })
            }
            Err(e) => return Err(e),
        };
        state.phi_a = phi_a;
        state.phi_b = phi_b;
        let incompressibility = state.incompressibility_error();

        let mut next = state.clone();
        let residual = update_fields(&mut next, params, config);
        residuals.push(residual);
        if !residual.is_finite() || residual > config.divergence_threshold {
            return Err(Error::Diverged {
                iteration: iterations,
                residual,
                trace: residuals,
            });
        }
        if residual <= config.tolerance && incompressibility <= config.tolerance {
            converged = true;
            break;
        }
        state = next;
    }

    let residual = residuals.last().copied().unwrap_or(f64::INFINITY);
    Ok(ScftRun {
        microstructure: Microstructure {
            phi_a: state.phi_a.clone(),
            params: *params,
            seed: config.seed,
            converged,
            iterations_used: iterations,
            residual,
        },
        state,
        residuals,
    })
}
