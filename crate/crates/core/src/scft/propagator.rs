use serde::{Deserialize, Serialize};

use super::field::{wavenumbers_squared, Field2, Spectral};
use super::{MaterialParams, SimConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Starts at the free end of the A block.
    Forward,
    /// Starts at the free end of the B block.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourStep {
    pub block: Block,
    pub ds: f64,
}

/// Discretization of the chain contour `[0, N]` into A steps followed by B steps.
///
/// Each block is cut into equal steps so the A/B junction always falls on a node.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPlan {
    steps: Vec<ContourStep>,
    a_steps: usize,
}

impl BlockPlan {
    pub fn new(params: &MaterialParams, contour_steps: usize) -> Self {
        let n = params.n_segments as f64;
        let a_steps = ((params.f * contour_steps as f64).round() as usize).clamp(1, contour_steps - 1);
        let b_steps = contour_steps - a_steps;
        let ds_a = params.f * n / a_steps as f64;
        let ds_b = (1.0 - params.f) * n / b_steps as f64;
        let mut steps = vec![ContourStep { block: Block::A, ds: ds_a }; a_steps];
        steps.extend(std::iter::repeat_n(ContourStep { block: Block::B, ds: ds_b }, b_steps));
        Self { steps, a_steps }
    }

    pub fn steps(&self) -> &[ContourStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Number of contour steps in the A block.
    pub fn a_steps(&self) -> usize {
        self.a_steps
    }

    pub fn ds(&self, block: Block) -> f64 {
        self.steps
            .iter()
            .find(|s| s.block == block)
            .map(|s| s.ds)
            .unwrap_or(0.0)
    }

    /// Steps in the order the given direction walks them.
    pub fn walk(&self, direction: Direction) -> Vec<ContourStep> {
        match direction {
            Direction::Forward => self.steps.clone(),
            Direction::Backward => self.steps.iter().rev().copied().collect(),
        }
    }
}

/// Chain propagator history `q(r, s)` at every contour node of one direction.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub q: Vec<Field2>,
    pub direction: Direction,
    pub plan: BlockPlan,
}

impl Propagator {
    pub fn head(&self) -> &Field2 {
        &self.q[0]
    }

    pub fn tail(&self) -> &Field2 {
        &self.q[self.q.len() - 1]
    }

    pub fn min_value(&self) -> f64 {
        self.q.iter().map(Field2::min).fold(f64::INFINITY, f64::min)
    }
}

/// Reusable FFT workspace for propagating chains on one lattice.
#[derive(Debug)]
pub struct PropagatorSolver {
    spectral: Spectral,
    ksq: Field2,
    bond_length: f64,
    beta: f64,
    kernels: Vec<(f64, Vec<f64>)>,
}

impl PropagatorSolver {
    pub fn new(params: &MaterialParams, config: &SimConfig) -> Self {
        let [nx, ny] = config.lattice;
        let [lx, ly] = config.system_size;
        Self {
            spectral: Spectral::new(nx, ny),
            ksq: wavenumbers_squared(nx, ny, lx, ly),
            bond_length: params.bond_length,
            beta: params.beta,
            kernels: Vec::new(),
        }
    }

    fn kernel_index(&mut self, ds: f64) -> usize {
        if let Some(i) = self.kernels.iter().position(|(d, _)| *d == ds) {
            return i;
        }
        let coeff = ds * self.bond_length * self.bond_length / 6.0;
        let mut k = self.ksq.clone();
        for v in k.as_mut_slice() {
            *v = (-coeff * *v).exp();
        }
        let layout = self.spectral.kspace_layout(&k);
        self.kernels.push((ds, layout));
        self.kernels.len() - 1
    }

    /// Half-step factors `exp(-beta w ds / 2)` and kernel slots for blocks A and B.
    fn prepare(&mut self, w_a: &Field2, w_b: &Field2, plan: &BlockPlan) -> Result<([Vec<f64>; 2], [usize; 2])> {
        if !w_a.is_finite() || !w_b.is_finite() {
            return Err(Error::InvalidInput("potential field contains non-finite values".into()));
        }
        if (w_b.nx(), w_b.ny()) != (w_a.nx(), w_a.ny()) || w_a.len() != self.ksq.len() {
            return Err(Error::Shape("potential fields do not match the solver lattice".into()));
        }
        let half = |w: &Field2, ds: f64| -> Vec<f64> {
            w.as_slice().iter().map(|&v| (-self.beta * v * ds / 2.0).exp()).collect()
        };
        let (ds_a, ds_b) = (plan.ds(Block::A), plan.ds(Block::B));
        let halves = [half(w_a, ds_a), half(w_b, ds_b)];
        let ids = [self.kernel_index(ds_a), self.kernel_index(ds_b)];
        Ok((halves, ids))
    }

    /// Integrates `dq/ds = (b^2/6) lap q - beta w q` from `q = 1` along the plan.
    pub fn solve(
        &mut self,
        w_a: &Field2,
        w_b: &Field2,
        plan: &BlockPlan,
        direction: Direction,
    ) -> Result<Propagator> {
        let (halves, ids) = self.prepare(w_a, w_b, plan)?;
        let (nx, ny) = (w_a.nx(), w_a.ny());
        let steps = plan.walk(direction);
        let mut q = Vec::with_capacity(steps.len() + 1);
        q.push(Field2::filled(nx, ny, 1.0));
        let mut work = vec![0.0; nx * ny];
        for step in &steps {
            let slot = step.block as usize;
            let prev = q.last().expect("propagator starts with the initial node").as_slice();
            half_step(&mut work, prev, &halves[slot]);
            self.spectral.convolve(&mut work, &self.kernels[ids[slot]].1);
            scale(&mut work, &halves[slot]);
            q.push(Field2::from_vec(nx, ny, work.clone()));
        }
        Ok(Propagator {
            q,
            direction,
            plan: plan.clone(),
        })
    }

    /// Forward and backward propagators together. Steps where both walks use
    /// the same kernel share one complex FFT.
    pub fn solve_pair(&mut self, w_a: &Field2, w_b: &Field2, plan: &BlockPlan) -> Result<(Propagator, Propagator)> {
        let (halves, ids) = self.prepare(w_a, w_b, plan)?;
        let (nx, ny) = (w_a.nx(), w_a.ny());
        let fwd_steps = plan.walk(Direction::Forward);
        let bwd_steps = plan.walk(Direction::Backward);
        let mut qf = Vec::with_capacity(fwd_steps.len() + 1);
        let mut qb = Vec::with_capacity(bwd_steps.len() + 1);
        qf.push(Field2::filled(nx, ny, 1.0));
        qb.push(Field2::filled(nx, ny, 1.0));
        let mut wf = vec![0.0; nx * ny];
        let mut wb = vec![0.0; nx * ny];
        for (sf, sb) in fwd_steps.iter().zip(&bwd_steps) {
            let (slot_f, slot_b) = (sf.block as usize, sb.block as usize);
            half_step(&mut wf, qf.last().expect("initial node").as_slice(), &halves[slot_f]);
            half_step(&mut wb, qb.last().expect("initial node").as_slice(), &halves[slot_b]);
            if ids[slot_f] == ids[slot_b] {
                self.spectral.convolve_pair(&mut wf, &mut wb, &self.kernels[ids[slot_f]].1);
            } else {
                self.spectral.convolve(&mut wf, &self.kernels[ids[slot_f]].1);
                self.spectral.convolve(&mut wb, &self.kernels[ids[slot_b]].1);
            }
            scale(&mut wf, &halves[slot_f]);
            scale(&mut wb, &halves[slot_b]);
            qf.push(Field2::from_vec(nx, ny, wf.clone()));
            qb.push(Field2::from_vec(nx, ny, wb.clone()));
        }
        let fwd = Propagator {
            q: qf,
            direction: Direction::Forward,
            plan: plan.clone(),
        };
        let bwd = Propagator {
            q: qb,
            direction: Direction::Backward,
            plan: plan.clone(),
        };
        Ok((fwd, bwd))
    }
}

fn half_step(out: &mut [f64], prev: &[f64], h: &[f64]) {
    for ((o, &p), &e) in out.iter_mut().zip(prev).zip(h) {
        *o = p * e;
    }
}

fn scale(out: &mut [f64], h: &[f64]) {
    for (o, &e) in out.iter_mut().zip(h) {
        *o *= e;
    }
}

/// One-shot propagator solve; allocates a fresh FFT workspace.
pub fn solve_propagator(
    w_a: &Field2,
    w_b: &Field2,
    plan: &BlockPlan,
    direction: Direction,
    params: &MaterialParams,
    config: &SimConfig,
) -> Result<Propagator> {
    PropagatorSolver::new(params, config).solve(w_a, w_b, plan, direction)
}

/// Segment densities from the forward/backward propagator pair.
///
/// The contour integral over each block uses the trapezoid rule; each density is
/// normalized so its spatial mean is the block's volume fraction.
pub fn compute_density(
    q_fwd: &Propagator,
    q_bwd: &Propagator,
    params: &MaterialParams,
) -> Result<(Field2, Field2)> {
    if q_fwd.direction != Direction::Forward || q_bwd.direction != Direction::Backward {
        return Err(Error::InvalidInput("propagator directions are swapped".into()));
    }
    let n = q_fwd.plan.len();
    if q_fwd.q.len() != n + 1 || q_bwd.q.len() != n + 1 || q_bwd.plan != q_fwd.plan {
        return Err(Error::Shape("propagators were computed on different contour plans".into()));
    }
    let a_steps = q_fwd.plan.a_steps();
    let ds_a = q_fwd.plan.ds(Block::A);
    let ds_b = q_fwd.plan.ds(Block::B);
    let (nx, ny) = (q_fwd.head().nx(), q_fwd.head().ny());

    let mut int_a = vec![0.0; nx * ny];
    let mut int_b = vec![0.0; nx * ny];
    for node in 0..=n {
        let fwd = q_fwd.q[node].as_slice();
        let bwd = q_bwd.q[n - node].as_slice();
        if node <= a_steps {
            let weight = if node == 0 || node == a_steps { 0.5 * ds_a } else { ds_a };
            for ((acc, &a), &b) in int_a.iter_mut().zip(fwd).zip(bwd) {
                *acc += weight * a * b;
            }
        }
        if node >= a_steps {
            let weight = if node == a_steps || node == n { 0.5 * ds_b } else { ds_b };
            for ((acc, &a), &b) in int_b.iter_mut().zip(fwd).zip(bwd) {
                *acc += weight * a * b;
            }
        }
    }

    let normalize = |mut v: Vec<f64>, fraction: f64| -> Result<Field2> {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::Degenerate(format!(
                "single-chain partition function is {mean:e}"
            )));
        }
        let scale = fraction / mean;
        for x in &mut v {
            *x *= scale;
        }
        Ok(Field2::from_vec(nx, ny, v))
    };
    Ok((normalize(int_a, params.f)?, normalize(int_b, 1.0 - params.f)?))
}
