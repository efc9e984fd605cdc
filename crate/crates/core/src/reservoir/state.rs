use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gates::{Gate, GateSequence};
use crate::error::{Error, Result};

/// Dense register state; qubit `l` is bit `l` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::default(); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Shape(format!("{len} amplitudes is not a power of two")));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_gate(&mut self, gate: Gate) {
        let amps = &mut self.amplitudes;
        match gate {
            Gate::H(q) => {
                let bit = 1 << q;
                for i in 0..amps.len() {
                    if i & bit == 0 {
                        let (a, b) = (amps[i], amps[i | bit]);
                        amps[i] = (a + b) * FRAC_1_SQRT_2;
                        amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
            Gate::S(q) => phase(amps, q, Complex64::new(0.0, 1.0)),
            Gate::Sdg(q) => phase(amps, q, Complex64::new(0.0, -1.0)),
            Gate::T(q) => phase(amps, q, Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
            Gate::Cnot { control, target } => {
                let (c, t) = (1 << control, 1 << target);
                for i in 0..amps.len() {
                    if i & c != 0 && i & t == 0 {
                        amps.swap(i, i | t);
                    }
                }
            }
        }
    }
}

fn phase(amps: &mut [Complex64], q: usize, factor: Complex64) {
    let bit = 1 << q;
    for (i, a) in amps.iter_mut().enumerate() {
        if i & bit != 0 {
            *a *= factor;
        }
    }
}

/// Product-state angle encoding: qubit `l` gets polar angle `x[l]` and
/// azimuth `x[n + l]`.
pub fn encode(features: &[f64], n_qubits: usize) -> Result<StateVector> {
    if features.len() != 2 * n_qubits {
        return Err(Error::Encoding {
            expected: 2 * n_qubits,
            got: features.len(),
        });
    }
    let factors: Vec<(Complex64, Complex64)> = (0..n_qubits)
        .map(|l| {
            let theta = features[l];
            let phi = features[n_qubits + l];
            let zero = Complex64::new((theta / 2.0).cos(), 0.0);
            let one = Complex64::from_polar((theta / 2.0).sin(), phi);
            (zero, one)
        })
        .collect();
    let amplitudes = (0..1usize << n_qubits)
        .map(|b| {
            factors
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (l, (zero, one))| {
                    acc * if b >> l & 1 == 1 { *one } else { *zero }
                })
        })
        .collect();
    Ok(StateVector { n_qubits, amplitudes })
}

/// Applies the gates in order.
pub fn apply(sequence: &GateSequence, state: &StateVector) -> Result<StateVector> {
    if sequence.n_qubits() != state.n_qubits {
        return Err(Error::Shape(format!(
            "{}-qubit circuit applied to a {}-qubit state",
            sequence.n_qubits(),
            state.n_qubits
        )));
    }
    let mut out = state.clone();
    for &g in sequence.gates() {
        out.apply_gate(g);
    }
    Ok(out)
}

/// Computational-basis outcome distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pub probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn total_variation(&self, other: &ProbabilityVector) -> f64 {
        0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

pub fn measure_probs(state: &StateVector) -> ProbabilityVector {
    ProbabilityVector {
        probs: state.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
    }
}
