use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::T(q) => (q, None),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    /// Adjoint, restricted to gates whose adjoint is in the gate set.
    pub fn clifford_inverse(&self) -> Option<Gate> {
        match *self {
            Gate::H(q) => Some(Gate::H(q)),
            Gate::S(q) => Some(Gate::Sdg(q)),
            Gate::Sdg(q) => Some(Gate::S(q)),
            Gate::Cnot { control, target } => Some(Gate::Cnot { control, target }),
            Gate::T(_) => None,
        }
    }

    pub fn is_clifford(&self) -> bool {
        !matches!(self, Gate::T(_))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "h {q}"),
            Gate::S(q) => write!(f, "s {q}"),
            Gate::Sdg(q) => write!(f, "sdg {q}"),
            Gate::T(q) => write!(f, "t {q}"),
            Gate::Cnot { control, target } => write!(f, "cx {control} {target}"),
        }
    }
}

/// Ordered gate list on a fixed register width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSequence {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let seq = Self { n_qubits, gates };
        seq.validate()?;
        Ok(seq)
    }

    pub fn empty(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let (a, b) = g.qubits();
            if a >= self.n_qubits || b.is_some_and(|b| b >= self.n_qubits) {
                return Err(Error::InvalidInput(format!("gate `{g}` out of range for {} qubits", self.n_qubits)));
            }
            if b == Some(a) {
                return Err(Error::InvalidInput(format!("gate `{g}` has control equal to target")));
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.gates.push(gate);
        if let Err(e) = self.validate() {
            self.gates.pop();
            return Err(e);
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &GateSequence) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Shape(format!(
                "cannot append a {}-qubit sequence to a {}-qubit one",
                other.n_qubits, self.n_qubits
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }
}

impl fmt::Display for GateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}
