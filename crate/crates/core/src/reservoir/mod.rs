//! Angle encoding, the random Clifford+T reservoir and basis-state readout.

mod clifford;
mod gates;
mod shots;
mod state;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use clifford::{sample_clifford_tableau, Tableau};
pub use gates::{Gate, GateSequence};
pub use shots::sample_shots;
pub use state::{apply, encode, measure_probs, ProbabilityVector, StateVector};

use crate::error::{Error, Result};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 9;

/// Which parts of the reservoir circuit are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    CliffordT,
    CliffordOnly,
    TOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::CliffordT, Variant::CliffordOnly, Variant::TOnly];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::CliffordT => "clifford-t",
            Variant::CliffordOnly => "clifford-only",
            Variant::TOnly => "t-only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown reservoir variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReservoirSpec {
    pub n_qubits: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl ReservoirSpec {
    pub fn new(n_qubits: usize, variant: Variant, seed: u64) -> Result<Self> {
        let spec = Self {
            n_qubits,
            variant,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_QUBITS..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::InvalidInput(format!(
                "n_qubits must lie in [{MIN_QUBITS}, {MAX_QUBITS}], got {}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// A uniformly random `n`-qubit Clifford, synthesized to {H, S, S†, CNOT}.
pub fn sample_clifford(n_qubits: usize, seed: u64) -> Result<GateSequence> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::InvalidInput(format!("cannot sample a Clifford on {n_qubits} qubits")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_clifford_tableau(n_qubits, &mut rng).synthesize())
}

/// H T H on every qubit.
pub fn t_layer(n_qubits: usize) -> GateSequence {
    let gates = (0..n_qubits).flat_map(|q| [Gate::H(q), Gate::T(q), Gate::H(q)]).collect();
    GateSequence::new(n_qubits, gates).expect("layer indices are in range")
}

pub fn build_reservoir(spec: &ReservoirSpec) -> Result<GateSequence> {
    spec.validate()?;
    let n = spec.n_qubits;
    Ok(match spec.variant {
        Variant::CliffordT => {
            let mut seq = sample_clifford(n, spec.seed)?;
            seq.extend(&t_layer(n))?;
            seq
        }
        Variant::CliffordOnly => sample_clifford(n, spec.seed)?,
        Variant::TOnly => t_layer(n),
    })
}

/// A built reservoir shared across samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    spec: ReservoirSpec,
    circuit: GateSequence,
}

impl Reservoir {
    pub fn new(spec: ReservoirSpec) -> Result<Self> {
        let circuit = build_reservoir(&spec)?;
        Ok(Self { spec, circuit })
    }

    pub fn spec(&self) -> &ReservoirSpec {
        &self.spec
    }

    pub fn circuit(&self) -> &GateSequence {
        &self.circuit
    }

    /// Exact output distribution for one encoded feature vector.
    pub fn probabilities(&self, features: &[f64]) -> Result<ProbabilityVector> {
        let state = encode(features, self.spec.n_qubits)?;
        Ok(measure_probs(&apply(&self.circuit, &state)?))
    }

    /// Output distribution estimated from `shots` measurements (`0` = exact).
    pub fn sampled(&self, features: &[f64], shots: u32, seed: u64) -> Result<ProbabilityVector> {
        Ok(sample_shots(&self.probabilities(features)?, shots, seed))
    }
}
