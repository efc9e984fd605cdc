use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::ProbabilityVector;

/// Empirical frequencies of `shots` independent measurements.
///
/// `shots = 0` is the exact mode and returns the input unchanged.
pub fn sample_shots(probs: &ProbabilityVector, shots: u32, seed: u64) -> ProbabilityVector {
    if shots == 0 {
        return probs.clone();
    }
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in &probs.probs {
        acc += p.max(0.0);
        cumulative.push(acc);
    }
    let last_nonzero = probs.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut counts = vec![0u32; probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let k = cumulative.partition_point(|&c| c <= u).min(last_nonzero);
        counts[k] += 1;
    }
    ProbabilityVector {
        probs: counts.iter().map(|&c| c as f64 / shots as f64).collect(),
    }
}
