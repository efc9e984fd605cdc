//! Uniform sampling of Clifford unitaries and their synthesis into {H, S, S†, CNOT}.
//!
//! A Clifford is stored as a stabilizer tableau: rows `0..n` are the images of
//! `X_0..X_{n-1}` (destabilizers), rows `n..2n` the images of `Z_0..Z_{n-1}`,
//! each as bit masks over qubits plus a sign bit. Sampling follows the
//! Bravyi-Maslov Bruhat decomposition `F1 (H-layer . permutation) F2` with
//! quantum-Mallows weights, which is exactly uniform over the group.

use rand::Rng;

use super::gates::{Gate, GateSequence};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tableau {
    n: usize,
    x: Vec<u32>,
    z: Vec<u32>,
    sign: Vec<bool>,
}

impl Tableau {
    pub fn identity(n: usize) -> Self {
        assert!(n <= 32, "tableau rows are 32-bit masks");
        let mut x = vec![0; 2 * n];
        let mut z = vec![0; 2 * n];
        for q in 0..n {
            x[q] = 1 << q;
            z[n + q] = 1 << q;
        }
        Self {
            n,
            x,
            z,
            sign: vec![false; 2 * n],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Row `r` as `(x mask, z mask, negative sign)`.
    pub fn row(&self, r: usize) -> (u32, u32, bool) {
        (self.x[r], self.z[r], self.sign[r])
    }

    /// Tableau of the circuit, built by conjugating the identity gate by gate.
    pub fn from_sequence(seq: &GateSequence) -> Option<Self> {
        let mut t = Self::identity(seq.n_qubits());
        for &g in seq.gates() {
            if !g.is_clifford() {
                return None;
            }
            t.apply(g);
        }
        Some(t)
    }

    /// Composes `gate` after the current Clifford.
    pub fn apply(&mut self, gate: Gate) {
        match gate {
            Gate::H(q) => {
                let b = 1u32 << q;
                for r in 0..2 * self.n {
                    let (xb, zb) = (self.x[r] & b != 0, self.z[r] & b != 0);
                    self.sign[r] ^= xb && zb;
                    self.x[r] = (self.x[r] & !b) | if zb { b } else { 0 };
                    self.z[r] = (self.z[r] & !b) | if xb { b } else { 0 };
                }
            }
            Gate::S(q) => {
                let b = 1u32 << q;
                for r in 0..2 * self.n {
                    let (xb, zb) = (self.x[r] & b != 0, self.z[r] & b != 0);
                    self.sign[r] ^= xb && zb;
                    if xb {
                        self.z[r] ^= b;
                    }
                }
            }
            Gate::Sdg(q) => {
                for _ in 0..3 {
                    self.apply(Gate::S(q));
                }
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (1u32 << control, 1u32 << target);
                for r in 0..2 * self.n {
                    let xc = self.x[r] & c != 0;
                    let zc = self.z[r] & c != 0;
                    let xt = self.x[r] & t != 0;
                    let zt = self.z[r] & t != 0;
                    self.sign[r] ^= xc && zt && (xt == zc);
                    if xc {
                        self.x[r] ^= t;
                    }
                    if zt {
                        self.z[r] ^= c;
                    }
                }
            }
            Gate::T(_) => panic!("T is not a Clifford gate"),
        }
    }

    /// Symplectic inner product of rows `a` and `b` (1 when they anticommute).
    pub fn symplectic_product(&self, a: usize, b: usize) -> u32 {
        ((self.x[a] & self.z[b]).count_ones() + (self.z[a] & self.x[b]).count_ones()) % 2
    }

    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        (0..2 * n).all(|a| {
            (0..2 * n).all(|b| {
                let expected = u32::from(a % n == b % n && a != b);
                self.symplectic_product(a, b) == expected
            })
        })
    }

    /// A gate sequence implementing this tableau exactly (signs included).
    pub fn synthesize(&self) -> GateSequence {
        let n = self.n;
        let mut work = self.clone();
        let mut record: Vec<Gate> = Vec::new();
        let mut emit = |t: &mut Tableau, g: Gate| {
            t.apply(g);
            record.push(g);
        };
        let has = |mask: u32, q: usize| mask >> q & 1 == 1;

        for i in 0..n {
            let d = i;
            let s = n + i;

            // destabilizer: bring an X component onto qubit i
            let pick = (i..n).find(|&j| has(work.x[d], j));
            let j = match pick {
                Some(j) => j,
                None => {
                    let j = (i..n)
                        .find(|&j| has(work.z[d], j))
                        .expect("destabilizer row is nontrivial on remaining qubits");
                    emit(&mut work, Gate::H(j));
                    j
                }
            };
            if j != i {
                emit(&mut work, Gate::Cnot { control: i, target: j });
                emit(&mut work, Gate::Cnot { control: j, target: i });
                emit(&mut work, Gate::Cnot { control: i, target: j });
            }
            // clear every other qubit of the destabilizer
            for j in i + 1..n {
                match (has(work.x[d], j), has(work.z[d], j)) {
                    (false, true) => emit(&mut work, Gate::H(j)),
                    (true, true) => emit(&mut work, Gate::S(j)),
                    _ => {}
                }
            }
            for j in i + 1..n {
                if has(work.x[d], j) {
                    emit(&mut work, Gate::Cnot { control: i, target: j });
                }
            }
            if has(work.z[d], i) {
                emit(&mut work, Gate::S(i));
            }

            // stabilizer: Y on qubit i becomes Z without touching X_i
            if has(work.x[s], i) {
                emit(&mut work, Gate::H(i));
                emit(&mut work, Gate::S(i));
                emit(&mut work, Gate::H(i));
            }
            for j in i + 1..n {
                match (has(work.x[s], j), has(work.z[s], j)) {
                    (true, false) => emit(&mut work, Gate::H(j)),
                    (true, true) => {
                        emit(&mut work, Gate::S(j));
                        emit(&mut work, Gate::H(j));
                    }
                    _ => {}
                }
            }
            for j in i + 1..n {
                if has(work.z[s], j) {
                    emit(&mut work, Gate::Cnot { control: j, target: i });
                }
            }
        }
        for q in 0..n {
            if work.sign[q] {
                // Z flips the sign of X
                emit(&mut work, Gate::S(q));
                emit(&mut work, Gate::S(q));
            }
            if work.sign[n + q] {
                // X flips the sign of Z
                emit(&mut work, Gate::H(q));
                emit(&mut work, Gate::S(q));
                emit(&mut work, Gate::S(q));
                emit(&mut work, Gate::H(q));
            }
        }
        debug_assert_eq!(work, Tableau::identity(n));

        let gates = record
            .iter()
            .rev()
            .map(|g| g.clifford_inverse().expect("synthesis only emits Clifford gates"))
            .collect();
        GateSequence::new(n, gates).expect("synthesized gates stay in range")
    }
}

/// Dense GF(2) matrix helper for the sampler.
type BitMatrix = Vec<Vec<bool>>;

fn identity_matrix(n: usize) -> BitMatrix {
    (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect()
}

fn matmul(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    let (rows, inner, cols) = (a.len(), b.len(), b[0].len());
    (0..rows)
        .map(|i| (0..cols).map(|j| (0..inner).fold(false, |acc, k| acc ^ (a[i][k] && b[k][j]))).collect())
        .collect()
}

fn transpose(a: &BitMatrix) -> BitMatrix {
    let n = a.len();
    (0..a[0].len()).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Inverse of a unit lower-triangular matrix over GF(2) by forward substitution.
fn inverse_unit_lower(a: &BitMatrix) -> BitMatrix {
    let n = a.len();
    let mut inv = identity_matrix(n);
    for i in 0..n {
        for j in 0..i {
            // inv[i][j] = sum_{k=j}^{i-1} a[i][k] inv[k][j]
            let mut v = false;
            for k in j..i {
                v ^= a[i][k] && inv[k][j];
            }
            inv[i][j] = v;
        }
    }
    inv
}

fn fill_lower<R: Rng + ?Sized>(m: &mut BitMatrix, rng: &mut R, symmetric: bool) {
    let n = m.len();
    for i in 0..n {
        for j in 0..i {
            let v: bool = rng.random();
            m[i][j] = v;
            if symmetric {
                m[j][i] = v;
            }
        }
    }
}

/// Hadamard pattern and qubit permutation drawn from the quantum Mallows distribution.
fn sample_mallows<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<bool>, Vec<usize>) {
    let mut hadamard = vec![false; n];
    let mut perm = vec![0; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let m = n - i;
        let eps = 4f64.powi(-(m as i32));
        let r: f64 = rng.random();
        let index = -((r + (1.0 - r) * eps).log2().ceil()) as usize;
        hadamard[i] = index < m;
        let k = if index < m { index } else { 2 * m - index - 1 };
        perm[i] = remaining.remove(k);
    }
    (hadamard, perm)
}

/// Symplectic block `[[delta, 0], [gamma delta, delta^{-T}]]` of a Hadamard-free layer.
fn borel_block<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitMatrix {
    let mut gamma = vec![vec![false; n]; n];
    for (i, row) in gamma.iter_mut().enumerate() {
        row[i] = rng.random();
    }
    fill_lower(&mut gamma, rng, true);
    let mut delta = identity_matrix(n);
    fill_lower(&mut delta, rng, false);
    let prod = matmul(&gamma, &delta);
    let inv_t = transpose(&inverse_unit_lower(&delta));
    let mut block = vec![vec![false; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            block[i][j] = delta[i][j];
            block[n + i][j] = prod[i][j];
            block[n + i][n + j] = inv_t[i][j];
        }
    }
    block
}

/// Draws a tableau uniformly from the `n`-qubit Clifford group (signs included).
pub fn sample_clifford_tableau<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Tableau {
    let (hadamard, perm) = sample_mallows(n, rng);
    let block1 = borel_block(n, rng);
    let block2 = borel_block(n, rng);

    let mut table: BitMatrix = vec![vec![false; 2 * n]; 2 * n];
    for i in 0..n {
        table[i] = block2[perm[i]].clone();
        table[n + i] = block2[n + perm[i]].clone();
    }
    for i in 0..n {
        if hadamard[i] {
            table.swap(i, n + i);
        }
    }
    let symplectic = matmul(&block1, &table);

    let mut t = Tableau::identity(n);
    for r in 0..2 * n {
        t.x[r] = (0..n).filter(|&q| symplectic[r][q]).fold(0, |m, q| m | 1 << q);
        t.z[r] = (0..n).filter(|&q| symplectic[r][n + q]).fold(0, |m, q| m | 1 << q);
        t.sign[r] = rng.random();
    }
    t
}
