//! Partially coherent two-electron states from an entangled pair⊗emitter
//! state: construction, partial traces and coherence classification.
//!
//! The whole pipeline runs in exact rational arithmetic; floating point only
//! appears at the interface (eigenvalue checks, exports).

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

type R = Ratio<i64>;

/// Off-diagonal magnitudes at or below this are classified as decohered.
pub const COHERENCE_THRESHOLD: f64 = 1e-12;

/// One tensor factor of the composite basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// Ordered orbital pairs (i, j), i ≠ j, in the canonical order
    /// (min,max)-lexicographic with each unordered pair expanded as
    /// (i,j), (j,i) — for three orbitals: ab, ba, ac, ca, bc, cb.
    OrbitalPair { n_orbitals: usize },
    /// Two-electron spin pairs {↑↓, ↓↑}.
    SpinPair,
    /// Emitter (environment) states: ground plus one excitation per
    /// non-adjacent orbital pair.
    Environment { n_states: usize },
    /// Single-electron orbitals, after tracing out one electron.
    SingleOrbital { n_orbitals: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::OrbitalPair { n_orbitals } => n_orbitals * (n_orbitals - 1),
            Factor::SpinPair => 2,
            Factor::Environment { n_states } => n_states,
            Factor::SingleOrbital { n_orbitals } => n_orbitals,
        }
    }
}

/// Labeled tensor-product basis of orbital-pair ⊗ spin ⊗ environment factors
/// (factors drop out as they are traced away).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeBasis {
    pub n_orbitals: usize,
    pub factors: Vec<Factor>,
}

/// Canonical ordered-pair listing for `n` orbitals.
pub fn pair_order(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
            pairs.push((j, i));
        }
    }
    pairs
}

fn orbital_name(i: usize, n: usize) -> String {
    if n <= 3 {
        format!("t_{}", char::from(b'a' + i as u8))
    } else {
        format!("t_{}", i + 1)
    }
}

impl CompositeBasis {
    /// Full pair ⊗ spin ⊗ environment basis for `n_orbitals` intervals with
    /// `n_env` emitter states. The three-interval case of the construction
    /// has n_env = 2 (ground and one excitation) and dimension 24.
    pub fn composite(n_orbitals: usize, n_env: usize) -> Self {
        CompositeBasis {
            n_orbitals,
            factors: vec![
                Factor::OrbitalPair { n_orbitals },
                Factor::SpinPair,
                Factor::Environment { n_states: n_env },
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(Factor::dim).product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].dim();
        }
        strides
    }

    fn decompose(&self, mut index: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut parts = Vec::with_capacity(self.factors.len());
        for s in strides {
            parts.push(index / s);
            index %= s;
        }
        parts
    }

    fn compose(&self, parts: &[usize]) -> usize {
        self.strides().iter().zip(parts.iter()).map(|(s, p)| s * p).sum()
    }

    /// Human-readable label of one basis element, e.g. "t_a t_c; ↑↓; g".
    pub fn label(&self, index: usize) -> String {
        let parts = self.decompose(index);
        let mut out = Vec::new();
        for (factor, &p) in self.factors.iter().zip(parts.iter()) {
            match factor {
                Factor::OrbitalPair { n_orbitals } => {
                    let (i, j) = pair_order(*n_orbitals)[p];
                    out.push(format!(
                        "{} {}",
                        orbital_name(i, *n_orbitals),
                        orbital_name(j, *n_orbitals)
                    ));
                }
                Factor::SpinPair => out.push(if p == 0 { "↑↓" } else { "↓↑" }.to_string()),
                Factor::Environment { .. } => {
                    out.push(if p == 0 { "g".to_string() } else { format!("e{p}") })
                }
                Factor::SingleOrbital { n_orbitals } => out.push(orbital_name(p, *n_orbitals)),
            }
        }
        out.join("; ")
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.label(i)).collect()
    }

    fn factor_position(&self, want: fn(&Factor) -> bool) -> Option<usize> {
        self.factors.iter().position(want)
    }
}

/// Pure composite state with exact rational amplitudes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVector {
    pub basis: CompositeBasis,
    pub amplitudes: Vec<R>,
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Exact ⟨ψ|ψ⟩.
    pub fn norm_sqr(&self) -> R {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// Amplitudes as complex numbers (all real by construction).
    pub fn amplitudes_complex(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .map(|a| Complex64::new(ratio_to_f64(*a), 0.0))
            .collect()
    }

    /// The state with the two electrons exchanged: orbital pair (i,j) → (j,i)
    /// and spin pair ↑↓ ↔ ↓↑, jointly.
    pub fn exchange_electrons(&self) -> Result<StateVector> {
        let pair_pos = self
            .basis
            .factor_position(|f| matches!(f, Factor::OrbitalPair { .. }))
            .ok_or_else(|| Error::domain("state has no orbital-pair factor".to_string()))?;
        let spin_pos = self
            .basis
            .factor_position(|f| matches!(f, Factor::SpinPair))
            .ok_or_else(|| Error::domain("state has no spin-pair factor".to_string()))?;
        let pairs = pair_order(self.basis.n_orbitals);
        let swapped_pair: Vec<usize> = pairs
            .iter()
            .map(|&(i, j)| pairs.iter().position(|&p| p == (j, i)).unwrap())
            .collect();
        let mut amplitudes = vec![R::zero(); self.dim()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let mut parts = self.basis.decompose(idx);
            parts[pair_pos] = swapped_pair[parts[pair_pos]];
            parts[spin_pos] = 1 - parts[spin_pos];
            amplitudes[self.basis.compose(&parts)] = *amp;
        }
        Ok(StateVector { basis: self.basis.clone(), amplitudes })
    }
}

/// Finite-dimensional density operator with exact rational entries (real:
/// every state in this pipeline has real amplitudes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityMatrix {
    pub basis: CompositeBasis,
    entries: Vec<R>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> R {
        self.entries[i * self.dim() + j]
    }

    pub fn entry_f64(&self, i: usize, j: usize) -> f64 {
        ratio_to_f64(self.entry(i, j))
    }

    pub fn entry_complex(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.entry_f64(i, j), 0.0)
    }

    pub fn trace(&self) -> R {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    /// Tr(ρ²), exact.
    pub fn purity(&self) -> R {
        let d = self.dim();
        let mut acc = R::zero();
        for i in 0..d {
            for j in 0..d {
                acc += self.entry(i, j) * self.entry(j, i);
            }
        }
        acc
    }

    pub fn is_hermitian(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    /// Smallest eigenvalue of the (real symmetric) matrix, in f64.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.entry_f64(i, j));
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Row-major f64 entries.
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.entry_f64(i, j)).collect()).collect()
    }
}

fn ratio_to_f64(r: R) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The normalized entangled pair⊗emitter state for three intervals: the
/// ground branch carries every symmetric orbital pair with the spin singlet,
/// and the excited branch the antisymmetric (t_a, t_c) pair with ↑↓+↓↑.
pub fn build_entangled_state() -> StateVector {
    generalize_state(3).expect("three intervals are always valid")
}

/// N-interval generalization: symmetric-orbital ⊗ singlet on the ground
/// emitter state for every interval pair, and for each non-adjacent pair an
/// antisymmetric-orbital ⊗ (↑↓+↓↑) branch tagged with its own orthogonal
/// emitter excitation. The total norm is 2(N−1), exactly rational.
pub fn generalize_state(n: usize) -> Result<StateVector> {
    if n < 3 {
        return Err(Error::domain(format!("interval count must be >= 3, got {n}")));
    }
    let pairs = pair_order(n);
    let pair_index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j)).unwrap();
    let nonadjacent: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 2)..n).map(move |j| (i, j)))
        .collect();
    let n_env = 1 + nonadjacent.len();
    let basis = CompositeBasis::composite(n, n_env);
    let mut amplitudes = vec![R::zero(); basis.dim()];
    let c = R::new(1, 2 * (n as i64 - 1));
    let mut set = |pair: usize, spin: usize, env: usize, value: R| {
        amplitudes[basis.compose(&[pair, spin, env])] = value;
    };
    for i in 0..n {
        for j in (i + 1)..n {
            // (|t_i t_j> + |t_j t_i>) ⊗ (|↑↓> − |↓↑>) ⊗ |g>
            set(pair_index(i, j), 0, 0, c);
            set(pair_index(i, j), 1, 0, -c);
            set(pair_index(j, i), 0, 0, c);
            set(pair_index(j, i), 1, 0, -c);
        }
    }
    for (k, &(i, j)) in nonadjacent.iter().enumerate() {
        // (|t_i t_j> − |t_j t_i>) ⊗ (|↑↓> + |↓↑>) ⊗ |e_k>
        set(pair_index(i, j), 0, 1 + k, c);
        set(pair_index(i, j), 1, 1 + k, c);
        set(pair_index(j, i), 0, 1 + k, -c);
        set(pair_index(j, i), 1, 1 + k, -c);
    }
    Ok(StateVector { basis, amplitudes })
}

/// Rank-1 projector ρ = |ψ⟩⟨ψ| of a normalized state.
pub fn density_from_state(psi: &StateVector) -> Result<DensityMatrix> {
    if psi.norm_sqr() != R::one() {
        return Err(Error::domain(format!(
            "state is not normalized: <psi|psi> = {}",
            psi.norm_sqr()
        )));
    }
    let d = psi.dim();
    let mut entries = vec![R::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            entries[i * d + j] = psi.amplitudes[i] * psi.amplitudes[j];
        }
    }
    Ok(DensityMatrix { basis: psi.basis.clone(), entries })
}

/// Subsystem to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Environment,
    Spin,
    Particle2,
}

/// Partial trace over one subsystem. Tracing the environment or the spin
/// pair removes that tensor factor; tracing particle 2 reduces the
/// orbital-pair factor to single orbitals via
/// ρ₁[i,j] = Σ_k ρ[(i,k),(j,k)] over k for which both ordered pairs exist.
pub fn partial_trace(rho: &DensityMatrix, subsystem: Subsystem) -> Result<DensityMatrix> {
    match subsystem {
        Subsystem::Environment => {
            let pos = rho
                .basis
                .factor_position(|f| matches!(f, Factor::Environment { .. }))
                .ok_or_else(|| Error::domain("no environment factor to trace".to_string()))?;
            Ok(trace_factor(rho, pos))
        }
        Subsystem::Spin => {
            let pos = rho
                .basis
                .factor_position(|f| matches!(f, Factor::SpinPair))
                .ok_or_else(|| Error::domain("no spin factor to trace".to_string()))?;
            Ok(trace_factor(rho, pos))
        }
        Subsystem::Particle2 => trace_particle2(rho),
    }
}

fn trace_factor(rho: &DensityMatrix, pos: usize) -> DensityMatrix {
    let old = &rho.basis;
    let traced_dim = old.factors[pos].dim();
    let mut factors = old.factors.clone();
    factors.remove(pos);
    let basis = CompositeBasis { n_orbitals: old.n_orbitals, factors };
    let d = basis.dim();
    let mut entries = vec![R::zero(); d * d];
    for a in 0..d {
        let a_parts = basis.decompose(a);
        for b in 0..d {
            let b_parts = basis.decompose(b);
            let mut acc = R::zero();
            for k in 0..traced_dim {
                let mut fa = a_parts.clone();
                fa.insert(pos, k);
                let mut fb = b_parts.clone();
                fb.insert(pos, k);
                acc += rho.entry(old.compose(&fa), old.compose(&fb));
            }
            entries[a * d + b] = acc;
        }
    }
    DensityMatrix { basis, entries }
}

fn trace_particle2(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.basis.factors.len() != 1
        || !matches!(rho.basis.factors[0], Factor::OrbitalPair { .. })
    {
        return Err(Error::domain(
            "particle-2 trace requires a pure orbital-pair basis (trace spin and \
             environment first)"
                .to_string(),
        ));
    }
    let n = rho.basis.n_orbitals;
    let pairs = pair_order(n);
    let pair_index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j));
    let basis = CompositeBasis {
        n_orbitals: n,
        factors: vec![Factor::SingleOrbital { n_orbitals: n }],
    };
    let mut entries = vec![R::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = R::zero();
            for k in 0..n {
                if let (Some(a), Some(b)) = (pair_index(i, k), pair_index(j, k)) {
                    acc += rho.entry(a, b);
                }
            }
            entries[i * n + j] = acc;
        }
    }
    Ok(DensityMatrix { basis, entries })
}

/// Coherence report for one exchange sub-space {|t_i t_j⟩, |t_j t_i⟩}.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceBlock {
    /// Orbital indices (i, j) with i < j.
    pub orbitals: (usize, usize),
    pub labels: (String, String),
    /// |ρ[(i,j),(j,i)]|.
    pub off_diagonal: f64,
    pub coherent: bool,
}

/// Classify every exchange sub-space of an orbital-pair density matrix as
/// coherent (off-diagonal above the threshold) or decohered.
pub fn coherence_blocks(rho: &DensityMatrix) -> Result<Vec<CoherenceBlock>> {
    if rho.basis.factors.len() != 1
        || !matches!(rho.basis.factors[0], Factor::OrbitalPair { .. })
    {
        return Err(Error::domain(
            "coherence blocks require an orbital-pair density matrix".to_string(),
        ));
    }
    let n = rho.basis.n_orbitals;
    let pairs = pair_order(n);
    let pair_index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j)).unwrap();
    let mut blocks = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let off = rho.entry_f64(pair_index(i, j), pair_index(j, i)).abs();
            blocks.push(CoherenceBlock {
                orbitals: (i, j),
                labels: (orbital_name(i, n), orbital_name(j, n)),
                off_diagonal: off,
                coherent: off > COHERENCE_THRESHOLD,
            });
        }
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> R {
        R::new(num, den)
    }

    /// Spin-averaged two-electron density matrix printed in the construction
    /// (entries over denominator 8), hardcoded as the oracle.
    fn reference_6x6() -> Vec<Vec<i64>> {
        vec![
            vec![1, 1, 1, 1, 1, 1],
            vec![1, 1, 1, 1, 1, 1],
            vec![1, 1, 2, 0, 1, 1],
            vec![1, 1, 0, 2, 1, 1],
            vec![1, 1, 1, 1, 1, 1],
            vec![1, 1, 1, 1, 1, 1],
        ]
    }

    /// 12×12 two-electron density matrix (entries over denominator 16) on
    /// the basis ab↑↓, ab↓↑, ba↑↓, ba↓↑, ac↑↓, ac↓↑, ca↑↓, ca↓↑, bc↑↓, bc↓↑,
    /// cb↑↓, cb↓↑ — hardcoded as the oracle.
    fn reference_12x12() -> Vec<Vec<i64>> {
        vec![
            vec![1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1],
            vec![-1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1],
            vec![1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1],
            vec![-1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1],
            vec![1, -1, 1, -1, 2, 0, 0, -2, 1, -1, 1, -1],
            vec![-1, 1, -1, 1, 0, 2, -2, 0, -1, 1, -1, 1],
            vec![1, -1, 1, -1, 0, -2, 2, 0, 1, -1, 1, -1],
            vec![-1, 1, -1, 1, -2, 0, 0, 2, -1, 1, -1, 1],
            vec![1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1],
            vec![-1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1],
            vec![1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1],
            vec![-1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1],
        ]
    }

    #[test]
    fn basis_order_matches_printed_convention() {
        let pairs = pair_order(3);
        assert_eq!(pairs, vec![(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
        let basis = CompositeBasis::composite(3, 2);
        assert_eq!(basis.dim(), 24);
        assert_eq!(basis.label(0), "t_a t_b; ↑↓; g");
        assert_eq!(basis.label(1), "t_a t_b; ↑↓; e1");
        assert_eq!(basis.label(2), "t_a t_b; ↓↑; g");
    }

    #[test]
    fn entangled_state_norm_and_amplitudes() {
        let psi = build_entangled_state();
        assert_eq!(psi.norm_sqr(), R::one());
        let basis = &psi.basis;
        // (ab, ↑↓, g) = +1/4 and (ab, ↓↑, g) = −1/4.
        assert_eq!(psi.amplitudes[basis.compose(&[0, 0, 0])], r(1, 4));
        assert_eq!(psi.amplitudes[basis.compose(&[0, 1, 0])], r(-1, 4));
        // Excited branch holds only the (ac, ca) pair.
        assert_eq!(psi.amplitudes[basis.compose(&[2, 0, 1])], r(1, 4));
        assert_eq!(psi.amplitudes[basis.compose(&[3, 0, 1])], r(-1, 4));
        assert_eq!(psi.amplitudes[basis.compose(&[0, 0, 1])], R::zero());
        // Branch norms: ground 12/16, excited 4/16.
        let ground: R = (0..basis.dim())
            .filter(|i| basis.decompose(*i)[2] == 0)
            .map(|i| psi.amplitudes[i] * psi.amplitudes[i])
            .sum();
        assert_eq!(ground, r(12, 16));
    }

    #[test]
    fn electron_exchange_negates_the_state() {
        let psi = build_entangled_state();
        let swapped = psi.exchange_electrons().unwrap();
        for (a, b) in psi.amplitudes.iter().zip(swapped.amplitudes.iter()) {
            assert_eq!(*a, -*b);
        }
        for n in [4, 5] {
            let psi = generalize_state(n).unwrap();
            let swapped = psi.exchange_electrons().unwrap();
            for (a, b) in psi.amplitudes.iter().zip(swapped.amplitudes.iter()) {
                assert_eq!(*a, -*b);
            }
        }
    }

    #[test]
    fn projector_is_pure_and_idempotent() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        assert_eq!(rho.trace(), R::one());
        assert_eq!(rho.purity(), R::one());
        assert!(rho.is_hermitian());
        // ρ² = ρ entrywise (exact).
        let d = rho.dim();
        for i in 0..d {
            for j in 0..d {
                let mut acc = R::zero();
                for k in 0..d {
                    acc += rho.entry(i, k) * rho.entry(k, j);
                }
                assert_eq!(acc, rho.entry(i, j));
            }
        }
        // Unnormalized input is rejected.
        let mut bad = build_entangled_state();
        bad.amplitudes[0] = r(1, 2);
        assert!(density_from_state(&bad).is_err());
    }

    #[test]
    fn env_trace_reproduces_the_12x12_matrix_exactly() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        let rho12 = partial_trace(&rho, Subsystem::Environment).unwrap();
        assert_eq!(rho12.dim(), 12);
        let reference = reference_12x12();
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(
                    rho12.entry(i, j),
                    r(reference[i][j], 16),
                    "entry ({i},{j}) mismatch"
                );
            }
        }
        assert_eq!(rho12.trace(), R::one());
        // Purity drops below one for the entangled pair.
        assert_eq!(rho12.purity(), r(5, 8));
        assert!(rho12.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn spin_trace_reproduces_the_6x6_matrix_exactly() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        let rho12 = partial_trace(&rho, Subsystem::Environment).unwrap();
        let rho_bar = partial_trace(&rho12, Subsystem::Spin).unwrap();
        assert_eq!(rho_bar.dim(), 6);
        let reference = reference_6x6();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(rho_bar.entry(i, j), r(reference[i][j], 8));
            }
        }
        assert_eq!(rho_bar.trace(), R::one());
        assert!(rho_bar.is_hermitian());
        assert!(rho_bar.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn trace_order_commutes() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        let env_then_spin =
            partial_trace(&partial_trace(&rho, Subsystem::Environment).unwrap(), Subsystem::Spin)
                .unwrap();
        let spin_then_env =
            partial_trace(&partial_trace(&rho, Subsystem::Spin).unwrap(), Subsystem::Environment)
                .unwrap();
        assert_eq!(env_then_spin, spin_then_env);
    }

    #[test]
    fn particle2_trace_matches_independent_symbolic_oracle() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        let rho_bar = partial_trace(
            &partial_trace(&rho, Subsystem::Environment).unwrap(),
            Subsystem::Spin,
        )
        .unwrap();
        let rho1 = partial_trace(&rho_bar, Subsystem::Particle2).unwrap();
        assert_eq!(rho1.dim(), 3);

        // Independent oracle: the same index-sum rule applied to the
        // hardcoded printed 6×6 matrix rather than the pipeline output.
        let reference = reference_6x6();
        let pairs = pair_order(3);
        let mut oracle = vec![vec![R::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let a = pairs.iter().position(|&p| p == (i, k));
                    let b = pairs.iter().position(|&p| p == (j, k));
                    if let (Some(a), Some(b)) = (a, b) {
                        oracle[i][j] += r(reference[a][b], 8);
                    }
                }
            }
        }
        let expected = [[3, 1, 1], [1, 2, 1], [1, 1, 3]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(oracle[i][j], r(expected[i][j], 8));
                assert_eq!(rho1.entry(i, j), oracle[i][j]);
            }
        }
        assert_eq!(rho1.trace(), R::one());
        assert!(rho1.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn coherence_blocks_on_the_printed_matrix() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        let rho_bar = partial_trace(
            &partial_trace(&rho, Subsystem::Environment).unwrap(),
            Subsystem::Spin,
        )
        .unwrap();
        let blocks = coherence_blocks(&rho_bar).unwrap();
        assert_eq!(blocks.len(), 3);
        let by_pair = |i: usize, j: usize| blocks.iter().find(|b| b.orbitals == (i, j)).unwrap();
        let ab = by_pair(0, 1);
        assert!(ab.coherent && (ab.off_diagonal - 0.125).abs() < 1e-15);
        let bc = by_pair(1, 2);
        assert!(bc.coherent && (bc.off_diagonal - 0.125).abs() < 1e-15);
        let ac = by_pair(0, 2);
        assert!(!ac.coherent && ac.off_diagonal == 0.0);
    }

    #[test]
    fn coherence_blocks_degenerate_inputs() {
        // Maximally mixed 6×6: everything decohered.
        let basis = CompositeBasis {
            n_orbitals: 3,
            factors: vec![Factor::OrbitalPair { n_orbitals: 3 }],
        };
        let mut entries = vec![R::zero(); 36];
        for i in 0..6 {
            entries[i * 6 + i] = r(1, 6);
        }
        let mixed = DensityMatrix { basis: basis.clone(), entries };
        assert!(coherence_blocks(&mixed).unwrap().iter().all(|b| !b.coherent));
        // Rank-1 symmetric projector on (|ab> + |ba>)/√2: {ab,ba} coherent.
        let mut entries = vec![R::zero(); 36];
        for i in 0..2 {
            for j in 0..2 {
                entries[i * 6 + j] = r(1, 2);
            }
        }
        let sym = DensityMatrix { basis, entries };
        let blocks = coherence_blocks(&sym).unwrap();
        assert!(blocks.iter().find(|b| b.orbitals == (0, 1)).unwrap().coherent);
        assert!(!blocks.iter().find(|b| b.orbitals == (0, 2)).unwrap().coherent);
        // Wrong dimension is a domain error.
        let rho = density_from_state(&build_entangled_state()).unwrap();
        assert!(coherence_blocks(&rho).is_err());
    }

    #[test]
    fn generalization_base_case_and_n4_structure() {
        assert!(generalize_state(2).is_err());
        let psi3 = generalize_state(3).unwrap();
        assert_eq!(psi3, build_entangled_state());
        let psi4 = generalize_state(4).unwrap();
        assert_eq!(psi4.norm_sqr(), R::one());
        let rho = density_from_state(&psi4).unwrap();
        let rho_bar = partial_trace(
            &partial_trace(&rho, Subsystem::Environment).unwrap(),
            Subsystem::Spin,
        )
        .unwrap();
        assert_eq!(rho_bar.trace(), R::one());
        assert!(rho_bar.is_hermitian());
        assert!(rho_bar.min_eigenvalue() >= -1e-10);
        assert!(rho_bar.purity() < R::one());
        let blocks = coherence_blocks(&rho_bar).unwrap();
        for b in &blocks {
            let adjacent = b.orbitals.1 == b.orbitals.0 + 1;
            assert_eq!(
                b.coherent, adjacent,
                "pair {:?} coherence mismatch (off-diag {:e})",
                b.orbitals, b.off_diagonal
            );
        }
    }

    #[test]
    fn every_partial_trace_preserves_invariants() {
        for n in [3_usize, 4, 5] {
            let rho = density_from_state(&generalize_state(n).unwrap()).unwrap();
            let mut stages = Vec::new();
            let env = partial_trace(&rho, Subsystem::Environment).unwrap();
            let spin = partial_trace(&env, Subsystem::Spin).unwrap();
            let one = partial_trace(&spin, Subsystem::Particle2).unwrap();
            stages.push(env);
            stages.push(spin);
            stages.push(one);
            for stage in stages {
                assert_eq!(stage.trace(), R::one());
                assert!(stage.is_hermitian());
                assert!(stage.min_eigenvalue() >= -1e-10);
            }
        }
    }

    #[test]
    fn unknown_subsystem_requests_fail() {
        let rho = density_from_state(&build_entangled_state()).unwrap();
        // Tracing particle 2 before spin and environment is rejected.
        assert!(partial_trace(&rho, Subsystem::Particle2).is_err());
        let spinless = partial_trace(
            &partial_trace(&rho, Subsystem::Environment).unwrap(),
            Subsystem::Spin,
        )
        .unwrap();
        assert!(partial_trace(&spinless, Subsystem::Spin).is_err());
        assert!(partial_trace(&spinless, Subsystem::Environment).is_err());
    }
}
