//! Dense statevector simulation.
//!
//! Qubit `i` is bit `i` of the basis-state label (little-endian: qubit 0 is the
//! least significant bit). States are capped at [`MAX_QUBITS`] qubits.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

/// Tolerance used when validating externally supplied amplitude vectors.
pub const NORM_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Packs a little-endian bit vector into a basis label.
pub fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
}

/// Unpacks the low `n` bits of `x`, qubit 0 first.
pub fn index_to_bits(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (x >> i) & 1 == 1).collect()
}

/// Parses a string of `0`/`1` characters; character `i` becomes bit `i`.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::domain(format!("invalid bit character {other:?}"))),
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Normalized amplitude vector over `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state `|x⟩`.
    pub fn basis_state(num_qubits: usize, x: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1usize << num_qubits;
        if x >= dim {
            return Err(Error::domain(format!(
                "basis label {x} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[x] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// `|x⟩` for a little-endian bit vector.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        Self::basis_state(bits.len(), bits_to_index(bits))
    }

    /// Wraps an amplitude vector that must already be normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Validation(format!(
                "amplitudes have squared norm {norm_sqr}, expected 1"
            )));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { num_qubits, amps })
    }

    /// Haar-like random state from i.i.d. complex Gaussian components.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let amps = (0..1usize << num_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps)
    }

    /// Uniform superposition `|+⟩^{⊗n}`.
    pub fn plus(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1usize << num_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            num_qubits,
            amps: vec![a; dim],
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, x: usize) -> f64 {
        self.amps.get(x).map_or(0.0, |a| a.norm_sqr())
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        match gate {
            Gate::X(q) => self.apply_1q(*q, [[ZERO, ONE], [ONE, ZERO]]),
            Gate::Z(q) => self.apply_diag(*q, ONE, -ONE),
            Gate::H(q) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(*q, [[h, h], [h, -h]])
            }
            Gate::S(q) => self.apply_diag(*q, ONE, I),
            Gate::T(q) => self.apply_diag(*q, ONE, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
            Gate::Rz(q, theta) => self.apply_diag(
                *q,
                Complex64::from_polar(1.0, -theta / 2.0),
                Complex64::from_polar(1.0, theta / 2.0),
            ),
            Gate::Ry(q, theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
                self.apply_1q(*q, [[c, -s], [s, c]])
            }
            Gate::Cnot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for x in 0..self.amps.len() {
                    if x & cm != 0 && x & tm == 0 {
                        self.amps.swap(x, x | tm);
                    }
                }
            }
            Gate::Perm(perm) => {
                let mut out = vec![ZERO; self.amps.len()];
                for (x, &a) in self.amps.iter().enumerate() {
                    out[perm.map(x)] = a;
                }
                self.amps = out;
            }
        }
        Ok(())
    }

    /// Applies a gate sequence in order.
    pub fn apply_all<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << q;
        for x in 0..self.amps.len() {
            if x & mask == 0 {
                let (a0, a1) = (self.amps[x], self.amps[x | mask]);
                self.amps[x] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[x | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_diag(&mut self, q: usize, d0: Complex64, d1: Complex64) {
        let mask = 1usize << q;
        for (x, a) in self.amps.iter_mut().enumerate() {
            *a *= if x & mask == 0 { d0 } else { d1 };
        }
    }

    /// Exact `⟨Z_k⟩ = Σ_x (−1)^{bit_k(x)} |amp_x|²`.
    pub fn expectation_z(&self, obs: PauliZ) -> Result<f64> {
        obs.validate(self.num_qubits)?;
        let mask = 1usize << obs.qubit();
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(x, a)| if x & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::domain(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`; insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// Estimates `⟨Z_k⟩` from `shots` Born-rule samples.
    pub fn sample_z<R: Rng + ?Sized>(&self, obs: PauliZ, shots: u64, rng: &mut R) -> Result<f64> {
        if shots == 0 {
            return Err(Error::domain("shots must be at least 1"));
        }
        let p_plus = (1.0 + self.expectation_z(obs)?) / 2.0;
        let plus = (0..shots).filter(|_| rng.random::<f64>() < p_plus).count() as f64;
        Ok((2.0 * plus - shots as f64) / shots as f64)
    }

    /// Splits off the qubits at index `keep..` when they sit in a single
    /// basis state. Returns the remaining low register and the label of the
    /// detached high register.
    pub fn detach_basis_register(&self, keep: usize) -> Result<(StateVector, usize)> {
        if keep == 0 || keep >= self.num_qubits {
            return Err(Error::domain(format!(
                "cannot keep {keep} of {} qubits",
                self.num_qubits
            )));
        }
        let low_dim = 1usize << keep;
        let mut high = None;
        for (x, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() > 1e-24 {
                let h = x >> keep;
                match high {
                    None => high = Some(h),
                    Some(prev) if prev != h => {
                        return Err(Error::Validation(
                            "register to detach is not in a basis state".into(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        let high = high.ok_or_else(|| Error::domain("zero state"))?;
        let amps = self.amps[high * low_dim..(high + 1) * low_dim].to_vec();
        Ok((StateVector::normalized(amps)?, high))
    }
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::domain(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::domain(format!(
            "amplitude vector length {len} is not a power of two ≥ 2"
        )));
    }
    let n = len.trailing_zeros() as usize;
    check_qubit_count(n)?;
    Ok(n)
}

/// Pure form of [`StateVector::apply`].
pub fn apply(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// A bijection on the basis labels `0..2^n` of the full register.
#[derive(Clone, PartialEq, Eq)]
pub struct Permutation {
    table: Arc<[usize]>,
}

impl Permutation {
    pub fn new(table: Vec<usize>) -> Result<Self> {
        let len = table.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Validation(format!(
                "permutation table length {len} is not a power of two ≥ 2"
            )));
        }
        let mut seen = vec![false; len];
        for &y in &table {
            if y >= len || std::mem::replace(&mut seen[y], true) {
                return Err(Error::Validation(format!(
                    "permutation table is not a bijection (image {y})"
                )));
            }
        }
        Ok(Self {
            table: table.into(),
        })
    }

    /// Builds the table by evaluating `f` on every label of an `n`-qubit register.
    pub fn from_fn(num_qubits: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        Self::new((0..1usize << num_qubits).map(f).collect())
    }

    pub fn identity(num_qubits: usize) -> Result<Self> {
        Self::from_fn(num_qubits, |x| x)
    }

    pub fn num_qubits(&self) -> usize {
        self.table.len().trailing_zeros() as usize
    }

    pub fn map(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y] = x;
        }
        Self { table: inv.into() }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(x, &y)| x == y)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({} qubits)", self.num_qubits())
    }
}

/// The supported gate set. Angles are in radians.
///
/// `Rz(θ) = diag(e^{−iθ/2}, e^{iθ/2})`; `Ry(θ)` is the real rotation with
/// `⟨Z⟩ = cos θ` on `|0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    Z(usize),
    H(usize),
    S(usize),
    T(usize),
    Rz(usize, f64),
    Ry(usize, f64),
    Cnot { control: usize, target: usize },
    Perm(Permutation),
}

impl Gate {
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < num_qubits {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "qubit {q} out of range for {num_qubits} qubits"
                )))
            }
        };
        match self {
            Gate::X(q) | Gate::Z(q) | Gate::H(q) | Gate::S(q) | Gate::T(q) => check(*q),
            Gate::Rz(q, theta) | Gate::Ry(q, theta) => {
                check(*q)?;
                if theta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("rotation angle is not finite"))
                }
            }
            Gate::Cnot { control, target } => {
                check(*control)?;
                check(*target)?;
                if control == target {
                    return Err(Error::domain("CNOT control equals target"));
                }
                Ok(())
            }
            Gate::Perm(p) => {
                if p.num_qubits() == num_qubits {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "permutation over {} qubits applied to {num_qubits}",
                        p.num_qubits()
                    )))
                }
            }
        }
    }

    /// Qubits the gate touches; `None` for whole-register permutations.
    pub fn qubits(&self) -> Option<Vec<usize>> {
        match self {
            Gate::X(q) | Gate::Z(q) | Gate::H(q) | Gate::S(q) | Gate::T(q) => Some(vec![*q]),
            Gate::Rz(q, _) | Gate::Ry(q, _) => Some(vec![*q]),
            Gate::Cnot { control, target } => Some(vec![*control, *target]),
            Gate::Perm(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X(_) => "x",
            Gate::Z(_) => "z",
            Gate::H(_) => "h",
            Gate::S(_) => "s",
            Gate::T(_) => "t",
            Gate::Rz(..) => "rz",
            Gate::Ry(..) => "ry",
            Gate::Cnot { .. } => "cnot",
            Gate::Perm(_) => "perm",
        }
    }
}

/// Single-qubit Pauli-Z observable `Z_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliZ(usize);

impl PauliZ {
    pub fn new(qubit: usize) -> Self {
        Self(qubit)
    }

    pub fn qubit(self) -> usize {
        self.0
    }

    pub fn validate(self, num_qubits: usize) -> Result<()> {
        if self.0 < num_qubits {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "observable qubit {} out of range for {num_qubits} qubits",
                self.0
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn plus() -> StateVector {
        StateVector::plus(1).unwrap()
    }

    fn minus() -> StateVector {
        apply(&plus(), &Gate::Z(0)).unwrap()
    }

    /// Column `j` of the gate's unitary is the image of `|j⟩`.
    fn unitary(gate: &Gate, n: usize) -> Vec<Vec<Complex64>> {
        (0..1usize << n)
            .map(|j| {
                apply(&StateVector::basis_state(n, j).unwrap(), gate)
                    .unwrap()
                    .amplitudes()
                    .to_vec()
            })
            .collect()
    }

    fn compose(gates: &[Gate], n: usize) -> Vec<Vec<Complex64>> {
        (0..1usize << n)
            .map(|j| {
                let mut s = StateVector::basis_state(n, j).unwrap();
                s.apply_all(gates).unwrap();
                s.amplitudes().to_vec()
            })
            .collect()
    }

    fn assert_matrix_eq(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) {
        for (ca, cb) in a.iter().zip(b) {
            for (x, y) in ca.iter().zip(cb) {
                assert!((x - y).norm() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn basis_states() {
        assert_eq!(
            StateVector::basis_state(1, 0).unwrap().amplitudes(),
            &[ONE, ZERO]
        );
        assert_eq!(
            StateVector::basis_state(2, 3).unwrap().amplitudes(),
            &[ZERO, ZERO, ZERO, ONE]
        );
        let s = StateVector::basis_state(3, 5).unwrap();
        for x in 0..8 {
            assert_eq!(s.probability(x), if x == 5 { 1.0 } else { 0.0 });
        }
        assert!(StateVector::basis_state(2, 4).is_err());
        assert!(StateVector::basis_state(0, 0).is_err());
        assert!(StateVector::basis_state(21, 0).is_err());
    }

    #[test]
    fn hadamard_cnot_rz() {
        let s = apply(&StateVector::basis_state(1, 0).unwrap(), &Gate::H(0)).unwrap();
        assert!((s.fidelity(&plus()).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);

        // qubit 0 set is label 1; CNOT(0 -> 1) sets qubit 1 too.
        let s = apply(
            &StateVector::basis_state(2, 0b01).unwrap(),
            &Gate::Cnot {
                control: 0,
                target: 1,
            },
        )
        .unwrap();
        assert_eq!(s.probability(0b11), 1.0);

        let s = apply(&plus(), &Gate::Rz(0, PI)).unwrap();
        assert!((minus().inner_product(&s).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectations() {
        let zero = StateVector::basis_state(1, 0).unwrap();
        assert_eq!(zero.expectation_z(PauliZ::new(0)).unwrap(), 1.0);
        assert!(plus().expectation_z(PauliZ::new(0)).unwrap().abs() < 1e-15);
        for theta in [0.3, 1.2] {
            let s = apply(&zero, &Gate::Ry(0, theta)).unwrap();
            let e = s.expectation_z(PauliZ::new(0)).unwrap();
            assert!((e - theta.cos()).abs() < 1e-14);
        }
        assert!(zero.expectation_z(PauliZ::new(1)).is_err());
    }

    #[test]
    fn inner_products() {
        let z0 = StateVector::basis_state(1, 0).unwrap();
        let z1 = StateVector::basis_state(1, 1).unwrap();
        assert_eq!(z0.inner_product(&z1).unwrap(), ZERO);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = StateVector::random(3, &mut rng).unwrap();
        assert!((psi.inner_product(&psi).unwrap() - ONE).norm() < 1e-12);

        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let u = StateVector::from_amplitudes(vec![ZERO, h, ZERO, h]).unwrap();
        let v = StateVector::from_amplitudes(vec![ZERO, ZERO, h, h]).unwrap();
        // brute-force overlap: supports {1,3} and {2,3} share one label, 1/√2·1/√2
        let overlap: Complex64 = (0..4)
            .filter(|x| [1, 3].contains(x) && [2, 3].contains(x))
            .map(|_| h * h)
            .sum();
        assert!((u.inner_product(&v).unwrap() - overlap).norm() < 1e-15);
        assert!((overlap.re - 0.5).abs() < 1e-15);
        assert!(u.inner_product(&z0).is_err());
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zero = StateVector::basis_state(1, 0).unwrap();
        let one = StateVector::basis_state(1, 1).unwrap();
        for shots in [1, 17, 1000] {
            assert_eq!(zero.sample_z(PauliZ::new(0), shots, &mut rng).unwrap(), 1.0);
            assert_eq!(one.sample_z(PauliZ::new(0), shots, &mut rng).unwrap(), -1.0);
        }
        let est = plus().sample_z(PauliZ::new(0), 10_000, &mut rng).unwrap();
        assert!(est.abs() < 5.0 / 100.0);
        assert!(zero.sample_z(PauliZ::new(0), 0, &mut rng).is_err());

        let mut psi = StateVector::basis_state(2, 0).unwrap();
        psi.apply_all(&[Gate::Ry(0, 1.1), Gate::Cnot { control: 0, target: 1 }, Gate::Ry(1, 0.4)])
            .unwrap();
        let exact = psi.expectation_z(PauliZ::new(1)).unwrap();
        let est = psi.sample_z(PauliZ::new(1), 1_000_000, &mut rng).unwrap();
        assert!((est - exact).abs() < 5e-3);
    }

    #[test]
    fn gate_algebra() {
        for n in [1, 2] {
            for q in 0..n {
                let id = compose(&[], n);
                assert_matrix_eq(&compose(&[Gate::H(q), Gate::H(q)], n), &id);
                assert_matrix_eq(&compose(&[Gate::S(q), Gate::S(q)], n), &unitary(&Gate::Z(q), n));
                assert_matrix_eq(&compose(&[Gate::T(q), Gate::T(q)], n), &unitary(&Gate::S(q), n));
            }
        }
        let cx = Gate::Cnot {
            control: 1,
            target: 0,
        };
        assert_matrix_eq(&compose(&[cx.clone(), cx], 2), &compose(&[], 2));
    }

    #[test]
    fn permutations() {
        assert!(Permutation::new(vec![0, 0, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 1, 2, 4]).is_err());
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        assert!(p.inverse().inverse() == p);
        let s = apply(&StateVector::basis_state(2, 1).unwrap(), &Gate::Perm(p.clone())).unwrap();
        assert_eq!(s.probability(0), 1.0);
        assert!(StateVector::basis_state(3, 0)
            .unwrap()
            .apply(&Gate::Perm(p))
            .is_err());
    }

    #[test]
    fn index_validation() {
        let mut s = StateVector::basis_state(2, 0).unwrap();
        assert!(s.apply(&Gate::X(2)).is_err());
        assert!(s
            .apply(&Gate::Cnot {
                control: 1,
                target: 1
            })
            .is_err());
        assert!(s.apply(&Gate::Rz(0, f64::NAN)).is_err());
    }

    #[test]
    fn detach_register() {
        let mut s = StateVector::basis_state(3, 0b100).unwrap();
        s.apply(&Gate::H(0)).unwrap();
        let (low, high) = s.detach_basis_register(2).unwrap();
        assert_eq!(high, 1);
        assert_eq!(low.num_qubits(), 2);
        assert!((low.probability(0) - 0.5).abs() < 1e-15);
        s.apply(&Gate::H(2)).unwrap();
        assert!(s.detach_basis_register(2).is_err());
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(parse_bits("1010").unwrap(), vec![true, false, true, false]);
        assert_eq!(bits_to_index(&[true, false, true]), 5);
        assert_eq!(index_to_bits(5, 4), vec![true, false, true, false]);
        assert_eq!(format_bits(&index_to_bits(6, 3)), "011");
        assert!(parse_bits("10x").is_err());
    }
}
