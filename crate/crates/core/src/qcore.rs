//! Dense complex statevector and unitary-matrix engine for small registers.
//!
//! Qubit ordering is big-endian throughout: qubit 0 is the leftmost label in
//! ket notation and the most significant bit of the basis index, so |01⟩ is
//! basis index 1 of a two-qubit register. Everything is immutable after
//! construction; operations return new values and are safe to call from
//! multiple threads.

use num_complex::Complex64;
use thiserror::Error;

/// Normalization drift allowed per construction / per unitary application.
pub const NORM_TOL: f64 = 1e-12;
/// Unitarity deviation allowed at matrix construction.
pub const UNITARY_TOL: f64 = 1e-10;
/// Default tolerance for matrix equality checks.
pub const EQ_TOL: f64 = 1e-9;
/// Allowed deviation of a probability table's total from 1.
pub const PROB_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum QcoreError {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("duplicate target qubit {index}")]
    DuplicateTarget { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite amplitude or matrix entry")]
    NonFinite,
    #[error("state norm² = {norm_sqr} deviates from 1 by more than {tol}")]
    NotNormalized { norm_sqr: f64, tol: f64 },
    #[error("matrix is not unitary: max |U·U† − I| entry = {deviation}")]
    NotUnitary { deviation: f64 },
    #[error("probabilities sum to {total}, outside 1 ± {tol}")]
    BadProbabilitySum { total: f64, tol: f64 },
}

/// Bit of qubit `q` in basis index `i` of an `n`-qubit register (big-endian).
#[inline]
pub fn qubit_bit(i: usize, q: usize, n: usize) -> usize {
    (i >> (n - 1 - q)) & 1
}

fn check_targets(targets: &[usize], n_qubits: usize) -> Result<(), QcoreError> {
    for (pos, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(QcoreError::IndexOutOfRange { index: t, n_qubits });
        }
        if targets[..pos].contains(&t) {
            return Err(QcoreError::DuplicateTarget { index: t });
        }
    }
    Ok(())
}

/// A normalized pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Build a state from raw amplitudes, enforcing length 2^n, finiteness
    /// and unit norm (within [`NORM_TOL`]).
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, QcoreError> {
        assert!(n_qubits >= 1, "register needs at least one qubit");
        if amps.len() != 1 << n_qubits {
            return Err(QcoreError::DimensionMismatch {
                left: amps.len(),
                right: 1 << n_qubits,
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QcoreError::NonFinite);
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(QcoreError::NotNormalized {
                norm_sqr,
                tol: NORM_TOL,
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// The computational basis state |index⟩.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(index < 1 << n_qubits, "basis index out of range");
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[index] = Complex64::ONE;
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Kronecker product; `self`'s qubits become the more significant ones.
    pub fn tensor(&self, other: &Self) -> Self {
        let dim_b = other.amps.len();
        let mut amps = vec![Complex64::ZERO; self.amps.len() * dim_b];
        for (i, &a) in self.amps.iter().enumerate() {
            for (j, &b) in other.amps.iter().enumerate() {
                amps[i * dim_b + j] = a * b;
            }
        }
        StateVector {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        }
    }

    /// Multiply every amplitude by a unit-modulus scalar.
    pub fn phased(&self, phase: Complex64) -> Self {
        debug_assert!(
            (phase.norm() - 1.0).abs() < 1e-9,
            "global phase must be unit modulus"
        );
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    /// Apply a k-qubit gate embedded at the given target qubits. The first
    /// target takes the role of the gate's most significant qubit. The norm
    /// must survive within [`NORM_TOL`].
    pub fn apply(&self, gate: &GateMatrix, targets: &[usize]) -> Result<Self, QcoreError> {
        let n = self.n_qubits;
        let k = targets.len();
        if gate.n_qubits != k {
            return Err(QcoreError::DimensionMismatch {
                left: gate.n_qubits,
                right: k,
            });
        }
        check_targets(targets, n)?;

        let dim = self.amps.len();
        let mut out = vec![Complex64::ZERO; dim];
        for (i, &amp) in self.amps.iter().enumerate() {
            if amp == Complex64::ZERO {
                continue;
            }
            let mut col = 0usize;
            let mut base = i;
            for &q in targets {
                col = (col << 1) | qubit_bit(i, q, n);
                base &= !(1 << (n - 1 - q));
            }
            for row in 0..(1 << k) {
                let e = gate.entry(row, col);
                if e == Complex64::ZERO {
                    continue;
                }
                let mut j = base;
                for (pos, &q) in targets.iter().enumerate() {
                    if (row >> (k - 1 - pos)) & 1 == 1 {
                        j |= 1 << (n - 1 - q);
                    }
                }
                out[j] += e * amp;
            }
        }

        let norm_sqr: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(QcoreError::NotNormalized {
                norm_sqr,
                tol: NORM_TOL,
            });
        }
        Ok(StateVector {
            n_qubits: n,
            amps: out,
        })
    }

    /// Computational-basis distribution over the kept qubits (equivalent to
    /// tracing out the rest and measuring). Pattern bits follow the order of
    /// `keep`: the first kept qubit is the most significant pattern bit.
    pub fn marginal(&self, keep: &[usize]) -> Result<ProbabilityTable, QcoreError> {
        let n = self.n_qubits;
        check_targets(keep, n)?;
        let mut probs = vec![0.0; 1 << keep.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut pattern = 0usize;
            for &q in keep {
                pattern = (pattern << 1) | qubit_bit(i, q, n);
            }
            probs[pattern] += a.norm_sqr();
        }
        ProbabilityTable::new(keep.to_vec(), probs)
    }
}

/// A unitary on `n_qubits` qubits, stored dense row-major.
///
/// Unitarity is checked on construction (within [`UNITARY_TOL`]); products of
/// unitaries inherit it without rechecking.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    n_qubits: usize,
    entries: Vec<Complex64>,
}

impl GateMatrix {
    pub fn unitary(n_qubits: usize, entries: Vec<Complex64>) -> Result<Self, QcoreError> {
        assert!(n_qubits >= 1, "gate needs at least one qubit");
        let dim = 1usize << n_qubits;
        if entries.len() != dim * dim {
            return Err(QcoreError::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
            });
        }
        if entries
            .iter()
            .any(|e| !e.re.is_finite() || !e.im.is_finite())
        {
            return Err(QcoreError::NonFinite);
        }
        let m = GateMatrix { n_qubits, entries };
        let dev = m.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(QcoreError::NotUnitary { deviation: dev });
        }
        Ok(m)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            entries[r * dim + r] = Complex64::ONE;
        }
        GateMatrix { n_qubits, entries }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// max |U·U† − I| over all entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut dev: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex64::ZERO;
                for k in 0..dim {
                    acc += self.entry(r, k) * self.entry(c, k).conj();
                }
                let want = if r == c {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                dev = dev.max((acc - want).norm());
            }
        }
        dev
    }

    /// Kronecker product; `self`'s qubits become the more significant ones.
    pub fn tensor(&self, other: &Self) -> Self {
        let da = self.dim();
        let db = other.dim();
        let dim = da * db;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for ra in 0..da {
            for ca in 0..da {
                let e = self.entry(ra, ca);
                if e == Complex64::ZERO {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        entries[(ra * db + rb) * dim + (ca * db + cb)] = e * other.entry(rb, cb);
                    }
                }
            }
        }
        GateMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            entries,
        }
    }

    /// Matrix product `self · rhs` (so `rhs` acts first on a state).
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.dim(),
            rhs.dim(),
            "composed gates must share a dimension"
        );
        let dim = self.dim();
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let e = self.entry(r, k);
                if e == Complex64::ZERO {
                    continue;
                }
                for c in 0..dim {
                    entries[r * dim + c] += e * rhs.entry(k, c);
                }
            }
        }
        GateMatrix {
            n_qubits: self.n_qubits,
            entries,
        }
    }

    pub fn dagger(&self) -> Self {
        let dim = self.dim();
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[c * dim + r] = self.entry(r, c).conj();
            }
        }
        GateMatrix {
            n_qubits: self.n_qubits,
            entries,
        }
    }

    /// Multiply by a unit-modulus scalar (a global phase).
    pub fn scaled(&self, phase: Complex64) -> Self {
        debug_assert!(
            (phase.norm() - 1.0).abs() < 1e-9,
            "scale must be a pure phase"
        );
        GateMatrix {
            n_qubits: self.n_qubits,
            entries: self.entries.iter().map(|e| e * phase).collect(),
        }
    }

    /// max |self − other| over all entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Test whether `u == c·v` for some unit-modulus scalar `c`, within `tol` on
/// the max entry difference. Returns the recovered phase on success. The
/// phase is anchored on the largest-modulus entry of `v` and renormalized to
/// unit modulus.
pub fn equal_up_to_global_phase(
    u: &GateMatrix,
    v: &GateMatrix,
    tol: f64,
) -> Result<Option<Complex64>, QcoreError> {
    if u.dim() != v.dim() {
        return Err(QcoreError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    let anchor = v
        .entries
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.norm().total_cmp(&b.norm()))
        .map(|(i, _)| i)
        .expect("matrix is non-empty");
    if v.entries[anchor].norm() == 0.0 {
        // v is the zero matrix; cannot hold for a unitary, but stay total
        let all_zero = u.entries.iter().all(|e| e.norm() <= tol);
        return Ok(all_zero.then_some(Complex64::ONE));
    }
    let raw = u.entries[anchor] / v.entries[anchor];
    if raw.norm() == 0.0 {
        return Ok(None);
    }
    let phase = raw / raw.norm();
    let diff = u.max_abs_diff(&v.scaled(phase));
    Ok((diff <= tol).then_some(phase))
}

/// Measurement distribution over a subset of qubits, in pattern order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    kept_qubits: Vec<usize>,
    probs: Vec<f64>,
}

impl ProbabilityTable {
    pub fn new(kept_qubits: Vec<usize>, probs: Vec<f64>) -> Result<Self, QcoreError> {
        if probs.len() != 1 << kept_qubits.len() {
            return Err(QcoreError::DimensionMismatch {
                left: probs.len(),
                right: 1 << kept_qubits.len(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(QcoreError::NonFinite);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(QcoreError::BadProbabilitySum {
                total,
                tol: PROB_TOL,
            });
        }
        Ok(ProbabilityTable { kept_qubits, probs })
    }

    pub fn kept_qubits(&self) -> &[usize] {
        &self.kept_qubits
    }

    pub fn probability(&self, pattern: usize) -> f64 {
        self.probs[pattern]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().copied().enumerate()
    }

    /// max |p − q| over patterns.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len());
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
