//! The Magic Square game engine.
//!
//! Two cooperating players fill a row and a column of a 3×3 binary grid. The
//! shared 4-qubit state and the six two-qubit player operations implement the
//! quantum strategy; the extended three-qubit circuits realize each operation
//! through an ancillary photon, with every controlled-Z exposed to the
//! imperfection substitution CZ → CP(π−θ).
//!
//! Register layouts (big-endian, qubit 0 leftmost):
//!   reference: (alice₁, alice₂, bob₁, bob₂)
//!   extended:  (alice₁, photon_A, alice₂, bob₁, photon_B, bob₂)

use crate::gates::{make_gate, Convention, DecompFactor, DecompositionCase, GateKind};
use crate::qcore::{ProbabilityTable, QcoreError, StateVector};
use crate::GateMatrix;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("row/column index {0} outside 1..=3")]
    IndexOutOfRange(u8),
    #[error("theta = {0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// The referee's question: Alice fills row `a`, Bob fills column `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundInput {
    a: u8,
    b: u8,
}

impl RoundInput {
    pub fn new(a: u8, b: u8) -> Result<Self, GameError> {
        for v in [a, b] {
            if !(1..=3).contains(&v) {
                return Err(GameError::IndexOutOfRange(v));
            }
        }
        Ok(RoundInput { a, b })
    }

    pub fn a(&self) -> u8 {
        self.a
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    /// All nine (a, b) pairs in row-major order.
    pub fn all() -> [RoundInput; 9] {
        let mut out = [RoundInput { a: 1, b: 1 }; 9];
        for a in 1..=3u8 {
            for b in 1..=3u8 {
                out[((a - 1) * 3 + (b - 1)) as usize] = RoundInput { a, b };
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Alice,
    Bob,
}

/// A filled row or column. Alice's triples carry even bit-sum, Bob's odd;
/// both are enforced by construction through [`parity_complete`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple([u8; 3]);

impl Triple {
    pub fn bits(&self) -> [u8; 3] {
        self.0
    }

    /// 1-based position, matching row/column numbering.
    pub fn bit(&self, position: u8) -> u8 {
        assert!((1..=3).contains(&position));
        self.0[(position - 1) as usize]
    }

    pub fn sum(&self) -> u8 {
        self.0.iter().sum()
    }
}

impl std::fmt::Display for Triple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Complete two measured bits to a parity-valid triple: Alice's third bit
/// makes the row sum even, Bob's makes the column sum odd.
pub fn parity_complete(bits: [u8; 2], role: Player) -> Triple {
    assert!(bits[0] <= 1 && bits[1] <= 1, "bits must be binary");
    let third = match role {
        Player::Alice => bits[0] ^ bits[1],
        Player::Bob => bits[0] ^ bits[1] ^ 1,
    };
    Triple([bits[0], bits[1], third])
}

/// The winning predicate: the intersecting cell must agree. Row position `b`
/// of Alice's triple against column position `a` of Bob's.
pub fn win(row: Triple, col: Triple, round: RoundInput) -> bool {
    debug_assert_eq!(row.sum() % 2, 0, "row triple must have even sum");
    debug_assert_eq!(col.sum() % 2, 1, "column triple must have odd sum");
    row.bit(round.b) == col.bit(round.a)
}

/// Which simulation path evaluates a round.
///
/// `Reference` applies the two-qubit player matrices directly and has no
/// imperfectable gates. `Extended` runs the full spin–photon–spin circuits
/// with every tagged CZ replaced by CP(π−θ). With
/// `include_initial_swap: false` the opening SWAP of each player is omitted
/// and the initial state is prepared with the corresponding logical qubit
/// already on the photon (see [`extended_initial_state_photon_homed`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Reference,
    Extended { include_initial_swap: bool },
}

fn scaled_matrix(scale: f64, cells: [[(i8, i8); 4]; 4]) -> GateMatrix {
    let entries = cells
        .iter()
        .flatten()
        .map(|&(re, im)| Complex64::new(scale * re as f64, scale * im as f64))
        .collect();
    GateMatrix::unitary(2, entries).expect("player operation is unitary")
}

/// The two-qubit operation player `player` applies on question `index`.
pub fn player_matrix(player: Player, index: u8) -> GateMatrix {
    assert!(
        (1..=3).contains(&index),
        "player operation index must be 1..=3"
    );
    match (player, index) {
        (Player::Alice, 1) => scaled_matrix(
            FRAC_1_SQRT_2,
            [
                [(0, 1), (0, 0), (0, 0), (1, 0)],
                [(0, 0), (0, -1), (1, 0), (0, 0)],
                [(0, 0), (0, 1), (1, 0), (0, 0)],
                [(1, 0), (0, 0), (0, 0), (0, 1)],
            ],
        ),
        (Player::Alice, 2) => scaled_matrix(
            0.5,
            [
                [(0, 1), (1, 0), (1, 0), (0, 1)],
                [(0, -1), (1, 0), (-1, 0), (0, 1)],
                [(0, 1), (1, 0), (-1, 0), (0, -1)],
                [(0, -1), (1, 0), (1, 0), (0, -1)],
            ],
        ),
        (Player::Alice, 3) => scaled_matrix(
            0.5,
            [
                [(-1, 0), (-1, 0), (-1, 0), (1, 0)],
                [(1, 0), (1, 0), (-1, 0), (1, 0)],
                [(1, 0), (-1, 0), (1, 0), (1, 0)],
                [(1, 0), (-1, 0), (-1, 0), (-1, 0)],
            ],
        ),
        (Player::Bob, 1) => scaled_matrix(
            0.5,
            [
                [(0, 1), (0, -1), (1, 0), (1, 0)],
                [(0, -1), (0, -1), (1, 0), (-1, 0)],
                [(1, 0), (1, 0), (0, -1), (0, 1)],
                [(0, -1), (0, 1), (1, 0), (1, 0)],
            ],
        ),
        (Player::Bob, 2) => scaled_matrix(
            0.5,
            [
                [(-1, 0), (0, 1), (1, 0), (0, 1)],
                [(1, 0), (0, 1), (1, 0), (0, -1)],
                [(1, 0), (0, -1), (1, 0), (0, 1)],
                [(-1, 0), (0, -1), (1, 0), (0, -1)],
            ],
        ),
        (Player::Bob, 3) => scaled_matrix(
            FRAC_1_SQRT_2,
            [
                [(1, 0), (0, 0), (0, 0), (1, 0)],
                [(-1, 0), (0, 0), (0, 0), (1, 0)],
                [(0, 0), (1, 0), (1, 0), (0, 0)],
                [(0, 0), (1, 0), (-1, 0), (0, 0)],
            ],
        ),
        _ => unreachable!(),
    }
}

/// All six player operations in order A₁, A₂, A₃, B₁, B₂, B₃.
pub fn player_matrices() -> Vec<GateMatrix> {
    let mut out = Vec::with_capacity(6);
    for player in [Player::Alice, Player::Bob] {
        for index in 1..=3 {
            out.push(player_matrix(player, index));
        }
    }
    out
}

/// The shared 4-qubit state ½(|0011⟩ + |1100⟩ − |0110⟩ − |1001⟩) in the
/// order (alice₁, alice₂, bob₁, bob₂).
pub fn initial_state() -> StateVector {
    let mut amps = vec![Complex64::ZERO; 16];
    amps[0b0011] = Complex64::new(0.5, 0.0);
    amps[0b1100] = Complex64::new(0.5, 0.0);
    amps[0b0110] = Complex64::new(-0.5, 0.0);
    amps[0b1001] = Complex64::new(-0.5, 0.0);
    StateVector::new(4, amps).expect("shared state is normalized")
}

fn extended_state_with_layout(logical_positions: [usize; 4]) -> StateVector {
    let shared = initial_state();
    let mut amps = vec![Complex64::ZERO; 64];
    for (idx4, &amp) in shared.amplitudes().iter().enumerate() {
        if amp == Complex64::ZERO {
            continue;
        }
        let mut idx6 = 0usize;
        for (logical, &position) in logical_positions.iter().enumerate() {
            if (idx4 >> (3 - logical)) & 1 == 1 {
                idx6 |= 1 << (5 - position);
            }
        }
        amps[idx6] = amp;
    }
    StateVector::new(6, amps).expect("extended state is normalized")
}

/// The 6-qubit register (alice₁, photon_A, alice₂, bob₁, photon_B, bob₂):
/// logical qubits carry the shared state, photons start in |0⟩. The SWAPs in
/// the register-ordering identity are notational only and are not executed.
pub fn extended_initial_state() -> StateVector {
    extended_state_with_layout([0, 2, 3, 5])
}

/// Preparation variant for the no-opening-SWAP circuits: Alice's first
/// logical qubit lives on her photon and Bob's second logical qubit on his,
/// with the corresponding spins in |0⟩. Dropping the opening SWAP without
/// this re-homing leaves the photon in |0⟩ where the circuit expects the
/// logical qubit and the round is lost half the time even at θ=0.
pub fn extended_initial_state_photon_homed() -> StateVector {
    extended_state_with_layout([1, 2, 3, 4])
}

/// One executable step of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp {
    Gate { kind: GateKind, targets: Vec<usize> },
    GlobalPhase(Complex64),
}

/// An ordered gate sequence with the CZ instances that are subject to the
/// imperfection substitution tagged by op index. Executing with θ=0 equals
/// executing the untagged circuit exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<CircuitOp>,
    cz_tags: Vec<usize>,
}

impl Circuit {
    pub fn new(
        n_qubits: usize,
        ops: Vec<CircuitOp>,
        cz_tags: Vec<usize>,
    ) -> Result<Self, GameError> {
        for op in &ops {
            if let CircuitOp::Gate { kind, targets } = op {
                if targets.len() != kind.n_qubits() {
                    return Err(GameError::InvalidCircuit(format!(
                        "{kind:?} takes {} target(s), got {}",
                        kind.n_qubits(),
                        targets.len()
                    )));
                }
                for (pos, &t) in targets.iter().enumerate() {
                    if t >= n_qubits || targets[..pos].contains(&t) {
                        return Err(GameError::InvalidCircuit(format!(
                            "bad target list {targets:?} on a {n_qubits}-qubit circuit"
                        )));
                    }
                }
            }
        }
        for &tag in &cz_tags {
            match ops.get(tag) {
                Some(CircuitOp::Gate {
                    kind: GateKind::Cz, ..
                }) => {}
                _ => {
                    return Err(GameError::InvalidCircuit(format!(
                        "tag {tag} does not point at a CZ op"
                    )))
                }
            }
        }
        Ok(Circuit {
            n_qubits,
            ops,
            cz_tags,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn cz_tags(&self) -> &[usize] {
        &self.cz_tags
    }

    pub fn tagged_cz_count(&self) -> usize {
        self.cz_tags.len()
    }

    /// Run the circuit on `state`, with circuit qubit `q` mapped to register
    /// qubit `qubit_map[q]`. Every tagged CZ becomes CP(π−θ).
    pub fn apply_embedded(
        &self,
        state: &StateVector,
        qubit_map: &[usize],
        theta: f64,
        convention: Convention,
    ) -> Result<StateVector, GameError> {
        if qubit_map.len() != self.n_qubits {
            return Err(GameError::InvalidCircuit(format!(
                "qubit map covers {} of {} circuit qubits",
                qubit_map.len(),
                self.n_qubits
            )));
        }
        let mut out = state.clone();
        for (index, op) in self.ops.iter().enumerate() {
            match op {
                CircuitOp::GlobalPhase(phase) => out = out.phased(*phase),
                CircuitOp::Gate { kind, targets } => {
                    let effective = if self.cz_tags.contains(&index) {
                        GateKind::Cp(PI - theta)
                    } else {
                        *kind
                    };
                    let mapped: Vec<usize> = targets.iter().map(|&t| qubit_map[t]).collect();
                    out = out.apply(&make_gate(effective, convention), &mapped)?;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(
        &self,
        state: &StateVector,
        theta: f64,
        convention: Convention,
    ) -> Result<StateVector, GameError> {
        let identity_map: Vec<usize> = (0..self.n_qubits).collect();
        self.apply_embedded(state, &identity_map, theta, convention)
    }

    /// Multiply the circuit out into an explicit unitary (column by column).
    pub fn unitary(&self, theta: f64, convention: Convention) -> Result<GateMatrix, GameError> {
        let dim = 1usize << self.n_qubits;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for col in 0..dim {
            let image = self.apply(&StateVector::basis(self.n_qubits, col), theta, convention)?;
            for row in 0..dim {
                entries[row * dim + col] = image.amplitude(row);
            }
        }
        Ok(GateMatrix::unitary(self.n_qubits, entries)?)
    }
}

struct CircuitBuilder {
    n_qubits: usize,
    ops: Vec<CircuitOp>,
    cz_tags: Vec<usize>,
}

impl CircuitBuilder {
    fn new(n_qubits: usize) -> Self {
        CircuitBuilder {
            n_qubits,
            ops: Vec::new(),
            cz_tags: Vec::new(),
        }
    }

    fn phase(&mut self, phase: Complex64) {
        self.ops.push(CircuitOp::GlobalPhase(phase));
    }

    fn gate(&mut self, kind: GateKind, targets: &[usize]) {
        self.ops.push(CircuitOp::Gate {
            kind,
            targets: targets.to_vec(),
        });
    }

    fn tagged_cz(&mut self, x: usize, y: usize) {
        self.cz_tags.push(self.ops.len());
        self.gate(GateKind::Cz, &[x, y]);
    }

    /// CNOT with control `ctrl`, target `tgt`, expanded to Had·CZ·Had with
    /// the CZ tagged imperfectable.
    fn expanded_cnot(&mut self, ctrl: usize, tgt: usize) {
        self.gate(GateKind::Hadamard, &[tgt]);
        self.tagged_cz(ctrl, tgt);
        self.gate(GateKind::Hadamard, &[tgt]);
    }

    /// SWAP(x, y) as three expanded CNOTs (three tagged CZs).
    fn expanded_swap(&mut self, x: usize, y: usize) {
        self.expanded_cnot(x, y);
        self.expanded_cnot(y, x);
        self.expanded_cnot(x, y);
    }

    fn build(self) -> Circuit {
        Circuit::new(self.n_qubits, self.ops, self.cz_tags).expect("builder emits valid circuits")
    }
}

/// Raw decomposition data: prefactor plus factors in printed operator order
/// (leftmost first, rightmost acts first). Factor qubits are 0-based within
/// the player's pair.
fn decomposition_data(player: Player, index: u8) -> (Complex64, Vec<DecompFactor>) {
    use GateKind::{CnotCtrl1, CnotCtrl2, RotX, RotY, RotZ};
    assert!((1..=3).contains(&index));
    let rot = |kind: GateKind, qubit: usize| DecompFactor { kind, qubit };
    let cnot = |kind: GateKind| DecompFactor { kind, qubit: 0 };
    match (player, index) {
        (Player::Alice, 1) => (
            Complex64::from_polar(1.0, -7.0 * PI / 8.0),
            vec![
                rot(RotZ(PI / 4.0), 0),
                cnot(CnotCtrl2),
                rot(RotZ(7.0 * PI / 4.0), 1),
                rot(RotX(PI / 2.0), 1),
                rot(RotZ(7.0 * PI / 4.0), 0),
                cnot(CnotCtrl2),
                rot(RotZ(PI / 2.0), 0),
                rot(RotY(PI), 0),
                rot(RotZ(3.0 * PI / 2.0), 1),
                rot(RotY(PI), 1),
            ],
        ),
        (Player::Alice, 2) => (
            Complex64::ONE,
            vec![
                rot(RotY(PI / 2.0), 0),
                rot(RotZ(PI), 1),
                cnot(CnotCtrl1),
                rot(RotZ(PI / 2.0), 0),
                rot(RotY(PI), 0),
                rot(RotZ(PI), 1),
                rot(RotY(PI / 2.0), 1),
                rot(RotZ(3.0 * PI / 2.0), 1),
            ],
        ),
        (Player::Alice, 3) => (
            Complex64::ONE,
            vec![
                rot(RotZ(PI), 0),
                rot(RotY(PI / 2.0), 0),
                cnot(CnotCtrl1),
                rot(RotY(PI / 2.0), 0),
                rot(RotZ(PI), 0),
                rot(RotY(PI), 1),
            ],
        ),
        (Player::Bob, 1) => (
            Complex64::from_polar(1.0, 7.0 * PI / 8.0),
            vec![
                rot(RotX(3.0 * PI / 2.0), 1),
                rot(RotY(3.0 * PI / 4.0), 1),
                cnot(CnotCtrl1),
                rot(RotZ(PI / 4.0), 0),
                rot(RotY(3.0 * PI / 2.0), 0),
                rot(RotY(3.0 * PI / 2.0), 1),
                cnot(CnotCtrl1),
                rot(RotZ(2.0 * PI), 0),
                rot(RotZ(3.0 * PI / 2.0), 1),
                rot(RotY(PI), 1),
            ],
        ),
        (Player::Bob, 2) => (
            Complex64::from_polar(1.0, PI),
            vec![
                rot(RotY(PI / 2.0), 0),
                rot(RotY(PI / 2.0), 1),
                rot(RotZ(3.0 * PI / 2.0), 1),
                cnot(CnotCtrl1),
                rot(RotZ(3.0 * PI / 2.0), 0),
                rot(RotZ(PI), 1),
            ],
        ),
        (Player::Bob, 3) => (
            Complex64::ONE,
            vec![
                rot(RotY(PI / 2.0), 0),
                rot(RotZ(PI), 1),
                rot(RotY(PI), 1),
                cnot(CnotCtrl1),
                rot(RotY(PI / 2.0), 0),
                rot(RotZ(PI), 0),
                rot(RotY(PI / 2.0), 1),
            ],
        ),
        _ => unreachable!(),
    }
}

/// The six decomposition tables paired with their target matrices, as
/// input for [`crate::gates::resolve_convention`].
pub fn decomposition_cases() -> Vec<DecompositionCase> {
    let mut cases = Vec::with_capacity(6);
    for player in [Player::Alice, Player::Bob] {
        for index in 1..=3u8 {
            let (prefactor, factors) = decomposition_data(player, index);
            let label = match player {
                Player::Alice => format!("A{index}"),
                Player::Bob => format!("B{index}"),
            };
            cases.push(DecompositionCase {
                label,
                prefactor,
                factors,
                target: player_matrix(player, index),
            });
        }
    }
    cases
}

/// The two-qubit circuit realizing a player operation: the decomposition's
/// gate sequence in execution order, CNOTs expanded as Had·CZ·Had with each
/// CZ tagged imperfectable.
pub fn decomposed_sequence(player: Player, index: u8) -> Circuit {
    let (prefactor, factors) = decomposition_data(player, index);
    let mut b = CircuitBuilder::new(2);
    b.phase(prefactor);
    for factor in factors.iter().rev() {
        match factor.kind {
            GateKind::CnotCtrl1 => b.expanded_cnot(0, 1),
            GateKind::CnotCtrl2 => b.expanded_cnot(1, 0),
            kind => b.gate(kind, &[factor.qubit]),
        }
    }
    b.build()
}

/// The three-qubit spin–photon–spin circuit. Alice swaps the photon with her
/// first spin and runs the decomposition on (photon, second spin); Bob swaps
/// with his second spin and runs the decomposition on (first spin, photon).
/// With `include_initial_swap: false` the opening SWAP is omitted; see
/// [`extended_initial_state_photon_homed`] for the matching preparation.
pub fn extended_circuit(player: Player, index: u8, include_initial_swap: bool) -> Circuit {
    let (prefactor, factors) = decomposition_data(player, index);
    let (swap_pair, pair_map) = match player {
        Player::Alice => ((0usize, 1usize), [1usize, 2usize]),
        Player::Bob => ((1, 2), [0, 1]),
    };
    let mut b = CircuitBuilder::new(3);
    b.phase(prefactor);
    if include_initial_swap {
        b.expanded_swap(swap_pair.0, swap_pair.1);
    }
    for factor in factors.iter().rev() {
        match factor.kind {
            GateKind::CnotCtrl1 => b.expanded_cnot(pair_map[0], pair_map[1]),
            GateKind::CnotCtrl2 => b.expanded_cnot(pair_map[1], pair_map[0]),
            kind => b.gate(kind, &[pair_map[factor.qubit]]),
        }
    }
    b.expanded_swap(swap_pair.0, swap_pair.1);
    b.build()
}

fn check_theta(theta: f64) -> Result<(), GameError> {
    if !(0.0..=PI).contains(&theta) {
        return Err(GameError::ThetaOutOfRange(theta));
    }
    Ok(())
}

/// Extended-register qubit indices of the two photons.
pub const ANCILLA_QUBITS: [usize; 2] = [1, 4];
/// Extended-register qubit indices of the four logical qubits, in the
/// measurement order (alice₁, alice₂, bob₁, bob₂).
pub const LOGICAL_QUBITS: [usize; 4] = [0, 2, 3, 5];

/// Final 6-qubit state after both extended circuits at imperfection θ.
/// Alice's circuit runs first; the two act on disjoint qubits and commute,
/// so the order is a convention, not physics.
pub fn extended_final_state(
    round: RoundInput,
    theta: f64,
    include_initial_swap: bool,
) -> Result<StateVector, GameError> {
    check_theta(theta)?;
    let convention = Convention::resolved();
    let init = if include_initial_swap {
        extended_initial_state()
    } else {
        extended_initial_state_photon_homed()
    };
    let state = extended_circuit(Player::Alice, round.a, include_initial_swap).apply_embedded(
        &init,
        &[0, 1, 2],
        theta,
        convention,
    )?;
    extended_circuit(Player::Bob, round.b, include_initial_swap).apply_embedded(
        &state,
        &[3, 4, 5],
        theta,
        convention,
    )
}

/// Exact distribution over the 16 four-bit outcomes (alice₁ alice₂ bob₁
/// bob₂), with the first bit most significant.
pub fn outcome_distribution(
    round: RoundInput,
    theta: f64,
    backend: Backend,
) -> Result<ProbabilityTable, GameError> {
    check_theta(theta)?;
    match backend {
        Backend::Reference => {
            let state = initial_state()
                .apply(&player_matrix(Player::Alice, round.a), &[0, 1])?
                .apply(&player_matrix(Player::Bob, round.b), &[2, 3])?;
            Ok(state.marginal(&[0, 1, 2, 3])?)
        }
        Backend::Extended {
            include_initial_swap,
        } => {
            let state = extended_final_state(round, theta, include_initial_swap)?;
            Ok(state.marginal(&LOGICAL_QUBITS)?)
        }
    }
}

/// Decode outcome pattern bits into (alice bits, bob bits).
pub fn outcome_bits(pattern: usize) -> ([u8; 2], [u8; 2]) {
    let bit = |k: usize| ((pattern >> k) & 1) as u8;
    ([bit(3), bit(2)], [bit(1), bit(0)])
}

/// Probability that the completed triples win the round.
pub fn round_success(round: RoundInput, theta: f64, backend: Backend) -> Result<f64, GameError> {
    let distribution = outcome_distribution(round, theta, backend)?;
    let mut total = 0.0;
    for (pattern, p) in distribution.iter() {
        let (alice_bits, bob_bits) = outcome_bits(pattern);
        let row = parity_complete(alice_bits, Player::Alice);
        let col = parity_complete(bob_bits, Player::Bob);
        if win(row, col, round) {
            total += p;
        }
    }
    // the sum can drift a few ulps past 1; it is a probability by contract
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::resolve_convention;
    use crate::qcore::equal_up_to_global_phase;

    const EXTENDED_FULL: Backend = Backend::Extended {
        include_initial_swap: true,
    };
    const EXTENDED_NO_FIRST_SWAP: Backend = Backend::Extended {
        include_initial_swap: false,
    };

    #[test]
    fn player_matrix_spot_entries() {
        let a3 = player_matrix(Player::Alice, 3);
        assert!((a3.entry(0, 0) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let b3 = player_matrix(Player::Bob, 3);
        assert!((b3.entry(0, 0) - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn player_matrices_are_unitary() {
        for m in player_matrices() {
            assert!(m.unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn initial_state_amplitudes() {
        let s = initial_state();
        assert!((s.amplitude(0b0011) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(0b1001) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_state_is_reordered_singlet_pair() {
        // singlet⊗singlet lives on (a₁, b₁, a₂, b₂); moving to
        // (a₁, a₂, b₁, b₂) exchanges the middle qubits.
        let singlet = StateVector::new(
            2,
            vec![
                Complex64::ZERO,
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(-FRAC_1_SQRT_2, 0.0),
                Complex64::ZERO,
            ],
        )
        .unwrap();
        let interleaved = singlet.tensor(&singlet);
        let reordered = interleaved
            .apply(&make_gate(GateKind::Swap, Convention::resolved()), &[1, 2])
            .unwrap();
        let expected = initial_state();
        for i in 0..16 {
            assert!(
                (reordered.amplitude(i) - expected.amplitude(i)).norm() < 1e-15,
                "index {i}"
            );
        }
    }

    #[test]
    fn extended_initial_state_marginals() {
        let s = extended_initial_state();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        let anc = s.marginal(&ANCILLA_QUBITS).unwrap();
        assert_eq!(anc.probability(0b00), 1.0);
        let logical = s.marginal(&LOGICAL_QUBITS).unwrap();
        for pattern in [0b0011, 0b1100, 0b0110, 0b1001] {
            assert!((logical.probability(pattern) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn decomposed_sequences_carry_expected_tags() {
        assert_eq!(decomposed_sequence(Player::Alice, 1).tagged_cz_count(), 2);
        assert_eq!(decomposed_sequence(Player::Bob, 1).tagged_cz_count(), 2);
        for index in 2..=3 {
            assert_eq!(
                decomposed_sequence(Player::Alice, index).tagged_cz_count(),
                1
            );
            assert_eq!(decomposed_sequence(Player::Bob, index).tagged_cz_count(), 1);
        }
        // B2 carries the e^{iπ} prefactor
        let b2 = decomposed_sequence(Player::Bob, 2);
        assert!(
            matches!(b2.ops()[0], CircuitOp::GlobalPhase(p) if (p + Complex64::ONE).norm() < 1e-12)
        );
    }

    #[test]
    fn extended_circuits_carry_expected_tags() {
        assert_eq!(
            extended_circuit(Player::Alice, 1, true).tagged_cz_count(),
            8
        );
        assert_eq!(
            extended_circuit(Player::Alice, 2, true).tagged_cz_count(),
            7
        );
        assert_eq!(extended_circuit(Player::Bob, 1, true).tagged_cz_count(), 8);
        assert_eq!(
            extended_circuit(Player::Alice, 1, false).tagged_cz_count(),
            5
        );
        assert_eq!(extended_circuit(Player::Bob, 3, false).tagged_cz_count(), 4);
    }

    #[test]
    fn decomposed_alice3_reproduces_target_up_to_phase() {
        let product = decomposed_sequence(Player::Alice, 3)
            .unitary(0.0, Convention::resolved())
            .unwrap();
        let target = player_matrix(Player::Alice, 3);
        assert!(equal_up_to_global_phase(&product, &target, 1e-9)
            .unwrap()
            .is_some());
    }

    #[test]
    fn decomposed_alice1_with_prefactor_reproduces_target() {
        let product = decomposed_sequence(Player::Alice, 1)
            .unitary(0.0, Convention::resolved())
            .unwrap();
        let target = player_matrix(Player::Alice, 1);
        assert!(equal_up_to_global_phase(&product, &target, 1e-9)
            .unwrap()
            .is_some());
    }

    #[test]
    fn resolver_selects_shipped_convention() {
        let report = resolve_convention(&decomposition_cases(), 1e-9);
        // no convention reproduces all six decomposition tables; the
        // best one is the shipped default and only B1 deviates (by a
        // measurement-invisible diagonal, covered by backend equivalence)
        assert!(report.resolved().is_none());
        assert_eq!(report.best, Convention::resolved());
        assert_eq!(report.failures_under_best(), vec!["B1".to_string()]);
        assert_eq!(report.evaluation_for(report.best).match_count(), 5);
    }

    #[test]
    fn b1_residual_is_measurement_invisible() {
        let cases = decomposition_cases();
        let b1 = cases.iter().find(|c| c.label == "B1").unwrap();
        let product = crate::gates::evaluate_product(b1, Convention::resolved());
        let diag = crate::gates::diagonal_residual(&product, &b1.target, 1e-9)
            .expect("B1 deviates only by a diagonal phase");
        for entry in diag {
            assert!((entry.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corrupted_angle_fails_every_convention() {
        let mut cases = decomposition_cases();
        if let GateKind::RotZ(theta) = cases[0].factors[0].kind {
            cases[0].factors[0].kind = GateKind::RotZ(theta + PI / 2.0);
        } else {
            panic!("expected a RotZ leading factor");
        }
        let report = resolve_convention(&cases[..1], 1e-9);
        for evaluation in &report.evaluations {
            assert!(
                !evaluation.outcomes[0].matched,
                "under {}",
                evaluation.convention
            );
        }
    }

    #[test]
    fn extended_circuit_reduces_to_player_matrix_at_zero_theta() {
        // The swap-out/swap-back structure makes the full 3-qubit operator
        // act as the 2-qubit player operation on the spins with the photon
        // untouched, so the comparison holds on the whole 8×8 matrix.
        for player in [Player::Alice, Player::Bob] {
            for index in 1..=3u8 {
                let circuit = extended_circuit(player, index, true);
                let big = circuit.unitary(0.0, Convention::resolved()).unwrap();
                // embed the player matrix on (q0, q2) of a 3-qubit register
                let target = player_matrix(player, index);
                let mut entries = vec![Complex64::ZERO; 64];
                for row in 0..8usize {
                    for col in 0..8usize {
                        if (row >> 1) & 1 != (col >> 1) & 1 {
                            continue; // photon untouched
                        }
                        let r2 = ((row >> 2) & 1) << 1 | (row & 1);
                        let c2 = ((col >> 2) & 1) << 1 | (col & 1);
                        entries[row * 8 + col] = target.entry(r2, c2);
                    }
                }
                let embedded = GateMatrix::unitary(3, entries).unwrap();
                let phase = equal_up_to_global_phase(&big, &embedded, 1e-9).unwrap();
                match (player, index) {
                    // B1's decomposition deviates by a diagonal phase, so the
                    // full matrices differ; its game-level agreement is
                    // covered by the backend-equivalence tests.
                    (Player::Bob, 1) => assert!(phase.is_none()),
                    _ => assert!(phase.is_some(), "{player:?} {index}"),
                }
            }
        }
    }

    #[test]
    fn parity_completion_matches_worked_examples() {
        assert_eq!(parity_complete([0, 1], Player::Alice).bits(), [0, 1, 1]);
        assert_eq!(parity_complete([1, 1], Player::Bob).bits(), [1, 1, 1]);
        assert_eq!(parity_complete([0, 0], Player::Alice).bits(), [0, 0, 0]);
    }

    #[test]
    fn parity_guarantee_for_all_bit_pairs() {
        for b0 in 0..=1u8 {
            for b1 in 0..=1u8 {
                assert_eq!(parity_complete([b0, b1], Player::Alice).sum() % 2, 0);
                assert_eq!(parity_complete([b0, b1], Player::Bob).sum() % 2, 1);
            }
        }
    }

    #[test]
    fn win_matches_worked_instances() {
        let round = RoundInput::new(2, 3).unwrap();
        let row_i = parity_complete([0, 0], Player::Alice);
        let col_i = parity_complete([0, 0], Player::Bob);
        assert!(win(row_i, col_i, round));
        let row_ii = parity_complete([0, 1], Player::Alice);
        let col_ii = parity_complete([0, 1], Player::Bob);
        assert!(win(row_ii, col_ii, round));
        // mismatched intersection: row[3] = 0 against col[2] = 1
        assert!(!win(row_i, col_ii, round));
    }

    #[test]
    fn reference_distribution_for_row2_col3() {
        let round = RoundInput::new(2, 3).unwrap();
        let d = outcome_distribution(round, 0.0, Backend::Reference).unwrap();
        let mut nonzero = 0;
        for (pattern, p) in d.iter() {
            if p > 1e-12 {
                nonzero += 1;
                assert!((p - 0.125).abs() < 1e-9, "pattern {pattern:04b}: {p}");
                let (alice, bob) = outcome_bits(pattern);
                let row = parity_complete(alice, Player::Alice);
                let col = parity_complete(bob, Player::Bob);
                assert!(win(row, col, round), "pattern {pattern:04b} must win");
            }
        }
        assert_eq!(nonzero, 8);
        // worked instance: Alice {0,1} → {0,1,1}, Bob {1,1} → {1,1,1}
        assert!((d.probability(0b0111) - 0.125).abs() < 1e-9);
    }

    #[test]
    fn backends_agree_at_zero_theta() {
        for round in RoundInput::all() {
            let reference = outcome_distribution(round, 0.0, Backend::Reference).unwrap();
            let extended = outcome_distribution(round, 0.0, EXTENDED_FULL).unwrap();
            assert!(reference.max_abs_diff(&extended) < 1e-9, "round {round:?}");
        }
    }

    #[test]
    fn ancillas_return_to_zero_at_zero_theta() {
        for round in RoundInput::all() {
            let state = extended_final_state(round, 0.0, true).unwrap();
            let anc = state.marginal(&ANCILLA_QUBITS).unwrap();
            assert!(
                (anc.probability(0b00) - 1.0).abs() < 1e-9,
                "round {round:?}"
            );
        }
    }

    #[test]
    fn perfect_play_wins_every_round() {
        for round in RoundInput::all() {
            for backend in [Backend::Reference, EXTENDED_FULL, EXTENDED_NO_FIRST_SWAP] {
                let p = round_success(round, 0.0, backend).unwrap();
                assert!(
                    (p - 1.0).abs() < 1e-9,
                    "round {round:?} backend {backend:?}"
                );
            }
        }
    }

    #[test]
    fn imperfection_hurts_round_one_one_most() {
        for theta in [0.2, 0.4, 0.6] {
            let worst =
                round_success(RoundInput::new(1, 1).unwrap(), theta, EXTENDED_FULL).unwrap();
            let best = round_success(RoundInput::new(3, 3).unwrap(), theta, EXTENDED_FULL).unwrap();
            assert!(worst < best - 1e-6, "theta {theta}: {worst} vs {best}");
        }
    }

    #[test]
    fn dropping_opening_swap_raises_overall_success() {
        // The improvement is a statement about the overall (uniform-mean)
        // success: individual rounds can get worse — (2,1) and (2,3) do at
        // every sampled θ — while the mean strictly improves.
        for theta in [0.2, 0.4, 0.6, std::f64::consts::FRAC_PI_2] {
            let mean = |backend: Backend| -> f64 {
                RoundInput::all()
                    .iter()
                    .map(|&round| round_success(round, theta, backend).unwrap())
                    .sum::<f64>()
                    / 9.0
            };
            let full = mean(EXTENDED_FULL);
            let trimmed = mean(EXTENDED_NO_FIRST_SWAP);
            assert!(trimmed >= full - 1e-12, "theta {theta}: {trimmed} < {full}");
        }
        // frozen per-round counterexample, so the non-monotonicity is pinned
        let round = RoundInput::new(2, 1).unwrap();
        let full = round_success(round, 0.2, EXTENDED_FULL).unwrap();
        let trimmed = round_success(round, 0.2, EXTENDED_NO_FIRST_SWAP).unwrap();
        assert!((full - 0.980318367068).abs() < 1e-9);
        assert!((trimmed - 0.975716683214).abs() < 1e-9);
    }

    #[test]
    fn naive_swap_omission_without_rehoming_is_excluded() {
        // Dropping the opening SWAP while keeping the spin-homed preparation
        // leaves the photon in |0⟩ where the logical qubit should be; the
        // round is lost half the time even at θ=0. This is why the variant
        // re-homes the state instead.
        let round = RoundInput::new(1, 1).unwrap();
        let init = extended_initial_state();
        let conv = Convention::resolved();
        let state = extended_circuit(Player::Alice, 1, false)
            .apply_embedded(&init, &[0, 1, 2], 0.0, conv)
            .unwrap();
        let state = extended_circuit(Player::Bob, 1, false)
            .apply_embedded(&state, &[3, 4, 5], 0.0, conv)
            .unwrap();
        let d = state.marginal(&LOGICAL_QUBITS).unwrap();
        let mut p_win = 0.0;
        for (pattern, p) in d.iter() {
            let (alice, bob) = outcome_bits(pattern);
            if win(
                parity_complete(alice, Player::Alice),
                parity_complete(bob, Player::Bob),
                round,
            ) {
                p_win += p;
            }
        }
        assert!((p_win - 0.5).abs() < 1e-9, "naive omission wins {p_win}");
    }

    #[test]
    fn global_phase_prefactors_do_not_move_outcomes() {
        // strip every GlobalPhase op and compare distributions
        let round = RoundInput::new(1, 2).unwrap();
        let theta = 0.3;
        let conv = Convention::resolved();
        let init = extended_initial_state();
        let strip = |c: &Circuit| {
            let mut ops = Vec::new();
            let mut tags = Vec::new();
            for (i, op) in c.ops().iter().enumerate() {
                if matches!(op, CircuitOp::GlobalPhase(_)) {
                    continue;
                }
                if c.cz_tags().contains(&i) {
                    tags.push(ops.len());
                }
                ops.push(op.clone());
            }
            Circuit::new(3, ops, tags).unwrap()
        };
        let run = |alice: &Circuit, bob: &Circuit| {
            let s = alice
                .apply_embedded(&init, &[0, 1, 2], theta, conv)
                .unwrap();
            let s = bob.apply_embedded(&s, &[3, 4, 5], theta, conv).unwrap();
            s.marginal(&LOGICAL_QUBITS).unwrap()
        };
        let alice = extended_circuit(Player::Alice, round.a(), true);
        let bob = extended_circuit(Player::Bob, round.b(), true);
        let with_phase = run(&alice, &bob);
        let without = run(&strip(&alice), &strip(&bob));
        assert!(with_phase.max_abs_diff(&without) <= 1e-12);
    }

    #[test]
    fn identical_inputs_give_bit_identical_outputs() {
        let round = RoundInput::new(2, 2).unwrap();
        let first = outcome_distribution(round, 0.37, EXTENDED_FULL).unwrap();
        let second = outcome_distribution(round, 0.37, EXTENDED_FULL).unwrap();
        for (pattern, p) in first.iter() {
            assert_eq!(p.to_bits(), second.probability(pattern).to_bits());
        }
    }

    #[test]
    fn theta_outside_range_is_rejected() {
        let round = RoundInput::new(1, 1).unwrap();
        assert!(matches!(
            round_success(round, -0.1, EXTENDED_FULL),
            Err(GameError::ThetaOutOfRange(_))
        ));
        assert!(matches!(
            round_success(round, PI + 0.1, EXTENDED_FULL),
            Err(GameError::ThetaOutOfRange(_))
        ));
        assert!(RoundInput::new(0, 2).is_err());
        assert!(RoundInput::new(1, 4).is_err());
    }

    #[test]
    fn zero_theta_substitution_equals_untagged_circuit() {
        let circuit = extended_circuit(Player::Alice, 1, true);
        let untagged = Circuit::new(3, circuit.ops().to_vec(), Vec::new()).unwrap();
        let with_tags = circuit.unitary(0.0, Convention::resolved()).unwrap();
        let without = untagged.unitary(0.0, Convention::resolved()).unwrap();
        assert!(with_tags.max_abs_diff(&without) <= 1e-12);
    }

    #[test]
    fn reference_backend_ignores_theta() {
        let round = RoundInput::new(3, 2).unwrap();
        let at_zero = outcome_distribution(round, 0.0, Backend::Reference).unwrap();
        let at_point_seven = outcome_distribution(round, 0.7, Backend::Reference).unwrap();
        for (pattern, p) in at_zero.iter() {
            assert_eq!(p.to_bits(), at_point_seven.probability(pattern).to_bits());
        }
    }
}
