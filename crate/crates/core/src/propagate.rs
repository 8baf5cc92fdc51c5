//! Pauli frames and deterministic propagation of faults through circuits.

use serde::{Deserialize, Serialize};

use crate::circuit::{Basis, Circuit, Op};
use crate::pauli::{flip_bit, get_bit, set_bit, words_for, Pauli1, PauliOperator};

/// A Pauli error relative to the ideal evolution, updated by conjugation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
}

impl Frame {
    pub fn new(n: usize) -> Self {
        Self { x: vec![0; words_for(n.max(1))], z: vec![0; words_for(n.max(1))] }
    }

    pub fn clear(&mut self) {
        self.x.iter_mut().for_each(|w| *w = 0);
        self.z.iter_mut().for_each(|w| *w = 0);
    }

    #[inline]
    pub fn inject(&mut self, q: usize, p: Pauli1) {
        let (a, b) = p.bits();
        if a {
            flip_bit(&mut self.x, q);
        }
        if b {
            flip_bit(&mut self.z, q);
        }
    }

    pub fn is_clear(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Conjugates the frame through `op`. Measurements whose outcome the
    /// frame flips are reported through `flip`.
    #[inline]
    pub fn apply(&mut self, op: &Op, mut flip: impl FnMut(usize)) {
        match *op {
            Op::H(q) => {
                let (a, b) = (get_bit(&self.x, q), get_bit(&self.z, q));
                set_bit(&mut self.x, q, b);
                set_bit(&mut self.z, q, a);
            }
            Op::S(q) => {
                if get_bit(&self.x, q) {
                    flip_bit(&mut self.z, q);
                }
            }
            Op::X(_) | Op::Z(_) => {}
            Op::Cx(c, t) => {
                if get_bit(&self.x, c) {
                    flip_bit(&mut self.x, t);
                }
                if get_bit(&self.z, t) {
                    flip_bit(&mut self.z, c);
                }
            }
            Op::Reset(_, q) => {
                set_bit(&mut self.x, q, false);
                set_bit(&mut self.z, q, false);
            }
            Op::Measure(b, q, r) => {
                let anti = match b {
                    Basis::Z => get_bit(&self.x, q),
                    Basis::X => get_bit(&self.z, q),
                };
                if anti {
                    flip(r);
                }
            }
            Op::Perm(ref pairs) => {
                let bits: Vec<(bool, bool)> =
                    pairs.iter().map(|&(s, _)| (get_bit(&self.x, s), get_bit(&self.z, s))).collect();
                for (&(_, d), (a, b)) in pairs.iter().zip(bits) {
                    set_bit(&mut self.x, d, a);
                    set_bit(&mut self.z, d, b);
                }
            }
        }
    }

    pub fn to_pauli(&self, n: usize) -> PauliOperator {
        PauliOperator::from_words(n, self.x[..words_for(n)].to_vec(), self.z[..words_for(n)].to_vec(), false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum When {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultKind {
    /// Pauli on a subset of the instruction's operands.
    Pauli(Vec<(usize, Pauli1)>),
    /// Flips the record written by a measurement instruction.
    MeasurementFlip,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaultEvent {
    pub instruction: usize,
    pub when: When,
    pub kind: FaultKind,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FaultError {
    #[error("instruction {0} does not exist")]
    NoSuchInstruction(usize),
    #[error("fault acts outside the operands of instruction {0}")]
    OffSupport(usize),
    #[error("measurement flips attach only to measurements (instruction {0})")]
    NotAMeasurement(usize),
    #[error("fault is the identity")]
    Identity,
}

impl FaultEvent {
    pub fn pauli(instruction: usize, when: When, paulis: Vec<(usize, Pauli1)>) -> Self {
        Self { instruction, when, kind: FaultKind::Pauli(paulis) }
    }

    pub fn measurement_flip(instruction: usize) -> Self {
        Self { instruction, when: When::After, kind: FaultKind::MeasurementFlip }
    }

    pub fn validate(&self, circuit: &Circuit) -> Result<(), FaultError> {
        let ins = circuit
            .instructions()
            .get(self.instruction)
            .ok_or(FaultError::NoSuchInstruction(self.instruction))?;
        match &self.kind {
            FaultKind::MeasurementFlip => {
                if !matches!(ins.op, Op::Measure(..)) {
                    return Err(FaultError::NotAMeasurement(self.instruction));
                }
            }
            FaultKind::Pauli(ps) => {
                let qs = ins.op.qubits();
                if ps.iter().all(|(_, p)| *p == Pauli1::I) {
                    return Err(FaultError::Identity);
                }
                if ps.iter().any(|(q, _)| !qs.contains(q)) {
                    return Err(FaultError::OffSupport(self.instruction));
                }
            }
        }
        Ok(())
    }

    /// Applies the fault to a frame (record flips go through `flip`).
    #[inline]
    pub fn inject(&self, circuit: &Circuit, frame: &mut Frame, mut flip: impl FnMut(usize)) {
        match &self.kind {
            FaultKind::Pauli(ps) => {
                for &(q, p) in ps {
                    frame.inject(q, p);
                }
            }
            FaultKind::MeasurementFlip => {
                if let Op::Measure(_, _, r) = circuit.instructions()[self.instruction].op {
                    flip(r);
                }
            }
        }
    }
}

/// Outcome of pushing faults to the end of a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propagation {
    /// Pauli left on qubits that are not terminated by a measurement.
    pub residual: PauliOperator,
    /// Record indices whose value the faults flip, sorted.
    pub flipped: Vec<usize>,
}

/// Qubits whose final operation is not a measurement.
pub fn live_qubits(circuit: &Circuit) -> Vec<bool> {
    let mut live = vec![true; circuit.num_qubits()];
    for ins in circuit.instructions() {
        match &ins.op {
            Op::Measure(_, q, _) => live[*q] = false,
            Op::Perm(pairs) => {
                let old = live.clone();
                for &(s, d) in pairs {
                    live[d] = old[s];
                }
            }
            op => op.qubits().into_iter().for_each(|q| live[q] = true),
        }
    }
    live
}

/// Pushes a set of faults through the circuit by Clifford conjugation.
pub fn propagate(circuit: &Circuit, faults: &[FaultEvent]) -> Propagation {
    let n = circuit.num_qubits();
    let mut frame = Frame::new(n);
    let mut flips = vec![0u64; words_for(circuit.num_records().max(1))];
    let mut sorted: Vec<&FaultEvent> = faults.iter().collect();
    sorted.sort_by_key(|f| (f.instruction, f.when));
    let mut next = 0;
    for (i, ins) in circuit.instructions().iter().enumerate() {
        while next < sorted.len() && sorted[next].instruction == i && sorted[next].when == When::Before {
            sorted[next].inject(circuit, &mut frame, |r| flip_bit(&mut flips, r));
            next += 1;
        }
        frame.apply(&ins.op, |r| flip_bit(&mut flips, r));
        while next < sorted.len() && sorted[next].instruction == i {
            sorted[next].inject(circuit, &mut frame, |r| flip_bit(&mut flips, r));
            next += 1;
        }
    }
    let live = live_qubits(circuit);
    let mut residual = frame.to_pauli(n);
    for (q, alive) in live.iter().enumerate() {
        if !alive {
            residual.set(q, Pauli1::I);
        }
    }
    let flipped = (0..circuit.num_records()).filter(|&r| get_bit(&flips, r)).collect();
    Propagation { residual, flipped }
}

/// Single-fault form of [`propagate`].
pub fn conjugate_through(circuit: &Circuit, fault: &FaultEvent) -> Propagation {
    propagate(circuit, std::slice::from_ref(fault))
}

/// Every non-identity Pauli on the given qubits (3 for one qubit, 15 for two).
pub fn pauli_alphabet(qubits: &[usize]) -> Vec<Vec<(usize, Pauli1)>> {
    let letters = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];
    let mut out = Vec::new();
    let total = 4usize.pow(qubits.len() as u32);
    for code in 1..total {
        let mut c = code;
        let mut ps = Vec::new();
        for &q in qubits {
            let p = letters[c % 4];
            c /= 4;
            if p != Pauli1::I {
                ps.push((q, p));
            }
        }
        out.push(ps);
    }
    out
}
