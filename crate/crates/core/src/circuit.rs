//! Layered Clifford circuits and their line-based text format.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn dual(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::X => "X",
            Basis::Z => "Z",
        })
    }
}

impl FromStr for Basis {
    type Err = CircuitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "X" | "x" => Ok(Basis::X),
            "Z" | "z" => Ok(Basis::Z),
            _ => Err(CircuitError::Parse(format!("unknown basis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    H(usize),
    S(usize),
    X(usize),
    Z(usize),
    Cx(usize, usize),
    Reset(Basis, usize),
    /// Measurement of qubit in basis, written to the given record index.
    Measure(Basis, usize, usize),
    /// Moves the state of each `src` qubit onto `dst`.
    Perm(Vec<(usize, usize)>),
}

impl Op {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Op::H(q) | Op::S(q) | Op::X(q) | Op::Z(q) | Op::Reset(_, q) | Op::Measure(_, q, _) => {
                vec![*q]
            }
            Op::Cx(c, t) => vec![*c, *t],
            Op::Perm(pairs) => pairs.iter().map(|&(s, _)| s).collect(),
        }
    }

    pub fn is_gate(&self) -> bool {
        matches!(self, Op::H(_) | Op::S(_) | Op::X(_) | Op::Z(_) | Op::Cx(..))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Op,
    pub layer: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("instruction {index}: qubit {qubit} out of range")]
    QubitOutOfRange { index: usize, qubit: usize },
    #[error("instruction {index}: repeated operand {qubit}")]
    RepeatedOperand { index: usize, qubit: usize },
    #[error("instruction {index}: permutation is not a bijection on its qubits")]
    BadPermutation { index: usize },
    #[error("instruction {index}: layers must be non-decreasing")]
    LayerOrder { index: usize },
    #[error("layer {layer}: qubit {qubit} used twice")]
    LayerOverlap { layer: usize, qubit: usize },
    #[error("measurement records must be exactly 0..{0}")]
    Records(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A circuit whose instructions are sorted by layer. Record indices are the
/// append order of measurements at build time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    num_qubits: usize,
    instructions: Vec<Instruction>,
    num_records: usize,
}

impl Circuit {
    pub fn from_parts(num_qubits: usize, instructions: Vec<Instruction>) -> Result<Self, CircuitError> {
        let num_records =
            instructions.iter().filter(|i| matches!(i.op, Op::Measure(..))).count();
        let c = Self { num_qubits, instructions, num_records };
        c.validate()?;
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn num_records(&self) -> usize {
        self.num_records
    }

    pub fn num_layers(&self) -> usize {
        self.instructions.last().map_or(0, |i| i.layer + 1)
    }

    pub fn count_cnots(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i.op, Op::Cx(..))).count()
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut seen_records = vec![false; self.num_records];
        let mut last_layer = 0;
        let mut layer_use: Vec<usize> = vec![usize::MAX; self.num_qubits];
        for (index, ins) in self.instructions.iter().enumerate() {
            if ins.layer < last_layer {
                return Err(CircuitError::LayerOrder { index });
            }
            last_layer = ins.layer;
            let qs = ins.op.qubits();
            for (k, &q) in qs.iter().enumerate() {
                if q >= self.num_qubits {
                    return Err(CircuitError::QubitOutOfRange { index, qubit: q });
                }
                if qs[..k].contains(&q) {
                    return Err(CircuitError::RepeatedOperand { index, qubit: q });
                }
                if layer_use[q] == ins.layer {
                    return Err(CircuitError::LayerOverlap { layer: ins.layer, qubit: q });
                }
                layer_use[q] = ins.layer;
            }
            match &ins.op {
                Op::Perm(pairs) => {
                    let mut src: Vec<usize> = pairs.iter().map(|p| p.0).collect();
                    let mut dst: Vec<usize> = pairs.iter().map(|p| p.1).collect();
                    src.sort_unstable();
                    dst.sort_unstable();
                    if src != dst {
                        return Err(CircuitError::BadPermutation { index });
                    }
                }
                Op::Measure(_, _, r) => {
                    if *r >= self.num_records || seen_records[*r] {
                        return Err(CircuitError::Records(self.num_records));
                    }
                    seen_records[*r] = true;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Serialises to the text format. Layers are separated by `TICK`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "QUBITS {}", self.num_qubits).unwrap();
        let mut layer = 0;
        for ins in &self.instructions {
            while layer < ins.layer {
                out.push_str("TICK\n");
                layer += 1;
            }
            match &ins.op {
                Op::H(q) => writeln!(out, "H {q}"),
                Op::S(q) => writeln!(out, "S {q}"),
                Op::X(q) => writeln!(out, "X {q}"),
                Op::Z(q) => writeln!(out, "Z {q}"),
                Op::Cx(c, t) => writeln!(out, "CX {c} {t}"),
                Op::Reset(b, q) => writeln!(out, "R{b} {q}"),
                Op::Measure(b, q, r) => writeln!(out, "MEAS {b} {q} -> r{r}"),
                Op::Perm(pairs) => {
                    out.push_str("PERM");
                    for (s, d) in pairs {
                        write!(out, " {s} {d}").unwrap();
                    }
                    writeln!(out)
                }
            }
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CircuitError> {
        let perr = |line: usize, msg: &str| CircuitError::Parse(format!("line {}: {msg}", line + 1));
        let mut num_qubits = None;
        let mut layer = 0;
        let mut instructions = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let head = tok.next().unwrap();
            let nums = |tok: std::str::SplitWhitespace<'_>| -> Result<Vec<usize>, CircuitError> {
                tok.map(|t| t.parse::<usize>().map_err(|_| perr(ln, "expected qubit index")))
                    .collect()
            };
            let op = match head {
                "QUBITS" => {
                    num_qubits = Some(nums(tok)?.first().copied().ok_or_else(|| perr(ln, "QUBITS needs a count"))?);
                    continue;
                }
                "TICK" => {
                    layer += 1;
                    continue;
                }
                "MEAS" => {
                    let parts: Vec<&str> = tok.collect();
                    if parts.len() != 4 || parts[2] != "->" || !parts[3].starts_with('r') {
                        return Err(perr(ln, "expected MEAS X|Z q -> rK"));
                    }
                    let b: Basis = parts[0].parse()?;
                    let q = parts[1].parse().map_err(|_| perr(ln, "bad qubit"))?;
                    let r = parts[3][1..].parse().map_err(|_| perr(ln, "bad record"))?;
                    Op::Measure(b, q, r)
                }
                "PERM" => {
                    let v = nums(tok)?;
                    if v.len() % 2 != 0 {
                        return Err(perr(ln, "PERM needs src/dst pairs"));
                    }
                    Op::Perm(v.chunks(2).map(|c| (c[0], c[1])).collect())
                }
                _ => {
                    let v = nums(tok)?;
                    let one = |v: &[usize]| {
                        if v.len() == 1 { Ok(v[0]) } else { Err(perr(ln, "expected one operand")) }
                    };
                    match head {
                        "H" => Op::H(one(&v)?),
                        "S" => Op::S(one(&v)?),
                        "X" => Op::X(one(&v)?),
                        "Z" => Op::Z(one(&v)?),
                        "RX" => Op::Reset(Basis::X, one(&v)?),
                        "RZ" => Op::Reset(Basis::Z, one(&v)?),
                        "CX" | "CNOT" => {
                            if v.len() != 2 {
                                return Err(perr(ln, "CX needs two operands"));
                            }
                            Op::Cx(v[0], v[1])
                        }
                        other => return Err(perr(ln, &format!("unknown instruction {other}"))),
                    }
                }
            };
            instructions.push(Instruction { op, layer });
        }
        let n = num_qubits.ok_or_else(|| CircuitError::Parse("missing QUBITS header".into()))?;
        Self::from_parts(n, instructions)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Builds circuits with as-soon-as-possible layering per qubit.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    num_qubits: usize,
    free_at: Vec<usize>,
    pending: Vec<Instruction>,
    num_records: usize,
}

impl CircuitBuilder {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, free_at: vec![0; num_qubits], pending: Vec::new(), num_records: 0 }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_records(&self) -> usize {
        self.num_records
    }

    fn push(&mut self, op: Op) {
        let qs = op.qubits();
        let layer = qs.iter().map(|&q| self.free_at[q]).max().unwrap_or(0);
        for q in qs {
            self.free_at[q] = layer + 1;
        }
        self.pending.push(Instruction { op, layer });
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(Op::H(q));
        self
    }

    pub fn s(&mut self, q: usize) -> &mut Self {
        self.push(Op::S(q));
        self
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.push(Op::X(q));
        self
    }

    pub fn z(&mut self, q: usize) -> &mut Self {
        self.push(Op::Z(q));
        self
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(Op::Cx(control, target));
        self
    }

    pub fn reset(&mut self, basis: Basis, q: usize) -> &mut Self {
        self.push(Op::Reset(basis, q));
        self
    }

    pub fn measure(&mut self, basis: Basis, q: usize) -> usize {
        let r = self.num_records;
        self.num_records += 1;
        self.push(Op::Measure(basis, q, r));
        r
    }

    /// Relabels qubits: the state on `from[i]` moves to `to[i]`.
    pub fn permute(&mut self, pairs: &[(usize, usize)]) -> &mut Self {
        let moving: Vec<(usize, usize)> = pairs.iter().copied().filter(|(s, d)| s != d).collect();
        if !moving.is_empty() {
            self.push(Op::Perm(moving));
        }
        self
    }

    /// Synchronises the given qubits: nothing after the barrier starts
    /// before everything before it has finished.
    pub fn barrier(&mut self, qubits: &[usize]) -> &mut Self {
        let t = qubits.iter().map(|&q| self.free_at[q]).max().unwrap_or(0);
        for &q in qubits {
            self.free_at[q] = t;
        }
        self
    }

    /// Barrier on every qubit; returns the first layer after it.
    pub fn barrier_all(&mut self) -> usize {
        let t = self.free_at.iter().copied().max().unwrap_or(0);
        self.free_at.iter_mut().for_each(|f| *f = t);
        t
    }

    pub fn build(&self) -> Circuit {
        let mut ins = self.pending.clone();
        ins.sort_by_key(|i| i.layer);
        Circuit::from_parts(self.num_qubits, ins).expect("builder produces valid circuits")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asap_layering_parallelises_disjoint_gates() {
        let mut b = CircuitBuilder::new(4);
        b.h(0).h(1).cx(0, 1).cx(2, 3);
        let c = b.build();
        let layers: Vec<usize> = c.instructions().iter().map(|i| i.layer).collect();
        assert_eq!(layers, vec![0, 0, 0, 1]);
    }

    #[test]
    fn barrier_delays_later_ops() {
        let mut b = CircuitBuilder::new(3);
        b.cx(0, 1).cx(0, 1);
        b.barrier(&[0, 1, 2]);
        b.h(2);
        assert_eq!(b.build().instructions().last().unwrap().layer, 2);
    }

    #[test]
    fn text_round_trip() {
        let mut b = CircuitBuilder::new(3);
        b.reset(Basis::X, 0).reset(Basis::Z, 1).cx(0, 1).s(2).x(2).z(1);
        b.permute(&[(0, 2), (2, 0)]);
        b.measure(Basis::Z, 1);
        b.measure(Basis::X, 0);
        let c = b.build();
        let text = c.to_text();
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn invalid_circuits_are_rejected() {
        assert!(Circuit::from_text("QUBITS 2\nCX 0 0\n").is_err());
        assert!(Circuit::from_text("QUBITS 2\nCX 0 2\n").is_err());
        assert!(Circuit::from_text("QUBITS 2\nH 0\nH 0\n").is_err());
        assert!(Circuit::from_text("QUBITS 2\nMEAS Z 0 -> r1\n").is_err());
        assert!(Circuit::from_text("QUBITS 3\nPERM 0 1 1 2\n").is_err());
        assert!(Circuit::from_text("H 0\n").is_err());
    }
}
