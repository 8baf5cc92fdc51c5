//! Encoded and unencoded experiment plans, and the Monte Carlo runner.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::Serialize;

use crate::circuit::{Basis, Circuit};
use crate::code::{col_swap, logical_basis, perm_from_cycles, row_swap, LogicalOp, Perm};
use crate::decoder::{DecoderState, Pairing, Status};
use crate::gadgets::{DecodeStep, GadgetError, PrepState, Program, RecordRole, W4Flavor};
use crate::noise::{instrument, NoiseError, NoiseParams};
use crate::sampler::FrameSampler;
use crate::stats::TrialStats;

pub const PLAN_NAMES: [&str; 10] = [
    "path4-enc",
    "path4-base",
    "cube8-enc",
    "cube8-base",
    "cat12-enc",
    "cat12-base",
    "rep-ec-4",
    "rep-ec-8",
    "teleport-base-1",
    "teleport-base-2",
];

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("unknown plan {0:?}")]
    UnknownPlan(String),
    #[error("plan {0} needs a measurement basis (X or Z)")]
    NeedsBasis(String),
    #[error("plan {0} has a single measurement setting")]
    NoBasis(String),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// A parity of value slots that is `expected` in the absence of faults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Predicate {
    pub label: String,
    pub slots: Vec<usize>,
    pub expected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShotOutcome {
    Prerejected,
    Postrejected,
    Correct,
    Error,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    pub basis: Option<Basis>,
    pub program: Program,
    pub predicates: Vec<Predicate>,
    /// Layers that receive noise; `None` means all of them.
    pub noise_window: Option<Range<usize>>,
}

/// Knobs that are not part of the plan name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOptions {
    pub flavor: W4Flavor,
    /// Teleportation rounds for the repeated-EC plans.
    pub rounds: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { flavor: W4Flavor::OneFlag, rounds: 5 }
    }
}

impl ExperimentPlan {
    pub fn circuit(&self) -> Circuit {
        self.program.circuit()
    }

    pub fn decode(&self, record: &[u64], trace: bool) -> DecoderState {
        self.program.decode(record, trace)
    }

    pub fn judge(&self, st: &DecoderState) -> ShotOutcome {
        match st.status {
            Status::Prerejected => ShotOutcome::Prerejected,
            Status::Postrejected => ShotOutcome::Postrejected,
            Status::Active => {
                let ok = self
                    .predicates
                    .iter()
                    .all(|p| p.slots.iter().fold(false, |a, &s| a ^ st.values[s]) == p.expected);
                if ok {
                    ShotOutcome::Correct
                } else {
                    ShotOutcome::Error
                }
            }
        }
    }

    pub fn classify(&self, record: &[u64]) -> ShotOutcome {
        self.judge(&self.decode(record, false))
    }

    /// Records not read by any decode step.
    pub fn unconsumed_records(&self) -> Vec<usize> {
        let mut used = BTreeSet::new();
        for s in &self.program.steps {
            match s {
                DecodeStep::Prereject { records, .. } => used.extend(records.iter().copied()),
                DecodeStep::Group(g) => {
                    for r in &g.reps {
                        used.extend(r.x.iter().chain(&r.z).chain(&r.flags).copied());
                    }
                }
                DecodeStep::ReadTransversal { records, .. } | DecodeStep::ReadSplit { records, .. } => {
                    used.extend(records.iter().copied())
                }
                DecodeStep::ReadRaw { records, .. } => used.extend(records.iter().copied()),
                DecodeStep::Permute { .. } | DecodeStep::TransversalCnot { .. } => {}
            }
        }
        (0..self.program.records.len()).filter(|r| !used.contains(r)).collect()
    }
}

fn need_basis(name: &str, basis: Option<Basis>) -> Result<Basis, PlanError> {
    basis.ok_or_else(|| PlanError::NeedsBasis(name.into()))
}

pub fn is_encoded(name: &str) -> bool {
    !name.ends_with("-base") && !name.starts_with("teleport")
}

/// Whether the plan has separate X and Z measurement settings.
pub fn has_basis_setting(name: &str) -> bool {
    !name.starts_with("rep-ec") && !name.starts_with("teleport")
}

pub fn build_plan(name: &str, basis: Option<Basis>) -> Result<ExperimentPlan, PlanError> {
    build_plan_with(name, basis, PlanOptions::default())
}

pub fn build_plan_with(name: &str, basis: Option<Basis>, opts: PlanOptions) -> Result<ExperimentPlan, PlanError> {
    if !PLAN_NAMES.contains(&name) {
        return Err(PlanError::UnknownPlan(name.into()));
    }
    if !has_basis_setting(name) && basis.is_some() {
        return Err(PlanError::NoBasis(name.into()));
    }
    let (program, predicates) = match name {
        "path4-enc" => path4_encoded(need_basis(name, basis)?, opts)?,
        "path4-base" => path4_baseline(need_basis(name, basis)?),
        "cube8-enc" => cube8_encoded(need_basis(name, basis)?)?,
        "cube8-base" => cube8_baseline(need_basis(name, basis)?),
        "cat12-enc" => cat12_encoded(need_basis(name, basis)?, opts)?,
        "cat12-base" => cat12_baseline(need_basis(name, basis)?),
        "rep-ec-4" => repeated_ec(1, opts.rounds)?,
        "rep-ec-8" => repeated_ec(2, opts.rounds)?,
        "teleport-base-1" => teleport_baseline(1, opts.rounds),
        "teleport-base-2" => teleport_baseline(2, opts.rounds),
        _ => unreachable!(),
    };
    Ok(ExperimentPlan { name: name.into(), basis, program, predicates, noise_window: None })
}

// ---- helpers for encoded plans ----

/// Value slots for logical qubits 3..=6 of a block, read in `basis`.
fn data_reads(prog: &mut Program, block: usize, basis: Basis) -> ([usize; 4], Vec<(LogicalOp, usize)>) {
    let slots: [usize; 4] = std::array::from_fn(|k| prog.new_value(format!("b{block}.{basis}{}", k + 3)));
    let reads = (0..4)
        .map(|k| {
            let op = match basis {
                Basis::X => LogicalOp::x(k + 3),
                Basis::Z => LogicalOp::z(k + 3),
            };
            (op, slots[k])
        })
        .collect();
    (slots, reads)
}

fn pred(label: impl Into<String>, slots: Vec<usize>) -> Predicate {
    Predicate { label: label.into(), slots, expected: false }
}

/// Slot of logical `i` (3..=6) in a block's read slots.
fn at(slots: &[usize; 4], i: usize) -> usize {
    slots[i - 3]
}

pub fn cycle_perm() -> Perm {
    perm_from_cycles(&[&[0, 2, 5], &[3, 6, 4], &[8, 15, 10], &[9, 12, 14]])
}

fn path4_encoded(basis: Basis, opts: PlanOptions) -> Result<(Program, Vec<Predicate>), PlanError> {
    let mut p = Program::new(1, opts.flavor == W4Flavor::TwoFlag, 0);
    p.prep(0, PrepState::PlusZeroAlternating);
    // Bell pairs on (3,6) and (4,5)
    p.permute(0, &row_swap(1, 2));
    // measures X2X6, Z2Z5, X2: the path 3-6-5-4
    p.mb_cnot(0, 5, 6, opts.flavor)?;
    let (s, reads) = data_reads(&mut p, 0, basis);
    p.destructive_measure(0, basis, reads);
    let preds = match basis {
        Basis::X => vec![pred("X3X6", vec![at(&s, 3), at(&s, 6)]), pred("X6X5X4", vec![at(&s, 6), at(&s, 5), at(&s, 4)])],
        Basis::Z => vec![pred("Z3Z6Z5", vec![at(&s, 3), at(&s, 6), at(&s, 5)]), pred("Z5Z4", vec![at(&s, 5), at(&s, 4)])],
    };
    Ok((p, preds))
}

/// Control logical `c` is joined to these target logicals in the
/// encoded cube.
pub const CUBE_ADJACENCY: [(usize, [usize; 3]); 4] = [(3, [3, 4, 5]), (4, [3, 4, 6]), (5, [3, 5, 6]), (6, [4, 5, 6])];

fn cube8_encoded(basis: Basis) -> Result<(Program, Vec<Predicate>), PlanError> {
    let mut p = Program::new(2, false, 0);
    p.prep(0, PrepState::ZeroZeroPluses);
    p.prep(1, PrepState::PlusPlusZeros);
    p.transversal_cnot(0, 1);
    p.ec_round(0);
    p.ec_round(1);
    p.permute(1, &row_swap(0, 2));
    p.transversal_cnot(0, 1);
    p.ec_round(0);
    p.ec_round(1);
    p.permute(1, &col_swap(0, 2));
    p.transversal_cnot(0, 1);
    let (c, rc) = data_reads(&mut p, 0, basis);
    let (t, rt) = data_reads(&mut p, 1, basis);
    p.destructive_measure(0, basis, rc);
    p.destructive_measure(1, basis, rt);
    let preds = match basis {
        Basis::X => CUBE_ADJACENCY
            .iter()
            .map(|&(ci, ts)| {
                let mut slots = vec![at(&c, ci)];
                slots.extend(ts.iter().map(|&ti| at(&t, ti)));
                pred(format!("X c{ci} t{ts:?}"), slots)
            })
            .collect(),
        Basis::Z => (3..=6)
            .map(|ti| {
                let cs: Vec<usize> = CUBE_ADJACENCY.iter().filter(|(_, ts)| ts.contains(&ti)).map(|(ci, _)| *ci).collect();
                let mut slots = vec![at(&t, ti)];
                slots.extend(cs.iter().map(|&ci| at(&c, ci)));
                pred(format!("Z t{ti} c{cs:?}"), slots)
            })
            .collect(),
    };
    Ok((p, preds))
}

fn cat12_encoded(basis: Basis, opts: PlanOptions) -> Result<(Program, Vec<Predicate>), PlanError> {
    let mut p = Program::new(3, opts.flavor == W4Flavor::TwoFlag, 0);
    p.prep(0, PrepState::PlusZeroAlternating);
    p.prep(1, PrepState::PlusPlusZeros);
    p.prep(2, PrepState::PlusPlusZeros);
    p.permute(0, &row_swap(1, 2));
    p.cat_merge(0, opts.flavor)?;
    p.transversal_cnot(0, 1);
    p.transversal_cnot(0, 2);
    let slots: Vec<[usize; 4]> = (0..3)
        .map(|b| {
            let (s, r) = data_reads(&mut p, b, basis);
            p.destructive_measure(b, basis, r);
            s
        })
        .collect();
    let preds = match basis {
        Basis::X => vec![pred("X^12", slots.iter().flatten().copied().collect())],
        Basis::Z => {
            let mut v = vec![
                pred("Z3Z6", vec![at(&slots[0], 3), at(&slots[0], 6)]),
                pred("Z6Z4", vec![at(&slots[0], 6), at(&slots[0], 4)]),
                pred("Z4Z5", vec![at(&slots[0], 4), at(&slots[0], 5)]),
            ];
            for b in 1..3 {
                for i in 3..=6 {
                    v.push(pred(format!("Z{i} b0 b{b}"), vec![at(&slots[0], i), at(&slots[b], i)]));
                }
            }
            v
        }
    };
    Ok((p, preds))
}

/// Repeated teleportation-based error correction on one or two blocks.
fn repeated_ec(blocks: usize, rounds: usize) -> Result<(Program, Vec<Predicate>), PlanError> {
    let mut p = Program::new(blocks, false, 0);
    let x = LogicalOp::x;
    let z = LogicalOp::z;
    for b in 0..blocks {
        p.prep(b, PrepState::PlusZeroAlternating);
    }
    for b in 0..blocks {
        p.joint_logical_measure(b, x(2), z(1), Some(z(2)), Some(x(1)))?;
    }
    let perm = cycle_perm();
    for _ in 0..rounds {
        for b in 0..blocks {
            p.joint_logical_measure(b, x(1).times(x(3)), z(2).times(z(4)), Some(z(1)), Some(x(2)))?;
            p.permute(b, &perm);
            p.joint_logical_measure(b, x(2), z(1), Some(z(2).times(z(6))), Some(x(1).times(x(5))))?;
        }
    }
    p.builder.barrier_all();
    let mut preds = Vec::new();
    for b in 0..blocks {
        let ops = [x(3), z(4), x(5), z(6)];
        let reads: Vec<(LogicalOp, usize)> = ops.iter().map(|&op| (op, p.new_value(format!("b{b}.{op}")))).collect();
        for &(op, s) in &reads {
            preds.push(pred(format!("b{b} {op}"), vec![s]));
        }
        p.split_measure(b, Pairing::ADJACENT, reads);
    }
    Ok((p, preds))
}

// ---- unencoded baselines ----

fn read_all(p: &mut Program, qs: &[usize], basis: Basis) -> Vec<usize> {
    qs.iter()
        .map(|&q| {
            let r = p.measure(basis, q, RecordRole::Data, None, format!("{basis}{q}"));
            let slot = p.new_value(format!("q{q}"));
            p.steps.push(DecodeStep::ReadRaw { records: vec![r], slot });
            slot
        })
        .collect()
}

fn path4_baseline(basis: Basis) -> (Program, Vec<Predicate>) {
    let mut p = Program::new(0, false, 4);
    let q = p.plain.clone();
    p.builder.reset(Basis::X, q[0]).reset(Basis::Z, q[1]).reset(Basis::X, q[2]).reset(Basis::Z, q[3]);
    p.builder.cx(q[0], q[1]).cx(q[2], q[3]).cx(q[2], q[1]);
    p.builder.barrier_all();
    let s = read_all(&mut p, &q, basis);
    let preds = match basis {
        Basis::X => vec![pred("XXII", vec![s[0], s[1]]), pred("IXXX", vec![s[1], s[2], s[3]])],
        Basis::Z => vec![pred("ZZZI", vec![s[0], s[1], s[2]]), pred("IIZZ", vec![s[2], s[3]])],
    };
    (p, preds)
}

fn cube8_baseline(basis: Basis) -> (Program, Vec<Predicate>) {
    let mut p = Program::new(0, false, 8);
    let q = p.plain.clone();
    let even = |v: usize| v.count_ones().is_multiple_of(2);
    for v in 0..8 {
        p.builder.reset(if even(v) { Basis::X } else { Basis::Z }, q[v]);
    }
    for bit in [1, 2, 4] {
        for v in (0..8).filter(|&v| even(v)) {
            p.builder.cx(q[v], q[v ^ bit]);
        }
    }
    p.builder.barrier_all();
    let s = read_all(&mut p, &q, basis);
    let centre = |v: usize| {
        let mut slots = vec![s[v]];
        slots.extend([1, 2, 4].iter().map(|b| s[v ^ b]));
        pred(format!("vertex {v}"), slots)
    };
    let preds = match basis {
        Basis::X => (0..8).filter(|&v| even(v)).map(centre).collect(),
        Basis::Z => (0..8).filter(|&v| !even(v)).map(centre).collect(),
    };
    (p, preds)
}

/// The dual cat state `|+…+⟩ + |−…−⟩` grown as a binary tree.
fn cat12_baseline(basis: Basis) -> (Program, Vec<Predicate>) {
    let mut p = Program::new(0, false, 12);
    let q = p.plain.clone();
    p.builder.reset(Basis::Z, q[0]);
    for &x in &q[1..] {
        p.builder.reset(Basis::X, x);
    }
    let mut cluster = vec![0usize];
    let mut next = 1;
    while next < 12 {
        for m in cluster.clone() {
            if next < 12 {
                p.builder.cx(q[next], q[m]);
                cluster.push(next);
                next += 1;
            }
        }
    }
    p.builder.barrier_all();
    let s = read_all(&mut p, &q, basis);
    let preds = match basis {
        Basis::X => (0..11).map(|i| pred(format!("X{i}X{}", i + 1), vec![s[i], s[i + 1]])).collect(),
        Basis::Z => vec![pred("Z^12", s.clone())],
    };
    (p, preds)
}

/// Record sets whose parity is the Pauli frame of each qubit.
#[derive(Clone, Default)]
struct SymbolicFrame {
    x: BTreeSet<usize>,
    z: BTreeSet<usize>,
}

fn xor_into(a: &mut BTreeSet<usize>, b: &BTreeSet<usize>) {
    for &r in b {
        if !a.remove(&r) {
            a.insert(r);
        }
    }
}

/// Unencoded analogue of the repeated-EC plan: four data qubits and two
/// gauge qubits, teleporting two of the data qubits each round.
fn teleport_baseline(copies: usize, rounds: usize) -> (Program, Vec<Predicate>) {
    let mut p = Program::new(0, false, 6 * copies);
    let mut frames = vec![SymbolicFrame::default(); 6 * copies];
    // roles: d3 d4 d5 d6 g1 g2
    let mut roles: Vec<[usize; 6]> = (0..copies).map(|c| std::array::from_fn(|k| p.plain[6 * c + k])).collect();
    for r in &roles {
        for (k, basis) in [Basis::X, Basis::Z, Basis::X, Basis::Z, Basis::Z, Basis::X].into_iter().enumerate() {
            p.builder.reset(basis, r[k]);
        }
    }
    for round in 0..rounds {
        for r in roles.iter_mut() {
            let [d3, d4, d5, d6, g1, g2] = *r;
            if round > 0 {
                p.builder.reset(Basis::Z, g1).reset(Basis::X, g2);
                frames[g1] = SymbolicFrame::default();
                frames[g2] = SymbolicFrame::default();
            }
            p.builder.cx(d3, g1);
            let fx = frames[d3].x.clone();
            xor_into(&mut frames[g1].x, &fx);
            let fz = frames[g1].z.clone();
            xor_into(&mut frames[d3].z, &fz);
            let m1 = p.measure(Basis::X, d3, RecordRole::Syndrome, None, format!("MX {d3}"));
            let mut s1 = frames[d3].z.clone();
            xor_into(&mut s1, &BTreeSet::from([m1]));
            xor_into(&mut frames[g1].z, &s1);

            p.builder.cx(g2, d4);
            let fx = frames[g2].x.clone();
            xor_into(&mut frames[d4].x, &fx);
            let fz = frames[d4].z.clone();
            xor_into(&mut frames[g2].z, &fz);
            let m2 = p.measure(Basis::Z, d4, RecordRole::Syndrome, None, format!("MZ {d4}"));
            let mut s2 = frames[d4].x.clone();
            xor_into(&mut s2, &BTreeSet::from([m2]));
            xor_into(&mut frames[g2].x, &s2);

            *r = [d5, d6, g1, g2, d3, d4];
        }
    }
    p.builder.barrier_all();
    let mut preds = Vec::new();
    for (c, r) in roles.iter().enumerate() {
        for (k, basis) in [Basis::X, Basis::Z, Basis::X, Basis::Z].into_iter().enumerate() {
            let q = r[k];
            let rec = p.measure(basis, q, RecordRole::Data, None, format!("{basis}{q}"));
            let mut set = match basis {
                Basis::X => frames[q].z.clone(),
                Basis::Z => frames[q].x.clone(),
            };
            xor_into(&mut set, &BTreeSet::from([rec]));
            let slot = p.new_value(format!("copy{c}.d{}", k + 3));
            p.steps.push(DecodeStep::ReadRaw { records: set.into_iter().collect(), slot });
            preds.push(pred(format!("copy{c} d{}", k + 3), vec![slot]));
        }
    }
    (p, preds)
}

/// Monte Carlo run of a plan.
pub fn run(plan: &ExperimentPlan, shots: u64, seed: u64, params: &NoiseParams) -> Result<TrialStats, PlanError> {
    let circuit = plan.circuit();
    let model = instrument(&circuit, params, plan.noise_window.clone())?;
    let sampler = FrameSampler::new(&circuit, &model);
    let outcomes = sampler.map_shots(seed, shots, |_, rec| plan.classify(rec));
    let mut stats = TrialStats::new(&plan.name, plan.basis, seed, params.hash());
    for o in outcomes {
        stats.add(o);
    }
    Ok(stats)
}

/// Replays one shot with a decode trace.
pub fn trace_shot(plan: &ExperimentPlan, seed: u64, shot: u64, params: &NoiseParams) -> Result<(ShotOutcome, DecoderState), PlanError> {
    let circuit = plan.circuit();
    let model = instrument(&circuit, params, plan.noise_window.clone())?;
    let sampler = FrameSampler::new(&circuit, &model);
    let rec = sampler.sample_shot(seed, shot);
    let st = plan.decode(&rec, true);
    Ok((plan.judge(&st), st))
}

/// Logical operator on the block's physical data qubits, for checks
/// against the tableau.
pub fn logical_on_block(op: LogicalOp, num_qubits: usize, data: &[usize; 16]) -> crate::pauli::PauliOperator {
    logical_basis().logical_operator(op).embed(num_qubits, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseParams;

    fn settings(name: &str) -> Vec<Option<Basis>> {
        if has_basis_setting(name) {
            vec![Some(Basis::X), Some(Basis::Z)]
        } else {
            vec![None]
        }
    }

    #[test]
    fn every_record_is_consumed() {
        for name in PLAN_NAMES {
            for b in settings(name) {
                let plan = build_plan(name, b).unwrap();
                assert_eq!(plan.unconsumed_records(), Vec::<usize>::new(), "{name}");
            }
        }
    }

    #[test]
    fn noiseless_runs_accept_everything() {
        for name in PLAN_NAMES {
            for b in settings(name) {
                let plan = build_plan(name, b).unwrap();
                let s = run(&plan, 200, 11, &NoiseParams::noiseless()).unwrap();
                assert_eq!(s.accepted, 200, "{name} {b:?}: {s:?}");
                assert_eq!(s.errors, 0, "{name} {b:?}");
            }
        }
    }

    #[test]
    fn baseline_gate_counts() {
        assert_eq!(build_plan("path4-base", Some(Basis::X)).unwrap().circuit().count_cnots(), 3);
        assert_eq!(build_plan("cube8-base", Some(Basis::X)).unwrap().circuit().count_cnots(), 12);
        let cat = build_plan("cat12-base", Some(Basis::X)).unwrap().circuit();
        assert_eq!(cat.count_cnots(), 11);
        let layers: BTreeSet<usize> = cat
            .instructions()
            .iter()
            .filter(|i| matches!(i.op, crate::circuit::Op::Cx(..)))
            .map(|i| i.layer)
            .collect();
        assert_eq!(layers.len(), 4);
    }

    #[test]
    fn unknown_plan_and_basis_errors() {
        assert!(matches!(build_plan("nope", None), Err(PlanError::UnknownPlan(_))));
        assert!(matches!(build_plan("path4-enc", None), Err(PlanError::NeedsBasis(_))));
        assert!(matches!(build_plan("rep-ec-4", Some(Basis::X)), Err(PlanError::NoBasis(_))));
    }
}
