//! Exhaustive fault injection.
//!
//! Every fault location of a plan is pushed through the circuit once; its
//! effect is the set of records it flips plus the Pauli it leaves on live
//! qubits. Effects of several faults add (XOR), so a k-fault combination is
//! decoded from the noiseless reference record XORed with the summed flips.
//! Locations with identical effects are merged and counted with multiplicity.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Basis, Circuit};
use crate::code::{logical_basis, stabilizer_generators, LogicalOp};
use crate::decoder::{DecoderState, Status, TraceEvent};
use crate::experiments::{logical_on_block, ExperimentPlan, PlanError, Predicate, ShotOutcome};
use crate::gadgets::{GadgetError, PrepState, Program, RecordRole, W4Flavor};
use crate::noise::{instrument, shot_rng, NoiseParams};
use crate::pauli::{words_for, PauliOperator};
use crate::propagate::{propagate, FaultEvent};
use crate::tableau::run_ideal;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("{locations} distinct fault effects exceed the exhaustive order-2 budget of {budget}")]
    BudgetExceeded { locations: usize, budget: usize },
    #[error("unknown verification target {0:?}")]
    UnknownTarget(String),
    #[error("order {0} is not supported (1 or 2)")]
    Order(usize),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

/// Distinct fault effects allowed for exhaustive order 2.
pub const PAIR_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultClass {
    AcceptedCorrect,
    Prerejected,
    Postrejected,
    AcceptedLogicalError,
}

impl From<ShotOutcome> for FaultClass {
    fn from(o: ShotOutcome) -> Self {
        match o {
            ShotOutcome::Correct => Self::AcceptedCorrect,
            ShotOutcome::Prerejected => Self::Prerejected,
            ShotOutcome::Postrejected => Self::Postrejected,
            ShotOutcome::Error => Self::AcceptedLogicalError,
        }
    }
}

/// Counts per class, weighted by the number of fault events behind each
/// effect. Events with no effect at all are left out.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub accepted_correct: u64,
    pub prerejected: u64,
    pub postrejected: u64,
    pub accepted_logical_error: u64,
}

impl Counts {
    fn add(&mut self, c: FaultClass, n: u64) {
        match c {
            FaultClass::AcceptedCorrect => self.accepted_correct += n,
            FaultClass::Prerejected => self.prerejected += n,
            FaultClass::Postrejected => self.postrejected += n,
            FaultClass::AcceptedLogicalError => self.accepted_logical_error += n,
        }
    }

    fn merge(&mut self, o: &Counts) {
        self.accepted_correct += o.accepted_correct;
        self.prerejected += o.prerejected;
        self.postrejected += o.postrejected;
        self.accepted_logical_error += o.accepted_logical_error;
    }

    pub fn total(&self) -> u64 {
        self.accepted_correct + self.prerejected + self.postrejected + self.accepted_logical_error
    }
}

/// A failing combination with its decode trace.
#[derive(Debug, Clone, Serialize)]
pub struct Example {
    pub class: FaultClass,
    pub faults: Vec<FaultEvent>,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tally {
    pub target: String,
    pub order: usize,
    pub locations: usize,
    pub distinct_effects: usize,
    pub counts: Counts,
    /// Pairs where at least one fault alone raises a flag, either through a
    /// flag qubit or as a decoder suspect: a flagged correlated error plus
    /// one more fault.
    pub flagged_plus_one: Option<Counts>,
    pub sampled: bool,
    pub examples: Vec<Example>,
}

impl Tally {
    fn merge(&mut self, o: Tally) {
        self.locations += o.locations;
        self.distinct_effects += o.distinct_effects;
        self.counts.merge(&o.counts);
        match (&mut self.flagged_plus_one, o.flagged_plus_one) {
            (Some(a), Some(b)) => a.merge(&b),
            (a @ None, b) => *a = b,
            _ => {}
        }
        self.sampled |= o.sampled;
        self.examples.extend(o.examples);
        self.examples.truncate(MAX_EXAMPLES);
    }
}

const MAX_EXAMPLES: usize = 8;

/// A distinct fault effect and the events that produce it.
#[derive(Debug, Clone)]
struct Effect {
    flips: Vec<u64>,
    residual: PauliOperator,
    raises_flag: bool,
    events: Vec<FaultEvent>,
}

/// Every fault location of a plan, merged by effect.
pub struct FaultCatalog<'a> {
    plan: &'a ExperimentPlan,
    reference: Vec<u64>,
    effects: Vec<Effect>,
    locations: usize,
}

/// Fault sites are those of the noise model with every rate nonzero.
fn all_sites_params() -> NoiseParams {
    NoiseParams { p2: 1e-3, p1: 1e-3, p_spam: 1e-3, p_mem: 1e-3, ..NoiseParams::h2() }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; words_for(bits.len().max(1))];
    for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
        out[i >> 6] |= 1 << (i & 63);
    }
    out
}

impl<'a> FaultCatalog<'a> {
    pub fn new(plan: &'a ExperimentPlan) -> Result<Self, VerifyError> {
        let circuit = plan.circuit();
        let model = instrument(&circuit, &all_sites_params(), plan.noise_window.clone()).map_err(PlanError::from)?;
        let flag_records: Vec<usize> = plan
            .program
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.role == RecordRole::Flag)
            .map(|(i, _)| i)
            .collect();
        let events: Vec<FaultEvent> =
            model.sites().flat_map(|(_, s)| (0..s.alternatives()).map(move |a| s.event(a))).collect();
        let locations = events.len();
        let propagated: Vec<(FaultEvent, Vec<u64>, PauliOperator)> = events
            .into_par_iter()
            .map(|e| {
                let pr = propagate(&circuit, std::slice::from_ref(&e));
                let mut flips = vec![0u64; words_for(circuit.num_records().max(1))];
                for r in pr.flipped {
                    flips[r >> 6] |= 1 << (r & 63);
                }
                (e, flips, pr.residual)
            })
            .collect();
        let mut index: HashMap<(Vec<u64>, PauliOperator), usize> = HashMap::new();
        let mut effects: Vec<Effect> = Vec::new();
        for (e, flips, residual) in propagated {
            if flips.iter().all(|w| *w == 0) && residual.is_identity() {
                continue;
            }
            let key = (flips, residual);
            match index.get(&key) {
                Some(&k) => effects[k].events.push(e),
                None => {
                    let raises_flag = flag_records.iter().any(|&r| (key.0[r >> 6] >> (r & 63)) & 1 == 1);
                    index.insert(key.clone(), effects.len());
                    effects.push(Effect { flips: key.0, residual: key.1, raises_flag, events: vec![e] });
                }
            }
        }
        let (_, reference) = run_ideal(&circuit);
        let mut cat = Self { plan, reference: pack(&reference), effects, locations };
        // a fault also counts as flagged when the decoder raises a suspect
        // for it, which is how the unflagged joint checks signal a hook
        let raised: Vec<bool> = cat
            .effects
            .par_iter()
            .map(|e| {
                let (_, st) = cat.decode(&[e.flips.as_slice()], true);
                st.trace.unwrap_or_default().iter().any(|t| matches!(t, TraceEvent::FlagRaised { .. }))
            })
            .collect();
        for (e, r) in cat.effects.iter_mut().zip(raised) {
            e.raises_flag |= r;
        }
        Ok(cat)
    }

    /// Class of an arbitrary fault set, propagated from scratch.
    pub fn classify(&self, faults: &[FaultEvent]) -> FaultClass {
        let circuit = self.plan.circuit();
        let mut flips = vec![0u64; self.reference.len()];
        for r in propagate(&circuit, faults).flipped {
            flips[r >> 6] |= 1 << (r & 63);
        }
        self.decode(&[&flips], false).0
    }

    /// One representative event per distinct effect.
    pub fn representatives(&self) -> impl Iterator<Item = &FaultEvent> {
        self.effects.iter().map(|e| &e.events[0])
    }

    pub fn locations(&self) -> usize {
        self.locations
    }

    pub fn distinct_effects(&self) -> usize {
        self.effects.len()
    }

    fn decode(&self, flips: &[&[u64]], trace: bool) -> (FaultClass, DecoderState) {
        let mut rec = self.reference.clone();
        for f in flips {
            for (w, x) in rec.iter_mut().zip(f.iter()) {
                *w ^= x;
            }
        }
        let st = self.plan.decode(&rec, trace);
        (self.plan.judge(&st).into(), st)
    }

    fn example(&self, class: FaultClass, ids: &[usize]) -> Example {
        let flips: Vec<&[u64]> = ids.iter().map(|&i| self.effects[i].flips.as_slice()).collect();
        let (_, st) = self.decode(&flips, true);
        Example { class, faults: ids.iter().map(|&i| self.effects[i].events[0].clone()).collect(), trace: st.trace.unwrap_or_default() }
    }

    fn tally(&self, order: usize, sampled: bool) -> Tally {
        Tally {
            target: self.plan.name.clone(),
            order,
            locations: self.locations,
            distinct_effects: self.effects.len(),
            counts: Counts::default(),
            flagged_plus_one: (order == 2).then(Counts::default),
            sampled,
            examples: Vec::new(),
        }
    }

    /// Every single fault.
    pub fn order1(&self) -> Tally {
        let mut t = self.tally(1, false);
        let classes: Vec<FaultClass> =
            self.effects.par_iter().map(|e| self.decode(&[e.flips.as_slice()], false).0).collect();
        for (i, c) in classes.into_iter().enumerate() {
            t.counts.add(c, self.effects[i].events.len() as u64);
            if is_failure(c, 1) && t.examples.len() < MAX_EXAMPLES {
                t.examples.push(self.example(c, &[i]));
            }
        }
        t
    }

    /// Every unordered pair of fault events. Pairs with the same effect
    /// cancel and count as accepted-correct.
    pub fn order2(&self) -> Result<Tally, VerifyError> {
        let n = self.effects.len();
        if n > PAIR_BUDGET {
            return Err(VerifyError::BudgetExceeded { locations: n, budget: PAIR_BUDGET });
        }
        let mut t = self.tally(2, false);
        let per_first: Vec<(Counts, Counts, Vec<(FaultClass, usize, usize)>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut all = Counts::default();
                let mut flagged = Counts::default();
                let mut bad = Vec::new();
                let mi = self.effects[i].events.len() as u64;
                all.add(FaultClass::AcceptedCorrect, mi * (mi - 1) / 2);
                for j in i + 1..n {
                    let (c, _) = self.decode(&[&self.effects[i].flips, &self.effects[j].flips], false);
                    let m = mi * self.effects[j].events.len() as u64;
                    all.add(c, m);
                    if self.effects[i].raises_flag || self.effects[j].raises_flag {
                        flagged.add(c, m);
                    }
                    if is_failure(c, 2) && bad.len() < MAX_EXAMPLES {
                        bad.push((c, i, j));
                    }
                }
                (all, flagged, bad)
            })
            .collect();
        for (all, flagged, bad) in per_first {
            t.counts.merge(&all);
            t.flagged_plus_one.as_mut().expect("order 2").merge(&flagged);
            for (c, i, j) in bad {
                if t.examples.len() < MAX_EXAMPLES {
                    t.examples.push(self.example(c, &[i, j]));
                }
            }
        }
        Ok(t)
    }

    /// Uniformly sampled pairs of distinct effects, for circuits too large
    /// to exhaust. Counts are numbers of sampled pairs.
    pub fn sampled_order2(&self, pairs: u64, seed: u64) -> Tally {
        let n = self.effects.len();
        let mut t = self.tally(2, true);
        if n < 2 {
            return t;
        }
        let results: Vec<(FaultClass, bool, usize, usize)> = (0..pairs)
            .into_par_iter()
            .map(|s| {
                let mut rng = shot_rng(seed, s);
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (c, _) = self.decode(&[&self.effects[i].flips, &self.effects[j].flips], false);
                (c, self.effects[i].raises_flag || self.effects[j].raises_flag, i, j)
            })
            .collect();
        for (c, flagged, i, j) in results {
            t.counts.add(c, 1);
            if flagged {
                t.flagged_plus_one.as_mut().expect("order 2").add(c, 1);
            }
            if is_failure(c, 2) && t.examples.len() < MAX_EXAMPLES {
                t.examples.push(self.example(c, &[i, j]));
            }
        }
        t
    }

    /// Stabilizers, gauge operators and the logical operators that fix the
    /// ideal output state of `block`.
    fn output_span(&self, block: usize) -> PauliSpan {
        let circuit = self.plan.circuit();
        let data = self.plan.program.blocks[block].data;
        let (tableau, _) = run_ideal(&circuit);
        let mut span = PauliSpan::stabilizers_and_gauge();
        let lb = logical_basis();
        for x in 0u8..16 {
            for z in 0u8..16 {
                let op = LogicalOp { x: x << 2, z: z << 2 };
                if op.is_identity() {
                    continue;
                }
                if tableau.expectation(&logical_on_block(op, circuit.num_qubits(), &data)).is_some() {
                    span.insert(symplectic16(&lb.logical_operator(op)));
                }
            }
        }
        span
    }

    /// Single faults that are neither rejected nor flagged, with the reduced
    /// weight of their data residual on `block` (up to the output state's
    /// stabilizers). Used for gadgets whose output stays live.
    pub fn single_fault_residuals(&self, block: usize) -> Vec<(FaultEvent, usize)> {
        let data = self.plan.program.blocks[block].data;
        let meter = ResidualMeter::new(self.output_span(block), 3);
        self.effects
            .iter()
            .filter(|e| !e.raises_flag)
            .filter(|e| self.decode(&[e.flips.as_slice()], false).1.status == Status::Active)
            .map(|e| (e.events[0].clone(), meter.weight(&e.residual.restrict(&data))))
            .collect()
    }

    /// Pairs of faults that are accepted and leave a data residual of
    /// reduced weight above `max_weight`.
    pub fn pair_residual_violations(&self, block: usize, max_weight: usize) -> Vec<(FaultEvent, FaultEvent, usize)> {
        let data = self.plan.program.blocks[block].data;
        let meter = ResidualMeter::new(self.output_span(block), max_weight);
        let res: Vec<u32> = self.effects.iter().map(|e| symplectic16(&e.residual.restrict(&data))).collect();
        let n = self.effects.len();
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let meter = &meter;
                let res = &res;
                (i + 1..n).filter_map(move |j| {
                    let w = meter.weight_of(res[i] ^ res[j]);
                    if w <= max_weight {
                        return None;
                    }
                    let st = self.decode(&[&self.effects[i].flips, &self.effects[j].flips], false).1;
                    (st.status == Status::Active)
                        .then(|| (self.effects[i].events[0].clone(), self.effects[j].events[0].clone(), w))
                })
            })
            .collect()
    }
}

fn is_failure(c: FaultClass, order: usize) -> bool {
    match c {
        FaultClass::AcceptedLogicalError => true,
        FaultClass::Postrejected => order == 1,
        _ => false,
    }
}

/// Symplectic vector of a 16-qubit Pauli: x in the low half, z in the high.
fn symplectic16(p: &PauliOperator) -> u32 {
    (p.x_mask() as u32 & 0xffff) | ((p.z_mask() as u32 & 0xffff) << 16)
}

/// GF(2) span of 16-qubit Paulis, kept as an xor basis.
#[derive(Debug, Clone, Default)]
pub struct PauliSpan {
    basis: Vec<u32>,
}

impl PauliSpan {
    /// Code stabilizers and the gauge operators of logical qubits 1 and 2.
    pub fn stabilizers_and_gauge() -> Self {
        let (xs, zs) = stabilizer_generators();
        let mut span = Self::default();
        for p in xs.iter().chain(&zs) {
            span.insert(symplectic16(p));
        }
        let lb = logical_basis();
        for i in [1, 2] {
            span.insert(lb.x_canonical(i) as u32);
            span.insert((lb.z_canonical(i) as u32) << 16);
        }
        span
    }

    fn reduce(&self, mut v: u32) -> u32 {
        for &b in &self.basis {
            v = v.min(v ^ b);
        }
        v
    }

    pub fn insert(&mut self, v: u32) {
        let r = self.reduce(v);
        if r != 0 {
            self.basis.push(r);
            self.basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.reduce(v) == 0
    }

    /// Canonical representative of the coset `v + span`.
    pub fn canonical(&self, v: u32) -> u32 {
        self.reduce(v)
    }
}

/// Reduced weights of residuals: the larger of the minimum X-part and
/// Z-part weights over cosets of a CSS span, tabulated up to a cap. X and Z
/// errors are decoded separately, so this is the weight that matters.
pub struct ResidualMeter {
    span: PauliSpan,
    cap: usize,
    table: HashMap<u32, usize>,
}

impl ResidualMeter {
    pub fn new(span: PauliSpan, cap: usize) -> Self {
        let mut table = HashMap::new();
        fn fill(v: u32, w: usize, from: usize, shift: u32, cap: usize, span: &PauliSpan, table: &mut HashMap<u32, usize>) {
            let e = table.entry(span.canonical(v)).or_insert(w);
            *e = (*e).min(w);
            if w == cap {
                return;
            }
            for q in from..16 {
                fill(v ^ (1 << (q as u32 + shift)), w + 1, q + 1, shift, cap, span, table);
            }
        }
        fill(0, 0, 0, 0, cap, &span, &mut table);
        fill(0, 0, 0, 16, cap, &span, &mut table);
        Self { span, cap, table }
    }

    /// Reduced weight, or `cap + 1` if it exceeds the cap.
    pub fn weight(&self, p: &PauliOperator) -> usize {
        self.weight_of(symplectic16(p))
    }

    fn weight_of(&self, v: u32) -> usize {
        let part = |u: u32| self.table.get(&self.span.canonical(u)).copied().unwrap_or(self.cap + 1);
        part(v & 0xffff).max(part(v & 0xffff_0000))
    }
}

/// Minimum weight of `p` times an element of `span`, searched up to
/// `cap`; returns `cap + 1` when nothing lighter exists.
pub fn reduced_weight(p: &PauliOperator, span: &PauliSpan, cap: usize) -> usize {
    ResidualMeter::new(span.clone(), cap).weight(p)
}

// ---- gadget harnesses ----

/// States the harnesses start from. Together their deterministic logical
/// products detect every nontrivial Pauli on logical qubits 3..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarnessInput {
    /// `|+0+0+0⟩`
    Alternating,
    /// Bell pairs on (3,6) and (4,5), with logical 2 in `|0⟩`.
    Bell,
}

fn prepare_input(p: &mut Program, b: usize, input: HarnessInput) {
    p.prep(b, PrepState::PlusZeroAlternating);
    if input == HarnessInput::Bell {
        p.permute(b, &crate::code::row_swap(1, 2));
    }
}

/// Reads logical 3..=6 of every block in `basis` and derives predicates
/// from the products that are deterministic in the ideal circuit.
fn read_and_derive(p: &mut Program, basis: Basis) -> Vec<Predicate> {
    let prefix: Circuit = p.circuit();
    let n = prefix.num_qubits();
    let (tableau, _) = run_ideal(&prefix);
    let mut ops = Vec::new();
    let mut slots = Vec::new();
    for b in 0..p.blocks.len() {
        let data = p.blocks[b].data;
        let mut reads = Vec::new();
        for i in 3..=6 {
            let op = match basis {
                Basis::X => LogicalOp::x(i),
                Basis::Z => LogicalOp::z(i),
            };
            let s = p.new_value(format!("b{b}.{basis}{i}"));
            reads.push((op, s));
            slots.push(s);
            ops.push(logical_on_block(op, n, &data));
        }
        p.destructive_measure(b, basis, reads);
    }
    // deterministic subsets, reduced to an independent set
    let m = ops.len();
    let mut kept: Vec<u32> = Vec::new();
    let mut pivots: Vec<u32> = Vec::new();
    for subset in 1u32..(1 << m) {
        let mut reduced = subset;
        for &v in &pivots {
            reduced = reduced.min(reduced ^ v);
        }
        if reduced == 0 {
            continue;
        }
        let mut prod = PauliOperator::identity(n);
        for (k, op) in ops.iter().enumerate() {
            if (subset >> k) & 1 == 1 {
                prod.mul_unsigned(op);
            }
        }
        if tableau.expectation(&prod).is_some() {
            pivots.push(reduced);
            pivots.sort_unstable_by(|a, b| b.cmp(a));
            kept.push(subset);
        }
    }
    kept.into_iter()
        .map(|subset| {
            let chosen: Vec<usize> = (0..m).filter(|k| (subset >> k) & 1 == 1).map(|k| slots[k]).collect();
            let label = chosen.iter().map(|&s| p.value_labels[s].clone()).collect::<Vec<_>>().join("*");
            Predicate { label, slots: chosen, expected: false }
        })
        .collect()
}

/// Ideal input, noisy gadget, ideal transversal readout. Expected values
/// come from decoding the noiseless reference record.
pub fn harness(
    name: &str,
    blocks: usize,
    extra_ancilla: bool,
    input: HarnessInput,
    basis: Basis,
    gadget: impl FnOnce(&mut Program) -> Result<(), GadgetError>,
) -> Result<ExperimentPlan, VerifyError> {
    let mut p = Program::new(blocks, extra_ancilla, 0);
    for b in 0..blocks {
        prepare_input(&mut p, b, input);
    }
    let start = p.builder.barrier_all();
    gadget(&mut p)?;
    let end = p.builder.barrier_all();
    let predicates = read_and_derive(&mut p, basis);
    let mut plan = ExperimentPlan {
        name: format!("{name}[{input:?},{basis}]"),
        basis: Some(basis),
        program: p,
        predicates,
        noise_window: Some(start..end),
    };
    fix_expected(&mut plan);
    Ok(plan)
}

/// Noisy preparation followed by ideal readout.
pub fn prep_harness(state: PrepState, basis: Basis) -> ExperimentPlan {
    let mut p = Program::new(1, false, 0);
    p.prep(0, state);
    let end = p.builder.barrier_all();
    let predicates = read_and_derive(&mut p, basis);
    let mut plan = ExperimentPlan {
        name: format!("prep[{state:?},{basis}]"),
        basis: Some(basis),
        program: p,
        predicates,
        noise_window: Some(0..end),
    };
    fix_expected(&mut plan);
    plan
}

/// Ideal input, noisy transversal readout.
pub fn readout_harness(input: HarnessInput, basis: Basis) -> ExperimentPlan {
    let mut p = Program::new(1, false, 0);
    prepare_input(&mut p, 0, input);
    let start = p.builder.barrier_all();
    let predicates = read_and_derive(&mut p, basis);
    let mut plan = ExperimentPlan {
        name: format!("readout[{input:?},{basis}]"),
        basis: Some(basis),
        program: p,
        predicates,
        noise_window: Some(start..usize::MAX),
    };
    fix_expected(&mut plan);
    plan
}

fn fix_expected(plan: &mut ExperimentPlan) {
    let (_, reference) = run_ideal(&plan.circuit());
    let st = plan.decode(&pack(&reference), false);
    assert!(st.is_active(), "noiseless harness run must be accepted");
    for pr in &mut plan.predicates {
        pr.expected = pr.slots.iter().fold(false, |a, &s| a ^ st.values[s]);
    }
}

/// Gadgets with live output: noisy gadget after ideal input, no readout.
fn live_output(
    name: &str,
    extra_ancilla: bool,
    input: Option<HarnessInput>,
    gadget: impl FnOnce(&mut Program) -> Result<(), GadgetError>,
) -> Result<ExperimentPlan, VerifyError> {
    let mut p = Program::new(1, extra_ancilla, 0);
    let start = match input {
        Some(i) => {
            prepare_input(&mut p, 0, i);
            p.builder.barrier_all()
        }
        None => 0,
    };
    gadget(&mut p)?;
    Ok(ExperimentPlan {
        name: name.into(),
        basis: None,
        program: p,
        predicates: Vec::new(),
        noise_window: Some(start..usize::MAX),
    })
}

pub const PREP_STATES: [PrepState; 3] = [PrepState::PlusZeroAlternating, PrepState::PlusPlusZeros, PrepState::ZeroZeroPluses];

/// A noisy preparation with live output, for residual contracts.
pub fn prep_output_plan(state: PrepState, checks: &[(Basis, crate::code::Mask)]) -> ExperimentPlan {
    live_output(&format!("prep[{state:?}]"), false, None, |p| {
        p.prep_checked(0, state, checks);
        Ok(())
    })
    .expect("preparation has no failure modes")
}

/// Accepted fault pairs in a preparation whose residual has reduced
/// weight above two.
pub fn prep_pair_violations(state: PrepState) -> Result<usize, VerifyError> {
    let plan = prep_output_plan(state, &state.checks());
    Ok(FaultCatalog::new(&plan)?.pair_residual_violations(0, 2).len())
}

pub const GADGET_NAMES: [&str; 9] = [
    "prep",
    "readout",
    "measure-w4-one-flag",
    "measure-w4-two-flag",
    "ec-round",
    "mb-cnot",
    "mb-cnot-two-flag",
    "cat-merge",
    "transversal-cnot",
];

/// Harness plans for a named gadget, covering both inputs and bases.
pub fn gadget_plans(name: &str) -> Result<Vec<ExperimentPlan>, VerifyError> {
    let mut out = Vec::new();
    let bases = [Basis::X, Basis::Z];
    let inputs = [HarnessInput::Alternating, HarnessInput::Bell];
    match name {
        "prep" => {
            for s in [PrepState::PlusZeroAlternating, PrepState::PlusPlusZeros, PrepState::ZeroZeroPluses] {
                for b in bases {
                    out.push(prep_harness(s, b));
                }
            }
            return Ok(out);
        }
        "readout" => {
            for i in inputs {
                for b in bases {
                    out.push(readout_harness(i, b));
                }
            }
            return Ok(out);
        }
        _ => {}
    }
    for i in inputs {
        for b in bases {
            let plan = match name {
                "measure-w4-one-flag" | "measure-w4-two-flag" => {
                    let (flavor, extra) = if name.ends_with("one-flag") {
                        (W4Flavor::OneFlag, false)
                    } else {
                        (W4Flavor::TwoFlag, true)
                    };
                    // a weight-4 logical measurement whose outcome is
                    // deterministic on both inputs
                    harness(name, 1, extra, i, b, |p| p.logical_measure(0, LogicalOp::z(2), flavor, None, None))?
                }
                "ec-round" => harness(name, 1, false, i, b, |p| {
                    p.ec_round(0);
                    Ok(())
                })?,
                "mb-cnot" => harness(name, 1, false, i, b, |p| p.mb_cnot(0, 5, 6, W4Flavor::OneFlag))?,
                "mb-cnot-two-flag" => harness(name, 1, true, i, b, |p| p.mb_cnot(0, 5, 6, W4Flavor::TwoFlag))?,
                "cat-merge" => harness(name, 1, false, i, b, |p| p.cat_merge(0, W4Flavor::OneFlag))?,
                "transversal-cnot" => harness(name, 2, false, i, b, |p| {
                    p.transversal_cnot(0, 1);
                    Ok(())
                })?,
                _ => return Err(VerifyError::UnknownTarget(name.into())),
            };
            out.push(plan);
        }
    }
    Ok(out)
}

/// Runs exhaustive fault injection of the given order over several plans
/// and merges the tallies under one name.
pub fn verify_plans(target: &str, plans: &[ExperimentPlan], order: usize) -> Result<Tally, VerifyError> {
    let mut merged: Option<Tally> = None;
    for plan in plans {
        let cat = FaultCatalog::new(plan)?;
        let t = match order {
            1 => cat.order1(),
            2 => cat.order2()?,
            k => return Err(VerifyError::Order(k)),
        };
        match &mut merged {
            None => merged = Some(t),
            Some(m) => m.merge(t),
        }
    }
    let mut t = merged.ok_or_else(|| VerifyError::UnknownTarget(target.into()))?;
    t.target = target.into();
    Ok(t)
}

/// Sampled order-2 injection over several plans, `pairs` per plan.
pub fn sample_plans(target: &str, plans: &[ExperimentPlan], pairs: u64, seed: u64) -> Result<Tally, VerifyError> {
    let mut merged: Option<Tally> = None;
    for plan in plans {
        let t = FaultCatalog::new(plan)?.sampled_order2(pairs, seed);
        match &mut merged {
            None => merged = Some(t),
            Some(m) => m.merge(t),
        }
    }
    let mut t = merged.ok_or_else(|| VerifyError::UnknownTarget(target.into()))?;
    t.target = target.into();
    Ok(t)
}

/// Whether a tally meets the contract: no accepted logical errors, and at
/// order 1 no postrejections either.
pub fn passes(t: &Tally) -> bool {
    t.counts.accepted_logical_error == 0 && (t.order > 1 || t.counts.postrejected == 0)
}

/// Largest reduced residual left by an unflagged, accepted single fault on
/// the output of a live-output gadget (prep or a flagged weight-4 check).
pub fn max_single_fault_residual(target: &str) -> Result<usize, VerifyError> {
    let plans = match target {
        "prep" => PREP_STATES.into_iter().map(|s| prep_output_plan(s, &s.checks())).collect(),
        "measure-w4-one-flag" | "measure-w4-two-flag" => {
            let (flavor, extra) =
                if target.ends_with("one-flag") { (W4Flavor::OneFlag, false) } else { (W4Flavor::TwoFlag, true) };
            let mut v = Vec::new();
            for basis in [Basis::X, Basis::Z] {
                for support in [[0u8, 1, 2, 3], [0, 4, 8, 12], [0, 1, 4, 5]] {
                    v.push(live_output(target, extra, Some(HarnessInput::Alternating), |p| {
                        p.measure_w4(0, basis, support, flavor).map(|_| ())
                    })?);
                }
            }
            v
        }
        _ => return Err(VerifyError::UnknownTarget(target.into())),
    };
    let mut worst = 0;
    for plan in &plans {
        let cat = FaultCatalog::new(plan)?;
        worst = cat.single_fault_residuals(0).into_iter().map(|(_, w)| w).fold(worst, usize::max);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::build_plan;

    #[test]
    fn reduced_weight_modulo_stabilizers() {
        let span = PauliSpan::stabilizers_and_gauge();
        let (xs, zs) = stabilizer_generators();
        assert_eq!(reduced_weight(&xs[0], &span, 4), 0);
        let mut p = zs[2].clone();
        p.mul_unsigned(&PauliOperator::x_on(16, [5]));
        assert_eq!(reduced_weight(&p, &span, 4), 1);
        let l3 = logical_basis().logical_operator(LogicalOp::x(3));
        assert_eq!(reduced_weight(&l3, &span, 4), 4);
        let mut two = PauliOperator::identity(16);
        two.set(0, crate::pauli::Pauli1::Y);
        two.set(9, crate::pauli::Pauli1::X);
        assert_eq!(reduced_weight(&two, &span, 4), 2);
        two.set(9, crate::pauli::Pauli1::Z);
        assert_eq!(reduced_weight(&two, &span, 4), 2);
        two.set(0, crate::pauli::Pauli1::X);
        assert_eq!(reduced_weight(&two, &span, 4), 1);
    }

    #[test]
    fn empty_fault_set_is_accepted_correct() {
        for b in [Basis::X, Basis::Z] {
            let plan = build_plan("path4-enc", Some(b)).unwrap();
            let cat = FaultCatalog::new(&plan).unwrap();
            assert_eq!(cat.decode(&[], false).0, FaultClass::AcceptedCorrect);
        }
    }

    #[test]
    fn harness_predicates_cover_logicals() {
        // Alternating gives two predicates per basis, Bell pairs two more
        for input in [HarnessInput::Alternating, HarnessInput::Bell] {
            let plan = harness("id", 1, false, input, Basis::Z, |_| Ok(())).unwrap();
            assert_eq!(plan.predicates.len(), 2, "{input:?}");
        }
    }

    #[test]
    fn ec_round_single_faults() {
        let t = verify_plans("ec-round", &gadget_plans("ec-round").unwrap(), 1).unwrap();
        assert!(passes(&t), "{:?}", t.counts);
        assert!(t.counts.total() > 0);
    }
}
