//! Circuit gadgets on tesseract blocks, each emitted together with the
//! classical steps that interpret its records.
//!
//! A block owns 16 data qubits, laid out in grid order, and two reusable
//! ancillas (a third one is allocated only when two-flag measurements are
//! requested).

use serde::Serialize;

use crate::circuit::{Basis, Circuit, CircuitBuilder};
use crate::code::{catalog_lookup, logical_basis, mask_qubits, qubit, CodeError, LogicalOp, Mask, Perm};
use crate::decoder::{
    decode_split, decode_transversal, process_group, propagate_flags, record_bit, transport_permutation, DecoderState,
    GroupStyle, MeasGroup, Pairing, PartPlan, RepRecords, Support,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub data: [usize; 16],
    pub anc: [usize; 2],
    pub extra: Option<usize>,
}

/// Circuit used for one weight-4 measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum W4Flavor {
    Bare,
    OneFlag,
    TwoFlag,
}

impl W4Flavor {
    fn style(self) -> GroupStyle {
        match self {
            W4Flavor::Bare => GroupStyle::Bare,
            W4Flavor::OneFlag => GroupStyle::OneFlag,
            W4Flavor::TwoFlag => GroupStyle::TwoFlag,
        }
    }
}

/// Encoded states with dedicated preparation circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PrepState {
    /// `|+0+0+0⟩`
    PlusZeroAlternating,
    /// `|++0000⟩`
    PlusPlusZeros,
    /// `|00++++⟩`
    ZeroZeroPluses,
}

impl PrepState {
    /// Logical operators stabilizing the prepared state.
    pub fn stabilizers(self) -> [LogicalOp; 6] {
        match self {
            PrepState::PlusZeroAlternating => [
                LogicalOp::x(1),
                LogicalOp::z(2),
                LogicalOp::x(3),
                LogicalOp::z(4),
                LogicalOp::x(5),
                LogicalOp::z(6),
            ],
            PrepState::PlusPlusZeros => [
                LogicalOp::x(1),
                LogicalOp::x(2),
                LogicalOp::z(3),
                LogicalOp::z(4),
                LogicalOp::z(5),
                LogicalOp::z(6),
            ],
            PrepState::ZeroZeroPluses => [
                LogicalOp::z(1),
                LogicalOp::z(2),
                LogicalOp::x(3),
                LogicalOp::x(4),
                LogicalOp::x(5),
                LogicalOp::x(6),
            ],
        }
    }

    /// Verification checks run after the encoding circuit.
    pub fn checks(self) -> Vec<(Basis, Mask)> {
        match self {
            PrepState::PlusZeroAlternating => [0u16, 8]
                .into_iter()
                .flat_map(|h| {
                    let m = 0b111100 << h;
                    [(Basis::Z, m), (Basis::X, m)]
                })
                .collect(),
            // found by greedy search against the one- and two-fault residual
            // contracts
            PrepState::PlusPlusZeros => vec![
                (Basis::Z, 0x3300),
                (Basis::Z, 0xcc00),
                (Basis::X, 0x000f),
                (Basis::X, 0x00f0),
                (Basis::Z, 0x6600),
                (Basis::Z, 0x9009),
            ],
            PrepState::ZeroZeroPluses => {
                PrepState::PlusPlusZeros.checks().into_iter().map(|(b, m)| (b.dual(), m)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecordRole {
    /// Postselected check during state preparation.
    Prep,
    Syndrome,
    Flag,
    /// Final data-qubit readout.
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordInfo {
    pub role: RecordRole,
    pub block: Option<usize>,
    pub label: String,
}

/// One classical processing step, in circuit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DecodeStep {
    Prereject { label: String, records: Vec<usize> },
    Group(MeasGroup),
    Permute { block: usize, perm: Perm },
    TransversalCnot { control: usize, target: usize },
    ReadTransversal { block: usize, basis: Basis, records: [usize; 16], reads: Vec<(LogicalOp, usize)> },
    ReadSplit { block: usize, pairing: Pairing, records: [usize; 16], reads: Vec<(LogicalOp, usize)> },
    /// Parity of raw records into a value slot (unencoded circuits).
    ReadRaw { records: Vec<usize>, slot: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum GadgetError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("{0} cannot be measured by weight-4 representatives of a single Pauli type")]
    MixedType(LogicalOp),
    #[error("{x} and {z} do not share representatives")]
    NotJoint { x: LogicalOp, z: LogicalOp },
    #[error("two-flag measurements need a block allocated with a third ancilla")]
    NoExtraAncilla,
}

/// A circuit under construction together with its decode steps.
#[derive(Debug, Clone)]
pub struct Program {
    pub builder: CircuitBuilder,
    pub blocks: Vec<Block>,
    /// Unencoded qubits allocated after the blocks.
    pub plain: Vec<usize>,
    pub steps: Vec<DecodeStep>,
    pub records: Vec<RecordInfo>,
    pub value_labels: Vec<String>,
}

fn support_of(m: Mask) -> Support {
    let qs = mask_qubits(m);
    assert_eq!(qs.len(), 4, "representatives have weight 4");
    [qs[0] as u8, qs[1] as u8, qs[2] as u8, qs[3] as u8]
}

impl Program {
    pub fn new(num_blocks: usize, extra_ancilla: bool, plain: usize) -> Self {
        let per = 18 + extra_ancilla as usize;
        let blocks = (0..num_blocks)
            .map(|b| {
                let base = b * per;
                Block {
                    data: std::array::from_fn(|q| base + q),
                    anc: [base + 16, base + 17],
                    extra: extra_ancilla.then_some(base + 18),
                }
            })
            .collect();
        let first_plain = num_blocks * per;
        Self {
            builder: CircuitBuilder::new(first_plain + plain),
            blocks,
            plain: (first_plain..first_plain + plain).collect(),
            steps: Vec::new(),
            records: Vec::new(),
            value_labels: Vec::new(),
        }
    }

    pub fn circuit(&self) -> Circuit {
        self.builder.build()
    }

    pub fn num_values(&self) -> usize {
        self.value_labels.len()
    }

    pub fn new_value(&mut self, label: impl Into<String>) -> usize {
        self.value_labels.push(label.into());
        self.value_labels.len() - 1
    }

    pub fn measure(&mut self, basis: Basis, q: usize, role: RecordRole, block: Option<usize>, label: impl Into<String>) -> usize {
        let r = self.builder.measure(basis, q);
        debug_assert_eq!(r, self.records.len());
        self.records.push(RecordInfo { role, block, label: label.into() });
        r
    }

    fn block_qubits(&self, b: usize) -> Vec<usize> {
        let bl = &self.blocks[b];
        bl.data.iter().chain(&bl.anc).chain(bl.extra.as_ref()).copied().collect()
    }

    fn mark_prep(&mut self, from: usize) {
        for r in &mut self.records[from..] {
            r.role = RecordRole::Prep;
        }
    }

    // ---- weight-4 measurement circuits ----

    /// Measures `basis^{⊗4}` on four data positions of a block.
    pub fn measure_w4(&mut self, b: usize, basis: Basis, support: Support, flavor: W4Flavor) -> Result<RepRecords, GadgetError> {
        let bl = self.blocks[b];
        let d: [usize; 4] = support.map(|p| bl.data[p as usize]);
        let a = bl.anc[0];
        let f = bl.anc[1];
        let label = format!("{basis}{:?}", support);
        let mut qs = vec![a, f];
        qs.extend(d);
        if flavor == W4Flavor::TwoFlag {
            qs.push(bl.extra.ok_or(GadgetError::NoExtraAncilla)?);
        }
        self.builder.barrier(&qs);
        // `link(anc, data)`: CNOT that copies the data parity onto the ancilla
        let (anc_basis, flag_basis) = (basis, basis.dual());
        let link = |bld: &mut CircuitBuilder, anc: usize, other: usize| match basis {
            Basis::X => {
                bld.cx(anc, other);
            }
            Basis::Z => {
                bld.cx(other, anc);
            }
        };
        let mut flags = Vec::new();
        let rec;
        match flavor {
            W4Flavor::Bare => {
                self.builder.reset(anc_basis, a);
                for &q in &d {
                    link(&mut self.builder, a, q);
                }
                rec = self.measure(anc_basis, a, RecordRole::Syndrome, Some(b), label);
            }
            W4Flavor::OneFlag => {
                self.builder.reset(anc_basis, a).reset(flag_basis, f);
                link(&mut self.builder, a, d[0]);
                link(&mut self.builder, a, f);
                link(&mut self.builder, a, d[1]);
                link(&mut self.builder, a, d[2]);
                link(&mut self.builder, a, f);
                link(&mut self.builder, a, d[3]);
                rec = self.measure(anc_basis, a, RecordRole::Syndrome, Some(b), label.clone());
                flags.push(self.measure(flag_basis, f, RecordRole::Flag, Some(b), format!("{label} flag")));
            }
            W4Flavor::TwoFlag => {
                let g = bl.extra.ok_or(GadgetError::NoExtraAncilla)?;
                self.builder.reset(anc_basis, a).reset(flag_basis, f).reset(flag_basis, g);
                link(&mut self.builder, a, f);
                link(&mut self.builder, a, d[0]);
                link(&mut self.builder, a, g);
                link(&mut self.builder, a, d[1]);
                link(&mut self.builder, a, d[2]);
                link(&mut self.builder, a, f);
                link(&mut self.builder, a, g);
                link(&mut self.builder, a, d[3]);
                rec = self.measure(anc_basis, a, RecordRole::Syndrome, Some(b), label.clone());
                flags.push(self.measure(flag_basis, f, RecordRole::Flag, Some(b), format!("{label} flag 1")));
                flags.push(self.measure(flag_basis, g, RecordRole::Flag, Some(b), format!("{label} flag 2")));
            }
        }
        let (x, z) = match basis {
            Basis::X => (Some(rec), None),
            Basis::Z => (None, Some(rec)),
        };
        Ok(RepRecords { support, x, z, flags })
    }

    /// Measures `X^{⊗4}` and `Z^{⊗4}` on the same four positions with eight
    /// CNOTs; the pairs `{d0, d1}` and `{d2, d3}` are where a single fault
    /// can leave a correlated error.
    pub fn measure_w4_joint(&mut self, b: usize, support: Support) -> RepRecords {
        let bl = self.blocks[b];
        let d: [usize; 4] = support.map(|p| bl.data[p as usize]);
        let (a, z) = (bl.anc[0], bl.anc[1]);
        let mut qs = vec![a, z];
        qs.extend(d);
        self.builder.barrier(&qs);
        self.builder.reset(Basis::X, a).reset(Basis::Z, z);
        for (xs, zs) in [(d[0], d[1]), (d[1], d[0]), (d[2], d[3]), (d[3], d[2])] {
            self.builder.cx(a, xs).cx(zs, z);
        }
        let label = format!("{:?}", support);
        let xr = self.measure(Basis::X, a, RecordRole::Syndrome, Some(b), format!("X{label}"));
        let zr = self.measure(Basis::Z, z, RecordRole::Syndrome, Some(b), format!("Z{label}"));
        RepRecords { support, x: Some(xr), z: Some(zr), flags: vec![] }
    }

    // ---- logical measurements ----

    fn correction_masks(op: Option<LogicalOp>) -> (Mask, Mask) {
        op.map(|o| logical_basis().representative(o)).unwrap_or((0, 0))
    }

    /// Measures a logical operator through four disjoint representatives;
    /// applies `correction` to the frame when the majority outcome is 1.
    pub fn logical_measure(
        &mut self,
        b: usize,
        op: LogicalOp,
        flavor: W4Flavor,
        correction: Option<LogicalOp>,
        value_slot: Option<usize>,
    ) -> Result<(), GadgetError> {
        let entry = catalog_lookup(op)?;
        let basis = match entry.kind {
            'X' => Basis::X,
            'Z' => Basis::Z,
            _ => return Err(GadgetError::MixedType(op)),
        };
        let mut reps = Vec::with_capacity(4);
        for m in entry.reps {
            reps.push(self.measure_w4(b, basis, support_of(m), flavor)?);
        }
        let plan = PartPlan { correction: Self::correction_masks(correction), value_slot };
        let (x_part, z_part) = match basis {
            Basis::X => (Some(plan), None),
            Basis::Z => (None, Some(plan)),
        };
        self.steps.push(DecodeStep::Group(MeasGroup {
            label: format!("measure {op}"),
            block: b,
            style: flavor.style(),
            reps: reps.try_into().expect("four representatives"),
            x_part,
            z_part,
            flag_basis: Some(basis),
        }));
        Ok(())
    }

    /// Joint measurement of an X-type and a Z-type logical that share their
    /// four representatives, using the eight-CNOT circuit on each.
    pub fn joint_logical_measure(
        &mut self,
        b: usize,
        x_op: LogicalOp,
        z_op: LogicalOp,
        x_correction: Option<LogicalOp>,
        z_correction: Option<LogicalOp>,
    ) -> Result<(), GadgetError> {
        let ex = catalog_lookup(x_op)?;
        let ez = catalog_lookup(z_op)?;
        if ex.kind != 'X' || ez.kind != 'Z' || ex.reps != ez.reps {
            return Err(GadgetError::NotJoint { x: x_op, z: z_op });
        }
        self.joint_group(b, ex.reps, format!("measure {x_op} {z_op}"), x_correction, z_correction);
        Ok(())
    }

    fn joint_group(&mut self, b: usize, reps: [Mask; 4], label: String, xc: Option<LogicalOp>, zc: Option<LogicalOp>) {
        let recs: Vec<RepRecords> = reps.iter().map(|&m| self.measure_w4_joint(b, support_of(m))).collect();
        self.steps.push(DecodeStep::Group(MeasGroup {
            label,
            block: b,
            style: GroupStyle::Rolling,
            reps: recs.try_into().expect("four representatives"),
            x_part: Some(PartPlan { correction: Self::correction_masks(xc), value_slot: None }),
            z_part: Some(PartPlan { correction: Self::correction_masks(zc), value_slot: None }),
            flag_basis: None,
        }));
    }

    /// One round of error correction: joint measurements on the four rows,
    /// then on the four columns.
    pub fn ec_round(&mut self, b: usize) {
        let rows = std::array::from_fn(crate::code::row_mask);
        let cols = std::array::from_fn(crate::code::col_mask);
        self.joint_group(b, rows, "rows".into(), None, None);
        self.joint_group(b, cols, "columns".into(), None, None);
    }

    /// Logical CNOT `control -> target` by measurements, using logical
    /// qubit 2 as workspace (it must start in `|0⟩`): measure
    /// `X_2 X_target`, then `Z_2 Z_control`, then `X_2`.
    pub fn mb_cnot(&mut self, b: usize, control: usize, target: usize, flavor: W4Flavor) -> Result<(), GadgetError> {
        let x2 = LogicalOp::x(2);
        let z2 = LogicalOp::z(2);
        let x2xt = x2.times(LogicalOp::x(target));
        let z2zc = z2.times(LogicalOp::z(control));
        self.logical_measure(b, x2xt, flavor, Some(z2), None)?;
        self.logical_measure(b, z2zc, flavor, Some(x2xt), None)?;
        self.logical_measure(b, x2, flavor, Some(z2zc), None)?;
        Ok(())
    }

    /// Measures `Z_4 Z_6`, merging Bell pairs on (3,6) and (4,5) into a
    /// four-qubit cat state.
    pub fn cat_merge(&mut self, b: usize, flavor: W4Flavor) -> Result<(), GadgetError> {
        let z4z6 = LogicalOp::z(4).times(LogicalOp::z(6));
        let x3x6 = LogicalOp::x(3).times(LogicalOp::x(6));
        self.logical_measure(b, z4z6, flavor, Some(x3x6), None)
    }

    // ---- permutations and transversal gates ----

    /// Physically relabels the block's data qubits: position `p` moves to `perm[p]`.
    pub fn permute(&mut self, b: usize, perm: &Perm) {
        let bl = self.blocks[b];
        let pairs: Vec<(usize, usize)> = (0..16).map(|p| (bl.data[p], bl.data[perm[p] as usize])).collect();
        self.builder.permute(&pairs);
        self.steps.push(DecodeStep::Permute { block: b, perm: *perm });
    }

    pub fn transversal_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (self.blocks[control], self.blocks[target]);
        let mut qs = self.block_qubits(control);
        qs.extend(self.block_qubits(target));
        self.builder.barrier(&qs);
        for p in 0..16 {
            self.builder.cx(c.data[p], t.data[p]);
        }
        self.steps.push(DecodeStep::TransversalCnot { control, target });
    }

    // ---- preparation ----

    fn checked(&mut self, b: usize, basis: Basis, positions: &[usize], prep: &mut Vec<usize>) {
        let s: Support = [positions[0] as u8, positions[1] as u8, positions[2] as u8, positions[3] as u8];
        let r = self.measure_w4(b, basis, s, W4Flavor::OneFlag).expect("one-flag needs no extra ancilla");
        prep.extend(r.x.into_iter().chain(r.z).chain(r.flags));
    }

    /// Prepares an encoded state and postselects on its checks.
    pub fn prep(&mut self, b: usize, state: PrepState) {
        self.prep_checked(b, state, &state.checks());
    }

    /// Encoding circuit for `state` followed by flagged weight-4 checks on
    /// the given supports; any nontrivial check or flag prerejects.
    pub fn prep_checked(&mut self, b: usize, state: PrepState, checks: &[(Basis, Mask)]) {
        let first_record = self.records.len();
        let mut prep_records = Vec::new();
        let bl = self.blocks[b];
        let dq = |p: usize| bl.data[p];
        match state {
            PrepState::PlusZeroAlternating => {
                for half in 0..2 {
                    let at = |p: usize| dq(8 * half + p);
                    self.builder.reset(Basis::X, at(4));
                    for p in [5, 6, 7] {
                        self.builder.reset(Basis::Z, at(p));
                    }
                    self.builder.reset(Basis::Z, at(0));
                    for p in [1, 2, 3] {
                        self.builder.reset(Basis::X, at(p));
                    }
                    self.builder.cx(at(4), at(5)).cx(at(4), at(6)).cx(at(5), at(7));
                    self.builder.cx(at(1), at(0)).cx(at(2), at(0)).cx(at(3), at(1));
                    for p in 0..4 {
                        self.builder.cx(at(p), at(p + 4));
                    }
                }
            }
            PrepState::PlusPlusZeros | PrepState::ZeroZeroPluses => {
                // the second state is the first one conjugated by transversal H
                let dual = state == PrepState::ZeroZeroPluses;
                let basis = |b: Basis| if dual { b.dual() } else { b };
                let cx = |bld: &mut CircuitBuilder, c: usize, t: usize| {
                    if dual {
                        bld.cx(t, c);
                    } else {
                        bld.cx(c, t);
                    }
                };
                for c in 0..4 {
                    self.builder.reset(basis(Basis::X), dq(qubit(0, c)));
                }
                for r in 1..4 {
                    self.builder.reset(basis(Basis::X), dq(qubit(r, 0)));
                    for c in 1..4 {
                        self.builder.reset(basis(Basis::Z), dq(qubit(r, c)));
                    }
                    cx(&mut self.builder, dq(qubit(r, 0)), dq(qubit(r, 1)));
                    cx(&mut self.builder, dq(qubit(r, 0)), dq(qubit(r, 2)));
                    cx(&mut self.builder, dq(qubit(r, 1)), dq(qubit(r, 3)));
                }
                for c in 0..4 {
                    cx(&mut self.builder, dq(qubit(0, c)), dq(qubit(1, c)));
                }
                for c in 0..4 {
                    cx(&mut self.builder, dq(qubit(0, c)), dq(qubit(2, c)));
                    cx(&mut self.builder, dq(qubit(1, c)), dq(qubit(3, c)));
                }
            }
        }
        for &(basis, mask) in checks {
            self.checked(b, basis, &mask_qubits(mask), &mut prep_records);
        }
        self.mark_prep(first_record);
        self.steps.push(DecodeStep::Prereject { label: format!("prep {state:?} on block {b}"), records: prep_records });
    }

    // ---- readout ----

    pub fn destructive_measure(&mut self, b: usize, basis: Basis, reads: Vec<(LogicalOp, usize)>) {
        let bl = self.blocks[b];
        let qs = self.block_qubits(b);
        self.builder.barrier(&qs);
        let records = std::array::from_fn(|p| self.measure(basis, bl.data[p], RecordRole::Data, Some(b), format!("{basis}{p}")));
        self.steps.push(DecodeStep::ReadTransversal { block: b, basis, records, reads });
    }

    /// CNOTs between the two halves of the block, then X readout of the
    /// control half and Z readout of the target half.
    pub fn split_measure(&mut self, b: usize, pairing: Pairing, reads: Vec<(LogicalOp, usize)>) {
        let bl = self.blocks[b];
        let qs = self.block_qubits(b);
        self.builder.barrier(&qs);
        let control = pairing.control_mask();
        for p in mask_qubits(control) {
            self.builder.cx(bl.data[p], bl.data[pairing.partner(p)]);
        }
        let records = std::array::from_fn(|p| {
            let basis = if (control >> p) & 1 == 1 { Basis::X } else { Basis::Z };
            self.measure(basis, bl.data[p], RecordRole::Data, Some(b), format!("{basis}{p}"))
        });
        self.steps.push(DecodeStep::ReadSplit { block: b, pairing, records, reads });
    }

    /// Plan-level decoding of one record.
    pub fn decode(&self, record: &[u64], trace: bool) -> DecoderState {
        run_steps(&self.steps, self.blocks.len(), self.num_values(), record, trace)
    }
}

pub fn run_steps(steps: &[DecodeStep], blocks: usize, values: usize, record: &[u64], trace: bool) -> DecoderState {
    let mut st = DecoderState::new(blocks, values);
    if trace {
        st = st.with_trace();
    }
    for step in steps {
        if !st.is_active() {
            break;
        }
        match step {
            DecodeStep::Prereject { label, records } => {
                if records.iter().any(|&r| record_bit(record, r)) {
                    st.prereject(label);
                }
            }
            DecodeStep::Group(g) => process_group(&mut st, g, record),
            DecodeStep::Permute { block, perm } => transport_permutation(&mut st, *block, perm),
            DecodeStep::TransversalCnot { control, target } => propagate_flags(&mut st, *control, *target),
            DecodeStep::ReadTransversal { block, basis, records, reads } => {
                let bits = gather(record, records);
                decode_transversal(&mut st, *block, *basis, bits, reads);
            }
            DecodeStep::ReadSplit { block, pairing, records, reads } => {
                let bits = gather(record, records);
                decode_split(&mut st, *block, *pairing, bits, reads);
            }
            DecodeStep::ReadRaw { records, slot } => {
                st.values[*slot] = records.iter().fold(false, |a, &r| a ^ record_bit(record, r));
            }
        }
    }
    st
}

fn gather(record: &[u64], records: &[usize; 16]) -> Mask {
    (0..16).fold(0, |m, p| m | ((record_bit(record, records[p]) as Mask) << p))
}

/// Where the data of each position ended up after the block permutations
/// recorded in `steps` (for tests that inspect the final state).
pub fn final_positions(steps: &[DecodeStep], block: usize) -> Perm {
    let mut at = crate::code::identity_perm();
    for s in steps {
        if let DecodeStep::Permute { block: b, perm } = s {
            if *b == block {
                at = crate::code::compose(&at, perm);
            }
        }
    }
    at
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::stabilizer_generators;
    use crate::pauli::PauliOperator;
    use crate::tableau::run_ideal;

    fn embed(p: &PauliOperator, n: usize, data: &[usize; 16]) -> PauliOperator {
        p.embed(n, data)
    }

    fn logical_on(op: LogicalOp, n: usize, data: &[usize; 16]) -> PauliOperator {
        embed(&logical_basis().logical_operator(op), n, data)
    }

    fn check_prep(state: PrepState) {
        let mut prog = Program::new(1, false, 0);
        prog.prep(0, state);
        let c = prog.circuit();
        let (t, rec) = run_ideal(&c);
        assert!(rec.iter().all(|&r| !r), "prep checks are deterministic and trivial");
        let n = c.num_qubits();
        let data = prog.blocks[0].data;
        let (xs, zs) = stabilizer_generators();
        for s in xs.iter().chain(&zs) {
            assert_eq!(t.expectation(&embed(s, n, &data)), Some(false), "{s}");
        }
        for op in state.stabilizers() {
            assert_eq!(t.expectation(&logical_on(op, n, &data)), Some(false), "{op}");
        }
    }

    #[test]
    fn prep_circuits_make_their_states() {
        check_prep(PrepState::PlusZeroAlternating);
        check_prep(PrepState::PlusPlusZeros);
        check_prep(PrepState::ZeroZeroPluses);
    }

    #[test]
    fn all_records_are_classified() {
        let mut prog = Program::new(1, true, 0);
        prog.prep(0, PrepState::PlusZeroAlternating);
        prog.ec_round(0);
        prog.logical_measure(0, LogicalOp::x(3), W4Flavor::TwoFlag, None, None).unwrap();
        prog.destructive_measure(0, Basis::X, vec![]);
        assert_eq!(prog.records.len(), prog.circuit().num_records());
        assert!(prog.records.iter().take(8).all(|r| r.role == RecordRole::Prep));
    }

    #[test]
    fn one_flag_gadget_cnot_count() {
        let mut prog = Program::new(1, true, 0);
        prog.measure_w4(0, Basis::X, [0, 1, 2, 3], W4Flavor::OneFlag).unwrap();
        assert_eq!(prog.circuit().count_cnots(), 6);
        let mut prog = Program::new(1, true, 0);
        prog.measure_w4(0, Basis::Z, [0, 1, 2, 3], W4Flavor::TwoFlag).unwrap();
        assert_eq!(prog.circuit().count_cnots(), 8);
        let mut prog = Program::new(1, false, 0);
        prog.measure_w4_joint(0, [0, 1, 2, 3]);
        let c = prog.circuit();
        assert_eq!(c.count_cnots(), 8);
        // reset, four CNOT layers, measure
        assert_eq!(c.num_layers(), 6);
        assert!(matches!(
            Program::new(1, false, 0).measure_w4(0, Basis::X, [0, 1, 2, 3], W4Flavor::TwoFlag),
            Err(GadgetError::NoExtraAncilla)
        ));
    }

    #[test]
    fn mixed_logicals_are_refused() {
        let mut prog = Program::new(1, false, 0);
        let y = LogicalOp::x(1).times(LogicalOp::z(2));
        assert!(matches!(prog.logical_measure(0, y, W4Flavor::OneFlag, None, None), Err(GadgetError::MixedType(_))));
        let x1x2 = LogicalOp::x(1).times(LogicalOp::x(2));
        assert!(matches!(
            prog.logical_measure(0, x1x2, W4Flavor::OneFlag, None, None),
            Err(GadgetError::Code(CodeError::CatalogMiss(_)))
        ));
    }
}
