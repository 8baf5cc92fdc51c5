//! Classical processing of syndrome and readout records: Pauli frames,
//! correlated-error flags, and accept/reject decisions.
//!
//! Frames are kept in current grid positions of each block. A pending flag
//! is the ordered support `[F0, F1, F2, F3]` of the weight-4 measurement
//! that raised it; the correlated errors it may announce are the pairs
//! `{F0, F1}` and `{F2, F3}` (equivalent up to the measured operator).

use serde::Serialize;

use crate::circuit::Basis;
use crate::code::{apply_perm, logical_basis, LogicalOp, Mask, Perm};

pub type Support = [u8; 4];

fn support_mask(s: &Support) -> Mask {
    s.iter().fold(0, |m, &q| m | (1 << q))
}

#[inline]
pub fn record_bit(record: &[u64], r: usize) -> bool {
    (record[r >> 6] >> (r & 63)) & 1 == 1
}

/// Per-block classical state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BlockState {
    pub frame_x: Mask,
    pub frame_z: Mask,
    /// Support flagged for a possible X error (found by Z-type checks or
    /// raised by an X-type measurement circuit).
    pub x_suspect: Option<Support>,
    pub z_suspect: Option<Support>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Active,
    Prerejected,
    Postrejected,
}

#[derive(Debug, Clone, Serialize)]
pub enum TraceEvent {
    Group { label: String, part: char, outcomes: [bool; 4], action: String },
    FlagRaised { block: usize, kind: char, support: Support },
    FrameToggle { block: usize, x: Mask, z: Mask },
    Readout { block: usize, action: String },
    Reject { reason: String, pre: bool },
}

#[derive(Debug, Clone)]
pub struct DecoderState {
    pub blocks: Vec<BlockState>,
    pub status: Status,
    pub values: Vec<bool>,
    pub trace: Option<Vec<TraceEvent>>,
}

impl DecoderState {
    pub fn new(blocks: usize, values: usize) -> Self {
        Self { blocks: vec![BlockState::default(); blocks], status: Status::Active, values: vec![false; values], trace: None }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    fn log(&mut self, e: impl FnOnce() -> TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(e());
        }
    }

    pub fn reject(&mut self, reason: &str) {
        if self.status == Status::Active {
            self.status = Status::Postrejected;
            self.log(|| TraceEvent::Reject { reason: reason.into(), pre: false });
        }
    }

    pub fn prereject(&mut self, reason: &str) {
        if self.status == Status::Active {
            self.status = Status::Prerejected;
            self.log(|| TraceEvent::Reject { reason: reason.into(), pre: true });
        }
    }

    pub fn toggle(&mut self, block: usize, x: Mask, z: Mask) {
        self.blocks[block].frame_x ^= x;
        self.blocks[block].frame_z ^= z;
        if x | z != 0 {
            self.log(|| TraceEvent::FrameToggle { block, x, z });
        }
    }
}

/// How a group of four representative measurements is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupStyle {
    /// Disagreement itself marks a suspect support for the next group in
    /// the dual direction (row/column error correction).
    Rolling,
    /// Each representative carries one flag record.
    OneFlag,
    /// Each representative carries two flag records, decoded internally.
    TwoFlag,
    /// No flags.
    Bare,
}

/// Records of one weight-4 representative measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepRecords {
    pub support: Support,
    pub x: Option<usize>,
    pub z: Option<usize>,
    pub flags: Vec<usize>,
}

/// What to do with the majority of one part (X-type or Z-type outcomes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PartPlan {
    /// Frame toggle `(x, z)` applied when the majority is 1.
    pub correction: (Mask, Mask),
    pub value_slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasGroup {
    pub label: String,
    pub block: usize,
    pub style: GroupStyle,
    pub reps: [RepRecords; 4],
    pub x_part: Option<PartPlan>,
    pub z_part: Option<PartPlan>,
    /// For flagged styles: the basis of the measurement circuit whose flags
    /// are attached (an X-type circuit announces X errors).
    pub flag_basis: Option<Basis>,
}

/// Result of interpreting four outcomes against a pending flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpretation {
    Accept { majority: bool, correction: Mask, new_flag: Option<usize> },
    Reject,
}

/// The core rule, independent of frames: outcomes of four disjoint
/// representatives, an optional pending suspect, and whether disagreement
/// should raise a new suspect.
pub fn interpret(outcomes: [bool; 4], supports: &[Support; 4], pending: Option<Support>, rolling: bool) -> Interpretation {
    let sum = outcomes.iter().filter(|&&o| o).count();
    let minority = || {
        let want = sum == 1;
        outcomes.iter().position(|&o| o == want).unwrap()
    };
    match pending {
        None => match sum {
            2 => Interpretation::Reject,
            1 | 3 => Interpretation::Accept {
                majority: sum == 3,
                correction: 0,
                new_flag: rolling.then(minority),
            },
            _ => Interpretation::Accept { majority: sum == 4, correction: 0, new_flag: None },
        },
        Some(f) => {
            let fmask = support_mask(&f);
            match sum {
                1 | 3 => {
                    let d = minority();
                    let hit = fmask & support_mask(&supports[d]);
                    if hit.count_ones() != 1 {
                        return Interpretation::Reject;
                    }
                    Interpretation::Accept { majority: sum == 3, correction: hit, new_flag: None }
                }
                2 => {
                    let rep_of = |q: u8| supports.iter().position(|s| s.contains(&q));
                    let (Some(k0), Some(k1)) = (rep_of(f[0]), rep_of(f[1])) else {
                        return Interpretation::Reject;
                    };
                    let agree = k0 != k1 && outcomes[k0] == outcomes[k1];
                    let others_differ = (0..4).filter(|&k| k != k0 && k != k1).all(|k| outcomes[k] != outcomes[k0]);
                    if agree && others_differ {
                        let pair = (1 << f[0]) | (1 << f[1]);
                        // after the pair flip every outcome equals the others' value
                        Interpretation::Accept { majority: !outcomes[k0], correction: pair, new_flag: None }
                    } else {
                        Interpretation::Reject
                    }
                }
                _ => Interpretation::Accept { majority: sum == 4, correction: 0, new_flag: None },
            }
        }
    }
}

fn parity16(m: Mask) -> bool {
    m.count_ones() & 1 == 1
}

/// Processes one measurement group. Returns the majority values of the X
/// and Z parts when present.
pub fn process_group(state: &mut DecoderState, g: &MeasGroup, record: &[u64]) {
    if !state.is_active() {
        return;
    }
    let b = g.block;
    let supports: [Support; 4] = std::array::from_fn(|k| g.reps[k].support);
    for part in ['X', 'Z'] {
        let plan = match part {
            'X' => g.x_part,
            _ => g.z_part,
        };
        let Some(plan) = plan else { continue };
        let bs = state.blocks[b];
        // X-type outcomes see Z errors, and vice versa
        let (frame_anti, pending) = match part {
            'X' => (bs.frame_z, bs.z_suspect),
            _ => (bs.frame_x, bs.x_suspect),
        };
        let outcomes: [bool; 4] = std::array::from_fn(|k| {
            let rec = match part {
                'X' => g.reps[k].x,
                _ => g.reps[k].z,
            }
            .expect("group part has a record per representative");
            record_bit(record, rec) ^ parity16(frame_anti & support_mask(&supports[k]))
        });
        let consumed = pending.is_some();
        match part {
            'X' => state.blocks[b].z_suspect = None,
            _ => state.blocks[b].x_suspect = None,
        }
        let verdict = interpret(outcomes, &supports, pending, g.style == GroupStyle::Rolling);
        state.log(|| TraceEvent::Group { label: g.label.clone(), part, outcomes, action: format!("{verdict:?}") });
        let Interpretation::Accept { majority, correction, new_flag } = verdict else {
            state.reject(&format!("{}: inconsistent {part} outcomes", g.label));
            return;
        };
        match part {
            'X' => state.toggle(b, 0, correction),
            _ => state.toggle(b, correction, 0),
        }
        if let Some(k) = new_flag {
            let s = supports[k];
            match part {
                'X' => state.blocks[b].z_suspect = Some(s),
                _ => state.blocks[b].x_suspect = Some(s),
            }
            state.log(|| TraceEvent::FlagRaised { block: b, kind: if part == 'X' { 'Z' } else { 'X' }, support: s });
        }
        if majority {
            state.toggle(b, plan.correction.0, plan.correction.1);
        }
        if let Some(slot) = plan.value_slot {
            state.values[slot] = majority;
        }
        match g.style {
            GroupStyle::OneFlag => {
                let raised: Vec<usize> = (0..4).filter(|&k| g.reps[k].flags.iter().any(|&r| record_bit(record, r))).collect();
                if raised.len() >= 2 {
                    state.reject(&format!("{}: two flags", g.label));
                    return;
                }
                if let Some(&k) = raised.first() {
                    if consumed {
                        state.reject(&format!("{}: flags in adjacent steps", g.label));
                        return;
                    }
                    let kind = g.flag_basis.unwrap_or(Basis::X);
                    let slot = match kind {
                        Basis::X => &mut state.blocks[b].x_suspect,
                        Basis::Z => &mut state.blocks[b].z_suspect,
                    };
                    if slot.is_some() {
                        state.reject(&format!("{}: flag collision", g.label));
                        return;
                    }
                    *slot = Some(supports[k]);
                    let kc = if kind == Basis::X { 'X' } else { 'Z' };
                    state.log(|| TraceEvent::FlagRaised { block: b, kind: kc, support: supports[k] });
                }
            }
            GroupStyle::TwoFlag => {
                for k in 0..4 {
                    let f = &g.reps[k].flags;
                    if f.len() == 2 && record_bit(record, f[0]) && record_bit(record, f[1]) {
                        let s = supports[k];
                        let pair = (1 << s[0]) | (1 << s[1]);
                        match g.flag_basis.unwrap_or(Basis::X) {
                            Basis::X => state.toggle(b, pair, 0),
                            Basis::Z => state.toggle(b, 0, pair),
                        }
                    }
                }
            }
            GroupStyle::Rolling | GroupStyle::Bare => {}
        }
    }
}

/// Reads logical values from a transversal single-basis readout of a block.
/// `bits` are the 16 raw outcomes in grid order.
pub fn decode_transversal(
    state: &mut DecoderState,
    block: usize,
    basis: Basis,
    bits: Mask,
    reads: &[(LogicalOp, usize)],
) {
    if !state.is_active() {
        return;
    }
    let bs = state.blocks[block];
    let (frame_anti, pending) = match basis {
        Basis::Z => (bs.frame_x, bs.x_suspect),
        Basis::X => (bs.frame_z, bs.z_suspect),
    };
    let mut v = bits ^ frame_anti;
    let lone = |p: [bool; 4]| -> Result<Option<usize>, ()> {
        let ones = p.iter().filter(|&&b| b).count();
        match ones {
            0 | 4 => Ok(None),
            1 => Ok(p.iter().position(|&b| b)),
            3 => Ok(p.iter().position(|&b| !b)),
            _ => Err(()),
        }
    };
    let parities = |v: Mask| -> ([bool; 4], [bool; 4]) {
        (
            std::array::from_fn(|r| parity16(v & crate::code::row_mask(r))),
            std::array::from_fn(|c| parity16(v & crate::code::col_mask(c))),
        )
    };
    let (rows, cols) = parities(v);
    let action;
    match (lone(rows), lone(cols)) {
        (Ok(None), Ok(None)) => action = "clean".to_string(),
        (Ok(Some(r)), Ok(Some(c))) => {
            let q = 4 * r + c;
            if let Some(f) = pending {
                if !f.contains(&(q as u8)) {
                    state.reject("readout: single error outside flagged support");
                    return;
                }
            }
            v ^= 1 << q;
            action = format!("flip {q}");
        }
        _ => {
            let Some(f) = pending else {
                state.reject("readout: uncorrectable parity pattern");
                return;
            };
            let w = v ^ (1 << f[0]) ^ (1 << f[1]);
            let (r2, c2) = parities(w);
            if !(lone(r2) == Ok(None) && lone(c2) == Ok(None)) {
                state.reject("readout: flagged pair does not explain parities");
                return;
            }
            v = w;
            action = format!("pair {} {}", f[0], f[1]);
        }
    }
    state.log(|| TraceEvent::Readout { block, action });
    let lb = logical_basis();
    for &(op, slot) in reads {
        let (x, z) = lb.representative(op);
        let rep = match basis {
            Basis::X => {
                assert!(z == 0, "X readout can only read X-type logicals");
                x
            }
            Basis::Z => {
                assert!(x == 0, "Z readout can only read Z-type logicals");
                z
            }
        };
        state.values[slot] = parity16(v & rep);
    }
}

/// Row pairing for the split readout: CNOTs from control rows to rows
/// `r ^ row_xor`, then X readout of the control half and Z readout of the
/// target half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pairing {
    pub control_rows: [usize; 2],
    pub row_xor: usize,
}

impl Pairing {
    /// Rows 1→2 and 4→3 (1-based): controls are rows 0 and 3.
    pub const ADJACENT: Pairing = Pairing { control_rows: [0, 3], row_xor: 1 };
    /// Rows 1→4 and 2→3 (1-based): controls are the top half.
    pub const OPPOSITE: Pairing = Pairing { control_rows: [0, 1], row_xor: 3 };

    pub fn partner(&self, q: usize) -> usize {
        q ^ (self.row_xor << 2)
    }

    pub fn control_mask(&self) -> Mask {
        crate::code::row_mask(self.control_rows[0]) | crate::code::row_mask(self.control_rows[1])
    }

    /// Linear forms invariant under the pairing, as checks on each half.
    fn invariant_forms(&self) -> Vec<u8> {
        let t = (self.row_xor << 2) as u32;
        (1..16u8).filter(|&l| (l as u32 & t).count_ones().is_multiple_of(2)).collect()
    }

    /// Whether a logical has a representative preserved by the pairing,
    /// which is what makes it readable from one half.
    pub fn can_read(&self, op: LogicalOp) -> bool {
        let lb = logical_basis();
        let (x, z) = lb.representative(op);
        let m = x | z;
        (x == 0 || z == 0) && (0..16).all(|q| ((m >> q) & 1) == ((m >> self.partner(q)) & 1))
    }
}

fn decode_half(v: Mask, half: Mask, forms: &[u8]) -> Option<Mask> {
    let syndrome = |v: Mask| -> Vec<bool> {
        let mut s = vec![parity16(v & half)];
        s.extend(forms.iter().map(|&l| parity16(v & half & crate::code::Linear(l).level(true))));
        s
    };
    let s = syndrome(v);
    if s.iter().all(|&b| !b) {
        return Some(v);
    }
    if !s[0] {
        return None;
    }
    let q = (0..16).filter(|&q| (half >> q) & 1 == 1).find(|&q| syndrome(1 << q) == s)?;
    Some(v ^ (1 << q))
}

/// Split readout: X values from the control half, Z values from the target half.
pub fn decode_split(
    state: &mut DecoderState,
    block: usize,
    pairing: Pairing,
    bits: Mask,
    reads: &[(LogicalOp, usize)],
) {
    if !state.is_active() {
        return;
    }
    let bs = state.blocks[block];
    let control = pairing.control_mask();
    let target = !control;
    let mut fx = bs.frame_x;
    let mut fz = bs.frame_z;
    for q in 0..16 {
        if (control >> q) & 1 == 1 {
            let t = pairing.partner(q);
            if (bs.frame_x >> q) & 1 == 1 {
                fx ^= 1 << t;
            }
            if (bs.frame_z >> t) & 1 == 1 {
                fz ^= 1 << q;
            }
        }
    }
    let v = (bits & control) ^ (fz & control) | ((bits & target) ^ (fx & target));
    let forms = pairing.invariant_forms();
    // only the non-constant invariant forms independent up to the all-ones check
    let basis_forms: Vec<u8> = {
        let mut out: Vec<u8> = Vec::new();
        for l in forms {
            let span: Vec<u8> = (0..1u32 << out.len())
                .map(|m| out.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).fold(0, |a, (_, &f)| a ^ f))
                .collect();
            if !span.contains(&l) {
                out.push(l);
            }
        }
        out
    };
    let Some(cv) = decode_half(v & control, control, &basis_forms) else {
        state.reject("split readout: ambiguous control half");
        return;
    };
    let Some(tv) = decode_half(v & target, target, &basis_forms) else {
        state.reject("split readout: ambiguous target half");
        return;
    };
    state.log(|| TraceEvent::Readout { block, action: format!("split {:04x}", (cv | tv) ^ v) });
    let lb = logical_basis();
    for &(op, slot) in reads {
        assert!(pairing.can_read(op), "{op} is not readable with this pairing");
        let (x, z) = lb.representative(op);
        state.values[slot] = if z == 0 { parity16(cv & x & control) } else { parity16(tv & z & target) };
    }
}

/// Frame and flag bookkeeping for a transversal CNOT `control -> target`
/// between two blocks (position `p` to position `p`).
pub fn propagate_flags(state: &mut DecoderState, control: usize, target: usize) {
    if !state.is_active() {
        return;
    }
    let c = state.blocks[control];
    let t = state.blocks[target];
    if let Some(f) = c.x_suspect {
        if t.x_suspect.is_some() {
            state.reject("X flag collision across blocks");
            return;
        }
        state.blocks[target].x_suspect = Some(f);
        state.log(|| TraceEvent::FlagRaised { block: target, kind: 'X', support: f });
    }
    if let Some(f) = t.z_suspect {
        if c.z_suspect.is_some() {
            state.reject("Z flag collision across blocks");
            return;
        }
        state.blocks[control].z_suspect = Some(f);
        state.log(|| TraceEvent::FlagRaised { block: control, kind: 'Z', support: f });
    }
    state.blocks[target].frame_x ^= c.frame_x;
    state.blocks[control].frame_z ^= t.frame_z;
}

/// Moves frame bits and flag supports along a block permutation.
pub fn transport_permutation(state: &mut DecoderState, block: usize, perm: &Perm) {
    let bs = &mut state.blocks[block];
    bs.frame_x = apply_perm(perm, bs.frame_x);
    bs.frame_z = apply_perm(perm, bs.frame_z);
    let move_support = |s: Support| s.map(|q| perm[q as usize]);
    bs.x_suspect = bs.x_suspect.map(move_support);
    bs.z_suspect = bs.z_suspect.map(move_support);
}
