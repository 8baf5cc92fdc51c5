//! Circuit-level stochastic Pauli noise.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{Basis, Circuit, Op};
use crate::pauli::Pauli1;
use crate::propagate::{pauli_alphabet, FaultEvent, When};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NoiseError {
    #[error("noise parameter {name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("invalid noise configuration: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p2: f64,
    pub p1: f64,
    pub p_spam: f64,
    pub p_mem: f64,
    /// Fraction of `p_spam` assigned to resets; the rest flips measurements.
    #[serde(default = "half")]
    pub spam_reset_fraction: f64,
    /// Depolarize permuted qubits with `p1`.
    #[serde(default)]
    pub noisy_permutations: bool,
}

fn half() -> f64 {
    0.5
}

/// The H2 parameter set as JSON, shipped as the default configuration.
pub const H2_DEFAULTS_JSON: &str = include_str!("../noise/h2.json");

impl NoiseParams {
    pub fn h2() -> Self {
        serde_json::from_str(H2_DEFAULTS_JSON).expect("bundled defaults parse")
    }

    pub fn noiseless() -> Self {
        Self { p2: 0.0, p1: 0.0, p_spam: 0.0, p_mem: 0.0, spam_reset_fraction: 0.5, noisy_permutations: false }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p2: self.p2 * factor,
            p1: self.p1 * factor,
            p_spam: self.p_spam * factor,
            p_mem: self.p_mem * factor,
            ..*self
        }
    }

    pub fn from_json(s: &str) -> Result<Self, NoiseError> {
        let p: Self = serde_json::from_str(s).map_err(|e| NoiseError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, value) in [
            ("p2", self.p2),
            ("p1", self.p1),
            ("p_spam", self.p_spam),
            ("p_mem", self.p_mem),
            ("spam_reset_fraction", self.spam_reset_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::OutOfRange { name, value });
            }
        }
        Ok(())
    }

    /// Short stable digest of the parameters, for reports.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

/// A place where a fault can occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteKind {
    /// Uniform non-identity Pauli on the listed qubits.
    Depolarize(Vec<usize>),
    /// Preparation in the wrong eigenstate.
    ResetFlip { qubit: usize, basis: Basis },
    MeasurementFlip,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseSite {
    /// The fault acts right after this instruction.
    pub instruction: usize,
    pub kind: SiteKind,
}

impl NoiseSite {
    pub fn alternatives(&self) -> usize {
        match &self.kind {
            SiteKind::Depolarize(qs) => 4usize.pow(qs.len() as u32) - 1,
            _ => 1,
        }
    }

    pub fn event(&self, alt: usize) -> FaultEvent {
        match &self.kind {
            SiteKind::Depolarize(qs) => FaultEvent::pauli(self.instruction, When::After, pauli_alphabet(qs).swap_remove(alt)),
            SiteKind::ResetFlip { qubit, basis } => {
                let p = match basis {
                    Basis::Z => Pauli1::X,
                    Basis::X => Pauli1::Z,
                };
                FaultEvent::pauli(self.instruction, When::After, vec![(*qubit, p)])
            }
            SiteKind::MeasurementFlip => FaultEvent::measurement_flip(self.instruction),
        }
    }
}

/// Sites grouped by probability, for geometric skipping.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub params: NoiseParams,
    classes: Vec<(f64, Vec<NoiseSite>)>,
}

impl NoiseModel {
    pub fn sites(&self) -> impl Iterator<Item = (f64, &NoiseSite)> {
        self.classes.iter().flat_map(|(p, s)| s.iter().map(move |x| (*p, x)))
    }

    /// Expected number of faults per shot.
    pub fn expected_faults(&self) -> f64 {
        self.classes.iter().map(|(p, s)| p * s.len() as f64).sum()
    }

    /// Independent draws per site; reproducible per `(seed, shot)`.
    pub fn sample_faults(&self, seed: u64, shot: u64) -> Vec<FaultEvent> {
        let mut rng = shot_rng(seed, shot);
        self.sample_with(&mut rng)
    }

    pub fn sample_with(&self, rng: &mut impl Rng) -> Vec<FaultEvent> {
        let mut out = Vec::new();
        for (p, sites) in &self.classes {
            let p = *p;
            if p <= 0.0 || sites.is_empty() {
                continue;
            }
            if p >= 1.0 {
                for s in sites {
                    out.push(s.event(rng.random_range(0..s.alternatives())));
                }
                continue;
            }
            let log_q = (1.0 - p).ln();
            let mut i: usize = 0;
            loop {
                let u: f64 = rng.random::<f64>();
                let skip = ((1.0 - u).ln() / log_q).floor();
                if !skip.is_finite() || skip >= (sites.len() - i) as f64 {
                    break;
                }
                i += skip as usize;
                let s = &sites[i];
                out.push(s.event(rng.random_range(0..s.alternatives())));
                i += 1;
                if i >= sites.len() {
                    break;
                }
            }
        }
        out.sort_by_key(|f| f.instruction);
        out
    }
}

pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Places fault sites on a circuit. Only instructions (and idle layers)
/// within `window` receive noise; `None` means the whole circuit.
pub fn instrument(circuit: &Circuit, params: &NoiseParams, window: Option<Range<usize>>) -> Result<NoiseModel, NoiseError> {
    params.validate()?;
    let window = window.unwrap_or(0..usize::MAX);
    let mut two = Vec::new();
    let mut one = Vec::new();
    let mut spam_reset = Vec::new();
    let mut spam_meas = Vec::new();
    let mut memory = Vec::new();

    let n = circuit.num_qubits();
    let ins = circuit.instructions();
    // last instruction touching each qubit, and whether the qubit holds state
    let mut last: Vec<Option<usize>> = vec![None; n];
    let mut live = vec![false; n];
    let mut i = 0;
    while i < ins.len() {
        let layer = ins[i].layer;
        let mut busy = vec![false; n];
        let mut j = i;
        while j < ins.len() && ins[j].layer == layer {
            for q in ins[j].op.qubits() {
                busy[q] = true;
            }
            j += 1;
        }
        let in_window = window.contains(&layer);
        if in_window {
            for q in 0..n {
                if live[q] && !busy[q] {
                    if let Some(prev) = last[q] {
                        memory.push(NoiseSite { instruction: prev, kind: SiteKind::Depolarize(vec![q]) });
                    }
                }
            }
        }
        for (k, instr) in ins.iter().enumerate().take(j).skip(i) {
            match &instr.op {
                Op::Cx(c, t) => {
                    if in_window {
                        two.push(NoiseSite { instruction: k, kind: SiteKind::Depolarize(vec![*c, *t]) });
                    }
                }
                Op::H(q) | Op::S(q) | Op::X(q) | Op::Z(q) => {
                    if in_window {
                        one.push(NoiseSite { instruction: k, kind: SiteKind::Depolarize(vec![*q]) });
                    }
                }
                Op::Reset(b, q) => {
                    if in_window {
                        spam_reset.push(NoiseSite { instruction: k, kind: SiteKind::ResetFlip { qubit: *q, basis: *b } });
                    }
                    live[*q] = true;
                }
                Op::Measure(..) => {
                    if in_window {
                        spam_meas.push(NoiseSite { instruction: k, kind: SiteKind::MeasurementFlip });
                    }
                }
                Op::Perm(pairs) => {
                    if in_window && params.noisy_permutations {
                        for &(_, d) in pairs {
                            one.push(NoiseSite { instruction: k, kind: SiteKind::Depolarize(vec![d]) });
                        }
                    }
                    let old_live = live.clone();
                    let old_last = last.clone();
                    for &(s, d) in pairs {
                        live[d] = old_live[s];
                        last[d] = old_last[s];
                    }
                }
            }
            for q in instr.op.qubits() {
                last[q] = Some(k);
            }
            if let Op::Measure(_, q, _) = instr.op {
                live[q] = false;
            }
        }
        i = j;
    }
    let p_reset = params.p_spam * params.spam_reset_fraction;
    let p_meas = params.p_spam * (1.0 - params.spam_reset_fraction);
    let classes = vec![
        (params.p2, two),
        (params.p1, one),
        (p_reset, spam_reset),
        (p_meas, spam_meas),
        (params.p_mem, memory),
    ];
    Ok(NoiseModel { params: *params, classes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::propagate::FaultKind;

    fn one_cnot() -> Circuit {
        let mut b = CircuitBuilder::new(2);
        b.cx(0, 1);
        b.build()
    }

    #[test]
    fn defaults_match_h2() {
        let p = NoiseParams::h2();
        assert_eq!(p.p2, 1.15e-3);
        assert_eq!(p.p1, 2.9e-5);
        assert_eq!(p.p_spam, 1.47e-3);
        assert_eq!(p.p_mem, 2.5e-4);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn out_of_range_is_rejected() {
        let mut p = NoiseParams::h2();
        p.p2 = 1.5;
        assert!(matches!(p.validate(), Err(NoiseError::OutOfRange { name: "p2", .. })));
        assert!(NoiseParams::from_json(r#"{"p2":-0.1,"p1":0,"p_spam":0,"p_mem":0}"#).is_err());
    }

    #[test]
    fn single_cnot_sites() {
        let m = instrument(&one_cnot(), &NoiseParams::h2(), None).unwrap();
        let sites: Vec<_> = m.sites().filter(|(p, _)| *p > 0.0).collect();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].0, 1.15e-3);
        assert_eq!(sites[0].1.alternatives(), 15);
    }

    #[test]
    fn certain_fault_fires_every_shot() {
        let mut p = NoiseParams::noiseless();
        p.p2 = 1.0;
        let m = instrument(&one_cnot(), &p, None).unwrap();
        for shot in 0..100 {
            let f = m.sample_faults(3, shot);
            assert_eq!(f.len(), 1);
            assert!(matches!(f[0].kind, FaultKind::Pauli(_)));
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut b = CircuitBuilder::new(4);
        for _ in 0..50 {
            b.cx(0, 1).cx(2, 3).cx(1, 2);
        }
        let m = instrument(&b.build(), &NoiseParams::h2().scaled(20.0), None).unwrap();
        for shot in 0..20 {
            assert_eq!(m.sample_faults(9, shot), m.sample_faults(9, shot));
        }
    }

    #[test]
    fn mean_fault_count_matches_expectation() {
        let mut b = CircuitBuilder::new(4);
        for q in 0..4 {
            b.reset(Basis::Z, q);
        }
        for _ in 0..40 {
            b.cx(0, 1).cx(2, 3).h(0);
        }
        for q in 0..4 {
            b.measure(Basis::Z, q);
        }
        let m = instrument(&b.build(), &NoiseParams::h2().scaled(10.0), None).unwrap();
        let shots = 100_000u64;
        let total: usize = (0..shots).map(|s| m.sample_faults(1, s).len()).sum();
        let mean = m.expected_faults();
        let var: f64 = m.sites().map(|(p, _)| p * (1.0 - p)).sum();
        let z = (total as f64 - mean * shots as f64) / (var * shots as f64).sqrt();
        assert!(z.abs() < 5.0, "z = {z}");
    }

    #[test]
    fn idle_qubits_get_memory_sites() {
        let mut b = CircuitBuilder::new(3);
        b.reset(Basis::Z, 0).reset(Basis::Z, 1).reset(Basis::Z, 2);
        b.cx(0, 1).cx(0, 1).cx(0, 1);
        let mut p = NoiseParams::noiseless();
        p.p_mem = 0.1;
        let m = instrument(&b.build(), &p, None).unwrap();
        let mem: Vec<_> = m.sites().filter(|(p, _)| *p == 0.1).collect();
        // qubit 2 idles in the three CNOT layers
        assert_eq!(mem.len(), 3);
        assert!(mem.iter().all(|(_, s)| s.kind == SiteKind::Depolarize(vec![2]) && s.instruction == 2));
    }

    #[test]
    fn window_restricts_sites() {
        let mut b = CircuitBuilder::new(2);
        b.cx(0, 1);
        let t = b.barrier_all();
        b.cx(0, 1);
        let m = instrument(&b.build(), &NoiseParams::h2(), Some(t..usize::MAX)).unwrap();
        let cx: Vec<_> = m.sites().filter(|(p, _)| *p == 1.15e-3).collect();
        assert_eq!(cx.len(), 1);
        assert_eq!(cx[0].1.instruction, 1);
    }
}
