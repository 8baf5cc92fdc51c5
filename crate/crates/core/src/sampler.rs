//! Monte Carlo sampling of measurement records by Pauli-frame simulation.
//!
//! One noiseless reference run fixes a record; each shot is that record
//! XOR the flips caused by its sampled faults. Resets and measurements
//! apply a random Pauli that leaves their eigenstate alone, so outcomes
//! that are random in the ideal circuit come out uniformly random per shot.
//! Shots are processed 64 at a time, one bit per shot.

use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{Basis, Circuit, Op};
use crate::noise::{shot_rng, NoiseModel};
use crate::pauli::words_for;
use crate::propagate::{FaultEvent, FaultKind, When};
use crate::tableau::run_ideal;

pub struct FrameSampler<'a> {
    circuit: &'a Circuit,
    model: &'a NoiseModel,
    reference: Vec<u64>,
    /// Instructions that get a random gauge Pauli (resets and measurements).
    random_points: Vec<usize>,
    randomize: bool,
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; words_for(bits.len().max(1))];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i >> 6] |= 1 << (i & 63);
        }
    }
    out
}

impl<'a> FrameSampler<'a> {
    pub fn new(circuit: &'a Circuit, model: &'a NoiseModel) -> Self {
        let (_, reference) = run_ideal(circuit);
        let random_points = circuit
            .instructions()
            .iter()
            .enumerate()
            .filter(|(_, i)| matches!(i.op, Op::Reset(..) | Op::Measure(..)))
            .map(|(k, _)| k)
            .collect();
        Self { circuit, model, reference: pack(&reference), random_points, randomize: true }
    }

    /// Without randomization every random outcome equals the reference.
    pub fn without_randomization(mut self) -> Self {
        self.randomize = false;
        self
    }

    pub fn reference(&self) -> &[u64] {
        &self.reference
    }

    pub fn record_words(&self) -> usize {
        self.reference.len()
    }

    /// Records for shots `first .. first + count` (`count <= 64`).
    pub fn sample_batch(&self, seed: u64, first: u64, count: usize) -> Vec<Vec<u64>> {
        assert!(count <= 64);
        let n = self.circuit.num_qubits();
        let nrec = self.circuit.num_records();
        let mut rand_masks = vec![0u64; self.random_points.len()];
        let mut faults: Vec<(usize, u64, FaultEvent)> = Vec::new();
        for s in 0..count {
            let mut rng = shot_rng(seed, first + s as u64);
            for f in self.model.sample_with(&mut rng) {
                faults.push((f.instruction, 1 << s, f));
            }
            if self.randomize {
                let mut word = 0u64;
                for (k, m) in rand_masks.iter_mut().enumerate() {
                    if k % 64 == 0 {
                        word = rng.random();
                    }
                    *m |= ((word >> (k % 64)) & 1) << s;
                }
            }
        }
        faults.sort_by_key(|f| f.0);

        let mut x = vec![0u64; n];
        let mut z = vec![0u64; n];
        let mut rec = vec![0u64; nrec];
        let mut next_fault = 0;
        let mut next_rand = 0;
        for (i, ins) in self.circuit.instructions().iter().enumerate() {
            match ins.op {
                Op::H(q) => std::mem::swap(&mut x[q], &mut z[q]),
                Op::S(q) => z[q] ^= x[q],
                Op::X(_) | Op::Z(_) => {}
                Op::Cx(c, t) => {
                    x[t] ^= x[c];
                    z[c] ^= z[t];
                }
                Op::Reset(_, q) => {
                    x[q] = 0;
                    z[q] = 0;
                }
                Op::Measure(b, q, r) => {
                    rec[r] = match b {
                        Basis::Z => x[q],
                        Basis::X => z[q],
                    };
                }
                Op::Perm(ref pairs) => {
                    let moved: Vec<(u64, u64)> = pairs.iter().map(|&(s, _)| (x[s], z[s])).collect();
                    for (&(_, d), (a, b)) in pairs.iter().zip(moved) {
                        x[d] = a;
                        z[d] = b;
                    }
                }
            }
            if next_rand < self.random_points.len() && self.random_points[next_rand] == i {
                let m = rand_masks[next_rand];
                match ins.op {
                    Op::Reset(Basis::Z, q) | Op::Measure(Basis::Z, q, _) => z[q] ^= m,
                    Op::Reset(Basis::X, q) | Op::Measure(Basis::X, q, _) => x[q] ^= m,
                    _ => unreachable!(),
                }
                next_rand += 1;
            }
            while next_fault < faults.len() && faults[next_fault].0 == i {
                let (_, bit, ref f) = faults[next_fault];
                debug_assert_eq!(f.when, When::After);
                match &f.kind {
                    FaultKind::Pauli(ps) => {
                        for &(q, p) in ps {
                            let (a, b) = p.bits();
                            if a {
                                x[q] ^= bit;
                            }
                            if b {
                                z[q] ^= bit;
                            }
                        }
                    }
                    FaultKind::MeasurementFlip => {
                        if let Op::Measure(_, _, r) = ins.op {
                            rec[r] ^= bit;
                        }
                    }
                }
                next_fault += 1;
            }
        }

        (0..count)
            .map(|s| {
                let mut out = self.reference.clone();
                for (r, plane) in rec.iter().enumerate() {
                    out[r >> 6] ^= ((plane >> s) & 1) << (r & 63);
                }
                out
            })
            .collect()
    }

    pub fn sample_shot(&self, seed: u64, shot: u64) -> Vec<u64> {
        self.sample_batch(seed, shot, 1).pop().expect("one shot")
    }

    /// Applies `f(shot, record)` to every shot in parallel, in shot order.
    pub fn map_shots<T: Send>(&self, seed: u64, shots: u64, f: impl Fn(u64, &[u64]) -> T + Sync) -> Vec<T> {
        let batches = shots.div_ceil(64);
        (0..batches)
            .into_par_iter()
            .flat_map_iter(|b| {
                let first = b * 64;
                let count = (shots - first).min(64) as usize;
                let recs = self.sample_batch(seed, first, count);
                recs.into_iter().enumerate().map(|(s, r)| f(first + s as u64, &r)).collect::<Vec<_>>()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::decoder::record_bit;
    use crate::noise::{instrument, NoiseParams};

    fn prepare_measure() -> Circuit {
        let mut b = CircuitBuilder::new(1);
        b.reset(Basis::Z, 0);
        b.measure(Basis::Z, 0);
        b.build()
    }

    #[test]
    fn spam_flip_rate() {
        let c = prepare_measure();
        let p = NoiseParams::h2();
        let m = instrument(&c, &p, None).unwrap();
        let s = FrameSampler::new(&c, &m);
        let shots = 1_000_000u64;
        let ones: u64 = s.map_shots(5, shots, |_, r| record_bit(r, 0) as u64).into_iter().sum();
        let half = p.p_spam / 2.0;
        let expect = 2.0 * half * (1.0 - half);
        let sigma = (shots as f64 * expect * (1.0 - expect)).sqrt();
        assert!((ones as f64 - shots as f64 * expect).abs() < 5.0 * sigma, "{ones}");
    }

    #[test]
    fn noiseless_unrandomized_matches_ideal() {
        let mut b = CircuitBuilder::new(3);
        b.reset(Basis::X, 0).reset(Basis::Z, 1).cx(0, 1);
        b.measure(Basis::Z, 0);
        b.measure(Basis::Z, 1);
        b.measure(Basis::X, 2);
        let c = b.build();
        let m = instrument(&c, &NoiseParams::noiseless(), None).unwrap();
        let s = FrameSampler::new(&c, &m).without_randomization();
        for shot in 0..10 {
            assert_eq!(s.sample_shot(1, shot), s.reference());
        }
    }

    #[test]
    fn random_outcomes_are_random_but_correlated() {
        let mut b = CircuitBuilder::new(2);
        b.reset(Basis::X, 0).reset(Basis::Z, 1).cx(0, 1);
        b.measure(Basis::Z, 0);
        b.measure(Basis::Z, 1);
        let c = b.build();
        let m = instrument(&c, &NoiseParams::noiseless(), None).unwrap();
        let s = FrameSampler::new(&c, &m);
        let recs = s.map_shots(2, 4000, |_, r| (record_bit(r, 0), record_bit(r, 1)));
        assert!(recs.iter().all(|(a, b)| a == b));
        let ones = recs.iter().filter(|(a, _)| *a).count() as f64;
        assert!((ones - 2000.0).abs() < 5.0 * 1000f64.sqrt());
    }

    #[test]
    fn batches_are_independent_of_grouping() {
        let mut b = CircuitBuilder::new(2);
        b.reset(Basis::X, 0).reset(Basis::Z, 1);
        for _ in 0..20 {
            b.cx(0, 1);
        }
        b.measure(Basis::Z, 0);
        b.measure(Basis::Z, 1);
        let c = b.build();
        let m = instrument(&c, &NoiseParams::h2().scaled(30.0), None).unwrap();
        let s = FrameSampler::new(&c, &m);
        let batch = s.sample_batch(7, 10, 20);
        for (k, r) in batch.iter().enumerate() {
            assert_eq!(*r, s.sample_shot(7, 10 + k as u64));
        }
    }
}
