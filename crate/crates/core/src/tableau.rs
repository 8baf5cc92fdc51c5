//! Stabilizer tableau simulation with destabilizers.

use thiserror::Error;

use crate::circuit::{Basis, Circuit, Op};
use crate::gf2::Gf2Basis;
use crate::pauli::{get_bit, product_phase, set_bit, words_for, PauliOperator};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableauError {
    #[error("measurement record {0} has a random outcome")]
    RandomOutcome(usize),
}

/// Rows `0..n` are destabilizers, rows `n..2n` stabilizers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    words: usize,
    x: Vec<Vec<u64>>,
    z: Vec<Vec<u64>>,
    neg: Vec<bool>,
}

/// Result of a single-qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub value: bool,
    pub deterministic: bool,
}

impl Tableau {
    /// The all-|0⟩ state.
    pub fn new(n: usize) -> Self {
        let words = words_for(n.max(1));
        let mut x = vec![vec![0u64; words]; 2 * n];
        let mut z = vec![vec![0u64; words]; 2 * n];
        for q in 0..n {
            set_bit(&mut x[q], q, true);
            set_bit(&mut z[n + q], q, true);
        }
        Self { n, words, x, z, neg: vec![false; 2 * n] }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn h(&mut self, q: usize) {
        for r in 0..2 * self.n {
            let (a, b) = (get_bit(&self.x[r], q), get_bit(&self.z[r], q));
            self.neg[r] ^= a & b;
            set_bit(&mut self.x[r], q, b);
            set_bit(&mut self.z[r], q, a);
        }
    }

    pub fn s(&mut self, q: usize) {
        for r in 0..2 * self.n {
            let (a, b) = (get_bit(&self.x[r], q), get_bit(&self.z[r], q));
            self.neg[r] ^= a & b;
            set_bit(&mut self.z[r], q, a ^ b);
        }
    }

    pub fn cx(&mut self, c: usize, t: usize) {
        for r in 0..2 * self.n {
            let (xc, zc) = (get_bit(&self.x[r], c), get_bit(&self.z[r], c));
            let (xt, zt) = (get_bit(&self.x[r], t), get_bit(&self.z[r], t));
            self.neg[r] ^= xc & zt & !(xt ^ zc);
            set_bit(&mut self.x[r], t, xt ^ xc);
            set_bit(&mut self.z[r], c, zc ^ zt);
        }
    }

    /// Applies a Pauli gate: flips the sign of every row it anticommutes with.
    pub fn apply_pauli(&mut self, p: &PauliOperator) {
        for r in 0..2 * self.n {
            let anti = crate::pauli::dot(&self.x[r], p.zs()) ^ crate::pauli::dot(&self.z[r], p.xs());
            self.neg[r] ^= anti;
        }
    }

    pub fn x_gate(&mut self, q: usize) {
        for r in 0..2 * self.n {
            self.neg[r] ^= get_bit(&self.z[r], q);
        }
    }

    pub fn z_gate(&mut self, q: usize) {
        for r in 0..2 * self.n {
            self.neg[r] ^= get_bit(&self.x[r], q);
        }
    }

    /// Moves the state of qubit `src` onto `dst` for each pair.
    pub fn permute(&mut self, pairs: &[(usize, usize)]) {
        for r in 0..2 * self.n {
            let bits: Vec<(bool, bool)> =
                pairs.iter().map(|&(s, _)| (get_bit(&self.x[r], s), get_bit(&self.z[r], s))).collect();
            for (&(_, d), (a, b)) in pairs.iter().zip(bits) {
                set_bit(&mut self.x[r], d, a);
                set_bit(&mut self.z[r], d, b);
            }
        }
    }

    /// `row[h] <- row[i] * row[h]`, tracking the sign for stabilizer rows.
    fn rowsum(&mut self, h: usize, i: usize) {
        let phase = product_phase(&self.x[i], &self.z[i], &self.x[h], &self.z[h]);
        self.neg[h] = self.neg[h] ^ self.neg[i] ^ (phase == 2);
        for w in 0..self.words {
            let (xi, zi) = (self.x[i][w], self.z[i][w]);
            self.x[h][w] ^= xi;
            self.z[h][w] ^= zi;
        }
    }

    /// Outcome of measuring Z on `q` if it is deterministic.
    pub fn peek_z(&self, q: usize) -> Option<bool> {
        let n = self.n;
        if (n..2 * n).any(|r| get_bit(&self.x[r], q)) {
            return None;
        }
        let mut sx = vec![0u64; self.words];
        let mut sz = vec![0u64; self.words];
        let mut sneg = false;
        for i in 0..n {
            if get_bit(&self.x[i], q) {
                let r = n + i;
                let phase = product_phase(&self.x[r], &self.z[r], &sx, &sz);
                sneg ^= self.neg[r] ^ (phase == 2);
                for w in 0..self.words {
                    sx[w] ^= self.x[r][w];
                    sz[w] ^= self.z[r][w];
                }
            }
        }
        Some(sneg)
    }

    /// Measures Z on `q`. `random` is called only when the outcome is random.
    pub fn measure_z(&mut self, q: usize, random: impl FnOnce() -> bool) -> Outcome {
        let n = self.n;
        let Some(p) = (n..2 * n).find(|&r| get_bit(&self.x[r], q)) else {
            return Outcome { value: self.peek_z(q).unwrap(), deterministic: true };
        };
        for r in 0..2 * n {
            if r != p && get_bit(&self.x[r], q) {
                self.rowsum(r, p);
            }
        }
        let d = p - n;
        self.x[d] = self.x[p].clone();
        self.z[d] = self.z[p].clone();
        self.neg[d] = self.neg[p];
        self.x[p] = vec![0; self.words];
        self.z[p] = vec![0; self.words];
        set_bit(&mut self.z[p], q, true);
        let value = random();
        self.neg[p] = value;
        Outcome { value, deterministic: false }
    }

    pub fn measure(&mut self, basis: Basis, q: usize, random: impl FnOnce() -> bool) -> Outcome {
        match basis {
            Basis::Z => self.measure_z(q, random),
            Basis::X => {
                self.h(q);
                let o = self.measure_z(q, random);
                self.h(q);
                o
            }
        }
    }

    pub fn reset(&mut self, basis: Basis, q: usize, random: impl FnOnce() -> bool) {
        if self.measure(basis, q, random).value {
            match basis {
                Basis::Z => self.x_gate(q),
                Basis::X => self.z_gate(q),
            }
        }
    }

    pub fn stabilizers(&self) -> Vec<PauliOperator> {
        (self.n..2 * self.n)
            .map(|r| PauliOperator::from_words(self.n, self.x[r].clone(), self.z[r].clone(), self.neg[r]))
            .collect()
    }

    /// `Some(sign)` if `±p` is in the stabilizer group, `None` otherwise.
    pub fn expectation(&self, p: &PauliOperator) -> Option<bool> {
        let n = self.n;
        let mut acc = PauliOperator::identity(n);
        for i in 0..n {
            let r = n + i;
            let anti_stab = crate::pauli::dot(&self.x[r], p.zs()) ^ crate::pauli::dot(&self.z[r], p.xs());
            if anti_stab {
                return None;
            }
            let anti_destab = crate::pauli::dot(&self.x[i], p.zs()) ^ crate::pauli::dot(&self.z[i], p.xs());
            if anti_destab {
                let row = PauliOperator::from_words(n, self.x[r].clone(), self.z[r].clone(), self.neg[r]);
                acc = acc.multiply(&row).expect("stabilizers commute");
            }
        }
        debug_assert!(acc.xs() == p.xs() && acc.zs() == p.zs());
        Some(acc.is_negative() ^ p.is_negative())
    }

    /// Checks the symplectic invariants: stabilizers commute pairwise, each
    /// destabilizer anticommutes only with its partner, full rank.
    pub fn is_consistent(&self) -> bool {
        let n = self.n;
        let anti = |a: usize, b: usize| {
            crate::pauli::dot(&self.x[a], &self.z[b]) ^ crate::pauli::dot(&self.z[a], &self.x[b])
        };
        for i in 0..n {
            for j in 0..n {
                if anti(n + i, n + j) || anti(i, n + j) != (i == j) {
                    return false;
                }
            }
        }
        let mut basis = Gf2Basis::new(2 * n);
        (0..2 * n).all(|r| {
            let p = PauliOperator::from_words(n, self.x[r].clone(), self.z[r].clone(), false);
            basis.insert(&p.symplectic())
        })
    }

    /// Applies one instruction. `outcomes` receives measurement results by
    /// record index; `random` supplies random outcomes by record index
    /// (resets use `None`).
    pub fn apply(&mut self, op: &Op, outcomes: &mut [bool], random: &mut impl FnMut(Option<usize>) -> bool) {
        match op {
            Op::H(q) => self.h(*q),
            Op::S(q) => self.s(*q),
            Op::X(q) => self.x_gate(*q),
            Op::Z(q) => self.z_gate(*q),
            Op::Cx(c, t) => self.cx(*c, *t),
            Op::Reset(b, q) => self.reset(*b, *q, || random(None)),
            Op::Measure(b, q, r) => outcomes[*r] = self.measure(*b, *q, || random(Some(*r))).value,
            Op::Perm(pairs) => self.permute(pairs),
        }
    }
}

/// Runs a circuit from |0…0⟩ with all random measurement outcomes set to 0
/// and returns the final tableau and record.
pub fn run_ideal(circuit: &Circuit) -> (Tableau, Vec<bool>) {
    let mut t = Tableau::new(circuit.num_qubits());
    let mut rec = vec![false; circuit.num_records()];
    let mut zero = |_: Option<usize>| false;
    for ins in circuit.instructions() {
        t.apply(&ins.op, &mut rec, &mut zero);
    }
    (t, rec)
}

/// Independent generators of the output state's stabilizer group. Fails if
/// any measurement outcome is random.
pub fn stabilizer_group_of(circuit: &Circuit) -> Result<Vec<PauliOperator>, TableauError> {
    let mut t = Tableau::new(circuit.num_qubits());
    let mut rec = vec![false; circuit.num_records()];
    let mut random_at = None;
    let mut note = |r: Option<usize>| {
        if let Some(r) = r {
            random_at.get_or_insert(r);
        }
        false
    };
    for ins in circuit.instructions() {
        t.apply(&ins.op, &mut rec, &mut note);
    }
    if let Some(r) = random_at {
        return Err(TableauError::RandomOutcome(r));
    }
    Ok(t.stabilizers())
}

/// True if two generator lists span the same signed group.
pub fn same_group(a: &[PauliOperator], b: &[PauliOperator]) -> bool {
    group_contains_all(a, b) && group_contains_all(b, a)
}

/// True if every operator in `members` lies (with sign) in the group
/// generated by the commuting set `gens`.
pub fn group_contains_all(gens: &[PauliOperator], members: &[PauliOperator]) -> bool {
    let Some(n) = gens.first().map(|p| p.num_qubits()) else {
        return members.iter().all(|m| m.is_identity() && !m.is_negative());
    };
    let mut basis = Gf2Basis::new(2 * n);
    for g in gens {
        basis.insert(&g.symplectic());
    }
    members.iter().all(|m| {
        let Some(parts) = basis.decompose(&m.symplectic()) else {
            return false;
        };
        let mut acc = PauliOperator::identity(n);
        for i in parts {
            match acc.multiply(&gens[i]) {
                Ok(p) => acc = p,
                Err(_) => return false,
            }
        }
        acc.is_negative() == m.is_negative()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn reset_and_measure_zero() {
        let mut t = Tableau::new(1);
        let o = t.measure_z(0, || unreachable!());
        assert_eq!(o, Outcome { value: false, deterministic: true });
        t.x_gate(0);
        assert!(t.measure_z(0, || unreachable!()).value);
    }

    #[test]
    fn bell_pair_group() {
        let mut b = CircuitBuilder::new(2);
        b.h(0).cx(0, 1);
        let g = stabilizer_group_of(&b.build()).unwrap();
        assert!(same_group(&g, &[p("XX"), p("ZZ")]));
        assert!(!same_group(&g, &[p("XX"), p("-ZZ")]));
    }

    #[test]
    fn empty_circuit_is_all_zero() {
        let g = stabilizer_group_of(&CircuitBuilder::new(2).build()).unwrap();
        assert!(same_group(&g, &[p("ZI"), p("IZ")]));
    }

    #[test]
    fn random_measurement_is_detected() {
        let mut b = CircuitBuilder::new(1);
        b.h(0);
        b.measure(Basis::Z, 0);
        assert_eq!(stabilizer_group_of(&b.build()), Err(TableauError::RandomOutcome(0)));
    }

    #[test]
    fn s_squared_is_z() {
        let mut t = Tableau::new(1);
        t.h(0);
        t.s(0);
        assert_eq!(t.expectation(&p("Y")), Some(false));
        t.s(0);
        assert_eq!(t.expectation(&p("X")), Some(true));
    }

    #[derive(Debug, Clone)]
    enum G {
        H(usize),
        S(usize),
        Cx(usize, usize),
        M(usize),
    }

    fn arb_ops(n: usize) -> impl Strategy<Value = Vec<G>> {
        let g = prop_oneof![
            (0..n).prop_map(G::H),
            (0..n).prop_map(G::S),
            (0..n, 0..n).prop_filter_map("distinct", |(a, b)| (a != b).then_some(G::Cx(a, b))),
            (0..n).prop_map(G::M),
        ];
        proptest::collection::vec(g, 0..40)
    }

    proptest! {
        #[test]
        fn tableau_stays_symplectic(ops in arb_ops(5), bits in any::<u64>()) {
            let mut t = Tableau::new(5);
            let mut k = 0;
            for g in ops {
                match g {
                    G::H(q) => t.h(q),
                    G::S(q) => t.s(q),
                    G::Cx(a, b) => t.cx(a, b),
                    G::M(q) => { let v = (bits >> (k % 64)) & 1 == 1; k += 1; t.measure_z(q, || v); }
                }
            }
            prop_assert!(t.is_consistent());
            for s in t.stabilizers() {
                prop_assert_eq!(t.expectation(&s), Some(false));
            }
        }
    }
}
