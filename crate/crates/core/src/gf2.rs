//! Incremental row-echelon bases over GF(2) on bit-packed vectors.

use crate::pauli::{get_bit, words_for};

/// A GF(2) subspace kept in reduced echelon form. Each stored row also
/// remembers which inserted vectors it is a combination of, so membership
/// queries can return a decomposition.
#[derive(Debug, Clone)]
pub struct Gf2Basis {
    width: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    combos: Vec<Vec<u64>>,
    inserted: usize,
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

fn grow(v: &mut Vec<u64>, bits: usize) {
    let need = words_for(bits.max(1));
    if v.len() < need {
        v.resize(need, 0);
    }
}

impl Gf2Basis {
    pub fn new(width: usize) -> Self {
        Self { width, rows: Vec::new(), pivots: Vec::new(), combos: Vec::new(), inserted: 0 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis. Returns the remainder and the set of
    /// inserted-vector indices whose sum equals `v - remainder`.
    pub fn reduce(&self, v: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let mut rem = v.to_vec();
        rem.resize(words_for(self.width.max(1)), 0);
        let mut combo = vec![0u64; words_for(self.inserted.max(1))];
        for (i, &p) in self.pivots.iter().enumerate() {
            if get_bit(&rem, p) {
                xor_into(&mut rem, &self.rows[i]);
                let c = &self.combos[i];
                if combo.len() < c.len() {
                    combo.resize(c.len(), 0);
                }
                xor_into(&mut combo, c);
            }
        }
        (rem, combo)
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).0.iter().all(|&w| w == 0)
    }

    /// Inserts `v`; returns `true` if it was independent of the basis.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let (mut rem, mut combo) = self.reduce(v);
        let idx = self.inserted;
        self.inserted += 1;
        grow(&mut combo, self.inserted);
        combo[idx >> 6] ^= 1u64 << (idx & 63);
        let Some(pivot) = (0..self.width).find(|&b| get_bit(&rem, b)) else {
            return false;
        };
        // keep the basis fully reduced so `reduce` can scan pivots in any order
        for i in 0..self.rows.len() {
            if get_bit(&self.rows[i], pivot) {
                xor_into(&mut self.rows[i], &rem);
                let c = &mut self.combos[i];
                grow(c, self.inserted);
                xor_into(c, &combo);
            }
        }
        rem.truncate(words_for(self.width.max(1)));
        self.rows.push(rem);
        self.pivots.push(pivot);
        self.combos.push(combo);
        true
    }

    /// Expresses `v` as a sum of inserted vectors, if it lies in the span.
    pub fn decompose(&self, v: &[u64]) -> Option<Vec<usize>> {
        let (rem, combo) = self.reduce(v);
        if rem.iter().any(|&w| w != 0) {
            return None;
        }
        Some((0..self.inserted).filter(|&i| get_bit(&combo, i)).collect())
    }
}

/// Rank of a list of vectors of the given bit width.
pub fn rank(width: usize, vectors: &[Vec<u64>]) -> usize {
    let mut b = Gf2Basis::new(width);
    for v in vectors {
        b.insert(v);
    }
    b.rank()
}

/// Rank of small vectors given as `u64` masks.
pub fn rank_u64(width: usize, vectors: impl IntoIterator<Item = u64>) -> usize {
    let mut b = Gf2Basis::new(width);
    for v in vectors {
        b.insert(&[v]);
    }
    b.rank()
}
