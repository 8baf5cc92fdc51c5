//! Hermitian Pauli operators on `n` qubits, bit-packed.
//!
//! An operator is stored as `(-1)^sign * i^(x.z) * X^x Z^z`, so `Y = iXZ` carries
//! no sign bit. Only real (±1) phases are representable.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("product of anticommuting operators has an imaginary phase")]
    ImaginaryPhase,
    #[error("invalid pauli character {0:?}")]
    BadChar(char),
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub(crate) fn get_bit(w: &[u64], i: usize) -> bool {
    (w[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(w: &mut [u64], i: usize, v: bool) {
    let m = 1u64 << (i & 63);
    if v {
        w[i >> 6] |= m;
    } else {
        w[i >> 6] &= !m;
    }
}

#[inline]
pub(crate) fn flip_bit(w: &mut [u64], i: usize) {
    w[i >> 6] ^= 1u64 << (i & 63);
}

#[inline]
pub(crate) fn dot(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones()) & 1 == 1
}

/// Exponent (mod 4) of `i` picked up when multiplying `(x1, z1)` by
/// `(x2, z2)`, both written in the hermitian `i^(x.z) X^x Z^z` convention.
pub(crate) fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u32 {
    let mut total: i64 = 0;
    for w in 0..x1.len() {
        let (a1, b1, a2, b2) = (x1[w], z1[w], x2[w], z2[w]);
        let p1x = a1 & !b1;
        let p1y = a1 & b1;
        let p1z = !a1 & b1;
        let plus = (p1x & b2 & a2) | (p1y & b2 & !a2) | (p1z & a2 & !b2);
        let minus = (p1x & b2 & !a2) | (p1y & a2 & !b2) | (p1z & a2 & b2);
        total += plus.count_ones() as i64 - minus.count_ones() as i64;
    }
    total.rem_euclid(4) as u32
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli1::I => (false, false),
            Pauli1::X => (true, false),
            Pauli1::Y => (true, true),
            Pauli1::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Y => 'Y',
            Pauli1::Z => 'Z',
        }
    }

    pub const NON_IDENTITY: [Pauli1; 3] = [Pauli1::X, Pauli1::Y, Pauli1::Z];
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        Self { n, x: vec![0; words_for(n)], z: vec![0; words_for(n)], negative: false }
    }

    /// X on every qubit in `support`.
    pub fn x_on(n: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n);
        for q in support {
            p.set(q, Pauli1::X);
        }
        p
    }

    pub fn z_on(n: usize, support: impl IntoIterator<Item = usize>) -> Self {
        let mut p = Self::identity(n);
        for q in support {
            p.set(q, Pauli1::Z);
        }
        p
    }

    /// Builds an operator on at most 64 qubits from masks.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= 64);
        let mut p = Self::identity(n);
        if n > 0 {
            p.x[0] = x;
            p.z[0] = z;
        }
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn xs(&self) -> &[u64] {
        &self.x
    }

    pub fn zs(&self) -> &[u64] {
        &self.z
    }

    pub fn from_words(n: usize, x: Vec<u64>, z: Vec<u64>, negative: bool) -> Self {
        assert!(x.len() == words_for(n) && z.len() == words_for(n));
        Self { n, x, z, negative }
    }

    /// Concatenated `x | z` words, the symplectic vector of the operator.
    pub fn symplectic(&self) -> Vec<u64> {
        let mut v = vec![0u64; words_for(2 * self.n)];
        for q in 0..self.n {
            if get_bit(&self.x, q) {
                set_bit(&mut v, q, true);
            }
            if get_bit(&self.z, q) {
                set_bit(&mut v, self.n + q, true);
            }
        }
        v
    }

    pub fn x_mask(&self) -> u64 {
        self.x.first().copied().unwrap_or(0)
    }

    pub fn z_mask(&self) -> u64 {
        self.z.first().copied().unwrap_or(0)
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn set_negative(&mut self, neg: bool) {
        self.negative = neg;
    }

    pub fn get(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(get_bit(&self.x, q), get_bit(&self.z, q))
    }

    pub fn set(&mut self, q: usize, p: Pauli1) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (x, z) = p.bits();
        set_bit(&mut self.x, q, x);
        set_bit(&mut self.z, q, z);
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.get(q) != Pauli1::I).collect()
    }

    pub fn commutes(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n);
        dot(&self.x, &other.z) == dot(&self.z, &other.x)
    }

    fn product_phase(&self, other: &Self) -> u32 {
        product_phase(&self.x, &self.z, &other.x, &other.z)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self, PauliError> {
        if self.n != other.n {
            return Err(PauliError::SizeMismatch(self.n, other.n));
        }
        let phase = self.product_phase(other);
        if phase % 2 == 1 {
            return Err(PauliError::ImaginaryPhase);
        }
        let mut out = self.clone();
        for w in 0..out.x.len() {
            out.x[w] ^= other.x[w];
            out.z[w] ^= other.z[w];
        }
        out.negative = self.negative ^ other.negative ^ (phase == 2);
        Ok(out)
    }

    /// Multiplies ignoring phases entirely.
    pub fn mul_unsigned(&mut self, other: &Self) {
        for w in 0..self.x.len() {
            self.x[w] ^= other.x[w];
            self.z[w] ^= other.z[w];
        }
    }

    /// Restriction to the X part, sign dropped.
    pub fn x_part(&self) -> Self {
        Self { n: self.n, x: self.x.clone(), z: vec![0; self.z.len()], negative: false }
    }

    pub fn z_part(&self) -> Self {
        Self { n: self.n, x: vec![0; self.x.len()], z: self.z.clone(), negative: false }
    }

    /// Relabels qubit `q` to `perm[q]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut out = Self::identity(self.n);
        for q in 0..self.n {
            out.set(perm[q], self.get(q));
        }
        out.negative = self.negative;
        out
    }

    /// Embeds this operator into a larger register at the given positions.
    pub fn embed(&self, n: usize, positions: &[usize]) -> Self {
        assert_eq!(positions.len(), self.n);
        let mut out = Self::identity(n);
        for (q, &p) in positions.iter().enumerate() {
            out.set(p, self.get(q));
        }
        out.negative = self.negative;
        out
    }

    pub fn restrict(&self, positions: &[usize]) -> Self {
        let mut out = Self::identity(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            out.set(i, self.get(p));
        }
        out.negative = self.negative;
        out
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    /// Parses strings like `+XIZZ`, `-YY` or `XX` (sign optional).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let n = body.chars().count();
        let mut p = Self::identity(n);
        for (q, c) in body.chars().enumerate() {
            let letter = match c {
                'I' | '_' | '.' => Pauli1::I,
                'X' => Pauli1::X,
                'Y' => Pauli1::Y,
                'Z' => Pauli1::Z,
                other => return Err(PauliError::BadChar(other)),
            };
            p.set(q, letter);
        }
        p.negative = negative;
        Ok(p)
    }
}

impl serde::Serialize for Pauli1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.as_char())
    }
}

impl<'de> serde::Deserialize<'de> for Pauli1 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match char::deserialize(d)? {
            'I' => Ok(Pauli1::I),
            'X' => Ok(Pauli1::X),
            'Y' => Ok(Pauli1::Y),
            'Z' => Ok(Pauli1::Z),
            c => Err(serde::de::Error::custom(format!("bad pauli {c}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn product_of_two_rows_is_their_union() {
        let r0 = PauliOperator::x_on(8, 0..4);
        let r1 = PauliOperator::x_on(8, 4..8);
        assert_eq!(r0.multiply(&r1).unwrap(), PauliOperator::x_on(8, 0..8));
    }

    #[test]
    fn identity_and_involution() {
        let zz = p("ZZ");
        assert_eq!(zz.multiply(&PauliOperator::identity(2)).unwrap(), zz);
        assert!(zz.multiply(&zz).unwrap().is_identity());
    }

    #[test]
    fn xz_times_zx_has_real_sign() {
        // (X⊗Z)(Z⊗X) = (XZ)⊗(ZX) = (-iY)(iY) = YY
        assert_eq!(p("XZ").multiply(&p("ZX")).unwrap(), p("YY"));
        // (X)(Z) is imaginary
        assert_eq!(p("X").multiply(&p("Z")), Err(PauliError::ImaginaryPhase));
        // XX * ZZ = -YY
        assert_eq!(p("XX").multiply(&p("ZZ")).unwrap(), p("-YY"));
    }

    #[test]
    fn size_mismatch_is_reported() {
        assert_eq!(p("X").multiply(&p("XX")), Err(PauliError::SizeMismatch(1, 2)));
    }

    #[test]
    fn display_round_trips() {
        for s in ["+XYZI", "-ZZ", "+IIII"] {
            assert_eq!(p(s).to_string(), s);
        }
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        (proptest::collection::vec(0u8..4, n), any::<bool>()).prop_map(move |(v, neg)| {
            let mut op = PauliOperator::identity(n);
            for (q, c) in v.into_iter().enumerate() {
                op.set(q, [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z][c as usize]);
            }
            op.set_negative(neg);
            op
        })
    }

    proptest! {
        #[test]
        fn commutation_is_symmetric(a in arb_pauli(70), b in arb_pauli(70)) {
            prop_assert_eq!(a.commutes(&b), b.commutes(&a));
        }

        #[test]
        fn weight_zero_iff_identity(a in arb_pauli(9)) {
            prop_assert_eq!(a.weight() == 0, a.support().is_empty());
        }

        #[test]
        fn self_product_is_identity(a in arb_pauli(70)) {
            let sq = a.multiply(&a).unwrap();
            prop_assert!(sq.is_identity());
            prop_assert!(!sq.is_negative());
        }

        #[test]
        fn multiply_is_associative(a in arb_pauli(3), b in arb_pauli(3), c in arb_pauli(3)) {
            let left = a.multiply(&b).and_then(|ab| ab.multiply(&c));
            let right = b.multiply(&c).and_then(|bc| a.multiply(&bc));
            if let (Ok(l), Ok(r)) = (&left, &right) {
                prop_assert_eq!(l, r);
            }
            if a.commutes(&b) && b.commutes(&c) && a.commutes(&c) {
                prop_assert!(left.is_ok() && right.is_ok());
            }
        }

        #[test]
        fn commuting_products_are_real(a in arb_pauli(5), b in arb_pauli(5)) {
            prop_assert_eq!(a.multiply(&b).is_ok(), a.commutes(&b));
        }
    }
}
