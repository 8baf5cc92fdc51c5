//! The [[16,6,4]] tesseract code on a 4x4 grid and its [[16,4,4]] subsystem view.
//!
//! Qubit `q = 4*row + col`. Writing `row = 2a + b` and `col = 2c + d` gives
//! coordinates `(a, b, c, d)` with `q = 8a + 4b + 2c + d`. Both stabilizer
//! types are the affine functions of these coordinates (first-order
//! Reed-Muller), and logical operators are quadratic forms modulo affine ones.
//! A rank-two form `l1 * l2` has the four qubit-disjoint representatives
//! `{l1 = α, l2 = β}`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::Basis;
use crate::gf2::Gf2Basis;
use crate::pauli::PauliOperator;

pub const BLOCK_QUBITS: usize = 16;

/// Subset of the 16 block qubits.
pub type Mask = u16;

/// A block qubit permutation: the state on `q` moves to `perm[q]`.
pub type Perm = [u8; 16];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("permutation does not preserve the stabilizer group")]
    NotAnAutomorphism,
    #[error("no automorphism realises the requested logical action")]
    NotRealizable,
    #[error("operator {0} has no four disjoint weight-4 representatives")]
    CatalogMiss(LogicalOp),
    #[error("no symplectic logical basis satisfies the constraints")]
    NoBasis,
}

pub fn qubit(row: usize, col: usize) -> usize {
    4 * row + col
}

pub fn row_mask(r: usize) -> Mask {
    0xF << (4 * r)
}

pub fn col_mask(c: usize) -> Mask {
    0x1111 << c
}

pub fn mask_qubits(m: Mask) -> Vec<usize> {
    (0..16).filter(|&q| (m >> q) & 1 == 1).collect()
}

pub fn mask_from(qs: &[usize]) -> Mask {
    qs.iter().fold(0, |m, &q| m | (1 << q))
}

#[inline]
pub fn parity(m: u32) -> bool {
    m.count_ones() & 1 == 1
}

/// Linear form over `(a, b, c, d)`, bit 3 = a ... bit 0 = d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Linear(pub u8);

impl Linear {
    pub const A: Linear = Linear(0b1000);
    pub const B: Linear = Linear(0b0100);
    pub const C: Linear = Linear(0b0010);
    pub const D: Linear = Linear(0b0001);

    pub fn eval(self, q: usize) -> bool {
        parity((self.0 as u32) & (q as u32))
    }

    pub fn plus(self, o: Linear) -> Linear {
        Linear(self.0 ^ o.0)
    }

    /// Qubits where the form takes value `v`.
    pub fn level(self, v: bool) -> Mask {
        (0..16).filter(|&q| self.eval(q) == v).fold(0, |m, q| m | (1 << q))
    }
}

/// The product of two independent linear forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuadForm(pub Linear, pub Linear);

impl QuadForm {
    /// The four flats `{l1 = α, l2 = β}`, ordered `(α, β) = 00, 01, 10, 11`.
    pub fn reps(self) -> [Mask; 4] {
        let f = |a: bool, b: bool| self.0.level(a) & self.1.level(b);
        [f(false, false), f(false, true), f(true, false), f(true, true)]
    }

    pub fn canonical(self) -> Mask {
        self.reps()[0]
    }
}

/// All affine functions of the coordinates, as masks.
pub fn affine_masks() -> Vec<Mask> {
    let mut out = Vec::with_capacity(32);
    for l in 0..16u8 {
        let m = Linear(l).level(true);
        out.push(m);
        out.push(!m);
    }
    out.sort_unstable();
    out
}

pub fn is_stabilizer_mask(m: Mask) -> bool {
    affine_masks().binary_search(&m).is_ok()
}

/// Weight-8 X (or Z) generators: row pairs {0,1}, {0,2}, {0,3} and column
/// pairs {0,1}, {0,2}.
pub fn generator_masks() -> [Mask; 5] {
    [
        row_mask(0) | row_mask(1),
        row_mask(0) | row_mask(2),
        row_mask(0) | row_mask(3),
        col_mask(0) | col_mask(1),
        col_mask(0) | col_mask(2),
    ]
}

pub fn stabilizer_generators() -> (Vec<PauliOperator>, Vec<PauliOperator>) {
    let xs = generator_masks().iter().map(|&m| PauliOperator::from_masks(16, m as u64, 0)).collect();
    let zs = generator_masks().iter().map(|&m| PauliOperator::from_masks(16, 0, m as u64)).collect();
    (xs, zs)
}

/// A logical Pauli on the six encoded qubits; bit `i-1` is logical `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize)]
pub struct LogicalOp {
    pub x: u8,
    pub z: u8,
}

impl LogicalOp {
    pub fn x(i: usize) -> Self {
        Self { x: 1 << (i - 1), z: 0 }
    }

    pub fn z(i: usize) -> Self {
        Self { x: 0, z: 1 << (i - 1) }
    }

    pub fn times(self, o: LogicalOp) -> Self {
        Self { x: self.x ^ o.x, z: self.z ^ o.z }
    }

    pub fn is_identity(self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn commutes(self, o: LogicalOp) -> bool {
        !parity(((self.x & o.z) ^ (self.z & o.x)) as u32)
    }

    /// Parses products like `X1`, `Z4Z6`, `X2X6`, `X1Z2`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut out = LogicalOp::default();
        let b = s.as_bytes();
        if b.is_empty() || !b.len().is_multiple_of(2) {
            return None;
        }
        for pair in b.chunks(2) {
            let i = (pair[1] as char).to_digit(10)? as usize;
            if !(1..=6).contains(&i) {
                return None;
            }
            match pair[0] {
                b'X' => out.x ^= 1 << (i - 1),
                b'Z' => out.z ^= 1 << (i - 1),
                b'Y' => {
                    out.x ^= 1 << (i - 1);
                    out.z ^= 1 << (i - 1);
                }
                _ => return None,
            }
        }
        Some(out)
    }
}

impl fmt::Display for LogicalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        for i in 1..=6 {
            if self.x >> (i - 1) & 1 == 1 {
                write!(f, "X{i}")?;
            }
        }
        for i in 1..=6 {
            if self.z >> (i - 1) & 1 == 1 {
                write!(f, "Z{i}")?;
            }
        }
        Ok(())
    }
}

/// Forms `(X support, Z support)` for logicals 1..=6.
const BASIS_FORMS: [(QuadForm, QuadForm); 6] = {
    const A: Linear = Linear::A;
    const B: Linear = Linear::B;
    const C: Linear = Linear::C;
    const D: Linear = Linear::D;
    const AB: Linear = Linear(0b1100);
    const CD: Linear = Linear(0b0011);
    [
        (QuadForm(A, B), QuadForm(C, D)),
        (QuadForm(C, D), QuadForm(A, B)),
        (QuadForm(A, C), QuadForm(AB, CD)),
        (QuadForm(AB, CD), QuadForm(A, C)),
        (QuadForm(A, CD), QuadForm(AB, C)),
        (QuadForm(AB, C), QuadForm(A, CD)),
    ]
};

/// Canonical logical representatives and their disjoint families.
#[derive(Debug, Clone, Serialize)]
pub struct LogicalBasis {
    pub x_forms: [QuadForm; 6],
    pub z_forms: [QuadForm; 6],
    pub x_reps: [[Mask; 4]; 6],
    pub z_reps: [[Mask; 4]; 6],
}

impl LogicalBasis {
    pub fn x_canonical(&self, i: usize) -> Mask {
        self.x_reps[i - 1][0]
    }

    pub fn z_canonical(&self, i: usize) -> Mask {
        self.z_reps[i - 1][0]
    }

    /// Logical content of an X-type mask (assumed in the normalizer).
    pub fn x_content(&self, m: Mask) -> u8 {
        (1..=6).fold(0, |acc, j| acc | ((parity((m & self.z_canonical(j)) as u32) as u8) << (j - 1)))
    }

    pub fn z_content(&self, m: Mask) -> u8 {
        (1..=6).fold(0, |acc, j| acc | ((parity((m & self.x_canonical(j)) as u32) as u8) << (j - 1)))
    }

    pub fn content(&self, x: Mask, z: Mask) -> LogicalOp {
        LogicalOp { x: self.x_content(x), z: self.z_content(z) }
    }

    /// Canonical physical representative `(x mask, z mask)` of a logical Pauli.
    pub fn representative(&self, op: LogicalOp) -> (Mask, Mask) {
        let mut x = 0;
        let mut z = 0;
        for i in 1..=6 {
            if op.x >> (i - 1) & 1 == 1 {
                x ^= self.x_canonical(i);
            }
            if op.z >> (i - 1) & 1 == 1 {
                z ^= self.z_canonical(i);
            }
        }
        (x, z)
    }

    pub fn logical_operator(&self, op: LogicalOp) -> PauliOperator {
        let (x, z) = self.representative(op);
        PauliOperator::from_masks(16, x as u64, z as u64)
    }
}

/// True when every X mask in `x_ops` commutes with every Z mask in `z_ops`.
fn css_commute(x: Mask, z: Mask) -> bool {
    !parity((x & z) as u32)
}

/// Builds the frozen logical basis and checks it symplectically: `X_i`
/// anticommutes with `Z_i` only, every representative commutes with the
/// stabilizers and is not itself a stabilizer.
pub fn derive_logical_basis() -> Result<LogicalBasis, CodeError> {
    let x_forms = BASIS_FORMS.map(|p| p.0);
    let z_forms = BASIS_FORMS.map(|p| p.1);
    let basis = LogicalBasis {
        x_forms,
        z_forms,
        x_reps: x_forms.map(QuadForm::reps),
        z_reps: z_forms.map(QuadForm::reps),
    };
    let stabs = affine_masks();
    for i in 0..6 {
        for reps in [&basis.x_reps[i], &basis.z_reps[i]] {
            for (k, &r) in reps.iter().enumerate() {
                if r.count_ones() != 4 || !stabs.iter().all(|&s| css_commute(r, s)) {
                    return Err(CodeError::NoBasis);
                }
                if !is_stabilizer_mask(r ^ reps[0]) || (k > 0 && reps[..k].iter().any(|&o| o & r != 0)) {
                    return Err(CodeError::NoBasis);
                }
            }
        }
        for j in 0..6 {
            let anti = !css_commute(basis.x_reps[i][0], basis.z_reps[j][0]);
            if anti != (i == j) {
                return Err(CodeError::NoBasis);
            }
        }
    }
    Ok(basis)
}

/// Cached basis.
pub fn logical_basis() -> &'static LogicalBasis {
    use std::sync::OnceLock;
    static B: OnceLock<LogicalBasis> = OnceLock::new();
    B.get_or_init(|| derive_logical_basis().expect("frozen basis is symplectic"))
}

/// One entry of the logical measurement catalog.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub operator: LogicalOp,
    pub form: QuadForm,
    /// `X`, `Z`, or `Y` (same form on both parts).
    pub kind: char,
    pub reps: [Mask; 4],
}

/// Every logical operator with four disjoint weight-4 representatives: one
/// per two-dimensional space of linear forms, in X, Z and Y flavours.
pub fn catalog() -> Vec<CatalogEntry> {
    let b = logical_basis();
    let mut spaces = HashSet::new();
    let mut out = Vec::new();
    for l1 in 1..16u8 {
        for l2 in (l1 + 1)..16u8 {
            let space = {
                let mut s = [l1, l2, l1 ^ l2];
                s.sort_unstable();
                s
            };
            if !spaces.insert(space) {
                continue;
            }
            let form = QuadForm(Linear(l1), Linear(l2));
            let reps = form.reps();
            let m = reps[0];
            for kind in ['X', 'Z', 'Y'] {
                let (x, z) = match kind {
                    'X' => (m, 0),
                    'Z' => (0, m),
                    _ => (m, m),
                };
                out.push(CatalogEntry { operator: b.content(x, z), form, kind, reps });
            }
        }
    }
    out
}

pub fn catalog_lookup(op: LogicalOp) -> Result<CatalogEntry, CodeError> {
    catalog().into_iter().find(|e| e.operator == op).ok_or(CodeError::CatalogMiss(op))
}

pub fn apply_perm(perm: &Perm, m: Mask) -> Mask {
    (0..16).filter(|&q| (m >> q) & 1 == 1).fold(0, |acc, q| acc | (1 << perm[q]))
}

pub fn identity_perm() -> Perm {
    std::array::from_fn(|q| q as u8)
}

pub fn compose(first: &Perm, then: &Perm) -> Perm {
    std::array::from_fn(|q| then[first[q] as usize])
}

pub fn invert(p: &Perm) -> Perm {
    let mut out = [0u8; 16];
    for q in 0..16 {
        out[p[q] as usize] = q as u8;
    }
    out
}

/// Builds a permutation from cycles, e.g. `[[0,2,5],[3,6,4]]`.
pub fn perm_from_cycles(cycles: &[&[usize]]) -> Perm {
    let mut p = identity_perm();
    for cyc in cycles {
        for k in 0..cyc.len() {
            p[cyc[k]] = cyc[(k + 1) % cyc.len()] as u8;
        }
    }
    p
}

pub fn row_swap(r1: usize, r2: usize) -> Perm {
    let mut p = identity_perm();
    for c in 0..4 {
        p[qubit(r1, c)] = qubit(r2, c) as u8;
        p[qubit(r2, c)] = qubit(r1, c) as u8;
    }
    p
}

pub fn col_swap(c1: usize, c2: usize) -> Perm {
    let mut p = identity_perm();
    for r in 0..4 {
        p[qubit(r, c1)] = qubit(r, c2) as u8;
        p[qubit(r, c2)] = qubit(r, c1) as u8;
    }
    p
}

pub fn transpose() -> Perm {
    std::array::from_fn(|q| qubit(q % 4, q / 4) as u8)
}

/// Induced symplectic map on the six logical qubits: images of `X_i` and `Z_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LogicalAction {
    pub x_images: [LogicalOp; 6],
    pub z_images: [LogicalOp; 6],
}

impl LogicalAction {
    pub fn identity() -> Self {
        Self {
            x_images: std::array::from_fn(|i| LogicalOp::x(i + 1)),
            z_images: std::array::from_fn(|i| LogicalOp::z(i + 1)),
        }
    }

    /// Image of an arbitrary logical Pauli (phases ignored).
    pub fn apply(&self, op: LogicalOp) -> LogicalOp {
        let mut out = LogicalOp::default();
        for i in 0..6 {
            if op.x >> i & 1 == 1 {
                out = out.times(self.x_images[i]);
            }
            if op.z >> i & 1 == 1 {
                out = out.times(self.z_images[i]);
            }
        }
        out
    }

    pub fn then(&self, next: &LogicalAction) -> LogicalAction {
        LogicalAction {
            x_images: self.x_images.map(|o| next.apply(o)),
            z_images: self.z_images.map(|o| next.apply(o)),
        }
    }

    /// Logical permutation `i -> perm[i]` acting identically on X and Z.
    pub fn from_logical_perm(perm: [usize; 6]) -> Self {
        Self {
            x_images: std::array::from_fn(|i| LogicalOp::x(perm[i])),
            z_images: std::array::from_fn(|i| LogicalOp::z(perm[i])),
        }
    }

    /// Logical permutation from 1-based cycles, e.g. `[[3,1,5],[4,2,6]]`.
    pub fn from_cycles(cycles: &[&[usize]]) -> Self {
        let mut perm = [1, 2, 3, 4, 5, 6];
        for cyc in cycles {
            for k in 0..cyc.len() {
                perm[cyc[k] - 1] = cyc[(k + 1) % cyc.len()];
            }
        }
        Self::from_logical_perm(perm)
    }

    /// Product of logical CNOTs `(control, target)` applied in order.
    pub fn cnots(pairs: &[(usize, usize)]) -> Self {
        let mut a = Self::identity();
        for &(c, t) in pairs {
            let mut g = Self::identity();
            g.x_images[c - 1] = LogicalOp::x(c).times(LogicalOp::x(t));
            g.z_images[t - 1] = LogicalOp::z(t).times(LogicalOp::z(c));
            a = a.then(&g);
        }
        a
    }

    /// Cycle notation if the action is a logical permutation.
    pub fn as_cycles(&self) -> Option<String> {
        let mut perm = [0usize; 6];
        for i in 0..6 {
            let xi = self.x_images[i];
            if xi.z != 0 || xi.x.count_ones() != 1 || self.z_images[i] != LogicalOp::z(xi.x.trailing_zeros() as usize + 1) {
                return None;
            }
            perm[i] = xi.x.trailing_zeros() as usize;
        }
        let mut seen = [false; 6];
        let mut s = String::new();
        for start in 0..6 {
            if seen[start] || perm[start] == start {
                continue;
            }
            s.push('(');
            let mut k = start;
            let mut first = true;
            while !seen[k] {
                seen[k] = true;
                if !first {
                    s.push(',');
                }
                s.push_str(&(k + 1).to_string());
                first = false;
                k = perm[k];
            }
            s.push(')');
        }
        Some(if s.is_empty() { "()".into() } else { s })
    }
}

impl fmt::Display for LogicalAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.as_cycles() {
            return f.write_str(&c);
        }
        let parts: Vec<String> = (0..6)
            .flat_map(|i| {
                let xi = LogicalOp::x(i + 1);
                let zi = LogicalOp::z(i + 1);
                let mut v = Vec::new();
                if self.x_images[i] != xi {
                    v.push(format!("{xi}->{}", self.x_images[i]));
                }
                if self.z_images[i] != zi {
                    v.push(format!("{zi}->{}", self.z_images[i]));
                }
                v
            })
            .collect();
        if parts.is_empty() {
            f.write_str("()")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

pub fn is_automorphism(perm: &Perm) -> bool {
    generator_masks().iter().all(|&g| is_stabilizer_mask(apply_perm(perm, g)))
}

pub fn logical_action_of(perm: &Perm) -> Result<LogicalAction, CodeError> {
    if !is_automorphism(perm) {
        return Err(CodeError::NotAnAutomorphism);
    }
    let b = logical_basis();
    Ok(LogicalAction {
        x_images: std::array::from_fn(|i| b.content(apply_perm(perm, b.x_canonical(i + 1)), 0)),
        z_images: std::array::from_fn(|i| b.content(0, apply_perm(perm, b.z_canonical(i + 1)))),
    })
}

/// Generators used to close the automorphism group: row and column
/// transpositions and 4-cycles, the grid transpose, and a seed permutation
/// that mixes rows with columns.
pub fn seed_generators() -> Vec<Perm> {
    vec![
        row_swap(0, 1),
        compose(&compose(&row_swap(0, 1), &row_swap(1, 2)), &row_swap(2, 3)),
        col_swap(0, 1),
        compose(&compose(&col_swap(0, 1), &col_swap(1, 2)), &col_swap(2, 3)),
        transpose(),
        perm_from_cycles(&[&[0, 2, 5], &[3, 6, 4], &[8, 15, 10], &[9, 12, 14]]),
    ]
}

/// Breadth-first closure of the generated permutation group.
pub struct AutomorphismGroup {
    pub generators: Vec<Perm>,
    pub elements: Vec<Perm>,
}

impl AutomorphismGroup {
    pub fn close(generators: Vec<Perm>) -> Result<Self, CodeError> {
        if !generators.iter().all(is_automorphism) {
            return Err(CodeError::NotAnAutomorphism);
        }
        let mut seen: HashSet<Perm> = HashSet::new();
        let mut queue = VecDeque::new();
        let mut elements = Vec::new();
        let id = identity_perm();
        seen.insert(id);
        queue.push_back(id);
        while let Some(p) = queue.pop_front() {
            elements.push(p);
            for g in &generators {
                let next = compose(&p, g);
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(Self { generators, elements })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// First element (in breadth-first order) realising `target`.
    pub fn find(&self, target: &LogicalAction) -> Result<Perm, CodeError> {
        self.elements
            .iter()
            .find(|p| logical_action_of(p).as_ref() == Ok(target))
            .copied()
            .ok_or(CodeError::NotRealizable)
    }
}

pub fn find_automorphism(target: &LogicalAction) -> Result<Perm, CodeError> {
    AutomorphismGroup::close(seed_generators())?.find(target)
}

/// Named automorphisms used by the experiments, with their logical actions
/// computed rather than assumed.
pub fn named_automorphisms() -> Vec<(&'static str, Perm)> {
    vec![
        ("cycle-3-1-5", perm_from_cycles(&[&[0, 2, 5], &[3, 6, 4], &[8, 15, 10], &[9, 12, 14]])),
        ("swap-rows-1-2", row_swap(1, 2)),
        ("swap-cols-1-3", col_swap(1, 3)),
        ("swap-rows-0-2", row_swap(0, 2)),
        ("swap-cols-0-2", col_swap(0, 2)),
        ("transpose", transpose()),
    ]
}

/// A stabilizer code given by generators, for brute-force distance checks.
#[derive(Debug, Clone)]
pub struct StabilizerCode {
    pub n: usize,
    pub stabilizers: Vec<PauliOperator>,
}

impl StabilizerCode {
    pub fn tesseract() -> Self {
        let (xs, zs) = stabilizer_generators();
        Self { n: 16, stabilizers: xs.into_iter().chain(zs).collect() }
    }

    /// The [[8,3,2]] cube code with weight-4 X faces and a weight-8 Z check,
    /// which has X distance 2 and Z distance 4.
    pub fn cube_832() -> Self {
        let mut stabilizers = vec![PauliOperator::z_on(8, 0..8), PauliOperator::x_on(8, 0..8)];
        for l in [0b100u8, 0b010, 0b001] {
            let face: Vec<usize> = (0..8).filter(|&q| !parity((l as u32) & q as u32)).collect();
            stabilizers.push(PauliOperator::x_on(8, face));
        }
        Self { n: 8, stabilizers }
    }

    /// Minimum weight of a Pauli commuting with every stabilizer but outside
    /// the stabilizer group, optionally restricted to X-type or Z-type.
    pub fn distance(&self, only: Option<Basis>) -> usize {
        assert!(self.n <= 64);
        let n = self.n;
        let mut group = Gf2Basis::new(2 * n);
        for s in &self.stabilizers {
            group.insert(&s.symplectic());
        }
        let stab_masks: Vec<(u64, u64)> = self.stabilizers.iter().map(|s| (s.x_mask(), s.z_mask())).collect();
        let letters: &[(bool, bool)] = match only {
            None => &[(true, false), (true, true), (false, true)],
            Some(Basis::X) => &[(true, false)],
            Some(Basis::Z) => &[(false, true)],
        };
        for w in 1..=n {
            let mut found = false;
            for_each_combination(n, w, &mut |qs: &[usize]| {
                if found {
                    return;
                }
                let total = letters.len().pow(w as u32);
                for code in 0..total {
                    let (mut x, mut z, mut c) = (0u64, 0u64, code);
                    for &q in qs {
                        let (a, b) = letters[c % letters.len()];
                        c /= letters.len();
                        x |= (a as u64) << q;
                        z |= (b as u64) << q;
                    }
                    let commutes = stab_masks.iter().all(|&(sx, sz)| !parity(((x & sz).count_ones() + (z & sx).count_ones()) & 1));
                    if commutes && !group.contains(&PauliOperator::from_masks(n, x, z).symplectic()) {
                        found = true;
                        return;
                    }
                }
            });
            if found {
                return w;
            }
        }
        usize::MAX
    }
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for q in start..n {
            if n - q < k - cur.len() {
                break;
            }
            cur.push(q);
            rec(q + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Machine-readable code description.
#[derive(Debug, Serialize)]
pub struct CodeDescription {
    pub x_stabilizers: Vec<String>,
    pub z_stabilizers: Vec<String>,
    pub logicals: Vec<LogicalEntry>,
    pub automorphism_generators: Vec<AutomorphismEntry>,
}

#[derive(Debug, Serialize)]
pub struct LogicalEntry {
    pub name: String,
    pub canonical: String,
    pub representatives: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct AutomorphismEntry {
    pub name: String,
    pub permutation: Vec<u8>,
    pub logical_action: String,
}

pub fn describe() -> CodeDescription {
    let (xs, zs) = stabilizer_generators();
    let b = logical_basis();
    let mut logicals = Vec::new();
    for i in 1..=6 {
        for (op, reps) in [(LogicalOp::x(i), b.x_reps[i - 1]), (LogicalOp::z(i), b.z_reps[i - 1])] {
            logicals.push(LogicalEntry {
                name: op.to_string(),
                canonical: b.logical_operator(op).to_string(),
                representatives: reps.iter().map(|&m| mask_qubits(m)).collect(),
            });
        }
    }
    let automorphism_generators = named_automorphisms()
        .into_iter()
        .map(|(name, p)| AutomorphismEntry {
            name: name.into(),
            permutation: p.to_vec(),
            logical_action: logical_action_of(&p).map(|a| a.to_string()).unwrap_or_default(),
        })
        .collect();
    CodeDescription {
        x_stabilizers: xs.iter().map(|p| p.to_string()).collect(),
        z_stabilizers: zs.iter().map(|p| p.to_string()).collect(),
        logicals,
        automorphism_generators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::rank_u64;

    #[test]
    fn generators_are_independent_and_commute() {
        let g = generator_masks();
        assert_eq!(rank_u64(16, g.iter().map(|&m| m as u64)), 5);
        let (xs, zs) = stabilizer_generators();
        for x in &xs {
            assert_eq!(x.weight(), 8);
            for z in &zs {
                assert!(x.commutes(z));
            }
        }
        // product of two rows-pairs is another row pair
        assert!(is_stabilizer_mask((row_mask(0) | row_mask(1)) ^ (row_mask(0) | row_mask(2))));
        assert!(!is_stabilizer_mask(row_mask(0)));
    }

    #[test]
    fn row_pair_and_column_pair_spans_meet_in_all_ones() {
        let rows: Vec<u64> = (1..4).map(|r| (row_mask(0) | row_mask(r)) as u64).collect();
        let cols: Vec<u64> = (1..4).map(|c| (col_mask(0) | col_mask(c)) as u64).collect();
        let r1 = rank_u64(16, rows.clone());
        let r2 = rank_u64(16, cols.clone());
        let both = rank_u64(16, rows.into_iter().chain(cols));
        // intersection dimension = r1 + r2 - both = 1, spanned by all-ones
        assert_eq!(r1 + r2 - both, 1);
    }

    #[test]
    fn basis_matches_the_grid_conventions() {
        let b = logical_basis();
        assert_eq!(b.x_canonical(1), row_mask(0));
        assert_eq!(b.z_canonical(2), row_mask(0));
        assert_eq!(b.x_canonical(3), mask_from(&[0, 1, 4, 5]));
        let mut rows = b.x_reps[0].to_vec();
        rows.sort_unstable();
        assert_eq!(rows, (0..4).map(row_mask).collect::<Vec<_>>());
        let mut cols = b.z_reps[0].to_vec();
        cols.sort_unstable();
        assert_eq!(cols, (0..4).map(col_mask).collect::<Vec<_>>());
        let mut cols = b.x_reps[1].to_vec();
        cols.sort_unstable();
        assert_eq!(cols, (0..4).map(col_mask).collect::<Vec<_>>());
    }

    #[test]
    fn catalog_families_partition_the_grid() {
        let cat = catalog();
        assert_eq!(cat.len(), 35 * 3);
        for e in &cat {
            assert!(!e.operator.is_identity());
            assert_eq!(e.reps.iter().fold(0u16, |a, &m| a | m), 0xFFFF);
            assert!(e.reps.iter().all(|m| m.count_ones() == 4));
        }
        let y = catalog_lookup(LogicalOp::parse("X1Z2").unwrap()).unwrap();
        assert_eq!(y.kind, 'Y');
        assert!(catalog_lookup(LogicalOp::parse("X1X2").unwrap()).is_err());
        assert!(catalog_lookup(LogicalOp::parse("Z3Z4").unwrap()).is_err());
    }

    #[test]
    fn grid_cycle_acts_as_logical_cycle() {
        let p = perm_from_cycles(&[&[0, 2, 5], &[3, 6, 4], &[8, 15, 10], &[9, 12, 14]]);
        let a = logical_action_of(&p).unwrap();
        assert_eq!(a, LogicalAction::from_cycles(&[&[3, 1, 5], &[4, 2, 6]]));
        assert_eq!(logical_action_of(&identity_perm()).unwrap(), LogicalAction::identity());
    }

    #[test]
    fn column_swap_gives_35_46() {
        let a = logical_action_of(&col_swap(1, 3)).unwrap();
        assert_eq!(a.as_cycles().unwrap(), "(3,5)(4,6)");
    }

    #[test]
    fn row_swap_gives_bell_cnots() {
        let a = logical_action_of(&row_swap(1, 2)).unwrap();
        assert_eq!(a, LogicalAction::cnots(&[(3, 6), (5, 4)]));
    }

    #[test]
    fn non_automorphism_is_rejected() {
        let mut p = identity_perm();
        p.swap(0, 1);
        assert_eq!(logical_action_of(&p), Err(CodeError::NotAnAutomorphism));
    }

    #[test]
    fn small_code_distances() {
        assert_eq!(StabilizerCode::cube_832().distance(Some(Basis::X)), 2);
        assert_eq!(StabilizerCode::cube_832().distance(Some(Basis::Z)), 4);
        let trivial = StabilizerCode { n: 1, stabilizers: vec![] };
        assert_eq!(trivial.distance(None), 1);
    }
}
