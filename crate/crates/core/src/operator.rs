//! Operator expressions built from Paulis, CZ and CCZ factors.
//!
//! Every product of such factors maps a basis state to a single basis state
//! times a phase, `M|x⟩ = f(x)|x ⊕ m⟩`. A sum of products is stored as a
//! table `m -> f_m` over the support; that table *is* the dense matrix, indexed
//! by (row xor column, column), and is what identities and Hermiticity are
//! checked on.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::QubitId;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// `a·b = phase · c`; `None` for `c` means identity.
    pub fn mul(a: Pauli, b: Pauli) -> (Complex64, Option<Pauli>) {
        use Pauli::*;
        match (a, b) {
            (X, X) | (Y, Y) | (Z, Z) => (ONE, None),
            (X, Y) => (I, Some(Z)),
            (Y, X) => (-I, Some(Z)),
            (Y, Z) => (I, Some(X)),
            (Z, Y) => (-I, Some(X)),
            (Z, X) => (I, Some(Y)),
            (X, Z) => (-I, Some(Y)),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "qubits", rename_all = "lowercase")]
pub enum Factor {
    X(QubitId),
    Y(QubitId),
    Z(QubitId),
    Cz(QubitId, QubitId),
    Ccz(QubitId, QubitId, QubitId),
}

impl Factor {
    pub fn pauli(p: Pauli, q: QubitId) -> Factor {
        match p {
            Pauli::X => Factor::X(q),
            Pauli::Y => Factor::Y(q),
            Pauli::Z => Factor::Z(q),
        }
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        match *self {
            Factor::X(q) | Factor::Y(q) | Factor::Z(q) => vec![q],
            Factor::Cz(a, b) => vec![a, b],
            Factor::Ccz(a, b, c) => vec![a, b, c],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    /// Operator product in written order: the last factor acts first.
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorExpr {
    pub terms: Vec<Term>,
}

impl OperatorExpr {
    pub fn identity() -> Self {
        Self::product(ONE, vec![])
    }

    pub fn product(coeff: Complex64, factors: Vec<Factor>) -> Self {
        OperatorExpr { terms: vec![Term { coeff, factors }] }
    }

    pub fn paulis(coeff: Complex64, ops: &[(Pauli, QubitId)]) -> Self {
        Self::product(coeff, ops.iter().map(|&(p, q)| Factor::pauli(p, q)).collect())
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self
    }

    pub fn plus(mut self, other: &OperatorExpr) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    /// Operator product `self · other` (other acts first).
    pub fn mul(&self, other: &OperatorExpr) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                factors.extend(b.factors.iter().copied());
                terms.push(Term { coeff: a.coeff * b.coeff, factors });
            }
        }
        OperatorExpr { terms }
    }

    /// Sorted, deduplicated support.
    pub fn support(&self) -> Vec<QubitId> {
        let mut s: Vec<QubitId> = self.terms.iter().flat_map(|t| t.factors.iter().flat_map(|f| f.qubits())).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Adjoint: reverse each product and conjugate coefficients (all factors
    /// are Hermitian).
    pub fn adjoint(&self) -> Self {
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: t.coeff.conj(), factors: t.factors.iter().rev().copied().collect() })
                .collect(),
        }
    }

    /// Action on the basis state `x` over `support` (bit k ↔ support[k]).
    pub fn table(&self, support: &[QubitId]) -> Result<OpTable> {
        OpTable::build(self, support)
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.4}{:+.4}i)", t.coeff.re, t.coeff.im)?;
            for fac in &t.factors {
                match fac {
                    Factor::X(q) => write!(f, " X{q}")?,
                    Factor::Y(q) => write!(f, " Y{q}")?,
                    Factor::Z(q) => write!(f, " Z{q}")?,
                    Factor::Cz(a, b) => write!(f, " CZ({a},{b})")?,
                    Factor::Ccz(a, b, c) => write!(f, " CCZ({a},{b},{c})")?,
                }
            }
        }
        Ok(())
    }
}

/// Per-term compiled program over bit positions. Applying it to basis state
/// `x` yields `(phase, x ⊕ flip)`.
#[derive(Clone, Debug)]
pub struct CompiledTerm {
    pub coeff: Complex64,
    pub flip: u64,
    ops: Vec<BitOp>,
}

#[derive(Clone, Copy, Debug)]
enum BitOp {
    /// `X` on bits.
    Flip(u64),
    /// `(-1)^{popcount(x & mask)}`
    Sign(u64),
    /// `Y` on one bit: `i (-1)^{x_b}` then flip.
    Y(u64),
    /// `(-1)^{x_a x_b}`
    Cz(u64, u64),
    Ccz(u64, u64, u64),
}

impl CompiledTerm {
    pub fn compile(term: &Term, bit_of: &dyn Fn(QubitId) -> Option<usize>) -> Result<Self> {
        let bit = |q: QubitId| -> Result<u64> { bit_of(q).map(|b| 1u64 << b).ok_or(Error::DeadQubit(q)) };
        let mut ops = Vec::with_capacity(term.factors.len());
        let mut flip = 0u64;
        // Rightmost factor acts first.
        for f in term.factors.iter().rev() {
            let op = match *f {
                Factor::X(q) => BitOp::Flip(bit(q)?),
                Factor::Z(q) => BitOp::Sign(bit(q)?),
                Factor::Y(q) => BitOp::Y(bit(q)?),
                Factor::Cz(a, b) => BitOp::Cz(bit(a)?, bit(b)?),
                Factor::Ccz(a, b, c) => BitOp::Ccz(bit(a)?, bit(b)?, bit(c)?),
            };
            match (ops.last_mut(), op) {
                (Some(BitOp::Flip(m)), BitOp::Flip(n)) => *m ^= n,
                (Some(BitOp::Sign(m)), BitOp::Sign(n)) => *m ^= n,
                _ => ops.push(op),
            }
            match op {
                BitOp::Flip(m) | BitOp::Y(m) => flip ^= m,
                _ => {}
            }
        }
        Ok(CompiledTerm { coeff: term.coeff, flip, ops })
    }

    /// Phase `f(x)` such that the term maps `|x⟩` to `f(x) |x ⊕ flip⟩`.
    #[inline]
    pub fn phase(&self, x: u64) -> Complex64 {
        let mut s = x;
        let mut neg = false;
        let mut ipow = 0u32;
        for op in &self.ops {
            match *op {
                BitOp::Flip(m) => s ^= m,
                BitOp::Sign(m) => neg ^= (s & m).count_ones() & 1 == 1,
                BitOp::Y(m) => {
                    ipow += 1;
                    neg ^= s & m != 0;
                    s ^= m;
                }
                BitOp::Cz(a, b) => neg ^= (s & a != 0) && (s & b != 0),
                BitOp::Ccz(a, b, c) => neg ^= (s & a != 0) && (s & b != 0) && (s & c != 0),
            }
        }
        let base = match ipow % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        let v = self.coeff * base;
        if neg {
            -v
        } else {
            v
        }
    }
}

/// Exact matrix of an operator on a small support, stored by flip mask:
/// `entries[m][x] = ⟨x ⊕ m| E |x⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpTable {
    pub support: Vec<QubitId>,
    pub entries: BTreeMap<u64, Vec<Complex64>>,
}

/// Largest support on which tables and dense matrices are formed.
pub const MAX_TABLE_SUPPORT: usize = 16;

impl OpTable {
    pub fn build(expr: &OperatorExpr, support: &[QubitId]) -> Result<Self> {
        if support.len() > MAX_TABLE_SUPPORT {
            return Err(Error::SupportTooLarge { size: support.len(), limit: MAX_TABLE_SUPPORT });
        }
        let bit_of = |q: QubitId| support.iter().position(|&s| s == q);
        let dim = 1u64 << support.len();
        let mut entries: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
        for t in &expr.terms {
            let c = CompiledTerm::compile(t, &bit_of)?;
            let row = entries.entry(c.flip).or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim as usize]);
            for x in 0..dim {
                row[x as usize] += c.phase(x);
            }
        }
        entries.retain(|_, v| v.iter().any(|z| z.norm() > 1e-15));
        Ok(OpTable { support: support.to_vec(), entries })
    }

    pub fn dim(&self) -> usize {
        1 << self.support.len()
    }

    /// Largest absolute entry of `self − other` (same support required).
    pub fn max_diff(&self, other: &OpTable) -> f64 {
        assert_eq!(self.support, other.support);
        let zero = vec![Complex64::new(0.0, 0.0); self.dim()];
        let mut worst: f64 = 0.0;
        let masks: std::collections::BTreeSet<u64> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        for m in masks {
            let a = self.entries.get(&m).unwrap_or(&zero);
            let b = other.entries.get(&m).unwrap_or(&zero);
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }

    /// Largest violation of `E = E†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&m, row) in &self.entries {
            for x in 0..row.len() {
                let y = x ^ m as usize;
                worst = worst.max((row[x] - row[y].conj()).norm());
            }
        }
        worst
    }

    /// Product `self · other` (other acts first).
    pub fn compose(&self, other: &OpTable) -> OpTable {
        assert_eq!(self.support, other.support);
        let dim = self.dim();
        let mut entries: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
        for (&m2, r2) in &other.entries {
            for (&m1, r1) in &self.entries {
                let row = entries.entry(m1 ^ m2).or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
                for x in 0..dim {
                    row[x] += r1[x ^ m2 as usize] * r2[x];
                }
            }
        }
        entries.retain(|_, v| v.iter().any(|z| z.norm() > 1e-15));
        OpTable { support: self.support.clone(), entries }
    }

    pub fn identity(support: &[QubitId]) -> OpTable {
        let mut entries = BTreeMap::new();
        entries.insert(0, vec![ONE; 1 << support.len()]);
        OpTable { support: support.to_vec(), entries }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (&mask, row) in &self.entries {
            for x in 0..d {
                m[(x ^ mask as usize, x)] += row[x];
            }
        }
        m
    }
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Whether two expressions are equal as matrices on `support`, to `tol` in
/// the max-entry norm. Fails if the support exceeds 12 qubits.
pub fn check_identity(lhs: &OperatorExpr, rhs: &OperatorExpr, support: &[QubitId]) -> Result<bool> {
    Ok(identity_defect(lhs, rhs, support)? < 1e-12)
}

/// `‖lhs − rhs‖_max` on `support` (≤ 12 qubits).
pub fn identity_defect(lhs: &OperatorExpr, rhs: &OperatorExpr, support: &[QubitId]) -> Result<f64> {
    const LIMIT: usize = 12;
    let mut sup = support.to_vec();
    sup.sort();
    sup.dedup();
    for q in lhs.support().into_iter().chain(rhs.support()) {
        if !sup.contains(&q) {
            return Err(Error::Invalid(format!("qubit {q} outside the stated support")));
        }
    }
    if sup.len() > LIMIT {
        return Err(Error::SupportTooLarge { size: sup.len(), limit: LIMIT });
    }
    Ok(OpTable::build(lhs, &sup)?.max_diff(&OpTable::build(rhs, &sup)?))
}

/// Sparse Pauli string with sorted qubits; the identity is the empty string.
pub type PauliString = BTreeMap<QubitId, Pauli>;

/// Linear combination of Pauli strings, used for symbolic conjugation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    pub terms: BTreeMap<Vec<(QubitId, Pauli)>, Complex64>,
}

const PRUNE: f64 = 1e-13;

impl PauliSum {
    pub fn zero() -> Self {
        PauliSum::default()
    }

    pub fn scalar(c: Complex64) -> Self {
        let mut s = PauliSum::zero();
        s.add_term(vec![], c);
        s
    }

    pub fn string(c: Complex64, ops: &[(QubitId, Pauli)]) -> Self {
        let mut acc = PauliSum::scalar(c);
        for &(q, p) in ops {
            acc = acc.mul(&PauliSum::single(q, p));
        }
        acc
    }

    pub fn single(q: QubitId, p: Pauli) -> Self {
        let mut s = PauliSum::zero();
        s.add_term(vec![(q, p)], ONE);
        s
    }

    fn add_term(&mut self, key: Vec<(QubitId, Pauli)>, c: Complex64) {
        let e = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() > PRUNE);
        self
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        out.pruned()
    }

    pub fn scale(&self, c: Complex64) -> PauliSum {
        PauliSum { terms: self.terms.iter().map(|(k, &v)| (k.clone(), v * c)).collect() }.pruned()
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero();
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                let (phase, key) = mul_strings(ka, kb);
                out.add_term(key, ca * cb * phase);
            }
        }
        out.pruned()
    }

    /// Replace every string `s` by `U s U†`, where the image of a single
    /// Pauli on its qubit is supplied by `image` (`None` = unchanged).
    pub fn conjugate_local(&self, image: &dyn Fn(QubitId, Pauli) -> Option<PauliSum>) -> PauliSum {
        let mut out = PauliSum::zero();
        for (k, &c) in &self.terms {
            let mut acc = PauliSum::scalar(c);
            for &(q, p) in k {
                let img = image(q, p).unwrap_or_else(|| PauliSum::single(q, p));
                acc = acc.mul(&img);
            }
            out = out.add(&acc);
        }
        out
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        let mut s: Vec<QubitId> = self.terms.keys().flat_map(|k| k.iter().map(|&(q, _)| q)).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn to_expr(&self) -> OperatorExpr {
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .map(|(k, &c)| Term { coeff: c, factors: k.iter().map(|&(q, p)| Factor::pauli(p, q)).collect() })
                .collect(),
        }
    }

    /// Drop every factor on qubits where the string is a fixed Pauli `p`,
    /// replacing it with the scalar `value(q)`. Fails if some term has a
    /// different Pauli on such a qubit.
    pub fn substitute(&self, qubits: &[QubitId], p: Pauli, value: &dyn Fn(QubitId) -> f64) -> Result<PauliSum> {
        let mut out = PauliSum::zero();
        for (k, &c) in &self.terms {
            let mut coeff = c;
            let mut key = Vec::with_capacity(k.len());
            for &(q, pq) in k {
                if qubits.contains(&q) {
                    if pq != p {
                        return Err(Error::Invalid(format!("term has {} on {q}, cannot substitute", pq.letter())));
                    }
                    coeff *= value(q);
                } else {
                    key.push((q, pq));
                }
            }
            out.add_term(key, coeff);
        }
        Ok(out.pruned())
    }
}

fn mul_strings(a: &[(QubitId, Pauli)], b: &[(QubitId, Pauli)]) -> (Complex64, Vec<(QubitId, Pauli)>) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut phase = ONE;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j]);
            j += 1;
        } else {
            let (ph, p) = Pauli::mul(a[i].1, b[j].1);
            phase *= ph;
            if let Some(p) = p {
                out.push((a[i].0, p));
            }
            i += 1;
            j += 1;
        }
    }
    (phase, out)
}
