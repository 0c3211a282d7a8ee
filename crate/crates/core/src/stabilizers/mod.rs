//! Operator families that fix the prepared states, stage by stage, and their
//! verification against simulated states.
//!
//! The final honeycomb family is not written down by hand. It is obtained by
//! pushing the dice-cluster stabilizers through every step of the protocol:
//! plaquette measurement, the vertex rotation, the vertex–edge CZs, the vertex
//! measurement and the final Hadamard frame (see [`families`]).
//!
//! Members of the final families need not commute, and a state is checked by
//! expectation values alone: for a Hermitian `E` with `E² = I`, `⟨E⟩ = 1`
//! forces the state into the `+1` eigenspace of `E`.
//!
//! Tolerances below `1e-12` are not meaningful in double precision.

mod families;
pub mod ring;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{HoneycombTorus, QubitId};
use crate::operator::{identity_defect, CompiledTerm, OpTable, OperatorExpr};
use crate::sim::{Real, StateVector};

pub use families::{
    color_code_family, d4_family, d4_family_with, d4_stage_circuit, dice_cluster_family, family_for, gauged_family, q8_family,
    rotated_family, toric_family, OutcomeSigns,
};

pub const MIN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    DiceCluster,
    ColorCode,
    Rotated,
    Gauged,
    FinalD4,
    FinalQ8,
    Toric,
}

#[derive(Clone, Debug, Serialize)]
pub struct Member {
    pub name: String,
    pub expr: OperatorExpr,
    /// `±1`, including the recorded outcome signs.
    pub expected: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizerFamily {
    pub stage: Stage,
    pub members: Vec<Member>,
}

impl StabilizerFamily {
    pub fn get(&self, name: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.name == name)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn support(&self) -> Vec<QubitId> {
        let s: BTreeSet<QubitId> = self.members.iter().flat_map(|m| m.expr.support()).collect();
        s.into_iter().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub name: String,
    pub expectation: ComplexValue,
    pub expected: f64,
    pub deviation: f64,
    pub pass: bool,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub stage: Stage,
    pub tolerance: f64,
    pub pass: bool,
    pub max_deviation: f64,
    pub entries: Vec<VerificationEntry>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Expectation of every member; pass iff `|⟨E⟩ − expected| ≤ tol`.
pub fn verify<T: Real>(state: &StateVector<T>, family: &StabilizerFamily, tol: f64) -> Result<VerificationReport> {
    let mut entries = Vec::with_capacity(family.members.len());
    for m in &family.members {
        let ev = state.expectation(&m.expr)?;
        let deviation = (ev - Complex64::new(m.expected, 0.0)).norm();
        entries.push(VerificationEntry {
            name: m.name.clone(),
            expectation: ComplexValue { re: ev.re, im: ev.im },
            expected: m.expected,
            deviation,
            pass: deviation <= tol,
            tolerance: tol,
        });
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(VerificationReport { stage: family.stage, tolerance: tol, pass: entries.iter().all(|e| e.pass), max_deviation, entries })
}

/// `‖lhs − rhs‖_max` on the union of supports (at most 12 qubits).
pub fn identity_gap(lhs: &OperatorExpr, rhs: &OperatorExpr) -> Result<f64> {
    let mut sup = lhs.support();
    sup.extend(rhs.support());
    sup.sort();
    sup.dedup();
    identity_defect(lhs, rhs, &sup)
}

/// Hermiticity and involution defects `(‖E − E†‖, ‖E² − I‖)` of a member.
pub fn involution_defects(e: &OperatorExpr) -> Result<(f64, f64)> {
    let sup = e.support();
    let t = OpTable::build(e, &sup)?;
    let sq = t.compose(&t);
    Ok((t.hermiticity_defect(), sq.max_diff(&OpTable::identity(&sup))))
}

/// Dimension of the joint `+1` eigenspace of a family on `qubits`.
///
/// Diagonal members (Z strings, CZs) cut the computational basis down to the
/// configurations they accept; the remaining members must map that set into
/// itself, and the dimension is the nullity of `Σ (1 − expected·E)` there.
pub fn joint_eigenspace_dimension(family: &StabilizerFamily, qubits: &[QubitId]) -> Result<usize> {
    if qubits.len() > 20 {
        return Err(Error::SupportTooLarge { size: qubits.len(), limit: 20 });
    }
    let bit_of = |q: QubitId| qubits.iter().position(|&x| x == q);
    let mut diagonal = Vec::new();
    let mut offdiag = Vec::new();
    for m in &family.members {
        let terms: Vec<CompiledTerm> = m.expr.terms.iter().map(|t| CompiledTerm::compile(t, &bit_of)).collect::<Result<_>>()?;
        if terms.iter().all(|t| t.flip == 0) {
            diagonal.push((terms, m.expected));
        } else {
            offdiag.push((terms, m.expected));
        }
    }
    let accepted: Vec<u64> = (0..1u64 << qubits.len())
        .filter(|&x| {
            diagonal.iter().all(|(terms, s)| {
                let v: Complex64 = terms.iter().map(|t| t.phase(x)).sum();
                (v - Complex64::new(*s, 0.0)).norm() < 1e-9
            })
        })
        .collect();
    let index: std::collections::HashMap<u64, usize> = accepted.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let d = accepted.len();
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        h[(i, i)] += Complex64::new(offdiag.len() as f64, 0.0);
    }
    for (terms, s) in &offdiag {
        for (col, &x) in accepted.iter().enumerate() {
            for t in terms {
                let y = x ^ t.flip;
                let amp = t.phase(x) * *s;
                if amp.norm() < 1e-14 {
                    continue;
                }
                match index.get(&y) {
                    Some(&row) => h[(row, col)] -= amp,
                    None => return Err(Error::Invalid("a member leaves the subspace fixed by the diagonal members".into())),
                }
            }
        }
    }
    let ev = h.symmetric_eigenvalues();
    Ok(ev.iter().filter(|&&l| l.abs() < 1e-8).count())
}

/// The operator `M` with `A_p A_q = M A_q A_p` predicted by the shared edges
/// of two honeycomb plaquettes: each shared edge contributes `B¹` of the
/// plaquette holding it at an even ring position and `B²` of the other.
pub fn exchange_factor(lat: &HoneycombTorus, family: &StabilizerFamily, p: usize, q: usize) -> Result<OperatorExpr> {
    let member = |name: String| family.get(&name).map(|m| m.expr.clone()).ok_or_else(|| Error::Invalid(format!("family has no {name}")));
    let mut m = OperatorExpr::identity();
    for (k, &e) in lat.plaquettes[p].ring_edges.iter().enumerate() {
        let Some(l) = lat.plaquettes[q].ring_edges.iter().position(|&f| f == e) else { continue };
        if k % 2 == l % 2 {
            return Err(Error::Invalid(format!("edge e{e} has the same ring parity in p{p} and p{q}")));
        }
        let (even, odd) = if k % 2 == 0 { (p, q) } else { (q, p) };
        m = m.mul(&member(format!("B1_p{even}"))?).mul(&member(format!("B2_p{odd}"))?);
    }
    Ok(m)
}

/// `‖A_p A_q − M A_q A_p‖` for the exchange factor `M` above.
pub fn exchange_gap(lat: &HoneycombTorus, family: &StabilizerFamily, p: usize, q: usize) -> Result<f64> {
    let a = |r: usize| family.get(&format!("A_p{r}")).map(|m| m.expr.clone()).ok_or_else(|| Error::Invalid(format!("family has no A_p{r}")));
    let (ap, aq) = (a(p)?, a(q)?);
    identity_gap(&ap.mul(&aq), &exchange_factor(lat, family, p, q)?.mul(&aq).mul(&ap))
}

/// `‖E F − F E‖`.
pub fn commutator_gap(e: &OperatorExpr, f: &OperatorExpr) -> Result<f64> {
    identity_gap(&e.mul(f), &f.mul(e))
}
