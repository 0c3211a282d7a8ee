//! Layered circuit representation, scheduling, depth accounting and the
//! SWAP decomposition.

mod builders;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{QubitId, TriangleOrientation};
use crate::operator::Pauli;

pub use builders::{
    build_d4_grid_protocol, build_d4_protocol, build_d4_protocol_with, build_d4_spt_route, build_protocol, build_q8_spt_route,
    build_toric_code_protocol,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Tplus,
    Tminus,
    Cz,
    Ccz,
    Swap,
    Measx,
    /// Projective measurement of a multi-qubit Pauli product (toric-code stars).
    Measpauli,
}

/// A gate with its support. `MeasPauli` is the only kind whose support is not
/// 1–3 qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(QubitId),
    X(QubitId),
    Y(QubitId),
    Z(QubitId),
    S(QubitId),
    /// `diag(1, e^{iπ/4})`
    Tplus(QubitId),
    /// `diag(1, e^{-iπ/4})`
    Tminus(QubitId),
    Cz(QubitId, QubitId),
    Ccz(QubitId, QubitId, QubitId),
    Swap(QubitId, QubitId),
    MeasX(QubitId),
    /// Measurement of `Π P_q`; the outcome is recorded under `site`, which
    /// names the measured operator rather than a qubit.
    MeasPauli { site: QubitId, paulis: Vec<(QubitId, Pauli)> },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::H(_) => GateKind::H,
            Gate::X(_) => GateKind::X,
            Gate::Y(_) => GateKind::Y,
            Gate::Z(_) => GateKind::Z,
            Gate::S(_) => GateKind::S,
            Gate::Tplus(_) => GateKind::Tplus,
            Gate::Tminus(_) => GateKind::Tminus,
            Gate::Cz(..) => GateKind::Cz,
            Gate::Ccz(..) => GateKind::Ccz,
            Gate::Swap(..) => GateKind::Swap,
            Gate::MeasX(_) => GateKind::Measx,
            Gate::MeasPauli { .. } => GateKind::Measpauli,
        }
    }

    pub fn support(&self) -> Vec<QubitId> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) | Gate::Tplus(q) | Gate::Tminus(q) | Gate::MeasX(q) => vec![*q],
            Gate::Cz(a, b) | Gate::Swap(a, b) => vec![*a, *b],
            Gate::Ccz(a, b, c) => vec![*a, *b, *c],
            Gate::MeasPauli { paulis, .. } => paulis.iter().map(|&(q, _)| q).collect(),
        }
    }

    /// Diagonal in the computational basis (commutes with every other
    /// diagonal gate).
    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gate::Z(_) | Gate::S(_) | Gate::Tplus(_) | Gate::Tminus(_) | Gate::Cz(..) | Gate::Ccz(..))
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::MeasX(_) | Gate::MeasPauli { .. })
    }

    fn from_parts(kind: GateKind, qubits: &[QubitId], paulis: Option<&str>, site: Option<QubitId>) -> Result<Gate> {
        let bad = || Error::Format(format!("gate {kind:?} with {} qubits", qubits.len()));
        let one = || if qubits.len() == 1 { Ok(qubits[0]) } else { Err(bad()) };
        Ok(match kind {
            GateKind::H => Gate::H(one()?),
            GateKind::X => Gate::X(one()?),
            GateKind::Y => Gate::Y(one()?),
            GateKind::Z => Gate::Z(one()?),
            GateKind::S => Gate::S(one()?),
            GateKind::Tplus => Gate::Tplus(one()?),
            GateKind::Tminus => Gate::Tminus(one()?),
            GateKind::Measx => Gate::MeasX(one()?),
            GateKind::Cz | GateKind::Swap => {
                if qubits.len() != 2 || qubits[0] == qubits[1] {
                    return Err(bad());
                }
                if kind == GateKind::Cz {
                    Gate::Cz(qubits[0], qubits[1])
                } else {
                    Gate::Swap(qubits[0], qubits[1])
                }
            }
            GateKind::Ccz => {
                let s: BTreeSet<_> = qubits.iter().collect();
                if qubits.len() != 3 || s.len() != 3 {
                    return Err(bad());
                }
                Gate::Ccz(qubits[0], qubits[1], qubits[2])
            }
            GateKind::Measpauli => {
                let letters = paulis.ok_or_else(bad)?;
                if letters.chars().count() != qubits.len() {
                    return Err(bad());
                }
                let ps = letters
                    .chars()
                    .zip(qubits)
                    .map(|(c, &q)| match c {
                        'X' => Ok((q, Pauli::X)),
                        'Y' => Ok((q, Pauli::Y)),
                        'Z' => Ok((q, Pauli::Z)),
                        _ => Err(bad()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Gate::MeasPauli { site: site.ok_or_else(bad)?, paulis: ps }
            }
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    kind: GateKind,
    qubits: Vec<QubitId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    paulis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    site: Option<QubitId>,
}

impl Serialize for Gate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (paulis, site) = match self {
            Gate::MeasPauli { site, paulis } => (Some(paulis.iter().map(|&(_, p)| p.letter()).collect()), Some(*site)),
            _ => (None, None),
        };
        GateJson { kind: self.kind(), qubits: self.support(), paulis, site }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = GateJson::deserialize(d)?;
        Gate::from_parts(g.kind, &g.qubits, g.paulis.as_deref(), g.site).map_err(serde::de::Error::custom)
    }
}

/// What a layer does; measurement gates may only appear in `Measure` layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerTag {
    Entangle,
    Rotation,
    Swap,
    /// Hadamard layers produced by SWAP decomposition.
    Basis,
    Excite,
    Measure,
    /// Final change of frame on the output qubits.
    Frame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub tag: LayerTag,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Toric,
    D4,
    D4Grid,
    D4GridNative,
    D4Spt,
    Q8Spt,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Toric => "toric",
            Protocol::D4 => "d4",
            Protocol::D4Grid => "d4-grid",
            Protocol::D4GridNative => "d4-grid-native",
            Protocol::D4Spt => "d4-spt",
            Protocol::Q8Spt => "q8-spt",
        }
    }

    pub fn parse(s: &str) -> Result<Protocol> {
        [Protocol::Toric, Protocol::D4, Protocol::D4Grid, Protocol::D4GridNative, Protocol::D4Spt, Protocol::Q8Spt]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown protocol {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatticeRef {
    Honeycomb { l1: usize, l2: usize },
    Square { l: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub protocol: Protocol,
    pub lattice: LatticeRef,
    /// Red vertices rotate with `Tplus` instead of `Tminus`.
    #[serde(default)]
    pub sign_swap: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<TriangleOrientation>,
    /// Every qubit the circuit touches; each starts in `|+⟩`.
    pub qubits: Vec<QubitId>,
    pub layers: Vec<Layer>,
    /// Physical qubit → logical label at the end of the circuit, for qubits
    /// whose state was routed elsewhere. Absent entries map to themselves.
    #[serde(default)]
    pub final_labels: BTreeMap<QubitId, QubitId>,
    /// Logical vertex → physical qubit holding it when the rotation layer
    /// fires. Absent entries map to themselves.
    #[serde(default)]
    pub rotation_sites: BTreeMap<QubitId, QubitId>,
}

impl Circuit {
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flat_map(|l| l.gates.iter())
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates().filter(|g| g.kind() == kind).count()
    }

    /// Logical label of a physical qubit at the end of the circuit.
    pub fn logical(&self, physical: QubitId) -> QubitId {
        *self.final_labels.get(&physical).unwrap_or(&physical)
    }

    /// Logical labels of all measured qubits (and sites of Pauli measurements).
    pub fn measured_qubits(&self) -> BTreeSet<QubitId> {
        self.gates()
            .filter_map(|g| match g {
                Gate::MeasX(q) => Some(self.logical(*q)),
                Gate::MeasPauli { site, .. } => Some(*site),
                _ => None,
            })
            .collect()
    }

    /// Checks layer disjointness and measurement placement.
    pub fn validate(&self) -> Result<()> {
        let known: BTreeSet<_> = self.qubits.iter().copied().collect();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for g in &layer.gates {
                if g.is_measurement() && layer.tag != LayerTag::Measure {
                    return Err(Error::Invalid(format!("measurement outside a measurement layer (layer {k})")));
                }
                for q in g.support() {
                    if !known.contains(&q) {
                        return Err(Error::Invalid(format!("layer {k} uses undeclared qubit {q}")));
                    }
                    if !seen.insert(q) {
                        return Err(Error::Invalid(format!("qubit {q} appears twice in layer {k}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        let c: Circuit = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

/// Greedy as-soon-as-possible layering: each gate, in the given order, goes
/// into the first layer after the last one touching any of its qubits. The
/// builders emit gates sorted by class and then by lowest qubit, which makes
/// the result reproducible.
pub fn schedule(gates: impl IntoIterator<Item = Gate>, tag: LayerTag) -> Vec<Layer> {
    let mut next: BTreeMap<QubitId, usize> = BTreeMap::new();
    let mut layers: Vec<Layer> = Vec::new();
    for g in gates {
        let sup = g.support();
        let k = sup.iter().map(|q| next.get(q).copied().unwrap_or(0)).max().unwrap_or(0);
        if layers.len() <= k {
            layers.resize_with(k + 1, || Layer { tag, gates: Vec::new() });
        }
        layers[k].gates.push(g);
        for q in sup {
            next.insert(q, k + 1);
        }
    }
    layers
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DepthReport {
    pub two_body: usize,
    pub ccz: usize,
}

/// Number of layers containing at least one two-qubit gate.
pub fn two_body_depth(c: &Circuit) -> usize {
    c.layers.iter().filter(|l| l.gates.iter().any(|g| matches!(g, Gate::Cz(..) | Gate::Swap(..)))).count()
}

/// Number of layers containing at least one CCZ.
pub fn ccz_depth(c: &Circuit) -> usize {
    c.layers.iter().filter(|l| l.gates.iter().any(|g| matches!(g, Gate::Ccz(..)))).count()
}

pub fn depth_report(c: &Circuit) -> DepthReport {
    DepthReport { two_body: two_body_depth(c), ccz: ccz_depth(c) }
}

/// Replace every SWAP by `H⊗H, CZ, H⊗H, CZ, H⊗H, CZ` (time order). When the
/// layer right after a SWAP layer holds a CZ on the same pair, the two CZs
/// cancel and both are dropped.
pub fn decompose_swaps(c: &Circuit) -> Circuit {
    let mut out: Vec<Layer> = Vec::with_capacity(c.layers.len());
    let mut pending_cancel: BTreeSet<(QubitId, QubitId)> = BTreeSet::new();
    for (k, layer) in c.layers.iter().enumerate() {
        let mut layer = layer.clone();
        if !pending_cancel.is_empty() {
            layer.gates.retain(|g| match g {
                Gate::Cz(a, b) => !pending_cancel.contains(&ordered(*a, *b)),
                _ => true,
            });
            pending_cancel.clear();
        }
        let pairs: Vec<(QubitId, QubitId)> = layer
            .gates
            .iter()
            .filter_map(|g| match g {
                Gate::Swap(a, b) => Some((*a, *b)),
                _ => None,
            })
            .collect();
        if pairs.is_empty() {
            out.push(layer);
            continue;
        }
        let rest: Vec<Gate> = layer.gates.iter().filter(|g| !matches!(g, Gate::Swap(..))).cloned().collect();
        if !rest.is_empty() {
            out.push(Layer { tag: layer.tag, gates: rest });
        }
        let hh = Layer { tag: LayerTag::Basis, gates: pairs.iter().flat_map(|&(a, b)| [Gate::H(a), Gate::H(b)]).collect() };
        let cz = Layer { tag: LayerTag::Entangle, gates: pairs.iter().map(|&(a, b)| Gate::Cz(a, b)).collect() };
        out.extend([hh.clone(), cz.clone(), hh.clone(), cz.clone(), hh]);
        // Final CZ of the triple, possibly cancelled against the next layer.
        let next_cz: BTreeSet<(QubitId, QubitId)> = c
            .layers
            .get(k + 1)
            .map(|l| {
                l.gates
                    .iter()
                    .filter_map(|g| match g {
                        Gate::Cz(a, b) => Some(ordered(*a, *b)),
                        _ => None,
                    })
                    .collect()
            })
            .unwrap_or_default();
        let last: Vec<Gate> = pairs
            .iter()
            .filter(|&&(a, b)| {
                let key = ordered(a, b);
                if next_cz.contains(&key) {
                    pending_cancel.insert(key);
                    false
                } else {
                    true
                }
            })
            .map(|&(a, b)| Gate::Cz(a, b))
            .collect();
        if !last.is_empty() {
            out.push(Layer { tag: LayerTag::Entangle, gates: last });
        }
    }
    out.retain(|l| !l.gates.is_empty());
    let mut c2 = c.clone();
    c2.layers = out;
    if c2.protocol == Protocol::D4Grid {
        c2.protocol = Protocol::D4GridNative;
    }
    c2
}

fn ordered(a: QubitId, b: QubitId) -> (QubitId, QubitId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Insert `Z` on the given logical vertices immediately before the first
/// rotation layer.
pub fn insert_vertex_z(c: &Circuit, vertices: &BTreeSet<QubitId>) -> Result<Circuit> {
    let pos = c
        .layers
        .iter()
        .position(|l| l.tag == LayerTag::Rotation)
        .ok_or_else(|| Error::WrongProtocol(format!("{} has no rotation layer", c.protocol.name())))?;
    if vertices.is_empty() {
        return Ok(c.clone());
    }
    let mut gates = Vec::with_capacity(vertices.len());
    for &v in vertices {
        if v.role != crate::lattice::Role::Vertex || !c.qubits.contains(&v) {
            return Err(Error::Invalid(format!("{v} is not a vertex of this circuit")));
        }
        gates.push(Gate::Z(*c.rotation_sites.get(&v).unwrap_or(&v)));
    }
    let mut out = c.clone();
    out.layers.insert(pos, Layer { tag: LayerTag::Excite, gates });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn q(i: usize) -> QubitId {
        QubitId::edge(i)
    }

    // Dense unitary of a layered, measurement-free circuit on `n` qubits
    // labelled e0..e{n-1} (bit k = e_k), built gate by gate.
    fn unitary(layers: &[Layer], n: usize) -> DMatrix<Complex64> {
        let d = 1usize << n;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut u = DMatrix::<Complex64>::identity(d, d);
        for l in layers {
            for g in &l.gates {
                let mut m = DMatrix::<Complex64>::zeros(d, d);
                for x in 0..d {
                    let bit = |qq: &QubitId| (x >> qq.idx()) & 1;
                    match g {
                        Gate::H(a) => {
                            let b = bit(a);
                            m[(x & !(1 << a.idx()), x)] += Complex64::new(s, 0.0);
                            m[(x | (1 << a.idx()), x)] += Complex64::new(if b == 1 { -s } else { s }, 0.0);
                        }
                        Gate::Cz(a, b) => m[(x, x)] = Complex64::new(if bit(a) & bit(b) == 1 { -1.0 } else { 1.0 }, 0.0),
                        Gate::Swap(a, b) => {
                            let (ba, bb) = (bit(a), bit(b));
                            let y = (x & !(1 << a.idx()) & !(1 << b.idx())) | (bb << a.idx()) | (ba << b.idx());
                            m[(y, x)] = Complex64::new(1.0, 0.0);
                        }
                        Gate::Z(a) => m[(x, x)] = Complex64::new(if bit(a) == 1 { -1.0 } else { 1.0 }, 0.0),
                        Gate::Tplus(a) => {
                            m[(x, x)] = if bit(a) == 1 { Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4) } else { Complex64::new(1.0, 0.0) }
                        }
                        _ => panic!("unsupported in test"),
                    }
                }
                u = m * u;
            }
        }
        u
    }

    fn bare(layers: Vec<Layer>, n: usize) -> Circuit {
        Circuit {
            protocol: Protocol::D4Grid,
            lattice: LatticeRef::Square { l: 2 },
            sign_swap: false,
            orientation: None,
            qubits: (0..n).map(q).collect(),
            layers,
            final_labels: BTreeMap::new(),
            rotation_sites: BTreeMap::new(),
        }
    }

    #[test]
    fn single_swap_decomposes_exactly() {
        let c = bare(vec![Layer { tag: LayerTag::Swap, gates: vec![Gate::Swap(q(0), q(1))] }], 2);
        let d = decompose_swaps(&c);
        assert_eq!(d.count(GateKind::Swap), 0);
        assert_eq!(d.count(GateKind::Cz), 3);
        let diff = unitary(&c.layers, 2) - unitary(&d.layers, 2);
        assert!(crate::operator::max_abs(&diff) < 1e-12);
    }

    #[test]
    fn swap_then_cz_cancels_one_layer() {
        let c = bare(
            vec![
                Layer { tag: LayerTag::Swap, gates: vec![Gate::Swap(q(0), q(1))] },
                Layer { tag: LayerTag::Entangle, gates: vec![Gate::Cz(q(1), q(0))] },
            ],
            2,
        );
        let d = decompose_swaps(&c);
        assert_eq!(two_body_depth(&d), 2);
        assert!(crate::operator::max_abs(&(unitary(&c.layers, 2) - unitary(&d.layers, 2))) < 1e-12);
    }

    #[test]
    fn no_swaps_unchanged() {
        let layers = vec![Layer { tag: LayerTag::Entangle, gates: vec![Gate::Cz(q(0), q(1))] }];
        let c = bare(layers.clone(), 2);
        assert_eq!(decompose_swaps(&c).layers, layers);
    }

    #[test]
    fn greedy_schedule_is_first_fit() {
        let layers = schedule(vec![Gate::Cz(q(0), q(1)), Gate::Cz(q(2), q(3)), Gate::Cz(q(1), q(2)), Gate::Cz(q(0), q(3))], LayerTag::Entangle);
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].gates.len(), 2);
    }

    #[test]
    fn gate_json_round_trip() {
        let gates = vec![
            Gate::Ccz(q(0), q(1), q(2)),
            Gate::MeasPauli { site: QubitId::vertex(0), paulis: vec![(q(0), Pauli::Z), (q(3), Pauli::X)] },
            Gate::Tminus(QubitId::vertex(2)),
        ];
        let s = serde_json::to_string(&gates).unwrap();
        assert!(s.contains("\"kind\":\"ccz\""));
        let back: Vec<Gate> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, gates);
        assert!(serde_json::from_str::<Gate>(r#"{"kind":"cz","qubits":["e0"]}"#).is_err());
        assert!(serde_json::from_str::<Gate>(r#"{"kind":"measx","qubits":["e0","e1"]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn gate3() -> impl Strategy<Value = Gate> {
            (0usize..4, 0usize..3, 0usize..3).prop_filter_map("distinct", |(k, a, b)| match k {
                0 => Some(Gate::H(q(a))),
                1 if a != b => Some(Gate::Cz(q(a), q(b))),
                2 if a != b => Some(Gate::Swap(q(a), q(b))),
                3 => Some(Gate::Tplus(q(a))),
                _ => None,
            })
        }

        proptest! {
            #[test]
            fn decomposition_preserves_unitary(gates in prop::collection::vec(gate3(), 1..12)) {
                let layers = schedule(gates, LayerTag::Entangle);
                let c = bare(layers, 3);
                let d = decompose_swaps(&c);
                d.validate().unwrap();
                prop_assert_eq!(d.count(GateKind::Swap), 0);
                let (a, b) = (unitary(&c.layers, 3), unitary(&d.layers, 3));
                // Fix the global phase on the largest entry.
                let (mut r, mut cc, mut best) = (0, 0, 0.0);
                for i in 0..8 { for j in 0..8 { if a[(i, j)].norm() > best { best = a[(i, j)].norm(); r = i; cc = j; } } }
                let ph = b[(r, cc)] / a[(r, cc)];
                prop_assert!(crate::operator::max_abs(&(a * ph - b)) < 1e-12);
            }
        }
    }
}
