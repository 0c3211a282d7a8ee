//! Entanglement diagnostics on prepared states: region entropies, the
//! three-region topological entropy, entropy shifts from inserted vertex
//! charges, and per-plaquette excitation maps.
//!
//! All entropies are in bits, so a quantum dimension `d` shows up as
//! `log₂ d` (one bit for `d = 2`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::circuit::{insert_vertex_z, Circuit};
use crate::error::{Error, Result};
use crate::lattice::{HoneycombTorus, QubitId};
use crate::sim::{run, MeasurementRecord, Real, RunOptions, StateVector, MAX_RDM_QUBITS};
use crate::stabilizers::{joint_eigenspace_dimension, StabilizerFamily};

/// A named set of qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub qubits: Vec<QubitId>,
}

impl Region {
    pub fn new(name: impl Into<String>, qubits: impl IntoIterator<Item = QubitId>) -> Result<Self> {
        let name = name.into();
        let mut qubits: Vec<QubitId> = qubits.into_iter().collect();
        let n = qubits.len();
        qubits.sort_unstable();
        qubits.dedup();
        if qubits.len() != n {
            return Err(Error::Invalid(format!("region {name} lists a qubit twice")));
        }
        Ok(Region { name, qubits })
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        let a: BTreeSet<_> = self.qubits.iter().collect();
        other.qubits.iter().all(|q| !a.contains(q))
    }

    /// Union of disjoint regions, named by joining their names.
    pub fn union(parts: &[&Region]) -> Result<Region> {
        let name = parts.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join("");
        Region::new(name, parts.iter().flat_map(|r| r.qubits.iter().copied()))
    }

    /// Edges named in a compact description, parts joined by `+`: `e<k>` is
    /// edge (or link) `k`; on a honeycomb, `r<p>` is the ring of plaquette
    /// `p` and `s<p>` its ring and legs.
    pub fn parse(name: &str, desc: &str, lat: Option<&HoneycombTorus>) -> Result<Region> {
        let mut set = BTreeSet::new();
        for part in desc.split('+').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || Error::Format(format!("bad region part {part:?}"));
            let (kind, idx) = part.split_at_checked(1).ok_or_else(bad)?;
            let idx: usize = idx.parse().map_err(|_| bad())?;
            match (kind, lat) {
                ("e", _) => {
                    set.insert(idx);
                }
                ("r" | "s", Some(lat)) => {
                    let p = lat.plaquettes.get(idx).ok_or_else(|| Error::Format(format!("no plaquette {idx}")))?;
                    set.extend(p.ring_edges);
                    if kind == "s" {
                        set.extend(p.legs);
                    }
                }
                ("r" | "s", None) => return Err(Error::Invalid(format!("region part {part:?} needs a honeycomb lattice"))),
                _ => return Err(bad()),
            }
        }
        Region::new(name, set.into_iter().map(QubitId::edge))
    }
}

/// Three pairwise disjoint regions meeting at a junction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpPartition {
    pub a: Region,
    pub b: Region,
    pub c: Region,
}

impl KpPartition {
    pub fn new(a: Region, b: Region, c: Region) -> Result<Self> {
        if !a.is_disjoint(&b) || !b.is_disjoint(&c) || !c.is_disjoint(&a) {
            return Err(Error::Invalid("partition regions overlap".into()));
        }
        Ok(KpPartition { a, b, c })
    }

    /// The seven unions with their signs in `S_A + S_B + S_C − S_AB − S_BC − S_CA + S_ABC`.
    pub fn terms(&self) -> Result<Vec<(Region, f64)>> {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        Ok(vec![
            (a.clone(), 1.0),
            (b.clone(), 1.0),
            (c.clone(), 1.0),
            (Region::union(&[a, b])?, -1.0),
            (Region::union(&[b, c])?, -1.0),
            (Region::union(&[c, a])?, -1.0),
            (Region::union(&[a, b, c])?, 1.0),
        ])
    }
}

/// Entropy of `region` in bits. The reduced density matrix is built on the
/// smaller side of the cut, which must hold at most 14 qubits.
pub fn entropy<T: Real>(state: &StateVector<T>, region: &Region) -> Result<f64> {
    let other = state.n_live() - region.len().min(state.n_live());
    if region.len().min(other) > MAX_RDM_QUBITS {
        return Err(Error::RegionTooLarge { size: region.len().min(other), limit: MAX_RDM_QUBITS });
    }
    Ok(state.entropy(&region.qubits)?.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub region: String,
    pub size: usize,
    pub entropy_bits: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub rows: Vec<EntropyRow>,
}

impl EntropyReport {
    pub fn measure<T: Real>(state: &StateVector<T>, regions: &[Region]) -> Result<Self> {
        let rows = regions
            .iter()
            .map(|r| Ok(EntropyRow { region: r.name.clone(), size: r.len(), entropy_bits: entropy(state, r)? }))
            .collect::<Result<_>>()?;
        Ok(EntropyReport { rows })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpReport {
    pub regions: [String; 3],
    pub entropies: Vec<EntropyRow>,
    /// `S_A + S_B + S_C − S_AB − S_BC − S_CA + S_ABC`, i.e. `−γ`.
    pub combination: f64,
    pub gamma_bits: f64,
}

impl KpReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Topological entropy `γ` (bits) from a three-region partition.
pub fn kitaev_preskill<T: Real>(state: &StateVector<T>, part: &KpPartition) -> Result<KpReport> {
    let mut entropies = Vec::with_capacity(7);
    let mut combination = 0.0;
    for (r, sign) in part.terms()? {
        let s = entropy(state, &r)?;
        combination += sign * s;
        entropies.push(EntropyRow { region: r.name.clone(), size: r.len(), entropy_bits: s });
    }
    Ok(KpReport {
        regions: [part.a.name.clone(), part.b.name.clone(), part.c.name.clone()],
        entropies,
        combination,
        gamma_bits: -combination,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub region: String,
    pub size: usize,
    pub baseline_bits: f64,
    pub inserted_bits: f64,
    pub delta_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub vertices: Vec<QubitId>,
    pub rows: Vec<ShiftRow>,
}

impl ShiftReport {
    pub fn row(&self, region: &str) -> Option<&ShiftRow> {
        self.rows.iter().find(|r| r.region == region)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Entropy change of each region between two states of the same qubits.
pub fn entropy_shift_states<T: Real>(baseline: &StateVector<T>, inserted: &StateVector<T>, vertices: &BTreeSet<QubitId>, regions: &[Region]) -> Result<ShiftReport> {
    let rows = regions
        .iter()
        .map(|r| {
            let (s0, s1) = (entropy(baseline, r)?, entropy(inserted, r)?);
            Ok(ShiftRow { region: r.name.clone(), size: r.len(), baseline_bits: s0, inserted_bits: s1, delta_bits: s1 - s0 })
        })
        .collect::<Result<_>>()?;
    Ok(ShiftReport { vertices: vertices.iter().copied().collect(), rows })
}

/// Run `c` and its vertex-Z variant with the same forced record and compare
/// region entropies. The Z gates sit just before the rotation layer.
pub fn anyon_entropy_shift<T: Real>(
    c: &Circuit,
    baseline: &MeasurementRecord,
    vertices: &BTreeSet<QubitId>,
    regions: &[Region],
    opts: &RunOptions,
) -> Result<ShiftReport> {
    let forced = RunOptions { policy: baseline.as_policy(), ..opts.clone() };
    let base = run::<T>(c, &forced)?;
    let inserted = run::<T>(&insert_vertex_z(c, vertices)?, &forced)?;
    entropy_shift_states(&base.state, &inserted.state, vertices, regions)
}

/// `⟨A⟩` for every plaquette-type member `A_<site>`, keyed by site label.
/// Values are reported raw: charges with `d > 1` push `⟨A⟩` toward 0, abelian
/// ones toward −1.
pub fn locate_excitations<T: Real>(state: &StateVector<T>, family: &StabilizerFamily) -> Result<BTreeMap<String, f64>> {
    family
        .members
        .iter()
        .filter_map(|m| m.name.strip_prefix("A_").map(|site| (site, m)))
        .map(|(site, m)| Ok((site.to_string(), m.expected * state.expectation(&m.expr)?.re)))
        .collect()
}

/// Sites whose `⟨A⟩` is below `threshold`.
pub fn excited_sites(map: &BTreeMap<String, f64>, threshold: f64) -> Vec<String> {
    map.iter().filter(|(_, &v)| v < threshold).map(|(k, _)| k.clone()).collect()
}

/// Dimension of the joint `+1` eigenspace of `family` on `qubits`.
pub fn ground_space_dimension(family: &StabilizerFamily, qubits: &[QubitId]) -> Result<usize> {
    joint_eigenspace_dimension(family, qubits)
}

/// Region choices per lattice, shipped in `data/regions.json`.
pub const REGION_CATALOG: &str = include_str!("../data/regions.json");

/// A vertex-Z pair and the regions used to probe it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSetup {
    pub l1: usize,
    pub l2: usize,
    pub vertices: Vec<usize>,
    /// Plaquettes expected to carry the charges.
    pub excited: Vec<String>,
    pub one_inside: String,
    pub both_inside: String,
    pub note: String,
}

impl ShiftSetup {
    pub fn vertex_set(&self) -> BTreeSet<QubitId> {
        self.vertices.iter().map(|&v| QubitId::vertex(v)).collect()
    }

    pub fn regions(&self, lat: &HoneycombTorus) -> Result<[Region; 2]> {
        Ok([Region::parse("one_inside", &self.one_inside, Some(lat))?, Region::parse("both_inside", &self.both_inside, Some(lat))?])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpSetup {
    /// `square` (toric code, `l1 = l2 = L`) or `honeycomb`.
    pub lattice: String,
    pub l1: usize,
    pub l2: usize,
    pub a: String,
    pub b: String,
    pub c: String,
    pub note: String,
}

impl KpSetup {
    pub fn partition(&self) -> Result<KpPartition> {
        let lat = match self.lattice.as_str() {
            "honeycomb" => Some(HoneycombTorus::new(self.l1, self.l2)?),
            "square" => None,
            other => return Err(Error::Format(format!("unknown lattice kind {other:?}"))),
        };
        KpPartition::new(
            Region::parse("A", &self.a, lat.as_ref())?,
            Region::parse("B", &self.b, lat.as_ref())?,
            Region::parse("C", &self.c, lat.as_ref())?,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCatalog {
    pub shift: Vec<ShiftSetup>,
    pub kp: Vec<KpSetup>,
}

impl RegionCatalog {
    pub fn builtin() -> Self {
        serde_json::from_str(REGION_CATALOG).expect("bundled region catalog parses")
    }

    pub fn shift_setup(&self, l1: usize, l2: usize) -> Option<&ShiftSetup> {
        self.shift.iter().find(|s| (s.l1, s.l2) == (l1, l2))
    }

    pub fn kp_setups<'a>(&'a self, lattice: &'a str, l1: usize, l2: usize) -> impl Iterator<Item = &'a KpSetup> + 'a {
        self.kp.iter().filter(move |k| k.lattice == lattice && (k.l1, k.l2) == (l1, l2))
    }
}
