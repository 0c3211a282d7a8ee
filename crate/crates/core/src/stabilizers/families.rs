//! Family constructors. Each stage is obtained from the previous one by
//! conjugating through that stage's gates; measurements substitute outcomes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use super::ring::{eval_polynomial, fit_wall_form, WallForm};
use super::{Member, StabilizerFamily, Stage};
use crate::circuit::{build_d4_protocol_with, Circuit, LatticeRef, Layer, LayerTag, Protocol};
use crate::error::{Error, Result};
use crate::lattice::{HoneycombTorus, QubitId, Role, SquareTorus, Sublattice, TriangleOrientation};
use crate::operator::{Factor, OperatorExpr, Pauli, PauliSum, ONE};
use crate::sim::MeasurementRecord;

/// Which recorded outcomes multiply into the sign of `A_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeSigns {
    /// `x_p · Π_{v ∈ p} x_v` (vertex-measurement route).
    PlaquetteAndVertices,
    /// `x_p` alone (hypergraph routes, which measure no vertices).
    PlaquetteOnly,
}

fn pq(p: usize) -> QubitId {
    QubitId::plaquette(p)
}
fn vq(v: usize) -> QubitId {
    QubitId::vertex(v)
}
fn eq(e: usize) -> QubitId {
    QubitId::edge(e)
}

fn sum_member(name: String, sum: &PauliSum, expected: f64) -> Member {
    Member { name, expr: sum.to_expr(), expected }
}

fn hadamard_image(q: QubitId, p: Pauli) -> PauliSum {
    match p {
        Pauli::X => PauliSum::single(q, Pauli::Z),
        Pauli::Z => PauliSum::single(q, Pauli::X),
        Pauli::Y => PauliSum::single(q, Pauli::Y).scale(-ONE),
    }
}

/// `T(θ) P T(θ)†` for `T(θ) = diag(1, e^{iθ})`.
fn phase_gate_image(q: QubitId, p: Pauli, theta: f64) -> PauliSum {
    let (c, s) = (Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0));
    match p {
        Pauli::X => PauliSum::single(q, Pauli::X).scale(c).add(&PauliSum::single(q, Pauli::Y).scale(s)),
        Pauli::Y => PauliSum::single(q, Pauli::Y).scale(c).add(&PauliSum::single(q, Pauli::X).scale(-s)),
        Pauli::Z => PauliSum::single(q, Pauli::Z),
    }
}

/// Conjugation through a set of commuting CZs given as partner lists.
fn cz_image(partners: &BTreeMap<QubitId, Vec<QubitId>>, q: QubitId, p: Pauli) -> Option<PauliSum> {
    let ps = partners.get(&q)?;
    if p == Pauli::Z {
        return None;
    }
    let mut out = PauliSum::single(q, p);
    for &r in ps {
        out = out.mul(&PauliSum::single(r, Pauli::Z));
    }
    Some(out)
}

fn heavy_hex_partners(lat: &HoneycombTorus) -> BTreeMap<QubitId, Vec<QubitId>> {
    let mut m: BTreeMap<QubitId, Vec<QubitId>> = BTreeMap::new();
    for (v, e) in lat.heavy_hex_pairs() {
        m.entry(vq(v)).or_default().push(eq(e));
        m.entry(eq(e)).or_default().push(vq(v));
    }
    m
}

fn rotation_angle(lat: &HoneycombTorus, v: usize, sign_swap: bool) -> f64 {
    let red = lat.vertices[v].sublattice == Sublattice::Red;
    if red != sign_swap {
        -FRAC_PI_4
    } else {
        FRAC_PI_4
    }
}

fn outcome(record: &MeasurementRecord, q: QubitId) -> Result<f64> {
    Ok(record.get(q)? as f64)
}

/// Cluster stabilizers `X_q Π Z_neighbours` on the plaquette–vertex graph.
pub fn dice_cluster_family(lat: &HoneycombTorus) -> StabilizerFamily {
    let mut members = Vec::new();
    for (p, plaq) in lat.plaquettes.iter().enumerate() {
        let mut ops = vec![(pq(p), Pauli::X)];
        ops.extend(plaq.ring_vertices.iter().map(|&v| (vq(v), Pauli::Z)));
        members.push(sum_member(format!("K_{}", pq(p)), &PauliSum::string(ONE, &ops), 1.0));
    }
    for (v, vert) in lat.vertices.iter().enumerate() {
        let mut ops = vec![(vq(v), Pauli::X)];
        ops.extend(vert.plaquettes.iter().map(|&p| (pq(p), Pauli::Z)));
        members.push(sum_member(format!("K_{}", vq(v)), &PauliSum::string(ONE, &ops), 1.0));
    }
    StabilizerFamily { stage: Stage::DiceCluster, members }
}

/// Colour-code stage as Pauli sums: `(A_p, B_p)` per plaquette, with the
/// expected sign of `A_p`.
fn color_code_sums(lat: &HoneycombTorus, record: &MeasurementRecord) -> Result<Vec<(PauliSum, f64, PauliSum)>> {
    let cluster = |q: QubitId, nbrs: Vec<QubitId>| {
        let mut ops = vec![(q, Pauli::X)];
        ops.extend(nbrs.into_iter().map(|n| (n, Pauli::Z)));
        PauliSum::string(ONE, &ops)
    };
    let plaquettes: Vec<QubitId> = (0..lat.n_plaquettes()).map(pq).collect();
    let mut out = Vec::new();
    for (p, plaq) in lat.plaquettes.iter().enumerate() {
        let xp = outcome(record, pq(p))?;
        // The measured plaquette's X becomes its outcome.
        let kp = cluster(pq(p), plaq.ring_vertices.iter().map(|&v| vq(v)).collect());
        let a = kp.substitute(&plaquettes, Pauli::X, &|_| 1.0)?;
        // Around a plaquette the vertex generators' Z tails cancel in pairs.
        let mut b = PauliSum::scalar(ONE);
        for &v in &plaq.ring_vertices {
            b = b.mul(&cluster(vq(v), lat.vertices[v].plaquettes.iter().map(|&p| pq(p)).collect()));
        }
        if b.qubits().iter().any(|q| q.role == Role::Plaquette) {
            return Err(Error::Invalid(format!("vertex product around {} keeps plaquette factors", pq(p))));
        }
        out.push((a, xp, b));
    }
    Ok(out)
}

/// After the plaquette measurement: `A_p = x_p Π Z_v`, `B_p = Π X_v`.
pub fn color_code_family(lat: &HoneycombTorus, record: &MeasurementRecord) -> Result<StabilizerFamily> {
    let mut members = Vec::new();
    for (p, (a, xp, b)) in color_code_sums(lat, record)?.into_iter().enumerate() {
        members.push(sum_member(format!("A_{}", pq(p)), &a, xp));
        members.push(sum_member(format!("B_{}", pq(p)), &b, 1.0));
    }
    Ok(StabilizerFamily { stage: Stage::ColorCode, members })
}

fn rotate(lat: &HoneycombTorus, s: &PauliSum, sign_swap: bool) -> PauliSum {
    let after_h = s.conjugate_local(&|q, p| (q.role == Role::Vertex).then(|| hadamard_image(q, p)));
    after_h.conjugate_local(&|q, p| (q.role == Role::Vertex).then(|| phase_gate_image(q, p, rotation_angle(lat, q.idx(), sign_swap))))
}

fn rotated_sums(lat: &HoneycombTorus, record: &MeasurementRecord, sign_swap: bool) -> Result<Vec<(PauliSum, f64, PauliSum)>> {
    Ok(color_code_sums(lat, record)?
        .into_iter()
        .map(|(a, xp, b)| (rotate(lat, &a, sign_swap), xp, rotate(lat, &b, sign_swap)))
        .collect())
}

/// After the vertex rotation: `Ã_p = x_p Π (X ± Y)/√2`, `B̃_p = Π Z_v`.
pub fn rotated_family(lat: &HoneycombTorus, record: &MeasurementRecord, sign_swap: bool) -> Result<StabilizerFamily> {
    let mut members = Vec::new();
    for (p, (a, xp, b)) in rotated_sums(lat, record, sign_swap)?.into_iter().enumerate() {
        members.push(sum_member(format!("A_{}", pq(p)), &a, xp));
        members.push(sum_member(format!("B_{}", pq(p)), &b, 1.0));
    }
    Ok(StabilizerFamily { stage: Stage::Rotated, members })
}

struct Gauged {
    a: Vec<(PauliSum, f64)>,
    b: Vec<PauliSum>,
    d: Vec<PauliSum>,
}

fn gauged_sums(lat: &HoneycombTorus, record: &MeasurementRecord, sign_swap: bool) -> Result<Gauged> {
    let partners = heavy_hex_partners(lat);
    let img = |q: QubitId, p: Pauli| cz_image(&partners, q, p);
    let mut g = Gauged { a: Vec::new(), b: Vec::new(), d: Vec::new() };
    for (a, xp, b) in rotated_sums(lat, record, sign_swap)? {
        g.a.push((a.conjugate_local(&img), xp));
        g.b.push(b.conjugate_local(&img));
    }
    for e in 0..lat.n_edges() {
        g.d.push(PauliSum::single(eq(e), Pauli::X).conjugate_local(&img));
    }
    Ok(g)
}

/// After the vertex–edge CZs: `Ã_p C_p`, `B̃_p`, and `D_e = Z_v X_e Z_v'`.
pub fn gauged_family(lat: &HoneycombTorus, record: &MeasurementRecord, sign_swap: bool) -> Result<StabilizerFamily> {
    let g = gauged_sums(lat, record, sign_swap)?;
    let mut members = Vec::new();
    for (p, ((a, xp), b)) in g.a.iter().zip(&g.b).enumerate() {
        members.push(sum_member(format!("A_{}", pq(p)), a, *xp));
        members.push(sum_member(format!("B_{}", pq(p)), b, 1.0));
    }
    for (e, d) in g.d.iter().enumerate() {
        members.push(sum_member(format!("D_{}", eq(e)), d, 1.0));
    }
    Ok(StabilizerFamily { stage: Stage::Gauged, members })
}

/// Final-stage plaquette operator, factored as
/// `edge string · CZ/Z factors on the ring edges`.
struct FinalA {
    /// Pauli string on edges after the final Hadamard, with its sign.
    edge_part: Vec<(QubitId, Pauli)>,
    edge_sign: f64,
    form: WallForm,
}

/// Push one gauged `Ã_p C_p` through the vertex measurement and Hadamard.
///
/// 1. Write every term as `c · (edge string) · Π_n X_n · Π_{n∈S} Z_n` over the
///    ring vertices (`Y = iXZ`), collecting `g_S`.
/// 2. Keep the part compatible with `B̃_p = Π Z_n = 1`:
///    `h_S = (g_S + g_{S^c})/2`; terms odd in the vertices must cancel.
/// 3. `h` is then a flip-invariant `±1` function of the ring spins; rewrite
///    it in the walls `Z_n Z_{n+1}`, which the state equates with the ring
///    edge `X_{n,n+1}` (from `D_e = 1`).
/// 4. The vertex `X_n` become outcomes; the Hadamard maps the edge `X`s to
///    `Z`s, turning wall products into CZs.
fn derive_final_a(lat: &HoneycombTorus, p: usize, gauged_a: &PauliSum) -> Result<FinalA> {
    let ring: Vec<QubitId> = lat.plaquettes[p].ring_vertices.iter().map(|&v| vq(v)).collect();
    let mut g = [Complex64::new(0.0, 0.0); 64];
    let mut edge_part: Option<Vec<(QubitId, Pauli)>> = None;
    for (key, &c) in &gauged_a.terms {
        let mut coeff = c;
        let mut mask = 0u8;
        let mut seen = 0u8;
        let mut edges = Vec::new();
        for &(q, pauli) in key {
            match q.role {
                Role::Edge => edges.push((q, pauli)),
                Role::Vertex => {
                    let n = ring.iter().position(|&r| r == q).ok_or_else(|| Error::Invalid(format!("{q} is not on the ring of {}", pq(p))))?;
                    seen |= 1 << n;
                    match pauli {
                        Pauli::X => {}
                        Pauli::Y => {
                            coeff *= Complex64::new(0.0, 1.0);
                            mask |= 1 << n;
                        }
                        Pauli::Z => return Err(Error::Invalid("vertex factor without X part".into())),
                    }
                }
                Role::Plaquette => return Err(Error::Invalid("plaquette factor after measurement".into())),
            }
        }
        if seen != 0x3f {
            return Err(Error::Invalid(format!("term of A_{} misses ring vertices", pq(p))));
        }
        match &edge_part {
            None => edge_part = Some(edges),
            Some(prev) if *prev == edges => {}
            Some(_) => return Err(Error::Invalid("edge factors differ between terms".into())),
        }
        g[mask as usize] += coeff;
    }
    let mut h = [Complex64::new(0.0, 0.0); 64];
    for s in 0..64usize {
        let pair = (g[s] + g[s ^ 0x3f]) / 2.0;
        if (s as u32).count_ones() % 2 == 1 {
            if pair.norm() > 1e-12 {
                return Err(Error::Invalid("vertex-odd terms survive the projection".into()));
            }
        } else {
            h[s] = pair;
        }
    }
    let phi = |sigma: u8| eval_polynomial(&h, sigma);
    let form = fit_wall_form(&phi, &|sigma| sigma.count_ones() % 2 == 0)?;
    let mut edge_sign = 1.0;
    let edge_part = edge_part
        .unwrap_or_default()
        .into_iter()
        .map(|(q, pauli)| match pauli {
            Pauli::X => (q, Pauli::Z),
            Pauli::Z => (q, Pauli::X),
            Pauli::Y => {
                edge_sign = -edge_sign;
                (q, Pauli::Y)
            }
        })
        .collect();
    Ok(FinalA { edge_part, edge_sign, form })
}

fn wall_factors(form: &WallForm, walls: &[QubitId; 6]) -> Vec<Factor> {
    let mut fs: Vec<Factor> = form.couplings().into_iter().map(|(j, k)| Factor::Cz(walls[j], walls[k])).collect();
    fs.extend((0..6).filter(|n| form.b >> n & 1 == 1).map(|n| Factor::Z(walls[n])));
    fs
}

/// `B̃_p · D_{e_a} D_{e_b} D_{e_c}` over alternate ring edges, then Hadamard.
fn derive_b(lat: &HoneycombTorus, p: usize, b: &PauliSum, d: &[PauliSum], offset: usize) -> Result<PauliSum> {
    let mut acc = b.clone();
    for k in [offset, offset + 2, offset + 4] {
        acc = acc.mul(&d[lat.plaquettes[p].ring_edges[k]]);
    }
    if acc.qubits().iter().any(|q| q.role != Role::Edge) {
        return Err(Error::Invalid(format!("B product for {} keeps vertex factors", pq(p))));
    }
    Ok(acc.conjugate_local(&|q, pauli| Some(hadamard_image(q, pauli))))
}

fn final_members(lat: &HoneycombTorus, record: &MeasurementRecord, sign_swap: bool, signs: OutcomeSigns) -> Result<Vec<(Member, Member, Member)>> {
    // The gauged family's signs only involve plaquette outcomes; vertex
    // outcomes enter below.
    let g = gauged_sums(lat, record, sign_swap)?;
    let mut out = Vec::new();
    for (p, plaq) in lat.plaquettes.iter().enumerate() {
        let (a, xp) = &g.a[p];
        let fa = derive_final_a(lat, p, a)?;
        let mut sign = *xp * fa.edge_sign * if fa.form.negate { -1.0 } else { 1.0 };
        if signs == OutcomeSigns::PlaquetteAndVertices {
            for &v in &plaq.ring_vertices {
                sign *= outcome(record, vq(v))?;
            }
        }
        let walls = plaq.ring_edges.map(eq);
        let mut factors: Vec<Factor> = fa.edge_part.iter().map(|&(q, pauli)| Factor::pauli(pauli, q)).collect();
        factors.extend(wall_factors(&fa.form, &walls));
        let am = Member { name: format!("A_{}", pq(p)), expr: OperatorExpr::product(ONE, factors), expected: sign };
        let b1 = derive_b(lat, p, &g.b[p], &g.d, 0)?;
        let b2 = derive_b(lat, p, &g.b[p], &g.d, 1)?;
        out.push((
            am,
            sum_member(format!("B1_{}", pq(p)), &b1, 1.0),
            sum_member(format!("B2_{}", pq(p)), &b2, 1.0),
        ));
    }
    Ok(out)
}

/// Final honeycomb family `{A_p, B¹_p, B²_p}` for the vertex-measurement
/// route with the standard rotation signs.
pub fn d4_family(lat: &HoneycombTorus, record: &MeasurementRecord) -> Result<StabilizerFamily> {
    d4_family_with(lat, record, false, OutcomeSigns::PlaquetteAndVertices)
}

pub fn d4_family_with(lat: &HoneycombTorus, record: &MeasurementRecord, sign_swap: bool, signs: OutcomeSigns) -> Result<StabilizerFamily> {
    let mut members = Vec::new();
    for (a, b1, b2) in final_members(lat, record, sign_swap, signs)? {
        members.extend([a, b1, b2]);
    }
    Ok(StabilizerFamily { stage: Stage::FinalD4, members })
}

/// Final family of the quaternion route: the honeycomb family (signs `x_p`)
/// with an extra factor on each `A_p` from the same-colour triangles through
/// `p`, rewritten on the leg edges joining consecutive same-colour
/// neighbours.
pub fn q8_family(lat: &HoneycombTorus, record: &MeasurementRecord, orientation: TriangleOrientation) -> Result<StabilizerFamily> {
    let triangles = lat.same_color_triangles(orientation)?;
    let base = final_members(lat, record, false, OutcomeSigns::PlaquetteOnly)?;
    let mut members = Vec::new();
    for (p, (mut a, b1, b2)) in base.into_iter().enumerate() {
        // Pairs (a, b) with CZ(a, b) in the gauged function of p.
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for t in &triangles {
            for k in 0..3 {
                if t[k] == p {
                    pairs.push((t[(k + 1) % 3], t[(k + 2) % 3]));
                }
            }
        }
        let ring = lat.same_color_neighbours(p);
        let mut distinct = ring.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() == 6 && !distinct.contains(&p) {
            let slot = |x: usize| ring.iter().position(|&r| r == x).expect("triangle partner is a same-colour neighbour");
            let phi = |sigma: u8| {
                let parity: u32 = pairs.iter().map(|&(x, y)| (sigma >> slot(x) & sigma >> slot(y) & 1) as u32).sum();
                Complex64::new(if parity % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            };
            let form = fit_wall_form(&phi, &|_| true)?;
            let mut walls = [eq(0); 6];
            for k in 0..6 {
                walls[k] = eq(connecting_leg(lat, ring[k], ring[(k + 1) % 6])?);
            }
            if form.negate {
                a.expected = -a.expected;
            }
            let extra = wall_factors(&form, &walls);
            for t in &mut a.expr.terms {
                t.factors.extend(extra.iter().copied());
            }
        } else {
            // On small tori the same-colour ring folds onto itself; the
            // function must then be constant.
            let vars: Vec<usize> = {
                let mut v: Vec<usize> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            if vars.len() > 16 {
                return Err(Error::SupportTooLarge { size: vars.len(), limit: 16 });
            }
            let value = |assign: u32| {
                let bit = |x: usize| assign >> vars.iter().position(|&v| v == x).unwrap() & 1;
                pairs.iter().map(|&(x, y)| bit(x) & bit(y)).sum::<u32>() % 2
            };
            let v0 = value(0);
            if (0..1u32 << vars.len()).any(|s| value(s) != v0) {
                return Err(Error::Invalid(format!("same-colour ring of {} is degenerate on this torus", pq(p))));
            }
            if v0 == 1 {
                a.expected = -a.expected;
            }
        }
        members.extend([a, b1, b2]);
    }
    Ok(StabilizerFamily { stage: Stage::FinalQ8, members })
}

/// The unique edge radiating from both `a` and `b`.
fn connecting_leg(lat: &HoneycombTorus, a: usize, b: usize) -> Result<usize> {
    let found: Vec<usize> = (0..lat.n_edges())
        .filter(|&e| {
            let l = lat.edges[e].leg_of;
            (l[0] == a && l[1] == b) || (l[0] == b && l[1] == a)
        })
        .collect();
    match found.as_slice() {
        [e] => Ok(*e),
        _ => Err(Error::Invalid(format!("{} edges join {} and {}", found.len(), pq(a), pq(b)))),
    }
}

/// Toric code: `A_v = Π Z` around each site with sign `x_v`, `B_f = Π X`
/// around each face.
pub fn toric_family(l: usize, record: &MeasurementRecord) -> Result<StabilizerFamily> {
    let sq = SquareTorus::new(l)?;
    let mut members = Vec::new();
    for s in 0..sq.n_sites() {
        let ops: Vec<(Pauli, QubitId)> = sq.star(s).iter().map(|&e| (Pauli::Z, eq(e))).collect();
        members.push(Member { name: format!("A_{}", vq(s)), expr: OperatorExpr::paulis(ONE, &ops), expected: outcome(record, vq(s))? });
    }
    for s in 0..sq.n_sites() {
        let ops: Vec<(Pauli, QubitId)> = sq.face(s).iter().map(|&e| (Pauli::X, eq(e))).collect();
        members.push(Member { name: format!("B_f{s}"), expr: OperatorExpr::paulis(ONE, &ops), expected: 1.0 });
    }
    Ok(StabilizerFamily { stage: Stage::Toric, members })
}

/// The final family appropriate to a circuit's protocol.
pub fn family_for(c: &Circuit, record: &MeasurementRecord) -> Result<StabilizerFamily> {
    match (c.protocol, c.lattice) {
        (Protocol::Toric, LatticeRef::Square { l }) => toric_family(l, record),
        (Protocol::D4 | Protocol::D4Grid | Protocol::D4GridNative, LatticeRef::Honeycomb { l1, l2 }) => {
            d4_family_with(&HoneycombTorus::new(l1, l2)?, record, c.sign_swap, OutcomeSigns::PlaquetteAndVertices)
        }
        (Protocol::D4Spt, LatticeRef::Honeycomb { l1, l2 }) => {
            d4_family_with(&HoneycombTorus::new(l1, l2)?, record, false, OutcomeSigns::PlaquetteOnly)
        }
        (Protocol::Q8Spt, LatticeRef::Honeycomb { l1, l2 }) => {
            q8_family(&HoneycombTorus::new(l1, l2)?, record, c.orientation.unwrap_or(TriangleOrientation::Both))
        }
        _ => Err(Error::WrongProtocol(format!("{} on {:?}", c.protocol.name(), c.lattice))),
    }
}

/// The honeycomb circuit cut after a stage, with only that stage's
/// measurements: plaquettes from the colour-code stage on, vertices and the
/// edge frame only in the final stage. Edges join only once they are
/// entangled.
pub fn d4_stage_circuit(lat: &HoneycombTorus, stage: Stage, sign_swap: bool) -> Result<Circuit> {
    if !matches!(stage, Stage::DiceCluster | Stage::ColorCode | Stage::Rotated | Stage::Gauged | Stage::FinalD4) {
        return Err(Error::WrongProtocol(format!("no honeycomb stage {stage:?}")));
    }
    let full = build_d4_protocol_with(lat, sign_swap);
    let mut layers: Vec<Layer> = Vec::new();
    let mut after_rotation = false;
    for layer in &full.layers {
        let keep = match layer.tag {
            LayerTag::Entangle => !after_rotation || stage >= Stage::Gauged,
            LayerTag::Rotation => {
                after_rotation = true;
                stage >= Stage::Rotated
            }
            LayerTag::Measure => stage >= Stage::ColorCode,
            LayerTag::Frame => stage == Stage::FinalD4,
            _ => true,
        };
        if !keep {
            continue;
        }
        if layer.tag == LayerTag::Measure && stage != Stage::FinalD4 {
            let gates = layer.gates.iter().filter(|g| g.support()[0].role == Role::Plaquette).cloned().collect();
            layers.push(Layer { tag: LayerTag::Measure, gates });
        } else {
            layers.push(layer.clone());
        }
    }
    let mut qubits = full.qubits.clone();
    if stage < Stage::Gauged {
        qubits.retain(|q| q.role != Role::Edge);
    }
    Ok(Circuit { layers, qubits, ..full })
}
