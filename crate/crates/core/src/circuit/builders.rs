use std::collections::BTreeMap;

use super::{decompose_swaps, schedule, Circuit, Gate, LatticeRef, Layer, LayerTag, Protocol};
use crate::error::{Error, Result};
use crate::grid::SquareGridEmbedding;
use crate::lattice::{EdgeKind, HoneycombTorus, QubitId, SquareTorus, Sublattice, TriangleOrientation};
use crate::operator::Pauli;

fn honeycomb_qubits(lat: &HoneycombTorus, with_vertices: bool) -> Vec<QubitId> {
    let mut qs: Vec<QubitId> = Vec::new();
    if with_vertices {
        qs.extend((0..lat.n_vertices()).map(QubitId::vertex));
    }
    qs.extend((0..lat.n_edges()).map(QubitId::edge));
    qs.extend((0..lat.n_plaquettes()).map(QubitId::plaquette));
    qs
}

fn honeycomb_ref(lat: &HoneycombTorus) -> LatticeRef {
    LatticeRef::Honeycomb { l1: lat.l1, l2: lat.l2 }
}

fn rotation_layers(lat: &HoneycombTorus, site: impl Fn(usize) -> QubitId, sign_swap: bool) -> Vec<Layer> {
    let h = Layer { tag: LayerTag::Rotation, gates: (0..lat.n_vertices()).map(|v| Gate::H(site(v))).collect() };
    let t = Layer {
        tag: LayerTag::Rotation,
        gates: (0..lat.n_vertices())
            .map(|v| {
                let red = lat.vertices[v].sublattice == Sublattice::Red;
                if red != sign_swap {
                    Gate::Tminus(site(v))
                } else {
                    Gate::Tplus(site(v))
                }
            })
            .collect(),
    };
    vec![h, t]
}

fn edge_frame(lat: &HoneycombTorus, site: impl Fn(usize) -> QubitId) -> Layer {
    Layer { tag: LayerTag::Frame, gates: (0..lat.n_edges()).map(|e| Gate::H(site(e))).collect() }
}

/// Toric code on an `L×L` square torus: measure every star `Π Z` on `|+⟩`.
pub fn build_toric_code_protocol(l: usize) -> Result<Circuit> {
    let sq = SquareTorus::new(l)?;
    let stars = (0..sq.n_sites()).map(|s| Gate::MeasPauli {
        site: QubitId::vertex(s),
        paulis: sq.star(s).iter().map(|&e| (QubitId::edge(e), Pauli::Z)).collect(),
    });
    let layers = schedule(stars, LayerTag::Measure);
    Ok(Circuit {
        protocol: Protocol::Toric,
        lattice: LatticeRef::Square { l },
        sign_swap: false,
        orientation: None,
        qubits: (0..sq.n_links()).map(QubitId::edge).collect(),
        layers,
        final_labels: BTreeMap::new(),
        rotation_sites: BTreeMap::new(),
    })
}

/// Honeycomb protocol: dice-lattice CZs, `H` then `Tminus` (red) / `Tplus`
/// (orange) on vertices, heavy-hex CZs, X measurement of plaquettes and
/// vertices, and a final Hadamard frame on the edges.
pub fn build_d4_protocol(lat: &HoneycombTorus) -> Circuit {
    build_d4_protocol_with(lat, false)
}

pub fn build_d4_protocol_with(lat: &HoneycombTorus, sign_swap: bool) -> Circuit {
    let mut layers = schedule(
        lat.dice_pairs().into_iter().map(|(p, v)| Gate::Cz(QubitId::plaquette(p), QubitId::vertex(v))),
        LayerTag::Entangle,
    );
    layers.extend(rotation_layers(lat, QubitId::vertex, sign_swap));
    layers.extend(schedule(
        lat.heavy_hex_pairs().into_iter().map(|(v, e)| Gate::Cz(QubitId::vertex(v), QubitId::edge(e))),
        LayerTag::Entangle,
    ));
    layers.push(measure_layer(lat, QubitId::plaquette, QubitId::vertex));
    layers.push(edge_frame(lat, QubitId::edge));
    Circuit {
        protocol: Protocol::D4,
        lattice: honeycomb_ref(lat),
        sign_swap,
        orientation: None,
        qubits: honeycomb_qubits(lat, true),
        layers,
        final_labels: BTreeMap::new(),
        rotation_sites: BTreeMap::new(),
    }
}

fn measure_layer(lat: &HoneycombTorus, p_site: impl Fn(usize) -> QubitId, v_site: impl Fn(usize) -> QubitId) -> Layer {
    let mut gates: Vec<Gate> = (0..lat.n_plaquettes()).map(|p| Gate::MeasX(p_site(p))).collect();
    gates.extend((0..lat.n_vertices()).map(|v| Gate::MeasX(v_site(v))));
    Layer { tag: LayerTag::Measure, gates }
}

/// Square-grid compilation in six steps:
///
/// 1. CZ from each plaquette to ring positions 5, 6, 4 (three layers);
/// 2. SWAP plaquettes onto `E2` sites of the cell below, vertices onto their
///    `E1`/`E3` sites;
/// 3. CZ to ring positions 2, 3, 1 (three layers);
/// 4. vertex rotations, applied at the swapped sites;
/// 5. SWAP vertices back home;
/// 6. heavy-hex CZs, the first layer on the same pairs as step 5.
///
/// Physical labels are the qubits initially placed on each site. At the end
/// the logical `E2(c)` lives on the physical plaquette qubit `P(c + (0,1))`
/// and the logical plaquette `P(c)` is measured on `E2(c − (0,1))`.
pub fn build_d4_grid_protocol(lat: &HoneycombTorus, emb: &SquareGridEmbedding, native: bool) -> Result<Circuit> {
    let p = |i: isize, j: isize| QubitId::plaquette(lat.plaquette_at(i, j));
    let a = |i: isize, j: isize| QubitId::vertex(lat.vertex_at(Sublattice::Red, i, j));
    let b = |i: isize, j: isize| QubitId::vertex(lat.vertex_at(Sublattice::Orange, i, j));
    let e = |k: EdgeKind, i: isize, j: isize| QubitId::edge(lat.edge_at(k, i, j));
    let cells: Vec<(isize, isize)> = lat.plaquettes.iter().map(|pl| (pl.cell.0 as isize, pl.cell.1 as isize)).collect();

    let mut layers = Vec::new();
    // Step 1.
    let mut step1 = Vec::new();
    for class in 0..3 {
        for &(i, j) in &cells {
            let partner = match class {
                0 => a(i, j - 1),
                1 => b(i, j - 1),
                _ => b(i - 1, j - 1),
            };
            step1.push(Gate::Cz(p(i, j), partner));
        }
    }
    layers.extend(schedule(step1, LayerTag::Entangle));
    // Step 2.
    let mut swaps = Vec::new();
    for &(i, j) in &cells {
        swaps.push(Gate::Swap(p(i, j), e(EdgeKind::E2, i, j - 1)));
        swaps.push(Gate::Swap(a(i, j), e(EdgeKind::E1, i, j)));
        swaps.push(Gate::Swap(b(i, j), e(EdgeKind::E3, i, j)));
    }
    layers.push(Layer { tag: LayerTag::Swap, gates: swaps });
    // Step 3: logical P(c) sits on E2(c-(0,1)), A(c) on E1(c), B(c) on E3(c).
    let mut step3 = Vec::new();
    for class in 0..3 {
        for &(i, j) in &cells {
            let partner = match class {
                0 => e(EdgeKind::E3, i - 1, j),
                1 => e(EdgeKind::E1, i - 1, j),
                _ => e(EdgeKind::E1, i, j),
            };
            step3.push(Gate::Cz(e(EdgeKind::E2, i, j - 1), partner));
        }
    }
    layers.extend(schedule(step3, LayerTag::Entangle));
    // Step 4.
    let swapped_site = |v: usize| {
        let vert = &lat.vertices[v];
        let (i, j) = (vert.cell.0 as isize, vert.cell.1 as isize);
        match vert.sublattice {
            Sublattice::Red => e(EdgeKind::E1, i, j),
            Sublattice::Orange => e(EdgeKind::E3, i, j),
        }
    };
    layers.extend(rotation_layers(lat, swapped_site, false));
    // Step 5.
    let mut back = Vec::new();
    for &(i, j) in &cells {
        back.push(Gate::Swap(e(EdgeKind::E1, i, j), a(i, j)));
        back.push(Gate::Swap(e(EdgeKind::E3, i, j), b(i, j)));
    }
    layers.push(Layer { tag: LayerTag::Swap, gates: back });
    // Step 6: logical E2(c) sits on P(c+(0,1)).
    let e2_site = |i: isize, j: isize| p(i, j + 1);
    let mut step6 = Vec::new();
    for class in 0..3 {
        for &(i, j) in &cells {
            match class {
                0 => {
                    step6.push(Gate::Cz(a(i, j), e(EdgeKind::E1, i, j)));
                    step6.push(Gate::Cz(b(i, j), e(EdgeKind::E3, i, j)));
                }
                1 => {
                    step6.push(Gate::Cz(a(i, j), e2_site(i, j)));
                    step6.push(Gate::Cz(b(i, j), e(EdgeKind::E1, i, j + 1)));
                }
                _ => {
                    step6.push(Gate::Cz(a(i, j), e(EdgeKind::E3, i, j)));
                    step6.push(Gate::Cz(b(i, j), e2_site(i + 1, j)));
                }
            }
        }
    }
    layers.extend(schedule(step6, LayerTag::Entangle));

    let mut final_labels = BTreeMap::new();
    for &(i, j) in &cells {
        final_labels.insert(e2_site(i, j), e(EdgeKind::E2, i, j));
        final_labels.insert(e(EdgeKind::E2, i, j - 1), p(i, j));
    }
    let phys_of = |logical: QubitId| -> QubitId {
        final_labels.iter().find(|(_, &l)| l == logical).map(|(&ph, _)| ph).unwrap_or(logical)
    };
    layers.push(measure_layer(lat, |pp| phys_of(QubitId::plaquette(pp)), QubitId::vertex));
    layers.push(edge_frame(lat, |ee| phys_of(QubitId::edge(ee))));

    let rotation_sites = (0..lat.n_vertices()).map(|v| (QubitId::vertex(v), swapped_site(v))).collect();
    let mut c = Circuit {
        protocol: Protocol::D4Grid,
        lattice: honeycomb_ref(lat),
        sign_swap: false,
        orientation: None,
        qubits: honeycomb_qubits(lat, true),
        layers,
        final_labels,
        rotation_sites,
    };
    check_grid_local(&c, emb)?;
    if native {
        c = decompose_swaps(&c);
        check_grid_local(&c, emb)?;
    }
    Ok(c)
}

fn check_grid_local(c: &Circuit, emb: &SquareGridEmbedding) -> Result<()> {
    for g in c.gates() {
        if let Gate::Cz(x, y) | Gate::Swap(x, y) = *g {
            if !emb.adjacent(x, y) {
                return Err(Error::NotGridLocal {
                    gate: format!("{:?}", g),
                    a: emb.position(x).unwrap_or((usize::MAX, usize::MAX)),
                    b: emb.position(y).unwrap_or((usize::MAX, usize::MAX)),
                });
            }
        }
    }
    Ok(())
}

fn spt_circuit(lat: &HoneycombTorus, protocol: Protocol, triangles: Vec<[usize; 3]>, orientation: Option<TriangleOrientation>) -> Circuit {
    let pq = QubitId::plaquette;
    let mut layers = schedule(triangles.into_iter().map(|[x, y, z]| Gate::Ccz(pq(x), pq(y), pq(z))), LayerTag::Entangle);
    let mut gauging = Vec::new();
    for k in 0..6 {
        for (p, plaq) in lat.plaquettes.iter().enumerate() {
            gauging.push(Gate::Cz(pq(p), QubitId::edge(plaq.legs[k])));
        }
    }
    layers.extend(schedule(gauging, LayerTag::Entangle));
    layers.push(Layer { tag: LayerTag::Measure, gates: (0..lat.n_plaquettes()).map(|p| Gate::MeasX(pq(p))).collect() });
    layers.push(edge_frame(lat, QubitId::edge));
    Circuit {
        protocol,
        lattice: honeycomb_ref(lat),
        sign_swap: false,
        orientation,
        qubits: honeycomb_qubits(lat, false),
        layers,
        final_labels: BTreeMap::new(),
        rotation_sites: BTreeMap::new(),
    }
}

/// Hypergraph state with one CCZ per vertex-sharing plaquette triple, then
/// Gauss-law gauging through the six legs of each plaquette.
pub fn build_d4_spt_route(lat: &HoneycombTorus) -> Circuit {
    spt_circuit(lat, Protocol::D4Spt, lat.vertex_triangles(), None)
}

/// As the D4 route, with extra CCZs on same-colour plaquette triangles.
/// Triangles are repeated as the torus dictates, so on small tori several
/// coincide and the corresponding CCZs cancel in pairs.
pub fn build_q8_spt_route(lat: &HoneycombTorus, orientation: TriangleOrientation) -> Result<Circuit> {
    let extra = lat.same_color_triangles(orientation)?;
    let mut tris = lat.vertex_triangles();
    tris.extend(extra);
    Ok(spt_circuit(lat, Protocol::Q8Spt, tris, Some(orientation)))
}

/// Build any protocol by name on an `l1×l2` torus (`L×L` for the toric code).
pub fn build_protocol(protocol: Protocol, l1: usize, l2: usize, orientation: TriangleOrientation) -> Result<Circuit> {
    if protocol == Protocol::Toric {
        if l1 != l2 {
            return Err(Error::Invalid(format!("the toric code needs a square torus, got {l1}x{l2}")));
        }
        return build_toric_code_protocol(l1);
    }
    let lat = HoneycombTorus::new(l1, l2)?;
    match protocol {
        Protocol::D4 => Ok(build_d4_protocol(&lat)),
        Protocol::D4Grid | Protocol::D4GridNative => build_d4_grid_protocol(&lat, &SquareGridEmbedding::new(&lat)?, protocol == Protocol::D4GridNative),
        Protocol::D4Spt => Ok(build_d4_spt_route(&lat)),
        Protocol::Q8Spt => build_q8_spt_route(&lat, orientation),
        Protocol::Toric => unreachable!(),
    }
}
