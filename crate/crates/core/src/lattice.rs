//! Honeycomb torus with qubits on vertices, edges and plaquettes, plus the
//! square torus used by the toric-code warm-up.
//!
//! Geometry. Plaquettes sit on a triangular lattice with cells `(i, j)`
//! taken mod `(l1, l2)`; neighbouring plaquette offsets are `(±1, 0)`,
//! `(0, ±1)` and `±(1, -1)`. Each cell owns two honeycomb vertices, `A` (red)
//! and `B` (orange), and three edges:
//!
//! * `E1(i,j)` joins `A(i,j)`–`B(i,j-1)` and separates plaquettes `(i,j)`, `(i+1,j)`;
//! * `E2(i,j)` joins `A(i,j)`–`B(i-1,j)` and separates `(i,j)`, `(i,j+1)`;
//! * `E3(i,j)` joins `A(i,j)`–`B(i,j)` and separates `(i+1,j)`, `(i,j+1)`.
//!
//! The ring of plaquette `(i,j)`, counterclockwise in the planar drawing with
//! lattice vectors at 0° and 60°, is
//! `A(i,j), B(i-1,j), A(i-1,j), B(i-1,j-1), A(i,j-1), B(i,j-1)`; ring edge `n`
//! joins ring vertices `n` and `n+1`. Odd ring positions (1-based) are red.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Vertex,
    Edge,
    Plaquette,
}

/// A qubit label, unique per lattice. Rendered as `v3`, `e7`, `p0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId {
    pub role: Role,
    pub index: u32,
}

impl QubitId {
    pub const fn vertex(index: usize) -> Self {
        QubitId { role: Role::Vertex, index: index as u32 }
    }
    pub const fn edge(index: usize) -> Self {
        QubitId { role: Role::Edge, index: index as u32 }
    }
    pub const fn plaquette(index: usize) -> Self {
        QubitId { role: Role::Plaquette, index: index as u32 }
    }
    pub fn idx(self) -> usize {
        self.index as usize
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.role {
            Role::Vertex => 'v',
            Role::Edge => 'e',
            Role::Plaquette => 'p',
        };
        write!(f, "{c}{}", self.index)
    }
}

impl FromStr for QubitId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("bad qubit label {s:?}"));
        let mut chars = s.chars();
        let role = match chars.next().ok_or_else(bad)? {
            'v' => Role::Vertex,
            'e' => Role::Edge,
            'p' => Role::Plaquette,
            _ => return Err(bad()),
        };
        let index = chars.as_str().parse::<u32>().map_err(|_| bad())?;
        Ok(QubitId { role, index })
    }
}

impl Serialize for QubitId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QubitId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sublattice {
    Red,
    Orange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    R,
    G,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    E1,
    E2,
    E3,
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub cell: (usize, usize),
    pub sublattice: Sublattice,
    /// Incident edges, ordered `E1, E2, E3` by the edge kind at this vertex.
    pub edges: [usize; 3],
    /// Plaquettes containing this vertex (the dice-lattice partners).
    pub plaquettes: [usize; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub cell: (usize, usize),
    pub kind: EdgeKind,
    /// `(red end, orange end)`.
    pub ends: (usize, usize),
    /// The two plaquettes this edge borders.
    pub borders: [usize; 2],
    /// The two plaquettes this edge radiates from (one end on each ring).
    pub leg_of: [usize; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct Plaquette {
    pub cell: (usize, usize),
    pub ring_vertices: [usize; 6],
    pub ring_edges: [usize; 6],
    /// `legs[n]` is the edge at ring vertex `n` that is not on the ring.
    pub legs: [usize; 6],
    /// `neighbours[n]` shares ring edge `n`.
    pub neighbours: [usize; 6],
}

#[derive(Clone, Debug, Serialize)]
pub struct Counts {
    pub vertices: usize,
    pub edges: usize,
    pub plaquettes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HoneycombTorus {
    pub l1: usize,
    pub l2: usize,
    pub counts: Counts,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub plaquettes: Vec<Plaquette>,
    pub coloring: Option<Vec<Color>>,
}

/// Same-colour triangles of the plaquette superlattice, used by the Q8 route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleOrientation {
    Up,
    Down,
    Both,
}

/// Offsets from a plaquette to its six same-colour neighbours, in cyclic order.
pub const SAME_COLOR_OFFSETS: [(isize, isize); 6] = [(1, 1), (-1, 2), (-2, 1), (-1, -1), (1, -2), (2, -1)];

impl HoneycombTorus {
    pub fn new(l1: usize, l2: usize) -> Result<Self> {
        if l1 < 2 || l2 < 2 {
            return Err(Error::TooSmall(format!(
                "honeycomb torus needs l1, l2 >= 2, got {l1}x{l2}"
            )));
        }
        let n = l1 * l2;
        let cell = |i: isize, j: isize| -> usize {
            let i = i.rem_euclid(l1 as isize) as usize;
            let j = j.rem_euclid(l2 as isize) as usize;
            i * l2 + j
        };
        let a = |i: isize, j: isize| 2 * cell(i, j);
        let b = |i: isize, j: isize| 2 * cell(i, j) + 1;
        let e = |i: isize, j: isize, k: usize| 3 * cell(i, j) + k;

        let mut plaquettes = Vec::with_capacity(n);
        for c in 0..n {
            let (i, j) = ((c / l2) as isize, (c % l2) as isize);
            let ring_vertices = [a(i, j), b(i - 1, j), a(i - 1, j), b(i - 1, j - 1), a(i, j - 1), b(i, j - 1)];
            let ring_edges = [e(i, j, 1), e(i - 1, j, 2), e(i - 1, j, 0), e(i, j - 1, 1), e(i, j - 1, 2), e(i, j, 0)];
            let neighbours = [cell(i, j + 1), cell(i - 1, j + 1), cell(i - 1, j), cell(i, j - 1), cell(i + 1, j - 1), cell(i + 1, j)];
            plaquettes.push(Plaquette {
                cell: (i as usize, j as usize),
                ring_vertices,
                ring_edges,
                legs: [0; 6],
                neighbours,
            });
        }

        let mut vertices = Vec::with_capacity(2 * n);
        let mut edges = Vec::with_capacity(3 * n);
        for c in 0..n {
            let (i, j) = ((c / l2) as isize, (c % l2) as isize);
            vertices.push(Vertex {
                cell: (i as usize, j as usize),
                sublattice: Sublattice::Red,
                edges: [e(i, j, 0), e(i, j, 1), e(i, j, 2)],
                plaquettes: [cell(i, j), cell(i + 1, j), cell(i, j + 1)],
            });
            vertices.push(Vertex {
                cell: (i as usize, j as usize),
                sublattice: Sublattice::Orange,
                edges: [e(i, j + 1, 0), e(i + 1, j, 1), e(i, j, 2)],
                plaquettes: [cell(i + 1, j), cell(i, j + 1), cell(i + 1, j + 1)],
            });
            let cc = (i as usize, j as usize);
            edges.push(Edge { cell: cc, kind: EdgeKind::E1, ends: (a(i, j), b(i, j - 1)), borders: [cell(i, j), cell(i + 1, j)], leg_of: [0; 2] });
            edges.push(Edge { cell: cc, kind: EdgeKind::E2, ends: (a(i, j), b(i - 1, j)), borders: [cell(i, j), cell(i, j + 1)], leg_of: [0; 2] });
            edges.push(Edge { cell: cc, kind: EdgeKind::E3, ends: (a(i, j), b(i, j)), borders: [cell(i + 1, j), cell(i, j + 1)], leg_of: [0; 2] });
        }

        // Legs: at each ring vertex, the incident edge not on the ring.
        let mut leg_count = vec![0usize; 3 * n];
        for (p, plaq) in plaquettes.iter_mut().enumerate() {
            for k in 0..6 {
                let v = plaq.ring_vertices[k];
                let on_ring = |x: usize| plaq.ring_edges.contains(&x);
                let leg = vertices[v]
                    .edges
                    .iter()
                    .copied()
                    .find(|&x| !on_ring(x))
                    .expect("every ring vertex has one off-ring edge");
                plaq.legs[k] = leg;
                edges[leg].leg_of[leg_count[leg]] = p;
                leg_count[leg] += 1;
            }
        }
        debug_assert!(leg_count.iter().all(|&k| k == 2));

        let coloring = (l1 % 3 == 0 && l2 % 3 == 0).then(|| {
            plaquettes
                .iter()
                .map(|p| match (p.cell.0 + 2 * p.cell.1) % 3 {
                    0 => Color::R,
                    1 => Color::G,
                    _ => Color::B,
                })
                .collect()
        });

        Ok(HoneycombTorus {
            l1,
            l2,
            counts: Counts { vertices: 2 * n, edges: 3 * n, plaquettes: n },
            vertices,
            edges,
            plaquettes,
            coloring,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_plaquettes(&self) -> usize {
        self.plaquettes.len()
    }

    pub fn cell_index(&self, i: isize, j: isize) -> usize {
        let i = i.rem_euclid(self.l1 as isize) as usize;
        let j = j.rem_euclid(self.l2 as isize) as usize;
        i * self.l2 + j
    }

    /// Vertex index of `A(i,j)` (red) or `B(i,j)` (orange).
    pub fn vertex_at(&self, sub: Sublattice, i: isize, j: isize) -> usize {
        2 * self.cell_index(i, j) + usize::from(sub == Sublattice::Orange)
    }

    pub fn edge_at(&self, kind: EdgeKind, i: isize, j: isize) -> usize {
        3 * self.cell_index(i, j) + kind as usize
    }

    pub fn plaquette_at(&self, i: isize, j: isize) -> usize {
        self.cell_index(i, j)
    }

    /// Ring position (0-based) of vertex `v` in plaquette `p`, if present.
    pub fn ring_position(&self, p: usize, v: usize) -> Option<usize> {
        self.plaquettes[p].ring_vertices.iter().position(|&x| x == v)
    }

    /// `⟨p,v⟩` pairs of the dice lattice, ordered by ring position then plaquette.
    pub fn dice_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(6 * self.n_plaquettes());
        for k in 0..6 {
            for (p, plaq) in self.plaquettes.iter().enumerate() {
                out.push((p, plaq.ring_vertices[k]));
            }
        }
        out
    }

    /// `⟨v,e⟩` pairs of the heavy-hex lattice in three perfect matchings:
    /// red–`E1` with orange–`E3`, red–`E2` with orange–`E1`, red–`E3` with
    /// orange–`E2`.
    pub fn heavy_hex_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.n_edges());
        for k in 0..3 {
            for (v, vert) in self.vertices.iter().enumerate() {
                let slot = match vert.sublattice {
                    Sublattice::Red => k,
                    Sublattice::Orange => (k + 2) % 3,
                };
                out.push((v, vert.edges[slot]));
            }
        }
        out
    }

    /// Plaquette triples sharing a vertex, one per vertex.
    pub fn vertex_triangles(&self) -> Vec<[usize; 3]> {
        self.vertices.iter().map(|v| v.plaquettes).collect()
    }

    pub fn color(&self, p: usize) -> Option<Color> {
        self.coloring.as_ref().map(|c| c[p])
    }

    pub fn same_color_neighbours(&self, p: usize) -> [usize; 6] {
        let (i, j) = self.plaquettes[p].cell;
        SAME_COLOR_OFFSETS.map(|(di, dj)| self.cell_index(i as isize + di, j as isize + dj))
    }

    /// Same-colour triangles; requires a colouring.
    pub fn same_color_triangles(&self, orientation: TriangleOrientation) -> Result<Vec<[usize; 3]>> {
        if self.coloring.is_none() {
            return Err(Error::NeedsColoring { l1: self.l1, l2: self.l2 });
        }
        let mut out = Vec::new();
        for plaq in &self.plaquettes {
            let (i, j) = (plaq.cell.0 as isize, plaq.cell.1 as isize);
            let p = self.cell_index(i, j);
            if matches!(orientation, TriangleOrientation::Up | TriangleOrientation::Both) {
                out.push([p, self.cell_index(i + 2, j - 1), self.cell_index(i + 1, j + 1)]);
            }
            if matches!(orientation, TriangleOrientation::Down | TriangleOrientation::Both) {
                out.push([p, self.cell_index(i + 1, j + 1), self.cell_index(i - 1, j + 2)]);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lattice serializes")
    }
}

/// `L x L` square torus with qubits on links, for the toric-code warm-up.
/// Link `2*(x + L*y)` points in +x from site `(x,y)`, link `2*(x + L*y) + 1` in +y.
#[derive(Clone, Debug, Serialize)]
pub struct SquareTorus {
    pub l: usize,
}

impl SquareTorus {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::TooSmall(format!("square torus needs L >= 2, got {l}")));
        }
        Ok(SquareTorus { l })
    }

    pub fn n_sites(&self) -> usize {
        self.l * self.l
    }

    pub fn n_links(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn link(&self, x: isize, y: isize, dir: usize) -> usize {
        let l = self.l as isize;
        2 * (x.rem_euclid(l) + l * y.rem_euclid(l)) as usize + dir
    }

    /// Links touching site `s`.
    pub fn star(&self, s: usize) -> [usize; 4] {
        let (x, y) = ((s % self.l) as isize, (s / self.l) as isize);
        [self.link(x, y, 0), self.link(x - 1, y, 0), self.link(x, y, 1), self.link(x, y - 1, 1)]
    }

    /// Links around the face whose lower-left corner is site `s`.
    pub fn face(&self, s: usize) -> [usize; 4] {
        let (x, y) = ((s % self.l) as isize, (s / self.l) as isize);
        [self.link(x, y, 0), self.link(x, y + 1, 0), self.link(x, y, 1), self.link(x + 1, y, 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_and_coloring() {
        let t = HoneycombTorus::new(2, 2).unwrap();
        assert_eq!((t.n_vertices(), t.n_edges(), t.n_plaquettes()), (8, 12, 4));
        assert!(t.coloring.is_none());
        let t = HoneycombTorus::new(3, 3).unwrap();
        assert_eq!((t.n_vertices(), t.n_edges(), t.n_plaquettes()), (18, 27, 9));
        assert!(t.coloring.is_some());
        assert!(matches!(HoneycombTorus::new(1, 2), Err(Error::TooSmall(_))));
    }

    #[test]
    fn qubit_labels_round_trip() {
        for q in [QubitId::vertex(3), QubitId::edge(11), QubitId::plaquette(0)] {
            assert_eq!(q.to_string().parse::<QubitId>().unwrap(), q);
        }
        assert!("x1".parse::<QubitId>().is_err());
        assert!("v".parse::<QubitId>().is_err());
    }

    fn check_invariants(t: &HoneycombTorus) {
        let (nv, ne) = (t.n_vertices(), t.n_edges());
        assert_eq!(nv, 2 * t.l1 * t.l2);
        assert_eq!(ne, 3 * t.l1 * t.l2);
        let mut vdeg = vec![0; nv];
        let mut vplaq = vec![0; nv];
        let mut eborder = vec![0; ne];
        for (ei, e) in t.edges.iter().enumerate() {
            vdeg[e.ends.0] += 1;
            vdeg[e.ends.1] += 1;
            assert_eq!(t.vertices[e.ends.0].sublattice, Sublattice::Red);
            assert_eq!(t.vertices[e.ends.1].sublattice, Sublattice::Orange);
            for &x in &[e.ends.0, e.ends.1] {
                assert!(t.vertices[x].edges.contains(&ei));
            }
        }
        assert_eq!(vdeg.iter().sum::<usize>(), 2 * ne);
        for (pi, p) in t.plaquettes.iter().enumerate() {
            for n in 0..6 {
                let e = &t.edges[p.ring_edges[n]];
                let (u, w) = (p.ring_vertices[n], p.ring_vertices[(n + 1) % 6]);
                assert!(e.ends == (u, w) || e.ends == (w, u), "edge n joins ring vertices n, n+1");
                let want = if n % 2 == 0 { Sublattice::Red } else { Sublattice::Orange };
                assert_eq!(t.vertices[p.ring_vertices[n]].sublattice, want);
                vplaq[p.ring_vertices[n]] += 1;
                eborder[p.ring_edges[n]] += 1;
                assert!(e.borders.contains(&pi));
                assert!(t.edges[p.legs[n]].ends.0 == p.ring_vertices[n] || t.edges[p.legs[n]].ends.1 == p.ring_vertices[n]);
                assert!(!p.ring_edges.contains(&p.legs[n]));
                let nb = &t.plaquettes[p.neighbours[n]];
                assert!(nb.ring_edges.contains(&p.ring_edges[n]));
            }
        }
        assert!(vplaq.iter().all(|&k| k == 3));
        assert!(eborder.iter().all(|&k| k == 2));
        assert!(vdeg.iter().all(|&k| k == 3));
        for (v, vert) in t.vertices.iter().enumerate() {
            for &p in &vert.plaquettes {
                assert!(t.plaquettes[p].ring_vertices.contains(&v));
            }
        }
        if let Some(col) = &t.coloring {
            for p in &t.plaquettes {
                for &q in &p.neighbours {
                    assert_ne!(col[t.cell_index(p.cell.0 as isize, p.cell.1 as isize)], col[q]);
                }
            }
            for (ei, e) in t.edges.iter().enumerate() {
                assert_eq!(col[e.leg_of[0]], col[e.leg_of[1]], "edge {ei} links same-colour plaquettes");
            }
        }
    }

    #[test]
    fn small_tori_invariants() {
        for (a, b) in [(2, 2), (2, 3), (3, 3), (3, 2), (4, 3), (6, 6)] {
            check_invariants(&HoneycombTorus::new(a, b).unwrap());
        }
    }

    #[test]
    fn ring_is_counterclockwise() {
        // Cartesian positions of the ring vertices relative to the plaquette
        // centre must have increasing polar angle.
        let t = HoneycombTorus::new(5, 5).unwrap();
        let p = t.plaquette_at(2, 2);
        let s3 = 3f64.sqrt();
        let pos = |cell: (usize, usize), sub: Sublattice| {
            let (i, j) = (cell.0 as f64, cell.1 as f64);
            let (x, y) = (i + 0.5 * j, 0.5 * s3 * j);
            match sub {
                Sublattice::Red => (x + 0.5, y + s3 / 6.0),
                Sublattice::Orange => (x + 1.0, y + s3 / 3.0),
            }
        };
        let centre = (2.0 + 1.0, s3);
        let mut prev = None;
        let mut turns = 0.0;
        for &v in &t.plaquettes[p].ring_vertices {
            let (x, y) = pos(t.vertices[v].cell, t.vertices[v].sublattice);
            let ang = (y - centre.1).atan2(x - centre.0);
            if let Some(a) = prev {
                let mut d: f64 = ang - a;
                while d < 0.0 {
                    d += std::f64::consts::TAU;
                }
                assert!((d - std::f64::consts::FRAC_PI_3).abs() < 1e-9);
                turns += d;
            }
            prev = Some(ang);
        }
        assert!((turns - 5.0 * std::f64::consts::FRAC_PI_3).abs() < 1e-9);
    }

    #[test]
    fn same_color_triangles_need_coloring() {
        let t = HoneycombTorus::new(2, 2).unwrap();
        assert!(matches!(t.same_color_triangles(TriangleOrientation::Up), Err(Error::NeedsColoring { .. })));
        let t = HoneycombTorus::new(6, 6).unwrap();
        for tri in t.same_color_triangles(TriangleOrientation::Both).unwrap() {
            let c = t.color(tri[0]);
            assert!(tri.iter().all(|&p| t.color(p) == c));
        }
    }

    #[test]
    fn toric_star_and_face() {
        let s = SquareTorus::new(3).unwrap();
        let mut count = vec![0; s.n_links()];
        for v in 0..s.n_sites() {
            for l in s.star(v) {
                count[l] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 2));
        for f in 0..s.n_sites() {
            let star_overlap: Vec<_> = (0..s.n_sites())
                .map(|v| s.star(v).iter().filter(|l| s.face(f).contains(l)).count())
                .collect();
            assert!(star_overlap.iter().all(|&k| k % 2 == 0));
        }
        assert!(SquareTorus::new(1).is_err());
    }

    proptest! {
        #[test]
        fn invariants_hold(l1 in 2usize..7, l2 in 2usize..7) {
            let t = HoneycombTorus::new(l1, l2).unwrap();
            check_invariants(&t);
            prop_assert_eq!(t.coloring.is_some(), l1 % 3 == 0 && l2 % 3 == 0);
            let ring_total: usize = t.plaquettes.iter().map(|p| p.ring_edges.len()).sum();
            prop_assert_eq!(ring_total, 6 * t.n_plaquettes());
            prop_assert_eq!(ring_total, 2 * t.n_edges());
        }
    }
}
