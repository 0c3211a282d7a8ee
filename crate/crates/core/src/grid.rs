//! Placement of the honeycomb qubits on a periodic square grid.
//!
//! Each honeycomb cell occupies six grid sites in a fixed pattern; cell
//! `(i, j)` is translated by `i·(2, 0) + j·(1, 3)` in `(col, row)`. The grid
//! therefore closes into a twisted torus of width `2·l1`, height `3·l2`, where
//! leaving through the top edge re-enters shifted left by `l2` columns. The
//! pattern needs no extra qubits: the edge qubits double as the routing
//! helpers that carry plaquette and vertex states around during the swaps.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{EdgeKind, HoneycombTorus, QubitId, Sublattice};

/// Site of each cell member relative to the cell origin, as `(col, row)`.
pub const PLAQUETTE_SITE: (isize, isize) = (-1, -2);
pub const RED_SITE: (isize, isize) = (0, 0);
pub const ORANGE_SITE: (isize, isize) = (1, 1);
pub const E1_SITE: (isize, isize) = (0, -1);
pub const E2_SITE: (isize, isize) = (0, 2);
pub const E3_SITE: (isize, isize) = (1, 0);

#[derive(Clone, Debug, Serialize)]
pub struct SquareGridEmbedding {
    pub width: usize,
    pub height: usize,
    /// Column shift applied when wrapping through the top/bottom boundary.
    pub twist: usize,
    /// `(row, col)` of every physical qubit.
    pub positions: BTreeMap<QubitId, (usize, usize)>,
    /// Sites whose qubits only take part in routing (the edge qubits).
    pub helpers: Vec<(usize, usize)>,
}

impl SquareGridEmbedding {
    pub fn new(lat: &HoneycombTorus) -> Result<Self> {
        let (width, height, twist) = (2 * lat.l1, 3 * lat.l2, lat.l2);
        let mut positions = BTreeMap::new();
        let mut helpers = Vec::new();
        let mut occupied = BTreeMap::new();
        let mut place = |q: QubitId, cell: (usize, usize), off: (isize, isize)| -> Result<()> {
            let col = 2 * cell.0 as isize + cell.1 as isize + off.0;
            let row = 3 * cell.1 as isize + off.1;
            let site = wrap(width, height, twist, col, row);
            if let Some(other) = occupied.insert(site, q) {
                return Err(Error::Invalid(format!("grid site {site:?} holds both {other} and {q}")));
            }
            positions.insert(q, site);
            Ok(())
        };
        for (p, plaq) in lat.plaquettes.iter().enumerate() {
            place(QubitId::plaquette(p), plaq.cell, PLAQUETTE_SITE)?;
        }
        for (v, vert) in lat.vertices.iter().enumerate() {
            let off = match vert.sublattice {
                Sublattice::Red => RED_SITE,
                Sublattice::Orange => ORANGE_SITE,
            };
            place(QubitId::vertex(v), vert.cell, off)?;
        }
        for (e, edge) in lat.edges.iter().enumerate() {
            let off = match edge.kind {
                EdgeKind::E1 => E1_SITE,
                EdgeKind::E2 => E2_SITE,
                EdgeKind::E3 => E3_SITE,
            };
            place(QubitId::edge(e), edge.cell, off)?;
        }
        for (q, &site) in &positions {
            if q.role == crate::lattice::Role::Edge {
                helpers.push(site);
            }
        }
        Ok(SquareGridEmbedding { width, height, twist, positions, helpers })
    }

    pub fn position(&self, q: QubitId) -> Option<(usize, usize)> {
        self.positions.get(&q).copied()
    }

    /// Whether two sites are horizontal or vertical neighbours on the torus.
    pub fn sites_adjacent(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        let (r, c) = (a.0 as isize, a.1 as isize);
        [(0, 1), (0, -1), (1, 0), (-1, 0)]
            .iter()
            .any(|&(dr, dc)| wrap(self.width, self.height, self.twist, c + dc, r + dr) == b)
    }

    pub fn adjacent(&self, a: QubitId, b: QubitId) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(x), Some(y)) => self.sites_adjacent(x, y),
            _ => false,
        }
    }
}

/// Canonical `(row, col)` of a grid point on the twisted torus.
fn wrap(width: usize, height: usize, twist: usize, col: isize, row: isize) -> (usize, usize) {
    let h = height as isize;
    let k = row.div_euclid(h);
    let r = row.rem_euclid(h);
    let c = (col - k * twist as isize).rem_euclid(width as isize);
    (r as usize, c as usize)
}
