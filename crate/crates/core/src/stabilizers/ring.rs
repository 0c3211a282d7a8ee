//! Functions of six spins around a ring, and their rewriting in terms of the
//! six domain-wall variables `w_n = [σ_n ≠ σ_{n+1}]`.
//!
//! A function `φ(σ)` invariant under a global flip depends only on the walls.
//! We look for it as a quadratic form over GF(2),
//! `(−1)^{c + Σ_{j<k} a_{jk} w_j w_k + Σ_n b_n w_n}`, which is a product of CZ
//! and Z factors on the walls. The coefficients solve a linear system; walls
//! obey one constraint (their number is even), and `φ` may be known only on
//! part of the configurations, so the solution is not unique. We pick, in
//! order: a form symmetric under rotation of the ring, the fewest linear and
//! constant terms, the fewest couplings beyond nearest neighbours, the fewest
//! couplings.

use num_complex::Complex64;

use crate::error::{Error, Result};

const TOL: f64 = 1e-10;
const N_PAIRS: usize = 15;
const N_VARS: usize = N_PAIRS + 6 + 1;
/// Cap on enumerated solutions; the solution spaces met in practice are tiny.
const MAX_NULLITY: usize = 16;

/// Pair `(j, k)`, `j < k`, for each coupling bit.
fn pairs() -> [(usize, usize); N_PAIRS] {
    let mut out = [(0, 0); N_PAIRS];
    let mut i = 0;
    for j in 0..6 {
        for k in j + 1..6 {
            out[i] = (j, k);
            i += 1;
        }
    }
    out
}

fn pair_bit(j: usize, k: usize) -> usize {
    let (j, k) = (j.min(k), j.max(k));
    pairs().iter().position(|&p| p == (j, k)).expect("valid pair")
}

/// `(−1)^{c + Σ a_{jk} w_j w_k + Σ b_n w_n}`; bit `pair_bit(j, k)` of `a`
/// couples walls `j` and `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WallForm {
    pub a: u16,
    pub b: u8,
    pub negate: bool,
}

impl WallForm {
    /// Nearest-neighbour couplings around the whole ring.
    pub fn hexagon() -> Self {
        let a = (0..6).fold(0u16, |m, n| m | 1 << pair_bit(n, (n + 1) % 6));
        WallForm { a, b: 0, negate: false }
    }

    pub fn couplings(&self) -> Vec<(usize, usize)> {
        pairs().into_iter().enumerate().filter(|(i, _)| self.a >> i & 1 == 1).map(|(_, p)| p).collect()
    }

    pub fn eval(&self, w: u8) -> f64 {
        if (monomials(w) & self.bits()).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.a == 0 && self.b == 0 && !self.negate
    }

    fn bits(&self) -> u32 {
        self.a as u32 | (self.b as u32) << N_PAIRS | (self.negate as u32) << (N_PAIRS + 6)
    }

    fn from_bits(x: u32) -> Self {
        WallForm { a: (x & 0x7fff) as u16, b: (x >> N_PAIRS & 0x3f) as u8, negate: x >> (N_PAIRS + 6) & 1 == 1 }
    }

    fn rotated(&self) -> Self {
        let mut a = 0u16;
        for (j, k) in self.couplings() {
            a |= 1 << pair_bit((j + 1) % 6, (k + 1) % 6);
        }
        let b = ((self.b << 1) | (self.b >> 5)) & 0x3f;
        WallForm { a, b, negate: self.negate }
    }

    fn is_cyclic(&self) -> bool {
        self.rotated() == *self
    }

    fn cost(&self) -> u32 {
        let long = self.couplings().iter().filter(|&&(j, k)| k - j != 1 && k - j != 5).count() as u32;
        100_000 * !self.is_cyclic() as u32 + 1000 * (self.b.count_ones() + self.negate as u32) + 10 * long + self.a.count_ones()
    }
}

/// Values of every monomial at `w`, as a bit vector matching `WallForm::bits`.
fn monomials(w: u8) -> u32 {
    let mut m = 0u32;
    for (i, (j, k)) in pairs().into_iter().enumerate() {
        if w >> j & w >> k & 1 == 1 {
            m |= 1 << i;
        }
    }
    m | (w as u32 & 0x3f) << N_PAIRS | 1 << (N_PAIRS + 6)
}

/// Walls of a spin configuration (`σ` bit `n` set means spin `n` is down).
pub fn walls(sigma: u8) -> u8 {
    let rotated = ((sigma >> 1) | (sigma << 5)) & 0x3f;
    (sigma ^ rotated) & 0x3f
}

/// Fit `φ` on the configurations selected by `physical` with a wall form.
/// `φ` must be real, `±1`, and flip-invariant there.
pub fn fit_wall_form(phi: &dyn Fn(u8) -> Complex64, physical: &dyn Fn(u8) -> bool) -> Result<WallForm> {
    let mut rows: Vec<(u32, bool)> = Vec::new();
    for sigma in 0u8..64 {
        if !physical(sigma) {
            continue;
        }
        let v = phi(sigma);
        if v.im.abs() > TOL || (v.re.abs() - 1.0).abs() > TOL {
            return Err(Error::Invalid(format!("ring function is not ±1 on the physical sector (value {v})")));
        }
        let flipped = phi(sigma ^ 0x3f);
        if physical(sigma ^ 0x3f) && (flipped - v).norm() > TOL {
            return Err(Error::Invalid("ring function is not invariant under the global flip".into()));
        }
        rows.push((monomials(walls(sigma)), v.re < 0.0));
    }
    let (particular, null) = solve_gf2(rows).ok_or_else(|| Error::Invalid("no quadratic wall form reproduces the ring function".into()))?;
    if null.len() > MAX_NULLITY {
        return Err(Error::Invalid(format!("ring function is underdetermined ({} free coefficients)", null.len())));
    }
    (0u32..1 << null.len())
        .map(|s| {
            let x = null.iter().enumerate().filter(|(i, _)| s >> i & 1 == 1).fold(particular, |acc, (_, &v)| acc ^ v);
            WallForm::from_bits(x)
        })
        .min_by_key(|f| (f.cost(), f.bits()))
        .ok_or_else(|| Error::Invalid("empty solution space".into()))
}

/// Solve `row · x = rhs` over GF(2); returns a particular solution and a
/// basis of the null space, or `None` if inconsistent.
fn solve_gf2(mut rows: Vec<(u32, bool)>) -> Option<(u32, Vec<u32>)> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..N_VARS {
        let Some(i) = (r..rows.len()).find(|&i| rows[i].0 >> col & 1 == 1) else { continue };
        rows.swap(r, i);
        let pivot = rows[r];
        for (j, row) in rows.iter_mut().enumerate() {
            if j != r && row.0 >> col & 1 == 1 {
                row.0 ^= pivot.0;
                row.1 ^= pivot.1;
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|&(m, v)| m == 0 && v) {
        return None;
    }
    let mut particular = 0u32;
    for (i, &col) in pivots.iter().enumerate() {
        if rows[i].1 {
            particular |= 1 << col;
        }
    }
    let null = (0..N_VARS)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = 1u32 << free;
            for (i, &col) in pivots.iter().enumerate() {
                if rows[i].0 >> free & 1 == 1 {
                    v |= 1 << col;
                }
            }
            v
        })
        .collect();
    Some((particular, null))
}

/// Evaluate `Σ_S c_S Π_{n∈S} σ_n` at a configuration.
pub fn eval_polynomial(coeffs: &[Complex64; 64], sigma: u8) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(s, &c)| if (s as u8 & sigma).count_ones() % 2 == 1 { -c } else { c })
        .sum()
}
