//! Dense statevector over the live qubits only.
//!
//! Bit `b` of an amplitude index is the value of `qubits[b]`. Allocation
//! appends a `|+⟩` as the new top bit; X measurement removes the bit and
//! shifts the higher ones down. SWAP exchanges labels without touching
//! amplitudes.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::lattice::QubitId;
use crate::operator::{CompiledTerm, OperatorExpr, Pauli};

/// Amplitudes per reduction chunk. Fixed so that sums do not depend on the
/// number of worker threads.
const CHUNK: usize = 1 << 12;
/// Minimum work per rayon task for elementwise kernels.
const MIN_LEN: usize = 1 << 12;
/// Outcomes less likely than this are treated as impossible.
pub const IMPOSSIBLE: f64 = 1e-12;
/// Largest region for which a reduced density matrix is formed.
pub const MAX_RDM_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Two `f32` per amplitude.
    Complex64,
    /// Two `f64` per amplitude.
    Complex128,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Complex64 => 64,
            Precision::Complex128 => 128,
        }
    }

    pub fn parse(s: &str) -> Result<Precision> {
        match s {
            "complex64" | "64" => Ok(Precision::Complex64),
            "complex128" | "128" => Ok(Precision::Complex128),
            _ => Err(Error::Invalid(format!("unknown precision {s:?}"))),
        }
    }
}

pub trait Real: num_traits::Float + num_traits::FloatConst + Send + Sync + std::fmt::Debug + Default + 'static {
    const PRECISION: Precision;
    const BYTES: usize;
    fn to_f64(self) -> f64;
    fn of(x: f64) -> Self;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Complex64;
    const BYTES: usize = 4;
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn of(x: f64) -> Self {
        x as f32
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Complex128;
    const BYTES: usize = 8;
    fn to_f64(self) -> f64 {
        self
    }
    fn of(x: f64) -> Self {
        x
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

#[inline]
fn widen<T: Real>(a: Complex<T>) -> Complex64 {
    Complex64::new(a.re.to_f64(), a.im.to_f64())
}

/// Sum of `f` over fixed-size chunks of `0..len`, combined in chunk order.
pub(crate) fn chunked_sum<F>(len: usize, f: F) -> Complex64
where
    F: Fn(Range<usize>) -> Complex64 + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let parts: Vec<Complex64> = (0..n_chunks).into_par_iter().map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(len))).collect();
    parts.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// How a measurement outcome is chosen.
#[derive(Clone, Copy, Debug)]
pub enum Choice {
    /// Sample with a uniform draw in `[0, 1)`: `+1` iff `u < p(+1)`.
    Sample(f64),
    Force(i8),
}

#[derive(Clone, Debug)]
pub struct StateVector<T: Real> {
    amps: Vec<Complex<T>>,
    qubits: Vec<QubitId>,
    cap: usize,
}

impl<T: Real> StateVector<T> {
    /// Empty register (the scalar 1) holding at most `cap` live qubits.
    pub fn new(cap: usize) -> Self {
        StateVector { amps: vec![Complex::new(T::one(), T::zero())], qubits: Vec::new(), cap }
    }

    /// Build directly from amplitudes; `qubits[b]` labels bit `b`.
    pub fn from_amplitudes(qubits: Vec<QubitId>, amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.len() != 1usize << qubits.len() {
            return Err(Error::Format(format!("{} amplitudes for {} qubits", amps.len(), qubits.len())));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !qubits.iter().all(|q| seen.insert(*q)) {
            return Err(Error::Format("duplicate qubit label".into()));
        }
        let cap = qubits.len();
        Ok(StateVector { amps, qubits, cap })
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn n_live(&self) -> usize {
        self.qubits.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn set_cap(&mut self, cap: usize) {
        self.cap = cap;
    }

    pub fn is_live(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }

    pub fn bit(&self, q: QubitId) -> Result<usize> {
        self.qubits.iter().position(|&x| x == q).ok_or(Error::DeadQubit(q))
    }

    /// Rename qubits; labels absent from `map` are kept.
    pub fn relabel(&mut self, map: &dyn Fn(QubitId) -> QubitId) {
        for q in &mut self.qubits {
            *q = map(*q);
        }
    }

    /// Append `q` in `|+⟩`.
    pub fn allocate_plus(&mut self, q: QubitId) -> Result<()> {
        if self.is_live(q) {
            return Err(Error::Invalid(format!("qubit {q} is already live")));
        }
        if self.qubits.len() + 1 > self.cap {
            return Err(Error::CapacityExceeded { needed: self.qubits.len() + 1, cap: self.cap });
        }
        let s = T::of(std::f64::consts::FRAC_1_SQRT_2);
        self.amps.par_iter_mut().with_min_len(MIN_LEN).for_each(|a| *a = *a * s);
        let n = self.amps.len();
        self.amps.reserve_exact(n);
        self.amps.extend_from_within(..n);
        self.qubits.push(q);
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        let amps = &self.amps;
        chunked_sum(amps.len(), |r| Complex64::new(amps[r].iter().map(|a| widen(*a).norm_sqr()).sum(), 0.0)).re
    }

    /// Apply a unitary gate. Every qubit in its support must be live.
    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        match g {
            Gate::H(q) => {
                let s = T::of(std::f64::consts::FRAC_1_SQRT_2);
                self.pair_map(*q, move |a, b| ((a + b) * s, (a - b) * s))
            }
            Gate::X(q) => self.pair_map(*q, |a, b| (b, a)),
            Gate::Y(q) => {
                let i = Complex::new(T::zero(), T::one());
                self.pair_map(*q, move |a, b| (-(i * b), i * a))
            }
            Gate::Z(q) => self.phase_on(&[*q], Complex::new(-T::one(), T::zero())),
            Gate::S(q) => self.phase_on(&[*q], Complex::new(T::zero(), T::one())),
            Gate::Tplus(q) => {
                let h = T::of(std::f64::consts::FRAC_1_SQRT_2);
                self.phase_on(&[*q], Complex::new(h, h))
            }
            Gate::Tminus(q) => {
                let h = T::of(std::f64::consts::FRAC_1_SQRT_2);
                self.phase_on(&[*q], Complex::new(h, -h))
            }
            Gate::Cz(a, b) => self.phase_on(&[*a, *b], Complex::new(-T::one(), T::zero())),
            Gate::Ccz(a, b, c) => self.phase_on(&[*a, *b, *c], Complex::new(-T::one(), T::zero())),
            Gate::Swap(a, b) => {
                let (x, y) = (self.bit(*a)?, self.bit(*b)?);
                self.qubits.swap(x, y);
                Ok(())
            }
            Gate::MeasX(_) | Gate::MeasPauli { .. } => Err(Error::Invalid("measurements are not unitary gates".into())),
        }
    }

    fn pair_map<F>(&mut self, q: QubitId, f: F) -> Result<()>
    where
        F: Fn(Complex<T>, Complex<T>) -> (Complex<T>, Complex<T>) + Sync + Send,
    {
        let half = 1usize << self.bit(q)?;
        self.amps.par_chunks_mut(2 * half).for_each(|block| {
            let (lo, hi) = block.split_at_mut(half);
            lo.par_iter_mut().zip(hi.par_iter_mut()).with_min_len(MIN_LEN).for_each(|(a, b)| {
                let (x, y) = f(*a, *b);
                *a = x;
                *b = y;
            });
        });
        Ok(())
    }

    /// Multiply by `phase` every amplitude where all `qs` are 1.
    fn phase_on(&mut self, qs: &[QubitId], phase: Complex<T>) -> Result<()> {
        let mut mask = 0usize;
        for q in qs {
            mask |= 1 << self.bit(*q)?;
        }
        self.amps.par_iter_mut().with_min_len(MIN_LEN).enumerate().for_each(|(x, a)| {
            if x & mask == mask {
                *a = *a * phase;
            }
        });
        Ok(())
    }

    /// Probability of `+1` in an X measurement of `q`.
    pub fn prob_x_plus(&self, q: QubitId) -> Result<f64> {
        let b = self.bit(q)?;
        let half = self.amps.len() / 2;
        let amps = &self.amps;
        let s = chunked_sum(half, |r| {
            let mut acc = 0.0;
            for k in r {
                let (i0, i1) = split_index(k, b);
                acc += (widen(amps[i0]) + widen(amps[i1])).norm_sqr();
            }
            Complex64::new(acc, 0.0)
        });
        Ok((s.re / 2.0).clamp(0.0, 1.0))
    }

    /// Measure `q` in the X basis and remove it. Returns the outcome and its
    /// probability.
    pub fn measure_x(&mut self, q: QubitId, choice: Choice) -> Result<(i8, f64)> {
        let b = self.bit(q)?;
        let p_plus = self.prob_x_plus(q)?;
        let (outcome, p) = choose(q, p_plus, choice)?;
        let scale = T::of(1.0 / (2.0 * p).sqrt());
        let sign = T::of(outcome as f64);
        // Project into the low half of every pair, then compact in place.
        let half = 1usize << b;
        self.pair_map(q, move |a0, a1| ((a0 + a1 * sign) * scale, a1))?;
        let n = self.amps.len();
        for m in 1..n / (2 * half) {
            self.amps.copy_within(2 * m * half..(2 * m + 1) * half, m * half);
        }
        self.amps.truncate(n / 2);
        self.amps.shrink_to_fit();
        self.qubits.remove(b);
        Ok((outcome, p))
    }

    /// Measure the Pauli string `Π P_q` without removing any qubit.
    pub fn measure_pauli(&mut self, paulis: &[(QubitId, Pauli)], choice: Choice, label: QubitId) -> Result<(i8, f64)> {
        let mut image = self.amps.clone();
        let mut bits = Vec::with_capacity(paulis.len());
        for &(q, p) in paulis {
            bits.push((self.bit(q)?, p));
        }
        apply_pauli_string(&mut image, &bits);
        let amps = &self.amps;
        let img = &image;
        let ev = chunked_sum(amps.len(), |r| r.map(|x| widen(amps[x]).conj() * widen(img[x])).sum());
        let p_plus = ((1.0 + ev.re) / 2.0).clamp(0.0, 1.0);
        let (outcome, p) = choose(label, p_plus, choice)?;
        let scale = T::of(1.0 / (2.0 * p.sqrt()));
        let sign = T::of(outcome as f64);
        self.amps.par_iter_mut().zip(image.par_iter()).with_min_len(MIN_LEN).for_each(|(a, b)| *a = (*a + *b * sign) * scale);
        Ok((outcome, p))
    }

    /// `⟨ψ|E|ψ⟩`. Every qubit of the support must be live.
    pub fn expectation(&self, expr: &OperatorExpr) -> Result<Complex64> {
        let bit_of = |q: QubitId| self.qubits.iter().position(|&x| x == q);
        let compiled: Vec<CompiledTerm> = expr.terms.iter().map(|t| CompiledTerm::compile(t, &bit_of)).collect::<Result<_>>()?;
        let amps = &self.amps;
        Ok(chunked_sum(amps.len(), |r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in r {
                let a = widen(amps[x]);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for t in &compiled {
                    let y = x ^ t.flip as usize;
                    acc += widen(amps[y]).conj() * t.phase(x as u64) * a;
                }
            }
            acc
        }))
    }

    /// Reduced density matrix on `region`; bit `j` of the row index is
    /// `region[j]`.
    pub fn reduced_density_matrix(&self, region: &[QubitId]) -> Result<DMatrix<Complex64>> {
        if region.len() > MAX_RDM_QUBITS {
            return Err(Error::RegionTooLarge { size: region.len(), limit: MAX_RDM_QUBITS });
        }
        let bits: Vec<usize> = region.iter().map(|&q| self.bit(q)).collect::<Result<_>>()?;
        let mut check = bits.clone();
        check.sort_unstable();
        check.dedup();
        if check.len() != bits.len() {
            return Err(Error::Invalid("region lists a qubit twice".into()));
        }
        let k = bits.len();
        let n = self.qubits.len();
        let env_bits: Vec<usize> = (0..n).filter(|b| !bits.contains(b)).collect();
        let (rows, cols) = (1usize << k, 1usize << (n - k));
        let mut m = DMatrix::<Complex64>::zeros(rows, cols);
        for e in 0..cols {
            let mut base = 0usize;
            for (j, &b) in env_bits.iter().enumerate() {
                if e >> j & 1 == 1 {
                    base |= 1 << b;
                }
            }
            for r in 0..rows {
                let mut x = base;
                for (j, &b) in bits.iter().enumerate() {
                    if r >> j & 1 == 1 {
                        x |= 1 << b;
                    }
                }
                m[(r, e)] = widen(self.amps[x]);
            }
        }
        Ok(&m * m.adjoint())
    }

    /// Von Neumann entropy of `region` in bits, computed on whichever side of
    /// the cut is smaller.
    pub fn entropy(&self, region: &[QubitId]) -> Result<f64> {
        for &q in region {
            self.bit(q)?;
        }
        let complement: Vec<QubitId> = self.qubits.iter().copied().filter(|q| !region.contains(q)).collect();
        let side = if complement.len() < region.len() { complement } else { region.to_vec() };
        if side.len() > MAX_RDM_QUBITS {
            return Err(Error::RegionTooLarge { size: side.len(), limit: MAX_RDM_QUBITS });
        }
        let rho = self.reduced_density_matrix(&side)?;
        Ok(von_neumann_bits(rho))
    }

    pub fn to_f64(&self) -> StateVector<f64> {
        StateVector { amps: self.amps.iter().map(|a| widen(*a)).collect(), qubits: self.qubits.clone(), cap: self.cap }
    }

    /// Overlap `⟨self|other⟩` after aligning qubit order by label.
    pub fn overlap(&self, other: &StateVector<T>) -> Result<Complex64> {
        if self.qubits.len() != other.qubits.len() {
            return Err(Error::Invalid("states hold different qubits".into()));
        }
        let perm: Vec<usize> = self.qubits.iter().map(|&q| other.bit(q)).collect::<Result<_>>()?;
        let amps = &self.amps;
        Ok(chunked_sum(amps.len(), |r| {
            r.map(|x| {
                let mut y = 0usize;
                for (b, &pb) in perm.iter().enumerate() {
                    if x >> b & 1 == 1 {
                        y |= 1 << pb;
                    }
                }
                widen(amps[x]).conj() * widen(other.amps[y])
            })
            .sum()
        }))
    }
}

/// `S = −Σ λ log₂ λ` over the spectrum of a density matrix.
pub fn von_neumann_bits(rho: DMatrix<Complex64>) -> f64 {
    let ev = rho.symmetric_eigenvalues();
    ev.iter().filter(|&&l| l > 1e-14).map(|&l| -l * l.log2()).sum()
}

/// Amplitude indices `(x with bit b = 0, x with bit b = 1)` for the `k`-th
/// pair, where `k` enumerates the other bits in order.
#[inline]
fn split_index(k: usize, b: usize) -> (usize, usize) {
    let low = k & ((1 << b) - 1);
    let i0 = ((k >> b) << (b + 1)) | low;
    (i0, i0 | (1 << b))
}

fn choose(q: QubitId, p_plus: f64, choice: Choice) -> Result<(i8, f64)> {
    let p_of = |o: i8| if o == 1 { p_plus } else { 1.0 - p_plus };
    match choice {
        Choice::Force(o) => {
            if p_of(o) < IMPOSSIBLE {
                Err(Error::ImpossibleOutcome { qubit: q.to_string(), outcome: o, probability: p_of(o) })
            } else {
                Ok((o, p_of(o)))
            }
        }
        Choice::Sample(u) => {
            let mut o = if u < p_plus { 1 } else { -1 };
            // A draw can land on a branch of vanishing weight only by rounding.
            if p_of(o) < IMPOSSIBLE {
                o = -o;
            }
            Ok((o, p_of(o)))
        }
    }
}

fn apply_pauli_string<T: Real>(amps: &mut [Complex<T>], bits: &[(usize, Pauli)]) {
    let mut flip = 0usize;
    let mut zmask = 0usize;
    let mut n_y = 0u32;
    for &(b, p) in bits {
        match p {
            Pauli::X => flip |= 1 << b,
            Pauli::Z => zmask |= 1 << b,
            Pauli::Y => {
                flip |= 1 << b;
                zmask |= 1 << b;
                n_y += 1;
            }
        }
    }
    // Y = i X Z, so Π P = i^{n_y} X^flip Z^zmask.
    let ipow = match n_y % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    };
    let src = amps.to_vec();
    amps.par_iter_mut().with_min_len(MIN_LEN).enumerate().for_each(|(x, a)| {
        let y = x ^ flip;
        let v = src[y] * ipow;
        *a = if (y & zmask).count_ones() & 1 == 1 { -v } else { v };
    });
}
