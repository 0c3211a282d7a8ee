//! Dense reference implementations shared by the integration tests. They
//! build full `2^n` vectors and matrices from scratch with nalgebra and do
//! not touch the simulator's kernels.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use meastopo::circuit::Gate;
use meastopo::lattice::QubitId;
use meastopo::operator::{Factor, OperatorExpr};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit matrix of a one-qubit gate.
fn one_qubit(g: &Gate) -> Option<(QubitId, [[Complex64; 2]; 2])> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    Some(match *g {
        Gate::H(q) => (q, [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]),
        Gate::X(q) => (q, [[z, o], [o, z]]),
        Gate::Y(q) => (q, [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]]),
        Gate::Z(q) => (q, [[o, z], [z, -o]]),
        Gate::S(q) => (q, [[o, z], [z, c(0.0, 1.0)]]),
        Gate::Tplus(q) => (q, [[o, z], [z, t]]),
        Gate::Tminus(q) => (q, [[o, z], [z, t.conj()]]),
        _ => return None,
    })
}

/// `|ψ⟩ → G|ψ⟩` on a dense vector; bit `j` of the index is `qubits[j]`.
pub fn apply_dense(psi: &mut DVector<Complex64>, qubits: &[QubitId], g: &Gate) {
    let bit = |q: QubitId| qubits.iter().position(|&x| x == q).expect("qubit in register");
    let n = psi.len();
    if let Some((q, m)) = one_qubit(g) {
        let b = 1 << bit(q);
        let old = psi.clone();
        for x in 0..n {
            let (x0, x1) = (x & !b, x | b);
            let row = usize::from(x & b != 0);
            psi[x] = m[row][0] * old[x0] + m[row][1] * old[x1];
        }
        return;
    }
    match *g {
        Gate::Cz(a, b) => phase_if(psi, &[bit(a), bit(b)]),
        Gate::Ccz(a, b, d) => phase_if(psi, &[bit(a), bit(b), bit(d)]),
        Gate::Swap(a, b) => {
            let (ba, bb) = (bit(a), bit(b));
            let old = psi.clone();
            for x in 0..n {
                let (xa, xb) = (x >> ba & 1, x >> bb & 1);
                let y = (x & !(1 << ba) & !(1 << bb)) | xb << ba | xa << bb;
                psi[y] = old[x];
            }
        }
        _ => panic!("no dense form for {g:?}"),
    }
}

fn phase_if(psi: &mut DVector<Complex64>, bits: &[usize]) {
    for x in 0..psi.len() {
        if bits.iter().all(|&b| x >> b & 1 == 1) {
            psi[x] = -psi[x];
        }
    }
}

/// Kronecker-built matrix of one factor on the whole register.
fn factor_matrix(f: &Factor, qubits: &[QubitId]) -> DMatrix<Complex64> {
    let n = 1usize << qubits.len();
    let bit = |q: QubitId| qubits.iter().position(|&x| x == q).expect("qubit in register");
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    match *f {
        Factor::X(q) | Factor::Y(q) | Factor::Z(q) => {
            let b = bit(q);
            for x in 0..n {
                let v = x >> b & 1;
                let (y, amp) = match f {
                    Factor::X(_) => (x ^ 1 << b, c(1.0, 0.0)),
                    Factor::Y(_) => (x ^ 1 << b, if v == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) }),
                    _ => (x, if v == 0 { c(1.0, 0.0) } else { c(-1.0, 0.0) }),
                };
                m[(y, x)] = amp;
            }
        }
        Factor::Cz(..) | Factor::Ccz(..) => {
            let bits: Vec<usize> = f.qubits().into_iter().map(bit).collect();
            for x in 0..n {
                m[(x, x)] = if bits.iter().all(|&b| x >> b & 1 == 1) { c(-1.0, 0.0) } else { c(1.0, 0.0) };
            }
        }
    }
    m
}

/// Dense matrix of an operator expression on `qubits`.
pub fn dense_operator(e: &OperatorExpr, qubits: &[QubitId]) -> DMatrix<Complex64> {
    let n = 1usize << qubits.len();
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    for t in &e.terms {
        let mut m = DMatrix::<Complex64>::identity(n, n);
        for f in &t.factors {
            m *= factor_matrix(f, qubits);
        }
        total += m * t.coeff;
    }
    total
}

/// `|+⟩^⊗n` as a dense vector.
pub fn plus_dense(n: usize) -> DVector<Complex64> {
    DVector::from_element(1 << n, c((1.0 / (1u64 << n) as f64).sqrt(), 0.0))
}

/// `E|ψ⟩` without forming the full matrix of `E`.
pub fn apply_operator(e: &OperatorExpr, qubits: &[QubitId], psi: &DVector<Complex64>) -> DVector<Complex64> {
    let mut out = DVector::<Complex64>::zeros(psi.len());
    for t in &e.terms {
        let mut v = psi.clone();
        for f in t.factors.iter().rev() {
            v = factor_matrix(f, qubits) * v;
        }
        out += v * t.coeff;
    }
    out
}
