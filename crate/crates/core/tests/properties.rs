//! Invariants checked on random inputs.

mod common;

use std::collections::BTreeSet;

use nalgebra::DVector;
use proptest::prelude::*;

use meastopo::anyons::QuantumDouble;
use meastopo::circuit::{build_d4_protocol, Gate};
use meastopo::diagnostics::{anyon_entropy_shift, entropy, locate_excitations, Region};
use meastopo::lattice::{HoneycombTorus, QubitId};
use meastopo::operator::{Factor, OperatorExpr};
use meastopo::sim::{run, OutcomePolicy, RunOptions, StateVector};
use meastopo::stabilizers::d4_family;

fn gate(kind: u8, q: &[QubitId], a: usize, b: usize, c: usize) -> Gate {
    let n = q.len();
    let (a, b, c) = (a % n, (a + 1 + b % (n - 1)) % n, c % n);
    let c = if c == a || c == b { (0..n).find(|&k| k != a && k != b).unwrap_or(c) } else { c };
    match kind % 10 {
        0 => Gate::H(q[a]),
        1 => Gate::X(q[a]),
        2 => Gate::Y(q[a]),
        3 => Gate::Z(q[a]),
        4 => Gate::S(q[a]),
        5 => Gate::Tplus(q[a]),
        6 => Gate::Tminus(q[a]),
        7 => Gate::Cz(q[a], q[b]),
        8 => Gate::Swap(q[a], q[b]),
        _ if n > 2 => Gate::Ccz(q[a], q[b], q[c]),
        _ => Gate::Cz(q[a], q[b]),
    }
}

fn factor(kind: u8, q: &[QubitId], a: usize, b: usize) -> Factor {
    let n = q.len();
    let (a, b) = (a % n, (a + 1 + b % (n - 1)) % n);
    match kind % 4 {
        0 => Factor::X(q[a]),
        1 => Factor::Y(q[a]),
        2 => Factor::Z(q[a]),
        _ => Factor::Cz(q[a], q[b]),
    }
}

fn d4_state(seed: u64) -> StateVector<f64> {
    let lat = HoneycombTorus::new(2, 2).unwrap();
    run::<f64>(&build_d4_protocol(&lat), &RunOptions { seed, ..Default::default() }).unwrap().state
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn gates_match_dense_reference(n in 2usize..9, gates in prop::collection::vec((any::<u8>(), any::<usize>(), any::<usize>(), any::<usize>()), 1..40)) {
        let q: Vec<QubitId> = (0..n).map(QubitId::edge).collect();
        let mut sv = StateVector::<f64>::new(n);
        for &x in &q {
            sv.allocate_plus(x).unwrap();
        }
        let mut dense: DVector<_> = common::plus_dense(n);
        for &(k, a, b, c) in &gates {
            let g = gate(k, &q, a, b, c);
            sv.apply(&g).unwrap();
            common::apply_dense(&mut dense, &q, &g);
        }
        // SWAP relabels, so map each stored bit back to its qubit.
        let pos: Vec<usize> = sv.qubits().iter().map(|l| q.iter().position(|x| x == l).unwrap()).collect();
        for (x, amp) in sv.amplitudes().iter().enumerate() {
            let y: usize = pos.iter().enumerate().map(|(j, &p)| (x >> j & 1) << p).sum();
            prop_assert!((amp - dense[y]).norm() < 1e-10);
        }
        prop_assert!((sv.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectations_match_dense_reference(
        n in 2usize..7,
        gates in prop::collection::vec((any::<u8>(), any::<usize>(), any::<usize>(), any::<usize>()), 0..20),
        terms in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, prop::collection::vec((any::<u8>(), any::<usize>(), any::<usize>()), 0..5)), 1..4),
    ) {
        let q: Vec<QubitId> = (0..n).map(QubitId::edge).collect();
        let mut sv = StateVector::<f64>::new(n);
        for &x in &q {
            sv.allocate_plus(x).unwrap();
        }
        let mut dense: DVector<_> = common::plus_dense(n);
        for &(k, a, b, c) in &gates {
            let g = gate(k, &q, a, b, c);
            sv.apply(&g).unwrap();
            common::apply_dense(&mut dense, &q, &g);
        }
        let mut e = OperatorExpr::default();
        for (re, im, fs) in &terms {
            let f = fs.iter().map(|&(k, a, b)| factor(k, &q, a, b)).collect();
            e = e.plus(&OperatorExpr::product(common::c(*re, *im), f));
        }
        let want = (dense.adjoint() * common::dense_operator(&e, &q) * &dense)[(0, 0)];
        prop_assert!((sv.expectation(&e).unwrap() - want).norm() < 1e-10);
    }

    #[test]
    fn entropy_is_symmetric_under_complement(mask in 1u32..(1 << 12) - 1) {
        let state = d4_state(3);
        let inside: Vec<QubitId> = (0..12).filter(|k| mask >> k & 1 == 1).map(QubitId::edge).collect();
        let outside: Vec<QubitId> = (0..12).filter(|k| mask >> k & 1 == 0).map(QubitId::edge).collect();
        let a = state.entropy(&inside).unwrap();
        let b = state.entropy(&outside).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn entropies_do_not_depend_on_outcomes(mask in 1u32..(1 << 12) - 1, seed in 0u64..1000) {
        let r = Region::new("R", (0..12).filter(|k| mask >> k & 1 == 1).map(QubitId::edge)).unwrap();
        let a = entropy(&d4_state(seed), &r).unwrap();
        let b = entropy(&d4_state(0), &r).unwrap();
        prop_assert!((a - b).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn fusion_respects_dimensions(group in prop::sample::select(vec!["D4", "Q8", "Z2", "Z2xZ2", "Z2^3"]), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let qd = QuantumDouble::from_name(group).unwrap();
        let (a, b) = (a.index(qd.len()), b.index(qd.len()));
        let total: usize = qd.fuse(a, b).iter().map(|&(c, n)| n as usize * qd.anyons[c].dim).sum();
        prop_assert_eq!(total, qd.anyons[a].dim * qd.anyons[b].dim);
        prop_assert_eq!(qd.fuse(a, b), qd.fuse(b, a));
    }

    #[test]
    fn empty_insertion_changes_nothing(seed in 0u64..1000, mask in 1u32..(1 << 12) - 1) {
        let lat = HoneycombTorus::new(2, 2).unwrap();
        let c = build_d4_protocol(&lat);
        let base = run::<f64>(&c, &RunOptions { seed, ..Default::default() }).unwrap();
        let r = Region::new("R", (0..12).filter(|k| mask >> k & 1 == 1).map(QubitId::edge)).unwrap();
        let rep = anyon_entropy_shift::<f64>(&c, &base.record, &BTreeSet::new(), &[r], &RunOptions::default()).unwrap();
        prop_assert!(rep.rows[0].delta_bits.abs() < 1e-9);
    }

    #[test]
    fn prepared_state_has_no_excitations(seed in 0u64..1000) {
        let lat = HoneycombTorus::new(2, 2).unwrap();
        let out = run::<f64>(&build_d4_protocol(&lat), &RunOptions { seed, ..Default::default() }).unwrap();
        let map = locate_excitations(&out.state, &d4_family(&lat, &out.record).unwrap()).unwrap();
        prop_assert_eq!(map.len(), lat.n_plaquettes());
        for v in map.values() {
            prop_assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn runs_preserve_the_norm(seed in 0u64..1000, all_plus in any::<bool>()) {
        let lat = HoneycombTorus::new(2, 2).unwrap();
        let policy = if all_plus { OutcomePolicy::AllPlus } else { OutcomePolicy::Sampled };
        let out = run::<f64>(&build_d4_protocol(&lat), &RunOptions { seed, policy, track_norm: true, ..Default::default() }).unwrap();
        prop_assert!(out.max_norm_error < 1e-10);
        prop_assert!((out.state.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
