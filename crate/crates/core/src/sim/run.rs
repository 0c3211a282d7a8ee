//! Circuit execution: gate ordering, lazy allocation, outcome policies and
//! the measurement record.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::{Choice, Real, StateVector};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::lattice::QubitId;

/// Order in which gates are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Layer order as written.
    AsWritten,
    /// Reorder within commutation constraints to keep few qubits live:
    /// measure as soon as a qubit is finished, allocate as late as possible.
    #[default]
    Eager,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomePolicy {
    /// Born-rule sampling from a seeded generator.
    Sampled,
    /// Prescribed outcome per logical label; missing labels are an error.
    Forced(BTreeMap<QubitId, i8>),
    /// Every outcome `+1`.
    AllPlus,
}

impl OutcomePolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            OutcomePolicy::Sampled => PolicyKind::Sampled,
            OutcomePolicy::Forced(_) => PolicyKind::Forced,
            OutcomePolicy::AllPlus => PolicyKind::AllPlus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Sampled,
    Forced,
    AllPlus,
}

/// Outcome `±1` of every measurement, keyed by logical label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub policy: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outcomes: BTreeMap<QubitId, i8>,
}

impl MeasurementRecord {
    pub fn get(&self, q: QubitId) -> Result<i8> {
        self.outcomes.get(&q).copied().ok_or(Error::MissingOutcome(q))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: MeasurementRecord = serde_json::from_str(s)?;
        if let Some((q, o)) = r.outcomes.iter().find(|(_, o)| o.abs() != 1) {
            return Err(Error::Format(format!("outcome {o} for {q} is not ±1")));
        }
        Ok(r)
    }

    /// Replay policy reproducing this record.
    pub fn as_policy(&self) -> OutcomePolicy {
        OutcomePolicy::Forced(self.outcomes.clone())
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub policy: OutcomePolicy,
    pub seed: u64,
    /// Maximum number of simultaneously live qubits.
    pub cap: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub schedule: Schedule,
    /// Check the norm after every gate and report the worst deviation.
    pub track_norm: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { policy: OutcomePolicy::Sampled, seed: 0, cap: 26, threads: None, schedule: Schedule::Eager, track_norm: false }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput<T: Real> {
    /// Post-measurement state of the unmeasured qubits, in logical labels.
    pub state: StateVector<T>,
    pub record: MeasurementRecord,
    /// Probability of the recorded outcome, per logical label.
    pub probabilities: BTreeMap<QubitId, f64>,
    pub peak_live: usize,
    /// Largest `|‖ψ‖² − 1|` seen, when norm tracking is on.
    pub max_norm_error: f64,
}

/// Execution order and its live-qubit peak, computed without amplitudes.
#[derive(Clone, Debug)]
pub struct ExecutionPlan {
    pub order: Vec<usize>,
    pub peak_live: usize,
}

/// Plan the gate order for `c`. Gate indices refer to `c.gates()`.
pub fn plan(c: &Circuit, schedule: Schedule) -> ExecutionPlan {
    let gates: Vec<&Gate> = c.gates().collect();
    let order: Vec<usize> = match schedule {
        Schedule::AsWritten => (0..gates.len()).collect(),
        Schedule::Eager => eager_order(&gates),
    };
    let peak_live = simulate_liveness(&gates, &order);
    ExecutionPlan { order, peak_live }
}

fn simulate_liveness(gates: &[&Gate], order: &[usize]) -> usize {
    let mut live = BTreeSet::new();
    let mut peak = 0;
    for &i in order {
        for q in gates[i].support() {
            live.insert(q);
        }
        peak = peak.max(live.len());
        if let Gate::MeasX(q) = gates[i] {
            live.remove(q);
        }
    }
    peak
}

/// Greedy ordering that respects the dependency structure: on each qubit,
/// maximal runs of diagonal gates may be reordered freely, everything else
/// keeps its relative order. Preference: measurements of ready qubits, then
/// gates needing no new qubit, then the fewest new qubits, breaking ties
/// toward the live qubit closest to being measured, then circuit order.
fn eager_order(gates: &[&Gate]) -> Vec<usize> {
    let n = gates.len();
    // Per qubit: segment index of each gate touching it.
    let mut seg_of: Vec<BTreeMap<QubitId, usize>> = vec![BTreeMap::new(); n];
    let mut seg_left: BTreeMap<QubitId, Vec<usize>> = BTreeMap::new();
    let mut last_diag: BTreeMap<QubitId, bool> = BTreeMap::new();
    let mut remaining: BTreeMap<QubitId, usize> = BTreeMap::new();
    let mut measured: BTreeSet<QubitId> = BTreeSet::new();
    for (i, g) in gates.iter().enumerate() {
        let diag = g.is_diagonal();
        if let Gate::MeasX(q) = g {
            measured.insert(*q);
        }
        for q in g.support() {
            let segs = seg_left.entry(q).or_default();
            let extend = diag && last_diag.get(&q).copied().unwrap_or(false);
            if !extend {
                segs.push(0);
            }
            *segs.last_mut().unwrap() += 1;
            seg_of[i].insert(q, segs.len() - 1);
            last_diag.insert(q, diag);
            *remaining.entry(q).or_default() += 1;
        }
    }
    let mut cur: BTreeMap<QubitId, usize> = seg_left.keys().map(|&q| (q, 0)).collect();
    let mut live: BTreeSet<QubitId> = BTreeSet::new();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut pending: BTreeSet<usize> = (0..n).collect();

    while !pending.is_empty() {
        let mut best: Option<(usize, (u8, usize, usize, usize))> = None;
        for &i in &pending {
            if !seg_of[i].iter().all(|(q, &s)| cur[q] == s) {
                continue;
            }
            let g = gates[i];
            let support = g.support();
            let new = support.iter().filter(|q| !live.contains(q)).count();
            let class = if matches!(g, Gate::MeasX(_)) && new == 0 {
                0
            } else if new == 0 {
                1
            } else {
                2
            };
            let closeness = support
                .iter()
                .filter(|q| live.contains(q) && measured.contains(q))
                .map(|q| remaining[q])
                .min()
                .unwrap_or(usize::MAX);
            let key = (class, new, closeness, i);
            if best.as_ref().is_none_or(|(_, k)| key < *k) {
                best = Some((i, key));
            }
            if class == 0 {
                break;
            }
        }
        let (i, _) = best.expect("some gate is always ready");
        pending.remove(&i);
        done[i] = true;
        order.push(i);
        for q in gates[i].support() {
            live.insert(q);
            *remaining.get_mut(&q).unwrap() -= 1;
            let s = seg_of[i][&q];
            let left = &mut seg_left.get_mut(&q).unwrap()[s];
            *left -= 1;
            if *left == 0 {
                *cur.get_mut(&q).unwrap() += 1;
            }
        }
        if let Gate::MeasX(q) = gates[i] {
            live.remove(q);
        }
    }
    debug_assert!(done.iter().all(|&d| d));
    order
}

/// Run `c` from `|+⟩^{⊗n}` under `opts`.
pub fn run<T: Real>(c: &Circuit, opts: &RunOptions) -> Result<RunOutput<T>> {
    match opts.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build().map_err(|e| Error::Invalid(e.to_string()))?;
            pool.install(|| run_inner(c, opts))
        }
        None => run_inner(c, opts),
    }
}

fn run_inner<T: Real>(c: &Circuit, opts: &RunOptions) -> Result<RunOutput<T>> {
    c.validate()?;
    let gates: Vec<&Gate> = c.gates().collect();
    let ExecutionPlan { order, peak_live } = plan(c, opts.schedule);
    if peak_live > opts.cap {
        return Err(Error::CapacityExceeded { needed: peak_live, cap: opts.cap });
    }
    if let OutcomePolicy::Forced(map) = &opts.policy {
        for q in c.measured_qubits() {
            if !map.contains_key(&q) {
                return Err(Error::MissingOutcome(q));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut state = StateVector::<T>::new(opts.cap);
    let mut outcomes = BTreeMap::new();
    let mut probabilities = BTreeMap::new();
    let mut max_norm_error: f64 = 0.0;
    for &i in &order {
        let g = gates[i];
        for q in g.support() {
            if !state.is_live(q) {
                state.allocate_plus(q)?;
            }
        }
        match g {
            Gate::MeasX(q) => {
                let label = c.logical(*q);
                let choice = choose(&opts.policy, label, &mut rng);
                let (o, p) = state.measure_x(*q, choice)?;
                outcomes.insert(label, o);
                probabilities.insert(label, p);
            }
            Gate::MeasPauli { site, paulis } => {
                let choice = choose(&opts.policy, *site, &mut rng);
                let (o, p) = state.measure_pauli(paulis, choice, *site)?;
                outcomes.insert(*site, o);
                probabilities.insert(*site, p);
            }
            _ => state.apply(g)?,
        }
        if opts.track_norm {
            max_norm_error = max_norm_error.max((state.norm_sqr() - 1.0).abs());
        }
    }
    // Qubits never touched by a gate are still part of the output.
    for &q in &c.qubits {
        let used = gates.iter().any(|g| g.support().contains(&q));
        if !used {
            state.allocate_plus(q)?;
        }
    }
    state.relabel(&|q| c.logical(q));
    let seed = (opts.policy == OutcomePolicy::Sampled).then_some(opts.seed);
    Ok(RunOutput {
        state,
        record: MeasurementRecord { policy: opts.policy.kind(), seed, outcomes },
        probabilities,
        peak_live,
        max_norm_error,
    })
}

fn choose(policy: &OutcomePolicy, label: QubitId, rng: &mut ChaCha8Rng) -> Choice {
    match policy {
        OutcomePolicy::Sampled => Choice::Sample(rng.gen::<f64>()),
        OutcomePolicy::AllPlus => Choice::Force(1),
        OutcomePolicy::Forced(map) => Choice::Force(map[&label]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_d4_protocol, Layer, LayerTag, LatticeRef, Protocol};
    use crate::lattice::HoneycombTorus;

    fn tiny() -> Circuit {
        let q = QubitId::edge;
        Circuit {
            protocol: Protocol::D4,
            lattice: LatticeRef::Honeycomb { l1: 2, l2: 2 },
            sign_swap: false,
            orientation: None,
            qubits: (0..3).map(q).collect(),
            layers: vec![
                Layer { tag: LayerTag::Entangle, gates: vec![Gate::Cz(q(0), q(1))] },
                Layer { tag: LayerTag::Entangle, gates: vec![Gate::Cz(q(1), q(2))] },
                Layer { tag: LayerTag::Measure, gates: vec![Gate::MeasX(q(1))] },
            ],
            final_labels: BTreeMap::new(),
            rotation_sites: BTreeMap::new(),
        }
    }

    #[test]
    fn eager_plan_lowers_the_peak() {
        let lat = HoneycombTorus::new(2, 2).unwrap();
        let c = build_d4_protocol(&lat);
        let written = plan(&c, Schedule::AsWritten);
        let eager = plan(&c, Schedule::Eager);
        assert_eq!(written.peak_live, 24);
        assert!(eager.peak_live < written.peak_live, "eager peak {}", eager.peak_live);
        let mut sorted = eager.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..c.gates().count()).collect::<Vec<_>>());
    }

    #[test]
    fn capacity_checked_before_running() {
        let opts = RunOptions { cap: 2, ..Default::default() };
        assert!(matches!(run::<f64>(&tiny(), &opts), Err(Error::CapacityExceeded { needed: 3, cap: 2 })));
    }

    #[test]
    fn forced_policy_requires_every_label() {
        let opts = RunOptions { policy: OutcomePolicy::Forced(BTreeMap::new()), ..Default::default() };
        assert!(matches!(run::<f64>(&tiny(), &opts), Err(Error::MissingOutcome(_))));
    }

    #[test]
    fn seeded_runs_repeat_and_replay() {
        let lat = HoneycombTorus::new(2, 2).unwrap();
        let c = build_d4_protocol(&lat);
        let opts = RunOptions { seed: 11, ..Default::default() };
        let a = run::<f64>(&c, &opts).unwrap();
        let b = run::<f64>(&c, &RunOptions { threads: Some(1), ..opts.clone() }).unwrap();
        assert_eq!(a.record, b.record);
        assert_eq!(a.state.amplitudes(), b.state.amplitudes());
        let replay = run::<f64>(&c, &RunOptions { policy: a.record.as_policy(), ..opts }).unwrap();
        assert_eq!(replay.record.outcomes, a.record.outcomes);
        assert!((a.state.overlap(&replay.state).unwrap().norm() - 1.0).abs() < 1e-12);
        assert_eq!(a.state.n_live(), lat.n_edges());
    }

    #[test]
    fn record_json_round_trip() {
        let r = MeasurementRecord {
            policy: PolicyKind::Sampled,
            seed: Some(3),
            outcomes: [(QubitId::plaquette(0), 1), (QubitId::vertex(2), -1)].into_iter().collect(),
        };
        let back = MeasurementRecord::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(MeasurementRecord::from_json(r#"{"policy":"forced","outcomes":{"p0":2}}"#).is_err());
    }
}
