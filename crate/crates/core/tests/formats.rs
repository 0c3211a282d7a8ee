//! Round trips through every serialized format.

use meastopo::circuit::{build_protocol, Circuit, Protocol};
use meastopo::lattice::{HoneycombTorus, TriangleOrientation};
use meastopo::sim::{read_state, run, write_state, AnyState, MeasurementRecord, RunOptions, MAGIC};
use meastopo::Error;

fn d4() -> Circuit {
    build_protocol(Protocol::D4, 2, 2, TriangleOrientation::Both).unwrap()
}

#[test]
fn state_file_round_trips_in_both_precisions() {
    let out = run::<f64>(&d4(), &RunOptions { seed: 4, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    write_state(&out.state, &mut buf).unwrap();
    assert_eq!(&buf[..8], MAGIC);
    let AnyState::Double(back) = read_state(buf.as_slice()).unwrap() else { panic!("wrong precision") };
    assert_eq!(back.qubits(), out.state.qubits());
    assert_eq!(back.amplitudes(), out.state.amplitudes());

    let single = run::<f32>(&d4(), &RunOptions { seed: 4, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    write_state(&single.state, &mut buf).unwrap();
    assert!(matches!(read_state(buf.as_slice()).unwrap(), AnyState::Single(_)));
}

#[test]
fn corrupted_state_file_is_rejected() {
    let out = run::<f64>(&d4(), &RunOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_state(&out.state, &mut buf).unwrap();
    let mut bad_magic = buf.clone();
    bad_magic[0] ^= 1;
    assert!(matches!(read_state(bad_magic.as_slice()), Err(Error::Format(_))));
    buf.truncate(buf.len() - 3);
    assert!(read_state(buf.as_slice()).is_err());
}

#[test]
fn record_json_round_trips_and_replays() {
    let c = d4();
    let out = run::<f64>(&c, &RunOptions { seed: 9, ..Default::default() }).unwrap();
    let back = MeasurementRecord::from_json(&out.record.to_json()).unwrap();
    assert_eq!(back.outcomes, out.record.outcomes);
    let replay = run::<f64>(&c, &RunOptions { policy: back.as_policy(), ..Default::default() }).unwrap();
    assert_eq!(replay.state.amplitudes(), out.state.amplitudes());
}

#[test]
fn circuit_json_round_trips() {
    for p in [Protocol::Toric, Protocol::D4, Protocol::D4Grid, Protocol::D4GridNative, Protocol::D4Spt] {
        let c = build_protocol(p, 2, 2, TriangleOrientation::Both).unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(back.to_json(), c.to_json(), "{p:?}");
    }
    assert!(Circuit::from_json(r#"{"protocol": "d4"}"#).is_err());
}

#[test]
fn lattice_json_lists_incidence() {
    let lat = HoneycombTorus::new(2, 3).unwrap();
    let v: serde_json::Value = serde_json::from_str(&lat.to_json()).unwrap();
    assert_eq!(v["counts"]["edges"], 18);
    assert_eq!(v["plaquettes"].as_array().unwrap().len(), 6);
    assert_eq!(v["plaquettes"][0]["ring_edges"].as_array().unwrap().len(), 6);
}
