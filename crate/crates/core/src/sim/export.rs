//! Binary state files.
//!
//! Layout: 8-byte magic `MTOPOSV\0`, `u32` format version, `u32` precision in
//! bits per amplitude (64 or 128), `u64` header length, a JSON header
//! `{"qubits": [...], "n_amplitudes": N}` naming bit `b` of the amplitude
//! index, then `N` amplitudes as little-endian `(re, im)` pairs.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::state::{Precision, Real, StateVector};
use crate::error::{Error, Result};
use crate::lattice::QubitId;

pub const MAGIC: &[u8; 8] = b"MTOPOSV\0";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    qubits: Vec<QubitId>,
    n_amplitudes: u64,
}

pub fn write_state<T: Real, W: Write>(state: &StateVector<T>, mut w: W) -> Result<()> {
    let header = serde_json::to_vec(&Header { qubits: state.qubits().to_vec(), n_amplitudes: state.amplitudes().len() as u64 })?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&T::PRECISION.bits().to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(1 << 16);
    for a in state.amplitudes() {
        a.re.write_le(&mut buf);
        a.im.write_le(&mut buf);
        if buf.len() >= 1 << 16 {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// A state read back from disk, in whichever precision it was written.
#[derive(Clone, Debug)]
pub enum AnyState {
    Single(StateVector<f32>),
    Double(StateVector<f64>),
}

impl AnyState {
    pub fn precision(&self) -> Precision {
        match self {
            AnyState::Single(_) => Precision::Complex64,
            AnyState::Double(_) => Precision::Complex128,
        }
    }

    pub fn to_f64(&self) -> StateVector<f64> {
        match self {
            AnyState::Single(s) => s.to_f64(),
            AnyState::Double(s) => s.clone(),
        }
    }
}

pub fn read_state<R: Read>(mut r: R) -> Result<AnyState> {
    let mut fixed = [0u8; 24];
    r.read_exact(&mut fixed).map_err(|_| Error::Format("truncated state header".into()))?;
    if &fixed[..8] != MAGIC {
        return Err(Error::Format("not a state file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(fixed[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported state file version {version}")));
    }
    let bits = u32::from_le_bytes(fixed[12..16].try_into().unwrap());
    let hlen = u64::from_le_bytes(fixed[16..24].try_into().unwrap());
    if hlen > 1 << 24 {
        return Err(Error::Format("state header too long".into()));
    }
    let mut hbuf = vec![0u8; hlen as usize];
    r.read_exact(&mut hbuf).map_err(|_| Error::Format("truncated state header".into()))?;
    let header: Header = serde_json::from_slice(&hbuf).map_err(|e| Error::Format(format!("state header: {e}")))?;
    if header.n_amplitudes != 1u64 << header.qubits.len() {
        return Err(Error::Format("amplitude count does not match qubit count".into()));
    }
    match bits {
        64 => Ok(AnyState::Single(read_amps::<f32, _>(r, header)?)),
        128 => Ok(AnyState::Double(read_amps::<f64, _>(r, header)?)),
        b => Err(Error::Format(format!("unsupported precision {b}"))),
    }
}

fn read_amps<T: Real, R: Read>(mut r: R, header: Header) -> Result<StateVector<T>> {
    let n = header.n_amplitudes as usize;
    let mut bytes = vec![0u8; n * 2 * T::BYTES];
    r.read_exact(&mut bytes).map_err(|_| Error::Format("truncated amplitude data".into()))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after amplitudes".into()));
    }
    let amps = bytes
        .chunks_exact(2 * T::BYTES)
        .map(|c| Complex::new(T::read_le(&c[..T::BYTES]), T::read_le(&c[T::BYTES..])))
        .collect();
    StateVector::from_amplitudes(header.qubits, amps)
}
