//! Fixtures shared by the kernel benchmarks.

use aqc_core::{sample_couplings, CouplingVector, QuantumState, SamplerKind, SamplerSpec};

/// Reproducible uniform couplings on `[-3, 3]`.
pub fn couplings(n: usize, index: u64) -> CouplingVector {
    let spec = SamplerSpec { kind: SamplerKind::Uniform { half_width: 3.0 }, seed: 0x5eed };
    sample_couplings(&spec, n, index).expect("qubit count within range")
}

pub fn uniform_state(n: usize) -> QuantumState {
    QuantumState::uniform(n)
}
