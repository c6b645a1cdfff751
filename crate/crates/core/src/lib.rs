//! Simulation of adiabatic quantum computation on small Ising problems.
//!
//! The path Hamiltonian is `H(s) = (1 - s) H_I + s H_F` with a transverse
//! field `H_I = -sum_i sigma_x^(i)` and a diagonal problem Hamiltonian built
//! from all z-axis couplings `J_x`. Qubit `i` (0-based) corresponds to bit
//! `1 << i` of the integer labels used for both couplings and basis states.
//!
//! Modules, bottom up:
//! - [`hamiltonian`]: couplings, final energies, dense and matrix-free operators
//! - [`spectrum`]: Jacobi eigensolver, minimum-gap search, adiabatic diagnostics
//! - [`evolution`]: adaptive Dormand-Prince propagation with dense output
//! - [`metrics`]: success probability, energy error, average overlap, records
//! - [`ensemble`]: seeded sampling and parallel sweeps
//! - [`io`]: config parsing, CSV records, SVG plots

pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod io;
pub mod metrics;
pub mod spectrum;

pub use ensemble::{
    run_ensemble, sample_couplings, slice_sweep, EnsembleConfig, EnsembleSummary, SamplerKind, SamplerSpec,
};
pub use error::{Error, Result};
pub use evolution::{evolve, EvolveOptions, IntegrationResult, QuantumState};
pub use hamiltonian::{
    apply_hamiltonian, build_initial, final_energies, interpolate, CouplingVector, FinalEnergies, SymmetricOperator,
    MAX_QUBITS,
};
pub use io::{
    config::{parse_config, RunConfig},
    csv::{read_records, write_records, RecordWriter, HEADER},
    plot::{emit_plot, render_svg, PlotKind, PlotSpec},
};
pub use metrics::{run_instance, InstanceRecord, RecordFlags, Settings};
pub use spectrum::{eigensystem, find_min_gap, Eigensystem, GapResult};
