//! Resource and energy estimation for Rydberg-atom quantum computation.
//!
//! Circuits (QFT, QPE) are lowered to the native gate set of a neutral-atom
//! processor, turned into pulse schedules, and billed per radiation source.
//! The same constants drive analytic scaling curves in the qubit count and a
//! comparison against the energy of a classical FFT.

pub mod circuit;
pub mod classical;
pub mod compiler;
pub mod energetics;
pub mod error;
pub mod hwmodel;
pub mod layout;
pub mod scaling;
pub mod stats;
pub mod units;

pub use circuit::{build_inverse_qft, build_qft, build_qpe, Circuit, Gate, GateKind, OpaqueBlock};
pub use classical::{fft_energy, find_crossover, ClassicalMachine, MachineCatalog};
pub use compiler::{compile, CostMode, PulseSchedule};
pub use energetics::{reproduce_qpe_experiment, run_energy, Category, EnergyLedger, MeasuredRun};
pub use error::{Error, Result};
pub use hwmodel::HardwareProfile;
pub use layout::{mean_pair_distance, simulate_transports, SimulationConfig, TransportPolicy};
pub use scaling::{total_quantum_energy, ScalingCurve, ScalingOptions};
pub use units::{Joules, Meters, MetersPerSecond, Seconds, Watts};
