//! Lowering of abstract gates to the native gate set and of native gates to
//! timed pulses.
//!
//! Native gates are global xy rotations (microwave), local Rz (459 nm Stark
//! shift) and CZ (459 nm + 1040 nm two-photon Rydberg excitation followed
//! by Rz corrections). Pulse lengths follow θ = Ω·t with Ω the angular Rabi
//! frequency; negative angles flip the drive phase and cost |θ|/Ω.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, Matrix, OpaqueBlock};
use crate::error::{Error, Result};
use crate::hwmodel::{HardwareProfile, LASER_1040, LASER_459, MICROWAVE};
use crate::units::{Joules, Seconds};

/// Pseudo-source ids used for on-times of calibrated blocks.
pub const CALIBRATED_HADAMARD: &str = "calibrated_hadamard";
pub const CALIBRATED_CZ: &str = "calibrated_cz";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    FirstPrinciples,
    Calibrated,
}

impl std::str::FromStr for CostMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "first_principles" => Ok(CostMode::FirstPrinciples),
            "calibrated" => Ok(CostMode::Calibrated),
            other => Err(Error::Argument(format!(
                "unknown mode `{other}` (expected first_principles or calibrated)"
            ))),
        }
    }
}

impl HardwareProfile {
    /// Calibrated when the profile enables its calibration block.
    pub fn default_mode(&self) -> CostMode {
        if self.calibration.enabled {
            CostMode::Calibrated
        } else {
            CostMode::FirstPrinciples
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    GlobalXy,
    LocalRz,
    CzTwoPhoton,
    CzCorrection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub source_id: String,
    pub duration: Seconds,
    pub purpose: Purpose,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibratedGate {
    Hadamard,
    Cz,
}

/// A gate priced from measured constants rather than from its pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedBlock {
    pub gate: CalibratedGate,
    pub qubits: Vec<usize>,
    pub duration: Seconds,
    pub energy: Joules,
}

impl CalibratedBlock {
    pub fn source_id(&self) -> &'static str {
        match self.gate {
            CalibratedGate::Hadamard => CALIBRATED_HADAMARD,
            CalibratedGate::Cz => CALIBRATED_CZ,
        }
    }
}

/// One sequential step of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Step {
    Pulse(Pulse),
    /// Pulses that run simultaneously (the two lasers of a CZ pulse).
    Concurrent(Vec<Pulse>),
    Calibrated(CalibratedBlock),
    Opaque(OpaqueBlock),
}

impl Step {
    pub fn wall_clock(&self) -> Seconds {
        match self {
            Step::Pulse(p) => p.duration,
            Step::Concurrent(ps) => ps.iter().fold(Seconds::ZERO, |m, p| m.max(p.duration)),
            Step::Calibrated(b) => b.duration,
            Step::Opaque(b) => b.wall_clock(),
        }
    }

    /// (source, on-time) contributions of this step.
    pub fn on_times(&self) -> Vec<(&str, Seconds)> {
        match self {
            Step::Pulse(p) => vec![(p.source_id.as_str(), p.duration)],
            Step::Concurrent(ps) => ps.iter().map(|p| (p.source_id.as_str(), p.duration)).collect(),
            Step::Calibrated(b) => vec![(b.source_id(), b.duration)],
            Step::Opaque(b) => b.durations.iter().map(|(s, d)| (s.as_str(), *d)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTiming {
    pub on_time: BTreeMap<String, Seconds>,
    pub wall_clock: Seconds,
}

impl PulseSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: PulseSchedule) {
        self.steps.extend(other.steps);
    }

    pub fn concat(mut self, other: &PulseSchedule) -> PulseSchedule {
        self.steps.extend(other.steps.iter().cloned());
        self
    }

    /// Every physical pulse in order, concurrent groups flattened.
    pub fn pulses(&self) -> impl Iterator<Item = &Pulse> {
        self.steps.iter().flat_map(|s| match s {
            Step::Pulse(p) => std::slice::from_ref(p).iter(),
            Step::Concurrent(ps) => ps.iter(),
            _ => [].iter(),
        })
    }

    pub fn has_concurrency(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, Step::Concurrent(ps) if ps.len() > 1))
    }

    pub fn duration(&self) -> ScheduleTiming {
        schedule_duration(self)
    }
}

pub fn schedule_duration(s: &PulseSchedule) -> ScheduleTiming {
    let mut timing = ScheduleTiming::default();
    for step in &s.steps {
        for (src, d) in step.on_times() {
            *timing.on_time.entry(src.to_string()).or_default() += d;
        }
        timing.wall_clock += step.wall_clock();
    }
    timing
}

// Abstract → native.

/// R_φ(θ) on one qubit as global–local–global:
/// G_{φ+π/2}(α) · Rz(θ) · G_{φ+π/2}(−α) in time order, α = π/2.
pub fn decompose_local_rotation(q: usize, axis: f64, angle: f64) -> Vec<Gate> {
    let alpha = FRAC_PI_2;
    let global_axis = axis + FRAC_PI_2;
    vec![
        Gate::GlobalRPhi { axis: global_axis, angle: alpha },
        Gate::LocalRz { qubit: q, angle },
        Gate::GlobalRPhi { axis: global_axis, angle: -alpha },
    ]
}

/// H = R_y(π/2) · Rz(π) up to global phase; R_y is the xy rotation at
/// axis −π/2.
pub fn decompose_hadamard(q: usize) -> Vec<Gate> {
    let mut out = vec![Gate::LocalRz { qubit: q, angle: PI }];
    out.extend(decompose_local_rotation(q, -FRAC_PI_2, FRAC_PI_2));
    out
}

/// Controlled-Rz(θ) as Rz(−θ/2)·H·CZ·H·Rz(−θ/2)·H·CZ·H·Rz(θ) on the target
/// (time order), i.e. two CNOTs sandwiched by target rotations.
pub fn decompose_crz(ctrl: usize, tgt: usize, angle: f64) -> Vec<Gate> {
    let half = -angle / 2.0;
    vec![
        Gate::LocalRz { qubit: tgt, angle: half },
        Gate::Hadamard(tgt),
        Gate::Cz(ctrl, tgt),
        Gate::Hadamard(tgt),
        Gate::LocalRz { qubit: tgt, angle: half },
        Gate::Hadamard(tgt),
        Gate::Cz(ctrl, tgt),
        Gate::Hadamard(tgt),
        Gate::LocalRz { qubit: tgt, angle },
    ]
}

/// Expands composite gates until only H, CZ, local Rz, global rotations and
/// opaque blocks remain. Hadamards are kept so calibrated pricing can see them.
fn expand_to_elementary(gate: &Gate, out: &mut Vec<Gate>) {
    match gate {
        Gate::ControlledRz { control, target, angle } => {
            out.extend(decompose_crz(*control, *target, *angle))
        }
        Gate::LocalRPhi { qubit, axis, angle } => {
            out.extend(decompose_local_rotation(*qubit, *axis, *angle))
        }
        g => out.push(g.clone()),
    }
}

/// Fully native gate sequence for a circuit (Hadamards lowered too).
pub fn lower_to_native(circuit: &Circuit) -> Vec<Gate> {
    lower_gates(circuit.gates())
}

pub fn lower_gates(gates: &[Gate]) -> Vec<Gate> {
    let mut elementary = Vec::new();
    for g in gates {
        expand_to_elementary(g, &mut elementary);
    }
    elementary
        .into_iter()
        .flat_map(|g| match g {
            Gate::Hadamard(q) => decompose_hadamard(q),
            g => vec![g],
        })
        .collect()
}

// Native → pulses.

/// Two-photon CZ: two pulses of length 2π/(√2·Ω_CZ) on both lasers at once,
/// then Rz(−φ01) on each qubit.
pub fn lower_cz(q1: usize, q2: usize, profile: &HardwareProfile) -> Vec<Step> {
    let g = &profile.gates;
    let t_pulse = Seconds(2.0 * PI / (SQRT_2 * g.omega_cz()));
    let two_photon = || {
        Step::Concurrent(vec![
            Pulse {
                source_id: LASER_459.into(),
                duration: t_pulse,
                purpose: Purpose::CzTwoPhoton,
                qubits: vec![q1, q2],
            },
            Pulse {
                source_id: LASER_1040.into(),
                duration: t_pulse,
                purpose: Purpose::CzTwoPhoton,
                qubits: vec![q1, q2],
            },
        ])
    };
    let t_corr = Seconds(g.cz_phase_phi01.abs() / g.omega_rz());
    let mut steps = vec![two_photon(), two_photon()];
    if t_corr.0 > 0.0 {
        for q in [q1, q2] {
            steps.push(Step::Pulse(Pulse {
                source_id: LASER_459.into(),
                duration: t_corr,
                purpose: Purpose::CzCorrection,
                qubits: vec![q],
            }));
        }
    }
    steps
}

/// (Rz(−φ)⊗Rz(−φ)) · diag(1, e^{iφ}, e^{iφ}, e^{i(2φ−π)}): the unitary the
/// CZ pulse pair plus corrections implements.
pub fn cz_protocol_unitary(phi: f64) -> Matrix {
    let raw = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, phi),
        Complex64::from_polar(1.0, phi),
        Complex64::from_polar(1.0, 2.0 * phi - PI),
    ]));
    let rz = crate::circuit::rz_matrix(-phi);
    rz.kronecker(&rz) * raw
}

fn rotation_pulse(source: &str, purpose: Purpose, angle: f64, omega: f64, qubits: Vec<usize>) -> Option<Step> {
    let duration = angle.abs() / omega;
    (duration > 0.0).then(|| {
        Step::Pulse(Pulse {
            source_id: source.into(),
            duration: Seconds(duration),
            purpose,
            qubits,
        })
    })
}

fn lower_native(gate: &Gate, profile: &HardwareProfile, n_qubits: usize, out: &mut PulseSchedule) {
    let g = &profile.gates;
    match gate {
        Gate::GlobalRPhi { angle, .. } => {
            out.steps.extend(rotation_pulse(
                MICROWAVE,
                Purpose::GlobalXy,
                *angle,
                g.omega_global(),
                (0..n_qubits).collect(),
            ));
        }
        Gate::LocalRz { qubit, angle } => {
            out.steps.extend(rotation_pulse(
                LASER_459,
                Purpose::LocalRz,
                *angle,
                g.omega_rz(),
                vec![*qubit],
            ));
        }
        Gate::Cz(a, b) => out.steps.extend(lower_cz(*a, *b, profile)),
        Gate::OpaqueTimed(block) => out.push(Step::Opaque(block.clone())),
        other => unreachable!("non-native gate {other:?} reached pulse lowering"),
    }
}

/// Lowers a circuit to a pulse schedule.
pub fn compile(circuit: &Circuit, profile: &HardwareProfile, mode: CostMode) -> Result<PulseSchedule> {
    compile_gates(circuit.gates(), circuit.n_qubits(), profile, mode)
}

pub fn compile_gates(
    gates: &[Gate],
    n_qubits: usize,
    profile: &HardwareProfile,
    mode: CostMode,
) -> Result<PulseSchedule> {
    for id in [MICROWAVE, LASER_459, LASER_1040] {
        profile.source(id)?;
    }
    let mut elementary = Vec::new();
    for g in gates {
        if let Gate::OpaqueTimed(b) = g {
            for src in b.durations.keys() {
                profile.source(src)?;
            }
        }
        expand_to_elementary(g, &mut elementary);
    }

    let cal = &profile.calibration;
    let mut schedule = PulseSchedule::new();
    for gate in &elementary {
        match (mode, gate) {
            (CostMode::Calibrated, Gate::Hadamard(q)) => {
                schedule.push(Step::Calibrated(CalibratedBlock {
                    gate: CalibratedGate::Hadamard,
                    qubits: vec![*q],
                    duration: cal.t_hadamard,
                    energy: cal.e_hadamard,
                }));
            }
            (CostMode::Calibrated, Gate::Cz(a, b)) => {
                schedule.push(Step::Calibrated(CalibratedBlock {
                    gate: CalibratedGate::Cz,
                    qubits: vec![*a, *b],
                    duration: cal.t_cz,
                    energy: cal.e_cz,
                }));
            }
            (CostMode::FirstPrinciples, Gate::Hadamard(q)) => {
                for native in decompose_hadamard(*q) {
                    lower_native(&native, profile, n_qubits, &mut schedule);
                }
            }
            (_, g) => lower_native(g, profile, n_qubits, &mut schedule),
        }
    }
    Ok(schedule)
}
