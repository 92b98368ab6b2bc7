//! Physical parameters of the Rydberg platform.
//!
//! A [`HardwareProfile`] is loaded from a TOML file whose keys carry explicit
//! units (`power_mw`, `duration_ms`, `rabi_rz_khz`, ...). Everything is
//! normalized to SI on load and validated; the profile is immutable after
//! that and can be shared freely between threads.
//!
//! Powers live in one place only, the `sources` table. The trap, transport
//! and preparation blocks refer to sources by id.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Joules, Meters, MetersPerSecond, Seconds, Watts};

/// Source ids every profile must define.
pub const REQUIRED_SOURCES: [&str; 8] = [
    "microwave",
    "laser459",
    "laser1040",
    "trap",
    "tweezer",
    "cooling",
    "pumping",
    "measurement",
];

pub const MICROWAVE: &str = "microwave";
pub const LASER_459: &str = "laser459";
pub const LASER_1040: &str = "laser1040";

const DEFAULT_PROFILE: &str = include_str!("../data/default_profile.toml");

/// Fixed SI constants (CODATA 2018).
pub mod constants {
    /// Vacuum permeability, N/A².
    pub const MU_0: f64 = 1.256_637_062_12e-6;
    /// Bohr magneton, J/T.
    pub const MU_B: f64 = 9.274_010_078_3e-24;
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Speed of light, m/s.
    pub const C: f64 = 299_792_458.0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiationSource {
    pub id: String,
    pub power_at_source: Watts,
    pub loss_fraction: f64,
    pub description: String,
}

impl RadiationSource {
    pub fn new(
        id: impl Into<String>,
        power_at_source: Watts,
        loss_fraction: f64,
        description: impl Into<String>,
    ) -> Result<Self> {
        let source = Self {
            id: id.into(),
            power_at_source,
            loss_fraction,
            description: description.into(),
        };
        source.validate()?;
        Ok(source)
    }

    fn validate(&self) -> Result<()> {
        if !(self.power_at_source.0 > 0.0) || !self.power_at_source.0.is_finite() {
            return Err(Error::Validation(format!(
                "source `{}`: power must be positive, got {} W",
                self.id, self.power_at_source.0
            )));
        }
        if !(0.0..1.0).contains(&self.loss_fraction) {
            return Err(Error::Validation(format!(
                "source `{}`: loss_fraction must be in [0, 1), got {}",
                self.id, self.loss_fraction
            )));
        }
        Ok(())
    }

    /// Power delivered at the atoms.
    pub fn power_at_target(&self) -> Watts {
        self.power_at_source * (1.0 - self.loss_fraction)
    }
}

/// Whether quoted Rabi values are linear frequencies (θ = 2πf·t) or already
/// angular (θ = Ω·t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RabiConvention {
    LinearFrequency,
    AngularFrequency,
}

impl RabiConvention {
    /// Angular frequency in rad/s for a quoted value in Hz (or rad/s).
    pub fn angular(self, quoted: f64) -> f64 {
        match self {
            RabiConvention::LinearFrequency => 2.0 * PI * quoted,
            RabiConvention::AngularFrequency => quoted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NativeGateParams {
    /// Quoted global xy-rotation Rabi frequency (Hz or rad/s per `rabi_convention`).
    pub rabi_global: f64,
    pub rabi_rz: f64,
    pub rabi_cz: f64,
    pub cz_phase_phi01: f64,
    pub cz_detuning_ratio: f64,
    pub rabi_convention: RabiConvention,
}

impl NativeGateParams {
    pub fn omega_global(&self) -> f64 {
        self.rabi_convention.angular(self.rabi_global)
    }

    pub fn omega_rz(&self) -> f64 {
        self.rabi_convention.angular(self.rabi_rz)
    }

    pub fn omega_cz(&self) -> f64 {
        self.rabi_convention.angular(self.rabi_cz)
    }

    /// Phase acquired by |11⟩ in the CZ protocol.
    pub fn cz_phase_phi11(&self) -> f64 {
        2.0 * self.cz_phase_phi01 - PI
    }
}

impl Default for NativeGateParams {
    fn default() -> Self {
        Self {
            rabi_global: 76.5e3,
            rabi_rz: 600e3,
            rabi_cz: 1.7e6,
            cz_phase_phi01: 1.254,
            cz_detuning_ratio: 0.377,
            rabi_convention: RabiConvention::LinearFrequency,
        }
    }
}

/// Measured per-gate time and energy constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConstants {
    pub t_hadamard: Seconds,
    pub e_hadamard: Joules,
    pub t_cz: Seconds,
    pub e_cz: Joules,
    pub enabled: bool,
}

impl Default for CalibrationConstants {
    fn default() -> Self {
        Self {
            t_hadamard: Seconds::from_micros(25.7693),
            e_hadamard: Joules::from_micro(4.98),
            t_cz: Seconds::from_micros(12.2836),
            e_cz: Joules::from_micro(47.3),
            enabled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapParams {
    pub source: String,
    /// Side of the physical trap array; `None` means ⌈√n⌉ for n qubits.
    pub array_side: Option<u32>,
    pub grid_spacing: Meters,
    pub beam_width: Meters,
    pub include_measurement_in_trap_time: bool,
}

impl Default for TrapParams {
    fn default() -> Self {
        Self {
            source: "trap".into(),
            array_side: None,
            grid_spacing: Meters(3e-6),
            beam_width: Meters(1e-6),
            include_measurement_in_trap_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportParams {
    pub source: String,
    pub max_speed: MetersPerSecond,
    pub transports_per_gate_slope: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        Self {
            source: "tweezer".into(),
            max_speed: MetersPerSecond(0.55),
            transports_per_gate_slope: 1.10,
        }
    }
}

/// A source switched on for a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedStep {
    pub source: String,
    pub duration: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepMeasureParams {
    pub cooling: TimedStep,
    pub pumping: TimedStep,
    /// `measurement.source` is the per-beam source.
    pub measurement: TimedStep,
    pub measurement_beam_count: u32,
    pub shots: u64,
}

impl Default for PrepMeasureParams {
    fn default() -> Self {
        Self {
            cooling: TimedStep {
                source: "cooling".into(),
                duration: Seconds::from_millis(100.0),
            },
            pumping: TimedStep {
                source: "pumping".into(),
                duration: Seconds::from_millis(10.0),
            },
            measurement: TimedStep {
                source: "measurement".into(),
                duration: Seconds::from_millis(90.0),
            },
            measurement_beam_count: 4,
            shots: 700,
        }
    }
}

/// Cylindrical resonator used to derive the microwave power from the Rabi
/// frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MicrowaveCavity {
    /// ω in rad/s.
    pub transition_angular_frequency: f64,
    pub radius: Meters,
    pub bessel_root: f64,
    pub bessel_integral: f64,
}

impl MicrowaveCavity {
    /// Effective dipole area μ0·μB²/(ħc).
    pub fn dipole_area(&self) -> f64 {
        use constants::*;
        MU_0 * MU_B * MU_B / (HBAR * C)
    }

    /// Radiation area of the TE11 mode at the transition frequency.
    pub fn radiation_area(&self) -> Result<f64> {
        let a = self.radius.0;
        let cutoff = constants::C * self.bessel_root / (self.transition_angular_frequency * a);
        let arg = 1.0 - cutoff * cutoff;
        if !(arg > 0.0) {
            return Err(Error::Domain(format!(
                "cavity below cutoff: ω·a = {:.6e} must exceed c·p'11 = {:.6e}",
                self.transition_angular_frequency * a,
                constants::C * self.bessel_root
            )));
        }
        Ok(4.0 * self.bessel_integral / self.bessel_root * PI * a * a / arg.sqrt())
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("transition frequency", self.transition_angular_frequency),
            ("radius", self.radius.0),
            ("bessel_root", self.bessel_root),
            ("bessel_integral", self.bessel_integral),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("cavity {name} must be positive")));
            }
        }
        self.radiation_area().map(|_| ())
    }
}

/// Microwave power needed to drive Rabi oscillations at `omega` (rad/s):
/// P = ½ · (A_rad/A_dip) · ħ · Ω².
pub fn microwave_power_from_rabi(omega: f64, cavity: &MicrowaveCavity) -> Result<Watts> {
    let a_rad = cavity.radiation_area()?;
    let a_dip = cavity.dipole_area();
    Ok(Watts(0.5 * a_rad / a_dip * constants::HBAR * omega * omega))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardwareProfile {
    pub sources: BTreeMap<String, RadiationSource>,
    pub gates: NativeGateParams,
    pub calibration: CalibrationConstants,
    pub traps: TrapParams,
    pub transport: TransportParams,
    pub prep: PrepMeasureParams,
    pub cavity: Option<MicrowaveCavity>,
    pub scaling_prep_time: Seconds,
}

impl HardwareProfile {
    /// The built-in profile holding the published parameter values.
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_PROFILE).expect("embedded default profile is valid")
    }

    pub fn default_toml() -> &'static str {
        DEFAULT_PROFILE
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.into_profile()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ProfileFile::from_profile(self)).expect("profile serializes")
    }

    pub fn source(&self, id: &str) -> Result<&RadiationSource> {
        self.sources
            .get(id)
            .ok_or_else(|| Error::Profile(format!("unknown radiation source `{id}`")))
    }

    /// Billing power of a source (power at the emitter).
    pub fn billing_power(&self, id: &str) -> Result<Watts> {
        Ok(self.source(id)?.power_at_source)
    }

    pub fn trap_power(&self) -> Watts {
        self.sources[&self.traps.source].power_at_source
    }

    pub fn tweezer_power(&self) -> Watts {
        self.sources[&self.transport.source].power_at_source
    }

    pub fn measurement_power(&self) -> Watts {
        self.sources[&self.prep.measurement.source].power_at_source
            * f64::from(self.prep.measurement_beam_count)
    }

    fn validate(&self) -> Result<()> {
        for id in REQUIRED_SOURCES {
            if !self.sources.contains_key(id) {
                return Err(Error::Schema(format!("missing required source `{id}`")));
            }
        }
        for source in self.sources.values() {
            source.validate()?;
        }
        let refs = [
            ("traps.source", &self.traps.source),
            ("transport.source", &self.transport.source),
            ("prep.cooling_source", &self.prep.cooling.source),
            ("prep.pumping_source", &self.prep.pumping.source),
            ("prep.measurement_source", &self.prep.measurement.source),
        ];
        for (key, id) in refs {
            if !self.sources.contains_key(id.as_str()) {
                return Err(Error::Schema(format!("{key} refers to unknown source `{id}`")));
            }
        }

        let g = &self.gates;
        for (name, v) in [
            ("rabi_global", g.rabi_global),
            ("rabi_rz", g.rabi_rz),
            ("rabi_cz", g.rabi_cz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("gates.{name} must be positive")));
            }
        }
        if !g.cz_phase_phi01.is_finite() || !g.cz_detuning_ratio.is_finite() {
            return Err(Error::Validation("gates: CZ parameters must be finite".into()));
        }

        let c = &self.calibration;
        if c.enabled {
            for (name, v) in [
                ("t_hadamard", c.t_hadamard.0),
                ("e_hadamard", c.e_hadamard.0),
                ("t_cz", c.t_cz.0),
                ("e_cz", c.e_cz.0),
            ] {
                if !(v > 0.0) {
                    return Err(Error::Validation(format!("calibration.{name} must be positive")));
                }
            }
        }

        let t = &self.traps;
        if t.array_side == Some(0) {
            return Err(Error::Validation("traps.array_side must be at least 1".into()));
        }
        if !(t.beam_width.0 > 0.0) || !(t.grid_spacing.0 > t.beam_width.0) {
            return Err(Error::Validation(
                "traps: require grid_spacing > beam_width > 0".into(),
            ));
        }
        let tr = &self.transport;
        if !(tr.max_speed.0 > 0.0) || !(tr.transports_per_gate_slope > 0.0) {
            return Err(Error::Validation("transport parameters must be positive".into()));
        }

        let p = &self.prep;
        for (name, d) in [
            ("cooling", p.cooling.duration),
            ("pumping", p.pumping.duration),
            ("measurement", p.measurement.duration),
        ] {
            if !(d.0 >= 0.0) {
                return Err(Error::Validation(format!(
                    "prep: {name} duration must be non-negative"
                )));
            }
        }
        if p.shots == 0 {
            return Err(Error::Validation("prep.shots must be at least 1".into()));
        }
        if !(self.scaling_prep_time.0 >= 0.0) {
            return Err(Error::Validation("scaling_prep_time must be non-negative".into()));
        }
        if let Some(cavity) = &self.cavity {
            cavity.validate()?;
        }
        Ok(())
    }

    /// Loose equality used for serialization round-trips: unit conversions
    /// may move values by an ulp.
    pub fn approx_eq(&self, other: &Self, rel: f64) -> bool {
        fn close(a: f64, b: f64, rel: f64) -> bool {
            a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
        }
        self.to_flat_values().len() == other.to_flat_values().len()
            && self
                .to_flat_values()
                .iter()
                .zip(other.to_flat_values())
                .all(|((ka, a), (kb, b))| *ka == kb && close(*a, b, rel))
            && self.flags() == other.flags()
    }

    fn flags(&self) -> (bool, bool, RabiConvention, Vec<String>, u32, (u64, Option<u32>), bool) {
        (
            self.calibration.enabled,
            self.traps.include_measurement_in_trap_time,
            self.gates.rabi_convention,
            self.sources.values().map(|s| format!("{}|{}", s.id, s.description)).collect(),
            self.prep.measurement_beam_count,
            (self.prep.shots, self.traps.array_side),
            self.cavity.is_some(),
        )
    }

    fn to_flat_values(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for s in self.sources.values() {
            out.push((format!("{}.power", s.id), s.power_at_source.0));
            out.push((format!("{}.loss", s.id), s.loss_fraction));
        }
        let g = &self.gates;
        out.extend([
            ("rabi_global".into(), g.rabi_global),
            ("rabi_rz".into(), g.rabi_rz),
            ("rabi_cz".into(), g.rabi_cz),
            ("phi01".into(), g.cz_phase_phi01),
            ("detuning".into(), g.cz_detuning_ratio),
        ]);
        let c = &self.calibration;
        out.extend([
            ("t_h".into(), c.t_hadamard.0),
            ("e_h".into(), c.e_hadamard.0),
            ("t_cz".into(), c.t_cz.0),
            ("e_cz".into(), c.e_cz.0),
        ]);
        out.extend([
            ("spacing".into(), self.traps.grid_spacing.0),
            ("beam".into(), self.traps.beam_width.0),
            ("speed".into(), self.transport.max_speed.0),
            ("slope".into(), self.transport.transports_per_gate_slope),
            ("cool".into(), self.prep.cooling.duration.0),
            ("pump".into(), self.prep.pumping.duration.0),
            ("meas".into(), self.prep.measurement.duration.0),
            ("prep".into(), self.scaling_prep_time.0),
        ]);
        if let Some(cav) = &self.cavity {
            out.extend([
                ("omega".into(), cav.transition_angular_frequency),
                ("radius".into(), cav.radius.0),
                ("p11".into(), cav.bessel_root),
                ("i11".into(), cav.bessel_integral),
            ]);
        }
        out
    }
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self::builtin()
    }
}

// On-disk schema. Field names carry units; conversion to SI happens in
// `into_profile`.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scaling_prep_time_ms: Option<f64>,
    sources: BTreeMap<String, SourceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gates: Option<GatesFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    calibration: Option<CalibrationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    traps: Option<TrapsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transport: Option<TransportFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prep: Option<PrepFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cavity: Option<CavityFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    power_mw: f64,
    #[serde(default)]
    loss_fraction: f64,
    #[serde(default)]
    description: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GatesFile {
    #[serde(default = "default_convention")]
    rabi_convention: RabiConvention,
    rabi_global_khz: f64,
    rabi_rz_khz: f64,
    rabi_cz_khz: f64,
    cz_phase_phi01_rad: f64,
    cz_detuning_ratio: f64,
}

fn default_convention() -> RabiConvention {
    RabiConvention::LinearFrequency
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    #[serde(default = "yes")]
    enabled: bool,
    t_hadamard_us: f64,
    e_hadamard_uj: f64,
    t_cz_us: f64,
    e_cz_uj: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrapsFile {
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    array_side: Option<u32>,
    grid_spacing_um: f64,
    beam_width_um: f64,
    #[serde(default)]
    include_measurement_in_trap_time: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransportFile {
    source: String,
    max_speed_um_per_us: f64,
    transports_per_gate_slope: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrepFile {
    cooling_source: String,
    cooling_duration_ms: f64,
    pumping_source: String,
    pumping_duration_ms: f64,
    measurement_source: String,
    measurement_beam_count: u32,
    measurement_duration_ms: f64,
    shots: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavityFile {
    transition_ghz: f64,
    radius_mm: f64,
    bessel_root: f64,
    bessel_integral: f64,
}

impl ProfileFile {
    fn into_profile(self) -> Result<HardwareProfile> {
        let sources = self
            .sources
            .into_iter()
            .map(|(id, s)| {
                let source = RadiationSource {
                    id: id.clone(),
                    power_at_source: Watts::from_milli(s.power_mw),
                    loss_fraction: s.loss_fraction,
                    description: s.description,
                };
                (id, source)
            })
            .collect();

        let gates = match self.gates {
            Some(g) => NativeGateParams {
                rabi_global: g.rabi_global_khz * 1e3,
                rabi_rz: g.rabi_rz_khz * 1e3,
                rabi_cz: g.rabi_cz_khz * 1e3,
                cz_phase_phi01: g.cz_phase_phi01_rad,
                cz_detuning_ratio: g.cz_detuning_ratio,
                rabi_convention: g.rabi_convention,
            },
            None => NativeGateParams::default(),
        };

        let calibration = match self.calibration {
            Some(c) => CalibrationConstants {
                t_hadamard: Seconds::from_micros(c.t_hadamard_us),
                e_hadamard: Joules::from_micro(c.e_hadamard_uj),
                t_cz: Seconds::from_micros(c.t_cz_us),
                e_cz: Joules::from_micro(c.e_cz_uj),
                enabled: c.enabled,
            },
            None => CalibrationConstants::default(),
        };

        let traps = match self.traps {
            Some(t) => TrapParams {
                source: t.source,
                array_side: t.array_side,
                grid_spacing: Meters(t.grid_spacing_um * 1e-6),
                beam_width: Meters(t.beam_width_um * 1e-6),
                include_measurement_in_trap_time: t.include_measurement_in_trap_time,
            },
            None => TrapParams::default(),
        };

        let transport = match self.transport {
            // μm/μs is numerically m/s
            Some(t) => TransportParams {
                source: t.source,
                max_speed: MetersPerSecond(t.max_speed_um_per_us),
                transports_per_gate_slope: t.transports_per_gate_slope,
            },
            None => TransportParams::default(),
        };

        let prep = match self.prep {
            Some(p) => PrepMeasureParams {
                cooling: TimedStep {
                    source: p.cooling_source,
                    duration: Seconds::from_millis(p.cooling_duration_ms),
                },
                pumping: TimedStep {
                    source: p.pumping_source,
                    duration: Seconds::from_millis(p.pumping_duration_ms),
                },
                measurement: TimedStep {
                    source: p.measurement_source,
                    duration: Seconds::from_millis(p.measurement_duration_ms),
                },
                measurement_beam_count: p.measurement_beam_count,
                shots: p.shots,
            },
            None => PrepMeasureParams::default(),
        };

        let cavity = self.cavity.map(|c| MicrowaveCavity {
            transition_angular_frequency: 2.0 * PI * c.transition_ghz * 1e9,
            radius: Meters(c.radius_mm * 1e-3),
            bessel_root: c.bessel_root,
            bessel_integral: c.bessel_integral,
        });

        let profile = HardwareProfile {
            sources,
            gates,
            calibration,
            traps,
            transport,
            prep,
            cavity,
            scaling_prep_time: Seconds::from_millis(self.scaling_prep_time_ms.unwrap_or(200.0)),
        };
        profile.validate()?;
        Ok(profile)
    }

    fn from_profile(p: &HardwareProfile) -> Self {
        let sources = p
            .sources
            .iter()
            .map(|(id, s)| {
                (
                    id.clone(),
                    SourceFile {
                        power_mw: s.power_at_source.0 * 1e3,
                        loss_fraction: s.loss_fraction,
                        description: s.description.clone(),
                    },
                )
            })
            .collect();
        let g = &p.gates;
        let c = &p.calibration;
        ProfileFile {
            scaling_prep_time_ms: Some(p.scaling_prep_time.0 * 1e3),
            sources,
            gates: Some(GatesFile {
                rabi_convention: g.rabi_convention,
                rabi_global_khz: g.rabi_global * 1e-3,
                rabi_rz_khz: g.rabi_rz * 1e-3,
                rabi_cz_khz: g.rabi_cz * 1e-3,
                cz_phase_phi01_rad: g.cz_phase_phi01,
                cz_detuning_ratio: g.cz_detuning_ratio,
            }),
            calibration: Some(CalibrationFile {
                enabled: c.enabled,
                t_hadamard_us: c.t_hadamard.0 * 1e6,
                e_hadamard_uj: c.e_hadamard.0 * 1e6,
                t_cz_us: c.t_cz.0 * 1e6,
                e_cz_uj: c.e_cz.0 * 1e6,
            }),
            traps: Some(TrapsFile {
                source: p.traps.source.clone(),
                array_side: p.traps.array_side,
                grid_spacing_um: p.traps.grid_spacing.0 * 1e6,
                beam_width_um: p.traps.beam_width.0 * 1e6,
                include_measurement_in_trap_time: p.traps.include_measurement_in_trap_time,
            }),
            transport: Some(TransportFile {
                source: p.transport.source.clone(),
                max_speed_um_per_us: p.transport.max_speed.0,
                transports_per_gate_slope: p.transport.transports_per_gate_slope,
            }),
            prep: Some(PrepFile {
                cooling_source: p.prep.cooling.source.clone(),
                cooling_duration_ms: p.prep.cooling.duration.0 * 1e3,
                pumping_source: p.prep.pumping.source.clone(),
                pumping_duration_ms: p.prep.pumping.duration.0 * 1e3,
                measurement_source: p.prep.measurement.source.clone(),
                measurement_beam_count: p.prep.measurement_beam_count,
                measurement_duration_ms: p.prep.measurement.duration.0 * 1e3,
                shots: p.prep.shots,
            }),
            cavity: p.cavity.as_ref().map(|c| CavityFile {
                transition_ghz: c.transition_angular_frequency / (2.0 * PI) * 1e-9,
                radius_mm: c.radius.0 * 1e3,
                bessel_root: c.bessel_root,
                bessel_integral: c.bessel_integral,
            }),
        }
    }
}
