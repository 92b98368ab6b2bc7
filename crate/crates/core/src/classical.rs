//! Classical FFT energy and the quantum/classical crossover.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwmodel::HardwareProfile;
use crate::scaling::{ScalingModel, ScalingOptions};
use crate::units::{Joules, Watts};

pub const DEFAULT_BITOPS_PER_FLOP: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalMachine {
    pub name: String,
    /// flop/s
    pub performance: Option<f64>,
    pub power: Option<Watts>,
    pub bitops_per_flop: f64,
    /// Direct value; overrides the derivation when present.
    pub joules_per_bitop: Option<f64>,
}

impl ClassicalMachine {
    pub fn from_figures(name: &str, performance: f64, power: Watts, bitops_per_flop: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            performance: Some(performance),
            power: Some(power),
            bitops_per_flop,
            joules_per_bitop: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_joules_per_bitop(name: &str, j: f64) -> Result<Self> {
        let m = Self {
            name: name.to_string(),
            performance: None,
            power: None,
            bitops_per_flop: DEFAULT_BITOPS_PER_FLOP,
            joules_per_bitop: Some(j),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(format!("machine `{}`: {msg}", self.name)));
        if let Some(j) = self.joules_per_bitop {
            if !(j >= 0.0) || !j.is_finite() {
                return bad(format!("joules_per_bitop must be >= 0, got {j}"));
            }
            return Ok(());
        }
        match (self.performance, self.power) {
            (Some(p), Some(w)) => {
                if !(p > 0.0) || !(w.0 > 0.0) || !(self.bitops_per_flop > 0.0) {
                    return bad("performance, power and bitops_per_flop must be > 0".into());
                }
                Ok(())
            }
            _ => bad("needs either joules_per_bitop or both performance and power".into()),
        }
    }

    pub fn joules_per_bitop(&self) -> Result<f64> {
        self.validate()?;
        if let Some(j) = self.joules_per_bitop {
            return Ok(j);
        }
        let (p, w) = (self.performance.unwrap(), self.power.unwrap());
        Ok(w.0 / p / self.bitops_per_flop)
    }
}

/// joules_per_bitop × n × 2ⁿ
pub fn fft_energy(m: &ClassicalMachine, n: usize) -> Result<Joules> {
    if n == 0 {
        return Err(Error::Argument("FFT size needs n >= 1".into()));
    }
    let j = m.joules_per_bitop()?;
    if j == 0.0 {
        return Ok(Joules::ZERO);
    }
    let e = j * n as f64 * 2f64.powi(n as i32);
    if !e.is_finite() {
        return Err(Error::Domain(format!("FFT energy overflows for n = {n}")));
    }
    Ok(Joules(e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    machines: BTreeMap<String, MachineFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineFile {
    pflops: Option<f64>,
    power_kw: Option<f64>,
    bitops_per_flop: Option<f64>,
    joules_per_bitop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineCatalog {
    machines: BTreeMap<String, ClassicalMachine>,
}

const BUILTIN_CATALOG: &str = include_str!("../data/machines.toml");

impl MachineCatalog {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_CATALOG).expect("built-in catalog is valid")
    }

    pub fn builtin_toml() -> &'static str {
        BUILTIN_CATALOG
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let mut machines = BTreeMap::new();
        for (name, f) in file.machines {
            let m = ClassicalMachine {
                name: name.clone(),
                performance: f.pflops.map(|p| p * 1e15),
                power: f.power_kw.map(|kw| Watts(kw * 1e3)),
                bitops_per_flop: f.bitops_per_flop.unwrap_or(DEFAULT_BITOPS_PER_FLOP),
                joules_per_bitop: f.joules_per_bitop,
            };
            m.validate()?;
            machines.insert(name, m);
        }
        Ok(Self { machines })
    }

    /// Built-in entries overlaid with the ones in `path`.
    pub fn load_extending_builtin(path: impl AsRef<Path>) -> Result<Self> {
        let mut cat = Self::builtin();
        let extra = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        cat.machines.extend(extra.machines);
        Ok(cat)
    }

    pub fn get(&self, name: &str) -> Result<&ClassicalMachine> {
        self.machines.get(name).ok_or_else(|| {
            Error::Argument(format!(
                "unknown machine `{name}`; catalog has: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.machines.keys().cloned().collect()
    }

    pub fn machines(&self) -> impl Iterator<Item = &ClassicalMachine> {
        self.machines.values()
    }
}

/// Smallest n in [1, n_max] with E_total(n) < fft_energy(n), scanning upward.
pub fn find_crossover(
    profile: &HardwareProfile,
    opts: ScalingOptions,
    machine: &ClassicalMachine,
    n_max: usize,
) -> Result<Option<usize>> {
    let mut model = ScalingModel::new(profile, opts)?;
    for n in 1..=n_max {
        if model.row(n)?.e_total < fft_energy(machine, n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub n: usize,
    #[serde(rename = "E_quantum_J")]
    pub e_quantum: Joules,
    #[serde(rename = "E_classical_J")]
    pub e_classical: Joules,
    /// quantum / classical
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub machine: String,
    pub joules_per_bitop: f64,
    pub rows: Vec<ComparisonRow>,
    pub crossover: Option<usize>,
}

/// Quantum vs classical energies for n in [n_min, n_max]. The crossover is
/// searched from n = 1 so it does not depend on n_min.
pub fn compare(
    profile: &HardwareProfile,
    opts: ScalingOptions,
    machine: &ClassicalMachine,
    n_min: usize,
    n_max: usize,
) -> Result<Comparison> {
    let mut model = ScalingModel::new(profile, opts)?;
    let mut rows = Vec::new();
    for n in n_min.max(1)..=n_max {
        let q = model.row(n)?.e_total;
        let c = fft_energy(machine, n)?;
        rows.push(ComparisonRow { n, e_quantum: q, e_classical: c, ratio: q.0 / c.0 });
    }
    let crossover = if n_min > n_max {
        None
    } else {
        find_crossover(profile, opts, machine, n_max)?
    };
    Ok(Comparison {
        machine: machine.name.clone(),
        joules_per_bitop: machine.joules_per_bitop()?,
        rows,
        crossover,
    })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "E_quantum_J", "E_classical_J", "ratio"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.e_quantum.0.to_string(),
                r.e_classical.0.to_string(),
                r.ratio.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}
