//! QFT energy and time as functions of the qubit count.
//!
//! The controlled-rotation sum Σ_{m=1}^{n} (n−m)·2^{1−m} is always summed
//! directly. Two closed forms are kept for comparison: the derived one,
//! 2n − 4 + 2^{2−n}, which equals the sum, and the published one,
//! 4(n − 1 + 2^{−n}), which does not (n = 2 gives 5 instead of 1).

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::Gate;
use crate::compiler::{compile_gates, CostMode};
use crate::energetics::gate_energy;
use crate::error::{Error, Result};
use crate::hwmodel::{HardwareProfile, LASER_459};
use crate::layout::{grid_side, mean_pair_distance_for_side, single_hop_cost, transport_energy_with_distance};
use crate::units::{Joules, Seconds};

/// Per-gate constants the closed forms are written in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateCosts {
    pub e_hadamard: Joules,
    pub e_cz: Joules,
    pub t_hadamard: Seconds,
    pub t_cz: Seconds,
    /// P/Ω of the 459 nm laser: joules per radian of Rz.
    pub rz_energy_per_rad: f64,
    /// 1/Ω: seconds per radian of Rz.
    pub rz_time_per_rad: f64,
}

impl GateCosts {
    pub fn new(profile: &HardwareProfile, mode: CostMode) -> Result<Self> {
        let omega = profile.gates.omega_rz();
        let p = profile.billing_power(LASER_459)?;
        let (e_hadamard, e_cz, t_hadamard, t_cz) = match mode {
            CostMode::Calibrated => {
                let c = &profile.calibration;
                (c.e_hadamard, c.e_cz, c.t_hadamard, c.t_cz)
            }
            CostMode::FirstPrinciples => {
                let h = Gate::Hadamard(0);
                let cz = Gate::Cz(0, 1);
                let t = |g: &Gate| -> Result<Seconds> {
                    Ok(compile_gates(std::slice::from_ref(g), 2, profile, mode)?.duration().wall_clock)
                };
                (
                    gate_energy(&h, profile, mode)?,
                    gate_energy(&cz, profile, mode)?,
                    t(&h)?,
                    t(&cz)?,
                )
            }
        };
        Ok(Self {
            e_hadamard,
            e_cz,
            t_hadamard,
            t_cz,
            rz_energy_per_rad: p.0 / omega,
            rz_time_per_rad: 1.0 / omega,
        })
    }
}

/// Σ_{m=1}^{n} (n−m)·2^{1−m}, summed term by term. Terms past the point
/// where 2^{1−m} underflows are exactly zero and are not visited.
pub fn rotation_sum(n: usize) -> f64 {
    let mut total = 0.0;
    let mut w = 1.0;
    for m in 1..=n {
        if w == 0.0 {
            break;
        }
        total += (n - m) as f64 * w;
        w *= 0.5;
    }
    total
}

/// 2n − 4 + 2^{2−n}.
pub fn rotation_sum_derived_closed_form(n: usize) -> f64 {
    2.0 * n as f64 - 4.0 + 2f64.powi(2 - n as i32)
}

/// 4(n − 1 + 2^{−n}), as printed alongside the QFT energy formula.
pub fn rotation_sum_published_closed_form(n: usize) -> f64 {
    4.0 * (n as f64 - 1.0 + 2f64.powi(-(n as i32)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    pub n: usize,
    pub direct: f64,
    pub derived: f64,
    pub published: f64,
    /// published − direct
    pub published_deviation: f64,
}

pub fn closed_form_check(n: usize) -> ClosedFormCheck {
    let direct = rotation_sum(n);
    let published = rotation_sum_published_closed_form(n);
    ClosedFormCheck {
        n,
        direct,
        derived: rotation_sum_derived_closed_form(n),
        published,
        published_deviation: published - direct,
    }
}

/// Energy of CRz(π/2^m): four Hadamards, two CZ and Rz rotations totalling
/// π/2^{m−1}.
pub fn crz_energy(m: u32, costs: &GateCosts) -> Result<Joules> {
    if m == 0 {
        return Err(Error::Argument("controlled rotation index m must be >= 1".into()));
    }
    Ok(costs.e_hadamard * 4.0
        + costs.e_cz * 2.0
        + Joules(costs.rz_energy_per_rad * PI * 2f64.powi(1 - m as i32)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMethod {
    DirectSum,
    PublishedClosedForm,
    DerivedClosedForm,
}

pub fn qft_gate_energy(n: usize, costs: &GateCosts, method: SumMethod) -> Result<Joules> {
    if n == 0 {
        return Err(Error::Argument("QFT needs n >= 1".into()));
    }
    let nf = n as f64;
    let rot = Joules(costs.rz_energy_per_rad * PI);
    Ok(match method {
        SumMethod::DirectSum => {
            // every CRz carries 4 H + 2 CZ; only the rotation part depends on m
            let pairs = (n * (n - 1) / 2) as f64;
            costs.e_hadamard * nf + (costs.e_hadamard * 4.0 + costs.e_cz * 2.0) * pairs + rot * rotation_sum(n)
        }
        SumMethod::PublishedClosedForm => {
            costs.e_hadamard * (nf + 2.0 * nf * (nf - 1.0))
                + costs.e_cz * (nf * (nf - 1.0))
                + rot * rotation_sum_published_closed_form(n)
        }
        SumMethod::DerivedClosedForm => {
            costs.e_hadamard * (nf + 2.0 * nf * (nf - 1.0))
                + costs.e_cz * (nf * (nf - 1.0))
                + rot * rotation_sum_derived_closed_form(n)
        }
    })
}

/// Wall-clock time of the n-qubit QFT. The rotation term is π/Ω times the
/// direct sum (a time, unlike the printed Pπ/Ω).
pub fn qft_time(n: usize, costs: &GateCosts) -> Result<Seconds> {
    if n == 0 {
        return Err(Error::Argument("QFT needs n >= 1".into()));
    }
    let nf = n as f64;
    Ok(costs.t_hadamard * (nf + 2.0 * nf * (nf - 1.0))
        + costs.t_cz * (nf * (nf - 1.0))
        + Seconds(costs.rz_time_per_rad * PI * rotation_sum(n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingOptions {
    pub mode: CostMode,
    /// Add the transport wall-clock to the trap-active time.
    pub transport_extends_trap_time: bool,
    /// Pure multiplier on every energy column.
    pub shots: u64,
}

impl ScalingOptions {
    pub fn for_profile(profile: &HardwareProfile) -> Self {
        Self {
            mode: profile.default_mode(),
            transport_extends_trap_time: false,
            shots: 1,
        }
    }
}

/// Precomputed inputs for evaluating many rows.
pub struct ScalingModel<'a> {
    profile: &'a HardwareProfile,
    opts: ScalingOptions,
    costs: GateCosts,
    e_const: Joules,
    distances: HashMap<usize, f64>,
}

impl<'a> ScalingModel<'a> {
    pub fn new(profile: &'a HardwareProfile, opts: ScalingOptions) -> Result<Self> {
        let prep = &profile.prep;
        let e_const = profile.billing_power(&prep.cooling.source)? * prep.cooling.duration
            + profile.billing_power(&prep.pumping.source)? * prep.pumping.duration
            + profile.measurement_power() * prep.measurement.duration;
        Ok(Self {
            profile,
            opts,
            costs: GateCosts::new(profile, opts.mode)?,
            e_const,
            distances: HashMap::new(),
        })
    }

    pub fn costs(&self) -> &GateCosts {
        &self.costs
    }

    fn mean_distance(&mut self, n: usize) -> f64 {
        let side = grid_side(n);
        *self
            .distances
            .entry(side)
            .or_insert_with(|| mean_pair_distance_for_side(side))
    }

    pub fn traps_energy(&mut self, n: usize) -> Result<Joules> {
        let t = self.trap_time(n)?;
        let sites = grid_side(n).pow(2) as f64;
        Ok(self.profile.trap_power() * sites * t * self.opts.shots as f64)
    }

    fn trap_time(&mut self, n: usize) -> Result<Seconds> {
        let mut t = qft_time(n, &self.costs)? + self.profile.scaling_prep_time;
        if self.opts.transport_extends_trap_time {
            let d = self.mean_distance(n);
            let moves = self.profile.transport.transports_per_gate_slope * (n as f64) * (n as f64 - 1.0) * d;
            t += single_hop_cost(self.profile).time * moves;
        }
        Ok(t)
    }

    pub fn row(&mut self, n: usize) -> Result<ScalingRow> {
        let k = self.opts.shots as f64;
        let e_gates = qft_gate_energy(n, &self.costs, SumMethod::DirectSum)? * k;
        let d = self.mean_distance(n);
        let e_transport = transport_energy_with_distance(n, d, self.profile) * k;
        let e_traps = self.traps_energy(n)?;
        let e_const = self.e_const * k;
        Ok(ScalingRow {
            n,
            e_gates,
            e_transport,
            e_traps,
            e_const,
            e_total: e_gates + e_transport + e_traps + e_const,
            t_qft: qft_time(n, &self.costs)?,
            classical: Vec::new(),
        })
    }

    pub fn curve(&mut self, ns: &[usize]) -> Result<ScalingCurve> {
        let rows = ns.iter().map(|&n| self.row(n)).collect::<Result<Vec<_>>>()?;
        ScalingCurve::new(rows, Vec::new())
    }
}

pub fn traps_energy(n: usize, profile: &HardwareProfile, opts: ScalingOptions) -> Result<Joules> {
    ScalingModel::new(profile, opts)?.traps_energy(n)
}

pub fn total_quantum_energy(n: usize, profile: &HardwareProfile, opts: ScalingOptions) -> Result<ScalingRow> {
    ScalingModel::new(profile, opts)?.row(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    #[serde(rename = "E_gates_J")]
    pub e_gates: Joules,
    #[serde(rename = "E_transport_J")]
    pub e_transport: Joules,
    #[serde(rename = "E_traps_J")]
    pub e_traps: Joules,
    #[serde(rename = "E_const_J")]
    pub e_const: Joules,
    #[serde(rename = "E_total_J")]
    pub e_total: Joules,
    #[serde(rename = "t_qft_s")]
    pub t_qft: Seconds,
    /// Classical energies in joules, one per `ScalingCurve::classical_names`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classical: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Gates,
    Transport,
    Traps,
    Const,
    Total,
    Time,
}

impl Column {
    pub fn of(self, row: &ScalingRow) -> f64 {
        match self {
            Column::Gates => row.e_gates.0,
            Column::Transport => row.e_transport.0,
            Column::Traps => row.e_traps.0,
            Column::Const => row.e_const.0,
            Column::Total => row.e_total.0,
            Column::Time => row.t_qft.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    #[serde(default)]
    pub classical_names: Vec<String>,
    pub rows: Vec<ScalingRow>,
}

pub const CURVE_COLUMNS: [&str; 7] = [
    "n",
    "E_gates_J",
    "E_transport_J",
    "E_traps_J",
    "E_const_J",
    "E_total_J",
    "t_qft_s",
];

impl ScalingCurve {
    pub fn new(rows: Vec<ScalingRow>, classical_names: Vec<String>) -> Result<Self> {
        for w in rows.windows(2) {
            if w[1].n <= w[0].n {
                return Err(Error::Argument("scaling rows must have strictly increasing n".into()));
            }
        }
        if rows.iter().any(|r| r.classical.len() != classical_names.len()) {
            return Err(Error::Argument("classical columns do not match their names".into()));
        }
        Ok(Self { classical_names, rows })
    }

    /// Appends one classical energy column.
    pub fn add_classical(&mut self, name: &str, energy: impl Fn(usize) -> f64) {
        self.classical_names.push(name.to_string());
        for row in &mut self.rows {
            row.classical.push(energy(row.n));
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = CURVE_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(self.classical_names.iter().map(|n| format!("E_classical_{n}_J")));
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![
                r.n.to_string(),
                r.e_gates.0.to_string(),
                r.e_transport.0.to_string(),
                r.e_traps.0.to_string(),
                r.e_const.0.to_string(),
                r.e_total.0.to_string(),
                r.t_qft.0.to_string(),
            ];
            rec.extend(r.classical.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
        if header.len() < CURVE_COLUMNS.len()
            || header.iter().zip(CURVE_COLUMNS).any(|(a, b)| a != b)
        {
            return Err(Error::Parse { line: 1, msg: "unexpected scaling curve header".into() });
        }
        let classical_names: Vec<String> = header
            .iter()
            .skip(CURVE_COLUMNS.len())
            .map(|h| {
                h.strip_prefix("E_classical_")
                    .and_then(|s| s.strip_suffix("_J"))
                    .map(str::to_string)
                    .ok_or_else(|| Error::Parse { line: 1, msg: format!("bad column `{h}`") })
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            let f = |k: usize| -> Result<f64> {
                rec[k].parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{}`", &rec[k]) })
            };
            rows.push(ScalingRow {
                n: rec[0].parse().map_err(|_| Error::Parse { line, msg: "bad n".into() })?,
                e_gates: Joules(f(1)?),
                e_transport: Joules(f(2)?),
                e_traps: Joules(f(3)?),
                e_const: Joules(f(4)?),
                e_total: Joules(f(5)?),
                t_qft: Seconds(f(6)?),
                classical: (CURVE_COLUMNS.len()..rec.len()).map(f).collect::<Result<_>>()?,
            });
        }
        Self::new(rows, classical_names)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ScalingCurve = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::new(c.rows, c.classical_names)
    }

    /// Log-log slope of `column` over rows with n in `[n_min, n_max]`.
    pub fn fit_exponent(&self, column: Column, n_min: usize, n_max: usize) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.n >= n_min && r.n <= n_max)
            .map(|r| (r.n as f64, column.of(r)))
            .collect();
        fit_exponent(&pts)
    }
}

/// Least-squares slope of log y against log x. Needs at least 10 points, all
/// positive.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 10 {
        return Err(Error::Argument(format!(
            "exponent fit needs at least 10 rows, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::Domain("exponent fit needs strictly positive values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    Ok(crate::stats::linear_fit(&xs, &ys)?.slope)
}

/// About `count` distinct integers spread logarithmically over
/// `[n_min, n_max]`, endpoints included.
pub fn log_spaced(n_min: usize, n_max: usize, count: usize) -> Vec<usize> {
    if n_min == 0 || n_max < n_min || count == 0 {
        return Vec::new();
    }
    if count == 1 || n_min == n_max {
        return vec![n_min];
    }
    let (a, b) = ((n_min as f64).ln(), (n_max as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .map(|n| n.clamp(n_min, n_max))
        .collect();
    out.dedup();
    out
}

/// Smallest n₀ ≤ n_max such that E_traps > E_transport > E_gates holds for
/// every n in [n₀, n_max]; `None` if it fails at n_max.
pub fn dominance_onset(profile: &HardwareProfile, opts: ScalingOptions, n_max: usize) -> Result<Option<usize>> {
    let mut model = ScalingModel::new(profile, opts)?;
    let mut onset = None;
    for n in (2..=n_max).rev() {
        let r = model.row(n)?;
        if r.e_traps > r.e_transport && r.e_transport > r.e_gates {
            onset = Some(n);
        } else {
            break;
        }
    }
    Ok(onset)
}
