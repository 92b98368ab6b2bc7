//! Abstract gate IR, QFT/QPE builders and a small unitary oracle.
//!
//! Qubit 0 is the most significant qubit (top wire of the usual QFT
//! drawing). Indices are 0-based throughout.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Seconds;

/// Largest register the unitary oracle accepts.
pub const MAX_ORACLE_QUBITS: usize = 4;

/// A block with externally measured per-source on-times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpaqueBlock {
    pub label: String,
    pub qubits: Vec<usize>,
    pub durations: BTreeMap<String, Seconds>,
    /// Wall-clock time of the block; defaults to the sum of `durations`.
    pub wall_clock: Option<Seconds>,
}

impl OpaqueBlock {
    pub fn new(label: impl Into<String>, qubits: Vec<usize>) -> Self {
        Self {
            label: label.into(),
            qubits,
            durations: BTreeMap::new(),
            wall_clock: None,
        }
    }

    pub fn with_duration(mut self, source: impl Into<String>, duration: Seconds) -> Self {
        self.durations.insert(source.into(), duration);
        self
    }

    pub fn wall_clock(&self) -> Seconds {
        self.wall_clock
            .unwrap_or_else(|| self.durations.values().copied().sum())
    }

    /// The block repeated `count` times back to back.
    pub fn repeated(&self, count: u64) -> Self {
        let k = count as f64;
        Self {
            label: if count == 1 {
                self.label.clone()
            } else {
                format!("{}^{count}", self.label)
            },
            qubits: self.qubits.clone(),
            durations: self.durations.iter().map(|(s, d)| (s.clone(), *d * k)).collect(),
            wall_clock: self.wall_clock.map(|w| w * k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Hadamard(usize),
    ControlledRz { control: usize, target: usize, angle: f64 },
    Cz(usize, usize),
    LocalRz { qubit: usize, angle: f64 },
    /// Rotation by `angle` about the xy-plane axis at `axis` on one qubit.
    LocalRPhi { qubit: usize, axis: f64, angle: f64 },
    /// Same rotation applied to every qubit at once.
    GlobalRPhi { axis: f64, angle: f64 },
    OpaqueTimed(OpaqueBlock),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Hadamard,
    ControlledRz,
    Cz,
    LocalRz,
    LocalRPhi,
    GlobalRPhi,
    OpaqueTimed,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::Hadamard,
        GateKind::ControlledRz,
        GateKind::Cz,
        GateKind::LocalRz,
        GateKind::LocalRPhi,
        GateKind::GlobalRPhi,
        GateKind::OpaqueTimed,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::Hadamard => "H",
            GateKind::ControlledRz => "CRZ",
            GateKind::Cz => "CZ",
            GateKind::LocalRz => "RZ",
            GateKind::LocalRPhi => "RPHI",
            GateKind::GlobalRPhi => "GRPHI",
            GateKind::OpaqueTimed => "OPAQUE",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Hadamard(_) => GateKind::Hadamard,
            Gate::ControlledRz { .. } => GateKind::ControlledRz,
            Gate::Cz(..) => GateKind::Cz,
            Gate::LocalRz { .. } => GateKind::LocalRz,
            Gate::LocalRPhi { .. } => GateKind::LocalRPhi,
            Gate::GlobalRPhi { .. } => GateKind::GlobalRPhi,
            Gate::OpaqueTimed(_) => GateKind::OpaqueTimed,
        }
    }

    /// Qubits the gate acts on; empty for global gates.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Hadamard(q) => vec![*q],
            Gate::ControlledRz { control, target, .. } => vec![*control, *target],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::LocalRz { qubit, .. } | Gate::LocalRPhi { qubit, .. } => vec![*qubit],
            Gate::GlobalRPhi { .. } => vec![],
            Gate::OpaqueTimed(b) => b.qubits.clone(),
        }
    }

    fn angles(&self) -> Vec<f64> {
        match self {
            Gate::ControlledRz { angle, .. } | Gate::LocalRz { angle, .. } => vec![*angle],
            Gate::LocalRPhi { axis, angle, .. } | Gate::GlobalRPhi { axis, angle } => {
                vec![*axis, *angle]
            }
            _ => vec![],
        }
    }

    /// The inverse gate. Opaque blocks are returned unchanged.
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::ControlledRz { control, target, angle } => Gate::ControlledRz {
                control: *control,
                target: *target,
                angle: -angle,
            },
            Gate::LocalRz { qubit, angle } => Gate::LocalRz { qubit: *qubit, angle: -angle },
            Gate::LocalRPhi { qubit, axis, angle } => Gate::LocalRPhi {
                qubit: *qubit,
                axis: *axis,
                angle: -angle,
            },
            Gate::GlobalRPhi { axis, angle } => Gate::GlobalRPhi { axis: *axis, angle: -angle },
            g => g.clone(),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (i, q) in qs.iter().enumerate() {
            if *q >= n_qubits {
                return Err(Error::Argument(format!(
                    "{} acts on qubit {q}, circuit has {n_qubits}",
                    self.kind()
                )));
            }
            if qs[..i].contains(q) {
                return Err(Error::Argument(format!(
                    "{} repeats qubit {q}",
                    self.kind()
                )));
            }
        }
        if self.angles().iter().any(|a| !a.is_finite()) {
            return Err(Error::Argument(format!("{} has a non-finite angle", self.kind())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Argument("a circuit needs at least one qubit".into()));
        }
        Ok(Self { n_qubits, gates: Vec::new() })
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `other`'s gates, shifted up by `offset` qubits.
    pub fn append_shifted(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        for g in other.gates() {
            self.push(shift_gate(g, offset))?;
        }
        Ok(())
    }

    /// Gates reversed with every rotation negated.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn gate_count_summary(&self) -> BTreeMap<GateKind, usize> {
        gate_count_summary(&self.gates)
    }

    /// Line-oriented text form, one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for g in &self.gates {
            out.push_str(&format_gate(g));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        text.parse()
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or_default();
            let args: Vec<&str> = parts.collect();
            if head.eq_ignore_ascii_case("qubits") {
                if circuit.is_some() {
                    return Err(perr("duplicate `qubits` header".into()));
                }
                let n = match args.as_slice() {
                    [n] => n.parse::<usize>().map_err(|e| perr(format!("bad qubit count: {e}")))?,
                    _ => return Err(perr("expected `qubits <n>`".into())),
                };
                circuit = Some(Circuit::new(n).map_err(|e| perr(e.to_string()))?);
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| perr("gate before `qubits <n>` header".into()))?;
            let gate = parse_gate(head, &args).map_err(perr)?;
            c.push(gate).map_err(|e| perr(e.to_string()))?;
        }
        circuit.ok_or(Error::Parse { line: 0, msg: "missing `qubits <n>` header".into() })
    }
}

fn shift_gate(g: &Gate, k: usize) -> Gate {
    match g {
        Gate::Hadamard(q) => Gate::Hadamard(q + k),
        Gate::ControlledRz { control, target, angle } => Gate::ControlledRz {
            control: control + k,
            target: target + k,
            angle: *angle,
        },
        Gate::Cz(a, b) => Gate::Cz(a + k, b + k),
        Gate::LocalRz { qubit, angle } => Gate::LocalRz { qubit: qubit + k, angle: *angle },
        Gate::LocalRPhi { qubit, axis, angle } => Gate::LocalRPhi {
            qubit: qubit + k,
            axis: *axis,
            angle: *angle,
        },
        Gate::GlobalRPhi { .. } => g.clone(),
        Gate::OpaqueTimed(b) => {
            let mut b = b.clone();
            b.qubits.iter_mut().for_each(|q| *q += k);
            Gate::OpaqueTimed(b)
        }
    }
}

fn format_gate(g: &Gate) -> String {
    match g {
        Gate::Hadamard(q) => format!("H {q}"),
        Gate::ControlledRz { control, target, angle } => format!("CRZ {control} {target} {angle:?}"),
        Gate::Cz(a, b) => format!("CZ {a} {b}"),
        Gate::LocalRz { qubit, angle } => format!("RZ {qubit} {angle:?}"),
        Gate::LocalRPhi { qubit, axis, angle } => format!("RPHI {qubit} {axis:?} {angle:?}"),
        Gate::GlobalRPhi { axis, angle } => format!("GRPHI {axis:?} {angle:?}"),
        Gate::OpaqueTimed(b) => {
            let qubits: Vec<String> = b.qubits.iter().map(|q| q.to_string()).collect();
            let mut s = format!("OPAQUE {} qubits={}", b.label, qubits.join(","));
            for (src, d) in &b.durations {
                s.push_str(&format!(" {src}={:?}", d.0));
            }
            if let Some(w) = b.wall_clock {
                s.push_str(&format!(" wall={:?}", w.0));
            }
            s
        }
    }
}

fn parse_gate(head: &str, args: &[&str]) -> std::result::Result<Gate, String> {
    fn q(s: &str) -> std::result::Result<usize, String> {
        s.parse().map_err(|_| format!("bad qubit index `{s}`"))
    }
    fn a(s: &str) -> std::result::Result<f64, String> {
        s.parse().map_err(|_| format!("bad angle `{s}`"))
    }
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("{head} takes {n} arguments, got {}", args.len()))
        }
    };
    match head.to_ascii_uppercase().as_str() {
        "H" => {
            arity(1)?;
            Ok(Gate::Hadamard(q(args[0])?))
        }
        "CRZ" => {
            arity(3)?;
            Ok(Gate::ControlledRz { control: q(args[0])?, target: q(args[1])?, angle: a(args[2])? })
        }
        "CZ" => {
            arity(2)?;
            Ok(Gate::Cz(q(args[0])?, q(args[1])?))
        }
        "RZ" => {
            arity(2)?;
            Ok(Gate::LocalRz { qubit: q(args[0])?, angle: a(args[1])? })
        }
        "RPHI" => {
            arity(3)?;
            Ok(Gate::LocalRPhi { qubit: q(args[0])?, axis: a(args[1])?, angle: a(args[2])? })
        }
        "GRPHI" => {
            arity(2)?;
            Ok(Gate::GlobalRPhi { axis: a(args[0])?, angle: a(args[1])? })
        }
        "OPAQUE" => {
            let (label, rest) = args.split_first().ok_or("OPAQUE needs a label")?;
            let mut block = OpaqueBlock::new(*label, vec![]);
            for kv in rest {
                let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
                match k {
                    "qubits" => {
                        block.qubits = v
                            .split(',')
                            .filter(|s| !s.is_empty())
                            .map(q)
                            .collect::<std::result::Result<_, _>>()?;
                    }
                    "wall" => block.wall_clock = Some(Seconds(duration(v)?)),
                    src => {
                        block.durations.insert(src.to_string(), Seconds(duration(v)?));
                    }
                }
            }
            Ok(Gate::OpaqueTimed(block))
        }
        other => Err(format!("unknown gate `{other}`")),
    }
}

fn duration(v: &str) -> std::result::Result<f64, String> {
    let d: f64 = v.parse().map_err(|_| format!("bad duration `{v}`"))?;
    if d < 0.0 || !d.is_finite() {
        return Err(format!("duration must be finite and non-negative, got {v}"));
    }
    Ok(d)
}

pub fn gate_count_summary(gates: &[Gate]) -> BTreeMap<GateKind, usize> {
    let mut counts: BTreeMap<GateKind, usize> = GateKind::ALL.iter().map(|k| (*k, 0)).collect();
    for g in gates {
        *counts.entry(g.kind()).or_default() += 1;
    }
    counts
}

/// Options for [`build_qft_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QftOptions {
    /// Append the bit-reversal swap layer (as CX·CX·CX with CX = H·CZ·H).
    pub final_swaps: bool,
    /// Add Rz(θ/2) on the control after each controlled-Rz so the circuit
    /// implements controlled phases, i.e. the textbook QFT.
    pub exact_phase_correction: bool,
}

pub fn build_qft(n: usize, include_final_swaps: bool) -> Result<Circuit> {
    build_qft_with(
        n,
        QftOptions {
            final_swaps: include_final_swaps,
            exact_phase_correction: false,
        },
    )
}

pub fn build_qft_with(n: usize, opts: QftOptions) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::Argument("QFT needs at least one qubit".into()));
    }
    let mut c = Circuit::new(n)?;
    for target in 0..n {
        c.push(Gate::Hadamard(target))?;
        for control in target + 1..n {
            let angle = PI / f64::powi(2.0, (control - target) as i32);
            c.push(Gate::ControlledRz { control, target, angle })?;
            if opts.exact_phase_correction {
                c.push(Gate::LocalRz { qubit: control, angle: angle / 2.0 })?;
            }
        }
    }
    if opts.final_swaps {
        for i in 0..n / 2 {
            push_swap(&mut c, i, n - 1 - i)?;
        }
    }
    Ok(c)
}

fn push_swap(c: &mut Circuit, a: usize, b: usize) -> Result<()> {
    for (ctrl, tgt) in [(a, b), (b, a), (a, b)] {
        c.push(Gate::Hadamard(tgt))?;
        c.push(Gate::Cz(ctrl, tgt))?;
        c.push(Gate::Hadamard(tgt))?;
    }
    Ok(())
}

pub fn build_inverse_qft(n: usize) -> Result<Circuit> {
    Ok(build_qft(n, false)?.inverse())
}

pub fn build_inverse_qft_with(n: usize, opts: QftOptions) -> Result<Circuit> {
    Ok(build_qft_with(n, opts)?.inverse())
}

/// Phase estimation: `t` measurement qubits (0..t) followed by the phase
/// register. Measurement qubit `t-1-j` controls U^(2^j).
pub fn build_qpe(
    t: usize,
    phase_register: usize,
    controlled_u: Option<&OpaqueBlock>,
) -> Result<Circuit> {
    if t == 0 || phase_register == 0 {
        return Err(Error::Argument(
            "phase estimation needs t >= 1 and a non-empty phase register".into(),
        ));
    }
    let template = controlled_u
        .ok_or_else(|| Error::Argument("phase estimation needs a controlled-U template".into()))?;
    let mut c = Circuit::new(t + phase_register)?;
    for q in 0..t {
        c.push(Gate::Hadamard(q))?;
    }
    let phase_qubits: Vec<usize> = (t..t + phase_register).collect();
    for j in 0..t {
        let mut block = template.repeated(1u64 << j);
        block.qubits = std::iter::once(t - 1 - j).chain(phase_qubits.iter().copied()).collect();
        c.push(Gate::OpaqueTimed(block))?;
    }
    c.append_shifted(&build_inverse_qft(t)?, 0)?;
    Ok(c)
}

// Unitary oracle.

pub type Matrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// xy-plane rotation R_φ(θ) = [[cos θ/2, -i e^{iφ} sin θ/2], [-i e^{-iφ} sin θ/2, cos θ/2]].
pub fn rphi_matrix(axis: f64, angle: f64) -> Matrix {
    let (s, co) = (angle / 2.0).sin_cos();
    let e = Complex64::from_polar(1.0, axis);
    let mi = c(0.0, -1.0);
    DMatrix::from_row_slice(2, 2, &[c(co, 0.0), mi * e * s, mi * e.conj() * s, c(co, 0.0)])
}

/// Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2}).
pub fn rz_matrix(angle: f64) -> Matrix {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::from_polar(1.0, -angle / 2.0),
        Complex64::from_polar(1.0, angle / 2.0),
    ]))
}

pub fn hadamard_matrix() -> Matrix {
    let h = c(FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// diag(1, 1, e^{-iθ/2}, e^{iθ/2}) on (control, target).
pub fn crz_matrix(angle: f64) -> Matrix {
    let one = c(1.0, 0.0);
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        one,
        one,
        Complex64::from_polar(1.0, -angle / 2.0),
        Complex64::from_polar(1.0, angle / 2.0),
    ]))
}

pub fn cz_matrix() -> Matrix {
    let one = c(1.0, 0.0);
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, one, one, -one]))
}

/// Embeds a single-qubit matrix on qubit `q` of an `n`-qubit register.
pub fn embed_single(n: usize, q: usize, u: &Matrix) -> Matrix {
    let mut out = Matrix::identity(1, 1);
    for k in 0..n {
        let factor = if k == q { u.clone() } else { Matrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

/// Embeds a two-qubit diagonal gate given by its four diagonal entries
/// indexed by (bit of `a`, bit of `b`).
fn embed_two_diag(n: usize, a: usize, b: usize, diag: [Complex64; 4]) -> Matrix {
    let dim = 1usize << n;
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    let entries: Vec<Complex64> = (0..dim).map(|i| diag[2 * bit(i, a) + bit(i, b)]).collect();
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(entries))
}

pub fn gate_unitary(n: usize, g: &Gate) -> Result<Matrix> {
    let one = c(1.0, 0.0);
    Ok(match g {
        Gate::Hadamard(q) => embed_single(n, *q, &hadamard_matrix()),
        Gate::LocalRz { qubit, angle } => embed_single(n, *qubit, &rz_matrix(*angle)),
        Gate::LocalRPhi { qubit, axis, angle } => embed_single(n, *qubit, &rphi_matrix(*axis, *angle)),
        Gate::GlobalRPhi { axis, angle } => {
            let r = rphi_matrix(*axis, *angle);
            (0..n).fold(Matrix::identity(1, 1), |acc, _| acc.kronecker(&r))
        }
        Gate::Cz(a, b) => embed_two_diag(n, *a, *b, [one, one, one, -one]),
        Gate::ControlledRz { control, target, angle } => embed_two_diag(
            n,
            *control,
            *target,
            [
                one,
                one,
                Complex64::from_polar(1.0, -angle / 2.0),
                Complex64::from_polar(1.0, angle / 2.0),
            ],
        ),
        Gate::OpaqueTimed(b) => {
            return Err(Error::UnsupportedGate(format!(
                "opaque block `{}` has no matrix",
                b.label
            )))
        }
    })
}

/// Product of gate matrices in circuit order (first gate applied first).
pub fn gates_unitary(n: usize, gates: &[Gate]) -> Result<Matrix> {
    if n > MAX_ORACLE_QUBITS {
        return Err(Error::Capacity { n, max: MAX_ORACLE_QUBITS });
    }
    let dim = 1usize << n;
    let mut u = Matrix::identity(dim, dim);
    for g in gates {
        u = gate_unitary(n, g)? * u;
    }
    Ok(u)
}

pub fn circuit_unitary(c: &Circuit) -> Result<Matrix> {
    gates_unitary(c.n_qubits(), c.gates())
}

/// Spectral-norm distance between `a` and `b` after removing the best
/// global phase.
pub fn phase_distance(a: &Matrix, b: &Matrix) -> f64 {
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    let diff = a * phase - b;
    spectral_norm(&diff)
}

fn spectral_norm(m: &Matrix) -> f64 {
    // largest singular value via the Hermitian m†m
    let h = m.adjoint() * m;
    h.symmetric_eigenvalues().iter().fold(0.0f64, |acc, v| acc.max(*v)).max(0.0).sqrt()
}

/// The 2^n-point DFT matrix F[k][j] = ω^{jk}/√N, ω = e^{2πi/N}.
pub fn dft_matrix(n: usize) -> Matrix {
    let dim = 1usize << n;
    let norm = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |k, j| {
        Complex64::from_polar(norm, 2.0 * PI * ((j * k) % dim) as f64 / dim as f64)
    })
}
