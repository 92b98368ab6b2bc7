use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rydberg_energy::circuit::{build_qft, build_qft_with, build_qpe, Circuit, OpaqueBlock, QftOptions};
use rydberg_energy::classical::{compare, MachineCatalog};
use rydberg_energy::compiler::{compile, CostMode, Step};
use rydberg_energy::energetics::{
    golden_cells, reproduce_qpe_experiment, run_energy, EnergyLedger, MeasuredRun, GoldenTable, Tolerance,
};
use rydberg_energy::hwmodel::HardwareProfile;
use rydberg_energy::layout::{simulate_transports, SimulationConfig, TransportPolicy};
use rydberg_energy::scaling::{dominance_onset, log_spaced, Column, ScalingModel, ScalingOptions};
use rydberg_energy::Error;

mod table;

use table::{num, render};

const EXIT_GOLDEN: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PROFILE: u8 = 3;

#[derive(Parser)]
#[command(name = "rydberg-energy", version, about = "Energy and resource estimates for Rydberg-atom QFT/QPE")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Hardware profile (TOML); the built-in default when absent
    #[arg(long, global = true, env = "RYDBERG_PROFILE")]
    profile: Option<PathBuf>,
    /// Write the main output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Output format; inferred from the --output extension, else table
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(alias = "first_principles")]
    FirstPrinciples,
    Calibrated,
}

impl From<Mode> for CostMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::FirstPrinciples => CostMode::FirstPrinciples,
            Mode::Calibrated => CostMode::Calibrated,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Computation,
    Baseline,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Energy ledger for a circuit file or a built-in (qft:N, qpe:T, qpe:h2)
    Estimate(EstimateArgs),
    /// Pulse schedule for a circuit
    Compile(CircuitArgs),
    /// Recompute the published energy tables of the H2 experiment
    Reproduce(ReproduceArgs),
    /// Energy components versus qubit count
    Scale(ScaleArgs),
    /// Quantum QFT versus classical FFT energy, with the crossover
    Compare(CompareArgs),
    /// Random two-qubit gate stream on a filled grid, counting transports
    TransportSim(SimArgs),
    /// Emit a QFT circuit in the text format
    QftBuild(QftArgs),
}

#[derive(Args)]
struct CircuitArgs {
    /// Circuit file, or qft:N, qpe:T, qpe:h2
    circuit: String,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    target: CircuitArgs,
    /// Executions; defaults to the profile's shot count
    #[arg(long)]
    shots: Option<u64>,
    /// Use measured on-times (implied by qpe:h2)
    #[arg(long)]
    measured: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, value_enum, default_value = "all")]
    table: TableArg,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 1024)]
    n_max: usize,
    /// Linear step between rows
    #[arg(long, conflicts_with = "points")]
    step: Option<usize>,
    /// Log-spaced rows instead of a linear step
    #[arg(long)]
    points: Option<usize>,
    /// Print log-log exponents per component
    #[arg(long)]
    fit: bool,
    /// Fit window; defaults to the curve range
    #[arg(long)]
    fit_min: Option<usize>,
    #[arg(long)]
    fit_max: Option<usize>,
    /// Report where E_traps > E_transport > E_gates starts holding
    #[arg(long)]
    onset: bool,
    #[arg(long, default_value_t = 1)]
    shots: u64,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Count transport time as trap-active time
    #[arg(long)]
    transport_extends_trap_time: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value = "jedi")]
    machine: String,
    /// Extra catalog entries (TOML), added to the built-in ones
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 60)]
    n_max: usize,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    gates: usize,
    /// move_adjacent_stay or move_adjacent_and_return
    #[arg(long, default_value = "move_adjacent_stay")]
    policy: String,
    #[arg(long, default_value_t = 1)]
    blockade_radius: u32,
}

#[derive(Args)]
struct QftArgs {
    #[arg(long)]
    n: usize,
    /// Append the final qubit-reversal swaps
    #[arg(long)]
    swaps: bool,
    /// Add the Rz(θ/2) control correction after each controlled rotation
    #[arg(long)]
    phase_correction: bool,
    #[arg(long)]
    inverse: bool,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Profile(_) => EXIT_PROFILE,
            _ => EXIT_USAGE,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

type Run = Result<u8, Failure>;

/// Where data and side notes go. Notes share stdout only when it carries
/// a table or the data goes to a file.
struct Out {
    format: Format,
    path: Option<PathBuf>,
}

impl Out {
    fn new(c: &Common) -> Self {
        let inferred = c.output.as_deref().and_then(|p| match p.extension()?.to_str()? {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        });
        Out {
            format: c.format.or(inferred).unwrap_or(Format::Table),
            path: c.output.clone(),
        }
    }

    fn data(&self, text: &str) -> Result<(), Failure> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.path {
            Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
            None => match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(usage(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            },
        }
    }

    fn note(&self, line: &str) {
        if self.path.is_some() || self.format == Format::Table {
            let _ = writeln!(std::io::stdout(), "{line}");
        } else {
            let _ = writeln!(std::io::stderr(), "{line}");
        }
    }
}

fn load_profile(path: Option<&Path>) -> Result<HardwareProfile, Failure> {
    match path {
        None => Ok(HardwareProfile::builtin()),
        Some(p) => HardwareProfile::load(p).map_err(|e| Failure {
            code: EXIT_PROFILE,
            msg: format!("{}: {e}", p.display()),
        }),
    }
}

enum Target {
    Circuit(Circuit),
    Measured(MeasuredRun),
}

fn resolve_circuit(spec: &str) -> Result<Target, Failure> {
    let count = |s: &str| s.parse::<usize>().map_err(|_| usage(format!("bad qubit count in `{spec}`")));
    if let Some(n) = spec.strip_prefix("qft:") {
        return Ok(Target::Circuit(build_qft(count(n)?, false)?));
    }
    if spec == "qpe:h2" {
        return Ok(Target::Measured(MeasuredRun::h2_experiment()));
    }
    if let Some(t) = spec.strip_prefix("qpe:") {
        // controlled-U powers are problem specific; counted as free here
        let u = OpaqueBlock::new("U", Vec::new());
        return Ok(Target::Circuit(build_qpe(count(t)?, 1, Some(&u))?));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| usage(format!("cannot read {spec}: {e}")))?;
    Ok(Target::Circuit(Circuit::from_text(&text).map_err(|e| usage(format!("{spec}: {e}")))?))
}

fn mode_or_default(m: Option<Mode>, p: &HardwareProfile) -> CostMode {
    m.map(CostMode::from).unwrap_or_else(|| p.default_mode())
}

fn ledger_out(out: &Out, ledger: &EnergyLedger) -> Result<(), Failure> {
    match out.format {
        Format::Json => out.data(&serde_json::to_string_pretty(&ledger.to_json()).unwrap()),
        Format::Csv => out.data(&ledger.to_csv()),
        Format::Table => {
            let mut rows: Vec<Vec<String>> = ledger
                .entries()
                .map(|(c, s, e)| vec![c.to_string(), s.to_string(), num(e.0), num(e.0 * 1e3)])
                .collect();
            let t = ledger.total().0;
            rows.push(vec!["total".into(), String::new(), num(t), num(t * 1e3)]);
            out.data(&render(&["category", "source", "energy [J]", "energy [mJ]"], &rows))
        }
    }
}

fn estimate(a: &EstimateArgs, p: &HardwareProfile, out: &Out) -> Run {
    let ledger = match resolve_circuit(&a.target.circuit)? {
        Target::Measured(mut m) => {
            if let Some(s) = a.shots {
                m.shots = s;
            }
            reproduce_qpe_experiment(&m, p)?.ledger
        }
        Target::Circuit(_) if a.measured => {
            return Err(usage("--measured needs a circuit with measured on-times (qpe:h2)"));
        }
        Target::Circuit(c) => {
            let shots = a.shots.unwrap_or(p.prep.shots);
            run_energy(&c, p, shots, mode_or_default(a.target.mode, p))?
        }
    };
    ledger_out(out, &ledger)?;
    Ok(0)
}

fn compile_cmd(a: &CircuitArgs, p: &HardwareProfile, out: &Out) -> Run {
    let circuit = match resolve_circuit(&a.circuit)? {
        Target::Circuit(c) => c,
        Target::Measured(m) => m.as_circuit()?,
    };
    let mode = mode_or_default(a.mode, p);
    let schedule = compile(&circuit, p, mode)?;
    let timing = schedule.duration();
    match out.format {
        Format::Json => out.data(
            &serde_json::to_string_pretty(&json!({
                "mode": mode,
                "n_qubits": circuit.n_qubits(),
                "gate_counts": circuit.gate_count_summary().iter().map(|(k, v)| (k.to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>(),
                "timing": timing,
                "steps": schedule.steps,
            }))
            .unwrap(),
        )?,
        Format::Csv => {
            let mut s = String::from("step,kind,source,duration_s,qubits\n");
            for (i, step) in schedule.steps.iter().enumerate() {
                let kind = match step {
                    Step::Pulse(_) => "pulse",
                    Step::Concurrent(_) => "concurrent",
                    Step::Calibrated(_) => "calibrated",
                    Step::Opaque(_) => "opaque",
                };
                let rows: Vec<(String, f64, Vec<usize>)> = match step {
                    Step::Pulse(q) => vec![(q.source_id.clone(), q.duration.0, q.qubits.clone())],
                    Step::Concurrent(ps) => {
                        ps.iter().map(|q| (q.source_id.clone(), q.duration.0, q.qubits.clone())).collect()
                    }
                    Step::Calibrated(b) => vec![(b.source_id().to_string(), b.duration.0, b.qubits.clone())],
                    Step::Opaque(b) => {
                        b.durations.iter().map(|(k, d)| (k.clone(), d.0, b.qubits.clone())).collect()
                    }
                };
                for (src, d, qs) in rows {
                    let qs: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
                    s.push_str(&format!("{i},{kind},{src},{d},{}\n", qs.join(" ")));
                }
            }
            out.data(&s)?
        }
        Format::Table => {
            let mut rows: Vec<Vec<String>> =
                timing.on_time.iter().map(|(s, t)| vec![s.clone(), num(t.0 * 1e6)]).collect();
            rows.push(vec!["wall clock".into(), num(timing.wall_clock.0 * 1e6)]);
            let counts: Vec<String> = circuit
                .gate_count_summary()
                .iter()
                .filter(|(_, v)| **v > 0)
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            out.data(&format!(
                "{} qubits, {} steps, gates: {}\n{}",
                circuit.n_qubits(),
                schedule.steps.len(),
                counts.join(" "),
                render(&["source", "on-time [us]"], &rows)
            ))?
        }
    }
    Ok(0)
}

fn reproduce(a: &ReproduceArgs, p: &HardwareProfile, out: &Out) -> Run {
    let which = match a.table {
        TableArg::Computation => GoldenTable::Computation,
        TableArg::Baseline => GoldenTable::Baseline,
        TableArg::All => GoldenTable::All,
    };
    let cells = golden_cells(p, which)?;
    let tol = |t: Tolerance| match t {
        Tolerance::Displayed(d) => format!("{d} decimals"),
        Tolerance::Relative(r) => format!("{}%", r * 100.0),
    };
    match out.format {
        Format::Json => {
            let v: Vec<_> = cells
                .iter()
                .map(|c| json!({"table": c.table, "row": c.row, "column": c.column, "published": c.published, "computed": c.computed, "rendered": c.rendered(), "tolerance": c.tolerance, "pass": c.passes()}))
                .collect();
            out.data(&serde_json::to_string_pretty(&v).unwrap())?;
        }
        Format::Csv => {
            let mut s = String::from("table,row,column,published,computed,pass\n");
            for c in &cells {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.table, c.row, c.column, c.published, c.computed, c.passes()
                ));
            }
            out.data(&s)?;
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|c| {
                    vec![
                        c.table.into(),
                        c.row.into(),
                        c.column.into(),
                        c.published.to_string(),
                        c.rendered(),
                        tol(c.tolerance),
                        if c.passes() { "ok" } else { "MISMATCH" }.into(),
                    ]
                })
                .collect();
            out.data(&render(&["table", "row", "column", "published", "computed", "tolerance", ""], &rows))?;
        }
    }
    let bad: Vec<_> = cells.iter().filter(|c| !c.passes()).collect();
    if bad.is_empty() {
        return Ok(0);
    }
    for c in bad {
        eprintln!("mismatch: {} / {}: published {}, computed {}", c.table, c.row, c.published, c.computed);
    }
    Ok(EXIT_GOLDEN)
}

fn scale(a: &ScaleArgs, p: &HardwareProfile, out: &Out) -> Run {
    if a.n_min == 0 || a.n_min > a.n_max {
        return Err(usage(format!("empty range {}..={}", a.n_min, a.n_max)));
    }
    let ns: Vec<usize> = match (a.points, a.step) {
        (Some(k), _) => log_spaced(a.n_min, a.n_max, k),
        (None, step) => {
            let step = step.unwrap_or(1);
            if step == 0 {
                return Err(usage("--step must be >= 1"));
            }
            (a.n_min..=a.n_max).step_by(step).collect()
        }
    };
    if ns.is_empty() {
        return Err(usage("no rows requested"));
    }
    let opts = ScalingOptions {
        mode: mode_or_default(a.mode, p),
        transport_extends_trap_time: a.transport_extends_trap_time,
        shots: a.shots,
    };
    let curve = ScalingModel::new(p, opts)?.curve(&ns)?;
    match out.format {
        Format::Json => out.data(&curve.to_json())?,
        Format::Csv => out.data(&curve.to_csv())?,
        Format::Table => {
            let rows: Vec<Vec<String>> = curve
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.e_gates.0),
                        num(r.e_transport.0),
                        num(r.e_traps.0),
                        num(r.e_const.0),
                        num(r.e_total.0),
                        num(r.t_qft.0),
                    ]
                })
                .collect();
            out.data(&render(
                &["n", "E_gates [J]", "E_transport [J]", "E_traps [J]", "E_const [J]", "E_total [J]", "t_qft [s]"],
                &rows,
            ))?
        }
    }
    if a.fit {
        let (lo, hi) = (a.fit_min.unwrap_or(a.n_min), a.fit_max.unwrap_or(a.n_max));
        let in_window = curve.rows.iter().filter(|r| r.n >= lo && r.n <= hi).count();
        if in_window < 10 {
            out.note(&format!("fit: skipped, {in_window} rows in {lo}..={hi} (needs 10)"));
        } else {
            let mut parts = Vec::new();
            for (name, col) in [
                ("gates", Column::Gates),
                ("transport", Column::Transport),
                ("traps", Column::Traps),
                ("total", Column::Total),
            ] {
                match curve.fit_exponent(col, lo, hi) {
                    Ok(k) => parts.push(format!("{name}={k:.3}")),
                    Err(e) => parts.push(format!("{name}=n/a ({e})")),
                }
            }
            out.note(&format!("fit n in {lo}..={hi}: {}", parts.join(" ")));
        }
    }
    if a.onset {
        match dominance_onset(p, opts, a.n_max)? {
            Some(n0) => out.note(&format!("onset: E_traps > E_transport > E_gates for n in {n0}..={}", a.n_max)),
            None => out.note(&format!("onset: ordering does not hold at n = {}", a.n_max)),
        }
    }
    Ok(0)
}

fn compare_cmd(a: &CompareArgs, p: &HardwareProfile, out: &Out) -> Run {
    let catalog = match &a.catalog {
        Some(path) => MachineCatalog::load_extending_builtin(path)?,
        None => MachineCatalog::builtin(),
    };
    let machine = catalog.get(&a.machine)?;
    let opts = ScalingOptions { mode: mode_or_default(a.mode, p), ..ScalingOptions::for_profile(p) };
    let cmp = compare(p, opts, machine, a.n_min, a.n_max)?;
    match out.format {
        Format::Json => out.data(&serde_json::to_string_pretty(&cmp).unwrap())?,
        Format::Csv => out.data(&cmp.to_csv())?,
        Format::Table => {
            let rows: Vec<Vec<String>> = cmp
                .rows
                .iter()
                .map(|r| vec![r.n.to_string(), num(r.e_quantum.0), num(r.e_classical.0), num(r.ratio)])
                .collect();
            out.data(&render(&["n", "E_quantum [J]", "E_classical [J]", "ratio"], &rows))?
        }
    }
    out.note(&format!(
        "crossover ({}, {:.3e} J/bit-op): {}",
        cmp.machine,
        cmp.joules_per_bitop,
        cmp.crossover.map_or("none".to_string(), |n| n.to_string())
    ));
    Ok(0)
}

fn transport_sim(a: &SimArgs, p: &HardwareProfile, seed: u64, out: &Out) -> Run {
    if a.n < 2 {
        return Err(usage("--n must be >= 2"));
    }
    let policy: TransportPolicy = a.policy.parse()?;
    let cfg = SimulationConfig {
        policy,
        blockade_radius: a.blockade_radius,
        ..SimulationConfig::new(a.n, a.gates, seed)
    };
    let res = simulate_transports(&cfg, p.transport.transports_per_gate_slope)?;
    let s = &res.summary;
    match out.format {
        Format::Json => out.data(
            &serde_json::to_string_pretty(&json!({"summary": s, "records": res.records})).unwrap(),
        )?,
        Format::Csv => out.data(&res.to_csv())?,
        Format::Table => out.data(&render(
            &["quantity", "value"],
            &[
                vec!["atoms".into(), s.n_atoms.to_string()],
                vec!["gates".into(), s.gates.to_string()],
                vec!["policy".into(), s.policy.to_string()],
                vec!["blockade radius".into(), s.blockade_radius.to_string()],
                vec!["transports".into(), s.transports.to_string()],
                vec!["hops".into(), s.hops.to_string()],
                vec!["slope".into(), num(s.slope)],
                vec!["intercept".into(), num(s.intercept)],
                vec!["R^2".into(), num(s.r_squared)],
                vec!["analytic slope".into(), num(s.analytic_slope)],
            ],
        ))?,
    }
    out.note(&format!(
        "seed {}: slope {:.4} (analytic {}), R^2 {:.5}",
        s.seed, s.slope, s.analytic_slope, s.r_squared
    ));
    Ok(0)
}

fn qft_build(a: &QftArgs, out: &Out) -> Run {
    let opts = QftOptions { final_swaps: a.swaps, exact_phase_correction: a.phase_correction };
    let mut c = build_qft_with(a.n, opts)?;
    if a.inverse {
        c = c.inverse();
    }
    match out.format {
        Format::Json => out.data(&serde_json::to_string_pretty(&c).unwrap())?,
        Format::Csv => {
            let mut s = String::from("kind,count\n");
            for (k, v) in c.gate_count_summary() {
                s.push_str(&format!("{k},{v}\n"));
            }
            out.data(&s)?
        }
        Format::Table => out.data(&c.to_text())?,
    }
    Ok(0)
}

fn run(cli: Cli) -> Run {
    let out = Out::new(&cli.common);
    if let Command::QftBuild(a) = &cli.command {
        return qft_build(a, &out);
    }
    let profile = load_profile(cli.common.profile.as_deref())?;
    match &cli.command {
        Command::Estimate(a) => estimate(a, &profile, &out),
        Command::Compile(a) => compile_cmd(a, &profile, &out),
        Command::Reproduce(a) => reproduce(a, &profile, &out),
        Command::Scale(a) => scale(a, &profile, &out),
        Command::Compare(a) => compare_cmd(a, &profile, &out),
        Command::TransportSim(a) => transport_sim(a, &profile, cli.common.seed, &out),
        Command::QftBuild(_) => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
