//! Command-line front end. Every subcommand reads JSON inputs, computes in
//! memory, and only then writes its artifacts plus a `manifest.json` into the
//! `--out` directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{theorem_witness, DecayBound, TheoremScenario};
use crate::error::{Error, Result};
use crate::evolution::{fit_dispersion, growth_exponent_witness, DispersionLaw};
use crate::flow::{integrate, integrate_kvm, FlowConfig};
use crate::hierarchy::{hierarchy_fields, tl_field, trace_invariants, HierarchyCoeffs};
use crate::lattice::{KvMState, LatticeState, SCHEMA_VERSION};
use crate::output::fmt_num;
use crate::soliton::{build_soliton, SolitonParams, SolitonSpec};
use crate::spectral::{build_jacobi, default_k_grid, scattering_data, ScatteringData};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "TODA_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "toda-lab", version, about = "Toda / Kac-van Moerbeke hierarchy laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate TL_r from the state's time to --t.
    Evolve(EvolveArgs),
    /// Forward scattering data of a normalized state.
    Scatter(ScatterArgs),
    /// Build a pure soliton state.
    Soliton(SolitonArgs),
    /// Dispersion-law tools.
    #[command(subcommand)]
    Dispersion(DispersionCommand),
    /// Growth witnesses.
    #[command(subcommand)]
    Witness(WitnessCommand),
    /// Two-time super-fast decay witness.
    TheoremDemo(TheoremArgs),
    /// Hierarchy coefficients.
    #[command(subcommand)]
    Hierarchy(HierarchyCommand),
    /// Kac-van Moerbeke lattice.
    #[command(subcommand)]
    Kvm(KvmCommand),
}

#[derive(Subcommand, Debug)]
enum DispersionCommand {
    /// Fit α_r from scattering data at two times.
    Fit(FitArgs),
}

#[derive(Subcommand, Debug)]
enum WitnessCommand {
    /// Growth of the evolution factor along k = ±1/x.
    Growth(GrowthArgs),
}

#[derive(Subcommand, Debug)]
enum HierarchyCommand {
    /// Tabulate g_j, h_j and the TL_r field.
    Show(ShowArgs),
}

#[derive(Subcommand, Debug)]
enum KvmCommand {
    /// Integrate the KvM lattice.
    Evolve(KvmEvolveArgs),
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    max_step: f64,
    #[arg(long, default_value_t = 8)]
    guard_band: i64,
}

impl FlowArgs {
    fn config(&self) -> FlowConfig {
        FlowConfig { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step, guard_band: self.guard_band }
    }

    fn record(&self, p: &mut BTreeMap<String, String>) {
        p.insert("rel_tol".into(), fmt_num(self.rel_tol));
        p.insert("abs_tol".into(), fmt_num(self.abs_tol));
        p.insert("max_step".into(), fmt_num(self.max_step));
        p.insert("guard_band".into(), self.guard_band.to_string());
    }
}

#[derive(Args, Debug)]
struct CoeffArgs {
    /// Hierarchy order.
    #[arg(long, default_value_t = 0)]
    r: usize,
    /// Summation constants c_1, …, c_r (default: all zero).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    c: Vec<f64>,
}

impl CoeffArgs {
    fn coeffs(&self) -> Result<HierarchyCoeffs> {
        if self.c.is_empty() {
            return Ok(HierarchyCoeffs::homogeneous(self.r));
        }
        if self.c.len() != self.r {
            return Err(Error::InvalidCoeffs(format!("--c needs {} values for r = {}, got {}", self.r, self.r, self.c.len())));
        }
        let mut all = vec![1.0];
        all.extend(&self.c);
        HierarchyCoeffs::with_constants(&all)
    }

    fn record(&self, p: &mut BTreeMap<String, String>) {
        p.insert("r".into(), self.r.to_string());
        p.insert("c".into(), self.c.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
    }
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    coeffs: CoeffArgs,
    /// Final time.
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    #[command(flatten)]
    flow: FlowArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScatterArgs {
    #[arg(long)]
    state: PathBuf,
    /// Points on the upper unit semicircle.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Sites in the eigenvalue truncation (widened to keep 50 background sites per side).
    #[arg(long, default_value_t = 401)]
    truncation: usize,
    /// Rescale to the background (1/2, 0) instead of rejecting other backgrounds.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_window(s: &str) -> std::result::Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if hi < lo {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Args, Debug)]
struct SolitonArgs {
    /// Bound-state parameters, 0 < |k| < 1 (repeat or comma-separate).
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    k: Vec<f64>,
    /// Norming constants γ_+, one per k (default 1).
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Window LO:HI.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-200:200")]
    window: (i64, i64),
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    sd0: PathBuf,
    #[arg(long)]
    sd1: PathBuf,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[arg(long)]
    sd: PathBuf,
    #[arg(long)]
    law: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TheoremArgs {
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    coeffs: CoeffArgs,
    #[arg(long = "C", default_value_t = 10.0)]
    c_bound: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t1: f64,
    /// Checked range of M as LO:HI (default 2 up to the noise-floor limit).
    #[arg(long, value_parser = parse_window)]
    m_range: Option<(i64, i64)>,
    #[command(flatten)]
    flow: FlowArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ShowArgs {
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    coeffs: CoeffArgs,
    /// Sites LO:HI to tabulate (default: the window).
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    range: Option<(i64, i64)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KvmEvolveArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    #[command(flatten)]
    flow: FlowArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Provenance record written next to every set of outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub parameters: BTreeMap<String, String>,
    /// Input path → SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Inputs read so far plus the artifacts waiting to be written.
struct Run {
    command: String,
    parameters: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<(String, String)>,
    started: Instant,
}

impl Run {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).map_err(|e| Error::Schema(format!("{}: not UTF-8: {e}", path.display())))
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    fn emit(&mut self, name: &str, content: String) {
        self.outputs.push((name.into(), content));
    }

    fn finish(self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out)?;
        let mut digests = BTreeMap::new();
        for (name, content) in &self.outputs {
            std::fs::write(out.join(name), content)?;
            digests.insert(name.clone(), sha256_hex(content.as_bytes()));
        }
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            parameters: self.parameters,
            inputs: self.inputs,
            outputs: digests,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
///
/// Returns 0 on success, 1 on domain or I/O errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Evolve(a) => evolve(a),
        Command::Scatter(a) => scatter(a),
        Command::Soliton(a) => soliton(a),
        Command::Dispersion(DispersionCommand::Fit(a)) => dispersion_fit(a),
        Command::Witness(WitnessCommand::Growth(a)) => witness_growth(a),
        Command::TheoremDemo(a) => theorem_demo(a),
        Command::Hierarchy(HierarchyCommand::Show(a)) => hierarchy_show(a),
        Command::Kvm(KvmCommand::Evolve(a)) => kvm_evolve(a),
    }
}

fn evolve(a: EvolveArgs) -> Result<()> {
    let mut run = Run::new("evolve");
    let state = LatticeState::from_json(&run.read(&a.state)?)?;
    let coeffs = a.coeffs.coeffs()?;
    a.coeffs.record(&mut run.parameters);
    a.flow.record(&mut run.parameters);
    run.param("t", fmt_num(a.t));
    let traj = integrate(&state, &coeffs, a.t, &a.flow.config())?;
    let drift = traj.max_trace_drift();
    println!("integrated TL_{} from t = {} to t = {} in {} steps", coeffs.r(), state.t(), a.t, traj.states.len() - 1);
    println!("max trace drift: {:e} {:e} {:e} {:e}", drift[0], drift[1], drift[2], drift[3]);
    run.emit("conservation.csv", traj.conservation_csv());
    run.emit("state.json", traj.last().to_json() + "\n");
    run.finish(&a.out)
}

fn scatter(a: ScatterArgs) -> Result<()> {
    let mut run = Run::new("scatter");
    let mut state = LatticeState::from_json(&run.read(&a.state)?)?;
    run.param("grid", a.grid);
    run.param("truncation", a.truncation);
    run.param("normalize", a.normalize);
    if a.normalize {
        state = state.normalize()?;
    }
    let h = build_jacobi(&state)?;
    let sd = scattering_data(&h, &default_k_grid(a.grid), a.truncation)?;
    println!("{} bound state(s); max |R_+| = {:e}", sd.bound_states.len(), sd.r_plus.iter().map(|r| r.norm()).fold(0.0, f64::max));
    run.emit("scattering.json", sd.to_json() + "\n");
    run.finish(&a.out)
}

fn soliton(a: SolitonArgs) -> Result<()> {
    let mut run = Run::new("soliton");
    let gammas = if a.gamma.is_empty() { vec![1.0; a.k.len()] } else { a.gamma.clone() };
    if gammas.len() != a.k.len() {
        return Err(Error::InvalidState(format!("{} values of k but {} of gamma", a.k.len(), gammas.len())));
    }
    run.param("k", a.k.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
    run.param("gamma", gammas.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
    run.param("window", format!("{}:{}", a.window.0, a.window.1));
    run.param("t", fmt_num(a.t));
    let params = a.k.iter().zip(&gammas).map(|(&k, &gamma)| SolitonParams { k, gamma }).collect();
    let spec = SolitonSpec::new(params, a.t)?;
    let state = build_soliton(&spec, a.window.0, a.window.1)?;
    println!("built {}-soliton on {}..={}", spec.bound_states().len(), a.window.0, a.window.1);
    run.emit("state.json", state.to_json() + "\n");
    run.finish(&a.out)
}

fn dispersion_fit(a: FitArgs) -> Result<()> {
    let mut run = Run::new("dispersion fit");
    let sd0 = ScatteringData::from_json(&run.read(&a.sd0)?)?;
    let sd1 = ScatteringData::from_json(&run.read(&a.sd1)?)?;
    run.param("r", a.r);
    let law = fit_dispersion(&sd0, &sd1, a.r)?;
    let top = a.r as i64 + 1;
    let coeffs: Vec<String> = (-top..=top).map(|j| format!("d[{j}] = {}", law.d(j))).collect();
    println!("{}", coeffs.join(", "));
    println!("residual = {:e}, factorization remainder = {:e}", law.residual(), law.factorization_remainder());
    run.emit("law.json", law.to_json() + "\n");
    run.finish(&a.out)
}

fn witness_growth(a: GrowthArgs) -> Result<()> {
    let mut run = Run::new("witness growth");
    let sd = ScatteringData::from_json(&run.read(&a.sd)?)?;
    let law = DispersionLaw::from_json(&run.read(&a.law)?)?;
    let report = growth_exponent_witness(&sd, &law);
    let summary = report.summary();
    print!("{summary}");
    run.emit("growth_report.txt", summary);
    run.emit("growth.csv", report.to_csv());
    run.finish(&a.out)
}

fn theorem_demo(a: TheoremArgs) -> Result<()> {
    let mut run = Run::new("theorem-demo");
    let state = LatticeState::from_json(&run.read(&a.state)?)?;
    let coeffs = a.coeffs.coeffs()?;
    a.coeffs.record(&mut run.parameters);
    a.flow.record(&mut run.parameters);
    run.param("C", fmt_num(a.c_bound));
    run.param("delta", fmt_num(a.delta));
    run.param("t0", fmt_num(a.t0));
    run.param("t1", fmt_num(a.t1));
    let bound = DecayBound::new(a.c_bound, a.delta)?;
    let mut scenario = TheoremScenario::new(state, coeffs, bound);
    scenario.t0 = a.t0;
    scenario.t1 = a.t1;
    if let Some((lo, hi)) = a.m_range {
        run.param("m_range", format!("{lo}:{hi}"));
        scenario.m_range = Some(lo..=hi);
    }
    let outcome = theorem_witness(&scenario, &a.flow.config())?;
    println!("verdict ({}): {}", serde_json::to_value(outcome.verdict)?.as_str().unwrap_or("?"), outcome.verdict.text());
    run.emit("report.json", outcome.to_json(&scenario) + "\n");
    run.emit("decay.csv", outcome.to_csv());
    run.finish(&a.out)
}

fn hierarchy_show(a: ShowArgs) -> Result<()> {
    let mut run = Run::new("hierarchy show");
    let state = LatticeState::from_json(&run.read(&a.state)?)?;
    let coeffs = a.coeffs.coeffs()?;
    a.coeffs.record(&mut run.parameters);
    let (lo, hi) = a.range.unwrap_or((state.n_min(), state.n_max()));
    run.param("range", format!("{lo}:{hi}"));
    let fields = hierarchy_fields(&state, &coeffs, lo..=hi);
    let top = coeffs.r() + 1;
    let mut csv = String::from("n");
    for j in 0..=top {
        let _ = write!(csv, ",g_{j}");
    }
    for j in 0..=top {
        let _ = write!(csv, ",h_{j}");
    }
    csv.push('\n');
    for n in lo..=hi {
        csv.push_str(&n.to_string());
        for j in 0..=top {
            csv.push(',');
            csv.push_str(&fmt_num(fields.g(j, n)));
        }
        for j in 0..=top {
            csv.push(',');
            csv.push_str(&fmt_num(fields.h(j, n)));
        }
        csv.push('\n');
    }
    let (ad, bd) = tl_field(&state, &coeffs);
    let mut field = String::from("n,a_dot,b_dot\n");
    for (i, (x, y)) in ad.iter().zip(&bd).enumerate() {
        let _ = writeln!(field, "{},{},{}", state.n_min() + i as i64, fmt_num(*x), fmt_num(*y));
    }
    let tr = trace_invariants(&state);
    println!("TL_{} on {}..={}; trace invariants tr(H^k - H_bg^k), k = 1..4: {:?}", coeffs.r(), lo, hi, tr);
    run.emit("fields.csv", csv);
    run.emit("field.csv", field);
    run.finish(&a.out)
}

fn kvm_evolve(a: KvmEvolveArgs) -> Result<()> {
    let mut run = Run::new("kvm evolve");
    let state = KvMState::from_json(&run.read(&a.state)?)?;
    a.flow.record(&mut run.parameters);
    run.param("t", fmt_num(a.t));
    let traj = integrate_kvm(&state, a.t, &a.flow.config())?;
    println!("integrated KvM from t = {} to t = {} in {} steps", state.t(), a.t, traj.states.len() - 1);
    run.emit("conservation.csv", traj.conservation_csv());
    run.emit("kvm_state.json", traj.last().to_json() + "\n");
    run.finish(&a.out)
}
