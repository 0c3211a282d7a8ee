use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use meastopo::anyons::{correspondence_table_check, QuantumDouble};
use meastopo::circuit::{build_protocol, depth_report, Circuit, LatticeRef, Protocol};
use meastopo::diagnostics::{anyon_entropy_shift, kitaev_preskill, locate_excitations, EntropyReport, KpPartition, Region};
use meastopo::lattice::{HoneycombTorus, QubitId, SquareTorus, TriangleOrientation};
use meastopo::sim::{read_state, run, write_state, MeasurementRecord, OutcomePolicy, Precision, Real, RunOptions, RunOutput, Schedule};
use meastopo::stabilizers::{family_for, verify};
use meastopo::{Error, Result};

/// Exit code when a verification runs cleanly but some member fails.
const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "meastopo", version, about = "Prepare and verify measurement-based topological states on small tori")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "MEASTOPO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol and write the state, the record and a summary.
    Prepare(PrepareArgs),
    /// Check a state against the operator family its record implies.
    Verify(VerifyArgs),
    /// Two-body and CCZ depth of a protocol.
    Depth(DepthArgs),
    /// Region entropies of a stored state.
    Entropy(EntropyArgs),
    /// Three-region topological entropy of a stored state.
    Tee(TeeArgs),
    /// Entropy change from vertex Z gates inserted before the rotation.
    Shift(ShiftArgs),
    /// Anyons of a quantum double.
    Anyons(AnyonArgs),
    /// Lattice utilities.
    Lattice {
        #[command(subcommand)]
        command: LatticeCommand,
    },
}

#[derive(Subcommand)]
enum LatticeCommand {
    /// Print the lattice as JSON.
    Dump(LatticeArgs),
}

#[derive(Args, Clone, Default)]
struct ProtocolArgs {
    /// JSON config; command-line flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    /// Run a circuit from a JSON gate list instead of building one.
    #[arg(long, conflicts_with = "protocol")]
    circuit: Option<PathBuf>,
    #[arg(long)]
    l1: Option<usize>,
    #[arg(long)]
    l2: Option<usize>,
    /// Triangle orientation for the Q8 route.
    #[arg(long, value_enum)]
    orientation: Option<Orientation>,
}

#[derive(Args)]
struct DepthArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Also write the circuit as a JSON gate list.
    #[arg(long)]
    circuit_out: Option<PathBuf>,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Where to write the binary state.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Where to write the measurement record.
    #[arg(long)]
    record_out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Record to replay when the policy is `forced`.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Maximum number of live qubits.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    record: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also print per-plaquette expectations.
    #[arg(long)]
    excitations: bool,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    state: PathBuf,
    /// Honeycomb size, needed for `r<p>`/`s<p>` region parts.
    #[arg(long)]
    l1: Option<usize>,
    #[arg(long)]
    l2: Option<usize>,
    /// `NAME=PARTS`, parts joined by `+`: `r<p>` ring, `s<p>` ring and legs,
    /// `e<k>` one edge. Repeatable.
    #[arg(long = "region", required = true)]
    regions: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct TeeArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    l1: Option<usize>,
    #[arg(long)]
    l2: Option<usize>,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    c: String,
}

#[derive(Args)]
struct ShiftArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Vertices that receive a Z, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    vertices: Vec<usize>,
    #[arg(long = "region", required = true)]
    regions: Vec<String>,
}

#[derive(Args)]
struct AnyonArgs {
    /// `d4`, `q8`, `z2`, `z2^n`, or products such as `z2xz2`.
    #[arg(long)]
    group: String,
    /// `auto` searches for Lagrangian subgroups; `none` skips the search.
    #[arg(long, default_value = "none")]
    lagrangian: String,
    /// Fuse two anyons given as `[rep]:irrep`.
    #[arg(long, num_args = 2)]
    fuse: Option<Vec<String>>,
    /// Check the bilayer correspondence table (D4 only).
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long, value_enum, default_value_t = LatticeKind::Honeycomb)]
    kind: LatticeKind,
    #[arg(long, default_value_t = 2)]
    l1: usize,
    #[arg(long, default_value_t = 2)]
    l2: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Policy {
    Sampled,
    AllPlus,
    Forced,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PrecisionArg {
    Complex64,
    Complex128,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ScheduleArg {
    Eager,
    AsWritten,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Orientation {
    Up,
    Down,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeKind {
    Honeycomb,
    Square,
}

/// Config file contents; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    protocol: Option<String>,
    circuit: Option<PathBuf>,
    l1: Option<usize>,
    l2: Option<usize>,
    orientation: Option<Orientation>,
    seed: Option<u64>,
    policy: Option<Policy>,
    record: Option<PathBuf>,
    precision: Option<PrecisionArg>,
    cap: Option<usize>,
    schedule: Option<ScheduleArg>,
    state_out: Option<PathBuf>,
    record_out: Option<PathBuf>,
}

/// Fully resolved settings after merging flags over the config file.
struct Settings {
    protocol: Protocol,
    circuit: Option<PathBuf>,
    l1: usize,
    l2: usize,
    orientation: TriangleOrientation,
    seed: u64,
    policy: Policy,
    record: Option<PathBuf>,
    precision: Precision,
    cap: usize,
    schedule: Schedule,
    threads: Option<usize>,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(serde_json::from_reader(BufReader::new(File::open(p)?))?),
        None => Ok(RunConfig::default()),
    }
}

fn resolve(p: &ProtocolArgs, r: &RunArgs, threads: Option<usize>) -> Result<(Settings, RunConfig)> {
    let cfg = load_config(&p.config)?;
    let protocol = p.protocol.clone().or(cfg.protocol.clone()).unwrap_or_else(|| "d4".into());
    let orientation = match p.orientation.or(cfg.orientation).unwrap_or(Orientation::Both) {
        Orientation::Up => TriangleOrientation::Up,
        Orientation::Down => TriangleOrientation::Down,
        Orientation::Both => TriangleOrientation::Both,
    };
    let precision = match r.precision.or(cfg.precision).unwrap_or(PrecisionArg::Complex128) {
        PrecisionArg::Complex64 => Precision::Complex64,
        PrecisionArg::Complex128 => Precision::Complex128,
    };
    let schedule = match r.schedule.or(cfg.schedule).unwrap_or(ScheduleArg::Eager) {
        ScheduleArg::Eager => Schedule::Eager,
        ScheduleArg::AsWritten => Schedule::AsWritten,
    };
    let s = Settings {
        protocol: Protocol::parse(&protocol)?,
        circuit: p.circuit.clone().or(cfg.circuit.clone()),
        l1: p.l1.or(cfg.l1).unwrap_or(2),
        l2: p.l2.or(cfg.l2).unwrap_or(2),
        orientation,
        seed: r.seed.or(cfg.seed).unwrap_or(0),
        policy: r.policy.or(cfg.policy).unwrap_or(Policy::Sampled),
        record: r.record.clone().or(cfg.record.clone()),
        precision,
        cap: r.cap.or(cfg.cap).unwrap_or(RunOptions::default().cap),
        schedule,
        threads,
    };
    Ok((s, cfg))
}

impl Settings {
    fn circuit(&self) -> Result<Circuit> {
        match &self.circuit {
            Some(p) => Circuit::from_json(&std::fs::read_to_string(p)?),
            None => build_protocol(self.protocol, self.l1, self.l2, self.orientation),
        }
    }

    fn run_options(&self) -> Result<RunOptions> {
        let policy = match self.policy {
            Policy::Sampled => OutcomePolicy::Sampled,
            Policy::AllPlus => OutcomePolicy::AllPlus,
            Policy::Forced => {
                let path = self.record.as_ref().ok_or_else(|| Error::Invalid("the forced policy needs --record".into()))?;
                read_record(path)?.as_policy()
            }
        };
        Ok(RunOptions { policy, seed: self.seed, cap: self.cap, threads: self.threads, schedule: self.schedule, track_norm: true })
    }
}

fn read_record(path: &Path) -> Result<MeasurementRecord> {
    MeasurementRecord::from_json(&std::fs::read_to_string(path)?)
}

fn lattice_of(c: &Circuit) -> Result<HoneycombTorus> {
    match c.lattice {
        LatticeRef::Honeycomb { l1, l2 } => HoneycombTorus::new(l1, l2),
        LatticeRef::Square { .. } => Err(Error::WrongProtocol("vertex insertion needs a honeycomb protocol".into())),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Serialize)]
struct PrepareSummary {
    protocol: &'static str,
    lattice: LatticeRef,
    seed: u64,
    policy: &'static str,
    precision: &'static str,
    qubits: usize,
    peak_live: usize,
    two_body_depth: usize,
    ccz_depth: usize,
    outcomes: usize,
    max_norm_error: f64,
    state_out: Option<PathBuf>,
    record_out: Option<PathBuf>,
}

fn cmd_prepare(a: &PrepareArgs, threads: Option<usize>) -> Result<()> {
    let (s, cfg) = resolve(&a.protocol, &a.run, threads)?;
    let c = s.circuit()?;
    let opts = s.run_options()?;
    let state_out = a.state_out.clone().or(cfg.state_out);
    let record_out = a.record_out.clone().or(cfg.record_out);
    let (record, peak, norm_err) = match s.precision {
        Precision::Complex64 => finish_prepare(run::<f32>(&c, &opts)?, &state_out)?,
        Precision::Complex128 => finish_prepare(run::<f64>(&c, &opts)?, &state_out)?,
    };
    if let Some(p) = &record_out {
        std::fs::write(p, record.to_json())?;
    }
    let d = depth_report(&c);
    print_json(&PrepareSummary {
        protocol: c.protocol.name(),
        lattice: c.lattice,
        seed: s.seed,
        policy: match s.policy {
            Policy::Sampled => "sampled",
            Policy::AllPlus => "all-plus",
            Policy::Forced => "forced",
        },
        precision: match s.precision {
            Precision::Complex64 => "complex64",
            Precision::Complex128 => "complex128",
        },
        qubits: c.qubits.len(),
        peak_live: peak,
        two_body_depth: d.two_body,
        ccz_depth: d.ccz,
        outcomes: record.outcomes.len(),
        max_norm_error: norm_err,
        state_out,
        record_out,
    })
}

fn finish_prepare<T: Real>(out: RunOutput<T>, state_out: &Option<PathBuf>) -> Result<(MeasurementRecord, usize, f64)> {
    if let Some(p) = state_out {
        let mut w = BufWriter::new(File::create(p)?);
        write_state(&out.state, &mut w)?;
        w.flush()?;
    }
    Ok((out.record, out.peak_live, out.max_norm_error))
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let (s, _) = resolve(&a.protocol, &RunArgs::default(), None)?;
    let c = s.circuit()?;
    let record = read_record(&a.record)?;
    let state = read_state(BufReader::new(File::open(&a.state)?))?.to_f64();
    let family = family_for(&c, &record)?;
    let report = verify(&state, &family, a.tol)?;
    println!("{}", report.to_json());
    if a.excitations {
        print_json(&locate_excitations(&state, &family)?)?;
    }
    Ok(report.pass)
}

fn cmd_depth(a: &DepthArgs) -> Result<()> {
    let (s, _) = resolve(&a.protocol, &RunArgs::default(), None)?;
    let c = s.circuit()?;
    if let Some(p) = &a.circuit_out {
        std::fs::write(p, c.to_json())?;
    }
    #[derive(Serialize)]
    struct Depth {
        protocol: &'static str,
        lattice: LatticeRef,
        two_body: usize,
        ccz: usize,
    }
    let d = depth_report(&c);
    print_json(&Depth { protocol: c.protocol.name(), lattice: c.lattice, two_body: d.two_body, ccz: d.ccz })
}

/// `NAME=PARTS`; a bare `PARTS` is named after itself.
fn parse_region(lat: Option<&HoneycombTorus>, arg: &str) -> Result<Region> {
    let (name, desc) = arg.split_once('=').unwrap_or((arg, arg));
    Region::parse(name, desc, lat)
}

fn optional_lattice(l1: Option<usize>, l2: Option<usize>) -> Result<Option<HoneycombTorus>> {
    match (l1, l2) {
        (Some(a), Some(b)) => Ok(Some(HoneycombTorus::new(a, b)?)),
        (None, None) => Ok(None),
        _ => Err(Error::Invalid("give both --l1 and --l2".into())),
    }
}

fn cmd_entropy(a: &EntropyArgs) -> Result<()> {
    let lat = optional_lattice(a.l1, a.l2)?;
    let regions = a.regions.iter().map(|r| parse_region(lat.as_ref(), r)).collect::<Result<Vec<_>>>()?;
    let state = read_state(BufReader::new(File::open(&a.state)?))?.to_f64();
    let report = EntropyReport::measure(&state, &regions)?;
    match a.format {
        Format::Csv => print!("{}", report.to_csv()?),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(())
}

fn cmd_tee(a: &TeeArgs) -> Result<()> {
    let lat = optional_lattice(a.l1, a.l2)?;
    let named = |n: &str, d: &str| parse_region(lat.as_ref(), &format!("{n}={}", d.split_once('=').map_or(d, |(_, d)| d)));
    let part = KpPartition::new(named("A", &a.a)?, named("B", &a.b)?, named("C", &a.c)?)?;
    let state = read_state(BufReader::new(File::open(&a.state)?))?.to_f64();
    println!("{}", kitaev_preskill(&state, &part)?.to_json());
    Ok(())
}

fn cmd_shift(a: &ShiftArgs, threads: Option<usize>) -> Result<()> {
    let (mut s, _) = resolve(&a.protocol, &a.run, threads)?;
    let c = s.circuit()?;
    let lat = lattice_of(&c)?;
    let regions = a.regions.iter().map(|r| parse_region(Some(&lat), r)).collect::<Result<Vec<_>>>()?;
    let vertices: BTreeSet<QubitId> = a.vertices.iter().map(|&v| QubitId::vertex(v)).collect();
    if s.record.is_none() && matches!(s.policy, Policy::Sampled) {
        s.policy = Policy::AllPlus;
    }
    let opts = s.run_options()?;
    let baseline = match &s.record {
        Some(p) => read_record(p)?,
        None => match s.precision {
            Precision::Complex64 => run::<f32>(&c, &opts)?.record,
            Precision::Complex128 => run::<f64>(&c, &opts)?.record,
        },
    };
    let report = match s.precision {
        Precision::Complex64 => anyon_entropy_shift::<f32>(&c, &baseline, &vertices, &regions, &opts)?,
        Precision::Complex128 => anyon_entropy_shift::<f64>(&c, &baseline, &vertices, &regions, &opts)?,
    };
    println!("{}", report.to_json());
    Ok(())
}

fn cmd_anyons(a: &AnyonArgs) -> Result<()> {
    let qd = QuantumDouble::from_name(&a.group)?;
    let mut summary = serde_json::to_value(qd.summary())?;
    if a.lagrangian == "none" {
        summary["lagrangians"] = serde_json::Value::Null;
    } else if a.lagrangian != "auto" {
        return Err(Error::Invalid(format!("--lagrangian takes auto or none, got {:?}", a.lagrangian)));
    }
    if let Some(pair) = &a.fuse {
        let find = |s: &str| {
            let (rep, irrep) = s.split_once(':').ok_or_else(|| Error::Invalid(format!("anyon {s:?} is not [rep]:irrep")))?;
            qd.find(rep.trim_matches(|c| c == '[' || c == ']'), irrep).ok_or_else(|| Error::Invalid(format!("no anyon {s:?}")))
        };
        let (x, y) = (find(&pair[0])?, find(&pair[1])?);
        let channels: Vec<(String, u32)> = qd.fuse(x, y).into_iter().map(|(c, n)| (qd.anyons[c].name.clone(), n)).collect();
        summary["fusion"] = serde_json::to_value(channels)?;
    }
    if a.table {
        summary["table"] = serde_json::to_value(correspondence_table_check(&qd)?)?;
    }
    print_json(&summary)
}

fn cmd_lattice(c: &LatticeCommand) -> Result<()> {
    let LatticeCommand::Dump(a) = c;
    match a.kind {
        LatticeKind::Honeycomb => println!("{}", HoneycombTorus::new(a.l1, a.l2)?.to_json()),
        LatticeKind::Square => {
            if a.l1 != a.l2 {
                return Err(Error::Invalid("square torus needs l1 = l2".into()));
            }
            print_json(&SquareTorus::new(a.l1)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prepare(a) => cmd_prepare(a, cli.threads).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
        Command::Depth(a) => cmd_depth(a).map(|_| true),
        Command::Entropy(a) => cmd_entropy(a).map(|_| true),
        Command::Tee(a) => cmd_tee(a).map(|_| true),
        Command::Shift(a) => cmd_shift(a, cli.threads).map(|_| true),
        Command::Anyons(a) => cmd_anyons(a).map(|_| true),
        Command::Lattice { command } => cmd_lattice(command).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
