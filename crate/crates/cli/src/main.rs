mod codefile;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use codedpir::code::LinearCode;
use codedpir::fixtures;
use codedpir::lambda::{
    find_min_ratio, is_capacity_achieving, CapacityVerdict, DEFAULT_BUDGET, DEFAULT_NU_MAX,
};
use codedpir::protocols::{
    run, verify_schedule, Protocol, ProtocolError, Scenario, Schedule, Transcript,
};
use codedpir::rates::{render4, Files, RateReport};
use serde::Serialize;

use crate::codefile::{Format, NamedCode, Overrides};

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Verification(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Verification(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "codedpir",
    version,
    about = "PIR rates, rate matrices and simulations for linearly coded storage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weight hierarchy, rate-matrix search and direct-sum structure of a code.
    Analyze(AnalyzeArgs),
    /// Closed-form PIR rates for one or more codes.
    RateTable(RateTableArgs),
    /// Runs a protocol end to end on random files.
    Simulate(SimulateArgs),
}

#[derive(Args, Clone, Copy)]
struct CodeFlags {
    /// Field order.
    #[arg(long)]
    q: Option<u32>,
    /// Code dimension (needed for decimal columns).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl From<CodeFlags> for Overrides {
    fn from(f: CodeFlags) -> Self {
        Overrides {
            q: f.q,
            k: f.k,
            format: f.format,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Out {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Code file or built-in name (c1..c4, parity3, repetition2).
    #[arg(long)]
    code: String,
    #[command(flatten)]
    flags: CodeFlags,
    #[arg(long, default_value_t = DEFAULT_NU_MAX)]
    nu_max: usize,
    #[arg(long, value_enum, default_value = "text")]
    out: Out,
}

#[derive(Args)]
struct RateTableArgs {
    /// Code files or built-in names; repeat for several rows.
    #[arg(long)]
    code: Vec<String>,
    #[command(flatten)]
    flags: CodeFlags,
    /// Number of files, or `inf`.
    #[arg(long, default_value = "inf")]
    files: Files,
    /// Asymmetric schedules to fill the R_C column of codes they fit.
    #[arg(long)]
    schedule: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NU_MAX)]
    nu_max: usize,
    #[arg(long, value_enum, default_value = "csv")]
    out: Out,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    P1,
    P2,
    A,
    AInf,
    #[value(name = "b-p1")]
    BP1,
    #[value(name = "b-p2")]
    BP2,
    Schedule,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::P1 => Protocol::P1,
            ProtocolArg::P2 => Protocol::P2,
            ProtocolArg::A => Protocol::A,
            ProtocolArg::AInf => Protocol::AInf,
            ProtocolArg::BP1 => Protocol::BP1,
            ProtocolArg::BP2 => Protocol::BP2,
            ProtocolArg::Schedule => Protocol::Schedule,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    code: String,
    #[command(flatten)]
    flags: CodeFlags,
    #[arg(long, value_enum)]
    protocol: ProtocolArg,
    /// Schedule file for `--protocol schedule`; `table2` selects the built-in one.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 2)]
    files: usize,
    /// Stripes per file, instead of the smallest the protocol allows.
    #[arg(long)]
    beta: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Requested file, 1-based.
    #[arg(long, default_value_t = 1)]
    target: usize,
    #[arg(long, default_value_t = DEFAULT_NU_MAX)]
    nu_max: usize,
    #[arg(long, value_enum, default_value = "text")]
    out: Out,
    /// Where to write the full transcript as JSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

fn load_code(source: &str, flags: CodeFlags) -> Result<NamedCode> {
    codefile::load(source, flags.into()).map_err(|e| Failure::Parse(format!("{e:#}")).into())
}

fn infeasible(e: ProtocolError) -> anyhow::Error {
    Failure::Infeasible(e.to_string()).into()
}

#[derive(Serialize)]
struct Part {
    coords: String,
    n: usize,
    k: usize,
    capacity_achieving: String,
}

#[derive(Serialize)]
struct Analysis {
    code: String,
    q: u32,
    n: usize,
    k: usize,
    weight_hierarchy: Option<Vec<usize>>,
    necessary_condition: Option<bool>,
    necessary_failing_s: Option<usize>,
    min_ratio: String,
    min_ratio_certified: bool,
    capacity_achieving: String,
    direct_sum: Vec<Part>,
}

fn analyze(args: &AnalyzeArgs) -> Result<String> {
    let NamedCode { name, code } = load_code(&args.code, args.flags)?;
    let hierarchy = code.weight_hierarchy().ok();
    let necessary = code.mds_pir_necessary_check().ok();
    let min = find_min_ratio(&code, args.nu_max, DEFAULT_BUDGET)?;
    let verdict = is_capacity_achieving(&code, args.nu_max, DEFAULT_BUDGET)?;
    let decomposition = code.direct_sum_decompose()?;
    let mut parts = Vec::new();
    if !decomposition.is_trivial() {
        for p in &decomposition.parts {
            parts.push(Part {
                coords: p.coords.to_string(),
                n: p.code.n(),
                k: p.code.k(),
                capacity_achieving: is_capacity_achieving(&p.code, args.nu_max, DEFAULT_BUDGET)?
                    .label()
                    .into(),
            });
        }
    }
    let (kappa, nu) = min.matrix.ratio();
    let a = Analysis {
        code: name,
        q: code.field().order(),
        n: code.n(),
        k: code.k(),
        weight_hierarchy: hierarchy,
        necessary_condition: necessary.as_ref().map(|c| c.pass),
        necessary_failing_s: necessary.and_then(|c| c.failing_s),
        min_ratio: format!("{kappa}/{nu}"),
        min_ratio_certified: min.certified,
        capacity_achieving: verdict.label().into(),
        direct_sum: parts,
    };
    match args.out {
        Out::Json => Ok(serde_json::to_string_pretty(&a)? + "\n"),
        _ => {
            let mut s = String::new();
            writeln!(s, "code: {} [{},{}] over GF({})", a.code, a.n, a.k, a.q)?;
            match &a.weight_hierarchy {
                Some(h) => {
                    let ws: Vec<String> = h
                        .iter()
                        .enumerate()
                        .map(|(i, d)| format!("d_{}={d}", i + 1))
                        .collect();
                    writeln!(s, "weight hierarchy: {}", ws.join(" "))?;
                }
                None => writeln!(s, "weight hierarchy: too many subspaces to enumerate")?,
            }
            match (a.necessary_condition, a.necessary_failing_s) {
                (Some(true), _) => writeln!(s, "necessary condition: pass")?,
                (Some(false), Some(f)) => writeln!(s, "necessary condition: fail at s={f}")?,
                _ => writeln!(s, "necessary condition: unavailable")?,
            }
            let cert = if a.min_ratio_certified {
                "certified"
            } else {
                "not certified"
            };
            writeln!(
                s,
                "min kappa/nu: {} ({cert}, nu <= {})",
                a.min_ratio, args.nu_max
            )?;
            writeln!(s, "capacity-achieving: {}", a.capacity_achieving)?;
            if a.direct_sum.is_empty() {
                writeln!(s, "direct sum: indecomposable")?;
            } else {
                let ps: Vec<String> = a
                    .direct_sum
                    .iter()
                    .map(|p| {
                        format!(
                            "{} [{},{}] capacity-achieving={}",
                            p.coords, p.n, p.k, p.capacity_achieving
                        )
                    })
                    .collect();
                writeln!(s, "direct sum: {}", ps.join(" + "))?;
            }
            Ok(s)
        }
    }
}

fn report_for(
    name: &str,
    code: &LinearCode,
    files: Files,
    nu_max: usize,
    schedules: &[Schedule],
) -> Result<RateReport> {
    let min = find_min_ratio(code, nu_max, DEFAULT_BUDGET)?;
    let (kappa, nu) = min.matrix.ratio();
    let capacity_achieving = kappa * code.n() == nu * code.k();
    let decomposition = code.direct_sum_decompose()?;
    let mut shapes = Vec::new();
    for p in &decomposition.parts {
        if !matches!(
            is_capacity_achieving(&p.code, nu_max, DEFAULT_BUDGET)?,
            CapacityVerdict::Yes(_)
        ) {
            shapes.clear();
            break;
        }
        shapes.push((p.code.n(), p.code.k()));
    }
    let parts = (!shapes.is_empty()).then_some(shapes.as_slice());
    let mut report = RateReport::build(name, code, kappa, nu, files, parts, capacity_achieving)?;
    let mut candidates: Vec<Schedule> = schedules.to_vec();
    if code.same_code(&fixtures::c2()) {
        candidates.push(fixtures::table2_schedule());
    }
    for s in &candidates {
        // schedules are file-independent; two files exercise the privacy check
        let f = files.finite().unwrap_or(2) as usize;
        if let Ok(v) = verify_schedule(code, s, f) {
            if v.recoverable && v.private && report.schedule.as_ref().is_none_or(|r| v.rate > *r) {
                report.schedule = Some(v.rate);
            }
        }
    }
    Ok(report)
}

fn rate_table(args: &RateTableArgs) -> Result<String> {
    let schedules = args
        .schedule
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            Schedule::from_json(&text).map_err(|e| anyhow!("{}: {e}", p.display()))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Failure::Parse(format!("{e:#}")))?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for source in &args.code {
        let outcome = load_code(source, args.flags)
            .and_then(|c| report_for(&c.name, &c.code, args.files, args.nu_max, &schedules));
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("{source}: {e:#}");
                failures.push((source.clone(), format!("{e:#}")));
            }
        }
    }
    let mut out = Vec::new();
    match args.out {
        Out::Json => {
            #[derive(Serialize)]
            struct Table<'a> {
                files: Files,
                rows: &'a [RateReport],
                failures: &'a [(String, String)],
            }
            serde_json::to_writer_pretty(
                &mut out,
                &Table {
                    files: args.files,
                    rows: &reports,
                    failures: &failures,
                },
            )?;
            out.push(b'\n');
        }
        Out::Csv => {
            RateReport::write_csv(&reports, &mut out)?;
            let mut w = csv::Writer::from_writer(&mut out);
            for (name, _) in &failures {
                let mut row = vec![name.as_str(), "error"];
                row.extend(["-"; 5]);
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Out::Text => {
            let header = RateReport::CSV_HEADER;
            writeln!(out, "{}", header.map(|h| format!("{h:>10}")).join(""))?;
            for r in &reports {
                writeln!(
                    out,
                    "{}",
                    r.table_cells().map(|c| format!("{c:>10}")).join("")
                )?;
            }
            for (name, e) in &failures {
                writeln!(out, "{name:>10}  error: {e}")?;
            }
        }
    }
    Ok(String::from_utf8(out)?)
}

fn load_schedule(source: &str) -> Result<Schedule> {
    if source == "table2" && !std::path::Path::new(source).exists() {
        return Ok(fixtures::table2_schedule());
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| Failure::Parse(format!("cannot read {source}: {e}")))?;
    Schedule::from_json(&text).map_err(|e| Failure::Parse(format!("{source}: {e}")).into())
}

fn render_transcript(t: &Transcript) -> Result<String> {
    let mut s = String::new();
    let protocol = serde_json::to_value(t.protocol)?;
    writeln!(
        s,
        "protocol: {}  code: [{},{}] GF({})  files: {}  beta: {}  target: {}  seed: {}",
        protocol.as_str().unwrap_or("?"),
        t.code.n,
        t.code.k,
        t.code.q,
        t.files,
        t.beta,
        t.target,
        t.seed
    )?;
    let per_node: Vec<String> = t
        .download_per_node
        .iter()
        .map(ToString::to_string)
        .collect();
    writeln!(s, "download per node: {}", per_node.join(" "))?;
    writeln!(s, "total download: {}", t.download)?;
    match &t.expected_rate {
        Some(e) => writeln!(
            s,
            "rate: {} ({})  closed form: {}",
            t.rate,
            render4(&t.rate),
            e
        )?,
        None => writeln!(s, "rate: {} ({})", t.rate, render4(&t.rate))?,
    }
    writeln!(s, "recovery: {}", if t.recovered { "pass" } else { "FAIL" })?;
    if t.privacy.pass {
        writeln!(s, "privacy: pass")?;
    } else {
        writeln!(
            s,
            "privacy: FAIL at nodes {:?}",
            t.privacy.violating_nodes()
        )?;
        for v in t.privacy.nodes.iter().filter(|v| !v.issues.is_empty()) {
            for issue in &v.issues {
                writeln!(s, "  node {}: {issue}", v.node)?;
            }
        }
    }
    Ok(s)
}

fn simulate(args: &SimulateArgs) -> Result<String> {
    let NamedCode { code, .. } = load_code(&args.code, args.flags)?;
    if args.files == 0 {
        return Err(Failure::Parse("--files must be positive".into()).into());
    }
    if args.target == 0 || args.target > args.files {
        return Err(Failure::Parse(format!("--target must lie in [1, {}]", args.files)).into());
    }
    let protocol = Protocol::from(args.protocol);
    let mut scenario = match protocol {
        Protocol::Schedule => {
            let source = args
                .schedule
                .as_deref()
                .ok_or_else(|| Failure::Parse("--protocol schedule needs --schedule".into()))?;
            Scenario::with_schedule(load_schedule(source)?)
        }
        p => Scenario::prepare(&code, p, args.files, args.nu_max, DEFAULT_BUDGET)
            .map_err(infeasible)?,
    };
    if let Some(beta) = args.beta {
        scenario.beta = beta;
    }
    let transcript =
        run(&code, &scenario, args.files, args.target - 1, args.seed).map_err(infeasible)?;
    if let Some(path) = &args.transcript {
        std::fs::write(path, transcript.to_json() + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let text = match args.out {
        Out::Json => transcript.to_json() + "\n",
        _ => render_transcript(&transcript)?,
    };
    let mut problems = Vec::new();
    if !transcript.recovered {
        problems.push("recovered file differs from the stored file");
    }
    if !transcript.privacy.pass {
        problems.push("privacy audit failed");
    }
    if !transcript.rate_matches() {
        problems.push("measured rate differs from the closed form");
    }
    if problems.is_empty() {
        Ok(text)
    } else {
        print!("{text}");
        Err(Failure::Verification(problems.join("; ")).into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::RateTable(a) => rate_table(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Failure>().map_or(1, Failure::exit_code);
            ExitCode::from(code)
        }
    }
}
