//! Batch front door: enumerate, classify, verify, report.
//!
//! Exit codes: 0 all selected checks passed, 1 at least one check failed,
//! 2 usage or configuration error, 3 internal error (I/O and the like).

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bdtwist::triples::{enumerate, BDTriple};
use bdtwist::verify::{
    BatteryOptions, TripleDescriptor, VerificationReport, CHECK_GROUPS,
    DEFAULT_CHECKS,
};

#[derive(Parser)]
#[command(name = "bdtwist", version, about = "Exact Belavin-Drinfeld triple and R-matrix verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List all valid triples for the selected dimensions.
    Enumerate(SelectArgs),
    /// List triples together with their classification flags.
    Classify(SelectArgs),
    /// Run the verification battery; exit 0 iff every selected check passes.
    Verify(VerifyArgs),
    /// Aggregate previously written verification reports.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct SelectArgs {
    /// Ambient dimension n (the triples live in gl(n)).
    #[arg(long)]
    n: Option<u16>,

    /// Upper end of an inclusive dimension range starting at --n.
    #[arg(long)]
    n_max: Option<u16>,

    /// A single triple, e.g. "n=5; a1->a3, a2->a4" (with --n the prefix may
    /// be dropped), or JSON {"n":5,"tau":{"1":3,"2":4}}.
    #[arg(long)]
    triple: Option<String>,

    /// Keep only triples with all the given classification flags
    /// (comma-separated): disjoint, generalized-disjoint,
    /// orthogonal-generalized-disjoint, generalized-cg, cg, decomposable,
    /// indecomposable.
    #[arg(long)]
    filter: Option<String>,

    /// Safety cap on the enumeration dimension.
    #[arg(long, default_value_t = 9)]
    cap: u16,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write output to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    select: SelectArgs,

    /// Comma-separated check groups; defaults to
    /// qybe,hecke,twist-eq,classical-limit. "all" selects every group.
    #[arg(long)]
    checks: Option<String>,

    /// Number of worker threads; 1 forces serial execution.
    #[arg(long)]
    jobs: Option<usize>,

    /// Seed for the r^0 kernel perturbation sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Additionally re-run the matrix checks with a sampled kernel
    /// perturbation of r^0.
    #[arg(long)]
    perturb_r0: bool,

    /// Record per-triple wall-clock timings in the reports (off by default
    /// so that reports are byte-identical across runs).
    #[arg(long)]
    timings: bool,

    /// Skip triples whose reports are already present in --out.
    #[arg(long)]
    resume: bool,

    /// Include the twist layers (supports and K exponents) in each report.
    #[arg(long)]
    emit_twist: bool,

    /// Test hook: corrupt one entry of each GGS matrix before checking.
    #[arg(long, hide = true)]
    inject_corruption: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A report file (JSON lines, as written by verify --out) or a
    /// directory of such files.
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum CliError {
    Usage(String),
    Internal(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn parse_triple(text: &str, n_hint: Option<u16>) -> Result<BDTriple, CliError> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| CliError::Usage(e.to_string()))?;
        let n = value
            .get("n")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| CliError::Usage("triple JSON needs an integer field n".into()))?
            as u16;
        let mut pairs = Vec::new();
        if let Some(tau) = value.get("tau") {
            let map = tau
                .as_object()
                .ok_or_else(|| CliError::Usage("triple JSON field tau must be an object".into()))?;
            for (k, v) in map {
                let a: u16 = k
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad tau source index {k:?}")))?;
                let b = v
                    .as_u64()
                    .ok_or_else(|| CliError::Usage(format!("bad tau target for {k:?}")))?
                    as u16;
                pairs.push((a, b));
            }
        }
        return BDTriple::new(n, &pairs).map_err(|e| CliError::Usage(e.to_string()));
    }
    let full = if trimmed.starts_with("n=") {
        trimmed.to_string()
    } else if let Some(n) = n_hint {
        if trimmed.is_empty() {
            format!("n={n}")
        } else {
            format!("n={n}; {trimmed}")
        }
    } else {
        return Err(CliError::Usage(
            "triple text must start with n=<int> unless --n is given".into(),
        ));
    };
    BDTriple::parse_text(&full).map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve_triples(args: &SelectArgs) -> Result<Vec<BDTriple>, CliError> {
    let mut triples = if let Some(text) = &args.triple {
        vec![parse_triple(text, args.n)?]
    } else {
        let n = args
            .n
            .ok_or_else(|| CliError::Usage("either --n or --triple is required".into()))?;
        if n < 2 {
            return Err(CliError::Usage("--n must be at least 2".into()));
        }
        let n_max = args.n_max.unwrap_or(n);
        if n_max < n {
            return Err(CliError::Usage("--n-max must not be below --n".into()));
        }
        let mut all = Vec::new();
        for dim in n..=n_max {
            let batch =
                enumerate(dim, args.cap).map_err(|e| CliError::Usage(e.to_string()))?;
            all.extend(batch);
        }
        all
    };
    if let Some(filter) = &args.filter {
        let wanted: Vec<&str> = filter.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        for flag in &wanted {
            if BDTriple::empty(2).classify().has_flag(flag).is_none() {
                return Err(CliError::Usage(format!("unknown classification flag {flag:?}")));
            }
        }
        triples.retain(|t| {
            let c = t.classify();
            wanted.iter().all(|flag| c.has_flag(flag).unwrap_or(false))
        });
    }
    Ok(triples)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_enumerate(args: SelectArgs) -> Result<u8, CliError> {
    let triples = resolve_triples(&args)?;
    let descriptors: Vec<TripleDescriptor> =
        triples.iter().map(TripleDescriptor::of).collect();
    let content = match args.format {
        Format::Json => {
            let doc = serde_json::json!({
                "count": descriptors.len(),
                "triples": descriptors,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["n", "triple"]).map_err(csv_err)?;
            for d in &descriptors {
                wtr.write_record([d.n.to_string(), d.text.clone()]).map_err(csv_err)?;
            }
            finish_csv(wtr)?
        }
    };
    write_output(&args.out, &content)?;
    Ok(0)
}

fn cmd_classify(args: SelectArgs) -> Result<u8, CliError> {
    let triples = resolve_triples(&args)?;
    let rows: Vec<serde_json::Value> = triples
        .iter()
        .map(|t| {
            serde_json::json!({
                "triple": TripleDescriptor::of(t),
                "classification": t.classify().flags(),
            })
        })
        .collect();
    let content = match args.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({
                "count": rows.len(),
                "triples": rows,
            }))?
        ),
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["n", "triple", "classification"]).map_err(csv_err)?;
            for t in &triples {
                wtr.write_record([
                    t.n().to_string(),
                    t.to_text(),
                    t.classify().flags().join(" "),
                ])
                .map_err(csv_err)?;
            }
            finish_csv(wtr)?
        }
    };
    write_output(&args.out, &content)?;
    Ok(0)
}

fn parse_checks(spec: &Option<String>) -> Result<BTreeSet<String>, CliError> {
    let Some(spec) = spec else {
        return Ok(DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect());
    };
    let mut out = BTreeSet::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            out.extend(CHECK_GROUPS.iter().map(|s| s.to_string()));
        } else if name == "classical" {
            out.insert("classical-limit".to_string());
        } else if CHECK_GROUPS.contains(&name) {
            out.insert(name.to_string());
        } else {
            return Err(CliError::Usage(format!(
                "unknown check {name:?}; available: {}",
                CHECK_GROUPS.join(", ")
            )));
        }
    }
    Ok(out)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, CliError> {
    let triples = resolve_triples(&args.select)?;
    let checks = parse_checks(&args.checks)?;
    let opts = BatteryOptions {
        checks,
        perturb_seed: args.perturb_r0.then_some(args.seed),
        timings: args.timings,
        corrupt_fixture: args.inject_corruption,
        emit_twist: args.emit_twist,
    };

    // Resumption: skip triples already present in the output file.
    let mut done: BTreeSet<String> = BTreeSet::new();
    if args.resume {
        if let Some(path) = &args.select.out {
            if path.exists() {
                for line in fs::read_to_string(path)?.lines() {
                    if let Ok(report) = serde_json::from_str::<serde_json::Value>(line) {
                        if let Some(text) = report.pointer("/triple/text").and_then(|v| v.as_str())
                        {
                            done.insert(text.to_string());
                        }
                    }
                }
            }
        }
    }
    let todo: Vec<BDTriple> =
        triples.into_iter().filter(|t| !done.contains(&t.to_text())).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;

    let mut sink: Box<dyn Write> = match &args.select.out {
        Some(path) => {
            let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
            Box::new(file)
        }
        None => Box::new(std::io::stdout()),
    };

    // Stream results in chunks so long sweeps flush incrementally while
    // keeping the output order deterministic.
    let mut failed = 0usize;
    let mut passed = 0usize;
    for chunk in todo.chunks(64) {
        let reports: Vec<VerificationReport> =
            pool.install(|| bdtwist::verify::sweep(chunk, &opts));
        for report in reports {
            if report.all_passed() {
                passed += 1;
            } else {
                failed += 1;
                for (name, status) in &report.checks {
                    if status.is_fail() {
                        eprintln!(
                            "FAIL {} :: {} :: {}",
                            report.triple.text,
                            name,
                            status.brief()
                        );
                    }
                }
            }
            writeln!(sink, "{}", serde_json::to_string(&report)?)?;
        }
    }
    sink.flush()?;
    eprintln!(
        "verified {} triples: {passed} passed, {failed} failed, {} skipped (resume)",
        passed + failed,
        done.len()
    );
    Ok(if failed > 0 { 1 } else { 0 })
}

fn report_files(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.extension()
                    .map(|x| x == "ndjson" || x == "jsonl" || x == "json")
                    .unwrap_or(false)
            })
            .collect();
        files.sort();
        return Ok(files);
    }
    Err(CliError::Usage(format!("report input {} does not exist", input.display())))
}

fn cmd_report(args: ReportArgs) -> Result<u8, CliError> {
    let mut rows: Vec<serde_json::Value> = Vec::new();
    for file in report_files(&args.input)? {
        for line in fs::read_to_string(&file)?.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            rows.push(
                serde_json::from_str(line)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?,
            );
        }
    }
    rows.sort_by(|a, b| {
        let key = |v: &serde_json::Value| {
            (
                v.pointer("/triple/n").and_then(|x| x.as_u64()).unwrap_or(0),
                v.pointer("/triple/text").and_then(|x| x.as_str()).unwrap_or("").to_string(),
            )
        };
        key(a).cmp(&key(b))
    });

    let content = match args.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({
                "count": rows.len(),
                "rows": rows,
            }))?
        ),
        Format::Csv => {
            let mut check_names: BTreeSet<String> = BTreeSet::new();
            for row in &rows {
                if let Some(checks) = row.get("checks").and_then(|c| c.as_object()) {
                    check_names.extend(checks.keys().cloned());
                }
            }
            let mut wtr = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["n".to_string(), "triple".to_string(), "classification".to_string()];
            header.extend(check_names.iter().cloned());
            header.push("timing_ms".to_string());
            wtr.write_record(&header).map_err(csv_err)?;
            for row in &rows {
                let mut record = vec![
                    row.pointer("/triple/n").and_then(|v| v.as_u64()).unwrap_or(0).to_string(),
                    row.pointer("/triple/text").and_then(|v| v.as_str()).unwrap_or("").to_string(),
                    row.get("classification")
                        .and_then(|c| c.as_array())
                        .map(|a| {
                            a.iter()
                                .filter_map(|v| v.as_str())
                                .collect::<Vec<_>>()
                                .join(" ")
                        })
                        .unwrap_or_default(),
                ];
                for name in &check_names {
                    let status = row
                        .pointer(&format!("/checks/{name}/status"))
                        .and_then(|v| v.as_str())
                        .unwrap_or("");
                    record.push(status.to_string());
                }
                record.push(
                    row.get("timing_ms").and_then(|v| v.as_u64()).map(|v| v.to_string()).unwrap_or_default(),
                );
                wtr.write_record(&record).map_err(csv_err)?;
            }
            finish_csv(wtr)?
        }
    };
    write_output(&args.out, &content)?;
    Ok(0)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn finish_csv(wtr: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = wtr.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}
