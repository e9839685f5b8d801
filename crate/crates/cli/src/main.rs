//! Command-line front end: verification sweeps, single classifications,
//! protocol trials and table reconstructions, with text/JSON/CSV reports.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! or input errors.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use hbsa_core::hbsa::{verify_table2, HyperBellLabel};
use hbsa_core::qnd::Faults;
use hbsa_core::report::{
    swap_rows_exhaustive, swap_rows_sampled, table1_rows, table2_rows, teleport_rows, verify_rows,
    Table1Row, Table2Row, TeleportRow, VerifyRow,
};
use hbsa_core::rng::SimRng;
use hbsa_core::spbsa::DetectorMap;
use hbsa_core::statevec::PathLabel;

const DEFAULT_SEED: u64 = 42;
const FIDELITY_GATE: f64 = 1.0 - 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sampling,
    Exhaustive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "hbsa", about = "Hyperentangled Bell-state analyzer simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for sampled branches and random trial inputs
    /// (falls back to the HBSA_SEED environment variable, then to 42).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Branch handling for protocol commands.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exhaustive)]
    mode: Mode,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Number of trials for sampled runs.
    #[arg(long, global = true, default_value_t = 1)]
    trials: u64,

    /// Write the report to a file (atomically) instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep all 16 hyperentangled Bell states exhaustively and check both
    /// readout tables.
    Verify {
        #[arg(long, hide = true)]
        inject_hwp_fault: bool,
    },
    /// Prepare one labeled state and classify it with sampled measurements.
    Classify {
        /// Polarization label: PhiP+, PhiP-, PsiP+ or PsiP-.
        pol: String,
        /// Time-bin label: PhiT+, PhiT-, PsiT+ or PsiT-.
        tb: String,
    },
    /// Teleport a single-photon two-qubit payload over the shared channel.
    Teleport {
        /// Polarization H coefficient, as `re` or `re,im`.
        #[arg(long)]
        alpha: Option<String>,
        /// Polarization V coefficient.
        #[arg(long)]
        beta: Option<String>,
        /// Early time-bin coefficient.
        #[arg(long)]
        delta: Option<String>,
        /// Late time-bin coefficient.
        #[arg(long)]
        eta: Option<String>,
    },
    /// Swap entanglement between two hyperentangled pairs via the analyzer.
    Swap,
    /// Print the readout tables, simulation-derived against transcribed.
    Table {
        #[arg(long, hide = true)]
        corrupt_transcription: bool,
    },
}

struct Failure {
    message: String,
    code: i32,
}

fn usage_error(message: impl Into<String>) -> Failure {
    Failure { message: message.into(), code: 2 }
}

fn check_failure(e: hbsa_core::Error) -> Failure {
    Failure { message: e.to_string(), code: 1 }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::Verify { inject_hwp_fault } => {
            run_verify(seed, cli.format, &cli.output, inject_hwp_fault)
        }
        Command::Classify { pol, tb } => run_classify(seed, cli.format, &cli.output, &pol, &tb),
        Command::Teleport { alpha, beta, delta, eta } => run_teleport(
            seed,
            cli.format,
            &cli.output,
            cli.mode,
            cli.trials,
            [alpha, beta, delta, eta],
        ),
        Command::Swap => run_swap(seed, cli.format, &cli.output, cli.mode, cli.trials),
        Command::Table { corrupt_transcription } => {
            run_table(seed, cli.format, &cli.output, corrupt_transcription)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("HBSA_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| usage_error(format!("HBSA_SEED is not a valid u64: {text:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn emit(output: &Option<PathBuf>, body: &str) -> Result<(), Failure> {
    match output {
        None => {
            print!("{body}");
            std::io::stdout().flush().ok();
            Ok(())
        }
        Some(path) => {
            let tmp = path.with_extension("tmp~");
            std::fs::write(&tmp, body)
                .and_then(|()| std::fs::rename(&tmp, path))
                .map_err(|e| Failure {
                    message: format!("writing {}: {e}", path.display()),
                    code: 2,
                })
        }
    }
}

#[derive(Serialize)]
struct Envelope<R: Serialize, S: Serialize> {
    command: &'static str,
    seed: u64,
    rows: Vec<R>,
    summary: S,
}

fn to_json<R: Serialize, S: Serialize>(envelope: &Envelope<R, S>) -> String {
    let mut body = serde_json::to_string_pretty(envelope).expect("report serializes");
    body.push('\n');
    body
}

fn derive_map() -> Result<DetectorMap, Failure> {
    DetectorMap::derive().map_err(check_failure)
}

#[derive(Serialize)]
struct VerifySummary {
    pass_count: usize,
    total: usize,
    table1_ok: bool,
    table2_ok: bool,
    all_pass: bool,
}

fn run_verify(
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
    inject_hwp_fault: bool,
) -> Result<i32, Failure> {
    let started = Instant::now();
    let faults = Faults { hwp_sign_flip: inject_hwp_fault };
    let map = derive_map()?;
    let rows = verify_rows(&map, faults);
    let table1_ok = table1_rows(faults, false).iter().all(|r| r.pass);
    let table2_ok = verify_table2(&map).is_ok();
    let pass_count = rows.iter().filter(|r| r.pass).count();
    let summary = VerifySummary {
        pass_count,
        total: rows.len(),
        table1_ok,
        table2_ok,
        all_pass: pass_count == rows.len() && table1_ok && table2_ok,
    };
    let all_pass = summary.all_pass;
    let envelope = Envelope { command: "verify", seed, rows, summary };

    let body = match format {
        Format::Json => to_json(&envelope),
        Format::Csv => verify_csv(&envelope.rows),
        Format::Text => verify_text(&envelope),
    };
    emit(output, &body)?;
    // timing goes to stderr so reports stay byte-identical per (command, seed, format)
    eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    Ok(if all_pass { 0 } else { 1 })
}

fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = String::from("label,shift1,shift2,relabeled,detections,classified,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.label,
            r.shift1,
            r.shift2,
            r.relabeled,
            r.detections.join("|"),
            r.classified,
            r.pass
        ));
    }
    out
}

fn verify_text(envelope: &Envelope<VerifyRow, VerifySummary>) -> String {
    let mut out = String::new();
    out.push_str(&format!("verification sweep (seed {})\n", envelope.seed));
    out.push_str(&format!(
        "{:<13} {:>6} {:>6}  {:<7} {:<44} {:<13} {}\n",
        "label", "shift1", "shift2", "new", "branch detections", "classified", "pass"
    ));
    for r in &envelope.rows {
        out.push_str(&format!(
            "{:<13} {:>6} {:>6}  {:<7} {:<44} {:<13} {}\n",
            r.label,
            r.shift1,
            r.shift2,
            r.relabeled,
            r.detections.join(", "),
            r.classified,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    let s = &envelope.summary;
    out.push_str(&format!(
        "summary: {}/{} labels pass, table1 {}, table2 {}\n",
        s.pass_count,
        s.total,
        if s.table1_ok { "ok" } else { "MISMATCH" },
        if s.table2_ok { "ok" } else { "MISMATCH" },
    ));
    out
}

#[derive(Serialize)]
struct ClassifyRow {
    label: String,
    shift1: String,
    shift2: String,
    original: String,
    relabeled: String,
    det_a: String,
    det_b: String,
    port_a: String,
    port_b: String,
    classified: String,
}

#[derive(Serialize)]
struct ClassifySummary {
    classified: String,
    matches_input: bool,
}

fn run_classify(
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
    pol: &str,
    tb: &str,
) -> Result<i32, Failure> {
    let label: HyperBellLabel = format!("{pol} {tb}")
        .parse()
        .map_err(|e: hbsa_core::Error| usage_error(e.to_string()))?;
    let map = derive_map()?;
    let state = hbsa_core::hbsa::prepare_hyper_bell(label);
    let mut rng = SimRng::new(seed);
    let leaf = hbsa_core::hbsa::classify_sampled(&state, &map, Faults::default(), &mut rng)
        .map_err(check_failure)?;

    let port_text = |facing: PathLabel, sign: &str| format!("{facing} {sign}");
    let row = ClassifyRow {
        label: label.to_string(),
        shift1: leaf.record.step1.shift1.token().into(),
        shift2: leaf.record.step1.shift2.token().into(),
        original: leaf.record.step1.original.to_string(),
        relabeled: leaf.record.step1.relabeled.to_string(),
        det_a: leaf.record.det_a.to_string(),
        det_b: leaf.record.det_b.to_string(),
        port_a: port_text(leaf.record.port_a.facing, leaf.record.port_a.sign.token()),
        port_b: port_text(leaf.record.port_b.facing, leaf.record.port_b.sign.token()),
        classified: leaf.label.to_string(),
    };
    let summary = ClassifySummary {
        classified: leaf.label.to_string(),
        matches_input: leaf.label == label,
    };
    let envelope = Envelope { command: "classify", seed, rows: vec![row], summary };

    let body = match format {
        Format::Json => to_json(&envelope),
        Format::Csv => {
            let r = &envelope.rows[0];
            format!(
                "label,shift1,shift2,original,relabeled,det_a,det_b,classified\n{},{},{},{},{},{},{},{}\n",
                r.label, r.shift1, r.shift2, r.original, r.relabeled, r.det_a, r.det_b, r.classified
            )
        }
        Format::Text => {
            let r = &envelope.rows[0];
            format!(
                "input:      {}\nshifts:     probe1 {}θ, probe2 {}θ\noriginal:   {}\nnew state:  {}\ndetections: {} at {} (A), {} at {} (B)\nresult:     {}\n",
                r.label,
                r.shift1,
                r.shift2,
                r.original,
                r.relabeled,
                r.det_a,
                r.port_a,
                r.det_b,
                r.port_b,
                r.classified
            )
        }
    };
    emit(output, &body)?;
    Ok(0)
}

fn parse_complex(text: &str, what: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    let parse = |t: &str| -> Result<f64, Failure> {
        t.trim().parse::<f64>().map_err(|_| usage_error(format!("bad {what}: {text:?}")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
        _ => Err(usage_error(format!("bad {what}: {text:?} (expected re or re,im)"))),
    }
}

#[derive(Serialize)]
struct TeleportSummary {
    trials: u64,
    branch_rows: usize,
    mean_fidelity: f64,
    min_fidelity: f64,
    mean_fidelity_uncorrected: f64,
    all_pass: bool,
}

fn run_teleport(
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
    mode: Mode,
    trials: u64,
    coeff_flags: [Option<String>; 4],
) -> Result<i32, Failure> {
    let given = coeff_flags.iter().filter(|c| c.is_some()).count();
    let coeffs = match given {
        0 => None,
        4 => {
            let [a, b, d, e] = coeff_flags;
            let parsed = hbsa_core::protocols::TwoQubitPhotonState::new(
                parse_complex(&a.unwrap(), "alpha")?,
                parse_complex(&b.unwrap(), "beta")?,
                parse_complex(&d.unwrap(), "delta")?,
                parse_complex(&e.unwrap(), "eta")?,
            )
            .map_err(|e| usage_error(e.to_string()))?;
            Some(parsed)
        }
        _ => {
            return Err(usage_error(
                "teleport coefficients must be given all together (--alpha --beta --delta --eta) or not at all",
            ))
        }
    };
    if trials == 0 {
        return Err(usage_error("--trials must be at least 1"));
    }
    let map = derive_map()?;
    let rows =
        teleport_rows(seed, trials, coeffs, mode == Mode::Exhaustive, &map, Faults::default())
            .map_err(check_failure)?;

    let weight: f64 = rows.iter().map(|r| r.probability).sum();
    let mean_fidelity = rows.iter().map(|r| r.probability * r.fidelity).sum::<f64>() / weight;
    let min_fidelity = rows.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min);
    let mean_fidelity_uncorrected =
        rows.iter().map(|r| r.probability * r.fidelity_uncorrected).sum::<f64>() / weight;
    let all_pass = rows.iter().all(|r| r.fidelity >= FIDELITY_GATE);
    let summary = TeleportSummary {
        trials,
        branch_rows: rows.len(),
        mean_fidelity,
        min_fidelity,
        mean_fidelity_uncorrected,
        all_pass,
    };
    let ok = summary.all_pass;
    let envelope = Envelope { command: "teleport", seed, rows, summary };

    let body = match format {
        Format::Json => to_json(&envelope),
        Format::Csv => {
            let mut out =
                String::from("trial,branch,label,probability,fidelity,fidelity_uncorrected\n");
            for r in &envelope.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.trial, r.branch, r.label, r.probability, r.fidelity, r.fidelity_uncorrected
                ));
            }
            out
        }
        Format::Text => teleport_text(&envelope),
    };
    emit(output, &body)?;
    Ok(if ok { 0 } else { 1 })
}

fn teleport_text(envelope: &Envelope<TeleportRow, TeleportSummary>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "teleportation: {} trial(s), seed {}\n",
        envelope.summary.trials, envelope.seed
    ));
    out.push_str(&format!(
        "{:>5} {:>6}  {:<13} {:>11} {:>12} {:>12}\n",
        "trial", "branch", "label", "probability", "fidelity", "uncorrected"
    ));
    for r in &envelope.rows {
        out.push_str(&format!(
            "{:>5} {:>6}  {:<13} {:>11.6} {:>12.9} {:>12.6}\n",
            r.trial, r.branch, r.label, r.probability, r.fidelity, r.fidelity_uncorrected
        ));
    }
    let s = &envelope.summary;
    out.push_str(&format!(
        "mean fidelity {:.9} (min {:.9}), uncorrected mean {:.6}: {}\n",
        s.mean_fidelity,
        s.min_fidelity,
        s.mean_fidelity_uncorrected,
        if s.all_pass { "pass" } else { "FAIL" }
    ));
    out
}

#[derive(Serialize)]
struct SwapSummary {
    rows: usize,
    all_match: bool,
}

fn run_swap(
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
    mode: Mode,
    trials: u64,
) -> Result<i32, Failure> {
    let map = derive_map()?;
    let rows = match mode {
        Mode::Exhaustive => swap_rows_exhaustive(&map, Faults::default()),
        Mode::Sampling => swap_rows_sampled(seed, trials, &map, Faults::default()),
    }
    .map_err(check_failure)?;
    let all_match = rows.iter().all(|r| r.matches);
    let summary = SwapSummary { rows: rows.len(), all_match };
    let envelope = Envelope { command: "swap", seed, rows, summary };

    let body = match format {
        Format::Json => to_json(&envelope),
        Format::Csv => {
            let mut out = String::from("branch,charlie_label,ab_label,match,probability\n");
            for r in &envelope.rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.branch, r.charlie_label, r.ab_label, r.matches, r.probability
                ));
            }
            out
        }
        Format::Text => {
            let mut out = format!("entanglement swapping (seed {})\n", envelope.seed);
            out.push_str(&format!(
                "{:>6}  {:<13} {:<13} {:>11} {}\n",
                "branch", "charlie", "alice-bob", "probability", "match"
            ));
            for r in &envelope.rows {
                out.push_str(&format!(
                    "{:>6}  {:<13} {:<13} {:>11.6} {}\n",
                    r.branch,
                    r.charlie_label,
                    r.ab_label,
                    r.probability,
                    if r.matches { "yes" } else { "NO" }
                ));
            }
            out.push_str(&format!(
                "summary: {} rows, {}\n",
                envelope.summary.rows,
                if envelope.summary.all_match { "all match" } else { "MISMATCH" }
            ));
            out
        }
    };
    emit(output, &body)?;
    Ok(if all_match { 0 } else { 1 })
}

#[derive(Serialize)]
struct TableSummary {
    table1_diffs: usize,
    table2_diffs: usize,
    detector_map: Vec<String>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum TableRow {
    One(Table1Row),
    Two(Table2Row),
}

fn run_table(
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
    corrupt: bool,
) -> Result<i32, Failure> {
    let map = derive_map()?;
    let t1 = table1_rows(Faults::default(), corrupt);
    let t2 = table2_rows(&map, corrupt);
    let table1_diffs = t1.iter().filter(|r| !r.pass).count();
    let table2_diffs = t2.iter().filter(|r| !r.pass).count();
    let detector_map: Vec<String> = map.table_text().lines().map(|l| l.to_string()).collect();
    let ok = table1_diffs == 0 && table2_diffs == 0;
    let summary = TableSummary { table1_diffs, table2_diffs, detector_map };

    let body = match format {
        Format::Json => {
            let rows: Vec<TableRow> = t1
                .iter()
                .cloned()
                .map(TableRow::One)
                .chain(t2.iter().cloned().map(TableRow::Two))
                .collect();
            to_json(&Envelope { command: "table", seed, rows, summary })
        }
        Format::Csv => {
            let mut out = String::from("section,a,b,c,d,pass\n");
            for r in &t1 {
                out.push_str(&format!(
                    "table1,{},{},{},{},{}\n",
                    r.original, r.shift1, r.shift2, r.new_state, r.pass
                ));
            }
            for r in &t2 {
                out.push_str(&format!(
                    "table2,{},{},{},{},{}\n",
                    r.group, r.new_pol, r.time_bin, r.detections, r.pass
                ));
            }
            out
        }
        Format::Text => {
            let mut out = String::from("step-1 readout table (simulated | transcribed)\n");
            for r in &t1 {
                out.push_str(&format!(
                    "  {:<7} {:>2}θ {:>2}θ new {:<7} | {:<16} {}\n",
                    r.original,
                    r.shift1,
                    r.shift2,
                    r.new_state,
                    r.transcribed,
                    if r.pass { "ok" } else { "DIFF" }
                ));
            }
            out.push_str("detection groups (members -> possible detections)\n");
            for r in &t2 {
                out.push_str(&format!(
                    "  group {}: {} x {} -> {} {}\n",
                    r.group,
                    r.new_pol,
                    r.time_bin,
                    r.detections,
                    if r.pass { "ok" } else { "DIFF" }
                ));
            }
            out.push_str("detector map (derived)\n");
            for line in map.table_text().lines() {
                out.push_str(&format!("  {line}\n"));
            }
            out.push_str(&format!("diff: table1 {table1_diffs}, table2 {table2_diffs}\n"));
            out
        }
    };
    emit(output, &body)?;
    Ok(if ok { 0 } else { 1 })
}
