//! Subcommand implementations. Each returns the process exit code:
//! 0 success, 2 configuration or validation problem, 3 a certified
//! guarantee failed at runtime, 4 internal solver failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;

use blackwell::harness::{self, RunReport, StepRecord, SweepRow, BOUND_GATE_TOL};
use blackwell::approach::Variant;
use blackwell::harness::Algorithm;
use blackwell::Error;

use crate::scenario::{self, BuiltScenario, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARANTEE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

const STEP_HEADER: &str = "schema_version,scenario_id,seed,n,a_n,z_n,lambda_norm,\
                           dist_to_S,game_value,recursion_audit_pass,bound_ratio";
const SWEEP_HEADER: &str = "schema_version,scenario_id,n_checkpoint,quantile_50,\
                            quantile_95,max,theorem3_bound,violation_fraction";

fn classify(cause: &Error) -> i32 {
    match cause {
        Error::ResponseCertification { .. } | Error::InfeasibleAt { .. } => EXIT_GUARANTEE,
        Error::Unsupported { .. } => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Report JSON written next to every step CSV.
#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    scenario_id: &'a str,
    seed: u64,
    n_steps: u64,
    max_bound_ratio: f64,
    final_dist: f64,
    audits_all_pass: bool,
    descent_all_pass: bool,
    bound_all_pass: bool,
    pass: bool,
    wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_step: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

/// `x.steps.csv` pairs with `x.report.json`; any other name keeps its stem.
fn report_path_for(steps: &Path) -> PathBuf {
    let name = steps.to_string_lossy();
    let stem = name
        .strip_suffix(".steps.csv")
        .or_else(|| name.strip_suffix(".csv"))
        .unwrap_or(&name);
    PathBuf::from(format!("{stem}.report.json"))
}

struct RunPaths {
    steps: PathBuf,
    report: PathBuf,
}

fn run_paths(built: &BuiltScenario, out_flag: Option<&Path>) -> RunPaths {
    let output = built.file.output.as_ref();
    let steps = match out_flag {
        Some(p) => p.to_path_buf(),
        None => match output.and_then(|o| o.steps.clone()) {
            Some(p) => PathBuf::from(p),
            None => PathBuf::from(format!("{}.steps.csv", built.file.id)),
        },
    };
    // An explicit --out keeps CSV and report side by side; otherwise the
    // scenario's declared report path wins.
    let report = if out_flag.is_some() {
        report_path_for(&steps)
    } else {
        match output.and_then(|o| o.report.clone()) {
            Some(p) => PathBuf::from(p),
            None => report_path_for(&steps),
        }
    };
    RunPaths { steps, report }
}

fn write_steps_csv(
    path: &Path,
    scenario_id: &str,
    seed: u64,
    records: &[StepRecord],
) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{STEP_HEADER}")?;
    for rec in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            SCHEMA_VERSION,
            scenario_id,
            seed,
            rec.n,
            rec.a_n,
            rec.z_n,
            rec.lambda_norm,
            rec.dist_to_s,
            rec.game_value,
            rec.recursion_audit_pass,
            rec.bound_ratio
        )?;
    }
    w.flush()
}

fn write_report_json(path: &Path, report: &JsonReport) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

fn success_report<'a>(scenario_id: &'a str, seed: u64, report: &RunReport) -> JsonReport<'a> {
    JsonReport {
        schema_version: SCHEMA_VERSION,
        scenario_id,
        seed,
        n_steps: report.n_steps,
        max_bound_ratio: report.max_bound_ratio,
        final_dist: report.final_dist,
        audits_all_pass: report.audits_all_pass,
        descent_all_pass: report.descent_all_pass,
        bound_all_pass: report.bound_all_pass,
        pass: report.audits_all_pass && report.descent_all_pass && report.bound_all_pass,
        wall_time_ms: report.wall_time_ms,
        failed_step: None,
        failure: None,
    }
}

fn failure_report<'a>(
    scenario_id: &'a str,
    seed: u64,
    records: &[StepRecord],
    step: u64,
    cause: &Error,
) -> JsonReport<'a> {
    let max_ratio = records.iter().fold(0.0, |m: f64, r| m.max(r.bound_ratio));
    let final_dist = records.last().map_or(0.0, |r| r.dist_to_s);
    JsonReport {
        schema_version: SCHEMA_VERSION,
        scenario_id,
        seed,
        n_steps: records.len() as u64,
        max_bound_ratio: max_ratio,
        final_dist,
        audits_all_pass: records.iter().all(|r| r.recursion_audit_pass),
        descent_all_pass: records.iter().all(|r| r.descent_pass),
        bound_all_pass: false,
        pass: false,
        wall_time_ms: 0.0,
        failed_step: Some(step),
        failure: Some(cause.to_string()),
    }
}

/// Runs one scenario with one seed, writing the step CSV and report JSON.
pub fn cmd_run(path: &Path, seed_flag: Option<u64>, out_flag: Option<&Path>) -> i32 {
    let built = match scenario::load(path).and_then(|f| f.build()) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let seed = match seed_flag.or_else(|| built.file.seeds.first().copied()) {
        Some(s) => s,
        None => {
            eprintln!(
                "scenario {} declares no seeds; pass one with --seed",
                built.file.id
            );
            return EXIT_CONFIG;
        }
    };
    let spec = built.run_spec();
    if let Err(e) = harness::validate(&spec) {
        eprintln!("scenario {} failed validation: {e}", built.file.id);
        return EXIT_CONFIG;
    }
    let paths = run_paths(&built, out_flag);
    let id = built.file.id.as_str();
    match harness::run(&spec, seed) {
        Ok(outcome) => {
            let json = success_report(id, seed, &outcome.report);
            if let Err(e) = write_steps_csv(&paths.steps, id, seed, &outcome.records)
                .and_then(|()| write_report_json(&paths.report, &json))
            {
                eprintln!("writing outputs for {id}: {e}");
                return EXIT_CONFIG;
            }
            if json.pass {
                println!(
                    "{id} seed {seed}: {} steps, max bound ratio {:.6}, final distance {:.6}: OK",
                    outcome.report.n_steps,
                    outcome.report.max_bound_ratio,
                    outcome.report.final_dist
                );
                EXIT_OK
            } else {
                eprintln!(
                    "{id} seed {seed}: guarantee violated (audits {}, descent {}, bound {})",
                    outcome.report.audits_all_pass,
                    outcome.report.descent_all_pass,
                    outcome.report.bound_all_pass
                );
                EXIT_GUARANTEE
            }
        }
        Err(fail) => {
            let json = failure_report(id, seed, &fail.records, fail.step, &fail.cause);
            if let Err(e) = write_steps_csv(&paths.steps, id, seed, &fail.records)
                .and_then(|()| write_report_json(&paths.report, &json))
            {
                eprintln!("writing outputs for {id}: {e}");
            }
            eprintln!("{id} seed {seed}: step {} failed: {}", fail.step, fail.cause);
            classify(&fail.cause)
        }
    }
}

fn write_sweep_csv(path: &Path, scenario_id: &str, rows: &[SweepRow]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            SCHEMA_VERSION,
            scenario_id,
            row.n_checkpoint,
            row.quantile_50,
            row.quantile_95,
            row.max,
            row.envelope,
            row.violation_fraction
        )?;
    }
    w.flush()
}

/// Runs every declared seed and writes the checkpoint quantile table.
pub fn cmd_sweep(path: &Path, out_flag: Option<&Path>) -> i32 {
    let built = match scenario::load(path).and_then(|f| f.build()) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let id = built.file.id.as_str();
    if built.file.seeds.is_empty() {
        eprintln!("scenario {id} declares no seeds; a sweep needs at least one");
        return EXIT_CONFIG;
    }
    let spec = built.run_spec();
    if let Err(e) = harness::validate(&spec) {
        eprintln!("scenario {id} failed validation: {e}");
        return EXIT_CONFIG;
    }
    let sweep_path = match out_flag {
        Some(p) => p.to_path_buf(),
        None => match built.file.output.as_ref().and_then(|o| o.sweep.clone()) {
            Some(p) => PathBuf::from(p),
            None => PathBuf::from(format!("{id}.sweep.csv")),
        },
    };
    let outcome = match harness::sweep(&spec, &built.file.seeds, &built.file.checkpoints) {
        Ok(o) => o,
        Err(fail) => {
            eprintln!("{id}: seed run failed at step {}: {}", fail.step, fail.cause);
            return classify(&fail.cause);
        }
    };
    if let Err(e) = write_sweep_csv(&sweep_path, id, &outcome.rows) {
        eprintln!("writing {}: {e}", sweep_path.display());
        return EXIT_CONFIG;
    }
    let runs_pass = outcome
        .reports
        .iter()
        .all(|r| r.audits_all_pass && r.descent_all_pass && r.bound_all_pass);
    // For the realized variant the pathwise gate is vacuous; the envelope
    // holds in probability, so the sweep checks observed frequencies.
    let realized = built.algorithm == Algorithm::ResponseBased(Variant::Realized);
    let fractions_pass = !realized
        || outcome
            .rows
            .iter()
            .all(|row| row.violation_fraction <= built.file.delta);
    let max_ratio = outcome
        .reports
        .iter()
        .fold(0.0, |m: f64, r| m.max(r.max_bound_ratio));
    if runs_pass && fractions_pass {
        println!(
            "{id}: {} seeds, {} checkpoints, max bound ratio {max_ratio:.6}: OK",
            built.file.seeds.len(),
            outcome.rows.len()
        );
        EXIT_OK
    } else {
        eprintln!(
            "{id}: guarantee violated across sweep (runs pass: {runs_pass}, \
             envelope frequencies pass: {fractions_pass})"
        );
        EXIT_GUARANTEE
    }
}

struct ReportGroup {
    last_n: u64,
    final_dist: f64,
    max_ratio: f64,
    audits_all: bool,
}

/// Summarizes step CSVs: one PASS/FAIL line per (scenario, seed) group.
pub fn cmd_report(paths: &[PathBuf]) -> i32 {
    if paths.is_empty() {
        eprintln!("report needs at least one step CSV path");
        return EXIT_CONFIG;
    }
    let expected: Vec<&str> = STEP_HEADER.split(',').map(str::trim).collect();
    let mut groups: BTreeMap<(String, u64), ReportGroup> = BTreeMap::new();
    for path in paths {
        let mut reader = match csv::Reader::from_path(path) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return EXIT_CONFIG;
            }
        };
        match reader.headers() {
            Ok(h) if h.iter().collect::<Vec<_>>() == expected => {}
            Ok(h) => {
                eprintln!(
                    "{}: unexpected columns {:?}",
                    path.display(),
                    h.iter().collect::<Vec<_>>()
                );
                return EXIT_CONFIG;
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        for row in reader.records() {
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            };
            match parse_step_row(&row) {
                Some(step) => {
                    let g = groups.entry((step.id, step.seed)).or_insert(ReportGroup {
                        last_n: 0,
                        final_dist: 0.0,
                        max_ratio: 0.0,
                        audits_all: true,
                    });
                    if step.n >= g.last_n {
                        g.last_n = step.n;
                        g.final_dist = step.dist;
                    }
                    g.max_ratio = g.max_ratio.max(step.ratio);
                    g.audits_all &= step.audit;
                }
                None => {
                    eprintln!("{}: malformed row {:?}", path.display(), row);
                    return EXIT_CONFIG;
                }
            }
        }
    }
    if groups.is_empty() {
        eprintln!("no step rows found in the given files");
        return EXIT_CONFIG;
    }
    let mut all_pass = true;
    for ((id, seed), g) in &groups {
        let pass = g.audits_all && g.max_ratio <= 1.0 + BOUND_GATE_TOL;
        all_pass &= pass;
        println!(
            "{id} seed {seed}: steps {}, max bound ratio {:.6}, final distance {:.6}: {}",
            g.last_n,
            g.max_ratio,
            g.final_dist,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        EXIT_OK
    } else {
        EXIT_GUARANTEE
    }
}

struct StepRow {
    id: String,
    seed: u64,
    n: u64,
    dist: f64,
    audit: bool,
    ratio: f64,
}

fn parse_step_row(row: &csv::StringRecord) -> Option<StepRow> {
    if row.len() != 11 {
        return None;
    }
    Some(StepRow {
        id: row.get(1)?.to_string(),
        seed: row.get(2)?.parse().ok()?,
        n: row.get(3)?.parse().ok()?,
        dist: row.get(7)?.parse().ok()?,
        audit: row.get(9)?.parse().ok()?,
        ratio: row.get(10)?.parse().ok()?,
    })
}
