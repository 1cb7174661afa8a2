//! `kfree`: check digit sets, compute certified harmonic sums, run searches
//! and reproduce the published tables.
//!
//! Exit codes: 0 success, 1 negative verdict (certificate false, table
//! mismatch), 2 usage error, 3 precision not reached, 4 other failures.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kfree_core::search::{Mode, Objective, RunOptions, SearchConfig};
use kfree_core::tables::{check_table, Table};
use kfree_core::{
    find_ap_witness, harmonic_sum_shifted, is_kfree_mod, kfree_certificate, read_rows, rescore, run_search,
    CandidateRecord, Checkpoint, Error, KempnerSpec, PrecisionConfig, ResidueSet, ResultRow,
};

const EPSILON_VAR: &str = "KFREE_EPSILON";

#[derive(Parser)]
#[command(
    name = "kfree",
    version,
    about = "Digit sets whose Kempner sets avoid k-term progressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether S is k-free mod b and whether that certifies K(S, b).
    Check {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = parse_digits)]
        digits: Digits,
    },
    /// Certified harmonic sum of K(S, b) + shift.
    Hsum {
        #[arg(long)]
        b: u32,
        #[arg(long, value_parser = parse_digits)]
        digits: Digits,
        #[arg(long, default_value_t = 1)]
        shift: u64,
        /// Absolute error target [default: $KFREE_EPSILON or 1e-9]
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Branch-and-bound search over digit sets.
    Search(SearchArgs),
    /// Recompute a published table and compare.
    Tables {
        /// 1, 2, 3, 4 or composite
        which: String,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Convert JSONL search output to CSV.
    Convert {
        /// Input file; stdin when omitted.
        input: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    k: u32,
    /// LO..HI (inclusive) or a single base.
    #[arg(long, value_parser = parse_bases)]
    bases: (u32, u32),
    /// Prune branches whose estimate is below this; defaults to no pruning.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// full, root=<digits>, greedy-dev=<n> or caps=<list>
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Hsum)]
    objective: ObjectiveArg,
    /// Rank by certified sum (or density) and print the best N as a table.
    #[arg(long)]
    top: Option<usize>,
    /// JSONL destination; stdout when omitted and --top is not given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Continue from --checkpoint, skipping finished work.
    #[arg(long, requires = "checkpoint")]
    resume: bool,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = kfree_core::search::DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    /// Stop after this many work units; resume later with --resume.
    #[arg(long)]
    max_units: Option<usize>,
    /// Allow digit sets without 0.
    #[arg(long)]
    no_zero: bool,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Hsum,
    Density,
}

#[derive(Clone, Debug)]
struct Digits(Vec<u32>);

fn parse_list(s: &str) -> Result<Vec<u32>, String> {
    let s = s.trim().trim_start_matches('{').trim_end_matches('}');
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| format!("bad digit '{}': {e}", t.trim()))
        })
        .collect()
}

fn parse_digits(s: &str) -> Result<Digits, String> {
    parse_list(s).map(Digits)
}

fn parse_bases(s: &str) -> Result<(u32, u32), String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad base '{t}': {e}"));
    match s.split_once("..") {
        Some((lo, hi)) => Ok((num(lo)?, num(hi.trim_start_matches('='))?)),
        None => num(s).map(|b| (b, b)),
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s.split_once('=') {
        None if s == "full" => Ok(Mode::Full),
        Some(("root", digits)) => parse_list(digits).map(Mode::RootBranch),
        Some(("greedy-dev", n)) => n
            .parse()
            .map(Mode::GreedyDeviation)
            .map_err(|e| format!("bad deviation budget '{n}': {e}")),
        Some(("caps", list)) => parse_list(list).map(Mode::TermwiseCaps),
        _ => Err(format!("unknown mode '{s}'")),
    }
}

fn precision(epsilon: Option<f64>) -> anyhow::Result<PrecisionConfig> {
    let target = match epsilon {
        Some(e) => e,
        None => match std::env::var(EPSILON_VAR) {
            Ok(v) => v
                .parse()
                .with_context(|| format!("{EPSILON_VAR}={v} is not a number"))?,
            Err(_) => PrecisionConfig::default().target_error,
        },
    };
    let cfg = PrecisionConfig::with_target(target);
    cfg.validate()?;
    Ok(cfg)
}

fn residues(b: u32, digits: &Digits) -> anyhow::Result<ResidueSet> {
    Ok(ResidueSet::new(b, digits.0.iter().copied())?)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::PrecisionNotReached { .. }) => 3,
        Some(
            Error::InvalidBase(_)
            | Error::DigitOutOfRange { .. }
            | Error::DuplicateDigit(_)
            | Error::InvalidLength(_)
            | Error::NotProperSubset { .. }
            | Error::InvalidPrecision(_)
            | Error::InvalidConfig(_),
        ) => 2,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { b, k, digits } => cmd_check(b, k, &digits),
        Command::Hsum {
            b,
            digits,
            shift,
            epsilon,
        } => cmd_hsum(b, &digits, shift, epsilon),
        Command::Search(args) => cmd_search(args),
        Command::Tables { which, epsilon } => cmd_tables(&which, epsilon),
        Command::Convert { input, out } => cmd_convert(input, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn cmd_check(b: u32, k: u32, digits: &Digits) -> anyhow::Result<u8> {
    let set = residues(b, digits)?;
    let free = is_kfree_mod(&set, k)?;
    println!("set: {set} mod {b}");
    println!("{k}-free mod {b}: {free}");
    if let Some(w) = find_ap_witness(&set, k)? {
        let terms: Vec<String> = w.residues(b).map(|r| r.to_string()).collect();
        println!("witness: start {} step {} ({})", w.start, w.step, terms.join(", "));
    }
    let certified = set.is_proper() && b >= 3 && kfree_certificate(&KempnerSpec::new(set.clone(), 0)?, k)?;
    println!("K(S, {b}) certified {k}-free: {certified}");
    if !certified {
        if !set.contains(0) {
            eprintln!("note: the certificate needs 0 in S");
        }
        if !free {
            eprintln!("note: the mod-b test is sufficient, not necessary; K(S, {b}) may still be {k}-free");
        }
        return Ok(1);
    }
    Ok(0)
}

fn cmd_hsum(b: u32, digits: &Digits, shift: u64, epsilon: Option<f64>) -> anyhow::Result<u8> {
    let cfg = precision(epsilon)?;
    let set = residues(b, digits)?;
    let sum = harmonic_sum_shifted(&set, shift, &cfg)?;
    let decimals = (-cfg.target_error.log10()).ceil().clamp(1.0, 15.0) as usize;
    println!("{:.*} ± {:.1e}", decimals, sum.value, sum.error_bound);
    eprintln!(
        "depth {}; truncation {:.1e}, shift {:.1e}, tail {:.1e}, rounding {:.1e}",
        sum.depth, sum.budget.truncation, sum.budget.shift, sum.budget.tail, sum.budget.rounding
    );
    Ok(0)
}

fn timestamp(args: &SearchArgs) -> anyhow::Result<String> {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = epoch.parse().with_context(|| format!("SOURCE_DATE_EPOCH={epoch}"))?;
        let t = DateTime::<Utc>::from_timestamp(secs, 0).ok_or_else(|| anyhow!("SOURCE_DATE_EPOCH out of range"))?;
        return Ok(t.to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    if let (true, Some(path)) = (args.resume, &args.checkpoint) {
        if path.exists() {
            if let Some(t) = Checkpoint::load(path)?.started_at {
                return Ok(t);
            }
        }
    }
    Ok(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn cmd_search(args: SearchArgs) -> anyhow::Result<u8> {
    let pcfg = precision(args.epsilon)?;
    let objective = match args.objective {
        ObjectiveArg::Hsum => Objective::HarmonicEstimate,
        ObjectiveArg::Density => Objective::LogDensity,
    };
    let cfg = SearchConfig {
        k: args.k,
        bases: args.bases.0..=args.bases.1,
        threshold: args.threshold.unwrap_or(match objective {
            Objective::HarmonicEstimate => f64::NEG_INFINITY,
            Objective::LogDensity => 0.0,
        }),
        mode: args.mode.clone(),
        objective,
        require_zero: !args.no_zero,
        emit_top: args.top,
        node_budget: args.node_budget,
    };
    let stamp = timestamp(&args)?;
    let opts = RunOptions {
        threads: args.threads,
        checkpoint: args.checkpoint.clone(),
        resume: args.resume,
        max_units: args.max_units,
        started_at: Some(stamp.clone()),
        ..RunOptions::default()
    };

    let mut sink: Option<Box<dyn Write>> = match (&args.out, args.top) {
        (Some(path), _) => Some(Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ))),
        (None, None) => Some(Box::new(io::stdout().lock())),
        (None, Some(_)) => None,
    };
    let mode = cfg.mode.label();
    let mut ranked: Vec<CandidateRecord> = Vec::new();
    let mut failures = 0usize;

    let outcome = run_search(&cfg, &opts, |base, records| {
        let scored = rescore(records.to_vec(), &pcfg);
        for (record, err) in &scored.failures {
            eprintln!("warning: b={base} {}: {err}", record.digits);
        }
        failures += scored.failures.len();
        let mut rows: Vec<CandidateRecord> = scored
            .ranked
            .iter()
            .cloned()
            .chain(scored.failures.into_iter().map(|(r, _)| r))
            .collect();
        rows.sort_by(|a, b| a.digits.cmp(&b.digits));
        if let Some(out) = sink.as_mut() {
            for record in &rows {
                ResultRow::from_record(record, &mode, &stamp).write_line(out)?;
            }
            out.flush().map_err(|e| Error::Io(e.to_string()))?;
        }
        ranked.extend(scored.ranked);
        Ok(())
    })?;

    eprintln!(
        "{} nodes, {} pruned, {} sets emitted",
        outcome.stats.nodes, outcome.stats.pruned, outcome.stats.emitted
    );
    if !outcome.complete {
        eprintln!("stopped early; rerun with --resume to continue");
    }
    if failures > 0 {
        eprintln!("{failures} sets could not be certified");
    }

    if let Some(n) = args.top {
        match objective {
            Objective::HarmonicEstimate => {
                ranked.sort_by(|a, b| {
                    let (va, vb) = (a.certified.unwrap().value, b.certified.unwrap().value);
                    vb.total_cmp(&va).then_with(|| a.digits.cmp(&b.digits))
                });
                println!("H(K+1)\tb\tS");
                for r in ranked.iter().take(n) {
                    println!("{:.5}\t{}\t{}", r.certified.unwrap().value, r.base(), r.digits);
                }
            }
            Objective::LogDensity => {
                ranked.sort_by(|a, b| b.density.total_cmp(&a.density).then_with(|| a.digits.cmp(&b.digits)));
                println!("delta\tk\tb\tS");
                for r in ranked.iter().take(n) {
                    println!("{:.5}\t{}\t{}\t{}", r.density, r.k, r.base(), r.digits);
                }
            }
        }
    }
    Ok(0)
}

fn cmd_tables(which: &str, epsilon: Option<f64>) -> anyhow::Result<u8> {
    let Some(table) = Table::parse(which) else {
        eprintln!("error: unknown table '{which}'; expected 1, 2, 3, 4 or composite");
        return Ok(2);
    };
    let cfg = match epsilon {
        Some(_) => precision(epsilon)?,
        None if std::env::var(EPSILON_VAR).is_ok() => precision(None)?,
        None => PrecisionConfig::with_target(1e-7),
    };
    let checks = check_table(table, &cfg)?;
    println!("label\tk\tb\tpublished\tcomputed\tdiff\tstatus");
    for c in &checks {
        let f = &c.fixture;
        println!(
            "{}\t{}\t{}\t{}\t{:.5}\t{:.1e}\t{}",
            f.label,
            f.k,
            f.base,
            f.published,
            c.computed,
            (c.computed - f.published).abs(),
            if c.passed { "ok" } else { "MISMATCH" }
        );
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    eprintln!("table {}: {passed}/{} match", table.name(), checks.len());
    Ok(if passed == checks.len() { 0 } else { 1 })
}

fn cmd_convert(input: Option<PathBuf>, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let rows = match &input {
        Some(path) => read_rows(BufReader::new(
            File::open(path).with_context(|| format!("opening {}", path.display()))?,
        )),
        None => read_rows(io::stdin().lock()),
    }?;
    let sink: Box<dyn Write> = match &out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record([
        "schema_version",
        "k",
        "b",
        "digits",
        "estimate",
        "hsum",
        "hsum_error",
        "density",
        "mode",
        "timestamp",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        let digits: Vec<String> = row.digits.iter().map(u32::to_string).collect();
        writer.write_record([
            row.schema_version.to_string(),
            row.k.to_string(),
            row.b.to_string(),
            digits.join(" "),
            row.estimate.to_string(),
            opt(row.hsum),
            opt(row.hsum_error),
            row.density.to_string(),
            row.mode,
            row.timestamp,
        ])?;
    }
    writer.flush()?;
    Ok(0)
}
