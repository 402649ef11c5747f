//! Command-line front end. Exit codes: 0 pass, 1 counterexample or decode
//! failure, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::circuit::{parse_circuit, Circuit};
use crate::compile::{compile, Backend};
use crate::corpus::{generate, CorpusSpec};
use crate::engine::{RunOptions, Schedule, StepProgram};
use crate::lowerbound::{verify_fib_growth, SFunctionSpec};
use crate::verify::{bits_to_string, verify_program, InputMode, VerifyConfig, VerifySummary};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stepcrn",
    version,
    about = "Compile, run and verify step CRNs built from void rules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a netlist into a step program and a report.
    Compile {
        circuit: PathBuf,
        #[arg(long, default_value = "formula")]
        backend: Backend,
        /// Program file; defaults to `<stem>.<backend>.crn` next to the circuit.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report file; defaults to the program path with `.report` appended.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run a program on one input bitstring.
    Run {
        program: PathBuf,
        bits: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check compiled programs against direct evaluation.
    Verify {
        /// Netlist files or directories of them.
        #[arg(required = true)]
        circuits: Vec<PathBuf>,
        #[arg(long, default_value = "formula")]
        backend: Backend,
        /// `all` or `random:N`.
        #[arg(long, default_value = "all", value_parser = parse_input_mode)]
        inputs: InputMode,
        /// Seed range `a..b` (exclusive) or list `1,2,3`.
        #[arg(long, default_value = "0..25", value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = crate::verify::DEFAULT_VOLUME_CAP)]
        volume_cap: u64,
        #[arg(long, default_value_t = crate::verify::DEFAULT_ALL_CAP)]
        all_cap: usize,
        /// Use this program instead of compiling (single circuit only).
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Tabulate the copy-count lower bound against compiled `V_D` circuits.
    Lowerbound {
        #[arg(long, default_value_t = 20)]
        max_d: usize,
        #[arg(long, default_value_t = 1)]
        min_d: usize,
        /// Outputs for the free rows, e.g. `001=001,010=010,100=100`.
        #[arg(long, default_value = "")]
        completion: String,
        #[arg(long)]
        json: bool,
    },
    /// Write a seeded random corpus of netlists.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1-4", value_parser = parse_range)]
        depth: RangeInclusive<usize>,
        #[arg(long, default_value = "1-16", value_parser = parse_range)]
        gates: RangeInclusive<usize>,
        #[arg(long, default_value = "1-6", value_parser = parse_range)]
        inputs: RangeInclusive<usize>,
        #[arg(long, default_value = "1-3", value_parser = parse_range)]
        fan_in: RangeInclusive<usize>,
        #[arg(long, default_value = "1", value_parser = parse_range)]
        fan_out: RangeInclusive<usize>,
        #[arg(long, default_value_t = 0.3)]
        maj: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

fn parse_input_mode(s: &str) -> Result<InputMode, String> {
    if s == "all" {
        return Ok(InputMode::All);
    }
    s.strip_prefix("random:")
        .and_then(|n| n.parse().ok())
        .map(InputMode::Random)
        .ok_or_else(|| format!("expected `all` or `random:N`, got `{s}`"))
}

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("expected `a..b` or a comma list, got `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.parse().map_err(|_| bad())?;
        let b: u64 = b.parse().map_err(|_| bad())?;
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()
        .map(Seeds)
}

/// `3`, `2-5` or `2..5`, all inclusive.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let bad = || format!("expected `n` or `a-b`, got `{s}`");
    let (a, b) = s
        .split_once("..")
        .or_else(|| s.split_once('-'))
        .unwrap_or((s, s));
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| bad())?;
    Ok(a..=b)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    parse_circuit(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(anyhow!("bad bit `{c}` in `{s}`")),
        })
        .collect()
}

fn circuit_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot open {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| matches!(f.extension().and_then(|e| e.to_str()), Some("net" | "json")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_compile(
    out: &mut dyn Write,
    circuit: &Path,
    backend: Backend,
    program_path: Option<PathBuf>,
    report_path: Option<PathBuf>,
    json: bool,
) -> Result<i32> {
    let c = load_circuit(circuit)?;
    let compiled = compile(&c, backend)?;
    let program_path = program_path.unwrap_or_else(|| {
        let stem = circuit
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("circuit");
        circuit.with_file_name(format!("{stem}.{backend}.crn"))
    });
    let report_path = report_path.unwrap_or_else(|| {
        let mut s = program_path.clone().into_os_string();
        s.push(".report");
        PathBuf::from(s)
    });
    let report = if json {
        compiled.report.to_json()
    } else {
        compiled.report.to_key_value()
    };
    write(&program_path, &compiled.program.to_text())?;
    write(&report_path, &report)?;
    write!(out, "{report}")?;
    if !report.ends_with('\n') {
        writeln!(out)?;
    }
    Ok(EXIT_PASS)
}

fn cmd_run(
    out: &mut dyn Write,
    program: &Path,
    bits: &str,
    seed: u64,
    trace: bool,
    json: bool,
) -> Result<i32> {
    let p =
        StepProgram::parse(&read(program)?).with_context(|| format!("{}", program.display()))?;
    let bits = parse_bits(bits)?;
    let opts = RunOptions {
        record_terminals: false,
        trace,
        ..RunOptions::default()
    };
    let run = p.execute(&bits, Schedule::seeded(seed), &opts)?;
    if json {
        let v = json!({
            "output": run.decoded.as_ref().map(|b| bits_to_string(b)).ok(),
            "error": run.decoded.as_ref().err().map(|e| e.to_string()),
            "peak_volume": run.peak_volume,
            "steps": run.step_count,
            "applications": run.applications,
            "final": run.final_config.display(p.alphabet()).to_string(),
            "trace": run.trace.iter().map(|e| p.trace_line(e)).collect::<Vec<_>>(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        write!(out, "{}", run.render(&p))?;
    }
    Ok(if run.decoded.is_ok() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    out: &mut dyn Write,
    circuits: &[PathBuf],
    backend: Backend,
    inputs: InputMode,
    seeds: Seeds,
    exhaustive: bool,
    volume_cap: u64,
    all_cap: usize,
    program: Option<PathBuf>,
    json: bool,
) -> Result<i32> {
    let files = circuit_files(circuits)?;
    if files.is_empty() {
        bail!("no circuits found");
    }
    if program.is_some() && files.len() != 1 {
        bail!("--program needs exactly one circuit");
    }
    let cfg = VerifyConfig {
        inputs,
        all_cap,
        seeds: seeds.0,
        exhaustive: exhaustive.then_some(volume_cap),
        ..VerifyConfig::default()
    };
    let mut summaries: Vec<VerifySummary> = Vec::new();
    for f in &files {
        let c = load_circuit(f)?;
        let p = match &program {
            Some(path) => {
                StepProgram::parse(&read(path)?).with_context(|| format!("{}", path.display()))?
            }
            None => compile(&c, backend)?.program,
        };
        summaries.push(verify_program(&c, &p, &cfg)?);
    }
    let ok = summaries.iter().all(VerifySummary::ok);
    if json {
        let v = json!({ "pass": ok, "circuits": summaries });
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        for s in &summaries {
            write!(out, "{}", s.to_text())?;
        }
        writeln!(out, "{}", if ok { "PASS" } else { "FAIL" })?;
    }
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_lowerbound(
    out: &mut dyn Write,
    min_d: usize,
    max_d: usize,
    completion: &str,
    json: bool,
) -> Result<i32> {
    if min_d == 0 || min_d > max_d {
        bail!("need 1 <= min-d <= max-d");
    }
    let spec = SFunctionSpec::parse_completion(completion)?;
    let rows = (min_d..=max_d)
        .map(|d| verify_fib_growth(d, &spec))
        .collect::<Result<Vec<_>, _>>()?;
    let ok = rows.iter().all(|r| r.pass);
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?;
    } else {
        writeln!(
            out,
            "{:>3} {:>8} {:>16} {:>20} result",
            "D", "a_D", "demand", "static_volume"
        )?;
        for r in &rows {
            writeln!(
                out,
                "{:>3} {:>8} {:>16} {:>20} {}",
                r.d,
                r.a_d,
                r.demand,
                r.static_volume,
                if r.pass { "pass" } else { "FAIL" }
            )?;
        }
    }
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_gen_corpus(out: &mut dyn Write, dir: &Path, spec: CorpusSpec, json: bool) -> Result<i32> {
    let circuits = generate(&spec)?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for c in &circuits {
        let (ext, text) = if json {
            ("json", c.to_json())
        } else {
            ("net", c.to_netlist())
        };
        let path = dir.join(format!("{}.{ext}", c.name()));
        write(&path, &text)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(EXIT_PASS)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Compile {
            circuit,
            backend,
            out: program,
            report,
            json,
        } => cmd_compile(out, &circuit, backend, program, report, json),
        Command::Run {
            program,
            bits,
            seed,
            trace,
            json,
        } => cmd_run(out, &program, &bits, seed, trace, json),
        Command::Verify {
            circuits,
            backend,
            inputs,
            seeds,
            exhaustive,
            volume_cap,
            all_cap,
            program,
            json,
        } => cmd_verify(
            out, &circuits, backend, inputs, seeds, exhaustive, volume_cap, all_cap, program, json,
        ),
        Command::Lowerbound {
            max_d,
            min_d,
            completion,
            json,
        } => cmd_lowerbound(out, min_d, max_d, &completion, json),
        Command::GenCorpus {
            out: dir,
            count,
            seed,
            depth,
            gates,
            inputs,
            fan_in,
            fan_out,
            maj,
            json,
        } => {
            let spec = CorpusSpec {
                depth,
                gates,
                inputs,
                fan_in,
                fan_out,
                maj_fraction: maj,
                seed,
                count,
            };
            cmd_gen_corpus(out, &dir, spec, json)
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
