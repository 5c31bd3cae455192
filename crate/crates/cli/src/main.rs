//! Command line interface for the distillery toolkit.
//!
//! Subcommands mirror the library layers: `codes` verifies and prints inner
//! CSS codes, `outer` analyzes parity-check matrices, `protocol` reports
//! resource counts, `enumerate` tallies exact low-weight fault patterns,
//! `simulate` runs Monte Carlo sweeps and emits plot-ready CSV or JSON, and
//! `search` samples random inner codes with certified distance.
//!
//! Exit codes: 0 on success, 1 on verification failure, 2 on usage errors.

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use distillery::inner::{
    library, library_code, parse_code_file, sample_random_inner, verify_code, CssCode,
};
use distillery::outer::{from_classical_transpose, petersen_code, sensitivity, OuterCode};
use distillery::protocol::{preset, Protocol};
use distillery::simulate::{
    epsilon_of_theta, fit_power_law, run, theta_of_epsilon, SimConfig,
};
use distillery::{BitMatrix, BitVector};

#[derive(Parser)]
#[command(name = "distillery", version, about = "Magic state distillation toolkit")]
struct Cli {
    /// Cap on worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inner-code library: list, verify, show.
    #[command(subcommand)]
    Codes(CodesCmd),
    /// Outer parity-check code analysis.
    #[command(subcommand)]
    Outer(OuterCmd),
    /// Protocol resource reports.
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// Exact low-weight fault-pattern tallies.
    Enumerate(EnumerateArgs),
    /// Monte Carlo sweeps under coherent over-rotation noise.
    Simulate(SimulateArgs),
    /// Randomized searches.
    #[command(subcommand)]
    Search(SearchCmd),
}

#[derive(Subcommand)]
enum CodesCmd {
    /// List the built-in code library.
    List,
    /// Run all verification checks on a code.
    Verify { name: String },
    /// Print stabilizers, logical operators, and the magic basis class.
    Show { name: String },
}

#[derive(Subcommand)]
enum OuterCmd {
    /// Report (d̃, s)-sensitivity of an outer code file.
    Sensitivity {
        file: String,
        #[arg(long)]
        dtilde: usize,
    },
    /// Print the Petersen-graph outer code.
    Petersen,
    /// Build an outer code from the transpose construction on a classical
    /// codeword basis file.
    Transpose { file: String },
}

#[derive(Subcommand)]
enum ProtocolCmd {
    /// Resource report for a preset name or protocol file.
    Info {
        name: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    preset: String,
    #[arg(long)]
    max_weight: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    preset: String,
    /// Over-rotation half-widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    theta: Vec<f64>,
    /// Input error rates, comma separated (converted to θ).
    #[arg(long, value_delimiter = ',')]
    eps_in: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Sample random self-orthogonal inner codes and certify their distance.
    Inner {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Codes(c) => codes(c),
        Command::Outer(o) => outer(o),
        Command::Protocol(p) => protocol(p),
        Command::Enumerate(a) => enumerate(a),
        Command::Simulate(a) => simulate(a),
        Command::Search(s) => search(s),
    }
}

/// Loads a code by library name or, if the argument names a file, from disk.
fn load_code(name: &str) -> Result<CssCode> {
    if Path::new(name).is_file() {
        let text = std::fs::read_to_string(name)?;
        let stem = Path::new(name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("file");
        return Ok(parse_code_file(&text, stem)?);
    }
    Ok(library_code(name)?)
}

fn codes(cmd: CodesCmd) -> Result<ExitCode> {
    match cmd {
        CodesCmd::List => {
            for code in library()? {
                println!(
                    "{:8} [[{},{},{}]]  magic basis ({},{})",
                    code.name,
                    code.n_inner,
                    code.k_inner,
                    code.distance,
                    code.magic.p(),
                    code.magic.q(),
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        CodesCmd::Verify { name } => {
            let code = load_code(&name)?;
            let report = verify_code(&code);
            if report.passed() {
                println!(
                    "{}: all checks passed ([[{},{},{}]])",
                    code.name, code.n_inner, code.k_inner, code.distance
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for f in &report.failures {
                    println!("{}: FAIL {f}", code.name);
                }
                Ok(ExitCode::from(1))
            }
        }
        CodesCmd::Show { name } => {
            let code = load_code(&name)?;
            println!(
                "{} [[{},{},{}]]  magic basis ({},{})",
                code.name,
                code.n_inner,
                code.k_inner,
                code.distance,
                code.magic.p(),
                code.magic.q()
            );
            println!("stabilizer rows:");
            for i in 0..code.stabilizers.num_rows() {
                println!("  {}", row_string(&code.stabilizers.row(i), code.n_inner));
            }
            println!("logical operators:");
            for slot in 0..code.k_inner {
                println!("  X{slot}: {}", code.logical_x(slot));
                println!("  Z{slot}: {}", code.logical_z(slot));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn row_string(v: &BitVector, n: usize) -> String {
    let mut s = String::with_capacity(n);
    for i in 0..n {
        s.push(if v.get(i) { '1' } else { '0' });
    }
    s
}

fn outer(cmd: OuterCmd) -> Result<ExitCode> {
    match cmd {
        OuterCmd::Sensitivity { file, dtilde } => {
            let text = std::fs::read_to_string(&file)?;
            let code = OuterCode::from_file_str(&text)?;
            let report = sensitivity(&code, dtilde)?;
            println!(
                "m={} n_outer={} dtilde={} s={} min(2|Mv|+|v|)={}",
                code.num_checks(),
                code.n_outer(),
                report.d_tilde,
                report.s,
                report.min_2mv_plus_v
            );
            println!("  s witness       : {}", row_string(&report.s_witness, code.n_outer()));
            println!("  min witness     : {}", row_string(&report.min_witness, code.n_outer()));
            Ok(ExitCode::SUCCESS)
        }
        OuterCmd::Petersen => {
            print!("{}", petersen_code().to_file_string());
            Ok(ExitCode::SUCCESS)
        }
        OuterCmd::Transpose { file } => {
            let text = std::fs::read_to_string(&file)?;
            let basis = parse_matrix_file(&text)?;
            let code = from_classical_transpose(&basis)?;
            print!("{}", code.to_file_string());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Parses "m n" then m rows of 0/1 characters.
fn parse_matrix_file(text: &str) -> Result<BitMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("empty matrix file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().context("bad header"))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        bail!("header must be \"rows cols\"");
    }
    let (m, n) = (dims[0], dims[1]);
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let line = lines.next().context("missing matrix row")?;
        let bits: Vec<char> = line.split_whitespace().collect::<String>().chars().collect();
        if bits.len() != n {
            bail!("row has {} entries, expected {n}", bits.len());
        }
        let mut row = BitVector::zeros(n);
        for (i, ch) in bits.iter().enumerate() {
            match ch {
                '0' => {}
                '1' => row.set(i, true),
                _ => bail!("matrix entries must be 0 or 1"),
            }
        }
        rows.push(row);
    }
    Ok(BitMatrix::from_rows(rows))
}

#[derive(Serialize)]
struct InfoJson {
    d: usize,
    #[serde(rename = "nT")]
    n_t: u64,
    #[serde(rename = "nOuter")]
    n_outer: usize,
    ratio: serde_json::Value,
    gamma: f64,
    qubits: usize,
}

fn load_protocol(name: &str) -> Result<Protocol> {
    if Path::new(name).is_file() {
        let text = std::fs::read_to_string(name)?;
        return Ok(Protocol::from_file_str(&text)?);
    }
    Ok(preset(name)?)
}

fn protocol(cmd: ProtocolCmd) -> Result<ExitCode> {
    let ProtocolCmd::Info { name, json } = cmd;
    let p = load_protocol(&name)?;
    let r = p.resources();
    let ratio = if *r.ratio.denom() == 1 {
        serde_json::json!(*r.ratio.numer())
    } else {
        serde_json::json!(*r.ratio.numer() as f64 / *r.ratio.denom() as f64)
    };
    if json {
        let info = InfoJson {
            d: r.claimed_order,
            n_t: r.n_t,
            n_outer: r.n_outer,
            ratio,
            gamma: r.gamma,
            qubits: r.qubit_estimate,
        };
        println!("{}", serde_json::to_string(&info)?);
    } else {
        println!("protocol {}", p.name);
        println!("  order d        : {}", r.claimed_order);
        println!("  T count        : {}", r.n_t);
        println!("  outputs        : {}", r.n_outer);
        println!("  T per output   : {}", r.ratio);
        println!("  gamma          : {:.4}", r.gamma);
        println!("  peak qubits    : {}", r.qubit_estimate);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EnumerateJson {
    preset: String,
    locations: u64,
    weights: Vec<usize>,
    accepted_bad: Vec<String>,
    accepted_good: Vec<String>,
    rejected: Vec<String>,
}

fn enumerate(a: EnumerateArgs) -> Result<ExitCode> {
    let p = preset(&a.preset)?;
    let tally = distillery::enumerate::error_polynomial(&p, a.max_weight)?;
    let out = EnumerateJson {
        preset: a.preset,
        locations: tally.locations,
        weights: (0..=a.max_weight).collect(),
        accepted_bad: tally.accepted_bad.iter().map(|r| r.to_string()).collect(),
        accepted_good: tally.accepted_good.iter().map(|r| r.to_string()).collect(),
        rejected: tally.rejected.iter().map(|r| r.to_string()).collect(),
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SweepPoint {
    preset: String,
    theta: f64,
    eps_in: f64,
    attempted: u64,
    accepted: u64,
    eps_out: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct SweepJson {
    points: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitJson>,
}

#[derive(Serialize)]
struct FitJson {
    c: f64,
    d: f64,
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let p = preset(&a.preset)?;
    let mut thetas: Vec<f64> = a.theta.clone();
    for &eps in &a.eps_in {
        thetas.push(theta_of_epsilon(eps)?);
    }
    if thetas.is_empty() {
        bail!("usage: provide at least one --theta or --eps-in point");
    }
    if a.runs == 0 {
        bail!("usage: --runs must be positive");
    }

    let mut points = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let stats = run(&p, &SimConfig { theta, runs: a.runs, seed: a.seed })?;
        points.push(SweepPoint {
            preset: a.preset.clone(),
            theta,
            eps_in: epsilon_of_theta(theta),
            attempted: stats.attempted,
            accepted: stats.accepted,
            eps_out: stats.mean_infidelity,
            stderr: stats.stderr_infidelity,
        });
    }
    let fit = if points.len() >= 2 {
        let samples: Vec<(f64, f64)> =
            points.iter().map(|pt| (pt.eps_in, pt.eps_out)).collect();
        fit_power_law(&samples).ok().map(|(c, d)| FitJson { c, d })
    } else {
        None
    };

    let artifact = if a.json {
        let mut s = serde_json::to_string_pretty(&SweepJson { points, fit })?;
        s.push('\n');
        s
    } else {
        let mut s = String::from("preset,theta,eps_in,attempted,accepted,eps_out,stderr\n");
        for pt in &points {
            writeln!(
                s,
                "{},{:.12e},{:.12e},{},{},{:.12e},{:.12e}",
                pt.preset, pt.theta, pt.eps_in, pt.attempted, pt.accepted, pt.eps_out, pt.stderr
            )?;
        }
        if let Some(f) = &fit {
            writeln!(s, "# fit,eps_out = {:.6e} * eps_in^{:.4}", f.c, f.d)?;
        }
        s
    };
    match &a.out {
        Some(path) => std::fs::write(path, artifact)?,
        None => print!("{artifact}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn search(cmd: SearchCmd) -> Result<ExitCode> {
    let SearchCmd::Inner { n, c, d, trials, seed } = cmd;
    let mut best: Option<CssCode> = None;
    let mut found = 0u64;
    for t in 0..trials {
        let rows = match sample_random_inner(n, c, seed.wrapping_add(t)) {
            Ok(rows) => rows,
            Err(_) => continue,
        };
        let Ok(code) = distillery::inner::from_self_orthogonal(&rows, "sample") else {
            continue;
        };
        if code.distance < d || !verify_code(&code).passed() {
            continue;
        }
        found += 1;
        if best.as_ref().map_or(true, |b| code.k_inner > b.k_inner) {
            best = Some(code);
        }
    }
    match best {
        Some(code) => {
            println!(
                "found {found}/{trials} codes with d >= {d}; best k = {} ([[{},{},{}]])",
                code.k_inner, code.n_inner, code.k_inner, code.distance
            );
            println!("stabilizer rows:");
            for i in 0..code.stabilizers.num_rows() {
                println!("  {}", row_string(&code.stabilizers.row(i), code.n_inner));
            }
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("no code with n={n}, c={c}, d>={d} found in {trials} trials");
            Ok(ExitCode::from(1))
        }
    }
}
