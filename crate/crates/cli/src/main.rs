//! `trimer` command-line front end.
//!
//! Exit codes: 0 success, 1 other runtime failure, 2 usage or invalid
//! input, 3 eigensolver non-convergence, 4 mesh beyond the supported size.
//! `TRIMER_THREADS` sets the number of worker threads.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

use commands::{CliError, Format};
use config::{ConfigFile, Settings, UsageError};

type Runner = fn(&Settings, Format) -> Result<String, CliError>;

fn opt(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("VALUE").help(help).allow_hyphen_values(true)
}

fn physics() -> Vec<Arg> {
    vec![opt("omega", "oscillator frequency ω"), opt("R", "rest length"), opt("mass", "particle mass")]
}

fn mesh() -> Vec<Arg> {
    vec![
        opt("M", "mesh points per axis"),
        opt("h", "mesh scale, or 'auto'"),
        opt("stretch", "factor on the heuristic scale when h = auto"),
        opt("tol", "relative residual tolerance of the eigensolver"),
    ]
}

fn levels() -> Vec<Arg> {
    vec![opt("states", "number of lowest states"), opt("cluster-tol", "relative gap that separates sub-levels")]
}

fn rest_grid() -> Vec<Arg> {
    vec![opt("R-values", "rest lengths, comma separated"), opt("R-range", "rest lengths as lo:hi:step")]
}

fn subcommands() -> Vec<(Command, Runner)> {
    vec![
        (
            Command::new("exact")
                .about("Closed-form R = 0 level, degeneracy and label enumeration")
                .args([opt("N", "level number"), opt("omega", "oscillator frequency ω")]),
            commands::exact as Runner,
        ),
        (
            Command::new("spectrum")
                .about("Lowest states at one rest length, labeled (N, n)")
                .args(physics())
                .args(mesh())
                .args(levels())
                .args([
                    opt("nu", "pair couplings ν12,ν13,ν23 (generalized potential)"),
                    opt("rest", "pair rest lengths R12,R13,R23 (generalized potential)"),
                    opt("max-iterations", "eigensolver iteration budget"),
                ]),
            commands::spectrum,
        ),
        (
            Command::new("scan")
                .about("Labeled spectra over a grid of rest lengths")
                .args([opt("omega", "oscillator frequency ω"), opt("mass", "particle mass")])
                .args(rest_grid())
                .args(mesh())
                .args(levels()),
            commands::scan,
        ),
        (
            Command::new("minimize")
                .about("Rest length minimizing the ground-state energy (unit mass)")
                .args([
                    opt("omega", "oscillator frequency ω"),
                    Arg::new("bracket")
                        .long("bracket")
                        .num_args(2)
                        .value_names(["LO", "HI"])
                        .allow_hyphen_values(true)
                        .help("search interval"),
                    opt("tol-R", "tolerance on the rest length"),
                ])
                .args(mesh()),
            commands::minimize,
        ),
        (
            Command::new("variational")
                .about("Optimized Gaussian trial function against the mesh ground state (unit mass)")
                .args([opt("omega", "oscillator frequency ω"), opt("R", "single rest length")])
                .args(rest_grid())
                .args(mesh())
                .arg(opt("mesh-M", "mesh points per axis for the reference ground state")),
            commands::variational,
        ),
        (
            Command::new("pt")
                .about("First-order perturbative ground state against the mesh (unit mass)")
                .args([opt("omega", "oscillator frequency ω"), opt("R", "single rest length")])
                .args(rest_grid())
                .args(mesh()),
            commands::pt,
        ),
        (
            Command::new("convergence").about("Energies over mesh sizes and scales").args(physics()).args([
                opt("sizes", "mesh points per axis, comma separated"),
                opt("h-values", "fixed scales, comma separated (default: auto)"),
                opt("states", "number of lowest states"),
                opt("tol", "relative residual tolerance of the eigensolver"),
            ]),
            commands::convergence,
        ),
        (
            Command::new("quadrature-dump")
                .about("Gauss-Laguerre nodes and weights; optionally a binary operator dump")
                .args(physics())
                .args(mesh())
                .arg(opt("operator", "write the assembled operator to this file")),
            commands::quadrature_dump,
        ),
        (
            Command::new("table3")
                .about("Sub-level energies as an (N, n) by rest-length grid")
                .arg(opt("omega", "oscillator frequency ω"))
                .args(rest_grid())
                .args(mesh())
                .args(levels()),
            commands::table3,
        ),
    ]
}

const COMMON: [&str; 3] = ["config", "output", "format"];

fn cli(subs: &[(Command, Runner)]) -> Command {
    let common = [
        Arg::new("config").long("config").value_name("FILE").help("key = value settings file").global(true),
        Arg::new("output")
            .long("output")
            .short('o')
            .value_name("FILE")
            .help("write here instead of stdout")
            .global(true),
        Arg::new("format").long("format").value_name("csv|json").help("output format (default csv)").global(true),
    ];
    Command::new("trimer")
        .version(env!("CARGO_PKG_VERSION"))
        .about("S-states of three particles bound by harmonic springs with a rest length")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .args(common)
        .subcommands(subs.iter().map(|(c, _)| c.clone()))
}

fn keys(cmd: &Command) -> Vec<&str> {
    cmd.get_arguments().map(|a| a.get_id().as_str()).filter(|id| !COMMON.contains(id)).collect()
}

/// Flags given on the command line, as `(key, value)`.
fn given_flags(cmd: &Command, m: &ArgMatches) -> Vec<(String, String)> {
    keys(cmd)
        .into_iter()
        .filter(|k| m.value_source(k) == Some(clap::parser::ValueSource::CommandLine))
        .filter_map(|k| {
            let values: Vec<&String> = m.get_many::<String>(k)?.collect();
            Some((k.to_string(), values.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ")))
        })
        .collect()
}

fn configure_threads() -> Result<(), UsageError> {
    let Ok(v) = std::env::var("TRIMER_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("invalid value for TRIMER_THREADS: '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(format!("cannot configure {n} threads: {e}")))
}

fn run() -> Result<(), CliError> {
    let subs = subcommands();
    let matches = match cli(&subs).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 2 } else { 0 };
            std::process::exit(code);
        }
    };
    configure_threads()?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let (cmd, runner) = subs.iter().find(|(c, _)| c.get_name() == name).expect("known subcommand");

    let mut known: Vec<&str> = subs.iter().flat_map(|(c, _)| keys(c)).collect();
    known.sort_unstable();
    known.dedup();
    let file = sub.get_one::<String>("config").map(|p| ConfigFile::load(&PathBuf::from(p))).transpose()?;
    let settings = Settings::merge(file.as_ref(), name, &keys(cmd), &known, given_flags(cmd, sub))?;
    let format = Format::parse(sub.get_one::<String>("format").map(String::as_str))?;

    let out = runner(&settings, format)?;
    match sub.get_one::<String>("output") {
        Some(path) => std::fs::write(path, out)?,
        None => std::io::stdout().lock().write_all(out.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
