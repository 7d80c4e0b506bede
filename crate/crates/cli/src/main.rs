use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hqc_core::circuit::{pad_with_identities, parse_circuit, Circuit};
use hqc_core::compiler::{compile, Backend, Compilation};
use hqc_core::dynamics::{estimate_mixing_scaling, run_protocol, ProtocolConfig, TimeSpec};
use hqc_core::subspace::verify;
use hqc_core::Error;

#[derive(Parser)]
#[command(name = "hqc", version, about = "Circuits to 2-local clock Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower a circuit and write the term list with its clock map.
    Compile(CompileArgs),
    /// Check closure of the computational subspace and its walk graph.
    Verify(VerifyArgs),
    /// Run the padded protocol and report the success probability.
    Simulate(SimulateArgs),
    /// Fit the mixing-time exponent of the path and comb walks.
    Mixing(MixingArgs),
    /// Print locality and per-site degree statistics.
    Audit(AuditArgs),
}

#[derive(Args)]
struct Source {
    #[arg(long, default_value = "f4")]
    backend: Backend,
    #[arg(long)]
    circuit: PathBuf,
    /// Identity padding factor applied before lowering.
    #[arg(long, default_value_t = 1)]
    padding: usize,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    src: Source,
    /// Precompiled term file checked against the circuit's basis.
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value = "f4")]
    backend: Backend,
    #[arg(long, required_unless_present = "terms")]
    circuit: Option<PathBuf>,
    #[arg(long, conflicts_with = "circuit")]
    terms: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    padding: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "f4")]
    backend: Backend,
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value_t = 6)]
    padding: usize,
    /// Total time, or `auto` for 4 N^2.
    #[arg(long, default_value = "auto")]
    time: TimeSpec,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Evolve the full register instead of the restricted walk.
    #[arg(long)]
    fullspace: bool,
}

#[derive(Args)]
struct MixingArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Closure or restriction check failed.
#[derive(Debug)]
struct VerificationFailed;

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<VerificationFailed>() {
        return 3;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::ResourceGuard(_)) => 4,
        Some(Error::BasisMismatch(_)) => 3,
        Some(
            Error::Parse { .. }
            | Error::InvalidCircuit(_)
            | Error::Validation { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidTerm(_)
            | Error::RegisterMismatch(_)
            | Error::StepSize { .. }
            | Error::InvalidArgument(_),
        ) => 2,
        _ => 1,
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `out` when given, otherwise to stdout.
fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write(p, text),
        None => writeln!(std::io::stdout(), "{text}").context("writing stdout"),
    }
}

fn load_circuit(path: &Path, padding: usize) -> anyhow::Result<Circuit> {
    let c = parse_circuit(&read(path)?)?;
    Ok(if padding > 1 { pad_with_identities(&c, padding)? } else { c })
}

fn audit_line(comp: &Compilation) -> String {
    let a = comp.hamiltonian.audit();
    format!(
        "{}: site_count {} term_count {} max_arity {} max_degree {} qubit_equivalents {:.1}",
        comp.backend, a.site_count, a.term_count, a.max_arity, a.max_degree, a.qubit_equivalents
    )
}

fn cmd_compile(a: &CompileArgs) -> anyhow::Result<()> {
    let c = load_circuit(&a.src.circuit, a.src.padding)?;
    let comp = compile(&c, a.src.backend)?;
    emit(a.out.as_deref(), &comp.to_json()?)?;
    if a.out.is_some() {
        println!("{}", audit_line(&comp));
    } else {
        eprintln!("{}", audit_line(&comp));
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> anyhow::Result<()> {
    let c = load_circuit(&a.src.circuit, a.src.padding)?;
    let comp = match &a.terms {
        Some(p) => {
            let comp = Compilation::from_json(&read(p)?)?;
            if comp.backend != a.src.backend {
                bail!(Error::InvalidArgument(format!(
                    "term file was compiled for {}, not {}",
                    comp.backend, a.src.backend
                )));
            }
            comp
        }
        None => compile(&c, a.src.backend)?,
    };
    let rep = verify(&c, &comp, &comp.hamiltonian)?;
    println!(
        "{}: residual {:.3e} basis_size {} restriction_match {} max_entry_error {:.3e}",
        rep.backend, rep.residual, rep.basis_size, rep.restriction_match, rep.max_entry_error
    );
    if let Some(p) = &a.out {
        write(p, &serde_json::to_string_pretty(&rep)?)?;
    }
    if !rep.passed() {
        return Err(VerificationFailed.into());
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> anyhow::Result<()> {
    let c = parse_circuit(&read(&a.circuit)?)?;
    let cfg = ProtocolConfig {
        padding: a.padding,
        time: a.time,
        samples: a.samples,
        seed: a.seed,
        dt: a.dt,
        full_space: a.fullspace,
    };
    let rep = run_protocol(&c, a.backend, &cfg)?;
    println!(
        "{} {}: T {:.1} path_vertices {} basis_size {} residual {:.2e}",
        rep.backend, rep.mode, rep.total_time, rep.path_vertices, rep.basis_size, rep.closure_residual
    );
    let fid = rep.min_fidelity.map_or("n/a".to_string(), |f| format!("{f:.12}"));
    println!(
        "p_success time_avg {:.4} sample_mean {:.4} over {} samples (seed {}), min fidelity {fid}",
        rep.p_success_time_avg,
        rep.p_success_sample_mean,
        rep.times.len(),
        rep.seed
    );
    if let Some(p) = &a.out {
        write(p, &rep.to_json()?)?;
    }
    if let Some(p) = &a.csv {
        write(p, &rep.to_csv())?;
    }
    Ok(())
}

fn cmd_mixing(a: &MixingArgs) -> anyhow::Result<()> {
    let est = estimate_mixing_scaling(&a.lengths, a.trials, a.seed)?;
    for (name, s) in [("path", &est.path), ("comb", &est.comb)] {
        let tmix: Vec<String> = s
            .t_mix
            .iter()
            .map(|t| t.map_or("-".into(), |t| format!("{t:.1}")))
            .collect();
        println!("{name}: sizes {:?} t_mix [{}]", s.sizes, tmix.join(", "));
        match &s.fit {
            Some(f) => println!(
                "{name}: exponent {:.3} stderr {:.3} intercept {:.3}",
                f.exponent, f.stderr, f.intercept
            ),
            None => println!("{name}: exponent n/a"),
        }
    }
    for f in &est.failures {
        eprintln!("warning: {f}");
    }
    if let Some(p) = &a.out {
        write(p, &est.to_json()?)?;
    }
    Ok(())
}

fn cmd_audit(a: &AuditArgs) -> anyhow::Result<()> {
    let comp = match (&a.terms, &a.circuit) {
        (Some(p), _) => Compilation::from_json(&read(p)?)?,
        (None, Some(p)) => compile(&load_circuit(p, a.padding)?, a.backend)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    eprintln!("{}", audit_line(&comp));
    emit(
        a.out.as_deref(),
        &serde_json::to_string_pretty(&comp.hamiltonian.audit())?,
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Mixing(a) => cmd_mixing(a),
        Command::Audit(a) => cmd_audit(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<Error>() {
                Some(Error::Validation { backend, violations }) => {
                    eprintln!("error: circuit not supported by backend {backend}");
                    for v in violations {
                        eprintln!("  {v}");
                    }
                }
                _ => eprintln!("error: {e:#}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
