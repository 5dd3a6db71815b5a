use std::path::PathBuf;

use clap::Args;

use reoptbench::mps::{self, MpsDialect};
use reoptbench::oracle::{self, EnumerableInstance};
use reoptbench::reopt::{serve_protocol, Backend, ExecBackend, OracleBackend};
use reoptbench::solfile;

use super::CliError;

#[derive(Args)]
pub struct SolveArgs {
    /// Solve a single instance and print the outcome
    #[arg(long, conflicts_with = "manifest")]
    instance: Option<PathBuf>,
    /// Serve a whole series over the harness protocol (stdout)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Backend: `oracle` (built-in enumeration) or `exec:<command...>`
    #[arg(long, default_value = "oracle")]
    backend: String,
    /// Time limit in seconds (single-instance mode)
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Write the solution here (single-instance mode)
    #[arg(long)]
    solution_out: Option<PathBuf>,
    /// Enumeration cap on the domain product
    #[arg(long, default_value_t = oracle::DEFAULT_DOMAIN_CAP)]
    domain_cap: u128,
}

fn backend_from_flag(flag: &str, domain_cap: u128) -> Result<Box<dyn Backend>, CliError> {
    if flag == "oracle" {
        return Ok(Box::new(OracleBackend { domain_cap }));
    }
    if let Some(command) = flag.strip_prefix("exec:") {
        let command: Vec<String> = command.split_whitespace().map(String::from).collect();
        if command.is_empty() {
            return Err(CliError::Usage("exec: backend command is empty".into()));
        }
        return Ok(Box::new(ExecBackend { command }));
    }
    Err(CliError::Usage(format!(
        "unknown backend {flag:?}; use oracle or exec:<command>"
    )))
}

pub fn run(args: SolveArgs) -> Result<(), CliError> {
    match (&args.instance, &args.manifest) {
        (Some(instance), None) => solve_single(&args, instance),
        (None, Some(manifest)) => {
            let backend = backend_from_flag(&args.backend, args.domain_cap)?;
            let mut stdout = std::io::stdout().lock();
            serve_protocol(manifest, backend.as_ref(), &mut stdout)
                .map_err(|e| CliError::Domain(e.to_string()))
        }
        _ => Err(CliError::Usage("pass exactly one of --instance or --manifest".into())),
    }
}

fn solve_single(args: &SolveArgs, path: &PathBuf) -> Result<(), CliError> {
    let instance = mps::parse_mps_file(path, &MpsDialect::default())?.instance;
    let enumerable = EnumerableInstance::with_cap(instance, args.domain_cap)?;
    let result = oracle::enumerate_solve(&enumerable, args.time_limit);

    println!("status: {}", result.status.wire_name());
    println!("primal_bound: {}", fmt_bound(result.outcome.primal_bound));
    println!("dual_bound: {}", fmt_bound(result.outcome.dual_bound));
    println!("time_seconds: {}", result.outcome.time_spent_seconds);
    if let (Some(out), Some(solution)) = (&args.solution_out, &result.solution) {
        solfile::write_solution(out, enumerable.instance(), solution)
            .map_err(|e| super::io_error("writing solution", e))?;
        println!("solution: {}", out.display());
    }
    Ok(())
}

fn fmt_bound(b: Option<f64>) -> String {
    match b {
        None => "none".into(),
        Some(v) if v == f64::INFINITY => "inf".into(),
        Some(v) if v == f64::NEG_INFINITY => "-inf".into(),
        Some(v) => format!("{v}"),
    }
}
