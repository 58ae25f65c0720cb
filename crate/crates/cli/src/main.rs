use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use delaminating_levin::adapt::{adaptive_integrate, mesh_dump, AdaptiveConfig};
use delaminating_levin::harness::{
    emit_report, log_spaced, run_sweep, write_mesh_csv, CatalogEntry, EntryName, ReferenceMode, ReportFormat,
};
use delaminating_levin::linsolve::{SolveConfig, SolveMethod};
use delaminating_levin::oracle::OracleConfig;

#[derive(Parser)]
#[command(
    name = "levin",
    version,
    about = "Adaptive delaminating Levin quadrature for 2D oscillatory integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one catalog entry and print the value.
    Integrate {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        method: MethodArgs,
        /// Also print the reference value and the absolute error.
        #[arg(long)]
        reference: bool,
    },
    /// Time an entry over log-spaced frequencies and write a report.
    Bench {
        #[command(flatten)]
        target: Target,
        /// `lo:hi:count`, frequencies 10^x for `count` equispaced x in [lo, hi].
        #[arg(long, default_value = "1:4:100")]
        lambda_log_range: LogRange,
        #[arg(long, default_value_t = 100)]
        repeats: usize,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip reference values, leaving `abs_error` empty.
        #[arg(long)]
        no_reference: bool,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Write the accepted mesh of one run as CSV.
    Mesh {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
    },
}

#[derive(Args)]
struct Target {
    /// Catalog entry: I1, I2, I5, I6 or I7.
    #[arg(long)]
    entry: String,
    /// Integer parameter (n for I5, m for I7).
    #[arg(long)]
    param: Option<u32>,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Subdivision tolerance.
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    beta0: f64,
    #[arg(long, default_value_t = 12)]
    k1d: usize,
    /// svd or rrqr.
    #[arg(long, default_value = "svd")]
    solver: String,
    #[arg(long)]
    nondelaminating: bool,
    #[arg(long, default_value_t = 40)]
    max_depth: usize,
    /// Walk the quad-tree on one thread.
    #[arg(long)]
    sequential: bool,
    /// Exit successfully even when a depth limit was hit.
    #[arg(long)]
    allow_partial: bool,
}

impl MethodArgs {
    fn config(&self) -> Result<AdaptiveConfig> {
        let method: SolveMethod = self.solver.parse()?;
        let cfg = AdaptiveConfig {
            k: self.k,
            eps_sub: self.eps,
            beta0: self.beta0,
            beta: self.beta,
            k1d: self.k1d,
            max_depth: self.max_depth,
            solver: SolveConfig {
                method,
                ..SolveConfig::default()
            },
            use_nondelaminating: self.nondelaminating,
            parallel: !self.sequential,
            ..AdaptiveConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug)]
struct LogRange {
    lo: f64,
    hi: f64,
    count: usize,
}

impl FromStr for LogRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(format!("expected lo:hi:count, got {s:?}"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count.trim().parse().map_err(|e| format!("{count:?}: {e}"))?;
        if count == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(format!("invalid range {s:?}"));
        }
        Ok(LogRange { lo, hi, count })
    }
}

fn entry(target: &Target) -> Result<CatalogEntry> {
    let name: EntryName = target.entry.parse()?;
    Ok(CatalogEntry::get(name))
}

fn partial_exit(partial: bool, allow: bool, what: &str) -> ExitCode {
    if partial && !allow {
        eprintln!("error: {what} hit a depth limit; the value is partial (pass --allow-partial to accept it)");
        ExitCode::from(2)
    } else {
        if partial {
            eprintln!("warning: {what} hit a depth limit; the value is partial");
        }
        ExitCode::SUCCESS
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Integrate {
            target,
            lambda,
            method,
            reference,
        } => {
            let e = entry(&target)?;
            let cfg = method.config()?;
            let f = e.integrand(lambda, target.param)?;
            let r = adaptive_integrate(&f, e.domain, &cfg)?;
            println!("value      {:.16e} {:+.16e}i", r.value.re, r.value.im);
            println!("rects      {}", r.rect_count());
            println!("rect_evals {}", r.rect_evals);
            println!("fevals     {}", r.fevals);
            println!("subints    {}", r.subints);
            if reference {
                let v = e.reference_value(lambda, target.param, &OracleConfig::default())?;
                println!("reference  {:.16e} {:+.16e}i", v.re, v.im);
                println!("abs_error  {:.3e}", (r.value - v).norm());
            }
            Ok(partial_exit(r.partial(), method.allow_partial, "integration"))
        }
        Command::Bench {
            target,
            lambda_log_range,
            repeats,
            format,
            out,
            no_reference,
            method,
        } => {
            let e = entry(&target)?;
            let format: ReportFormat = format.parse()?;
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let cfg = method.config()?;
            let lambdas = log_spaced(lambda_log_range.lo, lambda_log_range.hi, lambda_log_range.count);
            let mode = if no_reference { ReferenceMode::Skip } else { ReferenceMode::Auto };
            let report = run_sweep(&e, &lambdas, &[target.param], &cfg, repeats, mode)?;
            let mut w = output(out.as_ref())?;
            w.write_all(&emit_report(&report, format))?;
            w.flush()?;
            let partial = report.rows.iter().any(|r| r.depth_exceeded);
            Ok(partial_exit(partial, method.allow_partial, "a sweep row"))
        }
        Command::Mesh {
            target,
            lambda,
            out,
            method,
        } => {
            let e = entry(&target)?;
            let cfg = method.config()?;
            let f = e.integrand(lambda, target.param)?;
            let r = adaptive_integrate(&f, e.domain, &cfg)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_mesh_csv(&mesh_dump(&r), file)?;
            eprintln!("{} rectangles written to {}", r.rect_count(), out.display());
            Ok(partial_exit(r.partial(), method.allow_partial, "integration"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
