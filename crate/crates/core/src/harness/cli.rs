//! Command-line front end. Exit codes: 0 all checks pass, 1 a check
//! failed, 2 configuration or usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::checks::{self, CheckOutput, QueryFile};
use super::config::RunConfig;
use super::pipeline::run_spinstat;
use super::plots;
use super::report::{margins_csv, render_text, verify, write_file, SpinStatReport};
use crate::error::{Error, Result};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "COVLAB_OUT";
pub const DEFAULT_OUT: &str = "covlab-out";

#[derive(Debug, Parser)]
#[command(name = "covlab", version, about = "Lattice checks for locally covariant free fields on 1+1 spacetimes")]
pub struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides $COVLAB_OUT and the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Multiplies upper-bound tolerances and divides lower bounds.
    #[arg(long, global = true)]
    pub tol_scale: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Causal future/past, domains and complements of queried regions.
    Causal {
        /// JSON file with a `regions` list.
        #[arg(long)]
        regions: Option<PathBuf>,
    },
    /// Build and certify the deformed spacetime.
    Deform,
    /// Retarded and advanced solutions with support checks and plots.
    Propagate,
    /// CCR on the truncated Fock representation.
    CcrCheck,
    /// CAR on the Jordan-Wigner representation.
    CarCheck,
    /// Category and functor laws on random morphisms.
    FunctorCheck,
    /// The full spin-statistics pipeline.
    Spinstat,
    /// Re-check and re-render the last spinstat report in the output directory.
    Report,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol_scale {
        cfg.tol_scale = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `--out`, then `$COVLAB_OUT`, then the config, then the default.
pub fn output_dir(cli_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.out.as_ref().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn emit_check(dir: &Path, name: &str, out: &CheckOutput) -> Result<bool> {
    for (file, contents) in &out.files {
        write_file(dir, file, contents)?;
    }
    write_file(dir, &format!("{name}.json"), &serde_json::to_string_pretty(&out.result)?)?;
    let r = &out.result;
    println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, name);
    if let Some(e) = &r.error {
        println!("  error: {e}");
    }
    for m in &r.margins {
        println!("  {} {} = {:.4e} ({} {:.4e})", if m.pass { "ok " } else { "BAD" }, m.name, m.value, m.comparison.symbol(), m.threshold);
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
    Ok(r.pass)
}

fn emit_report(dir: &Path, report: &SpinStatReport) -> Result<()> {
    write_file(dir, "report.json", &report.to_json())?;
    write_file(dir, "report.txt", &render_text(report))?;
    write_file(dir, "margins.csv", &margins_csv(report))?;
    write_file(dir, "margins.svg", &plots::margin_bars(report))
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Command::Report = cli.command {
        let dir = match &cli.config {
            Some(_) => output_dir(cli.out.as_deref(), &load_config(cli)?),
            None => output_dir(cli.out.as_deref(), &RunConfig::default()),
        };
        let text = std::fs::read_to_string(dir.join("report.json"))
            .map_err(|e| Error::Config(format!("no report in {}: {e}", dir.display())))?;
        let report = SpinStatReport::from_json(&text)?;
        let issues = verify(&report);
        for i in &issues {
            println!("inconsistent: {i}");
        }
        emit_report(&dir, &report)?;
        print!("{}", render_text(&report));
        return Ok(issues.is_empty() && report.confirmed());
    }
    let cfg = load_config(cli)?;
    let dir = output_dir(cli.out.as_deref(), &cfg);
    write_file(&dir, "config.json", &cfg.to_json())?;
    let pass = match &cli.command {
        Command::Causal { regions } => {
            let q = match regions {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                    Some(serde_json::from_str::<QueryFile>(&text).map_err(|e| Error::Config(e.to_string()))?)
                }
                None => None,
            };
            emit_check(&dir, "causal", &checks::causal(&cfg, q)?)?
        }
        Command::Deform => emit_check(&dir, "deform", &checks::deform(&cfg)?)?,
        Command::Propagate => emit_check(&dir, "propagate", &checks::propagate(&cfg)?)?,
        Command::CcrCheck => emit_check(&dir, "ccr-check", &checks::ccr_check(&cfg)?)?,
        Command::CarCheck => emit_check(&dir, "car-check", &checks::car_check(&cfg)?)?,
        Command::FunctorCheck => emit_check(&dir, "functor-check", &checks::functor_check(&cfg)?)?,
        Command::Spinstat => {
            let run = run_spinstat(&cfg)?;
            emit_report(&dir, &run.report)?;
            if let Some((nt, nx, u)) = &run.propagator {
                write_file(&dir, "propagator.svg", &plots::heatmap(u, *nt, *nx, "|E f1| on the deformed spacetime"))?;
            }
            if !run.regions.is_empty() {
                write_file(&dir, "regions.csv", &checks::regions_csv(&run.regions))?;
                write_file(&dir, "atlas.svg", &plots::regions(&run.regions, "deformation atlas"))?;
            }
            print!("{}", render_text(&run.report));
            run.report.confirmed()
        }
        Command::Report => unreachable!(),
    };
    Ok(pass)
}

/// Parses `argv` and runs; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e @ (Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Cfl { .. })) => {
            eprintln!("covlab: {e}");
            2
        }
        Err(e) => {
            eprintln!("covlab: {e}");
            1
        }
    }
}
