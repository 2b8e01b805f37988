//! Study driver for the unfitted spectral element method.
//!
//! Subcommands: `run` executes an h- or p-sweep from a config file and
//! prints a table plus fitted slopes (optionally writing CSV), `list-problems`
//! shows the registry, `check-geometry` reports the interface-resolution
//! check for every mesh size in the config. Exit codes: 0 success, 2
//! geometry violation, 3 solver failure, 1 anything else.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use usem::config::{parse_config, StudyConfig, Sweep};
use usem::csvio::emit_csv;
use usem::mesh::{build_mesh, check_interface_assumption, classify_elements};
use usem::problems::{Problem, ProblemKind};
use usem::study::{run_h_sweep, run_p_sweep, render_table, HarnessError};

#[derive(Parser)]
#[command(name = "usem", about = "Unfitted spectral element convergence studies", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run (or skip-with-warning) sweep points whose meshes fail the
        /// interface-resolution check instead of refusing.
        #[arg(long)]
        override_assumption: bool,
    },
    /// List the problems in the registry.
    ListProblems,
    /// Report the interface-resolution check for each mesh size without
    /// solving anything.
    CheckGeometry {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_GEOMETRY: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn load_config(path: &PathBuf) -> Result<StudyConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn exit_for(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Geometry { .. } => EXIT_GEOMETRY,
        HarnessError::Solver(_) => EXIT_SOLVER,
        _ => 1,
    }
}

fn cmd_run(config: PathBuf, override_assumption: bool) -> Result<(), (String, u8)> {
    let mut cfg = load_config(&config).map_err(|e| (e, 1))?;
    cfg.override_assumption = cfg.override_assumption || override_assumption;
    let (records, slopes, warnings) = match cfg.sweep {
        Sweep::H { .. } => {
            let r = run_h_sweep(&cfg).map_err(|e| (e.to_string(), exit_for(&e)))?;
            (r.records, Some(r.slopes), r.warnings)
        }
        Sweep::P { .. } => {
            let r = run_p_sweep(&cfg).map_err(|e| (e.to_string(), exit_for(&e)))?;
            println!(
                "p-sweep diagnostics: monotone decrease = {}, log-error convex = {}",
                r.monotone, r.convex
            );
            (r.records, None, r.warnings)
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", render_table(&records, slopes.as_ref()));
    if let Some(path) = &cfg.output {
        emit_csv(&records, path).map_err(|e| (e.to_string(), 1))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_check_geometry(config: PathBuf) -> Result<(), (String, u8)> {
    let cfg = load_config(&config).map_err(|e| (e, 1))?;
    let mut problem = Problem::new(cfg.problem);
    if let Some(domain) = cfg.domain {
        problem.domain = domain;
    }
    let n_list = match &cfg.sweep {
        Sweep::H { n_list, .. } => n_list.clone(),
        Sweep::P { n, .. } => vec![*n],
    };
    let mut violated = false;
    for n in n_list {
        let levelset = problem.levelset();
        let mesh = build_mesh(problem.domain, n).map_err(|e| (e.to_string(), 1))?;
        let mesh = classify_elements(&mesh, &levelset);
        let report = check_interface_assumption(&mesh, &levelset);
        let cut = mesh.cut_elements().count();
        if report.ok {
            println!("N={n}: ok ({cut} interface elements)");
        } else {
            violated = true;
            println!(
                "N={n}: VIOLATED on {} of {cut} interface elements: {:?}",
                report.violations.len(),
                &report.violations[..report.violations.len().min(12)]
            );
        }
    }
    if violated {
        Err(("interface assumption violated".into(), EXIT_GEOMETRY))
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, override_assumption } => cmd_run(config, override_assumption),
        Command::ListProblems => {
            for kind in ProblemKind::all() {
                let p = Problem::new(kind);
                let d = p.domain;
                println!(
                    "{:<14} domain ({}, {})x({}, {})  alpha ({}, {})  gamma_A {}  gamma_M {}  {}",
                    p.name(),
                    d.x0,
                    d.x1,
                    d.y0,
                    d.y1,
                    p.alpha[0],
                    p.alpha[1],
                    p.default_gamma.0,
                    p.default_gamma.1,
                    if p.eigen { "eigenvalue problem" } else { "source problem" },
                );
            }
            Ok(())
        }
        Command::CheckGeometry { config } => cmd_check_geometry(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
