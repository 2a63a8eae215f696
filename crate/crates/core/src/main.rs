use clap::{Parser, Subcommand};
use hmmrd::app::run;
use hmmrd::config::{parse_config, parse_override, Command};
use std::path::PathBuf;
use std::process::ExitCode;

/// HMM gradient scheme solver for two-species reaction-diffusion systems.
#[derive(Parser)]
#[command(name = "hmmrd", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Mesh file instead of the structured generator.
    #[arg(long, global = true)]
    mesh_file: Option<PathBuf>,

    /// Structured mesh level n (2n^2 triangles).
    #[arg(long, global = true)]
    level: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the manufactured Brusselator problem on one mesh.
    Solve,
    /// Run the mesh-refinement study and write error tables.
    Convergence,
    /// Evaluate coercivity, consistency and limit-conformity measures.
    Diagnose,
    /// Print mesh statistics and geometric checks.
    MeshInfo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Convergence => Command::Convergence,
        Cmd::Diagnose => Command::Diagnose,
        Cmd::MeshInfo => Command::MeshInfo,
    };
    match execute(command, &cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command, cli: &Cli) -> hmmrd::Result<()> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    if let Some(o) = &cli.out {
        overrides.push(("out".to_string(), o.display().to_string()));
    }
    if let Some(m) = &cli.mesh_file {
        overrides.push(("mesh_file".to_string(), m.display().to_string()));
    }
    if let Some(n) = cli.level {
        overrides.push(("level".to_string(), n.to_string()));
    }
    for s in &cli.set {
        overrides.push(parse_override(s)?);
    }
    let cfg = parse_config(command, &text, &overrides)?;
    let outcome = run(&cfg)?;
    print!("{}", outcome.summary);
    println!("wrote {} files to {}", outcome.files.len(), cfg.out.display());
    Ok(())
}
