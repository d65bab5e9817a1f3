use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use formdef::deformation::TestFamily;
use formdef_cli::commands;
use formdef_cli::Report;

#[derive(Parser)]
#[command(
    name = "formdef",
    version,
    about = "Deformations of the Lie derivative on polynomial differential forms"
)]
struct Cli {
    /// Write the JSON report here as well.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print the JSON report on stdout instead of the summary.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the representation property and the cocycle conditions.
    VerifyCocycles {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decompose the second-order defect against the obstruction cocycles.
    Mc2 {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of non-degenerate pairs to use.
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Evaluate the relations for a parameter document.
    Relations {
        #[arg(long)]
        params: PathBuf,
    },
    /// Compute the defect of a parameter document on two fields.
    Defect {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Search for a bounded primitive of an obstruction cocycle.
    Obstruction {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        shift: usize,
        #[arg(long, default_value_t = 3)]
        jet: u32,
        #[arg(long, default_value_t = 2)]
        order: u32,
    },
    /// Check the example deformations.
    Examples {
        /// One of densities (6.1), second-order (6.2), planar (6.4), uniform-extra, all.
        #[arg(long, default_value = "all")]
        which: String,
        /// Dimensions to check, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve the uniform one-parameter system.
    Uniform {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn run(command: Command) -> Result<Report, String> {
    let report = match command {
        Command::VerifyCocycles {
            n,
            max_degree,
            trials,
            seed,
        } => commands::cmd_verify_cocycles(n, max_degree, trials, seed),
        Command::Mc2 { n, seed, trials } => commands::cmd_mc2(n, seed, trials),
        Command::Relations { params } => {
            commands::cmd_relations(&read(&params)?, &params.display().to_string())
        }
        Command::Defect { params, x, y } => {
            commands::cmd_defect(&read(&params)?, &params.display().to_string(), &x, &y)
        }
        Command::Obstruction {
            n,
            k,
            shift,
            jet,
            order,
        } => commands::cmd_obstruction(n, k, shift, jet, order),
        Command::Examples {
            which,
            n,
            max_degree,
            trials,
            seed,
        } => {
            let family = TestFamily {
                max_degree,
                random_pairs: trials,
                seed,
                ..TestFamily::default()
            };
            commands::cmd_examples(&which, &n, &family)
        }
        Command::Uniform { n } => commands::cmd_uniform(n),
    };
    report.map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let json = report.to_json();
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &json) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if cli.json {
        print!("{json}");
    } else {
        print!("{}", report.human());
    }
    ExitCode::from(report.status.exit_code() as u8)
}
