//! `fiv`: functional intrinsic volumes from the command line.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, RunConfig};
use run::Failure;

#[derive(Parser)]
#[command(name = "fiv", version, about = "Functional intrinsic volumes of convex functions")]
struct Cli {
    /// JSON file with the run configuration (instead of a subcommand).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    i: Option<usize>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Principal-value FIV, written as CSV.
    Fiv {
        #[command(flatten)]
        common: Common,
        /// radial:square|quartic|cone|ut:t,delta, quadratic:d1,..,dn or grid:path
        #[arg(long)]
        f: String,
        /// triangle:R, power:p,R, log:R, zero:R or csv:path,R
        #[arg(long)]
        zeta: String,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Template curve t -> mu(u_t) on the default radius grid.
    Template {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        zeta: String,
        #[arg(long)]
        intervals: Option<usize>,
    },
    /// Recover a density from a template curve CSV.
    Invert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Support bound R of the density.
        #[arg(long)]
        support: f64,
    },
    /// Exact check of the invariant-form identities.
    CheckForms {
        #[command(flatten)]
        common: Common,
    },
    /// Run property suites and write their reports.
    Verify {
        #[command(flatten)]
        common: Common,
        /// valuation, invariance, continuity or all
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        zeta: Option<String>,
        /// Replace every case tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Norm and membership diagnostics of a density.
    Norm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        zeta: String,
    },
    /// Discrete Legendre transform of a lattice function.
    Legendre {
        #[command(flatten)]
        common: Common,
        /// Lattice function CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Function spec sampled on the primal lattice instead of --input.
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        dual_half_width: Option<f64>,
        #[arg(long)]
        dual_h: Option<f64>,
    },
}

fn base(command: Command, c: Common) -> RunConfig {
    RunConfig {
        command: Some(command),
        n: c.n,
        i: c.i,
        out: c.out,
        ..Default::default()
    }
}

fn to_config(cmd: Cmd) -> RunConfig {
    match cmd {
        Cmd::Fiv {
            common,
            f,
            zeta,
            eps0,
            ratio,
            count,
        } => RunConfig {
            f: Some(f),
            zeta: Some(zeta),
            eps0,
            ratio,
            count,
            ..base(Command::Fiv, common)
        },
        Cmd::Template {
            common,
            zeta,
            intervals,
        } => RunConfig {
            zeta: Some(zeta),
            intervals,
            ..base(Command::Template, common)
        },
        Cmd::Invert {
            common,
            input,
            support,
        } => RunConfig {
            input: Some(input),
            support: Some(support),
            ..base(Command::Invert, common)
        },
        Cmd::CheckForms { common } => base(Command::CheckForms, common),
        Cmd::Verify {
            common,
            suite,
            zeta,
            tolerance,
        } => RunConfig {
            suite,
            zeta,
            tolerance,
            ..base(Command::Verify, common)
        },
        Cmd::Norm { common, zeta } => RunConfig {
            zeta: Some(zeta),
            ..base(Command::Norm, common)
        },
        Cmd::Legendre {
            common,
            input,
            f,
            half_width,
            h,
            dual_half_width,
            dual_h,
        } => RunConfig {
            input,
            f,
            half_width,
            h,
            dual_half_width,
            dual_h,
            ..base(Command::Legendre, common)
        },
    }
}

fn load(cli: Cli) -> Result<RunConfig, Failure> {
    match (cli.config, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(Failure::config)
        }
        (None, Some(cmd)) => Ok(to_config(cmd)),
        (Some(_), Some(_)) => Err(Failure::config("give either --config or a subcommand, not both")),
        (None, None) => Err(Failure::config("no command given (try --help)")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("ERROR: usage: {}", text.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match load(cli).and_then(|c| run::run(&c)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ERROR: {}: {}", f.code, f.message);
            ExitCode::from(f.exit)
        }
    }
}
