use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use invar_cli::{run, Command, RunConfig, DEFAULT_MAX_Q};
use invar_core::groups::GroupName;
use invar_core::structure::Caps;

/// Modular invariants of 2x2 matrix groups acting on F_q[x1..x4] by M -> g M g^t.
#[derive(Parser, Debug)]
#[command(name = "invar", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Print the named invariants with their invariance verdicts
    Gens,
    /// Invariance suite for the chosen group
    Verify,
    /// Graded invariant dimensions against the closed-form series
    Hilbert,
    /// Certify the primary invariants as a homogeneous system of parameters
    Hsop,
    /// Degreewise check of the module decomposition over the primaries
    Decompose,
    /// Compute and verify the relation satisfied by the secondary
    Relation,
    /// Count reflections in the group image and predict the secondary degree
    Reflections,
    /// Look for an invariant outside the span of products of the primaries
    Search {
        #[arg(long, allow_negative_numbers = true)]
        degree: i64,
    },
    /// Run every check for one (q, group)
    Report,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args, Debug)]
struct Opts {
    /// Field order, a prime power
    #[arg(long, global = true, default_value_t = 3)]
    q: u32,
    /// Defining polynomial "c0,c1,...,1", low degree first
    #[arg(long, global = true)]
    modulus: Option<String>,
    /// u2, u2tilde, sl2, sl2tilde or gl2
    #[arg(long, global = true, default_value = "u2")]
    group: String,
    #[arg(long, global = true, allow_negative_numbers = true)]
    max_degree: Option<i64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "INVAR_THREADS")]
    threads: Option<usize>,
    /// Largest graded component, in monomials
    #[arg(long, global = true)]
    cap_monomials: Option<usize>,
    /// Largest group image enumerated
    #[arg(long, global = true)]
    cap_group: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_Q)]
    max_q: u32,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,
}

fn parse_modulus(text: &str) -> Result<Vec<u32>, String> {
    text.split(',').map(|c| c.trim().parse::<u32>().map_err(|_| format!("bad modulus coefficient {c:?}"))).collect()
}

fn config(cli: &Cli) -> Result<RunConfig, String> {
    let group: GroupName = cli.opts.group.parse().map_err(|_| format!("unknown group {:?}", cli.opts.group))?;
    let (command, degree) = match cli.command {
        Sub::Gens => (Command::Gens, None),
        Sub::Verify => (Command::Verify, None),
        Sub::Hilbert => (Command::Hilbert, None),
        Sub::Hsop => (Command::Hsop, None),
        Sub::Decompose => (Command::Decompose, None),
        Sub::Relation => (Command::Relation, None),
        Sub::Reflections => (Command::Reflections, None),
        Sub::Search { degree } => (Command::Search, Some(degree)),
        Sub::Report => (Command::Report, None),
    };
    let mut c = RunConfig::new(cli.opts.q, group, command);
    c.modulus = cli.opts.modulus.as_deref().map(parse_modulus).transpose()?;
    c.max_degree = cli.opts.max_degree;
    c.degree = degree;
    c.max_q = cli.opts.max_q;
    let defaults = Caps::default();
    c.caps = Caps {
        monomials: cli.opts.cap_monomials.unwrap_or(defaults.monomials),
        group: cli.opts.cap_group.unwrap_or(defaults.group),
        basis: defaults.basis,
    };
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.opts.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(2);
        }
    }
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let text = match cli.opts.format {
        Format::Table => report.to_table(),
        Format::Json => report.to_json() + "\n",
    };
    let written = match &cli.opts.output {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    ExitCode::from(report.exit_code())
}
