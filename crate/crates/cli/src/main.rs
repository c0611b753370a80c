use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bgi_cli::{
    check_profile, embed_psych, internal_error, show_hierarchy, solve, validate, Report,
    TypeSpaceSource, EXIT_INPUT,
};
use bgi_core::equilibrium::{DeviationSpec, DEFAULT_SEARCH_CAP};
use bgi_core::psych::DEFAULT_HIERARCHY_DEPTH;
use clap::{Parser, Subcommand};

/// Equilibria of Bayesian games with intentions and of psychological games.
#[derive(Debug, Parser)]
#[command(name = "bgi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a game file and report every violated invariant.
    Validate { game: PathBuf },
    /// Check whether a profile is an equilibrium.
    Check {
        game: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// `pure` or `grid:k`.
        #[arg(long)]
        deviations: Option<DeviationSpec>,
    },
    /// Enumerate every equilibrium in the search space.
    Solve {
        game: PathBuf,
        #[arg(long)]
        deviations: Option<DeviationSpec>,
        /// Search mixtures with masses in multiples of 1/k.
        #[arg(long)]
        grid: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
        cap: u64,
    },
    /// Print the belief hierarchy of one type.
    Hierarchy {
        game: PathBuf,
        #[arg(long)]
        intentions: Option<PathBuf>,
        #[arg(long)]
        player: String,
        #[arg(long = "type")]
        ty: String,
        #[arg(long, default_value_t = DEFAULT_HIERARCHY_DEPTH)]
        depth: usize,
    },
    /// Build the game with intentions for a psychological game.
    Embed {
        game: PathBuf,
        /// A type-space file, or `default` for one state and one type each.
        #[arg(long, default_value = "default")]
        typespace: TypeSpaceSource,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
    },
}

fn dispatch(command: Command) -> Report {
    match command {
        Command::Validate { game } => validate(&game),
        Command::Check {
            game,
            profile,
            deviations,
        } => check_profile(&game, &profile, deviations),
        Command::Solve {
            game,
            deviations,
            grid,
            cap,
        } => solve(&game, deviations, grid, cap),
        Command::Hierarchy {
            game,
            intentions,
            player,
            ty,
            depth,
        } => show_hierarchy(&game, intentions.as_deref(), &player, &ty, depth),
        Command::Embed {
            game,
            typespace,
            output,
            depth,
        } => embed_psych(&game, &typespace, &output, depth),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let report = std::panic::catch_unwind(|| dispatch(cli.command))
        .unwrap_or_else(|_| internal_error("the command panicked"));
    let _ = writeln!(std::io::stdout(), "{}", report.render());
    ExitCode::from(report.exit as u8)
}
