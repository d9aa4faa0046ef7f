use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use portfolio_core::workspace::{render_report_table, CompareKind, SortKey, Workspace};
use portfolio_core::Error;

/// Journal-portfolio overlays, diversity scores and unit similarity matrices.
#[derive(Debug, Parser)]
#[command(name = "portfolio", version)]
struct Cli {
    /// Workspace directory holding the ledgers and generated files.
    #[arg(long, global = true, env = "PORTFOLIO_WORKSPACE", value_name = "DIR")]
    workspace: Option<PathBuf>,

    /// Base map TSV (default: <workspace>/basemap.tsv).
    #[arg(long, global = true, value_name = "FILE")]
    basemap: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Profile one unit from a source-title export.
    Analyze {
        /// Tab-delimited "Analyze Results" export.
        export: Option<PathBuf>,
        /// Unit label (default: export file stem, uppercased).
        #[arg(long)]
        label: Option<String>,
        /// Warn when fewer than this share of records match the base map.
        #[arg(long, default_value_t = 0.5, value_name = "R")]
        min_coverage: f64,
        /// Prompt for the export file and label.
        #[arg(long)]
        interactive: bool,
    },
    /// Compare all analyzed units (writes cosine.net and/or coocc.dat).
    Compare {
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
    },
    /// Rank analyzed units by diversity.
    Report {
        #[arg(long, value_enum, default_value_t = SortArg::D2s)]
        sort: SortArg,
        /// Show only the first K rows.
        #[arg(long, value_name = "K")]
        top: Option<usize>,
    },
    /// Delete both ledgers and every generated file.
    Reset {
        /// Do not ask for confirmation.
        #[arg(long)]
        yes: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Cosine,
    Cooccurrence,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SortArg {
    D2s,
    Delta,
    N,
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CONFLICT: u8 = 3;

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidLabel { .. } => EXIT_USAGE,
        Error::Locked(_) | Error::DimensionMismatch(_) => EXIT_CONFLICT,
        _ => EXIT_DATA,
    }
}

fn default_label(export: &Path) -> Option<String> {
    export
        .file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_uppercase)
        .filter(|s| !s.is_empty())
}

fn prompt(question: &str) -> io::Result<String> {
    let mut stdout = io::stdout();
    write!(stdout, "{question}")?;
    stdout.flush()?;
    let mut line = String::new();
    io::stdin().lock().read_line(&mut line)?;
    Ok(line.trim().to_owned())
}

fn analyze(
    ws: &Workspace,
    export: Option<PathBuf>,
    label: Option<String>,
    min_coverage: f64,
    interactive: bool,
) -> Result<(), Failure> {
    let export = match export {
        Some(p) => p,
        None if interactive => PathBuf::from(prompt("Export file name: ")?),
        None => return Err(Failure::Usage("missing <EXPORT> (or pass --interactive)".into())),
    };
    let label = match label {
        Some(l) => l,
        None => {
            let fallback = default_label(&export);
            let answer = if interactive {
                prompt(&format!("Unit label [{}]: ", fallback.as_deref().unwrap_or("")))?
            } else {
                String::new()
            };
            match (answer.is_empty(), fallback) {
                (false, _) => answer,
                (true, Some(f)) => f,
                (true, None) => return Err(Failure::Usage("cannot derive a label; pass --label".into())),
            }
        }
    };

    let outcome = ws.analyze(&export, &label, min_coverage)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let d = &outcome.distribution;
    if !d.unmatched.is_empty() {
        eprintln!(
            "note: {} source titles ({} records) are not on the base map",
            d.unmatched.len(),
            d.unmatched_records()
        );
    }
    let r = &outcome.report;
    println!("unit          {}", r.unit_label);
    println!("Rao-Stirling  {:.6}", r.delta);
    println!("2D^S          {:.6}", r.true_diversity);
    println!(
        "coverage      {:.4} ({} of {} records, {} journals)",
        r.coverage, r.matched_records, r.total_records, r.n_journals
    );
    println!("overlay       {}", outcome.overlay_path.display());
    Ok(())
}

fn reset(ws: &Workspace, yes: bool) -> Result<(), Failure> {
    if !yes {
        if !io::stdin().is_terminal() {
            return Err(Failure::Usage("refusing to reset without --yes".into()));
        }
        let answer = prompt(&format!("Delete ledgers and generated files in {}? [y/N] ", ws.root.display()))?;
        if !matches!(answer.as_str(), "y" | "Y" | "yes") {
            println!("nothing removed");
            return Ok(());
        }
    }
    let removed = ws.reset()?;
    for path in &removed {
        println!("removed {}", path.display());
    }
    if removed.is_empty() {
        println!("workspace already clean");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let root = match cli.workspace {
        Some(dir) => dir,
        None => std::env::current_dir()?,
    };
    let ws = Workspace::new(root, cli.basemap);

    match cli.command {
        Command::Analyze {
            export,
            label,
            min_coverage,
            interactive,
        } => analyze(&ws, export, label, min_coverage, interactive),
        Command::Compare { kind } => {
            let kind = match kind {
                KindArg::Cosine => CompareKind::Cosine,
                KindArg::Cooccurrence => CompareKind::Cooccurrence,
                KindArg::Both => CompareKind::Both,
            };
            for path in ws.compare(kind)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report { sort, top } => {
            let key = match sort {
                SortArg::D2s => SortKey::TrueDiversity,
                SortArg::Delta => SortKey::Delta,
                SortArg::N => SortKey::N,
            };
            print!("{}", render_report_table(&ws.report(key, top)?));
            Ok(())
        }
        Command::Reset { yes } => reset(&ws, yes),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .format_target(false)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
