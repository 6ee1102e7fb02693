use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lftj_ivm::cli::{exit_code, Workspace};
use lftj_ivm::Error;

/// Leapfrog triejoin rules with incremental maintenance.
///
/// Each invocation owns one workspace; use `script` to run a session.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run commands from a file, one per line (`-` reads stdin).
    Script { file: String },
    /// Load a relation (`A/2`) or function (`F[2]`) from a tuple file.
    Load { target: String, file: String },
    /// Parse and plan a rule.
    Rule { text: Vec<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ws = Workspace::new();
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let result = match cli.cmd {
        Cmd::Script { file } if file == "-" => {
            let mut text = String::new();
            match std::io::stdin().read_to_string(&mut text) {
                Ok(_) => ws.run_script_to(&text, &mut out, &mut err).map(|_| String::new()),
                Err(e) => Err(Error::Io(e.to_string())),
            }
        }
        Cmd::Script { file } => ws.run_file_to(Path::new(&file), &mut out, &mut err).map(|_| String::new()),
        Cmd::Load { target, file } => ws.execute(&format!("load {target} {file}")),
        Cmd::Rule { text } => ws.execute(&format!("rule {}", text.join(" "))),
    };
    for w in ws.take_warnings() {
        eprintln!("warning: {w}");
    }
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
