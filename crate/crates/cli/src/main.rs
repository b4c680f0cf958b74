use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use kop_cli::app::Command;
use kop_cli::{run, Cli, ExitStatus, Output};

fn write_files(cli: &Cli, out: &Output) -> anyhow::Result<()> {
    if let (Some(path), Some(report)) = (&cli.report, &out.report) {
        let text = serde_json::to_string_pretty(report)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("writing report {}", path.display()))?;
    }
    if let Command::Scenario(args) = &cli.command {
        if let (Some(path), Some(doc)) = (&args.out, &out.document) {
            std::fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => exit(ExitStatus::InputError),
            };
        }
    };
    let out = match run(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(e.status());
        }
    };
    eprint!("{}", out.stderr);
    print!("{}", out.stdout);
    let _ = std::io::stdout().flush();
    if let Err(e) = write_files(&cli, &out) {
        eprintln!("error: {e:#}");
        return exit(ExitStatus::InputError);
    }
    exit(out.exit_status())
}
