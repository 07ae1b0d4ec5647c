mod args;
mod commands;
mod meta;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Invalid;
use meta::Run;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// `verify` found failing checks.
#[derive(Debug)]
pub struct Failure(pub usize);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for Failure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Failure>().is_some() {
        return EXIT_CHECK_FAILED;
    }
    if err.downcast_ref::<Invalid>().is_some() {
        return EXIT_VALIDATION;
    }
    // unreadable inputs count as bad input here; only solver breakdowns are internal
    match err.downcast_ref::<interplab::Error>() {
        Some(interplab::Error::Solver(_)) | None => 1,
        Some(_) => EXIT_VALIDATION,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Space(args::SpaceCmd::Build(_)) => "space build",
        Command::Space(args::SpaceCmd::Info(_)) => "space info",
        Command::Space(args::SpaceCmd::Field(_)) => "space field",
        Command::Rearrange(_) => "rearrange",
        Command::Maximal(_) => "maximal",
        Command::Whitney(_) => "whitney",
        Command::Czd(_) => "czd",
        Command::Kfun(_) => "kfun",
        Command::Verify(_) => "verify",
        Command::Report(_) => "report",
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Invalid("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut run = Run::new(command_name(&cli.command), serde_json::to_value(cli)?);
    match &cli.command {
        Command::Space(c) => commands::space(&mut run, c),
        Command::Rearrange(a) => commands::rearrange(&mut run, a),
        Command::Maximal(a) => commands::maximal(&mut run, a),
        Command::Whitney(a) => commands::whitney_cmd(&mut run, a),
        Command::Czd(a) => commands::czd(&mut run, a),
        Command::Kfun(a) => commands::kfun(&mut run, a),
        Command::Verify(a) => commands::verify(&mut run, a),
        Command::Report(a) => commands::report(&mut run, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INTERPLAB_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("interplab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&anyhow::anyhow!(Failure(2))), EXIT_CHECK_FAILED);
        assert_eq!(exit_code(&Invalid("x".into()).into()), EXIT_VALIDATION);
        assert_eq!(exit_code(&interplab::Error::OmegaIsWholeSpace.into()), EXIT_VALIDATION);
        assert_eq!(exit_code(&interplab::Error::Solver("stall".into()).into()), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
