// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use prefixsyn::Error;

mod args;
mod commands;

use args::{Cli, Command};

/// Success.
const OK: u8 = 0;
/// Invalid input or a failed check.
const INVALID: u8 = 1;
/// The policy gave up or exhausted its retries.
const ABORT: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INVALID } else { OK });
        }
    };
    let result = match &cli.command {
        Command::Synthesize(a) => commands::synthesize_cmd(a),
        Command::Datagen(a) => commands::datagen_cmd(a),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Export(a) => commands::export_cmd(a),
        Command::Verify(a) => match commands::verify_cmd(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(INVALID),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::from(OK),
        Err(e @ Error::PolicyAbort { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(ABORT)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INVALID)
        }
    }
}
