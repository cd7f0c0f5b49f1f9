//! `part`: generate toy experiments, run subset chains, aggregate subset
//! draws and score the result.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| {
                    c.downcast_ref::<part_core::Error>()
                        .map(part_core::Error::kind)
                        .or_else(|| c.downcast_ref::<std::io::Error>().map(|_| "Io"))
                })
                .unwrap_or("Cli");
            let msg: Vec<String> = e.chain().map(ToString::to_string).collect();
            eprintln!("error kind={kind}: {}", msg.join(": ").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
