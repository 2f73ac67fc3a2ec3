mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use lmgec::eval::SweepError;
use lmgec::scorer::OpenError;
use lmgec::search::CorpusAborted;
use lmgec::ScoreError;

use cli::{Cli, Command};
use commands::{check_writable_dir, CorrectPaths, TrainOptions};
use config::RunConfig;

const EXIT_INPUT: u8 = 2;
const EXIT_SCORER: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lmgec: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Scorer and backend failures exit with 3, everything else with 2.
fn exit_code(err: &anyhow::Error) -> u8 {
    let backend = err.chain().any(|cause| {
        cause.is::<OpenError>()
            || cause.is::<ScoreError>()
            || cause.is::<CorpusAborted>()
            || matches!(
                cause.downcast_ref::<SweepError>(),
                Some(SweepError::Aborted { .. })
            )
    });
    if backend {
        EXIT_SCORER
    } else {
        EXIT_INPUT
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    cli.command.apply(&mut config);
    config.validate()?;
    if cli.config_dump {
        return commands::write_config_dump(&config);
    }

    match &cli.command {
        Command::BuildVocab {
            corpus,
            min_count,
            out,
        } => {
            check_writable_dir(out.as_deref())?;
            commands::build_vocab(corpus, *min_count, out.as_deref())
        }
        Command::TrainLm {
            corpus,
            out,
            order,
            min_count,
            discount,
            mle,
            dump,
        } => {
            check_writable_dir(Some(out))?;
            check_writable_dir(dump.as_deref())?;
            let opts = TrainOptions {
                order: *order,
                min_count: *min_count,
                discount: *discount,
                mle: *mle,
            };
            commands::train_lm(corpus, out, &opts, dump.as_deref())
        }
        Command::Correct {
            input,
            format,
            output,
            edit_log,
            ..
        } => {
            check_writable_dir(output.as_deref())?;
            check_writable_dir(edit_log.as_deref())?;
            let paths = CorrectPaths {
                input,
                format: *format,
                output: output.as_deref(),
                edit_log: edit_log.as_deref(),
            };
            commands::correct(&config, &paths)
        }
        Command::Evaluate {
            hyp,
            gold,
            per_sentence,
            ..
        } => {
            check_writable_dir(per_sentence.as_deref())?;
            commands::evaluate(&config, hyp, gold, per_sentence.as_deref())
        }
        Command::SweepTau { dev, .. } => commands::sweep(&config, dev),
        Command::Score { input, .. } => commands::score(&config, input),
        Command::ServeNgram { model, tcp } => commands::serve_ngram(model, tcp.as_deref()),
    }
}
