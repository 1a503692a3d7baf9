use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use nelson_ibc_cli::{run, write_failure, Cli, RunConfig};

fn load(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.model.build()?;
    cfg.quadrature.build()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    let outcome = load(&cli).and_then(|cfg| run(cli.command, &cfg, &cli.out, cli.seed));
    match outcome {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                let _ = write_failure(&cli.out, cli.command, None, &summary.checks);
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let _ = write_failure(&cli.out, cli.command, Some(&e), &[]);
            ExitCode::from(2)
        }
    }
}
