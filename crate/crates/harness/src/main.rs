use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use fjnet_harness::{run, Algorithm, Experiment, ExperimentConfig, Summary};

/// Runs an fjnet experiment from a preset or from TOML configuration files.
#[derive(Debug, Parser)]
#[command(name = "fjnet-cli", version)]
struct Cli {
    /// Experiment to run.
    experiment: Experiment,
    /// Configuration file; repeat to run several. Without one the built-in
    /// preset of the experiment is used.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Algorithms for the toy and comparison experiments (default: all).
    #[arg(long = "algorithm", value_name = "ALG")]
    algorithms: Vec<Algorithm>,
    /// Overrides the seed of every configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. With several configurations each run writes to a
    /// subdirectory named after its file.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run several configurations concurrently.
    #[arg(long)]
    parallel: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn configurations(cli: &Cli) -> Result<Vec<(String, ExperimentConfig)>> {
    let mut runs = Vec::new();
    if cli.configs.is_empty() {
        runs.push((
            cli.experiment.name().to_owned(),
            ExperimentConfig::preset(cli.experiment),
        ));
    }
    for path in &cli.configs {
        let config = ExperimentConfig::load(path)?;
        if config.experiment != cli.experiment {
            bail!(
                "{} configures `{}`, not `{}`",
                path.display(),
                config.experiment.name(),
                cli.experiment.name()
            );
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| cli.experiment.name().to_owned());
        runs.push((label, config));
    }
    let several = runs.len() > 1;
    for (label, config) in &mut runs {
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(out) = &cli.out {
            config.output_dir = if several {
                out.join(label.as_str())
            } else {
                out.clone()
            };
        }
    }
    let mut dirs: Vec<&PathBuf> = runs.iter().map(|(_, c)| &c.output_dir).collect();
    dirs.sort();
    if dirs.windows(2).any(|w| w[0] == w[1]) {
        bail!("configurations share an output directory; pass --out or set distinct output_dir");
    }
    Ok(runs)
}

fn report(label: &str, result: &Result<Summary>) -> bool {
    match result {
        Ok(summary) => {
            let outcome = summary.outcome();
            let verdict = if outcome.ok { "ok" } else { "FAILED" };
            println!("[{label}] {verdict}: {}", outcome.message);
            outcome.ok
        }
        Err(e) => {
            eprintln!("[{label}] error: {e:#}");
            false
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let runs = match configurations(&cli) {
        Ok(runs) => runs,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        for (label, config) in &runs {
            match toml::to_string_pretty(config).context("serializing configuration") {
                Ok(text) => println!("# {label}\n{text}"),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            }
        }
        return ExitCode::SUCCESS;
    }
    let algorithms: Vec<Algorithm> = if cli.algorithms.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        cli.algorithms.clone()
    };

    let results: Vec<(String, Result<Summary>)> = if cli.parallel && runs.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = runs
                .iter()
                .map(|(label, config)| {
                    let algorithms = &algorithms;
                    (label.clone(), scope.spawn(move || run(config, algorithms)))
                })
                .collect();
            handles
                .into_iter()
                .map(|(label, h)| {
                    let r = h
                        .join()
                        .unwrap_or_else(|_| Err(anyhow::anyhow!("run panicked")));
                    (label, r)
                })
                .collect()
        })
    } else {
        runs.iter()
            .map(|(label, config)| (label.clone(), run(config, &algorithms)))
            .collect()
    };

    let mut ok = true;
    for (label, result) in &results {
        ok &= report(label, result);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
