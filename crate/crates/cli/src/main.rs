use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rcmixup::data::write_csv;
use rcmixup::eval::Summary;
use rcmixup::experiment::{
    load_pool, load_reports, prepare, run_seed, summarize, tune_seed, AggregateReport, ExperimentConfig, RunReport,
};

/// Robust regression experiments with label-distance mixup.
#[derive(Debug, Parser)]
#[command(name = "rcmixup", version)]
struct Cli {
    /// Root for all outputs; replaces the config's `output_dir`.
    #[arg(long, global = true, env = "RCMIXUP_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,

    /// Run only this seed instead of the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed of an experiment and write one report per seed plus an aggregate.
    Run { config: PathBuf },
    /// Build the comparison table from the run reports under a directory.
    Report {
        dir: PathBuf,
        /// Where to write the CSV table (default: <dir>/comparison.csv).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the noisy training set and its noise record for each seed.
    InjectNoise { config: PathBuf },
    /// Grid-search the fixed bandwidth for each seed.
    Tune { config: PathBuf },
}

struct Loaded {
    config: ExperimentConfig,
    out: PathBuf,
}

impl Cli {
    fn load(&self, path: &Path) -> Result<Loaded> {
        let mut config =
            ExperimentConfig::from_file(path).with_context(|| format!("loading config {}", path.display()))?;
        if let Some(seed) = self.seed {
            config.seeds = vec![seed];
        }
        let root = self.output_root.clone().unwrap_or_else(|| config.output_dir.clone());
        let out = root.join(&config.name);
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Loaded { config, out })
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(cli: &Cli, path: &Path) -> Result<bool> {
    let Loaded { config, out } = cli.load(path)?;
    let pool = load_pool(&config)?;
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for &seed in &config.seeds {
        match run_seed(&config, &pool, seed) {
            Ok(report) => {
                write(&out.join(RunReport::file_name(seed)), &report.to_json()?)?;
                eprintln!(
                    "seed {seed}: test RMSE {:.4}, MAPE {:.4}, {} rounds",
                    report.test.rmse, report.test.mape, report.pipeline.rounds
                );
                runs.push(report);
            }
            Err(e) => {
                eprintln!("seed {seed} failed: {e}");
                failed.push((seed, e.to_string()));
            }
        }
    }
    let ok = failed.is_empty();
    if runs.is_empty() {
        bail!("every seed failed");
    }
    let aggregate = AggregateReport::from_runs(&runs, failed)?;
    write(&out.join(AggregateReport::FILE_NAME), &aggregate.to_json()?)?;
    println!(
        "{} [{} / {}]: RMSE {}, MAPE {} over {} seed(s) -> {}",
        aggregate.name,
        aggregate.dataset,
        aggregate.method,
        aggregate.rmse,
        aggregate.mape,
        aggregate.seeds.len(),
        out.display()
    );
    Ok(ok)
}

fn cmd_report(dir: &Path, csv: Option<&Path>) -> Result<bool> {
    let loaded = load_reports(dir)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let table = summarize(&loaded.reports)?;
    print!("{}", table.to_text());
    let csv_path = csv.map(Path::to_path_buf).unwrap_or_else(|| dir.join("comparison.csv"));
    write(&csv_path, &table.to_csv()?)?;
    eprintln!("wrote {}", csv_path.display());
    Ok(true)
}

fn cmd_inject_noise(cli: &Cli, path: &Path) -> Result<bool> {
    let Loaded { config, out } = cli.load(path)?;
    let pool = load_pool(&config)?;
    for &seed in &config.seeds {
        let data = prepare(&config, &pool, seed)?;
        let data_path = out.join(format!("noisy_train_seed_{seed}.csv"));
        let file = fs::File::create(&data_path).with_context(|| format!("creating {}", data_path.display()))?;
        write_csv(&data.raw_train, std::io::BufWriter::new(file))?;
        write(
            &out.join(format!("noise_record_seed_{seed}.json")),
            &data.noise.to_json()?,
        )?;
        println!(
            "seed {seed}: {} of {} labels corrupted -> {}",
            data.noise.indices.len(),
            data.train.len(),
            data_path.display()
        );
    }
    Ok(true)
}

fn cmd_tune(cli: &Cli, path: &Path) -> Result<bool> {
    let Loaded { config, out } = cli.load(path)?;
    let pool = load_pool(&config)?;
    let mut ok = true;
    let mut chosen = Vec::new();
    for &seed in &config.seeds {
        match tune_seed(&config, &pool, seed) {
            Ok(summary) => {
                println!("seed {seed} ({}):", summary.mode);
                for point in &summary.grid {
                    let mark = if point.bandwidth == summary.chosen_bandwidth {
                        "  <- chosen"
                    } else {
                        ""
                    };
                    println!("  b = {:<10} val RMSE {:.4}{mark}", point.bandwidth, point.val_rmse);
                }
                println!("  test RMSE {:.4}", summary.test.rmse);
                write(&out.join(format!("tune_seed_{seed}.json")), &summary.to_json()?)?;
                chosen.push(summary.chosen_bandwidth);
            }
            Err(e) => {
                eprintln!("seed {seed} failed: {e}");
                ok = false;
            }
        }
    }
    if !chosen.is_empty() {
        println!("chosen bandwidth over seeds: {}", Summary::of(&chosen)?);
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(&cli, config),
        Command::Report { dir, csv } => cmd_report(dir, csv.as_deref()),
        Command::InjectNoise { config } => cmd_inject_noise(&cli, config),
        Command::Tune { config } => cmd_tune(&cli, config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
