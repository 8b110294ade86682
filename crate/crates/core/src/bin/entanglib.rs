//! Command-line front end: dataset generation, training, evaluation,
//! and table-style study reproduction.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use entanglib::harness::{
    generate_dataset, init_parallelism, reproduce, run_evaluate, run_train, write_metrics,
    write_scatter, Checkpoint, Dataset, ExperimentConfig, GenOutput, Split, Study,
};
use entanglib::{Error, Result};

#[derive(Parser)]
#[command(
    name = "entanglib",
    about = "Entanglement quantification from measurement statistics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and test dataset files from a config.
    GenDataset {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config out_dir, then cwd).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dataset size multiplier in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Train a model on a generated dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Training dataset written by gen-dataset.
        #[arg(long)]
        train_data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a test dataset.
    Evaluate {
        /// Checkpoint manifest (.json) written by train.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test_data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a full comparison study and write its report.
    Reproduce {
        /// One of table2, table3, table4, table5.
        #[arg(long)]
        study: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.out_dir.clone())).unwrap_or_else(|| PathBuf::from("."))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print_gen_report(split: Split, out: &GenOutput, path: &Path) {
    if out.bins.is_empty() {
        let mut families: Vec<(String, usize)> = Vec::new();
        for r in &out.dataset.records {
            match families.iter_mut().find(|(f, _)| *f == r.meta.family) {
                Some((_, n)) => *n += 1,
                None => families.push((r.meta.family.clone(), 1)),
            }
        }
        for (family, n) in families {
            println!("{} family {family}: {n} records", split.as_str());
        }
    } else {
        for b in &out.bins {
            println!(
                "{} bin {:>2} [{:+.2}, {:+.2})  filled {}/{}  attempts {}",
                split.as_str(),
                b.index,
                b.lo,
                b.hi,
                b.filled,
                b.requested,
                b.attempts
            );
            if b.filled < b.requested {
                println!("warning: bin {} short by {}", b.index, b.requested - b.filled);
            }
        }
    }
    println!(
        "wrote {} {} records to {}",
        out.dataset.records.len(),
        split.as_str(),
        path.display()
    );
}

fn cmd_gen_dataset(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    scale: f64,
) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let dir = out_dir(out, Some(&cfg));
    std::fs::create_dir_all(&dir)?;
    for split in [Split::Train, Split::Test] {
        let generated = generate_dataset(&cfg, split, scale)?;
        let path = dir.join(format!("{}.jsonl", split.as_str()));
        generated.dataset.write(&path)?;
        print_gen_report(split, &generated, &path);
    }
    Ok(())
}

fn cmd_train(
    config: &Path,
    train_data: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let dir = out_dir(out, Some(&cfg));
    let train_ds = Dataset::read(train_data)?;
    let (checkpoint, history) = run_train(&cfg, &train_ds)?;
    std::fs::create_dir_all(&dir)?;
    let history_text = serde_json::to_string_pretty(&history)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(dir.join("history.json"), history_text)?;
    let manifest = checkpoint.save(&dir, "checkpoint", Some("history.json"))?;
    println!(
        "trained {} epochs, best val mse {:.6}; checkpoint at {}",
        checkpoint.epochs_run,
        checkpoint.best_val_mse,
        manifest.display()
    );
    Ok(())
}

fn cmd_evaluate(checkpoint: &Path, test_data: &Path, out: Option<PathBuf>) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let test_ds = Dataset::read(test_data)?;
    let (metrics, scatter) = run_evaluate(&ck, &test_ds)?;
    let dir = out_dir(out, None);
    std::fs::create_dir_all(&dir)?;
    write_metrics(&dir.join("metrics.json"), &metrics)?;
    write_scatter(&dir.join("scatter.csv"), &scatter)?;
    println!("test mse {:.6} over {} samples", metrics.mse, scatter.len());
    Ok(())
}

fn cmd_reproduce(study: &str, scale: f64, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let study: Study = study.parse()?;
    let dir = out_dir(out, None);
    let report = reproduce(study, scale, seed, &dir)?;
    print!("{}", report.summary());
    println!("report at {}", dir.join(format!("report-{}.json", study.as_str())).display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenDataset { config, seed, out, scale } => {
            cmd_gen_dataset(&config, seed, out, scale)
        }
        Command::Train { config, train_data, seed, out } => {
            cmd_train(&config, &train_data, seed, out)
        }
        Command::Evaluate { checkpoint, test_data, out } => {
            cmd_evaluate(&checkpoint, &test_data, out)
        }
        Command::Reproduce { study, scale, seed, out } => cmd_reproduce(&study, scale, seed, out),
    }
}

fn main() {
    init_parallelism();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
