use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowdloc::cli::{self, RunConfig};
use crowdloc::model::Preset;

#[derive(Parser)]
#[command(name = "crowdloc", version, about = "Point-supervised crowd counting and head localization")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct TrainFlags {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Loss weights for L1..L4, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    weights: Option<Vec<f64>>,
    /// Loss terms to leave out: any of l1, l2, l3.
    #[arg(long, value_delimiter = ',')]
    drop: Vec<String>,
    #[arg(long)]
    hflip: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        min_count: Option<usize>,
        #[arg(long)]
        max_count: Option<usize>,
    },
    /// Train a model on a dataset's train split.
    Train(TrainFlags),
    /// Evaluate a checkpoint on a dataset's test split.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Write detections for annotation files (or the test split).
    Localize {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        scenes: Vec<PathBuf>,
    },
    /// Train and evaluate with each of L1..L3 dropped in turn.
    Ablate {
        #[command(flatten)]
        train: TrainFlags,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_train(cfg: &mut RunConfig, f: TrainFlags) -> crowdloc::Result<()> {
    set(&mut cfg.dataset, f.dataset.map(Some));
    set(&mut cfg.preset, f.preset);
    set(&mut cfg.epochs, f.epochs.map(Some));
    set(&mut cfg.patience, f.patience.map(Some));
    if let Some(w) = f.weights {
        cfg.model.loss_weights.copy_from_slice(&w);
    }
    for term in &f.drop {
        match term.to_ascii_lowercase().as_str() {
            "l1" => cfg.ablation[0] = false,
            "l2" => cfg.ablation[1] = false,
            "l3" => cfg.ablation[2] = false,
            other => return Err(crowdloc::Error::Invalid(format!("cannot drop {other:?}; choose from l1, l2, l3"))),
        }
    }
    cfg.hflip |= f.hflip;
    Ok(())
}

fn run(cli: Cli) -> crowdloc::Result<()> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.common.seed);
    set(&mut cfg.out, cli.common.out);
    match cli.command {
        Command::Synth { n, width, height, min_count, max_count } => {
            set(&mut cfg.synth.n_scenes, n);
            set(&mut cfg.synth.width, width);
            set(&mut cfg.synth.height, height);
            set(&mut cfg.synth.count_range[0], min_count);
            set(&mut cfg.synth.count_range[1], max_count);
            let m = cli::cmd_synth(&cfg)?;
            println!("wrote {} train + {} test scenes to {}", m.train.len(), m.test.len(), cfg.out.display());
        }
        Command::Train(flags) => {
            apply_train(&mut cfg, flags)?;
            let log = cli::cmd_train(&cfg)?;
            println!(
                "best epoch {} (val MAE {:.4}) after {} epochs; model in {}",
                log.best_epoch,
                log.best_val_mae,
                log.epochs.len(),
                cfg.out.display()
            );
        }
        Command::Eval { checkpoint, dataset, tau, radius } => {
            set(&mut cfg.checkpoint, checkpoint.map(Some));
            set(&mut cfg.dataset, dataset.map(Some));
            set(&mut cfg.tau, tau);
            set(&mut cfg.radius, radius);
            let r = cli::cmd_eval(&cfg)?;
            println!("MAE {:.4}  MSE {:.4}  AP {:.4}  ({} scenes)", r.mae, r.mse, r.ap, r.num_scenes);
        }
        Command::Localize { checkpoint, dataset, tau, scenes } => {
            set(&mut cfg.checkpoint, checkpoint.map(Some));
            set(&mut cfg.dataset, dataset.map(Some));
            set(&mut cfg.tau, tau);
            let path = cli::cmd_localize(&cfg, &scenes)?;
            println!("wrote {}", path.display());
        }
        Command::Ablate { train, tau, radius } => {
            apply_train(&mut cfg, train)?;
            set(&mut cfg.tau, tau);
            set(&mut cfg.radius, radius);
            let rows = cli::cmd_ablate(&cfg)?;
            print!("{}", cli::ablation_csv(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
