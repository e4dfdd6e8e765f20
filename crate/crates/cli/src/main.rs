use clap::{Args, Parser, Subcommand};
use sparse_defense_cli::config::{EnsembleConfig, ExperimentConfig};
use sparse_defense_cli::{experiments, suite, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sparse-defense", version, about = "Sparsifying front-end experiments on MNIST digit pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file of `key = value` settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with the four MNIST IDX files (optionally gzipped).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Digit pair, e.g. `3,7`.
    #[arg(long, value_parser = parse_pair)]
    pair: Option<(u8, u8)>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Front-end sparsity K/N; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Wavelet decomposition depth.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy grid: {no attack, semi-white, white} x {no front end, front end}.
    Table1(Common),
    /// Retrain and attack at every sparsity level.
    Sweep(Common),
    /// Write clean, attacked and defended images of one test sample.
    Triptych {
        #[command(flatten)]
        common: Common,
        /// Test-set index; defaults to the first sample of the second digit.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Run the Monte-Carlo verification suite.
    Ensemble {
        /// TOML file of suite settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train a model and save it as JSON.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train on raw pixels instead of front-end outputs.
        #[arg(long)]
        no_front_end: bool,
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
    },
    /// Evaluate a saved model under both attacks.
    Attack {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
    },
}

fn parse_pair(s: &str) -> Result<(u8, u8), String> {
    let (a, b) = s.split_once(',').ok_or("expected d1,d2")?;
    let d = |t: &str| t.trim().parse::<u8>().map_err(|e| format!("{t:?}: {e}"));
    Ok((d(a)?, d(b)?))
}

fn experiment_config(c: &Common, list_rho: bool) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &c.data_dir {
        cfg.data_dir = Some(d.clone());
    }
    if let Some((a, b)) = c.pair {
        cfg.d1 = a;
        cfg.d2 = b;
    }
    if let Some(e) = c.epsilon {
        cfg.epsilon = e;
    }
    if let Some(r) = &c.rho {
        if list_rho {
            cfg.rho_list = r.clone();
        } else if let [single] = r.as_slice() {
            cfg.rho = *single;
        } else {
            return Err(CliError::Config("--rho takes a single value here".into()));
        }
    }
    if let Some(l) = c.levels {
        cfg.levels = l;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    println!("# settings\n{}", cfg.render());
    Ok(cfg)
}

fn pct(e: &sparse_defense::Evaluation) -> String {
    format!("{:.2}% ({}/{})", 100.0 * e.accuracy(), e.correct, e.total)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Table1(c) => {
            let cfg = experiment_config(&c, false)?;
            let t = experiments::run_table1(&cfg)?;
            print!("{}", t.render(cfg.pair(), cfg.epsilon));
            for f in experiments::write_table1(&t, &cfg)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep(c) => {
            let cfg = experiment_config(&c, true)?;
            let s = experiments::run_rho_sweep(&cfg)?;
            println!("clean accuracy without front end: {:.2}%", 100.0 * s.baseline_clean);
            println!("{:>6} {:>5} {:>8} {:>11} {:>8} {:>10}", "rho", "K", "clean", "semi-white", "white", "certified");
            for r in &s.rows {
                println!(
                    "{:>5.1}% {:>5} {:>7.2}% {:>10.2}% {:>7.2}% {:>9.1}%",
                    100.0 * r.rho,
                    r.k,
                    100.0 * r.clean,
                    100.0 * r.semi_white,
                    100.0 * r.white,
                    100.0 * r.certified_fraction
                );
            }
            for f in experiments::write_sweep(&s, &cfg)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Triptych { common, index } => {
            let cfg = experiment_config(&common, false)?;
            let t = experiments::emit_triptych(&cfg, index)?;
            println!(
                "sample {} (label {}): clean -> {}, attacked -> {}, attacked + front end -> {}",
                t.index, t.true_label, t.clean_label, t.attacked_label, t.defended_label
            );
            for f in &t.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Ensemble { config, seed, out } => {
            let mut cfg = match &config {
                Some(p) => EnsembleConfig::from_file(p)?,
                None => EnsembleConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            println!("# settings\n{}", cfg.render());
            let report = suite::run_ensemble_suite(&cfg)?;
            for c in &report.checks {
                let status = match (c.armed, c.passed) {
                    (false, _) => "INFO",
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                };
                println!("{status} {}: {}", c.name, c.detail);
            }
            for f in suite::write_suite(&report, &cfg, &out)? {
                println!("wrote {}", f.display());
            }
            let failures = report.failures();
            if !failures.is_empty() {
                let names: Vec<_> = failures.iter().map(|c| format!("{} (seed {})", c.name, c.seed)).collect();
                return Err(CliError::Acceptance(names.join(", ")));
            }
        }
        Command::Train { common, no_front_end, model } => {
            let cfg = experiment_config(&common, false)?;
            let rho = (!no_front_end).then_some(cfg.rho);
            let saved = experiments::train_and_save(&cfg, rho, &model)?;
            println!(
                "saved {} (N = {}, front end: {})",
                model.display(),
                saved.n,
                saved.frontend.as_ref().map_or("none".to_string(), |f| format!("{} K={}", f.basis, f.k))
            );
        }
        Command::Attack { common, model } => {
            let cfg = experiment_config(&common, false)?;
            let r = experiments::attack_saved(&cfg, &model)?;
            println!("clean      {}", pct(&r.clean));
            println!("semi-white {}", pct(&r.semi_white));
            println!("white      {}", pct(&r.white));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
