use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use g2kit_cli::{run, write_outputs, ParityArg, RunConfig, Settings, Suite};

#[derive(Parser)]
#[command(name = "g2kit", about = "G2 cone and gluing verification suites")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Link preset name or path to a link file.
    #[arg(long, global = true)]
    link: Option<String>,
    /// Run every suite.
    #[arg(long)]
    all: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    VerifyPointwise,
    VerifyLink,
    VerifyCone,
    Rates {
        #[arg(long, value_enum)]
        parity: Option<ParityArg>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
    },
    GlueScan,
    Feasibility {
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        nu_prime: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long)]
        rows: Option<usize>,
    },
    JoyceGate,
}

fn input_error(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return input_error(e),
        },
        None => RunConfig::default(),
    };
    cfg.seed = cli.seed.or(cfg.seed);
    cfg.link = cli.link.clone().or(cfg.link);
    cfg.output_dir = cli.out.clone().or(cfg.output_dir);

    let suites: Vec<Suite> = match (&cli.command, cli.all) {
        (_, true) => Suite::ALL.to_vec(),
        (None, false) => {
            eprintln!("error: give a subcommand or --all");
            return ExitCode::from(2);
        }
        (Some(cmd), false) => match cmd {
            Command::VerifyPointwise => vec![Suite::Pointwise],
            Command::VerifyLink => vec![Suite::Link],
            Command::VerifyCone => vec![Suite::Cone],
            Command::Rates { parity, from, to } => {
                cfg.rates.parity = parity.or(cfg.rates.parity);
                cfg.rates.from = from.or(cfg.rates.from);
                cfg.rates.to = to.or(cfg.rates.to);
                vec![Suite::Rates]
            }
            Command::GlueScan => vec![Suite::Glue],
            Command::Feasibility { mu, nu_prime, delta, rows } => {
                let f = &mut cfg.feasibility;
                f.mu = mu.or(f.mu);
                f.nu_prime = nu_prime.or(f.nu_prime);
                f.delta = delta.or(f.delta);
                f.rows = rows.or(f.rows);
                vec![Suite::Feasibility]
            }
            Command::JoyceGate => vec![Suite::Joyce],
        },
    };
    if let Err(e) = cfg.validate() {
        return input_error(e);
    }
    let settings = Settings::from_config(&cfg);

    println!("seed = {}", settings.seed);
    let report = match run(&suites, &settings) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    for c in &report.checks {
        println!("[{}] {}: {}", c.criterion, c.name, if c.pass { "PASS" } else { "FAIL" });
    }
    if let Err(e) = write_outputs(&report, &settings.output_dir) {
        return input_error(e);
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        println!("all {} checks passed", report.checks.len());
        ExitCode::SUCCESS
    } else {
        for name in &failed {
            eprintln!("failed invariant: {name}");
        }
        ExitCode::from(1)
    }
}
