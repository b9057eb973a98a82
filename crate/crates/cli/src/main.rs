use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metatag::pipeline::{bench, Overrides, Pipeline, RunConfig};
use metatag::Error;

/// Tag article metadata with subject topics.
#[derive(Parser)]
#[command(name = "metatag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the inverted index over the corpus.
    Index(Common),
    /// Build the latent semantic embedding.
    Embed(Common),
    /// Train one classifier per topic and rank the corpus.
    TrainRank(Common),
    /// Rank synset matches per topic.
    Synset(Common),
    /// Fuse classifier and synset rankings and assign tags.
    Fuse(Common),
    /// Score tags against the ground truth.
    Eval(Common),
    /// Run every stage in order.
    All(Common),
    /// Generate the synthetic benchmark and run every stage on it.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct OverrideArgs {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated topic list.
    #[arg(long, value_delimiter = ',')]
    topics: Option<Vec<String>>,
    /// Fusion list-size multiplier; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<u32>>,
}

impl From<OverrideArgs> for Overrides {
    fn from(o: OverrideArgs) -> Self {
        Overrides {
            seed: o.seed,
            topics: o.topics,
            a: o.a,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "io" => 2,
        "data" => 3,
        "input" => 4,
        "config" => 5,
        "numerical" => 6,
        "pipeline" => 7,
        _ => 1,
    }
}

fn run(cli: Cli) -> metatag::Result<()> {
    let open = |c: Common| Pipeline::from_file(&c.config, &c.overrides.into());
    match cli.command {
        Command::Index(c) => open(c)?.index(),
        Command::Embed(c) => open(c)?.embed().map(|_| ()),
        Command::TrainRank(c) => {
            let report = open(c)?.train_rank()?;
            for s in &report.skipped {
                eprintln!("skipped {}: {} positives, {} required", s.topic, s.found, s.required);
            }
            Ok(())
        }
        Command::Synset(c) => open(c)?.synset().map(|_| ()),
        Command::Fuse(c) => open(c)?.fuse(),
        Command::Eval(c) => {
            print!("{}", open(c)?.eval()?);
            Ok(())
        }
        Command::All(c) => {
            print!("{}", open(c)?.all()?);
            Ok(())
        }
        Command::Bench(b) => {
            let mut cfg = match &b.config {
                Some(p) => {
                    let mut cfg = RunConfig::load(p)?;
                    cfg.resolve_paths(p.parent().unwrap_or(std::path::Path::new("")));
                    cfg
                }
                None => RunConfig::default(),
            };
            Overrides::from(b.overrides).apply(&mut cfg);
            if let Some(out) = b.out {
                cfg.paths.output_dir = out;
            }
            let (_, table) = bench(cfg)?;
            print!("{table}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("[{}] {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
