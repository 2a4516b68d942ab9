use clap::{Args, Parser, Subcommand};
use kalikow_cli::{presets, run, RunOptions, Source};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kalikow", version, about = "Monte Carlo laboratory for Kalikow-type skew products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (TOML, or JSON with a .json extension).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled preset to run instead of a configuration file.
    #[arg(long)]
    preset: Option<String>,
    /// Exit with status 2 when a shipped threshold fails.
    #[arg(long)]
    assert: bool,
    /// Master seed; overrides KALIKOW_SEED and the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output root; artifacts go to <outdir>/<name>/.
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct WithVerb {
    /// Experiment kind; must match the configuration when given.
    verb: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Continued fractions, Ostrowski digits, θ_min, Minkowski vectors.
    Arith(WithVerb),
    /// Skew-product orbits, occupation measures and the PrBG statistic.
    Skew(WithVerb),
    Clt(Common),
    Gk(Common),
    Decay(Common),
    Ld(Common),
    Maxineq(Common),
    Anticonc(Common),
    Cones(Common),
    Cobtest(Common),
    Sfdev(Common),
    Dk(Common),
    /// Closeness, D-set, Ω₁ and good-pair probes.
    Probe(WithVerb),
    /// Run any configuration regardless of its kind.
    Run(Common),
    /// List the bundled presets, or print one.
    Presets {
        /// Preset to print as TOML.
        name: Option<String>,
    },
}

fn options(command: &str, verb: Option<String>, c: Common) -> RunOptions {
    let source = match (c.config, c.preset) {
        (Some(path), _) => Source::File(path),
        (None, Some(name)) => Source::Preset(name),
        (None, None) => unreachable!("clap requires one of --config or --preset"),
    };
    let mut opts = RunOptions::new(command, source);
    opts.verb = verb;
    opts.assert = c.assert;
    opts.seed = c.seed;
    opts.workers = c.workers;
    opts.outdir = c.outdir;
    opts
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = match cli.command {
        Command::Presets { name: None } => {
            for name in presets::list_presets() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Presets { name: Some(name) } => {
            return match presets::preset_source(&name) {
                Some(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("unknown preset {name:?}");
                    ExitCode::from(64)
                }
            };
        }
        Command::Arith(w) => options("arith", w.verb, w.common),
        Command::Skew(w) => options("skew", w.verb, w.common),
        Command::Probe(w) => options("probe", w.verb, w.common),
        Command::Clt(c) => options("clt", None, c),
        Command::Gk(c) => options("gk", None, c),
        Command::Decay(c) => options("decay", None, c),
        Command::Ld(c) => options("ld", None, c),
        Command::Maxineq(c) => options("maxineq", None, c),
        Command::Anticonc(c) => options("anticonc", None, c),
        Command::Cones(c) => options("cones", None, c),
        Command::Cobtest(c) => options("cobtest", None, c),
        Command::Sfdev(c) => options("sfdev", None, c),
        Command::Dk(c) => options("dk", None, c),
        Command::Run(c) => options("run", None, c),
    };
    match run(&opts) {
        Ok(out) => {
            println!("{}", out.dir.join(kalikow_cli::report::REPORT_FILE).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kalikow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
