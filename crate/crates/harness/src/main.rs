use std::path::{Path, PathBuf};
use std::process::ExitCode;

use btlab_harness::config::{Profile, RunConfig};
use btlab_harness::pipeline::{evaluate_run_dir, execute, Stage};
use btlab_harness::plot::{self, Series, Style};
use btlab_harness::presets::{run_experiment, ExperimentSpec, Preset, DEFAULT_SEEDS};
use btlab_harness::report::{self, RunSummary};
use btlab_harness::{write_file, Error, Result};
use clap::{Args, Parser, Subcommand};

/// Back-translation experiments on artificial languages.
#[derive(Parser)]
#[command(name = "btlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration layered over the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scale profile supplying defaults: mini, desk or paper.
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Override one key, e.g. `--set train.epochs=5`; wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the two lexica, lexical fields and the dictionary.
    GenLang(Common),
    /// Generate languages, corpora and the tokenizer.
    GenCorpus(Common),
    /// Generate data and train; writes the best checkpoint and the log.
    Train(Common),
    /// Re-evaluate a trained run directory on its test set.
    Eval {
        #[arg(long)]
        run: PathBuf,
    },
    /// Run a single configuration, or every run of a preset.
    Run {
        #[command(flatten)]
        common: Common,
        /// exp1, exp2-grid, exp2-switch, exp3, exp4a, exp4b, exp5a, exp5b, exp6a, exp6b, exp6c.
        #[arg(long)]
        preset: Option<String>,
        /// Number of training seeds (0..n) for a preset.
        #[arg(long, default_value_t = DEFAULT_SEEDS)]
        seeds: usize,
        /// Explicit comma-separated seed list; overrides --seeds.
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
        /// Comma-separated grammars replacing the preset's list.
        #[arg(long, value_delimiter = ',')]
        grammars: Option<Vec<String>>,
        /// Also write SVG/CSV plots.
        #[arg(long)]
        plot: bool,
    },
    /// Compare finished runs (run directories or experiment directories).
    Report {
        dirs: Vec<PathBuf>,
        /// Name of the run the delta column is computed against.
        #[arg(long)]
        baseline: Option<String>,
        /// Write the table (and plots with --plot) here instead of stdout only.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let profile: Profile = c.profile.parse()?;
    let text = match &c.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => None,
    };
    let cfg = RunConfig::for_profile(profile).layered(text.as_deref(), &c.sets)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run_dirs(dirs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for d in dirs {
        if d.join("eval.json").exists() {
            out.push(d.clone());
            continue;
        }
        let mut children: Vec<PathBuf> = std::fs::read_dir(d)
            .map_err(|e| Error::io(d, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("eval.json").exists())
            .collect();
        if children.is_empty() {
            return Err(Error::Config(format!("{} holds no evaluated runs", d.display())));
        }
        children.sort();
        out.extend(children);
    }
    Ok(out)
}

fn report(dirs: &[PathBuf], baseline: Option<&str>, out: Option<&Path>, plot: bool) -> Result<()> {
    let runs = run_dirs(dirs)?
        .iter()
        .map(|d| RunSummary::load(d))
        .collect::<Result<Vec<_>>>()?;
    let table = report::table(&runs, baseline)?;
    print!("{table}");
    if let Some(out) = out {
        write_file(&out.join("report.tsv"), &table)?;
        if plot {
            let series = vec![Series {
                name: "bleu".into(),
                points: runs.iter().enumerate().map(|(i, r)| (i as f64, r.report.bleu)).collect(),
                style: Style::Points,
            }];
            write_file(&out.join("report.svg"), plot::chart("Test BLEU by run", "run index", "BLEU", &series))?;
            write_file(&out.join("report.csv"), plot::csv(&series))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GenLang(c) => {
            execute(&load_config(&c)?, Some(&c.out), Stage::Languages)?;
        }
        Command::GenCorpus(c) => {
            execute(&load_config(&c)?, Some(&c.out), Stage::Tokenizer)?;
        }
        Command::Train(c) => {
            execute(&load_config(&c)?, Some(&c.out), Stage::Train)?;
        }
        Command::Eval { run } => {
            let r = evaluate_run_dir(&run)?;
            print!("{}", r.to_tsv());
        }
        Command::Run {
            common,
            preset,
            seeds,
            seed_list,
            grammars,
            plot,
        } => {
            let base = load_config(&common)?;
            let Some(preset) = preset else {
                let out = execute(&base, Some(&common.out), Stage::Eval)?;
                if let Some(r) = out.report {
                    print!("{}", r.to_tsv());
                }
                return Ok(0);
            };
            let preset: Preset = preset.parse()?;
            let spec = ExperimentSpec {
                preset,
                base,
                seeds: seed_list.unwrap_or_else(|| (0..seeds as u64).collect()),
                grammars,
                out: Some(common.out.clone()),
                plot,
            };
            let result = run_experiment(&spec)?;
            if result.records.iter().any(|r| r.report.is_some()) {
                report(std::slice::from_ref(&common.out), None, None, false)?;
            }
            return Ok(result.exit_code());
        }
        Command::Report {
            dirs,
            baseline,
            out,
            plot,
        } => report(&dirs, baseline.as_deref(), out.as_deref(), plot)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
