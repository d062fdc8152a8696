use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use hopdenoise::bench::{parse_config, run_experiment, write_csv};
use hopdenoise::corpus::PatternSource;
use hopdenoise::dynamics::DEFAULT_MAX_UPDATES;
use hopdenoise::noise::NoiseSpec;
use hopdenoise::persist::{load_bank, read_pbm, save_bank, write_pbm, PbmFormat};
use hopdenoise::seed::derive_seed;
use hopdenoise::selector::{denoise, DenoiseOptions, SelectionStatistic, DEFAULT_PROBE_UPDATES};
use hopdenoise::training::{train_bank, Rule};

/// Associative-memory denoising of binary images with a bank of Hopfield networks.
#[derive(Parser)]
#[command(name = "hopdenoise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition patterns across k networks, train them and save the bank.
    Train {
        /// Directory of .pbm files or `synthetic:COUNT:RxC[:density=D][:finder]`.
        #[arg(long)]
        patterns: PatternSource,
        #[arg(long)]
        k: usize,
        /// pseudoinverse, projection or hebbian.
        #[arg(long, default_value = "pseudoinverse")]
        rule: Rule,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the training patterns as .pbm files into this directory.
        #[arg(long)]
        dump_patterns: Option<PathBuf>,
    },
    /// Write synthetic patterns as .pbm files.
    Synth {
        /// `synthetic:COUNT:RxC[:density=D][:finder]`.
        #[arg(long)]
        spec: PatternSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "raw")]
        format: PbmFormat,
    },
    /// Corrupt an image.
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        /// gaussian:S2, saltpepper:D, corner-sp:D, corner-fill:V or flips:F.
        #[arg(long)]
        noise: NoiseSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "raw")]
        format: PbmFormat,
    },
    /// Select a network for an image and run it to a fixed point.
    Denoise {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PROBE_UPDATES)]
        probe: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_UPDATES)]
        max_updates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write a text report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// energy-drop or probed-energy.
        #[arg(long = "select", default_value = "energy-drop")]
        statistic: SelectionStatistic,
        /// Stored patterns, to name the recovered one.
        #[arg(long)]
        patterns: Option<PatternSource>,
        /// Seed the bank was trained with; regenerates synthetic patterns.
        #[arg(long, default_value_t = 0)]
        train_seed: u64,
        /// Reject inputs whose winning energy drop is below this.
        #[arg(long)]
        min_delta: Option<f64>,
        #[arg(long, default_value = "raw")]
        format: PbmFormat,
    },
    /// Run experiments from a config file and write a CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Include wall-clock columns (makes the output nondeterministic).
        #[arg(long)]
        timings: bool,
    },
}

fn corpus_seed(seed: u64) -> u64 {
    derive_seed(seed, 0)
}

fn train(
    patterns: &PatternSource,
    k: usize,
    rule: Rule,
    seed: u64,
    out: &Path,
    dump: Option<&Path>,
) -> Result<()> {
    let corpus = patterns.load(corpus_seed(seed))?;
    if let Some(dir) = dump {
        write_corpus(&corpus, dir, PbmFormat::Raw)?;
    }
    let ts = corpus.training_set()?;
    let start = Instant::now();
    let bank = train_bank(&ts, corpus.geometry, k, rule, derive_seed(seed, 1))?;
    let elapsed = start.elapsed();
    save_bank(&bank, out)?;
    println!(
        "trained {} patterns of {} into {} networks ({rule}) in {:.3}s",
        corpus.len(),
        corpus.geometry,
        bank.k(),
        elapsed.as_secs_f64()
    );
    for net in 0..bank.k() {
        println!("network {net}: {} patterns", bank.ids_in(net).count());
    }
    println!("weights: {} bytes", bank.weight_bytes());
    Ok(())
}

fn write_corpus(corpus: &hopdenoise::corpus::Corpus, dir: &Path, format: PbmFormat) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (id, img) in corpus.ids.iter().zip(&corpus.images) {
        write_pbm(img, dir.join(format!("{id}.pbm")), format)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_denoise(
    bank: &Path,
    input: &Path,
    opts: &DenoiseOptions,
    out: &Path,
    report_path: Option<&Path>,
    patterns: Option<&PatternSource>,
    train_seed: u64,
    format: PbmFormat,
) -> Result<()> {
    let bank = load_bank(bank)?;
    let img = read_pbm(input)?;
    let stored = patterns
        .map(|p| p.load(corpus_seed(train_seed))?.training_set())
        .transpose()?;
    let rep = denoise(&bank, &img, opts, stored.as_ref())?;
    write_pbm(&rep.output, out, format)?;

    let sel = &rep.selection;
    let mut text = String::new();
    writeln!(text, "statistic: {}", sel.statistic)?;
    writeln!(text, "probe_updates: {}", sel.probe_updates)?;
    writeln!(text, "network,initial_energy,probed_energy,delta")?;
    for r in &sel.records {
        writeln!(
            text,
            "{},{:.6},{:.6},{:.6}",
            r.index, r.initial_energy, r.probed_energy, r.delta
        )?;
    }
    writeln!(text, "winner: {}", sel.winner)?;
    writeln!(text, "tie_broken: {}", sel.tie_broken)?;
    let st = &rep.final_stats;
    writeln!(text, "node_updates: {}", st.node_updates_performed)?;
    writeln!(text, "flips: {}", st.flips)?;
    writeln!(text, "initial_energy: {:.6}", st.initial_energy)?;
    writeln!(text, "final_energy: {:.6}", st.final_energy)?;
    writeln!(text, "converged: {}", st.converged)?;
    writeln!(
        text,
        "matched_stored_id: {}",
        rep.matched_stored_id.as_deref().unwrap_or("none")
    )?;
    writeln!(text, "changed_pixels: {}", rep.output.hamming(&img)?)?;

    match report_path {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    if !st.converged {
        eprintln!(
            "warning: no fixed point within {} updates",
            opts.max_updates
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            patterns,
            k,
            rule,
            seed,
            out,
            dump_patterns,
        } => train(&patterns, k, rule, seed, &out, dump_patterns.as_deref()),
        Command::Synth {
            spec,
            seed,
            out_dir,
            format,
        } => {
            if matches!(spec, PatternSource::Directory(_)) {
                anyhow::bail!("--spec must be synthetic:COUNT:RxC[...]");
            }
            let corpus = spec.load(corpus_seed(seed))?;
            write_corpus(&corpus, &out_dir, format)?;
            println!("wrote {} patterns to {}", corpus.len(), out_dir.display());
            Ok(())
        }
        Command::Corrupt {
            input,
            noise,
            seed,
            out,
            format,
        } => {
            let img = read_pbm(&input)?;
            let noisy = noise.apply(&img, seed)?;
            write_pbm(&noisy, &out, format)?;
            println!(
                "{noise}: {} of {} pixels changed",
                noisy.hamming(&img)?,
                img.geometry().n()
            );
            Ok(())
        }
        Command::Denoise {
            bank,
            input,
            probe,
            max_updates,
            seed,
            out,
            report,
            statistic,
            patterns,
            train_seed,
            min_delta,
            format,
        } => {
            let opts = DenoiseOptions {
                probe_updates: probe,
                max_updates,
                seed,
                statistic,
                min_delta,
            };
            run_denoise(
                &bank,
                &input,
                &opts,
                &out,
                report.as_deref(),
                patterns.as_ref(),
                train_seed,
                format,
            )
        }
        Command::Bench {
            config,
            out,
            timings,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let configs = parse_config(&text)?;
            let mut reports = Vec::with_capacity(configs.len());
            for cfg in &configs {
                let rep = run_experiment(cfg)?;
                let a = &rep.aggregates;
                println!(
                    "k={} trials={} selection_accuracy={} exact_recovery={}",
                    cfg.k,
                    a.trials,
                    a.selection_accuracy
                        .map_or("undefined".into(), |v| format!("{v:.3}")),
                    a.exact_recovery_rate
                        .map_or("undefined".into(), |v| format!("{v:.3}")),
                );
                reports.push(rep);
            }
            fs::write(&out, write_csv(&reports, timings))
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
