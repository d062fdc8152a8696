//! Experiment harness: build a bank from synthetic patterns, corrupt stored
//! patterns, denoise them and tabulate how often the right network was
//! selected and the pattern recovered exactly.
//!
//! Configs are plain `key = value` lines; `#` starts a comment. `k` may be
//! a comma-separated list, producing one experiment per value:
//!
//! ```text
//! rows = 21
//! cols = 21
//! k = 1, 2, 4, 8
//! patterns_per_network = 30
//! noise = gaussian:0.3
//! trials = 200
//! seed = 7
//! ```
//!
//! Optional keys and defaults: `rule = pseudoinverse`, `probe_updates = 100`,
//! `max_updates = 30000`, `density = 0.5`, `finder_corners = false`,
//! `select = energy-drop`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::corpus::{synthetic_corpus, Corpus};
use crate::dynamics::DEFAULT_MAX_UPDATES;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::seed::{self, derive_seed};
use crate::selector::{denoise, DenoiseOptions, SelectionStatistic, DEFAULT_PROBE_UPDATES};
use crate::training::{train_bank, Rule, TrainingSet};
use crate::types::{Geometry, NetworkBank};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub k: usize,
    pub patterns_per_network: usize,
    pub rule: Rule,
    pub noise: NoiseSpec,
    pub trials: usize,
    pub probe_updates: usize,
    pub max_updates: usize,
    pub seed: u64,
    pub density: f64,
    pub finder_corners: bool,
    pub statistic: SelectionStatistic,
}

impl ExperimentConfig {
    /// 21x21 patterns, 4 networks of 30 patterns, pseudo-inverse rule.
    pub fn desk_scale(noise: NoiseSpec, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            geometry: Geometry { rows: 21, cols: 21 },
            k: 4,
            patterns_per_network: 30,
            rule: Rule::Pseudoinverse,
            noise,
            trials,
            probe_updates: DEFAULT_PROBE_UPDATES,
            max_updates: DEFAULT_MAX_UPDATES,
            seed,
            density: 0.5,
            finder_corners: false,
            statistic: SelectionStatistic::EnergyDrop,
        }
    }

    pub fn total_patterns(&self) -> usize {
        self.k * self.patterns_per_network
    }

    pub fn validate(&self) -> Result<()> {
        Geometry::new(self.geometry.rows, self.geometry.cols)?;
        for (value, what) in [
            (self.k, "k"),
            (self.patterns_per_network, "patterns_per_network"),
            (self.probe_updates, "probe_updates"),
        ] {
            if value == 0 {
                return Err(Error::Parameter(format!("{what} must be positive")));
            }
        }
        if self.max_updates < self.geometry.n() {
            return Err(Error::Parameter(format!(
                "max_updates ({}) must cover one sweep of {} nodes",
                self.max_updates,
                self.geometry.n()
            )));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Parameter(format!(
                "density {} outside [0, 1]",
                self.density
            )));
        }
        Ok(())
    }

    /// Options handed to the denoiser for trial `seed`.
    fn denoise_options(&self, seed: u64) -> DenoiseOptions {
        DenoiseOptions {
            probe_updates: self.probe_updates,
            max_updates: self.max_updates,
            seed,
            statistic: self.statistic,
            min_delta: None,
        }
    }
}

/// Parse a config file; one experiment per listed `k`.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    #[derive(Default)]
    struct Raw {
        rows: Option<usize>,
        cols: Option<usize>,
        ks: Option<Vec<usize>>,
        per_network: Option<usize>,
        noise: Option<NoiseSpec>,
        trials: Option<usize>,
        seed: Option<u64>,
    }
    let mut raw = Raw::default();
    let mut cfg = ExperimentConfig::desk_scale(NoiseSpec::Flips { fraction: 0.0 }, 0, 0);

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config {
            line: line_no,
            message,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for `{key}`"))
        }
        let parsed: std::result::Result<(), String> = (|| {
            match key {
                "rows" => raw.rows = Some(num(key, value)?),
                "cols" => raw.cols = Some(num(key, value)?),
                "k" => {
                    raw.ks = Some(
                        value
                            .split(',')
                            .map(|v| num(key, v.trim()))
                            .collect::<std::result::Result<_, _>>()?,
                    )
                }
                "patterns_per_network" => raw.per_network = Some(num(key, value)?),
                "noise" => raw.noise = Some(value.parse().map_err(|e: Error| e.to_string())?),
                "trials" => raw.trials = Some(num(key, value)?),
                "seed" => raw.seed = Some(num(key, value)?),
                "rule" => cfg.rule = value.parse().map_err(|e: Error| e.to_string())?,
                "probe_updates" => cfg.probe_updates = num(key, value)?,
                "max_updates" => cfg.max_updates = num(key, value)?,
                "density" => cfg.density = num(key, value)?,
                "finder_corners" => cfg.finder_corners = num(key, value)?,
                "select" => cfg.statistic = value.parse().map_err(|e: Error| e.to_string())?,
                other => return Err(format!("unknown key `{other}`")),
            }
            Ok(())
        })();
        parsed.map_err(err)?;
    }

    let missing = |key: &str| Error::MissingKey(key.to_string());
    cfg.geometry = Geometry {
        rows: raw.rows.ok_or_else(|| missing("rows"))?,
        cols: raw.cols.ok_or_else(|| missing("cols"))?,
    };
    let ks = raw.ks.ok_or_else(|| missing("k"))?;
    cfg.patterns_per_network = raw
        .per_network
        .ok_or_else(|| missing("patterns_per_network"))?;
    cfg.noise = raw.noise.ok_or_else(|| missing("noise"))?;
    cfg.trials = raw.trials.ok_or_else(|| missing("trials"))?;
    cfg.seed = raw.seed.ok_or_else(|| missing("seed"))?;

    ks.into_iter()
        .map(|k| {
            let c = ExperimentConfig { k, ..cfg.clone() };
            c.validate().map(|()| c)
        })
        .collect()
}

/// Outcome of one corrupted-and-denoised pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub pattern_id: String,
    pub true_network: usize,
    pub selected_network: usize,
    pub exact_match: bool,
    pub hamming: usize,
    /// Probe updates over all networks plus the final run.
    pub node_updates: u64,
    pub wall_time: Duration,
}

/// Summary statistics; `None` when there were no trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub trials: usize,
    pub selection_accuracy: Option<f64>,
    pub exact_recovery_rate: Option<f64>,
    pub mean_hamming: Option<f64>,
    pub mean_node_updates: Option<f64>,
    pub p50_latency: Option<Duration>,
    pub p95_latency: Option<Duration>,
}

impl Aggregates {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let n = records.len();
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
            (n > 0).then(|| records.iter().map(f).sum::<f64>() / n as f64)
        };
        let mut times: Vec<Duration> = records.iter().map(|r| r.wall_time).collect();
        times.sort_unstable();
        // Nearest-rank percentile.
        let pct = |p: f64| {
            (n > 0).then(|| times[((p / 100.0 * n as f64).ceil() as usize).clamp(1, n) - 1])
        };
        Aggregates {
            trials: n,
            selection_accuracy: mean(&|r| {
                f64::from(u8::from(r.selected_network == r.true_network))
            }),
            exact_recovery_rate: mean(&|r| f64::from(u8::from(r.exact_match))),
            mean_hamming: mean(&|r| r.hamming as f64),
            mean_node_updates: mean(&|r| r.node_updates as f64),
            p50_latency: pct(50.0),
            p95_latency: pct(95.0),
        }
    }
}

/// Weight storage of the bank against one merged network of equal capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryReport {
    /// Bytes actually allocated for the bank's weights.
    pub measured_bytes: usize,
    /// `k * n^2 * 8`.
    pub expected_bytes: usize,
    /// `(k * n)^2 * 8`.
    pub single_network_bytes: usize,
}

impl MemoryReport {
    pub fn of(bank: &NetworkBank) -> Self {
        let (k, n) = (bank.k(), bank.n());
        MemoryReport {
            measured_bytes: bank.weight_bytes(),
            expected_bytes: k * n * n * 8,
            single_network_bytes: (k * n) * (k * n) * 8,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.single_network_bytes as f64 / self.expected_bytes as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregates: Aggregates,
    pub memory: MemoryReport,
}

/// Patterns, their training set and the trained bank for `cfg`.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub corpus: Corpus,
    pub training_set: TrainingSet,
    pub bank: NetworkBank,
}

pub fn build_fixture(cfg: &ExperimentConfig) -> Result<Fixture> {
    cfg.validate()?;
    let corpus = synthetic_corpus(
        cfg.total_patterns(),
        cfg.geometry,
        cfg.density,
        cfg.finder_corners,
        derive_seed(cfg.seed, 0),
    )?;
    let training_set = corpus.training_set()?;
    let bank = train_bank(
        &training_set,
        cfg.geometry,
        cfg.k,
        cfg.rule,
        derive_seed(cfg.seed, 1),
    )?;
    Ok(Fixture {
        corpus,
        training_set,
        bank,
    })
}

/// Run every trial of `cfg` against `fixture`. Trial `t` draws all of its
/// randomness from `derive_seed(derive_seed(cfg.seed, 2), t)`.
pub fn run_trials(cfg: &ExperimentConfig, fixture: &Fixture) -> Result<Vec<TrialRecord>> {
    let trial_master = derive_seed(cfg.seed, 2);
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(trial_master, t as u64);
            let mut rng = seed::rng(trial_seed);
            let index = rng.random_range(0..fixture.corpus.len());
            let id = &fixture.corpus.ids[index];
            let clean = &fixture.corpus.images[index];
            let true_network = fixture
                .bank
                .home_of(id)
                .ok_or_else(|| Error::Input(format!("pattern {id:?} is not in the bank")))?;
            let noisy = cfg.noise.apply(clean, rng.random())?;

            let start = Instant::now();
            let report = denoise(
                &fixture.bank,
                &noisy,
                &cfg.denoise_options(rng.random()),
                Some(&fixture.training_set),
            )?;
            let wall_time = start.elapsed();

            let hamming = report.output.hamming(clean)?;
            Ok(TrialRecord {
                trial: t,
                pattern_id: id.clone(),
                true_network,
                selected_network: report.selection.winner,
                exact_match: hamming == 0,
                hamming,
                node_updates: (cfg.probe_updates * fixture.bank.k()) as u64
                    + report.final_stats.node_updates_performed,
                wall_time,
            })
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let fixture = build_fixture(cfg)?;
    let records = run_trials(cfg, &fixture)?;
    Ok(BenchReport {
        config: cfg.clone(),
        aggregates: Aggregates::from_records(&records),
        records,
        memory: MemoryReport::of(&fixture.bank),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

fn opt_us(v: Option<Duration>) -> String {
    v.map_or_else(|| "undefined".to_string(), |d| d.as_micros().to_string())
}

/// Per-trial rows for every report, then one aggregate block per report.
/// Wall-clock columns are only written when `timings` is set, so the
/// default output is a pure function of the configs.
pub fn write_csv(reports: &[BenchReport], timings: bool) -> String {
    let mut out = String::new();
    out.push_str(
        "k,rule,noise,trial,pattern_id,true_network,selected_network,selection_correct,exact_match,hamming,node_updates",
    );
    if timings {
        out.push_str(",wall_time_us");
    }
    out.push('\n');
    for rep in reports {
        let c = &rep.config;
        for r in &rep.records {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.k,
                c.rule,
                c.noise,
                r.trial,
                r.pattern_id,
                r.true_network,
                r.selected_network,
                u8::from(r.selected_network == r.true_network),
                u8::from(r.exact_match),
                r.hamming,
                r.node_updates
            );
            if timings {
                let _ = write!(out, ",{}", r.wall_time.as_micros());
            }
            out.push('\n');
        }
    }
    for rep in reports {
        let a = &rep.aggregates;
        let m = &rep.memory;
        let _ = writeln!(out);
        let _ = writeln!(out, "aggregate,k,{}", rep.config.k);
        let _ = writeln!(out, "trials,{}", a.trials);
        let _ = writeln!(out, "selection_accuracy,{}", opt(a.selection_accuracy));
        let _ = writeln!(out, "exact_recovery_rate,{}", opt(a.exact_recovery_rate));
        let _ = writeln!(out, "mean_hamming,{}", opt(a.mean_hamming));
        let _ = writeln!(out, "mean_node_updates,{}", opt(a.mean_node_updates));
        let _ = writeln!(out, "bank_memory_bytes,{}", m.measured_bytes);
        let _ = writeln!(
            out,
            "single_network_memory_bytes,{}",
            m.single_network_bytes
        );
        let _ = writeln!(out, "memory_ratio,{:.6}", m.ratio());
        if timings {
            let _ = writeln!(out, "p50_latency_us,{}", opt_us(a.p50_latency));
            let _ = writeln!(out, "p95_latency_us,{}", opt_us(a.p95_latency));
        }
    }
    out
}
