//! Network selection and the end-to-end denoising pipeline.
//!
//! Every network in the bank is probed with the same input for a short run
//! of asynchronous updates. The energy drop `delta_k = E_k - E'_k` of each
//! probe is recorded, and by default the network with the largest drop wins
//! ([`SelectionStatistic::EnergyDrop`]). The winner then runs to
//! convergence and its fixed point is the denoised output.
//!
//! [`SelectionStatistic::ProbedEnergy`] instead picks the network with the
//! lowest post-probe energy `E'_k`. On random patterns with either the
//! pseudo-inverse or the projection rule the owning network already starts
//! far below the others, so its drop is usually *smaller* than theirs; the
//! lowest probed energy tracks ownership far more reliably. Both statistics
//! are always recorded in the report.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{self, RunStats, DEFAULT_MAX_UPDATES};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::training::TrainingSet;
use crate::types::{devectorize, to_bipolar, vectorize, BinaryImage, BipolarState, NetworkBank};

/// Default probe length in node updates.
pub const DEFAULT_PROBE_UPDATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionStatistic {
    /// Largest `E_k - E'_k`.
    #[default]
    EnergyDrop,
    /// Smallest `E'_k`.
    ProbedEnergy,
}

impl FromStr for SelectionStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy-drop" | "delta" => Ok(SelectionStatistic::EnergyDrop),
            "probed-energy" => Ok(SelectionStatistic::ProbedEnergy),
            other => Err(Error::Parameter(format!(
                "unknown selection statistic {other:?} (expected energy-drop or probed-energy)"
            ))),
        }
    }
}

impl fmt::Display for SelectionStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionStatistic::EnergyDrop => "energy-drop",
            SelectionStatistic::ProbedEnergy => "probed-energy",
        })
    }
}

/// Probe outcome for one network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRecord {
    pub index: usize,
    /// `E_k`, energy of the input.
    pub initial_energy: f64,
    /// `E'_k`, energy after the probe.
    pub probed_energy: f64,
    /// `E_k - E'_k`.
    pub delta: f64,
}

impl SelectionRecord {
    fn score(&self, statistic: SelectionStatistic) -> f64 {
        match statistic {
            SelectionStatistic::EnergyDrop => self.delta,
            SelectionStatistic::ProbedEnergy => -self.probed_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    /// One record per network, in index order.
    pub records: Vec<SelectionRecord>,
    pub winner: usize,
    pub probe_updates: usize,
    /// More than one network attained the winning score.
    pub tie_broken: bool,
    pub statistic: SelectionStatistic,
}

impl SelectionReport {
    pub fn winner_record(&self) -> &SelectionRecord {
        &self.records[self.winner]
    }
}

/// Probe every network and pick the largest energy drop.
pub fn select_network(
    bank: &NetworkBank,
    s: &BipolarState,
    probe_updates: usize,
    seed: u64,
) -> Result<SelectionReport> {
    select_network_by(bank, s, probe_updates, seed, SelectionStatistic::EnergyDrop)
}

/// Probe every network and pick the winner under `statistic`. Ties go to
/// the lowest index.
pub fn select_network_by(
    bank: &NetworkBank,
    s: &BipolarState,
    probe_updates: usize,
    seed: u64,
    statistic: SelectionStatistic,
) -> Result<SelectionReport> {
    if bank.k() == 0 {
        return Err(Error::Input("bank has no networks".into()));
    }
    if s.len() != bank.n() {
        return Err(Error::Dimension(format!(
            "input has {} entries, bank networks have {} nodes",
            s.len(),
            bank.n()
        )));
    }
    if probe_updates == 0 {
        return Err(Error::Parameter("probe_updates must be at least 1".into()));
    }

    let records = bank
        .networks()
        .par_iter()
        .enumerate()
        .map(|(k, w)| {
            let (_, stats) =
                dynamics::run_iterations(w, s, probe_updates, derive_seed(seed, k as u64))?;
            Ok(SelectionRecord {
                index: k,
                initial_energy: stats.initial_energy,
                probed_energy: stats.final_energy,
                delta: stats.initial_energy - stats.final_energy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = records
        .iter()
        .map(|r| r.score(statistic))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut at_best = records.iter().filter(|r| r.score(statistic) == best);
    let winner = at_best.next().map_or(0, |r| r.index);
    let tie_broken = at_best.next().is_some();

    Ok(SelectionReport {
        records,
        winner,
        probe_updates,
        tie_broken,
        statistic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseOptions {
    pub probe_updates: usize,
    pub max_updates: usize,
    pub seed: u64,
    pub statistic: SelectionStatistic,
    /// Reject the input when the winner's energy drop falls below this.
    pub min_delta: Option<f64>,
}

impl Default for DenoiseOptions {
    fn default() -> Self {
        DenoiseOptions {
            probe_updates: DEFAULT_PROBE_UPDATES,
            max_updates: DEFAULT_MAX_UPDATES,
            seed: 0,
            statistic: SelectionStatistic::default(),
            min_delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    pub selection: SelectionReport,
    pub final_stats: RunStats,
    pub output: BinaryImage,
    /// Id of the winner's stored pattern equal to the output, when the
    /// stored patterns were supplied.
    pub matched_stored_id: Option<String>,
}

/// Select the owning network for `img` and run it to convergence.
pub fn denoise(
    bank: &NetworkBank,
    img: &BinaryImage,
    opts: &DenoiseOptions,
    stored: Option<&TrainingSet>,
) -> Result<DenoiseReport> {
    if img.geometry() != bank.geometry() {
        return Err(Error::Dimension(format!(
            "image is {}, bank expects {}",
            img.geometry(),
            bank.geometry()
        )));
    }
    let s = to_bipolar(&vectorize(img))?;
    let selection = select_network_by(bank, &s, opts.probe_updates, opts.seed, opts.statistic)?;
    if let Some(threshold) = opts.min_delta {
        let best = selection.winner_record().delta;
        if best < threshold {
            return Err(Error::Rejected { best, threshold });
        }
    }

    let w = bank.network(selection.winner);
    let (fixed, final_stats) =
        dynamics::run_to_convergence(w, &s, opts.max_updates, derive_seed(opts.seed, u64::MAX))?;

    let matched_stored_id = stored.and_then(|ts| {
        bank.ids_in(selection.winner)
            .find(|id| ts.get(id) == Some(&fixed))
            .map(str::to_owned)
    });
    let g = bank.geometry();
    let output = devectorize(&fixed.to_binary(), g.rows, g.cols)?;

    Ok(DenoiseReport {
        selection,
        final_stats,
        output,
        matched_stored_id,
    })
}
