use hopdenoise::bench::{build_fixture, ExperimentConfig};
use hopdenoise::dynamics::{energy, run_iterations};
use hopdenoise::noise::NoiseSpec;
use hopdenoise::persist::{read_bank, write_bank};
use hopdenoise::selector::{denoise, select_network, DenoiseOptions, SelectionStatistic};
use hopdenoise::{to_bipolar, vectorize, Error};

fn desk() -> ExperimentConfig {
    ExperimentConfig::desk_scale(NoiseSpec::Gaussian { sigma2: 0.3 }, 0, 77)
}

#[test]
fn stored_pattern_has_zero_drop_at_home() {
    let fx = build_fixture(&desk()).unwrap();
    for id in fx.training_set.ids().iter().take(20) {
        let s = fx.training_set.get(id).unwrap();
        let home = fx.bank.home_of(id).unwrap();
        let report = select_network(&fx.bank, s, 100, 1).unwrap();
        let rec = &report.records[home];
        assert_eq!(rec.delta, 0.0);
        assert_eq!(rec.initial_energy, rec.probed_energy);
        // Home is nevertheless the deepest basin.
        let deepest = report
            .records
            .iter()
            .min_by(|a, b| a.probed_energy.total_cmp(&b.probed_energy))
            .unwrap();
        assert_eq!(deepest.index, home);
    }
}

#[test]
fn probed_energy_recovers_noisy_patterns() {
    let fx = build_fixture(&desk()).unwrap();
    let opts = DenoiseOptions {
        statistic: SelectionStatistic::ProbedEnergy,
        ..DenoiseOptions::default()
    };
    for (i, id) in fx.corpus.ids.iter().enumerate().step_by(12) {
        let clean = &fx.corpus.images[i];
        let noisy = NoiseSpec::Flips { fraction: 0.18 }
            .apply(clean, i as u64)
            .unwrap();
        let rep = denoise(
            &fx.bank,
            &noisy,
            &DenoiseOptions {
                seed: i as u64,
                ..opts
            },
            Some(&fx.training_set),
        )
        .unwrap();
        assert_eq!(rep.selection.winner, fx.bank.home_of(id).unwrap());
        assert_eq!(&rep.output, clean);
        assert_eq!(rep.matched_stored_id.as_deref(), Some(id.as_str()));
        assert!(rep.final_stats.converged);
        assert!(rep.final_stats.final_energy <= rep.final_stats.initial_energy);
    }
}

#[test]
fn denoise_is_identical_after_bank_round_trip() {
    let fx = build_fixture(&desk()).unwrap();
    let mut buf = Vec::new();
    write_bank(&fx.bank, &mut buf).unwrap();
    let loaded = read_bank(buf.as_slice(), None).unwrap();
    let noisy = NoiseSpec::SaltPepper { d: 0.4 }
        .apply(&fx.corpus.images[3], 5)
        .unwrap();
    let opts = DenoiseOptions {
        seed: 12,
        ..DenoiseOptions::default()
    };
    assert_eq!(
        denoise(&fx.bank, &noisy, &opts, None).unwrap(),
        denoise(&loaded, &noisy, &opts, None).unwrap()
    );
}

#[test]
fn probe_energy_matches_direct_run() {
    let fx = build_fixture(&desk()).unwrap();
    let noisy = NoiseSpec::Flips { fraction: 0.18 }
        .apply(&fx.corpus.images[0], 3)
        .unwrap();
    let s = to_bipolar(&vectorize(&noisy)).unwrap();
    let report = select_network(&fx.bank, &s, 100, 4).unwrap();
    for rec in &report.records {
        let w = fx.bank.network(rec.index);
        assert!((rec.initial_energy - energy(w, &s).unwrap()).abs() < 1e-9);
        let (_, stats) = run_iterations(
            w,
            &s,
            100,
            hopdenoise::seed::derive_seed(4, rec.index as u64),
        )
        .unwrap();
        assert!((rec.probed_energy - stats.final_energy).abs() < 1e-9);
        assert!(rec.delta >= 0.0);
    }
}

#[test]
fn rejection_threshold() {
    let fx = build_fixture(&desk()).unwrap();
    let stored = &fx.corpus.images[0];
    let opts = DenoiseOptions {
        min_delta: Some(1e6),
        ..DenoiseOptions::default()
    };
    assert!(matches!(
        denoise(&fx.bank, stored, &opts, None),
        Err(Error::Rejected { .. })
    ));
}
