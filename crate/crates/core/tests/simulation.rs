use hvspec_core::{
    aggregate, audit_features, ch_j_from_counts, expected_terms, run_experiment, run_full,
    spectrograph_inequality, ChannelDistribution, EberhardtState, HiddenVariableModel, SettingPair,
    SettingsQuad, SpectrographConfig, TimingConfig,
};

fn five_sigma(count: i64, n: u64, p: f64) -> bool {
    let n = n as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    (count as f64 - n * p).abs() <= 5.0 * sigma.max(1e-9)
}

fn timing() -> TimingConfig {
    TimingConfig::with_period(1e-6).unwrap()
}

fn quad() -> SettingsQuad {
    SettingsQuad::new(0.2, 1.1, 0.4, 2.0).unwrap()
}

#[test]
fn halves_model_binomial_coincidences() {
    let model = HiddenVariableModel::factorizable(
        SpectrographConfig::unit(1).unwrap(),
        ChannelDistribution::new(vec![1.0]).unwrap(),
        [vec![0.5], vec![0.5]],
        [vec![0.5], vec![0.5]],
    )
    .unwrap();
    let n = 1_000_000;
    let table = run_full(&model, &quad(), n, &timing(), 12345).unwrap();
    for run in table.runs() {
        let c = run.coincidences[0];
        assert!((c - 250_000).abs() as f64 <= 5.0 * 433.0, "{c}");
        assert_eq!(run.noise, 0);
    }
}

fn skewed_factorizable() -> HiddenVariableModel {
    HiddenVariableModel::factorizable(
        SpectrographConfig::new(3, -1.0, 2.0).unwrap(),
        ChannelDistribution::new(vec![0.2, 0.5, 0.3]).unwrap(),
        [vec![0.9, 0.1, 0.5], vec![0.3, 0.7, 0.05]],
        [vec![0.6, 0.2, 0.95], vec![0.0, 0.4, 0.8]],
    )
    .unwrap()
}

#[test]
fn per_channel_frequencies_converge() {
    let state = EberhardtState::from_r2(0.1).unwrap();
    let qm = HiddenVariableModel::qm_channel(
        SpectrographConfig::unit(3).unwrap(),
        ChannelDistribution::new(vec![0.6, 0.1, 0.3]).unwrap(),
        state.r(),
        &quad(),
    )
    .unwrap();
    let n = 1_000_000;
    for (seed, model) in [(1u64, skewed_factorizable()), (2, qm)] {
        let table = run_full(&model, &quad(), n, &timing(), seed).unwrap();
        for run in table.runs() {
            for i in 0..model.channels() {
                let rho = model.distribution().weights()[i];
                let o = model.outcome(i, run.pair);
                assert!(five_sigma(run.singles_a[i], n, rho * o.marginal_a()));
                assert!(five_sigma(run.singles_b[i], n, rho * o.marginal_b()));
                assert!(five_sigma(run.coincidences[i], n, rho * o.both));
            }
        }
    }
}

#[test]
fn factorizable_counts_factorize_in_expectation() {
    // expected N_AB_i = N ρ_i pA pB
    let model = skewed_factorizable();
    let n = 1_000_000;
    let table = run_full(&model, &quad(), n, &timing(), 77).unwrap();
    for run in table.runs() {
        for i in 0..3 {
            let rho = model.distribution().weights()[i];
            let o = model.outcome(i, run.pair);
            // conditional on channel i the stations are independent
            assert!((o.both - o.marginal_a() * o.marginal_b()).abs() < 1e-15);
            assert!(five_sigma(run.coincidences[i], n, rho * o.both));
        }
    }
}

#[test]
fn pipeline_respects_features() {
    let model = skewed_factorizable();
    let t = timing();
    for pair in SettingPair::ALL {
        let run =
            run_experiment(&model, pair, &quad(), 50_000, &t, 5, pair.index() as u64).unwrap();
        let counts = aggregate(&run, t.window(), 3).unwrap();
        assert_eq!(
            counts.singles_a.iter().sum::<i64>(),
            run.stream_a.len() as i64
        );
        assert_eq!(
            counts.singles_b.iter().sum::<i64>(),
            run.stream_b.len() as i64
        );
        for i in 0..3 {
            assert!(counts.coincidences[i] <= counts.singles_a[i].min(counts.singles_b[i]));
        }
    }
}

#[test]
fn factorizable_simulation_respects_ch() {
    let model = skewed_factorizable();
    let table = run_full(&model, &quad(), 500_000, &timing(), 3).unwrap();
    assert!(audit_features(&table).passes());
    let est = ch_j_from_counts(&table).unwrap();
    assert!(est.j <= 5.0 * est.sigma);
    let exp = expected_terms(&model).j();
    assert!((est.j - exp).abs() <= 5.0 * est.sigma);
}

#[test]
fn qm_channel_simulation_violates_ch_but_not_spectrograph_bound() {
    let state = EberhardtState::from_r2(0.1).unwrap();
    let quad = state.family_optimum_quad();
    let model = HiddenVariableModel::qm_channel(
        SpectrographConfig::unit(6).unwrap(),
        ChannelDistribution::uniform(6).unwrap(),
        state.r(),
        &quad,
    )
    .unwrap();
    let table = run_full(&model, &quad, 1_000_000, &timing(), 42).unwrap();
    let rep = spectrograph_inequality(&table).unwrap();
    let expected = state.family_optimum_j();
    assert!((expected_terms(&model).j() - expected).abs() < 1e-12);
    assert!(rep.j() > 0.0);
    assert!((rep.j() - expected).abs() <= 5.0 * rep.estimate.sigma);
    assert!(rep.correction > 0.0);
    assert!(!rep.verdicts.ch);
    assert!(rep.verdicts.spectrograph && rep.verdicts.residuals);
}
