//! Multi-threaded simulation with results identical to the sequential core.
//!
//! Each run is cut into fixed-size batches of pairs. A batch seeks the run's
//! RNG stream to its first pair, so concatenating batches in order reproduces
//! the sequential streams exactly.

use rayon::prelude::*;

use hvspec_core::{
    aggregate, simulate::simulate_pairs, CountTable, DetectionEvent, HiddenVariableModel,
    RunRecord, SettingPair, SettingsQuad, TimingConfig,
};

use crate::CliError;

pub const DEFAULT_BATCH: u64 = 1 << 16;

fn sort_stream(stream: &mut [DetectionEvent]) {
    stream.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));
}

#[allow(clippy::too_many_arguments)]
pub fn run_experiment(
    model: &HiddenVariableModel,
    pair: SettingPair,
    quad: &SettingsQuad,
    pairs: u64,
    timing: &TimingConfig,
    seed: u64,
    run_index: u64,
    batch: u64,
) -> RunRecord {
    let batch = batch.max(1);
    let parts: Vec<_> = (0..pairs.div_ceil(batch))
        .into_par_iter()
        .map(|b| {
            let range = b * batch..((b + 1) * batch).min(pairs);
            simulate_pairs(model, pair, timing, seed, run_index, range)
        })
        .collect();
    let (mut stream_a, mut stream_b) = (Vec::new(), Vec::new());
    for (a, b) in parts {
        stream_a.extend(a);
        stream_b.extend(b);
    }
    sort_stream(&mut stream_a);
    sort_stream(&mut stream_b);
    RunRecord {
        pair,
        quad: *quad,
        pairs,
        stream_a,
        stream_b,
        seed,
        run_index,
    }
}

/// All four runs with run index = `SettingPair::index()`.
pub fn run_all(
    model: &HiddenVariableModel,
    quad: &SettingsQuad,
    pairs: u64,
    timing: &TimingConfig,
    seed: u64,
    batch: u64,
) -> Vec<RunRecord> {
    SettingPair::ALL
        .par_iter()
        .map(|&pair| {
            run_experiment(
                model,
                pair,
                quad,
                pairs,
                timing,
                seed,
                pair.index() as u64,
                batch,
            )
        })
        .collect()
}

pub fn count_runs(
    model: &HiddenVariableModel,
    runs: &[RunRecord],
    timing: &TimingConfig,
) -> Result<CountTable, CliError> {
    let counts = runs
        .par_iter()
        .map(|run| aggregate(run, timing.window(), model.channels()))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs = runs.first().map_or(0, |r| r.pairs);
    Ok(CountTable::new(model.channels(), pairs, counts)?)
}

pub fn run_full(
    model: &HiddenVariableModel,
    quad: &SettingsQuad,
    pairs: u64,
    timing: &TimingConfig,
    seed: u64,
) -> Result<CountTable, CliError> {
    let runs = run_all(model, quad, pairs, timing, seed, DEFAULT_BATCH);
    count_runs(model, &runs, timing)
}
