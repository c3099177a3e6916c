//! Random instances for randomized verification.
//!
//! Draw order is fixed per function so a seeded generator always produces the
//! same instance.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::{
    analyze::CountTable,
    coincidence::ChannelCounts,
    model::{
        ChannelDistribution, HiddenVariableModel, SettingPair, SettingsQuad, SpectrographConfig,
    },
    Result,
};

/// A table obeying features #1–#3: per run and channel, singles uniform in
/// `[0, ⌊N/K⌋]` (A then B), then coincidences uniform in `[0, min]`.
pub fn realist_table<R: Rng + ?Sized>(
    rng: &mut R,
    channels: usize,
    pairs: u64,
) -> Result<CountTable> {
    let cap = (pairs / channels.max(1) as u64) as i64;
    let runs = SettingPair::ALL
        .into_iter()
        .map(|pair| {
            let mut c = ChannelCounts::zeros(pair, channels);
            for i in 0..channels {
                c.singles_a[i] = rng.random_range(0..=cap);
                c.singles_b[i] = rng.random_range(0..=cap);
                let hi = c.singles_a[i].min(c.singles_b[i]);
                c.coincidences[i] = rng.random_range(0..=hi);
            }
            c.detected_a = c.singles_a.iter().sum();
            c.detected_b = c.singles_b.iter().sum();
            c
        })
        .collect();
    CountTable::new(channels, pairs, runs)
}

/// Channel weights from normalised uniform draws.
pub fn weights<R: Rng + ?Sized>(rng: &mut R, channels: usize) -> Result<ChannelDistribution> {
    let raw: Vec<f64> = (0..channels).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = w[..channels - 1].iter().sum();
    w[channels - 1] = 1.0 - head;
    ChannelDistribution::new(w)
}

/// Factorizable model with `1..=max_channels` channels and uniform response
/// tables.
pub fn factorizable_model<R: Rng + ?Sized>(
    rng: &mut R,
    max_channels: usize,
) -> Result<HiddenVariableModel> {
    let k = rng.random_range(1..=max_channels);
    let w = weights(rng, k)?;
    let mut table = || -> Vec<f64> { (0..k).map(|_| rng.random::<f64>()).collect() };
    let p_a = [table(), table()];
    let p_b = [table(), table()];
    HiddenVariableModel::factorizable(SpectrographConfig::unit(k)?, w, p_a, p_b)
}

/// Four angles uniform in `[0, π)`.
pub fn quad<R: Rng + ?Sized>(rng: &mut R) -> SettingsQuad {
    let mut a = || rng.random::<f64>() * PI;
    SettingsQuad::new(a(), a(), a(), a()).expect("finite")
}

/// `(x, x', y, y', X, Y)` with `X, Y` uniform in `(0, 10]` and the rest uniform
/// in their boxes.
pub fn in_box_tuple<R: Rng + ?Sized>(rng: &mut R) -> [f64; 6] {
    let cap_x = 10.0 * (1.0 - rng.random::<f64>());
    let cap_y = 10.0 * (1.0 - rng.random::<f64>());
    let mut draw = |cap: f64| rng.random::<f64>() * cap;
    let (x, xp) = (draw(cap_x), draw(cap_x));
    let (y, yp) = (draw(cap_y), draw(cap_y));
    [x, xp, y, yp, cap_x, cap_y]
}
