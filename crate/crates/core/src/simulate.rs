//! Seeded Monte Carlo generation of time-stamped detections.
//!
//! Pair `n` of a run is emitted at `n·T`. Its randomness comes from a ChaCha8
//! stream keyed by `(seed, run_index)` and positioned at word `8n`, so every
//! pair consumes exactly four 64-bit draws in the order channel, outcome,
//! jitter A, jitter B (the jitters are drawn even when the station stays
//! dark). Any split of `[0, N)` into ranges therefore reproduces the
//! single-threaded streams bit for bit.

use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{
    analyze::CountTable,
    coincidence::aggregate,
    model::{HiddenVariableModel, SettingPair, SettingsQuad},
    Error, Result,
};

/// 32-bit words consumed per emitted pair.
const WORDS_PER_PAIR: u128 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Station {
    A,
    B,
}

impl Station {
    pub fn tag(self) -> char {
        match self {
            Station::A => 'A',
            Station::B => 'B',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub station: Station,
    pub channel: usize,
    /// Seconds.
    pub timestamp: f64,
}

/// Emission period `T`, jitter half-width `j` and coincidence window `w`.
///
/// Valid configs satisfy `2j < w < T − 2j`: the two photons of a pair always
/// fall inside the window and photons of different pairs never do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConfig {
    period: f64,
    jitter: f64,
    window: f64,
}

impl TimingConfig {
    pub fn new(period: f64, jitter: f64, window: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidTiming("period T must be positive and finite"));
        }
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(Error::InvalidTiming("jitter must be >= 0 and finite"));
        }
        if window.is_nan() || window <= 2.0 * jitter {
            return Err(Error::InvalidTiming("window must exceed twice the jitter"));
        }
        if window >= period - 2.0 * jitter {
            return Err(Error::InvalidTiming("window must be below T - 2*jitter"));
        }
        Ok(Self {
            period,
            jitter,
            window,
        })
    }

    /// `w = T/4`, `j = T/100`.
    pub fn with_period(period: f64) -> Result<Self> {
        Self::new(period, period / 100.0, period / 4.0)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn window(&self) -> f64 {
        self.window
    }
}

/// Detections of one run with fixed settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub pair: SettingPair,
    pub quad: SettingsQuad,
    /// Emitted pairs.
    pub pairs: u64,
    pub stream_a: Vec<DetectionEvent>,
    pub stream_b: Vec<DetectionEvent>,
    pub seed: u64,
    pub run_index: u64,
}

fn run_rng(seed: u64, run_index: u64, first_pair: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng.set_word_pos(first_pair as u128 * WORDS_PER_PAIR);
    rng
}

/// Generate the events of pairs `range` of one run. Streams come back in
/// emission order, which is timestamp order for valid timing.
pub fn simulate_pairs(
    model: &HiddenVariableModel,
    pair: SettingPair,
    timing: &TimingConfig,
    seed: u64,
    run_index: u64,
    range: Range<u64>,
) -> (Vec<DetectionEvent>, Vec<DetectionEvent>) {
    let cumulative = model.distribution().cumulative();
    let outcomes: Vec<[f64; 3]> = (0..model.channels())
        .map(|i| {
            let o = model.outcome(i, pair);
            [o.both, o.both + o.a_only, o.both + o.a_only + o.b_only]
        })
        .collect();

    let mut rng = run_rng(seed, run_index, range.start);
    let mut stream_a = Vec::new();
    let mut stream_b = Vec::new();
    let j = timing.jitter();
    for n in range {
        let u_channel: f64 = rng.random();
        let u_outcome: f64 = rng.random();
        let u_jitter_a: f64 = rng.random();
        let u_jitter_b: f64 = rng.random();

        let channel = cumulative
            .partition_point(|c| *c <= u_channel)
            .min(cumulative.len() - 1);
        let [both, a_cut, b_cut] = outcomes[channel];
        let (click_a, click_b) = if u_outcome < both {
            (true, true)
        } else if u_outcome < a_cut {
            (true, false)
        } else if u_outcome < b_cut {
            (false, true)
        } else {
            (false, false)
        };

        let t0 = n as f64 * timing.period();
        if click_a {
            stream_a.push(DetectionEvent {
                station: Station::A,
                channel,
                timestamp: t0 + j * (2.0 * u_jitter_a - 1.0),
            });
        }
        if click_b {
            stream_b.push(DetectionEvent {
                station: Station::B,
                channel,
                timestamp: t0 + j * (2.0 * u_jitter_b - 1.0),
            });
        }
    }
    (stream_a, stream_b)
}

pub(crate) fn sort_stream(stream: &mut [DetectionEvent]) {
    stream.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));
}

/// One run of `pairs` emitted pairs under setting pair `pair`.
pub fn run_experiment(
    model: &HiddenVariableModel,
    pair: SettingPair,
    quad: &SettingsQuad,
    pairs: u64,
    timing: &TimingConfig,
    seed: u64,
    run_index: u64,
) -> Result<RunRecord> {
    let (mut stream_a, mut stream_b) =
        simulate_pairs(model, pair, timing, seed, run_index, 0..pairs);
    sort_stream(&mut stream_a);
    sort_stream(&mut stream_b);
    Ok(RunRecord {
        pair,
        quad: *quad,
        pairs,
        stream_a,
        stream_b,
        seed,
        run_index,
    })
}

/// All four runs, run index = `SettingPair::index()`, aggregated per channel.
pub fn run_full(
    model: &HiddenVariableModel,
    quad: &SettingsQuad,
    pairs: u64,
    timing: &TimingConfig,
    seed: u64,
) -> Result<CountTable> {
    let mut runs = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let run = run_experiment(model, pair, quad, pairs, timing, seed, pair.index() as u64)?;
        runs.push(aggregate(&run, timing.window(), model.channels())?);
    }
    CountTable::new(model.channels(), pairs, runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{
        coincidence::match_events,
        model::{ChannelDistribution, SpectrographConfig},
        qm_oracle::EberhardtState,
    };
    use core::f64::consts::FRAC_PI_2;

    fn deterministic_model() -> HiddenVariableModel {
        HiddenVariableModel::factorizable(
            SpectrographConfig::unit(1).unwrap(),
            ChannelDistribution::new(vec![1.0]).unwrap(),
            [vec![1.0], vec![1.0]],
            [vec![1.0], vec![1.0]],
        )
        .unwrap()
    }

    fn quad() -> SettingsQuad {
        SettingsQuad::new(0.0, 1.0, 0.5, 1.5).unwrap()
    }

    fn halves_model(k: usize) -> HiddenVariableModel {
        HiddenVariableModel::factorizable(
            SpectrographConfig::unit(k).unwrap(),
            ChannelDistribution::uniform(k).unwrap(),
            [vec![0.5; k], vec![0.5; k]],
            [vec![0.5; k], vec![0.5; k]],
        )
        .unwrap()
    }

    #[test]
    fn timing_validation() {
        assert!(TimingConfig::new(0.0, 0.0, 0.1).is_err());
        assert!(TimingConfig::new(1.0, -0.1, 0.1).is_err());
        assert!(TimingConfig::new(1.0, 0.1, 0.2).is_err());
        assert!(TimingConfig::new(1.0, 0.1, 0.8).is_err());
        assert!(TimingConfig::new(1.0, 0.1, 0.5).is_ok());
        assert!(TimingConfig::new(1.0, 0.0, 0.5).is_ok());
        let d = TimingConfig::with_period(1e-6).unwrap();
        assert_eq!(d.window(), 0.25e-6);
    }

    #[test]
    fn zero_pairs_give_empty_streams() {
        let t = TimingConfig::with_period(1.0).unwrap();
        let run = run_experiment(&halves_model(3), SettingPair::AB, &quad(), 0, &t, 1, 0).unwrap();
        assert!(run.stream_a.is_empty() && run.stream_b.is_empty());
    }

    #[test]
    fn deterministic_detection_stream() {
        let t = TimingConfig::new(1e-6, 0.0, 0.25e-6).unwrap();
        let run = run_experiment(
            &deterministic_model(),
            SettingPair::ApB,
            &quad(),
            100,
            &t,
            9,
            2,
        )
        .unwrap();
        assert_eq!(run.stream_a.len(), 100);
        assert_eq!(run.stream_b.len(), 100);
        for (k, (a, b)) in run.stream_a.iter().zip(&run.stream_b).enumerate() {
            assert_eq!(a.timestamp, k as f64 * 1e-6);
            assert_eq!(b.timestamp, k as f64 * 1e-6);
            assert_eq!((a.channel, b.channel), (0, 0));
            assert_eq!((a.station, b.station), (Station::A, Station::B));
        }
    }

    #[test]
    fn split_ranges_reproduce_whole_run() {
        let m = halves_model(4);
        let t = TimingConfig::with_period(1.0).unwrap();
        let whole = simulate_pairs(&m, SettingPair::ABp, &t, 77, 1, 0..5000);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in [0..1, 1..1234, 1234..1235, 1235..5000] {
            let (x, y) = simulate_pairs(&m, SettingPair::ABp, &t, 77, 1, r);
            a.extend(x);
            b.extend(y);
        }
        assert_eq!(whole, (a, b));
    }

    #[test]
    fn streams_sorted_and_bounded() {
        let m = halves_model(5);
        let t = TimingConfig::with_period(2.0).unwrap();
        let run = run_experiment(&m, SettingPair::AB, &quad(), 3000, &t, 5, 0).unwrap();
        for s in [&run.stream_a, &run.stream_b] {
            assert!(s.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
            assert!(s.len() <= 3000);
            assert!(s.iter().all(|e| e.channel < 5));
        }
    }

    #[test]
    fn different_runs_use_different_streams() {
        let m = halves_model(1);
        let t = TimingConfig::with_period(1.0).unwrap();
        let a = simulate_pairs(&m, SettingPair::AB, &t, 3, 0, 0..200);
        let b = simulate_pairs(&m, SettingPair::AB, &t, 3, 1, 0..200);
        assert_ne!(a, b);
    }

    #[test]
    fn zero_joint_probability_yields_no_coincidences() {
        let s = EberhardtState::from_r2(0.1).unwrap();
        let q = s.family_optimum_quad();
        let m = HiddenVariableModel::qm_channel(
            SpectrographConfig::unit(4).unwrap(),
            ChannelDistribution::uniform(4).unwrap(),
            s.r(),
            &q,
        )
        .unwrap();
        let t = TimingConfig::with_period(1e-6).unwrap();
        let run = run_experiment(&m, SettingPair::ABp, &q, 200_000, &t, 11, 1).unwrap();
        let res = match_events(&run.stream_a, &run.stream_b, t.window()).unwrap();
        assert_eq!(res.matches.len(), 0);
        assert!(!run.stream_a.is_empty() && !run.stream_b.is_empty());
    }

    #[test]
    fn run_full_zero_pairs() {
        let t = TimingConfig::with_period(1.0).unwrap();
        let table = run_full(&halves_model(3), &quad(), 0, &t, 4).unwrap();
        for run in table.runs() {
            assert!(run
                .singles_a
                .iter()
                .chain(&run.singles_b)
                .chain(&run.coincidences)
                .all(|c| *c == 0));
        }
    }

    #[test]
    fn run_full_is_deterministic() {
        let t = TimingConfig::with_period(1.0).unwrap();
        let m = halves_model(3);
        let q = SettingsQuad::new(0.1, FRAC_PI_2, 0.0, 0.7).unwrap();
        assert_eq!(
            run_full(&m, &q, 20_000, &t, 8).unwrap(),
            run_full(&m, &q, 20_000, &t, 8).unwrap()
        );
        assert_ne!(
            run_full(&m, &q, 20_000, &t, 8).unwrap(),
            run_full(&m, &q, 20_000, &t, 9).unwrap()
        );
    }
}
