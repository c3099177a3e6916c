//! Per-channel coincidence counting from two time-tagged streams.
//!
//! Events are processed in rank order `(timestamp, station A before B,
//! index)`. Each still-free event takes the earliest free event of the other
//! station with `|Δt| ≤ w`, and both are consumed. If the two share a channel
//! the pair is a coincidence, otherwise it is cross-channel noise and is
//! discarded. The greedy pairing is a maximum matching of the in-window graph,
//! so widening `w` never lowers matches plus discards.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{
    model::SettingPair,
    simulate::{DetectionEvent, RunRecord},
    Error, Result,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Match {
    pub a: usize,
    pub b: usize,
    pub channel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Discard {
    pub a: usize,
    pub b: usize,
    pub channel_a: usize,
    pub channel_b: usize,
}

/// Matches and discards are sorted by their A-stream index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub matches: Vec<Match>,
    pub discards: Vec<Discard>,
    pub unmatched_a: usize,
    pub unmatched_b: usize,
}

#[inline]
fn in_window(x: f64, y: f64, w: f64) -> bool {
    (x - y).abs() <= w
}

fn validate(a: &[DetectionEvent], b: &[DetectionEvent], window: f64) -> Result<()> {
    if window.is_nan() || window <= 0.0 {
        return Err(Error::InvalidWindow(window));
    }
    for (station, s) in [('A', a), ('B', b)] {
        if let Some(index) = s.iter().position(|e| e.timestamp.is_nan()) {
            return Err(Error::UnsortedStream { station, index });
        }
        if let Some(index) = s.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::UnsortedStream {
                station,
                index: index + 1,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Slot {
    t: f64,
    idx: usize,
}

/// Greedy earliest-first pairing of two sorted slot lists. `free_*` is indexed
/// by stream index and updated in place.
fn greedy_pairs(
    a: &[Slot],
    b: &[Slot],
    w: f64,
    free_a: &mut [bool],
    free_b: &mut [bool],
    out: &mut Vec<(usize, usize)>,
) {
    let (mut ia, mut ib) = (0, 0);
    let (mut lo_a, mut lo_b) = (0, 0);
    loop {
        let from_a = match (a.get(ia), b.get(ib)) {
            (Some(x), Some(y)) => x.t <= y.t,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let (me, others, lo, free_me, free_other) = if from_a {
            ia += 1;
            (a[ia - 1], b, &mut lo_b, &mut *free_a, &mut *free_b)
        } else {
            ib += 1;
            (b[ib - 1], a, &mut lo_a, &mut *free_b, &mut *free_a)
        };
        if !free_me[me.idx] {
            continue;
        }
        while *lo < others.len() && others[*lo].t < me.t && !in_window(me.t, others[*lo].t, w) {
            *lo += 1;
        }
        let mut k = *lo;
        while k < others.len() {
            let o = others[k];
            if o.t > me.t && !in_window(me.t, o.t, w) {
                break;
            }
            if free_other[o.idx] && in_window(me.t, o.t, w) {
                free_me[me.idx] = false;
                free_other[o.idx] = false;
                out.push(if from_a {
                    (me.idx, o.idx)
                } else {
                    (o.idx, me.idx)
                });
                break;
            }
            k += 1;
        }
    }
}

fn slots(stream: &[DetectionEvent]) -> Vec<Slot> {
    stream
        .iter()
        .enumerate()
        .map(|(idx, e)| Slot {
            t: e.timestamp,
            idx,
        })
        .collect()
}

/// Sort-merge matcher. Both streams must be sorted by timestamp.
pub fn match_events(
    stream_a: &[DetectionEvent],
    stream_b: &[DetectionEvent],
    window: f64,
) -> Result<MatchResult> {
    validate(stream_a, stream_b, window)?;
    let mut free_a = alloc::vec![true; stream_a.len()];
    let mut free_b = alloc::vec![true; stream_b.len()];

    let mut pairs = Vec::new();
    greedy_pairs(
        &slots(stream_a),
        &slots(stream_b),
        window,
        &mut free_a,
        &mut free_b,
        &mut pairs,
    );
    let (same, cross) = pairs
        .into_iter()
        .partition(|&(i, j)| stream_a[i].channel == stream_b[j].channel);

    Ok(finish(stream_a, stream_b, same, cross, &free_a, &free_b))
}

fn finish(
    stream_a: &[DetectionEvent],
    stream_b: &[DetectionEvent],
    mut same: Vec<(usize, usize)>,
    mut cross: Vec<(usize, usize)>,
    free_a: &[bool],
    free_b: &[bool],
) -> MatchResult {
    same.sort_unstable();
    cross.sort_unstable();
    MatchResult {
        matches: same
            .into_iter()
            .map(|(a, b)| Match {
                a,
                b,
                channel: stream_a[a].channel,
            })
            .collect(),
        discards: cross
            .into_iter()
            .map(|(a, b)| Discard {
                a,
                b,
                channel_a: stream_a[a].channel,
                channel_b: stream_b[b].channel,
            })
            .collect(),
        unmatched_a: free_a.iter().filter(|f| **f).count(),
        unmatched_b: free_b.iter().filter(|f| **f).count(),
    }
}

/// Position of an event in the global processing order.
fn rank_cmp(x: (f64, u8, usize), y: (f64, u8, usize)) -> Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

/// Exhaustive reference matcher: enumerates every in-window candidate pair,
/// orders candidates by (rank of earlier endpoint, rank of later endpoint) and
/// accepts them greedily. Same contract as [`match_events`].
pub fn brute_force_match(
    stream_a: &[DetectionEvent],
    stream_b: &[DetectionEvent],
    window: f64,
) -> Result<MatchResult> {
    validate(stream_a, stream_b, window)?;
    let mut free_a = alloc::vec![true; stream_a.len()];
    let mut free_b = alloc::vec![true; stream_b.len()];

    let mut cands = Vec::new();
    for (i, ea) in stream_a.iter().enumerate() {
        for (j, eb) in stream_b.iter().enumerate() {
            if in_window(ea.timestamp, eb.timestamp, window) {
                let ra = (ea.timestamp, 0u8, i);
                let rb = (eb.timestamp, 1u8, j);
                let (first, second) = if rank_cmp(ra, rb).is_le() {
                    (ra, rb)
                } else {
                    (rb, ra)
                };
                cands.push((first, second, i, j));
            }
        }
    }
    cands.sort_by(|x, y| rank_cmp(x.0, y.0).then(rank_cmp(x.1, y.1)));
    let mut same = Vec::new();
    let mut cross = Vec::new();
    for (_, _, i, j) in cands {
        if free_a[i] && free_b[j] {
            free_a[i] = false;
            free_b[j] = false;
            if stream_a[i].channel == stream_b[j].channel {
                same.push((i, j));
            } else {
                cross.push((i, j));
            }
        }
    }
    Ok(finish(stream_a, stream_b, same, cross, &free_a, &free_b))
}

/// Singles, coincidences and noise per channel for one run.
///
/// Counts are signed so tables read from disk can carry (and be audited for)
/// negative entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelCounts {
    pub pair: SettingPair,
    pub singles_a: Vec<i64>,
    pub singles_b: Vec<i64>,
    pub coincidences: Vec<i64>,
    /// Cross-channel in-window pairs discarded by the matcher.
    pub noise: i64,
    /// Station totals as recorded by the detectors.
    pub detected_a: i64,
    pub detected_b: i64,
}

impl ChannelCounts {
    pub fn zeros(pair: SettingPair, channels: usize) -> Self {
        Self {
            pair,
            singles_a: alloc::vec![0; channels],
            singles_b: alloc::vec![0; channels],
            coincidences: alloc::vec![0; channels],
            noise: 0,
            detected_a: 0,
            detected_b: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.coincidences.len()
    }
}

/// Count one pair of streams into `channels` channels.
pub fn aggregate_streams(
    pair: SettingPair,
    stream_a: &[DetectionEvent],
    stream_b: &[DetectionEvent],
    window: f64,
    channels: usize,
) -> Result<ChannelCounts> {
    if let Some(e) = stream_a
        .iter()
        .chain(stream_b)
        .find(|e| e.channel >= channels)
    {
        return Err(Error::ChannelOutOfRange {
            channel: e.channel,
            channels,
        });
    }
    let result = match_events(stream_a, stream_b, window)?;
    let mut counts = ChannelCounts::zeros(pair, channels);
    for e in stream_a {
        counts.singles_a[e.channel] += 1;
    }
    for e in stream_b {
        counts.singles_b[e.channel] += 1;
    }
    for m in &result.matches {
        counts.coincidences[m.channel] += 1;
    }
    counts.noise = result.discards.len() as i64;
    counts.detected_a = stream_a.len() as i64;
    counts.detected_b = stream_b.len() as i64;
    Ok(counts)
}

pub fn aggregate(run: &RunRecord, window: f64, channels: usize) -> Result<ChannelCounts> {
    aggregate_streams(run.pair, &run.stream_a, &run.stream_b, window, channels)
}
