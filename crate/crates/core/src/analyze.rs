//! Count-level analysis: the spectrograph feature audit, the CH statistic `J`,
//! the Γ₁/Γ₂ channel split and the bound that replaces `J ≤ 0` when only the
//! spectrograph features are assumed.
//!
//! Single counts follow the same-run convention: `N_B(β)` is read from run
//! `(α, β)` and `N_A(α')` from run `(α', β)`, so each is bounded below by the
//! coincidences of its own run.
//!
//! All verdicts are decided on integer numerators; the floating-point values in
//! the reports are for display.

use alloc::{format, vec::Vec};

use crate::{
    coincidence::ChannelCounts,
    model::{HiddenVariableModel, SettingPair},
    qm_oracle::ChTerms,
    simulate::Station,
    Error, Result,
};

/// Per-channel counts of all four runs of one CH measurement.
///
/// Construction only checks the shape; the spectrograph features are checked
/// by [`audit_features`], so tables that violate them can still be loaded and
/// reported on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    channels: usize,
    pairs: u64,
    runs: [ChannelCounts; 4],
}

impl CountTable {
    /// `runs` may come in any order but must hold each setting pair once.
    pub fn new(channels: usize, pairs: u64, runs: Vec<ChannelCounts>) -> Result<Self> {
        if runs.len() != 4 {
            return Err(Error::DimensionMismatch {
                what: "runs in count table",
                expected: 4,
                got: runs.len(),
            });
        }
        let mut slots: [Option<ChannelCounts>; 4] = Default::default();
        for run in runs {
            for (what, len) in [
                ("singles_A", run.singles_a.len()),
                ("singles_B", run.singles_b.len()),
                ("coincidences", run.coincidences.len()),
            ] {
                if len != channels {
                    return Err(Error::DimensionMismatch {
                        what,
                        expected: channels,
                        got: len,
                    });
                }
            }
            let i = run.pair.index();
            if slots[i].is_some() {
                return Err(Error::Precondition(format!("run {} given twice", run.pair)));
            }
            slots[i] = Some(run);
        }
        let runs = slots.map(|r| r.expect("four distinct pairs"));
        Ok(Self {
            channels,
            pairs,
            runs,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Emitted pairs per run.
    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    /// Runs in [`SettingPair::ALL`] order.
    pub fn runs(&self) -> &[ChannelCounts; 4] {
        &self.runs
    }

    pub fn run(&self, pair: SettingPair) -> &ChannelCounts {
        &self.runs[pair.index()]
    }

    fn coinc(&self, pair: SettingPair, channel: usize) -> i64 {
        self.run(pair).coincidences[channel]
    }

    /// Per-channel sum `N(α,β) + N(α',β) + N(α',β') − N(α,β')
    /// − N_A(α') − N_B(β)`, i.e. the channel's contribution to `N·J`.
    fn channel_j_numerator(&self, i: usize) -> i64 {
        use SettingPair::*;
        self.coinc(AB, i) - self.coinc(ABp, i) + self.coinc(ApB, i) + self.coinc(ApBp, i)
            - self.run(AB).singles_b[i]
            - self.run(ApB).singles_a[i]
    }
}

/// The three spectrograph features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    /// Counts are non-negative.
    NonNegative,
    /// Channel singles add up to the station's detected total.
    ChannelSum,
    /// Coincidences never exceed either station's singles in a channel.
    CoincidenceBound,
}

impl Feature {
    pub fn number(self) -> u8 {
        match self {
            Feature::NonNegative => 1,
            Feature::ChannelSum => 2,
            Feature::CoincidenceBound => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub feature: Feature,
    pub pair: SettingPair,
    pub channel: Option<usize>,
    /// `None` for coincidence and noise counts.
    pub station: Option<Station>,
    pub value: i64,
    pub limit: i64,
}

/// Station total of one run, read both ways: as detections and against the
/// emitted pair count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StationTotal {
    pub pair: SettingPair,
    pub station: Station,
    pub channel_sum: i64,
    pub detected: i64,
    pub emitted: u64,
}

impl StationTotal {
    pub fn matches_detected(&self) -> bool {
        self.channel_sum == self.detected
    }

    pub fn equals_emitted(&self) -> bool {
        u64::try_from(self.channel_sum).is_ok_and(|s| s == self.emitted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    pub totals: Vec<StationTotal>,
}

impl AuditReport {
    /// Features #1–#3 hold, with #2 read against detected totals.
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn audit_features(table: &CountTable) -> AuditReport {
    let mut violations = Vec::new();
    let mut totals = Vec::new();
    for run in table.runs() {
        let pair = run.pair;
        let mut negative = |channel, station, value: i64| {
            if value < 0 {
                violations.push(Violation {
                    feature: Feature::NonNegative,
                    pair,
                    channel,
                    station,
                    value,
                    limit: 0,
                });
            }
        };
        for i in 0..table.channels() {
            negative(Some(i), Some(Station::A), run.singles_a[i]);
            negative(Some(i), Some(Station::B), run.singles_b[i]);
            negative(Some(i), None, run.coincidences[i]);
        }
        negative(None, None, run.noise);
        negative(None, Some(Station::A), run.detected_a);
        negative(None, Some(Station::B), run.detected_b);

        for (station, singles, detected) in [
            (Station::A, &run.singles_a, run.detected_a),
            (Station::B, &run.singles_b, run.detected_b),
        ] {
            let total = StationTotal {
                pair,
                station,
                channel_sum: singles.iter().sum(),
                detected,
                emitted: table.pairs(),
            };
            if !total.matches_detected() {
                violations.push(Violation {
                    feature: Feature::ChannelSum,
                    pair,
                    channel: None,
                    station: Some(station),
                    value: total.channel_sum,
                    limit: detected,
                });
            }
            totals.push(total);
        }

        for i in 0..table.channels() {
            let limit = run.singles_a[i].min(run.singles_b[i]);
            if run.coincidences[i] > limit {
                violations.push(Violation {
                    feature: Feature::CoincidenceBound,
                    pair,
                    channel: Some(i),
                    station: None,
                    value: run.coincidences[i],
                    limit,
                });
            }
        }
    }
    AuditReport { violations, totals }
}

/// `J` estimated from counts, normalised by emitted pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JEstimate {
    pub j: f64,
    pub terms: ChTerms,
    /// `N·J`, exact.
    pub numerator: i64,
    /// Binomial standard error of `J`, runs treated as independent.
    pub sigma: f64,
}

/// `J` from the channel-summed counts of a table.
///
/// Per run, `J` depends on a single multinomial cell: B-only detections in
/// `(α,β)`, A-only in `(α',β)`, coincidences in `(α,β')` and `(α',β')`. The
/// standard error adds the four binomial variances `p(1−p)/N`.
pub fn ch_j_from_counts(table: &CountTable) -> Result<JEstimate> {
    use SettingPair::*;
    if table.pairs() == 0 {
        return Err(Error::ZeroPairs);
    }
    let n = table.pairs() as f64;
    let sum = |v: &[i64]| -> i64 { v.iter().sum() };
    let c = |p: SettingPair| sum(&table.run(p).coincidences);
    let single_b = sum(&table.run(AB).singles_b);
    let single_a = sum(&table.run(ApB).singles_a);
    let numerator = c(AB) - c(ABp) + c(ApB) + c(ApBp) - single_b - single_a;
    let terms = ChTerms {
        ab: c(AB) as f64 / n,
        abp: c(ABp) as f64 / n,
        apb: c(ApB) as f64 / n,
        apbp: c(ApBp) as f64 / n,
        single_b: single_b as f64 / n,
        single_a: single_a as f64 / n,
    };
    let var = [single_b - c(AB), single_a - c(ApB), c(ABp), c(ApBp)]
        .iter()
        .map(|&k| {
            let p = (k as f64 / n).clamp(0.0, 1.0);
            p * (1.0 - p) / n
        })
        .sum::<f64>();
    Ok(JEstimate {
        j: numerator as f64 / n,
        terms,
        numerator,
        sigma: libm::sqrt(var),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaSet {
    One,
    Two,
}

/// Γ₁: channels with `N(α',β') ≤ N(α,β')`; Γ₂: the rest.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GammaPartition {
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
}

impl GammaPartition {
    pub fn set_of(&self, channel: usize) -> GammaSet {
        if self.gamma2.binary_search(&channel).is_ok() {
            GammaSet::Two
        } else {
            GammaSet::One
        }
    }
}

pub fn gamma_partition(table: &CountTable) -> GammaPartition {
    let (gamma1, gamma2) = (0..table.channels())
        .partition(|&i| table.coinc(SettingPair::ApBp, i) <= table.coinc(SettingPair::ABp, i));
    GammaPartition { gamma1, gamma2 }
}

/// `2 Σ_{Γ₂} [N(α',β') − N(α,β')]`, exact.
fn correction_numerator(table: &CountTable, partition: &GammaPartition) -> i64 {
    2 * partition
        .gamma2
        .iter()
        .map(|&i| table.coinc(SettingPair::ApBp, i) - table.coinc(SettingPair::ABp, i))
        .sum::<i64>()
}

/// `(2/N) Σ_{Γ₂} [N(α',β') − N(α,β')]`. Non-negative, and zero exactly when Γ₂ is empty.
pub fn correction_term(table: &CountTable, partition: &GammaPartition) -> Result<f64> {
    if table.pairs() == 0 {
        return Err(Error::ZeroPairs);
    }
    Ok(correction_numerator(table, partition) as f64 / table.pairs() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelResidual {
    pub channel: usize,
    pub set: GammaSet,
    /// Left-hand side of the per-channel inequality (≤ 0 in Γ₁, < 0 in Γ₂).
    pub value: i64,
}

impl ChannelResidual {
    pub fn holds(&self) -> bool {
        match self.set {
            GammaSet::One => self.value <= 0,
            GammaSet::Two => self.value < 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdicts {
    /// `J ≤ 0`
    pub ch: bool,
    /// `J < correction` if Γ₂ is non-empty, else `J ≤ 0`.
    pub spectrograph: bool,
    /// Every per-channel residual has its required sign.
    pub residuals: bool,
    pub audit: bool,
}

impl Verdicts {
    pub fn all_hold(&self) -> bool {
        self.ch && self.spectrograph && self.residuals && self.audit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JReport {
    pub estimate: JEstimate,
    pub correction: f64,
    pub correction_numerator: i64,
    pub partition: GammaPartition,
    pub residuals: Vec<ChannelResidual>,
    pub verdicts: Verdicts,
}

impl JReport {
    pub fn j(&self) -> f64 {
        self.estimate.j
    }
}

/// Evaluate the spectrograph bound on a table that satisfies features #1–#3.
pub fn spectrograph_inequality(table: &CountTable) -> Result<JReport> {
    let audit = audit_features(table);
    if !audit.passes() {
        return Err(Error::AuditFailed(audit.violations.len()));
    }
    let estimate = ch_j_from_counts(table)?;
    let partition = gamma_partition(table);
    let correction_numerator = correction_numerator(table, &partition);
    let correction = correction_term(table, &partition)?;

    let residuals: Vec<ChannelResidual> = (0..table.channels())
        .map(|i| {
            let set = partition.set_of(i);
            let mut value = table.channel_j_numerator(i);
            if set == GammaSet::Two {
                // swap the roles of N(α,β') and N(α',β')
                let d = table.coinc(SettingPair::ApBp, i) - table.coinc(SettingPair::ABp, i);
                value -= 2 * d;
            }
            ChannelResidual {
                channel: i,
                set,
                value,
            }
        })
        .collect();

    let spectrograph = if partition.gamma2.is_empty() {
        estimate.numerator <= 0
    } else {
        estimate.numerator < correction_numerator
    };
    let verdicts = Verdicts {
        ch: estimate.numerator <= 0,
        spectrograph,
        residuals: residuals.iter().all(ChannelResidual::holds),
        audit: true,
    };
    Ok(JReport {
        estimate,
        correction,
        correction_numerator,
        partition,
        residuals,
        verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicCheck {
    pub value: f64,
    /// `−XY ≤ value`
    pub lower: bool,
    /// `value ≤ 0`
    pub upper: bool,
}

/// `xy − xy' + x'y + x'y' − Xy − Yx'` for `0 ≤ x, x' ≤ X` and `0 ≤ y, y' ≤ Y`.
pub fn ch_algebraic_check(
    x: f64,
    x_prime: f64,
    y: f64,
    y_prime: f64,
    cap_x: f64,
    cap_y: f64,
) -> Result<AlgebraicCheck> {
    let inputs = [x, x_prime, y, y_prime, cap_x, cap_y];
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!(
            "non-finite input in {inputs:?}"
        )));
    }
    let in_box = |v: f64, cap: f64| (0.0..=cap).contains(&v);
    if !(in_box(x, cap_x) && in_box(x_prime, cap_x) && in_box(y, cap_y) && in_box(y_prime, cap_y)) {
        return Err(Error::Precondition(format!(
            "need 0 <= x, x' <= X and 0 <= y, y' <= Y, got {inputs:?}"
        )));
    }
    let value = x * y - x * y_prime + x_prime * y + x_prime * y_prime - cap_x * y - cap_y * x_prime;
    Ok(AlgebraicCheck {
        value,
        lower: -cap_x * cap_y <= value,
        upper: value <= 0.0,
    })
}

/// `J` expected from model probabilities: channel-weighted joint and single
/// detection probabilities, with the singles taken from the same runs as in
/// [`ch_j_from_counts`].
pub fn expected_terms(model: &HiddenVariableModel) -> ChTerms {
    use SettingPair::*;
    let mut t = ChTerms::default();
    for (i, &rho) in model.distribution().weights().iter().enumerate() {
        t.ab += rho * model.outcome(i, AB).both;
        t.abp += rho * model.outcome(i, ABp).both;
        t.apb += rho * model.outcome(i, ApB).both;
        t.apbp += rho * model.outcome(i, ApBp).both;
        t.single_b += rho * model.outcome(i, AB).marginal_b();
        t.single_a += rho * model.outcome(i, ApB).marginal_a();
    }
    t
}

/// Per-channel singles of the four runs, indexed by [`SettingPair::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinglesTable {
    pub singles_a: [Vec<i64>; 4],
    pub singles_b: [Vec<i64>; 4],
}

impl SinglesTable {
    /// Every station, run and channel holding `s` counts.
    pub fn uniform(channels: usize, s: i64) -> Self {
        let row = alloc::vec![s; channels];
        Self {
            singles_a: core::array::from_fn(|_| row.clone()),
            singles_b: core::array::from_fn(|_| row.clone()),
        }
    }

    pub fn from_counts(table: &CountTable) -> Self {
        Self {
            singles_a: core::array::from_fn(|k| table.runs()[k].singles_a.clone()),
            singles_b: core::array::from_fn(|k| table.runs()[k].singles_b.clone()),
        }
    }

    pub fn channels(&self) -> usize {
        self.singles_a[0].len()
    }
}

/// Fill in coincidences that maximise `J` subject only to features #1–#3:
/// the three positive coincidence terms take `min(N_A, N_B)` of their own
/// run, the negative one is zero.
pub fn max_j_under_realism(singles: &SinglesTable, pairs: u64) -> Result<(CountTable, f64)> {
    if pairs == 0 {
        return Err(Error::ZeroPairs);
    }
    let k = singles.channels();
    for pair in SettingPair::ALL {
        for (station, row) in [
            ('A', &singles.singles_a[pair.index()]),
            ('B', &singles.singles_b[pair.index()]),
        ] {
            if row.len() != k {
                return Err(Error::InconsistentSingles(format!(
                    "run {pair} station {station} has {} channels, expected {k}",
                    row.len()
                )));
            }
            if let Some(i) = row.iter().position(|v| *v < 0) {
                return Err(Error::InconsistentSingles(format!(
                    "run {pair} station {station} channel {i} is negative"
                )));
            }
            let total: i64 = row.iter().sum();
            if u64::try_from(total).map_or(true, |t| t > pairs) {
                return Err(Error::InconsistentSingles(format!(
                    "run {pair} station {station} sums to {total} > N = {pairs}"
                )));
            }
        }
    }

    let runs = SettingPair::ALL
        .into_iter()
        .map(|pair| {
            let sa = singles.singles_a[pair.index()].clone();
            let sb = singles.singles_b[pair.index()].clone();
            let coincidences = if pair == SettingPair::ABp {
                alloc::vec![0; k]
            } else {
                sa.iter().zip(&sb).map(|(a, b)| *a.min(b)).collect()
            };
            ChannelCounts {
                pair,
                detected_a: sa.iter().sum(),
                detected_b: sb.iter().sum(),
                singles_a: sa,
                singles_b: sb,
                coincidences,
                noise: 0,
            }
        })
        .collect();
    let table = CountTable::new(k, pairs, runs)?;
    let j = ch_j_from_counts(&table)?.j;
    Ok((table, j))
}
