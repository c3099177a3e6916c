//! Angles, setting pairs, spectrograph channels and hidden-variable models.
//!
//! A model assigns every hidden-variable channel `i` a weight `ρᵢ` and, for each
//! of the four analyzer setting pairs, a distribution over the four joint
//! outcomes of one emitted pair (both detected, only A, only B, neither). The
//! weights never depend on the setting pair.

use alloc::{format, vec::Vec};
use core::fmt;

use crate::{qm_oracle::EberhardtState, Error, Result, PROB_TOLERANCE};

/// Analyzer angle in radians. Stored unreduced.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Result<Self> {
        if radians.is_finite() {
            Ok(Self(radians))
        } else {
            Err(Error::NonFiniteAngle(radians))
        }
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Station A settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SettingA {
    Alpha,
    AlphaPrime,
}

/// Station B settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SettingB {
    Beta,
    BetaPrime,
}

/// The four angles `α, α', β, β'` of one CH measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsQuad {
    pub alpha: Angle,
    pub alpha_prime: Angle,
    pub beta: Angle,
    pub beta_prime: Angle,
}

impl SettingsQuad {
    pub fn new(alpha: f64, alpha_prime: f64, beta: f64, beta_prime: f64) -> Result<Self> {
        Ok(Self {
            alpha: Angle::new(alpha)?,
            alpha_prime: Angle::new(alpha_prime)?,
            beta: Angle::new(beta)?,
            beta_prime: Angle::new(beta_prime)?,
        })
    }

    /// `[α, α', β, β']` in radians.
    pub fn to_array(&self) -> [f64; 4] {
        [
            self.alpha.radians(),
            self.alpha_prime.radians(),
            self.beta.radians(),
            self.beta_prime.radians(),
        ]
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn angle_a(&self, setting: SettingA) -> Angle {
        match setting {
            SettingA::Alpha => self.alpha,
            SettingA::AlphaPrime => self.alpha_prime,
        }
    }

    pub fn angle_b(&self, setting: SettingB) -> Angle {
        match setting {
            SettingB::Beta => self.beta,
            SettingB::BetaPrime => self.beta_prime,
        }
    }

    /// Angles at stations A and B for one setting pair.
    pub fn angles(&self, pair: SettingPair) -> (Angle, Angle) {
        (
            self.angle_a(pair.setting_a()),
            self.angle_b(pair.setting_b()),
        )
    }
}

/// One of the four setting pairs `{α, α'} × {β, β'}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SettingPair {
    /// `(α, β)`
    AB,
    /// `(α, β')`
    ABp,
    /// `(α', β)`
    ApB,
    /// `(α', β')`
    ApBp,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::ABp,
        SettingPair::ApB,
        SettingPair::ApBp,
    ];

    /// Position in [`SettingPair::ALL`]; also the run index used by the simulator.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            SettingPair::AB => "AB",
            SettingPair::ABp => "ABp",
            SettingPair::ApB => "ApB",
            SettingPair::ApBp => "ApBp",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == label)
    }

    pub fn setting_a(self) -> SettingA {
        match self {
            SettingPair::AB | SettingPair::ABp => SettingA::Alpha,
            SettingPair::ApB | SettingPair::ApBp => SettingA::AlphaPrime,
        }
    }

    pub fn setting_b(self) -> SettingB {
        match self {
            SettingPair::AB | SettingPair::ApB => SettingB::Beta,
            SettingPair::ABp | SettingPair::ApBp => SettingB::BetaPrime,
        }
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Uniform binning of the hidden-variable coordinate into `K` channels.
///
/// Channel `i` covers `[λ_min + i·Δλ, λ_min + (i+1)·Δλ)` and is centred on
/// `λᵢ = λ_min + (i + ½)·Δλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrographConfig {
    channels: usize,
    lambda_min: f64,
    lambda_max: f64,
}

impl SpectrographConfig {
    pub fn new(channels: usize, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidConfig("channel count must be >= 1"));
        }
        if !lambda_min.is_finite() || !lambda_max.is_finite() {
            return Err(Error::InvalidConfig("lambda range must be finite"));
        }
        if lambda_max <= lambda_min {
            return Err(Error::InvalidConfig("lambda_max must exceed lambda_min"));
        }
        let cfg = Self {
            channels,
            lambda_min,
            lambda_max,
        };
        if cfg.resolution().is_nan() || cfg.resolution() <= 0.0 {
            return Err(Error::InvalidConfig("resolution underflows to zero"));
        }
        Ok(cfg)
    }

    /// `K` channels over `[0, 1)`.
    pub fn unit(channels: usize) -> Result<Self> {
        Self::new(channels, 0.0, 1.0)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        (self.lambda_min, self.lambda_max)
    }

    /// Δλ
    pub fn resolution(&self) -> f64 {
        (self.lambda_max - self.lambda_min) / self.channels as f64
    }

    pub fn center(&self, channel: usize) -> f64 {
        self.lambda_min + (channel as f64 + 0.5) * self.resolution()
    }

    /// Channel holding `lambda`; the range is half-open.
    pub fn channel_of(&self, lambda: f64) -> Result<usize> {
        if !(lambda >= self.lambda_min && lambda < self.lambda_max) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                min: self.lambda_min,
                max: self.lambda_max,
            });
        }
        let raw = libm::floor((lambda - self.lambda_min) / self.resolution());
        Ok((raw as usize).min(self.channels - 1))
    }
}

/// Channel weights `ρᵢ`: non-negative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDistribution {
    weights: Vec<f64>,
}

impl ChannelDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no channels".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(channels: usize) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidWeights("no channels".into()));
        }
        let w = 1.0 / channels as f64;
        let mut weights = alloc::vec![w; channels];
        // absorb the rounding remainder so the sum check is exact
        let rest: f64 = weights[..channels - 1].iter().sum();
        weights[channels - 1] = 1.0 - rest;
        Self::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cumulative weights with the last positive entry (and everything after
    /// it) pinned to exactly 1, so a uniform draw in `[0, 1)` never lands on a
    /// zero-weight channel.
    pub(crate) fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cum: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = self.weights.iter().rposition(|w| *w > 0.0) {
            for c in &mut cum[last..] {
                *c = 1.0;
            }
        }
        cum
    }
}

/// Joint outcome distribution of one emitted pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbs {
    pub both: f64,
    pub a_only: f64,
    pub b_only: f64,
    pub neither: f64,
}

impl OutcomeProbs {
    pub fn new(both: f64, a_only: f64, b_only: f64, neither: f64) -> Result<Self> {
        let probs = Self {
            both,
            a_only,
            b_only,
            neither,
        };
        for (name, v) in [
            ("both", both),
            ("a_only", a_only),
            ("b_only", b_only),
            ("neither", neither),
        ] {
            check_prob(v, || format!("outcome {name}"))?;
        }
        Ok(probs)
    }

    /// Product distribution of two independent detections.
    pub fn product(p_a: f64, p_b: f64) -> Self {
        Self {
            both: p_a * p_b,
            a_only: p_a * (1.0 - p_b),
            b_only: (1.0 - p_a) * p_b,
            neither: (1.0 - p_a) * (1.0 - p_b),
        }
    }

    pub fn sum(&self) -> f64 {
        self.both + self.a_only + self.b_only + self.neither
    }

    /// Probability that station A clicks.
    pub fn marginal_a(&self) -> f64 {
        self.both + self.a_only
    }

    /// Probability that station B clicks.
    pub fn marginal_b(&self) -> f64 {
        self.both + self.b_only
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.both, self.a_only, self.b_only, self.neither]
    }
}

fn check_prob(value: f64, context: impl FnOnce() -> alloc::string::String) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            value,
            context: context(),
        })
    }
}

/// Local response: per channel, independent detection probabilities at each
/// station for each local setting.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizableResponse {
    /// `[α, α']`, each of length K.
    p_a: [Vec<f64>; 2],
    /// `[β, β']`, each of length K.
    p_b: [Vec<f64>; 2],
}

impl FactorizableResponse {
    pub fn new(p_a: [Vec<f64>; 2], p_b: [Vec<f64>; 2], channels: usize) -> Result<Self> {
        for (station, tables) in [("A", &p_a), ("B", &p_b)] {
            for (s, table) in tables.iter().enumerate() {
                if table.len() != channels {
                    return Err(Error::DimensionMismatch {
                        what: "factorizable response channels",
                        expected: channels,
                        got: table.len(),
                    });
                }
                for (i, &p) in table.iter().enumerate() {
                    check_prob(p, || format!("p{station}[setting {s}][channel {i}]"))?;
                }
            }
        }
        Ok(Self { p_a, p_b })
    }

    pub fn p_a(&self, setting: crate::model::SettingA, channel: usize) -> f64 {
        self.p_a[setting as usize][channel]
    }

    pub fn p_b(&self, setting: SettingB, channel: usize) -> f64 {
        self.p_b[setting as usize][channel]
    }

    pub fn tables(&self) -> (&[Vec<f64>; 2], &[Vec<f64>; 2]) {
        (&self.p_a, &self.p_b)
    }
}

/// Arbitrary (possibly correlated) joint response per channel and setting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointResponse {
    /// Indexed by `SettingPair::index()`, then channel.
    table: [Vec<OutcomeProbs>; 4],
}

impl JointResponse {
    pub fn new(table: [Vec<OutcomeProbs>; 4], channels: usize) -> Result<Self> {
        for pair in SettingPair::ALL {
            let rows = &table[pair.index()];
            if rows.len() != channels {
                return Err(Error::DimensionMismatch {
                    what: "joint response channels",
                    expected: channels,
                    got: rows.len(),
                });
            }
            for (channel, o) in rows.iter().enumerate() {
                let o = OutcomeProbs::new(o.both, o.a_only, o.b_only, o.neither)?;
                let sum = o.sum();
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    return Err(Error::OutcomeSum { channel, pair, sum });
                }
            }
        }
        Ok(Self { table })
    }

    pub fn get(&self, channel: usize, pair: SettingPair) -> OutcomeProbs {
        self.table[pair.index()][channel]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Factorizable(FactorizableResponse),
    Joint(JointResponse),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenVariableModel {
    config: SpectrographConfig,
    distribution: ChannelDistribution,
    response: Response,
}

impl HiddenVariableModel {
    fn check_weights(config: &SpectrographConfig, weights: &ChannelDistribution) -> Result<()> {
        if weights.len() != config.channels() {
            return Err(Error::DimensionMismatch {
                what: "channel weights",
                expected: config.channels(),
                got: weights.len(),
            });
        }
        Ok(())
    }

    /// Locally factorizable model: `p(both) = pA·pB` in every channel.
    ///
    /// `p_a` is indexed `[α, α']` and `p_b` `[β, β']`, each holding one
    /// probability per channel.
    pub fn factorizable(
        config: SpectrographConfig,
        weights: ChannelDistribution,
        p_a: [Vec<f64>; 2],
        p_b: [Vec<f64>; 2],
    ) -> Result<Self> {
        Self::check_weights(&config, &weights)?;
        let response = FactorizableResponse::new(p_a, p_b, config.channels())?;
        Ok(Self {
            config,
            distribution: weights,
            response: Response::Factorizable(response),
        })
    }

    pub fn joint(
        config: SpectrographConfig,
        weights: ChannelDistribution,
        table: [Vec<OutcomeProbs>; 4],
    ) -> Result<Self> {
        Self::check_weights(&config, &weights)?;
        let response = JointResponse::new(table, config.channels())?;
        Ok(Self {
            config,
            distribution: weights,
            response: Response::Joint(response),
        })
    }

    /// Correlated model whose every channel reproduces the Eberhardt-state
    /// statistics at `quad`. The channel label carries no information about the
    /// outcome, so per-channel counts obey the spectrograph features while the
    /// coincidences do not factorize.
    pub fn qm_channel(
        config: SpectrographConfig,
        weights: ChannelDistribution,
        r: f64,
        quad: &SettingsQuad,
    ) -> Result<Self> {
        let state = EberhardtState::new(r)?;
        let mut rows: [Vec<OutcomeProbs>; 4] = Default::default();
        for pair in SettingPair::ALL {
            let (a, b) = quad.angles(pair);
            let o = qm_outcome(&state, a, b)
                .map_err(|e| Error::Inconsistent(format!("pair {pair}: {e}")))?;
            rows[pair.index()] = alloc::vec![o; config.channels()];
        }
        Self::joint(config, weights, rows)
    }

    pub fn config(&self) -> &SpectrographConfig {
        &self.config
    }

    pub fn distribution(&self) -> &ChannelDistribution {
        &self.distribution
    }

    pub fn response(&self) -> &Response {
        &self.response
    }

    pub fn channels(&self) -> usize {
        self.config.channels()
    }

    pub fn is_factorizable(&self) -> bool {
        matches!(self.response, Response::Factorizable(_))
    }

    /// Joint outcome distribution in `channel` under `pair`.
    pub fn outcome(&self, channel: usize, pair: SettingPair) -> OutcomeProbs {
        match &self.response {
            Response::Factorizable(f) => OutcomeProbs::product(
                f.p_a(pair.setting_a(), channel),
                f.p_b(pair.setting_b(), channel),
            ),
            Response::Joint(j) => j.get(channel, pair),
        }
    }
}

/// Rounding in `P_A − P_AB` may dip a few ulps below zero.
fn clamp_tiny(v: f64) -> f64 {
    if v < 0.0 && v > -PROB_TOLERANCE {
        0.0
    } else {
        v
    }
}

fn qm_outcome(state: &EberhardtState, a: Angle, b: Angle) -> Result<OutcomeProbs> {
    let both = state.prob_joint(a, b);
    let p_a = state.prob_single_a(a);
    let p_b = state.prob_single_b(b);
    let a_only = clamp_tiny(p_a - both);
    let b_only = clamp_tiny(p_b - both);
    let neither = clamp_tiny(1.0 - both - a_only - b_only);
    OutcomeProbs::new(both, a_only, b_only, neither)
}
