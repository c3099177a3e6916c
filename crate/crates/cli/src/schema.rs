//! Serialized forms of models, configs, count tables and reports.
//!
//! Field names follow the documented file formats. Every input struct rejects
//! unknown fields so typos fail loudly instead of falling back to defaults.

use serde::{Deserialize, Serialize};

use hvspec_core::{
    analyze::{GammaSet, SinglesTable, StationTotal, Violation},
    model::OutcomeProbs,
    qm_oracle::ScanResult,
    AuditReport, ChTerms, ChannelCounts, ChannelDistribution, CountTable, HiddenVariableModel,
    JReport, QmJReport, SettingPair, SettingsQuad, SpectrographConfig, Station, TimingConfig,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadJson {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub beta_prime: f64,
}

impl QuadJson {
    pub fn to_quad(self) -> Result<SettingsQuad, CliError> {
        Ok(SettingsQuad::new(
            self.alpha,
            self.alpha_prime,
            self.beta,
            self.beta_prime,
        )?)
    }
}

impl From<&SettingsQuad> for QuadJson {
    fn from(q: &SettingsQuad) -> Self {
        let [alpha, alpha_prime, beta, beta_prime] = q.to_array();
        Self {
            alpha,
            alpha_prime,
            beta,
            beta_prime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Factorizable,
    Joint,
    QmChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationA {
    pub alpha: Vec<f64>,
    pub alpha_prime: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationB {
    pub beta: Vec<f64>,
    pub beta_prime: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeJson {
    pub both: f64,
    pub a_only: f64,
    pub b_only: f64,
    pub neither: f64,
}

/// Per setting-pair label, one outcome distribution per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointJson {
    #[serde(rename = "AB")]
    pub ab: Vec<OutcomeJson>,
    #[serde(rename = "ABp")]
    pub abp: Vec<OutcomeJson>,
    #[serde(rename = "ApB")]
    pub apb: Vec<OutcomeJson>,
    #[serde(rename = "ApBp")]
    pub apbp: Vec<OutcomeJson>,
}

/// Model description file.
///
/// `kind` selects which of the optional groups must be present:
/// `factorizable` needs `p_a` and `p_b`, `joint` needs `joint`, and
/// `qm_channel` needs `r` and `quad`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub channel_count: usize,
    pub lambda_range: [f64; 2],
    pub weights: Vec<f64>,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_a: Option<StationA>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_b: Option<StationB>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadJson>,
}

fn missing(kind: &str, field: &str) -> CliError {
    CliError::Usage(format!("model kind {kind} requires field `{field}`"))
}

fn unexpected(kind: &str, field: &str) -> CliError {
    CliError::Usage(format!("model kind {kind} does not take field `{field}`"))
}

impl ModelJson {
    pub fn to_model(&self) -> Result<HiddenVariableModel, CliError> {
        let config = SpectrographConfig::new(
            self.channel_count,
            self.lambda_range[0],
            self.lambda_range[1],
        )?;
        let weights = ChannelDistribution::new(self.weights.clone())?;
        let present = [
            ("p_a", self.p_a.is_some()),
            ("p_b", self.p_b.is_some()),
            ("joint", self.joint.is_some()),
            ("r", self.r.is_some()),
            ("quad", self.quad.is_some()),
        ];
        let (label, needed): (&str, &[&str]) = match self.kind {
            ModelKind::Factorizable => ("factorizable", &["p_a", "p_b"]),
            ModelKind::Joint => ("joint", &["joint"]),
            ModelKind::QmChannel => ("qm_channel", &["r", "quad"]),
        };
        for (field, is_set) in present {
            match (needed.contains(&field), is_set) {
                (true, false) => return Err(missing(label, field)),
                (false, true) => return Err(unexpected(label, field)),
                _ => {}
            }
        }

        let model = match self.kind {
            ModelKind::Factorizable => {
                let (a, b) = (self.p_a.clone().unwrap(), self.p_b.clone().unwrap());
                HiddenVariableModel::factorizable(
                    config,
                    weights,
                    [a.alpha, a.alpha_prime],
                    [b.beta, b.beta_prime],
                )?
            }
            ModelKind::Joint => {
                let j = self.joint.as_ref().unwrap();
                let convert = |rows: &[OutcomeJson]| -> Result<Vec<OutcomeProbs>, CliError> {
                    rows.iter()
                        .map(|o| Ok(OutcomeProbs::new(o.both, o.a_only, o.b_only, o.neither)?))
                        .collect()
                };
                let table = [
                    convert(&j.ab)?,
                    convert(&j.abp)?,
                    convert(&j.apb)?,
                    convert(&j.apbp)?,
                ];
                HiddenVariableModel::joint(config, weights, table)?
            }
            ModelKind::QmChannel => HiddenVariableModel::qm_channel(
                config,
                weights,
                self.r.unwrap(),
                &self.quad.unwrap().to_quad()?,
            )?,
        };
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingJson {
    #[serde(rename = "T")]
    pub period: f64,
    /// Defaults to `T/100`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    /// Defaults to `T/4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

impl TimingJson {
    pub fn to_timing(self) -> Result<TimingConfig, CliError> {
        let jitter = self.jitter.unwrap_or(self.period / 100.0);
        let window = self.window.unwrap_or(self.period / 4.0);
        Ok(TimingConfig::new(self.period, jitter, window)?)
    }
}

impl From<&TimingConfig> for TimingJson {
    fn from(t: &TimingConfig) -> Self {
        Self {
            period: t.period(),
            jitter: Some(t.jitter()),
            window: Some(t.window()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelJson,
    pub quad: QuadJson,
    #[serde(rename = "N")]
    pub pairs: u64,
    pub timing: TimingJson,
    pub seed: u64,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct RunCountsJson {
    pub singles_A: Vec<i64>,
    pub singles_B: Vec<i64>,
    pub coincidences: Vec<i64>,
    pub noise: i64,
    /// Station detection totals; default to the channel sums when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected_A: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected_B: Option<i64>,
}

impl RunCountsJson {
    fn to_counts(&self, pair: SettingPair) -> ChannelCounts {
        ChannelCounts {
            pair,
            singles_a: self.singles_A.clone(),
            singles_b: self.singles_B.clone(),
            coincidences: self.coincidences.clone(),
            noise: self.noise,
            detected_a: self
                .detected_A
                .unwrap_or_else(|| self.singles_A.iter().sum()),
            detected_b: self
                .detected_B
                .unwrap_or_else(|| self.singles_B.iter().sum()),
        }
    }
}

impl From<&ChannelCounts> for RunCountsJson {
    fn from(c: &ChannelCounts) -> Self {
        Self {
            singles_A: c.singles_a.clone(),
            singles_B: c.singles_b.clone(),
            coincidences: c.coincidences.clone(),
            noise: c.noise,
            detected_A: Some(c.detected_a),
            detected_B: Some(c.detected_b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountTableJson {
    #[serde(rename = "K")]
    pub channels: usize,
    #[serde(rename = "N")]
    pub pairs: u64,
    #[serde(rename = "AB")]
    pub ab: RunCountsJson,
    #[serde(rename = "ABp")]
    pub abp: RunCountsJson,
    #[serde(rename = "ApB")]
    pub apb: RunCountsJson,
    #[serde(rename = "ApBp")]
    pub apbp: RunCountsJson,
}

impl CountTableJson {
    pub fn to_table(&self) -> Result<CountTable, CliError> {
        let runs = [&self.ab, &self.abp, &self.apb, &self.apbp]
            .into_iter()
            .zip(SettingPair::ALL)
            .map(|(r, pair)| r.to_counts(pair))
            .collect();
        Ok(CountTable::new(self.channels, self.pairs, runs)?)
    }
}

impl From<&CountTable> for CountTableJson {
    fn from(t: &CountTable) -> Self {
        let r = t.runs();
        Self {
            channels: t.channels(),
            pairs: t.pairs(),
            ab: (&r[0]).into(),
            abp: (&r[1]).into(),
            apb: (&r[2]).into(),
            apbp: (&r[3]).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct RunSinglesJson {
    pub singles_A: Vec<i64>,
    pub singles_B: Vec<i64>,
}

/// Input of `maximize` when singles come from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglesJson {
    #[serde(rename = "AB")]
    pub ab: RunSinglesJson,
    #[serde(rename = "ABp")]
    pub abp: RunSinglesJson,
    #[serde(rename = "ApB")]
    pub apb: RunSinglesJson,
    #[serde(rename = "ApBp")]
    pub apbp: RunSinglesJson,
}

impl SinglesJson {
    pub fn to_singles(&self) -> SinglesTable {
        let runs = [&self.ab, &self.abp, &self.apb, &self.apbp];
        SinglesTable {
            singles_a: runs.map(|r| r.singles_A.clone()),
            singles_b: runs.map(|r| r.singles_B.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermsJson {
    #[serde(rename = "P_AB(alpha,beta)")]
    pub ab: f64,
    #[serde(rename = "P_AB(alpha,beta')")]
    pub abp: f64,
    #[serde(rename = "P_AB(alpha',beta)")]
    pub apb: f64,
    #[serde(rename = "P_AB(alpha',beta')")]
    pub apbp: f64,
    #[serde(rename = "P_B(beta)")]
    pub single_b: f64,
    #[serde(rename = "P_A(alpha')")]
    pub single_a: f64,
}

impl From<&ChTerms> for TermsJson {
    fn from(t: &ChTerms) -> Self {
        Self {
            ab: t.ab,
            abp: t.abp,
            apb: t.apb,
            apbp: t.apbp,
            single_b: t.single_b,
            single_a: t.single_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmReportJson {
    pub r2: f64,
    pub quad: QuadJson,
    pub terms: TermsJson,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Best `J` after the grid and after every refinement sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

impl From<&QmJReport> for QmReportJson {
    fn from(r: &QmJReport) -> Self {
        Self {
            r2: r.r2,
            quad: (&r.quad).into(),
            terms: (&r.terms).into(),
            j: r.j,
            grid: None,
            trace: None,
        }
    }
}

impl QmReportJson {
    pub fn from_scan(scan: &ScanResult, grid: usize) -> Self {
        Self {
            grid: Some(grid),
            trace: Some(scan.trace.clone()),
            ..(&scan.best).into()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationJson {
    pub feature: u8,
    pub pair: String,
    pub channel: Option<usize>,
    pub station: Option<String>,
    pub value: i64,
    pub limit: i64,
}

impl From<&Violation> for ViolationJson {
    fn from(v: &Violation) -> Self {
        Self {
            feature: v.feature.number(),
            pair: v.pair.label().to_string(),
            channel: v.channel,
            station: v.station.map(station_label),
            value: v.value,
            limit: v.limit,
        }
    }
}

fn station_label(s: Station) -> String {
    s.tag().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationTotalJson {
    pub pair: String,
    pub station: String,
    pub channel_sum: i64,
    pub detected: i64,
    pub emitted: u64,
    pub matches_detected: bool,
    pub equals_emitted: bool,
}

impl From<&StationTotal> for StationTotalJson {
    fn from(t: &StationTotal) -> Self {
        Self {
            pair: t.pair.label().to_string(),
            station: station_label(t.station),
            channel_sum: t.channel_sum,
            detected: t.detected,
            emitted: t.emitted,
            matches_detected: t.matches_detected(),
            equals_emitted: t.equals_emitted(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditJson {
    pub passes: bool,
    pub violations: Vec<ViolationJson>,
    pub totals: Vec<StationTotalJson>,
}

impl From<&AuditReport> for AuditJson {
    fn from(a: &AuditReport) -> Self {
        Self {
            passes: a.passes(),
            violations: a.violations.iter().map(Into::into).collect(),
            totals: a.totals.iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictsJson {
    #[serde(rename = "CH")]
    pub ch: bool,
    pub spectrograph: bool,
    pub residuals: bool,
    pub audit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualJson {
    pub channel: usize,
    pub gamma: u8,
    /// Integer residual; divide by `N` for the probability-scale value.
    pub numerator: i64,
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JReportJson {
    #[serde(rename = "K")]
    pub channels: usize,
    #[serde(rename = "N")]
    pub pairs: u64,
    #[serde(rename = "J")]
    pub j: f64,
    pub sigma: f64,
    pub numerator: i64,
    pub terms: TermsJson,
    pub correction: f64,
    pub correction_numerator: i64,
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
    pub verdicts: VerdictsJson,
    pub residuals: Vec<ResidualJson>,
}

impl JReportJson {
    pub fn new(table: &CountTable, r: &JReport) -> Self {
        let n = table.pairs() as f64;
        Self {
            channels: table.channels(),
            pairs: table.pairs(),
            j: r.estimate.j,
            sigma: r.estimate.sigma,
            numerator: r.estimate.numerator,
            terms: (&r.estimate.terms).into(),
            correction: r.correction,
            correction_numerator: r.correction_numerator,
            gamma1: r.partition.gamma1.clone(),
            gamma2: r.partition.gamma2.clone(),
            verdicts: VerdictsJson {
                ch: r.verdicts.ch,
                spectrograph: r.verdicts.spectrograph,
                residuals: r.verdicts.residuals,
                audit: r.verdicts.audit,
            },
            residuals: r
                .residuals
                .iter()
                .map(|c| ResidualJson {
                    channel: c.channel,
                    gamma: match c.set {
                        GammaSet::One => 1,
                        GammaSet::Two => 2,
                    },
                    numerator: c.value,
                    value: c.value as f64 / n,
                    holds: c.holds(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetaJson {
    pub pair: SettingPairJson,
    #[serde(rename = "N")]
    pub pairs: u64,
    pub seed: u64,
    pub run_index: u64,
    pub timing: TimingJson,
    pub quad: QuadJson,
    pub events_a: usize,
    pub events_b: usize,
}

/// Setting-pair label as it appears in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettingPairJson {
    AB,
    ABp,
    ApB,
    ApBp,
}

impl From<SettingPair> for SettingPairJson {
    fn from(p: SettingPair) -> Self {
        match p {
            SettingPair::AB => Self::AB,
            SettingPair::ABp => Self::ABp,
            SettingPair::ApB => Self::ApB,
            SettingPair::ApBp => Self::ApBp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct MatchSummaryJson {
    pub window: f64,
    #[serde(rename = "K")]
    pub channels: usize,
    pub events_A: usize,
    pub events_B: usize,
    pub matches: usize,
    pub discards: usize,
    pub unmatched_A: usize,
    pub unmatched_B: usize,
    pub singles_A: Vec<i64>,
    pub singles_B: Vec<i64>,
    pub coincidences: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizeJson {
    #[serde(rename = "K")]
    pub channels: usize,
    #[serde(rename = "N")]
    pub pairs: u64,
    #[serde(rename = "J_max")]
    pub j_max: f64,
    pub audit_passes: bool,
    pub spectrograph_holds: bool,
    pub table: CountTableJson,
}
