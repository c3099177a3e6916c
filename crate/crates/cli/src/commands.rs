//! Subcommand bodies. Each returns the JSON text for stdout and whether every
//! verdict held; the binary maps that to an exit code.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use hvspec_core::{
    analyze::SinglesTable,
    audit_features,
    coincidence::aggregate_streams,
    match_events, max_j_under_realism,
    qm_oracle::{find_violation, j_value},
    spectrograph_inequality, EberhardtState, Error as CoreError, SettingPair, SettingsQuad,
    Station,
};

use crate::{
    files, json, parallel,
    schema::{
        AuditJson, CountTableJson, ExperimentConfig, JReportJson, MatchSummaryJson, MaximizeJson,
        QmReportJson, RunMetaJson, SinglesJson,
    },
    CliError,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub json: String,
    pub ok: bool,
}

impl Report {
    fn new<T: Serialize>(value: &T, ok: bool) -> Result<Self, CliError> {
        let json = json::to_string(value).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Self { json, ok })
    }
}

pub const DEFAULT_GRID: usize = 24;
pub const DEFAULT_SWEEPS: usize = 2000;

/// `a,ap,b,bp` in radians.
pub fn parse_quad(text: &str) -> Result<SettingsQuad, CliError> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("quad `{text}`: {e}")))?;
    let v: [f64; 4] = values
        .try_into()
        .map_err(|v: Vec<f64>| CliError::Usage(format!("quad needs 4 angles, got {}", v.len())))?;
    Ok(SettingsQuad::from_array(v)?)
}

pub fn qm_eval(r2: f64, quad: &SettingsQuad) -> Result<Report, CliError> {
    let state = EberhardtState::from_r2(r2)?;
    Report::new(&QmReportJson::from(&j_value(&state, quad)), true)
}

pub fn qm_scan(r2: f64, grid: usize, sweeps: usize) -> Result<Report, CliError> {
    let state = EberhardtState::from_r2(r2)?;
    let scan = find_violation(&state, grid, sweeps)?;
    Report::new(&QmReportJson::from_scan(&scan, grid), true)
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    output_dir: String,
    #[serde(rename = "N")]
    pairs: u64,
    seed: u64,
    files: Vec<String>,
    #[serde(rename = "J")]
    j: Option<f64>,
    sigma: Option<f64>,
}

/// Outcome of [`simulate`] beyond the stdout summary.
#[derive(Debug)]
pub struct SimulateOutput {
    pub report: Report,
    pub output_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    files::read_json(path)
}

/// Run the four runs of `config` and write event streams, run metadata,
/// `counts.json`, `report.json` and `spectrum.csv` under the output directory.
///
/// `base` resolves a relative `output_dir`; the CLI passes the config file's
/// directory.
pub fn simulate(
    config: &ExperimentConfig,
    base: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<SimulateOutput, CliError> {
    let model = config.model.to_model()?;
    let quad = config.quad.to_quad()?;
    let timing = config.timing.to_timing()?;
    let seed = seed.unwrap_or(config.seed);
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => files::resolve(base, &config.output_dir),
    };
    files::create_dir(&dir)?;

    let runs = parallel::run_all(
        &model,
        &quad,
        config.pairs,
        &timing,
        seed,
        parallel::DEFAULT_BATCH,
    );
    let table = parallel::count_runs(&model, &runs, &timing)?;

    let mut written = Vec::new();
    let run_files = runs
        .par_iter()
        .map(|run| -> Result<Vec<String>, CliError> {
            let name = format!("run_{}", run.pair.label());
            let run_dir = dir.join(&name);
            files::create_dir(&run_dir)?;
            files::write_events(&run_dir.join("events_A.csv"), &run.stream_a)?;
            files::write_events(&run_dir.join("events_B.csv"), &run.stream_b)?;
            let meta = RunMetaJson {
                pair: run.pair.into(),
                pairs: run.pairs,
                seed: run.seed,
                run_index: run.run_index,
                timing: (&timing).into(),
                quad: (&run.quad).into(),
                events_a: run.stream_a.len(),
                events_b: run.stream_b.len(),
            };
            files::write_json(&run_dir.join("meta.json"), &meta)?;
            Ok(["events_A.csv", "events_B.csv", "meta.json"]
                .map(|f| format!("{name}/{f}"))
                .to_vec())
        })
        .collect::<Result<Vec<_>, _>>()?;
    written.extend(run_files.into_iter().flatten());

    files::write_json(&dir.join("counts.json"), &CountTableJson::from(&table))?;
    written.push("counts.json".into());
    files::write_spectrum(&dir.join("spectrum.csv"), &table)?;
    written.push("spectrum.csv".into());

    // J is undefined without emitted pairs
    let (mut j, mut sigma) = (None, None);
    if table.pairs() > 0 {
        let rep = spectrograph_inequality(&table)?;
        files::write_json(&dir.join("report.json"), &JReportJson::new(&table, &rep))?;
        written.push("report.json".into());
        j = Some(rep.j());
        sigma = Some(rep.estimate.sigma);
    }

    let summary = SimulateSummary {
        output_dir: dir.display().to_string(),
        pairs: config.pairs,
        seed,
        files: written,
        j,
        sigma,
    };
    Ok(SimulateOutput {
        report: Report::new(&summary, true)?,
        output_dir: dir,
    })
}

pub fn match_files(
    a: &Path,
    b: &Path,
    window: f64,
    channels: Option<usize>,
) -> Result<Report, CliError> {
    let stream_a = files::read_events(a, Station::A)?;
    let stream_b = files::read_events(b, Station::B)?;
    let k = channels.unwrap_or_else(|| {
        stream_a
            .iter()
            .chain(&stream_b)
            .map(|e| e.channel + 1)
            .max()
            .unwrap_or(1)
    });
    let result = match_events(&stream_a, &stream_b, window)?;
    let counts = aggregate_streams(SettingPair::AB, &stream_a, &stream_b, window, k)?;
    let summary = MatchSummaryJson {
        window,
        channels: k,
        events_A: stream_a.len(),
        events_B: stream_b.len(),
        matches: result.matches.len(),
        discards: result.discards.len(),
        unmatched_A: result.unmatched_a,
        unmatched_B: result.unmatched_b,
        singles_A: counts.singles_a,
        singles_B: counts.singles_b,
        coincidences: counts.coincidences,
    };
    Report::new(&summary, true)
}

fn load_table(path: &Path) -> Result<hvspec_core::CountTable, CliError> {
    files::read_json::<CountTableJson>(path)?.to_table()
}

#[derive(Debug, Serialize)]
struct AuditFailure {
    error: String,
    audit: AuditJson,
}

/// Full JReport; a table failing the audit yields the audit report instead.
pub fn analyze(path: &Path) -> Result<Report, CliError> {
    let table = load_table(path)?;
    match spectrograph_inequality(&table) {
        Ok(rep) => Report::new(&JReportJson::new(&table, &rep), rep.verdicts.all_hold()),
        Err(e @ CoreError::AuditFailed(_)) => Report::new(
            &AuditFailure {
                error: e.to_string(),
                audit: (&audit_features(&table)).into(),
            },
            false,
        ),
        Err(e) => Err(e.into()),
    }
}

pub fn audit(path: &Path) -> Result<Report, CliError> {
    let table = load_table(path)?;
    let report = AuditJson::from(&audit_features(&table));
    let ok = report.passes;
    Report::new(&report, ok)
}

/// `uniform:K=<k>,s=<s>` or a path to a singles JSON file.
pub fn parse_singles(spec: &str) -> Result<SinglesTable, CliError> {
    let Some(rest) = spec.strip_prefix("uniform:") else {
        return Ok(files::read_json::<SinglesJson>(Path::new(spec))?.to_singles());
    };
    let (mut k, mut s) = (None, None);
    for part in rest.split(',') {
        let bad = || CliError::Usage(format!("bad singles spec `{spec}`"));
        let (key, value) = part.split_once('=').ok_or_else(bad)?;
        match key.trim() {
            "K" => k = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
            "s" => s = Some(value.trim().parse::<i64>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    match (k, s) {
        (Some(k), Some(s)) if k > 0 => Ok(SinglesTable::uniform(k, s)),
        _ => Err(CliError::Usage(format!(
            "singles spec `{spec}` needs K>0 and s"
        ))),
    }
}

pub fn maximize(singles: &SinglesTable, pairs: u64) -> Result<Report, CliError> {
    let (table, j_max) = max_j_under_realism(singles, pairs)?;
    let audit = audit_features(&table);
    let rep = spectrograph_inequality(&table)?;
    let spectrograph_holds = rep.verdicts.spectrograph && rep.verdicts.residuals;
    let out = MaximizeJson {
        channels: table.channels(),
        pairs,
        j_max,
        audit_passes: audit.passes(),
        spectrograph_holds,
        table: (&table).into(),
    };
    Report::new(&out, out.audit_passes && spectrograph_holds)
}
