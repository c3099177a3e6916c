//! Reading and writing event streams, spectra and JSON documents.

use std::{
    fs,
    io::{self, BufWriter, Write},
    path::{Path, PathBuf},
};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use hvspec_core::{CountTable, DetectionEvent, Station};

use crate::{json, CliError};

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `path` through a sibling temp file and a rename, so readers never see
/// a partial file.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);

    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let bytes = json::to_vec(value).map_err(|e| io_err(path, e.into()))?;
    write_atomic(path, |w| w.write_all(&bytes))
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Missing files are I/O errors; malformed content is a usage error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Deserialize)]
struct EventRow {
    timestamp: f64,
    channel: usize,
}

/// Header `timestamp,channel`, timestamps in seconds with 17 significant digits.
pub fn write_events(path: &Path, events: &[DetectionEvent]) -> Result<(), CliError> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["timestamp", "channel"])?;
        for e in events {
            csv.write_record([format!("{:.16e}", e.timestamp), e.channel.to_string()])?;
        }
        csv.flush()
    })
}

pub fn read_events(path: &Path, station: Station) -> Result<Vec<DetectionEvent>, CliError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if headers != vec!["timestamp", "channel"] {
        return Err(CliError::Usage(format!(
            "{}: expected header `timestamp,channel`",
            path.display()
        )));
    }
    reader
        .deserialize::<EventRow>()
        .map(|row| {
            let row = row.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Ok(DetectionEvent {
                station,
                channel: row.channel,
                timestamp: row.timestamp,
            })
        })
        .collect()
}

/// One row per run and channel: `pair,channel,N_A,N_B,N_AB`.
pub fn write_spectrum(path: &Path, table: &CountTable) -> Result<(), CliError> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["pair", "channel", "N_A", "N_B", "N_AB"])?;
        for run in table.runs() {
            for i in 0..table.channels() {
                csv.write_record([
                    run.pair.label().to_string(),
                    i.to_string(),
                    run.singles_a[i].to_string(),
                    run.singles_b[i].to_string(),
                    run.coincidences[i].to_string(),
                ])?;
            }
        }
        csv.flush()
    })
}

/// `dir` joined with `path` unless `path` is absolute.
pub fn resolve(dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let events: Vec<_> = (0..50)
            .map(|k| DetectionEvent {
                station: Station::A,
                channel: k % 3,
                timestamp: k as f64 * 1e-6 + (k as f64).sin() * 1e-8,
            })
            .collect();
        write_events(&path, &events).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("timestamp,channel\n"));
        assert_eq!(read_events(&path, Station::A).unwrap(), events);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn bad_header_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        fs::write(&path, "time,ch\n1,0\n").unwrap();
        assert!(matches!(
            read_events(&path, Station::B),
            Err(CliError::Usage(_))
        ));
        let missing = dir.path().join("nope.csv");
        assert!(matches!(
            read_events(&missing, Station::B),
            Err(CliError::Io { .. })
        ));
    }

    #[test]
    fn resolve_keeps_absolute_paths() {
        assert_eq!(resolve(Path::new("/x"), "y"), PathBuf::from("/x/y"));
        assert_eq!(resolve(Path::new("/x"), "/z"), PathBuf::from("/z"));
    }
}
