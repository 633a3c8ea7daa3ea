//! Dataset manifest: `subject_id,group,age,sex,task,file_path`, one row per
//! recording. Relative paths resolve against the manifest's directory.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::recording::{parse_recording, Group, ParseWarnings, RecordingMeta, TaskId, TaskRecording, NOMINAL_RATE_HZ};
use crate::error::{Error, Result};

pub const DATASET_HEADER: [&str; 6] = ["subject_id", "group", "age", "sex", "task", "file_path"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::M => "M",
            Sex::F => "F",
        })
    }
}

impl FromStr for Sex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M" | "MALE" => Ok(Sex::M),
            "F" | "FEMALE" => Ok(Sex::F),
            other => Err(Error::Format(format!("unknown sex '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub subject_id: String,
    pub group: Group,
    pub age: u32,
    pub sex: Sex,
    pub task: TaskId,
    pub file_path: String,
}

pub fn write_dataset_manifest<W: Write>(w: W, entries: &[DatasetEntry]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(DATASET_HEADER)?;
    for e in entries {
        wtr.write_record([
            e.subject_id.as_str(),
            e.group.as_str(),
            &e.age.to_string(),
            &e.sex.to_string(),
            e.task.as_str(),
            e.file_path.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn parse_dataset_manifest<R: std::io::Read>(r: R) -> Result<Vec<DatasetEntry>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != DATASET_HEADER {
        return Err(Error::Format(format!("dataset manifest header must be {}", DATASET_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |reason: String| Error::MalformedRow { line, reason };
        if rec.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", rec.len())));
        }
        out.push(DatasetEntry {
            subject_id: rec[0].to_string(),
            group: rec[1].parse().map_err(|e: Error| bad(e.to_string()))?,
            age: rec[2].parse().map_err(|_| bad(format!("bad age '{}'", &rec[2])))?,
            sex: rec[3].parse().map_err(|e: Error| bad(e.to_string()))?,
            task: rec[4].parse().map_err(|e: Error| bad(e.to_string()))?,
            file_path: rec[5].to_string(),
        });
    }
    Ok(out)
}

pub fn read_dataset_manifest(path: &Path) -> Result<Vec<DatasetEntry>> {
    let f = File::open(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    parse_dataset_manifest(BufReader::new(f))
}

pub fn resolve_path(manifest_path: &Path, file_path: &str) -> PathBuf {
    let p = Path::new(file_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Parses the recording an entry points at.
pub fn load_recording(manifest_path: &Path, entry: &DatasetEntry) -> Result<(TaskRecording, ParseWarnings)> {
    let path = resolve_path(manifest_path, &entry.file_path);
    let f = File::open(&path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    let meta =
        RecordingMeta { subject_id: entry.subject_id.clone(), group: entry.group, task: entry.task, sample_rate_hz: Some(NOMINAL_RATE_HZ) };
    parse_recording(BufReader::new(f), &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let entries = vec![
            DatasetEntry {
                subject_id: "PD_001".into(),
                group: Group::PD,
                age: 61,
                sex: Sex::F,
                task: TaskId::Circle,
                file_path: "rec/PD_001/Circle.csv".into(),
            },
            DatasetEntry {
                subject_id: "YHC_002".into(),
                group: Group::YHC,
                age: 22,
                sex: Sex::M,
                task: TaskId::Line1,
                file_path: "/abs/x.csv".into(),
            },
        ];
        let mut buf = Vec::new();
        write_dataset_manifest(&mut buf, &entries).unwrap();
        assert!(buf.starts_with(b"subject_id,group,age,sex,task,file_path\n"));
        assert_eq!(parse_dataset_manifest(&buf[..]).unwrap(), entries);
        let m = Path::new("/data/manifest.csv");
        assert_eq!(resolve_path(m, &entries[0].file_path), Path::new("/data/rec/PD_001/Circle.csv"));
        assert_eq!(resolve_path(m, &entries[1].file_path), Path::new("/abs/x.csv"));
    }

    #[test]
    fn bad_rows() {
        let text = "subject_id,group,age,sex,task,file_path\ns,XX,3,M,Circle,a.csv\n";
        assert!(matches!(parse_dataset_manifest(text.as_bytes()), Err(Error::MalformedRow { line: 2, .. })));
        assert!(matches!(parse_dataset_manifest("a,b\n".as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_io_failure() {
        let e = read_dataset_manifest(Path::new("/nonexistent/manifest.csv")).unwrap_err();
        assert!(matches!(e, Error::IoFailure(ref m) if m.contains("/nonexistent/manifest.csv")));
    }
}
