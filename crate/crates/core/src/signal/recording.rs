use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal tablet sampling rate.
pub const NOMINAL_RATE_HZ: f64 = 180.0;

pub const RECORDING_HEADER: &str = "t_ms,x_mm,y_mm,p,pen_state";
pub const RECORDING_HEADER_ANGLES: &str = "t_ms,x_mm,y_mm,p,pen_state,azimuth_rad,altitude_rad";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PenState {
    Up,
    Down,
}

impl PenState {
    pub fn is_down(self) -> bool {
        matches!(self, PenState::Down)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    PD,
    EHC,
    YHC,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::PD, Group::EHC, Group::YHC];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::PD => "PD",
            Group::EHC => "EHC",
            Group::YHC => "YHC",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PD" => Ok(Group::PD),
            "EHC" => Ok(Group::EHC),
            "YHC" => Ok(Group::YHC),
            other => Err(Error::Format(format!("unknown group '{other}'"))),
        }
    }
}

/// The 17 handwriting tasks. `Circle` is reserved for meta-parameter search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    Alphabet,
    CircleTemplate,
    Cube,
    FreeWriting,
    House,
    Id,
    Name,
    Numbers,
    Line1,
    Line2,
    Rectangles,
    Rey,
    Rhombus,
    Signature,
    Spiral,
    SpiralTemplate,
    Circle,
}

impl TaskId {
    pub const ALL: [TaskId; 17] = [
        TaskId::Alphabet,
        TaskId::CircleTemplate,
        TaskId::Cube,
        TaskId::FreeWriting,
        TaskId::House,
        TaskId::Id,
        TaskId::Name,
        TaskId::Numbers,
        TaskId::Line1,
        TaskId::Line2,
        TaskId::Rectangles,
        TaskId::Rey,
        TaskId::Rhombus,
        TaskId::Signature,
        TaskId::Spiral,
        TaskId::SpiralTemplate,
        TaskId::Circle,
    ];

    /// Task used only for meta-parameter optimization.
    pub const OPTIMIZATION: TaskId = TaskId::Circle;

    pub fn is_optimization_task(self) -> bool {
        self == Self::OPTIMIZATION
    }

    /// Complex tasks for which neuromotor features are not computed.
    pub fn skips_neuromotor(self) -> bool {
        matches!(self, TaskId::Alphabet | TaskId::FreeWriting | TaskId::Rey)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Alphabet => "Alphabet",
            TaskId::CircleTemplate => "CircleTemplate",
            TaskId::Cube => "Cube",
            TaskId::FreeWriting => "FreeWriting",
            TaskId::House => "House",
            TaskId::Id => "Id",
            TaskId::Name => "Name",
            TaskId::Numbers => "Numbers",
            TaskId::Line1 => "Line1",
            TaskId::Line2 => "Line2",
            TaskId::Rectangles => "Rectangles",
            TaskId::Rey => "Rey",
            TaskId::Rhombus => "Rhombus",
            TaskId::Signature => "Signature",
            TaskId::Spiral => "Spiral",
            TaskId::SpiralTemplate => "SpiralTemplate",
            TaskId::Circle => "Circle",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        TaskId::ALL.iter().copied().find(|t| t.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| Error::Format(format!("unknown task '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenSample {
    /// Seconds.
    pub t: f64,
    /// Millimeters.
    pub x: f64,
    pub y: f64,
    /// Normalized pressure in [0, 1]; zero while the pen is up.
    pub p: f64,
    pub pen_state: PenState,
    pub azimuth: Option<f64>,
    pub altitude: Option<f64>,
}

impl PenSample {
    pub fn down(t: f64, x: f64, y: f64, p: f64) -> Self {
        Self { t, x, y, p, pen_state: PenState::Down, azimuth: None, altitude: None }
    }

    pub fn up(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y, p: 0.0, pen_state: PenState::Up, azimuth: None, altitude: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecording {
    pub subject_id: String,
    pub group: Group,
    pub task: TaskId,
    pub sample_rate_hz: f64,
    pub samples: Vec<PenSample>,
}

impl TaskRecording {
    /// Builds a recording, checking the sample invariants.
    pub fn new(subject_id: impl Into<String>, group: Group, task: TaskId, sample_rate_hz: f64, samples: Vec<PenSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyRecording);
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonMonotonicTime { line: i + 2 });
            }
        }
        if !samples.iter().any(|s| s.pen_state.is_down()) {
            return Err(Error::NoPenDown);
        }
        Ok(Self { subject_id: subject_id.into(), group, task, sample_rate_hz, samples })
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn pen_down_count(&self) -> usize {
        self.samples.iter().filter(|s| s.pen_state.is_down()).count()
    }
}

/// Identification supplied alongside a recording file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    pub subject_id: String,
    pub group: Group,
    pub task: TaskId,
    /// When `None`, the rate is estimated from the median sample interval.
    pub sample_rate_hz: Option<f64>,
}

/// Counters for rows that were accepted after normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    /// Rows with pressure > 0 while the pen was up; pressure forced to 0.
    pub pressure_while_up: usize,
}

impl ParseWarnings {
    pub fn total(&self) -> usize {
        self.pressure_while_up
    }
}

fn parse_field(field: &str, line: usize, name: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::MalformedRow { line, reason: format!("cannot parse {name} from '{field}'") })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow { line, reason: format!("{name} is not finite") });
    }
    Ok(v)
}

/// Parses a recording CSV stream.
pub fn parse_recording<R: Read>(reader: R, meta: &RecordingMeta) -> Result<(TaskRecording, ParseWarnings)> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines();
    let header = loop {
        match lines.next() {
            None => return Err(Error::EmptyRecording),
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let header = header.trim().trim_start_matches('\u{feff}');
    let columns = match header {
        RECORDING_HEADER => 5,
        RECORDING_HEADER_ANGLES => 7,
        other => return Err(Error::MalformedRow { line: 1, reason: format!("unexpected header '{other}'") }),
    };

    let mut warnings = ParseWarnings::default();
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::MalformedRow { line: line_no, reason: format!("expected {columns} fields, found {}", fields.len()) });
        }
        let t = parse_field(fields[0], line_no, "t_ms")? / 1000.0;
        let x = parse_field(fields[1], line_no, "x_mm")?;
        let y = parse_field(fields[2], line_no, "y_mm")?;
        let mut p = parse_field(fields[3], line_no, "p")?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::MalformedRow { line: line_no, reason: format!("pressure {p} outside [0, 1]") });
        }
        let pen_state = match fields[4].trim() {
            "0" => PenState::Up,
            "1" => PenState::Down,
            other => return Err(Error::MalformedRow { line: line_no, reason: format!("pen_state '{other}' not 0/1") }),
        };
        if pen_state == PenState::Up && p > 0.0 {
            p = 0.0;
            warnings.pressure_while_up += 1;
        }
        let (azimuth, altitude) = if columns == 7 {
            (Some(parse_field(fields[5], line_no, "azimuth_rad")?), Some(parse_field(fields[6], line_no, "altitude_rad")?))
        } else {
            (None, None)
        };
        if let Some(prev) = samples.last() {
            let prev: &PenSample = prev;
            if !(t > prev.t) {
                return Err(Error::NonMonotonicTime { line: line_no });
            }
        }
        samples.push(PenSample { t, x, y, p, pen_state, azimuth, altitude });
    }
    if samples.is_empty() {
        return Err(Error::EmptyRecording);
    }
    let rate = match meta.sample_rate_hz {
        Some(r) => r,
        None => estimate_rate(&samples),
    };
    let rec = TaskRecording::new(meta.subject_id.clone(), meta.group, meta.task, rate, samples)?;
    Ok((rec, warnings))
}

fn estimate_rate(samples: &[PenSample]) -> f64 {
    let mut dts: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    if dts.is_empty() {
        return NOMINAL_RATE_HZ;
    }
    dts.sort_by(|a, b| a.total_cmp(b));
    let median = dts[dts.len() / 2];
    if median > 0.0 {
        1.0 / median
    } else {
        NOMINAL_RATE_HZ
    }
}

/// Writes a recording in the CSV format read by [`parse_recording`].
/// Values use the shortest representation that round-trips exactly.
pub fn write_recording<W: Write>(mut w: W, rec: &TaskRecording) -> Result<()> {
    let with_angles = rec.samples.iter().any(|s| s.azimuth.is_some() || s.altitude.is_some());
    writeln!(w, "{}", if with_angles { RECORDING_HEADER_ANGLES } else { RECORDING_HEADER })?;
    for s in &rec.samples {
        let pen = if s.pen_state.is_down() { 1 } else { 0 };
        write!(w, "{},{},{},{},{}", s.t * 1000.0, s.x, s.y, s.p, pen)?;
        if with_angles {
            write!(w, ",{},{}", s.azimuth.unwrap_or(0.0), s.altitude.unwrap_or(0.0))?;
        }
        writeln!(w)?;
    }
    Ok(())
}
