//! The feature manifest: ordered feature names that fix the column layout
//! of every feature vector, matrix and model downstream.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::functionals::{FUNCTIONAL_NAMES, RANGE_FUNCTIONAL};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: &str = "hwpd-manifest-v1";
pub const MANIFEST_HEADER: &str = "index,name,scope,units,formula_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureFamily {
    Kinematic,
    Nonlinear,
    Neuromotor,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 3] = [FeatureFamily::Kinematic, FeatureFamily::Nonlinear, FeatureFamily::Neuromotor];

    pub fn prefix(self) -> &'static str {
        match self {
            FeatureFamily::Kinematic => "kin.",
            FeatureFamily::Nonlinear => "nl.",
            FeatureFamily::Neuromotor => "nm.",
        }
    }

    pub fn of_name(name: &str) -> Option<FeatureFamily> {
        Self::ALL.into_iter().find(|f| name.starts_with(f.prefix()))
    }
}

/// Which families a classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSelection {
    Kinematic,
    Nonlinear,
    Neuromotor,
    All,
}

impl FeatureSelection {
    pub const ALL: [FeatureSelection; 4] =
        [FeatureSelection::Kinematic, FeatureSelection::Nonlinear, FeatureSelection::Neuromotor, FeatureSelection::All];

    pub fn includes(self, family: FeatureFamily) -> bool {
        match self {
            FeatureSelection::Kinematic => family == FeatureFamily::Kinematic,
            FeatureSelection::Nonlinear => family == FeatureFamily::Nonlinear,
            FeatureSelection::Neuromotor => family == FeatureFamily::Neuromotor,
            FeatureSelection::All => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSelection::Kinematic => "kinematic",
            FeatureSelection::Nonlinear => "nonlinear",
            FeatureSelection::Neuromotor => "neuromotor",
            FeatureSelection::All => "all",
        }
    }
}

impl std::fmt::Display for FeatureSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSelection::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Format(format!("unknown feature family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub scope: String,
    pub units: String,
    pub formula_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ManifestConfig {
    /// Adds `range` (max - min) as an eleventh per-stroke functional.
    pub with_range_functional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureManifest {
    entries: Vec<ManifestEntry>,
    index: HashMap<String, usize>,
}

/// Task-level kinematic quantities: (name, units).
pub const KINEMATIC_GLOBALS: [(&str, &str); 30] = [
    ("total_duration", "s"),
    ("pen_down_duration", "s"),
    ("pen_down_ratio", "1"),
    ("stroke_count", "count"),
    ("path_length", "mm"),
    ("speed_mean", "mm/s"),
    ("speed_max", "mm/s"),
    ("speed_std", "mm/s"),
    ("accel_mean", "mm/s^2"),
    ("accel_max", "mm/s^2"),
    ("accel_std", "mm/s^2"),
    ("jerk_mean", "mm/s^3"),
    ("jerk_max", "mm/s^3"),
    ("jerk_std", "mm/s^3"),
    ("pressure_mean", "1"),
    ("pressure_std", "1"),
    ("speed_peaks_per_s", "1/s"),
    ("curvature_mean", "1/mm"),
    ("curvature_std", "1/mm"),
    ("box_width", "mm"),
    ("box_height", "mm"),
    ("aspect_ratio", "1"),
    ("stroke_duration_mean", "s"),
    ("pen_up_duration", "s"),
    ("direction_entropy", "bits"),
    ("adjacent_distance_mean", "mm"),
    ("adjacent_distance_max", "mm"),
    ("speed_cv", "1"),
    ("pen_up_duration_mean", "s"),
    ("net_to_path_ratio", "1"),
];

/// Per-stroke quantities aggregated by the functionals in the default manifest.
pub const KINEMATIC_STROKE_AGGREGATES: [(&str, &str); 7] = [
    ("duration", "s"),
    ("path_length", "mm"),
    ("speed_mean", "mm/s"),
    ("accel_mean", "mm/s^2"),
    ("speed_peaks", "count"),
    ("pressure_mean", "1"),
    ("net_to_path", "1"),
];

/// Series analysed by the nonlinear battery.
pub const NONLINEAR_SERIES: [&str; 4] = ["speed", "pressure", "x", "y"];

pub const NONLINEAR_MEASURES: [(&str, &str); 12] = [
    ("d2", "1"),
    ("lambda_max", "1/s"),
    ("hurst", "1"),
    ("lz_norm", "1"),
    ("shannon_bits", "bits"),
    ("renyi2_bits", "bits"),
    ("renyi3_bits", "bits"),
    ("snr_conventional_db", "dB"),
    ("snr_teager_db", "dB"),
    ("imf_count", "count"),
    ("imf1_energy_ratio", "1"),
    ("imf1_mean_freq", "Hz"),
];

pub const NEUROMOTOR_FEATURES: [(&str, &str); 28] = [
    ("count.mean", "count"),
    ("count.std", "count"),
    ("count.max", "count"),
    ("D.mean", "mm"),
    ("D.std", "mm"),
    ("D.median", "mm"),
    ("D.max", "mm"),
    ("t0_offset.mean", "s"),
    ("t0_offset.std", "s"),
    ("mu.mean", "1"),
    ("mu.std", "1"),
    ("mu.median", "1"),
    ("sigma.mean", "1"),
    ("sigma.std", "1"),
    ("sigma.median", "1"),
    ("sigma.max", "1"),
    ("tpeak_spacing.mean", "s"),
    ("tpeak_spacing.std", "s"),
    ("peak_speed.mean", "mm/s"),
    ("peak_speed.std", "mm/s"),
    ("rise_time.mean", "s"),
    ("rise_time.std", "s"),
    ("snr.mean", "dB"),
    ("snr.std", "dB"),
    ("snr.min", "dB"),
    ("residual_ratio.mean", "1"),
    ("lognormals_per_s", "1/s"),
    ("refine_fail_rate", "1"),
];

impl FeatureManifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if FeatureFamily::of_name(&e.name).is_none() {
                return Err(Error::ManifestMismatch(format!("'{}' has no family prefix", e.name)));
            }
            if index.insert(e.name.clone(), i).is_some() {
                return Err(Error::ManifestMismatch(format!("duplicate name '{}'", e.name)));
            }
        }
        Ok(Self { entries, index })
    }

    /// The default layout: 100 kinematic, 48 nonlinear and 28 neuromotor
    /// entries (107 kinematic with the range functional enabled).
    pub fn default_with(config: ManifestConfig) -> Self {
        let mut entries = Vec::new();
        let mut push = |name: String, scope: &str, units: &str, formula: String| {
            entries.push(ManifestEntry { name, scope: scope.into(), units: units.into(), formula_id: formula });
        };
        for (q, units) in KINEMATIC_GLOBALS {
            push(format!("kin.{q}"), "task", units, format!("kin:global:{q}"));
        }
        let mut fnames: Vec<&str> = FUNCTIONAL_NAMES.to_vec();
        if config.with_range_functional {
            fnames.push(RANGE_FUNCTIONAL);
        }
        for (q, units) in KINEMATIC_STROKE_AGGREGATES {
            for f in &fnames {
                let u = match *f {
                    "kurtosis" | "skewness" => "1",
                    _ => units,
                };
                push(format!("kin.stroke.{q}.{f}"), "stroke_functional", u, format!("kin:stroke:{q}:{f}"));
            }
        }
        for s in NONLINEAR_SERIES {
            for (m, units) in NONLINEAR_MEASURES {
                push(format!("nl.{s}.{m}"), "task", units, format!("nl:{m}@{s}"));
            }
        }
        for (f, units) in NEUROMOTOR_FEATURES {
            push(format!("nm.{f}"), "task_lognormals", units, format!("nm:{f}"));
        }
        Self::from_entries(entries).expect("default manifest is well formed")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn family_of(&self, i: usize) -> FeatureFamily {
        FeatureFamily::of_name(&self.entries[i].name).expect("validated on construction")
    }

    /// Column indices belonging to `family`, in manifest order.
    pub fn family_columns(&self, family: FeatureFamily) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.family_of(i) == family).collect()
    }

    pub fn selection_columns(&self, sel: FeatureSelection) -> Vec<usize> {
        (0..self.len()).filter(|&i| sel.includes(self.family_of(i))).collect()
    }

    /// Names of one family, in manifest order (prefix included).
    pub fn family_names(&self, family: FeatureFamily) -> Vec<&str> {
        self.family_columns(family).into_iter().map(|i| self.entries[i].name.as_str()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MANIFEST_HEADER}")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", i, e.name, e.scope, e.units, e.formula_id)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("manifest is utf-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>().join(",") != MANIFEST_HEADER {
            return Err(Error::Format(format!("manifest header must be '{MANIFEST_HEADER}'")));
        }
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let idx: usize = rec[0].trim().parse().map_err(|_| Error::Format(format!("bad index on row {}", i + 2)))?;
            if idx != i {
                return Err(Error::ManifestMismatch(format!("row {} has index {idx}", i + 2)));
            }
            entries.push(ManifestEntry {
                name: rec[1].to_string(),
                scope: rec[2].to_string(),
                units: rec[3].to_string(),
                formula_id: rec[4].to_string(),
            });
        }
        Self::from_entries(entries)
    }

    /// SHA-256 of the canonical CSV form, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(MANIFEST_VERSION.as_bytes());
        h.update(self.to_csv_string().as_bytes());
        hex::encode(h.finalize())
    }
}

impl Default for FeatureManifest {
    fn default() -> Self {
        Self::default_with(ManifestConfig::default())
    }
}
