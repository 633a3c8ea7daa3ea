//! Labelled cohorts: subject demographics, per-subject profiles, recording
//! files, dataset manifest and ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::profile::SubjectProfile;
use super::task::{synth_task, TaskTruth};
use crate::error::{Error, Result};
use crate::signal::{write_dataset_manifest, write_recording, DatasetEntry, Group, Sex, TaskId, TaskRecording};

/// Age distribution of one sex within a group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeStats {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub male: AgeStats,
    pub female: AgeStats,
}

impl Demographics {
    /// Counts and ages of the reference cohort.
    pub fn reference(group: Group) -> Self {
        let s = |count, mean, sd, min, max| AgeStats { count, mean, sd, min, max };
        match group {
            Group::PD => Self { male: s(20, 64.0, 10.3, 41, 80), female: s(35, 58.0, 12.9, 29, 83) },
            Group::EHC => Self { male: s(27, 66.0, 11.1, 49, 85), female: s(22, 59.0, 10.6, 43, 83) },
            Group::YHC => Self { male: s(27, 25.0, 4.93, 17, 42), female: s(18, 23.0, 3.9, 19, 32) },
        }
    }

    pub fn total(&self) -> usize {
        self.male.count + self.female.count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    /// Subjects per group; the sex ratio follows the reference cohort.
    pub counts: BTreeMap<Group, usize>,
    pub tasks: Vec<TaskId>,
    pub profiles: BTreeMap<Group, SubjectProfile>,
    /// Relative per-subject spread of every knob.
    pub subject_spread: f64,
    /// Scales the PD profile's distance from the young-control profile.
    pub pd_gap: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            counts: Group::ALL.iter().map(|&g| (g, Demographics::reference(g).total())).collect(),
            tasks: TaskId::ALL.to_vec(),
            profiles: Group::ALL.iter().map(|&g| (g, SubjectProfile::for_group(g))).collect(),
            subject_spread: 0.15,
            pd_gap: 1.0,
        }
    }
}

impl CohortConfig {
    pub fn with_counts(pd: usize, ehc: usize, yhc: usize) -> Self {
        let mut c = Self::default();
        c.counts = [(Group::PD, pd), (Group::EHC, ehc), (Group::YHC, yhc)].into_iter().collect();
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::InvalidProfile("cohort has no tasks".into()));
        }
        if !(0.0..1.0).contains(&self.subject_spread) {
            return Err(Error::InvalidProfile("subject_spread must lie in [0, 1)".into()));
        }
        if !(self.pd_gap >= 0.0 && self.pd_gap.is_finite()) {
            return Err(Error::InvalidProfile("pd_gap must be non-negative".into()));
        }
        for g in Group::ALL {
            self.group_profile(g).validate()?;
        }
        Ok(())
    }

    fn group_profile(&self, g: Group) -> SubjectProfile {
        let p = self.profiles.get(&g).copied().unwrap_or_else(|| SubjectProfile::for_group(g));
        if g == Group::PD {
            let base = self.profiles.get(&Group::YHC).copied().unwrap_or_else(|| SubjectProfile::for_group(Group::YHC));
            SubjectProfile::interpolate(&base, &p, self.pd_gap)
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub subject_id: String,
    pub group: Group,
    pub age: u32,
    pub sex: Sex,
    pub profile: SubjectProfile,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    pub subject_id: String,
    pub group: Group,
    pub profile: SubjectProfile,
    pub tasks: Vec<TaskTruth>,
}

fn jitter(profile: &SubjectProfile, spread: f64, rng: &mut ChaCha8Rng) -> SubjectProfile {
    let mut f = || {
        if spread > 0.0 {
            rng.gen_range(1.0 - spread..1.0 + spread)
        } else {
            1.0
        }
    };
    SubjectProfile {
        group: profile.group,
        lognormals_per_stroke: (profile.lognormals_per_stroke * f()).max(1.0),
        sigma_jitter: profile.sigma_jitter * f(),
        tremor_amp: profile.tremor_amp * f(),
        tremor_freq: (profile.tremor_freq * f()).clamp(3.0, 8.0),
        speed_scale: profile.speed_scale * f(),
        pause_scale: profile.pause_scale * f(),
    }
}

fn draw_age(stats: &AgeStats, rng: &mut ChaCha8Rng) -> u32 {
    let v: f64 = Normal::new(stats.mean, stats.sd.max(1e-9)).map(|n| n.sample(rng)).unwrap_or(stats.mean);
    (v.round() as i64).clamp(i64::from(stats.min), i64::from(stats.max)) as u32
}

/// Subject list with demographics and individual profiles. Every subject
/// draws from its own seed, derived from the master seed and its position.
pub fn plan_cohort(config: &CohortConfig, seed: u64) -> Result<Vec<SubjectSpec>> {
    config.validate()?;
    let mut out = Vec::new();
    for (gi, g) in Group::ALL.iter().enumerate() {
        let n = config.counts.get(g).copied().unwrap_or(0);
        let demo = Demographics::reference(*g);
        let males = ((n * demo.male.count) as f64 / demo.total() as f64).round() as usize;
        let base = config.group_profile(*g);
        for i in 0..n {
            let subject_seed = derive_seed(seed, &[gi as u64, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(subject_seed, &[u64::MAX]));
            let (sex, stats) = if i < males { (Sex::M, &demo.male) } else { (Sex::F, &demo.female) };
            out.push(SubjectSpec {
                subject_id: format!("{}_{:03}", g.as_str(), i + 1),
                group: *g,
                age: draw_age(stats, &mut rng),
                sex,
                profile: jitter(&base, config.subject_spread, &mut rng),
                seed: subject_seed,
            });
        }
    }
    Ok(out)
}

/// Every requested task of one subject; task `i` uses its own derived seed.
pub fn synth_subject(spec: &SubjectSpec, tasks: &[TaskId]) -> Result<(Vec<TaskRecording>, SubjectTruth)> {
    let mut recs = Vec::with_capacity(tasks.len());
    let mut truths = Vec::with_capacity(tasks.len());
    for &task in tasks {
        let ti = TaskId::ALL.iter().position(|&t| t == task).unwrap_or(0) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[ti]));
        let (rec, truth) = synth_task(&spec.profile, &spec.subject_id, task, &mut rng)?;
        recs.push(rec);
        truths.push(truth);
    }
    Ok((recs, SubjectTruth { subject_id: spec.subject_id.clone(), group: spec.group, profile: spec.profile, tasks: truths }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortOutput {
    pub manifest_path: PathBuf,
    pub entries: Vec<DatasetEntry>,
    pub ground_truth_path: PathBuf,
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::IoFailure(format!("{}: {e}", path.display()))
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const COHORT_CONFIG_FILE: &str = "cohort.json";

/// Writes `recordings/<subject>/<task>.csv`, `manifest.csv`,
/// `ground_truth.json` and the effective `cohort.json` under `out`.
pub fn synth_cohort(config: &CohortConfig, seed: u64, out: &Path) -> Result<CohortOutput> {
    let specs = plan_cohort(config, seed)?;
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let per_subject: Vec<(Vec<DatasetEntry>, SubjectTruth)> = specs
        .par_iter()
        .map(|spec| {
            let (recs, truth) = synth_subject(spec, &config.tasks)?;
            let dir = out.join("recordings").join(&spec.subject_id);
            fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
            let mut entries = Vec::with_capacity(recs.len());
            for rec in &recs {
                let rel = format!("recordings/{}/{}.csv", spec.subject_id, rec.task.as_str());
                let path = out.join(&rel);
                let f = fs::File::create(&path).map_err(|e| io(&path, e))?;
                write_recording(BufWriter::new(f), rec)?;
                entries.push(DatasetEntry {
                    subject_id: spec.subject_id.clone(),
                    group: spec.group,
                    age: spec.age,
                    sex: spec.sex,
                    task: rec.task,
                    file_path: rel,
                });
            }
            Ok((entries, truth))
        })
        .collect::<Result<_>>()?;
    let entries: Vec<DatasetEntry> = per_subject.iter().flat_map(|(e, _)| e.iter().cloned()).collect();
    let truths: Vec<&SubjectTruth> = per_subject.iter().map(|(_, t)| t).collect();
    let manifest_path = out.join(MANIFEST_FILE);
    let f = fs::File::create(&manifest_path).map_err(|e| io(&manifest_path, e))?;
    write_dataset_manifest(BufWriter::new(f), &entries)?;
    let ground_truth_path = out.join(GROUND_TRUTH_FILE);
    fs::write(&ground_truth_path, serde_json::to_string(&truths)?).map_err(|e| io(&ground_truth_path, e))?;
    let cfg_path = out.join(COHORT_CONFIG_FILE);
    fs::write(&cfg_path, serde_json::to_string_pretty(config)?).map_err(|e| io(&cfg_path, e))?;
    Ok(CohortOutput { manifest_path, entries, ground_truth_path })
}
