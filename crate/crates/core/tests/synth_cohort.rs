use std::fs;

use hwpd_core::classify::ClassifierKind;
use hwpd_core::eval::{run_protocol, Experiment, ProtocolConfig, ProvenanceAudit};
use hwpd_core::features::{extract_dataset, extract_task_features, FeatureConfig, FeatureManifest, FeatureSelection};
use hwpd_core::signal::{load_recording, read_dataset_manifest, Group, TaskId};
use hwpd_core::synth::{synth_cohort, synth_task, CohortConfig, SubjectProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn cohort(pd: usize, ehc: usize, yhc: usize, tasks: &[TaskId]) -> CohortConfig {
    CohortConfig { tasks: tasks.to_vec(), ..CohortConfig::with_counts(pd, ehc, yhc) }
}

#[test]
fn files_parse_cleanly_and_regenerate_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cohort(4, 4, 4, &[TaskId::Circle, TaskId::Rey]);
    let a = synth_cohort(&cfg, 21, &dir.path().join("a")).unwrap();
    let b = synth_cohort(&cfg, 21, &dir.path().join("b")).unwrap();
    assert_eq!(a.entries.len(), 24);
    let entries = read_dataset_manifest(&a.manifest_path).unwrap();
    assert_eq!(entries, a.entries);
    for e in &entries {
        let (rec, warnings) = load_recording(&a.manifest_path, e).unwrap();
        assert_eq!(warnings.total(), 0, "{} {}", e.subject_id, e.task);
        assert!(rec.pen_down_count() > 0);
        let other = fs::read(dir.path().join("b").join(&e.file_path)).unwrap();
        assert_eq!(fs::read(dir.path().join("a").join(&e.file_path)).unwrap(), other);
    }
    let hash = |p: &std::path::Path| hex::encode(Sha256::digest(fs::read(p).unwrap()));
    assert_eq!(hash(&a.manifest_path), hash(&b.manifest_path));
    assert_eq!(fs::read(&a.ground_truth_path).unwrap(), fs::read(&b.ground_truth_path).unwrap());
}

#[test]
fn pd_profile_raises_entropy_and_lognormal_rate() {
    let m = FeatureManifest::default();
    let cfg = FeatureConfig::default();
    let ent = m.position("nl.speed.shannon_bits").unwrap();
    let lps = m.position("nm.lognormals_per_s").unwrap();
    let mean = |p: &SubjectProfile, col: usize| {
        let mut s = 0.0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (rec, _) = synth_task(p, "s", TaskId::Circle, &mut rng).unwrap();
            s += extract_task_features(&rec, &m, &cfg).unwrap().get(col).unwrap();
        }
        s / 20.0
    };
    let pd = SubjectProfile::for_group(Group::PD);
    let control = SubjectProfile::for_group(Group::YHC);
    assert_eq!((pd.lognormals_per_stroke, pd.sigma_jitter, pd.tremor_amp), (8.0, 0.15, 3.0));
    assert_eq!((control.lognormals_per_stroke, control.sigma_jitter, control.tremor_amp), (3.0, 0.02, 0.0));
    let (e_pd, e_c) = (mean(&pd, ent), mean(&control, ent));
    let (l_pd, l_c) = (mean(&pd, lps), mean(&control, lps));
    assert!(e_pd > e_c, "entropy {e_pd} vs {e_c}");
    assert!(l_pd > l_c, "lognormals per second {l_pd} vs {l_c}");
}

#[test]
fn separability_grows_with_profile_gap() {
    let tasks = [TaskId::Circle, TaskId::Spiral, TaskId::Line1];
    let m = FeatureManifest::default();
    let mut means = Vec::new();
    for gap in [0.0, 0.3, 1.0] {
        let mut total = 0.0;
        for seed in 0..5 {
            let dir = tempfile::tempdir().unwrap();
            let cfg = CohortConfig { pd_gap: gap, ..cohort(5, 0, 5, &tasks) };
            let out = synth_cohort(&cfg, 100 + seed, dir.path()).unwrap();
            let data = extract_dataset(&out.manifest_path, &out.entries, &m, &FeatureConfig::default()).unwrap();
            let mut pc = ProtocolConfig::new(Experiment::YHCvsPD, ClassifierKind::Svm, seed);
            pc.selections = vec![FeatureSelection::All];
            let report = run_protocol(&data.vectors, &m, &pc, &ProvenanceAudit::default()).unwrap();
            total += report.families[0].fused.accuracy;
        }
        means.push(total / 5.0);
    }
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    assert!(means[2] >= 0.9, "{means:?}");
}
