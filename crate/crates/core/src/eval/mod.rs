//! Evaluation protocol, score fusion and ROC analysis.

pub mod fusion;
pub mod metrics;
pub mod protocol;

pub use fusion::{
    fuse_scores_mean, fuse_scores_mean_for, normalize_score, read_scores_csv, write_scores_csv, Experiment, ScoreEntry, ScoreSet,
};
pub use metrics::{accuracy_confusion, roc_auc, write_roc_csv, Confusion, Roc, RocPoint};
pub use protocol::{
    run_protocol, write_table_csv, AuditCounts, EvaluationReport, FamilyResult, FusedResult, ProtocolConfig, ProtocolStatement,
    ProvenanceAudit, TaskResult,
};
