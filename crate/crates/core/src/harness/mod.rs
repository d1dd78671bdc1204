//! Campaign runner: datasets, cross-validated attack evaluation, temperature
//! sweeps, decision-surface dumps and report rendering.

pub mod campaign;
pub mod dataset;
pub mod report;
pub mod surface;

pub use campaign::{
    attack_fold, fidelity, model_hash, prepare_folds, run_campaign, run_prepared,
    temperature_sweep, AggregateResult, AttackKind, CampaignConfig, CampaignReport, CellResult,
    FidelityRow, ModelSource, PreparedFold, Provenance, ReportMetadata, SampleOutcome, SweepReport,
    SweepRow, DEFAULT_TEMPERATURE_GRID,
};
pub use dataset::{
    kfold, load_csv, parse_csv, synthetic, Dataset, FeatureSummary, LabelColumn, LabelKind, Labels,
};
pub use report::{emit_report, emit_sweep, parse_report, write_output, ReportFormat};
pub use surface::{dump_surface, threshold_bounds, Surface, SurfaceGrid, SurfacePoint};
