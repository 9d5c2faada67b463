//! Corpora, inequality experiments, refinement series and reports.

mod angle;
mod corpus;
mod inequality;
mod molecules;
mod pointwise;
mod report;
mod slices;

pub use angle::{fit_growth_exponent, growth_bound, GrowthFit, SLOPE_SLACK};
pub use corpus::{corpus_t_range, generate_corpus, CorpusFamily, CorpusItem, CorpusSpec, Piece};
pub use inequality::{
    run_inequality_experiment, series_drift, Elapsed, ExperimentConfig, Hypothesis, InequalityReport, ItemResult, Measurement,
    MeasurementReport, RefinementPoint, TentPair,
};
pub use molecules::{
    decomposition_study, domain_growth, DECOMPOSITION_PADDING, max_inside_ratio, molecule_study, shaped_atom, AtomShape, DecompositionRow,
    MoleculeStudy, MoleculeStudyConfig,
};
pub use pointwise::{run_pointwise, Lemma, PointwiseConfig, PointwiseReport};
pub use report::{emit_report, read_json_report, write_csv, write_json, write_report, ReportFormat};
pub use slices::{slice_study, SliceConstants, SliceStudyConfig, TransferCheck};
