//! ε-sweeps with scaling fits, property suites and report files.

mod properties;
mod report;
mod sweep;

pub use properties::{
    apriori_growths, inverse_roundtrip_error, property_suite, run_suite, CellGrowth, PropertyReport, SuiteId,
    SuiteReport, E1_CELLS, E2_CELLS,
};
pub use report::{
    read_fit_json, report_emit, write_loglog_csv, write_sweep_csv, FitDocument, Results, FIT_JSON, LOGLOG_CSV,
    PROPERTIES_JSON, SWEEP_CSV,
};
pub use sweep::{
    fit_loglog, least_squares, qualitative_check, sweep, ExpectedExponent, FitResult, LineFit, QualitativeReport,
    SweepConfig, SweepRecord, SweepResult, CERT_SEARCH_CAP, CERT_SLACK, EXPONENT_TOL,
};
