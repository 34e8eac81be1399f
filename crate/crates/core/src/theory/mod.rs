//! Region classification, closed-form lifespan laws and blow-up certificates.

mod classify;
mod kfunc;
mod sequences;

pub use classify::{classify, predict, Cell, Moment, Prediction, PredictionKind, RegionCase};
pub use kfunc::{
    case_constant, case_constants, case_for, data_constant_f, eval_k, find_certificate, frame_constant,
    threshold_margin, CaseConstants, CaseId, Certificate, DataConstant,
};
pub use sequences::{
    a_n, a_n_recursive, l_n, lemma51_log_bound, mn_sequence, slice_threshold, BSequence, IterationState, MnSequence,
};
