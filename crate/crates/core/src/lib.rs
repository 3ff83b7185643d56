//! Sticky-sequence Track-and-Stop for pure-exploration bandit problems whose
//! correct answers may form a continuum.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod engine;
pub mod error;
pub mod expfam;
pub mod harness;
pub mod oracles;
pub mod problems;
pub mod selection;
pub mod stopping;
pub mod tracking;

pub use divergence::{
    ball_divergence, best_response, characteristic_time, easiest_answers, oracle_weights,
    oracle_weights_with, problem_value, GameSolution, SolverOptions,
};
pub use engine::{run_trial, specialize, RoundRecord, TrialConfig, TrialResult};
pub use error::{Error, Result};
pub use expfam::{Family, FamilySpec};
pub use harness::{
    regularity_check, run_experiment, write_outputs, CellSummary, ExperimentConfig,
    ExperimentOutput, ProblemSpec,
};
pub use oracles::{brute_force_game, closed_form_bai2, closed_form_reg1, covering_bound, CoverBoundReport};
pub use problems::{
    answer_grid, compose, cover_centers, AnswerPoint, AnswerSpace, ModelBox, Problem, ProblemKind,
    RegressionFn,
};
pub use selection::{convergence_diagnostic, RuleKind, SelectionState, XfTable};
pub use stopping::{glr_stat, threshold, Decision, ThresholdParams};
pub use tracking::{clip_project, epsilon_schedule, next_arm, TrackerState};
