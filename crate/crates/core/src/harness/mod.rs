//! The permutation protocol: seeded splits, per-method tuning on the
//! validation rows, test scoring, and reports.

mod methods;
mod protocol;
mod report;
mod split;

pub use methods::{
    apply_overrides, builtin_method, default_coxnet_space, default_nn_space, train_coxnet, train_network, CoxnetMethod,
    Method, NnMethod, RiskModel,
};
pub use protocol::{
    run_protocol, split_dataset, tune_method, tuning_rng, validation_score, write_report_files, ProtocolOptions,
    SplitData, TuneOutcome,
};
pub use report::{
    parse_report_csv, report_csv, summarize, summary_table, EvalReport, MethodReport, PermutationResult, CSV_HEADER,
};
pub use split::{make_split, split_sizes, SplitPlan};
