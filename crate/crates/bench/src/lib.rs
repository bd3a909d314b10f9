//! Verification and benchmarking harness for `winoconv`: layer suites,
//! the Winograd-vs-im2col runner and its CSV/JSON reports.

pub mod report;
pub mod runner;
pub mod suite;

pub use report::{BenchReport, EntryReport, VerifyReport, VerifyRow, CSV_HEADER};
pub use runner::{run_bench, run_verify, BenchOptions, VerifyOptions};
pub use suite::{
    builtin_suite, parse_suite, parse_suite_str, serialize_suite, LayerEntry, LayerSuite,
    SuiteError,
};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod cli_chapter {}

/// Environment variable that overrides the staging L1 budget in bytes.
pub const L1_BUDGET_ENV: &str = "WINOCONV_L1_BUDGET";

/// Reads [`L1_BUDGET_ENV`]: `Ok(None)` when unset, an error message when it
/// is not a positive integer.
pub fn l1_budget_from_env() -> Result<Option<usize>, String> {
    match std::env::var(L1_BUDGET_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{L1_BUDGET_ENV}: {e}")),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(b) if b > 0 => Ok(Some(b)),
            _ => Err(format!(
                "{L1_BUDGET_ENV} must be a positive byte count, got `{v}`"
            )),
        },
    }
}
