//! Checks shared by the integration tests and the acceptance target. Each
//! check runs a fixed number of deterministic cases and reports how many it
//! ran, or the first counterexample.
#![allow(dead_code)]

pub mod e2e;
pub mod fixtures;
pub mod image_props;
pub mod protocol_props;
pub mod scorer_oracles;
pub mod stats_corpus;

use std::cell::Cell;

use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type CheckResult = Result<usize, String>;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Runs `test` on `cases` generated values and returns the number of
/// passing cases.
pub fn check<S, F>(cases: u32, strategy: S, test: F) -> CheckResult
where
    S: Strategy,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    let ran = Cell::new(0usize);
    runner(cases)
        .run(&strategy, |v| {
            ran.set(ran.get() + 1);
            test(v)
        })
        .map_err(|e| e.to_string())?;
    Ok(ran.get())
}

/// Fails the current case with `msg` unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}
