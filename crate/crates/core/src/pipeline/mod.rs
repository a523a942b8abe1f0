//! Batch front end: outcome construction, subgroup conditioning, and report
//! generation over a two-arm network experiment.

mod attrs;
mod config;
mod did;
mod report;

pub use attrs::{subset_by_group, AttributeTable, GroupingExpr};
pub use config::{
    AdjustMethod, AnalysisConfig, ArmInput, DenoiseMethod, OutcomeKind, SubgroupSpec,
};
pub use did::build_did_outcome;
pub use report::{corner_bound, run_report, ReportBundle};

/// Numeric formatting used in every CSV/JSON the pipeline writes: 15
/// significant digits, locale-independent, deterministic.
pub(crate) fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        // integers (including -0 normalized) print exactly
        format!("{}", x.trunc())
    } else {
        format!("{x:.14e}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_num;

    #[test]
    fn fmt_num_is_stable() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-1.0), "-1");
        assert_eq!(fmt_num(5.0), "5");
        assert_eq!(fmt_num(0.1), "1.00000000000000e-1");
        assert_eq!(fmt_num(10.0 / 36.0), "2.77777777777778e-1");
    }
}
