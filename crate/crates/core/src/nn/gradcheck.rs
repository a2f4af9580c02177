//! Central finite-difference verification of hand-written gradients.

use crate::math;
use crate::nn::Parameterized;

/// Step used for the central differences.
pub const STEP: f64 = 1e-5;

/// Components whose analytic and numeric magnitudes are both below this
/// are compared absolutely; relative error is meaningless at that scale.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub passed: bool,
    pub max_relative_error: f64,
    /// `(parameter index, entry index)` of the worst component.
    pub worst: (usize, usize),
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

/// Compare the gradients currently stored in `model` against central
/// differences of `loss`. The relative error of one component is
/// `|a - n| / max(|a|, |n|, MAGNITUDE_FLOOR)`.
pub fn finite_diff_check<M, F>(model: &mut M, mut loss: F, tolerance: f64) -> GradCheckReport
where
    M: Parameterized + ?Sized,
    F: FnMut(&M) -> f64,
{
    let mut report = GradCheckReport {
        passed: true,
        max_relative_error: 0.0,
        worst: (0, 0),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    let n_params = model.params().len();
    for p in 0..n_params {
        let len = model.params()[p].len();
        for i in 0..len {
            let analytic = model.params()[p].grad.data[i];
            let orig = model.params()[p].value.data[i];
            model.params_mut()[p].value.data[i] = orig + STEP;
            let plus = loss(model);
            model.params_mut()[p].value.data[i] = orig - STEP;
            let minus = loss(model);
            model.params_mut()[p].value.data[i] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            let denom = math::abs(analytic)
                .max(math::abs(numeric))
                .max(MAGNITUDE_FLOOR);
            let mut rel = math::abs(analytic - numeric) / denom;
            if rel.is_nan() {
                rel = f64::INFINITY;
            }
            report.checked += 1;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (p, i);
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    report.passed = report.max_relative_error <= tolerance;
    report
}
