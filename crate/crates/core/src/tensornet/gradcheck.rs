use super::ParamStore;
use crate::error::Result;

/// Denominator floor for [`relative_error`]; below it the comparison is
/// effectively absolute.
const REL_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// (parameter name, flat index, analytic, numeric) of the worst scalar.
    pub worst: Option<(String, usize, f64, f64)>,
}

/// Compares the gradients currently stored in `store` against central
/// differences of `loss` with step `h`, perturbing every scalar parameter.
///
/// `store` is restored to its original values before returning.
pub fn check_gradients<F>(store: &mut ParamStore, h: f64, mut loss: F) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for i in 0..store.value(id).len() {
            let original = store.value(id)[i];
            store.value_mut(id)[i] = original + h;
            let plus = loss(store)?;
            store.value_mut(id)[i] = original - h;
            let minus = loss(store)?;
            store.value_mut(id)[i] = original;

            let numeric = (plus - minus) / (2.0 * h);
            let analytic = store.grad(id)[i];
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((store.name(id).to_string(), i, analytic, numeric));
            }
        }
    }
    Ok(report)
}
