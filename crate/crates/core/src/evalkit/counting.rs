use crate::error::{invalid, Result};

/// `(MAE, RMSE)` of predicted against true counts.
pub fn counting_errors(pred: &[f64], gt: &[usize]) -> Result<(f64, f64)> {
    if pred.is_empty() || pred.len() != gt.len() {
        return Err(invalid!(
            "counting_errors needs equal non-empty lists, got {} and {}",
            pred.len(),
            gt.len()
        ));
    }
    let n = pred.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, &g) in pred.iter().zip(gt) {
        let r = p - g as f64;
        abs += r.abs();
        sq += r * r;
    }
    Ok((abs / n, (sq / n).sqrt()))
}
