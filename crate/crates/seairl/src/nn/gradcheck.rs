//! Finite-difference gradient checking.

/// Relative error between an analytic and a numeric derivative:
/// `|a - n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1.0_f64.max(analytic.abs()).max(numeric.abs())
}

/// Max relative error between `analytic` and central finite differences of
/// `loss` over every coordinate of `params`. `loss` must be a pure,
/// deterministic function of the parameter slice (freeze any noise draws
/// before calling).
pub fn grad_check<F>(params: &[f64], analytic: &[f64], eps: f64, mut loss: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(eps > 0.0, "grad_check needs eps > 0");
    assert_eq!(params.len(), analytic.len());
    let mut work = params.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..work.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let hi = loss(&work);
        work[i] = orig - eps;
        let lo = loss(&work);
        work[i] = orig;
        let numeric = (hi - lo) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}
