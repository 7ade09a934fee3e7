//! Central finite-difference gradient checking.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Denominator floor for [`relative_error`]. Keeps near-zero derivatives,
/// where central differences are dominated by rounding, from reporting
/// spurious failures.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-4;

/// `|a − b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter group, flat coordinate)` of the worst disagreement.
    pub worst: Option<(usize, usize)>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub coordinates: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

/// Compares `analytic[g][i]` with `(f(θ + h·e_gi) − f(θ − h·e_gi)) / 2h` for
/// every coordinate of every parameter group.
pub fn grad_check<F>(
    mut f: F,
    params: &[Tensor],
    analytic: &[Tensor],
    h: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if params.len() != analytic.len() {
        return Err(Error::Contract(format!(
            "{} parameter groups but {} gradients",
            params.len(),
            analytic.len()
        )));
    }
    for (p, g) in params.iter().zip(analytic) {
        if p.shape() != g.shape() {
            return Err(Error::Contract(format!(
                "gradient shape {:?} vs parameter shape {:?}",
                g.shape(),
                p.shape()
            )));
        }
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        coordinates: 0,
        tolerance: tol,
    };
    let mut probe = params.to_vec();
    for (group, grad) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = probe[group].data()[i];
            probe[group].data_mut()[i] = orig + h;
            let plus = f(&probe)?;
            probe[group].data_mut()[i] = orig - h;
            let minus = f(&probe)?;
            probe[group].data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = grad.data()[i];
            let err = relative_error(a, numeric);
            report.coordinates += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((group, i));
                report.analytic_at_worst = a;
                report.numeric_at_worst = numeric;
            }
        }
    }
    Ok(report)
}
