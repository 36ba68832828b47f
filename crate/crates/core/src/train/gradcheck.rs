use super::{Result, TrainError};

/// Gradients smaller than this are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
}

/// Compare `analytic` against central differences of `loss` at `theta`
/// over the coordinates in `coords` (all coordinates when `None`).
/// Returns the largest relative error.
pub fn finite_diff_check<F>(
    mut loss: F,
    theta: &[f64],
    analytic: &[f64],
    eps: f64,
    coords: Option<&[usize]>,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(TrainError::ZeroEpsilon);
    }
    if theta.len() != analytic.len() {
        return Err(TrainError::DimMismatch(format!(
            "{} parameters, {} gradient entries",
            theta.len(),
            analytic.len()
        )));
    }
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..theta.len()).collect();
            &all
        }
    };
    let mut work = theta.to_vec();
    let mut worst = 0.0f64;
    for &i in coords {
        work[i] = theta[i] + eps;
        let up = loss(&work);
        work[i] = theta[i] - eps;
        let down = loss(&work);
        work[i] = theta[i];
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}
