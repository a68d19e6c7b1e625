use super::SimError;
use crate::linalg::DenseMatrix;

pub const CALIBRATION_BINS: usize = 20;

fn check_len(expected: usize, found: usize) -> Result<(), SimError> {
    if expected == found {
        Ok(())
    } else {
        Err(SimError::Shape { expected, found })
    }
}

/// `(1/n) ‖X β_true − X β̂‖²`.
pub fn mse(beta_hat: &[f64], beta_true: &[f64], x: &DenseMatrix) -> Result<f64, SimError> {
    check_len(x.cols(), beta_hat.len())?;
    check_len(x.cols(), beta_true.len())?;
    let diff: Vec<f64> = beta_true.iter().zip(beta_hat).map(|(t, h)| t - h).collect();
    let fit = x.mul_vec(&diff);
    Ok(fit.iter().map(|v| v * v).sum::<f64>() / x.rows() as f64)
}

/// Relative prediction gain `(MSE(0) − MSE(β̂)) / MSE(0)`; one at the truth,
/// zero at the zero estimator.
pub fn rpg(beta_hat: &[f64], beta_true: &[f64], x: &DenseMatrix) -> Result<f64, SimError> {
    let zero = vec![0.0; x.cols()];
    let base = mse(&zero, beta_true, x)?;
    if base == 0.0 {
        return Err(SimError::DegenerateDenominator);
    }
    Ok((base - mse(beta_hat, beta_true, x)?) / base)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_pip: f64,
    /// Fraction of covariates in the bin that are truly causal.
    pub tp_fraction: f64,
    /// Standard error of `tp_fraction`, `sqrt(t(1 − t)/count)`.
    pub se: f64,
}

/// Group PIPs into 20 bins `[0.05(i − 1), 0.05 i)`, the last one closed.
/// Empty bins are kept with zero count.
pub fn calibration_bins(pips: &[f64], causal: &[bool]) -> Result<Vec<CalibrationBin>, SimError> {
    check_len(pips.len(), causal.len())?;
    if let Some(bad) = pips.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(SimError::Spec(format!("PIP {bad} outside [0, 1]")));
    }
    let width = 1.0 / CALIBRATION_BINS as f64;
    let mut count = [0usize; CALIBRATION_BINS];
    let mut sum = [0.0; CALIBRATION_BINS];
    let mut hits = [0usize; CALIBRATION_BINS];
    for (&p, &c) in pips.iter().zip(causal) {
        let b = ((p * CALIBRATION_BINS as f64) as usize).min(CALIBRATION_BINS - 1);
        count[b] += 1;
        sum[b] += p;
        hits[b] += usize::from(c);
    }
    Ok((0..CALIBRATION_BINS)
        .map(|b| {
            let (mean_pip, tp_fraction, se) = if count[b] == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let c = count[b] as f64;
                let t = hits[b] as f64 / c;
                (sum[b] / c, t, (t * (1.0 - t) / c).sqrt())
            };
            CalibrationBin {
                lower: b as f64 * width,
                upper: (b + 1) as f64 * width,
                count: count[b],
                mean_pip,
                tp_fraction,
                se,
            }
        })
        .collect())
}
