//! Linear-Gaussian filtering: KF, the convolutional KF built from the
//! closed-form covariance inflation, and the Huber-KF baseline.

use nalgebra::{DMatrix, DVector};

use crate::convolution::gaussian_conv_closed_form;
use crate::distributions::ExponentialThreshold;
use crate::error::{Error, Result};
use crate::linalg;

/// Gaussian posterior/prior over the state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: covariance.nrows(),
            });
        }
        linalg::check_spd(&covariance)?;
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Threshold rates for transition (alpha) and measurement (beta) mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvConfig {
    pub alpha: ExponentialThreshold,
    pub beta: ExponentialThreshold,
}

impl ConvConfig {
    pub const DISABLED: ConvConfig = ConvConfig {
        alpha: ExponentialThreshold::Disabled,
        beta: ExponentialThreshold::Disabled,
    };
}

/// Prediction: mean ← A·mean, P ← A·P·Aᵀ + Q.
pub fn kf_predict(
    belief: &GaussianBelief,
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<GaussianBelief> {
    if a.ncols() != belief.dim() || q.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: belief.dim(),
            got: a.ncols(),
        });
    }
    let mean = a * &belief.mean;
    let cov = linalg::symmetrize(&(a * &belief.covariance * a.transpose() + q));
    Ok(GaussianBelief { mean, covariance: cov })
}

/// Joseph-form measurement update.
pub fn kf_update(
    belief: &GaussianBelief,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<GaussianBelief> {
    if c.ncols() != belief.dim() || y.len() != c.nrows() || r.nrows() != c.nrows() {
        return Err(Error::DimensionMismatch {
            expected: belief.dim(),
            got: c.ncols(),
        });
    }
    let innovation = y - c * &belief.mean;
    let s = linalg::symmetrize(&(c * &belief.covariance * c.transpose() + r));
    let s_chol = linalg::cholesky_with_repair(&s)?;
    // K = P·Cᵀ·S⁻¹, via S·Kᵀ = C·Pᵀ
    let k = s_chol.solve(&(c * belief.covariance.transpose())).transpose();
    let mean = &belief.mean + &k * innovation;
    let i_kc = DMatrix::identity(belief.dim(), belief.dim()) - &k * c;
    let cov = linalg::symmetrize(
        &(&i_kc * &belief.covariance * i_kc.transpose() + &k * r * k.transpose()),
    );
    Ok(GaussianBelief { mean, covariance: cov })
}

/// One convolutional-KF step: a standard KF step with Q and R inflated by
/// 1/(2α)·I and 1/(2β)·I respectively. Disabled thresholds reduce it to the
/// plain KF bitwise.
#[allow(clippy::too_many_arguments)]
pub fn convkf_step(
    belief: &GaussianBelief,
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: ConvConfig,
) -> Result<GaussianBelief> {
    let q_eff = gaussian_conv_closed_form(q, cfg.alpha)?;
    let r_eff = gaussian_conv_closed_form(r, cfg.beta)?;
    let predicted = kf_predict(belief, a, &q_eff)?;
    kf_update(&predicted, c, &r_eff, y)
}

/// Result of an iterated robust update.
#[derive(Debug, Clone)]
pub struct RobustUpdate {
    pub belief: GaussianBelief,
    pub converged: bool,
    pub iterations: usize,
}

/// Huber-KF measurement update: IRLS over standardized residuals.
/// Components with |r_i| ≤ delta keep weight 1, larger residuals are
/// downweighted by delta/|r_i|, implemented by inflating R to L·W⁻¹·Lᵀ
/// with L the Cholesky factor of R.
pub fn huber_kf_update(
    belief: &GaussianBelief,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
    delta: f64,
) -> Result<RobustUpdate> {
    if delta <= 0.0 {
        return Err(Error::invalid_spec("Huber delta must be positive"));
    }
    let l = linalg::cholesky(&linalg::symmetrize(r))?;
    let mut current = kf_update(belief, c, r, y)?;
    for iter in 1..=50 {
        let residual = y - c * &current.mean;
        let standardized = l.solve(&residual);
        let weights = standardized.map(|ri| {
            if ri.abs() <= delta {
                1.0
            } else {
                delta / ri.abs()
            }
        });
        let w_inv = DMatrix::from_diagonal(&weights.map(|w| 1.0 / w));
        let r_weighted = linalg::symmetrize(&(l.l() * w_inv * l.l().transpose()));
        let next = kf_update(belief, c, &r_weighted, y)?;
        let shift = (&next.mean - &current.mean).norm();
        current = next;
        if shift < 1e-8 {
            return Ok(RobustUpdate { belief: current, converged: true, iterations: iter });
        }
    }
    Ok(RobustUpdate { belief: current, converged: false, iterations: 50 })
}
