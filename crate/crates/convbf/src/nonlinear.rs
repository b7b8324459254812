//! Nonlinear Gaussian-approximation filters: EKF, iterated EKF, UKF, and
//! the Huber-UKF baseline. Convolutional variants are obtained by passing
//! inflated Q_eff/R_eff from the Gaussian closed form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kalman::{huber_kf_update, kf_update, GaussianBelief, RobustUpdate};
use crate::linalg;
use crate::models::StateSpaceModel;

/// Unscented transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnscentedParams {
    pub spread: f64,
    pub prior_knowledge: f64,
    pub secondary: f64,
}

impl Default for UnscentedParams {
    fn default() -> Self {
        Self { spread: 1e-3, prior_knowledge: 2.0, secondary: 0.0 }
    }
}

impl UnscentedParams {
    pub fn lambda(&self, n: usize) -> f64 {
        self.spread * self.spread * (n as f64 + self.secondary) - n as f64
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n as f64 + self.lambda(n) <= 0.0 {
            return Err(Error::invalid_spec("unscented params give n + lambda <= 0"));
        }
        Ok(())
    }
}

/// 2n+1 sigma points with mean and covariance weights.
#[derive(Debug, Clone)]
pub struct SigmaSet {
    pub points: Vec<DVector<f64>>,
    pub mean_weights: Vec<f64>,
    pub cov_weights: Vec<f64>,
}

impl SigmaSet {
    pub fn weighted_mean(&self) -> DVector<f64> {
        self.points
            .iter()
            .zip(&self.mean_weights)
            .fold(DVector::zeros(self.points[0].len()), |acc, (p, w)| acc + p * *w)
    }
}

pub fn sigma_points(belief: &GaussianBelief, params: UnscentedParams) -> Result<SigmaSet> {
    let n = belief.dim();
    params.validate(n)?;
    let lambda = params.lambda(n);
    let scaled = &belief.covariance * (n as f64 + lambda);
    let chol = linalg::cholesky_with_repair(&linalg::symmetrize(&scaled))?;
    let l = chol.l();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(belief.mean.clone());
    for j in 0..n {
        let col = l.column(j).into_owned();
        points.push(&belief.mean + &col);
        points.push(&belief.mean - &col);
    }
    let w0m = lambda / (n as f64 + lambda);
    let w0c = w0m + 1.0 - params.spread * params.spread + params.prior_knowledge;
    let wi = 0.5 / (n as f64 + lambda);
    let mut mean_weights = vec![wi; 2 * n + 1];
    let mut cov_weights = vec![wi; 2 * n + 1];
    mean_weights[0] = w0m;
    cov_weights[0] = w0c;
    Ok(SigmaSet { points, mean_weights, cov_weights })
}

/// EKF prediction: mean ← f(mean), P ← F·P·Fᵀ + Q_eff.
pub fn ekf_predict(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    q_eff: &DMatrix<f64>,
) -> Result<GaussianBelief> {
    let f = (model.transition_jacobian)(&belief.mean);
    let mean = (model.transition_fn)(&belief.mean);
    let cov = linalg::symmetrize(&(&f * &belief.covariance * f.transpose() + q_eff));
    Ok(GaussianBelief { mean, covariance: cov })
}

/// EKF update: linearize g at the predicted mean, Joseph-form update on the
/// residual y − g(mean).
pub fn ekf_update(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    r_eff: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<GaussianBelief> {
    let g = (model.measurement_jacobian)(&belief.mean);
    // shift so the linear update sees residual y − g(mean)
    let y_lin = y - (model.measurement_fn)(&belief.mean) + &g * &belief.mean;
    kf_update(belief, &g, r_eff, &y_lin)
}

/// Huber update on the EKF linearization: linearize g at the predicted mean,
/// then run the IRLS measurement update. On a linear model this is the exact
/// Huber-KF update.
pub fn ekf_huber_update(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    r_eff: &DMatrix<f64>,
    y: &DVector<f64>,
    delta: f64,
) -> Result<RobustUpdate> {
    let g = (model.measurement_jacobian)(&belief.mean);
    let y_lin = y - (model.measurement_fn)(&belief.mean) + &g * &belief.mean;
    huber_kf_update(belief, &g, r_eff, &y_lin, delta)
}

/// Iterated EKF update: Gauss-Newton relinearization of g around the current
/// posterior mean estimate. Covariance comes from the final linearization.
pub fn iekf_update(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    r_eff: &DMatrix<f64>,
    y: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<RobustUpdate> {
    if max_iters == 0 {
        return Err(Error::config("iekf needs max_iters >= 1"));
    }
    let mut eta = belief.mean.clone();
    let mut result = None;
    for iter in 1..=max_iters {
        let g = (model.measurement_jacobian)(&eta);
        // linearize around eta: y ≈ g(eta) + G(x − eta)
        let y_lin = y - (model.measurement_fn)(&eta) + &g * &eta;
        let updated = kf_update(belief, &g, r_eff, &y_lin)?;
        let shift = (&updated.mean - &eta).norm();
        eta = updated.mean.clone();
        result = Some(updated);
        if shift < tol {
            return Ok(RobustUpdate {
                belief: result.unwrap(),
                converged: true,
                iterations: iter,
            });
        }
    }
    Ok(RobustUpdate { belief: result.unwrap(), converged: false, iterations: max_iters })
}

/// UKF prediction: propagate sigma points through f and add Q_eff.
pub fn ukf_predict(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    q_eff: &DMatrix<f64>,
    params: UnscentedParams,
) -> Result<GaussianBelief> {
    let sigma = sigma_points(belief, params)?;
    let propagated: Vec<DVector<f64>> =
        sigma.points.iter().map(|p| (model.transition_fn)(p)).collect();
    let mean = propagated
        .iter()
        .zip(&sigma.mean_weights)
        .fold(DVector::zeros(model.state_dim), |acc, (p, w)| acc + p * *w);
    let mut cov = q_eff.clone();
    for (p, w) in propagated.iter().zip(&sigma.cov_weights) {
        let d = p - &mean;
        cov += &d * d.transpose() * *w;
    }
    Ok(GaussianBelief { mean, covariance: linalg::symmetrize(&cov) })
}

/// Statistical linearization of g through sigma points of a predicted belief:
/// equivalent measurement matrix, equivalent noise, and predicted measurement.
struct StatLinearization {
    c_eq: DMatrix<f64>,
    r_eq: DMatrix<f64>,
    y_pred: DVector<f64>,
}

fn statistical_linearization(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    r_eff: &DMatrix<f64>,
    params: UnscentedParams,
) -> Result<StatLinearization> {
    let sigma = sigma_points(belief, params)?;
    let projected: Vec<DVector<f64>> =
        sigma.points.iter().map(|p| (model.measurement_fn)(p)).collect();
    let y_pred = projected
        .iter()
        .zip(&sigma.mean_weights)
        .fold(DVector::zeros(model.meas_dim), |acc, (p, w)| acc + p * *w);
    let mut pyy = DMatrix::zeros(model.meas_dim, model.meas_dim);
    let mut pxy = DMatrix::zeros(model.state_dim, model.meas_dim);
    for ((x, yp), w) in sigma.points.iter().zip(&projected).zip(&sigma.cov_weights) {
        let dy = yp - &y_pred;
        let dx = x - &belief.mean;
        pyy += &dy * dy.transpose() * *w;
        pxy += &dx * dy.transpose() * *w;
    }
    // C_eq = Pxyᵀ P⁻¹; R_eq absorbs the nonlinearity residual so that
    // C_eq·P·C_eqᵀ + R_eq = Pyy + R_eff exactly.
    let p_chol = linalg::cholesky_with_repair(&belief.covariance)?;
    let c_eq = p_chol.solve(&pxy).transpose();
    let r_eq = linalg::symmetrize(
        &(r_eff + &pyy - &c_eq * &belief.covariance * c_eq.transpose()),
    );
    Ok(StatLinearization { c_eq, r_eq, y_pred })
}

/// UKF update of a predicted belief.
pub fn ukf_update(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    r_eff: &DMatrix<f64>,
    y: &DVector<f64>,
    params: UnscentedParams,
) -> Result<GaussianBelief> {
    let lin = statistical_linearization(belief, model, r_eff, params)?;
    let y_lin = y - &lin.y_pred + &lin.c_eq * &belief.mean;
    kf_update(belief, &lin.c_eq, &lin.r_eq, &y_lin)
}

/// Full UKF step: sigma-point prediction then unscented update.
pub fn ukf_step(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    q_eff: &DMatrix<f64>,
    r_eff: &DMatrix<f64>,
    y: &DVector<f64>,
    params: UnscentedParams,
) -> Result<GaussianBelief> {
    let predicted = ukf_predict(belief, model, q_eff, params)?;
    ukf_update(&predicted, model, r_eff, y, params)
}

/// Huber-UKF update: statistically linearize g via sigma points, then run
/// the Huber IRLS update on the equivalent linear measurement.
pub fn huber_ukf_update(
    belief: &GaussianBelief,
    model: &StateSpaceModel,
    r_eff: &DMatrix<f64>,
    y: &DVector<f64>,
    params: UnscentedParams,
    delta: f64,
) -> Result<RobustUpdate> {
    let lin = statistical_linearization(belief, model, r_eff, params)?;
    let y_lin = y - &lin.y_pred + &lin.c_eq * &belief.mean;
    huber_kf_update(belief, &lin.c_eq, &lin.r_eq, &y_lin, delta)
}
