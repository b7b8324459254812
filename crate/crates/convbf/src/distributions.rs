//! Noise distributions, seeded sampling, and the exponential density
//! rescaling (tempering) transform used by the convolutional filters.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg;

const LN_2PI: f64 = 1.8378770664093453;

/// Multivariate Gaussian with full covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianSpec {
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

    pub fn zero_mean(covariance: DMatrix<f64>) -> Result<Self> {
        let n = covariance.nrows();
        Self::new(DVector::zeros(n), covariance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let chol = linalg::cholesky(&self.covariance)?;
        let diff = x - &self.mean;
        let solved = chol.solve(&diff);
        let maha = diff.dot(&solved);
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(-0.5 * (self.dim() as f64 * LN_2PI + log_det + maha))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let chol = linalg::cholesky(&self.covariance)?;
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample(StandardNormal));
        Ok(&self.mean + chol.l() * z)
    }

    /// Normalized γ-th power: same mean, covariance scaled by 1/γ.
    pub fn rescale(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            mean: self.mean.clone(),
            covariance: &self.covariance / gamma,
        })
    }
}

/// Independent per-dimension Laplace noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSpec {
    pub location: DVector<f64>,
    pub scale: DVector<f64>,
}

impl LaplaceSpec {
    pub fn new(location: DVector<f64>, scale: DVector<f64>) -> Result<Self> {
        if scale.len() != location.len() {
            return Err(Error::DimensionMismatch {
                expected: location.len(),
                got: scale.len(),
            });
        }
        if scale.iter().any(|b| *b <= 0.0 || !b.is_finite()) {
            return Err(Error::invalid_spec("Laplace scale entries must be positive"));
        }
        Ok(Self { location, scale })
    }

    /// Zero-location Laplace read off a diagonal covariance-style matrix Q:
    /// per-dimension scale b_i = sqrt(Q_ii).
    pub fn from_diag_matrix(q: &DMatrix<f64>) -> Result<Self> {
        let scale = DVector::from_iterator(q.nrows(), q.diagonal().iter().map(|v| v.sqrt()));
        Self::new(DVector::zeros(q.nrows()), scale)
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let mut lp = 0.0;
        for i in 0..self.dim() {
            let b = self.scale[i];
            lp += -(2.0 * b).ln() - (x[i] - self.location[i]).abs() / b;
        }
        Ok(lp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        Ok(DVector::from_fn(self.dim(), |i, _| {
            // inverse CDF on u ∈ (-1/2, 1/2)
            let u: f64 = rng.random::<f64>() - 0.5;
            self.location[i] - self.scale[i] * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        }))
    }

    /// Normalized γ-th power: same location, scale divided by γ.
    pub fn rescale(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            location: self.location.clone(),
            scale: &self.scale / gamma,
        })
    }

    /// Covariance of the product of independent Laplace marginals: diag(2b²).
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.scale.map(|b| 2.0 * b * b))
    }
}

/// Homogeneous-family finite mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum MixtureComponents {
    Gaussian(Vec<GaussianSpec>),
    Laplace(Vec<LaplaceSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub components: MixtureComponents,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>, components: MixtureComponents) -> Result<Self> {
        let n_comp = match &components {
            MixtureComponents::Gaussian(c) => c.len(),
            MixtureComponents::Laplace(c) => c.len(),
        };
        if n_comp == 0 {
            return Err(Error::invalid_spec("mixture needs at least one component"));
        }
        if weights.len() != n_comp {
            return Err(Error::DimensionMismatch {
                expected: n_comp,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid_spec("mixture weights must be nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid_spec(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        let dims: Vec<usize> = match &components {
            MixtureComponents::Gaussian(c) => c.iter().map(|g| g.dim()).collect(),
            MixtureComponents::Laplace(c) => c.iter().map(|l| l.dim()).collect(),
        };
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::invalid_spec("mixture components differ in dimension"));
        }
        Ok(Self { weights, components })
    }

    pub fn dim(&self) -> usize {
        match &self.components {
            MixtureComponents::Gaussian(c) => c[0].dim(),
            MixtureComponents::Laplace(c) => c[0].dim(),
        }
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let mut terms = Vec::with_capacity(self.weights.len());
        for (i, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let lp = match &self.components {
                MixtureComponents::Gaussian(c) => c[i].log_density(x)?,
                MixtureComponents::Laplace(c) => c[i].log_density(x)?,
            };
            terms.push(w.ln() + lp);
        }
        Ok(log_sum_exp(&terms))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = i;
                break;
            }
        }
        match &self.components {
            MixtureComponents::Gaussian(c) => c[idx].sample(rng),
            MixtureComponents::Laplace(c) => c[idx].sample(rng),
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        // Zero-mean components throughout the benchmarks: Σ w_i·C_i plus the
        // between-component mean spread.
        let n = self.dim();
        let mut cov = DMatrix::zeros(n, n);
        let mut mean = DVector::zeros(n);
        for (i, w) in self.weights.iter().enumerate() {
            let (ci, mi) = match &self.components {
                MixtureComponents::Gaussian(c) => (c[i].covariance.clone(), c[i].mean.clone()),
                MixtureComponents::Laplace(c) => (c[i].covariance(), c[i].location.clone()),
            };
            cov += (ci + &mi * mi.transpose()) * *w;
            mean += mi * *w;
        }
        cov - &mean * mean.transpose()
    }
}

/// Independent per-dimension Student-t noise.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentTSpec {
    pub location: DVector<f64>,
    pub scale: DVector<f64>,
    pub dof: f64,
}

impl StudentTSpec {
    pub fn new(location: DVector<f64>, scale: DVector<f64>, dof: f64) -> Result<Self> {
        if scale.len() != location.len() {
            return Err(Error::DimensionMismatch {
                expected: location.len(),
                got: scale.len(),
            });
        }
        if scale.iter().any(|s| *s <= 0.0) {
            return Err(Error::invalid_spec("Student-t scale entries must be positive"));
        }
        if dof <= 0.0 {
            return Err(Error::invalid_spec("Student-t dof must be positive"));
        }
        Ok(Self { location, scale, dof })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let v = self.dof;
        let norm = ln_gamma((v + 1.0) / 2.0)
            - ln_gamma(v / 2.0)
            - 0.5 * (v * std::f64::consts::PI).ln();
        let mut lp = 0.0;
        for i in 0..self.dim() {
            let z = (x[i] - self.location[i]) / self.scale[i];
            lp += norm - self.scale[i].ln() - 0.5 * (v + 1.0) * (z * z / v).ln_1p();
        }
        Ok(lp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let t = StudentT::new(self.dof)
            .map_err(|e| Error::invalid_spec(format!("Student-t: {e}")))?;
        Ok(DVector::from_fn(self.dim(), |i, _| {
            self.location[i] + self.scale[i] * t.sample(rng)
        }))
    }
}

/// Tagged union over the supported noise families.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Gaussian(GaussianSpec),
    Laplace(LaplaceSpec),
    Mixture(MixtureSpec),
    StudentT(StudentTSpec),
}

impl NoiseSpec {
    pub fn dim(&self) -> usize {
        match self {
            NoiseSpec::Gaussian(s) => s.dim(),
            NoiseSpec::Laplace(s) => s.dim(),
            NoiseSpec::Mixture(s) => s.dim(),
            NoiseSpec::StudentT(s) => s.dim(),
        }
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        match self {
            NoiseSpec::Gaussian(s) => s.log_density(x),
            NoiseSpec::Laplace(s) => s.log_density(x),
            NoiseSpec::Mixture(s) => s.log_density(x),
            NoiseSpec::StudentT(s) => s.log_density(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        match self {
            NoiseSpec::Gaussian(s) => s.sample(rng),
            NoiseSpec::Laplace(s) => s.sample(rng),
            NoiseSpec::Mixture(s) => s.sample(rng),
            NoiseSpec::StudentT(s) => s.sample(rng),
        }
    }

    /// Second moment about the mean, as consumed by the Kalman-family filters.
    pub fn covariance(&self) -> DMatrix<f64> {
        match self {
            NoiseSpec::Gaussian(s) => s.covariance.clone(),
            NoiseSpec::Laplace(s) => s.covariance(),
            NoiseSpec::Mixture(s) => s.covariance(),
            NoiseSpec::StudentT(s) => {
                let v = s.dof;
                let factor = if v > 2.0 { v / (v - 2.0) } else { f64::INFINITY };
                DMatrix::from_diagonal(&s.scale.map(|b| factor * b * b))
            }
        }
    }

    /// Normalized γ-th power of the density, staying in the same family.
    /// Only Gaussian and Laplace are closed under this transform.
    pub fn rescale_exponential(&self, gamma: f64) -> Result<NoiseSpec> {
        match self {
            NoiseSpec::Gaussian(s) => Ok(NoiseSpec::Gaussian(s.rescale(gamma)?)),
            NoiseSpec::Laplace(s) => Ok(NoiseSpec::Laplace(s.rescale(gamma)?)),
            _ => Err(Error::config(
                "exponential rescaling requires Gaussian or Laplace noise",
            )),
        }
    }
}

/// Exponentially distributed threshold on the model-reality distance.
/// `Disabled` is the exact no-mismatch sentinel (rate = +∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentialThreshold {
    Disabled,
    Rate(f64),
}

impl ExponentialThreshold {
    pub fn rate(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(ExponentialThreshold::Rate(rate))
        } else {
            Err(Error::invalid_spec("threshold rate must be positive and finite"))
        }
    }

    pub fn is_disabled(&self) -> bool {
        matches!(self, ExponentialThreshold::Disabled)
    }

    /// Survival function of the threshold at distance d: 1 - F(d) = e^{-rate·d}.
    pub fn survival(&self, d: f64) -> f64 {
        match self {
            ExponentialThreshold::Disabled => {
                if d <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ExponentialThreshold::Rate(r) => (-r * d).exp(),
        }
    }
}

/// Tempering exponent γ = rate/(rate+1); a disabled threshold gives γ = 1.
pub fn gamma_from_rate(threshold: ExponentialThreshold) -> f64 {
    match threshold {
        ExponentialThreshold::Disabled => 1.0,
        ExponentialThreshold::Rate(r) => r / (r + 1.0),
    }
}

/// Numerically stable log(Σ exp(t_i)).
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma <= 0.0 || gamma > 1.0 {
        Err(Error::invalid_spec("gamma must lie in (0, 1]"))
    } else {
        Ok(())
    }
}
