//! State-space models with separate nominal (filter-side) and true
//! (simulation-side) noise descriptions, plus the three benchmark systems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::distributions::{
    GaussianSpec, LaplaceSpec, MixtureComponents, MixtureSpec, NoiseSpec,
};
use crate::error::{Error, Result};

pub type VecFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Which side of the model the truth deviates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MismatchCase {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "a")]
    CaseATransition,
    #[serde(rename = "b")]
    CaseBMeasurement,
}

impl MismatchCase {
    pub fn name(&self) -> &'static str {
        match self {
            MismatchCase::None => "none",
            MismatchCase::CaseATransition => "a",
            MismatchCase::CaseBMeasurement => "b",
        }
    }

    pub fn parse(s: &str) -> Result<MismatchCase> {
        match s {
            "none" => Ok(MismatchCase::None),
            "a" => Ok(MismatchCase::CaseATransition),
            "b" => Ok(MismatchCase::CaseBMeasurement),
            other => Err(Error::config(format!("unknown mismatch case '{other}'"))),
        }
    }
}

/// Initial state description.
#[derive(Debug, Clone)]
pub enum InitialState {
    Gaussian(GaussianSpec),
    Point(DVector<f64>),
}

pub struct StateSpaceModel {
    pub state_dim: usize,
    pub meas_dim: usize,
    pub transition_fn: VecFn,
    pub transition_jacobian: JacFn,
    pub measurement_fn: VecFn,
    pub measurement_jacobian: JacFn,
    pub nominal_process_noise: NoiseSpec,
    pub nominal_meas_noise: NoiseSpec,
    pub true_process_noise: NoiseSpec,
    pub true_meas_noise: NoiseSpec,
    pub init: InitialState,
}

impl StateSpaceModel {
    /// Gaussian belief handed to the filters at t = 0. Point inits get a
    /// small SPD seed covariance 1e-2·I.
    pub fn initial_belief(&self) -> GaussianSpec {
        match &self.init {
            InitialState::Gaussian(g) => g.clone(),
            InitialState::Point(x0) => GaussianSpec::new(
                x0.clone(),
                DMatrix::identity(self.state_dim, self.state_dim) * 1e-2,
            )
            .expect("seed covariance is SPD"),
        }
    }

    pub fn validate_dims(&self) -> Result<()> {
        if self.nominal_process_noise.dim() != self.state_dim
            || self.true_process_noise.dim() != self.state_dim
        {
            return Err(Error::invalid_spec("process noise dimension mismatch"));
        }
        if self.nominal_meas_noise.dim() != self.meas_dim
            || self.true_meas_noise.dim() != self.meas_dim
        {
            return Err(Error::invalid_spec("measurement noise dimension mismatch"));
        }
        Ok(())
    }
}

/// States x_0..x_M and measurements y_1..y_M.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.measurements.len()
    }
}

/// Simulate with the TRUE noises: x_t = f(x_{t-1}) + ξ, y_t = g(x_t) + ζ.
pub fn simulate<R: Rng + ?Sized>(
    model: &StateSpaceModel,
    steps: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::config("simulation needs at least one step"));
    }
    let x0 = match &model.init {
        InitialState::Gaussian(g) => g.sample(rng)?,
        InitialState::Point(p) => p.clone(),
    };
    let mut states = Vec::with_capacity(steps + 1);
    let mut measurements = Vec::with_capacity(steps);
    states.push(x0);
    for t in 0..steps {
        let x = (model.transition_fn)(&states[t]) + model.true_process_noise.sample(rng)?;
        let y = (model.measurement_fn)(&x) + model.true_meas_noise.sample(rng)?;
        states.push(x);
        measurements.push(y);
    }
    Ok(Trajectory { states, measurements })
}

fn gaussian_mixture(base_cov: &DMatrix<f64>, inflation: f64) -> NoiseSpec {
    let small = GaussianSpec::zero_mean(base_cov.clone()).expect("SPD base");
    let big = GaussianSpec::zero_mean(base_cov * inflation).expect("SPD inflated");
    NoiseSpec::Mixture(
        MixtureSpec::new(vec![0.9, 0.1], MixtureComponents::Gaussian(vec![small, big]))
            .expect("valid mixture"),
    )
}

fn laplace_mixture(base_q: &DMatrix<f64>, inflation: f64) -> NoiseSpec {
    let small = LaplaceSpec::from_diag_matrix(base_q).expect("positive diag");
    let big = LaplaceSpec::from_diag_matrix(&(base_q * inflation)).expect("positive diag");
    NoiseSpec::Mixture(
        MixtureSpec::new(vec![0.9, 0.1], MixtureComponents::Laplace(vec![small, big]))
            .expect("valid mixture"),
    )
}

/// Linear Wiener velocity model: state [px, py, vx, vy], dt = 0.1,
/// position measurements. Q = I₄, R = I₂.
pub fn build_wiener_velocity(case: MismatchCase) -> StateSpaceModel {
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.1, 0.0, //
            0.0, 1.0, 0.0, 0.1, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    let c = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let q = DMatrix::identity(4, 4);
    let r = DMatrix::identity(2, 2);

    let nominal_process = NoiseSpec::Gaussian(GaussianSpec::zero_mean(q.clone()).unwrap());
    let nominal_meas = NoiseSpec::Gaussian(GaussianSpec::zero_mean(r.clone()).unwrap());
    let (true_process, true_meas) = match case {
        MismatchCase::None => (nominal_process.clone(), nominal_meas.clone()),
        MismatchCase::CaseATransition => (gaussian_mixture(&q, 100.0), nominal_meas.clone()),
        MismatchCase::CaseBMeasurement => (nominal_process.clone(), gaussian_mixture(&r, 1000.0)),
    };

    let a_f = a.clone();
    let a_j = a.clone();
    let c_f = c.clone();
    let c_j = c;
    StateSpaceModel {
        state_dim: 4,
        meas_dim: 2,
        transition_fn: Box::new(move |x| &a_f * x),
        transition_jacobian: Box::new(move |_| a_j.clone()),
        measurement_fn: Box::new(move |x| &c_f * x),
        measurement_jacobian: Box::new(move |_| c_j.clone()),
        nominal_process_noise: nominal_process,
        nominal_meas_noise: nominal_meas,
        true_process_noise: true_process,
        true_meas_noise: true_meas,
        init: InitialState::Gaussian(
            GaussianSpec::new(DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]), DMatrix::identity(4, 4))
                .unwrap(),
        ),
    }
}

/// Nonlinear 2-D sequence forecasting system:
/// f(x) = x + κ₁·K·x + κ₂·cos(x), g(x) = x + sin(x), κ₁ = κ₂ = 0.1.
pub fn build_sequence_forecast(case: MismatchCase) -> StateSpaceModel {
    let kappa = 0.1;
    let k = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.1, -1.0]);
    let q = DMatrix::identity(2, 2);
    let r = DMatrix::identity(2, 2);

    let nominal_process = NoiseSpec::Gaussian(GaussianSpec::zero_mean(q.clone()).unwrap());
    let nominal_meas = NoiseSpec::Gaussian(GaussianSpec::zero_mean(r.clone()).unwrap());
    let (true_process, true_meas) = match case {
        MismatchCase::None => (nominal_process.clone(), nominal_meas.clone()),
        MismatchCase::CaseATransition => (gaussian_mixture(&q, 100.0), nominal_meas.clone()),
        MismatchCase::CaseBMeasurement => (nominal_process.clone(), gaussian_mixture(&r, 1000.0)),
    };

    let k_f = k.clone();
    let k_j = k;
    StateSpaceModel {
        state_dim: 2,
        meas_dim: 2,
        transition_fn: Box::new(move |x| x + kappa * (&k_f * x) + kappa * x.map(f64::cos)),
        transition_jacobian: Box::new(move |x| {
            DMatrix::identity(2, 2) + kappa * &k_j
                - kappa * DMatrix::from_diagonal(&x.map(f64::sin))
        }),
        measurement_fn: Box::new(|x| x + x.map(f64::sin)),
        measurement_jacobian: Box::new(|x| {
            DMatrix::identity(2, 2) + DMatrix::from_diagonal(&x.map(f64::cos))
        }),
        nominal_process_noise: nominal_process,
        nominal_meas_noise: nominal_meas,
        true_process_noise: true_process,
        true_meas_noise: true_meas,
        init: InitialState::Gaussian(
            GaussianSpec::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap(),
        ),
    }
}

/// Isothermal gas-phase reactor 2A ⇌ B, Euler-discretized with dt = 0.1.
/// State [P_A, P_B], scalar measurement P_A + P_B, Laplace noises.
pub fn build_gas_reactor(case: MismatchCase) -> StateSpaceModel {
    let (k1, k2, dt) = (0.16, 0.0064, 0.1);
    let q = DMatrix::identity(2, 2) * 1e-4;
    let r = DMatrix::identity(1, 1);

    let nominal_process = NoiseSpec::Laplace(LaplaceSpec::from_diag_matrix(&q).unwrap());
    let nominal_meas = NoiseSpec::Laplace(LaplaceSpec::from_diag_matrix(&r).unwrap());
    let (true_process, true_meas) = match case {
        MismatchCase::None => (nominal_process.clone(), nominal_meas.clone()),
        MismatchCase::CaseATransition => (laplace_mixture(&q, 1000.0), nominal_meas.clone()),
        MismatchCase::CaseBMeasurement => (nominal_process.clone(), laplace_mixture(&r, 1000.0)),
    };

    StateSpaceModel {
        state_dim: 2,
        meas_dim: 1,
        transition_fn: Box::new(move |x| {
            let (pa, pb) = (x[0], x[1]);
            DVector::from_vec(vec![
                pa + (-2.0 * k1 * pa * pa + 2.0 * k2 * pb) * dt,
                pb + (k1 * pa * pa - k2 * pb) * dt,
            ])
        }),
        transition_jacobian: Box::new(move |x| {
            let pa = x[0];
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    1.0 - 4.0 * k1 * pa * dt,
                    2.0 * k2 * dt,
                    2.0 * k1 * pa * dt,
                    1.0 - k2 * dt,
                ],
            )
        }),
        measurement_fn: Box::new(|x| DVector::from_element(1, x[0] + x[1])),
        measurement_jacobian: Box::new(|_| DMatrix::from_row_slice(1, 2, &[1.0, 1.0])),
        nominal_process_noise: nominal_process,
        nominal_meas_noise: nominal_meas,
        true_process_noise: true_process,
        true_meas_noise: true_meas,
        init: InitialState::Point(DVector::from_vec(vec![0.1, 4.5])),
    }
}

/// Central finite-difference Jacobian, used to cross-check analytic Jacobians.
pub fn finite_difference_jacobian(
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let fx = f(x);
    let (m, n) = (fx.len(), x.len());
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}
