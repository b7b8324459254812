//! RMSE metric and box-plot statistics.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::Trajectory;

/// Root mean square error of estimates against the true states x₁..x_M.
pub fn rmse(truth: &Trajectory, estimates: &[DVector<f64>]) -> Result<f64> {
    if estimates.len() != truth.steps() {
        return Err(Error::DimensionMismatch {
            expected: truth.steps(),
            got: estimates.len(),
        });
    }
    let sq_sum: f64 = truth.states[1..]
        .iter()
        .zip(estimates)
        .map(|(x, xh)| (x - xh).norm_squared())
        .sum();
    Ok((sq_sum / estimates.len() as f64).sqrt())
}

/// Box-plot statistics over a Monte Carlo campaign. Failed runs are stored
/// as NaN in `per_run_rmse` and excluded from the order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseSummary {
    pub per_run_rmse: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub failed_runs: usize,
}

/// Linear-interpolation quantile on a sorted sample (inclusive method).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(per_run: &[f64]) -> Result<RmseSummary> {
    let mut finite: Vec<f64> = per_run.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::config("summary needs at least one finite RMSE value"));
    }
    finite.sort_by(f64::total_cmp);
    let failed_runs = per_run.len() - finite.len();
    Ok(RmseSummary {
        per_run_rmse: per_run.to_vec(),
        mean: finite.iter().sum::<f64>() / finite.len() as f64,
        median: quantile(&finite, 0.5),
        q1: quantile(&finite, 0.25),
        q3: quantile(&finite, 0.75),
        min: finite[0],
        max: finite[finite.len() - 1],
        failed_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn traj(states: Vec<Vec<f64>>) -> Trajectory {
        let states: Vec<DVector<f64>> = states.into_iter().map(DVector::from_vec).collect();
        let m = states.len() - 1;
        Trajectory {
            states,
            measurements: vec![DVector::zeros(1); m],
        }
    }

    #[test]
    fn rmse_zero_for_perfect_estimates() {
        let t = traj(vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 4.0]]);
        let est = vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![3.0, 4.0])];
        assert_eq!(rmse(&t, &est).unwrap(), 0.0);
    }

    #[test]
    fn rmse_hand_values() {
        let t = traj(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let est = vec![DVector::from_vec(vec![0.0, 0.0])];
        assert_abs_diff_eq!(rmse(&t, &est).unwrap(), 1.0, epsilon = 1e-15);

        // error norms 3 and 4 over two steps → sqrt(12.5)
        let t = traj(vec![vec![0.0], vec![3.0], vec![4.0]]);
        let est = vec![DVector::zeros(1), DVector::zeros(1)];
        assert_abs_diff_eq!(rmse(&t, &est).unwrap(), 12.5_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn rmse_length_mismatch() {
        let t = traj(vec![vec![0.0], vec![1.0]]);
        assert!(rmse(&t, &[]).is_err());
    }

    #[test]
    fn summarize_single_value() {
        let s = summarize(&[2.5]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 2.5);
        assert_eq!(s.q3, 2.5);
        assert_eq!(s.min, 2.5);
        assert_eq!(s.max, 2.5);
    }

    #[test]
    fn summarize_inclusive_quartiles() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(s.median, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q1, 1.75, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q3, 3.25, epsilon = 1e-15);
        assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        assert!(s.mean >= s.min && s.mean <= s.max);
    }

    #[test]
    fn summarize_order_invariant() {
        let a = summarize(&[3.0, 1.0, 4.0, 1.5, 9.0]).unwrap();
        let b = summarize(&[9.0, 1.5, 4.0, 1.0, 3.0]).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.median, b.median);
        assert_eq!(a.q1, b.q1);
        assert_eq!(a.q3, b.q3);
    }

    #[test]
    fn summarize_counts_failed_runs() {
        let s = summarize(&[1.0, f64::NAN, 2.0]).unwrap();
        assert_eq!(s.failed_runs, 1);
        assert_abs_diff_eq!(s.mean, 1.5, epsilon = 1e-15);
        assert!(summarize(&[f64::NAN]).is_err());
        assert!(summarize(&[]).is_err());
    }
}
