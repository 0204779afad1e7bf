//! Deterministic ensemble transform Kalman filter: analysis update,
//! covariance inflation, and a classical Kalman filter used as a test oracle.
//!
//! The analysis works in the k-dimensional ensemble space. With background
//! perturbations `X` (state dimension x k) and a linear observation operator
//! `H`, the update is
//!
//! ```text
//! P~ = [(k-1) I / rho + (H X)^T R^-1 (H X)]^-1
//! mean_a = mean_b + X P~ (H X)^T R^-1 (y - H mean_b)
//! X_a = X [(k-1) P~]^(1/2)          (unique symmetric square root)
//! ```
//!
//! The division by `rho >= 1` realizes multiplicative inflation; it is
//! algebraically the same as scaling the background covariance by `rho`.
//! No randomly perturbed observations are involved; the filter is
//! deterministic.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Float;

/// An ordered collection of equally sized state vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T: Float> {
    members: Vec<DVector<T>>,
}

impl<T: Float> Ensemble<T> {
    /// At least two members, all with the same nonzero dimension and finite
    /// entries.
    pub fn new(members: Vec<DVector<T>>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidState(format!(
                "an ensemble needs at least 2 members, got {}",
                members.len()
            )));
        }
        let dim = members[0].len();
        if dim == 0 {
            return Err(Error::InvalidState("members must be non-empty".to_string()));
        }
        for (i, m) in members.iter().enumerate() {
            if m.len() != dim {
                return Err(Error::InvalidState(format!(
                    "member {i} has dimension {}, expected {dim}",
                    m.len()
                )));
            }
            if m.iter().any(|v| !v.finite()) {
                return Err(Error::InvalidState(format!(
                    "member {i} has a non-finite entry"
                )));
            }
        }
        Ok(Self { members })
    }

    /// Number of members.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn members(&self) -> &[DVector<T>] {
        &self.members
    }

    pub fn member(&self, index: usize) -> &DVector<T> {
        &self.members[index]
    }

    /// Ensemble mean vector.
    pub fn mean(&self) -> DVector<T> {
        let mut mean = DVector::zeros(self.dim());
        for m in &self.members {
            mean += m;
        }
        mean / T::of(self.size() as f64)
    }

    /// Perturbation matrix: column `i` is member `i` minus the mean. Columns
    /// sum to zero by construction.
    pub fn perturbations(&self) -> DMatrix<T> {
        let mean = self.mean();
        let mut x = DMatrix::zeros(self.dim(), self.size());
        for (i, m) in self.members.iter().enumerate() {
            x.set_column(i, &(m - &mean));
        }
        x
    }

    /// Sample covariance `X X^T / (k - 1)`.
    pub fn sample_covariance(&self) -> DMatrix<T> {
        let x = self.perturbations();
        let k = self.size();
        &x * x.transpose() / T::of(k as f64 - 1.0)
    }

    /// The values of one state coordinate across members.
    pub fn coordinate(&self, index: usize) -> Vec<T> {
        self.members.iter().map(|m| m[index]).collect()
    }
}

/// Diagonal observation-error covariance given by per-coordinate standard
/// deviations (log scale in this artifact).
#[derive(Debug, Clone, PartialEq)]
pub struct ObsErrorModel<T> {
    sds: Vec<T>,
}

impl<T: Float> ObsErrorModel<T> {
    pub fn new(sds: Vec<T>) -> Result<Self> {
        if sds.is_empty() {
            return Err(Error::InvalidParams(
                "observation error model needs at least one coordinate".to_string(),
            ));
        }
        for (i, sd) in sds.iter().enumerate() {
            if !sd.finite() || *sd <= T::zero() {
                return Err(Error::InvalidParams(format!(
                    "observation sd {i} must be positive and finite, got {sd}"
                )));
            }
        }
        Ok(Self { sds })
    }

    /// The same standard deviation for every coordinate.
    pub fn uniform(sd: T, dim: usize) -> Result<Self> {
        Self::new(vec![sd; dim])
    }

    pub fn dim(&self) -> usize {
        self.sds.len()
    }

    pub fn sds(&self) -> &[T] {
        &self.sds
    }

    fn inverse_variances(&self) -> Vec<T> {
        self.sds.iter().map(|sd| T::one() / (*sd * *sd)).collect()
    }
}

/// Relative eigenvalue threshold below which the ensemble-space system is
/// reported as singular.
const SINGULARITY_EPS: f64 = 1e-12;

/// ETKF analysis update of a background ensemble against one observation
/// vector. `rho >= 1` is the multiplicative inflation factor.
pub fn etkf_analysis<T: Float>(
    bg: &Ensemble<T>,
    y: &DVector<T>,
    obs_op: &DMatrix<T>,
    err: &ObsErrorModel<T>,
    rho: T,
) -> Result<Ensemble<T>> {
    let k = bg.size();
    let l = bg.dim();
    let m = y.len();
    if obs_op.nrows() != m || obs_op.ncols() != l {
        return Err(Error::InvalidState(format!(
            "observation operator must be {m} x {l}, got {} x {}",
            obs_op.nrows(),
            obs_op.ncols()
        )));
    }
    if err.dim() != m {
        return Err(Error::InvalidState(format!(
            "observation error model has dimension {}, expected {m}",
            err.dim()
        )));
    }
    if !rho.finite() || rho < T::one() {
        return Err(Error::InvalidParams(format!(
            "multiplicative inflation must satisfy rho >= 1, got {rho}"
        )));
    }

    let mean_b = bg.mean();
    let x_b = bg.perturbations();
    let hx = obs_op * &x_b;
    let rinv = err.inverse_variances();

    // (H X)^T R^-1 (H X) accumulated with R^-1 as a row scaling.
    let mut rinv_hx = hx.clone();
    for (i, w) in rinv.iter().enumerate() {
        rinv_hx.row_mut(i).scale_mut(*w);
    }
    let mut system = hx.transpose() * &rinv_hx;
    let ridge = T::of(k as f64 - 1.0) / rho;
    for i in 0..k {
        system[(i, i)] += ridge;
    }

    let eig = nalgebra::linalg::SymmetricEigen::new(system);
    let max_eig = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, v| acc.max(*v));
    let min_eig = eig
        .eigenvalues
        .iter()
        .fold(max_eig, |acc, v| acc.min(*v));
    if min_eig <= max_eig * T::of(SINGULARITY_EPS) {
        return Err(Error::SingularSystem {
            min_eigenvalue: min_eig.as_f64(),
        });
    }

    let q = &eig.eigenvectors;
    let inv_eig = DVector::from_iterator(k, eig.eigenvalues.iter().map(|v| T::one() / *v));
    let p_tilde = q * DMatrix::from_diagonal(&inv_eig) * q.transpose();
    let sqrt_weights = DVector::from_iterator(
        k,
        eig.eigenvalues
            .iter()
            .map(|v| (T::of(k as f64 - 1.0) / *v).sqrt()),
    );
    let transform = q * DMatrix::from_diagonal(&sqrt_weights) * q.transpose();

    let mut innovation = y - obs_op * &mean_b;
    for (i, w) in rinv.iter().enumerate() {
        innovation[i] *= *w;
    }
    let mean_a = &mean_b + &x_b * (&p_tilde * (hx.transpose() * innovation));
    let x_a = &x_b * transform;

    let members = (0..k).map(|i| &mean_a + x_a.column(i)).collect();
    Ensemble::new(members)
}

/// Additive inflation: each member receives an independent zero-mean draw
/// with covariance `alpha * P_b`, realized inside the ensemble subspace as
/// `X w sqrt(alpha) / sqrt(k-1)` with `w` standard normal. The draws are
/// recentered so the ensemble mean is unchanged.
pub fn additive_inflation<T: Float, R: Rng + ?Sized>(
    ens: &Ensemble<T>,
    alpha: T,
    rng: &mut R,
) -> Ensemble<T> {
    debug_assert!(
        alpha > T::zero() && alpha < T::one(),
        "alpha must lie in (0, 1)"
    );
    let k = ens.size();
    let x = ens.perturbations();
    let scale = alpha.sqrt() / T::of(k as f64 - 1.0).sqrt();
    let mut draws: Vec<DVector<T>> = (0..k)
        .map(|_| {
            let w = DVector::from_iterator(k, (0..k).map(|_| T::std_normal(rng)));
            &x * w * scale
        })
        .collect();
    let mut mean_draw = DVector::zeros(ens.dim());
    for d in &draws {
        mean_draw += d;
    }
    mean_draw /= T::of(k as f64);
    for d in &mut draws {
        *d -= &mean_draw;
    }
    let members = ens
        .members()
        .iter()
        .zip(draws)
        .map(|(m, d)| m + d)
        .collect();
    Ensemble::new(members).expect("inflation preserves ensemble shape")
}

/// Classical Kalman filter update, used as the closed-form oracle for the
/// ensemble analysis:
/// `K = P H^T (H P H^T + R)^-1`, `x_a = x_b + K (y - H x_b)`,
/// `P_a = (I - K H) P_b`.
pub fn kalman_oracle<T: Float>(
    x_b: &DVector<T>,
    p_b: &DMatrix<T>,
    y: &DVector<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let l = x_b.len();
    let m = y.len();
    if h.nrows() != m || h.ncols() != l || p_b.nrows() != l || p_b.ncols() != l {
        return Err(Error::InvalidState(
            "inconsistent Kalman oracle dimensions".to_string(),
        ));
    }
    let innovation_cov = h * p_b * h.transpose() + r;
    let chol =
        nalgebra::linalg::Cholesky::new(innovation_cov).ok_or(Error::SingularInnovation)?;
    let gain = p_b * h.transpose() * chol.inverse();
    let x_a = x_b + &gain * (y - h * x_b);
    let p_a = (DMatrix::identity(l, l) - &gain * h) * p_b;
    Ok((x_a, p_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_row_slice(&[a, b])
    }

    /// Ensemble with sample mean and covariance exactly equal to the given
    /// moments: scaled, mean-centered simplex perturbations transformed by a
    /// Cholesky factor.
    fn moment_matched(
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        k: usize,
        rng: &mut ChaCha12Rng,
    ) -> Ensemble<f64> {
        let l = mean.len();
        let mut x = DMatrix::<f64>::zeros(l, k);
        for j in 0..k {
            for i in 0..l {
                x[(i, j)] = f64::std_normal(rng);
            }
        }
        // center columns
        let row_means: Vec<f64> = (0..l).map(|i| x.row(i).sum() / k as f64).collect();
        for j in 0..k {
            for i in 0..l {
                x[(i, j)] -= row_means[i];
            }
        }
        let sample = &x * x.transpose() / (k as f64 - 1.0);
        let target = nalgebra::linalg::Cholesky::new(cov.clone()).unwrap().l();
        let current = nalgebra::linalg::Cholesky::new(sample).unwrap().l();
        let transform = target
            * current
                .try_inverse()
                .expect("sample Cholesky factor invertible");
        let x = transform * x;
        let members = (0..k).map(|j| mean + x.column(j)).collect();
        Ensemble::new(members).unwrap()
    }

    #[test]
    fn zero_observed_spread_leaves_ensemble_unchanged() {
        // Members differ only in the unobserved coordinate.
        let members = vec![vec2(1.0, 0.0), vec2(1.0, 2.0), vec2(1.0, -2.0)];
        let ens = Ensemble::new(members).unwrap();
        let obs_op = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let err = ObsErrorModel::uniform(0.5, 1).unwrap();
        let y = DVector::from_row_slice(&[3.0]);
        let analysis = etkf_analysis(&ens, &y, &obs_op, &err, 1.0).unwrap();
        for (a, b) in analysis.members().iter().zip(ens.members()) {
            for i in 0..2 {
                assert_relative_eq!(a[i], b[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scalar_case_matches_hand_algebra() {
        // Background N(0, 1), observation y = 1 with unit variance: the
        // posterior is N(0.5, 0.5).
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mean = DVector::from_row_slice(&[0.0]);
        let cov = DMatrix::from_row_slice(1, 1, &[1.0]);
        let ens = moment_matched(&mean, &cov, 50, &mut rng);
        let obs_op = DMatrix::from_row_slice(1, 1, &[1.0]);
        let err = ObsErrorModel::uniform(1.0, 1).unwrap();
        let y = DVector::from_row_slice(&[1.0]);
        let analysis = etkf_analysis(&ens, &y, &obs_op, &err, 1.0).unwrap();
        assert_relative_eq!(analysis.mean()[0], 0.5, epsilon = 1e-8);
        assert_relative_eq!(analysis.sample_covariance()[(0, 0)], 0.5, epsilon = 1e-8);
    }

    #[test]
    fn analysis_perturbations_sum_to_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mean = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let cov = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0],
        );
        let ens = moment_matched(&mean, &cov, 20, &mut rng);
        let obs_op = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let err = ObsErrorModel::new(vec![0.5, 0.8]).unwrap();
        let y = DVector::from_row_slice(&[0.7, -1.0]);
        let analysis = etkf_analysis(&ens, &y, &obs_op, &err, 1.2).unwrap();
        let x_a = analysis.perturbations();
        for i in 0..3 {
            assert!(x_a.row(i).sum().abs() <= 1e-10);
        }
    }

    #[test]
    fn matches_kalman_oracle_on_linear_gaussian_system() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mean = DVector::from_row_slice(&[0.2, -0.5, 1.0]);
        let cov = DMatrix::from_row_slice(
            3,
            3,
            &[1.2, 0.4, 0.0, 0.4, 0.9, 0.1, 0.0, 0.1, 1.5],
        );
        let ens = moment_matched(&mean, &cov, 50, &mut rng);
        let obs_op = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, -1.0]);
        let sds = [0.6, 0.9];
        let err = ObsErrorModel::new(sds.to_vec()).unwrap();
        let r = DMatrix::from_diagonal(&DVector::from_iterator(
            2,
            sds.iter().map(|s| s * s),
        ));
        let y = DVector::from_row_slice(&[0.9, -0.3]);

        let analysis = etkf_analysis(&ens, &y, &obs_op, &err, 1.0).unwrap();
        let (x_a, p_a) = kalman_oracle(&mean, &cov, &y, &obs_op, &r).unwrap();

        let mean_a = analysis.mean();
        for i in 0..3 {
            assert_relative_eq!(mean_a[i], x_a[i], max_relative = 1e-8, epsilon = 1e-10);
        }
        let cov_a = analysis.sample_covariance();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(
                    cov_a[(i, j)],
                    p_a[(i, j)],
                    max_relative = 1e-8,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn analysis_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mean = DVector::from_row_slice(&[0.0, 1.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]);
        let ens = moment_matched(&mean, &cov, 10, &mut rng);
        let obs_op = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let err = ObsErrorModel::uniform(0.4, 1).unwrap();
        let y = DVector::from_row_slice(&[0.3]);
        let a = etkf_analysis(&ens, &y, &obs_op, &err, 1.05).unwrap();
        let b = etkf_analysis(&ens, &y, &obs_op, &err, 1.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multiplicative_inflation_increases_analysis_spread() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mean = DVector::from_row_slice(&[0.0, 1.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]);
        let ens = moment_matched(&mean, &cov, 30, &mut rng);
        let obs_op = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let err = ObsErrorModel::uniform(0.5, 1).unwrap();
        let y = DVector::from_row_slice(&[0.4]);
        let trace = |ens: &Ensemble<f64>| {
            let c = ens.sample_covariance();
            c[(0, 0)] + c[(1, 1)]
        };
        let plain = etkf_analysis(&ens, &y, &obs_op, &err, 1.0).unwrap();
        let inflated = etkf_analysis(&ens, &y, &obs_op, &err, 1.3).unwrap();
        assert!(trace(&inflated) > trace(&plain));
    }

    #[test]
    fn additive_inflation_vanishes_with_alpha() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mean = DVector::from_row_slice(&[2.0, -1.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let ens = moment_matched(&mean, &cov, 10, &mut rng);
        let inflated = additive_inflation(&ens, 1e-15, &mut rng);
        for (a, b) in inflated.members().iter().zip(ens.members()) {
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn additive_inflation_preserves_the_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mean = DVector::from_row_slice(&[0.3, 0.7, -0.2]);
        let cov = DMatrix::identity(3, 3) * 2.0;
        let ens = moment_matched(&mean, &cov, 25, &mut rng);
        let before = ens.mean();
        let inflated = additive_inflation(&ens, 0.4, &mut rng);
        let after = inflated.mean();
        for i in 0..3 {
            assert!((before[i] - after[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn additive_inflation_matches_expected_covariance() {
        // Monte-Carlo estimate of the post-inflation covariance over many
        // independent draws: expectation is (1 + alpha) P_b.
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mean = DVector::from_row_slice(&[0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let ens = moment_matched(&mean, &cov, 4, &mut rng);
        let alpha = 0.5;
        let trials = 10_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..trials {
            let inflated = additive_inflation(&ens, alpha, &mut rng);
            acc += inflated.sample_covariance();
        }
        acc /= trials as f64;
        let expected = cov * (1.0 + alpha);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(acc[(i, j)], expected[(i, j)], max_relative = 0.05);
            }
        }
    }

    #[test]
    fn oracle_ignores_uninformative_observations() {
        let x_b = DVector::from_row_slice(&[1.0, 2.0]);
        let p_b = DMatrix::identity(2, 2);
        let h = DMatrix::identity(2, 2);
        let r = DMatrix::identity(2, 2) * 1e12;
        let y = DVector::from_row_slice(&[100.0, -50.0]);
        let (x_a, _) = kalman_oracle(&x_b, &p_b, &y, &h, &r).unwrap();
        assert_relative_eq!(x_a[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(x_a[1], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn oracle_scalar_case() {
        let x_b = DVector::from_row_slice(&[0.0]);
        let p_b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let h = DMatrix::from_row_slice(1, 1, &[1.0]);
        let r = DMatrix::from_row_slice(1, 1, &[1.0]);
        let y = DVector::from_row_slice(&[1.0]);
        let (x_a, p_a) = kalman_oracle(&x_b, &p_b, &y, &h, &r).unwrap();
        assert_relative_eq!(x_a[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(p_a[(0, 0)], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn oracle_equal_weight_fusion() {
        let x_b = DVector::from_row_slice(&[1.0, -1.0]);
        let p_b = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.7]);
        let h = DMatrix::identity(2, 2);
        let y = DVector::from_row_slice(&[3.0, 1.0]);
        let (x_a, p_a) = kalman_oracle(&x_b, &p_b, &y, &h, &p_b.clone()).unwrap();
        for i in 0..2 {
            assert_relative_eq!(x_a[i], (x_b[i] + y[i]) / 2.0, max_relative = 1e-12);
            for j in 0..2 {
                assert_relative_eq!(p_a[(i, j)], p_b[(i, j)] / 2.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn oracle_rejects_singular_innovation_covariance() {
        let x_b = DVector::from_row_slice(&[0.0]);
        let p_b = DMatrix::from_row_slice(1, 1, &[0.0]);
        let h = DMatrix::from_row_slice(1, 1, &[1.0]);
        let r = DMatrix::from_row_slice(1, 1, &[0.0]);
        let y = DVector::from_row_slice(&[1.0]);
        assert!(matches!(
            kalman_oracle(&x_b, &p_b, &y, &h, &r),
            Err(Error::SingularInnovation)
        ));
    }

    #[test]
    fn ensemble_validation() {
        assert!(Ensemble::<f64>::new(vec![vec2(1.0, 2.0)]).is_err());
        assert!(Ensemble::new(vec![vec2(1.0, 2.0), DVector::from_row_slice(&[1.0])]).is_err());
        assert!(Ensemble::new(vec![vec2(f64::NAN, 2.0), vec2(1.0, 2.0)]).is_err());
        let ens = Ensemble::new(vec![vec2(0.0, 0.0), vec2(2.0, 4.0)]).unwrap();
        assert_eq!(ens.mean(), vec2(1.0, 2.0));
        let x = ens.perturbations();
        assert_eq!(x[(0, 0)], -1.0);
        assert_eq!(x[(1, 1)], 2.0);
        assert_relative_eq!(ens.sample_covariance()[(0, 0)], 2.0);
    }

    #[test]
    fn obs_error_model_validation() {
        assert!(ObsErrorModel::<f64>::new(vec![]).is_err());
        assert!(ObsErrorModel::new(vec![0.0f64]).is_err());
        assert!(ObsErrorModel::new(vec![-1.0f64]).is_err());
        let err = ObsErrorModel::uniform(0.25f64, 3).unwrap();
        assert_eq!(err.dim(), 3);
        assert_eq!(err.inverse_variances()[1], 16.0);
    }
}
