//! Gaussian mixture density over parameter space, fit by
//! expectation-maximization with a covariance floor.
//!
//! This is the density family behind the generative-model interface;
//! the mixture can be swapped for a richer estimator without touching
//! the cluster contracts.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::seeding;

use super::ClusterError;

/// Minimum covariance eigenvalue after regularization.
pub const COVARIANCE_FLOOR: f64 = 1e-6;
/// Eigenvalue floor relative to the largest data-covariance eigenvalue;
/// keeps near-rank-deficient fits invertible at desk-scale member
/// counts. Fixed once per fit so the constrained M-step stays monotone.
pub const RELATIVE_EIGENVALUE_FLOOR: f64 = 1e-2;
const MAX_ITERS: usize = 120;
const REL_TOL: f64 = 1e-8;
const LOG_2PI: f64 = 1.8378770664093453;

#[derive(Clone, Debug)]
struct CompCache {
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

/// A Gaussian mixture over flat parameter vectors.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub log_likelihood_history: Vec<f64>,
    cache: Vec<CompCache>,
}

impl GaussianMixture {
    pub fn dim(&self) -> usize {
        self.means.first().map(|m| m.len()).unwrap_or(0)
    }

    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    /// Rebuild the Cholesky caches; required after deserialization or
    /// manual construction.
    pub fn from_parameters(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
        log_likelihood_history: Vec<f64>,
    ) -> Result<GaussianMixture, ClusterError> {
        let cache = build_cache(&means, &covariances)?;
        Ok(GaussianMixture { weights, means, covariances, log_likelihood_history, cache })
    }

    /// Log density at a point.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let mut terms = Vec::with_capacity(self.weights.len());
        for k in 0..self.weights.len() {
            terms.push(self.weights[k].max(1e-300).ln() + self.component_log_density(k, &xv));
        }
        log_sum_exp(&terms)
    }

    fn component_log_density(&self, k: usize, x: &DVector<f64>) -> f64 {
        let centered = x - &self.means[k];
        let solved = self.cache[k].chol.l().solve_lower_triangular(&centered).expect("triangular solve");
        let maha = solved.norm_squared();
        self.cache[k].log_norm - 0.5 * maha
    }

    /// Draw one sample.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut pick: f64 = rng.gen_range(0.0..1.0);
        let mut k = self.weights.len() - 1;
        for (j, w) in self.weights.iter().enumerate() {
            if pick < *w {
                k = j;
                break;
            }
            pick -= w;
        }
        let dim = self.dim();
        let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.means[k] + self.cache[k].chol.l() * z;
        x.iter().copied().collect()
    }

    /// Approximate density argmax: the best-scoring component mean
    /// refined by gradient ascent on the log density.
    pub fn argmax(&self) -> Vec<f64> {
        let start = self
            .means
            .iter()
            .max_by(|a, b| {
                let da = self.log_density(a.as_slice());
                let db = self.log_density(b.as_slice());
                da.partial_cmp(&db).unwrap()
            })
            .expect("at least one component")
            .clone();
        let mut x = start;
        let mut step = 0.1;
        let mut best = self.log_density(x.as_slice());
        for _ in 0..200 {
            let grad = self.log_density_gradient(&x);
            let norm = grad.norm();
            if norm < 1e-12 || step < 1e-12 {
                break;
            }
            let candidate = &x + &grad * (step / norm.max(1.0));
            let value = self.log_density(candidate.as_slice());
            if value > best {
                x = candidate;
                best = value;
                step *= 1.2;
            } else {
                step *= 0.5;
            }
        }
        x.iter().copied().collect()
    }

    fn log_density_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        // ∇ log p = Σ_k r_k Σ_k⁻¹ (μ_k − x) with posterior responsibilities r_k
        let mut terms = Vec::with_capacity(self.weights.len());
        for k in 0..self.weights.len() {
            terms.push(self.weights[k].max(1e-300).ln() + self.component_log_density(k, x));
        }
        let total = log_sum_exp(&terms);
        let mut grad = DVector::zeros(x.len());
        for k in 0..self.weights.len() {
            let r = (terms[k] - total).exp();
            if r < 1e-14 {
                continue;
            }
            let diff = &self.means[k] - x;
            let solved = self.cache[k].chol.solve(&diff);
            grad += solved * r;
        }
        grad
    }

    /// The given percentile (0..100) of member log densities; used as
    /// the rejection boundary for joint sampling.
    pub fn percentile_log_density(&self, rows: &[Vec<f64>], pct: f64) -> f64 {
        let mut values: Vec<f64> = rows.iter().map(|r| self.log_density(r)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let idx = ((pct / 100.0) * (values.len() as f64 - 1.0)).round() as usize;
        values[idx.min(values.len() - 1)]
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn eigenvalue_floor(data_cov: &DMatrix<f64>) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(data_cov.clone());
    let largest = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    (RELATIVE_EIGENVALUE_FLOOR * largest).max(COVARIANCE_FLOOR)
}

/// Project onto the constraint set {Σ: eigenvalues ≥ floor}; in the
/// scatter eigenbasis this is the constrained M-step maximizer.
fn clamp_eigenvalues(cov: &mut DMatrix<f64>, floor: f64) {
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    // symmetrize against rounding
    *cov = (&rebuilt + rebuilt.transpose()) * 0.5;
}

fn build_cache(means: &[DVector<f64>], covs: &[DMatrix<f64>]) -> Result<Vec<CompCache>, ClusterError> {
    let dim = means.first().map(|m| m.len()).unwrap_or(0);
    let mut cache = Vec::with_capacity(covs.len());
    for cov in covs {
        let chol = Cholesky::new(cov.clone()).ok_or(ClusterError::DegenerateData {
            reason: "covariance not positive definite after regularization".to_string(),
        })?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (dim as f64 * LOG_2PI + log_det);
        cache.push(CompCache { chol, log_norm });
    }
    Ok(cache)
}

/// Fit a mixture to the rows by EM. Deterministic given the seed; the
/// per-iteration mean log likelihood is recorded and non-decreasing.
pub fn fit_gmm(rows: &[Vec<f64>], components: usize, seed: u64) -> Result<GaussianMixture, ClusterError> {
    if components == 0 || rows.len() < components {
        return Err(ClusterError::DegenerateData {
            reason: format!("{} rows cannot support {} components", rows.len(), components),
        });
    }
    let n = rows.len();
    let dim = rows[0].len();
    let mut rng = seeding::rng(seed, 0);

    // k-means++-style spread of initial means over the rows
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(components);
    means.push(DVector::from_column_slice(&rows[rng.gen_range(0..n)]));
    let mut d2: Vec<f64> = rows
        .iter()
        .map(|r| (DVector::from_column_slice(r) - &means[0]).norm_squared())
        .collect();
    while means.len() < components {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        means.push(DVector::from_column_slice(&rows[idx]));
        for (i, r) in rows.iter().enumerate() {
            let d = (DVector::from_column_slice(r) - means.last().unwrap()).norm_squared();
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    // shared initial covariance: the floored data covariance; the
    // eigenvalue floor is fixed here for the whole fit
    let data_mean = {
        let mut m = DVector::zeros(dim);
        for r in rows {
            m += DVector::from_column_slice(r);
        }
        m / n as f64
    };
    let mut data_cov = DMatrix::zeros(dim, dim);
    for r in rows {
        let c = DVector::from_column_slice(r) - &data_mean;
        data_cov += &c * c.transpose();
    }
    data_cov /= n as f64;
    let eig_floor = eigenvalue_floor(&data_cov);
    clamp_eigenvalues(&mut data_cov, eig_floor);

    let mut weights = vec![1.0 / components as f64; components];
    let mut covs = vec![data_cov; components];
    let mut cache = build_cache(&means, &covs)?;
    let mut history: Vec<f64> = Vec::new();
    let mut responsibilities = DMatrix::zeros(n, components);

    for _iter in 0..MAX_ITERS {
        // E step
        let mut total_ll = 0.0;
        for (i, r) in rows.iter().enumerate() {
            let xv = DVector::from_column_slice(r);
            let mut terms = Vec::with_capacity(components);
            for k in 0..components {
                let centered = &xv - &means[k];
                let solved = cache[k].chol.l().solve_lower_triangular(&centered).expect("triangular solve");
                terms.push(weights[k].max(1e-300).ln() + cache[k].log_norm - 0.5 * solved.norm_squared());
            }
            let total = log_sum_exp(&terms);
            total_ll += total;
            for k in 0..components {
                responsibilities[(i, k)] = (terms[k] - total).exp();
            }
        }
        let mean_ll = total_ll / n as f64;
        let converged = history
            .last()
            .map(|prev| (mean_ll - prev).abs() <= REL_TOL * (1.0 + prev.abs()))
            .unwrap_or(false);
        history.push(mean_ll);
        if converged {
            break;
        }

        // M step
        for k in 0..components {
            let nk: f64 = (0..n).map(|i| responsibilities[(i, k)]).sum();
            let nk = nk.max(1e-10);
            weights[k] = nk / n as f64;
            let mut mu = DVector::zeros(dim);
            for (i, r) in rows.iter().enumerate() {
                mu += DVector::from_column_slice(r) * responsibilities[(i, k)];
            }
            mu /= nk;
            let mut cov = DMatrix::zeros(dim, dim);
            for (i, r) in rows.iter().enumerate() {
                let c = DVector::from_column_slice(r) - &mu;
                cov += (&c * c.transpose()) * responsibilities[(i, k)];
            }
            cov /= nk;
            clamp_eigenvalues(&mut cov, eig_floor);
            means[k] = mu;
            covs[k] = cov;
        }
        let wsum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= wsum;
        }
        cache = build_cache(&means, &covs)?;
    }

    Ok(GaussianMixture { weights, means, covariances: covs, log_likelihood_history: history, cache })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_rows(n: usize, mean: &[f64], std: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeding::rng(seed, 1);
        (0..n)
            .map(|_| {
                mean.iter().map(|m| m + std * rng.sample::<f64, _>(StandardNormal)).collect()
            })
            .collect()
    }

    #[test]
    fn single_gaussian_mean_recovered() {
        let mean = [1.5, -2.0, 0.3];
        let std = 0.4;
        let n = 2000;
        let rows = gaussian_rows(n, &mean, std, 3);
        let gmm = fit_gmm(&rows, 1, 0).unwrap();
        // sample-mean oracle: the EM mean must agree with the plain
        // sample mean, itself within 3 standard errors of the truth
        let mut sample_mean = [0.0; 3];
        for r in &rows {
            for d in 0..3 {
                sample_mean[d] += r[d] / n as f64;
            }
        }
        let se = std / (n as f64).sqrt();
        for d in 0..3 {
            assert!((gmm.means[0][d] - sample_mean[d]).abs() < 1e-9);
            assert!((gmm.means[0][d] - mean[d]).abs() < 3.0 * se, "dim {}", d);
        }
    }

    #[test]
    fn log_density_at_mean_matches_closed_form() {
        let rows = gaussian_rows(500, &[0.5, -0.5], 0.7, 9);
        let gmm = fit_gmm(&rows, 1, 0).unwrap();
        let mu = [gmm.means[0][0], gmm.means[0][1]];
        // analytic oracle for a 2-d Gaussian at its mean:
        // log N(mu) = -0.5 (d ln 2pi + ln det Sigma)
        let s = &gmm.covariances[0];
        let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        let expected = -0.5 * (2.0 * LOG_2PI + det.ln());
        assert!((gmm.log_density(&mu) - expected).abs() < 1e-9);
    }

    #[test]
    fn too_few_rows_is_degenerate() {
        let rows = gaussian_rows(2, &[0.0], 1.0, 1);
        assert!(matches!(fit_gmm(&rows, 3, 0), Err(ClusterError::DegenerateData { .. })));
    }

    #[test]
    fn log_likelihood_is_non_decreasing() {
        let mut rows = gaussian_rows(300, &[0.0, 0.0], 0.5, 2);
        rows.extend(gaussian_rows(300, &[4.0, 4.0], 0.5, 4));
        let gmm = fit_gmm(&rows, 2, 7).unwrap();
        for w in gmm.log_likelihood_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "log likelihood fell: {:?}", w);
        }
        assert!(gmm.log_likelihood_history.len() >= 2);
    }

    #[test]
    fn weights_form_a_distribution_and_sampling_respects_bounds() {
        let mut rows = gaussian_rows(200, &[0.0, 0.0], 0.3, 5);
        rows.extend(gaussian_rows(200, &[2.0, 2.0], 0.3, 6));
        let gmm = fit_gmm(&rows, 2, 1).unwrap();
        let wsum: f64 = gmm.weights.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-9);
        assert!(gmm.weights.iter().all(|&w| w > 0.0));
        let mut rng = seeding::rng(0, 0);
        for _ in 0..100 {
            let s = gmm.sample(&mut rng);
            assert_eq!(s.len(), 2);
            assert!(s.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn argmax_of_unimodal_fit_is_near_the_mean() {
        let rows = gaussian_rows(1500, &[1.0, -1.0], 0.5, 8);
        let gmm = fit_gmm(&rows, 1, 0).unwrap();
        let am = gmm.argmax();
        for d in 0..2 {
            assert!((am[d] - gmm.means[0][d]).abs() < 1e-6);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let rows = gaussian_rows(400, &[0.0, 1.0], 0.6, 11);
        let a = fit_gmm(&rows, 3, 5).unwrap();
        let b = fit_gmm(&rows, 3, 5).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.means, b.means);
        assert_eq!(a.log_likelihood_history, b.log_likelihood_history);
    }
}
