//! Gaussian-process preference learning with a probit likelihood.
//!
//! Latent scores `f` over an active subset of items are fitted by MAP
//! estimation; a Laplace approximation around the mode provides the posterior
//! covariance used for predictive probabilities, automation and information
//! gain. Two priors are supported: the exact ARD-kernel prior, and the
//! practical ℓ₂-regularized variant with a diagonal posterior (the default).

pub mod normal;

use std::f64::consts::SQRT_2;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use crate::config::{GpConfig, GpMode};
use crate::error::{Error, Result};
use crate::optim::lbfgs;
use crate::types::{IndexedComparison, ItemIndex};

/// `σ_f² · exp(−½ Σ_d (x_d − y_d)²/ℓ_d²)`.
pub fn ard_kernel(x: &[f64], y: &[f64], lengthscales: &[f64], signal_variance: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if lengthscales.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: lengthscales.len(),
        });
    }
    let r2: f64 = x
        .iter()
        .zip(y)
        .zip(lengthscales)
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum();
    Ok(signal_variance * (-0.5 * r2).exp())
}

pub fn kernel_matrix(points: &[&[f64]], lengthscales: &[f64], signal_variance: f64) -> Result<DMatrix<f64>> {
    let m = points.len();
    let mut k = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = ard_kernel(points[a], points[b], lengthscales, signal_variance)?;
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    Ok(k)
}

/// `P(v ≻ u) = Φ((f_v − f_u)/(√2σ))`.
pub fn probit_likelihood(f_v: f64, f_u: f64, noise: f64) -> f64 {
    normal::cdf((f_v - f_u) / (SQRT_2 * noise))
}

/// A preference between two latent coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference {
    pub winner: usize,
    pub loser: usize,
    pub weight: f64,
}

/// Prior term of the MAP objective.
#[derive(Debug, Clone)]
pub enum LatentPrior {
    /// `½ρ‖f‖²`.
    Ridge(f64),
    /// `½ fᵀK⁻¹f` with the Cholesky factor of the jittered kernel matrix.
    Kernel(Cholesky<f64, Dyn>),
}

impl LatentPrior {
    pub fn kernel(mut k: DMatrix<f64>, jitter: f64) -> Result<Self> {
        for d in 0..k.nrows() {
            k[(d, d)] += jitter;
        }
        Cholesky::new(k).map(LatentPrior::Kernel).ok_or(Error::SingularKernel)
    }

    fn value_and_grad(&self, f: &[f64]) -> (f64, Vec<f64>) {
        match self {
            LatentPrior::Ridge(rho) => {
                let v = 0.5 * rho * f.iter().map(|x| x * x).sum::<f64>();
                (v, f.iter().map(|x| rho * x).collect())
            }
            LatentPrior::Kernel(chol) => {
                let fv = DVector::from_column_slice(f);
                let kinv_f = chol.solve(&fv);
                (0.5 * fv.dot(&kinv_f), kinv_f.iter().copied().collect())
            }
        }
    }
}

fn scaled_gap(f: &[f64], p: &Preference, noise: f64) -> f64 {
    (f[p.winner] - f[p.loser]) / (SQRT_2 * noise)
}

/// Negative weighted probit log-likelihood, and its gradient.
fn likelihood_term(f: &[f64], prefs: &[Preference], noise: f64) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; f.len()];
    let scale = 1.0 / (SQRT_2 * noise);
    for p in prefs {
        let z = scaled_gap(f, p, noise);
        value -= p.weight * normal::log_cdf(z);
        let r = p.weight * normal::pdf_over_cdf(z) * scale;
        grad[p.winner] -= r;
        grad[p.loser] += r;
    }
    (value, grad)
}

/// `S(f) = −Σ_k w_k log Φ(z_k) + prior(f)` and `∇S(f)`.
pub fn map_objective(f: &[f64], prefs: &[Preference], prior: &LatentPrior, noise: f64) -> (f64, Vec<f64>) {
    let (lik, mut grad) = likelihood_term(f, prefs, noise);
    let (pv, pg) = prior.value_and_grad(f);
    for (g, q) in grad.iter_mut().zip(pg) {
        *g += q;
    }
    (lik + pv, grad)
}

/// Per-preference curvature `h_k` of the negative log-likelihood: the Hessian
/// is `Σ_k h_k (e_v − e_u)(e_v − e_u)ᵀ`.
fn curvatures(f: &[f64], prefs: &[Preference], noise: f64) -> Vec<f64> {
    let inv = 1.0 / (2.0 * noise * noise);
    prefs
        .iter()
        .map(|p| {
            let z = scaled_gap(f, p, noise);
            let r = normal::pdf_over_cdf(z);
            p.weight * r * (z + r) * inv
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Posterior {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        match self {
            Posterior::Diagonal(d) => {
                if a == b {
                    d[a]
                } else {
                    0.0
                }
            }
            Posterior::Dense(m) => m[(a, b)],
        }
    }
}

/// Laplace covariance `(K⁻¹ + Λ(f))⁻¹ = L (I + LᵀΛL)⁻¹ Lᵀ` with the
/// likelihood curvature evaluated at `f`.
pub fn kernel_laplace_covariance(chol: &Cholesky<f64, Dyn>, f: &[f64], prefs: &[Preference], noise: f64) -> DMatrix<f64> {
    let dim = f.len();
    let l = chol.l();
    let h = curvatures(f, prefs, noise);
    let mut lambda = DMatrix::zeros(dim, dim);
    for (p, hk) in prefs.iter().zip(&h) {
        lambda[(p.winner, p.winner)] += hk;
        lambda[(p.loser, p.loser)] += hk;
        lambda[(p.winner, p.loser)] -= hk;
        lambda[(p.loser, p.winner)] -= hk;
    }
    let b = DMatrix::identity(dim, dim) + l.transpose() * &lambda * &l;
    let b_inv = Cholesky::new(b)
        .map(|c| c.inverse())
        .unwrap_or_else(|| DMatrix::identity(dim, dim));
    let cov = &l * b_inv * l.transpose();
    (&cov + cov.transpose()) * 0.5
}

#[derive(Debug, Clone)]
pub struct LaplaceFit {
    pub mean: Vec<f64>,
    pub cov: Posterior,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// MAP estimate by L-BFGS followed by the Laplace posterior.
///
/// Under a kernel prior the search runs in whitened coordinates `f = L a`,
/// which leaves the objective unchanged but keeps it well conditioned.
pub fn fit_map(
    dim: usize,
    prefs: &[Preference],
    prior: &LatentPrior,
    noise: f64,
    max_iters: usize,
    grad_tol: f64,
) -> LaplaceFit {
    match prior {
        LatentPrior::Ridge(rho) => {
            let m = lbfgs(
                vec![0.0; dim],
                |f| map_objective(f, prefs, prior, noise),
                max_iters,
                grad_tol,
            );
            let h = curvatures(&m.x, prefs, noise);
            let mut precision = vec![*rho; dim];
            for (p, hk) in prefs.iter().zip(&h) {
                precision[p.winner] += hk;
                precision[p.loser] += hk;
            }
            LaplaceFit {
                cov: Posterior::Diagonal(precision.iter().map(|p| 1.0 / p).collect()),
                mean: m.x,
                objective: m.value,
                iterations: m.iterations,
                converged: m.converged,
            }
        }
        LatentPrior::Kernel(chol) => {
            let l = chol.l();
            let to_f = |a: &[f64]| -> Vec<f64> {
                (&l * DVector::from_column_slice(a)).iter().copied().collect()
            };
            let m = lbfgs(
                vec![0.0; dim],
                |a| {
                    let f = to_f(a);
                    let (lik, gf) = likelihood_term(&f, prefs, noise);
                    let ga = l.tr_mul(&DVector::from_vec(gf));
                    let value = lik + 0.5 * a.iter().map(|x| x * x).sum::<f64>();
                    let grad = ga.iter().zip(a).map(|(g, x)| g + x).collect();
                    (value, grad)
                },
                max_iters,
                grad_tol,
            );
            let mean = to_f(&m.x);
            let cov = kernel_laplace_covariance(chol, &mean, prefs, noise);
            LaplaceFit {
                mean,
                cov: Posterior::Dense(cov),
                objective: m.value,
                iterations: m.iterations,
                converged: m.converged,
            }
        }
    }
}

/// Items most recently involved in a comparison, at most `max_active`;
/// untouched items follow in initial order. Returned in index order.
pub fn select_active(
    n: usize,
    initial_order: &[ItemIndex],
    comparisons: &[IndexedComparison],
    max_active: usize,
) -> Vec<ItemIndex> {
    if n <= max_active {
        return (0..n).collect();
    }
    let mut last_touch = vec![0usize; n];
    for (t, c) in comparisons.iter().enumerate() {
        last_touch[c.i] = t + 1;
        last_touch[c.j] = t + 1;
    }
    let mut rank_in_prior = vec![0usize; n];
    for (r, &i) in initial_order.iter().enumerate() {
        rank_in_prior[i] = r;
    }
    let mut order: Vec<ItemIndex> = (0..n).collect();
    order.sort_by(|&a, &b| {
        last_touch[b]
            .cmp(&last_touch[a])
            .then(rank_in_prior[a].cmp(&rank_in_prior[b]))
    });
    order.truncate(max_active);
    order.sort_unstable();
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPrediction {
    pub p: f64,
    /// Normalized posterior variance of the score difference, in `[0, 1]`.
    pub epistemic: f64,
    pub confidence: f64,
    /// `Σ_ii + Σ_jj − 2Σ_ij`.
    pub diff_variance: f64,
}

/// Fitted (or prior) GP over the active subset.
#[derive(Debug, Clone, PartialEq)]
pub struct GpState {
    config: GpConfig,
    position: Vec<Option<usize>>,
    active: Vec<ItemIndex>,
    mean: Vec<f64>,
    cov: Posterior,
    pub fitted: bool,
    pub converged: bool,
    pub iterations: usize,
    pub pairs_used: usize,
}

impl GpState {
    /// Prior state over the given active items, before any comparison.
    pub fn prior(n: usize, features: &[Vec<f64>], active: Vec<ItemIndex>, config: GpConfig) -> Result<Self> {
        let cov = match config.mode {
            GpMode::Practical => Posterior::Diagonal(vec![1.0 / config.l2.max(f64::MIN_POSITIVE); active.len()]),
            GpMode::Full => {
                let pts: Vec<&[f64]> = active.iter().map(|&i| features[i].as_slice()).collect();
                let dim = pts.first().map_or(0, |p| p.len());
                Posterior::Dense(kernel_matrix(&pts, &vec![config.lengthscale; dim], config.signal_variance)?)
            }
        };
        let mut position = vec![None; n];
        for (k, &i) in active.iter().enumerate() {
            position[i] = Some(k);
        }
        Ok(Self {
            config,
            position,
            mean: vec![0.0; active.len()],
            active,
            cov,
            fitted: false,
            converged: false,
            iterations: 0,
            pairs_used: 0,
        })
    }

    /// Fits the posterior on the most recent comparisons among the active items.
    pub fn fit(
        features: &[Vec<f64>],
        initial_order: &[ItemIndex],
        comparisons: &[IndexedComparison],
        config: GpConfig,
    ) -> Result<Self> {
        let n = features.len();
        let active = select_active(n, initial_order, comparisons, config.max_active);
        let mut state = Self::prior(n, features, active, config)?;
        let mut prefs: Vec<Preference> = comparisons
            .iter()
            .rev()
            .filter_map(|c| {
                Some(Preference {
                    winner: state.position[c.winner()]?,
                    loser: state.position[c.loser()]?,
                    weight: c.weight,
                })
            })
            .take(config.max_pairs)
            .collect();
        prefs.reverse();
        if prefs.is_empty() {
            return Ok(state);
        }
        let prior = match config.mode {
            GpMode::Practical => LatentPrior::Ridge(config.l2),
            GpMode::Full => {
                let pts: Vec<&[f64]> = state.active.iter().map(|&i| features[i].as_slice()).collect();
                let dim = pts.first().map_or(0, |p| p.len());
                let k = kernel_matrix(&pts, &vec![config.lengthscale; dim], config.signal_variance)?;
                LatentPrior::kernel(k, config.jitter)?
            }
        };
        let fit = fit_map(
            state.active.len(),
            &prefs,
            &prior,
            config.noise,
            config.max_iters,
            config.grad_tol,
        );
        state.mean = fit.mean;
        state.cov = fit.cov;
        state.fitted = true;
        state.converged = fit.converged;
        state.iterations = fit.iterations;
        state.pairs_used = prefs.len();
        Ok(state)
    }

    pub fn active(&self) -> &[ItemIndex] {
        &self.active
    }

    pub fn is_active(&self, i: ItemIndex) -> bool {
        self.position.get(i).copied().flatten().is_some()
    }

    fn pos(&self, i: ItemIndex) -> Option<usize> {
        self.position.get(i).copied().flatten()
    }

    pub fn mean_of(&self, i: ItemIndex) -> Option<f64> {
        self.pos(i).map(|a| self.mean[a])
    }

    pub fn variance_of(&self, i: ItemIndex) -> Option<f64> {
        self.pos(i).map(|a| self.cov.get(a, a))
    }

    /// `Σ_ii + Σ_jj − 2Σ_ij`.
    pub fn info_gain(&self, i: ItemIndex, j: ItemIndex) -> Option<f64> {
        let (a, b) = (self.pos(i)?, self.pos(j)?);
        Some((self.cov.get(a, a) + self.cov.get(b, b) - 2.0 * self.cov.get(a, b)).max(0.0))
    }

    /// `[μ − γ√Σ_ii, μ + γ√Σ_ii]`.
    pub fn interval(&self, i: ItemIndex, gamma: f64) -> Option<(f64, f64)> {
        let a = self.pos(i)?;
        let half = gamma * self.cov.get(a, a).max(0.0).sqrt();
        Some((self.mean[a] - half, self.mean[a] + half))
    }

    /// Predictive `P(i ≻ j)` with its epistemic share and confidence; `None`
    /// when either item is outside the active subset.
    pub fn predict(&self, i: ItemIndex, j: ItemIndex) -> Option<GpPrediction> {
        if i > j {
            let mut flipped = self.predict(j, i)?;
            flipped.p = 1.0 - flipped.p;
            return Some(flipped);
        }
        let (a, b) = (self.pos(i)?, self.pos(j)?);
        let diff_variance = (self.cov.get(a, a) + self.cov.get(b, b) - 2.0 * self.cov.get(a, b)).max(0.0);
        let sigma2 = self.config.noise * self.config.noise;
        let scale = (2.0 * sigma2 + diff_variance).sqrt();
        let p = normal::cdf((self.mean[a] - self.mean[b]) / scale);
        let epistemic = (diff_variance / (2.0 * self.config.signal_variance)).clamp(0.0, 1.0);
        let confidence = (2.0 * p - 1.0).abs() * (1.0 - epistemic);
        Some(GpPrediction {
            p,
            epistemic,
            confidence,
            diff_variance,
        })
    }
}
