//! Evidence lower bound E_q[ln p(y, Θ)] − E_q[ln q(Θ)].

use super::state::VariationalState;
use super::update::{alpha_expectations, expected_log_omega, expected_log_pi, expected_quad, g, kernel_expectations};
use crate::data::GroupedDataset;
use crate::error::Result;
use crate::math::density::{
    beta_log_norm, dirichlet_log_norm, gamma_entropy, gamma_log_norm, symmetric_dirichlet_log_norm,
    wishart_summary_from_logdet,
};
use crate::math::special::{digamma_unchecked as digamma, xlogx};
use crate::model::ModelConfig;
use crate::prior::HyperPrior;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Entropy of Dirichlet(params).
pub fn dirichlet_entropy(params: &[f64]) -> Result<f64> {
    let total: f64 = params.iter().sum();
    let psi_total = digamma(total);
    Ok(-dirichlet_log_norm(params)? - params.iter().map(|&p| (p - 1.0) * (digamma(p) - psi_total)).sum::<f64>())
}

/// Entropy of Beta(a, b).
pub fn beta_entropy(a: f64, b: f64) -> f64 {
    -beta_log_norm(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b)
}

/// Individual ELBO contributions, useful for diagnostics and tests.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElboTerms {
    pub likelihood: f64,
    pub observational_labels: f64,
    pub distributional_labels: f64,
    pub distributional_weights: f64,
    pub observational_weights: f64,
    pub kernel_prior: f64,
    pub concentration_prior: f64,
    pub entropy: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.likelihood
            + self.observational_labels
            + self.distributional_labels
            + self.distributional_weights
            + self.observational_weights
            + self.kernel_prior
            + self.concentration_prior
            + self.entropy
    }
}

pub fn elbo(state: &VariationalState, data: &GroupedDataset, config: &ModelConfig) -> Result<f64> {
    Ok(elbo_terms(state, data, config)?.total())
}

pub fn elbo_terms(state: &VariationalState, data: &GroupedDataset, config: &ModelConfig) -> Result<ElboTerms> {
    let (t, l, d) = (state.t, state.l, data.dim());
    let df = d as f64;
    let b = config.b();
    let prior = config.kernel();
    let elog_pi = expected_log_pi(state);
    let elog_omega = expected_log_omega(state);
    let ke = kernel_expectations(state)?;
    let sums = state.group_sums(data);
    let mut terms = ElboTerms::default();

    for n in 0..data.n_obs() {
        let y = data.obs(n);
        for (c, &w) in state.xi_row(n).iter().enumerate() {
            if w > 0.0 {
                terms.likelihood +=
                    w * (0.5 * ke.e_log_det[c] - 0.5 * df * LN_2PI - 0.5 * expected_quad(state, c, y));
            }
        }
    }

    for j in 0..state.n_groups {
        for (k, &r) in state.rho_row(j).iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let eo = &elog_omega[k * l..(k + 1) * l];
            terms.observational_labels += r * sums[j * l..(j + 1) * l].iter().zip(eo).map(|(a, b)| a * b).sum::<f64>();
            terms.distributional_labels += r * elog_pi[k];
        }
    }

    match config {
        ModelConfig::Fisan(c) => {
            let (e_alpha, e_log_alpha) = alpha_expectations(state, config);
            for (&a, &bb) in state.stick_a.iter().zip(&state.stick_b) {
                terms.distributional_weights += e_log_alpha + (e_alpha - 1.0) * g(bb, a);
                terms.entropy += beta_entropy(a, bb);
            }
            if let (HyperPrior::Gamma { shape, rate }, Some((s1, s2))) = (c.alpha, state.alpha) {
                terms.concentration_prior =
                    gamma_log_norm(shape, rate) + (shape - 1.0) * e_log_alpha - rate * e_alpha;
                terms.entropy += gamma_entropy(s1, s2);
            }
        }
        ModelConfig::Fsan(c) => {
            terms.distributional_weights = symmetric_dirichlet_log_norm(c.a, t)
                + (c.a - 1.0) * elog_pi.iter().sum::<f64>();
            terms.entropy += dirichlet_entropy(&state.dist_dirichlet)?;
        }
    }

    terms.observational_weights =
        t as f64 * symmetric_dirichlet_log_norm(b, l) + (b - 1.0) * elog_omega.iter().sum::<f64>();
    for k in 0..t {
        terms.entropy += dirichlet_entropy(state.p_row(k))?;
    }

    let prior_chol = prior.scale.cholesky()?;
    let prior_w = wishart_summary_from_logdet(prior_chol.log_det, d, prior.dof)?;
    let prior_scale_inv = prior_chol.inverse();
    for (c, k) in state.kernels.iter().enumerate() {
        let diff: Vec<f64> = k.mean.iter().zip(&prior.mean).map(|(a, b)| a - b).collect();
        let quad = df / k.kappa + k.dof * k.scale.quad_form(&diff);
        let trace: f64 = (0..d)
            .flat_map(|x| (0..d).map(move |y| (x, y)))
            .map(|(x, y)| prior_scale_inv[(x, y)] * k.scale[(y, x)])
            .sum();
        terms.kernel_prior += 0.5 * df * (prior.kappa.ln() - LN_2PI) + 0.5 * ke.e_log_det[c] - 0.5 * prior.kappa * quad
            + prior_w.log_norm
            + 0.5 * (prior.dof - df - 1.0) * ke.e_log_det[c]
            - 0.5 * k.dof * trace;
        let chol = k.scale.cholesky()?;
        let w = wishart_summary_from_logdet(chol.log_det, d, k.dof)?;
        terms.entropy += w.entropy + 0.5 * df * (1.0 + LN_2PI) - 0.5 * df * k.kappa.ln() - 0.5 * ke.e_log_det[c];
    }

    terms.entropy -= state.xi.iter().map(|&x| xlogx(x)).sum::<f64>();
    terms.entropy -= state.rho.iter().map(|&x| xlogx(x)).sum::<f64>();
    Ok(terms)
}
