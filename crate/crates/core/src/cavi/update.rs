//! Coordinate updates. Each one maximizes the ELBO over its own factor
//! holding the others fixed.

use super::state::VariationalState;
use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::math::special::{digamma_unchecked as digamma, normalize_log_weights};
use crate::math::SquareMatrix;
use crate::model::ModelConfig;
use crate::prior::HyperPrior;

/// g(x, y) = ψ(x) − ψ(x + y), the expected log of a Beta(x, y) variable.
pub fn g(x: f64, y: f64) -> f64 {
    digamma(x) - digamma(x + y)
}

/// E[ln ω_{l,k}], T × L row-major.
pub fn expected_log_omega(state: &VariationalState) -> Vec<f64> {
    let mut out = Vec::with_capacity(state.p.len());
    for k in 0..state.t {
        let row = state.p_row(k);
        let psi_total = digamma(row.iter().sum::<f64>());
        out.extend(row.iter().map(|&x| digamma(x) - psi_total));
    }
    out
}

/// E[ln π_k] under the truncated sticks (fiSAN, with v_T = 1) or the
/// Dirichlet factor (fSAN).
pub fn expected_log_pi(state: &VariationalState) -> Vec<f64> {
    if !state.dist_dirichlet.is_empty() {
        let psi_total = digamma(state.dist_dirichlet.iter().sum::<f64>());
        return state.dist_dirichlet.iter().map(|&x| digamma(x) - psi_total).collect();
    }
    let mut out = Vec::with_capacity(state.t);
    let mut rest = 0.0;
    for k in 0..state.t {
        if k + 1 < state.t {
            let (a, b) = (state.stick_a[k], state.stick_b[k]);
            out.push(g(a, b) + rest);
            rest += g(b, a);
        } else {
            out.push(rest);
        }
    }
    out
}

/// (E[α], E[ln α]) for fiSAN.
pub fn alpha_expectations(state: &VariationalState, config: &ModelConfig) -> (f64, f64) {
    match (state.alpha, config) {
        (Some((s1, s2)), _) => (s1 / s2, digamma(s1) - s2.ln()),
        (None, ModelConfig::Fisan(c)) => match c.alpha {
            HyperPrior::Fixed { value } => (value, value.ln()),
            HyperPrior::Gamma { shape, rate } => (shape / rate, digamma(shape) - rate.ln()),
        },
        (None, ModelConfig::Fsan(_)) => (f64::NAN, f64::NAN),
    }
}

/// Kernel expectations: E[ln |Λ_l|] and the pieces of
/// E[(y − μ_l)ᵀ Λ_l (y − μ_l)] = d/t_l + c_l (y − m_l)ᵀ D_l (y − m_l).
pub struct KernelExpectations {
    pub e_log_det: Vec<f64>,
}

pub fn kernel_expectations(state: &VariationalState) -> Result<KernelExpectations> {
    let mut e_log_det = Vec::with_capacity(state.l);
    for k in &state.kernels {
        let d = k.dim();
        let chol = k.scale.cholesky()?;
        let mut v = d as f64 * std::f64::consts::LN_2 + chol.log_det;
        for x in 0..d {
            v += digamma(0.5 * (k.dof - x as f64));
        }
        e_log_det.push(v);
    }
    Ok(KernelExpectations { e_log_det })
}

/// E[(y − μ_l)ᵀ Λ_l (y − μ_l)].
pub fn expected_quad(state: &VariationalState, l: usize, y: &[f64]) -> f64 {
    let k = &state.kernels[l];
    let d = y.len();
    if d == 1 {
        let diff = y[0] - k.mean[0];
        return 1.0 / k.kappa + k.dof * k.scale[(0, 0)] * diff * diff;
    }
    let diff: Vec<f64> = y.iter().zip(&k.mean).map(|(a, b)| a - b).collect();
    d as f64 / k.kappa + k.dof * k.scale.quad_form(&diff)
}

/// Step 1: distributional responsibilities.
pub fn update_rho(state: &mut VariationalState, data: &GroupedDataset) {
    let (t, l) = (state.t, state.l);
    let elog_pi = expected_log_pi(state);
    let elog_omega = expected_log_omega(state);
    let sums = state.group_sums(data);
    for j in 0..state.n_groups {
        let gs = &sums[j * l..(j + 1) * l];
        let row = &mut state.rho[j * t..(j + 1) * t];
        for k in 0..t {
            let eo = &elog_omega[k * l..(k + 1) * l];
            row[k] = elog_pi[k] + gs.iter().zip(eo).map(|(a, b)| a * b).sum::<f64>();
        }
        normalize_log_weights(row);
    }
}

/// Step 2: observational responsibilities.
pub fn update_xi(state: &mut VariationalState, data: &GroupedDataset) -> Result<()> {
    let (t, l) = (state.t, state.l);
    let elog_omega = expected_log_omega(state);
    let ke = kernel_expectations(state)?;
    let mut logw = vec![0.0; l];
    for j in 0..state.n_groups {
        // Σ_k ρ_{j,k} E[ln ω_{l,k}]
        let mut mix = vec![0.0; l];
        for k in 0..t {
            let r = state.rho[j * t + k];
            for (m, &e) in mix.iter_mut().zip(&elog_omega[k * l..(k + 1) * l]) {
                *m += r * e;
            }
        }
        for n in data.group_range(j) {
            let y = data.obs(n);
            for c in 0..l {
                logw[c] = mix[c] + 0.5 * ke.e_log_det[c] - 0.5 * expected_quad(state, c, y);
            }
            normalize_log_weights(&mut logw);
            state.xi[n * l..(n + 1) * l].copy_from_slice(&logw);
        }
    }
    Ok(())
}

/// Step 3: observational Dirichlet parameters p_{l,k} = b + Σ_j ρ_{j,k} Σ_i ξ_{i,j,l}.
pub fn update_omega(state: &mut VariationalState, data: &GroupedDataset, config: &ModelConfig) {
    let (t, l) = (state.t, state.l);
    let b = config.b();
    let sums = state.group_sums(data);
    state.p.fill(b);
    for j in 0..state.n_groups {
        for k in 0..t {
            let r = state.rho[j * t + k];
            if r == 0.0 {
                continue;
            }
            for (p, &s) in state.p[k * l..(k + 1) * l].iter_mut().zip(&sums[j * l..(j + 1) * l]) {
                *p += r * s;
            }
        }
    }
}

/// Step 4: sticks (fiSAN, summing the tail up to T) or π's Dirichlet (fSAN).
pub fn update_distributional_weights(state: &mut VariationalState, config: &ModelConfig) -> Result<()> {
    let t = state.t;
    let mut counts = vec![0.0; t];
    for j in 0..state.n_groups {
        for (c, &r) in counts.iter_mut().zip(state.rho_row(j)) {
            *c += r;
        }
    }
    match config {
        ModelConfig::Fisan(_) => {
            let (e_alpha, _) = alpha_expectations(state, config);
            let mut tail: f64 = counts.iter().sum();
            for k in 0..t.saturating_sub(1) {
                tail -= counts[k];
                state.stick_a[k] = 1.0 + counts[k];
                state.stick_b[k] = e_alpha + tail.max(0.0);
            }
            if let Some(k) = state.stick_b.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Numerical(format!("stick parameter b̄_{k} = {}", state.stick_b[k])));
            }
        }
        ModelConfig::Fsan(c) => {
            for (p, &n) in state.dist_dirichlet.iter_mut().zip(&counts) {
                *p = c.a + n;
            }
        }
    }
    Ok(())
}

/// Step 5: normal-Wishart posteriors from the ξ-weighted statistics.
pub fn update_kernels(state: &mut VariationalState, data: &GroupedDataset, config: &ModelConfig) -> Result<()> {
    let prior = config.kernel();
    let (l, d, n_obs) = (state.l, data.dim(), data.n_obs());
    let mut weight = vec![0.0; l];
    let mut mean = vec![0.0; l * d];
    for n in 0..n_obs {
        let y = data.obs(n);
        for (c, &w) in state.xi[n * l..(n + 1) * l].iter().enumerate() {
            weight[c] += w;
            for x in 0..d {
                mean[c * d + x] += w * y[x];
            }
        }
    }
    for c in 0..l {
        if weight[c] > 0.0 {
            for x in 0..d {
                mean[c * d + x] /= weight[c];
            }
        }
    }
    let mut scatter = vec![SquareMatrix::zeros(d); l];
    let mut diff = vec![0.0; d];
    for n in 0..n_obs {
        let y = data.obs(n);
        for (c, &w) in state.xi[n * l..(n + 1) * l].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for x in 0..d {
                diff[x] = y[x] - mean[c * d + x];
            }
            scatter[c].add_outer(w, &diff);
        }
    }
    for c in 0..l {
        state.kernels[c] = prior
            .posterior(weight[c], &mean[c * d..(c + 1) * d], &scatter[c])
            .map_err(|e| Error::Numerical(format!("kernel {c} update failed: {e}")))?;
    }
    Ok(())
}

/// Step 6: q(α) = Gamma(a_α + T − 1, b_α − Σ_{k<T} E[ln(1 − v_k)]).
pub fn update_alpha(state: &mut VariationalState, config: &ModelConfig) -> Result<()> {
    if let ModelConfig::Fisan(c) = config {
        if let HyperPrior::Gamma { shape, rate } = c.alpha {
            let s1 = shape + (state.t - 1) as f64;
            let s2 = rate
                - state
                    .stick_a
                    .iter()
                    .zip(&state.stick_b)
                    .map(|(&a, &b)| g(b, a))
                    .sum::<f64>();
            if !(s2 > 0.0 && s2.is_finite()) {
                return Err(Error::Numerical(format!("concentration rate s2 = {s2}")));
            }
            state.alpha = Some((s1, s2));
        }
    }
    Ok(())
}

/// One full CAVI sweep in the order ρ, ξ, ω, distributional weights,
/// kernels, α; the new ELBO is appended to the trace.
pub fn iterate(state: &mut VariationalState, data: &GroupedDataset, config: &ModelConfig) -> Result<f64> {
    update_rho(state, data);
    update_xi(state, data)?;
    update_omega(state, data, config);
    update_distributional_weights(state, config)?;
    update_kernels(state, data, config)?;
    update_alpha(state, config)?;
    let elbo = super::elbo::elbo(state, data, config)?;
    if !elbo.is_finite() {
        return Err(Error::Numerical(format!("ELBO is {elbo}")));
    }
    state.elbo_trace.push(elbo);
    Ok(elbo)
}
