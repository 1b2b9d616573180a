//! Exact analytic quantities for a fixed policy parameter.
//!
//! All of them reduce to small dense linear systems over the state space:
//! the stationary distribution, the Poisson equation for the differential
//! value function, the TD(0) fixed point `b_θ + A_θ ω* = 0`, and the policy
//! gradient `∇J = E_{μ,π}[Q ∇log π]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math for no_std; unused when std is linked
use num_traits::Float;

use crate::error::{param_err, Error, Result};
use crate::features::FeatureMap;
use crate::linalg::{self, max_symmetric_eigenvalue, residual_inf, total_variation, RESIDUAL_TOLERANCE};
use crate::mdp::{induced_chain, FiniteMdp, InducedChain};
use crate::policy::{score_from_probs, PolicyParams, SoftmaxPolicy};

/// Largest allowed `ℓ₁` gap between the linear-solve stationary distribution
/// and the rows of `P^(2^24)`.
pub const ERGODICITY_PROBE_TOLERANCE: f64 = 1e-8;

/// Number of squarings in the ergodicity probe, i.e. the probe looks at
/// `P^(2^PROBE_SQUARINGS)`.
pub const PROBE_SQUARINGS: usize = 24;

/// `λ` at or below this value means `A_θ` is not negative definite.
pub const MARGIN_TOLERANCE: f64 = 1e-10;

/// Total-variation values at or below this are treated as exact zeros by
/// the mixing fit (they are rounding noise).
pub const TV_FLOOR: f64 = 1e-14;

pub const DEFAULT_TAU_MAX: usize = 64;

/// Step used by every central finite difference in this crate.
pub const FD_STEP: f64 = 1e-5;

/// Left fixed point of `P_θ` on the simplex.
///
/// Solved as a linear system in which the last balance equation is replaced
/// by the normalization row. The answer is accepted only if the solve is
/// well conditioned, the balance residual is below `1e-10`, and the rows of
/// `P^(2^24)` all agree with it to `1e-8` (which fails for periodic or
/// reducible-with-several-classes chains).
pub fn stationary_distribution(chain: &InducedChain) -> Result<DVector<f64>> {
    let mu = solve_stationary(chain)?;
    let n = chain.n_states();
    let mut power = DMatrix::from_row_slice(n, n, chain.p_theta());
    for _ in 0..PROBE_SQUARINGS {
        power = &power * &power;
    }
    let gap = (0..n)
        .map(|s| power.row(s).iter().zip(mu.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !(gap <= ERGODICITY_PROBE_TOLERANCE) {
        return Err(Error::NonErgodic(format!(
            "power-iteration probe disagrees with the linear solve by {gap:e}"
        )));
    }
    Ok(mu)
}

/// Linear-solve part of [`stationary_distribution`] without the power probe.
///
/// Used in hot loops where the chain's support (and with it ergodicity) is
/// already known not to change.
pub fn solve_stationary(chain: &InducedChain) -> Result<DVector<f64>> {
    let n = chain.n_states();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let p = DMatrix::from_row_slice(n, n, chain.p_theta());
    let mut m = p.transpose() - DMatrix::identity(n, n);
    m.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let mut mu = linalg::solve(&m, &rhs)
        .ok_or_else(|| Error::NonErgodic("stationary system is singular".into()))?;
    if mu.iter().any(|&x| x < -1e-10 || !x.is_finite()) {
        return Err(Error::NonErgodic("stationary solve produced negative mass".into()));
    }
    mu.iter_mut().for_each(|x| *x = x.max(0.0));
    let total = mu.sum();
    mu /= total;
    let balance = (mu.transpose() * &p - mu.transpose()).amax();
    if !(balance <= RESIDUAL_TOLERANCE) {
        return Err(Error::NonErgodic(format!("stationary balance residual {balance:e}")));
    }
    Ok(mu)
}

/// `J(θ) = μᵀ r_θ`.
pub fn average_reward(mu: &DVector<f64>, r_theta: &[f64]) -> f64 {
    mu.iter().zip(r_theta).map(|(m, r)| m * r).sum()
}

/// Differential value function: `(I − P_θ) V = r_θ − J·1` with `μᵀV = 0`,
/// solved through the nonsingular system `(I − P_θ + 1μᵀ) V = r_θ − J·1`.
pub fn value_function(chain: &InducedChain, mu: &DVector<f64>, j: f64) -> Result<DVector<f64>> {
    let n = chain.n_states();
    let p = DMatrix::from_row_slice(n, n, chain.p_theta());
    let i_minus_p = DMatrix::identity(n, n) - &p;
    let m = &i_minus_p + DMatrix::from_fn(n, n, |_, c| mu[c]);
    let rhs = DVector::from_iterator(n, chain.r_theta().iter().map(|r| r - j));
    let v = linalg::solve(&m, &rhs).ok_or_else(|| Error::NonErgodic("Poisson system is singular".into()))?;
    let poisson = residual_inf(&i_minus_p, &v, &rhs);
    let centering = mu.dot(&v).abs();
    if !(poisson <= RESIDUAL_TOLERANCE && centering <= RESIDUAL_TOLERANCE) {
        return Err(Error::NonErgodic(format!(
            "Poisson residual {poisson:e}, centering residual {centering:e}"
        )));
    }
    Ok(v)
}

/// `Q(s, a) = r(s, a) − J + Σ_{s′} P(s′|s, a) V(s′)`, as an `n × |A|` table.
pub fn q_function(mdp: &FiniteMdp, v: &DVector<f64>, j: f64) -> DMatrix<f64> {
    DMatrix::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
        let next: f64 = mdp.transition_row(s, a).iter().zip(v.iter()).map(|(p, x)| p * x).sum();
        mdp.reward(s, a) - j + next
    })
}

fn check_shapes(mdp: &FiniteMdp, map: &FeatureMap) -> Result<SoftmaxPolicy> {
    if map.n_states() != mdp.n_states() {
        return Err(param_err!(
            "feature map covers {} states, MDP has {}",
            map.n_states(),
            mdp.n_states()
        ));
    }
    SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions())
}

/// Expected TD(0) matrices under `(μ_θ, π_θ, P)`:
/// `A = E[φ(s)(φ(s′) − φ(s))ᵀ]` and `b = E[(r(s, a) − J) φ(s)]`.
pub fn td_matrices(
    mdp: &FiniteMdp,
    theta: &PolicyParams,
    map: &FeatureMap,
    mu: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let policy = check_shapes(mdp, map)?;
    policy.check_params(theta)?;
    if mu.len() != mdp.n_states() {
        return Err(param_err!("μ has {} entries, expected {}", mu.len(), mdp.n_states()));
    }
    let n = mdp.n_states();
    let d = map.dim();
    let mut probs = vec![0.0; mdp.n_actions()];

    let mut j = 0.0;
    for s in 0..n {
        policy.probs_into(theta.as_slice(), s, &mut probs);
        j += mu[s] * probs.iter().enumerate().map(|(a, p)| p * mdp.reward(s, a)).sum::<f64>();
    }

    let mut a_mat = DMatrix::zeros(d, d);
    let mut b_vec = DVector::zeros(d);
    let mut next_phi = vec![0.0; d];
    for s in 0..n {
        policy.probs_into(theta.as_slice(), s, &mut probs);
        let phi_s = map.row(s);
        next_phi.iter_mut().for_each(|x| *x = 0.0);
        let mut centered_reward = 0.0;
        for (a, &pa) in probs.iter().enumerate() {
            centered_reward += pa * (mdp.reward(s, a) - j);
            for (s2, &p) in mdp.transition_row(s, a).iter().enumerate() {
                let w = pa * p;
                if w != 0.0 {
                    for (acc, x) in next_phi.iter_mut().zip(map.row(s2)) {
                        *acc += w * x;
                    }
                }
            }
        }
        for r in 0..d {
            b_vec[r] += mu[s] * centered_reward * phi_s[r];
            for c in 0..d {
                a_mat[(r, c)] += mu[s] * phi_s[r] * (next_phi[c] - phi_s[c]);
            }
        }
    }
    Ok((a_mat, b_vec))
}

/// TD limit point: `ω* = −A⁻¹ b`.
pub fn td_fixed_point(a_mat: &DMatrix<f64>, b_vec: &DVector<f64>) -> Result<DVector<f64>> {
    if !a_mat.is_square() || a_mat.nrows() != b_vec.len() {
        return Err(param_err!("A and b have incompatible shapes"));
    }
    let neg_b = -b_vec;
    let omega = linalg::solve(a_mat, &neg_b)
        .ok_or_else(|| Error::AssumptionOneViolated("A_θ is numerically singular".into()))?;
    let residual = (b_vec + a_mat * &omega).norm();
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::AssumptionOneViolated(format!("TD fixed-point residual {residual:e}")));
    }
    Ok(omega)
}

/// `λ = −λ_max((A + Aᵀ)/2)`; an error unless `λ > 1e-10`.
pub fn exploration_margin(a_mat: &DMatrix<f64>) -> Result<f64> {
    let lambda = -max_symmetric_eigenvalue(a_mat);
    if !(lambda > MARGIN_TOLERANCE) {
        return Err(Error::AssumptionOneViolated(format!(
            "symmetric part of A_θ has maximum eigenvalue {:e}",
            -lambda
        )));
    }
    Ok(lambda)
}

/// `Σ_s μ(s) Σ_a π(a|s) table(s, a) ∇log π_θ(a|s)`.
///
/// With `table = Q_θ` this is the policy gradient; any state-only shift of
/// the table (a baseline) leaves the result unchanged.
pub fn score_weighted_sum(
    policy: &SoftmaxPolicy,
    theta: &PolicyParams,
    mu: &DVector<f64>,
    table: &DMatrix<f64>,
) -> DVector<f64> {
    let na = policy.n_actions();
    let mut grad = DVector::zeros(policy.param_dim());
    let mut probs = vec![0.0; na];
    let mut score = vec![0.0; na];
    for s in 0..policy.n_states() {
        policy.probs_into(theta.as_slice(), s, &mut probs);
        for a in 0..na {
            score.copy_from_slice(&probs);
            score_from_probs(&mut score, a);
            let w = mu[s] * probs[a] * table[(s, a)];
            for (b, g) in score.iter().enumerate() {
                grad[policy.index(s, b)] += w * g;
            }
        }
    }
    grad
}

/// `∇J(θ)` from the policy gradient theorem.
pub fn exact_policy_gradient(mdp: &FiniteMdp, theta: &PolicyParams) -> Result<DVector<f64>> {
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions())?;
    let chain = induced_chain(mdp, &policy, theta)?;
    let mu = stationary_distribution(&chain)?;
    let j = average_reward(&mu, chain.r_theta());
    let v = value_function(&chain, &mu, j)?;
    let q = q_function(mdp, &v, j);
    Ok(score_weighted_sum(&policy, theta, &mu, &q))
}

/// `J(θ)` straight from the MDP.
pub fn average_reward_at(mdp: &FiniteMdp, theta: &PolicyParams) -> Result<f64> {
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions())?;
    let chain = induced_chain(mdp, &policy, theta)?;
    let mu = stationary_distribution(&chain)?;
    Ok(average_reward(&mu, chain.r_theta()))
}

/// `ω*(θ)` straight from the MDP and feature map.
pub fn critic_target(mdp: &FiniteMdp, map: &FeatureMap, theta: &PolicyParams) -> Result<DVector<f64>> {
    let policy = check_shapes(mdp, map)?;
    let chain = induced_chain(mdp, &policy, theta)?;
    let mu = stationary_distribution(&chain)?;
    let (a_mat, b_vec) = td_matrices(mdp, theta, map, &mu)?;
    td_fixed_point(&a_mat, &b_vec)
}

/// `sqrt(Σ_s μ(s) (φ(s)ᵀω* − V(s))²)` for one `θ`.
pub fn local_approximation_error(map: &FeatureMap, mu: &DVector<f64>, omega_star: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (0..map.n_states())
        .map(|s| {
            let gap = map.value(s, omega_star.as_slice()) - v[s];
            mu[s] * gap * gap
        })
        .sum::<f64>()
        .sqrt()
}

/// Approximation error over a finite probe set.
///
/// The true quantity is a supremum over all `θ`; the maximum over probes is
/// only a lower estimate of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationError {
    pub lower_estimate: f64,
    pub per_probe: Vec<f64>,
}

pub fn approximation_error(mdp: &FiniteMdp, map: &FeatureMap, probes: &[PolicyParams]) -> Result<ApproximationError> {
    if probes.is_empty() {
        return Err(param_err!("approximation error needs at least one probe parameter"));
    }
    let per_probe = probes
        .iter()
        .map(|theta| OracleBundle::compute(mdp, map, theta).map(|b| b.eps_app_theta))
        .collect::<Result<Vec<_>>>()?;
    let lower_estimate = per_probe.iter().copied().fold(0.0, f64::max);
    Ok(ApproximationError { lower_estimate, per_probe })
}

/// Geometric mixing bound `δ(τ) ≤ m ρ^τ` fitted to worst-start TV distances.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingEstimate {
    pub m: f64,
    pub rho: f64,
    /// `δ(τ)` for `τ = 1..=tau_max` (index `τ − 1`).
    pub deltas: Vec<f64>,
}

impl MixingEstimate {
    /// Whether `δ(τ) ≤ m ρ^τ` on every probed `τ`.
    pub fn bound_holds(&self) -> bool {
        self.deltas
            .iter()
            .enumerate()
            .all(|(k, &d)| d <= self.m * self.rho.powi(k as i32 + 1) * (1.0 + 1e-12))
    }
}

/// Worst-start distances `δ(τ) = max_s d_TV(P^τ(s, ·), μ)`, `τ = 1..=tau_max`,
/// with rounding-level values snapped to zero.
pub fn worst_start_distances(chain: &InducedChain, mu: &DVector<f64>, tau_max: usize) -> Vec<f64> {
    let n = chain.n_states();
    let p = DMatrix::from_row_slice(n, n, chain.p_theta());
    let mut power = p.clone();
    let mut out = Vec::with_capacity(tau_max);
    for tau in 1..=tau_max {
        if tau > 1 {
            power = &power * &p;
        }
        let worst = (0..n)
            .map(|s| {
                let row: Vec<f64> = power.row(s).iter().copied().collect();
                total_variation(&row, mu.as_slice())
            })
            .fold(0.0, f64::max);
        out.push(if worst <= TV_FLOOR { 0.0 } else { worst });
    }
    out
}

pub fn mixing_estimate(chain: &InducedChain) -> Result<MixingEstimate> {
    mixing_estimate_with(chain, DEFAULT_TAU_MAX)
}

/// Least-squares fit of `log δ(τ)` against `τ`, giving `ρ = exp(slope)`
/// clamped to `[1e-6, 1 − 1e-6]` and `m = max(1, exp(intercept))`. `m` is
/// then raised until the bound holds on every probed `τ`.
pub fn mixing_estimate_with(chain: &InducedChain, tau_max: usize) -> Result<MixingEstimate> {
    if tau_max == 0 {
        return Err(param_err!("mixing probe needs tau_max >= 1"));
    }
    let mu = stationary_distribution(chain)?;
    let deltas = worst_start_distances(chain, &mu, tau_max);
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0)
        .map(|(k, &d)| ((k + 1) as f64, d.ln()))
        .collect();
    let clamp = |rho: f64| rho.clamp(1e-6, 1.0 - 1e-6);
    let (rho, mut log_m) = match points.len() {
        0 => (1e-6, 0.0),
        1 => {
            let (tau, ld) = points[0];
            (clamp((ld / tau).exp()), 0.0)
        }
        _ => {
            let (slope, intercept) = least_squares(&points);
            (clamp(slope.exp()), intercept.max(0.0))
        }
    };
    let ln_rho = rho.ln();
    for &(tau, ld) in &points {
        log_m = log_m.max(ld - tau * ln_rho);
    }
    Ok(MixingEstimate {
        m: log_m.exp(),
        rho,
        deltas,
    })
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub(crate) fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Jacobian `∂ω*_i/∂θ_j` (a `d × dim θ` matrix) by central differences.
pub fn critic_target_jacobian(mdp: &FiniteMdp, map: &FeatureMap, theta: &PolicyParams) -> Result<DMatrix<f64>> {
    critic_target_jacobian_with_step(mdp, map, theta, FD_STEP)
}

pub fn critic_target_jacobian_with_step(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    theta: &PolicyParams,
    step: f64,
) -> Result<DMatrix<f64>> {
    if !(step > 0.0) {
        return Err(param_err!("finite-difference step must be positive"));
    }
    let base = theta.as_slice();
    let mut jac = DMatrix::zeros(map.dim(), base.len());
    let mut shifted = base.to_vec();
    for k in 0..base.len() {
        shifted[k] = base[k] + step;
        let up = critic_target(mdp, map, &PolicyParams::new(shifted.clone())?)?;
        shifted[k] = base[k] - step;
        let down = critic_target(mdp, map, &PolicyParams::new(shifted.clone())?)?;
        shifted[k] = base[k];
        jac.set_column(k, &((up - down) / (2.0 * step)));
    }
    Ok(jac)
}

/// Every exact quantity at one `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBundle {
    pub theta: PolicyParams,
    pub chain: InducedChain,
    /// `μ_θ`.
    pub mu: DVector<f64>,
    /// `J(θ)`.
    pub j: f64,
    /// `V_θ`, normalized so that `μᵀV = 0`.
    pub v: DVector<f64>,
    /// `Q_θ` as an `n × |A|` table.
    pub q: DMatrix<f64>,
    pub a_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
    /// `ω*(θ)`.
    pub omega_star: DVector<f64>,
    /// `∇J(θ)`.
    pub grad_j: DVector<f64>,
    /// `λ` from the symmetric part of `A_θ`.
    pub lambda_margin: f64,
    /// `sqrt(E_μ (φᵀω* − V)²)` at this `θ`.
    pub eps_app_theta: f64,
}

impl OracleBundle {
    pub fn compute(mdp: &FiniteMdp, map: &FeatureMap, theta: &PolicyParams) -> Result<Self> {
        let policy = check_shapes(mdp, map)?;
        let chain = induced_chain(mdp, &policy, theta)?;
        let mu = stationary_distribution(&chain)?;
        let j = average_reward(&mu, chain.r_theta());
        let v = value_function(&chain, &mu, j)?;
        let q = q_function(mdp, &v, j);
        let (a_mat, b_vec) = td_matrices(mdp, theta, map, &mu)?;
        let lambda_margin = exploration_margin(&a_mat)?;
        let omega_star = td_fixed_point(&a_mat, &b_vec)?;
        let grad_j = score_weighted_sum(&policy, theta, &mu, &q);
        let eps_app_theta = local_approximation_error(map, &mu, &omega_star, &v);
        Ok(Self {
            theta: theta.clone(),
            chain,
            mu,
            j,
            v,
            q,
            a_mat,
            b_vec,
            omega_star,
            grad_j,
            lambda_margin,
            eps_app_theta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMap;
    use crate::mdp::{generate_ergodic_garnet, two_state, GarnetSpec};

    fn theta0() -> PolicyParams {
        PolicyParams::zeros(4)
    }

    fn fixture_chain() -> InducedChain {
        let mdp = two_state();
        let pol = SoftmaxPolicy::new(2, 2).unwrap();
        induced_chain(&mdp, &pol, &theta0()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10
    }

    #[test]
    fn fixture_stationary_and_reward() {
        let chain = fixture_chain();
        let mu = stationary_distribution(&chain).unwrap();
        assert!(close(mu[0], 0.5) && close(mu[1], 0.5));
        assert!(close(average_reward(&mu, chain.r_theta()), 0.5));
    }

    #[test]
    fn identity_chain_is_rejected() {
        let chain = InducedChain::from_parts(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(stationary_distribution(&chain), Err(Error::NonErgodic(_))));
    }

    #[test]
    fn periodic_chain_is_rejected() {
        let chain = InducedChain::from_parts(2, vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(solve_stationary(&chain).is_ok());
        assert!(matches!(stationary_distribution(&chain), Err(Error::NonErgodic(_))));
    }

    #[test]
    fn transient_state_is_fine() {
        // State 1 leaks into the absorbing state 0: unique stationary law e_0.
        let chain = InducedChain::from_parts(2, vec![1.0, 0.0, 0.5, 0.5], vec![1.0, 0.0]).unwrap();
        let mu = stationary_distribution(&chain).unwrap();
        assert!(close(mu[0], 1.0) && close(mu[1], 0.0));
    }

    #[test]
    fn fixture_value_and_q() {
        let chain = fixture_chain();
        let mu = stationary_distribution(&chain).unwrap();
        let v = value_function(&chain, &mu, 0.5).unwrap();
        assert!(close(v[0], -0.5) && close(v[1], 0.5));
        let q = q_function(&two_state(), &v, 0.5);
        assert!(close(q[(0, 0)], -0.9) && close(q[(0, 1)], -0.1));
        assert!(close(q[(1, 0)], 0.1) && close(q[(1, 1)], 0.9));
    }

    #[test]
    fn constant_reward_zeroes_everything() {
        let base = two_state();
        let mdp = FiniteMdp::new(2, 2, base.transition_table().to_vec(), vec![0.3; 4], 1.0).unwrap();
        let theta = PolicyParams::new(vec![0.4, -0.2, 1.0, 0.5]).unwrap();
        let map = FeatureMap::two_state_scalar();
        let bundle = OracleBundle::compute(&mdp, &map, &theta).unwrap();
        assert!(close(bundle.j, 0.3));
        assert!(bundle.v.amax() <= 1e-12);
        assert!(bundle.q.amax() <= 1e-12);
        assert!(bundle.b_vec.amax() <= 1e-12);
        assert!(bundle.grad_j.amax() <= 1e-12);
        let jac = critic_target_jacobian(&mdp, &map, &theta).unwrap();
        assert!(jac.amax() <= 1e-10);
    }

    #[test]
    fn fixture_td_quantities() {
        let mdp = two_state();
        let map = FeatureMap::two_state_scalar();
        let b = OracleBundle::compute(&mdp, &map, &theta0()).unwrap();
        assert!(close(b.a_mat[(0, 0)], -1.0));
        assert!(close(b.b_vec[0], -0.5));
        assert!(close(b.omega_star[0], -0.5));
        assert!(close(b.lambda_margin, 1.0));
        assert!(b.eps_app_theta <= 1e-10);
        for s in 0..2 {
            assert!(close(map.value(s, b.omega_star.as_slice()), b.v[s]));
        }
    }

    #[test]
    fn fixture_gradient_and_baseline() {
        let mdp = two_state();
        let g = exact_policy_gradient(&mdp, &theta0()).unwrap();
        let expect = [-0.1, 0.1, -0.1, 0.1];
        for k in 0..4 {
            assert!(close(g[k], expect[k]), "{g}");
        }
        let map = FeatureMap::two_state_scalar();
        let b = OracleBundle::compute(&mdp, &map, &theta0()).unwrap();
        let advantage = DMatrix::from_fn(2, 2, |s, a| b.q[(s, a)] - b.v[s]);
        let pol = SoftmaxPolicy::new(2, 2).unwrap();
        let ga = score_weighted_sum(&pol, &theta0(), &b.mu, &advantage);
        assert!((ga - &b.grad_j).amax() <= 1e-12);
    }

    #[test]
    fn zero_b_gives_zero_fixed_point() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -0.5]);
        let w = td_fixed_point(&a, &DVector::zeros(2)).unwrap();
        assert_eq!(w.amax(), 0.0);
    }

    #[test]
    fn singular_a_is_assumption_violation() {
        assert!(matches!(exploration_margin(&DMatrix::zeros(2, 2)), Err(Error::AssumptionOneViolated(_))));
        assert!(matches!(
            td_fixed_point(&DMatrix::zeros(2, 2), &DVector::zeros(2)),
            Err(Error::AssumptionOneViolated(_))
        ));
    }

    #[test]
    fn uncentered_onehot_fails_margin() {
        let mdp = two_state();
        let chain = fixture_chain();
        let mu = stationary_distribution(&chain).unwrap();
        let (a, _) = td_matrices(&mdp, &theta0(), &FeatureMap::onehot(2).unwrap(), &mu).unwrap();
        assert!(-max_symmetric_eigenvalue(&a) <= 1e-10);
        assert!(matches!(exploration_margin(&a), Err(Error::AssumptionOneViolated(_))));
    }

    #[test]
    fn approximation_error_cases() {
        let mdp = two_state();
        let map = FeatureMap::two_state_scalar();
        let e = approximation_error(&mdp, &map, &[theta0()]).unwrap();
        assert!(e.lower_estimate <= 1e-10);

        let (g, _) = generate_ergodic_garnet(&GarnetSpec::new(5, 3, 3), 4, 20).unwrap();
        let one = FeatureMap::random_bounded(5, 1, 0).unwrap();
        let probes = [PolicyParams::zeros(15), PolicyParams::new((0..15).map(|k| (k as f64).cos()).collect()).unwrap()];
        let e = approximation_error(&g, &one, &probes).unwrap();
        assert!(e.lower_estimate > 1e-3);
        assert_eq!(e.lower_estimate, e.per_probe.iter().copied().fold(0.0, f64::max));
        let local = OracleBundle::compute(&g, &one, &probes[1]).unwrap().eps_app_theta;
        assert_eq!(e.per_probe[1], local);
    }

    #[test]
    fn centered_features_recover_values_up_to_a_constant() {
        let (g, _) = generate_ergodic_garnet(&GarnetSpec::new(5, 3, 3), 4, 20).unwrap();
        let map = FeatureMap::centered_onehot(5).unwrap();
        let theta = PolicyParams::new((0..15).map(|k| (k as f64 * 0.7).sin()).collect()).unwrap();
        let b = OracleBundle::compute(&g, &map, &theta).unwrap();
        let offset = map.value(0, b.omega_star.as_slice()) - b.v[0];
        for s in 1..5 {
            assert!((map.value(s, b.omega_star.as_slice()) - b.v[s] - offset).abs() <= 1e-10);
        }
        // Under the μᵀV = 0 convention the constant offset is the whole error.
        assert!((b.eps_app_theta - offset.abs()).abs() <= 1e-10);
    }

    #[test]
    fn fixture_mixing_is_one_step() {
        let est = mixing_estimate(&fixture_chain()).unwrap();
        assert_eq!(est.deltas[0], 0.0);
        assert_eq!(est.rho, 1e-6);
        assert_eq!(est.m, 1.0);
        assert!(est.bound_holds());
    }

    #[test]
    fn two_state_probe_chain_mixing_rate() {
        let chain = InducedChain::from_parts(2, vec![0.9, 0.1, 0.2, 0.8], vec![0.0, 0.0]).unwrap();
        let est = mixing_estimate(&chain).unwrap();
        assert!((est.rho - 0.7).abs() <= 0.05, "rho = {}", est.rho);
        assert!(est.m >= 1.0);
        assert!(est.bound_holds());
    }

    #[test]
    fn jacobian_richardson_consistency() {
        let mdp = two_state();
        let map = FeatureMap::two_state_scalar();
        let j1 = critic_target_jacobian_with_step(&mdp, &map, &theta0(), 1e-5).unwrap();
        let j2 = critic_target_jacobian_with_step(&mdp, &map, &theta0(), 5e-6).unwrap();
        let rich = (&j2 * 4.0 - &j1) / 3.0;
        assert!((&j1 - &rich).amax() <= 1e-6);
    }
}
