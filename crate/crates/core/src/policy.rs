//! Tabular softmax (Boltzmann) policies.
//!
//! The parameter vector holds one logit per state-action pair, i.e. the
//! state-action feature `ψ(s, a)` is the one-hot vector at index
//! `s · |A| + a`. With `‖ψ‖ ≤ 1` the score function
//! `∇ log π_θ(a|s) = ψ(s, a) − Σ_b π_θ(b|s) ψ(s, b)` is supported on the
//! coordinates of state `s` only.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[allow(unused_imports)] // float math for no_std; unused when std is linked
use num_traits::Float;

use crate::error::{param_err, Result};
use crate::linalg::norm;

/// Actor parameters `θ`, one logit per state-action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams(Vec<f64>);

impl PolicyParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(param_err!("non-finite policy parameter at index {i}"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Analytic constants of the softmax class with one-hot `ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConstants {
    /// `B`: bound on `‖∇ log π_θ(a|s)‖`.
    pub b_bound: f64,
    /// `L_l`: Lipschitz constant of the score function in `θ`.
    pub l_l: f64,
    /// `L_π`: Lipschitz constant of `π_θ(a|s)` in `θ`.
    pub l_pi: f64,
}

/// Largest values observed by [`probe_policy_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyProbe {
    pub max_log_grad: f64,
    pub max_log_grad_ratio: f64,
    pub max_prob_ratio: f64,
    pub n_probes: usize,
}

/// Analytic bounds: `‖ψ − E_π ψ‖ ≤ 2 max‖ψ‖ = 2` gives `B = 2`; the same
/// triangle-inequality argument bounds `L_l` and `L_π` by 2.
pub fn policy_constants(_n_states: usize, _n_actions: usize) -> PolicyConstants {
    PolicyConstants {
        b_bound: 2.0,
        l_l: 2.0,
        l_pi: 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
}

impl SoftmaxPolicy {
    pub fn new(n_states: usize, n_actions: usize) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(param_err!("policy needs at least one state and one action"));
        }
        Ok(Self { n_states, n_actions })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn param_dim(&self) -> usize {
        self.n_states * self.n_actions
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn check_params(&self, theta: &PolicyParams) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(param_err!(
                "policy parameter has dimension {}, expected {}",
                theta.len(),
                self.param_dim()
            ));
        }
        Ok(())
    }

    fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.n_states {
            return Err(param_err!("state {s} out of range (n_states = {})", self.n_states));
        }
        Ok(())
    }

    /// `π_θ(·|s)`.
    pub fn action_probs(&self, theta: &PolicyParams, s: usize) -> Result<Vec<f64>> {
        self.check_params(theta)?;
        self.check_state(s)?;
        let mut out = vec![0.0; self.n_actions];
        self.probs_into(theta.as_slice(), s, &mut out);
        Ok(out)
    }

    /// Unchecked softmax over the logits of state `s`, with max-subtraction.
    #[inline]
    pub fn probs_into(&self, theta: &[f64], s: usize, out: &mut [f64]) {
        let logits = &theta[s * self.n_actions..(s + 1) * self.n_actions];
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (o, &l) in out.iter_mut().zip(logits) {
            *o = (l - top).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    /// Full score vector `∇ log π_θ(a|s)` (dimension of `θ`).
    pub fn log_grad(&self, theta: &PolicyParams, s: usize, a: usize) -> Result<Vec<f64>> {
        let local = self.log_grad_local(theta, s, a)?;
        let mut out = vec![0.0; self.param_dim()];
        out[s * self.n_actions..(s + 1) * self.n_actions].copy_from_slice(&local);
        Ok(out)
    }

    /// The state-`s` block of the score: `e_a − π_θ(·|s)`.
    pub fn log_grad_local(&self, theta: &PolicyParams, s: usize, a: usize) -> Result<Vec<f64>> {
        if a >= self.n_actions {
            return Err(param_err!("action {a} out of range (n_actions = {})", self.n_actions));
        }
        let mut out = self.action_probs(theta, s)?;
        score_from_probs(&mut out, a);
        Ok(out)
    }

    /// Draws an action for state `s` from one uniform variate.
    pub fn sample_action(&self, theta: &PolicyParams, s: usize, u: f64) -> Result<usize> {
        let probs = self.action_probs(theta, s)?;
        Ok(inverse_cdf(&probs, u))
    }
}

/// Turns `π(·|s)` into the local score `e_a − π(·|s)` in place.
#[inline]
pub fn score_from_probs(probs: &mut [f64], a: usize) {
    for p in probs.iter_mut() {
        *p = -*p;
    }
    probs[a] += 1.0;
}

/// Inverse-CDF draw: returns the first index `i` with `u < Σ_{j≤i} p_j`.
///
/// Zero-probability entries are never returned. If rounding leaves `u` at or
/// above the accumulated total, the last index with positive mass is used.
#[inline]
pub fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last_positive = i;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

/// Numerically probes the three constants of the softmax class over random
/// parameters with entries in `[-scale, scale]`.
///
/// Lipschitz ratios are measured on pairs `θ₂ = θ₁ + ε·v` with `v` a random
/// direction and `ε ∈ {1e-3, 1e-1, 1}` so that both local and global
/// behaviour is seen.
pub fn probe_policy_constants(
    policy: &SoftmaxPolicy,
    n_probes: usize,
    scale: f64,
    seed: u64,
) -> PolicyProbe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = policy.param_dim();
    let na = policy.n_actions();
    let mut probe = PolicyProbe {
        max_log_grad: 0.0,
        max_log_grad_ratio: 0.0,
        max_prob_ratio: 0.0,
        n_probes,
    };
    let mut p1 = vec![0.0; na];
    let mut p2 = vec![0.0; na];
    for k in 0..n_probes {
        let t1: Vec<f64> = (0..dim).map(|_| rng.random_range(-scale..=scale)).collect();
        let eps = [1e-3, 1e-1, 1.0][k % 3];
        let dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let dn = norm(&dir).max(f64::MIN_POSITIVE);
        let t2: Vec<f64> = t1.iter().zip(&dir).map(|(x, d)| x + eps * d / dn).collect();
        let s = rng.random_range(0..policy.n_states());
        let a = rng.random_range(0..na);

        policy.probs_into(&t1, s, &mut p1);
        policy.probs_into(&t2, s, &mut p2);
        // θ₂ − θ₁ has norm ε by construction.
        probe.max_prob_ratio = probe.max_prob_ratio.max((p1[a] - p2[a]).abs() / eps);

        score_from_probs(&mut p1, a);
        score_from_probs(&mut p2, a);
        probe.max_log_grad = probe.max_log_grad.max(norm(&p1)).max(norm(&p2));
        let diff: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| x - y).collect();
        probe.max_log_grad_ratio = probe.max_log_grad_ratio.max(norm(&diff) / eps);
    }
    probe
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_at_zero() {
        let pol = SoftmaxPolicy::new(2, 4).unwrap();
        let p = pol.action_probs(&PolicyParams::zeros(8), 1).unwrap();
        assert!(p.iter().all(|&x| close(x, 0.25, 1e-15)));
    }

    #[test]
    fn ln3_logit_gives_three_quarters() {
        let pol = SoftmaxPolicy::new(1, 2).unwrap();
        let theta = PolicyParams::new(vec![3.0f64.ln(), 0.0]).unwrap();
        let p = pol.action_probs(&theta, 0).unwrap();
        assert!(close(p[0], 0.75, 1e-15) && close(p[1], 0.25, 1e-15));
    }

    #[test]
    fn score_at_zero_two_actions() {
        let pol = SoftmaxPolicy::new(2, 2).unwrap();
        let g = pol.log_grad(&PolicyParams::zeros(4), 0, 0).unwrap();
        assert_eq!(g, vec![0.5, -0.5, 0.0, 0.0]);
        assert!(close(norm(&g), 0.5f64.sqrt(), 1e-15));
    }

    #[test]
    fn dominant_action_score_vanishes() {
        let pol = SoftmaxPolicy::new(1, 2).unwrap();
        let theta = PolicyParams::new(vec![20.0, 0.0]).unwrap();
        let g = pol.log_grad(&theta, 0, 0).unwrap();
        // ‖e_0 − π‖ = √2 · e^{-20}/(1 + e^{-20}).
        let expect = 2f64.sqrt() * (-20f64).exp() / (1.0 + (-20f64).exp());
        assert!((norm(&g) - expect).abs() <= 1e-6 * expect);
        assert!(norm(&g) < 1e-8);
    }

    #[test]
    fn inverse_cdf_boundaries() {
        assert_eq!(inverse_cdf(&[0.5, 0.5], 0.49), 0);
        assert_eq!(inverse_cdf(&[0.5, 0.5], 0.51), 1);
        assert_eq!(inverse_cdf(&[0.0, 1.0], 0.0), 1);
        assert_eq!(inverse_cdf(&[0.3, 0.7, 0.0], 0.999_999_999_999_999_9), 1);
    }

    #[test]
    fn bad_inputs() {
        let pol = SoftmaxPolicy::new(2, 2).unwrap();
        assert!(pol.action_probs(&PolicyParams::zeros(3), 0).is_err());
        assert!(pol.action_probs(&PolicyParams::zeros(4), 2).is_err());
        assert!(pol.log_grad(&PolicyParams::zeros(4), 0, 2).is_err());
        assert!(PolicyParams::new(vec![f64::NAN]).is_err());
        assert!(SoftmaxPolicy::new(0, 1).is_err());
    }

    #[test]
    fn empirical_frequencies_match() {
        // 10⁶ draws; each frequency within 4 standard errors of its probability.
        let pol = SoftmaxPolicy::new(1, 3).unwrap();
        let theta = PolicyParams::new(vec![0.3, -1.0, 0.8]).unwrap();
        let p = pol.action_probs(&theta, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[pol.sample_action(&theta, 0, rng.random::<f64>()).unwrap()] += 1;
        }
        for a in 0..3 {
            let freq = counts[a] as f64 / n as f64;
            let se = (p[a] * (1.0 - p[a]) / n as f64).sqrt();
            assert!((freq - p[a]).abs() <= 4.0 * se, "action {a}: {freq} vs {}", p[a]);
        }
    }

    #[test]
    fn probe_respects_analytic_bounds() {
        let pol = SoftmaxPolicy::new(3, 4).unwrap();
        let consts = policy_constants(3, 4);
        assert_eq!(consts.b_bound, 2.0);
        let probe = probe_policy_constants(&pol, 1000, 3.0, 5);
        assert!(probe.max_log_grad <= consts.b_bound);
        assert!(probe.max_log_grad_ratio <= consts.l_l);
        assert!(probe.max_prob_ratio <= consts.l_pi);
        assert!(probe.max_log_grad > 0.0 && probe.max_prob_ratio > 0.0);
    }

    fn theta_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-8.0f64..8.0, 12)
    }

    proptest! {
        #[test]
        fn probs_normalized_and_shift_invariant(t in theta_strategy(), shift in -50.0f64..50.0, s in 0usize..3) {
            let pol = SoftmaxPolicy::new(3, 4).unwrap();
            let theta = PolicyParams::new(t.clone()).unwrap();
            let p = pol.action_probs(&theta, s).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|&x| x > 0.0));
            let mut shifted = t;
            for a in 0..4 { shifted[pol.index(s, a)] += shift; }
            let q = pol.action_probs(&PolicyParams::new(shifted).unwrap(), s).unwrap();
            for a in 0..4 { prop_assert!((p[a] - q[a]).abs() <= 1e-12); }
        }

        #[test]
        fn score_has_zero_mean(t in theta_strategy(), s in 0usize..3) {
            let pol = SoftmaxPolicy::new(3, 4).unwrap();
            let theta = PolicyParams::new(t).unwrap();
            let p = pol.action_probs(&theta, s).unwrap();
            let mut mean = vec![0.0; 12];
            for (a, pa) in p.iter().enumerate() {
                let g = pol.log_grad(&theta, s, a).unwrap();
                prop_assert!(norm(&g) <= 2.0);
                for (m, gi) in mean.iter_mut().zip(&g) { *m += pa * gi; }
            }
            prop_assert!(norm(&mean) <= 1e-10);
        }

        #[test]
        fn score_matches_finite_differences(t in theta_strategy(), s in 0usize..3, a in 0usize..4) {
            let pol = SoftmaxPolicy::new(3, 4).unwrap();
            let theta = PolicyParams::new(t.clone()).unwrap();
            let g = pol.log_grad(&theta, s, a).unwrap();
            let h = 1e-5;
            let mut fd = [0.0; 12];
            for (j, f) in fd.iter_mut().enumerate() {
                let mut up = t.clone();
                let mut dn = t.clone();
                up[j] += h;
                dn[j] -= h;
                let lp = pol.action_probs(&PolicyParams::new(up).unwrap(), s).unwrap()[a].ln();
                let lm = pol.action_probs(&PolicyParams::new(dn).unwrap(), s).unwrap()[a].ln();
                *f = (lp - lm) / (2.0 * h);
            }
            let err: Vec<f64> = fd.iter().zip(&g).map(|(x, y)| x - y).collect();
            // Relative 1e-6, with an absolute floor for near-deterministic states.
            prop_assert!(norm(&err) <= 1e-6 * norm(&g).max(1e-4), "err {} vs |g| {}", norm(&err), norm(&g));
        }
    }
}
