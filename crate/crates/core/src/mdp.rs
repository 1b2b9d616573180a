//! Finite MDPs, random Garnet instances and policy-induced chains.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param_err, Error, Result};
use crate::policy::{PolicyParams, SoftmaxPolicy};

/// Tolerance on transition row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Finite MDP with deterministic rewards `r(s, a) ∈ [−U_r, U_r]`.
///
/// Transitions are stored densely, indexed `(s, a, s′)` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    u_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub state: usize,
    pub action: usize,
    pub sum: f64,
    pub min_entry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardViolation {
    pub state: usize,
    pub action: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub row_violations: Vec<RowViolation>,
    pub reward_violations: Vec<RewardViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.row_violations.is_empty() && self.reward_violations.is_empty()
    }
}

impl FiniteMdp {
    /// Builds an MDP from flat tables. Only shapes and finiteness are
    /// checked here; stochasticity and reward bounds are reported by
    /// [`FiniteMdp::validate`].
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        u_r: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(param_err!("MDP needs at least one state and one action"));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(param_err!(
                "transition table has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            ));
        }
        if reward.len() != n_states * n_actions {
            return Err(param_err!(
                "reward table has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            ));
        }
        if !(u_r.is_finite() && u_r > 0.0) {
            return Err(param_err!("reward bound must be positive and finite, got {u_r}"));
        }
        if transition.iter().chain(&reward).any(|v| !v.is_finite()) {
            return Err(param_err!("MDP tables contain non-finite values"));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            u_r,
        })
    }

    /// Builds an MDP from nested `transition[s][a][s′]` and `reward[s][a]`.
    pub fn from_nested(transition: &[Vec<Vec<f64>>], reward: &[Vec<f64>], u_r: f64) -> Result<Self> {
        let n_states = transition.len();
        let n_actions = transition.first().map_or(0, Vec::len);
        let mut flat_p = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, rows) in transition.iter().enumerate() {
            if rows.len() != n_actions {
                return Err(param_err!("state {s} has {} actions, expected {n_actions}", rows.len()));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n_states {
                    return Err(param_err!("row ({s}, {a}) has {} entries, expected {n_states}", row.len()));
                }
                flat_p.extend_from_slice(row);
            }
        }
        if reward.len() != n_states || reward.iter().any(|r| r.len() != n_actions) {
            return Err(param_err!("reward table must be {n_states} x {n_actions}"));
        }
        let flat_r = reward.iter().flatten().copied().collect();
        Self::new(n_states, n_actions, flat_p, flat_r, u_r)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn u_r(&self) -> f64 {
        self.u_r
    }

    /// `P(·|s, a)`.
    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    pub fn transition_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| self.transition_row(s, a).to_vec()).collect())
            .collect()
    }

    pub fn reward_nested(&self) -> Vec<Vec<f64>> {
        self.reward.chunks(self.n_actions).map(<[f64]>::to_vec).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.transition_row(s, a);
                let sum: f64 = row.iter().sum();
                let min_entry = row.iter().copied().fold(f64::INFINITY, f64::min);
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE || min_entry < 0.0 {
                    report.row_violations.push(RowViolation {
                        state: s,
                        action: a,
                        sum,
                        min_entry,
                    });
                }
                let value = self.reward(s, a);
                if value.abs() > self.u_r {
                    report.reward_violations.push(RewardViolation { state: s, action: a, value });
                }
            }
        }
        report
    }

    pub fn check_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(param_err!(
                "invalid MDP: {} stochasticity violations, {} reward-bound violations",
                report.row_violations.len(),
                report.reward_violations.len()
            ))
        }
    }
}

/// The two-state, two-action fixture used throughout the tests.
///
/// Action 0 (`L`) moves to state 0 with probability 0.9 and action 1 (`R`)
/// moves to state 1 with probability 0.9, from either state. The reward is
/// 0 in state 0 and 1 in state 1, with `U_r = 1`.
pub fn two_state() -> FiniteMdp {
    let left = [0.9, 0.1];
    let right = [0.1, 0.9];
    let transition = [left, right, left, right].concat();
    FiniteMdp::new(2, 2, transition, vec![0.0, 0.0, 1.0, 1.0], 1.0).expect("fixture is well formed")
}

/// Parameters of a Garnet (random branching-factor) MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub u_r: f64,
}

impl GarnetSpec {
    pub fn new(n_states: usize, n_actions: usize, branching: usize) -> Self {
        Self {
            n_states,
            n_actions,
            branching,
            u_r: 1.0,
        }
    }
}

/// Random Garnet MDP. Every `(s, a)` row puts mass on exactly `branching`
/// distinct next states, with weights given by the spacings of sorted
/// uniform variates; rewards are uniform on `[−U_r, U_r]`.
pub fn generate_garnet(spec: &GarnetSpec, seed: u64) -> Result<FiniteMdp> {
    let GarnetSpec {
        n_states,
        n_actions,
        branching,
        u_r,
    } = *spec;
    if n_states == 0 || n_actions == 0 {
        return Err(param_err!("Garnet needs at least one state and one action"));
    }
    if branching == 0 || branching > n_states {
        return Err(param_err!("branching factor {branching} outside 1..={n_states}"));
    }
    if !(u_r.is_finite() && u_r > 0.0) {
        return Err(param_err!("reward bound must be positive, got {u_r}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    let mut cuts = vec![0.0; branching + 1];
    for row in transition.chunks_mut(n_states) {
        let mut targets = index::sample(&mut rng, n_states, branching).into_vec();
        targets.sort_unstable();
        loop {
            cuts[0] = 0.0;
            cuts[branching] = 1.0;
            for c in &mut cuts[1..branching] {
                *c = rng.random::<f64>();
            }
            cuts[1..branching].sort_unstable_by(f64::total_cmp);
            if cuts.windows(2).all(|w| w[1] > w[0]) {
                break;
            }
        }
        for (k, &s_next) in targets.iter().enumerate() {
            row[s_next] = cuts[k + 1] - cuts[k];
        }
        // Put the rounding residue on the largest entry so the row sums to 1.
        let sum: f64 = row.iter().sum();
        let big = (0..n_states).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
        row[big] += 1.0 - sum;
    }
    let reward = (0..n_states * n_actions).map(|_| rng.random_range(-u_r..=u_r)).collect();
    FiniteMdp::new(n_states, n_actions, transition, reward, u_r)
}

/// Generates Garnet instances from `seed`, `seed + 1`, … until one whose
/// chains are ergodic is found; returns it with the seed that produced it.
///
/// Softmax policies give every action positive probability, so the support
/// of `P_θ` (and with it irreducibility and aperiodicity) does not depend on
/// `θ`; probing the uniform policy is enough.
pub fn generate_ergodic_garnet(spec: &GarnetSpec, seed: u64, max_attempts: usize) -> Result<(FiniteMdp, u64)> {
    let mut last = None;
    for k in 0..max_attempts as u64 {
        let s = seed.wrapping_add(k);
        let mdp = generate_garnet(spec, s)?;
        let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions())?;
        let chain = induced_chain(&mdp, &policy, &PolicyParams::zeros(policy.param_dim()))?;
        match crate::oracle::stationary_distribution(&chain) {
            Ok(_) => return Ok((mdp, s)),
            Err(e @ Error::NonErgodic(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| param_err!("no Garnet attempts were made")))
}

/// Markov chain `P_θ` and expected reward `r_θ` under a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    n_states: usize,
    p_theta: Vec<f64>,
    r_theta: Vec<f64>,
}

impl InducedChain {
    /// Builds a chain directly from a row-stochastic matrix (row-major) and a
    /// reward vector.
    pub fn from_parts(n_states: usize, p_theta: Vec<f64>, r_theta: Vec<f64>) -> Result<Self> {
        if n_states == 0 || p_theta.len() != n_states * n_states || r_theta.len() != n_states {
            return Err(param_err!("chain tables do not match {n_states} states"));
        }
        for (s, row) in p_theta.chunks(n_states).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE || row.iter().any(|&p| p < 0.0) {
                return Err(param_err!("row {s} of the chain is not a distribution (sum {sum})"));
            }
        }
        Ok(Self {
            n_states,
            p_theta,
            r_theta,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.p_theta[s * self.n_states..(s + 1) * self.n_states]
    }

    pub fn p_theta(&self) -> &[f64] {
        &self.p_theta
    }

    pub fn r_theta(&self) -> &[f64] {
        &self.r_theta
    }
}

/// `P_θ(s′|s) = Σ_a π_θ(a|s) P(s′|s, a)` and `r_θ(s) = Σ_a π_θ(a|s) r(s, a)`.
pub fn induced_chain(mdp: &FiniteMdp, policy: &SoftmaxPolicy, theta: &PolicyParams) -> Result<InducedChain> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(param_err!(
            "policy is {}x{} but MDP is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        ));
    }
    policy.check_params(theta)?;
    Ok(induced_chain_unchecked(mdp, policy, theta.as_slice()))
}

pub(crate) fn induced_chain_unchecked(mdp: &FiniteMdp, policy: &SoftmaxPolicy, theta: &[f64]) -> InducedChain {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut p_theta = vec![0.0; n * n];
    let mut r_theta = vec![0.0; n];
    let mut probs = vec![0.0; na];
    for s in 0..n {
        policy.probs_into(theta, s, &mut probs);
        let out = &mut p_theta[s * n..(s + 1) * n];
        for (a, &pa) in probs.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(mdp.transition_row(s, a)) {
                *o += pa * p;
            }
            r_theta[s] += pa * mdp.reward(s, a);
        }
    }
    InducedChain {
        n_states: n,
        p_theta,
        r_theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixture_is_valid() {
        assert!(two_state().validate().is_valid());
    }

    #[test]
    fn short_row_is_flagged() {
        let mut p = two_state().transition_table().to_vec();
        p[2] = 0.09; // row (0, R) now sums to 0.99
        let mdp = FiniteMdp::new(2, 2, p, vec![0.0, 0.0, 1.0, 1.0], 1.0).unwrap();
        let report = mdp.validate();
        assert!(!report.is_valid());
        assert_eq!(report.row_violations.len(), 1);
        assert_eq!((report.row_violations[0].state, report.row_violations[0].action), (0, 1));
        assert!(report.reward_violations.is_empty());
    }

    #[test]
    fn reward_bound_is_flagged() {
        let mdp = FiniteMdp::new(2, 2, two_state().transition_table().to_vec(), vec![0.0, 1.5, 1.0, 1.0], 1.0).unwrap();
        let report = mdp.validate();
        assert_eq!(report.reward_violations.len(), 1);
        assert_eq!(report.reward_violations[0].value, 1.5);
        assert!(report.row_violations.is_empty());
    }

    #[test]
    fn garnet_rows_have_exact_branching() {
        let mdp = generate_garnet(&GarnetSpec::new(5, 3, 2), 7).unwrap();
        assert!(mdp.validate().is_valid());
        for s in 0..5 {
            for a in 0..3 {
                let row = mdp.transition_row(s, a);
                assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 2);
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn garnet_single_state() {
        let mdp = generate_garnet(&GarnetSpec::new(1, 1, 1), 0).unwrap();
        assert_eq!(mdp.transition_table(), &[1.0]);
    }

    #[test]
    fn garnet_is_deterministic() {
        let spec = GarnetSpec::new(6, 2, 3);
        let a = generate_garnet(&spec, 11).unwrap();
        let b = generate_garnet(&spec, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_garnet(&spec, 12).unwrap());
    }

    #[test]
    fn garnet_branching_out_of_range() {
        assert!(generate_garnet(&GarnetSpec::new(3, 2, 0), 0).is_err());
        assert!(generate_garnet(&GarnetSpec::new(3, 2, 4), 0).is_err());
    }

    #[test]
    fn uniform_policy_on_fixture() {
        let mdp = two_state();
        let pol = SoftmaxPolicy::new(2, 2).unwrap();
        let chain = induced_chain(&mdp, &pol, &PolicyParams::zeros(4)).unwrap();
        for s in 0..2 {
            assert!((chain.row(s)[0] - 0.5).abs() < 1e-15 && (chain.row(s)[1] - 0.5).abs() < 1e-15);
        }
        assert_eq!(chain.r_theta(), &[0.0, 1.0]);
    }

    #[test]
    fn deterministic_limit_copies_action_kernel() {
        let mdp = two_state();
        let pol = SoftmaxPolicy::new(2, 2).unwrap();
        // exp(-800) underflows to zero, so π puts all mass on L.
        let theta = PolicyParams::new(vec![800.0, 0.0, 800.0, 0.0]).unwrap();
        let chain = induced_chain(&mdp, &pol, &theta).unwrap();
        for s in 0..2 {
            assert_eq!(chain.row(s), mdp.transition_row(s, 0));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let pol = SoftmaxPolicy::new(3, 2).unwrap();
        assert!(induced_chain(&two_state(), &pol, &PolicyParams::zeros(6)).is_err());
    }

    proptest! {
        #[test]
        fn induced_rows_are_distributions(t in proptest::collection::vec(-10.0f64..10.0, 15), seed in 0u64..50) {
            let mdp = generate_garnet(&GarnetSpec::new(5, 3, 3), seed).unwrap();
            let pol = SoftmaxPolicy::new(5, 3).unwrap();
            let chain = induced_chain(&mdp, &pol, &PolicyParams::new(t).unwrap()).unwrap();
            for s in 0..5 {
                prop_assert!((chain.row(s).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
