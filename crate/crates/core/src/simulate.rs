//! The single-timescale actor-critic learner.
//!
//! Each iteration performs three coupled updates driven by one TD error
//! `δ_t = r_t − η_t + φ(s′)ᵀω_t − φ(s_t)ᵀω_t`:
//!
//! ```text
//! η_{t+1} = (1 − γ) η_t + γ r_t
//! ω_{t+1} = Π_{U_ω}(ω_t + β δ_t φ(s_t))
//! θ_{t+1} = θ_t + α δ_t ∇log π_{θ_t}(a_t|s_t)
//! ```
//!
//! with constant step sizes `α = c/√T`, `β = γ = 1/√T`. [`run_markovian`]
//! follows a single trajectory; [`run_iid`] draws every `s_t` afresh from the
//! stationary distribution of the current policy and discards `s′`.
//!
//! Per step, variates are consumed in a fixed order: (in i.i.d. mode) one
//! stationary draw, then one action draw, then one transition draw. The
//! Markovian runner takes one extra initial-state draw before the first step.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // float math for no_std; unused when std is linked
use num_traits::Float;

use crate::error::{param_err, Error, Result};
use crate::features::FeatureMap;
use crate::linalg::{dot, norm};
use crate::mdp::{induced_chain_unchecked, FiniteMdp};
use crate::oracle::{self, OracleBundle};
use crate::policy::{inverse_cdf, PolicyParams, SoftmaxPolicy};
use crate::rng::{Purpose, VariateSource};

/// Upper limit of the direct scan in [`mixing_time_tau`].
pub const TAU_SCAN_CAP: u64 = 1_000_000;

/// Slack allowed when checking `‖ω‖ ≤ U_ω` after a projection.
pub const PROJECTION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub t_total: u64,
}

/// `α = c/√T`, `β = γ = 1/√T`.
pub fn stepsizes(t_total: u64, c: f64) -> Result<StepSizes> {
    if t_total == 0 {
        return Err(param_err!("horizon T must be at least 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(param_err!("step ratio c must be positive and finite, got {c}"));
    }
    let beta = 1.0 / (t_total as f64).sqrt();
    Ok(StepSizes {
        alpha: c * beta,
        beta,
        gamma: beta,
        c,
        t_total,
    })
}

/// `τ_T = min{i ≥ 0 : m ρ^(i−1) ≤ 1/√T}` by direct scan.
pub fn mixing_time_tau(m: f64, rho: f64, t_total: u64) -> Result<u64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(param_err!("mixing constant m must be positive, got {m}"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(param_err!("mixing rate rho must lie in (0, 1), got {rho}"));
    }
    if t_total == 0 {
        return Err(param_err!("horizon T must be at least 1"));
    }
    let threshold = 1.0 / (t_total as f64).sqrt();
    let mut bound = m / rho;
    for i in 0..=TAU_SCAN_CAP {
        if bound <= threshold {
            return Ok(i);
        }
        bound *= rho;
    }
    Err(Error::MixingTooSlow(alloc::format!(
        "m = {m}, rho = {rho} needs more than {TAU_SCAN_CAP} steps to reach 1/sqrt({t_total})"
    )))
}

/// Euclidean-ball projection `Π_{U_ω}`.
pub fn project(omega: &[f64], u_omega: f64) -> Vec<f64> {
    let mut out = omega.to_vec();
    project_in_place(&mut out, u_omega);
    out
}

#[inline]
pub fn project_in_place(omega: &mut [f64], u_omega: f64) {
    let n = norm(omega);
    if n > u_omega {
        let scale = u_omega / n;
        omega.iter_mut().for_each(|x| *x *= scale);
    }
}

/// `U_ω = 2U_r/λ(θ₀)`.
pub fn default_u_omega(mdp: &FiniteMdp, map: &FeatureMap, theta0: &PolicyParams) -> Result<f64> {
    let bundle = OracleBundle::compute(mdp, map, theta0)?;
    Ok(2.0 * mdp.u_r() / bundle.lambda_margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    Markovian,
    Iid,
}

impl SamplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingMode::Markovian => "markovian",
            SamplingMode::Iid => "iid",
        }
    }
}

/// Distribution of `s₀` for the Markovian runner.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialDistribution {
    #[default]
    Uniform,
    State(usize),
    Weights(Vec<f64>),
}

impl InitialDistribution {
    fn probabilities(&self, n_states: usize) -> Result<Vec<f64>> {
        match self {
            InitialDistribution::Uniform => Ok(vec![1.0 / n_states as f64; n_states]),
            InitialDistribution::State(s) => {
                if *s >= n_states {
                    return Err(param_err!("initial state {s} out of range (n_states = {n_states})"));
                }
                let mut p = vec![0.0; n_states];
                p[*s] = 1.0;
                Ok(p)
            }
            InitialDistribution::Weights(w) => {
                let total: f64 = w.iter().sum();
                if w.len() != n_states || w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || !(total > 0.0) {
                    return Err(param_err!("initial weights must be {n_states} nonnegative numbers with positive sum"));
                }
                Ok(w.iter().map(|x| x / total).collect())
            }
        }
    }
}

/// Starting point `(θ₀, ω₀, η₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerInit {
    pub theta: PolicyParams,
    pub omega: Vec<f64>,
    pub eta: f64,
}

impl LearnerInit {
    /// All-zero start: uniform policy, zero critic, zero reward estimate.
    pub fn zeros(mdp: &FiniteMdp, map: &FeatureMap) -> Self {
        Self {
            theta: PolicyParams::zeros(mdp.n_states() * mdp.n_actions()),
            omega: vec![0.0; map.dim()],
            eta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub steps: StepSizes,
    pub u_omega: f64,
    /// Checkpoints are taken at every `t` divisible by this (`t < T`).
    pub checkpoint_every: u64,
    pub initial: InitialDistribution,
    /// i.i.d. mode only: recompute `μ_θ` every this many steps. `1` is exact;
    /// larger values reuse a stale distribution and only approximate the
    /// algorithm.
    pub mu_refresh_every: u64,
    /// Master seed recorded in the trace metadata.
    pub seed: u64,
    /// Configuration hash recorded in the trace metadata.
    pub config_hash: String,
}

impl RunConfig {
    pub fn new(steps: StepSizes, u_omega: f64) -> Self {
        Self {
            steps,
            u_omega,
            checkpoint_every: 1,
            initial: InitialDistribution::Uniform,
            mu_refresh_every: 1,
            seed: 0,
            config_hash: String::new(),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.u_omega > 0.0 && self.u_omega.is_finite()) {
            return Err(param_err!("critic radius must be positive and finite, got {}", self.u_omega));
        }
        if self.checkpoint_every == 0 || self.mu_refresh_every == 0 {
            return Err(param_err!("checkpoint_every and mu_refresh_every must be at least 1"));
        }
        let s = &self.steps;
        if s.t_total == 0 || ![s.alpha, s.beta, s.gamma].iter().all(|x| *x >= 0.0 && x.is_finite()) {
            return Err(param_err!("step sizes must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Mutable learner state between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub eta: f64,
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    pub t: u64,
    /// Current state of the trajectory (Markovian mode only).
    pub s_current: Option<usize>,
}

/// One iteration, recorded with the iterates *before* the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub delta: f64,
    pub eta: f64,
    pub omega_norm: f64,
    pub s_next: usize,
    /// `‖θ_{t+1} − θ_t‖`.
    pub theta_step_norm: f64,
}

/// Snapshot of `(η_t, ω_t, θ_t)` before step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub eta: f64,
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Completed,
    /// A non-finite value appeared while executing step `step`.
    Diverged { step: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub seed: u64,
    pub mode: SamplingMode,
    pub config_hash: String,
    pub steps: StepSizes,
    pub u_omega: f64,
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub final_state: LearnerState,
    pub outcome: RunOutcome,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn diverged(&self) -> bool {
        matches!(self.outcome, RunOutcome::Diverged { .. })
    }
}

/// Algorithm with Markovian sampling: `s_{t+1}` becomes the next state.
pub fn run_markovian<V: VariateSource>(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    init: &LearnerInit,
    config: &RunConfig,
    variates: &mut V,
) -> Result<Trace> {
    run(mdp, map, init, config, variates, SamplingMode::Markovian)
}

/// Algorithm with i.i.d. sampling: `s_t ∼ μ_{θ_t}` each step.
pub fn run_iid<V: VariateSource>(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    init: &LearnerInit,
    config: &RunConfig,
    variates: &mut V,
) -> Result<Trace> {
    run(mdp, map, init, config, variates, SamplingMode::Iid)
}

fn run<V: VariateSource>(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    init: &LearnerInit,
    config: &RunConfig,
    variates: &mut V,
    mode: SamplingMode,
) -> Result<Trace> {
    config.check()?;
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions())?;
    policy.check_params(&init.theta)?;
    if map.n_states() != mdp.n_states() {
        return Err(param_err!("feature map covers {} states, MDP has {}", map.n_states(), mdp.n_states()));
    }
    if init.omega.len() != map.dim() || init.omega.iter().any(|x| !x.is_finite()) || !init.eta.is_finite() {
        return Err(param_err!("initial critic must be a finite {}-vector and η₀ finite", map.dim()));
    }

    let StepSizes { alpha, beta, gamma, t_total, .. } = config.steps;
    let na = mdp.n_actions();
    let mut state = LearnerState {
        eta: init.eta,
        omega: init.omega.clone(),
        theta: init.theta.as_slice().to_vec(),
        t: 0,
        s_current: None,
    };

    let mut s = match mode {
        SamplingMode::Markovian => {
            let p0 = config.initial.probabilities(mdp.n_states())?;
            let s0 = inverse_cdf(&p0, variates.uniform(Purpose::Initial));
            state.s_current = Some(s0);
            s0
        }
        SamplingMode::Iid => 0,
    };

    // i.i.d. mode: the first stationary solve is fully probed; the support of
    // a softmax policy never changes, so later solves skip the probe.
    let mut mu: Vec<f64> = Vec::new();
    let mut mu_theta: Vec<f64> = Vec::new();
    if mode == SamplingMode::Iid {
        let chain = induced_chain_unchecked(mdp, &policy, &state.theta);
        mu = oracle::stationary_distribution(&chain)?.as_slice().to_vec();
        mu_theta = state.theta.clone();
    }

    let mut records = Vec::with_capacity(t_total as usize);
    let mut checkpoints = Vec::with_capacity((t_total / config.checkpoint_every + 1) as usize);
    let mut probs = vec![0.0; na];
    let mut outcome = RunOutcome::Completed;

    for t in 0..t_total {
        state.t = t;
        if t % config.checkpoint_every == 0 {
            checkpoints.push(Checkpoint {
                t,
                eta: state.eta,
                omega: state.omega.clone(),
                theta: state.theta.clone(),
            });
        }

        if mode == SamplingMode::Iid {
            if t % config.mu_refresh_every == 0 && mu_theta != state.theta {
                let chain = induced_chain_unchecked(mdp, &policy, &state.theta);
                mu = oracle::solve_stationary(&chain)?.as_slice().to_vec();
                mu_theta.copy_from_slice(&state.theta);
            }
            s = inverse_cdf(&mu, variates.uniform(Purpose::Stationary));
        }

        policy.probs_into(&state.theta, s, &mut probs);
        let a = inverse_cdf(&probs, variates.uniform(Purpose::Action));
        let s_next = inverse_cdf(mdp.transition_row(s, a), variates.uniform(Purpose::Transition));
        let r = mdp.reward(s, a);

        let phi_s = map.row(s);
        let delta = r - state.eta + map.value(s_next, &state.omega) - dot(phi_s, &state.omega);
        let omega_norm = norm(&state.omega);
        let eta_before = state.eta;

        state.eta = (1.0 - gamma) * state.eta + gamma * r;
        for (w, x) in state.omega.iter_mut().zip(phi_s) {
            *w += beta * delta * x;
        }
        project_in_place(&mut state.omega, config.u_omega);

        // Score is e_a − π(·|s), supported on the block of state s.
        let mut step_sq = 0.0;
        let block = &mut state.theta[s * na..(s + 1) * na];
        for (b, (th, p)) in block.iter_mut().zip(&probs).enumerate() {
            let score = if b == a { 1.0 - p } else { -p };
            let step = alpha * delta * score;
            *th += step;
            step_sq += step * step;
        }

        records.push(StepRecord {
            t,
            s,
            a,
            r,
            delta,
            eta: eta_before,
            omega_norm,
            s_next,
            theta_step_norm: step_sq.sqrt(),
        });

        let finite = delta.is_finite()
            && state.eta.is_finite()
            && state.omega.iter().all(|x| x.is_finite())
            && block_is_finite(&state.theta[s * na..(s + 1) * na]);
        if !finite {
            outcome = RunOutcome::Diverged { step: t };
            break;
        }

        if mode == SamplingMode::Markovian {
            s = s_next;
            state.s_current = Some(s);
        }
    }
    if outcome == RunOutcome::Completed {
        state.t = t_total;
    }

    Ok(Trace {
        records,
        checkpoints,
        final_state: state,
        outcome,
        meta: TraceMeta {
            seed: config.seed,
            mode,
            config_hash: config.config_hash.clone(),
            steps: config.steps,
            u_omega: config.u_omega,
            checkpoint_every: config.checkpoint_every,
        },
    })
}

fn block_is_finite(block: &[f64]) -> bool {
    block.iter().all(|x| x.is_finite())
}
