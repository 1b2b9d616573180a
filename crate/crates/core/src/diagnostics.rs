//! Error metrics, noise functionals and the step-size constant calculus.
//!
//! The learner is judged by three squared errors evaluated at checkpoints:
//! `y_t = η_t − J(θ_t)`, `‖z_t‖² = ‖ω_t − ω*(θ_t)‖²` and `‖∇J(θ_t)‖²`.
//! Their windowed means over `t ∈ [τ_T, T − 1]`, averaged across seeds, are
//! `Y_T`, `Z_T` and `G_T`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math for no_std; unused when std is linked
use num_traits::Float;

use crate::error::{param_err, Error, Result};
use crate::features::FeatureMap;
use crate::linalg::dot;
use crate::mdp::FiniteMdp;
use crate::oracle::{self, least_squares, OracleBundle};
use crate::policy::{score_from_probs, PolicyConstants, PolicyParams, SoftmaxPolicy};
use crate::simulate::{Trace, PROJECTION_SLACK};

/// Relative slack used when comparing the threshold conditions, so that
/// `c = c_threshold` is not rejected by the last bit of rounding.
pub const CONDITION_SLACK: f64 = 1e-12;

/// Squared errors at each checkpoint of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrajectories {
    pub t: Vec<u64>,
    pub y: Vec<f64>,
    pub z_norm_sq: Vec<f64>,
    pub grad_norm_sq: Vec<f64>,
    /// `λ(θ_t)` at each checkpoint.
    pub lambda: Vec<f64>,
    /// Whether `‖ω*(θ_t)‖` exceeds the run's critic radius.
    pub target_outside_ball: Vec<bool>,
}

impl ErrorTrajectories {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn any_target_outside_ball(&self) -> bool {
        self.target_outside_ball.iter().any(|&b| b)
    }
}

/// Evaluates `y_t`, `‖z_t‖²` and `‖∇J(θ_t)‖²` at every checkpoint of `trace`
/// with a fresh exact oracle at `θ_t`.
pub fn error_trajectories(trace: &Trace, mdp: &FiniteMdp, map: &FeatureMap) -> Result<ErrorTrajectories> {
    let n = trace.checkpoints.len();
    let mut out = ErrorTrajectories {
        t: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        z_norm_sq: Vec::with_capacity(n),
        grad_norm_sq: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        target_outside_ball: Vec::with_capacity(n),
    };
    for cp in &trace.checkpoints {
        let theta = PolicyParams::new(cp.theta.clone())?;
        let bundle = OracleBundle::compute(mdp, map, &theta)?;
        let y = cp.eta - bundle.j;
        let z: f64 = cp.omega.iter().zip(bundle.omega_star.iter()).map(|(w, s)| (w - s) * (w - s)).sum();
        out.t.push(cp.t);
        out.y.push(y);
        out.z_norm_sq.push(z);
        out.grad_norm_sq.push(bundle.grad_j.norm_squared());
        out.lambda.push(bundle.lambda_margin);
        out.target_outside_ball.push(bundle.omega_star.norm() > trace.meta.u_omega);
    }
    Ok(out)
}

/// Seed-averaged windowed means with standard errors across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedMeans {
    pub y_mean: f64,
    pub z_mean: f64,
    pub g_mean: f64,
    pub y_stderr: f64,
    pub z_stderr: f64,
    pub g_stderr: f64,
    pub tau: u64,
    pub t_total: u64,
    pub n_seeds: usize,
    /// Checkpoints per seed that fell inside the window.
    pub n_points: usize,
}

/// Averages squared errors over checkpoints with `τ_T ≤ t ≤ T − 1`, then
/// over seeds. Requires `T ≥ 2τ_T`.
pub fn windowed_means(runs: &[ErrorTrajectories], tau: u64, t_total: u64) -> Result<WindowedMeans> {
    if runs.is_empty() {
        return Err(param_err!("windowed means need at least one run"));
    }
    if t_total < 2 * tau {
        return Err(param_err!("horizon T = {t_total} is below 2·τ_T = {}", 2 * tau));
    }
    let mut per_seed = [Vec::new(), Vec::new(), Vec::new()];
    let mut n_points = 0;
    for run in runs {
        let idx: Vec<usize> = (0..run.len()).filter(|&k| run.t[k] >= tau && run.t[k] < t_total).collect();
        if idx.is_empty() {
            return Err(param_err!("no checkpoints fall inside the window [{tau}, {t_total})"));
        }
        n_points = idx.len();
        let mean = |f: &dyn Fn(usize) -> f64| idx.iter().map(|&k| f(k)).sum::<f64>() / idx.len() as f64;
        per_seed[0].push(mean(&|k| run.y[k] * run.y[k]));
        per_seed[1].push(mean(&|k| run.z_norm_sq[k]));
        per_seed[2].push(mean(&|k| run.grad_norm_sq[k]));
    }
    let [y, z, g] = per_seed.map(|v| mean_and_stderr(&v));
    Ok(WindowedMeans {
        y_mean: y.0,
        z_mean: z.0,
        g_mean: g.0,
        y_stderr: y.1,
        z_stderr: z.1,
        g_stderr: g.1,
        tau,
        t_total,
        n_seeds: runs.len(),
        n_points,
    })
}

/// Sample mean and the standard error of that mean (zero for one sample).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln T, ln value)`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(param_err!("rate fit needs at least 3 points, got {}", pairs.len()));
    }
    if pairs.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite())) {
        return Err(param_err!("rate fit needs positive finite horizons and values"));
    }
    let points: Vec<(f64, f64)> = pairs.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let (slope, intercept) = least_squares(&points);
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

/// A transition tuple `O = (s, a, s′)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
}

/// Critic and actor update directions split into their exact and error parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiGradientTerms {
    /// `g = [r − J + (φ(s′) − φ(s))ᵀω] φ(s)`.
    pub g: DVector<f64>,
    /// `ḡ = b_θ + A_θ ω`.
    pub gbar: DVector<f64>,
    /// `Δg = (J − η) φ(s)`.
    pub delta_g: DVector<f64>,
    /// `h = (r − J + (φ(s′) − φ(s))ᵀω*) ∇log π`.
    pub h: DVector<f64>,
    /// `Δh = (J − η + (φ(s′) − φ(s))ᵀ(ω − ω*)) ∇log π`.
    pub delta_h: DVector<f64>,
    /// `Δh′ = ((φ(s′)ᵀω* − V(s′)) − (φ(s)ᵀω* − V(s))) ∇log π`.
    pub delta_h_prime: DVector<f64>,
}

fn full_score(policy: &SoftmaxPolicy, theta: &[f64], s: usize, a: usize) -> DVector<f64> {
    let na = policy.n_actions();
    let mut local = vec![0.0; na];
    policy.probs_into(theta, s, &mut local);
    score_from_probs(&mut local, a);
    let mut out = DVector::zeros(policy.param_dim());
    for (b, v) in local.into_iter().enumerate() {
        out[policy.index(s, b)] = v;
    }
    out
}

fn check_observation(mdp: &FiniteMdp, map: &FeatureMap, obs: Observation, omega: &[f64]) -> Result<()> {
    let n = mdp.n_states();
    if obs.s >= n || obs.s_next >= n || obs.a >= mdp.n_actions() {
        return Err(param_err!("observation {obs:?} out of range"));
    }
    if omega.len() != map.dim() {
        return Err(param_err!("critic has dimension {}, expected {}", omega.len(), map.dim()));
    }
    Ok(())
}

/// Evaluates the six update functions at one observation. `bundle` fixes `θ`.
pub fn semigradient_terms(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    obs: Observation,
    eta: f64,
    omega: &[f64],
    bundle: &OracleBundle,
) -> Result<SemiGradientTerms> {
    check_observation(mdp, map, obs, omega)?;
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions())?;
    let Observation { s, a, s_next } = obs;
    let r = mdp.reward(s, a);
    let j = bundle.j;
    let phi = DVector::from_column_slice(map.row(s));
    let w = DVector::from_column_slice(omega);
    let star = bundle.omega_star.as_slice();
    let diff_w = map.value(s_next, omega) - map.value(s, omega);
    let diff_star = map.value(s_next, star) - map.value(s, star);
    let score = full_score(&policy, bundle.theta.as_slice(), s, a);
    let gap_next = map.value(s_next, star) - bundle.v[s_next];
    let gap_here = map.value(s, star) - bundle.v[s];

    Ok(SemiGradientTerms {
        g: &phi * (r - j + diff_w),
        gbar: &bundle.b_vec + &bundle.a_mat * &w,
        delta_g: &phi * (j - eta),
        h: &score * (r - j + diff_star),
        delta_h: &score * (j - eta + (diff_w - diff_star)),
        delta_h_prime: &score * (gap_next - gap_here),
    })
}

/// `Σ_{s,a,s′} μ(s) π(a|s) P(s′|s,a) f(s, a, s′)` for a vector-valued `f`.
pub fn stationary_expectation<F>(mdp: &FiniteMdp, bundle: &OracleBundle, dim: usize, mut f: F) -> DVector<f64>
where
    F: FnMut(Observation) -> DVector<f64>,
{
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions()).expect("MDP has positive shape");
    let mut probs = vec![0.0; mdp.n_actions()];
    let mut acc = DVector::zeros(dim);
    for s in 0..mdp.n_states() {
        policy.probs_into(bundle.theta.as_slice(), s, &mut probs);
        for (a, &pa) in probs.iter().enumerate() {
            for (s_next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                let w = bundle.mu[s] * pa * p;
                if w != 0.0 {
                    acc += f(Observation { s, a, s_next }) * w;
                }
            }
        }
    }
    acc
}

/// `E_{O′}[h(O′, θ)]` as an exact finite sum.
pub fn expected_h(mdp: &FiniteMdp, map: &FeatureMap, bundle: &OracleBundle) -> DVector<f64> {
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions()).expect("MDP has positive shape");
    let star = bundle.omega_star.as_slice();
    stationary_expectation(mdp, bundle, policy.param_dim(), |o| {
        let r = mdp.reward(o.s, o.a);
        full_score(&policy, bundle.theta.as_slice(), o.s, o.a)
            * (r - bundle.j + map.value(o.s_next, star) - map.value(o.s, star))
    })
}

/// `E_{O′}[Δh′(O′, θ)]` as an exact finite sum.
pub fn expected_delta_h_prime(mdp: &FiniteMdp, map: &FeatureMap, bundle: &OracleBundle) -> DVector<f64> {
    let policy = SoftmaxPolicy::new(mdp.n_states(), mdp.n_actions()).expect("MDP has positive shape");
    let star = bundle.omega_star.as_slice();
    stationary_expectation(mdp, bundle, policy.param_dim(), |o| {
        let gap = (map.value(o.s_next, star) - bundle.v[o.s_next]) - (map.value(o.s, star) - bundle.v[o.s]);
        full_score(&policy, bundle.theta.as_slice(), o.s, o.a) * gap
    })
}

/// Quantities at a fixed `θ` shared by every evaluation of the bias
/// functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasContext {
    pub expected_h: DVector<f64>,
    /// `∂ω*/∂θ` (`d × dim θ`); needed only for `Ξ`.
    pub jacobian: Option<DMatrix<f64>>,
}

impl BiasContext {
    pub fn new(mdp: &FiniteMdp, map: &FeatureMap, bundle: &OracleBundle, with_jacobian: bool) -> Result<Self> {
        let jacobian = if with_jacobian {
            Some(oracle::critic_target_jacobian(mdp, map, &bundle.theta)?)
        } else {
            None
        };
        Ok(Self {
            expected_h: expected_h(mdp, map, bundle),
            jacobian,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasFunctionals {
    /// `Φ = (η − J)(r − J)`.
    pub phi_f: f64,
    /// `Ψ = ⟨ω − ω*, g − ḡ⟩`.
    pub psi_f: f64,
    /// `Θ = ⟨∇J, E h − h(O)⟩`.
    pub theta_f: f64,
    /// `Ξ = ⟨ω − ω*, (∂ω*/∂θ)(E h − h(O))⟩`, present when the context has a
    /// Jacobian.
    pub xi_f: Option<f64>,
}

pub fn bias_functionals(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    obs: Observation,
    eta: f64,
    omega: &[f64],
    bundle: &OracleBundle,
    ctx: &BiasContext,
) -> Result<BiasFunctionals> {
    let terms = semigradient_terms(mdp, map, obs, eta, omega, bundle)?;
    let r = mdp.reward(obs.s, obs.a);
    let z = DVector::from_column_slice(omega) - &bundle.omega_star;
    let h_gap = &ctx.expected_h - &terms.h;
    Ok(BiasFunctionals {
        phi_f: (eta - bundle.j) * (r - bundle.j),
        psi_f: z.dot(&(&terms.g - &terms.gbar)),
        theta_f: bundle.grad_j.dot(&h_gap),
        xi_f: ctx.jacobian.as_ref().map(|jac| z.dot(&(jac * &h_gap))),
    })
}

/// How the actor/critic ratio `c` is bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRatio {
    /// `c` equals the threshold value.
    Auto,
    Fixed(f64),
}

/// Inputs to the closed-form constants that depend on the problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantInputs {
    pub u_r: f64,
    pub n_actions: usize,
    pub policy: PolicyConstants,
    pub lambda: f64,
    pub m: f64,
    pub rho: f64,
}

/// Lower estimates of the smoothness constants, from finite probe pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessProbe {
    /// `max ‖∇J(θ₁) − ∇J(θ₂)‖ / ‖θ₁ − θ₂‖`.
    pub l_jprime: f64,
    /// `max ‖∂ω*(θ₁) − ∂ω*(θ₂)‖ / ‖θ₁ − θ₂‖` (spectral norm).
    pub l_s: f64,
    /// `max ‖μ_{θ₁} − μ_{θ₂}‖₁ / ‖θ₁ − θ₂‖`.
    pub l_mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperConstants {
    pub u_r: f64,
    pub u_omega: f64,
    pub u_delta: f64,
    pub g_bound: f64,
    pub lambda: f64,
    pub m: f64,
    pub rho: f64,
    /// `max(0, ⌈ln(1/m)/ln ρ⌉)`.
    pub log_rho_term: f64,
    pub l_j: f64,
    pub l_star: f64,
    pub b_bound: f64,
    pub l_pi: f64,
    pub l_l: f64,
    /// The ratio these `l₁..l₄` are bound to.
    pub c: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub c_threshold: f64,
    pub probe: Option<SmoothnessProbe>,
}

impl PaperConstants {
    pub fn from_inputs(inputs: &ConstantInputs, ratio: StepRatio) -> Result<Self> {
        let ConstantInputs {
            u_r,
            n_actions,
            policy,
            lambda,
            m,
            rho,
        } = *inputs;
        if !(lambda > 0.0) {
            return Err(Error::AssumptionOneViolated(alloc::format!("exploration margin {lambda} is not positive")));
        }
        if !(u_r > 0.0 && m > 0.0 && rho > 0.0 && rho < 1.0) {
            return Err(param_err!("constants need U_r > 0, m > 0 and 0 < rho < 1"));
        }
        let b = policy.b_bound;
        let u_omega = 2.0 * u_r / lambda;
        let u_delta = 2.0 * u_r + 2.0 * u_omega;
        let g_bound = u_delta * b;
        let log_rho_term = ((1.0 / m).ln() / rho.ln()).ceil().max(0.0);
        let mixing = 1.0 + log_rho_term + 1.0 / (1.0 - rho);
        let a = n_actions as f64;
        let l_j = 2.0 * u_r * a * policy.l_pi * mixing;
        let l_star = (2.0 * u_r / (lambda * lambda) + 3.0 * u_r / lambda) * a * policy.l_pi * mixing;
        let c_threshold = (lambda / (32.0 * b * l_star))
            .min(lambda * lambda / (g_bound * (lambda * lambda + 3.0 * b * b * lambda * lambda + 64.0 * b * b)));
        let c = match ratio {
            StepRatio::Auto => c_threshold,
            StepRatio::Fixed(c) if c > 0.0 && c.is_finite() => c,
            StepRatio::Fixed(c) => return Err(param_err!("step ratio c must be positive, got {c}")),
        };
        Ok(Self {
            u_r,
            u_omega,
            u_delta,
            g_bound,
            lambda,
            m,
            rho,
            log_rho_term,
            l_j,
            l_star,
            b_bound: b,
            l_pi: policy.l_pi,
            l_l: policy.l_l,
            c,
            l1: c * g_bound,
            l2: 2.0 / lambda,
            l3: 2.0 * c * b * l_star / lambda,
            l4: b,
            c_threshold,
            probe: None,
        })
    }

    /// Rebinds `l₁..l₄` to another ratio.
    pub fn with_ratio(&self, c: f64) -> Self {
        Self {
            c,
            l1: c * self.g_bound,
            l3: 2.0 * c * self.b_bound * self.l_star / self.lambda,
            ..*self
        }
    }
}

/// Worst-case `(λ, m, ρ)` over the probe parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub lambda: f64,
    pub m: f64,
    pub rho: f64,
}

/// `tau_max` is the longest horizon of the mixing probe at each parameter.
pub fn worst_case_over(mdp: &FiniteMdp, map: &FeatureMap, probes: &[PolicyParams], tau_max: usize) -> Result<WorstCase> {
    if probes.is_empty() {
        return Err(param_err!("constants need at least one probe parameter"));
    }
    let mut worst = WorstCase {
        lambda: f64::INFINITY,
        m: 0.0,
        rho: 0.0,
    };
    for theta in probes {
        let bundle = OracleBundle::compute(mdp, map, theta)?;
        let mix = oracle::mixing_estimate_with(&bundle.chain, tau_max)?;
        worst.lambda = worst.lambda.min(bundle.lambda_margin);
        worst.m = worst.m.max(mix.m);
        worst.rho = worst.rho.max(mix.rho);
    }
    Ok(worst)
}

/// Closed-form constants with `λ`, `m`, `ρ` taken as the worst case over
/// `probes`.
pub fn paper_constants(
    mdp: &FiniteMdp,
    policy: PolicyConstants,
    map: &FeatureMap,
    probes: &[PolicyParams],
    ratio: StepRatio,
) -> Result<PaperConstants> {
    let worst = worst_case_over(mdp, map, probes, oracle::DEFAULT_TAU_MAX)?;
    PaperConstants::from_inputs(
        &ConstantInputs {
            u_r: mdp.u_r(),
            n_actions: mdp.n_actions(),
            policy,
            lambda: worst.lambda,
            m: worst.m,
            rho: worst.rho,
        },
        ratio,
    )
}

/// Smoothness ratios over all pairs of probe parameters. These are lower
/// estimates of the true Lipschitz constants.
pub fn probe_smoothness(mdp: &FiniteMdp, map: &FeatureMap, probes: &[PolicyParams]) -> Result<SmoothnessProbe> {
    if probes.len() < 2 {
        return Err(param_err!("smoothness probes need at least two parameters"));
    }
    let mut data = Vec::with_capacity(probes.len());
    for theta in probes {
        let bundle = OracleBundle::compute(mdp, map, theta)?;
        let jac = oracle::critic_target_jacobian(mdp, map, theta)?;
        data.push((bundle.grad_j, jac, bundle.mu));
    }
    let mut out = SmoothnessProbe {
        l_jprime: 0.0,
        l_s: 0.0,
        l_mu: 0.0,
    };
    for i in 0..probes.len() {
        for k in i + 1..probes.len() {
            let dist: f64 = dot(probes[i].as_slice(), probes[i].as_slice()) + dot(probes[k].as_slice(), probes[k].as_slice())
                - 2.0 * dot(probes[i].as_slice(), probes[k].as_slice());
            let dist = dist.max(0.0).sqrt();
            if dist == 0.0 {
                continue;
            }
            out.l_jprime = out.l_jprime.max((&data[i].0 - &data[k].0).norm() / dist);
            let jd = &data[i].1 - &data[k].1;
            out.l_s = out.l_s.max(jd.singular_values().max() / dist);
            out.l_mu = out.l_mu.max((&data[i].2 - &data[k].2).lp_norm(1) / dist);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeVerdict {
    /// `4 l₃`.
    pub lhs_a: f64,
    /// `l₁ (1 + 2l₄² + 8l₄²(2l₂² + l₃))`.
    pub lhs_b: f64,
    /// `4 l₃ ≤ 1/4`.
    pub condition_a: bool,
    /// `lhs_b ≤ 1`.
    pub condition_b: bool,
    pub pass: bool,
}

pub fn check_stepsize_condition(k: &PaperConstants) -> StepsizeVerdict {
    let lhs_a = 4.0 * k.l3;
    let lhs_b = k.l1 * (1.0 + 2.0 * k.l4 * k.l4 + 8.0 * k.l4 * k.l4 * (2.0 * k.l2 * k.l2 + k.l3));
    let condition_a = lhs_a <= 0.25 * (1.0 + CONDITION_SLACK);
    let condition_b = lhs_b <= 1.0 + CONDITION_SLACK;
    StepsizeVerdict {
        lhs_a,
        lhs_b,
        condition_a,
        condition_b,
        pass: condition_a && condition_b,
    }
}

/// Counts of per-step bound violations in one trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundViolations {
    pub steps: usize,
    /// `‖ω_t‖ > U_ω`.
    pub omega: usize,
    /// `|δ_t| > U_δ` (checked only where `|η_t| ≤ U_r`).
    pub delta: usize,
    /// `‖θ_{t+1} − θ_t‖ > α G`.
    pub theta_step: usize,
}

impl BoundViolations {
    pub fn total(&self) -> usize {
        self.omega + self.delta + self.theta_step
    }
}

/// Checks the critic radius, TD-error bound and actor step bound on every
/// record of `trace`, with `U_δ = 2U_r + 2U_ω` and `G = U_δ B` built from
/// the radius the run actually used.
pub fn check_trace_bounds(trace: &Trace, u_r: f64, b_bound: f64) -> BoundViolations {
    let u_omega = trace.meta.u_omega;
    let u_delta = 2.0 * u_r + 2.0 * u_omega;
    let step_cap = trace.meta.steps.alpha * u_delta * b_bound;
    let slack = 1.0 + PROJECTION_SLACK;
    let mut v = BoundViolations {
        steps: trace.records.len(),
        ..Default::default()
    };
    for r in &trace.records {
        v.omega += usize::from(!(r.omega_norm <= u_omega * slack));
        if r.eta.abs() <= u_r {
            v.delta += usize::from(!(r.delta.abs() <= u_delta * slack));
        }
        v.theta_step += usize::from(!(r.theta_step_norm <= step_cap * slack));
    }
    let final_norm = trace.final_state.omega.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.omega += usize::from(!(final_norm <= u_omega * slack));
    v
}
