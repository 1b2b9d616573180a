//! The acceptance suite.
//!
//! Criteria 1–4 are exact-oracle and identity checks; 5–9 run the
//! convergence study (three sets of cells on one Garnet instance) and judge
//! trends, stability and determinism on it. [`Level::Fast`] shrinks the
//! study so the whole suite finishes in seconds; the thresholds are the same
//! at both levels.

use std::fmt;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use saclab_core::diagnostics::{bias_functionals, fit_rate, BiasContext, Observation};
use saclab_core::mdp::{generate_ergodic_garnet, two_state, GarnetSpec};
use saclab_core::nalgebra::{DMatrix, DVector};
use saclab_core::oracle::{self, FD_STEP};
use saclab_core::rng::SeededStreams;
use saclab_core::simulate::{run_iid, LearnerInit, RunConfig, StepSizes};
use saclab_core::{FeatureMap, FiniteMdp, OracleBundle, PolicyParams, SoftmaxPolicy};

use crate::config::LoadedConfig;
use crate::error::LabResult;
use crate::experiment::{build_instance, calibrate, run_cell, run_seed, window_start, CellResult, CellSpec, Instance};
use crate::format::trace_csv_bytes;

/// Residual tolerance of criteria 1 and 3.
pub const ORACLE_TOLERANCE: f64 = 1e-10;
/// Relative tolerance of the finite-difference gradient check.
pub const GRADIENT_RELATIVE_TOLERANCE: f64 = 1e-6;
/// Standard errors allowed between a Monte-Carlo mean and zero.
pub const UNBIASEDNESS_STDERRS: f64 = 4.0;

/// Garnet instance shared by criteria 4–9.
pub const STUDY_GARNET: GarnetSpec = GarnetSpec {
    n_states: 5,
    n_actions: 3,
    branching: 3,
    u_r: 1.0,
};
pub const STUDY_GARNET_SEED: u64 = 5;
/// Seed of the one-dimensional random feature map of criterion 7.
pub const STUDY_D1_FEATURE_SEED: u64 = 1;
pub const STUDY_MASTER_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

/// Scale of one verification level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scale {
    pub oracle_instances: usize,
    pub oracle_thetas: usize,
    pub gradient_pairs: usize,
    pub mc_draws: u64,
    pub mc_states: usize,
    pub seeds: usize,
    pub horizons: [u64; 3],
}

impl Level {
    pub fn scale(self) -> Scale {
        match self {
            Level::Full => Scale {
                oracle_instances: 20,
                oracle_thetas: 5,
                gradient_pairs: 10,
                mc_draws: 1_000_000,
                mc_states: 5,
                seeds: 32,
                horizons: [1 << 12, 1 << 14, 1 << 16],
            },
            Level::Fast => Scale {
                oracle_instances: 20,
                oracle_thetas: 5,
                gradient_pairs: 10,
                mc_draws: 100_000,
                mc_states: 5,
                seeds: 8,
                horizons: [1 << 10, 1 << 12, 1 << 14],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// Measured quantities in the order they were checked.
    pub measured: serde_json::Map<String, serde_json::Value>,
    /// The clauses that failed, empty on a pass.
    pub failures: Vec<String>,
}

impl CriterionOutcome {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            pass: true,
            measured: serde_json::Map::new(),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.measured
            .insert(key.into(), serde_json::to_value(value).expect("measurement serializes"));
    }

    fn require(&mut self, ok: bool, clause: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.failures.push(clause.into());
        }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} ({}): {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" }
        )?;
        let values: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if !values.is_empty() {
            write!(f, " [{}]", values.join(", "))?;
        }
        if !self.failures.is_empty() {
            write!(f, " failed: {}", self.failures.join("; "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub all_pass: bool,
    pub criteria: Vec<CriterionOutcome>,
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn random_theta(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> PolicyParams {
    PolicyParams::new((0..dim).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()).expect("finite entries")
}

/// Residuals of one oracle bundle: stationarity, Poisson equation, TD fixed
/// point, centering of `V` and `Σ_a π Q = V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResiduals {
    pub stationarity: f64,
    pub poisson: f64,
    pub td_fixed_point: f64,
    pub centering: f64,
    pub q_average: f64,
}

impl OracleResiduals {
    pub fn max(&self) -> f64 {
        max_abs([self.stationarity, self.poisson, self.td_fixed_point, self.centering, self.q_average])
    }

    pub fn compute(mdp: &FiniteMdp, bundle: &OracleBundle) -> Self {
        let n = mdp.n_states();
        let p = DMatrix::from_row_slice(n, n, bundle.chain.p_theta());
        let r = DVector::from_column_slice(bundle.chain.r_theta());
        let policy = SoftmaxPolicy::new(n, mdp.n_actions()).expect("shape checked by the oracle");
        let q_average = (0..n)
            .map(|s| {
                let probs = policy.action_probs(&bundle.theta, s).expect("shape checked");
                let avg: f64 = probs.iter().enumerate().map(|(a, pi)| pi * bundle.q[(s, a)]).sum();
                avg - bundle.v[s]
            })
            .fold(0.0f64, |m, x| m.max(x.abs()));
        Self {
            stationarity: (p.transpose() * &bundle.mu - &bundle.mu).amax(),
            poisson: (&r.add_scalar(-bundle.j) + &p * &bundle.v - &bundle.v).amax(),
            td_fixed_point: (&bundle.b_vec + &bundle.a_mat * &bundle.omega_star).amax(),
            centering: bundle.mu.dot(&bundle.v).abs(),
            q_average,
        }
    }
}

/// Criterion 1: oracle residuals on random Garnets with up to 10 states and
/// 4 actions.
pub fn oracle_self_consistency(scale: &Scale) -> LabResult<CriterionOutcome> {
    let mut out = CriterionOutcome::new(1, "oracle self-consistency");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = OracleResiduals {
        stationarity: 0.0,
        poisson: 0.0,
        td_fixed_point: 0.0,
        centering: 0.0,
        q_average: 0.0,
    };
    let mut evaluated = 0usize;
    let mut rejected = 0usize;
    let mut accepted = 0usize;
    let mut seed = 1000u64;
    while accepted < scale.oracle_instances {
        let n = rng.random_range(2..=10);
        let spec = GarnetSpec::new(n, rng.random_range(2..=4), rng.random_range(1..=n.min(4)));
        let (mdp, used) = generate_ergodic_garnet(&spec, seed, 200)?;
        seed = used + 1;
        let map = FeatureMap::centered_onehot(n)?;
        // A softmax policy has full support, so transient states (which
        // break the exploration assumption) show up already at θ = 0.
        if OracleBundle::compute(&mdp, &map, &PolicyParams::zeros(n * spec.n_actions)).is_err() {
            rejected += 1;
            continue;
        }
        accepted += 1;
        for _ in 0..scale.oracle_thetas {
            let theta = random_theta(&mut rng, n * spec.n_actions, 2.0);
            let b = OracleBundle::compute(&mdp, &map, &theta)?;
            let r = OracleResiduals::compute(&mdp, &b);
            worst = OracleResiduals {
                stationarity: worst.stationarity.max(r.stationarity),
                poisson: worst.poisson.max(r.poisson),
                td_fixed_point: worst.td_fixed_point.max(r.td_fixed_point),
                centering: worst.centering.max(r.centering),
                q_average: worst.q_average.max(r.q_average),
            };
            evaluated += 1;
        }
    }
    out.record("evaluations", evaluated);
    out.record("rejected_instances", rejected);
    out.record("stationarity", worst.stationarity);
    out.record("poisson", worst.poisson);
    out.record("td_fixed_point", worst.td_fixed_point);
    out.record("centering", worst.centering);
    out.record("q_average", worst.q_average);
    out.require(worst.max() <= ORACLE_TOLERANCE, format!("largest residual {:e} > {ORACLE_TOLERANCE:e}", worst.max()));
    Ok(out)
}

/// Central finite differences of the exact `J`, one coordinate at a time.
pub fn finite_difference_gradient(mdp: &FiniteMdp, theta: &PolicyParams, h: f64) -> LabResult<DVector<f64>> {
    let mut g = DVector::zeros(theta.len());
    let mut work = theta.as_slice().to_vec();
    for k in 0..theta.len() {
        let x = work[k];
        work[k] = x + h;
        let plus = oracle::average_reward_at(mdp, &PolicyParams::new(work.clone())?)?;
        work[k] = x - h;
        let minus = oracle::average_reward_at(mdp, &PolicyParams::new(work.clone())?)?;
        work[k] = x;
        g[k] = (plus - minus) / (2.0 * h);
    }
    Ok(g)
}

/// Criterion 2: exact gradient against finite differences, plus the M2
/// value at `θ = 0`.
pub fn exact_gradient(scale: &Scale) -> LabResult<CriterionOutcome> {
    let mut out = CriterionOutcome::new(2, "exact gradient");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_rel = 0.0f64;
    for i in 0..scale.gradient_pairs {
        let n = rng.random_range(2..=8);
        let spec = GarnetSpec::new(n, rng.random_range(2..=4), rng.random_range(1..=n.min(3)));
        let (mdp, _) = generate_ergodic_garnet(&spec, 2000 + i as u64, 200)?;
        let theta = random_theta(&mut rng, n * spec.n_actions, 1.0);
        let exact = oracle::exact_policy_gradient(&mdp, &theta)?;
        let fd = finite_difference_gradient(&mdp, &theta, FD_STEP)?;
        worst_rel = worst_rel.max((&exact - &fd).norm() / exact.norm());
    }
    let m2 = oracle::exact_policy_gradient(&two_state(), &PolicyParams::zeros(4))?;
    let m2_err = max_abs(m2.iter().zip([-0.1, 0.1, -0.1, 0.1]).map(|(g, e)| g - e));
    out.record("pairs", scale.gradient_pairs);
    out.record("max_relative_error", worst_rel);
    out.record("m2_error", m2_err);
    out.require(
        worst_rel <= GRADIENT_RELATIVE_TOLERANCE,
        format!("relative error {worst_rel:e} > {GRADIENT_RELATIVE_TOLERANCE:e}"),
    );
    out.require(m2_err <= ORACLE_TOLERANCE, format!("M2 gradient off by {m2_err:e}"));
    Ok(out)
}

/// Criterion 3: the two-state fixture at `θ = 0`.
pub fn worked_fixture() -> LabResult<CriterionOutcome> {
    let mut out = CriterionOutcome::new(3, "worked fixture");
    let mdp = two_state();
    let map = FeatureMap::two_state_scalar();
    let b = OracleBundle::compute(&mdp, &map, &PolicyParams::zeros(4))?;
    let checks = [
        ("J", b.j, 0.5),
        ("V0", b.v[0], -0.5),
        ("V1", b.v[1], 0.5),
        ("A", b.a_mat[(0, 0)], -1.0),
        ("b", b.b_vec[0], -0.5),
        ("omega_star", b.omega_star[0], -0.5),
        ("eps_app", b.eps_app_theta, 0.0),
        ("lambda", b.lambda_margin, 1.0),
    ];
    for (name, got, want) in checks {
        out.record(name, got);
        out.require((got - want).abs() <= ORACLE_TOLERANCE, format!("{name} = {got}, expected {want}"));
    }
    Ok(out)
}

/// Running mean and standard error.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn stderr(&self) -> f64 {
        let var = (self.sum_sq - self.sum * self.sum / self.n) / (self.n - 1.0);
        (var.max(0.0) / self.n).sqrt()
    }

    /// `|mean|` in units of the standard error; zero when both vanish.
    fn z_score(&self) -> f64 {
        let (m, se) = (self.mean(), self.stderr());
        if m.abs() <= 1e-15 {
            0.0
        } else {
            m.abs() / se
        }
    }
}

/// Monte-Carlo means of `Φ, Ψ, Θ, Ξ` at a frozen learner state. The
/// observations come from the i.i.d. runner with all step sizes zero, so the
/// check covers the runner's stationary sampling as well.
pub fn unbiasedness_z_scores(
    mdp: &FiniteMdp,
    map: &FeatureMap,
    init: &LearnerInit,
    draws: u64,
    run_key: &[u64],
) -> LabResult<[f64; 4]> {
    let bundle = OracleBundle::compute(mdp, map, &init.theta)?;
    let ctx = BiasContext::new(mdp, map, &bundle, true)?;
    let mut config = RunConfig::new(
        StepSizes {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            c: 1.0,
            t_total: draws,
        },
        f64::MAX,
    );
    config.checkpoint_every = draws;
    let trace = run_iid(mdp, map, init, &config, &mut SeededStreams::new(STUDY_MASTER_SEED, run_key))?;
    let mut moments = [Moments::default(); 4];
    for rec in &trace.records {
        let obs = Observation {
            s: rec.s,
            a: rec.a,
            s_next: rec.s_next,
        };
        let f = bias_functionals(mdp, map, obs, init.eta, &init.omega, &bundle, &ctx)?;
        let xi = f.xi_f.expect("context carries the Jacobian");
        for (m, x) in moments.iter_mut().zip([f.phi_f, f.psi_f, f.theta_f, xi]) {
            m.push(x);
        }
    }
    Ok(moments.map(|m| m.z_score()))
}

pub fn study_garnet() -> LabResult<FiniteMdp> {
    Ok(generate_ergodic_garnet(&STUDY_GARNET, STUDY_GARNET_SEED, 100)?.0)
}

/// Criterion 4: `E[Φ] = E[Ψ] = E[Θ] = E[Ξ] = 0` under stationary sampling.
pub fn iid_unbiasedness(scale: &Scale) -> LabResult<CriterionOutcome> {
    let mut out = CriterionOutcome::new(4, "iid unbiasedness");
    let garnet = study_garnet()?;
    let instances = [
        ("m2", two_state(), FeatureMap::two_state_scalar()),
        ("garnet", garnet, FeatureMap::centered_onehot(STUDY_GARNET.n_states)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 4];
    for (k, (label, mdp, map)) in instances.iter().enumerate() {
        let mut inst_worst = 0.0f64;
        for j in 0..scale.mc_states {
            let init = LearnerInit {
                theta: random_theta(&mut rng, mdp.n_states() * mdp.n_actions(), 1.0),
                omega: (0..map.dim()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect(),
                eta: 2.0 * rng.random::<f64>() - 1.0,
            };
            let z = unbiasedness_z_scores(mdp, map, &init, scale.mc_draws, &[4, k as u64, j as u64])?;
            for (w, x) in worst.iter_mut().zip(z) {
                *w = w.max(x);
            }
            inst_worst = inst_worst.max(max_abs(z));
        }
        out.record(format!("{label}_max_z"), inst_worst);
    }
    for (name, z) in ["phi", "psi", "theta", "xi"].iter().zip(worst) {
        out.record(format!("{name}_max_z"), z);
        out.require(z <= UNBIASEDNESS_STDERRS, format!("mean of {name} is {z:.2} standard errors from 0"));
    }
    out.record("draws_per_state", scale.mc_draws);
    Ok(out)
}

/// One set of cells of the convergence study.
#[derive(Debug, Clone)]
pub struct StudyArm {
    pub loaded: LoadedConfig,
    pub instance: Instance,
    pub cells: Vec<CellResult>,
}

impl StudyArm {
    pub fn run(loaded: LoadedConfig) -> LabResult<Self> {
        let instance = build_instance(&loaded)?;
        let calibration = calibrate(&instance, &loaded)?;
        let c = calibration.ratio(loaded.config.c);
        let mut cells = Vec::new();
        for &t in &loaded.config.horizons {
            let tau = window_start(&calibration.worst, t)?;
            let spec = CellSpec::from_config(&loaded, &calibration, t, c);
            cells.push(run_cell(&instance, &spec, tau, None)?);
        }
        Ok(Self { loaded, instance, cells })
    }

    fn means(&self, pick: fn(&saclab_core::diagnostics::WindowedMeans) -> f64) -> Vec<f64> {
        self.cells.iter().map(|c| c.means.map_or(f64::NAN, |m| pick(&m))).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.means(|m| m.y_mean)
    }

    pub fn z(&self) -> Vec<f64> {
        self.means(|m| m.z_mean)
    }

    pub fn g(&self) -> Vec<f64> {
        self.means(|m| m.g_mean)
    }

    /// Log-log slope of `G_T` against `T`.
    pub fn g_slope(&self) -> f64 {
        let pairs: Vec<(f64, f64)> = self
            .cells
            .iter()
            .zip(self.g())
            .map(|(c, g)| (c.spec.t_total as f64, g))
            .collect();
        fit_rate(&pairs).map_or(f64::NAN, |f| f.slope)
    }
}

/// Configuration of a study arm: the study Garnet, `c = auto`, uniform
/// initial state.
pub fn study_config(scale: &Scale, mode: &str, features: serde_json::Value) -> LabResult<LoadedConfig> {
    let doc = serde_json::json!({
        "name": format!("acceptance-{mode}"),
        "mdp": {
            "kind": "garnet",
            "n_states": STUDY_GARNET.n_states,
            "n_actions": STUDY_GARNET.n_actions,
            "branching": STUDY_GARNET.branching,
            "seed": STUDY_GARNET_SEED,
        },
        "features": features,
        "mode": mode,
        "horizons": scale.horizons,
        "c": "auto",
        "seeds": scale.seeds,
        "master_seed": STUDY_MASTER_SEED,
    });
    LoadedConfig::from_str_in(&doc.to_string(), PathBuf::new())
}

/// The three arms behind criteria 5–9.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub level: Level,
    pub iid: StudyArm,
    pub markovian: StudyArm,
    pub iid_d1: StudyArm,
}

impl ConvergenceStudy {
    pub fn run(level: Level) -> LabResult<Self> {
        let scale = level.scale();
        let centered = serde_json::json!({ "kind": "centered_onehot" });
        let d1 = serde_json::json!({ "kind": "random_bounded", "dim": 1, "seed": STUDY_D1_FEATURE_SEED });
        Ok(Self {
            level,
            iid: StudyArm::run(study_config(&scale, "iid", centered.clone())?)?,
            markovian: StudyArm::run(study_config(&scale, "markovian", centered)?)?,
            iid_d1: StudyArm::run(study_config(&scale, "iid", d1)?)?,
        })
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn trend_checks(out: &mut CriterionOutcome, arm: &StudyArm) {
    for (name, series) in [("Y_T", arm.y()), ("Z_T", arm.z()), ("G_T", arm.g())] {
        out.record(name, &series);
        out.require(strictly_decreasing(&series), format!("{name} does not strictly decrease"));
    }
}

/// Criterion 5: i.i.d. convergence trend with exact features.
pub fn iid_convergence(study: &ConvergenceStudy) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(5, "iid convergence trend");
    trend_checks(&mut out, &study.iid);
    let slope = study.iid.g_slope();
    out.record("G_T_slope", slope);
    out.require((-0.8..=-0.25).contains(&slope), format!("G_T slope {slope:.3} outside [-0.8, -0.25]"));
    out
}

/// Criterion 6: Markovian convergence trend with exact features.
pub fn markovian_convergence(study: &ConvergenceStudy) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(6, "markovian convergence trend");
    trend_checks(&mut out, &study.markovian);
    let slope = study.markovian.g_slope();
    out.record("G_T_slope", slope);
    out.require(slope <= -0.2, format!("G_T slope {slope:.3} > -0.2"));
    out
}

/// Criterion 7: the one-dimensional critic plateaus above the exact one.
pub fn approximation_floor(study: &ConvergenceStudy) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(7, "approximation-error floor");
    let exact = study.iid.z();
    let d1 = study.iid_d1.z();
    let gap = d1[2] / exact[2];
    let d1_ratio = d1[2] / d1[1];
    let exact_ratio = exact[2] / exact[1];
    out.record("Z_T_d1", &d1);
    out.record("floor_over_exact", gap);
    out.record("d1_last_ratio", d1_ratio);
    out.record("exact_last_ratio", exact_ratio);
    out.require(gap >= 5.0, format!("d=1 error only {gap:.3}x the exact one"));
    out.require(d1_ratio >= 0.5, format!("d=1 ratio {d1_ratio:.3} < 0.5 (no plateau)"));
    out.require(exact_ratio <= 0.5, format!("exact-feature ratio {exact_ratio:.3} > 0.5"));
    out
}

/// Criterion 8: no divergence and no bound violation at the threshold.
pub fn stability(study: &ConvergenceStudy) -> CriterionOutcome {
    let mut out = CriterionOutcome::new(8, "stability at threshold");
    let cells = study.iid.cells.iter().chain(&study.markovian.cells);
    let (mut diverged, mut violations, mut runs) = (0usize, 0usize, 0usize);
    for cell in cells {
        diverged += cell.diverged_seeds().len();
        violations += cell.total_violations().total();
        runs += cell.seeds.len();
    }
    out.record("runs", runs);
    out.record("diverged", diverged);
    out.record("violations", violations);
    out.require(diverged == 0, format!("{diverged} runs diverged"));
    out.require(violations == 0, format!("{violations} bound violations"));
    out
}

/// Criterion 9: rerunning the shortest i.i.d. cell reproduces every trace
/// byte for byte.
pub fn determinism(study: &ConvergenceStudy) -> LabResult<CriterionOutcome> {
    let mut out = CriterionOutcome::new(9, "determinism");
    let arm = &study.iid;
    let spec = &arm.cells[0].spec;
    let mut mismatched = 0usize;
    let mut bytes = 0usize;
    for k in 0..spec.seeds {
        let first = trace_csv_bytes(&run_seed(&arm.instance, spec, k)?)?;
        let second = trace_csv_bytes(&run_seed(&arm.instance, spec, k)?)?;
        bytes += first.len();
        if first != second {
            mismatched += 1;
        }
    }
    out.record("T", spec.t_total);
    out.record("seeds", spec.seeds);
    out.record("bytes_compared", bytes);
    out.record("mismatched", mismatched);
    out.require(mismatched == 0, format!("{mismatched} traces differ between runs"));
    Ok(out)
}

/// Runs all nine criteria. Errors raised while evaluating a criterion are
/// reported as that criterion's failure.
pub fn verify(level: Level) -> VerifyReport {
    let scale = level.scale();
    let mut criteria = Vec::with_capacity(9);
    let failed = |id, name, e: &dyn fmt::Display| {
        let mut o = CriterionOutcome::new(id, name);
        o.require(false, format!("error: {e}"));
        o
    };
    criteria.push(oracle_self_consistency(&scale).unwrap_or_else(|e| failed(1, "oracle self-consistency", &e)));
    criteria.push(exact_gradient(&scale).unwrap_or_else(|e| failed(2, "exact gradient", &e)));
    criteria.push(worked_fixture().unwrap_or_else(|e| failed(3, "worked fixture", &e)));
    criteria.push(iid_unbiasedness(&scale).unwrap_or_else(|e| failed(4, "iid unbiasedness", &e)));
    match ConvergenceStudy::run(level) {
        Ok(study) => {
            criteria.push(iid_convergence(&study));
            criteria.push(markovian_convergence(&study));
            criteria.push(approximation_floor(&study));
            criteria.push(stability(&study));
            criteria.push(determinism(&study).unwrap_or_else(|e| failed(9, "determinism", &e)));
        }
        Err(e) => {
            let names = [
                "iid convergence trend",
                "markovian convergence trend",
                "approximation-error floor",
                "stability at threshold",
                "determinism",
            ];
            for (id, name) in (5..=9).zip(names) {
                criteria.push(failed(id, name, &e));
            }
        }
    }
    VerifyReport {
        level,
        all_pass: criteria.iter().all(|c| c.pass),
        criteria,
    }
}
