//! Seeded runs, experiment cells and sweeps.
//!
//! A *cell* is one `(mode, T, c)` combination run over `seeds` independent
//! seeds. Seed `k` of horizon `T` draws its variates from
//! `SeededStreams::new(master_seed, &[T, k])`; `c` and the sampling mode are
//! deliberately left out of the run key so that cells differing only in those
//! see the same action and transition variates.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use saclab_core::diagnostics::{
    self, check_stepsize_condition, check_trace_bounds, error_trajectories, fit_rate, probe_smoothness,
    windowed_means, BoundViolations, ConstantInputs, ErrorTrajectories, PaperConstants, StepRatio,
    StepsizeVerdict, WindowedMeans, WorstCase,
};
use saclab_core::mdp::{generate_ergodic_garnet, two_state, GarnetSpec};
use saclab_core::oracle::{approximation_error, ApproximationError};
use saclab_core::policy::policy_constants;
use saclab_core::rng::SeededStreams;
use saclab_core::simulate::{
    mixing_time_tau, run_iid, run_markovian, stepsizes, InitialDistribution, LearnerInit, RunConfig, RunOutcome,
    SamplingMode, Trace,
};
use saclab_core::{Error as CoreError, FeatureMap, FiniteMdp, PolicyParams};

use crate::config::{FeatureSpec, LoadedConfig, MdpSource, StepRatioSetting};
use crate::error::{LabError, LabResult};
use crate::format::{
    self, checkpoints_json, gnuplot_data, gnuplot_script, write_bytes, write_json, ConstantsDocument,
    FeatureDocument, MdpDocument, MeansDocument, RateFitDocument, VerdictDocument,
};

/// Everything a run needs that does not depend on `T`, `c` or the seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: FiniteMdp,
    pub map: FeatureMap,
    pub init: LearnerInit,
    pub probes: Vec<PolicyParams>,
}

pub fn build_instance(loaded: &LoadedConfig) -> LabResult<Instance> {
    let cfg = &loaded.config;
    let mdp = match &cfg.mdp {
        MdpSource::TwoState => two_state(),
        MdpSource::Inline { transition, reward, u_r } => FiniteMdp::from_nested(transition, reward, *u_r)?,
        MdpSource::File { path } => format::read_json::<MdpDocument>(&loaded.resolve(path))?.to_mdp()?,
        MdpSource::Garnet {
            n_states,
            n_actions,
            branching,
            seed,
            u_r,
            max_attempts,
        } => {
            let spec = GarnetSpec {
                n_states: *n_states,
                n_actions: *n_actions,
                branching: *branching,
                u_r: *u_r,
            };
            generate_ergodic_garnet(&spec, *seed, *max_attempts)?.0
        }
    };
    mdp.check_valid()?;
    let n = mdp.n_states();
    let map = match &cfg.features {
        FeatureSpec::CenteredOnehot => FeatureMap::centered_onehot(n)?,
        FeatureSpec::Onehot => FeatureMap::onehot(n)?,
        FeatureSpec::RandomBounded { dim, seed } => FeatureMap::random_bounded(n, *dim, *seed)?,
        FeatureSpec::Inline { table } => FeatureMap::from_nested(table)?,
        FeatureSpec::File { path } => format::read_json::<FeatureDocument>(&loaded.resolve(path))?.to_map()?,
    };
    if map.n_states() != n {
        return Err(LabError::config(format!(
            "feature table has {} rows but the MDP has {n} states",
            map.n_states()
        )));
    }
    let mut init = LearnerInit::zeros(&mdp, &map);
    if let Some(theta) = &cfg.init.theta {
        init.theta = PolicyParams::new(theta.clone())?;
        if theta.len() != n * mdp.n_actions() {
            return Err(LabError::config(format!(
                "init.theta has {} entries, expected {}",
                theta.len(),
                n * mdp.n_actions()
            )));
        }
    }
    if let Some(omega) = &cfg.init.omega {
        if omega.len() != map.dim() {
            return Err(LabError::config(format!("init.omega has {} entries, expected {}", omega.len(), map.dim())));
        }
        init.omega = omega.clone();
    }
    init.eta = cfg.init.eta;
    let probes = probe_set(&init.theta, cfg.probes.count, cfg.probes.scale, cfg.probes.seed);
    Ok(Instance { mdp, map, init, probes })
}

/// `θ₀` followed by `count` parameters with entries uniform in
/// `[−scale, scale]`.
pub fn probe_set(theta0: &PolicyParams, count: usize, scale: f64, seed: u64) -> Vec<PolicyParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![theta0.clone()];
    for _ in 0..count {
        let v = (0..theta0.len()).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
        out.push(PolicyParams::new(v).expect("probe entries are finite"));
    }
    out
}

/// Instance constants shared by every cell of an experiment.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub worst: WorstCase,
    /// Constants bound to `c = c_threshold`.
    pub constants: PaperConstants,
    /// Critic radius used by the runs.
    pub u_omega: f64,
    pub eps_app: ApproximationError,
}

impl Calibration {
    pub fn ratio(&self, setting: StepRatioSetting) -> f64 {
        match setting {
            StepRatioSetting::Auto => self.constants.c_threshold,
            StepRatioSetting::Fixed(c) => c,
        }
    }

    pub fn bound_to(&self, c: f64) -> (PaperConstants, StepsizeVerdict) {
        let k = self.constants.with_ratio(c);
        (k, check_stepsize_condition(&k))
    }
}

pub fn calibrate(instance: &Instance, loaded: &LoadedConfig) -> LabResult<Calibration> {
    let cfg = &loaded.config;
    let Instance { mdp, map, probes, .. } = instance;
    let worst = diagnostics::worst_case_over(mdp, map, probes, cfg.tolerances.mixing_tau_max)?;
    let mut constants = PaperConstants::from_inputs(
        &ConstantInputs {
            u_r: mdp.u_r(),
            n_actions: mdp.n_actions(),
            policy: policy_constants(mdp.n_states(), mdp.n_actions()),
            lambda: worst.lambda,
            m: worst.m,
            rho: worst.rho,
        },
        StepRatio::Auto,
    )?;
    if probes.len() >= 2 {
        constants.probe = Some(probe_smoothness(mdp, map, probes)?);
    }
    let eps_app = approximation_error(mdp, map, probes)?;
    Ok(Calibration {
        worst,
        u_omega: cfg.u_omega.unwrap_or(constants.u_omega),
        constants,
        eps_app,
    })
}

/// One `(mode, T, c)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub mode: SamplingMode,
    pub t_total: u64,
    pub c: f64,
    pub seeds: usize,
    pub master_seed: u64,
    pub checkpoint_every: u64,
    pub u_omega: f64,
    pub initial: InitialDistribution,
    pub mu_refresh_every: u64,
    pub config_hash: String,
}

impl CellSpec {
    pub fn from_config(loaded: &LoadedConfig, calibration: &Calibration, t_total: u64, c: f64) -> Self {
        let cfg = &loaded.config;
        Self {
            mode: cfg.mode.into(),
            t_total,
            c,
            seeds: cfg.seeds,
            master_seed: cfg.master_seed,
            checkpoint_every: cfg.checkpoint_every_for(t_total),
            u_omega: calibration.u_omega,
            initial: (&cfg.initial_state).into(),
            mu_refresh_every: cfg.mu_refresh_every,
            config_hash: loaded.hash.clone(),
        }
    }
}

/// Runs seed `seed_index` of a cell.
pub fn run_seed(instance: &Instance, spec: &CellSpec, seed_index: usize) -> LabResult<Trace> {
    let config = RunConfig {
        steps: stepsizes(spec.t_total, spec.c)?,
        u_omega: spec.u_omega,
        checkpoint_every: spec.checkpoint_every,
        initial: spec.initial.clone(),
        mu_refresh_every: spec.mu_refresh_every,
        seed: spec.master_seed,
        config_hash: spec.config_hash.clone(),
    };
    let mut streams = SeededStreams::new(spec.master_seed, &[spec.t_total, seed_index as u64]);
    let Instance { mdp, map, init, .. } = instance;
    let trace = match spec.mode {
        SamplingMode::Markovian => run_markovian(mdp, map, init, &config, &mut streams)?,
        SamplingMode::Iid => run_iid(mdp, map, init, &config, &mut streams)?,
    };
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed_index: usize,
    pub diverged_at: Option<u64>,
    /// Set when the run was left out of the aggregates.
    pub excluded: Option<String>,
    pub violations: BoundViolations,
    pub target_outside_ball: bool,
    pub errors: Option<ErrorTrajectories>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub spec: CellSpec,
    pub tau: u64,
    pub means: Option<WindowedMeans>,
    pub seeds: Vec<SeedSummary>,
}

impl CellResult {
    pub fn diverged_seeds(&self) -> Vec<usize> {
        self.seeds.iter().filter(|s| s.diverged_at.is_some()).map(|s| s.seed_index).collect()
    }

    pub fn total_violations(&self) -> BoundViolations {
        self.seeds.iter().fold(BoundViolations::default(), |acc, s| BoundViolations {
            steps: acc.steps + s.violations.steps,
            omega: acc.omega + s.violations.omega,
            delta: acc.delta + s.violations.delta,
            theta_step: acc.theta_step + s.violations.theta_step,
        })
    }
}

/// `τ_T` for the worst-case mixing constants, checked against `T ≥ 2τ_T`.
pub fn window_start(worst: &WorstCase, t_total: u64) -> LabResult<u64> {
    let tau = mixing_time_tau(worst.m, worst.rho, t_total)?;
    if t_total < 2 * tau {
        return Err(LabError::config(format!(
            "horizon T = {t_total} is shorter than 2·τ_T = {} for m = {}, rho = {}",
            2 * tau,
            worst.m,
            worst.rho
        )));
    }
    Ok(tau)
}

/// Runs every seed of a cell. With `sink`, each seed's trace CSV and
/// checkpoint JSON are written under `sink/seed_<k>/`.
pub fn run_cell(instance: &Instance, spec: &CellSpec, tau: u64, sink: Option<&Path>) -> LabResult<CellResult> {
    let seeds: Vec<SeedSummary> = (0..spec.seeds)
        .into_par_iter()
        .map(|k| -> LabResult<SeedSummary> {
            let trace = run_seed(instance, spec, k)?;
            if let Some(dir) = sink {
                let dir = dir.join(seed_dir_name(k));
                write_bytes(&dir.join("trace.csv"), &format::trace_csv_bytes(&trace)?)?;
                write_json(&dir.join("checkpoints.json"), &checkpoints_json(&trace.checkpoints))?;
            }
            let violations = check_trace_bounds(&trace, instance.mdp.u_r(), policy_constants(0, 0).b_bound);
            let diverged_at = match trace.outcome {
                RunOutcome::Diverged { step } => Some(step),
                RunOutcome::Completed => None,
            };
            let (errors, excluded) = if diverged_at.is_some() {
                (None, Some("diverged".to_owned()))
            } else {
                match error_trajectories(&trace, &instance.mdp, &instance.map) {
                    Ok(e) => (Some(e), None),
                    Err(e @ (CoreError::NonErgodic(_) | CoreError::AssumptionOneViolated(_))) => {
                        (None, Some(e.to_string()))
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            Ok(SeedSummary {
                seed_index: k,
                diverged_at,
                excluded,
                violations,
                target_outside_ball: errors.as_ref().is_some_and(ErrorTrajectories::any_target_outside_ball),
                errors,
            })
        })
        .collect::<LabResult<_>>()?;
    let kept: Vec<ErrorTrajectories> = seeds.iter().filter_map(|s| s.errors.clone()).collect();
    let means = if kept.is_empty() {
        None
    } else {
        Some(windowed_means(&kept, tau, spec.t_total)?)
    };
    Ok(CellResult {
        spec: spec.clone(),
        tau,
        means,
        seeds,
    })
}

pub fn seed_dir_name(k: usize) -> String {
    format!("seed_{k:03}")
}

pub fn horizon_dir_name(t: u64) -> String {
    format!("T_{t}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub config_hash: String,
    pub c_setting: String,
    pub constants: ConstantsDocument,
    /// Critic radius the runs use.
    pub u_omega_run: f64,
    /// Maximum of the per-probe approximation errors (a lower estimate of
    /// the supremum over all parameters).
    pub eps_app_lower_estimate: f64,
    pub n_probes: usize,
}

pub fn constants_report(loaded: &LoadedConfig, calibration: &Calibration, setting: StepRatioSetting) -> ConstantsReport {
    let (k, verdict) = calibration.bound_to(calibration.ratio(setting));
    ConstantsReport {
        config_hash: loaded.hash.clone(),
        c_setting: setting.label(),
        constants: ConstantsDocument::new(&k, verdict),
        u_omega_run: calibration.u_omega,
        eps_app_lower_estimate: calibration.eps_app.lower_estimate,
        n_probes: calibration.eps_app.per_probe.len(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedSeed {
    pub seed: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub config_hash: String,
    pub mode: &'static str,
    pub c: f64,
    #[serde(flatten)]
    pub means: Option<MeansDocument>,
    pub tau: u64,
    pub checkpoint_every: u64,
    pub diverged_seeds: Vec<usize>,
    pub excluded_seeds: Vec<ExcludedSeed>,
    pub runs_with_target_outside_ball: usize,
    pub bound_violations: ViolationsDocument,
    pub constants: ConstantsDocument,
    pub verdict: VerdictDocument,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViolationsDocument {
    pub steps: usize,
    pub omega: usize,
    pub delta: usize,
    pub theta_step: usize,
}

impl From<BoundViolations> for ViolationsDocument {
    fn from(v: BoundViolations) -> Self {
        Self {
            steps: v.steps,
            omega: v.omega,
            delta: v.delta,
            theta_step: v.theta_step,
        }
    }
}

fn metrics_report(cell: &CellResult, k: &PaperConstants, verdict: StepsizeVerdict) -> MetricsReport {
    MetricsReport {
        config_hash: cell.spec.config_hash.clone(),
        mode: cell.spec.mode.as_str(),
        c: cell.spec.c,
        means: cell.means.map(MeansDocument::from),
        tau: cell.tau,
        checkpoint_every: cell.spec.checkpoint_every,
        diverged_seeds: cell.diverged_seeds(),
        excluded_seeds: cell
            .seeds
            .iter()
            .filter_map(|s| s.excluded.clone().map(|reason| ExcludedSeed { seed: s.seed_index, reason }))
            .collect(),
        runs_with_target_outside_ball: cell.seeds.iter().filter(|s| s.target_outside_ball).count(),
        bound_violations: cell.total_violations().into(),
        constants: ConstantsDocument::new(k, verdict),
        verdict: verdict.into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFitReport {
    pub config_hash: String,
    pub horizons: Vec<u64>,
    #[serde(rename = "Y_T")]
    pub y: Option<RateFitDocument>,
    #[serde(rename = "Z_T")]
    pub z: Option<RateFitDocument>,
    #[serde(rename = "G_T")]
    pub g: Option<RateFitDocument>,
}

/// Log-log fits over the cells' means; `None` when fewer than three cells
/// have a positive mean.
pub fn rate_fits(config_hash: &str, cells: &[CellResult]) -> RateFitReport {
    let fit = |pick: fn(&WindowedMeans) -> f64| {
        let pairs: Vec<(f64, f64)> = cells
            .iter()
            .filter_map(|c| c.means.map(|m| (c.spec.t_total as f64, pick(&m))))
            .collect();
        fit_rate(&pairs).ok().map(RateFitDocument::from)
    };
    RateFitReport {
        config_hash: config_hash.to_owned(),
        horizons: cells.iter().map(|c| c.spec.t_total).collect(),
        y: fit(|m| m.y_mean),
        z: fit(|m| m.z_mean),
        g: fit(|m| m.g_mean),
    }
}

fn write_errors_csv(path: &Path, cell: &CellResult) -> LabResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "t", "y", "z_norm_sq", "grad_norm_sq", "lambda", "target_outside_ball"])?;
    for s in &cell.seeds {
        if let Some(e) = &s.errors {
            for k in 0..e.len() {
                w.write_record([
                    s.seed_index.to_string(),
                    e.t[k].to_string(),
                    e.y[k].to_string(),
                    e.z_norm_sq[k].to_string(),
                    e.grad_norm_sq[k].to_string(),
                    e.lambda[k].to_string(),
                    e.target_outside_ball[k].to_string(),
                ])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| LabError::io(path, e.into_error()))?;
    write_bytes(path, &bytes)
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub calibration: Calibration,
    pub cells: Vec<CellResult>,
    pub rate_fit: RateFitReport,
}

/// Runs every horizon of the configuration at ratio `c` and writes:
///
/// ```text
/// constants.json  rate_fit.json  rates.dat  rates.gp
/// T_<T>/metrics.json  T_<T>/errors.csv
/// T_<T>/seed_<k>/trace.csv  T_<T>/seed_<k>/checkpoints.json
/// ```
///
/// A diverged seed is reported as [`LabError::Diverged`] after every file
/// has been written.
pub fn run_experiment(loaded: &LoadedConfig, out_dir: &Path) -> LabResult<ExperimentReport> {
    let instance = build_instance(loaded)?;
    let calibration = calibrate(&instance, loaded)?;
    let setting = loaded.config.c;
    let c = calibration.ratio(setting);
    let (k, verdict) = calibration.bound_to(c);

    let taus = loaded
        .config
        .horizons
        .iter()
        .map(|&t| window_start(&calibration.worst, t))
        .collect::<LabResult<Vec<_>>>()?;

    write_json(&out_dir.join("constants.json"), &constants_report(loaded, &calibration, setting))?;

    let mut cells = Vec::new();
    for (&t, &tau) in loaded.config.horizons.iter().zip(&taus) {
        let spec = CellSpec::from_config(loaded, &calibration, t, c);
        let dir = out_dir.join(horizon_dir_name(t));
        let cell = run_cell(&instance, &spec, tau, Some(&dir))?;
        write_json(&dir.join("metrics.json"), &metrics_report(&cell, &k, verdict))?;
        write_errors_csv(&dir.join("errors.csv"), &cell)?;
        cells.push(cell);
    }

    let rate_fit = rate_fits(&loaded.hash, &cells);
    write_json(&out_dir.join("rate_fit.json"), &rate_fit)?;
    let rows: Vec<MeansDocument> = cells.iter().filter_map(|c| c.means.map(MeansDocument::from)).collect();
    write_bytes(&out_dir.join("rates.dat"), gnuplot_data(&rows).as_bytes())?;
    let title = if loaded.config.name.is_empty() { "saclab" } else { &loaded.config.name };
    write_bytes(&out_dir.join("rates.gp"), gnuplot_script("rates.dat", title).as_bytes())?;

    let diverged: Vec<String> = cells
        .iter()
        .filter(|c| !c.diverged_seeds().is_empty())
        .map(|c| format!("T = {}: seeds {:?}", c.spec.t_total, c.diverged_seeds()))
        .collect();
    if !diverged.is_empty() {
        return Err(LabError::Diverged(format!(
            "non-finite iterates ({}); partial diagnostics written to {}",
            diverged.join("; "),
            out_dir.display()
        )));
    }
    Ok(ExperimentReport {
        out_dir: out_dir.to_path_buf(),
        calibration,
        cells,
        rate_fit,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    #[serde(rename = "T")]
    pub t_total: u64,
    pub c_setting: String,
    pub c: f64,
    pub verdict: VerdictDocument,
    pub condition_fail: bool,
    pub means: Option<MeansDocument>,
    pub diverged_seeds: Vec<usize>,
    pub any_diverged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub mode: &'static str,
    pub c_threshold: f64,
    pub cells: Vec<SweepCell>,
}

/// Runs the `horizons × c_values` grid and writes `sweep.json`. A failing
/// cell is recorded with its error and the sweep carries on.
pub fn sweep(loaded: &LoadedConfig, out_dir: &Path) -> LabResult<SweepReport> {
    let instance = build_instance(loaded)?;
    let calibration = calibrate(&instance, loaded)?;
    let grid: Vec<(u64, StepRatioSetting)> = loaded
        .config
        .horizons
        .iter()
        .flat_map(|&t| loaded.config.ratio_grid().into_iter().map(move |c| (t, c)))
        .collect();
    let cells: Vec<SweepCell> = grid
        .par_iter()
        .map(|&(t, setting)| {
            let c = calibration.ratio(setting);
            let (_, verdict) = calibration.bound_to(c);
            let outcome = window_start(&calibration.worst, t).and_then(|tau| {
                let spec = CellSpec::from_config(loaded, &calibration, t, c);
                run_cell(&instance, &spec, tau, None)
            });
            let (means, diverged_seeds, error) = match outcome {
                Ok(cell) => (cell.means.map(MeansDocument::from), cell.diverged_seeds(), None),
                Err(e) => (None, Vec::new(), Some(e.to_string())),
            };
            SweepCell {
                t_total: t,
                c_setting: setting.label(),
                c,
                verdict: verdict.into(),
                condition_fail: !verdict.pass,
                means,
                any_diverged: !diverged_seeds.is_empty(),
                diverged_seeds,
                error,
            }
        })
        .collect();
    let report = SweepReport {
        config_hash: loaded.hash.clone(),
        mode: SamplingMode::from(loaded.config.mode).as_str(),
        c_threshold: calibration.constants.c_threshold,
        cells,
    };
    write_json(&out_dir.join("sweep.json"), &report)?;
    Ok(report)
}
