//! On-disk documents.
//!
//! * MDPs and feature tables are JSON with nested arrays
//!   (`transition[s][a][s′]`, `reward[s][a]`, `table[s][k]`).
//! * Traces are CSV with header `t,s,a,r,delta,eta,omega_norm`; floats are
//!   written in the shortest form that parses back to the same bits.
//! * Checkpoints are a JSON object keyed by the step index `t`.
//! * Everything else (oracle dumps, constants, metrics, rate fits) is pretty
//!   JSON with a trailing newline.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use saclab_core::diagnostics::{PaperConstants, RateFit, StepsizeVerdict, WindowedMeans};
use saclab_core::simulate::{Checkpoint, Trace};
use saclab_core::{FeatureMap, FiniteMdp, OracleBundle};

use crate::error::{LabError, LabResult};

pub const TRACE_HEADER: [&str; 7] = ["t", "s", "a", "r", "delta", "eta", "omega_norm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_actions: Option<usize>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub u_r: f64,
}

fn one() -> f64 {
    1.0
}

impl MdpDocument {
    pub fn from_mdp(mdp: &FiniteMdp) -> Self {
        Self {
            n_states: Some(mdp.n_states()),
            n_actions: Some(mdp.n_actions()),
            transition: mdp.transition_nested(),
            reward: mdp.reward_nested(),
            u_r: mdp.u_r(),
        }
    }

    /// Builds the MDP and rejects it unless every row is a distribution and
    /// every reward lies in `[−U_r, U_r]`.
    pub fn to_mdp(&self) -> LabResult<FiniteMdp> {
        let mdp = FiniteMdp::from_nested(&self.transition, &self.reward, self.u_r)?;
        let declared = (self.n_states.unwrap_or(mdp.n_states()), self.n_actions.unwrap_or(mdp.n_actions()));
        if declared != (mdp.n_states(), mdp.n_actions()) {
            return Err(LabError::config(format!(
                "MDP document declares {} states x {} actions but its tables are {} x {}",
                declared.0,
                declared.1,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        mdp.check_valid()?;
        Ok(mdp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDocument {
    pub table: Vec<Vec<f64>>,
}

impl FeatureDocument {
    pub fn from_map(map: &FeatureMap) -> Self {
        Self { table: map.nested() }
    }

    pub fn to_map(&self) -> LabResult<FeatureMap> {
        Ok(FeatureMap::from_nested(&self.table)?)
    }
}

/// One CSV row of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub delta: f64,
    pub eta: f64,
    pub omega_norm: f64,
}

pub fn write_trace_csv<W: Write>(out: W, trace: &Trace) -> LabResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in &trace.records {
        w.serialize(TraceRow {
            t: rec.t,
            s: rec.s,
            a: rec.a,
            r: rec.r,
            delta: rec.delta,
            eta: rec.eta,
            omega_norm: rec.omega_norm,
        })?;
    }
    if trace.records.is_empty() {
        w.write_record(TRACE_HEADER)?;
    }
    w.flush().map_err(|e| LabError::io("<trace>", e))?;
    Ok(())
}

pub fn trace_csv_bytes(trace: &Trace) -> LabResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace)?;
    Ok(buf)
}

pub fn read_trace_csv<R: Read>(input: R) -> LabResult<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(LabError::config(format!("unexpected trace header {header:?}")));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub eta: f64,
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Checkpoints as `{"<t>": {"eta": .., "omega": [..], "theta": [..]}, ..}` in
/// increasing `t`.
pub fn checkpoints_json(checkpoints: &[Checkpoint]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for cp in checkpoints {
        let entry = CheckpointEntry {
            eta: cp.eta,
            omega: cp.omega.clone(),
            theta: cp.theta.clone(),
        };
        map.insert(cp.t.to_string(), serde_json::to_value(entry).expect("checkpoint serializes"));
    }
    serde_json::Value::Object(map)
}

pub fn parse_checkpoints(value: &serde_json::Value) -> LabResult<Vec<Checkpoint>> {
    let obj = value
        .as_object()
        .ok_or_else(|| LabError::config("checkpoint document must be an object keyed by t"))?;
    let mut out = Vec::with_capacity(obj.len());
    for (key, v) in obj {
        let t: u64 = key
            .parse()
            .map_err(|_| LabError::config(format!("checkpoint key {key:?} is not a step index")))?;
        let e: CheckpointEntry =
            serde_json::from_value(v.clone()).map_err(|e| LabError::config(format!("checkpoint {t}: {e}")))?;
        out.push(Checkpoint {
            t,
            eta: e.eta,
            omega: e.omega,
            theta: e.theta,
        });
    }
    Ok(out)
}

/// Policy parameter file: a bare JSON array or `{"theta": [..]}`.
pub fn parse_theta(value: &serde_json::Value) -> LabResult<Vec<f64>> {
    let arr = match value {
        serde_json::Value::Object(o) => o.get("theta").cloned().unwrap_or(serde_json::Value::Null),
        other => other.clone(),
    };
    serde_json::from_value(arr).map_err(|e| LabError::config(format!("policy parameter file: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDocument {
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
    pub j: f64,
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub a_mat: Vec<Vec<f64>>,
    pub b_vec: Vec<f64>,
    pub omega_star: Vec<f64>,
    pub grad_j: Vec<f64>,
    pub lambda_margin: f64,
    pub eps_app_theta: f64,
    pub p_theta: Vec<Vec<f64>>,
    pub r_theta: Vec<f64>,
}

fn rows(m: &saclab_core::nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl OracleDocument {
    pub fn from_bundle(b: &OracleBundle) -> Self {
        let n = b.chain.n_states();
        Self {
            theta: b.theta.as_slice().to_vec(),
            mu: b.mu.as_slice().to_vec(),
            j: b.j,
            v: b.v.as_slice().to_vec(),
            q: rows(&b.q),
            a_mat: rows(&b.a_mat),
            b_vec: b.b_vec.as_slice().to_vec(),
            omega_star: b.omega_star.as_slice().to_vec(),
            grad_j: b.grad_j.as_slice().to_vec(),
            lambda_margin: b.lambda_margin,
            eps_app_theta: b.eps_app_theta,
            p_theta: b.chain.p_theta().chunks(n).map(<[f64]>::to_vec).collect(),
            r_theta: b.chain.r_theta().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub lhs_a: f64,
    pub lhs_b: f64,
    pub condition_a: bool,
    pub condition_b: bool,
    pub pass: bool,
}

impl From<StepsizeVerdict> for VerdictDocument {
    fn from(v: StepsizeVerdict) -> Self {
        Self {
            lhs_a: v.lhs_a,
            lhs_b: v.lhs_b,
            condition_a: v.condition_a,
            condition_b: v.condition_b,
            pass: v.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsDocument {
    pub u_r: f64,
    pub u_omega: f64,
    pub u_delta: f64,
    pub g_bound: f64,
    pub lambda: f64,
    pub m: f64,
    pub rho: f64,
    pub log_rho_term: f64,
    pub l_j: f64,
    pub l_star: f64,
    pub b_bound: f64,
    pub l_pi: f64,
    pub l_l: f64,
    pub c: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub c_threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_jprime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_mu: Option<f64>,
    pub verdict: VerdictDocument,
}

impl ConstantsDocument {
    pub fn new(k: &PaperConstants, verdict: StepsizeVerdict) -> Self {
        Self {
            u_r: k.u_r,
            u_omega: k.u_omega,
            u_delta: k.u_delta,
            g_bound: k.g_bound,
            lambda: k.lambda,
            m: k.m,
            rho: k.rho,
            log_rho_term: k.log_rho_term,
            l_j: k.l_j,
            l_star: k.l_star,
            b_bound: k.b_bound,
            l_pi: k.l_pi,
            l_l: k.l_l,
            c: k.c,
            l1: k.l1,
            l2: k.l2,
            l3: k.l3,
            l4: k.l4,
            c_threshold: k.c_threshold,
            l_jprime: k.probe.map(|p| p.l_jprime),
            l_s: k.probe.map(|p| p.l_s),
            l_mu: k.probe.map(|p| p.l_mu),
            verdict: verdict.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeansDocument {
    #[serde(rename = "T")]
    pub t_total: u64,
    pub tau: u64,
    #[serde(rename = "Y_T")]
    pub y: f64,
    #[serde(rename = "Z_T")]
    pub z: f64,
    #[serde(rename = "G_T")]
    pub g: f64,
    pub y_stderr: f64,
    pub z_stderr: f64,
    pub g_stderr: f64,
    pub n_seeds: usize,
    pub n_points: usize,
}

impl From<WindowedMeans> for MeansDocument {
    fn from(w: WindowedMeans) -> Self {
        Self {
            t_total: w.t_total,
            tau: w.tau,
            y: w.y_mean,
            z: w.z_mean,
            g: w.g_mean,
            y_stderr: w.y_stderr,
            z_stderr: w.z_stderr,
            g_stderr: w.g_stderr,
            n_seeds: w.n_seeds,
            n_points: w.n_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFitDocument {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl From<RateFit> for RateFitDocument {
    fn from(f: RateFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> LabResult<T> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> LabResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| LabError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

/// Whitespace-separated table for gnuplot:
/// `T Y_T Z_T G_T Y_stderr Z_stderr G_stderr`.
pub fn gnuplot_data(rows: &[MeansDocument]) -> String {
    let mut s = String::from("# T Y_T Z_T G_T Y_stderr Z_stderr G_stderr\n");
    for r in rows {
        s.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            r.t_total, r.y, r.z, r.g, r.y_stderr, r.z_stderr, r.g_stderr
        ));
    }
    s
}

/// Log-log plot of the three windowed means with error bars.
pub fn gnuplot_script(data_file: &str, title: &str) -> String {
    format!(
        "set terminal pngcairo size 900,600\n\
         set output 'rates.png'\n\
         set title '{title}'\n\
         set logscale xy\n\
         set xlabel 'T'\n\
         set ylabel 'windowed mean squared error'\n\
         set key top right\n\
         plot '{data_file}' using 1:2:5 with yerrorlines title 'Y_T', \\\n\
         \x20    '{data_file}' using 1:3:6 with yerrorlines title 'Z_T', \\\n\
         \x20    '{data_file}' using 1:4:7 with yerrorlines title 'G_T'\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use saclab_core::mdp::two_state;

    #[test]
    fn mdp_document_round_trip() {
        let mdp = two_state();
        let doc = MdpDocument::from_mdp(&mdp);
        let text = serde_json::to_string(&doc).unwrap();
        let back: MdpDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_mdp().unwrap(), mdp);
    }

    #[test]
    fn bad_mdp_rows_are_rejected() {
        let doc = MdpDocument {
            n_states: None,
            n_actions: None,
            transition: vec![vec![vec![0.5, 0.4]], vec![vec![0.5, 0.5]]],
            reward: vec![vec![0.0], vec![0.0]],
            u_r: 1.0,
        };
        let err = doc.to_mdp().unwrap_err();
        assert!(matches!(err, LabError::Core(saclab_core::Error::Parameter(_))));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn checkpoint_keys_stay_in_step_order() {
        let cps: Vec<Checkpoint> = [0u64, 16, 32, 128]
            .iter()
            .map(|&t| Checkpoint {
                t,
                eta: t as f64 * 0.1,
                omega: vec![0.5],
                theta: vec![0.0; 2],
            })
            .collect();
        let v = checkpoints_json(&cps);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["0", "16", "32", "128"]);
        assert_eq!(parse_checkpoints(&v).unwrap(), cps);
    }

    #[test]
    fn theta_file_shapes() {
        let bare: serde_json::Value = serde_json::from_str("[0.1, -2]").unwrap();
        let wrapped: serde_json::Value = serde_json::from_str(r#"{"theta": [0.1, -2]}"#).unwrap();
        assert_eq!(parse_theta(&bare).unwrap(), vec![0.1, -2.0]);
        assert_eq!(parse_theta(&wrapped).unwrap(), vec![0.1, -2.0]);
        assert!(parse_theta(&serde_json::json!({"x": 1})).is_err());
    }

    #[test]
    fn gnuplot_files_mention_every_column() {
        let row = MeansDocument {
            t_total: 4096,
            tau: 2,
            y: 0.1,
            z: 0.2,
            g: 0.3,
            y_stderr: 0.01,
            z_stderr: 0.02,
            g_stderr: 0.03,
            n_seeds: 2,
            n_points: 4094,
        };
        let data = gnuplot_data(&[row]);
        assert_eq!(data.lines().nth(1).unwrap(), "4096 0.1 0.2 0.3 0.01 0.02 0.03");
        let gp = gnuplot_script("rates.dat", "demo");
        assert!(gp.contains("1:4:7"));
    }
}
