//! Seeded sweeps over resonance and cutoff: definiteness certificates,
//! threshold searches, decay studies and gradient checks.
//!
//! Every random draw comes from a SplitMix64 substream keyed by
//! `(seed, index)`, so results do not depend on how rayon schedules work.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{simulate, Method, StepConfig};
use crate::lyapunov::{
    certify, definiteness_threshold, grad_v, v_nonlinear, CertificateReport, LogCoshLyapunov,
    MatrixFamily, DEFAULT_VERDICT_TOL,
};
use crate::matrix::{norm2, Vec4};
use crate::model::{FilterParams, ScaledState, State};

pub const SCHEMA_VERSION: u32 = 1;
/// Half-width of the box initial states are drawn from.
pub const STATE_RANGE: f64 = 5.0;
/// Acceptance bound on the gradient check.
pub const GRADCHECK_TOL: f64 = 1e-5;
/// Resolution of threshold bisections, in `r`.
pub const THRESHOLD_TOL: f64 = 1e-12;

const STREAM_MIX: u64 = 0xA076_1D64_78BD_642F;

/// Independent generator for work item `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> SplitMix64 {
    let mixed = seed ^ STREAM_MIX.wrapping_mul(index.wrapping_add(1));
    SplitMix64::seed_from_u64(SplitMix64::seed_from_u64(mixed).next_u64())
}

/// State with components uniform in `[-5, 5]`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> State {
    State(std::array::from_fn(|_| rng.random_range(-STATE_RANGE..=STATE_RANGE)))
}

/// Per-step `V` tolerance used when a spec does not set one.
pub fn default_v_tolerance(method: Method) -> f64 {
    match method {
        Method::DiscreteGradient => 1e-10,
        Method::ExplicitRk4 => 1e-9,
    }
}

fn default_method() -> Method {
    Method::DiscreteGradient
}

fn default_omega0_dt() -> f64 {
    0.5
}

fn default_steps() -> usize {
    200
}

/// Sweep description, normally read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub r: Vec<f64>,
    pub omega0: Vec<f64>,
    pub families: Vec<MatrixFamily>,
    pub seed: u64,
    pub samples_per_point: usize,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Step size as a multiple of `1/ω₀`.
    #[serde(default = "default_omega0_dt")]
    pub omega0_dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_tolerance: Option<f64>,
}

fn spec_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Spec {
        path: path.into(),
        message: message.into(),
    }
}

fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool, expected: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(spec_err(name, "grid must not be empty"));
    }
    for (i, &v) in grid.iter().enumerate() {
        if !(v.is_finite() && ok(v)) {
            return Err(spec_err(format!("{name}[{i}]"), format!("{v} is out of range ({expected})")));
        }
        if i > 0 && v <= grid[i - 1] {
            return Err(spec_err(format!("{name}[{i}]"), "grid must be strictly ascending"));
        }
    }
    Ok(())
}

impl SweepSpec {
    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: SweepSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            spec_err(if path == "." { "$".to_string() } else { path }, e.inner().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("r", &self.r, |v| (0.0..=1.0).contains(&v), "0 <= r <= 1")?;
        check_grid("omega0", &self.omega0, |v| v > 0.0, "omega0 > 0")?;
        for (i, f) in self.families.iter().enumerate() {
            if self.families[..i].contains(f) {
                return Err(spec_err(format!("families[{i}]"), format!("duplicate family {f}")));
            }
        }
        if self.families.contains(&MatrixFamily::QsWorstCase) && self.r[0] == 0.0 {
            return Err(spec_err("r[0]", "QsWorstCase is undefined at r = 0"));
        }
        if self.samples_per_point == 0 {
            return Err(spec_err("samples_per_point", "must be at least 1"));
        }
        if !(self.omega0_dt.is_finite() && self.omega0_dt > 0.0) {
            return Err(spec_err("omega0_dt", "must be a positive number"));
        }
        if self.steps == 0 {
            return Err(spec_err("steps", "must be at least 1"));
        }
        if let Some(t) = self.v_tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return Err(spec_err("v_tolerance", "must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.v_tolerance.unwrap_or_else(|| default_v_tolerance(self.method))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub omega0: f64,
    pub r: f64,
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    pub state_index: u64,
    pub x0: Vec4,
    /// `None` when the run failed or produced non-finite values.
    pub max_v_increase: Option<f64>,
    pub final_norm: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Bisected resonance at which a family stops being negative definite,
/// with the grid points that bracket it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub family: MatrixFamily,
    pub r_star: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub reports: Vec<CertificateReport>,
    pub trajectories: Vec<TrajectorySummary>,
    pub thresholds: Vec<ThresholdEstimate>,
}

impl SweepResult {
    fn empty() -> Self {
        SweepResult {
            schema_version: SCHEMA_VERSION,
            reports: Vec::new(),
            trajectories: Vec::new(),
            thresholds: Vec::new(),
        }
    }

    /// True when every trajectory met its tolerance.
    pub fn all_passed(&self) -> bool {
        self.trajectories.iter().all(|t| t.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep results are always serialisable")
    }
}

/// Certificates for one family over an `r × ω₀` grid (r-major) at verdict
/// tolerance `tol`, plus the bisected threshold if strict definiteness is
/// lost between two adjacent `r` points.
pub fn certify_grid(
    family: MatrixFamily,
    r: &[f64],
    omega0: &[f64],
    tol: f64,
) -> Result<(Vec<CertificateReport>, Option<ThresholdEstimate>)> {
    let points: Vec<(f64, f64)> = r
        .iter()
        .flat_map(|&r| omega0.iter().map(move |&w| (r, w)))
        .collect();
    let at = |r: f64, omega0: f64, e: Error| Error::AtGridPoint {
        family: family.to_string(),
        r,
        omega0,
        source: Box::new(e),
    };
    let reports = points
        .par_iter()
        .map(|&(r, omega0)| {
            FilterParams::new(omega0, r)
                .and_then(|p| certify(family, &p, tol))
                .map_err(|e| at(r, omega0, e))
        })
        .collect::<Result<Vec<_>>>()?;

    // normalised eigenvalues do not depend on ω₀, so the first column decides
    let column: Vec<&CertificateReport> = reports.iter().step_by(omega0.len().max(1)).collect();
    let definite = |rep: &CertificateReport| rep.max_eig < -DEFAULT_VERDICT_TOL;
    let threshold = match column.windows(2).find(|w| definite(w[0]) && !definite(w[1])) {
        Some(w) => {
            let (lo, hi) = (w[0].r, w[1].r);
            let r_star = definiteness_threshold(family, lo, hi, THRESHOLD_TOL)
                .map_err(|e| at(hi, omega0[0], e))?;
            Some(ThresholdEstimate { family, r_star, lo, hi })
        }
        None => None,
    };
    Ok((reports, threshold))
}

/// Certificates for every `(family, r, ω₀)` point, family-major, plus a
/// threshold for each family that stops being negative definite between
/// two adjacent `r` grid points.
pub fn run_definiteness_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut result = SweepResult::empty();
    for &family in &spec.families {
        let (reports, threshold) = certify_grid(family, &spec.r, &spec.omega0, DEFAULT_VERDICT_TOL)?;
        result.reports.extend(reports);
        result.thresholds.extend(threshold);
    }
    Ok(result)
}

fn summarize<V>(
    p: &FilterParams,
    cfg: &StepConfig,
    n_steps: usize,
    index: u64,
    x0: State,
    tolerance: f64,
    v: &V,
) -> TrajectorySummary
where
    V: Fn(&State) -> f64 + ?Sized,
{
    let mut summary = TrajectorySummary {
        omega0: p.omega0(),
        r: p.r(),
        method: cfg.method,
        dt: cfg.dt,
        steps: n_steps,
        state_index: index,
        x0: x0.0,
        max_v_increase: None,
        final_norm: None,
        tolerance,
        passed: false,
        error: None,
    };
    match simulate(&x0, p, cfg, n_steps) {
        Ok(traj) => {
            let values: Vec<f64> = traj.states.iter().map(v).collect();
            let max_inc = values
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, |acc, dv| if acc.is_nan() || dv.is_nan() { f64::NAN } else { acc.max(dv) });
            let final_norm = norm2(&traj.final_state().0);
            if max_inc.is_finite() && final_norm.is_finite() {
                summary.max_v_increase = Some(max_inc);
                summary.final_norm = Some(final_norm);
                summary.passed = max_inc <= tolerance;
            } else {
                summary.error = Some("non-finite state or Lyapunov value".into());
            }
        }
        Err(e) => summary.error = Some(e.to_string()),
    }
    summary
}

/// Simulates `n_states` seeded random initial states up to `t_end` and
/// checks that the log-cosh Lyapunov function never rises by more than the
/// method's default tolerance in a step.
pub fn run_decay_study(
    p: &FilterParams,
    seed: u64,
    n_states: usize,
    cfg: &StepConfig,
    t_end: f64,
) -> Result<SweepResult> {
    let energy = LogCoshLyapunov::new(p);
    let v = move |x: &State| energy.value_at_state(x);
    run_decay_study_with(p, seed, n_states, cfg, t_end, default_v_tolerance(cfg.method), &v)
}

/// [`run_decay_study`] with an explicit tolerance and Lyapunov candidate.
pub fn run_decay_study_with<V>(
    p: &FilterParams,
    seed: u64,
    n_states: usize,
    cfg: &StepConfig,
    t_end: f64,
    tolerance: f64,
    v: &V,
) -> Result<SweepResult>
where
    V: Fn(&State) -> f64 + Sync + ?Sized,
{
    if n_states == 0 {
        return Err(Error::Invalid("n_states must be at least 1".into()));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Range {
            field: "t_end",
            value: t_end,
            expected: "t_end > 0",
        });
    }
    cfg.validate()?;
    let n_steps = ((t_end / cfg.dt).ceil() as usize).max(1);
    let trajectories = (0..n_states as u64)
        .into_par_iter()
        .map(|k| {
            let x0 = random_state(&mut substream(seed, k));
            summarize(p, cfg, n_steps, k, x0, tolerance, v)
        })
        .collect();
    Ok(SweepResult {
        trajectories,
        ..SweepResult::empty()
    })
}

/// Certificates, thresholds and decay runs for a full spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let mut result = run_definiteness_sweep(spec)?;
    let tolerance = spec.tolerance();
    let samples = spec.samples_per_point as u64;
    let points: Vec<(f64, f64)> = spec
        .r
        .iter()
        .flat_map(|&r| spec.omega0.iter().map(move |&w| (r, w)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| (0..samples).map(move |k| (i, k)))
        .collect();
    result.trajectories = jobs
        .par_iter()
        .map(|&(i, k)| {
            let (r, omega0) = points[i];
            let p = FilterParams::new(omega0, r)?;
            let cfg = StepConfig::new(spec.omega0_dt / omega0, spec.method)?;
            let energy = LogCoshLyapunov::new(&p);
            let index = i as u64 * samples + k;
            let x0 = random_state(&mut substream(spec.seed, index));
            Ok(summarize(&p, &cfg, spec.steps, index, x0, tolerance, &|x: &State| {
                energy.value_at_state(x)
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(result)
}

/// Normwise relative error `‖a - b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &Vec4, b: &Vec4) -> f64 {
    let scale = norm2(a).max(norm2(b));
    if scale == 0.0 {
        return 0.0;
    }
    norm2(&std::array::from_fn(|i| a[i] - b[i])) / scale
}

/// Central differences of the log-cosh Lyapunov function in scaled
/// coordinates, step `1e-6·max(1, |wᵢ|)`.
pub fn finite_difference_gradient(w: &ScaledState, p: &FilterParams) -> Result<Vec4> {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        let h = 1e-6 * w.0[i].abs().max(1.0);
        let mut up = w.0;
        let mut dn = w.0;
        up[i] += h;
        dn[i] -= h;
        *o = (v_nonlinear(&ScaledState(up), p)? - v_nonlinear(&ScaledState(dn), p)?) / (up[i] - dn[i]);
    }
    Ok(out)
}

/// Seeded `(w, r)` sample for the gradient check; point 0 is the origin.
pub fn gradcheck_point(seed: u64, index: u64) -> (ScaledState, FilterParams) {
    let mut rng = substream(seed, index);
    // 1 - u maps [0, 1) onto (0, 1]
    let r = 1.0 - rng.random::<f64>();
    let w = if index == 0 {
        ScaledState::zero()
    } else {
        ScaledState(std::array::from_fn(|_| rng.random_range(-STATE_RANGE..=STATE_RANGE)))
    };
    let p = FilterParams::new(1.0, r).expect("sampled r lies in (0, 1]");
    (w, p)
}

/// Largest relative error between the analytic gradient and finite
/// differences over `n_points` seeded samples.
pub fn run_gradcheck(seed: u64, n_points: usize) -> Result<f64> {
    run_gradcheck_with(seed, n_points, |w, p| {
        grad_v(w, p).expect("gradcheck samples have r > 0")
    })
}

/// [`run_gradcheck`] against an arbitrary gradient implementation.
pub fn run_gradcheck_with<G>(seed: u64, n_points: usize, gradient: G) -> Result<f64>
where
    G: Fn(&ScaledState, &FilterParams) -> Vec4 + Sync,
{
    if n_points == 0 {
        return Err(Error::Invalid("n_points must be at least 1".into()));
    }
    let errors = (0..n_points as u64)
        .into_par_iter()
        .map(|k| {
            let (w, p) = gradcheck_point(seed, k);
            let fd = finite_difference_gradient(&w, &p)?;
            Ok(relative_error(&gradient(&w, &p), &fd))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors
        .into_iter()
        .fold(0.0, |acc, e| if acc.is_nan() || e.is_nan() { f64::NAN } else { acc.max(e) }))
}
