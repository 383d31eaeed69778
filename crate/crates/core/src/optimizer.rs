//! Derivative-free search over hard-stop surface parameters.
//!
//! [`optimize`] runs a coordinate pattern search from several starts on any
//! [`Objective`]. [`HardStopProblem`] is the objective of the surface design
//! problem: φ_hs against a primary safe space, minus a per-ray overshoot
//! penalty, with trajectory containment as a hard constraint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contact::{contact_boundary_field, ContactOptions, ContactScene};
use crate::error::{Error, Result};
use crate::field::{DirectionGrid, RadialBoundaryField};
use crate::geometry::{HardStopPair, SamplingOptions, TorusCapProfile};
use crate::ray::RaySearch;
use crate::spaces::{space_metrics, trajectory_containment, ContainmentReport, SpaceMetrics};
use crate::stress::{safe_boundary_field, StressModel};
use crate::trajectory::Trajectory;

/// Objective of a design violating a hard constraint.
pub const REJECTED: f64 = -1.0e6;
/// Objective of a design that cannot be built.
pub const INVALID: f64 = -1.0e9;

/// A bounded maximisation problem.
pub trait Objective {
    fn bounds(&self) -> Vec<(f64, f64)>;
    /// Preferred first start, if any.
    fn initial(&self) -> Option<Vec<f64>> {
        None
    }
    fn evaluate(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Evaluation budget per start.
    pub max_evals: usize,
    /// Random starts in addition to the initial point.
    pub random_starts: usize,
    pub seed: u64,
    /// Initial step as a fraction of each bound range.
    pub initial_step: f64,
    pub shrink: f64,
    /// Stop once every step is below this fraction of its range.
    pub min_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_evals: 200,
            random_starts: 2,
            seed: 0,
            initial_step: 0.1,
            shrink: 0.5,
            min_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub start: Vec<f64>,
    pub best: Vec<f64>,
    pub objective: f64,
    /// Incumbent objective after each accepted move, starting with the start.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: Vec<f64>,
    pub objective: f64,
    pub starts: Vec<StartTrace>,
}

fn clamp_to(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.clamp(lo, hi)
}

fn pattern_search(obj: &impl Objective, start: Vec<f64>, bounds: &[(f64, f64)], opts: &SearchOptions) -> StartTrace {
    let mut x = start.clone();
    let mut fx = obj.evaluate(&x);
    let mut evals = 1;
    let mut history = vec![fx];
    let mut steps: Vec<f64> = bounds.iter().map(|(lo, hi)| opts.initial_step * (hi - lo)).collect();
    'outer: loop {
        if steps
            .iter()
            .zip(bounds)
            .all(|(s, (lo, hi))| *s < opts.min_step * (hi - lo))
        {
            break;
        }
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                if evals >= opts.max_evals {
                    break 'outer;
                }
                let mut y = x.clone();
                y[k] = clamp_to(x[k] + dir * steps[k], bounds[k]);
                if y[k] == x[k] {
                    continue;
                }
                let fy = obj.evaluate(&y);
                evals += 1;
                if fy > fx {
                    x = y;
                    fx = fy;
                    history.push(fx);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= opts.shrink;
            }
        }
    }
    StartTrace {
        start,
        best: x,
        objective: fx,
        history,
        evaluations: evals,
    }
}

/// Multi-start coordinate pattern search. Deterministic for a given seed.
pub fn optimize(obj: &impl Objective, opts: &SearchOptions) -> Result<SearchResult> {
    let bounds = obj.bounds();
    if bounds.is_empty() {
        return Err(Error::OptimizationSetup("no design variables".into()));
    }
    if let Some((k, b)) = bounds
        .iter()
        .enumerate()
        .find(|(_, (lo, hi))| !(lo.is_finite() && hi.is_finite() && lo < hi))
    {
        return Err(Error::OptimizationSetup(format!("variable {k} has bad bounds {b:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = Vec::new();
    if let Some(x0) = obj.initial() {
        if x0.len() != bounds.len() {
            return Err(Error::OptimizationSetup("initial point has the wrong dimension".into()));
        }
        starts.push(x0.iter().zip(&bounds).map(|(x, b)| clamp_to(*x, *b)).collect());
    }
    for _ in 0..opts.random_starts {
        starts.push(
            bounds
                .iter()
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect::<Vec<f64>>(),
        );
    }
    if starts.is_empty() {
        return Err(Error::OptimizationSetup("no starting points".into()));
    }
    let traces: Vec<StartTrace> = starts
        .into_iter()
        .map(|s| pattern_search(obj, s, &bounds, opts))
        .collect();
    if traces.iter().all(|t| t.objective <= INVALID) {
        return Err(Error::OptimizationSetup("every start is geometrically invalid".into()));
    }
    let best = traces
        .iter()
        .fold(&traces[0], |b, t| if t.objective > b.objective { t } else { b });
    Ok(SearchResult {
        best: best.best.clone(),
        objective: best.objective,
        starts: traces,
    })
}

/// A surface parameter that the search may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignParam {
    StageDL,
    StageDS,
    StageRC,
    /// Degrees.
    StageThetaO,
    StageClip,
    GroundDL,
    GroundDS,
    GroundRC,
    /// Degrees.
    GroundThetaO,
    ZAb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignVariable {
    pub param: DesignParam,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy)]
struct ProfileParts {
    d_l: f64,
    d_s: f64,
    r_c: f64,
    theta_o_deg: f64,
    clip: Option<f64>,
}

impl ProfileParts {
    fn of(p: &TorusCapProfile) -> Self {
        Self {
            d_l: p.d_l(),
            d_s: p.d_s(),
            r_c: p.r_c(),
            theta_o_deg: p.theta_o().to_degrees(),
            clip: p.clip_diameter(),
        }
    }

    fn build(&self) -> Result<TorusCapProfile> {
        TorusCapProfile::from_degrees(self.d_l, self.d_s, self.r_c, self.theta_o_deg, self.clip)
    }
}

/// Current value of `param` in `pair` (external units).
pub fn param_value(pair: &HardStopPair, param: DesignParam) -> f64 {
    let (s, g) = (ProfileParts::of(&pair.stage), ProfileParts::of(&pair.ground));
    match param {
        DesignParam::StageDL => s.d_l,
        DesignParam::StageDS => s.d_s,
        DesignParam::StageRC => s.r_c,
        DesignParam::StageThetaO => s.theta_o_deg,
        DesignParam::StageClip => s.clip.unwrap_or(f64::NAN),
        DesignParam::GroundDL => g.d_l,
        DesignParam::GroundDS => g.d_s,
        DesignParam::GroundRC => g.r_c,
        DesignParam::GroundThetaO => g.theta_o_deg,
        DesignParam::ZAb => pair.z_ab,
    }
}

/// `base` with the listed parameters replaced by `x`.
pub fn apply_params(base: &HardStopPair, vars: &[DesignVariable], x: &[f64]) -> Result<HardStopPair> {
    let mut s = ProfileParts::of(&base.stage);
    let mut g = ProfileParts::of(&base.ground);
    let mut z_ab = base.z_ab;
    for (v, &val) in vars.iter().zip(x) {
        match v.param {
            DesignParam::StageDL => s.d_l = val,
            DesignParam::StageDS => s.d_s = val,
            DesignParam::StageRC => s.r_c = val,
            DesignParam::StageThetaO => s.theta_o_deg = val,
            DesignParam::StageClip => s.clip = Some(val),
            DesignParam::GroundDL => g.d_l = val,
            DesignParam::GroundDS => g.d_s = val,
            DesignParam::GroundRC => g.r_c = val,
            DesignParam::GroundThetaO => g.theta_o_deg = val,
            DesignParam::ZAb => z_ab = val,
        }
    }
    HardStopPair::new(s.build()?, g.build()?, z_ab, base.z_oa, base.z_lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRole {
    MustContainHs,
    Reference,
}

/// A stress model and threshold whose safe space is compared against Γ^hs.
#[derive(Debug, Clone)]
pub struct StressTarget {
    pub name: String,
    pub model: StressModel,
    pub sigma_cr: f64,
    pub role: TargetRole,
}

/// Σ over rays of max(r_hs − r_σ, 0) / r_σ.
pub fn overshoot_penalty(hs: &RadialBoundaryField, sigma: &RadialBoundaryField) -> f64 {
    hs.radii
        .iter()
        .zip(&sigma.radii)
        .map(|(h, s)| ((h - s) / s).max(0.0))
        .sum()
}

#[derive(Debug, Clone)]
pub struct HardStopProblem {
    pub base: HardStopPair,
    pub variables: Vec<DesignVariable>,
    pub targets: Vec<StressTarget>,
    /// Index into `targets` of the target whose φ_hs is maximised.
    pub primary: usize,
    pub trajectories: Vec<Trajectory>,
    pub penalty_weight: f64,
    pub delta_z: f64,
    pub search_grid: DirectionGrid,
    pub final_grid: DirectionGrid,
    pub search_sampling: SamplingOptions,
    pub final_sampling: SamplingOptions,
    pub contact: ContactOptions,
    pub stress_search: RaySearch,
    /// Containment tolerance on vol_unprotected / vol_sigma.
    pub containment_tol: f64,
    search_fields: Vec<RadialBoundaryField>,
}

/// Everything recomputed for one design on one grid.
#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub params: Vec<f64>,
    pub objective: f64,
    pub penalty: f64,
    pub metrics: Vec<(String, SpaceMetrics)>,
    pub trajectories: Vec<(String, ContainmentReport)>,
    pub feasible: bool,
}

impl HardStopProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        base: HardStopPair,
        variables: Vec<DesignVariable>,
        targets: Vec<StressTarget>,
        primary: usize,
        trajectories: Vec<Trajectory>,
        penalty_weight: f64,
        delta_z: f64,
        search_grid: DirectionGrid,
        final_grid: DirectionGrid,
    ) -> Result<Self> {
        if !targets.iter().any(|t| t.role == TargetRole::MustContainHs) {
            return Err(Error::OptimizationSetup("no must-contain-hs stress target".into()));
        }
        if primary >= targets.len() {
            return Err(Error::OptimizationSetup(format!(
                "primary target {primary} does not exist"
            )));
        }
        if !(penalty_weight > 0.0 && penalty_weight.is_finite()) {
            return Err(Error::OptimizationSetup("penalty weight must be positive".into()));
        }
        for v in &variables {
            if !(v.lo.is_finite() && v.hi.is_finite() && v.lo < v.hi) {
                return Err(Error::OptimizationSetup(format!(
                    "{:?} bounds [{}, {}] are not an interval",
                    v.param, v.lo, v.hi
                )));
            }
        }
        let mut p = Self {
            base,
            variables,
            targets,
            primary,
            trajectories,
            penalty_weight,
            delta_z,
            search_grid,
            final_grid,
            search_sampling: SamplingOptions {
                density: 16.0,
                min_points: 0,
            },
            final_sampling: SamplingOptions::default(),
            contact: ContactOptions::default(),
            stress_search: crate::stress::default_stress_search(),
            containment_tol: crate::spaces::CONTAINMENT_TOL,
            search_fields: Vec::new(),
        };
        p.search_fields = p.stress_fields(&search_grid)?;
        Ok(p)
    }

    /// Replaces the sampling used during the search.
    pub fn with_search_sampling(mut self, s: SamplingOptions) -> Self {
        self.search_sampling = s;
        self
    }

    pub fn with_final_sampling(mut self, s: SamplingOptions) -> Self {
        self.final_sampling = s;
        self
    }

    pub fn stress_fields(&self, grid: &DirectionGrid) -> Result<Vec<RadialBoundaryField>> {
        self.targets
            .iter()
            .map(|t| safe_boundary_field(&t.model, t.sigma_cr, grid, self.delta_z, &self.stress_search))
            .collect()
    }

    pub fn base_params(&self) -> Vec<f64> {
        self.variables
            .iter()
            .map(|v| param_value(&self.base, v.param))
            .collect()
    }

    pub fn pair_at(&self, x: &[f64]) -> Result<HardStopPair> {
        apply_params(&self.base, &self.variables, x)
    }

    fn hs_field(
        &self,
        pair: &HardStopPair,
        grid: &DirectionGrid,
        sampling: &SamplingOptions,
    ) -> Result<RadialBoundaryField> {
        let scene = ContactScene::sampled(pair, sampling)?;
        Ok(contact_boundary_field(&scene, grid, self.delta_z, &self.contact)?.0)
    }

    fn score(&self, x: &[f64], hs: &RadialBoundaryField, sigma: &[RadialBoundaryField]) -> Result<DesignReport> {
        let mut penalty = 0.0;
        let mut metrics = Vec::new();
        for (t, f) in self.targets.iter().zip(sigma) {
            if t.role == TargetRole::MustContainHs {
                penalty += overshoot_penalty(hs, f);
            }
            metrics.push((t.name.clone(), space_metrics(hs, f, self.containment_tol)?));
        }
        let trajectories: Vec<(String, ContainmentReport)> = self
            .trajectories
            .iter()
            .map(|t| (t.label.clone(), trajectory_containment(hs, t)))
            .collect();
        let traj_ok = trajectories.iter().all(|(_, r)| r.passed);
        let contained = self
            .targets
            .iter()
            .zip(&metrics)
            .all(|(t, (_, m))| t.role != TargetRole::MustContainHs || m.contained);
        let objective = if traj_ok {
            metrics[self.primary].1.phi_hs - self.penalty_weight * penalty
        } else {
            REJECTED
        };
        Ok(DesignReport {
            params: x.to_vec(),
            objective,
            penalty,
            metrics,
            trajectories,
            feasible: traj_ok && contained,
        })
    }

    /// Full evaluation on the search grid.
    pub fn report_search(&self, x: &[f64]) -> Result<DesignReport> {
        let pair = self.pair_at(x)?;
        let hs = self.hs_field(&pair, &self.search_grid, &self.search_sampling)?;
        self.score(x, &hs, &self.search_fields)
    }

    /// Recomputes everything from scratch on the final grid.
    pub fn report_final(&self, x: &[f64]) -> Result<DesignReport> {
        let pair = self.pair_at(x)?;
        let hs = self.hs_field(&pair, &self.final_grid, &self.final_sampling)?;
        let sigma = self.stress_fields(&self.final_grid)?;
        self.score(x, &hs, &sigma)
    }
}

impl Objective for HardStopProblem {
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.variables.iter().map(|v| (v.lo, v.hi)).collect()
    }

    fn initial(&self) -> Option<Vec<f64>> {
        Some(self.base_params())
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        match self.report_search(x) {
            Ok(r) => r.objective,
            Err(Error::InvalidGeometry(_)) | Err(Error::ZeroClearance { .. }) | Err(Error::InvalidInput(_)) => INVALID,
            Err(_) => REJECTED,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub variables: Vec<DesignVariable>,
    pub search: SearchResult,
    pub start: DesignReport,
    pub best: DesignReport,
    /// Objective of the best point recomputed on the search grid.
    pub recomputed_objective: f64,
}

/// Searches, then re-evaluates the start and the best point on the final grid.
pub fn optimize_design(problem: &HardStopProblem, opts: &SearchOptions) -> Result<OptimizationResult> {
    let search = optimize(problem, opts)?;
    let recomputed_objective = problem.evaluate(&search.best);
    Ok(OptimizationResult {
        variables: problem.variables.clone(),
        start: problem.report_final(&problem.base_params())?,
        best: problem.report_final(&search.best)?,
        recomputed_objective,
        search,
    })
}
