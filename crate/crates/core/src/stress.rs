//! Stress response models σ^max = ℝ(δa, ϑa, θsep) and the safe stress
//! boundary Γ^σ.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Read;

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::field::{AxisScale, BoundaryLabel, DirectionGrid, PlanePoint, RadialBoundaryField};
use crate::geometry::{SixDofMotion, Vec3, WorkspaceVector};
use crate::ray::{first_crossing, RayHit, RayOutcome, RaySearch};

/// Columns of a tabulated stress grid.
/// (delta, theta, sigma, line) of one table row.
type Row = (f64, f64, f64, u64);

pub const TABULATED_HEADER: [&str; 4] = ["sep_deg", "delta_signed_mm", "theta_signed_deg", "sigma_mpa"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressThresholds {
    /// MPa.
    pub fatigue_limit: f64,
    /// MPa.
    pub yield_limit: f64,
}

impl Default for StressThresholds {
    fn default() -> Self {
        Self {
            fatigue_limit: 480.0,
            yield_limit: 880.0,
        }
    }
}

impl StressThresholds {
    pub fn new(fatigue_limit: f64, yield_limit: f64) -> Result<Self> {
        if !(fatigue_limit > 0.0 && fatigue_limit <= yield_limit && yield_limit.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "thresholds need 0 < fatigue ({fatigue_limit}) <= yield ({yield_limit})"
            )));
        }
        Ok(Self {
            fatigue_limit,
            yield_limit,
        })
    }
}

/// Clamped-root round beam whose tip is driven to a prescribed translation
/// and slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantileverBeam {
    /// mm.
    pub length: f64,
    /// MPa.
    pub modulus: f64,
    /// mm.
    pub diameter: f64,
    /// N, tension positive.
    pub axial_force: f64,
}

impl CantileverBeam {
    pub fn area(&self) -> f64 {
        PI * self.diameter.powi(2) / 4.0
    }

    pub fn second_moment(&self) -> f64 {
        PI * self.diameter.powi(4) / 64.0
    }

    /// Root and tip bending moment magnitudes, N·mm.
    pub fn moments(&self, w: &WorkspaceVector) -> (f64, f64) {
        let ei_l2 = self.modulus * self.second_moment() / self.length.powi(2);
        let l = self.length;
        let (s, c) = w.theta_sep.sin_cos();
        let (px, py) = (w.theta_a * c, w.theta_a * s);
        let d = w.delta_a;
        let root = (6.0 * d - 2.0 * l * px).hypot(-2.0 * l * py);
        let tip = (-6.0 * d + 4.0 * l * px).hypot(4.0 * l * py);
        (ei_l2 * root, ei_l2 * tip)
    }

    pub fn stress(&self, w: &WorkspaceVector) -> f64 {
        let (root, tip) = self.moments(w);
        self.axial_force / self.area() + root.max(tip) * (self.diameter / 2.0) / self.second_moment()
    }
}

/// One slice of a tabulated grid: σ on a rectangular (δ, ϑ) lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSlice {
    /// rad.
    pub sep: f64,
    /// Ascending signed δ nodes, mm.
    pub deltas: Vec<f64>,
    /// Ascending signed ϑ nodes, rad.
    pub thetas: Vec<f64>,
    /// Row-major `[delta][theta]`, MPa.
    pub sigma: Vec<f64>,
}

impl TabulatedSlice {
    fn contains(&self, delta: f64, theta: f64) -> bool {
        let (d0, d1) = (self.deltas[0], *self.deltas.last().unwrap());
        let (t0, t1) = (self.thetas[0], *self.thetas.last().unwrap());
        (d0..=d1).contains(&delta) && (t0..=t1).contains(&theta)
    }

    fn bilinear(&self, delta: f64, theta: f64) -> f64 {
        let (i, fx) = cell(&self.deltas, delta);
        let (j, fy) = cell(&self.thetas, theta);
        let n = self.thetas.len();
        let at = |a: usize, b: usize| self.sigma[a * n + b];
        let lo = at(i, j) * (1.0 - fy) + at(i, j + 1) * fy;
        let hi = at(i + 1, j) * (1.0 - fy) + at(i + 1, j + 1) * fy;
        lo * (1.0 - fx) + hi * fx
    }
}

/// Cell index and fractional position of `x` within sorted `nodes`.
fn cell(nodes: &[f64], x: f64) -> (usize, f64) {
    let i = nodes.partition_point(|&v| v <= x).clamp(1, nodes.len() - 1) - 1;
    let f = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (i, f.clamp(0.0, 1.0))
}

/// Preload conditions under which a tabulated grid was generated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TabulatedMeta {
    /// N.
    pub axial_force: Option<f64>,
    /// rad.
    pub theta_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedStress {
    /// Ascending in `sep`.
    pub slices: Vec<TabulatedSlice>,
    pub meta: TabulatedMeta,
}

impl TabulatedStress {
    /// Bracketing slices and the interpolation weight of the upper one.
    fn slices_at(&self, sep: f64) -> Option<(&TabulatedSlice, &TabulatedSlice, f64)> {
        const EPS: f64 = 1e-12;
        let first = self.slices.first()?;
        let last = self.slices.last()?;
        if sep < first.sep - EPS || sep > last.sep + EPS {
            return None;
        }
        if self.slices.len() == 1 {
            return Some((first, first, 0.0));
        }
        let k = self
            .slices
            .partition_point(|s| s.sep <= sep)
            .clamp(1, self.slices.len() - 1)
            - 1;
        let (a, b) = (&self.slices[k], &self.slices[k + 1]);
        Some((a, b, ((sep - a.sep) / (b.sep - a.sep)).clamp(0.0, 1.0)))
    }

    pub fn eval(&self, p: &PlanePoint) -> Result<f64> {
        let out = || Error::OutOfHull {
            sep_deg: p.sep.to_degrees(),
            delta_mm: p.delta,
            theta_deg: p.theta.to_degrees(),
        };
        let (a, b, t) = self.slices_at(p.sep).ok_or_else(out)?;
        if !a.contains(p.delta, p.theta) || (t > 0.0 && !b.contains(p.delta, p.theta)) {
            return Err(out());
        }
        let lo = a.bilinear(p.delta, p.theta);
        if t == 0.0 {
            return Ok(lo);
        }
        Ok(lo * (1.0 - t) + b.bilinear(p.delta, p.theta) * t)
    }

    /// Largest scaled radius along (sep, α) that stays inside the grid.
    pub fn hull_radius(&self, sep: f64, alpha: f64, scale: &AxisScale) -> f64 {
        let Some((a, b, t)) = self.slices_at(sep) else {
            return 0.0;
        };
        let (s, c) = alpha.sin_cos();
        let (dx, dy) = (c * scale.delta_ref, s * scale.theta_ref);
        let exit = |sl: &TabulatedSlice| {
            let lim = |v: f64, lo: f64, hi: f64| {
                if v > 0.0 {
                    hi / v
                } else if v < 0.0 {
                    lo / v
                } else {
                    f64::INFINITY
                }
            };
            let kd = lim(dx, sl.deltas[0], *sl.deltas.last().unwrap());
            let kt = lim(dy, sl.thetas[0], *sl.thetas.last().unwrap());
            kd.min(kt).max(0.0)
        };
        if t > 0.0 {
            exit(a).min(exit(b))
        } else {
            exit(a)
        }
    }

    /// Reads the four-column CSV grid. Angles in the file are degrees.
    pub fn read_csv<R: Read>(input: R, meta: TabulatedMeta) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != TABULATED_HEADER {
            return Err(Error::Format {
                line: Some(1),
                message: format!("expected header {}", TABULATED_HEADER.join(",")),
            });
        }
        // keyed by bit patterns so equal numbers group exactly
        let mut raw: BTreeMap<u64, (f64, Vec<Row>)> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line());
            let bad = |message: String| Error::Format { line, message };
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", rec.len())));
            }
            let mut v = [0.0; 4];
            for (k, field) in rec.iter().enumerate() {
                v[k] = field.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    bad(format!(
                        "column {} is not a finite number: {field:?}",
                        TABULATED_HEADER[k]
                    ))
                })?;
            }
            if !(0.0..=90.0).contains(&v[0]) {
                return Err(bad(format!("sep_deg {} outside [0, 90]", v[0])));
            }
            raw.entry((v[0] + 0.0).to_bits())
                .or_insert_with(|| (v[0], Vec::new()))
                .1
                .push((v[1], v[2], v[3], line.unwrap_or(0)));
        }
        if raw.is_empty() {
            return Err(Error::Format {
                line: None,
                message: "no data rows".into(),
            });
        }
        let mut slices = Vec::with_capacity(raw.len());
        for (sep_deg, rows) in raw.into_values() {
            slices.push(build_slice(sep_deg, rows)?);
        }
        slices.sort_by(|a, b| a.sep.total_cmp(&b.sep));
        Ok(Self { slices, meta })
    }
}

fn build_slice(sep_deg: f64, rows: Vec<Row>) -> Result<TabulatedSlice> {
    let axis = |pick: fn(&Row) -> f64| {
        let mut v: Vec<f64> = rows.iter().map(pick).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let deltas = axis(|r| r.0);
    let thetas_deg = axis(|r| r.1);
    if deltas.len() < 2 || thetas_deg.len() < 2 {
        return Err(Error::Format {
            line: rows.first().map(|r| r.3),
            message: format!("slice sep={sep_deg}° needs at least two delta and two theta nodes"),
        });
    }
    let n = thetas_deg.len();
    let mut sigma = vec![f64::NAN; deltas.len() * n];
    let mut seen: Vec<Option<u64>> = vec![None; sigma.len()];
    for (d, t, s, line) in &rows {
        let i = deltas.partition_point(|x| x < d);
        let j = thetas_deg.partition_point(|x| x < t);
        let k = i * n + j;
        if let Some(first) = seen[k] {
            return Err(Error::Format {
                line: Some(*line),
                message: format!("duplicate node (sep={sep_deg}, delta={d}, theta={t}), first given at line {first}"),
            });
        }
        seen[k] = Some(*line);
        sigma[k] = *s;
    }
    if let Some(k) = seen.iter().position(|s| s.is_none()) {
        return Err(Error::Format {
            line: None,
            message: format!(
                "missing node (sep={sep_deg}, delta={}, theta={}) in a {}x{} slice of {} rows",
                deltas[k / n],
                thetas_deg[k % n],
                deltas.len(),
                n,
                rows.len()
            ),
        });
    }
    Ok(TabulatedSlice {
        sep: sep_deg.to_radians(),
        deltas,
        thetas: thetas_deg.iter().map(|t| t.to_radians()).collect(),
        sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StressModel {
    /// σ = R_δ·δa + R_ϑ·ϑa with R_δ in MPa/mm and R_ϑ in MPa/deg.
    LinearSuperposition {
        r_delta: f64,
        r_theta_deg: f64,
    },
    /// σ = R′ times the scaled motion radius.
    Radial {
        r_prime: f64,
        scale: AxisScale,
    },
    CantileverBeam(CantileverBeam),
    Tabulated(TabulatedStress),
}

impl StressModel {
    pub fn linear(r_delta: f64, r_theta_deg: f64) -> Result<Self> {
        positive(&[("r_delta", r_delta), ("r_theta", r_theta_deg)])?;
        Ok(Self::LinearSuperposition { r_delta, r_theta_deg })
    }

    pub fn radial(r_prime: f64, scale: AxisScale) -> Result<Self> {
        positive(&[("r_prime", r_prime)])?;
        AxisScale::new(scale.delta_ref, scale.theta_ref)?;
        Ok(Self::Radial { r_prime, scale })
    }

    pub fn beam(length: f64, modulus: f64, diameter: f64, axial_force: f64) -> Result<Self> {
        positive(&[("length", length), ("modulus", modulus), ("diameter", diameter)])?;
        if !axial_force.is_finite() {
            return Err(Error::InvalidInput("axial force must be finite".into()));
        }
        Ok(Self::CantileverBeam(CantileverBeam {
            length,
            modulus,
            diameter,
            axial_force,
        }))
    }

    pub fn load_tabulated<R: Read>(input: R, meta: TabulatedMeta) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedStress::read_csv(input, meta)?))
    }

    /// σ^max at a workspace vector, MPa.
    pub fn eval(&self, w: &WorkspaceVector) -> Result<f64> {
        match self {
            Self::Tabulated(t) => t.eval(&PlanePoint::from_workspace(w)),
            _ => Ok(self.eval_analytic(w)),
        }
    }

    /// σ^max at a signed plane point. Analytic models are symmetric under
    /// (δ, ϑ) → (−δ, −ϑ); tabulated grids need not be.
    pub fn eval_plane(&self, p: &PlanePoint) -> Result<f64> {
        match self {
            Self::Tabulated(t) => t.eval(p),
            _ => Ok(self.eval_analytic(&p.to_workspace())),
        }
    }

    fn eval_analytic(&self, w: &WorkspaceVector) -> f64 {
        match self {
            Self::LinearSuperposition { r_delta, r_theta_deg } => {
                r_delta * w.delta_a + r_theta_deg * w.theta_a.to_degrees()
            }
            Self::Radial { r_prime, scale } => r_prime * scale.radius(w),
            Self::CantileverBeam(b) => b.stress(w),
            Self::Tabulated(_) => unreachable!(),
        }
    }
}

fn positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Default search for stress rays.
pub fn default_stress_search() -> RaySearch {
    RaySearch::new(1000.0, 1e-7)
}

/// Smallest scaled radius along (sep, α) where σ reaches `sigma_cr`.
/// Tabulated models search only inside their grid.
pub fn safe_radius_along_ray(
    model: &StressModel,
    sigma_cr: f64,
    grid: &DirectionGrid,
    sep: f64,
    alpha: f64,
    search: &RaySearch,
) -> Result<RayOutcome> {
    let at = |k: f64| model.eval_plane(&grid.plane_point(sep, alpha, k));
    let sigma0 = at(0.0)?;
    if sigma0 >= sigma_cr {
        return Err(Error::BaseStress { sigma0, sigma_cr });
    }
    let mut search = *search;
    if let StressModel::Tabulated(t) = model {
        search.r_max = search.r_max.min(t.hull_radius(sep, alpha, &grid.scale));
        if search.r_max <= 0.0 {
            return Ok(RayOutcome {
                hit: RayHit::Unbounded,
                bracket: (0.0, f64::INFINITY),
                non_convex: false,
            });
        }
    }
    first_crossing(&search, |k| Ok(at(k)? >= sigma_cr))
}

/// Γ^σ over every grid direction.
pub fn safe_boundary_field(
    model: &StressModel,
    sigma_cr: f64,
    grid: &DirectionGrid,
    delta_z: f64,
    search: &RaySearch,
) -> Result<RadialBoundaryField> {
    let mut radii = Vec::with_capacity(grid.len());
    for j in 0..grid.n_sep {
        for i in 0..grid.n_alpha {
            let out = safe_radius_along_ray(model, sigma_cr, grid, grid.sep(j), grid.alpha(i), search)?;
            radii.push(out.hit.radius());
        }
    }
    RadialBoundaryField::new(*grid, radii, delta_z, BoundaryLabel::SafeStress)
}

/// Signed-plane σ samples of one slice on a regular lattice, as rows of
/// (sep, δ, ϑ, σ) in rad/mm/rad/MPa.
pub fn stress_heatmap(
    model: &StressModel,
    sep: f64,
    delta_max: f64,
    theta_max: f64,
    steps: usize,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    if steps < 2 {
        return Err(Error::InvalidInput("heatmap needs at least 2 steps per axis".into()));
    }
    let node = |i: usize, m: f64| -m + 2.0 * m * i as f64 / (steps - 1) as f64;
    let mut rows = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let p = PlanePoint {
                sep,
                delta: node(i, delta_max),
                theta: node(j, theta_max),
            };
            rows.push((sep, p.delta, p.theta, model.eval_plane(&p)?));
        }
    }
    Ok(rows)
}

/// Linearised compliance: motion (δ mm, ϑ rad) per load (F N, M N·mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplianceMatrix(pub Matrix6<f64>);

impl ComplianceMatrix {
    pub fn new(m: Matrix6<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("compliance entries must be finite".into()));
        }
        Ok(Self(m))
    }
}

pub fn compliance_map(c: &ComplianceMatrix, load: &Vector6<f64>) -> SixDofMotion {
    let u = c.0 * load;
    SixDofMotion {
        delta: Vec3::new(u[0], u[1], u[2]),
        theta: Vec3::new(u[3], u[4], u[5]),
    }
}
