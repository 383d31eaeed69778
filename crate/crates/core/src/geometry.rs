//! Rigid-body kinematics of the stage hard stop and the torus-cap surfaces.
//!
//! Lengths are in millimetres and angles in radians throughout. The ground
//! hard stop's ellipse centre sits at the origin; the stage hard stop's
//! ellipse centre sits `z_ab` above it and its motion anchor `O_a` sits a
//! further `z_oa` above that, on the z-axis.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tilt magnitudes below this use the series form of the Rodrigues coefficients.
const SMALL_ANGLE: f64 = 1e-8;

/// Full six-DOF motion of the load reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixDofMotion {
    /// Translation (δx, δy, δz) in mm.
    pub delta: Vec3,
    /// Axis-angle rotation (ϑx, ϑy, ϑz) in rad.
    pub theta: Vec3,
}

impl SixDofMotion {
    pub fn new(delta: Vec3, theta: Vec3) -> Result<Self> {
        if !delta.iter().chain(theta.iter()).all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("motion components must be finite".into()));
        }
        if theta.norm() >= PI {
            return Err(Error::InvalidInput(format!(
                "rotation magnitude {:.6} rad is outside the small-rotation regime (< π)",
                theta.norm()
            )));
        }
        Ok(Self { delta, theta })
    }

    pub fn zero() -> Self {
        Self {
            delta: Vec3::zeros(),
            theta: Vec3::zeros(),
        }
    }

    pub fn delta_xy(&self) -> Vector2<f64> {
        Vector2::new(self.delta.x, self.delta.y)
    }

    pub fn tilt(&self) -> Vector2<f64> {
        Vector2::new(self.theta.x, self.theta.y)
    }
}

/// Protected-motion coordinates (δa, ϑa, θsep).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceVector {
    /// Translational deflection magnitude, mm.
    pub delta_a: f64,
    /// Angular deflection magnitude, rad.
    pub theta_a: f64,
    /// Separation angle between δxy and ϑ⊥xy, rad in [0, π].
    pub theta_sep: f64,
}

impl WorkspaceVector {
    /// Validates magnitudes and canonicalises `theta_sep` to 0 when either
    /// magnitude vanishes.
    pub fn new(delta_a: f64, theta_a: f64, theta_sep: f64) -> Result<Self> {
        if !(delta_a.is_finite() && theta_a.is_finite() && theta_sep.is_finite()) {
            return Err(Error::InvalidInput("workspace vector must be finite".into()));
        }
        if delta_a < 0.0 || theta_a < 0.0 {
            return Err(Error::InvalidInput(format!(
                "workspace magnitudes must be nonnegative (delta_a={delta_a}, theta_a={theta_a})"
            )));
        }
        if !(0.0..=PI).contains(&theta_sep) {
            return Err(Error::InvalidInput(format!(
                "separation angle {theta_sep} rad outside [0, π]"
            )));
        }
        let theta_sep = if delta_a * theta_a > 0.0 { theta_sep } else { 0.0 };
        Ok(Self {
            delta_a,
            theta_a,
            theta_sep,
        })
    }

    pub fn zero() -> Self {
        Self {
            delta_a: 0.0,
            theta_a: 0.0,
            theta_sep: 0.0,
        }
    }

    /// Builds a vector from degrees-based external units.
    pub fn from_degrees(delta_a_mm: f64, theta_a_deg: f64, theta_sep_deg: f64) -> Result<Self> {
        Self::new(delta_a_mm, theta_a_deg.to_radians(), theta_sep_deg.to_radians())
    }

    /// Scales both magnitudes, keeping the separation angle.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            delta_a: self.delta_a * factor,
            theta_a: self.theta_a * factor,
            theta_sep: if self.delta_a * self.theta_a * factor > 0.0 {
                self.theta_sep
            } else {
                0.0
            },
        }
    }
}

/// Skew-symmetric cross-product matrix of (ϑx, ϑy, 0).
fn tilt_skew(tx: f64, ty: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, ty, 0.0, 0.0, -tx, -ty, tx, 0.0)
}

/// Rotation matrix of the in-plane tilt vector (ϑx, ϑy) via Rodrigues' formula.
pub fn rodrigues_rotation(tilt: Vector2<f64>) -> Result<Matrix3<f64>> {
    let angle = tilt.norm();
    if !angle.is_finite() || angle >= PI {
        return Err(Error::InvalidInput(format!(
            "tilt magnitude {angle} rad must be below π"
        )));
    }
    Ok(rotation_unchecked(tilt.x, tilt.y))
}

pub(crate) fn rotation_unchecked(tx: f64, ty: f64) -> Matrix3<f64> {
    let angle2 = tx * tx + ty * ty;
    let angle = angle2.sqrt();
    let (a, b) = if angle < SMALL_ANGLE {
        (1.0 - angle2 / 6.0, 0.5 - angle2 / 24.0)
    } else {
        (angle.sin() / angle, (1.0 - angle.cos()) / angle2)
    };
    let k = tilt_skew(tx, ty);
    Matrix3::identity() + k * a + k * k * b
}

/// The angular-deflection vector ϑ⊥ = (−ϑy, ϑx).
pub fn perp_deflection(tilt: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-tilt.y, tilt.x)
}

/// Reduces a six-DOF motion to the protected workspace coordinates.
/// δz and ϑz are dropped.
pub fn decompose_motion(m: &SixDofMotion) -> WorkspaceVector {
    let d = m.delta_xy();
    let p = perp_deflection(m.tilt());
    let delta_a = d.norm();
    let theta_a = p.norm();
    // atan2 form of arccos(d·p / |d||p|); stable near 0 and π.
    let theta_sep = if delta_a * theta_a > 0.0 {
        let cross = d.x * p.y - d.y * p.x;
        cross.abs().atan2(d.dot(&p))
    } else {
        0.0
    };
    WorkspaceVector {
        delta_a,
        theta_a,
        theta_sep,
    }
}

/// Inverse of [`decompose_motion`]: δxy points along `azimuth`, ϑ⊥ along
/// `azimuth + theta_sep`.
pub fn compose_motion(w: &WorkspaceVector, azimuth: f64, delta_z: f64) -> SixDofMotion {
    let (sa, ca) = azimuth.sin_cos();
    let (sp, cp) = (azimuth + w.theta_sep).sin_cos();
    let perp = Vector2::new(w.theta_a * cp, w.theta_a * sp);
    // ϑ⊥ = (−ϑy, ϑx)  ⇒  ϑx = ϑ⊥y, ϑy = −ϑ⊥x
    SixDofMotion {
        delta: Vec3::new(w.delta_a * ca, w.delta_a * sa, delta_z),
        theta: Vec3::new(perp.y, -perp.x, 0.0),
    }
}

/// Applies the rigid stage motion to a reference point: rotation of the tilt
/// about `anchor`, then translation. ϑz is ignored.
pub fn transform_stage_point(x: &Vec3, m: &SixDofMotion, anchor: &Vec3) -> Vec3 {
    let r = rotation_unchecked(m.theta.x, m.theta.y);
    r * (x - anchor) + anchor + m.delta
}

/// Generating curve of an oblique elliptic torus cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusCapProfile {
    d_l: f64,
    d_s: f64,
    r_c: f64,
    theta_o: f64,
    clip_diameter: Option<f64>,
    cos_o: f64,
    sin_o: f64,
    tan_o: f64,
    /// Parameter interval of the radially monotone branch, in the angle
    /// parameter φ (u = R_C + (d_L/2) cos φ).
    branch: (f64, f64),
}

/// Largest radial fold-back of the profile tip accepted as a height field,
/// as a fraction of d_L.
const MAX_FOLD_FRACTION: f64 = 0.01;

impl TorusCapProfile {
    /// `theta_o` in radians.
    pub fn new(d_l: f64, d_s: f64, r_c: f64, theta_o: f64, clip_diameter: Option<f64>) -> Result<Self> {
        let all_finite = [d_l, d_s, r_c, theta_o].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidGeometry("profile parameters must be finite".into()));
        }
        if d_l <= 0.0 || d_s <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "ellipse axes must be positive (d_L={d_l}, d_S={d_s})"
            )));
        }
        if r_c <= d_l / 2.0 {
            return Err(Error::InvalidGeometry(format!(
                "R_C={r_c} must exceed d_L/2={}",
                d_l / 2.0
            )));
        }
        if theta_o.abs() >= PI / 4.0 {
            return Err(Error::InvalidGeometry(format!(
                "oblique angle {:.3}° outside (−45°, 45°)",
                theta_o.to_degrees()
            )));
        }
        let (sin_o, cos_o) = theta_o.sin_cos();
        let tan_o = theta_o.tan();
        let a = d_l / 2.0;
        let b = d_s / 2.0;
        // dX/dφ = −a sinφ cosθ − b tanθ cosφ vanishes at tanφ = −(b/a) sinθ / cos²θ.
        let branch = if theta_o == 0.0 {
            (0.0, PI)
        } else {
            let t = -(b / a) * sin_o / (cos_o * cos_o);
            let phi = t.atan();
            if phi > 0.0 {
                (phi, PI)
            } else {
                (0.0, PI + phi)
            }
        };
        let mut p = Self {
            d_l,
            d_s,
            r_c,
            theta_o,
            clip_diameter: None,
            cos_o,
            sin_o,
            tan_o,
            branch,
        };
        let (r0, _) = p.point_at_phi(0.0);
        let (r_pi, _) = p.point_at_phi(PI);
        let (rb0, _) = p.point_at_phi(branch.0);
        let (rb1, _) = p.point_at_phi(branch.1);
        let fold = (rb0 - r0).abs().max((r_pi - rb1).abs());
        if fold > MAX_FOLD_FRACTION * d_l {
            return Err(Error::InvalidGeometry(format!(
                "profile radius folds back by {fold:.4} mm; not representable as a height field"
            )));
        }
        if r_pi.min(rb1) <= 0.0 {
            return Err(Error::InvalidGeometry(
                "generating curve reaches non-positive radius".into(),
            ));
        }
        if let Some(c) = clip_diameter {
            if !c.is_finite() || c / 2.0 <= rb1 {
                return Err(Error::InvalidGeometry(format!(
                    "clip diameter {c} leaves no surface (inner radius {rb1:.4} mm)"
                )));
            }
        }
        p.clip_diameter = clip_diameter;
        Ok(p)
    }

    pub fn from_degrees(d_l: f64, d_s: f64, r_c: f64, theta_o_deg: f64, clip_diameter: Option<f64>) -> Result<Self> {
        Self::new(d_l, d_s, r_c, theta_o_deg.to_radians(), clip_diameter)
    }

    pub fn d_l(&self) -> f64 {
        self.d_l
    }
    pub fn d_s(&self) -> f64 {
        self.d_s
    }
    pub fn r_c(&self) -> f64 {
        self.r_c
    }
    pub fn theta_o(&self) -> f64 {
        self.theta_o
    }
    pub fn clip_diameter(&self) -> Option<f64> {
        self.clip_diameter
    }

    /// Radius limit imposed by clipping (infinite when unclipped).
    pub fn clip_radius(&self) -> f64 {
        self.clip_diameter.map_or(f64::INFINITY, |c| c / 2.0)
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.r_c - self.d_l / 2.0, self.r_c + self.d_l / 2.0)
    }

    /// (X'(u), Z'(u)) evaluated directly in the ellipse parameter u.
    pub fn profile_point(&self, u: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.u_range();
        if !(lo..=hi).contains(&u) {
            return Err(Error::InvalidInput(format!(
                "profile parameter u={u} outside [{lo}, {hi}]"
            )));
        }
        let t = u - self.r_c;
        let root = (self.d_l * self.d_l / 4.0 - t * t).max(0.0).sqrt();
        let k = self.d_s / self.d_l;
        let r = t * self.cos_o - k * self.tan_o * root + self.r_c;
        let z = t * self.sin_o + k * root;
        Ok((r, z))
    }

    /// Same curve in the smooth angle parameter φ ∈ [0, π], where
    /// u = R_C + (d_L/2) cos φ. φ = 0 is the outer tip.
    #[inline]
    pub fn point_at_phi(&self, phi: f64) -> (f64, f64) {
        let (s, c) = phi.sin_cos();
        let a = self.d_l / 2.0;
        let b = self.d_s / 2.0;
        (
            a * c * self.cos_o - b * self.tan_o * s + self.r_c,
            a * c * self.sin_o + b * s,
        )
    }

    /// d(X', Z')/dφ.
    #[inline]
    pub fn tangent_at_phi(&self, phi: f64) -> (f64, f64) {
        let (s, c) = phi.sin_cos();
        let a = self.d_l / 2.0;
        let b = self.d_s / 2.0;
        (-a * s * self.cos_o - b * self.tan_o * c, -a * s * self.sin_o + b * c)
    }

    /// φ-interval on which X' decreases strictly (the height-field branch).
    pub fn branch(&self) -> (f64, f64) {
        self.branch
    }

    /// Radial support [r_min, r_max] of the height-field branch.
    pub fn radial_support(&self) -> (f64, f64) {
        let (r_hi, _) = self.point_at_phi(self.branch.0);
        let (r_lo, _) = self.point_at_phi(self.branch.1);
        (r_lo, r_hi)
    }

    /// Point on the revolved surface.
    pub fn surface_point(&self, u: f64, v: f64) -> Result<Vec3> {
        let (r, z) = self.profile_point(u)?;
        let (s, c) = v.sin_cos();
        Ok(Vec3::new(r * c, r * s, z))
    }

    /// Highest point of the generating curve.
    pub fn apex_height(&self) -> f64 {
        // Z' = a cosφ sinθ + b sinφ peaks at tanφ = b / (a sinθ).
        let a = self.d_l / 2.0;
        let b = self.d_s / 2.0;
        let phi = b.atan2(a * self.sin_o);
        self.point_at_phi(phi).1
    }
}

/// The stage/ground torus-cap pair and its vertical relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardStopPair {
    pub stage: TorusCapProfile,
    pub ground: TorusCapProfile,
    /// Height of the stage ellipse centre above the ground ellipse centre, mm.
    pub z_ab: f64,
    /// Height of the anchor O_a above the stage ellipse centre, mm.
    pub z_oa: f64,
    /// Height of the load point O_L above O_a, mm.
    pub z_lo: f64,
}

impl HardStopPair {
    /// Validates that the undisplaced surfaces do not touch.
    pub fn new(stage: TorusCapProfile, ground: TorusCapProfile, z_ab: f64, z_oa: f64, z_lo: f64) -> Result<Self> {
        if ![z_ab, z_oa, z_lo].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGeometry("vertical offsets must be finite".into()));
        }
        let pair = Self {
            stage,
            ground,
            z_ab,
            z_oa,
            z_lo,
        };
        let gap = crate::contact::nominal_gap(&pair);
        if gap <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "surfaces touch at zero motion (nominal gap {gap:.6} mm); increase z_ab"
            )));
        }
        Ok(pair)
    }

    /// Optimal design I geometry with O_L 9 mm above O_a.
    pub fn design_one() -> Self {
        let stage = TorusCapProfile::from_degrees(11.4, 4.0, 10.18, -0.2, Some(29.1)).expect("valid stage profile");
        let ground = TorusCapProfile::from_degrees(11.4, 4.0, 12.129, -9.0, None).expect("valid ground profile");
        Self::new(stage, ground, 0.6645, 2.0, 9.0).expect("valid pair")
    }

    /// Motion anchor O_a in the ground frame.
    pub fn anchor(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.z_ab + self.z_oa)
    }

    /// Load reference point O_L in the ground frame.
    pub fn load_point(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.z_ab + self.z_oa + self.z_lo)
    }
}

/// Particle model of the stage surface in its own (undisplaced) frame.
#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub points: Vec<Vec3>,
    /// Achieved points per mm².
    pub density: f64,
    /// Nominal particle spacing, mm.
    pub spacing: f64,
    /// Sampled surface area, mm².
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    /// Minimum points per mm².
    pub density: f64,
    /// Minimum total point count.
    pub min_points: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            density: 64.0,
            min_points: 50_000,
        }
    }
}

/// Arc-length table of the clipped generating curve.
struct ArcTable {
    phi: Vec<f64>,
    s: Vec<f64>,
}

impl ArcTable {
    const STEPS: usize = 8192;

    fn new(p: &TorusCapProfile) -> Self {
        let n = Self::STEPS;
        let mut phi = Vec::with_capacity(n + 1);
        let mut s = Vec::with_capacity(n + 1);
        let speed = |f: f64| {
            let (dr, dz) = p.tangent_at_phi(f);
            dr.hypot(dz)
        };
        let h = PI / n as f64;
        let mut acc = 0.0;
        phi.push(0.0);
        s.push(0.0);
        for i in 0..n {
            let f0 = i as f64 * h;
            // Simpson on each step.
            acc += h / 6.0 * (speed(f0) + 4.0 * speed(f0 + h / 2.0) + speed(f0 + h));
            phi.push(f0 + h);
            s.push(acc);
        }
        Self { phi, s }
    }

    fn total(&self) -> f64 {
        *self.s.last().unwrap()
    }

    fn phi_at(&self, s: f64) -> f64 {
        let i = self.s.partition_point(|&x| x < s).clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[i - 1], self.s[i]);
        let t = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        self.phi[i - 1] + t * (self.phi[i] - self.phi[i - 1])
    }
}

/// Samples the (clipped) stage surface on a structured arc-length × azimuth
/// grid. Each ring carries a number of points proportional to its radius so
/// the areal density is uniform.
pub fn sample_stage_surface(p: &TorusCapProfile, opts: &SamplingOptions) -> Result<SurfaceSample> {
    if !(opts.density.is_finite() && opts.density > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sampling density {} must be positive",
            opts.density
        )));
    }
    let table = ArcTable::new(p);
    let clip = p.clip_radius();

    // Exact clipped area from the arc table.
    let mut area = 0.0;
    for i in 0..ArcTable::STEPS {
        let mid = 0.5 * (table.phi[i] + table.phi[i + 1]);
        let (r, _) = p.point_at_phi(mid);
        if r <= clip {
            area += 2.0 * PI * r * (table.s[i + 1] - table.s[i]);
        }
    }
    if area <= 0.0 {
        return Err(Error::InvalidGeometry("clipped surface has zero area".into()));
    }

    let mut spacing = 1.0 / opts.density.sqrt();
    for _ in 0..64 {
        let points = rings(p, &table, spacing, clip);
        let achieved = points.len() as f64 / area;
        if achieved >= opts.density && points.len() >= opts.min_points {
            return Ok(SurfaceSample {
                points,
                density: achieved,
                spacing,
                area,
            });
        }
        let need = (opts.density / achieved).max(opts.min_points as f64 / points.len() as f64);
        spacing /= need.sqrt().max(1.0) * 1.002;
    }
    Err(Error::InvalidGeometry(
        "surface sampling failed to reach the requested density".into(),
    ))
}

fn rings(p: &TorusCapProfile, table: &ArcTable, spacing: f64, clip: f64) -> Vec<Vec3> {
    let total = table.total();
    let n_arc = (total / spacing).ceil().max(1.0) as usize;
    let ds = total / n_arc as f64;
    let mut out = Vec::new();
    for i in 0..n_arc {
        let phi = table.phi_at((i as f64 + 0.5) * ds);
        let (r, z) = p.point_at_phi(phi);
        if r <= clip {
            push_ring(&mut out, r, z, spacing, if i % 2 == 0 { 0.0 } else { 0.5 });
        }
    }
    // Edges of the sampled surface: the arc ends and every clip crossing.
    // Midpoint rings alone can sit up to a spacing inside a rim.
    for phi in [0.0, PI] {
        let (r, z) = p.point_at_phi(phi);
        if r <= clip {
            push_ring(&mut out, r, z, spacing, 0.25);
        }
    }
    if clip.is_finite() {
        let inside = |phi: f64| p.point_at_phi(phi).0 <= clip;
        for w in table.phi.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            if inside(a) == inside(b) {
                continue;
            }
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if inside(m) == inside(a) {
                    a = m;
                } else {
                    b = m;
                }
            }
            let phi = if inside(a) { a } else { b };
            let (r, z) = p.point_at_phi(phi);
            push_ring(&mut out, r, z, spacing, 0.25);
        }
    }
    out
}

fn push_ring(out: &mut Vec<Vec3>, r: f64, z: f64, spacing: f64, stagger: f64) {
    if r < 1e-12 {
        out.push(Vec3::new(0.0, 0.0, z));
        return;
    }
    let n_v = ((2.0 * PI * r / spacing).ceil() as usize).max(3);
    for j in 0..n_v {
        let v = 2.0 * PI * (j as f64 + stagger) / n_v as f64;
        let (s, c) = v.sin_cos();
        out.push(Vec3::new(r * c, r * s, z));
    }
}
