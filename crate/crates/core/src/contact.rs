//! Clearance between the displaced stage particles and the exact ground
//! surface, and extraction of the contact boundary as a radial field.
//!
//! The ground surface is a surface of revolution, so every distance query
//! reduces to a point-to-curve problem in the (r, z) half-plane. The ground
//! is treated as solid below its height field z_b(r) on its radial support.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{BoundaryLabel, DirectionGrid, RadialBoundaryField};
use crate::geometry::{
    compose_motion, rotation_unchecked, sample_stage_surface, transform_stage_point, HardStopPair, SamplingOptions,
    SixDofMotion, SurfaceSample, TorusCapProfile, Vec3, WorkspaceVector,
};
use crate::ray::{first_crossing, RayHit, RayOutcome, RaySearch};

const COARSE_VERTICES: usize = 128;
const BRANCH_TABLE: usize = 512;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Ground profile prepared for height and distance queries.
#[derive(Debug, Clone)]
pub struct GroundSurface {
    profile: TorusCapProfile,
    z_offset: f64,
    support: (f64, f64),
    /// Heights at the inner and outer support ends.
    wall_tops: (f64, f64),
    /// (φ, X') on the monotone branch; X' decreasing.
    branch_phi: Vec<f64>,
    branch_r: Vec<f64>,
    /// Coarse vertices over the full curve, φ ∈ [0, π].
    vertices: Vec<(f64, f64)>,
    vertex_phi: Vec<f64>,
    /// Upper bound on the distance from any curve point to its nearest vertex.
    half_arc: f64,
}

impl GroundSurface {
    pub fn new(profile: TorusCapProfile, z_offset: f64) -> Self {
        let (b0, b1) = profile.branch();
        let branch_phi: Vec<f64> = (0..=BRANCH_TABLE)
            .map(|i| b0 + (b1 - b0) * i as f64 / BRANCH_TABLE as f64)
            .collect();
        let branch_r = branch_phi.iter().map(|&f| profile.point_at_phi(f).0).collect();
        let vertex_phi: Vec<f64> = (0..=COARSE_VERTICES)
            .map(|i| PI * i as f64 / COARSE_VERTICES as f64)
            .collect();
        let vertices: Vec<(f64, f64)> = vertex_phi
            .iter()
            .map(|&f| {
                let (r, z) = profile.point_at_phi(f);
                (r, z + z_offset)
            })
            .collect();
        // Arc length per coarse step from 16 sub-chords, inflated slightly.
        let mut max_arc: f64 = 0.0;
        for w in vertex_phi.windows(2) {
            let mut arc = 0.0;
            let mut prev = profile.point_at_phi(w[0]);
            for k in 1..=16 {
                let p = profile.point_at_phi(w[0] + (w[1] - w[0]) * k as f64 / 16.0);
                arc += (p.0 - prev.0).hypot(p.1 - prev.1);
                prev = p;
            }
            max_arc = max_arc.max(arc);
        }
        let support = profile.radial_support();
        let z_lo = profile.point_at_phi(b1).1 + z_offset;
        let z_hi = profile.point_at_phi(b0).1 + z_offset;
        Self {
            profile,
            z_offset,
            support,
            wall_tops: (z_lo, z_hi),
            branch_phi,
            branch_r,
            vertices,
            vertex_phi,
            half_arc: 0.5 * max_arc * 1.01,
        }
    }

    pub fn profile(&self) -> &TorusCapProfile {
        &self.profile
    }

    pub fn radial_support(&self) -> (f64, f64) {
        self.support
    }

    /// Height z_b(r) of the ground surface, or `None` outside its support.
    pub fn height_at(&self, r: f64) -> Option<f64> {
        let (lo, hi) = self.support;
        if !(lo..=hi).contains(&r) {
            return None;
        }
        let phi = self.branch_phi_at(r);
        Some(self.profile.point_at_phi(phi).1 + self.z_offset)
    }

    /// Solves X'(φ) = r on the monotone branch.
    fn branch_phi_at(&self, r: f64) -> f64 {
        let rs = &self.branch_r;
        // rs is decreasing: first index with rs[i] <= r.
        let i = rs.partition_point(|&x| x > r).clamp(1, rs.len() - 1);
        let (mut a, mut b) = (self.branch_phi[i - 1], self.branch_phi[i]);
        let (ra, rb) = (rs[i - 1], rs[i]);
        if ra == r {
            return a;
        }
        if rb == r {
            return b;
        }
        let mut phi = if ra != rb {
            a + (b - a) * (ra - r) / (ra - rb)
        } else {
            0.5 * (a + b)
        };
        for _ in 0..60 {
            let f = self.profile.point_at_phi(phi).0 - r;
            if f == 0.0 {
                return phi;
            }
            // f decreasing in φ: f > 0 ⇒ root lies above φ.
            if f > 0.0 {
                a = phi;
            } else {
                b = phi;
            }
            let d = self.profile.tangent_at_phi(phi).0;
            let mut next = phi - f / d;
            if d.is_nan() || d >= 0.0 || next.is_nan() || next <= a || next >= b {
                next = 0.5 * (a + b);
            }
            if (next - phi).abs() < 1e-15 || b - a < 1e-15 {
                return next;
            }
            phi = next;
        }
        phi
    }

    fn dist2_at(&self, phi: f64, r: f64, z: f64) -> f64 {
        let (pr, pz) = self.profile.point_at_phi(phi);
        let dr = r - pr;
        let dz = z - (pz + self.z_offset);
        dr * dr + dz * dz
    }

    /// Distance to the nearest coarse vertex (an upper bound on the curve
    /// distance; subtracting `half_arc` gives a lower bound).
    #[inline]
    fn coarse_distance(&self, r: f64, z: f64) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (i, &(vr, vz)) in self.vertices.iter().enumerate() {
            let d = (r - vr) * (r - vr) + (z - vz) * (z - vz);
            if d < best {
                best = d;
                arg = i;
            }
        }
        (best.sqrt(), arg)
    }

    /// Unsigned distance from (r, z) to the generating curve.
    pub fn curve_distance(&self, r: f64, z: f64) -> f64 {
        let (coarse, _) = self.coarse_distance(r, z);
        let limit = coarse + 2.0 * self.half_arc;
        let n = self.vertices.len();
        let mut best2 = coarse * coarse;
        for i in 0..n {
            let (vr, vz) = self.vertices[i];
            let d = ((r - vr) * (r - vr) + (z - vz) * (z - vz)).sqrt();
            if d > limit {
                continue;
            }
            let lo = self.vertex_phi[i.saturating_sub(1)];
            let hi = self.vertex_phi[(i + 1).min(n - 1)];
            best2 = best2.min(self.golden_min(lo, hi, r, z));
        }
        best2.sqrt()
    }

    fn golden_min(&self, mut a: f64, mut b: f64, r: f64, z: f64) -> f64 {
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let mut fc = self.dist2_at(c, r, z);
        let mut fd = self.dist2_at(d, r, z);
        while b - a > 1e-11 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = self.dist2_at(c, r, z);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = self.dist2_at(d, r, z);
            }
        }
        fc.min(fd).min(self.dist2_at(a, r, z)).min(self.dist2_at(b, r, z))
    }

    /// Whether (r, z) lies on or below the height field.
    #[inline]
    pub fn is_below(&self, r: f64, z: f64) -> bool {
        match self.height_at(r) {
            Some(zb) => z <= zb,
            None => false,
        }
    }

    /// Signed distance: negative strictly below the height field.
    pub fn signed_distance(&self, r: f64, z: f64) -> f64 {
        let d = self.curve_distance(r, z);
        match self.height_at(r) {
            Some(zb) if z < zb => -d,
            _ => d,
        }
    }

    /// Distance to the boundary of the solid region (surface plus the
    /// vertical walls under the support ends). A point moved by less than
    /// this cannot change its below/above status.
    pub fn solid_boundary_distance(&self, r: f64, z: f64) -> f64 {
        let wall = |rw: f64, top: f64| {
            if z <= top {
                (r - rw).abs()
            } else {
                (r - rw).hypot(z - top)
            }
        };
        self.curve_distance(r, z)
            .min(wall(self.support.0, self.wall_tops.0))
            .min(wall(self.support.1, self.wall_tops.1))
    }

    /// Interval bounds on the signed distance from the coarse scan.
    fn signed_bounds(&self, r: f64, z: f64) -> (f64, f64) {
        let (upper, _) = self.coarse_distance(r, z);
        let lower = (upper - self.half_arc).max(0.0);
        if self.height_at(r).is_some_and(|zb| z < zb) {
            (-upper, -lower)
        } else {
            (lower, upper)
        }
    }
}

/// Signed distance from a point to the ground surface raised by `z_offset`.
pub fn point_to_profile_distance(pt: &Vec3, ground: &TorusCapProfile, z_offset: f64) -> f64 {
    let g = GroundSurface::new(*ground, z_offset);
    g.signed_distance(pt.xy().norm(), pt.z)
}

/// Smallest signed clearance of the undisplaced stage generating curve.
pub fn nominal_gap(pair: &HardStopPair) -> f64 {
    let ground = GroundSurface::new(pair.ground, 0.0);
    let clip = pair.stage.clip_radius();
    let n = 2048;
    let eval = |phi: f64| {
        let (r, z) = pair.stage.point_at_phi(phi);
        (r <= clip).then(|| ground.signed_distance(r, z + pair.z_ab))
    };
    let mut best = f64::INFINITY;
    let mut arg = None;
    for i in 0..=n {
        let phi = PI * i as f64 / n as f64;
        if let Some(d) = eval(phi) {
            if d < best {
                best = d;
                arg = Some(i);
            }
        }
    }
    let Some(i) = arg else { return best };
    // Golden refinement around the best sample.
    let h = PI / n as f64;
    let (mut a, mut b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
    a = a.max(0.0);
    b = b.min(PI);
    let f = |p: f64| eval(p).unwrap_or(f64::INFINITY);
    for _ in 0..60 {
        let c = b - GOLDEN * (b - a);
        let d = a + GOLDEN * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(f(0.5 * (a + b)))
}

/// Stage particles positioned in the ground frame, ordered by how far each
/// must move before it can reach the ground solid.
#[derive(Debug, Clone)]
pub struct ContactScene {
    pair: HardStopPair,
    ground: GroundSurface,
    anchor: Vec3,
    points: Vec<Vec3>,
    /// Distance of each point to the ground solid's boundary at zero motion.
    reach: Vec<f64>,
    /// |X − O_a| per point.
    lever: Vec<f64>,
    gap: f64,
}

impl ContactScene {
    pub fn new(pair: &HardStopPair, sample: &SurfaceSample) -> Self {
        let ground = GroundSurface::new(pair.ground, 0.0);
        let anchor = pair.anchor();
        let mut items: Vec<(f64, Vec3)> = sample
            .points
            .iter()
            .map(|p| {
                let x = Vec3::new(p.x, p.y, p.z + pair.z_ab);
                let reach = ground.solid_boundary_distance(x.xy().norm(), x.z);
                (reach, x)
            })
            .collect();
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let reach: Vec<f64> = items.iter().map(|i| i.0).collect();
        let points: Vec<Vec3> = items.iter().map(|i| i.1).collect();
        let lever = points.iter().map(|p| (p - anchor).norm()).collect();
        Self {
            pair: *pair,
            ground,
            anchor,
            points,
            reach,
            lever,
            gap: nominal_gap(pair),
        }
    }

    /// Builds the particle sample from the pair's stage profile.
    pub fn sampled(pair: &HardStopPair, opts: &SamplingOptions) -> Result<Self> {
        let sample = sample_stage_surface(&pair.stage, opts)?;
        Ok(Self::new(pair, &sample))
    }

    pub fn pair(&self) -> &HardStopPair {
        &self.pair
    }

    pub fn ground(&self) -> &GroundSurface {
        &self.ground
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Smallest clearance of the continuous surfaces at zero motion, mm.
    pub fn nominal_gap(&self) -> f64 {
        self.gap
    }

    /// Largest distance of any particle from the anchor, mm.
    pub fn max_lever(&self) -> f64 {
        self.lever.iter().copied().fold(0.0, f64::max)
    }

    /// Transformed particle positions in the ground frame.
    pub fn transformed(&self, m: &SixDofMotion) -> impl Iterator<Item = Vec3> + '_ {
        let m = *m;
        self.points
            .iter()
            .map(move |p| transform_stage_point(p, &m, &self.anchor))
    }

    /// `min_clearance(m) <= 0`, decided without computing distances: some
    /// particle lies on or below the ground height field. Particles whose
    /// displacement bound is smaller than their reach are skipped.
    pub fn in_contact(&self, m: &SixDofMotion) -> bool {
        let shift = m.delta.norm();
        let tilt = m.theta.x.hypot(m.theta.y);
        let chord = 2.0 * (0.5 * tilt).sin();
        let rot = rotation_unchecked(m.theta.x, m.theta.y);
        let global = shift + chord * self.max_lever();
        for ((p, &reach), &lever) in self.points.iter().zip(&self.reach).zip(&self.lever) {
            if reach > global {
                break;
            }
            if reach > shift + chord * lever {
                continue;
            }
            let x = rot * (p - self.anchor) + self.anchor + m.delta;
            if self.ground.is_below(x.xy().norm(), x.z) {
                return true;
            }
        }
        false
    }

    /// Minimum signed distance of the displaced particles to the ground.
    pub fn min_clearance(&self, m: &SixDofMotion) -> f64 {
        let moved: Vec<(f64, f64)> = self.transformed(m).map(|x| (x.xy().norm(), x.z)).collect();
        let bounds: Vec<(f64, f64)> = moved.iter().map(|&(r, z)| self.ground.signed_bounds(r, z)).collect();
        let threshold = bounds.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
        let mut best = f64::INFINITY;
        for (&(r, z), &(lo, _)) in moved.iter().zip(&bounds) {
            if lo <= threshold {
                best = best.min(self.ground.signed_distance(r, z));
            }
        }
        best
    }
}

/// Minimum signed clearance between the displaced stage sample and the ground.
pub fn min_clearance(pair: &HardStopPair, m: &SixDofMotion, sample: &SurfaceSample) -> f64 {
    ContactScene::new(pair, sample).min_clearance(m)
}

/// Settings for contact boundary extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactOptions {
    pub sampling: SamplingOptions,
    /// Ray search settings; `None` derives `r_max` from the nominal gap.
    pub search: Option<RaySearch>,
    /// Multiple of the gap-based motion scale used for the default `r_max`.
    pub r_max_gap_factor: f64,
    /// Default bracket tolerance, scaled units.
    pub tol: f64,
}

impl Default for ContactOptions {
    fn default() -> Self {
        Self {
            sampling: SamplingOptions::default(),
            search: None,
            r_max_gap_factor: 4.0,
            tol: 1e-4,
        }
    }
}

impl ContactOptions {
    /// Ray search for a scene: explicit settings, or `r_max` equal to
    /// `r_max_gap_factor` times the larger of the gap as a translation and
    /// the gap over the particle lever arm as a tilt, both in scaled units.
    pub fn search_for(&self, scene: &ContactScene, grid: &DirectionGrid) -> RaySearch {
        if let Some(s) = self.search {
            return s;
        }
        let g = scene.nominal_gap();
        let as_shift = g / grid.scale.delta_ref;
        let as_tilt = (g / scene.max_lever()) / grid.scale.theta_ref;
        RaySearch::new(self.r_max_gap_factor * as_shift.max(as_tilt), self.tol)
    }
}

/// Contact radius along one grid direction, with δxy at `azimuth`.
#[allow(clippy::too_many_arguments)]
/// Stage motion for a workspace vector in the contact frame: δxy along
/// `azimuth`, and the stage leaning toward `azimuth + theta_sep`. Leaning
/// toward +x is a rotation about +y, so the lean direction is −ϑ⊥ and this
/// equals [`compose_motion`] at separation π − θ_sep.
pub fn contact_motion(w: &WorkspaceVector, azimuth: f64, delta_z: f64) -> SixDofMotion {
    let flipped = WorkspaceVector {
        theta_sep: PI - w.theta_sep,
        ..*w
    };
    compose_motion(&flipped, azimuth, delta_z)
}

pub fn contact_radius_along_ray(
    scene: &ContactScene,
    grid: &DirectionGrid,
    sep: f64,
    alpha: f64,
    azimuth: f64,
    delta_z: f64,
    search: &RaySearch,
) -> Result<RayOutcome> {
    let motion = |k: f64| contact_motion(&grid.workspace_point(sep, alpha, k), azimuth, delta_z);
    let zero = || Error::ZeroClearance {
        sep_index: usize::MAX,
        alpha_index: usize::MAX,
        sep_deg: sep.to_degrees(),
        alpha_deg: alpha.to_degrees(),
    };
    if scene.in_contact(&motion(0.0)) {
        return Err(zero());
    }
    let out = first_crossing::<Error>(search, |k| Ok(scene.in_contact(&motion(k))))?;
    if let RayHit::At(_) = out.hit {
        if out.bracket.0 <= 0.0 {
            return Err(zero());
        }
    }
    Ok(out)
}

/// Diagnostics collected during boundary extraction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtractionReport {
    /// (sep_index, alpha_index) of rays whose audit found non-convexity.
    pub non_convex: Vec<(usize, usize)>,
    pub search: Option<RaySearch>,
}

/// Contact boundary Γ^hs over a direction grid at settlement `delta_z`.
///
/// Directions α and α + π of a slice describe the same workspace vectors, so
/// only the first half-turn is searched.
pub fn contact_boundary_field(
    scene: &ContactScene,
    grid: &DirectionGrid,
    delta_z: f64,
    opts: &ContactOptions,
) -> Result<(RadialBoundaryField, ExtractionReport)> {
    let search = opts.search_for(scene, grid);
    let half = grid.n_alpha / 2;
    let mut radii = vec![f64::NAN; grid.len()];
    let mut report = ExtractionReport {
        search: Some(search),
        ..Default::default()
    };
    for j in 0..grid.n_sep {
        for i in 0..half {
            let out = contact_radius_along_ray(scene, grid, grid.sep(j), grid.alpha(i), 0.0, delta_z, &search)
                .map_err(|e| match e {
                    Error::ZeroClearance { sep_deg, alpha_deg, .. } => Error::ZeroClearance {
                        sep_index: j,
                        alpha_index: i,
                        sep_deg,
                        alpha_deg,
                    },
                    other => other,
                })?;
            if out.non_convex {
                report.non_convex.push((j, i));
            }
            let r = out.hit.radius();
            radii[j * grid.n_alpha + i] = r;
            radii[j * grid.n_alpha + i + half] = r;
        }
    }
    let field = RadialBoundaryField::new(*grid, radii, delta_z, BoundaryLabel::HardStop)?;
    Ok((field, report))
}
