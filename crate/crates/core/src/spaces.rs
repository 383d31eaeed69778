//! Volumes and set comparisons of radially convex regions.
//!
//! A region's volume is the polar area of each slice integrated over the
//! slice angle: Σ_s w_s Σ_α ½ r² Δα, in scaled units.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{BoundaryLabel, DirectionGrid, RadialBoundaryField};
use crate::geometry::WorkspaceVector;
use crate::trajectory::Trajectory;

/// Default containment tolerance on vol_unprotected / vol_sigma.
pub const CONTAINMENT_TOL: f64 = 1e-3;

fn unbounded(f: &RadialBoundaryField, j: usize, i: usize, context: &str) -> Error {
    Error::Unbounded {
        sep_deg: f.grid.sep(j).to_degrees(),
        alpha_deg: f.grid.alpha(i).to_degrees(),
        context: context.into(),
    }
}

fn require_bounded(f: &RadialBoundaryField, context: &str) -> Result<()> {
    match f.iter().find(|(_, _, r)| r.is_infinite()) {
        Some((j, i, _)) => Err(unbounded(f, j, i, context)),
        None => Ok(()),
    }
}

/// Weighted sum of `g(j, i)` over the grid with quadrature weights.
fn quadrature(grid: &DirectionGrid, mut g: impl FnMut(usize, usize) -> f64) -> f64 {
    let da = grid.d_alpha();
    (0..grid.n_sep)
        .map(|j| grid.sep_weight(j) * da * (0..grid.n_alpha).map(|i| g(j, i)).sum::<f64>())
        .sum()
}

pub fn field_volume(f: &RadialBoundaryField) -> Result<f64> {
    require_bounded(f, "infinite volume")?;
    Ok(quadrature(&f.grid, |j, i| 0.5 * f.radius(j, i).powi(2)))
}

/// φ_hs = Vol(hs) / Vol(σ), whether or not hs is contained.
pub fn volume_fraction(hs: &RadialBoundaryField, sigma: &RadialBoundaryField) -> Result<f64> {
    hs.check_same_grid(sigma)?;
    Ok(field_volume(hs)? / field_volume(sigma)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DifferenceVolumes {
    /// hs outside σ.
    pub unprotected: f64,
    /// σ outside hs.
    pub overprotected: f64,
    pub overlap: f64,
}

pub fn difference_volumes(hs: &RadialBoundaryField, sigma: &RadialBoundaryField) -> Result<DifferenceVolumes> {
    hs.check_same_grid(sigma)?;
    require_bounded(hs, "hard-stop region is unbounded")?;
    require_bounded(sigma, "safe stress region is unbounded")?;
    let sq = |f: &RadialBoundaryField, j, i| f.radius(j, i).powi(2);
    let g = &hs.grid;
    Ok(DifferenceVolumes {
        unprotected: quadrature(g, |j, i| 0.5 * (sq(hs, j, i) - sq(sigma, j, i)).max(0.0)),
        overprotected: quadrature(g, |j, i| 0.5 * (sq(sigma, j, i) - sq(hs, j, i)).max(0.0)),
        overlap: quadrature(g, |j, i| 0.5 * sq(hs, j, i).min(sq(sigma, j, i))),
    })
}

/// Strict membership: the scaled radius of `w` lies below the boundary.
pub fn contains_point(f: &RadialBoundaryField, w: &WorkspaceVector) -> bool {
    let (boundary, r) = f.radius_toward(w);
    r < boundary
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary {
    pub n_alpha: usize,
    pub n_sep: usize,
    pub delta_ref_mm: f64,
    pub theta_ref_deg: f64,
}

impl From<&DirectionGrid> for GridSummary {
    fn from(g: &DirectionGrid) -> Self {
        Self {
            n_alpha: g.n_alpha,
            n_sep: g.n_sep,
            delta_ref_mm: g.scale.delta_ref,
            theta_ref_deg: g.scale.theta_ref.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceMetrics {
    pub vol_hs: f64,
    pub vol_sigma: f64,
    pub phi_hs: f64,
    pub vol_unprotected: f64,
    pub vol_overprotected: f64,
    pub contained: bool,
    pub grid: GridSummary,
}

/// Protection metrics of `hs` against `sigma`. `contained` holds when the
/// unprotected volume is at most `tol` times the safe volume.
pub fn space_metrics(hs: &RadialBoundaryField, sigma: &RadialBoundaryField, tol: f64) -> Result<SpaceMetrics> {
    let d = difference_volumes(hs, sigma)?;
    let vol_hs = field_volume(hs)?;
    let vol_sigma = field_volume(sigma)?;
    Ok(SpaceMetrics {
        vol_hs,
        vol_sigma,
        phi_hs: vol_hs / vol_sigma,
        vol_unprotected: d.unprotected,
        vol_overprotected: d.overprotected,
        contained: d.unprotected <= tol * vol_sigma,
        grid: (&hs.grid).into(),
    })
}

/// Box limits on the signed plane, mm and rad. `None` leaves an axis free.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AxisLimits {
    pub delta: Option<(f64, f64)>,
    pub theta: Option<(f64, f64)>,
}

impl AxisLimits {
    pub fn symmetric(delta: Option<f64>, theta: Option<f64>) -> Self {
        Self {
            delta: delta.map(|b| (-b, b)),
            theta: theta.map(|b| (-b, b)),
        }
    }
}

/// Radial representation of the intersection of single-DOF limits: along
/// each ray, the distance to the first face crossed.
pub fn orthotope_field(limits: &AxisLimits, grid: &DirectionGrid) -> Result<RadialBoundaryField> {
    for (name, lim) in [("delta", limits.delta), ("theta", limits.theta)] {
        if let Some((a, b)) = lim {
            if !(a < 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} limits [{a}, {b}] must straddle zero"
                )));
            }
        }
    }
    let face = |v: f64, lim: Option<(f64, f64)>, unit: f64| match lim {
        Some((_, b)) if v > 1e-15 => b / unit / v,
        Some((a, _)) if v < -1e-15 => a / unit / v,
        _ => f64::INFINITY,
    };
    let mut radii = Vec::with_capacity(grid.len());
    for _ in 0..grid.n_sep {
        for i in 0..grid.n_alpha {
            let (s, c) = grid.alpha(i).sin_cos();
            let r = face(c, limits.delta, grid.scale.delta_ref).min(face(s, limits.theta, grid.scale.theta_ref));
            radii.push(r);
        }
    }
    RadialBoundaryField::new(*grid, radii, 0.0, BoundaryLabel::Orthotope)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    /// Boundary radius minus sample radius, scaled units, per sample.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// Indices of samples with margin ≤ 0.
    pub violations: Vec<usize>,
    pub passed: bool,
}

pub fn trajectory_containment(f: &RadialBoundaryField, traj: &Trajectory) -> ContainmentReport {
    let margins: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| {
            let (boundary, r) = f.radius_toward(&s.workspace);
            boundary - r
        })
        .collect();
    let violations: Vec<usize> = margins
        .iter()
        .enumerate()
        .filter(|(_, m)| **m <= 0.0)
        .map(|(k, _)| k)
        .collect();
    ContainmentReport {
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        passed: violations.is_empty(),
        violations,
        margins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AxisScale;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn grid(n_alpha: usize, n_sep: usize) -> DirectionGrid {
        DirectionGrid::new(n_alpha, n_sep, AxisScale::default()).unwrap()
    }

    #[test]
    fn constant_field_volume() {
        let f = RadialBoundaryField::constant(grid(64, 5), 1.7, BoundaryLabel::HardStop).unwrap();
        let v = field_volume(&f).unwrap();
        assert!((v - 0.5 * 1.7f64.powi(2) * 2.0 * PI * FRAC_PI_2).abs() < 1e-9);
        let g = RadialBoundaryField::constant(grid(64, 5), 3.4, BoundaryLabel::HardStop).unwrap();
        assert!((field_volume(&g).unwrap() / v - 4.0).abs() < 1e-12);
        assert!((volume_fraction(&f, &g).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn single_ray_overshoot() {
        let g = grid(8, 1);
        let sigma = RadialBoundaryField::constant(g, 1.0, BoundaryLabel::SafeStress).unwrap();
        let mut hs = sigma.clone();
        hs.label = BoundaryLabel::HardStop;
        hs.radii[3] = 2.0;
        let d = difference_volumes(&hs, &sigma).unwrap();
        assert!((d.unprotected - 0.5 * 3.0 * g.d_alpha() * FRAC_PI_2).abs() < 1e-12);
        assert_eq!(d.overprotected, 0.0);
    }

    #[test]
    fn unbounded_volume_names_ray() {
        let g = grid(8, 1);
        let f = orthotope_field(&AxisLimits::symmetric(Some(1.0), None), &g).unwrap();
        match field_volume(&f) {
            Err(Error::Unbounded { alpha_deg, .. }) => assert!((alpha_deg - 90.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn box_corner_and_area() {
        let g = grid(360, 1);
        let f = orthotope_field(&AxisLimits::symmetric(Some(1.0), Some(1f64.to_radians())), &g).unwrap();
        assert!((f.radius(0, 45) - SQRT_2).abs() < 1e-12);
        assert!((f.radius_at(0.0, FRAC_PI_4) - SQRT_2).abs() < 1e-12);
        let area = field_volume(&f).unwrap() / FRAC_PI_2;
        assert!((area - 4.0).abs() / 4.0 < 0.01);
    }

    #[test]
    fn membership_is_strict() {
        let g = grid(8, 1);
        let f = RadialBoundaryField::constant(g, 2.0, BoundaryLabel::HardStop).unwrap();
        assert!(contains_point(&f, &WorkspaceVector::zero()));
        assert!(!contains_point(&f, &WorkspaceVector::new(2.0, 0.0, 0.0).unwrap()));
        assert!(contains_point(&f, &WorkspaceVector::new(1.999, 0.0, 0.0).unwrap()));
    }
}
