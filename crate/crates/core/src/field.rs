//! Direction grids over the signed (δ, ϑ) plane and radial boundary fields.
//!
//! A slice `s ∈ [0°, 90°]` holds the plane whose first and third quadrants
//! carry separation angle `s` and whose second and fourth quadrants carry
//! `180° − s`. Directions in a slice are polar angles `α` in scaled
//! coordinates `(δ / delta_ref, ϑ / theta_ref)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WorkspaceVector;

/// Per-axis scaling between physical motion and the dimensionless plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisScale {
    /// mm per scaled unit.
    pub delta_ref: f64,
    /// rad per scaled unit.
    pub theta_ref: f64,
}

impl Default for AxisScale {
    /// 1 mm : 1°.
    fn default() -> Self {
        Self {
            delta_ref: 1.0,
            theta_ref: 1f64.to_radians(),
        }
    }
}

impl AxisScale {
    pub fn new(delta_ref: f64, theta_ref: f64) -> Result<Self> {
        if !(delta_ref.is_finite() && delta_ref > 0.0 && theta_ref.is_finite() && theta_ref > 0.0) {
            return Err(Error::InvalidInput(format!(
                "axis scales must be positive (delta_ref={delta_ref}, theta_ref={theta_ref})"
            )));
        }
        Ok(Self { delta_ref, theta_ref })
    }

    /// Scaled radius of a workspace vector.
    pub fn radius(&self, w: &WorkspaceVector) -> f64 {
        (w.delta_a / self.delta_ref).hypot(w.theta_a / self.theta_ref)
    }
}

/// A point of the signed workspace plane at slice `sep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    /// Slice angle in [0, π/2], rad.
    pub sep: f64,
    /// Signed translational deflection, mm.
    pub delta: f64,
    /// Signed angular deflection, rad.
    pub theta: f64,
}

impl PlanePoint {
    pub fn to_workspace(&self) -> WorkspaceVector {
        let delta_a = self.delta.abs();
        let theta_a = self.theta.abs();
        let theta_sep = if delta_a * theta_a == 0.0 {
            0.0
        } else if (self.delta > 0.0) == (self.theta > 0.0) {
            self.sep
        } else {
            PI - self.sep
        };
        WorkspaceVector {
            delta_a,
            theta_a,
            theta_sep,
        }
    }

    /// Canonical plane representative: δ ≥ 0, acute separations in the first
    /// quadrant and obtuse ones in the fourth.
    pub fn from_workspace(w: &WorkspaceVector) -> Self {
        if w.theta_sep <= FRAC_PI_2 {
            Self {
                sep: w.theta_sep,
                delta: w.delta_a,
                theta: w.theta_a,
            }
        } else {
            Self {
                sep: PI - w.theta_sep,
                delta: w.delta_a,
                theta: -w.theta_a,
            }
        }
    }
}

/// Discretisation of slice angles and in-plane directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    pub n_alpha: usize,
    pub n_sep: usize,
    pub scale: AxisScale,
}

impl DirectionGrid {
    pub fn new(n_alpha: usize, n_sep: usize, scale: AxisScale) -> Result<Self> {
        if n_alpha < 8 || !n_alpha.is_multiple_of(4) {
            return Err(Error::InvalidInput(format!(
                "n_alpha={n_alpha} must be at least 8 and a multiple of 4"
            )));
        }
        if n_sep == 0 {
            return Err(Error::InvalidInput("n_sep must be at least 1".into()));
        }
        AxisScale::new(scale.delta_ref, scale.theta_ref)?;
        Ok(Self { n_alpha, n_sep, scale })
    }

    pub fn d_alpha(&self) -> f64 {
        2.0 * PI / self.n_alpha as f64
    }

    pub fn alpha(&self, i: usize) -> f64 {
        i as f64 * self.d_alpha()
    }

    /// Slice angles: evenly spaced over [0, π/2] including both ends; a
    /// single slice sits at 0 and stands for the whole range.
    pub fn sep(&self, j: usize) -> f64 {
        if self.n_sep == 1 {
            0.0
        } else {
            FRAC_PI_2 * j as f64 / (self.n_sep - 1) as f64
        }
    }

    pub fn seps(&self) -> Vec<f64> {
        (0..self.n_sep).map(|j| self.sep(j)).collect()
    }

    /// Trapezoidal quadrature weights over slices; they sum to π/2.
    pub fn sep_weight(&self, j: usize) -> f64 {
        if self.n_sep == 1 {
            return FRAC_PI_2;
        }
        let h = FRAC_PI_2 / (self.n_sep - 1) as f64;
        if j == 0 || j == self.n_sep - 1 {
            h / 2.0
        } else {
            h
        }
    }

    /// Physical plane point at scaled radius `k` along direction (sep, α).
    pub fn plane_point(&self, sep: f64, alpha: f64, k: f64) -> PlanePoint {
        let (s, c) = alpha.sin_cos();
        PlanePoint {
            sep,
            delta: k * c * self.scale.delta_ref,
            theta: k * s * self.scale.theta_ref,
        }
    }

    /// Workspace vector at scaled radius `k` along direction (sep, α).
    pub fn workspace_point(&self, sep: f64, alpha: f64, k: f64) -> WorkspaceVector {
        self.plane_point(sep, alpha, k).to_workspace()
    }

    /// Slice, direction and scaled radius of a workspace vector.
    pub fn locate(&self, w: &WorkspaceVector) -> (f64, f64, f64) {
        let p = PlanePoint::from_workspace(w);
        let x = p.delta / self.scale.delta_ref;
        let y = p.theta / self.scale.theta_ref;
        (p.sep, y.atan2(x).rem_euclid(2.0 * PI), x.hypot(y))
    }

    pub fn len(&self) -> usize {
        self.n_alpha * self.n_sep
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLabel {
    /// Contact boundary Γ^hs.
    HardStop,
    /// Safe stress boundary Γ^σ.
    SafeStress,
    /// Intersection of single-DOF limits.
    Orthotope,
}

/// Closed boundary stored as scaled radii over a direction grid.
/// Unbounded rays hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBoundaryField {
    pub grid: DirectionGrid,
    /// Row-major `[sep][alpha]`.
    pub radii: Vec<f64>,
    pub delta_z: f64,
    pub label: BoundaryLabel,
}

impl RadialBoundaryField {
    pub fn new(grid: DirectionGrid, radii: Vec<f64>, delta_z: f64, label: BoundaryLabel) -> Result<Self> {
        if radii.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} radii, got {}",
                grid.len(),
                radii.len()
            )));
        }
        if let Some(r) = radii.iter().find(|r| r.is_nan() || **r <= 0.0) {
            return Err(Error::InvalidInput(format!("boundary radius {r} must be positive")));
        }
        Ok(Self {
            grid,
            radii,
            delta_z,
            label,
        })
    }

    /// Same radius along every direction.
    pub fn constant(grid: DirectionGrid, radius: f64, label: BoundaryLabel) -> Result<Self> {
        Self::new(grid, vec![radius; grid.len()], 0.0, label)
    }

    #[inline]
    pub fn radius(&self, sep_index: usize, alpha_index: usize) -> f64 {
        self.radii[sep_index * self.grid.n_alpha + alpha_index]
    }

    pub fn is_bounded(&self) -> bool {
        self.radii.iter().all(|r| r.is_finite())
    }

    /// Iterates `(sep_index, alpha_index, radius)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.grid.n_alpha;
        self.radii.iter().enumerate().map(move |(k, &r)| (k / n, k % n, r))
    }

    /// Boundary radius at an arbitrary direction, bilinear in (sep, α).
    /// Infinite when any contributing node is unbounded.
    pub fn radius_at(&self, sep: f64, alpha: f64) -> f64 {
        let g = &self.grid;
        let f = alpha.rem_euclid(2.0 * PI) / g.d_alpha();
        let i0 = (f.floor() as usize) % g.n_alpha;
        let i1 = (i0 + 1) % g.n_alpha;
        let ta = f - f.floor();
        let along = |j: usize| {
            let (a, b) = (self.radius(j, i0), self.radius(j, i1));
            if a.is_infinite() || b.is_infinite() {
                f64::INFINITY
            } else {
                a + ta * (b - a)
            }
        };
        if g.n_sep == 1 {
            return along(0);
        }
        let h = FRAC_PI_2 / (g.n_sep - 1) as f64;
        let fs = (sep.clamp(0.0, FRAC_PI_2) / h).min((g.n_sep - 1) as f64);
        let j0 = (fs.floor() as usize).min(g.n_sep - 2);
        let ts = fs - j0 as f64;
        let (a, b) = (along(j0), along(j0 + 1));
        if a.is_infinite() || b.is_infinite() {
            f64::INFINITY
        } else {
            a + ts * (b - a)
        }
    }

    /// Boundary radius in the direction of a workspace vector, together with
    /// the vector's own scaled radius.
    pub fn radius_toward(&self, w: &WorkspaceVector) -> (f64, f64) {
        let (sep, alpha, r) = self.grid.locate(w);
        (self.radius_at(sep, alpha), r)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Writes `sep_deg,alpha_deg,radius_scaled,unbounded_flag` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(BOUNDARY_HEADER)?;
        for (j, i, r) in self.iter() {
            w.write_record([
                format_sig(self.grid.sep(j).to_degrees()),
                format_sig(self.grid.alpha(i).to_degrees()),
                format_sig(r),
                if r.is_finite() { "0" } else { "1" }.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a boundary CSV written by [`write_csv`](Self::write_csv). The
    /// grid's shape must match the file's rows.
    pub fn read_csv<R: Read>(input: R, grid: DirectionGrid, delta_z: f64, label: BoundaryLabel) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != BOUNDARY_HEADER {
            return Err(Error::Format {
                line: Some(1),
                message: format!("expected header {}", BOUNDARY_HEADER.join(",")),
            });
        }
        let mut radii = vec![f64::NAN; grid.len()];
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line());
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Format {
                        line,
                        message: format!("column {k} is not a number"),
                    })
            };
            let (sep, alpha, r, flag) = (num(0)?, num(1)?, num(2)?, num(3)?);
            let j = nearest_index(sep.to_radians(), |j| grid.sep(j), grid.n_sep);
            let i = nearest_index(alpha.to_radians(), |i| grid.alpha(i), grid.n_alpha);
            let (j, i) = match (j, i) {
                (Some(j), Some(i)) => (j, i),
                _ => {
                    return Err(Error::Format {
                        line,
                        message: format!("direction ({sep}°, {alpha}°) is not on the grid"),
                    })
                }
            };
            radii[j * grid.n_alpha + i] = if flag != 0.0 { f64::INFINITY } else { r };
        }
        if radii.iter().any(|r| r.is_nan()) {
            return Err(Error::Format {
                line: None,
                message: "boundary file does not cover every grid direction".into(),
            });
        }
        Self::new(grid, radii, delta_z, label)
    }
}

fn nearest_index(x: f64, at: impl Fn(usize) -> f64, n: usize) -> Option<usize> {
    (0..n).find(|&k| (at(k) - x).abs() < 1e-6)
}

pub const BOUNDARY_HEADER: [&str; 4] = ["sep_deg", "alpha_deg", "radius_scaled", "unbounded_flag"];

/// Nine significant digits in scientific notation; `inf`/`-inf`/`NaN` verbatim.
pub fn format_sig(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.8e}");
        if s.starts_with("-0.00000000e0") {
            "0.00000000e0".to_string()
        } else {
            s
        }
    } else {
        format!("{x}")
    }
}

/// Rounds to nine significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        format_sig(x).parse().unwrap_or(x)
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> DirectionGrid {
        DirectionGrid::new(16, 4, AxisScale::default()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(DirectionGrid::new(6, 1, AxisScale::default()).is_err());
        assert!(DirectionGrid::new(10, 1, AxisScale::default()).is_err());
        assert!(DirectionGrid::new(8, 0, AxisScale::default()).is_err());
        assert!(DirectionGrid::new(
            8,
            1,
            AxisScale {
                delta_ref: 0.0,
                theta_ref: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn sep_weights_sum_to_quarter_turn() {
        for n in [1, 2, 3, 7, 19] {
            let g = DirectionGrid::new(8, n, AxisScale::default()).unwrap();
            let total: f64 = (0..n).map(|j| g.sep_weight(j)).sum();
            assert!((total - FRAC_PI_2).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrant_convention() {
        let g = grid();
        let s = 30f64.to_radians();
        let q1 = g.workspace_point(s, 0.3, 2.0);
        let q3 = g.workspace_point(s, 0.3 + PI, 2.0);
        let q2 = g.workspace_point(s, PI - 0.3, 2.0);
        assert!((q1.theta_sep - s).abs() < 1e-15);
        assert!((q3.theta_sep - s).abs() < 1e-15);
        assert!((q2.theta_sep - (PI - s)).abs() < 1e-15);
        assert!((q1.delta_a - q3.delta_a).abs() < 1e-15);
    }

    #[test]
    fn locate_inverts_plane_point() {
        let g = grid();
        for (sep, alpha) in [(0.2, 0.5), (1.0, 2.0), (0.4, 5.5)] {
            let w = g.workspace_point(sep, alpha, 1.7);
            let (s2, a2, k2) = g.locate(&w);
            let w2 = g.workspace_point(s2, a2, k2);
            assert!((w.delta_a - w2.delta_a).abs() < 1e-12);
            assert!((w.theta_a - w2.theta_a).abs() < 1e-12);
            assert!((w.theta_sep - w2.theta_sep).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_exact_on_nodes() {
        let g = grid();
        let radii: Vec<f64> = (0..g.len()).map(|k| 1.0 + k as f64 * 0.01).collect();
        let f = RadialBoundaryField::new(g, radii, 0.0, BoundaryLabel::HardStop).unwrap();
        for (j, i, r) in f.iter() {
            assert!((f.radius_at(g.sep(j), g.alpha(i)) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = grid();
        let mut radii: Vec<f64> = (0..g.len()).map(|k| 0.5 + (k as f64).sin().abs()).collect();
        radii[5] = f64::INFINITY;
        let f = RadialBoundaryField::new(g, radii, -0.1, BoundaryLabel::HardStop).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sep_deg,alpha_deg,radius_scaled,unbounded_flag\n"));
        let back = RadialBoundaryField::read_csv(&buf[..], g, -0.1, BoundaryLabel::HardStop).unwrap();
        for (a, b) in f.radii.iter().zip(&back.radii) {
            assert!(a == b || (a - b).abs() <= 1e-8 * a.abs());
        }
    }

    #[test]
    fn format_is_nine_significant_digits() {
        assert_eq!(format_sig(480.0), "4.80000000e2");
        assert_eq!(format_sig(-0.0), "0.00000000e0");
        assert_eq!(format_sig(f64::INFINITY), "inf");
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333);
    }
}
