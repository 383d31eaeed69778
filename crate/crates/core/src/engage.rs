//! Quasi-static engagement of the hard stop along activity trajectories.
//!
//! Motions outside the contact-free region are projected radially back onto
//! its boundary; stress is evaluated with and without that projection.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{format_sig, RadialBoundaryField};
use crate::geometry::WorkspaceVector;
use crate::stress::StressModel;
use crate::trajectory::{Trajectory, TrajectorySample};

pub const ENGAGEMENT_HEADER: [&str; 10] = [
    "cycle_pct",
    "delta_a_mm",
    "theta_a_deg",
    "theta_sep_deg",
    "delta_a_clamped_mm",
    "theta_a_clamped_deg",
    "engaged",
    "margin_scaled",
    "sigma_unclamped_mpa",
    "sigma_clamped_mpa",
];

/// Gaussian surge: peak multiplier and full width (in samples) at 5% of the
/// excess over 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Surge {
    pub peak_multiplier: f64,
    pub width_steps: f64,
    pub center_pct: f64,
}

impl Surge {
    /// Standard deviation of the envelope, in samples.
    pub fn sigma_steps(&self) -> f64 {
        self.width_steps / (2.0 * (2.0 * 20f64.ln()).sqrt())
    }
}

/// Index of the sample nearest `pct` (earliest on ties).
pub fn nearest_sample(traj: &Trajectory, pct: f64) -> usize {
    let mut best = 0;
    for (k, s) in traj.samples.iter().enumerate() {
        if (s.cycle_pct - pct).abs() < (traj.samples[best].cycle_pct - pct).abs() {
            best = k;
        }
    }
    best
}

/// Multiplies δa and ϑa by 1 + (p − 1)·exp(−½((i − i_c)/s)²).
pub fn apply_surge(traj: &Trajectory, surge: &Surge) -> Result<Trajectory> {
    if !(surge.peak_multiplier >= 1.0 && surge.peak_multiplier.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "peak multiplier {} must be at least 1",
            surge.peak_multiplier
        )));
    }
    if !(surge.width_steps > 0.0 && surge.width_steps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "surge width {} must be positive",
            surge.width_steps
        )));
    }
    let ic = nearest_sample(traj, surge.center_pct) as f64;
    let s = surge.sigma_steps();
    let samples = traj
        .samples
        .iter()
        .enumerate()
        .map(|(i, smp)| {
            let x = (i as f64 - ic) / s;
            let m = 1.0 + (surge.peak_multiplier - 1.0) * (-0.5 * x * x).exp();
            TrajectorySample {
                workspace: smp.workspace.scaled(m),
                ..*smp
            }
        })
        .collect();
    Trajectory::new(format!("{} (surge {}x)", traj.label, surge.peak_multiplier), samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngagementRecord {
    pub cycle_pct: f64,
    pub input: WorkspaceVector,
    pub clamped: WorkspaceVector,
    pub engaged: bool,
    /// Boundary radius minus input radius, scaled units.
    pub margin: f64,
    pub sigma_unclamped: f64,
    pub sigma_clamped: f64,
}

pub fn simulate_engagement(
    hs: &RadialBoundaryField,
    model: &StressModel,
    traj: &Trajectory,
) -> Result<Vec<EngagementRecord>> {
    traj.samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let w = s.workspace;
            let (boundary, r) = hs.radius_toward(&w);
            if r > 0.0 && boundary.is_infinite() {
                let (sep, alpha, _) = hs.grid.locate(&w);
                return Err(Error::Simulation {
                    sample: k,
                    message: format!(
                        "hard-stop boundary is unbounded toward sep={:.3}° alpha={:.3}°",
                        sep.to_degrees(),
                        alpha.to_degrees()
                    ),
                });
            }
            let engaged = r >= boundary;
            let clamped = if engaged { w.scaled(boundary / r) } else { w };
            let sim_err = |e: Error| Error::Simulation {
                sample: k,
                message: e.to_string(),
            };
            Ok(EngagementRecord {
                cycle_pct: s.cycle_pct,
                input: w,
                clamped,
                engaged,
                margin: boundary - r,
                sigma_unclamped: model.eval(&w).map_err(sim_err)?,
                sigma_clamped: model.eval(&clamped).map_err(sim_err)?,
            })
        })
        .collect()
}

/// Maximal runs of engaged samples as inclusive index ranges.
pub fn engagement_intervals(records: &[EngagementRecord]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (k, r) in records.iter().enumerate() {
        if !r.engaged {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.1 + 1 == k => last.1 = k,
            _ => out.push((k, k)),
        }
    }
    out
}

/// Largest σ over the boundary of `hs`: every grid node, `refine` points per
/// α cell on every slice, and the boundary point toward each of `extra`.
pub fn boundary_peak_stress(
    hs: &RadialBoundaryField,
    model: &StressModel,
    refine: usize,
    extra: &[WorkspaceVector],
) -> Result<f64> {
    let g = &hs.grid;
    let mut peak = f64::NEG_INFINITY;
    let sub = refine.max(1);
    for j in 0..g.n_sep {
        for i in 0..g.n_alpha * sub {
            let alpha = g.d_alpha() * i as f64 / sub as f64;
            let r = hs.radius_at(g.sep(j), alpha);
            if r.is_finite() {
                let p = g.plane_point(g.sep(j), alpha, r);
                peak = peak.max(model.eval_plane(&p)?);
            }
        }
    }
    for w in extra {
        let (b, r) = hs.radius_toward(w);
        if r > 0.0 && b.is_finite() {
            peak = peak.max(model.eval(&w.scaled(b / r))?);
        }
    }
    Ok(peak)
}

pub fn peak_sigma(records: &[EngagementRecord], clamped: bool) -> f64 {
    records
        .iter()
        .map(|r| if clamped { r.sigma_clamped } else { r.sigma_unclamped })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmSummary {
    pub peak_sigma: f64,
    pub peak_pct: f64,
    pub engaged_samples: usize,
    pub first_engaged_pct: Option<f64>,
    pub last_engaged_pct: Option<f64>,
}

fn arm_summary(records: &[EngagementRecord], clamped: bool) -> ArmSummary {
    let sigma = |r: &EngagementRecord| if clamped { r.sigma_clamped } else { r.sigma_unclamped };
    let peak = records
        .iter()
        .max_by(|a, b| sigma(a).total_cmp(&sigma(b)))
        .expect("trajectories are non-empty");
    let engaged: Vec<&EngagementRecord> = if clamped {
        records.iter().filter(|r| r.engaged).collect()
    } else {
        Vec::new()
    };
    ArmSummary {
        peak_sigma: sigma(peak),
        peak_pct: peak.cycle_pct,
        engaged_samples: engaged.len(),
        first_engaged_pct: engaged.first().map(|r| r.cycle_pct),
        last_engaged_pct: engaged.last().map(|r| r.cycle_pct),
    }
}

/// The three arms of the surge protocol: the normal cycle with the stop,
/// the surged cycle without it, and the surged cycle with it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurgeReport {
    pub surge: Surge,
    pub normal: ArmSummary,
    pub surge_without_stop: ArmSummary,
    pub surge_with_stop: ArmSummary,
    /// Largest σ on the hard-stop boundary.
    pub boundary_peak_sigma: f64,
    pub engagement_intervals: usize,
    #[serde(skip)]
    pub normal_records: Vec<EngagementRecord>,
    #[serde(skip)]
    pub surge_records: Vec<EngagementRecord>,
}

pub fn run_surge_protocol(
    hs: &RadialBoundaryField,
    model: &StressModel,
    traj: &Trajectory,
    surge: &Surge,
) -> Result<SurgeReport> {
    let normal_records = simulate_engagement(hs, model, traj)?;
    let surged = apply_surge(traj, surge)?;
    let surge_records = simulate_engagement(hs, model, &surged)?;
    let dirs: Vec<WorkspaceVector> = surged.samples.iter().map(|s| s.workspace).collect();
    Ok(SurgeReport {
        surge: *surge,
        normal: arm_summary(&normal_records, true),
        surge_without_stop: arm_summary(&surge_records, false),
        surge_with_stop: arm_summary(&surge_records, true),
        boundary_peak_sigma: boundary_peak_stress(hs, model, 8, &dirs)?,
        engagement_intervals: engagement_intervals(&surge_records).len(),
        normal_records,
        surge_records,
    })
}

pub fn write_engagement_csv<W: Write>(records: &[EngagementRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENGAGEMENT_HEADER)?;
    for r in records {
        w.write_record([
            format_sig(r.cycle_pct),
            format_sig(r.input.delta_a),
            format_sig(r.input.theta_a.to_degrees()),
            format_sig(r.input.theta_sep.to_degrees()),
            format_sig(r.clamped.delta_a),
            format_sig(r.clamped.theta_a.to_degrees()),
            (r.engaged as u8).to_string(),
            format_sig(r.margin),
            format_sig(r.sigma_unclamped),
            format_sig(r.sigma_clamped),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AxisScale, BoundaryLabel, DirectionGrid};

    fn ramp(steps: usize, amp: f64) -> Trajectory {
        Trajectory::sampled("ramp", steps, |pct| {
            let t = pct / 100.0;
            WorkspaceVector::from_degrees(amp * t, amp * t, 30.0)
        })
        .unwrap()
    }

    #[test]
    fn surge_peak_and_tails() {
        let t = ramp(61, 1.0);
        let surge = Surge {
            peak_multiplier: 3.0,
            width_steps: 13.0,
            center_pct: 50.0,
        };
        let s = apply_surge(&t, &surge).unwrap();
        assert_eq!(s.samples[30].workspace.delta_a, t.samples[30].workspace.delta_a * 3.0);
        for (i, (a, b)) in t.samples.iter().zip(&s.samples).enumerate() {
            if a.workspace.delta_a > 0.0 && (i as i64 - 30).abs() > 13 {
                assert!(b.workspace.delta_a / a.workspace.delta_a < 1.05);
            }
            assert_eq!(a.workspace.theta_sep, b.workspace.theta_sep);
        }
        // full width at 5% of the excess spans 13 samples
        let x = 6.5 / surge.sigma_steps();
        assert!(((-0.5 * x * x).exp() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn unit_surge_is_identity() {
        let t = ramp(11, 1.0);
        let s = apply_surge(
            &t,
            &Surge {
                peak_multiplier: 1.0,
                width_steps: 3.0,
                center_pct: 40.0,
            },
        )
        .unwrap();
        assert_eq!(s.samples, t.samples);
    }

    #[test]
    fn projection_onto_boundary() {
        let g = DirectionGrid::new(16, 3, AxisScale::default()).unwrap();
        let hs = RadialBoundaryField::constant(g, 1.0, BoundaryLabel::HardStop).unwrap();
        let model = StressModel::radial(100.0, AxisScale::default()).unwrap();
        let t = Trajectory::sampled("x", 3, |pct| {
            let f = (pct / 100.0).powi(2);
            WorkspaceVector::from_degrees(1.2 * f, 1.6 * f, 10.0)
        })
        .unwrap();
        let rec = simulate_engagement(&hs, &model, &t).unwrap();
        assert!(!rec[0].engaged && !rec[1].engaged);
        assert!(rec[2].engaged);
        assert!((g.scale.radius(&rec[2].clamped) - 1.0).abs() < 1e-12);
        assert!((rec[2].sigma_clamped - 100.0).abs() < 1e-9);
        assert!((rec[2].sigma_unclamped - 200.0).abs() < 1e-9);
        assert_eq!(engagement_intervals(&rec), vec![(2, 2)]);
    }
}
