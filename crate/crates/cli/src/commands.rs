//! Subcommand pipelines.

use anyhow::{Context, Result};
use hardstop::contact::{contact_boundary_field, ContactOptions, ContactScene, ExtractionReport};
use hardstop::engage::{apply_surge, run_surge_protocol, write_engagement_csv, ArmSummary};
use hardstop::field::{format_sig, RadialBoundaryField};
use hardstop::geometry::{HardStopPair, SamplingOptions};
use hardstop::optimizer::{optimize_design, HardStopProblem, SearchOptions};
use hardstop::spaces::{space_metrics, trajectory_containment, GridSummary, SpaceMetrics, CONTAINMENT_TOL};
use hardstop::stress::{default_stress_search, safe_boundary_field, stress_heatmap, TABULATED_HEADER};
use hardstop::trajectory::Trajectory;
use serde::Serialize;

use crate::config::{GeometryConfig, RunConfig};
use crate::output::{slice_tag, OutDir};

/// Outcome of a command that ran to completion.
pub enum Finished {
    Ok,
    /// Results were written, but the design violates a constraint.
    Infeasible(String),
}

fn start(cfg: &RunConfig) -> Result<OutDir> {
    let mut out = OutDir::create(&cfg.output_dir)?;
    out.text("effective_config.toml", &cfg.to_toml())?;
    Ok(out)
}

fn write_boundary(out: &mut OutDir, name: &str, f: &RadialBoundaryField) -> Result<()> {
    out.write(name, |w| Ok(f.write_csv(w)?))
}

pub fn stress_map(cfg: &RunConfig) -> Result<Finished> {
    let targets = cfg.stress_targets()?;
    let mut out = start(cfg)?;
    let m = &cfg.stress_map;
    for t in &targets {
        for &sep in &m.slices_deg {
            let rows = stress_heatmap(
                &t.model,
                sep.to_radians(),
                m.delta_max_mm,
                m.theta_max_deg.to_radians(),
                m.steps,
            )
            .with_context(|| format!("heatmap of {} at {sep}°", t.name))?;
            out.write(&format!("heatmap_{}_{}.csv", t.name, slice_tag(sep)), |w| {
                writeln!(w, "{}", TABULATED_HEADER.join(","))?;
                for (_, d, th, s) in rows {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        format_sig(sep),
                        format_sig(d),
                        format_sig(th.to_degrees()),
                        format_sig(s)
                    )?;
                }
                Ok(())
            })?;
        }
    }
    report(&out);
    Ok(Finished::Ok)
}

#[derive(Serialize)]
struct ExtractionSummary {
    point_count: usize,
    nominal_gap_mm: f64,
    r_max_scaled: f64,
    tol_scaled: f64,
    non_convex_rays: Vec<(usize, usize)>,
}

fn extract_hs(cfg: &RunConfig, pair: &HardStopPair) -> Result<(RadialBoundaryField, ExtractionSummary)> {
    let scene = ContactScene::sampled(pair, &cfg.sampling())?;
    let opts = ContactOptions {
        sampling: cfg.sampling(),
        ..Default::default()
    };
    let (field, rep): (RadialBoundaryField, ExtractionReport) =
        contact_boundary_field(&scene, &cfg.grid(), cfg.delta_z_mm, &opts)
            .context("extracting the contact boundary")?;
    let search = rep.search.unwrap_or_else(|| opts.search_for(&scene, &cfg.grid()));
    Ok((
        field,
        ExtractionSummary {
            point_count: scene.point_count(),
            nominal_gap_mm: scene.nominal_gap(),
            r_max_scaled: search.r_max,
            tol_scaled: search.tol,
            non_convex_rays: rep.non_convex,
        },
    ))
}

/// The configured precomputed boundary, or a fresh extraction.
fn hs_field(cfg: &RunConfig) -> Result<(RadialBoundaryField, Option<ExtractionSummary>)> {
    let pair = cfg.pair().context("building the hard-stop pair")?;
    if let Some(f) = cfg.hs_boundary()? {
        return Ok((f, None));
    }
    let (f, s) = extract_hs(cfg, &pair)?;
    Ok((f, Some(s)))
}

pub fn boundary(cfg: &RunConfig) -> Result<Finished> {
    let pair = cfg.pair().context("building the hard-stop pair")?;
    let (field, summary) = extract_hs(cfg, &pair)?;
    let mut out = start(cfg)?;
    write_boundary(&mut out, "boundary_hs.csv", &field)?;
    #[derive(Serialize)]
    struct Doc {
        grid: GridSummary,
        delta_z_mm: f64,
        extraction: ExtractionSummary,
    }
    out.json(
        "boundary.json",
        &Doc {
            grid: (&field.grid).into(),
            delta_z_mm: cfg.delta_z_mm,
            extraction: summary,
        },
    )?;
    report(&out);
    Ok(Finished::Ok)
}

#[derive(Serialize)]
struct TargetMetrics {
    name: String,
    role: hardstop::optimizer::TargetRole,
    sigma_cr_mpa: f64,
    metrics: SpaceMetrics,
}

#[derive(Serialize)]
struct TrajectoryCheck {
    name: String,
    samples: usize,
    passed: bool,
    min_margin_scaled: f64,
    violations: Vec<usize>,
}

fn check_trajectories(hs: &RadialBoundaryField, trajs: &[Trajectory]) -> Vec<TrajectoryCheck> {
    trajs
        .iter()
        .map(|t| {
            let r = trajectory_containment(hs, t);
            TrajectoryCheck {
                name: t.label.clone(),
                samples: t.len(),
                passed: r.passed,
                min_margin_scaled: r.min_margin,
                violations: r.violations,
            }
        })
        .collect()
}

pub fn evaluate(cfg: &RunConfig) -> Result<Finished> {
    let targets = cfg.stress_targets()?;
    let trajs = cfg.trajectories()?;
    let (hs, extraction) = hs_field(cfg)?;
    let grid = cfg.grid();
    let mut sigma = Vec::new();
    for t in &targets {
        let f = safe_boundary_field(&t.model, t.sigma_cr, &grid, cfg.delta_z_mm, &default_stress_search())
            .with_context(|| format!("safe boundary of {}", t.name))?;
        sigma.push(f);
    }
    let mut metrics = Vec::new();
    for (t, f) in targets.iter().zip(&sigma) {
        metrics.push(TargetMetrics {
            name: t.name.clone(),
            role: t.role,
            sigma_cr_mpa: t.sigma_cr,
            metrics: space_metrics(&hs, f, CONTAINMENT_TOL).with_context(|| format!("metrics against {}", t.name))?,
        });
    }
    let checks = check_trajectories(&hs, &trajs);

    let mut out = start(cfg)?;
    write_boundary(&mut out, "boundary_hs.csv", &hs)?;
    for (t, f) in targets.iter().zip(&sigma) {
        write_boundary(&mut out, &format!("boundary_sigma_{}.csv", t.name), f)?;
    }
    #[derive(Serialize)]
    struct Doc {
        grid: GridSummary,
        delta_z_mm: f64,
        containment_tol: f64,
        extraction: Option<ExtractionSummary>,
        targets: Vec<TargetMetrics>,
        trajectories: Vec<TrajectoryCheck>,
    }
    out.json(
        "metrics.json",
        &Doc {
            grid: (&grid).into(),
            delta_z_mm: cfg.delta_z_mm,
            containment_tol: CONTAINMENT_TOL,
            extraction,
            targets: metrics,
            trajectories: checks,
        },
    )?;
    report(&out);
    Ok(Finished::Ok)
}

pub fn optimize(cfg: &RunConfig) -> Result<Finished> {
    let o = cfg.optimization.as_ref().ok_or_else(|| crate::config::ConfigError {
        path: "optimization".into(),
        message: "the optimize command needs an [optimization] block".into(),
    })?;
    let primary = cfg.target_index(o.primary.as_ref(), "optimization.primary")?;
    let problem = HardStopProblem::new(
        cfg.pair().context("building the base hard-stop pair")?,
        cfg.design_variables(),
        cfg.stress_targets()?,
        primary,
        cfg.trajectories()?,
        o.penalty_weight,
        cfg.delta_z_mm,
        cfg.grid_with(o.search_n_alpha, o.search_n_sep),
        cfg.grid(),
    )?
    .with_search_sampling(SamplingOptions {
        density: o.search_density,
        min_points: 0,
    })
    .with_final_sampling(cfg.sampling());
    let opts = SearchOptions {
        max_evals: o.max_evals,
        random_starts: o.random_starts,
        seed: o.seed,
        ..Default::default()
    };
    let result = optimize_design(&problem, &opts)?;
    let best_pair = problem.pair_at(&result.best.params)?;

    let mut out = start(cfg)?;
    out.json("optimization.json", &result)?;
    let geometry = GeometryConfig::of(&best_pair);
    out.text("optimized_geometry.toml", &toml::to_string(&geometry)?)?;
    out.write("optimized_geometry.csv", |w| {
        writeln!(w, "parameter,stage,ground,unit")?;
        let (s, g) = (&geometry.stage, &geometry.ground);
        let opt = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
        writeln!(w, "d_L,{},{},mm", format_sig(s.d_l), format_sig(g.d_l))?;
        writeln!(w, "d_S,{},{},mm", format_sig(s.d_s), format_sig(g.d_s))?;
        writeln!(w, "R_C,{},{},mm", format_sig(s.r_c), format_sig(g.r_c))?;
        writeln!(
            w,
            "theta_o,{},{},deg",
            format_sig(s.theta_o_deg),
            format_sig(g.theta_o_deg)
        )?;
        writeln!(w, "clip_diameter,{},{},mm", opt(s.clip_diameter), opt(g.clip_diameter))?;
        writeln!(w, "z_ab,{},,mm", format_sig(geometry.z_ab))?;
        writeln!(w, "z_oa,{},,mm", format_sig(geometry.z_oa))?;
        writeln!(w, "z_lo,{},,mm", format_sig(geometry.z_lo))?;
        Ok(())
    })?;
    report(&out);
    println!(
        "phi_hs {:.6} -> {:.6} (final grid), objective {:.6}",
        result.start.metrics[primary].1.phi_hs, result.best.metrics[primary].1.phi_hs, result.best.objective
    );
    if result.best.feasible {
        Ok(Finished::Ok)
    } else {
        Ok(Finished::Infeasible(
            "the best design does not keep the contact boundary inside every must-contain safe space".into(),
        ))
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Finished> {
    let s = cfg.simulation.as_ref().ok_or_else(|| crate::config::ConfigError {
        path: "simulation".into(),
        message: "the simulate command needs a [simulation] block".into(),
    })?;
    let k = cfg.target_index(s.target.as_ref(), "simulation.target")?;
    let target = cfg.stress_targets()?.swap_remove(k);
    let traj = cfg
        .trajectories()?
        .into_iter()
        .find(|t| t.label == s.trajectory)
        .expect("validated trajectory name");
    let surge = cfg.surge().expect("simulation block present");
    let (hs, _) = hs_field(cfg)?;
    let rep = run_surge_protocol(&hs, &target.model, &traj, &surge)?;
    let surged = apply_surge(&traj, &surge)?;

    let mut out = start(cfg)?;
    out.write("engagement_normal.csv", |w| {
        Ok(write_engagement_csv(&rep.normal_records, w)?)
    })?;
    out.write("engagement_surge.csv", |w| {
        Ok(write_engagement_csv(&rep.surge_records, w)?)
    })?;
    out.write("trajectory_surge.csv", |w| Ok(surged.write_csv(w)?))?;
    #[derive(Serialize)]
    struct Row<'a> {
        arm: &'a str,
        #[serde(flatten)]
        summary: ArmSummary,
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        trajectory: &'a str,
        target: &'a str,
        sigma_cr_mpa: f64,
        report: &'a hardstop::engage::SurgeReport,
        peaks: Vec<Row<'a>>,
    }
    out.json(
        "simulation.json",
        &Doc {
            trajectory: &traj.label,
            target: &target.name,
            sigma_cr_mpa: target.sigma_cr,
            report: &rep,
            peaks: vec![
                Row {
                    arm: "normal",
                    summary: rep.normal,
                },
                Row {
                    arm: "surge-without-stop",
                    summary: rep.surge_without_stop,
                },
                Row {
                    arm: "surge-with-stop",
                    summary: rep.surge_with_stop,
                },
            ],
        },
    )?;
    report(&out);
    println!("arm                 peak sigma (MPa)  at cycle %  engaged samples");
    for (arm, a) in [
        ("normal", rep.normal),
        ("surge without stop", rep.surge_without_stop),
        ("surge with stop", rep.surge_with_stop),
    ] {
        println!(
            "{arm:<19} {:>16.3}  {:>10.2}  {:>15}",
            a.peak_sigma, a.peak_pct, a.engaged_samples
        );
    }
    println!("boundary peak sigma {:.3} MPa", rep.boundary_peak_sigma);
    Ok(Finished::Ok)
}

fn report(out: &OutDir) {
    for p in out.written() {
        println!("wrote {}", p.display());
    }
}
