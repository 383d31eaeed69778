//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use hardstop::contact::{
    contact_boundary_field, contact_motion, contact_radius_along_ray, ContactOptions, ContactScene,
};
use hardstop::engage::{engagement_intervals, run_surge_protocol, Surge};
use hardstop::field::{format_sig, AxisScale, DirectionGrid, PlanePoint, RadialBoundaryField};
use hardstop::geometry::{rodrigues_rotation, HardStopPair, SamplingOptions, WorkspaceVector};
use hardstop::optimizer::{
    optimize, overshoot_penalty, DesignParam, DesignVariable, HardStopProblem, Objective, SearchOptions, StressTarget,
    TargetRole,
};
use hardstop::spaces::{difference_volumes, field_volume, orthotope_field, volume_fraction, AxisLimits};
use hardstop::stress::{default_stress_search, safe_boundary_field, StressModel, TabulatedMeta, TABULATED_HEADER};
use hardstop::trajectory::Trajectory;
use nalgebra::{Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIGMA_FATIGUE: f64 = 480.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn diamond_model() -> StressModel {
    StressModel::linear(100.0, 50.0).unwrap()
}

fn beam() -> StressModel {
    StressModel::beam(50.0, 104_800.0, 1.75, 50.0).unwrap()
}

fn grid(n_alpha: usize, n_sep: usize) -> DirectionGrid {
    DirectionGrid::new(n_alpha, n_sep, AxisScale::default()).unwrap()
}

fn diamond_field(g: &DirectionGrid) -> RadialBoundaryField {
    safe_boundary_field(&diamond_model(), SIGMA_FATIGUE, g, 0.0, &default_stress_search()).unwrap()
}

fn c1_diamond() -> Outcome {
    let t = Instant::now();
    let g = grid(360, 1);
    let f = diamond_field(&g);
    let worst = (0..360)
        .map(|i| {
            let a = g.alpha(i);
            (f.radius(0, i) - SIGMA_FATIGUE / (100.0 * a.cos().abs() + 50.0 * a.sin().abs())).abs()
        })
        .fold(0.0, f64::max);
    let el = t.elapsed();
    check(
        worst < 1e-4 && el < Duration::from_secs(1),
        format!("max |r - r_exact| = {worst:.2e} over 360 rays in {el:.2?}"),
    )
}

/// Fraction of the diamond covered by the box with half-widths (p, q).
fn box_fraction(p: f64, q: f64, g: &DirectionGrid, sigma: &RadialBoundaryField) -> f64 {
    let lim = AxisLimits::symmetric(Some(p * g.scale.delta_ref), Some(q * g.scale.theta_ref));
    volume_fraction(&orthotope_field(&lim, g).unwrap(), sigma).unwrap()
}

fn c2_orthotope() -> Outcome {
    let t = Instant::now();
    let g = grid(360, 1);
    let sigma = diamond_field(&g);
    let (a, b) = (SIGMA_FATIGUE / 100.0, SIGMA_FATIGUE / 50.0);
    let n = 120;
    let mut best = (0.0, 0.0, 0.0);
    for i in 1..=n {
        for j in 1..=n {
            let (p, q) = (a * i as f64 / n as f64, b * j as f64 / n as f64);
            if p / a + q / b > 1.0 + 1e-12 {
                continue;
            }
            let phi = box_fraction(p, q, &g, &sigma);
            if phi > best.0 {
                best = (phi, p, q);
            }
        }
    }
    let el = t.elapsed();
    check(
        (best.0 - 0.5).abs() <= 0.01 && el < Duration::from_secs(10),
        format!(
            "best box half-widths ({:.3}, {:.3}) give phi = {:.5} in {el:.2?}",
            best.1, best.2, best.0
        ),
    )
}

fn c3_rodrigues() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_exp: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    for _ in 0..1000 {
        let r = rng.gen_range(0.0..3.1);
        let a = rng.gen_range(0.0..2.0 * PI);
        let (tx, ty) = (r * a.cos(), r * a.sin());
        let rot = rodrigues_rotation(Vector2::new(tx, ty)).unwrap();
        let k = Matrix3::new(0.0, 0.0, ty, 0.0, 0.0, -tx, -ty, tx, 0.0);
        worst_exp = worst_exp.max((rot - k.exp()).abs().max());
        worst_orth = worst_orth.max((rot.transpose() * rot - Matrix3::identity()).abs().max());
        worst_det = worst_det.max((rot.determinant() - 1.0).abs());
    }
    check(
        worst_exp < 1e-12 && worst_orth < 1e-12 && worst_det < 1e-12,
        format!("vs exp: {worst_exp:.1e}, |RtR-I|: {worst_orth:.1e}, |det-1|: {worst_det:.1e}"),
    )
}

fn c4_contact_oracle() -> Outcome {
    let pair = HardStopPair::design_one();
    let scene = ContactScene::sampled(&pair, &SamplingOptions::default()).unwrap();
    let dense = ContactScene::sampled(
        &pair,
        &SamplingOptions {
            density: 640.0,
            min_points: 500_000,
        },
    )
    .unwrap();
    let g = grid(360, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut agree = 0;
    let mut closest: f64 = f64::INFINITY;
    for _ in 0..100 {
        let w = g.workspace_point(
            rng.gen_range(0.0..FRAC_PI_2),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(0.0..3.5),
        );
        let m = contact_motion(&w, rng.gen_range(0.0..2.0 * PI), 0.0);
        let (a, b) = (scene.min_clearance(&m), dense.min_clearance(&m));
        closest = closest.min(b.abs());
        if (a > 0.0) == (b > 0.0) {
            agree += 1;
        } else {
            eprintln!("mismatch coarse {a:.3e} dense {b:.3e} at {w:?}");
        }
    }
    let opts = ContactOptions::default();
    let search = opts.search_for(&scene, &g);
    let mut brackets = 0;
    for _ in 0..10 {
        let (sep, alpha) = (rng.gen_range(0.0..FRAC_PI_2), rng.gen_range(0.0..2.0 * PI));
        let r = contact_radius_along_ray(&scene, &g, sep, alpha, 0.0, 0.0, &search)
            .unwrap()
            .hit
            .radius();
        let at = |k: f64| scene.in_contact(&contact_motion(&g.workspace_point(sep, alpha, k), 0.0, 0.0));
        if !at(0.99 * r) && at(1.01 * r) {
            brackets += 1;
        }
    }
    check(
        agree == 100 && brackets == 10,
        format!(
            "sign agreement {agree}/100 vs {} points (closest |d| {closest:.1e} mm), brackets {brackets}/10",
            dense.point_count()
        ),
    )
}

fn c5_skew() -> Outcome {
    let t = Instant::now();
    let scene = ContactScene::sampled(&HardStopPair::design_one(), &SamplingOptions::default()).unwrap();
    let g = grid(360, 1);
    let (f, _) = contact_boundary_field(&scene, &g, 0.0, &ContactOptions::default()).unwrap();
    let pure = f.radius(0, 90) * g.scale.theta_ref;
    let (mut best, mut at) = (0.0, 0);
    for i in 1..90 {
        let th = f.radius(0, i) * g.alpha(i).sin() * g.scale.theta_ref;
        if th > best {
            best = th;
            at = i;
        }
    }
    let el = t.elapsed();
    check(
        best > pure && el < Duration::from_secs(120),
        format!(
            "max theta_a in Q1 {:.4} deg at alpha {at} deg vs {:.4} deg at delta_a = 0, {el:.1?}",
            best.to_degrees(),
            pure.to_degrees()
        ),
    )
}

fn c6_beam_skew() -> Outcome {
    let m = beam();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ok = 0;
    for _ in 0..1000 {
        let (d, t) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..0.06));
        let a = m.eval(&WorkspaceVector::new(d, t, 0.0).unwrap()).unwrap();
        let b = m.eval(&WorkspaceVector::new(d, t, PI).unwrap()).unwrap();
        if a <= b {
            ok += 1;
        }
    }
    check(ok == 1000, format!("{ok}/1000 pairs with sigma(0) <= sigma(180)"))
}

fn c7_metrics() -> Outcome {
    // additivity on a kinked pair
    let g = grid(360, 7);
    let sigma = safe_boundary_field(&beam(), SIGMA_FATIGUE, &g, 0.0, &default_stress_search()).unwrap();
    let hs = diamond_field(&g);
    let d = difference_volumes(&hs, &sigma).unwrap();
    let (vh, vs) = (field_volume(&hs).unwrap(), field_volume(&sigma).unwrap());
    let add = ((vh - d.overlap - d.unprotected).abs()).max((vs - d.overlap - d.overprotected).abs());

    // rescaling: two smooth anisotropic radial models
    let smooth_sigma = StressModel::radial(100.0, AxisScale::new(1.0, 1.3f64.to_radians()).unwrap()).unwrap();
    let smooth_hs = StressModel::radial(100.0, AxisScale::new(0.6, 1.5f64.to_radians()).unwrap()).unwrap();
    let phi_at = |scale: AxisScale| {
        let g = DirectionGrid::new(360, 7, scale).unwrap();
        let s = safe_boundary_field(&smooth_sigma, SIGMA_FATIGUE, &g, 0.0, &default_stress_search()).unwrap();
        let h = safe_boundary_field(&smooth_hs, SIGMA_FATIGUE, &g, 0.0, &default_stress_search()).unwrap();
        volume_fraction(&h, &s).unwrap()
    };
    let phi1 = phi_at(AxisScale::default());
    let phi2 = phi_at(AxisScale::new(2.5, 0.7f64.to_radians()).unwrap());
    let scale_rel = ((phi2 - phi1) / phi1).abs();

    // refinement of the kinked pair
    let g2 = grid(720, 14);
    let sigma2 = safe_boundary_field(&beam(), SIGMA_FATIGUE, &g2, 0.0, &default_stress_search()).unwrap();
    let hs2 = diamond_field(&g2);
    let d2 = difference_volumes(&hs2, &sigma2).unwrap();
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            ((a - b) / a.abs().max(b.abs())).abs()
        }
    };
    let refine = [
        rel(vh, field_volume(&hs2).unwrap()),
        rel(vs, field_volume(&sigma2).unwrap()),
        rel(d.unprotected, d2.unprotected),
        rel(d.overprotected, d2.overprotected),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    check(
        add < 1e-9 && scale_rel < 1e-6 && refine < 0.01,
        format!(
            "additivity {add:.1e}, rescaling {scale_rel:.1e} rel, refinement {:.3}%",
            refine * 100.0
        ),
    )
}

fn tabulate(model: &StressModel, sep_step_deg: f64, d_max: f64, t_max_deg: f64, n: usize) -> String {
    let mut out = String::new();
    out.push_str(&TABULATED_HEADER.join(","));
    out.push('\n');
    let n_sep = (90.0 / sep_step_deg).round() as usize;
    for k in 0..=n_sep {
        let sep = k as f64 * sep_step_deg;
        for i in 0..=n {
            for j in 0..=n {
                let d = -d_max + 2.0 * d_max * i as f64 / n as f64;
                let t = -t_max_deg + 2.0 * t_max_deg * j as f64 / n as f64;
                let p = PlanePoint {
                    sep: sep.to_radians(),
                    delta: d,
                    theta: t.to_radians(),
                };
                let s = model.eval_plane(&p).unwrap();
                out.push_str(&format!(
                    "{sep},{},{},{}\n",
                    format_sig(d),
                    format_sig(t),
                    format_sig(s)
                ));
            }
        }
    }
    out
}

fn c8_tabulated() -> Outcome {
    let radial = StressModel::radial(100.0, AxisScale::default()).unwrap();
    let models = [("radial", radial), ("beam", beam())];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = Vec::new();
    for (name, m) in &models {
        let text = tabulate(m, 5.0, 3.0, 3.0, 120);
        let tab = StressModel::load_tabulated(text.as_bytes(), TabulatedMeta::default()).unwrap();
        let mut w: f64 = 0.0;
        let mut over = 0;
        let n = 2000;
        for _ in 0..n {
            let p = loop {
                let p = PlanePoint {
                    sep: rng.gen_range(0.0..FRAC_PI_2),
                    delta: rng.gen_range(-3.0..3.0),
                    theta: rng.gen_range(-3.0f64..3.0).to_radians(),
                };
                if p.delta.hypot(p.theta.to_degrees()) >= 0.5 {
                    break p;
                }
            };
            let exact = m.eval_plane(&p).unwrap();
            let e = ((tab.eval_plane(&p).unwrap() - exact) / exact).abs();
            if e >= 0.005 {
                over += 1;
            }
            w = w.max(e);
        }
        worst.push((name, w, over as f64 / n as f64));
    }
    check(
        worst.iter().all(|(_, w, _)| *w < 0.005),
        worst
            .iter()
            .map(|(n, w, f)| {
                format!(
                    "{n} max rel err {:.3}% ({:.2}% of points at or above 0.5%)",
                    w * 100.0,
                    f * 100.0
                )
            })
            .collect::<Vec<_>>()
            .join(", "),
    )
}

/// Box with δ half-width p inscribed in the diamond, scored by φ minus an
/// overshoot penalty.
struct RectangleToy {
    grid: DirectionGrid,
    sigma: RadialBoundaryField,
    a: f64,
    b: f64,
}

impl RectangleToy {
    fn new() -> Self {
        let grid = grid(360, 1);
        let sigma = diamond_field(&grid);
        Self {
            grid,
            sigma,
            a: SIGMA_FATIGUE / 100.0,
            b: SIGMA_FATIGUE / 50.0,
        }
    }
}

impl Objective for RectangleToy {
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.02 * self.a, 0.98 * self.a)]
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let q = self.b * (1.0 - x[0] / self.a);
        let lim = AxisLimits::symmetric(Some(x[0]), Some(q.to_radians()));
        let hs = orthotope_field(&lim, &self.grid).unwrap();
        volume_fraction(&hs, &self.sigma).unwrap() - 10.0 * overshoot_penalty(&hs, &self.sigma)
    }
}

fn c9_optimizer() -> Outcome {
    let toy = RectangleToy::new();
    let opts = SearchOptions {
        max_evals: 200,
        random_starts: 3,
        seed: 9,
        ..Default::default()
    };
    let r = optimize(&toy, &opts).unwrap();
    let brute = (0..=1000)
        .map(|i| {
            let p = toy.a * (0.02 + 0.96 * i as f64 / 1000.0);
            toy.evaluate(&[p])
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let close = ((r.objective - brute) / brute).abs();
    let recomputed = (toy.evaluate(&r.best) - r.objective).abs();
    let again = optimize(&toy, &opts).unwrap();
    let toy_same = again
        .best
        .iter()
        .map(|x| x.to_bits())
        .eq(r.best.iter().map(|x| x.to_bits()));

    // the surface problem on a small grid
    let g = grid(8, 1);
    let problem = HardStopProblem::new(
        HardStopPair::design_one(),
        vec![
            DesignVariable {
                param: DesignParam::ZAb,
                lo: 0.55,
                hi: 0.9,
            },
            DesignVariable {
                param: DesignParam::GroundThetaO,
                lo: -12.0,
                hi: -6.0,
            },
        ],
        vec![StressTarget {
            name: "fatigue".into(),
            model: beam(),
            sigma_cr: SIGMA_FATIGUE,
            role: TargetRole::MustContainHs,
        }],
        0,
        Vec::new(),
        10.0,
        0.0,
        g,
        g,
    )
    .unwrap()
    .with_search_sampling(SamplingOptions {
        density: 2.0,
        min_points: 0,
    });
    let popts = SearchOptions {
        max_evals: 5,
        random_starts: 1,
        seed: 9,
        ..Default::default()
    };
    let p1 = optimize(&problem, &popts).unwrap();
    let p2 = optimize(&problem, &popts).unwrap();
    let design_recomputed = (problem.evaluate(&p1.best) - p1.objective).abs();
    let design_same = p1
        .best
        .iter()
        .map(|x| x.to_bits())
        .eq(p2.best.iter().map(|x| x.to_bits()));
    check(
        close < 0.02 && recomputed < 1e-6 && design_recomputed < 1e-6 && toy_same && design_same,
        format!(
            "toy phi {:.5} at p = {:.4} vs brute force {brute:.5} ({:.2}%), recompute drift {recomputed:.1e} / {design_recomputed:.1e}, repeatable {}",
            r.objective,
            r.best[0],
            close * 100.0,
            toy_same && design_same
        ),
    )
}

fn c10_engagement() -> Outcome {
    let t = Instant::now();
    let scene = ContactScene::sampled(&HardStopPair::design_one(), &SamplingOptions::default()).unwrap();
    let g = grid(72, 1);
    let (hs, _) = contact_boundary_field(&scene, &g, 0.0, &ContactOptions::default()).unwrap();
    let model = beam();
    // unimodal cycle along one ray of slice 0, peaking at 90% of the boundary
    let alpha = 40f64.to_radians();
    let peak = 0.9 * hs.radius_at(0.0, alpha);
    let traj = Trajectory::sampled("synthetic", 61, |pct| {
        let k = peak * (PI * pct / 100.0).sin().powi(2);
        Ok(g.workspace_point(0.0, alpha, k))
    })
    .unwrap();
    let surge = Surge {
        peak_multiplier: 3.0,
        width_steps: 13.0,
        center_pct: 50.0,
    };
    let rep = run_surge_protocol(&hs, &model, &traj, &surge).unwrap();
    let intervals = engagement_intervals(&rep.surge_records);
    let ordered = match intervals.as_slice() {
        [(a, b)] => {
            let peak_idx = rep
                .surge_records
                .iter()
                .position(|r| r.cycle_pct == rep.surge_without_stop.peak_pct)
                .unwrap();
            *a < peak_idx && peak_idx < *b
        }
        _ => false,
    };
    let el = t.elapsed();
    let pass = rep.normal.engaged_samples == 0
        && rep.surge_with_stop.peak_sigma <= rep.boundary_peak_sigma
        && rep.surge_without_stop.peak_sigma > SIGMA_FATIGUE
        && ordered
        && el < Duration::from_secs(30);
    check(
        pass,
        format!(
            "with stop {:.1} MPa <= boundary {:.1} MPa, without stop {:.1} MPa, engaged {:.1}..{:.1}% around peak {}%, {el:.1?}",
            rep.surge_with_stop.peak_sigma,
            rep.boundary_peak_sigma,
            rep.surge_without_stop.peak_sigma,
            rep.surge_with_stop.first_engaged_pct.unwrap_or(f64::NAN),
            rep.surge_with_stop.last_engaged_pct.unwrap_or(f64::NAN),
            rep.surge_without_stop.peak_pct
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("diamond safe space", c1_diamond),
        ("orthotope in diamond", c2_orthotope),
        ("rotation oracle", c3_rodrigues),
        ("contact oracle", c4_contact_oracle),
        ("torus-cap skew", c5_skew),
        ("beam skew", c6_beam_skew),
        ("metrics consistency", c7_metrics),
        ("tabulated round trip", c8_tabulated),
        ("optimizer sanity", c9_optimizer),
        ("engagement", c10_engagement),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", k + 1);
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let out = run();
        println!(
            "acceptance {id:>2} {name:<22} {}  {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
