use hardstop::contact::{
    contact_boundary_field, contact_motion, contact_radius_along_ray, nominal_gap, point_to_profile_distance,
    ContactOptions, ContactScene,
};
use hardstop::error::Error;
use hardstop::field::{AxisScale, DirectionGrid};
use hardstop::geometry::{sample_stage_surface, HardStopPair, SamplingOptions, SixDofMotion, Vec3, WorkspaceVector};

fn sparse(density: f64) -> SamplingOptions {
    SamplingOptions { density, min_points: 0 }
}

#[test]
fn default_sampling_meets_particle_floor() {
    let pair = HardStopPair::design_one();
    let s = sample_stage_surface(&pair.stage, &SamplingOptions::default()).unwrap();
    assert!(s.points.len() >= 50_000, "{}", s.points.len());
    assert!(s.density >= 64.0);
}

#[test]
fn doubling_density_doubles_points() {
    let pair = HardStopPair::design_one();
    let a = sample_stage_surface(&pair.stage, &sparse(32.0)).unwrap();
    let b = sample_stage_surface(&pair.stage, &sparse(64.0)).unwrap();
    let ratio = b.points.len() as f64 / a.points.len() as f64;
    assert!((1.9..=2.2).contains(&ratio), "{ratio}");
}

#[test]
fn sample_reaches_clip_rim() {
    let pair = HardStopPair::design_one();
    let s = sample_stage_surface(&pair.stage, &sparse(16.0)).unwrap();
    let clip = pair.stage.clip_radius();
    let outer = s.points.iter().map(|p| p.xy().norm()).fold(0.0, f64::max);
    assert!(outer <= clip + 1e-9);
    assert!(clip - outer < 1e-9, "outermost ring at {outer}, rim at {clip}");
}

#[test]
fn undisplaced_clearance_matches_nominal_gap() {
    let pair = HardStopPair::design_one();
    let scene = ContactScene::sampled(&pair, &SamplingOptions::default()).unwrap();
    let gap = nominal_gap(&pair);
    let c = scene.min_clearance(&SixDofMotion::zero());
    assert!(c >= gap - 1e-9);
    assert!(c - gap < 5e-3, "{c} vs {gap}");
}

#[test]
fn ground_points_have_zero_distance() {
    let pair = HardStopPair::design_one();
    let g = pair.ground;
    let (lo, hi) = g.u_range();
    for k in 0..=20 {
        let u = lo + (hi - lo) * k as f64 / 20.0;
        let p = g.surface_point(u, 0.3 * k as f64).unwrap();
        assert!(point_to_profile_distance(&p, &g, 0.0).abs() < 1e-7, "u={u}");
    }
}

#[test]
fn clearance_is_rotationally_symmetric() {
    let pair = HardStopPair::design_one();
    let scene = ContactScene::sampled(&pair, &SamplingOptions::default()).unwrap();
    for (d, t, sep) in [(0.3, 0.5, 30.0), (0.8, 1.2, 120.0), (1.1, 0.0, 0.0)] {
        let w = WorkspaceVector::from_degrees(d, t, sep).unwrap();
        let base = scene.min_clearance(&contact_motion(&w, 0.0, 0.0));
        for az in [0.7, 2.0, 4.4] {
            let c = scene.min_clearance(&contact_motion(&w, az, 0.0));
            assert!((c - base).abs() < 5e-3, "{c} vs {base} at azimuth {az}");
        }
    }
}

#[test]
fn boundary_field_brackets_contact() {
    let pair = HardStopPair::design_one();
    let scene = ContactScene::sampled(&pair, &sparse(16.0)).unwrap();
    let grid = DirectionGrid::new(12, 2, AxisScale::default()).unwrap();
    let (field, report) = contact_boundary_field(&scene, &grid, 0.0, &ContactOptions::default()).unwrap();
    assert!(field.is_bounded());
    assert!(report.search.is_some());
    for (j, i, r) in field.iter() {
        let at = |k: f64| {
            scene.in_contact(&contact_motion(
                &grid.workspace_point(grid.sep(j), grid.alpha(i), k),
                0.0,
                0.0,
            ))
        };
        assert!(!at(0.99 * r) && at(1.01 * r), "ray ({j}, {i}) r={r}");
    }
    // α and α + π describe the same motions.
    for i in 0..6 {
        assert_eq!(field.radius(1, i), field.radius(1, i + 6));
    }
}

#[test]
fn deep_settlement_reports_zero_clearance() {
    let pair = HardStopPair::design_one();
    let scene = ContactScene::sampled(&pair, &sparse(4.0)).unwrap();
    let grid = DirectionGrid::new(8, 1, AxisScale::default()).unwrap();
    let search = ContactOptions::default().search_for(&scene, &grid);
    let err = contact_radius_along_ray(&scene, &grid, 0.0, 0.0, 0.0, -2.0, &search).unwrap_err();
    assert!(matches!(err, Error::ZeroClearance { .. }));
    let err = contact_boundary_field(&scene, &grid, -2.0, &ContactOptions::default()).unwrap_err();
    assert!(matches!(
        err,
        Error::ZeroClearance {
            sep_index: 0,
            alpha_index: 0,
            ..
        }
    ));
}

#[test]
fn pure_drop_touches_within_gap_scale() {
    let pair = HardStopPair::design_one();
    let scene = ContactScene::sampled(&pair, &sparse(16.0)).unwrap();
    let gap = nominal_gap(&pair);
    let drop = |dz: f64| SixDofMotion::new(Vec3::new(0.0, 0.0, -dz), Vec3::zeros()).unwrap();
    assert!(!scene.in_contact(&drop(0.5 * gap)));
    // The closest approach is not vertical in general; a drop of a few gaps
    // must still close it.
    assert!(scene.in_contact(&drop(4.0 * gap)));
}
