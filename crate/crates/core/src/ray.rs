//! First-crossing search along a ray from the origin.
//!
//! Used for both contact and stress boundaries: a predicate is false inside
//! the region and true once the boundary has been reached.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySearch {
    /// Largest scaled radius examined.
    pub r_max: f64,
    /// Final bracket width, scaled units.
    pub tol: f64,
    /// Evenly spaced probes used to bracket the first crossing.
    pub march_steps: usize,
    /// Evenly spaced probes below the result checked for radial convexity.
    pub audit_points: usize,
}

impl RaySearch {
    pub fn new(r_max: f64, tol: f64) -> Self {
        Self {
            r_max,
            tol,
            march_steps: 32,
            audit_points: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayHit {
    /// First crossing radius (bracket midpoint).
    At(f64),
    /// No crossing up to `r_max`.
    Unbounded,
}

impl RayHit {
    pub fn radius(&self) -> f64 {
        match self {
            RayHit::At(r) => *r,
            RayHit::Unbounded => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayOutcome {
    pub hit: RayHit,
    /// Final bracket: `lo` is inside, `hi` is crossed.
    pub bracket: (f64, f64),
    /// The audit found a crossing below an earlier estimate.
    pub non_convex: bool,
}

/// Smallest crossing radius of `crossed` on (0, r_max].
///
/// Marches to bracket the first crossing, bisects, then audits points below
/// the result. An audit hit moves the search below it; the reported radius is
/// always the smallest crossing seen.
pub fn first_crossing<E>(search: &RaySearch, mut crossed: impl FnMut(f64) -> Result<bool, E>) -> Result<RayOutcome, E> {
    let n = search.march_steps.max(1);
    let step = search.r_max / n as f64;
    let mut bracket = None;
    for i in 1..=n {
        let k = step * i as f64;
        if crossed(k)? {
            bracket = Some((step * (i - 1) as f64, k));
            break;
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(RayOutcome {
            hit: RayHit::Unbounded,
            bracket: (search.r_max, f64::INFINITY),
            non_convex: false,
        });
    };

    let mut non_convex = false;
    for _ in 0..8 {
        while hi - lo > search.tol {
            let mid = 0.5 * (lo + hi);
            if crossed(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let m = search.audit_points;
        let mut violation = None;
        for j in 1..=m {
            let k = r * j as f64 / (m + 1) as f64;
            if k >= lo {
                break;
            }
            if crossed(k)? {
                violation = Some((r * (j - 1) as f64 / (m + 1) as f64, k));
                break;
            }
        }
        match violation {
            Some(b) => {
                non_convex = true;
                (lo, hi) = b;
            }
            None => break,
        }
    }
    Ok(RayOutcome {
        hit: RayHit::At(0.5 * (lo + hi)),
        bracket: (lo, hi),
        non_convex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn run(search: &RaySearch, f: impl Fn(f64) -> bool) -> RayOutcome {
        first_crossing::<Infallible>(search, |k| Ok(f(k))).unwrap()
    }

    #[test]
    fn finds_threshold() {
        let s = RaySearch::new(10.0, 1e-9);
        let out = run(&s, |k| k >= std::f64::consts::E);
        assert!((out.hit.radius() - std::f64::consts::E).abs() < 1e-9);
        assert!(!out.non_convex);
    }

    #[test]
    fn unbounded_when_never_crossed() {
        let s = RaySearch::new(10.0, 1e-6);
        assert_eq!(run(&s, |_| false).hit, RayHit::Unbounded);
    }

    #[test]
    fn thin_window_below_march_is_reported() {
        // Crossed on [1.3, 1.5] and again from 7.9. The march (step 10/32)
        // steps over the window; the audit below 7.9 lands in it.
        let s = RaySearch::new(10.0, 1e-8);
        let out = run(&s, |k| (1.3..=1.5).contains(&k) || k >= 7.9);
        assert!(out.non_convex);
        assert!((out.hit.radius() - 1.3).abs() < 1e-7, "{:?}", out);
    }
}
