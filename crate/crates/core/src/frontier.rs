//! Geometry of traced boundaries.
//!
//! A sweep is a list of `(R0, R1)` points ordered by increasing weight on
//! `R1`. Weighted-sum maximisers of a convex region move monotonically along
//! its boundary, and the boundary is concave when `R0` is read as a function
//! of `R1`.

use crate::channel::RatePair;

/// Largest violation of "R0 non-increasing, R1 non-decreasing" along the
/// sweep (0 when monotone).
pub fn monotonicity_violation(points: &[RatePair]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].r0 - w[0].r0).max(w[0].r1 - w[1].r1).max(0.0))
        .fold(0.0, f64::max)
}

/// Largest amount by which a point falls below the chord of its two
/// neighbours. Triples whose outer points share an `R1` value are skipped.
pub fn concavity_violation(points: &[RatePair]) -> f64 {
    points
        .windows(3)
        .filter_map(|w| {
            let (l, m, r) = (w[0], w[1], w[2]);
            let span = r.r1 - l.r1;
            if span <= 0.0 {
                return None;
            }
            let t = ((m.r1 - l.r1) / span).clamp(0.0, 1.0);
            let chord = l.r0 + t * (r.r0 - l.r0);
            Some((chord - m.r0).max(0.0))
        })
        .fold(0.0, f64::max)
}

/// Upper bound on the `R0` a region can reach at confidential rate `r1`,
/// given support values `max (R0 + γ·R1)` for several weights `γ`.
pub fn supporting_line_bound(support: &[(f64, f64)], r1: f64) -> f64 {
    support
        .iter()
        .map(|&(gamma, value)| value - gamma * r1)
        .fold(f64::INFINITY, f64::min)
}

/// `R0 + γ·R1` maximised over a finite set of points.
pub fn support_value(points: &[RatePair], gamma1: f64) -> f64 {
    points
        .iter()
        .map(|p| p.r0 + gamma1 * p.r1)
        .fold(f64::NEG_INFINITY, f64::max)
}
