use serde::Serialize;

use super::{PointId, RadiusLadder, Space};

/// Measured doubling constant with its per-radius profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    /// `max_{x, r} mu(B(x,2r)) / mu(B(x,r))`.
    pub constant: f64,
    pub center: PointId,
    pub radius: f64,
    /// `(r, max_x ratio)` for every ladder radius.
    pub profile: Vec<(f64, f64)>,
}

/// Doubling ratio over every center and every ladder radius.
///
/// For each center the ladder is walked once with two cursors into the
/// sorted distance row, so the cost is `O(n * (n + |ladder|))`.
pub fn doubling_constant(space: &Space, ladder: &RadiusLadder) -> DoublingReport {
    let idx = space.ball_index();
    let radii = ladder.radii();
    let mut profile: Vec<f64> = vec![1.0; radii.len()];
    let mut best = (1.0, PointId(0), radii[0]);
    for c in 0..space.len() {
        let sorted = idx.sorted_distances(c);
        let (mut k1, mut k2) = (0usize, 0usize);
        for (j, &r) in radii.iter().enumerate() {
            while k1 < sorted.len() && sorted[k1] < r {
                k1 += 1;
            }
            while k2 < sorted.len() && sorted[k2] < 2.0 * r {
                k2 += 1;
            }
            let ratio = idx.prefix_mass(c, k2) / idx.prefix_mass(c, k1);
            if ratio > profile[j] {
                profile[j] = ratio;
            }
            if ratio > best.0 {
                best = (ratio, PointId(c), r);
            }
        }
    }
    DoublingReport {
        constant: best.0,
        center: best.1,
        radius: best.2,
        profile: radii.iter().copied().zip(profile).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_cone, build_grid, WeightProfile};

    fn brute(space: &Space, ladder: &RadiusLadder) -> f64 {
        let mut best: f64 = 1.0;
        for c in space.points() {
            for &r in ladder.radii() {
                let small = space.ball(c, r).unwrap().measure;
                let big = space.ball(c, 2.0 * r).unwrap().measure;
                best = best.max(big / small);
            }
        }
        best
    }

    #[test]
    fn singleton_is_one() {
        let s = build_grid(&[1], 1.0, WeightProfile::Uniform).unwrap();
        assert_eq!(doubling_constant(&s, &RadiusLadder::new(&s)).constant, 1.0);
    }

    #[test]
    fn uniform_line_is_three() {
        let s = build_grid(&[64], 1.0 / 64.0, WeightProfile::Uniform).unwrap();
        let rep = doubling_constant(&s, &RadiusLadder::new(&s));
        // B(x, h) = {x}, B(x, 2h) = {x-h, x, x+h} at an interior point
        assert!((rep.constant - 3.0).abs() < 1e-12, "{}", rep.constant);
        assert_eq!(rep.constant, brute(&s, &RadiusLadder::new(&s)));
    }

    #[test]
    fn matches_enumeration_on_weighted_spaces() {
        for s in [
            build_grid(&[5, 4], 0.5, WeightProfile::Power(1.5)).unwrap(),
            build_cone(2, 4, 4).unwrap(),
        ] {
            let ladder = RadiusLadder::new(&s);
            let rep = doubling_constant(&s, &ladder);
            assert!(rep.constant.is_finite() && rep.constant >= 1.0);
            assert!((rep.constant - brute(&s, &ladder)).abs() <= 1e-12 * rep.constant);
            let pmax = rep.profile.iter().map(|p| p.1).fold(0.0, f64::max);
            assert_eq!(pmax, rep.constant);
        }
    }

    #[test]
    fn invariant_under_weight_scaling() {
        let s = build_grid(&[6, 3], 1.0, WeightProfile::Power(2.0)).unwrap();
        let ladder = RadiusLadder::new(&s);
        let a = doubling_constant(&s, &ladder).constant;
        let b = doubling_constant(&s.rescaled_weights(7.25).unwrap(), &ladder).constant;
        assert!((a - b).abs() <= 1e-12 * a);
    }
}
