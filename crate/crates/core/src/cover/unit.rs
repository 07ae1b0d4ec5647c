use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, Result};
use crate::space::{Ball, PointId, RadiusLadder, Space};

use super::{build_partition, PartitionOfUnity};

/// Cover of the whole space by balls `B^j = B(x_j, rho)` around a greedy
/// `rho/2`-net, with a subordinate partition `phi_j`.
#[derive(Debug, Clone, Serialize)]
pub struct UnitCover {
    pub rho: f64,
    pub centers: Vec<PointId>,
    #[serde(skip)]
    pub balls: Vec<Ball>,
    /// `N1 = max_x #{j : x ∈ B^j}`.
    pub overlap: usize,
    pub phi: PartitionOfUnity,
}

/// Centers are taken in index order whenever they are at least `rho/2` from
/// every earlier center, so every point lies within `rho/2` of one.
/// `phi_j = psi(2 d(x_j, .)/rho)` normalized, with `psi` vanishing from 2 on.
pub fn unit_ball_cover(space: &Space, rho: f64) -> Result<UnitCover> {
    check_positive("rho", rho)?;
    let mut centers: Vec<PointId> = Vec::new();
    for x in space.points() {
        let row = space.row(x.0);
        if centers.iter().all(|c| row[c.0] >= rho / 2.0) {
            centers.push(x);
        }
    }
    let balls: Vec<Ball> = centers.iter().map(|&c| space.ball_unchecked(c, rho)).collect();
    let mut count = vec![0usize; space.len()];
    for b in &balls {
        for p in &b.members {
            count[p.0] += 1;
        }
    }
    let overlap = count.into_iter().max().unwrap_or(0);
    let scales = vec![rho / 2.0; centers.len()];
    let radii = vec![rho; centers.len()];
    let phi = build_partition(space, &centers, &scales, &radii, 2.0, &vec![true; space.len()])?;
    Ok(UnitCover { rho, centers, balls, overlap, phi })
}

/// Doubling of `mu` restricted to a cover ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeDoubling {
    /// `max mu(B(x,2r) ∩ B^j) / mu(B(x,r) ∩ B^j)` over `x ∈ B^j`, ladder `r`.
    pub doubling: f64,
    /// `max mu(B(x,r)) / mu(B(x,r) ∩ B^j)` over `x ∈ B^j`, ladder `r <= r_max`.
    pub localization: f64,
}

pub fn relative_doubling_check(space: &Space, bj: &Ball, ladder: &RadiusLadder, r_max: f64) -> RelativeDoubling {
    let idx = space.ball_index();
    let w = space.weights();
    let n = space.len();
    let mut member = vec![false; n];
    for p in &bj.members {
        member[p.0] = true;
    }
    let radii = ladder.radii();
    let per: Vec<(f64, f64)> = bj
        .members
        .par_iter()
        .map(|&x| {
            let order = idx.order(x.0);
            let sorted = idx.sorted_distances(x.0);
            let mut inside = Vec::with_capacity(n + 1);
            inside.push(0.0);
            let mut acc = 0.0;
            for &p in order {
                if member[p as usize] {
                    acc += w[p as usize];
                }
                inside.push(acc);
            }
            let (mut k1, mut k2) = (0, 0);
            let (mut dbl, mut loc) = (1.0f64, 1.0f64);
            for &r in radii {
                while k1 < n && sorted[k1] < r {
                    k1 += 1;
                }
                while k2 < n && sorted[k2] < 2.0 * r {
                    k2 += 1;
                }
                dbl = dbl.max(inside[k2] / inside[k1]);
                if r <= r_max {
                    loc = loc.max(idx.prefix_mass(x.0, k1) / inside[k1]);
                }
            }
            (dbl, loc)
        })
        .collect();
    per.into_iter().fold(RelativeDoubling { doubling: 1.0, localization: 1.0 }, |acc, (d, l)| RelativeDoubling {
        doubling: acc.doubling.max(d),
        localization: acc.localization.max(l),
    })
}

impl UnitCover {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Per-ball relative doubling with `r_max = 2 rho`, plus the maxima.
    pub fn relative_doubling(&self, space: &Space, ladder: &RadiusLadder) -> (Vec<RelativeDoubling>, RelativeDoubling) {
        let per: Vec<RelativeDoubling> =
            self.balls.iter().map(|b| relative_doubling_check(space, b, ladder, 2.0 * self.rho)).collect();
        let max = per.iter().fold(RelativeDoubling { doubling: 1.0, localization: 1.0 }, |a, b| RelativeDoubling {
            doubling: a.doubling.max(b.doubling),
            localization: a.localization.max(b.localization),
        });
        (per, max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, doubling_constant, WeightProfile};

    #[test]
    fn large_radius_gives_single_ball() {
        let s = build_grid(&[5, 5], 1.0, WeightProfile::Uniform).unwrap();
        let cover = unit_ball_cover(&s, 2.0 * s.diameter() * 1.01).unwrap();
        assert_eq!(cover.len(), 1);
        assert!(cover.phi.pieces[0].iter().all(|&(_, v)| v == 1.0));
        assert_eq!(cover.phi.pieces[0].len(), s.len());
    }

    #[test]
    fn unit_line_of_eight() {
        let s = build_grid(&[8], 1.0, WeightProfile::Uniform).unwrap();
        let cover = unit_ball_cover(&s, 1.0).unwrap();
        for x in s.points() {
            let nearest = cover.centers.iter().map(|&c| s.dist(c, x)).fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.5);
        }
        assert!(cover.overlap <= 4);
        let sum = cover.phi.sum(s.len());
        assert!(sum.iter().all(|v| (v - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn partition_sums_to_one_everywhere() {
        for rho in [0.3, 1.0, 2.5] {
            let s = build_grid(&[9, 7], 0.25, WeightProfile::Power(1.0)).unwrap();
            let cover = unit_ball_cover(&s, rho).unwrap();
            let sum = cover.phi.sum(s.len());
            assert!(sum.iter().all(|v| (v - 1.0).abs() <= 1e-12));
            for (j, piece) in cover.phi.pieces.iter().enumerate() {
                assert!(piece.iter().all(|&(p, _)| cover.balls[j].contains(p)));
            }
            // Lipschitz constants are uniform in j
            assert!(cover.phi.scaled_lipschitz.is_finite());
        }
    }

    #[test]
    fn relative_doubling_extremes() {
        let s = build_grid(&[6, 4], 1.0, WeightProfile::Uniform).unwrap();
        let ladder = RadiusLadder::new(&s);
        let whole = s.ball(PointId(0), 100.0).unwrap();
        let rd = relative_doubling_check(&s, &whole, &ladder, 100.0);
        assert_eq!(rd.doubling, doubling_constant(&s, &ladder).constant);
        assert_eq!(rd.localization, 1.0);
        let single = s.ball(PointId(5), 0.5).unwrap();
        let rd = relative_doubling_check(&s, &single, &ladder, 100.0);
        assert_eq!(rd.doubling, 1.0);
        assert!(rd.localization > 1.0);
        // within the cover's own radius range a singleton ball is its own neighbourhood
        let rd = relative_doubling_check(&s, &single, &ladder, 1.0);
        assert_eq!((rd.doubling, rd.localization), (1.0, 1.0));
    }

    #[test]
    fn relative_doubling_on_grid_is_finite() {
        let s = build_grid(&[16, 16], 1.0 / 16.0 * 4.0, WeightProfile::Uniform).unwrap();
        let cover = unit_ball_cover(&s, 2.0).unwrap();
        let (_, max) = cover.relative_doubling(&s, &RadiusLadder::new(&s));
        assert!(max.doubling.is_finite() && max.localization.is_finite());
    }
}
