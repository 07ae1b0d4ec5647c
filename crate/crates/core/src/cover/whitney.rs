use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{Ball, PointId, PointSet, Space};

use super::{build_partition, PartitionOfUnity};

/// Whitney-type family for an open set `Omega`: balls `B_i = B(x_i, r_i)`
/// with `r_i = d(x_i, F)/2`, pairwise disjoint cores `B(x_i, r_i / C1)`,
/// and dilations `C2 B_i` reaching the complement `F`.
#[derive(Debug, Clone, Serialize)]
pub struct BallFamily {
    pub c1: f64,
    pub c2: f64,
    pub omega: PointSet,
    pub centers: Vec<PointId>,
    /// Radius of `B_i`.
    pub radii: Vec<f64>,
    /// Radius of the core `B_i / C1`.
    pub core_radii: Vec<f64>,
    /// `d(x_i, F)`.
    pub dist_to_complement: Vec<f64>,
    #[serde(skip)]
    pub balls: Vec<Ball>,
    #[serde(skip)]
    pub cores: Vec<Ball>,
    /// `max_x #{i : x ∈ B_i}`.
    pub overlap: usize,
    /// `max r_j / r_i` over pairs of balls that share a point (1 if none).
    pub comparability: f64,
    /// Pairs breaking `r_i / 3 <= r_j <= 3 r_i`.
    pub comparability_violations: usize,
}

/// Post-conditions recomputed from the stored balls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyChecks {
    pub covers: bool,
    pub cores_disjoint: bool,
    pub inside_omega: bool,
    pub dilations_meet_complement: bool,
    pub overlap: usize,
}

impl FamilyChecks {
    pub fn all_pass(&self) -> bool {
        self.covers && self.cores_disjoint && self.inside_omega && self.dilations_meet_complement
    }
}

impl BallFamily {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `C2 B_i`.
    pub fn dilated(&self, space: &Space, i: usize) -> Ball {
        space.ball_unchecked(self.centers[i], self.c2 * self.radii[i])
    }

    /// Partition of unity `chi_i = psi(C1 d(x_i, .)/r_i) / sum_k (...)`, with
    /// `psi` vanishing from `C1` on so that `supp chi_i = B_i`.
    pub fn partition_of_unity(&self, space: &Space) -> Result<PartitionOfUnity> {
        build_partition(space, &self.centers, &self.core_radii, &self.radii, self.c1, self.omega.mask())
    }

    pub fn check(&self, space: &Space) -> FamilyChecks {
        let n = space.len();
        let mut count = vec![0usize; n];
        let mut inside_omega = true;
        for b in &self.balls {
            for &p in &b.members {
                count[p.0] += 1;
                inside_omega &= self.omega.contains(p);
            }
        }
        let covers = self.omega.iter().all(|p| count[p.0] >= 1);
        let mut in_core = vec![false; n];
        let mut cores_disjoint = true;
        for c in &self.cores {
            for &p in &c.members {
                cores_disjoint &= !in_core[p.0];
                in_core[p.0] = true;
            }
        }
        let dilations_meet_complement =
            (0..self.len()).all(|i| self.dilated(space, i).members.iter().any(|&p| !self.omega.contains(p)));
        FamilyChecks {
            covers,
            cores_disjoint,
            inside_omega,
            dilations_meet_complement,
            overlap: count.into_iter().max().unwrap_or(0),
        }
    }
}

/// Greedy Vitali selection: candidates `x ∈ Omega` by decreasing
/// `d(x, F)` (ties by index); a candidate is kept when its core misses all
/// kept cores and its ball reaches a point not yet covered. `C2 = 4 C1`.
///
/// Coverage is automatic for `C1 >= 2`; with `1 < C1 < 2` a point may be
/// left out, which is reported as [`Error::UncoveredPoint`].
pub fn whitney(space: &Space, omega: &PointSet, c1: f64) -> Result<BallFamily> {
    let n = space.len();
    if omega.universe() != n {
        return Err(Error::LengthMismatch { expected: n, got: omega.universe() });
    }
    if c1.is_nan() || c1 <= 1.0 || !c1.is_finite() {
        return Err(Error::param("c1", format!("must be > 1, got {c1}")));
    }
    if omega.is_full() {
        return Err(Error::OmegaIsWholeSpace);
    }
    let complement: Vec<usize> = (0..n).filter(|&x| !omega.mask()[x]).collect();
    let mut cand: Vec<(PointId, f64)> = omega
        .iter()
        .map(|x| {
            let row = space.row(x.0);
            (x, complement.iter().map(|&y| row[y]).fold(f64::INFINITY, f64::min))
        })
        .collect();
    cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut covered = vec![false; n];
    let mut in_core = vec![false; n];
    let mut fam = BallFamily {
        c1,
        c2: 4.0 * c1,
        omega: omega.clone(),
        centers: Vec::new(),
        radii: Vec::new(),
        core_radii: Vec::new(),
        dist_to_complement: Vec::new(),
        balls: Vec::new(),
        cores: Vec::new(),
        overlap: 0,
        comparability: 1.0,
        comparability_violations: 0,
    };
    for (x, d) in cand {
        let core = space.ball_unchecked(x, d / (2.0 * c1));
        if core.members.iter().any(|p| in_core[p.0]) {
            continue;
        }
        let ball = space.ball_unchecked(x, d / 2.0);
        if ball.members.iter().all(|p| covered[p.0]) {
            continue;
        }
        for p in &core.members {
            in_core[p.0] = true;
        }
        for p in &ball.members {
            covered[p.0] = true;
        }
        fam.centers.push(x);
        fam.radii.push(d / 2.0);
        fam.core_radii.push(d / (2.0 * c1));
        fam.dist_to_complement.push(d);
        fam.balls.push(ball);
        fam.cores.push(core);
    }
    if let Some(x) = omega.iter().find(|p| !covered[p.0]) {
        return Err(Error::UncoveredPoint(x.0));
    }

    // overlap and radius comparability among balls sharing a point
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, b) in fam.balls.iter().enumerate() {
        for p in &b.members {
            holders[p.0].push(i);
        }
    }
    fam.overlap = holders.iter().map(Vec::len).max().unwrap_or(0);
    let mut seen = std::collections::HashSet::new();
    for h in &holders {
        for (k, &i) in h.iter().enumerate() {
            for &j in &h[k + 1..] {
                if seen.insert((i, j)) {
                    let ratio = (fam.radii[i] / fam.radii[j]).max(fam.radii[j] / fam.radii[i]);
                    fam.comparability = fam.comparability.max(ratio);
                    if ratio > 3.0 {
                        fam.comparability_violations += 1;
                    }
                }
            }
        }
    }
    if fam.comparability_violations > 0 {
        log::info!(
            "whitney: {} intersecting pairs outside the 1/3..3 radius window (max ratio {:.3})",
            fam.comparability_violations,
            fam.comparability
        );
    }
    Ok(fam)
}
