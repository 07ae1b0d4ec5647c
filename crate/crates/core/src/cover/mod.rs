//! Ball coverings: Whitney families of open sets, the unit-ball cover of the
//! whole space, and Lipschitz partitions of unity subordinate to either.

mod unit;
mod whitney;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{PointId, Space};

pub use unit::{relative_doubling_check, unit_ball_cover, RelativeDoubling, UnitCover};
pub use whitney::{whitney, BallFamily, FamilyChecks};

/// Piecewise-linear cutoff: 1 on `[0, 1]`, 0 on `[cutoff, inf)`.
#[inline]
pub(crate) fn psi(u: f64, cutoff: f64) -> f64 {
    ((cutoff - u) / (cutoff - 1.0)).clamp(0.0, 1.0)
}

/// Normalized bumps `chi_i = psi(d(x_i, .)/s_i) / sum_k psi(d(x_k, .)/s_k)`,
/// stored sparsely on their supports.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionOfUnity {
    /// `(point, chi_i(point))` for every point where `chi_i > 0`, by index.
    pub pieces: Vec<Vec<(PointId, f64)>>,
    /// Measured Lipschitz constant of each `chi_i`.
    pub lipschitz: Vec<f64>,
    /// `max_i lipschitz_i * scale_i`, scale being the ball radius.
    pub scaled_lipschitz: f64,
}

impl PartitionOfUnity {
    /// Dense values of `chi_i`.
    pub fn dense(&self, i: usize, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(p, c) in &self.pieces[i] {
            v[p.0] = c;
        }
        v
    }

    /// `sum_i chi_i` at every point.
    pub fn sum(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for piece in &self.pieces {
            for &(p, c) in piece {
                v[p.0] += c;
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

/// Builds the partition for bumps centred at `centers` with profile scales
/// `scales` and common cutoff ratio; `radii` only enter the reported
/// scaled Lipschitz constant. Points where every bump vanishes get no mass;
/// if `required` marks such a point it is an error.
pub(crate) fn build_partition(
    space: &Space,
    centers: &[PointId],
    scales: &[f64],
    radii: &[f64],
    cutoff: f64,
    required: &[bool],
) -> Result<PartitionOfUnity> {
    let n = space.len();
    let raw: Vec<Vec<(PointId, f64)>> = centers
        .par_iter()
        .zip(scales)
        .map(|(&c, &s)| {
            space
                .row(c.0)
                .iter()
                .enumerate()
                .filter_map(|(x, &d)| {
                    let v = psi(d / s, cutoff);
                    (v > 0.0).then_some((PointId(x), v))
                })
                .collect()
        })
        .collect();
    let mut denom = vec![0.0; n];
    for piece in &raw {
        for &(p, v) in piece {
            denom[p.0] += v;
        }
    }
    if let Some(x) = (0..n).find(|&x| required[x] && denom[x] == 0.0) {
        return Err(Error::UncoveredPoint(x));
    }
    let pieces: Vec<Vec<(PointId, f64)>> =
        raw.into_iter().map(|piece| piece.into_iter().map(|(p, v)| (p, v / denom[p.0])).collect()).collect();
    let lipschitz: Vec<f64> = pieces.par_iter().map(|piece| lipschitz_of(space, piece)).collect();
    let scaled_lipschitz = lipschitz.iter().zip(radii).map(|(l, r)| l * r).fold(0.0, f64::max);
    Ok(PartitionOfUnity { pieces, lipschitz, scaled_lipschitz })
}

/// `max |chi(x) - chi(y)| / d(x, y)` over all pairs; pairs with both ends
/// off the support contribute nothing.
fn lipschitz_of(space: &Space, piece: &[(PointId, f64)]) -> f64 {
    let n = space.len();
    let mut dense = vec![0.0; n];
    for &(p, v) in piece {
        dense[p.0] = v;
    }
    let mut best: f64 = 0.0;
    for &(x, vx) in piece {
        let row = space.row(x.0);
        for y in 0..n {
            if y != x.0 {
                best = best.max((vx - dense[y]).abs() / row[y]);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_profile() {
        assert_eq!(psi(0.0, 2.0), 1.0);
        assert_eq!(psi(1.0, 2.0), 1.0);
        assert_eq!(psi(1.5, 2.0), 0.5);
        assert_eq!(psi(2.0, 2.0), 0.0);
        assert_eq!(psi(7.0, 3.0), 0.0);
    }
}
