//! Empirical Poincaré constants.
//!
//! For a ball `B` of radius `r` and a test function `u` the scanned ratio is
//! `(avg_B |u - u_B|^q)^(1/q) / (r (avg_{lam B} |grad u|^q)^(1/q))`. The
//! maximum over a finite family only bounds the true constant from below.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_exponent, check_positive, Error, Result};
use crate::fields;
use crate::space::{PointId, RadiusLadder, Space};

use super::{grad, ScalarField};

/// Test functions fed to [`poincare_scan`].
#[derive(Debug, Clone)]
pub enum TestFamily {
    /// Every embedding coordinate.
    Coordinates,
    /// Smoothed indicators of balls of radius `diam/4` around up to eight
    /// evenly spread points.
    SmoothedBallIndicators,
    RandomSmooth { seed: u64, count: usize },
    /// `±1` on the two halves of a cone.
    TwoHalves,
    Custom(Vec<ScalarField>),
}

impl TestFamily {
    pub fn name(&self) -> String {
        match self {
            TestFamily::Coordinates => "coordinates".into(),
            TestFamily::SmoothedBallIndicators => "ball-indicator-smoothed".into(),
            TestFamily::RandomSmooth { seed, count } => format!("random-smooth({seed},{count})"),
            TestFamily::TwoHalves => "two-halves".into(),
            TestFamily::Custom(v) => format!("custom({})", v.len()),
        }
    }

    fn materialize(&self, space: &Space) -> Result<Vec<ScalarField>> {
        Ok(match self {
            TestFamily::Coordinates => {
                let dim = space.coords().map_or(0, |c| c[0].len());
                if dim == 0 {
                    return Err(Error::param("family", "coordinates need an embedded space"));
                }
                (0..dim).map(|k| fields::coordinate(space, k)).collect::<Result<_>>()?
            }
            TestFamily::SmoothedBallIndicators => {
                let n = space.len();
                let step = n.div_ceil(8).max(1);
                let r = space.diameter() / 4.0;
                if r == 0.0 {
                    return Ok(vec![ScalarField::constant(n, 1.0)]);
                }
                (0..n).step_by(step).map(|c| fields::smoothed_ball_indicator(space, PointId(c), r)).collect()
            }
            TestFamily::RandomSmooth { seed, count } => {
                (0..*count as u64).map(|k| fields::random_smooth(space, seed.wrapping_add(k))).collect()
            }
            TestFamily::TwoHalves => vec![fields::two_halves(space)?],
            TestFamily::Custom(v) => {
                for f in v {
                    f.check_len(space)?;
                }
                v.clone()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallRatio {
    pub center: PointId,
    pub radius: f64,
    /// Best ratio over the family on this ball.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub q: f64,
    pub lambda: f64,
    pub r1: f64,
    pub family: String,
    /// Lower bound for the Poincaré constant: max over tested balls.
    pub constant: f64,
    pub argmax: Option<BallRatio>,
    pub balls: Vec<BallRatio>,
    /// Balls on which every test function has zero gradient energy on `lam B`.
    pub skipped: usize,
}

struct Prepared {
    u: ScalarField,
    gq: Vec<f64>,
}

/// Scans every distinct ball `B(x, r)` with `r < r1`.
///
/// Around each center the distinct balls are the tie-group prefixes of the
/// distance ordering; each is tested at the smallest ladder radius that
/// realises it.
pub fn poincare_scan(space: &Space, q: f64, lambda: f64, r1: f64, family: &TestFamily) -> Result<PoincareReport> {
    check_exponent("q", q)?;
    if lambda.is_nan() || lambda < 1.0 {
        return Err(Error::param("lambda", format!("must be >= 1, got {lambda}")));
    }
    check_positive("r1", r1)?;
    let tests = family
        .materialize(space)?
        .into_iter()
        .map(|u| {
            let g = grad(space, &u)?;
            Ok(Prepared { gq: g.iter().map(|v| v.powf(q)).collect(), u })
        })
        .collect::<Result<Vec<_>>>()?;
    let ladder = RadiusLadder::new(space);
    let idx = space.ball_index();
    let w = space.weights();

    let per_center: Vec<(Vec<BallRatio>, usize)> = (0..space.len())
        .into_par_iter()
        .map(|c| {
            let order = idx.order(c);
            let sorted = idx.sorted_distances(c);
            let n = order.len();
            let mut balls = Vec::new();
            let mut skipped = 0;
            // prefix sums of w * |grad u|^q and w * u in this center's ordering
            let prefix: Vec<(Vec<f64>, Vec<f64>)> = tests
                .iter()
                .map(|t| {
                    let mut e = Vec::with_capacity(n + 1);
                    let mut m = Vec::with_capacity(n + 1);
                    let (mut ae, mut am) = (0.0, 0.0);
                    e.push(0.0);
                    m.push(0.0);
                    for &p in order {
                        let p = p as usize;
                        ae += w[p] * t.gq[p];
                        am += w[p] * t.u[p];
                        e.push(ae);
                        m.push(am);
                    }
                    (e, m)
                })
                .collect();
            for &k in idx.group_ends(c) {
                let k = k as usize;
                let Some(r) = ladder.next_above(sorted[k - 1]) else { break };
                if r >= r1 {
                    break;
                }
                let kl = idx.count_within(c, lambda * r);
                let (mass, mass_l) = (idx.prefix_mass(c, k), idx.prefix_mass(c, kl));
                let mut best: Option<f64> = None;
                for (t, (e, m)) in tests.iter().zip(&prefix) {
                    let energy = e[kl] / mass_l;
                    if energy <= 0.0 {
                        continue;
                    }
                    let mean = m[k] / mass;
                    let osc: f64 = order[..k].iter().map(|&p| w[p as usize] * (t.u[p as usize] - mean).abs().powf(q)).sum();
                    let ratio = (osc / mass).powf(1.0 / q) / (r * energy.powf(1.0 / q));
                    best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
                }
                match best {
                    Some(ratio) => balls.push(BallRatio { center: PointId(c), radius: r, ratio }),
                    None => skipped += 1,
                }
            }
            (balls, skipped)
        })
        .collect();

    let mut balls = Vec::new();
    let mut skipped = 0;
    for (b, s) in per_center {
        balls.extend(b);
        skipped += s;
    }
    let argmax = balls.iter().copied().fold(None, |acc: Option<BallRatio>, b| match acc {
        Some(a) if a.ratio >= b.ratio => Some(a),
        _ => Some(b),
    });
    Ok(PoincareReport {
        q,
        lambda,
        r1,
        family: family.name(),
        constant: argmax.map_or(0.0, |b| b.ratio),
        argmax,
        balls,
        skipped,
    })
}
