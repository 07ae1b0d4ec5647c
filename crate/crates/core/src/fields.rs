//! Named test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::space::{cone_half, PointId, Space};

fn bbox(coords: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = coords[0].len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for x in coords {
        for k in 0..dim {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    (lo, hi)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Tent `max(0, 1 - |x - c| / R)`.
///
/// With coordinates, `c` is the bounding-box center and `R` half the
/// largest box side; otherwise `c` is a point of least eccentricity and `R`
/// that eccentricity.
pub fn tent(space: &Space) -> ScalarField {
    if let Some(coords) = space.coords() {
        let (lo, hi) = bbox(coords);
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let r = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).fold(0.0, f64::max);
        if r > 0.0 {
            return coords.iter().map(|x| (1.0 - euclid(x, &c) / r).max(0.0)).collect();
        }
        return ScalarField::constant(space.len(), 1.0);
    }
    let (c, r) = space
        .points()
        .map(|p| (p, space.row(p.0).iter().copied().fold(0.0, f64::max)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("nonempty space");
    if r == 0.0 {
        return ScalarField::constant(space.len(), 1.0);
    }
    space.points().map(|x| (1.0 - space.dist(c, x) / r).max(0.0)).collect()
}

/// `k`-th embedding coordinate.
pub fn coordinate(space: &Space, axis: usize) -> Result<ScalarField> {
    let coords = space.coords().ok_or_else(|| Error::param("family", "coordinates need an embedded space"))?;
    if coords.is_empty() || axis >= coords[0].len() {
        return Err(Error::param("axis", format!("no coordinate {axis}")));
    }
    Ok(coords.iter().map(|x| x[axis]).collect())
}

/// Independent uniform values in `[-1, 1)`.
pub fn random_uniform(space: &Space, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..space.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Integer values in `0..=max`, uniformly.
pub fn random_integer(space: &Space, seed: u64, max: u32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..space.len()).map(|_| rng.random_range(0..=max) as f64).collect()
}

/// Sum of four Gaussian bumps with random centers, widths and signs.
///
/// Bump centers are drawn in the bounding box when coordinates exist, so the
/// same seed describes the same continuum function at every resolution.
pub fn random_smooth(space: &Space, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diam = space.diameter().max(f64::MIN_POSITIVE);
    let mut out = ScalarField::zeros(space.len());
    for _ in 0..4 {
        let amp: f64 = rng.random_range(-1.0..1.0);
        let width = diam * rng.random_range(0.1..0.4);
        let dist: Vec<f64> = match space.coords() {
            Some(coords) => {
                let (lo, hi) = bbox(coords);
                let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| if b > a { rng.random_range(*a..*b) } else { *a }).collect();
                coords.iter().map(|x| euclid(x, &c)).collect()
            }
            None => {
                let c = PointId(rng.random_range(0..space.len()));
                space.points().map(|x| space.dist(c, x)).collect()
            }
        };
        for (o, d) in out.iter_mut().zip(dist) {
            *o += amp * (-(d / width).powi(2)).exp();
        }
    }
    out
}

/// Smoothed indicator of `B(center, radius)`: 1 inside, linear to 0 at
/// distance `2 * radius`.
pub fn smoothed_ball_indicator(space: &Space, center: PointId, radius: f64) -> ScalarField {
    space.points().map(|x| ((2.0 * radius - space.dist(center, x)) / radius).clamp(0.0, 1.0)).collect()
}

/// On a cone: `sign(half) * min(1, |x|)`, so the function is `+1` and `-1`
/// on the halves away from the vertex and linear through the vertex cell.
pub fn two_halves(space: &Space) -> Result<ScalarField> {
    let coords = space.coords().ok_or_else(|| Error::param("family", "two-halves needs cone coordinates"))?;
    Ok(space
        .points()
        .map(|p| {
            let r = coords[p.0].iter().map(|v| v * v).sum::<f64>().sqrt();
            f64::from(cone_half(space, p)) * r.min(1.0)
        })
        .collect())
}
