//! Fields on a space, the discrete gradient and Sobolev-type norms.

mod field;
mod poincare;

use crate::error::{check_exponent, check_positive, Error, Result};
use crate::space::{PointId, Space};

pub use field::{read_field, render_field, write_field, ScalarField};
pub use poincare::{poincare_scan, BallRatio, PoincareReport, TestFamily};

/// Undirected neighbor graph `0 < d(x, y) <= radius` in CSR form.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    radius: f64,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    lengths: Vec<f64>,
}

impl Neighborhood {
    pub fn new(space: &Space, radius: f64) -> Self {
        let n = space.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut lengths = Vec::new();
        offsets.push(0);
        for a in 0..n {
            for (b, &d) in space.row(a).iter().enumerate() {
                if b != a && d <= radius {
                    targets.push(b as u32);
                    lengths.push(d);
                }
            }
            offsets.push(targets.len());
        }
        Neighborhood { radius, offsets, targets, lengths }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `(neighbor, distance)` pairs of `x`, by increasing index.
    pub fn of(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[x]..self.offsets[x + 1];
        self.targets[span.clone()].iter().map(|&t| t as usize).zip(self.lengths[span].iter().copied())
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Each undirected edge once, as `(a, b, d)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.offsets.len() - 1).flat_map(move |a| self.of(a).filter(move |&(b, _)| b > a).map(move |(b, d)| (a, b, d)))
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }
}

/// Pointwise Lipschitz constant over the neighbor ball:
/// `x -> max_{0 < d(x,y) <= radius} |f(y) - f(x)| / d(x, y)`, 0 if isolated.
pub fn gradient(space: &Space, f: &ScalarField, neighbor_radius: f64) -> Result<ScalarField> {
    check_positive("neighbor_radius", neighbor_radius)?;
    f.check_len(space)?;
    Ok(gradient_on(&Neighborhood::new(space, neighbor_radius), f))
}

/// Gradient at the space's own neighbor radius.
pub fn grad(space: &Space, f: &ScalarField) -> Result<ScalarField> {
    f.check_len(space)?;
    Ok(gradient_on(space.neighborhood(), f))
}

pub(crate) fn gradient_on(nb: &Neighborhood, f: &[f64]) -> ScalarField {
    (0..f.len())
        .map(|x| nb.of(x).map(|(y, d)| (f[y] - f[x]).abs() / d).fold(0.0, f64::max))
        .collect()
}

/// Weighted `L_p` norm; `p = f64::INFINITY` gives the max of `|f|`.
pub fn lp_norm(space: &Space, f: &ScalarField, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    f.check_len(space)?;
    Ok(lp_raw(space.weights(), f, p))
}

pub(crate) fn lp_raw(weights: &[f64], f: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return f.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return f.iter().zip(weights).map(|(v, w)| v.abs() * w).sum();
    }
    let s: f64 = f.iter().zip(weights).map(|(v, w)| v.abs().powf(p) * w).sum();
    s.powf(1.0 / p)
}

/// `||f||_p + || |grad f| ||_p`.
pub fn sobolev_norm(space: &Space, f: &ScalarField, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let g = grad(space, f)?;
    Ok(lp_raw(space.weights(), f, p) + lp_raw(space.weights(), &g, p))
}

/// `|| |grad f| ||_p`.
pub fn homogeneous_seminorm(space: &Space, f: &ScalarField, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let g = grad(space, f)?;
    Ok(lp_raw(space.weights(), &g, p))
}

/// `(avg_members |u|^q)^(1/q)` with the members' own measure.
pub fn average_norm(space: &Space, members: &[PointId], u: &[f64], q: f64) -> Result<f64> {
    check_exponent("q", q)?;
    if members.is_empty() {
        return Err(Error::param("members", "average over an empty set"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &p in members {
        let w = space.weight(p);
        num += w * u[p.0].abs().powf(q);
        den += w;
    }
    Ok((num / den).powf(1.0 / q))
}
