//! Real-interpolation norms `||f||_{theta,q} = (int_0^inf (s^-theta K(f, s))^q ds/s)^{1/q}`
//! from sampled K-functionals.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{sobolev_norm, ScalarField};
use crate::error::{check_exponent, Error, Result};
use crate::space::Space;

use super::{k_oracle, k_oracle_pair, t_grid};

/// Which couple the K-functional is taken for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PairSpec {
    /// `(W1_r, W1_inf)` with `s = t^{1/r}`.
    Sobolev { r: f64, grid: usize },
    /// `(W1_{p1}, W1_{p2})` with `s = t`.
    Pair { p1: f64, p2: f64, grid: usize },
}

pub const DEFAULT_GRID: usize = 257;

impl PairSpec {
    pub fn sobolev(r: f64) -> Self {
        PairSpec::Sobolev { r, grid: DEFAULT_GRID }
    }

    fn grid(&self) -> usize {
        match *self {
            PairSpec::Sobolev { grid, .. } | PairSpec::Pair { grid, .. } => grid,
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", format!("must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

/// Quadrature on samples `k[i] = K(f, s_i)` with `s_i = t_i^{1/r}` and `t`
/// log-spaced: trapezoid in `log s`, a linear tail `K = (K_0/s_0) s` below
/// the grid and `K = k_inf` above it.
pub fn interpolation_norm_of_curve(t: &[f64], k: &[f64], r: f64, k_inf: f64, theta: f64, q: f64) -> Result<f64> {
    check_theta(theta)?;
    check_exponent("q", q)?;
    if t.len() != k.len() || t.len() < 2 {
        return Err(Error::param("grid", "need at least two matching samples"));
    }
    let s: Vec<f64> = t.iter().map(|v| v.powf(1.0 / r)).collect();
    let m = s.len();
    if q.is_infinite() {
        let inner = s.iter().zip(k).map(|(s, k)| s.powf(-theta) * k).fold(0.0f64, f64::max);
        return Ok(inner.max(s[m - 1].powf(-theta) * k_inf));
    }
    let vals: Vec<f64> = s.iter().zip(k).map(|(s, k)| (s.powf(-theta) * k).powf(q)).collect();
    let mut acc = 0.0;
    for i in 1..m {
        acc += 0.5 * (vals[i] + vals[i - 1]) * (s[i] / s[i - 1]).ln();
    }
    let c = k[0] / s[0];
    acc += c.powf(q) * s[0].powf(q * (1.0 - theta)) / (q * (1.0 - theta));
    acc += k_inf.powf(q) * s[m - 1].powf(-theta * q) / (theta * q);
    Ok(acc.powf(1.0 / q))
}

/// `||f||_{theta,q}` for the given couple, from oracle K values on the
/// standard grid `[min weight / 4, 4 mu(X)]`.
pub fn interpolation_norm(space: &Space, f: &ScalarField, theta: f64, q: f64, pair: &PairSpec) -> Result<f64> {
    check_theta(theta)?;
    check_exponent("q", q)?;
    f.check_len(space)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let ts = t_grid(space, pair.grid().max(2));
    let _ = space.neighborhood();
    match *pair {
        PairSpec::Sobolev { r, .. } => {
            let k: Vec<f64> = ts.par_iter().map(|&t| k_oracle(space, f, t, r).map(|o| o.value)).collect::<Result<_>>()?;
            interpolation_norm_of_curve(&ts, &k, r, sobolev_norm(space, f, r)?, theta, q)
        }
        PairSpec::Pair { p1, p2, .. } => {
            let k: Vec<f64> =
                ts.par_iter().map(|&t| k_oracle_pair(space, f, t, p1, p2).map(|o| o.value)).collect::<Result<_>>()?;
            interpolation_norm_of_curve(&ts, &k, 1.0, sobolev_norm(space, f, p1)?, theta, q)
        }
    }
}

/// Ratios `||f||_{1 - r/p, p} / ||f||_{W1_p}` over a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEquivalence {
    /// One per member; `NaN` for the zero field, where the ratio is undefined.
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl NormEquivalence {
    /// `max / min`.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }

    /// Worst factor by which either endpoint moved relative to `other`.
    pub fn drift(&self, other: &NormEquivalence) -> f64 {
        let f = |a: f64, b: f64| (a / b).max(b / a);
        f(self.min, other.min).max(f(self.max, other.max))
    }
}

/// Needs `r <= q < p < inf`; the interpolation norm is taken between
/// `W1_r` and `W1_inf` at `theta = 1 - r/p` on a `grid`-point curve.
pub fn norm_equivalence_report(
    space: &Space,
    family: &[ScalarField],
    p: f64,
    r: f64,
    q: f64,
    grid: usize,
) -> Result<NormEquivalence> {
    if family.is_empty() {
        return Err(Error::param("family", "must contain at least one field"));
    }
    check_exponent("r", r)?;
    if !(r <= q && q < p && p.is_finite()) {
        return Err(Error::param("p", format!("need r <= q < p < inf, got r = {r}, q = {q}, p = {p}")));
    }
    let theta = 1.0 - r / p;
    let pair = PairSpec::Sobolev { r, grid };
    let ratios: Vec<f64> = family
        .iter()
        .map(|f| -> Result<f64> {
            if f.is_zero() {
                return Ok(f64::NAN);
            }
            Ok(interpolation_norm(space, f, theta, p, &pair)? / sobolev_norm(space, f, p)?)
        })
        .collect::<Result<_>>()?;
    let valid = ratios.iter().copied().filter(|v| !v.is_nan());
    let min = valid.clone().fold(f64::INFINITY, f64::min);
    let max = valid.fold(0.0, f64::max);
    if !min.is_finite() {
        return Err(Error::param("family", "every member is zero"));
    }
    Ok(NormEquivalence { ratios, min, max })
}
