use serde::Serialize;

use crate::calculus::ScalarField;
use crate::error::{check_exponent, check_positive, Error, Result};
use crate::space::Space;

/// Objective of an exhaustive search:
/// `N_{p1}(f - g) + s N_{p2}(g)`, `N_p(u) = [||u||_p] + || |grad u| ||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeObjective {
    pub p1: f64,
    pub p2: f64,
    pub s: f64,
    /// Include the `||u||_p` terms.
    pub values: bool,
    /// Pin `g(x_0) = 0` at the first point.
    pub gauge: bool,
}

impl LatticeObjective {
    /// `K(f, t, W1_1, W1_inf)`.
    pub fn sobolev(t: f64) -> Self {
        LatticeObjective { p1: 1.0, p2: f64::INFINITY, s: t, values: true, gauge: false }
    }
}

/// Largest space [`lattice_search`] accepts.
pub const LATTICE_MAX_POINTS: usize = 10;

#[derive(Clone)]
struct Acc {
    b_val: f64,
    g_val: f64,
    gb: Vec<f64>,
    gg: Vec<f64>,
}

fn pnorm_part(sum_or_max: f64, p: f64) -> f64 {
    if p.is_infinite() {
        sum_or_max
    } else {
        sum_or_max.powf(1.0 / p)
    }
}

fn add(acc: f64, w: f64, v: f64, p: f64) -> f64 {
    if p.is_infinite() {
        acc.max(v)
    } else {
        acc + w * v.powf(p)
    }
}

/// Exhaustive minimization over `g` with every value on the lattice
/// `{lo - step, lo, ..., hi + step}`, `[lo, hi]` the hull of the values of
/// `f` and `0` (multiples of `step` offset from `lo`, plus `0` itself), by
/// depth-first branch and bound. Returns the optimum and
/// its `g`. Every partial objective is a lower bound for its completions,
/// so the search is exact on the lattice.
pub fn lattice_search(space: &Space, f: &ScalarField, step: f64, obj: &LatticeObjective) -> Result<(f64, ScalarField)> {
    f.check_len(space)?;
    check_positive("step", step)?;
    check_exponent("p1", obj.p1)?;
    check_exponent("p2", obj.p2)?;
    let n = space.len();
    if n > LATTICE_MAX_POINTS {
        return Err(Error::param("space", format!("lattice search is limited to {LATTICE_MAX_POINTS} points, got {n}")));
    }
    // g = 0 is always a candidate split, even when f has one sign
    let lo = f.iter().copied().fold(0.0f64, f64::min) - step;
    let hi = f.iter().copied().fold(0.0f64, f64::max) + step;
    let levels = ((hi - lo) / step).round() as usize;
    let mut cand: Vec<f64> = (0..=levels).map(|k| lo + k as f64 * step).collect();
    if !cand.contains(&0.0) {
        cand.push(0.0);
    }
    let w = space.weights();
    let r = space.neighbor_radius();
    let nbrs: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| (0..x).filter_map(|y| (space.row(x)[y] <= r).then_some((y, space.row(x)[y]))).collect())
        .collect();

    let total = |a: &Acc, upto: usize| -> f64 {
        let (mut sb, mut sg) = (0.0, 0.0);
        for x in 0..upto {
            sb = add(sb, w[x], a.gb[x], obj.p1);
            sg = add(sg, w[x], a.gg[x], obj.p2);
        }
        let mut j = pnorm_part(sb, obj.p1) + obj.s * pnorm_part(sg, obj.p2);
        if obj.values {
            j += pnorm_part(a.b_val, obj.p1) + obj.s * pnorm_part(a.g_val, obj.p2);
        }
        j
    };

    let mut best = f64::INFINITY;
    let mut best_g = vec![0.0; n];
    let mut g = vec![0.0; n];
    let start = Acc { b_val: 0.0, g_val: 0.0, gb: vec![0.0; n], gg: vec![0.0; n] };
    // explicit DFS stack: (depth, candidate index, state before the assignment)
    let mut stack: Vec<(usize, usize, Acc)> = vec![(0, 0, start)];
    while let Some((k, ci, acc)) = stack.pop() {
        if ci >= cand.len() {
            continue;
        }
        stack.push((k, ci + 1, acc.clone()));
        let v = cand[ci];
        if obj.gauge && k == 0 && v != 0.0 {
            continue;
        }
        g[k] = v;
        let mut a = acc;
        let b = f[k] - v;
        a.b_val = add(a.b_val, w[k], b.abs(), obj.p1);
        a.g_val = add(a.g_val, w[k], v.abs(), obj.p2);
        for &(y, d) in &nbrs[k] {
            let qb = (b - (f[y] - g[y])).abs() / d;
            let qg = (v - g[y]).abs() / d;
            a.gb[k] = a.gb[k].max(qb);
            a.gb[y] = a.gb[y].max(qb);
            a.gg[k] = a.gg[k].max(qg);
            a.gg[y] = a.gg[y].max(qg);
        }
        let bound = total(&a, k + 1);
        if bound >= best {
            continue;
        }
        if k + 1 == n {
            best = bound;
            best_g.copy_from_slice(&g);
        } else {
            stack.push((k + 1, 0, a));
        }
    }
    Ok((best, best_g.into()))
}
