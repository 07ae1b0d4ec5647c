//! Projected subgradient descent for `inf_g N_{p1}(f - g) + s N_{p2}(g)`,
//! with `N_p(u) = ||u||_p + || |grad u| ||_p` (or the gradient term alone).
//!
//! Rounds of normalized subgradient steps restart from the best iterate
//! with a halved step; small spaces get a final compass-search polish.

use crate::calculus::Neighborhood;
use crate::space::Space;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Problem {
    pub p1: f64,
    pub p2: f64,
    pub s: f64,
    pub values: bool,
    pub gauge: Option<usize>,
}

pub(crate) struct DescentResult {
    pub value: f64,
    pub g: Vec<f64>,
    pub converged: bool,
}

/// Relative improvement over the last rounds below which the run counts as
/// converged.
pub(crate) const DESCENT_TOL: f64 = 1e-6;

const ROUNDS: usize = 48;
const STEPS: usize = 160;
const POLISH_MAX_POINTS: usize = 64;

/// `d ||v||_p / d v` for `v >= 0` or signed `v`, scaled and accumulated.
fn lp_sub(w: &[f64], v: &[f64], p: f64, scale: f64, out: &mut [f64]) -> f64 {
    let n = v.len();
    if p.is_infinite() {
        let (mut k, mut m) = (0, 0.0f64);
        for (x, a) in v.iter().enumerate() {
            if a.abs() > m {
                m = a.abs();
                k = x;
            }
        }
        if m > 0.0 {
            out[k] += scale * v[k].signum();
        }
        return m;
    }
    if p == 1.0 {
        let mut s = 0.0;
        for x in 0..n {
            s += w[x] * v[x].abs();
            if v[x] != 0.0 {
                out[x] += scale * w[x] * v[x].signum();
            }
        }
        return s;
    }
    let s: f64 = (0..n).map(|x| w[x] * v[x].abs().powf(p)).sum();
    if s == 0.0 {
        return 0.0;
    }
    let norm = s.powf(1.0 / p);
    let k = scale / norm.powf(p - 1.0);
    for x in 0..n {
        if v[x] != 0.0 {
            out[x] += k * w[x] * v[x].abs().powf(p - 1.0) * v[x].signum();
        }
    }
    norm
}

/// `N_p(u)`, adding `scale * subgradient` into `out`.
fn norm_sub(nb: &Neighborhood, w: &[f64], u: &[f64], p: f64, values: bool, scale: f64, out: &mut [f64]) -> f64 {
    let n = u.len();
    let mut total = 0.0;
    if values {
        total += lp_sub(w, u, p, scale, out);
    }
    let mut grad = vec![0.0; n];
    let mut arg = vec![usize::MAX; n];
    for x in 0..n {
        for (y, d) in nb.of(x) {
            let q = (u[y] - u[x]).abs() / d;
            if q > grad[x] {
                grad[x] = q;
                arg[x] = y;
            }
        }
    }
    let mut coef = vec![0.0; n];
    total += lp_sub(w, &grad, p, 1.0, &mut coef);
    for x in 0..n {
        if arg[x] != usize::MAX && coef[x] != 0.0 {
            let y = arg[x];
            let d = nb.of(x).find(|&(z, _)| z == y).map(|(_, d)| d).unwrap_or(1.0);
            let sg = (u[y] - u[x]).signum() * scale * coef[x] / d;
            out[y] += sg;
            out[x] -= sg;
        }
    }
    total
}

pub(crate) fn objective(space: &Space, f: &[f64], g: &[f64], pr: &Problem) -> f64 {
    let mut scratch = vec![0.0; f.len()];
    eval(space, f, g, pr, &mut scratch)
}

fn eval(space: &Space, f: &[f64], g: &[f64], pr: &Problem, sub: &mut [f64]) -> f64 {
    let nb = space.neighborhood();
    let w = space.weights();
    sub.iter_mut().for_each(|v| *v = 0.0);
    let b: Vec<f64> = f.iter().zip(g).map(|(a, c)| a - c).collect();
    let j0 = norm_sub(nb, w, &b, pr.p1, pr.values, -1.0, sub);
    let j1 = norm_sub(nb, w, g, pr.p2, pr.values, pr.s, sub);
    j0 + pr.s * j1
}

fn project(g: &mut [f64], pr: &Problem) {
    if let Some(x0) = pr.gauge {
        let c = g[x0];
        g.iter_mut().for_each(|v| *v -= c);
    }
}

pub(crate) fn minimize(space: &Space, f: &[f64], pr: &Problem) -> DescentResult {
    let n = f.len();
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sub = vec![0.0; n];
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; n], f.to_vec(), f.iter().map(|v| 0.5 * v).collect()];
    for g in &mut starts {
        project(g, pr);
    }
    let (mut best, mut best_g) = (f64::INFINITY, Vec::new());
    for g in starts {
        let v = objective(space, f, &g, pr);
        if v < best {
            best = v;
            best_g = g;
        }
    }
    if scale == 0.0 || best == 0.0 {
        return DescentResult { value: best, g: best_g, converged: true };
    }

    let mut history = Vec::with_capacity(ROUNDS);
    let mut eta = 0.5 * scale;
    for _ in 0..ROUNDS {
        let mut g = best_g.clone();
        for k in 0..STEPS {
            let v = eval(space, f, &g, pr, &mut sub);
            if v < best {
                best = v;
                best_g.copy_from_slice(&g);
            }
            let norm = sub.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = eta / ((k + 1) as f64).sqrt() / norm;
            for (a, d) in g.iter_mut().zip(&sub) {
                *a -= step * d;
            }
            project(&mut g, pr);
        }
        history.push(best);
        eta *= 0.5;
    }
    if n <= POLISH_MAX_POINTS {
        polish(space, f, pr, &mut best, &mut best_g, scale);
    }
    let tail = history[history.len() - 8];
    let converged = (tail - best) <= DESCENT_TOL * best.max(f64::MIN_POSITIVE);
    DescentResult { value: best, g: best_g, converged }
}

/// Compass search over coordinates, a common shift, and a rescaling.
fn polish(space: &Space, f: &[f64], pr: &Problem, best: &mut f64, g: &mut Vec<f64>, scale: f64) {
    let n = g.len();
    let mut delta = 1e-2 * scale;
    while delta > 1e-10 * scale {
        let mut improved = true;
        let mut passes = 0;
        while improved && passes < 40 {
            improved = false;
            passes += 1;
            for dir in 0..n + 2 {
                for sign in [1.0, -1.0] {
                    let mut trial = g.clone();
                    match dir {
                        d if d < n => trial[d] += sign * delta,
                        d if d == n => trial.iter_mut().for_each(|v| *v += sign * delta),
                        _ => {
                            let k = 1.0 + sign * delta / scale;
                            trial.iter_mut().for_each(|v| *v *= k);
                        }
                    }
                    project(&mut trial, pr);
                    let v = objective(space, f, &trial, pr);
                    if v < *best {
                        *best = v;
                        *g = trial;
                        improved = true;
                    }
                }
            }
        }
        delta *= 0.25;
    }
}
