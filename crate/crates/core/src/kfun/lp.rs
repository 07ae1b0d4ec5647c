//! Linear program for `inf_g ||f - g||_{W1_1} + s ||g||_{W1_inf}`.
//!
//! With `b = f - g = u+ - u-`, every edge `{x, y}` of the neighbourhood
//! graph carries `(b_x - b_y)/d = e+ - e-`; then
//! * `|b|` is `u+ + u-` (weighted cost),
//! * `|grad b|(x) <= G_x` via `G_x >= e+ + e-` on every incident edge,
//! * `||g||_inf <= A` and `|| |grad g| ||_inf <= H` are two-sided bounds.
//!
//! All norms are polyhedral, so the optimum is exact up to simplex round-off.
//! The reported value is the least exactly evaluated objective among the
//! simplex point and the trivial splits `g = 0`, `g = f` (shifted to meet
//! the gauge), so round-off never lifts it above either closed-form bound.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Variable};

use crate::calculus::lp_raw;
use crate::error::{Error, Result};
use crate::space::Space;

/// Which terms enter the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LpMode {
    /// `||f - g||_1` and `s ||g||_inf`.
    pub values: bool,
    /// `|| |grad (f - g)| ||_1` and `s || |grad g| ||_inf`.
    pub gradient: bool,
    /// Pin `g(x0) = 0`.
    pub gauge: Option<usize>,
}

impl LpMode {
    pub const SOBOLEV: LpMode = LpMode { values: true, gradient: true, gauge: None };
    pub const LEBESGUE: LpMode = LpMode { values: true, gradient: false, gauge: None };
    pub const HOMOGENEOUS: LpMode = LpMode { values: false, gradient: true, gauge: Some(0) };
}

pub(crate) struct LpSolution {
    pub value: f64,
    pub g: Vec<f64>,
}

pub(crate) fn solve(space: &Space, f: &[f64], s: f64, mode: LpMode) -> Result<LpSolution> {
    let n = space.len();
    let w = space.weights();
    let inf = f64::INFINITY;
    let vcost = if mode.values { 1.0 } else { 0.0 };
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let up: Vec<Variable> = (0..n).map(|x| lp.add_var(vcost * w[x], (0.0, inf))).collect();
    let um: Vec<Variable> = (0..n).map(|x| lp.add_var(vcost * w[x], (0.0, inf))).collect();
    if mode.values {
        let a = lp.add_var(s, (0.0, inf));
        for x in 0..n {
            // A >= +-(f - u+ + u-)
            lp.add_constraint([(a, 1.0), (up[x], 1.0), (um[x], -1.0)], ComparisonOp::Ge, f[x]);
            lp.add_constraint([(a, 1.0), (up[x], -1.0), (um[x], 1.0)], ComparisonOp::Ge, -f[x]);
        }
    }
    if mode.gradient {
        let gx: Vec<Variable> = (0..n).map(|x| lp.add_var(w[x], (0.0, inf))).collect();
        let h = lp.add_var(s, (0.0, inf));
        for (x, y, d) in space.neighborhood().edges() {
            let df = (f[x] - f[y]) / d;
            let ep = lp.add_var(0.0, (0.0, inf));
            let em = lp.add_var(0.0, (0.0, inf));
            let k = 1.0 / d;
            lp.add_constraint(
                [(up[x], k), (um[x], -k), (up[y], -k), (um[y], k), (ep, -1.0), (em, 1.0)],
                ComparisonOp::Eq,
                0.0,
            );
            lp.add_constraint([(gx[x], 1.0), (ep, -1.0), (em, -1.0)], ComparisonOp::Ge, 0.0);
            lp.add_constraint([(gx[y], 1.0), (ep, -1.0), (em, -1.0)], ComparisonOp::Ge, 0.0);
            // (g_x - g_y)/d = df - (e+ - e-)
            lp.add_constraint([(h, 1.0), (ep, 1.0), (em, -1.0)], ComparisonOp::Ge, df);
            lp.add_constraint([(h, 1.0), (ep, -1.0), (em, 1.0)], ComparisonOp::Ge, -df);
        }
    }
    if let Some(x0) = mode.gauge {
        lp.add_constraint([(up[x0], 1.0), (um[x0], -1.0)], ComparisonOp::Eq, f[x0]);
    }
    let sol = match lp.solve().map_err(|e| Error::Solver(e.to_string()))? {
        SolveOutcome::Solution(s) => s,
        SolveOutcome::Interrupted(_) => return Err(Error::Solver("simplex interrupted".into())),
    };
    let g_lp: Vec<f64> = (0..n).map(|x| f[x] - sol.var_value(up[x]) + sol.var_value(um[x])).collect();
    let shift = mode.gauge.map_or(0.0, |x0| f[x0]);
    let trivial = [vec![0.0; n], f.iter().map(|v| v - shift).collect()];
    let mut best = LpSolution { value: sol.objective().max(0.0), g: g_lp.clone() };
    for g in std::iter::once(g_lp).chain(trivial) {
        let v = evaluate(space, f, &g, s, mode);
        if v < best.value {
            best = LpSolution { value: v, g };
        }
    }
    Ok(best)
}

/// The LP objective at `g`, computed directly.
fn evaluate(space: &Space, f: &[f64], g: &[f64], s: f64, mode: LpMode) -> f64 {
    let b: Vec<f64> = f.iter().zip(g).map(|(a, c)| a - c).collect();
    if mode.gradient {
        super::split_value(space, &b, g, 1.0, s, mode.values)
    } else {
        let w = space.weights();
        lp_raw(w, &b, 1.0) + s * lp_raw(w, g, f64::INFINITY)
    }
}
