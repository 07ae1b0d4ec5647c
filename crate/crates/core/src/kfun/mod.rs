//! K-functionals between Sobolev spaces: `alpha(t)`, the lower and upper
//! brackets, a constructive upper witness from the CZ decomposition, and an
//! optimization oracle for the infimum itself.
//!
//! Throughout, `t` is in mass units and the pair weight is `t^{1/r}`:
//! `K(f, t^{1/r}) = inf_g ||f - g||_{W1_r} + t^{1/r} ||g||_{W1_inf}`.

mod descent;
mod interp;
mod lattice;
mod lp;
#[cfg(test)]
mod tests;

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{gradient_on, lp_raw, ScalarField};
use crate::czd::{czd_global, czd_homogeneous, czd_local, Decomposition, Variant};
use crate::error::{check_exponent, check_positive, Error, Result};
use crate::maximal::maximal_function;
use crate::rearrange::{decreasing_rearrangement, StepFunction};
use crate::space::Space;

pub use lattice::{lattice_search, LatticeObjective, LATTICE_MAX_POINTS};
pub use interp::{interpolation_norm, interpolation_norm_of_curve, norm_equivalence_report, NormEquivalence, PairSpec};

use descent::DESCENT_TOL;
use lp::LpMode;

fn check_t(t: f64) -> Result<()> {
    check_positive("t", t)
}

fn check_r(r: f64) -> Result<()> {
    check_exponent("r", r)?;
    if r.is_infinite() {
        return Err(Error::param("r", "must be finite"));
    }
    Ok(())
}

/// `(M h^q)^*` with `h = |f| + |grad f|` or `|grad f|`.
fn level_rearrangement(space: &Space, f: &ScalarField, q: f64, with_values: bool) -> Result<StepFunction> {
    f.check_len(space)?;
    check_exponent("q", q)?;
    let g = gradient_on(space.neighborhood(), f);
    let hq: ScalarField = (0..f.len())
        .map(|x| if with_values { f[x].abs() + g[x] } else { g[x] }.powf(q))
        .collect();
    let m = maximal_function(space, &hq)?;
    decreasing_rearrangement(space, &m)
}

/// `alpha(t) = ((M(|f| + |grad f|)^q)^*(t))^{1/q}`; non-increasing and
/// right-continuous, zero from `mu(X)` on.
pub fn alpha_of_t(space: &Space, f: &ScalarField, q: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(root_at_least(level_rearrangement(space, f, q, true)?.eval(t), q))
}

/// The gradient-only analogue of [`alpha_of_t`].
pub fn alpha_homogeneous(space: &Space, f: &ScalarField, q: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(root_at_least(level_rearrangement(space, f, q, false)?.eval(t), q))
}

/// Smallest float `a >= x^{1/q}` with `a^q >= x`, so that the strict level
/// set `{M h^q > a^q}` never picks up points sitting exactly at level `x`.
fn root_at_least(x: f64, q: f64) -> f64 {
    let mut a = x.powf(1.0 / q);
    while a.powf(q) < x {
        a = a.next_up();
    }
    a
}

/// `(|u|^e)^{**}(t)^{1/e}`.
fn double_star_root(space: &Space, u: &[f64], e: f64, t: f64) -> Result<f64> {
    let ue: ScalarField = u.iter().map(|v| v.abs().powf(e)).collect();
    let fs = decreasing_rearrangement(space, &ue)?;
    Ok(fs.double_star().eval(t)?.powf(1.0 / e))
}

/// `t^{1/r} ((|f|^r)^{**}(t)^{1/r} + (|grad f|^r)^{**}(t)^{1/r})`, without
/// any constant.
pub fn k_lower(space: &Space, f: &ScalarField, t: f64, r: f64) -> Result<f64> {
    check_t(t)?;
    check_r(r)?;
    f.check_len(space)?;
    let g = gradient_on(space.neighborhood(), f);
    Ok(t.powf(1.0 / r) * (double_star_root(space, f, r, t)? + double_star_root(space, &g, r, t)?))
}

/// `t^{1/r} (|grad f|^r)^{**}(t)^{1/r}`.
pub fn k_lower_homogeneous(space: &Space, f: &ScalarField, t: f64, r: f64) -> Result<f64> {
    check_t(t)?;
    check_r(r)?;
    f.check_len(space)?;
    let g = gradient_on(space.neighborhood(), f);
    Ok(t.powf(1.0 / r) * double_star_root(space, &g, r, t)?)
}

/// How the upper witness is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessSpec {
    pub variant: Variant,
    pub q: f64,
    pub p: f64,
    /// Cover radius of the local variant.
    pub rho: f64,
}

impl WitnessSpec {
    pub fn global(q: f64, p: f64) -> Self {
        WitnessSpec { variant: Variant::Global, q, p, rho: 1.0 }
    }

    pub fn local(q: f64, p: f64, rho: f64) -> Self {
        WitnessSpec { variant: Variant::Local, q, p, rho }
    }

    pub fn homogeneous(q: f64, p: f64) -> Self {
        WitnessSpec { variant: Variant::Homogeneous, q, p, rho: 1.0 }
    }
}

/// A feasible split `f = b + g` and its objective.
#[derive(Debug, Clone, Serialize)]
pub struct KUpper {
    /// `||b||_{W1_r} + t^{1/r} ||g||_{W1_inf}` (gradient parts only for the
    /// homogeneous variant): an upper bound on `K` by feasibility.
    pub value: f64,
    /// `t^{1/r} ((|f|^q)^{**}(t)^{1/q} + (|grad f|^q)^{**}(t)^{1/q})`, or its
    /// gradient term alone.
    pub bracket: f64,
    pub alpha: f64,
    /// `mu(Omega)` of the witness.
    pub mu_omega: f64,
    /// `b = f, g = 0` because `Omega = X`.
    pub direct: bool,
    #[serde(skip)]
    pub g: ScalarField,
    #[serde(skip)]
    pub decomposition: Option<Decomposition>,
}

/// Runs the decomposition at `alpha(t)` and evaluates the split it yields.
/// When `Omega = X` (including `alpha(t) = 0`) the global and homogeneous
/// variants fall back to `b = f`, `g = 0`.
pub fn k_upper(space: &Space, f: &ScalarField, t: f64, r: f64, spec: &WitnessSpec) -> Result<KUpper> {
    check_t(t)?;
    check_r(r)?;
    f.check_len(space)?;
    let (q, p) = (spec.q, spec.p);
    if !(r <= q) {
        return Err(Error::param("r", format!("need r <= q, got r = {r}, q = {q}")));
    }
    let homogeneous = spec.variant == Variant::Homogeneous;
    let grad_f = gradient_on(space.neighborhood(), f);
    let bracket = t.powf(1.0 / r)
        * (if homogeneous { 0.0 } else { double_star_root(space, f, q, t)? } + double_star_root(space, &grad_f, q, t)?);
    let alpha = if homogeneous { alpha_homogeneous(space, f, q, t)? } else { alpha_of_t(space, f, q, t)? };

    let s = t.powf(1.0 / r);
    let objective = |g: &[f64]| -> f64 {
        let b: Vec<f64> = f.iter().zip(g).map(|(a, c)| a - c).collect();
        split_value(space, &b, g, r, s, !homogeneous)
    };
    let direct = |why: &str| {
        log::debug!("k_upper at t = {t}: {why}, using b = f");
        let g = ScalarField::zeros(f.len());
        KUpper {
            value: objective(&g),
            bracket,
            alpha,
            mu_omega: space.total_mass(),
            direct: true,
            g,
            decomposition: None,
        }
    };

    let control_vanishes = grad_f.iter().all(|&v| v == 0.0) && (homogeneous || f.is_zero());
    if control_vanishes {
        // Omega is empty at every level
        return Ok(KUpper { value: objective(f), bracket, alpha, mu_omega: 0.0, direct: false, g: f.clone(), decomposition: None });
    }
    if alpha == 0.0 {
        return Ok(direct("alpha(t) = 0"));
    }
    let dec = match spec.variant {
        Variant::Global => czd_global(space, f, q, p, alpha),
        Variant::Homogeneous => czd_homogeneous(space, f, q, p, alpha),
        Variant::Local => czd_local(space, f, q, p, alpha, spec.rho),
    };
    let dec = match dec {
        Ok(d) => d,
        Err(Error::OmegaIsWholeSpace) => return Ok(direct("Omega = X")),
        Err(e) => return Err(e),
    };
    let bad = dec.bad_part();
    let g: Vec<f64> = f.iter().zip(bad.iter()).map(|(a, b)| a - b).collect();
    // b is evaluated as the sum of the pieces, g as the remainder
    let value = split_value(space, &bad, &g, r, s, !homogeneous);
    let g_field = ScalarField::from(g);
    let mu_omega = if dec.whole_space { space.total_mass() } else { dec.omega.mass(space) };
    Ok(KUpper {
        value,
        bracket,
        alpha,
        mu_omega,
        direct: dec.whole_space,
        g: if dec.whole_space { ScalarField::zeros(f.len()) } else { g_field },
        decomposition: Some(dec),
    })
}

/// `||b||_{W1_r} + s ||g||_{W1_inf}` (gradient parts only without
/// `values`). Witness and oracle both go through here so that equal splits
/// evaluate to bit-identical values.
pub(crate) fn split_value(space: &Space, b: &[f64], g: &[f64], r: f64, s: f64, values: bool) -> f64 {
    let nb = space.neighborhood();
    let w = space.weights();
    let mut b_norm = lp_raw(w, &gradient_on(nb, b), r);
    let mut g_norm = lp_raw(w, &gradient_on(nb, g), f64::INFINITY);
    if values {
        b_norm += lp_raw(w, b, r);
        g_norm += lp_raw(w, g, f64::INFINITY);
    }
    b_norm + s * g_norm
}

/// Value of the infimum and a minimizer.
#[derive(Debug, Clone, Serialize)]
pub struct KOracle {
    pub value: f64,
    #[serde(skip)]
    pub g: ScalarField,
    /// Solved as a linear program (exact up to simplex round-off).
    pub exact: bool,
    /// Descent reached its stopping tolerance; always true for the LP.
    pub converged: bool,
}

fn from_lp(s: lp::LpSolution) -> KOracle {
    KOracle { value: s.value, g: s.g.into(), exact: true, converged: true }
}

fn from_descent(d: descent::DescentResult, what: &str) -> KOracle {
    if !d.converged {
        log::warn!("{what}: descent stopped above its {DESCENT_TOL:e} tolerance; value {:.6e} is not certified", d.value);
    }
    KOracle { value: d.value, g: d.g.into(), exact: false, converged: d.converged }
}

/// `K(f, t^{1/r}, W1_r, W1_inf)`. Exact LP for `r = 1`, descent otherwise.
pub fn k_oracle(space: &Space, f: &ScalarField, t: f64, r: f64) -> Result<KOracle> {
    check_t(t)?;
    check_r(r)?;
    f.check_len(space)?;
    let s = t.powf(1.0 / r);
    if r == 1.0 {
        return Ok(from_lp(lp::solve(space, f, s, LpMode::SOBOLEV)?));
    }
    let pr = descent::Problem { p1: r, p2: f64::INFINITY, s, values: true, gauge: None };
    Ok(from_descent(descent::minimize(space, f, &pr), "k_oracle"))
}

/// The same LP with the gradient terms removed: `K(f, t, L_1, L_inf)`.
pub fn k_oracle_lebesgue(space: &Space, f: &ScalarField, t: f64) -> Result<KOracle> {
    check_t(t)?;
    f.check_len(space)?;
    Ok(from_lp(lp::solve(space, f, t, LpMode::LEBESGUE)?))
}

/// `inf_g || |grad (f - g)| ||_r + t^{1/r} || |grad g| ||_inf`, with the
/// minimizer pinned to `g(x_0) = 0` at the first point.
pub fn k_oracle_homogeneous(space: &Space, f: &ScalarField, t: f64, r: f64) -> Result<KOracle> {
    check_t(t)?;
    check_r(r)?;
    f.check_len(space)?;
    let s = t.powf(1.0 / r);
    if r == 1.0 {
        return Ok(from_lp(lp::solve(space, f, s, LpMode::HOMOGENEOUS)?));
    }
    let pr = descent::Problem { p1: r, p2: f64::INFINITY, s, values: false, gauge: Some(0) };
    Ok(from_descent(descent::minimize(space, f, &pr), "k_oracle_homogeneous"))
}

/// `K(f, t, W1_{p1}, W1_{p2}) = inf_g ||f - g||_{W1_{p1}} + t ||g||_{W1_{p2}}`
/// (note: weight `t` itself). LP for `(1, inf)`, descent otherwise.
pub fn k_oracle_pair(space: &Space, f: &ScalarField, t: f64, p1: f64, p2: f64) -> Result<KOracle> {
    check_t(t)?;
    check_exponent("p1", p1)?;
    check_exponent("p2", p2)?;
    if !(p1 < p2) {
        return Err(Error::param("p1", format!("need p1 < p2, got {p1} and {p2}")));
    }
    f.check_len(space)?;
    if p1 == 1.0 && p2.is_infinite() {
        return Ok(from_lp(lp::solve(space, f, t, LpMode::SOBOLEV)?));
    }
    let pr = descent::Problem { p1, p2, s: t, values: true, gauge: None };
    Ok(from_descent(descent::minimize(space, f, &pr), "k_oracle_pair"))
}

/// Objective of `g` in the pair problem, for checking candidate minimizers.
pub fn pair_objective(space: &Space, f: &ScalarField, g: &ScalarField, t: f64, p1: f64, p2: f64) -> Result<f64> {
    f.check_len(space)?;
    g.check_len(space)?;
    let pr = descent::Problem { p1, p2, s: t, values: true, gauge: None };
    Ok(descent::objective(space, f, g, &pr))
}

/// Lower bracket, oracle, and the homogeneous witness at one `t`.
#[derive(Debug, Clone, Serialize)]
pub struct KTriple {
    pub lower: f64,
    pub oracle: f64,
    pub upper: f64,
    pub upper_bracket: f64,
    pub mu_omega: f64,
}

pub fn k_homogeneous(space: &Space, f: &ScalarField, t: f64, r: f64, q: f64) -> Result<KTriple> {
    let lower = k_lower_homogeneous(space, f, t, r)?;
    let oracle = k_oracle_homogeneous(space, f, t, r)?;
    let up = k_upper(space, f, t, r, &WitnessSpec::homogeneous(q, q))?;
    Ok(KTriple { lower, oracle: oracle.value, upper: up.value, upper_bracket: up.bracket, mu_omega: up.mu_omega })
}

/// `n` log-spaced points on `[min weight / 4, 4 mu(X)]`.
pub fn t_grid(space: &Space, n: usize) -> Vec<f64> {
    let lo = space.min_weight() / 4.0;
    let hi = 4.0 * space.total_mass();
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Parameters of a [`KCurve`] run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSpec {
    pub r: f64,
    pub witness: WitnessSpec,
    pub grid: usize,
}

/// Lower bracket, oracle, and upper witness over a log-spaced `t` grid.
#[derive(Debug, Clone, Serialize)]
pub struct KCurve {
    pub r: f64,
    pub q: f64,
    pub p: f64,
    pub variant: Variant,
    pub t: Vec<f64>,
    pub lower: Vec<f64>,
    pub oracle: Vec<f64>,
    /// Witness values (feasible objectives).
    pub upper: Vec<f64>,
    pub upper_bracket: Vec<f64>,
    pub mu_omega: Vec<f64>,
    /// Every oracle solve was exact or converged.
    pub oracle_converged: bool,
}

/// Constants measured on a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveConstants {
    /// `min_t oracle / lower` over `t` with a positive bracket.
    pub c1: f64,
    /// `max_t upper / upper_bracket` over `t` with a positive bracket.
    pub c2: f64,
    /// `max_t (oracle - upper)`; positive only through round-off.
    pub feasibility_gap: f64,
    /// Largest violation of discrete concavity of the oracle in `t`.
    pub concavity_defect: f64,
    /// Largest decrease of the oracle along the grid.
    pub monotonicity_defect: f64,
}

pub fn k_curve(space: &Space, f: &ScalarField, spec: &CurveSpec) -> Result<KCurve> {
    f.check_len(space)?;
    if spec.grid == 0 {
        return Err(Error::param("grid", "needs at least one point"));
    }
    let r = spec.r;
    let homogeneous = spec.witness.variant == Variant::Homogeneous;
    let ts = t_grid(space, spec.grid);
    // warm the shared lazy structures before fanning out
    let _ = space.neighborhood();
    let _ = space.ball_index();
    let rows: Vec<(f64, KOracle, KUpper)> = ts
        .par_iter()
        .map(|&t| -> Result<_> {
            let (lower, oracle) = if homogeneous {
                (k_lower_homogeneous(space, f, t, r)?, k_oracle_homogeneous(space, f, t, r)?)
            } else {
                (k_lower(space, f, t, r)?, k_oracle(space, f, t, r)?)
            };
            Ok((lower, oracle, k_upper(space, f, t, r, &spec.witness)?))
        })
        .collect::<Result<_>>()?;
    let oracle_converged = rows.iter().all(|(_, o, _)| o.converged);
    Ok(KCurve {
        r,
        q: spec.witness.q,
        p: spec.witness.p,
        variant: spec.witness.variant,
        lower: rows.iter().map(|(l, _, _)| *l).collect(),
        oracle: rows.iter().map(|(_, o, _)| o.value).collect(),
        upper: rows.iter().map(|(_, _, u)| u.value).collect(),
        upper_bracket: rows.iter().map(|(_, _, u)| u.bracket).collect(),
        mu_omega: rows.iter().map(|(_, _, u)| u.mu_omega).collect(),
        t: ts,
        oracle_converged,
    })
}

impl KCurve {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn constants(&self) -> CurveConstants {
        let ratio = |num: &[f64], den: &[f64], init: f64, pick: fn(f64, f64) -> f64| {
            num.iter().zip(den).filter(|(_, &d)| d > 0.0).map(|(n, d)| n / d).fold(init, pick)
        };
        let c1 = ratio(&self.oracle, &self.lower, f64::INFINITY, f64::min);
        let c2 = ratio(&self.upper, &self.upper_bracket, 0.0, f64::max);
        let feasibility_gap = self.oracle.iter().zip(&self.upper).map(|(o, u)| o - u).fold(f64::NEG_INFINITY, f64::max);
        let mut concavity_defect: f64 = 0.0;
        let mut monotonicity_defect: f64 = 0.0;
        for i in 1..self.len() {
            monotonicity_defect = monotonicity_defect.max(self.oracle[i - 1] - self.oracle[i]);
            if i + 1 < self.len() {
                let (t0, t1, t2) = (self.t[i - 1], self.t[i], self.t[i + 1]);
                let lam = (t2 - t1) / (t2 - t0);
                let chord = lam * self.oracle[i - 1] + (1.0 - lam) * self.oracle[i + 1];
                concavity_defect = concavity_defect.max(chord - self.oracle[i]);
            }
        }
        CurveConstants {
            c1: if c1.is_finite() { c1 } else { 0.0 },
            c2,
            feasibility_gap,
            concavity_defect,
            monotonicity_defect,
        }
    }

    /// `t,lower,oracle,upper,witness_mu_Omega`, full precision.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "lower", "oracle", "upper", "witness_mu_Omega"])?;
        for i in 0..self.len() {
            let row = [self.t[i], self.lower[i], self.oracle[i], self.upper[i], self.mu_omega[i]];
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush().map_err(|e| Error::io("<kcurve csv>", e))
    }
}
