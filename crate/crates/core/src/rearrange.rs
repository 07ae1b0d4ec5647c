//! Decreasing rearrangements `f*`, running averages `f**` and the exact
//! `(L_p, L_inf)` K-functional.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::calculus::ScalarField;
use crate::error::{check_exponent, check_positive, Error, Result};
use crate::space::Space;

/// Right-continuous non-increasing step function on `[0, mu)`:
/// `v_i` on `[t_{i-1}, t_i)`, zero from `t_k` on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
    /// `int_0^{t_i} f`, same length as `breaks`.
    #[serde(skip)]
    cum: Vec<f64>,
    mu: f64,
}

impl StepFunction {
    /// `breaks` starts at 0 and has one more entry than `values`.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>, mu: f64) -> Result<Self> {
        if breaks.len() != values.len() + 1 || breaks[0] != 0.0 {
            return Err(Error::param("breaks", "need 0 = t_0 < ... < t_k with one value per step"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("breaks", "must be strictly increasing"));
        }
        if values.windows(2).any(|w| w[0] < w[1]) || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::param("values", "must be finite, non-negative and non-increasing"));
        }
        if !(mu >= breaks[breaks.len() - 1]) || !mu.is_finite() {
            return Err(Error::param("mu", "total mass must be at least the last break"));
        }
        Ok(Self::assemble(breaks, values, mu))
    }

    fn assemble(breaks: Vec<f64>, values: Vec<f64>, mu: f64) -> Self {
        let mut cum = Vec::with_capacity(breaks.len());
        cum.push(0.0);
        for (i, v) in values.iter().enumerate() {
            cum.push(cum[i] + v * (breaks[i + 1] - breaks[i]));
        }
        StepFunction { breaks, values, cum, mu }
    }

    /// Rearrangement of atoms `(|value|, weight)`: sort descending, merge
    /// ties, drop zeros.
    pub fn from_atoms(values: &[f64], weights: &[f64], mu: f64) -> Self {
        let mut atoms: Vec<(f64, f64)> =
            values.iter().zip(weights).map(|(v, w)| (v.abs(), *w)).filter(|a| a.0 > 0.0).collect();
        atoms.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
        let mut breaks = vec![0.0];
        let mut vals: Vec<f64> = Vec::new();
        let mut t = 0.0;
        for (v, w) in atoms {
            t += w;
            if vals.last() == Some(&v) {
                *breaks.last_mut().unwrap() = t;
            } else {
                vals.push(v);
                breaks.push(t);
            }
        }
        let mu = mu.max(t);
        Self::assemble(breaks, vals, mu)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.mu
    }

    /// End of the support, `t_k`.
    pub fn support(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `t >= 0` (right-continuous).
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= t);
        if i == 0 || i > self.values.len() {
            return 0.0;
        }
        self.values[i - 1]
    }

    /// `int_0^T f(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= t);
        if i > self.values.len() {
            return self.cum[self.values.len()];
        }
        self.cum[i - 1] + self.values[i - 1] * (t - self.breaks[i - 1])
    }

    /// `int_0^T f(s)^p ds`.
    pub fn integral_pow(&self, t: f64, p: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let (lo, hi) = (self.breaks[i], self.breaks[i + 1].min(t));
            if hi <= lo {
                break;
            }
            acc += v.powf(p) * (hi - lo);
        }
        acc
    }

    /// `mu({f > lambda})` for the function this rearranges.
    pub fn level_mass(&self, lambda: f64) -> f64 {
        let k = self.values.partition_point(|&v| v > lambda);
        self.breaks[k]
    }

    /// `(f*)^r`, which is also `(|f|^r)*`.
    pub fn powf(&self, r: f64) -> Self {
        Self::assemble(self.breaks.clone(), self.values.iter().map(|v| v.powf(r)).collect(), self.mu)
    }

    /// `||f*||_{L_l(0, inf)}`.
    pub fn lp_norm(&self, l: f64) -> f64 {
        if l.is_infinite() {
            return self.values.first().copied().unwrap_or(0.0);
        }
        self.integral_pow(f64::INFINITY, l).powf(1.0 / l)
    }

    pub fn double_star(&self) -> DoubleStar<'_> {
        DoubleStar { f: self }
    }

    /// `t_break,value` rows, a closing zero row at `t_k`, then `mu_X,0`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_break", "value"])?;
        for (t, v) in self.breaks.iter().zip(&self.values) {
            w.write_record([format!("{t:.16e}"), format!("{v:.16e}")])?;
        }
        if self.support() < self.mu {
            w.write_record([format!("{:.16e}", self.support()), format!("{:.16e}", 0.0)])?;
        }
        w.write_record([format!("{:.16e}", self.mu), format!("{:.16e}", 0.0)])?;
        w.flush().map_err(|e| Error::io("<step csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// `f**(t) = (1/t) int_0^t f*`, piecewise `a + b/t`.
#[derive(Debug, Clone, Copy)]
pub struct DoubleStar<'a> {
    f: &'a StepFunction,
}

/// One smooth piece `a + b/t` on `(t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub a: f64,
    pub b: f64,
}

impl DoubleStar<'_> {
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_positive("t", t)?;
        Ok(self.f.integral(t) / t)
    }

    /// Pieces covering `(0, inf)`; the last has `a = 0` and `t1 = inf`.
    pub fn segments(&self) -> Vec<Segment> {
        let f = self.f;
        let mut out = Vec::with_capacity(f.values.len() + 1);
        for (i, &v) in f.values.iter().enumerate() {
            // on [t_{i-1}, t_i]: (cum_{i-1} + v (t - t_{i-1})) / t
            let b = (f.cum[i] - v * f.breaks[i]).max(0.0);
            out.push(Segment { t0: f.breaks[i], t1: f.breaks[i + 1], a: v, b });
        }
        let total = f.cum[f.values.len()];
        if total > 0.0 {
            out.push(Segment { t0: f.support(), t1: f64::INFINITY, a: 0.0, b: total });
        }
        out
    }

    /// `||f**||_{L_l(0, inf)}` in closed form; infinite for `l = 1` unless
    /// `f = 0`.
    pub fn lp_norm(&self, l: f64) -> Result<f64> {
        check_exponent("l", l)?;
        if self.f.is_zero() {
            return Ok(0.0);
        }
        if l.is_infinite() {
            return Ok(self.f.values[0]);
        }
        if l == 1.0 {
            return Ok(f64::INFINITY);
        }
        let s: f64 = self.segments().iter().map(|s| segment_power_integral(s, l)).sum();
        Ok(s.powf(1.0 / l))
    }
}

/// `int_{t0}^{t1} (a + b/t)^l dt` for `a, b >= 0`, `t0 >= 0`.
pub(crate) fn segment_power_integral(s: &Segment, l: f64) -> f64 {
    let Segment { t0, t1, a, b } = *s;
    if t1 <= t0 {
        return 0.0;
    }
    if b == 0.0 {
        return a.powf(l) * (t1 - t0);
    }
    if a == 0.0 {
        // b^l t^{1-l} / (1-l), needs l > 1 at infinity
        let g = |t: f64| if t.is_infinite() { 0.0 } else { t.powf(1.0 - l) };
        return b.powf(l) * (g(t0) - g(t1)) / (l - 1.0);
    }
    if l.fract() == 0.0 && l <= 64.0 {
        return integer_power(t0, t1, a, b, l as u32);
    }
    let beta = b / a;
    let mut acc = 0.0;
    let (lo, hi) = (beta / 2.0, 2.0 * beta);
    if t0 < lo {
        acc += small_t_series(t0, t1.min(lo), a, b, l);
    }
    if t0.max(lo) < t1.min(hi) {
        acc += gauss_legendre(t0.max(lo), t1.min(hi), a, b, l);
    }
    if t1 > hi {
        acc += large_t_series(t0.max(hi), t1, a, b, l);
    }
    acc
}

/// Binomial expansion of `(a + b/t)^l`, term by term.
fn integer_power(t0: f64, t1: f64, a: f64, b: f64, l: u32) -> f64 {
    let mut acc = 0.0;
    let mut c = 1.0;
    for j in 0..=l {
        let coef = c * a.powi((l - j) as i32) * b.powi(j as i32);
        let part = match j {
            0 => t1 - t0,
            1 => (t1 / t0).ln(),
            _ => {
                let e = 1 - j as i32;
                (t1.powi(e) - t0.powi(e)) / e as f64
            }
        };
        acc += coef * part;
        c = c * (l - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// `t <= beta/2`: `(b/t)^l (1 + a t / b)^l`, series in `a t / b <= 1/2`.
fn small_t_series(t0: f64, t1: f64, a: f64, b: f64, l: f64) -> f64 {
    let ratio = a / b;
    let mut acc = 0.0;
    let mut c = 1.0;
    for j in 0..400 {
        let e = j as f64 - l + 1.0;
        let g = |t: f64| if t == 0.0 { if e > 0.0 { 0.0 } else { f64::INFINITY } } else { t.powf(e) };
        let term = c * ratio.powi(j) * (g(t1) - g(t0)) / e;
        acc += term;
        if j > l as i32 + 2 && term.abs() <= 1e-18 * acc.abs() {
            break;
        }
        c *= (l - j as f64) / (j as f64 + 1.0);
    }
    b.powf(l) * acc
}

/// `t >= 2 beta`: `a^l (1 + beta/t)^l`, series in `beta/t <= 1/2`.
fn large_t_series(t0: f64, t1: f64, a: f64, b: f64, l: f64) -> f64 {
    let beta = b / a;
    let mut acc = 0.0;
    let mut c = 1.0;
    for j in 0..400 {
        let part = match j {
            0 => t1 - t0,
            1 => (t1 / t0).ln(),
            _ => {
                let e = 1 - j;
                let g = |t: f64| if t.is_infinite() { 0.0 } else { t.powi(e) };
                (g(t1) - g(t0)) / e as f64
            }
        };
        let term = c * beta.powi(j) * part;
        acc += term;
        if j > l as i32 + 2 && term.abs() <= 1e-18 * acc.abs() {
            break;
        }
        c *= (l - j as f64) / (j as f64 + 1.0);
    }
    a.powf(l) * acc
}

const GL_NODES: [(f64, f64); 8] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Composite 8-point Gauss–Legendre on geometric pieces of a range whose
/// endpoints differ by at most a factor four; the integrand is analytic
/// there, so the result is exact to rounding.
fn gauss_legendre(t0: f64, t1: f64, a: f64, b: f64, l: f64) -> f64 {
    let pieces = 32;
    let q = (t1 / t0).powf(1.0 / pieces as f64);
    let mut acc = 0.0;
    let mut lo = t0;
    for k in 0..pieces {
        let hi = if k + 1 == pieces { t1 } else { lo * q };
        let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        acc += GL_NODES.iter().map(|&(x, w)| w * (a + b / (m + h * x)).powf(l)).sum::<f64>() * h;
        lo = hi;
    }
    acc
}

/// `f*` of `|f|` under the space's measure.
pub fn decreasing_rearrangement(space: &Space, f: &ScalarField) -> Result<StepFunction> {
    f.check_len(space)?;
    Ok(StepFunction::from_atoms(f, space.weights(), space.total_mass()))
}

/// `(int_0^{t^p} (f*)^p)^{1/p}`; for `p = 1` this is exactly
/// `K(f, t, L_1, L_inf)`.
pub fn k_lp_linf(space: &Space, f: &ScalarField, t: f64, p: f64) -> Result<f64> {
    check_positive("t", t)?;
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::param("p", format!("must be in (0, inf), got {p}")));
    }
    let fs = decreasing_rearrangement(space, f)?;
    if p == 1.0 {
        return Ok(fs.integral(t));
    }
    Ok(fs.integral_pow(t.powf(p), p).powf(1.0 / p))
}
