//! Uncentered Hardy–Littlewood maximal operators over open balls.
//!
//! Around a center the distinct balls are the tie-group prefixes of its
//! distance ordering, so `Mf` needs only prefix averages and a suffix
//! maximum per center: `O(n^2)` overall.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::rearrange::{decreasing_rearrangement, StepFunction};
use crate::space::{PointSet, Space};

/// `Mf(x) = max_{B ∋ x} avg_B |f|`.
pub fn maximal_function(space: &Space, f: &ScalarField) -> Result<ScalarField> {
    f.check_len(space)?;
    Ok(maximal_masked(space, None, f))
}

/// `M_E f(x) = max_{B ∋ x, center in E} avg_{B ∩ E} |f|` for `x ∈ E`; the
/// returned field is zero off `E`.
pub fn relative_maximal(space: &Space, e: &PointSet, f: &ScalarField) -> Result<ScalarField> {
    f.check_len(space)?;
    if e.universe() != space.len() {
        return Err(Error::LengthMismatch { expected: space.len(), got: e.universe() });
    }
    if e.is_empty() {
        return Err(Error::param("E", "relative maximal function needs a nonempty set"));
    }
    Ok(maximal_masked(space, Some(e.mask()), f))
}

fn maximal_masked(space: &Space, mask: Option<&[bool]>, f: &[f64]) -> ScalarField {
    let n = space.len();
    let idx = space.ball_index();
    let w = space.weights();
    let inside = |p: usize| mask.is_none_or(|m| m[p]);
    let out = (0..n)
        .into_par_iter()
        .filter(|&c| inside(c))
        .fold(
            || (vec![0.0f64; n], Vec::<(usize, f64)>::new(), Vec::<f64>::new()),
            |(mut best, mut members, mut suffix), c| {
                members.clear();
                // members of E in distance order, with distances
                let order = idx.order(c);
                let dist = idx.sorted_distances(c);
                for (j, &p) in order.iter().enumerate() {
                    if inside(p as usize) {
                        members.push((p as usize, dist[j]));
                    }
                }
                // prefix averages at tie-group ends, then suffix maxima
                suffix.clear();
                suffix.resize(members.len(), 0.0);
                let (mut num, mut den) = (0.0, 0.0);
                for j in 0..members.len() {
                    let p = members[j].0;
                    num += w[p] * f[p].abs();
                    den += w[p];
                    let end = j + 1 == members.len() || members[j + 1].1 != members[j].1;
                    // the singleton average is |f| itself; w |f| / w may round below it
                    suffix[j] = match (end, j) {
                        (false, _) => f64::NEG_INFINITY,
                        (true, 0) => f[p].abs(),
                        (true, _) => num / den,
                    };
                }
                let mut run = f64::NEG_INFINITY;
                for j in (0..members.len()).rev() {
                    run = run.max(suffix[j]);
                    let p = members[j].0;
                    if run > best[p] {
                        best[p] = run;
                    }
                }
                (best, members, suffix)
            },
        )
        .map(|(best, _, _)| best)
        .reduce(
            || vec![0.0; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                a
            },
        );
    ScalarField::from(out)
}

/// `sup_lambda lambda * mu({Mf > lambda}) / ||f||_1`, with `lambda` just below
/// each distinct value of `Mf` (relative gap `2^-40`).
pub fn weak_type_ratio(space: &Space, f: &ScalarField) -> Result<f64> {
    let m = maximal_function(space, f)?;
    let l1: f64 = f.iter().zip(space.weights()).map(|(v, w)| v.abs() * w).sum();
    if l1 == 0.0 {
        return Err(Error::param("f", "weak-type ratio is undefined for f = 0"));
    }
    Ok(weak_type_from(space, &m, l1))
}

pub(crate) fn weak_type_from(space: &Space, m: &[f64], l1: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = m.iter().copied().zip(space.weights().iter().copied()).collect();
    pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let eps = 2f64.powi(-40);
    let mut best: f64 = 0.0;
    let mut mass = 0.0;
    let mut j = 0;
    while j < pairs.len() {
        let v = pairs[j].0;
        let lam = v * (1.0 - eps);
        // everything with Mf > lam: this value and all larger ones, plus any
        // smaller value that still exceeds lam
        while j < pairs.len() && pairs[j].0 > lam {
            mass += pairs[j].1;
            j += 1;
        }
        if lam > 0.0 {
            best = best.max(lam * mass / l1);
        }
    }
    best
}

/// Exact `inf_t` and `sup_t` of `(Mf)*(t) / f**(t)` over `0 < t < mu(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RearrangementComparison {
    pub inf: f64,
    pub sup: f64,
}

pub fn maximal_vs_double_star(space: &Space, f: &ScalarField) -> Result<RearrangementComparison> {
    let m = maximal_function(space, f)?;
    let ms = decreasing_rearrangement(space, &m)?;
    let fs = decreasing_rearrangement(space, f)?;
    if fs.is_zero() {
        return Err(Error::param("f", "comparison is undefined for f = 0"));
    }
    Ok(compare_steps(&ms, &fs, space.total_mass()))
}

pub(crate) fn compare_steps(ms: &StepFunction, fs: &StepFunction, mu: f64) -> RearrangementComparison {
    let mut cuts: Vec<f64> = ms.breaks().iter().chain(fs.breaks()).copied().filter(|&t| t < mu).collect();
    cuts.push(mu);
    cuts.sort_unstable_by(f64::total_cmp);
    cuts.dedup();
    let ds = fs.double_star();
    let fss = |t: f64| if t == 0.0 { fs.eval(0.0) } else { ds.eval(t).expect("t > 0") };
    let (mut inf, mut sup) = (f64::INFINITY, 0.0f64);
    // on [s0, s1) (Mf)* is constant and f** decreasing: extremes at the ends
    for w in cuts.windows(2) {
        let c = ms.eval(w[0]);
        inf = inf.min(c / fss(w[0]));
        sup = sup.max(c / fss(w[1]));
    }
    RearrangementComparison { inf, sup }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields;
    use crate::space::{build_grid, PointId, WeightProfile};
    use proptest::prelude::*;

    fn line(n: usize) -> Space {
        build_grid(&[n], 1.0, WeightProfile::Uniform).unwrap()
    }

    /// Every (center, ladder radius) ball, directly.
    fn brute(space: &Space, f: &[f64]) -> Vec<f64> {
        let ladder = crate::space::RadiusLadder::new(space);
        let mut out = vec![0.0f64; space.len()];
        for c in space.points() {
            for &r in ladder.radii() {
                let b = space.ball(c, r).unwrap();
                let avg = space.mean_over(&b.members, &f.iter().map(|v| v.abs()).collect::<Vec<_>>());
                for &p in &b.members {
                    out[p.0] = out[p.0].max(avg);
                }
            }
        }
        out
    }

    #[test]
    fn examples() {
        let s = line(3);
        let m = maximal_function(&s, &ScalarField::from(vec![0.0, 0.0, 3.0])).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 1.5, 3.0]);
        let c = maximal_function(&s, &ScalarField::constant(3, 2.5)).unwrap();
        assert!(c.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        let single = line(1);
        assert_eq!(maximal_function(&single, &ScalarField::from(vec![-4.0])).unwrap().as_slice(), &[4.0]);
    }

    #[test]
    fn relative_examples() {
        let s = line(3);
        let f = ScalarField::from(vec![0.0, 0.0, 3.0]);
        let left = PointSet::from_points(3, [PointId(0), PointId(1)]);
        assert_eq!(relative_maximal(&s, &left, &f).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
        let full = PointSet::full(3);
        assert_eq!(relative_maximal(&s, &full, &f).unwrap(), maximal_function(&s, &f).unwrap());
        let one = PointSet::from_points(3, [PointId(2)]);
        assert_eq!(relative_maximal(&s, &one, &f).unwrap()[2], 3.0);
        assert!(relative_maximal(&s, &PointSet::empty(3), &f).is_err());
    }

    #[test]
    fn weak_type_examples() {
        let s = line(5);
        let ind = ScalarField::from(vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let r = weak_type_ratio(&s, &ind).unwrap();
        assert!(r >= 1.0 - 1e-9 && r.is_finite());
        let one = weak_type_ratio(&s, &ScalarField::constant(5, 1.0)).unwrap();
        assert!((one - 1.0).abs() < 1e-9);
        assert!(weak_type_ratio(&s, &ScalarField::zeros(5)).is_err());
    }

    #[test]
    fn matches_ladder_enumeration_on_weighted_grid() {
        let s = build_grid(&[6, 5], 0.3, WeightProfile::Power(1.0)).unwrap();
        for seed in 0..5 {
            let f = fields::random_uniform(&s, seed);
            let fast = maximal_function(&s, &f).unwrap();
            let slow = brute(&s, &f);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-13 * b.max(1.0));
            }
        }
    }

    #[test]
    fn constant_sign_sup_norm() {
        let s = build_grid(&[7, 3], 1.0, WeightProfile::Uniform).unwrap();
        let f = fields::random_uniform(&s, 11).abs();
        let m = maximal_function(&s, &f).unwrap();
        assert_eq!(m.max_abs(), f.max_abs());
    }

    #[test]
    fn comparison_with_double_star_is_two_sided() {
        let s = build_grid(&[32], 1.0 / 32.0, WeightProfile::Uniform).unwrap();
        for seed in 0..4 {
            let f = fields::random_uniform(&s, seed);
            let c = maximal_vs_double_star(&s, &f).unwrap();
            assert!(c.inf > 0.0 && c.sup.is_finite() && c.inf <= c.sup);
        }
    }

    fn grid() -> Space {
        build_grid(&[4, 4], 0.5, WeightProfile::Power(0.7)).unwrap()
    }

    proptest! {
        #[test]
        fn pointwise_properties(
            u in prop::collection::vec(-5.0f64..5.0, 16),
            v in prop::collection::vec(-5.0f64..5.0, 16),
            lam in -3.0f64..3.0,
            q in 1.0f64..4.0,
        ) {
            let s = grid();
            let (fu, fv) = (ScalarField::from(u), ScalarField::from(v));
            let mu = maximal_function(&s, &fu).unwrap();
            let mv = maximal_function(&s, &fv).unwrap();
            let msum = maximal_function(&s, &fu.iter().zip(fv.iter()).map(|(a, b)| a + b).collect()).unwrap();
            let mlam = maximal_function(&s, &fu.scaled(lam)).unwrap();
            let mq = maximal_function(&s, &fu.map(|a| a.abs().powf(q))).unwrap();
            for x in 0..16 {
                prop_assert!(mu[x] >= fu[x].abs());
                prop_assert!(msum[x] <= (mu[x] + mv[x]) * (1.0 + 1e-12) + 1e-12);
                prop_assert!((mlam[x] - lam.abs() * mu[x]).abs() <= 1e-12 * (1.0 + mlam[x]));
                prop_assert!(mu[x].powf(q) <= mq[x] * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn relative_is_bounded_by_restricted_sup(
            u in prop::collection::vec(-5.0f64..5.0, 16),
            mask in prop::collection::vec(any::<bool>(), 16),
        ) {
            prop_assume!(mask.iter().any(|&b| b));
            let s = grid();
            let e = PointSet::from_mask(mask.clone());
            let f = ScalarField::from(u);
            let m = relative_maximal(&s, &e, &f).unwrap();
            let sup = e.iter().map(|p| f[p.0].abs()).fold(0.0, f64::max);
            for p in e.iter() {
                prop_assert!(m[p.0] >= f[p.0].abs() && m[p.0] <= sup * (1.0 + 1e-12));
            }
        }
    }
}
