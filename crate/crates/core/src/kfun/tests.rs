use super::*;
use crate::fields;
use crate::maximal::maximal_function;
use crate::space::{build_grid, WeightProfile};

fn line(n: usize) -> Space {
    build_grid(&[n], 1.0 / n as f64, WeightProfile::Uniform).unwrap()
}

fn unit_line(n: usize) -> Space {
    build_grid(&[n], 1.0, WeightProfile::Uniform).unwrap()
}

#[test]
fn alpha_of_constant() {
    let s = line(16);
    let f = ScalarField::constant(16, 2.5);
    for t in [0.01, 0.3, 0.99] {
        assert!((alpha_of_t(&s, &f, 1.0, t).unwrap() - 2.5).abs() <= 1e-12);
        assert!((alpha_of_t(&s, &f, 2.0, t).unwrap() - 2.5).abs() <= 1e-12);
    }
    assert_eq!(alpha_of_t(&s, &f, 1.0, 1.0).unwrap(), 0.0);
    assert_eq!(alpha_of_t(&s, &f, 1.0, 3.0).unwrap(), 0.0);
    assert!(alpha_of_t(&s, &f, 1.0, 0.0).is_err());
}

#[test]
fn alpha_of_tent_by_composition() {
    let s = line(64);
    let f = fields::tent(&s);
    let g = crate::calculus::grad(&s, &f).unwrap();
    let h: ScalarField = f.iter().zip(g.iter()).map(|(a, b)| a.abs() + b).collect();
    let mut m = maximal_function(&s, &h).unwrap().into_vec();
    m.sort_by(|a, b| b.total_cmp(a));
    // uniform atoms of mass 1/64: the value at t = 1/2 is the 33rd largest
    assert_eq!(alpha_of_t(&s, &f, 1.0, 0.5).unwrap(), m[32]);
    let mut prev = f64::INFINITY;
    for k in 1..80 {
        let a = alpha_of_t(&s, &f, 1.0, k as f64 / 64.0).unwrap();
        assert!(a <= prev);
        prev = a;
    }
}

#[test]
fn lower_bracket_basics() {
    let s = line(16);
    assert_eq!(k_lower(&s, &ScalarField::zeros(16), 0.5, 1.0).unwrap(), 0.0);
    let c = ScalarField::constant(16, 3.0);
    assert!((k_lower(&s, &c, 0.25, 1.0).unwrap() - 0.75).abs() <= 1e-14);
    assert_eq!(k_lower_homogeneous(&s, &c, 0.25, 2.0).unwrap(), 0.0);
}

#[test]
fn oracle_limits_and_homogeneity() {
    let s = line(24);
    let f = fields::random_smooth(&s, 5);
    let big = k_oracle(&s, &f, 1e6, 1.0).unwrap();
    let w11 = crate::calculus::sobolev_norm(&s, &f, 1.0).unwrap();
    assert!((big.value - w11).abs() <= 1e-9 * (1.0 + w11));
    assert!(big.g.max_abs() <= 1e-9);
    for t in [0.01, 0.1, 0.5] {
        let a = k_oracle(&s, &f, t, 1.0).unwrap().value;
        let b = k_oracle(&s, &f.scaled(-2.5), t, 1.0).unwrap().value;
        assert!((b - 2.5 * a).abs() <= 1e-9 * (1.0 + b));
    }
    assert_eq!(k_oracle(&s, &ScalarField::zeros(24), 0.3, 1.0).unwrap().value, 0.0);
}

#[test]
fn lebesgue_mode_is_the_rearrangement_integral() {
    let s = line(32);
    for seed in 0..3 {
        let f = fields::random_uniform(&s, seed);
        let fs = decreasing_rearrangement(&s, &f).unwrap();
        for t in [0.01, 0.2, 0.77, 1.5] {
            let k = k_oracle_lebesgue(&s, &f, t).unwrap().value;
            assert!((k - fs.integral(t)).abs() <= 1e-9, "{k} vs {} at {t}", fs.integral(t));
        }
    }
}

#[test]
fn lp_matches_lattice_search_on_small_lines() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for n in [3, 5, 8] {
        let s = unit_line(n);
        let f: ScalarField = (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect();
        for t in [0.3, 1.0, 2.5] {
            let lp = k_oracle(&s, &f, t, 1.0).unwrap().value;
            let (bf, _) = lattice_search(&s, &f, 0.5, &LatticeObjective::sobolev(t)).unwrap();
            assert!((lp - bf).abs() <= 1e-6, "n={n} t={t}: {lp} vs {bf}");
        }
    }
}

#[test]
fn homogeneous_lp_matches_lattice() {
    let s = unit_line(6);
    let f: ScalarField = vec![0.0, 2.0, 1.0, -1.0, 1.0, 2.0].into();
    for t in [0.5, 1.0, 3.0] {
        let lp = k_oracle_homogeneous(&s, &f, t, 1.0).unwrap();
        let obj = LatticeObjective { p1: 1.0, p2: f64::INFINITY, s: t, values: false, gauge: true };
        let (bf, _) = lattice_search(&s, &f, 0.5, &obj).unwrap();
        assert!((lp.value - bf).abs() <= 1e-6, "{} vs {bf}", lp.value);
        assert!(lp.g[0].abs() <= 1e-12);
        let shifted = k_oracle_homogeneous(&s, &f.shifted(17.0), t, 1.0).unwrap();
        assert!((shifted.value - lp.value).abs() <= 1e-8);
    }
    let c = ScalarField::constant(6, 4.0);
    assert!(k_oracle_homogeneous(&s, &c, 1.0, 1.0).unwrap().value.abs() <= 1e-12);
}

#[test]
fn pair_oracle() {
    let s = unit_line(8);
    let f: ScalarField = vec![0.0, 1.0, 2.0, 2.0, 1.0, -1.0, 0.0, 1.0].into();
    for t in [0.5, 2.0] {
        let a = k_oracle_pair(&s, &f, t, 1.0, f64::INFINITY).unwrap().value;
        let b = k_oracle(&s, &f, t, 1.0).unwrap().value;
        assert_eq!(a, b);
        let d = k_oracle_pair(&s, &f, t, 2.0, 4.0).unwrap();
        let obj = LatticeObjective { p1: 2.0, p2: 4.0, s: t, values: true, gauge: false };
        let (bf, bg) = lattice_search(&s, &f, 0.5, &obj).unwrap();
        // the lattice holds a feasible point, so descent must not lose to it
        assert!(d.value <= bf + 1e-4 * (1.0 + bf), "{} vs {bf}", d.value);
        assert!((pair_objective(&s, &f, &bg, t, 2.0, 4.0).unwrap() - bf).abs() <= 1e-9 * (1.0 + bf));
        assert!((pair_objective(&s, &f, &d.g, t, 2.0, 4.0).unwrap() - d.value).abs() <= 1e-12 * (1.0 + bf));
    }
    assert_eq!(k_oracle_pair(&s, &ScalarField::zeros(8), 1.0, 2.0, 3.0).unwrap().value, 0.0);
    assert!(k_oracle_pair(&s, &f, 1.0, 3.0, 2.0).is_err());
}

#[test]
fn descent_against_lp_for_r_one() {
    let s = unit_line(8);
    let f: ScalarField = vec![0.0, 1.0, 2.0, 2.0, 1.0, -1.0, 0.0, 1.0].into();
    for t in [0.5, 2.0] {
        let lp = k_oracle(&s, &f, t, 1.0).unwrap().value;
        let pr = descent::Problem { p1: 1.0, p2: f64::INFINITY, s: t, values: true, gauge: None };
        let d = descent::minimize(&s, &f, &pr);
        assert!(d.value >= lp - 1e-9);
        assert!(d.value <= lp * (1.0 + 1e-4), "{} vs {lp}", d.value);
    }
}

#[test]
fn upper_witness_is_feasible() {
    let s = line(64);
    let f = fields::tent(&s);
    for t in t_grid(&s, 17) {
        let up = k_upper(&s, &f, t, 1.0, &WitnessSpec::global(1.0, 2.0)).unwrap();
        let or = k_oracle(&s, &f, t, 1.0).unwrap();
        assert!(or.value <= up.value + 1e-9 * (1.0 + up.value), "t={t}: {} > {}", or.value, up.value);
        assert!(up.mu_omega <= t || up.direct, "t={t}: mu(Omega) = {}", up.mu_omega);
        assert!(up.bracket > 0.0);
    }
    let zero = k_upper(&s, &ScalarField::zeros(64), 0.3, 1.0, &WitnessSpec::global(1.0, 2.0)).unwrap();
    assert_eq!(zero.value, 0.0);
}

#[test]
fn upper_witness_at_small_t_keeps_f() {
    let s = line(32);
    let f = fields::tent(&s);
    let t = s.min_weight() / 8.0;
    let up = k_upper(&s, &f, t, 1.0, &WitnessSpec::global(1.0, 2.0)).unwrap();
    let dec = up.decomposition.as_ref().unwrap();
    assert!(dec.pieces.is_empty());
    let w1inf = crate::calculus::sobolev_norm(&s, &f, f64::INFINITY).unwrap();
    assert!((up.value - t * w1inf).abs() <= 1e-12);
    // past the total mass everything is bad
    let up = k_upper(&s, &f, 2.0, 1.0, &WitnessSpec::global(1.0, 2.0)).unwrap();
    assert!(up.direct);
    assert!((up.value - crate::calculus::sobolev_norm(&s, &f, 1.0).unwrap()).abs() <= 1e-12);
}

#[test]
fn curve_on_the_line() {
    let s = line(64);
    let f = fields::tent(&s);
    let spec = CurveSpec { r: 1.0, witness: WitnessSpec::global(1.0, 2.0), grid: 33 };
    let c = k_curve(&s, &f, &spec).unwrap();
    assert_eq!(c.len(), 33);
    let k = c.constants();
    assert!(k.c1 > 0.0 && k.c2.is_finite());
    assert!(k.feasibility_gap <= 1e-9, "{k:?}");
    assert!(k.monotonicity_defect <= 1e-8 && k.concavity_defect <= 1e-8, "{k:?}");
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,lower,oracle,upper,witness_mu_Omega\n"));
    assert_eq!(text.lines().count(), 34);
}

#[test]
fn homogeneous_triple() {
    let s = line(32);
    let f = fields::random_smooth(&s, 2);
    for t in [0.01, 0.1, 0.6] {
        let a = k_homogeneous(&s, &f, t, 1.0, 1.0).unwrap();
        let b = k_homogeneous(&s, &f.shifted(17.0), t, 1.0, 1.0).unwrap();
        assert!(a.oracle <= a.upper + 1e-9 * (1.0 + a.upper));
        assert!(a.lower >= 0.0);
        assert!((a.oracle - b.oracle).abs() <= 1e-8);
        assert!((a.lower - b.lower).abs() <= 1e-12);
    }
    let c = k_homogeneous(&s, &ScalarField::constant(32, 2.0), 0.3, 1.0, 1.0).unwrap();
    assert_eq!((c.lower, c.upper), (0.0, 0.0));
    assert!(c.oracle.abs() <= 1e-12);
}

#[test]
fn interpolation_norm_properties() {
    let s = line(32);
    let f = fields::tent(&s);
    let pair = PairSpec::Sobolev { r: 1.0, grid: 65 };
    assert_eq!(interpolation_norm(&s, &ScalarField::zeros(32), 0.5, 2.0, &pair).unwrap(), 0.0);
    let a = interpolation_norm(&s, &f, 0.5, 2.0, &pair).unwrap();
    let b = interpolation_norm(&s, &f.scaled(-3.0), 0.5, 2.0, &pair).unwrap();
    assert!(a > 0.0 && (b - 3.0 * a).abs() <= 1e-8 * b);
    assert!(interpolation_norm(&s, &f, 1.0, 2.0, &pair).is_err());
    let sup = interpolation_norm(&s, &f, 0.5, f64::INFINITY, &pair).unwrap();
    assert!(sup > 0.0 && sup.is_finite());
}

#[test]
fn norm_equivalence_homogeneity() {
    let s = line(32);
    let f = fields::random_smooth(&s, 9);
    let fam = vec![f.clone(), f.scaled(2.0), f.scaled(-3.0), ScalarField::constant(32, 1.0)];
    let r = norm_equivalence_report(&s, &fam, 2.0, 1.0, 1.0, 65).unwrap();
    assert!((r.ratios[0] - r.ratios[1]).abs() <= 1e-8 && (r.ratios[0] - r.ratios[2]).abs() <= 1e-8, "{r:?}");
    assert!(r.ratios[3] > 0.0 && r.ratios[3].is_finite());
    assert!(r.min > 0.0 && r.max.is_finite());
    assert!(norm_equivalence_report(&s, &[], 2.0, 1.0, 1.0, 65).is_err());
}
