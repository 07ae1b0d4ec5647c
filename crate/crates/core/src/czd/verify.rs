use serde::Serialize;

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::space::Space;

use super::{Certificate, Decomposition, Variant, RECONSTRUCTION_TOL};

/// One machine-checked property: its measured constant and verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub constant: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub variant: Variant,
    pub clauses: Vec<Clause>,
    /// Recomputed constants agree with the stored certificate to `1e-12`
    /// relative.
    pub matches_certificate: bool,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

/// Brute-force gradient from the distance matrix at the points `xs`.
fn slope_at(space: &Space, u: &[f64], xs: impl Iterator<Item = usize>) -> Vec<(usize, f64)> {
    let r = space.neighbor_radius();
    xs.map(|x| {
        let mut best: f64 = 0.0;
        for (y, &d) in space.row(x).iter().enumerate() {
            if y != x && d <= r {
                best = best.max((u[y] - u[x]).abs() / d);
            }
        }
        (x, best)
    })
    .collect()
}

fn slope(space: &Space, u: &[f64]) -> Vec<f64> {
    slope_at(space, u, 0..u.len()).into_iter().map(|(_, v)| v).collect()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn finite_clause(name: &'static str, constant: f64) -> Clause {
    Clause { name, constant, pass: constant.is_finite() }
}

/// Recomputes every clause of `dec` from `f` and the distance matrix alone.
pub fn verify_decomposition(space: &Space, dec: &Decomposition, f: &ScalarField) -> Result<VerifyReport> {
    let n = space.len();
    f.check_len(space)?;
    dec.g.check_len(space)?;
    for b in &dec.pieces {
        if b.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: b.len() });
        }
    }
    if dec.pieces.len() != dec.balls.len() || dec.omega.universe() != n {
        return Err(Error::Malformed("decomposition geometry does not match its pieces".into()));
    }
    let w = space.weights();
    let alpha = dec.alpha;
    let homogeneous = dec.variant == Variant::Homogeneous;
    let mut clauses = Vec::new();

    let mut worst: f64 = 0.0;
    let mut fmax: f64 = 0.0;
    for x in 0..n {
        let s: f64 = dec.pieces.iter().map(|b| b[x]).sum();
        worst = worst.max((f[x] - dec.g[x] - s).abs());
        fmax = fmax.max(f[x].abs());
    }
    let reconstruction = worst / fmax.max(1.0);
    clauses.push(Clause { name: "reconstruction", constant: reconstruction, pass: reconstruction <= RECONSTRUCTION_TOL });

    let mut outside = 0usize;
    let mut not_in_omega = 0usize;
    let mut cover_count = vec![0usize; n];
    let mut energy: f64 = 0.0;
    let mut total_mu = 0.0;
    let mut mean_value: f64 = 0.0;
    let mut mean_broken = 0usize;
    let exps: Vec<f64> = if homogeneous && dec.q > 1.0 { vec![1.0, dec.q] } else { vec![dec.q] };
    for (b, pb) in dec.pieces.iter().zip(&dec.balls) {
        let row = space.row(pb.center.0);
        let inside: Vec<bool> = row.iter().map(|&d| d < pb.radius).collect();
        let mut mu = 0.0;
        for x in 0..n {
            if inside[x] {
                mu += w[x];
                cover_count[x] += 1;
                if !dec.whole_space && !dec.omega.mask()[x] {
                    not_in_omega += 1;
                }
            } else if b[x] != 0.0 {
                outside += 1;
            }
        }
        total_mu += mu;
        let gb = slope_at(space, b, (0..n).filter(|&x| inside[x]));
        // the gradient ratio is monotone in the exponent, so the
        // endpoints of [1, q] bound every intermediate one
        for &e in &exps {
            let mut s = 0.0;
            for &(x, gx) in &gb {
                let mut term = gx.powf(e);
                if !homogeneous {
                    term += b[x].abs().powf(e);
                }
                s += w[x] * term;
            }
            energy = energy.max(s / (alpha.powf(e) * mu));
        }
        if dec.variant == Variant::Global {
            let mut sum = 0.0;
            for x in (0..n).filter(|&x| inside[x]) {
                sum += w[x] * f[x];
            }
            let mean = sum / mu;
            let mu_dil: f64 = (0..n).filter(|&x| row[x] < pb.dilated_radius).map(|x| w[x]).sum();
            mean_value = mean_value.max(mean.abs() / alpha);
            if mean.abs() > alpha * mu_dil / mu * (1.0 + 1e-12) {
                mean_broken += 1;
            }
        }
    }
    clauses.push(Clause { name: "support", constant: outside as f64, pass: outside == 0 });
    clauses.push(Clause { name: "balls_in_omega", constant: not_in_omega as f64, pass: not_in_omega == 0 });

    let gg = slope(space, &dec.g);
    let grad_g_sup = gg.iter().fold(0.0f64, |m, v| m.max(*v)) / alpha;
    let g_sup = dec.g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / alpha;
    if !homogeneous {
        clauses.push(finite_clause("g_sup", g_sup));
    }
    clauses.push(finite_clause("grad_g_sup", grad_g_sup));
    clauses.push(finite_clause("piece_energy", energy));

    let df = slope(space, f);
    let mut hp = 0.0;
    for x in 0..n {
        let h = if homogeneous { df[x] } else { f[x].abs() + df[x] };
        hp += w[x] * h.powf(dec.p);
    }
    let measure_ratio = if total_mu == 0.0 { 0.0 } else { total_mu * alpha.powf(dec.p) / hp };
    clauses.push(finite_clause("measure_ratio", measure_ratio));
    let overlap = cover_count.iter().copied().max().unwrap_or(0);
    clauses.push(Clause { name: "overlap", constant: overlap as f64, pass: true });
    if dec.variant == Variant::Global {
        clauses.push(Clause { name: "mean_value", constant: mean_value, pass: mean_broken == 0 && mean_value.is_finite() });
    }

    // each dilated ball reaches the complement of the set it was built for
    let mut unreached = 0usize;
    if !dec.whole_space {
        let mut k = 0;
        for fam in &dec.families {
            for _ in 0..fam.len() {
                let pb = &dec.balls[k];
                let row = space.row(pb.center.0);
                if !(0..n).any(|x| row[x] < pb.dilated_radius && !fam.omega.mask()[x]) {
                    unreached += 1;
                }
                k += 1;
            }
        }
        if k != dec.balls.len() {
            return Err(Error::Malformed("ball families do not account for every piece".into()));
        }
    }
    clauses.push(Clause { name: "dilations_reach_complement", constant: unreached as f64, pass: unreached == 0 });
    if let Some(t) = dec.certificate.transfer {
        clauses.push(finite_clause("transfer", t));
    }

    let c: &Certificate = &dec.certificate;
    // the residual is rounding noise, so it is compared in absolute terms
    let matches_certificate = (c.reconstruction - reconstruction).abs() <= 1e-12
        && c.support == (outside == 0)
        && c.g_sup.is_none_or(|v| close(v, g_sup))
        && close(c.grad_g_sup, grad_g_sup)
        && close(c.piece_energy, energy)
        && close(c.measure_ratio, measure_ratio)
        && c.overlap == overlap
        && c.mean_value.is_none_or(|v| close(v, mean_value))
        && c.pieces == dec.pieces.len();
    Ok(VerifyReport { variant: dec.variant, clauses, matches_certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::czd::{czd_global, czd_homogeneous, czd_local, quantile_alpha};
    use crate::fields;
    use crate::space::{build_grid, WeightProfile};

    #[test]
    fn zero_field_passes_with_zero_constants() {
        let s = build_grid(&[16], 1.0 / 16.0, WeightProfile::Uniform).unwrap();
        let f = ScalarField::zeros(16);
        let d = czd_global(&s, &f, 1.0, 2.0, 1.0).unwrap();
        let r = verify_decomposition(&s, &d, &f).unwrap();
        assert!(r.pass() && r.matches_certificate);
        assert!(r.clauses.iter().all(|c| c.constant == 0.0), "{r:?}");
    }

    #[test]
    fn tent_report_matches_constructor() {
        let s = build_grid(&[64], 1.0 / 64.0, WeightProfile::Uniform).unwrap();
        let f = fields::tent(&s);
        for frac in [0.1, 0.4, 0.7] {
            let alpha = quantile_alpha(&s, &f, 1.0, frac, true);
            let d = czd_global(&s, &f, 1.0, 2.0, alpha).unwrap();
            let r = verify_decomposition(&s, &d, &f).unwrap();
            assert!(r.pass(), "{r:?}");
            assert!(r.matches_certificate, "{r:?}\n{:?}", d.certificate);
        }
    }

    #[test]
    fn corrupted_support_is_caught() {
        let s = build_grid(&[64], 1.0 / 64.0, WeightProfile::Uniform).unwrap();
        let f = fields::tent(&s);
        let mut d = czd_global(&s, &f, 1.0, 2.0, quantile_alpha(&s, &f, 1.0, 0.3, true)).unwrap();
        assert!(!d.pieces.is_empty());
        let pb = d.balls[0];
        let x = s.points().find(|&x| s.dist(pb.center, x) >= pb.radius).unwrap();
        d.pieces[0][x.0] = 1e-3;
        let r = verify_decomposition(&s, &d, &f).unwrap();
        assert!(!r.clause("support").unwrap().pass);
        assert!(!r.clause("reconstruction").unwrap().pass);
        assert!(!r.pass());
    }

    #[test]
    fn other_variants_verify() {
        let s = build_grid(&[16, 16], 1.0 / 16.0, WeightProfile::Uniform).unwrap();
        let f = fields::random_smooth(&s, 11);
        let d = czd_homogeneous(&s, &f, 2.0, 4.0, quantile_alpha(&s, &f, 2.0, 0.5, false)).unwrap();
        let r = verify_decomposition(&s, &d, &f).unwrap();
        assert!(r.pass() && r.matches_certificate, "{r:?}");
        let d = czd_local(&s, &f, 1.0, 2.0, quantile_alpha(&s, &f, 1.0, 0.5, true), 0.5).unwrap();
        assert!(!d.whole_space && !d.pieces.is_empty());
        let r = verify_decomposition(&s, &d, &f).unwrap();
        assert!(r.pass() && r.matches_certificate, "{r:?}");
    }

    #[test]
    fn mismatched_field_is_an_error() {
        let s = build_grid(&[8], 1.0, WeightProfile::Uniform).unwrap();
        let f = ScalarField::zeros(8);
        let d = czd_global(&s, &f, 1.0, 1.0, 1.0).unwrap();
        assert!(verify_decomposition(&s, &d, &ScalarField::zeros(7)).is_err());
    }

    #[test]
    fn json_export_carries_every_piece() {
        let s = build_grid(&[32], 1.0 / 32.0, WeightProfile::Uniform).unwrap();
        let f = fields::tent(&s);
        let d = czd_global(&s, &f, 1.0, 2.0, quantile_alpha(&s, &f, 1.0, 0.5, true)).unwrap();
        let v = d.to_json(&s).unwrap();
        assert_eq!(v["pieces"].as_array().unwrap().len(), d.pieces.len());
        assert_eq!(v["variant"], "global");
        let text = v["pieces"][0]["csv"].as_str().unwrap();
        assert!(text.starts_with("id,value\n"));
        assert_eq!(text.lines().count(), 33);
        assert!(v["certificate"]["measure_ratio"].as_f64().unwrap() > 0.0);
    }
}
