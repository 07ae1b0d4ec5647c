use std::path::Path;

use anyhow::{anyhow, Result};
use interplab::kfun::{alpha_homogeneous, interpolation_norm_of_curve, k_lower_homogeneous, k_oracle_homogeneous, k_oracle_lebesgue, t_grid};
use interplab::space::space_to_json;
use interplab::*;
use serde_json::{json, Value};

use crate::args::*;
use crate::meta::Run;
use crate::Failure;

/// User-input problem detected by the front end itself (exit 2).
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn load_space_input(run: &mut Run, path: &Path) -> Result<Space> {
    let space = load_space(path)?;
    run.file_input("space", path)?;
    Ok(space)
}

/// A CSV path or one of the built-in fields.
fn load_field(run: &mut Run, space: &Space, spec: &str, seed: u64) -> Result<ScalarField> {
    let Some(name) = spec.strip_prefix('@') else {
        let f = read_field(space, spec)?;
        run.file_input("fn", Path::new(spec))?;
        return Ok(f);
    };
    let f = match name {
        "zero" => ScalarField::zeros(space.len()),
        "tent" => fields::tent(space),
        "smooth" => fields::random_smooth(space, seed),
        "uniform" => fields::random_uniform(space, seed),
        "halves" => fields::two_halves(space)?,
        _ => match name.strip_prefix("coord").and_then(|k| k.parse::<usize>().ok()) {
            Some(axis) => fields::coordinate(space, axis)?,
            None => {
                return Err(invalid(format!(
                    "unknown built-in field `{spec}` (expected @zero, @tent, @smooth, @uniform, @halves, @coord<k>)"
                )))
            }
        },
    };
    let label = if matches!(name, "smooth" | "uniform") { format!("{spec}:seed={seed}") } else { spec.to_string() };
    run.builtin_input("fn", &label);
    Ok(f)
}

fn load_input(run: &mut Run, a: &FieldArg) -> Result<(Space, ScalarField)> {
    let space = load_space_input(run, &a.space.space)?;
    let f = load_field(run, &space, &a.field, a.seed)?;
    Ok((space, f))
}

fn field_csv(space: &Space, f: &ScalarField) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    render_field(space, f, &mut buf)?;
    Ok(buf)
}

fn resolve_alpha(space: &Space, f: &ScalarField, q: f64, level: &Level, variant: Variant) -> Result<f64> {
    match (level.alpha, level.t) {
        (Some(a), _) => Ok(a),
        (None, Some(t)) if variant == Variant::Homogeneous => Ok(alpha_homogeneous(space, f, q, t)?),
        (None, Some(t)) => Ok(alpha_of_t(space, f, q, t)?),
        (None, None) => Err(invalid("need --alpha or --t")),
    }
}

fn witness(variant: VariantArg, q: f64, p: f64, rho: f64) -> WitnessSpec {
    match variant {
        VariantArg::Global => WitnessSpec::global(q, p),
        VariantArg::Local => WitnessSpec::local(q, p, rho),
        VariantArg::Homogeneous => WitnessSpec::homogeneous(q, p),
    }
}

fn decompose(space: &Space, f: &ScalarField, q: f64, p: f64, alpha: f64, variant: VariantArg, rho: f64) -> Result<Decomposition> {
    Ok(match variant {
        VariantArg::Global => czd_global(space, f, q, p, alpha)?,
        VariantArg::Homogeneous => czd_homogeneous(space, f, q, p, alpha)?,
        VariantArg::Local => czd_local(space, f, q, p, alpha, rho)?,
    })
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X', ','])
        .map(|d| d.trim().parse::<usize>().map_err(|_| invalid(format!("bad --grid `{s}`: expected N or N1xN2"))))
        .collect()
}

fn space_summary(space: &Space) -> Value {
    let dbl = doubling_constant(space, &RadiusLadder::new(space));
    json!({
        "points": space.len(),
        "total_mass": space.total_mass(),
        "min_weight": space.min_weight(),
        "diameter": space.diameter(),
        "neighbor_radius": space.neighbor_radius(),
        "edges": space.neighborhood().edge_count(),
        "has_coords": space.coords().is_some(),
        "doubling": { "constant": dbl.constant, "center": space.id(dbl.center), "radius": dbl.radius },
    })
}

pub fn space(run: &mut Run, cmd: &SpaceCmd) -> Result<()> {
    match cmd {
        SpaceCmd::Build(a) => {
            let space = match (&a.grid, &a.cone) {
                (Some(g), None) => {
                    let profile: WeightProfile = a.weights.parse()?;
                    build_grid(&parse_dims(g)?, a.spacing, profile)?
                }
                (None, Some(c)) => {
                    let v = parse_dims(c)?;
                    let [n, k, m] = v[..] else {
                        return Err(invalid(format!("bad --cone `{c}`: expected DIMENSION,LEVELS,POINTS_PER_RING")));
                    };
                    build_cone(n, k, m)?
                }
                _ => return Err(invalid("space build needs exactly one of --grid or --cone")),
            };
            run.emit_json_text(a.output.as_deref(), &space_to_json(&space))
        }
        SpaceCmd::Info(a) => {
            let space = load_space_input(run, &a.space.space)?;
            run.emit_json(a.output.as_deref(), space_summary(&space))
        }
        SpaceCmd::Field(a) => {
            let (space, f) = load_input(run, &a.input)?;
            let summary = json!({ "points": space.len(), "max_abs": f.max_abs() });
            run.emit_table(a.output.as_deref(), &field_csv(&space, &f)?, summary)
        }
    }
}

pub fn rearrange(run: &mut Run, a: &RearrangeArgs) -> Result<()> {
    let (space, f) = load_input(run, &a.input)?;
    let fs = decreasing_rearrangement(&space, &f)?;
    if let Some(t) = a.t {
        let doc = json!({
            "t": t,
            "f_star": fs.eval(t),
            "f_double_star": fs.double_star().eval(t)?,
            "integral": fs.integral(t),
        });
        return run.emit_json(a.output.as_deref(), doc);
    }
    let mut buf = Vec::new();
    fs.write_csv(&mut buf)?;
    let summary = json!({
        "total_mass": fs.total_mass(),
        "support": fs.support(),
        "l1": fs.integral(fs.total_mass()),
        "linf": fs.eval(0.0),
        "atoms": fs.values().len(),
    });
    run.emit_table(a.output.as_deref(), &buf, summary)
}

pub fn maximal(run: &mut Run, a: &MaximalArgs) -> Result<()> {
    let (space, f) = load_input(run, &a.input)?;
    let m = maximal_function(&space, &f)?;
    let summary = if f.is_zero() {
        json!({ "weak_type_ratio": 0.0, "rearrangement": Value::Null })
    } else {
        json!({
            "weak_type_ratio": weak_type_ratio(&space, &f)?,
            "rearrangement": maximal_vs_double_star(&space, &f)?,
        })
    };
    run.emit_table(a.output.as_deref(), &field_csv(&space, &m)?, summary)
}

pub fn whitney_cmd(run: &mut Run, a: &WhitneyArgs) -> Result<()> {
    let (space, f) = load_input(run, &a.input)?;
    let variant = Variant::from(a.variant);
    let alpha = resolve_alpha(&space, &f, a.q, &a.level, variant)?;
    let om = omega(&space, &f, a.q, alpha, variant)?;
    let fam = whitney(&space, &om, a.c1)?;
    let balls: Vec<Value> = (0..fam.len())
        .map(|i| {
            json!({
                "center": space.id(fam.centers[i]),
                "radius": fam.radii[i],
                "core_radius": fam.core_radii[i],
                "dist_to_complement": fam.dist_to_complement[i],
            })
        })
        .collect();
    let doc = json!({
        "alpha": alpha,
        "q": a.q,
        "variant": variant,
        "omega": om.iter().map(|p| space.id(p)).collect::<Vec<_>>(),
        "omega_mass": om.mass(&space),
        "c1": fam.c1,
        "c2": fam.c2,
        "balls": balls,
        "overlap": fam.overlap,
        "comparability": fam.comparability,
        "comparability_violations": fam.comparability_violations,
        "checks": fam.check(&space),
    });
    run.emit_json(a.output.as_deref(), doc)
}

pub fn czd(run: &mut Run, a: &CzdArgs) -> Result<()> {
    let (space, f) = load_input(run, &a.input)?;
    let alpha = resolve_alpha(&space, &f, a.q, &a.level, a.variant.into())?;
    let dec = decompose(&space, &f, a.q, a.p, alpha, a.variant, a.rho)?;
    let report = verify_decomposition(&space, &dec, &f)?;
    let doc = json!({
        "decomposition": dec.to_json(&space)?,
        "verification": { "pass": report.pass(), "matches_certificate": report.matches_certificate, "clauses": report.clauses },
    });
    run.emit_json(a.output.as_deref(), doc)
}

pub fn kfun(run: &mut Run, a: &KfunArgs) -> Result<()> {
    let (space, f) = load_input(run, &a.input)?;
    let spec = witness(a.variant, a.q, a.p.unwrap_or(a.q), a.rho);
    let homogeneous = a.variant == VariantArg::Homogeneous;
    if let Some(t) = a.t {
        let (lower, oracle) = if homogeneous {
            (k_lower_homogeneous(&space, &f, t, a.r)?, k_oracle_homogeneous(&space, &f, t, a.r)?)
        } else {
            (k_lower(&space, &f, t, a.r)?, k_oracle(&space, &f, t, a.r)?)
        };
        let up = k_upper(&space, &f, t, a.r, &spec)?;
        let doc = json!({
            "t": t,
            "lower": lower,
            "oracle": oracle.value,
            "oracle_exact": oracle.exact,
            "oracle_converged": oracle.converged,
            "upper": up.value,
            "upper_bracket": up.bracket,
            "alpha": up.alpha,
            "witness_mu_Omega": up.mu_omega,
            "direct": up.direct,
        });
        return run.emit_json(a.output.as_deref(), doc);
    }
    let curve = k_curve(&space, &f, &CurveSpec { r: a.r, witness: spec, grid: a.grid })?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    let mut summary = json!({
        "rows": curve.len(),
        "r": curve.r,
        "q": curve.q,
        "p": curve.p,
        "variant": curve.variant,
        "oracle_converged": curve.oracle_converged,
        "constants": curve.constants(),
    });
    if let Some(theta) = a.theta {
        let k_inf = if homogeneous { homogeneous_seminorm(&space, &f, a.r)? } else { sobolev_norm(&space, &f, a.r)? };
        summary["interpolation_norm"] =
            json!({ "theta": theta, "q": a.q, "value": interpolation_norm_of_curve(&curve.t, &curve.oracle, a.r, k_inf, theta, a.q)? });
    }
    run.emit_table(a.output.as_deref(), &buf, summary)
}

struct Check {
    suite: &'static str,
    name: String,
    value: f64,
    pass: bool,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, value: f64, pass: bool) -> Self {
        Check { suite, name: name.into(), value, pass }
    }

    fn to_json(&self) -> Value {
        json!({ "suite": self.suite, "name": self.name, "value": self.value, "pass": self.pass })
    }
}

fn verify_rearrange(space: &Space, f: &ScalarField, out: &mut Vec<Check>) -> Result<()> {
    let fs = decreasing_rearrangement(space, f)?;
    let l1 = lp_norm(space, f, 1.0)?;
    let mass_err = (fs.integral(fs.total_mass()) - l1).abs();
    out.push(Check::new("rearrange", "integral_equals_l1", mass_err, mass_err <= 1e-12 * (1.0 + l1)));
    for l in [1.5, 2.0, 4.0] {
        let slack = l / (l - 1.0) * fs.lp_norm(l) - fs.double_star().lp_norm(l)?;
        out.push(Check::new("rearrange", format!("hardy_slack_l{l}"), slack, slack >= -1e-9));
    }
    Ok(())
}

fn verify_maximal(space: &Space, f: &ScalarField, out: &mut Vec<Check>) -> Result<()> {
    let m = maximal_function(space, f)?;
    let worst = m.iter().zip(f.iter()).map(|(a, b)| b.abs() - a).fold(0.0f64, f64::max);
    out.push(Check::new("maximal", "dominates_abs_f", worst, worst <= 0.0));
    if f.is_zero() {
        out.push(Check::new("maximal", "weak_type_ratio", 0.0, true));
        return Ok(());
    }
    let w = weak_type_ratio(space, f)?;
    out.push(Check::new("maximal", "weak_type_ratio", w, w.is_finite()));
    let cmp = maximal_vs_double_star(space, f)?;
    out.push(Check::new("maximal", "rearrangement_inf", cmp.inf, cmp.inf > 0.0));
    out.push(Check::new("maximal", "rearrangement_sup", cmp.sup, cmp.sup.is_finite()));
    Ok(())
}

fn verify_czd(space: &Space, f: &ScalarField, a: &VerifyArgs, out: &mut Vec<Check>) -> Result<()> {
    let variant = Variant::from(a.variant);
    let alphas: Vec<f64> = match a.alpha {
        Some(al) => vec![al],
        None => {
            let mut v = Vec::new();
            for frac in [0.25, 0.5] {
                let t = frac * space.total_mass();
                let al = if variant == Variant::Homogeneous {
                    alpha_homogeneous(space, f, a.q, t)?
                } else {
                    alpha_of_t(space, f, a.q, t)?
                };
                if al > 0.0 {
                    v.push(al);
                }
            }
            // f with a vanishing control: every level gives Omega = {}
            if v.is_empty() {
                v.push(1.0);
            }
            v
        }
    };
    for alpha in alphas {
        let tag = format!("alpha={alpha:.6e}");
        let dec = match decompose(space, f, a.q, a.p, alpha, a.variant, a.rho) {
            Ok(d) => d,
            Err(e) if matches!(e.downcast_ref::<Error>(), Some(Error::OmegaIsWholeSpace)) => {
                log::info!("verify czd: Omega = X at {tag}; nothing to decompose");
                continue;
            }
            Err(e) => return Err(e),
        };
        let rep = verify_decomposition(space, &dec, f)?;
        for c in &rep.clauses {
            out.push(Check::new("czd", format!("{tag}:{}", c.name), c.constant, c.pass));
        }
        out.push(Check::new("czd", format!("{tag}:matches_certificate"), f64::NAN, rep.matches_certificate));
        out.push(Check::new("czd", format!("{tag}:certificate"), dec.certificate.reconstruction, dec.certificate.passes()));
    }
    Ok(())
}

fn verify_kfun(space: &Space, f: &ScalarField, a: &VerifyArgs, out: &mut Vec<Check>) -> Result<Value> {
    let spec = witness(a.variant, a.q, a.p, a.rho);
    let curve = k_curve(space, f, &CurveSpec { r: a.r, witness: spec, grid: a.grid })?;
    let c = curve.constants();
    let nonzero = !curve.upper_bracket.iter().all(|&b| b == 0.0);
    out.push(Check::new("kfun", "oracle_le_witness", c.feasibility_gap, c.feasibility_gap <= 0.0));
    out.push(Check::new("kfun", "concavity_defect", c.concavity_defect, c.concavity_defect <= 1e-8));
    out.push(Check::new("kfun", "monotonicity_defect", c.monotonicity_defect, c.monotonicity_defect <= 1e-8));
    out.push(Check::new("kfun", "c1", c.c1, !nonzero || c.c1 > 0.0));
    out.push(Check::new("kfun", "c2", c.c2, c.c2.is_finite()));
    out.push(Check::new("kfun", "oracle_converged", f64::NAN, curve.oracle_converged));
    let fs = decreasing_rearrangement(space, f)?;
    let l1 = lp_norm(space, f, 1.0)?;
    let mut worst: f64 = 0.0;
    for t in t_grid(space, a.grid) {
        worst = worst.max((k_oracle_lebesgue(space, f, t)?.value - fs.integral(t)).abs());
    }
    out.push(Check::new("kfun", "lebesgue_identity", worst, worst <= 1e-8 * (1.0 + l1)));
    Ok(serde_json::to_value(c)?)
}

pub fn verify(run: &mut Run, a: &VerifyArgs) -> Result<()> {
    let space = load_space_input(run, &a.space.space)?;
    let f = load_field(run, &space, &a.field, a.seed)?;
    let mut checks = Vec::new();
    let on = |s: Suite| a.suite == Suite::All || a.suite == s;
    let mut constants = json!({});
    if on(Suite::Rearrange) {
        verify_rearrange(&space, &f, &mut checks)?;
    }
    if on(Suite::Maximal) {
        verify_maximal(&space, &f, &mut checks)?;
    }
    if on(Suite::Czd) {
        verify_czd(&space, &f, a, &mut checks)?;
    }
    if on(Suite::Kfun) {
        constants["kfun"] = verify_kfun(&space, &f, a, &mut checks)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    for c in checks.iter().filter(|c| !c.pass) {
        log::error!("check failed: {}/{} = {}", c.suite, c.name, c.value);
    }
    let doc = json!({
        "suite": a.suite,
        "pass": pass,
        "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        "constants": constants,
    });
    run.emit_json(a.output.as_deref(), doc)?;
    if pass {
        Ok(())
    } else {
        Err(anyhow!(Failure(checks.iter().filter(|c| !c.pass).count())))
    }
}

pub fn report(run: &mut Run, a: &ReportArgs) -> Result<()> {
    let (space, f) = load_input(run, &a.input)?;
    let fs = decreasing_rearrangement(&space, &f)?;
    let norms = json!({
        "l1": lp_norm(&space, &f, 1.0)?,
        "linf": lp_norm(&space, &f, f64::INFINITY)?,
        "w1_1": sobolev_norm(&space, &f, 1.0)?,
        "w1_inf": sobolev_norm(&space, &f, f64::INFINITY)?,
        "w1_p": sobolev_norm(&space, &f, a.p)?,
    });
    let maximal = if f.is_zero() {
        json!({ "weak_type_ratio": 0.0, "rearrangement": Value::Null })
    } else {
        json!({ "weak_type_ratio": weak_type_ratio(&space, &f)?, "rearrangement": maximal_vs_double_star(&space, &f)? })
    };
    let t = a.t.unwrap_or(space.total_mass() / 4.0);
    let alpha = alpha_of_t(&space, &f, a.q, t)?;
    let czd = if alpha > 0.0 {
        match czd_global(&space, &f, a.q, a.p, alpha) {
            Ok(dec) => json!({ "t": t, "alpha": alpha, "certificate": dec.certificate }),
            Err(Error::OmegaIsWholeSpace) => json!({ "t": t, "alpha": alpha, "whole_space": true }),
            Err(e) => return Err(e.into()),
        }
    } else {
        json!({ "t": t, "alpha": alpha, "empty": true })
    };
    let curve = k_curve(&space, &f, &CurveSpec { r: a.r, witness: WitnessSpec::global(a.q, a.p), grid: a.grid })?;
    let mut kfun = json!({ "r": a.r, "q": a.q, "p": a.p, "grid": a.grid, "constants": curve.constants() });
    if let Some(theta) = a.theta {
        kfun["interpolation_norm"] = json!({
            "theta": theta,
            "value": interpolation_norm_of_curve(&curve.t, &curve.oracle, a.r, sobolev_norm(&space, &f, a.r)?, theta, a.q)?,
        });
    }
    let doc = json!({
        "space": space_summary(&space),
        "field": norms,
        "rearrange": { "support": fs.support(), "atoms": fs.values().len() },
        "maximal": maximal,
        "czd": czd,
        "kfun": kfun,
    });
    run.emit_json(a.output.as_deref(), doc)
}
