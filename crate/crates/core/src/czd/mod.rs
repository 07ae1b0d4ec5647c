//! Calderón–Zygmund decompositions `f = g + sum_i b_i` of fields at a
//! threshold `alpha`, in three flavours, each carrying a certificate of
//! measured constants.

mod global;
mod local;
mod verify;

use serde::Serialize;

use crate::calculus::{gradient_on, Neighborhood, ScalarField};
use crate::cover::BallFamily;
use crate::error::{check_exponent, check_positive, Error, Result};
use crate::space::{PointId, PointSet, Space};

pub use global::{czd_global, czd_homogeneous};
pub use local::czd_local;
pub use verify::{verify_decomposition, Clause, VerifyReport};

/// Default Whitney dilation constant.
pub const DEFAULT_C1: f64 = 2.0;

/// Tolerance of the reconstruction clause, relative to `max(1, ||f||_inf)`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Global,
    Homogeneous,
    Local,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Variant::Global),
            "homogeneous" => Ok(Variant::Homogeneous),
            "local" => Ok(Variant::Local),
            _ => Err(Error::param("variant", format!("expected global|local|homogeneous, got `{s}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Global => "global",
            Variant::Homogeneous => "homogeneous",
            Variant::Local => "local",
        })
    }
}

/// Geometry of one bad piece: `b_i` lives on `B(center, radius)`, and
/// `B(center, dilated_radius)` must reach the complement of its open set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PieceBall {
    pub center: PointId,
    pub radius: f64,
    pub dilated_radius: f64,
    /// Average of the decomposed function over the ball.
    pub mean: f64,
    /// Unit-cover index in the local variant.
    pub cover: Option<usize>,
}

/// Measured constants of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// `max |f - g - sum b_i| / max(1, ||f||_inf)`.
    pub reconstruction: f64,
    /// Every `b_i` vanishes off its ball.
    pub support: bool,
    /// `||g||_inf / alpha`; absent in the homogeneous variant.
    pub g_sup: Option<f64>,
    /// `|| |grad g| ||_inf / alpha`.
    pub grad_g_sup: f64,
    /// `max_i int_{B_i} (|b_i|^q + |grad b_i|^q) / (alpha^q mu(B_i))`; the
    /// homogeneous variant keeps only the gradient term, maximised over
    /// exponents `1` and `q`.
    pub piece_energy: f64,
    /// `sum_i mu(B_i) / (alpha^-p int h^p)` with `h = |f| + |grad f|`
    /// (or `|grad f|`).
    pub measure_ratio: f64,
    /// `max_x #{i : x ∈ B_i}`.
    pub overlap: usize,
    /// `max_i |f_{B_i}| / alpha` (global variant).
    pub mean_value: Option<f64>,
    /// `|f_{B_i}| <= alpha mu(C2 B_i) / mu(B_i)` for every ball.
    pub mean_value_holds: Option<bool>,
    pub omega_mass: f64,
    pub pieces: usize,
    /// Unit-cover overlap `N1` (local variant).
    pub cover_overlap: Option<usize>,
    /// `max M_{B^j}(h_j^q) / M(h^q)` over the cover (local variant).
    pub transfer: Option<f64>,
}

impl Certificate {
    /// Reconstruction within tolerance, exact supports, finite constants.
    pub fn passes(&self) -> bool {
        let finite = [Some(self.grad_g_sup), self.g_sup, Some(self.piece_energy), Some(self.measure_ratio), self.mean_value, self.transfer]
            .into_iter()
            .flatten()
            .all(f64::is_finite);
        self.reconstruction <= RECONSTRUCTION_TOL && self.support && finite && self.mean_value_holds != Some(false)
    }
}

/// `f = g + sum_i b_i` with its geometry and certificate.
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub variant: Variant,
    pub alpha: f64,
    pub q: f64,
    pub p: f64,
    pub g: ScalarField,
    pub pieces: Vec<ScalarField>,
    pub balls: Vec<PieceBall>,
    /// Union of the open sets that were decomposed.
    pub omega: PointSet,
    /// `Omega = X`: everything is assigned to the bad part (`g = 0`, one
    /// piece equal to `f`); only the local variant produces this.
    pub whole_space: bool,
    #[serde(skip)]
    pub families: Vec<BallFamily>,
    pub certificate: Certificate,
}

impl Decomposition {
    /// `sum_i b_i`.
    pub fn bad_part(&self) -> ScalarField {
        let n = self.g.len();
        let mut out = ScalarField::zeros(n);
        for b in &self.pieces {
            for (o, v) in out.iter_mut().zip(b.iter()) {
                *o += v;
            }
        }
        out
    }
}

pub(crate) fn check_args(space: &Space, f: &ScalarField, q: f64, p: f64, alpha: f64) -> Result<()> {
    f.check_len(space)?;
    check_exponent("q", q)?;
    check_exponent("p", p)?;
    if q > p {
        return Err(Error::param("q", format!("need q <= p, got q = {q}, p = {p}")));
    }
    if p.is_infinite() {
        return Err(Error::param("p", "must be finite"));
    }
    check_positive("alpha", alpha)
}

/// `|f| + |grad f|`, or `|grad f|` alone.
pub(crate) fn control_field(nb: &Neighborhood, f: &[f64], with_values: bool) -> ScalarField {
    let g = gradient_on(nb, f);
    if with_values {
        f.iter().zip(g.iter()).map(|(a, b)| a.abs() + b).collect()
    } else {
        g
    }
}

/// `Omega = {M(h^q) > alpha^q}` with `h = |f| + |grad f|`, or `|grad f|`
/// for the homogeneous variant; the set the global constructors decompose on.
pub fn omega(space: &Space, f: &ScalarField, q: f64, alpha: f64, variant: Variant) -> Result<PointSet> {
    f.check_len(space)?;
    check_exponent("q", q)?;
    check_positive("alpha", alpha)?;
    let h = control_field(space.neighborhood(), f, variant != Variant::Homogeneous);
    global::level_set(space, &h, q, alpha)
}

/// Pieces `(u - u_{B_i}) chi_i` and `g = u 1_F + sum_i u_{B_i} chi_i` for one
/// Whitney family; `u` is zero-extended wherever `chi` is.
pub(crate) struct Split {
    pub g: Vec<f64>,
    pub pieces: Vec<ScalarField>,
    pub balls: Vec<PieceBall>,
}

pub(crate) fn split_on_family(space: &Space, u: &[f64], fam: &BallFamily, cover: Option<usize>) -> Result<Split> {
    let n = space.len();
    let chi = fam.partition_of_unity(space)?;
    let mut g: Vec<f64> = (0..n).map(|x| if fam.omega.mask()[x] { 0.0 } else { u[x] }).collect();
    let mut pieces = Vec::with_capacity(fam.len());
    let mut balls = Vec::with_capacity(fam.len());
    for (i, piece) in chi.pieces.iter().enumerate() {
        let mean = space.mean_over(&fam.balls[i].members, u);
        let mut b = ScalarField::zeros(n);
        for &(x, c) in piece {
            b[x.0] = (u[x.0] - mean) * c;
            g[x.0] += mean * c;
        }
        pieces.push(b);
        balls.push(PieceBall {
            center: fam.centers[i],
            radius: fam.radii[i],
            dilated_radius: fam.c2 * fam.radii[i],
            mean,
            cover,
        });
    }
    Ok(Split { g, pieces, balls })
}

/// Shared certificate arithmetic used by the constructors. The verifier
/// recomputes the same quantities along its own path.
pub(crate) struct CertInput<'a> {
    pub space: &'a Space,
    pub f: &'a [f64],
    pub g: &'a [f64],
    pub pieces: &'a [ScalarField],
    pub balls: &'a [PieceBall],
    pub omega: &'a PointSet,
    pub alpha: f64,
    pub q: f64,
    pub p: f64,
    pub variant: Variant,
}

pub(crate) fn certify(inp: &CertInput<'_>) -> Certificate {
    let space = inp.space;
    let n = space.len();
    let w = space.weights();
    let nb = space.neighborhood();
    let idx = space.ball_index();
    let homogeneous = inp.variant == Variant::Homogeneous;

    let fmax = inp.f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut resid: Vec<f64> = inp.f.iter().zip(inp.g).map(|(a, b)| a - b).collect();
    for b in inp.pieces {
        for (r, v) in resid.iter_mut().zip(b.iter()) {
            *r -= v;
        }
    }
    let reconstruction = resid.iter().fold(0.0f64, |m, v| m.max(v.abs())) / fmax.max(1.0);

    let mut support = true;
    let mut count = vec![0usize; n];
    let mut energy: f64 = 0.0;
    let mut sum_mu = 0.0;
    let mut mean_value: f64 = 0.0;
    let mut mean_ok = true;
    let q = inp.q;
    let exps: Vec<f64> = if homogeneous && q > 1.0 { vec![1.0, q] } else { vec![q] };
    for (b, pb) in inp.pieces.iter().zip(inp.balls) {
        let row = space.row(pb.center.0);
        let members: Vec<usize> = (0..n).filter(|&x| row[x] < pb.radius).collect();
        for x in 0..n {
            if row[x] >= pb.radius && b[x] != 0.0 {
                support = false;
            }
        }
        let mu_b: f64 = members.iter().map(|&x| w[x]).sum();
        sum_mu += mu_b;
        for &x in &members {
            count[x] += 1;
        }
        let gb = gradient_on(nb, b);
        for &e in &exps {
            let mut s = 0.0;
            for &x in &members {
                let mut term = gb[x].powf(e);
                if !homogeneous {
                    term += b[x].abs().powf(e);
                }
                s += w[x] * term;
            }
            energy = energy.max(s / (inp.alpha.powf(e) * mu_b));
        }
        if inp.variant == Variant::Global {
            let mu_dil = idx.ball_mass(pb.center.0, pb.dilated_radius);
            mean_value = mean_value.max(pb.mean.abs() / inp.alpha);
            // tolerance covers the rounding of the mean itself
            mean_ok &= pb.mean.abs() <= inp.alpha * mu_dil / mu_b * (1.0 + 1e-12);
        }
    }
    let gg = gradient_on(nb, inp.g);
    let grad_g_sup = gg.iter().fold(0.0f64, |m, v| m.max(*v)) / inp.alpha;
    let g_sup = (!homogeneous).then(|| inp.g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / inp.alpha);
    let h = control_field(nb, inp.f, !homogeneous);
    let hp: f64 = h.iter().zip(w).map(|(v, w)| w * v.powf(inp.p)).sum();
    let measure_ratio = if sum_mu == 0.0 { 0.0 } else { sum_mu * inp.alpha.powf(inp.p) / hp };
    Certificate {
        reconstruction,
        support,
        g_sup,
        grad_g_sup,
        piece_energy: energy,
        measure_ratio,
        overlap: count.into_iter().max().unwrap_or(0),
        mean_value: (inp.variant == Variant::Global).then_some(mean_value),
        mean_value_holds: (inp.variant == Variant::Global).then_some(mean_ok),
        omega_mass: inp.omega.mass(space),
        pieces: inp.pieces.len(),
        cover_overlap: None,
        transfer: None,
    }
}

/// Level `alpha` at which `Omega` takes roughly the fraction `frac` of the
/// points, halfway between two attained values of the maximal function.
#[cfg(test)]
pub(crate) fn quantile_alpha(space: &Space, f: &ScalarField, q: f64, frac: f64, with_values: bool) -> f64 {
    let h = control_field(space.neighborhood(), f, with_values);
    let hq: ScalarField = h.iter().map(|v| v.powf(q)).collect();
    let mut m = crate::maximal::maximal_function(space, &hq).unwrap().into_vec();
    m.sort_by(f64::total_cmp);
    let k = (((1.0 - frac) * m.len() as f64) as usize).min(m.len() - 1);
    let above = m[k..].iter().copied().find(|&v| v > m[k]).unwrap_or(2.0 * m[k]);
    (0.5 * (m[k] + above)).powf(1.0 / q)
}

impl Decomposition {
    /// Export document: threshold, exponents, ball geometry, one `id,value`
    /// CSV payload per piece (plus `g`), and the certificate.
    pub fn to_json(&self, space: &Space) -> Result<serde_json::Value> {
        let csv = |f: &ScalarField| -> Result<String> {
            let mut buf = Vec::new();
            crate::calculus::render_field(space, f, &mut buf)?;
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        };
        let pieces = self
            .pieces
            .iter()
            .zip(&self.balls)
            .map(|(b, pb)| {
                Ok(serde_json::json!({
                    "center": space.ids()[pb.center.0],
                    "radius": pb.radius,
                    "dilated_radius": pb.dilated_radius,
                    "mean": pb.mean,
                    "cover": pb.cover,
                    "csv": csv(b)?,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let families: Vec<_> = self
            .families
            .iter()
            .map(|f| serde_json::json!({ "c1": f.c1, "c2": f.c2, "balls": f.len(), "overlap": f.overlap, "comparability": f.comparability }))
            .collect();
        Ok(serde_json::json!({
            "variant": self.variant,
            "alpha": self.alpha,
            "q": self.q,
            "p": self.p,
            "whole_space": self.whole_space,
            "omega": self.omega.iter().map(|x| space.ids()[x.0].as_str()).collect::<Vec<_>>(),
            "families": families,
            "g": csv(&self.g)?,
            "pieces": pieces,
            "certificate": self.certificate,
        }))
    }
}
