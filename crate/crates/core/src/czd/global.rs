use crate::calculus::ScalarField;
use crate::cover::whitney;
use crate::error::{Error, Result};
use crate::maximal::maximal_function;
use crate::space::{PointSet, Space};

use super::{certify, check_args, control_field, split_on_family, CertInput, Decomposition, Variant, DEFAULT_C1};

/// `Omega = {M(h^q) > alpha^q}`.
pub(crate) fn level_set(space: &Space, h: &[f64], q: f64, alpha: f64) -> Result<PointSet> {
    let hq = ScalarField::from(h.iter().map(|v| v.powf(q)).collect::<Vec<_>>());
    let m = maximal_function(space, &hq)?;
    let thr = alpha.powf(q);
    Ok(PointSet::from_mask(m.iter().map(|&v| v > thr).collect()))
}

fn decompose(space: &Space, f: &ScalarField, q: f64, p: f64, alpha: f64, variant: Variant) -> Result<Decomposition> {
    check_args(space, f, q, p, alpha)?;
    let nb = space.neighborhood();
    let h = control_field(nb, f, variant == Variant::Global);
    let omega = level_set(space, &h, q, alpha)?;
    if omega.is_full() {
        return Err(Error::OmegaIsWholeSpace);
    }
    let (g, pieces, balls, families) = if omega.is_empty() {
        (f.as_slice().to_vec(), Vec::new(), Vec::new(), Vec::new())
    } else {
        let fam = whitney(space, &omega, DEFAULT_C1)?;
        let s = split_on_family(space, f, &fam, None)?;
        (s.g, s.pieces, s.balls, vec![fam])
    };
    let certificate = certify(&CertInput {
        space,
        f,
        g: &g,
        pieces: &pieces,
        balls: &balls,
        omega: &omega,
        alpha,
        q,
        p,
        variant,
    });
    Ok(Decomposition {
        variant,
        alpha,
        q,
        p,
        g: g.into(),
        pieces,
        balls,
        omega,
        whole_space: false,
        families,
        certificate,
    })
}

/// Decomposition at level `alpha` with `Omega = {M(|f| + |grad f|)^q > alpha^q}`.
///
/// Fails with [`Error::OmegaIsWholeSpace`] when `Omega = X`; use
/// [`super::czd_local`] there.
pub fn czd_global(space: &Space, f: &ScalarField, q: f64, p: f64, alpha: f64) -> Result<Decomposition> {
    decompose(space, f, q, p, alpha, Variant::Global)
}

/// As [`czd_global`] with `Omega` built from `|grad f|` only.
pub fn czd_homogeneous(space: &Space, f: &ScalarField, q: f64, p: f64, alpha: f64) -> Result<Decomposition> {
    decompose(space, f, q, p, alpha, Variant::Homogeneous)
}
