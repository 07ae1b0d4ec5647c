use rayon::prelude::*;

use crate::calculus::ScalarField;
use crate::cover::{unit_ball_cover, whitney, UnitCover};
use crate::error::{check_positive, Result};
use crate::maximal::{maximal_function, relative_maximal};
use crate::space::{PointId, PointSet, Space};

use super::global::level_set;
use super::{
    certify, check_args, control_field, split_on_family, CertInput, Decomposition, PieceBall, Split, Variant,
    DEFAULT_C1,
};

/// Local decomposition through the unit-ball cover `B^j = B(x_j, rho)`.
///
/// With `Omega = {M(|f| + |grad f|)^q > alpha^q}`:
/// * `Omega = X`: the bad part is all of `f` (`g = 0`, one piece).
/// * otherwise each `f_j = f phi_j` is decomposed on
///   `Omega_j = {x ∈ B^j : M_{B^j}(|f_j| + |grad f_j|)^q > C alpha^q}`, where
///   `C` is the measured transfer constant `max M_{B^j}(h_j^q) / M(h^q)`,
///   and the per-`j` results are summed.
///
/// Never fails on valid input.
pub fn czd_local(space: &Space, f: &ScalarField, q: f64, p: f64, alpha: f64, rho: f64) -> Result<Decomposition> {
    check_args(space, f, q, p, alpha)?;
    check_positive("rho", rho)?;
    let n = space.len();
    let nb = space.neighborhood();
    let h = control_field(nb, f, true);
    let omega = level_set(space, &h, q, alpha)?;
    let cover = unit_ball_cover(space, rho)?;

    let (g, pieces, balls, families, omega_u, transfer) = if omega.is_full() {
        // the whole space: nothing is controlled at level alpha
        let ball = PieceBall {
            center: PointId(0),
            radius: 2.0 * space.diameter() + 1.0,
            dilated_radius: 2.0 * space.diameter() + 1.0,
            mean: space.mean_over(&space.points().collect::<Vec<_>>(), f),
            cover: None,
        };
        (vec![0.0; n], vec![f.clone()], vec![ball], Vec::new(), omega.clone(), None)
    } else {
        let hq: ScalarField = h.iter().map(|v| v.powf(q)).collect();
        let big = maximal_function(space, &hq)?;
        let local = local_maximals(space, f, q, &cover)?;
        let transfer = local
            .iter()
            .zip(&cover.balls)
            .flat_map(|((_, hj), b)| b.members.iter().map(|x| (hj[x.0], big[x.0])))
            .filter(|&(_, m)| m > 0.0)
            .map(|(a, m)| a / m)
            .fold(0.0f64, f64::max);
        let thr = transfer * alpha.powf(q);
        let parts: Vec<_> = local
            .into_par_iter()
            .enumerate()
            .map(|(j, (fj, hj))| -> Result<_> {
                // intersecting with Omega only absorbs rounding in `transfer`
                let mask: Vec<bool> =
                    (0..n).map(|x| cover.balls[j].contains(PointId(x)) && hj[x] > thr && omega.mask()[x]).collect();
                let oj = PointSet::from_mask(mask);
                if oj.is_empty() {
                    return Ok((Split { g: fj.into_vec(), pieces: Vec::new(), balls: Vec::new() }, None, oj));
                }
                let fam = whitney(space, &oj, DEFAULT_C1)?;
                let s = split_on_family(space, &fj, &fam, Some(j))?;
                Ok((s, Some(fam), oj))
            })
            .collect::<Result<_>>()?;
        let mut g = vec![0.0; n];
        let (mut pieces, mut balls, mut families) = (Vec::new(), Vec::new(), Vec::new());
        let mut union = vec![false; n];
        for (s, fam, oj) in parts {
            for (a, b) in g.iter_mut().zip(&s.g) {
                *a += b;
            }
            pieces.extend(s.pieces);
            balls.extend(s.balls);
            families.extend(fam);
            for x in oj.iter() {
                union[x.0] = true;
            }
        }
        (g, pieces, balls, families, PointSet::from_mask(union), Some(transfer))
    };
    let mut certificate = certify(&CertInput {
        space,
        f,
        g: &g,
        pieces: &pieces,
        balls: &balls,
        omega: &omega_u,
        alpha,
        q,
        p,
        variant: Variant::Local,
    });
    certificate.cover_overlap = Some(cover.overlap);
    certificate.transfer = transfer;
    Ok(Decomposition {
        variant: Variant::Local,
        alpha,
        q,
        p,
        g: g.into(),
        pieces,
        balls,
        omega: omega_u,
        whole_space: omega.is_full(),
        families,
        certificate,
    })
}

/// `(f_j, M_{B^j}(h_j^q))` for every cover ball.
fn local_maximals(space: &Space, f: &ScalarField, q: f64, cover: &UnitCover) -> Result<Vec<(ScalarField, ScalarField)>> {
    let n = space.len();
    let nb = space.neighborhood();
    (0..cover.len())
        .into_par_iter()
        .map(|j| {
            let phi = cover.phi.dense(j, n);
            let fj: ScalarField = f.iter().zip(&phi).map(|(a, b)| a * b).collect();
            let hj = control_field(nb, &fj, true);
            let hq: ScalarField = hj.iter().map(|v| v.powf(q)).collect();
            let mask = PointSet::from_mask((0..n).map(|x| cover.balls[j].contains(PointId(x))).collect());
            Ok((fj, relative_maximal(space, &mask, &hq)?))
        })
        .collect()
}
