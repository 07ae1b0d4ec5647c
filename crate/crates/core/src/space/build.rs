//! Test-space builders: Euclidean lattices and the two-sided cone.

use std::f64::consts::PI;

use crate::error::{check_positive, Error, Result};

use super::Space;

/// Point weights for [`build_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightProfile {
    /// `spacing^n` everywhere.
    Uniform,
    /// `|x|^beta * spacing^n`, with `|0|^beta` read as `spacing^beta`.
    Power(f64),
}

impl std::str::FromStr for WeightProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(WeightProfile::Uniform);
        }
        let beta = s
            .strip_prefix("power(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("power:"))
            .ok_or_else(|| Error::param("weight_profile", format!("expected `uniform` or `power(beta)`, got `{s}`")))?;
        let beta: f64 = beta
            .trim()
            .parse()
            .map_err(|_| Error::param("weight_profile", format!("bad exponent in `{s}`")))?;
        if !beta.is_finite() {
            return Err(Error::param("weight_profile", "exponent must be finite"));
        }
        Ok(WeightProfile::Power(beta))
    }
}

/// Rectangular lattice `prod_k {0, .., dims[k]-1} * spacing` with Euclidean
/// distances. Neighbor radius is `1.5 * spacing`.
pub fn build_grid(dims: &[usize], spacing: f64, profile: WeightProfile) -> Result<Space> {
    if dims.is_empty() {
        return Err(Error::param("dims", "at least one extent is required"));
    }
    check_positive("spacing", spacing)?;
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::EmptySpace);
    }
    let n: usize = dims.iter().product();
    let dim = dims.len() as i32;
    let mut coords = Vec::with_capacity(n);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..n {
        coords.push(idx.iter().map(|&i| i as f64 * spacing).collect::<Vec<f64>>());
        for (k, i) in idx.iter_mut().enumerate() {
            *i += 1;
            if *i < dims[k] {
                break;
            }
            *i = 0;
        }
    }
    let cell = spacing.powi(dim);
    let weights = coords
        .iter()
        .map(|x| match profile {
            WeightProfile::Uniform => cell,
            WeightProfile::Power(beta) => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let base = if norm == 0.0 { spacing } else { norm };
                base.powf(beta) * cell
            }
        })
        .collect::<Vec<f64>>();
    let ids = (0..n)
        .map(|p| {
            let mut rem = p;
            let parts: Vec<String> = dims
                .iter()
                .map(|&d| {
                    let i = rem % d;
                    rem /= d;
                    i.to_string()
                })
                .collect();
            parts.join("_")
        })
        .collect();
    let dist = euclidean_matrix(&coords);
    Space::from_parts_unchecked(ids, weights, dist, Some(coords), Some(1.5 * spacing))
}

fn euclidean_matrix(coords: &[Vec<f64>]) -> Vec<f64> {
    let n = coords.len();
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let d = euclid(&coords[a], &coords[b]);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    dist
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Volume of the unit ball in `R^d`.
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Two solid cones `{|x'| <= |x_n|}` in `R^n`, truncated at `|x_n| <= k`,
/// glued at the vertex.
///
/// Level `i = 1..=k` of each half sits at height `±i` and carries the
/// cell-centred lattice of spacing `2/m` inside the disc `|x'| <= i`; the
/// level's slab volume is shared equally among its points. Distances are
/// intrinsic: Euclidean inside a half, `|x| + |y|` across halves, so the
/// vertex is a cut point.
pub fn build_cone(dimension: usize, levels: usize, points_per_ring: usize) -> Result<Space> {
    if dimension < 2 {
        return Err(Error::param("dimension", format!("cone needs n >= 2, got {dimension}")));
    }
    if levels == 0 {
        return Err(Error::param("levels", "need at least one level"));
    }
    if points_per_ring == 0 {
        return Err(Error::param("points_per_ring", "need at least one point per ring"));
    }
    let n = dimension;
    let s = 2.0 / points_per_ring as f64;
    let omega = unit_ball_volume(n - 1);
    let nf = n as f64;

    let mut ids = vec!["o".to_string()];
    let mut weights = vec![2.0 * omega * 0.5f64.powi(n as i32) / nf];
    let mut coords = vec![vec![0.0; n]];
    // +1 / -1 per point, 0 at the vertex
    let mut half = vec![0i8];

    for (tag, sign) in [("p", 1.0), ("m", -1.0)] {
        for i in 1..=levels {
            let h = i as f64;
            let per_axis = (2.0 * h / s).round() as usize;
            let mut ring: Vec<Vec<f64>> = Vec::new();
            let mut lattice = vec![0usize; n - 1];
            let total = per_axis.pow((n - 1) as u32);
            for _ in 0..total {
                let x: Vec<f64> = lattice.iter().map(|&j| -h + s * (j as f64 + 0.5)).collect();
                if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= h * (1.0 + 1e-12) {
                    ring.push(x);
                }
                for j in lattice.iter_mut() {
                    *j += 1;
                    if *j < per_axis {
                        break;
                    }
                    *j = 0;
                }
            }
            let slab = omega * ((h + 0.5).powi(n as i32) - (h - 0.5).powi(n as i32)) / nf;
            let w = slab / ring.len() as f64;
            for (j, mut x) in ring.into_iter().enumerate() {
                x.push(sign * h);
                ids.push(format!("{tag}{i}.{j}"));
                weights.push(w);
                coords.push(x);
                half.push(sign as i8);
            }
        }
    }

    let count = ids.len();
    let norms: Vec<f64> = coords.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut dist = vec![0.0; count * count];
    for a in 0..count {
        for b in a + 1..count {
            let d = if half[a] * half[b] < 0 { norms[a] + norms[b] } else { euclid(&coords[a], &coords[b]) };
            dist[a * count + b] = d;
            dist[b * count + a] = d;
        }
    }
    Space::from_parts_unchecked(ids, weights, dist, Some(coords), Some(1.5 * s.max(1.0)))
}

/// Which half of a cone a point lies in: `+1`, `-1`, or `0` at the vertex.
pub fn cone_half(space: &Space, p: super::PointId) -> i8 {
    match space.coords() {
        Some(c) => {
            let h = *c[p.0].last().unwrap_or(&0.0);
            if h > 0.0 {
                1
            } else if h < 0.0 {
                -1
            } else {
                0
            }
        }
        None => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::PointId;

    #[test]
    fn grid_examples() {
        let s = build_grid(&[3], 1.0, WeightProfile::Uniform).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.total_mass(), 3.0);

        let s = build_grid(&[2, 2], 0.5, WeightProfile::Uniform).unwrap();
        assert_eq!(s.weights(), &[0.25; 4]);
        assert_eq!(s.total_mass(), 1.0);
        assert_eq!(s.dist(PointId(0), PointId(3)), 0.5 * 2f64.sqrt());

        let s = build_grid(&[4], 1.0, WeightProfile::Power(1.0)).unwrap();
        assert_eq!(s.weights(), &[1.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn grid_zero_extent_is_empty() {
        assert!(matches!(build_grid(&[3, 0], 1.0, WeightProfile::Uniform), Err(Error::EmptySpace)));
        assert!(build_grid(&[3], 0.0, WeightProfile::Uniform).is_err());
    }

    #[test]
    fn profile_parsing() {
        assert_eq!("uniform".parse::<WeightProfile>().unwrap(), WeightProfile::Uniform);
        assert_eq!("power(1.5)".parse::<WeightProfile>().unwrap(), WeightProfile::Power(1.5));
        assert!("cubic".parse::<WeightProfile>().is_err());
    }

    #[test]
    fn smallest_cone() {
        let s = build_cone(2, 1, 1).unwrap();
        assert_eq!(s.len(), 3);
        let (o, a, b) = (PointId(0), PointId(1), PointId(2));
        assert_eq!(s.dist(a, b), s.dist(a, o) + s.dist(o, b));
        assert!(s.total_mass() > 0.0);
    }

    #[test]
    fn cone_levels_have_m_times_i_points_in_2d() {
        let s = build_cone(2, 4, 3).unwrap();
        assert_eq!(s.len(), 1 + 2 * 3 * (1 + 2 + 3 + 4));
        // slabs tile the truncated double cone |x_2| <= 4.5
        let expect = 2.0 * 4.5f64.powi(2);
        assert!((s.total_mass() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn cone_graph_paths_cross_the_vertex() {
        // shortest paths in the neighbour graph between halves all use the vertex
        let s = build_cone(2, 2, 2).unwrap();
        let r = s.neighbor_radius();
        let n = s.len();
        let mut g = vec![f64::INFINITY; n * n];
        for a in 0..n {
            for b in 0..n {
                let d = s.dist(PointId(a), PointId(b));
                if d <= r {
                    g[a * n + b] = d;
                }
            }
        }
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let via = g[a * n + k] + g[k * n + b];
                    if via < g[a * n + b] {
                        g[a * n + b] = via;
                    }
                }
            }
        }
        for a in s.points() {
            for b in s.points() {
                if cone_half(&s, a) * cone_half(&s, b) < 0 {
                    let through = g[a.0 * n] + g[b.0];
                    assert!((g[a.0 * n + b.0] - through).abs() < 1e-12);
                    assert!(g[a.0 * n + b.0].is_finite());
                }
            }
        }
    }

    #[test]
    fn cone_metric_is_valid_in_3d() {
        let s = build_cone(3, 2, 2).unwrap();
        let n = s.len();
        let d: Vec<f64> = (0..n * n).map(|k| s.dist(PointId(k / n), PointId(k % n))).collect();
        Space::new(s.ids().to_vec(), s.weights().to_vec(), d).unwrap();
    }
}
