//! Finite metric-measure spaces.
//!
//! A [`Space`] is a finite set of points with a dense symmetric distance
//! matrix and a positive weight per point. Balls are open:
//! `B(c, r) = {x : d(c, x) < r}`. Every per-center ordering needed by the
//! ball-enumerating algorithms is built once, lazily, and cached in a
//! [`BallIndex`].

mod build;
mod doubling;
mod io;

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::calculus::Neighborhood;
use crate::error::{Error, Result};

pub use build::{build_cone, build_grid, cone_half, WeightProfile};
pub use doubling::{doubling_constant, DoublingReport};
pub use io::{load_space, save_space, space_from_json, space_to_json};

/// Index of a point inside its [`Space`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointId(pub usize);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Finite metric-measure space. Immutable after construction.
pub struct Space {
    ids: Vec<String>,
    weights: Vec<f64>,
    dist: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
    neighbor_radius: Option<f64>,
    index: OnceLock<BallIndex>,
    neighborhood: OnceLock<Neighborhood>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space")
            .field("points", &self.len())
            .field("mass", &self.total_mass())
            .field("neighbor_radius", &self.neighbor_radius)
            .finish()
    }
}

impl Clone for Space {
    fn clone(&self) -> Self {
        Space {
            ids: self.ids.clone(),
            weights: self.weights.clone(),
            dist: self.dist.clone(),
            coords: self.coords.clone(),
            neighbor_radius: self.neighbor_radius,
            index: OnceLock::new(),
            neighborhood: OnceLock::new(),
        }
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.weights.iter().map(|w| w.to_bits()).eq(other.weights.iter().map(|w| w.to_bits()))
            && self.dist.iter().map(|d| d.to_bits()).eq(other.dist.iter().map(|d| d.to_bits()))
            && self.coords == other.coords
            && self.neighbor_radius.map(f64::to_bits) == other.neighbor_radius.map(f64::to_bits)
    }
}

/// Relative slack allowed in the triangle-inequality check.
const TRIANGLE_SLACK: f64 = 1e-12;

impl Space {
    /// Builds a space from a dense row-major distance matrix, validating
    /// every metric-space axiom.
    pub fn new(ids: Vec<String>, weights: Vec<f64>, dist: Vec<f64>) -> Result<Self> {
        let space = Self::from_parts_unchecked(ids, weights, dist, None, None)?;
        space.check_triangle()?;
        Ok(space)
    }

    /// Validates everything except the O(n^3) triangle inequality. Used by
    /// the builders, whose distances are metric by construction.
    pub(crate) fn from_parts_unchecked(
        ids: Vec<String>,
        weights: Vec<f64>,
        dist: Vec<f64>,
        coords: Option<Vec<Vec<f64>>>,
        neighbor_radius: Option<f64>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if weights.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: weights.len() });
        }
        if dist.len() != n * n {
            return Err(Error::Malformed(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: c.len() });
            }
        }
        for (id, &w) in ids.iter().zip(&weights) {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { id: id.clone(), weight: w });
            }
        }
        for a in 0..n {
            for b in 0..n {
                let d = dist[a * n + b];
                let bad = if a == b { d != 0.0 } else { !(d > 0.0) || !d.is_finite() };
                if bad {
                    return Err(Error::InvalidDistance { a: ids[a].clone(), b: ids[b].clone(), value: d });
                }
                if b > a {
                    let back = dist[b * n + a];
                    if d.to_bits() != back.to_bits() {
                        return Err(Error::AsymmetricDistance {
                            a: ids[a].clone(),
                            b: ids[b].clone(),
                            ab: d,
                            ba: back,
                        });
                    }
                }
            }
        }
        if let Some(r) = neighbor_radius {
            crate::error::check_positive("neighbor_radius", r)?;
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Malformed(format!("duplicate point id `{id}`")));
            }
        }
        Ok(Space {
            ids,
            weights,
            dist,
            coords,
            neighbor_radius,
            index: OnceLock::new(),
            neighborhood: OnceLock::new(),
        })
    }

    fn check_triangle(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n {
            let row_a = &self.dist[a * n..(a + 1) * n];
            for b in 0..n {
                let ab = row_a[b];
                let row_b = &self.dist[b * n..(b + 1) * n];
                for c in 0..n {
                    let via = ab + row_b[c];
                    if row_a[c] > via * (1.0 + TRIANGLE_SLACK) {
                        return Err(Error::TriangleViolation {
                            a: self.ids[a].clone(),
                            b: self.ids[b].clone(),
                            c: self.ids[c].clone(),
                            ac: row_a[c],
                            via,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Returns a copy with the given coordinates and neighbor radius attached.
    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: coords.len() });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn with_neighbor_radius(mut self, radius: f64) -> Result<Self> {
        crate::error::check_positive("neighbor_radius", radius)?;
        self.neighbor_radius = Some(radius);
        self.neighborhood = OnceLock::new();
        Ok(self)
    }

    /// Same metric, all weights multiplied by `factor`.
    pub fn rescaled_weights(&self, factor: f64) -> Result<Self> {
        crate::error::check_positive("factor", factor)?;
        let mut s = self.clone();
        s.weights.iter_mut().for_each(|w| *w *= factor);
        Ok(s)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = PointId> + '_ {
        (0..self.len()).map(PointId)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, p: PointId) -> &str {
        &self.ids[p.0]
    }

    pub fn find(&self, id: &str) -> Option<PointId> {
        self.ids.iter().position(|s| s == id).map(PointId)
    }

    #[inline]
    pub fn weight(&self, p: PointId) -> f64 {
        self.weights[p.0]
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.dist[a.0 * self.len() + b.0]
    }

    #[inline]
    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.len();
        &self.dist[a * n..(a + 1) * n]
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Neighbor radius used for the discrete gradient: the builder's value
    /// when present, else the smallest radius making the neighbor graph
    /// connected.
    pub fn neighbor_radius(&self) -> f64 {
        self.neighbor_radius.unwrap_or_else(|| self.connectivity_radius())
    }

    pub fn stored_neighbor_radius(&self) -> Option<f64> {
        self.neighbor_radius
    }

    /// Largest edge of a minimum spanning tree (Prim, dense). Any radius at
    /// least this large connects the graph `d(x, y) <= r`.
    pub fn connectivity_radius(&self) -> f64 {
        let n = self.len();
        if n == 1 {
            return 1.0;
        }
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        best[0] = 0.0;
        let mut bottleneck: f64 = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            for v in 0..n {
                if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                    u = v;
                }
            }
            in_tree[u] = true;
            bottleneck = bottleneck.max(best[u]);
            let row = self.row(u);
            for v in 0..n {
                if !in_tree[v] && row[v] < best[v] {
                    best[v] = row[v];
                }
            }
        }
        bottleneck
    }

    /// The neighbor structure at [`Space::neighbor_radius`], cached.
    pub fn neighborhood(&self) -> &Neighborhood {
        self.neighborhood.get_or_init(|| Neighborhood::new(self, self.neighbor_radius()))
    }

    /// Per-center distance orderings, built on first use.
    pub fn ball_index(&self) -> &BallIndex {
        self.index.get_or_init(|| BallIndex::new(self))
    }

    fn check_point(&self, p: PointId) -> Result<()> {
        if p.0 >= self.len() {
            return Err(Error::UnknownPoint(p.to_string()));
        }
        Ok(())
    }

    /// Open ball `B(center, radius)`.
    pub fn ball(&self, center: PointId, radius: f64) -> Result<Ball> {
        self.check_point(center)?;
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::param("radius", format!("must be >= 0, got {radius}")));
        }
        Ok(self.ball_unchecked(center, radius))
    }

    pub(crate) fn ball_unchecked(&self, center: PointId, radius: f64) -> Ball {
        let idx = self.ball_index();
        let k = idx.count_within(center.0, radius);
        let mut members: Vec<PointId> = idx.order(center.0)[..k].iter().map(|&i| PointId(i as usize)).collect();
        members.sort_unstable();
        Ball { center, radius, measure: idx.prefix_mass(center.0, k), members }
    }

    /// Weighted mean of `values` over `members`.
    pub fn mean_over(&self, members: &[PointId], values: &[f64]) -> f64 {
        let (num, den) = members.iter().fold((0.0, 0.0), |(n, d), &p| {
            let w = self.weights[p.0];
            (n + w * values[p.0], d + w)
        });
        num / den
    }
}

/// Indicator of a subset of points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSet(Vec<bool>);

impl PointSet {
    pub fn empty(n: usize) -> Self {
        PointSet(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        PointSet(vec![true; n])
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        PointSet(mask)
    }

    pub fn from_points(n: usize, points: impl IntoIterator<Item = PointId>) -> Self {
        let mut s = Self::empty(n);
        for p in points {
            s.0[p.0] = true;
        }
        s
    }

    #[inline]
    pub fn contains(&self, p: PointId) -> bool {
        self.0[p.0]
    }

    pub fn insert(&mut self, p: PointId) {
        self.0[p.0] = true;
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| PointId(i))
    }

    pub fn complement(&self) -> Self {
        PointSet(self.0.iter().map(|b| !b).collect())
    }

    pub fn mask(&self) -> &[bool] {
        &self.0
    }

    pub fn mass(&self, space: &Space) -> f64 {
        // an empty f64 sum is -0.0
        self.iter().map(|p| space.weight(p)).fold(0.0, |a, w| a + w)
    }
}

/// Open ball with its resolved member set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
    /// Sorted by point index.
    pub members: Vec<PointId>,
    pub measure: f64,
}

impl Ball {
    pub fn contains(&self, p: PointId) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    /// `λB`: same center, radius scaled.
    pub fn dilate(&self, space: &Space, factor: f64) -> Ball {
        space.ball_unchecked(self.center, self.radius * factor)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Every radius at which some ball changes, plus one value below the
/// smallest positive distance and one beyond the diameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusLadder {
    radii: Vec<f64>,
}

impl RadiusLadder {
    pub fn new(space: &Space) -> Self {
        let n = space.len();
        let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            let row = space.row(a);
            d.extend_from_slice(&row[a + 1..]);
        }
        Self::from_distances(d)
    }

    /// Ladder built from an arbitrary multiset of positive distances.
    pub fn from_distances(mut d: Vec<f64>) -> Self {
        d.retain(|&x| x > 0.0);
        if d.is_empty() {
            return RadiusLadder { radii: vec![1.0] };
        }
        d.sort_unstable_by(f64::total_cmp);
        d.dedup();
        let mut radii = Vec::with_capacity(2 * d.len() + 1);
        radii.push(d[0] / 2.0);
        for (k, &x) in d.iter().enumerate() {
            radii.push(x);
            if let Some(&next) = d.get(k + 1) {
                radii.push(x + (next - x) / 2.0);
            }
        }
        radii.push(2.0 * d[d.len() - 1]);
        radii.dedup();
        RadiusLadder { radii }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Smallest ladder radius strictly greater than `d`: the smallest
    /// ladder ball that contains every point at distance `d`.
    pub fn next_above(&self, d: f64) -> Option<f64> {
        let k = self.radii.partition_point(|&r| r <= d);
        self.radii.get(k).copied()
    }
}

/// For every center: points sorted by distance (ties by index), the sorted
/// distances and prefix masses. Distinct balls around a center are exactly
/// the tie-group prefixes of its ordering.
#[derive(Debug)]
pub struct BallIndex {
    n: usize,
    order: Vec<u32>,
    sorted: Vec<f64>,
    cum_mass: Vec<f64>,
    group_ends: Vec<Vec<u32>>,
}

impl BallIndex {
    fn new(space: &Space) -> Self {
        let n = space.len();
        let mut order = Vec::with_capacity(n * n);
        let mut sorted = Vec::with_capacity(n * n);
        let mut cum_mass = Vec::with_capacity(n * (n + 1));
        let mut group_ends = Vec::with_capacity(n);
        let mut buf: Vec<u32> = (0..n as u32).collect();
        for c in 0..n {
            let row = space.row(c);
            buf.sort_unstable_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
            let mut acc = 0.0;
            cum_mass.push(0.0);
            let mut ends = Vec::new();
            for (k, &p) in buf.iter().enumerate() {
                order.push(p);
                sorted.push(row[p as usize]);
                acc += space.weights[p as usize];
                cum_mass.push(acc);
                let next = buf.get(k + 1).map(|&q| row[q as usize]);
                if next != Some(row[p as usize]) {
                    ends.push(k as u32 + 1);
                }
            }
            group_ends.push(ends);
        }
        BallIndex { n, order, sorted, cum_mass, group_ends }
    }

    pub fn order(&self, center: usize) -> &[u32] {
        &self.order[center * self.n..(center + 1) * self.n]
    }

    pub fn sorted_distances(&self, center: usize) -> &[f64] {
        &self.sorted[center * self.n..(center + 1) * self.n]
    }

    /// Prefix lengths at which the distance from `center` strictly increases.
    pub fn group_ends(&self, center: usize) -> &[u32] {
        &self.group_ends[center]
    }

    /// Mass of the first `k` points in the ordering of `center`.
    pub fn prefix_mass(&self, center: usize, k: usize) -> f64 {
        self.cum_mass[center * (self.n + 1) + k]
    }

    /// `|B(center, radius)|`.
    pub fn count_within(&self, center: usize, radius: f64) -> usize {
        self.sorted_distances(center).partition_point(|&d| d < radius)
    }

    pub fn ball_mass(&self, center: usize, radius: f64) -> f64 {
        self.prefix_mass(center, self.count_within(center, radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn line(n: usize) -> Space {
        build_grid(&[n], 1.0, WeightProfile::Uniform).unwrap()
    }

    #[test]
    fn open_ball_membership() {
        let s = line(3);
        let mid = PointId(1);
        assert_eq!(s.ball(mid, 1.5).unwrap().members.len(), 3);
        assert_eq!(s.ball(mid, 0.5).unwrap().members, vec![mid]);
        // distance-1 neighbours sit on the boundary of the open ball
        assert_eq!(s.ball(mid, 1.0).unwrap().members, vec![mid]);
        assert!(s.ball(mid, 0.0).unwrap().is_empty());
        assert_eq!(s.ball(mid, 1.5).unwrap().measure, 3.0);
    }

    #[test]
    fn unknown_center_is_rejected() {
        let s = line(3);
        assert!(matches!(s.ball(PointId(7), 1.0), Err(Error::UnknownPoint(_))));
        assert!(s.ball(PointId(0), -1.0).is_err());
    }

    #[test]
    fn dilation_matches_direct_ball() {
        let s = build_grid(&[5, 4], 0.5, WeightProfile::Uniform).unwrap();
        for c in s.points() {
            for r in [0.3, 0.7, 1.1] {
                let b = s.ball(c, r).unwrap();
                for lam in [1.0, 2.0, 3.5] {
                    assert_eq!(b.dilate(&s, lam), s.ball(c, lam * r).unwrap());
                }
            }
        }
    }

    #[test]
    fn ladder_endpoints() {
        let s = build_grid(&[4, 3], 1.0, WeightProfile::Uniform).unwrap();
        let ladder = RadiusLadder::new(&s);
        assert!(ladder.radii().windows(2).all(|w| w[0] < w[1]));
        for c in s.points() {
            assert_eq!(s.ball(c, ladder.radii()[0]).unwrap().members, vec![c]);
            assert_eq!(s.ball(c, *ladder.radii().last().unwrap()).unwrap().members.len(), s.len());
        }
        assert_eq!(ladder.next_above(1.0), Some(1.0 + (2f64.sqrt() - 1.0) / 2.0));
    }

    #[test]
    fn singleton_ladder() {
        let s = line(1);
        let ladder = RadiusLadder::new(&s);
        assert_eq!(ladder.len(), 1);
        assert_eq!(s.ball(PointId(0), ladder.radii()[0]).unwrap().members.len(), 1);
    }

    #[test]
    fn validation_errors_are_distinct() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            Space::new(ids.clone(), vec![1.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            Space::new(ids.clone(), vec![1.0, 1.0], vec![0.0, 1.0, 2.0, 0.0]),
            Err(Error::AsymmetricDistance { .. })
        ));
        assert!(matches!(
            Space::new(ids.clone(), vec![1.0, 1.0], vec![0.0, 0.0, 0.0, 0.0]),
            Err(Error::InvalidDistance { .. })
        ));
        let ids3 = vec!["a".into(), "b".into(), "c".into()];
        let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(matches!(Space::new(ids3, vec![1.0; 3], d), Err(Error::TriangleViolation { .. })));
    }

    #[test]
    fn connectivity_radius_of_irregular_line() {
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let d = vec![0.0, 1.0, 3.0, 1.0, 0.0, 2.0, 3.0, 2.0, 0.0];
        let s = Space::new(ids, vec![1.0; 3], d).unwrap();
        assert_eq!(s.connectivity_radius(), 2.0);
        assert_eq!(s.neighbor_radius(), 2.0);
    }
}
