//! JSON space files.
//!
//! ```json
//! {"points": [{"id": "a", "weight": 1.0, "coords": [0.0]}, ...],
//!  "dist": {"type": "matrix", "values": [[0.0, 1.0], [1.0, 0.0]]},
//!  "neighbor_radius": 1.5}
//! ```
//!
//! `dist` may instead be `{"type": "graph", "edges": [{"a", "b", "len"}]}`,
//! closed under shortest paths at load. Floats are written with 17
//! significant digits so a save/load cycle is bit-exact.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};

use super::Space;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    points: Vec<PointIn>,
    dist: DistIn,
    #[serde(default)]
    neighbor_radius: Option<f64>,
    /// Provenance block written by the command-line tool; ignored here.
    #[serde(default, rename = "meta")]
    _meta: Option<serde::de::IgnoredAny>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointIn {
    id: String,
    weight: f64,
    #[serde(default)]
    coords: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum DistIn {
    Matrix { values: Vec<Vec<f64>> },
    Graph { edges: Vec<EdgeIn> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeIn {
    a: String,
    b: String,
    len: f64,
}

#[derive(Serialize)]
struct FileOut<'a> {
    points: Vec<PointOut<'a>>,
    dist: DistOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    neighbor_radius: Option<Box<RawValue>>,
}

#[derive(Serialize)]
struct PointOut<'a> {
    id: &'a str,
    weight: Box<RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Box<RawValue>>>,
}

#[derive(Serialize)]
struct DistOut {
    #[serde(rename = "type")]
    kind: &'static str,
    values: Vec<Vec<Box<RawValue>>>,
}

/// Decimal with 17 significant digits; always valid JSON for finite input.
pub(crate) fn raw_float(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("finite float is valid JSON")
}

pub fn space_to_json(space: &Space) -> String {
    let n = space.len();
    let coords = space.coords();
    let file = FileOut {
        points: (0..n)
            .map(|i| PointOut {
                id: &space.ids[i],
                weight: raw_float(space.weights[i]),
                coords: coords.map(|c| c[i].iter().map(|&v| raw_float(v)).collect()),
            })
            .collect(),
        dist: DistOut {
            kind: "matrix",
            values: (0..n).map(|a| space.row(a).iter().map(|&d| raw_float(d)).collect()).collect(),
        },
        neighbor_radius: space.neighbor_radius.map(raw_float),
    };
    serde_json::to_string(&file).expect("space serializes")
}

pub fn space_from_json(text: &str) -> Result<Space> {
    let file: FileIn = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    from_file(file)
}

pub fn save_space(space: &Space, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(space_to_json(space).as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_space(path: impl AsRef<Path>) -> Result<Space> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let file: FileIn =
        serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    from_file(file)
}

fn from_file(file: FileIn) -> Result<Space> {
    let n = file.points.len();
    let mut ids = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n);
    for p in file.points {
        ids.push(p.id);
        weights.push(p.weight);
        coords.push(p.coords);
    }
    let coords = match coords.iter().filter(|c| c.is_some()).count() {
        0 => None,
        k if k == n => Some(coords.into_iter().map(Option::unwrap).collect::<Vec<_>>()),
        _ => return Err(Error::Malformed("coords must be given for all points or none".into())),
    };
    let dist = match file.dist {
        DistIn::Matrix { values } => {
            if values.len() != n || values.iter().any(|row| row.len() != n) {
                return Err(Error::Malformed(format!("distance matrix must be {n} x {n}")));
            }
            values.into_iter().flatten().collect()
        }
        DistIn::Graph { edges } => graph_closure(&ids, &edges)?,
    };
    let space = Space::new(ids, weights, dist)?;
    let space = match coords {
        Some(c) => space.with_coords(c)?,
        None => space,
    };
    match file.neighbor_radius {
        Some(r) => space.with_neighbor_radius(r),
        None => Ok(space),
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// All-pairs shortest paths by Dijkstra from every source.
fn graph_closure(ids: &[String], edges: &[EdgeIn]) -> Result<Vec<f64>> {
    let n = ids.len();
    let lookup: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in edges {
        let a = *lookup.get(e.a.as_str()).ok_or_else(|| Error::UnknownPoint(e.a.clone()))?;
        let b = *lookup.get(e.b.as_str()).ok_or_else(|| Error::UnknownPoint(e.b.clone()))?;
        if !(e.len > 0.0) || !e.len.is_finite() {
            return Err(Error::InvalidDistance { a: e.a.clone(), b: e.b.clone(), value: e.len });
        }
        if a == b {
            return Err(Error::InvalidDistance { a: e.a.clone(), b: e.b.clone(), value: e.len });
        }
        adj[a].push((b, e.len));
        adj[b].push((a, e.len));
    }
    let mut dist = vec![0.0; n * n];
    let mut d = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for src in 0..n {
        d.iter_mut().for_each(|v| *v = f64::INFINITY);
        d[src] = 0.0;
        heap.push(Item(0.0, src));
        while let Some(Item(du, u)) = heap.pop() {
            if du > d[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let cand = du + w;
                if cand < d[v] {
                    d[v] = cand;
                    heap.push(Item(cand, v));
                }
            }
        }
        if let Some(v) = d.iter().position(|x| x.is_infinite()) {
            return Err(Error::Disconnected(ids[v].clone()));
        }
        // keep the matrix exactly symmetric: the upper triangle wins
        for v in src + 1..n {
            dist[src * n + v] = d[v];
            dist[v * n + src] = d[v];
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_cone, build_grid, WeightProfile};

    #[test]
    fn round_trip_is_bit_exact() {
        for s in [
            build_grid(&[3], 1.0, WeightProfile::Uniform).unwrap(),
            build_grid(&[4, 3], 0.1, WeightProfile::Power(0.3)).unwrap(),
            build_cone(2, 3, 3).unwrap(),
        ] {
            let back = space_from_json(&space_to_json(&s)).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("line.json");
        let s = build_grid(&[5], 0.2, WeightProfile::Uniform).unwrap();
        save_space(&s, &path).unwrap();
        assert_eq!(load_space(&path).unwrap(), s);
        assert!(matches!(load_space(dir.path().join("missing.json")), Err(Error::Io { .. })));
    }

    #[test]
    fn floats_carry_many_digits() {
        let s = build_grid(&[2], 0.5, WeightProfile::Uniform).unwrap();
        let text = space_to_json(&s);
        assert!(text.contains("5.0000000000000000e-1"), "{text}");
    }

    const TWO: &str = r#"{"points":[{"id":"a","weight":1},{"id":"b","weight":WB}],
        "dist":{"type":"matrix","values":[[0,1],[DBA,0]]}}"#;

    #[test]
    fn validation_errors() {
        let ok = TWO.replace("WB", "2").replace("DBA", "1");
        assert_eq!(space_from_json(&ok).unwrap().total_mass(), 3.0);
        let zero = TWO.replace("WB", "0").replace("DBA", "1");
        assert!(matches!(space_from_json(&zero), Err(Error::NonPositiveWeight { .. })));
        let asym = TWO.replace("WB", "1").replace("DBA", "2");
        assert!(matches!(space_from_json(&asym), Err(Error::AsymmetricDistance { .. })));
        assert!(matches!(space_from_json("{\"points\": 3}"), Err(Error::Malformed(_))));
        let tri = r#"{"points":[{"id":"a","weight":1},{"id":"b","weight":1},{"id":"c","weight":1}],
            "dist":{"type":"matrix","values":[[0,1,3],[1,0,1],[3,1,0]]}}"#;
        assert!(matches!(space_from_json(tri), Err(Error::TriangleViolation { .. })));
    }

    #[test]
    fn graph_distances_are_closed() {
        let g = r#"{"points":[{"id":"a","weight":1},{"id":"b","weight":1},{"id":"c","weight":1}],
            "dist":{"type":"graph","edges":[{"a":"a","b":"b","len":1},{"a":"b","b":"c","len":2},
            {"a":"a","b":"c","len":5}]}}"#;
        let s = space_from_json(g).unwrap();
        let (a, c) = (s.find("a").unwrap(), s.find("c").unwrap());
        assert_eq!(s.dist(a, c), 3.0);
        let broken = r#"{"points":[{"id":"a","weight":1},{"id":"b","weight":1}],
            "dist":{"type":"graph","edges":[]}}"#;
        assert!(matches!(space_from_json(broken), Err(Error::Disconnected(_))));
        let unknown = r#"{"points":[{"id":"a","weight":1}],
            "dist":{"type":"graph","edges":[{"a":"a","b":"z","len":1}]}}"#;
        assert!(matches!(space_from_json(unknown), Err(Error::UnknownPoint(_))));
    }
}
