use std::ops::{Deref, DerefMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Space;

/// One finite real value per point, indexed like the owning space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField(vec![c; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.0.iter().map(|&v| f(v)).collect()
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scaled(&self, lam: f64) -> Self {
        self.map(|v| lam * v)
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn check_len(&self, space: &Space) -> Result<()> {
        if self.0.len() != space.len() {
            return Err(Error::LengthMismatch { expected: space.len(), got: self.0.len() });
        }
        if let Some(v) = self.0.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("field", format!("values must be finite, found {v}")));
        }
        Ok(())
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        ScalarField(v)
    }
}

impl FromIterator<f64> for ScalarField {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        ScalarField(iter.into_iter().collect())
    }
}

/// Reads an `id,value` CSV; every point of `space` must appear exactly once.
pub fn read_field(space: &Space, path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_field(space, file)
}

pub(crate) fn parse_field(space: &Space, input: impl std::io::Read) -> Result<ScalarField> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "value" {
        return Err(Error::Malformed(format!("field header must be `id,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut values = vec![None; space.len()];
    for row in rdr.records() {
        let row = row?;
        let id = &row[0];
        let p = space.find(id).ok_or_else(|| Error::UnknownPoint(id.to_string()))?;
        let v: f64 = row[1].parse().map_err(|_| Error::Malformed(format!("bad value `{}` for `{id}`", &row[1])))?;
        if !v.is_finite() {
            return Err(Error::Malformed(format!("non-finite value for `{id}`")));
        }
        if values[p.0].replace(v).is_some() {
            return Err(Error::Malformed(format!("duplicate row for `{id}`")));
        }
    }
    let got = values.iter().filter(|v| v.is_some()).count();
    if got != space.len() {
        return Err(Error::LengthMismatch { expected: space.len(), got });
    }
    Ok(values.into_iter().map(Option::unwrap).collect())
}

pub fn write_field(space: &Space, f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    render_field(space, f, file)
}

/// [`write_field`] to any writer.
pub fn render_field(space: &Space, f: &ScalarField, out: impl std::io::Write) -> Result<()> {
    f.check_len(space)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "value"])?;
    for (id, v) in space.ids().iter().zip(f.iter()) {
        w.write_record([id.as_str(), &format!("{v:.16e}")])?;
    }
    w.flush().map_err(|e| Error::io("<field csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, WeightProfile};

    #[test]
    fn csv_round_trip() {
        let s = build_grid(&[3, 2], 1.0, WeightProfile::Uniform).unwrap();
        let f = ScalarField::from(vec![0.1, -2.0 / 3.0, 1e-300, 5.0, 0.0, 7.25]);
        let mut buf = Vec::new();
        render_field(&s, &f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,value\n"));
        assert_eq!(parse_field(&s, buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn csv_errors() {
        let s = build_grid(&[2], 1.0, WeightProfile::Uniform).unwrap();
        assert!(matches!(parse_field(&s, "id,value\n0,1\n".as_bytes()), Err(Error::LengthMismatch { .. })));
        assert!(matches!(parse_field(&s, "id,value\n0,1\n9,1\n".as_bytes()), Err(Error::UnknownPoint(_))));
        assert!(matches!(parse_field(&s, "id,val\n0,1\n1,1\n".as_bytes()), Err(Error::Malformed(_))));
        assert!(matches!(parse_field(&s, "id,value\n0,1\n0,2\n".as_bytes()), Err(Error::Malformed(_))));
        assert!(matches!(parse_field(&s, "id,value\n0,x\n1,2\n".as_bytes()), Err(Error::Malformed(_))));
    }
}
