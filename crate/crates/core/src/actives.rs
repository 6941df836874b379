//! Lookup table of activated CD4 cell density by age.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 2] = ["age_years", "active_cells_per_mm3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise-linear between knots, clamped to the end values outside.
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Row {
    age_years: f64,
    active_cells_per_mm3: f64,
}

/// Activated-cell density `A(t)` feeding the memory compartment.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivesTable {
    knots: Vec<(f64, f64)>,
    mode: Interpolation,
}

impl Default for ActivesTable {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ActivesTable {
    /// The shipped default: no activated cells at any age.
    pub fn zeros() -> Self {
        Self {
            knots: vec![(0.0, 0.0), (100.0, 0.0)],
            mode: Interpolation::Linear,
        }
    }

    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Actives("table has no rows".into()));
        }
        for (i, &(age, a)) in knots.iter().enumerate() {
            if !age.is_finite() || !a.is_finite() {
                return Err(Error::Actives(format!("row {}: non-finite value", i + 1)));
            }
            if a < 0.0 {
                return Err(Error::Actives(format!(
                    "row {}: negative active count {a}",
                    i + 1
                )));
            }
            if i > 0 && age <= knots[i - 1].0 {
                return Err(Error::Actives(format!(
                    "row {}: age {age} does not increase strictly",
                    i + 1
                )));
            }
        }
        Ok(Self {
            knots,
            mode: Interpolation::Linear,
        })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }

    pub fn lookup(&self, age: f64) -> f64 {
        let k = &self.knots;
        let (first, last) = (k[0], k[k.len() - 1]);
        if age <= first.0 {
            return first.1;
        }
        if age >= last.0 {
            return last.1;
        }
        // first knot with knot.age > age; guaranteed 1..len by the clamps above
        let hi = k.partition_point(|&(a, _)| a <= age);
        let (a0, v0) = k[hi - 1];
        let (a1, v1) = k[hi];
        match self.mode {
            Interpolation::Linear => v0 + (v1 - v0) * (age - a0) / (a1 - a0),
        }
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).ne(CSV_HEADER) {
            return Err(Error::Actives(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut knots = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            knots.push((row.age_years, row.active_cells_per_mm3));
        }
        Self::new(knots)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for &(age_years, active_cells_per_mm3) in &self.knots {
            w.serialize(Row {
                age_years,
                active_cells_per_mm3,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_zero_everywhere() {
        let t = ActivesTable::default();
        for age in [-1.0, 0.0, 3.5, 100.0, 250.0] {
            assert_eq!(t.lookup(age), 0.0);
        }
    }

    #[test]
    fn linear_between_knots_and_clamped_outside() {
        let t = ActivesTable::new(vec![(0.0, 100.0), (2.0, 300.0), (5.0, 0.0)]).unwrap();
        assert_eq!(t.lookup(-3.0), 100.0);
        assert_eq!(t.lookup(1.0), 200.0);
        assert_eq!(t.lookup(2.0), 300.0);
        assert_eq!(t.lookup(3.5), 150.0);
        assert_eq!(t.lookup(80.0), 0.0);
    }

    #[test]
    fn rejects_unsorted_and_negative() {
        assert!(ActivesTable::new(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(ActivesTable::new(vec![(0.0, -1.0)]).is_err());
        assert!(ActivesTable::new(vec![]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = ActivesTable::new(vec![(0.0, 1200.5), (1.0, 900.25), (10.0, 0.1)]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("age_years,active_cells_per_mm3\n"));
        assert_eq!(ActivesTable::from_reader(&buf[..]).unwrap(), t);
    }

    #[test]
    fn csv_wrong_header() {
        let err = ActivesTable::from_reader("age,a\n0,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected header"));
    }
}
