//! Recorded time series and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StateVector;

pub const CSV_HEADER: [&str; 5] = ["t", "n", "np", "m", "trec_pct"];

/// One recorded point: the stocks plus the thymic-origin share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub n: f64,
    pub np: f64,
    pub m: f64,
    pub trec_pct: f64,
}

impl From<StateVector> for Sample {
    fn from(s: StateVector) -> Self {
        Self {
            t: s.t,
            n: s.n,
            np: s.np,
            m: s.m,
            trec_pct: s.trec_pct(),
        }
    }
}

impl Sample {
    pub fn state(&self) -> StateVector {
        StateVector::new(self.t, self.n, self.np, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stock {
    N,
    Np,
    M,
}

/// A stock that integrated below zero and was reset to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampEvent {
    pub t: f64,
    pub stock: Stock,
    /// The negative value that was replaced.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub clamps: Vec<ClampEvent>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Linear interpolation of `field` at time `t`. `None` outside the
    /// recorded range.
    pub fn interpolate(&self, t: f64, field: impl Fn(&Sample) -> f64) -> Option<f64> {
        let s = &self.samples;
        let first = s.first()?;
        let last = s.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let hi = s.partition_point(|x| x.t < t);
        if s[hi].t == t {
            return Some(field(&s[hi]));
        }
        let (a, b) = (&s[hi - 1], &s[hi]);
        let w = (t - a.t) / (b.t - a.t);
        Some(field(a) + w * (field(b) - field(a)))
    }

    pub fn trec_pct_at(&self, t: f64) -> Option<f64> {
        self.interpolate(t, |s| s.trec_pct)
    }

    /// Samples with `lo <= t <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> impl Iterator<Item = &Sample> + '_ {
        self.samples.iter().filter(move |s| s.t >= lo && s.t <= hi)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &CSV_HEADER, &self.samples)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Parses the CSV written by [`Trajectory::write_csv`]. Clamp events are
    /// not part of the file.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        Ok(Self {
            samples: read_rows(reader, &CSV_HEADER, "trajectory")?,
            clamps: Vec::new(),
        })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }
}

/// Writes `header` followed by one row per record, so empty series still
/// carry their header.
pub(crate) fn write_rows<W: Write, T: Serialize>(
    writer: W,
    header: &[&str],
    rows: &[T],
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows after checking the header matches `header` exactly.
pub(crate) fn read_rows<R: Read, T: DeserializeOwned>(
    reader: R,
    header: &[&str],
    what: &str,
) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!(
            "{what} CSV: expected header `{}`",
            header.join(",")
        )));
    }
    Ok(rdr.deserialize().collect::<Result<Vec<T>, _>>()?)
}
