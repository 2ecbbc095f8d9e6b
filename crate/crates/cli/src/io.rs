//! File formats, atomic output and number formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use charges_core::measures::{Coord, LocatedMeasure};
use charges_core::metric::{Chebyshev, CoordMetric, Euclidean, Manhattan};
use charges_core::{Measure, Space};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Metric used to turn coordinates into distances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    #[default]
    Euclid,
    Manhattan,
    Chebyshev,
}

impl CoordMetric<f64> for Ambient {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Ambient::Euclid => Euclidean.distance(a, b),
            Ambient::Manhattan => Manhattan.distance(a, b),
            Ambient::Chebyshev => Chebyshev.distance(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `{"points": [[x, ...], ...] | null, "dist": [[...], ...], "bound": b}`
#[derive(Debug, Clone, Deserialize)]
pub struct SpaceFile {
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub bound: Option<f64>,
}

/// A space given inline or as a path relative to the referring file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Path(PathBuf),
    Inline(SpaceFile),
}

/// `{"space": <space-ref>, "weights": [...]}`; `space` may be omitted
/// when the command takes `--space`.
#[derive(Debug, Clone, Deserialize)]
pub struct MeasureFile {
    #[serde(default)]
    pub space: Option<SpaceRef>,
    pub weights: Vec<f64>,
}

/// `{"points": [...], "weights": [...]}` with bare numbers allowed as 1-D points.
#[derive(Debug, Clone, Deserialize)]
pub struct LocatedFile {
    pub points: Vec<Coord>,
    pub weights: Vec<f64>,
}

/// Either a bare list of anchors or an object with an escape radius.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AnchorsFile {
    List(Vec<Coord>),
    Full {
        anchors: Vec<Coord>,
        #[serde(default)]
        escape_radius: Option<f64>,
    },
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

impl SpaceFile {
    pub fn build(self, from_coords: Option<Ambient>) -> Result<Space, CliError> {
        let bound = self
            .bound
            .ok_or_else(|| CliError::Domain("space file has no `bound`".into()))?;
        let space = match (self.dist, self.points, from_coords) {
            (_, Some(points), Some(metric)) => Space::from_coords(points, &metric)?.with_bound(bound)?,
            (Some(dist), _, None) => Space::new(dist, bound, &1e-9)?,
            (None, Some(points), None) => {
                Space::from_coords(points, &Ambient::Euclid)?.with_bound(bound)?
            }
            (_, None, Some(_)) => {
                return Err(CliError::Domain("--from-coords needs `points` in the space file".into()))
            }
            (None, None, None) => {
                return Err(CliError::Domain("space file has neither `dist` nor `points`".into()))
            }
        };
        Ok(space)
    }
}

pub fn load_space(path: &Path, from_coords: Option<Ambient>) -> Result<Space, CliError> {
    read_json::<SpaceFile>(path)?.build(from_coords)
}

/// Load a measure; `space` overrides the file's own space reference.
pub fn load_measure(
    path: &Path,
    space: Option<&Space>,
    from_coords: Option<Ambient>,
) -> Result<(Space, Measure), CliError> {
    let file: MeasureFile = read_json(path)?;
    let space = match (space, file.space) {
        (Some(s), _) => s.clone(),
        (None, Some(SpaceRef::Inline(s))) => s.build(from_coords)?,
        (None, Some(SpaceRef::Path(p))) => {
            let p = match path.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            };
            load_space(&p, from_coords)?
        }
        (None, None) => {
            return Err(CliError::Domain(format!(
                "{} names no space and --space was not given",
                path.display()
            )))
        }
    };
    let measure = Measure::new(&space, file.weights)?;
    Ok((space, measure))
}

pub fn load_located(path: &Path) -> Result<LocatedMeasure<f64>, CliError> {
    let file: LocatedFile = read_json(path)?;
    Ok(LocatedMeasure::new(
        file.points.iter().map(Coord::to_point).collect(),
        file.weights,
    )?)
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// or to stdout when no path is given.
pub fn write_atomic(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            });
    };
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Twelve significant digits, shortest form, '.' decimal.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("float formatting round-trips");
    rounded.to_string()
}

/// A header and rows, rendered as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Domain(format!("csv: {e}"));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Domain(format!("csv: {e}")))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Domain(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(num(123456789012345.0), "123456789012000");
    }

    #[test]
    fn space_sources() {
        let both: SpaceFile = serde_json::from_str(
            r#"{"points": [[0], [3]], "dist": [[0, 1], [1, 0]], "bound": 5}"#,
        )
        .unwrap();
        assert_eq!(*both.clone().build(None).unwrap().dist(0, 1), 1.0);
        assert_eq!(*both.build(Some(Ambient::Manhattan)).unwrap().dist(0, 1), 3.0);
        let nobound: SpaceFile = serde_json::from_str(r#"{"dist": [[0]]}"#).unwrap();
        assert!(matches!(nobound.build(None), Err(CliError::Domain(_))));
        let small: SpaceFile =
            serde_json::from_str(r#"{"points": [[0, 0], [3, 4]], "bound": 5}"#).unwrap();
        assert_eq!(*small.build(None).unwrap().dist(0, 1), 5.0);
    }

    #[test]
    fn csv_rendering() {
        let mut t = Table::new(&["N", "w1"]);
        t.push(vec!["1".into(), num(0.5)]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "N,w1\n1,0.5\n");
    }
}
