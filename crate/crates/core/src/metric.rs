//! Finite metric spaces: the action set together with its movement distance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed on symmetry and triangle-inequality checks.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Norm used to turn point coordinates into distances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::Manhattan => diffs.sum(),
            Norm::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Norm::Euclidean),
            "manhattan" | "l1" => Ok(Norm::Manhattan),
            "chebyshev" | "linf" => Ok(Norm::Chebyshev),
            other => Err(Error::parameter(format!("unknown norm `{other}`"))),
        }
    }
}

/// `n` labelled points with a validated symmetric distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetric {
    labels: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
    dist: Vec<f64>,
    n: usize,
    diameter: f64,
}

impl FiniteMetric {
    /// Builds a metric from an explicit distance matrix.
    ///
    /// The matrix must be square, finite, non-negative, zero on the diagonal,
    /// symmetric and satisfy the triangle inequality up to [`METRIC_TOLERANCE`].
    /// Entries within tolerance of symmetric are averaged.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::input("metric needs at least one point"));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "distance row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::validated(labels, None, dist, n)
    }

    /// Builds a metric from point coordinates under `norm`.
    pub fn from_points(points: Vec<Vec<f64>>, norm: Norm) -> Result<Self> {
        let labels = (0..points.len()).map(|i| i.to_string()).collect();
        Self::from_labelled_points(labels, points, norm)
    }

    pub fn from_labelled_points(
        labels: Vec<String>,
        points: Vec<Vec<f64>>,
        norm: Norm,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::input("metric needs at least one point"));
        }
        if labels.len() != n {
            return Err(Error::input("label count does not match point count"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::input("points have inconsistent dimension"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite coordinate"));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = norm.distance(&points[i], &points[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::validated(labels, Some(points), dist, n)
    }

    /// Evenly spaced 2-D grid of `side × side` points on `[0,1]²`, row-major,
    /// with Euclidean distances.
    pub fn unit_grid(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::parameter("grid side must be positive"));
        }
        let step = if side > 1 { 1.0 / (side - 1) as f64 } else { 0.0 };
        let points = (0..side * side)
            .map(|k| vec![(k / side) as f64 * step, (k % side) as f64 * step])
            .collect();
        Self::from_points(points, Norm::Euclidean)
    }

    fn validated(
        labels: Vec<String>,
        coords: Option<Vec<Vec<f64>>>,
        mut dist: Vec<f64>,
        n: usize,
    ) -> Result<Self> {
        for (k, &d) in dist.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::input(format!(
                    "distance ({}, {}) = {d} is not a non-negative finite number",
                    k / n,
                    k % n
                )));
            }
        }
        for i in 0..n {
            if dist[i * n + i] > METRIC_TOLERANCE {
                return Err(Error::input(format!("non-zero self distance at {i}")));
            }
            dist[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if (a - b).abs() > METRIC_TOLERANCE {
                    return Err(Error::input(format!("asymmetric distance at ({i}, {j})")));
                }
                let avg = 0.5 * (a + b);
                dist[i * n + j] = avg;
                dist[j * n + i] = avg;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = dist[i * n + j];
                for k in 0..n {
                    if dij > dist[i * n + k] + dist[k * n + j] + METRIC_TOLERANCE {
                        return Err(Error::input(format!(
                            "triangle inequality violated for ({i}, {j}) via {k}"
                        )));
                    }
                }
            }
        }
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            labels,
            coords,
            dist,
            n,
            diameter,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| c[i].as_slice())
    }

    /// Smallest strictly positive pairwise distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Mean distance over ordered pairs of distinct points (0 when `n = 1`).
    pub fn mean_pairwise_distance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let total: f64 = self.dist.iter().sum();
        total / (self.n * (self.n - 1)) as f64
    }

    /// Same points with every distance multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::parameter("metric scale factor must be positive"));
        }
        let mut out = self.clone();
        out.dist.iter_mut().for_each(|d| *d *= factor);
        out.diameter *= factor;
        Ok(out)
    }

    /// Loads an explicit matrix: a header row of labels followed by `n` rows
    /// of `n` distances.
    pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let labels: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record?;
            let row = parse_floats(record.iter(), idx + 2)?;
            rows.push(row);
        }
        let mut metric = Self::from_matrix(rows)?;
        if labels.len() != metric.n {
            return Err(Error::input(format!(
                "header has {} labels but matrix has {} rows",
                labels.len(),
                metric.n
            )));
        }
        metric.labels = labels;
        Ok(metric)
    }

    /// Loads point coordinates: header `id,<coord>...`, one labelled point per
    /// row.
    pub fn load_points_csv(path: impl AsRef<Path>, norm: Norm) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut labels = Vec::new();
        let mut points = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record?;
            let mut fields = record.iter();
            let label = fields
                .next()
                .ok_or(Error::Parse {
                    line: idx + 2,
                    message: "empty row".into(),
                })?
                .to_string();
            labels.push(label);
            points.push(parse_floats(fields, idx + 2)?);
        }
        Self::from_labelled_points(labels, points, norm)
    }
}

fn parse_floats<'a>(fields: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    fields
        .map(|f| {
            f.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("`{f}`: {e}"),
            })
        })
        .collect()
}
