//! Finite metric spaces, diameters, greedy separated sets, covers and
//! diameter-bounded partitions.
//!
//! Every greedy construction breaks ties by lowest point index so results
//! are reproducible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A distance on coordinate vectors.
pub trait CoordMetric<S>: Send + Sync {
    fn distance(&self, a: &[S], b: &[S]) -> S;
}

/// Sum of absolute coordinate differences (the usual metric on a line).
#[derive(Debug, Clone, Copy, Default)]
pub struct Manhattan;

/// Maximum absolute coordinate difference.
#[derive(Debug, Clone, Copy, Default)]
pub struct Chebyshev;

/// Euclidean distance; floating scalars only.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl<S: Scalar> CoordMetric<S> for Manhattan {
    fn distance(&self, a: &[S], b: &[S]) -> S {
        a.iter()
            .zip(b)
            .fold(S::zero(), |acc, (x, y)| acc + (x.clone() - y.clone()).abs())
    }
}

impl<S: Scalar> CoordMetric<S> for Chebyshev {
    fn distance(&self, a: &[S], b: &[S]) -> S {
        a.iter()
            .zip(b)
            .fold(S::zero(), |acc, (x, y)| S::max_of(acc, (x.clone() - y.clone()).abs()))
    }
}

impl<S: Scalar + num_traits::Float> CoordMetric<S> for Euclidean {
    fn distance(&self, a: &[S], b: &[S]) -> S {
        a.iter()
            .zip(b)
            .fold(S::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
            .sqrt()
    }
}

/// Points with a symmetric, nonnegative distance matrix and a declared
/// diameter bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace<S> {
    coords: Option<Vec<Vec<S>>>,
    dist: Vec<Vec<S>>,
    bound: S,
}

/// One failed metric axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize, value: f64 },
    Identity { i: usize, value: f64 },
    Symmetry { i: usize, j: usize, forward: f64, backward: f64 },
    Triangle { i: usize, j: usize, k: usize, direct: f64, via: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub points: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_square<S>(dist: &[Vec<S>]) -> Result<()> {
    let n = dist.len();
    if let Some((i, row)) = dist.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::structural(format!(
            "distance matrix has {n} rows but row {i} has {} entries",
            row.len()
        )));
    }
    Ok(())
}

/// List every identity, symmetry, sign and triangle violation exceeding `tol`.
pub fn validate_metric<S: Scalar>(dist: &[Vec<S>], tol: &S) -> Result<ValidationReport> {
    check_square(dist)?;
    let n = dist.len();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let d = &dist[i][j];
            if !d.is_finite_value() {
                violations.push(Violation::NonFinite { i, j });
            } else if *d < -tol.clone() {
                violations.push(Violation::Negative { i, j, value: d.to_real() });
            }
        }
    }
    if !violations.is_empty() {
        // triangle checks are meaningless on non-finite input
        return Ok(ValidationReport { points: n, violations });
    }
    for i in 0..n {
        if dist[i][i].abs() > *tol {
            violations.push(Violation::Identity {
                i,
                value: dist[i][i].to_real(),
            });
        }
        for j in (i + 1)..n {
            if (dist[i][j].clone() - dist[j][i].clone()).abs() > *tol {
                violations.push(Violation::Symmetry {
                    i,
                    j,
                    forward: dist[i][j].to_real(),
                    backward: dist[j][i].to_real(),
                });
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let via = dist[i][j].clone() + dist[j][k].clone();
                if dist[i][k] > via.clone() + tol.clone() {
                    violations.push(Violation::Triangle {
                        i,
                        j,
                        k,
                        direct: dist[i][k].to_real(),
                        via: via.to_real(),
                    });
                }
            }
        }
    }
    Ok(ValidationReport { points: n, violations })
}

impl<S: Scalar> FiniteMetricSpace<S> {
    /// Validated construction: the matrix must be a (pseudo)metric within
    /// `tol` and bounded by `bound`.
    pub fn new(dist: Vec<Vec<S>>, bound: S, tol: &S) -> Result<Self> {
        let report = validate_metric(&dist, tol)?;
        if let Some(v) = report.violations.first() {
            return Err(Error::invariant(
                "metric",
                format!("{} violation(s), first: {v:?}", report.violations.len()),
            ));
        }
        let space = FiniteMetricSpace {
            coords: None,
            dist,
            bound,
        };
        space.check_bound()?;
        Ok(space)
    }

    /// Validated construction with the bound set to the diameter.
    pub fn from_matrix(dist: Vec<Vec<S>>, tol: &S) -> Result<Self> {
        check_square(&dist)?;
        let bound = max_entry(&dist);
        Self::new(dist, bound, tol)
    }

    /// Distances derived from coordinates. The metric axioms hold by
    /// construction, so only the shape is checked.
    pub fn from_coords<M: CoordMetric<S>>(coords: Vec<Vec<S>>, metric: &M) -> Result<Self> {
        if let Some(first) = coords.first() {
            if coords.iter().any(|c| c.len() != first.len()) {
                return Err(Error::structural("points have differing dimensions"));
            }
        }
        let dist: Vec<Vec<S>> = coords
            .iter()
            .map(|a| coords.iter().map(|b| metric.distance(a, b)).collect())
            .collect();
        if dist.iter().flatten().any(|d| !d.is_finite_value()) {
            return Err(Error::Numeric("non-finite coordinate distance".into()));
        }
        let bound = max_entry(&dist);
        Ok(FiniteMetricSpace {
            coords: Some(coords),
            dist,
            bound,
        })
    }

    /// Points on the real line with `|x - y|`.
    pub fn on_line(xs: &[S]) -> Result<Self> {
        Self::from_coords(xs.iter().map(|x| vec![x.clone()]).collect(), &Manhattan)
    }

    /// Replace the declared bound; it must dominate every distance.
    pub fn with_bound(mut self, bound: S) -> Result<Self> {
        self.bound = bound;
        self.check_bound()?;
        Ok(self)
    }

    /// All distances (and the bound) multiplied by `c > 0`.
    pub fn scaled(&self, c: &S) -> Result<Self> {
        if *c <= S::zero() {
            return Err(Error::domain("scale factor must be positive"));
        }
        Ok(FiniteMetricSpace {
            coords: None,
            dist: self
                .dist
                .iter()
                .map(|r| r.iter().map(|d| d.clone() * c.clone()).collect())
                .collect(),
            bound: self.bound.clone() * c.clone(),
        })
    }

    fn check_bound(&self) -> Result<()> {
        let max = max_entry(&self.dist);
        if max > self.bound {
            return Err(Error::invariant(
                "bound",
                format!("largest distance {max} exceeds declared bound {}", self.bound),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> &S {
        &self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<S>] {
        &self.dist
    }

    pub fn bound(&self) -> &S {
        &self.bound
    }

    pub fn coords(&self) -> Option<&[Vec<S>]> {
        self.coords.as_deref()
    }

    pub fn validate(&self, tol: &S) -> ValidationReport {
        validate_metric(&self.dist, tol).expect("square by construction")
    }

    pub(crate) fn check_indices(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&i| i >= self.len()) {
            Some(i) => Err(Error::structural(format!(
                "point index {i} out of range for {} points",
                self.len()
            ))),
            None => Ok(()),
        }
    }

    /// Largest pairwise distance within `subset`; 0 for a singleton.
    pub fn diameter(&self, subset: &[usize]) -> Result<S> {
        if subset.is_empty() {
            return Err(Error::domain("diameter of an empty set"));
        }
        self.check_indices(subset)?;
        let mut best = S::zero();
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                if self.dist[i][j] > best {
                    best = self.dist[i][j].clone();
                }
            }
        }
        Ok(best)
    }

    /// Greedy `eps`-separated set: scan points in index order and keep any
    /// point farther than `eps` from everything kept so far. Stops after
    /// `max_k` points.
    pub fn greedy_separated_set(&self, eps: &S, max_k: usize) -> Result<SeparatedSet<S>> {
        if *eps <= S::zero() {
            return Err(Error::domain("separation radius must be positive"));
        }
        let mut chosen: Vec<usize> = Vec::new();
        for x in 0..self.len() {
            if chosen.len() >= max_k {
                break;
            }
            if chosen.iter().all(|&c| self.dist[x][c] > *eps) {
                chosen.push(x);
            }
        }
        Ok(SeparatedSet {
            indices: chosen,
            eps: eps.clone(),
        })
    }

    /// Greedy cover by closed `eps`-balls centred at the greedy separated set.
    pub fn covering_report(&self, eps: &S) -> Result<CoverCertificate<S>> {
        let centers = self.greedy_separated_set(eps, usize::MAX)?.indices;
        let covered = (0..self.len()).all(|x| centers.iter().any(|&c| self.dist[x][c] <= *eps));
        Ok(CoverCertificate {
            centers,
            radius: eps.clone(),
            covered,
        })
    }

    /// Partition into cells of diameter at most `delta`.
    ///
    /// Cells are the nearest-centre (Voronoi) regions of a greedy
    /// `delta/2` cover; every point lies within `delta/2` of its centre, so
    /// each cell has diameter at most `delta`.
    pub fn build_partition(&self, delta: &S) -> Result<Partition<S>> {
        if *delta <= S::zero() {
            return Err(Error::domain("partition diameter must be positive"));
        }
        let radius = delta.clone() * crate::scalar::half();
        let centers = self.greedy_separated_set(&radius, usize::MAX)?.indices;
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
        for x in 0..self.len() {
            let mut best = 0;
            for (k, &c) in centers.iter().enumerate().skip(1) {
                if self.dist[x][c] < self.dist[x][centers[best]] {
                    best = k;
                }
            }
            cells[best].push(x);
        }
        Partition::new(self, cells, centers)
    }
}

fn max_entry<S: Scalar>(dist: &[Vec<S>]) -> S {
    dist.iter()
        .flatten()
        .fold(S::zero(), |acc, d| S::max_of(acc, d.clone()))
}

/// Pairwise disjoint cells covering every point, one representative per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<S> {
    cells: Vec<Vec<usize>>,
    reps: Vec<usize>,
    mesh: S,
}

impl<S: Scalar> Partition<S> {
    /// Checks disjointness, coverage and `reps[k] ∈ cells[k]`; computes the mesh.
    pub fn new(
        space: &FiniteMetricSpace<S>,
        cells: Vec<Vec<usize>>,
        reps: Vec<usize>,
    ) -> Result<Self> {
        if cells.len() != reps.len() {
            return Err(Error::structural("one representative per cell is required"));
        }
        let mut owner = vec![None; space.len()];
        for (k, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::invariant("partition", format!("cell {k} is empty")));
            }
            space.check_indices(cell)?;
            for &x in cell {
                if let Some(prev) = owner[x] {
                    return Err(Error::invariant(
                        "partition",
                        format!("point {x} lies in cells {prev} and {k}"),
                    ));
                }
                owner[x] = Some(k);
            }
            if !cell.contains(&reps[k]) {
                return Err(Error::invariant(
                    "partition",
                    format!("representative {} is not in cell {k}", reps[k]),
                ));
            }
        }
        if let Some(x) = owner.iter().position(Option::is_none) {
            return Err(Error::invariant(
                "partition",
                format!("point {x} is not covered"),
            ));
        }
        let mut mesh = S::zero();
        for cell in &cells {
            mesh = S::max_of(mesh, space.diameter(cell)?);
        }
        Ok(Partition { cells, reps, mesh })
    }

    pub fn singletons(space: &FiniteMetricSpace<S>) -> Self {
        Partition {
            cells: (0..space.len()).map(|i| vec![i]).collect(),
            reps: (0..space.len()).collect(),
            mesh: S::zero(),
        }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    /// Largest cell diameter.
    pub fn mesh(&self) -> &S {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Points with pairwise distances strictly greater than `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatedSet<S> {
    pub indices: Vec<usize>,
    pub eps: S,
}

impl<S: Scalar> SeparatedSet<S> {
    /// Validated construction from explicit indices.
    pub fn new(space: &FiniteMetricSpace<S>, indices: Vec<usize>, eps: S) -> Result<Self> {
        space.check_indices(&indices)?;
        for (a, &i) in indices.iter().enumerate() {
            for &j in &indices[a + 1..] {
                if space.dist(i, j) <= &eps {
                    return Err(Error::invariant(
                        "separation",
                        format!("points {i} and {j} are within {eps}"),
                    ));
                }
            }
        }
        Ok(SeparatedSet { indices, eps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverCertificate<S> {
    pub centers: Vec<usize>,
    pub radius: S,
    pub covered: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace::on_line(xs).unwrap()
    }

    #[test]
    fn validation_reports() {
        let ok = line(&[0.0, 1.0, 2.0]);
        assert!(ok.validate(&1e-9).is_valid());

        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        let rep = validate_metric(&asym, &1e-9).unwrap();
        assert!(matches!(rep.violations[0], Violation::Symmetry { i: 0, j: 1, .. }));

        let tri = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        let rep = validate_metric(&tri, &1e-9).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Triangle { i: 0, j: 1, k: 2, .. })));
        assert!(FiniteMetricSpace::from_matrix(tri, &1e-9).is_err());

        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(
            validate_metric(&ragged, &1e-9),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn bound_is_enforced() {
        let d = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        assert!(FiniteMetricSpace::new(d.clone(), 1.0, &1e-9).is_err());
        let s = FiniteMetricSpace::new(d, 3.0, &1e-9).unwrap();
        assert_eq!(*s.bound(), 3.0);
    }

    #[test]
    fn diameters() {
        let s = line(&[0.0, 1.0, 2.0, 7.0]);
        assert_eq!(s.diameter(&[3]).unwrap(), 0.0);
        assert_eq!(s.diameter(&[0, 1, 2]).unwrap(), 2.0);
        assert!(matches!(s.diameter(&[]), Err(Error::Domain(_))));
        assert!(matches!(s.diameter(&[9]), Err(Error::Structural(_))));
    }

    #[test]
    fn greedy_separated_examples() {
        let s = line(&[0.0, 0.5, 1.0]);
        assert_eq!(s.greedy_separated_set(&0.4, usize::MAX).unwrap().indices, vec![0, 1, 2]);
        let s = line(&[0.0, 0.1, 1.0]);
        assert_eq!(s.greedy_separated_set(&0.5, usize::MAX).unwrap().indices, vec![0, 2]);
        assert_eq!(s.greedy_separated_set(&5.0, usize::MAX).unwrap().indices, vec![0]);
        assert_eq!(s.greedy_separated_set(&0.01, 2).unwrap().indices, vec![0, 1]);
        assert!(s.greedy_separated_set(&0.0, 3).is_err());
        // strict inequality: distance exactly eps is not separated
        let s = line(&[0.0, 0.5]);
        assert_eq!(s.greedy_separated_set(&0.5, 9).unwrap().indices, vec![0]);
    }

    #[test]
    fn covers() {
        let one = line(&[3.0]);
        assert_eq!(one.covering_report(&0.1).unwrap().centers, vec![0]);
        let s = line(&[0.0, 0.5, 1.0]);
        let c = s.covering_report(&0.6).unwrap();
        assert_eq!(c.centers, vec![0, 2]);
        assert!(c.covered);
        let grid: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let c = line(&grid).covering_report(&0.25).unwrap();
        assert!(c.centers.len() >= 2);
        assert!(c.covered);
    }

    #[test]
    fn partitions() {
        let one = line(&[0.3]);
        let p = one.build_partition(&0.1).unwrap();
        assert_eq!(p.cells(), &[vec![0]]);
        assert_eq!(*p.mesh(), 0.0);

        let s = line(&[0.0, 0.4, 1.0]);
        // a delta/2 = 0.25 cover separates all three points
        let p = s.build_partition(&0.5).unwrap();
        assert_eq!(p.len(), 3);
        assert!(*p.mesh() <= 0.5);
        // with delta = 0.8 the 0.4 radius cover merges 0 and 0.4
        let p = s.build_partition(&0.8).unwrap();
        assert_eq!(p.cells(), &[vec![0, 1], vec![2]]);
        assert_eq!(p.reps(), &[0, 2]);
        assert!((p.mesh() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn partition_validation() {
        let s = line(&[0.0, 1.0, 2.0]);
        assert!(Partition::new(&s, vec![vec![0, 1], vec![1, 2]], vec![0, 2]).is_err());
        assert!(Partition::new(&s, vec![vec![0, 1]], vec![0]).is_err());
        assert!(Partition::new(&s, vec![vec![0, 1], vec![2]], vec![2, 2]).is_err());
        let p = Partition::new(&s, vec![vec![0, 1], vec![2]], vec![1, 2]).unwrap();
        assert_eq!(*p.mesh(), 1.0);
    }

    #[test]
    fn euclidean_coords() {
        let s = FiniteMetricSpace::from_coords(vec![vec![0.0, 0.0], vec![3.0, 4.0]], &Euclidean)
            .unwrap();
        assert_eq!(*s.dist(0, 1), 5.0);
        let c = FiniteMetricSpace::from_coords(vec![vec![0.0, 0.0], vec![3.0, 4.0]], &Chebyshev)
            .unwrap();
        assert_eq!(*c.dist(0, 1), 4.0);
    }
}
