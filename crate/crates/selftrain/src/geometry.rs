//! Points, the Euclidean metric, a fixed-radius neighbor index, and the
//! Hausdorff distance between finite point sets.
//!
//! All neighborhood queries use OPEN balls (strict `<`). Equality at the
//! radius is resolved by the strict comparison, never by a tolerance.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A point in `R^d`, `d >= 1`, with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("point must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "point has non-finite coordinate: {coords:?}"
            )));
        }
        Ok(Self { coords })
    }

    /// Convenience constructor for the 2-d case.
    ///
    /// # Panics
    /// Panics on non-finite coordinates.
    pub fn xy(x: f64, y: f64) -> Self {
        Self::new(vec![x, y]).expect("finite coordinates")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Supremum-norm distance. Used only by the sine-mixture generator's
    /// region split; ball queries are always Euclidean.
    pub fn sup_dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A finite set of points of homogeneous dimension, indexable by the
/// position `0..len` they were inserted at.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    dim: usize,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point set must be nonempty".into()));
        }
        let dim = points[0].dim();
        Self::with_dim(points, dim)
    }

    /// Builds a set of known dimension; the set may be empty (e.g. after
    /// pruning removed every point).
    pub fn with_dim(points: Vec<Point>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::InvalidInput(format!(
                "mixed dimensions: expected {dim}, found {}",
                p.dim()
            )));
        }
        Ok(Self { points, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }
}

/// Bucket index over a point set serving fixed-radius ball queries.
///
/// Bucket coordinate of a point is `floor((coord - origin) / cell_size)`
/// per dimension, with the origin at the component-wise minimum of the
/// indexed set, so the index is rebuild-stable. Immutable after
/// construction and safe for concurrent read-only queries.
#[derive(Clone, Debug)]
pub struct GridIndex {
    cell_size: f64,
    origin: Vec<f64>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    points: PointSet,
}

pub fn build_index(ps: &PointSet, cell_size: f64) -> Result<GridIndex> {
    if ps.is_empty() {
        return Err(Error::InvalidInput("cannot index an empty point set".into()));
    }
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cell_size must be a positive finite real, got {cell_size}"
        )));
    }
    let dim = ps.dim();
    let mut origin = vec![f64::INFINITY; dim];
    for p in ps.iter() {
        for (o, &c) in origin.iter_mut().zip(p.coords()) {
            *o = o.min(c);
        }
    }
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in ps.iter().enumerate() {
        let key = cell_key(p.coords(), &origin, cell_size);
        buckets.entry(key).or_default().push(i);
    }
    Ok(GridIndex {
        cell_size,
        origin,
        buckets,
        points: ps.clone(),
    })
}

fn cell_key(coords: &[f64], origin: &[f64], cell_size: f64) -> Vec<i64> {
    coords
        .iter()
        .zip(origin)
        .map(|(&c, &o)| ((c - o) / cell_size).floor() as i64)
        .collect()
}

impl GridIndex {
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Indices of the points strictly within distance `r` of `center`
    /// (open ball), sorted ascending.
    ///
    /// Radii larger than the cell size are served by scanning as many
    /// bucket shells as needed; the result is always exactly the
    /// brute-force answer.
    pub fn ball_query(&self, center: &Point, r: f64) -> Result<Vec<usize>> {
        if center.dim() != self.points.dim() {
            return Err(Error::InvalidInput(format!(
                "query dimension {} does not match index dimension {}",
                center.dim(),
                self.points.dim()
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput(format!(
                "radius must be a positive finite real, got {r}"
            )));
        }
        let dim = self.points.dim();
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        for (&c, &o) in center.coords().iter().zip(&self.origin) {
            lo.push(((c - r - o) / self.cell_size).floor() as i64);
            hi.push(((c + r - o) / self.cell_size).floor() as i64);
        }
        // Number of cells covering the ball's bounding box; when that
        // exceeds the number of occupied buckets (high dimension or a
        // huge radius) it is cheaper to walk the buckets instead.
        let mut span: u128 = 1;
        for (l, h) in lo.iter().zip(&hi) {
            span = span.saturating_mul((h - l + 1) as u128);
            if span > self.buckets.len() as u128 {
                break;
            }
        }
        let r_sq = r * r;
        let mut out = Vec::new();
        if span <= self.buckets.len() as u128 {
            let mut key = lo.clone();
            loop {
                if let Some(ids) = self.buckets.get(&key) {
                    for &i in ids {
                        if self.points.get(i).dist_sq(center) < r_sq {
                            out.push(i);
                        }
                    }
                }
                // odometer increment over the cell box
                let mut d = 0;
                loop {
                    if d == dim {
                        break;
                    }
                    key[d] += 1;
                    if key[d] <= hi[d] {
                        break;
                    }
                    key[d] = lo[d];
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
        } else {
            for (key, ids) in &self.buckets {
                if key.iter().zip(lo.iter().zip(&hi)).all(|(k, (l, h))| l <= k && k <= h) {
                    for &i in ids {
                        if self.points.get(i).dist_sq(center) < r_sq {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// `#{ i : ||p_i - center|| < r }`.
    pub fn ball_count(&self, center: &Point, r: f64) -> Result<usize> {
        Ok(self.ball_query(center, r)?.len())
    }
}

/// Hausdorff distance between two nonempty finite point sets:
/// `max(sup_{x in a} d(x, b), sup_{y in b} d(y, a))`.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput(
            "hausdorff distance requires nonempty sets".into(),
        ));
    }
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(directed_sup_inf(a, b).max(directed_sup_inf(b, a)))
}

fn directed_sup_inf(from: &PointSet, to: &PointSet) -> f64 {
    let mut worst = 0.0_f64;
    for p in from.iter() {
        let mut best = f64::INFINITY;
        for q in to.iter() {
            let d = p.dist_sq(q);
            if d < best {
                best = d;
            }
        }
        worst = worst.max(best);
    }
    worst.sqrt()
}
