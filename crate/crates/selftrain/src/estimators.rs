//! Uniform-kernel scoring: the integer-exact majority score, the matching
//! classification rule, a uniform-kernel density estimator, and a k-NN
//! baseline classifier.
//!
//! Scores live as integer count pairs end to end. Selection and tie
//! detection compare scores by integer cross-multiplication, so no
//! floating-point value ever participates in an argmax.

use std::cmp::Ordering;

use crate::datasets::{Label, LabeledSet};
use crate::error::{Error, Result};
use crate::geometry::{GridIndex, Point, PointSet};

/// Neighbor counts behind a majority score: `pos` label-1 neighbors out of
/// `tot` labeled neighbors in the open ball. The estimate itself is
/// `pos / tot`, defined only when `tot > 0`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Score {
    pub pos: u64,
    pub tot: u64,
}

impl Score {
    pub fn new(pos: u64, tot: u64) -> Result<Self> {
        if pos > tot {
            return Err(Error::InvalidInput(format!(
                "score numerator {pos} exceeds denominator {tot}"
            )));
        }
        Ok(Self { pos, tot })
    }

    /// `pos / tot` as a float, for reporting only.
    pub fn value(&self) -> Result<f64> {
        if self.tot == 0 {
            return Err(Error::NoNeighbors);
        }
        Ok(self.pos as f64 / self.tot as f64)
    }
}

/// An exact nonnegative rational, ordered by cross-multiplication.
#[derive(Copy, Clone, Debug)]
pub struct Extremality {
    num: u64,
    den: u64,
}

impl Extremality {
    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Extremality {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Extremality {}

impl PartialOrd for Extremality {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Extremality {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

/// `max(pos, tot - pos) / tot`: how one-sided the neighborhood vote is,
/// from 1/2 (even split) to 1 (unanimous).
pub fn extremality(s: &Score) -> Result<Extremality> {
    if s.tot == 0 {
        return Err(Error::NoNeighbors);
    }
    Ok(Extremality { num: s.pos.max(s.tot - s.pos), den: s.tot })
}

/// Majority label with ties to 1: `1` iff `2 * pos >= tot`.
pub fn classify_from_score(s: &Score) -> Result<Label> {
    if s.tot == 0 {
        return Err(Error::NoNeighbors);
    }
    Ok(if 2 * s.pos >= s.tot { Label::One } else { Label::Zero })
}

/// Majority score of `center` against a labeled set: counts label-1 and
/// total labeled points strictly within `h`. `idx` must be an index built
/// over `labeled.positions()`.
pub fn nw_score(labeled: &LabeledSet, center: &Point, h: f64, idx: &GridIndex) -> Result<Score> {
    if idx.len() != labeled.len() {
        return Err(Error::InvalidInput(format!(
            "index covers {} points but the labeled set has {}",
            idx.len(),
            labeled.len()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    let hits = idx.ball_query(center, h)?;
    let tot = hits.len() as u64;
    if tot == 0 {
        return Err(Error::NoNeighbors);
    }
    let pos = hits.iter().filter(|&&i| labeled.get(i).1 == Label::One).count() as u64;
    Ok(Score { pos, tot })
}

/// Lebesgue volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // omega_0 = 1, omega_1 = 2, omega_d = omega_{d-2} * 2*pi / d
    let mut even = 1.0; // omega_0
    let mut odd = 2.0; // omega_1
    if d == 0 {
        return even;
    }
    if d == 1 {
        return odd;
    }
    let mut k = 2;
    loop {
        if k % 2 == 0 {
            even *= 2.0 * std::f64::consts::PI / k as f64;
            if k == d {
                return even;
            }
        } else {
            odd *= 2.0 * std::f64::consts::PI / k as f64;
            if k == d {
                return odd;
            }
        }
        k += 1;
    }
}

/// A point density estimate (probability mass per unit volume).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub value: f64,
}

/// Uniform-kernel density estimate at `u`: the open-ball count divided by
/// `omega_d * l * h^d`.
pub fn kde_uniform(ps: &PointSet, u: &Point, h: f64) -> Result<DensityEstimate> {
    if ps.is_empty() {
        return Err(Error::InvalidInput("density estimate needs a nonempty sample".into()));
    }
    if u.dim() != ps.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: point {} vs sample {}",
            u.dim(),
            ps.dim()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    let h_sq = h * h;
    let count = ps.iter().filter(|p| p.dist_sq(u) < h_sq).count();
    let d = ps.dim();
    let value = count as f64 / (unit_ball_volume(d) * ps.len() as f64 * h.powi(d as i32));
    Ok(DensityEstimate { value })
}

/// Labels every pool point by the majority vote of its `k` nearest seed
/// points (Euclidean; distance ties go to the lower seed index, vote ties
/// to label 1).
pub fn knn_classify(seed: &LabeledSet, pool: &PointSet, k: usize) -> Result<Vec<Label>> {
    if seed.is_empty() {
        return Err(Error::InvalidInput("k-NN needs a nonempty seed set".into()));
    }
    if k == 0 || k > seed.len() {
        return Err(Error::InvalidInput(format!(
            "k must be in 1..={}, got {k}",
            seed.len()
        )));
    }
    if seed.dim() != pool.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: seed {} vs pool {}",
            seed.dim(),
            pool.dim()
        )));
    }
    let mut out = Vec::with_capacity(pool.len());
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(seed.len());
    for p in pool.iter() {
        dists.clear();
        dists.extend(seed.iter().enumerate().map(|(i, (s, _))| (p.dist_sq(s), i)));
        dists.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1))
        });
        let ones = dists[..k].iter().filter(|&&(_, i)| seed.get(i).1 == Label::One).count();
        out.push(if 2 * ones >= k { Label::One } else { Label::Zero });
    }
    Ok(out)
}
