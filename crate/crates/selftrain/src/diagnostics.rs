//! Runnable checks of the assumptions the classifier leans on: region
//! covering by half-bandwidth balls, the density valley between class
//! interiors and the class border, seed-set sanity, and the audit that a
//! run's first oracle disagreement sits in the boundary collar.
//!
//! Regions are supplied as predicates over points; probe grids discretize
//! them. All reports serialize to JSON.

use serde::Serialize;

use crate::datasets::{Label, SplitSample};
use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::geometry::{build_index, Point, PointSet};

/// Result of a covering probe: `holds` iff every probe point lies
/// strictly within `h/2` of some member; `worst_gap` is the largest
/// probe-to-member distance seen.
#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    pub holds: bool,
    pub worst_gap: f64,
}

/// Result of a valley probe: `margin` is the minimum ball count over the
/// interior probes minus the maximum over the border probes.
#[derive(Clone, Debug, Serialize)]
pub struct ValleyReport {
    pub holds: bool,
    pub margin: i64,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SeedViolation {
    pub seed_index: usize,
    pub expected: u8,
    pub actual: u8,
}

/// Seed-set sanity: every seed label must agree with the oracle and both
/// classes must be represented.
#[derive(Clone, Debug, Serialize)]
pub struct SeedReport {
    pub ok: bool,
    pub violations: Vec<SeedViolation>,
    pub missing_classes: Vec<u8>,
}

/// Location audit of the first event whose label disagrees with the
/// oracle. `in_boundary` says whether that point lies strictly within `h`
/// of the region where the oracle assigns the opposite label.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    pub first_bad_index: Option<usize>,
    pub assigned: Option<u8>,
    pub in_boundary: Option<bool>,
}

/// Grid points of spacing `step` inside the box `[lower, upper]` that
/// satisfy the predicate.
pub fn probe_grid<F>(lower: &[f64], upper: &[f64], step: f64, pred: F) -> Result<PointSet>
where
    F: Fn(&Point) -> bool,
{
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(Error::InvalidInput("probe box corners must have equal dimension".into()));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!("probe step must be positive, got {step}")));
    }
    let dim = lower.len();
    let counts: Vec<usize> = lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| {
            if hi < lo {
                0
            } else {
                ((hi - lo) / step + 1e-9).floor() as usize + 1
            }
        })
        .collect();
    if counts.contains(&0) {
        return Err(Error::InvalidInput("probe box is empty".into()));
    }
    let mut probes = Vec::new();
    let mut ticks = vec![0usize; dim];
    loop {
        let coords: Vec<f64> = ticks
            .iter()
            .zip(lower)
            .map(|(&k, &lo)| lo + k as f64 * step)
            .collect();
        let p = Point::new(coords)?;
        if pred(&p) {
            probes.push(p);
        }
        let mut d = 0;
        loop {
            if d == dim {
                break;
            }
            ticks[d] += 1;
            if ticks[d] < counts[d] {
                break;
            }
            ticks[d] = 0;
            d += 1;
        }
        if d == dim {
            break;
        }
    }
    if probes.is_empty() {
        return Err(Error::EmptyRegion("no probe point satisfies the region predicate".into()));
    }
    PointSet::new(probes)
}

/// Probes whether the region is covered by open `h/2`-balls centered at
/// the members. The region is discretized by a grid of spacing
/// `probe_step` (at most `h/4`) over `[lower, upper]`, filtered by
/// `region`.
pub fn covering_check<F>(
    region_members: &PointSet,
    region: F,
    h: f64,
    probe_step: f64,
    lower: &[f64],
    upper: &[f64],
) -> Result<CoveringReport>
where
    F: Fn(&Point) -> bool,
{
    if region_members.is_empty() {
        return Err(Error::InvalidInput("covering check needs nonempty members".into()));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    if probe_step.is_nan() || probe_step > h / 4.0 {
        return Err(Error::InvalidInput(format!(
            "probe step {probe_step} must be at most h/4 = {}",
            h / 4.0
        )));
    }
    let probes = probe_grid(lower, upper, probe_step, region)?;
    let mut worst_gap = 0.0_f64;
    for probe in probes.iter() {
        let mut best = f64::INFINITY;
        for m in region_members.iter() {
            best = best.min(probe.dist_sq(m));
        }
        worst_gap = worst_gap.max(best);
    }
    let worst_gap = worst_gap.sqrt();
    Ok(CoveringReport { holds: worst_gap < h / 2.0, worst_gap })
}

/// Compares open-ball pool counts between interior probes (`probes_a`)
/// and border probes (`probes_b`): holds iff the smallest interior count
/// is at least the largest border count.
pub fn valley_check(
    pool: &PointSet,
    probes_a: &PointSet,
    probes_b: &PointSet,
    h: f64,
) -> Result<ValleyReport> {
    if probes_a.is_empty() || probes_b.is_empty() {
        return Err(Error::EmptyRegion("valley check needs nonempty probe sets".into()));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    let idx = build_index(pool, h)?;
    let mut min_a = u64::MAX;
    for a in probes_a.iter() {
        min_a = min_a.min(idx.ball_count(a, h)? as u64);
    }
    let mut max_b = 0u64;
    for b in probes_b.iter() {
        max_b = max_b.max(idx.ball_count(b, h)? as u64);
    }
    let margin = min_a as i64 - max_b as i64;
    Ok(ValleyReport { holds: margin >= 0, margin })
}

/// Checks the seed set against an oracle: lists mislabeled seeds and any
/// class with no seed at all.
pub fn seed_check<F>(sample: &SplitSample, oracle: F) -> Result<SeedReport>
where
    F: Fn(&Point) -> Result<Label>,
{
    let mut violations = Vec::new();
    let mut have = [false, false];
    for (i, (p, y)) in sample.seed.iter().enumerate() {
        have[y.as_u8() as usize] = true;
        let expected = oracle(p)?;
        if expected != y {
            violations.push(SeedViolation {
                seed_index: i,
                expected: expected.as_u8(),
                actual: y.as_u8(),
            });
        }
    }
    let missing_classes: Vec<u8> =
        [0u8, 1u8].into_iter().filter(|&c| !have[c as usize]).collect();
    let ok = violations.is_empty() && missing_classes.is_empty();
    Ok(SeedReport { ok, violations, missing_classes })
}

/// Finds the first regular event whose label disagrees with the oracle
/// and tests whether its point lies strictly within `h` of the opposite
/// class region, by densely probing the ball and asking the oracle.
/// Fallback-labeled events are not audited: their labels do not come from
/// the majority rule.
pub fn boundary_audit<F, S>(
    trace: &Trace,
    sample: &SplitSample,
    oracle: F,
    support: S,
    h: f64,
) -> Result<BoundaryReport>
where
    F: Fn(&Point) -> Result<Label>,
    S: Fn(&Point) -> bool,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    let mut first_bad = None;
    for e in trace.events.iter().filter(|e| e.step.is_some()) {
        if oracle(sample.pool.get(e.pool_index))? != e.label {
            first_bad = Some(e);
            break;
        }
    }
    let Some(bad) = first_bad else {
        return Ok(BoundaryReport { first_bad_index: None, assigned: None, in_boundary: None });
    };
    let p = sample.pool.get(bad.pool_index);
    let want = bad.label.flip();
    let dim = p.dim();
    let mut hit = false;
    if dim <= 3 {
        let step = if dim <= 2 { h / 50.0 } else { h / 20.0 };
        let lower: Vec<f64> = p.coords().iter().map(|c| c - h).collect();
        let upper: Vec<f64> = p.coords().iter().map(|c| c + h).collect();
        let probes = probe_grid(&lower, &upper, step, |z| z.dist(p) < h)?;
        hit = probes
            .iter()
            .filter(|z| support(z))
            .any(|z| oracle(z).map(|y| y == want).unwrap_or(false));
    } else {
        // too many grid corners in high dimension; use a fixed seeded
        // sample of the ball instead
        let mut rng = crate::datasets::seeded_rng(0);
        use rand::Rng;
        let mut tried = 0;
        while tried < 20_000 {
            let coords: Vec<f64> = p
                .coords()
                .iter()
                .map(|c| c + (rng.gen::<f64>() * 2.0 - 1.0) * h)
                .collect();
            let z = Point::new(coords)?;
            if z.dist(p) >= h {
                continue;
            }
            tried += 1;
            if support(&z) && oracle(&z)? == want {
                hit = true;
                break;
            }
        }
    }
    Ok(BoundaryReport {
        first_bad_index: Some(bad.pool_index),
        assigned: Some(bad.label.as_u8()),
        in_boundary: Some(hit),
    })
}
