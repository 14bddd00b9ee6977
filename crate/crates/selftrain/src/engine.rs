//! The self-training engine: grow the labeled set one best-classifiable
//! point (or one batch of them) at a time, plus the grid-collapsed fast
//! variant.
//!
//! A point is a candidate while it is unlabeled and has at least one
//! labeled point strictly within the bandwidth. Selection maximizes the
//! vote extremality `max(pos, tot - pos) / tot` (exact rationals), breaks
//! ties by the number of pool points in the candidate's ball, and breaks
//! remaining ties by the lowest pool index. Labeling a point can only
//! change the scores of unlabeled points within one bandwidth of it, so
//! the engine keeps candidates in a priority heap with lazy invalidation
//! and rescores only that neighborhood; traces are bit-identical to a
//! full rescan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;

use crate::datasets::{Label, SplitSample};
use crate::error::{Error, Result};
use crate::estimators::{classify_from_score, extremality, Extremality, Score};
use crate::geometry::{build_index, GridIndex, Point, PointSet};

/// Whether a step labels a single point or every tied maximizer.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Variant {
    Sequential,
    Batch,
}

/// What to do with points that are still unlabeled when no candidate
/// remains. Finite samples can stall even though the asymptotic theory
/// rules it out, so the default reports instead of guessing.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Fallback {
    /// Leave them in `Trace::unclassified`.
    None,
    /// Give each the label of its nearest already-labeled point.
    NearestNeighbor,
}

/// Run parameters. `rng_seed` is reserved for forward compatibility; the
/// engine itself is deterministic.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Bandwidth: radius of the open ball used for scores and candidacy.
    pub h: f64,
    pub variant: Variant,
    pub fallback: Fallback,
    /// When present, collapse the pool onto an N-per-axis grid and run on
    /// the occupied cell corners.
    pub grid_n: Option<usize>,
    pub rng_seed: u64,
}

impl RunConfig {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            variant: Variant::Sequential,
            fallback: Fallback::None,
            grid_n: None,
            rng_seed: 0,
        }
    }
}

/// One labeling decision. `step` is `None` for points labeled by the
/// stall fallback (the infinity marker in serialized form).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub pool_index: usize,
    pub label: Label,
    pub step: Option<u32>,
    pub score: Score,
    pub stalled: bool,
}

/// Tie-break bookkeeping for a run.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Number of algorithm steps taken (batch rounds count once).
    pub steps: u32,
    /// Steps where more than one candidate attained the maximal
    /// extremality, so the ball-count tie-break was consulted.
    pub extremality_ties: u64,
    /// Sequential steps where the ball count also tied and the lowest
    /// pool index decided.
    pub index_ties: u64,
}

/// Ordered record of a run. Events and `unclassified` together partition
/// the pool indices; regular events carry nondecreasing step numbers and
/// precede fallback events.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub unclassified: Vec<usize>,
    pub stats: RunStats,
    pool_len: usize,
}

impl Trace {
    pub fn pool_len(&self) -> usize {
        self.pool_len
    }

    /// Assigned label per pool index; `None` where unclassified.
    pub fn labels(&self) -> Vec<Option<Label>> {
        let mut out = vec![None; self.pool_len];
        for e in &self.events {
            out[e.pool_index] = Some(e.label);
        }
        out
    }

    /// Points affected by a stall: fallback-labeled plus unclassified.
    pub fn stalled_count(&self) -> usize {
        self.events.iter().filter(|e| e.stalled).count() + self.unclassified.len()
    }

    /// CSV serialization: `pool_index,label,step,score_pos,score_tot,stalled`.
    /// Fallback-labeled rows write `inf` for the step; unclassified rows
    /// have empty label/step/score fields and `stalled` set.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("pool_index,label,step,score_pos,score_tot,stalled\n");
        for e in &self.events {
            let step = match e.step {
                Some(s) => s.to_string(),
                None => "inf".to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                e.pool_index,
                e.label.as_u8(),
                step,
                e.score.pos,
                e.score.tot,
                u8::from(e.stalled)
            )
            .expect("string write");
        }
        for &i in &self.unclassified {
            writeln!(out, "{i},,,,,1").expect("string write");
        }
        out
    }
}

#[derive(Clone, Debug)]
struct HeapEntry {
    ext: Extremality,
    ball: u64,
    index: usize,
    version: u32,
}

impl HeapEntry {
    fn same_key(&self, other: &Self) -> bool {
        self.ext == other.ext && self.ball == other.ball
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ext
            .cmp(&other.ext)
            .then_with(|| self.ball.cmp(&other.ball))
            .then_with(|| other.index.cmp(&self.index))
    }
}

struct Engine<'a> {
    pool: &'a PointSet,
    h: f64,
    pool_index: GridIndex,
    labeled: Vec<Option<Label>>,
    pos: Vec<u64>,
    tot: Vec<u64>,
    ball: Vec<u64>,
    version: Vec<u32>,
    heap: BinaryHeap<HeapEntry>,
    remaining: usize,
}

impl<'a> Engine<'a> {
    fn new(sample: &'a SplitSample, h: f64, ball_override: Option<Vec<u64>>) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be a positive finite real, got {h}"
            )));
        }
        let pool = &sample.pool;
        let l = pool.len();
        let pool_index = build_index(pool, h)?;
        let ball = match ball_override {
            Some(b) => {
                if b.len() != l {
                    return Err(Error::InvalidInput(format!(
                        "ball-count override has length {} but the pool has {l}",
                        b.len()
                    )));
                }
                b
            }
            None => {
                let mut ball = Vec::with_capacity(l);
                for i in 0..l {
                    ball.push(pool_index.ball_count(pool.get(i), h)? as u64);
                }
                ball
            }
        };
        let mut pos = vec![0u64; l];
        let mut tot = vec![0u64; l];
        for (s, y) in sample.seed.iter() {
            for j in pool_index.ball_query(s, h)? {
                tot[j] += 1;
                pos[j] += u64::from(y.as_u8());
            }
        }
        let version = vec![0u32; l];
        let mut heap = BinaryHeap::with_capacity(l);
        for j in 0..l {
            if tot[j] > 0 {
                heap.push(HeapEntry {
                    ext: extremality(&Score { pos: pos[j], tot: tot[j] })?,
                    ball: ball[j],
                    index: j,
                    version: 0,
                });
            }
        }
        Ok(Self {
            pool,
            h,
            pool_index,
            labeled: vec![None; l],
            pos,
            tot,
            ball,
            version,
            heap,
            remaining: l,
        })
    }

    fn is_live(&self, e: &HeapEntry) -> bool {
        self.labeled[e.index].is_none() && self.version[e.index] == e.version
    }

    /// Drops stale entries until the top is live or the heap is empty.
    fn clean_top(&mut self) {
        while let Some(top) = self.heap.peek() {
            if self.is_live(top) {
                return;
            }
            self.heap.pop();
        }
    }

    fn pop_best(&mut self) -> Option<HeapEntry> {
        self.clean_top();
        self.heap.pop()
    }

    fn score_of(&self, i: usize) -> Score {
        Score { pos: self.pos[i], tot: self.tot[i] }
    }

    /// Rescores the unlabeled points within one bandwidth of a freshly
    /// labeled point.
    fn absorb(&mut self, i: usize, y: Label) -> Result<()> {
        for j in self.pool_index.ball_query(self.pool.get(i), self.h)? {
            if self.labeled[j].is_none() {
                self.tot[j] += 1;
                self.pos[j] += u64::from(y.as_u8());
                self.version[j] += 1;
                self.heap.push(HeapEntry {
                    ext: extremality(&self.score_of(j))?,
                    ball: self.ball[j],
                    index: j,
                    version: self.version[j],
                });
            }
        }
        Ok(())
    }
}

fn run_core(
    sample: &SplitSample,
    cfg: &RunConfig,
    variant: Variant,
    ball_override: Option<Vec<u64>>,
) -> Result<Trace> {
    let mut engine = Engine::new(sample, cfg.h, ball_override)?;
    let l = sample.pool.len();
    let mut events: Vec<TraceEvent> = Vec::with_capacity(l);
    let mut stats = RunStats::default();

    while engine.remaining > 0 {
        let Some(best) = engine.pop_best() else {
            break; // stall: no unlabeled point within h of the labeled set
        };
        stats.steps += 1;
        let step = Some(stats.steps);
        match variant {
            Variant::Sequential => {
                engine.clean_top();
                if let Some(next) = engine.heap.peek() {
                    if next.ext == best.ext {
                        stats.extremality_ties += 1;
                        if next.ball == best.ball {
                            stats.index_ties += 1;
                        }
                    }
                }
                let score = engine.score_of(best.index);
                let label = classify_from_score(&score)?;
                events.push(TraceEvent {
                    pool_index: best.index,
                    label,
                    step,
                    score,
                    stalled: false,
                });
                engine.labeled[best.index] = Some(label);
                engine.remaining -= 1;
                engine.absorb(best.index, label)?;
            }
            Variant::Batch => {
                // gather every candidate tied with the maximum on both
                // the extremality and the ball count
                let mut gamma = vec![best];
                let mut wider_tie = false;
                loop {
                    engine.clean_top();
                    match engine.heap.peek() {
                        Some(next) if next.same_key(&gamma[0]) => {
                            let e = engine.heap.pop().expect("peeked entry");
                            gamma.push(e);
                        }
                        Some(next) if next.ext == gamma[0].ext => {
                            wider_tie = true;
                            break;
                        }
                        _ => break,
                    }
                }
                if gamma.len() > 1 || wider_tie {
                    stats.extremality_ties += 1;
                }
                // all labels come from scores taken before any member is
                // absorbed
                let members: Vec<(usize, Score, Label)> = gamma
                    .iter()
                    .map(|e| {
                        let score = engine.score_of(e.index);
                        let label = classify_from_score(&score)?;
                        Ok((e.index, score, label))
                    })
                    .collect::<Result<_>>()?;
                for &(i, score, label) in &members {
                    events.push(TraceEvent { pool_index: i, label, step, score, stalled: false });
                    engine.labeled[i] = Some(label);
                    engine.remaining -= 1;
                }
                for &(i, _, label) in &members {
                    engine.absorb(i, label)?;
                }
            }
        }
    }

    let mut unclassified: Vec<usize> =
        (0..l).filter(|&i| engine.labeled[i].is_none()).collect();
    if !unclassified.is_empty() && cfg.fallback == Fallback::NearestNeighbor {
        // 1-NN against the labeled set frozen at the stall: seeds first,
        // then regular events in labeling order; the earliest added wins
        // distance ties.
        let frozen: Vec<(&Point, Label)> = sample
            .seed
            .iter()
            .chain(events.iter().map(|e| (sample.pool.get(e.pool_index), e.label)))
            .collect();
        for &i in &unclassified {
            let p = sample.pool.get(i);
            let mut best_d = f64::INFINITY;
            let mut best_y = frozen[0].1;
            for &(q, y) in &frozen {
                let d = p.dist_sq(q);
                if d < best_d {
                    best_d = d;
                    best_y = y;
                }
            }
            events.push(TraceEvent {
                pool_index: i,
                label: best_y,
                step: None,
                score: Score { pos: u64::from(best_y.as_u8()), tot: 1 },
                stalled: true,
            });
        }
        unclassified.clear();
    }

    Ok(Trace { events, unclassified, stats, pool_len: l })
}

/// Sequential run: one point per step. Ignores `cfg.grid_n`.
pub fn run_sequential(sample: &SplitSample, cfg: &RunConfig) -> Result<Trace> {
    run_core(sample, cfg, Variant::Sequential, None)
}

/// Batch run: all double-tied maximizers per step, labeled with scores
/// computed before any of them is absorbed. Ignores `cfg.grid_n`.
pub fn run_batch(sample: &SplitSample, cfg: &RunConfig) -> Result<Trace> {
    run_core(sample, cfg, Variant::Batch, None)
}

/// Dispatches on the configuration: grid-collapsed when `grid_n` is set,
/// otherwise the configured variant on the raw pool.
pub fn run(sample: &SplitSample, cfg: &RunConfig) -> Result<Trace> {
    if cfg.grid_n.is_some() {
        run_fast(sample, cfg)
    } else {
        run_core(sample, cfg, cfg.variant, None)
    }
}

/// An occupied grid cell: its corner point and the pool indices inside.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub representative: Point,
    pub members: Vec<usize>,
}

/// The pool collapsed onto an N-per-axis grid over `(a, b)^d`. Cells are
/// the half-open boxes `prod (a_i, a_{i+1}]`, keyed by their integer
/// coordinates; the representative is the cell's lower corner, a grid
/// point.
#[derive(Clone, Debug)]
pub struct GridProjection {
    pub cells: BTreeMap<Vec<i64>, GridCell>,
    pub n_per_axis: usize,
    pub bounds: (f64, f64),
}

/// Assigns every pool point to its grid cell. `bounds` must strictly
/// contain all coordinates; when omitted it is the global coordinate
/// range expanded by `1e-9`.
pub fn grid_project(
    pool: &PointSet,
    n_per_axis: usize,
    bounds: Option<(f64, f64)>,
) -> Result<GridProjection> {
    if n_per_axis < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 cells per axis, got {n_per_axis}"
        )));
    }
    if pool.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty pool".into()));
    }
    let (a, b) = match bounds {
        Some(ab) => ab,
        None => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in pool.iter() {
                for &c in p.coords() {
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
            (lo - 1e-9, hi + 1e-9)
        }
    };
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::InvalidInput(format!("invalid bounds ({a}, {b})")));
    }
    let n = n_per_axis as i64;
    let corner = |i: i64| -> f64 {
        if i >= n {
            b
        } else {
            a + i as f64 * (b - a) / n_per_axis as f64
        }
    };
    let assign = |c: f64| -> Result<i64> {
        if c <= a || c >= b {
            return Err(Error::InvalidInput(format!(
                "coordinate {c} outside grid bounds ({a}, {b})"
            )));
        }
        let t = (c - a) / (b - a) * n_per_axis as f64;
        let mut i = (t.floor() as i64).clamp(0, n - 1);
        // half-open cells (corner(i), corner(i+1)]; nudge against
        // floating-point rounding of the corner formula
        while i > 0 && corner(i) >= c {
            i -= 1;
        }
        while i < n - 1 && corner(i + 1) < c {
            i += 1;
        }
        debug_assert!(corner(i) < c && c <= corner(i + 1));
        Ok(i)
    };
    let mut cells: BTreeMap<Vec<i64>, GridCell> = BTreeMap::new();
    for (idx, p) in pool.iter().enumerate() {
        let key: Vec<i64> = p.coords().iter().map(|&c| assign(c)).collect::<Result<_>>()?;
        let cell = cells.entry(key.clone()).or_insert_with(|| GridCell {
            representative: Point::new(key.iter().map(|&i| corner(i)).collect())
                .expect("grid corners are finite"),
            members: Vec::new(),
        });
        cell.members.push(idx);
    }
    Ok(GridProjection { cells, n_per_axis, bounds: (a, b) })
}

/// Grid-collapsed run: project the pool, run the configured variant on
/// the occupied cell corners, then propagate each corner's label, step
/// and score to all members of its cell.
///
/// Scores and candidacy work over the representatives, but the tie-break
/// ball count stays `#{X_l in B(., h)}` over the original pool, so dense
/// cells keep their selection priority after the collapse.
pub fn run_fast(sample: &SplitSample, cfg: &RunConfig) -> Result<Trace> {
    let n = cfg.grid_n.ok_or_else(|| {
        Error::InvalidInput("run_fast requires grid_n in the run configuration".into())
    })?;
    let proj = grid_project(&sample.pool, n, None)?;
    let reps: Vec<Point> = proj.cells.values().map(|c| c.representative.clone()).collect();
    let members: Vec<Vec<usize>> = proj.cells.values().map(|c| c.members.clone()).collect();
    let pool_index = build_index(&sample.pool, cfg.h)?;
    let ball: Vec<u64> = reps
        .iter()
        .map(|r| Ok(pool_index.ball_count(r, cfg.h)? as u64))
        .collect::<Result<_>>()?;
    let rep_sample = SplitSample::new(sample.seed.clone(), PointSet::new(reps)?, None)?;
    let rep_cfg = RunConfig { grid_n: None, ..cfg.clone() };
    let rep_trace = run_core(&rep_sample, &rep_cfg, cfg.variant, Some(ball))?;

    let mut events = Vec::with_capacity(sample.pool.len());
    for e in &rep_trace.events {
        for &m in &members[e.pool_index] {
            events.push(TraceEvent { pool_index: m, ..e.clone() });
        }
    }
    let mut unclassified: Vec<usize> = rep_trace
        .unclassified
        .iter()
        .flat_map(|&r| members[r].iter().copied())
        .collect();
    unclassified.sort_unstable();
    Ok(Trace { events, unclassified, stats: rep_trace.stats, pool_len: sample.pool.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{seeded_rng, LabeledSet};
    use rand::Rng;

    fn sample(seed: Vec<(Point, Label)>, pool: Vec<Point>) -> SplitSample {
        SplitSample::new(LabeledSet::new(seed).unwrap(), PointSet::new(pool).unwrap(), None)
            .unwrap()
    }

    fn two_cluster_sample(rng_seed: u64, per_cluster: usize, h: f64) -> (SplitSample, Vec<Label>) {
        let centers = [(0.0, 0.0, Label::Zero), (5.0, 5.0, Label::One)];
        let mut rng = seeded_rng(rng_seed);
        let mut pts = Vec::new();
        let mut hidden = Vec::new();
        for &(cx, cy, y) in &centers {
            // redraw the cluster until its h-ball graph, seeded at the
            // center, is connected, so the covering premise holds
            loop {
                let cluster: Vec<Point> = (0..per_cluster)
                    .map(|_| loop {
                        let dx = rng.gen::<f64>() - 0.5;
                        let dy = rng.gen::<f64>() - 0.5;
                        if dx * dx + dy * dy < 0.25 {
                            break Point::xy(cx + dx, cy + dy);
                        }
                    })
                    .collect();
                let mut nodes = vec![Point::xy(cx, cy)];
                nodes.extend(cluster.iter().cloned());
                let mut seen = vec![false; nodes.len()];
                seen[0] = true;
                let mut stack = vec![0usize];
                while let Some(i) = stack.pop() {
                    for j in 0..nodes.len() {
                        if !seen[j] && nodes[i].dist(&nodes[j]) < h {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                if seen.iter().all(|&s| s) {
                    pts.extend(cluster);
                    hidden.extend(std::iter::repeat_n(y, per_cluster));
                    break;
                }
            }
        }
        let seed = vec![
            (Point::xy(0.0, 0.0), Label::Zero),
            (Point::xy(5.0, 5.0), Label::One),
        ];
        (
            SplitSample::new(
                LabeledSet::new(seed).unwrap(),
                PointSet::new(pts).unwrap(),
                Some(hidden.clone()),
            )
            .unwrap(),
            hidden,
        )
    }

    #[test]
    fn single_candidate_gets_its_neighbor_label() {
        let s = sample(
            vec![
                (Point::xy(0.0, 0.0), Label::Zero),
                (Point::xy(10.0, 10.0), Label::One),
            ],
            vec![Point::xy(0.1, 0.0)],
        );
        let trace = run_sequential(&s, &RunConfig::new(0.5)).unwrap();
        assert_eq!(trace.events.len(), 1);
        let e = &trace.events[0];
        assert_eq!(e.pool_index, 0);
        assert_eq!(e.label, Label::Zero);
        assert_eq!(e.step, Some(1));
        assert_eq!(e.score, Score { pos: 0, tot: 1 });
        assert!(!e.stalled);
        assert!(trace.unclassified.is_empty());
    }

    #[test]
    fn unreachable_point_stalls() {
        let s = sample(vec![(Point::xy(0.0, 0.0), Label::Zero)], vec![Point::xy(5.0, 5.0)]);
        let trace = run_sequential(&s, &RunConfig::new(0.5)).unwrap();
        assert!(trace.events.is_empty());
        assert_eq!(trace.unclassified, vec![0]);
        assert_eq!(trace.stalled_count(), 1);

        let cfg = RunConfig { fallback: Fallback::NearestNeighbor, ..RunConfig::new(0.5) };
        let trace = run_sequential(&s, &cfg).unwrap();
        assert!(trace.unclassified.is_empty());
        let e = &trace.events[0];
        assert_eq!(e.label, Label::Zero);
        assert_eq!(e.step, None);
        assert!(e.stalled);
        assert_eq!(e.score, Score { pos: 0, tot: 1 });
    }

    #[test]
    fn separated_clusters_classify_without_errors() {
        let (s, hidden) = two_cluster_sample(123, 30, 0.4);
        let trace = run_sequential(&s, &RunConfig::new(0.4)).unwrap();
        assert!(trace.unclassified.is_empty());
        for e in &trace.events {
            assert_eq!(e.label, hidden[e.pool_index], "valley crossed at {}", e.pool_index);
        }
    }

    #[test]
    fn batch_labels_symmetric_pair_in_one_step() {
        let s = sample(
            vec![(Point::xy(0.0, 0.0), Label::One)],
            vec![Point::xy(0.3, 0.0), Point::xy(-0.3, 0.0)],
        );
        let cfg = RunConfig { variant: Variant::Batch, ..RunConfig::new(0.5) };
        let trace = run_batch(&s, &cfg).unwrap();
        assert_eq!(trace.stats.steps, 1);
        assert_eq!(trace.events.len(), 2);
        assert!(trace.events.iter().all(|e| e.step == Some(1) && e.label == Label::One));
    }

    #[test]
    fn batch_equals_sequential_on_singleton_chain() {
        let pool: Vec<Point> = (1..=6).map(|k| Point::xy(0.35 * k as f64, 0.0)).collect();
        let s = sample(vec![(Point::xy(0.0, 0.0), Label::Zero)], pool);
        let cfg = RunConfig::new(0.4);
        let seq = run_sequential(&s, &cfg).unwrap();
        let bat = run_batch(&s, &RunConfig { variant: Variant::Batch, ..cfg }).unwrap();
        assert_eq!(seq.stats.extremality_ties, 0);
        assert_eq!(seq.events, bat.events);
        assert_eq!(seq.unclassified, bat.unclassified);
    }

    #[test]
    fn batch_takes_fewer_steps_on_clusters() {
        let (s, hidden) = two_cluster_sample(7, 30, 0.4);
        let cfg = RunConfig::new(0.4);
        let seq = run_sequential(&s, &cfg).unwrap();
        let bat = run_batch(&s, &RunConfig { variant: Variant::Batch, ..cfg }).unwrap();
        assert!(bat.unclassified.is_empty());
        for e in &bat.events {
            assert_eq!(e.label, hidden[e.pool_index]);
        }
        assert!(
            bat.stats.steps < seq.stats.steps,
            "batch {} vs sequential {}",
            bat.stats.steps,
            seq.stats.steps
        );
    }

    #[test]
    fn traces_are_deterministic() {
        let (s, _) = two_cluster_sample(99, 25, 0.4);
        let cfg = RunConfig::new(0.4);
        let a = run_sequential(&s, &cfg).unwrap();
        let b = run_sequential(&s, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn events_and_unclassified_partition_the_pool() {
        let mut rng = seeded_rng(31);
        for _ in 0..10 {
            let l = rng.gen_range(5..60);
            let pool: Vec<Point> = (0..l)
                .map(|_| Point::xy(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0))
                .collect();
            let s = sample(
                vec![
                    (Point::xy(0.0, 0.0), Label::Zero),
                    (Point::xy(1.0, 1.0), Label::One),
                ],
                pool,
            );
            let trace = run_sequential(&s, &RunConfig::new(0.35)).unwrap();
            let mut seen: Vec<usize> = trace
                .events
                .iter()
                .map(|e| e.pool_index)
                .chain(trace.unclassified.iter().copied())
                .collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..l).collect::<Vec<_>>());
            // regular steps nondecreasing, fallback events after them
            let steps: Vec<_> = trace.events.iter().filter_map(|e| e.step).collect();
            assert!(steps.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pool_permutation_commutes_when_no_index_tie_fires() {
        // gaps in (h/2, h) admit exactly one candidate per step, so no
        // tie-break of any kind fires and the trace must commute with
        // any pool permutation
        let pool: Vec<Point> = (0..12)
            .map(|k| Point::xy(0.3 + 0.30 * k as f64, 0.01 * (k % 3) as f64))
            .collect();
        let s = sample(vec![(Point::xy(0.0, 0.0), Label::Zero)], pool);
        let cfg = RunConfig::new(0.35);
        let trace = run_sequential(&s, &cfg).unwrap();
        assert_eq!(trace.stats.index_ties, 0, "construction must stay tie-free");

        let l = s.pool.len();
        let mut rng = seeded_rng(61);
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..l).collect();
            for i in (1..l).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let permuted_pool =
                PointSet::new(perm.iter().map(|&i| s.pool.get(i).clone()).collect()).unwrap();
            let s2 = SplitSample::new(s.seed.clone(), permuted_pool, None).unwrap();
            let trace2 = run_sequential(&s2, &cfg).unwrap();
            assert_eq!(trace2.stats.index_ties, 0);
            // map the permuted trace back to original indices
            let mut mapped: Vec<(usize, Label, Option<u32>, Score)> = trace2
                .events
                .iter()
                .map(|e| (perm[e.pool_index], e.label, e.step, e.score))
                .collect();
            mapped.sort_by_key(|&(i, ..)| i);
            let mut original: Vec<(usize, Label, Option<u32>, Score)> = trace
                .events
                .iter()
                .map(|e| (e.pool_index, e.label, e.step, e.score))
                .collect();
            original.sort_by_key(|&(i, ..)| i);
            assert_eq!(original, mapped);
        }
    }

    #[test]
    fn trace_csv_golden() {
        let s = sample(
            vec![(Point::xy(0.0, 0.0), Label::One)],
            vec![Point::xy(0.1, 0.0), Point::xy(9.0, 9.0)],
        );
        let trace = run_sequential(&s, &RunConfig::new(0.5)).unwrap();
        assert_eq!(
            trace.to_csv(),
            "pool_index,label,step,score_pos,score_tot,stalled\n0,1,1,1,1,0\n1,,,,,1\n"
        );
        let cfg = RunConfig { fallback: Fallback::NearestNeighbor, ..RunConfig::new(0.5) };
        let trace = run_sequential(&s, &cfg).unwrap();
        assert_eq!(
            trace.to_csv(),
            "pool_index,label,step,score_pos,score_tot,stalled\n0,1,1,1,1,0\n1,1,inf,1,1,1\n"
        );
    }

    #[test]
    fn projection_assigns_every_point_to_one_cell() {
        let one = PointSet::new(vec![Point::xy(0.3, 0.3)]).unwrap();
        let proj = grid_project(&one, 4, None).unwrap();
        assert_eq!(proj.cells.len(), 1);
        assert_eq!(proj.cells.values().next().unwrap().members, vec![0]);

        let two = PointSet::new(vec![Point::xy(0.25, 0.25), Point::xy(0.75, 0.75)]).unwrap();
        let proj = grid_project(&two, 2, Some((0.0, 1.0))).unwrap();
        assert_eq!(proj.cells.len(), 2);
    }

    #[test]
    fn projection_membership_is_consistent() {
        let mut rng = seeded_rng(41);
        let pts: Vec<Point> = (0..500)
            .map(|_| Point::xy(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
            .collect();
        let pool = PointSet::new(pts).unwrap();
        let n = 21;
        let proj = grid_project(&pool, n, None).unwrap();
        assert!(proj.cells.len() <= 500.min(n * n));
        let (a, b) = proj.bounds;
        let corner = |i: i64| if i >= n as i64 { b } else { a + i as f64 * (b - a) / n as f64 };
        let mut covered = 0;
        for (key, cell) in &proj.cells {
            for &m in &cell.members {
                covered += 1;
                for (d, &i) in key.iter().enumerate() {
                    let c = pool.get(m).coords()[d];
                    assert!(corner(i) < c && c <= corner(i + 1), "cell {key:?} point {c}");
                }
            }
        }
        assert_eq!(covered, 500);
    }

    #[test]
    fn projection_rejects_out_of_bounds_points() {
        let pool = PointSet::new(vec![Point::xy(0.5, 0.5), Point::xy(2.0, 0.5)]).unwrap();
        assert!(matches!(
            grid_project(&pool, 4, Some((0.0, 1.0))),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fine_grid_run_matches_labels_of_plain_run() {
        let (s, _) = two_cluster_sample(55, 20, 0.4);
        let plain = run_sequential(&s, &RunConfig::new(0.4)).unwrap();
        let cfg = RunConfig { grid_n: Some(400), ..RunConfig::new(0.4) };
        let fast = run_fast(&s, &cfg).unwrap();
        assert!(fast.unclassified.is_empty());
        assert_eq!(plain.labels(), fast.labels());
    }

    #[test]
    fn mixed_cell_members_share_their_representative_label() {
        // two interleaved true classes collapsed into a single coarse cell
        let seed = vec![
            (Point::xy(0.0, 0.5), Label::Zero),
            (Point::xy(1.0, 0.5), Label::One),
        ];
        let pool = vec![
            Point::xy(0.45, 0.5),
            Point::xy(0.55, 0.5),
            Point::xy(0.5, 0.45),
        ];
        let s = SplitSample::new(
            LabeledSet::new(seed).unwrap(),
            PointSet::new(pool).unwrap(),
            Some(vec![Label::Zero, Label::One, Label::Zero]),
        )
        .unwrap();
        let cfg = RunConfig { grid_n: Some(2), ..RunConfig::new(0.8) };
        let fast = run_fast(&s, &cfg).unwrap();
        let labels = fast.labels();
        assert!(labels.iter().all(|l| l == &labels[0]));
        // the minority class inside the cell is necessarily wrong
        let hidden = s.hidden_labels.as_ref().unwrap();
        let wrong = labels
            .iter()
            .zip(hidden)
            .filter(|(got, want)| got.unwrap() != **want)
            .count();
        assert!(wrong >= 1);
    }
}
