//! Shared test support: brute-force oracles kept independent of the
//! library's indexed/incremental code paths, a full-rescan reference for
//! the self-training engine, and the separated-clusters construction.

#![allow(dead_code)]

use rand::Rng;

use selftrain::datasets::{seeded_rng, Label, LabeledSet, SplitSample};
use selftrain::engine::Trace;
use selftrain::geometry::{Point, PointSet};

pub fn uniform_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

pub fn random_point_set(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> PointSet {
    PointSet::new(
        (0..n)
            .map(|_| Point::xy(uniform_in(rng, lo, hi), uniform_in(rng, lo, hi)))
            .collect(),
    )
    .unwrap()
}

pub fn random_labeled_set(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> LabeledSet {
    LabeledSet::new(
        (0..n)
            .map(|_| {
                let p = Point::xy(uniform_in(rng, lo, hi), uniform_in(rng, lo, hi));
                let y = if rng.gen::<bool>() { Label::One } else { Label::Zero };
                (p, y)
            })
            .collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Brute-force oracles (plain double loops, strict open balls)
// ---------------------------------------------------------------------------

pub fn brute_ball_query(ps: &PointSet, center: &Point, r: f64) -> Vec<usize> {
    (0..ps.len()).filter(|&i| ps.get(i).dist(center) < r).collect()
}

pub fn brute_nw_counts(labeled: &LabeledSet, center: &Point, h: f64) -> (u64, u64) {
    let mut pos = 0;
    let mut tot = 0;
    for (p, y) in labeled.iter() {
        if p.dist(center) < h {
            tot += 1;
            pos += u64::from(y.as_u8());
        }
    }
    (pos, tot)
}

pub fn brute_hausdorff(a: &PointSet, b: &PointSet) -> f64 {
    let directed = |from: &PointSet, to: &PointSet| {
        let mut worst = 0.0_f64;
        for p in from.iter() {
            let mut best = f64::INFINITY;
            for q in to.iter() {
                best = best.min(p.dist(q));
            }
            worst = worst.max(best);
        }
        worst
    };
    directed(a, b).max(directed(b, a))
}

pub fn brute_knn(seed: &LabeledSet, pool: &PointSet, k: usize) -> Vec<Label> {
    pool.iter()
        .map(|p| {
            let mut d: Vec<(f64, usize)> =
                seed.iter().enumerate().map(|(i, (s, _))| (p.dist(s), i)).collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let ones = d[..k].iter().filter(|&&(_, i)| seed.get(i).1 == Label::One).count();
            if 2 * ones >= k {
                Label::One
            } else {
                Label::Zero
            }
        })
        .collect()
}

pub fn brute_prune(pool: &PointSet, threshold: f64) -> Vec<usize> {
    (0..pool.len())
        .filter(|&i| {
            (0..pool.len()).any(|j| j != i && pool.get(i).dist(pool.get(j)) < threshold)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Full-rescan reference engine (sequential variant, no fallback)
// ---------------------------------------------------------------------------

/// One reference labeling decision, shaped like the engine's event rows.
#[derive(Debug, PartialEq, Eq)]
pub struct NaiveEvent {
    pub pool_index: usize,
    pub label: u8,
    pub step: u32,
    pub pos: u64,
    pub tot: u64,
}

/// Sequential self-training by full rescan: every step recomputes every
/// unlabeled point's score and ball count with plain double loops, then
/// picks the maximizer by exact cross-multiplied extremality, pool ball
/// count, and lowest index.
pub fn naive_sequential(sample: &SplitSample, h: f64) -> (Vec<NaiveEvent>, Vec<usize>) {
    let pool = &sample.pool;
    let l = pool.len();
    let mut labeled: Vec<Option<u8>> = vec![None; l];
    let mut events = Vec::new();
    let mut step = 0u32;
    loop {
        // all labeled points: seeds plus labeled pool entries
        let mut best: Option<(usize, u64, u64, u64)> = None; // (idx, pos, tot, ball)
        for i in 0..l {
            if labeled[i].is_some() {
                continue;
            }
            let center = pool.get(i);
            let mut pos = 0u64;
            let mut tot = 0u64;
            for (p, y) in sample.seed.iter() {
                if p.dist(center) < h {
                    tot += 1;
                    pos += u64::from(y.as_u8());
                }
            }
            for (j, lab) in labeled.iter().enumerate() {
                if let Some(y) = lab {
                    if pool.get(j).dist(center) < h {
                        tot += 1;
                        pos += u64::from(*y);
                    }
                }
            }
            if tot == 0 {
                continue;
            }
            let ball = (0..l).filter(|&j| pool.get(j).dist(center) < h).count() as u64;
            let better = match best {
                None => true,
                Some((bi, bpos, btot, bball)) => {
                    let m = pos.max(tot - pos) as u128;
                    let bm = bpos.max(btot - bpos) as u128;
                    // compare m/tot against bm/btot exactly
                    match (m * btot as u128).cmp(&(bm * tot as u128)) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => match ball.cmp(&bball) {
                            std::cmp::Ordering::Greater => true,
                            std::cmp::Ordering::Less => false,
                            std::cmp::Ordering::Equal => i < bi,
                        },
                    }
                }
            };
            if better {
                best = Some((i, pos, tot, ball));
            }
        }
        let Some((i, pos, tot, _)) = best else {
            break;
        };
        step += 1;
        let label = u8::from(2 * pos >= tot);
        events.push(NaiveEvent { pool_index: i, label, step, pos, tot });
        labeled[i] = Some(label);
    }
    let unclassified = (0..l).filter(|&i| labeled[i].is_none()).collect();
    (events, unclassified)
}

/// CSV rendering matching the engine's trace schema, for byte-level
/// comparison.
pub fn naive_trace_csv(events: &[NaiveEvent], unclassified: &[usize]) -> String {
    let mut out = String::from("pool_index,label,step,score_pos,score_tot,stalled\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{},0\n",
            e.pool_index, e.label, e.step, e.pos, e.tot
        ));
    }
    for &i in unclassified {
        out.push_str(&format!("{i},,,,,1\n"));
    }
    out
}

pub fn engine_trace_rows(trace: &Trace) -> (Vec<NaiveEvent>, Vec<usize>) {
    let events = trace
        .events
        .iter()
        .map(|e| NaiveEvent {
            pool_index: e.pool_index,
            label: e.label.as_u8(),
            step: e.step.expect("reference comparisons run without fallback"),
            pos: e.score.pos,
            tot: e.score.tot,
        })
        .collect();
    (events, trace.unclassified.clone())
}

// ---------------------------------------------------------------------------
// Separated-clusters construction
// ---------------------------------------------------------------------------

/// Two uniform discs of radius 0.5 around (0,0) and (5,5) with the
/// centers as correctly labeled seeds. Each cluster is redrawn until its
/// h-ball graph (seeded at the center) is connected, so the frontier can
/// always advance and no chain of h-balls bridges the gap between the
/// clusters.
pub fn two_cluster_sample(rng_seed: u64, per_cluster: usize, h: f64) -> (SplitSample, Vec<Label>) {
    let mut rng = seeded_rng(rng_seed);
    let mut pts = Vec::new();
    let mut hidden = Vec::new();
    for &(cx, cy, y) in &[(0.0, 0.0, Label::Zero), (5.0, 5.0, Label::One)] {
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
    let seed = LabeledSet::new(vec![
        (Point::xy(0.0, 0.0), Label::Zero),
        (Point::xy(5.0, 5.0), Label::One),
    ])
    .unwrap();
    let sample =
        SplitSample::new(seed, PointSet::new(pts).unwrap(), Some(hidden.clone())).unwrap();
    (sample, hidden)
}
