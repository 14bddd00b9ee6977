//! Labeled/unlabeled sample containers, the two simulated-data generators
//! with their exact-rule oracles, Monte-Carlo error-floor estimation, CSV
//! ingestion, and nearest-neighbor pruning.
//!
//! # Reproducibility
//!
//! All randomness flows through `ChaCha8`, seeded from a single 64-bit
//! value. Replicated experiments derive child seeds with
//! [`child_seed`]\(master, index\) (a SplitMix64 mix of the master seed and
//! the replication index), so results are identical across runs, machines
//! and thread counts.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{build_index, Point, PointSet};

/// Binary class label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Zero),
            1 => Ok(Label::One),
            other => Err(Error::InvalidInput(format!("label must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Zero => 0,
            Label::One => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Zero => Label::One,
            Label::One => Label::Zero,
        }
    }
}

/// A nonempty sequence of `(point, label)` pairs of homogeneous dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    entries: Vec<(Point, Label)>,
    dim: usize,
}

impl LabeledSet {
    pub fn new(entries: Vec<(Point, Label)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("labeled set must be nonempty".into()));
        }
        let dim = entries[0].0.dim();
        if let Some((p, _)) = entries.iter().find(|(p, _)| p.dim() != dim) {
            return Err(Error::InvalidInput(format!(
                "mixed dimensions in labeled set: expected {dim}, found {}",
                p.dim()
            )));
        }
        Ok(Self { entries, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> (&Point, Label) {
        let (p, y) = &self.entries[i];
        (p, *y)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, Label)> {
        self.entries.iter().map(|(p, y)| (p, *y))
    }

    /// The points of the set, in order, as a `PointSet`.
    pub fn positions(&self) -> PointSet {
        PointSet::new(self.entries.iter().map(|(p, _)| p.clone()).collect())
            .expect("labeled set is nonempty and homogeneous")
    }
}

/// A seed set of revealed labels plus a pool of unlabeled points.
///
/// `hidden_labels`, when present, aligns with the pool and is only for
/// evaluation and diagnostics; the classification engine never reads it.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSample {
    pub seed: LabeledSet,
    pub pool: PointSet,
    pub hidden_labels: Option<Vec<Label>>,
}

impl SplitSample {
    pub fn new(seed: LabeledSet, pool: PointSet, hidden_labels: Option<Vec<Label>>) -> Result<Self> {
        if seed.dim() != pool.dim() {
            return Err(Error::InvalidInput(format!(
                "seed dimension {} does not match pool dimension {}",
                seed.dim(),
                pool.dim()
            )));
        }
        if pool.is_empty() {
            return Err(Error::InvalidInput("pool must be nonempty".into()));
        }
        if let Some(h) = &hidden_labels {
            if h.len() != pool.len() {
                return Err(Error::InvalidInput(format!(
                    "hidden_labels length {} does not match pool size {}",
                    h.len(),
                    pool.len()
                )));
            }
        }
        Ok(Self { seed, pool, hidden_labels })
    }
}

// ---------------------------------------------------------------------------
// RNG plumbing
// ---------------------------------------------------------------------------

/// SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replication `index` of a run with `master` seed.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(index.wrapping_add(1))))
}

/// The crate's generator: portable, seedable ChaCha8.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_pm1<R: Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>() * 2.0 - 1.0
}

/// One pair of independent standard normals (Marsaglia polar method).
fn std_normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let u = uniform_pm1(rng);
        let v = uniform_pm1(rng);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

// ---------------------------------------------------------------------------
// Sine-mixture generator
// ---------------------------------------------------------------------------

/// Sup-norm split distance between the near-curve and far-from-curve
/// regions of the sine mixture.
pub const SINE_SPLIT_DIST: f64 = 0.2;

/// Probability that a draw comes from the far region.
pub const SINE_FAR_WEIGHT: f64 = 7.0 / 8.0;

/// Height of the labeling curve at abscissa `x`.
pub fn sine_curve(x: f64) -> f64 {
    0.5 * (4.0 * x).sin()
}

const CURVE_STEPS: usize = 2000; // 2001-point discretization of [-1, 1]

fn curve_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=CURVE_STEPS)
            .map(|k| sine_curve(-1.0 + 2.0 * k as f64 / CURVE_STEPS as f64))
            .collect()
    })
}

fn curve_t(k: usize) -> f64 {
    -1.0 + 2.0 * k as f64 / CURVE_STEPS as f64
}

/// Coarse scan of `max(|x - t|, |y - c(t)|)` over the curve table,
/// restricted to the window that can still beat the running best.
/// Returns the best value and its index.
fn sup_dist_coarse(x: f64, y: f64) -> (f64, usize) {
    let table = curve_table();
    let k0 = (((x + 1.0) / 2.0 * CURVE_STEPS as f64).round() as i64).clamp(0, CURVE_STEPS as i64);
    let mut best = f64::INFINITY;
    let mut best_k = k0 as usize;
    let mut off = 0i64;
    loop {
        let mut any_alive = false;
        for k in [k0 - off, k0 + off] {
            if k < 0 || k > CURVE_STEPS as i64 {
                continue;
            }
            let k = k as usize;
            let dt = (x - curve_t(k)).abs();
            if dt < best {
                any_alive = true;
                let v = dt.max((y - table[k]).abs());
                if v < best {
                    best = v;
                    best_k = k;
                }
            }
        }
        if !any_alive && off > 0 {
            break;
        }
        off += 1;
        if off > CURVE_STEPS as i64 {
            break;
        }
    }
    (best, best_k)
}

/// Local grid refinement of the sup-norm distance around table entry `k`.
fn sup_dist_refine(x: f64, y: f64, k: usize, mut best: f64) -> f64 {
    let mut lo = curve_t(k.saturating_sub(1));
    let mut hi = curve_t((k + 1).min(CURVE_STEPS));
    for _ in 0..2 {
        let mut best_t = 0.5 * (lo + hi);
        for j in 0..=40 {
            let t = lo + (hi - lo) * j as f64 / 40.0;
            let v = (x - t).abs().max((y - sine_curve(t)).abs());
            if v < best {
                best = v;
                best_t = t;
            }
        }
        let w = (hi - lo) / 40.0;
        lo = best_t - w;
        hi = best_t + w;
    }
    best
}

/// Sup-norm distance from `(x, y)` to the curve `{(t, sin(4t)/2)}` over
/// `t` in `[-1, 1]`, by discretized minimization with local refinement
/// (error below `1e-4`).
pub fn sup_dist_to_curve(x: f64, y: f64) -> f64 {
    let (best, k) = sup_dist_coarse(x, y);
    sup_dist_refine(x, y, k, best)
}

/// Whether `(x, y)` lies strictly within the sup-norm split distance of
/// the curve. Refinement only runs when the coarse scan is within its own
/// error bound of the threshold.
fn near_curve(x: f64, y: f64) -> bool {
    let (coarse, k) = sup_dist_coarse(x, y);
    if (coarse - SINE_SPLIT_DIST).abs() > 2e-3 {
        return coarse < SINE_SPLIT_DIST;
    }
    sup_dist_refine(x, y, k, coarse) < SINE_SPLIT_DIST
}

/// Exact labeling rule of the sine mixture: `1` iff the point is strictly
/// above the curve. Since the label is deterministic in the features,
/// this is also the optimal rule.
pub fn bayes_sine(p: &Point) -> Result<Label> {
    if p.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "sine oracle is 2-dimensional, got dimension {}",
            p.dim()
        )));
    }
    let c = p.coords();
    Ok(if c[1] > sine_curve(c[0]) { Label::One } else { Label::Zero })
}

/// Parameters of the sine-mixture experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SineParams {
    /// Pool size.
    pub l: usize,
    /// Seed-set size for an i.i.d. draw.
    pub n: usize,
    /// When set, draw exactly this many seeds of class 0 and class 1
    /// instead of an i.i.d. sample of size `n`.
    pub seeds_per_class: Option<(usize, usize)>,
}

impl SineParams {
    pub fn new(l: usize, n: usize) -> Self {
        Self { l, n, seeds_per_class: None }
    }
}

fn sample_sine_xy<R: Rng>(rng: &mut R) -> (Point, Label) {
    let far = rng.gen::<f64>() < SINE_FAR_WEIGHT;
    loop {
        let x = uniform_pm1(rng);
        let y = uniform_pm1(rng);
        if near_curve(x, y) != far {
            let p = Point::xy(x, y);
            let label = if y > sine_curve(x) { Label::One } else { Label::Zero };
            return (p, label);
        }
    }
}

// ---------------------------------------------------------------------------
// Truncated-Gaussian generator
// ---------------------------------------------------------------------------

/// How the seed set of a truncated-Gaussian sample is produced.
#[derive(Clone, Debug, PartialEq)]
pub enum TruncGaussSeeds {
    /// The fixed pair `{((0,0), 1), ((1.5,1.5), 0)}`.
    Canonical,
    /// An i.i.d. draw of size `n`, resampled until both classes appear.
    Sampled { n: usize },
}

/// Parameters of the two-truncated-Gaussians experiment. Class labels are
/// `Bernoulli(1/2)`; given the label `y`, the point is normal with mean
/// `mu_y` and per-axis standard deviation `sigma_diag`, conditioned on
/// lying strictly inside the ball of `trunc_radius` around `mu_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncGaussParams {
    pub l: usize,
    pub mu0: [f64; 2],
    pub mu1: [f64; 2],
    /// Per-axis standard deviations.
    pub sigma_diag: [f64; 2],
    pub trunc_radius: f64,
    pub seeds: TruncGaussSeeds,
}

impl TruncGaussParams {
    /// Well-separated means: error floor near 0.025.
    pub fn case1(l: usize) -> Self {
        Self {
            l,
            mu0: [1.5, 1.5],
            mu1: [0.0, 0.0],
            sigma_diag: [0.6, 0.6],
            trunc_radius: 1.5,
            seeds: TruncGaussSeeds::Canonical,
        }
    }

    /// Closer means: error floor near 0.067.
    pub fn case2(l: usize) -> Self {
        Self { mu0: [1.2, 1.2], ..Self::case1(l) }
    }

    fn validate(&self) -> Result<()> {
        if !(self.trunc_radius.is_finite() && self.trunc_radius > 0.0) {
            return Err(Error::InvalidInput("trunc_radius must be positive".into()));
        }
        if self.sigma_diag.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidInput("sigma_diag must be positive".into()));
        }
        Ok(())
    }
}

/// Optimal rule for the truncated-Gaussian pair with equal priors and a
/// shared covariance: inside both truncation balls the nearer mean wins
/// (ties to label 1); inside exactly one ball that class wins; outside
/// both, the nearer mean.
pub fn bayes_truncgauss(p: &Point, params: &TruncGaussParams) -> Result<Label> {
    if p.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "truncated-Gaussian oracle is 2-dimensional, got dimension {}",
            p.dim()
        )));
    }
    let c = p.coords();
    let d0 = ((c[0] - params.mu0[0]).powi(2) + (c[1] - params.mu0[1]).powi(2)).sqrt();
    let d1 = ((c[0] - params.mu1[0]).powi(2) + (c[1] - params.mu1[1]).powi(2)).sqrt();
    let r = params.trunc_radius;
    let in0 = d0 < r;
    let in1 = d1 < r;
    Ok(match (in0, in1) {
        (true, false) => Label::Zero,
        (false, true) => Label::One,
        // both or neither: nearer mean, tie to 1
        _ => {
            if d1 <= d0 {
                Label::One
            } else {
                Label::Zero
            }
        }
    })
}

const REJECTION_CAP: usize = 10_000;

fn sample_truncgauss_xy<R: Rng>(params: &TruncGaussParams, rng: &mut R) -> Result<(Point, Label)> {
    let label = if rng.gen::<f64>() < 0.5 { Label::One } else { Label::Zero };
    let mu = match label {
        Label::Zero => params.mu0,
        Label::One => params.mu1,
    };
    let r_sq = params.trunc_radius * params.trunc_radius;
    for _ in 0..REJECTION_CAP {
        let (n0, n1) = std_normal_pair(rng);
        let dx = params.sigma_diag[0] * n0;
        let dy = params.sigma_diag[1] * n1;
        if dx * dx + dy * dy < r_sq {
            return Ok((Point::xy(mu[0] + dx, mu[1] + dy), label));
        }
    }
    Err(Error::DegenerateParameters(format!(
        "truncation acceptance probability below 1e-3 (no accept in {REJECTION_CAP} draws)"
    )))
}

// ---------------------------------------------------------------------------
// GeneratorSpec
// ---------------------------------------------------------------------------

/// A simulated-data source: fixes the family and all its parameters, so a
/// single 64-bit seed determines the sample.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Sine(SineParams),
    TruncGauss(TruncGaussParams),
}

impl GeneratorSpec {
    /// One feature/label draw from the joint distribution.
    pub fn sample_xy<R: Rng>(&self, rng: &mut R) -> Result<(Point, Label)> {
        match self {
            GeneratorSpec::Sine(_) => Ok(sample_sine_xy(rng)),
            GeneratorSpec::TruncGauss(p) => sample_truncgauss_xy(p, rng),
        }
    }

    /// The exact optimal rule of this source.
    pub fn bayes(&self, p: &Point) -> Result<Label> {
        match self {
            GeneratorSpec::Sine(_) => bayes_sine(p),
            GeneratorSpec::TruncGauss(params) => bayes_truncgauss(p, params),
        }
    }

    /// Whether `p` lies in the support of the feature distribution.
    pub fn in_support(&self, p: &Point) -> bool {
        match self {
            GeneratorSpec::Sine(_) => p.coords().iter().all(|c| c.abs() <= 1.0),
            GeneratorSpec::TruncGauss(params) => {
                let c = p.coords();
                let d0 = ((c[0] - params.mu0[0]).powi(2) + (c[1] - params.mu0[1]).powi(2)).sqrt();
                let d1 = ((c[0] - params.mu1[0]).powi(2) + (c[1] - params.mu1[1]).powi(2)).sqrt();
                d0 < params.trunc_radius || d1 < params.trunc_radius
            }
        }
    }

    /// Pool size this spec generates.
    pub fn pool_size(&self) -> usize {
        match self {
            GeneratorSpec::Sine(p) => p.l,
            GeneratorSpec::TruncGauss(p) => p.l,
        }
    }

    /// Generates the full split sample for the given seed. Identical seed
    /// means identical sample, byte for byte in serialized form.
    pub fn generate(&self, seed: u64) -> Result<SplitSample> {
        let mut rng = seeded_rng(seed);
        match self {
            GeneratorSpec::Sine(params) => {
                if params.l < 1 {
                    return Err(Error::InvalidInput("pool size must be >= 1".into()));
                }
                let mut pts = Vec::with_capacity(params.l);
                let mut hidden = Vec::with_capacity(params.l);
                for _ in 0..params.l {
                    let (p, y) = sample_sine_xy(&mut rng);
                    pts.push(p);
                    hidden.push(y);
                }
                let pool = PointSet::new(pts)?;
                let seed_set = match params.seeds_per_class {
                    Some((n0, n1)) => {
                        if n0 + n1 < 2 || n0 == 0 || n1 == 0 {
                            return Err(Error::InvalidInput(
                                "each class needs at least one seed".into(),
                            ));
                        }
                        let mut want0 = n0;
                        let mut want1 = n1;
                        let mut entries = Vec::with_capacity(n0 + n1);
                        while want0 + want1 > 0 {
                            let (p, y) = sample_sine_xy(&mut rng);
                            let take = match y {
                                Label::Zero if want0 > 0 => {
                                    want0 -= 1;
                                    true
                                }
                                Label::One if want1 > 0 => {
                                    want1 -= 1;
                                    true
                                }
                                _ => false,
                            };
                            if take {
                                entries.push((p, y));
                            }
                        }
                        LabeledSet::new(entries)?
                    }
                    None => {
                        if params.n < 2 {
                            return Err(Error::InvalidInput(
                                "seed size must be >= 2 so both classes can appear".into(),
                            ));
                        }
                        // redraw the whole batch until both classes appear
                        loop {
                            let entries: Vec<(Point, Label)> =
                                (0..params.n).map(|_| sample_sine_xy(&mut rng)).collect();
                            let ones = entries.iter().filter(|(_, y)| *y == Label::One).count();
                            if ones > 0 && ones < params.n {
                                break LabeledSet::new(entries)?;
                            }
                        }
                    }
                };
                SplitSample::new(seed_set, pool, Some(hidden))
            }
            GeneratorSpec::TruncGauss(params) => {
                params.validate()?;
                if params.l < 1 {
                    return Err(Error::InvalidInput("pool size must be >= 1".into()));
                }
                let mut pts = Vec::with_capacity(params.l);
                let mut hidden = Vec::with_capacity(params.l);
                for _ in 0..params.l {
                    let (p, y) = sample_truncgauss_xy(params, &mut rng)?;
                    pts.push(p);
                    hidden.push(y);
                }
                let pool = PointSet::new(pts)?;
                let seed_set = match &params.seeds {
                    TruncGaussSeeds::Canonical => LabeledSet::new(vec![
                        (Point::xy(0.0, 0.0), Label::One),
                        (Point::xy(1.5, 1.5), Label::Zero),
                    ])?,
                    TruncGaussSeeds::Sampled { n } => {
                        if *n < 2 {
                            return Err(Error::InvalidInput(
                                "seed size must be >= 2 so both classes can appear".into(),
                            ));
                        }
                        loop {
                            let mut entries = Vec::with_capacity(*n);
                            for _ in 0..*n {
                                entries.push(sample_truncgauss_xy(params, &mut rng)?);
                            }
                            let ones = entries.iter().filter(|(_, y)| *y == Label::One).count();
                            if ones > 0 && ones < *n {
                                break LabeledSet::new(entries)?;
                            }
                        }
                    }
                };
                SplitSample::new(seed_set, pool, Some(hidden))
            }
        }
    }
}

/// Monte-Carlo estimate of `P(oracle(X) != Y)` over `m` fresh draws.
pub fn bayes_error<F>(oracle: F, gen: &GeneratorSpec, m: usize, rng_seed: u64) -> Result<f64>
where
    F: Fn(&Point) -> Result<Label>,
{
    if m < 1 {
        return Err(Error::InvalidInput("m must be >= 1".into()));
    }
    let mut rng = seeded_rng(rng_seed);
    let mut wrong = 0usize;
    for _ in 0..m {
        let (p, y) = gen.sample_xy(&mut rng)?;
        if oracle(&p)? != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / m as f64)
}

// ---------------------------------------------------------------------------
// CSV ingestion and emission
// ---------------------------------------------------------------------------

/// Shared CSV conventions: comma separator, '.' decimal, optional single
/// header line, label column last when present.
#[derive(Copy, Clone, Debug, Default)]
pub struct CsvOptions {
    /// Skip one header line.
    pub header: bool,
}

fn parse_field(field: &str, row: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        row,
        msg: format!("non-numeric field {:?}", field.trim()),
    })
}

fn read_rows(path: &Path, opts: CsvOptions) -> Result<Vec<(usize, Vec<f64>)>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if opts.header && i == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| parse_field(f, row))
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    row,
                    msg: format!("ragged row: expected {w} columns, found {}", fields.len()),
                })
            }
            _ => {}
        }
        rows.push((row, fields));
    }
    Ok(rows)
}

/// Loads a fully labeled CSV: `d` feature columns plus a trailing 0/1
/// label column.
pub fn load_labeled_csv(path: &Path, opts: CsvOptions) -> Result<LabeledSet> {
    let rows = read_rows(path, opts)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no data rows", path.display())));
    }
    let mut entries = Vec::with_capacity(rows.len());
    for (row, mut fields) in rows {
        if fields.len() < 2 {
            return Err(Error::Parse {
                row,
                msg: "labeled rows need at least one feature and a label".into(),
            });
        }
        let label_val = fields.pop().expect("checked width");
        let label = if label_val == 0.0 {
            Label::Zero
        } else if label_val == 1.0 {
            Label::One
        } else {
            return Err(Error::Parse { row, msg: format!("label must be 0 or 1, got {label_val}") });
        };
        let point = Point::new(fields).map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        entries.push((point, label));
    }
    LabeledSet::new(entries)
}

/// Loads a pool CSV of `d` feature columns. With `trailing_labels`, the
/// last column is a 0/1 ground-truth label kept only for evaluation.
pub fn load_points_csv(
    path: &Path,
    opts: CsvOptions,
    trailing_labels: bool,
) -> Result<(PointSet, Option<Vec<Label>>)> {
    let rows = read_rows(path, opts)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no data rows", path.display())));
    }
    let mut pts = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (row, mut fields) in rows {
        if trailing_labels {
            if fields.len() < 2 {
                return Err(Error::Parse {
                    row,
                    msg: "labeled rows need at least one feature and a label".into(),
                });
            }
            let v = fields.pop().expect("checked width");
            if v == 0.0 {
                labels.push(Label::Zero);
            } else if v == 1.0 {
                labels.push(Label::One);
            } else {
                return Err(Error::Parse { row, msg: format!("label must be 0 or 1, got {v}") });
            }
        }
        let point = Point::new(fields).map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        pts.push(point);
    }
    let set = PointSet::new(pts)?;
    Ok((set, if trailing_labels { Some(labels) } else { None }))
}

/// Assembles a `SplitSample` from a labeled seed CSV and a pool CSV.
/// Ground truth is attached only when `pool_labeled` says the pool file
/// carries a trailing label column.
pub fn load_split_csv(
    seed_path: &Path,
    pool_path: &Path,
    opts: CsvOptions,
    pool_labeled: bool,
) -> Result<SplitSample> {
    let seed = load_labeled_csv(seed_path, opts)?;
    let (pool, hidden) = load_points_csv(pool_path, opts, pool_labeled)?;
    SplitSample::new(seed, pool, hidden)
}

pub fn write_labeled_csv(set: &LabeledSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (p, y) in set.iter() {
        push_row(&mut out, p, Some(y));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_points_csv(ps: &PointSet, labels: Option<&[Label]>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (i, p) in ps.iter().enumerate() {
        push_row(&mut out, p, labels.map(|ls| ls[i]));
    }
    fs::write(path, out)?;
    Ok(())
}

fn push_row(out: &mut String, p: &Point, label: Option<Label>) {
    use std::fmt::Write as _;
    for (j, c) in p.coords().iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        write!(out, "{c}").expect("string write");
    }
    if let Some(y) = label {
        write!(out, ",{}", y.as_u8()).expect("string write");
    }
    out.push('\n');
}

/// Serializes a split sample to `<prefix>seed.csv` and `<prefix>pool.csv`
/// (pool gets a trailing ground-truth column when hidden labels are
/// present and `with_labels` is set). Returns the two paths.
pub fn write_split_csv(
    sample: &SplitSample,
    prefix: &Path,
    with_labels: bool,
) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let seed_path = append_to_filename(prefix, "seed.csv");
    let pool_path = append_to_filename(prefix, "pool.csv");
    write_labeled_csv(&sample.seed, &seed_path)?;
    let labels = if with_labels { sample.hidden_labels.as_deref() } else { None };
    write_points_csv(&sample.pool, labels, &pool_path)?;
    Ok((seed_path, pool_path))
}

fn append_to_filename(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    std::path::PathBuf::from(s)
}

// ---------------------------------------------------------------------------
// Nearest-neighbor pruning
// ---------------------------------------------------------------------------

/// Single-pass pruning: keeps exactly the points whose nearest neighbor in
/// the ORIGINAL set lies strictly within `threshold`. Returns the reduced
/// set and the kept original indices in ascending order.
pub fn prune_by_nn(pool: &PointSet, threshold: f64) -> Result<(PointSet, Vec<usize>)> {
    if pool.len() < 2 {
        return Err(Error::InvalidInput("pruning needs at least two points".into()));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidInput(format!(
            "threshold must be a positive finite real, got {threshold}"
        )));
    }
    let idx = build_index(pool, threshold)?;
    let mut kept = Vec::new();
    for i in 0..pool.len() {
        let hits = idx.ball_query(pool.get(i), threshold)?;
        // the query always contains i itself at distance zero
        if hits.iter().any(|&j| j != i) {
            kept.push(i);
        }
    }
    let pts = kept.iter().map(|&i| pool.get(i).clone()).collect();
    let reduced = PointSet::with_dim(pts, pool.dim())?;
    Ok((reduced, kept))
}

/// Two-column CSV serialization of a kept-index map.
pub fn prune_map_csv(kept: &[usize]) -> String {
    let mut out = String::from("original_index,new_index\n");
    for (new_i, orig) in kept.iter().enumerate() {
        out.push_str(&format!("{orig},{new_i}\n"));
    }
    out
}
