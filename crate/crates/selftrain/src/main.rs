//! Command-line front end: simulate data sources, classify CSV samples,
//! benchmark seeded replications, run assumption diagnostics, and
//! estimate the error floor. Every subcommand writes files and prints
//! their paths to stdout, one per line; failures report on stderr with a
//! nonzero exit code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use selftrain::datasets::{
    bayes_error, load_split_csv, prune_by_nn, prune_map_csv, sup_dist_to_curve, write_split_csv,
    CsvOptions, GeneratorSpec, Label, SineParams, SplitSample, TruncGaussParams, TruncGaussSeeds,
    SINE_SPLIT_DIST,
};
use selftrain::diagnostics::{boundary_audit, covering_check, probe_grid, seed_check, valley_check};
use selftrain::engine::{run, run_sequential, Fallback, RunConfig, Variant};
use selftrain::geometry::{Point, PointSet};
use selftrain::harness::{
    error_rate, per_rep_csv, run_experiment, CsvSource, DataSource, ExperimentSpec,
};

#[derive(Parser)]
#[command(
    name = "selftrain",
    version,
    about = "Self-training semi-supervised classification with uniform-kernel majority scores"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a split sample from a generator and write it as CSV.
    Simulate(SimulateArgs),
    /// Load seed/pool CSVs, run the engine, write the trace CSV.
    Classify(ClassifyArgs),
    /// Run seeded replications and write summary JSON plus per-rep CSV.
    Bench(BenchArgs),
    /// Run covering/valley/seed/boundary diagnostics on a generator draw.
    Diagnose(DiagnoseArgs),
    /// Monte-Carlo estimate of the optimal-rule error floor.
    Bayes(BayesArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Sine,
    Truncgauss,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CliVariant {
    Sequential,
    Batch,
}

impl From<CliVariant> for Variant {
    fn from(v: CliVariant) -> Self {
        match v {
            CliVariant::Sequential => Variant::Sequential,
            CliVariant::Batch => Variant::Batch,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CliFallback {
    None,
    Nn,
}

impl From<CliFallback> for Fallback {
    fn from(f: CliFallback) -> Self {
        match f {
            CliFallback::None => Fallback::None,
            CliFallback::Nn => Fallback::NearestNeighbor,
        }
    }
}

fn parse_usize_pair(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated counts, got {s:?}"));
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

#[derive(Args, Clone)]
struct GenArgs {
    /// Data source family.
    #[arg(long, value_enum, default_value_t = GenKind::Sine)]
    gen: GenKind,
    /// Truncated-Gaussian case: 1 (means 1.5 apart per axis) or 2 (1.2).
    #[arg(long, default_value_t = 1)]
    case: u8,
    /// Pool size.
    #[arg(long)]
    l: Option<usize>,
    /// Seed-set size for an i.i.d. sine draw.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Exact per-class sine seed counts, e.g. `--seeds-per-class 10,10`.
    #[arg(long, value_parser = parse_usize_pair)]
    seeds_per_class: Option<(usize, usize)>,
    /// Sample this many truncated-Gaussian seeds instead of the canonical
    /// pair {((0,0),1), ((1.5,1.5),0)}.
    #[arg(long)]
    sampled_seeds: Option<usize>,
}

impl GenArgs {
    fn to_spec(&self) -> anyhow::Result<GeneratorSpec> {
        Ok(match self.gen {
            GenKind::Sine => GeneratorSpec::Sine(SineParams {
                l: self.l.unwrap_or(2400),
                n: self.n,
                seeds_per_class: self.seeds_per_class,
            }),
            GenKind::Truncgauss => {
                let l = self.l.unwrap_or(2000);
                let mut params = match self.case {
                    1 => TruncGaussParams::case1(l),
                    2 => TruncGaussParams::case2(l),
                    other => bail!("unknown truncated-Gaussian case {other}; use 1 or 2"),
                };
                if let Some(n) = self.sampled_seeds {
                    params.seeds = TruncGaussSeeds::Sampled { n };
                }
                GeneratorSpec::TruncGauss(params)
            }
        })
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Bandwidth of the open scoring/candidacy ball.
    #[arg(long)]
    h: f64,
    #[arg(long, value_enum, default_value_t = CliVariant::Sequential)]
    variant: CliVariant,
    /// Collapse the pool onto an N-per-axis grid first.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Stall handling: leave points unclassified or 1-NN label them.
    #[arg(long, value_enum, default_value_t = CliFallback::None)]
    fallback: CliFallback,
}

impl RunArgs {
    fn to_config(&self, rng_seed: u64) -> RunConfig {
        RunConfig {
            h: self.h,
            variant: self.variant.into(),
            fallback: self.fallback.into(),
            grid_n: self.grid_n,
            rng_seed,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<out>seed.csv` and `<out>pool.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Omit the ground-truth label column from the pool CSV.
    #[arg(long)]
    no_labels: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Seed CSV: feature columns plus a trailing 0/1 label column.
    #[arg(long)]
    seed_csv: PathBuf,
    /// Pool CSV: feature columns only, unless --pool-labeled.
    #[arg(long)]
    pool_csv: PathBuf,
    /// The pool CSV carries a trailing ground-truth column (evaluation).
    #[arg(long)]
    pool_labeled: bool,
    /// Input CSVs start with one header line.
    #[arg(long)]
    header: bool,
    /// Drop pool points whose nearest pool neighbor is at least this far
    /// away (single pass); writes `<out>.prune_map.csv`.
    #[arg(long)]
    prune: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
    /// Trace CSV path.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Benchmark a labeled CSV instead of a generator: each replication
    /// draws a fresh seed set from it and pools the rest.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-class seed counts for --csv replications.
    #[arg(long, value_parser = parse_usize_pair, default_value = "10,10")]
    per_class: (usize, usize),
    /// The --csv file starts with one header line.
    #[arg(long)]
    header: bool,
    #[command(flatten)]
    run: RunArgs,
    /// Also score a k-NN baseline with this k.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    /// Master seed; replication r uses the derived child seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<out>summary.json`, `<out>per_rep.csv`, and
    /// `<out>baseline_summary.json` when --k is given.
    #[arg(long)]
    out: PathBuf,
    /// Report all times as zero so outputs are byte-reproducible.
    #[arg(long)]
    no_times: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interior margin for the valley/covering regions; defaults to 2h.
    #[arg(long)]
    delta: Option<f64>,
    /// Report JSON path.
    #[arg(long, default_value = "diagnose.json")]
    out: PathBuf,
}

#[derive(Args)]
struct BayesArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Monte-Carlo sample size.
    #[arg(long, default_value_t = 1_000_000)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bayes.json")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate(args) => simulate(args),
        Cmd::Classify(args) => classify(args),
        Cmd::Bench(args) => bench(args),
        Cmd::Diagnose(args) => diagnose(args),
        Cmd::Bayes(args) => bayes(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let spec = args.gen.to_spec()?;
    let sample = spec.generate(args.seed)?;
    let (seed_path, pool_path) = write_split_csv(&sample, &args.out, !args.no_labels)?;
    println!("{}", seed_path.display());
    println!("{}", pool_path.display());
    Ok(())
}

fn classify(args: ClassifyArgs) -> anyhow::Result<()> {
    let opts = CsvOptions { header: args.header };
    let mut sample = load_split_csv(&args.seed_csv, &args.pool_csv, opts, args.pool_labeled)?;
    let mut printed = Vec::new();
    if let Some(threshold) = args.prune {
        let (reduced, kept) = prune_by_nn(&sample.pool, threshold)?;
        let map_path = append_suffix(&args.out, ".prune_map.csv");
        write_file(&map_path, &prune_map_csv(&kept))?;
        printed.push(map_path);
        let hidden = sample
            .hidden_labels
            .as_ref()
            .map(|h| kept.iter().map(|&i| h[i]).collect::<Vec<_>>());
        sample = SplitSample::new(sample.seed, reduced, hidden)
            .map_err(|e| anyhow!("pruning left an unusable pool: {e}"))?;
    }
    let cfg = args.run.to_config(0);
    let trace = run(&sample, &cfg)?;
    write_file(&args.out, &trace.to_csv())?;
    if let Some(hidden) = &sample.hidden_labels {
        let metrics_path = append_suffix(&args.out, ".metrics.json");
        write_json(
            &metrics_path,
            &serde_json::json!({
                "error": error_rate(&trace, hidden)?,
                "stalled_count": trace.stalled_count(),
                "steps": trace.stats.steps,
            }),
        )?;
        printed.push(metrics_path);
    }
    println!("{}", args.out.display());
    for p in printed {
        println!("{}", p.display());
    }
    Ok(())
}

fn append_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let source = match &args.csv {
        Some(path) => DataSource::Csv(CsvSource {
            path: path.clone(),
            per_class: args.per_class,
            header: args.header,
        }),
        None => DataSource::Generator(args.gen.to_spec()?),
    };
    let spec = ExperimentSpec {
        source,
        run: args.run.to_config(args.seed),
        replications: args.reps,
        baseline_k: args.k,
        master_seed: args.seed,
        measure_time: !args.no_times,
    };
    let result = run_experiment(&spec)?;
    let summary_path = append_suffix(&args.out, "summary.json");
    write_json(&summary_path, &result.algo.to_json())?;
    let per_rep_path = append_suffix(&args.out, "per_rep.csv");
    write_file(&per_rep_path, &per_rep_csv(&result.records, !args.no_times))?;
    println!("{}", summary_path.display());
    println!("{}", per_rep_path.display());
    if let Some(baseline) = &result.baseline {
        let baseline_path = append_suffix(&args.out, "baseline_summary.json");
        write_json(&baseline_path, &baseline.to_json())?;
        println!("{}", baseline_path.display());
    }
    Ok(())
}

fn bayes(args: BayesArgs) -> anyhow::Result<()> {
    let spec = args.gen.to_spec()?;
    let value = bayes_error(|p| spec.bayes(p), &spec, args.m, args.seed)?;
    write_json(
        &args.out,
        &serde_json::json!({
            "bayes_error": value,
            "m": args.m,
            "seed": args.seed,
        }),
    )?;
    println!("{}", args.out.display());
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> anyhow::Result<()> {
    let spec = args.gen.to_spec()?;
    let h = args.h;
    if !(h.is_finite() && h > 0.0) {
        bail!("--h must be positive");
    }
    let delta = args.delta.unwrap_or(2.0 * h);
    let sample = spec.generate(args.seed)?;
    let oracle = |p: &Point| spec.bayes(p);
    let support = |p: &Point| spec.in_support(p);

    let seeds = seed_check(&sample, oracle)?;
    let trace = run_sequential(&sample, &RunConfig::new(h))?;
    let audit = boundary_audit(&trace, &sample, oracle, support, h)?;

    // family geometry for region probes: box corners plus the interior
    // and border predicates
    type RegionSpec = (Vec<f64>, Vec<f64>, Box<dyn Fn(&Point) -> bool>, Box<dyn Fn(&Point) -> bool>);
    let (lower, upper, interior, border): RegionSpec = match &spec {
        GeneratorSpec::Sine(_) => {
            let interior = move |p: &Point| {
                let c = p.coords();
                c[0].abs() <= 1.0 - delta
                    && c[1].abs() <= 1.0 - delta
                    && sup_dist_to_curve(c[0], c[1]) > delta.max(SINE_SPLIT_DIST)
            };
            let border = move |p: &Point| {
                let c = p.coords();
                c[0].abs() <= 1.0 && c[1].abs() <= 1.0 && sup_dist_to_curve(c[0], c[1]) < h
            };
            (vec![-1.0, -1.0], vec![1.0, 1.0], Box::new(interior), Box::new(border))
        }
        GeneratorSpec::TruncGauss(params) => {
            let params = params.clone();
            let lower = vec![
                params.mu0[0].min(params.mu1[0]) - params.trunc_radius,
                params.mu0[1].min(params.mu1[1]) - params.trunc_radius,
            ];
            let upper = vec![
                params.mu0[0].max(params.mu1[0]) + params.trunc_radius,
                params.mu0[1].max(params.mu1[1]) + params.trunc_radius,
            ];
            let geom = move |p: &Point| {
                let c = p.coords();
                let d0 = ((c[0] - params.mu0[0]).powi(2) + (c[1] - params.mu0[1]).powi(2)).sqrt();
                let d1 = ((c[0] - params.mu1[0]).powi(2) + (c[1] - params.mu1[1]).powi(2)).sqrt();
                let gap =
                    ((params.mu0[0] - params.mu1[0]).powi(2) + (params.mu0[1] - params.mu1[1]).powi(2))
                        .sqrt();
                let to_bisector = (d0 * d0 - d1 * d1).abs() / (2.0 * gap);
                let to_edge = (params.trunc_radius - d0).max(params.trunc_radius - d1);
                (to_bisector, to_edge)
            };
            let g = geom;
            let interior = move |p: &Point| {
                let (bis, edge) = g(p);
                edge > delta && bis > delta
            };
            let border = move |p: &Point| {
                let (bis, edge) = geom(p);
                edge > 0.0 && bis < h
            };
            (lower, upper, Box::new(interior), Box::new(border))
        }
    };

    let step = h / 4.0;
    let members0: Vec<Point> = (0..sample.pool.len())
        .filter(|&i| oracle(sample.pool.get(i)).map(|y| y == Label::Zero).unwrap_or(false))
        .map(|i| sample.pool.get(i).clone())
        .collect();
    let members1: Vec<Point> = (0..sample.pool.len())
        .filter(|&i| oracle(sample.pool.get(i)).map(|y| y == Label::One).unwrap_or(false))
        .map(|i| sample.pool.get(i).clone())
        .collect();
    let cover = |members: Vec<Point>, class: Label| -> anyhow::Result<serde_json::Value> {
        let members = PointSet::new(members)
            .map_err(|e| anyhow!("class {} has no pool points: {e}", class.as_u8()))?;
        let region = |p: &Point| {
            support(p) && oracle(p).map(|y| y == class).unwrap_or(false)
        };
        let report = covering_check(&members, region, h, step, &lower, &upper)?;
        Ok(serde_json::to_value(&report)?)
    };
    let covering0 = cover(members0, Label::Zero)?;
    let covering1 = cover(members1, Label::One)?;

    let probes_a = probe_grid(&lower, &upper, step, |p| support(p) && interior(p))?;
    let probes_b = probe_grid(&lower, &upper, step, |p| border(p))?;
    let valley = valley_check(&sample.pool, &probes_a, &probes_b, h)?;

    write_json(
        &args.out,
        &serde_json::json!({
            "h": h,
            "delta": delta,
            "seed_check": serde_json::to_value(&seeds)?,
            "covering_0": covering0,
            "covering_1": covering1,
            "valley": serde_json::to_value(&valley)?,
            "boundary_audit": serde_json::to_value(&audit)?,
        }),
    )?;
    println!("{}", args.out.display());
    Ok(())
}
