//! Measurement harness: lookup latency, batch throughput, footprint and
//! build-time accounting, and leaf-capacity sweeps.
//!
//! Timed loops run with [`NoStats`] and never allocate; access counters are
//! gathered in a separate untimed pass.

mod report;

use std::ops::Range;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use serde::Serialize;

pub use report::{write_csv, write_json, write_plot_data, ReportFormat};

use crate::builders::{build, BuildConfig, Family};
use crate::error::{Error, Result};
use crate::index::{Footprint, IndexTree};
use crate::leaf_model::SearchStrategy;
use crate::stats::{NoStats, Probe, QueryStats};
use crate::workload::{Dataset, Queries, QueryKind, Workload};

/// Queries per latency sample. Percentiles are taken over per-query averages
/// of these chunks, which keeps clock overhead out of the numbers.
pub const CHUNK: usize = 64;

/// Default sweep capacities, `2^1 ..= 2^15`.
pub fn default_capacities() -> Vec<usize> {
    (1..=15).map(|i| 1usize << i).collect()
}

/// Internal-node plus leaf-header bytes; record storage is excluded.
pub fn measure_footprint<const D: usize>(tree: &IndexTree<D>) -> usize {
    tree.footprint().total()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchOptions {
    pub threads: Vec<usize>,
    pub repeats: usize,
    /// Compare the result checksum against a linear scan (slow: `O(Q * N)`).
    pub verify: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { threads: vec![1], repeats: 3, verify: false }
    }
}

impl BenchOptions {
    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        if self.threads.contains(&0) {
            return Err(Error::Config("thread counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Throughput {
    pub threads: usize,
    /// Queries per second from the median batch wall time.
    pub qps: f64,
    pub wall_ns: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub variant: String,
    pub config: BuildConfig,
    pub dims: usize,
    pub n: usize,
    pub dataset: String,
    pub workload: String,
    pub kind: QueryKind,
    pub selectivity: Option<usize>,
    pub queries: usize,
    pub build_ms: f64,
    pub partition_ms: f64,
    pub leaf_build_ms: f64,
    pub footprint: Footprint,
    pub footprint_bytes: usize,
    pub avg_lookup_ns: f64,
    pub p50_ns: f64,
    pub p99_ns: f64,
    pub pass_ns: Vec<u64>,
    pub mean_pass_ns: f64,
    pub throughput: Vec<Throughput>,
    /// Order-independent hash of every returned id.
    pub checksum: u64,
    pub result_count: u64,
    pub stats: QueryStats,
    /// `Some(true)` when the checksum was confirmed against a scan.
    pub verified: Option<bool>,
}

impl BenchReport {
    pub fn family(&self) -> Family {
        self.config.family
    }

    pub fn learned(&self) -> bool {
        self.config.learned
    }

    pub fn leaf_capacity(&self) -> usize {
        self.config.leaf_capacity
    }

    pub fn qps(&self, threads: usize) -> Option<f64> {
        self.throughput.iter().find(|t| t.threads == threads).map(|t| t.qps)
    }
}

/// Running sum of hashed ids; addition commutes, so traversal order does not
/// matter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Checksum {
    pub count: u64,
    pub sum: u64,
}

impl Checksum {
    #[inline]
    pub fn add(&mut self, id: u32) {
        self.count += 1;
        self.sum = self.sum.wrapping_add(mix(id as u64));
    }

    pub fn merge(&mut self, other: Checksum) {
        self.count += other.count;
        self.sum = self.sum.wrapping_add(other.sum);
    }
}

// splitmix64 finaliser
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn run_span<const D: usize, P: Probe>(
    tree: &IndexTree<D>,
    queries: &Queries<D>,
    span: Range<usize>,
    probe: &mut P,
) -> Checksum {
    let mut acc = Checksum::default();
    match queries {
        Queries::Point(qs) => {
            for q in &qs[span] {
                tree.point_query_with(q, probe, |id| acc.add(id));
            }
        }
        Queries::Range(qs) => {
            for q in &qs[span] {
                tree.range_query_with(q, probe, |id| acc.add(id));
            }
        }
    }
    acc
}

/// Checksum of the exact answers, computed by scanning every point.
pub fn oracle_checksum<const D: usize>(ds: &Dataset<D>, workload: &Workload<D>) -> Checksum {
    let mut acc = Checksum::default();
    match &workload.queries {
        Queries::Point(qs) => {
            for q in qs {
                for (i, p) in ds.points.iter().enumerate() {
                    if p.same_as(q) {
                        acc.add(i as u32);
                    }
                }
            }
        }
        Queries::Range(qs) => {
            for q in qs {
                for (i, p) in ds.points.iter().enumerate() {
                    if q.contains(p) {
                        acc.add(i as u32);
                    }
                }
            }
        }
    }
    acc
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

fn median_u64(values: &[u64]) -> u64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[v.len() / 2]
}

/// Builds `cfg` over `ds` (ids are dataset positions) and benchmarks it.
pub fn run_benchmark<const D: usize>(
    ds: &Dataset<D>,
    cfg: &BuildConfig,
    workload: &Workload<D>,
    opts: &BenchOptions,
) -> Result<BenchReport> {
    let t0 = Instant::now();
    let tree = build(&ds.points, cfg)?;
    let build_time = t0.elapsed();
    let mut report = bench_tree(&tree, ds, workload, opts)?;
    report.build_ms = ms(build_time);
    Ok(report)
}

/// Benchmarks an already built tree. `build_ms` is taken from the tree's own
/// phase timings (zero for a loaded snapshot).
pub fn bench_tree<const D: usize>(
    tree: &IndexTree<D>,
    ds: &Dataset<D>,
    workload: &Workload<D>,
    opts: &BenchOptions,
) -> Result<BenchReport> {
    opts.validate()?;
    let cfg = *tree.config();
    let q = workload.len();
    let queries = &workload.queries;

    // warm-up, also the reference checksum
    let reference = run_span(tree, queries, 0..q, &mut NoStats);

    let chunks = q.div_ceil(CHUNK);
    let mut samples = Vec::with_capacity(chunks * opts.repeats);
    let mut pass_ns = Vec::with_capacity(opts.repeats);
    for _ in 0..opts.repeats {
        let mut pass = Duration::ZERO;
        let mut acc = Checksum::default();
        for start in (0..q).step_by(CHUNK) {
            let end = (start + CHUNK).min(q);
            let t = Instant::now();
            let got = run_span(tree, queries, start..end, &mut NoStats);
            let dt = t.elapsed();
            acc.merge(std::hint::black_box(got));
            pass += dt;
            samples.push(dt.as_nanos() as f64 / (end - start) as f64);
        }
        debug_assert_eq!(acc, reference);
        pass_ns.push(pass.as_nanos() as u64);
    }
    samples.sort_by(f64::total_cmp);
    let mean_pass_ns = pass_ns.iter().sum::<u64>() as f64 / pass_ns.len() as f64;

    let mut throughput = Vec::with_capacity(opts.threads.len());
    for &t in &opts.threads {
        let mut walls = Vec::with_capacity(opts.repeats);
        for _ in 0..opts.repeats {
            let (wall, acc) = timed_batch(tree, queries, t);
            if acc != reference {
                return Err(Error::Format(format!("checksum changed under {t} threads")));
            }
            walls.push(wall.as_nanos() as u64);
        }
        let median = median_u64(&walls).max(1);
        throughput.push(Throughput { threads: t, qps: q as f64 * 1e9 / median as f64, wall_ns: walls });
    }

    let mut stats = QueryStats::default();
    run_span(tree, queries, 0..q, &mut stats);

    let verified = opts.verify.then(|| oracle_checksum(ds, workload) == reference);
    let timing = tree.build_timing();
    let footprint = tree.footprint();
    Ok(BenchReport {
        variant: cfg.variant_name(D),
        config: cfg,
        dims: D,
        n: tree.len(),
        dataset: if ds.source.is_empty() { ds.name.clone() } else { format!("{} ({})", ds.name, ds.source) },
        workload: workload.describe(),
        kind: workload.kind(),
        selectivity: workload.selectivity,
        queries: q,
        build_ms: ms(timing.total()),
        partition_ms: ms(timing.partition),
        leaf_build_ms: ms(timing.leaves),
        footprint,
        footprint_bytes: footprint.total(),
        avg_lookup_ns: if q == 0 { 0.0 } else { mean_pass_ns / q as f64 },
        p50_ns: percentile(&samples, 0.50),
        p99_ns: percentile(&samples, 0.99),
        pass_ns,
        mean_pass_ns,
        throughput,
        checksum: reference.sum,
        result_count: reference.count,
        stats,
        verified,
    })
}

/// Splits the batch evenly over `threads` workers and times the whole batch
/// from a common start barrier to the last join.
fn timed_batch<const D: usize>(tree: &IndexTree<D>, queries: &Queries<D>, threads: usize) -> (Duration, Checksum) {
    let q = match queries {
        Queries::Point(v) => v.len(),
        Queries::Range(v) => v.len(),
    };
    let barrier = Barrier::new(threads + 1);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|i| {
                let span = (q * i / threads)..(q * (i + 1) / threads);
                let barrier = &barrier;
                s.spawn(move || {
                    barrier.wait();
                    run_span(tree, queries, span, &mut NoStats)
                })
            })
            .collect();
        barrier.wait();
        let start = Instant::now();
        let mut acc = Checksum::default();
        for h in handles {
            acc.merge(h.join().expect("benchmark worker panicked"));
        }
        (start.elapsed(), acc)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepPlan {
    pub capacities: Vec<usize>,
    pub families: Vec<Family>,
    pub learned: Vec<bool>,
    pub threads: Vec<usize>,
    pub repeats: usize,
    pub strategy: SearchStrategy,
    /// Fixed R-tree fanout; `None` ties it to the leaf capacity.
    pub internal_fanout: Option<usize>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            capacities: default_capacities(),
            families: Family::ALL.to_vec(),
            learned: vec![false, true],
            threads: vec![1],
            repeats: 3,
            strategy: SearchStrategy::Binary,
            internal_fanout: None,
        }
    }
}

impl SweepPlan {
    pub fn configs(&self) -> Vec<BuildConfig> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &learned in &self.learned {
                for &c in &self.capacities {
                    let mut cfg = BuildConfig::new(family, learned, c).with_strategy(self.strategy);
                    cfg.internal_fanout = self.internal_fanout;
                    out.push(cfg);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BestCapacity {
    pub family: Family,
    pub learned: bool,
    pub leaf_capacity: usize,
    pub avg_lookup_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub reports: Vec<BenchReport>,
    pub best: Vec<BestCapacity>,
}

pub fn run_sweep<const D: usize>(ds: &Dataset<D>, plan: &SweepPlan, workload: &Workload<D>) -> Result<Sweep> {
    let configs = plan.configs();
    if configs.is_empty() {
        return Err(Error::Config("sweep needs at least one family, learned flag and capacity".into()));
    }
    let opts = BenchOptions { threads: plan.threads.clone(), repeats: plan.repeats, verify: false };
    let reports = configs
        .iter()
        .map(|cfg| run_benchmark(ds, cfg, workload, &opts))
        .collect::<Result<Vec<_>>>()?;
    let best = best_capacities(&reports);
    Ok(Sweep { reports, best })
}

/// Lowest-latency capacity per (family, learned) pair, in first-seen order.
/// Ties keep the smaller capacity.
pub fn best_capacities(reports: &[BenchReport]) -> Vec<BestCapacity> {
    let mut best: Vec<BestCapacity> = Vec::new();
    for r in reports {
        let cand = BestCapacity {
            family: r.family(),
            learned: r.learned(),
            leaf_capacity: r.leaf_capacity(),
            avg_lookup_ns: r.avg_lookup_ns,
        };
        match best.iter_mut().find(|b| b.family == cand.family && b.learned == cand.learned) {
            Some(b) => {
                let better = cand.avg_lookup_ns < b.avg_lookup_ns
                    || (cand.avg_lookup_ns == b.avg_lookup_ns && cand.leaf_capacity < b.leaf_capacity);
                if better {
                    *b = cand;
                }
            }
            None => best.push(cand),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{gen_point_queries, gen_range_queries, generate, SyntheticKind};

    fn dataset(n: usize) -> Dataset<2> {
        Dataset::new("skewed", generate::<2>(SyntheticKind::Skewed, n, 11).unwrap(), "synthetic")
    }

    #[test]
    fn single_leaf_footprint_is_header_only() {
        let ds = dataset(100);
        let tree = build(&ds.points, &BuildConfig::new(Family::RTree, true, 128)).unwrap();
        assert_eq!(measure_footprint(&tree), std::mem::size_of::<crate::LeafHeader>());
        let plain = build(&ds.points, &BuildConfig::new(Family::KdTree, false, 128)).unwrap();
        assert_eq!(measure_footprint(&plain), 8);
    }

    #[test]
    fn footprint_shrinks_with_capacity() {
        let ds = dataset(20_000);
        for family in Family::ALL {
            for learned in [false, true] {
                let mut last = usize::MAX;
                for c in default_capacities() {
                    let tree = build(&ds.points, &BuildConfig::new(family, learned, c)).unwrap();
                    let fp = tree.footprint().internal_bytes;
                    assert!(fp <= last, "{family} learned={learned} c={c}: {fp} > {last}");
                    assert_eq!(fp, build(&ds.points, tree.config()).unwrap().footprint().internal_bytes);
                    last = fp;
                }
            }
        }
    }

    #[test]
    fn plain_and_learned_agree_with_the_scan() {
        let ds = dataset(5_000);
        let points = gen_point_queries(&ds, 500, 3).unwrap();
        let ranges = gen_range_queries(&ds, 100, 50, 3).unwrap();
        let opts = BenchOptions { threads: vec![1, 2], repeats: 3, verify: true };
        for wl in [&points, &ranges] {
            let mut sums = Vec::new();
            for family in Family::ALL {
                for learned in [false, true] {
                    let r = run_benchmark(&ds, &BuildConfig::new(family, learned, 64), wl, &opts).unwrap();
                    assert_eq!(r.verified, Some(true), "{}", r.variant);
                    assert_eq!(r.pass_ns.len(), 3);
                    let mean = r.pass_ns.iter().sum::<u64>() as f64 / 3.0;
                    assert!((r.mean_pass_ns - mean).abs() < 1e-6);
                    assert_eq!(r.throughput.len(), 2);
                    assert!(r.p50_ns <= r.p99_ns);
                    sums.push((r.checksum, r.result_count));
                }
            }
            assert!(sums.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn stats_are_gathered_outside_timing() {
        let ds = dataset(5_000);
        let wl = gen_point_queries(&ds, 200, 5).unwrap();
        let r = run_benchmark(&ds, &BuildConfig::new(Family::RTree, true, 256), &wl, &BenchOptions::default()).unwrap();
        assert!(r.stats.leaves_visited >= 200);
        assert_eq!(r.result_count, 200 + duplicates(&ds, &wl));
    }

    fn duplicates(ds: &Dataset<2>, wl: &Workload<2>) -> u64 {
        oracle_checksum(ds, wl).count - wl.len() as u64
    }

    #[test]
    fn sweep_shape_and_order_independence() {
        let ds = dataset(4_000);
        let wl = gen_point_queries(&ds, 300, 9).unwrap();
        let plan = SweepPlan {
            capacities: vec![8, 64, 512],
            families: vec![Family::RTree, Family::QuadOctree],
            repeats: 1,
            ..SweepPlan::default()
        };
        let sweep = run_sweep(&ds, &plan, &wl).unwrap();
        assert_eq!(sweep.reports.len(), 12);
        assert_eq!(sweep.best.len(), 4);

        let mut reversed = plan.clone();
        reversed.capacities.reverse();
        reversed.families.reverse();
        let again = run_sweep(&ds, &reversed, &wl).unwrap();
        for r in &sweep.reports {
            let twin = again.reports.iter().find(|o| o.config == r.config).unwrap();
            assert_eq!((twin.checksum, twin.footprint_bytes, twin.n), (r.checksum, r.footprint_bytes, r.n));
            assert_eq!(twin.stats, r.stats);
        }

        let one = SweepPlan { capacities: vec![32], families: vec![Family::KdTree], learned: vec![true], ..plan };
        assert_eq!(run_sweep(&ds, &one, &wl).unwrap().reports.len(), 1);
        let empty = SweepPlan { capacities: vec![], ..SweepPlan::default() };
        assert!(run_sweep(&ds, &empty, &wl).is_err());
    }

    #[test]
    fn best_capacity_picks_the_minimum() {
        let ds = dataset(1_000);
        let wl = gen_point_queries(&ds, 10, 1).unwrap();
        let base = run_benchmark(&ds, &BuildConfig::new(Family::RTree, false, 16), &wl, &BenchOptions::default()).unwrap();
        let mut reports = Vec::new();
        for (c, ns) in [(16, 50.0), (32, 40.0), (64, 40.0), (128, 70.0)] {
            let mut r = base.clone();
            r.config.leaf_capacity = c;
            r.avg_lookup_ns = ns;
            reports.push(r);
        }
        let best = best_capacities(&reports);
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].leaf_capacity, 32);
    }

    #[test]
    fn options_are_validated() {
        let ds = dataset(100);
        let wl = gen_point_queries(&ds, 10, 1).unwrap();
        let cfg = BuildConfig::new(Family::RTree, false, 16);
        let bad = BenchOptions { repeats: 0, ..BenchOptions::default() };
        assert!(run_benchmark(&ds, &cfg, &wl, &bad).is_err());
        let bad = BenchOptions { threads: vec![0], ..BenchOptions::default() };
        assert!(run_benchmark(&ds, &cfg, &wl, &bad).is_err());
    }

    #[test]
    fn percentiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.5), 51.0);
        assert_eq!(percentile(&v, 0.99), 99.0);
        assert_eq!(percentile(&[], 0.5), 0.0);
    }
}
