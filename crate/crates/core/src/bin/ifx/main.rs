//! `ifx` command-line tool.
//!
//! Exit status: 0 on success, 1 on runtime or IO failure, 2 on usage or
//! configuration errors.

mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{BenchArgs, BuildArgs, Cli, Command, DataArgs, Format, GenDataArgs, GenWorkloadArgs, IndexArgs, Kind, QueryArgs, ReportArgs, SweepArgs, Variant, WorkloadArgs};
use ifx_core::bench::{self, BenchOptions, BenchReport, SweepPlan};
use ifx_core::workload::{self, Dataset, LoadOptions, Queries, Sampling, SyntheticKind, Workload};
use ifx_core::{snapshot, AnyIndex, BuildConfig, Family, IndexTree, Point, QueryResult, SearchStrategy};

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<ifx_core::Error> for Failure {
    fn from(e: ifx_core::Error) -> Self {
        use ifx_core::Error as E;
        match e {
            E::Config(_) | E::UnsupportedDims(_) | E::Selectivity { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Calls `$f::<D>(args..)` for the supported dimensionalities.
macro_rules! dispatch {
    ($dims:expr, $f:ident($($arg:expr),*)) => {
        match $dims {
            2 => $f::<2>($($arg),*),
            3 => $f::<3>($($arg),*),
            d => Err(usage(format!("unsupported dimensionality {d}; expected 2 or 3"))),
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(a) => dispatch!(a.data.dims, cmd_build(&a)),
        Command::Query(a) => cmd_query(&a),
        Command::Bench(a) => dispatch!(a.data.dims, cmd_bench(&a)),
        Command::Sweep(a) => dispatch!(a.data.dims, cmd_sweep(&a)),
        Command::GenWorkload(a) => dispatch!(a.data.dims, cmd_gen_workload(&a)),
        Command::GenData(a) => dispatch!(a.dims, cmd_gen_data(&a)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn require_seed(seed: Option<u64>, why: &str) -> CliResult<u64> {
    seed.ok_or_else(|| usage(format!("--seed is required {why}")))
}

fn load_data<const D: usize>(a: &DataArgs, seed: Option<u64>) -> CliResult<Dataset<D>> {
    let sampling = if a.reservoir {
        Sampling::Reservoir { seed: require_seed(seed, "with --reservoir")? }
    } else {
        Sampling::Prefix
    };
    let opts = LoadOptions {
        format: a.input_format.as_deref().map(str::parse).transpose()?,
        limit: a.limit,
        sampling,
        strict: a.strict,
    };
    let ds = workload::load_dataset::<D>(&a.data, &opts)?;
    if ds.rejected > 0 {
        eprintln!("skipped {} records with non-finite coordinates", ds.rejected);
    }
    Ok(ds)
}

fn index_config(a: &IndexArgs, dims: usize) -> CliResult<BuildConfig> {
    let mut cfg = BuildConfig::new(a.family.parse::<Family>()?, a.learned, a.leaf_capacity)
        .with_strategy(a.strategy.parse::<SearchStrategy>()?)
        .with_parallel(a.parallel);
    cfg.internal_fanout = a.fanout;
    if let Some(depth) = a.max_depth {
        cfg = cfg.with_max_depth(depth);
    }
    cfg.validate(dims)?;
    Ok(cfg)
}

fn build_tree<const D: usize>(ds: &Dataset<D>, cfg: &BuildConfig) -> CliResult<(IndexTree<D>, f64)> {
    let t = Instant::now();
    let tree = ifx_core::build(&ds.points, cfg)?;
    Ok((tree, t.elapsed().as_secs_f64() * 1e3))
}

fn cmd_build<const D: usize>(a: &BuildArgs) -> CliResult {
    let cfg = index_config(&a.index, D)?;
    let ds = load_data::<D>(&a.data, a.seed)?;
    let (tree, ms) = build_tree(&ds, &cfg)?;
    let timing = tree.build_timing();
    let fp = tree.footprint();
    println!(
        "built {} over {} points (d={}, leaf capacity {}) in {:.2} ms (partition {:.2} ms, leaves {:.2} ms)",
        cfg.variant_name(D),
        tree.len(),
        D,
        cfg.leaf_capacity,
        ms,
        timing.partition.as_secs_f64() * 1e3,
        timing.leaves.as_secs_f64() * 1e3,
    );
    println!(
        "footprint {} bytes (internal nodes {}, leaf headers {}); {} leaves, {} internal nodes",
        fp.total(),
        fp.internal_bytes,
        fp.leaf_header_bytes,
        tree.leaves().len(),
        tree.internals().node_count(),
    );
    if let Some(path) = &a.snapshot {
        snapshot::save(&tree, path)?;
        println!("snapshot written to {}", path.display());
    }
    Ok(())
}

fn parse_coords(s: &str, what: &str) -> CliResult<Vec<f32>> {
    s.split(',')
        .map(|t| t.trim().parse::<f32>().map_err(|_| usage(format!("bad {what} coordinate `{t}` in `{s}`"))))
        .collect()
}

fn cmd_query(a: &QueryArgs) -> CliResult {
    let index = match (&a.snapshot, &a.data) {
        (Some(path), _) => AnyIndex::load(path)?,
        (None, Some(data)) => {
            let data_args = DataArgs {
                data: data.clone(),
                dims: a.dims,
                input_format: a.input_format.clone(),
                limit: None,
                reservoir: false,
                strict: false,
            };
            dispatch!(a.dims, build_any(&data_args, &a.index))?
        }
        (None, None) => unreachable!("clap enforces a source"),
    };

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    if let Some(p) = &a.point {
        let q = parse_coords(p, "point")?;
        print_result(&mut out, &index.point_query(&q)?, a.count_only)?;
    }
    if let Some(r) = &a.range {
        let (lo, hi) = r.split_once(':').ok_or_else(|| usage(format!("range `{r}` must look like lo,lo:hi,hi")))?;
        let (lo, hi) = (parse_coords(lo, "range")?, parse_coords(hi, "range")?);
        print_result(&mut out, &index.range_query(&lo, &hi)?, a.count_only)?;
    }
    if let Some(path) = &a.workload {
        match &index {
            AnyIndex::D2(t) => replay(t, path, a.count_only, &mut out)?,
            AnyIndex::D3(t) => replay(t, path, a.count_only, &mut out)?,
        }
    }
    out.flush()?;
    Ok(())
}

fn build_any<const D: usize>(data: &DataArgs, index: &IndexArgs) -> CliResult<AnyIndex>
where
    AnyIndex: From<IndexTree<D>>,
{
    let cfg = index_config(index, D)?;
    let ds = load_data::<D>(data, None)?;
    Ok(build_tree(&ds, &cfg)?.0.into())
}

fn replay<const D: usize>(tree: &IndexTree<D>, path: &Path, count_only: bool, out: &mut impl Write) -> CliResult {
    let wl = workload::read_workload::<D>(path)?;
    match &wl.queries {
        Queries::Point(qs) => {
            for q in qs {
                print_result(out, &tree.point_query(q), count_only)?;
            }
        }
        Queries::Range(qs) => {
            for q in qs {
                print_result(out, &tree.range_query(q), count_only)?;
            }
        }
    }
    Ok(())
}

fn print_result(out: &mut impl Write, r: &QueryResult, count_only: bool) -> io::Result<()> {
    if count_only {
        return writeln!(out, "{}", r.ids.len());
    }
    let mut first = true;
    for id in &r.ids {
        if !first {
            out.write_all(b" ")?;
        }
        write!(out, "{id}")?;
        first = false;
    }
    writeln!(out)
}

fn make_workload<const D: usize>(ds: &Dataset<D>, a: &WorkloadArgs, seed: Option<u64>) -> CliResult<Workload<D>> {
    if let Some(path) = &a.workload {
        return Ok(workload::read_workload::<D>(path)?);
    }
    let seed = require_seed(seed, "to generate queries")?;
    Ok(match a.kind {
        Kind::Point => workload::gen_point_queries(ds, a.query_count(), seed)?,
        Kind::Range => workload::gen_range_queries(ds, a.sigma, a.query_count(), seed)?,
    })
}

fn bench_options(r: &ReportArgs, verify: bool) -> BenchOptions {
    BenchOptions { threads: r.threads.clone(), repeats: r.repeats, verify }
}

fn summary(r: &BenchReport) -> String {
    let mut line = format!(
        "{:<12} c={:<6} avg {:>9.1} ns  p50 {:>9.1} ns  p99 {:>9.1} ns  build {:>9.2} ms  footprint {:>10} B",
        r.variant, r.config.leaf_capacity, r.avg_lookup_ns, r.p50_ns, r.p99_ns, r.build_ms, r.footprint_bytes
    );
    for t in &r.throughput {
        line += &format!("  {}t {:.0} q/s", t.threads, t.qps);
    }
    line
}

fn write_reports<T: serde::Serialize + ?Sized>(r: &ReportArgs, reports: &[BenchReport], json: &T) -> CliResult {
    if let Some(path) = &r.out {
        let file = BufWriter::new(File::create(path)?);
        match r.format {
            Format::Csv => bench::write_csv(reports, file)?,
            Format::Json => bench::write_json(json, file)?,
        }
        println!("report written to {}", path.display());
    }
    if let Some(path) = &r.plot_data {
        bench::write_plot_data(reports, BufWriter::new(File::create(path)?))?;
        println!("plot data written to {}", path.display());
    }
    Ok(())
}

fn cmd_bench<const D: usize>(a: &BenchArgs) -> CliResult {
    let cfg = index_config(&a.index, D)?;
    let ds = load_data::<D>(&a.data, a.seed)?;
    let wl = make_workload(&ds, &a.workload, a.seed)?;
    let opts = bench_options(&a.report, a.verify);
    let report = match &a.snapshot {
        Some(path) => {
            let tree = snapshot::load::<D>(path)?;
            if tree.len() != ds.len() {
                return Err(Failure::Runtime(anyhow::anyhow!(
                    "snapshot holds {} records but the dataset has {}",
                    tree.len(),
                    ds.len()
                )));
            }
            bench::bench_tree(&tree, &ds, &wl, &opts)?
        }
        None => bench::run_benchmark(&ds, &cfg, &wl, &opts)?,
    };
    println!("{} on {} points, {}", report.variant, report.n, report.workload);
    println!("{}", summary(&report));
    println!("checksum {:016x} over {} results", report.checksum, report.result_count);
    if report.verified == Some(false) {
        return Err(Failure::Runtime(anyhow::anyhow!("results differ from a linear scan")));
    }
    if report.verified == Some(true) {
        println!("results match a linear scan");
    }
    let reports = [report];
    write_reports(&a.report, &reports, &reports[..])
}

fn cmd_sweep<const D: usize>(a: &SweepArgs) -> CliResult {
    let plan = SweepPlan {
        capacities: if a.capacities.is_empty() { bench::default_capacities() } else { a.capacities.clone() },
        families: a.families.iter().map(|f| f.parse()).collect::<Result<_, _>>()?,
        learned: a.variants.iter().map(|v| *v == Variant::Learned).collect(),
        threads: a.report.threads.clone(),
        repeats: a.report.repeats,
        strategy: a.strategy.parse()?,
        internal_fanout: a.fanout,
    };
    let configs = plan.configs();
    if configs.is_empty() {
        return Err(usage("nothing to sweep"));
    }
    for cfg in &configs {
        cfg.validate(D)?;
    }
    let ds = load_data::<D>(&a.data, a.seed)?;
    let wl = make_workload(&ds, &a.workload, a.seed)?;
    println!("sweeping {} configurations on {} points, {}", configs.len(), ds.len(), wl.describe());
    let opts = bench_options(&a.report, false);
    let mut reports = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let r = bench::run_benchmark(&ds, cfg, &wl, &opts)?;
        println!("{}", summary(&r));
        reports.push(r);
    }
    let best = bench::best_capacities(&reports);
    println!("best leaf capacity:");
    for b in &best {
        println!("  {:<12} {:>6}  ({:.1} ns)", b.family.variant_name(b.learned, D), b.leaf_capacity, b.avg_lookup_ns);
    }
    let sweep = bench::Sweep { reports, best };
    write_reports(&a.report, &sweep.reports, &sweep)
}

fn cmd_gen_workload<const D: usize>(a: &GenWorkloadArgs) -> CliResult {
    let seed = require_seed(a.seed, "to generate queries")?;
    let ds = load_data::<D>(&a.data, Some(seed))?;
    let n = a.queries.unwrap_or(args::default_queries(a.kind));
    let wl = match a.kind {
        Kind::Point => workload::gen_point_queries(&ds, n, seed)?,
        Kind::Range => workload::gen_range_queries(&ds, a.sigma, n, seed)?,
    };
    workload::write_workload(&a.out, &wl)?;
    println!("wrote {} to {}", wl.describe(), a.out.display());
    Ok(())
}

fn cmd_gen_data<const D: usize>(a: &GenDataArgs) -> CliResult {
    let seed = require_seed(a.seed, "to generate data")?;
    let kind: SyntheticKind = a.distribution.parse()?;
    let points: Vec<Point<D>> = workload::generate(kind, a.n, seed)?;
    match a.out.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("txt") => workload::write_csv(&a.out, &points)?,
        Some("ifxd") => workload::write_container(&a.out, &points)?,
        _ => workload::write_raw(&a.out, &points)?,
    }
    println!("wrote {} {} points (d={}) to {}", points.len(), kind.as_str(), D, a.out.display());
    Ok(())
}
