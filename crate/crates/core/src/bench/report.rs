//! Report serialisation: one CSV row per (config, thread count), full JSON,
//! and a long-format table for plotting.

use std::io::Write;
use std::str::FromStr;

use super::BenchReport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 13] = [
    "family",
    "learned",
    "d",
    "n",
    "leafCapacity",
    "strategy",
    "threads",
    "buildMs",
    "footprintBytes",
    "avgLookupNs",
    "p50Ns",
    "p99Ns",
    "qps",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn write_csv<W: Write>(reports: &[BenchReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in reports {
        // a report without thread runs still gets a row, from the timed passes
        let fallback = [(1, if r.mean_pass_ns > 0.0 { r.queries as f64 * 1e9 / r.mean_pass_ns } else { 0.0 })];
        let rows: Vec<(usize, f64)> = if r.throughput.is_empty() {
            fallback.to_vec()
        } else {
            r.throughput.iter().map(|t| (t.threads, t.qps)).collect()
        };
        for (threads, qps) in rows {
            w.write_record([
                r.config.family.as_str().to_string(),
                r.config.learned.to_string(),
                r.dims.to_string(),
                r.n.to_string(),
                r.config.leaf_capacity.to_string(),
                r.config.strategy.as_str().to_string(),
                threads.to_string(),
                format!("{:.3}", r.build_ms),
                r.footprint_bytes.to_string(),
                format!("{:.2}", r.avg_lookup_ns),
                format!("{:.2}", r.p50_ns),
                format!("{:.2}", r.p99_ns),
                format!("{:.1}", qps),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: serde::Serialize + ?Sized>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Tidy table: `variant, family, learned, leafCapacity, threads, metric, value`.
/// Single-thread metrics carry `threads = 1`.
pub fn write_plot_data<W: Write>(reports: &[BenchReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variant", "family", "learned", "leafCapacity", "threads", "metric", "value"]).map_err(csv_err)?;
    for r in reports {
        let mut row = |threads: usize, metric: &str, value: f64| {
            w.write_record([
                r.variant.clone(),
                r.config.family.as_str().to_string(),
                r.config.learned.to_string(),
                r.config.leaf_capacity.to_string(),
                threads.to_string(),
                metric.to_string(),
                value.to_string(),
            ])
        };
        for (metric, value) in [
            ("buildMs", r.build_ms),
            ("partitionMs", r.partition_ms),
            ("leafBuildMs", r.leaf_build_ms),
            ("footprintBytes", r.footprint_bytes as f64),
            ("avgLookupNs", r.avg_lookup_ns),
            ("p50Ns", r.p50_ns),
            ("p99Ns", r.p99_ns),
        ] {
            row(1, metric, value).map_err(csv_err)?;
        }
        for t in &r.throughput {
            row(t.threads, "qps", t.qps).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{run_benchmark, BenchOptions};
    use crate::builders::{BuildConfig, Family};
    use crate::workload::{gen_point_queries, generate, Dataset, SyntheticKind};

    fn report() -> BenchReport {
        let ds = Dataset::new("u", generate::<2>(SyntheticKind::Uniform, 1000, 2).unwrap(), "");
        let wl = gen_point_queries(&ds, 100, 2).unwrap();
        let opts = BenchOptions { threads: vec![1, 4], repeats: 2, verify: false };
        run_benchmark(&ds, &BuildConfig::new(Family::RTree, true, 64), &wl, &opts).unwrap()
    }

    #[test]
    fn csv_has_one_row_per_thread_count() {
        let mut buf = Vec::new();
        write_csv(&[report()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("rtree,true,2,1000,64,binary,1,"));
        assert!(lines[2].starts_with("rtree,true,2,1000,64,binary,4,"));
    }

    #[test]
    fn json_carries_passes_and_stats() {
        let mut buf = Vec::new();
        write_json(&[report()], &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["passNs"].as_array().unwrap().len(), 2);
        assert!(v[0]["stats"]["leaves_visited"].as_u64().unwrap() >= 100);
        assert_eq!(v[0]["config"]["leaf_capacity"], 64);
    }

    #[test]
    fn plot_data_is_long_format() {
        let mut buf = Vec::new();
        write_plot_data(&[report()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 7 + 2);
        assert!(text.lines().all(|l| l.split(',').count() == 7));
    }

    #[test]
    fn formats_parse() {
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
