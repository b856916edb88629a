//! Dataset and workload files.
//!
//! * CSV: one point per line, `D` comma-separated decimals, optional header.
//! * Raw: bare little-endian `f32`s, `D` per record.
//! * Container: `"IFXD"`, version `u8`, dims `u8`, count `u64`, then the
//!   coordinates as little-endian `f32`s.
//! * Workload: `"IFXW"`, version `u8`, dims `u8`, kind `u8` (0 point, 1 range),
//!   a zero byte, selectivity `u32` (0 if none), seed `u64`, count `u64`, then
//!   `D` floats per point query or `2D` floats (lower corner, upper corner)
//!   per range query.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Queries, Workload};
use crate::error::{Error, Result};
use crate::geometry::{Mbr, Point, RangeQuery};

pub const DATA_MAGIC: &[u8; 4] = b"IFXD";
pub const WORKLOAD_MAGIC: &[u8; 4] = b"IFXW";
const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Raw,
    Container,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "raw" | "bin" => Ok(DataFormat::Raw),
            "ifxd" | "container" => Ok(DataFormat::Container),
            other => Err(Error::Config(format!("unknown data format `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Sampling {
    /// Keep the first `limit` records.
    #[default]
    Prefix,
    /// Uniform sample of `limit` records, reproducible from the seed.
    Reservoir { seed: u64 },
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Detected from the file contents and extension when `None`.
    pub format: Option<DataFormat>,
    pub limit: Option<usize>,
    pub sampling: Sampling,
    /// Fail when fewer than `limit` records are available.
    pub strict: bool,
}

fn detect_format(path: &Path, head: &[u8]) -> DataFormat {
    if head.starts_with(DATA_MAGIC) {
        return DataFormat::Container;
    }
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") | Some("txt") => DataFormat::Csv,
        _ => DataFormat::Raw,
    }
}

/// Collects records through the sampling policy.
struct Sampler<const D: usize> {
    limit: Option<usize>,
    sampling: Sampling,
    rng: Option<ChaCha8Rng>,
    seen: usize,
    kept: Vec<Point<D>>,
    rejected: usize,
}

impl<const D: usize> Sampler<D> {
    fn new(opts: &LoadOptions) -> Self {
        let rng = match opts.sampling {
            Sampling::Reservoir { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            Sampling::Prefix => None,
        };
        Sampler { limit: opts.limit, sampling: opts.sampling, rng, seen: 0, kept: Vec::new(), rejected: 0 }
    }

    /// Returns false once no further records can be kept.
    fn offer(&mut self, coords: [f32; D]) -> bool {
        let p = match Point::new(coords) {
            Ok(p) => p,
            Err(_) => {
                self.rejected += 1;
                return true;
            }
        };
        self.seen += 1;
        match (self.limit, self.sampling) {
            (None, _) => self.kept.push(p),
            (Some(limit), Sampling::Prefix) => {
                if self.kept.len() < limit {
                    self.kept.push(p);
                }
                return self.kept.len() < limit;
            }
            (Some(limit), Sampling::Reservoir { .. }) => {
                if self.kept.len() < limit {
                    self.kept.push(p);
                } else {
                    let j = self.rng.as_mut().expect("reservoir rng").gen_range(0..self.seen);
                    if j < limit {
                        self.kept[j] = p;
                    }
                }
            }
        }
        true
    }

    fn finish(self, path: &Path, strict: bool) -> Result<Dataset<D>> {
        if let Some(limit) = self.limit {
            if strict && self.kept.len() < limit {
                return Err(Error::NotEnoughRecords { requested: limit, available: self.kept.len() });
            }
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
        let mut ds = Dataset::new(name, self.kept, path.display().to_string());
        ds.rejected = self.rejected;
        Ok(ds)
    }
}

/// Reads a dataset of `D`-dimensional points.
///
/// Rows with NaN or infinite coordinates are skipped and counted in
/// [`Dataset::rejected`]; rows that do not parse are an error.
pub fn load_dataset<const D: usize>(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset<D>> {
    let path = path.as_ref();
    let mut file = BufReader::new(File::open(path)?);
    let mut head = [0u8; 4];
    let head_len = read_up_to(&mut file, &mut head)?;
    let format = opts.format.unwrap_or_else(|| detect_format(path, &head[..head_len]));
    let reader = head[..head_len].chain(file);
    let mut sampler = Sampler::<D>::new(opts);
    match format {
        DataFormat::Csv => read_csv(reader, &mut sampler)?,
        DataFormat::Raw => read_floats(reader, &mut sampler, None)?,
        DataFormat::Container => {
            let mut reader = reader;
            let mut header = [0u8; 14];
            reader.read_exact(&mut header).map_err(|_| Error::Format("truncated IFXD header".into()))?;
            if &header[..4] != DATA_MAGIC {
                return Err(Error::Format("missing IFXD magic".into()));
            }
            if header[4] != VERSION {
                return Err(Error::Format(format!("unsupported IFXD version {}", header[4])));
            }
            if header[5] as usize != D {
                return Err(Error::DimensionMismatch { expected: D, got: header[5] as usize });
            }
            let count = u64::from_le_bytes(header[6..14].try_into().unwrap());
            read_floats(reader, &mut sampler, Some(count))?;
        }
    }
    sampler.finish(path, opts.strict)
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

fn read_csv<const D: usize>(reader: impl Read, sampler: &mut Sampler<D>) -> Result<()> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = csv.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f32>, _> = record.iter().map(str::parse::<f32>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err(Error::Parse { line, message: format!("bad number: {e}") }),
        };
        first = false;
        if values.len() != D {
            return Err(Error::Parse { line, message: format!("expected {D} fields, found {}", values.len()) });
        }
        if !sampler.offer(values.try_into().unwrap()) {
            break;
        }
    }
    Ok(())
}

fn read_floats<const D: usize>(mut reader: impl Read, sampler: &mut Sampler<D>, expected: Option<u64>) -> Result<()> {
    let mut buf = vec![0u8; 4 * D];
    let mut records = 0u64;
    loop {
        if expected == Some(records) {
            break;
        }
        let n = read_up_to(&mut reader, &mut buf)?;
        if n == 0 && expected.is_none() {
            break;
        }
        if n < buf.len() {
            return Err(Error::Format(format!("truncated record {records}")));
        }
        let mut coords = [0f32; D];
        for (k, c) in coords.iter_mut().enumerate() {
            *c = f32::from_le_bytes(buf[4 * k..4 * k + 4].try_into().unwrap());
        }
        records += 1;
        if !sampler.offer(coords) {
            break;
        }
    }
    Ok(())
}

pub fn write_csv<const D: usize>(path: impl AsRef<Path>, points: &[Point<D>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in points {
        let line: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw<const D: usize>(path: impl AsRef<Path>, points: &[Point<D>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_points(&mut w, points)?;
    w.flush()?;
    Ok(())
}

pub fn write_container<const D: usize>(path: impl AsRef<Path>, points: &[Point<D>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DATA_MAGIC)?;
    w.write_all(&[VERSION, D as u8])?;
    w.write_all(&(points.len() as u64).to_le_bytes())?;
    write_points(&mut w, points)?;
    w.flush()?;
    Ok(())
}

fn write_points<const D: usize>(w: &mut impl Write, points: &[Point<D>]) -> Result<()> {
    for p in points {
        for c in p.coords() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_workload<const D: usize>(path: impl AsRef<Path>, workload: &Workload<D>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let kind = match workload.queries {
        Queries::Point(_) => 0u8,
        Queries::Range(_) => 1u8,
    };
    w.write_all(WORKLOAD_MAGIC)?;
    w.write_all(&[VERSION, D as u8, kind, 0])?;
    let sigma = u32::try_from(workload.selectivity.unwrap_or(0))
        .map_err(|_| Error::Config("selectivity exceeds u32".into()))?;
    w.write_all(&sigma.to_le_bytes())?;
    w.write_all(&workload.seed.to_le_bytes())?;
    w.write_all(&(workload.len() as u64).to_le_bytes())?;
    match &workload.queries {
        Queries::Point(points) => write_points(&mut w, points)?,
        Queries::Range(boxes) => {
            for b in boxes {
                for c in b.as_mbr().lo().iter().chain(b.as_mbr().hi()) {
                    w.write_all(&c.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_workload<const D: usize>(path: impl AsRef<Path>) -> Result<Workload<D>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 28];
    r.read_exact(&mut header).map_err(|_| Error::Format("truncated IFXW header".into()))?;
    if &header[..4] != WORKLOAD_MAGIC {
        return Err(Error::Format("missing IFXW magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!("unsupported IFXW version {}", header[4])));
    }
    if header[5] as usize != D {
        return Err(Error::DimensionMismatch { expected: D, got: header[5] as usize });
    }
    let kind = header[6];
    let sigma = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let seed = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let count = u64::from_le_bytes(header[20..28].try_into().unwrap()) as usize;
    let width = if kind == 0 { D } else { 2 * D };
    let mut buf = vec![0u8; 4 * width];
    let mut floats = vec![0f32; width];
    let mut next = |r: &mut BufReader<File>, floats: &mut [f32], i: usize| -> Result<()> {
        r.read_exact(&mut buf).map_err(|_| Error::Format(format!("truncated query {i}")))?;
        for (k, f) in floats.iter_mut().enumerate() {
            *f = f32::from_le_bytes(buf[4 * k..4 * k + 4].try_into().unwrap());
        }
        Ok(())
    };
    let queries = match kind {
        0 => {
            let mut v = Vec::with_capacity(count);
            for i in 0..count {
                next(&mut r, &mut floats, i)?;
                v.push(Point::from_slice(&floats)?);
            }
            Queries::Point(v)
        }
        1 => {
            let mut v = Vec::with_capacity(count);
            for i in 0..count {
                next(&mut r, &mut floats, i)?;
                let lo: [f32; D] = floats[..D].try_into().unwrap();
                let hi: [f32; D] = floats[D..].try_into().unwrap();
                v.push(RangeQuery::from(Mbr::new(lo, hi)?));
            }
            Queries::Range(v)
        }
        other => return Err(Error::Format(format!("unknown workload kind {other}"))),
    };
    Ok(Workload { queries, selectivity: (sigma > 0).then_some(sigma as usize), seed })
}
