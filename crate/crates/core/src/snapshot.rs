//! Binary snapshot of a built index.
//!
//! Layout (little-endian): `"IFXI"`, version `u8`, dims `u8`, family `u8`,
//! learned `u8`, strategy `u8`, three zero bytes, leaf capacity `u64`,
//! fanout `u64` (0 = default), max depth `u64`, bounds (`2D` floats), root
//! `u32`; then the family's node arenas, the leaf headers and finally the
//! records (`D` floats each) followed by their ids. Learned leaf headers are
//! written field by field: count, offset, pdim, sdim, max error, slope,
//! base, mean error.
//!
//! Loading validates every reference and re-checks every learned leaf, so a
//! corrupt file is rejected instead of producing wrong answers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::any::AnyIndex;
use crate::builders::{BuildConfig, Family};
use crate::error::{Error, Result};
use crate::geometry::{Mbr, Point};
use crate::index::{BuildTiming, IndexTree, Internals, KdNode, Leaves, NodeRef, PlainLeaf, QuadNode, QuadNodes, RNode, RTreeNodes};
use crate::leaf_model::{check_leaf, LeafHeader, LinearModel, SearchStrategy};

pub const MAGIC: &[u8; 4] = b"IFXI";
const VERSION: u8 = 1;
const KIND_RTREE: u8 = 0;
const KIND_KD: u8 = 1;
const KIND_QUAD: u8 = 2;

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f32(&mut self, v: f32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn mbr<const D: usize>(&mut self, m: &Mbr<D>) -> Result<()> {
        for &c in m.lo().iter().chain(m.hi()) {
            self.f32(c)?;
        }
        Ok(())
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|_| Error::Format("truncated snapshot".into()))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    /// Length prefix, refusing counts that cannot possibly fit in the file.
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > (1 << 40) {
            return Err(Error::Format(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }
    fn mbr<const D: usize>(&mut self) -> Result<Mbr<D>> {
        let mut lo = [0f32; D];
        let mut hi = [0f32; D];
        for v in lo.iter_mut().chain(hi.iter_mut()) {
            *v = self.f32()?;
        }
        Mbr::new(lo, hi)
    }
}

pub fn save<const D: usize>(tree: &IndexTree<D>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Out(BufWriter::new(File::create(path)?));
    write_tree(tree, &mut out)?;
    out.0.flush()?;
    Ok(())
}

fn write_tree<const D: usize, W: Write>(tree: &IndexTree<D>, out: &mut Out<W>) -> Result<()> {
    let cfg = tree.config();
    out.0.write_all(MAGIC)?;
    for b in [VERSION, D as u8, cfg.family.code(), cfg.learned as u8, cfg.strategy.code(), 0, 0, 0] {
        out.u8(b)?;
    }
    out.u64(cfg.leaf_capacity as u64)?;
    out.u64(cfg.internal_fanout.unwrap_or(0) as u64)?;
    out.u64(cfg.max_depth as u64)?;
    out.mbr(tree.bounds())?;
    out.u32(tree.root().raw())?;

    match tree.internals() {
        Internals::RTree(r) => {
            out.u8(KIND_RTREE)?;
            out.u64(r.nodes.len() as u64)?;
            for n in &r.nodes {
                out.u32(n.first)?;
                out.u32(n.len)?;
            }
            out.u64(r.mbrs.len() as u64)?;
            for (m, c) in r.mbrs.iter().zip(&r.children) {
                out.mbr(m)?;
                out.u32(c.raw())?;
            }
        }
        Internals::Kd(nodes) => {
            out.u8(KIND_KD)?;
            out.u64(nodes.len() as u64)?;
            for n in nodes {
                out.u32(n.dim)?;
                out.f32(n.split)?;
                out.u32(n.left.raw())?;
                out.u32(n.right.raw())?;
            }
        }
        Internals::Quad(q) => {
            out.u8(KIND_QUAD)?;
            out.u64(q.nodes.len() as u64)?;
            for n in &q.nodes {
                out.mbr(&n.region)?;
                out.u32(n.first_child)?;
                out.u32(n.mask)?;
            }
            out.u64(q.children.len() as u64)?;
            for c in &q.children {
                out.u32(c.raw())?;
            }
        }
    }

    match tree.leaves() {
        Leaves::Plain(leaves) => {
            out.u8(0)?;
            out.u64(leaves.len() as u64)?;
            for l in leaves {
                out.u32(l.count)?;
                out.u32(l.offset)?;
            }
        }
        Leaves::Learned(headers) => {
            out.u8(1)?;
            out.u64(headers.len() as u64)?;
            for h in headers {
                out.u32(h.count)?;
                out.u32(h.offset)?;
                out.u8(h.pdim)?;
                out.u8(h.sdim)?;
                out.u32(h.max_err)?;
                out.f64(h.model.slope)?;
                out.f64(h.model.base)?;
                out.f64(h.mean_err)?;
            }
        }
    }

    out.u64(tree.len() as u64)?;
    for p in &tree.points {
        for &c in p.coords() {
            out.f32(c)?;
        }
    }
    for &id in &tree.ids {
        out.u32(id)?;
    }
    Ok(())
}

/// Reads a snapshot whose dimensionality must be `D`.
pub fn load<const D: usize>(path: impl AsRef<Path>) -> Result<IndexTree<D>> {
    let mut input = In(BufReader::new(File::open(path)?));
    let dims = read_magic(&mut input)?;
    if dims != D {
        return Err(Error::DimensionMismatch { expected: D, got: dims });
    }
    read_tree(&mut input)
}

/// Reads a snapshot of any supported dimensionality.
pub fn load_any(path: impl AsRef<Path>) -> Result<AnyIndex> {
    let mut input = In(BufReader::new(File::open(path)?));
    match read_magic(&mut input)? {
        2 => Ok(AnyIndex::D2(read_tree(&mut input)?)),
        3 => Ok(AnyIndex::D3(read_tree(&mut input)?)),
        d => Err(Error::UnsupportedDims(d)),
    }
}

fn read_magic<R: Read>(input: &mut In<R>) -> Result<usize> {
    if &input.bytes::<4>()? != MAGIC {
        return Err(Error::Format("missing IFXI magic".into()));
    }
    let version = input.u8()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    Ok(input.u8()? as usize)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn read_tree<const D: usize, R: Read>(input: &mut In<R>) -> Result<IndexTree<D>> {
    let family = Family::from_code(input.u8()?).ok_or_else(|| bad("unknown family"))?;
    let learned = input.u8()? != 0;
    let strategy = SearchStrategy::from_code(input.u8()?).ok_or_else(|| bad("unknown strategy"))?;
    input.bytes::<3>()?;
    let leaf_capacity = input.u64()? as usize;
    let fanout = input.u64()? as usize;
    let max_depth = input.u64()? as usize;
    let config = BuildConfig {
        family,
        learned,
        leaf_capacity,
        internal_fanout: (fanout > 0).then_some(fanout),
        strategy,
        max_depth,
        parallel: false,
    };
    config.validate(D)?;
    let bounds = input.mbr::<D>()?;
    let root = NodeRef::from_raw(input.u32()?);

    let internals = match (input.u8()?, family) {
        (KIND_RTREE, Family::RTree) => {
            let n = input.len()?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                nodes.push(RNode { first: input.u32()?, len: input.u32()? });
            }
            let e = input.len()?;
            let (mut mbrs, mut children) = (Vec::with_capacity(e), Vec::with_capacity(e));
            for _ in 0..e {
                mbrs.push(input.mbr()?);
                children.push(NodeRef::from_raw(input.u32()?));
            }
            Internals::RTree(RTreeNodes { nodes, mbrs, children })
        }
        (KIND_KD, Family::KdTree) => {
            let n = input.len()?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                nodes.push(KdNode {
                    dim: input.u32()?,
                    split: input.f32()?,
                    left: NodeRef::from_raw(input.u32()?),
                    right: NodeRef::from_raw(input.u32()?),
                });
            }
            Internals::Kd(nodes)
        }
        (KIND_QUAD, Family::QuadOctree) => {
            let n = input.len()?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                nodes.push(QuadNode { region: input.mbr()?, first_child: input.u32()?, mask: input.u32()? });
            }
            let c = input.len()?;
            let mut children = Vec::with_capacity(c);
            for _ in 0..c {
                children.push(NodeRef::from_raw(input.u32()?));
            }
            Internals::Quad(QuadNodes { nodes, children })
        }
        _ => return Err(bad("node arena does not match the family")),
    };

    let leaves_learned = input.u8()? != 0;
    if leaves_learned != learned {
        return Err(bad("leaf kind does not match the configuration"));
    }
    let count = input.len()?;
    let leaves = if learned {
        let mut headers = Vec::with_capacity(count);
        for _ in 0..count {
            headers.push(LeafHeader {
                count: input.u32()?,
                offset: input.u32()?,
                pdim: input.u8()?,
                sdim: input.u8()?,
                max_err: input.u32()?,
                model: LinearModel { slope: input.f64()?, base: input.f64()? },
                mean_err: input.f64()?,
            });
        }
        Leaves::Learned(headers)
    } else {
        let mut plain = Vec::with_capacity(count);
        for _ in 0..count {
            plain.push(PlainLeaf { count: input.u32()?, offset: input.u32()? });
        }
        Leaves::Plain(plain)
    };

    let n = input.len()?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut c = [0f32; D];
        for v in c.iter_mut() {
            *v = input.f32()?;
        }
        points.push(Point::new(c)?);
    }
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        ids.push(input.u32()?);
    }

    let tree = IndexTree { config, bounds, root, internals, leaves, points, ids, timing: BuildTiming::default() };
    validate(&tree)?;
    Ok(tree)
}

fn validate<const D: usize>(tree: &IndexTree<D>) -> Result<()> {
    let leaf_count = tree.leaves.len();
    let check_ref = |r: NodeRef, nodes: usize| -> Result<()> {
        let limit = if r.is_leaf() { leaf_count } else { nodes };
        if r.index() >= limit {
            return Err(bad(format!("dangling reference {r:?}")));
        }
        Ok(())
    };
    let nodes = tree.internals.node_count();
    check_ref(tree.root, nodes)?;
    match &tree.internals {
        Internals::RTree(r) => {
            if r.mbrs.len() != r.children.len() {
                return Err(bad("entry arrays differ in length"));
            }
            for n in &r.nodes {
                if n.first as usize + n.len as usize > r.children.len() {
                    return Err(bad("node entries out of range"));
                }
            }
            for &c in &r.children {
                check_ref(c, nodes)?;
            }
        }
        Internals::Kd(k) => {
            for n in k {
                if n.dim as usize >= D {
                    return Err(bad("split dimension out of range"));
                }
                check_ref(n.left, nodes)?;
                check_ref(n.right, nodes)?;
            }
        }
        Internals::Quad(q) => {
            for n in &q.nodes {
                if n.mask >> (1 << D) != 0 || n.first_child as usize + n.mask.count_ones() as usize > q.children.len() {
                    return Err(bad("quad children out of range"));
                }
            }
            for &c in &q.children {
                check_ref(c, nodes)?;
            }
        }
    }
    // leaves must tile the record array in order
    let mut cursor = 0usize;
    for i in 0..leaf_count {
        let (offset, count) = tree.leaves.span(i);
        if offset != cursor {
            return Err(bad(format!("leaf {i} does not start where its predecessor ends")));
        }
        cursor += count;
    }
    if cursor != tree.points.len() {
        return Err(bad("leaves do not cover every record"));
    }
    if let Leaves::Learned(headers) = &tree.leaves {
        for (i, h) in headers.iter().enumerate() {
            let (points, _) = tree.leaf_records(i);
            check_leaf(h, points).map_err(|e| bad(format!("leaf {i}: {e}")))?;
        }
    }
    Ok(())
}
