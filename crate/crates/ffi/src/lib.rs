//! C interface to `ifx-core`.
//!
//! Indexes are opaque `IfxIndex` handles created by `ifx_build` or
//! `ifx_index_load` and released with `ifx_index_free`. Every fallible call
//! returns an `IfxStatus`; on failure a description is available from
//! `ifx_last_error` on the same thread. Panics never cross the boundary.
//!
//! Handles are immutable after construction, so concurrent queries on one
//! handle from several threads are safe.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ifx_core::{AnyIndex, BuildConfig, Error, Family, QueryResult, SearchStrategy};

/// Opaque index handle.
pub struct IfxIndex {
    inner: AnyIndex,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IfxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnsupportedDims = 3,
    DimensionMismatch = 4,
    /// The output buffer is too small; `out_count` holds the required size.
    BufferTooSmall = 5,
    Io = 6,
    Format = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IfxFamily {
    Rtree = 0,
    Kdtree = 1,
    /// Quadtree in 2D, octree in 3D.
    Quadtree = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IfxStrategy {
    Binary = 0,
    Linear = 1,
    Exponential = 2,
}

/// Build parameters. Enum-valued fields are plain integers so that an
/// out-of-range value is reported instead of being undefined behaviour.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct IfxBuildOptions {
    /// One of `IfxFamily`.
    pub family: u32,
    pub learned: bool,
    pub leaf_capacity: usize,
    /// R-tree internal node capacity; 0 uses the leaf capacity.
    pub internal_fanout: usize,
    /// One of `IfxStrategy`.
    pub strategy: u32,
    /// Quadtree/octree depth limit; 0 uses the default.
    pub max_depth: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct IfxFootprint {
    pub internal_bytes: usize,
    pub leaf_header_bytes: usize,
    pub total_bytes: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: IfxStatus, msg: impl Into<String>) -> IfxStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> IfxStatus {
    match e {
        Error::UnsupportedDims(_) => IfxStatus::UnsupportedDims,
        Error::DimensionMismatch { .. } => IfxStatus::DimensionMismatch,
        Error::Io(_) => IfxStatus::Io,
        Error::Format(_) | Error::Parse { .. } => IfxStatus::Format,
        _ => IfxStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> IfxStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into `IfxStatus::Internal`.
fn guard(f: impl FnOnce() -> IfxStatus) -> IfxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(IfxStatus::Internal, "internal panic"),
    }
}

fn config_of(o: &IfxBuildOptions) -> Result<BuildConfig, IfxStatus> {
    let family = match o.family {
        0 => Family::RTree,
        1 => Family::KdTree,
        2 => Family::QuadOctree,
        f => return Err(fail(IfxStatus::InvalidArgument, format!("unknown family {f}"))),
    };
    let strategy = match o.strategy {
        0 => SearchStrategy::Binary,
        1 => SearchStrategy::Linear,
        2 => SearchStrategy::Exponential,
        s => return Err(fail(IfxStatus::InvalidArgument, format!("unknown strategy {s}"))),
    };
    let mut cfg = BuildConfig::new(family, o.learned, o.leaf_capacity).with_strategy(strategy);
    cfg.internal_fanout = (o.internal_fanout > 0).then_some(o.internal_fanout);
    if o.max_depth > 0 {
        cfg = cfg.with_max_depth(o.max_depth);
    }
    Ok(cfg)
}

/// Fills `opts` with defaults: plain R-tree, leaf capacity 256, binary search.
///
/// # Safety
/// `opts` must be null or point to writable memory for one `IfxBuildOptions`.
#[no_mangle]
pub unsafe extern "C" fn ifx_build_options_default(opts: *mut IfxBuildOptions) -> IfxStatus {
    if opts.is_null() {
        return fail(IfxStatus::NullPointer, "opts is null");
    }
    opts.write(IfxBuildOptions {
        family: IfxFamily::Rtree as u32,
        learned: false,
        leaf_capacity: 256,
        internal_fanout: 0,
        strategy: IfxStrategy::Binary as u32,
        max_depth: 0,
    });
    IfxStatus::Ok
}

/// Builds an index over `n_points` points of `dims` (2 or 3) interleaved
/// coordinates. `ids` may be null, in which case point `i` gets id `i`.
///
/// # Safety
/// `coords` must point to `n_points * dims` floats, `ids` (if not null) to
/// `n_points` integers, `opts` to one options struct, and `out` to writable
/// storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ifx_build(
    dims: usize,
    coords: *const f32,
    n_points: usize,
    ids: *const u32,
    opts: *const IfxBuildOptions,
    out: *mut *mut IfxIndex,
) -> IfxStatus {
    guard(|| {
        if coords.is_null() || opts.is_null() || out.is_null() {
            return fail(IfxStatus::NullPointer, "coords, opts and out must not be null");
        }
        out.write(ptr::null_mut());
        let cfg = match config_of(&*opts) {
            Ok(cfg) => cfg,
            Err(status) => return status,
        };
        let Some(total) = n_points.checked_mul(dims) else {
            return fail(IfxStatus::InvalidArgument, "point count overflows");
        };
        if n_points > u32::MAX as usize {
            return fail(IfxStatus::InvalidArgument, "at most 2^32 - 1 points are supported");
        }
        let coords = slice::from_raw_parts(coords, total);
        let ids = (!ids.is_null()).then(|| slice::from_raw_parts(ids, n_points));
        match AnyIndex::build(dims, coords, ids, &cfg) {
            Ok(inner) => {
                out.write(Box::into_raw(Box::new(IfxIndex { inner })));
                IfxStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `index` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ifx_index_free(index: *mut IfxIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of indexed points, 0 for a null handle.
///
/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ifx_index_len(index: *const IfxIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.len())
}

/// Dimensionality, 0 for a null handle.
///
/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ifx_index_dims(index: *const IfxIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.dims())
}

/// Bytes of internal nodes and leaf headers (record storage excluded).
///
/// # Safety
/// `index` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ifx_index_footprint(index: *const IfxIndex, out: *mut IfxFootprint) -> IfxStatus {
    let (Some(index), false) = (index.as_ref(), out.is_null()) else {
        return fail(IfxStatus::NullPointer, "index and out must not be null");
    };
    let fp = index.inner.footprint();
    out.write(IfxFootprint {
        internal_bytes: fp.internal_bytes,
        leaf_header_bytes: fp.leaf_header_bytes,
        total_bytes: fp.total(),
    });
    IfxStatus::Ok
}

/// Copies up to `capacity` ids (ascending) into `out_ids` and stores the
/// full match count in `out_count`.
unsafe fn deliver(result: QueryResult, out_ids: *mut u32, capacity: usize, out_count: *mut usize) -> IfxStatus {
    out_count.write(result.ids.len());
    let n = result.ids.len().min(capacity);
    if n > 0 {
        ptr::copy_nonoverlapping(result.ids.as_ptr(), out_ids, n);
    }
    if result.ids.len() > capacity {
        return fail(
            IfxStatus::BufferTooSmall,
            format!("{} matches do not fit in {capacity} slots", result.ids.len()),
        );
    }
    IfxStatus::Ok
}

/// Ids of all points equal to `point` (`dims` floats).
///
/// On `IFX_STATUS_BUFFER_TOO_SMALL` the first `capacity` ids are written and
/// `out_count` holds the total, so callers can retry with a larger buffer.
/// Passing `capacity == 0` (and a null `out_ids`) just counts.
///
/// # Safety
/// `index` must be a live handle, `point` must point to `dims` floats,
/// `out_ids` to `capacity` writable slots and `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ifx_point_query(
    index: *const IfxIndex,
    point: *const f32,
    dims: usize,
    out_ids: *mut u32,
    capacity: usize,
    out_count: *mut usize,
) -> IfxStatus {
    guard(|| {
        let Some(index) = index.as_ref() else {
            return fail(IfxStatus::NullPointer, "index is null");
        };
        if point.is_null() || out_count.is_null() || (out_ids.is_null() && capacity > 0) {
            return fail(IfxStatus::NullPointer, "point, out_ids and out_count must not be null");
        }
        match index.inner.point_query(slice::from_raw_parts(point, dims)) {
            Ok(r) => deliver(r, out_ids, capacity, out_count),
            Err(e) => from_error(e),
        }
    })
}

/// Ids of all points inside the closed box `[lo, hi]`. Buffer handling as in
/// `ifx_point_query`.
///
/// # Safety
/// As for `ifx_point_query`, with `lo` and `hi` each pointing to `dims` floats.
#[no_mangle]
pub unsafe extern "C" fn ifx_range_query(
    index: *const IfxIndex,
    lo: *const f32,
    hi: *const f32,
    dims: usize,
    out_ids: *mut u32,
    capacity: usize,
    out_count: *mut usize,
) -> IfxStatus {
    guard(|| {
        let Some(index) = index.as_ref() else {
            return fail(IfxStatus::NullPointer, "index is null");
        };
        if lo.is_null() || hi.is_null() || out_count.is_null() || (out_ids.is_null() && capacity > 0) {
            return fail(IfxStatus::NullPointer, "lo, hi, out_ids and out_count must not be null");
        }
        let (lo, hi) = (slice::from_raw_parts(lo, dims), slice::from_raw_parts(hi, dims));
        match index.inner.range_query(lo, hi) {
            Ok(r) => deliver(r, out_ids, capacity, out_count),
            Err(e) => from_error(e),
        }
    })
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, IfxStatus> {
    if path.is_null() {
        return Err(fail(IfxStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path).to_str().map_err(|_| fail(IfxStatus::InvalidArgument, "path is not valid UTF-8"))
}

/// Writes a snapshot of the index to `path`.
///
/// # Safety
/// `index` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ifx_index_save(index: *const IfxIndex, path: *const c_char) -> IfxStatus {
    guard(|| {
        let Some(index) = index.as_ref() else {
            return fail(IfxStatus::NullPointer, "index is null");
        };
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match index.inner.save(path) {
            Ok(()) => IfxStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Loads a snapshot written by `ifx_index_save`. The file is validated; a
/// corrupt snapshot yields `IFX_STATUS_FORMAT`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ifx_index_load(path: *const c_char, out: *mut *mut IfxIndex) -> IfxStatus {
    guard(|| {
        if out.is_null() {
            return fail(IfxStatus::NullPointer, "out is null");
        }
        out.write(ptr::null_mut());
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match AnyIndex::load(path) {
            Ok(inner) => {
                out.write(Box::into_raw(Box::new(IfxIndex { inner })));
                IfxStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ifx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn ifx_status_str(status: IfxStatus) -> *const c_char {
    let s: &'static CStr = match status {
        IfxStatus::Ok => c"ok",
        IfxStatus::NullPointer => c"null pointer",
        IfxStatus::InvalidArgument => c"invalid argument",
        IfxStatus::UnsupportedDims => c"unsupported dimensionality",
        IfxStatus::DimensionMismatch => c"dimension mismatch",
        IfxStatus::BufferTooSmall => c"buffer too small",
        IfxStatus::Io => c"io error",
        IfxStatus::Format => c"format error",
        IfxStatus::Internal => c"internal error",
    };
    s.as_ptr()
}
