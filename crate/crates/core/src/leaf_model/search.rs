use crate::geometry::{Point, RangeQuery};
use crate::stats::Probe;

use super::{LeafHeader, SearchStrategy};

/// What [`LeafView::find_first`] looks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FindMode {
    /// First record whose storage-dimension key equals the value.
    Equal,
    /// First record whose storage-dimension key is `>=` the value.
    AtLeast,
}

/// Borrowed view of one learned leaf: its header and its slice of records.
#[derive(Clone, Copy, Debug)]
pub struct LeafView<'a, const D: usize> {
    header: &'a LeafHeader,
    records: &'a [Point<D>],
    ids: &'a [u32],
}

impl<'a, const D: usize> LeafView<'a, D> {
    pub fn new(header: &'a LeafHeader, records: &'a [Point<D>], ids: &'a [u32]) -> Self {
        debug_assert_eq!(header.count as usize, records.len());
        debug_assert_eq!(records.len(), ids.len());
        LeafView { header, records, ids }
    }

    pub fn header(&self) -> &LeafHeader {
        self.header
    }

    #[inline(always)]
    fn key(&self, i: usize) -> f32 {
        self.records[i][self.header.pdim as usize]
    }

    /// Index of the first record whose key is `>= v`, or `len` if none.
    #[inline]
    pub fn lower_bound<P: Probe>(&self, v: f32, strategy: SearchStrategy, probe: &mut P) -> usize {
        let len = self.records.len();
        if len == 0 {
            return 0;
        }
        let pos = self.header.model.predict(v, len);
        match strategy {
            SearchStrategy::Binary => {
                // The answer for any v lies in [pos - err, pos + err + 1]; the
                // upper end needs no probe since it is what remains when
                // every key in the window is below v.
                let err = self.header.max_err as usize;
                let lo = pos.saturating_sub(err);
                let hi = (pos + err + 1).min(len);
                self.bounded_lower_bound(lo, hi, v, probe)
            }
            SearchStrategy::Linear => {
                probe.probe();
                if self.key(pos) < v {
                    let mut i = pos + 1;
                    while i < len {
                        probe.probe();
                        if self.key(i) >= v {
                            break;
                        }
                        i += 1;
                    }
                    i
                } else {
                    let mut i = pos;
                    while i > 0 {
                        probe.probe();
                        if self.key(i - 1) < v {
                            break;
                        }
                        i -= 1;
                    }
                    i
                }
            }
            SearchStrategy::Exponential => {
                probe.probe();
                if self.key(pos) < v {
                    // gallop right; `lo` is the first index not known to be < v
                    let mut lo = pos + 1;
                    let mut step = 1;
                    let mut hi = pos + step;
                    while hi < len {
                        probe.probe();
                        if self.key(hi) >= v {
                            break;
                        }
                        lo = hi + 1;
                        step *= 2;
                        hi = pos + step;
                    }
                    self.bounded_lower_bound(lo, hi.min(len), v, probe)
                } else {
                    // gallop left; `hi` is the smallest index known to be >= v
                    let mut hi = pos;
                    let mut step = 1;
                    let lo = loop {
                        if step > pos {
                            break 0;
                        }
                        let j = pos - step;
                        probe.probe();
                        if self.key(j) < v {
                            break j + 1;
                        }
                        hi = j;
                        step *= 2;
                    };
                    self.bounded_lower_bound(lo, hi, v, probe)
                }
            }
        }
    }

    /// Lower bound restricted to `[lo, hi)`; returns `hi` if every key there is `< v`.
    #[inline(always)]
    fn bounded_lower_bound<P: Probe>(&self, lo: usize, hi: usize, v: f32, probe: &mut P) -> usize {
        let mut base = lo;
        let mut size = hi - lo;
        while size > 0 {
            let half = size / 2;
            let mid = base + half;
            probe.probe();
            if self.key(mid) < v {
                base = mid + 1;
                size -= half + 1;
            } else {
                size = half;
            }
        }
        base
    }

    pub fn find_first(&self, v: f32, strategy: SearchStrategy, mode: FindMode) -> Option<usize> {
        let i = self.lower_bound(v, strategy, &mut crate::stats::NoStats);
        if i == self.records.len() {
            return None;
        }
        match mode {
            FindMode::AtLeast => Some(i),
            FindMode::Equal => (self.key(i) == v).then_some(i),
        }
    }

    /// Emits the id of every record bitwise equal to `q`.
    #[inline]
    pub fn point_query<P: Probe, F: FnMut(u32)>(
        &self,
        q: &Point<D>,
        strategy: SearchStrategy,
        probe: &mut P,
        mut emit: F,
    ) {
        let pdim = self.header.pdim as usize;
        let sdim = self.header.sdim as usize;
        let v = q[pdim];
        let len = self.records.len();
        let mut i = self.lower_bound(v, strategy, probe);
        // walk the run of equal keys, guided by the secondary dimension
        while i < len {
            let r = &self.records[i];
            probe.scan();
            if r[pdim] != v || r[sdim] > q[sdim] {
                break;
            }
            if r[sdim] == q[sdim] && r.same_as(q) {
                emit(self.ids[i]);
            }
            i += 1;
        }
    }

    /// Emits the id of every record inside the closed box `q`.
    #[inline]
    pub fn range_query<P: Probe, F: FnMut(u32)>(
        &self,
        q: &RangeQuery<D>,
        strategy: SearchStrategy,
        probe: &mut P,
        mut emit: F,
    ) {
        let pdim = self.header.pdim as usize;
        let upper = q.upper(pdim);
        let mut i = self.lower_bound(q.lower(pdim), strategy, probe);
        while i < self.records.len() {
            let r = &self.records[i];
            probe.scan();
            if r[pdim] > upper {
                break;
            }
            if q.contains(r) {
                emit(self.ids[i]);
            }
            i += 1;
        }
    }
}
