//! Point and box types shared by every index family.
//!
//! Coordinates are single precision. Every constructor rejects NaN and
//! infinities, and negative zero is folded into positive zero so that
//! bitwise equality and `<`/`==` ordering agree on stored values.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// A point with `D` single-precision coordinates.
#[derive(Clone, Copy, PartialEq)]
#[repr(transparent)]
pub struct Point<const D: usize>([f32; D]);

impl<const D: usize> Point<D> {
    pub fn new(coords: [f32; D]) -> Result<Self> {
        let mut coords = coords;
        for (dim, c) in coords.iter_mut().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite { dim, value: *c });
            }
            // -0.0 == 0.0 but the bit patterns differ
            if *c == 0.0 {
                *c = 0.0;
            }
        }
        Ok(Point(coords))
    }

    /// Builds a point from a slice whose length must equal `D`.
    pub fn from_slice(coords: &[f32]) -> Result<Self> {
        let arr: [f32; D] = coords.try_into().map_err(|_| Error::DimensionMismatch {
            expected: D,
            got: coords.len(),
        })?;
        Self::new(arr)
    }

    #[inline(always)]
    pub fn coords(&self) -> &[f32; D] {
        &self.0
    }

    #[inline(always)]
    pub const fn dims(&self) -> usize {
        D
    }

    /// Exact bitwise equality of all coordinates.
    #[inline(always)]
    pub fn same_as(&self, other: &Self) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn squared_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum()
    }
}

impl<const D: usize> Index<usize> for Point<D> {
    type Output = f32;

    #[inline(always)]
    fn index(&self, dim: usize) -> &f32 {
        &self.0[dim]
    }
}

impl<const D: usize> fmt::Debug for Point<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.0).finish()
    }
}

/// Axis-aligned bounding box with closed intervals in every dimension.
#[derive(Clone, Copy, PartialEq)]
#[repr(C)]
pub struct Mbr<const D: usize> {
    lo: [f32; D],
    hi: [f32; D],
}

impl<const D: usize> Mbr<D> {
    pub fn new(lo: [f32; D], hi: [f32; D]) -> Result<Self> {
        let lo = *Point::new(lo)?.coords();
        let hi = *Point::new(hi)?.coords();
        for dim in 0..D {
            if lo[dim] > hi[dim] {
                return Err(Error::InvertedInterval { dim, lo: lo[dim], hi: hi[dim] });
            }
        }
        Ok(Mbr { lo, hi })
    }

    /// The degenerate box holding a single point.
    pub fn of_point(p: &Point<D>) -> Self {
        Mbr { lo: p.0, hi: p.0 }
    }

    /// Componentwise min/max envelope of a non-empty point set.
    pub fn of_points<'a, I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Point<D>>,
    {
        let mut iter = points.into_iter();
        let first = iter.next().ok_or(Error::Empty("bounding box of zero points"))?;
        let mut mbr = Mbr::of_point(first);
        for p in iter {
            mbr.expand_point(p);
        }
        Ok(mbr)
    }

    #[inline(always)]
    pub fn lo(&self) -> &[f32; D] {
        &self.lo
    }

    #[inline(always)]
    pub fn hi(&self) -> &[f32; D] {
        &self.hi
    }

    #[inline]
    pub fn expand_point(&mut self, p: &Point<D>) {
        for k in 0..D {
            self.lo[k] = self.lo[k].min(p.0[k]);
            self.hi[k] = self.hi[k].max(p.0[k]);
        }
    }

    #[inline]
    pub fn expand(&mut self, other: &Mbr<D>) {
        for k in 0..D {
            self.lo[k] = self.lo[k].min(other.lo[k]);
            self.hi[k] = self.hi[k].max(other.hi[k]);
        }
    }

    #[inline(always)]
    pub fn contains_point(&self, p: &Point<D>) -> bool {
        let mut inside = true;
        for k in 0..D {
            inside &= self.lo[k] <= p.0[k] && p.0[k] <= self.hi[k];
        }
        inside
    }

    #[inline(always)]
    pub fn intersects(&self, other: &Mbr<D>) -> bool {
        let mut overlap = true;
        for k in 0..D {
            overlap &= self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k];
        }
        overlap
    }

    pub fn contains_mbr(&self, other: &Mbr<D>) -> bool {
        (0..D).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }

    /// Center coordinate along `dim`, used as the STR sort key.
    #[inline]
    pub fn center(&self, dim: usize) -> f32 {
        self.lo[dim] * 0.5 + self.hi[dim] * 0.5
    }
}

impl<const D: usize> fmt::Debug for Mbr<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<_> = (0..D).map(|k| (self.lo[k], self.hi[k])).collect();
        f.debug_tuple("Mbr").field(&pairs).finish()
    }
}

/// A closed axis-aligned query box `[(l0, u0), .., (l_{d-1}, u_{d-1})]`.
#[derive(Clone, Copy, PartialEq, Debug)]
#[repr(transparent)]
pub struct RangeQuery<const D: usize>(Mbr<D>);

impl<const D: usize> RangeQuery<D> {
    pub fn new(bounds: [(f32, f32); D]) -> Result<Self> {
        let lo = bounds.map(|(l, _)| l);
        let hi = bounds.map(|(_, u)| u);
        Ok(RangeQuery(Mbr::new(lo, hi)?))
    }

    /// The zero-extent box at `p`; a point query expressed as a range query.
    pub fn at_point(p: &Point<D>) -> Self {
        RangeQuery(Mbr::of_point(p))
    }

    #[inline(always)]
    pub fn lower(&self, dim: usize) -> f32 {
        self.0.lo[dim]
    }

    #[inline(always)]
    pub fn upper(&self, dim: usize) -> f32 {
        self.0.hi[dim]
    }

    #[inline(always)]
    pub fn as_mbr(&self) -> &Mbr<D> {
        &self.0
    }

    #[inline(always)]
    pub fn contains(&self, p: &Point<D>) -> bool {
        self.0.contains_point(p)
    }
}

impl<const D: usize> From<Mbr<D>> for RangeQuery<D> {
    fn from(mbr: Mbr<D>) -> Self {
        RangeQuery(mbr)
    }
}

pub fn mbr_contains_point<const D: usize>(m: &Mbr<D>, p: &Point<D>) -> bool {
    m.contains_point(p)
}

pub fn mbr_intersects<const D: usize>(m: &Mbr<D>, q: &RangeQuery<D>) -> bool {
    m.intersects(q.as_mbr())
}

pub fn mbr_of_points<const D: usize>(pts: &[Point<D>]) -> Result<Mbr<D>> {
    Mbr::of_points(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p2(x: f32, y: f32) -> Point<2> {
        Point::new([x, y]).unwrap()
    }

    fn unit() -> Mbr<2> {
        Mbr::new([0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn containment_is_closed() {
        assert!(mbr_contains_point(&unit(), &p2(0.0, 0.0)));
        assert!(!mbr_contains_point(&unit(), &p2(2.0, 0.0)));
        assert!(mbr_contains_point(&unit(), &p2(1.0, 1.0)));
    }

    #[test]
    fn intersection_cases() {
        let touching = RangeQuery::new([(1.0, 2.0), (0.0, 1.0)]).unwrap();
        let disjoint = RangeQuery::new([(2.0, 3.0), (0.0, 1.0)]).unwrap();
        let inner = RangeQuery::new([(1.0, 2.0), (1.0, 2.0)]).unwrap();
        assert!(mbr_intersects(&unit(), &touching));
        assert!(!mbr_intersects(&unit(), &disjoint));
        let big = Mbr::new([0.0, 0.0], [4.0, 4.0]).unwrap();
        assert!(mbr_intersects(&big, &inner));
    }

    #[test]
    fn envelope_examples() {
        let m = mbr_of_points(&[p2(0.0, 0.0), p2(2.0, 1.0)]).unwrap();
        assert_eq!(m, Mbr::new([0.0, 0.0], [2.0, 1.0]).unwrap());
        let m = mbr_of_points(&[p2(5.0, 5.0)]).unwrap();
        assert_eq!(m.lo(), m.hi());
        assert!(matches!(mbr_of_points::<2>(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Point::new([f32::NAN, 0.0]), Err(Error::NonFinite { dim: 0, .. })));
        assert!(Point::new([0.0, f32::INFINITY]).is_err());
        assert!(matches!(
            Mbr::new([1.0, 0.0], [0.0, 1.0]),
            Err(Error::InvertedInterval { dim: 0, .. })
        ));
        assert!(matches!(
            Point::<3>::from_slice(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn negative_zero_is_canonical() {
        let a = p2(-0.0, 1.0);
        let b = p2(0.0, 1.0);
        assert!(a.same_as(&b));
    }

    #[test]
    fn envelope_matches_fold_of_100_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point<3>> = (0..100)
            .map(|_| Point::new([rng.gen_range(-5.0..5.0), rng.gen(), rng.gen_range(0.0..1e6)]).unwrap())
            .collect();
        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        for p in &pts {
            for k in 0..3 {
                if p[k] < lo[k] {
                    lo[k] = p[k];
                }
                if p[k] > hi[k] {
                    hi[k] = p[k];
                }
            }
        }
        let m = mbr_of_points(&pts).unwrap();
        assert_eq!(m.lo(), &lo);
        assert_eq!(m.hi(), &hi);
    }

    fn arb_box() -> impl Strategy<Value = Mbr<2>> {
        prop::array::uniform2((-100.0f32..100.0, 0.0f32..50.0))
            .prop_map(|b| Mbr::new([b[0].0, b[1].0], [b[0].0 + b[0].1, b[1].0 + b[1].1]).unwrap())
    }

    proptest! {
        #[test]
        fn envelope_contains_inputs(raw in prop::collection::vec((-1e3f32..1e3, -1e3f32..1e3), 1..64)) {
            let pts: Vec<_> = raw.iter().map(|&(x, y)| p2(x, y)).collect();
            let m = mbr_of_points(&pts).unwrap();
            prop_assert!(pts.iter().all(|p| m.contains_point(p)));
        }

        #[test]
        fn intersection_is_symmetric(a in arb_box(), b in arb_box()) {
            prop_assert_eq!(a.intersects(&b), b.intersects(&a));
            if a.contains_mbr(&b) {
                prop_assert!(a.intersects(&b));
            }
        }
    }
}
