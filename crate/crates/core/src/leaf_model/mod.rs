//! Interpolation-friendly leaves.
//!
//! A learned leaf stores its records sorted on the dimension whose values are
//! best predicted by a straight line between the smallest and largest value
//! (`pos = slope * v + base`). The header keeps everything needed to search
//! the leaf: record count, storage dimension, tie-break dimension, the line
//! and its maximum and mean position errors.

mod search;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub use search::{FindMode, LeafView};

/// Local search used around the predicted position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    /// Binary search confined to `[pos - maxErr, pos + maxErr]`.
    #[default]
    Binary,
    /// Scan outward from the predicted position.
    Linear,
    /// Galloping from the predicted position, then binary search.
    Exponential,
}

impl SearchStrategy {
    pub const ALL: [SearchStrategy; 3] =
        [SearchStrategy::Binary, SearchStrategy::Linear, SearchStrategy::Exponential];

    pub fn as_str(&self) -> &'static str {
        match self {
            SearchStrategy::Binary => "binary",
            SearchStrategy::Linear => "linear",
            SearchStrategy::Exponential => "exponential",
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearchStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(SearchStrategy::Binary),
            "linear" => Ok(SearchStrategy::Linear),
            "exponential" | "exp" => Ok(SearchStrategy::Exponential),
            other => Err(Error::Config(format!("unknown search strategy `{other}`"))),
        }
    }
}

/// Linear interpolation from key value to array position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[repr(C)]
pub struct LinearModel {
    pub slope: f64,
    pub base: f64,
}

impl LinearModel {
    /// Fits the line through `(min, 0)` and `(max, len - 1)`.
    ///
    /// A constant key range yields the zero model, which predicts position 0
    /// for every key.
    pub fn from_extremes(min: f32, max: f32, len: usize) -> Self {
        let (min, max) = (min as f64, max as f64);
        if max > min && len > 1 {
            let slope = (len - 1) as f64 / (max - min);
            LinearModel { slope, base: -slope * min }
        } else {
            LinearModel::default()
        }
    }

    /// Predicted position, rounded half-up and clamped to `[0, len - 1]`.
    #[inline(always)]
    pub fn predict(&self, v: f32, len: usize) -> usize {
        let raw = (self.slope * v as f64 + self.base + 0.5).floor();
        let last = (len.max(1) - 1) as f64;
        // `as` saturates, so negative values already land on 0
        raw.min(last) as usize
    }
}

/// Fits the interpolation line to an ascending sequence of keys.
pub fn fit_linear(values: &[f32]) -> Result<LinearModel> {
    match (values.first(), values.last()) {
        (Some(&min), Some(&max)) => Ok(LinearModel::from_extremes(min, max, values.len())),
        _ => Err(Error::Empty("cannot fit a model to zero values")),
    }
}

pub fn predict(model: &LinearModel, v: f32, len: usize) -> usize {
    model.predict(v, len)
}

/// Position error of a model over one leaf.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    /// Largest `|predict(v_i) - i|`.
    pub max_err: u32,
    /// Mean of `|predict(v_i) - i|`.
    pub mean_err: f64,
}

/// Evaluates the model on every key of an ascending sequence in one pass.
pub fn eval_errors(model: &LinearModel, values: &[f32]) -> ErrorStats {
    if values.is_empty() {
        return ErrorStats::default();
    }
    let len = values.len();
    let mut max_err = 0usize;
    let mut total = 0f64;
    for (i, &v) in values.iter().enumerate() {
        let err = model.predict(v, len).abs_diff(i);
        max_err = max_err.max(err);
        total += err as f64;
    }
    ErrorStats { max_err: max_err as u32, mean_err: total / len as f64 }
}

/// Picks the storage dimension with the smallest model error.
///
/// Binary search cost depends on the maximum error, the unbounded searches
/// on the mean error. Ties go to the lowest dimension index.
pub fn choose_storage_dim<const D: usize>(
    points: &[Point<D>],
    strategy: SearchStrategy,
) -> Result<(usize, [ErrorStats; D])> {
    if points.is_empty() {
        return Err(Error::Empty("cannot choose a storage order for zero points"));
    }
    let mut stats = [ErrorStats::default(); D];
    let mut column = Vec::with_capacity(points.len());
    for (dim, slot) in stats.iter_mut().enumerate() {
        column.clear();
        column.extend(points.iter().map(|p| p[dim]));
        column.sort_unstable_by(f32::total_cmp);
        let model = fit_linear(&column)?;
        *slot = eval_errors(&model, &column);
    }
    let better = |a: &ErrorStats, b: &ErrorStats| match strategy {
        SearchStrategy::Binary => a.max_err < b.max_err,
        SearchStrategy::Linear | SearchStrategy::Exponential => a.mean_err < b.mean_err,
    };
    let mut best = 0;
    for dim in 1..D {
        if better(&stats[dim], &stats[best]) {
            best = dim;
        }
    }
    Ok((best, stats))
}

/// Secondary order dimension: the first dimension after `pdim` in the
/// lexicographic key `[pdim, 0, 1, .., d-1]`.
pub fn secondary_dim(pdim: usize, dims: usize) -> usize {
    if dims <= 1 {
        pdim
    } else if pdim == 0 {
        1
    } else {
        0
    }
}

/// Lexicographic order on `[pdim, 0, 1, .., d-1]`, skipping `pdim` in the tail.
pub fn storage_order<const D: usize>(pdim: usize, a: &Point<D>, b: &Point<D>) -> Ordering {
    let head = a[pdim].total_cmp(&b[pdim]);
    if head != Ordering::Equal {
        return head;
    }
    for k in (0..D).filter(|&k| k != pdim) {
        let ord = a[k].total_cmp(&b[k]);
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Leaf header, laid out as stored in the index.
#[derive(Clone, Copy, Debug, PartialEq)]
#[repr(C)]
pub struct LeafHeader {
    pub count: u32,
    /// Start of the leaf's records in the shared record array.
    pub offset: u32,
    pub pdim: u8,
    pub sdim: u8,
    pub max_err: u32,
    pub model: LinearModel,
    pub mean_err: f64,
}

impl LeafHeader {
    pub fn error_stats(&self) -> ErrorStats {
        ErrorStats { max_err: self.max_err, mean_err: self.mean_err }
    }
}

/// Sorts a leaf's records in place and computes its header.
///
/// `records` and `ids` are permuted together. The returned header has
/// `offset == 0`; callers that pack leaves into one array set it.
pub fn build_leaf_in_place<const D: usize>(
    records: &mut [Point<D>],
    ids: &mut [u32],
    strategy: SearchStrategy,
) -> Result<LeafHeader> {
    if records.len() != ids.len() {
        return Err(Error::Config(format!(
            "{} records but {} payload ids",
            records.len(),
            ids.len()
        )));
    }
    let count = u32::try_from(records.len())
        .map_err(|_| Error::Config("leaf exceeds u32::MAX records".into()))?;
    let (pdim, _) = choose_storage_dim(records, strategy)?;

    let mut pairs: Vec<(Point<D>, u32)> =
        records.iter().copied().zip(ids.iter().copied()).collect();
    pairs.sort_unstable_by(|a, b| storage_order(pdim, &a.0, &b.0).then(a.1.cmp(&b.1)));
    for (i, (p, id)) in pairs.into_iter().enumerate() {
        records[i] = p;
        ids[i] = id;
    }

    let keys: Vec<f32> = records.iter().map(|p| p[pdim]).collect();
    let model = fit_linear(&keys)?;
    let stats = eval_errors(&model, &keys);
    Ok(LeafHeader {
        count,
        offset: 0,
        pdim: pdim as u8,
        sdim: secondary_dim(pdim, D) as u8,
        max_err: stats.max_err,
        model,
        mean_err: stats.mean_err,
    })
}

/// A self-contained learned leaf that owns its records.
#[derive(Clone, Debug)]
pub struct IfLeaf<const D: usize> {
    header: LeafHeader,
    records: Vec<Point<D>>,
    ids: Vec<u32>,
}

impl<const D: usize> IfLeaf<D> {
    pub fn build(points: &[Point<D>], ids: &[u32], strategy: SearchStrategy) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("a leaf needs at least one record"));
        }
        let mut records = points.to_vec();
        let mut ids = ids.to_vec();
        let header = build_leaf_in_place(&mut records, &mut ids, strategy)?;
        Ok(IfLeaf { header, records, ids })
    }

    pub fn header(&self) -> &LeafHeader {
        &self.header
    }

    pub fn records(&self) -> &[Point<D>] {
        &self.records
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn view(&self) -> LeafView<'_, D> {
        LeafView::new(&self.header, &self.records, &self.ids)
    }
}

pub fn build_leaf<const D: usize>(
    points: &[Point<D>],
    ids: &[u32],
    strategy: SearchStrategy,
) -> Result<IfLeaf<D>> {
    IfLeaf::build(points, ids, strategy)
}

/// Checks every structural invariant of a learned leaf.
///
/// Returns a description of the first violation found.
pub fn check_leaf<const D: usize>(
    header: &LeafHeader,
    records: &[Point<D>],
) -> std::result::Result<(), String> {
    let len = records.len();
    if header.count as usize != len {
        return Err(format!("header count {} but {} records", header.count, len));
    }
    let pdim = header.pdim as usize;
    if pdim >= D {
        return Err(format!("pdim {pdim} out of range"));
    }
    if D > 1 && (header.sdim as usize == pdim || header.sdim as usize >= D) {
        return Err(format!("bad sdim {} for pdim {pdim}", header.sdim));
    }
    if header.model.slope < 0.0 {
        return Err("negative slope".into());
    }
    if header.mean_err > header.max_err as f64 {
        return Err(format!("mean error {} above max error {}", header.mean_err, header.max_err));
    }
    for (i, w) in records.windows(2).enumerate() {
        if storage_order(pdim, &w[0], &w[1]) == Ordering::Greater {
            return Err(format!("records {i} and {} out of order", i + 1));
        }
    }
    for (i, p) in records.iter().enumerate() {
        let err = header.model.predict(p[pdim], len).abs_diff(i);
        if err > header.max_err as usize {
            return Err(format!("record {i} error {err} exceeds bound {}", header.max_err));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts2(raw: &[(f32, f32)]) -> Vec<Point<2>> {
        raw.iter().map(|&(x, y)| Point::new([x, y]).unwrap()).collect()
    }

    /// Independent two-point fit: the line through (min, 0) and (max, K-1).
    fn oracle_fit(values: &[f32]) -> (f64, f64) {
        let min = values.iter().copied().fold(f32::INFINITY, f32::min) as f64;
        let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        let a = (values.len() as f64 - 1.0) / (max - min);
        (a, 0.0 - a * min)
    }

    /// Errors by the position formula, computed without the model type.
    fn oracle_errors(a: f64, b: f64, values: &[f32]) -> (usize, f64) {
        let k = values.len() as i64;
        let errs: Vec<i64> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let p = ((a * v as f64 + b) + 0.5).floor() as i64;
                (p.clamp(0, k - 1) - i as i64).abs()
            })
            .collect();
        let max = *errs.iter().max().unwrap() as usize;
        (max, errs.iter().sum::<i64>() as f64 / k as f64)
    }

    #[test]
    fn uniform_keys_fit_exactly() {
        let values: Vec<f32> = (0..100).map(|i| i as f32 / 99.0).collect();
        let m = fit_linear(&values).unwrap();
        assert_eq!(m.slope, 99.0);
        assert_eq!(m.base, 0.0);
        let stats = eval_errors(&m, &values);
        assert_eq!(stats.max_err, 0);
        assert_eq!(stats.mean_err, 0.0);
    }

    #[test]
    fn constant_keys_give_zero_model() {
        let values = [7.0f32; 10];
        let m = fit_linear(&values).unwrap();
        assert_eq!(m, LinearModel { slope: 0.0, base: 0.0 });
        assert!(values.iter().all(|&v| m.predict(v, 10) == 0));
        assert_eq!(m.predict(-1e9, 10), 0);
        assert_eq!(m.predict(1e9, 10), 0);
        assert!(matches!(fit_linear(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn fit_matches_two_point_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut values: Vec<f32> = (0..1024).map(|_| rng.gen_range(-3.0f32..40.0).powi(2)).collect();
        values.sort_unstable_by(f32::total_cmp);
        let m = fit_linear(&values).unwrap();
        let (a, b) = oracle_fit(&values);
        assert!((m.slope - a).abs() <= 1e-12 * a.abs());
        assert!((m.base - b).abs() <= 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn predict_rounds_half_up_and_clamps() {
        let m = LinearModel { slope: 99.0, base: 0.0 };
        assert_eq!(m.predict(0.5, 100), 50);
        assert_eq!(m.predict(-3.0, 100), 0);
        assert_eq!(m.predict(30.0, 100), 99);
        assert_eq!(LinearModel::default().predict(123.0, 10), 0);
    }

    #[test]
    fn skewed_four_key_errors() {
        let values = [0.0f32, 0.1, 0.2, 10.0];
        let m = fit_linear(&values).unwrap();
        assert!((m.slope - 0.3).abs() < 1e-12);
        let preds: Vec<usize> = values.iter().map(|&v| m.predict(v, 4)).collect();
        assert_eq!(preds, vec![0, 0, 0, 3]);
        let stats = eval_errors(&m, &values);
        assert_eq!(stats.max_err, 2);
        assert_eq!(stats.mean_err, 0.75);
        let (max, mean) = oracle_errors(m.slope, m.base, &values);
        assert_eq!((max, mean), (2, 0.75));
    }

    #[test]
    fn random_errors_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let k = rng.gen_range(2..600);
            let mut values: Vec<f32> = (0..k).map(|_| rng.gen::<f32>().powi(3) * 100.0).collect();
            values.sort_unstable_by(f32::total_cmp);
            let m = fit_linear(&values).unwrap();
            let s = eval_errors(&m, &values);
            let (a, b) = oracle_fit(&values);
            let (max, mean) = oracle_errors(a, b, &values);
            assert_eq!(s.max_err as usize, max);
            assert!((s.mean_err - mean).abs() < 1e-9);
            assert!(s.mean_err <= s.max_err as f64);
        }
    }

    #[test]
    fn degenerate_dimension_loses() {
        let points: Vec<Point<2>> =
            (0..64).map(|i| Point::new([i as f32, 5.0]).unwrap()).collect();
        let (pdim, stats) = choose_storage_dim(&points, SearchStrategy::Binary).unwrap();
        assert_eq!(pdim, 0);
        assert_eq!(stats[0].max_err, 0);
        assert_eq!(stats[1].max_err, 63);
        let (pdim, _) = choose_storage_dim(&points, SearchStrategy::Linear).unwrap();
        assert_eq!(pdim, 0);
    }

    #[test]
    fn predictable_axis_is_preferred_over_skewed_axis() {
        // dim 1 ("latitude") roughly uniform, dim 0 ("longitude") heavily clustered
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<Point<2>> = (0..1024)
            .map(|_| {
                let lon = if rng.gen_bool(0.8) { rng.gen_range(0.0..0.05) } else { rng.gen_range(0.0..1.0) };
                Point::new([lon, rng.gen_range(0.0..1.0)]).unwrap()
            })
            .collect();
        for strategy in SearchStrategy::ALL {
            let (pdim, stats) = choose_storage_dim(&points, strategy).unwrap();
            assert_eq!(pdim, 1, "{strategy}: {stats:?}");
        }
    }

    #[test]
    fn choice_follows_relabelled_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<Point<3>> = (0..500)
            .map(|_| Point::new([rng.gen::<f32>().powi(2), rng.gen(), rng.gen::<f32>().sqrt()]).unwrap())
            .collect();
        let rotated: Vec<Point<3>> =
            points.iter().map(|p| Point::new([p[1], p[2], p[0]]).unwrap()).collect();
        for strategy in SearchStrategy::ALL {
            let (a, sa) = choose_storage_dim(&points, strategy).unwrap();
            let (b, sb) = choose_storage_dim(&rotated, strategy).unwrap();
            assert_eq!(sa[1], sb[0]);
            assert_eq!(sa[2], sb[1]);
            assert_eq!(sa[0], sb[2]);
            assert_eq!((a + 2) % 3, b);
        }
    }

    #[test]
    fn leaf_sort_breaks_ties_on_remaining_dims() {
        // (3,0),(1,9),(2,0),(1,4) with dim 1 constant-ish would be worse, force pdim 0
        let points = pts2(&[(3.0, 0.0), (1.0, 9.0), (2.0, 0.0), (1.0, 4.0)]);
        let leaf = build_leaf(&points, &[0, 1, 2, 3], SearchStrategy::Binary).unwrap();
        assert_eq!(leaf.header().pdim, 0);
        assert_eq!(leaf.header().sdim, 1);
        let order: Vec<(f32, f32)> = leaf.records().iter().map(|p| (p[0], p[1])).collect();
        assert_eq!(order, vec![(1.0, 4.0), (1.0, 9.0), (2.0, 0.0), (3.0, 0.0)]);
        assert_eq!(leaf.ids(), &[3, 1, 2, 0]);
    }

    #[test]
    fn random_leaves_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let points: Vec<Point<3>> = (0..1024)
                .map(|_| Point::new([rng.gen::<f32>().powi(4), (rng.gen_range(0..20) as f32), rng.gen()]).unwrap())
                .collect();
            let ids: Vec<u32> = (0..1024).collect();
            for strategy in SearchStrategy::ALL {
                let leaf = build_leaf(&points, &ids, strategy).unwrap();
                check_leaf(leaf.header(), leaf.records()).unwrap();
            }
        }
    }

    #[test]
    fn large_leaf_builds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points: Vec<Point<2>> =
            (0..2048).map(|_| Point::new([rng.gen(), rng.gen()]).unwrap()).collect();
        let ids: Vec<u32> = (0..2048).collect();
        let leaf = build_leaf(&points, &ids, SearchStrategy::Binary).unwrap();
        assert_eq!(leaf.len(), 2048);
        check_leaf(leaf.header(), leaf.records()).unwrap();
        assert!(matches!(build_leaf::<2>(&[], &[], SearchStrategy::Binary), Err(Error::Empty(_))));
    }

    #[test]
    fn header_is_forty_bytes() {
        assert_eq!(std::mem::size_of::<LeafHeader>(), 40);
    }
}
