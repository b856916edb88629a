//! Synthetic point generators.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Independent uniform coordinates in `[0, 1)`.
    Uniform,
    /// Gaussian blobs of varying spread and weight.
    Clusters,
    /// Points along a wiggly "coastline", dense "cities" on it, and a thin
    /// uniform background. Third coordinate, when present, is a bursty
    /// timestamp-like value.
    Skewed,
    /// The skewed mixture mapped to north-eastern US latitude/longitude,
    /// with Unix-time seconds as the third coordinate.
    OsmLike,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] =
        [SyntheticKind::Uniform, SyntheticKind::Clusters, SyntheticKind::Skewed, SyntheticKind::OsmLike];

    pub fn as_str(&self) -> &'static str {
        match self {
            SyntheticKind::Uniform => "uniform",
            SyntheticKind::Clusters => "clusters",
            SyntheticKind::Skewed => "skewed",
            SyntheticKind::OsmLike => "osm-like",
        }
    }
}

impl std::fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic distribution `{s}`")))
    }
}

/// Draws `n` points of the given distribution; a pure function of its arguments.
pub fn generate<const D: usize>(kind: SyntheticKind, n: usize, seed: u64) -> Result<Vec<Point<D>>> {
    if !(1..=3).contains(&D) {
        return Err(Error::UnsupportedDims(D));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1f_2d_3c_4b);
    let mut out = Vec::with_capacity(n);
    match kind {
        SyntheticKind::Uniform => {
            for _ in 0..n {
                out.push(finish([rng.gen(), rng.gen(), rng.gen()]));
            }
        }
        SyntheticKind::Clusters => {
            let blobs = Blobs::new(&mut rng, 32, |r| [r.gen_range(0.05..0.95), r.gen_range(0.05..0.95), r.gen_range(0.05..0.95)]);
            for _ in 0..n {
                out.push(finish(blobs.sample(&mut rng)));
            }
        }
        SyntheticKind::Skewed | SyntheticKind::OsmLike => {
            let coast = Coastline::new(&mut rng);
            for _ in 0..n {
                let [x, y, t] = coast.sample(&mut rng);
                let c = if kind == SyntheticKind::OsmLike {
                    // latitude first, as in OSM extracts
                    [38.5 + 9.0 * y, -80.5 + 13.6 * x, 1.2e9 + 4.0e8 * t]
                } else {
                    [x, y, t]
                };
                out.push(finish(c));
            }
        }
    }
    Ok(out)
}

fn finish<const D: usize>(c: [f64; 3]) -> Point<D> {
    let mut coords = [0f32; D];
    for (k, v) in coords.iter_mut().enumerate() {
        *v = c[k] as f32;
    }
    Point::new(coords).expect("generators produce finite values")
}

/// Weighted Gaussian mixture.
struct Blobs {
    centers: Vec<[f64; 3]>,
    spreads: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Blobs {
    fn new(rng: &mut ChaCha8Rng, count: usize, mut center: impl FnMut(&mut ChaCha8Rng) -> [f64; 3]) -> Self {
        let centers: Vec<_> = (0..count).map(|_| center(rng)).collect();
        let spreads = (0..count).map(|_| 10f64.powf(rng.gen_range(-3.3..-1.3))).collect();
        let mut total = 0.0;
        let cumulative = (0..count)
            .map(|i| {
                total += 1.0 / (i as f64 + 1.0);
                total
            })
            .collect();
        Blobs { centers, spreads, cumulative }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c < u).min(self.centers.len() - 1)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let i = self.pick(rng);
        let normal = Normal::new(0.0, self.spreads[i]).expect("positive spread");
        let c = self.centers[i];
        [c[0] + normal.sample(rng), c[1] + normal.sample(rng), c[2] + normal.sample(rng)]
    }
}

struct Coastline {
    cities: Blobs,
    phase: f64,
}

impl Coastline {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let phase = rng.gen_range(0.0..TAU);
        let cities = Blobs::new(rng, 64, |r| {
            let x = r.gen::<f64>().powf(1.5);
            [x, shore(x, phase), r.gen()]
        });
        Coastline { cities, phase }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let u: f64 = rng.gen();
        let [x, y] = if u < 0.55 {
            let x = rng.gen::<f64>().powf(1.5);
            let spread = 0.002 + 0.02 * rng.gen::<f64>().powi(3);
            let offset: f64 = Normal::new(0.0, spread).unwrap().sample(rng);
            [x, shore(x, self.phase) + offset.abs()]
        } else if u < 0.9 {
            let c = self.cities.sample(rng);
            [c[0], c[1]]
        } else {
            [rng.gen(), rng.gen()]
        };
        // timestamp-like: edits get more frequent over time, with bursts
        let t = if rng.gen_bool(0.8) {
            1.0 - rng.gen::<f64>().powi(3)
        } else {
            let burst = rng.gen_range(0..12) as f64 / 12.0;
            burst + rng.gen::<f64>() * 0.004
        };
        [x.clamp(0.0, 1.0), y.clamp(0.0, 1.0), t.clamp(0.0, 1.0)]
    }
}

fn shore(x: f64, phase: f64) -> f64 {
    0.45 + 0.25 * (TAU * 1.3 * x + phase).sin() + 0.05 * (TAU * 7.0 * x).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_sensitive() {
        for kind in SyntheticKind::ALL {
            let a = generate::<2>(kind, 1000, 9).unwrap();
            assert_eq!(a, generate::<2>(kind, 1000, 9).unwrap());
            assert_ne!(a, generate::<2>(kind, 1000, 10).unwrap());
            assert_eq!(generate::<3>(kind, 10, 1).unwrap().len(), 10);
        }
        assert!(generate::<4>(SyntheticKind::Uniform, 1, 1).is_err());
    }

    #[test]
    fn osm_like_stays_in_the_north_east() {
        for p in generate::<3>(SyntheticKind::OsmLike, 5000, 3).unwrap() {
            assert!((38.5..=47.5).contains(&p[0]), "{p:?}");
            assert!((-80.5..=-66.9).contains(&p[1]), "{p:?}");
            assert!((1.2e9..=1.6e9).contains(&p[2]), "{p:?}");
        }
    }

    #[test]
    fn parses_names() {
        for kind in SyntheticKind::ALL {
            assert_eq!(kind.as_str().parse::<SyntheticKind>().unwrap(), kind);
        }
    }
}
