//! Ordered pair counts in thin distance bands.
//!
//! Two counters share one membership expression ([`NormBody::gauge_diff`] followed
//! by [`Band::contains`]): a brute-force oracle over all ordered pairs and an
//! output-sensitive cell grid. They return identical counts on every input.

mod brute;
mod grid;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geometry::NormBody;
use crate::pointsets::PointSet;

pub use brute::count_in_band_brute;
pub use grid::CellGrid;

/// A band `[lo, hi]` (or `[lo, hi)`) of gauge distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub upper_closed: bool,
}

impl Band {
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Band::checked(lo, hi, true)
    }

    pub fn half_open(lo: f64, hi: f64) -> Result<Self> {
        Band::checked(lo, hi, false)
    }

    fn checked(lo: f64, hi: f64, upper_closed: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return Err(Error::input(format!("band needs 0 < lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Band { lo, hi, upper_closed })
    }

    #[inline]
    pub fn contains(&self, g: f64) -> bool {
        self.lo <= g && if self.upper_closed { g <= self.hi } else { g < self.hi }
    }
}

/// The closed band `[k, k + delta]` under `body`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandQuery {
    pub body: NormBody,
    pub k: f64,
    pub delta: f64,
}

impl BandQuery {
    pub fn new(body: NormBody, k: f64, delta: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::input(format!("inner radius k must be positive, got {k}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::input(format!("band width must be positive, got {delta}")));
        }
        Ok(BandQuery { body, k, delta })
    }

    pub fn band(&self) -> Band {
        Band { lo: self.k, hi: self.k + self.delta, upper_closed: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Bruteforce,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCount {
    /// Ordered pairs; unordered pairs are `count / 2`.
    pub count: u64,
    pub query: BandQuery,
    pub n: usize,
    pub method: Method,
    pub elapsed: f64,
}

fn check_dims(set: &PointSet, body: &NormBody) -> Result<()> {
    if set.dim() != body.dim() {
        return Err(Error::input(format!(
            "point set has dimension {} but body has dimension {}",
            set.dim(),
            body.dim()
        )));
    }
    Ok(())
}

pub fn count_band_bruteforce(set: &PointSet, query: &BandQuery) -> Result<BandCount> {
    count_band_bruteforce_with(Execution::default(), set, query)
}

pub fn count_band_bruteforce_with(exec: Execution, set: &PointSet, query: &BandQuery) -> Result<BandCount> {
    check_dims(set, &query.body)?;
    let start = Instant::now();
    let count = count_in_band_brute(exec, set, &query.body, query.band());
    Ok(BandCount {
        count,
        query: query.clone(),
        n: set.len(),
        method: Method::Bruteforce,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

pub fn count_band_grid(set: &PointSet, query: &BandQuery) -> Result<BandCount> {
    count_band_grid_with(Execution::default(), set, query)
}

pub fn count_band_grid_with(exec: Execution, set: &PointSet, query: &BandQuery) -> Result<BandCount> {
    check_dims(set, &query.body)?;
    let start = Instant::now();
    let count = if set.len() < 2 {
        0
    } else {
        CellGrid::for_set(set)?.count_band(exec, &query.body, query.band())
    };
    Ok(BandCount {
        count,
        query: query.clone(),
        n: set.len(),
        method: Method::Grid,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Ordered pairs `p != p'` whose Euclidean distance is strictly within `delta`
/// of an integer.
pub fn count_near_integer(set: &PointSet, delta: f64) -> Result<u64> {
    count_near_integer_with(Execution::default(), set, delta)
}

pub fn count_near_integer_with(exec: Execution, set: &PointSet, delta: f64) -> Result<u64> {
    check_near_integer_delta(delta)?;
    Ok(count_pairs_by_distance(exec, set, |r| (r - r.round()).abs() < delta))
}

/// Near-integer count under the partition convention: a pair counts when its
/// distance lies in `[k - delta, k + delta)` for some integer `k >= 1`. The
/// endpoints are computed exactly as the per-`k` bands in
/// [`near_integer_bands`], so the result equals the sum of those band counts.
pub fn count_near_integer_aligned(exec: Execution, set: &PointSet, delta: f64) -> Result<u64> {
    check_near_integer_delta(delta)?;
    Ok(count_pairs_by_distance(exec, set, |r| {
        let k = r.round();
        k >= 1.0 && (k - delta) <= r && r < (k + delta)
    }))
}

/// Disjoint bands `[k - delta, k + delta)` for `k = 1..=k_max`.
pub fn near_integer_bands(delta: f64, k_max: u64) -> Result<Vec<Band>> {
    check_near_integer_delta(delta)?;
    (1..=k_max)
        .map(|k| Band::half_open(k as f64 - delta, k as f64 + delta))
        .collect()
}

fn check_near_integer_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::input(format!(
            "near-integer tolerance must lie in (0, 0.5), got {delta}"
        )));
    }
    Ok(())
}

/// Ordered count of pairs whose Euclidean distance satisfies `pred`. Each
/// unordered pair is evaluated once and counted twice; the distance expression
/// is symmetric bit for bit.
fn count_pairs_by_distance<F>(exec: Execution, set: &PointSet, pred: F) -> u64
where
    F: Fn(f64) -> bool + Sync + Send,
{
    let d = set.dim();
    let body = NormBody::euclidean(d).expect("point sets have dimension >= 2");
    let coords = set.coords();
    let n = set.len();
    2 * exec::sum_u64(exec, n, |i| {
        let p = &coords[i * d..(i + 1) * d];
        coords[(i + 1) * d..]
            .chunks_exact(d)
            .filter(|q| pred(body.gauge_diff(p, q)))
            .count() as u64
    })
}

/// Maximum Euclidean distance between two points, via the bounding box (an
/// upper bound on the diameter).
pub fn bounding_diameter(set: &PointSet) -> f64 {
    let d = set.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in set.points() {
        for a in 0..d {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    if set.is_empty() {
        return 0.0;
    }
    lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
}

/// Band width `n^{-(d-1)/(d(d+1))}` from the thin-annulus bound.
pub fn theorem_band_width(n: u64, d: usize) -> f64 {
    let d = d as f64;
    (n as f64).powf(-(d - 1.0) / (d * (d + 1.0)))
}

/// `n^{2 - 2/(d+1)} * (k / n^{1/d})^{(d-1)/2}`, the bound without its constant.
pub fn theorem_bound(n: u64, d: usize, k: f64) -> f64 {
    let (nf, df) = (n as f64, d as f64);
    let lambda = (k / nf.powf(1.0 / df)).powf((df - 1.0) / 2.0);
    nf.powf(2.0 - 2.0 / (df + 1.0)) * lambda
}

/// Whether `k` lies in the range `(1, n^{1/d})` where the bound is stated.
pub fn theorem_range_ok(n: u64, d: usize, k: f64) -> bool {
    k > 1.0 && k < (n as f64).powf(1.0 / d as f64)
}

/// `n k^{d-1}`: each point has `O(k^{d-1})` neighbours in a unit-width shell.
pub fn trivial_bound(n: u64, d: usize, k: f64) -> f64 {
    n as f64 * k.powi(d as i32 - 1)
}

/// Exponent `1/(d-1) - 4/((d-1)(d+1)) + 1/(d(d-1))` of the threshold above
/// which the thin-annulus bound beats the trivial one.
pub fn interest_threshold_exponent(d: usize) -> f64 {
    let d = d as f64;
    1.0 / (d - 1.0) - 4.0 / ((d - 1.0) * (d + 1.0)) + 1.0 / (d * (d - 1.0))
}

pub fn interest_threshold(n: u64, d: usize) -> f64 {
    (n as f64).powf(interest_threshold_exponent(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsets::{gen_lattice_cube, gen_lens, Provenance};

    fn two_points() -> PointSet {
        PointSet::from_coords(2, vec![0.0, 0.0, 1.0, 0.0], Provenance::default()).unwrap()
    }

    fn euclid(d: usize) -> NormBody {
        NormBody::euclidean(d).unwrap()
    }

    #[test]
    fn band_count_examples() {
        let q = BandQuery::new(euclid(2), 0.5, 1.0).unwrap();
        assert_eq!(count_band_bruteforce(&two_points(), &q).unwrap().count, 2);
        assert_eq!(count_band_grid(&two_points(), &q).unwrap().count, 2);

        let cube = gen_lattice_cube(2, 4).unwrap();
        let q = BandQuery::new(euclid(2), 1.0, 1e-4).unwrap();
        assert_eq!(count_band_bruteforce(&cube, &q).unwrap().count, 48);
        assert_eq!(count_band_grid(&cube, &q).unwrap().count, 48);

        let lens = gen_lens(6).unwrap();
        let q = BandQuery::new(euclid(4), 1.0 - 1e-9, 2e-9).unwrap();
        assert_eq!(count_band_bruteforce(&lens, &q).unwrap().count, 18);
        assert_eq!(count_band_grid(&lens, &q).unwrap().count, 18);

        let q = BandQuery::new(euclid(2), 100.0, 1.0).unwrap();
        assert_eq!(count_band_grid(&cube, &q).unwrap().count, 0);
    }

    #[test]
    fn band_count_metadata() {
        let cube = gen_lattice_cube(2, 4).unwrap();
        let q = BandQuery::new(euclid(2), 1.0, 0.5).unwrap();
        let c = count_band_grid(&cube, &q).unwrap();
        assert_eq!(c.n, 16);
        assert_eq!(c.method, Method::Grid);
        assert_eq!(c.query, q);
        assert!(c.elapsed >= 0.0);
        assert_eq!(count_band_bruteforce(&cube, &q).unwrap().method, Method::Bruteforce);
    }

    #[test]
    fn invalid_queries() {
        assert!(BandQuery::new(euclid(2), 0.0, 1.0).is_err());
        assert!(BandQuery::new(euclid(2), 1.0, 0.0).is_err());
        assert!(BandQuery::new(euclid(2), f64::NAN, 1.0).is_err());
        let q = BandQuery::new(euclid(3), 1.0, 1.0).unwrap();
        assert!(count_band_grid(&two_points(), &q).is_err());
        assert!(count_band_bruteforce(&two_points(), &q).is_err());
    }

    #[test]
    fn near_integer_examples() {
        assert_eq!(count_near_integer(&gen_lattice_cube(2, 2).unwrap(), 0.01).unwrap(), 8);
        assert_eq!(count_near_integer(&gen_lattice_cube(2, 1).unwrap(), 0.01).unwrap(), 0);
        assert_eq!(count_near_integer(&gen_lens(6).unwrap(), 1e-6).unwrap(), 18);
        assert!(count_near_integer(&two_points(), 0.5).is_err());
        assert!(count_near_integer(&two_points(), 0.0).is_err());
    }

    #[test]
    fn near_integer_is_strict() {
        // distance 1.25 is exactly 0.25 from an integer
        let s = PointSet::from_coords(2, vec![0.0, 0.0, 1.25, 0.0], Provenance::default()).unwrap();
        assert_eq!(count_near_integer(&s, 0.25).unwrap(), 0);
        assert_eq!(count_near_integer(&s, 0.2500001).unwrap(), 2);
    }

    #[test]
    fn aligned_count_is_sum_of_bands() {
        let cube = gen_lattice_cube(2, 9).unwrap();
        let delta = 0.17;
        let direct = count_near_integer_aligned(Execution::Sequential, &cube, delta).unwrap();
        let k_max = bounding_diameter(&cube).ceil() as u64 + 1;
        let grid = CellGrid::for_set(&cube).unwrap();
        let summed: u64 = near_integer_bands(delta, k_max)
            .unwrap()
            .into_iter()
            .map(|b| grid.count_band(Execution::Sequential, &euclid(2), b))
            .sum();
        assert_eq!(direct, summed);
        assert!(direct > 0);
    }

    #[test]
    fn formula_examples() {
        assert!((theorem_band_width(64, 2) - 0.5).abs() < 1e-15);
        assert!((theorem_band_width(4096, 3) - 0.25).abs() < 1e-15);
        assert!((theorem_band_width(1000, 2) - 1000f64.powf(-1.0 / 6.0)).abs() < 1e-15);

        assert!((theorem_bound(4096, 2, 16.0) - 32768.0).abs() < 1e-8);
        for (n, d) in [(4096u64, 2usize), (1000, 3), (10_000, 4)] {
            let root = (n as f64).powf(1.0 / d as f64);
            let full = (n as f64).powf(2.0 - 2.0 / (d as f64 + 1.0));
            assert!((theorem_bound(n, d, root) - full).abs() < 1e-9 * full);
        }
        // d = 2 form n^{4/3} (k / n^{1/2})^{1/2}
        let (n, k) = (12345u64, 7.5f64);
        let alt = (n as f64).powf(4.0 / 3.0) * (k / (n as f64).sqrt()).sqrt();
        assert!((theorem_bound(n, 2, k) - alt).abs() < 1e-9 * alt);

        assert_eq!(trivial_bound(100, 2, 10.0), 1000.0);
        assert_eq!(trivial_bound(100, 3, 10.0), 10000.0);

        assert!((interest_threshold_exponent(2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((interest_threshold_exponent(3) - 1.0 / 6.0).abs() < 1e-15);
        assert!((interest_threshold(64, 2) - 2.0).abs() < 1e-14);

        assert!(theorem_range_ok(4096, 2, 16.0));
        assert!(!theorem_range_ok(4096, 2, 64.0));
        assert!(!theorem_range_ok(4096, 2, 1.0));
    }
}
