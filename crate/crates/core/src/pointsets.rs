//! Point-set families: lattice cubes, lattice balls, jittered one-point-per-cell
//! sets and the Lens configuration in `R^4`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice;

/// Default cap on generated set sizes.
pub const DEFAULT_MAX_POINTS: u64 = 100_000_000;
/// Environment variable overriding [`DEFAULT_MAX_POINTS`].
pub const MAX_POINTS_ENV: &str = "THINBAND_MAX_POINTS";
/// Default jitter margin; jittered sets then have separation `0.2`.
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Current point budget: `THINBAND_MAX_POINTS` if set and valid, else the default.
pub fn max_points() -> u64 {
    std::env::var(MAX_POINTS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_POINTS)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

impl Provenance {
    fn new(generator: &str, params: &[(&str, String)], seed: Option<u64>) -> Self {
        Provenance {
            generator: generator.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            seed,
        }
    }
}

/// A finite set of distinct points in `R^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    provenance: Provenance,
    separation: Option<f64>,
}

impl PointSet {
    /// Build from row-major coordinates, checking finiteness and distinctness.
    pub fn from_coords(dim: usize, coords: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if dim < 2 {
            return Err(Error::input(format!("dimension must be at least 2, got {dim}")));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::input("coordinate count is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("point set has a non-finite coordinate"));
        }
        let set = PointSet { dim, coords, provenance, separation: None };
        if let Some((i, j)) = set.find_duplicate() {
            return Err(Error::input(format!("points {i} and {j} coincide")));
        }
        Ok(set)
    }

    /// Same as [`PointSet::from_coords`] but skips the distinctness check. Used for
    /// validator inputs that are allowed to be degenerate.
    pub fn from_coords_unchecked(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim >= 2 && coords.len().is_multiple_of(dim));
        PointSet { dim, coords, provenance: Provenance::default(), separation: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Claimed lower bound on pairwise Euclidean distances, when known.
    pub fn separation(&self) -> Option<f64> {
        self.separation
    }

    pub fn with_separation(mut self, c: Option<f64>) -> Self {
        self.separation = c;
        self
    }

    /// Shift every point by `v`.
    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::input("translation vector has the wrong dimension"));
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b))
            .collect();
        Ok(PointSet { coords, ..self.clone() })
    }

    /// Keep the points whose indices are listed, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        let mut provenance = self.provenance.clone();
        provenance.params.insert("subset".into(), indices.len().to_string());
        PointSet { dim: self.dim, coords, provenance, separation: self.separation }
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let key = |i: usize| -> Vec<u64> {
            // +0.0 and -0.0 are the same point
            self.point(i).iter().map(|c| (c + 0.0).to_bits()).collect()
        };
        order.sort_by_cached_key(|&i| key(i));
        order.windows(2).find(|w| key(w[0]) == key(w[1])).map(|w| (w[0], w[1]))
    }

    /// Write the CSV form: a `d,n` header line with the two values, then one
    /// point per line with 17 significant digits per coordinate.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},{}", self.dim, self.len())?;
        let mut line = String::new();
        for p in self.points() {
            line.clear();
            for (i, c) in p.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_real(*c));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let header = lines.next().ok_or_else(|| Error::Parse("empty point file".into()))??;
        let (d, n) = header
            .split_once(',')
            .and_then(|(d, n)| Some((d.trim().parse::<usize>().ok()?, n.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}, expected \"d,n\"")))?;
        let mut coords = Vec::with_capacity(d * n);
        for (row, line) in lines.enumerate() {
            let line = line?;
            let before = coords.len();
            for tok in line.split(',') {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: not a number: {tok:?}", row + 2)))?;
                coords.push(v);
            }
            if coords.len() - before != d {
                return Err(Error::Parse(format!("line {}: expected {d} coordinates", row + 2)));
            }
        }
        if coords.len() != d * n {
            return Err(Error::Parse(format!("header says {n} points, found {}", coords.len() / d.max(1))));
        }
        PointSet::from_coords(d, coords, Provenance::new("file", &[], None))
    }
}

/// Fixed 17-significant-digit formatting used for every real in CSV output.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_budget(count: u128, cap: u64, what: &str) -> Result<()> {
    if count > cap as u128 {
        return Err(Error::resource(format!(
            "{what} would have {count} points, above the cap of {cap} (set {MAX_POINTS_ENV} to raise it)"
        )));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// Visit every cell `[0, m)^d` in row-major order (last coordinate fastest).
fn for_each_cell(d: usize, m: u64, mut f: impl FnMut(&[u64])) {
    let mut idx = vec![0u64; d];
    loop {
        f(&idx);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < m {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// All integer points of `[0, m)^d`.
pub fn gen_lattice_cube(d: usize, m: u64) -> Result<PointSet> {
    gen_lattice_cube_capped(d, m, max_points())
}

pub fn gen_lattice_cube_capped(d: usize, m: u64, cap: u64) -> Result<PointSet> {
    check_dim(d)?;
    if m == 0 {
        return Err(Error::input("cube side m must be at least 1"));
    }
    check_budget((m as u128).saturating_pow(d as u32), cap, "lattice cube")?;
    let mut coords = Vec::with_capacity(m.pow(d as u32) as usize * d);
    for_each_cell(d, m, |c| coords.extend(c.iter().map(|&v| v as f64)));
    Ok(PointSet {
        dim: d,
        coords,
        provenance: Provenance::new("lattice-cube", &[("d", d.to_string()), ("m", m.to_string())], None),
        separation: Some(1.0),
    })
}

/// All integer points with Euclidean norm at most `radius`, using the same
/// integer membership rule as [`lattice::count_ball_lattice`].
pub fn gen_lattice_ball(d: usize, radius: f64) -> Result<PointSet> {
    gen_lattice_ball_capped(d, radius, max_points())
}

pub fn gen_lattice_ball_capped(d: usize, radius: f64, cap: u64) -> Result<PointSet> {
    check_dim(d)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input(format!("ball radius must be positive, got {radius}")));
    }
    let bound = lattice::squared_radius_bound(radius)?;
    let expected = lattice::count_within(d, bound);
    check_budget(expected as u128, cap, "lattice ball")?;
    let r = lattice::isqrt(bound) as i64;
    let mut coords = Vec::with_capacity(expected as usize * d);
    let mut p = vec![0i64; d];
    fn rec(axis: usize, rem: u64, r: i64, p: &mut [i64], out: &mut Vec<f64>) {
        let d = p.len();
        let reach = lattice::isqrt(rem) as i64;
        for x in -reach.min(r)..=reach.min(r) {
            p[axis] = x;
            if axis + 1 == d {
                out.extend(p.iter().map(|&v| v as f64));
            } else {
                rec(axis + 1, rem - (x * x) as u64, r, p, out);
            }
        }
    }
    rec(0, bound, r, &mut p, &mut coords);
    debug_assert_eq!(coords.len() as u64, expected * d as u64);
    Ok(PointSet {
        dim: d,
        coords,
        provenance: Provenance::new(
            "lattice-ball",
            &[("d", d.to_string()), ("radius", radius.to_string())],
            None,
        ),
        separation: Some(1.0),
    })
}

/// One point per unit cell of `[0, m)^d`, uniform in the cell shrunk by `margin`
/// on every side. Pairwise separation is at least `2 * margin`.
pub fn gen_jittered(d: usize, m: u64, seed: u64, margin: f64) -> Result<PointSet> {
    gen_jittered_capped(d, m, seed, margin, max_points())
}

pub fn gen_jittered_capped(d: usize, m: u64, seed: u64, margin: f64, cap: u64) -> Result<PointSet> {
    check_dim(d)?;
    if m == 0 {
        return Err(Error::input("cube side m must be at least 1"));
    }
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::input(format!("margin must lie in (0, 0.5), got {margin}")));
    }
    check_budget((m as u128).saturating_pow(d as u32), cap, "jittered set")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 1.0 - 2.0 * margin;
    let mut coords = Vec::with_capacity(m.pow(d as u32) as usize * d);
    for_each_cell(d, m, |c| {
        for &ci in c {
            let u: f64 = rng.gen();
            coords.push(ci as f64 + margin + span * u);
        }
    });
    Ok(PointSet {
        dim: d,
        coords,
        provenance: Provenance::new(
            "jittered",
            &[("d", d.to_string()), ("m", m.to_string()), ("margin", margin.to_string())],
            Some(seed),
        ),
        separation: Some(2.0 * margin),
    })
}

/// `n/2` equally spaced points on each of the circles
/// `{(cos t, sin t, 0, 0)/sqrt 2}` and `{(0, 0, cos t, sin t)/sqrt 2}`.
/// Every cross pair is at Euclidean distance 1.
pub fn gen_lens(n: u64) -> Result<PointSet> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::input(format!("lens size must be a positive even integer, got {n}")));
    }
    check_budget(n as u128, max_points(), "lens")?;
    let half = n / 2;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut coords = Vec::with_capacity(n as usize * 4);
    for i in 0..half {
        let t = std::f64::consts::TAU * i as f64 / half as f64;
        coords.extend_from_slice(&[r * t.cos(), r * t.sin(), 0.0, 0.0]);
    }
    for i in 0..half {
        let t = std::f64::consts::TAU * i as f64 / half as f64;
        coords.extend_from_slice(&[0.0, 0.0, r * t.cos(), r * t.sin()]);
    }
    let separation = if half > 1 {
        2.0 * r * (std::f64::consts::PI / half as f64).sin()
    } else {
        1.0
    };
    Ok(PointSet {
        dim: 4,
        coords,
        provenance: Provenance::new("lens", &[("n", n.to_string())], None),
        separation: Some(separation.min(1.0)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Pair closer than the required separation.
    Separation { i: usize, j: usize, distance: f64 },
    /// Unit cell of the reference cube holding a number of points other than one.
    CellOccupancy { cell: Vec<i64>, count: usize },
    /// Point outside the reference cube `[0, side)^d`.
    OutsideCube { i: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub side: u64,
    pub violations: Vec<Violation>,
    /// Violations beyond this many are counted but not listed.
    pub truncated: usize,
}

const MAX_LISTED_VIOLATIONS: usize = 1000;

/// Check the well-distributed definition literally: every pair at Euclidean
/// distance at least `c`, and every unit cell of `[0, ceil(n^{1/d}))^d` holding
/// exactly one point. Nothing is recentred.
pub fn validate_well_distributed(set: &PointSet, c: f64) -> Result<ValidationReport> {
    if set.is_empty() {
        return Err(Error::input("cannot validate an empty point set"));
    }
    if c <= 0.0 || c.is_nan() {
        return Err(Error::input("separation constant must be positive"));
    }
    let d = set.dim();
    let n = set.len();
    let side = integer_root_ceil(n as u64, d as u32);
    let mut violations = Vec::new();
    let mut total = 0usize;
    let mut push = |v: Violation, violations: &mut Vec<Violation>| {
        total += 1;
        if violations.len() < MAX_LISTED_VIOLATIONS {
            violations.push(v);
        }
    };

    // Separation: bucket points into cells of side c, compare neighbours only.
    let mut buckets: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, p) in set.points().enumerate() {
        let key = p.iter().map(|x| (x / c).floor() as i64).collect();
        buckets.entry(key).or_default().push(i);
    }
    let mut offsets = vec![Vec::new()];
    for _ in 0..d {
        offsets = offsets
            .into_iter()
            .flat_map(|o: Vec<i64>| (-1..=1).map(move |x| [o.clone(), vec![x]].concat()))
            .collect();
    }
    for (key, members) in &buckets {
        for off in &offsets {
            let nk: Vec<i64> = key.iter().zip(off).map(|(a, b)| a + b).collect();
            let Some(others) = buckets.get(&nk) else { continue };
            for &i in members {
                for &j in others {
                    if j <= i {
                        continue;
                    }
                    let dist = euclid(set.point(i), set.point(j));
                    if dist < c {
                        push(Violation::Separation { i, j, distance: dist }, &mut violations);
                    }
                }
            }
        }
    }

    // Occupancy of the unit cells of the reference cube.
    let mut occupancy: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for (i, p) in set.points().enumerate() {
        let cell: Vec<i64> = p.iter().map(|x| x.floor() as i64).collect();
        if cell.iter().any(|&v| v < 0 || v >= side as i64) {
            push(Violation::OutsideCube { i }, &mut violations);
        } else {
            *occupancy.entry(cell).or_default() += 1;
        }
    }
    for_each_cell(d, side, |cell| {
        let key: Vec<i64> = cell.iter().map(|&v| v as i64).collect();
        let count = occupancy.get(&key).copied().unwrap_or(0);
        if count != 1 {
            push(Violation::CellOccupancy { cell: key, count }, &mut violations);
        }
    });

    Ok(ValidationReport {
        ok: total == 0,
        side,
        truncated: total - violations.len(),
        violations,
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest `s` with `s^k >= n`.
pub fn integer_root_ceil(n: u64, k: u32) -> u64 {
    let mut s = (n as f64).powf(1.0 / k as f64).round() as u64;
    while (s as u128).pow(k) < n as u128 {
        s += 1;
    }
    while s > 0 && ((s - 1) as u128).pow(k) >= n as u128 {
        s -= 1;
    }
    s
}
