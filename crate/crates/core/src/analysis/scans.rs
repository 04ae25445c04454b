use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fourier::{discrete_energy_with, MeasureParams};
use crate::geometry::NormBody;
use crate::lattice::{self, unit_ball_volume};
use crate::paircount::{
    bounding_diameter, count_band_grid_with, count_near_integer_aligned, count_near_integer_with, near_integer_bands,
    theorem_band_width, theorem_bound, theorem_range_ok, trivial_bound, BandQuery, CellGrid,
};
use crate::pointsets::{gen_jittered, gen_lattice_ball, gen_lattice_cube, gen_lens, integer_root_ceil, PointSet, DEFAULT_MARGIN};

use super::{csv_real, fit_exponent, loglog_svg, spread, ScalingFit, WindowCheck};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 1729;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LatticeCube,
    LatticeBall,
    Jittered,
    Lens,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice-cube" => Ok(Family::LatticeCube),
            "lattice-ball" => Ok(Family::LatticeBall),
            "jittered" => Ok(Family::Jittered),
            "lens" => Ok(Family::Lens),
            _ => Err(Error::input(format!(
                "unknown family {s:?} (expected lattice-cube, lattice-ball, jittered or lens)"
            ))),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LatticeCube => "lattice-cube",
            Family::LatticeBall => "lattice-ball",
            Family::Jittered => "jittered",
            Family::Lens => "lens",
        }
    }
}

fn integer_root_floor(n: u64, d: u32) -> u64 {
    let c = integer_root_ceil(n, d);
    if (c as u128).pow(d) > n as u128 {
        c - 1
    } else {
        c
    }
}

/// A member of `family` with about `n` points: cubes and jittered sets use side
/// `floor(n^{1/d})`, lattice balls the radius `(n / omega_d)^{1/d}`, lens sets
/// `n` rounded down to even. The actual size is `set.len()`.
pub fn family_set(family: Family, d: usize, n: u64, seed: u64, margin: f64) -> Result<PointSet> {
    match family {
        Family::LatticeCube => gen_lattice_cube(d, integer_root_floor(n, d as u32)),
        Family::Jittered => gen_jittered(d, integer_root_floor(n, d as u32), seed, margin),
        Family::LatticeBall => gen_lattice_ball(d, (n as f64 / unit_ball_volume(d)).powf(1.0 / d as f64)),
        Family::Lens => {
            if d != 4 {
                return Err(Error::input(format!("the lens family lives in d = 4, got d = {d}")));
            }
            gen_lens(n - n % 2)
        }
    }
}

/// How the inner radii `k` are chosen for each `n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum KRule {
    /// Powers of two in `(1, n^{1/d})`.
    #[default]
    Dyadic,
    /// The single value `fraction * n^{1/d}`.
    Fraction { fraction: f64 },
    /// Fixed values, the same for every `n`.
    Values { values: Vec<f64> },
}

impl KRule {
    pub fn ks(&self, n: u64, d: usize) -> Vec<f64> {
        let top = (n as f64).powf(1.0 / d as f64);
        match self {
            KRule::Dyadic => (1..64).map(|j| 2f64.powi(j)).take_while(|&k| k < top).collect(),
            KRule::Fraction { fraction } => vec![fraction * top],
            KRule::Values { values } => values.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaRule {
    /// `n^{-(d-1)/(d(d+1))}`.
    #[default]
    Theorem,
    Fixed(f64),
}

impl DeltaRule {
    pub fn delta(self, n: u64, d: usize) -> f64 {
        match self {
            DeltaRule::Theorem => theorem_band_width(n, d),
            DeltaRule::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    #[default]
    Band,
    IntegerDistance,
    Sharpness,
    Energy,
}

/// Acceptance windows. Unset entries fall back to per-kind defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Windows {
    pub exponent: Option<[f64; 2]>,
    pub spread_max: Option<f64>,
}

/// JSON-driven scan configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub kind: ScanKind,
    pub family: Family,
    pub d: usize,
    pub body: String,
    pub n_list: Vec<u64>,
    pub q_list: Vec<u64>,
    pub k_rule: KRule,
    /// `k = fixed_k_fraction * n^{1/d}` is always added to band scans and
    /// drives the fit against `n`.
    pub fixed_k_fraction: f64,
    pub delta_rule: DeltaRule,
    pub seed: u64,
    pub margin: f64,
    /// Energy exponent; `(d + 1) / 2` when unset.
    pub s: Option<f64>,
    pub output: Option<String>,
    pub windows: Windows,
    pub min_fit_n: u64,
    /// Largest `n` for which the per-`k` band sum is recomputed in the
    /// integer-distance consistency check.
    pub consistency_max_n: u64,
    pub plot: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            kind: ScanKind::Band,
            family: Family::Jittered,
            d: 2,
            body: "euclidean".into(),
            n_list: Vec::new(),
            q_list: Vec::new(),
            k_rule: KRule::Dyadic,
            fixed_k_fraction: 0.25,
            delta_rule: DeltaRule::Theorem,
            seed: DEFAULT_SEED,
            margin: DEFAULT_MARGIN,
            s: None,
            output: None,
            windows: Windows::default(),
            min_fit_n: 256,
            consistency_max_n: 16384,
            plot: false,
        }
    }
}

impl ScanConfig {
    pub fn body(&self) -> Result<NormBody> {
        NormBody::parse(&self.body, self.d)
    }

    pub fn energy_s(&self) -> f64 {
        self.s.unwrap_or((self.d as f64 + 1.0) / 2.0)
    }

    /// Check everything that can be checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::input(format!("dimension must be at least 2, got {}", self.d)));
        }
        self.body()?;
        let need_n = matches!(self.kind, ScanKind::Band | ScanKind::IntegerDistance);
        if need_n && self.n_list.is_empty() {
            return Err(Error::input("n_list must not be empty for this scan"));
        }
        if !need_n && self.q_list.is_empty() {
            return Err(Error::input("q_list must not be empty for this scan"));
        }
        if self.q_list.contains(&0) {
            return Err(Error::input("q values must be at least 1"));
        }
        if self.family == Family::Lens && self.d != 4 {
            return Err(Error::input("the lens family lives in d = 4"));
        }
        if let DeltaRule::Fixed(v) = self.delta_rule {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!("fixed delta must be positive, got {v}")));
            }
        }
        if !(self.fixed_k_fraction > 0.0 && self.fixed_k_fraction.is_finite()) {
            return Err(Error::input("fixed_k_fraction must be positive"));
        }
        if let KRule::Values { values } = &self.k_rule {
            if values.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
                return Err(Error::input("k values must be positive"));
            }
        }
        if !(self.margin >= 0.0 && self.margin < 0.5) {
            return Err(Error::input(format!("jitter margin must lie in [0, 0.5), got {}", self.margin)));
        }
        match self.kind {
            ScanKind::Energy => {
                if self.d != 2 && self.d != 3 {
                    return Err(Error::input("energy scans support d = 2, 3"));
                }
                MeasureParams::new(1, self.energy_s()).validate(self.d)?;
            }
            ScanKind::Sharpness => {
                if self.body != "euclidean" {
                    return Err(Error::input("the sharpness scan uses the Euclidean body"));
                }
            }
            ScanKind::IntegerDistance => {
                for &n in &self.n_list {
                    let delta = self.delta_rule.delta(n, self.d);
                    if n >= 2 && (delta >= 0.5 || delta.is_nan()) {
                        return Err(Error::input(format!(
                            "near-integer tolerance {delta} at n = {n} is not below 0.5"
                        )));
                    }
                }
            }
            ScanKind::Band => {}
        }
        Ok(())
    }

    fn effective_windows(&self) -> (Option<[f64; 2]>, Option<f64>) {
        let d = self.d as f64;
        let default = match self.kind {
            ScanKind::Sharpness => {
                let t = 2.0 - 2.0 / (d + 1.0);
                (Some([t - 0.1, t + 0.1]), Some(4.0))
            }
            ScanKind::Band => (None, Some(4.0)),
            ScanKind::IntegerDistance => {
                let t = 2.0 - 1.0 / d;
                (Some([t - 0.15, t + 0.15]), None)
            }
            ScanKind::Energy => (Some([-0.1, 0.1]), None),
        };
        (self.windows.exponent.or(default.0), self.windows.spread_max.or(default.1))
    }
}

fn fit_if_possible(samples: &[(f64, f64)]) -> Option<ScalingFit> {
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return None;
    }
    fit_exponent(samples).ok()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub n: u64,
    pub k: f64,
    pub delta: f64,
    pub count: u64,
    pub theorem_bound: f64,
    pub trivial_bound: f64,
    pub ratio: f64,
    pub trivial_ratio: f64,
    pub in_range: bool,
    pub fixed_rule: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandScanReport {
    pub rows: Vec<BandRow>,
    /// Largest `count / theorem_bound` over rows with `k` in the stated range.
    pub empirical_c: f64,
    /// Largest `count / trivial_bound` over all rows.
    pub trivial_c: f64,
    /// `max / min` of `count / theorem_bound` across `n` at the fixed `k` rule.
    pub fixed_rule_spread: f64,
    pub fit_vs_n: Option<ScalingFit>,
    pub fit_vs_k: Option<ScalingFit>,
}

pub fn band_scan(exec: Execution, cfg: &ScanConfig) -> Result<BandScanReport> {
    cfg.validate()?;
    let body = cfg.body()?;
    let d = cfg.d;
    let mut rows = Vec::new();
    for &n_req in &cfg.n_list {
        let set = family_set(cfg.family, d, n_req, cfg.seed, cfg.margin)?;
        let n = set.len() as u64;
        let fixed_k = cfg.fixed_k_fraction * (n as f64).powf(1.0 / d as f64);
        let mut ks = cfg.k_rule.ks(n, d);
        ks.push(fixed_k);
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        let delta = cfg.delta_rule.delta(n, d);
        let grid = if n >= 2 { Some(CellGrid::for_set(&set)?) } else { None };
        for k in ks {
            if k <= 0.0 || k.is_nan() {
                continue;
            }
            let query = BandQuery::new(body.clone(), k, delta)?;
            let count = match &grid {
                Some(g) => g.count_band(exec, &query.body, query.band()),
                None => 0,
            };
            let tb = theorem_bound(n, d, k);
            let tr = trivial_bound(n, d, k);
            rows.push(BandRow {
                n,
                k,
                delta,
                count,
                theorem_bound: tb,
                trivial_bound: tr,
                ratio: if tb > 0.0 { count as f64 / tb } else { 0.0 },
                trivial_ratio: if tr > 0.0 { count as f64 / tr } else { 0.0 },
                in_range: theorem_range_ok(n, d, k),
                fixed_rule: k == fixed_k,
            });
        }
    }
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.k.total_cmp(&b.k)));
    let empirical_c = rows.iter().filter(|r| r.in_range).map(|r| r.ratio).fold(0.0, f64::max);
    let trivial_c = rows.iter().map(|r| r.trivial_ratio).fold(0.0, f64::max);
    let fixed: Vec<&BandRow> = rows.iter().filter(|r| r.fixed_rule && r.n >= cfg.min_fit_n).collect();
    let fixed_rule_spread = spread(&fixed.iter().map(|r| r.ratio).collect::<Vec<_>>());
    let fit_vs_n = fit_if_possible(
        &fixed.iter().filter(|r| r.count > 0).map(|r| (r.n as f64, r.count as f64)).collect::<Vec<_>>(),
    )
    .map(|mut f| {
        f.empirical_c = fixed.iter().map(|r| r.ratio).fold(0.0, f64::max);
        f
    });
    let n_max = rows.iter().map(|r| r.n).max().unwrap_or(0);
    let at_max: Vec<&BandRow> = rows.iter().filter(|r| r.n == n_max && r.count > 0).collect();
    let fit_vs_k = fit_if_possible(&at_max.iter().map(|r| (r.k, r.count as f64)).collect::<Vec<_>>()).map(|mut f| {
        f.empirical_c = at_max.iter().map(|r| r.ratio).fold(0.0, f64::max);
        f
    });
    Ok(BandScanReport { rows, empirical_c, trivial_c, fixed_rule_spread, fit_vs_n, fit_vs_k })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerRow {
    pub n: u64,
    pub delta: f64,
    /// Strict near-integer count.
    pub count: u64,
    /// `n^{2 - 1/d}`.
    pub baseline: f64,
    /// `n^{2 - 1/d + 2/(d(d+1))}`.
    pub theorem_expr: f64,
    pub ratio_baseline: f64,
    pub ratio_theorem: f64,
    /// Direct count with distances in `[k - delta, k + delta)`, `k >= 1`.
    pub aligned: Option<u64>,
    /// Sum of grid band counts over those half-open bands.
    pub band_sum: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerScanReport {
    pub rows: Vec<IntegerRow>,
    pub fit: Option<ScalingFit>,
    /// Largest `count / theorem_expr`.
    pub empirical_c: f64,
    /// Every row where the check ran has `aligned == band_sum`.
    pub consistent: bool,
    pub consistency_rows: usize,
}

/// Sum over `k = 1..=ceil(diameter)` of ordered counts in `[k - delta, k + delta)`.
pub fn summed_band_counts(exec: Execution, set: &PointSet, delta: f64) -> Result<u64> {
    if set.len() < 2 {
        return Ok(0);
    }
    let body = NormBody::euclidean(set.dim())?;
    let grid = CellGrid::for_set(set)?;
    let k_max = (bounding_diameter(set) + delta).ceil() as u64;
    Ok(near_integer_bands(delta, k_max)?.into_iter().map(|b| grid.count_band(exec, &body, b)).sum())
}

pub fn integer_distance_scan(exec: Execution, cfg: &ScanConfig) -> Result<IntegerScanReport> {
    cfg.validate()?;
    let d = cfg.d;
    let df = d as f64;
    let mut rows = Vec::new();
    for &n_req in &cfg.n_list {
        let set = family_set(cfg.family, d, n_req, cfg.seed, cfg.margin)?;
        let n = set.len() as u64;
        let delta = cfg.delta_rule.delta(n, d);
        let baseline = (n as f64).powf(2.0 - 1.0 / df);
        let theorem_expr = (n as f64).powf(2.0 - 1.0 / df + 2.0 / (df * (df + 1.0)));
        let (count, aligned, band_sum) = if n < 2 {
            (0, Some(0), Some(0))
        } else {
            let count = count_near_integer_with(exec, &set, delta)?;
            if n <= cfg.consistency_max_n {
                let aligned = count_near_integer_aligned(exec, &set, delta)?;
                let summed = summed_band_counts(exec, &set, delta)?;
                (count, Some(aligned), Some(summed))
            } else {
                (count, None, None)
            }
        };
        rows.push(IntegerRow {
            n,
            delta,
            count,
            baseline,
            theorem_expr,
            ratio_baseline: count as f64 / baseline,
            ratio_theorem: count as f64 / theorem_expr,
            aligned,
            band_sum,
        });
    }
    rows.sort_by_key(|r| r.n);
    let empirical_c = rows.iter().map(|r| r.ratio_theorem).fold(0.0, f64::max);
    let fit = fit_if_possible(
        &rows
            .iter()
            .filter(|r| r.n >= cfg.min_fit_n && r.count > 0)
            .map(|r| (r.n as f64, r.count as f64))
            .collect::<Vec<_>>(),
    )
    .map(|mut f| {
        f.empirical_c = empirical_c;
        f
    });
    let checked: Vec<&IntegerRow> = rows.iter().filter(|r| r.aligned.is_some()).collect();
    let consistent = checked.iter().all(|r| r.aligned == r.band_sum);
    let consistency_rows = checked.len();
    Ok(IntegerScanReport { rows, fit, empirical_c, consistent, consistency_rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub q: u64,
    pub radius: f64,
    pub n: u64,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// `n^{2 - 2/(d+1)}`.
    pub scale: f64,
    pub ratio: f64,
    /// Lattice points with `lo < |p| <= hi`.
    pub shell_points: u64,
    /// `lo^{d-1} (hi - lo)`, the small-`k` shell prediction without its constant.
    pub shell_prediction: f64,
    pub shell_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub d: usize,
    pub rows: Vec<SharpnessRow>,
    pub fit: Option<ScalingFit>,
    /// `max / min` of `count / n^{2 - 2/(d+1)}` over the fitted rows.
    pub ratio_spread: f64,
}

/// Lattice ball of radius `10 q`, band `[q, q + q^{-(d-1)/(d+1)}]`, Euclidean.
pub fn sharpness_scan(exec: Execution, d: usize, q_list: &[u64], min_fit_n: u64) -> Result<SharpnessReport> {
    if d < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {d}")));
    }
    let body = NormBody::euclidean(d)?;
    let df = d as f64;
    let mut rows = Vec::new();
    for &q in q_list {
        if q == 0 {
            return Err(Error::input("q values must be at least 1"));
        }
        let qf = q as f64;
        let radius = 10.0 * qf;
        let set = gen_lattice_ball(d, radius)?;
        let n = set.len() as u64;
        let width = qf.powf(-(df - 1.0) / (df + 1.0));
        let query = BandQuery::new(body.clone(), qf, width)?;
        let count = count_band_grid_with(exec, &set, &query)?.count;
        let scale = (n as f64).powf(2.0 - 2.0 / (df + 1.0));
        let shell_points = lattice::shell_count(d, qf, qf + width)?;
        let shell_prediction = qf.powf(df - 1.0) * width;
        rows.push(SharpnessRow {
            q,
            radius,
            n,
            lo: qf,
            hi: qf + width,
            count,
            scale,
            ratio: count as f64 / scale,
            shell_points,
            shell_prediction,
            shell_ratio: shell_points as f64 / shell_prediction,
        });
    }
    rows.sort_by_key(|r| r.q);
    let fitted: Vec<&SharpnessRow> = rows.iter().filter(|r| r.q >= 2 && r.count > 0 && r.n >= min_fit_n).collect();
    let fit = fit_if_possible(&fitted.iter().map(|r| (r.n as f64, r.count as f64)).collect::<Vec<_>>()).map(|mut f| {
        f.empirical_c = fitted.iter().map(|r| r.ratio).fold(0.0, f64::max);
        f
    });
    let ratio_spread = spread(&fitted.iter().map(|r| r.ratio).collect::<Vec<_>>());
    Ok(SharpnessReport { d, rows, fit, ratio_spread })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub d: usize,
    pub s: f64,
    pub q: u64,
    pub n: u64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
    pub fit: Option<ScalingFit>,
}

/// The set for scale `q`: jittered on `[0, 2q)^d`, which covers the part of the
/// cut-off's support `|p| < 2q` in the positive orthant.
pub fn energy_set(d: usize, q: u64, seed: u64, margin: f64) -> Result<PointSet> {
    gen_jittered(d, 2 * q, seed, margin)
}

pub fn energy_scan(exec: Execution, d: usize, s: f64, q_list: &[u64], seed: u64, margin: f64) -> Result<EnergyReport> {
    MeasureParams::new(1, s).validate(d)?;
    let mut rows = Vec::new();
    for &q in q_list {
        if q == 0 {
            return Err(Error::input("q values must be at least 1"));
        }
        let set = energy_set(d, q, seed, margin)?;
        let energy = discrete_energy_with(exec, &set, &MeasureParams::new(q, s))?;
        rows.push(EnergyRow { d, s, q, n: set.len() as u64, energy });
    }
    rows.sort_by_key(|r| r.q);
    let fit = fit_if_possible(
        &rows.iter().filter(|r| r.energy > 0.0).map(|r| (r.q as f64, r.energy)).collect::<Vec<_>>(),
    );
    Ok(EnergyReport { rows, fit })
}

/// Files produced by [`run_scan`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutput {
    pub csv: String,
    pub summary: serde_json::Value,
    pub svg: Option<String>,
    pub pass: bool,
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn band_csv(report: &BandScanReport) -> String {
    let mut s = String::from("n,k,delta,count,theorem_bound,trivial_bound,ratio,in_range,fixed_rule\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            csv_real(r.k),
            csv_real(r.delta),
            r.count,
            csv_real(r.theorem_bound),
            csv_real(r.trivial_bound),
            csv_real(r.ratio),
            r.in_range,
            r.fixed_rule
        );
    }
    s
}

pub fn integer_csv(report: &IntegerScanReport) -> String {
    let mut s = String::from("n,delta,count,baseline,theorem_expr,ratio_baseline,ratio_theorem,aligned,band_sum\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            csv_real(r.delta),
            r.count,
            csv_real(r.baseline),
            csv_real(r.theorem_expr),
            csv_real(r.ratio_baseline),
            csv_real(r.ratio_theorem),
            opt_u64(r.aligned),
            opt_u64(r.band_sum)
        );
    }
    s
}

pub fn sharpness_csv(report: &SharpnessReport) -> String {
    let mut s = String::from("q,radius,n,lo,hi,count,scale,ratio,shell_points,shell_prediction,shell_ratio\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.q,
            csv_real(r.radius),
            r.n,
            csv_real(r.lo),
            csv_real(r.hi),
            r.count,
            csv_real(r.scale),
            csv_real(r.ratio),
            r.shell_points,
            csv_real(r.shell_prediction),
            csv_real(r.shell_ratio)
        );
    }
    s
}

pub fn energy_csv(report: &EnergyReport) -> String {
    let mut s = String::from("d,s,q,energy\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{},{}", r.d, csv_real(r.s), r.q, csv_real(r.energy));
    }
    s
}

fn exponent_check(fit: &Option<ScalingFit>, window: Option<[f64; 2]>) -> Option<WindowCheck> {
    window.map(|[lo, hi]| WindowCheck::new("exponent", fit.as_ref().map_or(f64::NAN, |f| f.exponent), lo, hi))
}

/// Run the scan described by `cfg` and render its CSV, JSON summary and
/// (when `cfg.plot`) SVG plot.
pub fn run_scan(exec: Execution, cfg: &ScanConfig) -> Result<ScanOutput> {
    cfg.validate()?;
    let (exp_window, spread_max) = cfg.effective_windows();
    let mut checks = Vec::new();
    let (csv, fits, constants, plot_fit, labels) = match cfg.kind {
        ScanKind::Band => {
            let r = band_scan(exec, cfg)?;
            checks.extend(exponent_check(&r.fit_vs_n, exp_window));
            if let Some(m) = spread_max {
                checks.push(WindowCheck::new("fixed_rule_spread", r.fixed_rule_spread, 1.0, m));
            }
            (
                band_csv(&r),
                json!({ "vs_n": r.fit_vs_n, "vs_k": r.fit_vs_k }),
                json!({ "empirical_c": r.empirical_c, "trivial_c": r.trivial_c, "fixed_rule_spread": r.fixed_rule_spread }),
                r.fit_vs_n.clone(),
                ("n", "count"),
            )
        }
        ScanKind::IntegerDistance => {
            let r = integer_distance_scan(exec, cfg)?;
            checks.extend(exponent_check(&r.fit, exp_window));
            checks.push(WindowCheck::new("consistency", if r.consistent { 1.0 } else { 0.0 }, 1.0, 1.0));
            (
                integer_csv(&r),
                json!({ "vs_n": r.fit }),
                json!({ "empirical_c": r.empirical_c, "consistency_rows": r.consistency_rows, "consistent": r.consistent }),
                r.fit.clone(),
                ("n", "near-integer count"),
            )
        }
        ScanKind::Sharpness => {
            let r = sharpness_scan(exec, cfg.d, &cfg.q_list, cfg.min_fit_n)?;
            checks.extend(exponent_check(&r.fit, exp_window));
            if let Some(m) = spread_max {
                checks.push(WindowCheck::new("ratio_spread", r.ratio_spread, 1.0, m));
            }
            (
                sharpness_csv(&r),
                json!({ "vs_n": r.fit }),
                json!({ "ratio_spread": r.ratio_spread, "empirical_c": r.fit.as_ref().map(|f| f.empirical_c) }),
                r.fit.clone(),
                ("n", "count"),
            )
        }
        ScanKind::Energy => {
            let r = energy_scan(exec, cfg.d, cfg.energy_s(), &cfg.q_list, cfg.seed, cfg.margin)?;
            checks.extend(exponent_check(&r.fit, exp_window));
            let max = r.rows.iter().map(|x| x.energy).fold(0.0, f64::max);
            (energy_csv(&r), json!({ "vs_q": r.fit }), json!({ "max_energy": max }), r.fit.clone(), ("q", "energy"))
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    let summary = json!({
        "config": cfg,
        "fits": fits,
        "empirical_constants": constants,
        "windows": checks,
        "pass": pass,
    });
    let svg = if cfg.plot {
        plot_fit.map(|f| loglog_svg(&format!("{:?} scan, d = {}", cfg.kind, cfg.d), labels.0, labels.1, &f))
    } else {
        None
    };
    Ok(ScanOutput { csv, summary, svg, pass })
}
