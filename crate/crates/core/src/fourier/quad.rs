//! Globally adaptive 15-point Gauss-Kronrod quadrature.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    /// Integral of `|f|` as seen by the Kronrod rule.
    pub abs_value: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Kronrod pass: `(kronrod, |kronrod - gauss|, int |f|)`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x), f(c + x));
        kronrod += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs())
}

fn piece<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let (value, error, abs_value) = gauss_kronrod(f, a, b);
    Piece { a, b, value, error, abs_value }
}

/// Integrate `f` over `[a, b]`, bisecting the worst interval until the summed
/// error estimate is below `max(abs_tol, rel_tol |I|, 50 eps int|f|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::numeric("quadrature limits must be finite"));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, abs_value: 0.0, evaluations: 0 });
    }
    let mut heap = BinaryHeap::new();
    let first = piece(&f, a, b);
    let (mut value, mut error, mut abs_value) = (first.value, first.error, first.abs_value);
    heap.push(first);
    let mut evaluations = 15;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.abs()).max(50.0 * f64::EPSILON * abs_value);
        if error <= target {
            return Ok(Quadrature { value, error, abs_value, evaluations });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::numeric(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {value:e}, error {error:e} > target {target:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = piece(&f, worst.a, mid);
        let right = piece(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs_value += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
        if !value.is_finite() {
            return Err(Error::numeric(format!("quadrature on [{a}, {b}] produced a non-finite value")));
        }
    }
}

/// Split `[a, b]` into `panels` equal panels and integrate each adaptively;
/// suited to integrands that oscillate with a known period. Each panel gets the
/// absolute tolerance `abs_tol / panels`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    opts: QuadOptions,
) -> Result<Quadrature> {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let per = QuadOptions { abs_tol: opts.abs_tol / panels as f64, ..opts };
    let mut total = Quadrature { value: 0.0, error: 0.0, abs_value: 0.0, evaluations: 0 };
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == panels { b } else { a + (i + 1) as f64 * h };
        let q = integrate(&f, lo, hi, QuadOptions { rel_tol: 0.0, ..per })?;
        total.value += q.value;
        total.error += q.error;
        total.abs_value += q.abs_value;
        total.evaluations += q.evaluations;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_weights() {
        let kronrod: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let gauss: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((kronrod - 2.0).abs() < 1e-15);
        assert!((gauss - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_exactness() {
        // Kronrod-15 is exact through degree 22, Gauss-7 through degree 13.
        for deg in 0..=22 {
            let f = |x: f64| x.powi(deg);
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let (k, err, _) = gauss_kronrod(&f, -1.0, 1.0);
            assert!((k - exact).abs() < 1e-14, "degree {deg}");
            if deg <= 13 {
                assert!(err < 1e-14, "gauss degree {deg}: {err}");
            }
        }
    }

    #[test]
    fn adaptive_examples() {
        let q = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, QuadOptions::default()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-13);
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-12);
        let q = integrate_panels(|x: f64| (200.0 * x).cos(), 0.0, 3.0, 200, QuadOptions::default()).unwrap();
        assert!((q.value - (600f64).sin() / 200.0).abs() < 1e-13);
        assert_eq!(integrate(|x| x, 1.0, 1.0, QuadOptions::default()).unwrap().value, 0.0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 0.0, max_intervals: 8 };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, opts);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
