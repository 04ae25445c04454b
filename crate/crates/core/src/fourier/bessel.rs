//! Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series below `x = 5`, Miller's backward recurrence up to `x = 30`, and
//! the Hankel asymptotic expansion beyond, truncated at its smallest term.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SERIES_MAX: f64 = 5.0;
const MILLER_MAX: f64 = 30.0;

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_MAX {
        series(0, ax)
    } else if ax < MILLER_MAX {
        miller(ax).0
    } else {
        hankel(0, ax)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_MAX {
        series(1, ax)
    } else if ax < MILLER_MAX {
        miller(ax).1
    } else {
        hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn series(order: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = if order == 0 { 1.0 } else { h };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..200 {
        let kf = k as f64;
        term *= -h2 / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(J0(x), J1(x))` by backward recurrence normalised with
/// `J0 + 2 (J2 + J4 + ...) = 1`.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x + 15.0 + (50.0 * x).sqrt()) as usize / 2) + 2;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-250; // J_k
    let mut norm = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur is now J_{k-1}
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if k == 2 {
            j1 = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += cur;
    (cur / norm, j1 / norm)
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..400 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= last || next.abs() < 1e-18 {
            break;
        }
        last = next.abs();
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    // cos / sin of x - (order/2 + 1/4) pi, expanded so x itself is never shifted.
    let (s, c) = x.sin_cos();
    let (cos_chi, sin_chi) = match order {
        0 => ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2),
        _ => ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2),
    };
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}
