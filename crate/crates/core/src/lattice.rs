//! Exact lattice point counts `N_d(R) = #{p in Z^d : |p| <= R}` and the
//! discrepancy `D_d(R) = N_d(R) - omega_d R^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::pointsets::{max_points, MAX_POINTS_ENV};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeShell {
    pub d: usize,
    pub radius: f64,
    pub count: u64,
    pub main_term: f64,
    pub discrepancy: f64,
}

/// Volume of the unit ball in `R^d`, `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // omega_d = omega_{d-2} * 2 pi / d
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= std::f64::consts::TAU / k as f64;
        k += 2;
    }
    v
}

/// Floor of the square root of `n`.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while (r as u128) * (r as u128) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128) * ((r + 1) as u128) <= n as u128 {
        r += 1;
    }
    r
}

/// Largest integer `B` with `B <= R^2`, decided exactly: the sign of
/// `R*R - m` is read off a fused multiply-add, which rounds once.
pub fn squared_radius_bound(radius: f64) -> Result<u64> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::input(format!("radius must be finite and nonnegative, got {radius}")));
    }
    let sq = radius * radius;
    if sq >= 2f64.powi(52) {
        return Err(Error::resource(format!("radius {radius} is beyond exact integer range")));
    }
    let mut b = sq.floor() as u64;
    while radius.mul_add(radius, -((b + 1) as f64)) >= 0.0 {
        b += 1;
    }
    while b > 0 && radius.mul_add(radius, -(b as f64)) < 0.0 {
        b -= 1;
    }
    Ok(b)
}

/// Number of `p in Z^d` with `|p|^2 <= bound`.
pub fn count_within(d: usize, bound: u64) -> u64 {
    count_within_with(Execution::Sequential, d, bound)
}

fn count_within_with(exec: Execution, d: usize, bound: u64) -> u64 {
    match d {
        0 => 1,
        1 => 2 * isqrt(bound) + 1,
        2 => {
            let r = isqrt(bound);
            let rows = 2 * r as usize + 1;
            exec::sum_u64(exec, rows, |i| {
                let x = i as i64 - r as i64;
                2 * isqrt(bound - (x * x) as u64) + 1
            })
        }
        _ => {
            let r = isqrt(bound);
            let slices = 2 * r as usize + 1;
            exec::sum_u64(exec, slices, |i| {
                let x = i as i64 - r as i64;
                count_within(d - 1, bound - (x * x) as u64)
            })
        }
    }
}

/// `N_d(R)` with its main term and discrepancy.
pub fn count_ball_lattice(d: usize, radius: f64) -> Result<LatticeShell> {
    count_ball_lattice_with(Execution::default(), d, radius)
}

pub fn count_ball_lattice_with(exec: Execution, d: usize, radius: f64) -> Result<LatticeShell> {
    if d == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    let bound = squared_radius_bound(radius)?;
    let work = (2 * isqrt(bound) as u128 + 1).saturating_pow(d.saturating_sub(1) as u32);
    let cap = max_points();
    if work > cap as u128 {
        return Err(Error::resource(format!(
            "counting N_{d}({radius}) needs about {work} row evaluations, above the cap of {cap} (set {MAX_POINTS_ENV})"
        )));
    }
    let count = count_within_with(exec, d, bound);
    let main_term = unit_ball_volume(d) * radius.powi(d as i32);
    Ok(LatticeShell { d, radius, count, main_term, discrepancy: count as f64 - main_term })
}

/// `N_d(r2) - N_d(r1)`: lattice points with `r1 < |p| <= r2`.
pub fn shell_count(d: usize, r1: f64, r2: f64) -> Result<u64> {
    if !(r1 >= 0.0 && r1 <= r2) {
        return Err(Error::input(format!("shell radii must satisfy 0 <= r1 <= r2, got {r1}, {r2}")));
    }
    let outer = count_ball_lattice(d, r2)?.count;
    let inner = count_ball_lattice(d, r1)?.count;
    Ok(outer - inner)
}

/// Best known exponent `a` in `|D_d(R)| <= C R^{a + eps}`, with the `eps` dropped.
pub fn discrepancy_exponent(d: usize) -> Result<f64> {
    match d {
        0 | 1 => Err(Error::input(format!("discrepancy exponent needs d >= 2, got {d}"))),
        2 => Ok(131.0 / 208.0),
        3 => Ok(21.0 / 16.0),
        _ => Ok(d as f64 - 2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(d: usize, bound: i64) -> u64 {
        let r = (bound as f64).sqrt().floor() as i64 + 1;
        let mut idx = vec![-r; d];
        let mut count = 0;
        loop {
            if idx.iter().map(|v| v * v).sum::<i64>() <= bound {
                count += 1;
            }
            let mut a = 0;
            loop {
                if a == d {
                    return count;
                }
                idx[a] += 1;
                if idx[a] <= r {
                    break;
                }
                idx[a] = -r;
                a += 1;
            }
        }
    }

    #[test]
    fn exact_counts() {
        assert_eq!(brute(2, 1), 5);
        assert_eq!(brute(2, 4), 13);
        assert_eq!(brute(2, 25), 81);
        assert_eq!(count_ball_lattice(2, 0.0).unwrap().count, 1);
        assert_eq!(count_ball_lattice(2, 1.0).unwrap().count, 5);
        assert_eq!(count_ball_lattice(2, 2.0).unwrap().count, 13);
        assert_eq!(count_ball_lattice(2, 5.0).unwrap().count, 81);
        for d in 2..=4 {
            for b in 0..40 {
                assert_eq!(count_within(d, b), brute(d, b as i64), "d={d} bound={b}");
            }
        }
    }

    #[test]
    fn volumes() {
        use std::f64::consts::PI;
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
    }

    #[test]
    fn shells() {
        assert_eq!(shell_count(2, 1.0, 2.0).unwrap(), 8);
        assert_eq!(shell_count(2, 3.7, 3.7).unwrap(), 0);
        assert_eq!(shell_count(2, 0.0, 1.0).unwrap(), 4);
        assert!(shell_count(2, 2.0, 1.0).is_err());
    }

    #[test]
    fn exponents() {
        assert_eq!(discrepancy_exponent(2).unwrap(), 131.0 / 208.0);
        assert_eq!(discrepancy_exponent(3).unwrap(), 1.3125);
        assert_eq!(discrepancy_exponent(5).unwrap(), 3.0);
        assert!(discrepancy_exponent(1).is_err());
    }

    #[test]
    fn squared_bound_is_exact() {
        assert_eq!(squared_radius_bound(5.0).unwrap(), 25);
        assert_eq!(squared_radius_bound(2f64.sqrt()).unwrap(), 2);
        // the double nearest sqrt(3) is below sqrt(3)
        assert_eq!(squared_radius_bound(3f64.sqrt()).unwrap(), 2);
        assert_eq!(squared_radius_bound(0.5).unwrap(), 0);
        assert!(squared_radius_bound(-1.0).is_err());
    }

    #[test]
    fn integer_sqrt() {
        for n in 0..10_000u64 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
        assert_eq!(isqrt(u64::MAX), u32::MAX as u64);
    }

    #[test]
    fn desk_scale_discrepancy_envelope() {
        for r in 1..=2000u32 {
            let s = count_ball_lattice(2, r as f64).unwrap();
            assert!(s.discrepancy.abs() <= 10.0 * (r as f64).powf(2.0 / 3.0), "R={r}: {}", s.discrepancy);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        for d in 2..=3 {
            let a = count_ball_lattice_with(Execution::Sequential, d, 57.3).unwrap();
            let b = count_ball_lattice_with(Execution::Parallel, d, 57.3).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn monotone_and_shell_partition(d in 2usize..4, radii in proptest::collection::vec(0.0f64..25.0, 1..6)) {
            let mut rs = radii.clone();
            rs.sort_by(f64::total_cmp);
            let counts: Vec<u64> = rs.iter().map(|&r| count_ball_lattice(d, r).unwrap().count).collect();
            prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
            let mut total = count_ball_lattice(d, 0.0).unwrap().count;
            let mut prev = 0.0;
            for &r in &rs {
                total += shell_count(d, prev, r).unwrap();
                prev = r;
            }
            prop_assert_eq!(total, *counts.last().unwrap());
            for (&r, &c) in rs.iter().zip(&counts) {
                if r >= 1.0 {
                    prop_assert_eq!((c - 1) % 2, 0);
                }
            }
        }
    }
}
