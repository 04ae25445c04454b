//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//! The performance criterion only warns.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thinband_core::analysis::{
    band_scan, energy_scan, integer_distance_scan, sharpness_scan, DeltaRule, Family, KRule, ScanConfig, ScanKind,
};
use thinband_core::exec::Execution;
use thinband_core::fourier::{decay_stability, decay_table, DecayGrid};
use thinband_core::geometry::NormBody;
use thinband_core::lattice::{count_ball_lattice, unit_ball_volume};
use thinband_core::paircount::{
    count_band_bruteforce_with, count_band_grid_with, count_in_band_brute, count_near_integer, theorem_band_width,
    Band, BandQuery, CellGrid,
};
use thinband_core::pointsets::{gen_jittered, gen_lattice_ball, gen_lattice_cube, gen_lens, PointSet, DEFAULT_MARGIN};

enum Outcome {
    Pass(String),
    Fail(String),
    Warn(String),
}

fn report(id: u32, name: &str, outcome: &Outcome, secs: f64) {
    let (tag, detail) = match outcome {
        Outcome::Pass(d) => ("PASS", d),
        Outcome::Fail(d) => ("FAIL", d),
        Outcome::Warn(d) => ("WARN", d),
    };
    // written to the raw handle so the line shows up in captured test logs too
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[{tag}] criterion {id} ({name}, {secs:.1} s): {detail}");
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_body(rng: &mut ChaCha8Rng, d: usize) -> NormBody {
    match rng.gen_range(0..3) {
        0 => NormBody::euclidean(d).unwrap(),
        1 => NormBody::ellipsoid((0..d).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap(),
        _ => {
            let p = if rng.gen_bool(0.5) { rng.gen_range(1.2..2.0) } else { rng.gen_range(2.0..6.0) };
            NormBody::pnorm(d, p).unwrap()
        }
    }
}

fn random_set(rng: &mut ChaCha8Rng, family: usize) -> PointSet {
    let d = rng.gen_range(2..=3);
    let max_side = |d: usize| if d == 2 { 44 } else { 12 };
    match family {
        0 => gen_lattice_cube(d, rng.gen_range(1..=max_side(d))).unwrap(),
        1 => {
            let r_max = if d == 2 { 25.0 } else { 7.5 };
            gen_lattice_ball(d, rng.gen_range(0.5..r_max)).unwrap()
        }
        2 => gen_jittered(d, rng.gen_range(1..=max_side(d)), rng.gen(), rng.gen_range(0.01..0.49)).unwrap(),
        _ => gen_lens(2 * rng.gen_range(1..=1000)).unwrap(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut mismatches = Vec::new();
    let mut max_n = 0;
    let mut nonzero = 0;
    for i in 0..200 {
        let set = random_set(&mut rng, i % 4);
        let d = set.dim();
        let body = random_body(&mut rng, d);
        let width = 10f64.powf(rng.gen_range(-6.0..0.5));
        let lo = if set.len() >= 2 && rng.gen_bool(0.75) {
            // anchor the band on an actual pair distance so most bands are hit
            let i = rng.gen_range(0..set.len());
            let j = (i + rng.gen_range(1..set.len())) % set.len();
            let g = body.gauge_diff(set.point(i), set.point(j));
            (g - rng.gen_range(0.0..1.0) * width).max(0.01)
        } else {
            let diameter = thinband_core::paircount::bounding_diameter(&set) / body.equivalence_constants().0;
            rng.gen_range(0.01..diameter.max(0.02) * 1.1)
        };
        let band = if rng.gen_bool(0.5) { Band::closed(lo, lo + width) } else { Band::half_open(lo, lo + width) }.unwrap();
        let grid = CellGrid::for_set(&set).unwrap().count_band(Execution::Parallel, &body, band);
        let brute = count_in_band_brute(Execution::Parallel, &set, &body, band);
        max_n = max_n.max(set.len());
        nonzero += (brute > 0) as usize;
        if grid != brute {
            mismatches.push(format!("config {i}: grid {grid} vs brute {brute} ({body}, {band:?}, n={})", set.len()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatches.is_empty() && secs < 120.0 && max_n <= 2000,
        format!(
            "200 configurations, {} mismatches, {nonzero} with nonzero counts, max n {max_n}, {secs:.1} s (< 120 s){}",
            mismatches.len(),
            mismatches.first().map(|m| format!("; first: {m}")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let r = sharpness_scan(Execution::Parallel, 2, &[16, 32, 64, 128], 256).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let Some(fit) = r.fit else {
        return Outcome::Fail("no fit".into());
    };
    let target = 4.0 / 3.0;
    let ok = (fit.exponent - target).abs() <= 0.1 && r.ratio_spread <= 4.0 && secs < 300.0;
    let ratios: Vec<String> = r.rows.iter().map(|x| format!("q={}: {:.4}", x.q, x.ratio)).collect();
    verdict(
        ok,
        format!(
            "exponent {:.4} (target 4/3 +- 0.1), count/n^(4/3) spread {:.3} (<= 4) [{}], {secs:.1} s (< 300 s)",
            fit.exponent,
            r.ratio_spread,
            ratios.join(", ")
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = ScanConfig {
        kind: ScanKind::Band,
        family: Family::Jittered,
        d: 2,
        n_list: vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
        k_rule: KRule::Dyadic,
        fixed_k_fraction: 0.25,
        delta_rule: DeltaRule::Theorem,
        ..ScanConfig::default()
    };
    let r = band_scan(Execution::Parallel, &cfg).unwrap();
    let fixed: Vec<String> =
        r.rows.iter().filter(|x| x.fixed_rule).map(|x| format!("n={}: {:.4}", x.n, x.ratio)).collect();
    let ok = r.empirical_c.is_finite() && r.empirical_c > 0.0 && r.fixed_rule_spread <= 4.0;
    verdict(
        ok,
        format!(
            "empirical C = {:.4} over {} rows with 1 < k < n^(1/2); ratio at k = n^(1/2)/4 spread {:.4} (<= 4) [{}]",
            r.empirical_c,
            r.rows.iter().filter(|x| x.in_range).count(),
            r.fixed_rule_spread,
            fixed.join(", ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let cfg = ScanConfig {
        kind: ScanKind::IntegerDistance,
        family: Family::LatticeCube,
        d: 2,
        n_list: (10..=16).map(|j| 1u64 << j).collect(),
        delta_rule: DeltaRule::Theorem,
        ..ScanConfig::default()
    };
    let r = integer_distance_scan(Execution::Parallel, &cfg).unwrap();
    let Some(fit) = r.fit else {
        return Outcome::Fail("no fit".into());
    };
    let within = r.rows.iter().all(|x| x.count as f64 <= x.theorem_expr * r.empirical_c * (1.0 + 1e-12));
    let ok = (fit.exponent - 1.5).abs() <= 0.15 && within && r.consistent;
    verdict(
        ok,
        format!(
            "exponent {:.4} (target 1.5 +- 0.15, r^2 {:.4}); counts <= C n^(11/6) with C = {:.4}: {within}; \
             direct vs summed bands consistent on {} rows: {}; n = {:?}",
            fit.exponent,
            fit.r_squared,
            r.empirical_c,
            r.consistency_rows,
            r.consistent,
            r.rows.iter().map(|x| x.n).collect::<Vec<_>>()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [100u64, 1000] {
        let set = gen_lens(n).unwrap();
        let count = count_near_integer(&set, 1e-6).unwrap();
        let bound = 2 * (n / 2) * (n / 2);
        ok &= count >= bound;
        parts.push(format!("n={n}: {count} >= {bound}"));
    }
    verdict(ok, parts.join(", "))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let rows = decay_table(Execution::Parallel, &DecayGrid::default()).unwrap();
    let st = decay_stability(&rows);
    let secs = start.elapsed().as_secs_f64();
    let worst = rows.iter().max_by(|a, b| a.rel_err.total_cmp(&b.rel_err)).unwrap();
    let ok = st.max_factor < 2.0 && st.max_rel_err <= 1e-6 && secs < 120.0 && st.full.is_finite();
    verdict(
        ok,
        format!(
            "{} grid points, C_emp {:.4}, worst full/half factor {:.4} (< 2) [halves: {}; over d/t/width halves only {:.4}], \
             max relative error vs quadrature {:.2e} (<= 1e-6, at d={} t={} w={} xi={}), {secs:.1} s (< 120 s)",
            rows.len(),
            st.full,
            st.max_factor,
            st.halves.iter().map(|(n, h)| format!("{n}: {h:.4}")).collect::<Vec<_>>().join(", "),
            st.parameter_factor,
            st.max_rel_err,
            worst.d,
            worst.t,
            worst.width,
            worst.xi
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = energy_scan(Execution::Parallel, 2, 1.5, &[8, 16, 32, 64, 128], thinband_core::analysis::DEFAULT_SEED, DEFAULT_MARGIN)
        .unwrap();
    let Some(fit) = r.fit else {
        return Outcome::Fail("no fit".into());
    };
    let values: Vec<String> = r.rows.iter().map(|x| format!("q={}: {:.5}", x.q, x.energy)).collect();
    verdict(fit.exponent.abs() <= 0.1, format!("slope {:.4} (|slope| <= 0.1) [{}]", fit.exponent, values.join(", ")))
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, expected) in [(1.0, 5u64), (2.0, 13), (5.0, 81)] {
        let got = count_ball_lattice(2, r).unwrap().count;
        // independent enumeration over the bounding square
        let ri = r as i64;
        let brute = (-ri..=ri).flat_map(|x| (-ri..=ri).map(move |y| x * x + y * y)).filter(|&s| s as f64 <= r * r).count();
        ok &= got == expected && brute as u64 == expected;
        parts.push(format!("N_2({r}) = {got}"));
    }
    let w2 = unit_ball_volume(2);
    let w3 = unit_ball_volume(3);
    ok &= (w2 - std::f64::consts::PI).abs() <= 1e-12 && (w3 - 4.0 * std::f64::consts::PI / 3.0).abs() <= 1e-12;
    parts.push(format!("omega_2 = {w2}, omega_3 = {w3}"));
    verdict(ok, parts.join(", "))
}

fn criterion_9() -> Outcome {
    let set = gen_jittered(2, 1000, 9, DEFAULT_MARGIN).unwrap();
    let n = set.len() as u64;
    let query = BandQuery::new(NormBody::euclidean(2).unwrap(), 250.0, theorem_band_width(n, 2)).unwrap();
    let start = Instant::now();
    let r = count_band_grid_with(Execution::Sequential, &set, &query).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("n = {n}, k = 250, delta = {:.4}: count {} in {secs:.2} s single-threaded (target < 10 s)", query.delta, r.count);
    if secs < 10.0 {
        Outcome::Pass(detail)
    } else {
        Outcome::Warn(detail)
    }
}

fn main() {
    // keep the parallel and sequential counters honest on a small case first
    let set = gen_jittered(2, 40, 1, DEFAULT_MARGIN).unwrap();
    let q = BandQuery::new(NormBody::pnorm(2, 3.0).unwrap(), 7.0, 0.5).unwrap();
    assert_eq!(
        count_band_grid_with(Execution::Sequential, &set, &q).unwrap().count,
        count_band_bruteforce_with(Execution::Parallel, &set, &q).unwrap().count
    );

    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        (1, "oracle equivalence", criterion_1),
        (2, "sharpness at k ~ n^(1/d)", criterion_2),
        (3, "thin-annulus bound constant", criterion_3),
        (4, "integer-distance lattice scaling", criterion_4),
        (5, "lens construction", criterion_5),
        (6, "annulus Fourier decay", criterion_6),
        (7, "energy boundedness", criterion_7),
        (8, "exact lattice values", criterion_8),
        (9, "grid performance", criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        report(id, name, &outcome, start.elapsed().as_secs_f64());
        if matches!(outcome, Outcome::Fail(_)) {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        eprintln!("acceptance: all criteria passed");
    } else {
        eprintln!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
