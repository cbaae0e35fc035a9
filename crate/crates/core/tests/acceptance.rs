//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_rank::gf::prime_power;
use sparse_rank::harness::{
    rank_summaries, rate_summaries, simulate, simulate_ternary, strip_timing, ternary_summaries, DistConfig,
    Experiment, ExperimentConfig, SpecConfig,
};
use sparse_rank::lattice::{
    basis_identical, construct_basis, intersect_divisible, multisets_up_to_scaling, verify_basis,
};
use sparse_rank::linalg::{kernel, rank, sample_kernel, Echelon};
use sparse_rank::threshold::{condition_check, normalized_rank, phi, xorsat_threshold};
use sparse_rank::{DegreeDist, FieldCtx, FieldElem, ModelSpec, SparseMatrix};
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn spec(d: DegreeDist, k: DegreeDist, q: u32) -> ModelSpec {
    ModelSpec::new(d, k, q, None).unwrap()
}

fn poisson_cfg(mean: f64, k: u32) -> SpecConfig {
    SpecConfig {
        ddist: DistConfig::Poisson { mean, tol: 1e-12 },
        kdist: DistConfig::Fixed { value: k },
        q: 2,
        chi: None,
    }
}

fn fixed_cfg(d: u32, k: u32, chi_one: bool) -> SpecConfig {
    SpecConfig {
        ddist: DistConfig::Fixed { value: d },
        kdist: DistConfig::Fixed { value: k },
        q: 2,
        chi: chi_one.then(|| vec![(1, 1.0)]),
    }
}

fn mc(spec: SpecConfig, experiment: Experiment, n: usize, trials: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(spec, experiment);
    c.n_values = vec![n];
    c.trials = trials;
    c.seed = seed;
    c.frozen = false;
    c
}

fn within_time(t: Duration, limit: Duration) -> bool {
    t <= limit
}

fn c1_xorsat() -> Outcome {
    let start = Instant::now();
    let d = xorsat_threshold(3, 2, 1e-6).unwrap();
    let t = start.elapsed();
    let ok = (2.74..=2.76).contains(&d) && within_time(t, Duration::from_secs(5));
    (ok, format!("threshold {d:.6}, {t:.2?}"))
}

fn random_dist(rng: &mut ChaCha8Rng, min: u32) -> (DegreeDist, f64) {
    match rng.random_range(0..3) {
        0 if min == 1 => {
            let m = rng.random_range(0.3..6.0);
            (DegreeDist::poisson(m, 1e-16).unwrap(), m)
        }
        1 => {
            let v = rng.random_range(min..min + 6);
            (DegreeDist::fixed(v), v as f64)
        }
        _ => {
            let mut vals: Vec<u32> = (min..min + 8).collect();
            let len = rng.random_range(2..5);
            let mut atoms = Vec::new();
            let mut w: Vec<f64> = (0..len).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            for &wi in &w {
                let v = vals.remove(rng.random_range(0..vals.len()));
                atoms.push((v, wi));
            }
            let adjust: f64 = atoms.iter().map(|a| a.1).sum::<f64>() - 1.0;
            atoms[0].1 -= adjust;
            let mean = atoms.iter().map(|&(v, p)| v as f64 * p).sum();
            (DegreeDist::table(&atoms).unwrap(), mean)
        }
    }
}

fn c2_phi_anchors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (dd, d) = random_dist(&mut rng, 1);
        let (kd, k) = random_dist(&mut rng, 3);
        let q = [2, 3, 4, 5, 7, 8, 9][rng.random_range(0..7)];
        let s = spec(dd, kd, q);
        worst = worst.max((phi(&s, 0.0).unwrap() - (1.0 - d / k)).abs());
    }
    let t = DegreeDist::table(&[(3, 0.5), (4, 0.5)]).unwrap();
    let ex = spec(t.clone(), t, 2);
    let (p0, p1) = (phi(&ex, 0.0).unwrap(), phi(&ex, 1.0).unwrap());
    let r = condition_check(&ex);
    let ok = worst <= 1e-12 && p0.abs() <= 1e-9 && p1.abs() <= 1e-9 && !r.holds && r.boundary_case;
    (ok, format!("max |Φ(0) − (1 − d/k)| = {worst:.1e}; identical example Φ(0) = {p0:.1e}, Φ(1) = {p1:.1e}, holds = {}, boundary = {}", r.holds, r.boundary_case))
}

fn c3_classification() -> Outcome {
    let below = condition_check(&spec(DegreeDist::fixed(3), DegreeDist::fixed(8), 2));
    let equal = condition_check(&spec(DegreeDist::fixed(5), DegreeDist::fixed(5), 2));
    let power = condition_check(&spec(DegreeDist::powerlaw(3.5, 1, 1e-12).unwrap(), DegreeDist::fixed(3), 2));
    let zero_sums = condition_check(
        &ModelSpec::new(DegreeDist::fixed(4), DegreeDist::fixed(8), 2, Some(vec![(FieldElem::ONE, 1.0)])).unwrap(),
    );
    let outcomes =
        [below.holds, !equal.holds && equal.boundary_case, power.holds, !zero_sums.holds && !zero_sums.coprime];
    (outcomes.iter().all(|&b| b), format!("fixed d<k, d=k, power law, zero row sums: {outcomes:?}"))
}

fn c4_determinants() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut count = 0;
    for q in (2..=64u32).filter(|&q| prime_power(q as u64).is_some()) {
        count += 1;
        let f = FieldCtx::new(q).unwrap();
        let (m, a) = basis_identical(&f).unwrap();
        if m.det_abs != q.into() || a.det_abs != q.into() {
            bad.push(q);
        }
    }
    let f7 = FieldCtx::new(7).unwrap();
    let (_, a7) = basis_identical(&f7).unwrap();
    let printed = [
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 1],
        [0, 0, 1, 0, 1, 0],
        [0, 0, 1, 2, 0, 0],
        [0, 1, 0, 0, 1, 0],
        [1, 0, 0, 1, 1, 2],
    ];
    let a7_ok = (0..6).all(|i| (0..6).all(|j| a7.vectors[j][i] == printed[i][j]));
    let t = start.elapsed();
    let ok = bad.is_empty() && a7_ok && within_time(t, Duration::from_secs(10));
    (ok, format!("{count} prime powers, mismatches {bad:?}, A_7 printed form {a7_ok}, {t:.2?}"))
}

fn c5_modules() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut failures = Vec::new();
    for q in [2u32, 3, 4, 5, 7, 8, 9] {
        let f = FieldCtx::new(q).unwrap();
        for k0 in 3..=5 {
            for coeffs in multisets_up_to_scaling(&f, k0) {
                checked += 1;
                let ok = construct_basis(&f, &coeffs).map(|b| verify_basis(&f, &coeffs, &b).ok()).unwrap_or(false);
                if !ok {
                    failures.push(format!("q={q} {:?}", coeffs.iter().map(|c| c.0).collect::<Vec<_>>()));
                }
            }
        }
    }
    let t = start.elapsed();
    let ok = failures.is_empty() && within_time(t, Duration::from_secs(300));
    let shown: Vec<_> = failures.iter().take(5).collect();
    (ok, format!("{checked} coefficient classes, {} failures {shown:?}, {t:.2?}", failures.len()))
}

fn c6_intersection() -> Outcome {
    let mut results = Vec::new();
    for q in [3u32, 5, 7] {
        let f = FieldCtx::new(q).unwrap();
        for coeffs in [vec![1u16, 1, 1], vec![1, 1, 2]] {
            let coeffs: Vec<FieldElem> = coeffs.into_iter().map(FieldElem).collect();
            let b = construct_basis(&f, &coeffs).unwrap();
            for fd in [2u32, 4] {
                let r = intersect_divisible(&f, &b, fd).unwrap();
                results.push(r.holds && r.divisible_points > 0);
            }
        }
    }
    (
        results.iter().all(|&b| b),
        format!("{} of {} (q, coefficients, f_d) cases hold", results.iter().filter(|&&b| b).count(), results.len()),
    )
}

fn c7_rank_formula() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (cfg, n) in [(fixed_cfg(3, 8, false), 2000), (poisson_cfg(2.9, 3), 2001)] {
        let s = cfg.build().unwrap();
        let c = mc(cfg, Experiment::Rankformula, n, 100, 7);
        let recs = simulate(&c).unwrap();
        let sum = &rank_summaries(&recs, normalized_rank(&s))[0];
        ok &= sum.completed == 100 && sum.abs_dev <= 0.01;
        parts
            .push(format!("n={n}: mean {:.4} vs {:.4} (dev {:.4})", sum.mean_rank_over_n, sum.prediction, sum.abs_dev));
    }
    let t = start.elapsed();
    ok &= within_time(t, Duration::from_secs(600));
    (ok, format!("{}, {t:.2?}", parts.join("; ")))
}

fn c8_phase_transition() -> Outcome {
    let below = simulate(&mc(poisson_cfg(2.5, 3), Experiment::Fullrank, 999, 200, 8)).unwrap();
    let above = simulate(&mc(poisson_cfg(2.9, 3), Experiment::Fullrank, 999, 200, 8)).unwrap();
    let zero = simulate(&mc(fixed_cfg(4, 8, true), Experiment::Fullrank, 200, 50, 8)).unwrap();
    let (rb, ra, rz) = (&rate_summaries(&below)[0], &rate_summaries(&above)[0], &rate_summaries(&zero)[0]);
    let sums_zero = zero.iter().all(|r| r.error.is_none() && r.rows_sum_zero);
    let ok = rb.completed == 200
        && ra.completed == 200
        && rz.completed == 50
        && rb.rate >= 0.9
        && ra.rate <= 0.1
        && rz.full == 0
        && sums_zero;
    (
        ok,
        format!(
            "rate {:.3} at d=2.5, {:.3} at d=2.9, {} of {} full with zero row sums on every sample = {sums_zero}",
            rb.rate, ra.rate, rz.full, rz.completed
        ),
    )
}

fn c9_ternary() -> Outcome {
    let mut c = mc(poisson_cfg(2.5, 3), Experiment::NullityTernary, 2001, 30, 9);
    c.delta = Some(0.02);
    let recs = simulate_ternary(&c).unwrap();
    let s = &ternary_summaries(&recs, 2.5, 3.0, 0.02)[0];
    let ok = s.completed == 30 && s.within && s.steps_ok;
    (
        ok,
        format!(
            "mean nullity/n {:.4} vs bound {:.4} + 0.01, unit steps and rescans agree = {}",
            s.mean_nullity_over_n, s.bound, s.steps_ok
        ),
    )
}

fn brute_kernel(a: &SparseMatrix) -> Vec<Vec<FieldElem>> {
    let f = a.field();
    let (n, q) = (a.ncols(), f.q() as u16);
    let mut x = vec![FieldElem::ZERO; n];
    let mut out = Vec::new();
    loop {
        let zero = a
            .rows()
            .iter()
            .all(|r| r.iter().fold(FieldElem::ZERO, |s, &(j, v)| f.add(s, f.mul(v, x[j as usize]))).is_zero());
        if zero {
            out.push(x.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            x[i].0 += 1;
            if x[i].0 < q {
                break;
            }
            x[i] = FieldElem::ZERO;
            i += 1;
        }
    }
}

fn c10_exhaustive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    for _ in 0..200 {
        let q = if rng.random_bool(0.5) { 2 } else { 3 };
        let f = Arc::new(FieldCtx::new(q).unwrap());
        let n = rng.random_range(1..=12usize);
        let m = rng.random_range(1..=12usize);
        let density = rng.random_range(0.1..0.7);
        let rows = (0..m)
            .map(|_| {
                let mut row = Vec::new();
                for j in 0..n {
                    if rng.random_bool(density) {
                        row.push((j, FieldElem(rng.random_range(1..q) as u16)));
                    }
                }
                row
            })
            .collect();
        let a = SparseMatrix::from_rows(f.clone(), n, rows).unwrap();
        let ker = brute_kernel(&a);
        let nullity = (ker.len() as f64).log(q as f64).round() as usize;
        let k = kernel(&a).unwrap();
        let mut span = Echelon::new(f.clone(), n).unwrap();
        let basis_ok = k.basis.iter().all(|b| ker.contains(b) && span.insert_dense(b));
        let frozen: Vec<usize> = (0..n).filter(|&i| ker.iter().all(|x| x[i].is_zero())).collect();
        let sample = sample_kernel(&a, &mut rng).unwrap();
        let ok = (q as usize).pow(nullity as u32) == ker.len()
            && rank(&a).unwrap() == n - nullity
            && k.nullity == nullity
            && basis_ok
            && k.frozen == frozen
            && ker.contains(&sample);
        if !ok {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("200 matrices, {mismatches} mismatches"))
}

fn c11_determinism() -> Outcome {
    let mut same = Vec::new();
    let mut ternary = mc(poisson_cfg(2.5, 3), Experiment::NullityTernary, 300, 6, 11);
    ternary.delta = Some(0.02);
    for mut c in [
        mc(poisson_cfg(2.5, 3), Experiment::Fullrank, 300, 6, 11),
        mc(fixed_cfg(3, 8, false), Experiment::Rankformula, 304, 6, 11),
        ternary,
    ] {
        c.frozen = true;
        c.jobs = None;
        let a = sparse_rank::harness::run_experiment(&c).unwrap();
        c.jobs = Some(1);
        let b = sparse_rank::harness::run_experiment(&c).unwrap();
        same.push(strip_timing(&a) == strip_timing(&b));
    }
    (same.iter().all(|&b| b), format!("fullrank, rankformula, nullity_ternary identical: {same:?}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("xorsat threshold", c1_xorsat),
        ("phi anchors", c2_phi_anchors),
        ("condition classification", c3_classification),
        ("lattice determinants", c4_determinants),
        ("module oracle equivalence", c5_modules),
        ("divisibility intersection", c6_intersection),
        ("rank formula", c7_rank_formula),
        ("phase transition", c8_phase_transition),
        ("ternary augmentation", c9_ternary),
        ("exhaustive small cases", c10_exhaustive),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
