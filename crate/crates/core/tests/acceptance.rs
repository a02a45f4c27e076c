//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsirelson::clifford::correlation_table;
use tsirelson::optimize::{random_unit_vectors, restart_rng, seesaw_trace, DEFAULT_SEED};
use tsirelson::report::run_table2;
use tsirelson::{
    build_xn, build_yn, build_zn, classical_bound, extract_vectors, family_lhv_bound, gradient,
    joint_correlation, marginal, objective, optimize_bound, oracle_E, quantum_bell_value,
    realize_strategy, BellMatrix, BoundResult, ComplexMatrix, Family, OptimizerConfig, Side,
};

struct Criterion {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Criterion {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn within(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        self.check(
            (got - want).abs() <= tol,
            format!("{name} = {got:.10} (want {want:.10} ± {tol:e})"),
        );
    }

    fn in_range(&mut self, name: &str, got: f64, lo: f64, hi: f64) {
        self.check(
            got >= lo && got <= hi,
            format!("{name} = {got:.10} (want [{lo}, {hi}])"),
        );
    }
}

fn table_config() -> OptimizerConfig {
    OptimizerConfig::default().with_seed(DEFAULT_SEED)
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

struct TableOne {
    cells: Vec<(String, usize, BoundResult)>,
    lhv: Vec<(String, f64)>,
}

fn compute_table_one() -> TableOne {
    let cfg = table_config();
    let mut cells = Vec::new();
    let mut lhv = Vec::new();
    for (name, m) in [
        ("X4", build_xn(4).unwrap()),
        ("Y4", build_yn(4).unwrap()),
        ("Z4", build_zn(4).unwrap()),
    ] {
        lhv.push((name.to_string(), classical_bound(&m).unwrap().0));
        for d in 2..=4 {
            cells.push((name.to_string(), d, optimize_bound(&m, d, &cfg).unwrap()));
        }
    }
    TableOne { cells, lhv }
}

impl TableOne {
    fn value(&self, name: &str, d: usize) -> f64 {
        if d == 1 {
            return self.lhv.iter().find(|(n, _)| n == name).unwrap().1;
        }
        self.cells
            .iter()
            .find(|(n, dd, _)| n == name && *dd == d)
            .unwrap()
            .2
            .value
    }
}

fn criterion_1(t: &TableOne, elapsed: f64) -> Criterion {
    let mut c = Criterion::new();
    c.check(
        elapsed <= 600.0,
        format!("X4/Y4/Z4 table computed in {elapsed:.1} s"),
    );

    c.within("X4 lhv", t.value("X4", 1), 12.0, 0.0);
    c.within("X4 d=2", t.value("X4", 2), 14.81, 0.01);
    c.within("X4 d=3", t.value("X4", 3), 15.45, 0.01);
    c.within("X4 d=4", t.value("X4", 4), 16.0, 1e-6);
    c.within(
        "X4 qm/3d",
        t.value("X4", 4) / t.value("X4", 3),
        1.036,
        0.002,
    );

    c.within("Y4 lhv", t.value("Y4", 1), 12.0, 0.0);
    c.within("Y4 d=2", t.value("Y4", 2), 16.109, 0.01);
    c.within("Y4 d=3", t.value("Y4", 3), 16.726, 0.01);
    // Endpoints are quoted to four decimals.
    let y4 = t.value("Y4", 4);
    c.in_range(
        &format!("Y4 d=4 = {y4:.10}, to 4 d.p."),
        round4(y4),
        16.9706,
        16.98,
    );
    c.in_range(
        "Y4 qm/3d",
        t.value("Y4", 4) / t.value("Y4", 3),
        1.014,
        1.016,
    );

    c.within("Z4 lhv", t.value("Z4", 1), 8.0, 0.0);
    c.within("Z4 d=2", t.value("Z4", 2), 4.0 * (1.0 + SQRT_2), 1e-6);
    c.within("Z4 d=3", t.value("Z4", 3), 4.0 * 6f64.sqrt(), 1e-6);
    c.within("Z4 d=4", t.value("Z4", 4), 4.0 * 6f64.sqrt(), 1e-6);
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new();
    let start = Instant::now();
    let t = run_table2(1_000_000).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    c.check(
        elapsed < 1.0,
        format!("Z_n ratio table computed in {elapsed:.3} s"),
    );
    let keys = ["2d_over_lhv", "3d_over_lhv", "qm_over_lhv", "qm_over_3d"];
    for (label, want) in [
        ("Z4", [1.207, 1.225, 1.225, 1.0]),
        ("Z6", [1.244, 1.276, 1.291, 1.0116]),
    ] {
        let row = t.row(label).unwrap();
        for (k, w) in keys.iter().zip(want) {
            c.within(&format!("{label} {k}"), row.ratio(k).unwrap(), w, 5e-4);
        }
    }
    let big = t.rows.last().unwrap();
    c.within(
        "n=1e6 2d/lhv",
        big.ratio("2d_over_lhv").unwrap(),
        4.0 / std::f64::consts::PI,
        1e-3,
    );
    c.within(
        "n=1e6 3d/lhv",
        big.ratio("3d_over_lhv").unwrap(),
        4.0 / 3.0,
        1e-3,
    );
    c.within(
        "n=1e6 qm/lhv",
        big.ratio("qm_over_lhv").unwrap(),
        SQRT_2,
        1e-3,
    );
    c.within(
        "n=1e6 qm/3d",
        big.ratio("qm_over_3d").unwrap(),
        3.0 * SQRT_2 / 4.0,
        1e-4,
    );
    c
}

fn criterion_3(z6_d5: &BoundResult, z6_d3: &BoundResult) -> Criterion {
    let mut c = Criterion::new();
    let ratio = z6_d5.value / z6_d3.value;
    c.in_range("Z6 d=5 / d=3", ratio, 1.0110, 1.0122);
    c.within(
        "Z6 ratio vs (√120-√15)/7",
        ratio,
        (120f64.sqrt() - 15f64.sqrt()) / 7.0,
        1e-4,
    );
    c.within("Z6 d=5", z6_d5.value, oracle_E(6, 5).unwrap().value, 1e-4);
    c.within("Z6 d=3", z6_d3.value, oracle_E(6, 3).unwrap().value, 1e-4);
    c
}

fn realization_suite(
    c: &mut Criterion,
    name: &str,
    m: &BellMatrix,
    r: &BoundResult,
    ambient: usize,
    dim_h: usize,
    value: f64,
) {
    let s = r.strategy.reduce_to_span(1e-8);
    c.check(
        s.dim() == ambient,
        format!("{name} ambient dimension {} (want {ambient})", s.dim()),
    );
    let q = realize_strategy(&s).unwrap();
    c.check(
        q.dim_h() == dim_h,
        format!("{name} dim_h {} (want {dim_h})", q.dim_h()),
    );
    let gram = s.cross_gram();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (i, row) in gram.iter().enumerate() {
        for (j, &g) in row.iter().enumerate() {
            worst = worst.max((joint_correlation(&q, i, j).unwrap() - g).abs());
            count += 1;
        }
    }
    c.check(
        worst <= 1e-10,
        format!("{name} {count} correlations vs dot products, max error {worst:.2e}"),
    );
    let mut worst_marginal: f64 = 0.0;
    let mut marginals = 0;
    for (side, len) in [(Side::Alice, m.m_a()), (Side::Bob, m.m_b())] {
        for k in 0..len {
            worst_marginal = worst_marginal.max(marginal(&q, side, k).unwrap().abs());
            marginals += 1;
        }
    }
    c.check(
        worst_marginal < 1e-12,
        format!("{name} {marginals} marginals, max |marginal| {worst_marginal:.2e}"),
    );
    c.within(
        &format!("{name} quantum value"),
        quantum_bell_value(m, &q).unwrap(),
        value,
        1e-9,
    );
}

fn criterion_4(z6_d5: &BoundResult, cfg: &OptimizerConfig) -> Criterion {
    let mut c = Criterion::new();
    let z6 = build_zn(6).unwrap();
    realization_suite(&mut c, "Z6", &z6, z6_d5, 5, 4, 6.0 * 15f64.sqrt());

    let x4 = build_xn(4).unwrap();
    let rx = optimize_bound(&x4, 4, cfg).unwrap();
    realization_suite(&mut c, "X4", &x4, &rx, 4, 4, 16.0);

    let chsh = BellMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).unwrap();
    let rc = optimize_bound(&chsh, 2, cfg).unwrap();
    realization_suite(&mut c, "CHSH", &chsh, &rc, 2, 2, 2.0 * SQRT_2);
    c
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-ish unitary by Gram-Schmidt on a complex Gaussian matrix.
fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        for u in &cols {
            let p: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let n = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for (c, col) in cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            data[r * d + c] = x;
        }
    }
    ComplexMatrix::from_vec(d, d, data).unwrap()
}

/// `U diag(±1) U†`: a random ±1-valued observable.
fn random_observable(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let u = random_unitary(rng, d);
    let mut s = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        s[k * d + k] = Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0);
    }
    let s = ComplexMatrix::from_vec(d, d, s).unwrap();
    &(&u * &s) * &u.adjoint()
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new();
    let mut worst_norm: f64 = 0.0;
    let mut worst_dot: f64 = 0.0;
    let mut runs = 0;
    for (k, d) in [2usize, 4]
        .into_iter()
        .flat_map(|d| (0..25).map(move |k| (k, d)))
    {
        let mut rng = restart_rng(0xa11ce, d * 100 + k);
        let n_a = rng.random_range(1..=4);
        let n_b = rng.random_range(1..=4);
        let alice: Vec<_> = (0..n_a).map(|_| random_observable(&mut rng, d)).collect();
        let bob: Vec<_> = (0..n_b).map(|_| random_observable(&mut rng, d)).collect();
        let mut state: Vec<Complex64> = (0..d * d).map(|_| complex_gaussian(&mut rng)).collect();
        let n = state.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        state.iter_mut().for_each(|x| *x /= n);

        let (a, b) = extract_vectors(&state, &alice, &bob).unwrap();
        let q = tsirelson::QuantumRealization::new(d, state, alice, bob).unwrap();
        let table = correlation_table(&q).unwrap();
        for v in a.iter().chain(&b) {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst_norm = worst_norm.max((n - 1.0).abs());
        }
        for (ai, row) in a.iter().zip(&table) {
            for (bj, &e) in b.iter().zip(row) {
                let dot: f64 = ai.iter().zip(bj).map(|(x, y)| x * y).sum();
                worst_dot = worst_dot.max((dot - e).abs());
            }
        }
        runs += 1;
    }
    c.check(runs == 50, format!("{runs} realizations"));
    c.check(
        worst_norm <= 1e-10,
        format!("max |‖v‖ - 1| = {worst_norm:.2e}"),
    );
    c.check(
        worst_dot <= 1e-10,
        format!("max |a·b - ⟨AB⟩| = {worst_dot:.2e}"),
    );
    c
}

fn random_matrix(rng: &mut ChaCha8Rng, m_a: usize, m_b: usize) -> BellMatrix {
    let entries = (0..m_a * m_b).map(|_| StandardNormal.sample(rng)).collect();
    BellMatrix::new(m_a, m_b, entries).unwrap()
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new();

    // See-saw monotonicity.
    let mut bad_steps = 0;
    for k in 0..500 {
        let mut rng = restart_rng(0x5ee5a, k);
        let (m_a, m_b) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let m = random_matrix(&mut rng, m_a, m_b);
        let d = rng.random_range(1..=4);
        let b = random_unit_vectors(&mut rng, m.m_b(), d);
        let trace = seesaw_trace(&m, b, 0.0, 200).unwrap();
        bad_steps += trace.windows(2).filter(|w| w[1] < w[0]).count();
    }
    c.check(
        bad_steps == 0,
        format!("500 see-saw runs, {bad_steps} decreasing steps"),
    );

    // Monotone in d, flat beyond m_b.
    let cfg = OptimizerConfig::default().with_restarts(100).with_seed(7);
    let mut monotone_violations = 0;
    let mut flat_violations = 0;
    for k in 0..6 {
        let mut rng = restart_rng(0xd1d1, k);
        let m = random_matrix(&mut rng, 4, 3);
        let values: Vec<f64> = (1..=5)
            .map(|d| optimize_bound(&m, d, &cfg).unwrap().value)
            .collect();
        monotone_violations += values.windows(2).filter(|w| w[1] < w[0] - 1e-6).count();
        flat_violations += values[3..]
            .iter()
            .filter(|v| (*v - values[2]).abs() > 1e-6)
            .count();
    }
    c.check(
        monotone_violations == 0,
        format!("{monotone_violations} decreases in d"),
    );
    c.check(
        flat_violations == 0,
        format!("{flat_violations} changes beyond d = m_b"),
    );

    // Enumeration against closed forms.
    let mut mismatches = Vec::new();
    for family in Family::ALL {
        for n in 2..=8 {
            let m = family.build(n).unwrap();
            let got = classical_bound(&m).unwrap().0;
            let want = family_lhv_bound(family, n).unwrap();
            if got != want {
                mismatches.push(format!("{family}{n}: {got} vs {want}"));
            }
        }
    }
    c.check(
        mismatches.is_empty(),
        format!("enumeration = closed form for X/Y/Z, n=2..8 {mismatches:?}"),
    );

    // Gradient against central differences of x ↦ f(x/|x|).
    let mut worst_rel: f64 = 0.0;
    let mut points = 0;
    let mut k = 0;
    while points < 100 {
        let mut rng = restart_rng(0x96ad, k);
        k += 1;
        let (m_a, m_b) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let m = random_matrix(&mut rng, m_a, m_b);
        let d = rng.random_range(2..=4);
        let b = random_unit_vectors(&mut rng, m.m_b(), d);
        let Ok(g) = gradient(&m, &b) else { continue };
        let gnorm = g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < 1e-3 {
            continue;
        }
        let f = |x: &[Vec<f64>]| {
            let unit: Vec<Vec<f64>> = x
                .iter()
                .map(|v| {
                    let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                    v.iter().map(|t| t / n).collect()
                })
                .collect();
            objective(&m, &unit).unwrap()
        };
        let h = 1e-6;
        let mut err2 = 0.0;
        for j in 0..b.len() {
            for t in 0..d {
                let mut plus = b.clone();
                let mut minus = b.clone();
                plus[j][t] += h;
                minus[j][t] -= h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                err2 += (fd - g[j][t]).powi(2);
            }
        }
        worst_rel = worst_rel.max(err2.sqrt() / gnorm);
        points += 1;
    }
    c.check(
        worst_rel < 1e-5,
        format!("gradient at {points} points, max relative error {worst_rel:.2e}"),
    );

    // Invariance under signs and permutations.
    let mut worst_inv: f64 = 0.0;
    for k in 0..50 {
        let mut rng = restart_rng(0x1a7a, k);
        let (m_a, m_b) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let m = random_matrix(&mut rng, m_a, m_b);
        let d = rng.random_range(1..=4);
        let b = random_unit_vectors(&mut rng, m_b, d);
        let mut row_perm: Vec<usize> = (0..m_a).collect();
        let mut col_perm: Vec<usize> = (0..m_b).collect();
        for i in (1..m_a).rev() {
            row_perm.swap(i, rng.random_range(0..=i));
        }
        for i in (1..m_b).rev() {
            col_perm.swap(i, rng.random_range(0..=i));
        }
        let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let row_signs: Vec<f64> = (0..m_a).map(|_| sign(&mut rng)).collect();
        let col_signs: Vec<f64> = (0..m_b).map(|_| sign(&mut rng)).collect();

        let flipped = m.sign_flipped(&row_signs, &col_signs).unwrap();
        let b_flipped: Vec<Vec<f64>> = b
            .iter()
            .zip(&col_signs)
            .map(|(v, s)| v.iter().map(|x| x * s).collect())
            .collect();
        let permuted = m.permuted(&row_perm, &col_perm).unwrap();
        let b_permuted: Vec<Vec<f64>> = col_perm.iter().map(|&q| b[q].clone()).collect();
        let base = objective(&m, &b).unwrap();
        worst_inv = worst_inv
            .max((objective(&flipped, &b_flipped).unwrap() - base).abs())
            .max((objective(&permuted, &b_permuted).unwrap() - base).abs());
        let lhv = classical_bound(&m).unwrap().0;
        worst_inv = worst_inv
            .max((classical_bound(&flipped).unwrap().0 - lhv).abs())
            .max((classical_bound(&permuted).unwrap().0 - lhv).abs());
    }
    c.check(
        worst_inv <= 1e-9,
        format!("sign/permutation invariance, max deviation {worst_inv:.2e}"),
    );
    c
}

fn criterion_7(t: &TableOne) -> Criterion {
    let mut c = Criterion::new();
    for (name, d, r) in &t.cells {
        let top = r.top_values(10);
        let spread = top[0] - top[top.len() - 1];
        c.check(
            top.len() == 10 && spread <= 1e-4,
            format!("{name} d={d} top-10 spread {spread:.2e}"),
        );
    }
    c
}

fn main() -> ExitCode {
    let cfg = table_config();
    let mut results: Vec<(&str, Criterion)> = Vec::new();

    let start = Instant::now();
    let table = compute_table_one();
    let elapsed = start.elapsed().as_secs_f64();
    results.push(("1 X4/Y4/Z4 bounds table", criterion_1(&table, elapsed)));
    results.push(("2 Z_n ratios from closed forms", criterion_2()));

    let z6 = build_zn(6).unwrap();
    let z6_d5 = optimize_bound(&z6, 5, &cfg).unwrap();
    let z6_d3 = optimize_bound(&z6, 3, &cfg).unwrap();
    results.push(("3 Z6 quantum/qubit ratio", criterion_3(&z6_d5, &z6_d3)));
    results.push(("4 Clifford realizations", criterion_4(&z6_d5, &cfg)));
    results.push(("5 vector extraction round trip", criterion_5()));
    results.push(("6 property suite", criterion_6()));
    results.push(("7 multistart consistency", criterion_7(&table)));

    let mut all = true;
    for (name, c) in &results {
        let ok = c.failures.is_empty();
        all &= ok;
        println!(
            "{} criterion {name} ({} checks)",
            if ok { "PASS" } else { "FAIL" },
            c.notes.len() + c.failures.len()
        );
        for f in &c.failures {
            println!("    failed: {f}");
        }
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            for n in &c.notes {
                println!("    ok: {n}");
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
