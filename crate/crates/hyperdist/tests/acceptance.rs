//! Acceptance suite: one test per release criterion. Each test prints a
//! single PASS line with its measured figure (visible with --nocapture);
//! a failure panics with the offending numbers.

use std::process::Command;
use std::time::Instant;

use hyperdist::analytic::{
    fidelity_finite_eta, scenario_fidelity_yield, scenario_state, ScenarioKind, ScenarioParams,
};
use hyperdist::bellspace::{FreqBell, PolBell};
use hyperdist::matrix::{C64, CMatrix};
use hyperdist::montecarlo::simulate_shots;
use hyperdist::oracle::{bell_product_weights, cnot_unitary, product_state_vector, ConversionModel, DensityMatrix};
use hyperdist::protocol::{run_oracle, run_probability, ProtocolVariant};
use hyperdist::rates::{
    arm_transmission, distillation_rate, multicore_fiber_comparison, rate_ratio,
    standard_fiber_comparison,
};

fn grid(n: usize, max: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| max * i as f64 / (n - 1) as f64)
}

fn params(kind: ScenarioKind, f_p: f64, f_other: f64, a: f64) -> ScenarioParams {
    ScenarioParams::new(kind, f_p, f_other, a).unwrap()
}

/// Ideal-conversion results from all three routes at one point.
fn three_routes(p: &ScenarioParams) -> ((Option<f64>, f64), (Option<f64>, f64), (Option<f64>, f64)) {
    let analytic = scenario_fidelity_yield(p, ProtocolVariant::Standard).unwrap();
    let state = scenario_state(p);
    let prob = run_probability(&state, ProtocolVariant::Standard, &ConversionModel::Ideal).unwrap();
    let orac = run_oracle(&state, ProtocolVariant::Standard, &ConversionModel::Ideal).unwrap();
    (
        analytic,
        (prob.f_p_prime, prob.yield_),
        (orac.f_p_prime, orac.yield_),
    )
}

fn assert_close(tag: &str, a: Option<f64>, b: Option<f64>, tol: f64) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => {
            let d = (a - b).abs();
            assert!(d < tol, "FAIL {tag}: |{a} - {b}| = {d:e} >= {tol:e}");
            d
        }
        (None, None) => 0.0,
        _ => panic!("FAIL {tag}: definedness mismatch ({a:?} vs {b:?})"),
    }
}

#[test]
fn criterion_01_conversion_table_exact_via_oracle() {
    let start = Instant::now();
    // The eight primary rows: inputs with frequency state psi+/psi-, their
    // converted outputs and keep labels.
    use FreqBell as F;
    use PolBell as P;
    let rows: [(P, F, P, F, bool); 8] = [
        (P::PsiPlus, F::PsiPlus, P::PsiPlus, F::PhiPlus, true),
        (P::PsiPlus, F::PsiMinus, P::PsiMinus, F::PhiMinus, true),
        (P::PsiMinus, F::PsiPlus, P::PsiMinus, F::PhiPlus, true),
        (P::PsiMinus, F::PsiMinus, P::PsiPlus, F::PhiMinus, true),
        (P::PhiPlus, F::PsiPlus, P::PhiPlus, F::PsiPlus, false),
        (P::PhiPlus, F::PsiMinus, P::PhiMinus, F::PsiMinus, false),
        (P::PhiMinus, F::PsiPlus, P::PhiMinus, F::PsiPlus, false),
        (P::PhiMinus, F::PsiMinus, P::PhiPlus, F::PsiMinus, false),
    ];
    let u = cnot_unitary();
    let mut worst: f64 = 0.0;
    for (p, f, op, of, keep) in rows {
        let v = product_state_vector(p, f);
        let mut out = [C64::new(0.0, 0.0); 16];
        for (r, o) in out.iter_mut().enumerate() {
            for (c, vc) in v.iter().enumerate() {
                *o += u.get(r, c) * *vc;
            }
        }
        let mut rho = CMatrix::zeros(16);
        for r in 0..16 {
            for c in 0..16 {
                rho.set(r, c, out[r] * out[c].conj());
            }
        }
        let w = bell_product_weights(&DensityMatrix::from_matrix(rho).unwrap());
        for (pi, wp) in w.iter().enumerate() {
            for (fi, wv) in wp.iter().enumerate() {
                let expect = if pi == op.index() && fi == of.index() {
                    1.0
                } else {
                    0.0
                };
                let residual = (wv - expect).abs();
                assert!(
                    residual < 1e-12,
                    "FAIL criterion 1: row ({}, {}) residual {residual:e}",
                    p.name(),
                    f.name()
                );
                worst = worst.max(residual);
            }
        }
        // Keep label: equal-frequency outputs are kept.
        assert_eq!(
            of.is_equal_frequency(),
            keep,
            "FAIL criterion 1: keep label for ({}, {})",
            p.name(),
            f.name()
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "FAIL criterion 1: took {elapsed:?} (budget 1 s)"
    );
    println!(
        "PASS criterion 1: 8/8 conversion rows exact via the oracle unitary \
         (worst residual {worst:.2e}, {elapsed:?})"
    );
}

#[test]
fn criterion_02_scenario_closed_forms_three_routes() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for kind in [ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3] {
        let a = if kind.needs_a() { 0.1 } else { 0.0 };
        // Scenario 3 at A = 0.1 caps F_p at 0.9 (weights must sum to 1).
        for f_p in grid(21, 1.0 - a) {
            for f_f in grid(21, 1.0) {
                let p = params(kind, f_p, f_f, a);
                let ((fa, ya), (fp, yp), (fo, yo)) = three_routes(&p);
                let tag = format!("criterion 2 {} ({f_p}, {f_f})", kind.name());
                worst = worst.max(assert_close(&tag, fa, fp, 1e-9));
                worst = worst.max(assert_close(&tag, fa, fo, 1e-9));
                worst = worst.max(assert_close(&tag, Some(ya), Some(yp), 1e-9));
                worst = worst.max(assert_close(&tag, Some(ya), Some(yo), 1e-9));
                match kind {
                    ScenarioKind::S1 => {
                        if let Some(f) = fa {
                            assert!((f - f_f).abs() < 1e-12, "FAIL criterion 2: S1 F' = F_f");
                        }
                        assert!((ya - f_p).abs() < 1e-12, "FAIL criterion 2: S1 Y = F_p");
                    }
                    ScenarioKind::S3 => {
                        let y_expect = f_p + a;
                        assert!(
                            (ya - y_expect).abs() < 1e-12,
                            "FAIL criterion 2: S3 Y = F_p + A"
                        );
                        if let Some(f) = fa {
                            let f_expect = (f_p * f_f + a * (1.0 - f_f)) / (f_p + a);
                            assert!(
                                (f - f_expect).abs() < 1e-12,
                                "FAIL criterion 2: S3 closed form"
                            );
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "FAIL criterion 2: took {elapsed:?} (budget 10 s)"
    );
    println!(
        "PASS criterion 2: three-route agreement on 21x21 grids for s1, s2, s3 \
         (worst spread {worst:.2e}, {elapsed:?})"
    );
}

#[test]
fn criterion_03_headline_gain_point() {
    let p = params(ScenarioKind::S1, 0.5, 1.0, 0.0);
    let (f, y) = scenario_fidelity_yield(&p, ProtocolVariant::Standard).unwrap();
    let f = f.expect("defined at F_p = 0.5");
    let gain = f - p.f_p;
    assert_eq!(f, 1.0, "FAIL criterion 3: F' = {f}");
    assert_eq!(y, 0.5, "FAIL criterion 3: Y = {y}");
    assert_eq!(gain, 0.5, "FAIL criterion 3: G = {gain}");
    println!("PASS criterion 3: (F_p=0.5, F_f=1) gives G = 0.5 exactly");
}

#[test]
fn criterion_04_hadamard_scenario2_oracle() {
    let mut worst: f64 = 0.0;
    for f_f in [0.6, 0.9] {
        let mut values = Vec::new();
        for i in 1..=9 {
            let f_p = i as f64 / 10.0;
            let p = params(ScenarioKind::S2, f_p, f_f, 0.0);
            let state = scenario_state(&p);
            let out = run_oracle(
                &state,
                ProtocolVariant::HadamardModified,
                &ConversionModel::Ideal,
            )
            .unwrap();
            let f = out.f_p_prime.expect("kept ensemble nonempty");
            let d = (f - f_f).abs();
            assert!(
                d < 1e-9,
                "FAIL criterion 4: F' = {f} != F_f = {f_f} at F_p = {f_p}"
            );
            worst = worst.max(d);
            values.push(f);
        }
        let spread = values.iter().cloned().fold(f64::MIN, f64::max)
            - values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            spread < 1e-9,
            "FAIL criterion 4: F' varies with F_p (spread {spread:e})"
        );
    }
    println!(
        "PASS criterion 4: hadamard-modified s2 pins F' to F_f independent of F_p \
         (worst deviation {worst:.2e})"
    );
}

#[test]
fn criterion_05_gain_sign_boundary_and_yield_invariance() {
    let mut checked = 0;
    for f_p in grid(21, 1.0) {
        let mut yields = Vec::new();
        for f_f in grid(21, 1.0) {
            let p = params(ScenarioKind::S1, f_p, f_f, 0.0);
            let (f, y) = scenario_fidelity_yield(&p, ProtocolVariant::Standard).unwrap();
            yields.push(y);
            let Some(f) = f else { continue };
            let gain = f - f_p;
            let reference = f_f - f_p;
            if gain.abs() <= 1e-12 || reference.abs() <= 1e-12 {
                assert!(
                    gain.abs() <= 1e-12 && reference.abs() <= 1e-12,
                    "FAIL criterion 5: zero/nonzero mismatch at ({f_p}, {f_f})"
                );
            } else {
                assert_eq!(
                    gain.signum(),
                    reference.signum(),
                    "FAIL criterion 5: sign(G) != sign(F_f - F_p) at ({f_p}, {f_f})"
                );
            }
            checked += 1;
        }
        let spread = yields.iter().cloned().fold(f64::MIN, f64::max)
            - yields.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            spread < 1e-12,
            "FAIL criterion 5: Y varies with F_f at F_p = {f_p} (spread {spread:e})"
        );
    }
    println!(
        "PASS criterion 5: sign(G) = sign(F_f - F_p) at {checked} defined grid points; \
         Y invariant in F_f"
    );
}

#[test]
fn criterion_06_auxiliary_bitflip_structure() {
    // Closed form and gain/yield structure for the bit-flip auxiliary.
    let mut worst: f64 = 0.0;
    for f_p in grid(21, 1.0) {
        for f_a in grid(21, 1.0) {
            let p = params(ScenarioKind::AuxS1, f_p, f_a, 0.0);
            let (f, y) = scenario_fidelity_yield(&p, ProtocolVariant::Standard).unwrap();
            let state = scenario_state(&p);
            let o = run_oracle(&state, ProtocolVariant::Standard, &ConversionModel::Ideal).unwrap();
            let (fo, yo) = (o.f_p_prime, o.yield_);
            let denom = f_p * f_a + (1.0 - f_p) * (1.0 - f_a);
            if denom > 1e-15 {
                let expect = f_p * f_a / denom;
                let got = f.expect("defined when the kept ensemble is nonempty");
                assert!(
                    (got - expect).abs() < 1e-12,
                    "FAIL criterion 6: aux-s1 closed form at ({f_p}, {f_a})"
                );
            }
            worst = worst.max(assert_close("criterion 6 aux-s1 F", f, fo, 1e-9));
            worst = worst.max(assert_close("criterion 6 aux-s1 Y", Some(y), Some(yo), 1e-9));
            // Gain is positive exactly on F_a > 0.5 (away from F_p edges).
            if f_p > 0.0 && f_p < 1.0 {
                if let Some(f) = f {
                    let gain = f - f_p;
                    if f_a > 0.5 + 1e-12 {
                        assert!(gain > 0.0, "FAIL criterion 6: G <= 0 at ({f_p}, {f_a})");
                    } else if f_a < 0.5 - 1e-12 {
                        assert!(gain < 0.0, "FAIL criterion 6: G >= 0 at ({f_p}, {f_a})");
                    } else {
                        assert!(gain.abs() < 1e-12, "FAIL criterion 6: G != 0 at F_a = 0.5");
                    }
                }
            }
            // Yield stays above one half on the matched quadrants.
            let high = f_p >= 0.5 && f_a >= 0.5;
            let low = f_p <= 0.5 && f_a <= 0.5;
            if high || low {
                assert!(
                    y >= 0.5 - 1e-12,
                    "FAIL criterion 6: Y = {y} < 0.5 at ({f_p}, {f_a})"
                );
            }
        }
    }
    // aux-s3 at A = 0.1: analytic matches the oracle.
    for f_p in grid(21, 0.9) {
        for f_a in grid(21, 1.0) {
            let p = params(ScenarioKind::AuxS3, f_p, f_a, 0.1);
            let (f, y) = scenario_fidelity_yield(&p, ProtocolVariant::Standard).unwrap();
            let state = scenario_state(&p);
            let o = run_oracle(&state, ProtocolVariant::Standard, &ConversionModel::Ideal).unwrap();
            worst = worst.max(assert_close("criterion 6 aux-s3 F", f, o.f_p_prime, 1e-9));
            worst = worst.max(assert_close(
                "criterion 6 aux-s3 Y",
                Some(y),
                Some(o.yield_),
                1e-9,
            ));
        }
    }
    println!(
        "PASS criterion 6: auxiliary-bitflip closed forms, gain boundary at F_a = 0.5, \
         yield floor on matched quadrants (worst route spread {worst:.2e})"
    );
}

#[test]
fn criterion_07_finite_efficiency_consistency() {
    // At eta = 1 the finite-efficiency form reduces to the ideal one.
    let mut worst: f64 = 0.0;
    for kind in [ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3] {
        let a = if kind.needs_a() { 0.1 } else { 0.0 };
        for f_p in grid(11, 1.0 - a) {
            for f_f in grid(11, 1.0) {
                let p = params(kind, f_p, f_f, a);
                let ideal = scenario_fidelity_yield(&p, ProtocolVariant::Standard)
                    .unwrap()
                    .0;
                let finite = fidelity_finite_eta(&p, 1.0).unwrap();
                worst = worst.max(assert_close(
                    &format!("criterion 7 {} reduction", kind.name()),
                    finite,
                    ideal,
                    1e-12,
                ));
            }
        }
    }
    // Monotone nondecreasing in eta on a 101-point grid.
    let states = [
        params(ScenarioKind::S1, 0.5, 0.9, 0.0),
        params(ScenarioKind::S1, 0.3, 0.6, 0.0),
        params(ScenarioKind::S2, 0.7, 0.9, 0.0),
        params(ScenarioKind::S3, 0.6, 0.95, 0.1),
        params(ScenarioKind::S3, 0.3, 0.2, 0.3),
    ];
    for p in &states {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..101 {
            let eta = k as f64 / 100.0;
            let f = fidelity_finite_eta(p, eta)
                .unwrap()
                .expect("defined for F_p > 0");
            assert!(
                f >= prev - 1e-15,
                "FAIL criterion 7: fidelity decreases at eta = {eta} for {}",
                p.kind.name()
            );
            prev = f;
        }
    }
    println!(
        "PASS criterion 7: eta = 1 reduction within 1e-12 (worst {worst:.2e}); \
         monotone on 101-point eta grids"
    );
}

#[test]
fn criterion_08_rates() {
    let (single, two) = standard_fiber_comparison();
    let rate = distillation_rate(&single).unwrap().rate_hz;
    let rel = (rate - 6.08).abs() / 6.08;
    assert!(rel < 1e-6, "FAIL criterion 8: rate {rate} vs 6.08 (rel {rel:e})");
    let ratio = rate_ratio(&single, &two).unwrap();
    assert!(
        (ratio - 1e7).abs() / 1e7 < 0.01,
        "FAIL criterion 8: ratio {ratio} vs 1e7"
    );
    let (mcf_single, std_two) = multicore_fiber_comparison();
    // Model-dependent case: multicore-fiber loss is a documented assumption
    // (0.3 dB/km), not a measured figure.
    assert_eq!(mcf_single.attenuation_db_per_km, 0.3);
    assert!((arm_transmission(0.3, 100.0) - 1e-3).abs() < 1e-15);
    let mcf_ratio = rate_ratio(&mcf_single, &std_two).unwrap();
    assert!(
        mcf_ratio / 1e5 < 2.0 && 1e5 / mcf_ratio < 2.0,
        "FAIL criterion 8: multicore ratio {mcf_ratio} not within 2x of 1e5"
    );
    println!(
        "PASS criterion 8: single-copy 6.08/s (rel err {rel:.1e}), ratio {ratio:.4e}, \
         multicore-assumption ratio {mcf_ratio:.3e}"
    );
}

#[test]
fn criterion_09_monte_carlo_statistical_acceptance() {
    let start = Instant::now();
    let n = 1_000_000u64;
    // Arbitrary base seed fixed up front; repetition r uses base + r. The
    // tallies are deterministic, so the observed pass counts (100/100 for
    // both presets) are regression-stable, not a statistical gamble.
    let base_seed = 0x0AC5_EED0u64;
    let presets = [
        ("s1", params(ScenarioKind::S1, 0.7, 0.9, 0.0)),
        ("s3", params(ScenarioKind::S3, 0.6, 0.95, 0.1)),
    ];
    for (label, p) in presets {
        let state = scenario_state(&p);
        let exact =
            run_probability(&state, ProtocolVariant::Standard, &ConversionModel::Ideal).unwrap();
        let exact_f = exact.f_p_prime.unwrap();
        let exact_y = exact.yield_;
        let se_y = (exact_y * (1.0 - exact_y) / n as f64).sqrt();
        let mut passed = 0;
        for rep in 0..100u64 {
            let r = simulate_shots(
                n,
                &state,
                ProtocolVariant::Standard,
                &ConversionModel::Ideal,
                base_seed + rep,
            )
            .unwrap();
            let f = r.fidelity_estimate.expect("kept ensemble nonempty");
            let se_f = (exact_f * (1.0 - exact_f) / r.n_kept as f64).sqrt();
            if (f - exact_f).abs() <= 3.0 * se_f
                && (r.yield_estimate - exact_y).abs() <= 3.0 * se_y
            {
                passed += 1;
            }
        }
        assert!(
            passed >= 99,
            "FAIL criterion 9: {label} preset passed only {passed}/100 repetitions"
        );
        println!("PASS criterion 9 ({label}): {passed}/100 repetitions within 3 SE");
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "FAIL criterion 9: took {elapsed:?} (budget 60 s)"
    );
    println!("PASS criterion 9: runtime {elapsed:?} within budget");
}

#[test]
fn criterion_10_byte_identical_cli_output() {
    let bin = env!("CARGO_BIN_EXE_hyperdist");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.cfg");
    std::fs::write(
        &config,
        "[sweep]\nscenario = s3\nx = F_p\nx_max = 0.9\nx_steps = 4\ny = F_f\ny_steps = 4\n\
         sources = analytic,probability,oracle,montecarlo\n\
         [state]\nA = 0.1\n[output]\nseed = 42\nn_shots = 5000\n",
    )
    .unwrap();
    let event_config = dir.path().join("events.cfg");
    std::fs::write(
        &event_config,
        "[sweep]\nscenario = s1\n[state]\nF_p = 0.7\nF_f = 0.9\n\
         [montecarlo]\nmode = events\npair_rate_per_pulse = 0.3\nrep_rate_hz = 1e6\n\
         duration_s = 0.02\n[output]\nseed = 8\n",
    )
    .unwrap();
    let run = |args: &[&str]| {
        let status = Command::new(bin).args(args).status().unwrap();
        assert!(status.success(), "FAIL criterion 10: {args:?} exited {status}");
    };
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let mut compared = 0;
    for (label, args, outs) in [
        (
            "sweep",
            vec!["sweep", "--config", config.to_str().unwrap()],
            vec!["out.csv", "out.csv.meta"],
        ),
        (
            "montecarlo-shots",
            vec!["montecarlo", "--config", config.to_str().unwrap()],
            vec!["out.csv", "out.csv.meta"],
        ),
        (
            "montecarlo-events",
            vec!["montecarlo", "--config", event_config.to_str().unwrap()],
            vec!["out.csv", "out.csv.meta"],
        ),
        (
            "rates",
            vec!["rates", "--preset", "paper-pet"],
            vec!["out.csv"],
        ),
        (
            "analytic",
            vec![
                "analytic",
                "--scenario",
                "s1",
                "--Fp",
                "0.5",
                "--Ff",
                "1.0",
            ],
            vec!["out.csv"],
        ),
    ] {
        let out_path = dir.path().join("out.csv");
        let out_flag = out_path.to_str().unwrap().to_string();
        let mut full = args.clone();
        full.extend(["--out", &out_flag]);
        run(&full);
        let first: Vec<Vec<u8>> = outs.iter().map(|o| read(o)).collect();
        run(&full);
        let second: Vec<Vec<u8>> = outs.iter().map(|o| read(o)).collect();
        assert_eq!(
            first, second,
            "FAIL criterion 10: {label} output differs between runs"
        );
        compared += outs.len();
    }
    println!("PASS criterion 10: {compared} output files byte-identical across repeated runs");
}
