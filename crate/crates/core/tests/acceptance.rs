//! Acceptance criteria. Each test prints one PASS/FAIL line, then asserts it.

use std::time::{Duration, Instant};

use charwave::apriori::{contraction_ok, FittedConstants, Stage, DEFAULT_QUAD_N, DEFAULT_SAMPLES};
use charwave::data::{huygens_check, make_profile, ProfileKind};
use charwave::harness::{
    apriori_growths, inverse_roundtrip_error, qualitative_check, run_suite, sweep, SuiteId, SweepConfig,
};
use charwave::math::{s_p, s_p_partial, WeightParams};
use charwave::solver::{
    free_scheme_error, picard_oracle, run_lifespan, run_lifespan_refined, solve_grid, LifespanStatus, PicardOutcome,
    DEFAULT_BLOWUP_FACTOR,
};
use charwave::theory::{a_n, a_n_recursive, find_certificate, mn_sequence, BSequence, CaseId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: f64 = 2.0;

fn verdict(n: u32, ok: bool, started: Instant, budget: Duration, detail: String) {
    let elapsed = started.elapsed();
    let ok = ok && elapsed <= budget;
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {n:>2} {tag}: {detail} [{:.1?} of {:.0?}]", elapsed, budget);
    assert!(ok, "acceptance {n} failed: {detail}");
}

fn wp(a: f64, b: f64) -> WeightParams {
    WeightParams::new(a, b, 2.0, R).unwrap()
}

fn power_sweep(a: f64, b: f64, profile: ProfileKind) -> SweepConfig {
    SweepConfig {
        params: wp(a, b),
        profile,
        eps_max: 0.4,
        eps_ratio: 0.125f64.powf(1.0 / 7.0),
        eps_count: 8,
        grid_h: Some(R / 64.0),
        t_max: 200.0,
        blowup_factor: DEFAULT_BLOWUP_FACTOR,
        refine: true,
        ..SweepConfig::default()
    }
}

#[test]
fn acceptance_01_bracket_inequalities() {
    let t0 = Instant::now();
    let rep = run_suite(SuiteId::Lemma22, 2024).unwrap();
    verdict(
        1,
        rep.passed,
        t0,
        Duration::from_secs(5),
        format!("{}, worst slack deficit {:.2e}", rep.detail, rep.max_violation),
    );
}

#[test]
fn acceptance_02_huygens() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (i, kind) in [ProfileKind::ZeroMoment, ProfileKind::PositiveFZeroG]
        .into_iter()
        .enumerate()
    {
        let rep = huygens_check(&make_profile(kind, R).unwrap(), 100_000, 7 + i as u64).unwrap();
        worst = worst.max(rep.max_violation);
    }
    verdict(
        2,
        worst <= 1e-12,
        t0,
        Duration::from_secs(5),
        format!("max |u0| off the support annulus {worst:.2e}"),
    );
}

#[test]
fn acceptance_03_scheme_order() {
    let t0 = Instant::now();
    let profile = make_profile(ProfileKind::NonzeroMoment, R).unwrap();
    let coarse = free_scheme_error(&profile, R / 32.0, 8.0).unwrap();
    let fine = free_scheme_error(&profile, R / 64.0, 8.0).unwrap();
    let ratio = coarse / fine;
    verdict(
        3,
        (3.0..=5.0).contains(&ratio),
        t0,
        Duration::from_secs(30),
        format!("error {coarse:.3e} -> {fine:.3e} under h -> h/2, ratio {ratio:.3}"),
    );
}

#[test]
fn acceptance_04_oracle_equivalence() {
    let t0 = Instant::now();
    let profile = make_profile(ProfileKind::NonzeroMoment, R).unwrap();
    let params = wp(0.0, 0.0);
    let (h, t_end) = (R / 16.0, 5.0 * R);
    let diamond = solve_grid(&profile, 0.1, &params, h, t_end).unwrap();
    let oracle = picard_oracle(&profile, 0.1, &params, h, t_end, 1e-12, 200).unwrap();
    let (rel, iters) = match &oracle {
        PicardOutcome::Converged { grid, iterations, .. } => (diamond.sup_distance(grid) / grid.sup(), *iterations),
        other => panic!("oracle did not converge: {other:?}"),
    };
    verdict(
        4,
        rel <= 0.05,
        t0,
        Duration::from_secs(120),
        format!("relative sup distance {rel:.3e} (oracle converged in {iters} iterations)"),
    );
}

fn power_law_criterion(n: u32, a: f64, b: f64, profile: ProfileKind, predicted: f64, need_r2: bool) {
    let t0 = Instant::now();
    let res = sweep(&power_sweep(a, b, profile)).unwrap();
    for r in &res.records {
        println!(
            "  eps {:.4} t_num {:.4} refined_ok {} censored {}",
            r.eps, r.t_num, r.refined_ok, r.censored
        );
    }
    let fit = res.fit.as_ref().expect("fit");
    let rel = (fit.fitted_exponent - predicted).abs() / predicted;
    let r2_ok = !need_r2 || fit.r_squared >= 0.95;
    verdict(
        n,
        rel <= 0.2 && r2_ok && fit.points == 8,
        t0,
        Duration::from_secs(600),
        format!(
            "fitted exponent {:.4} vs {predicted:.4} ({:.1}% off), r^2 {:.4}, {} points",
            fit.fitted_exponent,
            100.0 * rel,
            fit.r_squared,
            fit.points
        ),
    );
}

#[test]
fn acceptance_05_power_law_nonzero_moment() {
    power_law_criterion(5, -1.0, 1.0, ProfileKind::NonzeroMoment, 1.0, true);
}

#[test]
fn acceptance_06_power_law_zero_moment() {
    power_law_criterion(6, -1.0, -1.0, ProfileKind::ZeroMoment, 2.0 / 3.0, false);
}

#[test]
fn acceptance_07_global_cell() {
    let t0 = Instant::now();
    let params = wp(1.0, 1.0);
    let profile = make_profile(ProfileKind::NonzeroMoment, R).unwrap();
    let t_max = 100.0 * R;
    let consts = FittedConstants::fit(&params, &profile, t_max, DEFAULT_SAMPLES, DEFAULT_QUAD_N).unwrap();
    // E₁ ≡ 1 here, so the condition is 2^p c0^{p-1} C₁ ε ≤ 1.
    let eps = 1.0 / (4.0 * profile.c0_data * consts.c1);
    let cond = contraction_ok(Stage::Sec3Exist, eps, t_max, &profile, &consts, &params);
    let ball = 2.0 * profile.c0_data * eps;
    let out = run_lifespan(&profile, eps, &params, R / 32.0, t_max, 2.0).unwrap();
    let survived = matches!(out.status, LifespanStatus::SurvivedTo { .. });
    let max_sup = out.max_sup();
    verdict(
        7,
        cond && survived && max_sup <= ball,
        t0,
        Duration::from_secs(300),
        format!(
            "C1 {:.4}, eps {eps:.4e}, condition {cond}, status {:?}, max sup {max_sup:.4e} <= {ball:.4e}",
            consts.c1, out.status
        ),
    );
}

#[test]
fn acceptance_08_apriori_ratios() {
    let t0 = Instant::now();
    let growths = apriori_growths().unwrap();
    let worst = growths
        .iter()
        .cloned()
        .fold((None, 0.0f64), |acc, g| if g.2 > acc.1 { (Some(g), g.2) } else { acc });
    let (lemma, cell) = worst.0.map(|g| (g.0, g.1)).unwrap();
    verdict(
        8,
        growths.len() == 15 && worst.1 <= 2.0,
        t0,
        Duration::from_secs(300),
        format!(
            "{} cells, largest growth {:.4} ({lemma:?} at a, b = {cell:?})",
            growths.len(),
            worst.1
        ),
    );
}

#[test]
fn acceptance_09_sequences() {
    let t0 = Instant::now();
    let a_ok = [1.5, 2.0, 3.0].iter().all(|&p| {
        (1..=40).all(|n| {
            let (c, r) = (a_n(p, n), a_n_recursive(p, n));
            (c - r).abs() <= 1e-12 * r.max(1.0)
        })
    });
    let exact = run_suite(SuiteId::Sequences, 9).unwrap();
    let gaps: Vec<(f64, f64)> = [1.5, 2.0, 3.0]
        .iter()
        .map(|&p| (p, (s_p(p) - s_p_partial(p, 50)).abs()))
        .collect();
    let sp_ok = gaps.iter().all(|&(_, d)| d < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bound_ok = true;
    for _ in 0..20 {
        let (c, eta, mu, m1, p) = (
            rng.gen_range(0.05..5.0),
            rng.gen_range(1.0..4.0),
            rng.gen_range(1.0..4.0),
            rng.gen_range(0.05..5.0),
            rng.gen_range(1.2..3.5),
        );
        let seq = mn_sequence(c, eta, mu, m1, p, 30, BSequence::None).unwrap();
        bound_ok &= seq
            .slack()
            .iter()
            .zip(&seq.log_bound)
            .all(|(s, b)| *s >= -1e-9 * b.abs().max(1.0));
    }
    let gap_text: Vec<String> = gaps.iter().map(|(p, d)| format!("p={p}: {d:.2e}")).collect();
    verdict(
        9,
        a_ok && exact.passed && sp_ok && bound_ok,
        t0,
        Duration::from_secs(1),
        format!("a_n {a_ok}, Lemma bound {bound_ok}, S_p gaps [{}]", gap_text.join(", ")),
    );
}

#[test]
fn acceptance_10_inverse_roundtrip() {
    let t0 = Instant::now();
    let worst = inverse_roundtrip_error().unwrap();
    verdict(
        10,
        worst <= 1e-10,
        t0,
        Duration::from_secs(1),
        format!("worst relative roundtrip error {worst:.2e}"),
    );
}

#[test]
fn acceptance_11_certificate_consistency() {
    let t0 = Instant::now();
    let params = wp(-1.0, -1.0);
    let profile = make_profile(ProfileKind::PositiveFZeroG, R).unwrap();
    let mut certs = Vec::new();
    let mut consistent = true;
    let mut lines = Vec::new();
    for eps in [0.4, 0.2] {
        let cert = find_certificate(CaseId::K8, eps, &profile, &params, 1e12).unwrap();
        let Some(cert) = cert else {
            verdict(
                11,
                false,
                t0,
                Duration::from_secs(600),
                format!("no certificate at eps {eps}"),
            );
            return;
        };
        let run = run_lifespan_refined(&profile, eps, &params, R / 64.0, 200.0, DEFAULT_BLOWUP_FACTOR, true).unwrap();
        let t_num = run.t_num.unwrap_or(f64::INFINITY);
        consistent &= cert.k_value > 0.0 && t_num <= 1.05 * cert.certified_time;
        lines.push(format!(
            "eps {eps}: t_num {t_num:.3} <= certified {:.1}",
            cert.certified_time
        ));
        certs.push(cert.certified_time);
    }
    let ratio = certs[1] / certs[0];
    let target = 2f64.powf(2.0 / 3.0);
    let ratio_ok = (ratio / target - 1.0).abs() <= 0.25;
    verdict(
        11,
        consistent && ratio_ok,
        t0,
        Duration::from_secs(600),
        format!("{}; certificate ratio {ratio:.4} vs {target:.4}", lines.join("; ")),
    );
}

#[test]
fn acceptance_12_exponential_cell_shape() {
    let t0 = Instant::now();
    let config = SweepConfig {
        params: wp(0.0, 0.0),
        profile: ProfileKind::NonzeroMoment,
        eps_max: 0.4,
        eps_ratio: 0.25f64.powf(1.0 / 6.0),
        eps_count: 7,
        grid_h: Some(R / 16.0),
        t_max: 2000.0,
        refine: false,
        ..SweepConfig::default()
    };
    let res = sweep(&config).unwrap();
    let (eps, t): (Vec<f64>, Vec<f64>) = res
        .records
        .iter()
        .filter(|r| !r.censored)
        .map(|r| (r.eps, r.t_num))
        .unzip();
    let q = qualitative_check(&eps, &t);
    let censored: Vec<f64> = res.records.iter().filter(|r| r.censored).map(|r| r.eps).collect();
    // Points past the horizon must come after every resolved one.
    let ordered = res.records.iter().skip_while(|r| !r.censored).all(|r| r.censored);
    let fit = res.fit.as_ref();
    verdict(
        12,
        q.convex && ordered && fit.is_none_or(|f| f.pass.is_none()),
        t0,
        Duration::from_secs(600),
        format!(
            "{} resolved points, local slopes {:?}, convex {}; censored at T = {}: {:?}",
            eps.len(),
            q.local_slopes
                .iter()
                .map(|s| (s * 1e3).round() / 1e3)
                .collect::<Vec<_>>(),
            q.convex,
            config.t_max,
            censored
        ),
    );
}
