//! End-to-end acceptance gate. Each numbered criterion prints one PASS or
//! FAIL line; the test fails if any criterion does. Tolerances are part of
//! the contract and are asserted exactly as stated, never loosened.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pacbayes::anytime::BetaSchedule;
use pacbayes::bounded::{
    catoni_uniform, dominance_check, f_fr, f_mr, f_th, fast_rate_objective, fast_rate_simple,
    fast_rate_strong, mcallester, mixed_rate, rivasplata, seeger_langford, thiemann_objective,
    BoundContext, BoundId,
};
use pacbayes::general::{chernoff_analogue, chernoff_loglog, chernoff_no_cutoff, EssSupInfo};
use pacbayes::lab::{
    alternating_optimize, anytime_coverage_experiment, coverage_bound_ids,
    coverage_experiment_multi, draw_dataset, preset, AnytimeMode, PosteriorRule,
};
use pacbayes::specfun::{
    binary_kl, kl_inverse_upper, lambert_w_m1, xi_maurer, NatsValue, Probability, XiMode,
};
use pacbayes::tails::{psi_star_inverse_numeric, TailFamily};

type Check = std::result::Result<(), String>;

fn ctx(n: u64, beta: f64, kl: f64, r: f64) -> BoundContext {
    BoundContext::new(n, beta, NatsValue::new(kl).unwrap(), Probability::new(r).unwrap())
        .unwrap()
}

/// Shared random evaluation grid: 1000 points over r in [0,1), kl in
/// [0, 3n], n in {10, 100, 1000, 10000}, beta in {0.5, 0.05, 0.001}.
fn criterion_grid() -> Vec<(u64, f64, f64, f64)> {
    let ns = [10u64, 100, 1_000, 10_000];
    let betas = [0.5, 0.05, 0.001];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000usize)
        .map(|i| {
            let n = ns[i % ns.len()];
            let beta = betas[(i / ns.len()) % betas.len()];
            let r: f64 = rng.random();
            let kl: f64 = rng.random::<f64>() * 3.0 * n as f64;
            (n, beta, kl, r)
        })
        .collect()
}

/// 1. The Seeger-Langford kl inversion, the lambda-uniform Catoni bound,
/// and the strong fast-rate infimum agree within 1e-5 across the grid,
/// inside a 60 second budget.
fn c1_three_way_equivalence() -> Check {
    let start = Instant::now();
    let mut max_cu = 0.0f64;
    let mut max_fr = 0.0f64;
    for &(n, beta, kl, r) in &criterion_grid() {
        let ctx = ctx(n, beta, kl, r);
        let seeger = seeger_langford(&ctx).value;
        let cu = catoni_uniform(&ctx).value;
        let fr = fast_rate_strong(&ctx).value;
        max_cu = max_cu.max((seeger - cu).abs());
        max_fr = max_fr.max((seeger - fr).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    if max_cu > 1e-5 {
        return Err(format!("|seeger - catoni_uniform| reached {max_cu:.3e} > 1e-5"));
    }
    if max_fr > 1e-5 {
        return Err(format!("|seeger - fast_rate_strong| reached {max_fr:.3e} > 1e-5"));
    }
    if elapsed > 60.0 {
        return Err(format!("grid took {elapsed:.1}s > 60s"));
    }
    Ok(())
}

/// 2. Closed-form dominance f_fr <= f_th and f_mr <= f_th on a 100x100
/// grid with slack 1e-12, plus mixed_rate <= rivasplata and
/// seeger <= mcallester pointwise on the shared grid.
fn c2_dominance() -> Check {
    let mut grid = Vec::with_capacity(100 * 100);
    for i in 0..100 {
        for j in 0..100 {
            grid.push((i as f64 / 99.0, 2.0 * j as f64 / 99.0));
        }
    }
    let report = dominance_check(&grid);
    if !report.holds() {
        return Err(format!(
            "closed-form dominance failed: fr-th gap {:.3e}, mr-th gap {:.3e}, {} violations",
            report.max_fr_minus_th,
            report.max_mr_minus_th,
            report.violations.len()
        ));
    }
    // Spot-check the closed forms stay finite and ordered at the corners.
    for &(r, c) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (1.0, 2.0)] {
        if !(f_fr(r, c) <= f_th(r, c) + 1e-12 && f_mr(r, c) <= f_th(r, c) + 1e-12) {
            return Err(format!("corner ({r}, {c}) violates dominance"));
        }
    }
    for &(n, beta, kl, r) in &criterion_grid() {
        let ctx = ctx(n, beta, kl, r);
        let mr = mixed_rate(&ctx).value;
        let riva = rivasplata(&ctx).value;
        if mr > riva + 1e-12 {
            return Err(format!(
                "mixed_rate {mr} > rivasplata {riva} at n={n}, beta={beta}, kl={kl}, r={r}"
            ));
        }
        let sl = seeger_langford(&ctx).value;
        let mc = mcallester(&ctx).value;
        if sl > mc + 1e-12 {
            return Err(format!(
                "seeger {sl} > mcallester {mc} at n={n}, beta={beta}, kl={kl}, r={r}"
            ));
        }
    }
    Ok(())
}

/// 3. Realizable case: at zero empirical risk the simple fast-rate bound
/// collapses to the confidence term within 1e-6, while rivasplata pays
/// twice that term (within 1e-12), the documented contrast.
fn c3_realizable() -> Check {
    for &(n, beta, kl, _) in &criterion_grid() {
        let ctx = ctx(n, beta, kl, 0.0);
        let c_xi = ctx.confidence_term();
        let fr = fast_rate_simple(&ctx);
        let fr_raw = fr.params["pre_clamp"];
        if (fr_raw - c_xi).abs() > 1e-6 {
            return Err(format!(
                "fast_rate_simple at r=0 gave {fr_raw}, want {c_xi} (n={n}, beta={beta}, kl={kl})"
            ));
        }
        let riva = rivasplata(&ctx).params["pre_clamp"];
        if (riva - 2.0 * c_xi).abs() > 1e-12 {
            return Err(format!(
                "rivasplata at r=0 gave {riva}, want {} (n={n}, beta={beta}, kl={kl})",
                2.0 * c_xi
            ));
        }
    }
    Ok(())
}

/// 4. At gamma = 2 the fast-rate objective has empirical-risk coefficient
/// 2 ln 2 and confidence coefficient 2, the latter matching the
/// lambda = 1 member of the thiemann family exactly.
fn c4_gamma_two_constants() -> Check {
    // Coefficient extraction: evaluate at (r, c_xi) in {(0,1), (1,0)}.
    let fr_conf = fast_rate_objective(0.0, 1.0, 1.0, 2.0);
    let fr_emp = fast_rate_objective(1.0, 0.0, 1.0, 2.0);
    let th_conf = thiemann_objective(0.0, 1.0, 1.0);
    if fr_conf != 2.0 {
        return Err(format!("fast-rate confidence coefficient is {fr_conf}, want exactly 2"));
    }
    if fr_conf != th_conf {
        return Err(format!(
            "confidence coefficients differ: fast-rate {fr_conf} vs thiemann {th_conf}"
        ));
    }
    let two_ln_two = 2.0 * std::f64::consts::LN_2;
    if (fr_emp - two_ln_two).abs() > 1e-15 {
        return Err(format!("emp-risk coefficient is {fr_emp}, want 2 ln 2 = {two_ln_two}"));
    }
    Ok(())
}

/// 5. Monte-Carlo coverage: on every shipped preset, every bound's
/// violation rate over 1e4 trials has a 99% Wilson upper bound at most
/// beta, for beta in {0.05, 0.2}.
fn c5_coverage() -> Check {
    let presets = [
        "bernoulli-single",
        "bernoulli-pair",
        "gibbs-ten",
        "heavy-tail",
        "realizable",
        "nested-fifty",
    ];
    let rule = PosteriorRule::Gibbs { lambda: 2.0, n_scaled: false };
    let ids = coverage_bound_ids();
    for name in presets {
        let problem = preset(name).map_err(|e| e.to_string())?;
        for beta in [0.05, 0.2] {
            let started = Instant::now();
            let reports =
                coverage_experiment_multi(&problem, &rule, &ids, 100, beta, 10_000, 424_242)
                    .map_err(|e| e.to_string())?;
            let elapsed = started.elapsed().as_secs_f64();
            for (id, rep) in &reports {
                if rep.binomial_ci.1 > beta {
                    return Err(format!(
                        "{name}/{id} at beta={beta}: {} violations in {} trials, \
                         Wilson upper {:.4} > {beta}",
                        rep.violations, rep.trials, rep.binomial_ci.1
                    ));
                }
            }
            // Budget is per (problem, bound); the whole paired run must
            // come in far below bounds * 120s.
            if elapsed > 120.0 * ids.len() as f64 {
                return Err(format!("{name} at beta={beta} took {elapsed:.0}s"));
            }
        }
    }
    Ok(())
}

/// 6. The numeric conjugate inverse reproduces the subgaussian and
/// subgamma closed forms within 1e-6 relative error over y in
/// [1e-3, 1e2], and rebuilding the Chernoff-style bound from the numeric
/// inverse matches the shipped evaluator within 1e-6.
fn c6_numeric_inverse_round_trip() -> Check {
    let sigma2 = 1.0;
    let c = 0.5;
    let subgauss = |l: f64| sigma2 * l * l / 2.0;
    let subgamma = |l: f64| sigma2 * l * l / (2.0 * (1.0 - c * l));
    for i in 0..200 {
        let y = 1e-3 * (1e5f64).powf(i as f64 / 199.0);
        let want_g = (2.0 * sigma2 * y).sqrt();
        let got_g = psi_star_inverse_numeric(subgauss, 1e3, NatsValue::new(y).unwrap())
            .map_err(|e| e.to_string())?;
        if ((got_g - want_g) / want_g).abs() > 1e-6 {
            return Err(format!("subgaussian inverse at y={y}: {got_g} vs {want_g}"));
        }
        let want_sg = (2.0 * sigma2 * y).sqrt() + c * y;
        let got_sg = psi_star_inverse_numeric(subgamma, 1.0 / c, NatsValue::new(y).unwrap())
            .map_err(|e| e.to_string())?;
        if ((got_sg - want_sg) / want_sg).abs() > 1e-6 {
            return Err(format!("subgamma inverse at y={y}: {got_sg} vs {want_sg}"));
        }
    }
    // Parametric reconstruction of the tail bound from the numeric inverse.
    let cases = [(100u64, 0.05, 5.0, 0.1), (1000, 0.2, 0.3, 0.4)];
    for &(n, beta, kl, r) in &cases {
        let ctx = ctx(n, beta, kl, r);
        for family in [
            TailFamily::sub_gaussian(sigma2).unwrap(),
            TailFamily::sub_gamma(sigma2, c).unwrap(),
        ] {
            let cert = chernoff_analogue(&ctx, &family, EssSupInfo::unknown());
            let budget = cert.params["budget_nats"];
            let psi = |l: f64| family.psi(l).unwrap_or(f64::INFINITY);
            let b_dom = if family.domain_sup().is_finite() {
                family.domain_sup()
            } else {
                1e3
            };
            let rebuilt = r
                + psi_star_inverse_numeric(psi, b_dom, NatsValue::new(budget).unwrap())
                    .map_err(|e| e.to_string())?;
            if (rebuilt - cert.value).abs() > 1e-6 {
                return Err(format!(
                    "rebuilt bound {rebuilt} vs evaluator {} (n={n}, kl={kl})",
                    cert.value
                ));
            }
        }
    }
    Ok(())
}

/// 7. Anytime validity: simultaneous violation over horizons up to 200 at
/// beta = 0.05 has Wilson upper bound at most 0.05 across presets, for
/// both the Basel schedule and the substituted confidence constant; the
/// Basel allocation's partial sums stay below beta including the tail.
fn c7_anytime() -> Check {
    let rule = PosteriorRule::Gibbs { lambda: 2.0, n_scaled: false };
    let runs = [
        (AnytimeMode::Basel, BoundId::Mcallester),
        (AnytimeMode::SeegerSubstitution, BoundId::MixedRate),
    ];
    for name in ["bernoulli-single", "bernoulli-pair", "realizable"] {
        let problem = preset(name).map_err(|e| e.to_string())?;
        for (mode, bound) in runs {
            let rep = anytime_coverage_experiment(
                &problem, &rule, bound, 200, 0.05, 10_000, 77_001, mode,
            )
            .map_err(|e| e.to_string())?;
            if rep.binomial_ci.1 > 0.05 {
                return Err(format!(
                    "{name}/{bound} under {mode:?}: {} violating trials of {}, \
                     Wilson upper {:.4} > 0.05",
                    rep.violations, rep.trials, rep.binomial_ci.1
                ));
            }
        }
    }
    // Basel budget: partial sum to 1e5 (smallest terms first, to keep the
    // float sum exact to the last bit) plus the analytic trigamma tail,
    // sum_{n > N} 1/n^2 < 1/(N + 1/2).
    let beta = 0.05;
    let schedule = BetaSchedule::basel(beta).map_err(|e| e.to_string())?;
    let mut partial = 0.0;
    let cap = 100_000u64;
    for n in (1..=cap).rev() {
        partial += schedule.beta_at(n).map_err(|e| e.to_string())?;
    }
    let tail = 6.0 * beta / (std::f64::consts::PI.powi(2) * (cap as f64 + 0.5));
    if partial + tail > beta + 1e-12 {
        return Err(format!("Basel partial sum {partial} + tail {tail} exceeds beta"));
    }
    Ok(())
}

/// 8. Alternating optimization on the 50-hypothesis problem: the final
/// fast-rate certificate improves on the prior posterior and on a
/// McAllester-optimized posterior, along a non-increasing trace.
fn c8_fifty_hypothesis_optimization() -> Check {
    let problem = preset("nested-fifty").map_err(|e| e.to_string())?;
    let sample = draw_dataset(&problem, 500, 77);
    let fr = alternating_optimize(&problem, &sample, BoundId::FastRateSimple, 0.05, 80, 1e-9)
        .map_err(|e| e.to_string())?;
    for w in fr.trace.windows(2) {
        if w[1] > w[0] + 1e-12 {
            return Err(format!("trace increased from {} to {}", w[0], w[1]));
        }
    }
    let prior_cert = fr.trace[0];
    if fr.certificate.value > prior_cert + 1e-12 {
        return Err(format!(
            "optimized {} did not improve on prior posterior {prior_cert}",
            fr.certificate.value
        ));
    }
    let mc = alternating_optimize(&problem, &sample, BoundId::Mcallester, 0.05, 80, 1e-9)
        .map_err(|e| e.to_string())?;
    if fr.certificate.value > mc.certificate.value + 1e-12 {
        return Err(format!(
            "fast-rate {} above mcallester-optimized {}",
            fr.certificate.value, mc.certificate.value
        ));
    }
    Ok(())
}

/// 9. Special functions: the W_{-1} round trip holds to 1e-9 on
/// [-10, -1], the kl inversion leaves residual below 1e-10 on interior
/// solutions, and the exact Maurer constant lands in
/// [sqrt(n), min(2 sqrt(n), 2 + sqrt(2n))] for n <= 200.
fn c9_special_functions() -> Check {
    for i in 0..=900 {
        let x = -10.0 + 9.0 * i as f64 / 900.0;
        let w = lambert_w_m1(x * x.exp()).map_err(|e| e.to_string())?;
        if (w - x).abs() > 1e-9 {
            return Err(format!("W_-1 round trip at x={x}: {w}, err {:.2e}", (w - x).abs()));
        }
    }
    for p10 in 0..=18 {
        let p = p10 as f64 * 0.05;
        for c in [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0] {
            let q = kl_inverse_upper(
                Probability::new(p).unwrap(),
                NatsValue::new(c).unwrap(),
            );
            if q.value() > 1.0 - 1e-5 {
                continue; // boundary solution, residual not defined by kl = c
            }
            let resid = (binary_kl(Probability::new(p).unwrap(), q).value() - c).abs();
            if resid > 1e-10 {
                return Err(format!("kl inverse residual {resid:.2e} at p={p}, c={c}"));
            }
        }
    }
    for n in 1..=200u64 {
        let xi = xi_maurer(n, XiMode::Exact);
        if xi.fell_back {
            return Err(format!("exact mode fell back at n={n}"));
        }
        let nf = n as f64;
        let lo = nf.sqrt();
        let hi = (2.0 * nf.sqrt()).min(2.0 + (2.0 * nf).sqrt());
        if xi.value < lo - 1e-12 || xi.value > hi + 1e-12 {
            return Err(format!("xi({n}) = {} outside [{lo}, {hi}]", xi.value));
        }
    }
    Ok(())
}

/// 10. Budget identities: the no-cut-off premium over the default bound is
/// exactly ln(pi^2 (kl+1)^2 / 6) - ln(n) nats (within 1e-12), and the
/// log-log variant wins exactly when its linear kl premium is below the
/// union-bound saving, i.e. only when kl grows slower than
/// logarithmically in n.
fn c10_budget_identities() -> Check {
    let family = TailFamily::bounded_range(0.0, 1.0).unwrap();
    let esssup = EssSupInfo::unknown();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    for &kl in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
        for &n in &[10u64, 100, 1_000, 10_000, 1_000_000] {
            let ctx = ctx(n, 0.05, kl, 0.1);
            let b_no = chernoff_no_cutoff(&ctx, &family).params["budget_nats"];
            let b_an = chernoff_analogue(&ctx, &family, esssup).params["budget_nats"];
            let lhs = (b_no - b_an) * n as f64;
            let rhs = (pi2 * (kl + 1.0) * (kl + 1.0) / 6.0).ln() - (n as f64).ln();
            if (lhs - rhs).abs() > 1e-12 {
                return Err(format!(
                    "no-cutoff premium at kl={kl}, n={n}: {lhs} vs {rhs}"
                ));
            }
            let b_ll = chernoff_loglog(&ctx, &family, esssup).params["budget_nats"];
            let margin = (std::f64::consts::E * kl.max(1.0) - kl)
                - (1.0 + (n as f64).ln() - (2.0 + (n as f64).ln()).ln());
            // Where the analytic margin is decisive, the budgets agree on
            // the winner.
            if margin.abs() > 1e-9 && ((b_ll < b_an) != (margin < 0.0)) {
                return Err(format!(
                    "loglog crossover disagrees at kl={kl}, n={n}: margin {margin}"
                ));
            }
        }
    }
    // Prose direction: sub-logarithmic kl growth favors the log-log
    // variant, super-logarithmic growth favors the default.
    let n = 1_000_000u64;
    let ln_n = (n as f64).ln();
    let slow = ctx(n, 0.05, 0.5 * ln_n, 0.1);
    let fast = ctx(n, 0.05, 2.0 * ln_n, 0.1);
    let wins_slow = chernoff_loglog(&slow, &family, esssup).params["budget_nats"]
        < chernoff_analogue(&slow, &family, esssup).params["budget_nats"];
    let wins_fast = chernoff_loglog(&fast, &family, esssup).params["budget_nats"]
        < chernoff_analogue(&fast, &family, esssup).params["budget_nats"];
    if !wins_slow || wins_fast {
        return Err(format!(
            "prose direction failed: slow-growth win = {wins_slow}, fast-growth win = {wins_fast}"
        ));
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("1 three-way equivalence (seeger / catoni-uniform / fast-rate-strong)", c1_three_way_equivalence),
        ("2 dominance ordering (closed forms and certificates)", c2_dominance),
        ("3 realizable case (zero empirical risk collapses)", c3_realizable),
        ("4 gamma = 2 constants (2 ln 2 and 2)", c4_gamma_two_constants),
        ("5 Monte-Carlo coverage on all presets", c5_coverage),
        ("6 numeric conjugate inverse round trip", c6_numeric_inverse_round_trip),
        ("7 anytime simultaneous coverage and Basel budget", c7_anytime),
        ("8 fifty-hypothesis alternating optimization", c8_fifty_hypothesis_optimization),
        ("9 special functions (W_-1, kl inverse, Maurer constant)", c9_special_functions),
        ("10 budget identities and log-log crossover", c10_budget_identities),
    ];
    let mut failures = Vec::new();
    // Leading newline keeps criterion 1 off the harness's "test ..." line.
    println!();
    for (name, run) in criteria {
        match run() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "acceptance criteria failed: {failures:?}");
}
