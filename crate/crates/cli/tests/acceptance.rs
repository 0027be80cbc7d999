//! Acceptance run: one line per criterion, `PASS` or `FAIL`, with the
//! criterion's runtime against its limit. Pass criterion numbers as
//! arguments to run a subset.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use revhyp::chains::{
    build, glauber_detailed_balance, known_constant_bounds, Boundary, ChainSpec, RateFamily,
};
use revhyp::hypercon::{
    critical_time, eta, implied_poincare, tau, theta, threshold, verify, Direction, HyperQuery,
    SearchBudget, ThresholdFamily, VerdictStatus,
};
use revhyp::logsob::{
    estimate_constant, poincare_constant, pointwise_monotonicity, sv_check, EstimateBudget,
};
use revhyp::measure::{ProbabilitySpace, RealFunction};
use revhyp::mixing::{
    alpha_zero_counterexample, exact_joint, exhaustive_correlated_check, kernel_with_alpha,
    product_improved_bound, two_set_bound, CorrelatedProductInstance, Coupling, TwoSetInstance,
};
use revhyp::nicd::{
    agreement_exact, agreement_mc, holder_bound, plurality_lower_sweep, NicdConfig, Protocol,
};
use revhyp::rng::{substream, Rng};
use revhyp::semigroup::{Generator, Semigroup, TensorGenerator};
use revhyp::social_choice::{
    paradox_by_profiles, paradox_probability, pivotal_intersection_exact, CubeFunction,
    RankingDistribution, RANKINGS,
};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mins(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

/// Reversible generator with random measure and conductances on `n` points;
/// a path of extra conductance keeps it irreducible.
fn random_generator(rng: &mut Rng, n: usize) -> Generator {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let space = Arc::new(ProbabilitySpace::from_weights(&w).unwrap());
    let mu = space.mu().to_vec();
    let mut rates = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let mut c: f64 = rng.random_range(0.0..1.0);
            if y == x + 1 {
                c += 0.05;
            }
            rates.push((x, y, c / mu[x]));
            rates.push((y, x, c / mu[y]));
        }
    }
    Generator::from_rates(space, &rates).unwrap()
}

fn simple(weights: &[f64]) -> Generator {
    Generator::simple(Arc::new(ProbabilitySpace::from_weights(weights).unwrap()))
}

fn random_weights(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..1.0)).collect()
}

fn search(restarts: usize) -> SearchBudget {
    SearchBudget {
        restarts,
        ..SearchBudget::default()
    }
}

fn positive(g: &Generator, u: &[f64]) -> RealFunction {
    RealFunction::new(g.space().clone(), u.iter().map(|v| v.exp()).collect()).unwrap()
}

fn c01() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for i in 0..10_000u64 {
        let mut rng = substream(101, i);
        let n = rng.random_range(2..=6);
        let g = random_generator(&mut rng, n);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q: f64 = rng.random_range(0.01..1.99);
        let p: f64 = rng.random_range(q..=2.0);
        if p <= q {
            continue;
        }
        let c = sv_check(&g, &positive(&g, &u), p, q).map_err(|e| e.to_string())?;
        worst = worst.min(c.lhs - c.rhs);
        if c.lhs < c.rhs - 1e-10 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!(
        "10000 instances, 0 violations, smallest slack {worst:.3e}"
    ))
}

fn c02() -> Outcome {
    let grid: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let (mut comparisons, mut violations, mut worst) = (0, 0, f64::NEG_INFINITY);
    for i in 0..1000u64 {
        let mut rng = substream(202, i);
        let n = rng.random_range(2..=6);
        let g = random_generator(&mut rng, n);
        let witnesses: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let a = pointwise_monotonicity(&g, &grid, &witnesses);
        comparisons += a.comparisons;
        violations += a.violations;
        worst = worst.max(a.worst_excess);
    }
    ensure(violations == 0, || {
        format!("{violations} of {comparisons} comparisons violated")
    })?;
    Ok(format!(
        "1000 generators, {comparisons} comparisons, largest excess {worst:.3e}"
    ))
}

fn c03() -> Outcome {
    let b = EstimateBudget::default();
    let uniform = simple(&[0.5, 0.5]);
    let one = estimate_constant(&uniform, 1.0, &b, 3)
        .map_err(|e| e.to_string())?
        .c_hat;
    let zero = estimate_constant(&uniform, 0.0, &b, 3)
        .map_err(|e| e.to_string())?
        .c_hat;
    let biased = estimate_constant(&simple(&[0.1, 0.9]), 1.0, &b, 3)
        .map_err(|e| e.to_string())?
        .c_hat;
    ensure((one - 2.0).abs() <= 0.02 * 2.0, || {
        format!("1-logSob {one}")
    })?;
    ensure((zero - 2.0).abs() <= 0.01 * 2.0, || {
        format!("0-logSob {zero}")
    })?;
    ensure(biased <= 2.5 * 1.02, || format!("biased 1-logSob {biased}"))?;
    Ok(format!(
        "C1 = {one:.6}, C0 = {zero:.6}, biased C1 = {biased:.6}"
    ))
}

fn reverse_spaces() -> Vec<Vec<f64>> {
    let mut spaces = vec![vec![0.5, 0.5], vec![0.1, 0.9]];
    for (i, n) in [2usize, 3, 4, 5, 3, 4, 5].into_iter().enumerate() {
        spaces.push(random_weights(&mut substream(404, i as u64), n));
    }
    spaces
}

fn no_counterexample(
    g: &Generator,
    p: f64,
    q: f64,
    t: f64,
    restarts: usize,
    seed: u64,
) -> Result<(), String> {
    let query = HyperQuery::new(Direction::Reverse, p, q, t).map_err(|e| e.to_string())?;
    let v = verify(g, &query, &search(restarts), seed).map_err(|e| e.to_string())?;
    ensure(v.status == VerdictStatus::NoCounterexampleFound, || {
        format!(
            "counterexample at p {p}, q {q}, t {t} on {} points (deficit {:.3e})",
            g.len(),
            v.deficit
        )
    })
}

fn c04() -> Outcome {
    let two = simple(&[0.5, 0.5]);
    let ct = critical_time(&two, Direction::Reverse, 0.5, 0.0, &search(16), 4)
        .map_err(|e| e.to_string())?;
    let sharp = 0.5 * 2f64.ln();
    ensure((ct.t_star - sharp).abs() <= 1e-2, || {
        format!("critical time {} vs {sharp}", ct.t_star)
    })?;
    let grid = [
        (0.5, 0.0),
        (0.9, -1.0),
        (0.2, -3.0),
        (-0.5, -2.0),
        (0.99, 0.5),
        (0.3, 0.1),
        (0.7, 0.2),
        (-0.1, -0.5),
        (0.5, -0.5),
        (0.05, -10.0),
    ];
    let spaces = reverse_spaces();
    for w in &spaces {
        let g = simple(w);
        for &(p, q) in &grid {
            let t = threshold(ThresholdFamily::Simple, p, q, None).map_err(|e| e.to_string())?;
            no_counterexample(&g, p, q, t, 64, 5)?;
        }
    }
    Ok(format!(
        "critical time {:.5} (sharp {sharp:.5}); {} spaces x 10 pairs, no counterexample",
        ct.t_star,
        spaces.len()
    ))
}

fn c05() -> Outcome {
    let nonneg = [(0.5, 0.0), (0.9, 0.1), (0.3, 0.1), (0.99, 0.5), (0.7, 0.0)];
    let nonpos = [
        (0.0, -1.0),
        (-0.5, -2.0),
        (-0.1, -0.5),
        (0.0, -5.0),
        (-1.0, -3.0),
    ];
    let spaces = reverse_spaces();
    for w in &spaces {
        let g = simple(w);
        for &(p, q) in nonneg.iter().chain(&nonpos) {
            let t =
                threshold(ThresholdFamily::SimpleStrong, p, q, None).map_err(|e| e.to_string())?;
            let closed = if q >= 0.0 {
                ((1.0 - q) * (2.0 - p) / ((1.0 - p) * (2.0 - q))).ln()
            } else {
                ((2.0 - q) / (2.0 - p)).ln()
            };
            ensure((t - closed).abs() <= 1e-12 * closed.max(1.0), || {
                format!("threshold {t} vs {closed}")
            })?;
            no_counterexample(&g, p, q, t, 64, 6)?;
        }
    }
    let mut pairs = 0;
    let values: Vec<f64> = (-30..=19)
        .map(|i| 0.05 * i as f64)
        .chain([0.99, -5.0, -10.0])
        .collect();
    for &p in &values {
        for &q in &values {
            if !(q < p && p < 1.0) || (q < 0.0 && p > 0.0) {
                continue;
            }
            let b = threshold(ThresholdFamily::Borell, p, q, None).map_err(|e| e.to_string())?;
            let s =
                threshold(ThresholdFamily::SimpleStrong, p, q, None).map_err(|e| e.to_string())?;
            let w = threshold(ThresholdFamily::Simple, p, q, None).map_err(|e| e.to_string())?;
            ensure(b <= s * (1.0 + 1e-14) && s <= w * (1.0 + 1e-14), || {
                format!("order fails at p {p}, q {q}: {b} {s} {w}")
            })?;
            pairs += 1;
        }
    }
    Ok(format!(
        "{} spaces x 10 pairs clean; ordering on {pairs} pairs",
        spaces.len()
    ))
}

fn c06() -> Outcome {
    let th = theta(-1.0).map_err(|e| e.to_string())?;
    let eta_small = eta(-1e-3).map_err(|e| e.to_string())?;
    let tau_small = tau(1e-3).map_err(|e| e.to_string())?;
    let t = eta(-1.0).map_err(|e| e.to_string())?;
    for w in [vec![0.5, 0.5], vec![0.2, 0.3, 0.5]] {
        no_counterexample(&simple(&w), 0.0, -1.0, t, 64, 7)?;
    }
    ensure((th - 19.0 / 27.0).abs() <= 1e-12, || {
        format!("theta(-1) = {th}")
    })?;
    let target = 5e-4 + 2.5e-7;
    ensure((eta_small - target).abs() <= 1e-8, || {
        format!(
            "theta(-1) = {th:.15} ok; eta(-1e-3) = {eta_small:.10e}, expected {target:.10e} +- 1e-8 \
             (tau(1e-3) = {tau_small:.10e}); verify at eta(-1) clean"
        )
    })?;
    Ok(format!(
        "theta(-1) = {th:.15}, eta(-1e-3) = {eta_small:.10e}; verify at eta(-1) clean"
    ))
}

fn hypercube(n: usize, alpha: f64) -> TensorGenerator {
    let factor = Arc::new(Generator::simple(Arc::new(
        ProbabilitySpace::two_point(alpha).unwrap(),
    )));
    TensorGenerator::power(factor, n, 1.0).unwrap()
}

fn random_set(rng: &mut Rng, size: usize) -> Vec<usize> {
    let density: f64 = rng.random_range(0.0..0.6);
    let mut s: Vec<usize> = (0..size)
        .filter(|_| rng.random::<f64>() < density)
        .collect();
    if s.is_empty() {
        s.push(rng.random_range(0..size));
    }
    s
}

fn c07() -> Outcome {
    let mut min_slack = f64::INFINITY;
    let mut uniform_checked = 0;
    for i in 0..1000u64 {
        let mut rng = substream(707, i);
        let n = rng.random_range(1..=12);
        let alpha = if rng.random::<bool>() {
            0.5
        } else {
            rng.random_range(0.05..0.5)
        };
        let g = hypercube(n, alpha);
        let size = 1usize << n;
        let (a, b) = (random_set(&mut rng, size), random_set(&mut rng, size));
        let t = rng.random_range(0.01..3.0);
        let inst = TwoSetInstance::new(g.mu(), a, b, t).map_err(|e| e.to_string())?;
        let exact = exact_joint(&g, &inst.a_set, &inst.b_set, t).map_err(|e| e.to_string())?;
        let bound = inst.bound(4.0).map_err(|e| e.to_string())?;
        min_slack = min_slack.min(exact - bound);
        ensure(exact >= bound - 1e-12, || {
            format!("instance {i}: exact {exact} < bound {bound}")
        })?;
        if alpha == 0.5 {
            let improved = product_improved_bound(t, inst.a, inst.b).map_err(|e| e.to_string())?;
            ensure(exact >= improved - 1e-12, || {
                format!("instance {i}: exact {exact} < improved {improved}")
            })?;
            uniform_checked += 1;
        }
    }
    let radii = [0.1, 0.5, 1.0, 2.0, 3.0];
    let mut grid = 0;
    for &a in &radii {
        for &b in &radii {
            for t in [0.05, 0.2, 0.5, 1.0, 2.0, 4.0] {
                let improved = product_improved_bound(t, a, b).map_err(|e| e.to_string())?;
                let c4 = two_set_bound(4.0, a, b, t).map_err(|e| e.to_string())?;
                ensure(improved >= c4 * (1.0 - 1e-12), || {
                    format!("improved {improved} < C=4 bound {c4} at a {a} b {b} t {t}")
                })?;
                grid += 1;
            }
        }
    }
    Ok(format!(
        "1000 instances (n <= 12), smallest slack {min_slack:.3e}; improved bound checked on {uniform_checked} uniform cubes and dominates on {grid} grid points"
    ))
}

fn c08() -> Outcome {
    let uniform = Arc::new(ProbabilitySpace::uniform(2).unwrap());
    let mut pairs = 0u64;
    let mut runs = 0;
    for n in 1..=4 {
        for rho in [0.0, 0.25, 0.5] {
            let inst = CorrelatedProductInstance::new(uniform.clone(), n, Coupling::Rho(rho))
                .map_err(|e| e.to_string())?;
            let r = exhaustive_correlated_check(&inst).map_err(|e| e.to_string())?;
            ensure(r.violations == 0, || {
                format!("rho {rho}, n {n}: {} violations", r.violations)
            })?;
            pairs += r.pairs_checked;
            runs += 1;
        }
        for alpha in [0.25, 0.5] {
            let k = kernel_with_alpha(alpha).map_err(|e| e.to_string())?;
            let inst = CorrelatedProductInstance::new(k.space().clone(), n, Coupling::Kernel(k))
                .map_err(|e| e.to_string())?;
            let r = exhaustive_correlated_check(&inst).map_err(|e| e.to_string())?;
            ensure(r.violations == 0, || {
                format!("alpha {alpha}, n {n}: {} violations", r.violations)
            })?;
            pairs += r.pairs_checked;
            runs += 1;
        }
    }
    let w = alpha_zero_counterexample().map_err(|e| e.to_string())?;
    ensure(
        w.joint == 0.0 && w.alpha == 0.0 && w.mu_a > 0.0 && w.nu_b > 0.0,
        || format!("{w:?}"),
    )?;
    Ok(format!(
        "{runs} instances, {pairs} set pairs, 0 violations; alpha = 0 joint is exactly 0"
    ))
}

fn c09() -> Outcome {
    let k4 = vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)];
    let c5_chord = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)];
    let compared = vec![
        ChainSpec::RandomTransposition { n: 3 },
        ChainSpec::RandomTransposition { n: 4 },
        ChainSpec::RandomTransposition { n: 5 },
        ChainSpec::TopToRandom { n: 3 },
        ChainSpec::TopToRandom { n: 4 },
        ChainSpec::TopToRandom { n: 5 },
        ChainSpec::BernoulliLaplace { n: 4, r: 2 },
        ChainSpec::BernoulliLaplace { n: 5, r: 2 },
        ChainSpec::SpanningTreeWalk {
            vertices: 4,
            edges: k4,
        },
        ChainSpec::SpanningTreeWalk {
            vertices: 5,
            edges: c5_chord,
        },
    ];
    let mut others = vec![
        ChainSpec::Simple {
            mu: vec![1.0, 2.0, 3.0],
        },
        ChainSpec::ProductWalk {
            m: 3,
            n: 3,
            mu: Some(vec![0.2, 0.3, 0.5]),
        },
        ChainSpec::QqInfinityTruncated {
            lambda: 2.0,
            truncation: 40,
        },
    ];
    let mut worst_db = 0.0f64;
    for boundary in [Boundary::Free, Boundary::Plus, Boundary::Minus] {
        for rates in [RateFamily::Metropolis, RateFamily::HeatBath] {
            for (w, h) in [(2, 2), (3, 3)] {
                let spec = ChainSpec::GlauberIsing {
                    width: w,
                    height: h,
                    beta: 0.4,
                    h: 0.2,
                    boundary,
                    rates,
                };
                worst_db =
                    worst_db.max(glauber_detailed_balance(&spec).map_err(|e| e.to_string())?);
                others.push(spec);
            }
        }
    }
    ensure(worst_db <= 1e-10, || {
        format!("detailed balance residual {worst_db:.3e}")
    })?;
    for spec in &others {
        build(spec).map_err(|e| format!("{}: {e}", spec.kind()))?;
    }
    let mut notes = Vec::new();
    let mut above = Vec::new();
    for spec in &compared {
        let g = build(spec).map_err(|e| format!("{}: {e}", spec.kind()))?;
        let kb = known_constant_bounds(spec).ok_or("missing literature bound")?;
        let upper = kb.upper.ok_or("missing upper bound")?;
        let budget = EstimateBudget {
            restarts: Some((2 * g.len()).min(24)),
            ..EstimateBudget::default()
        };
        let e = estimate_constant(&g, kb.p, &budget, 9).map_err(|e| e.to_string())?;
        let note = format!(
            "{}({}) {:.4} vs {:.4}",
            spec.kind(),
            g.len(),
            e.c_hat,
            upper
        );
        if e.c_hat > upper * (1.0 + 1e-9) {
            above.push(note);
        } else {
            notes.push(note);
        }
    }
    let gap = |n| -> Result<f64, String> {
        let g = build(&ChainSpec::QqInfinityTruncated {
            lambda: 2.0,
            truncation: n,
        })
        .map_err(|e| e.to_string())?;
        Ok(g.spectral_gap().map_err(|e| e.to_string())?.value)
    };
    let (g100, g200) = (gap(100)?, gap(200)?);
    ensure((g100 - g200).abs() <= 1e-6, || {
        format!("queue gap {g100} vs {g200}")
    })?;
    let summary = format!(
        "{} builders valid; detailed balance {worst_db:.1e}; queue gap drift {:.1e}; below bound: {}",
        compared.len() + others.len(),
        (g100 - g200).abs(),
        notes.join(", ")
    );
    ensure(above.is_empty(), || {
        format!("{summary}; ABOVE bound: {}", above.join(", "))
    })?;
    Ok(summary)
}

fn random_law(rng: &mut Rng) -> RankingDistribution {
    let w: Vec<f64> = (0..6).map(|_| rng.random_range(0.05..1.0)).collect();
    law_from(&w)
}

fn law_from(w: &[f64]) -> RankingDistribution {
    let total: f64 = w.iter().sum();
    let mut probs: BTreeMap<String, f64> = RANKINGS
        .iter()
        .zip(w)
        .map(|(r, v)| (r.to_string(), v / total))
        .collect();
    let sum: f64 = probs.values().sum();
    *probs.get_mut("abc").unwrap() += 1.0 - sum;
    RankingDistribution::new(probs).unwrap()
}

/// Relabels a -> c, b -> a, c -> b, so the (b>c, c>a) pair becomes (a>b, b>c).
fn rotate(law: &RankingDistribution) -> RankingDistribution {
    let probs = law
        .probs
        .iter()
        .map(|(r, p)| {
            let s: String = r
                .chars()
                .map(|c| match c {
                    'a' => 'c',
                    'b' => 'a',
                    _ => 'b',
                })
                .collect();
            (s, *p)
        })
        .collect();
    RankingDistribution::new(probs).unwrap()
}

fn random_sign(rng: &mut Rng, n: usize) -> CubeFunction {
    let table = (0..1usize << n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    CubeFunction::new(n, 0.5, table).unwrap()
}

fn c10() -> Outcome {
    let mut worst_px = 0.0f64;
    for i in 0..300u64 {
        let mut rng = substream(1010, i);
        let n = rng.random_range(1..=5);
        let law = random_law(&mut rng);
        let f: Vec<CubeFunction> = (0..3).map(|_| random_sign(&mut rng, n)).collect();
        let formula = paradox_probability(&f[0], &f[1], &f[2], &law)
            .map_err(|e| e.to_string())?
            .value;
        let counted = paradox_by_profiles(&f[0], &f[1], &f[2], &law).map_err(|e| e.to_string())?;
        worst_px = worst_px.max((formula - counted).abs());
    }
    ensure(worst_px <= 1e-12, || {
        format!("formula and counting differ by {worst_px:.3e}")
    })?;
    let mut checks = 0;
    let mut min_slack = f64::INFINITY;
    for i in 0..1000u64 {
        let mut rng = substream(1011, i);
        let n = rng.random_range(2..=6);
        let law = random_law(&mut rng);
        let f: Vec<CubeFunction> = (0..3).map(|_| random_sign(&mut rng, n)).collect();
        let rotated = rotate(&law);
        let twice = rotate(&rotated);
        let pairs = [
            (&f[0], &f[1], &law),
            (&f[1], &f[2], &rotated),
            (&f[2], &f[0], &twice),
        ];
        let (vi, vj) = (rng.random_range(0..n), rng.random_range(0..n));
        for (fa, fb, l) in pairs {
            let c = pivotal_intersection_exact(fa, fb, l, vi, vj).map_err(|e| e.to_string())?;
            ensure(c.holds, || format!("triple {i}: {c:?}"))?;
            min_slack = min_slack.min(c.joint - c.bound);
            checks += 1;
        }
    }
    let mut sandwiches = 0;
    for i in 0..1000u64 {
        let mut rng = substream(1012, i);
        let n = rng.random_range(1..=8);
        let bias = rng.random_range(0.02..0.98);
        let f = random_sign(&mut rng, n)
            .with_bias(bias)
            .map_err(|e| e.to_string())?;
        for v in 0..n {
            let s = f.influence_sandwich(v).map_err(|e| e.to_string())?;
            ensure(s.holds, || format!("function {i}, coordinate {v}: {s:?}"))?;
            sandwiches += 1;
        }
    }
    Ok(format!(
        "px formula vs counting within {worst_px:.1e} (300 triples, n <= 5); {checks} pivotal checks, smallest slack {min_slack:.3e}; {sandwiches} sandwiches hold"
    ))
}

fn cfg(m: usize, n: usize, k: usize, rho: f64, trials: u64, seed: u64) -> NicdConfig {
    NicdConfig {
        m,
        n,
        k,
        rho,
        trials,
        seed,
    }
}

fn balanced_table(rng: &mut Rng, m: usize, n: usize) -> Protocol {
    let size = m.pow(n as u32);
    let mut table: Vec<u32> = (0..size).map(|x| (x % m) as u32).collect();
    table.shuffle(rng);
    Protocol::Table { table }
}

fn c11() -> Outcome {
    let dict = [Protocol::DictatorCoordinate { coordinate: 0 }];
    let exact = agreement_exact(&cfg(2, 1, 2, 0.5, 0, 0), &dict).map_err(|e| e.to_string())?;
    ensure((exact - 0.625).abs() <= 1e-12, || {
        format!("dictator agreement {exact}")
    })?;
    let mut independent = Vec::new();
    for (m, n, k) in [(3, 5, 3), (2, 7, 4), (4, 3, 2)] {
        let a = agreement_mc(&cfg(m, n, k, 0.0, 100_000, 11), &[Protocol::Plurality])
            .map_err(|e| e.to_string())?;
        let want = (m as f64).powi(1 - k as i32);
        ensure(a.ci_lo <= want && want <= a.ci_hi, || {
            format!(
                "rho = 0, m {m} k {k}: {want} outside [{}, {}]",
                a.ci_lo, a.ci_hi
            )
        })?;
        independent.push(format!("{:.4}~{want:.4}", a.estimate));
    }
    let mut configs = 0;
    let mut rng = substream(1111, 0);
    for m in [2usize, 3] {
        for n in 1..=3 {
            for k in 2..=5 {
                for rho in [0.1, 0.5, 0.9] {
                    let c = cfg(m, n, k, rho, 0, 0);
                    let mixed: Vec<Protocol> = (0..k)
                        .map(|p| match p % 3 {
                            0 => Protocol::Plurality,
                            1 => Protocol::DictatorCoordinate { coordinate: p % n },
                            _ => balanced_table(&mut rng, m, n),
                        })
                        .collect();
                    let sets = [
                        vec![Protocol::Plurality],
                        vec![Protocol::DictatorCoordinate { coordinate: n - 1 }],
                        vec![balanced_table(&mut rng, m, n)],
                        mixed,
                    ];
                    for protocols in &sets {
                        let e = agreement_exact(&c, protocols).map_err(|e| e.to_string())?;
                        let h = holder_bound(&c, protocols).map_err(|e| e.to_string())?;
                        ensure(e <= h * (1.0 + 1e-12), || {
                            format!("m {m} n {n} k {k} rho {rho}: {e} > {h}")
                        })?;
                        configs += 1;
                    }
                }
            }
        }
    }
    let ks = [2usize, 4, 8, 16, 32, 64];
    let mut slopes = Vec::new();
    for seed in [1u64, 2, 3] {
        let s = plurality_lower_sweep(2, 0.7, &ks, 101, 20_000, seed).map_err(|e| e.to_string())?;
        slopes.push(s.slope.ok_or("no slope")?);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    ensure(slopes.iter().all(|s| *s < 0.0), || {
        format!("slopes {slopes:?}")
    })?;
    ensure(
        slopes.iter().all(|s| (s - mean).abs() <= 0.2 * mean.abs()),
        || format!("unstable slopes {slopes:?}"),
    )?;
    Ok(format!(
        "dictator 0.625 exact; rho = 0 {}; Hölder bound dominates on {configs} configs; plurality slopes {:.3?} (m 2, rho 0.7, n 101)",
        independent.join(" "),
        slopes
    ))
}

/// Random connected 3-regular multigraph-free graph by the pairing model.
fn cubic_graph(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = substream(seed, n as u64);
    'retry: loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(&mut rng);
        let mut edges = Vec::new();
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || edges.contains(&(a, b)) {
                continue 'retry;
            }
            edges.push((a, b));
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &edges {
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().all(|s| *s) {
            return edges;
        }
    }
}

fn c12() -> Outcome {
    let mut sweeps = 0;
    for w in [vec![0.5, 0.5], vec![0.1, 0.9], vec![0.2, 0.3, 0.5]] {
        let g = simple(&w);
        let pc = poincare_constant(&g).map_err(|e| e.to_string())?;
        for (p, q) in [
            (0.5, 0.0),
            (0.9, -1.0),
            (0.3, 0.1),
            (-0.5, -2.0),
            (0.99, 0.5),
        ] {
            let base = threshold(ThresholdFamily::Simple, p, q, None).map_err(|e| e.to_string())?;
            for s in [1.0, 1.25, 2.0, 4.0] {
                let t = s * base;
                no_counterexample(&g, p, q, t, 16, 12)?;
                let implied = implied_poincare(p, q, t).map_err(|e| e.to_string())?;
                ensure(implied >= pc, || {
                    format!("implied {implied} < {pc} at p {p} q {q} t {t}")
                })?;
                sweeps += 1;
            }
        }
    }
    let mut rows = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let (mut pc, mut c1) = (0.0, 0.0);
        for draw in 0..4u64 {
            let space = Arc::new(ProbabilitySpace::uniform(n).unwrap());
            let rates: Vec<(usize, usize, f64)> = cubic_graph(n, 1212 + draw)
                .into_iter()
                .flat_map(|(a, b)| [(a, b, 1.0), (b, a, 1.0)])
                .collect();
            let g = Generator::from_rates(space, &rates).map_err(|e| e.to_string())?;
            pc += poincare_constant(&g).map_err(|e| e.to_string())? / 4.0;
            let budget = EstimateBudget {
                restarts: Some(16),
                ..EstimateBudget::default()
            };
            c1 += estimate_constant(&g, 1.0, &budget, 12)
                .map_err(|e| e.to_string())?
                .c_hat
                / 4.0;
        }
        rows.push((n, pc, c1));
    }
    let pcs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let band =
        pcs.iter().cloned().fold(0.0, f64::max) / pcs.iter().cloned().fold(f64::INFINITY, f64::min);
    let table = rows
        .iter()
        .map(|(n, pc, c)| format!("n {n}: mean P {pc:.3} mean C1 {c:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(band <= 3.0, || format!("Poincaré band {band:.3}: {table}"))?;
    ensure(rows.windows(2).all(|w| w[1].2 > w[0].2), || {
        format!("1-logSob not increasing: {table}")
    })?;
    Ok(format!(
        "{sweeps} verified (p, q, t) points; {table}; band {band:.2}"
    ))
}

struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = std::env::temp_dir().join(format!("revhyp-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.join(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.dir.join(name), text).unwrap();
        self.path(name)
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

fn revhyp(args: &[String]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_revhyp"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn c13() -> Outcome {
    let ws = Workspace::new();
    let gen = ws.path("gen3.json");
    let gen2 = ws.path("gen2.json");
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<String>>();
    let (code, _) = revhyp(&s(&[
        "chains",
        "build",
        "simple",
        "--mu",
        "0.2,0.3,0.5",
        "--out",
        &gen,
        "--seed",
        "1",
    ]));
    ensure(code == 0, || "chains build failed".into())?;
    let (code, _) = revhyp(&s(&[
        "chains", "build", "simple", "--mu", "1,1", "--out", &gen2, "--seed", "1",
    ]));
    ensure(code == 0, || "chains build failed".into())?;
    let a = ws.write("a.json", "[0]");
    let b = ws.write("b.json", "[1, 2]");
    let maj = ws.write(
        "maj.json",
        r#"{"n": 3, "table": [-1, -1, -1, 1, -1, 1, 1, 1]}"#,
    );
    let law = ws.write(
        "law.json",
        r#"{"k": 3, "probs": {"abc": 0.2, "acb": 0.1, "bac": 0.2, "bca": 0.15, "cab": 0.15, "cba": 0.2}}"#,
    );
    let runs: Vec<Vec<String>> = vec![
        s(&[
            "hyper",
            "threshold",
            "--family",
            "simple",
            "--p",
            "0.5",
            "--q",
            "0",
        ]),
        s(&[
            "hyper",
            "verify",
            "--gen",
            &gen,
            "--dir",
            "rev",
            "--p",
            "0.5",
            "--q",
            "0",
            "--t",
            "0.405",
            "--restarts",
            "16",
        ]),
        s(&[
            "hyper",
            "critical-time",
            "--gen",
            &gen2,
            "--p",
            "0.5",
            "--q",
            "0",
            "--restarts",
            "4",
        ]),
        s(&[
            "logsob",
            "estimate",
            "--gen",
            &gen,
            "--p",
            "1",
            "--restarts",
            "8",
        ]),
        s(&[
            "logsob",
            "audit-monotone",
            "--gen",
            &gen,
            "--grid",
            "0,0.5,1,1.5,2",
            "--restarts",
            "4",
            "--witnesses",
            "16",
        ]),
        s(&["sv", "random", "--gen", &gen, "--trials", "200"]),
        s(&[
            "mixing", "exact", "--gen", &gen, "--A", &a, "--B", &b, "--t", "2", "--C", "4",
        ]),
        s(&[
            "mixing", "sweep", "--gen", &gen, "--A", &a, "--B", &b, "--C", "4", "--times",
            "0.5,1,2", "--trials", "20000", "--csv",
        ]),
        s(&["correlated", "check", "--rho", "0.25", "--n", "3"]),
        s(&[
            "arrow", "px", "--f1", &maj, "--f2", &maj, "--f3", &maj, "--law", &law, "--mc", "20000",
        ]),
        s(&[
            "arrow",
            "influence",
            "--fn",
            &maj,
            "--i",
            "2",
            "--bias",
            "0.3",
        ]),
        s(&[
            "nicd",
            "simulate",
            "--m",
            "3",
            "--n",
            "101",
            "--k",
            "2,4,8",
            "--rho",
            "0.5",
            "--protocol",
            "plurality",
            "--trials",
            "20000",
            "--csv",
        ]),
        s(&[
            "nicd", "sweep", "--m", "2", "--n", "101", "--rho", "0.7", "--trials", "5000",
        ]),
        s(&[
            "chains",
            "sample",
            "qq-infinity",
            "--lambda",
            "2",
            "--trunc",
            "150",
            "--t",
            "100",
        ]),
    ];
    let validator = schema();
    for run in &runs {
        let mut outputs = Vec::new();
        for jobs in ["1", "4"] {
            let mut args = run.clone();
            args.extend(s(&["--seed", "7", "--jobs", jobs]));
            let (c1, first) = revhyp(&args);
            let (c2, second) = revhyp(&args);
            ensure(c1 == 0 && c2 == 0, || {
                format!("{}: exit {c1}/{c2}", run.join(" "))
            })?;
            ensure(first == second, || {
                format!("{} at --jobs {jobs}: outputs differ", run.join(" "))
            })?;
            outputs.push(first);
        }
        let csv = run.iter().any(|a| a == "--csv");
        if csv {
            ensure(outputs[0] == outputs[1], || {
                format!("{}: CSV differs across --jobs", run.join(" "))
            })?;
            continue;
        }
        let docs: Vec<serde_json::Value> = outputs
            .iter()
            .map(|o| serde_json::from_slice(o).unwrap())
            .collect();
        for d in &docs {
            ensure(validator.is_valid(d), || {
                format!("{}: report fails the schema", run.join(" "))
            })?;
        }
        ensure(
            docs[0]["results"] == docs[1]["results"] && docs[0]["params"] == docs[1]["params"],
            || format!("{}: results differ across --jobs", run.join(" ")),
        )?;
        if run[1] == "threshold" {
            let v = docs[0]["results"]["value"].as_f64().unwrap_or(f64::NAN);
            ensure((v - 2f64.ln()).abs() < 1e-15, || {
                format!("threshold value {v}")
            })?;
        }
    }
    Ok(format!("{} commands, byte-identical reruns at --jobs 1 and 4, identical results across worker counts", runs.len()))
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "Stroock-Varopoulos comparison",
            limit: Duration::from_secs(60),
            run: c01,
        },
        Criterion {
            id: 2,
            name: "pointwise ratio monotonicity",
            limit: mins(2),
            run: c02,
        },
        Criterion {
            id: 3,
            name: "two-point constants",
            limit: Duration::from_secs(30),
            run: c03,
        },
        Criterion {
            id: 4,
            name: "reverse thresholds on simple operators",
            limit: mins(10),
            run: c04,
        },
        Criterion {
            id: 5,
            name: "improved simple thresholds",
            limit: mins(10),
            run: c05,
        },
        Criterion {
            id: 6,
            name: "theta and eta",
            limit: mins(2),
            run: c06,
        },
        Criterion {
            id: 7,
            name: "two-set mixing",
            limit: mins(5),
            run: c07,
        },
        Criterion {
            id: 8,
            name: "correlated-set bounds",
            limit: mins(5),
            run: c08,
        },
        Criterion {
            id: 9,
            name: "chain zoo",
            limit: mins(5),
            run: c09,
        },
        Criterion {
            id: 10,
            name: "Arrow machinery",
            limit: mins(5),
            run: c10,
        },
        Criterion {
            id: 11,
            name: "dice agreement",
            limit: mins(10),
            run: c11,
        },
        Criterion {
            id: 12,
            name: "Poincaré from reverse inequalities; cubic graphs",
            limit: mins(10),
            run: c12,
        },
        Criterion {
            id: 13,
            name: "CLI determinism",
            limit: mins(10),
            run: c13,
        },
    ];
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| wanted.is_empty() || wanted.contains(&c.id))
    {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let result = match result {
            Ok(d) if took > c.limit => Err(format!("{d}; over the {}s limit", c.limit.as_secs())),
            r => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {:>2} {tag} {} [{:.1}s of {}s]: {detail}",
            c.id,
            c.name,
            took.as_secs_f64(),
            c.limit.as_secs()
        );
        if result.is_err() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
