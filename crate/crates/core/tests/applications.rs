mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use revhyp::chains::*;
use revhyp::measure::ProbabilitySpace;
use revhyp::mixing::*;
use revhyp::nicd::*;
use revhyp::semigroup::{Generator, MarkovKernel, Semigroup, TensorGenerator};
use revhyp::social_choice::*;

fn hypercube(n: usize, alpha: f64) -> TensorGenerator {
    let factor = Arc::new(Generator::simple(Arc::new(
        ProbabilitySpace::two_point(alpha).unwrap(),
    )));
    TensorGenerator::power(factor, n, 1.0).unwrap()
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

fn sign_table(bits: u64, n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|x| if bits >> (x % 64) & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn two_set_bound_holds_on_products(n in 1usize..=8, alpha in prop::sample::select(vec![0.5, 0.3, 0.1]), seed in any::<u64>(), t in 0.01f64..3.0) {
        let g = hypercube(n, alpha);
        let size = 1usize << n;
        let pick = |salt: u64| -> Vec<usize> {
            let v: Vec<usize> = (0..size).filter(|x| (seed.rotate_left(*x as u32 % 64) ^ salt).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 61 == 0).collect();
            if v.is_empty() { vec![(seed as usize) % size] } else { v }
        };
        let inst = TwoSetInstance::new(g.mu(), pick(1), pick(2), t).unwrap();
        let exact = exact_joint(&g, &inst.a_set, &inst.b_set, t).unwrap();
        prop_assert!(exact >= inst.bound(4.0).unwrap() - 1e-12);
        if alpha == 0.5 {
            prop_assert!(exact >= product_improved_bound(t, inst.a, inst.b).unwrap() - 1e-12);
        }
    }

    #[test]
    fn parseval_and_sandwich(n in 1usize..=6, bits in any::<u64>(), bias in prop::sample::select(vec![0.1, 0.5, 0.9])) {
        let f = CubeFunction::new(n, bias, sign_table(bits, n)).unwrap();
        prop_assert!(f.parseval_residual() < 1e-10);
        for i in 0..n {
            prop_assert!(f.influence_sandwich(i).unwrap().holds);
        }
    }

    #[test]
    fn paradox_formula_matches_counting(n in 1usize..=3, b1 in any::<u64>(), b2 in any::<u64>(), b3 in any::<u64>(), w in prop::collection::vec(0.05f64..1.0, 6)) {
        let law = law_from(&w);
        let f = |b| CubeFunction::new(n, 0.5, sign_table(b, n)).unwrap();
        let (f1, f2, f3) = (f(b1), f(b2), f(b3));
        let a = paradox_probability(&f1, &f2, &f3, &law).unwrap().value;
        let c = paradox_by_profiles(&f1, &f2, &f3, &law).unwrap();
        prop_assert!((a - c).abs() < 1e-14);
    }

    #[test]
    fn pivotal_intersection(n in 2usize..=4, b1 in any::<u64>(), b2 in any::<u64>(), i in 0usize..4, j in 0usize..4) {
        prop_assume!(i < n && j < n);
        let f1 = CubeFunction::new(n, 0.5, sign_table(b1, n)).unwrap();
        let f2 = CubeFunction::new(n, 0.5, sign_table(b2, n)).unwrap();
        let c = pivotal_intersection_exact(&f1, &f2, &RankingDistribution::uniform(), i, j).unwrap();
        prop_assert!(c.holds, "{c:?}");
    }

    #[test]
    fn correlation_limited_by_alpha(w in prop::collection::vec(0.05f64..1.0, 6)) {
        let law = law_from(&w);
        let c = law.correlation(Pairwise::AB, Pairwise::BC);
        prop_assert!(c.abs() <= 1.0 - 4.0 * law.alpha() + 1e-12);
        let back: RankingDistribution = serde_json::from_str(&serde_json::to_string(&law).unwrap()).unwrap();
        prop_assert_eq!(back.alpha(), law.alpha());
    }

    #[test]
    fn delta_increases_with_eps(e1 in 0.01f64..0.99, e2 in 0.01f64..0.99, alpha in 0.3f64..0.9) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = delta_for_epsilon(lo, alpha, 1.0).unwrap().log_delta;
        let b = delta_for_epsilon(hi, alpha, 1.0).unwrap().log_delta;
        prop_assert!(a <= b);
    }
}

#[test]
fn builders_validate_and_glauber_is_reversible() {
    let specs = vec![
        ChainSpec::Simple {
            mu: vec![1.0, 2.0, 3.0],
        },
        ChainSpec::ProductWalk {
            m: 3,
            n: 3,
            mu: Some(vec![0.2, 0.3, 0.5]),
        },
        ChainSpec::RandomTransposition { n: 5 },
        ChainSpec::TopToRandom { n: 5 },
        ChainSpec::BernoulliLaplace { n: 6, r: 3 },
        ChainSpec::SpanningTreeWalk {
            vertices: 4,
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)],
        },
        ChainSpec::QqInfinityTruncated {
            lambda: 3.0,
            truncation: 60,
        },
    ];
    for spec in &specs {
        let g = build(spec).unwrap();
        assert!(g.spectral_gap().unwrap().value > 0.0, "{spec:?}");
    }
    let trees = build(&specs[5]).unwrap();
    assert_eq!(trees.len(), 16);
    for boundary in [Boundary::Free, Boundary::Plus, Boundary::Minus] {
        for rates in [RateFamily::Metropolis, RateFamily::HeatBath] {
            let spec = ChainSpec::GlauberIsing {
                width: 3,
                height: 3,
                beta: 0.4,
                h: 0.2,
                boundary,
                rates,
            };
            build(&spec).unwrap();
            assert!(glauber_detailed_balance(&spec).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn large_lattice_is_sampler_only() {
    let spec = ChainSpec::GlauberIsing {
        width: 4,
        height: 4,
        beta: 0.3,
        h: 0.0,
        boundary: Boundary::Plus,
        rates: RateFamily::HeatBath,
    };
    assert!(matches!(build(&spec), Err(revhyp::Error::TooLarge { .. })));
    let s = TrajectorySampler::new(spec, 4).unwrap();
    let mag = |x: &[i32]| x.iter().sum::<i32>() as f64;
    let a = s.sample_path(5.0, &mag, 10, 0);
    let b = s.sample_path(5.0, &mag, 10, 0);
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.n_events, b.n_events);
    assert!(a.n_jumps > 0);
}

#[test]
fn queue_gap_is_stable_under_truncation() {
    let gap = |n| {
        build(&ChainSpec::QqInfinityTruncated {
            lambda: 2.0,
            truncation: n,
        })
        .unwrap()
        .spectral_gap()
        .unwrap()
        .value
    };
    assert!((gap(100) - gap(200)).abs() < 1e-6);
}

#[test]
fn monte_carlo_joint_covers_exact() {
    let g = common::reversible(&[0.2, 0.5, 0.3, 0.4], &[0.3, 0.9, 0.1, 0.5, 0.2, 0.7]);
    let exact = exact_joint(&g, &[0, 1], &[3], 0.8).unwrap();
    let mc = mc_joint(&g, &[0, 1], &[3], 0.8, 100_000, 9);
    assert!(mc.ci_lo <= exact && exact <= mc.ci_hi, "{mc:?} vs {exact}");
}

#[test]
fn correlated_sets_small_products() {
    let uniform = Arc::new(ProbabilitySpace::uniform(2).unwrap());
    for n in 1..=3 {
        for rho in [0.0, 0.25, 0.5] {
            let inst =
                CorrelatedProductInstance::new(uniform.clone(), n, Coupling::Rho(rho)).unwrap();
            assert_eq!(exhaustive_correlated_check(&inst).unwrap().violations, 0);
        }
        for alpha in [0.25, 0.5] {
            let k = kernel_with_alpha(alpha).unwrap();
            let inst =
                CorrelatedProductInstance::new(k.space().clone(), n, Coupling::Kernel(k)).unwrap();
            assert_eq!(exhaustive_correlated_check(&inst).unwrap().violations, 0);
        }
    }
    assert_eq!(alpha_zero_counterexample().unwrap().joint, 0.0);
    let bound = correlated_set_bound(&CouplingParam::Kernel { alpha: 0.0 }, 0.1).unwrap();
    assert!(bound.value().is_none());
}

#[test]
fn pivotal_bound_anchors() {
    assert_eq!(
        pivotal_intersection_bound(1.0, 0.3).unwrap().value(),
        Some(1.0)
    );
    match pivotal_intersection_bound(0.5, 0.75).unwrap() {
        SetBound::Value { exponent, value } => {
            assert!((exponent - 3.0).abs() < 1e-15);
            assert!((value - 0.125).abs() < 1e-15);
        }
        other => panic!("{other:?}"),
    }
    assert!(pivotal_intersection_bound(0.5, 0.0)
        .unwrap()
        .value()
        .is_none());
}

#[test]
fn biased_majority_influence() {
    for p in [0.1, 0.3, 0.5] {
        let f = CubeFunction::majority(3, p).unwrap();
        assert!((f.influence(1).unwrap() - 2.0 * p * (1.0 - p)).abs() < 1e-15);
    }
    let c = CubeFunction::from_fn(4, 0.3, |_| 0.5).unwrap();
    assert!((0..4).all(|i| c.influence(i).unwrap() == 0.0));
}

fn cfg(m: usize, n: usize, k: usize, rho: f64, trials: u64) -> NicdConfig {
    NicdConfig {
        m,
        n,
        k,
        rho,
        trials,
        seed: 21,
    }
}

#[test]
fn dice_exact_and_sampled_agree() {
    let dict = |c| Protocol::DictatorCoordinate { coordinate: c };
    let cases: Vec<(NicdConfig, Vec<Protocol>)> = vec![
        (cfg(2, 3, 3, 0.5, 200_000), vec![Protocol::Plurality]),
        (
            cfg(3, 2, 2, 0.3, 200_000),
            vec![Protocol::Plurality, dict(1)],
        ),
        (
            cfg(3, 4, 4, 0.7, 200_000),
            vec![Protocol::Plurality, dict(0), dict(3), Protocol::Plurality],
        ),
    ];
    for (c, p) in cases {
        let exact = agreement_exact(&c, &p).unwrap();
        let mc = agreement_mc(&c, &p).unwrap();
        assert!(
            mc.ci_lo <= exact && exact <= mc.ci_hi,
            "{c:?}: {exact} {mc:?}"
        );
        assert!(holder_bound(&c, &p).unwrap() >= exact - 1e-12);
    }
}

#[test]
fn independent_players() {
    for (m, k) in [(2, 2), (3, 3), (4, 2)] {
        let v = agreement_exact(&cfg(m, 3, k, 0.0, 1), &[Protocol::Plurality]).unwrap();
        assert!((v - (m as f64).powi(1 - k as i32)).abs() < 1e-14);
    }
    let mc = agreement_mc(&cfg(3, 5, 3, 0.0, 100_000), &[Protocol::Plurality]).unwrap();
    assert!(mc.ci_lo <= 1.0 / 9.0 && 1.0 / 9.0 <= mc.ci_hi);
}

#[test]
fn agreement_grows_with_correlation() {
    let mut last = 0.0;
    for rho in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let v = agreement_exact(&cfg(3, 4, 3, rho, 1), &[Protocol::Plurality]).unwrap();
        assert!(v >= last - 1e-15);
        last = v;
    }
}

#[test]
fn noise_operator_is_the_tensor_heat_flow() {
    let (m, n, rho) = (3, 3, 0.4);
    let f: Vec<f64> = (0..27).map(|i| ((i * 7) % 5) as f64).collect();
    let mut a = f.clone();
    noise_operator(&mut a, m, n, rho);
    let g = hypercube_m(m, n);
    let b = g.heat(-rho.ln(), &f).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

fn hypercube_m(m: usize, n: usize) -> TensorGenerator {
    let factor = Arc::new(Generator::simple(Arc::new(
        ProbabilitySpace::uniform(m).unwrap(),
    )));
    TensorGenerator::power(factor, n, 1.0).unwrap()
}

#[test]
fn power_bound_on_half_cube() {
    let (m, n, rho) = (2, 6, 0.25);
    let f: Vec<f64> = (0..64).map(|x| (x < 32) as u8 as f64).collect();
    let ks: Vec<u32> = (2..=64).collect();
    let r = power_bound_check(&f, m, n, rho, &ks).unwrap();
    for w in r.rows.windows(2) {
        assert!(w[1].lhs < w[0].lhs);
    }
    let scaled: Vec<f64> = r
        .rows
        .iter()
        .map(|row| (row.k as f64).powf(r.beta) * row.lhs)
        .collect();
    assert!(scaled
        .iter()
        .all(|v| v.is_finite() && *v <= 2.0 * scaled[0]));
    let zero = power_bound_check(&vec![0.0; 64], m, n, rho, &ks).unwrap();
    assert!(zero.rows.iter().all(|row| row.lhs == 0.0));
    assert!(power_bound_check(&vec![1.0; 64], m, n, rho, &ks).is_err());
}

#[test]
fn plurality_distills_correlation() {
    let s = plurality_lower_sweep(2, 0.9, &[2], 1001, 4000, 5).unwrap();
    assert!(s.rows[0].ci_lo > 0.75, "{:?}", s.rows);
}

#[test]
fn unbalanced_tables_are_rejected() {
    let p = Protocol::Table {
        table: vec![0, 0, 0, 1],
    };
    assert!(matches!(
        check_balance(&p, 2, 2),
        Err(revhyp::Error::Unbalanced(_))
    ));
    let k = MarkovKernel::new(
        Arc::new(ProbabilitySpace::uniform(2).unwrap()),
        nalgebra::DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
    )
    .unwrap();
    assert_eq!(revhyp::semigroup::kernel_alpha(&k).alpha, 1.0);
}
