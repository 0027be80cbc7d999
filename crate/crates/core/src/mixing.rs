//! Two-set mixing bounds and correlated product-set bounds.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::chains::GeneratorSampler;
use crate::error::{domain, param, Result};
use crate::measure::ProbabilitySpace;
use crate::numeric::{ksum, wilson_interval, Z99};
use crate::rng::{substream, Rng};
use crate::semigroup::{kernel_alpha, Generator, KernelAlpha, MarkovKernel, Semigroup};

/// Lower bound on `ℙ(X_0 ∈ A, X_t ∈ B)` from a 1-logSob constant `c`:
/// `exp(−½(a² + 2e^{−2t/c}ab + b²)/(1 − e^{−4t/c}))`.
pub fn two_set_bound(c: f64, a: f64, b: f64, t: f64) -> Result<f64> {
    if !(c > 0.0) || !(a >= 0.0) || !(b >= 0.0) || !(t >= 0.0) {
        return domain("need C > 0, a, b >= 0 and t >= 0");
    }
    if t == 0.0 {
        return Ok(if a == 0.0 && b == 0.0 { 1.0 } else { 0.0 });
    }
    let e2 = (-2.0 * t / c).exp();
    let d = -(-4.0 * t / c).exp_m1();
    Ok((-0.5 * (a * a + 2.0 * e2 * a * b + b * b) / d).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalBounds {
    pub expander: f64,
    pub mixing_time: f64,
}

/// Spectral-gap (`D` = relaxation time) and total-variation (`ε`) lower bounds.
pub fn classical_bounds(d: f64, eps: f64, pi_a: f64, pi_b: f64, t: f64) -> ClassicalBounds {
    let prod = pi_a * pi_b;
    ClassicalBounds {
        expander: (prod - prod.sqrt() * (-t / d).exp()).max(0.0),
        mixing_time: (pi_a * (pi_b - eps)).max(0.0),
    }
}

/// Sharper bound for product walks at per-coordinate time `τ`.
pub fn product_improved_bound(tau: f64, a: f64, b: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return domain("tau must be positive");
    }
    let e = (-tau).exp();
    let num = (2.0 - e) * (a * a + b * b) + 2.0 * (-tau / 2.0).exp() * a * b;
    Ok((-num / (4.0 * -(-tau).exp_m1())).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSetInstance {
    pub a_set: Vec<usize>,
    pub b_set: Vec<usize>,
    pub t: f64,
    pub pi_a: f64,
    pub pi_b: f64,
    pub a: f64,
    pub b: f64,
}

impl TwoSetInstance {
    /// Sets are sorted and deduplicated; `a`, `b` are derived from their measures.
    pub fn new(mu: &[f64], mut a_set: Vec<usize>, mut b_set: Vec<usize>, t: f64) -> Result<Self> {
        for s in [&mut a_set, &mut b_set] {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return domain("sets must be nonempty");
            }
            if s.last().is_some_and(|&i| i >= mu.len()) {
                return domain("set index outside the space");
            }
        }
        if !(t >= 0.0) {
            return domain("time must be nonnegative");
        }
        let pi_a = ksum(a_set.iter().map(|&i| mu[i])).min(1.0);
        let pi_b = ksum(b_set.iter().map(|&i| mu[i])).min(1.0);
        Ok(Self {
            a: (-2.0 * pi_a.ln()).max(0.0).sqrt(),
            b: (-2.0 * pi_b.ln()).max(0.0).sqrt(),
            a_set,
            b_set,
            t,
            pi_a,
            pi_b,
        })
    }

    pub fn bound(&self, c: f64) -> Result<f64> {
        two_set_bound(c, self.a, self.b, self.t)
    }
}

fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &i in set {
        v[i] = 1.0;
    }
    v
}

/// `𝔼[1_A T_t 1_B] = ℙ(X_0 ∈ A, X_t ∈ B)` under stationarity.
pub fn exact_joint<S: Semigroup + ?Sized>(
    sg: &S,
    a_set: &[usize],
    b_set: &[usize],
    t: f64,
) -> Result<f64> {
    let n = sg.len();
    if a_set.iter().chain(b_set).any(|&i| i >= n) {
        return domain("set index outside the space");
    }
    let tb = sg.heat(t, &indicator(n, b_set))?;
    let mu = sg.mu();
    Ok(ksum(a_set.iter().map(|&x| mu[x] * tb[x])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(hits, trials, Z99);
        Self {
            hits,
            trials,
            estimate: if trials > 0 {
                hits as f64 / trials as f64
            } else {
                0.0
            },
            ci_lo,
            ci_hi,
        }
    }

    /// Flags a violation only when the whole interval sits below `bound`.
    pub fn below(&self, bound: f64) -> bool {
        self.ci_hi < bound
    }
}

const BATCH: u64 = 4096;

/// Monte Carlo `ℙ(X_0 ∈ A, X_t ∈ B)` by simulating the jump chain from stationarity.
pub fn mc_joint(
    g: &Generator,
    a_set: &[usize],
    b_set: &[usize],
    t: f64,
    trials: u64,
    seed: u64,
) -> McEstimate {
    let sampler = GeneratorSampler::new(g);
    let n = g.len();
    let in_a = indicator(n, a_set);
    let in_b = indicator(n, b_set);
    let batches = trials.div_ceil(BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k);
            let count = BATCH.min(trials - k * BATCH);
            let mut h = 0;
            for _ in 0..count {
                let x = sampler.sample_stationary(&mut rng);
                if in_a[x] == 0.0 {
                    continue;
                }
                let y = sampler.advance(x, t, &mut rng);
                if in_b[y] == 1.0 {
                    h += 1;
                }
            }
            h
        })
        .sum();
    McEstimate::from_counts(hits, trials)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub bound: f64,
    pub exact: f64,
    pub mc_lo: f64,
    pub mc_hi: f64,
}

/// Bound, exact value and Monte Carlo interval over a list of times.
pub fn mixing_sweep(
    g: &Generator,
    a_set: &[usize],
    b_set: &[usize],
    c: f64,
    times: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let inst = TwoSetInstance::new(g.mu(), a_set.to_vec(), b_set.to_vec(), t)?;
            let mc = mc_joint(g, a_set, b_set, t, trials, seed.wrapping_add(i as u64));
            Ok(SweepRow {
                t,
                bound: inst.bound(c)?,
                exact: exact_joint(g, a_set, b_set, t)?,
                mc_lo: mc.ci_lo,
                mc_hi: mc.ci_hi,
            })
        })
        .collect()
}

/// Parameters that determine a correlated-set exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CouplingParam {
    /// Coordinates copied with probability `ρ`, refreshed otherwise.
    Rho { rho: f64 },
    /// Kernel coupling with minimal atom `α`.
    Kernel { alpha: f64 },
    /// Improved exponent `2/(1−ρ) + κ(1−ρ)` with a user-supplied `κ`.
    Improved { rho: f64, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SetBound {
    Value { value: f64, exponent: f64 },
    NoBound { reason: String },
}

impl SetBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            SetBound::Value { value, .. } => Some(*value),
            SetBound::NoBound { .. } => None,
        }
    }
}

/// `(2 − √ρ)/(1 − √ρ)`.
pub fn rho_exponent(rho: f64) -> f64 {
    let s = rho.sqrt();
    (2.0 - s) / (1.0 - s)
}

pub fn coupling_exponent(c: &CouplingParam) -> Result<Option<f64>> {
    match *c {
        CouplingParam::Rho { rho } => {
            if !(0.0..1.0).contains(&rho) {
                return domain("rho must lie in [0, 1)");
            }
            Ok(Some(rho_exponent(rho)))
        }
        CouplingParam::Kernel { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return domain("alpha must lie in [0, 1]");
            }
            Ok((alpha > 0.0).then(|| rho_exponent(1.0 - alpha)))
        }
        CouplingParam::Improved { rho, kappa } => {
            if !(0.0..1.0).contains(&rho) || !kappa.is_finite() {
                return domain("rho must lie in [0, 1) and kappa must be finite");
            }
            Ok(Some(2.0 / (1.0 - rho) + kappa * (1.0 - rho)))
        }
    }
}

/// Lower bound `ε^{exponent}` on `ℙ{x ∈ A, y ∈ B}` when both sets have measure at least `ε`.
pub fn correlated_set_bound(c: &CouplingParam, eps: f64) -> Result<SetBound> {
    if !(0.0..=1.0).contains(&eps) {
        return domain("eps must lie in [0, 1]");
    }
    Ok(match coupling_exponent(c)? {
        Some(e) => SetBound::Value {
            value: eps.powf(e),
            exponent: e,
        },
        None => SetBound::NoBound {
            reason: "alpha = 0 admits no bound: for K = (0 1; 1/2 1/2) on the uniform two-point \
                     space, A = B = {0} have positive measure yet P{x in A, y in B} = 0"
                .into(),
        },
    })
}

#[derive(Debug, Clone)]
pub enum Coupling {
    Rho(f64),
    Kernel(MarkovKernel),
}

#[derive(Debug, Clone)]
pub struct CorrelatedProductInstance {
    pub factor: Arc<ProbabilitySpace>,
    pub n: usize,
    pub coupling: Coupling,
    pub alpha: Option<KernelAlpha>,
}

impl CorrelatedProductInstance {
    pub fn new(factor: Arc<ProbabilitySpace>, n: usize, coupling: Coupling) -> Result<Self> {
        if n == 0 {
            return param("n must be positive");
        }
        let alpha = match &coupling {
            Coupling::Rho(r) => {
                if !(0.0..1.0).contains(r) {
                    return domain("rho must lie in [0, 1)");
                }
                None
            }
            Coupling::Kernel(k) => {
                if k.space().as_ref() != factor.as_ref() {
                    return param("kernel must act on the factor space");
                }
                Some(kernel_alpha(k))
            }
        };
        Ok(Self {
            factor,
            n,
            coupling,
            alpha,
        })
    }

    pub fn param(&self) -> CouplingParam {
        match (&self.coupling, self.alpha) {
            (Coupling::Rho(r), _) => CouplingParam::Rho { rho: *r },
            (Coupling::Kernel(_), Some(a)) => CouplingParam::Kernel { alpha: a.alpha },
            (Coupling::Kernel(_), None) => unreachable!("kernel instances store alpha"),
        }
    }

    /// Per-coordinate joint law `P(x_i = a, y_i = b)`.
    pub fn pair_law(&self) -> DMatrix<f64> {
        let mu = self.factor.mu();
        let m = mu.len();
        match &self.coupling {
            Coupling::Rho(r) => DMatrix::from_fn(m, m, |a, b| {
                mu[a] * (if a == b { *r } else { 0.0 } + (1.0 - r) * mu[b])
            }),
            Coupling::Kernel(k) => DMatrix::from_fn(m, m, |a, b| mu[a] * k.matrix()[(a, b)]),
        }
    }

    /// Marginal law of `y_i`.
    pub fn y_marginal(&self) -> Vec<f64> {
        match &self.coupling {
            Coupling::Rho(_) => self.factor.mu().to_vec(),
            Coupling::Kernel(k) => k.nu().to_vec(),
        }
    }
}

/// Streams `(x, y)` pairs from a correlated product instance.
pub struct CorrelatedSampler {
    instance: CorrelatedProductInstance,
    rng: Rng,
    cum_mu: Vec<f64>,
    cum_rows: Vec<Vec<f64>>,
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    w.map(|v| {
        acc += v;
        acc
    })
    .collect()
}

fn draw(cum: &[f64], rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * cum.last().copied().unwrap_or(1.0);
    cum.partition_point(|c| *c <= u).min(cum.len() - 1)
}

pub fn correlated_sampler(instance: CorrelatedProductInstance, seed: u64) -> CorrelatedSampler {
    let cum_mu = cumulative(instance.factor.mu().iter().copied());
    let cum_rows = match &instance.coupling {
        Coupling::Kernel(k) => (0..k.len())
            .map(|a| cumulative((0..k.len()).map(|b| k.matrix()[(a, b)])))
            .collect(),
        Coupling::Rho(_) => vec![],
    };
    CorrelatedSampler {
        instance,
        rng: substream(seed, 0),
        cum_mu,
        cum_rows,
    }
}

impl Iterator for CorrelatedSampler {
    type Item = (Vec<usize>, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.instance.n;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi = draw(&self.cum_mu, &mut self.rng);
            let yi = match &self.instance.coupling {
                Coupling::Rho(r) => {
                    if self.rng.random::<f64>() < *r {
                        xi
                    } else {
                        draw(&self.cum_mu, &mut self.rng)
                    }
                }
                Coupling::Kernel(_) => draw(&self.cum_rows[xi], &mut self.rng),
            };
            x.push(xi);
            y.push(yi);
        }
        Some((x, y))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExhaustiveReport {
    pub n: usize,
    pub exponent: Option<f64>,
    pub pairs_checked: u64,
    pub violations: u64,
    /// Smallest `ℙ{x∈A, y∈B} − min(μ(A), ν(B))^{exponent}` over all pairs.
    pub min_slack: f64,
}

/// Largest product size accepted by the exhaustive check.
pub const EXHAUSTIVE_POINTS: usize = 16;

/// Checks the correlated-set bound for every pair of subsets of `Ω^n`.
pub fn exhaustive_correlated_check(inst: &CorrelatedProductInstance) -> Result<ExhaustiveReport> {
    let m = inst.factor.len();
    let big_n = (m as u128).checked_pow(inst.n as u32).unwrap_or(u128::MAX);
    if big_n > EXHAUSTIVE_POINTS as u128 {
        return domain(format!(
            "{big_n} product points exceeds the exhaustive limit of {EXHAUSTIVE_POINTS}"
        ));
    }
    let big_n = big_n as usize;
    let exponent = coupling_exponent(&inst.param())?;
    let Some(e) = exponent else {
        return Ok(ExhaustiveReport {
            n: inst.n,
            exponent: None,
            pairs_checked: 0,
            violations: 0,
            min_slack: f64::NAN,
        });
    };
    let pair = inst.pair_law();
    let mu1 = inst.factor.mu();
    let nu1 = inst.y_marginal();
    let digits = |mut x: usize| -> Vec<usize> {
        let mut d = vec![0; inst.n];
        for k in (0..inst.n).rev() {
            d[k] = x % m;
            x /= m;
        }
        d
    };
    let pts: Vec<Vec<usize>> = (0..big_n).map(digits).collect();
    let mu: Vec<f64> = pts
        .iter()
        .map(|d| d.iter().map(|&a| mu1[a]).product())
        .collect();
    let nu: Vec<f64> = pts
        .iter()
        .map(|d| d.iter().map(|&a| nu1[a]).product())
        .collect();
    let joint: Vec<Vec<f64>> = pts
        .iter()
        .map(|dx| {
            pts.iter()
                .map(|dy| dx.iter().zip(dy).map(|(&a, &b)| pair[(a, b)]).product())
                .collect()
        })
        .collect();
    let subsets = 1usize << big_n;
    let set_measure = |w: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; subsets];
        for s in 1..subsets {
            out[s] = out[s & (s - 1)] + w[s.trailing_zeros() as usize];
        }
        out
    };
    let mu_sets = set_measure(&mu);
    let nu_pow: Vec<f64> = set_measure(&nu)
        .iter()
        .map(|v| v.min(1.0).powf(e))
        .collect();

    // row sums over A built incrementally, then a subset-sum pass over B
    let (violations, min_slack) = (0..subsets)
        .into_par_iter()
        .map(|a| {
            let mut w = vec![0.0; big_n];
            for x in 0..big_n {
                if a >> x & 1 == 1 {
                    for y in 0..big_n {
                        w[y] += joint[x][y];
                    }
                }
            }
            let ma = mu_sets[a].min(1.0).powf(e);
            let mut p = vec![0.0; subsets];
            let mut viol = 0u64;
            let mut worst = f64::INFINITY;
            let slack0 = -ma.min(nu_pow[0]);
            worst = worst.min(slack0);
            for b in 1..subsets {
                let v = p[b & (b - 1)] + w[b.trailing_zeros() as usize];
                p[b] = v;
                let slack = v - ma.min(nu_pow[b]);
                if slack < worst {
                    worst = slack;
                }
                if slack < -1e-12 {
                    viol += 1;
                }
            }
            (viol, worst)
        })
        .reduce(|| (0, f64::INFINITY), |x, y| (x.0 + y.0, x.1.min(y.1)));
    Ok(ExhaustiveReport {
        n: inst.n,
        exponent,
        pairs_checked: (subsets as u64) * (subsets as u64),
        violations,
        min_slack,
    })
}

/// Two-point kernel on the uniform space with minimal atom exactly `alpha`:
/// `(1−α) K₀ + α 1ν₀` with `K₀ = (1 0; 0.2 0.8)`.
pub fn kernel_with_alpha(alpha: f64) -> Result<MarkovKernel> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain("alpha must lie in [0, 1]");
    }
    let space = Arc::new(ProbabilitySpace::uniform(2)?);
    let k0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.2, 0.8]);
    let nu0 = [0.6, 0.4];
    let k = DMatrix::from_fn(2, 2, |x, y| (1.0 - alpha) * k0[(x, y)] + alpha * nu0[y]);
    MarkovKernel::new(space, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaZeroWitness {
    pub alpha: f64,
    pub mu_a: f64,
    pub nu_b: f64,
    pub joint: f64,
}

/// The `(0 1; ½ ½)` kernel with `A = B = {0}`: positive measures, zero joint probability.
pub fn alpha_zero_counterexample() -> Result<AlphaZeroWitness> {
    let space = Arc::new(ProbabilitySpace::uniform(2)?);
    let k = MarkovKernel::new(
        space.clone(),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.5]),
    )?;
    let alpha = kernel_alpha(&k).alpha;
    Ok(AlphaZeroWitness {
        alpha,
        mu_a: space.mu()[0],
        nu_b: k.nu()[0],
        joint: space.mu()[0] * k.matrix()[(0, 0)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_set_anchor() {
        let v = two_set_bound(4.0, 1.0, 1.0, 2.0 * 2f64.ln()).unwrap();
        assert!((v - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(two_set_bound(4.0, 1.0, 0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn improved_anchor() {
        let v = product_improved_bound(2.0 * 2f64.ln(), 1.0, 1.0).unwrap();
        assert!((v - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exponents() {
        assert_eq!(rho_exponent(0.0), 2.0);
        assert!((rho_exponent(0.25) - 3.0).abs() < 1e-15);
        let k = coupling_exponent(&CouplingParam::Kernel { alpha: 0.75 })
            .unwrap()
            .unwrap();
        assert!((k - 3.0).abs() < 1e-15);
        assert!(matches!(
            correlated_set_bound(&CouplingParam::Kernel { alpha: 0.0 }, 0.3).unwrap(),
            SetBound::NoBound { .. }
        ));
    }

    #[test]
    fn target_alpha_kernels() {
        for a in [0.25, 0.5] {
            let k = kernel_with_alpha(a).unwrap();
            assert!((kernel_alpha(&k).alpha - a).abs() < 1e-15);
        }
        let w = alpha_zero_counterexample().unwrap();
        assert_eq!((w.alpha, w.joint), (0.0, 0.0));
        assert!(w.mu_a > 0.0 && w.nu_b > 0.0);
    }
}
