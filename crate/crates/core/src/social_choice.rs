//! Boolean functions on the biased cube and the three-alternative paradox machinery.
//!
//! Truth tables are indexed by integers whose bit `i` (least significant
//! first) is coordinate `i + 1`; a set bit means `+1`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Result};
use crate::mixing::{correlated_set_bound, CouplingParam, McEstimate, SetBound};
use crate::numeric::ksum;
use crate::rng::substream;

/// Largest number of voters for truth-table evaluation.
pub const MAX_VOTERS: usize = 20;

#[derive(Debug, Clone)]
pub struct CubeFunction {
    n: usize,
    bias: f64,
    table: Vec<f64>,
    fourier: OnceLock<Vec<f64>>,
}

impl CubeFunction {
    pub fn new(n: usize, bias: f64, table: Vec<f64>) -> Result<Self> {
        if n > MAX_VOTERS {
            return param(format!("at most {MAX_VOTERS} coordinates are supported"));
        }
        if !(bias > 0.0 && bias < 1.0) {
            return domain(format!("bias must lie in (0, 1), got {bias}"));
        }
        if table.len() != 1 << n {
            return domain(format!(
                "truth table needs {} entries, got {}",
                1usize << n,
                table.len()
            ));
        }
        if let Some(v) = table.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return domain(format!("value {v} outside [-1, 1]"));
        }
        Ok(Self {
            n,
            bias,
            table,
            fourier: OnceLock::new(),
        })
    }

    /// Tabulates `f` on `{−1, 1}^n`.
    pub fn from_fn(n: usize, bias: f64, f: impl Fn(&[i8]) -> f64) -> Result<Self> {
        let table = (0..1usize << n).map(|x| f(&point(n, x))).collect();
        Self::new(n, bias, table)
    }

    pub fn dictator(n: usize, bias: f64, i: usize) -> Result<Self> {
        if i >= n {
            return param("dictator coordinate out of range");
        }
        Self::from_fn(n, bias, |x| x[i] as f64)
    }

    pub fn majority(n: usize, bias: f64) -> Result<Self> {
        if n % 2 == 0 {
            return param("majority needs an odd number of voters");
        }
        Self::from_fn(n, bias, |x| {
            if x.iter().map(|v| *v as i32).sum::<i32>() > 0 {
                1.0
            } else {
                -1.0
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn with_bias(&self, bias: f64) -> Result<Self> {
        Self::new(self.n, bias, self.table.clone())
    }

    pub fn is_boolean(&self) -> bool {
        self.table.iter().all(|v| *v == 1.0 || *v == -1.0)
    }

    fn weight(&self, x: usize) -> f64 {
        let ones = x.count_ones() as i32;
        self.bias.powi(ones) * (1.0 - self.bias).powi(self.n as i32 - ones)
    }

    pub fn expect(&self, g: impl Fn(usize, f64) -> f64) -> f64 {
        ksum((0..self.table.len()).map(|x| self.weight(x) * g(x, self.table[x])))
    }

    /// Coefficients over the orthonormal product basis, indexed by subset bitmask.
    pub fn fourier(&self) -> &[f64] {
        self.fourier.get_or_init(|| {
            let p = self.bias;
            let up = ((1.0 - p) / p).sqrt();
            let down = -(p / (1.0 - p)).sqrt();
            let mut c = self.table.clone();
            for i in 0..self.n {
                let bit = 1 << i;
                for x in 0..c.len() {
                    if x & bit == 0 {
                        let (g0, g1) = (c[x], c[x | bit]);
                        c[x] = p * g1 + (1.0 - p) * g0;
                        c[x | bit] = p * g1 * up + (1.0 - p) * g0 * down;
                    }
                }
            }
            c
        })
    }

    /// Probability under the biased measure that flipping coordinate `i` changes `f`.
    pub fn influence(&self, i: usize) -> Result<f64> {
        self.check_coord(i)?;
        let bit = 1 << i;
        Ok(self.expect(|x, v| (v != self.table[x ^ bit]) as u8 as f64))
    }

    pub fn variance_influence(&self, i: usize) -> Result<f64> {
        self.low_degree_influence(i, self.n)
    }

    pub fn low_degree_influence(&self, i: usize, d: usize) -> Result<f64> {
        self.check_coord(i)?;
        let f = self.fourier();
        Ok(ksum(
            (0..f.len())
                .filter(|s| s >> i & 1 == 1 && s.count_ones() as usize <= d)
                .map(|s| f[s] * f[s]),
        ))
    }

    /// `|Σ f̂(S)² − 𝔼 f²|`.
    pub fn parseval_residual(&self) -> f64 {
        let lhs = ksum(self.fourier().iter().map(|c| c * c));
        (lhs - self.expect(|_, v| v * v)).abs()
    }

    /// Checks `I_i ≤ Inf_i ≤ I_i / (4p(1−p))` for a ±1-valued function.
    pub fn influence_sandwich(&self, i: usize) -> Result<InfluenceSandwich> {
        let inf = self.influence(i)?;
        let var = self.variance_influence(i)?;
        let scale = 4.0 * self.bias * (1.0 - self.bias);
        let tol = 1e-12;
        Ok(InfluenceSandwich {
            influence: inf,
            variance_influence: var,
            holds: !self.is_boolean() || (var <= inf + tol && inf <= var / scale + tol),
        })
    }

    fn check_coord(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return domain(format!("coordinate {i} out of range for n = {}", self.n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfluenceSandwich {
    pub influence: f64,
    pub variance_influence: f64,
    pub holds: bool,
}

/// Coordinates of point `x` as ±1.
pub fn point(n: usize, x: usize) -> Vec<i8> {
    (0..n)
        .map(|i| if x >> i & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// The six rankings of `a, b, c`, best first.
pub const RANKINGS: [&str; 6] = ["abc", "acb", "bac", "bca", "cab", "cba"];

/// `(x^{a>b}, x^{b>c}, x^{c>a})` for each ranking, in `RANKINGS` order.
const PATTERNS: [[i8; 3]; 6] = [
    [1, 1, -1],
    [1, -1, -1],
    [-1, 1, -1],
    [-1, 1, 1],
    [1, -1, 1],
    [-1, -1, 1],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairwise {
    AB,
    BC,
    CA,
}

impl Pairwise {
    fn slot(self) -> usize {
        match self {
            Pairwise::AB => 0,
            Pairwise::BC => 1,
            Pairwise::CA => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDistribution {
    pub k: usize,
    pub probs: BTreeMap<String, f64>,
}

impl RankingDistribution {
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self> {
        for key in probs.keys() {
            if !RANKINGS.contains(&key.as_str()) {
                return domain(format!("unknown ranking {key:?}"));
            }
        }
        for r in RANKINGS {
            match probs.get(r) {
                Some(v) if *v > 0.0 && v.is_finite() => {}
                _ => return domain(format!("ranking {r} needs a positive probability")),
            }
        }
        let total = ksum(probs.values().copied());
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("ranking probabilities sum to {total}"));
        }
        Ok(Self { k: 3, probs })
    }

    pub fn uniform() -> Self {
        Self {
            k: 3,
            probs: RANKINGS
                .iter()
                .map(|r| (r.to_string(), 1.0 / 6.0))
                .collect(),
        }
    }

    /// Probabilities in `RANKINGS` order.
    pub fn table(&self) -> [f64; 6] {
        let mut t = [0.0; 6];
        for (i, r) in RANKINGS.iter().enumerate() {
            t[i] = self.probs[*r];
        }
        t
    }

    /// Smallest atom of the law of `(x^{a>b}, x^{b>c}, x^{c>a})` over the six
    /// realizable patterns (the two cyclic patterns never occur).
    pub fn alpha(&self) -> f64 {
        self.table().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Joint law of two pairwise comparisons of one voter; index 0 is `−1`, 1 is `+1`.
    pub fn pair_law(&self, first: Pairwise, second: Pairwise) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2, 2);
        for (pat, p) in PATTERNS.iter().zip(self.table()) {
            let u = (pat[first.slot()] == 1) as usize;
            let v = (pat[second.slot()] == 1) as usize;
            m[(u, v)] += p;
        }
        m
    }

    pub fn correlation(&self, first: Pairwise, second: Pairwise) -> f64 {
        let m = self.pair_law(first, second);
        let s = |u: usize| if u == 1 { 1.0 } else { -1.0 };
        let mut exy = 0.0;
        let mut ex = 0.0;
        let mut ey = 0.0;
        for u in 0..2 {
            for v in 0..2 {
                exy += m[(u, v)] * s(u) * s(v);
                ex += m[(u, v)] * s(u);
                ey += m[(u, v)] * s(v);
            }
        }
        (exy - ex * ey) / ((1.0 - ex * ex) * (1.0 - ey * ey)).sqrt()
    }

    /// Probability that a voter ranks the first alternative of `pair` higher.
    pub fn plus_probability(&self, pair: Pairwise) -> f64 {
        PATTERNS
            .iter()
            .zip(self.table())
            .filter(|(pat, _)| pat[pair.slot()] == 1)
            .map(|(_, p)| p)
            .sum()
    }
}

/// `𝔼[f(X) g(Y)]` with `(X_i, Y_i)` i.i.d. from the 2×2 law `law`.
pub fn coupled_expectation(f: &CubeFunction, g: &CubeFunction, law: &DMatrix<f64>) -> Result<f64> {
    if f.n() != g.n() {
        return domain("functions have different numbers of voters");
    }
    let n = f.n();
    if n > 10 {
        return param("exact coupled expectations are limited to n <= 10");
    }
    let size = 1usize << n;
    let (ft, gt) = (f.table(), g.table());
    let terms: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|x| {
            let mut acc = Vec::with_capacity(size);
            for y in 0..size {
                let mut w = 1.0;
                for i in 0..n {
                    w *= law[((x >> i) & 1, (y >> i) & 1)];
                }
                acc.push(w * ft[x] * gt[y]);
            }
            ksum(acc)
        })
        .collect();
    Ok(ksum(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParadoxProbability {
    pub value: f64,
    /// Present for Monte Carlo estimates.
    pub mc: Option<McEstimate>,
}

/// Paradox probability `¼(1 + 𝔼f₁f₂ + 𝔼f₂f₃ + 𝔼f₃f₁)` for aggregators of
/// `x^{a>b}`, `x^{b>c}`, `x^{c>a}`.
pub fn paradox_probability(
    f1: &CubeFunction,
    f2: &CubeFunction,
    f3: &CubeFunction,
    law: &RankingDistribution,
) -> Result<ParadoxProbability> {
    if law.k != 3 {
        return Err(crate::Error::Unsupported(
            "only three alternatives are supported".into(),
        ));
    }
    let e12 = coupled_expectation(f1, f2, &law.pair_law(Pairwise::AB, Pairwise::BC))?;
    let e23 = coupled_expectation(f2, f3, &law.pair_law(Pairwise::BC, Pairwise::CA))?;
    let e31 = coupled_expectation(f3, f1, &law.pair_law(Pairwise::CA, Pairwise::AB))?;
    Ok(ParadoxProbability {
        value: 0.25 * (1.0 + e12 + e23 + e31),
        mc: None,
    })
}

/// Probability of a non-transitive outcome by enumerating all `6^n` profiles.
pub fn paradox_by_profiles(
    f1: &CubeFunction,
    f2: &CubeFunction,
    f3: &CubeFunction,
    law: &RankingDistribution,
) -> Result<f64> {
    let n = f1.n();
    if f2.n() != n || f3.n() != n {
        return domain("functions have different numbers of voters");
    }
    if n > 8 {
        return param("profile enumeration is limited to n <= 8");
    }
    let probs = law.table();
    let total = 6usize.pow(n as u32);
    let mut acc = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for voter in 0..n {
            let r = c % 6;
            c /= 6;
            w *= probs[r];
            for k in 0..3 {
                if PATTERNS[r][k] == 1 {
                    idx[k] |= 1 << voter;
                }
            }
        }
        let o = [f1.table()[idx[0]], f2.table()[idx[1]], f3.table()[idx[2]]];
        if o[0] == o[1] && o[1] == o[2] {
            acc.push(w);
        }
    }
    Ok(ksum(acc))
}

/// Monte Carlo paradox probability for ±1 aggregators.
pub fn paradox_mc(
    f1: &CubeFunction,
    f2: &CubeFunction,
    f3: &CubeFunction,
    law: &RankingDistribution,
    trials: u64,
    seed: u64,
) -> Result<ParadoxProbability> {
    let n = f1.n();
    if f2.n() != n || f3.n() != n {
        return domain("functions have different numbers of voters");
    }
    let mut cum = [0.0; 6];
    let mut acc = 0.0;
    for (i, p) in law.table().iter().enumerate() {
        acc += p;
        cum[i] = acc;
    }
    const BATCH: u64 = 4096;
    let hits: u64 = (0..trials.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let mut h = 0;
            for _ in 0..BATCH.min(trials - b * BATCH) {
                let mut idx = [0usize; 3];
                for voter in 0..n {
                    let u = rng.random::<f64>() * acc;
                    let r = cum.partition_point(|c| *c <= u).min(5);
                    for k in 0..3 {
                        if PATTERNS[r][k] == 1 {
                            idx[k] |= 1 << voter;
                        }
                    }
                }
                let o = [f1.table()[idx[0]], f2.table()[idx[1]], f3.table()[idx[2]]];
                if o[0] == o[1] && o[1] == o[2] {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let mc = McEstimate::from_counts(hits, trials);
    Ok(ParadoxProbability {
        value: mc.estimate,
        mc: Some(mc),
    })
}

/// `ε^{(2−√(1−α))/(1−√(1−α))}`, or no bound when `α = 0`.
pub fn pivotal_intersection_bound(eps: f64, alpha: f64) -> Result<SetBound> {
    if !(eps > 0.0 && eps <= 1.0) {
        return domain("eps must lie in (0, 1]");
    }
    correlated_set_bound(&CouplingParam::Kernel { alpha }, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PivotalCheck {
    /// `ℙ{i pivotal for f^{a>b}}`.
    pub p_a: f64,
    /// `ℙ{j pivotal for f^{b>c}}`.
    pub p_b: f64,
    pub joint: f64,
    pub eps: f64,
    pub bound: f64,
    pub alpha: f64,
    pub holds: bool,
}

/// Exact `ℙ{A ∩ B}` for the pivotal events of voter `i` in `f^{a>b}` and voter
/// `j` in `f^{b>c}`, compared with the bound at `ε = min(ℙA, ℙB)`.
pub fn pivotal_intersection_exact(
    f_ab: &CubeFunction,
    f_bc: &CubeFunction,
    law: &RankingDistribution,
    i: usize,
    j: usize,
) -> Result<PivotalCheck> {
    let n = f_ab.n();
    if f_bc.n() != n {
        return domain("functions have different numbers of voters");
    }
    if n > 8 {
        return param("the exact pivotal check is limited to n <= 8");
    }
    if i >= n || j >= n {
        return domain("voter index out of range");
    }
    let pivotal = |f: &CubeFunction, k: usize| -> CubeFunction {
        let t = (0..1usize << n)
            .map(|x| (f.table()[x] != f.table()[x ^ (1 << k)]) as u8 as f64)
            .collect();
        CubeFunction::new(n, 0.5, t).expect("indicator table is valid")
    };
    let a = pivotal(f_ab, i);
    let b = pivotal(f_bc, j);
    let law_ab_bc = law.pair_law(Pairwise::AB, Pairwise::BC);
    let joint = coupled_expectation(&a, &b, &law_ab_bc)?;
    let p_a = a
        .with_bias(law.plus_probability(Pairwise::AB))?
        .expect(|_, v| v);
    let p_b = b
        .with_bias(law.plus_probability(Pairwise::BC))?
        .expect(|_, v| v);
    let alpha = law.alpha();
    let eps = p_a.min(p_b);
    let bound = if eps > 0.0 {
        pivotal_intersection_bound(eps, alpha)?
            .value()
            .unwrap_or(0.0)
    } else {
        0.0
    };
    Ok(PivotalCheck {
        p_a,
        p_b,
        joint,
        eps,
        bound,
        alpha,
        holds: joint >= bound - 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaValue {
    pub log_delta: f64,
    pub delta: f64,
}

/// `δ = exp(−C α^{−7} 2^{α^{−2}} (log(1/ε))² / ε^{2 + 1/(2α²)})`, evaluated in log space.
pub fn delta_for_epsilon(eps: f64, alpha: f64, c: f64) -> Result<DeltaValue> {
    if !(eps > 0.0 && eps <= 1.0) || !(alpha > 0.0 && alpha < 1.0) || !(c > 0.0) {
        return domain("need eps in (0, 1), alpha in (0, 1) and C > 0");
    }
    let l = (1.0 / eps).ln();
    if l == 0.0 {
        return Ok(DeltaValue {
            log_delta: 0.0,
            delta: 1.0,
        });
    }
    let log_mag =
        c.ln() - 7.0 * alpha.ln() + std::f64::consts::LN_2 / (alpha * alpha) + 2.0 * l.ln()
            - (2.0 + 1.0 / (2.0 * alpha * alpha)) * eps.ln();
    let log_delta = -log_mag.exp();
    Ok(DeltaValue {
        log_delta,
        delta: log_delta.exp(),
    })
}
