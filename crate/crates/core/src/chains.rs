//! Example chains: explicit generators for small instances and a
//! continuous-time trajectory sampler that works at any size.
//!
//! Rate conventions (total jump rate 1 unless noted):
//! - random transposition: each of the `n(n−1)/2` transpositions at rate `1/C(n,2)`;
//! - top-to-random: each transposition `(1, j)` at rate `1/(n−1)`;
//! - Bernoulli–Laplace: each in/out swap at rate `1/(r(n−r))`;
//! - spanning-tree walk: each valid exchange `T ∪ {e} ∖ {f}` at rate `1/(|E|(|V|−1))`;
//! - product walk: each coordinate refreshed from its marginal at rate `1/n`;
//! - Glauber: flip rate `c(u, σ)` per site (Metropolis or heat-bath);
//! - queue: birth `λ` below the truncation, death `k` in state `k`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::measure::ProbabilitySpace;
use crate::rng::{substream, Rng};
use crate::semigroup::{Generator, TensorGenerator, MATERIALIZE_CAP};

pub type State = Vec<i32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Free,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateFamily {
    Metropolis,
    HeatBath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChainSpec {
    Simple {
        mu: Vec<f64>,
    },
    ProductWalk {
        m: usize,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<Vec<f64>>,
    },
    RandomTransposition {
        n: usize,
    },
    TopToRandom {
        n: usize,
    },
    BernoulliLaplace {
        n: usize,
        r: usize,
    },
    SpanningTreeWalk {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    GlauberIsing {
        width: usize,
        height: usize,
        beta: f64,
        h: f64,
        boundary: Boundary,
        rates: RateFamily,
    },
    QqInfinityTruncated {
        lambda: f64,
        truncation: usize,
    },
}

/// Jump description shared by the builder and the sampler.
pub trait Dynamics: Send + Sync {
    fn initial(&self) -> State;
    /// Unnormalized log stationary weight.
    fn log_weight(&self, s: &[i32]) -> f64;
    /// Appends `(target, rate, tag)`; targets equal to `s` are self-loops.
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>);
    /// Number of states, when it fits in `u128`.
    fn state_count(&self) -> Option<u128>;
    fn enumerate(&self) -> Vec<State>;
    fn label(&self, s: &[i32]) -> String {
        s.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl ChainSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ChainSpec::Simple { .. } => "simple",
            ChainSpec::ProductWalk { .. } => "product-walk",
            ChainSpec::RandomTransposition { .. } => "random-transposition",
            ChainSpec::TopToRandom { .. } => "top-to-random",
            ChainSpec::BernoulliLaplace { .. } => "bernoulli-laplace",
            ChainSpec::SpanningTreeWalk { .. } => "spanning-tree-walk",
            ChainSpec::GlauberIsing { .. } => "glauber-ising",
            ChainSpec::QqInfinityTruncated { .. } => "qq-infinity-truncated",
        }
    }

    pub fn dynamics(&self) -> Result<Box<dyn Dynamics>> {
        Ok(match self {
            ChainSpec::Simple { mu } => {
                let space = ProbabilitySpace::from_weights(mu)?;
                Box::new(SimpleDyn {
                    mu: space.mu().to_vec(),
                })
            }
            ChainSpec::ProductWalk { m, n, mu } => {
                if *m < 2 || *n < 1 {
                    return param("product walk needs m >= 2 and n >= 1");
                }
                let w = match mu {
                    Some(w) if w.len() == *m => ProbabilitySpace::from_weights(w)?.mu().to_vec(),
                    Some(_) => return param("factor measure must have m entries"),
                    None => vec![1.0 / *m as f64; *m],
                };
                Box::new(ProductDyn { mu: w, n: *n })
            }
            ChainSpec::RandomTransposition { n } => {
                if *n < 2 {
                    return param("permutation chains need n >= 2");
                }
                let moves = (0..*n)
                    .flat_map(|i| (i + 1..*n).map(move |j| (i, j)))
                    .collect::<Vec<_>>();
                let rate = 1.0 / moves.len() as f64;
                Box::new(PermDyn { n: *n, moves, rate })
            }
            ChainSpec::TopToRandom { n } => {
                if *n < 2 {
                    return param("permutation chains need n >= 2");
                }
                let moves = (1..*n).map(|j| (0, j)).collect::<Vec<_>>();
                let rate = 1.0 / (*n - 1) as f64;
                Box::new(PermDyn { n: *n, moves, rate })
            }
            ChainSpec::BernoulliLaplace { n, r } => {
                if *r == 0 || *r >= *n {
                    return param("Bernoulli-Laplace needs 0 < r < n");
                }
                Box::new(BernoulliLaplaceDyn { n: *n, r: *r })
            }
            ChainSpec::SpanningTreeWalk { vertices, edges } => {
                Box::new(SpanningTreeDyn::new(*vertices, edges.clone())?)
            }
            ChainSpec::GlauberIsing {
                width,
                height,
                beta,
                h,
                boundary,
                rates,
            } => {
                if *width == 0 || *height == 0 || width * height > 62 {
                    return param("Ising box must have between 1 and 62 sites");
                }
                if !beta.is_finite() || !h.is_finite() {
                    return param("beta and h must be finite");
                }
                Box::new(IsingDyn {
                    w: *width,
                    h: *height,
                    beta: *beta,
                    field: *h,
                    boundary: *boundary,
                    rates: *rates,
                })
            }
            ChainSpec::QqInfinityTruncated { lambda, truncation } => {
                if !(*lambda > 0.0) || !lambda.is_finite() || *truncation < 1 {
                    return param("queue needs lambda > 0 and truncation >= 1");
                }
                Box::new(QueueDyn {
                    lambda: *lambda,
                    cap: *truncation,
                })
            }
        })
    }
}

/// Explicit generator, refused above the state cap.
pub fn build(spec: &ChainSpec) -> Result<Generator> {
    let dynamics = spec.dynamics()?;
    let count = dynamics.state_count();
    match count {
        Some(c) if c <= MATERIALIZE_CAP as u128 => {}
        _ => {
            return Err(Error::TooLarge {
                states: count
                    .map(|c| c.min(usize::MAX as u128) as usize)
                    .unwrap_or(usize::MAX),
                cap: MATERIALIZE_CAP,
            })
        }
    }
    let states = dynamics.enumerate();
    let index: HashMap<&[i32], usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let labels = states.iter().map(|s| dynamics.label(s)).collect();
    let logw: Vec<f64> = states.iter().map(|s| dynamics.log_weight(s)).collect();
    let space = Arc::new(ProbabilitySpace::from_log_weights(labels, &logw)?);
    let mut rates = Vec::new();
    let mut buf = Vec::new();
    for (x, s) in states.iter().enumerate() {
        buf.clear();
        dynamics.transitions(s, &mut buf);
        for (t, r, _) in &buf {
            if t == s {
                continue;
            }
            let y = *index.get(t.as_slice()).ok_or_else(|| {
                Error::Parameter(format!("transition leaves the state space: {t:?}"))
            })?;
            rates.push((x, y, *r));
        }
    }
    Generator::from_rates(space, &rates)
}

/// Product walk as a lazy tensor generator (any size).
pub fn build_tensor(spec: &ChainSpec) -> Result<TensorGenerator> {
    match spec {
        ChainSpec::ProductWalk { m, n, mu } => {
            let space = match mu {
                Some(w) => ProbabilitySpace::from_weights(w)?,
                None => ProbabilitySpace::uniform(*m)?,
            };
            if space.len() != *m {
                return param("factor measure must have m entries");
            }
            let factor = Arc::new(Generator::simple(Arc::new(space)));
            TensorGenerator::power(factor, *n, 1.0 / *n as f64)
        }
        other => Err(Error::Unsupported(format!(
            "{} has no tensor form",
            other.kind()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownBounds {
    pub p: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub note: &'static str,
}

/// Literature bounds on the optimal log-Sobolev constant, in this crate's rate convention.
pub fn known_constant_bounds(spec: &ChainSpec) -> Option<KnownBounds> {
    match spec {
        ChainSpec::RandomTransposition { n } | ChainSpec::TopToRandom { n } => {
            let n = *n as f64;
            Some(KnownBounds {
                p: 1.0,
                lower: Some((n - 1.0) / 2.0),
                upper: Some(2.0 * (n - 1.0)),
                note: "(n-1)/2 <= C <= 2(n-1)",
            })
        }
        ChainSpec::BernoulliLaplace { n, r } => {
            let (n, r) = (*n as f64, *r as f64);
            Some(KnownBounds {
                p: 1.0,
                lower: Some(r * (n - r) / (2.0 * n)),
                upper: Some(2.0 * r * (n - r) / n),
                note: "r(n-r)/(2n) <= C <= 2r(n-r)/n",
            })
        }
        ChainSpec::SpanningTreeWalk { vertices, edges } => Some(KnownBounds {
            p: 2.0,
            lower: None,
            upper: Some((*vertices * edges.len()) as f64),
            note: "C <= |V||E|",
        }),
        ChainSpec::GlauberIsing { .. } => Some(KnownBounds {
            p: 2.0,
            lower: None,
            upper: None,
            note: "a uniform bound exists at high temperature; value unspecified",
        }),
        _ => None,
    }
}

struct SimpleDyn {
    mu: Vec<f64>,
}

impl Dynamics for SimpleDyn {
    fn initial(&self) -> State {
        vec![0]
    }
    fn log_weight(&self, s: &[i32]) -> f64 {
        self.mu[s[0] as usize].ln()
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        let _ = s;
        for (j, m) in self.mu.iter().enumerate() {
            out.push((vec![j as i32], *m, 0));
        }
    }
    fn state_count(&self) -> Option<u128> {
        Some(self.mu.len() as u128)
    }
    fn enumerate(&self) -> Vec<State> {
        (0..self.mu.len() as i32).map(|i| vec![i]).collect()
    }
}

struct ProductDyn {
    mu: Vec<f64>,
    n: usize,
}

impl Dynamics for ProductDyn {
    fn initial(&self) -> State {
        vec![0; self.n]
    }
    fn log_weight(&self, s: &[i32]) -> f64 {
        s.iter().map(|v| self.mu[*v as usize].ln()).sum()
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        let nf = self.n as f64;
        for i in 0..self.n {
            for (v, m) in self.mu.iter().enumerate() {
                let mut t = s.to_vec();
                t[i] = v as i32;
                out.push((t, m / nf, i as u32));
            }
        }
    }
    fn state_count(&self) -> Option<u128> {
        (self.mu.len() as u128).checked_pow(self.n as u32)
    }
    fn enumerate(&self) -> Vec<State> {
        let m = self.mu.len() as i32;
        let mut out = Vec::new();
        let mut cur = vec![0i32; self.n];
        loop {
            out.push(cur.clone());
            let mut k = self.n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < m {
                    break;
                }
                cur[k] = 0;
            }
        }
    }
}

struct PermDyn {
    n: usize,
    moves: Vec<(usize, usize)>,
    rate: f64,
}

impl Dynamics for PermDyn {
    fn initial(&self) -> State {
        (0..self.n as i32).collect()
    }
    fn log_weight(&self, _s: &[i32]) -> f64 {
        0.0
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        for (k, &(i, j)) in self.moves.iter().enumerate() {
            let mut t = s.to_vec();
            t.swap(i, j);
            out.push((t, self.rate, k as u32));
        }
    }
    fn state_count(&self) -> Option<u128> {
        (1..=self.n as u128).try_fold(1u128, |a, b| a.checked_mul(b))
    }
    fn enumerate(&self) -> Vec<State> {
        let mut out = Vec::new();
        let mut p: Vec<i32> = (0..self.n as i32).collect();
        permute(&mut p, 0, &mut out);
        out.sort();
        out
    }
}

fn permute(p: &mut Vec<i32>, k: usize, out: &mut Vec<State>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, out);
        p.swap(k, i);
    }
}

struct BernoulliLaplaceDyn {
    n: usize,
    r: usize,
}

impl Dynamics for BernoulliLaplaceDyn {
    fn initial(&self) -> State {
        (0..self.n).map(|i| (i < self.r) as i32).collect()
    }
    fn log_weight(&self, _s: &[i32]) -> f64 {
        0.0
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        let rate = 1.0 / (self.r * (self.n - self.r)) as f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if s[i] == 1 && s[j] == 0 {
                    let mut t = s.to_vec();
                    t[i] = 0;
                    t[j] = 1;
                    out.push((t, rate, (i * self.n + j) as u32));
                }
            }
        }
    }
    fn state_count(&self) -> Option<u128> {
        let mut c: u128 = 1;
        for k in 0..self.r as u128 {
            c = c.checked_mul(self.n as u128 - k)? / (k + 1);
        }
        Some(c)
    }
    fn enumerate(&self) -> Vec<State> {
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << self.n) {
            if mask.count_ones() as usize == self.r {
                out.push((0..self.n).map(|i| ((mask >> i) & 1) as i32).collect());
            }
        }
        out
    }
    fn label(&self, s: &[i32]) -> String {
        let members: Vec<String> = (0..self.n)
            .filter(|&i| s[i] == 1)
            .map(|i| i.to_string())
            .collect();
        format!("{{{}}}", members.join(","))
    }
}

struct SpanningTreeDyn {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl SpanningTreeDyn {
    fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertices < 2 {
            return param("spanning-tree walk needs at least two vertices");
        }
        if edges
            .iter()
            .any(|&(a, b)| a >= vertices || b >= vertices || a == b)
        {
            return param("edges must join distinct existing vertices");
        }
        if edges.len() > 40 {
            return param("at most 40 edges are supported");
        }
        let d = Self { vertices, edges };
        if !d.is_tree(&(0..d.edges.len()).collect::<Vec<_>>(), true) {
            return param("graph is not connected");
        }
        Ok(d)
    }

    /// With `spanning_only`, checks connectivity of the edge set; otherwise
    /// checks it is a spanning tree.
    fn is_tree(&self, set: &[usize], spanning_only: bool) -> bool {
        if !spanning_only && set.len() != self.vertices - 1 {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut joined = 0;
        for &e in set {
            let (a, b) = self.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                joined += 1;
            } else if !spanning_only {
                return false;
            }
        }
        joined == self.vertices - 1
    }

    fn to_set(&self, s: &[i32]) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| s[e] == 1).collect()
    }
}

impl Dynamics for SpanningTreeDyn {
    fn initial(&self) -> State {
        let mut s = vec![0; self.edges.len()];
        let mut chosen = Vec::new();
        for e in 0..self.edges.len() {
            chosen.push(e);
            if self.forest_ok(&chosen) {
                s[e] = 1;
            } else {
                chosen.pop();
            }
            if chosen.len() == self.vertices - 1 {
                break;
            }
        }
        s
    }
    fn log_weight(&self, _s: &[i32]) -> f64 {
        0.0
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        let rate = 1.0 / (self.edges.len() * (self.vertices - 1)) as f64;
        let tree = self.to_set(s);
        for e in 0..self.edges.len() {
            if s[e] == 1 {
                continue;
            }
            for &f in &tree {
                let mut t = s.to_vec();
                t[e] = 1;
                t[f] = 0;
                if self.is_tree(&self.to_set(&t), false) {
                    out.push((t, rate, (e * self.edges.len() + f) as u32));
                }
            }
        }
    }
    fn state_count(&self) -> Option<u128> {
        let k = self.vertices - 1;
        let m = self.edges.len();
        // count trees only when the candidate subsets are few enough to scan
        let mut subsets: u128 = 1;
        for i in 0..k as u128 {
            subsets = subsets * (m as u128 - i) / (i + 1);
        }
        if subsets > 5_000_000 {
            return None;
        }
        Some(self.enumerate().len() as u128)
    }
    fn enumerate(&self) -> Vec<State> {
        let m = self.edges.len();
        let k = self.vertices - 1;
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        if k > m {
            return out;
        }
        loop {
            if self.is_tree(&idx, false) {
                let mut s = vec![0; m];
                for &e in &idx {
                    s[e] = 1;
                }
                out.push(s);
            }
            // next k-combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    out.sort();
                    return out;
                }
                i -= 1;
                if idx[i] < m - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
    fn label(&self, s: &[i32]) -> String {
        let parts: Vec<String> = self
            .to_set(s)
            .into_iter()
            .map(|e| format!("{}-{}", self.edges[e].0, self.edges[e].1))
            .collect();
        parts.join(" ")
    }
}

impl SpanningTreeDyn {
    fn forest_ok(&self, set: &[usize]) -> bool {
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &e in set {
            let (a, b) = self.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }
}

struct IsingDyn {
    w: usize,
    h: usize,
    beta: f64,
    field: f64,
    boundary: Boundary,
    rates: RateFamily,
}

impl IsingDyn {
    fn boundary_spin(&self) -> f64 {
        match self.boundary {
            Boundary::Free => 0.0,
            Boundary::Plus => 1.0,
            Boundary::Minus => -1.0,
        }
    }

    /// Sum of neighbouring spins, boundary spins included.
    fn neighbour_sum(&self, s: &[i32], u: usize) -> f64 {
        let (r, c) = (u / self.w, u % self.w);
        let b = self.boundary_spin();
        let mut acc = 0.0;
        let mut add = |rr: isize, cc: isize| {
            if rr < 0 || cc < 0 || rr >= self.h as isize || cc >= self.w as isize {
                acc += b;
            } else {
                acc += s[rr as usize * self.w + cc as usize] as f64;
            }
        };
        add(r as isize - 1, c as isize);
        add(r as isize + 1, c as isize);
        add(r as isize, c as isize - 1);
        add(r as isize, c as isize + 1);
        acc
    }

    /// `log μ(σ^u) − log μ(σ)` for `μ ∝ exp(−β Σ σσ − h Σ σ)`.
    fn flip_log_ratio(&self, s: &[i32], u: usize) -> f64 {
        let su = s[u] as f64;
        2.0 * self.field * su + 2.0 * self.beta * su * self.neighbour_sum(s, u)
    }

    pub fn flip_rate(&self, s: &[i32], u: usize) -> f64 {
        let d = self.flip_log_ratio(s, u);
        match self.rates {
            RateFamily::Metropolis => d.min(0.0).exp(),
            RateFamily::HeatBath => 1.0 / (1.0 + (-d).exp()),
        }
    }
}

impl Dynamics for IsingDyn {
    fn initial(&self) -> State {
        let v = if self.boundary == Boundary::Minus {
            -1
        } else {
            1
        };
        vec![v; self.w * self.h]
    }
    fn log_weight(&self, s: &[i32]) -> f64 {
        let b = self.boundary_spin();
        let mut pair = 0.0;
        let mut single = 0.0;
        for r in 0..self.h {
            for c in 0..self.w {
                let v = s[r * self.w + c] as f64;
                single += v;
                if c + 1 < self.w {
                    pair += v * s[r * self.w + c + 1] as f64;
                }
                if r + 1 < self.h {
                    pair += v * s[(r + 1) * self.w + c] as f64;
                }
                let outside = (r == 0) as usize
                    + (r + 1 == self.h) as usize
                    + (c == 0) as usize
                    + (c + 1 == self.w) as usize;
                pair += v * b * outside as f64;
            }
        }
        -self.beta * pair - self.field * single
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        for u in 0..s.len() {
            let mut t = s.to_vec();
            t[u] = -t[u];
            out.push((t, self.flip_rate(s, u), u as u32));
        }
    }
    fn state_count(&self) -> Option<u128> {
        Some(1u128 << (self.w * self.h))
    }
    fn enumerate(&self) -> Vec<State> {
        let n = self.w * self.h;
        (0u64..(1u64 << n))
            .map(|mask| {
                (0..n)
                    .map(|i| if (mask >> i) & 1 == 1 { 1 } else { -1 })
                    .collect()
            })
            .collect()
    }
    fn label(&self, s: &[i32]) -> String {
        s.iter().map(|v| if *v > 0 { '+' } else { '-' }).collect()
    }
}

/// Detailed-balance residual `max |μ(σ)c(u,σ) − μ(σ^u)c(u,σ^u)|` over all
/// states and sites, with `μ` normalized.
pub fn glauber_detailed_balance(spec: &ChainSpec) -> Result<f64> {
    let ChainSpec::GlauberIsing {
        width,
        height,
        beta,
        h,
        boundary,
        rates,
    } = spec
    else {
        return param("detailed balance check applies to Glauber dynamics");
    };
    let d = IsingDyn {
        w: *width,
        h: *height,
        beta: *beta,
        field: *h,
        boundary: *boundary,
        rates: *rates,
    };
    let states = d.enumerate();
    if states.len() > MATERIALIZE_CAP {
        return Err(Error::TooLarge {
            states: states.len(),
            cap: MATERIALIZE_CAP,
        });
    }
    let logw: Vec<f64> = states.iter().map(|s| d.log_weight(s)).collect();
    let space =
        ProbabilitySpace::from_log_weights(states.iter().map(|s| d.label(s)).collect(), &logw)?;
    let mu = space.mu();
    let n = width * height;
    let mut worst = 0.0f64;
    for (x, s) in states.iter().enumerate() {
        for u in 0..n {
            let y = x ^ (1 << u);
            let mut t = s.clone();
            t[u] = -t[u];
            worst = worst.max((mu[x] * d.flip_rate(s, u) - mu[y] * d.flip_rate(&t, u)).abs());
        }
    }
    Ok(worst)
}

struct QueueDyn {
    lambda: f64,
    cap: usize,
}

impl Dynamics for QueueDyn {
    fn initial(&self) -> State {
        vec![0]
    }
    fn log_weight(&self, s: &[i32]) -> f64 {
        let k = s[0] as f64;
        k * self.lambda.ln() - ln_factorial(s[0] as usize)
    }
    fn transitions(&self, s: &[i32], out: &mut Vec<(State, f64, u32)>) {
        let k = s[0];
        if (k as usize) < self.cap {
            out.push((vec![k + 1], self.lambda, 0));
        }
        if k > 0 {
            out.push((vec![k - 1], k as f64, 1));
        }
    }
    fn state_count(&self) -> Option<u128> {
        Some(self.cap as u128 + 1)
    }
    fn enumerate(&self) -> Vec<State> {
        (0..=self.cap as i32).map(|k| vec![k]).collect()
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct Jump {
    pub time: f64,
    pub state: State,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSummary {
    pub t_end: f64,
    pub initial: State,
    pub final_state: State,
    /// State changes, in order, up to the recording cap.
    pub jumps: Vec<Jump>,
    pub n_jumps: u64,
    /// Clock rings including self-loops.
    pub n_events: u64,
    /// Clock rings per transition tag.
    pub tag_counts: BTreeMap<u32, u64>,
    /// Time average of the observable over `[0, t_end]`; its initial value when `t_end = 0`.
    pub time_average: f64,
}

pub struct TrajectorySampler {
    spec: ChainSpec,
    dynamics: Box<dyn Dynamics>,
    seed: u64,
    initial: State,
}

impl TrajectorySampler {
    pub fn new(spec: ChainSpec, seed: u64) -> Result<Self> {
        let dynamics = spec.dynamics()?;
        let initial = dynamics.initial();
        Ok(Self {
            spec,
            dynamics,
            seed,
            initial,
        })
    }

    pub fn with_initial(mut self, state: State) -> Self {
        self.initial = state;
        self
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    /// Simulates on `[0, t_end]` using substream `stream` of the sampler's seed.
    pub fn sample_path(
        &self,
        t_end: f64,
        observable: &dyn Fn(&[i32]) -> f64,
        record_cap: usize,
        stream: u64,
    ) -> PathSummary {
        let mut rng = substream(self.seed, stream);
        let mut state = self.initial.clone();
        let mut t = 0.0;
        let mut jumps = Vec::new();
        let mut n_jumps = 0;
        let mut n_events = 0;
        let mut tags = BTreeMap::new();
        let mut integral = 0.0;
        let mut buf = Vec::new();
        loop {
            buf.clear();
            self.dynamics.transitions(&state, &mut buf);
            let total: f64 = buf.iter().map(|b| b.1).sum();
            let obs = observable(&state);
            let dt = if total > 0.0 {
                Exp::new(total).expect("positive rate").sample(&mut rng)
            } else {
                f64::INFINITY
            };
            if t + dt >= t_end {
                integral += obs * (t_end - t);
                break;
            }
            integral += obs * dt;
            t += dt;
            let (next, tag) = pick(&buf, total, &mut rng);
            n_events += 1;
            *tags.entry(tag).or_insert(0u64) += 1;
            if next != state {
                n_jumps += 1;
                state = next;
                if jumps.len() < record_cap {
                    jumps.push(Jump {
                        time: t,
                        state: state.clone(),
                    });
                }
            }
        }
        PathSummary {
            t_end,
            initial: self.initial.clone(),
            final_state: state.clone(),
            jumps,
            n_jumps,
            n_events,
            tag_counts: tags,
            time_average: if t_end > 0.0 {
                integral / t_end
            } else {
                observable(&self.initial)
            },
        }
    }
}

fn pick(buf: &[(State, f64, u32)], total: f64, rng: &mut Rng) -> (State, u32) {
    let mut x = rng.random::<f64>() * total;
    for (s, r, tag) in buf {
        if x < *r {
            return (s.clone(), *tag);
        }
        x -= r;
    }
    let last = buf.last().expect("nonempty transitions");
    (last.0.clone(), last.2)
}

/// Jump-chain sampler over an explicit generator's state indices.
pub struct GeneratorSampler {
    rows: Vec<(f64, Vec<(usize, f64)>)>,
    cumulative_mu: Vec<f64>,
}

impl GeneratorSampler {
    pub fn new(g: &Generator) -> Self {
        use crate::semigroup::Semigroup;
        let n = g.len();
        let mut rows = vec![(0.0, Vec::new()); n];
        for (x, y, r) in g.rates() {
            rows[x].0 += r;
            rows[x].1.push((y, r));
        }
        let mut acc = 0.0;
        let cumulative_mu = g
            .mu()
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self {
            rows,
            cumulative_mu,
        }
    }

    pub fn sample_stationary(&self, rng: &mut Rng) -> usize {
        let u = rng.random::<f64>() * self.cumulative_mu.last().copied().unwrap_or(1.0);
        self.cumulative_mu
            .partition_point(|c| *c <= u)
            .min(self.cumulative_mu.len() - 1)
    }

    /// State at time `t` started from `x`.
    pub fn advance(&self, mut x: usize, t: f64, rng: &mut Rng) -> usize {
        let mut clock = 0.0;
        loop {
            let (total, ref out) = self.rows[x];
            if total <= 0.0 {
                return x;
            }
            clock += Exp::new(total).expect("positive rate").sample(rng);
            if clock >= t {
                return x;
            }
            let mut u = rng.random::<f64>() * total;
            let mut next = out.last().expect("positive rate implies a move").0;
            for &(y, r) in out {
                if u < r {
                    next = y;
                    break;
                }
                u -= r;
            }
            x = next;
        }
    }
}
