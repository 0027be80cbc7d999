//! Non-interactive agreement with `m`-sided dice.
//!
//! A uniform string `x ∈ [m]^n` is drawn; each of `k` players sees a copy in
//! which every coordinate is kept with probability `ρ` and otherwise replaced
//! by a fresh uniform face. Points of `[m]^n` are indexed with the first
//! coordinate most significant.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::mixing::McEstimate;
use crate::numeric::ksum;
use crate::rng::tagged;

/// Largest cube handled by exact tensor computations.
pub const EXACT_STATES: usize = 1_000_000;
/// Largest player count for which `agreement_probability` prefers the exact path.
pub const EXACT_PLAYERS: usize = 8;
const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NicdConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub trials: u64,
    pub seed: u64,
}

impl NicdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return domain("need at least two faces");
        }
        if self.n == 0 {
            return domain("string length must be positive");
        }
        if self.k < 2 {
            return domain("need at least two players");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return domain(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        Ok(())
    }

    /// `m^n` when it fits under `EXACT_STATES`.
    pub fn cube_size(&self) -> Option<usize> {
        cube_size(self.m, self.n)
    }
}

fn cube_size(m: usize, n: usize) -> Option<usize> {
    let mut s: usize = 1;
    for _ in 0..n {
        s = s.checked_mul(m).filter(|s| *s <= EXACT_STATES)?;
    }
    Some(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Protocol {
    /// Output the face at `coordinate` (0-based).
    DictatorCoordinate { coordinate: usize },
    /// Earliest coordinate whose face is among the most frequent.
    Plurality,
    /// Output `table[index(x)]`.
    Table { table: Vec<u32> },
}

impl Protocol {
    pub fn check(&self, m: usize, n: usize) -> Result<()> {
        match self {
            Protocol::DictatorCoordinate { coordinate } if *coordinate >= n => {
                domain(format!("coordinate {coordinate} out of range for n = {n}"))
            }
            Protocol::Table { table } => {
                if cube_size(m, n) != Some(table.len()) {
                    return domain(format!("table needs m^n entries, got {}", table.len()));
                }
                if table.iter().any(|v| *v as usize >= m) {
                    return domain("table value out of range");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, m: usize, x: &[u32], counts: &mut Vec<u32>) -> u32 {
        match self {
            Protocol::DictatorCoordinate { coordinate } => x[*coordinate],
            Protocol::Plurality => plurality(m, x, counts),
            Protocol::Table { table } => {
                let idx = x.iter().fold(0usize, |acc, d| acc * m + *d as usize);
                table[idx]
            }
        }
    }

    /// Values on all of `[m]^n`.
    pub fn tabulate(&self, m: usize, n: usize) -> Result<Vec<u32>> {
        self.check(m, n)?;
        if let Protocol::Table { table } = self {
            return Ok(table.clone());
        }
        let size = cube_size(m, n).ok_or(Error::TooLarge {
            states: usize::MAX,
            cap: EXACT_STATES,
        })?;
        let mut x = vec![0u32; n];
        let mut counts = Vec::new();
        Ok((0..size)
            .map(|idx| {
                decode(idx, m, &mut x);
                self.evaluate(m, &x, &mut counts)
            })
            .collect())
    }
}

/// `x` as digits, first coordinate most significant.
pub fn decode(mut idx: usize, m: usize, x: &mut [u32]) {
    for d in x.iter_mut().rev() {
        *d = (idx % m) as u32;
        idx /= m;
    }
}

fn plurality(m: usize, x: &[u32], counts: &mut Vec<u32>) -> u32 {
    counts.clear();
    counts.resize(m, 0);
    for d in x {
        counts[*d as usize] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&0);
    *x.iter().find(|d| counts[**d as usize] == top).unwrap_or(&0)
}

/// `ℙ{F(x) = j}` for each face, exactly. Errors with `Unbalanced` unless all equal `1/m`.
pub fn check_balance(p: &Protocol, m: usize, n: usize) -> Result<Vec<f64>> {
    let table = p.tabulate(m, n)?;
    let mut counts = vec![0usize; m];
    for v in &table {
        counts[*v as usize] += 1;
    }
    let freq: Vec<f64> = counts
        .iter()
        .map(|c| *c as f64 / table.len() as f64)
        .collect();
    if counts.iter().any(|c| c * m != table.len()) {
        return Err(Error::Unbalanced(format!("face frequencies {freq:?}")));
    }
    Ok(freq)
}

/// Exhaustively checks `PLU(σ∘x) = σ(PLU(x))` over all face permutations.
pub fn plurality_equivariant(m: usize, n: usize) -> Result<bool> {
    if n > 8 || m > 6 {
        return param("equivariance check is limited to n <= 8 and m <= 6");
    }
    let table = Protocol::Plurality.tabulate(m, n)?;
    let perms = permutations(m);
    let mut x = vec![0u32; n];
    for (idx, out) in table.iter().enumerate() {
        decode(idx, m, &mut x);
        for s in &perms {
            let y = x
                .iter()
                .fold(0usize, |acc, d| acc * m + s[*d as usize] as usize);
            if table[y] != s[*out as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn permutations(m: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (0..m as u32)
                    .filter(|v| !p.contains(v))
                    .map(|v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Applies the `ρ`-noise operator to `v` in place, one axis at a time.
pub fn noise_operator(v: &mut [f64], m: usize, n: usize, rho: f64) {
    let mut stride = v.len();
    for _ in 0..n {
        let block = stride;
        stride /= m;
        for base in (0..v.len()).step_by(block) {
            for off in 0..stride {
                let mut mean = 0.0;
                for d in 0..m {
                    mean += v[base + off + d * stride];
                }
                mean /= m as f64;
                for d in 0..m {
                    let e = &mut v[base + off + d * stride];
                    *e = rho * *e + (1.0 - rho) * mean;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub exact: bool,
    pub hits: Option<u64>,
    pub trials: Option<u64>,
}

impl Agreement {
    fn exact(v: f64) -> Self {
        Self {
            estimate: v,
            ci_lo: v,
            ci_hi: v,
            exact: true,
            hits: None,
            trials: None,
        }
    }

    fn from_mc(mc: McEstimate) -> Self {
        Self {
            estimate: mc.estimate,
            ci_lo: mc.ci_lo,
            ci_hi: mc.ci_hi,
            exact: false,
            hits: Some(mc.hits),
            trials: Some(mc.trials),
        }
    }
}

/// Player protocols: either one shared protocol or exactly `k`.
fn grouped<'a>(cfg: &NicdConfig, protocols: &'a [Protocol]) -> Result<Vec<(&'a Protocol, i32)>> {
    match protocols.len() {
        1 => Ok(vec![(&protocols[0], cfg.k as i32)]),
        k if k == cfg.k => {
            let mut groups: Vec<(&Protocol, i32)> = Vec::new();
            for p in protocols {
                match groups.iter_mut().find(|(q, _)| *q == p) {
                    Some(g) => g.1 += 1,
                    None => groups.push((p, 1)),
                }
            }
            Ok(groups)
        }
        l => domain(format!("expected 1 or {} protocols, got {l}", cfg.k)),
    }
}

/// `T f_j` for each face `j`, where `f_j` indicates `{F = j}`.
fn smoothed_indicators(p: &Protocol, cfg: &NicdConfig) -> Result<Vec<Vec<f64>>> {
    let table = p.tabulate(cfg.m, cfg.n)?;
    Ok((0..cfg.m as u32)
        .into_par_iter()
        .map(|j| {
            let mut v: Vec<f64> = table.iter().map(|f| (*f == j) as u8 as f64).collect();
            noise_operator(&mut v, cfg.m, cfg.n, cfg.rho);
            v
        })
        .collect())
}

fn validate_all(cfg: &NicdConfig, protocols: &[Protocol]) -> Result<()> {
    cfg.validate()?;
    for p in protocols {
        p.check(cfg.m, cfg.n)?;
        if matches!(p, Protocol::Table { .. }) || cfg.n <= 10 {
            check_balance(p, cfg.m, cfg.n)?;
        }
    }
    Ok(())
}

/// `Σ_j 𝔼[Π_i T f_ij]` over the whole cube.
pub fn agreement_exact(cfg: &NicdConfig, protocols: &[Protocol]) -> Result<f64> {
    validate_all(cfg, protocols)?;
    if cfg.cube_size().is_none() {
        return Err(Error::TooLarge {
            states: usize::MAX,
            cap: EXACT_STATES,
        });
    }
    let groups = grouped(cfg, protocols)?;
    let smoothed: Vec<Vec<Vec<f64>>> = groups
        .iter()
        .map(|(p, _)| smoothed_indicators(p, cfg))
        .collect::<Result<_>>()?;
    let per_face: Vec<f64> = (0..cfg.m)
        .map(|j| {
            let size = smoothed[0][j].len();
            let terms = (0..size).map(|x| {
                groups
                    .iter()
                    .zip(&smoothed)
                    .map(|((_, c), s)| s[j][x].powi(*c))
                    .product::<f64>()
            });
            ksum(terms) / size as f64
        })
        .collect();
    Ok(ksum(per_face))
}

/// `Σ_j Π_i ‖T f_ij‖_k`, an upper bound on the agreement probability.
pub fn holder_bound(cfg: &NicdConfig, protocols: &[Protocol]) -> Result<f64> {
    validate_all(cfg, protocols)?;
    let groups = grouped(cfg, protocols)?;
    let k = cfg.k as i32;
    let mut faces = vec![1.0; cfg.m];
    for (p, c) in &groups {
        for (j, g) in smoothed_indicators(p, cfg)?.iter().enumerate() {
            let norm = (ksum(g.iter().map(|v| v.powi(k))) / g.len() as f64).powf(1.0 / k as f64);
            faces[j] *= norm.powi(*c);
        }
    }
    Ok(ksum(faces))
}

/// Monte Carlo agreement with a Wilson 99% interval; batches draw from
/// streams tagged by the player count.
pub fn agreement_mc(cfg: &NicdConfig, protocols: &[Protocol]) -> Result<Agreement> {
    validate_all(cfg, protocols)?;
    if protocols.len() != 1 && protocols.len() != cfg.k {
        return domain(format!("expected 1 or {} protocols", cfg.k));
    }
    if cfg.trials == 0 {
        return domain("need at least one trial");
    }
    let player = |i: usize| &protocols[if protocols.len() == 1 { 0 } else { i }];
    let (m, n, rho) = (cfg.m, cfg.n, cfg.rho);
    let hits: u64 = (0..cfg.trials.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut rng = tagged(cfg.seed, cfg.k as u64, b);
            let mut x = vec![0u32; n];
            let mut y = vec![0u32; n];
            let mut counts = Vec::with_capacity(m);
            let mut h = 0;
            for _ in 0..BATCH.min(cfg.trials - b * BATCH) {
                for d in x.iter_mut() {
                    *d = rng.random_range(0..m as u32);
                }
                let mut first = None;
                let mut agree = true;
                for i in 0..cfg.k {
                    for (yd, xd) in y.iter_mut().zip(&x) {
                        *yd = if rng.random::<f64>() < rho {
                            *xd
                        } else {
                            rng.random_range(0..m as u32)
                        };
                    }
                    let out = player(i).evaluate(m, &y, &mut counts);
                    if *first.get_or_insert(out) != out {
                        agree = false;
                        break;
                    }
                }
                h += agree as u64;
            }
            h
        })
        .sum();
    Ok(Agreement::from_mc(McEstimate::from_counts(
        hits, cfg.trials,
    )))
}

/// Exact when `m^n ≤ 10^6` and `k ≤ 8`, Monte Carlo otherwise.
pub fn agreement_probability(cfg: &NicdConfig, protocols: &[Protocol]) -> Result<Agreement> {
    if cfg.cube_size().is_some() && cfg.k <= EXACT_PLAYERS {
        agreement_exact(cfg, protocols).map(Agreement::exact)
    } else {
        agreement_mc(cfg, protocols)
    }
}

/// `(1 − 10⁻³)·2(1 − √ρ)/√ρ`, strictly inside the admissible range.
pub fn admissible_beta(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return domain("rho must lie in (0, 1)");
    }
    let s = rho.sqrt();
    Ok((1.0 - 1e-3) * 2.0 * (1.0 - s) / s)
}

/// `m·C·k^{−β(ρ)}`; an order-of-growth envelope, not a sharp constant.
pub fn upper_bound_envelope(m: usize, rho: f64, k: f64, c: f64) -> Result<f64> {
    Ok(m as f64 * c * k.powf(-admissible_beta(rho)?))
}

/// The `C` making the envelope pass through `value` at `k0`.
pub fn calibrate_envelope(m: usize, rho: f64, k0: f64, value: f64) -> Result<f64> {
    Ok(value * k0.powf(admissible_beta(rho)?) / m as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub k: u32,
    pub lhs: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBound {
    pub beta: f64,
    pub c: f64,
    pub rows: Vec<PowerRow>,
    /// Smallest listed `k` from which the envelope dominates every later row.
    pub dominated_from: Option<u32>,
}

/// `‖T_t f‖_k^k` with `e^{−t} = ρ` against `C k^{−β}`, `C` fixed at `k = 2`.
pub fn power_bound_check(
    f: &[f64],
    m: usize,
    n: usize,
    rho: f64,
    ks: &[u32],
) -> Result<PowerBound> {
    let beta = admissible_beta(rho)?;
    if cube_size(m, n) != Some(f.len()) {
        return domain("function needs m^n values");
    }
    if f.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return domain("function must be an indicator");
    }
    let mean = ksum(f.iter().copied()) / f.len() as f64;
    if mean > 0.5 {
        return domain(format!("indicator mean {mean} exceeds 1/2"));
    }
    let mut g = f.to_vec();
    noise_operator(&mut g, m, n, rho);
    let moment = |k: u32| ksum(g.iter().map(|v| v.powi(k as i32))) / g.len() as f64;
    let c = moment(2) * 2f64.powf(beta);
    let rows: Vec<PowerRow> = ks
        .iter()
        .map(|&k| PowerRow {
            k,
            lhs: moment(k),
            envelope: c * (k as f64).powf(-beta),
        })
        .collect();
    let ok = |r: &PowerRow| r.lhs <= r.envelope * (1.0 + 1e-12);
    let dominated_from = (0..rows.len())
        .find(|&i| rows[i..].iter().all(ok))
        .map(|i| rows[i].k);
    Ok(PowerBound {
        beta,
        c,
        rows,
        dominated_from,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub n: usize,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PluralitySweep {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log estimate` against `log k`.
    pub slope: Option<f64>,
}

/// Monte Carlo agreement of the all-plurality protocol for each `k`.
pub fn plurality_lower_sweep(
    m: usize,
    rho: f64,
    ks: &[usize],
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<PluralitySweep> {
    let rows = ks
        .iter()
        .map(|&k| {
            let cfg = NicdConfig {
                m,
                n,
                k,
                rho,
                trials,
                seed,
            };
            let a = agreement_mc(&cfg, &[Protocol::Plurality])?;
            Ok(SweepRow {
                k,
                n,
                estimate: a.estimate,
                ci_lo: a.ci_lo,
                ci_hi: a.ci_hi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.estimate > 0.0)
        .map(|r| ((r.k as f64).ln(), r.estimate.ln()))
        .collect();
    Ok(PluralitySweep {
        slope: log_log_slope(&pts),
        rows,
    })
}

fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let l = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / l;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / l;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneInN {
    pub rows: Vec<SweepRow>,
    /// False when some longer string has its whole interval below a shorter one's.
    pub consistent: bool,
}

/// Plurality agreement at fixed `k` for increasing `n`, sharing random streams.
pub fn monotone_in_n(
    m: usize,
    rho: f64,
    k: usize,
    ns: &[usize],
    trials: u64,
    seed: u64,
) -> Result<MonotoneInN> {
    let mut rows = Vec::new();
    for &n in ns {
        let cfg = NicdConfig {
            m,
            n,
            k,
            rho,
            trials,
            seed,
        };
        let a = agreement_mc(&cfg, &[Protocol::Plurality])?;
        rows.push(SweepRow {
            k,
            n,
            estimate: a.estimate,
            ci_lo: a.ci_lo,
            ci_hi: a.ci_hi,
        });
    }
    let consistent = rows
        .iter()
        .enumerate()
        .all(|(i, r)| rows[..i].iter().all(|s| s.n >= r.n || r.ci_hi >= s.ci_lo));
    Ok(MonotoneInN { rows, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, n: usize, k: usize, rho: f64) -> NicdConfig {
        NicdConfig {
            m,
            n,
            k,
            rho,
            trials: 20_000,
            seed: 1,
        }
    }

    #[test]
    fn two_dictators() {
        let p = [Protocol::DictatorCoordinate { coordinate: 0 }];
        let v = agreement_exact(&cfg(2, 1, 2, 0.5), &p).unwrap();
        assert!((v - 0.625).abs() < 1e-15);
    }

    #[test]
    fn plurality_is_balanced_and_equivariant() {
        for m in 2..=3 {
            for n in 1..=5 {
                check_balance(&Protocol::Plurality, m, n).unwrap();
                assert!(plurality_equivariant(m, n).unwrap());
            }
        }
    }

    #[test]
    fn unbalanced_table_rejected() {
        let p = [Protocol::Table { table: vec![0, 0] }];
        assert!(matches!(
            agreement_exact(&cfg(2, 1, 2, 0.5), &p),
            Err(Error::Unbalanced(_))
        ));
    }

    #[test]
    fn envelope_degenerates_near_one() {
        assert!(admissible_beta(1.0 - 1e-12).unwrap() < 1e-5);
    }
}
