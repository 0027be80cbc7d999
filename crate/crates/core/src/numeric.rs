//! Small numeric helpers shared across modules.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn ksum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Compensated weighted mean Σ w_i x_i.
pub fn dot(w: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), x.len());
    ksum(w.iter().zip(x).map(|(a, b)| a * b))
}

/// ln Σ w_i e^{x_i} for positive weights, stable for large |x|.
pub fn log_sum_exp(w: &[f64], x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s = ksum(w.iter().zip(x).map(|(a, b)| a * (b - m).exp()));
    m + s.ln()
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * (i as f64) / ((n - 1) as f64))
            .collect(),
    }
}

/// Two-sided z quantile for 99% intervals.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `hits` successes out of `n`, at normal quantile `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let phat = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (phat + z2 / (2.0 * nf)) / denom;
    let half = z * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(ksum(v), 2.0);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let w = [0.25, 0.75];
        let x = [1.0, 2.0];
        let direct = (0.25 * 1f64.exp() + 0.75 * 2f64.exp()).ln();
        assert!((log_sum_exp(&w, &x) - direct).abs() < 1e-15);
        assert!(log_sum_exp(&w, &[1000.0, 1000.0]).is_finite());
    }

    #[test]
    fn wilson_contains_proportion() {
        let (lo, hi) = wilson_interval(50, 100, Z99);
        assert!(lo < 0.5 && 0.5 < hi);
        let (lo, hi) = wilson_interval(0, 100, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.07);
    }
}
