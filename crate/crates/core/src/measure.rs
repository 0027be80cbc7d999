//! Finite probability spaces and functions on them.
//!
//! Norms follow the extended convention: for `p < 1` (zero and negative
//! exponents included) the function must be strictly positive, `p = 0` is
//! the geometric mean, and for `p >= 1` absolute values are used.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{ksum, log_sum_exp};

/// Largest supported number of points.
pub const MAX_POINTS: usize = 1_000_000;

/// Below this |p| the norm uses a cumulant expansion around `p = 0`.
const SERIES_BAND: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySpace {
    labels: Vec<String>,
    mu: Vec<f64>,
}

impl ProbabilitySpace {
    pub fn new(labels: Vec<String>, mu: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Space("at least one point is required".into()));
        }
        if labels.len() != mu.len() {
            return Err(Error::Space(format!(
                "{} labels but {} weights",
                labels.len(),
                mu.len()
            )));
        }
        if labels.len() > MAX_POINTS {
            return Err(Error::Space(format!(
                "{} points exceeds the cap of {MAX_POINTS}",
                labels.len()
            )));
        }
        if let Some((i, w)) = mu
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0) || !w.is_finite())
        {
            return Err(Error::Space(format!(
                "weight {w} at index {i} is not strictly positive"
            )));
        }
        let total = ksum(mu.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Space(format!("weights sum to {total}, not 1")));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Space(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels, mu })
    }

    /// Normalizes positive weights, labelling points `0..n`.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Space(format!("weight {w} is not strictly positive")));
        }
        let total = ksum(weights.iter().copied());
        let mu = weights.iter().map(|w| w / total).collect();
        Self::new(index_labels(weights.len()), mu)
    }

    /// Normalizes weights given as logarithms; tolerant of huge dynamic range.
    pub fn from_log_weights(labels: Vec<String>, log_w: &[f64]) -> Result<Self> {
        let ones = vec![1.0; log_w.len()];
        let lz = log_sum_exp(&ones, log_w);
        let mu: Vec<f64> = log_w.iter().map(|l| (l - lz).exp()).collect();
        if let Some(i) = mu.iter().position(|m| *m <= 0.0) {
            return Err(Error::Space(format!(
                "weight of point {i} underflows to zero; shrink the state space"
            )));
        }
        Self::new(labels, mu)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Space("at least one point is required".into()));
        }
        Self::new(index_labels(n), vec![1.0 / n as f64; n])
    }

    /// Two points `0`, `1` with masses `(alpha, 1 - alpha)`.
    pub fn two_point(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Space(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        Self::new(index_labels(2), vec![alpha, 1.0 - alpha])
    }

    /// Product space; the first factor is the most significant index digit.
    pub fn product(factors: &[&ProbabilitySpace]) -> Result<Self> {
        let total: usize = factors
            .iter()
            .map(|f| f.len())
            .try_fold(1usize, |a, b| a.checked_mul(b).filter(|v| *v <= MAX_POINTS))
            .ok_or_else(|| Error::Space("product exceeds the point cap".into()))?;
        let mut labels = Vec::with_capacity(total);
        let mut mu = Vec::with_capacity(total);
        let mut digits = vec![0usize; factors.len()];
        for _ in 0..total {
            let mut w = 1.0;
            let mut parts = Vec::with_capacity(factors.len());
            for (f, &d) in factors.iter().zip(&digits) {
                w *= f.mu[d];
                parts.push(f.labels[d].as_str());
            }
            labels.push(parts.join(","));
            mu.push(w);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < factors[k].len() {
                    break;
                }
                digits[k] = 0;
            }
        }
        // Products of normalized weights sum to 1 up to rounding.
        let total_w = ksum(mu.iter().copied());
        mu.iter_mut().for_each(|m| *m /= total_w);
        Self::new(labels, mu)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// μ-measure of an index set.
    pub fn measure(&self, set: &[usize]) -> f64 {
        ksum(set.iter().map(|&i| self.mu[i]))
    }

    pub fn expect(&self, f: &[f64]) -> f64 {
        weighted::expect(&self.mu, f)
    }
}

pub(crate) fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// A real function on a probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction {
    space: Arc<ProbabilitySpace>,
    values: Vec<f64>,
    strictly_positive: bool,
}

impl RealFunction {
    pub fn new(space: Arc<ProbabilitySpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return domain(format!(
                "function has {} values on a {}-point space",
                values.len(),
                space.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("function values must be finite");
        }
        let strictly_positive = values.iter().all(|v| *v > 0.0);
        Ok(Self {
            space,
            values,
            strictly_positive,
        })
    }

    pub fn constant(space: Arc<ProbabilitySpace>, c: f64) -> Result<Self> {
        let n = space.len();
        Self::new(space, vec![c; n])
    }

    pub fn space(&self) -> &Arc<ProbabilitySpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub fn mean(&self) -> f64 {
        self.space.expect(&self.values)
    }
}

/// Hölder conjugate `p / (p - 1)`, with `0' = 0`.
pub fn holder_conjugate(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return domain("exponent must be finite");
    }
    if p == 1.0 {
        return domain("exponent 1 has no Hölder conjugate");
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok(p / (p - 1.0))
}

pub fn p_norm(f: &RealFunction, p: f64) -> Result<f64> {
    weighted::p_norm(f.space.mu(), &f.values, p)
}

pub fn entropy(f: &RealFunction) -> Result<f64> {
    weighted::entropy(f.space.mu(), &f.values)
}

pub fn variance(f: &RealFunction) -> f64 {
    weighted::variance(f.space.mu(), &f.values)
}

/// Slice-level versions of the functionals, taking the weights directly.
pub mod weighted {
    use super::*;

    pub fn expect(mu: &[f64], f: &[f64]) -> f64 {
        crate::numeric::dot(mu, f)
    }

    fn require_positive(f: &[f64], p: f64) -> Result<()> {
        match f.iter().position(|v| !(*v > 0.0)) {
            Some(i) => domain(format!(
                "exponent {p} needs a strictly positive function; value {} at index {i}",
                f[i]
            )),
            None => Ok(()),
        }
    }

    /// Natural log of the extended p-norm of a strictly positive function
    /// given through its logarithm `u = log f`.
    pub fn log_norm_from_log(mu: &[f64], u: &[f64], p: f64) -> Result<f64> {
        if !p.is_finite() {
            return domain("exponent must be finite");
        }
        if p == 0.0 {
            return Ok(expect(mu, u));
        }
        if p.abs() < SERIES_BAND {
            // log‖f‖_p = κ₁ + p κ₂/2 + p² κ₃/6 + O(p³)
            let m = expect(mu, u);
            let k2 = ksum(mu.iter().zip(u).map(|(w, x)| w * (x - m) * (x - m)));
            let k3 = ksum(mu.iter().zip(u).map(|(w, x)| w * (x - m).powi(3)));
            return Ok(m + p * k2 / 2.0 + p * p * k3 / 6.0);
        }
        let scaled: Vec<f64> = u.iter().map(|x| p * x).collect();
        Ok(log_sum_exp(mu, &scaled) / p)
    }

    pub fn p_norm(mu: &[f64], f: &[f64], p: f64) -> Result<f64> {
        if !p.is_finite() {
            return domain("exponent must be finite");
        }
        if p >= 1.0 {
            return Ok(abs_norm(mu, f, p));
        }
        require_positive(f, p)?;
        let u: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        Ok(log_norm_from_log(mu, &u, p)?.exp())
    }

    /// p-norm for p > 0 that accepts zeros (indicators and the like).
    pub fn p_norm_nonnegative(mu: &[f64], f: &[f64], p: f64) -> Result<f64> {
        if !(p > 0.0) || !p.is_finite() {
            return domain("this variant needs a positive finite exponent");
        }
        if let Some(v) = f.iter().find(|v| **v < 0.0) {
            return domain(format!("negative value {v}"));
        }
        Ok(abs_norm(mu, f, p))
    }

    fn abs_norm(mu: &[f64], f: &[f64], p: f64) -> f64 {
        let m = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let s = ksum(mu.iter().zip(f).map(|(w, v)| w * (v.abs() / m).powf(p)));
        m * s.powf(1.0 / p)
    }

    pub fn entropy(mu: &[f64], f: &[f64]) -> Result<f64> {
        require_positive(f, 0.0)
            .map_err(|_| Error::Domain("entropy needs a strictly positive function".into()))?;
        let m = expect(mu, f);
        let e = ksum(mu.iter().zip(f).map(|(w, v)| w * v * (v / m).ln()));
        Ok(e.max(0.0))
    }

    /// Ent(e^u), evaluated from log-values.
    pub fn entropy_of_exp(mu: &[f64], u: &[f64]) -> f64 {
        let f: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        let lm = log_sum_exp(mu, u);
        ksum(
            mu.iter()
                .zip(f.iter().zip(u))
                .map(|(w, (v, x))| w * v * (x - lm)),
        )
        .max(0.0)
    }

    pub fn variance(mu: &[f64], f: &[f64]) -> f64 {
        let m = expect(mu, f);
        ksum(mu.iter().zip(f).map(|(w, v)| w * (v - m) * (v - m)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Arc<ProbabilitySpace> {
        Arc::new(ProbabilitySpace::uniform(2).unwrap())
    }

    #[test]
    fn conjugates() {
        assert_eq!(holder_conjugate(2.0).unwrap(), 2.0);
        assert_eq!(holder_conjugate(0.0).unwrap(), 0.0);
        assert_eq!(holder_conjugate(0.5).unwrap(), -1.0);
        assert!(holder_conjugate(1.0).is_err());
    }

    #[test]
    fn norms_of_one_four() {
        let f = RealFunction::new(two(), vec![1.0, 4.0]).unwrap();
        assert!((p_norm(&f, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((p_norm(&f, -1.0).unwrap() - 1.6).abs() < 1e-15);
        assert!((p_norm(&f, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((p_norm(&f, 2.0).unwrap() - 8.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn negative_exponent_rejects_nonpositive() {
        let f = RealFunction::new(two(), vec![0.0, 4.0]).unwrap();
        assert!(p_norm(&f, 0.5).is_err());
        assert!(p_norm(&f, 2.0).is_ok());
        assert!(entropy(&f).is_err());
    }

    #[test]
    fn entropy_and_variance_anchors() {
        let f = RealFunction::new(two(), vec![2.0, 1.0]).unwrap();
        let e = 2f64.ln() - 1.5 * 1.5f64.ln();
        assert!((entropy(&f).unwrap() - e).abs() < 1e-15);
        assert!((entropy(&f).unwrap() - 0.084_949).abs() < 1e-6);
        let g = RealFunction::new(two(), vec![1.0, -1.0]).unwrap();
        assert_eq!(variance(&g), 1.0);
    }

    #[test]
    fn space_validation() {
        assert!(ProbabilitySpace::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(ProbabilitySpace::new(vec!["a".into(), "b".into()], vec![0.5, 0.6]).is_err());
        assert!(ProbabilitySpace::new(vec!["a".into(), "b".into()], vec![1.0, 0.0]).is_err());
        assert!(ProbabilitySpace::new(vec![], vec![]).is_err());
    }

    #[test]
    fn product_ordering() {
        let a = ProbabilitySpace::two_point(0.25).unwrap();
        let b = ProbabilitySpace::uniform(3).unwrap();
        let p = ProbabilitySpace::product(&[&a, &b]).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.labels()[4], "1,1");
        assert!((p.mu()[0] - 0.25 / 3.0).abs() < 1e-16);
        assert!((p.mu()[5] - 0.25).abs() < 1e-16);
    }

    #[test]
    fn series_band_is_continuous() {
        let mu = [0.2, 0.3, 0.5];
        let f = [0.5, 2.0, 7.0];
        let n0 = weighted::p_norm(&mu, &f, 0.0).unwrap();
        for p in [1e-9, -1e-9, 2e-8, -2e-8] {
            let v = weighted::p_norm(&mu, &f, p).unwrap();
            assert!((v - n0).abs() < 1e-7 * n0);
        }
    }
}
