//! Reversible Markov generators, their heat semigroups and Dirichlet forms.
//!
//! Matrix convention: `(L f)(x) = Σ_y L[x][y] f(y)`, so off-diagonal entries
//! are minus the jump rates and each row sums to zero.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Axiom, AxiomViolation, Error, Result};
use crate::measure::{ProbabilitySpace, RealFunction};
use crate::numeric::{ksum, Accumulator};

/// Base tolerance for the generator axioms, scaled by `max(1, max|L|)`.
pub const AXIOM_TOL: f64 = 1e-10;
/// Largest state count for which a dense eigendecomposition is attempted.
pub const DENSE_LIMIT: usize = 4096;
/// Validation computes the spectrum eagerly up to this size.
const EAGER_SPECTRUM: usize = 1024;
/// Explicit (materialized) generators are refused above this size.
pub const MATERIALIZE_CAP: usize = 20_000;

/// Unordered pair `x < y` carrying the symmetric conductance `μ_x · rate(x→y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub x: usize,
    pub y: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpectralGap {
    pub value: f64,
    /// Set when the second eigenvalue is numerically zero.
    pub reducible: bool,
}

/// Operations shared by explicit and tensor-product generators.
pub trait Semigroup: Send + Sync {
    fn space(&self) -> &Arc<ProbabilitySpace>;

    fn mu(&self) -> &[f64] {
        self.space().mu()
    }

    fn len(&self) -> usize {
        self.space().len()
    }

    fn apply_generator(&self, f: &[f64]) -> Vec<f64>;

    /// `T_t f` for `t >= 0`.
    fn heat(&self, t: f64, f: &[f64]) -> Result<Vec<f64>>;

    fn edges(&self) -> &[Edge];

    /// Pair-sum evaluation `Σ_{x<y} w_xy (f_x − f_y)(g_x − g_y)`.
    fn dirichlet(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut acc = Accumulator::new();
        for e in self.edges() {
            acc.add(e.weight * (f[e.x] - f[e.y]) * (g[e.x] - g[e.y]));
        }
        acc.value()
    }

    fn spectral_gap(&self) -> Result<SpectralGap>;

    /// An eigenfunction for the spectral gap, when one exists.
    fn gap_vector(&self) -> Result<Option<Vec<f64>>>;
}

/// `𝓔(e^{a u}, e^{b u})` through the pair sum, with differences taken by
/// `expm1` so small exponents keep full relative precision.
pub fn dirichlet_of_powers<S: Semigroup + ?Sized>(sg: &S, u: &[f64], a: f64, b: f64) -> f64 {
    let mut acc = Accumulator::new();
    for e in sg.edges() {
        let d = u[e.x] - u[e.y];
        let da = (a * u[e.y]).exp() * (a * d).exp_m1();
        let db = (b * u[e.y]).exp() * (b * d).exp_m1();
        acc.add(e.weight * da * db);
    }
    acc.value()
}

/// `𝓔(e^{u}, u)`: the `s = 1` endpoint of the powers family.
pub fn dirichlet_exp_log<S: Semigroup + ?Sized>(sg: &S, u: &[f64]) -> f64 {
    let mut acc = Accumulator::new();
    for e in sg.edges() {
        let d = u[e.x] - u[e.y];
        acc.add(e.weight * u[e.y].exp() * d.exp_m1() * d);
    }
    acc.value()
}

#[derive(Debug)]
struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of the symmetrized matrix, as columns.
    vectors: DMatrix<f64>,
}

/// A validated explicit generator.
#[derive(Debug)]
pub struct Generator {
    space: Arc<ProbabilitySpace>,
    diag: Vec<f64>,
    /// Off-diagonal entries per row, sorted by column.
    rows: Vec<Vec<(usize, f64)>>,
    edges: Vec<Edge>,
    scale: f64,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for Generator {
    fn clone(&self) -> Self {
        Self {
            space: self.space.clone(),
            diag: self.diag.clone(),
            rows: self.rows.clone(),
            edges: self.edges.clone(),
            scale: self.scale,
            spectrum: OnceLock::new(),
        }
    }
}

/// Checks the four generator axioms on a dense candidate matrix.
pub fn validate_generator(l: &DMatrix<f64>, space: Arc<ProbabilitySpace>) -> Result<Generator> {
    let n = space.len();
    if l.nrows() != n || l.ncols() != n {
        return domain(format!(
            "matrix is {}x{} but the space has {n} points",
            l.nrows(),
            l.ncols()
        ));
    }
    if l.iter().any(|v| !v.is_finite()) {
        return domain("matrix entries must be finite");
    }
    let mut triplets = Vec::new();
    let mut diag = vec![0.0; n];
    for x in 0..n {
        diag[x] = l[(x, x)];
        for y in 0..n {
            if x != y && l[(x, y)] != 0.0 {
                triplets.push((x, y, l[(x, y)]));
            }
        }
    }
    Generator::assemble(space, diag, triplets)
}

impl Generator {
    /// Builds from jump rates `(x, y, rate)`, `x ≠ y`; the diagonal is implied.
    pub fn from_rates(space: Arc<ProbabilitySpace>, rates: &[(usize, usize, f64)]) -> Result<Self> {
        let n = space.len();
        let mut diag = vec![0.0; n];
        let mut triplets = Vec::with_capacity(rates.len());
        for &(x, y, r) in rates {
            if x >= n || y >= n {
                return domain(format!("rate ({x}, {y}) outside a {n}-point space"));
            }
            if x == y || r == 0.0 {
                continue;
            }
            diag[x] += r;
            triplets.push((x, y, -r));
        }
        Self::assemble(space, diag, triplets)
    }

    /// `Id − 𝔼_μ`.
    pub fn simple(space: Arc<ProbabilitySpace>) -> Self {
        let n = space.len();
        let mu = space.mu().to_vec();
        let diag = mu.iter().map(|m| 1.0 - m).collect();
        let mut triplets = Vec::with_capacity(n * n.saturating_sub(1));
        for x in 0..n {
            for (y, &m) in mu.iter().enumerate() {
                if x != y {
                    triplets.push((x, y, -m));
                }
            }
        }
        Self::assemble(space, diag, triplets).expect("the simple generator satisfies every axiom")
    }

    pub fn zero(space: Arc<ProbabilitySpace>) -> Self {
        let n = space.len();
        Self::assemble(space, vec![0.0; n], vec![]).expect("zero generator is valid")
    }

    fn assemble(
        space: Arc<ProbabilitySpace>,
        diag: Vec<f64>,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let n = space.len();
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (x, y, v) in triplets {
            match rows[x].last_mut() {
                Some(last) if last.0 == y => last.1 += v,
                _ => rows[x].push((y, v)),
            }
        }
        let maxabs = diag
            .iter()
            .map(|v| v.abs())
            .chain(rows.iter().flatten().map(|(_, v)| v.abs()))
            .fold(0.0f64, f64::max);
        let scale = maxabs.max(1.0);
        let tol = AXIOM_TOL * scale;
        let mu = space.mu();

        let mut violations = Vec::new();
        let mut worst = |axiom: Axiom, mag: f64, loc: (usize, usize)| {
            if let Some(v) = violations
                .iter_mut()
                .find(|v: &&mut AxiomViolation| v.axiom == axiom)
            {
                if mag > v.magnitude {
                    v.magnitude = mag;
                    v.location = loc;
                }
            } else {
                violations.push(AxiomViolation {
                    axiom,
                    magnitude: mag,
                    location: loc,
                });
            }
        };

        for x in 0..n {
            let s = ksum(std::iter::once(diag[x]).chain(rows[x].iter().map(|(_, v)| *v)));
            if s.abs() > tol {
                worst(Axiom::ConstantAnnihilation, s.abs(), (x, x));
            }
            for &(y, v) in &rows[x] {
                if v > tol {
                    worst(Axiom::MaximumPrinciple, v, (x, y));
                }
                let back = lookup(&rows[y], x);
                let d = (mu[x] * v - mu[y] * back).abs();
                if d > tol {
                    worst(Axiom::SelfAdjoint, d, (x, y));
                }
            }
            if diag[x] < -tol {
                // a negative diagonal forces a positive row entry or a nonzero row sum
                worst(Axiom::MaximumPrinciple, -diag[x], (x, x));
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }

        let mut edges = Vec::new();
        for x in 0..n {
            for &(y, v) in &rows[x] {
                if y > x {
                    let back = lookup(&rows[y], x);
                    let w = -0.5 * (mu[x] * v + mu[y] * back);
                    edges.push(Edge { x, y, weight: w });
                }
            }
            // entries present only in the transposed position
            for &(y, _) in &rows[x] {
                if y < x && lookup(&rows[y], x) == 0.0 {
                    let v = lookup(&rows[x], y);
                    edges.push(Edge {
                        x: y,
                        y: x,
                        weight: -0.5 * mu[x] * v,
                    });
                }
            }
        }
        edges.sort_by_key(|a| (a.x, a.y));

        let g = Self {
            space,
            diag,
            rows,
            edges,
            scale,
            spectrum: OnceLock::new(),
        };
        if n <= EAGER_SPECTRUM {
            let sp = g.compute_spectrum();
            if let Some(&lo) = sp.eigenvalues.first() {
                if lo < -tol {
                    return Err(Error::Validation(vec![AxiomViolation {
                        axiom: Axiom::PositiveSemidefinite,
                        magnitude: -lo,
                        location: (0, 0),
                    }]));
                }
            }
            let _ = g.spectrum.set(sp);
        }
        Ok(g)
    }

    fn compute_spectrum(&self) -> Spectrum {
        let n = self.len();
        let mu = self.space.mu();
        let mut s = DMatrix::<f64>::zeros(n, n);
        for x in 0..n {
            s[(x, x)] = self.diag[x];
            for &(y, v) in &self.rows[x] {
                // D^{1/2} L D^{-1/2}; ratio formed first so tiny masses do not overflow
                s[(x, y)] += 0.5 * v * (mu[x] / mu[y]).sqrt();
                s[(y, x)] += 0.5 * v * (mu[x] / mu[y]).sqrt();
            }
        }
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let tol = AXIOM_TOL * self.scale;
        let eigenvalues = order
            .iter()
            .map(|&k| {
                let v = eig.eigenvalues[k];
                if (-tol..0.0).contains(&v) {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        let mut vectors = DMatrix::<f64>::zeros(n, n);
        for (j, &k) in order.iter().enumerate() {
            vectors.set_column(j, &eig.eigenvectors.column(k));
        }
        Spectrum {
            eigenvalues,
            vectors,
        }
    }

    fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        if self.len() > DENSE_LIMIT {
            return Err(Error::TooLarge {
                states: self.len(),
                cap: DENSE_LIMIT,
            });
        }
        Ok(self.spectrum.get_or_init(|| self.compute_spectrum()))
    }

    /// Eigenvalues in ascending order, tiny negatives clamped to zero.
    pub fn eigenvalues(&self) -> Result<&[f64]> {
        Ok(&self.spectrum()?.eigenvalues)
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        if x == y {
            self.diag[x]
        } else {
            lookup(&self.rows[x], y)
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for x in 0..n {
            m[(x, x)] = self.diag[x];
            for &(y, v) in &self.rows[x] {
                m[(x, y)] = v;
            }
        }
        m
    }

    /// Off-diagonal jump rates `(x, y, rate)`.
    pub fn rates(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, v) in row {
                out.push((x, y, -v));
            }
        }
        out
    }

    /// Same chain run at speed `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return domain("rate scale must be a nonnegative finite number");
        }
        let rates: Vec<_> = self
            .rates()
            .into_iter()
            .map(|(x, y, r)| (x, y, c * r))
            .collect();
        Self::from_rates(self.space.clone(), &rates)
    }

    /// Dense matrix of `T_t` for any real `t`: `(T_t f)(x) = Σ_y P[x][y] f(y)`.
    pub fn heat_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if t < 0.0 {
            return domain("heat time must be nonnegative");
        }
        self.heat_matrix_any(t)
    }

    fn heat_matrix_any(&self, t: f64) -> Result<DMatrix<f64>> {
        let sp = self.spectrum()?;
        let n = self.len();
        let mu = self.space.mu();
        let mut scaled = sp.vectors.clone();
        for (j, lam) in sp.eigenvalues.iter().enumerate() {
            let e = (-t * lam).exp();
            scaled.column_mut(j).scale_mut(e);
        }
        let mut p = &scaled * sp.vectors.transpose();
        for x in 0..n {
            for y in 0..n {
                p[(x, y)] *= (mu[y] / mu[x]).sqrt();
            }
        }
        Ok(p)
    }

    /// Matrix-product evaluation `Σ_x μ_x f(x) (L g)(x)`.
    pub fn dirichlet_matrix(&self, f: &[f64], g: &[f64]) -> f64 {
        let lg = self.apply_generator(g);
        let mu = self.space.mu();
        ksum((0..self.len()).map(|x| mu[x] * f[x] * lg[x]))
    }
}

fn lookup(row: &[(usize, f64)], y: usize) -> f64 {
    match row.binary_search_by(|e| e.0.cmp(&y)) {
        Ok(i) => row[i].1,
        Err(_) => 0.0,
    }
}

impl Semigroup for Generator {
    fn space(&self) -> &Arc<ProbabilitySpace> {
        &self.space
    }

    fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                let mut acc = Accumulator::new();
                acc.add(self.diag[x] * f[x]);
                for &(y, v) in &self.rows[x] {
                    acc.add(v * f[y]);
                }
                acc.value()
            })
            .collect()
    }

    fn heat(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if t < 0.0 {
            return domain("heat time must be nonnegative");
        }
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        let sp = self.spectrum()?;
        let n = self.len();
        let sq: Vec<f64> = self.space.mu().iter().map(|m| m.sqrt()).collect();
        let h: Vec<f64> = (0..n).map(|x| sq[x] * f[x]).collect();
        let mut c = vec![0.0; n];
        for (j, cj) in c.iter_mut().enumerate() {
            let col = sp.vectors.column(j);
            *cj = ksum((0..n).map(|x| col[x] * h[x])) * (-t * sp.eigenvalues[j]).exp();
        }
        Ok((0..n)
            .map(|x| ksum((0..n).map(|j| sp.vectors[(x, j)] * c[j])) / sq[x])
            .collect())
    }

    fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn spectral_gap(&self) -> Result<SpectralGap> {
        let ev = self.eigenvalues()?;
        Ok(gap_from_sorted(ev))
    }

    fn gap_vector(&self) -> Result<Option<Vec<f64>>> {
        let sp = self.spectrum()?;
        if self.len() < 2 {
            return Ok(None);
        }
        let mu = self.space.mu();
        let col = sp.vectors.column(1);
        Ok(Some(
            (0..self.len()).map(|x| col[x] / mu[x].sqrt()).collect(),
        ))
    }
}

fn gap_from_sorted(ev: &[f64]) -> SpectralGap {
    if ev.len() < 2 {
        return SpectralGap {
            value: f64::INFINITY,
            reducible: false,
        };
    }
    let v = ev[1];
    if v <= 1e-10 {
        SpectralGap {
            value: v.max(0.0),
            reducible: true,
        }
    } else {
        SpectralGap {
            value: v,
            reducible: false,
        }
    }
}

/// Dense identity `Id − 𝔼_μ`.
pub fn simple_generator(space: Arc<ProbabilitySpace>) -> Generator {
    Generator::simple(space)
}

/// Checked heat action on a function object.
pub fn heat_operator<S: Semigroup + ?Sized>(
    sg: &S,
    t: f64,
    f: &RealFunction,
) -> Result<RealFunction> {
    check_same_space(sg, f)?;
    RealFunction::new(f.space().clone(), sg.heat(t, f.values())?)
}

pub fn dirichlet_form<S: Semigroup + ?Sized>(
    sg: &S,
    f: &RealFunction,
    g: &RealFunction,
) -> Result<f64> {
    check_same_space(sg, f)?;
    check_same_space(sg, g)?;
    Ok(sg.dirichlet(f.values(), g.values()))
}

fn check_same_space<S: Semigroup + ?Sized>(sg: &S, f: &RealFunction) -> Result<()> {
    if f.values().len() != sg.len() {
        return domain(format!(
            "function has {} values but the generator acts on {} states",
            f.values().len(),
            sg.len()
        ));
    }
    Ok(())
}

/// Kronecker sum of factor generators, each optionally run at its own rate.
#[derive(Debug)]
pub struct TensorGenerator {
    factors: Vec<Arc<Generator>>,
    rates: Vec<f64>,
    space: Arc<ProbabilitySpace>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    edges: OnceLock<Vec<Edge>>,
}

impl TensorGenerator {
    pub fn new(factors: Vec<Arc<Generator>>, rates: Option<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return domain("a tensor product needs at least one factor");
        }
        let rates = rates.unwrap_or_else(|| vec![1.0; factors.len()]);
        if rates.len() != factors.len() {
            return domain("one rate per factor is required");
        }
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return domain("factor rates must be nonnegative and finite");
        }
        let spaces: Vec<&ProbabilitySpace> = factors.iter().map(|f| f.space().as_ref()).collect();
        let space = Arc::new(ProbabilitySpace::product(&spaces)?);
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(Self {
            factors,
            rates,
            space,
            dims,
            strides,
            edges: OnceLock::new(),
        })
    }

    /// `n` copies of one factor, each at rate `rate`.
    pub fn power(factor: Arc<Generator>, n: usize, rate: f64) -> Result<Self> {
        Self::new(vec![factor; n], Some(vec![rate; n]))
    }

    pub fn factors(&self) -> &[Arc<Generator>] {
        &self.factors
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Applies a per-axis linear map given by `op(input_fibre, output_fibre)`.
    fn apply_axis(&self, x: &[f64], axis: usize, op: &dyn Fn(&[f64], &mut [f64])) -> Vec<f64> {
        let d = self.dims[axis];
        let s = self.strides[axis];
        let block = d * s;
        let mut out = vec![0.0; x.len()];
        let mut fin = vec![0.0; d];
        let mut fout = vec![0.0; d];
        for base in (0..x.len()).step_by(block) {
            for inner in 0..s {
                for k in 0..d {
                    fin[k] = x[base + k * s + inner];
                }
                op(&fin, &mut fout);
                for k in 0..d {
                    out[base + k * s + inner] = fout[k];
                }
            }
        }
        out
    }

    /// Explicit generator, refused above the materialization cap.
    pub fn materialize(&self) -> Result<Generator> {
        let n = self.len();
        if n > MATERIALIZE_CAP {
            return Err(Error::TooLarge {
                states: n,
                cap: MATERIALIZE_CAP,
            });
        }
        let mut rates = Vec::new();
        for (axis, f) in self.factors.iter().enumerate() {
            let r = self.rates[axis];
            let s = self.strides[axis];
            let d = self.dims[axis];
            for (a, b, rate) in f.rates() {
                for base in (0..n).step_by(d * s) {
                    for inner in 0..s {
                        rates.push((base + a * s + inner, base + b * s + inner, r * rate));
                    }
                }
            }
        }
        Generator::from_rates(self.space.clone(), &rates)
    }
}

impl Semigroup for TensorGenerator {
    fn space(&self) -> &Arc<ProbabilitySpace> {
        &self.space
    }

    fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; f.len()];
        for (axis, g) in self.factors.iter().enumerate() {
            let r = self.rates[axis];
            if r == 0.0 {
                continue;
            }
            let part = self.apply_axis(f, axis, &|i, o| {
                o.copy_from_slice(&g.apply_generator(i));
            });
            for (t, p) in total.iter_mut().zip(part) {
                *t += r * p;
            }
        }
        total
    }

    fn heat(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if t < 0.0 {
            return domain("heat time must be nonnegative");
        }
        let mut v = f.to_vec();
        for (axis, g) in self.factors.iter().enumerate() {
            let tt = t * self.rates[axis];
            if tt == 0.0 {
                continue;
            }
            let p = g.heat_matrix(tt)?;
            v = self.apply_axis(&v, axis, &|i, o| {
                for (x, ox) in o.iter_mut().enumerate() {
                    *ox = ksum(i.iter().enumerate().map(|(y, iy)| p[(x, y)] * iy));
                }
            });
        }
        Ok(v)
    }

    fn edges(&self) -> &[Edge] {
        self.edges.get_or_init(|| {
            let n = self.len();
            let mu = self.space.mu();
            let mut out = Vec::new();
            for (axis, f) in self.factors.iter().enumerate() {
                let r = self.rates[axis];
                if r == 0.0 {
                    continue;
                }
                let s = self.strides[axis];
                let d = self.dims[axis];
                let fmu = f.space().mu();
                for e in f.edges() {
                    for base in (0..n).step_by(d * s) {
                        for inner in 0..s {
                            let x = base + e.x * s + inner;
                            let y = base + e.y * s + inner;
                            out.push(Edge {
                                x,
                                y,
                                weight: r * e.weight * mu[x] / fmu[e.x],
                            });
                        }
                    }
                }
            }
            out
        })
    }

    fn spectral_gap(&self) -> Result<SpectralGap> {
        let mut best = SpectralGap {
            value: f64::INFINITY,
            reducible: false,
        };
        for (f, r) in self.factors.iter().zip(&self.rates) {
            if f.len() < 2 {
                continue;
            }
            let g = f.spectral_gap()?;
            let v = r * g.value;
            if v < best.value {
                best.value = v;
            }
            best.reducible |= g.reducible || *r == 0.0;
        }
        if best.value <= 1e-10 {
            best.reducible = true;
        }
        Ok(best)
    }

    fn gap_vector(&self) -> Result<Option<Vec<f64>>> {
        let mut arg = None;
        let mut best = f64::INFINITY;
        for (axis, (f, r)) in self.factors.iter().zip(&self.rates).enumerate() {
            if f.len() < 2 {
                continue;
            }
            let v = r * f.spectral_gap()?.value;
            if v < best {
                best = v;
                arg = Some(axis);
            }
        }
        let Some(axis) = arg else { return Ok(None) };
        let phi = self.factors[axis]
            .gap_vector()?
            .expect("factor has two or more states");
        let s = self.strides[axis];
        let d = self.dims[axis];
        Ok(Some((0..self.len()).map(|x| phi[(x / s) % d]).collect()))
    }
}

/// A row-stochastic kernel from a probability space to itself.
#[derive(Debug, Clone)]
pub struct MarkovKernel {
    space: Arc<ProbabilitySpace>,
    k: DMatrix<f64>,
    nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KernelAlpha {
    pub alpha: f64,
    pub alpha_star: f64,
}

#[derive(Debug, Clone)]
pub struct KernelDecomposition {
    pub s: MarkovKernel,
    pub alpha_star: f64,
}

impl MarkovKernel {
    pub fn new(space: Arc<ProbabilitySpace>, k: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if k.nrows() != n || k.ncols() != n {
            return Err(Error::Kernel(format!(
                "matrix is {}x{} but the space has {n} points",
                k.nrows(),
                k.ncols()
            )));
        }
        for x in 0..n {
            for y in 0..n {
                let v = k[(x, y)];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Kernel(format!(
                        "entry ({x}, {y}) = {v} is not a probability"
                    )));
                }
            }
            let s = ksum((0..n).map(|y| k[(x, y)]));
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Kernel(format!("row {x} sums to {s}")));
            }
        }
        let mu = space.mu();
        let nu = (0..n)
            .map(|y| ksum((0..n).map(|x| mu[x] * k[(x, y)])))
            .collect();
        Ok(Self { space, k, nu })
    }

    pub fn space(&self) -> &Arc<ProbabilitySpace> {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }
}

pub fn kernel_alpha(k: &MarkovKernel) -> KernelAlpha {
    let n = k.len();
    let mut alpha = f64::INFINITY;
    for y in 0..n {
        if k.nu[y] > 0.0 {
            for x in 0..n {
                alpha = alpha.min(k.k[(x, y)] / k.nu[y]);
            }
        }
    }
    let alpha = alpha.clamp(0.0, 1.0);
    let alpha_star = if alpha >= 1.0 {
        f64::INFINITY
    } else {
        -(-alpha).ln_1p()
    };
    KernelAlpha { alpha, alpha_star }
}

/// Splits `K = T_{α*} S` with `T` the simple semigroup on the source space.
pub fn kernel_decompose(k: &MarkovKernel) -> Result<KernelDecomposition> {
    let KernelAlpha { alpha, alpha_star } = kernel_alpha(k);
    if alpha <= 0.0 {
        return Err(Error::DecompositionImpossible);
    }
    if alpha >= 1.0 {
        return Err(Error::DegenerateDecomposition);
    }
    let s = simple_heat_unchecked(k.space.mu(), -alpha_star) * &k.k;
    let n = k.len();
    let mut s = s;
    for x in 0..n {
        for y in 0..n {
            let v = s[(x, y)];
            if v < 0.0 {
                if v < -1e-12 {
                    return Err(Error::Kernel(format!(
                        "reduced kernel entry ({x}, {y}) = {v} is negative"
                    )));
                }
                s[(x, y)] = 0.0;
            }
        }
        let row = ksum((0..n).map(|y| s[(x, y)]));
        for y in 0..n {
            s[(x, y)] /= row;
        }
    }
    Ok(KernelDecomposition {
        s: MarkovKernel::new(k.space.clone(), s)?,
        alpha_star,
    })
}

/// `T_t = e^{−t} Id + (1 − e^{−t}) 1μᵀ` for any real `t`, including negative.
fn simple_heat_unchecked(mu: &[f64], t: f64) -> DMatrix<f64> {
    let n = mu.len();
    let e = (-t).exp();
    DMatrix::from_fn(
        n,
        n,
        |x, y| if x == y { e } else { 0.0 } + (1.0 - e) * mu[y],
    )
}

/// `T_t` of the simple semigroup as a kernel, for `t >= 0`.
pub fn simple_heat_kernel(space: Arc<ProbabilitySpace>, t: f64) -> Result<MarkovKernel> {
    if t < 0.0 {
        return domain("heat time must be nonnegative");
    }
    let m = simple_heat_unchecked(space.mu(), t);
    MarkovKernel::new(space, m)
}
