//! Finite stochastic maps: column-stochastic matrices, their composition
//! and tensor product, Bayesian inversion, and Jeffrey updating.

use crate::error::{Error, Result};

const ENTRY_CLAMP: f64 = 1e-12;
const COLUMN_SUM_TOL: f64 = 1e-10;

/// A stochastic map from a set of size `n_in` to a set of size `n_out`,
/// stored as a column-stochastic matrix: `entry(y, x)` is the probability
/// of output `y` given input `x`, and every column sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n_out: usize,
    n_in: usize,
    /// Row-major storage, `entries[y * n_in + x]`.
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Build from rows, clamping tiny negatives to 0 and renormalizing each
    /// column when its sum is within `1e-10` of 1.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_out = rows.len();
        if n_out == 0 {
            return Err(Error::InvalidStochasticMatrix("no rows".into()));
        }
        let n_in = rows[0].len();
        if n_in == 0 {
            return Err(Error::InvalidStochasticMatrix("no columns".into()));
        }
        if rows.iter().any(|r| r.len() != n_in) {
            return Err(Error::InvalidStochasticMatrix("ragged rows".into()));
        }
        let mut entries = vec![0.0; n_out * n_in];
        for (y, row) in rows.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v < -ENTRY_CLAMP {
                    return Err(Error::InvalidStochasticMatrix(format!(
                        "entry ({y},{x}) is negative: {v}"
                    )));
                }
                entries[y * n_in + x] = v.max(0.0);
            }
        }
        for x in 0..n_in {
            let sum: f64 = (0..n_out).map(|y| entries[y * n_in + x]).sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::InvalidStochasticMatrix(format!(
                    "column {x} sums to {sum}"
                )));
            }
            for y in 0..n_out {
                entries[y * n_in + x] /= sum;
            }
        }
        Ok(StochasticMatrix { n_out, n_in, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        StochasticMatrix { n_out: n, n_in: n, entries }
    }

    /// The stochastic map induced by a function `g: {0,..,n_in-1} -> {0,..,n_out-1}`.
    pub fn deterministic(n_out: usize, g: &[usize]) -> Result<Self> {
        if g.iter().any(|&y| y >= n_out) {
            return Err(Error::InvalidStochasticMatrix("function value out of range".into()));
        }
        let n_in = g.len();
        let mut entries = vec![0.0; n_out * n_in];
        for (x, &y) in g.iter().enumerate() {
            entries[y * n_in + x] = 1.0;
        }
        Ok(StochasticMatrix { n_out, n_in, entries })
    }

    /// The swap isomorphism `X × X' -> X' × X` on row-major pair indices.
    pub fn swap(n: usize, n_prime: usize) -> Self {
        let size = n * n_prime;
        let mut entries = vec![0.0; size * size];
        for x in 0..n {
            for xp in 0..n_prime {
                let from = x * n_prime + xp;
                let to = xp * n + x;
                entries[to * size + from] = 1.0;
            }
        }
        StochasticMatrix { n_out: size, n_in: size, entries }
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn entry(&self, y: usize, x: usize) -> f64 {
        self.entries[y * self.n_in + x]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_out)
            .map(|y| (0..self.n_in).map(|x| self.entry(y, x)).collect())
            .collect()
    }

    /// Composite `self ∘ f` by matrix multiplication (Chapman–Kolmogorov).
    pub fn compose(&self, f: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.n_in != f.n_out {
            return Err(Error::DimensionMismatch(format!(
                "compose: inner dims {} vs {}",
                self.n_in, f.n_out
            )));
        }
        let mut entries = vec![0.0; self.n_out * f.n_in];
        for z in 0..self.n_out {
            for x in 0..f.n_in {
                let mut acc = 0.0;
                for y in 0..self.n_in {
                    acc += self.entry(z, y) * f.entry(y, x);
                }
                entries[z * f.n_in + x] = acc;
            }
        }
        Ok(StochasticMatrix {
            n_out: self.n_out,
            n_in: f.n_in,
            entries,
        })
    }

    /// Monoidal product `(f ⊗ f')_{(y,y'),(x,x')} = f_{yx} f'_{y'x'}` with
    /// row-major pair indices.
    pub fn tensor(&self, other: &StochasticMatrix) -> StochasticMatrix {
        let n_out = self.n_out * other.n_out;
        let n_in = self.n_in * other.n_in;
        let mut entries = vec![0.0; n_out * n_in];
        for y in 0..self.n_out {
            for yp in 0..other.n_out {
                for x in 0..self.n_in {
                    for xp in 0..other.n_in {
                        entries[(y * other.n_out + yp) * n_in + (x * other.n_in + xp)] =
                            self.entry(y, x) * other.entry(yp, xp);
                    }
                }
            }
        }
        StochasticMatrix { n_out, n_in, entries }
    }

    /// Pushforward of a distribution: `self ∘ p`.
    pub fn pushforward(&self, p: &ProbVector) -> Result<ProbVector> {
        if self.n_in != p.len() {
            return Err(Error::DimensionMismatch(format!(
                "pushforward: map takes {} inputs, distribution has {}",
                self.n_in,
                p.len()
            )));
        }
        let values: Vec<f64> = (0..self.n_out)
            .map(|y| (0..self.n_in).map(|x| self.entry(y, x) * p.get(x)).sum())
            .collect();
        ProbVector::new(values)
    }
}

/// A probability distribution on a finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidProbVector("empty distribution".into()));
        }
        let mut out = Vec::with_capacity(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            if v < -ENTRY_CLAMP {
                return Err(Error::InvalidProbVector(format!("entry {i} is negative: {v}")));
            }
            out.push(v.max(0.0));
        }
        let sum: f64 = out.iter().sum();
        if (sum - 1.0).abs() > COLUMN_SUM_TOL {
            return Err(Error::InvalidProbVector(format!("entries sum to {sum}")));
        }
        for v in out.iter_mut() {
            *v /= sum;
        }
        Ok(ProbVector { entries: out })
    }

    pub fn dirac(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::InvalidProbVector(format!("dirac point {at} out of range {n}")));
        }
        let mut entries = vec![0.0; n];
        entries[at] = 1.0;
        Ok(ProbVector { entries })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        ProbVector::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.entries[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.entries
    }

    /// True when every entry is strictly positive.
    pub fn is_faithful(&self) -> bool {
        self.entries.iter().all(|&v| v > 0.0)
    }

    pub fn tensor(&self, other: &ProbVector) -> ProbVector {
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for &a in &self.entries {
            for &b in &other.entries {
                entries.push(a * b);
            }
        }
        ProbVector { entries }
    }

    pub fn max_abs_diff(&self, other: &ProbVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Bayesian inverse of `f` with respect to the prior `p`:
/// `f̄_{xy} = f_{yx} p_x / q_y` where `q = f ∘ p`.
///
/// Columns at outputs with zero prediction (`q_y = 0`) are filled with the
/// uniform distribution on the support of `p`, matching the quantum
/// convention under the classical embedding.
pub fn bayes_inverse(f: &StochasticMatrix, p: &ProbVector) -> Result<StochasticMatrix> {
    let q = f.pushforward(p)?;
    let n_out = f.n_in(); // the inverse runs Y -> X
    let n_in = f.n_out();
    let support: Vec<usize> = (0..p.len()).filter(|&x| p.get(x) > 0.0).collect();
    let mut entries = vec![0.0; n_out * n_in];
    for y in 0..n_in {
        if q.get(y) > 0.0 {
            for x in 0..n_out {
                entries[x * n_in + y] = f.entry(y, x) * p.get(x) / q.get(y);
            }
        } else {
            let w = 1.0 / support.len() as f64;
            for &x in &support {
                entries[x * n_in + y] = w;
            }
        }
    }
    Ok(StochasticMatrix { n_out, n_in, entries })
}

/// Jeffrey's probability kinematics: push soft evidence `e` on the output
/// backwards along the Bayesian inverse, returning `f̄ ∘ e`.
///
/// Requires `e` to be supported where the prediction `q = f ∘ p` is.
pub fn jeffrey_update(
    f: &StochasticMatrix,
    p: &ProbVector,
    e: &ProbVector,
) -> Result<ProbVector> {
    let q = f.pushforward(p)?;
    if e.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "evidence has {} entries, prediction has {}",
            e.len(),
            q.len()
        )));
    }
    if (0..e.len()).any(|y| e.get(y) > 0.0 && q.get(y) == 0.0) {
        return Err(Error::EvidenceNotAbsolutelyContinuous);
    }
    let inv = bayes_inverse(f, p)?;
    inv.pushforward(e)
}
