//! The finite-level Parisi functional.
//!
//! With independent Gaussians `z_0, …, z_k` of variances
//! `ξ'(q_{j+1}) - ξ'(q_j)`, the recursion is
//!
//! ```text
//! X_{k+1} = log 2 + log ch(z_0 + … + z_k)
//! X_l     = (1/m_l) log E_l exp(m_l X_{l+1})      (X_l = E_l X_{l+1} when m_l = 0)
//! 𝒫ₖ      = X_0 - ½ Σ_{j=1..k} m_j (θ(q_{j+1}) - θ(q_j))
//! ```
//!
//! `X_l` only depends on the partial sum `z_0 + … + z_{l-1}`, so each `E_l` is a
//! one-dimensional Gaussian integral evaluated with the quadrature rule scaled
//! by the level's standard deviation. The additive `log 2` makes the zero
//! coupling value equal to the free energy `log 2` of free spins.

use std::f64::consts::LN_2;

use crate::{Error, MixtureSpec, QuadratureGrid, Result};

/// Below this an `m_l` is treated as zero (plain expectation branch).
pub const M_ZERO_THRESHOLD: f64 = 1e-8;

/// Replica symmetry breaking parameters `0 ≤ m_1 ≤ … ≤ m_k ≤ 1` and
/// `0 ≤ q_1 ≤ … ≤ q_k ≤ 1`. The conventions `m_0 = 0`, `q_0 = 0`,
/// `q_{k+1} = 1` are implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct RsbParams {
    m: Vec<f64>,
    q: Vec<f64>,
}

impl RsbParams {
    pub fn new(m: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if m.len() != q.len() {
            return Err(Error::InvalidParams(format!(
                "m has {} entries but q has {}",
                m.len(),
                q.len()
            )));
        }
        check_monotone("m", &m)?;
        check_monotone("q", &q)?;
        Ok(Self { m, q })
    }

    /// One level: `m = (m₁)`, `q = (q₁)`.
    pub fn single(m1: f64, q1: f64) -> Result<Self> {
        Self::new(vec![m1], vec![q1])
    }

    pub fn k(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `m_l` for `l = 0..=k`, with `m_0 = 0`.
    pub fn m_at(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.m[l - 1]
        }
    }

    /// `q_j` for `j = 0..=k+1`, with `q_0 = 0` and `q_{k+1} = 1`.
    pub fn q_at(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else if j == self.k() + 1 {
            1.0
        } else {
            self.q[j - 1]
        }
    }

    /// Inserts a copy of level `j` (1-based, `1..=k`) right after it, repeating
    /// `q_j`. The new level has zero variance, so the functional is unchanged.
    pub fn duplicate_q(&self, j: usize) -> Result<Self> {
        self.check_level(j)?;
        let mut m = self.m.clone();
        let mut q = self.q.clone();
        m.insert(j, self.m[j - 1]);
        q.insert(j, self.q[j - 1]);
        Self::new(m, q)
    }

    /// Splits level `j` (1-based) in two levels sharing `m_j`, with the new
    /// boundary `q_new` in `[q_j, q_{j+1}]`. Consecutive Gaussian integrals
    /// with the same `m` combine, so the functional is unchanged.
    pub fn duplicate_m(&self, j: usize, q_new: f64) -> Result<Self> {
        self.check_level(j)?;
        if !(self.q_at(j) <= q_new && q_new <= self.q_at(j + 1)) {
            return Err(Error::InvalidParams(format!(
                "split point {q_new} outside [{}, {}]",
                self.q_at(j),
                self.q_at(j + 1)
            )));
        }
        let mut m = self.m.clone();
        let mut q = self.q.clone();
        m.insert(j, self.m[j - 1]);
        q.insert(j, q_new);
        Self::new(m, q)
    }

    fn check_level(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.k() {
            return Err(Error::InvalidParams(format!("level {j} outside 1..={}", self.k())));
        }
        Ok(())
    }
}

fn check_monotone(name: &str, xs: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() || x < prev || x > 1.0 {
            return Err(Error::InvalidParams(format!(
                "{name} must satisfy 0 <= {name}_1 <= ... <= {name}_k <= 1; entry {} is {x}",
                i + 1
            )));
        }
        prev = x;
    }
    Ok(())
}

/// `ξ'(q_{j+1}) - ξ'(q_j)` for `j = 0..=k`, summing to `ξ'(1)`.
pub fn variance_increments(spec: &MixtureSpec, params: &RsbParams) -> Vec<f64> {
    (0..=params.k())
        .map(|j| {
            let hi = spec.xi_prime_unchecked(params.q_at(j + 1));
            // ξ'(q_0) is read as 0 so that the increments telescope to ξ'(1); with a
            // p = 1 term, ξ'(0) = β₁² is the variance of the field shared by every leaf.
            let lo = if j == 0 { 0.0 } else { spec.xi_prime_unchecked(params.q_at(j)) };
            (hi - lo).max(0.0)
        })
        .collect()
}

/// Numerically stable `log ch x`.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

struct Recursion<'a> {
    sds: Vec<f64>,
    m: Vec<f64>,
    grid: &'a QuadratureGrid,
    scratch: Vec<Vec<f64>>,
}

impl Recursion<'_> {
    /// `X_l` as a function of the partial sum `s = z_0 + … + z_{l-1}`.
    fn level(&mut self, l: usize, s: f64) -> Result<f64> {
        let k = self.m.len() - 1;
        if l == k + 1 {
            return Ok(LN_2 + log_cosh(s));
        }
        let sd = self.sds[l];
        if sd == 0.0 {
            return self.level(l + 1, s);
        }
        let n = self.grid.nodes_per_level();
        let mut values = std::mem::take(&mut self.scratch[l]);
        for i in 0..n {
            values[i] = self.level(l + 1, s + sd * self.grid.nodes()[i])?;
        }
        let weights = self.grid.weights();
        let m = self.m[l];
        let out = if m < M_ZERO_THRESHOLD {
            values.iter().zip(weights).map(|(v, w)| v * w).sum()
        } else {
            let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let sum: f64 = values
                .iter()
                .zip(weights)
                .map(|(v, w)| w * (m * (v - max)).exp())
                .sum();
            max + sum.ln() / m
        };
        self.scratch[l] = values;
        if !out.is_finite() {
            return Err(Error::QuadratureOverflow { level: l });
        }
        Ok(out)
    }
}

/// `X_0(m⃗, q⃗)`, including the additive `log 2`.
pub fn evaluate_x0(spec: &MixtureSpec, params: &RsbParams, grid: &QuadratureGrid) -> Result<f64> {
    let sds = variance_increments(spec, params).into_iter().map(f64::sqrt).collect();
    let m = (0..=params.k()).map(|l| params.m_at(l)).collect();
    let mut rec = Recursion {
        sds,
        m,
        grid,
        scratch: vec![vec![0.0; grid.nodes_per_level()]; params.k() + 1],
    };
    rec.level(0, 0.0)
}

/// `½ Σ_{j=1..k} m_j (θ(q_{j+1}) - θ(q_j))`.
pub fn theta_correction(spec: &MixtureSpec, params: &RsbParams) -> f64 {
    0.5 * (1..=params.k())
        .map(|j| params.m_at(j) * (spec.theta_unchecked(params.q_at(j + 1)) - spec.theta_unchecked(params.q_at(j))))
        .sum::<f64>()
}

/// `𝒫ₖ(m⃗, q⃗) = X_0 - ½ Σ m_j (θ(q_{j+1}) - θ(q_j))`.
pub fn evaluate_parisi(spec: &MixtureSpec, params: &RsbParams, grid: &QuadratureGrid) -> Result<f64> {
    Ok(evaluate_x0(spec, params, grid)? - theta_correction(spec, params))
}
