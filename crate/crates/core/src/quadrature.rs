//! Gauss–Hermite rules for expectations against the standard Gaussian.
//!
//! Nodes come from the Golub–Welsch eigenproblem for the orthonormal
//! (probabilists') Hermite recurrence and are then polished by Newton steps on
//! `ψ_n`; weights are `1 / Σ_{j<n} ψ_j(x)²`, which is accurate to roundoff.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 40;

/// Largest rule we build; beyond this the weights underflow to zero.
pub const MAX_NODES: usize = 200;

/// A quadrature rule with `E f(g) ≈ Σ_i w_i f(x_i)` for `g ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn gauss_hermite(nodes_per_level: usize) -> Result<Self> {
        if nodes_per_level == 0 || nodes_per_level > MAX_NODES {
            return Err(Error::InvalidArgument(format!(
                "nodes_per_level must be in 1..={MAX_NODES}, got {nodes_per_level}"
            )));
        }
        let n = nodes_per_level;
        if n == 1 {
            return Ok(Self { nodes: vec![0.0], weights: vec![1.0] });
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (psi_n, psi_prev, _) = orthonormal_hermite(n, *x);
                let step = psi_n / ((n as f64).sqrt() * psi_prev);
                if step.is_finite() {
                    *x -= step;
                }
            }
            let (_, _, sum_sq) = orthonormal_hermite(n, *x);
            weights.push(1.0 / sum_sq);
        }

        // Enforce the exact symmetry of the rule.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights })
    }

    #[cfg(test)]
    pub(crate) fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        Self { nodes, weights }
    }

    pub fn nodes_per_level(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E f(σ g)` for `g ~ N(0, 1)`.
    pub fn expect(&self, sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(sigma * x)).sum()
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES).expect("default rule size is valid")
    }
}

/// Returns `(ψ_n(x), ψ_{n-1}(x), Σ_{j<n} ψ_j(x)²)` for the orthonormal
/// probabilists' Hermite polynomials.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum_sq = 0.0;
    for j in 0..n {
        sum_sq += cur * cur;
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}
