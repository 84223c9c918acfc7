//! Walsh (parity) representation of functions on `{-1, +1}^N`.
//!
//! A configuration is a bit mask `s` with bit `i` set iff `σ_i = -1`, so the
//! parity character of a subset `A` is `χ_A(s) = (-1)^{|A ∩ s|}`. A p-spin
//! Hamiltonian over ordered tuples collapses onto these characters: the
//! monomial `σ_{i₁}…σ_{i_p}` only depends on the set of indices occurring an
//! odd number of times.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::seed::Rng;

/// In-place unnormalised Walsh–Hadamard transform:
/// `out[s] = Σ_A coef[A] (-1)^{popcount(A & s)}`.
pub fn fwht(values: &mut [f64]) {
    let n = values.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Evaluates `Σ_A coef[A] χ_A(s)` at a single configuration.
pub fn eval_at(coef: &[f64], s: u32) -> f64 {
    coef.iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(a, &c)| if (a as u32 & s).count_ones().is_multiple_of(2) { c } else { -c })
        .sum()
}

/// `c[a]` = number of ordered `p`-tuples over `n` symbols whose odd-multiplicity
/// set is one fixed set of size `a`, i.e. `p! [x^p] sinh(x)^a cosh(x)^{n-a}`.
/// Summing `C(n, a) c[a]` over `a` gives `n^p`.
pub fn parity_class_sizes(p: usize, n: usize) -> Vec<f64> {
    let mut fact = vec![1.0f64; p + 1];
    for j in 1..=p {
        fact[j] = fact[j - 1] * j as f64;
    }
    let sinh: Vec<f64> = (0..=p).map(|j| if j % 2 == 1 { 1.0 / fact[j] } else { 0.0 }).collect();
    let cosh: Vec<f64> = (0..=p).map(|j| if j % 2 == 0 { 1.0 / fact[j] } else { 0.0 }).collect();
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; p + 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(p + 1 - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut pow_sinh = vec![vec![0.0; p + 1]; n + 1];
    let mut pow_cosh = vec![vec![0.0; p + 1]; n + 1];
    pow_sinh[0][0] = 1.0;
    pow_cosh[0][0] = 1.0;
    for a in 1..=n {
        pow_sinh[a] = mul(&pow_sinh[a - 1], &sinh);
        pow_cosh[a] = mul(&pow_cosh[a - 1], &cosh);
    }
    (0..=n)
        .map(|a| (mul(&pow_sinh[a], &pow_cosh[n - a])[p] * fact[p]).round())
        .collect()
}

/// Accumulates a dense tensor over all ordered `p`-tuples (row-major, `n^p`
/// entries) into its Walsh coefficients.
pub fn tensor_to_coefficients(tensor: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut coef = vec![0.0; 1 << n];
    let mut digits = vec![0usize; p];
    for &g in tensor {
        let mask = digits.iter().fold(0usize, |m, &d| m ^ (1 << d));
        coef[mask] += g;
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    coef
}

/// Walsh coefficients of `Σ_{ordered p-tuples} g_{i₁…i_p} σ_{i₁}…σ_{i_p}` with
/// i.i.d. standard Gaussian `g`, sampled directly in the collapsed basis:
/// the coefficient of `A` is Gaussian with variance `c[|A|]`.
pub fn sample_coefficients(p: usize, n: usize, rng: &mut Rng) -> Vec<f64> {
    let sizes = parity_class_sizes(p, n);
    (0..1usize << n)
        .map(|mask| {
            let a = mask.count_ones() as usize;
            if a <= p && (p - a).is_multiple_of(2) && sizes[a] > 0.0 {
                sizes[a].sqrt() * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        })
        .collect()
}
