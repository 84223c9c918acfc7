//! Disorder sampling, exact enumeration of small systems and exact Gibbs sampling.
//!
//! Spin configurations are indexed by bit masks: bit `i` set iff `σ_i = -1`.
//! Energies of all `2^N` configurations come from one Walsh–Hadamard transform
//! of the collapsed coupling coefficients.
//!
//! Couplings are generated shell by shell (tuples whose largest index is `m`
//! come from their own stream), so for a fixed seed the system of size `N + 1`
//! contains the couplings of the system of size `N`.

use std::f64::consts::LN_2;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::overlap::OverlapArray;
use crate::seed::{self, Stream};
use crate::stats::Estimate;
use crate::walsh;
use crate::{Error, MixtureSpec, Result};

/// Largest `N` for which the `2^N` configurations are enumerated.
pub const ENUMERATION_CAP: usize = 16;

/// Highest order of the perturbation Hamiltonian.
pub const PERT_P_MAX: usize = 8;

/// Default cap on the total number of stored coupling entries `Σ_p N^p`.
pub const DEFAULT_TENSOR_BUDGET: u128 = 1 << 24;

/// Which normalisation of the p-spin terms to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `N^{-(p-1)/2}`.
    Standard,
    /// `(N+1)^{-(p-1)/2}`, the cavity Hamiltonian `H_N⁻`.
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
struct Coupling {
    p: usize,
    /// Dense tensor over ordered tuples, row-major, `N^p` entries.
    tensor: Vec<f64>,
    /// Collapsed Walsh coefficients (empty when `N` exceeds the enumeration cap).
    walsh: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Perturbation {
    /// `x_1, …, x_8`, uniform on `[1, 2]`.
    x: Vec<f64>,
    /// Walsh coefficients of the independent copies `H'_{N,p}`, unscaled.
    walsh: Vec<Vec<f64>>,
}

/// One draw of the disorder: Gaussian couplings for every active order and,
/// optionally, the perturbation Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    n: usize,
    couplings: Vec<Coupling>,
    perturbation: Option<Perturbation>,
}

impl DisorderRealization {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dense coupling tensor of order `p`, if that order is active.
    pub fn coupling(&self, p: usize) -> Option<&[f64]> {
        self.couplings.iter().find(|c| c.p == p).map(|c| c.tensor.as_slice())
    }

    pub fn has_perturbation(&self) -> bool {
        self.perturbation.is_some()
    }

    pub fn perturbation_x(&self) -> Option<&[f64]> {
        self.perturbation.as_ref().map(|p| p.x.as_slice())
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { n, cap: ENUMERATION_CAP });
    }
    Ok(())
}

/// Samples couplings for each `p` with `β_p > 0` and, if `pert`, the
/// perturbation. The main couplings depend only on `seed`, not on `pert`.
pub fn sample_disorder(n: usize, spec: &MixtureSpec, pert: bool, seed_value: u64) -> Result<DisorderRealization> {
    sample_disorder_with_budget(n, spec, pert, seed_value, DEFAULT_TENSOR_BUDGET)
}

pub fn sample_disorder_with_budget(
    n: usize,
    spec: &MixtureSpec,
    pert: bool,
    seed_value: u64,
    budget: u128,
) -> Result<DisorderRealization> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if pert {
        check_cap(n)?;
    }
    let active: Vec<(usize, f64)> = spec.active().collect();
    let entries: u128 = active.iter().map(|&(p, _)| (n as u128).saturating_pow(p as u32)).sum();
    if entries > budget {
        return Err(Error::MemoryBudget { entries, budget });
    }
    let couplings = active
        .iter()
        .map(|&(p, _)| {
            let tensor = nested_tensor(n, p, seed::derive(seed_value, Stream::Disorder, p as u64));
            let walsh = if n <= ENUMERATION_CAP { walsh::tensor_to_coefficients(&tensor, n, p) } else { Vec::new() };
            Coupling { p, tensor, walsh }
        })
        .collect();
    let perturbation = pert.then(|| {
        let mut rng = seed::child_rng(seed_value, Stream::Perturbation, 0);
        let x: Vec<f64> = (0..PERT_P_MAX).map(|_| rng.random_range(1.0..2.0)).collect();
        let walsh = (1..=PERT_P_MAX).map(|p| walsh::sample_coefficients(p, n, &mut rng)).collect();
        Perturbation { x, walsh }
    });
    Ok(DisorderRealization { n, couplings, perturbation })
}

/// Dense Gaussian tensor over ordered `p`-tuples of `0..n`; the entries with
/// largest index `m` come from stream `m`, independent of `n`.
fn nested_tensor(n: usize, p: usize, seed_value: u64) -> Vec<f64> {
    let mut tensor = vec![0.0; n.pow(p as u32)];
    let mut digits = vec![0usize; p];
    for shell in 0..n {
        let mut rng = seed::child_rng(seed_value, Stream::Disorder, shell as u64);
        digits.iter_mut().for_each(|d| *d = 0);
        loop {
            if digits.contains(&shell) {
                let index = digits.iter().fold(0, |acc, &d| acc * n + d);
                tensor[index] = rng.sample(StandardNormal);
            }
            let mut carry = true;
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d <= shell {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                break;
            }
        }
    }
    tensor
}

fn scale(n: usize, p: usize, variant: Variant) -> f64 {
    let base = match variant {
        Variant::Standard => n as f64,
        Variant::Minus => n as f64 + 1.0,
    };
    base.powf(-(p as f64 - 1.0) / 2.0)
}

fn pert_weight(n: usize, p: usize, x: f64) -> f64 {
    (n as f64).powf(-0.125) * 0.5f64.powi(p as i32) * x * scale(n, p, Variant::Standard)
}

/// Bit mask of a `±1` configuration.
pub fn mask_from_config(sigma: &[i8]) -> Result<u32> {
    if sigma.len() > 32 {
        return Err(Error::InvalidArgument(format!("configurations longer than 32 spins are not indexable, got {}", sigma.len())));
    }
    sigma.iter().enumerate().try_fold(0u32, |m, (i, &s)| match s {
        1 => Ok(m),
        -1 => Ok(m | (1 << i)),
        other => Err(Error::InvalidArgument(format!("spin {i} is {other}, expected ±1"))),
    })
}

/// `±1` configuration of a bit mask.
pub fn config_from_mask(mask: u32, n: usize) -> Vec<i8> {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()
}

fn tensor_term(tensor: &[f64], n: usize, p: usize, sigma: &[i8]) -> f64 {
    let mut digits = vec![0usize; p];
    let mut total = 0.0;
    for &g in tensor {
        let sign: i32 = digits.iter().map(|&d| sigma[d] as i32).product();
        total += g * sign as f64;
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    total
}

fn evaluate(d: &DisorderRealization, spec: &MixtureSpec, sigma: &[i8], variant: Variant) -> Result<f64> {
    if sigma.len() != d.n {
        return Err(Error::DimensionMismatch { expected: d.n, got: sigma.len() });
    }
    let mask = mask_from_config(sigma)?;
    let mut h = 0.0;
    for c in &d.couplings {
        h += spec.beta(c.p) * scale(d.n, c.p, variant) * tensor_term(&c.tensor, d.n, c.p, sigma);
    }
    if let Some(pert) = &d.perturbation {
        for (i, coef) in pert.walsh.iter().enumerate() {
            h += pert_weight(d.n, i + 1, pert.x[i]) * walsh::eval_at(coef, mask);
        }
    }
    Ok(h)
}

/// `H_N(σ) = Σ_p β_p N^{-(p-1)/2} Σ g σ…σ`, plus the perturbation if present.
pub fn hamiltonian(d: &DisorderRealization, spec: &MixtureSpec, sigma: &[i8]) -> Result<f64> {
    evaluate(d, spec, sigma, Variant::Standard)
}

/// `H_N⁻(σ)` with `(N+1)^{-(p-1)/2}` scaling and the same couplings, plus the perturbation if present.
pub fn hamiltonian_minus(d: &DisorderRealization, spec: &MixtureSpec, sigma: &[i8]) -> Result<f64> {
    evaluate(d, spec, sigma, Variant::Minus)
}

/// Main-Hamiltonian energies of all `2^N` configurations, indexed by mask.
pub fn main_energies(d: &DisorderRealization, spec: &MixtureSpec, variant: Variant) -> Result<Vec<f64>> {
    check_cap(d.n)?;
    let mut coef = vec![0.0; 1 << d.n];
    for c in &d.couplings {
        let w = spec.beta(c.p) * scale(d.n, c.p, variant);
        coef.iter_mut().zip(&c.walsh).for_each(|(a, &g)| *a += w * g);
    }
    walsh::fwht(&mut coef);
    Ok(coef)
}

/// Perturbation energies of all configurations (zeros when the perturbation is off).
pub fn perturbation_energies(d: &DisorderRealization) -> Result<Vec<f64>> {
    check_cap(d.n)?;
    let mut coef = vec![0.0; 1 << d.n];
    if let Some(pert) = &d.perturbation {
        for (i, g) in pert.walsh.iter().enumerate() {
            let w = pert_weight(d.n, i + 1, pert.x[i]);
            coef.iter_mut().zip(g).for_each(|(a, &g)| *a += w * g);
        }
        walsh::fwht(&mut coef);
    }
    Ok(coef)
}

/// Total energies `H(σ) + H^pert(σ)` of all configurations.
pub fn energies(d: &DisorderRealization, spec: &MixtureSpec, variant: Variant) -> Result<Vec<f64>> {
    let mut e = main_energies(d, spec, variant)?;
    if d.perturbation.is_some() {
        e.iter_mut().zip(perturbation_energies(d)?).for_each(|(a, b)| *a += b);
    }
    Ok(e)
}

/// `log Σ_s exp(e_s)` with max subtraction.
pub fn log_sum_exp(e: &[f64]) -> f64 {
    let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + e.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalised Gibbs weights `exp(e_s) / Z`.
pub fn gibbs_weights(e: &[f64]) -> Vec<f64> {
    let lz = log_sum_exp(e);
    e.iter().map(|&x| (x - lz).exp()).collect()
}

/// `(1/N) log Σ_σ exp(H_N(σ) + H^pert(σ))`.
pub fn free_energy_exact(d: &DisorderRealization, spec: &MixtureSpec) -> Result<f64> {
    free_energy_exact_variant(d, spec, Variant::Standard)
}

pub fn free_energy_exact_variant(d: &DisorderRealization, spec: &MixtureSpec, variant: Variant) -> Result<f64> {
    Ok(log_sum_exp(&energies(d, spec, variant)?) / d.n as f64)
}

/// Disorder-averaged free energy with its run flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyEstimate {
    pub estimate: Estimate,
    pub n_disorder: usize,
    pub n: usize,
    pub pert: bool,
    pub minus: bool,
}

/// Mean and stderr of [`free_energy_exact`] over `n_disorder` realizations;
/// realization `i` uses the seed derived from `(seed, i)`.
pub fn free_energy_mc(n: usize, spec: &MixtureSpec, n_disorder: usize, pert: bool, minus: bool, seed_value: u64) -> Result<FreeEnergyEstimate> {
    check_cap(n)?;
    if n_disorder < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_disorder });
    }
    let variant = if minus { Variant::Minus } else { Variant::Standard };
    let estimate = if spec.is_zero() && !pert {
        Estimate { mean: LN_2, stderr: 0.0, n: n_disorder }
    } else {
        let samples = free_energy_samples(n, spec, n_disorder, pert, variant, seed_value)?;
        Estimate::from_samples(&samples)?
    };
    Ok(FreeEnergyEstimate { estimate, n_disorder, n, pert, minus })
}

/// Per-realization free energies, in realization order.
pub fn free_energy_samples(n: usize, spec: &MixtureSpec, n_disorder: usize, pert: bool, variant: Variant, seed_value: u64) -> Result<Vec<f64>> {
    (0..n_disorder)
        .into_par_iter()
        .map(|i| {
            let d = sample_disorder(n, spec, pert, disorder_seed(seed_value, i))?;
            free_energy_exact_variant(&d, spec, variant)
        })
        .collect()
}

/// Seed of realization `i` of a run seeded with `seed`.
pub fn disorder_seed(seed_value: u64, i: usize) -> u64 {
    seed::derive(seed_value, Stream::Disorder, i as u64)
}

/// Cumulative Gibbs weights for categorical sampling.
pub fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

pub(crate) fn draw(cumulative: &[f64], rng: &mut seed::Rng) -> usize {
    let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

/// Draws `n_replicas` i.i.d. configurations from the exact Gibbs measure and
/// returns their overlap array.
pub fn gibbs_sample_replicas(d: &DisorderRealization, spec: &MixtureSpec, n_replicas: usize, seed_value: u64) -> Result<OverlapArray> {
    let cum = cumulative(&gibbs_weights(&energies(d, spec, Variant::Standard)?));
    Ok(replicas_from_cumulative(&cum, d.n, n_replicas, seed_value, 0))
}

fn replicas_from_cumulative(cum: &[f64], n: usize, n_replicas: usize, seed_value: u64, index: u64) -> OverlapArray {
    let mut rng = seed::child_rng(seed_value, Stream::Replicas, index);
    let configs: Vec<u32> = (0..n_replicas).map(|_| draw(cum, &mut rng) as u32).collect();
    OverlapArray::from_configurations(&configs, n)
}

/// Overlap arrays from `n_disorder` realizations with `per_disorder` independent
/// replica sets each, in deterministic order.
pub fn gibbs_overlap_stream(
    n: usize,
    spec: &MixtureSpec,
    pert: bool,
    n_replicas: usize,
    n_disorder: usize,
    per_disorder: usize,
    seed_value: u64,
) -> Result<Vec<OverlapArray>> {
    if n_replicas < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicas, got {n_replicas}")));
    }
    let chunks: Vec<Vec<OverlapArray>> = (0..n_disorder)
        .into_par_iter()
        .map(|i| {
            let ds = disorder_seed(seed_value, i);
            let d = sample_disorder(n, spec, pert, ds)?;
            let cum = cumulative(&gibbs_weights(&energies(&d, spec, Variant::Standard)?));
            Ok((0..per_disorder).map(|j| replicas_from_cumulative(&cum, n, n_replicas, ds, j as u64)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}
