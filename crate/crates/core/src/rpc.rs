//! Truncated Ruelle probability cascades and their hierarchical Gaussian fields.
//!
//! A node at depth `l - 1` has children whose atoms are the points of a
//! Poisson process with intensity `x^{-1-ζ_l} dx`, realised as `Γ_i^{-1/ζ_l}`
//! from Poisson arrival times `Γ_i`. Only the largest `M` atoms are kept; the
//! expected mass of the discarded ones, `ζ Γ_M^{1-1/ζ} / (1-ζ)`, is spread
//! evenly over the kept atoms. Leaf weights are products of atoms along the
//! path, normalised over all leaves.
//!
//! Every internal node draws from its own random stream keyed by its path, so
//! a tree with `2M` children per node contains the tree with `M` children
//! (up to the tail correction). The truncation check compares the two with
//! common random numbers.

use std::f64::consts::LN_2;

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::overlap::OverlapArray;
use crate::parisi::{log_cosh, variance_increments};
use crate::seed::{self, Stream};
use crate::stats::{Accumulator, Estimate};
use crate::{Error, MixtureSpec, Result, RsbParams};

pub const DEFAULT_BRANCHING: usize = 512;

/// `m_l` at or below this gives a single-atom node (the `ζ → 0` limit).
pub const SINGLE_ATOM_ZETA: f64 = 0.01;

/// `m_l` above this is rejected: truncation bias grows without bound as `ζ → 1`.
pub const MAX_ZETA: f64 = 0.99;

/// Default cap on the number of leaves per sampled tree for the `X_0` estimator.
pub const DEFAULT_LEAF_BUDGET: usize = 1 << 14;

/// A sampled, truncated cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeTree {
    zeta: Vec<f64>,
    branching: Vec<usize>,
    /// `q_1, …, q_k, q_{k+1} = 1`.
    q_levels: Vec<f64>,
    leaf_weights: Vec<f64>,
    /// `strides[l - 1]` = number of leaves below one node at depth `l`.
    strides: Vec<usize>,
}

impl CascadeTree {
    pub fn k(&self) -> usize {
        self.zeta.len()
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn branching(&self) -> &[usize] {
        &self.branching
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_weights.len()
    }

    pub fn leaf_weights(&self) -> &[f64] {
        &self.leaf_weights
    }

    /// Child index at each level `1..=k` identifying leaf `leaf`.
    pub fn path(&self, leaf: usize) -> Vec<usize> {
        (0..self.k()).map(|l| (leaf / self.strides[l]) % self.branching[l]).collect()
    }

    /// `α¹ ∧ α²`: the first level at which the paths differ, `k + 1` for equal leaves.
    pub fn meet_level(&self, a: usize, b: usize) -> usize {
        (0..self.k())
            .find(|&l| a / self.strides[l] != b / self.strides[l])
            .map_or(self.k() + 1, |l| l + 1)
    }

    /// `q_{α¹ ∧ α²}`.
    pub fn overlap(&self, a: usize, b: usize) -> f64 {
        self.q_levels[self.meet_level(a, b) - 1]
    }

    /// `Σ_α w_α²`, the probability that two independent draws pick the same leaf.
    pub fn collision_probability(&self) -> f64 {
        self.leaf_weights.iter().map(|w| w * w).sum()
    }

    fn sample_leaf(&self, cumulative: &[f64], rng: &mut seed::Rng) -> usize {
        let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
        cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.leaf_weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }
}

/// Values `z_α` on the leaves of a cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafField {
    values: Vec<f64>,
}

impl LeafField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn node_key(parent: u64, child: usize) -> u64 {
    seed::derive(parent, Stream::Cascade, child as u64 + 1)
}

fn check_zeta(params: &RsbParams) -> Result<()> {
    for (l, &m) in params.m().iter().enumerate() {
        if m > MAX_ZETA {
            return Err(Error::InvalidParams(format!(
                "m_{} = {m} is above {MAX_ZETA}; cascade sampling needs m_l <= {MAX_ZETA}",
                l + 1
            )));
        }
    }
    Ok(())
}

/// Per-level branching: `M`, or 1 for levels with `m_l ≤ 0.01`.
pub fn level_branching(params: &RsbParams, m_atoms: usize) -> Vec<usize> {
    params
        .m()
        .iter()
        .map(|&z| if z <= SINGLE_ATOM_ZETA { 1 } else { m_atoms })
        .collect()
}

/// Branching within a leaf budget: `M` on every multi-atom level, reduced
/// evenly across those levels when `M^k` leaves would exceed `budget`.
pub fn allocate_branching(params: &RsbParams, m_atoms: usize, budget: usize) -> Vec<usize> {
    let full = level_branching(params, m_atoms);
    let multi = full.iter().filter(|&&b| b > 1).count();
    let leaves: f64 = full.iter().map(|&b| b as f64).product();
    if multi == 0 || leaves <= budget as f64 {
        return full;
    }
    let mut per_level = (budget as f64).powf(1.0 / multi as f64).round() as usize;
    while per_level > 2 && (per_level as f64).powi(multi as i32) > budget as f64 {
        per_level -= 1;
    }
    let per_level = per_level.max(2);
    full.iter().map(|&b| if b > 1 { b.min(per_level) } else { 1 }).collect()
}

/// Log-atoms of one node: the first `b` of the Poisson cloud, with the
/// expected tail mass spread evenly over them.
fn node_atoms(key: u64, zeta: f64, b: usize, tail: bool, out: &mut Vec<f64>) {
    out.clear();
    if b == 1 && zeta <= SINGLE_ATOM_ZETA {
        out.push(0.0);
        return;
    }
    let mut rng = seed::rng(key);
    let mut gamma = 0.0;
    let inv = 1.0 / zeta;
    for _ in 0..b {
        gamma += rng.sample::<f64, _>(Exp1);
        out.push(-inv * gamma.ln());
    }
    if !tail {
        return;
    }
    // Tail: E Σ_{i>b} Γ_i^{-1/ζ} = ζ Γ_b^{1-1/ζ} / (1-ζ), shared equally by the b atoms.
    let log_tail_share = (zeta / (1.0 - zeta)).ln() + (1.0 - inv) * gamma.ln() - (b as f64).ln();
    for a in out.iter_mut() {
        let (hi, lo) = if *a > log_tail_share { (*a, log_tail_share) } else { (log_tail_share, *a) };
        *a = hi + (lo - hi).exp().ln_1p();
    }
}

fn build_tree(params: &RsbParams, branching: Vec<usize>, tail: bool, seed_value: u64) -> CascadeTree {
    let k = params.k();
    let zeta: Vec<f64> = params.m().to_vec();
    let mut strides = vec![1usize; k];
    for l in (0..k.saturating_sub(1)).rev() {
        strides[l] = strides[l + 1] * branching[l + 1];
    }
    // Keys of the nodes at the current depth and the accumulated log weights.
    let mut keys: Vec<u64> = vec![seed_value];
    let mut logw: Vec<f64> = vec![0.0];
    let mut atoms = Vec::new();
    for l in 0..k {
        let last = l + 1 == k;
        let mut next_keys = Vec::with_capacity(if last { 0 } else { keys.len() * branching[l] });
        let mut next_logw = Vec::with_capacity(keys.len() * branching[l]);
        for (&key, &w) in keys.iter().zip(&logw) {
            node_atoms(seed::derive(key, Stream::Cascade, 0), zeta[l], branching[l], tail, &mut atoms);
            next_logw.extend(atoms.iter().map(|a| w + a));
            if !last {
                next_keys.extend((0..branching[l]).map(|i| node_key(key, i)));
            }
        }
        keys = next_keys;
        logw = next_logw;
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logw.iter_mut().for_each(|w| *w = (*w - max).exp());
    let total: f64 = logw.iter().sum();
    logw.iter_mut().for_each(|w| *w /= total);
    let mut q_levels = params.q().to_vec();
    q_levels.push(1.0);
    CascadeTree { zeta, branching, q_levels, leaf_weights: logw, strides }
}

/// Samples a truncated cascade with at most `m_atoms` atoms per node, within
/// the default leaf budget.
pub fn sample_cascade(params: &RsbParams, m_atoms: usize, seed_value: u64) -> Result<CascadeTree> {
    if m_atoms < 2 {
        return Err(Error::InvalidArgument(format!("M must be at least 2, got {m_atoms}")));
    }
    check_zeta(params)?;
    Ok(build_tree(params, allocate_branching(params, m_atoms, DEFAULT_LEAF_BUDGET), true, seed_value))
}

/// Samples a cascade with explicit per-level branching.
pub fn sample_cascade_with_branching(params: &RsbParams, branching: &[usize], seed_value: u64) -> Result<CascadeTree> {
    check_zeta(params)?;
    if branching.len() != params.k() || branching.contains(&0) {
        return Err(Error::InvalidArgument("branching must list k positive counts".into()));
    }
    Ok(build_tree(params, branching.to_vec(), true, seed_value))
}

/// `z_α = Σ_{l=0..k} η_{α|l} (ξ'(q_{l+1}) - ξ'(q_l))^{1/2}`, one standard Gaussian
/// `η` per node (the root included), so `E z_α z_β = ξ'(q_{α∧β})`.
pub fn sample_field(tree: &CascadeTree, spec: &MixtureSpec, params: &RsbParams, seed_value: u64) -> Result<LeafField> {
    if params.k() != tree.k() {
        return Err(Error::InvalidArgument(format!("tree has {} levels, params have {}", tree.k(), params.k())));
    }
    let sds: Vec<f64> = variance_increments(spec, params).into_iter().map(f64::sqrt).collect();
    let mut values = Vec::new();
    fill_field(&tree.branching, &sds, seed_value, &mut values);
    Ok(LeafField { values })
}

fn fill_field(branching: &[usize], sds: &[f64], seed_value: u64, out: &mut Vec<f64>) {
    let k = branching.len();
    let mut root = seed::rng(seed::derive(seed_value, Stream::Field, 0));
    let mut keys: Vec<u64> = vec![seed_value];
    let mut z: Vec<f64> = vec![sds[0] * root.sample::<f64, _>(StandardNormal)];
    for l in 0..k {
        let last = l + 1 == k;
        let mut next_keys = Vec::with_capacity(if last { 0 } else { keys.len() * branching[l] });
        let mut next_z = Vec::with_capacity(keys.len() * branching[l]);
        for (&key, &parent) in keys.iter().zip(&z) {
            let mut rng = seed::rng(seed::derive(key, Stream::Field, 1));
            next_z.extend((0..branching[l]).map(|_| parent + sds[l + 1] * rng.sample::<f64, _>(StandardNormal)));
            if !last {
                next_keys.extend((0..branching[l]).map(|i| node_key(key, i)));
            }
        }
        keys = next_keys;
        z = next_z;
    }
    *out = z;
}

/// `log Σ_α w_α 2 ch(z_α)` for one tree and field.
pub fn log_partition(tree: &CascadeTree, field: &LeafField) -> f64 {
    let terms = tree
        .leaf_weights
        .iter()
        .zip(&field.values)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &z)| w.ln() + log_cosh(z));
    LN_2 + log_sum_exp(terms)
}

pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Options for [`evaluate_x0_rpc_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RpcOptions {
    pub m_atoms: usize,
    pub leaf_budget: usize,
    /// Fraction of `n_samples` used for the truncation (doubling) pilot; 0 disables it.
    pub pilot_fraction: f64,
    /// Spread the expected mass of the discarded atoms over the kept ones.
    pub tail_compensation: bool,
}

impl Default for RpcOptions {
    fn default() -> Self {
        Self { m_atoms: DEFAULT_BRANCHING, leaf_budget: DEFAULT_LEAF_BUDGET, pilot_fraction: 0.05, tail_compensation: true }
    }
}

/// Cascade estimate of `X_0` together with the truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcEstimate {
    pub estimate: Estimate,
    pub branching: Vec<usize>,
    /// Mean shift when the branching is doubled, with common random numbers.
    pub pilot_shift: Option<Estimate>,
    /// Set when doubling the branching moved the estimate by more than its stderr
    /// (beyond twice the noise of the shift itself).
    pub truncation_warning: bool,
}

/// `X_0` as `E log Σ_α w_α 2 ch(z_α)` over sampled cascades (same `log 2`
/// convention as the quadrature evaluation).
pub fn evaluate_x0_rpc(spec: &MixtureSpec, params: &RsbParams, m_atoms: usize, n_samples: usize, seed_value: u64) -> Result<RpcEstimate> {
    evaluate_x0_rpc_with(spec, params, n_samples, seed_value, &RpcOptions { m_atoms, ..Default::default() })
}

pub fn evaluate_x0_rpc_with(
    spec: &MixtureSpec,
    params: &RsbParams,
    n_samples: usize,
    seed_value: u64,
    opts: &RpcOptions,
) -> Result<RpcEstimate> {
    if opts.m_atoms < 2 {
        return Err(Error::InvalidArgument(format!("M must be at least 2, got {}", opts.m_atoms)));
    }
    if n_samples < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_samples });
    }
    check_zeta(params)?;
    let branching = allocate_branching(params, opts.m_atoms, opts.leaf_budget);
    if spec.xi_prime_unchecked(1.0) == 0.0 {
        return Ok(RpcEstimate {
            estimate: Estimate { mean: LN_2, stderr: 0.0, n: n_samples },
            branching,
            pilot_shift: None,
            truncation_warning: false,
        });
    }
    let sds: Vec<f64> = variance_increments(spec, params).into_iter().map(f64::sqrt).collect();
    let one = |branching: &[usize], i: usize| -> f64 {
        let tree = build_tree(params, branching.to_vec(), opts.tail_compensation, seed::derive(seed_value, Stream::Cascade, i as u64));
        let mut values = Vec::new();
        fill_field(branching, &sds, seed::derive(seed_value, Stream::Field, i as u64), &mut values);
        log_partition(&tree, &LeafField { values })
    };
    let samples: Vec<f64> = (0..n_samples).into_par_iter().map(|i| one(&branching, i)).collect();
    let estimate = Estimate::from_samples(&samples)?;

    let n_pilot = ((n_samples as f64 * opts.pilot_fraction).ceil() as usize).min(n_samples);
    let (pilot_shift, truncation_warning) = if n_pilot >= 2 && branching.iter().any(|&b| b > 1) {
        let doubled: Vec<usize> = branching.iter().map(|&b| if b > 1 { 2 * b } else { 1 }).collect();
        let diffs: Vec<f64> = (0..n_pilot)
            .into_par_iter()
            .map(|i| one(&doubled, i) - samples[i])
            .collect();
        let shift = Estimate::from_samples(&diffs)?;
        // The shift is itself noisy; only a shift clearly beyond the stderr counts.
        let warn = shift.mean.abs() - 2.0 * shift.stderr > estimate.stderr;
        (Some(shift), warn)
    } else {
        (None, false)
    };
    Ok(RpcEstimate { estimate, branching, pilot_shift, truncation_warning })
}

/// Draws `n_replicas` i.i.d. leaves from `w` and returns their overlaps `q_{α∧α'}`.
pub fn sample_overlap_array(tree: &CascadeTree, n_replicas: usize, seed_value: u64) -> Result<OverlapArray> {
    if n_replicas < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicas, got {n_replicas}")));
    }
    let cumulative = tree.cumulative();
    let mut rng = seed::child_rng(seed_value, Stream::Replicas, 0);
    let leaves: Vec<usize> = (0..n_replicas).map(|_| tree.sample_leaf(&cumulative, &mut rng)).collect();
    Ok(OverlapArray::from_fn(n_replicas, |a, b| tree.overlap(leaves[a], leaves[b])))
}

/// Overlap arrays from `n_samples` independent cascades, one array per cascade.
pub fn sample_overlap_stream(
    params: &RsbParams,
    m_atoms: usize,
    n_replicas: usize,
    n_samples: usize,
    seed_value: u64,
) -> Result<Vec<OverlapArray>> {
    check_zeta(params)?;
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let tree = sample_cascade(params, m_atoms, seed::derive(seed_value, Stream::Cascade, i as u64))?;
            sample_overlap_array(&tree, n_replicas, seed::derive(seed_value, Stream::Replicas, i as u64))
        })
        .collect()
}

/// Pools `Σ_α w_α²` over independent cascades.
pub fn collision_estimate(params: &RsbParams, m_atoms: usize, n_samples: usize, seed_value: u64) -> Result<Estimate> {
    let acc: Accumulator = (0..n_samples)
        .map(|i| sample_cascade(params, m_atoms, seed::derive(seed_value, Stream::Cascade, i as u64)).map(|t| t.collision_probability()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    acc.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parisi::evaluate_x0;
    use crate::QuadratureGrid;

    fn params(m: &[f64], q: &[f64]) -> RsbParams {
        RsbParams::new(m.to_vec(), q.to_vec()).unwrap()
    }

    #[test]
    fn weights_are_normalised_and_reproducible() {
        let p = params(&[0.5], &[0.3]);
        let tree = sample_cascade(&p, 2000, 1).unwrap();
        assert_eq!(tree.n_leaves(), 2000);
        assert!((tree.leaf_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(tree.leaf_weights().iter().all(|&w| w >= 0.0));
        assert_eq!(tree, sample_cascade(&p, 2000, 1).unwrap());
        let deep = sample_cascade(&params(&[0.2, 0.5, 0.8], &[0.1, 0.4, 0.7]), 8, 2).unwrap();
        assert_eq!(deep.n_leaves(), 512);
        assert!((deep.leaf_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_zeta_handling() {
        assert!(sample_cascade(&params(&[0.995], &[0.2]), 16, 0).is_err());
        assert!(sample_cascade(&params(&[0.99], &[0.2]), 16, 0).is_ok());
        assert!(sample_cascade(&params(&[0.5], &[0.2]), 1, 0).is_err());
        let tree = sample_cascade(&params(&[0.005, 0.5], &[0.2, 0.4]), 16, 0).unwrap();
        assert_eq!(tree.branching(), &[1, 16]);
        let spec = MixtureSpec::from_pairs(&[(2, 1.0)]).unwrap();
        assert!(evaluate_x0_rpc(&spec, &params(&[1.0], &[0.2]), 64, 10, 0).is_err());
    }

    #[test]
    fn meet_levels_follow_paths() {
        let tree = sample_cascade_with_branching(&params(&[0.3, 0.6], &[0.2, 0.7]), &[3, 4], 5).unwrap();
        for a in 0..12 {
            for b in 0..12 {
                let (pa, pb) = (tree.path(a), tree.path(b));
                let expected = (0..2).find(|&l| pa[l] != pb[l]).map_or(3, |l| l + 1);
                assert_eq!(tree.meet_level(a, b), expected);
            }
        }
        assert_eq!(tree.overlap(0, 0), 1.0);
        assert_eq!(tree.overlap(0, 1), 0.7);
        assert_eq!(tree.overlap(0, 4), 0.2);
    }

    #[test]
    fn collision_probability_is_one_minus_m() {
        let est = collision_estimate(&params(&[0.5], &[0.3]), 2000, 2000, 3).unwrap();
        assert!(est.agrees_with(0.5, 3.0), "{est:?}");
    }

    #[test]
    fn two_replicas_agree_with_probability_one_minus_m() {
        let arrays = sample_overlap_stream(&params(&[0.5], &[0.3]), 2000, 2, 4000, 4).unwrap();
        let same: Accumulator = arrays.iter().map(|a| if a.get(0, 1) == 1.0 { 1.0 } else { 0.0 }).collect();
        let est = same.estimate().unwrap();
        assert!(est.agrees_with(0.5, 3.0), "{est:?}");
        assert!(arrays.iter().all(|a| a.get(0, 1) == 1.0 || a.get(0, 1) == 0.3));
    }

    #[test]
    fn field_covariance_by_construction() {
        let spec = MixtureSpec::from_pairs(&[(1, 0.4), (2, 0.9), (3, 0.5)]).unwrap();
        let p = params(&[0.3, 0.6], &[0.25, 0.7]);
        let inc = variance_increments(&spec, &p);
        assert!((inc.iter().sum::<f64>() - spec.xi_prime(1.0).unwrap()).abs() < 1e-12);
        // Leaves splitting at the root share only the root increment.
        assert!((inc[0] - spec.xi_prime(0.25).unwrap()).abs() < 1e-12);

        let tree = sample_cascade_with_branching(&p, &[2, 2], 0).unwrap();
        let n = 100_000;
        let mut sums = [[0.0f64; 4]; 4];
        for s in 0..n {
            let f = sample_field(&tree, &spec, &p, s).unwrap();
            let z = f.values();
            for a in 0..4 {
                for b in 0..4 {
                    sums[a][b] += z[a] * z[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                let expected = spec.xi_prime(tree.overlap(a, b)).unwrap();
                // Var(z_a z_b) = C_aa C_bb + C_ab² for a Gaussian pair.
                let c_aa = spec.xi_prime(1.0).unwrap();
                let se = ((c_aa * c_aa + expected * expected) / n as f64).sqrt();
                let got = sums[a][b] / n as f64;
                assert!((got - expected).abs() < 3.0 * se, "({a},{b}) {got} vs {expected}");
            }
        }
    }

    #[test]
    fn zero_mixture_gives_log_two() {
        let est = evaluate_x0_rpc(&MixtureSpec::zero(2), &params(&[0.4], &[0.3]), 512, 100, 1).unwrap();
        assert_eq!(est.estimate.mean, LN_2);
        assert_eq!(est.estimate.stderr, 0.0);
    }

    #[test]
    fn agrees_with_quadrature_two_levels() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.5)]).unwrap();
        let p = params(&[0.3, 0.7], &[0.2, 0.6]);
        let quad = evaluate_x0(&spec, &p, &QuadratureGrid::default()).unwrap();
        let est = evaluate_x0_rpc_with(&spec, &p, 4000, 11, &RpcOptions { leaf_budget: 1 << 12, ..Default::default() }).unwrap();
        assert!(est.estimate.agrees_with(quad, 3.0), "{est:?} vs {quad}");
        assert!(!est.truncation_warning, "{est:?}");
    }

    #[test]
    fn near_annealed_boundary() {
        let spec = MixtureSpec::from_pairs(&[(2, 1.0)]).unwrap();
        let p = params(&[0.99], &[0.0]);
        let quad = evaluate_x0(&spec, &p, &QuadratureGrid::default()).unwrap();
        assert!((quad - (LN_2 + 1.0)).abs() < 0.02);
        let est = evaluate_x0_rpc(&spec, &p, 4096, 20000, 12).unwrap();
        assert!(est.estimate.agrees_with(quad, 3.0), "{est:?} vs {quad}");
    }

    #[test]
    fn overlap_arrays_are_tree_valued() {
        let p = params(&[0.3, 0.6], &[0.2, 0.7]);
        let single = sample_cascade_with_branching(&p, &[1, 1], 0).unwrap();
        assert_eq!(sample_overlap_array(&single, 2, 0).unwrap().get(0, 1), 1.0);
        assert!(sample_overlap_array(&single, 1, 0).is_err());
        let tree = sample_cascade(&p, 32, 7).unwrap();
        for s in 0..50 {
            let a = sample_overlap_array(&tree, 5, s).unwrap();
            for x in 0..5 {
                for y in 0..5 {
                    assert_eq!(a.get(x, y), a.get(y, x));
                    assert!([0.2, 0.7, 1.0].contains(&a.get(x, y)));
                    for z in 0..5 {
                        assert!(a.get(x, y) >= a.get(x, z).min(a.get(y, z)));
                    }
                }
            }
        }
    }

    #[test]
    fn budget_allocation() {
        let p = params(&[0.3, 0.9], &[0.2, 0.6]);
        assert_eq!(allocate_branching(&p, 512, 1 << 14), vec![128, 128]);
        assert_eq!(allocate_branching(&p, 16, 1 << 14), vec![16, 16]);
        assert_eq!(allocate_branching(&params(&[0.2, 0.5, 0.8], &[0.1, 0.4, 0.7]), 512, 1 << 14), vec![25, 25, 25]);
        assert_eq!(allocate_branching(&params(&[0.005, 0.5], &[0.1, 0.2]), 512, 64), vec![1, 64]);
        assert_eq!(allocate_branching(&params(&[0.5], &[0.1]), 512, 64), vec![64]);
    }
}
