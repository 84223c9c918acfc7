//! Guerra's interpolation and the Aizenman–Sims–Starr increment at finite `N`.
//!
//! The cavity fields `z(σ)` and `y(σ)` have covariances `ξ'(R)` and `θ(R)`.
//! Both kernels depend on `σ, σ'` only through `σ ⊕ σ'`, so the Walsh
//! characters diagonalise them: the eigenvalues are the Walsh transform of the
//! kernel and a field over all `2^N` configurations costs one transform.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::parisi::{evaluate_parisi, log_cosh};
use crate::rpc::{self, CascadeTree};
use crate::seed::{self, Stream};
use crate::simulator::{self, FreeEnergyEstimate, Variant};
use crate::stats::{Accumulator, Estimate};
use crate::walsh;
use crate::{Error, MixtureSpec, QuadratureGrid, Result, RsbParams};

/// Eigenvalues below `-JITTER` (relative to the largest) are a factorization failure.
pub const JITTER: f64 = 1e-10;

/// Default cap on cascade leaves for the interpolation (the sum runs over `2^N` configurations per leaf).
pub const GUERRA_LEAF_BUDGET: usize = 1 << 10;

/// Options for the interpolation estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct GuerraOptions {
    pub m_atoms: usize,
    pub leaf_budget: usize,
    pub pert: bool,
    /// Fraction of samples used for the branching-doubling pilot at `t = 0`.
    pub pilot_fraction: f64,
}

impl Default for GuerraOptions {
    fn default() -> Self {
        Self { m_atoms: rpc::DEFAULT_BRANCHING, leaf_budget: GUERRA_LEAF_BUDGET, pert: true, pilot_fraction: 0.05 }
    }
}

/// `φ(t)` with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPoint {
    pub t: f64,
    pub estimate: Estimate,
    pub n: usize,
    pub params: RsbParams,
    pub spec: MixtureSpec,
    pub pert: bool,
}

/// `φ` on a grid of `t`, all points sharing disorder, cascades and site fields.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationGrid {
    pub points: Vec<InterpolationPoint>,
    /// Paired standard error of `φ(t_{j+1}) - φ(t_j)`.
    pub step_stderr: Vec<f64>,
    pub branching: Vec<usize>,
    pub truncation_warning: bool,
    pub seed: u64,
}

impl InterpolationGrid {
    /// Whether every step satisfies `φ(t_{j+1}) ≤ φ(t_j) + sigmas · stderr`.
    pub fn is_nonincreasing(&self, sigmas: f64) -> bool {
        self.points
            .windows(2)
            .zip(&self.step_stderr)
            .all(|(w, &se)| w[1].estimate.mean <= w[0].estimate.mean + sigmas * se + 1e-12)
    }

    /// CSV with columns `t,mean,stderr,N,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean,stderr,N,seed\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{},{}", p.t, p.estimate.mean, p.estimate.stderr, p.n, self.seed);
        }
        out
    }
}

/// One sample of `(1/N) log Σ_{α,σ} w_α exp(√t H + H^pert + √(1-t) Σ_i z_{α,i} σ_i)`
/// for each `t`.
fn phi_sample(
    n: usize,
    main: &[f64],
    pert: &[f64],
    tree: &CascadeTree,
    site_fields: &[Vec<f64>],
    ts: &[f64],
) -> Vec<f64> {
    let states = 1usize << n;
    let log_w: Vec<f64> = tree.leaf_weights().iter().map(|w| w.ln()).collect();
    let mut field = vec![0.0; states];
    let mut energy = vec![0.0; states];
    let mut per_leaf = vec![0.0; tree.n_leaves()];
    ts.iter()
        .map(|&t| {
            let (st, sc) = (t.sqrt(), (1.0 - t).sqrt());
            energy.iter_mut().zip(main.iter().zip(pert)).for_each(|(e, (h, p))| *e = st * h + p);
            for (alpha, slot) in per_leaf.iter_mut().enumerate() {
                if sc == 0.0 {
                    *slot = log_w[alpha];
                    continue;
                }
                // Σ_i a_i σ_i over all masks, built one bit at a time.
                field[0] = site_fields.iter().map(|z| sc * z[alpha]).sum();
                for (i, z) in site_fields.iter().enumerate() {
                    let flip = -2.0 * sc * z[alpha];
                    let half = 1usize << i;
                    for s in 0..half {
                        field[s | half] = field[s] + flip;
                    }
                }
                let max = energy.iter().zip(&field).fold(f64::NEG_INFINITY, |m, (e, f)| m.max(e + f));
                let sum: f64 = energy.iter().zip(&field).map(|(e, f)| (e + f - max).exp()).sum();
                *slot = log_w[alpha] + max + sum.ln();
            }
            let value = if sc == 0.0 {
                simulator::log_sum_exp(&energy)
            } else {
                rpc::log_sum_exp(per_leaf.iter().copied())
            };
            value / n as f64
        })
        .collect()
}

/// Per-realization `φ(t)` values for realization `i` with the given branching.
fn phi_realization(
    n: usize,
    spec: &MixtureSpec,
    params: &RsbParams,
    ts: &[f64],
    branching: &[usize],
    pert: bool,
    seed_value: u64,
    i: usize,
) -> Result<Vec<f64>> {
    let d = simulator::sample_disorder(n, spec, pert, simulator::disorder_seed(seed_value, i))?;
    let main = simulator::main_energies(&d, spec, Variant::Standard)?;
    let pert_e = simulator::perturbation_energies(&d)?;
    let tree = rpc::sample_cascade_with_branching(params, branching, seed::derive(seed_value, Stream::Cascade, i as u64))?;
    let site_seed = seed::derive(seed_value, Stream::SiteFields, i as u64);
    let site_fields = (0..n)
        .map(|site| rpc::sample_field(&tree, spec, params, seed::derive(site_seed, Stream::SiteFields, site as u64)).map(|f| f.values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(phi_sample(n, &main, &pert_e, &tree, &site_fields, ts))
}

/// `φ(t)` over a grid of `t` with common random numbers across the grid.
pub fn guerra_phi_grid(
    n: usize,
    spec: &MixtureSpec,
    params: &RsbParams,
    ts: &[f64],
    n_samples: usize,
    seed_value: u64,
    opts: &GuerraOptions,
) -> Result<InterpolationGrid> {
    if let Some(&t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain { value: t, domain: "[0, 1]" });
    }
    if ts.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    if n > simulator::ENUMERATION_CAP {
        return Err(Error::EnumerationCap { n, cap: simulator::ENUMERATION_CAP });
    }
    if n_samples < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_samples });
    }
    if opts.m_atoms < 2 {
        return Err(Error::InvalidArgument(format!("M must be at least 2, got {}", opts.m_atoms)));
    }
    // Validates the cascade constraints on m.
    rpc::sample_cascade_with_branching(params, &vec![1; params.k()], 0)?;
    let branching = rpc::allocate_branching(params, opts.m_atoms, opts.leaf_budget);
    let rows: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| phi_realization(n, spec, params, ts, &branching, opts.pert, seed_value, i))
        .collect::<Result<_>>()?;
    let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let points = ts
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            Ok(InterpolationPoint {
                t,
                estimate: Estimate::from_samples(&column(j))?,
                n,
                params: params.clone(),
                spec: spec.clone(),
                pert: opts.pert,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let step_stderr = (1..ts.len())
        .map(|j| {
            let acc: Accumulator = rows.iter().map(|r| r[j] - r[j - 1]).collect();
            (acc.variance() / rows.len() as f64).sqrt()
        })
        .collect();

    let n_pilot = ((n_samples as f64 * opts.pilot_fraction).ceil() as usize).min(n_samples);
    let multi = branching.iter().any(|&b| b > 1);
    let truncation_warning = if n_pilot >= 2 && multi && !spec.is_zero() {
        let doubled: Vec<usize> = branching.iter().map(|&b| if b > 1 { 2 * b } else { 1 }).collect();
        let diffs: Vec<f64> = (0..n_pilot)
            .into_par_iter()
            .map(|i| {
                let base = phi_realization(n, spec, params, &[0.0], &branching, opts.pert, seed_value, i)?;
                let wide = phi_realization(n, spec, params, &[0.0], &doubled, opts.pert, seed_value, i)?;
                Ok(wide[0] - base[0])
            })
            .collect::<Result<_>>()?;
        let shift = Estimate::from_samples(&diffs)?;
        let reference = points.iter().map(|p| p.estimate.stderr).fold(f64::INFINITY, f64::min);
        shift.mean.abs() - 2.0 * shift.stderr > reference
    } else {
        false
    };
    Ok(InterpolationGrid { points, step_stderr, branching, truncation_warning, seed: seed_value })
}

/// `φ(t)` at a single `t`.
pub fn guerra_phi(
    n: usize,
    spec: &MixtureSpec,
    params: &RsbParams,
    t: f64,
    m_atoms: usize,
    n_samples: usize,
    seed_value: u64,
) -> Result<InterpolationPoint> {
    let opts = GuerraOptions { m_atoms, ..Default::default() };
    Ok(guerra_phi_grid(n, spec, params, &[t], n_samples, seed_value, &opts)?.points.remove(0))
}

/// Outcome of comparing `F_N` with `𝒫ₖ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVerdict {
    Pass,
    Fail,
    /// Mixtures with odd `p ≥ 3`: the gap is reported without a verdict.
    Reported,
}

impl std::fmt::Display for BoundVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Reported => "REPORTED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub free_energy: FreeEnergyEstimate,
    pub parisi: f64,
    /// `F_N - 𝒫ₖ`.
    pub gap: f64,
    pub verdict: BoundVerdict,
}

/// Compares `F_N` (no perturbation) with `𝒫ₖ(m⃗, q⃗)`; passes iff `F_N ≤ 𝒫 + 3·stderr`.
pub fn guerra_bound_check(n: usize, spec: &MixtureSpec, params: &RsbParams, n_disorder: usize, seed_value: u64) -> Result<BoundCheck> {
    let free_energy = simulator::free_energy_mc(n, spec, n_disorder, false, false, seed_value)?;
    let parisi = evaluate_parisi(spec, params, &QuadratureGrid::default())?;
    Ok(bound_verdict(spec, free_energy, parisi))
}

/// Verdict for an already computed free energy and Parisi value.
pub fn bound_verdict(spec: &MixtureSpec, free_energy: FreeEnergyEstimate, parisi: f64) -> BoundCheck {
    let gap = free_energy.estimate.mean - parisi;
    let verdict = if spec.has_odd_interactions() {
        BoundVerdict::Reported
    } else if gap <= 3.0 * free_energy.estimate.stderr + 1e-12 {
        BoundVerdict::Pass
    } else {
        BoundVerdict::Fail
    };
    BoundCheck { free_energy, parisi, gap, verdict }
}

/// Gaussian fields over all `2^N` configurations with covariance `k(R_{σ,σ'})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityField {
    n: usize,
    /// `sqrt(λ_A / 2^N)` for every Walsh character `A`.
    amplitudes: Vec<f64>,
    min_eigenvalue: f64,
}

impl CavityField {
    /// Factorizes the kernel `f(R)` over `{-1,+1}^N`.
    pub fn new(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n > simulator::ENUMERATION_CAP {
            return Err(Error::EnumerationCap { n, cap: simulator::ENUMERATION_CAP });
        }
        let states = 1usize << n;
        let mut lambda: Vec<f64> = (0..states).map(|x| f(1.0 - 2.0 * x.count_ones() as f64 / n as f64)).collect();
        walsh::fwht(&mut lambda);
        let max = lambda.iter().copied().fold(0.0f64, f64::max);
        let min_eigenvalue = lambda.iter().copied().fold(f64::INFINITY, f64::min);
        let jitter = JITTER * max.max(1.0);
        if min_eigenvalue < -jitter {
            return Err(Error::Factorization { min_eigenvalue, jitter });
        }
        let amplitudes = lambda.iter().map(|&l| (l.max(0.0) / states as f64).sqrt()).collect();
        Ok(Self { n, amplitudes, min_eigenvalue })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest eigenvalue of the `2^N × 2^N` covariance matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Eigenvalues `λ_A`, indexed by the character mask.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let states = self.amplitudes.len() as f64;
        self.amplitudes.iter().map(|a| a * a * states).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|&a| a == 0.0)
    }

    /// One draw of the field, indexed by configuration mask.
    pub fn sample(&self, rng: &mut seed::Rng) -> Vec<f64> {
        let mut v: Vec<f64> = self.amplitudes.iter().map(|&a| if a == 0.0 { 0.0 } else { a * rng.sample::<f64, _>(StandardNormal) }).collect();
        walsh::fwht(&mut v);
        v
    }
}

/// `z` with covariance `ξ'(R)` and `y` with covariance `θ(R)`.
pub fn cavity_fields(spec: &MixtureSpec, n: usize) -> Result<(CavityField, CavityField)> {
    let z = CavityField::new(n, |r| spec.xi_prime_unchecked(r))?;
    let y = CavityField::new(n, |r| spec.theta_unchecked(r))?;
    Ok((z, y))
}

/// Options for [`ass_increment_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssOptions {
    /// Include the perturbation Hamiltonian in the Gibbs measure.
    pub pert: bool,
}

impl Default for AssOptions {
    fn default() -> Self {
        Self { pert: true }
    }
}

/// Per-realization values of `log⟨ch z⟩₋ - log⟨exp y⟩₋`, each averaged over
/// `n_field_samples` field draws.
pub fn ass_samples(n: usize, spec: &MixtureSpec, n_disorder: usize, n_field_samples: usize, seed_value: u64, opts: &AssOptions) -> Result<Vec<f64>> {
    if n_field_samples < 1 {
        return Err(Error::InsufficientSamples { needed: 1, got: n_field_samples });
    }
    let (z, y) = cavity_fields(spec, n)?;
    (0..n_disorder)
        .into_par_iter()
        .map(|i| {
            let ds = simulator::disorder_seed(seed_value, i);
            let d = simulator::sample_disorder(n, spec, opts.pert, ds)?;
            let e = simulator::energies(&d, spec, Variant::Minus)?;
            let log_g: Vec<f64> = {
                let lz = simulator::log_sum_exp(&e);
                e.iter().map(|x| x - lz).collect()
            };
            let mut rng = seed::child_rng(ds, Stream::CavityField, 0);
            let mut acc = 0.0;
            for _ in 0..n_field_samples {
                let zs = z.sample(&mut rng);
                let first = rpc::log_sum_exp(log_g.iter().zip(&zs).map(|(g, z)| g + log_cosh(*z)));
                let second = if y.is_zero() {
                    0.0
                } else {
                    let ys = y.sample(&mut rng);
                    rpc::log_sum_exp(log_g.iter().zip(&ys).map(|(g, y)| g + y))
                };
                acc += first - second;
            }
            Ok(acc / n_field_samples as f64)
        })
        .collect()
}

/// `log 2 + E log⟨ch z(σ)⟩₋ - E log⟨exp y(σ)⟩₋` under the Gibbs measure of `H_N⁻`
/// (plus the perturbation, by default).
pub fn ass_increment(n: usize, spec: &MixtureSpec, n_disorder: usize, n_field_samples: usize, seed_value: u64) -> Result<Estimate> {
    ass_increment_with(n, spec, n_disorder, n_field_samples, seed_value, &AssOptions::default())
}

pub fn ass_increment_with(
    n: usize,
    spec: &MixtureSpec,
    n_disorder: usize,
    n_field_samples: usize,
    seed_value: u64,
    opts: &AssOptions,
) -> Result<Estimate> {
    if n > simulator::ENUMERATION_CAP {
        return Err(Error::EnumerationCap { n, cap: simulator::ENUMERATION_CAP });
    }
    if n_disorder < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_disorder });
    }
    if spec.is_zero() {
        return Ok(Estimate { mean: LN_2, stderr: 0.0, n: n_disorder });
    }
    let samples = ass_samples(n, spec, n_disorder, n_field_samples, seed_value, opts)?;
    let est = Estimate::from_samples(&samples)?;
    Ok(Estimate { mean: LN_2 + est.mean, ..est })
}

/// `(N+1) F_{N+1} - N F_N` per realization, both sizes sharing the couplings on
/// their common spins.
pub fn telescoping_samples(n: usize, spec: &MixtureSpec, n_disorder: usize, pert: bool, seed_value: u64) -> Result<Vec<f64>> {
    let small = simulator::free_energy_samples(n, spec, n_disorder, pert, Variant::Standard, seed_value)?;
    let big = simulator::free_energy_samples(n + 1, spec, n_disorder, pert, Variant::Standard, seed_value)?;
    Ok(small.iter().zip(&big).map(|(s, b)| (n as f64 + 1.0) * b - n as f64 * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parisi::evaluate_x0;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn sk(beta: f64) -> MixtureSpec {
        MixtureSpec::from_pairs(&[(2, beta)]).unwrap()
    }

    #[test]
    fn cavity_spectrum_matches_dense_factorization() {
        let spec = MixtureSpec::from_pairs(&[(1, 0.3), (2, 0.8), (3, 0.6)]).unwrap();
        let n = 4;
        let (z, y) = cavity_fields(&spec, n).unwrap();
        for (field, f) in [(&z, Box::new(|r: f64| spec.xi_prime(r).unwrap()) as Box<dyn Fn(f64) -> f64>), (&y, Box::new(|r: f64| spec.theta_unchecked(r)))] {
            let dense = DMatrix::from_fn(16, 16, |a, b| f(crate::overlap::overlap_of(a as u32, b as u32, n)));
            let mut dense_eig: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
            let mut walsh_eig = field.eigenvalues();
            dense_eig.sort_by(f64::total_cmp);
            walsh_eig.sort_by(f64::total_cmp);
            for (a, b) in dense_eig.iter().zip(&walsh_eig) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            assert!(field.min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn cavity_field_covariance() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.9), (3, 0.5)]).unwrap();
        let n = 3;
        let (z, _) = cavity_fields(&spec, n).unwrap();
        let mut rng = seed::rng(4);
        let draws = 40_000;
        let mut sums = vec![0.0; 64];
        for _ in 0..draws {
            let v = z.sample(&mut rng);
            for a in 0..8 {
                for b in 0..8 {
                    sums[a * 8 + b] += v[a] * v[b];
                }
            }
        }
        let c11 = spec.xi_prime(1.0).unwrap();
        for a in 0..8u32 {
            for b in 0..8u32 {
                let expected = spec.xi_prime(crate::overlap::overlap_of(a, b, n)).unwrap();
                let se = ((c11 * c11 + expected * expected) / draws as f64).sqrt();
                let got = sums[(a * 8 + b) as usize] / draws as f64;
                assert!((got - expected).abs() < 3.5 * se, "({a},{b}) {got} vs {expected}");
            }
        }
    }

    #[test]
    fn factorization_rejects_indefinite_kernels() {
        assert!(matches!(CavityField::new(3, |r| r - 0.5), Err(Error::Factorization { .. })));
        assert!(CavityField::new(17, |r| r).is_err());
    }

    #[test]
    fn ass_zero_mixture_and_linear_theta() {
        let est = ass_increment(10, &MixtureSpec::zero(2), 4, 2, 1).unwrap();
        assert_eq!(est.mean, LN_2);
        assert_eq!(est.stderr, 0.0);
        let field = MixtureSpec::from_pairs(&[(1, 0.8)]).unwrap();
        let (_, y) = cavity_fields(&field, 5).unwrap();
        assert!(y.is_zero());
    }

    #[test]
    fn ass_is_exact_for_independent_spins() {
        // With only a p = 1 term, z(σ) is one Gaussian of variance β² shared by all σ.
        let beta = 0.8;
        let spec = MixtureSpec::from_pairs(&[(1, beta)]).unwrap();
        let est = ass_increment_with(5, &spec, 400, 50, 2, &AssOptions { pert: false }).unwrap();
        let grid = QuadratureGrid::gauss_hermite(80).unwrap();
        let exact = LN_2 + grid.expect(beta, log_cosh);
        assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn interpolation_endpoint_at_one_is_the_free_energy() {
        let spec = sk(0.8);
        let params = RsbParams::new(vec![0.4, 0.8], vec![0.3, 0.7]).unwrap();
        let opts = GuerraOptions { leaf_budget: 64, pilot_fraction: 0.0, ..Default::default() };
        let grid = guerra_phi_grid(5, &spec, &params, &[1.0], 30, 3, &opts).unwrap();
        let fe = simulator::free_energy_mc(5, &spec, 30, true, false, 3).unwrap();
        assert!((grid.points[0].estimate.mean - fe.estimate.mean).abs() < 1e-12);
    }

    #[test]
    fn interpolation_of_the_zero_mixture_is_log_two() {
        let params = RsbParams::single(0.5, 0.3).unwrap();
        let opts = GuerraOptions { leaf_budget: 64, pert: false, pilot_fraction: 0.0, ..Default::default() };
        let grid = guerra_phi_grid(4, &MixtureSpec::zero(2), &params, &[0.0, 0.5, 1.0], 5, 1, &opts).unwrap();
        for p in &grid.points {
            assert!((p.estimate.mean - LN_2).abs() < 1e-12, "{p:?}");
        }
        assert!(grid.is_nonincreasing(3.0));
    }

    #[test]
    fn interpolation_endpoint_at_zero_is_the_cascade_functional() {
        let spec = sk(0.6);
        let params = RsbParams::single(0.5, 0.3).unwrap();
        let opts = GuerraOptions { leaf_budget: 256, pert: false, ..Default::default() };
        let grid = guerra_phi_grid(3, &spec, &params, &[0.0], 2000, 5, &opts).unwrap();
        let x0 = evaluate_x0(&spec, &params, &QuadratureGrid::default()).unwrap();
        assert!(grid.points[0].estimate.agrees_with(x0, 3.0), "{:?} vs {x0}", grid.points[0]);
    }

    #[test]
    fn grid_validation_and_csv() {
        let spec = sk(0.5);
        let params = RsbParams::single(0.5, 0.3).unwrap();
        let opts = GuerraOptions { leaf_budget: 16, pilot_fraction: 0.0, ..Default::default() };
        assert!(guerra_phi_grid(3, &spec, &params, &[1.5], 4, 0, &opts).is_err());
        assert!(guerra_phi_grid(3, &spec, &params, &[], 4, 0, &opts).is_err());
        assert!(guerra_phi_grid(17, &spec, &params, &[0.5], 4, 0, &opts).is_err());
        assert!(guerra_phi_grid(3, &spec, &RsbParams::single(1.0, 0.3).unwrap(), &[0.5], 4, 0, &opts).is_err());
        let grid = guerra_phi_grid(3, &spec, &params, &[0.0, 1.0], 4, 9, &opts).unwrap();
        let csv = grid.to_csv();
        assert!(csv.starts_with("t,mean,stderr,N,seed\n0,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn bound_check_verdicts() {
        let zero = bound_verdict(
            &MixtureSpec::zero(2),
            simulator::free_energy_mc(6, &MixtureSpec::zero(2), 4, false, false, 0).unwrap(),
            LN_2,
        );
        assert_eq!(zero.verdict, BoundVerdict::Pass);
        assert_eq!(zero.gap, 0.0);
        let check = guerra_bound_check(10, &sk(0.6), &RsbParams::single(0.5, 0.3).unwrap(), 200, 1).unwrap();
        assert_eq!(check.verdict, BoundVerdict::Pass, "{check:?}");
        let odd = MixtureSpec::from_pairs(&[(2, 0.5), (3, 0.3)]).unwrap();
        let check = guerra_bound_check(6, &odd, &RsbParams::single(0.5, 0.3).unwrap(), 20, 1).unwrap();
        assert_eq!(check.verdict, BoundVerdict::Reported);
    }
}
