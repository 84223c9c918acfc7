//! Statistical checks on overlap arrays: Ghirlanda–Guerra identities,
//! ultrametricity, overlap positivity and the `κ` discretisation.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::overlap::OverlapArray;
use crate::simulator::{self, Variant};
use crate::stats::{Accumulator, Estimate};
use crate::walsh;
use crate::{Error, MixtureSpec, Result};

/// Minimum number of overlap arrays for a GG statistic.
pub const MIN_GG_SAMPLES: usize = 100;

/// Minimum number of triples for the ultrametricity fraction.
pub const MIN_TRIPLES: usize = 100;

/// Tolerance for equal overlaps in the ultrametric test.
pub const ULTRAMETRIC_TOLERANCE: f64 = 1e-12;

/// Bounded test functions of an overlap array; replica indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgFunction {
    Constant,
    /// `R_{a,b}^r`.
    Monomial { a: usize, b: usize, r: u32 },
    /// `R_{a,b} R_{c,d}`.
    Product { a: usize, b: usize, c: usize, d: usize },
}

impl GgFunction {
    fn indices(&self) -> Vec<usize> {
        match *self {
            Self::Constant => vec![],
            Self::Monomial { a, b, .. } => vec![a, b],
            Self::Product { a, b, c, d } => vec![a, b, c, d],
        }
    }

    pub fn eval(&self, r: &OverlapArray) -> f64 {
        let at = |a: usize, b: usize| r.get(a - 1, b - 1);
        match *self {
            Self::Constant => 1.0,
            Self::Monomial { a, b, r: power } => at(a, b).powi(power as i32),
            Self::Product { a, b, c, d } => at(a, b) * at(c, d),
        }
    }

    /// Relabels replica `l` as `perm[l - 1] + 1` (0-based `perm`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = |l: usize| perm[l - 1] + 1;
        match *self {
            Self::Constant => Self::Constant,
            Self::Monomial { a, b, r } => Self::Monomial { a: m(a), b: m(b), r },
            Self::Product { a, b, c, d } => Self::Product { a: m(a), b: m(b), c: m(c), d: m(d) },
        }
    }

    /// Parses `1`, `R12`, `R12^2` or `R12*R34` (single-digit indices may also be
    /// written `R1,2`).
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::InvalidArgument(format!("unrecognised GG function '{text}'"));
        if t == "1" {
            return Ok(Self::Constant);
        }
        let entry = |s: &str| -> Result<(usize, usize)> {
            let body = s.trim().strip_prefix('R').ok_or_else(bad)?;
            let parts: Vec<&str> = if body.contains(',') {
                body.split(',').collect()
            } else if body.len() == 2 {
                vec![&body[..1], &body[1..]]
            } else {
                return Err(bad());
            };
            match parts.as_slice() {
                [a, b] => Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)),
                _ => Err(bad()),
            }
        };
        if let Some((x, y)) = t.split_once('*') {
            let (a, b) = entry(x)?;
            let (c, d) = entry(y)?;
            return Ok(Self::Product { a, b, c, d });
        }
        let (base, r) = match t.split_once('^') {
            Some((base, r)) => (base, r.trim().parse().map_err(|_| bad())?),
            None => (t, 1),
        };
        let (a, b) = entry(base)?;
        Ok(Self::Monomial { a, b, r })
    }
}

impl std::fmt::Display for GgFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Self::Constant => write!(f, "1"),
            Self::Monomial { a, b, r: 1 } => write!(f, "R{a},{b}"),
            Self::Monomial { a, b, r } => write!(f, "R{a},{b}^{r}"),
            Self::Product { a, b, c, d } => write!(f, "R{a},{b}*R{c},{d}"),
        }
    }
}

/// A Ghirlanda–Guerra query: `f` of the first `n` replicas and the power `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GgQuery {
    pub f: GgFunction,
    pub n: usize,
    pub p: u32,
}

impl GgQuery {
    pub fn new(f: GgFunction, n: usize, p: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("GG query needs n >= 2, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidArgument("GG query needs p >= 1".into()));
        }
        let idx = f.indices();
        if idx.iter().any(|&l| l < 1 || l > n) {
            return Err(Error::InvalidArgument(format!("{f} uses replicas outside 1..={n}")));
        }
        if idx.chunks(2).any(|pair| pair[0] == pair[1]) {
            return Err(Error::InvalidArgument(format!("{f} uses a diagonal entry")));
        }
        Ok(Self { f, n, p })
    }

    /// The standard query set: `f ≡ 1` at `n = 2` and `f = R_{2,3}` at `n = 3`, for `p ∈ {1, 2}`.
    pub fn builtin_set() -> Vec<GgQuery> {
        let mut out = Vec::new();
        for p in [1, 2] {
            out.push(GgQuery { f: GgFunction::Constant, n: 2, p });
            out.push(GgQuery { f: GgFunction::Monomial { a: 2, b: 3, r: 1 }, n: 3, p });
        }
        out
    }
}

/// `φ` with its delta-method standard error; `signed` is the combination before the absolute value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgResult {
    pub phi: f64,
    pub signed: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl GgResult {
    pub fn consistent_with_zero(&self, sigmas: f64) -> bool {
        self.phi <= sigmas * self.stderr + 1e-12
    }
}

/// `|E⟨f R_{1,n+1}^p⟩ - (1/n) E⟨f⟩ E⟨R_{1,2}^p⟩ - (1/n) Σ_{l=2}^n E⟨f R_{1,l}^p⟩|`
/// with each expectation replaced by a sample mean over the arrays. `E⟨R_{1,2}^p⟩`
/// is estimated by the mean of `R_{1,l}^p` over `l = 2..n`, which keeps the
/// statistic invariant under relabelling of replicas `2..n`.
pub fn gg_statistic(samples: &[OverlapArray], query: &GgQuery) -> Result<GgResult> {
    if samples.len() < MIN_GG_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_GG_SAMPLES, got: samples.len() });
    }
    let n = query.n;
    if let Some(s) = samples.iter().find(|s| s.n() < n + 1) {
        return Err(Error::InvalidArgument(format!("GG query with n = {n} needs arrays of size {}, got {}", n + 1, s.n())));
    }
    let p = query.p as i32;
    let rows: Vec<[f64; 4]> = samples
        .iter()
        .map(|r| {
            let f = query.f.eval(r);
            let a = f * r.get(0, n).powi(p);
            let powers: Vec<f64> = (1..n).map(|l| r.get(0, l).powi(p)).collect();
            // E⟨R_{1,2}^p⟩ averaged over the exchangeable pairs (1, l), l = 2..n.
            let c = powers.iter().sum::<f64>() / (n - 1) as f64;
            let d: f64 = powers.iter().map(|x| f * x).sum();
            [a, f, c, d]
        })
        .collect();
    let s = rows.len() as f64;
    let mean = |j: usize| rows.iter().map(|row| row[j]).sum::<f64>() / s;
    let (ma, mb, mc, md) = (mean(0), mean(1), mean(2), mean(3));
    let nf = n as f64;
    let signed = ma - mb * mc / nf - md / nf;
    let influence: Accumulator = rows.iter().map(|row| row[0] - (mc * row[1] + mb * row[2]) / nf - row[3] / nf).collect();
    let stderr = (influence.variance() / s).sqrt();
    Ok(GgResult { phi: signed.abs(), signed, stderr, n_samples: rows.len() })
}

/// Whether every rotation of the triple satisfies `R_{1,2} ≥ min(R_{1,3}, R_{2,3})`,
/// i.e. the two smallest values coincide.
pub fn triple_is_ultrametric(x: f64, y: f64, z: f64) -> bool {
    let mut v = [x, y, z];
    v.sort_by(f64::total_cmp);
    v[1] - v[0] <= ULTRAMETRIC_TOLERANCE
}

fn array_triples(r: &OverlapArray) -> (usize, usize) {
    let n = r.n();
    let mut pass = 0;
    let mut total = 0;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                total += 1;
                if triple_is_ultrametric(r.get(a, b), r.get(a, c), r.get(b, c)) {
                    pass += 1;
                }
            }
        }
    }
    (pass, total)
}

/// Fraction of index triples satisfying the ultrametric inequality; the
/// standard error is taken over the per-array fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltrametricResult {
    pub fraction: f64,
    pub stderr: f64,
    pub n_triples: usize,
    pub n_arrays: usize,
}

pub fn ultrametricity_fraction(samples: &[OverlapArray]) -> Result<UltrametricResult> {
    if let Some(s) = samples.iter().find(|s| s.n() < 3) {
        return Err(Error::InvalidArgument(format!("ultrametricity needs arrays of size >= 3, got {}", s.n())));
    }
    let counts: Vec<(usize, usize)> = samples.iter().map(array_triples).collect();
    let n_triples: usize = counts.iter().map(|c| c.1).sum();
    if n_triples < MIN_TRIPLES || samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: MIN_TRIPLES, got: n_triples });
    }
    let passed: usize = counts.iter().map(|c| c.0).sum();
    let per_array: Accumulator = counts.iter().map(|&(p, t)| p as f64 / t as f64).collect();
    Ok(UltrametricResult {
        fraction: passed as f64 / n_triples as f64,
        stderr: (per_array.variance() / samples.len() as f64).sqrt(),
        n_triples,
        n_arrays: samples.len(),
    })
}

/// Law of `R_{1,2}` for two independent replicas from Gibbs weights `g` over
/// `2^N` configurations: entry `d` is `P(R_{1,2} = 1 - 2d/N)`.
pub fn overlap_pmf(weights: &[f64], n: usize) -> Vec<f64> {
    let mut h = weights.to_vec();
    walsh::fwht(&mut h);
    h.iter_mut().for_each(|x| *x *= *x);
    walsh::fwht(&mut h);
    let scale = 1.0 / weights.len() as f64;
    let mut pmf = vec![0.0; n + 1];
    for (x, &c) in h.iter().enumerate() {
        pmf[x.count_ones() as usize] += c * scale;
    }
    pmf
}

/// Per-realization `P(R_{1,2} ≤ -ε)` and `P(R_{1,2} ≥ ε)` under two independent Gibbs replicas.
pub fn overlap_tails(n: usize, spec: &MixtureSpec, pert: bool, epsilon: f64, n_samples: usize, seed_value: u64) -> Result<Vec<(f64, f64)>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain { value: epsilon, domain: "(0, inf)" });
    }
    if n_samples < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_samples });
    }
    if n > simulator::ENUMERATION_CAP {
        return Err(Error::EnumerationCap { n, cap: simulator::ENUMERATION_CAP });
    }
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let d = simulator::sample_disorder(n, spec, pert, simulator::disorder_seed(seed_value, i))?;
            let w = simulator::gibbs_weights(&simulator::energies(&d, spec, Variant::Standard)?);
            let pmf = overlap_pmf(&w, n);
            let r = |dist: usize| 1.0 - 2.0 * dist as f64 / n as f64;
            let lower = (0..=n).filter(|&j| r(j) <= -epsilon + 1e-12).map(|j| pmf[j]).sum();
            let upper = (0..=n).filter(|&j| r(j) >= epsilon - 1e-12).map(|j| pmf[j]).sum();
            Ok((lower, upper))
        })
        .collect()
}

/// `E ⟨I(R_{1,2} ≤ -ε)⟩` over disorder, computed exactly per realization.
pub fn positivity_probability(n: usize, spec: &MixtureSpec, pert: bool, epsilon: f64, n_samples: usize, seed_value: u64) -> Result<Estimate> {
    let tails = overlap_tails(n, spec, pert, epsilon, n_samples, seed_value)?;
    Estimate::from_samples(&tails.iter().map(|t| t.0).collect::<Vec<_>>())
}

/// `κ(q) = ⌊qk⌋ / k`, with `κ(1) = 1`.
pub fn kappa_discretize(q: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain { value: q, domain: "[0, 1]" });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("kappa needs k >= 1".into()));
    }
    let j = (q * k as f64 + 1e-9).floor().min(k as f64);
    Ok(j / k as f64)
}

/// Applies `κ` to every off-diagonal entry.
pub fn kappa_array(r: &OverlapArray, k: usize) -> Result<OverlapArray> {
    let n = r.n();
    let mut data = r.as_slice().to_vec();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                data[a * n + b] = kappa_discretize(data[a * n + b], k)?;
            }
        }
    }
    OverlapArray::new(n, data)
}

/// Smallest eigenvalue of a symmetric array.
pub fn min_eigenvalue(r: &OverlapArray) -> f64 {
    let m = DMatrix::from_row_slice(r.n(), r.n(), r.as_slice());
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpc;
    use crate::RsbParams;
    use rand::Rng as _;

    fn cascade_arrays(n_replicas: usize, count: usize, seed: u64) -> Vec<OverlapArray> {
        let params = RsbParams::new(vec![0.3, 0.7], vec![0.2, 0.6]).unwrap();
        rpc::sample_overlap_stream(&params, 64, n_replicas, count, seed).unwrap()
    }

    #[test]
    fn function_parsing_and_display() {
        assert_eq!(GgFunction::parse("1").unwrap(), GgFunction::Constant);
        assert_eq!(GgFunction::parse("R23").unwrap(), GgFunction::Monomial { a: 2, b: 3, r: 1 });
        assert_eq!(GgFunction::parse("R2,3^2").unwrap(), GgFunction::Monomial { a: 2, b: 3, r: 2 });
        assert_eq!(GgFunction::parse("R12*R34").unwrap(), GgFunction::Product { a: 1, b: 2, c: 3, d: 4 });
        assert!(GgFunction::parse("S12").is_err());
        for f in [GgFunction::Constant, GgFunction::Monomial { a: 1, b: 3, r: 2 }, GgFunction::Product { a: 1, b: 2, c: 2, d: 3 }] {
            assert_eq!(GgFunction::parse(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn query_validation() {
        assert!(GgQuery::new(GgFunction::Constant, 1, 1).is_err());
        assert!(GgQuery::new(GgFunction::Constant, 2, 0).is_err());
        assert!(GgQuery::new(GgFunction::Monomial { a: 2, b: 4, r: 1 }, 3, 1).is_err());
        assert!(GgQuery::new(GgFunction::Monomial { a: 2, b: 2, r: 1 }, 3, 1).is_err());
        assert!(GgQuery::new(GgFunction::Monomial { a: 2, b: 3, r: 1 }, 3, 1).is_ok());
    }

    #[test]
    fn gg_needs_enough_samples_of_enough_replicas() {
        let q = GgQuery::new(GgFunction::Constant, 2, 1).unwrap();
        assert!(matches!(gg_statistic(&cascade_arrays(3, 50, 1), &q), Err(Error::InsufficientSamples { .. })));
        let q = GgQuery::new(GgFunction::Monomial { a: 2, b: 3, r: 1 }, 3, 1).unwrap();
        assert!(gg_statistic(&cascade_arrays(3, 200, 1), &q).is_err());
    }

    #[test]
    fn gg_vanishes_on_cascades() {
        let arrays = cascade_arrays(4, 4000, 2);
        for q in GgQuery::builtin_set() {
            let r = gg_statistic(&arrays, &q).unwrap();
            assert!(r.consistent_with_zero(3.0), "{q:?} {r:?}");
        }
    }

    #[test]
    fn gg_is_invariant_under_relabelling_of_replicas_two_to_n() {
        let arrays = cascade_arrays(5, 300, 3);
        let q = GgQuery::new(GgFunction::Product { a: 1, b: 2, c: 3, d: 4 }, 4, 2).unwrap();
        let base = gg_statistic(&arrays, &q).unwrap();
        // Relabel replicas 2..4 as 4, 2, 3; replicas 1 and 5 stay.
        let perm = [0, 3, 1, 2, 4];
        let permuted: Vec<OverlapArray> = arrays.iter().map(|a| a.permuted(&perm)).collect();
        let mut inverse = [0; 5];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let qp = GgQuery::new(q.f.permuted(&inverse), 4, 2).unwrap();
        let other = gg_statistic(&permuted, &qp).unwrap();
        assert!((base.signed - other.signed).abs() < 1e-12);
        assert!((base.stderr - other.stderr).abs() < 1e-12);
    }

    #[test]
    fn ultrametric_triples() {
        assert!(triple_is_ultrametric(0.2, 0.2, 0.7));
        assert!(triple_is_ultrametric(0.5, 0.5, 0.5));
        assert!(!triple_is_ultrametric(0.1, 0.2, 0.3));
        assert!(!triple_is_ultrametric(0.7, 0.7, 0.2));
    }

    #[test]
    fn cascades_are_exactly_ultrametric() {
        let r = ultrametricity_fraction(&cascade_arrays(5, 100, 4)).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert_eq!(r.n_triples, 1000);
    }

    #[test]
    fn uniform_entries_are_not_ultrametric() {
        let mut rng = crate::seed::rng(5);
        let arrays: Vec<OverlapArray> = (0..50)
            .map(|_| {
                let upper: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                OverlapArray::from_upper(4, &upper).unwrap()
            })
            .collect();
        let r = ultrametricity_fraction(&arrays).unwrap();
        assert!(r.fraction < 1.0);
        assert!(ultrametricity_fraction(&arrays[..10]).is_err());
    }

    #[test]
    fn overlap_pmf_matches_direct_sum() {
        let spec = MixtureSpec::from_pairs(&[(2, 1.0), (3, 0.5)]).unwrap();
        let d = simulator::sample_disorder(5, &spec, true, 3).unwrap();
        let w = simulator::gibbs_weights(&simulator::energies(&d, &spec, Variant::Standard).unwrap());
        let pmf = overlap_pmf(&w, 5);
        let mut direct = vec![0.0; 6];
        for a in 0..32usize {
            for b in 0..32usize {
                direct[(a ^ b).count_ones() as usize] += w[a] * w[b];
            }
        }
        for (x, y) in pmf.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((pmf[0] - w.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-13);
    }

    #[test]
    fn positivity_edge_cases() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.5)]).unwrap();
        let p = positivity_probability(6, &spec, false, 1.0 + 2.0 / 6.0, 4, 1).unwrap();
        assert_eq!(p.mean, 0.0);
        assert!(positivity_probability(6, &spec, false, 0.0, 4, 1).is_err());
        let zero = MixtureSpec::zero(2);
        let tails = overlap_tails(6, &zero, false, 0.3, 4, 1).unwrap();
        for (lo, hi) in tails {
            assert!((lo - hi).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa_discretize(0.37, 10).unwrap() - 0.3).abs() < 1e-15);
        for k in 1..6 {
            assert_eq!(kappa_discretize(1.0, k).unwrap(), 1.0);
            for j in 0..=k {
                let g = j as f64 / k as f64;
                assert_eq!(kappa_discretize(g, k).unwrap(), g);
            }
        }
        assert!(kappa_discretize(-0.1, 3).is_err());
        assert!(kappa_discretize(0.5, 0).is_err());
    }

    #[test]
    fn kappa_of_cascade_arrays_is_ultrametric_and_psd() {
        for a in cascade_arrays(6, 50, 6) {
            let kap = kappa_array(&a, 4).unwrap();
            assert!(min_eigenvalue(&kap) >= -1e-10);
            assert!(min_eigenvalue(&a) >= -1e-10);
        }
        let r = ultrametricity_fraction(&cascade_arrays(6, 50, 6).iter().map(|a| kappa_array(a, 4).unwrap()).collect::<Vec<_>>()).unwrap();
        assert_eq!(r.fraction, 1.0);
    }

    proptest::proptest! {
        #[test]
        fn kappa_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, k in 1usize..20) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(kappa_discretize(lo, k).unwrap() <= kappa_discretize(hi, k).unwrap());
            let once = kappa_discretize(a, k).unwrap();
            proptest::prop_assert_eq!(kappa_discretize(once, k).unwrap(), once);
        }
    }
}

