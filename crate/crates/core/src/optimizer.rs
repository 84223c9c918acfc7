//! Minimisation of the Parisi functional over `m⃗`, `q⃗` and `k`.
//!
//! The ordered constraints `0 ≤ m_1 ≤ … ≤ m_k ≤ 1` (and the same for `q⃗`)
//! are removed by writing each sequence as normalised cumulative sums of
//! squares: with free coordinates `a_1, …, a_{k+1}`,
//! `m_j = (a_1² + … + a_j²) / (a_1² + … + a_{k+1}²)`. Every point of the
//! unconstrained space maps to feasible parameters. The search itself is a
//! Nelder–Mead simplex with dimension-adaptive coefficients and multi-start.
//!
//! Levels are added one at a time; the optimum at `k - 1`, embedded by
//! repeating its last `q`, seeds the search at `k`, so the optimal value never
//! increases with `k`.

use rand::Rng as _;
use rayon::prelude::*;

use crate::parisi::evaluate_parisi;
use crate::seed::{self, Stream};
use crate::{Error, MixtureSpec, QuadratureGrid, Result, RsbParams};

/// Upper limit on `k_max`; the nested quadrature costs `nodes^(k+1)` per evaluation.
pub const K_MAX_GUARD: usize = 6;

/// Coordinate curvature below which an optimum is reported as flat.
pub const FLATNESS_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub k_max: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { k_max: 3, restarts: 16, tolerance: 1e-6, max_iterations: 2000, seed: 0 }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.k_max == 0 || self.k_max > K_MAX_GUARD {
            return Err(Error::InvalidArgument(format!("k_max must be in 1..={K_MAX_GUARD}, got {}", self.k_max)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Best point found by the optimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub params: RsbParams,
    pub k_used: usize,
    pub converged: bool,
    /// Functional evaluations spent, summed over restarts and levels.
    pub evaluations: usize,
    /// Set when some coordinate has curvature below [`FLATNESS_THRESHOLD`].
    pub flat: bool,
}

/// One line of the optimisation trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub restart: usize,
    pub iteration: usize,
    pub value: f64,
}

impl std::fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "k={} restart={} iteration={} value={:.12e}", self.k, self.restart, self.iteration, self.value)
    }
}

/// Maps free coordinates to a monotone sequence in `[0, 1]` of length `len - 1`.
fn cumulative_squares(a: &[f64]) -> Vec<f64> {
    let total: f64 = a.iter().map(|x| x * x).sum();
    let mut acc = 0.0;
    a[..a.len() - 1]
        .iter()
        .map(|x| {
            acc += x * x;
            if total > 0.0 {
                (acc / total).min(1.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn inverse_cumulative(seq: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    let mut out: Vec<f64> = seq
        .iter()
        .map(|&x| {
            let d = (x - prev).max(0.0).sqrt();
            prev = x;
            d
        })
        .collect();
    out.push((1.0 - prev).max(0.0).sqrt());
    out
}

/// Feasible parameters for a point of the unconstrained space (`2k + 2` coordinates).
pub fn params_from_free(u: &[f64]) -> RsbParams {
    let half = u.len() / 2;
    RsbParams::new(cumulative_squares(&u[..half]), cumulative_squares(&u[half..]))
        .expect("cumulative squares are monotone in [0, 1]")
}

/// A preimage of `params` in the unconstrained space.
pub fn free_from_params(params: &RsbParams) -> Vec<f64> {
    let mut u = inverse_cumulative(params.m());
    u.extend(inverse_cumulative(params.q()));
    u
}

struct Objective<'a> {
    spec: &'a MixtureSpec,
    grid: &'a QuadratureGrid,
    evaluations: usize,
}

impl Objective<'_> {
    fn eval(&mut self, u: &[f64]) -> f64 {
        self.evaluations += 1;
        let params = params_from_free(u);
        evaluate_parisi(self.spec, &params, self.grid).unwrap_or(f64::INFINITY)
    }
}

struct SimplexResult {
    best: Vec<f64>,
    value: f64,
    converged: bool,
    trace: Vec<(usize, f64)>,
}

const SIMPLEX_STEP: f64 = 0.25;
const F_SPREAD_TOL: f64 = 1e-11;
const X_SPREAD_TOL: f64 = 1e-8;

fn nelder_mead(obj: &mut Objective<'_>, x0: &[f64], max_iterations: usize) -> SimplexResult {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += SIMPLEX_STEP;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| obj.eval(v)).collect();
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 0..max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        trace.push((iteration, values[0]));

        let f_spread = values[n] - values[0];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= F_SPREAD_TOL || x_spread <= X_SPREAD_TOL {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(alpha);
        let fr = obj.eval(&xr);
        if fr < values[0] {
            let xe = along(alpha * beta);
            let fe = obj.eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[n] {
            let xc = along(alpha * gamma);
            let fc = obj.eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-gamma);
            let fc = obj.eval(&xc);
            (xc, fc, fc < values[n])
        };
        if accept {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for i in 1..=n {
            let v: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + delta * (x - b)).collect();
            values[i] = obj.eval(&v);
            simplex[i] = v;
        }
    }

    let best_idx = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    SimplexResult { best: simplex[best_idx].clone(), value: values[best_idx], converged, trace }
}

fn random_start(k: usize, rng: &mut seed::Rng) -> RsbParams {
    let mut draw = || {
        let mut v: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let m = draw();
    let q = draw();
    RsbParams::new(m, q).expect("sorted uniforms are feasible")
}

fn evenly_spaced_start(k: usize) -> RsbParams {
    let grid: Vec<f64> = (1..=k).map(|j| j as f64 / (k + 1) as f64).collect();
    RsbParams::new(grid.clone(), grid).expect("evenly spaced points are feasible")
}

fn is_flat(obj: &mut Objective<'_>, u: &[f64], center: f64) -> bool {
    let h = 1e-3;
    (0..u.len()).any(|i| {
        let mut up = u.to_vec();
        let mut down = u.to_vec();
        up[i] += h;
        down[i] -= h;
        let curvature = (obj.eval(&up) - 2.0 * center + obj.eval(&down)) / (h * h);
        curvature.abs() < FLATNESS_THRESHOLD
    })
}

fn lexicographic(a: &RsbParams, b: &RsbParams) -> std::cmp::Ordering {
    a.m().iter()
        .chain(a.q())
        .zip(b.m().iter().chain(b.q()))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn optimize_level(
    spec: &MixtureSpec,
    k: usize,
    grid: &QuadratureGrid,
    opts: &OptimizerOptions,
    warm: Option<&RsbParams>,
    trace: &mut dyn FnMut(TraceRecord),
) -> Result<Optimum> {
    let level_seed = seed::derive(opts.seed, Stream::Restart, k as u64);
    let mut starts: Vec<RsbParams> = Vec::with_capacity(opts.restarts);
    if let Some(w) = warm {
        starts.push(w.clone());
    }
    if starts.len() < opts.restarts {
        starts.push(evenly_spaced_start(k));
    }
    let mut rng = seed::rng(level_seed);
    while starts.len() < opts.restarts {
        starts.push(random_start(k, &mut rng));
    }

    let runs: Vec<(SimplexResult, usize)> = starts
        .par_iter()
        .map(|start| {
            let mut obj = Objective { spec, grid, evaluations: 0 };
            let res = nelder_mead(&mut obj, &free_from_params(start), opts.max_iterations);
            (res, obj.evaluations)
        })
        .collect();

    let mut evaluations = 0;
    let mut best: Option<(usize, RsbParams, f64, bool)> = None;
    for (restart, (res, evals)) in runs.iter().enumerate() {
        evaluations += evals;
        for &(iteration, value) in &res.trace {
            trace(TraceRecord { k, restart, iteration, value });
        }
        let params = params_from_free(&res.best);
        let better = match &best {
            None => true,
            Some((_, bp, bv, _)) => {
                res.value < *bv || (res.value == *bv && lexicographic(&params, bp).is_lt())
            }
        };
        if better {
            best = Some((restart, params, res.value, res.converged));
        }
    }
    let (restart, params, value, converged) = best.expect("at least one restart");
    if !value.is_finite() {
        // Every candidate failed; surface the evaluation error itself.
        evaluate_parisi(spec, &params, grid)?;
        return Err(Error::QuadratureOverflow { level: 0 });
    }
    let mut obj = Objective { spec, grid, evaluations: 0 };
    let flat = is_flat(&mut obj, &free_from_params(&params), value);
    let _ = restart;
    Ok(Optimum {
        value,
        params,
        k_used: k,
        converged,
        evaluations: evaluations + obj.evaluations,
        flat,
    })
}

/// Runs levels `1..=k_max`, warm-starting each from the previous optimum.
/// With `stop_early`, stops once adding a level improves by less than the tolerance.
fn optimize_chain(
    spec: &MixtureSpec,
    k_max: usize,
    grid: &QuadratureGrid,
    opts: &OptimizerOptions,
    stop_early: bool,
    trace: &mut dyn FnMut(TraceRecord),
) -> Result<Vec<Optimum>> {
    opts.validate()?;
    let mut chain: Vec<Optimum> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let warm = match chain.last() {
            Some(prev) => Some(prev.params.duplicate_q(k - 1)?),
            None => None,
        };
        let opt = optimize_level(spec, k, grid, opts, warm.as_ref(), trace)?;
        let improvement = chain.last().map(|prev| prev.value - opt.value);
        chain.push(opt);
        if stop_early && improvement.is_some_and(|d| d < opts.tolerance) {
            break;
        }
    }
    Ok(chain)
}

/// Best `(m⃗, q⃗)` with exactly `k` levels.
pub fn optimize_at_k(spec: &MixtureSpec, k: usize, grid: &QuadratureGrid, opts: &OptimizerOptions) -> Result<Optimum> {
    optimize_at_k_traced(spec, k, grid, opts, &mut |_| {})
}

pub fn optimize_at_k_traced(
    spec: &MixtureSpec,
    k: usize,
    grid: &QuadratureGrid,
    opts: &OptimizerOptions,
    trace: &mut dyn FnMut(TraceRecord),
) -> Result<Optimum> {
    if k == 0 || k > opts.k_max {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={}", opts.k_max)));
    }
    let chain = optimize_chain(spec, k, grid, opts, false, trace)?;
    let evaluations = chain.iter().map(|o| o.evaluations).sum();
    let mut last = chain.into_iter().last().expect("k >= 1");
    last.evaluations = evaluations;
    Ok(last)
}

/// Infimum over `k ≤ k_max`; `k_used` is the smallest `k` within tolerance of the best.
pub fn optimize_full(spec: &MixtureSpec, grid: &QuadratureGrid, opts: &OptimizerOptions) -> Result<Optimum> {
    optimize_full_traced(spec, grid, opts, &mut |_| {})
}

pub fn optimize_full_traced(
    spec: &MixtureSpec,
    grid: &QuadratureGrid,
    opts: &OptimizerOptions,
    trace: &mut dyn FnMut(TraceRecord),
) -> Result<Optimum> {
    let chain = optimize_chain(spec, opts.k_max, grid, opts, true, trace)?;
    let evaluations = chain.iter().map(|o| o.evaluations).sum();
    let best = chain.iter().map(|o| o.value).fold(f64::INFINITY, f64::min);
    let mut chosen = chain
        .into_iter()
        .find(|o| o.value <= best + opts.tolerance)
        .expect("the best level is within tolerance of itself");
    chosen.evaluations = evaluations;
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn fast_opts() -> OptimizerOptions {
        OptimizerOptions { restarts: 4, k_max: 2, ..Default::default() }
    }

    #[test]
    fn reparameterization_round_trip() {
        let p = RsbParams::new(vec![0.1, 0.1, 0.8], vec![0.0, 0.5, 1.0]).unwrap();
        let back = params_from_free(&free_from_params(&p));
        for (a, b) in back.m().iter().chain(back.q()).zip(p.m().iter().chain(p.q())) {
            assert!((a - b).abs() < 1e-15);
        }
        // The all-zero point maps to the zero sequences.
        let z = params_from_free(&[0.0; 4]);
        assert_eq!(z.m(), &[0.0]);
        assert_eq!(z.q(), &[0.0]);
    }

    proptest! {
        #[test]
        fn every_free_point_is_feasible(u in prop::collection::vec(-5.0..5.0f64, 4..=8usize).prop_filter("even", |u| u.len() % 2 == 0)) {
            // RsbParams::new inside params_from_free would panic otherwise.
            let p = params_from_free(&u);
            prop_assert_eq!(p.k(), u.len() / 2 - 1);
            prop_assert!(RsbParams::new(p.m().to_vec(), p.q().to_vec()).is_ok());
        }
    }

    #[test]
    fn options_validation() {
        assert!(OptimizerOptions::default().validate().is_ok());
        assert!(OptimizerOptions { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerOptions { k_max: 7, ..Default::default() }.validate().is_err());
        assert!(OptimizerOptions { restarts: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn zero_mixture_optimum_is_log_two() {
        let opt = optimize_full(&MixtureSpec::zero(2), &QuadratureGrid::default(), &fast_opts()).unwrap();
        assert!((opt.value - LN_2).abs() < 1e-12);
        assert_eq!(opt.k_used, 1);
        assert!(opt.converged);
        let at2 = optimize_at_k(&MixtureSpec::zero(2), 2, &QuadratureGrid::default(), &fast_opts()).unwrap();
        assert!((at2.value - LN_2).abs() < 1e-12);
    }

    #[test]
    fn replica_symmetric_high_temperature() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.5)]).unwrap();
        let opt = optimize_at_k(&spec, 1, &QuadratureGrid::default(), &fast_opts()).unwrap();
        assert!((opt.value - (LN_2 + 0.125)).abs() < 1e-3, "value={}", opt.value);
        assert!(opt.params.q()[0] <= 0.01, "q1={}", opt.params.q()[0]);
    }

    #[test]
    fn more_levels_never_hurt() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.9)]).unwrap();
        let grid = QuadratureGrid::gauss_hermite(24).unwrap();
        let k1 = optimize_at_k(&spec, 1, &grid, &fast_opts()).unwrap();
        let k2 = optimize_at_k(&spec, 2, &grid, &fast_opts()).unwrap();
        assert!(k2.value <= k1.value + 1e-9, "k1={} k2={}", k1.value, k2.value);
        assert_eq!(k2.params.k(), 2);
    }

    #[test]
    fn optimum_value_matches_its_params_and_beats_starts() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.9), (4, 0.3)]).unwrap();
        let grid = QuadratureGrid::gauss_hermite(24).unwrap();
        let opts = fast_opts();
        let opt = optimize_at_k(&spec, 1, &grid, &opts).unwrap();
        let direct = evaluate_parisi(&spec, &opt.params, &grid).unwrap();
        assert!((opt.value - direct).abs() < 1e-10);
        let mut rng = seed::rng(seed::derive(opts.seed, Stream::Restart, 1));
        let mut starts = vec![evenly_spaced_start(1)];
        while starts.len() < opts.restarts {
            starts.push(random_start(1, &mut rng));
        }
        for s in &starts {
            assert!(opt.value <= evaluate_parisi(&spec, s, &grid).unwrap());
        }
    }

    #[test]
    fn restarts_are_deterministic() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.7), (3, 0.4)]).unwrap();
        let grid = QuadratureGrid::gauss_hermite(16).unwrap();
        let opts = OptimizerOptions { seed: 99, ..fast_opts() };
        let a = optimize_full(&spec, &grid, &opts).unwrap();
        let b = optimize_full(&spec, &grid, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_is_emitted() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.5)]).unwrap();
        let mut lines = Vec::new();
        optimize_at_k_traced(&spec, 1, &QuadratureGrid::gauss_hermite(16).unwrap(), &fast_opts(), &mut |r| {
            lines.push(r.to_string())
        })
        .unwrap();
        assert!(!lines.is_empty());
        assert!(lines[0].starts_with("k=1 restart=0 iteration=0 value="));
    }

    #[test]
    fn k_above_guard_is_rejected() {
        let spec = MixtureSpec::from_pairs(&[(2, 0.5)]).unwrap();
        assert!(optimize_at_k(&spec, 3, &QuadratureGrid::default(), &fast_opts()).is_err());
    }
}
