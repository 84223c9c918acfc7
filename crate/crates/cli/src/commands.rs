//! One function per subcommand, each turning a validated config into records.

use std::time::Instant;

use parisi_core::bounds::{self, AssOptions, GuerraOptions};
use parisi_core::diagnostics;
use parisi_core::optimizer;
use parisi_core::overlap;
use parisi_core::parisi;
use parisi_core::rpc;
use parisi_core::simulator;
use parisi_core::{Error, OverlapArray};

use crate::config::{ConfigError, OverlapSource, RunConfig};
use crate::record::ResultRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evaluate,
    Optimize,
    Simulate,
    RpcCheck,
    Guerra,
    Ass,
    Gg,
    Ultra,
    Positivity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evaluate => "evaluate",
            Self::Optimize => "optimize",
            Self::Simulate => "simulate",
            Self::RpcCheck => "rpc-check",
            Self::Guerra => "guerra",
            Self::Ass => "ass",
            Self::Gg => "gg",
            Self::Ultra => "ultra",
            Self::Positivity => "positivity",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(Error),
    Io(String),
}

impl RunError {
    /// 2 for invalid input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(Error::QuadratureOverflow { .. } | Error::Factorization { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

/// Records plus named CSV files produced by one run.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Output {
    pub records: Vec<ResultRecord>,
    pub files: Vec<(String, String)>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    command: Command,
    digest: String,
}

impl Ctx<'_> {
    fn record(&self) -> ResultRecord {
        let mut r = ResultRecord::new(self.command.name(), &self.digest, self.cfg.seed);
        r.set("mixture", self.cfg.mixture_spec().map(|s| s.describe()).unwrap_or_default());
        r
    }
}

fn finish(mut r: ResultRecord, started: Instant) -> ResultRecord {
    r.set("runtime_s", format!("{:.3}", started.elapsed().as_secs_f64()));
    r
}

pub fn run(command: Command, cfg: &RunConfig, digest: &str) -> Result<Output, RunError> {
    let ctx = Ctx { cfg, command, digest: digest.to_string() };
    match command {
        Command::Evaluate => evaluate(&ctx),
        Command::Optimize => optimize(&ctx),
        Command::Simulate => simulate(&ctx),
        Command::RpcCheck => rpc_check(&ctx),
        Command::Guerra => guerra(&ctx),
        Command::Ass => ass(&ctx),
        Command::Gg => gg(&ctx),
        Command::Ultra => ultra(&ctx),
        Command::Positivity => positivity(&ctx),
    }
}

fn single(r: ResultRecord) -> Output {
    Output { records: vec![r], files: Vec::new() }
}

fn evaluate(ctx: &Ctx) -> Result<Output, RunError> {
    let t = Instant::now();
    let spec = ctx.cfg.mixture_spec()?;
    let params = ctx.cfg.params()?;
    let grid = ctx.cfg.grid()?;
    let value = parisi::evaluate_parisi(&spec, &params, &grid)?;
    let x0 = parisi::evaluate_x0(&spec, &params, &grid)?;
    let mut r = ctx.record();
    r.set("k", params.k()).set_list("m", params.m()).set_list("q", params.q());
    r.set("nodes", grid.nodes_per_level()).set("x0", x0).set("value", value);
    Ok(single(finish(r, t)))
}

fn optimize(ctx: &Ctx) -> Result<Output, RunError> {
    let t = Instant::now();
    let spec = ctx.cfg.mixture_spec()?;
    let grid = ctx.cfg.grid()?;
    let (opts, k) = ctx.cfg.optimizer()?;
    let opt = match k {
        Some(k) => optimizer::optimize_at_k(&spec, k, &grid, &opts)?,
        None => optimizer::optimize_full(&spec, &grid, &opts)?,
    };
    let mut r = ctx.record();
    r.set("value", opt.value).set("k", opt.k_used);
    r.set_list("m", opt.params.m()).set_list("q", opt.params.q());
    r.set("converged", opt.converged).set("flat", opt.flat).set("evaluations", opt.evaluations);
    r.set("restarts", opts.restarts).set("nodes", grid.nodes_per_level());
    Ok(single(finish(r, t)))
}

fn simulate(ctx: &Ctx) -> Result<Output, RunError> {
    let spec = ctx.cfg.mixture_spec()?;
    let block = ctx.cfg.simulate()?;
    let mut out = Output::default();
    for &n in &block.n {
        let t = Instant::now();
        let fe = simulator::free_energy_mc(n, &spec, block.n_disorder, block.pert, block.minus, ctx.cfg.seed)?;
        let mut r = ctx.record();
        r.set("N", n).set("pert", block.pert).set("minus", block.minus);
        r.set_estimate("mean", &fe.estimate);
        out.records.push(finish(r, t));
    }
    Ok(out)
}

fn rpc_check(ctx: &Ctx) -> Result<Output, RunError> {
    let t = Instant::now();
    let spec = ctx.cfg.mixture_spec()?;
    let params = ctx.cfg.params()?;
    let grid = ctx.cfg.grid()?;
    let block = ctx.cfg.rpc()?;
    let quad = parisi::evaluate_x0(&spec, &params, &grid)?;
    let est = rpc::evaluate_x0_rpc(&spec, &params, block.m_atoms, block.n_samples, ctx.cfg.seed)?;
    let se = est.estimate.stderr;
    let z = if se > 0.0 { (est.estimate.mean - quad) / se } else { 0.0 };
    let mut r = ctx.record();
    r.set_list("m", params.m()).set_list("q", params.q()).set("M", block.m_atoms);
    r.set_list("branching", &est.branching);
    r.set("x0_quadrature", quad).set_estimate("x0_rpc", &est.estimate);
    if let Some(shift) = &est.pilot_shift {
        r.set_estimate("pilot_shift", shift);
    }
    r.set("z", z).set("agree_3sigma", z.abs() <= 3.0).set("truncation_warning", est.truncation_warning);
    Ok(single(finish(r, t)))
}

fn guerra(ctx: &Ctx) -> Result<Output, RunError> {
    let spec = ctx.cfg.mixture_spec()?;
    let params = ctx.cfg.params()?;
    let block = ctx.cfg.simulate()?;
    let ts = ctx.cfg.t_grid()?;
    let n_samples = ctx.cfg.guerra_samples()?;
    let m_atoms = ctx.cfg.rpc.as_ref().map(|r| r.m_atoms).unwrap_or(rpc::DEFAULT_BRANCHING);
    let opts = GuerraOptions { m_atoms, pert: block.pert, ..Default::default() };
    let mut out = Output::default();
    for &n in &block.n {
        let t = Instant::now();
        let curve = bounds::guerra_phi_grid(n, &spec, &params, &ts, n_samples, ctx.cfg.seed, &opts)?;
        let mut r = ctx.record();
        r.set("N", n).set("pert", block.pert).set_list("m", params.m()).set_list("q", params.q());
        r.set_list("branching", &curve.branching).set("n_samples", n_samples);
        let first = &curve.points[0];
        let last = curve.points.last().unwrap();
        r.set("t_first", first.t).set_estimate("phi_first", &first.estimate);
        r.set("t_last", last.t).set_estimate("phi_last", &last.estimate);
        r.set("nonincreasing_3sigma", curve.is_nonincreasing(3.0));
        r.set("truncation_warning", curve.truncation_warning);
        r.set("grid_file", format!("guerra_N{n}.csv"));
        out.files.push((format!("guerra_N{n}.csv"), curve.to_csv()));
        out.records.push(finish(r, t));
    }
    Ok(out)
}

fn ass(ctx: &Ctx) -> Result<Output, RunError> {
    let spec = ctx.cfg.mixture_spec()?;
    let block = ctx.cfg.simulate()?;
    let n_field = ctx.cfg.field_samples()?;
    let opts = AssOptions { pert: block.pert };
    let mut out = Output::default();
    for &n in &block.n {
        let t = Instant::now();
        let est = bounds::ass_increment_with(n, &spec, block.n_disorder, n_field, ctx.cfg.seed, &opts)?;
        let mut r = ctx.record();
        r.set("N", n).set("pert", block.pert).set("n_field_samples", n_field);
        r.set_estimate("increment", &est);
        out.records.push(finish(r, t));
    }
    Ok(out)
}

/// Overlap arrays labelled by system size (`None` for cascades and files).
fn overlap_sets(ctx: &Ctx, n_replicas: usize) -> Result<Vec<(Option<usize>, Vec<OverlapArray>)>, RunError> {
    let cfg = ctx.cfg;
    match cfg.overlap_source()? {
        OverlapSource::Rpc => {
            let params = cfg.params()?;
            let block = cfg.rpc()?;
            let arrays = rpc::sample_overlap_stream(&params, block.m_atoms, n_replicas, block.n_samples, cfg.seed)?;
            Ok(vec![(None, arrays)])
        }
        OverlapSource::Simulator => {
            let spec = cfg.mixture_spec()?;
            let block = cfg.simulate()?;
            let per = cfg.diagnostics()?.per_disorder;
            block
                .n
                .iter()
                .map(|&n| {
                    let arrays = simulator::gibbs_overlap_stream(n, &spec, block.pert, n_replicas, block.n_disorder, per, cfg.seed)?;
                    Ok((Some(n), arrays))
                })
                .collect()
        }
        OverlapSource::File(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            Ok(vec![(None, overlap::from_csv(&text)?)])
        }
    }
}

fn overlap_file_name(n: Option<usize>) -> String {
    match n {
        Some(n) => format!("overlaps_N{n}.csv"),
        None => "overlaps.csv".into(),
    }
}

fn gg(ctx: &Ctx) -> Result<Output, RunError> {
    let queries = ctx.cfg.queries()?;
    let needed = queries.iter().map(|q| q.n + 1).max().unwrap_or(3);
    let n_replicas = ctx.cfg.n_replicas(needed)?;
    let mut out = Output::default();
    for (n, arrays) in overlap_sets(ctx, n_replicas)? {
        for q in &queries {
            let t = Instant::now();
            let res = diagnostics::gg_statistic(&arrays, q)?;
            let mut r = ctx.record();
            if let Some(n) = n {
                r.set("N", n);
            }
            r.set("f", q.f).set("n", q.n).set("p", q.p);
            r.set("phi", res.phi).set("signed", res.signed).set("phi_stderr", res.stderr).set("phi_n", res.n_samples);
            r.set("zero_3sigma", res.consistent_with_zero(3.0));
            out.records.push(finish(r, t));
        }
        if !matches!(ctx.cfg.overlap_source()?, OverlapSource::File(_)) {
            out.files.push((overlap_file_name(n), overlap::to_csv(&arrays)));
        }
    }
    Ok(out)
}

fn ultra(ctx: &Ctx) -> Result<Output, RunError> {
    let n_replicas = ctx.cfg.n_replicas(3)?;
    let mut out = Output::default();
    for (n, arrays) in overlap_sets(ctx, n_replicas)? {
        let t = Instant::now();
        let res = diagnostics::ultrametricity_fraction(&arrays)?;
        let mut r = ctx.record();
        if let Some(n) = n {
            r.set("N", n);
        }
        r.set("fraction", res.fraction).set("fraction_stderr", res.stderr);
        r.set("n_triples", res.n_triples).set("n_arrays", res.n_arrays);
        out.records.push(finish(r, t));
        if !matches!(ctx.cfg.overlap_source()?, OverlapSource::File(_)) {
            out.files.push((overlap_file_name(n), overlap::to_csv(&arrays)));
        }
    }
    Ok(out)
}

fn positivity(ctx: &Ctx) -> Result<Output, RunError> {
    let spec = ctx.cfg.mixture_spec()?;
    let block = ctx.cfg.simulate()?;
    let eps = ctx.cfg.epsilon()?;
    let n_samples = ctx.cfg.diagnostic_samples()?;
    let mut out = Output::default();
    for &n in &block.n {
        let t = Instant::now();
        let est = diagnostics::positivity_probability(n, &spec, block.pert, eps, n_samples, ctx.cfg.seed)?;
        let mut r = ctx.record();
        r.set("N", n).set("pert", block.pert).set("epsilon", eps);
        r.set_estimate("p_negative", &est);
        out.records.push(finish(r, t));
    }
    Ok(out)
}

/// Verdict band of a free-energy estimate against a Parisi value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Consistent,
    BoundSatisfied,
    Violation,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::BoundSatisfied => "bound-satisfied",
            Self::Violation => "violation",
        }
    }
}

/// `gap = P - F_N` within 3 stderr is consistent, above is bound-satisfied, below a violation.
pub fn band(gap: f64, stderr: f64) -> Band {
    if gap.abs() <= 3.0 * stderr + 1e-12 {
        Band::Consistent
    } else if gap > 0.0 {
        Band::BoundSatisfied
    } else {
        Band::Violation
    }
}

fn is_parisi(r: &ResultRecord) -> bool {
    matches!(r.get("command"), Some("evaluate" | "optimize")) && r.get("value").is_some()
}

fn is_free_energy(r: &ResultRecord) -> bool {
    r.get("command") == Some("simulate") && r.get("mean").is_some()
}

/// Compares every free-energy record on one side with the Parisi record on the other.
pub fn compare(a: &[ResultRecord], b: &[ResultRecord]) -> Result<Vec<ResultRecord>, RunError> {
    let invalid = |msg: &str| RunError::Core(Error::InvalidArgument(msg.to_string()));
    let (fe_side, p_side) = if a.iter().any(is_free_energy) { (a, b) } else { (b, a) };
    let fes: Vec<&ResultRecord> = fe_side.iter().filter(|r| is_free_energy(r)).collect();
    let parisi = p_side.iter().find(|r| is_parisi(r)).ok_or_else(|| invalid("no evaluate/optimize record to compare against"))?;
    if fes.is_empty() {
        return Err(invalid("no simulate record to compare against"));
    }
    let value = parisi.get_f64("value").ok_or_else(|| invalid("Parisi record has a non-numeric value"))?;
    fes.iter()
        .map(|fe| {
            if fe.get("mixture") != parisi.get("mixture") {
                return Err(invalid(&format!(
                    "mixtures differ: {} vs {}",
                    fe.get("mixture").unwrap_or("?"),
                    parisi.get("mixture").unwrap_or("?")
                )));
            }
            let mean = fe.get_f64("mean").ok_or_else(|| invalid("free-energy record has a non-numeric mean"))?;
            let se = fe.get_f64("mean_stderr").unwrap_or(0.0);
            let gap = value - mean;
            let mut r = ResultRecord::new("compare", fe.get("digest").unwrap_or(""), fe.get_f64("seed").unwrap_or(0.0) as u64);
            r.set("mixture", fe.get("mixture").unwrap_or(""));
            if let Some(n) = fe.get("N") {
                r.set("N", n);
            }
            r.set("parisi_digest", parisi.get("digest").unwrap_or(""));
            r.set("parisi", value).set("free_energy", mean).set("gap", gap).set("gap_stderr", se);
            r.set("gap_n", fe.get("mean_n").unwrap_or("0"));
            r.set("verdict", band(gap, se).name());
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    #[test]
    fn evaluate_zero_mixture_is_ln2() {
        let c = cfg("seed = 1\nmixture = []\n[parisi]\nm = [0.5]\nq = [0.3]\n");
        let out = run(Command::Evaluate, &c, "d").unwrap();
        assert_eq!(out.records[0].get_f64("value"), Some(LN_2));
    }

    #[test]
    fn simulate_zero_mixture_has_zero_stderr() {
        let c = cfg("seed = 1\nmixture = []\n[simulate]\nN = [8]\nn_disorder = 5\npert = false\n");
        let r = &run(Command::Simulate, &c, "d").unwrap().records[0];
        assert_eq!(r.get_f64("mean"), Some(LN_2));
        assert_eq!(r.get_f64("mean_stderr"), Some(0.0));
        assert_eq!(r.get("mean_n"), Some("5"));
    }

    #[test]
    fn bands() {
        assert_eq!(band(0.0, 0.0), Band::Consistent);
        assert_eq!(band(0.1, 0.01), Band::BoundSatisfied);
        assert_eq!(band(-0.1, 0.01), Band::Violation);
        assert_eq!(band(-0.02, 0.01), Band::Consistent);
    }

    #[test]
    fn compare_rejects_mismatched_mixtures() {
        let zero = cfg("seed = 1\nmixture = []\n[parisi]\nm = [0.5]\nq = [0.3]\n[simulate]\nN = [4]\nn_disorder = 5\npert = false\n");
        let other = cfg("seed = 1\nmixture = [[2, 0.5]]\n[parisi]\nm = [0.5]\nq = [0.3]\n");
        let fe = run(Command::Simulate, &zero, "a").unwrap().records;
        let p0 = run(Command::Evaluate, &zero, "b").unwrap().records;
        let p1 = run(Command::Evaluate, &other, "c").unwrap().records;
        let cmp = compare(&fe, &p0).unwrap();
        assert_eq!(cmp[0].get_f64("gap"), Some(0.0));
        assert_eq!(cmp[0].get("verdict"), Some("consistent"));
        assert_eq!(compare(&p0, &fe).unwrap(), cmp);
        assert!(compare(&fe, &p1).is_err());
        assert!(compare(&p0, &p1).is_err());
    }

    #[test]
    fn numerical_failures_exit_with_3() {
        assert_eq!(RunError::Core(Error::QuadratureOverflow { level: 1 }).exit_code(), 3);
        assert_eq!(RunError::Core(Error::InvalidArgument("x".into())).exit_code(), 2);
        assert_eq!(RunError::Config(ConfigError::new("a", "b")).exit_code(), 2);
    }
}
