//! Run configuration: one TOML file with a global section and per-command blocks.

use std::path::PathBuf;

use parisi_core::diagnostics::{GgFunction, GgQuery};
use parisi_core::optimizer::OptimizerOptions;
use parisi_core::quadrature::{DEFAULT_NODES, MAX_NODES};
use parisi_core::simulator::ENUMERATION_CAP;
use parisi_core::{MixtureSpec, QuadratureGrid, RsbParams};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// A configuration problem, reported with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self { path: path.into(), message: message.to_string() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// `(p, β_p)` pairs; an empty list is the zero mixture.
    pub mixture: Vec<(usize, f64)>,
    pub output: Option<PathBuf>,
    pub enumeration_cap: Option<usize>,
    pub parisi: Option<ParisiBlock>,
    pub simulate: Option<SimulateBlock>,
    pub rpc: Option<RpcBlock>,
    pub bounds: Option<BoundsBlock>,
    pub diagnostics: Option<DiagnosticsBlock>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParisiBlock {
    pub m: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    /// Fixed number of levels for `optimize`; otherwise `k_max` is searched.
    pub k: Option<usize>,
    pub k_max: Option<usize>,
    pub restarts: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub n_disorder: usize,
    pub pert: bool,
    #[serde(default)]
    pub minus: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RpcBlock {
    #[serde(rename = "M")]
    pub m_atoms: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    pub t: Option<Vec<f64>>,
    /// Cascade and disorder samples per interpolation grid.
    pub n_samples: Option<usize>,
    pub n_field_samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QueryBlock {
    pub f: String,
    pub n: usize,
    pub p: u32,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBlock {
    /// `"rpc"`, `"simulator"`, or a path to an overlap CSV.
    pub source: Option<String>,
    pub n_replicas: Option<usize>,
    #[serde(default = "one")]
    pub per_disorder: usize,
    pub queries: Option<Vec<QueryBlock>>,
    pub epsilon: Option<f64>,
    pub n_samples: Option<usize>,
}

fn one() -> usize {
    1
}

/// Where overlap arrays for `gg` and `ultra` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlapSource {
    Rpc,
    Simulator,
    File(PathBuf),
}

fn missing(path: &str) -> ConfigError {
    ConfigError::new(path, "required for this command")
}

impl RunConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| locate(text, s.start)).unwrap_or_else(|| "config".into());
            ConfigError::new(path, e.message())
        })?;
        cfg.mixture_spec()?;
        if let Some(cap) = cfg.enumeration_cap {
            if cap == 0 || cap > ENUMERATION_CAP {
                return Err(ConfigError::new("enumeration_cap", format!("must be in 1..={ENUMERATION_CAP}")));
            }
        }
        Ok(cfg)
    }

    pub fn mixture_spec(&self) -> CResult<MixtureSpec> {
        if self.mixture.is_empty() {
            return Ok(MixtureSpec::zero(2));
        }
        MixtureSpec::from_pairs(&self.mixture).map_err(|e| ConfigError::new("mixture", e))
    }

    fn parisi(&self) -> CResult<&ParisiBlock> {
        self.parisi.as_ref().ok_or_else(|| missing("parisi"))
    }

    pub fn params(&self) -> CResult<RsbParams> {
        let block = self.parisi()?;
        let m = block.m.clone().ok_or_else(|| missing("parisi.m"))?;
        let q = block.q.clone().ok_or_else(|| missing("parisi.q"))?;
        RsbParams::new(m, q).map_err(|e| ConfigError::new("parisi.m/parisi.q", e))
    }

    pub fn grid(&self) -> CResult<QuadratureGrid> {
        let nodes = self.parisi.as_ref().and_then(|p| p.nodes).unwrap_or(DEFAULT_NODES);
        if !(2..=MAX_NODES).contains(&nodes) {
            return Err(ConfigError::new("parisi.nodes", format!("must be in 2..={MAX_NODES}")));
        }
        QuadratureGrid::gauss_hermite(nodes).map_err(|e| ConfigError::new("parisi.nodes", e))
    }

    /// Optimizer options and, when `parisi.k` is set, the fixed level count.
    pub fn optimizer(&self) -> CResult<(OptimizerOptions, Option<usize>)> {
        let block = self.parisi()?;
        let defaults = OptimizerOptions::default();
        let opts = OptimizerOptions {
            k_max: block.k_max.or(block.k).unwrap_or(defaults.k_max),
            restarts: block.restarts.unwrap_or(defaults.restarts),
            tolerance: block.tolerance.unwrap_or(defaults.tolerance),
            max_iterations: block.max_iterations.unwrap_or(defaults.max_iterations),
            seed: self.seed,
        };
        opts.validate().map_err(|e| ConfigError::new("parisi", e))?;
        if block.k == Some(0) {
            return Err(ConfigError::new("parisi.k", "must be at least 1"));
        }
        Ok((opts, block.k))
    }

    pub fn simulate(&self) -> CResult<&SimulateBlock> {
        let block = self.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
        if block.n.is_empty() {
            return Err(ConfigError::new("simulate.N", "must list at least one system size"));
        }
        let cap = self.enumeration_cap.unwrap_or(ENUMERATION_CAP);
        if let Some(&n) = block.n.iter().find(|&&n| n == 0 || n > cap) {
            return Err(ConfigError::new("simulate.N", format!("N = {n} outside 1..={cap}")));
        }
        if block.n_disorder < 2 {
            return Err(ConfigError::new("simulate.n_disorder", "must be at least 2"));
        }
        Ok(block)
    }

    pub fn rpc(&self) -> CResult<&RpcBlock> {
        let block = self.rpc.as_ref().ok_or_else(|| missing("rpc"))?;
        if block.m_atoms < 2 {
            return Err(ConfigError::new("rpc.M", "must be at least 2"));
        }
        if block.n_samples < 2 {
            return Err(ConfigError::new("rpc.n_samples", "must be at least 2"));
        }
        Ok(block)
    }

    fn bounds(&self) -> CResult<&BoundsBlock> {
        self.bounds.as_ref().ok_or_else(|| missing("bounds"))
    }

    pub fn t_grid(&self) -> CResult<Vec<f64>> {
        let t = self.bounds()?.t.clone().ok_or_else(|| missing("bounds.t"))?;
        if t.is_empty() || t.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(ConfigError::new("bounds.t", "must be a nonempty list of values in [0, 1]"));
        }
        Ok(t)
    }

    pub fn guerra_samples(&self) -> CResult<usize> {
        self.bounds()?.n_samples.ok_or_else(|| missing("bounds.n_samples"))
    }

    pub fn field_samples(&self) -> CResult<usize> {
        match self.bounds()?.n_field_samples {
            Some(0) => Err(ConfigError::new("bounds.n_field_samples", "must be at least 1")),
            Some(n) => Ok(n),
            None => Err(missing("bounds.n_field_samples")),
        }
    }

    pub fn diagnostics(&self) -> CResult<&DiagnosticsBlock> {
        self.diagnostics.as_ref().ok_or_else(|| missing("diagnostics"))
    }

    pub fn overlap_source(&self) -> CResult<OverlapSource> {
        let src = self.diagnostics()?.source.as_deref().ok_or_else(|| missing("diagnostics.source"))?;
        Ok(match src {
            "rpc" => OverlapSource::Rpc,
            "simulator" => OverlapSource::Simulator,
            path => OverlapSource::File(PathBuf::from(path)),
        })
    }

    pub fn n_replicas(&self, at_least: usize) -> CResult<usize> {
        let n = self.diagnostics()?.n_replicas.ok_or_else(|| missing("diagnostics.n_replicas"))?;
        if n < at_least {
            return Err(ConfigError::new("diagnostics.n_replicas", format!("must be at least {at_least}")));
        }
        Ok(n)
    }

    /// GG queries; the builtin set when none are listed.
    pub fn queries(&self) -> CResult<Vec<GgQuery>> {
        let Some(list) = self.diagnostics()?.queries.as_ref() else {
            return Ok(GgQuery::builtin_set());
        };
        list.iter()
            .enumerate()
            .map(|(i, q)| {
                let path = format!("diagnostics.queries[{i}]");
                let f = GgFunction::parse(&q.f).map_err(|e| ConfigError::new(format!("{path}.f"), e))?;
                GgQuery::new(f, q.n, q.p).map_err(|e| ConfigError::new(path, e))
            })
            .collect()
    }

    pub fn epsilon(&self) -> CResult<f64> {
        let eps = self.diagnostics()?.epsilon.ok_or_else(|| missing("diagnostics.epsilon"))?;
        if !(eps > 0.0) {
            return Err(ConfigError::new("diagnostics.epsilon", "must be positive"));
        }
        Ok(eps)
    }

    pub fn diagnostic_samples(&self) -> CResult<usize> {
        self.diagnostics()?.n_samples.ok_or_else(|| missing("diagnostics.n_samples"))
    }
}

/// Best-effort dotted path of the TOML key at byte offset `pos`.
fn locate(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    for line in text[..pos.min(text.len())].lines() {
        let line = line.trim();
        if line.starts_with('[') {
            table = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = line.split_once('=') {
            key = k.trim().to_string();
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "config".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

/// SHA-256 of the command name and the raw configuration text.
pub fn digest(command: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "seed = 7\nmixture = [[2, 0.5]]\n";

    #[test]
    fn parses_blocks() {
        let text = format!(
            "{BASE}[parisi]\nm = [0.5]\nq = [0.2]\n[simulate]\nN = [4, 6]\nn_disorder = 10\npert = true\n[rpc]\nM = 64\nn_samples = 100\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.params().unwrap(), RsbParams::single(0.5, 0.2).unwrap());
        assert_eq!(cfg.simulate().unwrap().n, vec![4, 6]);
        assert!(!cfg.simulate().unwrap().minus);
        assert_eq!(cfg.rpc().unwrap().m_atoms, 64);
        assert_eq!(cfg.grid().unwrap().nodes_per_level(), DEFAULT_NODES);
    }

    #[test]
    fn zero_mixture_is_empty_list() {
        let cfg = RunConfig::parse("seed = 1\nmixture = []\n").unwrap();
        assert!(cfg.mixture_spec().unwrap().is_zero());
    }

    #[test]
    fn errors_carry_field_paths() {
        assert!(RunConfig::parse("mixture = []\n").unwrap_err().message.contains("seed"));
        let e = RunConfig::parse("seed = 1\nmixture = [[0, 1.0]]\n").unwrap_err();
        assert_eq!(e.path, "mixture");
        let e = RunConfig::parse(&format!("{BASE}[simulate]\nN = [4]\nn_disorder = 10\npert = 1\n")).unwrap_err();
        assert_eq!(e.path, "simulate.pert");
        let e = RunConfig::parse(&format!("{BASE}[rpc]\nM = 64\n")).unwrap_err();
        assert!(e.message.contains("n_samples"), "{e}");
        let cfg = RunConfig::parse(&format!("{BASE}[simulate]\nN = [20]\nn_disorder = 10\npert = false\n")).unwrap();
        assert_eq!(cfg.simulate().unwrap_err().path, "simulate.N");
        let cfg = RunConfig::parse(&format!("{BASE}[parisi]\nm = [0.5, 0.4]\nq = [0.1, 0.2]\n")).unwrap();
        assert_eq!(cfg.params().unwrap_err().path, "parisi.m/parisi.q");
        assert_eq!(RunConfig::parse(BASE).unwrap().params().unwrap_err().path, "parisi");
        assert!(RunConfig::parse(&format!("{BASE}bogus = 1\n")).is_err());
    }

    #[test]
    fn queries_default_to_builtin() {
        let cfg = RunConfig::parse(&format!("{BASE}[diagnostics]\nsource = \"rpc\"\n")).unwrap();
        assert_eq!(cfg.queries().unwrap(), GgQuery::builtin_set());
        let cfg = RunConfig::parse(&format!("{BASE}[[diagnostics.queries]]\nf = \"R23\"\nn = 3\np = 2\n")).unwrap();
        assert_eq!(cfg.queries().unwrap().len(), 1);
        let cfg = RunConfig::parse(&format!("{BASE}[[diagnostics.queries]]\nf = \"R34\"\nn = 3\np = 2\n")).unwrap();
        assert_eq!(cfg.queries().unwrap_err().path, "diagnostics.queries[0]");
    }

    #[test]
    fn digest_depends_on_command_and_text() {
        assert_eq!(digest("evaluate", BASE), digest("evaluate", BASE));
        assert_ne!(digest("evaluate", BASE), digest("optimize", BASE));
        assert_ne!(digest("evaluate", BASE), digest("evaluate", "seed = 8\nmixture = []\n"));
        assert_eq!(digest("evaluate", BASE).len(), 64);
    }
}
