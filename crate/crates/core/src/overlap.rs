//! Symmetric replica overlap arrays `R_{l,l'}` with unit diagonal.

use std::fmt::Write as _;

use crate::{Error, Result};

/// Overlap of two configurations encoded as bit masks (bit set = spin down).
pub fn overlap_of(a: u32, b: u32, n_spins: usize) -> f64 {
    1.0 - 2.0 * (a ^ b).count_ones() as f64 / n_spins as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapArray {
    n: usize,
    data: Vec<f64>,
}

impl OverlapArray {
    /// Validates symmetry, unit diagonal and entries in `[-1, 1]`.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidArgument(format!("overlap array of size {n} needs {} entries", n * n)));
        }
        for a in 0..n {
            if data[a * n + a] != 1.0 {
                return Err(Error::InvalidArgument(format!("diagonal entry {a} is not 1")));
            }
            for b in 0..n {
                let r = data[a * n + b];
                if !(-1.0..=1.0).contains(&r) || r != data[b * n + a] {
                    return Err(Error::InvalidArgument(format!("entry ({a}, {b}) = {r} is not a valid overlap")));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Builds the array from the strict upper triangle, row by row.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "size {n} needs {} upper-triangle entries, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        let mut data = vec![1.0; n * n];
        let mut it = upper.iter();
        for a in 0..n {
            for b in a + 1..n {
                let r = *it.next().unwrap();
                data[a * n + b] = r;
                data[b * n + a] = r;
            }
        }
        Self::new(n, data)
    }

    /// Overlaps of spin configurations given as bit masks over `n_spins` sites.
    pub fn from_configurations(configs: &[u32], n_spins: usize) -> Self {
        let n = configs.len();
        let mut data = vec![1.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let r = overlap_of(configs[a], configs[b], n_spins);
                data[a * n + b] = r;
                data[b * n + a] = r;
            }
        }
        Self { n, data }
    }

    pub(crate) fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![1.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let r = f(a, b);
                data[a * n + b] = r;
                data[b * n + a] = r;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `R_{a,b}` with 0-based replica indices.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every off-diagonal entry, keeping the unit diagonal.
    pub fn map_off_diagonal(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(self.n, |a, b| f(self.get(a, b)))
    }

    /// Restriction to the first `n` replicas.
    pub fn leading(&self, n: usize) -> Self {
        Self::from_fn(n.min(self.n), |a, b| self.get(a, b))
    }

    /// Array with replica indices relabelled: entry `(a, b)` becomes `R_{π(a), π(b)}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, |a, b| self.get(perm[a], perm[b]))
    }

    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for a in 0..self.n {
            for b in a + 1..self.n {
                out.push(self.get(a, b));
            }
        }
        out
    }
}

pub const CSV_HEADER: &str = "sample,n,upper";

/// One array per line: sample index, size, then the strict upper triangle
/// separated by `;` (row-major).
pub fn to_csv(arrays: &[OverlapArray]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (i, a) in arrays.iter().enumerate() {
        let upper: Vec<String> = a.upper().iter().map(|r| format!("{r:.17}")).collect();
        writeln!(out, "{i},{},{}", a.n(), upper.join(";")).unwrap();
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<OverlapArray>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidArgument(format!("expected header {CSV_HEADER:?}, found {other:?}")));
        }
    }
    lines
        .enumerate()
        .map(|(row, line)| {
            let bad = |what: &str| Error::InvalidArgument(format!("overlap csv row {}: {what}", row + 1));
            let mut fields = line.split(',');
            let _sample = fields.next().ok_or_else(|| bad("missing sample"))?;
            let n: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| bad("bad size"))?;
            let upper: Vec<f64> = match fields.next() {
                Some(f) if !f.trim().is_empty() => f
                    .split(';')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| bad("bad overlap value")))
                    .collect::<Result<_>>()?,
                _ => Vec::new(),
            };
            OverlapArray::from_upper(n, &upper)
        })
        .collect()
}
