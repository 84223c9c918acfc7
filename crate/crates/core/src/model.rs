//! Mixed p-spin mixtures and the covariance function `ξ`.
//!
//! A mixture is stored as the coefficients `β_p` of the Hamiltonian
//! `H_N = Σ_p β_p H_{N,p}`; the covariance `E H_N(σ¹) H_N(σ²) = N ξ(R₁,₂)` uses
//! their squares, `ξ(x) = Σ_p β_p² x^p`.

use crate::{Error, Result};

/// Configurations declaring `Σ_p 2^p β_p²` above this are rejected.
pub const MAX_SUMMABILITY: f64 = 1e8;

/// Slack allowed on domain checks so that overlaps computed in floating point
/// (e.g. `1 - 2k/N`) are never rejected for rounding.
const DOMAIN_SLACK: f64 = 1e-12;

/// Coefficients `β_1, …, β_{p_max}` of a mixed p-spin Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    betas: Vec<f64>,
}

impl MixtureSpec {
    /// `betas[p - 1]` is `β_p`.
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidMixture("p_max must be at least 1".into()));
        }
        for (i, &b) in betas.iter().enumerate() {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidMixture(format!("beta_{} = {b} must be finite and nonnegative", i + 1)));
            }
        }
        let summability: f64 = betas
            .iter()
            .enumerate()
            .map(|(i, b)| 2f64.powi(i as i32 + 1) * b * b)
            .sum();
        if !(summability <= MAX_SUMMABILITY) {
            return Err(Error::InvalidMixture(format!(
                "sum_p 2^p beta_p^2 = {summability:e} exceeds {MAX_SUMMABILITY:e}"
            )));
        }
        Ok(Self { betas })
    }

    /// Builds a mixture from `(p, β_p)` pairs; unlisted orders get `β_p = 0`.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let p_max = pairs.iter().map(|&(p, _)| p).max().unwrap_or(0);
        if p_max == 0 {
            return Err(Error::InvalidMixture("at least one order p >= 1 is required".into()));
        }
        let mut betas = vec![0.0; p_max];
        for &(p, b) in pairs {
            if p == 0 {
                return Err(Error::InvalidMixture("order p = 0 is not allowed".into()));
            }
            if betas[p - 1] != 0.0 {
                return Err(Error::InvalidMixture(format!("order p = {p} listed twice")));
            }
            betas[p - 1] = b;
        }
        Self::new(betas)
    }

    /// Builds a mixture from squared coefficients `(p, β_p²)`.
    pub fn from_squared(pairs: &[(usize, f64)]) -> Result<Self> {
        let mut roots = Vec::with_capacity(pairs.len());
        for &(p, b2) in pairs {
            if !(b2 >= 0.0) {
                return Err(Error::InvalidMixture(format!("beta_{p}^2 = {b2} must be nonnegative")));
            }
            roots.push((p, b2.sqrt()));
        }
        Self::from_pairs(&roots)
    }

    /// The mixture with all couplings zero (`ξ ≡ 0`).
    pub fn zero(p_max: usize) -> Self {
        Self { betas: vec![0.0; p_max.max(1)] }
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn p_max(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, p: usize) -> f64 {
        if p == 0 {
            0.0
        } else {
            self.betas.get(p - 1).copied().unwrap_or(0.0)
        }
    }

    /// Orders with a nonzero coefficient, with their `β_p`.
    pub fn active(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.betas
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(i, &b)| (i + 1, b))
    }

    pub fn is_zero(&self) -> bool {
        self.betas.iter().all(|&b| b == 0.0)
    }

    /// True when some odd `p >= 3` carries weight, i.e. `ξ` may fail to be
    /// convex on `[-1, 0]`.
    pub fn has_odd_interactions(&self) -> bool {
        self.active().any(|(p, _)| p >= 3 && p % 2 == 1)
    }

    /// Canonical text form, `p:beta` pairs separated by commas.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.active().map(|(p, b)| format!("{p}:{b}")).collect();
        if parts.is_empty() {
            "zero".to_string()
        } else {
            parts.join(",")
        }
    }

    /// `ξ(x) = Σ β_p² x^p`.
    pub fn xi(&self, x: f64) -> Result<f64> {
        check_overlap(x)?;
        Ok(self.xi_unchecked(x))
    }

    /// `ξ'(x) = Σ p β_p² x^{p-1}`.
    pub fn xi_prime(&self, x: f64) -> Result<f64> {
        check_overlap(x)?;
        Ok(self.xi_prime_unchecked(x))
    }

    /// `ξ''(x) = Σ p (p-1) β_p² x^{p-2}`.
    pub fn xi_second(&self, x: f64) -> Result<f64> {
        check_overlap(x)?;
        Ok(self.xi_second_unchecked(x))
    }

    /// `θ(q) = q ξ'(q) - ξ(q) = Σ (p-1) β_p² q^p`, defined on `[0, 1]`.
    pub fn theta(&self, q: f64) -> Result<f64> {
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&q) {
            return Err(Error::Domain { value: q, domain: "[0, 1]" });
        }
        Ok(self.theta_unchecked(q))
    }

    // Horner evaluations. The coefficient of x^p is written as a function of p.
    fn horner(&self, x: f64, coeff: impl Fn(usize, f64) -> f64, shift: usize) -> f64 {
        let mut acc = 0.0;
        for p in (1..=self.betas.len()).rev() {
            acc = acc * x + coeff(p, self.betas[p - 1]);
        }
        // acc = Σ c_p x^{p-1}; undo the shift so the result is Σ c_p x^{p-shift}.
        match shift {
            0 => acc * x,
            1 => acc,
            _ => unreachable!(),
        }
    }

    pub(crate) fn xi_unchecked(&self, x: f64) -> f64 {
        self.horner(x, |_, b| b * b, 0)
    }

    pub(crate) fn xi_prime_unchecked(&self, x: f64) -> f64 {
        self.horner(x, |p, b| p as f64 * b * b, 1)
    }

    pub(crate) fn xi_second_unchecked(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in (2..=self.betas.len()).rev() {
            let b = self.betas[p - 1];
            acc = acc * x + (p * (p - 1)) as f64 * b * b;
        }
        acc
    }

    pub(crate) fn theta_unchecked(&self, q: f64) -> f64 {
        self.horner(q, |p, b| (p - 1) as f64 * b * b, 0)
    }
}

fn check_overlap(x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= 1.0 + DOMAIN_SLACK {
        Ok(())
    } else {
        Err(Error::Domain { value: x, domain: "[-1, 1]" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sk(beta2: f64) -> MixtureSpec {
        MixtureSpec::from_pairs(&[(2, beta2)]).unwrap()
    }

    #[test]
    fn xi_examples() {
        assert_eq!(sk(1.0).xi(0.5).unwrap(), 0.25);
        let mixed = MixtureSpec::from_squared(&[(2, 0.3), (3, 0.1)]).unwrap();
        assert!((mixed.xi(1.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(mixed.xi(0.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(sk(1.0).xi_prime(0.5).unwrap(), 1.0);
        let linear = MixtureSpec::from_pairs(&[(1, 1.0)]).unwrap();
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(linear.xi_prime(x).unwrap(), 1.0);
        }
        assert_eq!(sk(1.0).xi_second(1.0).unwrap(), 2.0);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(sk(1.0).theta(0.0).unwrap(), 0.0);
        assert_eq!(sk(1.0).theta(0.5).unwrap(), 0.25);
        assert_eq!(sk(1.0).theta(1.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        let m = sk(1.0);
        assert!(matches!(m.xi(1.5), Err(Error::Domain { .. })));
        assert!(matches!(m.xi_prime(-1.01), Err(Error::Domain { .. })));
        assert!(matches!(m.xi_second(f64::NAN), Err(Error::Domain { .. })));
        assert!(matches!(m.theta(-0.1), Err(Error::Domain { .. })));
        assert!(m.xi(1.0 + 1e-14).is_ok());
    }

    #[test]
    fn invalid_mixtures_are_rejected() {
        assert!(MixtureSpec::new(vec![]).is_err());
        assert!(MixtureSpec::new(vec![0.5, -0.1]).is_err());
        assert!(MixtureSpec::new(vec![f64::INFINITY]).is_err());
        assert!(MixtureSpec::from_pairs(&[(0, 1.0)]).is_err());
        assert!(MixtureSpec::from_pairs(&[(2, 1.0), (2, 0.5)]).is_err());
        // 2^40 * 100 is far beyond the summability cap.
        let mut huge = vec![0.0; 40];
        huge[39] = 10.0;
        assert!(matches!(MixtureSpec::new(huge), Err(Error::InvalidMixture(_))));
        assert!(MixtureSpec::new(vec![0.0; 3]).unwrap().is_zero());
    }

    #[test]
    fn odd_interaction_detection() {
        assert!(!MixtureSpec::from_pairs(&[(1, 1.0), (2, 1.0), (4, 0.3)]).unwrap().has_odd_interactions());
        assert!(MixtureSpec::from_pairs(&[(2, 1.0), (3, 0.3)]).unwrap().has_odd_interactions());
    }

    fn mixture_strategy() -> impl Strategy<Value = MixtureSpec> {
        prop::collection::vec(0.0..1.5f64, 1..6).prop_map(|b| MixtureSpec::new(b).unwrap())
    }

    fn even_mixture_strategy() -> impl Strategy<Value = MixtureSpec> {
        (prop::collection::vec(0.0..1.5f64, 1..4), 0.0..1.0f64).prop_map(|(evens, b1)| {
            let mut betas = vec![b1];
            for b in evens {
                betas.push(b);
                betas.push(0.0);
            }
            betas.pop();
            MixtureSpec::new(betas).unwrap()
        })
    }

    proptest! {
        #[test]
        fn monotone_and_nonnegative_on_unit_interval(m in mixture_strategy()) {
            let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
            for w in grid.windows(2) {
                let (a, b) = (w[0], w[1]);
                prop_assert!(m.xi(a).unwrap() >= 0.0);
                prop_assert!(m.xi(b).unwrap() >= m.xi(a).unwrap());
                prop_assert!(m.xi_prime(b).unwrap() >= m.xi_prime(a).unwrap());
                prop_assert!(m.theta(b).unwrap() >= m.theta(a).unwrap());
                prop_assert!(m.theta(a).unwrap() >= 0.0);
            }
        }

        #[test]
        fn theta_derivative_is_q_xi_second(m in mixture_strategy()) {
            // Central differences: truncation error h²/6·θ''' is ~1e-11 at h = 1e-5.
            let h = 1e-5;
            for i in 1..20 {
                let q = i as f64 / 20.0;
                let fd = (m.theta(q + h).unwrap() - m.theta(q - h).unwrap()) / (2.0 * h);
                let exact = q * m.xi_second(q).unwrap();
                prop_assert!((fd - exact).abs() < 1e-8, "q={q} fd={fd} exact={exact}");
            }
        }

        #[test]
        fn xi_prime_matches_finite_differences(m in mixture_strategy(), x in -0.99..0.99f64) {
            let h = 1e-5;
            let fd = (m.xi(x + h).unwrap() - m.xi(x - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - m.xi_prime(x).unwrap()).abs() < 1e-7);
            let fd2 = (m.xi_prime(x + h).unwrap() - m.xi_prime(x - h).unwrap()) / (2.0 * h);
            prop_assert!((fd2 - m.xi_second(x).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn even_mixtures_are_convex_on_the_whole_interval(m in even_mixture_strategy()) {
            let h = 1e-3;
            for i in 0..=200 {
                let x = -1.0 + h + i as f64 * (2.0 - 2.0 * h) / 200.0;
                let second = m.xi(x + h).unwrap() - 2.0 * m.xi(x).unwrap() + m.xi(x - h).unwrap();
                prop_assert!(second >= -1e-12, "x={x} second={second}");
            }
        }
    }
}
