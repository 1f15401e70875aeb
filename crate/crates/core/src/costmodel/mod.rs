//! Participation costs, communication times and the objective that trades
//! them off against community size `b`.
//!
//! For a population `n` split into `n/b` communities of size `b`:
//!
//! ```text
//! c_local  = k1 * n * (b - 1)
//! c_global = k2 * (n/b) * ln(n/b)^2
//! t_local  = k3 * b^omega
//! t_global = k4 * log_b(n/b)
//! X        = ln c_local + ln c_global + t_local + t_global
//! ```
//!
//! `b` is continuous here and restricted to `[2, n/2]`, where both log terms
//! are finite. All logarithms are natural except the explicit `log_b`.

mod optimizer;

pub use optimizer::{
    fit_scaling_exponent, optimal_fanout, solve_stationarity, Boundary, OptimumReport, ScalingFit,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Proportionality constants and the technology exponent `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    /// 0 = constant local overhead, 1 = serial relay through the community.
    pub omega: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { kappa1: 1.0, kappa2: 1.0, kappa3: 1.0, kappa4: 1.0, omega: 0.0 }
    }
}

impl CostParams {
    pub fn new(kappa1: f64, kappa2: f64, kappa3: f64, kappa4: f64, omega: f64) -> Result<Self> {
        let p = Self { kappa1, kappa2, kappa3, kappa4, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        Self { omega, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
            ("kappa4", self.kappa4),
        ] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParam(format!("{name} must be > 0, got {k}")));
            }
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::InvalidParam(format!("omega must lie in [0, 1], got {}", self.omega)));
        }
        Ok(())
    }

    /// Local communication time `k3 * b^omega`.
    pub fn local_time(&self, b: f64) -> f64 {
        self.kappa3 * b.powf(self.omega)
    }
}

/// The four evaluated terms plus the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub c_local: f64,
    pub c_global: f64,
    pub t_local: f64,
    pub t_global: f64,
    pub objective: f64,
}

/// Which form of the first-order condition to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `g(b) = b`.
    Base,
    /// `g(b) = omega * b^omega`.
    Omega,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "omega" => Ok(Variant::Omega),
            other => Err(Error::InvalidParam(format!(
                "unknown variant `{other}` (expected base or omega)"
            ))),
        }
    }
}

pub(crate) fn check_domain(n: f64, b: f64) -> Result<()> {
    if !(n >= 4.0 && n.is_finite() && b >= 2.0 && b <= n / 2.0) {
        return Err(Error::Domain { n, b });
    }
    Ok(())
}

/// `(c_local, c_global)`.
pub fn participation_costs(n: f64, b: f64, p: &CostParams) -> Result<(f64, f64)> {
    check_domain(n, b)?;
    let m = n / b;
    Ok((p.kappa1 * n * (b - 1.0), p.kappa2 * m * m.ln().powi(2)))
}

/// `(t_local, t_global)`.
pub fn comm_times(n: f64, b: f64, p: &CostParams) -> Result<(f64, f64)> {
    check_domain(n, b)?;
    Ok((p.local_time(b), p.kappa4 * (n.ln() / b.ln() - 1.0)))
}

pub fn objective(n: f64, b: f64, p: &CostParams) -> Result<CostBreakdown> {
    let (c_local, c_global) = participation_costs(n, b, p)?;
    let (t_local, t_global) = comm_times(n, b, p)?;
    Ok(CostBreakdown {
        c_local,
        c_global,
        t_local,
        t_global,
        objective: c_local.ln() + c_global.ln() + t_local + t_global,
    })
}

/// Closed-form `dX/db` of the exact objective, keeping the `ln(b - 1)` term:
///
/// `1/(b-1) - 1/b - 2/(b ln(n/b)) + k3 omega b^(omega-1) - k4 ln n / (b (ln b)^2)`
pub fn objective_gradient(n: f64, b: f64, p: &CostParams) -> Result<f64> {
    check_domain(n, b)?;
    let ln_b = b.ln();
    let local = if p.omega == 0.0 { 0.0 } else { p.kappa3 * p.omega * b.powf(p.omega - 1.0) };
    Ok(1.0 / (b - 1.0) - 1.0 / b - 2.0 / (b * (n / b).ln()) + local
        - p.kappa4 * n.ln() / (b * ln_b * ln_b))
}

/// `(ln b)^2 (g(b) - 2/ln(n/b)) - k4 ln n`, zero at the first-order optimum
/// of the simplified objective.
pub fn stationarity_residual(n: f64, b: f64, p: &CostParams, variant: Variant) -> Result<f64> {
    check_domain(n, b)?;
    let ln_b = b.ln();
    Ok(ln_b * ln_b * (growth(b, p, variant) - 2.0 / (n / b).ln()) - p.kappa4 * n.ln())
}

pub(crate) fn growth(b: f64, p: &CostParams, variant: Variant) -> f64 {
    match variant {
        Variant::Base => b,
        Variant::Omega => p.omega * b.powf(p.omega),
    }
}

/// `t_local + t_global` at fanout `b`.
pub fn predicted_total_time(n: f64, p: &CostParams, b: f64) -> Result<f64> {
    let (t_local, t_global) = comm_times(n, b, p)?;
    Ok(t_local + t_global)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> CostParams {
        CostParams::default()
    }

    #[test]
    fn param_validation() {
        assert!(CostParams::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(CostParams::new(1.0, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(CostParams::new(1.0, 1.0, 1.0, 1.0, 1.5).is_err());
        assert!(unit().with_omega(-0.1).is_err());
        assert!(unit().with_omega(1.0).is_ok());
    }

    #[test]
    fn domain_errors() {
        let p = unit();
        assert!(matches!(participation_costs(16.0, 1.5, &p), Err(Error::Domain { .. })));
        assert!(matches!(participation_costs(16.0, 9.0, &p), Err(Error::Domain { .. })));
        assert!(comm_times(16.0, 16.0, &p).is_err());
        assert!(objective(2.0, 2.0, &p).is_err());
        assert!(objective_gradient(16.0, f64::NAN, &p).is_err());
        assert!(participation_costs(16.0, 8.0, &p).is_ok());
    }

    #[test]
    fn participation_cost_examples() {
        let (c_local, c_global) = participation_costs(16.0, 4.0, &unit()).unwrap();
        assert_eq!(c_local, 48.0);
        assert_relative_eq!(c_global, 7.687248222691222, max_relative = 1e-14);
        assert_eq!(participation_costs(16.0, 2.0, &unit()).unwrap().0, 16.0);
    }

    #[test]
    fn comm_time_examples() {
        let (t_local, t_global) = comm_times(16.0, 4.0, &unit()).unwrap();
        assert_relative_eq!(t_global, 1.0, epsilon = 1e-15);
        assert_eq!(t_local, 1.0);
        let p = unit().with_omega(1.0).unwrap();
        assert_eq!(comm_times(16.0, 4.0, &p).unwrap().0, 4.0);
    }

    #[test]
    fn objective_example() {
        let x = objective(16.0, 4.0, &unit()).unwrap();
        assert_relative_eq!(x.objective, 7.9107638919843435, max_relative = 1e-12);
        let scaled = CostParams { kappa1: std::f64::consts::E, ..unit() };
        let y = objective(16.0, 4.0, &scaled).unwrap();
        assert_relative_eq!(y.objective - x.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_ignores_local_term_at_omega_zero() {
        let p = unit();
        let q = CostParams { kappa3: 50.0, ..p };
        assert_eq!(objective_gradient(1e6, 30.0, &p).unwrap(), objective_gradient(1e6, 30.0, &q).unwrap());
    }

    #[test]
    fn gradient_negative_when_global_time_dominates() {
        let p = CostParams { kappa4: 10.0, ..unit() };
        let n = 2f64.powi(40);
        let b = 8.0f64;
        let dominant = p.kappa4 * n.ln() / (b * b.ln().powi(2));
        let rest = 1.0 / (b - 1.0) - 1.0 / b;
        assert!(dominant > rest);
        assert!(objective_gradient(n, b, &p).unwrap() < 0.0);
    }

    #[test]
    fn residual_examples() {
        let e = std::f64::consts::E;
        let n = 1e6;
        let r = stationarity_residual(n, e, &unit(), Variant::Base).unwrap();
        assert_relative_eq!(r, (e - 2.0 / (n / e).ln()) - n.ln(), max_relative = 1e-12);

        // b chosen so that (ln b)^2 * b = k4 ln n holds exactly
        let b: f64 = 5.0;
        let k4 = b.ln().powi(2) * b / n.ln();
        let p = CostParams { kappa4: k4, ..unit() };
        let r = stationarity_residual(n, b, &p, Variant::Base).unwrap();
        assert_relative_eq!(r, -2.0 * b.ln().powi(2) / (n / b).ln(), max_relative = 1e-10);

        // omega = 0: g vanishes, residual negative everywhere
        let p0 = unit();
        for b in [2.0, 10.0, 1000.0, n / 2.0] {
            assert!(stationarity_residual(n, b, &p0, Variant::Omega).unwrap() < 0.0);
        }
    }

    #[test]
    fn total_time_examples() {
        assert_relative_eq!(predicted_total_time(16.0, &unit(), 4.0).unwrap(), 2.0, epsilon = 1e-15);
        // fixed b = 2 grows as log2 n - 1 plus the constant local time
        for k in [10, 20, 30] {
            let n = 2f64.powi(k);
            let t = predicted_total_time(n, &unit(), 2.0).unwrap();
            assert_relative_eq!(t, 1.0 + k as f64 - 1.0, max_relative = 1e-12);
        }
        // b = n/2 drives the global term to ln n / ln(n/2) - 1
        let p = unit().with_omega(0.5).unwrap();
        let n = 2f64.powi(30);
        let (t_local, t_global) = comm_times(n, n / 2.0, &p).unwrap();
        assert_relative_eq!(t_global, n.ln() / (n / 2.0).ln() - 1.0, max_relative = 1e-12);
        assert!(t_local > 1000.0 * t_global);
    }

    /// Term-by-term expansion of X, written independently of `objective`.
    fn expanded(n: f64, b: f64, p: &CostParams) -> f64 {
        p.kappa1.ln() + p.kappa2.ln() + n.ln() + (b - 1.0).ln() + (n / b).ln()
            + 2.0 * (n / b).ln().ln()
            + p.kappa3 * b.powf(p.omega)
            + p.kappa4 * (n.ln() / b.ln() - 1.0)
    }

    fn central_difference(n: f64, b: f64, p: &CostParams) -> f64 {
        let h = 1e-5 * b;
        let f = |x| objective(n, x, p).unwrap().objective;
        (f(b + h) - f(b - h)) / (2.0 * h)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn expanded_identity(
            log2_n in 3.0f64..60.0,
            frac in 0.0f64..1.0,
            k in (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0),
            omega in 0.0f64..=1.0,
        ) {
            let n = 2f64.powf(log2_n);
            let b = 2.0 * (n / 4.0).powf(frac);
            let p = CostParams::new(k.0, k.1, k.2, k.3, omega).unwrap();
            let x = objective(n, b, &p).unwrap().objective;
            let e = expanded(n, b, &p);
            prop_assert!((x - e).abs() <= 1e-12 * e.abs().max(1.0));
        }

        #[test]
        fn gradient_matches_finite_differences(
            log2_n in 8.0f64..40.0,
            frac in 0.0f64..1.0,
            omega in 0.0f64..=1.0,
        ) {
            let n = 2f64.powf(log2_n);
            let b = 2.5 * (n / 10.0).powf(frac);
            let p = unit().with_omega(omega).unwrap();
            let exact = objective_gradient(n, b, &p).unwrap();
            let fd = central_difference(n, b, &p);
            prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs(), "exact {} fd {}", exact, fd);
        }

        #[test]
        fn kappa_scaling_shifts_by_log(lambda in 0.01f64..100.0, log2_n in 5.0f64..40.0, frac in 0.0f64..1.0) {
            let n = 2f64.powf(log2_n);
            let b = 2.0 * (n / 4.0).powf(frac);
            let p = unit();
            let base = objective(n, b, &p).unwrap().objective;
            let q1 = CostParams { kappa1: lambda, ..p };
            let q2 = CostParams { kappa2: lambda, ..p };
            prop_assert!((objective(n, b, &q1).unwrap().objective - base - lambda.ln()).abs() < 1e-10);
            prop_assert!((objective(n, b, &q2).unwrap().objective - base - lambda.ln()).abs() < 1e-10);
        }

        #[test]
        fn costs_positive_on_domain(log2_n in 2.0f64..60.0, frac in 0.0f64..=1.0) {
            let n = 2f64.powf(log2_n);
            let b = 2.0 * (n / 4.0).powf(frac);
            let (cl, cg) = participation_costs(n, b.min(n / 2.0), &unit()).unwrap();
            prop_assert!(cl > 0.0 && cg > 0.0);
        }
    }
}
