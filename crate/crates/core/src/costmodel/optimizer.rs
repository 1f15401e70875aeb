use serde::{Deserialize, Serialize};

use super::{growth, objective, stationarity_residual, CostParams, Variant};
use crate::error::{Error, Result};
use crate::stats::linear_fit;

const GRID_POINTS: usize = 1024;
const GOLDEN_RTOL: f64 = 1e-8;
const BOUNDARY_RTOL: f64 = 1e-6;

/// Where the minimizer of the objective sits on `[2, n/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Interior,
    LowerBoundary,
    UpperBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub b_star: f64,
    pub x_star: f64,
    pub boundary: Boundary,
    /// Base-variant stationarity residual at `b_star`, for diagnostics.
    pub stationarity_residual: f64,
}

/// Minimizes the exact objective over continuous `b` in `[2, n/2]`.
///
/// A log-spaced grid locates the best cell, then golden-section search
/// refines inside the neighbouring cells. The objective need not be unimodal
/// over the full range, which is why the grid comes first.
pub fn optimal_fanout(n: f64, p: &CostParams) -> Result<OptimumReport> {
    if !(n >= 16.0 && n.is_finite()) {
        return Err(Error::InvalidParam(format!("optimal_fanout needs n >= 16, got {n}")));
    }
    p.validate()?;
    let (lo, hi) = (2.0f64, n / 2.0);
    let x = |b: f64| objective(n, b, p).map(|c| c.objective);

    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            match i {
                0 => lo,
                i if i == GRID_POINTS - 1 => hi,
                i => (ln_lo + (ln_hi - ln_lo) * i as f64 / (GRID_POINTS - 1) as f64).exp(),
            }
        })
        .collect();
    let mut best = 0usize;
    let mut best_x = f64::INFINITY;
    for (i, &b) in grid.iter().enumerate() {
        let v = x(b)?;
        if v < best_x {
            best = i;
            best_x = v;
        }
    }

    let a = grid[best.saturating_sub(1)];
    let c = grid[(best + 1).min(GRID_POINTS - 1)];
    let refined = golden_section(|b| x(b).unwrap_or(f64::INFINITY), a, c, GOLDEN_RTOL);
    let refined_x = x(refined)?;
    let (b_star, x_star) = if refined_x <= best_x { (refined, refined_x) } else { (grid[best], best_x) };

    let boundary = if (b_star - lo).abs() <= BOUNDARY_RTOL * lo {
        Boundary::LowerBoundary
    } else if (b_star - hi).abs() <= BOUNDARY_RTOL * hi {
        Boundary::UpperBoundary
    } else {
        Boundary::Interior
    };
    Ok(OptimumReport {
        b_star,
        x_star,
        boundary,
        stationarity_residual: stationarity_residual(n, b_star, p, Variant::Base)?,
    })
}

/// Golden-section minimization of `f` on `[a, c]`, stopping once the bracket
/// is narrower than `rtol` relative to its midpoint.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut c: f64, rtol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = c - inv_phi * (c - a);
    let mut x2 = a + inv_phi * (c - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (c - a).abs() <= rtol * 0.5 * (a + c).abs() {
            break;
        }
        if f1 <= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - inv_phi * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (c - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Solves the limit form of the first-order condition,
/// `g(b) (ln b)^2 = k4 ln n`, by bisection on `(1, n/2]`.
///
/// The left side is zero at `b = 1` and strictly increasing for `b > 1`,
/// so a root exists iff the left side at `n/2` reaches the target.
pub fn solve_stationarity(n: f64, p: &CostParams, variant: Variant) -> Result<f64> {
    if !(n >= 16.0 && n.is_finite()) {
        return Err(Error::InvalidParam(format!("solve_stationarity needs n >= 16, got {n}")));
    }
    p.validate()?;
    let upper = n / 2.0;
    if variant == Variant::Omega && p.omega <= 0.0 {
        return Err(Error::NoRoot {
            upper,
            reason: "omega = 0 makes the left side identically zero; the optimum is on the boundary"
                .into(),
        });
    }
    let target = p.kappa4 * n.ln();
    let lhs = |b: f64| growth(b, p, variant) * b.ln().powi(2);
    if lhs(upper) < target {
        return Err(Error::NoRoot {
            upper,
            reason: format!("left side {} at n/2 stays below k4 ln n = {target}", lhs(upper)),
        });
    }
    let (mut lo, mut hi) = (1.0f64, upper);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever end of the final bracket lands closer to the target
    let b = if (lhs(lo) - target).abs() < (lhs(hi) - target).abs() { lo } else { hi };
    Ok(b)
}

/// `ln b = epsilon * ln ln n + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub epsilon: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares exponent of `b ~ (ln n)^epsilon`.
///
/// Needs at least 8 points with `n` spanning at least a factor of `2^30`.
pub fn fit_scaling_exponent(n_grid: &[f64], b_values: &[f64]) -> Result<ScalingFit> {
    if n_grid.len() != b_values.len() {
        return Err(Error::InvalidParam(format!(
            "{} n values but {} b values",
            n_grid.len(),
            b_values.len()
        )));
    }
    if n_grid.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "scaling fit needs >= 8 points, got {}",
            n_grid.len()
        )));
    }
    let (min, max) = n_grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return Err(Error::InvalidParam("degenerate grid: all n are equal".into()));
    }
    if !(min > std::f64::consts::E) || max / min < 2f64.powi(30) {
        return Err(Error::InvalidParam(format!(
            "n grid [{min}, {max}] must exceed e and span a factor of at least 2^30"
        )));
    }
    if b_values.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidParam("b values must be positive".into()));
    }
    let x: Vec<f64> = n_grid.iter().map(|n| n.ln().ln()).collect();
    let y: Vec<f64> = b_values.iter().map(|b| b.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(ScalingFit { epsilon: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared })
}
