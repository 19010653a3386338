//! Hypothesis flags and runtime monitors for the a priori estimates.
//!
//! The estimate constants are non-constructive, so the monitors report
//! observed bounds (max |phi|^2_h, psi extremes, degree error, minimum of
//! the family denominator) and check the conclusions that do have sharp
//! finite-dimensional content: |phi|^2_h <= d and Chern-Weil degree
//! conservation. A violation is a recorded verdict, not control flow; the
//! only hard stop in the solver is the eliminated-denominator gate.

use serde::Serialize;

use crate::bundle::LineBundleData;
use crate::equation::VortexParams;
use crate::error::Result;
use crate::geometry::{ScalarField, SurfaceGrid};
use crate::solver::SolverState;

pub const PHI_BOUND_SLACK: f64 = 1e-8;
pub const DEGREE_TOL: f64 = 1e-8;

/// Exact evaluations of the theorem's coefficient inequalities at (alpha, t).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HypothesisFlags {
    /// b - c d >= 0
    pub b_cd: bool,
    /// b - (k + c t) d >= 0
    pub b_kctd: bool,
    /// d e > a
    pub de_a: bool,
    pub b_cd_value: f64,
    pub b_kctd_value: f64,
    pub de_minus_a: f64,
}

pub fn check_hypotheses(p: &VortexParams) -> HypothesisFlags {
    let c = p.coeffs;
    let b_cd_value = c.b - c.c * c.d;
    let b_kctd_value = c.b - (c.k + c.c * p.t) * c.d;
    let de_minus_a = c.d * c.e - c.a;
    HypothesisFlags {
        b_cd: b_cd_value >= 0.0,
        b_kctd: b_kctd_value >= 0.0,
        de_a: de_minus_a > 0.0,
        b_cd_value,
        b_kctd_value,
        de_minus_a,
    }
}

/// Observed per-state quantities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Observed {
    pub max_s: f64,
    pub min_psi: f64,
    pub max_psi: f64,
    pub degree_error: f64,
    /// min over the grid of a + b t s - c t^2 s^2
    pub denom_min: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdicts {
    /// max |phi|^2_h <= d (+ slack)
    pub phi_bound: bool,
    /// |int i Theta_h / 2 pi - degree| <= tolerance
    pub degree: bool,
}

/// Monitor record attached to every accepted state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateReport {
    pub flags: HypothesisFlags,
    pub theta0_is_omega: bool,
    pub observed: Observed,
    pub verdicts: Verdicts,
}

impl EstimateReport {
    pub fn all_pass(&self) -> bool {
        self.flags.b_cd
            && self.flags.b_kctd
            && self.flags.de_a
            && self.theta0_is_omega
            && self.verdicts.phi_bound
            && self.verdicts.degree
    }
}

/// Lemma bound |phi|^2_h <= d on an accepted state.
pub fn monitor_phi_bound(
    bundle: &LineBundleData,
    psi: &ScalarField,
    p: &VortexParams,
) -> Result<(f64, bool)> {
    let max_s = bundle.s_of_psi(psi)?.max();
    Ok((max_s, max_s <= p.coeffs.d + PHI_BOUND_SLACK))
}

/// psi extremes (the empirical C0 data).
pub fn monitor_c0(psi: &ScalarField) -> (f64, f64) {
    (psi.min(), psi.max())
}

/// Chern-Weil consistency: int iTheta_h / 2 pi against the bundle degree.
pub fn monitor_degree(
    grid: &SurfaceGrid,
    bundle: &LineBundleData,
    psi: &ScalarField,
) -> Result<(f64, bool)> {
    let theta = bundle.curvature_density(grid, psi)?;
    let deg = grid.integrate(&theta)? / (2.0 * std::f64::consts::PI);
    let err = (deg - bundle.degree as f64).abs();
    Ok((err, err <= DEGREE_TOL))
}

pub fn assemble_report(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
) -> Result<EstimateReport> {
    let flags = check_hypotheses(p);
    let (max_s, phi_ok) = monitor_phi_bound(bundle, psi, p)?;
    let (min_psi, max_psi) = monitor_c0(psi);
    let (degree_error, degree_ok) = monitor_degree(grid, bundle, psi)?;
    let s = bundle.s_of_psi(psi)?;
    let c = p.coeffs;
    let t = p.t;
    let denom_min = s
        .values()
        .iter()
        .map(|&sv| c.a + c.b * t * sv - c.c * t * t * sv * sv)
        .fold(f64::INFINITY, f64::min);
    let theta0_is_omega = bundle
        .theta0
        .values()
        .iter()
        .all(|&v| (v - 1.0).abs() <= 1e-14);
    Ok(EstimateReport {
        flags,
        theta0_is_omega,
        observed: Observed {
            max_s,
            min_psi,
            max_psi,
            degree_error,
            denom_min,
        },
        verdicts: Verdicts {
            phi_bound: phi_ok,
            degree: degree_ok,
        },
    })
}

/// Empirical C0 constants over a path: the observed `-min psi` and
/// `max psi` across all accepted states.
pub fn empirical_c0(states: &[SolverState]) -> (f64, f64) {
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for st in states {
        lower = lower.max(-st.report.observed.min_psi);
        upper = upper.max(st.report.observed.max_psi);
    }
    (lower, upper)
}
