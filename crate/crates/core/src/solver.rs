//! Damped Newton solves and adaptive continuation along (alpha, t) paths.
//!
//! A solve owns its state exclusively; everything here is deterministic:
//! fixed iteration orders, no randomness, no time dependence, so identical
//! configurations reproduce bit-identical accepted states.

use serde::{Deserialize, Serialize};

use crate::bundle::LineBundleData;
use crate::equation::{self, eliminated_denominator, FamilySpec, VortexParams};
use crate::error::{Result, VortexError};
use crate::estimates::{self, EstimateReport};
use crate::geometry::{FieldKind, ScalarField, SurfaceGrid};
use crate::linsolve::{field_from_flat, gmres, FourierHelmholtz};

/// Newton/continuation tolerances. `max_step`/`min_step` are lengths in the
/// segment-relative coordinate of each waypoint leg (a leg spans 1.0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSpec {
    pub waypoints: Vec<(f64, f64)>,
    pub max_step: f64,
    pub min_step: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl PathSpec {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(VortexError::Config(
                "path needs at least one waypoint".into(),
            ));
        }
        for &(alpha, t) in &self.waypoints {
            if alpha < 0.0 || !(0.0..=1.0).contains(&t) {
                return Err(VortexError::Config(format!(
                    "waypoint (alpha={alpha}, t={t}) outside alpha >= 0, 0 <= t <= 1"
                )));
            }
        }
        for w in self.waypoints.windows(2) {
            if w[0] == w[1] {
                return Err(VortexError::Config(format!(
                    "consecutive waypoints coincide at {:?}",
                    w[0]
                )));
            }
        }
        if !(self.max_step > 0.0 && self.min_step > 0.0 && self.min_step <= self.max_step) {
            return Err(VortexError::Config(format!(
                "need 0 < min_step <= max_step, got {} / {}",
                self.min_step, self.max_step
            )));
        }
        if !self.newton_tol.is_finite() || self.newton_tol <= 0.0 || self.max_newton_iters == 0 {
            return Err(VortexError::Config("bad newton tolerances".into()));
        }
        Ok(())
    }

    pub fn defaults_for(waypoints: Vec<(f64, f64)>) -> Self {
        PathSpec {
            waypoints,
            max_step: 0.25,
            min_step: 1e-6,
            newton_tol: 1e-10,
            max_newton_iters: 40,
        }
    }
}

/// One accepted solver state with its monitor record.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub psi: ScalarField,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub path_position: (f64, f64),
    pub report: EstimateReport,
}

const DAMPING_FLOOR: f64 = 1.0 / (1 << 20) as f64;
const LIN_TOL: f64 = 1e-10;
const LIN_RESTART: usize = 120;
const LIN_MAX_ITERS: usize = 600;

struct NewtonOutcome {
    psi: ScalarField,
    residual_norm: f64,
    iters: usize,
}

fn newton_iterate(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi_init: &ScalarField,
    tol: f64,
    max_iters: usize,
    source: Option<&ScalarField>,
) -> Result<NewtonOutcome> {
    let eval = |psi: &ScalarField| -> Result<ScalarField> {
        match source {
            Some(src) => equation::residual_with_source(p, bundle, grid, psi, src),
            None => equation::residual(p, bundle, grid, psi),
        }
    };
    let mut psi = psi_init.clone();
    let mut r = eval(&psi)?;
    let mut rn = r.linf();
    let mut iters = 0;
    while rn > tol {
        if iters >= max_iters {
            return Err(VortexError::NonConvergence {
                final_norm: rn,
                iters,
                detail: "newton iteration budget exhausted".into(),
            });
        }
        let (kappa, nu) = preconditioner_means(p, bundle, grid, &psi, source)?;
        let helm = FourierHelmholtz::new(grid, kappa, nu);
        let precond = |v: &[f64]| -> Vec<f64> {
            let f = field_from_flat(grid, FieldKind::Function, v);
            helm.apply_inverse(grid, &f).values().to_vec()
        };
        let mut apply = |v: &[f64]| -> Result<Vec<f64>> {
            let dpsi = field_from_flat(grid, FieldKind::Function, v);
            let out = match source {
                Some(src) => {
                    equation::jacobian_apply_with_source(p, bundle, grid, &psi, &dpsi, src)?
                }
                None => equation::jacobian_apply(p, bundle, grid, &psi, &dpsi)?,
            };
            Ok(out.values().to_vec())
        };
        let rhs: Vec<f64> = r.values().iter().map(|v| -v).collect();
        let lin = gmres(
            &mut apply,
            &precond,
            &rhs,
            LIN_TOL,
            LIN_MAX_ITERS,
            LIN_RESTART,
        )?;
        let step = field_from_flat(grid, FieldKind::Function, &lin);

        // Backtrack on residual-norm increase; a nonpositive eliminated
        // denominator rejects the trial outright.
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= DAMPING_FLOOR {
            let trial = psi.zip_with(&step, |a, b| a + lambda * b)?;
            match eval(&trial) {
                Ok(rt) => {
                    let rtn = rt.linf();
                    if rtn < rn {
                        psi = trial;
                        r = rt;
                        rn = rtn;
                        accepted = true;
                        break;
                    }
                }
                Err(VortexError::DenominatorNonpositive(_)) => {}
                Err(other) => return Err(other),
            }
            lambda *= 0.5;
        }
        iters += 1;
        if !accepted {
            return Err(VortexError::NonConvergence {
                final_norm: rn,
                iters,
                detail: format!("damping floor {DAMPING_FLOOR:.1e} reached without progress"),
            });
        }
    }
    Ok(NewtonOutcome {
        psi,
        residual_norm: rn,
        iters,
    })
}

/// Means of the variable coefficients of the linearization, feeding the
/// Fourier-Helmholtz preconditioner: kappa from the second-order part,
/// nu from the zeroth-order part.
fn preconditioner_means(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
    source: Option<&ScalarField>,
) -> Result<(f64, f64)> {
    let s = bundle.s_of_psi(psi)?;
    let theta = bundle.curvature_density(grid, psi)?;
    let dd_s = grid.ddbar_density(&s)?;
    let owned_src;
    let src = match source {
        Some(f) => f,
        None => {
            owned_src = p.source_weight();
            &owned_src
        }
    };
    let denom = eliminated_denominator(p, &s);
    let c = p.coeffs;
    let t = p.t;
    let n = grid.len() as f64;
    let mut kappa = 0.0;
    let mut nu = 0.0;
    for i in 0..grid.len() {
        let sv = s.values()[i];
        // principal symbol coefficient: denom + t k (d - s) s reduces to D
        kappa += denom.values()[i] + t * c.k * (c.d - sv) * sv;
        nu += -theta.values()[i]
            * sv
            * (c.b * t - 2.0 * c.c * t * t * sv - t * c.k * c.d + 2.0 * t * c.k * sv)
            - sv * (src.values()[i] + t * c.k * dd_s.values()[i])
            + t * c.k * (c.d - 2.0 * sv) * dd_s.values()[i];
    }
    Ok((kappa / n, nu / n))
}

/// Damped Newton at fixed parameters; the accepted state carries its full
/// monitor record.
pub fn newton_solve(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi_init: &ScalarField,
    tol: f64,
    max_iters: usize,
) -> Result<SolverState> {
    let out = newton_iterate(p, bundle, grid, psi_init, tol, max_iters, None)?;
    let report = estimates::assemble_report(p, bundle, grid, &out.psi)?;
    Ok(SolverState {
        psi: out.psi,
        residual_norm: out.residual_norm,
        newton_iters: out.iters,
        path_position: (p.alpha, p.t),
        report,
    })
}

/// Newton with an explicit manufactured source in place of `e u^{1-t}`.
pub fn newton_solve_with_source(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi_init: &ScalarField,
    source: &ScalarField,
    tol: f64,
    max_iters: usize,
) -> Result<SolverState> {
    let out = newton_iterate(p, bundle, grid, psi_init, tol, max_iters, Some(source))?;
    let report = estimates::assemble_report(p, bundle, grid, &out.psi)?;
    Ok(SolverState {
        psi: out.psi,
        residual_norm: out.residual_norm,
        newton_iters: out.iters,
        path_position: (p.alpha, p.t),
        report,
    })
}

/// Continue along the waypoint polyline with adaptive steps: halve on a
/// failed solve, double after three consecutive successes, never exceed
/// `max_step`. Every accepted state carries its monitor record; monitor
/// verdicts never halt the path (only solver failures do).
pub fn continue_path(
    spec: &PathSpec,
    family: &FamilySpec,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi_init: &ScalarField,
) -> Result<Vec<SolverState>> {
    spec.validate()?;
    let mut states = Vec::new();
    let (a0, t0) = spec.waypoints[0];
    let p0 = family.params_at(grid, bundle, a0, t0)?;
    let seed = newton_solve(
        &p0,
        bundle,
        grid,
        psi_init,
        spec.newton_tol,
        spec.max_newton_iters,
    )
    .map_err(|e| VortexError::PathFailure {
        alpha: a0,
        t: t0,
        reason: format!("seed solve failed: {e}"),
    })?;
    let mut psi = seed.psi.clone();
    states.push(seed);

    for leg in spec.waypoints.windows(2) {
        let (a_from, t_from) = leg[0];
        let (a_to, t_to) = leg[1];
        let mut sigma = 0.0f64;
        let mut step = spec.max_step;
        let mut streak = 0usize;
        while sigma < 1.0 {
            let trial_sigma = (sigma + step).min(1.0);
            let alpha = a_from + trial_sigma * (a_to - a_from);
            let t = t_from + trial_sigma * (t_to - t_from);
            let attempt = family.params_at(grid, bundle, alpha, t).and_then(|p| {
                newton_solve(
                    &p,
                    bundle,
                    grid,
                    &psi,
                    spec.newton_tol,
                    spec.max_newton_iters,
                )
            });
            match attempt {
                Ok(state) => {
                    psi = state.psi.clone();
                    states.push(state);
                    sigma = trial_sigma;
                    streak += 1;
                    if streak >= 3 {
                        step = (2.0 * step).min(spec.max_step);
                        streak = 0;
                    }
                }
                Err(_) => {
                    step *= 0.5;
                    streak = 0;
                    if step < spec.min_step {
                        let last = states.last().map(|s| s.path_position).unwrap_or((a0, t0));
                        return Err(VortexError::PathFailure {
                            alpha,
                            t,
                            reason: format!(
                                "step underflow below min_step={}; last good state at (alpha={}, t={}), {} accepted",
                                spec.min_step,
                                last.0,
                                last.1,
                                states.len()
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(states)
}

/// Outcome of the backward/forward uniqueness probe.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub endpoint_discrepancy: f64,
    pub forward_steps: usize,
    pub backward_steps: usize,
    pub return_steps: usize,
    pub reconverge_iters: usize,
}

/// Run the path forward, perturb the endpoint solution, re-converge,
/// continue backward to the start and forward again; returns the max-norm
/// endpoint discrepancy together with leg statistics.
pub fn uniqueness_roundtrip(
    spec: &PathSpec,
    family: &FamilySpec,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    perturbation: &ScalarField,
) -> Result<RoundtripReport> {
    let zero = ScalarField::constant(grid, FieldKind::Function, 0.0);
    let forward = continue_path(spec, family, bundle, grid, &zero)?;
    let psi_forward = &forward.last().expect("nonempty path").psi;

    let (a_end, t_end) = *spec.waypoints.last().expect("nonempty waypoints");
    let p_end = family.params_at(grid, bundle, a_end, t_end)?;
    let perturbed = psi_forward.zip_with(perturbation, |a, b| a + b)?;
    let reconverged = newton_solve(
        &p_end,
        bundle,
        grid,
        &perturbed,
        spec.newton_tol,
        spec.max_newton_iters,
    )?;

    let mut back_spec = spec.clone();
    back_spec.waypoints.reverse();
    let backward = continue_path(&back_spec, family, bundle, grid, &reconverged.psi)?;

    let returned = continue_path(spec, family, bundle, grid, &backward.last().unwrap().psi)?;
    let psi_return = &returned.last().unwrap().psi;

    Ok(RoundtripReport {
        endpoint_discrepancy: psi_return.linf_diff(psi_forward)?,
        forward_steps: forward.len(),
        backward_steps: backward.len(),
        return_steps: returned.len(),
        reconverge_iters: reconverged.newton_iters,
    })
}
