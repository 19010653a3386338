//! Residual and Jacobian of the vortex equation family, plus the parameter
//! maps for the named families.
//!
//! With `s = s0 e^{-psi}`, `Theta = theta0 + ddbar(psi)` (densities relative
//! to omega), `D = a + b t s - c t^2 s^2` and the gradient pairing replaced
//! by its eliminated form `ddbar(s) + Theta s`, the equation clears to
//!
//! `R(psi) = Theta (D - t k s (d - s)) - (d - s) (e u^{1-t} + t k ddbar(s))`
//!
//! which is smooth across the zero of the section and free of divisions.
//! The Jacobian is assembled analytically; it is not self-adjoint (the
//! `ddbar(s dpsi)` term carries first-order parts), so only consistency with
//! finite differences is asserted, never symmetry.
//!
//! Families:
//! - `bradlow`:  a=2, b=c=k=0, d=tau, e=1, u=1, t=1, i.e. `2 Theta = tau - s`
//! - `cym`:      t=1 with continuation in alpha; a = 8 + 2 tau alpha (2 lambda - tau/2)/(2 pi)^2,
//!   b = tau alpha/(2 pi)^2, c = k = alpha/(2 (2 pi)^2), d = tau, e = 4
//!   (b and k are built from the same float expression for c so that
//!   b - (k+c) d is exactly zero)
//! - `vbma`:     a = 2 r2 (2 + 2 r2), b=2, c=1, d=1, e=mu, k=1 with
//!   mu = 2 (2 r1 r2 + r1 + r2) and u = 1/(alpha_v (1 - s0)),
//!   alpha_v = mu / (2 r2 (2 + 2 r2))

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bundle::LineBundleData;
use crate::error::{Result, VortexError};
use crate::geometry::{FieldKind, ScalarField, SurfaceGrid};

/// Coefficients (a, b, c, d, e, k) of the family at a fixed path position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub k: f64,
}

impl Coefficients {
    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.d > 0.0 && self.e > 0.0)
            || self.b < 0.0
            || self.c < 0.0
            || self.k < 0.0
        {
            return Err(VortexError::Admissibility(format!(
                "need a,d,e > 0 and b,c,k >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    General,
    Bradlow,
    Cym,
    Vbma,
}

/// Family selector with its raw arguments, as ingested from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    General {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        e: f64,
        k: f64,
    },
    Bradlow {
        tau: f64,
    },
    Cym {
        tau: f64,
        lambda: f64,
    },
    Vbma {
        r1: u32,
        r2: u32,
    },
}

/// Inputs of the Calabi-Yang-Mills reduction; `alpha` is admissible while
/// `8 + 2 tau alpha (2 lambda - tau/2)/(2 pi)^2 > 0`.
#[derive(Debug, Clone, Copy)]
pub struct CymInputs {
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
}

impl CymInputs {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(VortexError::Admissibility(format!(
                "cym alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.tau <= 2.0 {
            return Err(VortexError::Admissibility(format!(
                "cym tau must exceed 2, got {}",
                self.tau
            )));
        }
        if 2.0 * self.lambda - self.tau / 2.0 >= 0.0 {
            return Err(VortexError::Admissibility(format!(
                "cym needs 2 lambda - tau/2 < 0, got lambda={}, tau={}",
                self.lambda, self.tau
            )));
        }
        let a = 8.0
            + (2.0 * self.tau * self.alpha / (2.0 * PI).powi(2))
                * (2.0 * self.lambda - self.tau / 2.0);
        if a <= 0.0 {
            return Err(VortexError::Admissibility(format!(
                "cym admissibility 8 + 2 tau alpha (2 lambda - tau/2)/(2 pi)^2 > 0 fails: {a}"
            )));
        }
        Ok(())
    }
}

impl FamilySpec {
    pub fn tag(&self) -> FamilyTag {
        match self {
            FamilySpec::General { .. } => FamilyTag::General,
            FamilySpec::Bradlow { .. } => FamilyTag::Bradlow,
            FamilySpec::Cym { .. } => FamilyTag::Cym,
            FamilySpec::Vbma { .. } => FamilyTag::Vbma,
        }
    }

    /// Coefficients at path position `alpha` (only the cym family actually
    /// depends on it).
    pub fn coefficients(&self, alpha: f64) -> Result<Coefficients> {
        let co = match *self {
            FamilySpec::General { a, b, c, d, e, k } => Coefficients { a, b, c, d, e, k },
            FamilySpec::Bradlow { tau } => {
                if tau <= 2.0 {
                    return Err(VortexError::Admissibility(format!(
                        "bradlow requires tau > 2 (solvability), got {tau}"
                    )));
                }
                Coefficients {
                    a: 2.0,
                    b: 0.0,
                    c: 0.0,
                    d: tau,
                    e: 1.0,
                    k: 0.0,
                }
            }
            FamilySpec::Cym { tau, lambda } => {
                let inputs = CymInputs { alpha, tau, lambda };
                inputs.validate()?;
                let c = alpha / (2.0 * (2.0 * PI).powi(2));
                // b = tau alpha/(2 pi)^2 written as 2*c*tau so that
                // b - (k + c) d vanishes exactly in floating point
                Coefficients {
                    a: 8.0 + (2.0 * tau * alpha / (2.0 * PI).powi(2)) * (2.0 * lambda - tau / 2.0),
                    b: 2.0 * c * tau,
                    c,
                    d: tau,
                    e: 4.0,
                    k: c,
                }
            }
            FamilySpec::Vbma { r1, r2 } => {
                if !(r1 > r2 && r2 >= 2) {
                    return Err(VortexError::Admissibility(format!(
                        "vbma requires integers r1 > r2 >= 2, got r1={r1}, r2={r2}"
                    )));
                }
                let (r1, r2) = (r1 as f64, r2 as f64);
                Coefficients {
                    a: 2.0 * r2 * (2.0 + 2.0 * r2),
                    b: 2.0,
                    c: 1.0,
                    d: 1.0,
                    e: 2.0 * (2.0 * r1 * r2 + r1 + r2),
                    k: 1.0,
                }
            }
        };
        co.validate()?;
        Ok(co)
    }

    /// Default section cap `d/2`, which keeps the t=0 data strictly inside
    /// the |phi|^2 <= d regime.
    pub fn default_cap(&self) -> Result<f64> {
        Ok(self.coefficients(0.0)?.d / 2.0)
    }

    /// The gauge function u for this family: the defining quotient
    /// `u = a Theta_{t=0} / (e (d - s0))` for the general family, the closed
    /// form `1/(alpha_v (1 - s0))` for vbma (the same quotient), and `u = 1`
    /// for bradlow and cym, whose paths run entirely at t = 1.
    pub fn gauge_u(
        &self,
        grid: &SurfaceGrid,
        bundle: &LineBundleData,
        alpha: f64,
    ) -> Result<ScalarField> {
        match self {
            FamilySpec::Bradlow { .. } | FamilySpec::Cym { .. } => {
                Ok(ScalarField::constant(grid, FieldKind::Function, 1.0))
            }
            FamilySpec::General { .. } | FamilySpec::Vbma { .. } => {
                build_u(&self.coefficients(alpha)?, bundle, &bundle.theta0)
            }
        }
    }

    /// Fully populated parameters at (alpha, t).
    pub fn params_at(
        &self,
        grid: &SurfaceGrid,
        bundle: &LineBundleData,
        alpha: f64,
        t: f64,
    ) -> Result<VortexParams> {
        let u = self.gauge_u(grid, bundle, alpha)?;
        make_params(self.tag(), self.coefficients(alpha)?, alpha, t, u)
    }
}

/// Coefficients, path position and gauge field of one equation instance.
#[derive(Debug, Clone)]
pub struct VortexParams {
    pub coeffs: Coefficients,
    pub alpha: f64,
    pub t: f64,
    pub u: ScalarField,
    pub family_tag: FamilyTag,
}

pub fn make_params(
    family_tag: FamilyTag,
    coeffs: Coefficients,
    alpha: f64,
    t: f64,
    u: ScalarField,
) -> Result<VortexParams> {
    coeffs.validate()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(VortexError::Config(format!("t must lie in [0,1], got {t}")));
    }
    if alpha < 0.0 {
        return Err(VortexError::Config(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    if u.min() <= 0.0 {
        return Err(VortexError::Admissibility(format!(
            "gauge function u must be positive, min {}",
            u.min()
        )));
    }
    Ok(VortexParams {
        coeffs,
        alpha,
        t,
        u,
        family_tag,
    })
}

/// `u = a theta_init / (e (d - s0))`, the function making t=0 exact at psi=0.
pub fn build_u(
    coeffs: &Coefficients,
    bundle: &LineBundleData,
    theta_init: &ScalarField,
) -> Result<ScalarField> {
    if bundle.s0.max() >= coeffs.d {
        return Err(VortexError::Admissibility(format!(
            "max s0 = {} must stay below d = {}",
            bundle.s0.max(),
            coeffs.d
        )));
    }
    let u = bundle
        .s0
        .zip_with(theta_init, |s0, th| {
            coeffs.a * th / (coeffs.e * (coeffs.d - s0))
        })?
        .with_kind(FieldKind::Function);
    debug_assert!(u.min() > 0.0);
    Ok(u)
}

impl VortexParams {
    /// Source weight `e u^{1-t}`, via `exp((1-t) log u)`; at t=1 the gauge
    /// field drops out entirely.
    pub fn source_weight(&self) -> ScalarField {
        let (e, t) = (self.coeffs.e, self.t);
        if t == 1.0 {
            self.u.map(|_| e)
        } else {
            self.u.map(|u| e * ((1.0 - t) * u.ln()).exp())
        }
    }
}

/// Pointwise eliminated denominator `D - t k s (d - s)`; the equation and
/// estimates are only meaningful while it stays positive.
pub fn eliminated_denominator(p: &VortexParams, s: &ScalarField) -> ScalarField {
    let Coefficients { a, b, c, d, k, .. } = p.coeffs;
    let t = p.t;
    s.map(move |s| a + b * t * s - c * t * t * s * s - t * k * s * (d - s))
}

fn residual_impl(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
    source: &ScalarField,
) -> Result<ScalarField> {
    let s = bundle.s_of_psi(psi)?;
    let denom = eliminated_denominator(p, &s);
    let dmin = denom.min();
    if dmin <= 0.0 {
        return Err(VortexError::DenominatorNonpositive(dmin));
    }
    let theta = bundle.curvature_density(grid, psi)?;
    let dd_s = grid.ddbar_density(&s)?;
    let Coefficients { d, k, .. } = p.coeffs;
    let t = p.t;
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let sv = s.values()[i];
        out[i] = theta.values()[i] * denom.values()[i]
            - (d - sv) * (source.values()[i] + t * k * dd_s.values()[i]);
    }
    ScalarField::from_values(grid, FieldKind::TwoFormDensity, out)
}

/// Residual of the cleared equation; zero iff psi solves the family on this
/// grid. Errors when the eliminated denominator loses positivity.
pub fn residual(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
) -> Result<ScalarField> {
    residual_impl(p, bundle, grid, psi, &p.source_weight())
}

/// Residual with the family source `e u^{1-t}` replaced by an explicit
/// field, the manufactured-solution hook.
pub fn residual_with_source(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
    source: &ScalarField,
) -> Result<ScalarField> {
    residual_impl(p, bundle, grid, psi, source)
}

fn jacobian_impl(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
    dpsi: &ScalarField,
    source: &ScalarField,
) -> Result<ScalarField> {
    let s = bundle.s_of_psi(psi)?;
    let denom = eliminated_denominator(p, &s);
    if denom.min() <= 0.0 {
        return Err(VortexError::DenominatorNonpositive(denom.min()));
    }
    let theta = bundle.curvature_density(grid, psi)?;
    let dd_s = grid.ddbar_density(&s)?;
    let dd_dpsi = grid.ddbar_density(dpsi)?;
    let s_dpsi = s.zip_with(dpsi, |a, b| a * b)?;
    let dd_s_dpsi = grid.ddbar_density(&s_dpsi)?;
    let Coefficients { b, c, d, k, .. } = p.coeffs;
    let t = p.t;
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let sv = s.values()[i];
        // delta s = -s dpsi propagated through every s occurrence
        out[i] = dd_dpsi.values()[i] * denom.values()[i]
            - theta.values()[i]
                * sv
                * (b * t - 2.0 * c * t * t * sv - t * k * d + 2.0 * t * k * sv)
                * dpsi.values()[i]
            - sv * (source.values()[i] + t * k * dd_s.values()[i]) * dpsi.values()[i]
            + t * k * (d - sv) * dd_s_dpsi.values()[i];
    }
    ScalarField::from_values(grid, FieldKind::TwoFormDensity, out)
}

/// Directional derivative of [`residual`] at psi in direction dpsi.
pub fn jacobian_apply(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
    dpsi: &ScalarField,
) -> Result<ScalarField> {
    jacobian_impl(p, bundle, grid, psi, dpsi, &p.source_weight())
}

/// Directional derivative of [`residual_with_source`].
pub fn jacobian_apply_with_source(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi: &ScalarField,
    dpsi: &ScalarField,
    source: &ScalarField,
) -> Result<ScalarField> {
    jacobian_impl(p, bundle, grid, psi, dpsi, source)
}

/// Source field making `R(psi*) = 0` pointwise (the residual is linear in
/// the source). The construction needs `d - s* > 0` on the grid.
pub fn manufactured_source(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi_star: &ScalarField,
) -> Result<ScalarField> {
    let s = bundle.s_of_psi(psi_star)?;
    if s.max() >= p.coeffs.d {
        return Err(VortexError::Admissibility(format!(
            "manufactured psi* pushes max s = {} past d = {}",
            s.max(),
            p.coeffs.d
        )));
    }
    let denom = eliminated_denominator(p, &s);
    let theta = bundle.curvature_density(grid, psi_star)?;
    let dd_s = grid.ddbar_density(&s)?;
    let (d, k, t) = (p.coeffs.d, p.coeffs.k, p.t);
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let sv = s.values()[i];
        out[i] = theta.values()[i] * denom.values()[i] / (d - sv) - t * k * dd_s.values()[i];
    }
    ScalarField::from_values(grid, FieldKind::Function, out)
}

/// Gauge field u realizing a manufactured source through the family's own
/// `e u^{1-t}` weight. Only defined for t < 1 (at t=1 the exponent kills u)
/// and for sources that stay positive.
pub fn manufactured_u(
    p: &VortexParams,
    bundle: &LineBundleData,
    grid: &SurfaceGrid,
    psi_star: &ScalarField,
) -> Result<ScalarField> {
    if p.t >= 1.0 {
        return Err(VortexError::Config(
            "manufactured u is undefined at t = 1; the source weight e u^{1-t} no longer depends on u"
                .into(),
        ));
    }
    let src = manufactured_source(p, bundle, grid, psi_star)?;
    if src.min() <= 0.0 {
        return Err(VortexError::Admissibility(format!(
            "manufactured source must be positive to define u, min {}",
            src.min()
        )));
    }
    let (e, t) = (p.coeffs.e, p.t);
    Ok(src.map(|v| (v / e).powf(1.0 / (1.0 - t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::make_background;
    use crate::geometry::make_grid;

    fn setup(n: usize, family: &FamilySpec) -> (SurfaceGrid, LineBundleData) {
        let grid = make_grid(n).unwrap();
        let cap = family.default_cap().unwrap();
        let bundle = make_background(&grid, cap).unwrap();
        (grid, bundle)
    }

    #[test]
    fn vbma_coefficient_map() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let co = spec.coefficients(0.0).unwrap();
        assert_eq!(
            (co.a, co.b, co.c, co.d, co.e, co.k),
            (24.0, 2.0, 1.0, 1.0, 34.0, 1.0)
        );
        assert!(FamilySpec::Vbma { r1: 2, r2: 2 }.coefficients(0.0).is_err());
        assert!(FamilySpec::Vbma { r1: 3, r2: 1 }.coefficients(0.0).is_err());
    }

    #[test]
    fn bradlow_coefficient_map() {
        let spec = FamilySpec::Bradlow { tau: 4.0 };
        let co = spec.coefficients(0.0).unwrap();
        assert_eq!(
            (co.a, co.b, co.c, co.d, co.e, co.k),
            (2.0, 0.0, 0.0, 4.0, 1.0, 0.0)
        );
        assert!(FamilySpec::Bradlow { tau: 2.0 }.coefficients(0.0).is_err());
    }

    #[test]
    fn cym_identity_b_minus_kcd_is_exactly_zero() {
        let spec = FamilySpec::Cym {
            tau: 4.0,
            lambda: -1.0,
        };
        for alpha in [0.0, 0.7, 2.5, 5.0, 9.0] {
            let co = spec.coefficients(alpha).unwrap();
            assert_eq!(co.b - (co.k + co.c) * co.d, 0.0, "alpha = {alpha}");
            assert!(co.b - co.c * co.d >= 0.0);
        }
        // inadmissible alpha: a <= 0 at alpha >= pi^2 for tau=4, lambda=-1
        assert!(spec.coefficients(10.0).is_err());
    }

    #[test]
    fn u_construction_makes_t0_exact() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let (grid, bundle) = setup(32, &spec);
        let p = spec.params_at(&grid, &bundle, 0.0, 0.0).unwrap();
        assert!(p.u.min() > 0.0);
        let zero = ScalarField::constant(&grid, FieldKind::Function, 0.0);
        let r = residual(&p, &bundle, &grid, &zero).unwrap();
        assert!(r.linf() <= 1e-12, "t=0 residual {}", r.linf());
    }

    #[test]
    fn build_u_rejects_cap_at_d() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let grid = make_grid(32).unwrap();
        let bundle = make_background(&grid, 1.0).unwrap(); // cap == d
        let co = spec.coefficients(0.0).unwrap();
        assert!(matches!(
            build_u(&co, &bundle, &bundle.theta0),
            Err(VortexError::Admissibility(_))
        ));
    }

    #[test]
    fn vbma_initial_residual_nonzero_at_t1() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let (grid, bundle) = setup(32, &spec);
        let p = spec.params_at(&grid, &bundle, 0.0, 1.0).unwrap();
        let zero = ScalarField::constant(&grid, FieldKind::Function, 0.0);
        let r = residual(&p, &bundle, &grid, &zero).unwrap();
        assert!(
            r.linf() > 1e-3,
            "psi=0 is not a t=1 solution, got {}",
            r.linf()
        );
    }

    #[test]
    fn jacobian_is_linear() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let (grid, bundle) = setup(32, &spec);
        let p = spec.params_at(&grid, &bundle, 0.0, 0.6).unwrap();
        let psi = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
            0.1 * (2.0 * PI * (x + 2.0 * y)).sin()
        });
        let v = ScalarField::from_fn(&grid, FieldKind::Function, |x, _| {
            0.2 * (2.0 * PI * x).cos()
        });
        let w = ScalarField::from_fn(&grid, FieldKind::Function, |_, y| {
            0.3 * (4.0 * PI * y).sin()
        });
        let jv = jacobian_apply(&p, &bundle, &grid, &psi, &v).unwrap();
        let jw = jacobian_apply(&p, &bundle, &grid, &psi, &w).unwrap();
        let combo = v.zip_with(&w, |a, b| 2.0 * a - 0.5 * b).unwrap();
        let jc = jacobian_apply(&p, &bundle, &grid, &psi, &combo).unwrap();
        let expect = jv.zip_with(&jw, |a, b| 2.0 * a - 0.5 * b).unwrap();
        assert!(jc.linf_diff(&expect).unwrap() < 1e-10);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let (grid, bundle) = setup(64, &spec);
        let p = spec.params_at(&grid, &bundle, 0.0, 0.7).unwrap();
        let psi = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
            0.15 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.05 * (4.0 * PI * y).sin()
        });
        let dpsi = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
            0.1 * (2.0 * PI * (2.0 * x - y)).cos()
        });
        let j = jacobian_apply(&p, &bundle, &grid, &psi, &dpsi).unwrap();
        let eps = 1e-6;
        let plus = psi.zip_with(&dpsi, |a, b| a + eps * b).unwrap();
        let minus = psi.zip_with(&dpsi, |a, b| a - eps * b).unwrap();
        let rp = residual(&p, &bundle, &grid, &plus).unwrap();
        let rm = residual(&p, &bundle, &grid, &minus).unwrap();
        let fd = rp.zip_with(&rm, |a, b| (a - b) / (2.0 * eps)).unwrap();
        let rel = j.linf_diff(&fd).unwrap() / j.linf();
        assert!(rel < 1e-5, "relative FD mismatch {rel}");
    }

    #[test]
    fn manufactured_u_reproduces_solution_below_t1() {
        let spec = FamilySpec::Vbma { r1: 3, r2: 2 };
        let (grid, bundle) = setup(64, &spec);
        let p = spec.params_at(&grid, &bundle, 0.0, 0.7).unwrap();
        let psi_star = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
            0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
        });
        let u_star = manufactured_u(&p, &bundle, &grid, &psi_star).unwrap();
        let p2 = make_params(FamilyTag::Vbma, p.coeffs, 0.0, 0.7, u_star).unwrap();
        let r = residual(&p2, &bundle, &grid, &psi_star).unwrap();
        assert!(r.linf() < 1e-12, "manufactured residual {}", r.linf());
        // and u is genuinely unavailable at t=1
        let p3 = spec.params_at(&grid, &bundle, 0.0, 1.0).unwrap();
        assert!(manufactured_u(&p3, &bundle, &grid, &psi_star).is_err());
    }

    #[test]
    fn toy_constant_coefficient_expansion() {
        // b=c=k=0 general family: R = a Theta - (d - s) e u. On psi = const
        // the Jacobian must reduce to a dd(dpsi) - s e u dpsi exactly.
        let grid = make_grid(32).unwrap();
        let bundle = make_background(&grid, 0.4).unwrap();
        let co = Coefficients {
            a: 2.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
            e: 1.5,
            k: 0.0,
        };
        let u = build_u(&co, &bundle, &bundle.theta0).unwrap();
        let p = make_params(FamilyTag::General, co, 0.0, 0.3, u).unwrap();
        let psi = ScalarField::constant(&grid, FieldKind::Function, 0.2);
        let dpsi = ScalarField::from_fn(&grid, FieldKind::Function, |x, _| (2.0 * PI * x).sin());
        let j = jacobian_apply(&p, &bundle, &grid, &psi, &dpsi).unwrap();
        let s = bundle.s_of_psi(&psi).unwrap();
        let src = p.source_weight();
        let dd = grid.ddbar_density(&dpsi).unwrap();
        let mut hand = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            hand[i] = co.a * dd.values()[i] - s.values()[i] * src.values()[i] * dpsi.values()[i];
        }
        let hand = ScalarField::from_values(&grid, FieldKind::TwoFormDensity, hand).unwrap();
        assert!(j.linf_diff(&hand).unwrap() < 1e-12);
    }
}
