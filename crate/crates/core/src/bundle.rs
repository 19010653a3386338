//! Background Hermitian data for the degree-1 line bundle.
//!
//! The holomorphic section is realized by the Jacobi theta function on
//! modulus i: the section density is
//!
//! `s0(x, y) = C e^{-2 pi y^2} |theta3(x + iy; i)|^2`,
//!
//! which is doubly periodic (the quasi-periodicity of theta3 cancels the
//! Gaussian weight) and vanishes exactly once per fundamental cell, at
//! (1/2, 1/2). The background curvature is `i Theta_0 = omega`, i.e. the
//! density `theta0 = 1`, so the degree is 1.
//!
//! The gradient pairing `i nabla^{1,0} phi wedge nabla^{0,1} phi*` is
//! evaluated in its eliminated form `i ddbar s + i Theta_h s` (the curvature
//! identity for |phi|^2), which stays smooth across the zero of the section;
//! the direct covariant derivative would need `d log h0`, singular there.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;

use crate::error::{Result, VortexError};
use crate::geometry::{FieldKind, ScalarField, SurfaceGrid};

/// Truncation order for the theta series at a given imaginary-part extent:
/// terms are `e^{-pi m^2 + 2 pi m |y|}`, so the tail past M is below 1e-15
/// of the leading term once `pi (M^2 - 2 M ymax)` exceeds ~40.
fn theta_truncation(y_extent: f64) -> i64 {
    let y = y_extent.abs().max(1.0);
    let mut m = 4;
    while PI * ((m * m) as f64 - 2.0 * m as f64 * y) < 40.0 {
        m += 1;
    }
    m
}

/// `theta3(z; i) = sum_m e^{-pi m^2} e^{2 pi i m z}`, truncated so the tail
/// is below 1e-15 relative to the largest term.
pub fn theta3(z: Complex<f64>) -> Complex<f64> {
    theta3_derivative(z, 0)
}

/// d^order/dz^order of theta3 at modulus i (termwise `(2 pi i m)^order`).
pub fn theta3_derivative(z: Complex<f64>, order: u32) -> Complex<f64> {
    let m_max = theta_truncation(z.im);
    let mut sum = Complex::new(0.0, 0.0);
    for m in -m_max..=m_max {
        let mf = m as f64;
        let coeff = Complex::new(0.0, 2.0 * PI * mf).powu(order);
        let coeff = if order == 0 {
            Complex::new(1.0, 0.0)
        } else {
            coeff
        };
        let term = (-PI * mf * mf + Complex::new(0.0, 2.0 * PI * mf) * z).exp();
        sum += coeff * term;
    }
    sum
}

/// Unnormalized section density at an arbitrary point (used for the
/// periodicity checks as well as the grid construction).
pub fn section_density_raw(x: f64, y: f64) -> f64 {
    let f = theta3(Complex::new(x, y));
    (-2.0 * PI * y * y).exp() * f.norm_sqr()
}

/// Background data: section density s0, curvature density theta0, degree.
#[derive(Debug, Clone)]
pub struct LineBundleData {
    pub s0: ScalarField,
    pub theta0: ScalarField,
    pub degree: i32,
    pub zero_location: (f64, f64),
    /// Normalization constant in `s0 = C e^{-2 pi y^2} |theta3|^2`.
    norm: f64,
}

/// Construct the theta-function background with `max s0 = cap` and
/// `i Theta_0 = omega` (density one).
pub fn make_background(grid: &SurfaceGrid, cap: f64) -> Result<LineBundleData> {
    if !cap.is_finite() || cap <= 0.0 {
        return Err(VortexError::Config(format!(
            "section cap must be positive, got {cap}"
        )));
    }
    let raw = ScalarField::from_fn(grid, FieldKind::Function, section_density_raw);
    // The continuum maximum sits at the origin, which is always a node,
    // so the normalization is grid-independent.
    let norm = cap / raw.max();
    let s0 = raw.map(|v| v * norm);
    Ok(LineBundleData {
        s0,
        theta0: ScalarField::constant(grid, FieldKind::TwoFormDensity, 1.0),
        degree: 1,
        zero_location: (0.5, 0.5),
        norm,
    })
}

impl LineBundleData {
    /// Section density under `h = h0 e^{-psi}`: `s = s0 e^{-psi}` pointwise.
    pub fn s_of_psi(&self, psi: &ScalarField) -> Result<ScalarField> {
        self.s0.zip_with(psi, |s0, p| s0 * (-p).exp())
    }

    /// Curvature density of `h0 e^{-psi}`: `theta0 + ddbar_density(psi)`.
    pub fn curvature_density(&self, grid: &SurfaceGrid, psi: &ScalarField) -> Result<ScalarField> {
        let dd = grid.ddbar_density(psi)?;
        self.theta0.zip_with(&dd, |t, d| t + d)
    }

    /// Density of `i nabla^{1,0} phi wedge nabla^{0,1} phi*` under
    /// `h = h0 e^{-psi}`, in the eliminated form `ddbar(s) + Theta_h s`.
    pub fn grad_pairing_density(
        &self,
        grid: &SurfaceGrid,
        psi: &ScalarField,
    ) -> Result<ScalarField> {
        let s = self.s_of_psi(psi)?;
        let dd_s = grid.ddbar_density(&s)?;
        let theta = self.curvature_density(grid, psi)?;
        let ts = theta.zip_with(&s, |t, s| t * s)?;
        dd_s.zip_with(&ts, |a, b| a + b)
    }

    /// Density of `i d f wedge dbar f` for a real function: `|grad f|^2 / (4 pi)`.
    pub fn grad_square_density(grid: &SurfaceGrid, f: &ScalarField) -> Result<ScalarField> {
        let (fx, fy) = grid.gradient(f)?;
        Ok(fx
            .zip_with(&fy, |a, b| (a * a + b * b) / (4.0 * PI))?
            .with_kind(FieldKind::TwoFormDensity))
    }

    /// Max-norm gap between the eliminated gradient pairing and the direct
    /// expression `(i d s wedge dbar s) / s`, measured where
    /// `s > threshold_frac * max s`.
    pub fn gradient_identity_residual(
        &self,
        grid: &SurfaceGrid,
        psi: &ScalarField,
        threshold_frac: f64,
    ) -> Result<f64> {
        let s = self.s_of_psi(psi)?;
        let pairing = self.grad_pairing_density(grid, psi)?;
        let gsq = Self::grad_square_density(grid, &s)?;
        let cut = threshold_frac * s.max();
        let mut worst = 0.0f64;
        for ((&sv, &pv), &gv) in s
            .values()
            .iter()
            .zip(pairing.values().iter())
            .zip(gsq.values().iter())
        {
            if sv > cut {
                worst = worst.max((pv - gv / sv).abs());
            }
        }
        Ok(worst)
    }

    /// Poincare-Lelong defect `ddbar log s0 + theta0` away from the zero,
    /// evaluated through the off-zero identity
    /// `ddbar log s0 = ddbar(s0)/s0 - (i d s0 wedge dbar s0)/s0^2`
    /// so that every derivative acts on the smooth field s0. Returns the
    /// max-norm outside `exclude_cells` grid cells of the zero.
    pub fn poincare_lelong_residual(
        &self,
        grid: &SurfaceGrid,
        exclude_cells: usize,
    ) -> Result<f64> {
        let dd = grid.ddbar_density(&self.s0)?;
        let gsq = Self::grad_square_density(grid, &self.s0)?;
        let n = grid.n();
        let (zx, zy) = self.zero_location;
        let zi = (zx * n as f64).round() as i64;
        let zj = (zy * n as f64).round() as i64;
        let r2 = (exclude_cells * exclude_cells) as i64;
        let mut worst = 0.0f64;
        for idx in 0..grid.len() {
            let i = (idx % n) as i64;
            let j = (idx / n) as i64;
            let di = (i - zi)
                .rem_euclid(n as i64)
                .min((zi - i).rem_euclid(n as i64));
            let dj = (j - zj)
                .rem_euclid(n as i64)
                .min((zj - j).rem_euclid(n as i64));
            if di * di + dj * dj <= r2 {
                continue;
            }
            let s = self.s0.values()[idx];
            let res =
                dd.values()[idx] / s - gsq.values()[idx] / (s * s) + self.theta0.values()[idx];
            worst = worst.max(res.abs());
        }
        Ok(worst)
    }
}

/// Closed-form derivatives of the background density, for oracles that need
/// a grid-independent source: s0, its gradient, and its Laplacian, all from
/// termwise-differentiated theta series (no spectral operations involved).
#[derive(Debug, Clone)]
pub struct BackgroundDerivatives {
    pub s0: ScalarField,
    pub s0_x: ScalarField,
    pub s0_y: ScalarField,
    pub s0_lap: ScalarField,
}

pub fn background_with_derivatives(grid: &SurfaceGrid, cap: f64) -> Result<BackgroundDerivatives> {
    let b = make_background(grid, cap)?;
    let c = b.norm;
    let mut sx = vec![0.0; grid.len()];
    let mut sy = vec![0.0; grid.len()];
    let mut sl = vec![0.0; grid.len()];
    for idx in 0..grid.len() {
        let (x, y) = grid.coords(idx);
        let z = Complex::new(x, y);
        let f = theta3(z);
        let fp = theta3_derivative(z, 1);
        let g = (-2.0 * PI * y * y).exp();
        let fpc = fp * f.conj();
        sx[idx] = c * g * 2.0 * fpc.re;
        sy[idx] = c * g * (-4.0 * PI * y * f.norm_sqr() - 2.0 * fpc.im);
        sl[idx] = c
            * g
            * (4.0 * fp.norm_sqr()
                + 16.0 * PI * PI * y * y * f.norm_sqr()
                + 16.0 * PI * y * fpc.im
                - 4.0 * PI * f.norm_sqr());
    }
    Ok(BackgroundDerivatives {
        s0: b.s0,
        s0_x: ScalarField::from_values(grid, FieldKind::Function, sx)?,
        s0_y: ScalarField::from_values(grid, FieldKind::Function, sy)?,
        s0_lap: ScalarField::from_values(grid, FieldKind::Function, sl)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_grid;

    #[test]
    fn theta_vanishes_at_half_period() {
        let v = theta3(Complex::new(0.5, 0.5));
        assert!(v.norm() < 1e-15, "theta3((1+i)/2) = {v}");
    }

    #[test]
    fn section_is_doubly_periodic() {
        let mut worst = 0.0f64;
        for k in 0..25 {
            let x = 0.04 * k as f64;
            let y = 0.9 - 0.03 * k as f64;
            let v = section_density_raw(x, y);
            worst = worst.max((section_density_raw(x + 1.0, y) - v).abs());
            worst = worst.max((section_density_raw(x, y + 1.0) - v).abs());
        }
        assert!(worst < 1e-12, "periodicity defect {worst}");
    }

    #[test]
    fn background_normalization_and_zero() {
        let g = make_grid(64).unwrap();
        let b = make_background(&g, 0.5).unwrap();
        assert_eq!(b.s0.max(), 0.5, "max s0 is the cap exactly");
        assert!(b.s0.min() >= 0.0);
        let zero_idx = g.node_index(32, 32);
        assert!(
            b.s0.values()[zero_idx] <= 1e-8 * 0.5,
            "s0 at (1/2,1/2) = {}",
            b.s0.values()[zero_idx]
        );
        // every near-zero node lies within one cell of the zero
        for idx in 0..g.len() {
            if b.s0.values()[idx] < 1e-6 * 0.5 {
                let (x, y) = g.coords(idx);
                assert!(
                    (x - 0.5).abs() <= g.spacing() && (y - 0.5).abs() <= g.spacing(),
                    "spurious zero at ({x},{y})"
                );
            }
        }
        let deg = g.integrate(&b.theta0).unwrap() / (2.0 * PI);
        assert!((deg - 1.0).abs() < 1e-8, "degree {deg}");
    }

    #[test]
    fn s_of_psi_pointwise() {
        let g = make_grid(32).unwrap();
        let b = make_background(&g, 0.5).unwrap();
        let zero = ScalarField::constant(&g, FieldKind::Function, 0.0);
        assert!(b.s_of_psi(&zero).unwrap().linf_diff(&b.s0).unwrap() < 1e-15);
        let log2 = ScalarField::constant(&g, FieldKind::Function, (2.0f64).ln());
        let halved = b.s_of_psi(&log2).unwrap();
        let expected = b.s0.map(|v| v / 2.0);
        assert!(halved.linf_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn curvature_density_cases() {
        let g = make_grid(64).unwrap();
        let b = make_background(&g, 0.5).unwrap();
        let zero = ScalarField::constant(&g, FieldKind::Function, 0.0);
        assert!(
            b.curvature_density(&g, &zero)
                .unwrap()
                .linf_diff(&b.theta0)
                .unwrap()
                < 1e-14
        );
        let psi = ScalarField::from_fn(&g, FieldKind::Function, |x, _| (2.0 * PI * x).sin());
        let theta = b.curvature_density(&g, &psi).unwrap();
        let expected = psi
            .map(|v| 1.0 - PI * v)
            .with_kind(FieldKind::TwoFormDensity);
        assert!(theta.linf_diff(&expected).unwrap() < 1e-10);
        // degree conservation for arbitrary psi
        let wild = ScalarField::from_fn(&g, FieldKind::Function, |x, y| {
            0.8 * (2.0 * PI * (2.0 * x + 3.0 * y)).sin() - 0.3 * (2.0 * PI * y).cos()
        });
        let deg = g
            .integrate(&b.curvature_density(&g, &wild).unwrap())
            .unwrap()
            / (2.0 * PI);
        assert!((deg - 1.0).abs() < 1e-8, "degree {deg}");
    }

    #[test]
    fn grad_pairing_positive_and_matches_direct_form() {
        let g = make_grid(128).unwrap();
        let b = make_background(&g, 0.5).unwrap();
        let psi = ScalarField::from_fn(&g, FieldKind::Function, |x, y| {
            0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
        });
        let gp = b.grad_pairing_density(&g, &psi).unwrap();
        assert!(gp.min() >= -1e-6, "pairing density min {}", gp.min());
        let gap = b.gradient_identity_residual(&g, &psi, 0.01).unwrap();
        assert!(gap <= 1e-6, "eliminated vs direct gradient form gap {gap}");
    }

    #[test]
    fn grad_pairing_conformal_scaling() {
        let g = make_grid(32).unwrap();
        let b = make_background(&g, 0.5).unwrap();
        let zero = ScalarField::constant(&g, FieldKind::Function, 0.0);
        let c = 0.37;
        let shifted = ScalarField::constant(&g, FieldKind::Function, c);
        let base = b.grad_pairing_density(&g, &zero).unwrap();
        let scaled = b.grad_pairing_density(&g, &shifted).unwrap();
        let expected = base.map(|v| v * (-c).exp());
        assert!(scaled.linf_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn poincare_lelong_off_zero() {
        let g = make_grid(128).unwrap();
        let b = make_background(&g, 0.5).unwrap();
        let res = b.poincare_lelong_residual(&g, 3).unwrap();
        assert!(res <= 1e-4, "Poincare-Lelong residual {res}");
    }

    #[test]
    fn analytic_derivatives_match_spectral() {
        let g = make_grid(64).unwrap();
        let d = background_with_derivatives(&g, 0.5).unwrap();
        let (sx, sy) = g.gradient(&d.s0).unwrap();
        assert!(sx.linf_diff(&d.s0_x).unwrap() < 1e-11);
        assert!(sy.linf_diff(&d.s0_y).unwrap() < 1e-11);
        let lap = g.laplacian(&d.s0).unwrap();
        assert!(lap.linf_diff(&d.s0_lap).unwrap() < 1e-9);
    }
}
