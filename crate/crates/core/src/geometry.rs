//! Flat-torus discretization and spectral calculus.
//!
//! The surface is the square torus R^2/Z^2 carrying the area form
//! `omega = 2 pi dx dy`, so the total area is `2 pi` and a degree-1 line
//! bundle with `i Theta_0 = omega` has `int c_1 = 1`. Two-forms are stored
//! as scalar densities relative to omega; a density `f` means the form
//! `f * omega`.
//!
//! Derivatives are Fourier-diagonal and therefore exact on band-limited
//! data. With modes `e^{2 pi i (m x + l y)}`:
//!
//! - `laplacian`:      multiplier `-4 pi^2 (m^2 + l^2)`
//! - `ddbar_density`:  `i ddbar f = (lap f / 4 pi) * omega`
//! - `green_solve`:    inverts `lap u = 4 pi (f - mean f)` with `mean u = 0`

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, VortexError};

/// Coefficient of the area form against `dx dy`.
pub const AREA_FORM_DENSITY: f64 = 2.0 * PI;

/// Interpretation of a [`ScalarField`]: a plain function or the scalar
/// density of a two-form relative to omega.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FieldKind {
    Function,
    TwoFormDensity,
}

/// Periodic n x n discretization of the unit-square torus.
///
/// Nodes sit at `(i/n, j/n)` for `0 <= i, j < n`; values are stored
/// row-major with index `j*n + i`. FFT plans are cached on the grid.
#[derive(Clone)]
pub struct SurfaceGrid {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SurfaceGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for SurfaceGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

/// Build a periodic grid with `n` nodes per axis. Requires `n >= 8` even.
pub fn make_grid(n: usize) -> Result<SurfaceGrid> {
    if n < 8 || n % 2 != 0 {
        return Err(VortexError::Config(format!(
            "grid size must be even and >= 8, got {n}"
        )));
    }
    let mut planner = FftPlanner::new();
    Ok(SurfaceGrid {
        n,
        fwd: planner.plan_fft_forward(n),
        inv: planner.plan_fft_inverse(n),
    })
}

impl SurfaceGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinates for flat index `idx = j*n + i`.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx % self.n) as f64 * h, (idx / self.n) as f64 * h)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.n != self.n {
            return Err(VortexError::GridMismatch(f.n, self.n));
        }
        Ok(())
    }

    fn check_kind(&self, f: &ScalarField, expected: FieldKind) -> Result<()> {
        self.check(f)?;
        if f.kind != expected {
            return Err(VortexError::WrongFieldKind {
                expected,
                got: f.kind,
            });
        }
        Ok(())
    }

    /// `int f omega` (for a density this integrates the associated two-form;
    /// the quadrature is identical).
    pub fn integrate(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        let h = self.spacing();
        Ok(f.values.iter().sum::<f64>() * AREA_FORM_DENSITY * h * h)
    }

    /// omega-mean of a field, `int f omega / int omega`.
    pub fn mean(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        Ok(f.values.iter().sum::<f64>() / self.len() as f64)
    }

    fn fft2(&self, data: &mut [Complex<f64>]) {
        self.fwd.process(data);
        transpose(data, self.n);
        self.fwd.process(data);
        transpose(data, self.n);
    }

    fn ifft2(&self, data: &mut [Complex<f64>]) {
        self.inv.process(data);
        transpose(data, self.n);
        self.inv.process(data);
        transpose(data, self.n);
        let scale = 1.0 / (self.len() as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn to_spectral(&self, f: &ScalarField) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = f.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft2(&mut buf);
        buf
    }

    fn spectral_inverse(&self, mut buf: Vec<Complex<f64>>, kind: FieldKind) -> ScalarField {
        self.ifft2(&mut buf);
        ScalarField {
            n: self.n,
            kind,
            values: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Signed integer mode for FFT bin `i`.
    fn mode(&self, i: usize) -> f64 {
        if i <= self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    /// Periodic spectral Laplacian `d^2/dx^2 + d^2/dy^2`.
    pub fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_kind(f, FieldKind::Function)?;
        let mut buf = self.to_spectral(f);
        for j in 0..self.n {
            let l = self.mode(j);
            for i in 0..self.n {
                let m = self.mode(i);
                buf[j * self.n + i] *= -4.0 * PI * PI * (m * m + l * l);
            }
        }
        Ok(self.spectral_inverse(buf, FieldKind::Function))
    }

    /// Density of `i ddbar f` relative to omega: `lap f / (4 pi)`.
    pub fn ddbar_density(&self, f: &ScalarField) -> Result<ScalarField> {
        let mut out = self.laplacian(f)?;
        for v in out.values.iter_mut() {
            *v /= 4.0 * PI;
        }
        out.kind = FieldKind::TwoFormDensity;
        Ok(out)
    }

    /// First derivatives `(df/dx, df/dy)`. The Nyquist mode is dropped, as
    /// usual for odd-order spectral derivatives of real data.
    pub fn gradient(&self, f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
        self.check_kind(f, FieldKind::Function)?;
        let base = self.to_spectral(f);
        let mut bx = base.clone();
        let mut by = base;
        let nyq = self.n / 2;
        for j in 0..self.n {
            let l = if j == nyq { 0.0 } else { self.mode(j) };
            for i in 0..self.n {
                let m = if i == nyq { 0.0 } else { self.mode(i) };
                let idx = j * self.n + i;
                bx[idx] *= Complex::new(0.0, 2.0 * PI * m);
                by[idx] *= Complex::new(0.0, 2.0 * PI * l);
            }
        }
        Ok((
            self.spectral_inverse(bx, FieldKind::Function),
            self.spectral_inverse(by, FieldKind::Function),
        ))
    }

    /// Solve `i ddbar u = (f - mean f) omega` for the mean-zero potential u,
    /// i.e. `lap u = 4 pi (f - mean f)`. Input must be a two-form density.
    pub fn green_solve(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_kind(f, FieldKind::TwoFormDensity)?;
        let mut buf = self.to_spectral(&ScalarField {
            n: f.n,
            kind: FieldKind::Function,
            values: f.values.clone(),
        });
        for j in 0..self.n {
            let l = self.mode(j);
            for i in 0..self.n {
                let m = self.mode(i);
                let k2 = m * m + l * l;
                let idx = j * self.n + i;
                if k2 == 0.0 {
                    buf[idx] = Complex::new(0.0, 0.0);
                } else {
                    buf[idx] /= -PI * k2;
                }
            }
        }
        Ok(self.spectral_inverse(buf, FieldKind::Function))
    }

    /// Apply a real Fourier multiplier `w(flat_mode_index, (m, l))`.
    /// Used by solver preconditioners; keeps the input's kind untouched.
    pub(crate) fn spectral_filter(
        &self,
        f: &ScalarField,
        weight: impl Fn(usize, (f64, f64)) -> f64,
    ) -> Result<ScalarField> {
        self.check(f)?;
        let mut buf: Vec<Complex<f64>> = f.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft2(&mut buf);
        for j in 0..self.n {
            let l = self.mode(j);
            for i in 0..self.n {
                let idx = j * self.n + i;
                buf[idx] *= weight(idx, (self.mode(i), l));
            }
        }
        Ok(self.spectral_inverse(buf, f.kind))
    }

    /// Max-norm defect of the discrete Green representation
    /// `f = mean f + G(i ddbar f)`; small values certify Eq.-(7)-style
    /// reconstruction on this grid.
    pub fn green_representation_check(&self, f: &ScalarField) -> Result<f64> {
        self.check_kind(f, FieldKind::Function)?;
        let mean = self.mean(f)?;
        let rec = self.green_solve(&self.ddbar_density(f)?)?;
        Ok(f.values
            .iter()
            .zip(rec.values.iter())
            .map(|(&a, &b)| (a - (mean + b)).abs())
            .fold(0.0, f64::max))
    }
}

fn transpose(data: &mut [Complex<f64>], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

/// Real scalar data on a [`SurfaceGrid`], tagged with its interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    kind: FieldKind,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: &SurfaceGrid, kind: FieldKind, value: f64) -> Self {
        ScalarField {
            n: grid.n(),
            kind,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: &SurfaceGrid, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.coords(idx);
                f(x, y)
            })
            .collect();
        ScalarField {
            n: grid.n(),
            kind,
            values,
        }
    }

    pub fn from_values(grid: &SurfaceGrid, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(VortexError::Config(format!(
                "field length {} does not match grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            n: grid.n(),
            kind,
            values,
        })
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn grid_n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Reinterpret the same samples under a different tag.
    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            n: self.n,
            kind: self.kind,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination; fields must live on the same grid.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.n != other.n {
            return Err(VortexError::GridMismatch(self.n, other.n));
        }
        Ok(ScalarField {
            n: self.n,
            kind: self.kind,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn linf_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.n != other.n {
            return Err(VortexError::GridMismatch(self.n, other.n));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Serialize as `x,y,value` CSV, row-major, 17 significant digits.
    pub fn to_csv(&self, grid: &SurfaceGrid) -> Result<String> {
        grid.check(self)?;
        let mut out = String::with_capacity(self.values.len() * 32);
        out.push_str("x,y,value\n");
        for (idx, v) in self.values.iter().enumerate() {
            let (x, y) = grid.coords(idx);
            out.push_str(&format!("{x:.16e},{y:.16e},{v:.16e}\n"));
        }
        Ok(out)
    }

    /// Parse the CSV format written by [`ScalarField::to_csv`].
    pub fn from_csv(grid: &SurfaceGrid, kind: FieldKind, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                if line.trim() != "x,y,value" {
                    return Err(VortexError::Config(format!("bad CSV header: {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .rsplit(',')
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| VortexError::Config(format!("bad CSV row {lineno}: {line:?}")))?;
            values.push(v);
        }
        ScalarField::from_values(grid, kind, values)
    }
}
