//! The Z_2^N Dunkl heat kernel in closed form, with exact first and second
//! Dunkl derivatives in the first argument.
//!
//! The kernel factorizes over coordinates; the rank-one factor is
//! `h_t(x, y) = c_k^{-1} (2t)^{-(k+1/2)} e^{-(x^2+y^2)/(4t)} e_k(xy/(2t))`
//! with `e_k` the Bessel combination from [`crate::bessel`] and
//! `c_k = 2^{2k+1/2} Gamma(k+1/2)`. The normalization and the derivative
//! identity are re-validated numerically when a context is built, so a wrong
//! constant cannot propagate silently.

use statrs::function::gamma::gamma;

use crate::bessel::scaled_dunkl_factor;
use crate::error::{LabError, Result};
use crate::quadrature::integrate_composite;
use crate::reflection_geometry::RootSystemSpec;

/// Kernel-module dimension cap (quadrature stays desk-scale).
pub const MAX_KERNEL_DIM: usize = 4;

#[derive(Clone, Debug)]
pub struct HeatContext {
    /// Per-coordinate multiplicity (Z_2^N).
    pub kappa: Vec<f64>,
    /// Per-coordinate normalization `c_k`.
    norm: Vec<f64>,
}

impl HeatContext {
    /// Build a context for a Z_2^N root system and validate the
    /// normalization and the first-derivative identity before returning it.
    pub fn new(spec: &RootSystemSpec) -> Result<Self> {
        let kappa = z2n_multiplicities(spec)?;
        if kappa.len() > MAX_KERNEL_DIM {
            return Err(LabError::Domain(format!(
                "kernel modules support N <= {MAX_KERNEL_DIM}, got {}",
                kappa.len()
            )));
        }
        let norm = kappa
            .iter()
            .map(|&k| 2f64.powf(2.0 * k + 0.5) * gamma(k + 0.5))
            .collect();
        let ctx = HeatContext { kappa, norm };
        ctx.validate()?;
        Ok(ctx)
    }

    fn validate(&self) -> Result<()> {
        let mut seen: Vec<f64> = Vec::new();
        for (idx, &k) in self.kappa.iter().enumerate() {
            if seen.iter().any(|&s| (s - k).abs() < 1e-15) {
                continue;
            }
            seen.push(k);
            for &(t, x) in &[(0.1, 0.0), (0.25, 0.7), (1.0, 3.0), (10.0, 0.3)] {
                let mass = self.factor_mass(idx, t, x);
                let err = (mass - 1.0).abs();
                if err > 1e-6 {
                    return Err(LabError::QuadratureFailure { indicator: err, tol: 1e-6 });
                }
            }
            // Derivative identity T_x h = (y - x)/(2t) h, checked against a
            // finite-difference Dunkl derivative of the closed form.
            let (t, x, y) = (0.5, 0.8, 1.3);
            let exact = (y - x) / (2.0 * t) * self.factor(idx, t, x, y);
            let h = 1e-6;
            let diff = (self.factor(idx, t, x + h, y) - self.factor(idx, t, x - h, y))
                / (2.0 * h)
                + k * (self.factor(idx, t, x, y) - self.factor(idx, t, -x, y)) / x;
            let err = (exact - diff).abs() / exact.abs().max(1e-300);
            if err > 1e-5 {
                return Err(LabError::QuadratureFailure { indicator: err, tol: 1e-5 });
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.kappa.len()
    }

    /// Rank-one factor for coordinate `idx`.
    pub fn factor(&self, idx: usize, t: f64, x: f64, y: f64) -> f64 {
        let k = self.kappa[idx];
        if k == 0.0 {
            return (-(x - y) * (x - y) / (4.0 * t)).exp()
                / (4.0 * std::f64::consts::PI * t).sqrt();
        }
        let u = x * y / (2.0 * t);
        // x^2 + y^2 - 2|xy| = (|x| - |y|)^2, so the scaled Bessel factor pairs
        // with a bounded Gaussian.
        let g = (x.abs() - y.abs()).powi(2) / (4.0 * t);
        (2.0 * t).powf(-(k + 0.5)) / self.norm[idx] * (-g).exp() * scaled_dunkl_factor(k, u)
    }

    /// `int factor(idx, t, x, .) w dy` with `w(y) = 2^k |y|^{2k}`; used by the
    /// construction-time validation and the semigroup tests.
    pub fn factor_mass(&self, idx: usize, t: f64, x: f64) -> f64 {
        let k = self.kappa[idx];
        let l = x.abs() + 14.0 * t.sqrt();
        let w = |y: f64| 2f64.powf(k) * y.abs().powf(2.0 * k);
        let panels = ((l / (0.5 * t.sqrt())).ceil() as usize).clamp(16, 400);
        let half = |a: f64, b: f64| {
            integrate_composite(|y| self.factor(idx, t, x, y) * w(y), a, b, panels, 12)
        };
        half(-l, 0.0) + half(0.0, l)
    }

    /// `h_t(x, y)`.
    pub fn heat_eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if t <= 0.0 {
            return Err(LabError::Domain(format!("heat kernel needs t > 0, got {t}")));
        }
        Ok((0..self.dimension())
            .map(|i| self.factor(i, t, x[i], y[i]))
            .product())
    }

    /// `T_{j,x} h_t(x, y) = (y_j - x_j)/(2t) h_t(x, y)` (exact identity).
    pub fn heat_tj(&self, t: f64, x: &[f64], y: &[f64], j: usize) -> Result<f64> {
        Ok((y[j] - x[j]) / (2.0 * t) * self.heat_eval(t, x, y)?)
    }

    /// `A_t^{ij}(x, y) = T_{i,x} T_{j,x} h_t(x, y)`, assembled from the
    /// structure formula: polynomial part, diagonal `-1/(2t)` part, and for
    /// `i = j` the reflected term `-(kappa_j/t) h_t(sigma_j x, y)`.
    pub fn heat_aij(&self, t: f64, x: &[f64], y: &[f64], i: usize, j: usize) -> Result<f64> {
        let h = self.heat_eval(t, x, y)?;
        let poly = (y[i] - x[i]) * (y[j] - x[j]) / (4.0 * t * t);
        if i != j {
            return Ok(poly * h);
        }
        let mut xr = x.to_vec();
        xr[j] = -xr[j];
        let reflected = if self.kappa[j] == 0.0 {
            0.0
        } else {
            self.kappa[j] / t * self.heat_eval(t, &xr, y)?
        };
        Ok((poly - 1.0 / (2.0 * t)) * h - reflected)
    }
}

/// Per-coordinate multiplicities of a Z_2^N root system; errors for any other
/// geometry.
pub fn z2n_multiplicities(spec: &RootSystemSpec) -> Result<Vec<f64>> {
    let n = spec.dimension;
    let mut kappa = vec![None; n];
    for (alpha, &k) in spec.roots.iter().zip(&spec.kappa) {
        let mut axis = None;
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() > 1e-12 {
                if axis.is_some() {
                    axis = None;
                    break;
                }
                axis = Some(i);
            }
        }
        let Some(i) = axis else {
            return Err(LabError::Domain(
                "heat kernel requires a Z_2^N (coordinate-axes) root system".into(),
            ));
        };
        match kappa[i] {
            None => kappa[i] = Some(k),
            Some(prev) if (prev - k).abs() < 1e-12 => {}
            Some(_) => {
                return Err(LabError::Domain(
                    "inconsistent multiplicities on a coordinate axis".into(),
                ))
            }
        }
    }
    Ok(kappa.into_iter().map(|k| k.unwrap_or(0.0)).collect())
}
