//! Stationary isotropic covariance kernels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::error::{invalid, Error, Result};

/// A stationary covariance kernel `k(x) = E[f(0) f(x)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StationaryKernel {
    /// Random plane wave, `k(x) = J0(|x|)`.
    Rpw,
    /// Squared-exponential kernel `exp(-|x|^2 / (2 scale^2))`.
    Gaussian { scale: f64 },
    /// Radial profile given by a table, linearly interpolated and zero past the
    /// last radius. Only usable with the exact sampler.
    ExplicitMatrixFree { radii: Vec<f64>, values: Vec<f64> },
}

impl StationaryKernel {
    pub fn gaussian(scale: f64) -> Self {
        Self::Gaussian { scale }
    }

    /// A kernel with unit variance and no correlation between distinct grid
    /// points at spacing at least `min_spacing`.
    pub fn white(min_spacing: f64) -> Self {
        Self::ExplicitMatrixFree {
            radii: vec![0.0, 0.5 * min_spacing],
            values: vec![1.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rpw => Ok(()),
            Self::Gaussian { scale } => {
                if *scale > 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("gaussian kernel scale must be positive"))
                }
            }
            Self::ExplicitMatrixFree { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(invalid("explicit kernel needs matching non-empty radii/values"));
                }
                if radii[0] != 0.0 {
                    return Err(invalid("explicit kernel table must start at radius 0"));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("explicit kernel radii must be strictly increasing"));
                }
                if values.iter().chain(radii).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("explicit kernel table".into()));
                }
                Ok(())
            }
        }
    }

    /// Covariance as a function of distance.
    pub fn radial(&self, r: f64) -> f64 {
        let r = r.abs();
        match self {
            Self::Rpw => j0(r),
            Self::Gaussian { scale } => (-(r * r) / (2.0 * scale * scale)).exp(),
            Self::ExplicitMatrixFree { radii, values } => {
                let last = radii.len() - 1;
                if r > radii[last] {
                    return 0.0;
                }
                let i = radii.partition_point(|&x| x <= r).saturating_sub(1);
                if i == last {
                    return values[last];
                }
                let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// Evaluates `k(x)` at a displacement.
    pub fn eval(&self, x: (f64, f64)) -> Result<f64> {
        if !(x.0.is_finite() && x.1.is_finite()) {
            return Err(Error::NonFinite(format!("kernel argument {x:?}")));
        }
        Ok(self.radial(x.0.hypot(x.1)))
    }

    /// Scan of `sup |k(x)|` over the annulus `r <= |x| <= search_radius` at
    /// radial resolution `step`. All kernels here are radial, so the scan is
    /// over radii only. The result is a lower bound on the true supremum.
    pub fn kappa_bar(&self, r: f64, search_radius: f64, step: f64) -> Result<f64> {
        if !(step > 0.0) {
            return Err(invalid("kappa_bar step must be positive"));
        }
        if !(r > 0.0 && r <= search_radius) {
            return Err(invalid("kappa_bar needs 0 < r <= search_radius"));
        }
        let n = ((search_radius - r) / step).floor() as usize;
        let mut best = self.radial(search_radius).abs();
        for i in 0..=n {
            best = best.max(self.radial(r + i as f64 * step).abs());
        }
        Ok(best)
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for StationaryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rpw => write!(f, "rpw"),
            Self::Gaussian { scale } => write!(f, "gaussian(scale={scale})"),
            Self::ExplicitMatrixFree { radii, .. } => write!(f, "explicit({} knots)", radii.len()),
        }
    }
}
