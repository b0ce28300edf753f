use serde::{Deserialize, Serialize};

use crate::direction::{InnerConfig, DEFAULT_C_CURV};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// BFGS models per scalarized component.
    #[serde(rename = "qnm")]
    QuasiNewton,
    /// Identity models, no updates.
    #[serde(rename = "sd")]
    SteepestDescent,
}

impl Method {
    pub fn short_name(self) -> &'static str {
        match self {
            Method::QuasiNewton => "qnm",
            Method::SteepestDescent => "sd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qnm" | "quasi_newton" | "quasi-newton" => Ok(Method::QuasiNewton),
            "sd" | "steepest_descent" | "steepest-descent" => Ok(Method::SteepestDescent),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected qnm or sd)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Armijo slope fraction.
    pub beta: f64,
    /// Backtracking ratio.
    pub nu: f64,
    /// Stop when `|u_k| < eps_stop`.
    pub eps_stop: f64,
    pub max_iter: usize,
    pub max_backtracks: u32,
    /// Inner duality-gap target.
    pub tol_sub: f64,
    pub inner_max_iter: usize,
    /// Stationarity threshold used by reports.
    pub tol_stat: f64,
    /// Minimal values closer than this (sup norm) form one class.
    pub tol_group: f64,
    /// Slack in the dominance test of the minimal-element filter.
    pub tol_order: f64,
    /// Slack in the cone Armijo test.
    pub tol_armijo: f64,
    pub c_curv: f64,
    pub method: Method,
    pub seed: u64,
    /// Store `F(x_k)` every iteration even when `p * m > 512`.
    pub force_images: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            nu: 0.6,
            eps_stop: 1e-3,
            max_iter: 100,
            max_backtracks: 60,
            tol_sub: 1e-10,
            inner_max_iter: 500,
            tol_stat: 1e-3,
            tol_group: 1e-8,
            tol_order: 0.0,
            tol_armijo: 1e-12,
            c_curv: DEFAULT_C_CURV,
            method: Method::QuasiNewton,
            seed: 0,
            force_images: false,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must lie in the open interval (0,1), got {v}"
                )))
            }
        };
        open_unit("beta", self.beta)?;
        open_unit("nu", self.nu)?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("eps_stop", self.eps_stop)?;
        positive("tol_sub", self.tol_sub)?;
        positive("tol_stat", self.tol_stat)?;
        positive("c_curv", self.c_curv)?;
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )))
            }
        };
        nonneg("tol_group", self.tol_group)?;
        nonneg("tol_order", self.tol_order)?;
        nonneg("tol_armijo", self.tol_armijo)?;
        if self.inner_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "inner_max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn inner(&self) -> InnerConfig {
        InnerConfig {
            tol: self.tol_sub,
            max_iter: self.inner_max_iter,
        }
    }
}
