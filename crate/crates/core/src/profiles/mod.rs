//! Monotone traveling-wave profiles.
//!
//! Two families are supported, both in normalized form (`φ₋ = 1`, `φ₊ = 0`,
//! speed `0`):
//!
//! * viscous: `u_t − u_xx + f(u)_x = 0`, profile ODE `φ′ = f(φ)`;
//! * KdV–Burgers: `u_t − αu_xx + u_xxx + g(u)_x = 0`, profile ODE
//!   `φ″ = αφ′ − g(φ)`, whose decreasing solution is the stable manifold of the
//!   saddle at `φ = 0`.
//!
//! Profiles are integrated once on a fine mesh with classical RK4 and kept as a
//! [`ProfileTable`], so they can be resampled (and shifted) onto any grid.

mod construct;
mod flux;
mod table;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid1D, GridError, GridFunction};

pub use construct::{
    burgers_residual, construct_burgers_profile, construct_burgers_profile_with, construct_kdvb_profile,
    construct_kdvb_profile_with, fkpp_residual, kdvb_residual, ProfileOptions,
};
pub use flux::{fkpp_reduction, normalize_problem, FluxEval, FluxSpec, NormalizationRecord};
pub use table::{ProfileTable, Tail};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid flux: {0}")]
    InvalidFlux(String),
    #[error("degenerate end states φ₋ = {phi_minus}, φ₊ = {phi_plus}")]
    DegenerateEndStates { phi_minus: f64, phi_plus: f64 },
    #[error("flux is not normalized: f(0) = {f0:e}, f(1) = {f1:e}")]
    NotNormalized { f0: f64, f1: f64 },
    #[error("no monotone profile: {reason}")]
    NoMonotoneProfile { reason: String, at: Option<f64> },
    #[error("no monotone profile: α = {alpha} is below the threshold 2√g′(1) = {threshold}")]
    BelowThreshold { alpha: f64, threshold: f64 },
    #[error("profile is not monotone: φ′ = {slope:e} at x = {x}")]
    MonotonicityViolation { x: f64, slope: f64 },
    #[error("numerical blow-up: φ = {value} left [0, 1] at x = {x}")]
    NumericalBlowup { x: f64, value: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    Viscous,
    Kdvb,
}

/// Integration diagnostics kept with each profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    pub ode_step: f64,
    /// Richardson estimate `max |φ_h − φ_{h/2}| / 15`.
    pub richardson_error: f64,
    /// Sup of the profile-equation residual on the table (5-point stencils).
    pub residual: f64,
    /// Convexity of the flux on the checked neighbourhood (KdV–Burgers only).
    pub convex_on_checked_range: Option<bool>,
    pub convexity_range: Option<[f64; 2]>,
}

/// Normalized monotone profile sampled on a grid, together with the table it
/// was sampled from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveProfile {
    pub phi: GridFunction,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub speed: f64,
    pub flux: FluxSpec,
    pub family: ProfileFamily,
    pub alpha: Option<f64>,
    pub diagnostics: ProfileDiagnostics,
    #[serde(skip)]
    table: Option<Arc<ProfileTable>>,
}

impl WaveProfile {
    pub(crate) fn new(
        grid: &Grid1D,
        table: ProfileTable,
        flux: FluxSpec,
        family: ProfileFamily,
        alpha: Option<f64>,
        diagnostics: ProfileDiagnostics,
    ) -> Self {
        let table = Arc::new(table);
        let phi = GridFunction::from_trusted(*grid, grid.points().map(|x| table.value(x)).collect());
        Self {
            phi,
            phi_minus: 1.0,
            phi_plus: 0.0,
            speed: 0.0,
            flux,
            family,
            alpha,
            diagnostics,
            table: Some(table),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        self.phi.grid()
    }

    pub fn table(&self) -> Option<&ProfileTable> {
        self.table.as_deref()
    }

    /// `φ(x)`, from the table when available, otherwise from the sampled values.
    pub fn value_at(&self, x: f64) -> f64 {
        match &self.table {
            Some(t) => t.value(x),
            None => {
                let g = self.phi.grid();
                if x <= g.xmin() {
                    self.phi.values()[0]
                } else if x >= g.xmax() {
                    *self.phi.values().last().unwrap()
                } else {
                    cubic_lagrange(&self.phi, x)
                }
            }
        }
    }

    /// `φ′(x)` from the table (zero outside the sampled range without one).
    pub fn slope_at(&self, x: f64) -> f64 {
        match &self.table {
            Some(t) => t.eval(x).1,
            None => 0.0,
        }
    }

    /// `φ` on another grid.
    pub fn sample(&self, grid: &Grid1D) -> GridFunction {
        if grid == self.phi.grid() {
            return self.phi.clone();
        }
        self.shifted(0.0, grid)
    }

    /// Translate `φ(· − h)` sampled on `grid`.
    pub fn shifted(&self, h: f64, grid: &Grid1D) -> GridFunction {
        GridFunction::from_trusted(*grid, grid.points().map(|x| self.value_at(x - h)).collect())
    }

    /// `φ′` sampled on `grid`.
    pub fn slope(&self, grid: &Grid1D) -> GridFunction {
        GridFunction::from_trusted(*grid, grid.points().map(|x| self.slope_at(x)).collect())
    }

    /// Profile of the original (un-normalized) problem, `shift + scale·φ`.
    pub fn denormalized(&self, record: &NormalizationRecord) -> GridFunction {
        GridFunction::from_trusted(
            *self.phi.grid(),
            self.phi.values().iter().map(|&v| record.to_original(v)).collect(),
        )
    }

    /// JSON sidecar: end states, speed, α, flux and normalization record.
    pub fn sidecar(&self, record: &NormalizationRecord) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "phi_minus": self.phi_minus,
            "phi_plus": self.phi_plus,
            "speed": self.speed,
            "alpha": self.alpha,
            "flux": self.flux,
            "flux_coefficients": self.flux.coeffs(),
            "normalization": record,
            "diagnostics": self.diagnostics,
            "grid": self.phi.grid(),
        })
    }
}

fn cubic_lagrange(f: &GridFunction, x: f64) -> f64 {
    let g = f.grid();
    let v = f.values();
    let s = (x - g.xmin()) / g.dx();
    let i = (s.floor() as isize).clamp(1, v.len() as isize - 3) as usize;
    let t = s - i as f64;
    let (a, b, c, d) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
    -t * (t - 1.0) * (t - 2.0) / 6.0 * a + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * b
        - (t + 1.0) * t * (t - 2.0) / 2.0 * c
        + (t + 1.0) * t * (t - 1.0) / 6.0 * d
}
