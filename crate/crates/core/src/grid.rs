//! Uniform 1-D grids, sampled functions, weighted Lp norms and quadrature.
//!
//! Everything in the crate is carried by [`GridFunction`]: profiles, perturbations,
//! coefficients and their antiderivatives. Norms use the trapezoid rule on the
//! truncated domain; exponential weights are evaluated in log space so that
//! `e^{ρ|x|}` never has to be formed explicitly.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::WaveProfile;

/// Relative size of `|f(xmin)|` (against `max |f|`) above which the
/// antiderivative warns that the left tail was truncated.
pub const LEFT_TAIL_WARN: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value {value} at grid index {index} (x = {x})")]
    NonFinite { index: usize, x: f64, value: f64 },
    #[error("weighted norm overflows at grid index {index} (x = {x})")]
    Overflow { index: usize, x: f64 },
    #[error("degenerate profile: end states coincide ({0})")]
    DegenerateProfile(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Uniform grid `x_i = xmin + i·dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    xmin: f64,
    xmax: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self, GridError> {
        if !(xmin.is_finite() && xmax.is_finite()) || xmin >= xmax {
            return Err(GridError::InvalidGrid(format!(
                "need finite xmin < xmax, got [{xmin}, {xmax}]"
            )));
        }
        if n < 3 {
            return Err(GridError::InvalidGrid(format!("need n >= 3, got {n}")));
        }
        Ok(Self { xmin, xmax, n })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self, GridError> {
        Self::new(-half_width, half_width, n)
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.n - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.xmax
        } else {
            self.xmin + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    pub fn half_width(&self) -> f64 {
        self.xmin.abs().max(self.xmax.abs())
    }
}

/// Real-valued function sampled on a [`Grid1D`]. All values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite {
                index,
                x: grid.x(index),
                value: values[index],
            });
        }
        Ok(Self { grid, values })
    }

    /// Build from values that are known to be finite (internal solver output).
    pub(crate) fn from_trusted(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_trusted(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch(
                "operands live on different grids".into(),
            ));
        }
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate_linear(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g.xmin || x > g.xmax {
            return 0.0;
        }
        let s = (x - g.xmin) / g.dx();
        let i = (s.floor() as usize).min(g.len() - 2);
        let t = s - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Centered second-order first derivative, one-sided second order at the ends.
    pub fn derivative(&self) -> Self {
        let v = &self.values;
        let n = v.len();
        let h = self.grid.dx();
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        Self::from_trusted(self.grid, d)
    }

    /// Write the two-column `x,value` CSV. Values use 17 significant digits so
    /// that reading back reproduces every double bit for bit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), GridError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])
            .map_err(|e| GridError::Csv(e.to_string()))?;
        for (x, v) in self.grid.points().zip(&self.values) {
            w.write_record([format!("{x:.16e}"), format!("{v:.16e}")])
                .map_err(|e| GridError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| GridError::Csv(e.to_string()))
    }

    /// Read a CSV produced by [`GridFunction::write_csv`]. The grid is rebuilt
    /// from the first and last abscissa and checked for uniform spacing.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, GridError> {
        let mut r = csv::Reader::from_reader(input);
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| GridError::Csv(e.to_string()))?;
            if rec.len() != 2 {
                return Err(GridError::Csv(format!("expected 2 columns, got {}", rec.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| GridError::Csv(format!("bad number {s:?}: {e}")))
            };
            xs.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        if xs.len() < 3 {
            return Err(GridError::Csv("need at least 3 rows".into()));
        }
        let grid = Grid1D::new(xs[0], xs[xs.len() - 1], xs.len())?;
        let tol = 1e-9 * grid.dx().max(grid.half_width() * f64::EPSILON);
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > tol.max(1e-12 * (1.0 + x.abs())) {
                return Err(GridError::Csv(format!("non-uniform abscissa at row {i}")));
            }
        }
        Self::new(grid, vs)
    }
}

/// Lp exponent. Only the exponents used by the decay theorems are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    One,
    Two,
    Four,
    Inf,
}

impl Exponent {
    pub const ALL: [Exponent; 4] = [Exponent::One, Exponent::Two, Exponent::Four, Exponent::Inf];

    /// Finite exponent as a real number, `None` for `∞`.
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::One => Some(1.0),
            Exponent::Two => Some(2.0),
            Exponent::Four => Some(4.0),
            Exponent::Inf => None,
        }
    }

    /// `1/p` (zero for `∞`).
    pub fn reciprocal(self) -> f64 {
        self.finite().map_or(0.0, |p| 1.0 / p)
    }

    pub fn from_f64(p: f64) -> Option<Self> {
        if p == 1.0 {
            Some(Exponent::One)
        } else if p == 2.0 {
            Some(Exponent::Two)
        } else if p == 4.0 {
            Some(Exponent::Four)
        } else if p.is_infinite() && p > 0.0 {
            Some(Exponent::Inf)
        } else {
            None
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.finite() {
            Some(p) => write!(f, "{p}"),
            None => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.finite() {
            Some(p) => s.serialize_u8(p as u8),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Str(String),
        }
        let bad = |what: String| {
            serde::de::Error::custom(format!("exponent must be one of 1, 2, 4, \"inf\"; got {what}"))
        };
        match Raw::deserialize(d)? {
            Raw::Int(i) => Exponent::from_f64(i as f64).ok_or_else(|| bad(i.to_string())),
            Raw::Float(x) => Exponent::from_f64(x).ok_or_else(|| bad(x.to_string())),
            Raw::Str(s) => match s.as_str() {
                "inf" | "infinity" | "∞" => Ok(Exponent::Inf),
                other => other
                    .parse::<f64>()
                    .ok()
                    .and_then(Exponent::from_f64)
                    .ok_or_else(|| bad(other.to_string())),
            },
        }
    }
}

/// Weight family for the norms `‖·‖_p`, `‖·‖_{p,k}` and `‖·‖_{p,ρ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    None,
    /// `(1+|x|)^k`
    Polynomial { k: f64 },
    /// `e^{ρ|x|}`
    Exponential { rho: f64 },
}

impl WeightSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        match *self {
            WeightSpec::None => Ok(()),
            WeightSpec::Polynomial { k } if k >= 0.0 && k.is_finite() => Ok(()),
            WeightSpec::Exponential { rho } if rho > 0.0 && rho.is_finite() => Ok(()),
            other => Err(GridError::InvalidInput(format!("invalid weight {other:?}"))),
        }
    }

    /// Logarithm of the weight at `x`.
    #[inline]
    pub fn log_weight(&self, x: f64) -> f64 {
        match *self {
            WeightSpec::None => 0.0,
            WeightSpec::Polynomial { k } => k * x.abs().ln_1p(),
            WeightSpec::Exponential { rho } => rho * x.abs(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            WeightSpec::None => "none".into(),
            WeightSpec::Polynomial { k } => format!("poly_{k}"),
            WeightSpec::Exponential { rho } => format!("exp_{rho}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub p: Exponent,
    pub weight: WeightSpec,
    pub value: f64,
}

/// Trapezoid weights: `dx` in the interior, `dx/2` at both ends.
#[inline]
fn trapezoid_factor(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Weighted Lp norm. Finite `p` use trapezoid quadrature of `(|f|·weight)^p`;
/// `p = ∞` takes the grid maximum of `|f|·weight`.
pub fn weighted_norm(f: &GridFunction, p: Exponent, weight: WeightSpec) -> Result<NormValue, GridError> {
    weight.validate()?;
    let grid = f.grid();
    let n = grid.len();
    // log(|f| · weight) per point, -inf where f vanishes.
    let mut lmax = f64::NEG_INFINITY;
    let mut imax = 0;
    let logs: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if !v.is_finite() {
                return f64::NAN;
            }
            let l = if v == 0.0 {
                f64::NEG_INFINITY
            } else {
                v.abs().ln() + weight.log_weight(grid.x(i))
            };
            if l > lmax {
                lmax = l;
                imax = i;
            }
            l
        })
        .collect();
    if let Some(index) = logs.iter().position(|l| l.is_nan()) {
        return Err(GridError::NonFinite {
            index,
            x: grid.x(index),
            value: f.values()[index],
        });
    }
    let overflow = || GridError::Overflow {
        index: imax,
        x: grid.x(imax),
    };
    if lmax == f64::NEG_INFINITY {
        return Ok(NormValue { p, weight, value: 0.0 });
    }
    let value = match p.finite() {
        None => lmax.exp(),
        Some(pf) => {
            let s: f64 = logs
                .iter()
                .enumerate()
                .map(|(i, &l)| trapezoid_factor(i, n) * (pf * (l - lmax)).exp())
                .sum::<f64>()
                * grid.dx();
            (lmax + s.ln() / pf).exp()
        }
    };
    if !value.is_finite() {
        return Err(overflow());
    }
    Ok(NormValue { p, weight, value })
}

/// Unweighted norm shorthand.
pub fn norm(f: &GridFunction, p: Exponent) -> f64 {
    weighted_norm(f, p, WeightSpec::None)
        .map(|n| n.value)
        .unwrap_or(f64::NAN)
}

/// Trapezoid integral over the whole grid.
pub fn integrate(f: &GridFunction) -> f64 {
    let n = f.values().len();
    f.values()
        .iter()
        .enumerate()
        .map(|(i, v)| trapezoid_factor(i, n) * v)
        .sum::<f64>()
        * f.grid().dx()
}

/// Antiderivative `Ψ(x) = ∫_{xmin}^x f`, `Ψ(xmin) = 0`.
///
/// Cumulative trapezoid sum with the leading Euler–Maclaurin end correction
/// `-dx²/12 (f'(x) - f'(xmin))`, which makes the result fourth-order accurate
/// for smooth `f`.
pub fn antiderivative(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let v = f.values();
    let dx = grid.dx();
    let peak = f.max_abs();
    if peak > 0.0 && v[0].abs() > LEFT_TAIL_WARN * peak {
        log::warn!(
            "antiderivative: |f(xmin)| = {:.3e} is not small (max |f| = {:.3e}); left tail truncated",
            v[0].abs(),
            peak
        );
    }
    let df = f.derivative();
    let df = df.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..v.len() {
        acc += 0.5 * dx * (v[i - 1] + v[i]);
        out.push(acc - dx * dx / 12.0 * (df[i] - df[0]));
    }
    GridFunction::from_trusted(grid, out)
}

/// Asymptotic shift `h = ∫(u0 − φ) dx / (φ₋ − φ₊)` fixed by mass conservation.
pub fn compute_shift(u0: &GridFunction, profile: &WaveProfile) -> Result<f64, GridError> {
    let jump = profile.phi_minus - profile.phi_plus;
    if jump == 0.0 || !jump.is_finite() {
        return Err(GridError::DegenerateProfile(profile.phi_minus));
    }
    let phi = profile.sample(u0.grid());
    Ok(integrate(&u0.sub(&phi)?) / jump)
}
