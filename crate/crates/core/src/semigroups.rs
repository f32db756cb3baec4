//! Linearized operators around a wave:
//!
//! * parabolic `u_t − u_xx + c u_x + d u = 0` (Crank–Nicolson diffusion,
//!   second-order Adams–Bashforth transport/reaction, Dirichlet ends);
//! * KdV–Burgers `u_t + u_xxx − αu_xx + c u_x + d u = 0` (periodic Fourier,
//!   exact constant-coefficient symbol, explicit variable transport).
//!
//! Also the weighted-energy decay certificate `F_ρ` and short-time smoothing
//! tables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{weighted_norm, Exponent, Grid1D, GridError, GridFunction, WeightSpec};
use crate::kfunctional::{KError, Semigroup};
use crate::spectral::{IfRk4, Spectral, C64};
use crate::trajectory::{SnapshotSchedule, Trajectory};

#[derive(Debug, Error)]
pub enum LinearError {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("instability at t = {t}: sup norm grew by {growth:.3e}, above the allowed {allowed:.3e}")]
    Instability { t: f64, growth: f64, allowed: f64 },
    #[error("under-resolved at t = {t}: {fraction:.3e} of the energy sits in the top third of the spectrum")]
    Aliasing { t: f64, fraction: f64 },
    #[error("certificate refused: ρ = {rho} must lie in (0, α/3 = {limit})")]
    CertificateRefused { rho: f64, limit: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    ParabolicA1,
    KdvbB1,
}

/// How the transport term is discretized: `c u_x` or `(c u)_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportForm {
    #[default]
    Advective,
    Conservative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOperatorSpec {
    pub alpha: f64,
    pub c: GridFunction,
    pub d: GridFunction,
    pub family: OperatorFamily,
    #[serde(default)]
    pub transport: TransportForm,
}

impl LinearOperatorSpec {
    pub fn parabolic(c: GridFunction, d: GridFunction) -> Result<Self, LinearError> {
        let op = Self { alpha: 0.0, c, d, family: OperatorFamily::ParabolicA1, transport: TransportForm::Advective };
        op.validate()?;
        Ok(op)
    }

    pub fn kdvb(alpha: f64, c: GridFunction, d: GridFunction) -> Result<Self, LinearError> {
        let op = Self { alpha, c, d, family: OperatorFamily::KdvbB1, transport: TransportForm::Advective };
        op.validate()?;
        Ok(op)
    }

    pub fn with_transport(mut self, form: TransportForm) -> Self {
        self.transport = form;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        self.c.grid()
    }

    pub fn validate(&self) -> Result<(), LinearError> {
        if self.c.grid() != self.d.grid() {
            return Err(LinearError::InvalidOperator("c and d live on different grids".into()));
        }
        match self.family {
            OperatorFamily::ParabolicA1 if self.alpha != 0.0 => {
                Err(LinearError::InvalidOperator("parabolic family requires alpha = 0".into()))
            }
            OperatorFamily::KdvbB1 if !(self.alpha > 0.0 && self.alpha.is_finite()) => {
                Err(LinearError::InvalidOperator(format!("KdV–Burgers family requires alpha > 0, got {}", self.alpha)))
            }
            _ => Ok(()),
        }
    }

    fn meta(&self, scheme: &str, dt: f64) -> serde_json::Value {
        serde_json::json!({
            "operator": {
                "family": self.family,
                "alpha": self.alpha,
                "transport": self.transport,
                "c_range": [min(self.c.values()), max(self.c.values())],
                "d_range": [min(self.d.values()), max(self.d.values())],
            },
            "scheme": scheme,
            "dt": dt,
            "grid": self.grid(),
        })
    }
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Run-time guards and snapshot schedule for the linear evolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOptions {
    pub schedule: SnapshotSchedule,
    /// Abort when `‖u(t)‖_∞ > growth_constant · e^{growth_rate t} ‖u₀‖_∞`.
    pub growth_rate: f64,
    pub growth_constant: f64,
    /// Abort when the top-third spectral energy fraction exceeds this.
    pub aliasing_threshold: f64,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            schedule: SnapshotSchedule::default(),
            growth_rate: 5.0,
            growth_constant: 10.0,
            aliasing_threshold: 1e-6,
        }
    }
}

fn check_growth(u: &[f64], u0_sup: f64, t: f64, opts: &LinearOptions) -> Result<(), LinearError> {
    let sup = u.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
    let allowed = opts.growth_constant * (opts.growth_rate * t).exp();
    if !sup.is_finite() || (u0_sup > 0.0 && sup > allowed * u0_sup) {
        return Err(LinearError::Instability { t, growth: sup / u0_sup, allowed });
    }
    Ok(())
}

/// Crank–Nicolson / AB2 stepper for the parabolic family.
#[derive(Debug, Clone)]
pub struct ParabolicStepper {
    dt: f64,
    dx: f64,
    c: Vec<f64>,
    d: Vec<f64>,
    form: TransportForm,
    u: Vec<f64>,
    prev_explicit: Option<Vec<f64>>,
    steps: usize,
}

impl ParabolicStepper {
    pub fn new(op: &LinearOperatorSpec, u0: &GridFunction, dt: f64) -> Result<Self, LinearError> {
        if op.family != OperatorFamily::ParabolicA1 {
            return Err(LinearError::InvalidOperator("expected the parabolic family".into()));
        }
        if u0.grid() != op.grid() {
            return Err(GridError::GridMismatch("initial data and coefficients".into()).into());
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LinearError::InvalidOperator(format!("dt must be positive, got {dt}")));
        }
        let mut u = u0.values().to_vec();
        let n = u.len();
        u[0] = 0.0;
        u[n - 1] = 0.0;
        Ok(Self {
            dt,
            dx: op.grid().dx(),
            c: op.c.values().to_vec(),
            d: op.d.values().to_vec(),
            form: op.transport,
            u,
            prev_explicit: None,
            steps: 0,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// `−c u_x − d u` (or `−(c u)_x − d u`) by centered differences, zero at the ends.
    fn explicit(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out = vec![0.0; n];
        let h2 = 2.0 * self.dx;
        for i in 1..n - 1 {
            let transport = match self.form {
                TransportForm::Advective => self.c[i] * (u[i + 1] - u[i - 1]) / h2,
                TransportForm::Conservative => (self.c[i + 1] * u[i + 1] - self.c[i - 1] * u[i - 1]) / h2,
            };
            out[i] = -transport - self.d[i] * u[i];
        }
        out
    }

    /// Solve `(I − dt/2 Δ) u_new = (I + dt/2 Δ) u + dt·e` on the interior.
    fn implicit_solve(&self, u: &[f64], e: &[f64]) -> Vec<f64> {
        let n = u.len();
        let r = 0.5 * self.dt / (self.dx * self.dx);
        let m = n - 2;
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            rhs[j] = u[i] + r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) + self.dt * e[i];
        }
        let sol = thomas(-r, 1.0 + 2.0 * r, -r, &rhs);
        let mut out = vec![0.0; n];
        out[1..n - 1].copy_from_slice(&sol);
        out
    }

    pub fn step(&mut self) {
        let e_now = self.explicit(&self.u);
        let e = match &self.prev_explicit {
            Some(prev) => e_now.iter().zip(prev).map(|(a, b)| 1.5 * a - 0.5 * b).collect(),
            None => {
                // Heun start
                let pred = self.implicit_solve(&self.u, &e_now);
                let e_pred = self.explicit(&pred);
                e_now.iter().zip(&e_pred).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>()
            }
        };
        self.u = self.implicit_solve(&self.u, &e);
        self.prev_explicit = Some(e_now);
        self.steps += 1;
    }
}

/// Constant-coefficient tridiagonal solve.
fn thomas(a: f64, b: f64, c: f64, rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = c / b;
    dp[0] = rhs[0] / b;
    for i in 1..m {
        let denom = b - a * cp[i - 1];
        cp[i] = c / denom;
        dp[i] = (rhs[i] - a * dp[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Evolve the parabolic family to `t_end`; the initial state is the first
/// snapshot.
pub fn evolve_parabolic(
    op: &LinearOperatorSpec,
    u0: &GridFunction,
    t_end: f64,
    dt: f64,
    opts: &LinearOptions,
) -> Result<Trajectory, LinearError> {
    op.validate()?;
    let mut st = ParabolicStepper::new(op, u0, dt)?;
    let grid = *u0.grid();
    let mut traj = Trajectory::new(op.meta("crank_nicolson_ab2_dirichlet", dt));
    traj.push(0.0, GridFunction::from_trusted(grid, st.state().to_vec()));
    let u0_sup = u0.max_abs();
    let steps = opts.schedule.steps(dt, t_end);
    let mut next = 0;
    let total = *steps.last().unwrap_or(&0);
    for j in 1..=total {
        st.step();
        if j == steps[next] {
            check_growth(st.state(), u0_sup, st.time(), opts)?;
            traj.push(st.time(), GridFunction::from_trusted(grid, st.state().to_vec()));
            next += 1;
        }
    }
    Ok(traj)
}

/// Integrating-factor RK4 stepper for the KdV–Burgers family.
pub struct KdvbLinearStepper {
    sp: Spectral,
    rk: IfRk4,
    c_tilde: Vec<f64>,
    c_prime: Vec<f64>,
    d: Vec<f64>,
    form: TransportForm,
    uh: Vec<C64>,
    steps: usize,
    scratch: Scratch,
}

#[derive(Debug, Clone)]
struct Scratch {
    u: Vec<f64>,
    ux: Vec<f64>,
    cu: Vec<f64>,
    buf: Vec<C64>,
    buf2: Vec<C64>,
}

impl KdvbLinearStepper {
    pub fn new(op: &LinearOperatorSpec, w0: &GridFunction, dt: f64) -> Result<Self, LinearError> {
        if op.family != OperatorFamily::KdvbB1 {
            return Err(LinearError::InvalidOperator("expected the KdV–Burgers family".into()));
        }
        if w0.grid() != op.grid() {
            return Err(GridError::GridMismatch("initial data and coefficients".into()).into());
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LinearError::InvalidOperator(format!("dt must be positive, got {dt}")));
        }
        let grid = op.grid();
        let sp = Spectral::new(grid);
        let c = op.c.values();
        let c_bar = c.iter().sum::<f64>() / c.len() as f64;
        let alpha = op.alpha;
        let symbol: Vec<C64> = sp
            .xi()
            .iter()
            .map(|&k| Complex64::new(-alpha * k * k, k * k * k - c_bar * k))
            .collect();
        let rk = IfRk4::new(&symbol, dt);
        let n = grid.len();
        let uh = sp.forward(w0.values());
        let zero = C64::new(0.0, 0.0);
        Ok(Self {
            rk,
            c_tilde: c.iter().map(|v| v - c_bar).collect(),
            c_prime: op.c.derivative().into_values(),
            d: op.d.values().to_vec(),
            form: op.transport,
            uh,
            steps: 0,
            scratch: Scratch { u: vec![0.0; n], ux: vec![0.0; n], cu: vec![0.0; n], buf: vec![zero; n], buf2: vec![zero; n] },
            sp,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.rk.dt()
    }

    pub fn state(&self) -> Vec<f64> {
        self.sp.inverse(&self.uh)
    }

    pub fn spectrum(&self) -> &[C64] {
        &self.uh
    }

    pub fn aliasing_fraction(&self) -> f64 {
        self.sp.aliasing_fraction(&self.uh)
    }

    pub fn step(&mut self) {
        let Self { sp, rk, c_tilde, c_prime, d, form, uh, scratch, .. } = self;
        let form = *form;
        rk.step(uh, |state, out| {
            let Scratch { u, ux, cu, buf, buf2 } = scratch;
            buf.copy_from_slice(state);
            sp.inverse_into(buf, u);
            // spectral u_x
            buf.copy_from_slice(state);
            sp.differentiate_hat(buf, 1);
            sp.inverse_into(buf, ux);
            for i in 0..u.len() {
                cu[i] = c_tilde[i] * u[i];
            }
            sp.forward_into(cu, buf2);
            sp.differentiate_hat(buf2, 1);
            match form {
                TransportForm::Advective => {
                    // −½(c̃u)_x − ½c̃u_x + ½c′u − du
                    for i in 0..u.len() {
                        cu[i] = -0.5 * c_tilde[i] * ux[i] + (0.5 * c_prime[i] - d[i]) * u[i];
                    }
                    sp.forward_into(cu, out);
                    for j in 0..out.len() {
                        out[j] -= 0.5 * buf2[j];
                    }
                }
                TransportForm::Conservative => {
                    for i in 0..u.len() {
                        cu[i] = -d[i] * u[i];
                    }
                    sp.forward_into(cu, out);
                    for j in 0..out.len() {
                        out[j] -= buf2[j];
                    }
                }
            }
        });
        self.steps += 1;
    }
}

/// Evolve the KdV–Burgers family on the periodic extension of the grid.
pub fn evolve_kdvb_linear(
    op: &LinearOperatorSpec,
    w0: &GridFunction,
    t_end: f64,
    dt: f64,
    opts: &LinearOptions,
) -> Result<Trajectory, LinearError> {
    op.validate()?;
    let mut st = KdvbLinearStepper::new(op, w0, dt)?;
    let grid = *w0.grid();
    let mut traj = Trajectory::new(op.meta("fourier_integrating_factor_rk4", dt));
    traj.push(0.0, w0.clone());
    let u0_sup = w0.max_abs();
    let steps = opts.schedule.steps(dt, t_end);
    let mut next = 0;
    let total = *steps.last().unwrap_or(&0);
    for j in 1..=total {
        st.step();
        if j == steps[next] {
            let t = st.time();
            let fraction = st.aliasing_fraction();
            if fraction > opts.aliasing_threshold {
                return Err(LinearError::Aliasing { t, fraction });
            }
            let u = st.state();
            check_growth(&u, u0_sup, t, opts)?;
            traj.push(t, GridFunction::from_trusted(grid, u));
            next += 1;
        }
    }
    Ok(traj)
}

/// Semigroup view of a linear operator, for interpolation checks.
pub struct LinearSemigroup {
    pub op: LinearOperatorSpec,
    pub dt: f64,
}

impl Semigroup for LinearSemigroup {
    fn apply(&self, v: &GridFunction, t: f64) -> Result<GridFunction, KError> {
        let to_k = |e: LinearError| KError::InvalidInput(e.to_string());
        if t == 0.0 {
            return Ok(v.clone());
        }
        let steps = (t / self.dt).round().max(1.0) as usize;
        let dt = t / steps as f64;
        match self.op.family {
            OperatorFamily::ParabolicA1 => {
                let mut st = ParabolicStepper::new(&self.op, v, dt).map_err(to_k)?;
                for _ in 0..steps {
                    st.step();
                }
                Ok(GridFunction::from_trusted(*v.grid(), st.state().to_vec()))
            }
            OperatorFamily::KdvbB1 => {
                let mut st = KdvbLinearStepper::new(&self.op, v, dt).map_err(to_k)?;
                for _ in 0..steps {
                    st.step();
                }
                Ok(GridFunction::from_trusted(*v.grid(), st.state()))
            }
        }
    }
}

/// Weighted-energy decay certificate for the KdV–Burgers family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub rho: f64,
    pub gamma: f64,
    pub sup_f_rho: f64,
    pub x0: f64,
    /// Grid point where `F_ρ` attains its sup.
    pub x_sup: f64,
}

impl DecayCertificate {
    pub fn is_valid(&self) -> bool {
        self.gamma > 0.0
    }

    /// Energy weight `cosh ρ(x − x₀)`.
    pub fn weight(&self, x: f64) -> f64 {
        (self.rho * (x - self.x0)).cosh()
    }
}

/// Unique zero of a sampled function that changes sign once, by bisection on
/// its piecewise-linear interpolant.
fn unique_zero(c: &GridFunction) -> Result<f64, LinearError> {
    let v = c.values();
    let grid = c.grid();
    let mut crossings = Vec::new();
    for i in 0..v.len() - 1 {
        if v[i] == 0.0 || v[i] * v[i + 1] < 0.0 {
            crossings.push(i);
        }
    }
    match crossings.len() {
        0 => Err(LinearError::InvalidCoefficient("c has no sign change on the grid".into())),
        1 => {
            let i = crossings[0];
            let (mut a, mut b) = (grid.x(i), grid.x(i + 1));
            let fa = c.interpolate_linear(a);
            if fa == 0.0 {
                return Ok(a);
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = c.interpolate_linear(m);
                if fm == 0.0 || (b - a) < 1e-15 * (1.0 + m.abs()) {
                    return Ok(m);
                }
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            Ok(0.5 * (a + b))
        }
        k => Err(LinearError::InvalidCoefficient(format!("c changes sign {k} times; a unique zero is required"))),
    }
}

/// `F_ρ = αρ² + c′ + (ρc + ρ³) tanh ρ(x − x₀)` on the grid, `γ = −sup F_ρ`.
pub fn decay_certificate(c: &GridFunction, alpha: f64, rho: f64) -> Result<DecayCertificate, LinearError> {
    let limit = alpha / 3.0;
    if !(rho > 0.0 && rho < limit) {
        return Err(LinearError::CertificateRefused { rho, limit });
    }
    let v = c.values();
    let (cl, cr) = (v[0], v[v.len() - 1]);
    if !(cl > 0.0 && cr < 0.0) {
        return Err(LinearError::InvalidCoefficient(format!("need c_L > 0 > c_R, got c_L = {cl}, c_R = {cr}")));
    }
    let cp = c.derivative();
    let scale = cp.max_abs();
    if let Some((i, &s)) = cp.values().iter().enumerate().find(|(_, &s)| s > 1e-12 * scale) {
        return Err(LinearError::InvalidCoefficient(format!(
            "c' = {s:e} > 0 at x = {}",
            c.grid().x(i)
        )));
    }
    let x0 = unique_zero(c)?;
    let grid = c.grid();
    let (mut sup, mut x_sup) = (f64::NEG_INFINITY, grid.xmin());
    for (i, x) in grid.points().enumerate() {
        let f = alpha * rho * rho + cp.values()[i] + (rho * v[i] + rho.powi(3)) * (rho * (x - x0)).tanh();
        if f > sup {
            sup = f;
            x_sup = x;
        }
    }
    Ok(DecayCertificate { rho, gamma: -sup, sup_f_rho: sup, x0, x_sup })
}

/// Best certificate over `count` values of ρ spread over `(0, 0.9·α/3)`.
pub fn find_certificate(c: &GridFunction, alpha: f64, count: usize) -> Result<DecayCertificate, LinearError> {
    let top = 0.9 * alpha / 3.0;
    let mut best: Option<DecayCertificate> = None;
    for j in 1..=count.max(1) {
        let rho = top * j as f64 / count.max(1) as f64;
        let cert = decay_certificate(c, alpha, rho)?;
        if best.is_none_or(|b| cert.gamma > b.gamma) {
            best = Some(cert);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// `∫ cosh(ρ(x − x₀)) u² dx`, the energy controlled by a certificate.
pub fn certificate_energy(cert: &DecayCertificate, u: &GridFunction) -> f64 {
    let g = u.grid();
    let n = g.len();
    let mut acc = 0.0;
    for (i, x) in g.points().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        acc += w * cert.weight(x) * u.values()[i] * u.values()[i];
    }
    acc * g.dx()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub t: f64,
    pub quantity: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub family: OperatorFamily,
    pub rows: Vec<SmoothingRow>,
    pub sup_ratio: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Dyadic times `2^{-j}`, `j = 0..`, down to `t_min`, in increasing order.
pub fn dyadic_times(t_min: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 1.0;
    while t >= t_min * (1.0 - 1e-12) {
        out.push(t);
        t *= 0.5;
    }
    out.reverse();
    out
}

/// Short-time smoothing tables. Parabolic: `t^{1/2}‖u_x‖_∞/‖φ‖_∞`.
/// KdV–Burgers: `t‖u_xx‖_2/‖φ‖_2`, `t^{1/8}‖u‖_4/‖φ‖_2`, `t^{5/8}‖u_x‖_4/‖φ‖_2`.
pub fn verify_smoothing(
    op: &LinearOperatorSpec,
    data: &GridFunction,
    times: &[f64],
    dt: f64,
    bound: f64,
) -> Result<SmoothingReport, LinearError> {
    op.validate()?;
    let grid = *data.grid();
    let mut rows = Vec::new();
    let mut t_done = 0.0;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    match op.family {
        OperatorFamily::ParabolicA1 => {
            let n0 = data.max_abs();
            let mut st = ParabolicStepper::new(op, data, dt)?;
            for &t in &sorted {
                while t_done + 0.5 * dt < t {
                    st.step();
                    t_done = st.time();
                }
                let u = GridFunction::from_trusted(grid, st.state().to_vec());
                let ux = u.derivative().max_abs();
                rows.push(SmoothingRow { t, quantity: "t^(1/2) |u_x|_inf / |u0|_inf".into(), ratio: t.sqrt() * ux / n0 });
            }
        }
        OperatorFamily::KdvbB1 => {
            let n2 = weighted_norm(data, Exponent::Two, WeightSpec::None)?.value;
            let mut st = KdvbLinearStepper::new(op, data, dt)?;
            let sp = Spectral::new(&grid);
            for &t in &sorted {
                while t_done + 0.5 * dt < t {
                    st.step();
                    t_done = st.time();
                }
                let u = GridFunction::from_trusted(grid, st.state());
                let mut h = st.spectrum().to_vec();
                sp.differentiate_hat(&mut h, 1);
                let ux = GridFunction::from_trusted(grid, sp.inverse(&h));
                let mut h2 = st.spectrum().to_vec();
                sp.differentiate_hat(&mut h2, 2);
                let uxx = GridFunction::from_trusted(grid, sp.inverse(&h2));
                let l2 = |f: &GridFunction| weighted_norm(f, Exponent::Two, WeightSpec::None).map(|v| v.value);
                let l4 = |f: &GridFunction| weighted_norm(f, Exponent::Four, WeightSpec::None).map(|v| v.value);
                rows.push(SmoothingRow { t, quantity: "t |u_xx|_2 / |u0|_2".into(), ratio: t * l2(&uxx)? / n2 });
                rows.push(SmoothingRow { t, quantity: "t^(1/8) |u|_4 / |u0|_2".into(), ratio: t.powf(0.125) * l4(&u)? / n2 });
                rows.push(SmoothingRow { t, quantity: "t^(5/8) |u_x|_4 / |u0|_2".into(), ratio: t.powf(0.625) * l4(&ux)? / n2 });
            }
        }
    }
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(SmoothingReport { family: op.family, passed: sup_ratio <= bound, rows, sup_ratio, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    fn zeros(g: Grid1D) -> GridFunction {
        GridFunction::zeros(g)
    }

    #[test]
    fn heat_maximum_principle_and_zero_data() {
        let g = Grid1D::symmetric(20.0, 801).unwrap();
        let op = LinearOperatorSpec::parabolic(zeros(g), zeros(g)).unwrap();
        let u0 = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let opts = LinearOptions { schedule: SnapshotSchedule::Uniform { interval: 0.1 }, ..Default::default() };
        let tr = evolve_parabolic(&op, &u0, 2.0, 0.01, &opts).unwrap();
        let sups: Vec<f64> = tr.snapshots.iter().map(|s| s.max_abs()).collect();
        assert!(sups.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        // Gaussian heat solution: amplitude (1+4t)^{-1/2}
        let t = tr.times.last().unwrap();
        assert!((sups.last().unwrap() - (1.0 + 4.0 * t).powf(-0.5)).abs() < 1e-4);
        let tz = evolve_parabolic(&op, &zeros(g), 1.0, 0.01, &opts).unwrap();
        assert_eq!(tz.last().unwrap().1.max_abs(), 0.0);
    }

    #[test]
    fn conservative_parabolic_conserves_mass() {
        let g = Grid1D::symmetric(40.0, 1601).unwrap();
        let c = GridFunction::from_fn(g, |x| -(0.5 * x).tanh()).unwrap();
        let op = LinearOperatorSpec::parabolic(c, zeros(g)).unwrap().with_transport(TransportForm::Conservative);
        let u0 = GridFunction::from_fn(g, |x| (-(x - 1.0) * (x - 1.0)).exp()).unwrap();
        let opts = LinearOptions { schedule: SnapshotSchedule::Uniform { interval: 1.0 }, ..Default::default() };
        let tr = evolve_parabolic(&op, &u0, 5.0, 0.01, &opts).unwrap();
        let m0 = integrate(&u0);
        for s in &tr.snapshots {
            assert!((integrate(s) - m0).abs() < 1e-8 * 5.0);
        }
    }

    #[test]
    fn kdvb_free_symbol_matches_direct_transform() {
        let n = 256;
        let g = Grid1D::new(-20.0, 20.0 - 40.0 / n as f64, n).unwrap();
        let op = LinearOperatorSpec::kdvb(3.0, zeros(g), zeros(g)).unwrap();
        let u0 = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let dt = 0.05;
        let mut st = KdvbLinearStepper::new(&op, &u0, dt).unwrap();
        st.step();
        let got = st.state();
        // Oracle: Fourier integral of the Gaussian transform times the multiplier,
        // by trapezoid quadrature in ξ on a wide band.
        let alpha = 3.0;
        let m = 4000;
        let xi_max = 40.0;
        let dxi = 2.0 * xi_max / m as f64;
        for (i, x) in g.points().enumerate().step_by(7) {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=m {
                let xi = -xi_max + j as f64 * dxi;
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                let uhat = std::f64::consts::PI.sqrt() * (-xi * xi / 4.0).exp();
                let mult = Complex64::new(-alpha * xi * xi * dt, xi.powi(3) * dt).exp();
                acc += w * uhat * mult * Complex64::new(0.0, xi * x).exp();
            }
            let direct = acc.re * dxi / (2.0 * std::f64::consts::PI);
            assert!((got[i] - direct).abs() < 1e-10, "x={x} {} {}", got[i], direct);
        }
        let mut z = KdvbLinearStepper::new(&op, &zeros(g), dt).unwrap();
        z.step();
        assert!(z.state().iter().all(|&v| v == 0.0));
    }

    fn kdvb_coefficient(g: Grid1D) -> GridFunction {
        // c = g'(φ) for g = 2r(r−1)(2−r) and φ = logistic
        GridFunction::from_fn(g, |x| {
            let p = 1.0 / (1.0 + x.exp());
            -4.0 + 12.0 * p - 6.0 * p * p
        })
        .unwrap()
    }

    #[test]
    fn kdvb_contraction_and_mass() {
        let g = Grid1D::new(-60.0, 60.0 - 120.0 / 1024.0, 1024).unwrap();
        let c = kdvb_coefficient(g);
        let op = LinearOperatorSpec::kdvb(3.0, c.clone(), zeros(g)).unwrap();
        let u0 = GridFunction::from_fn(g, |x| (-(x - 2.0).powi(2)).exp() * (1.0 + 0.5 * x)).unwrap();
        let mut st = KdvbLinearStepper::new(&op, &u0, 0.01).unwrap();
        let mut prev = weighted_norm(&u0, Exponent::Two, WeightSpec::None).unwrap().value;
        for _ in 0..500 {
            st.step();
            let now = weighted_norm(&GridFunction::from_trusted(g, st.state()), Exponent::Two, WeightSpec::None).unwrap().value;
            assert!(now <= prev * (1.0 + 1e-8));
            prev = now;
        }
        let opc = op.clone().with_transport(TransportForm::Conservative);
        let mut sc = KdvbLinearStepper::new(&opc, &u0, 0.01).unwrap();
        let m0: f64 = u0.values().iter().sum();
        for _ in 0..200 {
            sc.step();
        }
        let m1: f64 = sc.state().iter().sum();
        assert!((m1 - m0).abs() * g.dx() < 1e-10);
    }

    #[test]
    fn certificate_for_kdvb_profile() {
        let g = Grid1D::symmetric(60.0, 2401).unwrap();
        let c = kdvb_coefficient(g);
        let cert = decay_certificate(&c, 3.0, 0.05).unwrap();
        assert!(cert.sup_f_rho < 0.0 && cert.is_valid());
        // x₀ where c(x₀) = 0: 12p − 6p² = 4 → p = 1 − 1/√3
        let p = 1.0 - 1.0 / 3f64.sqrt();
        let x0 = (1.0 / p - 1.0).ln();
        assert!((cert.x0 - x0).abs() < 1e-3);
        assert!(matches!(decay_certificate(&c, 3.0, 1.0), Err(LinearError::CertificateRefused { .. })));
        // ρ → 0: sup F_ρ → sup c′
        let tiny = decay_certificate(&c, 3.0, 1e-7).unwrap();
        let sup_cp = c.derivative().values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((tiny.sup_f_rho - sup_cp).abs() < 1e-5);
        let flat = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert!(decay_certificate(&flat, 3.0, 0.1).is_err());
        let best = find_certificate(&c, 3.0, 20).unwrap();
        assert!(best.gamma >= cert.gamma);
    }

    #[test]
    fn heat_smoothing_matches_gaussian_oracle() {
        let g = Grid1D::symmetric(10.0, 4001).unwrap();
        let op = LinearOperatorSpec::parabolic(zeros(g), zeros(g)).unwrap();
        let s = 0.01;
        let u0 = GridFunction::from_fn(g, |x| (-x * x / (4.0 * s)).exp()).unwrap();
        let rep = verify_smoothing(&op, &u0, &dyadic_times(1.0 / 128.0), 1e-4, 1.0).unwrap();
        let oracle = (-0.5f64).exp() / (2.0 * 2f64.sqrt());
        assert!(rep.passed);
        assert!(rep.sup_ratio <= oracle * 1.02 && rep.sup_ratio > 0.8 * oracle, "{}", rep.sup_ratio);
        let plateau = GridFunction::from_fn(g, |x| if x.abs() < 8.0 { 1.0 } else { 0.0 }).unwrap();
        let mut st = ParabolicStepper::new(&op, &plateau, 1e-4).unwrap();
        for _ in 0..10 {
            st.step();
        }
        let u = GridFunction::from_trusted(g, st.state().to_vec());
        let center = u.derivative().values()[2000 - 100..2000 + 100].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(center < 1e-12);
    }

    #[test]
    fn kdvb_smoothing_bounded() {
        let n = 1024;
        let g = Grid1D::new(-30.0, 30.0 - 60.0 / n as f64, n).unwrap();
        let op = LinearOperatorSpec::kdvb(3.0, zeros(g), zeros(g)).unwrap();
        let u0 = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let rep = verify_smoothing(&op, &u0, &dyadic_times(1e-3), 1e-4, 10.0).unwrap();
        assert!(rep.passed, "{}", rep.sup_ratio);
    }
}
