//! Nonlinear perturbation equations in the moving frame, in `w = u − φ`:
//!
//! * Burgers type: `w_t = w_xx − [f(φ+w) − f(φ)]_x`;
//! * KdV–Burgers: `w_t = −w_xxx + αw_xx − [g(φ+w) − g(φ)]_x`.
//!
//! Both are advanced on the periodic extension of the grid by fourth-order
//! exponential time differencing with the exact linear symbol, which keeps
//! every discrete steady state fixed. The flux difference is evaluated as the exact
//! Taylor polynomial of `f` about `φ`, so there is no cancellation for small `w`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{antiderivative, integrate, weighted_norm, Exponent, Grid1D, GridError, GridFunction, WeightSpec};
use crate::profiles::{FluxSpec, ProfileError, ProfileFamily, WaveProfile};
use crate::spectral::{Etdrk4, Spectral, C64};
use crate::trajectory::{SnapshotSchedule, Trajectory};

#[derive(Debug, Error)]
pub enum NonlinearError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("blow-up at t = {t}: ‖w‖_∞ = {sup:.3e} exceeds {limit:.3e}")]
    Blowup { t: f64, sup: f64, limit: f64 },
    #[error("under-resolved at t = {t}: {fraction:.3e} of the energy sits in the top third of the spectrum")]
    Aliasing { t: f64, fraction: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Coefficients `f^{(j)}(φ_i)/j!`, `j ≥ 1`, so that
/// `f(φ_i + w) − f(φ_i) = Σ_j t_j w^j` exactly for polynomial `f`.
#[derive(Debug, Clone)]
pub struct FluxTaylor {
    orders: Vec<Vec<f64>>,
}

impl FluxTaylor {
    pub fn new(flux: &FluxSpec, phi: &[f64]) -> Self {
        let a = flux.coeffs();
        let deg = a.len().saturating_sub(1);
        let mut orders = vec![vec![0.0; phi.len()]; deg.max(1)];
        for (i, &r) in phi.iter().enumerate() {
            for j in 1..=deg {
                // Σ_{m ≥ j} C(m, j) a_m r^{m−j}
                let mut acc = 0.0;
                for m in (j..=deg).rev() {
                    acc = acc * r + binomial(m, j) * a[m];
                }
                orders[j - 1][i] = acc;
            }
        }
        Self { orders }
    }

    /// `f(φ + w) − f(φ)` pointwise.
    pub fn difference(&self, w: &[f64], out: &mut [f64]) {
        let top = self.orders.len();
        for i in 0..w.len() {
            let mut acc = 0.0;
            for j in (0..top).rev() {
                acc = (acc + self.orders[j][i]) * w[i];
            }
            out[i] = acc;
        }
    }

    /// `f′(φ)`.
    pub fn linear(&self) -> &[f64] {
        &self.orders[0]
    }

    /// `f″(φ)/2` (zero for linear fluxes).
    pub fn quadratic(&self) -> Option<&[f64]> {
        self.orders.get(1).map(|v| v.as_slice())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Run-time guards and snapshot schedule for the nonlinear evolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearOptions {
    pub schedule: SnapshotSchedule,
    /// Abort when `‖w‖_∞` exceeds this multiple of `‖w₀‖_∞`.
    pub blowup_factor: f64,
    pub aliasing_threshold: f64,
    /// Steps between blow-up checks outside the snapshots.
    pub check_every: usize,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self {
            schedule: SnapshotSchedule::default(),
            blowup_factor: 1e3,
            aliasing_threshold: 1e-8,
            check_every: 100,
        }
    }
}

/// Time step with transport CFL number 1/2 for `max|f′|` over the range of
/// `φ + w₀`.
pub fn default_dt(flux: &FluxSpec, phi: &GridFunction, w0: &GridFunction) -> f64 {
    let (lo, hi) = phi
        .values()
        .iter()
        .zip(w0.values())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (p, w)| (a.min(p + w), b.max(p + w)));
    let f = flux.evaluator();
    let speed = (0..=1000)
        .map(|j| f.d1(lo + (hi - lo) * j as f64 / 1000.0).abs())
        .fold(1e-12, f64::max);
    0.5 * phi.grid().dx() / speed
}

fn check_inputs(profile: &WaveProfile, w0: &GridFunction, t_end: f64, dt: f64) -> Result<(), NonlinearError> {
    if w0.grid() != profile.grid() && w0.grid().len() != profile.grid().len() {
        return Err(GridError::GridMismatch("perturbation and profile".into()).into());
    }
    if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
        return Err(NonlinearError::InvalidInput(format!("need dt > 0 and T > 0, got dt = {dt}, T = {t_end}")));
    }
    if profile.phi_minus != 1.0 || profile.phi_plus != 0.0 || profile.speed != 0.0 {
        return Err(NonlinearError::InvalidInput("profile is not normalized".into()));
    }
    let peak = w0.max_abs();
    let v = w0.values();
    let ends = v[0].abs().max(v[v.len() - 1].abs());
    if peak > 0.0 && ends > 1e-6 * peak {
        log::warn!("perturbation does not decay at the boundary: |w0| = {ends:.3e} at an end, peak {peak:.3e}");
    }
    Ok(())
}

/// Evolve the Burgers-type perturbation equation.
pub fn evolve_burgers(
    flux: &FluxSpec,
    profile: &WaveProfile,
    w0: &GridFunction,
    t_end: f64,
    dt: f64,
    opts: &NonlinearOptions,
) -> Result<Trajectory, NonlinearError> {
    check_inputs(profile, w0, t_end, dt)?;
    let sp = Spectral::new(w0.grid());
    let symbol: Vec<C64> = sp.xi().iter().map(|&k| C64::new(-k * k, 0.0)).collect();
    let meta = serde_json::json!({
        "equation": "w_t = w_xx - [f(phi+w) - f(phi)]_x",
        "scheme": "fourier_etdrk4",
        "dt": dt,
        "t_end": t_end,
        "grid": w0.grid(),
        "flux": flux,
        "flux_coefficients": flux.coeffs(),
        "profile_family": profile.family,
    });
    evolve_spectral(sp, &symbol, flux, profile, w0, t_end, dt, opts, meta)
}

/// Evolve the KdV–Burgers perturbation equation.
pub fn evolve_kdvb(
    g: &FluxSpec,
    alpha: f64,
    profile: &WaveProfile,
    w0: &GridFunction,
    t_end: f64,
    dt: f64,
    opts: &NonlinearOptions,
) -> Result<Trajectory, NonlinearError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(NonlinearError::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if profile.family != ProfileFamily::Kdvb {
        log::warn!("evolve_kdvb called with a {:?} profile", profile.family);
    }
    check_inputs(profile, w0, t_end, dt)?;
    let sp = Spectral::new(w0.grid());
    let symbol: Vec<C64> = sp.xi().iter().map(|&k| C64::new(-alpha * k * k, k * k * k)).collect();
    let meta = serde_json::json!({
        "equation": "w_t = -w_xxx + alpha w_xx - [g(phi+w) - g(phi)]_x",
        "scheme": "fourier_etdrk4",
        "alpha": alpha,
        "dt": dt,
        "t_end": t_end,
        "grid": w0.grid(),
        "flux": g,
        "flux_coefficients": g.coeffs(),
        "profile_family": profile.family,
    });
    evolve_spectral(sp, &symbol, g, profile, w0, t_end, dt, opts, meta)
}

#[allow(clippy::too_many_arguments)]
fn evolve_spectral(
    sp: Spectral,
    symbol: &[C64],
    flux: &FluxSpec,
    profile: &WaveProfile,
    w0: &GridFunction,
    t_end: f64,
    dt: f64,
    opts: &NonlinearOptions,
    meta: serde_json::Value,
) -> Result<Trajectory, NonlinearError> {
    let grid = *w0.grid();
    let n = grid.len();
    let phi = profile.sample(&grid);
    let taylor = FluxTaylor::new(flux, phi.values());
    let mut rk = Etdrk4::new(symbol, dt);
    let mut wh = sp.forward(w0.values());
    let limit = opts.blowup_factor * w0.max_abs();

    let mut w = vec![0.0; n];
    let mut fw = vec![0.0; n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let mut rhs = |state: &[C64], out: &mut [C64]| {
        buf.copy_from_slice(state);
        sp.inverse_into(&mut buf, &mut w);
        taylor.difference(&w, &mut fw);
        sp.forward_into(&fw, out);
        sp.differentiate_hat(out, 1);
        for v in out.iter_mut() {
            *v = -*v;
        }
    };

    let mut traj = Trajectory::new(meta);
    traj.push(0.0, w0.clone());
    let steps = opts.schedule.steps(dt, t_end);
    let total = *steps.last().unwrap_or(&0);
    let mut next = 0;
    let sp2 = Spectral::new(&grid);
    let check = |wh: &[C64], t: f64| -> Result<Vec<f64>, NonlinearError> {
        let u = sp2.inverse(wh);
        let sup = u.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if !sup.is_finite() || sup > limit {
            return Err(NonlinearError::Blowup { t, sup, limit });
        }
        Ok(u)
    };
    for j in 1..=total {
        rk.step(&mut wh, &mut rhs);
        let t = j as f64 * dt;
        if j == steps[next] {
            let u = check(&wh, t)?;
            let fraction = sp2.aliasing_fraction(&wh);
            if fraction > opts.aliasing_threshold {
                return Err(NonlinearError::Aliasing { t, fraction });
            }
            traj.push(t, GridFunction::new(grid, u)?);
            next += 1;
        } else if opts.check_every > 0 && j % opts.check_every == 0 {
            check(&wh, t)?;
        }
    }
    Ok(traj)
}

/// Initial perturbation families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    /// `w₀ = Ψ′` with `Ψ ∝ (1+x²)^{−k/2}` scaled so that `‖Ψ‖_{∞,k} = δ`.
    PolyDecay { k: f64, delta: f64 },
    /// `w₀ = δ e^{−(x−x_c)²/width²}` (carries mass, so the shift is nonzero).
    Gaussian {
        delta: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Derivative of another family's `w₀` (zero mass).
    DerivativeOf { of: Box<PerturbationSpec> },
    /// `w₀ ∝ x(s² + x²)^{−(κ+1)/2}`, `κ = k + 1/p`, scaled so that
    /// `‖w₀‖_{∞,κ} = δ`: zero mass, tail exactly at the edge of `L^{p,k}`.
    PolyTail {
        k: f64,
        delta: f64,
        #[serde(default = "default_scale")]
        scale: f64,
        p: Exponent,
    },
}

fn one() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    8.0
}

impl PerturbationSpec {
    pub fn delta(&self) -> f64 {
        match self {
            PerturbationSpec::PolyDecay { delta, .. }
            | PerturbationSpec::Gaussian { delta, .. }
            | PerturbationSpec::PolyTail { delta, .. } => *delta,
            PerturbationSpec::DerivativeOf { of } => of.delta(),
        }
    }

    pub fn validate(&self) -> Result<(), NonlinearError> {
        let bad = |m: String| Err(NonlinearError::InvalidInput(m));
        let delta = self.delta();
        if !(delta >= 0.0 && delta.is_finite()) {
            return bad(format!("delta must be finite and nonnegative, got {delta}"));
        }
        match self {
            PerturbationSpec::PolyDecay { k, .. } | PerturbationSpec::PolyTail { k, .. } if !(*k > 1.0 && k.is_finite()) => {
                bad(format!("k must exceed 1, got {k}"))
            }
            PerturbationSpec::PolyTail { scale, .. } if !(*scale > 0.0) => bad(format!("scale must be positive, got {scale}")),
            PerturbationSpec::Gaussian { width, center, .. } if !(*width > 0.0 && center.is_finite()) => {
                bad(format!("gaussian needs width > 0 and a finite center, got width {width}, center {center}"))
            }
            PerturbationSpec::DerivativeOf { of } => match **of {
                PerturbationSpec::DerivativeOf { .. } => bad("nested derivative_of is not supported".into()),
                ref base => base.validate(),
            },
            _ => Ok(()),
        }
    }

    /// Unscaled `(w(x), w′(x))`.
    fn shape(&self, x: f64) -> (f64, f64) {
        match *self {
            PerturbationSpec::PolyDecay { k, .. } => {
                let q = 1.0 + x * x;
                let w = -k * x * q.powf(-0.5 * k - 1.0);
                let dw = -k * (q.powf(-0.5 * k - 1.0) - (k + 2.0) * x * x * q.powf(-0.5 * k - 2.0));
                (w, dw)
            }
            PerturbationSpec::Gaussian { width, center, .. } => {
                let y = (x - center) / width;
                let w = (-y * y).exp();
                (w, -2.0 * y / width * w)
            }
            PerturbationSpec::PolyTail { k, scale, p, .. } => {
                let kappa = k + p.reciprocal();
                let q = scale * scale + x * x;
                let w = x * q.powf(-0.5 * (kappa + 1.0));
                let dw = q.powf(-0.5 * (kappa + 1.0)) - (kappa + 1.0) * x * x * q.powf(-0.5 * (kappa + 3.0));
                (w, dw)
            }
            PerturbationSpec::DerivativeOf { .. } => unreachable!("handled by the caller"),
        }
    }

    /// Unscaled antiderivative of the shape, vanishing at `−∞`, when known.
    fn shape_antiderivative(&self, x: f64) -> Option<f64> {
        match *self {
            PerturbationSpec::PolyDecay { k, .. } => Some((1.0 + x * x).powf(-0.5 * k)),
            PerturbationSpec::PolyTail { k, scale, p, .. } => {
                let kappa = k + p.reciprocal();
                Some(-(scale * scale + x * x).powf(-0.5 * (kappa - 1.0)) / (kappa - 1.0))
            }
            _ => None,
        }
    }

    /// Amplitude that realizes the family's normalization on `grid`.
    fn amplitude(&self, grid: &Grid1D) -> Result<f64, NonlinearError> {
        let delta = self.delta();
        if delta == 0.0 {
            return Ok(0.0);
        }
        let (f, weight) = match *self {
            PerturbationSpec::PolyDecay { k, .. } => (
                GridFunction::from_fn(*grid, |x| self.shape_antiderivative(x).unwrap_or(0.0))?,
                WeightSpec::Polynomial { k },
            ),
            PerturbationSpec::PolyTail { k, p, .. } => (
                GridFunction::from_fn(*grid, |x| self.shape(x).0)?,
                WeightSpec::Polynomial { k: k + p.reciprocal() },
            ),
            PerturbationSpec::Gaussian { .. } => return Ok(delta),
            PerturbationSpec::DerivativeOf { ref of } => return of.amplitude(grid),
        };
        let norm = weighted_norm(&f, Exponent::Inf, weight)?.value;
        Ok(delta / norm)
    }
}

/// Initial perturbation together with its measured size and shift.
#[derive(Debug, Clone)]
pub struct PerturbedInitial {
    pub w0: GridFunction,
    /// `Ψ(x) = ∫_{−∞}^x (u₀ − φ(·−h))`.
    pub psi: GridFunction,
    /// `‖Ψ‖` in the requested theorem norm.
    pub epsilon: f64,
    pub h: f64,
}

/// Build `w₀`, `Ψ`, `ε(u₀) = ‖Ψ‖_{p,k}` and the shift `h` for a profile.
pub fn make_perturbed_initial(
    profile: &WaveProfile,
    spec: &PerturbationSpec,
    norm_p: Exponent,
    norm_k: f64,
) -> Result<PerturbedInitial, NonlinearError> {
    spec.validate()?;
    let grid = *profile.grid();
    let amp = spec.amplitude(&grid)?;
    if amp == 0.0 {
        let z = GridFunction::zeros(grid);
        return Ok(PerturbedInitial { w0: z.clone(), psi: z, epsilon: 0.0, h: 0.0 });
    }
    let weight = WeightSpec::Polynomial { k: norm_k };
    let (w0, psi, h) = match spec {
        PerturbationSpec::DerivativeOf { of } => {
            let w0 = GridFunction::from_fn(grid, |x| amp * of.shape(x).1)?;
            let psi = GridFunction::from_fn(grid, |x| amp * of.shape(x).0)?;
            (w0, psi, 0.0)
        }
        PerturbationSpec::Gaussian { .. } => {
            let w0 = GridFunction::from_fn(grid, |x| amp * spec.shape(x).0)?;
            let h = integrate(&w0) / (profile.phi_minus - profile.phi_plus);
            let target = profile.shifted(h, &grid).sub(&profile.phi)?;
            let psi = antiderivative(&w0.sub(&target)?);
            (w0, psi, h)
        }
        _ => {
            let w0 = GridFunction::from_fn(grid, |x| amp * spec.shape(x).0)?;
            let psi = GridFunction::from_fn(grid, |x| amp * spec.shape_antiderivative(x).unwrap_or(0.0))?;
            (w0, psi, 0.0)
        }
    };
    let epsilon = weighted_norm(&psi, norm_p, weight)?.value;
    Ok(PerturbedInitial { w0, psi, epsilon, h })
}
