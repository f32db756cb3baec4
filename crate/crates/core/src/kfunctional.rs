//! Modified K-functional between `L^p` and the exponentially weighted space
//! `L^{p,ρ}` (with `ρ = 1`), the equivalent norm `‖·‖_*` on `L^{p,k}`, and
//! numerical checks of the interpolation trade-off against semigroups.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{weighted_norm, Exponent, Grid1D, GridError, GridFunction, WeightSpec};

#[derive(Debug, Error)]
pub enum KError {
    #[error("exponent p = {0} is not supported here")]
    UnsupportedExponent(Exponent),
    #[error("shift by t = {t} needs data down to x = {needed}, grid starts at {available} where |v| is not negligible")]
    DomainCoverage { t: f64, needed: f64, available: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Conjugate exponent `q = p/(p−1)` for `1 < p < ∞`.
#[inline]
fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `m_p(r) = r/(1 + r^q)^{1/q}`, `q = p/(p−1)`; `min(1, r)` for `p ∈ {1, ∞}`.
pub fn m_p(r: f64, p: Exponent) -> f64 {
    debug_assert!(r >= 0.0);
    if r == 0.0 {
        return 0.0;
    }
    match p {
        Exponent::One | Exponent::Inf => r.min(1.0),
        _ => m_p_exp(r.ln(), p),
    }
}

/// `m_p(e^t)`, stable for large `|t|`.
pub fn m_p_exp(t: f64, p: Exponent) -> f64 {
    match p.finite() {
        Some(pf) if pf > 1.0 => {
            let q = conjugate(pf);
            (t - softplus(q * t) / q).exp()
        }
        _ => t.min(0.0).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMethod {
    ClosedForm,
    Infimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KFunctionalResult {
    pub s: f64,
    pub p: Exponent,
    pub value: f64,
    pub method: KMethod,
}

/// Trapezoid sum of `terms(i)` over the grid.
fn trapezoid(grid: &Grid1D, terms: impl Fn(usize) -> f64) -> f64 {
    let n = grid.len();
    let mut acc = 0.0;
    for i in 0..n {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        acc += w * terms(i);
    }
    acc * grid.dx()
}

/// `K(s, u) = (∫ (|u| m_p(e^{s+|x|}))^p dx)^{1/p}`, the grid maximum for `p = ∞`.
pub fn k_functional_closed(u: &GridFunction, s: f64, p: Exponent) -> KFunctionalResult {
    let grid = u.grid();
    let v = u.values();
    let value = match p.finite() {
        None => v
            .iter()
            .enumerate()
            .map(|(i, &a)| a.abs() * m_p_exp(s + grid.x(i).abs(), p))
            .fold(0.0, f64::max),
        Some(pf) => trapezoid(grid, |i| (v[i].abs() * m_p_exp(s + grid.x(i).abs(), p)).powf(pf)).powf(1.0 / pf),
    };
    KFunctionalResult { s, p, value, method: KMethod::ClosedForm }
}

/// `K(s, u)` as `‖u − v₀‖_p^p + e^{sp}‖v₀‖_{p,1}^p` with the explicit pointwise
/// minimizer `v₀`.
pub fn k_functional_inf(u: &GridFunction, s: f64, p: Exponent) -> Result<KFunctionalResult, KError> {
    let pf = p.finite().ok_or(KError::UnsupportedExponent(p))?;
    let grid = u.grid();
    let v = u.values();
    let total = trapezoid(grid, |i| {
        let t = s + grid.x(i).abs();
        let a = v[i].abs();
        // |u − v₀| and e^{s+|x|}|v₀| as multiples of |u|.
        let (rest, weighted) = if pf == 1.0 {
            if t <= 0.0 {
                (0.0, t.exp())
            } else {
                (1.0, 0.0)
            }
        } else {
            let q = conjugate(pf);
            // 1 − θ with θ = 1/(1 + e^{qt}); e^t·θ
            ((q * t - softplus(q * t)).exp(), (t - softplus(q * t)).exp())
        };
        (a * rest).powf(pf) + (a * weighted).powf(pf)
    });
    Ok(KFunctionalResult { s, p, value: total.powf(1.0 / pf), method: KMethod::Infimum })
}

/// Independent check of the infimum form: per grid point, minimize
/// `(1−θ)^p + e^{p t}θ^p` by golden-section search over `θ = 1/(1+e^z)`.
pub fn k_functional_pointwise(u: &GridFunction, s: f64, p: Exponent) -> Result<f64, KError> {
    let pf = p.finite().ok_or(KError::UnsupportedExponent(p))?;
    let grid = u.grid();
    let v = u.values();
    let total = trapezoid(grid, |i| {
        if v[i] == 0.0 {
            return 0.0;
        }
        let t = s + grid.x(i).abs();
        v[i].abs().powf(pf) * pointwise_min(t, pf)
    });
    Ok(total.powf(1.0 / pf))
}

fn pointwise_min(t: f64, p: f64) -> f64 {
    // log of (e^z/(1+e^z))^p + e^{pt}/(1+e^z)^p
    let log_obj = |z: f64| {
        let sp = softplus(z);
        let a = p * (z - sp);
        let b = p * (t - sp);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    };
    let reach = 80.0 + 4.0 * t.abs();
    golden_min(log_obj, -reach, reach, 1e-12).exp()
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    f(a).min(f(b)).min(fc).min(fd)
}

/// `h_k(s)`: `e^{−s}` for `s ≥ 0`, `(1−s)^{kp−1}` for `s < 0`.
pub fn h_weight(s: f64, k: f64, p: f64) -> f64 {
    if s >= 0.0 {
        (-s).exp()
    } else {
        (1.0 - s).powf(k * p - 1.0)
    }
}

/// `H_k(r) = ∫_r^∞ h_k`.
pub fn big_h(r: f64, k: f64, p: f64) -> f64 {
    if r >= 0.0 {
        (-r).exp()
    } else {
        1.0 + ((1.0 - r).powf(k * p) - 1.0) / (k * p)
    }
}

/// Sup of `H_l(s+t) / (H_k(s)(1+t)^{l−k})` over the given samples.
pub fn h_ratio_sup(k: f64, l: f64, p: f64, s_values: &[f64], t_values: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    for &s in s_values {
        for &t in t_values {
            let r = big_h(s + t, l, p) / (big_h(s, k, p) * (1.0 + t).powf(l - k));
            sup = sup.max(r);
        }
    }
    sup
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarNormResult {
    pub p: Exponent,
    pub k: f64,
    pub value: f64,
    /// Human-readable description of the s-quadrature.
    pub s_quadrature: String,
    pub s_min: f64,
    pub s_max: f64,
    pub nodes: usize,
    /// Estimated integral of the discarded tails, relative to the integral.
    pub truncation_error: f64,
}

const STAR_TAIL_TOL: f64 = 1e-12;
const STAR_DS: f64 = 0.05;

/// `‖u‖_* = (∫ K(s,u)^p h_k(s) ds)^{1/p}` by composite Simpson quadrature on
/// `[s_min, 0] ∪ [0, s_max]`, the interval grown until both tail estimates fall
/// below `1e-12` of the integral.
pub fn star_norm(u: &GridFunction, p: Exponent, k: f64) -> Result<StarNormResult, KError> {
    let pf = p.finite().ok_or(KError::UnsupportedExponent(p))?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(KError::InvalidInput(format!("k must be positive, got {k}")));
    }
    let norm_p = weighted_norm(u, p, WeightSpec::None)?.value;
    if norm_p == 0.0 {
        return Ok(StarNormResult {
            p,
            k,
            value: 0.0,
            s_quadrature: "zero function".into(),
            s_min: 0.0,
            s_max: 0.0,
            nodes: 0,
            truncation_error: 0.0,
        });
    }
    let integrand = |s: f64| k_functional_closed(u, s, p).value.powf(pf) * h_weight(s, k, pf);
    let reach = u.grid().xmin().abs().max(u.grid().xmax().abs());
    let mut s_min = -reach - 10.0;
    let mut s_max = 30.0;
    loop {
        let (left, lnodes) = simpson(&integrand, s_min, 0.0);
        let (right, rnodes) = simpson(&integrand, 0.0, s_max);
        let total = left + right;
        // Right tail: K ≤ ‖u‖_p and ∫_{S}^∞ e^{−s} = e^{−S}. Left tail decays like e^{ps}.
        let right_tail = norm_p.powf(pf) * (-s_max).exp();
        let left_tail = integrand(s_min) / pf;
        let rel = (right_tail + left_tail) / total;
        if rel < STAR_TAIL_TOL || s_max - s_min > 1e5 {
            return Ok(StarNormResult {
                p,
                k,
                value: total.powf(1.0 / pf),
                s_quadrature: format!("composite Simpson, ds ≈ {STAR_DS}, split at s = 0, on [{s_min}, {s_max}]"),
                s_min,
                s_max,
                nodes: lnodes + rnodes - 1,
                truncation_error: rel,
            });
        }
        if right_tail > 0.5 * STAR_TAIL_TOL * total {
            s_max += 10.0;
        }
        if left_tail > 0.5 * STAR_TAIL_TOL * total {
            s_min -= 10.0;
        }
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, usize) {
    let mut m = ((b - a) / STAR_DS).ceil() as usize;
    m += m % 2;
    m = m.max(2);
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    (acc * h / 3.0, m + 1)
}

/// Right shift `(S_t v)(x) = v(x − t)` on a half-line grid `[xmin, 0]`.
///
/// Values needed left of `xmin` are taken as zero when `|v(xmin)|` is below
/// `1e-8·max|v|`; otherwise the grid does not cover enough of the tail.
pub fn shift_semigroup_halfline(v: &GridFunction, t: f64) -> Result<GridFunction, KError> {
    let grid = *v.grid();
    if grid.xmax() > 1e-12 {
        return Err(KError::InvalidInput(format!("half-line grid must end at x ≤ 0, got {}", grid.xmax())));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(KError::InvalidInput(format!("shift time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(v.clone());
    }
    let peak = v.max_abs();
    if t > 0.0 && v.values()[0].abs() > 1e-8 * peak {
        return Err(KError::DomainCoverage { t, needed: grid.xmin() - t, available: grid.xmin() });
    }
    Ok(GridFunction::from_fn(grid, |x| v.interpolate_linear(x - t))?)
}

/// A family of evolution operators `S_t` acting on grid functions.
pub trait Semigroup {
    fn apply(&self, v: &GridFunction, t: f64) -> Result<GridFunction, KError>;
}

/// The half-line right shift.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfLineShift;

impl Semigroup for HalfLineShift {
    fn apply(&self, v: &GridFunction, t: f64) -> Result<GridFunction, KError> {
        shift_semigroup_halfline(v, t)
    }
}

/// Test data for interpolation checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataFamily {
    /// `(1+|x|)^{−a}`
    PolyDecay { a: f64 },
    /// `(1−x)^{−k}` on `x ≤ 0`
    HalfLinePoly { k: f64 },
    /// `e^{−ρ|x|}`
    Exponential { rho: f64 },
    /// `e^{−x²/w²}`
    Gaussian { width: f64 },
}

impl DataFamily {
    pub fn sample(&self, grid: &Grid1D) -> Result<GridFunction, KError> {
        let f = match *self {
            DataFamily::PolyDecay { a } => GridFunction::from_fn(*grid, |x| (1.0 + x.abs()).powf(-a)),
            DataFamily::HalfLinePoly { k } => GridFunction::from_fn(*grid, |x| (1.0 - x.min(0.0)).powf(-k)),
            DataFamily::Exponential { rho } => GridFunction::from_fn(*grid, |x| (-rho * x.abs()).exp()),
            DataFamily::Gaussian { width } => GridFunction::from_fn(*grid, |x| (-(x / width).powi(2)).exp()),
        };
        Ok(f?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRow {
    pub t: f64,
    pub norm_ratio: f64,
    pub pass: bool,
}

/// Outcome of the empirical check of the semigroup hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionCheck {
    pub ok: bool,
    /// Largest observed `‖S_t u‖_p / ‖u‖_p`.
    pub lp_bound: f64,
    /// Largest observed `e^t ‖S_t u‖_{p,ρ} / ‖u‖_{p,ρ}`.
    pub weighted_bound: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub p: Exponent,
    pub k: f64,
    pub l: f64,
    pub bound: f64,
    pub precondition: PreconditionCheck,
    pub rows: Vec<InterpolationRow>,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    pub passed: bool,
}

impl InterpolationReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), KError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "norm_ratio", "pass"]).map_err(|e| KError::Io(e.into()))?;
        for r in &self.rows {
            w.write_record([format!("{:.16e}", r.t), format!("{:.16e}", r.norm_ratio), r.pass.to_string()])
                .map_err(|e| KError::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "k": self.k,
            "l": self.l,
            "bound": self.bound,
            "precondition": self.precondition,
            "sup_ratio": self.sup_ratio,
            "inf_ratio": self.inf_ratio,
            "passed": self.passed,
        })
    }
}

/// Settings for [`verify_interpolation`].
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSetup {
    pub p: Exponent,
    pub k: f64,
    pub l: f64,
    pub t_grid: Vec<f64>,
    /// Upper bound the ratio must respect at every `t`.
    pub bound: f64,
    /// Constant `C₀` allowed in the hypotheses, with a relative slack.
    pub c0: f64,
    pub slack: f64,
}

/// Tabulate `‖S_t v‖_{p,l}(1+t)^{k−l} / ‖v‖_{p,k}` over the t-grid after
/// checking `‖S_t u‖_p ≤ C₀‖u‖_p` and `‖S_t u‖_{p,1} ≤ C₀e^{−t}‖u‖_{p,1}` on
/// the probes. A failed hypothesis yields a report with `passed = false`.
pub fn verify_interpolation(
    semigroup: &dyn Semigroup,
    v: &GridFunction,
    probes: &[GridFunction],
    setup: &InterpolationSetup,
) -> Result<InterpolationReport, KError> {
    let InterpolationSetup { p, k, l, ref t_grid, bound, c0, slack } = *setup;
    if !(0.0 < l && l < k) {
        return Err(KError::InvalidInput(format!("need 0 < l < k, got l = {l}, k = {k}")));
    }
    let exp_w = WeightSpec::Exponential { rho: 1.0 };
    let mut pre = PreconditionCheck { ok: true, lp_bound: 0.0, weighted_bound: 0.0, message: None };
    'probes: for u in probes {
        let n0 = weighted_norm(u, p, WeightSpec::None)?.value;
        let w0 = weighted_norm(u, p, exp_w)?.value;
        for &t in t_grid {
            let su = semigroup.apply(u, t)?;
            let a = weighted_norm(&su, p, WeightSpec::None)?.value / n0;
            let ws = weighted_norm(&su, p, exp_w)?.value;
            let b = if ws > 0.0 { (ws.ln() + t - w0.ln()).exp() } else { 0.0 };
            pre.lp_bound = pre.lp_bound.max(a);
            pre.weighted_bound = pre.weighted_bound.max(b);
            if a > c0 * (1.0 + slack) || b > c0 * (1.0 + slack) {
                pre.ok = false;
                pre.message = Some(format!("hypothesis violated at t = {t}: Lp ratio {a:.4e}, weighted ratio {b:.4e}"));
                break 'probes;
            }
        }
    }
    let mut report = InterpolationReport {
        p,
        k,
        l,
        bound,
        precondition: pre,
        rows: Vec::new(),
        sup_ratio: f64::NAN,
        inf_ratio: f64::NAN,
        passed: false,
    };
    if !report.precondition.ok {
        return Ok(report);
    }
    let vk = weighted_norm(v, p, WeightSpec::Polynomial { k })?.value;
    if vk == 0.0 {
        return Err(KError::InvalidInput("data has zero weighted norm".into()));
    }
    let (mut sup, mut inf) = (0.0f64, f64::INFINITY);
    for &t in t_grid {
        let sv = semigroup.apply(v, t)?;
        let ratio = weighted_norm(&sv, p, WeightSpec::Polynomial { k: l })?.value * (1.0 + t).powf(k - l) / vk;
        sup = sup.max(ratio);
        inf = inf.min(ratio);
        report.rows.push(InterpolationRow { t, norm_ratio: ratio, pass: ratio <= bound });
    }
    report.sup_ratio = sup;
    report.inf_ratio = inf;
    report.passed = report.rows.iter().all(|r| r.pass);
    Ok(report)
}

/// `n` log-spaced points on `[a, b]`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FINITE: [Exponent; 3] = [Exponent::One, Exponent::Two, Exponent::Four];

    fn bump_grid() -> Grid1D {
        Grid1D::symmetric(15.0, 1201).unwrap()
    }

    #[test]
    fn m_p_values() {
        assert_eq!(m_p(0.5, Exponent::One), 0.5);
        for p in Exponent::ALL {
            assert_eq!(m_p(0.0, p), 0.0);
        }
        assert!((m_p(1.0, Exponent::Two) - 0.5f64.sqrt()).abs() < 1e-15);
        // closed form against the direct formula for p = 4, q = 4/3
        for r in [0.01, 0.3, 1.0, 7.0, 150.0] {
            let q = 4.0 / 3.0;
            let direct = r / (1.0 + f64::powf(r, q)).powf(1.0 / q);
            assert!((m_p(r, Exponent::Four) - direct).abs() < 1e-14 * direct.max(1.0));
        }
        assert!((m_p_exp(800.0, Exponent::Two) - 1.0).abs() < 1e-15);
        assert!(m_p_exp(-800.0, Exponent::Four) == 0.0);
    }

    #[test]
    fn k_zero_function() {
        let u = GridFunction::zeros(bump_grid());
        for p in FINITE {
            assert_eq!(k_functional_closed(&u, 0.3, p).value, 0.0);
            assert_eq!(k_functional_inf(&u, 0.3, p).unwrap().value, 0.0);
            assert_eq!(star_norm(&u, p, 2.0).unwrap().value, 0.0);
        }
        assert!(k_functional_inf(&u, 0.0, Exponent::Inf).is_err());
    }

    #[test]
    fn k_large_s_tends_to_lp_norm() {
        let u = GridFunction::from_fn(bump_grid(), |x| if x.abs() < 2.0 { (4.0 - x * x).powi(2) } else { 0.0 }).unwrap();
        for p in FINITE {
            let np = weighted_norm(&u, p, WeightSpec::None).unwrap().value;
            let k = k_functional_closed(&u, 40.0, p).value;
            assert!((k - np).abs() < 1e-12 * np);
        }
    }

    #[test]
    fn star_norm_homogeneous_and_equivalent() {
        let grid = Grid1D::symmetric(60.0, 2401).unwrap();
        for p in [Exponent::Two, Exponent::Four] {
            let pf = p.finite().unwrap();
            let k = 1.0;
            let mut ratios = Vec::new();
            for a in [k + 1.0 / pf + 0.5, k + 1.0 / pf + 1.0, k + 2.0] {
                let u = DataFamily::PolyDecay { a }.sample(&grid).unwrap();
                let star = star_norm(&u, p, k).unwrap();
                let twice = star_norm(&u.scaled(2.0), p, k).unwrap();
                assert!((twice.value - 2.0 * star.value).abs() < 1e-10 * star.value);
                assert!(star.truncation_error < 1e-12);
                let pk = weighted_norm(&u, p, WeightSpec::Polynomial { k }).unwrap().value;
                ratios.push(star.value / pk);
            }
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
            assert!(lo > 0.0 && hi / lo < 3.0, "{ratios:?}");
        }
    }

    #[test]
    fn h_inequality_bounded() {
        let s: Vec<f64> = (0..200).map(|i| -50.0 + 0.5 * i as f64).collect();
        let t = log_spaced(1e-3, 1e4, 60);
        for p in [1.0, 2.0, 4.0] {
            let a = h_ratio_sup(3.0, 1.5, p, &s, &t);
            let b = h_ratio_sup(3.0, 1.5, p, &s, &log_spaced(1e-3, 1e6, 80));
            assert!(a.is_finite() && (b - a).abs() < 0.5 * a, "p={p} {a} {b}");
        }
    }

    #[test]
    fn shift_identity_and_exponential_decay() {
        let grid = Grid1D::new(-40.0, 0.0, 4001).unwrap();
        let v = GridFunction::from_fn(grid, |x| (2.0 * x).exp()).unwrap();
        assert_eq!(shift_semigroup_halfline(&v, 0.0).unwrap(), v);
        let w = WeightSpec::Exponential { rho: 1.0 };
        for p in Exponent::ALL {
            let n0 = weighted_norm(&v, p, w).unwrap().value;
            for t in [0.5, 2.0, 7.0] {
                let s = shift_semigroup_halfline(&v, t).unwrap();
                assert!(weighted_norm(&s, p, w).unwrap().value <= (-t).exp() * n0 * (1.0 + 1e-9));
            }
        }
        let poor = GridFunction::from_fn(grid, |x| (1.0 - x).powi(-1)).unwrap();
        assert!(matches!(shift_semigroup_halfline(&poor, 1.0), Err(KError::DomainCoverage { .. })));
    }

    #[test]
    fn interpolation_report_t0_entry() {
        let grid = Grid1D::new(-3000.0, 0.0, 60001).unwrap();
        let v = DataFamily::HalfLinePoly { k: 3.0 }.sample(&grid).unwrap();
        let probe = DataFamily::Exponential { rho: 2.0 }.sample(&grid).unwrap();
        let setup = InterpolationSetup {
            p: Exponent::Inf,
            k: 3.0,
            l: 1.5,
            t_grid: vec![0.0, 1.0, 10.0, 100.0],
            bound: 1.0,
            c0: 1.0,
            slack: 1e-6,
        };
        let rep = verify_interpolation(&HalfLineShift, &v, &[probe], &setup).unwrap();
        assert!(rep.precondition.ok);
        assert!(rep.rows[0].norm_ratio <= 1.0);
        assert!(rep.passed);
        assert!(rep.inf_ratio > 0.1);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,norm_ratio,pass\n"));
    }

    #[test]
    fn failed_hypothesis_is_reported() {
        struct Growing;
        impl Semigroup for Growing {
            fn apply(&self, v: &GridFunction, t: f64) -> Result<GridFunction, KError> {
                Ok(v.scaled(1.0 + t))
            }
        }
        let grid = Grid1D::new(-10.0, 0.0, 101).unwrap();
        let v = DataFamily::HalfLinePoly { k: 2.0 }.sample(&grid).unwrap();
        let setup = InterpolationSetup {
            p: Exponent::Two,
            k: 2.0,
            l: 1.0,
            t_grid: vec![1.0],
            bound: 10.0,
            c0: 1.0,
            slack: 0.0,
        };
        let rep = verify_interpolation(&Growing, &v, &[v.clone()], &setup).unwrap();
        assert!(!rep.precondition.ok && !rep.passed && rep.rows.is_empty());
    }

    fn random_u(seed: &[f64]) -> GridFunction {
        let grid = Grid1D::symmetric(12.0, 481).unwrap();
        GridFunction::from_fn(grid, |x| {
            seed.iter()
                .enumerate()
                .map(|(j, &c)| c * (-(x - 2.0 * j as f64 + 4.0).powi(2) / (1.0 + j as f64)).exp())
                .sum()
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn m_p_sandwich(r in 0.0f64..50.0) {
            let m1 = m_p(r, Exponent::One);
            for p in Exponent::ALL {
                let m = 2.0 * m_p(r, p);
                prop_assert!(m >= m1 * (1.0 - 1e-14) && m <= 2.0 * m1 * (1.0 + 1e-14));
            }
        }

        #[test]
        fn k_monotone_bounded_sandwiched(seed in prop::collection::vec(-2.0f64..2.0, 5), s in -8.0f64..6.0) {
            let u = random_u(&seed);
            let g = *u.grid();
            for p in FINITE {
                let pf = p.finite().unwrap();
                let np = weighted_norm(&u, p, WeightSpec::None).unwrap().value;
                let k0 = k_functional_closed(&u, s, p).value;
                let k1 = k_functional_closed(&u, s + 0.5, p).value;
                prop_assert!(k0 <= k1 * (1.0 + 1e-12));
                prop_assert!(k1 <= np * (1.0 + 1e-12));
                let m1 = trapezoid(&g, |i| (u.values()[i].abs() * m_p_exp(s + g.x(i).abs(), Exponent::One)).powf(pf));
                let kp = k0.powf(pf);
                prop_assert!(kp >= 2f64.powf(-pf) * m1 * (1.0 - 1e-12));
                prop_assert!(kp <= m1 * (1.0 + 1e-12));
            }
        }

        #[test]
        fn closed_form_equals_infimum(seed in prop::collection::vec(-2.0f64..2.0, 5), s in -10.0f64..10.0) {
            let u = random_u(&seed);
            for p in FINITE {
                let a = k_functional_closed(&u, s, p).value;
                let b = k_functional_inf(&u, s, p).unwrap().value;
                let c = k_functional_pointwise(&u, s, p).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
                prop_assert!((a - c).abs() <= 1e-8 * a.max(1e-300));
            }
        }
    }
}
