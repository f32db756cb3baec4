//! Profile construction by RK4 integration of the profile ODEs.

use log::warn;

use super::flux::{fkpp_reduction, FluxEval};
use super::table::{stencil_derivatives, ProfileTable, Tail};
use super::{FluxSpec, ProfileDiagnostics, ProfileError, ProfileFamily, WaveProfile};
use crate::grid::Grid1D;

/// Integration settings shared by both constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub ode_step: f64,
    /// Distance from the saddle along the stable eigenvector (KdV–Burgers).
    pub seed: f64,
    /// Integration stops once the distance to the end state is below this.
    pub tail_tol: f64,
    /// Hard cap on the integrated length in each direction.
    pub max_extent: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { ode_step: 1e-3, seed: 1e-8, tail_tol: 1e-12, max_extent: 400.0 }
    }
}

const SIGN_SAMPLES: usize = 10_000;
const CONVEXITY_RANGE: [f64; 2] = [-0.1, 1.1];
const OVERSHOOT_TOL: f64 = 1e-10;

fn rk4<const N: usize>(y: [f64; N], h: f64, rhs: &impl Fn([f64; N]) -> [f64; N]) -> [f64; N] {
    let add = |a: [f64; N], b: [f64; N], s: f64| {
        let mut out = a;
        for i in 0..N {
            out[i] += s * b[i];
        }
        out
    };
    let k1 = rhs(y);
    let k2 = rhs(add(y, k1, 0.5 * h));
    let k3 = rhs(add(y, k2, 0.5 * h));
    let k4 = rhs(add(y, k3, h));
    let mut out = y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn check_normalized(f: &FluxEval) -> Result<(), ProfileError> {
    let (f0, f1) = (f.value(0.0), f.value(1.0));
    let scale = f.d1(0.0).abs().max(f.d1(1.0).abs()).max(1.0);
    if f0.abs() > 1e-12 * scale || f1.abs() > 1e-12 * scale {
        return Err(ProfileError::NotNormalized { f0, f1 });
    }
    Ok(())
}

/// Burgers-type profile: `φ′ = f(φ)`, `φ(0) = ½`, integrated in both directions.
pub fn construct_burgers_profile(flux: &FluxSpec, grid: &Grid1D) -> Result<WaveProfile, ProfileError> {
    construct_burgers_profile_with(flux, grid, ProfileOptions::default())
}

pub fn construct_burgers_profile_with(
    flux: &FluxSpec,
    grid: &Grid1D,
    opts: ProfileOptions,
) -> Result<WaveProfile, ProfileError> {
    flux.validate()?;
    let f = flux.evaluator();
    check_normalized(&f)?;
    for i in 1..SIGN_SAMPLES {
        let r = i as f64 / SIGN_SAMPLES as f64;
        let v = f.value(r);
        if v >= 0.0 {
            return Err(ProfileError::NoMonotoneProfile {
                reason: format!("f({r}) = {v:e} is not negative on (0, 1)"),
                at: Some(r),
            });
        }
    }
    let (fp0, fp1) = (f.d1(0.0), f.d1(1.0));
    if !(fp0 < 0.0 && fp1 > 0.0) {
        warn!("degenerate end state: f'(0) = {fp0}, f'(1) = {fp1}; tails are not exponential");
    }

    let h = opts.ode_step;
    let coarse = burgers_branches(&f, h, &opts)?;
    let fine = burgers_branches(&f, 0.5 * h, &opts)?;
    let richardson_error = richardson(&coarse.0, &fine.0).max(richardson(&coarse.1, &fine.1)) / 15.0;

    let (left, right) = coarse;
    let mut phi: Vec<f64> = left.iter().rev().copied().collect();
    phi.extend_from_slice(&right[1..]);
    let dphi: Vec<f64> = phi.iter().map(|&p| f.value(p)).collect();
    let x0 = -((left.len() - 1) as f64) * h;
    let table = with_tails(x0, h, phi, dphi, fp1.max(0.0), fp0.min(0.0));
    let residual = table_residual(&table, grid, |_, d1, d2, _, p| (-d2 + f.d1(p) * d1).abs());
    let diagnostics = ProfileDiagnostics {
        ode_step: h,
        richardson_error,
        residual,
        convex_on_checked_range: None,
        convexity_range: None,
    };
    Ok(WaveProfile::new(grid, table, flux.clone(), ProfileFamily::Viscous, None, diagnostics))
}

/// Forward and backward branches from `φ(0) = ½`, both starting at index 0.
fn burgers_branches(f: &FluxEval, h: f64, opts: &ProfileOptions) -> Result<(Vec<f64>, Vec<f64>), ProfileError> {
    let mut branches = [Vec::new(), Vec::new()];
    for (dir, branch) in [-1.0f64, 1.0].into_iter().zip(branches.iter_mut()) {
        let target = if dir < 0.0 { 1.0 } else { 0.0 };
        let rhs = |y: [f64; 1]| [f.value(y[0])];
        let mut y = [0.5];
        branch.push(0.5);
        let max_steps = (opts.max_extent / h).ceil() as usize;
        for j in 1..=max_steps {
            y = rk4(y, dir * h, &rhs);
            let p = y[0];
            if !p.is_finite() || p < -OVERSHOOT_TOL || p > 1.0 + OVERSHOOT_TOL {
                return Err(ProfileError::NumericalBlowup { x: dir * j as f64 * h, value: p });
            }
            branch.push(p);
            if (p - target).abs() < opts.tail_tol {
                break;
            }
        }
    }
    let [left, right] = branches;
    Ok((left, right))
}

fn richardson(coarse: &[f64], fine: &[f64]) -> f64 {
    coarse
        .iter()
        .enumerate()
        .filter_map(|(j, &c)| fine.get(2 * j).map(|&v| (c - v).abs()))
        .fold(0.0, f64::max)
}

fn with_tails(x0: f64, h: f64, phi: Vec<f64>, dphi: Vec<f64>, left_rate: f64, right_rate: f64) -> ProfileTable {
    let last = phi.len() - 1;
    let left = Tail { anchor: x0, value: phi[0], limit: 1.0, rate: left_rate };
    let right = Tail { anchor: x0 + last as f64 * h, value: phi[last], limit: 0.0, rate: right_rate };
    ProfileTable { x0, step: h, phi, dphi, left, right }
}

/// Sup over table nodes inside the grid interior of `res(x, φ′, φ″, φ‴, φ)`,
/// derivatives by five-point stencils at twice the table step.
fn table_residual(
    table: &ProfileTable,
    grid: &Grid1D,
    res: impl Fn(f64, f64, f64, f64, f64) -> f64,
) -> f64 {
    let n = table.phi.len();
    let h2 = 2.0 * table.step;
    let margin = 2.0 * grid.dx();
    let (lo, hi) = (grid.xmin() + margin, grid.xmax() - margin);
    let mut sup = 0.0f64;
    let mut buf = [0.0; 5];
    for i in 4..n.saturating_sub(4) {
        let x = table.x0 + i as f64 * table.step;
        if x < lo || x > hi {
            continue;
        }
        for (k, b) in buf.iter_mut().enumerate() {
            *b = table.phi[i + 2 * k - 4];
        }
        let (d1, d2, d3) = stencil_derivatives(&buf, 2, h2);
        sup = sup.max(res(x, d1, d2, d3, table.phi[i]));
    }
    sup
}

/// KdV–Burgers profile: `φ″ = αφ′ − g(φ)` integrated backward along the
/// stable manifold of the saddle at `φ = 0`, then translated to `φ(0) = ½`.
pub fn construct_kdvb_profile(g: &FluxSpec, alpha: f64, grid: &Grid1D) -> Result<WaveProfile, ProfileError> {
    construct_kdvb_profile_with(g, alpha, grid, ProfileOptions::default())
}

pub fn construct_kdvb_profile_with(
    g: &FluxSpec,
    alpha: f64,
    grid: &Grid1D,
    opts: ProfileOptions,
) -> Result<WaveProfile, ProfileError> {
    g.validate()?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ProfileError::InvalidFlux(format!("alpha must be positive, got {alpha}")));
    }
    let ge = g.evaluator();
    check_normalized(&ge)?;
    let (gp0, gp1) = (ge.d1(0.0), ge.d1(1.0));
    if !(gp0 < 0.0 && gp1 > 0.0) {
        return Err(ProfileError::NoMonotoneProfile {
            reason: format!("end-state condition g'(0) < 0 < g'(1) fails: g'(0) = {gp0}, g'(1) = {gp1}"),
            at: None,
        });
    }
    let threshold = 2.0 * gp1.sqrt();
    if alpha < threshold {
        return Err(ProfileError::BelowThreshold { alpha, threshold });
    }
    let convex = sample_range(CONVEXITY_RANGE, 1000).all(|r| ge.d2(r) > 0.0);
    if !convex {
        warn!("g is not strictly convex on [{}, {}]", CONVEXITY_RANGE[0], CONVEXITY_RANGE[1]);
    }

    let lambda_s = 0.5 * (alpha - (alpha * alpha - 4.0 * gp0).sqrt());
    let mu = 0.5 * (alpha - (alpha * alpha - 4.0 * gp1).max(0.0).sqrt());

    let h = opts.ode_step;
    let (phi, dphi) = kdvb_backward(&ge, alpha, lambda_s, h, &opts)?;
    let (fine, _) = kdvb_backward(&ge, alpha, lambda_s, 0.5 * h, &opts)?;
    let richardson_error = richardson(&phi, &fine) / 15.0;

    // phi[j] sits at x = −j·h before translation; reverse into increasing x.
    let n = phi.len();
    let phi: Vec<f64> = phi.into_iter().rev().collect();
    let dphi: Vec<f64> = dphi.into_iter().rev().collect();
    let x_seed_rel = half_crossing(&phi, &dphi, h);
    let x0 = -x_seed_rel;
    let table = with_tails(x0, h, phi, dphi, mu, lambda_s);
    debug_assert_eq!(table.phi.len(), n);

    let residual = table_residual(&table, grid, |_, d1, d2, d3, p| (ge.d1(p) * d1 + d3 - alpha * d2).abs());
    let diagnostics = ProfileDiagnostics {
        ode_step: h,
        richardson_error,
        residual,
        convex_on_checked_range: Some(convex),
        convexity_range: Some(CONVEXITY_RANGE),
    };
    Ok(WaveProfile::new(grid, table, g.clone(), ProfileFamily::Kdvb, Some(alpha), diagnostics))
}

fn sample_range(range: [f64; 2], n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| range[0] + (range[1] - range[0]) * i as f64 / n as f64)
}

/// Values and slopes at `x = 0, −h, −2h, …` starting from the seeded saddle.
fn kdvb_backward(
    g: &FluxEval,
    alpha: f64,
    lambda_s: f64,
    h: f64,
    opts: &ProfileOptions,
) -> Result<(Vec<f64>, Vec<f64>), ProfileError> {
    let rhs = |y: [f64; 2]| [y[1], alpha * y[1] - g.value(y[0])];
    let mut y = [opts.seed, opts.seed * lambda_s];
    let mut phi = vec![y[0]];
    let mut dphi = vec![y[1]];
    let max_steps = (opts.max_extent / h).ceil() as usize;
    for j in 1..=max_steps {
        y = rk4(y, -h, &rhs);
        let x = -(j as f64) * h;
        if !y[0].is_finite() || y[0] > 1.0 + OVERSHOOT_TOL || y[0] < 0.0 {
            return Err(ProfileError::MonotonicityViolation { x, slope: y[1] });
        }
        if y[1] >= 0.0 && 1.0 - y[0] > 1e3 * opts.tail_tol {
            return Err(ProfileError::MonotonicityViolation { x, slope: y[1] });
        }
        phi.push(y[0]);
        dphi.push(y[1]);
        if 1.0 - y[0] < opts.tail_tol {
            return Ok((phi, dphi));
        }
    }
    Err(ProfileError::NoMonotoneProfile {
        reason: format!("trajectory did not reach φ = 1 within {} units", opts.max_extent),
        at: None,
    })
}

/// Position (relative to the first node) where the Hermite interpolant of a
/// decreasing table crosses ½.
fn half_crossing(phi: &[f64], dphi: &[f64], h: f64) -> f64 {
    let i = phi.iter().position(|&p| p <= 0.5).expect("table crosses 1/2").max(1) - 1;
    let (p0, p1, m0, m1) = (phi[i], phi[i + 1], dphi[i] * h, dphi[i + 1] * h);
    let eval = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * m1;
        (v - 0.5, d)
    };
    let mut t = (p0 - 0.5) / (p0 - p1);
    for _ in 0..50 {
        let (v, d) = eval(t);
        let step = v / d;
        t = (t - step).clamp(0.0, 1.0);
        if step.abs() < 1e-16 {
            break;
        }
    }
    (i as f64 + t) * h
}

/// Sup residual of `−φ″ + (f(φ))′ = 0` on the grid interior.
pub fn burgers_residual(profile: &WaveProfile) -> Option<f64> {
    let f = profile.flux.evaluator();
    let table = profile.table()?;
    Some(table_residual(table, profile.grid(), |_, d1, d2, _, p| (-d2 + f.d1(p) * d1).abs()))
}

/// Sup residual of `(g(φ))′ + φ‴ − αφ″ = 0` on the grid interior.
pub fn kdvb_residual(profile: &WaveProfile) -> Option<f64> {
    let alpha = profile.alpha?;
    let g = profile.flux.evaluator();
    let table = profile.table()?;
    Some(table_residual(table, profile.grid(), |_, d1, d2, d3, p| (g.d1(p) * d1 + d3 - alpha * d2).abs()))
}

/// Sup residual of `−αψ′ − ψ″ = f(ψ)` for `ψ(z) = 1 − φ(−z)`, with `f` the
/// reduced flux of the profile's `g` at speed 0 and `φ₋ = 1`.
pub fn fkpp_residual(profile: &WaveProfile) -> Option<f64> {
    let alpha = profile.alpha?;
    let (f, _) = fkpp_reduction(&profile.flux, 0.0, profile.phi_minus);
    let f = f.evaluator();
    let table = profile.table()?;
    Some(table_residual(table, profile.grid(), |_, d1, d2, _, p| {
        // ψ′(z) = φ′(x), ψ″(z) = −φ″(x) at x = −z.
        let psi = 1.0 - p;
        (-alpha * d1 + d2 - f.value(psi)).abs()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + x.exp())
    }

    fn sup_error(profile: &WaveProfile) -> f64 {
        let grid = profile.grid();
        grid.points()
            .zip(profile.phi.values())
            .map(|(x, &v)| (v - logistic(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn burgers_logistic() {
        let grid = Grid1D::symmetric(20.0, 4001).unwrap();
        let p = construct_burgers_profile(&FluxSpec::BurgersQuadratic, &grid).unwrap();
        assert!(sup_error(&p) < 1e-8, "{}", sup_error(&p));
        assert_eq!(p.value_at(0.0), 0.5);
        assert!(p.diagnostics.richardson_error < 1e-10);
        assert!(burgers_residual(&p).unwrap() < 1e-6);
    }

    #[test]
    fn burgers_sign_change_rejected() {
        let f = FluxSpec::polynomial(vec![0.0, 0.5, -1.5, 1.0]);
        let grid = Grid1D::symmetric(10.0, 101).unwrap();
        match construct_burgers_profile(&f, &grid) {
            Err(ProfileError::NoMonotoneProfile { at: Some(r), .. }) => {
                assert!(r > 0.0 && r < 0.5);
                let v = f.value(r);
                assert!(v >= 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn burgers_requires_normalized_flux() {
        let grid = Grid1D::symmetric(10.0, 101).unwrap();
        let f = FluxSpec::polynomial(vec![0.0, 0.0, 1.0]);
        assert!(matches!(construct_burgers_profile(&f, &grid), Err(ProfileError::NotNormalized { .. })));
    }

    #[test]
    fn kdvb_logistic() {
        let grid = Grid1D::symmetric(20.0, 4001).unwrap();
        let p = construct_kdvb_profile(&FluxSpec::KdvbCubic { b: 2.0 }, 3.0, &grid).unwrap();
        assert!(sup_error(&p) < 1e-6, "{}", sup_error(&p));
        assert!((p.value_at(0.0) - 0.5).abs() < 1e-14);
        assert!(kdvb_residual(&p).unwrap() < 1e-6);
        assert!(fkpp_residual(&p).unwrap() < 1e-6);
        assert_eq!(p.diagnostics.convex_on_checked_range, Some(false));
    }

    #[test]
    fn kdvb_threshold() {
        let grid = Grid1D::symmetric(20.0, 401).unwrap();
        let g = FluxSpec::KdvbCubic { b: 2.0 };
        match construct_kdvb_profile(&g, 1.0, &grid) {
            Err(ProfileError::BelowThreshold { threshold, .. }) => {
                assert!((threshold - 2.0 * 2f64.sqrt()).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(construct_kdvb_profile(&g, 2.9, &grid).is_ok());
    }

    #[test]
    fn profiles_decrease_and_reach_end_states() {
        let grid = Grid1D::symmetric(40.0, 1601).unwrap();
        for p in [
            construct_burgers_profile(&FluxSpec::BurgersQuadratic, &grid).unwrap(),
            construct_kdvb_profile(&FluxSpec::KdvbCubic { b: 2.0 }, 3.0, &grid).unwrap(),
            construct_kdvb_profile(&FluxSpec::KdvbCubic { b: 3.0 }, 4.0, &grid).unwrap(),
        ] {
            let v = p.phi.values();
            assert!((v[0] - 1.0).abs() + v[v.len() - 1].abs() <= 1e-6);
            for w in v.windows(2) {
                assert!(w[1] <= w[0]);
                if 1.0 - w[0] > 1e-14 && w[1] > 1e-300 {
                    assert!(w[1] < w[0]);
                }
            }
        }
    }

    #[test]
    fn shifted_profile_translates() {
        let grid = Grid1D::symmetric(20.0, 801).unwrap();
        let p = construct_burgers_profile(&FluxSpec::BurgersQuadratic, &grid).unwrap();
        let s = p.shifted(1.25, &grid);
        for (x, &v) in grid.points().zip(s.values()) {
            assert!((v - logistic(x - 1.25)).abs() < 1e-8);
        }
    }
}
