//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p wavedecay-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use wavedecay_core::decay::{fit_rate, theorem_experiment_with, verify_lemma_c1, FitModel, MKernel, TheoremConfig, TheoremReport};
use wavedecay_core::grid::{weighted_norm, Exponent, Grid1D, GridFunction, WeightSpec};
use wavedecay_core::kfunctional::{
    k_functional_closed, k_functional_inf, k_functional_pointwise, log_spaced, verify_interpolation, DataFamily, HalfLineShift,
    InterpolationSetup,
};
use wavedecay_core::nonlinear::{evolve_burgers, evolve_kdvb, NonlinearOptions};
use wavedecay_core::profiles::{construct_burgers_profile, construct_kdvb_profile, kdvb_residual, FluxSpec, ProfileError, WaveProfile};
use wavedecay_core::semigroups::{
    certificate_energy, evolve_kdvb_linear, evolve_parabolic, find_certificate, KdvbLinearStepper, LinearOperatorSpec, LinearOptions,
};
use wavedecay_core::trajectory::{SnapshotSchedule, Trajectory};

struct Outcome {
    pass: bool,
    detail: String,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + x.exp())
}

fn periodic(l: f64, n: usize) -> Grid1D {
    Grid1D::new(-l, l - 2.0 * l / n as f64, n).unwrap()
}

fn kdvb_flux() -> FluxSpec {
    FluxSpec::KdvbCubic { b: 2.0 }
}

/// Sup error against the logistic on grid nodes in `[−20, 20]` and at
/// off-grid points.
fn logistic_error(p: &WaveProfile) -> f64 {
    let on_grid = p
        .grid()
        .points()
        .zip(p.phi.values())
        .filter(|(x, _)| x.abs() <= 20.0)
        .map(|(x, v)| (v - logistic(x)).abs())
        .fold(0.0, f64::max);
    let off_grid = (0..=4000).map(|j| -20.0 + 0.01 * j as f64 + 0.0037).filter(|x| *x <= 20.0).map(|x| (p.value_at(x) - logistic(x)).abs());
    off_grid.fold(on_grid, f64::max)
}

fn c1_burgers_profile() -> Outcome {
    let grid = Grid1D::symmetric(40.0, 8001).unwrap();
    let p = construct_burgers_profile(&FluxSpec::BurgersQuadratic, &grid).unwrap();
    let err = logistic_error(&p);
    Outcome { pass: err <= 1e-8, detail: format!("sup error {err:.2e}") }
}

fn c2_kdvb_profile() -> Outcome {
    let grid = Grid1D::symmetric(40.0, 8001).unwrap();
    let p = construct_kdvb_profile(&kdvb_flux(), 3.0, &grid).unwrap();
    let err = logistic_error(&p);
    let res = kdvb_residual(&p).unwrap_or(f64::INFINITY);
    Outcome { pass: err <= 1e-6 && res <= 1e-6, detail: format!("sup error {err:.2e}, ODE residual {res:.2e}") }
}

fn c3_threshold() -> Outcome {
    let grid = Grid1D::symmetric(40.0, 4001).unwrap();
    let rejected = matches!(construct_kdvb_profile(&kdvb_flux(), 1.0, &grid), Err(ProfileError::BelowThreshold { .. }));
    let boundary = match construct_kdvb_profile(&kdvb_flux(), 2.0 * 2f64.sqrt(), &grid) {
        Ok(p) => format!("accepted, φ(−20) = {:.6}", p.value_at(-20.0)),
        Err(e) => format!("rejected ({e})"),
    };
    Outcome { pass: rejected, detail: format!("α = 1 rejected: {rejected}; at α = 2√2 (informational): {boundary}") }
}

fn random_function(rng: &mut StdRng, grid: Grid1D) -> GridFunction {
    let terms: Vec<(u8, f64, f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| (rng.gen_range(0..3u8), rng.gen_range(-2.0..2.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.3..3.0)))
        .collect();
    GridFunction::from_fn(grid, |x| {
        terms
            .iter()
            .map(|&(kind, a, c, w)| {
                let y = (x - c) / w;
                a * match kind {
                    0 => (-y * y).exp(),
                    1 => (-y.abs()).exp(),
                    _ => (1.0 + y * y).powf(-2.0),
                }
            })
            .sum()
    })
    .unwrap()
}

fn c4_kfunctional() -> Outcome {
    let grid = Grid1D::symmetric(60.0, 2401).unwrap();
    let mut rng = StdRng::seed_from_u64(20240501);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = random_function(&mut rng, grid);
        for p in [Exponent::One, Exponent::Two, Exponent::Four] {
            for s in [0.05, 0.5, 2.0, 10.0] {
                let closed = k_functional_closed(&u, s, p).value;
                let inf = k_functional_inf(&u, s, p).unwrap().value;
                let point = k_functional_pointwise(&u, s, p).unwrap();
                worst = worst.max((closed - inf).abs() / closed).max((closed - point).abs() / closed);
            }
        }
    }
    Outcome { pass: worst <= 1e-6, detail: format!("largest relative disagreement {worst:.2e}") }
}

fn c5_interpolation() -> Outcome {
    let grid = Grid1D::new(-4000.0, 0.0, 16001).unwrap();
    let v = DataFamily::HalfLinePoly { k: 3.0 }.sample(&grid).unwrap();
    let probe = DataFamily::Exponential { rho: 2.0 }.sample(&grid).unwrap();
    let setup = InterpolationSetup {
        p: Exponent::Inf,
        k: 3.0,
        l: 1.5,
        t_grid: log_spaced(1.0, 1e3, 61),
        bound: 1.0,
        c0: 1.0,
        slack: 1e-6,
    };
    let rep = verify_interpolation(&HalfLineShift, &v, &[probe], &setup).unwrap();
    let band = rep.sup_ratio / rep.inf_ratio;
    Outcome {
        pass: rep.precondition.ok && rep.inf_ratio > 0.0 && band <= 4.0,
        detail: format!("(1+t)^1.5·‖S_t v‖ in [{:.4}, {:.4}], band factor {band:.3}", rep.inf_ratio, rep.sup_ratio),
    }
}

fn theorem_line(r: &TheoremReport) -> String {
    let fits: Vec<String> = r
        .checks
        .iter()
        .map(|c| match c.fit {
            Some(f) => format!("p={} m={}: {:.3}±{:.3} (target {})", c.p, c.m, f.exponent, f.stderr, c.target),
            None => format!("p={} m={}: no fit", c.p, c.m),
        })
        .collect();
    format!("{}; monotone in m: {}; mass drift {:.1e}", fits.join(", "), r.monotone_in_m, r.mass_drift)
}

fn c6_thm31(mass: &mut Vec<(String, f64, f64)>) -> Outcome {
    let cfg = TheoremConfig::thm31();
    let r = theorem_experiment_with(&cfg, |t| mass.push(("thm31".into(), t.mass_drift(), cfg.t_end))).unwrap();
    let rates_ok = r.checks.iter().all(|c| c.pass);
    Outcome { pass: rates_ok && r.monotone_in_m && !r.degenerate, detail: theorem_line(&r) }
}

fn c7_thm42(mass: &mut Vec<(String, f64, f64)>) -> Outcome {
    let cfg = TheoremConfig::thm42();
    let r = theorem_experiment_with(&cfg, |t| mass.push(("thm42".into(), t.mass_drift(), cfg.t_end))).unwrap();
    Outcome { pass: r.checks.iter().all(|c| c.pass) && !r.degenerate, detail: theorem_line(&r) }
}

fn exponential_fit_final_half(traj: &Trajectory, norm: impl Fn(&GridFunction) -> f64, t_end: f64) -> wavedecay_core::decay::DecayFit {
    let series: Vec<(f64, f64)> = traj.times.iter().zip(&traj.snapshots).map(|(&t, s)| (t, norm(s))).collect();
    fit_rate(&series, FitModel::Exponential, [0.5 * t_end, t_end]).unwrap()
}

fn c8_parabolic_exponential() -> Outcome {
    let grid = Grid1D::symmetric(60.0, 2401).unwrap();
    let profile = construct_burgers_profile(&FluxSpec::BurgersQuadratic, &grid).unwrap();
    let c = profile.phi.map(|p| 2.0 * p - 1.0).unwrap();
    let op = LinearOperatorSpec::parabolic(c, GridFunction::zeros(grid)).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| (-x * x).exp()).unwrap();
    let t_end = 40.0;
    let opts = LinearOptions { schedule: SnapshotSchedule::Uniform { interval: 0.5 }, ..Default::default() };
    let traj = evolve_parabolic(&op, &u0, t_end, 0.01, &opts).unwrap();
    let w = WeightSpec::Exponential { rho: 0.3 };
    let fit = exponential_fit_final_half(&traj, |s| weighted_norm(s, Exponent::Inf, w).unwrap().value, t_end);
    let rate = -fit.exponent;
    Outcome {
        pass: rate >= 0.05 && fit.stderr < 0.1 * rate,
        detail: format!("rate {rate:.4} (stderr {:.1e}), predicted min(ρ−ρ², 1/4) = 0.21", fit.stderr),
    }
}

fn kdvb_coefficient(grid: &Grid1D) -> GridFunction {
    let profile = construct_kdvb_profile(&kdvb_flux(), 3.0, grid).unwrap();
    let g = kdvb_flux();
    profile.phi.map(|p| g.d1(p)).unwrap()
}

fn l2_periodic(u: &[f64], dx: f64) -> f64 {
    (u.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
}

fn c9_contraction() -> Outcome {
    let grid = periodic(40.0, 1024);
    let c = kdvb_coefficient(&grid);
    let cp_max = c.derivative().values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let op = LinearOperatorSpec::kdvb(3.0, c, GridFunction::zeros(grid)).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| (-(x / 2.0).powi(2)).exp() * (3.0 * x).cos()).unwrap();
    let mut st = KdvbLinearStepper::new(&op, &u0, 0.01).unwrap();
    let mut prev = l2_periodic(u0.values(), grid.dx());
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..2000 {
        st.step();
        let now = l2_periodic(&st.state(), grid.dx());
        worst = worst.max((now - prev) / prev);
        prev = now;
    }
    Outcome {
        pass: cp_max <= 1e-12 && worst <= 1e-8,
        detail: format!("max c′ = {cp_max:.1e}; largest relative L² increase per step {worst:.2e} over 2000 steps"),
    }
}

fn c10_certificate() -> Outcome {
    let grid = periodic(60.0, 2048);
    let c = kdvb_coefficient(&grid);
    let cert = find_certificate(&c, 3.0, 40).unwrap();
    if !cert.is_valid() {
        return Outcome { pass: false, detail: format!("no valid certificate: sup F_ρ = {:.3e}", cert.sup_f_rho) };
    }
    let op = LinearOperatorSpec::kdvb(3.0, c, GridFunction::zeros(grid)).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| (-x * x).exp()).unwrap();
    let t_end = 20.0;
    let opts = LinearOptions { schedule: SnapshotSchedule::Uniform { interval: 0.25 }, ..Default::default() };
    let traj = evolve_kdvb_linear(&op, &u0, t_end, 0.01, &opts).unwrap();
    let fit = exponential_fit_final_half(&traj, |s| certificate_energy(&cert, s).sqrt(), t_end);
    let rate = -fit.exponent;
    Outcome {
        pass: cert.sup_f_rho < 0.0 && rate >= 0.5 * cert.gamma,
        detail: format!(
            "ρ = {:.3}, sup F_ρ = {:.4}, γ/2 = {:.4}; measured rate {rate:.4}",
            cert.rho,
            cert.sup_f_rho,
            0.5 * cert.gamma
        ),
    }
}

fn c11_lemma() -> Outcome {
    let coarse = log_spaced(1.0, 1e4, 121);
    let fine = log_spaced(1.0, 1e4, 481);
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, b) in [(1.5, 2.5), (1.0, 2.0), (0.5, 2.0)] {
        let r0 = verify_lemma_c1(a, b, MKernel::N, &coarse, 1e-7).unwrap();
        let r1 = verify_lemma_c1(a, b, MKernel::N, &fine, 1e-10).unwrap();
        let change = (r1.sup_scaled - r0.sup_scaled).abs() / r1.sup_scaled;
        pass &= r1.sup_scaled.is_finite() && change < 0.01 && r1.min_scaled_tail > 0.0;
        parts.push(format!("(α,β)=({a},{b}): sup {:.4}, refinement change {change:.1e}, tail min {:.4}", r1.sup_scaled, r1.min_scaled_tail));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c12_conservation(mass: &[(String, f64, f64)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, drift, t) in mass {
        let ok = *drift <= 1e-8 * (1.0 + t);
        pass &= ok;
        parts.push(format!("{name} mass drift {drift:.1e}"));
    }
    let opts = NonlinearOptions { schedule: SnapshotSchedule::Uniform { interval: 1.0 }, ..Default::default() };
    let t_end = 10.0;
    let grid = periodic(60.0, 1024);
    let burgers = construct_burgers_profile(&FluxSpec::BurgersQuadratic, &grid).unwrap();
    let kdvb = construct_kdvb_profile(&kdvb_flux(), 3.0, &grid).unwrap();
    for (label, profile) in [("burgers", &burgers), ("kdvb", &kdvb)] {
        for h in [0.3, -1.7] {
            let w0 = profile.shifted(h, &grid).sub(&profile.phi).unwrap();
            let traj = match label {
                "burgers" => evolve_burgers(&profile.flux, profile, &w0, t_end, 0.01, &opts).unwrap(),
                _ => evolve_kdvb(&profile.flux, 3.0, profile, &w0, t_end, 0.01, &opts).unwrap(),
            };
            let drift = traj.snapshots.iter().map(|s| s.sub(&w0).unwrap().max_abs()).fold(0.0, f64::max) / t_end;
            let m = traj.mass_drift();
            pass &= drift <= 1e-10 && m <= 1e-8 * (1.0 + t_end);
            parts.push(format!("{label} translate h={h}: drift {drift:.1e}/unit time, mass drift {m:.1e}"));
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn main() -> ExitCode {
    let mut mass: Vec<(String, f64, f64)> = Vec::new();
    let secs = Duration::from_secs;
    let mut criteria: Vec<(&str, Duration, Box<dyn FnOnce(&mut Vec<(String, f64, f64)>) -> Outcome>)> = vec![
        ("1 exact Burgers profile", secs(1), Box::new(|_| c1_burgers_profile())),
        ("2 exact KdV-Burgers profile", secs(5), Box::new(|_| c2_kdvb_profile())),
        ("3 existence threshold", secs(5), Box::new(|_| c3_threshold())),
        ("4 K-functional equality", secs(10), Box::new(|_| c4_kfunctional())),
        ("5 interpolation sharpness", secs(1), Box::new(|_| c5_interpolation())),
        ("6 Burgers algebraic rate", secs(300), Box::new(c6_thm31)),
        ("7 KdV-Burgers algebraic rate", secs(600), Box::new(c7_thm42)),
        ("8 parabolic exponential decay", secs(60), Box::new(|_| c8_parabolic_exponential())),
        ("9 L2 contraction", secs(60), Box::new(|_| c9_contraction())),
        ("10 decay certificate", secs(120), Box::new(|_| c10_certificate())),
        ("11 convolution estimate", secs(30), Box::new(|_| c11_lemma())),
        ("12 conservation and steady states", Duration::MAX, Box::new(|m| c12_conservation(m))),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria.drain(..) {
        let start = Instant::now();
        let out = run(&mut mass);
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        if !pass {
            failures += 1;
        }
        let budget = if limit == Duration::MAX { String::new() } else { format!(" / {}s", limit.as_secs()) };
        println!(
            "[{}] {name}: {} ({:.2}s{budget}{})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time budget" }
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
