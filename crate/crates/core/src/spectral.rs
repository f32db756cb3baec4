//! Periodic Fourier tools on a uniform grid: spectral derivatives, the
//! integrating-factor RK4 stepper, and an aliasing indicator.
//!
//! The `n` grid points are treated as one period of length `n·dx`, i.e. the
//! point after `xmax` is `xmin`. Functions that vanish at both ends extend
//! smoothly.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid1D;

pub type C64 = Complex64;

#[derive(Clone)]
pub struct Spectral {
    n: usize,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid1D) -> Self {
        let n = grid.len();
        let period = n as f64 * grid.dx();
        let xi = (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * k / period
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self { n, xi, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Angular wavenumbers in FFT order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Index of the Nyquist mode, present only for even `n`.
    fn nyquist(&self) -> Option<usize> {
        (self.n % 2 == 0).then_some(self.n / 2)
    }

    pub fn forward(&self, u: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn forward_into(&self, u: &[f64], out: &mut [C64]) {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = C64::new(v, 0.0);
        }
        self.forward.process(out);
    }

    /// Inverse transform, real part, normalized.
    pub fn inverse(&self, uh: &[C64]) -> Vec<f64> {
        let mut buf = uh.to_vec();
        let mut out = vec![0.0; self.n];
        self.inverse_into(&mut buf, &mut out);
        out
    }

    /// Inverse transform in place of `buf`, real part written to `out`.
    pub fn inverse_into(&self, buf: &mut [C64], out: &mut [f64]) {
        self.inverse.process(buf);
        let s = 1.0 / self.n as f64;
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * s;
        }
    }

    /// Multiply by `(iξ)^order`, zeroing the Nyquist mode for odd orders.
    pub fn differentiate_hat(&self, uh: &mut [C64], order: u32) {
        for (v, &k) in uh.iter_mut().zip(&self.xi) {
            *v *= C64::new(0.0, k).powu(order);
        }
        if order % 2 == 1 {
            if let Some(j) = self.nyquist() {
                uh[j] = C64::new(0.0, 0.0);
            }
        }
    }

    pub fn derivative(&self, u: &[f64], order: u32) -> Vec<f64> {
        let mut uh = self.forward(u);
        self.differentiate_hat(&mut uh, order);
        self.inverse(&uh)
    }

    /// Fraction of spectral energy in the top third of the resolved band.
    pub fn aliasing_fraction(&self, uh: &[C64]) -> f64 {
        let kmax = self.xi.iter().fold(0.0f64, |m, &k| m.max(k.abs()));
        let cut = 2.0 * kmax / 3.0;
        let (mut hi, mut total) = (0.0, 0.0);
        for (v, &k) in uh.iter().zip(&self.xi) {
            let e = v.norm_sqr();
            total += e;
            if k.abs() > cut {
                hi += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            hi / total
        }
    }
}

/// Lawson integrating-factor RK4 for `û_t = L(ξ)û + N̂(û)` with a diagonal
/// linear symbol.
#[derive(Debug, Clone)]
pub struct IfRk4 {
    dt: f64,
    e_half: Vec<C64>,
    e_full: Vec<C64>,
    k: [Vec<C64>; 4],
    stage: Vec<C64>,
}

impl IfRk4 {
    pub fn new(symbol: &[C64], dt: f64) -> Self {
        let e_half: Vec<C64> = symbol.iter().map(|&l| (l * (0.5 * dt)).exp()).collect();
        let e_full = e_half.iter().map(|e| e * e).collect();
        let n = symbol.len();
        let zeros = vec![C64::new(0.0, 0.0); n];
        Self { dt, e_half, e_full, k: [zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone()], stage: zeros }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step; `nonlinear(state, out)` writes `N̂(state)` into `out`.
    pub fn step(&mut self, uh: &mut [C64], mut nonlinear: impl FnMut(&[C64], &mut [C64])) {
        let dt = self.dt;
        let (eh, ef) = (&self.e_half, &self.e_full);
        let [k1, k2, k3, k4] = &mut self.k;
        let stage = &mut self.stage;

        nonlinear(uh, k1);
        for j in 0..uh.len() {
            stage[j] = eh[j] * (uh[j] + 0.5 * dt * k1[j]);
        }
        nonlinear(stage, k2);
        for j in 0..uh.len() {
            stage[j] = eh[j] * uh[j] + 0.5 * dt * k2[j];
        }
        nonlinear(stage, k3);
        for j in 0..uh.len() {
            stage[j] = ef[j] * uh[j] + dt * eh[j] * k3[j];
        }
        nonlinear(stage, k4);
        for j in 0..uh.len() {
            uh[j] = ef[j] * uh[j] + dt / 6.0 * (ef[j] * k1[j] + 2.0 * eh[j] * (k2[j] + k3[j]) + k4[j]);
        }
    }
}

/// Fourth-order exponential time differencing (Cox–Matthews) with the
/// `φ`-function coefficients evaluated by contour averaging. Fixed points of
/// `Lû + N̂(û) = 0` are fixed points of the discrete step.
#[derive(Debug, Clone)]
pub struct Etdrk4 {
    dt: f64,
    e_half: Vec<C64>,
    e_full: Vec<C64>,
    q: Vec<C64>,
    f: [Vec<C64>; 3],
    n: [Vec<C64>; 4],
    a: Vec<C64>,
    b: Vec<C64>,
}

impl Etdrk4 {
    const CONTOUR: usize = 32;

    pub fn new(symbol: &[C64], dt: f64) -> Self {
        let m = Self::CONTOUR;
        let roots: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / m as f64)).collect();
        let len = symbol.len();
        let mut q = Vec::with_capacity(len);
        let mut f = [Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len)];
        for &l in symbol {
            let z = l * dt;
            let (mut sq, mut s1, mut s2, mut s3) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for &r in &roots {
                let zr = z + r;
                let e = zr.exp();
                let z3 = zr * zr * zr;
                sq += ((zr * 0.5).exp() - 1.0) / zr;
                s1 += (-4.0 - zr + e * (4.0 - 3.0 * zr + zr * zr)) / z3;
                s2 += (2.0 + zr + e * (zr - 2.0)) / z3;
                s3 += (-4.0 - 3.0 * zr - zr * zr + e * (4.0 - zr)) / z3;
            }
            let w = dt / m as f64;
            q.push(sq * w);
            f[0].push(s1 * w);
            f[1].push(s2 * w);
            f[2].push(s3 * w);
        }
        let e_half: Vec<C64> = symbol.iter().map(|&l| (l * (0.5 * dt)).exp()).collect();
        let e_full = e_half.iter().map(|e| e * e).collect();
        let zeros = vec![C64::new(0.0, 0.0); len];
        Self {
            dt,
            e_half,
            e_full,
            q,
            f,
            n: [zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone()],
            a: zeros.clone(),
            b: zeros,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step; `nonlinear(state, out)` writes `N̂(state)` into `out`.
    pub fn step(&mut self, uh: &mut [C64], mut nonlinear: impl FnMut(&[C64], &mut [C64])) {
        let (eh, ef, q) = (&self.e_half, &self.e_full, &self.q);
        let [nu, na, nb, nc] = &mut self.n;
        let (a, b) = (&mut self.a, &mut self.b);

        nonlinear(uh, nu);
        for j in 0..uh.len() {
            a[j] = eh[j] * uh[j] + q[j] * nu[j];
        }
        nonlinear(a, na);
        for j in 0..uh.len() {
            b[j] = eh[j] * uh[j] + q[j] * na[j];
        }
        nonlinear(b, nb);
        for j in 0..uh.len() {
            b[j] = eh[j] * a[j] + q[j] * (2.0 * nb[j] - nu[j]);
        }
        nonlinear(b, nc);
        let [f1, f2, f3] = &self.f;
        for j in 0..uh.len() {
            uh[j] = ef[j] * uh[j] + f1[j] * nu[j] + 2.0 * f2[j] * (na[j] + nb[j]) + f3[j] * nc[j];
        }
    }
}
