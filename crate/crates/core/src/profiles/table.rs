//! Dense profile tables with cubic Hermite evaluation and exponential tails.

use serde::{Deserialize, Serialize};

/// Exponential approach to an end state outside the tabulated range:
/// `φ(x) = limit + (value − limit)·e^{rate (x − anchor)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub anchor: f64,
    pub value: f64,
    pub limit: f64,
    pub rate: f64,
}

impl Tail {
    #[inline]
    fn eval(&self, x: f64) -> (f64, f64) {
        let e = (self.value - self.limit) * (self.rate * (x - self.anchor)).exp();
        (self.limit + e, self.rate * e)
    }
}

/// Profile values and slopes on a uniform fine mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub x0: f64,
    pub step: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub left: Tail,
    pub right: Tail,
}

impl ProfileTable {
    pub fn x_first(&self) -> f64 {
        self.x0
    }

    pub fn x_last(&self) -> f64 {
        self.x0 + (self.phi.len() - 1) as f64 * self.step
    }

    /// `(φ(x), φ′(x))`: cubic Hermite inside the table, exponential tails outside.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x <= self.x_first() {
            return self.left.eval(x);
        }
        if x >= self.x_last() {
            return self.right.eval(x);
        }
        let s = (x - self.x0) / self.step;
        let i = (s.floor() as usize).min(self.phi.len() - 2);
        let t = s - i as f64;
        let h = self.step;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.dphi[i] * h, self.dphi[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let value = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
        let d = ((6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, d)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

/// Five-point stencil derivatives of order 1, 2 (fourth order) and 3 (second
/// order) at interior index `i` of a uniformly spaced sequence.
pub(crate) fn stencil_derivatives(v: &[f64], i: usize, h: f64) -> (f64, f64, f64) {
    let (m2, m1, c, p1, p2) = (v[i - 2], v[i - 1], v[i], v[i + 1], v[i + 2]);
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    let d3 = (-m2 + 2.0 * m1 - 2.0 * p1 + p2) / (2.0 * h * h * h);
    (d1, d2, d3)
}
