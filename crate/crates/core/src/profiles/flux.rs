//! Polynomial flux functions and the affine changes of variables that bring a
//! traveling-wave problem into normalized form (`φ₋ = 1`, `φ₊ = 0`, `c = 0`).

use serde::{Deserialize, Serialize};

use super::ProfileError;

const NORMALIZED_TOL: f64 = 1e-12;

/// Flux `f` (or `g`) of the conservation law.
///
/// Builtins are polynomials too; they keep their name so configs and sidecars
/// stay readable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxSpec {
    /// Coefficients in ascending order: `c₀ + c₁r + c₂r² + …`.
    Polynomial { coeffs: Vec<f64> },
    /// `r² − r`
    BurgersQuadratic,
    /// `2r(r−1)(b−r)`
    KdvbCubic { b: f64 },
}

impl FluxSpec {
    pub fn polynomial(coeffs: impl Into<Vec<f64>>) -> Self {
        FluxSpec::Polynomial {
            coeffs: coeffs.into(),
        }
    }

    /// Ascending coefficients, trailing zeros trimmed.
    pub fn coeffs(&self) -> Vec<f64> {
        let mut c = match self {
            FluxSpec::Polynomial { coeffs } => coeffs.clone(),
            FluxSpec::BurgersQuadratic => vec![0.0, -1.0, 1.0],
            // 2(r² − r)(b − r) = −2b r + 2(b+1) r² − 2 r³
            FluxSpec::KdvbCubic { b } => vec![0.0, -2.0 * b, 2.0 * (b + 1.0), -2.0],
        };
        while c.len() > 1 && c.last() == Some(&0.0) {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        c
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let c = self.coeffs();
        if c.iter().any(|v| !v.is_finite()) {
            return Err(ProfileError::InvalidFlux("non-finite coefficient".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        horner(&self.coeffs(), r)
    }

    #[inline]
    pub fn d1(&self, r: f64) -> f64 {
        horner(&derivative(&self.coeffs()), r)
    }

    #[inline]
    pub fn d2(&self, r: f64) -> f64 {
        horner(&derivative(&derivative(&self.coeffs())), r)
    }

    /// `f(0) = f(1) = 0` up to rounding.
    pub fn is_normalized(&self) -> bool {
        let scale = 1.0 + self.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        self.value(0.0).abs() <= NORMALIZED_TOL * scale && self.value(1.0).abs() <= NORMALIZED_TOL * scale
    }

    /// Pre-expanded evaluator for hot loops.
    pub fn evaluator(&self) -> FluxEval {
        let c0 = self.coeffs();
        let c1 = derivative(&c0);
        let c2 = derivative(&c1);
        FluxEval { c0, c1, c2 }
    }
}

/// Value, first and second derivative of a polynomial flux.
#[derive(Debug, Clone)]
pub struct FluxEval {
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl FluxEval {
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        horner(&self.c0, r)
    }
    #[inline]
    pub fn d1(&self, r: f64) -> f64 {
        horner(&self.c1, r)
    }
    #[inline]
    pub fn d2(&self, r: f64) -> f64 {
        horner(&self.c2, r)
    }
}

#[inline]
fn horner(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * r + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &a)| j as f64 * a)
        .collect()
}

/// Coefficients of `r ↦ p(a + b r)`.
fn compose_affine(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    // Horner in polynomial arithmetic: acc ← acc·(a + b r) + c_j
    let mut acc: Vec<f64> = vec![0.0];
    for &cj in c.iter().rev() {
        let mut next = vec![0.0; acc.len() + 1];
        for (i, &v) in acc.iter().enumerate() {
            next[i] += a * v;
            next[i + 1] += b * v;
        }
        next[0] += cj;
        acc = next;
    }
    acc
}

/// Affine bookkeeping between the original problem and its normalized form:
/// `u = shift + scale·ũ(x − speed·t)`, `f̃(r) = f(shift + scale·r)/scale + linear₀ + linear₁·r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub scale: f64,
    pub shift: f64,
    /// Constant and linear coefficient added to the rescaled flux.
    pub linear_added: [f64; 2],
    /// Frame speed removed (the chord slope).
    pub speed: f64,
}

impl NormalizationRecord {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            shift: 0.0,
            linear_added: [0.0, 0.0],
            speed: 0.0,
        }
    }

    /// Normalized state → original state.
    #[inline]
    pub fn to_original(&self, r: f64) -> f64 {
        self.shift + self.scale * r
    }

    /// Original state → normalized state.
    #[inline]
    pub fn to_normalized(&self, u: f64) -> f64 {
        (u - self.shift) / self.scale
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

/// Map end states to `(1, 0)` and remove the chord speed.
///
/// The chord speed is `c = (g(φ₊) − g(φ₋))/(φ₊ − φ₋)`; the returned flux
/// vanishes at `0` and `1`.
pub fn normalize_problem(
    flux: &FluxSpec,
    phi_minus: f64,
    phi_plus: f64,
) -> Result<(FluxSpec, NormalizationRecord), ProfileError> {
    flux.validate()?;
    let scale = phi_minus - phi_plus;
    if scale == 0.0 || !scale.is_finite() {
        return Err(ProfileError::DegenerateEndStates {
            phi_minus,
            phi_plus,
        });
    }
    let speed = (flux.value(phi_plus) - flux.value(phi_minus)) / (phi_plus - phi_minus);
    // Already normalized: keep the flux (and its builtin name) untouched.
    if phi_minus == 1.0 && phi_plus == 0.0 && flux.is_normalized() {
        return Ok((flux.clone(), NormalizationRecord::identity()));
    }
    let mut c: Vec<f64> = compose_affine(&flux.coeffs(), phi_plus, scale)
        .into_iter()
        .map(|v| v / scale)
        .collect();
    let added = [-c[0], -speed];
    c[0] = 0.0;
    if c.len() < 2 {
        c.push(0.0);
    }
    c[1] -= speed;
    Ok((
        FluxSpec::polynomial(c),
        NormalizationRecord {
            scale,
            shift: phi_plus,
            linear_added: added,
            speed,
        },
    ))
}

/// Reduced flux `f(r) = g(φ₋) − c·r − g(φ₋ − r)` turning the KdV–Burgers profile
/// equation into an F-KPP wave-profile equation. Returns `f` and `f′(0) = g′(φ₋) − c`.
pub fn fkpp_reduction(g: &FluxSpec, c: f64, phi_minus: f64) -> (FluxSpec, f64) {
    let mut coeffs: Vec<f64> = compose_affine(&g.coeffs(), phi_minus, -1.0)
        .into_iter()
        .map(|v| -v)
        .collect();
    coeffs[0] += g.value(phi_minus);
    if coeffs.len() < 2 {
        coeffs.push(0.0);
    }
    coeffs[1] -= c;
    // f(0) vanishes identically; clear the rounding residue.
    coeffs[0] = 0.0;
    (FluxSpec::polynomial(coeffs), g.d1(phi_minus) - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_coeffs(f: &FluxSpec, expected: &[f64]) {
        let c = f.coeffs();
        assert_eq!(c.len(), expected.len(), "{c:?} vs {expected:?}");
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{c:?} vs {expected:?}");
        }
    }

    #[test]
    fn builtin_coefficients() {
        assert_coeffs(&FluxSpec::BurgersQuadratic, &[0.0, -1.0, 1.0]);
        let g = FluxSpec::KdvbCubic { b: 2.0 };
        for r in [-0.3, 0.2, 0.7, 1.4] {
            let direct = 2.0 * r * (r - 1.0) * (2.0 - r);
            assert!((g.value(r) - direct).abs() < 1e-14);
        }
        assert_eq!(g.d1(0.0), -4.0);
        assert_eq!(g.d1(1.0), 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = FluxSpec::polynomial(vec![0.3, -1.0, 0.5, 2.0, -0.25]);
        let h = 1e-4;
        for r in [-1.0, -0.2, 0.5, 1.3] {
            let d1 = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
            let d2 = (f.value(r + h) - 2.0 * f.value(r) + f.value(r - h)) / (h * h);
            assert!((d1 - f.d1(r)).abs() < 1e-7);
            assert!((d2 - f.d2(r)).abs() < 1e-5);
        }
    }

    #[test]
    fn normalized_burgers_is_unchanged() {
        let (f, rec) = normalize_problem(&FluxSpec::BurgersQuadratic, 1.0, 0.0).unwrap();
        assert_eq!(f, FluxSpec::BurgersQuadratic);
        assert!(rec.is_identity());
    }

    #[test]
    fn chord_is_removed() {
        let (f, rec) = normalize_problem(&FluxSpec::polynomial(vec![0.0, 0.0, 1.0]), 1.0, 0.0).unwrap();
        assert_eq!(rec.speed, 1.0);
        assert_coeffs(&f, &[0.0, -1.0, 1.0]);
    }

    #[test]
    fn rescaled_end_states() {
        // u²/2 with end states (2, 0): ũ-flux (2r)²/(2·2) = r², chord 1.
        let (f, rec) = normalize_problem(&FluxSpec::polynomial(vec![0.0, 0.0, 0.5]), 2.0, 0.0).unwrap();
        assert_eq!(rec.scale, 2.0);
        assert_eq!(rec.speed, 1.0);
        assert!(f.value(0.0).abs() < 1e-14 && f.value(1.0).abs() < 1e-14);
        assert_coeffs(&f, &[0.0, -1.0, 1.0]);
        assert_eq!(rec.to_original(1.0), 2.0);
        assert_eq!(rec.to_normalized(2.0), 1.0);
    }

    #[test]
    fn normalization_is_idempotent() {
        let g = FluxSpec::polynomial(vec![0.1, 0.4, -2.0, 0.7]);
        let (f1, _) = normalize_problem(&g, -0.5, 1.5).unwrap();
        let (f2, rec2) = normalize_problem(&f1, 1.0, 0.0).unwrap();
        assert_eq!(f1, f2);
        assert!(rec2.is_identity());
    }

    #[test]
    fn degenerate_end_states_rejected() {
        assert!(matches!(
            normalize_problem(&FluxSpec::BurgersQuadratic, 0.5, 0.5),
            Err(ProfileError::DegenerateEndStates { .. })
        ));
    }

    #[test]
    fn fkpp_reduction_of_square() {
        let (f, slope) = fkpp_reduction(&FluxSpec::polynomial(vec![0.0, 0.0, 1.0]), 1.0, 1.0);
        assert_coeffs(&f, &[0.0, 1.0, -1.0]);
        assert_eq!(slope, 1.0);
    }

    #[test]
    fn fkpp_reduction_properties() {
        for g in [
            FluxSpec::KdvbCubic { b: 2.0 },
            FluxSpec::KdvbCubic { b: 3.5 },
            FluxSpec::polynomial(vec![0.2, -1.0, 3.0, 0.1]),
        ] {
            for (c, pm) in [(0.0, 1.0), (0.4, 1.3)] {
                let (f, slope) = fkpp_reduction(&g, c, pm);
                assert_eq!(f.value(0.0), 0.0);
                assert!((f.d1(0.0) - slope).abs() < 1e-12);
                for r in [-0.5, 0.0, 0.3, 0.9, 1.2] {
                    let direct = g.value(pm) - c * r - g.value(pm - r);
                    assert!((f.value(r) - direct).abs() < 1e-12);
                    assert!((f.d2(r) + g.d2(pm - r)).abs() < 1e-12);
                }
            }
        }
    }
}
