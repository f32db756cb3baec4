//! Experiment configuration: strict TOML schema, defaults, validation and the
//! content hash that names each run directory.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use wavedecay_core::decay::{MKernel, TheoremConfig, TheoremKind};
use wavedecay_core::grid::{Exponent, Grid1D};
use wavedecay_core::kfunctional::DataFamily;
use wavedecay_core::nonlinear::PerturbationSpec;
use wavedecay_core::profiles::FluxSpec;
use wavedecay_core::semigroups::TransportForm;
use wavedecay_core::trajectory::SnapshotSchedule;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("missing top-level key `kind`; valid kinds: {}", kind_names().join(", "))]
    MissingKind,
    #[error("unknown experiment kind `{given}`{}", suggestion(.nearest))]
    UnknownKind { given: String, nearest: Option<&'static str> },
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn suggestion(nearest: &Option<&'static str>) -> String {
    nearest.map(|n| format!("; did you mean `{n}`?")).unwrap_or_default()
}

/// Static description of one experiment kind.
pub struct KindInfo {
    pub name: &'static str,
    pub validates: &'static str,
    pub keys: &'static str,
}

pub const KINDS: [KindInfo; 9] = [
    KindInfo {
        name: "profile",
        validates: "monotone traveling-wave profile (viscous or KdV-Burgers)",
        keys: "family; flux, alpha, end_states, half_width, n",
    },
    KindInfo {
        name: "evolve-burgers",
        validates: "nonlinear Burgers-type perturbation flow, conservation and steady states",
        keys: "perturbation; flux, half_width, n, dt, t_end, schedule, norm_p, norm_k",
    },
    KindInfo {
        name: "evolve-kdvb",
        validates: "nonlinear KdV-Burgers perturbation flow, conservation and steady states",
        keys: "perturbation; flux, alpha, half_width, n, dt, t_end, schedule, norm_p, norm_k",
    },
    KindInfo {
        name: "linear-semigroup",
        validates: "exponential decay in exponentially weighted norms; L2 contraction and decay certificate",
        keys: "family; flux, alpha, transport, data, half_width, n, dt, t_end, rho, certificate",
    },
    KindInfo {
        name: "kfunc",
        validates: "closed form of the K-functional against its infimum definition",
        keys: "data; p, s_values, random_functions, star_k, half_width, n",
    },
    KindInfo {
        name: "interp-verify",
        validates: "interpolation decay rate (1+t)^(l-k) for the half-line shift",
        keys: "k, l; p, data, t_min, t_max, count, bound, x_min, n",
    },
    KindInfo {
        name: "lemma-c1",
        validates: "convolution estimate: sup t^a I(t) finite, tail bounded below",
        keys: "alpha, beta; kernel, t_min, t_max, count, tolerance",
    },
    KindInfo {
        name: "thm31",
        validates: "algebraic decay (1+t)^(m-k) for generalized Burgers waves",
        keys: "none required; k, m, norms, flux, perturbation, half_width, n, dt, t_end, window, tolerance, snapshots",
    },
    KindInfo {
        name: "thm42",
        validates: "algebraic decay (1+t)^(m-k) in L2/L4 weights for KdV-Burgers waves",
        keys: "none required; alpha, k, m, norms, flux, perturbation, half_width, n, dt, t_end, window, tolerance, snapshots",
    },
];

pub fn kind_names() -> Vec<&'static str> {
    KINDS.iter().map(|k| k.name).collect()
}

fn nearest_kind(given: &str) -> Option<&'static str> {
    KINDS
        .iter()
        .map(|k| (k.name, strsim::normalized_levenshtein(given, k.name)))
        .filter(|(_, s)| *s >= 0.4)
        .fold(None, |best: Option<(&'static str, f64)>, (n, s)| match best {
            Some((_, b)) if b >= s => best,
            _ => Some((n, s)),
        })
        .map(|(n, _)| n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKindFamily {
    Burgers,
    Kdvb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    pub family: ProfileKindFamily,
    #[serde(default)]
    pub flux: Option<FluxSpec>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "unit_end_states")]
    pub end_states: [f64; 2],
    #[serde(default = "d_profile_half_width")]
    pub half_width: f64,
    #[serde(default = "d_profile_n")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub flux: Option<FluxSpec>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "d_evolve_half_width")]
    pub half_width: f64,
    #[serde(default = "d_evolve_n")]
    pub n: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub schedule: SnapshotSchedule,
    /// Norm in which `ε(u₀) = ‖Ψ‖_{p,k}` is reported.
    #[serde(default = "d_norm_p")]
    pub norm_p: Exponent,
    #[serde(default = "d_k")]
    pub norm_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearFamily {
    Parabolic,
    Kdvb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearParams {
    pub family: LinearFamily,
    /// Flux whose profile supplies `c = f′(φ)`.
    #[serde(default)]
    pub flux: Option<FluxSpec>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub transport: TransportForm,
    /// Constant reaction coefficient `d`.
    #[serde(default)]
    pub d: f64,
    #[serde(default = "d_gaussian")]
    pub data: DataFamily,
    #[serde(default = "d_linear_half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "d_linear_dt")]
    pub dt: f64,
    #[serde(default = "d_linear_t_end")]
    pub t_end: f64,
    #[serde(default = "d_linear_interval")]
    pub snapshot_interval: f64,
    /// Exponential weight of the measured norm.
    #[serde(default = "d_rho")]
    pub rho: f64,
    /// Search for a weighted-energy decay certificate (KdV-Burgers only).
    #[serde(default)]
    pub certificate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KfuncParams {
    #[serde(default = "d_gaussian")]
    pub data: DataFamily,
    #[serde(default = "d_kfunc_p")]
    pub p: Vec<Exponent>,
    #[serde(default = "d_s_values")]
    pub s_values: Vec<f64>,
    /// Additional random test functions drawn from `seed`.
    #[serde(default)]
    pub random_functions: usize,
    /// Exponent `k` of the interpolation norm `‖·‖_{p,k}^*`, if requested.
    #[serde(default)]
    pub star_k: Option<f64>,
    #[serde(default = "d_kfunc_half_width")]
    pub half_width: f64,
    #[serde(default = "d_kfunc_n")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpParams {
    pub k: f64,
    pub l: f64,
    #[serde(default = "d_inf")]
    pub p: Exponent,
    #[serde(default)]
    pub data: Option<DataFamily>,
    #[serde(default = "d_one")]
    pub t_min: f64,
    #[serde(default = "d_interp_t_max")]
    pub t_max: f64,
    #[serde(default = "d_count")]
    pub count: usize,
    #[serde(default = "d_one")]
    pub bound: f64,
    #[serde(default = "d_interp_x_min")]
    pub x_min: f64,
    #[serde(default = "d_interp_n")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "d_kernel")]
    pub kernel: MKernel,
    #[serde(default = "d_one")]
    pub t_min: f64,
    #[serde(default = "d_lemma_t_max")]
    pub t_max: f64,
    #[serde(default = "d_lemma_count")]
    pub count: usize,
    #[serde(default = "d_lemma_tol")]
    pub tolerance: f64,
}

/// Overrides on top of the theorem defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremParams {
    pub flux: Option<FluxSpec>,
    pub alpha: Option<f64>,
    pub k: Option<f64>,
    pub m: Option<Vec<f64>>,
    pub norms: Option<Vec<Exponent>>,
    pub perturbation: Option<PerturbationSpec>,
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub tolerance: Option<f64>,
    pub snapshots: Option<usize>,
}

impl TheoremParams {
    pub fn resolve(&self, kind: TheoremKind) -> TheoremConfig {
        let mut c = TheoremConfig::defaults(kind);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        take!(flux, alpha, k, m, norms, half_width, n, dt, t_end, window, tolerance, snapshots);
        c.perturbation = match &self.perturbation {
            Some(p) => p.clone(),
            None => match c.perturbation {
                PerturbationSpec::PolyTail { delta, scale, .. } => {
                    PerturbationSpec::PolyTail { k: c.k, delta, scale, p: kind.hypothesis_norm() }
                }
                other => other,
            },
        };
        if self.window.is_none() {
            c.window[1] = c.t_end;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Profile(ProfileParams),
    EvolveBurgers(EvolveParams),
    EvolveKdvb(EvolveParams),
    LinearSemigroup(LinearParams),
    Kfunc(KfuncParams),
    InterpVerify(InterpParams),
    LemmaC1(LemmaParams),
    Thm31(TheoremConfig),
    Thm42(TheoremConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Profile(_) => "profile",
            Experiment::EvolveBurgers(_) => "evolve-burgers",
            Experiment::EvolveKdvb(_) => "evolve-kdvb",
            Experiment::LinearSemigroup(_) => "linear-semigroup",
            Experiment::Kfunc(_) => "kfunc",
            Experiment::InterpVerify(_) => "interp-verify",
            Experiment::LemmaC1(_) => "lemma-c1",
            Experiment::Thm31(_) => "thm31",
            Experiment::Thm42(_) => "thm42",
        }
    }
}

/// A parsed and validated configuration file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Root for the run directory; not part of the hash.
    #[serde(skip)]
    pub output_root: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let kind = match table.remove("kind") {
            Some(toml::Value::String(s)) => s,
            Some(other) => {
                return Err(ConfigError::Schema { path: "kind".into(), message: format!("expected a string, found {}", other.type_str()) })
            }
            None => return Err(ConfigError::MissingKind),
        };
        let seed = match table.remove("seed") {
            None => 0,
            Some(toml::Value::Integer(i)) if i >= 0 => i as u64,
            Some(other) => return Err(ConfigError::Schema { path: "seed".into(), message: format!("expected a nonnegative integer, found {other}") }),
        };
        let output_root = match table.remove("output_dir") {
            None => None,
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => {
                return Err(ConfigError::Schema { path: "output_dir".into(), message: format!("expected a string, found {}", other.type_str()) })
            }
        };
        let experiment = match kind.as_str() {
            "profile" => Experiment::Profile(params(table)?),
            "evolve-burgers" => Experiment::EvolveBurgers(params(table)?),
            "evolve-kdvb" => Experiment::EvolveKdvb(params(table)?),
            "linear-semigroup" => Experiment::LinearSemigroup(params(table)?),
            "kfunc" => Experiment::Kfunc(params(table)?),
            "interp-verify" => Experiment::InterpVerify(params(table)?),
            "lemma-c1" => Experiment::LemmaC1(params(table)?),
            "thm31" => Experiment::Thm31(params::<TheoremParams>(table)?.resolve(TheoremKind::Thm31)),
            "thm42" => Experiment::Thm42(params::<TheoremParams>(table)?.resolve(TheoremKind::Thm42)),
            _ => return Err(ConfigError::UnknownKind { nearest: nearest_kind(&kind), given: kind }),
        };
        let config = Self { experiment, seed, output_root };
        config.validate()?;
        Ok(config)
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("json");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Run directory name: kind plus the first 16 hex digits of the hash.
    pub fn dir_name(&self) -> String {
        format!("{}-{}", self.experiment.kind(), &self.hash()[..16])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.experiment {
            Experiment::Profile(p) => {
                grid_ok("half_width/n", p.half_width, p.n)?;
                if p.end_states[0] == p.end_states[1] || p.end_states.iter().any(|v| !v.is_finite()) {
                    return invalid("end_states", format!("need two distinct finite states, got {:?}", p.end_states));
                }
                let flux = p.flux.clone().unwrap_or(default_flux(p.family == ProfileKindFamily::Kdvb));
                flux_ok(&flux)?;
                if p.family == ProfileKindFamily::Kdvb {
                    positive("alpha", p.alpha.unwrap_or(3.0))?;
                }
            }
            Experiment::EvolveBurgers(e) | Experiment::EvolveKdvb(e) => {
                grid_ok("half_width/n", e.half_width, e.n)?;
                positive("t_end", e.t_end)?;
                if let Some(dt) = e.dt {
                    positive("dt", dt)?;
                }
                let kdv = matches!(self.experiment, Experiment::EvolveKdvb(_));
                let flux = e.flux.clone().unwrap_or(default_flux(kdv));
                normalized_flux_ok(&flux)?;
                if kdv {
                    kdvb_alpha_ok(&flux, e.alpha.unwrap_or(3.0))?;
                } else if e.alpha.is_some() {
                    return invalid("alpha", "only used by evolve-kdvb".into());
                }
                e.perturbation.validate().map_err(|err| ConfigError::Invalid { key: "perturbation", message: err.to_string() })?;
                if e.norm_k <= 1.0 {
                    return invalid("norm_k", format!("k > 1 is required, got {}", e.norm_k));
                }
            }
            Experiment::LinearSemigroup(l) => {
                grid_ok("half_width/n", l.half_width, l.n.unwrap_or(4096))?;
                positive("dt", l.dt)?;
                positive("t_end", l.t_end)?;
                positive("snapshot_interval", l.snapshot_interval)?;
                positive("rho", l.rho)?;
                let kdv = l.family == LinearFamily::Kdvb;
                let flux = l.flux.clone().unwrap_or(default_flux(kdv));
                normalized_flux_ok(&flux)?;
                if kdv {
                    let alpha = l.alpha.unwrap_or(3.0);
                    kdvb_alpha_ok(&flux, alpha)?;
                    if l.rho >= alpha / 3.0 {
                        return invalid("rho", format!("weights need ρ < α/3 = {}", alpha / 3.0));
                    }
                } else if l.certificate {
                    return invalid("certificate", "certificates exist only for the kdvb family".into());
                }
            }
            Experiment::Kfunc(k) => {
                grid_ok("half_width/n", k.half_width, k.n)?;
                if k.p.is_empty() || k.s_values.is_empty() {
                    return invalid("p/s_values", "must be nonempty".into());
                }
                if k.s_values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return invalid("s_values", "every s must be positive".into());
                }
                if let Some(sk) = k.star_k {
                    if !(sk > 0.0) {
                        return invalid("star_k", format!("must be positive, got {sk}"));
                    }
                }
            }
            Experiment::InterpVerify(i) => {
                if !(0.0 < i.l && i.l < i.k) {
                    return invalid("l", format!("need 0 < l < k, got l = {}, k = {}", i.l, i.k));
                }
                if !(i.t_min > 0.0 && i.t_min < i.t_max) || i.count < 2 {
                    return invalid("t_min/t_max/count", "need 0 < t_min < t_max and count ≥ 2".into());
                }
                if !(i.x_min < 0.0) || i.n < 16 {
                    return invalid("x_min/n", "need x_min < 0 and n ≥ 16".into());
                }
                positive("bound", i.bound)?;
            }
            Experiment::LemmaC1(l) => {
                if !(l.alpha > 0.0 && l.alpha < l.beta && l.beta > 1.0) {
                    return invalid("alpha/beta", format!("need 0 < α < β and β > 1, got α = {}, β = {}", l.alpha, l.beta));
                }
                if !(l.t_min > 0.0 && l.t_min < l.t_max) || l.count < 2 {
                    return invalid("t_min/t_max/count", "need 0 < t_min < t_max and count ≥ 2".into());
                }
                positive("tolerance", l.tolerance)?;
                if !(0.0..1.0).contains(&l.kernel.gamma()) {
                    return invalid("kernel", "singular exponent must lie in [0, 1)".into());
                }
            }
            Experiment::Thm31(c) | Experiment::Thm42(c) => {
                c.validate().map_err(|e| ConfigError::Invalid { key: "theorem", message: e.to_string() })?;
                normalized_flux_ok(&c.flux)?;
                if c.kind == TheoremKind::Thm42 {
                    kdvb_alpha_ok(&c.flux, c.alpha)?;
                }
            }
        }
        Ok(())
    }
}

fn params<T: DeserializeOwned>(table: toml::Table) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Schema { path: if path == "." { "(top level)".into() } else { path }, message: e.into_inner().to_string() }
    })
}

fn invalid(key: &'static str, message: String) -> Result<(), ConfigError> {
    Err(ConfigError::Invalid { key, message })
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(key, format!("must be positive, got {v}"))
    }
}

fn grid_ok(key: &'static str, half_width: f64, n: usize) -> Result<(), ConfigError> {
    Grid1D::symmetric(half_width, n.max(2)).map_err(|e| ConfigError::Invalid { key, message: e.to_string() })?;
    if n < 16 {
        return invalid(key, format!("n must be at least 16, got {n}"));
    }
    Ok(())
}

fn flux_ok(flux: &FluxSpec) -> Result<(), ConfigError> {
    flux.validate().map_err(|e| ConfigError::Invalid { key: "flux", message: e.to_string() })
}

fn normalized_flux_ok(flux: &FluxSpec) -> Result<(), ConfigError> {
    flux_ok(flux)?;
    if !flux.is_normalized() {
        return invalid("flux", format!("must vanish at 0 and 1 (f(0) = {:e}, f(1) = {:e})", flux.value(0.0), flux.value(1.0)));
    }
    Ok(())
}

fn kdvb_alpha_ok(g: &FluxSpec, alpha: f64) -> Result<(), ConfigError> {
    positive("alpha", alpha)?;
    let slope = g.d1(1.0);
    if slope > 0.0 && alpha < 2.0 * slope.sqrt() {
        return invalid("alpha", format!("no monotone profile below the threshold 2√g′(1) = {}", 2.0 * slope.sqrt()));
    }
    Ok(())
}

pub fn default_flux(kdvb: bool) -> FluxSpec {
    if kdvb {
        FluxSpec::KdvbCubic { b: 2.0 }
    } else {
        FluxSpec::BurgersQuadratic
    }
}

fn unit_end_states() -> [f64; 2] {
    [1.0, 0.0]
}
fn d_profile_half_width() -> f64 {
    40.0
}
fn d_profile_n() -> usize {
    8001
}
fn d_evolve_half_width() -> f64 {
    100.0
}
fn d_evolve_n() -> usize {
    4096
}
fn d_t_end() -> f64 {
    80.0
}
fn d_norm_p() -> Exponent {
    Exponent::Inf
}
fn d_inf() -> Exponent {
    Exponent::Inf
}
fn d_k() -> f64 {
    3.0
}
fn d_gaussian() -> DataFamily {
    DataFamily::Gaussian { width: 1.0 }
}
fn d_linear_half_width() -> f64 {
    60.0
}
fn d_linear_dt() -> f64 {
    0.01
}
fn d_linear_t_end() -> f64 {
    40.0
}
fn d_linear_interval() -> f64 {
    0.5
}
fn d_rho() -> f64 {
    0.3
}
fn d_kfunc_p() -> Vec<Exponent> {
    vec![Exponent::One, Exponent::Two, Exponent::Four]
}
fn d_s_values() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0]
}
fn d_kfunc_half_width() -> f64 {
    60.0
}
fn d_kfunc_n() -> usize {
    2401
}
fn d_one() -> f64 {
    1.0
}
fn d_interp_t_max() -> f64 {
    1000.0
}
fn d_count() -> usize {
    61
}
fn d_interp_x_min() -> f64 {
    -4000.0
}
fn d_interp_n() -> usize {
    16001
}
fn d_kernel() -> MKernel {
    MKernel::N
}
fn d_lemma_t_max() -> f64 {
    1e4
}
fn d_lemma_count() -> usize {
    200
}
fn d_lemma_tol() -> f64 {
    1e-10
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_kind_suggests_nearest() {
        let err = ExperimentConfig::parse("kind = \"thm32\"").unwrap_err();
        assert!(err.to_string().contains("did you mean `thm31`"), "{err}");
        let err = ExperimentConfig::parse("kind = \"evolve-burger\"").unwrap_err();
        assert!(err.to_string().contains("`evolve-burgers`"));
        assert!(matches!(ExperimentConfig::parse("seed = 1"), Err(ConfigError::MissingKind)));
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let err = ExperimentConfig::parse("kind = \"lemma-c1\"\nalpha = 1.5\nbeta = 2.5\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = ExperimentConfig::parse(
            "kind = \"evolve-burgers\"\n[perturbation]\nfamily = \"gaussian\"\ndelta = 0.01\nwidht = 2.0\n",
        )
        .unwrap_err();
        assert!(matches!(&err, ConfigError::Schema { path, .. } if path.contains("perturbation")), "{err}");
    }

    #[test]
    fn hash_ignores_formatting_and_explicit_defaults() {
        let a = ExperimentConfig::parse("kind = \"lemma-c1\"\nalpha = 1.5\nbeta = 2.5\n").unwrap();
        let b = ExperimentConfig::parse("# comment\nbeta = 2.5\nalpha   = 1.5\nkind = \"lemma-c1\"\ncount = 200\n").unwrap();
        let c = ExperimentConfig::parse("kind = \"lemma-c1\"\nalpha = 1.5\nbeta = 2.6\n").unwrap();
        let d = ExperimentConfig::parse("kind = \"lemma-c1\"\nalpha = 1.5\nbeta = 2.5\noutput_dir = \"elsewhere\"\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash(), d.hash());
        assert!(a.dir_name().starts_with("lemma-c1-"));
    }

    #[test]
    fn theorem_overrides_follow_k() {
        let c = ExperimentConfig::parse("kind = \"thm31\"\nk = 2.5\nm = [1.0]\nt_end = 40.0\n").unwrap();
        let Experiment::Thm31(t) = c.experiment else { panic!() };
        assert_eq!(t.window, [5.0, 40.0]);
        assert!(matches!(t.perturbation, PerturbationSpec::PolyTail { k, p: Exponent::Inf, .. } if k == 2.5));
    }

    #[test]
    fn validation_catches_module_preconditions() {
        let bad = [
            "kind = \"lemma-c1\"\nalpha = 2.0\nbeta = 1.5\n",
            "kind = \"evolve-kdvb\"\nalpha = 1.0\n[perturbation]\nfamily = \"gaussian\"\ndelta = 0.01\n",
            "kind = \"thm31\"\nk = 1.0\n",
            "kind = \"interp-verify\"\nk = 3.0\nl = 3.5\n",
            "kind = \"linear-semigroup\"\nfamily = \"kdvb\"\nrho = 1.2\n",
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::parse(text), Err(ConfigError::Invalid { .. })), "{text}");
        }
    }
}
