//! Brute-force geometric checks: probe the tangent algebra hyperplane for
//! points of the open domain near the anchor, and measure the second-order
//! Taylor remainder along tangent directions.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{PointClassification, PointKind};
use crate::domain::{self, DefiningFunction, DomainError};
use crate::hyperplane::TangentFrame;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("tangent kernel is trivial; the hyperplane meets the domain only at its anchor")]
    EmptyKernel,
    #[error("classification and probe were computed at different anchors")]
    MismatchedAnchor,
    #[error("direction has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Oracle JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_samples_per_radius")]
    pub samples_per_radius: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_radii() -> Vec<f64> {
    vec![0.3, 0.1, 0.03, 0.01]
}

fn default_samples_per_radius() -> usize {
    64
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { radii: default_radii(), samples_per_radius: default_samples_per_radius(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    NoIntersection,
    InteriorWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub anchor: Vec<f64>,
    pub outcome: ProbeOutcome,
    /// First interior point found, scanning radii in the given order.
    pub witness: Option<Vec<f64>>,
    pub witness_value: Option<f64>,
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    /// Smallest `rho` seen on each radius; `None` when no direction was tried.
    pub min_value_per_radius: Vec<Option<f64>>,
    /// Whether an interior point was found on each radius.
    pub interior_per_radius: Vec<bool>,
}

impl ProbeResult {
    /// Outcome restricted to the smallest probed radius.
    pub fn smallest_radius_outcome(&self) -> ProbeOutcome {
        let idx = self
            .radii
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i);
        match idx {
            Some(i) if self.interior_per_radius[i] => ProbeOutcome::InteriorWitness,
            _ => ProbeOutcome::NoIntersection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    Disagree,
    Indeterminate,
}

fn interior_threshold(domain: &dyn DefiningFunction, w: &[f64]) -> Result<f64, DomainError> {
    let rho = domain::evaluate(domain, w)?;
    Ok(-1e-12 * (1.0 + rho.abs() + w.iter().map(|x| x * x).sum::<f64>()))
}

/// Evaluate `rho(w + r s)` for uniformly random unit `s` in the tangent
/// kernel (after the optional `extra` direction) at each radius. Within a
/// radius the scan stops at the first point below the interior threshold.
pub fn geometric_probe(
    domain: &dyn DefiningFunction,
    frame: &TangentFrame,
    cfg: &OracleConfig,
    extra: Option<&[f64]>,
) -> Result<ProbeResult, OracleError> {
    if frame.kernel_dim == 0 {
        return Err(OracleError::EmptyKernel);
    }
    let w = &frame.anchor;
    let dim = w.len();
    if let Some(e) = extra {
        if e.len() != dim {
            return Err(OracleError::DimensionMismatch { expected: dim, got: e.len() });
        }
    }
    let threshold = interior_threshold(domain, w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut witness = None;
    let mut witness_value = None;
    let mut min_values = Vec::with_capacity(cfg.radii.len());
    let mut interior = Vec::with_capacity(cfg.radii.len());

    for &r in &cfg.radii {
        // Directions are drawn for every radius so the stream does not
        // depend on where earlier radii stopped.
        let dirs: Vec<Vec<f64>> = (0..cfg.samples_per_radius).map(|_| random_kernel_direction(frame, &mut rng)).collect();
        let mut min_v = f64::INFINITY;
        let mut found = false;
        for s in extra.map(|e| e.to_vec()).into_iter().chain(dirs) {
            let z: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a + r * b).collect();
            let v = domain::evaluate(domain, &z)?;
            min_v = min_v.min(v);
            if v < threshold {
                found = true;
                if witness.is_none() {
                    witness = Some(z);
                    witness_value = Some(v);
                }
                break;
            }
        }
        min_values.push(min_v.is_finite().then_some(min_v));
        interior.push(found);
    }

    Ok(ProbeResult {
        anchor: w.clone(),
        outcome: if witness.is_some() { ProbeOutcome::InteriorWitness } else { ProbeOutcome::NoIntersection },
        witness,
        witness_value,
        radii: cfg.radii.clone(),
        samples_per_radius: cfg.samples_per_radius,
        min_value_per_radius: min_values,
        interior_per_radius: interior,
    })
}

fn random_kernel_direction(frame: &TangentFrame, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..frame.kernel_dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = linalg::norm(&v);
        if n > 1e-12 {
            let s = frame.to_ambient(&v);
            let sn = linalg::norm(&s);
            return s.into_iter().map(|x| x / sn).collect();
        }
    }
}

/// Outcome of [`taylor_residual`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorCheck {
    pub t: Vec<f64>,
    /// `rho(w + t s) - t^2/2 s^T H s`.
    pub residuals: Vec<f64>,
    /// `|residual| / t^2`.
    pub normalized: Vec<f64>,
    /// `|residual(t)| / t^2` falls at least twofold whenever `t` halves, or
    /// is already at round-off level.
    pub passes: bool,
}

/// Second-order Taylor remainder along a unit tangent direction.
pub fn taylor_residual(domain: &dyn DefiningFunction, w: &[f64], s: &[f64], t_list: &[f64]) -> Result<TaylorCheck, OracleError> {
    if s.len() != w.len() {
        return Err(OracleError::DimensionMismatch { expected: w.len(), got: s.len() });
    }
    let h = domain::hessian(domain, w)?;
    let sv = DVector::from_column_slice(s);
    let quad = sv.dot(&(&h * &sv));
    let rho_w = domain::evaluate(domain, w)?;
    let mut residuals = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if t == 0.0 {
            residuals.push(0.0);
            continue;
        }
        let z: Vec<f64> = w.iter().zip(s).map(|(a, b)| a + t * b).collect();
        residuals.push(domain::evaluate(domain, &z)? - rho_w - 0.5 * t * t * quad);
    }
    let normalized: Vec<f64> = residuals
        .iter()
        .zip(t_list)
        .map(|(r, &t)| if t == 0.0 { 0.0 } else { r.abs() / (t * t) })
        .collect();
    let floor = 1e-12 * (1.0 + quad.abs());
    let mut passes = true;
    for i in 0..t_list.len() {
        for j in 0..t_list.len() {
            let (ti, tj) = (t_list[i], t_list[j]);
            if ti != 0.0 && tj != 0.0 && (tj - 0.5 * ti).abs() <= 1e-12 * ti.abs() {
                let ok = normalized[j] <= floor || normalized[j] <= 0.5 * normalized[i] * (1.0 + 1e-9);
                passes &= ok;
            }
        }
    }
    Ok(TaylorCheck { t: t_list.to_vec(), residuals, normalized, passes })
}

/// Empirical bound on third directional derivatives along sampled kernel
/// directions (central differences), floored at 1.
pub fn third_derivative_bound(
    domain: &dyn DefiningFunction,
    frame: &TangentFrame,
    directions: usize,
    seed: u64,
) -> Result<f64, OracleError> {
    if frame.kernel_dim == 0 {
        return Ok(1.0);
    }
    let w = &frame.anchor;
    let h = 1e-2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bound = 1.0_f64;
    for _ in 0..directions {
        let s = random_kernel_direction(frame, &mut rng);
        let f = |t: f64| {
            let z: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a + t * b).collect();
            domain::evaluate(domain, &z)
        };
        let d3 = (f(2.0 * h)? - 2.0 * f(h)? + 2.0 * f(-h)? - f(-2.0 * h)?) / (2.0 * h * h * h);
        bound = bound.max(d3.abs());
    }
    Ok(bound)
}

/// Compare the checker's call with the probe at the same anchor.
pub fn cross_validate(classification: &PointClassification, probe: &ProbeResult) -> Result<Agreement, OracleError> {
    if classification.anchor != probe.anchor {
        return Err(OracleError::MismatchedAnchor);
    }
    Ok(match classification.kind {
        PointKind::Degenerate | PointKind::VacuousTangent => Agreement::Indeterminate,
        PointKind::StrictlyPositive if probe.smallest_radius_outcome() == ProbeOutcome::NoIntersection => Agreement::Agree,
        PointKind::NegativeDirection if probe.outcome == ProbeOutcome::InteriorWitness => Agreement::Agree,
        _ => Agreement::Disagree,
    })
}
