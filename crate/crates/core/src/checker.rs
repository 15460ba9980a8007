//! Classification of boundary points by the sign of the second differential
//! restricted to the tangent algebra hyperplane.
//!
//! Two routes are computed at every point: the real Hessian compressed onto
//! an orthonormal kernel basis (which drives the classification), and the
//! algebra-valued formal second derivatives evaluated on the bold components
//! of a tangent unit vector. The second must reproduce the first as a real
//! multiple of `e_0`; the discrepancy is reported as `cross_check_error`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraElement};
use crate::domain::{self, BoundaryPoint, DefiningFunction, SampleBox};
use crate::gamma::{self, BoldVector, GammaFrame, GammaSpec};
use crate::hyperplane::{self, TangentFrame};
use crate::linalg;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    StrictlyPositive,
    Degenerate,
    NegativeDirection,
    VacuousTangent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointClassification {
    pub anchor: Vec<f64>,
    pub kind: PointKind,
    pub kernel_dim: usize,
    pub min_eigenvalue: Option<f64>,
    /// Unit tangent direction of the smallest eigenvalue, present only for
    /// `NegativeDirection`.
    pub witness: Option<Vec<f64>>,
    /// Unit tangent vector the algebra route was evaluated on.
    pub probe_direction: Option<Vec<f64>>,
    pub algebra_form_value: AlgebraElement,
    pub real_form_value: f64,
    pub cross_check_error: f64,
    pub tol: f64,
    pub hessian_norm: f64,
    pub ptilde: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SufficientConditionHolds,
    NecessaryConditionViolated,
    Inconclusive,
}

/// Per-point tolerance and hyperplane options.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClassifyOptions {
    /// Absolute eigenvalue tolerance; `None` means `1e-8 (1 + |H|)`.
    pub tol: Option<f64>,
    pub ptilde: Option<usize>,
}

/// Checker JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckerConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub gamma: Option<GammaSpec>,
    #[serde(default)]
    pub ptilde: Option<usize>,
    #[serde(default, rename = "box")]
    pub sample_box: Option<SampleBox>,
}

fn default_samples() -> usize {
    32
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self { samples: default_samples(), seed: 0, tol: None, gamma: None, ptilde: None, sample_box: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub point: BoundaryPoint,
    #[serde(flatten)]
    pub outcome: PointOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum PointOutcome {
    Classified(PointClassification),
    Failed { error: String },
}

impl PointRecord {
    pub fn classification(&self) -> Option<&PointClassification> {
        match &self.outcome {
            PointOutcome::Classified(c) => Some(c),
            PointOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub points: Vec<PointRecord>,
    pub verdict: Verdict,
    /// The verdict only covers the sampled points.
    pub sample_only: bool,
    pub seed: u64,
    pub gamma: Vec<Vec<f64>>,
}

/// `B^T H B` for the orthonormal kernel basis `B`.
pub fn restricted_hessian(hess: &DMatrix<f64>, frame: &TangentFrame) -> DMatrix<f64> {
    let b = &frame.kernel_basis;
    let r = b.transpose() * hess * b;
    (&r + r.transpose()) * 0.5
}

pub fn default_tol(hess: &DMatrix<f64>) -> f64 {
    1e-8 * (1.0 + linalg::operator_norm(hess))
}

pub fn classify_point(
    algebra: &Algebra,
    gamma: &GammaFrame,
    domain: &dyn DefiningFunction,
    point: &BoundaryPoint,
    opts: ClassifyOptions,
) -> Result<PointClassification, Error> {
    let w = &point.w;
    let frame = hyperplane::tangent_frame(algebra, domain, w, opts.ptilde)?;
    let hess = domain::hessian(domain, w)?;
    let hessian_norm = linalg::operator_norm(&hess);
    let tol = opts.tol.unwrap_or_else(|| default_tol(&hess));

    let Some((min_eig, v)) = linalg::min_eigenpair(&restricted_hessian(&hess, &frame)) else {
        return Ok(PointClassification {
            anchor: w.clone(),
            kind: PointKind::VacuousTangent,
            kernel_dim: 0,
            min_eigenvalue: None,
            witness: None,
            probe_direction: None,
            algebra_form_value: algebra.zero(),
            real_form_value: 0.0,
            cross_check_error: 0.0,
            tol,
            hessian_norm,
            ptilde: frame.ptilde,
        });
    };

    let kind = if min_eig > tol {
        PointKind::StrictlyPositive
    } else if min_eig < -tol {
        PointKind::NegativeDirection
    } else {
        PointKind::Degenerate
    };
    let s = frame.to_ambient(v.as_slice());
    let (algebra_form_value, real_form_value, cross_check_error) = algebra_cross_check(algebra, gamma, &hess, &s)?;

    Ok(PointClassification {
        anchor: w.clone(),
        kind,
        kernel_dim: frame.kernel_dim,
        min_eigenvalue: Some(min_eig),
        witness: (kind == PointKind::NegativeDirection).then(|| s.clone()),
        probe_direction: Some(s),
        algebra_form_value,
        real_form_value,
        cross_check_error,
        tol,
        hessian_norm,
        ptilde: frame.ptilde,
    })
}

/// Evaluate the formal second differential on the bold components of `s` and
/// compare with `s^T H s`. Returns `(algebra value, real value, error)`.
pub fn algebra_cross_check(
    algebra: &Algebra,
    gamma: &GammaFrame,
    hess: &DMatrix<f64>,
    s: &[f64],
) -> Result<(AlgebraElement, f64, f64), Error> {
    let fh = gamma::formal_hessian(algebra, gamma, hess)?;
    let bold = BoldVector::from_real(algebra, gamma, s)?;
    let value = gamma::quadratic_form_value(algebra, &fh, &bold)?;
    let sv = nalgebra::DVector::from_column_slice(s);
    let real = sv.dot(&(hess * &sv));
    let err = (value.coeffs()[0] - real).abs() + value.max_abs_imaginary();
    Ok((value, real, err))
}

/// Sample the boundary and classify every point.
pub fn check_domain(algebra: &Algebra, domain: &dyn DefiningFunction, cfg: &CheckerConfig) -> Result<ConvexityReport, Error> {
    let gamma = gamma::resolve_gamma(cfg.gamma.as_ref(), algebra.dim())?;
    let points = domain::sample_boundary(domain, cfg.samples, cfg.seed, cfg.sample_box.unwrap_or_default())?;
    let opts = ClassifyOptions { tol: cfg.tol, ptilde: cfg.ptilde };
    let records = classify_all(algebra, &gamma, domain, points, opts);
    Ok(ConvexityReport {
        verdict: verdict(&records),
        points: records,
        sample_only: true,
        seed: cfg.seed,
        gamma: gamma.rows(),
    })
}

/// Classify the given points, keeping their order.
pub fn classify_all(
    algebra: &Algebra,
    gamma: &GammaFrame,
    domain: &dyn DefiningFunction,
    points: Vec<BoundaryPoint>,
    opts: ClassifyOptions,
) -> Vec<PointRecord> {
    let one = |point: BoundaryPoint| {
        let outcome = match classify_point(algebra, gamma, domain, &point, opts) {
            Ok(c) => PointOutcome::Classified(c),
            Err(e) => PointOutcome::Failed { error: e.to_string() },
        };
        PointRecord { point, outcome }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.into_iter().map(one).collect()
    }
}

pub fn verdict(records: &[PointRecord]) -> Verdict {
    let kinds: Vec<Option<PointKind>> = records.iter().map(|r| r.classification().map(|c| c.kind)).collect();
    if kinds.contains(&Some(PointKind::NegativeDirection)) {
        Verdict::NecessaryConditionViolated
    } else if !kinds.is_empty()
        && kinds
            .iter()
            .all(|k| matches!(k, Some(PointKind::StrictlyPositive | PointKind::VacuousTangent)))
    {
        Verdict::SufficientConditionHolds
    } else {
        Verdict::Inconclusive
    }
}
